use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{lift_gradient_sup, FieldConfig};
use crate::geometry::{calibrate_epsilon, BallSystem, Domain, RegionParams};
use crate::muckenhoupt::{Subdomain, WeightParams};
use crate::sampling::{QuadratureSpec, Scheme};

/// Samples used by `epsilon = "auto"`.
pub const CALIBRATION_SAMPLES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    Auto,
}

/// A number or the keyword `auto`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting {
    Value(f64),
    Keyword(Keyword),
}

impl Setting {
    pub const AUTO: Setting = Setting::Keyword(Keyword::Auto);

    pub fn value(self) -> Option<f64> {
        match self {
            Setting::Value(v) => Some(v),
            Setting::Keyword(_) => None,
        }
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Setting::AUTO);
        }
        s.parse().map(Setting::Value).map_err(|_| {
            Error::domain("setting", format!("{s:?} is neither a number nor \"auto\""))
        })
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Value(v) => write!(f, "{v}"),
            Setting::Keyword(_) => f.write_str("auto"),
        }
    }
}

/// Ball indices to scan: `8,64,512`, `8..512` (inclusive), `50..500:50` or
/// `8..512*2` (geometric).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LRange(pub Vec<usize>);

impl FromStr for LRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain("l-range", format!("cannot parse {s:?}"));
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let out = if let Some((a, rest)) = s.split_once("..") {
            let a = num(a)?;
            if let Some((b, step)) = rest.split_once(':') {
                let step = num(step)?;
                if step == 0 {
                    return Err(bad());
                }
                (a..=num(b)?).step_by(step).collect()
            } else if let Some((b, factor)) = rest.split_once('*') {
                let (b, f) = (num(b)?, num(factor)?);
                if f < 2 || a == 0 {
                    return Err(bad());
                }
                std::iter::successors(Some(a), |&l| Some(l * f))
                    .take_while(|&l| l <= b)
                    .collect()
            } else {
                (a..=num(rest)?).collect()
            }
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>>>()?
        };
        if out.is_empty() || out.contains(&0) {
            return Err(bad());
        }
        Ok(LRange(out))
    }
}

/// Comma-separated numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NumberList(pub Vec<f64>);

impl FromStr for NumberList {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(NumberList)
            .map_err(|_| {
                Error::domain(
                    "list",
                    format!("cannot parse {s:?} as comma-separated numbers"),
                )
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub rho: f64,
    /// Number of balls to build; also the truncation `L` used on loaded systems.
    pub count: usize,
    pub epsilon: Setting,
    pub lift_scale: Setting,
    pub p: f64,
    pub alpha: f64,
    pub scheme: Scheme,
    pub samples: usize,
    pub seed: u64,
    pub l_range: LRange,
    /// Center coordinates followed by the radius.
    pub subdomain: Option<NumberList>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 2,
            rho: 0.49,
            count: 1000,
            epsilon: Setting::AUTO,
            lift_scale: Setting::AUTO,
            p: 3.0,
            alpha: 2.0,
            scheme: Scheme::LowDiscrepancy,
            samples: 20_000,
            seed: 7,
            l_range: LRange(vec![8, 64, 512]),
            subdomain: None,
            out: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// Re-checks every constraint of the underlying modules.
    pub fn validate(&self) -> Result<()> {
        Domain::unit_ball(self.n)?;
        if !(self.rho > 0.0 && self.rho < 0.5) {
            return Err(Error::domain(
                "rho",
                format!("{} not in (0, 1/2)", self.rho),
            ));
        }
        if self.count == 0 {
            return Err(Error::domain("count", "need at least one ball"));
        }
        if let Some(eps) = self.epsilon.value() {
            RegionParams::new(eps)?;
        }
        if let Some(c) = self.lift_scale.value() {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::domain(
                    "lift-scale",
                    format!("{c} must be finite and non-negative"),
                ));
            }
        }
        WeightParams::new(self.p, self.alpha)?;
        self.quadrature().validate()?;
        if let Some(s) = &self.subdomain {
            self.subdomain_ball(s)?;
        }
        Ok(())
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec::new(self.scheme, self.samples, self.seed)
    }

    pub fn weight_params(&self) -> Result<WeightParams> {
        WeightParams::new(self.p, self.alpha)
    }

    fn subdomain_ball(&self, s: &NumberList) -> Result<Subdomain> {
        let (radius, center) =
            s.0.split_last()
                .ok_or_else(|| Error::domain("subdomain", "empty"))?;
        Subdomain::new(center.to_vec(), *radius)
    }

    pub fn subdomain(&self, dim: usize) -> Result<Option<Subdomain>> {
        let Some(s) = &self.subdomain else {
            return Ok(None);
        };
        if s.0.len() != dim + 1 {
            return Err(Error::domain(
                "subdomain",
                format!("expected {dim} center coordinates and a radius"),
            ));
        }
        self.subdomain_ball(s).map(Some)
    }

    pub fn region_params(&self, dim: usize) -> Result<RegionParams> {
        match self.epsilon.value() {
            Some(eps) => RegionParams::new(eps),
            None => calibrate_epsilon(
                &Domain::unit_ball(dim)?,
                &QuadratureSpec::new(self.scheme, CALIBRATION_SAMPLES, self.seed),
            ),
        }
    }

    /// Field over `min(count, len)` balls of `system`.
    pub fn field(&self, system: std::sync::Arc<BallSystem>) -> Result<FieldConfig> {
        let truncation = self.count.min(system.len());
        let dim = system.dim();
        let mut cfg = FieldConfig::new(system).with_truncation(truncation)?;
        if let Some(c) = self.lift_scale.value() {
            let sup = lift_gradient_sup(dim, 20_000);
            if c * sup > 1.0 {
                return Err(Error::domain(
                    "lift-scale",
                    format!("{c} gives sup |grad w| = {} > 1", c * sup),
                ));
            }
            cfg = cfg.with_lift_scale(c)?;
        }
        Ok(cfg)
    }
}

use serde::Serialize;

/// Derivative order to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Gradient,
    Hessian,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct JetFlags {
    /// Within the smoothness margin of some center `x^k`; the Hessian is not
    /// defined there.
    pub at_center: bool,
    /// Within the margin of some sphere `dB_k`; one-sided interior values.
    pub on_sphere: bool,
    /// Some Hessian term `k / r_k` exceeded the `f64` range.
    pub hessian_overflow: bool,
}

impl JetFlags {
    pub fn merge(&mut self, other: JetFlags) {
        self.at_center |= other.at_center;
        self.on_sphere |= other.on_sphere;
        self.hessian_overflow |= other.hessian_overflow;
    }

    pub fn smooth(&self) -> bool {
        !(self.at_center || self.on_sphere || self.hessian_overflow)
    }
}

/// Value, gradient `G[i][j] = d_j u_i` and Hessian `H[i][j][k] = d_j d_k u_i`
/// of a vector field at one point, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Jet {
    pub dim: usize,
    pub value: Vec<f64>,
    pub gradient: Vec<f64>,
    pub hessian: Option<Vec<f64>>,
    pub flags: JetFlags,
}

impl Jet {
    pub fn zeros(dim: usize, order: Order) -> Self {
        Self {
            dim,
            value: vec![0.0; dim],
            gradient: vec![0.0; dim * dim],
            hessian: (order == Order::Hessian).then(|| vec![0.0; dim * dim * dim]),
            flags: JetFlags::default(),
        }
    }

    #[inline]
    pub fn grad(&self, i: usize, j: usize) -> f64 {
        self.gradient[i * self.dim + j]
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize, k: usize) -> Option<f64> {
        self.hessian
            .as_ref()
            .map(|h| h[(i * self.dim + j) * self.dim + k])
    }

    pub fn add_assign(&mut self, other: &Jet) {
        debug_assert_eq!(self.dim, other.dim);
        self.value
            .iter_mut()
            .zip(&other.value)
            .for_each(|(a, b)| *a += b);
        self.gradient
            .iter_mut()
            .zip(&other.gradient)
            .for_each(|(a, b)| *a += b);
        if let (Some(h), Some(o)) = (self.hessian.as_mut(), other.hessian.as_ref()) {
            h.iter_mut().zip(o).for_each(|(a, b)| *a += b);
        }
        self.flags.merge(other.flags);
    }

    /// Trace of the gradient.
    pub fn divergence(&self) -> f64 {
        (0..self.dim).map(|i| self.grad(i, i)).sum()
    }

    /// Frobenius norm of the gradient.
    pub fn gradient_norm(&self) -> f64 {
        self.gradient.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius norm of the Hessian tensor.
    pub fn hessian_norm(&self) -> Option<f64> {
        self.hessian
            .as_ref()
            .map(|h| h.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    pub fn max_abs_gradient(&self) -> f64 {
        self.gradient.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sym_gradient(&self) -> SymGrad {
        sym_gradient(self)
    }
}

/// Symmetric part `D = (G + G^T)/2` of a gradient and its Frobenius norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymGrad {
    pub dim: usize,
    pub entries: Vec<f64>,
    pub norm: f64,
}

impl SymGrad {
    pub fn from_entries(dim: usize, entries: Vec<f64>) -> Self {
        let norm = entries.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self { dim, entries, norm }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }
}

pub fn sym_gradient(jet: &Jet) -> SymGrad {
    let n = jet.dim;
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = 0.5 * (jet.grad(i, j) + jet.grad(j, i));
        }
    }
    SymGrad::from_entries(n, d)
}

pub fn divergence(jet: &Jet) -> f64 {
    jet.divergence()
}

/// `F(D) = (1 + |D|)^((p-2)/2) D`.
pub fn f_transform(d: &SymGrad, p: f64) -> SymGrad {
    let s = (1.0 + d.norm).powf(0.5 * (p - 2.0));
    SymGrad::from_entries(d.dim, d.entries.iter().map(|v| v * s).collect())
}

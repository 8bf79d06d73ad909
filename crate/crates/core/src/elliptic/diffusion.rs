use std::fmt;
use std::sync::Arc;

use super::mesh::Point;
use crate::error::{Error, Result};

pub type CoefficientFn = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;

/// Symmetric, uniformly elliptic coefficient field a(x) with declared λ.
///
/// In 1D only the `[0][0]` entry is read.
#[derive(Clone)]
pub struct DiffusionField {
    eval: CoefficientFn,
    lambda: f64,
}

impl fmt::Debug for DiffusionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionField").field("lambda", &self.lambda).finish_non_exhaustive()
    }
}

/// Probe directions for the ellipticity check.
const PROBES: usize = 16;

impl DiffusionField {
    pub fn new(eval: CoefficientFn, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidCoefficients(format!(
                "ellipticity constant must lie in (0,1), got {lambda}"
            )));
        }
        Ok(DiffusionField { eval, lambda })
    }

    pub fn from_fn(f: impl Fn(Point) -> [[f64; 2]; 2] + Send + Sync + 'static, lambda: f64) -> Result<Self> {
        Self::new(Arc::new(f), lambda)
    }

    pub fn constant_scalar(a: f64, lambda: f64) -> Result<Self> {
        Self::from_fn(move |_| [[a, 0.0], [0.0, a]], lambda)
    }

    pub fn constant_matrix(a: [[f64; 2]; 2], lambda: f64) -> Result<Self> {
        Self::from_fn(move |_| a, lambda)
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn eval(&self, x: Point) -> [[f64; 2]; 2] {
        (self.eval)(x)
    }

    /// Evaluates a(x) and checks symmetry and λ-ellipticity there.
    pub fn checked(&self, x: Point, dimension: usize) -> Result<[[f64; 2]; 2]> {
        let a = self.eval(x);
        let bad = |what: String| Err(Error::InvalidCoefficients(format!("{what} at ({}, {})", x[0], x[1])));
        if dimension == 1 {
            if !a[0][0].is_finite() {
                return bad("non-finite coefficient".into());
            }
            if a[0][0] < self.lambda {
                return bad(format!("a = {} below ellipticity constant {}", a[0][0], self.lambda));
            }
            return Ok(a);
        }
        if a.iter().flatten().any(|v| !v.is_finite()) {
            return bad("non-finite coefficient".into());
        }
        let scale = a[0][1].abs().max(a[1][0].abs()).max(1.0);
        if (a[0][1] - a[1][0]).abs() > 1e-12 * scale {
            return bad(format!("asymmetric coefficient a12 = {} != a21 = {}", a[0][1], a[1][0]));
        }
        for k in 0..PROBES {
            let (s, c) = (std::f64::consts::PI * k as f64 / PROBES as f64).sin_cos();
            let q = a[0][0] * c * c + (a[0][1] + a[1][0]) * c * s + a[1][1] * s * s;
            if q < self.lambda {
                return bad(format!(
                    "ellipticity violated: xi^T a xi = {q} < lambda = {} for xi = ({c}, {s})",
                    self.lambda
                ));
            }
        }
        Ok(a)
    }
}

//! Fractional-calculus primitives: Riemann-Liouville kernels, the L1-type
//! weight table, the discrete Caputo operator and a Mittag-Leffler evaluator.
//!
//! Gamma values come from the Lanczos approximation in `statrs`
//! (about 15 significant digits on the positive axis, reflection below 1/2).

mod coefficients;
mod mittag_leffler;

pub use coefficients::{discrete_caputo, CoefficientTable};
pub use mittag_leffler::{mittag_leffler, mittag_leffler_detailed, MlBranch, MlValue};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Order of the Caputo derivative, strictly inside (0,1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
            Ok(FractionalOrder(alpha))
        } else {
            Err(Error::InvalidOrder(alpha))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Γ(2−α), the normalization shared by ψ and the scheme weights.
    pub fn gamma_two_minus(self) -> f64 {
        gamma(2.0 - self.0)
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = Error;
    fn try_from(alpha: f64) -> Result<Self> {
        FractionalOrder::new(alpha)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(a: FractionalOrder) -> f64 {
        a.0
    }
}

/// Uniform time grid t_m = mT/M, m = 0..=M.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    final_time: f64,
    steps: usize,
    step: f64,
}

impl TimeGrid {
    pub fn new(final_time: f64, steps: usize) -> Result<Self> {
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(Error::Domain(format!("final time must be positive, got {final_time}")));
        }
        if steps == 0 {
            return Err(Error::Domain("number of time steps must be at least 1".into()));
        }
        Ok(TimeGrid {
            final_time,
            steps,
            step: final_time / steps as f64,
        })
    }

    #[inline]
    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.step
    }

    /// t_m, returning `final_time` exactly at m = M.
    #[inline]
    pub fn time(&self, m: usize) -> f64 {
        if m == self.steps {
            self.final_time
        } else {
            self.final_time * m as f64 / self.steps as f64
        }
    }
}

/// 1/Γ(x), zero at the poles of Γ.
pub(crate) fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// Riemann-Liouville kernel g_β(t) = t^{β−1}/Γ(β).
pub fn rl_kernel(beta: f64, t: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("kernel order must be positive, got {beta}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("kernel argument must be positive, got {t}")));
    }
    Ok(kernel_unchecked(beta, t))
}

/// g_β(t) extended by zero for t ≤ 0; callers guarantee β > 0.
#[inline]
pub(crate) fn kernel_unchecked(beta: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if beta == 1.0 {
        1.0
    } else {
        t.powf(beta - 1.0) / gamma(beta)
    }
}

/// (r+1)^β − r^β for r ≥ 0 without cancellation.
#[inline]
pub(crate) fn power_increment(beta: f64, r: f64) -> f64 {
    if r == 0.0 {
        1.0
    } else {
        r.powf(beta) * (beta * (1.0 / r).ln_1p()).exp_m1()
    }
}

/// ψ(r) = g_{2−α}(r) − g_{2−α}(r−1) for real r ≥ 1.
pub fn psi(alpha: FractionalOrder, r: f64) -> Result<f64> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::Domain(format!("psi requires r >= 1, got {r}")));
    }
    Ok(power_increment(1.0 - alpha.value(), r - 1.0) / alpha.gamma_two_minus())
}

/// Exact Caputo derivative of t^p: Γ(p+1)/Γ(p+1−α)·t^{p−α}.
pub fn caputo_reference(alpha: FractionalOrder, t: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("power must be at least 1, got {p}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    let a = alpha.value();
    Ok(gamma(p + 1.0) / gamma(p + 1.0 - a) * t.powf(p - a))
}

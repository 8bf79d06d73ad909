//! Real-argument Mittag-Leffler function E_α(z) = Σ z^n / Γ(αn+1), 0 < α ≤ 1.
//!
//! Three evaluators are combined, each used only where its own error
//! estimate certifies the target accuracy:
//!
//! * Taylor series with compensated summation. Always used for z ≥ 0; for
//!   z < 0 it is accepted while the cancellation ratio Σ|term| / |sum| keeps the
//!   estimated relative error below the target.
//! * The algebraic expansion E_α(−x) ~ Σ_{k≥1} (−1)^{k+1} x^{−k} / Γ(1−αk) for
//!   large x, truncated at its smallest term, which also serves as the error
//!   estimate.
//! * The spectral representation
//!   E_α(−x) = sin(απ)/(απ) ∫_0^∞ exp(−(xu)^{1/α}) / (u² + 2u cos απ + 1) du,
//!   integrated by the trapezoidal rule after u = e^s. The integrand is analytic
//!   in a strip of half-width min(π(1−α), απ/2), so the rule converges
//!   geometrically and the step is chosen from that width.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use super::coefficients::Neumaier;
use super::recip_gamma;
use crate::error::{Error, Result};

const TARGET_RELATIVE: f64 = 1e-11;
/// Relative accuracy assumed for each series term (gamma plus power).
const TERM_RELATIVE: f64 = 4e-16;
const MAX_SERIES_TERMS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MlBranch {
    Exponential,
    Series,
    Asymptotic,
    Integral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MlValue {
    pub value: f64,
    pub branch: MlBranch,
    /// Estimated absolute error of `value`.
    pub error_estimate: f64,
}

pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    mittag_leffler_detailed(alpha, z).map(|v| v.value)
}

pub fn mittag_leffler_detailed(alpha: f64, z: f64) -> Result<MlValue> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("Mittag-Leffler order must lie in (0,1], got {alpha}")));
    }
    if !z.is_finite() {
        return Err(Error::Domain(format!("Mittag-Leffler argument must be finite, got {z}")));
    }
    if z == 0.0 {
        return Ok(MlValue {
            value: 1.0,
            branch: MlBranch::Series,
            error_estimate: 0.0,
        });
    }
    if alpha == 1.0 {
        return Ok(MlValue {
            value: z.exp(),
            branch: MlBranch::Exponential,
            error_estimate: f64::EPSILON * z.exp(),
        });
    }
    if z > 0.0 {
        let s = series(alpha, z)?;
        if !s.value.is_finite() {
            return Err(Error::AccuracyNotAttained(format!(
                "E_{alpha}({z}) overflows double precision"
            )));
        }
        return Ok(s);
    }

    let x = -z;
    if x <= 4.0 {
        let s = series(alpha, z)?;
        if s.error_estimate <= TARGET_RELATIVE * s.value.abs() {
            return Ok(s);
        }
    }
    if x >= 2.0 {
        if let Some(a) = asymptotic(alpha, x) {
            if a.error_estimate <= TARGET_RELATIVE * a.value.abs() {
                return Ok(a);
            }
        }
    }
    let v = spectral_integral(alpha, x);
    if v.error_estimate <= TARGET_RELATIVE * v.value.abs() || v.error_estimate <= 1e-13 {
        Ok(v)
    } else {
        Err(Error::AccuracyNotAttained(format!(
            "E_{alpha}({z}): integral error estimate {:e}",
            v.error_estimate
        )))
    }
}

fn series_term(alpha: f64, z: f64, n: usize) -> f64 {
    let arg = alpha * n as f64 + 1.0;
    if arg < 170.0 {
        let p = z.powi(n as i32);
        if p.is_finite() && p.abs() > 1e-290 {
            return p / gamma(arg);
        }
    }
    let log_mag = n as f64 * z.abs().ln() - ln_gamma(arg);
    let mag = log_mag.exp();
    if z < 0.0 && n % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// Taylor series; the error estimate reflects cancellation and term accuracy.
fn series(alpha: f64, z: f64) -> Result<MlValue> {
    let peak = z.abs().powf(1.0 / alpha) / alpha;
    let mut acc = Neumaier::default();
    let mut abs_sum = 0.0;
    for n in 0..MAX_SERIES_TERMS {
        let term = series_term(alpha, z, n);
        acc.add(term);
        abs_sum += term.abs();
        if !abs_sum.is_finite() {
            return Ok(MlValue {
                value: f64::INFINITY,
                branch: MlBranch::Series,
                error_estimate: f64::INFINITY,
            });
        }
        let past_peak = (n as f64) > peak + 2.0;
        if past_peak && n > 3 && term.abs() <= 1e-18 * acc.total().abs().max(1e-300) {
            return Ok(MlValue {
                value: acc.total(),
                branch: MlBranch::Series,
                error_estimate: TERM_RELATIVE * abs_sum,
            });
        }
    }
    Err(Error::AccuracyNotAttained(format!(
        "series for E_{alpha}({z}) did not converge in {MAX_SERIES_TERMS} terms"
    )))
}

/// Algebraic expansion for E_α(−x), truncated before the smallest nonzero term.
fn asymptotic(alpha: f64, x: f64) -> Option<MlValue> {
    let mut acc = 0.0;
    let mut last_mag = f64::INFINITY;
    for k in 1..400 {
        let r = recip_gamma(1.0 - alpha * k as f64);
        let log_mag = -(k as f64) * x.ln();
        let term = r * log_mag.exp();
        let signed = if k % 2 == 1 { term } else { -term };
        if term == 0.0 {
            continue;
        }
        if term.abs() >= last_mag {
            // Divergence has set in; the previous term bounds the remainder.
            return Some(MlValue {
                value: acc,
                branch: MlBranch::Asymptotic,
                error_estimate: last_mag,
            });
        }
        if term.abs() <= 1e-17 * acc.abs() {
            return Some(MlValue {
                value: acc,
                branch: MlBranch::Asymptotic,
                error_estimate: term.abs(),
            });
        }
        acc += signed;
        last_mag = term.abs();
    }
    None
}

fn spectral_integral(alpha: f64, x: f64) -> MlValue {
    let (sin_a, cos_a) = (alpha * PI).sin_cos();
    let width = 0.75 * (PI * (1.0 - alpha)).min(0.5 * alpha * PI);
    // Discretization error of the trapezoidal rule ~ exp(−2π·width/step).
    let step = 2.0 * PI * width / 42.0;
    let ln_x = x.ln();
    // Left tail behaves like e^s, right tail like exp(−(x e^s)^{1/α}).
    let s_lo = -42.0 - ln_x.max(0.0) - (1.0 / (1.0 - alpha)).ln();
    let s_hi = alpha * 80f64.ln() - ln_x;
    let n = ((s_hi - s_lo) / step).ceil() as usize + 1;
    let integrand = |s: f64| {
        let u = s.exp();
        let decay = (-(x * u).powf(1.0 / alpha)).exp();
        u * decay / (u * u + 2.0 * u * cos_a + 1.0)
    };
    let mut acc = Neumaier::default();
    for j in 0..=n {
        acc.add(integrand(s_lo + j as f64 * step));
    }
    let value = sin_a / (alpha * PI) * step * acc.total();
    let tail = (s_lo.exp() + (-80.0f64).exp()) * sin_a / (alpha * PI);
    MlValue {
        value,
        branch: MlBranch::Integral,
        error_estimate: tail + value.abs() * 1e-14 * (n as f64).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::erf::erfc;

    #[test]
    fn zero_argument() {
        for a in [0.1, 0.5, 1.0] {
            assert_eq!(mittag_leffler(a, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn order_one_is_exp() {
        assert_relative_eq!(mittag_leffler(1.0, 1.0).unwrap(), std::f64::consts::E, epsilon = 1e-10);
        assert_relative_eq!(mittag_leffler(1.0, -3.0).unwrap(), (-3f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn half_order_matches_erfc_identity() {
        // E_{1/2}(z) = e^{z²} erfc(−z)
        for z in [-0.3f64, -1.0, -2.5, -6.0, -12.0, -20.0, 0.7, 2.0] {
            let expected = (z * z).exp() * erfc(-z);
            let got = mittag_leffler(0.5, z).unwrap();
            assert_relative_eq!(got, expected, max_relative = 1e-9);
        }
        assert_relative_eq!(mittag_leffler(0.5, -1.0).unwrap(), 0.4275836, epsilon = 1e-7);
    }

    #[test]
    fn branches_agree_where_they_overlap() {
        for alpha in [0.3, 0.5, 0.7, 0.85] {
            for x in [2.5, 3.0, 3.5] {
                let s = series(alpha, -x).unwrap();
                let i = spectral_integral(alpha, x);
                if s.error_estimate < 1e-12 {
                    assert_relative_eq!(s.value, i.value, max_relative = 1e-10);
                }
            }
            for x in [20.0, 60.0, 200.0] {
                let i = spectral_integral(alpha, x);
                if let Some(a) = asymptotic(alpha, x) {
                    if a.error_estimate < 1e-13 * a.value.abs() {
                        assert_relative_eq!(a.value, i.value, max_relative = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn large_negative_is_absolutely_accurate() {
        // E_α(−x) ≈ x^{-1}/Γ(1−α) for large x
        for alpha in [0.2, 0.5, 0.9] {
            let x = 1e4;
            let got = mittag_leffler(alpha, -x).unwrap();
            let lead = 1.0 / (x * gamma(1.0 - alpha));
            assert!((got - lead).abs() < 1e-7, "alpha={alpha}: {got} vs {lead}");
        }
    }

    #[test]
    fn completely_monotone_on_negative_axis() {
        for alpha in [0.25, 0.6, 0.95] {
            let mut prev = 1.0;
            for i in 1..200 {
                let v = mittag_leffler(alpha, -0.25 * i as f64).unwrap();
                assert!(v > 0.0 && v < prev, "alpha={alpha} i={i}: {v} !< {prev}");
                prev = v;
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(mittag_leffler(0.0, 1.0).is_err());
        assert!(mittag_leffler(1.5, 1.0).is_err());
        assert!(mittag_leffler(0.5, f64::NAN).is_err());
        assert!(matches!(mittag_leffler(0.1, 50.0), Err(Error::AccuracyNotAttained(_))));
    }
}

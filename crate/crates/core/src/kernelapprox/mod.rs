//! Piecewise-linear under-approximation g^h of the kernel g_{3−α}, the
//! convolution functionals G[u^h] and G^h[u^h], and their weak pairing.

pub(crate) mod quadrature;
mod test_pair;

pub use quadrature::{composite_points, gauss_points, pieces_per_step, GAUSS_POINTS};
pub use test_pair::{Bump, TestPair};

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::elliptic::SpatialField;
use crate::error::{Error, Result};
use crate::fracderiv::{kernel_unchecked, FractionalOrder, TimeGrid};
use crate::timestepper::SchemeHistory;

/// g^h_{3−α} on [0, (M+1)h]: zero on [0,h], then linear with slope g_{2−α}(mh)
/// on [mh,(m+1)h].
#[derive(Debug, Clone, Serialize)]
pub struct KernelApprox {
    alpha: FractionalOrder,
    grid: TimeGrid,
    /// g^h(mh) for m = 0..=M+1
    breakpoints: Vec<f64>,
    /// slope on (mh,(m+1)h) for m = 0..=M; slopes[0] = 0
    slopes: Vec<f64>,
}

impl KernelApprox {
    pub fn build(alpha: FractionalOrder, grid: TimeGrid) -> Self {
        let steps = grid.steps();
        let h = grid.step();
        let beta = 2.0 - alpha.value();
        let mut slopes = vec![0.0; steps + 1];
        for (m, s) in slopes.iter_mut().enumerate().skip(1) {
            *s = kernel_unchecked(beta, m as f64 * h);
        }
        let mut breakpoints = vec![0.0; steps + 2];
        for m in 1..=steps {
            breakpoints[m + 1] = breakpoints[m] + slopes[m] * h;
        }
        KernelApprox {
            alpha,
            grid,
            breakpoints,
            slopes,
        }
    }

    pub fn alpha(&self) -> FractionalOrder {
        self.alpha
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// g^h(t), zero for t ≤ h and clamped to the last piece past (M+1)h.
    pub fn value(&self, t: f64) -> f64 {
        let h = self.grid.step();
        if t <= h {
            return 0.0;
        }
        let m = ((t / h).floor() as usize).min(self.grid.steps());
        self.breakpoints[m] + self.slopes[m] * (t - m as f64 * h)
    }

    /// g_{3−α}(t) − g^h(t).
    pub fn gap(&self, t: f64) -> f64 {
        kernel_unchecked(3.0 - self.alpha.value(), t) - self.value(t)
    }

    /// (h^{2−α}/Γ(3−α))·(M^{2−α} − (2−α)Σ_{k<M} k^{1−α}).
    pub fn closed_form_gap(&self) -> f64 {
        let a = self.alpha.value();
        let steps = self.grid.steps();
        let sum: f64 = (1..steps).map(|k| (k as f64).powf(1.0 - a)).sum();
        self.grid.step().powf(2.0 - a) / gamma(3.0 - a) * ((steps as f64).powf(2.0 - a) - (2.0 - a) * sum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelGapReport {
    pub alpha: f64,
    pub steps: usize,
    pub step: f64,
    /// g_{3−α}(T) − g^h(T); the gap is nondecreasing so this is the sup.
    pub sup_gap: f64,
    pub attained_at: f64,
    pub closed_form: f64,
    /// max over a dense sample of (0,T], for cross-checking sup_gap
    pub sampled_sup: f64,
    pub sampled_at: f64,
    /// T^{2−α}/Γ(3−α)·(1 − (1 − 1/M)^{2−α})
    pub intermediate_bound: f64,
    /// T^{1−α}h/Γ(2−α)
    pub bound: f64,
    pub gap_over_step: f64,
}

/// Samples per step interval in the dense scan of `kernel_gap_sup`.
pub const GAP_SAMPLES_PER_STEP: usize = 8;

pub fn kernel_gap_sup(approx: &KernelApprox) -> KernelGapReport {
    let grid = &approx.grid;
    let a = approx.alpha.value();
    let steps = grid.steps();
    let t_final = grid.final_time();
    let h = grid.step();
    let sup_gap = approx.gap(t_final);
    let (mut sampled_sup, mut sampled_at) = (0.0f64, 0.0);
    for m in 0..steps {
        for s in 1..=GAP_SAMPLES_PER_STEP {
            let t = if m + 1 == steps && s == GAP_SAMPLES_PER_STEP {
                t_final
            } else {
                grid.time(m) + h * s as f64 / GAP_SAMPLES_PER_STEP as f64
            };
            let g = approx.gap(t);
            if g >= sampled_sup {
                sampled_sup = g;
                sampled_at = t;
            }
        }
    }
    let intermediate_bound = t_final.powf(2.0 - a) / gamma(3.0 - a) * (1.0 - (1.0 - 1.0 / steps as f64).powf(2.0 - a));
    KernelGapReport {
        alpha: a,
        steps,
        step: h,
        sup_gap,
        attained_at: t_final,
        closed_form: approx.closed_form_gap(),
        sampled_sup,
        sampled_at,
        intermediate_bound,
        bound: t_final.powf(1.0 - a) * h / gamma(2.0 - a),
        gap_over_step: sup_gap / h,
    }
}

/// Kernel K in Σ_k w_k(t)·(U_{k+1}−U_k)/h with w_m = K(t−mh),
/// w_k = K(t−kh) − K(t−(k+1)h).
#[derive(Debug, Clone, Copy)]
pub(crate) enum Kernel<'a> {
    /// g_β; β = 3−α gives G[u^h], β = 2−α gives d_t^α u^h.
    Power(f64),
    Approx(&'a KernelApprox),
    Gap(&'a KernelApprox),
}

impl Kernel<'_> {
    #[inline]
    fn value(&self, s: f64) -> f64 {
        match self {
            Kernel::Power(beta) => kernel_unchecked(*beta, s),
            Kernel::Approx(k) => k.value(s),
            Kernel::Gap(k) => {
                if s <= 0.0 {
                    0.0
                } else {
                    k.gap(s)
                }
            }
        }
    }
}

/// Interval index m with t ∈ [mh,(m+1)h], capped at M−1 so t = T is allowed.
pub(crate) fn interval_of(grid: &TimeGrid, t: f64) -> usize {
    let h = grid.step();
    let mut m = ((t / h).floor() as usize).min(grid.steps() - 1);
    if m > 0 && t < grid.time(m) {
        m -= 1;
    }
    m
}

/// Weights w_0..w_m at time t (length m+1, m the interval of t).
pub(crate) fn convolution_weights(kernel: Kernel<'_>, grid: &TimeGrid, t: f64) -> Vec<f64> {
    let m = interval_of(grid, t);
    let mut w = Vec::with_capacity(m + 1);
    let mut upper = kernel.value(t);
    for k in 0..m {
        let lower = kernel.value(t - grid.time(k + 1));
        w.push(upper - lower);
        upper = lower;
    }
    w.push(upper);
    w
}

fn check_time(grid: &TimeGrid, t: f64) -> Result<()> {
    if !(0.0..=grid.final_time()).contains(&t) {
        return Err(Error::TimeOutOfRange {
            t,
            final_time: grid.final_time(),
        });
    }
    Ok(())
}

/// Σ_k w_k (U_{k+1} − U_k)/h as a field.
pub(crate) fn combine_increments(history: &SchemeHistory, weights: &[f64]) -> SpatialField {
    let fields = history.fields();
    let inv_h = 1.0 / history.grid().step();
    let mut out = vec![0.0; history.mesh().dofs()];
    history.policy().for_each_chunk_mut(&mut out, |off, chunk| {
        let len = chunk.len();
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let a = &fields[k].values[off..off + len];
            let b = &fields[k + 1].values[off..off + len];
            let s = w * inv_h;
            for ((o, x), y) in chunk.iter_mut().zip(a).zip(b) {
                *o += s * (y - x);
            }
        }
    });
    SpatialField { values: out }
}

fn functional(history: &SchemeHistory, kernel: Kernel<'_>, t: f64) -> Result<SpatialField> {
    let grid = history.grid();
    check_time(grid, t)?;
    let w = convolution_weights(kernel, grid, t);
    Ok(combine_increments(history, &w))
}

/// G[u^h](t) = (g_{2−α} ∗ du^h/ds)(t), exact for the piecewise-linear u^h.
pub fn g_exact(history: &SchemeHistory, t: f64) -> Result<SpatialField> {
    functional(history, Kernel::Power(3.0 - history.problem().alpha().value()), t)
}

/// G^h[u^h](t): `g_exact` with g^h_{3−α} in place of g_{3−α}.
pub fn g_approx(history: &SchemeHistory, approx: &KernelApprox, t: f64) -> Result<SpatialField> {
    check_approx(history, approx)?;
    functional(history, Kernel::Approx(approx), t)
}

/// d_t^α u^h(t) = (g_{1−α} ∗ du^h/ds)(t), closed form.
pub fn caputo_of_interpolant(history: &SchemeHistory, t: f64) -> Result<SpatialField> {
    if t <= 0.0 {
        check_time(history.grid(), t)?;
        return Ok(SpatialField::zeros(history.mesh()));
    }
    functional(history, Kernel::Power(2.0 - history.problem().alpha().value()), t)
}

fn check_approx(history: &SchemeHistory, approx: &KernelApprox) -> Result<()> {
    let (g, a) = (history.grid(), approx.grid());
    if g.steps() != a.steps() || g.final_time() != a.final_time() {
        return Err(Error::Domain("kernel approximation built on a different time grid".into()));
    }
    if history.problem().alpha() != approx.alpha() {
        return Err(Error::Domain("kernel approximation built for a different order".into()));
    }
    Ok(())
}

/// c_k = ∫ ω(t)·w_k(t) dt over [lo,hi] with `pieces` Gauss sub-intervals per step.
///
/// On [mh,(m+1)h] the term K(t−mh) behaves like (t−mh)^{β−1}; on the first
/// sub-interval it is split off and integrated against ω by product
/// integration on the same nodes.
pub(crate) fn temporal_coefficients(
    kernel: Kernel<'_>,
    grid: &TimeGrid,
    (lo, hi): (f64, f64),
    pieces: usize,
    omega: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let steps = grid.steps();
    let h = grid.step();
    let singular = match kernel {
        Kernel::Power(beta) => Some(beta),
        Kernel::Gap(k) => Some(3.0 - k.alpha.value()),
        Kernel::Approx(_) => None,
    };
    let product = singular.map(|beta| {
        let scale = (h / pieces as f64).powf(beta) / gamma(beta);
        quadrature::power_weights(beta).map(|w| w * scale)
    });
    let mut c = vec![0.0; steps];
    let mut values = Vec::with_capacity(steps + 1);
    for m in 0..steps {
        let (a, b) = (grid.time(m), grid.time(m + 1));
        if b <= lo || a >= hi {
            continue;
        }
        let mut tail = 0.0;
        for (i, (piece, t, wq)) in composite_points(a, b, pieces).enumerate() {
            let om = omega(t);
            if om == 0.0 {
                continue;
            }
            let s = wq * om;
            values.clear();
            values.extend((0..=m).map(|j| kernel.value(t - grid.time(j))));
            if let (Some(pw), 0) = (&product, piece) {
                values[m] = 0.0;
                tail += pw[i] * om;
            }
            for k in 0..m {
                c[k] += s * (values[k] - values[k + 1]);
            }
            c[m] += s * values[m];
        }
        if product.is_some() {
            c[m] += tail;
            if m > 0 {
                c[m - 1] -= tail;
            }
        }
    }
    c
}

/// p_k = φᵀM(U_{k+1} − U_k)/h for k = 0..M−1.
pub(crate) fn increment_pairings(history: &SchemeHistory, phi: &SpatialField) -> Vec<f64> {
    let mass = history.discretization().mass.diagonal();
    let mphi: Vec<f64> = phi.values.iter().zip(&mass).map(|(p, m)| p * m).collect();
    let policy = history.policy();
    let inv_h = 1.0 / history.grid().step();
    let mut prev = policy.dot(&mphi, &history.field(0).values);
    (1..history.fields().len())
        .map(|k| {
            let cur = policy.dot(&mphi, &history.field(k).values);
            let d = (cur - prev) * inv_h;
            prev = cur;
            d
        })
        .collect()
}

/// ∫_0^T ∫_Ω (G[u^h] − G^h[u^h]) η φ dx dt by composite 4-point Gauss,
/// `pieces_per_step` sub-intervals per step.
pub fn weak_error_pairing(history: &SchemeHistory, approx: &KernelApprox, test: &TestPair) -> Result<f64> {
    check_approx(history, approx)?;
    test.check(history)?;
    let pieces = pieces_per_step(history.grid().step(), test.eta.radius);
    let c = temporal_coefficients(Kernel::Gap(approx), history.grid(), test.eta.support(), pieces, |t| {
        test.eta.value(t)
    });
    let p = increment_pairings(history, &test.phi);
    Ok(c.iter().zip(&p).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests;

use serde::Serialize;

use super::{power_increment, FractionalOrder, TimeGrid};
use crate::error::{Error, Result};

/// Scheme weights C_{m,k} and ψ values for a fixed (α, M).
///
/// Only the generating sequence b_j = (j+1)^{1−α} − j^{1−α} = Γ(2−α)ψ(j+1) is
/// stored: C_{m,0} = b_{m−1} and C_{m,k} = b_{m−k−1} − b_{m−k} for k ≥ 1, so the
/// whole triangle costs O(M) memory and every row is available in O(m).
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientTable {
    alpha: FractionalOrder,
    steps: usize,
    gamma_two_minus: f64,
    /// b_0..=b_M
    increments: Vec<f64>,
    /// psi[r−1] = ψ(r), r = 1..=M
    psi: Vec<f64>,
}

impl CoefficientTable {
    pub fn build(alpha: FractionalOrder, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Domain("coefficient table needs M >= 1".into()));
        }
        let beta = 1.0 - alpha.value();
        let increments: Vec<f64> = (0..=steps).map(|j| power_increment(beta, j as f64)).collect();
        let gamma_two_minus = alpha.gamma_two_minus();
        let psi = increments[..steps].iter().map(|b| b / gamma_two_minus).collect();
        Ok(CoefficientTable {
            alpha,
            steps,
            gamma_two_minus,
            increments,
            psi,
        })
    }

    #[inline]
    pub fn alpha(&self) -> FractionalOrder {
        self.alpha
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn gamma_two_minus(&self) -> f64 {
        self.gamma_two_minus
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Γ(2−α)ψ(r) = r^{1−α} − (r−1)^{1−α}, for 1 ≤ r ≤ M+1.
    #[inline]
    pub fn scaled_psi(&self, r: usize) -> f64 {
        self.increments[r - 1]
    }

    /// C_{m,k} for 1 ≤ m ≤ M, 0 ≤ k < m.
    #[inline]
    pub fn weight(&self, m: usize, k: usize) -> f64 {
        debug_assert!(m >= 1 && m <= self.steps && k < m);
        if k == 0 {
            self.increments[m - 1]
        } else {
            self.increments[m - k - 1] - self.increments[m - k]
        }
    }

    /// Row m of the triangle: [C_{m,0}, …, C_{m,m−1}].
    pub fn row(&self, m: usize) -> Vec<f64> {
        (0..m).map(|k| self.weight(m, k)).collect()
    }

    /// 1/(Γ(2−α)h^α), the coefficient of the discrete Caputo operator.
    pub fn scale(&self, step: f64) -> f64 {
        1.0 / (self.gamma_two_minus * step.powf(self.alpha.value()))
    }
}

/// Discrete Caputo derivative at t = mh from samples u(0), u(h), …, u(mh):
/// (u(mh) − Σ_k C_{m,k} u(kh)) / (Γ(2−α)h^α).
pub fn discrete_caputo(table: &CoefficientTable, grid: &TimeGrid, samples: &[f64], m: usize) -> Result<f64> {
    if table.steps() != grid.steps() {
        return Err(Error::LengthMismatch {
            expected: grid.steps(),
            got: table.steps(),
        });
    }
    if m == 0 || m > table.steps() {
        return Err(Error::Domain(format!("step index {m} outside 1..={}", table.steps())));
    }
    if samples.len() != m + 1 {
        return Err(Error::LengthMismatch {
            expected: m + 1,
            got: samples.len(),
        });
    }
    let mut acc = Neumaier::default();
    acc.add(samples[m]);
    for (k, u) in samples[..m].iter().enumerate() {
        acc.add(-table.weight(m, k) * u);
    }
    Ok(acc.total() * table.scale(grid.step()))
}

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

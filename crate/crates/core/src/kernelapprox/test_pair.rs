use serde::Serialize;

use crate::elliptic::{Point, SpatialField, SpatialMesh, SparseOperator};
use crate::error::{Error, Result};
use crate::timestepper::SchemeHistory;

/// η(t) = exp(1 − 1/(1 − s²)), s = (t − center)/radius, zero for |s| ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    pub center: f64,
    pub radius: f64,
}

impl Bump {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && center.is_finite()) {
            return Err(Error::Domain(format!("bad bump center {center} / radius {radius}")));
        }
        Ok(Bump { center, radius })
    }

    /// Bump filling [lo, hi].
    pub fn on(lo: f64, hi: f64) -> Result<Self> {
        Bump::new(0.5 * (lo + hi), 0.5 * (hi - lo))
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }

    pub fn value(&self, t: f64) -> f64 {
        let s = (t - self.center) / self.radius;
        if s.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let s = (t - self.center) / self.radius;
        if s.abs() >= 1.0 {
            0.0
        } else {
            let q = 1.0 - s * s;
            self.value(t) * (-2.0 * s / (q * q)) / self.radius
        }
    }

    /// Distance from the support to {0, T}.
    pub fn margin(&self, final_time: f64) -> f64 {
        let (lo, hi) = self.support();
        lo.min(final_time - hi)
    }
}

/// A spatial test function (nodal values) and a temporal bump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestPair {
    pub phi: SpatialField,
    pub eta: Bump,
}

impl TestPair {
    pub fn new(phi: SpatialField, eta: Bump) -> Self {
        TestPair { phi, eta }
    }

    /// Radial bump of the given radius around `center`, sampled at the nodes.
    pub fn smooth_phi(mesh: &SpatialMesh, center: Point, radius: f64) -> SpatialField {
        let dim = mesh.dimension();
        SpatialField::sample(mesh, |x| {
            let r2: f64 = (0..dim).map(|d| (x[d] - center[d]).powi(2)).sum::<f64>() / (radius * radius);
            if r2 >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - r2)).exp()
            }
        })
    }

    pub fn margin(&self, final_time: f64) -> f64 {
        self.eta.margin(final_time)
    }

    /// η must vanish on [0,h] ∪ [T−h,T] and φ must match the mesh.
    pub fn check(&self, history: &SchemeHistory) -> Result<()> {
        let grid = history.grid();
        let margin = self.margin(grid.final_time());
        if !(margin > grid.step()) {
            return Err(Error::MarginViolation {
                margin,
                step: grid.step(),
            });
        }
        if self.phi.len() != history.mesh().dofs() {
            return Err(Error::LengthMismatch {
                expected: history.mesh().dofs(),
                got: self.phi.len(),
            });
        }
        Ok(())
    }

    /// Σ_i M_ii |φ_i|.
    pub fn phi_l1(&self, mass: &SparseOperator) -> f64 {
        self.phi
            .values
            .iter()
            .zip(mass.diagonal())
            .map(|(p, m)| p.abs() * m)
            .sum()
    }

    /// (‖η‖_∞, ‖η'‖_∞) on 1024 equispaced samples of [0,T].
    pub fn eta_sup_norms(&self, final_time: f64) -> (f64, f64) {
        (0..=1024).fold((0.0f64, 0.0f64), |(a, b), i| {
            let t = final_time * i as f64 / 1024.0;
            (a.max(self.eta.value(t).abs()), b.max(self.eta.derivative(t).abs()))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivative_matches_difference() {
        let b = Bump::new(0.5, 0.3).unwrap();
        assert_eq!(b.value(0.5), 1.0);
        assert_eq!(b.value(0.2), 0.0);
        assert_eq!(b.value(0.81), 0.0);
        for t in [0.25, 0.4, 0.55, 0.77] {
            let d = 1e-6;
            let fd = (b.value(t + d) - b.value(t - d)) / (2.0 * d);
            assert!((fd - b.derivative(t)).abs() <= 1e-6 * (1.0 + fd.abs()));
        }
        assert!((b.margin(1.0) - 0.2).abs() < 1e-15);
        assert!(Bump::new(0.5, 0.0).is_err());
    }
}

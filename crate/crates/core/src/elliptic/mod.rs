//! Spatial discretization of −div(a∇·) with homogeneous Dirichlet data:
//! meshes, operators, the implicit step solve and discrete norms.

mod diffusion;
mod mesh;
mod operator;
mod solve;

pub use diffusion::{CoefficientFn, DiffusionField};
pub use mesh::{Axis, Point, SpatialField, SpatialMesh};
pub use operator::{assemble_mass, assemble_stiffness, load, SparseOperator};
pub use solve::{solve_step_system, SolveMethod, SolveStats, SOLVER_TOLERANCE};

pub(crate) use solve::{residual_norm, solve_prepared, step_matrix};

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;

/// Operators assembled once per problem.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: SpatialMesh,
    pub stiffness: SparseOperator,
    pub mass: SparseOperator,
    /// Stiffness with a ≡ identity, for the gradient seminorm.
    pub laplacian: SparseOperator,
}

impl Discretization {
    pub fn new(mesh: SpatialMesh, field: &DiffusionField) -> Result<Self> {
        let stiffness = assemble_stiffness(&mesh, field)?;
        let identity = DiffusionField::constant_scalar(1.0, 0.5)?;
        let laplacian = assemble_stiffness(&mesh, &identity)?;
        let mass = assemble_mass(&mesh);
        Ok(Discretization {
            mesh,
            stiffness,
            mass,
            laplacian,
        })
    }

    pub fn norms(&self, u: &SpatialField, policy: ExecPolicy) -> Result<(f64, f64)> {
        discrete_norms(u, &self.laplacian, &self.mass, policy)
    }
}

/// (‖u‖_{L²}, |u|_{H¹}) = (√(uᵀMu), √(uᵀAu)); pass the identity-coefficient
/// stiffness as `stiffness` for the gradient seminorm.
pub fn discrete_norms(
    u: &SpatialField,
    stiffness: &SparseOperator,
    mass: &SparseOperator,
    policy: ExecPolicy,
) -> Result<(f64, f64)> {
    if u.len() != stiffness.size() || u.len() != mass.size() {
        return Err(Error::LengthMismatch {
            expected: stiffness.size(),
            got: u.len(),
        });
    }
    let l2 = mass.bilinear(&u.values, &u.values, policy).max(0.0).sqrt();
    let h1 = stiffness.bilinear(&u.values, &u.values, policy).max(0.0).sqrt();
    Ok((l2, h1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit(n: usize) -> Discretization {
        let mesh = SpatialMesh::interval(0.0, 1.0, n).unwrap();
        Discretization::new(mesh, &DiffusionField::constant_scalar(1.0, 0.5).unwrap()).unwrap()
    }

    #[test]
    fn zero_field_norms() {
        let d = unit(8);
        assert_eq!(d.norms(&SpatialField::zeros(&d.mesh), ExecPolicy::Sequential).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn sine_norms() {
        let d = unit(255);
        let u = SpatialField::sample(&d.mesh, |x| (PI * x[0]).sin());
        let (l2, h1) = d.norms(&u, ExecPolicy::Sequential).unwrap();
        assert_relative_eq!(l2, 0.5f64.sqrt(), max_relative = 0.01);
        assert_relative_eq!(h1, PI * 0.5f64.sqrt(), max_relative = 0.01);
        let d = unit(127);
        let u = SpatialField::sample(&d.mesh, |x| (PI * x[0]).sin());
        assert_relative_eq!(d.norms(&u, ExecPolicy::Sequential).unwrap().0, 0.5f64.sqrt(), max_relative = 0.02);
    }

    #[test]
    fn norms_are_homogeneous() {
        let d = unit(40);
        let u = SpatialField::sample(&d.mesh, |x| x[0] * (1.0 - x[0]) * (5.0 * x[0]).cos());
        let (a, b) = d.norms(&u, ExecPolicy::Sequential).unwrap();
        let (a2, b2) = d.norms(&u.scaled(2.0), ExecPolicy::Sequential).unwrap();
        assert_eq!(a2, 2.0 * a);
        assert_eq!(b2, 2.0 * b);
    }

    #[test]
    fn poisson_with_constant_load_converges_quadratically() {
        // −u'' = 2 on (0,1): u = x(1−x)
        let mut errs = Vec::new();
        for n in [15, 31, 63] {
            let d = unit(n);
            let f = SpatialField::sample(&d.mesh, |_| 2.0);
            let rhs = load(&d.mass, &f, ExecPolicy::Sequential);
            // tiny shift keeps the solver entry point; its effect is O(1e-12)
            let (u, _) = solve_step_system(&d.stiffness, &d.mass, 1e-12, &rhs, ExecPolicy::Sequential).unwrap();
            let exact = SpatialField::sample(&d.mesh, |x| x[0] * (1.0 - x[0]));
            errs.push(u.sup_distance(&exact));
        }
        // P1 with lumped load is nodally exact for this problem; otherwise O(Δx²)
        for (e, n) in errs.iter().zip([15.0f64, 31.0, 63.0]) {
            assert!(*e <= 0.25 / ((n + 1.0) * (n + 1.0)) + 1e-10, "{e}");
        }
    }

    #[test]
    fn sine_modes_are_discrete_eigenvectors() {
        let d = unit(63);
        let dx = d.mesh.axis(0).spacing();
        for k in 1..=3 {
            let u = SpatialField::sample(&d.mesh, |x| (k as f64 * PI * x[0]).sin());
            let au = d.stiffness.apply(&u.values, ExecPolicy::Sequential);
            let lam = 4.0 / (dx * dx) * (k as f64 * PI * dx / 2.0).sin().powi(2);
            for i in 0..u.len() {
                let mu = d.mass.entry(i, i) * u.values[i];
                assert!((au[i] - lam * mu).abs() <= 1e-9 * lam.max(1.0));
            }
        }
    }
}

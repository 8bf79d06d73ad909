//! The implicit L1 march: initial interpolation, the step loop producing
//! U_0..U_M, and the piecewise-constant / piecewise-linear reconstructions.

mod reconstruction;

pub use reconstruction::{step_increment_sup, Reconstruction, ReconstructionMode};

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::elliptic::{
    residual_norm, solve_prepared, step_matrix, DiffusionField, Discretization, Point, SparseOperator, SpatialField,
    SpatialMesh, SOLVER_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::fracderiv::{CoefficientTable, FractionalOrder, TimeGrid};

/// Boundary values of u0 above this are rejected.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Stored steps must satisfy ‖(cM+A)U_m − rhs_m‖₂ ≤ this·(1 + ‖rhs_m‖₂).
pub const RESIDUAL_INVARIANT: f64 = 1e-9;

pub type SourceFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type InitialFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Right-hand side f(x,t).
#[derive(Clone)]
pub enum Source {
    Function(SourceFn),
    /// Time-independent nodal values, for sources only known discretely.
    Nodal(SpatialField),
}

impl Source {
    pub fn zero() -> Self {
        Source::Function(Arc::new(|_, _| 0.0))
    }

    pub fn from_fn(f: impl Fn(Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        Source::Function(Arc::new(f))
    }

    pub fn is_time_independent(&self) -> bool {
        matches!(self, Source::Nodal(_))
    }

    /// Nodal values at time t.
    pub fn sample(&self, mesh: &SpatialMesh, t: f64) -> Result<SpatialField> {
        let field = match self {
            Source::Function(f) => SpatialField::sample(mesh, |x| f(x, t)),
            Source::Nodal(v) => {
                if v.len() != mesh.dofs() {
                    return Err(Error::LengthMismatch {
                        expected: mesh.dofs(),
                        got: v.len(),
                    });
                }
                v.clone()
            }
        };
        if let Some(i) = field.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("source at node {:?}, t = {t}", mesh.node(i))));
        }
        Ok(field)
    }
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Function(_) => f.write_str("Source::Function(..)"),
            Source::Nodal(v) => write!(f, "Source::Nodal({} values)", v.len()),
        }
    }
}

/// A fully specified initial-boundary value problem.
#[derive(Clone)]
pub struct ProblemSpec {
    alpha: FractionalOrder,
    grid: TimeGrid,
    mesh: SpatialMesh,
    a: DiffusionField,
    f: Source,
    u0: InitialFn,
    policy: ExecPolicy,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("alpha", &self.alpha)
            .field("grid", &self.grid)
            .field("mesh", &self.mesh)
            .field("a", &self.a)
            .field("f", &self.f)
            .field("policy", &self.policy)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        alpha: FractionalOrder,
        grid: TimeGrid,
        mesh: SpatialMesh,
        a: DiffusionField,
        f: Source,
        u0: impl Fn(Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let u0: InitialFn = Arc::new(u0);
        for p in mesh.boundary_nodes() {
            let v = u0(p);
            if !(v.abs() <= BOUNDARY_TOLERANCE) {
                return Err(Error::BoundaryDatum { value: v, location: p });
            }
        }
        Ok(ProblemSpec {
            alpha,
            grid,
            mesh,
            a,
            f,
            u0,
            policy: ExecPolicy::default(),
        })
    }

    pub fn with_policy(mut self, policy: ExecPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn alpha(&self) -> FractionalOrder {
        self.alpha
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn mesh(&self) -> &SpatialMesh {
        &self.mesh
    }

    pub fn diffusion(&self) -> &DiffusionField {
        &self.a
    }

    pub fn source(&self) -> &Source {
        &self.f
    }

    pub fn initial(&self) -> &InitialFn {
        &self.u0
    }

    pub fn policy(&self) -> ExecPolicy {
        self.policy
    }
}

/// Nodal interpolation of u0; boundary values are not stored, so they are 0.
pub fn approximate_initial(u0: impl Fn(Point) -> f64, mesh: &SpatialMesh) -> Result<SpatialField> {
    for p in mesh.boundary_nodes() {
        let v = u0(p);
        if !(v.abs() <= BOUNDARY_TOLERANCE) {
            return Err(Error::BoundaryDatum { value: v, location: p });
        }
    }
    let field = SpatialField::sample(mesh, &u0);
    if field.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial datum".into()));
    }
    Ok(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    /// ‖(cM+A)U_m − rhs_m‖₂ as returned by the solver check.
    pub residual: f64,
    pub rhs_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct StepEvent {
    pub step: usize,
    pub residual: f64,
    pub elapsed: Duration,
}

/// Per-problem state shared by all steps.
#[derive(Debug)]
pub struct Stepper {
    problem: Arc<ProblemSpec>,
    table: Arc<CoefficientTable>,
    disc: Arc<Discretization>,
    system: SparseOperator,
    scale: f64,
}

impl Stepper {
    pub fn new(problem: ProblemSpec) -> Result<Self> {
        let table = CoefficientTable::build(problem.alpha, problem.grid.steps())?;
        let disc = Discretization::new(problem.mesh.clone(), &problem.a)?;
        let scale = table.scale(problem.grid.step());
        let system = step_matrix(&disc.stiffness, &disc.mass, scale)?;
        Ok(Stepper {
            problem: Arc::new(problem),
            table: Arc::new(table),
            disc: Arc::new(disc),
            system,
            scale,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    /// c = 1/(Γ(2−α)h^α).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Right-hand side M(c·Σ_k C_{m,k}U_k + f_m) from U_0..U_{m−1}.
    pub fn step_rhs(&self, fields: &[SpatialField], source: &SpatialField, m: usize) -> Result<SpatialField> {
        check_step(m, fields.len(), self.table.steps())?;
        let n = self.disc.mesh.dofs();
        let weights = self.table.row(m);
        let mut rhs = vec![0.0; n];
        let mass = self.disc.mass.diagonal();
        let c = self.scale;
        self.problem.policy.for_each_chunk_mut(&mut rhs, |off, out| {
            for (k, u) in fields[..m].iter().enumerate() {
                let w = weights[k];
                let u = &u.values[off..off + out.len()];
                for (o, v) in out.iter_mut().zip(u) {
                    *o += w * v;
                }
            }
            for (j, o) in out.iter_mut().enumerate() {
                let i = off + j;
                *o = mass[i] * (c * *o + source.values[i]);
            }
        });
        Ok(SpatialField { values: rhs })
    }

    /// Solves for U_m given U_0..U_{m−1}.
    pub fn advance(&self, fields: &[SpatialField], m: usize) -> Result<(SpatialField, StepRecord)> {
        let source = self.problem.f.sample(&self.disc.mesh, self.problem.grid.time(m))?;
        self.advance_with(fields, &source, m)
    }

    fn advance_with(&self, fields: &[SpatialField], source: &SpatialField, m: usize) -> Result<(SpatialField, StepRecord)> {
        let rhs = self.step_rhs(fields, source, m)?;
        let guess = fields[m - 1].values.as_slice();
        let (u, stats) = solve_prepared(&self.system, &rhs, Some(guess), self.problem.policy)?;
        let rhs_norm = self.problem.policy.dot(&rhs.values, &rhs.values).sqrt();
        Ok((
            u,
            StepRecord {
                residual: stats.relative_residual * rhs_norm,
                rhs_norm,
                iterations: stats.iterations,
            },
        ))
    }
}

fn check_step(m: usize, available: usize, steps: usize) -> Result<()> {
    if m == 0 || m > steps {
        return Err(Error::Domain(format!("step index {m} outside 1..={steps}")));
    }
    if available < m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: available,
        });
    }
    Ok(())
}

/// Runs the full march.
pub fn run(problem: ProblemSpec) -> Result<SchemeHistory> {
    run_with_progress(problem, |_| {})
}

pub fn run_with_progress(problem: ProblemSpec, mut progress: impl FnMut(StepEvent)) -> Result<SchemeHistory> {
    let start = Instant::now();
    let stepper = Stepper::new(problem)?;
    let problem = &stepper.problem;
    let steps = problem.grid.steps();
    let mesh = &stepper.disc.mesh;
    let mut fields = Vec::with_capacity(steps + 1);
    let mut sources = Vec::with_capacity(steps + 1);
    let mut records = Vec::with_capacity(steps);
    fields.push(approximate_initial(|x| (problem.u0)(x), mesh)?);
    sources.push(problem.f.sample(mesh, 0.0)?);
    for m in 1..=steps {
        let source = problem.f.sample(mesh, problem.grid.time(m))?;
        let (u, record) = stepper.advance_with(&fields, &source, m)?;
        progress(StepEvent {
            step: m,
            residual: record.residual,
            elapsed: start.elapsed(),
        });
        fields.push(u);
        sources.push(source);
        records.push(record);
    }
    Ok(SchemeHistory {
        problem: stepper.problem.clone(),
        table: stepper.table.clone(),
        disc: stepper.disc.clone(),
        scale: stepper.scale,
        fields,
        sources,
        records,
    })
}

/// Output of a run: U_0..U_M plus everything needed to re-check it.
#[derive(Debug, Clone)]
pub struct SchemeHistory {
    problem: Arc<ProblemSpec>,
    table: Arc<CoefficientTable>,
    disc: Arc<Discretization>,
    scale: f64,
    fields: Vec<SpatialField>,
    sources: Vec<SpatialField>,
    records: Vec<StepRecord>,
}

/// Post-hoc residual of one stored step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualCheck {
    pub step: usize,
    pub residual: f64,
    pub rhs_norm: f64,
    /// residual / (1 + rhs_norm)
    pub scaled: f64,
}

impl SchemeHistory {
    /// Builds a history from arbitrary fields, e.g. for certificate tests.
    /// `sources` defaults to f sampled on the grid.
    pub fn from_fields(problem: ProblemSpec, fields: Vec<SpatialField>) -> Result<Self> {
        let steps = problem.grid.steps();
        if fields.len() != steps + 1 {
            return Err(Error::LengthMismatch {
                expected: steps + 1,
                got: fields.len(),
            });
        }
        let stepper = Stepper::new(problem)?;
        let mesh = &stepper.disc.mesh;
        for u in &fields {
            if u.len() != mesh.dofs() {
                return Err(Error::LengthMismatch {
                    expected: mesh.dofs(),
                    got: u.len(),
                });
            }
        }
        let sources = (0..=steps)
            .map(|m| stepper.problem.f.sample(mesh, stepper.problem.grid.time(m)))
            .collect::<Result<Vec<_>>>()?;
        let records = vec![
            StepRecord {
                residual: f64::NAN,
                rhs_norm: f64::NAN,
                iterations: 0
            };
            steps
        ];
        Ok(SchemeHistory {
            problem: stepper.problem.clone(),
            table: stepper.table.clone(),
            disc: stepper.disc.clone(),
            scale: stepper.scale,
            fields,
            sources,
            records,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.problem.grid
    }

    pub fn mesh(&self) -> &SpatialMesh {
        &self.disc.mesh
    }

    pub fn policy(&self) -> ExecPolicy {
        self.problem.policy
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn fields(&self) -> &[SpatialField] {
        &self.fields
    }

    pub fn field(&self, m: usize) -> &SpatialField {
        &self.fields[m]
    }

    /// f_m = f(·, mh) as used by the march, m = 0..M.
    pub fn sources(&self) -> &[SpatialField] {
        &self.sources
    }

    /// Solver records for m = 1..M (index m−1).
    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn final_field(&self) -> &SpatialField {
        self.fields.last().expect("history is never empty")
    }

    /// Recomputes ‖(cM+A)U_m − M(c·Σ C_{m,k}U_k + f_m)‖₂ for every m ≥ 1.
    pub fn verify_residuals(&self) -> Result<Vec<ResidualCheck>> {
        let system = step_matrix(&self.disc.stiffness, &self.disc.mass, self.scale)?;
        let stepper = Stepper {
            problem: self.problem.clone(),
            table: self.table.clone(),
            disc: self.disc.clone(),
            system,
            scale: self.scale,
        };
        let policy = self.problem.policy;
        (1..self.fields.len())
            .map(|m| {
                let rhs = stepper.step_rhs(&self.fields, &self.sources[m], m)?;
                let residual = residual_norm(&stepper.system, &self.fields[m].values, &rhs.values, policy);
                let rhs_norm = policy.dot(&rhs.values, &rhs.values).sqrt();
                Ok(ResidualCheck {
                    step: m,
                    residual,
                    rhs_norm,
                    scaled: residual / (1.0 + rhs_norm),
                })
            })
            .collect()
    }

    /// Fault-injection hook: negates U_m in place.
    #[doc(hidden)]
    pub fn inject_sign_flip(&mut self, m: usize) {
        for v in &mut self.fields[m].values {
            *v = -*v;
        }
    }

    pub fn reconstruction(&self, mode: ReconstructionMode) -> Reconstruction<'_> {
        Reconstruction::new(self, mode)
    }
}

/// Relative solver target used by the march, re-exported for reports.
pub const STEP_SOLVER_TOLERANCE: f64 = SOLVER_TOLERANCE;

#[cfg(test)]
mod tests;

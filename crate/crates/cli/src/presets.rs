//! Built-in problems and assembly of a `ProblemSpec` from a run config.

use std::f64::consts::PI;

use serde::Serialize;
use subdiff::elliptic::{DiffusionField, Discretization, Point, SpatialField, SpatialMesh};
use subdiff::fracderiv::{mittag_leffler, FractionalOrder, TimeGrid};
use subdiff::timestepper::{ProblemSpec, Source};
use subdiff::ExecPolicy;

use crate::config::{Coefficient, Oracle, RunConfig, SourceSpec};
use crate::expr::{Env, Expr, Var};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Zero,
    Eigenmode,
    Manufactured,
    Aniso2d,
    Stationary,
}

pub struct PresetDefinition {
    pub domain: Vec<(f64, f64)>,
    pub a: Coefficient,
    pub f: SourceSpec,
    pub u0: Expr,
    pub steps: usize,
    pub nodes: usize,
    pub ladder: Vec<(usize, usize)>,
    pub oracle: Oracle,
}

fn e(text: &str) -> Expr {
    Expr::parse(text).expect("preset expression")
}

impl Preset {
    pub const NAMES: [&'static str; 5] = ["zero", "eigenmode", "manufactured", "aniso2d", "stationary"];

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "zero" => Preset::Zero,
            "eigenmode" => Preset::Eigenmode,
            "manufactured" => Preset::Manufactured,
            "aniso2d" => Preset::Aniso2d,
            "stationary" => Preset::Stationary,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }

    pub fn definition(self) -> PresetDefinition {
        let unit = vec![(0.0, 1.0)];
        match self {
            Preset::Zero => PresetDefinition {
                domain: unit,
                a: Coefficient::Scalar(Expr::constant(1.0)),
                f: SourceSpec::Expr(Expr::constant(0.0)),
                u0: Expr::constant(0.0),
                steps: 16,
                nodes: 15,
                ladder: vec![(8, 7), (16, 15)],
                oracle: Oracle::None,
            },
            Preset::Eigenmode => PresetDefinition {
                domain: unit,
                a: Coefficient::Scalar(Expr::constant(1.0)),
                f: SourceSpec::Expr(Expr::constant(0.0)),
                u0: e("sin(pi*x)"),
                steps: 256,
                nodes: 255,
                ladder: vec![(128, 511), (256, 511), (512, 511), (1024, 511)],
                oracle: Oracle::Eigenmode,
            },
            Preset::Manufactured => PresetDefinition {
                domain: unit,
                a: Coefficient::Scalar(Expr::constant(1.0)),
                f: SourceSpec::Expr(e("sin(pi*x)*(2*t^(2-alpha)/gamma(3-alpha) + pi^2*(1 + t^2))")),
                u0: e("sin(pi*x)"),
                steps: 256,
                nodes: 255,
                ladder: vec![(64, 2047), (128, 2047), (256, 2047), (512, 2047)],
                oracle: Oracle::Manufactured,
            },
            Preset::Aniso2d => PresetDefinition {
                domain: vec![(0.0, 2.0), (0.0, 1.0)],
                a: Coefficient::Matrix([Expr::constant(2.0), Expr::constant(0.5), Expr::constant(1.0)]),
                f: SourceSpec::Expr(e(
                    "2*t^(2-alpha)/gamma(3-alpha)*sin(pi*x/2)*sin(pi*y) \
                     + (1 + t^2)*(1.5*pi^2*sin(pi*x/2)*sin(pi*y) - 0.5*pi^2*cos(pi*x/2)*cos(pi*y))",
                )),
                u0: e("sin(pi*x/2)*sin(pi*y)"),
                steps: 128,
                nodes: 63,
                ladder: vec![(32, 15), (64, 31), (128, 63)],
                oracle: Oracle::None,
            },
            Preset::Stationary => PresetDefinition {
                domain: unit,
                a: Coefficient::Scalar(e("1 + x^2")),
                f: SourceSpec::Stationary,
                u0: e("sin(pi*x)"),
                steps: 64,
                nodes: 63,
                ladder: vec![(16, 63), (32, 63), (64, 63)],
                oracle: Oracle::None,
            },
        }
    }

    pub fn supports(self, oracle: Oracle) -> bool {
        match oracle {
            Oracle::None => true,
            Oracle::Eigenmode => self == Preset::Eigenmode,
            Oracle::Manufactured => matches!(self, Preset::Manufactured | Preset::Aniso2d),
        }
    }

    /// Exact solution u(x, t) for the given oracle, if this preset has one.
    pub fn exact(self, oracle: Oracle, alpha: f64) -> Option<ExactFn> {
        if !self.supports(oracle) {
            return None;
        }
        match (self, oracle) {
            (Preset::Eigenmode, Oracle::Eigenmode) => Some(Box::new(move |x: Point, t: f64| {
                mittag_leffler(alpha, -PI * PI * t.powf(alpha)).map(|e| e * (PI * x[0]).sin())
            })),
            (Preset::Manufactured, Oracle::Manufactured) => {
                Some(Box::new(|x: Point, t: f64| Ok((1.0 + t * t) * (PI * x[0]).sin())))
            }
            (Preset::Aniso2d, Oracle::Manufactured) => {
                Some(Box::new(|x: Point, t: f64| Ok((1.0 + t * t) * (PI * x[0] / 2.0).sin() * (PI * x[1]).sin())))
            }
            _ => None,
        }
    }
}

pub type ExactFn = Box<dyn Fn(Point, f64) -> subdiff::Result<f64> + Send + Sync>;

/// Points at which the coefficient is probed for ellipticity: nodes,
/// boundary nodes and cell centres of the computational mesh.
fn probe_points(mesh: &SpatialMesh) -> Vec<Point> {
    let axes = mesh.axes();
    let coords: Vec<Vec<f64>> = axes
        .iter()
        .map(|ax| {
            let n = ax.nodes + 1;
            (0..=2 * n).map(|k| ax.lo + (ax.hi - ax.lo) * k as f64 / (2 * n) as f64).collect()
        })
        .collect();
    match coords.as_slice() {
        [xs] => xs.iter().map(|&x| [x, 0.0]).collect(),
        [xs, ys] => ys.iter().flat_map(|&y| xs.iter().map(move |&x| [x, y])).collect(),
        _ => Vec::new(),
    }
}

fn min_eigenvalue(a: [[f64; 2]; 2], dims: usize) -> f64 {
    if dims == 1 {
        return a[0][0];
    }
    let mean = 0.5 * (a[0][0] + a[1][1]);
    let half = 0.5 * (a[0][0] - a[1][1]);
    mean - (half * half + a[0][1] * a[0][1]).sqrt()
}

fn coefficient_fn(a: &Coefficient, alpha: f64) -> impl Fn(Point) -> [[f64; 2]; 2] + Send + Sync + 'static {
    let a = match a {
        Coefficient::Scalar(e) => Coefficient::Scalar(e.bind_alpha(alpha)),
        Coefficient::Matrix(m) => Coefficient::Matrix(m.clone().map(|e| e.bind_alpha(alpha))),
    };
    move |x: Point| {
        let env = Env { x: x[0], y: x[1], t: 0.0, alpha };
        match &a {
            Coefficient::Scalar(e) => {
                let v = e.eval(&env);
                [[v, 0.0], [0.0, v]]
            }
            Coefficient::Matrix([a11, a12, a22]) => {
                let off = a12.eval(&env);
                [[a11.eval(&env), off], [off, a22.eval(&env)]]
            }
        }
    }
}

pub fn build_mesh(cfg: &RunConfig, nodes: &[usize]) -> Result<SpatialMesh, CliError> {
    let mesh = match cfg.domain.as_slice() {
        [x] => SpatialMesh::interval(x.0, x.1, nodes[0]),
        [x, y] => {
            let ny = nodes.get(1).copied().unwrap_or(nodes[0]);
            SpatialMesh::rectangle(*x, *y, nodes[0], ny)
        }
        _ => unreachable!("validated dimension"),
    };
    mesh.map_err(CliError::from)
}

/// Assembles the problem with the config's data at the given resolution.
pub fn build_problem(cfg: &RunConfig, steps: usize, nodes: &[usize]) -> Result<ProblemSpec, CliError> {
    let alpha = FractionalOrder::new(cfg.alpha)?;
    let grid = TimeGrid::new(cfg.final_time, steps)?;
    let mesh = build_mesh(cfg, nodes)?;
    let dims = mesh.dimension();
    let coeff = coefficient_fn(&cfg.a, cfg.alpha);
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => {
            let (mut low, mut at) = (f64::INFINITY, [0.0; 2]);
            for p in probe_points(&mesh) {
                let v = min_eigenvalue(coeff(p), dims);
                if !(v >= low) {
                    low = v;
                    at = p;
                }
            }
            if !(low > 0.0) {
                return Err(CliError::Validation {
                    key: "problem.a".into(),
                    message: format!("not uniformly elliptic: smallest eigenvalue {low} at ({}, {})", at[0], at[1]),
                });
            }
            (0.9 * low).min(0.9)
        }
    };
    let a = DiffusionField::from_fn(coeff, lambda)?;
    let u0 = cfg.u0.bind_alpha(alpha.value());
    let initial = move |x: Point| u0.eval(&Env { x: x[0], y: x[1], t: 0.0, alpha: alpha.value() });
    let source = match &cfg.f {
        SourceSpec::Expr(f) if !f.uses(Var::T) => {
            let f = f.bind_alpha(alpha.value());
            Source::Nodal(SpatialField::sample(&mesh, |x| {
                f.eval(&Env { x: x[0], y: x[1], t: 0.0, alpha: alpha.value() })
            }))
        }
        SourceSpec::Expr(f) => {
            let f = f.bind_alpha(alpha.value());
            Source::from_fn(move |x, t| f.eval(&Env { x: x[0], y: x[1], t, alpha: alpha.value() }))
        }
        SourceSpec::Stationary => {
            let d = Discretization::new(mesh.clone(), &a)?;
            let u = SpatialField::sample(&mesh, &initial);
            let au = d.stiffness.apply(&u.values, ExecPolicy::Sequential);
            let values = au.iter().zip(d.mass.diagonal()).map(|(v, m)| v / m).collect();
            Source::Nodal(SpatialField { values })
        }
    };
    Ok(ProblemSpec::new(alpha, grid, mesh, a, source, initial)?.with_policy(cfg.policy))
}

/// Exact u at every degree of freedom at time t.
pub fn exact_field(exact: &ExactFn, mesh: &SpatialMesh, t: f64) -> Result<SpatialField, CliError> {
    let values = mesh.nodes().into_iter().map(|p| exact(p, t)).collect::<subdiff::Result<Vec<f64>>>()?;
    Ok(SpatialField { values })
}

//! TOML run and study configuration.
//!
//! ```toml
//! seed = 7
//!
//! [problem]
//! preset = "eigenmode"      # or give a / f / u0 / x / y directly
//! alpha = 0.5
//! final_time = 1.0
//! steps = 256
//! nodes = 255               # per axis; [nx, ny] in 2D
//! policy = "parallel"
//!
//! [diagnostics]
//! weak_form = true
//!
//! [output]
//! dir = "out"
//! snapshots = 2
//!
//! [study]
//! ladder = [[64, 255], [128, 255]]
//! oracle = "eigenmode"
//! norms = ["max", "l2"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use subdiff::ExecPolicy;

use crate::expr::{Expr, Var};
use crate::presets::Preset;
use crate::CliError;

pub const MAX_STEPS: usize = 1 << 16;
pub const MAX_NODES: usize = 1 << 14;
pub const MAX_RANDOM_SEQUENCES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum ExprValue {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum RawCoefficient {
    Scalar(ExprValue),
    Matrix(RawMatrix),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    a11: ExprValue,
    a12: ExprValue,
    a22: ExprValue,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum RawNodes {
    Same(usize),
    PerAxis(Vec<usize>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    preset: Option<String>,
    alpha: Option<f64>,
    final_time: Option<f64>,
    steps: Option<usize>,
    x: Option<[f64; 2]>,
    y: Option<[f64; 2]>,
    nodes: Option<RawNodes>,
    a: Option<RawCoefficient>,
    lambda: Option<f64>,
    f: Option<ExprValue>,
    u0: Option<ExprValue>,
    policy: Option<ExecPolicy>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiagnostics {
    residuals: Option<bool>,
    energy: Option<bool>,
    kernel_gap: Option<bool>,
    weak_form: Option<bool>,
    error_terms: Option<bool>,
    random_sequences: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    snapshots: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStudy {
    ladder: Option<Vec<(usize, usize)>>,
    oracle: Option<Oracle>,
    norms: Option<Vec<Norm>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    #[serde(default)]
    problem: RawProblem,
    #[serde(default)]
    diagnostics: RawDiagnostics,
    #[serde(default)]
    output: RawOutput,
    study: Option<RawStudy>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Scalar(Expr),
    Matrix([Expr; 3]),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Expr(Expr),
    /// f = L_h u0 at the nodes, so that u0 is a discrete steady state
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DiagnosticsConfig {
    pub residuals: bool,
    pub energy: bool,
    pub kernel_gap: bool,
    pub weak_form: bool,
    pub error_terms: bool,
    pub random_sequences: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            residuals: true,
            energy: true,
            kernel_gap: true,
            weak_form: true,
            error_terms: true,
            random_sequences: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub alpha: f64,
    pub final_time: f64,
    pub steps: usize,
    pub domain: Vec<(f64, f64)>,
    pub nodes: Vec<usize>,
    pub a: Coefficient,
    pub lambda: Option<f64>,
    pub f: SourceSpec,
    pub u0: Expr,
    pub policy: ExecPolicy,
    pub diagnostics: DiagnosticsConfig,
    pub out_dir: Option<PathBuf>,
    pub snapshots: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Oracle {
    Eigenmode,
    Manufactured,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Max,
    L2,
    H1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub base: RunConfig,
    pub ladder: Vec<(usize, usize)>,
    pub oracle: Oracle,
    pub norms: Vec<Norm>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Run(RunConfig),
    Study(StudyConfig),
}

impl Config {
    pub fn run(&self) -> &RunConfig {
        match self {
            Config::Run(r) => r,
            Config::Study(s) => &s.base,
        }
    }

    pub fn run_mut(&mut self) -> &mut RunConfig {
        match self {
            Config::Run(r) => r,
            Config::Study(s) => &mut s.base,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Validation { key: key.to_string(), message: message.into() }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

pub fn read_config_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

/// Parses and validates configuration text. A `[study]` section makes it a
/// study configuration.
pub fn parse_config(text: &str) -> Result<Config, CliError> {
    load(Some(text), None, false)
}

/// Builds a config from optional text, an optional preset that overrides
/// the text's, and whether a study section is required (defaults are filled).
pub fn load(text: Option<&str>, preset: Option<&str>, study: bool) -> Result<Config, CliError> {
    let mut raw: RawConfig = match text {
        Some(text) => toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            CliError::Parse { line, column, message: e.message().trim().to_string() }
        })?,
        None => RawConfig::default(),
    };
    if study && raw.study.is_none() {
        raw.study = Some(RawStudy { ladder: None, oracle: None, norms: None });
    }
    build(raw, preset)
}

/// Preset defaults with no configuration text.
pub fn preset_config(name: &str, study: bool) -> Result<Config, CliError> {
    load(None, Some(name), study)
}

fn expr(key: &str, v: &ExprValue) -> Result<Expr, CliError> {
    match v {
        ExprValue::Number(x) if x.is_finite() => Ok(Expr::constant(*x)),
        ExprValue::Number(x) => Err(invalid(key, format!("must be finite, got {x}"))),
        ExprValue::Text(s) => Expr::parse(s).map_err(|e| invalid(key, e.to_string())),
    }
}

fn build(raw: RawConfig, preset_override: Option<&str>) -> Result<Config, CliError> {
    let p = raw.problem;
    let preset_name = preset_override.map(str::to_string).or(p.preset.clone());
    let preset = preset_name
        .as_deref()
        .map(|n| Preset::from_name(n).ok_or_else(|| invalid("problem.preset", format!("unknown preset '{n}'; expected one of {}", Preset::NAMES.join(", ")))))
        .transpose()?;

    let alpha = p.alpha.unwrap_or(0.5);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("problem.alpha", "alpha must lie strictly in (0,1)"));
    }
    let final_time = p.final_time.unwrap_or(1.0);
    if !(final_time > 0.0 && final_time.is_finite()) {
        return Err(invalid("problem.final_time", "final time must be positive and finite"));
    }

    let (domain, a, f, u0, default_steps, default_nodes) = match preset {
        Some(pr) => {
            for (key, set) in [
                ("problem.x", p.x.is_some()),
                ("problem.y", p.y.is_some()),
                ("problem.a", p.a.is_some()),
                ("problem.f", p.f.is_some()),
                ("problem.u0", p.u0.is_some()),
            ] {
                if set {
                    return Err(invalid(key, format!("cannot be combined with preset '{}'", pr.name())));
                }
            }
            let d = pr.definition();
            (d.domain, d.a, d.f, d.u0, d.steps, d.nodes)
        }
        None => {
            let mut domain = vec![(0.0, 1.0)];
            if let Some([lo, hi]) = p.x {
                domain[0] = (lo, hi);
            }
            if let Some([lo, hi]) = p.y {
                domain.push((lo, hi));
            }
            let a = match &p.a {
                None => Coefficient::Scalar(Expr::constant(1.0)),
                Some(RawCoefficient::Scalar(v)) => Coefficient::Scalar(expr("problem.a", v)?),
                Some(RawCoefficient::Matrix(m)) => Coefficient::Matrix([
                    expr("problem.a.a11", &m.a11)?,
                    expr("problem.a.a12", &m.a12)?,
                    expr("problem.a.a22", &m.a22)?,
                ]),
            };
            let f = SourceSpec::Expr(match &p.f {
                Some(v) => expr("problem.f", v)?,
                None => Expr::constant(0.0),
            });
            let u0 = match &p.u0 {
                Some(v) => expr("problem.u0", v)?,
                None => return Err(invalid("problem.u0", "required when no preset is given")),
            };
            (domain, a, f, u0, 64, 63)
        }
    };
    for (d, (lo, hi)) in domain.iter().enumerate() {
        let key = if d == 0 { "problem.x" } else { "problem.y" };
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(key, format!("bounds must be finite with lo < hi, got [{lo}, {hi}]")));
        }
    }
    let dims = domain.len();

    let steps = p.steps.unwrap_or(default_steps);
    if steps == 0 || steps > MAX_STEPS {
        return Err(invalid("problem.steps", format!("must lie in [1, {MAX_STEPS}], got {steps}")));
    }
    let nodes = match p.nodes {
        None => vec![default_nodes; dims],
        Some(RawNodes::Same(n)) => vec![n; dims],
        Some(RawNodes::PerAxis(v)) if v.len() == dims => v,
        Some(RawNodes::PerAxis(v)) => {
            return Err(invalid("problem.nodes", format!("expected {dims} entries, got {}", v.len())));
        }
    };
    if let Some(n) = nodes.iter().find(|&&n| n < 2 || n > MAX_NODES) {
        return Err(invalid("problem.nodes", format!("interior nodes per axis must lie in [2, {MAX_NODES}], got {n}")));
    }
    if let Some(l) = p.lambda {
        if !(l > 0.0 && l < 1.0) {
            return Err(invalid("problem.lambda", "ellipticity constant must lie strictly in (0,1)"));
        }
    }

    let mut exprs: Vec<(&str, &Expr)> = vec![("problem.u0", &u0)];
    match &a {
        Coefficient::Scalar(e) => exprs.push(("problem.a", e)),
        Coefficient::Matrix([a11, a12, a22]) => {
            exprs.extend([("problem.a.a11", a11), ("problem.a.a12", a12), ("problem.a.a22", a22)]);
        }
    }
    for (key, e) in &exprs {
        if e.uses(Var::T) {
            return Err(invalid(key, "must not depend on t"));
        }
    }
    if let SourceSpec::Expr(e) = &f {
        exprs.push(("problem.f", e));
    }
    if dims == 1 {
        if let Some((key, _)) = exprs.iter().find(|(_, e)| e.uses(Var::Y)) {
            return Err(invalid(key, "uses y on a one-dimensional domain"));
        }
        if matches!(a, Coefficient::Matrix(_)) {
            return Err(invalid("problem.a", "matrix coefficient needs a two-dimensional domain"));
        }
    }

    let d = raw.diagnostics;
    let defaults = DiagnosticsConfig::default();
    let diagnostics = DiagnosticsConfig {
        residuals: d.residuals.unwrap_or(defaults.residuals),
        energy: d.energy.unwrap_or(defaults.energy),
        kernel_gap: d.kernel_gap.unwrap_or(defaults.kernel_gap),
        weak_form: d.weak_form.unwrap_or(defaults.weak_form),
        error_terms: d.error_terms.unwrap_or(defaults.error_terms),
        random_sequences: d.random_sequences.unwrap_or(defaults.random_sequences),
    };
    if diagnostics.random_sequences > MAX_RANDOM_SEQUENCES {
        return Err(invalid("diagnostics.random_sequences", format!("must not exceed {MAX_RANDOM_SEQUENCES}")));
    }
    let snapshots = raw.output.snapshots.unwrap_or(2);
    if snapshots < 2 {
        return Err(invalid("output.snapshots", "at least 2 output times (initial and final) are required"));
    }

    let run = RunConfig {
        preset,
        alpha,
        final_time,
        steps,
        domain,
        nodes,
        a,
        lambda: p.lambda,
        f,
        u0,
        policy: p.policy.unwrap_or_default(),
        diagnostics,
        out_dir: raw.output.dir,
        snapshots,
        seed: raw.seed.unwrap_or(0),
    };

    let Some(s) = raw.study else {
        return Ok(Config::Run(run));
    };
    let ladder = match s.ladder {
        Some(l) => l,
        None => preset.map(|p| p.definition().ladder).unwrap_or_default(),
    };
    if ladder.is_empty() {
        return Err(invalid("study.ladder", "must list at least one (steps, nodes) rung"));
    }
    if ladder.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(invalid("study.ladder", "ladder must be strictly increasing in M"));
    }
    for &(m, n) in &ladder {
        if m == 0 || m > MAX_STEPS || n < 2 || n > MAX_NODES {
            return Err(invalid("study.ladder", format!("rung ({m}, {n}) out of range")));
        }
    }
    let oracle = match s.oracle {
        Some(o) => o,
        None => preset.map_or(Oracle::None, |p| p.definition().oracle),
    };
    if oracle != Oracle::None && !preset.is_some_and(|p| p.supports(oracle)) {
        return Err(invalid(
            "study.oracle",
            format!("oracle '{}' needs a preset with that exact solution", serde_json::to_value(oracle).unwrap().as_str().unwrap()),
        ));
    }
    let norms = s.norms.unwrap_or_else(|| vec![Norm::Max, Norm::L2]);
    if norms.is_empty() {
        return Err(invalid("study.norms", "must name at least one norm"));
    }
    Ok(Config::Study(StudyConfig { base: run, ladder, oracle, norms }))
}

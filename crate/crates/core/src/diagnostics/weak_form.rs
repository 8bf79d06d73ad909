use serde::Serialize;

use crate::elliptic::SpatialField;
use crate::error::Result;
use crate::fracderiv::kernel_unchecked;
use crate::kernelapprox::{
    combine_increments, composite_points, pieces_per_step, temporal_coefficients, Bump, Kernel, KernelApprox, TestPair, GAUSS_POINTS,
};
use crate::timestepper::{SchemeHistory, Source};

/// Five bumps supported inside (0.1T, 0.9T).
pub fn standard_bumps(final_time: f64) -> Vec<Bump> {
    [(0.1, 0.9), (0.1, 0.5), (0.3, 0.7), (0.5, 0.9), (0.2, 0.6)]
        .iter()
        .map(|&(a, b)| Bump::on(a * final_time, b * final_time).expect("valid bump"))
        .collect()
}

/// Hat-basis vectors for one temporal bump: entry i is the pairing with the
/// i-th nodal basis function.
struct EtaVectors {
    /// −∫η'·MG dt
    time_term: Vec<f64>,
    /// ∫η·A u^h dt
    elliptic_term: Vec<f64>,
    /// ∫η·M f dt
    source_term: Vec<f64>,
    /// −∫η'·M(G − G^h) dt
    i1: Vec<f64>,
    /// ∫η·A(u^h(t) − U_m) dt
    i2: Vec<f64>,
    /// −∫η·M(f(t) − f_m) dt
    i3: Vec<f64>,
    /// p_m = ∫ over step m of η
    step_mass: Vec<f64>,
}

fn eta_vectors(history: &SchemeHistory, approx: Option<&KernelApprox>, eta: &Bump) -> Result<EtaVectors> {
    let grid = *history.grid();
    let steps = grid.steps();
    let mesh = history.mesh();
    let n = mesh.dofs();
    let d = history.discretization();
    let policy = history.policy();
    let mass = d.mass.diagonal();
    let support = eta.support();
    let alpha = history.problem().alpha().value();

    // −∫η'G = −∫η'(G − G^h) + ∫η·(G^h)'; (G^h)' is the discrete Caputo value
    // on each step, so only the gap part needs quadrature.
    let own;
    let approx = match approx {
        Some(k) => k,
        None => {
            own = KernelApprox::build(history.problem().alpha(), grid);
            &own
        }
    };
    let h = grid.step();
    let pieces = pieces_per_step(h, eta.radius);
    let gap_coeff = temporal_coefficients(Kernel::Gap(approx), &grid, support, pieces, |t| -eta.derivative(t));
    let gap_field = combine_increments(history, &gap_coeff);
    let i1: Vec<f64> = gap_field.values.iter().zip(&mass).map(|(v, m)| v * m).collect();

    let mut linear = vec![0.0; steps + 1];
    let mut step_mass = vec![0.0; steps];
    let mut source_int = vec![0.0; n];
    let mut source_diff = vec![0.0; n];
    let source = history.problem().source();
    for m in 0..steps {
        let (a, b) = (grid.time(m), grid.time(m + 1));
        if b <= support.0 || a >= support.1 {
            continue;
        }
        let fm = &history.sources()[m].values;
        for (_, t, w) in composite_points(a, b, pieces) {
            let e = eta.value(t);
            if e == 0.0 {
                continue;
            }
            let we = w * e;
            let theta = (t - a) / h;
            linear[m] += we * (1.0 - theta);
            linear[m + 1] += we * theta;
            step_mass[m] += we;
            match source {
                Source::Nodal(f) => {
                    for (s, v) in source_int.iter_mut().zip(&f.values) {
                        *s += we * v;
                    }
                }
                Source::Function(_) => {
                    let ft = source.sample(mesh, t)?;
                    for i in 0..n {
                        source_int[i] += we * ft.values[i];
                        source_diff[i] -= we * (ft.values[i] - fm[i]);
                    }
                }
            }
        }
    }
    let combine = |weights: &[f64]| -> SpatialField {
        let mut out = vec![0.0; n];
        let fields = history.fields();
        policy.for_each_chunk_mut(&mut out, |off, chunk| {
            for (k, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let u = &fields[k].values[off..off + chunk.len()];
                for (o, v) in chunk.iter_mut().zip(u) {
                    *o += w * v;
                }
            }
        });
        SpatialField { values: out }
    };
    // q_k = Σ_{m>k} p_m (g_{2−α}((m−k)h) − g_{2−α}((m−k−1)h))
    let beta = 2.0 - alpha;
    let slope: Vec<f64> = (0..=steps)
        .map(|r| {
            if r == 0 {
                0.0
            } else {
                kernel_unchecked(beta, r as f64 * h) - kernel_unchecked(beta, (r - 1) as f64 * h)
            }
        })
        .collect();
    let q: Vec<f64> = (0..steps)
        .map(|k| (k + 1..steps).map(|m| step_mass[m] * slope[m - k]).sum())
        .collect();
    let exact_part = combine_increments(history, &q);
    let time_term: Vec<f64> = exact_part
        .values
        .iter()
        .zip(&mass)
        .zip(&i1)
        .map(|((v, m), g)| v * m + g)
        .collect();
    let elliptic_term = d.stiffness.apply(&combine(&linear).values, policy);
    let mut pc_minus = linear.clone();
    for (l, p) in pc_minus.iter_mut().zip(&step_mass) {
        *l -= p;
    }
    let i2 = d.stiffness.apply(&combine(&pc_minus).values, policy);
    let source_term = source_int.iter().zip(&mass).map(|(v, m)| v * m).collect();
    let i3 = source_diff.iter().zip(&mass).map(|(v, m)| v * m).collect();
    Ok(EtaVectors {
        time_term,
        elliptic_term,
        source_term,
        i1,
        i2,
        i3,
        step_mass,
    })
}

fn pair(phi: &SpatialField, v: &[f64]) -> f64 {
    phi.values.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn pair_abs(phi: &SpatialField, v: &[f64]) -> f64 {
    phi.values.iter().zip(v).map(|(a, b)| (a * b).abs()).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakFormEntry {
    pub eta: Bump,
    pub residual: f64,
    /// sum of the magnitudes of the three pairings that make up the residual
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HatFamilyEntry {
    pub eta: Bump,
    pub max_abs_residual: f64,
    pub worst_node: usize,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakFormResidualReport {
    pub basis: String,
    pub quadrature: String,
    pub tests: Vec<WeakFormEntry>,
    pub hat_family: Vec<HatFamilyEntry>,
}

fn distinct_bumps(tests: &[TestPair]) -> Vec<Bump> {
    let mut out: Vec<Bump> = Vec::new();
    for t in tests {
        if !out.contains(&t.eta) {
            out.push(t.eta);
        }
    }
    out
}

fn collect_vectors(
    history: &SchemeHistory,
    approx: Option<&KernelApprox>,
    tests: &[TestPair],
) -> Result<(Vec<Bump>, Vec<EtaVectors>)> {
    for t in tests {
        t.check(history)?;
    }
    let bumps = distinct_bumps(tests);
    let mut vectors = Vec::with_capacity(bumps.len());
    for b in &bumps {
        vectors.push(eta_vectors(history, approx, b)?);
    }
    Ok((bumps, vectors))
}

fn vectors_for<'a>(bumps: &[Bump], vectors: &'a [EtaVectors], eta: &Bump) -> &'a EtaVectors {
    &vectors[bumps.iter().position(|b| b == eta).expect("collected above")]
}

fn residual_report(bumps: &[Bump], vectors: &[EtaVectors], tests: &[TestPair]) -> WeakFormResidualReport {
    let entries = tests
        .iter()
        .map(|t| {
            let v = vectors_for(bumps, vectors, &t.eta);
            let r = pair(&t.phi, &v.time_term) + pair(&t.phi, &v.elliptic_term) - pair(&t.phi, &v.source_term);
            let scale = pair_abs(&t.phi, &v.time_term)
                + pair_abs(&t.phi, &v.elliptic_term)
                + pair_abs(&t.phi, &v.source_term);
            WeakFormEntry {
                eta: t.eta,
                residual: r,
                scale,
            }
        })
        .collect();
    let hat_family = bumps
        .iter()
        .zip(vectors)
        .map(|(b, v)| {
            let (mut worst, mut node, mut scale) = (0.0f64, 0usize, 0.0f64);
            for i in 0..v.time_term.len() {
                let r = v.time_term[i] + v.elliptic_term[i] - v.source_term[i];
                if r.abs() > worst {
                    worst = r.abs();
                    node = i;
                }
                scale = scale.max(v.time_term[i].abs() + v.elliptic_term[i].abs() + v.source_term[i].abs());
            }
            HatFamilyEntry {
                eta: *b,
                max_abs_residual: worst,
                worst_node: node,
                scale,
            }
        })
        .collect();
    WeakFormResidualReport {
        basis: "nodal hat functions x temporal bumps; smooth bumps for the listed tests".into(),
        quadrature: format!("composite Gauss-Legendre, {GAUSS_POINTS} points on ceil(128 h / radius) sub-intervals per step"),
        tests: entries,
        hat_family,
    }
}

/// R = −∫∫(g_{1−α}∗(u^h−U_0))η'φ + ∫∫a∇u^h·∇φ η − ∫∫fφη for every test pair,
/// plus the same residual against every nodal hat function for each bump.
pub fn weak_form_residual(history: &SchemeHistory, tests: &[TestPair]) -> Result<WeakFormResidualReport> {
    let (bumps, vectors) = collect_vectors(history, None, tests)?;
    Ok(residual_report(&bumps, &vectors, tests))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorTermEntry {
    pub eta: Bump,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub total: f64,
    /// the weak-form residual of the same test pair
    pub weak_residual: f64,
    /// Σ_m p_m‖φ‖₂‖ρ_m‖₂ from the stored step residuals ρ_m
    pub solver_bound: f64,
}

fn error_entries(history: &SchemeHistory, bumps: &[Bump], vectors: &[EtaVectors], tests: &[TestPair]) -> Vec<ErrorTermEntry> {
    let records = history.records();
    tests
        .iter()
        .map(|t| {
            let v = vectors_for(bumps, vectors, &t.eta);
            let i1 = pair(&t.phi, &v.i1);
            let i2 = pair(&t.phi, &v.i2);
            let i3 = pair(&t.phi, &v.i3);
            let weak = pair(&t.phi, &v.time_term) + pair(&t.phi, &v.elliptic_term) - pair(&t.phi, &v.source_term);
            let phi2 = t.phi.values.iter().map(|x| x * x).sum::<f64>().sqrt();
            let solver_bound = v
                .step_mass
                .iter()
                .enumerate()
                .skip(1)
                .map(|(m, p)| p.abs() * phi2 * records[m - 1].residual)
                .sum();
            ErrorTermEntry {
                eta: t.eta,
                i1,
                i2,
                i3,
                total: i1 + i2 + i3,
                weak_residual: weak,
                solver_bound,
            }
        })
        .collect()
}

/// I₁ + I₂ + I₃ of the error-term decomposition for each test pair.
pub fn error_term_pairing(
    history: &SchemeHistory,
    approx: &KernelApprox,
    tests: &[TestPair],
) -> Result<Vec<ErrorTermEntry>> {
    let (bumps, vectors) = collect_vectors(history, Some(approx), tests)?;
    Ok(error_entries(history, &bumps, &vectors, tests))
}

/// `weak_form_residual` and `error_term_pairing` sharing one pass of temporal quadrature.
pub fn weak_form_with_error_terms(
    history: &SchemeHistory,
    approx: &KernelApprox,
    tests: &[TestPair],
) -> Result<(WeakFormResidualReport, Vec<ErrorTermEntry>)> {
    let (bumps, vectors) = collect_vectors(history, Some(approx), tests)?;
    Ok((residual_report(&bumps, &vectors, tests), error_entries(history, &bumps, &vectors, tests)))
}

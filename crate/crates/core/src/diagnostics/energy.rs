use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::exec::ExecPolicy;
use crate::timestepper::SchemeHistory;

/// Relative tolerance for the algebraic inequalities.
pub const ALGEBRAIC_TOLERANCE: f64 = 1e-12;

/// Constant in ∫‖u^h‖²_{H¹} ≤ C·h·Σ_{m=1}^M ‖U_m‖²_{H¹} over [h,T].
pub const LINEAR_DOMINATION_CONSTANT: f64 = 14.0 / 3.0;

/// Absolute slack added to the data norm in the L²(H¹) bound.
pub const DATA_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub m: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// lhs − rhs
    pub slack: f64,
    pub tol: f64,
    pub pass: bool,
}

impl LedgerEntry {
    fn new(m: usize, lhs: f64, rhs: f64, scale: f64) -> Self {
        let tol = ALGEBRAIC_TOLERANCE * scale;
        let slack = lhs - rhs;
        LedgerEntry {
            m,
            lhs,
            rhs,
            slack,
            tol,
            pass: slack >= -tol,
        }
    }
}

/// Squared mass norms ‖U_k‖²_M for every stored field.
fn mass_norms(history: &SchemeHistory) -> Vec<f64> {
    let d = history.discretization();
    let policy = history.policy();
    history
        .fields()
        .iter()
        .map(|u| d.mass.bilinear(&u.values, &u.values, policy))
        .collect()
}

fn laplacian_norms(history: &SchemeHistory) -> Vec<f64> {
    let d = history.discretization();
    let policy = history.policy();
    history
        .fields()
        .iter()
        .map(|u| d.laplacian.bilinear(&u.values, &u.values, policy))
        .collect()
}

/// Σ_k C_{m,k}‖U_k‖² for m = 1..=M (index m−1).
fn weighted_history_norms(history: &SchemeHistory, norms: &[f64]) -> Vec<f64> {
    let table = history.table();
    (1..norms.len())
        .map(|m| (0..m).map(|k| table.weight(m, k) * norms[k]).sum())
        .collect()
}

/// Per-step coercivity ledger:
/// lhs = c(U_m − Σ C_{m,k}U_k, U_m)_M, rhs = (c/2)(‖U_m‖² − Σ C_{m,k}‖U_k‖²).
pub fn check_discrete_coercivity(history: &SchemeHistory) -> Vec<LedgerEntry> {
    let c = history.scale();
    let norms = mass_norms(history);
    let weighted = weighted_history_norms(history, &norms);
    let mass = history.discretization().mass.diagonal();
    let fields = history.fields();
    let table = history.table();
    let steps = fields.len() - 1;
    history.policy().map(steps, |i| {
        let m = i + 1;
        let um = &fields[m].values;
        let cross: f64 = (0..m)
            .map(|k| {
                let uk = &fields[k].values;
                let g: f64 = (0..um.len()).map(|j| mass[j] * uk[j] * um[j]).sum();
                table.weight(m, k) * g
            })
            .sum();
        let lhs = c * (norms[m] - cross);
        let rhs = 0.5 * c * (norms[m] - weighted[m - 1]);
        LedgerEntry::new(m, lhs, rhs, c * (norms[m] + weighted[m - 1]))
    })
}

/// Cumulative ledger:
/// lhs_m = c·Σ_{n≤m}(‖U_n‖² − Σ_k C_{n,k}‖U_k‖²),
/// rhs_m = (mh)^{−α}/Γ(1−α)·Σ_{k=1}^m ‖U_k‖² − (mh)^{1−α}/(Γ(2−α)h)·‖U_0‖².
pub fn check_summation_bound(history: &SchemeHistory) -> Vec<LedgerEntry> {
    let norms = mass_norms(history);
    summation_ledger(history, &norms)
}

fn summation_ledger(history: &SchemeHistory, norms: &[f64]) -> Vec<LedgerEntry> {
    let c = history.scale();
    let a = history.problem().alpha().value();
    let h = history.grid().step();
    let g1 = gamma(1.0 - a);
    let g2 = history.table().gamma_two_minus();
    let weighted = weighted_history_norms(history, norms);
    let mut lhs_sum = 0.0;
    let mut lhs_abs = 0.0;
    let mut tail = 0.0;
    (1..norms.len())
        .map(|m| {
            lhs_sum += norms[m] - weighted[m - 1];
            lhs_abs += norms[m] + weighted[m - 1];
            tail += norms[m];
            let t = m as f64 * h;
            let rhs = t.powf(-a) / g1 * tail - t.powf(1.0 - a) / (g2 * h) * norms[0];
            LedgerEntry::new(m, c * lhs_sum, rhs, c * lhs_abs + rhs.abs())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBound {
    /// h·Σ_{m=1}^M (‖U_m‖² + ‖∇U_m‖²)
    pub lhs: f64,
    /// ‖U_0‖² + h·Σ_{m=1}^M ‖f_m‖²
    pub data: f64,
    pub ratio: f64,
    pub epsilon: f64,
    pub lambda: f64,
    /// max(T^{1−α}/Γ(2−α), 1/ε) / (λ·min(T^{−α}/Γ(1−α), 2))
    pub constant: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L2H1Bound {
    /// ‖u_c^h‖_{L²(h,T;H¹)}
    pub norm_pc: f64,
    /// ‖u^h‖_{L²(h,T;H¹)}
    pub norm_pl: f64,
    /// √C·(1 + √(14/3))·(√data + slack)
    pub bound: f64,
    /// norm_pl² against (14/3)·h·Σ_{m=1}^M ‖U_m‖²_{H¹}
    pub domination_lhs: f64,
    pub domination_rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyCertificate {
    pub coercivity: Vec<LedgerEntry>,
    pub coercivity_pass: bool,
    pub coercivity_min_slack: f64,
    pub summation: Vec<LedgerEntry>,
    pub summation_pass: bool,
    pub summation_min_slack: f64,
    pub energy: EnergyBound,
    pub l2h1: L2H1Bound,
    pub pass: bool,
}

fn min_slack(ledger: &[LedgerEntry]) -> f64 {
    ledger.iter().map(|e| e.slack).fold(f64::INFINITY, f64::min)
}

/// Explicit constant of the discrete energy estimate.
pub fn energy_constant(alpha: f64, final_time: f64, lambda: f64) -> (f64, f64) {
    let g1 = gamma(1.0 - alpha);
    let epsilon = (1.0 - lambda) * final_time.powf(-alpha) / g1;
    let top = (final_time.powf(1.0 - alpha) / gamma(2.0 - alpha)).max(1.0 / epsilon);
    let bottom = lambda * (final_time.powf(-alpha) / g1).min(2.0);
    (top / bottom, epsilon)
}

fn energy_bound(history: &SchemeHistory, l2: &[f64], h1: &[f64]) -> EnergyBound {
    let h = history.grid().step();
    let d = history.discretization();
    let policy: ExecPolicy = history.policy();
    let lhs = h * (1..l2.len()).map(|m| l2[m] + h1[m]).sum::<f64>();
    let fsum: f64 = history.sources()[1..]
        .iter()
        .map(|f| d.mass.bilinear(&f.values, &f.values, policy))
        .sum();
    let data = l2[0] + h * fsum;
    let lambda = history.problem().diffusion().lambda();
    let (constant, epsilon) = energy_constant(
        history.problem().alpha().value(),
        history.grid().final_time(),
        lambda,
    );
    let ratio = if data > 0.0 { lhs / data } else if lhs == 0.0 { 0.0 } else { f64::INFINITY };
    EnergyBound {
        lhs,
        data,
        ratio,
        epsilon,
        lambda,
        constant,
        pass: lhs <= constant * data * (1.0 + 1e-12),
    }
}

/// L²(H¹) norms of both reconstructions over [h,T].
pub fn check_l2h1_bound(history: &SchemeHistory) -> L2H1Bound {
    let l2 = mass_norms(history);
    let h1 = laplacian_norms(history);
    let energy = energy_bound(history, &l2, &h1);
    l2h1_bound(history, &l2, &h1, &energy)
}

fn l2h1_bound(history: &SchemeHistory, l2: &[f64], h1: &[f64], energy: &EnergyBound) -> L2H1Bound {
    let h = history.grid().step();
    let d = history.discretization();
    let policy = history.policy();
    let fields = history.fields();
    let steps = fields.len() - 1;
    let sq = |m: usize| l2[m] + h1[m];
    let pc2 = h * (1..steps).map(sq).sum::<f64>();
    // ∫‖a + d·s/h‖² = h(‖a‖² + (a,d) + ‖d‖²/3), d = U_{m+1} − U_m
    let pl2: f64 = policy
        .map(steps.saturating_sub(1), |i| {
            let m = i + 1;
            let a = &fields[m].values;
            let diff: Vec<f64> = fields[m + 1].values.iter().zip(a).map(|(x, y)| x - y).collect();
            let ad = d.mass.bilinear(a, &diff, ExecPolicy::Sequential)
                + d.laplacian.bilinear(a, &diff, ExecPolicy::Sequential);
            let dd = d.mass.bilinear(&diff, &diff, ExecPolicy::Sequential)
                + d.laplacian.bilinear(&diff, &diff, ExecPolicy::Sequential);
            h * (sq(m) + ad + dd / 3.0)
        })
        .iter()
        .sum();
    let pl2 = pl2.max(0.0);
    let domination_rhs = LINEAR_DOMINATION_CONSTANT * h * (1..=steps).map(sq).sum::<f64>();
    let bound = energy.constant.sqrt() * (1.0 + LINEAR_DOMINATION_CONSTANT.sqrt()) * (energy.data.sqrt() + DATA_SLACK);
    let (norm_pc, norm_pl) = (pc2.sqrt(), pl2.sqrt());
    L2H1Bound {
        norm_pc,
        norm_pl,
        bound,
        domination_lhs: pl2,
        domination_rhs,
        pass: norm_pc + norm_pl <= bound && pl2 <= domination_rhs * (1.0 + 1e-12),
    }
}

/// All energy-type certificates for one history.
pub fn check_energy_estimate(history: &SchemeHistory) -> EnergyCertificate {
    let l2 = mass_norms(history);
    let h1 = laplacian_norms(history);
    let coercivity = check_discrete_coercivity(history);
    let summation = summation_ledger(history, &l2);
    let energy = energy_bound(history, &l2, &h1);
    let l2h1 = l2h1_bound(history, &l2, &h1, &energy);
    let coercivity_pass = coercivity.iter().all(|e| e.pass);
    let summation_pass = summation.iter().all(|e| e.pass);
    EnergyCertificate {
        coercivity_min_slack: min_slack(&coercivity),
        summation_min_slack: min_slack(&summation),
        pass: coercivity_pass && summation_pass && energy.pass && l2h1.pass,
        coercivity,
        coercivity_pass,
        summation,
        summation_pass,
        energy,
        l2h1,
    }
}

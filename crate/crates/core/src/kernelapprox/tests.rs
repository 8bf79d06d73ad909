use std::f64::consts::PI;

use super::*;
use crate::elliptic::{DiffusionField, SpatialMesh};
use crate::fracderiv::{discrete_caputo, rl_kernel};
use crate::timestepper::{run, step_increment_sup, ProblemSpec, Source};

fn order(a: f64) -> FractionalOrder {
    FractionalOrder::new(a).unwrap()
}

fn approx(alpha: f64, t: f64, steps: usize) -> KernelApprox {
    KernelApprox::build(order(alpha), TimeGrid::new(t, steps).unwrap())
}

fn eigen_history(alpha: f64, steps: usize, nodes: usize) -> SchemeHistory {
    run(ProblemSpec::new(
        order(alpha),
        TimeGrid::new(1.0, steps).unwrap(),
        SpatialMesh::interval(0.0, 1.0, nodes).unwrap(),
        DiffusionField::constant_scalar(1.0, 0.9).unwrap(),
        Source::zero(),
        |x| (PI * x[0]).sin(),
    )
    .unwrap())
    .unwrap()
}

fn wiggly_history(alpha: f64, steps: usize) -> SchemeHistory {
    run(ProblemSpec::new(
        order(alpha),
        TimeGrid::new(1.3, steps).unwrap(),
        SpatialMesh::interval(0.0, 1.0, 9).unwrap(),
        DiffusionField::constant_scalar(0.7, 0.5).unwrap(),
        Source::from_fn(|x, t| (5.0 * t).sin() * x[0]),
        |x| x[0] * (1.0 - x[0]),
    )
    .unwrap())
    .unwrap()
}

#[test]
fn zero_branch_and_breakpoints() {
    for alpha in [0.2, 0.5, 0.8] {
        for steps in [16, 64, 256] {
            let k = approx(alpha, 1.0, steps);
            let h = k.grid().step();
            for s in 0..=20 {
                assert_eq!(k.value(h * s as f64 / 20.0), 0.0);
            }
            // value at Mh is the slope sum
            let direct: f64 = (0..steps).map(|j| kernel_unchecked(2.0 - alpha, j as f64 * h) * h).sum();
            assert!((k.value(1.0) - direct).abs() <= 1e-14);
            // continuity at every breakpoint
            for m in 1..=steps {
                let t = m as f64 * h;
                let left = k.breakpoints()[m - 1] + k.slopes()[m - 1] * h;
                assert!((left - k.breakpoints()[m]).abs() <= 1e-15, "{alpha} {steps} {m}");
                assert!((k.value(t) - k.breakpoints()[m]).abs() <= 1e-15);
            }
            // nonnegative nondecreasing gap
            let mut prev = 0.0;
            for s in 1..=8 * steps {
                let g = k.gap(s as f64 / (8 * steps) as f64);
                assert!(g >= -1e-15 && g >= prev - 1e-15);
                prev = g;
            }
        }
    }
}

#[test]
fn breakpoint_hand_example() {
    let k = approx(0.5, 1.0, 4);
    let g = |t: f64| rl_kernel(1.5, t).unwrap();
    assert!((k.value(0.5) - g(0.25) * 0.25).abs() <= 1e-15);
    assert!((k.value(0.75) - (g(0.25) + g(0.5)) * 0.25).abs() <= 1e-15);
}

#[test]
fn gap_report() {
    for alpha in [0.2, 0.5, 0.8] {
        for steps in [16, 64, 256] {
            let r = kernel_gap_sup(&approx(alpha, 1.0, steps));
            assert!((r.sup_gap - r.closed_form).abs() <= 1e-12);
            assert!((r.sampled_sup - r.closed_form).abs() <= 1e-12);
            assert_eq!(r.attained_at, 1.0);
            assert!(r.sup_gap <= r.intermediate_bound * (1.0 + 1e-12));
            assert!(r.intermediate_bound <= r.bound * (1.0 + 1e-12));
        }
    }
    let single = kernel_gap_sup(&approx(0.4, 2.0, 1));
    assert!((single.sup_gap - rl_kernel(2.6, 2.0).unwrap()).abs() <= 1e-15);
    let ratio = kernel_gap_sup(&approx(0.5, 1.0, 128)).sup_gap / kernel_gap_sup(&approx(0.5, 1.0, 256)).sup_gap;
    assert!((1.8..=2.2).contains(&ratio), "{ratio}");
}

#[test]
fn first_order_scaling() {
    for alpha in [0.2, 0.5, 0.8] {
        let scaled: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&m| kernel_gap_sup(&approx(alpha, 2.0, m)).sup_gap * m as f64 / 2.0)
            .collect();
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo <= 1.5, "{scaled:?}");
    }
}

#[test]
fn functionals_vanish_on_zero_history_and_at_origin() {
    let h = run(ProblemSpec::new(
        order(0.5),
        TimeGrid::new(1.0, 8).unwrap(),
        SpatialMesh::interval(0.0, 1.0, 5).unwrap(),
        DiffusionField::constant_scalar(1.0, 0.5).unwrap(),
        Source::zero(),
        |_| 0.0,
    )
    .unwrap())
    .unwrap();
    let k = KernelApprox::build(order(0.5), *h.grid());
    for t in [0.0, 0.3, 1.0] {
        assert!(g_exact(&h, t).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(g_approx(&h, &k, t).unwrap().values.iter().all(|&v| v == 0.0));
    }
    let test = TestPair::new(SpatialField::sample(h.mesh(), |_| 1.0), Bump::on(0.25, 0.75).unwrap());
    assert_eq!(weak_error_pairing(&h, &k, &test).unwrap(), 0.0);
    let e = eigen_history(0.5, 8, 5);
    assert!(g_exact(&e, 0.0).unwrap().values.iter().all(|&v| v == 0.0));
    assert!(g_exact(&e, 1.5).is_err());
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
    let left = (c - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + c)) + f(c));
    let right = (b - c) / 6.0 * (f(c) + 4.0 * f(0.5 * (c + b)) + f(b));
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, a, c, tol / 2.0, depth - 1) + adaptive_simpson(f, c, b, tol / 2.0, depth - 1)
    }
}

#[test]
fn g_exact_matches_quadrature() {
    // single step: G(t) = g_{3−α}(t)(U_1 − U_0)/h
    let h1 = eigen_history(0.6, 1, 7);
    let d: Vec<f64> = (0..7).map(|i| h1.field(1).values[i] - h1.field(0).values[i]).collect();
    for t in [0.1, 0.5, 0.9] {
        let g = g_exact(&h1, t).unwrap();
        for i in 0..7 {
            let q = adaptive_simpson(&|s| kernel_unchecked(1.4, t - s) * d[i], 0.0, t, 1e-13, 40);
            assert!((g.values[i] - q).abs() <= 1e-8, "{} vs {q}", g.values[i]);
            assert!((g.values[i] - kernel_unchecked(2.4, t) * d[i]).abs() <= 1e-15);
        }
    }
    // multi-step: integrate g_{2−α}(t−s)·du^h/ds piecewise
    let h = wiggly_history(0.3, 6);
    let grid = *h.grid();
    for t in [0.05, 0.61, 1.2, 1.3] {
        let g = g_exact(&h, t).unwrap();
        for i in [0, 4, 8] {
            let mut q = 0.0;
            for k in 0..6 {
                let (a, b) = (grid.time(k), grid.time(k + 1).min(t));
                if a >= t {
                    break;
                }
                let dk = (h.field(k + 1).values[i] - h.field(k).values[i]) / grid.step();
                q += adaptive_simpson(&|s| kernel_unchecked(1.7, t - s) * dk, a, b, 1e-14, 40);
            }
            assert!((g.values[i] - q).abs() <= 1e-8, "t = {t}: {} vs {q}", g.values[i]);
        }
    }
}

#[test]
fn approx_slope_is_discrete_caputo() {
    for alpha in [0.2, 0.5, 0.8] {
        for steps in [16, 64] {
            let h = wiggly_history(alpha, steps);
            let k = KernelApprox::build(order(alpha), *h.grid());
            let grid = *h.grid();
            let step = grid.step();
            for m in 1..steps {
                let ts = [0.2, 0.5, 0.8].map(|th| grid.time(m) + th * step);
                let g: Vec<SpatialField> = ts.iter().map(|&t| g_approx(&h, &k, t).unwrap()).collect();
                for i in 0..h.mesh().dofs() {
                    let samples: Vec<f64> = (0..=m).map(|j| h.field(j).values[i]).collect();
                    let dc = discrete_caputo(h.table(), &grid, &samples, m).unwrap();
                    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                        let slope = (g[b].values[i] - g[a].values[i]) / (ts[b] - ts[a]);
                        assert!((slope - dc).abs() <= 1e-9 * (1.0 + dc.abs()), "{alpha} {m}: {slope} vs {dc}");
                    }
                }
            }
        }
    }
}

#[test]
fn gap_functional_bounded_by_increments() {
    let h = eigen_history(0.5, 64, 31);
    let k = KernelApprox::build(order(0.5), *h.grid());
    let sup_gap = kernel_gap_sup(&k).sup_gap;
    let total: f64 = h.fields().windows(2).map(|w| w[1].sup_distance(&w[0])).sum();
    let bound = sup_gap * 2.0 / h.grid().step() * total;
    assert!(step_increment_sup(&h) > 0.0);
    for m in 0..64 {
        let t = h.grid().time(m);
        let diff = g_exact(&h, t).unwrap().sup_distance(&g_approx(&h, &k, t).unwrap());
        assert!(diff <= bound);
    }
}

#[test]
fn gap_derivative_is_caputo_difference() {
    let h = wiggly_history(0.4, 32);
    let k = KernelApprox::build(order(0.4), *h.grid());
    let grid = *h.grid();
    let step = grid.step();
    let delta = 1e-5 * step;
    for m in 1..32 {
        let t = grid.time(m) + 0.5 * step;
        let gap = |t: f64| -> Vec<f64> {
            let a = g_exact(&h, t).unwrap();
            let b = g_approx(&h, &k, t).unwrap();
            a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect()
        };
        let (plus, minus) = (gap(t + delta), gap(t - delta));
        let at_t = caputo_of_interpolant(&h, t).unwrap();
        for i in 0..h.mesh().dofs() {
            let fd = (plus[i] - minus[i]) / (2.0 * delta);
            let samples: Vec<f64> = (0..=m).map(|j| h.field(j).values[i]).collect();
            let direct = at_t.values[i] - discrete_caputo(h.table(), &grid, &samples, m).unwrap();
            let scale = at_t.values[i].abs().max(direct.abs()).max(1e-300);
            assert!((fd - direct).abs() <= 1e-6 * scale, "m = {m}, i = {i}: {fd} vs {direct}");
        }
    }
}

#[test]
fn pairing_margin_is_enforced() {
    let h = eigen_history(0.5, 8, 7);
    let k = KernelApprox::build(order(0.5), *h.grid());
    let phi = TestPair::smooth_phi(h.mesh(), [0.5, 0.0], 0.4);
    let close = TestPair::new(phi.clone(), Bump::on(0.1, 0.9).unwrap());
    assert!(matches!(
        weak_error_pairing(&h, &k, &close),
        Err(Error::MarginViolation { .. })
    ));
    let ok = TestPair::new(phi, Bump::on(0.2, 0.8).unwrap());
    assert!(weak_error_pairing(&h, &k, &ok).is_ok());
    let zero_phi = TestPair::new(SpatialField::zeros(h.mesh()), Bump::on(0.2, 0.8).unwrap());
    assert_eq!(weak_error_pairing(&h, &k, &zero_phi).unwrap(), 0.0);
}

#[test]
fn pairing_matches_direct_quadrature() {
    let h = wiggly_history(0.5, 16);
    let k = KernelApprox::build(order(0.5), *h.grid());
    let test = TestPair::new(TestPair::smooth_phi(h.mesh(), [0.4, 0.0], 0.35), Bump::on(0.2, 1.0).unwrap());
    let fast = weak_error_pairing(&h, &k, &test).unwrap();
    let mass = h.discretization().mass.diagonal();
    let grid = *h.grid();
    let mut slow = 0.0;
    for m in 0..16 {
        for (t, w) in crate::kernelapprox::quadrature::reference_points(grid.time(m), grid.time(m + 1)) {
            let a = g_exact(&h, t).unwrap();
            let b = g_approx(&h, &k, t).unwrap();
            let pair: f64 = (0..9).map(|i| test.phi.values[i] * mass[i] * (a.values[i] - b.values[i])).sum();
            slow += w * test.eta.value(t) * pair;
        }
    }
    assert!((fast - slow).abs() <= 1e-13 * (1.0 + slow.abs()), "{fast} vs {slow}");
}

#[test]
fn pairing_decays_under_refinement() {
    let vals: Vec<f64> = [64, 128, 256, 512]
        .iter()
        .map(|&m| {
            let h = eigen_history(0.5, m, 63);
            let k = KernelApprox::build(order(0.5), *h.grid());
            let test = TestPair::new(TestPair::smooth_phi(h.mesh(), [0.5, 0.0], 0.45), Bump::on(0.1, 0.9).unwrap());
            weak_error_pairing(&h, &k, &test).unwrap().abs()
        })
        .collect();
    for w in vals.windows(2) {
        assert!(w[1] <= 1.15 * w[0], "{vals:?}");
    }
    assert!(vals[0] / vals[1] >= 1.3, "{vals:?}");
}

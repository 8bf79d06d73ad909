use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::elliptic::{load, solve_step_system};
use crate::fracderiv::{discrete_caputo, mittag_leffler};

fn order(a: f64) -> FractionalOrder {
    FractionalOrder::new(a).unwrap()
}

fn eigenmode(alpha: f64, steps: usize, nodes: usize) -> ProblemSpec {
    ProblemSpec::new(
        order(alpha),
        TimeGrid::new(1.0, steps).unwrap(),
        SpatialMesh::interval(0.0, 1.0, nodes).unwrap(),
        DiffusionField::constant_scalar(1.0, 0.9).unwrap(),
        Source::zero(),
        |x| (PI * x[0]).sin(),
    )
    .unwrap()
}

fn eigen_error(h: &SchemeHistory, alpha: f64) -> f64 {
    let grid = h.grid();
    let mut worst = 0.0f64;
    for m in 0..=grid.steps() {
        let e = mittag_leffler(alpha, -PI * PI * grid.time(m).powf(alpha)).unwrap();
        let exact = SpatialField::sample(h.mesh(), |x| e * (PI * x[0]).sin());
        worst = worst.max(h.field(m).sup_distance(&exact));
    }
    worst
}

#[test]
fn zero_problem_stays_zero() {
    let p = ProblemSpec::new(
        order(0.3),
        TimeGrid::new(2.0, 7).unwrap(),
        SpatialMesh::rectangle((0.0, 1.0), (0.0, 2.0), 5, 6).unwrap(),
        DiffusionField::constant_matrix([[1.0, 0.2], [0.2, 1.0]], 0.5).unwrap(),
        Source::zero(),
        |_| 0.0,
    )
    .unwrap();
    let h = run(p).unwrap();
    assert_eq!(h.fields().len(), 8);
    assert!(h.fields().iter().all(|u| u.values.iter().all(|&v| v == 0.0)));
    assert_eq!(step_increment_sup(&h), 0.0);
}

#[test]
fn single_step_is_backward_euler_like() {
    let p = eigenmode(0.4, 1, 15);
    let h = run(p.clone()).unwrap();
    assert_eq!(h.fields().len(), 2);
    // (cM + A)U_1 = cM U_0
    let c = h.scale();
    let d = h.discretization();
    let rhs = load(&d.mass, &h.field(0).scaled(c), ExecPolicy::Sequential);
    let (u1, _) = solve_step_system(&d.stiffness, &d.mass, c, &rhs, ExecPolicy::Sequential).unwrap();
    assert!(u1.sup_distance(h.field(1)) <= 1e-13);
}

#[test]
fn initial_interpolation() {
    let mesh = SpatialMesh::interval(0.0, 1.0, 9).unwrap();
    let u = approximate_initial(|x| (PI * x[0]).sin(), &mesh).unwrap();
    for (i, v) in u.values.iter().enumerate() {
        assert_eq!(*v, (PI * mesh.node(i)[0]).sin());
    }
    assert!(matches!(
        approximate_initial(|x| x[0], &mesh),
        Err(Error::BoundaryDatum { .. })
    ));
    assert!(approximate_initial(|_| 0.0, &mesh).unwrap().values.iter().all(|&v| v == 0.0));

    // piecewise-linear interpolant of x(1−x) within Δx²/4 (sup|u0''| = 2)
    let u0 = |x: f64| x * (1.0 - x);
    let u = approximate_initial(|x| u0(x[0]), &mesh).unwrap();
    let dx = mesh.axis(0).spacing();
    let mut nodal = vec![0.0];
    nodal.extend(&u.values);
    nodal.push(0.0);
    let mut gap = 0.0f64;
    for e in 0..nodal.len() - 1 {
        for s in 0..=64 {
            let th = s as f64 / 64.0;
            let x = (e as f64 + th) * dx;
            let interp = nodal[e] * (1.0 - th) + nodal[e + 1] * th;
            gap = gap.max((interp - u0(x)).abs());
        }
    }
    assert!(gap <= dx * dx / 4.0 + 1e-15);
    assert!(gap >= 0.99 * dx * dx / 4.0);
}

#[test]
fn boundary_datum_rejected_by_problem() {
    let r = ProblemSpec::new(
        order(0.5),
        TimeGrid::new(1.0, 4).unwrap(),
        SpatialMesh::interval(0.0, 1.0, 4).unwrap(),
        DiffusionField::constant_scalar(1.0, 0.5).unwrap(),
        Source::zero(),
        |x| 1.0 + x[0],
    );
    assert!(matches!(r, Err(Error::BoundaryDatum { .. })));
}

#[test]
fn nonfinite_source_is_reported() {
    let p = ProblemSpec::new(
        order(0.5),
        TimeGrid::new(1.0, 4).unwrap(),
        SpatialMesh::interval(0.0, 1.0, 4).unwrap(),
        DiffusionField::constant_scalar(1.0, 0.5).unwrap(),
        Source::from_fn(|_, t| if t > 0.5 { f64::NAN } else { 0.0 }),
        |_| 0.0,
    )
    .unwrap();
    assert!(matches!(run(p), Err(Error::NonFinite(_))));
}

#[test]
fn eigenmode_matches_mittag_leffler() {
    let h = run(eigenmode(0.5, 256, 255)).unwrap();
    let mid = 127;
    assert_eq!(h.mesh().node(mid)[0], 0.5);
    let exact = mittag_leffler(0.5, -PI * PI).unwrap();
    let got = h.final_field().values[mid];
    assert!(((got - exact) / exact).abs() <= 0.05, "{got} vs {exact}");
}

#[test]
fn eigenmode_error_decreases_under_refinement() {
    let errs: Vec<f64> = [(16, 15), (32, 31), (64, 63), (128, 127)]
        .iter()
        .map(|&(m, n)| eigen_error(&run(eigenmode(0.5, m, n)).unwrap(), 0.5))
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] <= 1.1 * w[0], "{errs:?}");
    }
    assert!(errs[3] < errs[0]);
}

#[test]
fn reconstructions_agree_on_grid() {
    let h = run(eigenmode(0.6, 8, 7)).unwrap();
    let pc = h.reconstruction(ReconstructionMode::PiecewiseConstant);
    let pl = h.reconstruction(ReconstructionMode::PiecewiseLinear);
    let grid = h.grid();
    for m in 0..=8 {
        let t = grid.time(m);
        for i in 0..7 {
            assert_eq!(pc.evaluate(i, t).unwrap(), h.field(m).values[i]);
            assert_eq!(pl.evaluate(i, t).unwrap(), h.field(m).values[i]);
        }
    }
    for m in 0..8 {
        let t = grid.time(m) + grid.step() / 2.0;
        let mid = (h.field(m).values[3] + h.field(m + 1).values[3]) / 2.0;
        assert!((pl.evaluate(3, t).unwrap() - mid).abs() <= 1e-15);
        assert_eq!(pc.evaluate(3, t).unwrap(), h.field(m).values[3]);
    }
    assert!(matches!(pc.evaluate(0, 1.5), Err(Error::TimeOutOfRange { .. })));
    assert!(pc.evaluate(0, -1e-9).is_err());
    assert!(pc.evaluate(7, 0.5).is_err());
}

#[test]
fn reconstruction_gap_is_increment_sup() {
    let mut sups = Vec::new();
    for steps in [16, 32] {
        let h = run(eigenmode(0.5, steps, 31)).unwrap();
        let pc = h.reconstruction(ReconstructionMode::PiecewiseConstant);
        let pl = h.reconstruction(ReconstructionMode::PiecewiseLinear);
        let mut dense = 0.0f64;
        let samples = 4096;
        for s in 0..=samples {
            // approach each right endpoint from inside the interval
            let t = (s as f64 / samples as f64) * (1.0 - 1e-12);
            let a = pc.field_at(t).unwrap();
            let b = pl.field_at(t).unwrap();
            dense = dense.max(a.sup_distance(&b));
        }
        let sup = step_increment_sup(&h);
        assert!(dense <= sup * (1.0 + 1e-12));
        assert!(dense >= sup * (1.0 - 2.0 * steps as f64 / samples as f64));
        sups.push(sup);
    }
    assert!(sups[1] < sups[0]);
}

#[test]
fn stationary_solution_is_reproduced() {
    let mesh = SpatialMesh::interval(0.0, 1.0, 63).unwrap();
    let a = DiffusionField::from_fn(|x| [[1.0 + x[0] * x[0], 0.0], [0.0, 1.0]], 0.5).unwrap();
    let d = Discretization::new(mesh.clone(), &a).unwrap();
    let u0 = SpatialField::sample(&mesh, |x| (PI * x[0]).sin());
    let au = d.stiffness.apply(&u0.values, ExecPolicy::Sequential);
    let f: Vec<f64> = au.iter().zip(d.mass.diagonal()).map(|(v, m)| v / m).collect();
    let p = ProblemSpec::new(
        order(0.5),
        TimeGrid::new(1.0, 64).unwrap(),
        mesh,
        a,
        Source::Nodal(SpatialField { values: f }),
        |x| (PI * x[0]).sin(),
    )
    .unwrap();
    let h = run(p).unwrap();
    assert!(step_increment_sup(&h) <= 10.0 * SOLVER_TOLERANCE);
    for u in h.fields() {
        assert!(u.sup_distance(&u0) <= 10.0 * SOLVER_TOLERANCE);
    }
}

#[test]
fn nonnegative_data_gives_nonnegative_iterates() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let alpha = rng.random_range(0.05..0.95);
        let steps = rng.random_range(4..40);
        let nodes = rng.random_range(5..60);
        let amp: [f64; 3] = [rng.random_range(0.0..2.0), rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)];
        let freq = rng.random_range(1.0..6.0);
        let kappa = rng.random_range(1.1..3.0);
        let p = ProblemSpec::new(
            order(alpha),
            TimeGrid::new(rng.random_range(0.2..3.0), steps).unwrap(),
            SpatialMesh::interval(0.0, 1.0, nodes).unwrap(),
            DiffusionField::from_fn(move |x| [[kappa + (freq * x[0]).sin(), 0.0], [0.0, 1.0]], 0.05).unwrap(),
            Source::from_fn(move |x, t| amp[0] * (freq * x[0] + t).cos().max(0.0) + amp[1] * t),
            move |x| amp[2] * (PI * x[0]).sin().powi(3),
        )
        .unwrap();
        let h = run(p).unwrap();
        let worst = h.fields().iter().flat_map(|u| u.values.iter()).fold(0.0f64, |m, &v| m.min(v));
        assert!(worst >= -10.0 * SOLVER_TOLERANCE, "{worst}");
    }
}

#[test]
fn scheme_satisfies_discrete_caputo_identity() {
    // M·d_t^α U(mh) + A U_m = M f_m nodewise
    let p = ProblemSpec::new(
        order(0.35),
        TimeGrid::new(1.5, 24).unwrap(),
        SpatialMesh::interval(0.0, 2.0, 30).unwrap(),
        DiffusionField::from_fn(|x| [[1.0 + 0.5 * x[0], 0.0], [0.0, 1.0]], 0.5).unwrap(),
        Source::from_fn(|x, t| x[0] * t.cos()),
        |x| x[0] * (2.0 - x[0]),
    )
    .unwrap();
    let h = run(p).unwrap();
    let d = h.discretization();
    let mass = d.mass.diagonal();
    for m in 1..=h.grid().steps() {
        let au = d.stiffness.apply(&h.field(m).values, ExecPolicy::Sequential);
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..h.mesh().dofs() {
            let samples: Vec<f64> = (0..=m).map(|k| h.field(k).values[i]).collect();
            let dc = discrete_caputo(h.table(), h.grid(), &samples, m).unwrap();
            let mf = mass[i] * h.sources()[m].values[i];
            worst = worst.max((mass[i] * dc + au[i] - mf).abs());
            scale = scale.max(mf.abs()).max(au[i].abs());
        }
        assert!(worst <= 1e-8 * (1.0 + scale), "m = {m}: {worst}");
    }
}

#[test]
fn residual_invariant_and_fault_injection() {
    let mut h = run(eigenmode(0.5, 16, 31)).unwrap();
    for r in h.records() {
        assert!(r.residual <= RESIDUAL_INVARIANT * (1.0 + r.rhs_norm));
    }
    let checks = h.verify_residuals().unwrap();
    assert_eq!(checks.len(), 16);
    assert!(checks.iter().all(|c| c.scaled <= RESIDUAL_INVARIANT));
    h.inject_sign_flip(1);
    let checks = h.verify_residuals().unwrap();
    assert!(checks[0].scaled > 1e-3);
}

#[test]
fn two_dimensional_run_is_policy_independent() {
    let make = |policy| {
        ProblemSpec::new(
            order(0.5),
            TimeGrid::new(1.0, 6).unwrap(),
            SpatialMesh::rectangle((0.0, 1.0), (0.0, 1.0), 40, 37).unwrap(),
            DiffusionField::constant_matrix([[2.0, 0.5], [0.5, 1.0]], 0.75).unwrap(),
            Source::from_fn(|x, t| t * x[0] * x[1]),
            |x| (PI * x[0]).sin() * (PI * x[1]).sin(),
        )
        .unwrap()
        .with_policy(policy)
    };
    let a = run(make(ExecPolicy::Sequential)).unwrap();
    let b = run(make(ExecPolicy::Parallel)).unwrap();
    assert!(a.mesh().dofs() > crate::exec::CHUNK);
    for (u, v) in a.fields().iter().zip(b.fields()) {
        assert_eq!(u, v);
    }
}

#[test]
fn progress_events_cover_every_step() {
    let mut seen = Vec::new();
    run_with_progress(eigenmode(0.5, 5, 7), |e| seen.push(e.step)).unwrap();
    assert_eq!(seen, vec![1, 2, 3, 4, 5]);
}

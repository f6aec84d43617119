use comp_market::flawed::{
    flawed_run, pathology_report, reduced_form_run, RunSettings, TrajectoryClass, DEFAULT_Q0,
};
use comp_market::penalty::water_filling_oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const Q0: [f64; 2] = [DEFAULT_Q0, DEFAULT_Q0];

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize, total: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| total * v / s).collect()
}

#[test]
fn skewed_start_never_returns_to_optimum() {
    let settings = RunSettings::default();
    let t = flawed_run(&[0.2, 0.8], &Q0, &[1.0, 1.0], 1.0, &settings).unwrap();
    assert!((t.c[0] - 1.0 / 6.0).abs() < 1e-15 && (t.c[1] - 4.0 / 9.0).abs() < 1e-15);
    for r in &t.r {
        assert!(max_diff(r, &[0.5, 0.5]) > 1e-3);
    }
    // it settles on the vertex favouring the larger constant
    assert_eq!(t.class, TrajectoryClass::Converged);
    assert!(t.final_allocation()[1] > 1.0 - 1e-6);

    let reduced = reduced_form_run(&t.c, &Q0, 1.0, Some(&[0.2, 0.8]), &settings).unwrap();
    for r in &reduced.r {
        assert!(max_diff(r, &[0.5, 0.5]) > 1e-3);
    }
}

#[test]
fn invariant_holds_on_random_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..40 {
        let n = rng.random_range(2..=5);
        let total = rng.random_range(0.5..10.0);
        let se: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..5.0)).collect();
        let r0 = random_simplex(&mut rng, n, total);
        let q0 = vec![DEFAULT_Q0; n];
        let settings = RunSettings { iters: 5000, ..RunSettings::default() };
        let t = flawed_run(&r0, &q0, &se, total, &settings).unwrap();
        assert!(t.invariant_residual() <= 1e-9, "{}", t.invariant_residual());
        for r in &t.r[1..] {
            assert!((r.iter().sum::<f64>() - total).abs() <= 1e-12 * total);
        }
    }
}

#[test]
fn full_and_reduced_forms_trace_the_same_allocations() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..40 {
        let n = rng.random_range(2..=5);
        let total = rng.random_range(0.5..10.0);
        let se: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..5.0)).collect();
        let r0 = random_simplex(&mut rng, n, total);
        let q0 = vec![DEFAULT_Q0; n];
        let settings = RunSettings { iters: 3000, ..RunSettings::default() };
        let full = flawed_run(&r0, &q0, &se, total, &settings).unwrap();
        let reduced = reduced_form_run(&full.c, &q0, total, Some(&r0), &settings).unwrap();
        // the two may stop a step apart on rounding; compare the common prefix
        let common = full.r.len().min(reduced.r.len());
        assert!(common > 1 && full.r.len().abs_diff(reduced.r.len()) <= 1);
        for (a, b) in full.r[..common].iter().zip(&reduced.r[..common]) {
            assert!(max_diff(a, b) <= 1e-12, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn consistent_start_needs_no_first_allocation() {
    // Starting at the water-filling point makes v′ᵢ(rᵢ⁽⁰⁾) equal, so with a
    // uniform q0 the given r0 is exactly R(cᵢ/qᵢ)/H.
    let se = [0.7, 1.9, 3.2];
    let r0 = water_filling_oracle(&se, 6.0);
    let q0 = [DEFAULT_Q0; 3];
    let settings = RunSettings { iters: 2000, tol: 0.0, ..RunSettings::default() };
    let full = flawed_run(&r0, &q0, &se, 6.0, &settings).unwrap();
    let reduced = reduced_form_run(&full.c, &q0, 6.0, None, &settings).unwrap();
    for (a, b) in full.r.iter().zip(&reduced.r) {
        assert!(max_diff(a, b) <= 1e-12);
    }
}

#[test]
fn spectral_efficiency_enters_only_through_c() {
    // (se, r0) = ((1, 1), (0.2, 0.8)) and ((0.4, 1.6), (0.5, 0.5)) share c = (1/6, 4/9).
    let settings = RunSettings { iters: 20_000, ..RunSettings::default() };
    let a = flawed_run(&[0.2, 0.8], &Q0, &[1.0, 1.0], 1.0, &settings).unwrap();
    let b = flawed_run(&[0.5, 0.5], &Q0, &[0.4, 1.6], 1.0, &settings).unwrap();
    assert!(max_diff(&a.c, &b.c) < 1e-15);

    // Beyond the first penalty update, each run is the c-only reduced form.
    for (run, r0) in [(&a, [0.2, 0.8]), (&b, [0.5, 0.5])] {
        let reduced = reduced_form_run(&run.c, &Q0, 1.0, Some(&r0), &settings).unwrap();
        assert_eq!(reduced.r.len(), run.r.len());
        for (x, y) in run.r.iter().zip(&reduced.r) {
            assert!(max_diff(x, y) <= 1e-12);
        }
    }
    // and the two end in the same place even though their valuations differ
    assert!(max_diff(a.final_allocation(), b.final_allocation()) < 1e-6);
    assert!(max_diff(&water_filling_oracle(&[1.0, 1.0], 1.0), &water_filling_oracle(&[0.4, 1.6], 1.0)) > 0.1);

    // The reduced form itself never sees se: equal c and q0 give equal trajectories.
    let x = reduced_form_run(&a.c, &Q0, 1.0, None, &settings).unwrap();
    let y = reduced_form_run(&b.c, &Q0, 1.0, None, &settings).unwrap();
    assert_eq!(x, y);
}

#[test]
fn two_initializations_disagree() {
    let rep =
        pathology_report(&[1.0, 1.0], 1.0, &Q0, &[vec![0.5, 0.5], vec![0.2, 0.8]], &RunSettings::default())
            .unwrap();
    assert_eq!(rep.optimum, vec![0.5, 0.5]);
    assert!(rep.pairwise[0][1] > 0.05);
    assert!(rep.max_pairwise > 1e-2 * rep.total);
    assert!(rep.runs[0].distance_from_optimum < 1e-12);
    assert!(rep.runs[1].distance_from_optimum > 0.4);
    assert!(rep.max_invariant_residual <= 1e-9);
}

#[test]
fn random_initializations_scatter() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let se = [0.8, 1.5, 2.5];
    let samples: Vec<Vec<f64>> = (0..8).map(|_| random_simplex(&mut rng, 3, 3.0)).collect();
    let rep = pathology_report(&se, 3.0, &[DEFAULT_Q0; 3], &samples, &RunSettings::default()).unwrap();
    assert!(rep.max_pairwise > 1e-2 * 3.0);
    assert!(rep.max_invariant_residual <= 1e-9);
    for (i, row) in rep.pairwise.iter().enumerate() {
        assert_eq!(row[i], 0.0);
    }
}

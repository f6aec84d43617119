use comp_market::penalty::{
    equilibrium_bids, log_valuation, log_valuation_derivative, ne_sum_residual, penalty_iteration,
    proportional_share, social_welfare, solve_ne_allocation, stationary_allocation, water_filling_oracle,
    PenaltyAuctionInstance,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Water level by bisection on `Σ max(0, μ − 1/SEᵢ) = R`, independent of the
/// active-set sweep in the library.
fn water_level_bisection(se: &[f64], total: f64) -> Vec<f64> {
    let fill = |mu: f64| se.iter().map(|s| (mu - 1.0 / s).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, total + se.iter().map(|s| 1.0 / s).fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fill(mid) < total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    se.iter().map(|s| (mu - 1.0 / s).max(0.0)).collect()
}

#[test]
fn derivative_matches_central_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 1e-6;
    for _ in 0..500 {
        let r = rng.random_range(0.01..20.0);
        let se = rng.random_range(0.1..8.0);
        let fd = (log_valuation(r + h, se).unwrap() - log_valuation(r - h, se).unwrap()) / (2.0 * h);
        let exact = log_valuation_derivative(r, se).unwrap();
        assert!((fd - exact).abs() <= 1e-6 * exact, "r={r} se={se}: {fd} vs {exact}");
    }
}

#[test]
fn two_ue_water_filling_matches_grid() {
    // SE = (1, 4), R = 1: maximize ln(1 + r) + ln(1 + 4(1 − r)) on a fine grid.
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 0..=1_000_000u32 {
        let r = k as f64 * 1e-6;
        let w = social_welfare(&[r, 1.0 - r], &[1.0, 4.0]);
        if w > best.1 {
            best = (r, w);
        }
    }
    assert!((best.0 - 0.125).abs() <= 1e-6);
    let wf = water_filling_oracle(&[1.0, 4.0], 1.0);
    assert!((wf[0] - best.0).abs() <= 1e-6);
}

#[test]
fn water_filling_satisfies_kkt_and_matches_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let n = rng.random_range(1..9);
        let se: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..10.0)).collect();
        let total = rng.random_range(0.05..20.0);
        let r = water_filling_oracle(&se, total);
        let reference = water_level_bisection(&se, total);
        for (a, b) in r.iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-9 * total.max(1.0), "{r:?} vs {reference:?}");
        }
        assert!((r.iter().sum::<f64>() - total).abs() <= 1e-9 * total);
        let active: Vec<f64> = r
            .iter()
            .zip(&se)
            .filter(|(r, _)| **r > 0.0)
            .map(|(r, s)| log_valuation_derivative(*r, *s).unwrap())
            .collect();
        let level = active[0];
        for m in &active {
            assert!((m - level).abs() <= 1e-9 * level);
        }
        for (ri, s) in r.iter().zip(&se) {
            if *ri == 0.0 {
                assert!(log_valuation_derivative(0.0, *s).unwrap() <= level * (1.0 + 1e-9));
            }
        }
    }
}

#[test]
fn weak_user_is_shut_off() {
    let r = water_filling_oracle(&[10.0, 0.01], 0.5);
    assert_eq!(r, vec![0.5, 0.0]);
    // water level 0.6 = 0.5 + 1/10
    assert!((1.0 / log_valuation_derivative(r[0], 10.0).unwrap() - 0.6).abs() < 1e-12);
}

#[test]
fn sum_equation_hand_case() {
    // 2(1 − X/2)/(1 + X/2) = 1  ⇒  X = 2/3
    let shares = [0.5, 0.5];
    let se = [1.0, 1.0];
    assert_eq!(ne_sum_residual(&shares, &se, 1.0, 0.0), 1.0);
    assert!(ne_sum_residual(&shares, &se, 1.0, 2.0 / 3.0).abs() < 1e-15);
    let ne = solve_ne_allocation(&[3.0, 3.0], &se, 1.0).unwrap();
    assert!((ne.x - 2.0 / 3.0).abs() < 1e-10);
}

proptest! {
    #[test]
    fn sum_equation_is_decreasing(
        q in prop::collection::vec(0.01f64..10.0, 2..7),
        se_seed in any::<u64>(),
        total in 0.1f64..50.0,
    ) {
        let n = q.len();
        let mut rng = ChaCha8Rng::seed_from_u64(se_seed);
        let se: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..10.0)).collect();
        let q_sum: f64 = q.iter().sum();
        let shares: Vec<f64> = q.iter().map(|v| v / q_sum).collect();
        prop_assert!((ne_sum_residual(&shares, &se, total, 0.0) - (n as f64 - 1.0) * total).abs() < 1e-9 * total);
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let x = 1e-3 * 1.1f64.powi(k);
            let v = ne_sum_residual(&shares, &se, total, x);
            prop_assert!(v < prev);
            prev = v;
        }
        prop_assert!(prev < 0.0);
    }

    #[test]
    fn ne_allocation_sums_and_balances(
        q in prop::collection::vec(0.05f64..5.0, 2..6),
        se_seed in any::<u64>(),
        total in 0.5f64..20.0,
    ) {
        let n = q.len();
        let mut rng = ChaCha8Rng::seed_from_u64(se_seed);
        let se: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..4.0)).collect();
        match solve_ne_allocation(&q, &se, total) {
            Ok(ne) => {
                prop_assert!((ne.allocation.iter().sum::<f64>() - total).abs() <= 1e-9 * total);
                let ratios: Vec<f64> = ne.allocation.iter().zip(&se).zip(&q)
                    .map(|((r, s), qi)| (total - r) * log_valuation_derivative(*r, *s).unwrap() / qi)
                    .collect();
                for v in &ratios {
                    prop_assert!((v - ratios[0]).abs() <= 1e-9 * ratios[0].abs());
                }
                let bids = equilibrium_bids(&q, &ne, total);
                let shares = proportional_share(&bids, total).unwrap();
                for (a, b) in shares.iter().zip(&ne.allocation) {
                    prop_assert!((a - b).abs() <= 1e-9 * total);
                }
            }
            Err(e) => prop_assert!(e.is_numeric(), "{e:?}"),
        }
    }
}

fn interior_instance(rng: &mut ChaCha8Rng) -> Option<PenaltyAuctionInstance> {
    let n = rng.random_range(2..=5);
    let se: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..=4.0)).collect();
    let wf = water_filling_oracle(&se, 10.0);
    wf.iter().all(|r| *r > 0.0).then(|| PenaltyAuctionInstance::new(10.0, se))
}

#[test]
fn iteration_matches_water_filling_on_interior_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut checked = 0;
    while checked < 30 {
        let Some(inst) = interior_instance(&mut rng) else { continue };
        let out = penalty_iteration(&inst, 0).unwrap();
        assert!(out.converged);
        let wf = water_filling_oracle(&inst.se, inst.total);
        for (a, b) in out.r.iter().zip(&wf) {
            assert!((a - b).abs() <= 1e-3 * inst.total, "{:?} vs {wf:?}", out.r);
        }
        let stationary = stationary_allocation(&out.q, inst.total);
        for (a, b) in out.r.iter().zip(&stationary) {
            assert!((a - b).abs() <= 10.0 * inst.tol);
        }
        // welfare improves on the equilibrium the flow started from
        let start = solve_ne_allocation(&inst.initial_penalties(), &inst.se, inst.total).unwrap();
        let start_bids = equilibrium_bids(&inst.initial_penalties(), &start, inst.total);
        let start_alloc = proportional_share(&start_bids, inst.total).unwrap();
        assert!(out.welfare >= social_welfare(&start_alloc, &inst.se) - 1e-12);
        let final_ne = solve_ne_allocation(&out.q, &inst.se, inst.total).unwrap();
        let final_alloc =
            proportional_share(&equilibrium_bids(&out.q, &final_ne, inst.total), inst.total).unwrap();
        assert!(out.welfare >= social_welfare(&final_alloc, &inst.se) - 1e-9);
        checked += 1;
    }
}

#[test]
fn symmetric_start_stays_symmetric() {
    let mut inst = PenaltyAuctionInstance::new(9.0, vec![2.0; 3]);
    inst.q0 = Some(vec![0.7; 3]);
    let out = penalty_iteration(&inst, 1).unwrap();
    for row in &out.trace {
        for r in &row.r {
            assert!((r - 3.0).abs() < 1e-9);
        }
    }
}

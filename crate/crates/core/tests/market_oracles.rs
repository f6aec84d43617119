use comp_market::market::{
    buyer_utility, clear, data_price_equivalent, equilibrium_price, need_from_deterioration,
    optimal_purchase, optimal_supply, seller_profit,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Best utility over `B ∈ [0, 40]` on a 1e-4 grid.
fn grid_best_purchase(wealth: f64, need: f64, price: f64) -> (f64, f64) {
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 0..=400_000u32 {
        let b = k as f64 * 1e-4;
        let u = buyer_utility(b, need, wealth, price).unwrap();
        if u > best.1 {
            best = (b, u);
        }
    }
    best
}

#[test]
fn purchase_matches_grid_oracle() {
    let (arg, _) = grid_best_purchase(500.0, 0.5, 25.0);
    assert!((arg - 10.0).abs() <= 1e-4);
    assert_eq!(optimal_purchase(500.0, 0.5, 25.0).unwrap(), 10.0);
}

#[test]
fn utility_at_twice_the_optimum_is_zero() {
    // maximizer at wb/p = 1; doubling it exhausts the utility
    let at_opt = buyer_utility(1.0, 1.0, 1.0, 1.0).unwrap();
    let at_twice = buyer_utility(2.0, 1.0, 1.0, 1.0).unwrap();
    assert!(at_opt > at_twice);
    assert_eq!(at_twice, 0.0);
}

#[test]
fn supply_matches_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let a = rng.random_range(0.05..5.0);
        let p = rng.random_range(0.05..20.0);
        let opt = optimal_supply(a, p);
        let best = seller_profit(opt, a, p).unwrap().profit;
        let step = 1e-4 * opt;
        for k in 0..=20_000u32 {
            let b = k as f64 * step;
            assert!(seller_profit(b, a, p).unwrap().profit <= best + 1e-12 * best.abs().max(1.0));
        }
    }
}

#[test]
fn reference_clearing_balances() {
    let c = clear(&[250.0], &[0.5; 4]).unwrap();
    assert!((c.price - 11.180_339_887_498_949).abs() < 1e-12);
    assert!((c.total_supply - 22.360_679_774_997_9).abs() < 1e-10);
    assert!((c.total_demand - c.total_supply).abs() < 1e-12);
}

proptest! {
    #[test]
    fn market_clears(
        bids in prop::collection::vec(1e-6f64..1e3, 1..20),
        cons in prop::collection::vec(1e-6f64..1e3, 1..8),
    ) {
        let p = equilibrium_price(&bids, &cons).unwrap();
        let demand: f64 = bids.iter().map(|b| b / p).sum();
        let supply: f64 = cons.iter().map(|a| optimal_supply(*a, p)).sum();
        prop_assert!((demand - supply).abs() <= 1e-9 * supply);
    }

    #[test]
    fn buyer_optimum_beats_neighbours(w in 1e-3f64..1e3, b in 1e-3f64..=1.0, p in 1e-3f64..1e3) {
        let opt = optimal_purchase(w, b, p).unwrap();
        let u = buyer_utility(opt, b, w, p).unwrap();
        for f in [1.0 - 1e-3, 1.0 + 1e-3] {
            prop_assert!(u > buyer_utility(opt * f, b, w, p).unwrap());
        }
        // the spend is exactly w·b
        prop_assert!((p * opt - w * b).abs() <= 1e-12 * w * b);
    }

    #[test]
    fn seller_optimum_beats_neighbours(a in 1e-3f64..1e3, p in 1e-3f64..1e3) {
        let opt = optimal_supply(a, p);
        let best = seller_profit(opt, a, p).unwrap().profit;
        for f in [1.0 - 1e-3, 1.0 + 1e-3] {
            prop_assert!(best > seller_profit(opt * f, a, p).unwrap().profit);
        }
    }

    #[test]
    fn price_scales_with_root_of_bids(
        bids in prop::collection::vec(1e-3f64..1e3, 1..10),
        cons in prop::collection::vec(1e-3f64..1e3, 1..5),
        k in 1e-3f64..1e3,
    ) {
        let p = equilibrium_price(&bids, &cons).unwrap();
        let scaled: Vec<f64> = bids.iter().map(|b| b * k).collect();
        let pk = equilibrium_price(&scaled, &cons).unwrap();
        prop_assert!((pk - k.sqrt() * p).abs() <= 1e-12 * pk);
    }

    #[test]
    fn need_monotone_in_deterioration(t1 in 0.01f64..30.0, t2 in 0.01f64..30.0) {
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let n_lo = need_from_deterioration(lo, 30.0).unwrap();
        let n_hi = need_from_deterioration(hi, 30.0).unwrap();
        prop_assert!(n_lo <= n_hi);
        prop_assert!(n_hi <= 1.0);
    }

    #[test]
    fn data_price_identity(p in 1e-3f64..1e3, s in 1e-3f64..10.0, b in 0.0f64..1e3) {
        let per_data = data_price_equivalent(p, s).unwrap();
        let paid = per_data * (b * s);
        prop_assert!((paid - p * b).abs() <= 1e-12 * (p * b).max(f64::MIN_POSITIVE));
    }
}

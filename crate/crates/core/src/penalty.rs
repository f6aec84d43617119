//! Proportional-Share allocation with a per-bid penalty.
//!
//! Each UE values bandwidth `r` at `ln(1 + r·SE)`. For a penalty vector `q` the
//! Nash-equilibrium allocation satisfies
//!
//! ```text
//! (R − r₁)v′₁(r₁)/q₁ = … = (R − rₙ)v′ₙ(rₙ)/qₙ,   Σ rᵢ = R.
//! ```
//!
//! Writing `xᵢ = (R − rᵢ)v′ᵢ(rᵢ) = ρᵢX` with `ρᵢ = qᵢ/Σq` and inverting the log
//! valuation gives `rᵢ = (R − ρᵢX/SEᵢ)/(1 + ρᵢX)`; the sum constraint leaves one
//! scalar equation in `X`, which is strictly decreasing and is solved by
//! bisection. Penalties are then moved along the discretized flow
//!
//! ```text
//! qᵢ ← qᵢ + δ[(R − rᵢ)/(n − 1) − R·qᵢ/Σq]
//! ```
//!
//! whose fixed point reproduces the welfare-maximizing (water-filling)
//! allocation on interior instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::decreasing_root;

pub const DEFAULT_DELTA: f64 = 0.01;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 1_000_000;
/// Relative bracket width at which the `X` bisection stops.
pub const ROOT_REL_TOL: f64 = 1e-12;

/// `log₂(1 + P·H/N₀)`.
pub fn shannon_spectral_efficiency(power: f64, gain: f64, noise_density: f64) -> Result<f64> {
    if !(noise_density > 0.0) {
        return Err(Error::domain(format!("noise density must be positive, got {noise_density}")));
    }
    if power < 0.0 || gain < 0.0 {
        return Err(Error::domain("power and gain must be non-negative"));
    }
    Ok((power * gain / noise_density).ln_1p() / std::f64::consts::LN_2)
}

pub fn log_valuation(r: f64, se: f64) -> Result<f64> {
    check_valuation_args(r, se)?;
    Ok((r * se).ln_1p())
}

/// `d/dr ln(1 + r·SE) = SE/(1 + r·SE)`.
pub fn log_valuation_derivative(r: f64, se: f64) -> Result<f64> {
    check_valuation_args(r, se)?;
    Ok(marginal(r, se))
}

fn check_valuation_args(r: f64, se: f64) -> Result<()> {
    if !(r >= 0.0) {
        return Err(Error::domain(format!("bandwidth must be non-negative, got {r}")));
    }
    if !(se > 0.0) {
        return Err(Error::domain(format!("spectral efficiency must be positive, got {se}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn marginal(r: f64, se: f64) -> f64 {
    se / (1.0 + r * se)
}

/// `Σ ln(1 + rᵢ·SEᵢ)`.
pub fn social_welfare(r: &[f64], se: &[f64]) -> f64 {
    r.iter().zip(se).map(|(r, s)| (r * s).ln_1p()).sum()
}

/// `rᵢ = R·bᵢ/Σb`.
pub fn proportional_share(bids: &[f64], total: f64) -> Result<Vec<f64>> {
    if bids.iter().any(|b| !(*b >= 0.0)) {
        return Err(Error::domain("bids must be non-negative"));
    }
    let sum: f64 = bids.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::domain("at least one bid must be positive"));
    }
    Ok(bids.iter().map(|b| total * b / sum).collect())
}

/// Equilibrium allocation for a fixed penalty vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeAllocation {
    /// Root of the scalar sum equation, `X = Σ xᵢ`.
    pub x: f64,
    pub shares: Vec<f64>,
    pub allocation: Vec<f64>,
}

fn ne_terms<'a>(shares: &'a [f64], se: &'a [f64], total: f64, x: f64) -> impl Iterator<Item = f64> + 'a {
    shares.iter().zip(se).map(move |(rho, s)| (total - rho * x / s) / (1.0 + rho * x))
}

/// Left side of the sum equation minus `R`; strictly decreasing in `x ≥ 0`.
pub fn ne_sum_residual(shares: &[f64], se: &[f64], total: f64, x: f64) -> f64 {
    ne_terms(shares, se, total, x).sum::<f64>() - total
}

pub fn solve_ne_allocation(q: &[f64], se: &[f64], total: f64) -> Result<NeAllocation> {
    let n = q.len();
    if n < 2 {
        return Err(Error::domain("need at least two UEs"));
    }
    if se.len() != n {
        return Err(Error::domain(format!("{} penalties but {} spectral efficiencies", n, se.len())));
    }
    if q.iter().any(|v| !(*v > 0.0)) || se.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::domain("penalties and spectral efficiencies must be positive"));
    }
    if !(total > 0.0) {
        return Err(Error::domain(format!("total bandwidth must be positive, got {total}")));
    }
    let q_sum: f64 = q.iter().sum();
    let shares: Vec<f64> = q.iter().map(|v| v / q_sum).collect();

    // f(0) = (n − 1)R > 0 and f → −R − Σ1/SEᵢ < 0; decreasing_root re-checks both.
    let x = decreasing_root(|x| ne_sum_residual(&shares, se, total, x), 1.0, ROOT_REL_TOL)?;

    let allocation: Vec<f64> = ne_terms(&shares, se, total, x).collect();
    if let Some((index, &value)) = allocation.iter().enumerate().find(|(_, r)| **r < 0.0) {
        return Err(Error::InfeasibleNe { index, value });
    }
    Ok(NeAllocation { x, shares, allocation })
}

/// Equilibrium bids behind an allocation: the common ratio `xᵢ/qᵢ` is the bid
/// total `Σb`, and each UE bids its share `rᵢ/R` of it.
pub fn equilibrium_bids(q: &[f64], ne: &NeAllocation, total: f64) -> Vec<f64> {
    let q_sum: f64 = q.iter().sum();
    let bid_total = ne.x / q_sum;
    ne.allocation.iter().map(|r| r / total * bid_total).collect()
}

/// Input to the penalty iteration, also the JSON instance format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyAuctionInstance {
    #[serde(rename = "R")]
    pub total: f64,
    pub se: Vec<f64>,
    /// Initial penalties; uniform `1/n` when absent.
    #[serde(default)]
    pub q0: Option<Vec<f64>>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

impl PenaltyAuctionInstance {
    pub fn new(total: f64, se: Vec<f64>) -> Self {
        Self { total, se, q0: None, delta: DEFAULT_DELTA, tol: DEFAULT_TOL, max_iters: DEFAULT_MAX_ITERS }
    }

    pub fn n(&self) -> usize {
        self.se.len()
    }

    pub fn initial_penalties(&self) -> Vec<f64> {
        match &self.q0 {
            Some(q) => q.clone(),
            None => vec![1.0 / self.n() as f64; self.n()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.n() < 2 {
            bad.push("se: need at least two UEs".to_string());
        }
        if self.se.iter().any(|s| !(*s > 0.0)) {
            bad.push("se: every entry must be positive".to_string());
        }
        if !(self.total > 0.0) {
            bad.push("R: must be positive".to_string());
        }
        if let Some(q) = &self.q0 {
            if q.len() != self.n() {
                bad.push(format!("q0: expected {} entries, got {}", self.n(), q.len()));
            }
            if q.iter().any(|v| !(*v > 0.0)) {
                bad.push("q0: every entry must be positive".to_string());
            }
        }
        if !(self.delta > 0.0) {
            bad.push("delta: must be positive".to_string());
        }
        if !(self.tol > 0.0) {
            bad.push("tol: must be positive".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}

/// One recorded iteration of the penalty flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltyTraceRow {
    pub iter: usize,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub x: f64,
    pub welfare: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltyOutcome {
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub x: f64,
    pub welfare: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `max |R − rᵢ − (n − 1)R·qᵢ/Σq|` at the returned point.
    pub stationarity_residual: f64,
    pub trace: Vec<PenaltyTraceRow>,
}

/// Allocation implied by a stationary penalty vector, `R[1 − (n − 1)qᵢ/Σq]`.
pub fn stationary_allocation(q: &[f64], total: f64) -> Vec<f64> {
    let n = q.len() as f64;
    let sum: f64 = q.iter().sum();
    q.iter().map(|qi| total * (1.0 - (n - 1.0) * qi / sum)).collect()
}

fn drift(q: &[f64], r: &[f64], total: f64) -> Vec<f64> {
    let m = (q.len() - 1) as f64;
    let sum: f64 = q.iter().sum();
    q.iter().zip(r).map(|(qi, ri)| (total - ri) / m - total * qi / sum).collect()
}

/// Runs the discrete penalty flow to a stationary point.
///
/// Stops once `(n − 1)·max|driftᵢ| < tol`, which is exactly the gap between the
/// equilibrium allocation and `R[1 − (n − 1)qᵢ/Σq]`. Every `record_every`-th
/// iteration is kept in the trace (0 keeps none).
pub fn penalty_iteration(instance: &PenaltyAuctionInstance, record_every: usize) -> Result<PenaltyOutcome> {
    instance.validate()?;
    let total = instance.total;
    let se = &instance.se;
    let m = (instance.n() - 1) as f64;
    let mut q = instance.initial_penalties();
    let mut trace = Vec::new();

    let mut iter = 0;
    loop {
        let ne = solve_ne_allocation(&q, se, total)?;
        let d = drift(&q, &ne.allocation, total);
        let residual = m * d.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let converged = residual < instance.tol;
        let record = record_every > 0 && (iter % record_every == 0 || converged);
        if record {
            trace.push(PenaltyTraceRow {
                iter,
                q: q.clone(),
                r: ne.allocation.clone(),
                x: ne.x,
                welfare: social_welfare(&ne.allocation, se),
            });
        }
        if converged || iter >= instance.max_iters {
            return Ok(PenaltyOutcome {
                welfare: social_welfare(&ne.allocation, se),
                q,
                r: ne.allocation,
                x: ne.x,
                iterations: iter,
                converged,
                stationarity_residual: residual,
                trace,
            });
        }
        for (qi, di) in q.iter_mut().zip(&d) {
            *qi += instance.delta * di;
        }
        if let Some(bad) = q.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::numeric(format!(
                "penalty became {bad} at iteration {}; step size too large",
                iter + 1
            )));
        }
        iter += 1;
    }
}

/// Closed-form maximizer of `Σ ln(1 + rᵢSEᵢ)` subject to `Σ rᵢ ≤ R`, `rᵢ ≥ 0`.
///
/// `rᵢ = max(0, μ − 1/SEᵢ)`, where the water level `μ` is set by growing the
/// active set from the strongest UE until the next UE would sit above water.
pub fn water_filling_oracle(se: &[f64], total: f64) -> Vec<f64> {
    let floors: Vec<f64> = se.iter().map(|s| 1.0 / s).collect();
    let mut idx: Vec<usize> = (0..se.len()).collect();
    idx.sort_by(|&a, &b| floors[a].total_cmp(&floors[b]));

    let mut level = 0.0;
    let mut floor_sum = 0.0;
    for (k, &i) in idx.iter().enumerate() {
        let candidate = (total + floor_sum + floors[i]) / (k + 1) as f64;
        if k > 0 && candidate <= floors[i] {
            break;
        }
        floor_sum += floors[i];
        level = candidate;
    }
    floors.iter().map(|f| (level - f).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon_spectral_efficiency(0.0, 3.0, 1.0).unwrap(), 0.0);
        assert!((shannon_spectral_efficiency(1.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((shannon_spectral_efficiency(7.0, 2.0, 2.0).unwrap() - 3.0).abs() < 1e-15);
        assert!(shannon_spectral_efficiency(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(log_valuation(0.0, 2.0).unwrap(), 0.0);
        assert!((log_valuation(std::f64::consts::E - 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(log_valuation(-0.1, 1.0).is_err());
        assert_eq!(log_valuation_derivative(1.0, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn proportional_share_examples() {
        assert_eq!(proportional_share(&[1.0; 4], 100.0).unwrap(), vec![25.0; 4]);
        assert_eq!(proportional_share(&[3.0, 1.0], 8.0).unwrap(), vec![6.0, 2.0]);
        let a = proportional_share(&[0.3, 1.1, 2.0], 5.0).unwrap();
        let b = proportional_share(&[2.1, 7.7, 14.0], 5.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!(proportional_share(&[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn ne_hand_case() {
        let ne = solve_ne_allocation(&[1.0, 1.0], &[1.0, 1.0], 1.0).unwrap();
        assert!((ne.x - 2.0 / 3.0).abs() < 1e-10);
        assert!((ne.allocation[0] - 0.5).abs() < 1e-10);
        assert!((ne.allocation[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn ne_symmetric_splits_evenly() {
        for n in 2..8 {
            let ne = solve_ne_allocation(&vec![0.3; n], &vec![2.5; n], 12.0).unwrap();
            for r in &ne.allocation {
                assert!((r - 12.0 / n as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ne_reports_infeasible() {
        // Two strong UEs crowd out a weak one: r = (−2/3, 5/6, 5/6).
        let err = solve_ne_allocation(&[1.0; 3], &[0.1, 10.0, 10.0], 1.0).unwrap_err();
        match err {
            Error::InfeasibleNe { index: 0, value } => assert!((value + 2.0 / 3.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        // With two UEs every allocation stays inside (0, R).
        assert!(solve_ne_allocation(&[100.0, 1.0], &[0.1, 10.0], 1.0).is_ok());
    }

    #[test]
    fn ne_rejects_bad_input() {
        assert!(solve_ne_allocation(&[1.0], &[1.0], 1.0).is_err());
        assert!(solve_ne_allocation(&[1.0, 0.0], &[1.0, 1.0], 1.0).is_err());
        assert!(solve_ne_allocation(&[1.0, 1.0], &[1.0], 1.0).is_err());
    }

    #[test]
    fn water_filling_examples() {
        assert_eq!(water_filling_oracle(&[2.0; 4], 8.0), vec![2.0; 4]);
        let r = water_filling_oracle(&[1.0, 4.0], 1.0);
        assert!((r[0] - 0.125).abs() < 1e-15 && (r[1] - 0.875).abs() < 1e-15);
        let r = water_filling_oracle(&[10.0, 0.01], 0.5);
        assert!((r[0] - 0.5).abs() < 1e-15);
        assert_eq!(r[1], 0.0);
    }

    #[test]
    fn iteration_symmetric_instance() {
        let out = penalty_iteration(&PenaltyAuctionInstance::new(6.0, vec![1.5; 3]), 0).unwrap();
        assert!(out.converged);
        for r in &out.r {
            assert!((r - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn iteration_two_ue_hand_case() {
        let out = penalty_iteration(&PenaltyAuctionInstance::new(1.0, vec![1.0, 4.0]), 100).unwrap();
        assert!(out.converged, "{} iterations", out.iterations);
        assert!((out.r[0] - 0.125).abs() < 1e-3);
        assert!((out.r[1] - 0.875).abs() < 1e-3);
        assert!(out.stationarity_residual < 1e-8);
        assert_eq!(out.trace.first().unwrap().iter, 0);
        assert_eq!(out.trace.last().unwrap().iter, out.iterations);
    }

    #[test]
    fn iteration_reports_non_convergence() {
        let mut inst = PenaltyAuctionInstance::new(1.0, vec![1.0, 4.0]);
        inst.max_iters = 3;
        let out = penalty_iteration(&inst, 0).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }

    #[test]
    fn instance_validation_lists_fields() {
        let mut inst = PenaltyAuctionInstance::new(-1.0, vec![1.0]);
        inst.delta = 0.0;
        match inst.validate() {
            Err(Error::Config(fields)) => assert_eq!(fields.len(), 3),
            other => panic!("{other:?}"),
        }
    }
}

//! The simplified iterative bidding scheme for Proportional-Share with penalty,
//! and an executable account of why it does not work.
//!
//! The scheme keeps four vectors `μ, q, b, r` and updates them in this order:
//!
//! ```text
//! μᵢ ← 1 − bᵢqᵢ / (rᵢv′ᵢ(rᵢ))
//! qᵢ ← qᵢ + δ[(R − rᵢ)/(n − 1) − R·qᵢ/Σq]
//! bᵢ ← rᵢv′ᵢ(rᵢ)(1 − μᵢ) / qᵢ
//! rᵢ ← R·bᵢ/Σb
//! ```
//!
//! The first and third lines cancel: `bᵢqᵢ` never changes from its initial value
//! `cᵢ = rᵢ⁽⁰⁾v′ᵢ(rᵢ⁽⁰⁾)`. The allocation is therefore `R(cᵢ/qᵢ)/Σⱼ(cⱼ/qⱼ)` at
//! every step and the whole run is driven by `c`, i.e. by the initialization,
//! rather than by the valuations.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::{marginal, water_filling_oracle};

pub const DEFAULT_DELTA: f64 = 0.01;
pub const DEFAULT_Q0: f64 = 0.1;
pub const DEFAULT_ITERS: usize = 100_000;
/// A run stops early once the step in `q` and in `r/R` falls below this.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Trailing window used to classify a run that did not converge.
pub const DIAGNOSIS_WINDOW: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryClass {
    Converged,
    Oscillating,
    Drifting,
}

/// Run settings shared by the full and reduced forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub delta: f64,
    pub iters: usize,
    pub tol: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self { delta: DEFAULT_DELTA, iters: DEFAULT_ITERS, tol: DEFAULT_TOL }
    }
}

/// Full history of one run. Index `k` of each vector holds iteration `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlawedAuctionTrace {
    pub total: f64,
    pub se: Vec<f64>,
    pub c: Vec<f64>,
    pub delta: f64,
    pub q: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub iterations: usize,
    pub class: TrajectoryClass,
}

impl FlawedAuctionTrace {
    pub fn final_allocation(&self) -> &[f64] {
        self.r.last().expect("trace holds the initial state")
    }

    /// Largest relative deviation of `bᵢqᵢ` from `cᵢ` over the whole run.
    pub fn invariant_residual(&self) -> f64 {
        self.b
            .iter()
            .zip(&self.q)
            .flat_map(|(b, q)| b.iter().zip(q).zip(&self.c).map(|((b, q), c)| (b * q - c).abs() / c))
            .fold(0.0, f64::max)
    }
}

fn check_common(q0: &[f64], total: f64, settings: &RunSettings) -> Result<()> {
    if q0.len() < 2 {
        return Err(Error::domain("need at least two UEs"));
    }
    if q0.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::domain("initial penalties must be positive"));
    }
    if !(total > 0.0) {
        return Err(Error::domain("total bandwidth must be positive"));
    }
    if !(settings.delta > 0.0) {
        return Err(Error::domain("step size must be positive"));
    }
    Ok(())
}

fn penalty_step(q: &[f64], r: &[f64], total: f64, delta: f64, iter: usize) -> Result<Vec<f64>> {
    let m = (q.len() - 1) as f64;
    let sum: f64 = q.iter().sum();
    let next: Vec<f64> =
        q.iter().zip(r).map(|(qi, ri)| qi + delta * ((total - ri) / m - total * qi / sum)).collect();
    check_penalties(&next, iter)?;
    Ok(next)
}

fn check_penalties(q: &[f64], iter: usize) -> Result<()> {
    match q.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        Some(bad) => {
            Err(Error::numeric(format!("penalty became {bad} at iteration {iter}; step size too large")))
        }
        None => Ok(()),
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs the scheme literally from `r0`, `q0`.
///
/// Stops after `settings.iters` iterations, or earlier once both `max|Δq|` and
/// `max|Δr|/R` drop below `settings.tol` (set `tol` to zero to always run the
/// full count).
pub fn flawed_run(
    r0: &[f64],
    q0: &[f64],
    se: &[f64],
    total: f64,
    settings: &RunSettings,
) -> Result<FlawedAuctionTrace> {
    check_common(q0, total, settings)?;
    let n = q0.len();
    if r0.len() != n || se.len() != n {
        return Err(Error::domain("r0, q0 and se must have equal length"));
    }
    if r0.iter().any(|v| !(*v > 0.0)) || se.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::domain("initial allocation and spectral efficiencies must be positive"));
    }

    let worth = |r: &[f64]| -> Vec<f64> { r.iter().zip(se).map(|(r, s)| r * marginal(*r, *s)).collect() };
    let c = worth(r0);
    let b0: Vec<f64> = c.iter().zip(q0).map(|(c, q)| c / q).collect();

    let mut qs = vec![q0.to_vec()];
    let mut mus = vec![vec![0.0; n]];
    let mut bs = vec![b0];
    let mut rs = vec![r0.to_vec()];
    let mut steps = Vec::new();

    for k in 1..=settings.iters {
        let (q_prev, b_prev, r_prev) = (&qs[k - 1], &bs[k - 1], &rs[k - 1]);
        let w_prev = worth(r_prev);
        let mu: Vec<f64> =
            b_prev.iter().zip(q_prev).zip(&w_prev).map(|((b, q), w)| 1.0 - b * q / w).collect();
        let q = penalty_step(q_prev, r_prev, total, settings.delta, k)?;
        let b: Vec<f64> = w_prev.iter().zip(&mu).zip(&q).map(|((w, mu), q)| w * (1.0 - mu) / q).collect();
        let b_sum: f64 = b.iter().sum();
        let r: Vec<f64> = b.iter().map(|b| total * b / b_sum).collect();
        if r.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::numeric(format!("allocation left (0, R) at iteration {k}")));
        }
        let sig = step_signature(&q, q_prev, &r, r_prev, total);
        let step = sig.size;
        steps.push(sig);
        qs.push(q);
        mus.push(mu);
        bs.push(b);
        rs.push(r);
        if step < settings.tol {
            break;
        }
    }

    let iterations = qs.len() - 1;
    Ok(FlawedAuctionTrace {
        total,
        se: se.to_vec(),
        c,
        delta: settings.delta,
        class: classify(&steps, settings.tol),
        q: qs,
        mu: mus,
        b: bs,
        r: rs,
        iterations,
    })
}

/// Allocation trajectory of the reduced, `q`-only form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedTrajectory {
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub iterations: usize,
    pub class: TrajectoryClass,
}

fn reduced_allocation(c: &[f64], q: &[f64], total: f64) -> Vec<f64> {
    let h: f64 = c.iter().zip(q).map(|(c, q)| c / q).sum();
    c.iter().zip(q).map(|(c, q)| total * (c / q) / h).collect()
}

/// Iterates only the penalties, with `rᵢ = R(cᵢ/qᵢ)/H` and
/// `qᵢ ← qᵢ + δ·R/(n − 1)·(1 − rᵢ/R − qᵢ/Q)`, `Q = Σq/(n − 1)`.
///
/// The allocation at iteration 0 is `R(cᵢ/qᵢ⁽⁰⁾)/H⁽⁰⁾` unless `r0` is given; the
/// literal scheme starts from an arbitrary `r0`, which only coincides with the
/// formula when `r0` is proportional to `c/q0`.
pub fn reduced_form_run(
    c: &[f64],
    q0: &[f64],
    total: f64,
    r0: Option<&[f64]>,
    settings: &RunSettings,
) -> Result<ReducedTrajectory> {
    check_common(q0, total, settings)?;
    let n = q0.len();
    if c.len() != n {
        return Err(Error::domain("c and q0 must have equal length"));
    }
    if c.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::domain("constants c must be positive"));
    }
    let m = (n - 1) as f64;
    let first = match r0 {
        Some(r) if r.len() == n => r.to_vec(),
        Some(_) => return Err(Error::domain("r0 must match the length of c")),
        None => reduced_allocation(c, q0, total),
    };

    let mut qs = vec![q0.to_vec()];
    let mut rs = vec![first];
    let mut steps = Vec::new();
    for k in 1..=settings.iters {
        let (q_prev, r_prev) = (&qs[k - 1], &rs[k - 1]);
        let big_q = q_prev.iter().sum::<f64>() / m;
        let q: Vec<f64> = q_prev
            .iter()
            .zip(r_prev)
            .map(|(qi, ri)| qi + settings.delta * total / m * (1.0 - ri / total - qi / big_q))
            .collect();
        check_penalties(&q, k)?;
        let r = reduced_allocation(c, &q, total);
        let sig = step_signature(&q, q_prev, &r, r_prev, total);
        let step = sig.size;
        steps.push(sig);
        qs.push(q);
        rs.push(r);
        if step < settings.tol {
            break;
        }
    }
    Ok(ReducedTrajectory { iterations: qs.len() - 1, class: classify(&steps, settings.tol), q: qs, r: rs })
}

struct StepSignature {
    size: f64,
    signs: Vec<bool>,
}

/// Step size is the larger of `max|Δq|` and `max|Δr|/R`, so a penalty vector
/// that happens to sit still for one update does not end the run while the
/// allocation is still moving.
fn step_signature(q: &[f64], q_prev: &[f64], r: &[f64], r_prev: &[f64], total: f64) -> StepSignature {
    StepSignature {
        size: max_abs_diff(q, q_prev).max(max_abs_diff(r, r_prev) / total),
        signs: q.iter().zip(q_prev).map(|(a, b)| a >= b).collect(),
    }
}

/// Converged if the last step is below `tol`. Otherwise oscillating when the
/// trailing window sees the direction of `q` flip at least every other step,
/// and drifting when it mostly keeps going the same way.
fn classify(steps: &[StepSignature], tol: f64) -> TrajectoryClass {
    match steps.last() {
        None => return TrajectoryClass::Converged,
        Some(s) if s.size < tol => return TrajectoryClass::Converged,
        _ => {}
    }
    let window = &steps[steps.len().saturating_sub(DIAGNOSIS_WINDOW)..];
    if window.len() < 2 {
        return TrajectoryClass::Drifting;
    }
    let flips = window.windows(2).filter(|w| w[0].signs != w[1].signs).count();
    if 2 * flips >= window.len() - 1 {
        TrajectoryClass::Oscillating
    } else {
        TrajectoryClass::Drifting
    }
}

/// Per-initialization summary inside a [`PathologyReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathologyRun {
    pub r0: Vec<f64>,
    pub c: Vec<f64>,
    pub final_allocation: Vec<f64>,
    pub final_penalties: Vec<f64>,
    pub iterations: usize,
    pub class: TrajectoryClass,
    pub invariant_residual: f64,
    pub distance_from_optimum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathologyReport {
    pub se: Vec<f64>,
    pub total: f64,
    pub q0: Vec<f64>,
    pub delta: f64,
    pub optimum: Vec<f64>,
    pub runs: Vec<PathologyRun>,
    /// `pairwise[i][j]`: max-norm distance between final allocations of runs `i` and `j`.
    pub pairwise: Vec<Vec<f64>>,
    pub max_pairwise: f64,
    pub max_invariant_residual: f64,
}

/// Runs the scheme once per initial allocation with everything else held fixed.
pub fn pathology_report(
    se: &[f64],
    total: f64,
    q0: &[f64],
    r0_samples: &[Vec<f64>],
    settings: &RunSettings,
) -> Result<PathologyReport> {
    if r0_samples.len() < 2 {
        return Err(Error::domain("need at least two initial allocations"));
    }
    let optimum = water_filling_oracle(se, total);
    let runs = r0_samples
        .iter()
        .map(|r0| {
            let trace = flawed_run(r0, q0, se, total, settings)?;
            let fin = trace.final_allocation().to_vec();
            Ok(PathologyRun {
                r0: r0.clone(),
                c: trace.c.clone(),
                distance_from_optimum: max_abs_diff(&fin, &optimum),
                final_penalties: trace.q.last().cloned().unwrap_or_default(),
                invariant_residual: trace.invariant_residual(),
                iterations: trace.iterations,
                class: trace.class,
                final_allocation: fin,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairwise: Vec<Vec<f64>> = runs
        .iter()
        .map(|a| runs.iter().map(|b| max_abs_diff(&a.final_allocation, &b.final_allocation)).collect())
        .collect();
    let max_pairwise = pairwise.iter().flatten().copied().fold(0.0, f64::max);
    let max_invariant_residual = runs.iter().map(|r| r.invariant_residual).fold(0.0, f64::max);
    Ok(PathologyReport {
        se: se.to_vec(),
        total,
        q0: q0.to_vec(),
        delta: settings.delta,
        optimum,
        runs,
        pairwise,
        max_pairwise,
        max_invariant_residual,
    })
}

/// JSON instance for the pathology demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlawedInstance {
    #[serde(rename = "R")]
    pub total: f64,
    pub se: Vec<f64>,
    /// Initial penalties; every entry is `DEFAULT_Q0` when absent.
    #[serde(default)]
    pub q0: Option<Vec<f64>>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Explicit initial allocations, each positive and summing to `R`.
    #[serde(default)]
    pub r0: Vec<Vec<f64>>,
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}
fn default_iters() -> usize {
    DEFAULT_ITERS
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl FlawedInstance {
    pub fn n(&self) -> usize {
        self.se.len()
    }

    pub fn initial_penalties(&self) -> Vec<f64> {
        self.q0.clone().unwrap_or_else(|| vec![DEFAULT_Q0; self.n()])
    }

    pub fn settings(&self) -> RunSettings {
        RunSettings { delta: self.delta, iters: self.iters, tol: self.tol }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let mut bad = Vec::new();
        if n < 2 {
            bad.push("se: need at least two UEs".to_string());
        }
        if self.se.iter().any(|s| !(*s > 0.0)) {
            bad.push("se: every entry must be positive".to_string());
        }
        if !(self.total > 0.0 && self.total.is_finite()) {
            bad.push("R: must be positive".to_string());
        }
        if let Some(q) = &self.q0 {
            if q.len() != n || q.iter().any(|v| !(*v > 0.0)) {
                bad.push(format!("q0: need {n} positive entries"));
            }
        }
        if !(self.delta > 0.0) {
            bad.push("delta: must be positive".to_string());
        }
        if !(self.tol >= 0.0) {
            bad.push("tol: must be non-negative".to_string());
        }
        for (k, r) in self.r0.iter().enumerate() {
            let sum: f64 = r.iter().sum();
            if r.len() != n || r.iter().any(|v| !(*v > 0.0)) || (sum - self.total).abs() > 1e-9 * self.total {
                bad.push(format!("r0[{k}]: need {n} positive entries summing to R"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}

/// `count` allocations drawn uniformly from the open simplex scaled to `total`.
pub fn sample_initializations<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    total: f64,
    count: usize,
) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
            let sum: f64 = raw.iter().sum();
            let mut r: Vec<f64> = raw.iter().map(|v| total * v / sum).collect();
            // keep Σr = R exact up to rounding by absorbing the residue in the largest entry
            let resid = total - r.iter().sum::<f64>();
            let big = (0..n).max_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap_or(0);
            r[big] += resid;
            r
        })
        .collect()
}

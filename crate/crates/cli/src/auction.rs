//! One-shot market clearing and the two Proportional-Share auction demos.

use comp_market::flawed::{
    flawed_run, pathology_report, sample_initializations, FlawedInstance, PathologyReport,
};
use comp_market::market::{clear, Clearing};
use comp_market::penalty::{penalty_iteration, water_filling_oracle, PenaltyAuctionInstance, PenaltyOutcome};
use comp_market::simulator::stream;
use comp_market::Error;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{num, Table};

/// Stream id for randomly drawn initial allocations.
const INIT_STREAM: u64 = 16;

/// Explicit bids and seller conservation parameters for a single clearing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketInstance {
    pub bids: Vec<f64>,
    pub conservations: Vec<f64>,
}

pub fn run_market(instance: &MarketInstance) -> CliResult<Clearing> {
    match clear(&instance.bids, &instance.conservations) {
        Ok(c) => Ok(c),
        Err(Error::NoMarket) => Err(CliError::Config("no market: every bid is zero".into())),
        Err(e) => Err(e.into()),
    }
}

pub fn clearing_table(c: &Clearing, instance: &MarketInstance) -> Table {
    let mut t = Table::new(["side", "index", "input", "amount", "price"]);
    for (i, (bid, d)) in instance.bids.iter().zip(&c.demands).enumerate() {
        t.push(vec!["buyer".into(), i.to_string(), num(*bid), num(*d), num(c.price)]);
    }
    for (j, (a, s)) in instance.conservations.iter().zip(&c.supplies).enumerate() {
        t.push(vec!["seller".into(), j.to_string(), num(*a), num(*s), num(c.price)]);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltySummary {
    pub instance: PenaltyAuctionInstance,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub x: f64,
    pub welfare: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stationarity_residual: f64,
    pub water_filling: Vec<f64>,
    pub max_gap_to_water_filling: f64,
}

pub fn run_penalty(
    instance: &PenaltyAuctionInstance,
    record_every: usize,
) -> CliResult<(PenaltySummary, PenaltyOutcome)> {
    instance.validate()?;
    let out = penalty_iteration(instance, record_every)?;
    let optimum = water_filling_oracle(&instance.se, instance.total);
    let gap = out.r.iter().zip(&optimum).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let summary = PenaltySummary {
        instance: instance.clone(),
        q: out.q.clone(),
        r: out.r.clone(),
        x: out.x,
        welfare: out.welfare,
        iterations: out.iterations,
        converged: out.converged,
        stationarity_residual: out.stationarity_residual,
        water_filling: optimum,
        max_gap_to_water_filling: gap,
    };
    Ok((summary, out))
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

pub fn penalty_trace_table(out: &PenaltyOutcome, n: usize) -> Table {
    let mut header = vec!["iter".to_string()];
    header.extend(indexed("q", n));
    header.extend(indexed("r", n));
    header.extend(["X".to_string(), "welfare".to_string()]);
    let mut t = Table::new(header);
    for row in &out.trace {
        let mut cells = vec![row.iter.to_string()];
        cells.extend(row.q.iter().chain(&row.r).map(|v| num(*v)));
        cells.extend([num(row.x), num(row.welfare)]);
        t.push(cells);
    }
    t
}

pub fn penalty_summary_table(s: &PenaltySummary) -> Table {
    let n = s.r.len();
    let mut header: Vec<String> = ["iterations", "converged", "stationarity_residual", "X", "welfare"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(indexed("q", n));
    header.extend(indexed("r", n));
    header.extend(indexed("water_filling", n));
    let mut t = Table::new(header);
    let mut row = vec![
        s.iterations.to_string(),
        s.converged.to_string(),
        num(s.stationarity_residual),
        num(s.x),
        num(s.welfare),
    ];
    row.extend(s.q.iter().chain(&s.r).chain(&s.water_filling).map(|v| num(*v)));
    t.push(row);
    t
}

/// Initial allocations for the demo: those listed in the instance followed by
/// `inits` draws from the simplex seeded by `seed`.
pub fn initializations(instance: &FlawedInstance, inits: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut samples = instance.r0.clone();
    let mut rng = stream(seed, INIT_STREAM);
    samples.extend(sample_initializations(&mut rng, instance.n(), instance.total, inits));
    samples
}

pub fn run_flawed(instance: &FlawedInstance, samples: &[Vec<f64>]) -> CliResult<PathologyReport> {
    instance.validate()?;
    if samples.len() < 2 {
        return Err(CliError::Config(format!(
            "need at least two initial allocations, got {} (add r0 entries or --inits)",
            samples.len()
        )));
    }
    Ok(pathology_report(
        &instance.se,
        instance.total,
        &instance.initial_penalties(),
        samples,
        &instance.settings(),
    )?)
}

pub fn pathology_table(report: &PathologyReport) -> Table {
    let n = report.se.len();
    let mut header = vec!["run".to_string()];
    header.extend(indexed("r0_", n));
    header.extend(indexed("final_r", n));
    header.extend(
        ["iterations", "class", "invariant_residual", "distance_from_optimum"].iter().map(|s| s.to_string()),
    );
    let mut t = Table::new(header);
    for (k, run) in report.runs.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(run.r0.iter().chain(&run.final_allocation).map(|v| num(*v)));
        let class = serde_json::to_value(run.class)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        row.extend([
            run.iterations.to_string(),
            class,
            num(run.invariant_residual),
            num(run.distance_from_optimum),
        ]);
        t.push(row);
    }
    t
}

/// Full per-iteration trajectories of every run, one row per (run, iteration).
pub fn flawed_trace_table(instance: &FlawedInstance, samples: &[Vec<f64>]) -> CliResult<Table> {
    let n = instance.n();
    let mut header = vec!["run".to_string(), "iter".to_string()];
    header.extend(indexed("q", n));
    header.extend(indexed("mu", n));
    header.extend(indexed("b", n));
    header.extend(indexed("r", n));
    let mut t = Table::new(header);
    let q0 = instance.initial_penalties();
    for (k, r0) in samples.iter().enumerate() {
        let trace = flawed_run(r0, &q0, &instance.se, instance.total, &instance.settings())?;
        for it in 0..=trace.iterations {
            let mut row = vec![k.to_string(), it.to_string()];
            row.extend(
                trace.q[it]
                    .iter()
                    .chain(&trace.mu[it])
                    .chain(&trace.b[it])
                    .chain(&trace.r[it])
                    .map(|v| num(*v)),
            );
            t.push(row);
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn market_reference_example() {
        let inst = MarketInstance { bids: vec![50.0; 10], conservations: vec![0.5; 4] };
        let c = run_market(&inst).unwrap();
        assert!((c.price - 250f64.sqrt()).abs() < 1e-12);
        assert_eq!(clearing_table(&c, &inst).len(), 14);
    }

    #[test]
    fn zero_bids_are_a_config_error() {
        let inst = MarketInstance { bids: vec![0.0, 0.0], conservations: vec![1.0] };
        assert_eq!(run_market(&inst).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn infeasible_equilibrium_exits_two() {
        let inst = PenaltyAuctionInstance {
            q0: Some(vec![1.0, 1.0, 1.0]),
            ..PenaltyAuctionInstance::new(1.0, vec![0.1, 10.0, 10.0])
        };
        assert_eq!(run_penalty(&inst, 0).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn demo_needs_two_starts() {
        let inst: FlawedInstance =
            serde_json::from_str(r#"{"R": 1, "se": [1, 1], "r0": [[0.5, 0.5]]}"#).unwrap();
        assert!(run_flawed(&inst, &initializations(&inst, 0, 0)).is_err());
        let samples = initializations(&inst, 3, 0);
        assert_eq!(samples.len(), 4);
        assert_eq!(samples, initializations(&inst, 3, 0));
        assert_eq!(run_flawed(&inst, &samples).unwrap().runs.len(), 4);
    }
}

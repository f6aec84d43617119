//! Cluster simulation runs and the budget / bandwidth sweeps.

use std::path::Path;

use comp_market::simulator::{run_baseline, run_simulation, RunKind, ScenarioConfig, SimulationReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliResult;
use crate::output::{num, opt_num, Table};

/// Reads a scenario from JSON, or takes the defaults when no path is given.
pub fn load_config(path: Option<&Path>) -> CliResult<ScenarioConfig> {
    match path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| crate::error::CliError::io(path, e))?;
            Ok(ScenarioConfig::from_json(&text)?)
        }
        None => Ok(ScenarioConfig::default()),
    }
}

pub fn run_kind(config: &ScenarioConfig, kind: RunKind) -> CliResult<SimulationReport> {
    Ok(match kind {
        RunKind::Market => run_simulation(config)?,
        RunKind::Baseline => run_baseline(config)?,
    })
}

/// One row per epoch: totals and every UE's remaining budget.
pub fn epoch_table(report: &SimulationReport) -> Table {
    let n = report.config.n_ues;
    let mut header: Vec<String> =
        ["epoch", "price", "total_bid", "total_sold", "total_data"].iter().map(|s| s.to_string()).collect();
    header.extend((0..n).map(|i| format!("budget_ue{i}")));
    let mut table = Table::new(header);
    for e in &report.epochs {
        let mut row = vec![
            e.epoch.to_string(),
            opt_num(e.price),
            num(e.total_bid),
            num(e.total_sold),
            num(e.total_data),
        ];
        row.extend(e.ues.iter().map(|u| num(u.budget)));
        table.push(row);
    }
    table
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary<'a> {
    pub kind: RunKind,
    pub seed: u64,
    pub epochs: u64,
    pub market_total: f64,
    pub baseline_total: f64,
    pub saturated_reference: f64,
    pub arrived_total: f64,
    pub markets_held: usize,
    pub final_budgets: Vec<f64>,
    pub config: &'a ScenarioConfig,
}

impl<'a> RunSummary<'a> {
    pub fn of(report: &'a SimulationReport) -> Self {
        Self {
            kind: report.kind,
            seed: report.seed,
            epochs: report.config.epochs,
            market_total: report.market_total,
            baseline_total: report.baseline_total,
            saturated_reference: report.saturated_reference,
            arrived_total: report.arrived_total,
            markets_held: report.markets_held(),
            final_budgets: report.final_budgets(),
            config: &report.config,
        }
    }
}

/// Cells of a sweep. Every (value, epochs, seed) triple is one market
/// run paired with a baseline over identical traffic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPlan {
    pub budgets: Vec<f64>,
    pub epochs: Vec<u64>,
    pub seeds: Vec<u64>,
    /// Total cluster bandwidth values, split evenly over the BSs.
    pub bandwidths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub budget: f64,
    pub total_bandwidth: f64,
    pub epochs: u64,
    pub seed: u64,
    pub market_total: f64,
    pub baseline_total: f64,
    pub saturated_reference: f64,
    pub final_budgets: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Budget,
    Bandwidth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianRow {
    pub sweep: SweepAxis,
    pub value: f64,
    pub epochs: u64,
    pub seeds: usize,
    pub median_market: f64,
    pub median_baseline: f64,
    pub saturated_reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub budget_rows: Vec<SweepRow>,
    pub bandwidth_rows: Vec<SweepRow>,
    pub medians: Vec<MedianRow>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

fn run_cells(cells: Vec<ScenarioConfig>) -> CliResult<Vec<SweepRow>> {
    // Cells are independent; the indexed collect keeps row order fixed.
    cells
        .into_par_iter()
        .map(|cfg| {
            let rep = run_simulation(&cfg)?;
            Ok(SweepRow {
                budget: cfg.initial_budget,
                total_bandwidth: cfg.cluster_capacity(),
                epochs: cfg.epochs,
                seed: cfg.seed,
                market_total: rep.market_total,
                baseline_total: rep.baseline_total,
                saturated_reference: rep.saturated_reference,
                final_budgets: rep.final_budgets(),
            })
        })
        .collect()
}

fn medians_of(rows: &[SweepRow], axis: SweepAxis) -> Vec<MedianRow> {
    let key = |r: &SweepRow| match axis {
        SweepAxis::Budget => r.budget,
        SweepAxis::Bandwidth => r.total_bandwidth,
    };
    let mut groups: Vec<(f64, u64)> = Vec::new();
    for r in rows {
        if !groups.contains(&(key(r), r.epochs)) {
            groups.push((key(r), r.epochs));
        }
    }
    groups
        .into_iter()
        .map(|(value, epochs)| {
            let cell: Vec<&SweepRow> =
                rows.iter().filter(|r| key(r) == value && r.epochs == epochs).collect();
            let market: Vec<f64> = cell.iter().map(|r| r.market_total).collect();
            let baseline: Vec<f64> = cell.iter().map(|r| r.baseline_total).collect();
            MedianRow {
                sweep: axis,
                value,
                epochs,
                seeds: cell.len(),
                median_market: median(&market),
                median_baseline: median(&baseline),
                saturated_reference: cell[0].saturated_reference,
            }
        })
        .collect()
}

/// Runs both sweeps on the current rayon pool.
pub fn run_sweeps(base: &ScenarioConfig, plan: &SweepPlan) -> CliResult<SweepReport> {
    let mut budget_cells = Vec::new();
    for &budget in &plan.budgets {
        for &epochs in &plan.epochs {
            for &seed in &plan.seeds {
                budget_cells.push(ScenarioConfig { initial_budget: budget, epochs, seed, ..base.clone() });
            }
        }
    }
    let mut bandwidth_cells = Vec::new();
    for &bw in &plan.bandwidths {
        for &epochs in &plan.epochs {
            for &seed in &plan.seeds {
                bandwidth_cells.push(ScenarioConfig {
                    bs_capacity: bw / base.n_bs as f64,
                    epochs,
                    seed,
                    ..base.clone()
                });
            }
        }
    }
    for cfg in budget_cells.iter().chain(&bandwidth_cells) {
        cfg.validate()?;
    }
    let budget_rows = run_cells(budget_cells)?;
    let bandwidth_rows = run_cells(bandwidth_cells)?;
    let mut medians = medians_of(&budget_rows, SweepAxis::Budget);
    medians.extend(medians_of(&bandwidth_rows, SweepAxis::Bandwidth));
    Ok(SweepReport { budget_rows, bandwidth_rows, medians })
}

pub fn sweep_table(rows: &[SweepRow], axis: SweepAxis, n_ues: u32) -> Table {
    let lead = match axis {
        SweepAxis::Budget => "budget",
        SweepAxis::Bandwidth => "total_bandwidth",
    };
    let mut header: Vec<String> =
        [lead, "epochs", "seed", "market_total", "baseline_total", "saturated_reference"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    header.extend((0..n_ues).map(|i| format!("final_budget_ue{i}")));
    let mut table = Table::new(header);
    for r in rows {
        let lead = match axis {
            SweepAxis::Budget => r.budget,
            SweepAxis::Bandwidth => r.total_bandwidth,
        };
        let mut row = vec![
            num(lead),
            r.epochs.to_string(),
            r.seed.to_string(),
            num(r.market_total),
            num(r.baseline_total),
            num(r.saturated_reference),
        ];
        row.extend(r.final_budgets.iter().map(|b| num(*b)));
        table.push(row);
    }
    table
}

pub fn median_table(rows: &[MedianRow]) -> Table {
    let mut table = Table::new([
        "sweep",
        "value",
        "epochs",
        "seeds",
        "median_market",
        "median_baseline",
        "saturated_reference",
    ]);
    for m in rows {
        let sweep = match m.sweep {
            SweepAxis::Budget => "budget",
            SweepAxis::Bandwidth => "bandwidth",
        };
        table.push(vec![
            sweep.to_string(),
            num(m.value),
            m.epochs.to_string(),
            m.seeds.to_string(),
            num(m.median_market),
            num(m.median_baseline),
            num(m.saturated_reference),
        ]);
    }
    table
}

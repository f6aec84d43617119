use serde::Serialize;

use super::config::ScenarioConfig;
use crate::market::{BsId, UeId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UeEpoch {
    pub id: UeId,
    pub buyer: bool,
    pub purchased: f64,
    pub spend: f64,
    /// Bandwidth actually used for transmission this epoch.
    pub bandwidth: f64,
    pub data: f64,
    pub budget: f64,
    pub backlog: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BsEpoch {
    pub id: BsId,
    pub conservation: f64,
    pub sold: f64,
    pub revenue: f64,
    pub profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochReport {
    pub epoch: u64,
    /// `None` when no market was held.
    pub price: Option<f64>,
    pub total_bid: f64,
    pub total_sold: f64,
    pub total_spend: f64,
    pub total_data: f64,
    pub arrived: f64,
    pub ues: Vec<UeEpoch>,
    pub bss: Vec<BsEpoch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Market,
    Baseline,
}

/// Per-epoch history of one run plus the paired totals.
///
/// `epochs` holds the market epochs for a market run and the default-allocation
/// epochs for a baseline run; both totals are always present.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub kind: RunKind,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub epochs: Vec<EpochReport>,
    pub market_total: f64,
    pub baseline_total: f64,
    pub saturated_reference: f64,
    pub arrived_total: f64,
}

impl SimulationReport {
    pub fn final_budgets(&self) -> Vec<f64> {
        match self.epochs.last() {
            Some(e) => e.ues.iter().map(|u| u.budget).collect(),
            None => vec![self.config.initial_budget; self.config.n_ues as usize],
        }
    }

    pub fn markets_held(&self) -> usize {
        self.epochs.iter().filter(|e| e.price.is_some()).count()
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a buyer does with its purchase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurchaseMode {
    /// Purchased bandwidth replaces the default allocation for the epoch.
    Exclusive,
    /// Purchased bandwidth is added on top of the default allocation.
    Additional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMode {
    /// All UEs draw from one pool of `n_bs × bs_capacity`.
    AggregateCap,
    /// Every UE may use up to the full cluster capacity (perfect beamforming).
    PerUeReuse,
}

/// Where a buyer's need comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeedMode {
    /// Any UE with backlog and budget buys, with need drawn from U(0, 1).
    Uniform,
    /// A UE buys only after its channel deteriorates past `theta`; need follows
    /// from the deterioration.
    Deterioration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetRefresh {
    /// Epochs between top-ups.
    pub period: u64,
    pub amount: f64,
}

/// Full parameterization of a cluster experiment. Missing JSON keys take the
/// defaults below; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_ues: u32,
    pub n_bs: u32,
    pub bs_capacity: f64,
    pub initial_budget: f64,
    pub default_bandwidth: f64,
    pub epochs: u64,
    pub file_probability: f64,
    pub file_length_mean: f64,
    pub file_length_std: f64,
    /// Deterioration (dB) a UE must exceed to enter the market.
    pub theta: f64,
    pub tau_max: f64,
    /// Epochs a triggered UE stays in the market.
    #[serde(rename = "timer_T")]
    pub timer: u64,
    /// Epochs over which deterioration is accumulated.
    #[serde(rename = "window_t")]
    pub window: u64,
    pub purchase_mode: PurchaseMode,
    pub capacity_mode: CapacityMode,
    pub need_mode: NeedMode,
    pub budget_refresh: Option<BudgetRefresh>,
    /// Budgets below this count as exhausted.
    pub exhaustion_threshold: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_ues: 10,
            n_bs: 4,
            bs_capacity: 25.0,
            initial_budget: 500.0,
            default_bandwidth: 10.0,
            epochs: 100,
            file_probability: 0.5,
            file_length_mean: 150.0,
            file_length_std: 50.0,
            theta: 3.0,
            tau_max: 20.0,
            timer: 10,
            window: 2,
            purchase_mode: PurchaseMode::Exclusive,
            capacity_mode: CapacityMode::AggregateCap,
            need_mode: NeedMode::Uniform,
            budget_refresh: None,
            exhaustion_threshold: 1.0,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every field, reporting all offenders at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                bad.push(msg.to_string());
            }
        };
        need(self.n_ues >= 1, "n_ues: must be at least 1");
        need(self.n_bs >= 1, "n_bs: must be at least 1");
        need(self.bs_capacity > 0.0 && self.bs_capacity.is_finite(), "bs_capacity: must be positive");
        need(
            self.initial_budget >= 0.0 && self.initial_budget.is_finite(),
            "initial_budget: must be non-negative",
        );
        need(
            self.default_bandwidth >= 0.0 && self.default_bandwidth.is_finite(),
            "default_bandwidth: must be non-negative",
        );
        need((0.0..=1.0).contains(&self.file_probability), "file_probability: must lie in [0, 1]");
        need(
            self.file_length_mean > 0.0 && self.file_length_mean.is_finite(),
            "file_length_mean: must be positive",
        );
        need(
            self.file_length_std >= 0.0 && self.file_length_std.is_finite(),
            "file_length_std: must be non-negative",
        );
        need(self.theta > 0.0, "theta: must be positive");
        need(self.tau_max > self.theta, "tau_max: must exceed theta");
        need(self.timer >= 1, "timer_T: must be at least 1");
        need(self.window >= 1 && self.window <= self.timer, "window_t: must lie in [1, timer_T]");
        need(self.exhaustion_threshold >= 0.0, "exhaustion_threshold: must be non-negative");
        if let Some(r) = &self.budget_refresh {
            need(r.period >= 1, "budget_refresh.period: must be at least 1");
            need(r.amount >= 0.0 && r.amount.is_finite(), "budget_refresh.amount: must be non-negative");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    /// `n_ues × default_bandwidth × epochs`, the data a saturated default
    /// allocation would carry.
    pub fn saturated_reference(&self) -> f64 {
        self.n_ues as f64 * self.default_bandwidth * self.epochs as f64
    }

    pub fn cluster_capacity(&self) -> f64 {
        self.n_bs as f64 * self.bs_capacity
    }
}

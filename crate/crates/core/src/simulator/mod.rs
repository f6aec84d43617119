//! Epoch-driven simulation of a single CoMP cluster market.
//!
//! Every epoch: new files arrive, each UE with backlog and budget becomes a
//! buyer, the clearing price is set from the buyers' current wealth, the bid
//! table is served, buyers pay for what they received, and every UE transmits
//! from its backlog. Purchases lapse at the end of the epoch.
//!
//! The baseline replays the same traffic with every UE on its default
//! allocation.

mod config;
mod report;
mod streams;
mod traffic;

use std::collections::{BTreeMap, VecDeque};

use rand::distr::Open01;
use rand::Rng;

pub use config::{BudgetRefresh, CapacityMode, NeedMode, PurchaseMode, ScenarioConfig};
pub use report::{BsEpoch, EpochReport, RunKind, SimulationReport, UeEpoch};
pub use streams::{stream, Streams};
pub use traffic::generate_traffic;

use crate::allocation::{build_bid_table, draw_bs_order, serve_bid_table, serve_bid_table_reuse, Buyer};
use crate::error::{Error, Result};
use crate::market::{
    equilibrium_price, market_trigger, need_from_deterioration, seller_profit, BsAgent, BsId, MarketOutcome,
    UeAgent,
};

#[derive(Debug, Clone)]
pub struct UeState {
    pub agent: UeAgent,
    /// Per-epoch channel deterioration over the trailing window (dB).
    pub recent_deterioration: VecDeque<f64>,
    /// Epochs left before a triggered UE leaves the market.
    pub market_epochs_left: u64,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub epoch: u64,
    pub ues: Vec<UeState>,
    pub bss: Vec<BsAgent>,
}

impl SimState {
    pub fn new(config: &ScenarioConfig) -> Self {
        let ues = (0..config.n_ues)
            .map(|id| UeState {
                agent: UeAgent::new(id, config.initial_budget, config.default_bandwidth),
                recent_deterioration: VecDeque::with_capacity(config.window as usize),
                market_epochs_left: 0,
            })
            .collect();
        let bss = (0..config.n_bs).map(|id| BsAgent::new(id, config.bs_capacity, 1.0)).collect();
        Self { epoch: 0, ues, bss }
    }

    fn receive(&mut self, arrivals: &[Option<f64>]) -> f64 {
        let mut arrived = 0.0;
        for (ue, len) in self.ues.iter_mut().zip(arrivals) {
            if let Some(len) = len {
                ue.agent.file_backlog += len;
                arrived += len;
            }
        }
        arrived
    }
}

/// Advances the channel model of every UE by one epoch and refreshes triggers.
fn update_channels<R: Rng + ?Sized>(
    state: &mut SimState,
    rng: &mut R,
    config: &ScenarioConfig,
) -> Result<()> {
    let step_max = config.tau_max / config.window as f64;
    for ue in &mut state.ues {
        let step = rng.random::<f64>() * step_max;
        ue.recent_deterioration.push_back(step);
        while ue.recent_deterioration.len() > config.window as usize {
            ue.recent_deterioration.pop_front();
        }
        let tau: f64 = ue.recent_deterioration.iter().sum();
        ue.agent.deterioration = tau;
        if ue.market_epochs_left == 0 && market_trigger(tau, config.theta) {
            ue.market_epochs_left = config.timer;
            ue.agent.need = need_from_deterioration(tau.min(config.tau_max), config.tau_max)?;
        }
    }
    Ok(())
}

/// Runs one market epoch.
pub fn run_epoch(
    state: &mut SimState,
    streams: &mut Streams,
    config: &ScenarioConfig,
) -> Result<EpochReport> {
    let epoch = state.epoch;
    if let Some(refresh) = &config.budget_refresh {
        if epoch > 0 && epoch.is_multiple_of(refresh.period) {
            for ue in &mut state.ues {
                ue.agent.wealth += refresh.amount;
            }
        }
    }

    let arrivals = generate_traffic(&mut streams.traffic, config);
    let arrived = state.receive(&arrivals);

    // Needs, conservations and the serving order are drawn every epoch so the
    // streams stay aligned across budgets and market outcomes.
    let needs: Vec<f64> = (0..state.ues.len()).map(|_| streams.needs.sample(Open01)).collect();
    for bs in &mut state.bss {
        bs.conservation = streams.conservations.sample(Open01);
        bs.sold_this_epoch = 0.0;
    }
    let bs_ids: Vec<BsId> = state.bss.iter().map(|b| b.id).collect();
    let order = draw_bs_order(&bs_ids, &mut streams.bs_order)?;

    match config.need_mode {
        NeedMode::Uniform => {
            for (ue, need) in state.ues.iter_mut().zip(&needs) {
                ue.agent.need = *need;
            }
        }
        NeedMode::Deterioration => update_channels(state, &mut streams.channel, config)?,
    }

    let is_buyer: Vec<bool> = state
        .ues
        .iter()
        .map(|ue| {
            let triggered = match config.need_mode {
                NeedMode::Uniform => true,
                NeedMode::Deterioration => ue.market_epochs_left > 0,
            };
            triggered && ue.agent.file_backlog > 0.0 && ue.agent.wealth >= config.exhaustion_threshold
        })
        .collect();
    let buyers: Vec<Buyer> = state
        .ues
        .iter()
        .zip(&is_buyer)
        .filter(|(_, b)| **b)
        .map(|(ue, _)| Buyer { ue: ue.agent.id, wealth: ue.agent.wealth, need: ue.agent.need })
        .collect();

    let bids: Vec<f64> = buyers.iter().map(|b| b.wealth * b.need).collect();
    let conservations: Vec<f64> = state.bss.iter().map(|b| b.conservation).collect();
    let outcome = match equilibrium_price(&bids, &conservations) {
        Ok(price) => {
            let table = build_bid_table(&buyers, price)?;
            let capacities: BTreeMap<BsId, f64> = state.bss.iter().map(|b| (b.id, b.capacity)).collect();
            let assignments = match config.capacity_mode {
                CapacityMode::AggregateCap => serve_bid_table(&table, &order, &capacities)?,
                CapacityMode::PerUeReuse => serve_bid_table_reuse(&table, &order, &capacities)?,
            };
            Some(MarketOutcome::from_assignments(price, assignments))
        }
        Err(Error::NoMarket) => None,
        Err(e) => return Err(e),
    };

    let mut ues = Vec::with_capacity(state.ues.len());
    for (ue, &buyer) in state.ues.iter_mut().zip(&is_buyer) {
        let agent = &mut ue.agent;
        let (purchased, spend) = match &outcome {
            Some(o) if buyer => {
                let got = o.purchased(agent.id);
                (got, o.price * got)
            }
            _ => (0.0, 0.0),
        };
        agent.wealth = (agent.wealth - spend).max(0.0);
        // A buyer left empty-handed by a capacity shortfall keeps its default.
        let bandwidth = if purchased > 0.0 {
            match config.purchase_mode {
                PurchaseMode::Exclusive => purchased,
                PurchaseMode::Additional => agent.default_bandwidth + purchased,
            }
        } else {
            agent.default_bandwidth
        };
        let data = agent.file_backlog.min(bandwidth);
        agent.file_backlog -= data;
        if ue.market_epochs_left > 0 {
            ue.market_epochs_left -= 1;
        }
        ues.push(UeEpoch {
            id: agent.id,
            buyer,
            purchased,
            spend,
            bandwidth,
            data,
            budget: agent.wealth,
            backlog: agent.file_backlog,
        });
    }

    let mut bss = Vec::with_capacity(state.bss.len());
    for bs in &mut state.bss {
        let (sold, price) = match &outcome {
            Some(o) => (o.sold(bs.id), o.price),
            None => (0.0, 0.0),
        };
        bs.sold_this_epoch = sold;
        let profit =
            if outcome.is_some() { seller_profit(sold, bs.conservation, price)?.profit } else { 0.0 };
        bss.push(BsEpoch { id: bs.id, conservation: bs.conservation, sold, revenue: price * sold, profit });
    }

    state.epoch += 1;
    Ok(EpochReport {
        epoch,
        price: outcome.as_ref().map(|o| o.price),
        total_bid: if outcome.is_some() { bids.iter().sum() } else { 0.0 },
        total_sold: bss.iter().map(|b| b.sold).sum(),
        total_spend: ues.iter().map(|u| u.spend).sum(),
        total_data: ues.iter().map(|u| u.data).sum(),
        arrived,
        ues,
        bss,
    })
}

/// Runs one epoch with every UE on its default allocation.
pub fn run_baseline_epoch<R: Rng + ?Sized>(
    state: &mut SimState,
    traffic: &mut R,
    config: &ScenarioConfig,
) -> EpochReport {
    let epoch = state.epoch;
    let arrivals = generate_traffic(traffic, config);
    let arrived = state.receive(&arrivals);
    let ues: Vec<UeEpoch> = state
        .ues
        .iter_mut()
        .map(|ue| {
            let agent = &mut ue.agent;
            let data = agent.file_backlog.min(agent.default_bandwidth);
            agent.file_backlog -= data;
            UeEpoch {
                id: agent.id,
                buyer: false,
                purchased: 0.0,
                spend: 0.0,
                bandwidth: agent.default_bandwidth,
                data,
                budget: agent.wealth,
                backlog: agent.file_backlog,
            }
        })
        .collect();
    state.epoch += 1;
    EpochReport {
        epoch,
        price: None,
        total_bid: 0.0,
        total_sold: 0.0,
        total_spend: 0.0,
        total_data: ues.iter().map(|u| u.data).sum(),
        arrived,
        ues,
        bss: state
            .bss
            .iter()
            .map(|b| BsEpoch { id: b.id, conservation: 0.0, sold: 0.0, revenue: 0.0, profit: 0.0 })
            .collect(),
    }
}

fn run_market_epochs(config: &ScenarioConfig) -> Result<Vec<EpochReport>> {
    let mut state = SimState::new(config);
    let mut streams = Streams::new(config.seed);
    (0..config.epochs).map(|_| run_epoch(&mut state, &mut streams, config)).collect()
}

fn run_baseline_epochs(config: &ScenarioConfig) -> Vec<EpochReport> {
    let mut state = SimState::new(config);
    let mut traffic = Streams::new(config.seed).traffic;
    (0..config.epochs).map(|_| run_baseline_epoch(&mut state, &mut traffic, config)).collect()
}

fn total_data(epochs: &[EpochReport]) -> f64 {
    epochs.iter().map(|e| e.total_data).sum()
}

fn assemble(
    kind: RunKind,
    config: &ScenarioConfig,
    market: Vec<EpochReport>,
    baseline: Vec<EpochReport>,
) -> SimulationReport {
    let market_total = total_data(&market);
    let baseline_total = total_data(&baseline);
    let epochs = match kind {
        RunKind::Market => market,
        RunKind::Baseline => baseline,
    };
    SimulationReport {
        kind,
        seed: config.seed,
        config: config.clone(),
        arrived_total: epochs.iter().map(|e| e.arrived).sum(),
        epochs,
        market_total,
        baseline_total,
        saturated_reference: config.saturated_reference(),
    }
}

/// Market run, paired with a baseline over the same traffic.
pub fn run_simulation(config: &ScenarioConfig) -> Result<SimulationReport> {
    config.validate()?;
    let market = run_market_epochs(config)?;
    let baseline = run_baseline_epochs(config);
    Ok(assemble(RunKind::Market, config, market, baseline))
}

/// Default-allocation run, paired with a market run over the same traffic.
pub fn run_baseline(config: &ScenarioConfig) -> Result<SimulationReport> {
    config.validate()?;
    let market = run_market_epochs(config)?;
    let baseline = run_baseline_epochs(config);
    Ok(assemble(RunKind::Baseline, config, market, baseline))
}

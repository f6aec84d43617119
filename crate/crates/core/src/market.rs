//! Buyer/seller bandwidth market with a closed-form clearing price.
//!
//! Buyers (UEs) carry quadratic-penalty utilities `b·B − p·B²/(2w)` and sellers
//! (BSs) carry quadratic costs `B²/(2a)`. Each side's optimum is linear in the
//! price, which makes the supply = demand condition solvable in closed form:
//! `p = sqrt(Σ wᵢbᵢ / Σ aⱼ)`.
//!
//! Everything here is a pure function of its arguments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type UeId = u32;
pub type BsId = u32;

/// A buyer in the cluster market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeAgent {
    pub id: UeId,
    pub wealth: f64,
    /// Urgency in `(0, 1]`.
    pub need: f64,
    /// Channel deterioration in dB.
    pub deterioration: f64,
    pub spectral_efficiency: f64,
    pub default_bandwidth: f64,
    pub file_backlog: f64,
}

impl UeAgent {
    pub fn new(id: UeId, wealth: f64, default_bandwidth: f64) -> Self {
        Self {
            id,
            wealth,
            need: 1.0,
            deterioration: 0.0,
            spectral_efficiency: 1.0,
            default_bandwidth,
            file_backlog: 0.0,
        }
    }

    /// The amount this buyer offers at the clearing price, `w·b`.
    pub fn bid(&self) -> f64 {
        self.wealth * self.need
    }
}

/// A seller in the cluster market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsAgent {
    pub id: BsId,
    pub capacity: f64,
    pub conservation: f64,
    pub sold_this_epoch: f64,
}

impl BsAgent {
    pub fn new(id: BsId, capacity: f64, conservation: f64) -> Self {
        Self { id, capacity, conservation, sold_this_epoch: 0.0 }
    }
}

/// One `(ue, bs, amount)` transfer produced by serving the bid table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub ue: UeId,
    pub bs: BsId,
    pub amount: f64,
}

/// Result of one market round.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MarketOutcome {
    pub price: f64,
    pub purchases: BTreeMap<UeId, f64>,
    pub sales: BTreeMap<BsId, f64>,
    pub assignments: Vec<Assignment>,
}

impl MarketOutcome {
    /// Aggregates assignment triples into per-UE purchases and per-BS sales.
    pub fn from_assignments(price: f64, assignments: Vec<Assignment>) -> Self {
        let mut purchases = BTreeMap::new();
        let mut sales = BTreeMap::new();
        for a in &assignments {
            *purchases.entry(a.ue).or_insert(0.0) += a.amount;
            *sales.entry(a.bs).or_insert(0.0) += a.amount;
        }
        Self { price, purchases, sales, assignments }
    }

    pub fn purchased(&self, ue: UeId) -> f64 {
        self.purchases.get(&ue).copied().unwrap_or(0.0)
    }

    pub fn sold(&self, bs: BsId) -> f64 {
        self.sales.get(&bs).copied().unwrap_or(0.0)
    }

    pub fn total_sold(&self) -> f64 {
        self.sales.values().sum()
    }
}

/// Converts a deterioration of `tau` dB into a need `10^((tau − tau_max)/10)`.
pub fn need_from_deterioration(tau: f64, tau_max: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::domain(format!("deterioration must be positive, got {tau}")));
    }
    if tau > tau_max {
        return Err(Error::domain(format!("deterioration {tau} dB exceeds tolerable maximum {tau_max} dB")));
    }
    Ok(10f64.powf((tau - tau_max) / 10.0))
}

/// A UE enters the market when its channel worsened by strictly more than `theta` dB.
pub fn market_trigger(tau: f64, theta: f64) -> bool {
    tau > theta
}

pub fn buyer_utility(bandwidth: f64, need: f64, wealth: f64, price: f64) -> Result<f64> {
    if !(wealth > 0.0) {
        return Err(Error::domain("a wealthless buyer has no utility"));
    }
    if !(price > 0.0) {
        return Err(Error::domain(format!("price must be positive, got {price}")));
    }
    if bandwidth < 0.0 {
        return Err(Error::domain(format!("bandwidth must be non-negative, got {bandwidth}")));
    }
    Ok(need * bandwidth - price * bandwidth * bandwidth / (2.0 * wealth))
}

/// Utility-maximizing purchase `w·b/p`; the buyer spends exactly `w·b`.
pub fn optimal_purchase(wealth: f64, need: f64, price: f64) -> Result<f64> {
    if !(price > 0.0) {
        return Err(Error::domain(format!("price must be positive, got {price}")));
    }
    if wealth < 0.0 {
        return Err(Error::domain(format!("wealth must be non-negative, got {wealth}")));
    }
    if !(need > 0.0 && need <= 1.0) {
        return Err(Error::domain(format!("need must lie in (0, 1], got {need}")));
    }
    Ok(wealth * need / price)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SellerEconomics {
    pub cost: f64,
    pub profit: f64,
}

pub fn seller_profit(supplied: f64, conservation: f64, price: f64) -> Result<SellerEconomics> {
    if !(conservation > 0.0) {
        return Err(Error::domain(format!("conservation parameter must be positive, got {conservation}")));
    }
    let cost = supplied * supplied / (2.0 * conservation);
    Ok(SellerEconomics { cost, profit: price * supplied - cost })
}

/// Profit-maximizing supply `a·p`.
pub fn optimal_supply(conservation: f64, price: f64) -> f64 {
    conservation * price
}

/// Price at which total demand `Σbids/p` meets total supply `p·Σa`.
///
/// Returns [`Error::NoMarket`] when every bid is zero.
pub fn equilibrium_price(bids: &[f64], conservations: &[f64]) -> Result<f64> {
    if conservations.is_empty() {
        return Err(Error::domain("no sellers in the cluster"));
    }
    if let Some(a) = conservations.iter().find(|a| !(**a > 0.0)) {
        return Err(Error::domain(format!("conservation parameter must be positive, got {a}")));
    }
    if let Some(b) = bids.iter().find(|b| !(**b >= 0.0)) {
        return Err(Error::domain(format!("bids must be non-negative, got {b}")));
    }
    let total_bid: f64 = bids.iter().sum();
    if total_bid == 0.0 {
        return Err(Error::NoMarket);
    }
    let total_conservation: f64 = conservations.iter().sum();
    Ok((total_bid / total_conservation).sqrt())
}

/// Price per unit of data `p/S` for a UE with spectral efficiency `S`.
pub fn data_price_equivalent(price: f64, spectral_efficiency: f64) -> Result<f64> {
    if !(spectral_efficiency > 0.0) {
        return Err(Error::domain(format!(
            "spectral efficiency must be positive, got {spectral_efficiency}"
        )));
    }
    Ok(price / spectral_efficiency)
}

/// Demand and supply at the clearing price, for a one-shot market.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clearing {
    pub price: f64,
    pub demands: Vec<f64>,
    pub supplies: Vec<f64>,
    pub total_demand: f64,
    pub total_supply: f64,
}

/// Clears a market given explicit bids `wᵢbᵢ` and seller parameters.
pub fn clear(bids: &[f64], conservations: &[f64]) -> Result<Clearing> {
    let price = equilibrium_price(bids, conservations)?;
    let demands: Vec<f64> = bids.iter().map(|bid| bid / price).collect();
    let supplies: Vec<f64> = conservations.iter().map(|&a| optimal_supply(a, price)).collect();
    Ok(Clearing {
        price,
        total_demand: demands.iter().sum(),
        total_supply: supplies.iter().sum(),
        demands,
        supplies,
    })
}

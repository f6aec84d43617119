//! One-pass bid-table allocation.
//!
//! At the start of an epoch the cluster's BSs are put in a random serving order
//! and every buyer posts its bid to a shared table. The table is then walked from
//! the highest bid down; each request draws on the current BS until that BS is
//! empty, at which point the next BS in the order takes over the remainder. A BS
//! cursor that only moves forward keeps the whole thing to a single pass.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Assignment, BsId, UeId};

/// Serving order of the cluster's BSs for one epoch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BsOrder(Vec<BsId>);

impl BsOrder {
    /// Wraps an explicit order, rejecting duplicates.
    pub fn new(ids: Vec<BsId>) -> Result<Self> {
        check_distinct(&ids)?;
        Ok(Self(ids))
    }

    pub fn as_slice(&self) -> &[BsId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_distinct(ids: &[BsId]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(*id) {
            return Err(Error::domain(format!("duplicate BS id {id} in serving order")));
        }
    }
    Ok(())
}

/// Draws a uniformly random serving order (Fisher-Yates).
pub fn draw_bs_order<R: Rng + ?Sized>(bs_ids: &[BsId], rng: &mut R) -> Result<BsOrder> {
    if bs_ids.is_empty() {
        return Err(Error::domain("cannot order an empty set of BSs"));
    }
    check_distinct(bs_ids)?;
    let mut ids = bs_ids.to_vec();
    ids.shuffle(rng);
    Ok(BsOrder(ids))
}

/// A buyer as seen by the bid table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Buyer {
    pub ue: UeId,
    pub wealth: f64,
    pub need: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidEntry {
    pub ue: UeId,
    pub bid: f64,
    pub demand: f64,
    pub remaining: f64,
}

/// Shared bid table, highest bid first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BidTable {
    entries: Vec<BidEntry>,
}

impl BidTable {
    /// Builds a table from explicit entries, sorting them into serving order.
    pub fn from_entries(mut entries: Vec<BidEntry>) -> Self {
        entries.retain(|e| e.remaining > 0.0);
        entries.sort_by(|a, b| b.bid.total_cmp(&a.bid).then(a.ue.cmp(&b.ue)));
        Self { entries }
    }

    pub fn entries(&self) -> &[BidEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_bid(&self) -> f64 {
        self.entries.iter().map(|e| e.bid).sum()
    }

    pub fn total_demand(&self) -> f64 {
        self.entries.iter().map(|e| e.demand).sum()
    }
}

/// Posts each buyer's bid `w·b` with demand `w·b/p`.
///
/// Demand is also capped at `w/p` so that no buyer is asked to spend more than it
/// holds. Zero bids are dropped. Equal bids are served in ascending UE id.
pub fn build_bid_table(buyers: &[Buyer], price: f64) -> Result<BidTable> {
    if !(price > 0.0) {
        return Err(Error::domain(format!("price must be positive, got {price}")));
    }
    let entries = buyers
        .iter()
        .map(|b| {
            let bid = (b.wealth * b.need).min(b.wealth);
            let demand = bid / price;
            BidEntry { ue: b.ue, bid, demand, remaining: demand }
        })
        .collect();
    Ok(BidTable::from_entries(entries))
}

/// Serves the table against BSs in `order`, each holding `capacities[bs]`.
///
/// Once the cluster is empty the remaining (lower-bid) entries get nothing.
pub fn serve_bid_table(
    table: &BidTable,
    order: &BsOrder,
    capacities: &BTreeMap<BsId, f64>,
) -> Result<Vec<Assignment>> {
    let residual = residual_capacities(order, capacities)?;
    let mut cursor = Cursor::new(order.as_slice(), residual);
    let mut assignments = Vec::new();
    for entry in &table.entries {
        cursor.fill(entry.ue, entry.remaining, &mut assignments);
    }
    Ok(assignments)
}

/// Variant in which every UE sees the full cluster capacity, so the same
/// bandwidth can be reused across UEs. Each UE is still split across BSs in the
/// serving order.
pub fn serve_bid_table_reuse(
    table: &BidTable,
    order: &BsOrder,
    capacities: &BTreeMap<BsId, f64>,
) -> Result<Vec<Assignment>> {
    let residual = residual_capacities(order, capacities)?;
    let mut assignments = Vec::new();
    for entry in &table.entries {
        let mut cursor = Cursor::new(order.as_slice(), residual.clone());
        cursor.fill(entry.ue, entry.remaining, &mut assignments);
    }
    Ok(assignments)
}

fn residual_capacities(order: &BsOrder, capacities: &BTreeMap<BsId, f64>) -> Result<Vec<f64>> {
    order
        .as_slice()
        .iter()
        .map(|bs| match capacities.get(bs) {
            Some(&c) if c >= 0.0 => Ok(c),
            Some(&c) => Err(Error::domain(format!("BS {bs} has negative capacity {c}"))),
            None => Err(Error::domain(format!("no capacity given for BS {bs}"))),
        })
        .collect()
}

struct Cursor<'a> {
    order: &'a [BsId],
    residual: Vec<f64>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(order: &'a [BsId], residual: Vec<f64>) -> Self {
        Self { order, residual, pos: 0 }
    }

    fn fill(&mut self, ue: UeId, mut want: f64, out: &mut Vec<Assignment>) {
        while want > 0.0 && self.pos < self.order.len() {
            let left = self.residual[self.pos];
            if want < left {
                self.residual[self.pos] = left - want;
                out.push(Assignment { ue, bs: self.order[self.pos], amount: want });
                return;
            }
            // the BS is used up by this request
            if left > 0.0 {
                out.push(Assignment { ue, bs: self.order[self.pos], amount: left });
            }
            want -= left;
            self.residual[self.pos] = 0.0;
            self.pos += 1;
        }
    }
}

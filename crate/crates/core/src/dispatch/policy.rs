//! Hourly causal dispatch policies.
//!
//! Storage load `s_t` is positive when charging. Both policies only charge from
//! surplus and only discharge into shortfall, so surplus hours never curtail.

use mlmc::OutcomeVector;
use serde::{Deserialize, Serialize};

use super::metrics::accumulate;
use super::storage::StorageFleet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    /// Units in descending time-to-go order each take as much as they can.
    Greedy,
    /// Discharge equalizes post-dispatch time-to-go from the top; charging
    /// fills the units with the least time-to-go first.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchResult {
    /// Net storage load per hour, MW.
    pub storage: Vec<f64>,
    /// Curtailment per hour, MW.
    pub curtailment: Vec<f64>,
    /// Per-unit signed flows, `unit_flows[k][t]`.
    pub unit_flows: Vec<Vec<f64>>,
    pub final_soc: Vec<f64>,
}

impl DispatchResult {
    pub fn metrics(&self) -> OutcomeVector {
        let mut out = OutcomeVector::ZERO;
        for &c in &self.curtailment {
            accumulate(&mut out, c);
        }
        out
    }
}

pub fn greedy_dispatch(margin: &[f64], fleet: &StorageFleet) -> DispatchResult {
    dispatch(Policy::Greedy, margin, fleet, None)
}

pub fn exact_dispatch(margin: &[f64], fleet: &StorageFleet) -> DispatchResult {
    dispatch(Policy::Exact, margin, fleet, None)
}

/// Run `policy` over `margin`, starting from `initial_soc` (full if `None`).
pub fn dispatch(policy: Policy, margin: &[f64], fleet: &StorageFleet, initial_soc: Option<&[f64]>) -> DispatchResult {
    let mut d = Dispatcher::new(policy, fleet, initial_soc);
    let k = fleet.len();
    let mut storage = Vec::with_capacity(margin.len());
    let mut curtailment = Vec::with_capacity(margin.len());
    let mut unit_flows = vec![Vec::with_capacity(margin.len()); k];
    for &m in margin {
        let s = d.step(m);
        storage.push(s);
        curtailment.push((s - m).max(0.0));
        for (flows, &f) in unit_flows.iter_mut().zip(&d.flows) {
            flows.push(f);
        }
    }
    DispatchResult { storage, curtailment, unit_flows, final_soc: d.soc }
}

/// Risk metrics of `policy` over `margin` without keeping the traces.
pub fn dispatch_metrics(
    policy: Policy,
    margin: &[f64],
    fleet: &StorageFleet,
    initial_soc: Option<&[f64]>,
) -> OutcomeVector {
    let mut d = Dispatcher::new(policy, fleet, initial_soc);
    let mut out = OutcomeVector::ZERO;
    for &m in margin {
        let s = d.step(m);
        accumulate(&mut out, (s - m).max(0.0));
    }
    out
}

struct Item {
    unit: usize,
    start: f64,
    rate: f64,
    cap: f64,
}

struct Dispatcher<'a> {
    policy: Policy,
    fleet: &'a StorageFleet,
    soc: Vec<f64>,
    flows: Vec<f64>,
    order: Vec<usize>,
    items: Vec<Item>,
    events: Vec<(f64, f64)>,
}

impl<'a> Dispatcher<'a> {
    fn new(policy: Policy, fleet: &'a StorageFleet, initial_soc: Option<&[f64]>) -> Self {
        let soc = match initial_soc {
            Some(s) => {
                assert_eq!(s.len(), fleet.len(), "initial state of charge per unit");
                s.to_vec()
            }
            None => fleet.full_soc(),
        };
        let mut order: Vec<usize> = (0..fleet.len()).collect();
        if policy == Policy::Greedy {
            order.sort_by(|&a, &b| fleet.units[b].time_to_go().total_cmp(&fleet.units[a].time_to_go()));
        }
        Self {
            policy,
            fleet,
            soc,
            flows: vec![0.0; fleet.len()],
            order,
            items: Vec::with_capacity(fleet.len()),
            events: Vec::with_capacity(2 * fleet.len()),
        }
    }

    /// Dispatch one hour at margin `m`; returns the net storage load.
    fn step(&mut self, m: f64) -> f64 {
        self.flows.iter_mut().for_each(|f| *f = 0.0);
        if m == 0.0 || self.fleet.is_empty() {
            return 0.0;
        }
        match self.policy {
            Policy::Greedy => self.greedy(m),
            Policy::Exact => self.exact(m),
        }
        let mut s = 0.0;
        for ((soc, f), u) in self.soc.iter_mut().zip(&self.flows).zip(&self.fleet.units) {
            *soc = (*soc + f).clamp(0.0, u.energy);
            s += f;
        }
        s
    }

    fn greedy(&mut self, m: f64) {
        let units = &self.fleet.units;
        if m > 0.0 {
            let mut rest = m;
            for &k in &self.order {
                let amount = units[k].power.min(units[k].energy - self.soc[k]).min(rest);
                if amount > 0.0 {
                    self.flows[k] = amount;
                    rest -= amount;
                    if rest <= 0.0 {
                        break;
                    }
                }
            }
        } else {
            let mut rest = -m;
            for &k in &self.order {
                let amount = units[k].power.min(self.soc[k]).min(rest);
                if amount > 0.0 {
                    self.flows[k] = -amount;
                    rest -= amount;
                    if rest <= 0.0 {
                        break;
                    }
                }
            }
        }
    }

    fn exact(&mut self, m: f64) {
        self.items.clear();
        let mut available = 0.0;
        for (k, u) in self.fleet.units.iter().enumerate() {
            let soc = self.soc[k];
            let (cap, start) =
                if m > 0.0 { (u.power.min(u.energy - soc), soc / u.power) } else { (u.power.min(soc), -soc / u.power) };
            if cap > 0.0 {
                available += cap;
                self.items.push(Item { unit: k, start, rate: u.power, cap });
            }
        }
        if self.items.is_empty() {
            return;
        }
        let total = m.abs().min(available);
        let sign = m.signum();
        if total >= available {
            for it in &self.items {
                self.flows[it.unit] = sign * it.cap;
            }
            return;
        }
        let amounts = water_fill(&self.items, total, &mut self.events);
        for (it, a) in self.items.iter().zip(amounts) {
            self.flows[it.unit] = sign * a;
        }
    }
}

/// Amounts `clamp((x - start) * rate, 0, cap)` at the level `x` where they sum
/// to `total`, which must lie in `[0, sum(cap))`.
fn water_fill<'i>(items: &'i [Item], total: f64, events: &mut Vec<(f64, f64)>) -> impl Iterator<Item = f64> + 'i {
    events.clear();
    for it in items {
        events.push((it.start, it.rate));
        events.push((it.start + it.cap / it.rate, -it.rate));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut level = events[0].0;
    let (mut value, mut slope) = (0.0, 0.0);
    for &(pos, delta) in events.iter() {
        let next = value + slope * (pos - level);
        if next >= total {
            break;
        }
        value = next;
        slope += delta;
        level = pos;
    }
    if total > value && slope > 0.0 {
        level += (total - value) / slope;
    }
    let mut amounts: Vec<f64> = items.iter().map(|it| ((level - it.start) * it.rate).clamp(0.0, it.cap)).collect();
    // Put the rounding residual on the unit with the most room to absorb it.
    let residual = total - amounts.iter().sum::<f64>();
    if residual != 0.0 {
        let k = (0..items.len())
            .max_by(|&a, &b| {
                let room = |i: usize| if residual > 0.0 { items[i].cap - amounts[i] } else { amounts[i] };
                room(a).total_cmp(&room(b))
            })
            .expect("nonempty items");
        amounts[k] = (amounts[k] + residual).clamp(0.0, items[k].cap);
    }
    amounts.into_iter()
}

use std::path::Path;

use crate::error::{AdequacyError, Result};
use crate::scenario::GeneratingUnit;

/// Capacities closer than this are merged into one table entry.
const MERGE_TOLERANCE_MW: f64 = 1e-9;

/// Distribution of available conventional capacity, sorted by capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct Copt {
    states: Vec<(f64, f64)>,
    /// `cum_p[i]` = P(G < capacity_i), `cum_pg[i]` = E[G; G < capacity_i].
    cum_p: Vec<f64>,
    cum_pg: Vec<f64>,
}

/// Convolve the two-point availability distributions of all units.
pub fn build_copt(fleet: &[GeneratingUnit]) -> Copt {
    let mut states = vec![(0.0, 1.0)];
    let mut next = Vec::new();
    for unit in fleet {
        let a = unit.availability();
        let down = states.iter().map(|&(c, p)| (c, p * (1.0 - a)));
        let up = states.iter().map(|&(c, p)| (c + unit.capacity, p * a));
        next.clear();
        merge_sorted(down, up, &mut next);
        next.retain(|&(_, p)| p > 0.0);
        std::mem::swap(&mut states, &mut next);
    }
    Copt::from_states(states)
}

fn merge_sorted(a: impl Iterator<Item = (f64, f64)>, b: impl Iterator<Item = (f64, f64)>, out: &mut Vec<(f64, f64)>) {
    let mut a = a.peekable();
    let mut b = b.peekable();
    loop {
        let item = match (a.peek(), b.peek()) {
            (Some(x), Some(y)) if x.0 <= y.0 => a.next(),
            (Some(_), Some(_)) => b.next(),
            (Some(_), None) => a.next(),
            (None, Some(_)) => b.next(),
            (None, None) => break,
        };
        let (c, p) = item.expect("peeked");
        match out.last_mut() {
            Some(last) if (c - last.0).abs() <= MERGE_TOLERANCE_MW => last.1 += p,
            _ => out.push((c, p)),
        }
    }
}

impl Copt {
    fn from_states(states: Vec<(f64, f64)>) -> Self {
        let mut cum_p = Vec::with_capacity(states.len() + 1);
        let mut cum_pg = Vec::with_capacity(states.len() + 1);
        let (mut p_acc, mut pg_acc) = (0.0, 0.0);
        for &(c, p) in &states {
            cum_p.push(p_acc);
            cum_pg.push(pg_acc);
            p_acc += p;
            pg_acc += p * c;
        }
        cum_p.push(p_acc);
        cum_pg.push(pg_acc);
        Self { states, cum_p, cum_pg }
    }

    /// `(capacity, probability)` pairs in increasing capacity.
    pub fn states(&self) -> &[(f64, f64)] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn probability_of(&self, capacity: f64) -> f64 {
        self.states.iter().find(|(c, _)| (c - capacity).abs() <= MERGE_TOLERANCE_MW).map_or(0.0, |s| s.1)
    }

    /// P(G < x).
    pub fn prob_below(&self, x: f64) -> f64 {
        self.cum_p[self.states.partition_point(|s| s.0 < x)]
    }

    /// E[(x - G)^+].
    pub fn expected_shortfall(&self, x: f64) -> f64 {
        let i = self.states.partition_point(|s| s.0 < x);
        (x * self.cum_p[i] - self.cum_pg[i]).max(0.0)
    }

    /// `(P(G < cut), E[(x - G); G < cut])`.
    pub fn shortfall_below(&self, x: f64, cut: f64) -> (f64, f64) {
        let i = self.states.partition_point(|s| s.0 < cut);
        (self.cum_p[i], (x * self.cum_p[i] - self.cum_pg[i]).max(0.0))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| AdequacyError::format(path, e))?;
        w.write_record(["capacity_mw", "probability"]).map_err(|e| AdequacyError::format(path, e))?;
        for (c, p) in &self.states {
            w.write_record([c.to_string(), p.to_string()]).map_err(|e| AdequacyError::format(path, e))?;
        }
        w.flush().map_err(|e| AdequacyError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_unit() {
        let copt = build_copt(&[GeneratingUnit::new(100.0, 0.01, 0.09).unwrap()]);
        assert_eq!(copt.len(), 2);
        assert_eq!(copt.states()[0].0, 0.0);
        assert!((copt.probability_of(0.0) - 0.1).abs() < 1e-15);
        assert!((copt.probability_of(100.0) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn identical_units_merge() {
        let unit = GeneratingUnit::new(10.0, 0.01, 0.09).unwrap();
        let copt = build_copt(&[unit, unit]);
        assert_eq!(copt.len(), 3);
        assert!((copt.probability_of(20.0) - 0.81).abs() < 1e-15);
        assert!((copt.probability_of(10.0) - 0.18).abs() < 1e-15);
        assert!((copt.probability_of(0.0) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn tail_queries() {
        let copt = build_copt(&[GeneratingUnit::new(100.0, 0.01, 0.09).unwrap()]);
        assert_eq!(copt.prob_below(0.0), 0.0);
        assert!((copt.prob_below(50.0) - 0.1).abs() < 1e-15);
        assert!((copt.prob_below(100.0) - 0.1).abs() < 1e-15);
        assert!((copt.prob_below(100.5) - 1.0).abs() < 1e-15);
        assert!((copt.expected_shortfall(50.0) - 5.0).abs() < 1e-12);
        assert!((copt.expected_shortfall(150.0) - (0.1 * 150.0 + 0.9 * 50.0)).abs() < 1e-12);
        assert_eq!(copt.expected_shortfall(-1.0), 0.0);
    }
}

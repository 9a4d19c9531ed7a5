//! Exhaustive dynamic program over a state-of-charge grid for two storage
//! units, used as an optimality oracle for the dispatch policies.
//!
//! Actions: in shortfall hours each unit may discharge, in surplus hours each
//! unit may charge from the surplus. Units never exchange energy.

#![allow(dead_code)]

use rand::Rng;

pub const GRID: f64 = 0.25;

#[derive(Debug, Clone, Copy)]
pub struct GridUnit {
    pub power: f64,
    pub energy: f64,
}

fn steps(x: f64) -> usize {
    (x / GRID + 1e-9).floor() as usize
}

/// Minimum total curtailment over `margin`, both units starting full.
pub fn min_ens(units: [GridUnit; 2], margin: &[f64]) -> f64 {
    let n = [steps(units[0].energy), steps(units[1].energy)];
    let pw = [steps(units[0].power), steps(units[1].power)];
    let idx = |a: usize, b: usize| a * (n[1] + 1) + b;
    // cost-to-go from each state, filled backwards over hours
    let mut next = vec![0.0; (n[0] + 1) * (n[1] + 1)];
    let mut cur = next.clone();
    for &m in margin.iter().rev() {
        for a in 0..=n[0] {
            for b in 0..=n[1] {
                let mut best = f64::INFINITY;
                if m < 0.0 {
                    for da in 0..=pw[0].min(a) {
                        for db in 0..=pw[1].min(b) {
                            let served = (da + db) as f64 * GRID;
                            let c = (-m - served).max(0.0);
                            best = best.min(c + next[idx(a - da, b - db)]);
                        }
                    }
                } else {
                    let room = steps(m);
                    for ca in 0..=pw[0].min(n[0] - a).min(room) {
                        for cb in 0..=pw[1].min(n[1] - b).min(room - ca) {
                            best = best.min(next[idx(a + ca, b + cb)]);
                        }
                    }
                }
                cur[idx(a, b)] = best;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    next[idx(n[0], n[1])]
}

/// Two grid units with power in [0.25, 2] MW and energy in [0.25, 4] MWh.
pub fn random_units<R: Rng>(rng: &mut R) -> [GridUnit; 2] {
    std::array::from_fn(|_| GridUnit {
        power: rng.random_range(1..=8) as f64 * GRID,
        energy: rng.random_range(1..=16) as f64 * GRID,
    })
}

/// A 48-hour trace of shortfall hours: margins in {-3, -2.75, ..., 0}, with
/// roughly a third of the hours at zero.
pub fn random_shortfall_trace<R: Rng>(rng: &mut R) -> Vec<f64> {
    (0..48).map(|_| if rng.random_bool(0.35) { 0.0 } else { -(rng.random_range(1..=12) as f64) * GRID }).collect()
}

/// A 48-hour trace mixing surplus and shortfall on the grid.
pub fn random_mixed_trace<R: Rng>(rng: &mut R) -> Vec<f64> {
    (0..48).map(|_| rng.random_range(-12..=12) as f64 * GRID).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_minimum() {
        let units = [GridUnit { power: 1.0, energy: 1.0 }, GridUnit { power: 1.0, energy: 2.0 }];
        assert_eq!(min_ens(units, &[-2.0, 0.0, -2.0]), 1.0);
        assert_eq!(min_ens(units, &[-1.0, -2.0]), 0.0);
        assert_eq!(min_ens(units, &[-2.0, -2.0, 4.0, -2.0]), 1.0);
    }
}

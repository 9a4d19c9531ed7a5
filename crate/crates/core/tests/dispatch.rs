#[path = "support/dp_oracle.rs"]
mod dp_oracle;

use adequacy::dispatch::{
    analytic_avg_risk, average_profile, build_copt, dispatch, dispatch_metrics, exact_dispatch, greedy_dispatch,
    AvgProfile, Policy, StorageFleet, StorageUnit,
};
use adequacy::scenario::{GeneratingUnit, TraceLibrary, HOURS_PER_YEAR};
use mlmc::OutcomeVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fleet_of(units: &[(f64, f64)]) -> StorageFleet {
    StorageFleet::new(units.iter().map(|&(p, e)| StorageUnit::new(p, e).unwrap()).collect()).unwrap()
}

fn no_storage_ens(margin: &[f64]) -> f64 {
    margin.iter().map(|m| (-m).max(0.0)).sum()
}

#[test]
fn exact_matches_dp_on_shortfall_traces() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut exact_hits = 0;
    for case in 0..100 {
        let units = dp_oracle::random_units(&mut rng);
        let margin = dp_oracle::random_shortfall_trace(&mut rng);
        let fleet = fleet_of(&[(units[0].power, units[0].energy), (units[1].power, units[1].energy)]);
        let exact = exact_dispatch(&margin, &fleet).metrics().ens_energy;
        let greedy = greedy_dispatch(&margin, &fleet).metrics().ens_energy;
        let dp = dp_oracle::min_ens(units, &margin);
        assert!(exact <= greedy + 1e-9, "case {case}: exact {exact} > greedy {greedy}");
        assert!((exact - dp).abs() <= dp_oracle::GRID, "case {case}: exact {exact} vs dp {dp}");
        if (exact - dp).abs() < 1e-9 {
            exact_hits += 1;
        }
    }
    assert!(exact_hits >= 90, "exact matched the grid optimum on only {exact_hits}/100");
}

#[test]
fn worked_example_label_matches_dp() {
    let units = [dp_oracle::GridUnit { power: 1.0, energy: 1.0 }, dp_oracle::GridUnit { power: 1.0, energy: 2.0 }];
    let margin = [-2.0, 0.0, -2.0];
    let fleet = fleet_of(&[(1.0, 1.0), (1.0, 2.0)]);
    assert_eq!(exact_dispatch(&margin, &fleet).metrics().ens_energy, dp_oracle::min_ens(units, &margin));
}

#[test]
fn copt_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for size in 1..=10 {
        let fleet: Vec<GeneratingUnit> = (0..size)
            .map(|_| {
                let cap = rng.random_range(1..=6) as f64 * 50.0;
                GeneratingUnit::new(cap, rng.random_range(0.001..0.05), rng.random_range(0.01..0.2)).unwrap()
            })
            .collect();
        let mut enumerated = std::collections::BTreeMap::<u64, f64>::new();
        for mask in 0u32..(1 << size) {
            let mut cap = 0.0;
            let mut p = 1.0;
            for (k, u) in fleet.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    cap += u.capacity;
                    p *= u.availability();
                } else {
                    p *= 1.0 - u.availability();
                }
            }
            *enumerated.entry(cap as u64).or_default() += p;
        }
        let copt = build_copt(&fleet);
        let total: f64 = copt.states().iter().map(|s| s.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mut tv = 0.0;
        for (&cap, &p) in &enumerated {
            tv += (copt.probability_of(cap as f64) - p).abs();
        }
        for &(cap, p) in copt.states() {
            if !enumerated.contains_key(&(cap as u64)) {
                tv += p;
            }
        }
        assert!(0.5 * tv < 1e-12, "size {size}: tv {tv}");
    }
}

#[test]
fn analytic_avg_risk_matches_monte_carlo() {
    use adequacy::scenario::ScenarioGenerator;
    use std::sync::Arc;

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let fleet: Vec<GeneratingUnit> = (0..4).map(|_| GeneratingUnit::new(100.0, 0.02, 0.2).unwrap()).collect();
    let demand: Vec<Vec<f64>> = (0..3)
        .map(|_| {
            (0..HOURS_PER_YEAR)
                .map(|t| {
                    280.0 + 60.0 * ((t % 24) as f64 / 24.0 * std::f64::consts::TAU).sin() + rng.random_range(0.0..20.0)
                })
                .collect()
        })
        .collect();
    let wind: Vec<Vec<f64>> =
        (0..2).map(|_| (0..HOURS_PER_YEAR).map(|_| rng.random_range(0.0..40.0)).collect()).collect();
    let demand = Arc::new(TraceLibrary::new((0..3).map(|i| format!("d{i}")).collect(), demand).unwrap());
    let wind = Arc::new(TraceLibrary::new(vec!["w0".into(), "w1".into()], wind).unwrap());
    let storage = fleet_of(&[(20.0, 60.0), (10.0, 20.0)]);
    let profile = average_profile(&storage, demand.mean_daily_profile()).unwrap();
    let exact = analytic_avg_risk(&build_copt(&fleet), &demand, &wind, &profile).unwrap();

    let gen = ScenarioGenerator::new(demand, wind, fleet).unwrap();
    let n = 20_000u64;
    let mut sums = [0.0; 2];
    let mut sq = [0.0; 2];
    for k in 0..n {
        let x = profile.metrics(&gen.sample(mlmc::seed::derive_seed(99, k)).margin).as_array();
        for i in 0..2 {
            sums[i] += x[i];
            sq[i] += x[i] * x[i];
        }
    }
    for (i, want) in exact.as_array().into_iter().enumerate() {
        let mean = sums[i] / n as f64;
        let se = ((sq[i] / n as f64 - mean * mean) / (n - 1) as f64).sqrt();
        assert!((mean - want).abs() < 3.0 * se, "metric {i}: mc {mean} ± {se}, analytic {want}");
    }
}

fn unit_strategy() -> impl Strategy<Value = (f64, f64)> {
    (0.1f64..3.0, 0.1f64..8.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dispatch_is_feasible_and_conserves_energy(
        units in prop::collection::vec(unit_strategy(), 1..5),
        margin in prop::collection::vec(-5.0f64..5.0, 1..200),
    ) {
        let fleet = fleet_of(&units);
        for policy in [Policy::Greedy, Policy::Exact] {
            let r = dispatch(policy, &margin, &fleet, None);
            for (k, u) in fleet.units.iter().enumerate() {
                let mut soc = u.energy;
                for &f in &r.unit_flows[k] {
                    prop_assert!(f.abs() <= u.power + 1e-12);
                    soc += f;
                    prop_assert!(soc >= -1e-9 && soc <= u.energy + 1e-9);
                }
                prop_assert!((soc - r.final_soc[k]).abs() <= 1e-9);
            }
            for t in 0..margin.len() {
                let s: f64 = r.unit_flows.iter().map(|f| f[t]).sum();
                prop_assert!((s - r.storage[t]).abs() < 1e-12);
                prop_assert_eq!(r.curtailment[t], (r.storage[t] - margin[t]).max(0.0));
                // never charge beyond surplus nor discharge beyond shortfall
                let within = if margin[t] >= 0.0 {
                    r.storage[t] <= margin[t] + 1e-12 && r.storage[t] >= 0.0
                } else {
                    r.storage[t] >= margin[t] - 1e-12 && r.storage[t] <= 0.0
                };
                prop_assert!(within);
            }
            prop_assert!(r.metrics().ens_energy <= no_storage_ens(&margin) + 1e-9);
        }
    }

    #[test]
    fn single_unit_policies_coincide(unit in unit_strategy(), margin in prop::collection::vec(-5.0f64..5.0, 1..200)) {
        let fleet = fleet_of(&[unit]);
        let g = greedy_dispatch(&margin, &fleet);
        let e = exact_dispatch(&margin, &fleet);
        prop_assert_eq!(g.storage, e.storage);
        prop_assert_eq!(g.final_soc, e.final_soc);
    }

    #[test]
    fn exact_dominates_greedy_on_shortfall_traces(
        units in prop::collection::vec(unit_strategy(), 1..6),
        margin in prop::collection::vec(-6.0f64..0.0, 1..100),
    ) {
        let fleet = fleet_of(&units);
        let e = dispatch_metrics(Policy::Exact, &margin, &fleet, None).ens_energy;
        let g = dispatch_metrics(Policy::Greedy, &margin, &fleet, None).ens_energy;
        prop_assert!(e <= g + 1e-9, "exact {} greedy {}", e, g);
    }

    #[test]
    fn avg_model_is_monotone(
        offset in prop::array::uniform24(-3.0f64..3.0),
        margin in prop::collection::vec(-5.0f64..5.0, 48),
        bump in prop::collection::vec(0.0f64..2.0, 48),
    ) {
        let profile = AvgProfile { nominal: [0.0; 24], offset };
        let higher: Vec<f64> = margin.iter().zip(&bump).map(|(m, b)| m + b).collect();
        let lo = profile.metrics(&margin);
        let hi = profile.metrics(&higher);
        prop_assert!(hi.lol_hours <= lo.lol_hours && hi.ens_energy <= lo.ens_energy + 1e-12);
    }

    #[test]
    fn peak_shave_is_feasible_and_no_worse_than_idle(
        nominal in prop::array::uniform24(0.0f64..100.0),
        power in 0.1f64..30.0,
        energy in 0.1f64..200.0,
    ) {
        let fleet = fleet_of(&[(power, energy)]);
        let p = average_profile(&fleet, nominal).unwrap();
        let s = p.offset;
        prop_assert!(s.iter().sum::<f64>().abs() < 1e-6 * (1.0 + power));
        let mut c = 0.0f64;
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for v in s {
            prop_assert!(v.abs() <= power * (1.0 + 1e-6));
            c += v;
            lo = lo.min(c);
            hi = hi.max(c);
        }
        prop_assert!(hi - lo <= energy * (1.0 + 1e-6) + 1e-6);
        let obj = |x: &[f64; 24]| nominal.iter().zip(x).map(|(d, s)| (d + s).powi(2)).sum::<f64>();
        prop_assert!(obj(&s) <= obj(&[0.0; 24]) + 1e-6);
    }
}

#[test]
fn zero_offset_reduces_to_storage_free_risk() {
    let margin = vec![-1.0, 2.0, -0.5, 0.0];
    assert_eq!(AvgProfile::zero().metrics(&margin), OutcomeVector::new(2.0, 1.5));
    assert_eq!(AvgProfile::zero().metrics(&[1e9; 48]), OutcomeVector::ZERO);
}

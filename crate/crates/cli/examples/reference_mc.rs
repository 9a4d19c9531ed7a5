//! Long plain Monte Carlo run of the Exact model on the reference system.
//!
//! Usage: `reference_mc [SAMPLES] [OUT]`. The acceptance tests read the
//! result from `tests/data/reference_mc.json`.

use std::time::Instant;

use adequacy::{LevelKind, System, SystemConfig};
use adequacy_cli::system_hash;
use mlmc::{run_fixed, Metric};
use serde_json::json;

fn main() {
    let samples: u64 = std::env::args().nth(1).map_or(1_000_000, |s| s.parse().expect("sample count"));
    let out = std::env::args().nth(2).unwrap_or_else(|| "crates/cli/tests/data/reference_mc.json".into());
    let config = SystemConfig::reference();
    let hash = system_hash(&config);
    let system = System::build(config).expect("reference system builds");
    let exact = system.level(LevelKind::Exact, None).expect("exact level");
    let seed = 0x5eed_0f4e_f000;
    let start = Instant::now();
    let est = run_fixed(&[exact], &system.generator, None, &[samples], seed, 0).expect("run succeeds");
    let doc = json!({
        "system_hash": hash,
        "samples": samples,
        "seed": seed,
        "lole": est.q_hat(Metric::Lole),
        "lole_se": est.std_error(Metric::Lole),
        "eens": est.q_hat(Metric::Eens),
        "eens_se": est.std_error(Metric::Eens),
        "seconds": start.elapsed().as_secs_f64(),
    });
    std::fs::write(&out, serde_json::to_string_pretty(&doc).unwrap() + "\n").expect("write reference");
    println!("{doc}");
}

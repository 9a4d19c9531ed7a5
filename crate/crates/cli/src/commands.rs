use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use adequacy::scenario::{GeneratorGroup, TraceLibrary};
use adequacy::surrogate::{accuracy_study, build_training_set, Provenance, StudyRow, SurrogateModel, TrainingSet};
use adequacy::{AdequacyError, System};
use mlmc::run_mlmc;
use mlmc::seed::derive_seed;
use serde::{Deserialize, Serialize};

use crate::config::{sha256_hex, system_hash, ExperimentConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::{levels_csv, RunReport, RunResult};

pub const DEMAND_FILE: &str = "demand.csv";
pub const WIND_FILE: &str = "wind.csv";
pub const FLEET_FILE: &str = "fleet.csv";
pub const STORAGE_FILE: &str = "storage.csv";
pub const COPT_FILE: &str = "copt.csv";
pub const LIBRARIES_FILE: &str = "libraries.json";
pub const TRAINING_SET_FILE: &str = "training_set.csv";
pub const MODEL_FILE: &str = "surrogate.json";
pub const TRAINING_REPORT_FILE: &str = "training_report.json";
pub const ACCURACY_FILE: &str = "accuracy.csv";
pub const REPORTS_DIR: &str = "reports";

/// Summary written next to generated libraries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibrarySummary {
    pub config_hash: String,
    pub demand_traces: usize,
    pub demand_peak_mw: f64,
    pub demand_mean_mw: f64,
    pub wind_traces: usize,
    pub wind_mean_capacity_factor: f64,
    pub installed_thermal_mw: f64,
    pub copt_states: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTimings {
    pub mining_seconds: f64,
    pub gbt_seconds: f64,
    pub regressor_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub config_hash: String,
    pub seed: u64,
    pub n_days: usize,
    pub curtailed_days: usize,
    pub holdout_days: usize,
    pub holdout_curtailed_days: usize,
    /// Daily LOL RMSE over all holdout days, hours.
    pub holdout_lol_rmse: Option<f64>,
    /// Daily ENS RMSE over curtailed holdout days, MWh.
    pub holdout_ens_rmse: Option<f64>,
    pub model_hash: String,
    pub training_set_hash: String,
    pub timings: TrainingTimings,
}

impl TrainingReport {
    /// Copy with the wall-clock fields zeroed.
    pub fn without_timing(&self) -> TrainingReport {
        TrainingReport {
            timings: TrainingTimings { mining_seconds: 0.0, gbt_seconds: 0.0, regressor_seconds: 0.0 },
            ..self.clone()
        }
    }
}

/// A surrogate model with the hash of its serialized form.
#[derive(Clone)]
pub struct LoadedModel {
    pub model: Arc<SurrogateModel>,
    pub hash: String,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn fleet_csv(groups: &[GeneratorGroup]) -> String {
    let mut s = String::from("count,capacity_mw,fail_rate_per_h,repair_rate_per_h\n");
    for g in groups {
        s += &format!("{},{},{},{}\n", g.count, g.capacity, g.fail_rate, g.repair_rate);
    }
    s
}

fn storage_csv(system: &System) -> String {
    let mut s = String::from("power_mw,energy_mwh\n");
    for u in &system.storage.units {
        s += &format!("{},{}\n", u.power, u.energy);
    }
    s
}

/// Write trace libraries, fleet tables and their summary into the output
/// directory.
pub fn generate(cfg: &ExperimentConfig) -> CliResult<LibrarySummary> {
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let demand = cfg.system.demand.generate()?;
    let wind = cfg.system.wind.generate()?;
    demand.write_csv(&dir.join(DEMAND_FILE))?;
    wind.write_csv(&dir.join(WIND_FILE))?;
    let summary = LibrarySummary {
        config_hash: system_hash(&cfg.system),
        demand_traces: demand.len(),
        demand_peak_mw: demand.max(),
        demand_mean_mw: demand.mean(),
        wind_traces: wind.len(),
        wind_mean_capacity_factor: wind.mean() / cfg.system.wind.capacity_mw,
        installed_thermal_mw: 0.0,
        copt_states: 0,
    };
    let system = System::from_libraries(cfg.system.clone(), demand, wind)?;
    let summary = LibrarySummary {
        installed_thermal_mw: system.generator.installed_capacity(),
        copt_states: system.copt.len(),
        ..summary
    };
    system.copt.write_csv(&dir.join(COPT_FILE))?;
    write(&dir.join(FLEET_FILE), fleet_csv(&cfg.system.fleet))?;
    write(&dir.join(STORAGE_FILE), storage_csv(&system))?;
    write(&dir.join(LIBRARIES_FILE), to_json(&summary))?;
    Ok(summary)
}

/// Build the system from the libraries in the output directory, checking they
/// were generated for this system configuration.
pub fn load_system(cfg: &ExperimentConfig) -> CliResult<System> {
    let dir = &cfg.output.dir;
    let summary_path = dir.join(LIBRARIES_FILE);
    let summary: LibrarySummary = serde_json::from_str(&read(&summary_path)?)
        .map_err(|e| CliError::Missing(format!("{}: {e}", summary_path.display())))?;
    let hash = system_hash(&cfg.system);
    if summary.config_hash != hash {
        return Err(CliError::Missing(format!(
            "libraries in {} were generated for another system configuration; run `adequacy generate` first",
            dir.display()
        )));
    }
    let demand = TraceLibrary::read_csv(&dir.join(DEMAND_FILE))?;
    let wind = TraceLibrary::read_csv(&dir.join(WIND_FILE))?;
    Ok(System::from_libraries(cfg.system.clone(), demand, wind)?)
}

fn holdout_rmse(model: &SurrogateModel, holdout: &TrainingSet) -> (Option<f64>, Option<f64>) {
    let sq = |pairs: Vec<(f64, f64)>| {
        (!pairs.is_empty())
            .then(|| (pairs.iter().map(|(p, y)| (p - y).powi(2)).sum::<f64>() / pairs.len() as f64).sqrt())
    };
    let lol =
        holdout.days.iter().map(|d| (model.predict_lol(&model.normalizer.transform(&d.features)), d.lol)).collect();
    let ens = holdout
        .days
        .iter()
        .filter(|d| d.curtailed())
        .map(|d| (model.predict_ens(&model.normalizer.transform(&d.features)), d.ens))
        .collect();
    (sq(lol), sq(ens))
}

fn untrainable_hint(e: AdequacyError) -> CliError {
    match e {
        AdequacyError::Untrainable(m) => CliError::Runtime(format!(
            "ENS regressor untrainable: {m}; increase training.n_days or lower the system's reliability"
        )),
        other => other.into(),
    }
}

/// Mine training days, fit the surrogate and write model, training set and
/// report.
pub fn train(cfg: &ExperimentConfig) -> CliResult<TrainingReport> {
    let system = load_system(cfg)?;
    let t = &cfg.training;
    let hash = system_hash(&cfg.system);
    let probe = system.config.mining_probe_days;
    let start = Instant::now();
    let ts = build_training_set(
        &system.generator,
        &system.storage,
        t.n_days,
        Provenance { seed: t.seed, config_hash: hash.clone() },
        probe,
    )?;
    let mining_seconds = start.elapsed().as_secs_f64();
    let (model, fit) = SurrogateModel::train(&ts, &t.surrogate_params()).map_err(untrainable_hint)?;
    let model_json = model.to_json()?;
    let (holdout_days, holdout_curtailed_days, holdout_lol_rmse, holdout_ens_rmse) = if t.holdout_days > 0 {
        let holdout = build_training_set(
            &system.generator,
            &system.storage,
            t.holdout_days,
            Provenance { seed: derive_seed(t.seed, 1), config_hash: hash.clone() },
            probe,
        )?;
        let (lol, ens) = holdout_rmse(&model, &holdout);
        (holdout.len(), holdout.days.iter().filter(|d| d.curtailed()).count(), lol, ens)
    } else {
        (0, 0, None, None)
    };

    let dir = &cfg.output.dir;
    let ts_path = dir.join(TRAINING_SET_FILE);
    ts.write(&ts_path)?;
    write(&dir.join(MODEL_FILE), &model_json)?;
    let report = TrainingReport {
        config_hash: hash,
        seed: t.seed,
        n_days: ts.len(),
        curtailed_days: ts.days.iter().filter(|d| d.curtailed()).count(),
        holdout_days,
        holdout_curtailed_days,
        holdout_lol_rmse,
        holdout_ens_rmse,
        model_hash: sha256_hex(model_json.as_bytes()),
        training_set_hash: sha256_hex(read(&ts_path)?.as_bytes()),
        timings: TrainingTimings { mining_seconds, gbt_seconds: fit.gbt, regressor_seconds: fit.regressor },
    };
    write(&dir.join(TRAINING_REPORT_FILE), to_json(&report))?;
    Ok(report)
}

/// Load the trained surrogate, checking it belongs to this system.
pub fn load_model(cfg: &ExperimentConfig) -> CliResult<LoadedModel> {
    let path = cfg.output.dir.join(MODEL_FILE);
    let text = fs::read_to_string(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Missing(format!("{}: no trained surrogate; run `adequacy train` first", path.display()))
        } else {
            CliError::io(&path, e)
        }
    })?;
    let model = SurrogateModel::from_json(&text).map_err(|e| CliError::Missing(format!("{}: {e}", path.display())))?;
    let hash = system_hash(&cfg.system);
    if model.provenance.config_hash != hash {
        return Err(CliError::Missing(format!(
            "{} was trained for another system configuration; run `adequacy train` again",
            path.display()
        )));
    }
    Ok(LoadedModel { model: Arc::new(model), hash: sha256_hex(text.as_bytes()) })
}

/// Run `run.repeats` independent estimates of one architecture.
pub fn run_estimate(
    system: &System,
    model: Option<&LoadedModel>,
    run: &RunConfig,
    config_hash: &str,
) -> CliResult<RunReport> {
    run.validate()?;
    let arch = &run.architecture;
    if arch.needs_surrogate() && model.is_none() {
        return Err(CliError::Missing(format!("architecture {arch} needs a trained surrogate model")));
    }
    let surrogate = model.map(|m| &m.model);
    let (stack, bottom) = system.stack(arch, surrogate, &run.nominal_costs)?;
    let runs = (0..run.repeats)
        .map(|r| {
            let est = run_mlmc(&stack, &system.generator, bottom, &run.mlmc_config(r))?;
            Ok(RunResult::from_estimate(&est))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let model_hash = if arch.needs_surrogate() { model.map(|m| m.hash.clone()) } else { None };
    Ok(RunReport::new(run, config_hash.to_string(), model_hash, runs))
}

/// File stem for an architecture, e.g. `Exact_HGB-Gre_Avg`.
pub fn report_stem(architecture: &str) -> String {
    architecture.replace('|', "_").replace('+', "-")
}

/// Paths written by [`estimate`].
#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub json: PathBuf,
    pub table: PathBuf,
    pub levels: PathBuf,
}

/// Estimate the configured architecture and write its report, table row and
/// per-level table.
pub fn estimate(cfg: &ExperimentConfig, baseline: Option<&RunReport>) -> CliResult<(RunReport, ReportPaths)> {
    cfg.run.validate()?;
    let system = load_system(cfg)?;
    let model = if cfg.run.architecture.needs_surrogate() { Some(load_model(cfg)?) } else { None };
    let mut report = run_estimate(&system, model.as_ref(), &cfg.run, &system_hash(&cfg.system))?;
    if let Some(b) = baseline {
        report.set_baseline(b)?;
    }
    let stem = report_stem(&report.architecture);
    let dir = cfg.output.dir.join(REPORTS_DIR);
    let paths = ReportPaths {
        json: dir.join(format!("{stem}.json")),
        table: dir.join(format!("{stem}.csv")),
        levels: dir.join(format!("{stem}.levels.csv")),
    };
    write(&paths.json, report.to_json() + "\n")?;
    write(&paths.table, report.to_csv())?;
    write(&paths.levels, levels_csv(&report))?;
    Ok((report, paths))
}

/// Train-size accuracy study on independently mined pools.
pub fn accuracy(cfg: &ExperimentConfig) -> CliResult<Vec<StudyRow>> {
    let system = load_system(cfg)?;
    let t = &cfg.training;
    let hash = system_hash(&cfg.system);
    let mine = |n: usize, stream: u64| {
        build_training_set(
            &system.generator,
            &system.storage,
            n,
            Provenance { seed: derive_seed(t.seed, stream), config_hash: hash.clone() },
            system.config.mining_probe_days,
        )
    };
    let pool = mine(t.study_pool_days, 2)?;
    let test = mine(t.study_test_days, 3)?;
    let rows =
        accuracy_study(&pool, &test, &t.study_sizes, t.study_repeats, &t.surrogate_params(), derive_seed(t.seed, 4))
            .map_err(untrainable_hint)?;
    let mut s = String::from("train_size,repeats,lol_rmse,lol_rmse_se,ens_rmse,ens_rmse_se\n");
    for r in &rows {
        s += &format!(
            "{},{},{},{},{},{}\n",
            r.train_size, r.repeats, r.lol_rmse.mean, r.lol_rmse.se, r.ens_rmse.mean, r.ens_rmse.se
        );
    }
    write(&cfg.output.dir.join(ACCURACY_FILE), s)?;
    Ok(rows)
}

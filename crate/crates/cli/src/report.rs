use std::path::Path;

use mlmc::{Metric, MlmcEstimate, Speed};
use serde::{Deserialize, Serialize};

use crate::config::{BudgetMode, RunConfig};
use crate::error::{CliError, CliResult};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Column headers of the comparison table, in order.
pub const TABLE_HEADER: [&str; 10] = [
    "architecture",
    "time_s",
    "lole",
    "lole_se",
    "eens",
    "eens_se",
    "lole_speed",
    "eens_speed",
    "lole_speedup",
    "eens_speedup",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMetric {
    /// Mean of the level difference `X_l - X_{l-1}`.
    pub mean_y: f64,
    pub sigma_y: f64,
    /// Correlation between the two models of the pair; `None` for the bottom
    /// level and for degenerate pairs.
    pub rho: Option<f64>,
    /// Fraction of the estimate contributed by this level.
    pub share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub name: String,
    pub n: u64,
    pub analytic: bool,
    pub lole: LevelMetric,
    pub eens: LevelMetric,
    /// Mean seconds per coupled sample.
    pub tau_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetric {
    pub estimate: f64,
    pub std_error: f64,
    /// `q^2 / (t sigma^2)`; `None` when the estimator variance is zero.
    pub speed: Option<f64>,
}

/// One run of the estimator. Level 0 is the bottom of the stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub levels: Vec<LevelReport>,
    pub lole: RunMetric,
    pub eens: RunMetric,
    pub exploratory_only: bool,
    pub seconds: f64,
}

impl RunResult {
    pub fn from_estimate(est: &MlmcEstimate) -> Self {
        let level_metric = |l: &mlmc::LevelEstimate, m: Metric| {
            let q = est.q_hat(m);
            LevelMetric {
                mean_y: l.contribution.get(m),
                sigma_y: l.sigma_y(m),
                rho: l.correlation(m),
                share: (q != 0.0).then(|| l.contribution.get(m) / q),
            }
        };
        let levels = est
            .levels
            .iter()
            .map(|l| LevelReport {
                name: l.name.clone(),
                n: l.n,
                analytic: l.analytic,
                lole: level_metric(l, Metric::Lole),
                eens: level_metric(l, Metric::Eens),
                tau_seconds: l.tau,
            })
            .collect();
        let metric = |m: Metric| {
            let e = est.metric(m);
            RunMetric {
                estimate: e.q_hat,
                std_error: e.std_error,
                speed: match e.speed {
                    Speed::Finite(v) => Some(v),
                    Speed::Infinite => None,
                },
            }
        };
        Self {
            levels,
            lole: metric(Metric::Lole),
            eens: metric(Metric::Eens),
            exploratory_only: est.exploratory_only,
            seconds: est.total_time,
        }
    }

    pub fn metric(&self, m: Metric) -> &RunMetric {
        match m {
            Metric::Lole => &self.lole,
            Metric::Eens => &self.eens,
        }
    }
}

/// Aggregate over the runs of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    /// Mean of the per-run estimates.
    pub estimate: f64,
    /// The run's own standard error for a single run, otherwise the standard
    /// error of the mean across runs.
    pub std_error: f64,
    /// Mean per-run speed; `None` if any run had zero variance.
    pub speed: Option<f64>,
    /// `speed / baseline speed` when a baseline report was given.
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub architecture: String,
    pub config_hash: String,
    pub model_hash: Option<String>,
    pub seed: u64,
    pub budget_mode: BudgetMode,
    pub budget_seconds: f64,
    pub exploratory_n: u64,
    pub target_metric: Metric,
    pub lole: MetricSummary,
    pub eens: MetricSummary,
    /// Mean wall-clock seconds per run.
    pub mean_seconds: f64,
    pub runs: Vec<RunResult>,
}

impl RunReport {
    pub fn new(run: &RunConfig, config_hash: String, model_hash: Option<String>, runs: Vec<RunResult>) -> Self {
        assert!(!runs.is_empty(), "a report needs at least one run");
        let summary = |m: Metric| {
            let r = runs.len() as f64;
            let estimates: Vec<f64> = runs.iter().map(|x| x.metric(m).estimate).collect();
            let mean = estimates.iter().sum::<f64>() / r;
            let std_error = if runs.len() == 1 {
                runs[0].metric(m).std_error
            } else {
                (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (r - 1.0) / r).sqrt()
            };
            let speeds: Option<Vec<f64>> = runs.iter().map(|x| x.metric(m).speed).collect();
            MetricSummary { estimate: mean, std_error, speed: speeds.map(|s| s.iter().sum::<f64>() / r), speedup: None }
        };
        Self {
            format_version: REPORT_FORMAT_VERSION,
            architecture: run.architecture.to_string(),
            config_hash,
            model_hash,
            seed: run.seed,
            budget_mode: run.budget_mode,
            budget_seconds: run.budget,
            exploratory_n: run.exploratory_n,
            target_metric: run.target_metric,
            lole: summary(Metric::Lole),
            eens: summary(Metric::Eens),
            mean_seconds: runs.iter().map(|x| x.seconds).sum::<f64>() / runs.len() as f64,
            runs,
        }
    }

    pub fn metric(&self, m: Metric) -> &MetricSummary {
        match m {
            Metric::Lole => &self.lole,
            Metric::Eens => &self.eens,
        }
    }

    fn metric_mut(&mut self, m: Metric) -> &mut MetricSummary {
        match m {
            Metric::Lole => &mut self.lole,
            Metric::Eens => &mut self.eens,
        }
    }

    /// Fill in speedups relative to `baseline`.
    pub fn set_baseline(&mut self, baseline: &RunReport) -> CliResult<()> {
        if baseline.config_hash != self.config_hash {
            return Err(CliError::Config(format!(
                "baseline report is for system {} but this run is for {}",
                baseline.config_hash, self.config_hash
            )));
        }
        for m in Metric::ALL {
            let base = baseline.metric(m).speed;
            let s = self.metric_mut(m);
            s.speedup = match (s.speed, base) {
                (Some(a), Some(b)) if b > 0.0 => Some(a / b),
                _ => None,
            };
        }
        Ok(())
    }

    /// Copy with every wall-clock derived field zeroed.
    pub fn without_timing(&self) -> RunReport {
        let mut r = self.clone();
        r.mean_seconds = 0.0;
        for m in Metric::ALL {
            let s = r.metric_mut(m);
            s.speed = None;
            s.speedup = None;
        }
        for run in &mut r.runs {
            run.seconds = 0.0;
            run.lole.speed = None;
            run.eens.speed = None;
            for l in &mut run.levels {
                l.tau_seconds = 0.0;
            }
        }
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad run report: {e}")))?;
        if r.format_version != REPORT_FORMAT_VERSION {
            return Err(CliError::Config(format!(
                "run report format {} is not supported (expected {REPORT_FORMAT_VERSION})",
                r.format_version
            )));
        }
        Ok(r)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn table_row(&self, speedups: [Option<f64>; 2]) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        vec![
            self.architecture.clone(),
            format!("{}", self.mean_seconds),
            format!("{}", self.lole.estimate),
            format!("{}", self.lole.std_error),
            format!("{}", self.eens.estimate),
            format!("{}", self.eens.std_error),
            opt(self.lole.speed),
            opt(self.eens.speed),
            opt(speedups[0]),
            opt(speedups[1]),
        ]
    }

    /// This report as a one-row table.
    pub fn to_csv(&self) -> String {
        table_csv(std::iter::once(self.table_row([self.lole.speedup, self.eens.speedup])))
    }
}

fn table_csv(rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 table")
}

/// Comparison table of reports on one system. Speedups are relative to the
/// plain Monte Carlo report (architecture `Exact`) when one is present.
pub fn compare(reports: &[RunReport]) -> CliResult<String> {
    let Some(first) = reports.first() else {
        return Err(CliError::Config("compare needs at least one report".into()));
    };
    if let Some(r) = reports.iter().find(|r| r.config_hash != first.config_hash) {
        return Err(CliError::Config(format!(
            "reports are for different systems: {} ({}) vs {} ({})",
            first.architecture, first.config_hash, r.architecture, r.config_hash
        )));
    }
    let mc = reports.iter().find(|r| r.architecture == "Exact");
    let ratio = |r: &RunReport, m: Metric| match (r.metric(m).speed, mc.and_then(|b| b.metric(m).speed)) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    Ok(table_csv(reports.iter().map(|r| r.table_row([ratio(r, Metric::Lole), ratio(r, Metric::Eens)]))))
}

/// Per-level rows of every run, for plotting layer contributions.
pub fn levels_csv(report: &RunReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "architecture",
        "run",
        "level",
        "name",
        "n",
        "analytic",
        "tau_s",
        "lole_mean_y",
        "lole_sigma_y",
        "lole_rho",
        "lole_share",
        "eens_mean_y",
        "eens_sigma_y",
        "eens_rho",
        "eens_share",
    ])
    .expect("in-memory write");
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for (r, run) in report.runs.iter().enumerate() {
        for (l, lv) in run.levels.iter().enumerate() {
            w.write_record([
                report.architecture.clone(),
                r.to_string(),
                l.to_string(),
                lv.name.clone(),
                lv.n.to_string(),
                lv.analytic.to_string(),
                format!("{}", lv.tau_seconds),
                format!("{}", lv.lole.mean_y),
                format!("{}", lv.lole.sigma_y),
                opt(lv.lole.rho),
                opt(lv.lole.share),
                format!("{}", lv.eens.mean_y),
                format!("{}", lv.eens.sigma_y),
                opt(lv.eens.rho),
                opt(lv.eens.share),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 table")
}

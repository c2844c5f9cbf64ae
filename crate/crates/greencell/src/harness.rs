//! Seeded Monte-Carlo experiment driver: runs every scheme on identical
//! (scenario, wind) draws, aggregates normalized non-renewable power per
//! scheme and turbine radius, and emits a two-section CSV.

use crate::formulation::surrogate_nonrenew_total;
use crate::milp::{SolveStats, SolverConfig};
use crate::power::{
    p_nonrenew_total, realization_from_speeds, sample_wind_speeds, PowerParams, WindModel,
};
use crate::scenario::{
    build_scenario, desk_scenario, generate_users, paper_scenario, Scenario, ScenarioError,
};
use crate::schemes::{carbon_aware_with_stats, minimized_power_with_stats, shortest_distance};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Salt separating the wind stream from the user-position stream of the
/// same trial.
const WIND_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    CarbonAware,
    ShortestDistance,
    MinimizedPower,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [
        SchemeKind::CarbonAware,
        SchemeKind::ShortestDistance,
        SchemeKind::MinimizedPower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::CarbonAware => "carbon_aware",
            SchemeKind::ShortestDistance => "shortest_distance",
            SchemeKind::MinimizedPower => "minimized_power",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "carbon_aware" | "carbon-aware" => Ok(SchemeKind::CarbonAware),
            "shortest_distance" | "shortest-distance" => Ok(SchemeKind::ShortestDistance),
            "minimized_power" | "minimized-power" => Ok(SchemeKind::MinimizedPower),
            other => Err(format!("unknown scheme {other:?}")),
        }
    }
}

/// Where each trial's scenario comes from. `Paper` and `Desk` redraw user
/// positions per trial; `File` pins one snapshot for every trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ScenarioSource {
    Paper,
    Desk,
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub turbine_radii_m: Vec<f64>,
    pub base_seed: u64,
    pub scenario: ScenarioSource,
    pub schemes: Vec<SchemeKind>,
    pub solver: SolverConfig,
    pub wind: WindModel,
    pub power: PowerParams,
    /// Overrides the profile's user count (positions redrawn per trial).
    pub user_count: Option<usize>,
    pub mbs_capacity: Option<u32>,
    pub sbs_capacity: Option<u32>,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ExperimentConfig {
    /// Fast profile: the four-cell desk layout, 100 trials.
    pub fn desk() -> Self {
        Self {
            trials: 100,
            turbine_radii_m: vec![1.5, 3.0, 4.5],
            base_seed: 1,
            scenario: ScenarioSource::Desk,
            schemes: SchemeKind::ALL.to_vec(),
            solver: SolverConfig::default(),
            wind: WindModel::default(),
            power: PowerParams::default(),
            user_count: None,
            mbs_capacity: None,
            sbs_capacity: None,
            output: PathBuf::from("greencell_report.csv"),
        }
    }

    /// Full-scale profile: nine stations, 300 users, 500 trials. The
    /// planner MILPs at this size are heavy for the built-in solver; pair
    /// with a solver time limit when exploring.
    pub fn paper() -> Self {
        Self {
            trials: 500,
            scenario: ScenarioSource::Paper,
            ..Self::desk()
        }
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|source| HarnessError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::BadConfig("trials must be >= 1".into()));
        }
        if self.turbine_radii_m.is_empty() || self.turbine_radii_m.iter().any(|&r| !(r > 0.0)) {
            return Err(HarnessError::BadConfig(
                "turbine_radii_m must be nonempty and positive".into(),
            ));
        }
        if self.schemes.is_empty() {
            return Err(HarnessError::BadConfig("schemes must be nonempty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{failed} of {trials} trials failed (above the 1% abort threshold); first: {first}")]
    TooManyFailures {
        failed: usize,
        trials: usize,
        first: String,
    },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// One (trial, radius, scheme) outcome. `surrogate_w` is the planner's own
/// objective at the chosen decision, kept for dominance checks; the CSV
/// carries the exact objective.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub radius_m: f64,
    pub scheme: SchemeKind,
    pub nonrenew_w: f64,
    pub surrogate_w: f64,
    pub nodes: u64,
    pub simplex_iters: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRecord {
    pub radius_m: f64,
    pub scheme: SchemeKind,
    pub mean_w: f64,
    /// Mean divided by the worst scheme mean at this radius; the worst
    /// scheme reads 1.0, and an all-zero radius reads 0 across the board.
    pub normalized: f64,
    /// Percent reduction of the carbon-aware mean against this scheme's
    /// mean; absent when carbon-aware is not in the scheme set.
    pub reduction_vs_carbon_aware_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailedTrial {
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRecord>,
    pub failed: Vec<FailedTrial>,
    pub trials_requested: usize,
}

pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed ^ trial as u64
}

fn scenario_for_trial(
    config: &ExperimentConfig,
    template: Option<&Scenario>,
    seed: u64,
) -> Result<Scenario, ScenarioError> {
    let base = match (&config.scenario, template) {
        (ScenarioSource::File { .. }, Some(t)) => t.clone(),
        (ScenarioSource::Paper, _) => paper_scenario(seed),
        (ScenarioSource::Desk, _) => desk_scenario(seed),
        (ScenarioSource::File { path }, None) => Scenario::load(path)?,
    };
    if config.user_count.is_none()
        && config.mbs_capacity.is_none()
        && config.sbs_capacity.is_none()
    {
        return Ok(base);
    }
    let mut stations = base.stations().to_vec();
    if let Some(cap) = config.mbs_capacity {
        stations[0].capacity = cap;
    }
    if let Some(cap) = config.sbs_capacity {
        for bs in stations.iter_mut().skip(1) {
            bs.capacity = cap;
        }
    }
    let users = match config.user_count {
        Some(count) => generate_users(seed, count, stations[0].radius_m),
        None => base.users().to_vec(),
    };
    build_scenario(stations, users)
}

/// Runs the full experiment: per trial, one scenario draw and one wind draw
/// shared by every scheme and every turbine radius. Failed trials are
/// excluded and reported; more than 1% of them aborts the run.
///
/// Trials execute in parallel; records come back in (trial, radius, scheme)
/// order regardless of scheduling, so the report is deterministic.
pub fn run_experiment(config: &ExperimentConfig) -> Result<TrialReport, HarnessError> {
    config.validate()?;
    let template = match &config.scenario {
        ScenarioSource::File { path } => Some(Scenario::load(path)?),
        _ => None,
    };

    let outcomes: Vec<Result<Vec<TrialRecord>, FailedTrial>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, template.as_ref(), trial))
        .collect();

    let mut records = Vec::new();
    let mut failed = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(mut trial_records) => records.append(&mut trial_records),
            Err(failure) => failed.push(failure),
        }
    }

    if failed.len() as f64 > 0.01 * config.trials as f64 {
        return Err(HarnessError::TooManyFailures {
            failed: failed.len(),
            trials: config.trials,
            first: failed[0].error.clone(),
        });
    }

    let aggregates = aggregate(config, &records);
    Ok(TrialReport {
        records,
        aggregates,
        failed,
        trials_requested: config.trials,
    })
}

fn run_trial(
    config: &ExperimentConfig,
    template: Option<&Scenario>,
    trial: usize,
) -> Result<Vec<TrialRecord>, FailedTrial> {
    let seed = trial_seed(config.base_seed, trial);
    let fail = |error: String| FailedTrial { trial, seed, error };

    let scenario =
        scenario_for_trial(config, template, seed).map_err(|e| fail(e.to_string()))?;
    // One wind draw per (trial, station), reused across radii so the
    // cross-radius comparison is paired.
    let speeds = sample_wind_speeds(
        &config.wind,
        scenario.n_stations(),
        seed ^ WIND_SEED_SALT,
    );

    // The baselines never see the turbine radius, so solve them once per
    // trial and reuse the decision (stats repeat on each radius row).
    let greedy = if config.schemes.contains(&SchemeKind::ShortestDistance) {
        Some(shortest_distance(&scenario).map_err(|e| fail(e.to_string()))?)
    } else {
        None
    };
    let min_power = if config.schemes.contains(&SchemeKind::MinimizedPower) {
        Some(
            minimized_power_with_stats(&scenario, &config.power, &config.solver)
                .map_err(|e| fail(e.to_string()))?,
        )
    } else {
        None
    };

    let mut records = Vec::new();
    for &radius in &config.turbine_radii_m {
        let scenario_r = scenario.with_turbine_radius(radius);
        let renew = realization_from_speeds(&scenario_r, &config.power, &speeds);
        for &scheme in &config.schemes {
            let (decision, stats) = match scheme {
                SchemeKind::CarbonAware => {
                    carbon_aware_with_stats(&scenario_r, &config.power, &renew, &config.solver)
                        .map_err(|e| fail(e.to_string()))?
                }
                SchemeKind::ShortestDistance => (
                    greedy.clone().expect("solved above"),
                    SolveStats::default(),
                ),
                SchemeKind::MinimizedPower => min_power.clone().expect("solved above"),
            };
            let nonrenew_w = p_nonrenew_total(&scenario_r, &config.power, &decision, &renew);
            let surrogate_w =
                surrogate_nonrenew_total(&scenario_r, &config.power, &decision, &renew);
            records.push(TrialRecord {
                trial,
                seed,
                radius_m: radius,
                scheme,
                nonrenew_w,
                surrogate_w,
                nodes: stats.nodes,
                simplex_iters: stats.simplex_iterations,
            });
        }
    }
    Ok(records)
}

fn aggregate(config: &ExperimentConfig, records: &[TrialRecord]) -> Vec<AggregateRecord> {
    let mut aggregates = Vec::new();
    for &radius in &config.turbine_radii_m {
        let mean_of = |scheme: SchemeKind| -> f64 {
            let scores: Vec<f64> = records
                .iter()
                .filter(|r| r.radius_m == radius && r.scheme == scheme)
                .map(|r| r.nonrenew_w)
                .collect();
            if scores.is_empty() {
                0.0
            } else {
                scores.iter().sum::<f64>() / scores.len() as f64
            }
        };
        let means: Vec<(SchemeKind, f64)> =
            config.schemes.iter().map(|&s| (s, mean_of(s))).collect();
        let worst = means.iter().map(|&(_, m)| m).fold(0.0f64, f64::max);
        let carbon_mean = means
            .iter()
            .find(|&&(s, _)| s == SchemeKind::CarbonAware)
            .map(|&(_, m)| m);
        for &(scheme, mean_w) in &means {
            let normalized = if worst > 0.0 { mean_w / worst } else { 0.0 };
            let reduction_vs_carbon_aware_pct = carbon_mean.map(|ca| {
                if mean_w > 0.0 {
                    (1.0 - ca / mean_w) * 100.0
                } else {
                    0.0
                }
            });
            aggregates.push(AggregateRecord {
                radius_m: radius,
                scheme,
                mean_w,
                normalized,
                reduction_vs_carbon_aware_pct,
            });
        }
    }
    aggregates
}

impl TrialReport {
    /// Mean exact non-renewable power of one scheme at one radius.
    pub fn mean(&self, radius_m: f64, scheme: SchemeKind) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|a| a.radius_m == radius_m && a.scheme == scheme)
            .map(|a| a.mean_w)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "trials: {} requested, {} failed\n",
            self.trials_requested,
            self.failed.len()
        ));
        for a in &self.aggregates {
            let reduction = match a.reduction_vs_carbon_aware_pct {
                Some(pct) => format!("{pct:.2}%"),
                None => "-".to_string(),
            };
            out.push_str(&format!(
                "radius {:>4.1} m  {:<18} mean {:>12.3} W  normalized {:<8.4} carbon-aware cut {}\n",
                a.radius_m, a.scheme, a.mean_w, a.normalized, reduction
            ));
        }
        out
    }
}

/// Writes the report: a per-trial section and an aggregate section,
/// separated by a blank line. All numeric formatting is fixed-precision so
/// identical reports serialize to identical bytes.
pub fn emit_csv(report: &TrialReport, path: &Path) -> Result<(), HarnessError> {
    let io_err = |source: std::io::Error| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = File::create(path).map_err(io_err)?;
    writeln!(
        file,
        "# normalized = scheme mean / worst scheme mean at that radius (worst reads 1.0; all-zero radius reads 0)"
    )
    .map_err(io_err)?;
    writeln!(file, "# excluded_trials = {}", report.failed.len()).map_err(io_err)?;
    writeln!(
        file,
        "trial,seed,radius_m,scheme,nonrenew_w,nodes,simplex_iters"
    )
    .map_err(io_err)?;
    for r in &report.records {
        writeln!(
            file,
            "{},{},{:.2},{},{:.6},{},{}",
            r.trial, r.seed, r.radius_m, r.scheme, r.nonrenew_w, r.nodes, r.simplex_iters
        )
        .map_err(io_err)?;
    }
    writeln!(file).map_err(io_err)?;
    writeln!(
        file,
        "radius_m,scheme,mean_w,normalized,reduction_vs_scheme_pct"
    )
    .map_err(io_err)?;
    for a in &report.aggregates {
        let reduction = match a.reduction_vs_carbon_aware_pct {
            Some(pct) => format!("{pct:.4}"),
            None => String::new(),
        };
        writeln!(
            file,
            "{:.2},{},{:.6},{:.6},{}",
            a.radius_m, a.scheme, a.mean_w, a.normalized, reduction
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// Parses a file produced by [`emit_csv`] back into trial rows and
/// aggregate rows (numbers only, at emission precision).
pub fn parse_csv(text: &str) -> (Vec<(usize, u64, f64, String, f64)>, Vec<(f64, String, f64, f64)>) {
    let mut trials = Vec::new();
    let mut aggregates = Vec::new();
    let mut in_aggregate = false;
    for line in text.lines() {
        if line.is_empty() {
            in_aggregate = true;
            continue;
        }
        if line.starts_with('#') || line.starts_with("trial,") || line.starts_with("radius_m,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if in_aggregate {
            aggregates.push((
                fields[0].parse().unwrap(),
                fields[1].to_string(),
                fields[2].parse().unwrap(),
                fields[3].parse().unwrap(),
            ));
        } else {
            trials.push((
                fields[0].parse().unwrap(),
                fields[1].parse().unwrap(),
                fields[2].parse().unwrap(),
                fields[3].to_string(),
                fields[4].parse().unwrap(),
            ));
        }
    }
    (trials, aggregates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            trials: 3,
            turbine_radii_m: vec![1.5, 3.0],
            base_seed: 7,
            user_count: Some(12),
            mbs_capacity: Some(12),
            sbs_capacity: Some(4),
            ..ExperimentConfig::desk()
        }
    }

    #[test]
    fn paired_draws_and_determinism() {
        let config = tiny_config();
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a, b);
        // Every trial contributes one record per (radius, scheme).
        assert_eq!(a.records.len(), 3 * 2 * 3);
        // Within a trial the seed is shared by every scheme and radius.
        for t in 0..3 {
            let seeds: Vec<u64> = a
                .records
                .iter()
                .filter(|r| r.trial == t)
                .map(|r| r.seed)
                .collect();
            assert!(seeds.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn csv_round_trip_reproduces_aggregates() {
        let config = tiny_config();
        let report = run_experiment(&config).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("report.csv");
        emit_csv(&report, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let (trials, aggregates) = parse_csv(&text);
        assert_eq!(trials.len(), report.records.len());
        assert_eq!(aggregates.len(), report.aggregates.len());
        for (radius, scheme, mean_w, normalized) in aggregates {
            let recomputed: Vec<f64> = trials
                .iter()
                .filter(|t| t.2 == radius && t.3 == scheme)
                .map(|t| t.4)
                .collect();
            let mean = recomputed.iter().sum::<f64>() / recomputed.len() as f64;
            assert!(
                (mean - mean_w).abs() < 1e-4,
                "{scheme}@{radius}: {mean} vs {mean_w}"
            );
            assert!((0.0..=1.0 + 1e-9).contains(&normalized));
        }
    }

    #[test]
    fn emitted_bytes_are_identical_across_runs() {
        let config = tiny_config();
        let dir = tempdir().unwrap();
        let path_a = dir.path().join("a.csv");
        let path_b = dir.path().join("b.csv");
        emit_csv(&run_experiment(&config).unwrap(), &path_a).unwrap();
        emit_csv(&run_experiment(&config).unwrap(), &path_b).unwrap();
        assert_eq!(
            std::fs::read(&path_a).unwrap(),
            std::fs::read(&path_b).unwrap()
        );
    }

    #[test]
    fn empty_report_is_header_only() {
        let report = TrialReport {
            records: Vec::new(),
            aggregates: Vec::new(),
            failed: Vec::new(),
            trials_requested: 0,
        };
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_csv(&report, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let (trials, aggregates) = parse_csv(&text);
        assert!(trials.is_empty());
        assert!(aggregates.is_empty());
    }

    #[test]
    fn normalization_and_reduction_arithmetic() {
        // Two schemes with means 100 W and 400 W: normalized 0.25 / 1.0,
        // carbon-aware reduction vs the other 75%.
        let config = ExperimentConfig {
            schemes: vec![SchemeKind::CarbonAware, SchemeKind::ShortestDistance],
            turbine_radii_m: vec![1.5],
            ..ExperimentConfig::desk()
        };
        let records = vec![
            TrialRecord {
                trial: 0,
                seed: 1,
                radius_m: 1.5,
                scheme: SchemeKind::CarbonAware,
                nonrenew_w: 100.0,
                surrogate_w: 100.0,
                nodes: 1,
                simplex_iters: 1,
            },
            TrialRecord {
                trial: 0,
                seed: 1,
                radius_m: 1.5,
                scheme: SchemeKind::ShortestDistance,
                nonrenew_w: 400.0,
                surrogate_w: 400.0,
                nodes: 0,
                simplex_iters: 0,
            },
        ];
        let aggregates = aggregate(&config, &records);
        let ca = &aggregates[0];
        let sd = &aggregates[1];
        assert_eq!(ca.normalized, 0.25);
        assert_eq!(sd.normalized, 1.0);
        assert_eq!(sd.reduction_vs_carbon_aware_pct, Some(75.0));
        assert_eq!(ca.reduction_vs_carbon_aware_pct, Some(0.0));
    }

    #[test]
    fn all_zero_guard() {
        let config = ExperimentConfig {
            schemes: vec![SchemeKind::CarbonAware, SchemeKind::ShortestDistance],
            turbine_radii_m: vec![4.5],
            ..ExperimentConfig::desk()
        };
        let records = vec![
            TrialRecord {
                trial: 0,
                seed: 1,
                radius_m: 4.5,
                scheme: SchemeKind::CarbonAware,
                nonrenew_w: 0.0,
                surrogate_w: 0.0,
                nodes: 1,
                simplex_iters: 1,
            },
            TrialRecord {
                trial: 0,
                seed: 1,
                radius_m: 4.5,
                scheme: SchemeKind::ShortestDistance,
                nonrenew_w: 0.0,
                surrogate_w: 0.0,
                nodes: 0,
                simplex_iters: 0,
            },
        ];
        for a in aggregate(&config, &records) {
            assert_eq!(a.normalized, 0.0);
            assert_eq!(a.reduction_vs_carbon_aware_pct, Some(0.0));
        }
    }

    #[test]
    fn config_json_round_trip() {
        let config = tiny_config();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(config, back);
    }
}

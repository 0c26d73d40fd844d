use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{parse_config, ExperimentConfig, SweepKind};
use super::{angle_sweep, distance_sweep, gain_sweep, radiation_pattern, SweepResult};
use crate::beamforming::{fnv1a_hex, SearchSettings};
use crate::error::Result;
use crate::link_budget::Scenario;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Replaces the seed declared in the file.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternMetrics {
    pub steering_deg: f64,
    pub peak_angle_deg: f64,
    pub peak_power_dbm: f64,
    pub hpbw_deg: f64,
    pub peak_to_sidelobe_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub name: String,
    pub variable: String,
    pub beamforming: String,
    pub file: String,
    pub rows: usize,
    /// FNV-1a of the CSV bytes.
    pub csv_digest: String,
    pub config_digests: Vec<String>,
    /// Deltas below are taken against the first grid point.
    pub reference_value: f64,
    pub reference_path_loss_db: f64,
    pub reference_received_power_dbm: f64,
    pub path_loss_delta_db: Vec<f64>,
    pub received_power_delta_db: Vec<f64>,
    pub pattern: Option<PatternMetrics>,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub search: SearchSettings,
    pub scenario: Scenario,
    pub sweeps: Vec<SweepSummary>,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary is serializable");
        s.push('\n');
        s
    }
}

/// Parses `path`, runs every sweep and writes `<name>.csv` per sweep plus
/// `summary.json` into `options.out_dir`.
pub fn run_config(path: &Path, options: &RunOptions) -> Result<RunSummary> {
    let text = fs::read_to_string(path)?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = options.seed {
        config = config.with_seed(seed);
    }
    execute(&config, &options.out_dir)
}

pub fn execute(config: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let mut outputs = Vec::with_capacity(config.sweeps.len());
    for def in &config.sweeps {
        let (result, pattern) = match def.kind() {
            SweepKind::Distance => (
                distance_sweep(&def.scenario, &def.spec, &config.search)?,
                None,
            ),
            SweepKind::Angle => (angle_sweep(&def.scenario, &def.spec, &config.search)?, None),
            SweepKind::Gain => (
                gain_sweep(
                    &def.scenario,
                    &def.spec.grid(),
                    def.spec.beamforming,
                    &config.search,
                )?,
                None,
            ),
            SweepKind::Pattern => {
                let p = radiation_pattern(
                    &def.scenario,
                    def.steering_deg,
                    &def.spec,
                    def.spec.beamforming,
                    &config.search,
                )?;
                let metrics = PatternMetrics {
                    steering_deg: p.steering_deg,
                    peak_angle_deg: p.peak_angle_deg,
                    peak_power_dbm: p.peak_power_dbm,
                    hpbw_deg: p.hpbw_deg,
                    peak_to_sidelobe_db: p.peak_to_sidelobe_db,
                };
                (p.as_sweep().clone(), Some(metrics))
            }
        };
        outputs.push((def, result, pattern));
    }

    // everything is computed before anything is written
    fs::create_dir_all(out_dir)?;
    let mut sweeps = Vec::with_capacity(outputs.len());
    for (def, result, pattern) in outputs {
        let csv = result.to_csv();
        let file = format!("{}.csv", def.name);
        fs::write(out_dir.join(&file), &csv)?;
        sweeps.push(summarize(
            &def.name,
            file,
            &csv,
            &result,
            pattern,
            def.scenario.clone(),
        ));
    }
    let summary = RunSummary {
        seed: config.seed,
        search: config.search,
        scenario: config.scenario.clone(),
        sweeps,
    };
    fs::write(out_dir.join("summary.json"), summary.to_json())?;
    Ok(summary)
}

fn summarize(
    name: &str,
    file: String,
    csv: &str,
    result: &SweepResult,
    pattern: Option<PatternMetrics>,
    scenario: Scenario,
) -> SweepSummary {
    let first = &result.rows[0];
    let mut digests: Vec<String> = Vec::new();
    for r in &result.rows {
        if !digests.contains(&r.config_digest) {
            digests.push(r.config_digest.clone());
        }
    }
    SweepSummary {
        name: name.to_string(),
        variable: result.variable.to_string(),
        beamforming: result.beamforming.to_string(),
        file,
        rows: result.rows.len(),
        csv_digest: fnv1a_hex(csv.as_bytes()),
        config_digests: digests,
        reference_value: first.value,
        reference_path_loss_db: first.path_loss_db,
        reference_received_power_dbm: first.received_power_dbm,
        path_loss_delta_db: result
            .rows
            .iter()
            .map(|r| r.path_loss_db - first.path_loss_db)
            .collect(),
        received_power_delta_db: result
            .rows
            .iter()
            .map(|r| r.received_power_dbm - first.received_power_dbm)
            .collect(),
        pattern,
        scenario,
    }
}

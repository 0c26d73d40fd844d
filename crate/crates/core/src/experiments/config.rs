//! Flat key-value experiment files.
//!
//! ```text
//! # comment
//! [scenario]
//! frequency_ghz = 2.6
//! tx_distance_m = 0.5
//! rx_zenith_deg = 0
//!
//! [amplifier]
//! calibration = 0.01:0, 1.4:11.9   # total supply A : gain dB
//!
//! [sweep case1]
//! variable = rx_distance
//! start = 0.5
//! stop = 5
//! step = 0.5
//! beamforming = continuous
//! ```
//!
//! Sweep sections may repeat any `[scenario]` key to override it for that
//! sweep only. Angles are degrees and lengths meters; both are converted
//! once here.

use std::collections::BTreeSet;

use crate::beamforming::{BeamformingMethod, SearchSettings};
use crate::channel::AntennaModel;
use crate::error::{Error, Result};
use crate::geometry::{ArrayLayout, SphericalPose};
use crate::link_budget::{Scenario, DEFAULT_PATTERN_EXPONENT};
use crate::ris_model::{AmplifierModel, PhaseCodebook, PhaseJitterModel, DEFAULT_MAX_UNIT_CURRENT};

use super::{SweepSpec, SweepVariable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Distance,
    Angle,
    Gain,
    Pattern,
}

impl From<SweepVariable> for SweepKind {
    fn from(v: SweepVariable) -> Self {
        match v {
            SweepVariable::RxDistance => Self::Distance,
            SweepVariable::RxZenith => Self::Angle,
            SweepVariable::AmplifierCurrent => Self::Gain,
            SweepVariable::PatternAngle => Self::Pattern,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepDefinition {
    pub name: String,
    pub spec: SweepSpec,
    /// Steering angle in degrees, pattern sweeps only.
    pub steering_deg: f64,
    /// Base scenario with this sweep's overrides applied.
    pub scenario: Scenario,
    pub line: usize,
}

impl SweepDefinition {
    pub fn kind(&self) -> SweepKind {
        self.spec.variable.into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub search: SearchSettings,
    pub scenario: Scenario,
    pub sweeps: Vec<SweepDefinition>,
}

impl ExperimentConfig {
    /// Replaces the seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.search.seed = seed;
        for s in std::iter::once(&mut self.scenario)
            .chain(self.sweeps.iter_mut().map(|d| &mut d.scenario))
        {
            if let Some(j) = s.jitter.as_mut() {
                j.seed = seed;
            }
        }
        self
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn num(line: usize, key: &str, value: &str) -> Result<f64> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(err(
            line,
            format!("{key}: expected a number, got `{value}`"),
        )),
    }
}

fn count(line: usize, key: &str, value: &str) -> Result<usize> {
    value.parse::<usize>().map_err(|_| {
        err(
            line,
            format!("{key}: expected a non-negative integer, got `{value}`"),
        )
    })
}

fn check(line: usize, key: &str, ok: bool, reason: &str, value: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(err(line, format!("{key}: {reason}, got {value}")))
    }
}

/// Scenario fields in boundary units, before conversion.
#[derive(Debug, Clone)]
struct ScenarioFields {
    frequency_ghz: f64,
    tx: [f64; 3],
    rx: [f64; 3],
    rows: usize,
    cols: usize,
    pitch_x: f64,
    pitch_y: f64,
    phase_bits: u32,
    phase_offset_deg: f64,
    tx_power_dbm: f64,
    noise_variance_w: f64,
    tx_gain_dbi: f64,
    tx_exponent: f64,
    rx_gain_dbi: f64,
    rx_exponent: f64,
    jitter_max_deg: Option<f64>,
    calibration: Vec<(f64, f64)>,
    max_unit_current: f64,
}

impl Default for ScenarioFields {
    fn default() -> Self {
        Self {
            frequency_ghz: 2.6,
            tx: [0.6, 0.0, 0.0],
            rx: [4.0, 0.0, 0.0],
            rows: 4,
            cols: 8,
            pitch_x: 0.06,
            pitch_y: 0.06,
            phase_bits: 2,
            phase_offset_deg: 0.0,
            tx_power_dbm: 0.0,
            noise_variance_w: 0.0,
            tx_gain_dbi: 10.0,
            tx_exponent: DEFAULT_PATTERN_EXPONENT,
            rx_gain_dbi: 10.0,
            rx_exponent: DEFAULT_PATTERN_EXPONENT,
            jitter_max_deg: None,
            calibration: vec![(0.01, 0.0), (1.4, 11.9)],
            max_unit_current: DEFAULT_MAX_UNIT_CURRENT,
        }
    }
}

impl ScenarioFields {
    /// Returns `Ok(false)` when `key` is not a scenario key.
    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<bool> {
        let zenith = |v: f64| {
            check(
                line,
                key,
                (0.0..90.0).contains(&v),
                "zenith must lie in [0, 90) degrees",
                value,
            )
        };
        let positive = |v: f64| check(line, key, v > 0.0, "must be > 0", value);
        match key {
            "frequency_ghz" => {
                let v = num(line, key, value)?;
                positive(v)?;
                self.frequency_ghz = v;
            }
            "tx_distance_m" | "rx_distance_m" => {
                let v = num(line, key, value)?;
                positive(v)?;
                if key.starts_with("tx") {
                    self.tx[0] = v
                } else {
                    self.rx[0] = v
                }
            }
            "tx_zenith_deg" | "rx_zenith_deg" => {
                let v = num(line, key, value)?;
                zenith(v)?;
                if key.starts_with("tx") {
                    self.tx[1] = v
                } else {
                    self.rx[1] = v
                }
            }
            "tx_azimuth_deg" | "rx_azimuth_deg" => {
                let v = num(line, key, value)?;
                if key.starts_with("tx") {
                    self.tx[2] = v
                } else {
                    self.rx[2] = v
                }
            }
            "rows" | "cols" => {
                let v = count(line, key, value)?;
                check(line, key, v >= 1, "must be >= 1", value)?;
                if key == "rows" {
                    self.rows = v
                } else {
                    self.cols = v
                }
            }
            "pitch_x_m" | "pitch_y_m" => {
                let v = num(line, key, value)?;
                positive(v)?;
                if key == "pitch_x_m" {
                    self.pitch_x = v
                } else {
                    self.pitch_y = v
                }
            }
            "phase_bits" => {
                let v = count(line, key, value)?;
                check(line, key, (1..=8).contains(&v), "must lie in 1..=8", value)?;
                self.phase_bits = v as u32;
            }
            "phase_offset_deg" => self.phase_offset_deg = num(line, key, value)?,
            "tx_power_dbm" => self.tx_power_dbm = num(line, key, value)?,
            "noise_variance_w" => {
                let v = num(line, key, value)?;
                check(line, key, v >= 0.0, "must be >= 0", value)?;
                self.noise_variance_w = v;
            }
            "tx_gain_dbi" => self.tx_gain_dbi = num(line, key, value)?,
            "rx_gain_dbi" => self.rx_gain_dbi = num(line, key, value)?,
            "tx_pattern_exponent" | "rx_pattern_exponent" => {
                let v = num(line, key, value)?;
                check(line, key, v >= 0.0, "must be >= 0", value)?;
                if key.starts_with("tx") {
                    self.tx_exponent = v
                } else {
                    self.rx_exponent = v
                }
            }
            "jitter_max_deg" => {
                let v = num(line, key, value)?;
                check(
                    line,
                    key,
                    (0.0..180.0).contains(&v),
                    "must lie in [0, 180) degrees",
                    value,
                )?;
                self.jitter_max_deg = (v > 0.0).then_some(v);
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn set_amplifier(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        match key {
            "calibration" => {
                let mut points = Vec::new();
                for pair in value.split(',') {
                    let (i, g) = pair.split_once(':').ok_or_else(|| {
                        err(
                            line,
                            format!(
                                "calibration: expected `current:dB` pairs, got `{}`",
                                pair.trim()
                            ),
                        )
                    })?;
                    points.push((num(line, key, i.trim())?, num(line, key, g.trim())?));
                }
                AmplifierModel::new(points.clone(), f64::MAX)
                    .map_err(|e| err(line, format!("calibration: {e}")))?;
                self.calibration = points;
            }
            "max_unit_current_a" => {
                let v = num(line, key, value)?;
                check(line, key, v > 0.0, "must be > 0", value)?;
                self.max_unit_current = v;
            }
            _ => return Err(err(line, format!("unknown key `{key}` in [amplifier]"))),
        }
        Ok(())
    }

    fn build(&self, seed: u64, line: usize) -> Result<Scenario> {
        let at = |e: Error| err(line, e.to_string());
        let layout =
            ArrayLayout::new(self.rows, self.cols, self.pitch_x, self.pitch_y).map_err(at)?;
        let amplifier = AmplifierModel::from_array_calibration(
            &self.calibration,
            layout.len(),
            self.max_unit_current,
        )
        .map_err(at)?;
        let jitter = self
            .jitter_max_deg
            .map(|d| PhaseJitterModel::new(d.to_radians(), seed))
            .transpose()
            .map_err(at)?;
        let scenario = Scenario {
            frequency: self.frequency_ghz * 1e9,
            tx_pose: SphericalPose::from_degrees(self.tx[0], self.tx[1], self.tx[2]).map_err(at)?,
            rx_pose: SphericalPose::from_degrees(self.rx[0], self.rx[1], self.rx[2]).map_err(at)?,
            tx_antenna: AntennaModel::new(10f64.powf(self.tx_gain_dbi / 10.0), self.tx_exponent)
                .map_err(at)?,
            rx_antenna: AntennaModel::new(10f64.powf(self.rx_gain_dbi / 10.0), self.rx_exponent)
                .map_err(at)?,
            layout,
            codebook: PhaseCodebook::new(self.phase_bits, self.phase_offset_deg.to_radians())
                .map_err(at)?,
            amplifier,
            tx_power: 1e-3 * 10f64.powf(self.tx_power_dbm / 10.0),
            noise_variance: self.noise_variance_w,
            jitter,
        };
        scenario.validate().map_err(at)?;
        Ok(scenario)
    }
}

#[derive(Debug)]
struct SweepSection {
    name: String,
    line: usize,
    entries: Vec<(usize, String, String)>,
}

enum Section {
    None,
    Scenario,
    Amplifier,
    Search,
    Run,
    Sweep(usize),
}

/// Parses and validates an experiment file. Errors carry the 1-based line
/// of the offending entry.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut fields = ScenarioFields::default();
    let mut search = SearchSettings::default();
    let mut seed = 0u64;
    let mut sweeps: Vec<SweepSection> = Vec::new();
    let mut names = BTreeSet::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    let mut section = Section::None;
    let mut section_name = String::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("malformed section header `{content}`")))?
                .trim();
            section_name = header.to_string();
            section = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
                ["scenario"] => Section::Scenario,
                ["amplifier"] => Section::Amplifier,
                ["search"] => Section::Search,
                ["run"] => Section::Run,
                ["sweep", name] => {
                    if !name
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                    {
                        return Err(err(
                            line,
                            format!(
                                "sweep name `{name}` may only use letters, digits, `_` and `-`"
                            ),
                        ));
                    }
                    if !names.insert(name.to_string()) {
                        return Err(err(line, format!("duplicate sweep `{name}`")));
                    }
                    sweeps.push(SweepSection {
                        name: name.to_string(),
                        line,
                        entries: Vec::new(),
                    });
                    Section::Sweep(sweeps.len() - 1)
                }
                _ => return Err(err(line, format!("unknown section `[{header}]`"))),
            };
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        if key.is_empty() {
            return Err(err(line, "missing key before `=`"));
        }
        if !seen.insert((section_name.clone(), key.to_string())) {
            return Err(err(
                line,
                format!("duplicate key `{key}` in [{section_name}]"),
            ));
        }
        match section {
            Section::None => {
                return Err(err(line, format!("key `{key}` appears before any section")))
            }
            Section::Scenario => {
                if !fields.set(line, key, value)? {
                    return Err(err(line, format!("unknown key `{key}` in [scenario]")));
                }
            }
            Section::Amplifier => fields.set_amplifier(line, key, value)?,
            Section::Search => match key {
                "passes" => search.passes = count(line, key, value)?,
                "max_rounds" => search.max_rounds = count(line, key, value)?,
                _ => return Err(err(line, format!("unknown key `{key}` in [search]"))),
            },
            Section::Run => match key {
                "seed" => {
                    seed = value.parse().map_err(|_| {
                        err(
                            line,
                            format!("seed: expected a non-negative integer, got `{value}`"),
                        )
                    })?
                }
                _ => return Err(err(line, format!("unknown key `{key}` in [run]"))),
            },
            Section::Sweep(k) => sweeps[k]
                .entries
                .push((line, key.to_string(), value.to_string())),
        }
    }
    search.seed = seed;
    let scenario = fields.build(seed, 1)?;
    let sweeps = sweeps
        .into_iter()
        .map(|s| build_sweep(s, &fields, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentConfig {
        seed,
        search,
        scenario,
        sweeps,
    })
}

fn build_sweep(section: SweepSection, base: &ScenarioFields, seed: u64) -> Result<SweepDefinition> {
    let mut fields = base.clone();
    let mut variable = None;
    let (mut start, mut stop, mut step) = (None, None, None);
    let mut beamforming = BeamformingMethod::Continuous;
    let mut steering_deg = 0.0;
    let mut steering_line = None;
    for (line, key, value) in &section.entries {
        let line = *line;
        match key.as_str() {
            "variable" => {
                variable = Some(
                    value
                        .parse::<SweepVariable>()
                        .map_err(|e| err(line, e.to_string()))?,
                )
            }
            "start" => start = Some((line, num(line, key, value)?)),
            "stop" => stop = Some((line, num(line, key, value)?)),
            "step" => step = Some((line, num(line, key, value)?)),
            "beamforming" => {
                beamforming = value.parse().map_err(|e: Error| err(line, e.to_string()))?
            }
            "steering_deg" => {
                let v = num(line, key, value)?;
                check(
                    line,
                    key,
                    v.abs() < 90.0,
                    "must lie strictly inside (-90, 90) degrees",
                    value,
                )?;
                steering_deg = v;
                steering_line = Some(line);
            }
            _ => {
                if !fields.set(line, key, value)? {
                    return Err(err(
                        line,
                        format!("unknown key `{key}` in [sweep {}]", section.name),
                    ));
                }
            }
        }
    }
    let missing = |k: &str| {
        err(
            section.line,
            format!("[sweep {}] is missing `{k}`", section.name),
        )
    };
    let variable = variable.ok_or_else(|| missing("variable"))?;
    let (start_line, start) = start.ok_or_else(|| missing("start"))?;
    let (stop_line, stop) = stop.ok_or_else(|| missing("stop"))?;
    let (step_line, step) = step.ok_or_else(|| missing("step"))?;
    if let (Some(l), false) = (steering_line, variable == SweepVariable::PatternAngle) {
        return Err(err(l, "steering_deg: only valid for pattern_angle sweeps"));
    }
    let spec = SweepSpec {
        variable,
        start,
        stop,
        step,
        beamforming,
    };
    if let Err(e) = spec.validate() {
        let line = match &e {
            Error::InvalidParameter { field, .. } if *field == "stop" => stop_line,
            Error::InvalidParameter { field, .. } if *field == "step" => step_line,
            _ => start_line,
        };
        return Err(err(line, e.to_string()));
    }
    Ok(SweepDefinition {
        name: section.name.clone(),
        spec,
        steering_deg,
        scenario: fields.build(seed, section.line)?,
        line: section.line,
    })
}

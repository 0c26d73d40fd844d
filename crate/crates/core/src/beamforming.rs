//! Discrete phase-configuration search.
//!
//! Two feedback-driven searches (line-wise blind search and per-unit
//! coordinate search), quantization of the continuous optimum, and an
//! exhaustive oracle for small arrays.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::wrap_phase;
use crate::error::{Error, Result};
use crate::geometry::{ArrayLayout, ElementIndex};
use crate::link_budget::{LinkModel, Scenario};
use crate::ris_model::{JitterSource, PhaseCodebook, UnitState};

/// Largest exhaustive search accepted, in bits of configuration space.
pub const BRUTE_FORCE_LIMIT_BITS: usize = 20;

/// Codebook index of every unit, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseConfiguration {
    rows: usize,
    cols: usize,
    indices: Vec<usize>,
}

impl PhaseConfiguration {
    pub fn uniform(layout: &ArrayLayout, index: usize) -> Self {
        Self {
            rows: layout.n_rows,
            cols: layout.n_cols,
            indices: vec![index; layout.len()],
        }
    }

    pub fn from_indices(layout: &ArrayLayout, indices: Vec<usize>) -> Result<Self> {
        if indices.len() != layout.len() {
            return Err(Error::StateCountMismatch {
                expected: layout.len(),
                got: indices.len(),
            });
        }
        Ok(Self {
            rows: layout.n_rows,
            cols: layout.n_cols,
            indices,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn get(&self, idx: ElementIndex) -> usize {
        self.indices[(idx.row - 1) * self.cols + idx.col - 1]
    }

    pub fn validate(&self, codebook: &PhaseCodebook) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= codebook.size()) {
            Some(&index) => Err(Error::InvalidPhaseIndex {
                index,
                size: codebook.size(),
            }),
            None => Ok(()),
        }
    }

    pub fn to_states(&self, unit_current: f64) -> Vec<UnitState> {
        self.indices
            .iter()
            .map(|&i| UnitState::new(i, unit_current))
            .collect()
    }

    pub fn phases(&self, codebook: &PhaseCodebook) -> Result<Vec<f64>> {
        self.indices.iter().map(|&i| codebook.phase(i)).collect()
    }

    /// Advances every unit of column `col` (0-based) by one codebook step.
    fn step_column(&mut self, col: usize, size: usize) {
        for row in 0..self.rows {
            let k = row * self.cols + col;
            self.indices[k] = (self.indices[k] + 1) % size;
        }
    }

    fn step_row(&mut self, row: usize, size: usize) {
        for k in row * self.cols..(row + 1) * self.cols {
            self.indices[k] = (self.indices[k] + 1) % size;
        }
    }

    /// Short stable fingerprint of the configuration.
    pub fn digest(&self) -> String {
        let mut bytes = Vec::with_capacity(self.indices.len() * 8 + 16);
        bytes.extend_from_slice(&(self.rows as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for &i in &self.indices {
            bytes.extend_from_slice(&(i as u64).to_le_bytes());
        }
        fnv1a_hex(&bytes)
    }
}

impl fmt::Display for PhaseConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, row) in self.indices.chunks(self.cols).enumerate() {
            if r > 0 {
                f.write_str("/")?;
            }
            for i in row {
                write!(f, "{i}")?;
            }
        }
        Ok(())
    }
}

/// Fingerprint of a continuous phase profile.
pub fn phase_digest(phases: &[f64]) -> String {
    let bytes: Vec<u8> = phases
        .iter()
        .flat_map(|p| p.to_bits().to_le_bytes())
        .collect();
    fnv1a_hex(&bytes)
}

pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Source of received-power readings for a configuration.
pub trait PowerFeedback {
    fn measure(&mut self, config: &PhaseConfiguration) -> Result<f64>;

    /// Readings served so far.
    fn queries(&self) -> usize;
}

/// Power reported by the link model, optionally perturbed by per-unit phase
/// jitter and additive Gaussian reading noise floored at zero.
#[derive(Debug, Clone)]
pub struct FeedbackChannel {
    model: LinkModel,
    unit_current: f64,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
    jitter: Option<JitterSource>,
    queries: usize,
}

impl FeedbackChannel {
    /// Uses the scenario's noise variance and jitter model, full amplifier
    /// drive and the given seed for the reading noise.
    pub fn new(scenario: &Scenario, seed: u64) -> Result<Self> {
        let model = LinkModel::new(scenario)?;
        let noise = if scenario.noise_variance > 0.0 {
            Some(
                Normal::new(0.0, scenario.noise_variance.sqrt())
                    .map_err(|e| Error::invalid("noise_variance", e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Self {
            unit_current: scenario.amplifier.full_power_current(),
            jitter: scenario.jitter.map(|j| j.source()),
            model,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
            queries: 0,
        })
    }

    /// Exact model power, no noise and no jitter.
    pub fn noiseless(scenario: &Scenario) -> Result<Self> {
        let mut s = scenario.clone();
        s.noise_variance = 0.0;
        s.jitter = None;
        Self::new(&s, 0)
    }

    pub fn with_unit_current(mut self, current: f64) -> Self {
        self.unit_current = current;
        self
    }

    pub fn model(&self) -> &LinkModel {
        &self.model
    }
}

impl PowerFeedback for FeedbackChannel {
    fn measure(&mut self, config: &PhaseConfiguration) -> Result<f64> {
        self.queries += 1;
        let codebook = &self.model.scenario().codebook;
        config.validate(codebook)?;
        let states = config.to_states(self.unit_current);
        let mut phases = config.phases(codebook)?;
        if let Some(j) = self.jitter.as_mut() {
            for p in &mut phases {
                *p += j.sample();
            }
        }
        let power = self.model.received_power_with_phases(&states, &phases)?;
        Ok(match &self.noise {
            Some(n) => (power + n.sample(&mut self.rng)).max(0.0),
            None => power,
        })
    }

    fn queries(&self) -> usize {
        self.queries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub accepted: bool,
    pub power: f64,
}

/// Every reading taken by a search, in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub steps: Vec<TraceStep>,
}

impl SearchTrace {
    fn push(&mut self, accepted: bool, power: f64) {
        let step = self.steps.len();
        self.steps.push(TraceStep {
            step,
            accepted,
            power,
        });
    }

    pub fn accepted_powers(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().filter(|s| s.accepted).map(|s| s.power)
    }

    pub fn is_monotone(&self) -> bool {
        let p: Vec<f64> = self.accepted_powers().collect();
        p.windows(2).all(|w| w[1] >= w[0])
    }

    /// Last accepted reading.
    pub fn final_power(&self) -> Option<f64> {
        self.accepted_powers().last()
    }
}

/// Line-wise blind search: each pass steps every column then every row by
/// one codebook entry and keeps the change when the reading does not drop.
///
/// Issues exactly `1 + passes * (rows + cols)` readings.
pub fn blind_rowcol_search<F: PowerFeedback + ?Sized>(
    scenario: &Scenario,
    initial: &PhaseConfiguration,
    feedback: &mut F,
    passes: usize,
) -> Result<(PhaseConfiguration, SearchTrace)> {
    if passes == 0 {
        return Err(Error::invalid("passes", "must be >= 1"));
    }
    let size = scenario.codebook.size();
    initial.validate(&scenario.codebook)?;
    let mut config = initial.clone();
    let mut trace = SearchTrace::default();
    let mut best = feedback.measure(&config)?;
    trace.push(true, best);

    enum Line {
        Col(usize),
        Row(usize),
    }
    let lines: Vec<Line> = (0..config.cols)
        .map(Line::Col)
        .chain((0..config.rows).map(Line::Row))
        .collect();

    for _ in 0..passes {
        for line in &lines {
            let mut candidate = config.clone();
            match *line {
                Line::Col(c) => candidate.step_column(c, size),
                Line::Row(r) => candidate.step_row(r, size),
            }
            let p = feedback.measure(&candidate)?;
            let keep = p >= best;
            trace.push(keep, p);
            if keep {
                best = p;
                config = candidate;
            }
        }
    }
    Ok((config, trace))
}

/// Cyclic coordinate search: every unit tries each alternative codebook
/// entry and keeps one only on a strict improvement. Stops after a round
/// with no change or after `max_rounds`.
pub fn greedy_element_search<F: PowerFeedback + ?Sized>(
    scenario: &Scenario,
    initial: &PhaseConfiguration,
    feedback: &mut F,
    max_rounds: usize,
) -> Result<(PhaseConfiguration, SearchTrace)> {
    if max_rounds == 0 {
        return Err(Error::invalid("max_rounds", "must be >= 1"));
    }
    let size = scenario.codebook.size();
    initial.validate(&scenario.codebook)?;
    let mut config = initial.clone();
    let mut trace = SearchTrace::default();
    let mut best = feedback.measure(&config)?;
    trace.push(true, best);

    for _ in 0..max_rounds {
        let mut changed = false;
        for k in 0..config.indices.len() {
            let current = config.indices[k];
            for alt in (0..size).filter(|&i| i != current) {
                let mut candidate = config.clone();
                candidate.indices[k] = alt;
                let p = feedback.measure(&candidate)?;
                let keep = p > best;
                trace.push(keep, p);
                if keep {
                    best = p;
                    config = candidate;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok((config, trace))
}

/// Maps each phase to the nearest codebook entry on the circle; ties go to
/// the lower index.
pub fn nearest_quantize(
    phases: &[f64],
    codebook: &PhaseCodebook,
    layout: &ArrayLayout,
) -> Result<PhaseConfiguration> {
    let table: Vec<f64> = (0..codebook.size())
        .map(|k| codebook.phase(k))
        .collect::<Result<_>>()?;
    let indices = phases
        .iter()
        .map(|&phi| {
            let mut best = (0, f64::INFINITY);
            for (k, &c) in table.iter().enumerate() {
                let d = circular_distance(phi, c);
                if d < best.1 - 1e-12 {
                    best = (k, d);
                }
            }
            best.0
        })
        .collect();
    PhaseConfiguration::from_indices(layout, indices)
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_phase(a - b);
    d.min(2.0 * PI - d)
}

/// Exhaustive maximizer of noiseless received power at full amplifier
/// drive. The first configuration in lexicographic order wins ties.
pub fn brute_force_optimum(scenario: &Scenario) -> Result<(PhaseConfiguration, f64)> {
    let n = scenario.layout.len();
    let bits = scenario.codebook.bits as usize * n;
    if bits > BRUTE_FORCE_LIMIT_BITS {
        return Err(Error::SearchSpaceTooLarge {
            bits,
            limit: BRUTE_FORCE_LIMIT_BITS,
        });
    }
    let model = LinkModel::new(scenario)?;
    let states = scenario.default_states();
    let rcs = model.rcs(&states)?;
    let table: Vec<f64> = (0..scenario.codebook.size())
        .map(|k| scenario.codebook.phase(k))
        .collect::<Result<_>>()?;

    let size = scenario.codebook.size();
    let mut idx = vec![0usize; n];
    let mut phases = vec![table[0]; n];
    let mut best = (idx.clone(), f64::NEG_INFINITY);
    loop {
        let sum: num_complex::Complex64 = model.terms(&rcs, &phases).into_iter().sum();
        let p = scenario.tx_power / (16.0 * PI * PI) * sum.norm_sqr();
        if p > best.1 {
            best = (idx.clone(), p);
        }
        // odometer, last unit fastest so the walk is lexicographic
        let mut k = n;
        loop {
            if k == 0 {
                let config = PhaseConfiguration::from_indices(&scenario.layout, best.0)?;
                return Ok((config, best.1));
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < size {
                phases[k] = table[idx[k]];
                break;
            }
            idx[k] = 0;
            phases[k] = table[0];
        }
    }
}

/// How a sweep point or pattern picks its unit phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeamformingMethod {
    /// All units at codebook index 0.
    None,
    /// Unquantized optimum phases.
    Continuous,
    /// Continuous optimum rounded to the codebook.
    Quantized,
    /// Line-wise blind feedback search.
    Blind,
    /// Per-unit coordinate search.
    Greedy,
}

impl FromStr for BeamformingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "none" => Self::None,
            "continuous" => Self::Continuous,
            "quantized" => Self::Quantized,
            "blind" => Self::Blind,
            "greedy" => Self::Greedy,
            other => {
                return Err(Error::invalid(
                    "beamforming",
                    format!("unknown method `{other}` (expected none, continuous, quantized, blind or greedy)"),
                ))
            }
        })
    }
}

impl fmt::Display for BeamformingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Continuous => "continuous",
            Self::Quantized => "quantized",
            Self::Blind => "blind",
            Self::Greedy => "greedy",
        })
    }
}

/// Knobs of the feedback searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub passes: usize,
    pub max_rounds: usize,
    pub seed: u64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            passes: 4,
            max_rounds: 16,
            seed: 0,
        }
    }
}

/// Unit phases chosen for a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub method: BeamformingMethod,
    /// Applied phase of each unit, row-major.
    pub phases: Vec<f64>,
    /// Codebook configuration, absent for continuous phasing.
    pub configuration: Option<PhaseConfiguration>,
    pub trace: Option<SearchTrace>,
}

impl Beamformer {
    pub fn digest(&self) -> String {
        match &self.configuration {
            Some(c) => c.digest(),
            None => phase_digest(&self.phases),
        }
    }
}

/// Chooses unit phases for `scenario` with the given method. Feedback
/// searches start from all-zero indices.
pub fn configure(
    scenario: &Scenario,
    method: BeamformingMethod,
    settings: &SearchSettings,
) -> Result<Beamformer> {
    let layout = &scenario.layout;
    let codebook = &scenario.codebook;
    let with_config =
        |config: PhaseConfiguration, trace: Option<SearchTrace>| -> Result<Beamformer> {
            Ok(Beamformer {
                method,
                phases: config.phases(codebook)?,
                configuration: Some(config),
                trace,
            })
        };
    match method {
        BeamformingMethod::None => with_config(PhaseConfiguration::uniform(layout, 0), None),
        BeamformingMethod::Continuous => {
            let model = LinkModel::new(scenario)?;
            Ok(Beamformer {
                method,
                phases: model.continuous_optimal_phases(0.0),
                configuration: None,
                trace: None,
            })
        }
        BeamformingMethod::Quantized => {
            let model = LinkModel::new(scenario)?;
            let config = nearest_quantize(&model.continuous_optimal_phases(0.0), codebook, layout)?;
            with_config(config, None)
        }
        BeamformingMethod::Blind => {
            let mut fb = FeedbackChannel::new(scenario, settings.seed)?;
            let (config, trace) = blind_rowcol_search(
                scenario,
                &PhaseConfiguration::uniform(layout, 0),
                &mut fb,
                settings.passes,
            )?;
            with_config(config, Some(trace))
        }
        BeamformingMethod::Greedy => {
            let mut fb = FeedbackChannel::new(scenario, settings.seed)?;
            let (config, trace) = greedy_element_search(
                scenario,
                &PhaseConfiguration::uniform(layout, 0),
                &mut fb,
                settings.max_rounds,
            )?;
            with_config(config, Some(trace))
        }
    }
}

//! Active transmissive unit: phase codebook, amplifier curve, phase jitter,
//! per-unit RCS and the SP4T switch control encoding.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{effective_area, ComplexCoefficient, ElementAperture};
use crate::error::{Error, Result};

/// Per-unit amplifier supply ceiling, 120 mA.
pub const DEFAULT_MAX_UNIT_CURRENT: f64 = 0.120;

/// Jitter bound measured across amplifier gain settings (8 degrees).
pub const DEFAULT_MAX_PHASE_ERROR: f64 = 8.0 * PI / 180.0;

/// Equally spaced `m`-bit phase set `{k * pi / 2^(m-1)} + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCodebook {
    pub bits: u32,
    pub offset: f64,
}

impl PhaseCodebook {
    pub fn new(bits: u32, offset: f64) -> Result<Self> {
        if !(1..=16).contains(&bits) {
            return Err(Error::invalid(
                "bits",
                format!("must be in 1..=16, got {bits}"),
            ));
        }
        let step = PI / f64::from(1u32 << (bits - 1));
        if !(offset.is_finite() && (0.0..step).contains(&offset)) {
            return Err(Error::invalid(
                "offset",
                format!(
                    "must lie in [0, {:.4}) degrees, got {:.4}",
                    step.to_degrees(),
                    offset.to_degrees()
                ),
            ));
        }
        Ok(Self { bits, offset })
    }

    /// The 2-bit, zero-offset codebook of the SP4T hardware.
    pub fn two_bit() -> Self {
        Self {
            bits: 2,
            offset: 0.0,
        }
    }

    pub fn size(&self) -> usize {
        1usize << self.bits
    }

    pub fn step(&self) -> f64 {
        PI / f64::from(1u32 << (self.bits - 1))
    }

    pub fn phase(&self, index: usize) -> Result<f64> {
        if index >= self.size() {
            return Err(Error::InvalidPhaseIndex {
                index,
                size: self.size(),
            });
        }
        Ok(index as f64 * self.step() + self.offset)
    }
}

pub fn codebook_phases(codebook: &PhaseCodebook) -> Vec<f64> {
    (0..codebook.size())
        .map(|k| k as f64 * codebook.step() + codebook.offset)
        .collect()
}

/// Programmed state of one unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitState {
    pub phase_index: usize,
    /// Amplifier supply current in amperes.
    pub amplifier_control: f64,
    /// Passive amplitude factor in `[0, 1]`.
    pub attenuation: f64,
}

impl UnitState {
    pub fn new(phase_index: usize, amplifier_control: f64) -> Self {
        Self {
            phase_index,
            amplifier_control,
            attenuation: 1.0,
        }
    }

    pub fn validate(&self, codebook: &PhaseCodebook) -> Result<()> {
        codebook.phase(self.phase_index)?;
        if !(0.0..=1.0).contains(&self.attenuation) {
            return Err(Error::invalid("attenuation", "must lie in [0, 1]"));
        }
        if !(self.amplifier_control.is_finite() && self.amplifier_control >= 0.0) {
            return Err(Error::invalid("amplifier_control", "must be >= 0"));
        }
        Ok(())
    }
}

/// Amplifier gain versus supply current, piecewise linear in dB between
/// calibration points and clamped outside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplifierModel {
    /// `(current A, gain dB)` pairs, currents strictly increasing.
    pub calibration: Vec<(f64, f64)>,
    pub max_current: f64,
}

impl AmplifierModel {
    pub fn new(calibration: Vec<(f64, f64)>, max_current: f64) -> Result<Self> {
        if calibration.is_empty() {
            return Err(Error::invalid("calibration", "needs at least one point"));
        }
        if !(max_current.is_finite() && max_current > 0.0) {
            return Err(Error::invalid("max_current", "must be > 0"));
        }
        for &(i, g) in &calibration {
            if !(i.is_finite() && i >= 0.0 && g.is_finite()) {
                return Err(Error::invalid(
                    "calibration",
                    "points must be finite with current >= 0",
                ));
            }
        }
        for w in calibration.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid(
                    "calibration",
                    "currents must be strictly increasing",
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::invalid(
                    "calibration",
                    "gains must be non-decreasing",
                ));
            }
        }
        Ok(Self {
            calibration,
            max_current,
        })
    }

    /// Builds a per-unit model from array-level supply currents shared
    /// evenly over `units` amplifiers.
    pub fn from_array_calibration(
        array_points: &[(f64, f64)],
        units: usize,
        max_unit_current: f64,
    ) -> Result<Self> {
        let n = units.max(1) as f64;
        Self::new(
            array_points.iter().map(|&(i, g)| (i / n, g)).collect(),
            max_unit_current,
        )
    }

    /// 0 dB at 0.01 A and 11.9 dB at 1.4 A total supply, shared by `units`.
    pub fn prototype(units: usize) -> Self {
        Self::from_array_calibration(&[(0.01, 0.0), (1.4, 11.9)], units, DEFAULT_MAX_UNIT_CURRENT)
            .expect("default calibration is valid")
    }

    /// Highest calibrated current, the natural full-power setting.
    pub fn full_power_current(&self) -> f64 {
        self.calibration
            .last()
            .map(|p| p.0)
            .unwrap_or(0.0)
            .min(self.max_current)
    }

    pub fn gain_linear(&self, current: f64) -> Result<f64> {
        Ok(10f64.powf(amplifier_gain(self, current)? / 10.0))
    }
}

pub fn amplifier_gain(amp: &AmplifierModel, current: f64) -> Result<f64> {
    if current > amp.max_current {
        return Err(Error::SupplyBudget {
            current,
            max: amp.max_current,
        });
    }
    if current.is_nan() || current < 0.0 {
        return Err(Error::invalid("amplifier_control", "must be >= 0"));
    }
    let cal = &amp.calibration;
    let (first, last) = (cal[0], cal[cal.len() - 1]);
    if current <= first.0 {
        return Ok(first.1);
    }
    if current >= last.0 {
        return Ok(last.1);
    }
    let k = cal.partition_point(|p| p.0 <= current);
    let (lo, hi) = (cal[k - 1], cal[k]);
    let t = (current - lo.0) / (hi.0 - lo.0);
    Ok(lo.1 + t * (hi.1 - lo.1))
}

/// Bounded uniform phase error of the shifting circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseJitterModel {
    pub max_error: f64,
    pub seed: u64,
}

impl PhaseJitterModel {
    pub fn new(max_error: f64, seed: u64) -> Result<Self> {
        if !(max_error.is_finite() && max_error >= 0.0) {
            return Err(Error::invalid("max_error", "must be >= 0"));
        }
        Ok(Self { max_error, seed })
    }

    pub fn source(&self) -> JitterSource {
        JitterSource {
            max_error: self.max_error,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }
}

impl Default for PhaseJitterModel {
    fn default() -> Self {
        Self {
            max_error: DEFAULT_MAX_PHASE_ERROR,
            seed: 0,
        }
    }
}

/// Seeded stream of jitter samples.
#[derive(Debug, Clone)]
pub struct JitterSource {
    max_error: f64,
    rng: ChaCha8Rng,
}

impl JitterSource {
    pub fn sample(&mut self) -> f64 {
        if self.max_error == 0.0 {
            return 0.0;
        }
        self.rng.gen_range(-self.max_error..=self.max_error)
    }
}

/// `mu * sqrt(G_u) * exp(j phi)` for a unit, with an optional jitter draw
/// added to the codebook phase.
pub fn unit_transmission_coefficient(
    state: &UnitState,
    codebook: &PhaseCodebook,
    amp: &AmplifierModel,
    jitter: Option<&mut JitterSource>,
) -> Result<ComplexCoefficient> {
    state.validate(codebook)?;
    let gain_db = amplifier_gain(amp, state.amplifier_control)?;
    let amplitude = state.attenuation * 10f64.powf(gain_db / 20.0);
    let mut phase = codebook.phase(state.phase_index)?;
    if let Some(j) = jitter {
        phase += j.sample();
    }
    Ok(ComplexCoefficient::new(amplitude, phase))
}

/// Scattering cross-section `mu * sqrt(G_u * A_in * A_out)` of one unit.
pub fn unit_rcs(
    state: &UnitState,
    amp: &AmplifierModel,
    incidence_zenith: f64,
    departure_zenith: f64,
    aperture: &ElementAperture,
) -> Result<f64> {
    let g = amp.gain_linear(state.amplifier_control)?;
    let a_in = effective_area(aperture, incidence_zenith);
    let a_out = effective_area(aperture, departure_zenith);
    Ok(state.attenuation * (g * a_in * a_out).sqrt())
}

/// Bias lines of the SP4T switch, written `Vcc1 Vcc2 Vcc3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ControlWord {
    pub vcc1: bool,
    pub vcc2: bool,
    pub vcc3: bool,
}

impl ControlWord {
    pub const fn from_bits(vcc1: u8, vcc2: u8, vcc3: u8) -> Self {
        Self {
            vcc1: vcc1 != 0,
            vcc2: vcc2 != 0,
            vcc3: vcc3 != 0,
        }
    }
}

/// Switch states for 0, 90, 180 and 270 degrees.
const SWITCH_TABLE: [ControlWord; 4] = [
    ControlWord::from_bits(0, 1, 1),
    ControlWord::from_bits(0, 0, 1),
    ControlWord::from_bits(0, 0, 0),
    ControlWord::from_bits(0, 1, 0),
];

pub fn encode_control(phase_index: usize) -> Result<ControlWord> {
    SWITCH_TABLE
        .get(phase_index)
        .copied()
        .ok_or(Error::InvalidPhaseIndex {
            index: phase_index,
            size: SWITCH_TABLE.len(),
        })
}

pub fn decode_control(word: ControlWord) -> Result<usize> {
    SWITCH_TABLE
        .iter()
        .position(|w| *w == word)
        .ok_or_else(|| Error::InvalidControlWord(word.to_string()))
}

impl fmt::Display for ControlWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = |v: bool| if v { '1' } else { '0' };
        write!(f, "{}{}{}", b(self.vcc1), b(self.vcc2), b(self.vcc3))
    }
}

impl FromStr for ControlWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidControlWord(s.to_string())),
            })
            .collect::<Result<_>>()?;
        match bits[..] {
            [vcc1, vcc2, vcc3] => Ok(Self { vcc1, vcc2, vcc3 }),
            _ => Err(Error::InvalidControlWord(s.to_string())),
        }
    }
}

impl TryFrom<String> for ControlWord {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ControlWord> for String {
    fn from(w: ControlWord) -> String {
        w.to_string()
    }
}

use serde::{Deserialize, Serialize};

use super::{row_for, with_rx_angle, SweepResult, SweepRow, SweepSpec, SweepVariable};
use crate::beamforming::{configure, BeamformingMethod, SearchSettings};
use crate::error::{Error, Result};
use crate::link_budget::LinkModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub angle_deg: f64,
    pub received_power_dbm: f64,
    /// Power relative to the pattern peak.
    pub relative_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternResult {
    pub steering_deg: f64,
    pub beamforming: BeamformingMethod,
    pub config_digest: String,
    pub rows: Vec<PatternRow>,
    pub peak_angle_deg: f64,
    pub peak_power_dbm: f64,
    pub hpbw_deg: f64,
    /// Peak over the strongest lobe outside the main beam; `None` when the
    /// grid has no such lobe.
    pub peak_to_sidelobe_db: Option<f64>,
    #[serde(skip)]
    sweep: Option<SweepResult>,
}

impl PatternResult {
    pub fn as_sweep(&self) -> &SweepResult {
        self.sweep
            .as_ref()
            .expect("pattern rows are always recorded")
    }

    pub fn to_csv(&self) -> String {
        self.as_sweep().to_csv()
    }
}

/// Steers the surface towards `steering_deg` at the template's RX distance,
/// freezes the phases, then moves the RX over the observation grid at the
/// same radius.
pub fn radiation_pattern(
    template: &crate::link_budget::Scenario,
    steering_deg: f64,
    observation: &SweepSpec,
    method: BeamformingMethod,
    settings: &SearchSettings,
) -> Result<PatternResult> {
    if observation.variable != SweepVariable::PatternAngle {
        return Err(Error::invalid(
            "variable",
            "pattern needs a pattern_angle grid",
        ));
    }
    observation.validate()?;
    if !(steering_deg.is_finite() && steering_deg.abs() < 90.0) {
        return Err(Error::invalid(
            "steering_deg",
            "must lie strictly inside (-90, 90) degrees",
        ));
    }
    let radius = template.rx_pose.r;
    let steered = with_rx_angle(template, steering_deg, radius)?;
    let beam = configure(&steered, method, settings)?;
    let digest = beam.digest();
    let states = steered.default_states();

    let mut sweep_rows: Vec<SweepRow> = Vec::new();
    for deg in observation.grid() {
        let s = with_rx_angle(template, deg, radius)?;
        let model = LinkModel::new(&s)?;
        sweep_rows.push(row_for(&model, &states, &beam.phases, deg, digest.clone())?);
    }
    if sweep_rows.is_empty() {
        return Err(Error::invalid("pattern_angle", "empty observation grid"));
    }

    let angles: Vec<f64> = sweep_rows.iter().map(|r| r.value).collect();
    let dbm: Vec<f64> = sweep_rows.iter().map(|r| r.received_power_dbm).collect();
    let peak = argmax(&dbm);
    let peak_dbm = dbm[peak];
    let rel: Vec<f64> = dbm.iter().map(|p| p - peak_dbm).collect();
    let rows = angles
        .iter()
        .zip(&dbm)
        .zip(&rel)
        .map(|((&a, &p), &r)| PatternRow {
            angle_deg: a,
            received_power_dbm: p,
            relative_db: r,
        })
        .collect();

    Ok(PatternResult {
        steering_deg,
        beamforming: method,
        config_digest: digest,
        rows,
        peak_angle_deg: angles[peak],
        peak_power_dbm: peak_dbm,
        hpbw_deg: half_power_beamwidth(&angles, &rel, peak),
        peak_to_sidelobe_db: peak_to_sidelobe(&rel, peak),
        sweep: Some(SweepResult {
            variable: SweepVariable::PatternAngle,
            beamforming: method,
            rows: sweep_rows,
        }),
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Width of the contiguous region around `peak` that stays above -3 dB,
/// with crossings interpolated linearly in dB. Stops at the grid ends.
pub fn half_power_beamwidth(angles: &[f64], relative_db: &[f64], peak: usize) -> f64 {
    const HALF: f64 = -3.0;
    let crossing = |inside: usize, outside: usize| {
        let (a0, a1) = (angles[inside], angles[outside]);
        let (p0, p1) = (relative_db[inside], relative_db[outside]);
        if p0 == p1 {
            a0
        } else {
            a0 + (HALF - p0) / (p1 - p0) * (a1 - a0)
        }
    };
    let mut lo = peak;
    while lo > 0 && relative_db[lo - 1] >= HALF {
        lo -= 1;
    }
    let left = if lo > 0 {
        crossing(lo, lo - 1)
    } else {
        angles[0]
    };
    let mut hi = peak;
    while hi + 1 < angles.len() && relative_db[hi + 1] >= HALF {
        hi += 1;
    }
    let right = if hi + 1 < angles.len() {
        crossing(hi, hi + 1)
    } else {
        angles[angles.len() - 1]
    };
    right - left
}

fn peak_to_sidelobe(relative_db: &[f64], peak: usize) -> Option<f64> {
    // main lobe runs downhill from the peak to the first minimum on each side
    let mut lo = peak;
    while lo > 0 && relative_db[lo - 1] <= relative_db[lo] {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < relative_db.len() && relative_db[hi + 1] <= relative_db[hi] {
        hi += 1;
    }
    let side = relative_db[..lo]
        .iter()
        .chain(&relative_db[hi + 1..])
        .copied()
        .filter(|x| x.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    side.is_finite().then(|| -side)
}

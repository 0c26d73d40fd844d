//! Parameter sweeps over a scenario template and their tabular output.

mod config;
mod pattern;
mod run;

pub use config::{parse_config, ExperimentConfig, SweepDefinition, SweepKind};
pub use pattern::{half_power_beamwidth, radiation_pattern, PatternResult, PatternRow};
pub use run::{execute, run_config, PatternMetrics, RunOptions, RunSummary, SweepSummary};

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::beamforming::{configure, BeamformingMethod, SearchSettings};
use crate::error::{Error, Result};
use crate::geometry::SphericalPose;
use crate::link_budget::{watts_to_dbm, LinkModel, Scenario};

pub const CSV_HEADER: &str = "variable,value,received_power_dBm,path_loss_dB,config_digest";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// RX distance in meters.
    RxDistance,
    /// RX zenith in degrees, signed in the `x z` plane.
    RxZenith,
    /// Total array supply current in amperes.
    AmplifierCurrent,
    /// Observation angle in degrees, signed in the `x z` plane.
    PatternAngle,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            Self::RxDistance => "rx_distance",
            Self::RxZenith => "rx_zenith",
            Self::AmplifierCurrent => "amplifier_current",
            Self::PatternAngle => "pattern_angle",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rx_distance" => Ok(Self::RxDistance),
            "rx_zenith" => Ok(Self::RxZenith),
            "amplifier_current" => Ok(Self::AmplifierCurrent),
            "pattern_angle" => Ok(Self::PatternAngle),
            other => Err(Error::invalid(
                "variable",
                format!("unknown sweep variable `{other}` (expected rx_distance, rx_zenith, amplifier_current or pattern_angle)"),
            )),
        }
    }
}

/// Evenly spaced grid of one variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub beamforming: BeamformingMethod,
}

impl SweepSpec {
    pub fn new(
        variable: SweepVariable,
        start: f64,
        stop: f64,
        step: f64,
        beamforming: BeamformingMethod,
    ) -> Result<Self> {
        let spec = Self {
            variable,
            start,
            stop,
            step,
            beamforming,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::invalid("start", "grid bounds must be finite"));
        }
        if self.start > self.stop {
            return Err(Error::invalid(
                "stop",
                format!("must be >= start ({} > {})", self.start, self.stop),
            ));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::invalid("step", "must be > 0"));
        }
        match self.variable {
            SweepVariable::RxDistance if self.start <= 0.0 => {
                Err(Error::invalid("start", "distances must be > 0"))
            }
            SweepVariable::AmplifierCurrent if self.start < 0.0 => {
                Err(Error::invalid("start", "currents must be >= 0"))
            }
            SweepVariable::RxZenith | SweepVariable::PatternAngle
                if self.start <= -90.0 || self.stop >= 90.0 =>
            {
                Err(Error::invalid(
                    "start",
                    "angles must lie strictly inside (-90, 90) degrees",
                ))
            }
            _ => Ok(()),
        }
    }

    /// `start, start + step, ...` up to `stop` inclusive.
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub received_power_dbm: f64,
    /// Positive path loss in dB, infinite when the sum cancels.
    pub path_loss_db: f64,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub beamforming: BeamformingMethod,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn path_losses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.path_loss_db).collect()
    }

    pub fn received_powers_dbm(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.received_power_dbm).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.9},{:.9},{}",
                self.variable, r.value, r.received_power_dbm, r.path_loss_db, r.config_digest
            );
        }
        out
    }
}

fn with_rx_angle(template: &Scenario, signed_deg: f64, r: f64) -> Result<Scenario> {
    let mut s = template.clone();
    let base_phi = template.rx_pose.phi.to_degrees();
    let phi = if signed_deg < 0.0 {
        base_phi + 180.0
    } else {
        base_phi
    };
    s.rx_pose = SphericalPose::from_degrees(r, signed_deg.abs(), phi)?;
    Ok(s)
}

/// Feedback searches at grid point `k` get their own noise stream.
fn point_settings(settings: &SearchSettings, k: usize) -> SearchSettings {
    SearchSettings {
        seed: settings.seed.wrapping_add(k as u64),
        ..*settings
    }
}

/// Evaluates `scenario` after choosing phases with `method`.
fn evaluate_point(
    scenario: &Scenario,
    method: BeamformingMethod,
    settings: &SearchSettings,
    value: f64,
) -> Result<SweepRow> {
    let beam = configure(scenario, method, settings)?;
    let model = LinkModel::new(scenario)?;
    let states = scenario.default_states();
    row_for(&model, &states, &beam.phases, value, beam.digest())
}

fn row_for(
    model: &LinkModel,
    states: &[crate::ris_model::UnitState],
    phases: &[f64],
    value: f64,
    digest: String,
) -> Result<SweepRow> {
    let p = model.received_power_with_phases(states, phases)?;
    let pl = match model.path_loss_with_phases(states, phases) {
        Ok(pl) => pl.db(),
        Err(Error::InfinitePathLoss) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(SweepRow {
        value,
        received_power_dbm: watts_to_dbm(p),
        path_loss_db: pl,
        config_digest: digest,
    })
}

/// Path loss versus RX distance, phases re-optimized at every point. The
/// RX keeps the template's zenith and azimuth.
pub fn distance_sweep(
    template: &Scenario,
    spec: &SweepSpec,
    settings: &SearchSettings,
) -> Result<SweepResult> {
    expect_variable(spec, SweepVariable::RxDistance)?;
    spec.validate()?;
    let rows = spec
        .grid()
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            let mut s = template.clone();
            s.rx_pose = SphericalPose::new(r, template.rx_pose.theta, template.rx_pose.phi)?;
            evaluate_point(&s, spec.beamforming, &point_settings(settings, k), r)
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        variable: spec.variable,
        beamforming: spec.beamforming,
        rows,
    })
}

/// Path loss versus RX zenith at the template's RX distance, phases
/// re-optimized at every angle.
pub fn angle_sweep(
    template: &Scenario,
    spec: &SweepSpec,
    settings: &SearchSettings,
) -> Result<SweepResult> {
    expect_variable(spec, SweepVariable::RxZenith)?;
    spec.validate()?;
    let rows = spec
        .grid()
        .into_iter()
        .enumerate()
        .map(|(k, deg)| {
            let s = with_rx_angle(template, deg, template.rx_pose.r)?;
            evaluate_point(&s, spec.beamforming, &point_settings(settings, k), deg)
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        variable: spec.variable,
        beamforming: spec.beamforming,
        rows,
    })
}

/// Received power versus total array supply current. Phases are chosen once
/// at the template's full-power drive and then held.
pub fn gain_sweep(
    template: &Scenario,
    array_currents: &[f64],
    method: BeamformingMethod,
    settings: &SearchSettings,
) -> Result<SweepResult> {
    let beam = configure(template, method, settings)?;
    let model = LinkModel::new(template)?;
    let units = template.layout.len() as f64;
    let digest = beam.digest();
    let rows = array_currents
        .iter()
        .map(|&total| {
            let states = template.uniform_states(0, total / units);
            row_for(&model, &states, &beam.phases, total, digest.clone())
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        variable: SweepVariable::AmplifierCurrent,
        beamforming: method,
        rows,
    })
}

/// Phases chosen for one scenario, with the resulting link figures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamformReport {
    pub method: BeamformingMethod,
    pub received_power_dbm: f64,
    pub path_loss_db: f64,
    pub config_digest: String,
    /// Row-major applied phases in degrees.
    pub phases_deg: Vec<f64>,
    /// Codebook indices, rows separated by `/`.
    pub configuration: Option<String>,
    /// Bias word of each unit, row-major.
    pub control_words: Option<Vec<String>>,
    pub feedback_queries: Option<usize>,
    /// Bound reached by unquantized phases.
    pub max_received_power_dbm: f64,
}

impl BeamformReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }
}

pub fn beamform_report(
    scenario: &Scenario,
    method: BeamformingMethod,
    settings: &SearchSettings,
) -> Result<BeamformReport> {
    let beam = configure(scenario, method, settings)?;
    let model = LinkModel::new(scenario)?;
    let states = scenario.default_states();
    let row = row_for(&model, &states, &beam.phases, 0.0, beam.digest())?;
    let control_words = beam
        .configuration
        .as_ref()
        .map(|c| {
            c.indices()
                .iter()
                .map(|&i| crate::ris_model::encode_control(i).map(|w| w.to_string()))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()
        // wider codebooks have no bias table
        .unwrap_or(None);
    Ok(BeamformReport {
        method,
        received_power_dbm: row.received_power_dbm,
        path_loss_db: row.path_loss_db,
        config_digest: row.config_digest,
        phases_deg: beam.phases.iter().map(|p| p.to_degrees()).collect(),
        configuration: beam.configuration.as_ref().map(|c| c.to_string()),
        control_words,
        feedback_queries: beam.trace.as_ref().map(|t| t.steps.len()),
        max_received_power_dbm: watts_to_dbm(model.max_received_power_for(&states)?),
    })
}

fn expect_variable(spec: &SweepSpec, v: SweepVariable) -> Result<()> {
    if spec.variable != v {
        return Err(Error::invalid(
            "variable",
            format!("expected a {v} sweep, got {}", spec.variable),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{antenna_gain, effective_area};

    fn tx_at(rt: f64) -> Scenario {
        let mut s = Scenario::prototype();
        s.tx_pose = SphericalPose::new(rt, 0.0, 0.0).unwrap();
        s
    }

    #[test]
    fn grid_construction() {
        let s = SweepSpec::new(
            SweepVariable::RxDistance,
            0.5,
            5.0,
            0.5,
            BeamformingMethod::Continuous,
        )
        .unwrap();
        let g = s.grid();
        assert_eq!(g.len(), 10);
        assert!((g[9] - 5.0).abs() < 1e-12);
        let one = SweepSpec::new(
            SweepVariable::RxDistance,
            2.0,
            2.0,
            0.5,
            BeamformingMethod::Continuous,
        )
        .unwrap();
        assert_eq!(one.grid(), vec![2.0]);
        let angles = SweepSpec::new(
            SweepVariable::RxZenith,
            0.0,
            60.0,
            10.0,
            BeamformingMethod::Continuous,
        )
        .unwrap();
        assert_eq!(angles.grid().len(), 7);
    }

    #[test]
    fn grid_validation() {
        use BeamformingMethod::Continuous as C;
        assert!(SweepSpec::new(SweepVariable::RxDistance, 1.0, 0.5, 0.5, C).is_err());
        assert!(SweepSpec::new(SweepVariable::RxDistance, 0.5, 1.0, 0.0, C).is_err());
        assert!(SweepSpec::new(SweepVariable::RxDistance, 0.0, 1.0, 0.5, C).is_err());
        assert!(SweepSpec::new(SweepVariable::RxZenith, 0.0, 90.0, 10.0, C).is_err());
        assert!(SweepSpec::new(SweepVariable::PatternAngle, -90.0, 0.0, 10.0, C).is_err());
    }

    #[test]
    fn distance_sweep_increases() {
        let spec = SweepSpec::new(
            SweepVariable::RxDistance,
            0.5,
            5.0,
            0.5,
            BeamformingMethod::Continuous,
        )
        .unwrap();
        let r = distance_sweep(&tx_at(0.5), &spec, &SearchSettings::default()).unwrap();
        assert_eq!(r.rows.len(), 10);
        let pl = r.path_losses();
        assert!(pl.windows(2).all(|w| w[1] > w[0]), "{pl:?}");
        let far = pl[9] - pl[4];
        assert!((far - 6.02).abs() <= 0.5, "{far}");
    }

    #[test]
    fn angle_sweep_matches_distance_sweep_at_boresight() {
        let mut template = tx_at(0.5);
        template.rx_pose = SphericalPose::new(4.5, 0.0, 0.0).unwrap();
        let angles = SweepSpec::new(
            SweepVariable::RxZenith,
            0.0,
            60.0,
            10.0,
            BeamformingMethod::Continuous,
        )
        .unwrap();
        let a = angle_sweep(&template, &angles, &SearchSettings::default()).unwrap();
        let dist = SweepSpec::new(
            SweepVariable::RxDistance,
            4.5,
            4.5,
            0.5,
            BeamformingMethod::Continuous,
        )
        .unwrap();
        let d = distance_sweep(&template, &dist, &SearchSettings::default()).unwrap();
        assert_eq!(a.rows.len(), 7);
        assert!((a.rows[0].path_loss_db - d.rows[0].path_loss_db).abs() < 1e-9);
        let pl = a.path_losses();
        assert!(pl[6] > pl[0]);

        // closed form: received power follows A(theta) G(theta) at the array centre
        let th = 60f64.to_radians();
        let factor = effective_area(&template.aperture(), th) / template.aperture().geometric_area
            * antenna_gain(&template.rx_antenna, th)
            / template.rx_antenna.boresight_gain;
        let oracle = -10.0 * factor.log10();
        assert!(((pl[6] - pl[0]) - oracle).abs() <= 1.0);
    }

    #[test]
    fn gain_sweep_reproduces_calibration_swing() {
        let s = Scenario::prototype();
        let r = gain_sweep(
            &s,
            &[0.01, 1.4],
            BeamformingMethod::Quantized,
            &SearchSettings::default(),
        )
        .unwrap();
        let p = r.received_powers_dbm();
        assert!(((p[1] - p[0]) - 11.9).abs() < 1e-9);
        let flat = gain_sweep(
            &s,
            &[0.7, 0.7, 0.7],
            BeamformingMethod::Quantized,
            &SearchSettings::default(),
        )
        .unwrap();
        let f = flat.received_powers_dbm();
        assert!(f.iter().all(|x| *x == f[0]));
        assert!(matches!(
            gain_sweep(
                &s,
                &[5.0],
                BeamformingMethod::None,
                &SearchSettings::default()
            ),
            Err(Error::SupplyBudget { .. })
        ));
    }

    #[test]
    fn gain_sweep_monotone_for_three_point_curve() {
        let mut s = Scenario::prototype();
        s.amplifier = crate::ris_model::AmplifierModel::from_array_calibration(
            &[(0.01, 0.0), (0.2, 7.5), (1.4, 11.9)],
            32,
            0.12,
        )
        .unwrap();
        let currents: Vec<f64> = (0..=28).map(|k| 0.01 + k as f64 * 0.05).collect();
        let r = gain_sweep(
            &s,
            &currents,
            BeamformingMethod::Continuous,
            &SearchSettings::default(),
        )
        .unwrap();
        let p = r.received_powers_dbm();
        assert!(p.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn csv_layout() {
        let spec = SweepSpec::new(
            SweepVariable::RxDistance,
            1.0,
            1.5,
            0.5,
            BeamformingMethod::Quantized,
        )
        .unwrap();
        let r = distance_sweep(&Scenario::prototype(), &spec, &SearchSettings::default()).unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("rx_distance,1,"));
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn beamform_report_fields() {
        let s = Scenario::prototype();
        let st = SearchSettings::default();
        let q = beamform_report(&s, BeamformingMethod::Quantized, &st).unwrap();
        assert_eq!(q.phases_deg.len(), 32);
        assert_eq!(q.control_words.as_ref().unwrap().len(), 32);
        assert!(q.configuration.unwrap().contains('/'));
        assert!(q.received_power_dbm <= q.max_received_power_dbm + 1e-9);
        let c = beamform_report(&s, BeamformingMethod::Continuous, &st).unwrap();
        assert!(c.control_words.is_none());
        assert!((c.received_power_dbm - c.max_received_power_dbm).abs() < 1e-9);
        let b = beamform_report(&s, BeamformingMethod::Blind, &st).unwrap();
        assert_eq!(b.feedback_queries, Some(1 + 4 * 12));
        assert!(b.to_json().ends_with("}\n"));
    }

    #[test]
    fn wrong_variable_is_rejected() {
        let spec = SweepSpec::new(
            SweepVariable::RxZenith,
            0.0,
            10.0,
            10.0,
            BeamformingMethod::None,
        )
        .unwrap();
        assert!(distance_sweep(&Scenario::prototype(), &spec, &SearchSettings::default()).is_err());
    }
}

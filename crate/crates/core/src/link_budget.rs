//! Received signal, received power and path loss of the through-surface link.
//!
//! Each unit contributes `sqrt(G_t G_r) / (r_t r_r) * sigma_n * exp(j(phi_n - Phi_n))`
//! where `sigma_n` is the unit's scattering cross-section and
//! `Phi_n = 2pi (r_t + r_r) / lambda`. Received power is
//! `P_t / (16 pi^2) * |sum|^2` and path loss is `16 pi^2 / |sum|^2`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::{
    antenna_gain, cycle_fraction, effective_area, path_coefficient, wavelength, wrap_phase,
    AntennaModel, ElementAperture,
};
use crate::error::{Error, Result};
use crate::geometry::{
    departure_zenith, distance, element_position, spherical_to_cartesian, ArrayLayout,
    CartesianPoint, ElementIndex, SphericalPose,
};
use crate::ris_model::{
    unit_rcs, unit_transmission_coefficient, AmplifierModel, PhaseCodebook, PhaseJitterModel,
    UnitState,
};

const SIXTEEN_PI_SQ: f64 = 16.0 * PI * PI;

/// Full description of a link.
///
/// `tx_pose` is measured from the incidence-side normal (`+z`), `rx_pose`
/// from the transmission-side normal (`-z`), so `theta = 0` puts either
/// antenna on boresight of its own face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Carrier frequency in Hz.
    pub frequency: f64,
    pub tx_pose: SphericalPose,
    pub rx_pose: SphericalPose,
    pub tx_antenna: AntennaModel,
    pub rx_antenna: AntennaModel,
    pub layout: ArrayLayout,
    pub codebook: PhaseCodebook,
    pub amplifier: AmplifierModel,
    /// Transmit power in watts.
    pub tx_power: f64,
    /// Receiver noise variance in watts.
    pub noise_variance: f64,
    pub jitter: Option<PhaseJitterModel>,
}

/// Horn exponent used by the bundled scenarios.
pub const DEFAULT_PATTERN_EXPONENT: f64 = 0.25;

impl Scenario {
    /// Anechoic-chamber setup: 4x8 array of 60 mm units at 2.6 GHz, TX horn
    /// 0.6 m in front, RX horn 4 m behind, both on boresight.
    pub fn prototype() -> Self {
        let layout = ArrayLayout::new(4, 8, 0.06, 0.06).expect("valid layout");
        let horn = AntennaModel::new(10.0, DEFAULT_PATTERN_EXPONENT).expect("valid horn");
        Self {
            frequency: 2.6e9,
            tx_pose: SphericalPose::new(0.6, 0.0, 0.0).expect("valid pose"),
            rx_pose: SphericalPose::new(4.0, 0.0, 0.0).expect("valid pose"),
            tx_antenna: horn,
            rx_antenna: horn,
            layout,
            codebook: PhaseCodebook::two_bit(),
            amplifier: AmplifierModel::prototype(layout.len()),
            tx_power: 1e-3,
            noise_variance: 0.0,
            jitter: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::invalid("frequency", "must be > 0"));
        }
        if !(self.tx_power.is_finite() && self.tx_power >= 0.0) {
            return Err(Error::invalid("tx_power", "must be >= 0"));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::invalid("noise_variance", "must be >= 0"));
        }
        if self.tx_pose.theta >= FRAC_PI_2 {
            return Err(Error::invalid(
                "tx.theta",
                "transmitter must sit in front of the surface (zenith < 90 degrees)",
            ));
        }
        if self.rx_pose.theta >= FRAC_PI_2 {
            return Err(Error::invalid(
                "rx.theta",
                "receiver must sit behind the surface (zenith < 90 degrees)",
            ));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.frequency)
    }

    pub fn tx_position(&self) -> CartesianPoint {
        spherical_to_cartesian(self.tx_pose)
    }

    pub fn rx_position(&self) -> CartesianPoint {
        spherical_to_cartesian(self.rx_pose).mirrored_z()
    }

    pub fn aperture(&self) -> ElementAperture {
        ElementAperture {
            geometric_area: self.layout.unit_area(),
        }
    }

    /// All units at phase index 0, full calibrated supply, no attenuation.
    pub fn default_states(&self) -> Vec<UnitState> {
        self.uniform_states(0, self.amplifier.full_power_current())
    }

    pub fn uniform_states(&self, phase_index: usize, unit_current: f64) -> Vec<UnitState> {
        vec![UnitState::new(phase_index, unit_current); self.layout.len()]
    }

    /// Same link with the roles of the two antennas exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            tx_pose: self.rx_pose,
            rx_pose: self.tx_pose,
            tx_antenna: self.rx_antenna,
            rx_antenna: self.tx_antenna,
            ..self.clone()
        }
    }
}

/// Geometry-dependent factors of one unit's two hops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementPath {
    pub index: ElementIndex,
    pub position: CartesianPoint,
    pub tx_distance: f64,
    pub rx_distance: f64,
    pub tx_zenith: f64,
    pub rx_zenith: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
}

impl ElementPath {
    /// `sqrt(G_t G_r) / (r_t r_r)`.
    pub fn spreading(&self) -> f64 {
        (self.tx_gain * self.rx_gain).sqrt() / (self.tx_distance * self.rx_distance)
    }
}

/// Dimensionless path loss `P_t / P_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLoss {
    pub linear: f64,
}

impl PathLoss {
    pub fn db(&self) -> f64 {
        10.0 * self.linear.log10()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    pub received_power: f64,
    pub path_loss: Result<PathLoss>,
    pub per_element_terms: Vec<Complex64>,
}

/// Scenario with per-unit paths resolved once, for repeated evaluation.
#[derive(Debug, Clone)]
pub struct LinkModel {
    scenario: Scenario,
    wavelength: f64,
    paths: Vec<ElementPath>,
}

impl LinkModel {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let tx = scenario.tx_position();
        let rx = scenario.rx_position();
        let paths = scenario
            .layout
            .indices()
            .map(|index| {
                let position = element_position(&scenario.layout, index)?;
                let tx_zenith = departure_zenith(tx, position)?;
                let rx_zenith = departure_zenith(rx, position)?;
                Ok(ElementPath {
                    index,
                    position,
                    tx_distance: distance(tx, position),
                    rx_distance: distance(rx, position),
                    tx_zenith,
                    rx_zenith,
                    tx_gain: antenna_gain(&scenario.tx_antenna, tx_zenith),
                    rx_gain: antenna_gain(&scenario.rx_antenna, rx_zenith),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            wavelength: scenario.wavelength(),
            scenario: scenario.clone(),
            paths,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn paths(&self) -> &[ElementPath] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Unreduced `2pi (r_t + r_r) / lambda` of unit `n` (row-major).
    pub fn propagation_phase(&self, n: usize) -> f64 {
        let p = &self.paths[n];
        TAU * (p.tx_distance + p.rx_distance) / self.wavelength
    }

    /// `propagation_phase` reduced hop by hop, congruent mod `2pi`.
    fn reduced_propagation_phase(&self, n: usize) -> f64 {
        let p = &self.paths[n];
        TAU * (cycle_fraction(p.tx_distance / self.wavelength)
            + cycle_fraction(p.rx_distance / self.wavelength))
    }

    fn check_states(&self, states: &[UnitState]) -> Result<()> {
        if states.len() != self.paths.len() {
            return Err(Error::StateCountMismatch {
                expected: self.paths.len(),
                got: states.len(),
            });
        }
        states
            .iter()
            .try_for_each(|s| s.validate(&self.scenario.codebook))
    }

    /// Scattering cross-section of every unit.
    pub fn rcs(&self, states: &[UnitState]) -> Result<Vec<f64>> {
        self.check_states(states)?;
        let aperture = self.scenario.aperture();
        self.paths
            .iter()
            .zip(states)
            .map(|(p, s)| {
                unit_rcs(
                    s,
                    &self.scenario.amplifier,
                    p.tx_zenith,
                    p.rx_zenith,
                    &aperture,
                )
            })
            .collect()
    }

    /// Nominal codebook phase of every unit.
    pub fn codebook_phases(&self, states: &[UnitState]) -> Result<Vec<f64>> {
        self.check_states(states)?;
        states
            .iter()
            .map(|s| self.scenario.codebook.phase(s.phase_index))
            .collect()
    }

    /// Per-unit summands `sqrt(G_t G_r)/(r_t r_r) * sigma * exp(j(phi - Phi))`.
    pub fn terms(&self, rcs: &[f64], phases: &[f64]) -> Vec<Complex64> {
        self.paths
            .iter()
            .enumerate()
            .zip(rcs.iter().zip(phases))
            .map(|((n, p), (&sigma, &phi))| {
                Complex64::from_polar(
                    p.spreading() * sigma,
                    phi - self.reduced_propagation_phase(n),
                )
            })
            .collect()
    }

    fn coherent_sum(&self, rcs: &[f64], phases: &[f64]) -> Complex64 {
        self.terms(rcs, phases).into_iter().sum()
    }

    fn power_from_sum(&self, sum: Complex64) -> f64 {
        self.scenario.tx_power / SIXTEEN_PI_SQ * sum.norm_sqr()
    }

    pub fn received_power(&self, states: &[UnitState]) -> Result<f64> {
        let phases = self.codebook_phases(states)?;
        self.received_power_with_phases(states, &phases)
    }

    /// Received power with the unit phases overridden by `phases`; gains and
    /// attenuation still come from `states`.
    pub fn received_power_with_phases(&self, states: &[UnitState], phases: &[f64]) -> Result<f64> {
        let rcs = self.rcs(states)?;
        if phases.len() != rcs.len() {
            return Err(Error::StateCountMismatch {
                expected: rcs.len(),
                got: phases.len(),
            });
        }
        Ok(self.power_from_sum(self.coherent_sum(&rcs, phases)))
    }

    /// Received power from the hop coefficients directly,
    /// `P_t |sum_n f_n Gamma_n g_n|^2`, without the cross-section grouping.
    pub fn received_power_expanded(&self, states: &[UnitState], phases: &[f64]) -> Result<f64> {
        self.check_states(states)?;
        if phases.len() != states.len() {
            return Err(Error::StateCountMismatch {
                expected: states.len(),
                got: phases.len(),
            });
        }
        let s = &self.scenario;
        let aperture = s.aperture();
        let tx = s.tx_position();
        let rx = s.rx_position();
        let mut sum = Complex64::new(0.0, 0.0);
        for ((p, state), &phi) in self.paths.iter().zip(states).zip(phases) {
            let f = path_coefficient(tx, &s.tx_antenna, p.position, &aperture, self.wavelength)?;
            let g = path_coefficient(rx, &s.rx_antenna, p.position, &aperture, self.wavelength)?;
            let gamma = unit_transmission_coefficient(state, &s.codebook, &s.amplifier, None)?;
            let gamma = Complex64::from_polar(gamma.amplitude, phi);
            sum += f.to_complex() * gamma * g.to_complex();
        }
        Ok(s.tx_power * sum.norm_sqr())
    }

    pub fn path_loss(&self, states: &[UnitState]) -> Result<PathLoss> {
        let phases = self.codebook_phases(states)?;
        self.path_loss_with_phases(states, &phases)
    }

    pub fn path_loss_with_phases(&self, states: &[UnitState], phases: &[f64]) -> Result<PathLoss> {
        let rcs = self.rcs(states)?;
        let terms = self.terms(&rcs, phases);
        path_loss_from_terms(&terms)
    }

    /// `phi_n = mod(C + Phi_n, 2pi)`, which aligns every summand.
    pub fn continuous_optimal_phases(&self, constant: f64) -> Vec<f64> {
        (0..self.len())
            .map(|n| wrap_phase(constant + self.reduced_propagation_phase(n)))
            .collect()
    }

    /// Coherent bound `P_t/(16 pi^2) * (sum_n sqrt(G_t G_r) sigma_n / (r_t r_r))^2`
    /// for the gains and attenuations in `states`.
    pub fn max_received_power_for(&self, states: &[UnitState]) -> Result<f64> {
        let bound = self.coherent_bound(states)?;
        Ok(self.scenario.tx_power / SIXTEEN_PI_SQ * bound * bound)
    }

    pub fn min_path_loss_for(&self, states: &[UnitState]) -> Result<PathLoss> {
        let bound = self.coherent_bound(states)?;
        if bound <= 0.0 {
            return Err(Error::InfinitePathLoss);
        }
        Ok(PathLoss {
            linear: SIXTEEN_PI_SQ / (bound * bound),
        })
    }

    fn coherent_bound(&self, states: &[UnitState]) -> Result<f64> {
        let rcs = self.rcs(states)?;
        Ok(self
            .paths
            .iter()
            .zip(&rcs)
            .map(|(p, s)| p.spreading() * s)
            .sum())
    }

    pub fn evaluate(&self, states: &[UnitState]) -> Result<LinkResult> {
        let rcs = self.rcs(states)?;
        let phases = self.codebook_phases(states)?;
        let terms = self.terms(&rcs, &phases);
        let sum: Complex64 = terms.iter().sum();
        Ok(LinkResult {
            received_power: self.power_from_sum(sum),
            path_loss: path_loss_from_terms(&terms),
            per_element_terms: terms,
        })
    }

    /// Noisy baseband sample `y`; see [`received_signal`].
    pub fn received_signal(
        &self,
        states: &[UnitState],
        symbol: Complex64,
        noise_sample: Option<Complex64>,
    ) -> Result<Complex64> {
        let phases = self.codebook_phases(states)?;
        let rcs = self.rcs(states)?;
        let sum = self.coherent_sum(&rcs, &phases);
        let signal = self.scenario.tx_power.sqrt() / (4.0 * PI) * sum * symbol;
        Ok(signal + noise_sample.unwrap_or_default())
    }
}

fn path_loss_from_terms(terms: &[Complex64]) -> Result<PathLoss> {
    let sum: Complex64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.norm()).sum();
    let mag_sq = sum.norm_sqr();
    if scale == 0.0 || mag_sq <= (scale * 1e-12).powi(2) {
        return Err(Error::InfinitePathLoss);
    }
    Ok(PathLoss {
        linear: SIXTEEN_PI_SQ / mag_sq,
    })
}

/// Circularly symmetric complex Gaussian sample with the given variance.
pub fn draw_noise<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    if variance <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let normal = Normal::new(0.0, (variance / 2.0).sqrt()).expect("finite std");
    Complex64::new(normal.sample(rng), normal.sample(rng))
}

pub fn propagation_phase(scenario: &Scenario, element: ElementIndex) -> Result<f64> {
    let pos = element_position(&scenario.layout, element)?;
    let rt = distance(scenario.tx_position(), pos);
    let rr = distance(scenario.rx_position(), pos);
    Ok(TAU * (rt + rr) / scenario.wavelength())
}

/// `y = sqrt(P_t)/(4pi) * sum_n [...] * x + z`.
pub fn received_signal(
    scenario: &Scenario,
    states: &[UnitState],
    symbol: Complex64,
    noise_sample: Option<Complex64>,
) -> Result<Complex64> {
    LinkModel::new(scenario)?.received_signal(states, symbol, noise_sample)
}

pub fn received_power(scenario: &Scenario, states: &[UnitState]) -> Result<f64> {
    LinkModel::new(scenario)?.received_power(states)
}

pub fn path_loss(scenario: &Scenario, states: &[UnitState]) -> Result<PathLoss> {
    LinkModel::new(scenario)?.path_loss(states)
}

pub fn continuous_optimal_phases(scenario: &Scenario, constant: f64) -> Result<Vec<f64>> {
    Ok(LinkModel::new(scenario)?.continuous_optimal_phases(constant))
}

/// Coherent optimum for the scenario's default unit drive.
pub fn max_received_power(scenario: &Scenario) -> Result<f64> {
    LinkModel::new(scenario)?.max_received_power_for(&scenario.default_states())
}

pub fn min_path_loss(scenario: &Scenario) -> Result<PathLoss> {
    LinkModel::new(scenario)?.min_path_loss_for(&scenario.default_states())
}

/// Effective area used by `unit_rcs`, exposed for closed-form checks.
pub fn element_effective_area(scenario: &Scenario, zenith: f64) -> f64 {
    effective_area(&scenario.aperture(), zenith)
}

pub fn watts_to_dbm(p: f64) -> f64 {
    10.0 * (p / 1e-3).log10()
}

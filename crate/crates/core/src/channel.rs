//! Free-space coefficients between the horn antennas and each unit.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{departure_zenith, distance, element_position, CartesianPoint, ElementIndex};
use crate::link_budget::Scenario;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn wavelength(frequency: f64) -> f64 {
    SPEED_OF_LIGHT / frequency
}

/// Amplitude and phase of a complex gain, phase kept in `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexCoefficient {
    pub amplitude: f64,
    pub phase: f64,
}

impl ComplexCoefficient {
    pub fn new(amplitude: f64, phase: f64) -> Self {
        Self {
            amplitude,
            phase: wrap_phase(phase),
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

/// Reduces an angle to `[0, 2pi)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Horn gain pattern `G(theta) = boresight_gain * cos(theta)^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaModel {
    pub boresight_gain: f64,
    pub pattern_exponent: f64,
}

impl AntennaModel {
    pub fn new(boresight_gain: f64, pattern_exponent: f64) -> Result<Self> {
        if !(boresight_gain.is_finite() && boresight_gain > 0.0) {
            return Err(Error::invalid("boresight_gain", "must be > 0"));
        }
        if !(pattern_exponent.is_finite() && pattern_exponent >= 0.0) {
            return Err(Error::invalid("pattern_exponent", "must be >= 0"));
        }
        Ok(Self {
            boresight_gain,
            pattern_exponent,
        })
    }

    pub fn isotropic() -> Self {
        Self {
            boresight_gain: 1.0,
            pattern_exponent: 0.0,
        }
    }
}

pub fn antenna_gain(model: &AntennaModel, zenith: f64) -> f64 {
    if zenith > FRAC_PI_2 {
        return 0.0;
    }
    let c = zenith.max(0.0).cos().max(0.0);
    model.boresight_gain * c.powf(model.pattern_exponent)
}

/// Physical aperture of one unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementAperture {
    pub geometric_area: f64,
}

impl ElementAperture {
    pub fn new(geometric_area: f64) -> Result<Self> {
        if !(geometric_area.is_finite() && geometric_area > 0.0) {
            return Err(Error::invalid("geometric_area", "must be > 0"));
        }
        Ok(Self { geometric_area })
    }
}

/// Projected aperture seen from `zenith`.
pub fn effective_area(aperture: &ElementAperture, zenith: f64) -> f64 {
    if zenith >= FRAC_PI_2 {
        return 0.0;
    }
    aperture.geometric_area * zenith.max(0.0).cos()
}

/// Coefficient of one antenna-to-unit hop:
/// `sqrt(G(theta) A(theta) / 4pi) / r * exp(-j 2pi r / lambda)`.
pub fn path_coefficient(
    antenna_position: CartesianPoint,
    antenna: &AntennaModel,
    element_position: CartesianPoint,
    aperture: &ElementAperture,
    wavelength: f64,
) -> Result<ComplexCoefficient> {
    let r = distance(antenna_position, element_position);
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let zenith = departure_zenith(antenna_position, element_position)?;
    let g = antenna_gain(antenna, zenith);
    let a = effective_area(aperture, zenith);
    let amplitude = (g * a / (4.0 * PI)).sqrt() / r;
    Ok(ComplexCoefficient::new(
        amplitude,
        -TAU * cycle_fraction(r / wavelength),
    ))
}

/// Fractional part of a path length in wavelengths. Reducing before the
/// multiplication by `2pi` keeps large phases accurate.
pub fn cycle_fraction(cycles: f64) -> f64 {
    cycles - cycles.floor()
}

pub fn tx_channel_coefficient(
    scenario: &Scenario,
    element: ElementIndex,
) -> Result<ComplexCoefficient> {
    let pos = element_position(&scenario.layout, element)?;
    path_coefficient(
        scenario.tx_position(),
        &scenario.tx_antenna,
        pos,
        &scenario.aperture(),
        scenario.wavelength(),
    )
}

pub fn rx_channel_coefficient(
    scenario: &Scenario,
    element: ElementIndex,
) -> Result<ComplexCoefficient> {
    let pos = element_position(&scenario.layout, element)?;
    path_coefficient(
        scenario.rx_position(),
        &scenario.rx_antenna,
        pos,
        &scenario.aperture(),
        scenario.wavelength(),
    )
}

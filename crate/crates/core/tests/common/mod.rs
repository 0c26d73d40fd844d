#![allow(dead_code)]

use rand::Rng;
use rislink_core::channel::{wavelength, AntennaModel};
use rislink_core::geometry::{ArrayLayout, SphericalPose};
use rislink_core::link_budget::Scenario;
use rislink_core::ris_model::{AmplifierModel, PhaseCodebook, UnitState};

/// Random but valid link with at most `max_units` units.
pub fn random_scenario<R: Rng>(rng: &mut R, max_units: usize) -> Scenario {
    let (rows, cols) = loop {
        let r = rng.gen_range(1..=4);
        let c = rng.gen_range(1..=8);
        if r * c <= max_units {
            break (r, c);
        }
    };
    let frequency = rng.gen_range(1e9..6e9);
    // sub-wavelength units, as on a real surface
    let lambda = wavelength(frequency);
    let layout = ArrayLayout::new(
        rows,
        cols,
        lambda * rng.gen_range(0.2..0.6),
        lambda * rng.gen_range(0.2..0.6),
    )
    .unwrap();
    let pose = |rng: &mut R| {
        SphericalPose::from_degrees(
            rng.gen_range(0.2..5.0),
            rng.gen_range(0.0..75.0),
            rng.gen_range(0.0..360.0),
        )
        .unwrap()
    };
    let antenna =
        |rng: &mut R| AntennaModel::new(rng.gen_range(1.0..30.0), rng.gen_range(0.0..3.0)).unwrap();
    let top_gain = rng.gen_range(3.0..15.0);
    Scenario {
        frequency,
        tx_pose: pose(rng),
        rx_pose: pose(rng),
        tx_antenna: antenna(rng),
        rx_antenna: antenna(rng),
        layout,
        codebook: PhaseCodebook::new(2, rng.gen_range(0.0..1.5)).unwrap(),
        amplifier: AmplifierModel::from_array_calibration(
            &[(0.01, 0.0), (1.4, top_gain)],
            layout.len(),
            0.12,
        )
        .unwrap(),
        tx_power: rng.gen_range(1e-4..1.0),
        noise_variance: 0.0,
        jitter: None,
    }
}

/// Random phase indices, supply currents and attenuations.
pub fn random_states<R: Rng>(rng: &mut R, scenario: &Scenario) -> Vec<UnitState> {
    let max = scenario.amplifier.max_current;
    (0..scenario.layout.len())
        .map(|_| UnitState {
            phase_index: rng.gen_range(0..scenario.codebook.size()),
            amplifier_control: rng.gen_range(0.0..=max),
            attenuation: rng.gen_range(0.05..=1.0),
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rislink_core::beamforming::{BeamformingMethod, SearchSettings};
use rislink_core::experiments::{
    angle_sweep, beamform_report, distance_sweep, gain_sweep, parse_config, radiation_pattern,
    run_config, RunOptions, SweepResult, SweepSpec, SweepVariable,
};
use rislink_core::geometry::{ArrayLayout, SphericalPose};
use rislink_core::link_budget::Scenario;
use rislink_core::ris_model::AmplifierModel;

/// Active transmissive RIS link simulator.
#[derive(Debug, Parser)]
#[command(name = "rislink", version, about)]
struct Cli {
    /// Seed for feedback noise and phase jitter.
    #[arg(long, global = true, env = "RISLINK_SEED")]
    seed: Option<u64>,

    /// Directory for CSV/JSON output; sweeps print CSV to stdout without it.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Path loss versus RX distance.
    SweepDistance {
        #[command(flatten)]
        grid: Grid<0>,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "continuous")]
        method: BeamformingMethod,
    },
    /// Path loss versus RX zenith angle (degrees).
    SweepAngle {
        #[command(flatten)]
        grid: Grid<1>,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "continuous")]
        method: BeamformingMethod,
    },
    /// Received power versus total supply current (amperes).
    SweepGain {
        #[command(flatten)]
        grid: Grid<2>,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "quantized")]
        method: BeamformingMethod,
    },
    /// Radiation pattern for a fixed steering angle.
    Pattern {
        /// Steering angle in degrees.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        steering: f64,
        #[command(flatten)]
        grid: Grid<3>,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "quantized")]
        method: BeamformingMethod,
    },
    /// Chooses unit phases for one geometry and reports the link.
    Beamform {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "blind")]
        method: BeamformingMethod,
        /// Full passes of the row/column search.
        #[arg(long, default_value_t = 4)]
        passes: usize,
    },
    /// Runs every sweep declared in a config file.
    Run { config: PathBuf },
}

/// Grid bounds; defaults depend on the sweep.
#[derive(Debug, Args)]
struct Grid<const KIND: u8> {
    #[arg(long, allow_hyphen_values = true)]
    start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    stop: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
}

impl<const KIND: u8> Grid<KIND> {
    fn spec(&self, method: BeamformingMethod) -> Result<SweepSpec> {
        let (variable, start, stop, step) = match KIND {
            0 => (SweepVariable::RxDistance, 0.5, 5.0, 0.5),
            1 => (SweepVariable::RxZenith, 0.0, 60.0, 10.0),
            2 => (SweepVariable::AmplifierCurrent, 0.01, 1.41, 0.1),
            _ => (SweepVariable::PatternAngle, -89.5, 89.5, 0.5),
        };
        Ok(SweepSpec::new(
            variable,
            self.start.unwrap_or(start),
            self.stop.unwrap_or(stop),
            self.step.unwrap_or(step),
            method,
        )?)
    }
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Take the scenario from a config file's [scenario]/[amplifier] sections.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// TX distance in meters.
    #[arg(long)]
    tx_distance: Option<f64>,
    /// TX zenith in degrees.
    #[arg(long)]
    tx_zenith: Option<f64>,
    /// RX distance in meters.
    #[arg(long)]
    rx_distance: Option<f64>,
    /// RX zenith in degrees.
    #[arg(long)]
    rx_zenith: Option<f64>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    /// Receiver noise variance in watts.
    #[arg(long)]
    noise_variance: Option<f64>,
}

impl ScenarioArgs {
    fn build(&self, seed: Option<u64>) -> Result<Scenario> {
        let mut s = match &self.scenario {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                parse_config(&text)
                    .with_context(|| path.display().to_string())?
                    .scenario
            }
            None => Scenario::prototype(),
        };
        if let (Some(seed), Some(j)) = (seed, s.jitter.as_mut()) {
            j.seed = seed;
        }
        let deg = |p: SphericalPose| (p.theta.to_degrees(), p.phi.to_degrees());
        if self.tx_distance.is_some() || self.tx_zenith.is_some() {
            let (theta, phi) = deg(s.tx_pose);
            s.tx_pose = SphericalPose::from_degrees(
                self.tx_distance.unwrap_or(s.tx_pose.r),
                self.tx_zenith.unwrap_or(theta),
                phi,
            )?;
        }
        if self.rx_distance.is_some() || self.rx_zenith.is_some() {
            let (theta, phi) = deg(s.rx_pose);
            s.rx_pose = SphericalPose::from_degrees(
                self.rx_distance.unwrap_or(s.rx_pose.r),
                self.rx_zenith.unwrap_or(theta),
                phi,
            )?;
        }
        if self.rows.is_some() || self.cols.is_some() {
            let old = s.layout.len();
            s.layout = ArrayLayout::new(
                self.rows.unwrap_or(s.layout.n_rows),
                self.cols.unwrap_or(s.layout.n_cols),
                s.layout.pitch_x,
                s.layout.pitch_y,
            )?;
            // keep the array-level calibration, spread over the new unit count
            let n = old as f64;
            let array: Vec<(f64, f64)> = s
                .amplifier
                .calibration
                .iter()
                .map(|&(i, g)| (i * n, g))
                .collect();
            s.amplifier = AmplifierModel::from_array_calibration(
                &array,
                s.layout.len(),
                s.amplifier.max_current,
            )?;
        }
        if let Some(v) = self.noise_variance {
            s.noise_variance = v;
        }
        s.validate()?;
        Ok(s)
    }
}

fn emit(out_dir: Option<&Path>, file: &str, body: &str) -> Result<()> {
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(file);
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn emit_sweep(out_dir: Option<&Path>, name: &str, result: &SweepResult) -> Result<()> {
    emit(out_dir, &format!("{name}.csv"), &result.to_csv())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let settings = SearchSettings {
        seed: cli.seed.unwrap_or(0),
        ..SearchSettings::default()
    };
    let out = cli.out_dir.as_deref();
    match &cli.command {
        Command::SweepDistance {
            grid,
            scenario,
            method,
        } => {
            let r = distance_sweep(&scenario.build(cli.seed)?, &grid.spec(*method)?, &settings)?;
            emit_sweep(out, "sweep-distance", &r)
        }
        Command::SweepAngle {
            grid,
            scenario,
            method,
        } => {
            let r = angle_sweep(&scenario.build(cli.seed)?, &grid.spec(*method)?, &settings)?;
            emit_sweep(out, "sweep-angle", &r)
        }
        Command::SweepGain {
            grid,
            scenario,
            method,
        } => {
            let spec = grid.spec(*method)?;
            let r = gain_sweep(&scenario.build(cli.seed)?, &spec.grid(), *method, &settings)?;
            emit_sweep(out, "sweep-gain", &r)
        }
        Command::Pattern {
            steering,
            grid,
            scenario,
            method,
        } => {
            let p = radiation_pattern(
                &scenario.build(cli.seed)?,
                *steering,
                &grid.spec(*method)?,
                *method,
                &settings,
            )?;
            eprintln!(
                "peak {:.1} deg, {:.3} dBm, HPBW {:.2} deg, PSLR {}",
                p.peak_angle_deg,
                p.peak_power_dbm,
                p.hpbw_deg,
                p.peak_to_sidelobe_db
                    .map(|v| format!("{v:.2} dB"))
                    .unwrap_or_else(|| "n/a".to_string())
            );
            emit(out, "pattern.csv", &p.to_csv())
        }
        Command::Beamform {
            scenario,
            method,
            passes,
        } => {
            if *passes == 0 && *method == BeamformingMethod::Blind {
                bail!("--passes must be at least 1 for blind search");
            }
            let settings = SearchSettings {
                passes: *passes,
                ..settings
            };
            let report = beamform_report(&scenario.build(cli.seed)?, *method, &settings)?;
            emit(out, "beamform.json", &report.to_json())
        }
        Command::Run { config } => {
            let options = RunOptions {
                out_dir: cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
                seed: cli.seed,
            };
            let summary =
                run_config(config, &options).with_context(|| config.display().to_string())?;
            for s in &summary.sweeps {
                println!(
                    "{}: {} rows -> {}",
                    s.name,
                    s.rows,
                    options.out_dir.join(&s.file).display()
                );
            }
            println!(
                "summary -> {}",
                options.out_dir.join("summary.json").display()
            );
            Ok(())
        }
    }
}

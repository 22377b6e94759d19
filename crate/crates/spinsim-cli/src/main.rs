//! Command-line driver: runs the simulated experiments and writes
//! deterministic, checksummed artifacts (CSV plot data + JSON results).
//!
//! Exit codes: 0 conclusive, 1 usage/config error, 2 physics-inconclusive
//! (failed classification or fit).

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use spinsim::config::SimConfig;
use spinsim::experiment::{
    classify, dj_program, prepare_inputs, run_pipeline, temporal_average, ExperimentConfig,
    InputMode,
};
use spinsim::linalg::CMatrix;
use spinsim::noise::{
    calibrate_inhomogeneity, cpmg, ensemble_run, fit_envelope_time_constant, inversion_recovery,
};
use spinsim::pulse::parse_for_system;
use spinsim::readout::{
    line_integrals, spectrum, synth_fid, tomography, tomography_error,
    tomography_measurements_noisy, tomography_reconstruct, ReadoutPulse, Spectrum,
};
use spinsim::spin::DensityMatrix;
use spinsim::{Oracle, SpinSimError};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "spinsim",
    version,
    about = "Two-spin NMR quantum computer simulator"
)]
struct Cli {
    /// Configuration JSON; falls back to $SPINSIM_CONFIG, then defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// RNG seed; required whenever noise is enabled.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Enable the noise model (RF inhomogeneity, relaxation, receiver noise).
    #[arg(long, global = true, overrides_with = "no_noise")]
    noise: bool,

    /// Disable the noise model (the default).
    #[arg(long, global = true)]
    no_noise: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the algorithm end to end and classify the oracle.
    RunDj {
        /// Oracle preset: f1, f2, f3 or f4.
        #[arg(long)]
        oracle: String,
        /// Input state: pure, thermal or temporal.
        #[arg(long, default_value = "temporal")]
        input: String,
    },
    /// Reconstruct the final deviation density matrix from 9 simulated
    /// readout experiments.
    Tomography {
        #[arg(long)]
        oracle: String,
        #[arg(long, default_value = "temporal")]
        input: String,
    },
    /// Fit RF-envelope, T1 and T2 back out of simulated calibration runs.
    Calibrate,
    /// Emit the spectrum of a finished run without classifying it.
    Spectrum {
        #[arg(long)]
        oracle: String,
        #[arg(long, default_value = "thermal")]
        input: String,
        /// Detected spin label.
        #[arg(long, default_value = "A")]
        detect: String,
    },
    /// Parse pulse-sequence text and dump the IR as JSON to stdout.
    Parse {
        /// Program text; use --file to read from a file instead.
        program: Option<String>,
        #[arg(long, conflicts_with = "program")]
        file: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<SpinSimError> for Failure {
    fn from(e: SpinSimError) -> Self {
        let code = match e {
            SpinSimError::Inconclusive { .. } | SpinSimError::FitFailure(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

/// Collects artifacts, writes each atomically, and records checksums.
struct ArtifactSet {
    dir: PathBuf,
    checksums: BTreeMap<String, String>,
}

impl ArtifactSet {
    fn new(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            checksums: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let tmp = self.dir.join(format!(".{name}.tmp"));
        std::fs::write(&tmp, bytes)?;
        std::fs::rename(&tmp, self.dir.join(name))?;
        self.checksums
            .insert(name.to_string(), hex(&Sha256::digest(bytes)));
        Ok(())
    }

    fn finish(
        self,
        command: &str,
        config_path: Option<&Path>,
        seed: Option<u64>,
    ) -> Result<(), Failure> {
        let manifest = serde_json::json!({
            "command": command,
            "config": config_path.map(|p| p.display().to_string()),
            "seed": seed,
            "artifacts": self.checksums,
        });
        let bytes = pretty(&manifest);
        let tmp = self.dir.join(".manifest.json.tmp");
        std::fs::write(&tmp, &bytes)?;
        std::fs::rename(&tmp, self.dir.join("manifest.json"))?;
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn pretty(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(cli: &Cli) -> Result<(SimConfig, Option<PathBuf>), Failure> {
    let path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os("SPINSIM_CONFIG").map(PathBuf::from));
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", p.display())))?;
            Ok((SimConfig::from_json(&text)?, Some(p)))
        }
        None => Ok((SimConfig::default(), None)),
    }
}

fn parse_oracle(name: &str) -> Result<Oracle, Failure> {
    Oracle::from_name(name)
        .ok_or_else(|| Failure::usage(format!("unknown oracle `{name}` (expected f1..f4)")))
}

fn parse_input(name: &str) -> Result<InputMode, Failure> {
    InputMode::from_name(name).ok_or_else(|| {
        Failure::usage(format!(
            "unknown input mode `{name}` (expected pure, thermal or temporal)"
        ))
    })
}

fn noise_enabled(cli: &Cli) -> Result<bool, Failure> {
    if cli.noise && cli.seed.is_none() {
        return Err(Failure::usage(
            "--noise requires --seed: noisy runs must be reproducible",
        ));
    }
    Ok(cli.noise)
}

/// Run the experiment per config and return the pre-readout state.
fn final_state(
    sim: &SimConfig,
    exp: &ExperimentConfig<f64>,
) -> Result<DensityMatrix<f64>, Failure> {
    if exp.noise_enabled {
        Ok(ensemble_run(exp, &sim.noise_settings()?)?)
    } else {
        let program = dj_program::<f64>(exp.oracle);
        let inputs = prepare_inputs(exp)?;
        let mut outputs = Vec::with_capacity(inputs.len());
        for rho0 in &inputs {
            outputs.push(run_pipeline(&exp.system, &program, rho0, 1.0, None)?);
        }
        if outputs.len() == 3 {
            let arr: [DensityMatrix<f64>; 3] =
                [outputs[0].clone(), outputs[1].clone(), outputs[2].clone()];
            Ok(temporal_average(&arr)?.2)
        } else {
            Ok(outputs.pop().unwrap())
        }
    }
}

fn synth_spectrum(
    sim: &SimConfig,
    exp: &ExperimentConfig<f64>,
    state: &DensityMatrix<f64>,
    detect: &str,
    seed: Option<u64>,
) -> Result<Spectrum<f64>, Failure> {
    let acq = sim.acquisition::<f64>(detect, exp.noise_enabled);
    let relax_params = if exp.noise_enabled {
        Some(sim.noise_settings::<f64>()?.relax)
    } else {
        None
    };
    let fid = if exp.noise_enabled {
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed.ok_or_else(|| Failure::usage("noise requires a seed"))?,
        );
        synth_fid(
            &exp.system,
            state,
            detect,
            ReadoutPulse::X,
            &acq,
            relax_params.as_ref(),
            Some(&mut rng),
        )?
    } else {
        synth_fid::<f64, ChaCha8Rng>(
            &exp.system,
            state,
            detect,
            ReadoutPulse::X,
            &acq,
            None,
            None,
        )?
    };
    Ok(spectrum(&fid, sim.acquisition.line_broadening_hz)?)
}

fn spectrum_csv(spec: &Spectrum<f64>) -> Vec<u8> {
    let mut out = String::from("freq_hz,real,imag\n");
    for (f, v) in spec.freq_hz.iter().zip(&spec.values) {
        out.push_str(&format!("{},{},{}\n", f, v.re, v.im));
    }
    out.into_bytes()
}

fn matrix_json(m: &CMatrix<f64>) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.dim())
        .map(|r| (0..m.dim()).map(|c| [m.get(r, c).re, m.get(r, c).im]).collect())
        .collect();
    serde_json::json!(rows)
}

const BASIS_LABELS: [&str; 16] = [
    "II", "IX", "IY", "IZ", "XI", "XX", "XY", "XZ", "YI", "YX", "YY", "YZ", "ZI", "ZX", "ZY", "ZZ",
];

fn run(cli: &Cli) -> Result<(), Failure> {
    let (sim, config_path) = load_config(cli)?;
    let noise = noise_enabled(cli)?;
    match &cli.command {
        Command::RunDj { oracle, input } => {
            let oracle = parse_oracle(oracle)?;
            let input_mode = parse_input(input)?;
            let exp = sim.experiment::<f64>(oracle, input_mode, noise)?;
            let state = final_state(&sim, &exp)?;
            let spec = synth_spectrum(&sim, &exp, &state, &exp.system.spin(0).label, cli.seed)?;
            let j = exp.system.primary_j().unwrap_or(0.0);
            let (low, high) = line_integrals(&spec, j, sim.acquisition.window_bins)?;
            let verdict = classify(&state);
            let verdict_name = match &verdict {
                Ok(v) => v.name(),
                Err(SpinSimError::Inconclusive { .. }) => "inconclusive",
                Err(e) => return Err(Failure::from(classify_err(e))),
            };
            let mut artifacts = ArtifactSet::new(&cli.out)?;
            artifacts.write("spectrum.csv", &spectrum_csv(&spec))?;
            artifacts.write(
                "verdict.json",
                &pretty(&serde_json::json!({
                    "oracle": oracle.name(),
                    "verdict": verdict_name,
                })),
            )?;
            let summary = format!(
                "oracle {} ({}), input {}, noise {}\n\
                 low line (-J/2): {:+.6} {:+.6}i\n\
                 high line (+J/2): {:+.6} {:+.6}i\n\
                 verdict: {}\n",
                oracle.name(),
                if oracle.is_constant() { "constant" } else { "balanced" },
                input,
                if noise { "on" } else { "off" },
                low.re,
                low.im,
                high.re,
                high.im,
                verdict_name,
            );
            artifacts.write("summary.txt", summary.as_bytes())?;
            artifacts.finish("run-dj", config_path.as_deref(), cli.seed)?;
            println!("{}: {}", oracle.name(), verdict_name);
            match verdict {
                Ok(_) => Ok(()),
                Err(e) => Err(Failure::from(e)),
            }
        }
        Command::Tomography { oracle, input } => {
            let oracle = parse_oracle(oracle)?;
            let input_mode = parse_input(input)?;
            let exp = sim.experiment::<f64>(oracle, input_mode, noise)?;
            let state = final_state(&sim, &exp)?;
            let rec = if noise {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    cli.seed.ok_or_else(|| Failure::usage("noise requires a seed"))?,
                );
                let snr = [
                    sim.noise.snr.get(&exp.system.spin(0).label).map(|&s| s),
                    sim.noise.snr.get(&exp.system.spin(1).label).map(|&s| s),
                ];
                let m = tomography_measurements_noisy(
                    &exp.system,
                    &state.deviation_part(),
                    snr,
                    &mut rng,
                )?;
                tomography_reconstruct(&exp.system, &m)?
            } else {
                tomography(&exp.system, &state)?
            };
            // theoretical reference: the same run with noise disabled
            let ideal_exp = sim.experiment::<f64>(oracle, input_mode, false)?;
            let ideal = final_state(&sim, &ideal_exp)?;
            let ideal_rec = tomography(&ideal_exp.system, &ideal)?;
            let (amplitude, epsilon) = tomography_error(&rec.deviation, &ideal_rec.deviation)?;
            let mut bars = String::from("basis,experimental,theoretical\n");
            for (i, label) in BASIS_LABELS.iter().enumerate() {
                let (e, t) = if i == 0 {
                    (0.0, 0.0)
                } else {
                    (rec.coefficients[i - 1], ideal_rec.coefficients[i - 1])
                };
                bars.push_str(&format!("{label},{e},{t}\n"));
            }
            let mut artifacts = ArtifactSet::new(&cli.out)?;
            artifacts.write(
                "tomography.json",
                &pretty(&serde_json::json!({
                    "oracle": oracle.name(),
                    "input": input,
                    "noise": noise,
                    "amplitude": amplitude,
                    "epsilon": epsilon,
                    "experimental": matrix_json(&rec.deviation),
                    "theoretical": matrix_json(&ideal_rec.deviation),
                })),
            )?;
            artifacts.write("tomography_bars.csv", bars.as_bytes())?;
            artifacts.finish("tomography", config_path.as_deref(), cli.seed)?;
            println!("epsilon {epsilon:.4}");
            Ok(())
        }
        Command::Calibrate => {
            let system = sim.system::<f64>()?;
            let pulse_width = sim.noise.pulse_width_s;
            let pulse_power = std::f64::consts::FRAC_PI_2 / pulse_width;
            let target = sim.noise.envelope_time_constant_s;
            let model = calibrate_inhomogeneity(target, pulse_power, sim.noise.ensemble_size)?;
            let envelope = fit_envelope_time_constant(&model, pulse_power, 16)?;
            let mut spins = Vec::new();
            for s in system.spins() {
                let delays: Vec<f64> = (0..10)
                    .map(|i| 0.1 * s.t1_s + i as f64 * 0.35 * s.t1_s)
                    .collect();
                let t1_fit = inversion_recovery(&system, &s.label, &delays)?;
                let spacing = s.t2_s / 100.0;
                let counts: Vec<usize> = (1..=8).map(|k| k * 12).collect();
                let t2_fit = cpmg(&system, &s.label, spacing, &counts)?;
                spins.push(serde_json::json!({
                    "label": s.label,
                    "t1_config_s": s.t1_s,
                    "t1_fit_s": t1_fit,
                    "t2_config_s": s.t2_s,
                    "t2_fit_s": t2_fit,
                }));
            }
            let mut artifacts = ArtifactSet::new(&cli.out)?;
            artifacts.write(
                "calibration.json",
                &pretty(&serde_json::json!({
                    "envelope_target_s": target,
                    "envelope_fit_s": envelope,
                    "spins": spins,
                })),
            )?;
            artifacts.finish("calibrate", config_path.as_deref(), cli.seed)?;
            println!("envelope {envelope:.3e} s");
            Ok(())
        }
        Command::Spectrum {
            oracle,
            input,
            detect,
        } => {
            let oracle = parse_oracle(oracle)?;
            let input_mode = parse_input(input)?;
            let exp = sim.experiment::<f64>(oracle, input_mode, noise)?;
            exp.system.index_of(detect)?;
            let state = final_state(&sim, &exp)?;
            let spec = synth_spectrum(&sim, &exp, &state, detect, cli.seed)?;
            let mut artifacts = ArtifactSet::new(&cli.out)?;
            artifacts.write("spectrum.csv", &spectrum_csv(&spec))?;
            artifacts.finish("spectrum", config_path.as_deref(), cli.seed)?;
            Ok(())
        }
        Command::Parse { program, file } => {
            let text = match (program, file) {
                (Some(t), None) => t.clone(),
                (None, Some(p)) => std::fs::read_to_string(p)?,
                _ => return Err(Failure::usage("provide program text or --file PATH")),
            };
            let system = sim.system::<f64>()?;
            let ir = parse_for_system::<f64>(&text, &system)?;
            let mut s = serde_json::to_string_pretty(&ir).expect("IR is serializable");
            s.push('\n');
            println!("{s}");
            Ok(())
        }
    }
}

// classify() errors other than Inconclusive indicate a malformed state,
// which is a usage-level failure
fn classify_err(e: &SpinSimError) -> SpinSimError {
    SpinSimError::InvalidMatrix(e.to_string())
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use complex_chsh::harness::{
    ideal_data, load_run_config, read_counts_file, render_calibration_matrix,
    render_probability_matrix, run_to_dir, score_counts, CalibrationSource, Mitigation,
    NoiseSource, RunConfig,
};
use complex_chsh::mitigate::{exact_calibration_matrix, measure_calibration_matrix};
use complex_chsh::{Error, Result};

#[derive(Parser)]
#[command(
    name = "complex-chsh",
    version,
    about = "Simulate and score the real-vs-complex quantum theory test"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment grid and write score, count and probability files.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        repeats: Option<u32>,
        #[arg(long)]
        sessions: Option<u32>,
        /// none | inversion | nnls | all
        #[arg(long)]
        mitigation: Option<String>,
        /// Noise file, or `none`.
        #[arg(long)]
        noise: Option<String>,
        /// exact | measured:<shots>
        #[arg(long)]
        calibration_matrix: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the measured calibration matrix and print it as CSV.
    Calibrate {
        #[arg(long, default_value = "none")]
        noise: String,
        #[arg(long, default_value_t = 32_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the exact matrix of the noise model instead of sampling it.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rescore an `xz,abc,count` file.
    Score {
        counts: PathBuf,
        /// Noise file whose readout model defines the calibration matrix.
        #[arg(long, default_value = "none")]
        noise: String,
        #[arg(long, default_value = "all")]
        mitigation: String,
    },
    /// Emit the ideal 16×12 probability matrix.
    Ideal {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            shots,
            repeats,
            sessions,
            mitigation,
            noise,
            calibration_matrix,
            out,
        } => {
            let mut cfg = match &config {
                Some(p) => load_run_config(p)?,
                None => RunConfig::default(),
            };
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = shots {
                cfg.shots = v;
            }
            if let Some(v) = repeats {
                cfg.repeats = v;
            }
            if let Some(v) = sessions {
                cfg.sessions = v;
            }
            if let Some(v) = mitigation {
                cfg.mitigation = v.parse()?;
            }
            if let Some(v) = noise {
                cfg.noise = NoiseSource::parse_arg(&v);
            }
            if let Some(v) = calibration_matrix {
                cfg.calibration = v.parse::<CalibrationSource>()?;
            }
            if let Some(v) = out {
                cfg.out = Some(v);
            }
            let dir = cfg
                .out
                .clone()
                .ok_or_else(|| Error::InvalidArgument("no output directory (use --out)".into()))?;
            let result = run_to_dir(&cfg, &dir)?;
            for (m, a) in &result.aggregates {
                println!("{m}: mean {:.6} sigma {:.6}", a.mean, a.sigma);
            }
            println!("wrote {}", dir.display());
            Ok(())
        }
        Command::Calibrate {
            noise,
            shots,
            seed,
            exact,
            out,
        } => {
            let model = NoiseSource::parse_arg(&noise).resolve()?;
            let c = if exact {
                exact_calibration_matrix(&model.readout)?
            } else {
                measure_calibration_matrix(&model, shots, seed)?
            };
            emit(&render_calibration_matrix(&c), out.as_deref())
        }
        Command::Score {
            counts,
            noise,
            mitigation,
        } => {
            let counts = read_counts_file(&counts)?;
            let model = NoiseSource::parse_arg(&noise).resolve()?;
            let c = exact_calibration_matrix(&model.readout)?;
            let methods = mitigation.parse::<Mitigation>()?.methods();
            let (reports, _) = score_counts(&counts, &methods, Some(&c))?;
            println!("method,gamma");
            for r in reports {
                println!("{},{:.6}", r.method, r.gamma);
            }
            Ok(())
        }
        Command::Ideal { out } => emit(&render_probability_matrix(&ideal_data())?, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

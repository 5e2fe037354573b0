use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nvmech::units::mhz_to_angular;
use nvmech_cli::config::{FitModel, FitQubit, WindowName};
use nvmech_cli::io::{read_trace, spectrum_csv};
use nvmech_cli::run::{fit_json, fit_report, peaks_json, ramsey_kind, spectrum_options};
use nvmech_cli::{catalog, load, output_dir, parse, run_source, write_outputs, CliError, CliResult};

#[derive(Parser)]
#[command(name = "nvmech", version, about = "NV spin-ensemble simulations, fits and spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file, a bundled id, or a manifest.
    Run {
        config: String,
        /// Output directory (default: $NVMECH_OUT_DIR or `.`).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads (default: available cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the number of noise draws.
        #[arg(long)]
        shots: Option<usize>,
    },
    /// List bundled configs.
    List,
    /// Print a bundled config.
    Show { id: String },
    /// Check a config without running it.
    Validate { config: String },
    /// Fit a trace CSV.
    Fit {
        trace: PathBuf,
        #[arg(long, value_enum)]
        model: FitModel,
        #[arg(long, value_enum, default_value = "sq")]
        qubit: FitQubit,
        #[arg(long, default_value_t = 0.0)]
        omega_rot_mhz: f64,
        /// Fixed hyperfine constant (default −2.166 MHz).
        #[arg(long, allow_hyphen_values = true)]
        a_par_mhz: Option<f64>,
        /// Write JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Power spectrum of a trace CSV.
    Spectrum {
        trace: PathBuf,
        #[arg(long, value_enum, default_value = "hann")]
        window: WindowName,
        #[arg(long, default_value_t = 8)]
        zero_pad: usize,
        #[arg(long, default_value_t = 5.0)]
        peak_threshold: f64,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            config,
            out_dir,
            workers,
            shots,
        } => {
            let src = load(&config)?;
            let workers = workers.unwrap_or_else(nvmech_cli::default_workers);
            let (cfg, out, manifest) = run_source(&src, workers, shots)?;
            for p in write_outputs(&output_dir(out_dir), &cfg, &out, &manifest)? {
                println!("{}", p.display());
            }
        }
        Command::List => {
            for e in catalog::list()? {
                println!("{:<8} {:<16} {:<10} {}", e.id, e.kind, e.figure, e.description);
            }
        }
        Command::Show { id } => {
            let e = catalog::find(&id).ok_or_else(|| CliError::Io(format!("{id}: no bundled config")))?;
            print!("{}", e.text);
        }
        Command::Validate { config } => {
            let src = load(&config)?;
            let cfg = parse(&src.text)?;
            cfg.check_values()?;
            println!("ok: {} ({})", src.label, cfg.kind.as_str());
        }
        Command::Fit {
            trace,
            model,
            qubit,
            omega_rot_mhz,
            a_par_mhz,
            out,
        } => {
            let data = read_trace(&trace)?;
            let a_par = a_par_mhz
                .map(mhz_to_angular)
                .unwrap_or_else(|| nvmech::hamiltonian::SpinParameters::<f64>::nv().a_par);
            let report = fit_report(&data, ramsey_kind(model, qubit), a_par, mhz_to_angular(omega_rot_mhz))?;
            emit(out, &fit_json(&report)?)?;
        }
        Command::Spectrum {
            trace,
            window,
            zero_pad,
            peak_threshold,
            out,
        } => {
            let data = read_trace(&trace)?;
            let s = nvmech::analysis::power_spectrum(&data, &spectrum_options(window, zero_pad, peak_threshold)?)?;
            emit(out, &spectrum_csv(&s)?)?;
            let peaks = peaks_json(&s);
            eprintln!("{peaks}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nvmech: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

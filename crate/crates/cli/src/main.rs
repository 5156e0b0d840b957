use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slhnet::linear::PowerUnit;
use slhnet::oracle::DEFAULT_MAX_PHOTONS;
use slhnet_cli::commands::{self, FitArgs, ModelArgs, OracleArgs, Output, SpectrumArgs};
use slhnet_cli::CliError;

/// Compose SLH networks, compute their spectra, fit them to data and check
/// integrated-photonics design rules.
///
/// Exit status: 0 on success, 1 when the numerics fail or a cross-check does
/// not pass, 2 when the input is unusable.
#[derive(Parser)]
#[command(name = "slhnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelOpts {
    /// Netlist file; the shipped coupled-cavity netlist when omitted.
    netlist: Option<PathBuf>,
    /// Override a netlist parameter (repeatable). Values use netlist
    /// literal syntax, e.g. `alpha=0.5-1i`.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
    /// Key=value parameter file applied before any --set.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
    /// Effective index for wavelength conversion. Also sets the netlist's
    /// `n_eff` parameter if it declares one.
    #[arg(long = "n-eff", value_name = "X")]
    n_eff: Option<f64>,
}

impl From<ModelOpts> for ModelArgs {
    fn from(o: ModelOpts) -> Self {
        ModelArgs {
            netlist: o.netlist,
            params: o.params,
            set: o.set,
            n_eff: o.n_eff,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compile a netlist and print its canonical SLH triple.
    Compose {
        #[command(flatten)]
        model: ModelOpts,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Output-power spectrum at one port, as CSV.
    Spectrum {
        #[command(flatten)]
        model: ModelOpts,
        /// Probe wavelengths, start_nm:stop_nm:count.
        #[arg(long, default_value = commands::DEFAULT_GRID)]
        grid: String,
        /// Monitored output port, counted from 1.
        #[arg(long, default_value_t = 1)]
        port: usize,
        /// Report linear power instead of dB.
        #[arg(long)]
        linear: bool,
        /// Cross-check every point against the master-equation oracle.
        #[arg(long)]
        oracle: bool,
        /// Photon budget for the oracle cross-check.
        #[arg(long = "max-photons", default_value_t = DEFAULT_MAX_PHOTONS)]
        max_photons: f64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Fit netlist parameters to a measured spectrum.
    Fit {
        /// Spectrum CSV with `wavelength_nm` and `power_db` columns.
        data: PathBuf,
        /// Netlist file; the shipped coupled-cavity netlist when omitted.
        #[arg(long, value_name = "FILE")]
        netlist: Option<PathBuf>,
        #[arg(long = "set", value_name = "NAME=VALUE")]
        set: Vec<String>,
        /// Initial guess as a key=value parameter file.
        #[arg(long, value_name = "FILE")]
        params: Option<PathBuf>,
        #[arg(long = "n-eff", value_name = "X")]
        n_eff: Option<f64>,
        /// Fit configuration: free parameters and annealing schedule.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        port: usize,
        /// Write the objective trace as CSV.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Evaluate the Kerr-nonlinearity design rules.
    Check {
        /// gamma_nl, lambda_m, power_w, length_m, q, ell_r_m, n_eff,
        /// criterion, or n2 with a_eff, and transmittance.
        #[arg(long = "set", value_name = "NAME=VALUE")]
        set: Vec<String>,
        #[arg(long, value_name = "FILE")]
        params: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Compare the linear model with the master-equation oracle.
    Oracle {
        #[command(flatten)]
        model: ModelOpts,
        #[arg(long, default_value = commands::DEFAULT_ORACLE_GRID)]
        grid: String,
        #[arg(long, default_value_t = 1)]
        port: usize,
        #[arg(long = "max-photons", default_value_t = DEFAULT_MAX_PHOTONS)]
        max_photons: f64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn run(cmd: Command) -> Result<(Output, Option<PathBuf>), CliError> {
    Ok(match cmd {
        Command::Compose { model, out } => (commands::compose(&model.into(), out.as_deref())?, out),
        Command::Spectrum {
            model,
            grid,
            port,
            linear,
            oracle,
            max_photons,
            out,
        } => {
            let args = SpectrumArgs {
                model: model.into(),
                grid,
                port,
                unit: if linear {
                    PowerUnit::Linear
                } else {
                    PowerUnit::Db
                },
                oracle,
                max_photons,
            };
            (commands::spectrum(&args, out.as_deref())?, out)
        }
        Command::Fit {
            data,
            netlist,
            set,
            params,
            n_eff,
            config,
            seed,
            port,
            trace,
            out,
        } => {
            let args = FitArgs {
                data,
                model: ModelArgs {
                    netlist,
                    params,
                    set,
                    n_eff,
                },
                config,
                seed,
                port,
                trace,
            };
            (commands::fit_cmd(&args, out.as_deref())?, out)
        }
        Command::Check { set, params, out } => (
            commands::check(params.as_deref(), &set, out.as_deref())?,
            out,
        ),
        Command::Oracle {
            model,
            grid,
            port,
            max_photons,
            out,
        } => {
            let args = OracleArgs {
                model: model.into(),
                grid,
                port,
                max_photons,
            };
            (commands::oracle_cmd(&args, out.as_deref())?, out)
        }
    })
}

fn write(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.kind.code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (output, out) = match run(cli.command) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let written = match &out {
        Some(p) => write(p, &output.text),
        None => {
            print!("{}", output.text);
            Ok(())
        }
    };
    if let Err(e) =
        written.and_then(|_| output.side_files.iter().try_for_each(|(p, t)| write(p, t)))
    {
        return fail(&e);
    }
    match &output.failure {
        Some(e) => fail(e),
        None => ExitCode::SUCCESS,
    }
}

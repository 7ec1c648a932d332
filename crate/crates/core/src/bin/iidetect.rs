use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ii_detect::experiment::{self, ExperimentConfig, InputSignal, Mode};
use ii_detect::numerics::Vector;
use ii_detect::{reactor, wire, AnomalyProfile, DetectorDesign, KeyDims, KeyGenParams, KeySet, NoiseMode, SystemModel};

#[derive(Parser)]
#[command(name = "iidetect", version, about = "Privacy-preserving remote chi-squared anomaly detection")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Design the standard detector and print L, P, Sigma, alpha as JSON.
    Design {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a secret key set and write it as a JSON keyfile.
    Keygen {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run plant, standard detector and encoded pipeline in lockstep.
    Simulate(SimArgs),
    /// Reproduce the reactor case study (trace, summary, designs).
    Casestudy {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        horizon: u64,
        #[arg(long, default_value = "casestudy")]
        out: PathBuf,
    },
    /// Monte Carlo false alarm rate of the standard detector over several seeds.
    Far {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 50_000)]
        horizon: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Replace the designed threshold.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Run the remote target detector server.
    Serve {
        #[arg(long, env = wire::ADDR_ENV, default_value = "127.0.0.1:7878")]
        addr: SocketAddr,
    },
    /// Run a simulation against a remote server.
    Client {
        #[arg(long, env = wire::ADDR_ENV)]
        addr: SocketAddr,
        #[command(flatten)]
        sim: SimCore,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Model JSON file, or `reactor` for the built-in case study.
    #[arg(long, default_value = "reactor")]
    model: String,
    #[arg(long, default_value_t = 0.1)]
    astar: f64,
}

#[derive(Args)]
struct KeyArgs {
    /// Encoded dims `nx,ny,nu,nr,nz,na`; defaults to one extra per plant signal.
    #[arg(long)]
    dims: Option<KeyDims>,
    #[arg(long, default_value_t = 0.1)]
    scale_small: f64,
    #[arg(long, default_value_t = 100.0)]
    scale_large: f64,
}

#[derive(Args)]
struct SimCore {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    key: KeyArgs,
    #[arg(long, default_value_t = 500)]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    fault_onset: Option<u64>,
    #[arg(long, default_value_t = reactor::FAULT_VALUE)]
    fault_value: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    core: SimCore,
    #[arg(long, value_enum, default_value_t = ModeArg::Local)]
    mode: ModeArg,
    /// Server for `--mode networked`; a local server is spawned when omitted.
    #[arg(long, env = wire::ADDR_ENV)]
    addr: Option<SocketAddr>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Local,
    Networked,
}

fn load_model(arg: &str) -> ii_detect::Result<SystemModel> {
    if arg == "reactor" {
        Ok(reactor::model())
    } else {
        SystemModel::load(arg)
    }
}

fn experiment_config(core: &SimCore, mode: Mode) -> ii_detect::Result<ExperimentConfig> {
    let model = load_model(&core.model.model)?;
    let fault = match core.fault_onset {
        Some(onset) => AnomalyProfile::Step {
            onset,
            value: Vector::from_element(model.ndelta(), core.fault_value),
        },
        None => AnomalyProfile::None,
    };
    let key_dims = core
        .key
        .dims
        .unwrap_or_else(|| KeyDims::padded(model.nx(), model.ny(), model.nu()));
    Ok(ExperimentConfig {
        false_alarm_rate: core.model.astar,
        horizon: core.horizon,
        seed: core.seed,
        fault,
        key_dims,
        keygen: KeyGenParams {
            scale_small: core.key.scale_small,
            scale_large: core.key.scale_large,
            ..KeyGenParams::default()
        },
        noise: NoiseMode::Stochastic,
        input: InputSignal::Reference,
        mode,
        model,
    })
}

fn run_sim(core: &SimCore, mode: Mode) -> ii_detect::Result<()> {
    let cfg = experiment_config(core, mode)?;
    let out = experiment::simulate(&cfg)?;
    if let Some(path) = &core.out {
        out.write_csv(path)?;
    }
    println!("{}", serde_json::to_string_pretty(&out.summary)?);
    Ok(())
}

fn emit(json: String, out: Option<&PathBuf>) -> ii_detect::Result<()> {
    if let Some(path) = out {
        std::fs::write(path, &json)?;
    }
    println!("{json}");
    Ok(())
}

fn run(cli: Cli) -> ii_detect::Result<()> {
    match cli.cmd {
        Cmd::Design { model, out } => {
            let design = DetectorDesign::new(&load_model(&model.model)?, model.astar)?;
            emit(design.to_json()?, out.as_ref())
        }
        Cmd::Keygen { model, key, seed, out } => {
            let m = load_model(&model.model)?;
            let dims = key.dims.unwrap_or_else(|| KeyDims::padded(m.nx(), m.ny(), m.nu()));
            let params = KeyGenParams {
                scale_small: key.scale_small,
                scale_large: key.scale_large,
                ..KeyGenParams::default()
            };
            let keys = KeySet::generate(dims, (m.nx(), m.ny(), m.nu()), seed, &params)?;
            keys.save(&out)?;
            eprintln!("wrote secret keyfile {} (never send it to the remote station)", out.display());
            Ok(())
        }
        Cmd::Simulate(args) => {
            let mode = match args.mode {
                ModeArg::Local => Mode::Local,
                ModeArg::Networked => Mode::Networked(args.addr),
            };
            run_sim(&args.core, mode)
        }
        Cmd::Casestudy { seed, horizon, out } => {
            let cs = experiment::case_study(seed, horizon, Mode::Local)?;
            cs.write_artifacts(&out)?;
            println!("{}", serde_json::to_string_pretty(&cs.run.summary)?);
            eprintln!(
                "y dim {} -> {}, alarm dim 1 -> {}; artifacts in {}",
                cs.run.design.ny,
                cs.run.config.ny(),
                cs.run.config.na(),
                out.display()
            );
            Ok(())
        }
        Cmd::Far {
            model,
            horizon,
            seed,
            seeds,
            alpha,
        } => {
            let m = load_model(&model.model)?;
            let seeds: Vec<u64> = (seed..seed + seeds).collect();
            let report = experiment::false_alarm_rate(&m, model.astar, horizon, &seeds, alpha)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Cmd::Serve { addr } => {
            eprintln!("serving on {addr}");
            wire::serve(addr)
        }
        Cmd::Client { addr, sim } => run_sim(&sim, Mode::Networked(Some(addr))),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ ii_detect::Error::Usage(_)) => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

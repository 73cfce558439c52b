use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use susy_band::cli::{self, Command};
use susy_band::config::{Construction, ExperimentConfig, ModelSpec};
use susy_band::error::SusyError;

#[derive(Parser)]
#[command(
    name = "susy-band",
    about = "SUSY partners of free-fermion/boson lattice models: spectra, locality profiles, invariants, entanglement duality",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the SUSY pair, export the spectrum and the duality report.
    Pair(RunArgs),
    /// Real-space supercharge decay profile along a lattice ray.
    Decay(RunArgs),
    /// Entanglement spectra, scaling curve, and the edge mode.
    Entangle(RunArgs),
    /// Fermion/boson restricted-spectrum duality per subsystem length.
    Duality(RunArgs),
    /// Lattice Chern number of the lower band (2D models).
    Chern(RunArgs),
    /// Winding number, parity, and mirror predicate (1D models).
    Winding(RunArgs),
    /// Number-conserving gauge transformations on both sides.
    Gauge(RunArgs),
    /// Classification table lookup.
    Classify {
        #[arg(long = "class")]
        class: String,
        #[arg(long)]
        dim: u8,
    },
    /// Many-body Fock-space verification on a tiny chain.
    Oracle(RunArgs),
    /// The full reproduction suite for the configured model.
    All(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model name: kitaev_chain or chiral_sc.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    /// Chain length for kitaev_chain.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<f64>,
    /// 2D grid, e.g. 400x400.
    #[arg(long)]
    grid: Option<String>,
    /// Ray direction, e.g. 1,1.
    #[arg(long)]
    ray: Option<String>,
    #[arg(long)]
    r_max: Option<usize>,
    /// Subsystem lengths, e.g. 4,8,12.
    #[arg(long)]
    lengths: Option<String>,
    /// Supercharge construction: closed_form, general, or bdi.
    #[arg(long)]
    construction: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    gap_floor: Option<f64>,
    #[arg(long)]
    ode_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_grid(text: &str) -> Result<(usize, usize), SusyError> {
    let parts: Vec<&str> = text.split('x').collect();
    if parts.len() != 2 {
        return Err(SusyError::ConfigInvalid(format!(
            "grid must look like 64x64, got {text}"
        )));
    }
    let nx = parts[0]
        .parse()
        .map_err(|_| SusyError::ConfigInvalid("bad grid".into()))?;
    let ny = parts[1]
        .parse()
        .map_err(|_| SusyError::ConfigInvalid("bad grid".into()))?;
    Ok((nx, ny))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, SusyError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| SusyError::ConfigInvalid(format!("bad {what}: {s}")))
        })
        .collect()
}

fn assemble_config(args: &RunArgs) -> Result<ExperimentConfig, SusyError> {
    let mut cfg = if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| {
            SusyError::ConfigInvalid(format!("cannot read {}: {e}", path.display()))
        })?;
        ExperimentConfig::from_json(&text)?
    } else {
        let model = match args.model.as_deref() {
            Some("kitaev_chain") => ModelSpec::KitaevChain {
                mu: args.mu.unwrap_or(1.0),
                t: args.t.unwrap_or(0.7),
                n: args.n.unwrap_or(60),
            },
            Some("chiral_sc") => {
                let (nx, ny) = match &args.grid {
                    Some(g) => parse_grid(g)?,
                    None => (64, 64),
                };
                ModelSpec::ChiralSc {
                    m: args.m.unwrap_or(1.0),
                    nx,
                    ny,
                }
            }
            Some(other) => {
                return Err(SusyError::ConfigInvalid(format!("unknown model {other}")));
            }
            None => {
                return Err(SusyError::ConfigInvalid(
                    "either --config or --model is required".into(),
                ));
            }
        };
        ExperimentConfig::from_model(model)
    };
    // Flag overrides.
    if args.config.is_some() {
        if let Some(model) = &args.model {
            match (model.as_str(), &mut cfg.model) {
                ("kitaev_chain", ModelSpec::KitaevChain { .. }) => {}
                ("chiral_sc", ModelSpec::ChiralSc { .. }) => {}
                _ => {
                    return Err(SusyError::ConfigInvalid(
                        "--model conflicts with the configured model".into(),
                    ))
                }
            }
        }
        match &mut cfg.model {
            ModelSpec::KitaevChain { mu, t, n } => {
                if let Some(v) = args.mu {
                    *mu = v;
                }
                if let Some(v) = args.t {
                    *t = v;
                }
                if let Some(v) = args.n {
                    *n = v;
                }
            }
            ModelSpec::ChiralSc { m, nx, ny } => {
                if let Some(v) = args.m {
                    *m = v;
                }
                if let Some(g) = &args.grid {
                    let (a, b) = parse_grid(g)?;
                    *nx = a;
                    *ny = b;
                }
            }
        }
    }
    if let Some(ray) = &args.ray {
        cfg.ray = parse_list(ray, "ray component")?;
    }
    if let Some(r) = args.r_max {
        cfg.r_max = r;
    }
    if let Some(lengths) = &args.lengths {
        cfg.subsystem_lengths = parse_list(lengths, "subsystem length")?;
    }
    if let Some(c) = &args.construction {
        cfg.construction = match c.as_str() {
            "closed_form" => Construction::ClosedForm,
            "general" => Construction::General,
            "bdi" => Construction::Bdi,
            other => {
                return Err(SusyError::ConfigInvalid(format!(
                    "unknown construction {other}"
                )))
            }
        };
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(g) = args.gap_floor {
        cfg.gap_floor = g;
    }
    if let Some(o) = args.ode_tol {
        cfg.ode_tol = o;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), SusyError> {
    if let Ok(threads) = std::env::var("SUSYBAND_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global()
                .ok();
        }
    }
    let (cmd, args) = match cli.cmd {
        Cmd::Pair(a) => (Command::Pair, a),
        Cmd::Decay(a) => (Command::Decay, a),
        Cmd::Entangle(a) => (Command::Entangle, a),
        Cmd::Duality(a) => (Command::Duality, a),
        Cmd::Chern(a) => (Command::Chern, a),
        Cmd::Winding(a) => (Command::Winding, a),
        Cmd::Gauge(a) => (Command::Gauge, a),
        Cmd::Oracle(a) => (Command::Oracle, a),
        Cmd::All(a) => (Command::All, a),
        Cmd::Classify { class, dim } => {
            return cli::run(&Command::Classify { class, dim }, &dummy_config()).map(|_| ());
        }
    };
    let cfg = assemble_config(&args)?;
    let files = cli::run(&cmd, &cfg)?;
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn dummy_config() -> ExperimentConfig {
    ExperimentConfig::from_model(ModelSpec::KitaevChain {
        mu: 1.0,
        t: 0.7,
        n: 4,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}

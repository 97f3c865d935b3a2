//! Command-line grammar. Every flag is optional so that values from
//! `--config` survive unless overridden.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Command, MeshSource, RunConfig};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "tmx", version, about = "Perturbed Trudinger-Moser laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Build or load a mesh and write it in the text format.
    Mesh(Common),
    /// Robin function, harmonic center and concentration level.
    Potential(Common),
    /// Multi-start ascent with blow-up diagnostics.
    Maximize(Common),
    /// Moser test functions and the lower bound they predict.
    Bubble {
        #[command(flatten)]
        common: Common,
        /// Exponents k of ε = e^{-k}, comma separated.
        #[arg(long, value_name = "K,K,...", conflicts_with = "eps")]
        ks: Option<String>,
        /// Values of ε, comma separated.
        #[arg(long, value_name = "E,E,...")]
        eps: Option<String>,
        /// Bubble center; defaults to the harmonic center.
        #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
        center: Option<String>,
    },
    /// Shoot the radial Euler-Lagrange equation.
    Radial {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gamma: Option<f64>,
        /// Energy scale, or `auto` for γ²(S^δ − |Ω|).
        #[arg(long = "E", value_name = "E|auto")]
        energy: Option<String>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// J_best along a λ-grid.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "A,B,...")]
        lambdas: Option<String>,
    },
    /// Bisection for the existence threshold.
    Threshold {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "LO,HI")]
        bracket: Option<String>,
        /// Final bracket width.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run the identity checks.
    Verify(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// `disk:<level>`, `rect:<w>x<h>:<nx>x<ny>` or a mesh file.
    #[arg(long, value_name = "SPEC")]
    mesh: Option<String>,
    /// Mesh file; conflicts with --mesh.
    #[arg(long, value_name = "FILE", conflicts_with = "mesh")]
    mesh_file: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// WITH_MINUS_ONE or WITHOUT_MINUS_ONE.
    #[arg(long)]
    variant: Option<String>,
    /// Euler-Lagrange residual target.
    #[arg(long)]
    el_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Seed spec such as `bubble:6,8,10;eigen;random:3`.
    #[arg(long)]
    seeds: Option<String>,
    /// `harmonic` or `stride:<k>`.
    #[arg(long)]
    robin: Option<String>,
    /// Per-vertex Robin solves on every k-th interior vertex.
    #[arg(long, value_name = "K", conflicts_with = "robin")]
    stride: Option<usize>,
    /// Number of meshes in refinement studies.
    #[arg(long)]
    levels: Option<usize>,
    /// Attainment margin, or `auto`.
    #[arg(long)]
    margin_min: Option<String>,
    #[arg(long)]
    rng_seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn usage(e: clap::Error) -> CliError {
    use clap::error::ErrorKind;
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Help(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    }
}

/// Resolves argv into a config: defaults, then the `--config` file, then
/// flags.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(usage)?;
    let (command, common, extra): (Command, Common, Vec<(&str, String)>) = match cli.command {
        Sub::Mesh(c) => (Command::Mesh, c, vec![]),
        Sub::Potential(c) => (Command::Potential, c, vec![]),
        Sub::Maximize(c) => (Command::Maximize, c, vec![]),
        Sub::Verify(c) => (Command::Verify, c, vec![]),
        Sub::Bubble { common, ks, eps, center } => {
            let mut e = vec![];
            if let Some(k) = ks {
                e.push(("bubble.k", k));
            }
            if let Some(v) = eps {
                let ks = crate::config::parse_list(&v)
                    .filter(|xs| xs.iter().all(|&x| x > 0.0 && x < 1.0))
                    .ok_or_else(|| CliError::Usage(format!("bad value '{v}' for --eps: expected values in (0,1)")))?;
                e.push(("bubble.k", ks.iter().map(|x| (-x.ln()).to_string()).collect::<Vec<_>>().join(",")));
            }
            if let Some(c) = center {
                e.push(("bubble.center", c));
            }
            (Command::Bubble, common, e)
        }
        Sub::Radial { common, gamma, energy, delta } => {
            let mut e = vec![];
            if let Some(g) = gamma {
                e.push(("radial.gamma", g.to_string()));
            }
            if let Some(v) = energy {
                e.push(("radial.E", v));
            }
            if let Some(d) = delta {
                e.push(("radial.delta", d.to_string()));
            }
            (Command::Radial, common, e)
        }
        Sub::Scan { common, lambdas } => {
            (Command::Scan, common, lambdas.map(|v| ("scan.lambdas", v)).into_iter().collect())
        }
        Sub::Threshold { common, bracket, tol } => {
            let mut e = vec![];
            if let Some(b) = bracket {
                e.push(("threshold.bracket", b));
            }
            if let Some(t) = tol {
                e.push(("threshold.tol", t.to_string()));
            }
            (Command::Threshold, common, e)
        }
    };

    let mut cfg = RunConfig::new(command);
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
        // the subcommand on the command line decides what runs
        cfg.command = command;
    }

    if let Some(spec) = &common.mesh {
        cfg.mesh = MeshSource::parse(spec)?;
    }
    if let Some(path) = &common.mesh_file {
        cfg.mesh = MeshSource::File(path.clone());
    }
    let mut flags: Vec<(&str, String)> = Vec::new();
    let mut push = |k: &'static str, v: Option<String>| {
        if let Some(v) = v {
            flags.push((k, v));
        }
    };
    push("params.lambda", common.lambda.map(|v| v.to_string()));
    push("params.p", common.p.map(|v| v.to_string()));
    push("params.variant", common.variant);
    push("solver.tol", common.el_tol.map(|v| v.to_string()));
    push("solver.max_iters", common.max_iters.map(|v| v.to_string()));
    push("solver.seeds", common.seeds);
    push("solver.robin", common.robin);
    push("solver.robin", common.stride.map(|k| format!("stride:{k}")));
    push("solver.levels", common.levels.map(|v| v.to_string()));
    push("solver.margin_min", common.margin_min);
    push("rng.seed", common.rng_seed.map(|v| v.to_string()));
    push("output.path", common.out.map(|p| p.display().to_string()));
    for (k, v) in flags.into_iter().chain(extra) {
        cfg.set(k, &v)?;
    }
    Ok(cfg)
}

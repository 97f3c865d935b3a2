//! Resolved run configuration and its flat `key = value` text form.
//!
//! Keys carry a section prefix (`mesh.kind`, `solver.tol`, ...). Every key
//! is always written, so a config file doubles as a complete record of a
//! run and `from_text(to_text(c)) == c`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use tmlab::fem::{build_disk_mesh, build_rect_mesh, fmt17, load_mesh, Mesh};
use tmlab::functional::{PerturbParams, Variant};
use tmlab::maximizer::{parse_seed_spec, MaximizeOptions, SeedSpec};
use tmlab::potential::RobinMethod;
use tmlab::threshold::Protocol;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Mesh,
    Potential,
    Maximize,
    Bubble,
    Radial,
    Scan,
    Threshold,
    Verify,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Mesh,
        Command::Potential,
        Command::Maximize,
        Command::Bubble,
        Command::Radial,
        Command::Scan,
        Command::Threshold,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Potential => "potential",
            Command::Maximize => "maximize",
            Command::Bubble => "bubble",
            Command::Radial => "radial",
            Command::Scan => "scan",
            Command::Threshold => "threshold",
            Command::Verify => "verify",
        }
    }

    /// Output file used when `--out` is not given.
    pub fn default_output(self) -> &'static str {
        match self {
            Command::Mesh => "mesh.tmmesh",
            Command::Potential => "potential.json",
            Command::Maximize => "maximize.json",
            Command::Bubble => "bubble.csv",
            Command::Radial => "profile.csv",
            Command::Scan => "scan.csv",
            Command::Threshold => "threshold.json",
            Command::Verify => "verify.json",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown command '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    Disk { level: i32 },
    Rect { width: f64, height: f64, nx: usize, ny: usize },
    File(PathBuf),
}

impl MeshSource {
    /// `disk:<level>`, `rect:<w>x<h>:<nx>x<ny>`, or a file path.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("bad mesh source '{s}'"));
        if let Some(level) = s.strip_prefix("disk:") {
            return Ok(MeshSource::Disk { level: level.parse().map_err(|_| bad())? });
        }
        if let Some(rest) = s.strip_prefix("rect:") {
            let (size, counts) = rest.split_once(':').ok_or_else(bad)?;
            let (w, h) = size.split_once('x').ok_or_else(bad)?;
            let (nx, ny) = counts.split_once('x').ok_or_else(bad)?;
            return Ok(MeshSource::Rect {
                width: w.parse().map_err(|_| bad())?,
                height: h.parse().map_err(|_| bad())?,
                nx: nx.parse().map_err(|_| bad())?,
                ny: ny.parse().map_err(|_| bad())?,
            });
        }
        if s.is_empty() {
            return Err(bad());
        }
        Ok(MeshSource::File(PathBuf::from(s)))
    }

    pub fn build(&self) -> tmlab::Result<Mesh> {
        match self {
            MeshSource::Disk { level } => build_disk_mesh(*level),
            MeshSource::Rect { width, height, nx, ny } => build_rect_mesh(*width, *height, *nx, *ny),
            MeshSource::File(p) => load_mesh(p),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub mesh: MeshSource,
    pub params: PerturbParams,
    /// Euler–Lagrange residual target of the ascent.
    pub el_tol: f64,
    pub max_iters: usize,
    pub seeds: Vec<SeedSpec>,
    pub robin: RobinMethod,
    pub levels: usize,
    /// `None` means `0.05·(S^δ − |Ω|)`.
    pub margin_min: Option<f64>,
    pub peak_tol: f64,
    pub rng_seed: u64,
    pub output: PathBuf,
    pub gamma: f64,
    /// `None` means `γ²(S^δ − |Ω|)` from the configured mesh.
    pub energy: Option<f64>,
    pub delta: f64,
    /// Bubble exponents `k` with `ε = e^{−k}`.
    pub bubble_ks: Vec<f64>,
    /// Bubble center; `None` means the harmonic center.
    pub center: Option<[f64; 2]>,
    pub lambdas: Vec<f64>,
    pub bracket: (f64, f64),
    pub threshold_tol: f64,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        let proto = Protocol::default();
        RunConfig {
            command,
            mesh: MeshSource::Disk { level: 4 },
            params: PerturbParams { lambda: 0.0, p: 2.0, variant: Variant::default() },
            el_tol: proto.maximize.tol,
            max_iters: proto.maximize.max_iters,
            seeds: proto.seeds,
            robin: RobinMethod::default(),
            levels: proto.levels,
            margin_min: None,
            peak_tol: proto.peak_tol,
            rng_seed: 0,
            output: PathBuf::from(command.default_output()),
            gamma: 6.0,
            energy: None,
            delta: 0.5,
            bubble_ks: vec![6.0, 8.0, 10.0, 12.0],
            center: None,
            lambdas: vec![0.0, 1.0, 2.0, 5.0],
            bracket: (10.0, 200.0),
            threshold_tol: 5.0,
        }
    }

    pub fn maximize_options(&self) -> MaximizeOptions {
        MaximizeOptions { tol: self.el_tol, max_iters: self.max_iters, ..Default::default() }
    }

    pub fn protocol(&self) -> Protocol {
        Protocol {
            id: format!("tmx:{}:seed{}", seeds_text(&self.seeds), self.rng_seed),
            seeds: self.seeds.clone(),
            rng_seed: self.rng_seed,
            margin_min: self.margin_min,
            levels: self.levels,
            peak_tol: self.peak_tol,
            maximize: self.maximize_options(),
            robin: self.robin,
            ..Protocol::default()
        }
    }

    /// All keys in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let (kind, level, width, height, nx, ny, path) = match &self.mesh {
            MeshSource::Disk { level } => ("disk", *level, 1.0, 1.0, 1, 1, String::new()),
            MeshSource::Rect { width, height, nx, ny } => ("rect", 0, *width, *height, *nx, *ny, String::new()),
            MeshSource::File(p) => ("file", 0, 1.0, 1.0, 1, 1, p.display().to_string()),
        };
        vec![
            ("command", self.command.name().into()),
            ("mesh.kind", kind.into()),
            ("mesh.level", level.to_string()),
            ("mesh.width", fmt17(width)),
            ("mesh.height", fmt17(height)),
            ("mesh.nx", nx.to_string()),
            ("mesh.ny", ny.to_string()),
            ("mesh.path", path),
            ("params.lambda", fmt17(self.params.lambda)),
            ("params.p", fmt17(self.params.p)),
            ("params.variant", variant_text(self.params.variant).into()),
            ("solver.tol", fmt17(self.el_tol)),
            ("solver.max_iters", self.max_iters.to_string()),
            ("solver.seeds", seeds_text(&self.seeds)),
            ("solver.robin", robin_text(self.robin)),
            ("solver.levels", self.levels.to_string()),
            ("solver.margin_min", self.margin_min.map_or("auto".into(), fmt17)),
            ("solver.peak_tol", fmt17(self.peak_tol)),
            ("rng.seed", self.rng_seed.to_string()),
            ("output.path", self.output.display().to_string()),
            ("radial.gamma", fmt17(self.gamma)),
            ("radial.E", self.energy.map_or("auto".into(), fmt17)),
            ("radial.delta", fmt17(self.delta)),
            ("bubble.k", list_text(&self.bubble_ks)),
            ("bubble.center", self.center.map_or("auto".into(), |c| list_text(&c))),
            ("scan.lambdas", list_text(&self.lambdas)),
            ("threshold.bracket", list_text(&[self.bracket.0, self.bracket.1])),
            ("threshold.tol", fmt17(self.threshold_tol)),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and `#`
    /// comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected 'key = value'", n + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| CliError::Usage(format!("config line {}: {}", n + 1, e.message())))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let command = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .find(|(k, _)| k.trim() == "command")
            .map(|(_, v)| v.trim().parse())
            .transpose()?
            .ok_or_else(|| CliError::Usage("config has no 'command' entry".into()))?;
        let mut c = RunConfig::new(command);
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |what: &str| CliError::Usage(format!("bad value '{value}' for {key}: {what}"));
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad("expected a number"));
        let int = |v: &str| v.parse::<usize>().map_err(|_| bad("expected a nonnegative integer"));
        let (mut w, mut h, mut nx, mut ny) = match self.mesh {
            MeshSource::Rect { width, height, nx, ny } => (width, height, nx, ny),
            _ => (1.0, 1.0, 1, 1),
        };
        match key {
            "command" => self.command = value.parse()?,
            "mesh.kind" => {
                self.mesh = match value {
                    "disk" => MeshSource::Disk { level: 4 },
                    "rect" => MeshSource::Rect { width: w, height: h, nx, ny },
                    "file" => MeshSource::File(PathBuf::new()),
                    _ => return Err(bad("expected disk, rect or file")),
                }
            }
            "mesh.level" => {
                let level = value.parse::<i32>().map_err(|_| bad("expected an integer"))?;
                if let MeshSource::Disk { .. } = self.mesh {
                    self.mesh = MeshSource::Disk { level };
                }
            }
            "mesh.width" | "mesh.height" | "mesh.nx" | "mesh.ny" => {
                match key {
                    "mesh.width" => w = num(value)?,
                    "mesh.height" => h = num(value)?,
                    "mesh.nx" => nx = int(value)?,
                    _ => ny = int(value)?,
                }
                if let MeshSource::Rect { .. } = self.mesh {
                    self.mesh = MeshSource::Rect { width: w, height: h, nx, ny };
                }
            }
            "mesh.path" => {
                if let MeshSource::File(_) = self.mesh {
                    self.mesh = MeshSource::File(PathBuf::from(value));
                }
            }
            "params.lambda" => self.params.lambda = num(value)?,
            "params.p" => self.params.p = num(value)?,
            "params.variant" => {
                self.params.variant = match value {
                    "WITH_MINUS_ONE" => Variant::WithMinusOne,
                    "WITHOUT_MINUS_ONE" => Variant::WithoutMinusOne,
                    _ => return Err(bad("expected WITH_MINUS_ONE or WITHOUT_MINUS_ONE")),
                }
            }
            "solver.tol" => self.el_tol = num(value)?,
            "solver.max_iters" => self.max_iters = int(value)?,
            "solver.seeds" => self.seeds = parse_seed_spec(value).map_err(|e| bad(&e.to_string()))?,
            "solver.robin" => self.robin = parse_robin(value).ok_or_else(|| bad("expected harmonic or stride:<k>"))?,
            "solver.levels" => self.levels = int(value)?,
            "solver.margin_min" => self.margin_min = if value == "auto" { None } else { Some(num(value)?) },
            "solver.peak_tol" => self.peak_tol = num(value)?,
            "rng.seed" => self.rng_seed = value.parse().map_err(|_| bad("expected an unsigned integer"))?,
            "output.path" => self.output = PathBuf::from(value),
            "radial.gamma" => self.gamma = num(value)?,
            "radial.E" => self.energy = if value == "auto" { None } else { Some(num(value)?) },
            "radial.delta" => self.delta = num(value)?,
            "bubble.k" => self.bubble_ks = parse_list(value).ok_or_else(|| bad("expected a comma-separated list"))?,
            "bubble.center" => {
                self.center = match (value, parse_list(value).as_deref()) {
                    ("auto", _) => None,
                    (_, Some(&[x, y])) => Some([x, y]),
                    _ => return Err(bad("expected auto or x,y")),
                }
            }
            "scan.lambdas" => self.lambdas = parse_list(value).ok_or_else(|| bad("expected a comma-separated list"))?,
            "threshold.bracket" => match parse_list(value).as_deref() {
                Some(&[lo, hi]) => self.bracket = (lo, hi),
                _ => return Err(bad("expected lo,hi")),
            },
            "threshold.tol" => self.threshold_tol = num(value)?,
            _ => return Err(CliError::Usage(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }
}

pub fn parse_list(s: &str) -> Option<Vec<f64>> {
    let v: Option<Vec<f64>> = s.split(',').map(|x| x.trim().parse().ok()).collect();
    v.filter(|v| !v.is_empty())
}

fn list_text(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(",")
}

fn seeds_text(seeds: &[SeedSpec]) -> String {
    seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";")
}

fn variant_text(v: Variant) -> &'static str {
    match v {
        Variant::WithMinusOne => "WITH_MINUS_ONE",
        Variant::WithoutMinusOne => "WITHOUT_MINUS_ONE",
    }
}

fn robin_text(m: RobinMethod) -> String {
    match m {
        RobinMethod::HarmonicMeasure => "harmonic".into(),
        RobinMethod::PerVertex { stride } => format!("stride:{stride}"),
    }
}

pub fn parse_robin(s: &str) -> Option<RobinMethod> {
    if s == "harmonic" {
        return Some(RobinMethod::HarmonicMeasure);
    }
    let stride: usize = s.strip_prefix("stride:")?.parse().ok()?;
    (stride >= 1).then_some(RobinMethod::PerVertex { stride })
}

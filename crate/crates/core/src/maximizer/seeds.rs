use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{maximize_seed, MaximizeOptions, MaximizeResult, Termination};
use crate::fem::{Density, Field, Laplacian, Point};
use crate::functional::Functional;
use crate::moser::test_function;
use crate::{par, Error, Result};

/// One entry of a seed specification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SeedSpec {
    /// Moser bubble with `ε = e^{−k}` at the given center.
    Bubble { k: f64 },
    /// Solution of `−Δw = 1`, a surrogate for the first eigenfunction.
    Eigen,
    /// Random sums of one to three Gaussian bumps.
    Random { count: usize },
}

/// Parses `bubble:6,8,10;eigen;random:3`.
pub fn parse_seed_spec(s: &str) -> Result<Vec<SeedSpec>> {
    let mut out = Vec::new();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (kind, arg) = match part.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (part, None),
        };
        let bad = || Error::InvalidArgument(format!("bad seed entry '{part}'"));
        match (kind, arg) {
            ("bubble", Some(a)) => {
                for k in a.split(',') {
                    let k: f64 = k.trim().parse().map_err(|_| bad())?;
                    if !(k > 1.0 && k.is_finite()) {
                        return Err(Error::InvalidArgument(format!("bubble exponent must exceed 1, got {k}")));
                    }
                    out.push(SeedSpec::Bubble { k });
                }
            }
            ("eigen", None) => out.push(SeedSpec::Eigen),
            ("random", Some(a)) => {
                let count: usize = a.parse().map_err(|_| bad())?;
                out.push(SeedSpec::Random { count });
            }
            _ => return Err(bad()),
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("seed specification is empty".into()));
    }
    Ok(out)
}

impl FromStr for SeedSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match parse_seed_spec(s)?.as_slice() {
            [one] => Ok(*one),
            _ => Err(Error::InvalidArgument(format!("'{s}' is not a single seed entry"))),
        }
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedSpec::Bubble { k } => write!(f, "bubble:{k}"),
            SeedSpec::Eigen => write!(f, "eigen"),
            SeedSpec::Random { count } => write!(f, "random:{count}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Seed {
    pub id: String,
    pub field: Field,
}

/// Materializes seed fields. Bubbles are centred at `center`; random bump
/// `i` draws from a ChaCha8 stream seeded with `rng_seed + i`.
pub fn seed_fields(lap: &Laplacian, specs: &[SeedSpec], center: Point, rng_seed: u64) -> Result<Vec<Seed>> {
    let mesh = lap.mesh();
    let mut seeds = Vec::new();
    let mut random_index = 0u64;
    for spec in specs {
        match *spec {
            SeedSpec::Bubble { k } => seeds.push(Seed {
                id: format!("bubble:{k}"),
                field: test_function(lap, (-k).exp(), center)?.field,
            }),
            SeedSpec::Eigen => {
                let rhs = Density::constant(mesh, 1.0);
                let w = lap.solve_dirichlet(&rhs, &vec![0.0; mesh.num_vertices()])?;
                seeds.push(Seed { id: "eigen".into(), field: w });
            }
            SeedSpec::Random { count } => {
                let interior = mesh.interior_vertices();
                let diam = {
                    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
                    for p in mesh.vertices() {
                        for d in 0..2 {
                            lo[d] = lo[d].min(p[d]);
                            hi[d] = hi[d].max(p[d]);
                        }
                    }
                    (hi[0] - lo[0]).hypot(hi[1] - lo[1])
                };
                for _ in 0..count {
                    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed.wrapping_add(random_index));
                    let bumps: Vec<(Point, f64, f64)> = (0..rng.gen_range(1..=3))
                        .map(|_| {
                            let c = mesh.vertex(interior[rng.gen_range(0..interior.len())]);
                            (c, rng.gen_range(0.05..0.2) * diam, rng.gen_range(0.5..1.0))
                        })
                        .collect();
                    let field = Field::interpolate_dirichlet(mesh, |x| {
                        bumps
                            .iter()
                            .map(|&(c, s, a)| {
                                let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
                                a * (-d2 / (2.0 * s * s)).exp()
                            })
                            .sum()
                    });
                    seeds.push(Seed { id: format!("random:{random_index}"), field });
                    random_index += 1;
                }
            }
        }
    }
    Ok(seeds)
}

/// Per-seed outcome kept by [`multi_start`].
#[derive(Clone, Debug, Serialize)]
#[allow(non_snake_case)]
pub struct RunSummary {
    pub seed_id: String,
    pub J: Option<f64>,
    pub el_residual: Option<f64>,
    pub iterations: Option<usize>,
    pub peak_value: Option<f64>,
    pub termination: Option<Termination>,
    /// Why the seed was rejected, if it was.
    pub rejected: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiStartResult {
    pub best: MaximizeResult,
    pub runs: Vec<RunSummary>,
}

/// Runs the ascent from every seed (concurrently when enabled) and keeps
/// the result with the largest `J`; ties go to the earlier seed.
pub fn multi_start(f: &Functional, seeds: &[Seed], opts: &MaximizeOptions) -> Result<MultiStartResult> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("at least one seed is required".into()));
    }
    let results = par::map_indexed(seeds, |_, s| maximize_seed(f, &s.field, opts, &s.id));
    let mut best: Option<MaximizeResult> = None;
    let mut runs = Vec::with_capacity(seeds.len());
    for (seed, res) in seeds.iter().zip(results) {
        match res {
            Ok(r) => {
                runs.push(RunSummary {
                    seed_id: seed.id.clone(),
                    J: Some(r.J),
                    el_residual: Some(r.el_residual),
                    iterations: Some(r.iterations),
                    peak_value: Some(r.peak_value),
                    termination: Some(r.termination),
                    rejected: None,
                });
                if best.as_ref().map_or(true, |b| r.J > b.J) {
                    best = Some(r);
                }
            }
            Err(e) => runs.push(RunSummary {
                seed_id: seed.id.clone(),
                J: None,
                el_residual: None,
                iterations: None,
                peak_value: None,
                termination: None,
                rejected: Some(e.to_string()),
            }),
        }
    }
    match best {
        Some(best) => Ok(MultiStartResult { best, runs }),
        None => Err(Error::AllSeedsRejected(seeds.len())),
    }
}

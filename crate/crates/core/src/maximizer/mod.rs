//! Projected Sobolev-gradient ascent for the perturbed functional on the unit
//! sphere `‖∇u‖ = 1` of H¹₀, multi-start orchestration and blow-up
//! diagnostics.
//!
//! One step is `u ← (u + s·w)/‖∇(u + s·w)‖` with `w` the H¹₀ Riesz gradient
//! of `J` at `u`. The step `s` starts at 1 and is halved until an Armijo
//! condition on `J` holds. Iteration stops when the Euler–Lagrange residual
//! (the sine of the angle between `u` and `w`) drops below the tolerance.

mod blowup;
mod seeds;

pub use blowup::{blowup_diagnostics, BlowupReport, GreenDeviation, ProfileSample};
pub use seeds::{multi_start, parse_seed_spec, seed_fields, MultiStartResult, RunSummary, Seed, SeedSpec};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fem::{Field, Point};
use crate::functional::{EnergySplit, Functional, PerturbParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximizeOptions {
    /// Target Euler–Lagrange residual.
    pub tol: f64,
    pub max_iters: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
    pub min_step: f64,
    /// Keep the accepted-step `J` sequence in the result.
    pub record_history: bool,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            tol: 1e-6,
            max_iters: 5000,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            min_step: 1e-12,
            record_history: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    /// No step above the minimum increased `J`; the result is the best
    /// iterate found.
    Stagnated,
    MaxIterations,
}

#[derive(Clone, Debug, Serialize)]
#[allow(non_snake_case)]
pub struct MaximizeResult {
    pub seed_id: String,
    pub params: PerturbParams,
    #[serde(skip)]
    pub u: Field,
    pub J: f64,
    pub el_residual: f64,
    pub energy: EnergySplit,
    /// Peak value `c = max u`.
    pub peak_value: f64,
    pub peak_vertex: usize,
    pub peak_location: Point,
    /// `γ = 2√π c`.
    pub gamma: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub overflow_flag: bool,
    /// Accepted-step values of `J`, starting with the initial value.
    pub history: Vec<f64>,
}

impl MaximizeResult {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn stagnated(&self) -> bool {
        self.termination == Termination::Stagnated
    }
}

/// `u / ‖∇u‖`.
pub fn normalize(f: &Functional, u: &[f64]) -> Result<Field> {
    let n = f.laplacian().h1_seminorm(u);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidArgument("cannot normalize a field with zero Dirichlet energy".into()));
    }
    Ok(u.iter().map(|v| v / n).collect::<Vec<_>>().into())
}

/// Ascent from `init`. Rejects initial fields with `E ≤ 0`.
pub fn maximize(f: &Functional, init: &[f64], opts: &MaximizeOptions) -> Result<MaximizeResult> {
    maximize_seed(f, init, opts, "init")
}

pub fn maximize_seed(
    f: &Functional,
    init: &[f64],
    opts: &MaximizeOptions,
    seed_id: &str,
) -> Result<MaximizeResult> {
    let mesh = f.mesh();
    let lap = f.laplacian();
    if init.len() != mesh.num_vertices() || !Field::new(init.to_vec()).is_dirichlet_zero(mesh) {
        return Err(Error::InvalidArgument("initial field must be a Dirichlet-zero nodal field".into()));
    }
    let mut u = normalize(f, init)?;
    let e0 = f.normalizer(&u);
    if !(e0 > 0.0) {
        return Err(Error::DegenerateNormalizer(e0));
    }

    let mut j = f.evaluate(&u).value;
    let mut history = if opts.record_history { vec![j] } else { Vec::new() };
    let (mut w, _) = f.gradient(&u, None)?;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;
    let mut residual;
    loop {
        let (res, _) = f.residual_with(&u, &w)?;
        residual = res;
        if residual <= opts.tol {
            termination = Termination::Converged;
            break;
        }
        if iterations >= opts.max_iters {
            break;
        }
        // tangential part of w and its squared norm
        let wu = lap.inner(&w, &u);
        let ww = lap.inner(&w, &w);
        let wt_sq = (ww - wu * wu).max(0.0);

        let mut s = opts.initial_step;
        let mut accepted = None;
        while s >= opts.min_step {
            let trial: Vec<f64> = u.iter().zip(w.iter()).map(|(a, b)| a + s * b).collect();
            let norm = lap.h1_seminorm(&trial);
            // effective step along the tangent direction
            let sigma = s / norm;
            let cand: Vec<f64> = trial.iter().map(|v| v / norm).collect();
            let jc = f.evaluate(&cand).value;
            if jc >= j + opts.armijo * sigma * wt_sq && jc.is_finite() {
                accepted = Some((cand, jc));
                break;
            }
            s *= opts.shrink;
        }
        let Some((cand, jc)) = accepted else {
            termination = Termination::Stagnated;
            break;
        };
        u = cand.into();
        j = jc;
        if opts.record_history {
            history.push(j);
        }
        iterations += 1;
        w = f.gradient(&u, Some(&w))?.0;
    }

    // canonical nonnegative representative
    let (_, umax) = u.argmax();
    if -u.min() > umax {
        u = u.scaled(-1.0);
    }
    if u.min() < -1e-8 {
        let abs: Vec<f64> = u.iter().map(|v| v.abs()).collect();
        u = normalize(f, &abs)?;
        j = f.evaluate(&u).value;
        residual = f.residual(&u)?.0;
    }

    let ev = f.evaluate(&u);
    let energy = f.energy_split(&u)?;
    let (peak_vertex, peak_value) = u.argmax();
    Ok(MaximizeResult {
        seed_id: seed_id.to_string(),
        params: f.params(),
        J: j,
        el_residual: residual,
        energy,
        peak_value,
        peak_vertex,
        peak_location: mesh.vertex(peak_vertex),
        gamma: 2.0 * PI.sqrt() * peak_value,
        iterations,
        termination,
        overflow_flag: ev.overflow,
        history,
        u,
    })
}

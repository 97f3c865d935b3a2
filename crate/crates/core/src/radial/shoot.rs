use std::f64::consts::PI;

use serde::Serialize;

use super::{blowup_radius, s0};
use crate::functional::PerturbParams;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShootOptions {
    /// Local error tolerance (relative and absolute).
    pub tol: f64,
    /// Length of the series step, in units of `r_k`.
    pub series_start: f64,
    /// Number of output points, uniform in `t`.
    pub n_out: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions { tol: 1e-10, series_start: 1e-3, n_out: 400 }
    }
}

/// Solution of the radial Euler–Lagrange equation on `[0, r_{k,δ}]`.
#[derive(Clone, Debug, Serialize)]
#[allow(non_snake_case)]
pub struct RadialProfile {
    pub gamma: f64,
    pub E: f64,
    pub lambda: f64,
    pub p: f64,
    pub delta: f64,
    pub r_k: f64,
    /// Radius where `t = δγ²`.
    pub r_k_delta: f64,
    pub grid: Vec<f64>,
    pub V: Vec<f64>,
    /// `dV/dr` on the grid.
    pub dV: Vec<f64>,
    pub t: Vec<f64>,
    /// `V` reached zero before `r_{k,δ}`; the profile stops at the last
    /// grid point with `V > 0`.
    pub sign_change: bool,
}

impl RadialProfile {
    /// Cubic Hermite interpolation of `V` at `r` inside the grid.
    pub fn value_at(&self, r: f64) -> Option<f64> {
        let n = self.grid.len();
        if n == 0 || r < 0.0 || r > self.grid[n - 1] {
            return None;
        }
        let i = self.grid.partition_point(|&x| x <= r).clamp(1, n - 1);
        let (r0, r1) = (self.grid[i - 1], self.grid[i]);
        let h = r1 - r0;
        let s = (r - r0) / h;
        let (h00, h10) = (2.0 * s.powi(3) - 3.0 * s * s + 1.0, s.powi(3) - 2.0 * s * s + s);
        let (h01, h11) = (-2.0 * s.powi(3) + 3.0 * s * s, s.powi(3) - s * s);
        Some(h00 * self.V[i - 1] + h10 * h * self.dV[i - 1] + h01 * self.V[i] + h11 * h * self.dV[i])
    }
}

// Dormand–Prince 5(4)
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
// fifth minus fourth order weights
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type State = [f64; 2];

/// One DOPRI5 step; returns the new state and the error estimate.
fn dopri_step(f: &impl Fn(f64, State) -> State, x: f64, y: State, h: f64) -> (State, State) {
    let mut k = [[0.0; 2]; 7];
    for s in 0..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for d in 0..2 {
                ys[d] += h * A[s][j] * kj[d];
            }
        }
        k[s] = f(x + C[s] * h, ys);
    }
    let mut out = y;
    let mut err = [0.0; 2];
    for s in 0..7 {
        for d in 0..2 {
            out[d] += h * B[s] * k[s][d];
            err[d] += h * ERR[s] * k[s][d];
        }
    }
    (out, err)
}

/// Integrates `V'' + V'/r = −(4π/E)(V e^{V²} − κλ|V|^{p−2}V)`,
/// `κ = p/(2(4π)^{p/2})`, from `V(0) = γ`, `V'(0) = 0` up to `t = δγ²`.
///
/// In `s = r/r_k` the right-hand side becomes
/// `−(4/γ²)(V e^{V²−γ²} − κλ|V|^{p−2}V e^{−γ²})`; the solver runs in
/// `x = log s` so that the step size tracks the geometric output grid.
pub fn shoot_radial(
    gamma: f64,
    e: f64,
    params: &PerturbParams,
    delta: f64,
    opts: &ShootOptions,
) -> Result<RadialProfile> {
    if !(gamma > 0.0 && gamma.is_finite() && e > 0.0 && e.is_finite()) {
        return Err(Error::InvalidArgument("shooting needs γ > 0 and E > 0".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("δ must lie in (0, 1), got {delta}")));
    }
    if !(opts.tol > 0.0 && opts.series_start > 0.0 && opts.n_out >= 2) {
        return Err(Error::InvalidArgument("bad shooting options".into()));
    }
    params.validate()?;
    let (lambda, p) = (params.lambda, params.p);
    let kappa = p / (2.0 * (4.0 * PI).powf(p / 2.0));
    let g2 = gamma * gamma;
    let damp = (-g2).exp();
    let rhs = move |v: f64| {
        let exp_part = v * ((v - gamma) * (v + gamma)).exp();
        let pow_part = if v == 0.0 { 0.0 } else { kappa * lambda * v.abs().powf(p - 2.0) * v * damp };
        -(4.0 / g2) * (exp_part - pow_part)
    };
    let field = |x: f64, y: State| [y[1], (2.0 * x).exp() * rhs(y[0])];

    let r_k = blowup_radius(e, gamma);
    let t_end = delta * g2;
    let s_end = t_end.exp_m1().sqrt();
    let n = opts.n_out;
    let t_grid: Vec<f64> = (0..n).map(|i| if i == n - 1 { t_end } else { t_end * i as f64 / (n - 1) as f64 }).collect();
    let s_grid: Vec<f64> = t_grid.iter().enumerate().map(|(i, &t)| if i == n - 1 { s_end } else { t.exp_m1().sqrt() }).collect();

    // series start V = γ − q₀ s²/4
    let q0 = -rhs(gamma);
    let series = |s: f64| (gamma - 0.25 * q0 * s * s, -0.5 * q0 * s);

    let mut vs = Vec::with_capacity(n);
    let mut dvs = Vec::with_capacity(n);
    let s0 = opts.series_start;
    let mut x = s0.ln();
    let (v0, dv0) = series(s0);
    let mut y: State = [v0, s0 * dv0];
    let mut h = 1e-2;
    let mut sign_change = false;
    'outer: for &s in &s_grid {
        if s <= s0 {
            let (v, dv) = series(s);
            vs.push(v);
            dvs.push(dv / r_k);
            continue;
        }
        let target = s.ln();
        while x < target {
            let clipped = h > target - x;
            let step = if clipped { target - x } else { h };
            let (yn, err) = dopri_step(&field, x, y, step);
            let mut en = 0.0f64;
            for d in 0..2 {
                let sc = opts.tol * (1.0 + y[d].abs().max(yn[d].abs()));
                en = en.max(err[d].abs() / sc);
            }
            if en <= 1.0 {
                x += step;
                y = yn;
                if y[0] <= 0.0 {
                    sign_change = true;
                    break 'outer;
                }
            }
            let fac = if en == 0.0 {
                5.0
            } else if en.is_finite() {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                0.2
            };
            // a step shortened to land on the grid says little about h
            h = if clipped && en <= 1.0 { h.max(step * fac) } else { step * fac };
            if !h.is_finite() || h < 1e-14 * x.abs().max(1.0) {
                return Err(Error::StepUnderflow { r: r_k * x.exp() });
            }
        }
        vs.push(y[0]);
        // dV/dr = (dV/dx)/r
        dvs.push(y[1] / (r_k * s));
    }
    let m = vs.len();
    Ok(RadialProfile {
        gamma,
        E: e,
        lambda,
        p,
        delta,
        r_k,
        r_k_delta: r_k * s_end,
        grid: s_grid[..m].iter().map(|s| r_k * s).collect(),
        V: vs,
        dV: dvs,
        t: t_grid[..m].to_vec(),
        sign_change,
    })
}

/// Remainder of `V ≈ γ − t/γ + S₀(r/r_k)/γ³` on the profile grid.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionStats {
    pub gamma: f64,
    /// `sup e(r)·γ⁵/(1 + t(r))`.
    pub scaled_sup: f64,
    /// `sup e(r)`.
    pub raw_sup: f64,
    pub at_zero: f64,
    /// `γ − t/γ + S₀/γ³` on the grid.
    pub expansion: Vec<f64>,
    pub error: Vec<f64>,
}

pub fn expansion_error(profile: &RadialProfile) -> Result<ExpansionStats> {
    if profile.sign_change {
        return Err(Error::Domain("expansion error needs a profile without sign change".into()));
    }
    let g = profile.gamma;
    let mut expansion = Vec::with_capacity(profile.grid.len());
    let mut error = Vec::with_capacity(profile.grid.len());
    let (mut scaled, mut raw) = (0.0f64, 0.0f64);
    for i in 0..profile.grid.len() {
        let t = profile.t[i];
        let z = g - t / g + s0(profile.grid[i] / profile.r_k) / g.powi(3);
        let e = (profile.V[i] - z).abs();
        expansion.push(z);
        error.push(e);
        raw = raw.max(e);
        scaled = scaled.max(e * g.powi(5) / (1.0 + t));
    }
    Ok(ExpansionStats { gamma: g, scaled_sup: scaled, raw_sup: raw, at_zero: error[0], expansion, error })
}

//! Radial blow-up analysis: the bubble `φ∞(r) = −log(1 + r²)`, the second
//! order correction `S₀`, and a shooting solver for the radial
//! Euler–Lagrange equation
//!
//! ```text
//! V'' + V'/r = −(4π/E)(V e^{V²} − (p/(2(4π)^{p/2})) λ |V|^{p−2} V)
//! ```
//!
//! started from `V(0) = γ`, `V'(0) = 0`, in the variables
//! `t = log(1 + r²/r_k²)` where the expansion `γ − t/γ + S₀/γ³` lives.

mod compare;
pub mod quad;
mod shoot;

pub use compare::{compare_with_maximizer, ProfileComparison};
pub use shoot::{expansion_error, shoot_radial, ExpansionStats, RadialProfile, ShootOptions};

use std::f64::consts::PI;

use serde::Serialize;

/// Asymptotic constants of `S₀`: `∫(−ΔS₀) = A0` and
/// `S₀(r) = (A0/4π) log(1/r²) + B0 + o(1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct RadialConstants {
    pub A0: f64,
    pub B0: f64,
}

pub const RADIAL_CONSTANTS: RadialConstants = RadialConstants { A0: 4.0 * PI, B0: PI * PI / 6.0 + 2.0 };

/// Absolute tolerance of the quadrature inside [`s0`].
pub const S0_QUAD_TOL: f64 = 1e-12;

/// `φ∞(r) = −log(1 + r²)`.
pub fn phi_inf(r: f64) -> f64 {
    -(r * r).ln_1p()
}

/// `r_k² = (E/π) γ⁻² e^{−γ²}`.
pub fn blowup_radius(e: f64, gamma: f64) -> f64 {
    ((e / PI) / (gamma * gamma) * (-gamma * gamma).exp()).sqrt()
}

/// `∫₁^{1+r²} log t/(1 − t) dt`, computed as `−∫₀^{log(1+r²)} s/(1 − e^{−s}) ds`.
fn log_ratio_integral(r: f64, tol: f64) -> f64 {
    let upper = (r * r).ln_1p();
    let f = |s: f64| if s == 0.0 { 1.0 } else { -s / (-s).exp_m1() };
    -quad::integrate(f, 0.0, upper, tol).0
}

/// Second-order correction profile
///
/// ```text
/// S₀(r) = φ∞ + 2r²/(1+r²) − φ∞²/2 + (1−r²)/(1+r²) ∫₁^{1+r²} log t/(1−t) dt
/// ```
pub fn s0(r: f64) -> f64 {
    s0_with_tol(r, S0_QUAD_TOL)
}

pub fn s0_with_tol(r: f64, tol: f64) -> f64 {
    let r2 = r * r;
    let phi = phi_inf(r);
    phi + 2.0 * r2 / (1.0 + r2) - 0.5 * phi * phi + (1.0 - r2) / (1.0 + r2) * log_ratio_integral(r, tol)
}

/// Residuals of the bubble identities.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BubbleIdentities {
    pub r_max: f64,
    /// `sup |−Δφ∞ − 4e^{2φ∞}|` on `[0, r_max]`, analytic derivatives.
    pub phi_residual: f64,
    /// `∫_{B_{r_max}} e^{2φ∞}`.
    pub mass: f64,
    /// `|mass − π r_max²/(1 + r_max²)|`.
    pub mass_error: f64,
    /// `sup |−ΔS₀ − 8e^{2φ∞}S₀ − 4e^{2φ∞}(φ∞² + φ∞)|`, extrapolated
    /// second differences of the closed form.
    pub s0_residual: f64,
}

const IDENTITY_SAMPLES: usize = 2001;
const S0_SAMPLES: usize = 200;

fn neg_laplacian_phi(r: f64) -> f64 {
    let q = 1.0 + r * r;
    let second = -2.0 * (1.0 - r * r) / (q * q);
    // φ'(r)/r, finite at the origin
    let first_over_r = -2.0 / q;
    -(second + first_over_r)
}

/// `f''(r)` by central differences at steps `h, h/2, h/4` combined with two
/// Richardson levels.
fn second_derivative(f: &impl Fn(f64) -> f64, r: f64, h: f64) -> f64 {
    let d = |h: f64| (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
    let (d1, d2, d3) = (d(h), d(h / 2.0), d(h / 4.0));
    let e1 = (4.0 * d2 - d1) / 3.0;
    let e2 = (4.0 * d3 - d2) / 3.0;
    (16.0 * e2 - e1) / 15.0
}

fn first_derivative(f: &impl Fn(f64) -> f64, r: f64, h: f64) -> f64 {
    let d = |h: f64| (f(r + h) - f(r - h)) / (2.0 * h);
    let (d1, d2, d3) = (d(h), d(h / 2.0), d(h / 4.0));
    let e1 = (4.0 * d2 - d1) / 3.0;
    let e2 = (4.0 * d3 - d2) / 3.0;
    (16.0 * e2 - e1) / 15.0
}

/// Residual of `−ΔS₀ − 8e^{2φ∞}S₀ = 4e^{2φ∞}(φ∞² + φ∞)` at `r > 0`.
pub fn s0_ode_residual(r: f64) -> f64 {
    let h = 0.04 * r.min(1.0).max(0.25) * r.max(1.0);
    let f = |x: f64| s0(x);
    let lap = second_derivative(&f, r, h) + first_derivative(&f, r, h) / r;
    let phi = phi_inf(r);
    let e = (2.0 * phi).exp();
    -lap - 8.0 * e * s0(r) - 4.0 * e * (phi * phi + phi)
}

pub fn bubble_identities(r_max: f64, quad_tol: f64) -> crate::Result<BubbleIdentities> {
    if !(r_max > 1.0 && r_max.is_finite()) {
        return Err(crate::Error::InvalidArgument(format!("r_max must exceed 1, got {r_max}")));
    }
    if !(quad_tol > 0.0) {
        return Err(crate::Error::InvalidArgument("quadrature tolerance must be positive".into()));
    }
    let phi_residual = (0..IDENTITY_SAMPLES)
        .map(|i| {
            let r = r_max * i as f64 / (IDENTITY_SAMPLES - 1) as f64;
            (neg_laplacian_phi(r) - 4.0 * (2.0 * phi_inf(r)).exp()).abs()
        })
        .fold(0.0, f64::max);
    let mass = 2.0 * PI * quad::integrate(|r| r * (2.0 * phi_inf(r)).exp(), 0.0, r_max, quad_tol).0;
    let mass_error = (mass - PI * r_max * r_max / (1.0 + r_max * r_max)).abs();
    // geometric radii in [0.05, min(r_max, 50)]
    let (lo, hi) = (0.05f64, r_max.min(50.0));
    let s0_residual = (0..S0_SAMPLES)
        .map(|i| {
            let r = lo * (hi / lo).powf(i as f64 / (S0_SAMPLES - 1) as f64);
            s0_ode_residual(r).abs()
        })
        .fold(0.0, f64::max);
    Ok(BubbleIdentities { r_max, phi_residual, mass, mass_error, s0_residual })
}

/// Least-squares fit `S₀(r) ≈ a·log(1/r²) + b`, optionally with the
/// remainder shape `c·log(r²)/r²` as an extra regressor.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct S0Fit {
    pub r_lo: f64,
    pub r_hi: f64,
    pub a: f64,
    pub b: f64,
    pub remainder: Option<f64>,
}

/// Samples are geometric in `r`. Without the remainder term the fit is
/// biased near `r = e³`, where `S₀` still differs from its asymptote by
/// about `0.1`.
pub fn fit_s0_asymptotics(r_lo: f64, r_hi: f64, samples: usize, with_remainder: bool) -> crate::Result<S0Fit> {
    if !(0.0 < r_lo && r_lo < r_hi && samples >= 3) {
        return Err(crate::Error::InvalidArgument("fit needs 0 < r_lo < r_hi and at least three samples".into()));
    }
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    let k = if with_remainder { 3 } else { 2 };
    for i in 0..samples {
        let r = r_lo * (r_hi / r_lo).powf(i as f64 / (samples - 1) as f64);
        let l = (r * r).ln();
        let row = [-l, 1.0, l / (r * r)];
        let y = s0(r);
        for a in 0..k {
            aty[a] += row[a] * y;
            for b in 0..k {
                ata[a][b] += row[a] * row[b];
            }
        }
    }
    if !with_remainder {
        ata[2][2] = 1.0;
    }
    let c = crate::potential::solve_dense(ata, aty)
        .ok_or_else(|| crate::Error::Domain("singular fit".into()))?;
    Ok(S0Fit { r_lo, r_hi, a: c[0], b: c[1], remainder: with_remainder.then_some(c[2]) })
}

/// Energy scale `E = γ²(S^δ − |Ω|)` used when no global solution fixes `E`.
pub fn default_energy(gamma: f64, level_minus_area: f64) -> f64 {
    gamma * gamma * level_minus_area
}

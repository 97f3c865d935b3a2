//! Concentrating test functions `φ_ε = f_ε(G_{Ω,y₀})` and the lower bound
//! they predict for the perturbed functional.
//!
//! With `R = −ln ε`, `t_ε = (1/2π) ln(1/(Rε))` and `G` the Green function
//! with pole at `y₀`,
//!
//! ```text
//! f_ε(t) = C + C⁻¹(−(1/4π) ln(1 + πε⁻²e^{−4πt}) + A)   for t ≥ t_ε
//! f_ε(t) = C⁻¹ t                                        for t < t_ε
//! ```
//!
//! where `C² = R/2π + ln π/4π − 1/4π`. The asymptotic value of `A` leaves
//! `f_ε` with a jump of order `R⁻²` at `t_ε`; the field is built with the
//! value of `A` that makes `f_ε` continuous, and is then rescaled to unit
//! Dirichlet energy on the mesh.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fem::{dist, Field, Laplacian, Mesh, Point};
use crate::functional::PerturbParams;
use crate::potential::{GreenFunction, PotentialReport};
use crate::{Error, Result};

/// Default ε-grid `{e⁻⁶, e⁻⁸, e⁻¹⁰, e⁻¹²}`, as the exponents `−ln ε`.
pub const STANDARD_GRID: [f64; 4] = [6.0, 8.0, 10.0, 12.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct MoserConstants {
    pub epsilon: f64,
    pub R: f64,
    pub t_eps: f64,
    pub C_sq: f64,
    /// Asymptotic value `−C² − (1/2π) ln ε + (1/4π) ln π`.
    pub A: f64,
    /// Value of `A` making `f_ε` continuous at `t_ε`.
    pub A_continuous: f64,
}

pub fn moser_constants(epsilon: f64) -> Result<MoserConstants> {
    if !(epsilon > 0.0 && epsilon < (-1.0f64).exp()) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1/e), got {epsilon}")));
    }
    let r = -epsilon.ln();
    let t_eps = (r - r.ln()) / (2.0 * PI);
    let c_sq = r / (2.0 * PI) + PI.ln() / (4.0 * PI) - 1.0 / (4.0 * PI);
    let a = -c_sq + r / (2.0 * PI) + PI.ln() / (4.0 * PI);
    // πε⁻²e^{−4πt_ε} = πR²
    let a_cont = t_eps - c_sq + (PI * r * r).ln_1p() / (4.0 * PI);
    Ok(MoserConstants { epsilon, R: r, t_eps, C_sq: c_sq, A: a, A_continuous: a_cont })
}

impl MoserConstants {
    pub fn c(&self) -> f64 {
        self.C_sq.sqrt()
    }

    /// Inner branch of `f_ε` (valid for `t ≥ t_ε`, evaluated anywhere).
    pub fn inner(&self, t: f64) -> f64 {
        let c = self.c();
        // ln(1 + πε⁻²e^{−4πt}) with the exponent kept in log form
        let log_arg = PI.ln() + 2.0 * self.R - 4.0 * PI * t;
        let l = if log_arg > 30.0 { log_arg + (-log_arg).exp().ln_1p() } else { log_arg.exp().ln_1p() };
        c + (-(l) / (4.0 * PI) + self.A_continuous) / c
    }

    /// Outer branch `t / C`.
    pub fn outer(&self, t: f64) -> f64 {
        t / self.c()
    }

    pub fn f(&self, t: f64) -> f64 {
        if t >= self.t_eps {
            self.inner(t)
        } else {
            self.outer(t)
        }
    }
}

/// Normalized test function with its construction data.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub field: Field,
    pub constants: MoserConstants,
    pub center: Point,
    /// `‖∇φ_ε‖` before rescaling.
    pub prenorm_norm: f64,
}

fn green_at(lap: &Laplacian, center: Point) -> Result<GreenFunction> {
    let mesh = lap.mesh();
    let v = mesh.nearest_vertex(center);
    if dist(mesh.vertex(v), center) <= 1e-12 * mesh.max_edge_length() && !mesh.is_boundary(v) {
        GreenFunction::at_vertex(lap, v)
    } else {
        GreenFunction::at_point(lap, center)
    }
}

pub fn test_function(lap: &Laplacian, epsilon: f64, center: Point) -> Result<TestFunction> {
    let constants = moser_constants(epsilon)?;
    let mesh = lap.mesh();
    let g = green_at(lap, center)?.nodal(mesh);
    let raw: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(i, &t)| if mesh.is_boundary(i) { 0.0 } else { constants.f(t.max(0.0)) })
        .collect();
    let prenorm_norm = lap.h1_seminorm(&raw);
    if !(prenorm_norm > 0.0) {
        return Err(Error::Domain("test function vanishes on this mesh".into()));
    }
    let field = Field::new(raw).scaled(1.0 / prenorm_norm);
    Ok(TestFunction { field, constants, center, prenorm_norm })
}

/// `φ_ε` centred at `center`, normalized to `‖∇φ_ε‖ = 1`.
pub fn build_test_function(mesh: &Mesh, epsilon: f64, center: Point) -> Result<Field> {
    let lap = Laplacian::new(mesh)?;
    Ok(test_function(&lap, epsilon, center)?.field)
}

/// Terms of the predicted lower bound
/// `|Ω| + πe sup r² + 4π∫G²/C² − λ∫G^p/C^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub epsilon: f64,
    pub lambda: f64,
    pub p: f64,
    pub s_delta: f64,
    pub int_g2: f64,
    pub int_gp: f64,
    pub g2_term: f64,
    pub lambda_term: f64,
    /// `(4π − λ)∫G²/C²`, reported for `p = 2` only.
    pub combined_p2: Option<f64>,
    pub prediction: f64,
}

impl LowerBound {
    pub fn margin(&self) -> f64 {
        self.prediction - self.s_delta
    }
}

/// Green-function integrals needed by the lower bound, computed once per
/// mesh and reusable across ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenIntegrals {
    pub p: f64,
    pub int_g2: f64,
    pub int_gp: f64,
}

pub fn green_integrals(lap: &Laplacian, center: Point, p: f64) -> Result<GreenIntegrals> {
    let g = green_at(lap, center)?;
    let mesh = lap.mesh();
    let int_g2 = g.integrate_power(mesh, 2.0);
    let int_gp = if p == 2.0 { int_g2 } else { g.integrate_power(mesh, p) };
    Ok(GreenIntegrals { p, int_g2, int_gp })
}

pub fn lower_bound_from(
    ints: &GreenIntegrals,
    epsilon: f64,
    lambda: f64,
    s_delta: f64,
) -> Result<LowerBound> {
    let k = moser_constants(epsilon)?;
    let p = ints.p;
    let g2_term = 4.0 * PI * ints.int_g2 / k.C_sq;
    let lambda_term = lambda * ints.int_gp / k.C_sq.powf(p / 2.0);
    Ok(LowerBound {
        epsilon,
        lambda,
        p,
        s_delta,
        int_g2: ints.int_g2,
        int_gp: ints.int_gp,
        g2_term,
        lambda_term,
        combined_p2: (p == 2.0).then(|| (4.0 * PI - lambda) * ints.int_g2 / k.C_sq),
        prediction: s_delta + g2_term - lambda_term,
    })
}

pub fn lower_bound_prediction(
    lap: &Laplacian,
    epsilon: f64,
    params: &PerturbParams,
    report: &PotentialReport,
) -> Result<LowerBound> {
    let ints = green_integrals(lap, report.harmonic_center, params.p)?;
    lower_bound_from(&ints, epsilon, params.lambda, report.concentration_level)
}

/// Smallest `C²` beyond which the `C⁻²` term beats the `C⁻ᵖ` term, i.e. the
/// root of `4π∫G²/C² = λ∫G^p/C^p`; `None` unless `p > 2` and `λ > 0`.
pub fn crossover_c_sq(ints: &GreenIntegrals, lambda: f64) -> Option<f64> {
    if !(ints.p > 2.0 && lambda > 0.0) {
        return None;
    }
    let ratio = lambda * ints.int_gp / (4.0 * PI * ints.int_g2);
    Some(ratio.powf(1.0 / (ints.p / 2.0 - 1.0)))
}

/// `ε` whose `C²` equals `c_sq`.
pub fn epsilon_for_c_sq(c_sq: f64) -> f64 {
    let r = 2.0 * PI * (c_sq - PI.ln() / (4.0 * PI) + 1.0 / (4.0 * PI));
    (-r).exp()
}

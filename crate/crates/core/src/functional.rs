//! The perturbed Trudinger–Moser functional
//!
//! ```text
//! J(u) = ∫_Ω (e^{4πu²} [− 1] − λ|u|^p) dx
//! ```
//!
//! together with its first variation, the H¹₀ Riesz representative of that
//! variation, the Euler–Lagrange residual and the energy split.
//!
//! All integrals use the same triangle quadrature (three interior points by
//! default), so discrete identities between them hold to rounding.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fem::{bary_point, Density, Field, Laplacian, Mesh, QuadratureRule, SolveStats};
use crate::{Error, Result};

/// Exponent cap: `e^{4πu²}` is evaluated as `e^{min(4πu², EXP_CAP)}`.
pub const EXP_CAP: f64 = 700.0;

/// Whether the integrand carries the `− 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    WithMinusOne,
    #[default]
    WithoutMinusOne,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbParams {
    pub lambda: f64,
    pub p: f64,
    pub variant: Variant,
}

impl PerturbParams {
    pub fn new(lambda: f64, p: f64) -> Result<Self> {
        let params = PerturbParams { lambda, p, variant: Variant::default() };
        params.validate()?;
        Ok(params)
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be finite, got {}", self.lambda)));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidArgument(format!("p must be finite and >= 1, got {}", self.p)));
        }
        Ok(())
    }
}

/// Value of `J` with its two parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    /// `∫ e^{4πu²}` (or `∫ (e^{4πu²} − 1)` for the variant with `− 1`).
    pub exp_part: f64,
    /// `∫ |u|^p`.
    pub power_part: f64,
    /// Some quadrature point hit the exponent cap.
    pub overflow: bool,
}

/// Terms of `‖∇v‖² = I_E − I_P` for `v = 2√π u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct EnergySplit {
    pub I_E: f64,
    pub I_P: f64,
    pub E: f64,
    pub gradient_norm_sq: f64,
}

fn capped_exp(u: f64) -> (f64, bool) {
    let a = 4.0 * PI * u * u;
    if a > EXP_CAP {
        (EXP_CAP.exp(), true)
    } else {
        (a.exp(), false)
    }
}

/// `|u|^{p−2} u`, taken as 0 at `u = 0`.
fn signed_power(u: f64, p: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.abs().powf(p - 1.0).copysign(u)
    }
}

/// `g = 8πu e^{4πu²} − pλ|u|^{p−2}u`.
pub fn density_at(u: f64, params: &PerturbParams) -> f64 {
    8.0 * PI * u * capped_exp(u).0 - params.p * params.lambda * signed_power(u, params.p)
}

/// The functional bound to a mesh, its stiffness matrix and a quadrature
/// rule.
#[derive(Clone, Copy, Debug)]
pub struct Functional<'a> {
    lap: &'a Laplacian<'a>,
    params: PerturbParams,
    rule: QuadratureRule,
}

impl<'a> Functional<'a> {
    pub fn new(lap: &'a Laplacian<'a>, params: PerturbParams) -> Result<Self> {
        params.validate()?;
        Ok(Functional { lap, params, rule: QuadratureRule::default() })
    }

    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn laplacian(&self) -> &'a Laplacian<'a> {
        self.lap
    }

    pub fn mesh(&self) -> &'a Mesh {
        self.lap.mesh()
    }

    pub fn params(&self) -> PerturbParams {
        self.params
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    /// Sums `f(u_q)` over all quadrature points with weights `w_q·|T|`.
    fn quad(&self, u: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
        let mesh = self.mesh();
        let mut total = 0.0;
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let mut s = 0.0;
            for (b, w) in self.rule.points() {
                s += w * f(b[0] * u[tri[0]] + b[1] * u[tri[1]] + b[2] * u[tri[2]]);
            }
            total += mesh.triangle_area(t) * s;
        }
        total
    }

    pub fn evaluate(&self, u: &[f64]) -> Evaluation {
        let minus_one = self.params.variant == Variant::WithMinusOne;
        let mut overflow = false;
        let exp_part = self.quad(u, |v| {
            let (e, o) = capped_exp(v);
            overflow |= o;
            if minus_one {
                if o {
                    e - 1.0
                } else {
                    (4.0 * PI * v * v).exp_m1()
                }
            } else {
                e
            }
        });
        let power_part = self.quad(u, |v| v.abs().powf(self.params.p));
        Evaluation { value: exp_part - self.params.lambda * power_part, exp_part, power_part, overflow }
    }

    /// First variation density sampled at the quadrature points.
    pub fn density(&self, u: &[f64]) -> Density {
        let mesh = self.mesh();
        let mut values = Vec::with_capacity(mesh.num_triangles() * self.rule.len());
        for tri in mesh.triangles() {
            for (b, _) in self.rule.points() {
                let v = b[0] * u[tri[0]] + b[1] * u[tri[1]] + b[2] * u[tri[2]];
                values.push(density_at(v, &self.params));
            }
        }
        Density::AtQuadrature { rule: self.rule, values }
    }

    /// `∫ g·φ`.
    pub fn directional_derivative(&self, u: &[f64], phi: &[f64]) -> f64 {
        let b = self.density(u).load_vector(self.mesh());
        b.iter().zip(phi).map(|(a, c)| a * c).sum()
    }

    /// Riesz representative `w ∈ H¹₀` of the first variation, warm-started
    /// from `guess` when given.
    pub fn gradient(&self, u: &[f64], guess: Option<&[f64]>) -> Result<(Field, SolveStats)> {
        let load = self.density(u).load_vector(self.mesh());
        self.lap.solve_load(&load, None, guess)
    }

    /// `E = 4π∫(u²e^{4πu²} − (p/8π)λ|u|^p)`, which equals `½∫g·u`.
    pub fn normalizer(&self, u: &[f64]) -> f64 {
        let (lam, p) = (self.params.lambda, self.params.p);
        4.0 * PI * self.quad(u, |v| v * v * capped_exp(v).0 - p / (8.0 * PI) * lam * v.abs().powf(p))
    }

    /// Relative Euler–Lagrange residual `‖u − w/2E‖ / ‖w/2E‖` in the H¹₀
    /// norm, together with `E`.
    pub fn residual_with(&self, u: &[f64], w: &[f64]) -> Result<(f64, f64)> {
        let e = self.normalizer(u);
        if !(e > 0.0) {
            return Err(Error::DegenerateNormalizer(e));
        }
        let mu = 1.0 / (2.0 * e);
        let diff: Vec<f64> = u.iter().zip(w).map(|(a, b)| a - mu * b).collect();
        let den = mu * self.lap.h1_seminorm(w);
        Ok((self.lap.h1_seminorm(&diff) / den, e))
    }

    pub fn residual(&self, u: &[f64]) -> Result<(f64, f64)> {
        let (w, _) = self.gradient(u, None)?;
        self.residual_with(u, &w)
    }

    pub fn energy_split(&self, u: &[f64]) -> Result<EnergySplit> {
        let e = self.normalizer(u);
        if !(e > 0.0) {
            return Err(Error::DegenerateNormalizer(e));
        }
        let (lam, p) = (self.params.lambda, self.params.p);
        let c = 2.0 * PI.sqrt();
        // integrals in the variable v = 2√π u
        let iv_exp = self.quad(u, |x| {
            let v = c * x;
            v * v * capped_exp(x).0
        });
        let iv_pow = self.quad(u, |x| (c * x).abs().powf(p));
        let i_e = 4.0 * PI / e * iv_exp;
        let i_p = 4.0 * PI / e * p / (2.0 * (4.0 * PI).powf(p / 2.0)) * lam * iv_pow;
        let gradient_norm_sq = 4.0 * PI * self.lap.stiffness().quad_form(u);
        Ok(EnergySplit { I_E: i_e, I_P: i_p, E: e, gradient_norm_sq })
    }

    /// `g` at an arbitrary point of triangle `t` (used for diagnostics).
    pub fn density_in_triangle(&self, u: &[f64], t: usize, b: &[f64; 3]) -> (crate::Point, f64) {
        let mesh = self.mesh();
        let tri = mesh.triangles()[t];
        let v = b[0] * u[tri[0]] + b[1] * u[tri[1]] + b[2] * u[tri[2]];
        (bary_point(&mesh.triangle_points(t), b), density_at(v, &self.params))
    }
}

fn check_field(mesh: &Mesh, u: &[f64]) -> Result<()> {
    if u.len() != mesh.num_vertices() {
        return Err(Error::InvalidArgument(format!(
            "field has {} values for {} vertices",
            u.len(),
            mesh.num_vertices()
        )));
    }
    if !Field::new(u.to_vec()).is_dirichlet_zero(mesh) {
        return Err(Error::InvalidArgument("field does not vanish on the boundary".into()));
    }
    Ok(())
}

/// `J(u)`; one-shot form that assembles the stiffness matrix.
pub fn evaluate(mesh: &Mesh, u: &[f64], params: &PerturbParams) -> Result<Evaluation> {
    check_field(mesh, u)?;
    let lap = Laplacian::new(mesh)?;
    Ok(Functional::new(&lap, *params)?.evaluate(u))
}

pub fn gradient_density(mesh: &Mesh, u: &[f64], params: &PerturbParams) -> Result<Density> {
    check_field(mesh, u)?;
    let lap = Laplacian::new(mesh)?;
    Ok(Functional::new(&lap, *params)?.density(u))
}

pub fn riesz_gradient(mesh: &Mesh, u: &[f64], params: &PerturbParams) -> Result<Field> {
    check_field(mesh, u)?;
    let lap = Laplacian::new(mesh)?;
    Ok(Functional::new(&lap, *params)?.gradient(u, None)?.0)
}

/// Euler–Lagrange residual and normalizer `E` of `u` as given. No
/// normalization is applied: rescaling `u` changes both `E` and the
/// residual. For `‖∇u‖ = 1` the residual is the sine of the H¹₀ angle
/// between `u` and its Riesz gradient.
pub fn el_residual(mesh: &Mesh, u: &[f64], params: &PerturbParams) -> Result<(f64, f64)> {
    check_field(mesh, u)?;
    let lap = Laplacian::new(mesh)?;
    Functional::new(&lap, *params)?.residual(u)
}

pub fn energy_decompose(mesh: &Mesh, u: &[f64], params: &PerturbParams) -> Result<EnergySplit> {
    check_field(mesh, u)?;
    let lap = Laplacian::new(mesh)?;
    Functional::new(&lap, *params)?.energy_split(u)
}

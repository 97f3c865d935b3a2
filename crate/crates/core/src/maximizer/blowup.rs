use std::f64::consts::PI;

use serde::Serialize;

use super::MaximizeResult;
use crate::fem::{dist, Laplacian, Locator};
use crate::potential::{GreenFunction, PotentialReport};
use crate::radial::{blowup_radius, phi_inf};
use crate::{Error, Result};

const N_RADII: usize = 41;
const N_ANGLES: usize = 32;
const R_SAMPLE_CAP: f64 = 10.0;

/// Angular statistics of the rescaled profile on one circle `|y| = r`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileSample {
    pub r: f64,
    /// Mean over the circle of `γ(v(x_peak + r_k y) − γ)`.
    pub phi_mean: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    /// Mean of `v(x_peak + r_k y)/γ`.
    pub psi_mean: f64,
    pub phi_inf: f64,
}

/// Distance between `γv` and a multiple of the Green function away from the
/// peak, with `v = 2√π u`. The expected multiple is `4π` for the Green
/// function normalized by `−ΔG = δ`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GreenDeviation {
    pub rho: f64,
    pub expected_scale: f64,
    /// Least-squares multiple of `G` closest to `γv`.
    pub fitted_scale: f64,
    /// `‖γv − 4πG‖ / ‖4πG‖` on `Ω ∖ B_ρ`, lumped L².
    pub relative_l2: f64,
    /// Same with the fitted multiple.
    pub relative_l2_fitted: f64,
}

#[derive(Clone, Debug, Serialize)]
#[allow(non_snake_case)]
pub struct BlowupReport {
    pub gamma: f64,
    pub E: f64,
    pub r_k: f64,
    pub R_sample: f64,
    /// `false` when the blow-up scale does not fit inside the domain.
    pub concentrated: bool,
    pub profile: Vec<ProfileSample>,
    /// `sup |φ_k − φ∞|` over the sampled disk.
    pub phi_inf_sup: f64,
    /// Same restricted to `|y| ≤ 2`.
    pub phi_inf_sup_r2: f64,
    /// `(∫_{|y|≤R_sample} |φ_k − φ∞|²)^{1/2}`.
    pub phi_inf_l2: f64,
    /// `E/γ²` next to its limit `S^δ − |Ω|`.
    pub energy_ratio: f64,
    pub energy_ratio_limit: f64,
    pub green: Option<GreenDeviation>,
}

pub fn blowup_diagnostics(lap: &Laplacian, result: &MaximizeResult, report: &PotentialReport) -> Result<BlowupReport> {
    let mesh = lap.mesh();
    let gamma = result.gamma;
    let e = result.energy.E;
    if !(result.peak_value > 0.0 && e > 0.0) {
        return Err(Error::Domain("blow-up diagnostics need a positive peak and E > 0".into()));
    }
    let r_k = blowup_radius(e, gamma);
    let x0 = result.peak_location;
    let r_sample = R_SAMPLE_CAP.min(mesh.distance_to_boundary(x0) / (2.0 * r_k));
    let concentrated = r_sample >= 1.0;
    let scale = 2.0 * PI.sqrt();
    let u = &result.u;

    let mut profile = Vec::new();
    let (mut sup, mut sup2, mut l2sq) = (0.0f64, 0.0f64, 0.0);
    if concentrated {
        let loc = Locator::new(mesh);
        let dr = r_sample / (N_RADII - 1) as f64;
        for k in 0..N_RADII {
            let r = k as f64 * dr;
            let target = phi_inf(r);
            let (mut mean, mut lo, mut hi, mut psi, mut sq) = (0.0, f64::INFINITY, f64::NEG_INFINITY, 0.0, 0.0);
            let n_ang = if k == 0 { 1 } else { N_ANGLES };
            for a in 0..n_ang {
                let th = 2.0 * PI * a as f64 / N_ANGLES as f64;
                let v = if k == 0 {
                    scale * u[result.peak_vertex]
                } else {
                    let y = [x0[0] + r_k * r * th.cos(), x0[1] + r_k * r * th.sin()];
                    scale * loc.interpolate(u, y).unwrap_or(0.0)
                };
                let phi = gamma * (v - gamma);
                mean += phi;
                lo = lo.min(phi);
                hi = hi.max(phi);
                psi += v / gamma;
                let d = (phi - target).abs();
                sq += d * d;
                sup = sup.max(d);
                if r <= 2.0 + 1e-12 {
                    sup2 = sup2.max(d);
                }
            }
            let n = n_ang as f64;
            // trapezoid in r, uniform in angle
            let w = if k == 0 || k == N_RADII - 1 { 0.5 * dr } else { dr };
            l2sq += w * r * 2.0 * PI * sq / n;
            profile.push(ProfileSample { r, phi_mean: mean / n, phi_min: lo, phi_max: hi, psi_mean: psi / n, phi_inf: target });
        }
    }
    let nan_if = |x: f64| if concentrated { x } else { f64::NAN };

    let green = if mesh.is_boundary(result.peak_vertex) {
        None
    } else {
        let g = GreenFunction::at_vertex(lap, result.peak_vertex)?.nodal(mesh);
        let rho = 10.0 * mesh.max_edge_length();
        let mut lumped = vec![0.0; mesh.num_vertices()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let a = mesh.triangle_area(t) / 3.0;
            for &i in tri {
                lumped[i] += a;
            }
        }
        let (mut vg, mut gg, mut vv) = (0.0, 0.0, 0.0);
        let mut any = false;
        for i in 0..mesh.num_vertices() {
            if dist(mesh.vertex(i), x0) <= rho || !g[i].is_finite() {
                continue;
            }
            any = true;
            let v = gamma * scale * u[i];
            vg += lumped[i] * v * g[i];
            gg += lumped[i] * g[i] * g[i];
            vv += lumped[i] * v * v;
        }
        if any && gg > 0.0 {
            let target = 4.0 * PI;
            let kappa = vg / gg;
            let dev = |c: f64| ((vv - 2.0 * c * vg + c * c * gg).max(0.0) / (c * c * gg)).sqrt();
            Some(GreenDeviation {
                rho,
                expected_scale: target,
                fitted_scale: kappa,
                relative_l2: dev(target),
                relative_l2_fitted: dev(kappa),
            })
        } else {
            None
        }
    };

    Ok(BlowupReport {
        gamma,
        E: e,
        r_k,
        R_sample: r_sample,
        concentrated,
        profile,
        phi_inf_sup: nan_if(sup),
        phi_inf_sup_r2: nan_if(sup2),
        phi_inf_l2: nan_if(l2sq.sqrt()),
        energy_ratio: e / (gamma * gamma),
        energy_ratio_limit: report.concentration_level - report.area,
        green,
    })
}

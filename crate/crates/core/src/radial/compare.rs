use std::f64::consts::PI;

use serde::Serialize;

use super::RadialProfile;
use crate::fem::{Laplacian, Locator};
use crate::maximizer::MaximizeResult;
use crate::{Error, Result};

const N_ANGLES: usize = 32;

/// Spherical average `v̄` of `v = 2√π u` around the peak of a 2D maximizer
/// next to a radial profile shot with the same `γ` and `E`.
#[derive(Clone, Debug, Serialize)]
pub struct ProfileComparison {
    pub radii: Vec<f64>,
    pub v_bar: Vec<f64>,
    pub v_radial: Vec<f64>,
    /// `sup |v̄ − V|` over the compared radii.
    pub sup_diff: f64,
    /// `γ · sup |v̄ − V|`; small when the difference is `o(1/γ)`.
    pub scaled_sup_diff: f64,
}

/// Diagnostic only: compares on profile radii that stay inside the mesh.
pub fn compare_with_maximizer(
    lap: &Laplacian,
    result: &MaximizeResult,
    profile: &RadialProfile,
) -> Result<ProfileComparison> {
    let mesh = lap.mesh();
    let x0 = result.peak_location;
    let reach = 0.95 * mesh.distance_to_boundary(x0);
    let loc = Locator::new(mesh);
    let scale = 2.0 * PI.sqrt();
    let (mut radii, mut v_bar, mut v_radial) = (Vec::new(), Vec::new(), Vec::new());
    let mut sup = 0.0f64;
    for (i, &r) in profile.grid.iter().enumerate() {
        if r > reach {
            break;
        }
        let mean = if r == 0.0 {
            scale * result.u[result.peak_vertex]
        } else {
            let mut acc = 0.0;
            for a in 0..N_ANGLES {
                let th = 2.0 * PI * a as f64 / N_ANGLES as f64;
                let y = [x0[0] + r * th.cos(), x0[1] + r * th.sin()];
                acc += scale * loc.interpolate(&result.u, y).unwrap_or(0.0);
            }
            acc / N_ANGLES as f64
        };
        sup = sup.max((mean - profile.V[i]).abs());
        radii.push(r);
        v_bar.push(mean);
        v_radial.push(profile.V[i]);
    }
    if radii.is_empty() {
        return Err(Error::Domain("no profile radius fits inside the mesh".into()));
    }
    Ok(ProfileComparison { radii, v_bar, v_radial, sup_diff: sup, scaled_sup_diff: profile.gamma * sup })
}

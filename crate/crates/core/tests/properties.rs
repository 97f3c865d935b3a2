use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;
use tmlab::fem::{
    build_disk_mesh, build_rect_mesh, read_mesh, write_mesh, Density, Field, Laplacian, Mesh,
};
use tmlab::functional::{Functional, PerturbParams, Variant};
use tmlab::maximizer::{maximize, normalize, MaximizeOptions};
use tmlab::moser::moser_constants;
use tmlab::potential::{concentration_level, GreenFunction, PotentialReport};
use tmlab::radial::{blowup_radius, phi_inf, shoot_radial, ShootOptions};
use tmlab::threshold::predicted_deficit_from;

fn disk3() -> &'static Mesh {
    static M: OnceLock<Mesh> = OnceLock::new();
    M.get_or_init(|| build_disk_mesh(3).unwrap())
}

fn disk3_report() -> &'static PotentialReport {
    static R: OnceLock<PotentialReport> = OnceLock::new();
    R.get_or_init(|| concentration_level(disk3()).unwrap())
}

/// Rectangle mesh with interior vertices jittered by up to `jitter·h`.
fn jittered_rect(nx: usize, ny: usize, jitter: f64, seed: u64) -> Mesh {
    let base = build_rect_mesh(1.0, 1.0, nx, ny).unwrap();
    let h = 1.0 / nx.max(ny) as f64;
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let verts: Vec<[f64; 2]> = base
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, &p)| if base.is_boundary(i) { p } else { [p[0] + jitter * h * next(), p[1] + jitter * h * next()] })
        .collect();
    Mesh::new(verts, base.triangles().to_vec()).unwrap()
}

fn random_field(mesh: &Mesh, coeffs: &[f64]) -> Field {
    Field::interpolate_dirichlet(mesh, |x| {
        coeffs.iter().enumerate().map(|(k, c)| c * ((k as f64 + 1.0) * 2.3 * x[0] + k as f64 * 1.7 * x[1]).sin()).sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stiffness_form_matches_triangle_gradients(
        nx in 2usize..7, ny in 2usize..7, seed in any::<u64>(),
        coeffs in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let m = jittered_rect(nx, ny, 0.2, seed);
        let lap = Laplacian::new(&m).unwrap();
        let u = Field::interpolate(&m, |x| {
            coeffs[0] + coeffs[1] * x[0] + coeffs[2] * x[1] * x[1] + coeffs[3] * (3.0 * x[0] * x[1]).sin()
        });
        let mut direct = 0.0;
        for (t, tri) in m.triangles().iter().enumerate() {
            let p = m.triangle_points(t);
            let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
            let (du1, du2) = (u[tri[1]] - u[tri[0]], u[tri[2]] - u[tri[0]]);
            let gx = (du1 * (p[2][1] - p[0][1]) - du2 * (p[1][1] - p[0][1])) / det;
            let gy = (du2 * (p[1][0] - p[0][0]) - du1 * (p[2][0] - p[0][0])) / det;
            direct += (gx * gx + gy * gy) * m.triangle_area(t);
        }
        let form = lap.stiffness().quad_form(&u);
        prop_assert!((form - direct).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn discrete_maximum_principle(
        level in 1i32..4,
        f in prop::collection::vec(0.0f64..3.0, 3),
        g in prop::collection::vec(-2.0f64..2.0, 2),
    ) {
        let m = build_disk_mesh(level).unwrap();
        let lap = Laplacian::new(&m).unwrap();
        let rhs = Density::Nodal(m.vertices().iter().map(|x| f[0] + f[1] * x[0] * x[0] + f[2] * x[1].abs()).collect());
        let bv: Vec<f64> = m.vertices().iter().map(|x| g[0] + g[1] * x[0]).collect();
        let w = lap.solve_dirichlet(&rhs, &bv).unwrap();
        let bmin = m.boundary_vertices().iter().map(|&i| bv[i]).fold(f64::INFINITY, f64::min);
        prop_assert!(w.min() >= bmin - 1e-9);
    }

    #[test]
    fn mesh_text_round_trip(nx in 1usize..6, ny in 1usize..6, seed in any::<u64>()) {
        let m = jittered_rect(nx + 1, ny + 1, 0.3, seed);
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        prop_assert_eq!(back.vertices(), m.vertices());
        prop_assert_eq!(back.triangles(), m.triangles());
        let mut again = Vec::new();
        write_mesh(&back, &mut again).unwrap();
        prop_assert_eq!(buf, again);
    }

    #[test]
    fn green_is_nonnegative_and_vanishes_on_boundary(pick in any::<prop::sample::Index>()) {
        let m = disk3();
        let interior = m.interior_vertices();
        let v = interior[pick.index(interior.len())];
        let lap = Laplacian::new(m).unwrap();
        let g = GreenFunction::at_vertex(&lap, v).unwrap().nodal(m);
        for i in 0..m.num_vertices() {
            if m.is_boundary(i) {
                prop_assert_eq!(g[i], 0.0);
            } else {
                prop_assert!(g[i] >= 0.0);
            }
        }
    }

    #[test]
    fn functional_variant_parity_and_lambda_monotonicity(
        coeffs in prop::collection::vec(-0.3f64..0.3, 3),
        lambda in 0.0f64..50.0, dl in 0.0f64..10.0, p in 1.0f64..4.0,
    ) {
        let m = disk3();
        let lap = Laplacian::new(m).unwrap();
        let u = random_field(m, &coeffs);
        let params = PerturbParams::new(lambda, p).unwrap();
        let without = Functional::new(&lap, params).unwrap();
        let with = Functional::new(&lap, params.with_variant(Variant::WithMinusOne)).unwrap();
        let a = without.evaluate(&u).value;
        prop_assert!((a - with.evaluate(&u).value - m.area()).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert_eq!(a, without.evaluate(&u.scaled(-1.0)).value);
        let more = Functional::new(&lap, PerturbParams::new(lambda + dl, p).unwrap()).unwrap();
        prop_assert!(more.evaluate(&u).value <= a);
    }

    #[test]
    fn normalize_is_a_projection(coeffs in prop::collection::vec(-2.0f64..2.0, 3)) {
        prop_assume!(coeffs.iter().any(|c| c.abs() > 1e-3));
        let m = disk3();
        let lap = Laplacian::new(m).unwrap();
        let f = Functional::new(&lap, PerturbParams::new(0.0, 2.0).unwrap()).unwrap();
        let u = random_field(m, &coeffs);
        let a = normalize(&f, &u).unwrap();
        let b = normalize(&f, &a).unwrap();
        prop_assert!((lap.h1_seminorm(&a) - 1.0).abs() <= 1e-12);
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x - y).abs() <= 1e-14 * x.abs().max(1e-12));
        }
    }

    #[test]
    fn blowup_radius_identity(e in 0.1f64..1e3, gamma in 0.5f64..20.0) {
        let r = blowup_radius(e, gamma);
        let rhs = (e / PI) * gamma.powi(-2) * (-gamma * gamma).exp();
        prop_assert!((r * r - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn moser_profile_is_continuous(k in 1.05f64..40.0) {
        let c = moser_constants((-k).exp()).unwrap();
        prop_assert!((c.inner(c.t_eps) - c.outer(c.t_eps)).abs() <= 1e-6);
    }

    #[test]
    fn deficit_algebra(
        int_gp in 0.01f64..1.0, p in 1.0f64..2.0, lambda in 0.1f64..100.0,
        gamma in 2.0f64..10.0, dl in 0.1f64..10.0, dg in 0.1f64..5.0,
    ) {
        let level = PI * 1f64.exp();
        let base = predicted_deficit_from(int_gp, level, p, lambda, gamma, 0.0).unwrap();
        let more_l = predicted_deficit_from(int_gp, level, p, lambda + dl, gamma, 0.0).unwrap();
        let more_g = predicted_deficit_from(int_gp, level, p, lambda, gamma + dg, 0.0).unwrap();
        prop_assert!(base.C1_term > 0.0);
        prop_assert!(more_l.predicted_norm_sq < base.predicted_norm_sq);
        prop_assert!(more_g.C1_term < base.C1_term);
    }

    #[test]
    fn bubble_identity_pointwise(r in 0.0f64..100.0) {
        // −Δφ∞ from the radial derivatives of −log(1 + r²)
        let q = 1.0 + r * r;
        let lap = -2.0 * (1.0 - r * r) / (q * q) - 2.0 / q;
        prop_assert!((-lap - 4.0 * (2.0 * phi_inf(r)).exp()).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn radial_profile_invariants(gamma in 3.0f64..7.0, lambda in 0.0f64..5.0, p in 1.0f64..3.0, delta in 0.2f64..0.8) {
        let params = PerturbParams::new(lambda, p).unwrap();
        let e = gamma * gamma * PI * 1f64.exp();
        let prof = shoot_radial(gamma, e, &params, delta, &ShootOptions::default()).unwrap();
        prop_assert!(!prof.sign_change);
        prop_assert_eq!(prof.V[0], gamma);
        prop_assert!(prof.V.windows(2).all(|w| w[1] < w[0]));
        let t = *prof.t.last().unwrap();
        prop_assert!((t - delta * gamma * gamma).abs() <= 1e-10 * t);
    }

    #[test]
    fn ascent_contracts(coeffs in prop::collection::vec(0.1f64..1.0, 2), lambda in 0.0f64..5.0) {
        let m = build_disk_mesh(2).unwrap();
        let lap = Laplacian::new(&m).unwrap();
        let f = Functional::new(&lap, PerturbParams::new(lambda, 2.0).unwrap()).unwrap();
        let init = Field::interpolate_dirichlet(&m, |x| {
            (1.0 - x[0] * x[0] - x[1] * x[1]) * (coeffs[0] + coeffs[1] * x[0])
        });
        let opts = MaximizeOptions { record_history: true, ..Default::default() };
        let r = maximize(&f, &init, &opts).unwrap();
        prop_assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!((lap.h1_seminorm(&r.u) - 1.0).abs() <= 1e-10);
        let neg = maximize(&f, &init.scaled(-1.0), &opts).unwrap();
        prop_assert_eq!(neg.J, r.J);
    }
}

#[test]
fn harmonic_radius_is_the_exponential_of_robin() {
    let rep = disk3_report();
    let m = disk3();
    for i in 0..m.num_vertices() {
        let expected = (-2.0 * PI * rep.robin[i]).exp();
        assert!((rep.harmonic_radius[i] - expected).abs() <= 1e-15 * expected.max(1e-300));
    }
    assert!(rep.concentration_level > rep.area);
}

#[test]
fn concentration_level_exceeds_area_on_rectangles() {
    for (w, h, nx, ny) in [(1.0, 1.0, 3, 3), (2.0, 0.5, 8, 2), (1.0, 3.0, 4, 9)] {
        let m = build_rect_mesh(w, h, nx, ny).unwrap();
        let rep = concentration_level(&m).unwrap();
        assert!(rep.concentration_level > rep.area);
    }
}

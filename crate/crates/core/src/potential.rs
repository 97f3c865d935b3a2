//! Green and Robin functions of the Dirichlet Laplacian, the harmonic radius
//! `r_Ω = exp(−2πτ_Ω)` and the concentration level `|Ω| + πe·sup r_Ω²`.
//!
//! The Green function is represented as the exact logarithmic kernel plus a
//! discrete harmonic correction:
//!
//! ```text
//! G_x(y) = −(1/2π) log|x − y| − H_x(y),   H_x = −(1/2π) log|x − ·| on ∂Ω,
//! ```
//!
//! and the Robin function is the trace `τ_Ω(x) = H_x(x)`.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::fem::{
    bary_point, barycentric, dist, point_segment_distance, Field, Laplacian, Mesh, Point,
    QuadratureRule,
};
use crate::{par, Error, Result};

/// `−(1/2π) log r`.
pub fn log_kernel(r: f64) -> f64 {
    -r.ln() / (2.0 * PI)
}

/// Green function with a fixed source point.
#[derive(Clone, Debug)]
pub struct GreenFunction {
    source: Point,
    source_vertex: Option<usize>,
    /// Nodal values of `−H_x`, the discrete harmonic extension of
    /// `(1/2π) log|x − y|` from the boundary.
    correction: Field,
}

impl GreenFunction {
    /// Green function with pole at an interior vertex.
    pub fn at_vertex(lap: &Laplacian, vertex: usize) -> Result<Self> {
        let mesh = lap.mesh();
        if vertex >= mesh.num_vertices() {
            return Err(Error::Domain(format!("vertex {vertex} does not exist")));
        }
        if mesh.is_boundary(vertex) {
            return Err(Error::Domain(format!("source vertex {vertex} lies on the boundary")));
        }
        let mut g = Self::at_point(lap, mesh.vertex(vertex))?;
        g.source_vertex = Some(vertex);
        Ok(g)
    }

    /// Green function with pole at an arbitrary point strictly inside Ω.
    pub fn at_point(lap: &Laplacian, x: Point) -> Result<Self> {
        let mesh = lap.mesh();
        let inside = (0..mesh.num_triangles()).any(|t| {
            let b = barycentric(&mesh.triangle_points(t), x);
            b.iter().all(|&v| v >= -1e-12)
        });
        if !inside || mesh.distance_to_boundary(x) < 1e-12 {
            return Err(Error::Domain(format!(
                "source ({}, {}) is not strictly inside the domain",
                x[0], x[1]
            )));
        }
        let bv: Vec<f64> = mesh
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, &y)| if mesh.is_boundary(i) { -log_kernel(dist(x, y)) } else { 0.0 })
            .collect();
        let correction = lap.harmonic_extension(&bv)?;
        Ok(GreenFunction { source: x, source_vertex: None, correction })
    }

    pub fn source(&self) -> Point {
        self.source
    }

    /// Regular part `H_x` at the pole, i.e. the Robin function `τ_Ω(x)`.
    pub fn robin_value(&self, mesh: &Mesh) -> f64 {
        match self.source_vertex {
            Some(v) => -self.correction[v],
            None => -self.interpolate_correction(mesh, self.source).unwrap_or(f64::NAN),
        }
    }

    /// Nodal values; `+∞` at a source vertex, exactly zero on the boundary.
    pub fn nodal(&self, mesh: &Mesh) -> Field {
        mesh.vertices()
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                if mesh.is_boundary(i) {
                    0.0
                } else if Some(i) == self.source_vertex || dist(y, self.source) == 0.0 {
                    f64::INFINITY
                } else {
                    log_kernel(dist(y, self.source)) + self.correction[i]
                }
            })
            .collect::<Vec<_>>()
            .into()
    }

    fn interpolate_correction(&self, mesh: &Mesh, y: Point) -> Option<f64> {
        (0..mesh.num_triangles()).find_map(|t| {
            let b = barycentric(&mesh.triangle_points(t), y);
            if b.iter().all(|&v| v >= -1e-12) {
                let tri = mesh.triangles()[t];
                Some((0..3).map(|k| b[k] * self.correction[tri[k]]).sum())
            } else {
                None
            }
        })
    }

    /// `G` at a point of triangle `t` given by barycentric coordinates.
    pub fn eval_in_triangle(&self, mesh: &Mesh, t: usize, b: &[f64; 3]) -> f64 {
        let tri = mesh.triangles()[t];
        let y = bary_point(&mesh.triangle_points(t), b);
        let h: f64 = (0..3).map(|k| b[k] * self.correction[tri[k]]).sum();
        let r = dist(y, self.source);
        if r == 0.0 {
            f64::INFINITY
        } else {
            log_kernel(r) + h
        }
    }

    /// `∫_Ω f(G) dx`, with the exact kernel at the quadrature points and
    /// recursive subdivision of triangles near the pole. `f` must be
    /// integrable against the logarithmic singularity.
    pub fn integrate(&self, mesh: &Mesh, f: impl Fn(f64) -> f64) -> f64 {
        const MAX_DEPTH: u32 = 30;
        let rule = QuadratureRule::SevenPoint;
        let unit = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut total = 0.0;
        for t in 0..mesh.num_triangles() {
            let pts = mesh.triangle_points(t);
            let area = mesh.triangle_area(t);
            let mut stack = vec![(unit, area, 0u32)];
            while let Some((sub, a, depth)) = stack.pop() {
                let corners = [
                    bary_point(&pts, &sub[0]),
                    bary_point(&pts, &sub[1]),
                    bary_point(&pts, &sub[2]),
                ];
                let diam = dist(corners[0], corners[1])
                    .max(dist(corners[1], corners[2]))
                    .max(dist(corners[2], corners[0]));
                if depth < MAX_DEPTH && triangle_distance(&corners, self.source) < diam {
                    let m = |i: usize, j: usize| -> [f64; 3] {
                        [0.5 * (sub[i][0] + sub[j][0]), 0.5 * (sub[i][1] + sub[j][1]), 0.5 * (sub[i][2] + sub[j][2])]
                    };
                    let (m01, m12, m20) = (m(0, 1), m(1, 2), m(2, 0));
                    for child in [[sub[0], m01, m20], [sub[1], m12, m01], [sub[2], m20, m12], [m01, m12, m20]] {
                        stack.push((child, 0.25 * a, depth + 1));
                    }
                    continue;
                }
                let mut s = 0.0;
                for (q, w) in rule.points() {
                    let b = [
                        q[0] * sub[0][0] + q[1] * sub[1][0] + q[2] * sub[2][0],
                        q[0] * sub[0][1] + q[1] * sub[1][1] + q[2] * sub[2][1],
                        q[0] * sub[0][2] + q[1] * sub[1][2] + q[2] * sub[2][2],
                    ];
                    s += w * f(self.eval_in_triangle(mesh, t, &b));
                }
                total += a * s;
            }
        }
        total
    }

    /// `∫_Ω G₊^p dx`.
    pub fn integrate_power(&self, mesh: &Mesh, p: f64) -> f64 {
        self.integrate(mesh, |g| g.max(0.0).powf(p))
    }
}

fn triangle_distance(c: &[Point; 3], x: Point) -> f64 {
    let b = barycentric(c, x);
    if b.iter().all(|&v| v >= 0.0) {
        return 0.0;
    }
    point_segment_distance(x, c[0], c[1])
        .min(point_segment_distance(x, c[1], c[2]))
        .min(point_segment_distance(x, c[2], c[0]))
}

/// Nodal Green function with pole at an interior vertex.
pub fn green_function(mesh: &Mesh, source_vertex: usize) -> Result<Field> {
    let lap = Laplacian::new(mesh)?;
    Ok(GreenFunction::at_vertex(&lap, source_vertex)?.nodal(mesh))
}

/// How the Robin function is computed at interior vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RobinMethod {
    /// One Dirichlet solve per sampled interior vertex. Samples are chosen
    /// greedily so that no two lie within graph distance `stride − 1`; the
    /// remaining vertices get `r_Ω` by discrete harmonic interpolation
    /// (`r_Ω = 0` on ∂Ω). `stride = 1` solves at every vertex.
    PerVertex { stride: usize },
    /// One solve per boundary vertex: `τ(x) = Σ_b ω_b(x) · (−(1/2π) log|x − y_b|)`
    /// with `ω_b` the discrete harmonic measure of boundary vertex `b`.
    /// Identical to `PerVertex { stride: 1 }` up to solver tolerance.
    HarmonicMeasure,
}

impl Default for RobinMethod {
    fn default() -> Self {
        RobinMethod::HarmonicMeasure
    }
}

/// `τ_Ω` at a point strictly inside Ω.
pub fn robin_at(lap: &Laplacian, x: Point) -> Result<f64> {
    Ok(GreenFunction::at_point(lap, x)?.robin_value(lap.mesh()))
}

/// Robin function at interior vertices (`+∞` on the boundary).
pub fn robin_function(mesh: &Mesh) -> Result<Field> {
    robin_function_with(&Laplacian::new(mesh)?, RobinMethod::default())
}

pub fn robin_function_with(lap: &Laplacian, method: RobinMethod) -> Result<Field> {
    let mesh = lap.mesh();
    let n = mesh.num_vertices();
    let interior = mesh.interior_vertices();
    let mut tau = vec![f64::INFINITY; n];
    match method {
        RobinMethod::HarmonicMeasure => {
            let boundary = mesh.boundary_vertices();
            let parts = par::map_indexed(&boundary, |_, &b| -> Result<Vec<f64>> {
                let mut bv = vec![0.0; n];
                bv[b] = 1.0;
                let omega = lap.harmonic_extension(&bv)?;
                let yb = mesh.vertex(b);
                Ok(interior.iter().map(|&i| omega[i] * log_kernel(dist(mesh.vertex(i), yb))).collect())
            });
            let mut acc = vec![0.0; interior.len()];
            for part in parts {
                for (a, v) in acc.iter_mut().zip(part?) {
                    *a += v;
                }
            }
            for (&i, v) in interior.iter().zip(acc) {
                tau[i] = v;
            }
        }
        RobinMethod::PerVertex { stride } => {
            if stride == 0 {
                return Err(Error::InvalidArgument("robin stride must be at least 1".into()));
            }
            let samples = if stride == 1 { interior.clone() } else { stride_samples(mesh, stride) };
            let values = par::map_indexed(&samples, |_, &i| -> Result<f64> {
                Ok(GreenFunction::at_vertex(lap, i)?.robin_value(mesh))
            });
            let mut fixed = mesh.boundary_mask().to_vec();
            let mut r = vec![0.0; n];
            for (&i, v) in samples.iter().zip(values) {
                let v = v?;
                tau[i] = v;
                fixed[i] = true;
                r[i] = (-2.0 * PI * v).exp();
            }
            if samples.len() < interior.len() {
                let (rf, _) = lap.solve_constrained(&vec![0.0; n], &fixed, &r, None)?;
                for &i in &interior {
                    if !fixed[i] {
                        tau[i] = -rf[i].max(f64::MIN_POSITIVE).ln() / (2.0 * PI);
                    }
                }
            }
        }
    }
    Ok(tau.into())
}

/// Interior vertices picked greedily (in index order) so that every pair is
/// at graph distance at least `stride`.
fn stride_samples(mesh: &Mesh, stride: usize) -> Vec<usize> {
    let nbrs = mesh.vertex_neighbors();
    let mut blocked = vec![false; mesh.num_vertices()];
    let mut out = Vec::new();
    let mut frontier = Vec::new();
    let mut seen = vec![usize::MAX; mesh.num_vertices()];
    for i in mesh.interior_vertices() {
        if blocked[i] {
            continue;
        }
        out.push(i);
        // block the ball of radius stride − 1
        frontier.clear();
        frontier.push(i);
        seen[i] = i;
        blocked[i] = true;
        for _ in 1..stride {
            let mut next = Vec::new();
            for &v in &frontier {
                for &w in &nbrs[v] {
                    if seen[w] != i {
                        seen[w] = i;
                        blocked[w] = true;
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
    }
    out
}

/// Robin function, harmonic radius, harmonic center and concentration level
/// of a meshed domain.
#[derive(Clone, Debug, Serialize)]
pub struct PotentialReport {
    pub area: f64,
    /// `τ_Ω` at interior vertices, `+∞` on the boundary.
    pub robin: Field,
    /// `exp(−2πτ_Ω)`, zero on the boundary.
    pub harmonic_radius: Field,
    /// Interior vertex attaining `max_radius`.
    pub center_vertex: usize,
    /// Maximizer of `r_Ω` refined by a quadratic fit over the 1-ring of
    /// `center_vertex`.
    pub harmonic_center: Point,
    pub max_radius: f64,
    pub concentration_level: f64,
}

pub fn concentration_level(mesh: &Mesh) -> Result<PotentialReport> {
    concentration_level_with(&Laplacian::new(mesh)?, RobinMethod::default())
}

pub fn concentration_level_with(lap: &Laplacian, method: RobinMethod) -> Result<PotentialReport> {
    let mesh = lap.mesh();
    if mesh.interior_vertices().is_empty() {
        return Err(Error::Domain("mesh has no interior vertices".into()));
    }
    let robin = robin_function_with(lap, method)?;
    let harmonic_radius: Field = robin.iter().map(|&t| (-2.0 * PI * t).exp()).collect::<Vec<_>>().into();
    let mut center_vertex = usize::MAX;
    let mut max_radius = f64::NEG_INFINITY;
    for i in mesh.interior_vertices() {
        if harmonic_radius[i] > max_radius {
            max_radius = harmonic_radius[i];
            center_vertex = i;
        }
    }
    let harmonic_center = refine_center(mesh, &harmonic_radius, center_vertex);
    let area = mesh.area();
    Ok(PotentialReport {
        area,
        robin,
        harmonic_radius,
        center_vertex,
        harmonic_center,
        max_radius,
        concentration_level: area + PI * E * max_radius * max_radius,
    })
}

/// Stationary point of the least-squares quadratic through the 1-ring, if it
/// is a maximum lying within the ring; otherwise the vertex itself.
fn refine_center(mesh: &Mesh, r: &[f64], v: usize) -> Point {
    let x0 = mesh.vertex(v);
    let nbrs = &mesh.vertex_neighbors()[v];
    if nbrs.len() < 5 {
        return x0;
    }
    let ring = nbrs.iter().map(|&w| dist(mesh.vertex(w), x0)).fold(f64::INFINITY, f64::min);
    // r ≈ c0 + c1 dx + c2 dy + c3 dx² + c4 dx dy + c5 dy²
    let mut ata = [[0.0; 6]; 6];
    let mut atb = [0.0; 6];
    for &w in nbrs.iter().chain(std::iter::once(&v)) {
        let p = mesh.vertex(w);
        let (dx, dy) = ((p[0] - x0[0]) / ring, (p[1] - x0[1]) / ring);
        let row = [1.0, dx, dy, dx * dx, dx * dy, dy * dy];
        for i in 0..6 {
            atb[i] += row[i] * r[w];
            for j in 0..6 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let Some(c) = solve_dense(ata, atb) else { return x0 };
    let (a, b, d) = (2.0 * c[3], c[4], 2.0 * c[5]);
    let det = a * d - b * b;
    if !(a < 0.0 && det > 0.0) {
        return x0;
    }
    let sx = (-c[1] * d + c[2] * b) / det;
    let sy = (-c[2] * a + c[1] * b) / det;
    if sx * sx + sy * sy > 1.0 {
        return x0;
    }
    [x0[0] + ring * sx, x0[1] + ring * sy]
}

pub(crate) fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for i in (0..N).rev() {
        let s: f64 = (i + 1..N).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

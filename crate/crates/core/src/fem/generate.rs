use std::collections::HashMap;
use std::f64::consts::PI;

use super::mesh::{BoundaryShape, Mesh, Point};
use crate::{Error, Result};

/// Triangulates the unit disk.
///
/// For `level >= 1` the mesh is a hexagonal lattice with `2^level` rings whose
/// `k`-th ring of `6k` vertices is spread uniformly in angle over the circle
/// of radius `k / 2^level`. Level 0 is the fan of 12 triangles over an
/// inscribed 12-gon. Every level halves the edge length and all triangles
/// stay close to equilateral.
pub fn build_disk_mesh(level: i32) -> Result<Mesh> {
    if level < 0 {
        return Err(Error::InvalidArgument(format!(
            "disk refinement level must be >= 0, got {level}"
        )));
    }
    if level > 12 {
        return Err(Error::InvalidArgument(format!("disk refinement level {level} is too large")));
    }
    if level == 0 {
        let mut vertices = vec![[0.0, 0.0]];
        vertices.extend((0..12).map(|j| {
            let theta = 2.0 * PI * j as f64 / 12.0;
            [theta.cos(), theta.sin()]
        }));
        let triangles = (0..12).map(|j| [0, 1 + j, 1 + (j + 1) % 12]).collect();
        return Ok(Mesh::new(vertices, triangles)?.with_shape(BoundaryShape::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        }));
    }
    let n = 1i64 << level;
    let hex_norm = |a: i64, b: i64| a.abs().max(b.abs()).max((a + b).abs());
    // corner directions of the lattice hexagon, counter-clockwise from +x
    const DIRS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

    let mut index = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    for a in -n..=n {
        for b in -n..=n {
            let k = hex_norm(a, b);
            if k > n {
                continue;
            }
            let p = if k == 0 {
                [0.0, 0.0]
            } else {
                let pos = ring_position(a, b, k, &DIRS);
                let theta = 2.0 * PI * pos as f64 / (6 * k) as f64;
                let r = if k == n { 1.0 } else { k as f64 / n as f64 };
                [r * theta.cos(), r * theta.sin()]
            };
            index.insert((a, b), vertices.len());
            vertices.push(p);
        }
    }

    let mut triangles = Vec::new();
    for a in -n..n {
        for b in -n..n {
            let lower = [(a, b), (a + 1, b), (a, b + 1)];
            let upper = [(a + 1, b), (a + 1, b + 1), (a, b + 1)];
            for tri in [lower, upper] {
                if let (Some(&i), Some(&j), Some(&k)) =
                    (index.get(&tri[0]), index.get(&tri[1]), index.get(&tri[2]))
                {
                    triangles.push([i, j, k]);
                }
            }
        }
    }

    Ok(Mesh::new(vertices, triangles)?.with_shape(BoundaryShape::Circle {
        center: [0.0, 0.0],
        radius: 1.0,
    }))
}

/// Index of lattice point `(a, b)` along hexagonal ring `k`, in `[0, 6k)`.
fn ring_position(a: i64, b: i64, k: i64, dirs: &[(i64, i64); 6]) -> i64 {
    for s in 0..6 {
        let (d0, d1) = (dirs[s], dirs[(s + 1) % 6]);
        let step = (d1.0 - d0.0, d1.1 - d0.1);
        let (ra, rb) = (a - k * d0.0, b - k * d0.1);
        // (ra, rb) = j * step for some 0 <= j < k
        let j = if step.0 != 0 { ra / step.0 } else { rb / step.1 };
        if (0..k).contains(&j) && ra == j * step.0 && rb == j * step.1 {
            return s as i64 * k + j;
        }
    }
    unreachable!("lattice point ({a}, {b}) is not on ring {k}")
}

/// Structured triangulation of `[0, width] × [0, height]` with `nx × ny`
/// cells, each split along its rising diagonal.
pub fn build_rect_mesh(width: f64, height: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "rectangle dimensions must be positive, got {width} x {height}"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("nx and ny must be at least 1".into()));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Uniform red refinement: every triangle is split into four through its edge
/// midpoints. On circular boundaries new boundary midpoints are projected
/// radially onto the circle.
pub fn refine(mesh: &Mesh) -> Result<Mesh> {
    let nv = mesh.num_vertices();
    let mut vertices = mesh.vertices().to_vec();
    let mut midpoint = HashMap::with_capacity(mesh.edges().len());
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let mut m = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        if let (true, BoundaryShape::Circle { center, radius }) =
            (mesh.is_boundary_edge(e), mesh.shape())
        {
            let d = [m[0] - center[0], m[1] - center[1]];
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            m = [center[0] + radius * d[0] / len, center[1] + radius * d[1] / len];
        }
        midpoint.insert((a, b), nv + e);
        vertices.push(m);
    }
    let mid = |a: usize, b: usize| midpoint[&(a.min(b), a.max(b))];
    let mut triangles = Vec::with_capacity(4 * mesh.num_triangles());
    for &[a, b, c] in mesh.triangles() {
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        triangles.push([a, ab, ca]);
        triangles.push([b, bc, ab]);
        triangles.push([c, ca, bc]);
        triangles.push([ab, bc, ca]);
    }
    Ok(Mesh::new(vertices, triangles)?.with_shape(mesh.shape()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_level_zero_is_a_coarse_polygon() {
        let m = build_disk_mesh(0).unwrap();
        assert!(m.num_triangles() >= 6);
        assert!((m.area() - PI).abs() / PI < 0.1);
        // inscribed 12-gon area is exactly 3
        assert!((m.area() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn disk_area_matches_inscribed_polygon() {
        for level in 0..=5 {
            let m = build_disk_mesh(level).unwrap();
            let nb = if level == 0 { 12 } else { 6usize << level };
            let polygon = 0.5 * nb as f64 * (2.0 * PI / nb as f64).sin();
            assert!((m.area() - polygon).abs() < 1e-12 * polygon, "level {level}");
            assert_eq!(m.boundary_vertices().len(), nb);
        }
        let m5 = build_disk_mesh(5).unwrap();
        assert!((m5.area() - PI).abs() / PI < 1e-3);
    }

    #[test]
    fn disk_boundary_on_unit_circle_and_quality() {
        for level in 0..=5 {
            let m = build_disk_mesh(level).unwrap();
            for i in m.boundary_vertices() {
                let p = m.vertex(i);
                assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 1e-12);
            }
            assert!(m.min_angle_deg() >= 20.0, "level {level}: {}", m.min_angle_deg());
        }
    }

    #[test]
    fn disk_edge_length_halves() {
        let h: Vec<f64> = (2..=6).map(|l| build_disk_mesh(l).unwrap().max_edge_length()).collect();
        for w in h.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
        }
    }

    #[test]
    fn negative_level_rejected() {
        assert!(matches!(build_disk_mesh(-1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rect_counts() {
        let m = build_rect_mesh(1.0, 1.0, 2, 2).unwrap();
        assert_eq!(m.num_triangles(), 8);
        assert_eq!(m.area(), 1.0);
        assert_eq!(build_rect_mesh(2.0, 1.0, 4, 2).unwrap().area(), 2.0);
        let fine = build_rect_mesh(1.0, 1.0, 64, 64).unwrap();
        // grid counting oracle: (nx − 1)(ny − 1) interior nodes
        let oracle = (64 - 1) * (64 - 1);
        assert_eq!(fine.interior_vertices().len(), oracle);
        assert!(build_rect_mesh(0.0, 1.0, 1, 1).is_err());
        assert!(build_rect_mesh(1.0, -1.0, 1, 1).is_err());
    }

    #[test]
    fn refine_counts_follow_euler_formula() {
        let sq = build_rect_mesh(1.0, 1.0, 2, 2).unwrap();
        let r = refine(&sq).unwrap();
        assert_eq!(r.num_triangles(), 32);
        assert_eq!(r.num_vertices(), sq.num_vertices() + sq.edges().len());
        assert!((r.area() - 1.0).abs() < 1e-15);

        let d = build_disk_mesh(2).unwrap();
        let rd = refine(&d).unwrap();
        assert_eq!(rd.num_vertices(), d.num_vertices() + d.edges().len());
        assert!(rd.area() > d.area());
        for i in rd.boundary_vertices() {
            let p = rd.vertex(i);
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 1e-12);
        }
        assert!(rd.min_angle_deg() >= 20.0);
    }
}

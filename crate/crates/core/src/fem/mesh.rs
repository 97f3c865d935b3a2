use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Point = [f64; 2];

/// Geometry of ∂Ω beyond what the vertex list says. Refinement uses it to
/// place new boundary midpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryShape {
    /// Boundary is the polygon through the boundary vertices.
    Polygon,
    /// Boundary vertices sample the circle `|x − center| = radius`.
    Circle { center: Point, radius: f64 },
}

/// Conforming triangulation of a bounded planar domain.
///
/// Triangles are stored counter-clockwise. The boundary is inferred from
/// connectivity: an edge used by exactly one triangle is a boundary edge.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_is_boundary: Vec<bool>,
    boundary: Vec<bool>,
    area: f64,
    shape: BoundaryShape,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    /// Validates and builds a mesh. Clockwise triangles are reoriented;
    /// zero-area triangles, out-of-range indices, unused vertices and edges
    /// shared by more than two triangles are rejected.
    pub fn new(vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        let nv = vertices.len();
        if nv < 3 || triangles.is_empty() {
            return Err(Error::Validation("mesh needs at least one triangle".into()));
        }
        if vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Validation("non-finite vertex coordinate".into()));
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let diam2 = (hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2);
        let area_tol = 1e-14 * diam2;

        let mut used = vec![false; nv];
        for (t, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::Validation(format!(
                    "triangle {t} references vertex out of range (nv = {nv}): {tri:?}"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Validation(format!("triangle {t} repeats a vertex: {tri:?}")));
            }
            let a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if a.abs() <= area_tol {
                return Err(Error::Validation(format!("triangle {t} has zero area")));
            }
            if a < 0.0 {
                tri.swap(1, 2);
            }
            for &i in tri.iter() {
                used[i] = true;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::Validation(format!("vertex {i} is not used by any triangle")));
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut counts: Vec<u32> = Vec::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    counts.push(0);
                    edges.len() - 1
                });
                counts[e] += 1;
            }
        }
        if let Some(e) = counts.iter().position(|&c| c > 2) {
            return Err(Error::Validation(format!(
                "edge {:?} is shared by {} triangles (non-manifold)",
                edges[e], counts[e]
            )));
        }
        let edge_is_boundary: Vec<bool> = counts.iter().map(|&c| c == 1).collect();
        let mut boundary = vec![false; nv];
        for (e, &b) in edges.iter().zip(&edge_is_boundary) {
            if b {
                boundary[e[0]] = true;
                boundary[e[1]] = true;
            }
        }

        let area = triangles
            .iter()
            .map(|t| signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]))
            .sum();

        Ok(Mesh {
            vertices,
            triangles,
            edges,
            edge_is_boundary,
            boundary,
            area,
            shape: BoundaryShape::Polygon,
        })
    }

    pub fn with_shape(mut self, shape: BoundaryShape) -> Self {
        self.shape = shape;
        self
    }

    /// Returns a copy with every coordinate multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Mesh {
        assert!(factor > 0.0, "scale factor must be positive");
        let mut m = self.clone();
        for p in &mut m.vertices {
            p[0] *= factor;
            p[1] *= factor;
        }
        m.area = m
            .triangles
            .iter()
            .map(|t| signed_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]))
            .sum();
        if let BoundaryShape::Circle { center, radius } = m.shape {
            m.shape = BoundaryShape::Circle {
                center: [center[0] * factor, center[1] * factor],
                radius: radius * factor,
            };
        }
        m
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_is_boundary[e]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&i| !self.boundary[i]).collect()
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&i| self.boundary[i]).collect()
    }

    /// Total measure |Ω|.
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn shape(&self) -> BoundaryShape {
        self.shape
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| dist(self.vertices[e[0]], self.vertices[e[1]]))
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut worst = 180.0f64;
        for t in 0..self.num_triangles() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (norm(u) * norm(v));
                worst = worst.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        worst
    }

    /// Vertex adjacency lists, sorted, without self-loops.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vertices()];
        for e in &self.edges {
            adj[e[0]].push(e[1]);
            adj[e[1]].push(e[0]);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Index of the vertex closest to `p` (lowest index on ties).
    pub fn nearest_vertex(&self, p: Point) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, &v) in self.vertices.iter().enumerate() {
            let d = dist(v, p);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Distance from `p` to the polygonal boundary.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.edges
            .iter()
            .zip(&self.edge_is_boundary)
            .filter(|(_, &b)| b)
            .map(|(e, _)| point_segment_distance(p, self.vertices[e[0]], self.vertices[e[1]]))
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn norm(v: [f64; 2]) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + s * d[0], a[1] + s * d[1]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> (Vec<Point>, Vec<[usize; 3]>) {
        (
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
    }

    #[test]
    fn boundary_is_inferred_from_connectivity() {
        let (v, t) = square();
        let m = Mesh::new(v, t).unwrap();
        assert_eq!(m.edges().len(), 5);
        assert_eq!((0..5).filter(|&e| m.is_boundary_edge(e)).count(), 4);
        assert!(m.boundary_mask().iter().all(|&b| b));
        assert_eq!(m.area(), 1.0);
    }

    #[test]
    fn clockwise_triangles_are_reoriented() {
        let (v, _) = square();
        let m = Mesh::new(v, vec![[0, 2, 1], [0, 3, 2]]).unwrap();
        assert!((0..2).all(|t| m.triangle_area(t) > 0.0));
    }

    #[test]
    fn rejects_bad_connectivity() {
        let (v, _) = square();
        assert!(matches!(
            Mesh::new(v.clone(), vec![[0, 1, 7]]),
            Err(Error::Validation(_))
        ));
        let mut v2 = v.clone();
        v2.push([2.0, 0.0]);
        // collinear triangle 0-1-4
        assert!(Mesh::new(v2, vec![[0, 1, 2], [0, 2, 3], [0, 1, 4]]).is_err());
        // three triangles on one edge
        let mut v3 = v;
        v3.push([0.5, -1.0]);
        v3.push([0.5, 2.0]);
        assert!(Mesh::new(v3, vec![[0, 1, 2], [0, 2, 3], [0, 4, 2], [0, 2, 5]]).is_err());
    }
}

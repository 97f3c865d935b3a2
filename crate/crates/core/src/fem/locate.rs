use super::mesh::{Mesh, Point};

/// Bucket grid over the mesh bounding box for point-in-triangle queries.
#[derive(Clone, Debug)]
pub struct Locator<'m> {
    mesh: &'m Mesh,
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'m> Locator<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in mesh.vertices() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        let side = (mesh.num_triangles() as f64).sqrt().ceil().max(1.0);
        let cell = span / side;
        let nx = ((hi[0] - lo[0]) / cell).floor() as usize + 1;
        let ny = ((hi[1] - lo[1]) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..mesh.num_triangles() {
            let p = mesh.triangle_points(t);
            let (x0, x1) = (p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min), p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max));
            let (y0, y1) = (p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min), p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max));
            let (i0, i1) = (Self::clamp_idx((x0 - lo[0]) / cell, nx), Self::clamp_idx((x1 - lo[0]) / cell, nx));
            let (j0, j1) = (Self::clamp_idx((y0 - lo[1]) / cell, ny), Self::clamp_idx((y1 - lo[1]) / cell, ny));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Locator { mesh, origin: lo, cell, nx, ny, buckets }
    }

    fn clamp_idx(x: f64, n: usize) -> usize {
        (x.floor().max(0.0) as usize).min(n - 1)
    }

    /// Triangle containing `p` and the barycentric coordinates of `p` in it.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let fx = (p[0] - self.origin[0]) / self.cell;
        let fy = (p[1] - self.origin[1]) / self.cell;
        if fx < -1e-9 || fy < -1e-9 || fx > self.nx as f64 + 1e-9 || fy > self.ny as f64 + 1e-9 {
            return None;
        }
        let (i, j) = (Self::clamp_idx(fx, self.nx), Self::clamp_idx(fy, self.ny));
        let tol = -1e-12;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let b = barycentric(&self.mesh.triangle_points(t), p);
            let worst = b[0].min(b[1]).min(b[2]);
            if worst >= tol {
                return Some((t, b));
            }
            if best.as_ref().map_or(true, |(_, _, w)| worst > *w) {
                best = Some((t, b, worst));
            }
        }
        // tolerate round-off just outside an edge
        best.filter(|(_, _, w)| *w > -1e-9).map(|(t, b, _)| (t, b))
    }

    /// Value of the P1 interpolant of `field` at `p`.
    pub fn interpolate(&self, field: &[f64], p: Point) -> Option<f64> {
        let (t, b) = self.locate(p)?;
        let tri = self.mesh.triangles()[t];
        Some(b[0] * field[tri[0]] + b[1] * field[tri[1]] + b[2] * field[tri[2]])
    }
}

pub(crate) fn barycentric(p: &[Point; 3], x: Point) -> [f64; 3] {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let l1 = ((x[0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (x[1] - p[0][1])) / det;
    let l2 = ((p[1][0] - p[0][0]) * (x[1] - p[0][1]) - (x[0] - p[0][0]) * (p[1][1] - p[0][1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_disk_mesh, Field};

    #[test]
    fn linear_fields_interpolate_exactly() {
        let m = build_disk_mesh(3).unwrap();
        let loc = Locator::new(&m);
        let u = Field::interpolate(&m, |p| 2.0 * p[0] - p[1] + 0.5);
        for &(x, y) in &[(0.0, 0.0), (0.31, -0.2), (-0.5, 0.55), (0.0, 0.9)] {
            let v = loc.interpolate(&u, [x, y]).unwrap();
            assert!((v - (2.0 * x - y + 0.5)).abs() < 1e-12);
        }
        assert!(loc.locate([1.5, 0.0]).is_none());
    }
}

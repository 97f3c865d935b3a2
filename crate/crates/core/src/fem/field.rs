use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use super::Mesh;

/// Nodal coefficients of a piecewise-linear function, one per mesh vertex.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field(values)
    }

    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    /// Samples `f` at every vertex, forcing zero on the boundary.
    pub fn interpolate_dirichlet(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Field(
            mesh.vertices()
                .iter()
                .enumerate()
                .map(|(i, &x)| if mesh.is_boundary(i) { 0.0 } else { f(x) })
                .collect(),
        )
    }

    pub fn interpolate(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Field(mesh.vertices().iter().map(|&x| f(x)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_dirichlet_zero(&self, mesh: &Mesh) -> bool {
        self.0.len() == mesh.num_vertices()
            && (0..self.0.len()).all(|i| !mesh.is_boundary(i) || self.0[i] == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field(self.0.iter().map(|v| c * v).collect())
    }

    pub fn axpy(&self, s: f64, other: &Field) -> Field {
        Field(self.0.iter().zip(&other.0).map(|(a, b)| a + s * b).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest value and the vertex attaining it (first index on ties).
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &v) in self.0.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field(v)
    }
}

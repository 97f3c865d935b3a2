use serde::{Deserialize, Serialize};

use super::field::Field;
use super::mesh::Mesh;
use super::quadrature::QuadratureRule;
use super::sparse::{SolveStats, SparseOperator};
use crate::{Error, Result};

/// Conjugate-gradient settings for Dirichlet solves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual target.
    pub rel_tol: f64,
    /// Iteration cap as a multiple of the vertex count.
    pub max_iter_factor: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rel_tol: 1e-10, max_iter_factor: 50 }
    }
}

/// Right-hand side of `−Δw = f`, either as nodal values of a P1 density or as
/// values sampled at the quadrature points of every triangle (triangle-major).
#[derive(Clone, Debug)]
pub enum Density {
    Nodal(Vec<f64>),
    AtQuadrature { rule: QuadratureRule, values: Vec<f64> },
}

impl Density {
    pub fn constant(mesh: &Mesh, c: f64) -> Density {
        Density::Nodal(vec![c; mesh.num_vertices()])
    }

    /// Load vector `bᵢ = ∫ f φᵢ`. Nodal densities use the exact P1 mass
    /// matrix.
    pub fn load_vector(&self, mesh: &Mesh) -> Vec<f64> {
        let mut b = vec![0.0; mesh.num_vertices()];
        match self {
            Density::Nodal(f) => {
                assert_eq!(f.len(), mesh.num_vertices());
                for (t, tri) in mesh.triangles().iter().enumerate() {
                    let a12 = mesh.triangle_area(t) / 12.0;
                    let s = f[tri[0]] + f[tri[1]] + f[tri[2]];
                    for &i in tri {
                        b[i] += a12 * (s + f[i]);
                    }
                }
            }
            Density::AtQuadrature { rule, values } => {
                let pts = rule.points();
                assert_eq!(values.len(), pts.len() * mesh.num_triangles());
                for (t, tri) in mesh.triangles().iter().enumerate() {
                    let area = mesh.triangle_area(t);
                    for (q, (bary, w)) in pts.iter().enumerate() {
                        let g = values[t * pts.len() + q] * w * area;
                        for k in 0..3 {
                            b[tri[k]] += g * bary[k];
                        }
                    }
                }
            }
        }
        b
    }
}

/// Stiffness matrix `K_ij = ∫ ∇φᵢ·∇φⱼ` of the P1 basis, without boundary
/// conditions.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<SparseOperator> {
    let mut pattern = mesh.vertex_neighbors();
    for (i, row) in pattern.iter_mut().enumerate() {
        let pos = row.binary_search(&i).unwrap_err();
        row.insert(pos, i);
    }
    let mut k = SparseOperator::with_pattern(&pattern);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        if !(area > 0.0) {
            return Err(Error::DegenerateTriangle(t));
        }
        let mut b = [0.0; 3];
        let mut c = [0.0; 3];
        for i in 0..3 {
            let (j, l) = ((i + 1) % 3, (i + 2) % 3);
            b[i] = p[j][1] - p[l][1];
            c[i] = p[l][0] - p[j][0];
        }
        for i in 0..3 {
            for j in 0..3 {
                k.add(tri[i], tri[j], (b[i] * b[j] + c[i] * c[j]) / (4.0 * area));
            }
        }
    }
    Ok(k)
}

/// Mesh plus assembled stiffness: the reusable state behind every elliptic
/// solve. Immutable after construction and shareable across threads.
#[derive(Clone, Debug)]
pub struct Laplacian<'m> {
    mesh: &'m Mesh,
    stiffness: SparseOperator,
    opts: SolverOptions,
}

impl<'m> Laplacian<'m> {
    pub fn new(mesh: &'m Mesh) -> Result<Self> {
        Self::with_options(mesh, SolverOptions::default())
    }

    pub fn with_options(mesh: &'m Mesh, opts: SolverOptions) -> Result<Self> {
        let stiffness = assemble_stiffness(mesh)?;
        Ok(Laplacian { mesh, stiffness, opts })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn stiffness(&self) -> &SparseOperator {
        &self.stiffness
    }

    pub fn options(&self) -> SolverOptions {
        self.opts
    }

    /// `‖∇u‖_{L²}` of the P1 interpolant.
    pub fn h1_seminorm(&self, u: &[f64]) -> f64 {
        self.stiffness.quad_form(u).max(0.0).sqrt()
    }

    /// `∫ ∇u·∇v`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.stiffness.bilinear(u, v)
    }

    fn max_iter(&self) -> usize {
        self.opts.max_iter_factor * self.mesh.num_vertices().max(1)
    }

    /// Solves `∫∇w·∇φ = ⟨load, φ⟩` for every test function vanishing on the
    /// fixed set, with `w = fixed_values` there.
    pub fn solve_constrained(
        &self,
        load: &[f64],
        fixed: &[bool],
        fixed_values: &[f64],
        guess: Option<&[f64]>,
    ) -> Result<(Field, SolveStats)> {
        let n = self.mesh.num_vertices();
        let mut lifted = vec![0.0; n];
        for i in 0..n {
            if fixed[i] {
                lifted[i] = fixed_values[i];
            }
        }
        let k_lift = self.stiffness.apply(&lifted);
        let rhs: Vec<f64> = (0..n).map(|i| load[i] - k_lift[i]).collect();
        let free: Vec<bool> = fixed.iter().map(|f| !f).collect();
        let mut x = match guess {
            Some(g) => g.to_vec(),
            None => vec![0.0; n],
        };
        let stats = self.stiffness.pcg(&rhs, &mut x, &free, self.opts.rel_tol, self.max_iter())?;
        for i in 0..n {
            if fixed[i] {
                x[i] = fixed_values[i];
            }
        }
        Ok((Field::new(x), stats))
    }

    /// Dirichlet problem from an assembled load vector; `boundary_values`
    /// defaults to zero.
    pub fn solve_load(
        &self,
        load: &[f64],
        boundary_values: Option<&[f64]>,
        guess: Option<&[f64]>,
    ) -> Result<(Field, SolveStats)> {
        let zeros;
        let g = match boundary_values {
            Some(g) => g,
            None => {
                zeros = vec![0.0; self.mesh.num_vertices()];
                &zeros
            }
        };
        self.solve_constrained(load, self.mesh.boundary_mask(), g, guess)
    }

    /// `−Δw = f` in Ω, `w = g` on ∂Ω.
    pub fn solve_dirichlet(&self, rhs: &Density, boundary_values: &[f64]) -> Result<Field> {
        let load = rhs.load_vector(self.mesh);
        Ok(self.solve_load(&load, Some(boundary_values), None)?.0)
    }

    /// Discrete harmonic extension of boundary data.
    pub fn harmonic_extension(&self, boundary_values: &[f64]) -> Result<Field> {
        let load = vec![0.0; self.mesh.num_vertices()];
        Ok(self.solve_load(&load, Some(boundary_values), None)?.0)
    }
}

/// One-shot Dirichlet solve; assembles the stiffness matrix each call.
pub fn solve_dirichlet(mesh: &Mesh, rhs: &Density, boundary_values: &[f64]) -> Result<Field> {
    Laplacian::new(mesh)?.solve_dirichlet(rhs, boundary_values)
}

/// `‖∇u‖_{L²}`; assembles the stiffness matrix each call.
pub fn h1_seminorm(mesh: &Mesh, field: &[f64]) -> Result<f64> {
    Ok(Laplacian::new(mesh)?.h1_seminorm(field))
}

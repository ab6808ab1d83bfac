//! Assembly of the symmetric-gradient stiffness `A`, the div-div matrix `C`
//! and the boundary traction load, plus symmetric Dirichlet elimination.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, Vector};
use crate::mesh::BoundaryTag;
use crate::space::{p2_basis, quadrature, FunctionSpace, QuadratureKind, DOFS_PER_CELL};

type LocalMatrix = [[f64; DOFS_PER_CELL]; DOFS_PER_CELL];

/// `A` and `C` on one level, sharing a sparsity pattern, plus the
/// Dirichlet mask of the space they were assembled on.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub a: CsrMatrix,
    pub c: CsrMatrix,
    dirichlet: Vec<bool>,
}

fn local_matrices(space: &FunctionSpace, cell: usize) -> Result<(LocalMatrix, LocalMatrix)> {
    let geo = space.geometry(cell);
    if geo.area() < 1e-14 {
        return Err(Error::DegenerateCell {
            cell,
            area: geo.area(),
        });
    }
    let rule = quadrature(QuadratureKind::CellDegree4);
    let mut a = [[0.0; DOFS_PER_CELL]; DOFS_PER_CELL];
    let mut c = [[0.0; DOFS_PER_CELL]; DOFS_PER_CELL];
    for (p, &w) in rule.points.iter().zip(&rule.weights) {
        let (_, ref_grad) = p2_basis([p[1], p[2]]);
        let g = ref_grad.map(|rg| geo.physical_gradient(rg));
        let wd = w * geo.det;
        for i in 0..6 {
            for k in 0..2 {
                let row = 2 * i + k;
                for j in 0..6 {
                    let gij = g[i][0] * g[j][0] + g[i][1] * g[j][1];
                    for n in 0..2 {
                        let col = 2 * j + n;
                        // eps(phi_i e_k) : eps(phi_j e_n)
                        let delta = if k == n { gij } else { 0.0 };
                        a[row][col] += wd * 0.5 * (delta + g[i][n] * g[j][k]);
                        c[row][col] += wd * g[i][k] * g[j][n];
                    }
                }
            }
        }
    }
    Ok((a, c))
}

/// Assembles `A_ij = (eps(phi_i), eps(phi_j))` and
/// `C_ij = (div phi_i, div phi_j)` without boundary conditions.
pub fn assemble_bilinear(space: &FunctionSpace) -> Result<(CsrMatrix, CsrMatrix)> {
    let ncells = space.mesh().num_cells();
    let locals: Vec<(LocalMatrix, LocalMatrix)> = (0..ncells)
        .into_par_iter()
        .map(|c| local_matrices(space, c))
        .collect::<Result<_>>()?;

    let cap = ncells * DOFS_PER_CELL * DOFS_PER_CELL;
    let mut ta = Vec::with_capacity(cap);
    let mut tc = Vec::with_capacity(cap);
    for (cell, (la, lc)) in locals.iter().enumerate() {
        let dofs = space.cell_dofs(cell);
        for (r, &gi) in dofs.iter().enumerate() {
            for (s, &gj) in dofs.iter().enumerate() {
                ta.push((gi, gj, la[r][s]));
                tc.push((gi, gj, lc[r][s]));
            }
        }
    }
    let n = space.num_dofs();
    Ok((
        CsrMatrix::from_triplets(n, n, &ta)?,
        CsrMatrix::from_triplets(n, n, &tc)?,
    ))
}

/// Load vector of the constant traction `(0, -magnitude)` on the `x = 1`
/// boundary.
pub fn assemble_traction(space: &FunctionSpace, magnitude: f64) -> Vector {
    let mesh = space.mesh();
    let nv = mesh.num_vertices();
    let rule = quadrature(QuadratureKind::EdgeDegree4);
    let mut b = vec![0.0; space.num_dofs()];
    for (e, &[v0, v1]) in mesh.edges().iter().enumerate() {
        if mesh.edge_tag(e) != BoundaryTag::NeumannX1 {
            continue;
        }
        let (p, q) = (mesh.vertex(v0), mesh.vertex(v1));
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        for (pt, &w) in rule.points.iter().zip(&rule.weights) {
            let t = pt[1];
            let shape = [
                (1.0 - t) * (1.0 - 2.0 * t),
                t * (2.0 * t - 1.0),
                4.0 * t * (1.0 - t),
            ];
            for (node, s) in [v0, v1, nv + e].into_iter().zip(shape) {
                b[2 * node + 1] -= magnitude * w * len * s;
            }
        }
    }
    b
}

impl OperatorSet {
    pub fn assemble(space: &FunctionSpace) -> Result<Self> {
        let (a, c) = assemble_bilinear(space)?;
        debug_assert!(a.same_pattern(&c));
        Ok(Self {
            a,
            c,
            dirichlet: space.dirichlet_mask().to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    /// `A + gamma C` before boundary conditions.
    pub fn combined_raw(&self, gamma: f64) -> CsrMatrix {
        let mut m = self.a.clone();
        for (v, c) in m.values_mut().iter_mut().zip(self.c.values()) {
            *v += gamma * c;
        }
        m
    }

    /// `A + gamma C` with Dirichlet rows and columns eliminated.
    pub fn combined(&self, gamma: f64) -> CsrMatrix {
        apply_dirichlet(self.combined_raw(gamma), &self.dirichlet)
    }
}

/// Zeroes Dirichlet rows and columns and puts 1 on their diagonal. The
/// sparsity pattern is left unchanged.
pub fn apply_dirichlet(mut m: CsrMatrix, dirichlet: &[bool]) -> CsrMatrix {
    assert_eq!(m.nrows(), dirichlet.len());
    let offsets = m.row_offsets().to_vec();
    let cols = m.col_indices().to_vec();
    let vals = m.values_mut();
    for i in 0..dirichlet.len() {
        for k in offsets[i]..offsets[i + 1] {
            let j = cols[k];
            if dirichlet[i] || dirichlet[j] {
                vals[k] = if i == j { 1.0 } else { 0.0 };
            }
        }
    }
    m
}

pub fn apply_dirichlet_rhs(b: &mut [f64], dirichlet: &[bool]) {
    for (bi, &d) in b.iter_mut().zip(dirichlet) {
        if d {
            *bi = 0.0;
        }
    }
}

//! Grid transfer between non-nested Alfeld-split levels.
//!
//! The standard prolongation interpolates a coarse function at the fine
//! nodes. Because the fine split cells do not nest inside the coarse ones, a
//! coarse divergence-free field generally picks up divergence inside each
//! coarse macro cell. The robust prolongation removes it again by solving,
//! for every coarse macro cell `K`, a small problem on the fine DOFs
//! supported inside `K`:
//!
//! ```text
//! (A + gamma C)[S_K, S_K] u_K = gamma C[S_K, :] P u_H,   P~ u_H = P u_H - sum_K E_K u_K
//! ```
//!
//! The local problems decouple, so `P~` is assembled explicitly.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::assembly::OperatorSet;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, LdlFactor, Vector};
use crate::mesh::RefinementMaps;
use crate::space::{p2_basis, FunctionSpace};

const LOCATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transfer {
    Standard,
    Robust,
}

/// Coarse macro cell containing fine split cell `c`.
fn coarse_macro_of(fine: &FunctionSpace, maps: &RefinementMaps, c: usize) -> usize {
    maps.cell_parent[fine.split().macro_cell_of_cell(c)]
}

/// Locates `x` in one of the three split cells of coarse macro cell `k`.
/// Returns the cell with the largest minimum barycentric coordinate (lowest
/// id on ties) and the reference coordinates of `x` in it.
fn locate(coarse: &FunctionSpace, k: usize, x: [f64; 2]) -> Result<(usize, [f64; 2])> {
    let mut best: Option<(usize, [f64; 2], f64)> = None;
    for c in coarse.split().cells_of_macro(k) {
        let xi = coarse.geometry(c).to_reference(x);
        let min_bary = (1.0 - xi[0] - xi[1]).min(xi[0]).min(xi[1]);
        if best.is_none_or(|(_, _, m)| min_bary > m) {
            best = Some((c, xi, min_bary));
        }
    }
    match best {
        Some((c, xi, m)) if m >= -LOCATE_TOL => Ok((c, xi)),
        _ => Err(Error::PointLocation { x: x[0], y: x[1] }),
    }
}

/// Nodal interpolation of coarse functions on the fine space. Rows of fine
/// Dirichlet DOFs and columns of coarse Dirichlet DOFs are zero.
pub fn build_standard_prolongation(
    coarse: &FunctionSpace,
    fine: &FunctionSpace,
    maps: &RefinementMaps,
) -> Result<CsrMatrix> {
    interpolation_matrix(coarse, fine, maps, true)
}

/// Nodal interpolation without boundary conditions.
pub fn build_nodal_interpolation(
    coarse: &FunctionSpace,
    fine: &FunctionSpace,
    maps: &RefinementMaps,
) -> Result<CsrMatrix> {
    interpolation_matrix(coarse, fine, maps, false)
}

fn interpolation_matrix(
    coarse: &FunctionSpace,
    fine: &FunctionSpace,
    maps: &RefinementMaps,
    constrained: bool,
) -> Result<CsrMatrix> {
    let mut triplets = Vec::with_capacity(12 * fine.num_nodes());
    for node in 0..fine.num_nodes() {
        let x = fine.node_coords(node);
        let k = coarse_macro_of(fine, maps, fine.node_cells(node)[0]);
        let (cell, xi) = locate(coarse, k, x)?;
        let (val, _) = p2_basis(xi);
        let cnodes = coarse.cell_nodes(cell);
        for comp in 0..2 {
            let row = 2 * node + comp;
            if constrained && fine.is_dirichlet(row) {
                continue;
            }
            for (&cn, &v) in cnodes.iter().zip(&val) {
                let col = 2 * cn + comp;
                if v != 0.0 && !(constrained && coarse.is_dirichlet(col)) {
                    triplets.push((row, col, v));
                }
            }
        }
    }
    CsrMatrix::from_triplets(fine.num_dofs(), coarse.num_dofs(), &triplets)
}

/// Free fine DOFs on entities strictly inside each coarse macro cell,
/// indexed by coarse macro cell. Nodes on the domain boundary are excluded
/// too, so every field in a set has zero trace on the boundary of its cell.
pub fn interior_dofs_by_macro_cell(
    fine: &FunctionSpace,
    maps: &RefinementMaps,
    num_coarse_cells: usize,
) -> Vec<Vec<usize>> {
    let mesh = fine.mesh();
    let nv = mesh.num_vertices();
    let mut on_boundary = vec![false; fine.num_nodes()];
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        if mesh.edge_tag(e).is_boundary() {
            on_boundary[a] = true;
            on_boundary[b] = true;
            on_boundary[nv + e] = true;
        }
    }
    let mut sets = vec![Vec::new(); num_coarse_cells];
    for node in (0..fine.num_nodes()).filter(|&n| !on_boundary[n]) {
        let cells = fine.node_cells(node);
        let k = coarse_macro_of(fine, maps, cells[0]);
        if cells.iter().all(|&c| coarse_macro_of(fine, maps, c) == k) {
            for dof in [2 * node, 2 * node + 1] {
                if !fine.is_dirichlet(dof) {
                    sets[k].push(dof);
                }
            }
        }
    }
    sets
}

pub fn interior_dofs_of_macro_cell(fine: &FunctionSpace, maps: &RefinementMaps, k: usize) -> Vec<usize> {
    let n = maps.cell_parent.iter().max().map_or(0, |m| m + 1);
    interior_dofs_by_macro_cell(fine, maps, n).swap_remove(k)
}

/// `P - sum_K E_K L_K^{-1} gamma C[S_K, :] P` with `L_K = (A + gamma C)[S_K, S_K]`.
///
/// Correction entries that are exactly zero are not stored, so at
/// `gamma = 0` the result has the same pattern and values as `p`.
pub fn build_robust_prolongation(
    p: &CsrMatrix,
    interior: &[Vec<usize>],
    fine_ops: &OperatorSet,
    gamma: f64,
    parallel: bool,
) -> Result<CsrMatrix> {
    let a_gamma = fine_ops.combined_raw(gamma);
    let c = &fine_ops.c;

    let local = |(k, dofs): (usize, &Vec<usize>)| -> Result<Vec<(usize, usize, f64)>> {
        if dofs.is_empty() {
            return Ok(Vec::new());
        }
        let mut scratch = vec![usize::MAX; a_gamma.ncols()];
        let block = a_gamma.principal_submatrix(dofs, &mut scratch);
        let factor = LdlFactor::new(&block, format!("local prolongation block of coarse cell {k}"))?;

        // rows of gamma * C[S_K, :] * P, keyed by coarse column
        let mut rhs: BTreeMap<usize, Vector> = BTreeMap::new();
        for (i, &s) in dofs.iter().enumerate() {
            let (ccols, cvals) = c.row(s);
            for (&j, &cv) in ccols.iter().zip(cvals) {
                let (pcols, pvals) = p.row(j);
                for (&col, &pv) in pcols.iter().zip(pvals) {
                    rhs.entry(col).or_insert_with(|| vec![0.0; dofs.len()])[i] += gamma * cv * pv;
                }
            }
        }
        let mut out = Vec::new();
        for (col, b) in rhs {
            let u = factor.solve(&b);
            for (&row, &v) in dofs.iter().zip(&u) {
                if v != 0.0 {
                    out.push((row, col, -v));
                }
            }
        }
        Ok(out)
    };

    let corrections: Vec<Vec<(usize, usize, f64)>> = if parallel {
        interior.par_iter().enumerate().map(local).collect::<Result<_>>()?
    } else {
        interior.iter().enumerate().map(local).collect::<Result<_>>()?
    };

    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(p.nnz());
    for i in 0..p.nrows() {
        let (cols, vals) = p.row(i);
        triplets.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v)));
    }
    for corr in corrections {
        triplets.extend(corr);
    }
    CsrMatrix::from_triplets(p.nrows(), p.ncols(), &triplets)
}

/// Prolongation matrix with its kind; restriction is the transpose action.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    pub kind: Transfer,
    pub gamma: f64,
    matrix: CsrMatrix,
}

impl TransferOperator {
    pub fn new(kind: Transfer, gamma: f64, matrix: CsrMatrix) -> Self {
        Self { kind, gamma, matrix }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn prolong(&self, coarse: &[f64]) -> Vector {
        self.matrix.spmv(coarse)
    }

    pub fn restrict(&self, fine: &[f64]) -> Vector {
        self.matrix.spmv_transpose(fine)
    }
}

//! Subspace-correction smoothers and their Chebyshev acceleration.
//!
//! The robust smoother is additive Schwarz over macro stars: for every vertex
//! of the level's macro mesh, the free DOFs whose basis functions are
//! supported inside the union of macro cells touching that vertex form one
//! subspace, solved exactly. Point Jacobi is kept as the non-robust baseline.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, CsrMatrix, LdlFactor, Lcg, Vector};
use crate::mesh::TriMesh;
use crate::space::FunctionSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relaxation {
    /// Additive Schwarz over macro-star patches.
    MacroStar,
    /// Point Jacobi.
    Jacobi,
    /// One patch holding every free DOF, i.e. an exact solve. Only sensible on
    /// small problems; used to test the multigrid machinery.
    SinglePatch,
}

/// Free DOFs supported in the macro star of macro vertex `vertex`.
#[derive(Debug, Clone)]
pub struct Patch {
    pub vertex: usize,
    pub dofs: Vec<usize>,
    factor: LdlFactor,
}

impl Patch {
    pub fn factor(&self) -> &LdlFactor {
        &self.factor
    }
}

/// DOF sets of the macro-star patches, one per macro vertex, empty sets
/// dropped. A scalar node belongs to the star of `v` iff every split cell
/// containing it lies in a macro cell touching `v`.
pub fn patch_dofs(space: &FunctionSpace, macro_mesh: &TriMesh) -> Vec<(usize, Vec<usize>)> {
    let split = space.split();
    let mut out = Vec::new();
    let mut in_star = vec![false; macro_mesh.num_cells()];
    for v in 0..macro_mesh.num_vertices() {
        let star = macro_mesh.macro_star(v);
        for &k in star {
            in_star[k] = true;
        }
        let mut dofs = Vec::new();
        for &k in star {
            for c in split.cells_of_macro(k) {
                for node in space.cell_nodes(c) {
                    if space
                        .node_cells(node)
                        .iter()
                        .all(|&sc| in_star[split.macro_cell_of_cell(sc)])
                    {
                        for dof in [2 * node, 2 * node + 1] {
                            if !space.is_dirichlet(dof) {
                                dofs.push(dof);
                            }
                        }
                    }
                }
            }
        }
        for &k in star {
            in_star[k] = false;
        }
        dofs.sort_unstable();
        dofs.dedup();
        if !dofs.is_empty() {
            out.push((v, dofs));
        }
    }
    out
}

fn factor_patches(a: &CsrMatrix, sets: Vec<(usize, Vec<usize>)>, parallel: bool) -> Result<Vec<Patch>> {
    let build = |(vertex, dofs): (usize, Vec<usize>)| -> Result<Patch> {
        let mut scratch = vec![usize::MAX; a.ncols()];
        let block = a.principal_submatrix(&dofs, &mut scratch);
        let factor = LdlFactor::new(&block, format!("patch of vertex {vertex}"))?;
        Ok(Patch {
            vertex,
            dofs,
            factor,
        })
    };
    if parallel {
        sets.into_par_iter().map(build).collect()
    } else {
        sets.into_iter().map(build).collect()
    }
}

/// Builds and factorizes the macro-star patches of `a` (Dirichlet
/// conditions already applied).
pub fn build_patches(
    space: &FunctionSpace,
    macro_mesh: &TriMesh,
    a: &CsrMatrix,
    parallel: bool,
) -> Result<Vec<Patch>> {
    let sets = patch_dofs(space, macro_mesh);
    if sets.is_empty() {
        return Err(Error::EmptyPatches);
    }
    factor_patches(a, sets, parallel)
}

/// Factorizes patches with caller-supplied DOF sets.
pub fn build_custom_patches(a: &CsrMatrix, sets: Vec<Vec<usize>>, parallel: bool) -> Result<Vec<Patch>> {
    if sets.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptyPatches);
    }
    let sets = sets
        .into_iter()
        .enumerate()
        .filter(|(_, s)| !s.is_empty())
        .collect();
    factor_patches(a, sets, parallel)
}

/// `z = sum_i E_i A_i^{-1} E_i^T r`.
///
/// Local solves may run in parallel; the scatter-add is always done in patch
/// order so both modes give bit-identical results.
pub fn asm_apply(patches: &[Patch], r: &[f64], parallel: bool) -> Vector {
    let local = |p: &Patch| -> Vector {
        let rl: Vector = p.dofs.iter().map(|&d| r[d]).collect();
        p.factor.solve(&rl)
    };
    let solutions: Vec<Vector> = if parallel {
        patches.par_iter().map(local).collect()
    } else {
        patches.iter().map(local).collect()
    };
    let mut z = vec![0.0; r.len()];
    for (p, sol) in patches.iter().zip(&solutions) {
        for (&d, s) in p.dofs.iter().zip(sol) {
            z[d] += s;
        }
    }
    z
}

/// Entrywise `r_i / diag_i`.
pub fn jacobi_apply(diag: &[f64], r: &[f64]) -> Vector {
    r.iter().zip(diag).map(|(ri, di)| ri / di).collect()
}

#[derive(Debug, Clone)]
pub enum Smoother {
    Schwarz { patches: Vec<Patch>, parallel: bool },
    Jacobi { diag: Vector },
}

impl Smoother {
    pub fn new(
        kind: Relaxation,
        space: &FunctionSpace,
        macro_mesh: &TriMesh,
        a: &CsrMatrix,
        parallel: bool,
    ) -> Result<Self> {
        Ok(match kind {
            Relaxation::MacroStar => Smoother::Schwarz {
                patches: build_patches(space, macro_mesh, a, parallel)?,
                parallel,
            },
            Relaxation::SinglePatch => Smoother::Schwarz {
                patches: build_custom_patches(a, vec![space.free_dofs()], parallel)?,
                parallel,
            },
            Relaxation::Jacobi => Smoother::Jacobi { diag: a.diagonal() },
        })
    }

    pub fn apply(&self, r: &[f64]) -> Vector {
        match self {
            Smoother::Schwarz { patches, parallel } => asm_apply(patches, r, *parallel),
            Smoother::Jacobi { diag } => jacobi_apply(diag, r),
        }
    }

    pub fn patches(&self) -> Option<&[Patch]> {
        match self {
            Smoother::Schwarz { patches, .. } => Some(patches),
            Smoother::Jacobi { .. } => None,
        }
    }
}

/// Rayleigh-quotient estimate of the largest eigenvalue of `M^{-1} A`.
///
/// Power iteration from a seeded pseudorandom start vector with Dirichlet
/// entries zeroed; the quotient is taken in the `A` inner product, in which
/// `M^{-1} A` is self-adjoint.
pub fn estimate_lambda_max(
    a: &CsrMatrix,
    smoother: impl Fn(&[f64]) -> Vector,
    dirichlet: &[bool],
    iters: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = Lcg::new(seed);
    let mut x = rng.vector(a.nrows());
    for (xi, &d) in x.iter_mut().zip(dirichlet) {
        if d {
            *xi = 0.0;
        }
    }
    let mut nx = norm2(&x);
    if nx == 0.0 {
        return Err(Error::ZeroStartVector);
    }
    let mut lambda = 0.0;
    for _ in 0..iters.max(1) {
        x.iter_mut().for_each(|v| *v /= nx);
        let ax = a.spmv(&x);
        let y = smoother(&ax);
        lambda = dot(&ax, &y) / dot(&x, &ax);
        nx = norm2(&y);
        if nx == 0.0 {
            break;
        }
        x = y;
    }
    Ok(lambda)
}

/// Chebyshev iteration parameters on the spectral interval `[lo, hi]` of the
/// preconditioned operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chebyshev {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Chebyshev {
    /// `[lambda_max / 10, 1.1 lambda_max]`.
    pub fn from_lambda_max(lambda_max: f64, steps: usize) -> Self {
        Self {
            lo: 0.1 * lambda_max,
            hi: 1.1 * lambda_max,
            steps,
        }
    }
}

/// Runs `params.steps` Chebyshev iterations for `A x = b` preconditioned by
/// `smoother`, updating `x` in place.
pub fn chebyshev_smooth(
    a: &CsrMatrix,
    smoother: impl Fn(&[f64]) -> Vector,
    x: &mut [f64],
    b: &[f64],
    params: Chebyshev,
) {
    assert!(
        params.hi > params.lo && params.lo > 0.0,
        "invalid Chebyshev interval [{}, {}]",
        params.lo,
        params.hi
    );
    if params.steps == 0 {
        return;
    }
    let theta = 0.5 * (params.hi + params.lo);
    let delta = 0.5 * (params.hi - params.lo);
    let sigma = theta / delta;
    let mut rho = 1.0 / sigma;

    let mut r = a.spmv(x);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut d: Vector = smoother(&r).into_iter().map(|z| z / theta).collect();
    for k in 0..params.steps {
        axpy(1.0, &d, x);
        if k + 1 == params.steps {
            break;
        }
        axpy(-1.0, &a.spmv(&d), &mut r);
        let rho_next = 1.0 / (2.0 * sigma - rho);
        let z = smoother(&r);
        let (c1, c2) = (rho_next * rho, 2.0 * rho_next / delta);
        d.iter_mut().zip(&z).for_each(|(di, zi)| *di = c1 * *di + c2 * zi);
        rho = rho_next;
    }
}

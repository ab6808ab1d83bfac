//! Geometric multigrid hierarchy and the W-cycle preconditioner.
//!
//! Every level carries its own rediscretized operator `A + gamma C`. A
//! [`Discretization`] holds the gamma-independent data (meshes, spaces, `A`,
//! `C`, interpolation matrices) so that a gamma sweep only rebuilds what
//! depends on gamma; [`MgHierarchy`] is the per-gamma preconditioner.

use crate::assembly::{apply_dirichlet_rhs, assemble_traction, OperatorSet};
use crate::error::{Error, Result};
use crate::linalg::{axpy, CsrMatrix, LdlFactor, Vector};
use crate::mesh::MeshHierarchy;
use crate::relaxation::{chebyshev_smooth, estimate_lambda_max, Chebyshev, Relaxation, Smoother};
use crate::space::FunctionSpace;
use crate::transfer::{
    build_robust_prolongation, build_standard_prolongation, interior_dofs_by_macro_cell, Transfer,
    TransferOperator,
};

/// Traction magnitude on the `x = 1` boundary of the benchmark problem.
pub const TRACTION: f64 = 0.5;

/// Gamma-independent data of a level hierarchy.
#[derive(Debug, Clone)]
pub struct Discretization {
    hierarchy: MeshHierarchy,
    spaces: Vec<FunctionSpace>,
    operators: Vec<OperatorSet>,
    /// `prolongations[l]` maps level `l - 1` to level `l`; entry 0 is unused.
    prolongations: Vec<Option<CsrMatrix>>,
    interior: Vec<Vec<Vec<usize>>>,
}

impl Discretization {
    pub fn new(coarse_n: usize, num_levels: usize) -> Result<Self> {
        let hierarchy = MeshHierarchy::new(coarse_n, num_levels)?;
        let spaces: Vec<FunctionSpace> = hierarchy
            .levels()
            .iter()
            .map(|l| FunctionSpace::new(l.split.clone()))
            .collect();
        let operators = spaces
            .iter()
            .map(OperatorSet::assemble)
            .collect::<Result<Vec<_>>>()?;
        let mut prolongations = vec![None];
        let mut interior = vec![Vec::new()];
        for l in 1..num_levels {
            let maps = hierarchy.level(l).parent.as_ref().expect("fine level has parent maps");
            prolongations.push(Some(build_standard_prolongation(&spaces[l - 1], &spaces[l], maps)?));
            let ncoarse = hierarchy.level(l - 1).macro_mesh.num_cells();
            interior.push(interior_dofs_by_macro_cell(&spaces[l], maps, ncoarse));
        }
        Ok(Self {
            hierarchy,
            spaces,
            operators,
            prolongations,
            interior,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.spaces.len()
    }

    pub fn hierarchy(&self) -> &MeshHierarchy {
        &self.hierarchy
    }

    pub fn space(&self, l: usize) -> &FunctionSpace {
        &self.spaces[l]
    }

    pub fn finest_space(&self) -> &FunctionSpace {
        self.spaces.last().unwrap()
    }

    pub fn operators(&self, l: usize) -> &OperatorSet {
        &self.operators[l]
    }

    pub fn standard_prolongation(&self, l: usize) -> Option<&CsrMatrix> {
        self.prolongations[l].as_ref()
    }

    /// Fine DOFs inside each coarse macro cell, for the transfer into level `l`.
    pub fn interior_dofs(&self, l: usize) -> &[Vec<usize>] {
        &self.interior[l]
    }

    /// Prolongation from level `l - 1` to level `l`.
    pub fn prolongation(&self, l: usize, kind: Transfer, gamma: f64, parallel: bool) -> Result<CsrMatrix> {
        let p = self.prolongations[l]
            .as_ref()
            .ok_or_else(|| Error::Config(format!("level {l} has no coarser level")))?;
        match kind {
            Transfer::Standard => Ok(p.clone()),
            Transfer::Robust => {
                build_robust_prolongation(p, &self.interior[l], &self.operators[l], gamma, parallel)
            }
        }
    }

    /// Right-hand side of the benchmark problem on the finest level.
    pub fn load_vector(&self) -> Vector {
        let space = self.finest_space();
        let mut b = assemble_traction(space, TRACTION);
        apply_dirichlet_rhs(&mut b, space.dirichlet_mask());
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgConfig {
    pub gamma: f64,
    pub relaxation: Relaxation,
    pub transfer: Transfer,
    pub seed: u64,
    /// 2 for a W-cycle, 1 for a V-cycle.
    pub cycle_index: usize,
    /// Chebyshev steps for pre- and post-smoothing each.
    pub smoothing_steps: usize,
    pub eig_iters: usize,
    /// Fixed Chebyshev interval instead of the estimated one.
    pub interval: Option<(f64, f64)>,
    pub parallel: bool,
}

impl MgConfig {
    pub fn new(gamma: f64, relaxation: Relaxation, transfer: Transfer) -> Self {
        Self {
            gamma,
            relaxation,
            transfer,
            seed: 0,
            cycle_index: 2,
            smoothing_steps: 2,
            eig_iters: 10,
            interval: None,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MgLevel {
    pub matrix: CsrMatrix,
    /// `None` on the coarsest level, which is solved directly.
    pub smoother: Option<(Smoother, Chebyshev)>,
    /// Transfer from the next coarser level into this one.
    pub transfer: Option<TransferOperator>,
}

/// Multigrid preconditioner for one value of gamma. Level 0 is coarsest.
#[derive(Debug, Clone)]
pub struct MgHierarchy {
    levels: Vec<MgLevel>,
    coarse: LdlFactor,
    config: MgConfig,
}

impl MgHierarchy {
    pub fn setup(disc: &Discretization, config: MgConfig) -> Result<Self> {
        if config.cycle_index == 0 {
            return Err(Error::Config("cycle index must be at least 1".into()));
        }
        let mut levels = Vec::with_capacity(disc.num_levels());
        for l in 0..disc.num_levels() {
            let space = disc.space(l);
            let matrix = disc.operators(l).combined(config.gamma);
            let (smoother, transfer) = if l == 0 {
                (None, None)
            } else {
                let macro_mesh = &disc.hierarchy().level(l).macro_mesh;
                let smoother = Smoother::new(config.relaxation, space, macro_mesh, &matrix, config.parallel)?;
                let cheb = match config.interval {
                    Some((lo, hi)) => Chebyshev {
                        lo,
                        hi,
                        steps: config.smoothing_steps,
                    },
                    None => {
                        let lmax = estimate_lambda_max(
                            &matrix,
                            |r| smoother.apply(r),
                            space.dirichlet_mask(),
                            config.eig_iters,
                            config.seed,
                        )?;
                        Chebyshev::from_lambda_max(lmax, config.smoothing_steps)
                    }
                };
                let p = disc.prolongation(l, config.transfer, config.gamma, config.parallel)?;
                (
                    Some((smoother, cheb)),
                    Some(TransferOperator::new(config.transfer, config.gamma, p)),
                )
            };
            levels.push(MgLevel {
                matrix,
                smoother,
                transfer,
            });
        }
        let coarse = LdlFactor::new(&levels[0].matrix.to_dense(), "coarse level operator")?;
        Ok(Self {
            levels,
            coarse,
            config,
        })
    }

    pub fn config(&self) -> &MgConfig {
        &self.config
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, l: usize) -> &MgLevel {
        &self.levels[l]
    }

    pub fn coarse_factor(&self) -> &LdlFactor {
        &self.coarse
    }

    /// Operator on the finest level.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.levels.last().unwrap().matrix
    }

    /// One cycle on the finest level from a zero initial guess.
    pub fn apply(&self, r: &[f64]) -> Vector {
        let mut x = vec![0.0; r.len()];
        self.cycle(self.levels.len() - 1, r, &mut x);
        x
    }

    /// Multigrid cycle on level `l` for `A_l x = b`, improving `x` in place.
    pub fn cycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        if l == 0 {
            self.coarse.solve_into(b, x);
            return;
        }
        let level = &self.levels[l];
        let (smoother, cheb) = level.smoother.as_ref().expect("fine level has a smoother");
        let transfer = level.transfer.as_ref().expect("fine level has a transfer");

        chebyshev_smooth(&level.matrix, |r| smoother.apply(r), x, b, *cheb);

        let mut r = level.matrix.spmv(x);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let rc = transfer.restrict(&r);
        let mut ec = vec![0.0; rc.len()];
        for _ in 0..self.config.cycle_index {
            self.cycle(l - 1, &rc, &mut ec);
        }
        axpy(1.0, &transfer.prolong(&ec), x);

        chebyshev_smooth(&level.matrix, |r| smoother.apply(r), x, b, *cheb);
    }
}

//! Continuous vector-valued quadratic Lagrange space on an Alfeld-split mesh.
//!
//! Scalar nodes are the split-mesh vertices followed by the edge midpoints;
//! vector DOF `2 * node + component`. The discontinuous linear pressure space
//! that pairs with this velocity space is never built: the divergence of a
//! piecewise quadratic field is already piecewise linear, so projecting a
//! discrete divergence onto the pressure space is the identity.

use crate::linalg::Vector;
use crate::mesh::{BoundaryTag, SplitMesh, TriMesh};

/// Local node order on a cell: the three vertices, then the midpoints of
/// edges `(v0, v1)`, `(v1, v2)`, `(v2, v0)`.
pub const NODES_PER_CELL: usize = 6;
pub const DOFS_PER_CELL: usize = 2 * NODES_PER_CELL;

/// Values and reference gradients of the six quadratic basis functions at a
/// point of the reference triangle `(0,0), (1,0), (0,1)`.
pub fn p2_basis(xi: [f64; 2]) -> ([f64; 6], [[f64; 2]; 6]) {
    let l = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
    let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut val = [0.0; 6];
    let mut grad = [[0.0; 2]; 6];
    for i in 0..3 {
        val[i] = l[i] * (2.0 * l[i] - 1.0);
        let s = 4.0 * l[i] - 1.0;
        grad[i] = [s * dl[i][0], s * dl[i][1]];
    }
    for k in 0..3 {
        let (a, b) = (k, (k + 1) % 3);
        val[3 + k] = 4.0 * l[a] * l[b];
        grad[3 + k] = [
            4.0 * (l[b] * dl[a][0] + l[a] * dl[b][0]),
            4.0 * (l[b] * dl[a][1] + l[a] * dl[b][1]),
        ];
    }
    (val, grad)
}

/// Reference coordinates of the local nodes.
pub const P2_NODES: [[f64; 2]; 6] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [0.5, 0.0],
    [0.5, 0.5],
    [0.0, 0.5],
];

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Barycentric coordinates: three per point on cells, two on edges.
    pub points: Vec<Vec<f64>>,
    /// Sum to 1/2 on the reference triangle, 1 on the unit interval.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    CellDegree4,
    EdgeDegree4,
}

pub fn quadrature(kind: QuadratureKind) -> QuadratureRule {
    match kind {
        QuadratureKind::CellDegree4 => {
            // 6-point symmetric rule, exact for degree 4.
            let (a, wa) = (0.445_948_490_915_965, 0.223_381_589_678_011);
            let (b, wb) = (0.091_576_213_509_771, 0.109_951_743_655_322);
            let mut points = Vec::with_capacity(6);
            let mut weights = Vec::with_capacity(6);
            for (p, w) in [(a, wa), (b, wb)] {
                let q = 1.0 - 2.0 * p;
                for bary in [[p, p, q], [p, q, p], [q, p, p]] {
                    points.push(bary.to_vec());
                    weights.push(0.5 * w);
                }
            }
            QuadratureRule { points, weights }
        }
        QuadratureKind::EdgeDegree4 => {
            // 3-point Gauss-Legendre, exact for degree 5.
            let d = 0.5 * (0.6_f64).sqrt();
            let ts = [0.5 - d, 0.5, 0.5 + d];
            let ws = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
            QuadratureRule {
                points: ts.iter().map(|&t| vec![1.0 - t, t]).collect(),
                weights: ws.to_vec(),
            }
        }
    }
}

/// Affine map of a triangle: `x = p0 + J xi`.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub origin: [f64; 2],
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    inv_t: [[f64; 2]; 2],
}

impl CellGeometry {
    pub fn new(coords: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = coords;
        let jac = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        // J^{-T}
        let inv_t = [
            [jac[1][1] / det, -jac[1][0] / det],
            [-jac[0][1] / det, jac[0][0] / det],
        ];
        Self {
            origin: p0,
            jac,
            det,
            inv_t,
        }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn to_physical(&self, xi: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        // J^{-1} = (J^{-T})^T
        [
            self.inv_t[0][0] * d[0] + self.inv_t[1][0] * d[1],
            self.inv_t[0][1] * d[0] + self.inv_t[1][1] * d[1],
        ]
    }

    pub fn physical_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }
}

#[derive(Debug, Clone)]
pub struct FunctionSpace {
    split: SplitMesh,
    node_coords: Vec<[f64; 2]>,
    cell_nodes: Vec<[usize; NODES_PER_CELL]>,
    node_cells: Vec<Vec<usize>>,
    is_dirichlet: Vec<bool>,
    dirichlet_dofs: Vec<usize>,
}

impl FunctionSpace {
    pub fn new(split: SplitMesh) -> Self {
        let mesh = split.mesh();
        let nv = mesh.num_vertices();
        let mut node_coords = mesh.vertices().to_vec();
        node_coords.extend((0..mesh.num_edges()).map(|e| mesh.edge_midpoint(e)));

        let cell_nodes: Vec<[usize; 6]> = (0..mesh.num_cells())
            .map(|c| {
                let v = mesh.cell(c);
                let e = mesh.cell_edges(c);
                [v[0], v[1], v[2], nv + e[0], nv + e[1], nv + e[2]]
            })
            .collect();
        let mut node_cells = vec![Vec::new(); node_coords.len()];
        for (c, nodes) in cell_nodes.iter().enumerate() {
            for &n in nodes {
                node_cells[n].push(c);
            }
        }

        let mut dirichlet_node = vec![false; node_coords.len()];
        for (e, verts) in mesh.edges().iter().enumerate() {
            if mesh.edge_tag(e) == BoundaryTag::DirichletX0 {
                dirichlet_node[nv + e] = true;
                dirichlet_node[verts[0]] = true;
                dirichlet_node[verts[1]] = true;
            }
        }
        let is_dirichlet: Vec<bool> = dirichlet_node.iter().flat_map(|&d| [d, d]).collect();
        let dirichlet_dofs = (0..is_dirichlet.len()).filter(|&i| is_dirichlet[i]).collect();

        Self {
            split,
            node_coords,
            cell_nodes,
            node_cells,
            is_dirichlet,
            dirichlet_dofs,
        }
    }

    pub fn split(&self) -> &SplitMesh {
        &self.split
    }

    pub fn mesh(&self) -> &TriMesh {
        self.split.mesh()
    }

    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.node_coords.len()
    }

    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        self.node_coords[node]
    }

    pub fn cell_nodes(&self, c: usize) -> [usize; NODES_PER_CELL] {
        self.cell_nodes[c]
    }

    pub fn cell_dofs(&self, c: usize) -> [usize; DOFS_PER_CELL] {
        let n = self.cell_nodes[c];
        std::array::from_fn(|k| 2 * n[k / 2] + k % 2)
    }

    /// Split cells whose closure contains the node.
    pub fn node_cells(&self, node: usize) -> &[usize] {
        &self.node_cells[node]
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.is_dirichlet[dof]
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.is_dirichlet
    }

    pub fn dirichlet_dofs(&self) -> &[usize] {
        &self.dirichlet_dofs
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.num_dofs()).filter(|&i| !self.is_dirichlet[i]).collect()
    }

    pub fn geometry(&self, c: usize) -> CellGeometry {
        CellGeometry::new(self.mesh().cell_coords(c))
    }

    /// Zeroes the Dirichlet entries of `v`.
    pub fn zero_dirichlet(&self, v: &mut [f64]) {
        for &d in &self.dirichlet_dofs {
            v[d] = 0.0;
        }
    }

    /// Nodal interpolant of a vector field.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vector {
        self.node_coords
            .iter()
            .flat_map(|&x| f(x))
            .collect()
    }

    /// Value of the finite element function at reference point `xi` of `cell`.
    pub fn evaluate(&self, coeffs: &[f64], cell: usize, xi: [f64; 2]) -> [f64; 2] {
        assert_eq!(coeffs.len(), self.num_dofs(), "coefficient vector length");
        let (val, _) = p2_basis(xi);
        let mut out = [0.0; 2];
        for (k, &n) in self.cell_nodes[cell].iter().enumerate() {
            out[0] += val[k] * coeffs[2 * n];
            out[1] += val[k] * coeffs[2 * n + 1];
        }
        out
    }
}

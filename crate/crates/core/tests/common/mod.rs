//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls into the solver beyond mesh and space construction.

#![allow(dead_code)]

pub mod checks;

use nalgebra::{DMatrix, DVector};
use svmg::linalg::CsrMatrix;
use svmg::mesh::TriMesh;
use svmg::space::FunctionSpace;

pub type Tri = [[f64; 2]; 3];

pub fn dense(a: &CsrMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            d[(i, j)] += v;
        }
    }
    d
}

pub fn barycentric(tri: &Tri, p: [f64; 2]) -> [f64; 3] {
    let [a, b, c] = *tri;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

pub fn strictly_inside(tri: &Tri, p: [f64; 2]) -> bool {
    barycentric(tri, p).iter().all(|&l| l > 1e-10)
}

pub fn in_closure(tri: &Tri, p: [f64; 2]) -> bool {
    barycentric(tri, p).iter().all(|&l| l > -1e-10)
}

pub fn centroid(tri: &Tri) -> [f64; 2] {
    [
        (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0,
        (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0,
    ]
}

pub fn area(tri: &Tri) -> f64 {
    let [a, b, c] = *tri;
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
}

fn lambda_gradients(tri: &Tri) -> [[f64; 2]; 3] {
    let [p0, p1, p2] = *tri;
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    [
        [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
        [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
        [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
    ]
}

/// Quadratic Lagrange shape functions in barycentric form, node order
/// (v0, v1, v2, m01, m12, m20).
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

pub fn p2_gradients(tri: &Tri, l: [f64; 3]) -> [[f64; 2]; 6] {
    let g = lambda_gradients(tri);
    let vert = |i: usize| [(4.0 * l[i] - 1.0) * g[i][0], (4.0 * l[i] - 1.0) * g[i][1]];
    let edge = |i: usize, j: usize| {
        [
            4.0 * (l[i] * g[j][0] + l[j] * g[i][0]),
            4.0 * (l[i] * g[j][1] + l[j] * g[i][1]),
        ]
    };
    [vert(0), vert(1), vert(2), edge(0, 1), edge(1, 2), edge(2, 0)]
}

pub fn cell_tri(mesh: &TriMesh, c: usize) -> Tri {
    mesh.cell_coords(c)
}

/// Divergence of the field `u` at barycentric point `l` of split cell `c`.
pub fn divergence_at(space: &FunctionSpace, u: &[f64], c: usize, l: [f64; 3]) -> f64 {
    let tri = cell_tri(space.mesh(), c);
    let g = p2_gradients(&tri, l);
    space
        .cell_nodes(c)
        .iter()
        .zip(g)
        .map(|(&n, gi)| u[2 * n] * gi[0] + u[2 * n + 1] * gi[1])
        .sum()
}

/// `int_c div u`. The divergence is affine on the cell, so the centroid
/// value times the area is exact.
pub fn divergence_integral(space: &FunctionSpace, u: &[f64], c: usize) -> f64 {
    let tri = cell_tri(space.mesh(), c);
    area(&tri) * divergence_at(space, u, c, [1.0 / 3.0; 3])
}

/// `int_c (div u)^2` by the edge-midpoint rule, exact for quadratics.
pub fn divergence_square_integral(space: &FunctionSpace, u: &[f64], c: usize) -> f64 {
    let tri = cell_tri(space.mesh(), c);
    let mids = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
    area(&tri) / 3.0 * mids.iter().map(|&l| divergence_at(space, u, c, l).powi(2)).sum::<f64>()
}

/// Additive Schwarz operator `sum_i R_i^T (R_i A R_i^T)^{-1} R_i` built densely.
pub fn schwarz_dense(a: &DMatrix<f64>, patches: &[Vec<usize>]) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    for dofs in patches {
        let m = dofs.len();
        let local = DMatrix::from_fn(m, m, |i, j| a[(dofs[i], dofs[j])]);
        let inv = local.cholesky().expect("patch block is SPD").inverse();
        for i in 0..m {
            for j in 0..m {
                out[(dofs[i], dofs[j])] += inv[(i, j)];
            }
        }
    }
    out
}

/// Free DOFs of basis functions supported in the union of macro cells
/// `star`, found by testing every split cell geometrically.
pub fn support_inclusion_patch(space: &FunctionSpace, macro_mesh: &TriMesh, star: &[usize]) -> Vec<usize> {
    let mesh = space.mesh();
    let star_tris: Vec<Tri> = star.iter().map(|&k| macro_mesh.cell_coords(k)).collect();
    let cell_in_star: Vec<bool> = (0..mesh.num_cells())
        .map(|c| {
            let g = centroid(&mesh.cell_coords(c));
            star_tris.iter().any(|t| strictly_inside(t, g))
        })
        .collect();
    let mut dofs = Vec::new();
    for node in 0..space.num_nodes() {
        let p = space.node_coords(node);
        let mut touching = (0..mesh.num_cells()).filter(|&c| in_closure(&mesh.cell_coords(c), p)).peekable();
        if touching.peek().is_some() && touching.all(|c| cell_in_star[c]) {
            for d in [2 * node, 2 * node + 1] {
                if !space.is_dirichlet(d) {
                    dofs.push(d);
                }
            }
        }
    }
    dofs
}

/// Free DOFs whose nodes lie strictly inside the triangle.
pub fn strictly_interior_dofs(space: &FunctionSpace, tri: &Tri) -> Vec<usize> {
    (0..space.num_nodes())
        .filter(|&n| strictly_inside(tri, space.node_coords(n)))
        .flat_map(|n| [2 * n, 2 * n + 1])
        .filter(|&d| !space.is_dirichlet(d))
        .collect()
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Eigenvalues of the symmetric pencil `(A, M)` for SPD `M` via the
/// Cholesky factor of `M`.
pub fn pencil_eigenvalues(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Vec<f64> {
    let l = m.clone().cholesky().expect("SPD").l();
    let linv = l.clone().try_inverse().unwrap();
    let s = &linv * a * linv.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let mut e: Vec<f64> = s.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Restriction of a dense matrix to the given rows and columns.
pub fn submatrix(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

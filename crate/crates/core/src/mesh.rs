//! Triangulations of the unit square, uniform refinement, Alfeld splits and
//! the macro/split maps consumed by relaxation and transfer.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

const COORD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interior,
    /// Clamped edge `x = 0`.
    DirichletX0,
    /// Traction edge `x = 1`.
    NeumannX1,
    /// Remaining traction-free boundary.
    NeumannOther,
}

impl BoundaryTag {
    pub fn is_boundary(self) -> bool {
        self != BoundaryTag::Interior
    }
}

/// Simplicial 2D mesh with derived edges.
///
/// Edges are stored as sorted vertex pairs `[lo, hi]` ordered by `(hi, lo)`.
/// With this ordering the edges of a mesh keep their relative order when new
/// vertices with larger ids are appended (refinement midpoints, barycenters).
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    /// Local edge `k` of a cell joins local vertices `k` and `(k + 1) % 3`.
    cell_edges: Vec<[usize; 3]>,
    edge_tags: Vec<BoundaryTag>,
    vertex_cells: Vec<Vec<usize>>,
}

fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

fn classify(p: [f64; 2], q: [f64; 2]) -> BoundaryTag {
    let on = |v: f64, c: f64| (v - c).abs() < COORD_TOL;
    if on(p[0], 0.0) && on(q[0], 0.0) {
        BoundaryTag::DirichletX0
    } else if on(p[0], 1.0) && on(q[0], 1.0) {
        BoundaryTag::NeumannX1
    } else {
        BoundaryTag::NeumannOther
    }
}

impl TriMesh {
    /// Builds a mesh from vertices and counterclockwise cells, deriving the
    /// edge numbering, adjacency and boundary tags.
    pub fn new(vertices: Vec<[f64; 2]>, cells: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        for (c, cell) in cells.iter().enumerate() {
            if cell.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("cell {c} references a missing vertex")));
            }
            let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if area <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} has non-positive signed area {area:e}"
                )));
            }
        }

        let mut edges: Vec<[usize; 2]> = cells
            .iter()
            .flat_map(|c| (0..3).map(move |k| sorted_pair(c[k], c[(k + 1) % 3])))
            .collect();
        edges.sort_unstable_by_key(|e| (e[1], e[0]));
        edges.dedup();
        let index: HashMap<[usize; 2], usize> =
            edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();

        let mut edge_cell_count = vec![0u8; edges.len()];
        let cell_edges: Vec<[usize; 3]> = cells
            .iter()
            .map(|c| {
                let mut ce = [0; 3];
                for k in 0..3 {
                    let e = index[&sorted_pair(c[k], c[(k + 1) % 3])];
                    edge_cell_count[e] += 1;
                    ce[k] = e;
                }
                ce
            })
            .collect();
        if let Some(e) = edge_cell_count.iter().position(|&n| n > 2) {
            return Err(Error::InvalidMesh(format!("edge {e} has more than two cells")));
        }
        let edge_tags = edges
            .iter()
            .zip(&edge_cell_count)
            .map(|(e, &n)| {
                if n == 1 {
                    classify(vertices[e[0]], vertices[e[1]])
                } else {
                    BoundaryTag::Interior
                }
            })
            .collect();

        let mut vertex_cells = vec![Vec::new(); nv];
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                vertex_cells[v].push(c);
            }
        }

        Ok(Self {
            vertices,
            cells,
            edges,
            cell_edges,
            edge_tags,
            vertex_cells,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        self.vertices[v]
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> [usize; 3] {
        self.cells[c]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn cell_edges(&self, c: usize) -> [usize; 3] {
        self.cell_edges[c]
    }

    pub fn edge_tag(&self, e: usize) -> BoundaryTag {
        self.edge_tags[e]
    }

    pub fn edge_tags(&self) -> &[BoundaryTag] {
        &self.edge_tags
    }

    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    pub fn cell_coords(&self, c: usize) -> [[f64; 2]; 3] {
        self.cells[c].map(|v| self.vertices[v])
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [p, q, r] = self.cell_coords(c);
        signed_area(p, q, r)
    }

    pub fn centroid(&self, c: usize) -> [f64; 2] {
        let [p, q, r] = self.cell_coords(c);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    /// Cells incident to macro vertex `v` (its macro star).
    pub fn macro_star(&self, v: usize) -> &[usize] {
        self.vertex_cells(v)
    }

    /// Writes `vertices` lines `x y`, a blank line, then `cells` lines `a b c`.
    pub fn dump(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# vertices {}", self.num_vertices())?;
        for v in &self.vertices {
            writeln!(out, "{} {}", v[0], v[1])?;
        }
        writeln!(out, "# cells {}", self.num_cells())?;
        for c in &self.cells {
            writeln!(out, "{} {} {}", c[0], c[1], c[2])?;
        }
        Ok(())
    }

    pub fn dump_to_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.dump(std::io::BufWriter::new(file))?;
        Ok(())
    }
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// `n x n` squares on the unit square, each cut by its lower-left to
/// upper-right diagonal.
pub fn structured_unit_square(n: usize) -> Result<TriMesh> {
    if n == 0 {
        return Err(Error::InvalidMesh("structured grid needs n >= 1".into()));
    }
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }
    TriMesh::new(vertices, cells)
}

/// Where a vertex of a refined mesh comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexOrigin {
    Vertex(usize),
    EdgeMidpoint(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementMaps {
    pub cell_parent: Vec<usize>,
    pub vertex_origin: Vec<VertexOrigin>,
}

/// Red refinement: every cell is cut into four similar children through its
/// edge midpoints. Coarse vertices keep their ids; midpoints follow in edge
/// order.
pub fn uniform_refine(m: &TriMesh) -> Result<(TriMesh, RefinementMaps)> {
    let nv = m.num_vertices();
    let mut vertices = m.vertices.clone();
    let mut vertex_origin: Vec<VertexOrigin> = (0..nv).map(VertexOrigin::Vertex).collect();
    for e in 0..m.num_edges() {
        vertices.push(m.edge_midpoint(e));
        vertex_origin.push(VertexOrigin::EdgeMidpoint(e));
    }
    let mut cells = Vec::with_capacity(4 * m.num_cells());
    let mut cell_parent = Vec::with_capacity(4 * m.num_cells());
    for c in 0..m.num_cells() {
        let [a, b, d] = m.cells[c];
        let [eab, ebd, eda] = m.cell_edges[c].map(|e| nv + e);
        cells.push([a, eab, eda]);
        cells.push([eab, b, ebd]);
        cells.push([eda, ebd, d]);
        cells.push([eab, ebd, eda]);
        cell_parent.extend([c; 4]);
    }
    let fine = TriMesh::new(vertices, cells)?;
    Ok((
        fine,
        RefinementMaps {
            cell_parent,
            vertex_origin,
        },
    ))
}

/// Alfeld (barycentric) split of a macro mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitMesh {
    mesh: TriMesh,
    macro_cell_of_cell: Vec<usize>,
    macro_vertex_count: usize,
    macro_edge_count: usize,
}

impl SplitMesh {
    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn macro_cell_of_cell(&self, c: usize) -> usize {
        self.macro_cell_of_cell[c]
    }

    pub fn macro_vertex_count(&self) -> usize {
        self.macro_vertex_count
    }

    pub fn macro_edge_count(&self) -> usize {
        self.macro_edge_count
    }

    pub fn num_macro_cells(&self) -> usize {
        self.mesh.num_cells() / 3
    }

    /// Split cells of macro cell `k`.
    pub fn cells_of_macro(&self, k: usize) -> [usize; 3] {
        [3 * k, 3 * k + 1, 3 * k + 2]
    }

    pub fn barycenter_vertex(&self, k: usize) -> usize {
        self.macro_vertex_count + k
    }
}

/// Splits macro cell `(a, b, c)` with barycenter `g` into `(a, b, g)`,
/// `(b, c, g)`, `(c, a, g)`.
pub fn alfeld_split(m: &TriMesh) -> Result<SplitMesh> {
    let nv = m.num_vertices();
    let mut vertices = m.vertices.clone();
    let mut cells = Vec::with_capacity(3 * m.num_cells());
    let mut macro_cell_of_cell = Vec::with_capacity(3 * m.num_cells());
    for k in 0..m.num_cells() {
        vertices.push(m.centroid(k));
        let g = nv + k;
        let [a, b, c] = m.cells[k];
        cells.extend([[a, b, g], [b, c, g], [c, a, g]]);
        macro_cell_of_cell.extend([k; 3]);
    }
    let mesh = TriMesh::new(vertices, cells)?;
    debug_assert_eq!(&mesh.edges[..m.num_edges()], &m.edges[..]);
    Ok(SplitMesh {
        mesh,
        macro_cell_of_cell,
        macro_vertex_count: nv,
        macro_edge_count: m.num_edges(),
    })
}

#[derive(Debug, Clone)]
pub struct Level {
    pub macro_mesh: TriMesh,
    pub split: SplitMesh,
    /// Maps from this level to the next coarser one; `None` on level 0.
    pub parent: Option<RefinementMaps>,
}

/// Level 0 is the coarse structured grid; every further level is the red
/// refinement of the previous macro mesh, Alfeld-split independently.
#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    levels: Vec<Level>,
}

impl MeshHierarchy {
    pub fn new(coarse_n: usize, num_levels: usize) -> Result<Self> {
        if num_levels == 0 {
            return Err(Error::Config("hierarchy needs at least one level".into()));
        }
        let coarse = structured_unit_square(coarse_n)?;
        let mut levels = vec![Level {
            split: alfeld_split(&coarse)?,
            macro_mesh: coarse,
            parent: None,
        }];
        for _ in 1..num_levels {
            let (fine, maps) = uniform_refine(&levels.last().unwrap().macro_mesh)?;
            levels.push(Level {
                split: alfeld_split(&fine)?,
                macro_mesh: fine,
                parent: Some(maps),
            });
        }
        Ok(Self { levels })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, l: usize) -> &Level {
        &self.levels[l]
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }
}

//! Structured triangulations of graph-bounded domains.
//!
//! Every mesh is the image of an `nx x ny` grid on the unit square under
//! `(s, t) -> (x(s), lower(x) + t (upper(x) - lower(x)))`. Each grid cell is
//! split along the diagonal from `(i, j)` to `(i + 1, j + 1)`.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::geometry::{CellSpec, RectangleSpec, ThinDomainSpec};

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Bottom,
    Top,
    Left,
    Right,
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundaryTag::Bottom => "bottom",
            BoundaryTag::Top => "top",
            BoundaryTag::Left => "left",
            BoundaryTag::Right => "right",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    id: u64,
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    periodic_pairs: Vec<(usize, usize)>,
    grid: (usize, usize),
    provenance: String,
}

pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    /// Validates positive orientation of every triangle.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<BoundaryEdge>,
        periodic_pairs: Vec<(usize, usize)>,
        grid: (usize, usize),
        provenance: String,
    ) -> Result<Self> {
        for (k, t) in triangles.iter().enumerate() {
            if t.iter().any(|&n| n >= nodes.len()) {
                return Err(Error::Geometry(format!("triangle {k} references a missing node")));
            }
            let area = signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
            if !(area > 0.0) {
                return Err(Error::Geometry(format!("triangle {k} has non-positive area {area:e}")));
            }
        }
        Ok(Self {
            id: NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed),
            nodes,
            triangles,
            boundary,
            periodic_pairs,
            grid,
            provenance,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn periodic_pairs(&self) -> &[(usize, usize)] {
        &self.periodic_pairs
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Grid dimensions `(nx, ny)` of the underlying structured grid.
    pub fn grid(&self) -> (usize, usize) {
        self.grid
    }

    pub fn triangle_vertices(&self, k: usize) -> [[f64; 2]; 3] {
        let t = self.triangles[k];
        [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]]
    }

    pub fn triangle_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(k);
        signed_area(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|k| self.triangle_area(k)).sum()
    }

    /// Sorted, de-duplicated nodes on edges with `tag`.
    pub fn tagged_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary
            .iter()
            .filter(|e| e.tag == tag)
            .flat_map(|e| e.nodes)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Writes `nodes.csv`, `triangles.csv` and `boundary.csv` into `dir`.
    pub fn export_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, body: String| -> Result<()> {
            let path = dir.join(name);
            let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            f.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))
        };
        let mut s = String::from("node,x1,x2\n");
        for (i, p) in self.nodes.iter().enumerate() {
            s.push_str(&format!("{i},{:.15e},{:.15e}\n", p[0], p[1]));
        }
        write("nodes.csv", s)?;
        let mut s = String::from("triangle,n0,n1,n2\n");
        for (k, t) in self.triangles.iter().enumerate() {
            s.push_str(&format!("{k},{},{},{}\n", t[0], t[1], t[2]));
        }
        write("triangles.csv", s)?;
        let mut s = String::from("n0,n1,tag\n");
        for e in &self.boundary {
            s.push_str(&format!("{},{},{}\n", e.nodes[0], e.nodes[1], e.tag));
        }
        write("boundary.csv", s)
    }
}

/// Index of grid node `(i, j)` in a mesh with `ny + 1` nodes per column.
pub fn grid_node(i: usize, j: usize, ny: usize) -> usize {
    i * (ny + 1) + j
}

pub fn mesh_graph_domain(
    lower: impl Fn(f64) -> f64,
    upper: impl Fn(f64) -> f64,
    x_range: (f64, f64),
    nx: usize,
    ny: usize,
) -> Result<Mesh> {
    mesh_graph_domain_with(lower, upper, x_range, nx, ny, None, "graph domain".into())
}

/// Column break: rows `0..=rows` span `[lower, level]`, the rest `[level, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Knee {
    level: f64,
    rows: usize,
}

impl Knee {
    fn column(&self, lo: f64, hi: f64) -> f64 {
        let gap = 1e-6 * (hi - lo);
        self.level.max(lo + gap).min(hi - gap)
    }
}

fn mesh_graph_domain_with(
    lower: impl Fn(f64) -> f64,
    upper: impl Fn(f64) -> f64,
    x_range: (f64, f64),
    nx: usize,
    ny: usize,
    knee: Option<Knee>,
    provenance: String,
) -> Result<Mesh> {
    if nx < 2 || ny < 2 {
        return Err(Error::Argument(format!("mesh needs nx, ny >= 2 (got {nx} x {ny})")));
    }
    let (a, b) = x_range;
    if !(b > a) {
        return Err(Error::Argument(format!("empty x range ({a}, {b})")));
    }
    let xs: Vec<f64> = (0..=nx)
        .map(|i| if i == nx { b } else { a + (b - a) * i as f64 / nx as f64 })
        .collect();
    mesh_columns(lower, upper, &xs, ny, knee, provenance)
}

fn mesh_columns(
    lower: impl Fn(f64) -> f64,
    upper: impl Fn(f64) -> f64,
    xs: &[f64],
    ny: usize,
    knee: Option<Knee>,
    provenance: String,
) -> Result<Mesh> {
    let nx = xs.len() - 1;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for &x in xs {
        let (lo, hi) = (lower(x), upper(x));
        if !(hi > lo) {
            return Err(Error::Geometry(format!(
                "degenerate fiber at x = {x}: upper {hi} <= lower {lo}"
            )));
        }
        match knee {
            None => {
                for j in 0..=ny {
                    let t = j as f64 / ny as f64;
                    let y = if j == ny { hi } else { lo + t * (hi - lo) };
                    nodes.push([x, y]);
                }
            }
            Some(k) => {
                let mid = k.column(lo, hi);
                for j in 0..=ny {
                    let y = if j == ny {
                        hi
                    } else if j <= k.rows {
                        lo + (mid - lo) * j as f64 / k.rows as f64
                    } else {
                        mid + (hi - mid) * (j - k.rows) as f64 / (ny - k.rows) as f64
                    };
                    nodes.push([x, y]);
                }
            }
        }
    }
    let n = |i, j| grid_node(i, j, ny);
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            triangles.push([n(i, j), n(i + 1, j), n(i + 1, j + 1)]);
            triangles.push([n(i, j), n(i + 1, j + 1), n(i, j + 1)]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary.push(BoundaryEdge {
            nodes: [n(i, 0), n(i + 1, 0)],
            tag: BoundaryTag::Bottom,
        });
    }
    for j in 0..ny {
        boundary.push(BoundaryEdge {
            nodes: [n(nx, j), n(nx, j + 1)],
            tag: BoundaryTag::Right,
        });
    }
    for i in (0..nx).rev() {
        boundary.push(BoundaryEdge {
            nodes: [n(i + 1, ny), n(i, ny)],
            tag: BoundaryTag::Top,
        });
    }
    for j in (0..ny).rev() {
        boundary.push(BoundaryEdge {
            nodes: [n(0, j + 1), n(0, j)],
            tag: BoundaryTag::Left,
        });
    }
    Mesh::new(nodes, triangles, boundary, Vec::new(), (nx, ny), provenance)
}

/// Mesh of the rescaled thin domain over `x1 in (0, 1)`, about `nx` columns.
///
/// With an oscillating bottom each column breaks at `x2 = -min h`: the rows
/// below follow the bottom, the rows above follow only the top, and the
/// rows are shared in proportion to the two thicknesses. The columns are
/// then laid out per bottom period and clustered around the minimum of `h`,
/// which falls midway between two columns.
pub fn mesh_thin_domain(spec: &ThinDomainSpec, nx: usize, ny: usize) -> Result<Mesh> {
    let provenance = format!("thin domain eps={} alpha={} nx={nx} ny={ny}", spec.epsilon, spec.alpha);
    if spec.h.is_constant() {
        return mesh_graph_domain_with(
            |x| spec.lower(x),
            |x| spec.upper(x),
            (0.0, 1.0),
            nx,
            ny,
            None,
            provenance,
        );
    }
    if nx < 2 || ny < 2 {
        return Err(Error::Argument(format!("mesh needs nx, ny >= 2 (got {nx} x {ny})")));
    }
    let (h0, h1, g1) = (spec.h.min(), spec.h.max(), spec.g.max());
    let share = (h1 - h0) / (h1 - h0 + g1 + h0);
    let knee = Knee {
        level: -h0,
        rows: ((ny as f64 * share).round() as usize).clamp(1, ny - 1),
    };
    let xs = bottom_columns(spec, nx);
    mesh_columns(|x| spec.lower(x), |x| spec.upper(x), &xs, ny, Some(knee), provenance)
}

/// Slope of the column map at the minimum of `h`, relative to uniform spacing.
const CLUSTER: f64 = 0.25;

fn bottom_columns(spec: &ThinDomainSpec, nx: usize) -> Vec<f64> {
    let period = spec.bottom_scale() * spec.h.period();
    let per = ((nx as f64 * period).ceil() as usize).max(4);
    let per = per + per % 2;
    let centre = spec.h.argmin() / spec.h.period();
    let map = |s: f64| CLUSTER * s + 4.0 * (1.0 - CLUSTER) * s.powi(3);
    let mut xs = vec![0.0];
    let first = (-centre - 1.0).floor() as i64;
    let last = (1.0 / period - centre + 1.0).ceil() as i64;
    for k in first..=last {
        for m in 0..per {
            let s = (m as f64 + 0.5) / per as f64 - 0.5;
            let x = period * (k as f64 + centre + map(s));
            if x > 0.0 && x < 1.0 {
                xs.push(x);
            }
        }
    }
    xs.push(1.0);
    let n = xs.len();
    if n > 3 && xs[1] < 0.5 * (xs[2] - xs[1]) {
        xs.remove(1);
    }
    let n = xs.len();
    if n > 3 && 1.0 - xs[n - 2] < 0.5 * (xs[n - 2] - xs[n - 3]) {
        xs.remove(n - 2);
    }
    xs
}

/// Mesh of the basic cell. Top edges are the oscillating boundary, bottom
/// edges the flat floor `y2 = -h0`, and left/right the lateral boundary whose
/// nodes are paired (left master, right slave).
pub fn mesh_cell(cell: &CellSpec, nodes_per_period: usize, ny: usize) -> Result<Mesh> {
    if nodes_per_period < 8 {
        return Err(Error::Argument(format!(
            "nodes_per_period must be >= 8, got {nodes_per_period}"
        )));
    }
    let l1 = cell.period();
    let h0 = cell.h0;
    let mesh = mesh_graph_domain_with(
        |_| -h0,
        |y| cell.g.eval(y),
        (0.0, l1),
        nodes_per_period,
        ny,
        None,
        format!("cell g={} h0={h0} n={nodes_per_period} ny={ny}", cell.g),
    )?;
    let pairs = (0..=ny)
        .map(|j| (grid_node(0, j, ny), grid_node(nodes_per_period, j, ny)))
        .collect();
    Ok(Mesh {
        periodic_pairs: pairs,
        ..mesh
    })
}

/// Mesh of the rectangle; its bottom edge is the Dirichlet edge.
pub fn mesh_rectangle(rect: &RectangleSpec, nx: usize, ny: usize) -> Result<Mesh> {
    let a = rect.half_width();
    mesh_graph_domain_with(
        |_| 0.0,
        |_| 1.0,
        (-a, a),
        nx,
        ny,
        None,
        format!("rectangle eps={} alpha={} nx={nx} ny={ny}", rect.epsilon, rect.alpha),
    )
}

/// Grid policy for the thin-domain solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionPolicy {
    pub points_per_period: usize,
    pub min_ny: usize,
    /// Upper bound on the number of triangles.
    pub max_cells: usize,
}

impl Default for ResolutionPolicy {
    fn default() -> Self {
        Self {
            points_per_period: 8,
            min_ny: 8,
            max_cells: 2_000_000,
        }
    }
}

/// Picks `(nx, ny)` so that both oscillation periods get `points_per_period`
/// columns and the physical (unscaled) vertical spacing `eps * H / ny` does
/// not exceed the horizontal spacing `1 / nx`.
pub fn resolution_for(spec: &ThinDomainSpec, policy: &ResolutionPolicy) -> Result<(usize, usize)> {
    let ppp = policy.points_per_period;
    if ppp < 4 {
        return Err(Error::Argument(format!("points_per_period must be >= 4, got {ppp}")));
    }
    let columns = |period: f64| ((ppp as f64 / period) - 1e-9).ceil() as usize;
    let mut nx = ppp;
    if !spec.g.is_constant() {
        nx = nx.max(columns(spec.epsilon * spec.g.period()));
    }
    if !spec.h.is_constant() {
        nx = nx.max(columns(spec.bottom_scale() * spec.h.period()));
    }
    let ny_iso = (spec.epsilon * spec.max_height() * nx as f64 - 1e-9).ceil() as usize;
    let ny = ny_iso.max(policy.min_ny).max(2);
    let required = 2usize.saturating_mul(nx).saturating_mul(ny);
    if required > policy.max_cells {
        return Err(Error::Capacity {
            required,
            nx,
            ny,
            cap: policy.max_cells,
        });
    }
    Ok((nx, ny))
}

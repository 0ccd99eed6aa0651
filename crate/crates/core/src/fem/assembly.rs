//! P1 assembly of stiffness, mass and load terms.

use crate::error::{Error, Result};
use crate::fem::quadrature::gauss_legendre_unit;
use crate::fem::sparse::CsrMatrix;
use crate::mesh::{BoundaryTag, Mesh};

/// Diagonal coefficient pair in `-(a11 d11 u + a22 d22 u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionTensor {
    a11: f64,
    a22: f64,
}

impl DiffusionTensor {
    pub fn new(a11: f64, a22: f64) -> Result<Self> {
        if a11 > 0.0 && a22 > 0.0 && a11.is_finite() && a22.is_finite() {
            Ok(Self { a11, a22 })
        } else {
            Err(Error::Argument(format!(
                "diffusion tensor must be positive, got ({a11}, {a22})"
            )))
        }
    }

    pub fn isotropic() -> Self {
        Self { a11: 1.0, a22: 1.0 }
    }

    /// `(1, 1 / eps^2)`, the rescaled thin-domain operator.
    pub fn thin(epsilon: f64) -> Result<Self> {
        Self::new(1.0, 1.0 / (epsilon * epsilon))
    }

    pub fn a11(&self) -> f64 {
        self.a11
    }

    pub fn a22(&self) -> f64 {
        self.a22
    }
}

/// Area and constant gradients of the three barycentric hat functions.
pub fn element_gradients(mesh: &Mesh, k: usize) -> (f64, [[f64; 2]; 3]) {
    let p = mesh.triangle_vertices(k);
    let area = mesh.triangle_area(k);
    let mut grads = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, l) = ((i + 1) % 3, (i + 2) % 3);
        grads[i] = [(p[j][1] - p[l][1]) / (2.0 * area), (p[l][0] - p[j][0]) / (2.0 * area)];
    }
    (area, grads)
}

pub fn assemble_stiffness(mesh: &Mesh, tensor: DiffusionTensor) -> CsrMatrix {
    let mut trips = Vec::with_capacity(9 * mesh.triangle_count());
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let (area, g) = element_gradients(mesh, k);
        for a in 0..3 {
            for b in 0..3 {
                let v = area * (tensor.a11 * g[a][0] * g[b][0] + tensor.a22 * g[a][1] * g[b][1]);
                trips.push((tri[a], tri[b], v));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.node_count(), trips, true)
}

/// Consistent P1 mass matrix.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let mut trips = Vec::with_capacity(9 * mesh.triangle_count());
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(k);
        for a in 0..3 {
            for b in 0..3 {
                let v = if a == b { area / 6.0 } else { area / 12.0 };
                trips.push((tri[a], tri[b], v));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.node_count(), trips, true)
}

/// `b_i = int f phi_i` with the edge-midpoint rule (exact for quadratics).
pub fn assemble_load(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut b = vec![0.0; mesh.node_count()];
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_vertices(k);
        let area = mesh.triangle_area(k);
        let mid = |a: usize, c: usize| f(0.5 * (p[a][0] + p[c][0]), 0.5 * (p[a][1] + p[c][1]));
        let (m01, m12, m20) = (mid(0, 1), mid(1, 2), mid(2, 0));
        b[tri[0]] += area / 6.0 * (m01 + m20);
        b[tri[1]] += area / 6.0 * (m01 + m12);
        b[tri[2]] += area / 6.0 * (m12 + m20);
    }
    b
}

/// Line measure for [`assemble_boundary_load`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineMeasure {
    /// `ds` along the polygonal edge.
    Arclength,
    /// `|dx1|`, the horizontal projection of the edge.
    Horizontal,
}

/// `b_i = int_{edges with tag} density(x) phi_i dmu`, 2-point Gauss per edge.
pub fn assemble_boundary_load(
    mesh: &Mesh,
    tag: BoundaryTag,
    density: impl Fn(f64, f64) -> f64,
    measure: LineMeasure,
) -> Result<Vec<f64>> {
    let rule = gauss_legendre_unit(2);
    let mut b = vec![0.0; mesh.node_count()];
    let mut found = false;
    for e in mesh.boundary_edges().iter().filter(|e| e.tag == tag) {
        found = true;
        let (pa, pb) = (mesh.nodes()[e.nodes[0]], mesh.nodes()[e.nodes[1]]);
        let len = match measure {
            LineMeasure::Arclength => ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt(),
            LineMeasure::Horizontal => (pb[0] - pa[0]).abs(),
        };
        for &(s, w) in &rule {
            let x = pa[0] + s * (pb[0] - pa[0]);
            let y = pa[1] + s * (pb[1] - pa[1]);
            let d = w * len * density(x, y);
            b[e.nodes[0]] += d * (1.0 - s);
            b[e.nodes[1]] += d * s;
        }
    }
    if found {
        Ok(b)
    } else {
        Err(Error::UnknownTag(tag.to_string()))
    }
}

//! Nodal P1 fields and their integrals.

use crate::error::{Error, Result};
use crate::fem::assembly::{element_gradients, DiffusionTensor};
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    mesh_id: u64,
}

impl Field {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::Argument(format!(
                "field has {} values for {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("field value at node {i} is not finite")));
        }
        Ok(Self {
            values,
            mesh_id: mesh.id(),
        })
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        Self::new(mesh, mesh.nodes().iter().map(|p| f(p[0], p[1])).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn check(&self, mesh: &Mesh) {
        assert_eq!(self.mesh_id, mesh.id(), "field belongs to a different mesh");
    }
}

/// `sqrt(u^T M u)` with the exact P1 mass matrix.
pub fn l2_norm(mesh: &Mesh, field: &Field) -> f64 {
    field.check(mesh);
    l2_norm_values(mesh, field.values())
}

pub(crate) fn l2_norm_values(mesh: &Mesh, u: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (k, t) in mesh.triangles().iter().enumerate() {
        let (a, b, c) = (u[t[0]], u[t[1]], u[t[2]]);
        let s = a + b + c;
        acc += mesh.triangle_area(k) / 12.0 * (a * a + b * b + c * c + s * s);
    }
    acc.max(0.0).sqrt()
}

/// L2 norm of `field - I(reference)`, with `I` nodal interpolation.
pub fn l2_error(mesh: &Mesh, field: &Field, reference: impl Fn(f64, f64) -> f64) -> f64 {
    field.check(mesh);
    let diff: Vec<f64> = mesh
        .nodes()
        .iter()
        .zip(field.values())
        .map(|(p, u)| u - reference(p[0], p[1]))
        .collect();
    l2_norm_values(mesh, &diff)
}

pub fn integrate(mesh: &Mesh, field: &Field) -> f64 {
    field.check(mesh);
    let u = field.values();
    mesh.triangles()
        .iter()
        .enumerate()
        .map(|(k, t)| mesh.triangle_area(k) / 3.0 * (u[t[0]] + u[t[1]] + u[t[2]]))
        .sum()
}

/// Piecewise-constant element gradient of a P1 field.
pub fn element_gradient(mesh: &Mesh, field: &Field, k: usize) -> [f64; 2] {
    let (_, g) = element_gradients(mesh, k);
    let t = mesh.triangles()[k];
    let u = field.values();
    let mut out = [0.0; 2];
    for a in 0..3 {
        out[0] += u[t[a]] * g[a][0];
        out[1] += u[t[a]] * g[a][1];
    }
    out
}

/// `(|d1 u|_L2, |d2 u|_L2)`.
pub fn gradient_norms(mesh: &Mesh, field: &Field) -> (f64, f64) {
    field.check(mesh);
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in 0..mesh.triangle_count() {
        let g = element_gradient(mesh, field, k);
        let area = mesh.triangle_area(k);
        s1 += area * g[0] * g[0];
        s2 += area * g[1] * g[1];
    }
    (s1.sqrt(), s2.sqrt())
}

/// `int a11 (d1 u)^2 + a22 (d2 u)^2`.
pub fn energy(mesh: &Mesh, field: &Field, tensor: DiffusionTensor) -> f64 {
    let (n1, n2) = gradient_norms(mesh, field);
    tensor.a11() * n1 * n1 + tensor.a22() * n2 * n2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::mesh_graph_domain;
    use approx::assert_abs_diff_eq;

    #[test]
    fn norms_on_unit_square() {
        let mesh = mesh_graph_domain(|_| 0.0, |_| 1.0, (0.0, 1.0), 16, 16).unwrap();
        let one = Field::from_fn(&mesh, |_, _| 1.0).unwrap();
        assert_abs_diff_eq!(l2_norm(&mesh, &one), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(integrate(&mesh, &one), mesh.area(), epsilon = 1e-14);
        let x = Field::from_fn(&mesh, |x, _| x).unwrap();
        assert_abs_diff_eq!(l2_norm(&mesh, &x), 1.0 / 3f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(integrate(&mesh, &x), 0.5, epsilon = 1e-14);
        let (g1, g2) = gradient_norms(&mesh, &x);
        assert_abs_diff_eq!(g1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g2, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l2_error(&mesh, &x, |x, _| x), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn field_validation() {
        let mesh = mesh_graph_domain(|_| 0.0, |_| 1.0, (0.0, 1.0), 2, 2).unwrap();
        assert!(Field::new(&mesh, vec![0.0; 3]).is_err());
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert!(Field::new(&mesh, v).is_err());
    }
}

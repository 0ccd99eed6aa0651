use std::collections::BTreeSet;
use std::f64::consts::PI;

use thinhom::fem::assembly::{assemble_load, assemble_mass, assemble_stiffness, DiffusionTensor};
use thinhom::fem::cg::{solve_cg, CgOptions};
use thinhom::fem::constraints::{apply_dirichlet, LinearSystem};
use thinhom::fem::field::{l2_error, Field};
use thinhom::geometry::{CellSpec, Profile, RectangleSpec, ThinDomainSpec};
use thinhom::mesh::{mesh_cell, mesh_graph_domain, mesh_rectangle, mesh_thin_domain, BoundaryTag, Mesh};

fn unit_square(n: usize) -> Mesh {
    mesh_graph_domain(|_| 0.0, |_| 1.0, (0.0, 1.0), n, n).unwrap()
}

fn rate(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn dirichlet_error(n: usize) -> f64 {
    let mesh = unit_square(n);
    let exact = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
    let k = assemble_stiffness(&mesh, DiffusionTensor::isotropic());
    let b = assemble_load(&mesh, |x, y| 2.0 * PI * PI * exact(x, y));
    let system = LinearSystem::new(k, b).unwrap();
    let boundary: BTreeSet<usize> = [
        BoundaryTag::Bottom,
        BoundaryTag::Top,
        BoundaryTag::Left,
        BoundaryTag::Right,
    ]
    .into_iter()
    .flat_map(|t| mesh.tagged_nodes(t))
    .collect();
    let nodes: Vec<usize> = boundary.into_iter().collect();
    let reduced = apply_dirichlet(&system, &nodes, &vec![0.0; nodes.len()]).unwrap();
    let sol = solve_cg(&reduced.system.matrix, &reduced.system.rhs, &CgOptions::default()).unwrap();
    let u = Field::new(&mesh, reduced.expand(&sol.x)).unwrap();
    l2_error(&mesh, &u, exact)
}

#[test]
fn manufactured_dirichlet_solution_converges_at_second_order() {
    let errors: Vec<f64> = [8, 16, 32].into_iter().map(dirichlet_error).collect();
    for r in rate(&errors) {
        assert!(r >= 1.9, "rates {:?} from {errors:?}", rate(&errors));
    }
    assert!(errors[2] < 2e-3);
}

#[test]
fn anisotropic_neumann_with_mass_converges() {
    let tensor = DiffusionTensor::new(1.0, 4.0).unwrap();
    let exact = |x: f64, y: f64| (PI * x).cos() * (PI * y).cos();
    let errors: Vec<f64> = [8, 16, 32]
        .into_iter()
        .map(|n| {
            let mesh = unit_square(n);
            let a = assemble_stiffness(&mesh, tensor).add_scaled(1.0, &assemble_mass(&mesh));
            let b = assemble_load(&mesh, |x, y| (5.0 * PI * PI + 1.0) * exact(x, y));
            let sol = solve_cg(&a, &b, &CgOptions::default()).unwrap();
            l2_error(&mesh, &Field::new(&mesh, sol.x).unwrap(), exact)
        })
        .collect();
    for r in rate(&errors) {
        assert!(r >= 1.9, "rates {:?} from {errors:?}", rate(&errors));
    }
}

fn kernel_residual(mesh: &Mesh, tensor: DiffusionTensor) -> f64 {
    let k = assemble_stiffness(mesh, tensor);
    k.mul_vec(&vec![1.0; k.dim()]).iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn stiffness_annihilates_constants_on_every_mesh_family() {
    let g = Profile::sine(1.0, &[(0.5, 1)], 1.0).unwrap();
    let h = Profile::cosine(1.0, &[(1.0, 1)], 1.0).unwrap();
    let mut meshes = vec![
        (unit_square(16), DiffusionTensor::isotropic()),
        (
            mesh_cell(&CellSpec::new(g.clone(), 0.0).unwrap(), 32, 16).unwrap(),
            DiffusionTensor::isotropic(),
        ),
        (
            mesh_rectangle(&RectangleSpec::new(0.3, 2.0).unwrap(), 16, 64).unwrap(),
            DiffusionTensor::thin(0.3).unwrap(),
        ),
    ];
    for eps in [0.2, 0.1] {
        let spec = ThinDomainSpec::new(eps, 1.5, g.clone(), h.clone()).unwrap();
        meshes.push((
            mesh_thin_domain(&spec, 160, 60).unwrap(),
            DiffusionTensor::thin(eps).unwrap(),
        ));
    }
    for (mesh, tensor) in &meshes {
        let r = kernel_residual(mesh, *tensor);
        assert!(r <= 1e-10, "{}: |A 1| = {r:e}", mesh.provenance());
    }
}

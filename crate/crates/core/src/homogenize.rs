//! Cell problem and homogenized coefficients.
//!
//! On the basic cell `Y* = {0 < y1 < L1, -h0 < y2 < g(y1)}` the corrector
//! `X` is harmonic, `L1`-periodic in `y1`, has zero flux through the floor
//! and flux `-g'/sqrt(1 + g'^2)` through the oscillating top. The effective
//! diffusion is `q_hat = (1/L1) int_{Y*} (1 - dX/dy1)` and the bottom
//! oscillation contributes the mass correction `p = mean(h) - min(h)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::field::element_gradient;
use crate::fem::{
    apply_periodic, assemble_boundary_load, assemble_stiffness, integrate, solve_cg, CgOptions, DiffusionTensor, Field,
    LineMeasure, LinearSystem, SolveReport,
};
use crate::geometry::{CellSpec, Profile};
use crate::mesh::{mesh_cell, BoundaryTag, Mesh};

/// Oscillating top of the cell.
pub const CELL_TOP: BoundaryTag = BoundaryTag::Top;
/// Flat floor `y2 = -h0`.
pub const CELL_FLOOR: BoundaryTag = BoundaryTag::Bottom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellResolution {
    pub nodes_per_period: usize,
    pub ny: usize,
}

impl CellResolution {
    /// Vertical layers chosen so cells are roughly square at the tallest fiber.
    pub fn isotropic(cell: &CellSpec, nodes_per_period: usize) -> Self {
        let height = cell.g.max() + cell.h0;
        let ny = ((nodes_per_period as f64 * height / cell.period()) - 1e-9).ceil() as usize;
        Self {
            nodes_per_period,
            ny: ny.max(4),
        }
    }

    pub fn refined(&self) -> Self {
        Self {
            nodes_per_period: 2 * self.nodes_per_period,
            ny: 2 * self.ny,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellSolution {
    pub cell: CellSpec,
    pub mesh: Mesh,
    /// Zero-mean corrector.
    pub x: Field,
    pub report: SolveReport,
    pub resolution: CellResolution,
}

pub fn solve_cell_problem(cell: &CellSpec, resolution: CellResolution, opts: &CgOptions) -> Result<CellSolution> {
    if !cell.g.has_continuous_derivative() {
        return Err(Error::Argument(
            "cell problem needs a top profile with continuous derivative (constant or trig series)".into(),
        ));
    }
    let mesh = mesh_cell(cell, resolution.nodes_per_period, resolution.ny)?;
    let stiffness = assemble_stiffness(&mesh, DiffusionTensor::isotropic());
    let g = &cell.g;
    // N1 ds = -g'(y1) dy1 on the graph y2 = g(y1).
    let load = assemble_boundary_load(&mesh, CELL_TOP, |y1, _| -g.eval_deriv(y1), LineMeasure::Horizontal)?;
    let system = LinearSystem::new(stiffness, load)?;
    let reduced = apply_periodic(&system, mesh.periodic_pairs())?;
    let sol = solve_cg(&reduced.system.matrix, &reduced.system.rhs, &opts.with_pin(0))?;
    let mut values = reduced.expand(&sol.x);
    let raw = Field::new(&mesh, values.clone())?;
    let mean = integrate(&mesh, &raw) / mesh.area();
    values.iter_mut().for_each(|v| *v -= mean);
    for &(m, s) in mesh.periodic_pairs() {
        assert_eq!(values[m], values[s], "corrector is not periodic at pair ({m}, {s})");
    }
    let x = Field::new(&mesh, values)?;
    Ok(CellSolution {
        cell: cell.clone(),
        mesh,
        x,
        report: sol.report,
        resolution,
    })
}

/// `(1/L1) int_{Y*} (1 - dX/dy1)`, exact per element.
pub fn compute_qhat(sol: &CellSolution) -> f64 {
    let total: f64 = (0..sol.mesh.triangle_count())
        .map(|k| sol.mesh.triangle_area(k) * (1.0 - element_gradient(&sol.mesh, &sol.x, k)[0]))
        .sum();
    total / sol.cell.period()
}

/// `(1/L1) int_{Y*} |grad(y1 - X)|^2`.
pub fn compute_qhat_energy(sol: &CellSolution) -> f64 {
    let total: f64 = (0..sol.mesh.triangle_count())
        .map(|k| {
            let g = element_gradient(&sol.mesh, &sol.x, k);
            sol.mesh.triangle_area(k) * ((1.0 - g[0]).powi(2) + g[1] * g[1])
        })
        .sum();
    total / sol.cell.period()
}

/// `int_{Y*} |grad X|^2` and the boundary work `int_{B1} (-g'/sqrt(1+g'^2)) X ds`.
pub fn corrector_energy_balance(sol: &CellSolution) -> Result<(f64, f64)> {
    let (n1, n2) = crate::fem::gradient_norms(&sol.mesh, &sol.x);
    let g = &sol.cell.g;
    let load = assemble_boundary_load(&sol.mesh, CELL_TOP, |y1, _| -g.eval_deriv(y1), LineMeasure::Horizontal)?;
    let work = load.iter().zip(sol.x.values()).map(|(b, x)| b * x).sum();
    Ok((n1 * n1 + n2 * n2, work))
}

/// `mean(h) - min(h)`.
pub fn compute_p(h: &Profile) -> f64 {
    h.mean() - h.min()
}

/// `|Y*| / L1 = mean(g) + h0`.
pub fn compute_area_ratio(cell: &CellSpec) -> f64 {
    cell.g.mean() + cell.h0
}

/// Fraction of `(0, L1)` inside `Y*` at height `x2`.
pub fn compute_theta(cell: &CellSpec, x2: f64) -> Result<f64> {
    let g1 = cell.g.max();
    if !(x2 >= -cell.h0 && x2 <= g1) {
        return Err(Error::Argument(format!(
            "x2 = {x2} lies outside (-h0, g1) = ({}, {g1})",
            -cell.h0
        )));
    }
    if x2 < cell.g.min() {
        return Ok(1.0);
    }
    Ok(cell.g.superlevel_fraction(x2))
}

/// `theta` sampled at `n + 1` equispaced heights on `[-h0, g1]`.
pub fn theta_table(cell: &CellSpec, n: usize) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = (-cell.h0, cell.g.max());
    (0..=n)
        .map(|i| {
            let z = if i == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / n as f64
            };
            compute_theta(cell, z).map(|t| (z, t))
        })
        .collect()
}

/// Area of the part of a triangle with `lo <= y <= hi`.
fn strip_area(tri: [[f64; 2]; 3], lo: f64, hi: f64) -> f64 {
    let clip = |poly: Vec<[f64; 2]>, level: f64, keep_above: bool| -> Vec<[f64; 2]> {
        let inside = |p: &[f64; 2]| if keep_above { p[1] >= level } else { p[1] <= level };
        let mut out = Vec::with_capacity(poly.len() + 2);
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            let (ia, ib) = (inside(&a), inside(&b));
            if ia {
                out.push(a);
            }
            if ia != ib {
                let t = (level - a[1]) / (b[1] - a[1]);
                out.push([a[0] + t * (b[0] - a[0]), level]);
            }
        }
        out
    };
    let poly = clip(clip(tri.to_vec(), lo, true), hi, false);
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        twice += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * twice
}

/// Strip averages of `q(x2) = (1/L1) int (1 - dX/dy1) chi(s, x2) ds` on
/// `bins` equal strips of `[-h0, g1]`; returns `(strip midpoint, q)`.
pub fn q_profile(sol: &CellSolution, bins: usize) -> Vec<(f64, f64)> {
    let (lo, hi) = (-sol.cell.h0, sol.cell.g.max());
    let dz = (hi - lo) / bins as f64;
    let mut acc = vec![0.0; bins];
    for k in 0..sol.mesh.triangle_count() {
        let tri = sol.mesh.triangle_vertices(k);
        let weight = 1.0 - element_gradient(&sol.mesh, &sol.x, k)[0];
        let ymin = tri.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let ymax = tri.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let first = (((ymin - lo) / dz).floor().max(0.0) as usize).min(bins - 1);
        let last = (((ymax - lo) / dz).ceil().max(1.0) as usize).min(bins);
        for (b, slot) in acc.iter_mut().enumerate().take(last).skip(first) {
            let (z0, z1) = (lo + b as f64 * dz, lo + (b + 1) as f64 * dz);
            *slot += weight * strip_area(tri, z0, z1);
        }
    }
    let l1 = sol.cell.period();
    acc.into_iter()
        .enumerate()
        .map(|(b, a)| (lo + (b as f64 + 0.5) * dz, a / (l1 * dz)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedCoefficients {
    /// Richardson extrapolant of the flux form.
    pub q_hat: f64,
    pub q_hat_error_bar: f64,
    pub q_hat_coarse: f64,
    pub q_hat_fine: f64,
    /// Energy form at the fine level.
    pub q_hat_energy: f64,
    pub p: f64,
    pub area_ratio: f64,
    pub theta: Vec<(f64, f64)>,
    pub q_profile: Option<Vec<(f64, f64)>>,
    pub resolution: CellResolution,
    pub iterations: usize,
}

impl HomogenizedCoefficients {
    /// `|Y*|/L1 + p`, the zeroth-order coefficient of the limit problem.
    pub fn mass_coeff(&self) -> f64 {
        self.area_ratio + self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellOptions {
    /// Fine level; the coarse level uses half as many nodes per period.
    pub nodes_per_period: usize,
    pub theta_samples: usize,
    pub q_profile_bins: Option<usize>,
    pub solver: CgOptions,
}

impl Default for CellOptions {
    fn default() -> Self {
        Self {
            nodes_per_period: 32,
            theta_samples: 64,
            q_profile_bins: None,
            solver: CgOptions::default(),
        }
    }
}

/// Cell solves at two levels, Richardson extrapolation (second order) of `q_hat`.
pub fn homogenized_coefficients(g: &Profile, h: &Profile, opts: &CellOptions) -> Result<HomogenizedCoefficients> {
    if opts.nodes_per_period < 16 || !opts.nodes_per_period.is_multiple_of(2) {
        return Err(Error::Argument(format!(
            "cell nodes_per_period must be even and >= 16, got {}",
            opts.nodes_per_period
        )));
    }
    let cell = CellSpec::new(g.clone(), h.min())?;
    let coarse_res = CellResolution::isotropic(&cell, opts.nodes_per_period / 2);
    let coarse = solve_cell_problem(&cell, coarse_res, &opts.solver)?;
    let fine = solve_cell_problem(&cell, coarse_res.refined(), &opts.solver)?;
    let (qc, qf) = (compute_qhat(&coarse), compute_qhat(&fine));
    Ok(HomogenizedCoefficients {
        q_hat: qf + (qf - qc) / 3.0,
        q_hat_error_bar: (qf - qc).abs() / 3.0,
        q_hat_coarse: qc,
        q_hat_fine: qf,
        q_hat_energy: compute_qhat_energy(&fine),
        p: compute_p(h),
        area_ratio: compute_area_ratio(&cell),
        theta: theta_table(&cell, opts.theta_samples)?,
        q_profile: opts.q_profile_bins.map(|b| q_profile(&fine, b)),
        resolution: fine.resolution,
        iterations: coarse.report.iterations + fine.report.iterations,
    })
}

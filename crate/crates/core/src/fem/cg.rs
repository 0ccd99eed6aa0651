//! Preconditioned conjugate gradients (Jacobi or incomplete Cholesky).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub tol: f64,
    /// `None` means `20 n`.
    pub max_iter: Option<usize>,
    /// Unknown held at zero to remove a constant kernel.
    pub pin: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            pin: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    #[default]
    Jacobi,
    /// Zero fill-in incomplete Cholesky, with a diagonal shift retried on breakdown.
    Ic0,
}

impl Preconditioner {
    pub fn name(self) -> &'static str {
        match self {
            Preconditioner::Jacobi => "jacobi",
            Preconditioner::Ic0 => "ic0",
        }
    }
}

/// Lower factor `L` with `A ~ L L^T`, rows stored with the diagonal last.
#[derive(Debug, Clone)]
struct IncompleteCholesky {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl IncompleteCholesky {
    fn new(a: &CsrMatrix, pin: Option<usize>) -> Self {
        let n = a.dim();
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            for (j, v) in a.row(i) {
                let coupled_to_pin = pin.is_some_and(|p| (p == i || p == j) && i != j);
                if j < i && !coupled_to_pin && v != 0.0 {
                    col_idx.push(j);
                }
                if j == i {
                    diag.push(v);
                }
            }
            col_idx.push(i);
            row_ptr.push(col_idx.len());
        }
        let mut shift = 0.0;
        loop {
            if let Some(values) = Self::factor(a, &row_ptr, &col_idx, &diag, shift) {
                return Self {
                    row_ptr,
                    col_idx,
                    values,
                };
            }
            shift = if shift == 0.0 { 1e-3 } else { 2.0 * shift };
        }
    }

    fn factor(a: &CsrMatrix, row_ptr: &[usize], col_idx: &[usize], diag: &[f64], shift: f64) -> Option<Vec<f64>> {
        let n = diag.len();
        let mut values = vec![0.0; col_idx.len()];
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for q in start..end - 1 {
                values[q] = a.get(i, col_idx[q]);
            }
            let mut d = diag[i] * (1.0 + shift);
            for q in start..end - 1 {
                let k = col_idx[q];
                let (ks, ke) = (row_ptr[k], row_ptr[k + 1] - 1);
                let mut s = values[q];
                let (mut x, mut y) = (start, ks);
                while x < q && y < ke {
                    match col_idx[x].cmp(&col_idx[y]) {
                        std::cmp::Ordering::Less => x += 1,
                        std::cmp::Ordering::Greater => y += 1,
                        std::cmp::Ordering::Equal => {
                            s -= values[x] * values[y];
                            x += 1;
                            y += 1;
                        }
                    }
                }
                let l = s / values[ke];
                values[q] = l;
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            values[end - 1] = d.sqrt();
        }
        Some(values)
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        for i in 0..n {
            let (start, end) = (self.row_ptr[i], self.row_ptr[i + 1] - 1);
            let mut s = r[i];
            for q in start..end {
                s -= self.values[q] * z[self.col_idx[q]];
            }
            z[i] = s / self.values[end];
        }
        for i in (0..n).rev() {
            let (start, end) = (self.row_ptr[i], self.row_ptr[i + 1] - 1);
            z[i] /= self.values[end];
            let zi = z[i];
            for q in start..end {
                z[self.col_idx[q]] -= self.values[q] * zi;
            }
        }
    }
}

enum Apply {
    Jacobi(Vec<f64>),
    Ic0(IncompleteCholesky),
}

impl Apply {
    fn run(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Apply::Jacobi(inv_diag) => {
                for ((z, r), d) in z.iter_mut().zip(r).zip(inv_diag) {
                    *z = r * d;
                }
            }
            Apply::Ic0(ic) => ic.apply(r, z),
        }
    }
}

impl CgOptions {
    pub fn with_pin(self, pin: usize) -> Self {
        Self { pin: Some(pin), ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub unknowns: usize,
}

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub report: SolveReport,
    /// Relative residual after every iteration, starting with the initial one.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` from a zero initial guess until `|Ax - b| <= tol |b|`.
///
/// With `pin`, row and column `pin` are dropped and `x[pin] = 0`; the load
/// must then sum to zero (within `1e-8` of `sum |b|`) since the operator is
/// assumed to annihilate constants.
pub fn solve_cg(a: &CsrMatrix, b: &[f64], opts: &CgOptions) -> Result<CgSolution> {
    solve_cg_observed(a, b, opts, |_| {})
}

/// [`solve_cg`] calling `observe` with the iterate after every step.
pub fn solve_cg_observed(
    a: &CsrMatrix,
    b: &[f64],
    opts: &CgOptions,
    mut observe: impl FnMut(&[f64]),
) -> Result<CgSolution> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::Argument(format!(
            "rhs length {} does not match dimension {n}",
            b.len()
        )));
    }
    let mut rhs = b.to_vec();
    if let Some(p) = opts.pin {
        if p >= n {
            return Err(Error::Argument(format!("pin {p} outside {n} unknowns")));
        }
        let total: f64 = b.iter().sum();
        let scale: f64 = b.iter().map(|v| v.abs()).sum();
        if scale > 0.0 && total.abs() > 1e-8 * scale {
            return Err(Error::IncompatibleLoad {
                relative_sum: total / scale,
            });
        }
        rhs[p] = 0.0;
    }
    let masked = |v: &mut [f64]| {
        if let Some(p) = opts.pin {
            v[p] = 0.0;
        }
    };
    let max_iter = opts.max_iter.unwrap_or(20 * n.max(1));
    let b_norm = dot(&rhs, &rhs).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x,
            report: SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                unknowns: n,
            },
            history: vec![0.0],
        });
    }
    let precond = match opts.preconditioner {
        Preconditioner::Jacobi => Apply::Jacobi(
            a.diagonal()
                .into_iter()
                .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        ),
        Preconditioner::Ic0 => Apply::Ic0(IncompleteCholesky::new(a, opts.pin)),
    };

    let mut r = rhs;
    let mut z = vec![0.0; n];
    precond.run(&r, &mut z);
    masked(&mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = vec![1.0];
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        masked(&mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence {
                iterations: it,
                history,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        observe(&x);
        let rel = dot(&r, &r).sqrt() / b_norm;
        history.push(rel);
        if rel <= opts.tol {
            return Ok(CgSolution {
                x,
                report: SolveReport {
                    iterations: it,
                    relative_residual: rel,
                    unknowns: n,
                },
                history,
            });
        }
        precond.run(&r, &mut z);
        masked(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            let mut d = shift;
            if i > 0 {
                t.push((i, i - 1, -1.0));
                d += 1.0;
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                d += 1.0;
            }
            t.push((i, i, d));
        }
        CsrMatrix::from_triplets(n, t, true)
    }

    #[test]
    fn solves_spd_system() {
        let a = laplace_1d(50, 0.1);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let sol = solve_cg(&a, &b, &CgOptions::default()).unwrap();
        let r: f64 = a
            .mul_vec(&sol.x)
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(r / bn <= 1e-10);
        assert_eq!(sol.report.iterations + 1, sol.history.len());
    }

    #[test]
    fn pinned_singular_system() {
        let a = laplace_1d(20, 0.0);
        let sol = solve_cg(&a, &[0.0; 20], &CgOptions::default().with_pin(0)).unwrap();
        assert!(sol.x.iter().all(|&v| v == 0.0));
        let mut b = vec![0.0; 20];
        b[3] = 1.0;
        b[15] = -1.0;
        let sol = solve_cg(&a, &b, &CgOptions::default().with_pin(0)).unwrap();
        assert_eq!(sol.x[0], 0.0);
        let ax = a.mul_vec(&sol.x);
        assert!(ax.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-8));
    }

    fn laplace_2d(n: usize, shift: f64) -> CsrMatrix {
        let id = |i: usize, j: usize| i * n + j;
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut d = shift;
                for (a, b) in [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)] {
                    if a < n && b < n {
                        t.push((id(i, j), id(a, b), -1.0));
                        d += 1.0;
                    }
                }
                t.push((id(i, j), id(i, j), d));
            }
        }
        CsrMatrix::from_triplets(n * n, t, true)
    }

    #[test]
    fn incomplete_cholesky_converges_faster() {
        let a = laplace_2d(30, 1e-3);
        let b: Vec<f64> = (0..900).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let jacobi = solve_cg(&a, &b, &CgOptions::default()).unwrap();
        let ic = CgOptions {
            preconditioner: Preconditioner::Ic0,
            ..Default::default()
        };
        let sol = solve_cg(&a, &b, &ic).unwrap();
        let r: Vec<f64> = a.mul_vec(&sol.x).iter().zip(&b).map(|(x, y)| x - y).collect();
        assert!(dot(&r, &r).sqrt() <= 1e-10 * dot(&b, &b).sqrt());
        assert!(
            2 * sol.report.iterations < jacobi.report.iterations,
            "{} vs {}",
            sol.report.iterations,
            jacobi.report.iterations
        );
    }

    #[test]
    fn incomplete_cholesky_is_exact_for_tridiagonal() {
        let a = laplace_1d(40, 0.2);
        let b: Vec<f64> = (0..40).map(|i| (i as f64).cos()).collect();
        let ic = CgOptions {
            preconditioner: Preconditioner::Ic0,
            ..Default::default()
        };
        assert_eq!(solve_cg(&a, &b, &ic).unwrap().report.iterations, 1);
    }

    #[test]
    fn incomplete_cholesky_with_pin() {
        let a = laplace_2d(12, 0.0);
        let mut b = vec![0.0; 144];
        b[5] = 1.0;
        b[100] = -1.0;
        let opts = CgOptions {
            preconditioner: Preconditioner::Ic0,
            ..CgOptions::default().with_pin(0)
        };
        let sol = solve_cg(&a, &b, &opts).unwrap();
        assert_eq!(sol.x[0], 0.0);
        let ax = a.mul_vec(&sol.x);
        assert!(ax.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-8));
    }

    #[test]
    fn incomplete_cholesky_shifts_on_breakdown() {
        let rows = [
            [3.0, -2.0, 0.0, 2.0],
            [-2.0, 3.0, -2.0, 0.0],
            [0.0, -2.0, 3.0, -2.0],
            [2.0, 0.0, -2.0, 3.0],
        ];
        let t = (0..4)
            .flat_map(|i| {
                (0..4)
                    .filter(move |&j| rows[i][j] != 0.0)
                    .map(move |j| (i, j, rows[i][j]))
            })
            .collect();
        let a = CsrMatrix::from_triplets(4, t, true);
        let ic = IncompleteCholesky::new(&a, None);
        assert!(IncompleteCholesky::factor(&a, &ic.row_ptr, &ic.col_idx, &a.diagonal(), 0.0).is_none());
        assert!(ic.values.iter().all(|v| v.is_finite() && *v != 0.0));
        let b = [1.0, -0.5, 0.25, 2.0];
        let opts = CgOptions {
            preconditioner: Preconditioner::Ic0,
            ..Default::default()
        };
        let sol = solve_cg(&a, &b, &opts).unwrap();
        let ax = a.mul_vec(&sol.x);
        assert!(ax.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
    }

    #[test]
    fn incompatible_load_is_rejected() {
        let a = laplace_1d(10, 0.0);
        let err = solve_cg(&a, &[1.0; 10], &CgOptions::default().with_pin(0)).unwrap_err();
        assert!(matches!(err, Error::IncompatibleLoad { .. }));
    }

    #[test]
    fn non_convergence_carries_history() {
        let a = laplace_1d(200, 0.0);
        let mut b = vec![0.0; 200];
        b[0] = 1.0;
        b[199] = -1.0;
        let opts = CgOptions {
            tol: 1e-14,
            max_iter: Some(3),
            pin: Some(100),
            ..Default::default()
        };
        match solve_cg(&a, &b, &opts) {
            Err(Error::NoConvergence { iterations, history }) => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 4);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn energy_error_decreases_monotonically() {
        let n = 40;
        let a = laplace_1d(n, 0.05);
        let exact: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
        let b = a.mul_vec(&exact);
        let mut energies = Vec::new();
        solve_cg_observed(&a, &b, &CgOptions::default(), |x| {
            let e: Vec<f64> = x.iter().zip(&exact).map(|(x, y)| x - y).collect();
            energies.push(a.quadratic_form(&e));
        })
        .unwrap();
        assert!(energies.len() > 5);
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-28, "{} > {}", w[1], w[0]);
        }
    }
}

//! Cross-checks the finite-element cell coefficient against a spectral Ritz
//! solve on the exact (curved) cell.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use thinhom::fem::quadrature::gauss_legendre_unit;
use thinhom::fem::CgOptions;
use thinhom::geometry::{CellSpec, Profile};
use thinhom::homogenize::{
    compute_qhat, compute_qhat_energy, homogenized_coefficients, solve_cell_problem, CellOptions, CellResolution,
};

/// Legendre `P_n(x)` and `P_n'(x)`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = if (x * x - 1.0).abs() < 1e-14 {
        0.5 * n as f64 * (n as f64 + 1.0) * x.powi(n as i32 + 1)
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Ritz upper bound for `q_hat` with harmonics `1..=k_max` (plus `k = 0`)
/// times Legendre polynomials of degree `<= j_max` in the height.
fn ritz_qhat(g: &Profile, h0: f64, k_max: usize, j_max: usize) -> f64 {
    let l = g.period();
    // Basis: (harmonic k, cos/sin, Legendre degree j).
    let mut basis = Vec::new();
    for j in 1..=j_max {
        basis.push((0usize, false, j));
    }
    for k in 1..=k_max {
        for j in 0..=j_max {
            basis.push((k, false, j));
            basis.push((k, true, j));
        }
    }
    let n = basis.len();
    // Boundary-fitted basis in t = (y2 + h0) / (g(y1) + h0).
    let eval = |idx: usize, y1: f64, y2: f64| -> [f64; 2] {
        let (k, sine, j) = basis[idx];
        let w = 2.0 * PI * k as f64 / l;
        let (t, dt) = if sine {
            ((w * y1).sin(), w * (w * y1).cos())
        } else {
            ((w * y1).cos(), -w * (w * y1).sin())
        };
        let height = g.eval(y1) + h0;
        let s = (y2 + h0) / height;
        let ds_dy1 = -(y2 + h0) * g.eval_deriv(y1) / (height * height);
        let ds_dy2 = 1.0 / height;
        let (p, dp) = legendre(j, 2.0 * s - 1.0);
        [dt * p + t * dp * 2.0 * ds_dy1, t * dp * 2.0 * ds_dy2]
    };
    let rule_x = gauss_legendre_unit(10);
    let rule_y = gauss_legendre_unit(30);
    let panels = 32;
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    let mut area = 0.0;
    for panel in 0..panels {
        for &(tx, wx) in &rule_x {
            let y1 = l * (panel as f64 + tx) / panels as f64;
            let height = g.eval(y1) + h0;
            for &(ty, wy) in &rule_y {
                let y2 = -h0 + ty * height;
                let w = wx * l / panels as f64 * wy * height;
                area += w;
                let grads: Vec<[f64; 2]> = (0..n).map(|i| eval(i, y1, y2)).collect();
                for i in 0..n {
                    b[i] += w * grads[i][0];
                    for jj in i..n {
                        a[i][jj] += w * (grads[i][0] * grads[jj][0] + grads[i][1] * grads[jj][1]);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for jj in 0..i {
            a[i][jj] = a[jj][i];
        }
    }
    let c = solve_dense(a, b.clone());
    let work: f64 = b.iter().zip(&c).map(|(x, y)| x * y).sum();
    (area - work) / l
}

fn sinusoid() -> Profile {
    Profile::sine(1.0, &[(0.5, 1)], 1.0).unwrap()
}

/// Spectral value for `g = 1 + 0.5 sin(2 pi y)`, `h0 = 0`, frozen from
/// `ritz_qhat(.., 14, 14)`.
const SINUSOID_QHAT: f64 = 0.640738779228;

#[test]
fn ritz_oracle_converges() {
    let g = sinusoid();
    let coarse = ritz_qhat(&g, 0.0, 8, 8);
    let mid = ritz_qhat(&g, 0.0, 11, 11);
    let fine = ritz_qhat(&g, 0.0, 14, 14);
    println!("ritz: {coarse:.12} {mid:.12} {fine:.12}");
    // Ritz values decrease under enrichment and settle.
    assert!(mid <= coarse + 1e-12 && fine <= mid + 1e-12);
    assert!((mid - fine).abs() < 1e-5);
    assert!((fine - SINUSOID_QHAT).abs() < 1e-9, "frozen {SINUSOID_QHAT} vs {fine}");
}

#[test]
fn finite_elements_converge_at_second_order() {
    let cell = CellSpec::new(sinusoid(), 0.0).unwrap();
    let errors: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&npp| {
            let sol = solve_cell_problem(&cell, CellResolution::isotropic(&cell, npp), &CgOptions::default()).unwrap();
            (compute_qhat(&sol) - SINUSOID_QHAT).abs()
        })
        .collect();
    println!("errors {errors:?}");
    for pair in errors.windows(2) {
        assert!((pair[0] / pair[1]).log2() > 1.8, "{errors:?}");
    }
}

#[test]
fn finite_elements_match_the_spectral_oracle() {
    let g = sinusoid();
    let coeffs = homogenized_coefficients(&g, &Profile::constant(0.0), &CellOptions::default()).unwrap();
    println!(
        "fe: coarse {:.10} fine {:.10} richardson {:.10} +- {:.2e}",
        coeffs.q_hat_coarse, coeffs.q_hat_fine, coeffs.q_hat, coeffs.q_hat_error_bar
    );
    assert!((coeffs.q_hat_fine - SINUSOID_QHAT).abs() < 1e-2 * SINUSOID_QHAT);
    assert!((coeffs.q_hat - SINUSOID_QHAT).abs() < (coeffs.q_hat_fine - SINUSOID_QHAT).abs());
    assert!((coeffs.q_hat - SINUSOID_QHAT).abs() < 3.0 * coeffs.q_hat_error_bar + 1e-5);
}

#[test]
fn dual_bound_brackets_qhat() {
    // Stream function psi = (y2 + h0) / H(y1) gives a divergence-free flux
    // field and hence the lower bound L1 / int (1 + H'^2 / 3) / H.
    let g = sinusoid();
    let n = 4096;
    let integral: f64 = (0..n)
        .map(|i| {
            let y = (i as f64 + 0.5) / n as f64;
            let (h, dh) = (g.eval(y), g.eval_deriv(y));
            (1.0 + dh * dh / 3.0) / h
        })
        .sum::<f64>()
        / n as f64;
    let lower = 1.0 / integral;
    let cell = CellSpec::new(g, 0.0).unwrap();
    let sol = solve_cell_problem(&cell, CellResolution::isotropic(&cell, 32), &CgOptions::default()).unwrap();
    let q = compute_qhat(&sol);
    println!(
        "dual lower bound {lower:.6}, fe {q:.6}, energy {:.6}",
        compute_qhat_energy(&sol)
    );
    assert!(lower < q && q < 1.0);
}

#[test]
fn offset_cell_with_two_harmonics() {
    let g = Profile::series(1.2, vec![(0.2, 2)], vec![(0.3, 1)], 1.5).unwrap();
    let h0 = 0.4;
    let oracle = ritz_qhat(&g, h0, 16, 16);
    let h = Profile::cosine(h0 + 0.5, &[(0.5, 3)], 1.0).unwrap();
    let coeffs = homogenized_coefficients(&g, &h, &CellOptions::default()).unwrap();
    let looser = ritz_qhat(&g, h0, 12, 12);
    println!(
        "two harmonics: oracle {oracle:.8} ({looser:.8}), fe {:.8} +- {:.2e}",
        coeffs.q_hat, coeffs.q_hat_error_bar
    );
    assert!((oracle - looser).abs() < 1e-4);
    assert!((coeffs.q_hat - oracle).abs() < 3.0 * coeffs.q_hat_error_bar);
    assert!((coeffs.q_hat - oracle).abs() < 5e-3 * oracle);
}

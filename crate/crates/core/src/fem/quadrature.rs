//! Gauss–Legendre rules on `[0, 1]`.

use std::f64::consts::PI;

/// `n`-point Gauss–Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "quadrature needs at least one point");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Integral of `f` over `[a, b]` with an `n`-point rule.
pub fn integrate_interval(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    gauss_legendre_unit(n)
        .into_iter()
        .map(|(t, w)| w * f(a + (b - a) * t))
        .sum::<f64>()
        * (b - a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_sum_to_one_and_integrate_polynomials() {
        for n in 1..=8 {
            let rule = gauss_legendre_unit(n);
            assert_abs_diff_eq!(rule.iter().map(|r| r.1).sum::<f64>(), 1.0, epsilon = 1e-14);
            for deg in 0..2 * n {
                let q: f64 = rule.iter().map(|&(t, w)| w * t.powi(deg as i32)).sum();
                assert_abs_diff_eq!(q, 1.0 / (deg as f64 + 1.0), epsilon = 1e-14);
            }
        }
        let two = gauss_legendre_unit(2);
        assert_abs_diff_eq!(two[0].0, 0.5 - 0.5 / 3f64.sqrt(), epsilon = 1e-15);
    }
}

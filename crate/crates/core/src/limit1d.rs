//! The homogenized one-dimensional problem
//! `int q_hat u' phi' + c u phi = int f_hat phi` on `(0, 1)` with natural
//! Neumann ends, where `c = |Y*|/L1 + p`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::quadrature::gauss_legendre_unit;
use crate::geometry::ThinDomainSpec;

/// Forcings the pipeline understands. Both depend on `x1` only, so the weak
/// limit of the fiber integral is `mass_coeff * f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Forcing {
    /// `cos(mode * pi * x1)`.
    Cosine { mode: u32 },
    /// Piecewise-linear interpolation of `(x, value)` samples covering `[0, 1]`.
    Table { x: Vec<f64>, values: Vec<f64> },
}

impl Forcing {
    pub fn cosine(mode: u32) -> Result<Self> {
        if mode < 1 {
            return Err(Error::Argument("cosine forcing mode must be >= 1".into()));
        }
        Ok(Forcing::Cosine { mode })
    }

    pub fn table(x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let forcing = Forcing::Table { x, values };
        forcing.validate()?;
        Ok(forcing)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Forcing::Cosine { mode } if *mode < 1 => Err(Error::Argument("cosine forcing mode must be >= 1".into())),
            Forcing::Cosine { .. } => Ok(()),
            Forcing::Table { x, values } => {
                if x.len() != values.len() || x.len() < 2 {
                    return Err(Error::Argument(format!(
                        "forcing table needs matching x/values with >= 2 entries (got {} and {})",
                        x.len(),
                        values.len()
                    )));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Argument("forcing table x must be strictly increasing".into()));
                }
                if x[0] > 0.0 || x[x.len() - 1] < 1.0 {
                    return Err(Error::Argument("forcing table must cover [0, 1]".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Argument("forcing table values must be finite".into()));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x1: f64) -> f64 {
        match self {
            Forcing::Cosine { mode } => (*mode as f64 * PI * x1).cos(),
            Forcing::Table { x, values } => interpolate(x, values, x1),
        }
    }

    /// Weak limit of the fiber integral, sampled on the uniform grid with `m` intervals.
    pub fn limit_fhat(&self, mass_coeff: f64, m: usize) -> Vec<f64> {
        (0..=m).map(|i| mass_coeff * self.eval(i as f64 / m as f64)).collect()
    }
}

/// Linear interpolation on sorted nodes, constant extrapolation outside.
fn interpolate(x: &[f64], v: &[f64], t: f64) -> f64 {
    let n = x.len();
    if t <= x[0] {
        return v[0];
    }
    if t >= x[n - 1] {
        return v[n - 1];
    }
    let k = x.partition_point(|&xi| xi <= t).min(n - 1);
    let (x0, x1) = (x[k - 1], x[k]);
    let s = (t - x0) / (x1 - x0);
    v[k - 1] * (1.0 - s) + v[k] * s
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitProblem {
    q_hat: f64,
    mass_coeff: f64,
    /// Nodal values of `f_hat` on `i / m`, `i = 0..=m`.
    f_hat: Vec<f64>,
}

impl LimitProblem {
    pub fn new(q_hat: f64, mass_coeff: f64, f_hat: Vec<f64>) -> Result<Self> {
        if !(q_hat > 0.0) || !q_hat.is_finite() {
            return Err(Error::Argument(format!("q_hat must be > 0, got {q_hat}")));
        }
        if !(mass_coeff > 0.0) || !mass_coeff.is_finite() {
            return Err(Error::Argument(format!(
                "mass coefficient must be > 0, got {mass_coeff}"
            )));
        }
        if f_hat.len() < 9 {
            return Err(Error::Argument(format!(
                "limit grid needs m >= 8, got m = {}",
                f_hat.len().saturating_sub(1)
            )));
        }
        if f_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("f_hat must be finite".into()));
        }
        Ok(Self {
            q_hat,
            mass_coeff,
            f_hat,
        })
    }

    pub fn from_fn(q_hat: f64, mass_coeff: f64, m: usize, f_hat: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(q_hat, mass_coeff, (0..=m).map(|i| f_hat(i as f64 / m as f64)).collect())
    }

    pub fn q_hat(&self) -> f64 {
        self.q_hat
    }

    pub fn mass_coeff(&self) -> f64 {
        self.mass_coeff
    }

    pub fn f_hat(&self) -> &[f64] {
        &self.f_hat
    }

    /// Number of intervals.
    pub fn grid_size(&self) -> usize {
        self.f_hat.len() - 1
    }
}

/// P1 solution on the uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSolution {
    values: Vec<f64>,
}

impl LimitSolution {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_size(&self) -> usize {
        self.values.len() - 1
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.grid_size() as f64;
        (0..self.values.len()).map(move |i| i as f64 / m)
    }

    /// Piecewise-linear interpolant, clamped to `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let m = self.grid_size();
        let t = x.clamp(0.0, 1.0) * m as f64;
        let k = (t.floor() as usize).min(m - 1);
        let s = t - k as f64;
        self.values[k] * (1.0 - s) + self.values[k + 1] * s
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_error(|_| 0.0)
    }

    /// `||u - reference||_{L2(0,1)}` with 4-point Gauss per interval.
    pub fn l2_error(&self, reference: impl Fn(f64) -> f64) -> f64 {
        let m = self.grid_size();
        let dx = 1.0 / m as f64;
        let rule = gauss_legendre_unit(4);
        let mut acc = 0.0;
        for k in 0..m {
            for &(t, w) in &rule {
                let x = (k as f64 + t) * dx;
                let u = self.values[k] * (1.0 - t) + self.values[k + 1] * t;
                acc += w * dx * (u - reference(x)).powi(2);
            }
        }
        acc.sqrt()
    }
}

/// Assembles `q_hat K + c M`, loads `M f_hat` and solves the tridiagonal system directly.
pub fn solve_limit(problem: &LimitProblem) -> LimitSolution {
    let m = problem.grid_size();
    let n = m + 1;
    let h = 1.0 / m as f64;
    let (q, c) = (problem.q_hat, problem.mass_coeff);
    let diag_in = 2.0 * q / h + 2.0 * c * h / 3.0;
    let off = -q / h + c * h / 6.0;
    let mut diag = vec![diag_in; n];
    diag[0] = diag_in / 2.0;
    diag[m] = diag_in / 2.0;
    let sub = vec![off; m];

    let f = &problem.f_hat;
    let rhs: Vec<f64> = (0..n)
        .map(|i| {
            let mut b = 0.0;
            if i > 0 {
                b += h / 6.0 * (f[i - 1] + 2.0 * f[i]);
            }
            if i < m {
                b += h / 6.0 * (2.0 * f[i] + f[i + 1]);
            }
            b
        })
        .collect();
    LimitSolution {
        values: thomas(&sub, &diag, &sub, rhs),
    }
}

/// Thomas algorithm for a diagonally dominant tridiagonal system.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], mut rhs: Vec<f64>) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = diag[0];
    c[0] = if n > 1 { upper[0] / d } else { 0.0 };
    rhs[0] /= d;
    for i in 1..n {
        d = diag[i] - lower[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = upper[i] / d;
        }
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / d;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    rhs
}

/// Exact solution `cos(k pi x) / (1 + A k^2 pi^2)`, `A = q_hat / mass_coeff`,
/// of the strong limit equation with right-hand side `cos(k pi x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineLimit {
    pub mode: u32,
    pub amplitude: f64,
}

impl CosineLimit {
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * (self.mode as f64 * PI * x).cos()
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        let w = self.mode as f64 * PI;
        -self.amplitude * w * (w * x).sin()
    }
}

pub fn analytic_limit_cosine(q_hat: f64, mass_coeff: f64, k: u32) -> Result<CosineLimit> {
    if k < 1 {
        return Err(Error::Argument("cosine mode k must be >= 1".into()));
    }
    if !(mass_coeff > 0.0) || !(q_hat >= 0.0) {
        return Err(Error::Argument(format!(
            "need q_hat >= 0 and mass_coeff > 0, got {q_hat} and {mass_coeff}"
        )));
    }
    let a = q_hat / mass_coeff;
    let w = k as f64 * PI;
    Ok(CosineLimit {
        mode: k,
        amplitude: 1.0 / (1.0 + a * w * w),
    })
}

/// Fiber integrals `int_{-h(x1/eps^a)}^{g(x1/eps)} f(x1, x2) dx2` at `x1 = i/m`, 8-point Gauss.
pub fn compute_fhat(spec: &ThinDomainSpec, f: impl Fn(f64, f64) -> f64, m: usize) -> Vec<(f64, f64)> {
    let rule = gauss_legendre_unit(8);
    (0..=m)
        .map(|i| {
            let x1 = i as f64 / m as f64;
            let (lo, hi) = (spec.lower(x1), spec.upper(x1));
            let sum: f64 = rule.iter().map(|&(t, w)| w * f(x1, lo + t * (hi - lo))).sum();
            (x1, sum * (hi - lo))
        })
        .collect()
}

/// Largest deviation between window averages of sampled fiber integrals and
/// of a proposed weak limit, over disjoint windows of the given width.
pub fn weak_limit_discrepancy(samples: &[(f64, f64)], limit: impl Fn(f64) -> f64, window: f64) -> Result<f64> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::Argument(format!("window must lie in (0, 1], got {window}")));
    }
    if samples.len() < 2 {
        return Err(Error::Argument("need at least two samples".into()));
    }
    let windows = (1.0 / window).round().max(1.0) as usize;
    let mut acc = vec![(0.0, 0.0, 0.0); windows];
    for pair in samples.windows(2) {
        let ((xa, fa), (xb, fb)) = (pair[0], pair[1]);
        let mid = 0.5 * (xa + xb);
        let dx = xb - xa;
        let b = ((mid * windows as f64) as usize).min(windows - 1);
        acc[b].0 += 0.5 * (fa + fb) * dx;
        acc[b].1 += 0.5 * (limit(xa) + limit(xb)) * dx;
        acc[b].2 += dx;
    }
    Ok(acc
        .iter()
        .filter(|a| a.2 > 0.0)
        .map(|&(s, l, w)| ((s - l) / w).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Profile;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cosine_problem(q: f64, c: f64, k: u32, m: usize) -> LimitProblem {
        LimitProblem::from_fn(q, c, m, |x| c * (k as f64 * PI * x).cos()).unwrap()
    }

    #[test]
    fn constant_load_gives_constant_solution() {
        let p = LimitProblem::from_fn(0.7, 1.3, 16, |_| 1.3).unwrap();
        let u = solve_limit(&p);
        for v in u.values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn matches_closed_form_at_second_order() {
        let exact = analytic_limit_cosine(1.0, 1.0, 1).unwrap();
        let errors: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&m| solve_limit(&cosine_problem(1.0, 1.0, 1, m)).l2_error(|x| exact.eval(x)))
            .collect();
        for w in errors.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errors:?}");
        }
        let u = solve_limit(&cosine_problem(1.0, 1.0, 1, 256));
        assert_abs_diff_eq!(u.values()[0], 1.0 / (1.0 + PI * PI), epsilon = 1e-4);
    }

    #[test]
    fn substitution_example() {
        let p = LimitProblem::from_fn(1.0, 1.0, 256, |x| (1.0 + PI * PI) * (PI * x).cos()).unwrap();
        let u = solve_limit(&p);
        assert!(u.l2_error(|x| (PI * x).cos()) < 1e-4);
    }

    #[test]
    fn closed_form_examples() {
        let a = analytic_limit_cosine(1.0, 1.0, 1).unwrap();
        assert_abs_diff_eq!(a.amplitude, 0.09199967, epsilon = 1e-8);
        let tiny = analytic_limit_cosine(1e-12, 1.0, 2).unwrap();
        assert_abs_diff_eq!(tiny.eval(0.3), (2.0 * PI * 0.3).cos(), epsilon = 1e-9);
        for k in 1..6 {
            let s = analytic_limit_cosine(0.6, 1.7, k).unwrap();
            assert_abs_diff_eq!(s.eval_deriv(0.0), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.eval_deriv(1.0), 0.0, epsilon = 1e-9);
        }
        assert!(analytic_limit_cosine(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn problem_validation() {
        assert!(LimitProblem::new(0.0, 1.0, vec![0.0; 17]).is_err());
        assert!(LimitProblem::new(1.0, -1.0, vec![0.0; 17]).is_err());
        assert!(LimitProblem::new(1.0, 1.0, vec![0.0; 8]).is_err());
        assert!(LimitProblem::new(1.0, 1.0, vec![0.0; 9]).is_ok());
    }

    #[test]
    fn fiber_integrals() {
        let g = Profile::sine(1.0, &[(0.5, 1)], 1.0).unwrap();
        let h = Profile::cosine(1.0, &[(1.0, 1)], 1.0).unwrap();
        let spec = ThinDomainSpec::new(0.1, 2.0, g.clone(), h.clone()).unwrap();
        for (x, v) in compute_fhat(&spec, |_, _| 1.0, 20) {
            assert_abs_diff_eq!(v, g.eval(x / 0.1) + h.eval(x / 0.01), epsilon = 1e-12);
        }
        assert!(compute_fhat(&spec, |_, _| 0.0, 10).iter().all(|&(_, v)| v == 0.0));
        let poly = compute_fhat(&spec, |x, y| x * y * y, 10);
        for (x, v) in poly {
            let (lo, hi) = (spec.lower(x), spec.upper(x));
            assert_abs_diff_eq!(v, x * (hi.powi(3) - lo.powi(3)) / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn weak_limit_of_oscillating_fibers() {
        let g = Profile::sine(1.0, &[(0.5, 1)], 1.0).unwrap();
        let h = Profile::cosine(1.0, &[(1.0, 1)], 1.0).unwrap();
        let mass = 1.0 + 1.0;
        let f = |x: f64| (PI * x).cos();
        let discrepancy = |eps: f64| {
            let spec = ThinDomainSpec::new(eps, 1.5, g.clone(), h.clone()).unwrap();
            let samples = compute_fhat(&spec, |x, _| f(x), 20_000);
            weak_limit_discrepancy(&samples, |x| mass * f(x), 0.1).unwrap()
        };
        let (coarse, fine) = (discrepancy(0.1), discrepancy(0.01));
        assert!(fine < coarse && fine < 0.02, "{coarse} {fine}");
        assert!(weak_limit_discrepancy(&[(0.0, 1.0)], |_| 1.0, 0.1).is_err());
    }

    #[test]
    fn forcing_table_interpolates() {
        let t = Forcing::table(vec![0.0, 0.5, 1.0], vec![1.0, 3.0, 2.0]).unwrap();
        assert_abs_diff_eq!(t.eval(0.25), 2.0);
        assert_abs_diff_eq!(t.eval(0.75), 2.5);
        assert_abs_diff_eq!(t.eval(1.0), 2.0);
        assert!(Forcing::table(vec![0.0, 0.9], vec![1.0, 1.0]).is_err());
        assert!(Forcing::table(vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]).is_err());
        assert!(Forcing::cosine(0).is_err());
        assert_eq!(
            Forcing::cosine(3).unwrap().limit_fhat(2.0, 2),
            vec![2.0, 2.0 * (1.5 * PI).cos(), -2.0]
        );
    }

    #[test]
    fn interpolation_of_solution() {
        let p = LimitProblem::from_fn(1.0, 1.0, 8, |x| x).unwrap();
        let u = solve_limit(&p);
        let v = u.values();
        assert_abs_diff_eq!(u.eval(0.0625), 0.5 * (v[0] + v[1]), epsilon = 1e-15);
        assert_eq!(u.eval(-1.0), v[0]);
        assert_eq!(u.eval(2.0), v[8]);
        assert_eq!(u.nodes().count(), 9);
    }

    proptest! {
        #[test]
        fn nonnegative_load_gives_nonnegative_solution(
            q in 0.1f64..10.0, c in 0.1f64..10.0, seed in prop::collection::vec(0.0f64..5.0, 33)
        ) {
            let u = solve_limit(&LimitProblem::new(q, c, seed).unwrap());
            prop_assert!(u.values().iter().all(|&v| v >= -1e-12));
        }

        #[test]
        fn solution_is_linear_in_the_load(
            q in 1e-2f64..10.0, c in 0.1f64..10.0, scale in -4.0f64..4.0,
            seed in prop::collection::vec(-1.0f64..1.0, 17)
        ) {
            let base = solve_limit(&LimitProblem::new(q, c, seed.clone()).unwrap());
            let scaled: Vec<f64> = seed.iter().map(|v| scale * v).collect();
            let u = solve_limit(&LimitProblem::new(q, c, scaled).unwrap());
            for (a, b) in u.values().iter().zip(base.values()) {
                prop_assert!((a - scale * b).abs() <= 1e-12 * (1.0 + b.abs() * scale.abs()));
            }
        }
    }
}

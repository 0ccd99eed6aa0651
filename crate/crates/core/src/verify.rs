//! Direct solves of the thin-domain problem and comparison with the limit.
//!
//! Errors are measured on the thin domain itself, `||u_eps - u0||` on
//! `Omega_eps`, not on an extended domain.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::quadrature::gauss_legendre_unit;
use crate::fem::{
    apply_dirichlet, assemble_load, assemble_mass, assemble_stiffness, energy, gradient_norms, l2_norm, solve_cg,
    CgOptions, DiffusionTensor, Field, LinearSystem, SolveReport,
};
use crate::geometry::{Profile, RectangleSpec, ThinDomainSpec};
use crate::limit1d::{Forcing, LimitSolution};
use crate::mesh::{mesh_rectangle, mesh_thin_domain, resolution_for, BoundaryTag, Mesh, ResolutionPolicy};

/// Statement attached to every report about where errors are measured.
pub const MEASURE_NOTE: &str = "errors are measured on the thin domain itself, without an extension operator";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub nx: usize,
    pub ny: usize,
    pub nodes: usize,
    pub triangles: usize,
}

impl MeshStats {
    fn of(mesh: &Mesh) -> Self {
        let (nx, ny) = mesh.grid();
        Self {
            nx,
            ny,
            nodes: mesh.node_count(),
            triangles: mesh.triangle_count(),
        }
    }
}

/// `||u||`, `||d1 u||` and `eps^-1 ||d2 u||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct APrioriNorms {
    pub u: f64,
    pub d1: f64,
    pub d2_scaled: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitError {
    pub abs: f64,
    pub rel: f64,
}

#[derive(Debug, Clone)]
pub struct EpsilonRun {
    pub spec: ThinDomainSpec,
    pub mesh: Mesh,
    pub u: Field,
    pub stats: MeshStats,
    pub norms: APrioriNorms,
    pub report: SolveReport,
}

/// Solves `-d1^2 u - eps^-2 d2^2 u + u = f` on `Omega_eps` with natural boundary conditions.
pub fn solve_epsilon_problem(
    spec: &ThinDomainSpec,
    f: impl Fn(f64, f64) -> f64,
    nx: usize,
    ny: usize,
    opts: &CgOptions,
) -> Result<EpsilonRun> {
    let mesh = mesh_thin_domain(spec, nx, ny)?;
    let tensor = DiffusionTensor::thin(spec.epsilon)?;
    let matrix = assemble_stiffness(&mesh, tensor).add_scaled(1.0, &assemble_mass(&mesh));
    let rhs = assemble_load(&mesh, f);
    let system = LinearSystem::new(matrix, rhs)?;
    let sol = solve_cg(&system.matrix, &system.rhs, &CgOptions { pin: None, ..*opts })?;
    let u = Field::new(&mesh, sol.x)?;
    let (d1, d2) = gradient_norms(&mesh, &u);
    let norms = APrioriNorms {
        u: l2_norm(&mesh, &u),
        d1,
        d2_scaled: d2 / spec.epsilon,
    };
    Ok(EpsilonRun {
        spec: spec.clone(),
        stats: MeshStats::of(&mesh),
        mesh,
        u,
        norms,
        report: sol.report,
    })
}

/// `L2(Omega_eps)` distance to `u0(x1)` with `u0` interpolated at the nodes;
/// the relative error divides by the norm of that interpolant.
pub fn error_vs_limit(run: &EpsilonRun, u0: impl Fn(f64) -> f64) -> LimitError {
    let reference: Vec<f64> = run.mesh.nodes().iter().map(|p| u0(p[0])).collect();
    let diff: Vec<f64> = run.u.values().iter().zip(&reference).map(|(u, r)| u - r).collect();
    let abs = crate::fem::field::l2_norm_values(&run.mesh, &diff);
    let scale = crate::fem::field::l2_norm_values(&run.mesh, &reference);
    let rel = if scale > 0.0 {
        abs / scale
    } else if abs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    LimitError { abs, rel }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub mesh: MeshStats,
    pub error: LimitError,
    pub norms: APrioriNorms,
    pub iterations: usize,
    pub relative_residual: f64,
    /// `|rel error - rel error at half the points per period|`.
    pub refinement_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub runs: Vec<EpsilonSummary>,
    /// Least-squares slope of `log(rel error)` against `log(eps)`.
    pub slope: Option<f64>,
    pub monotone: bool,
    /// Both profiles constant.
    pub flat: bool,
    /// Flat domain with every relative error below ten times the solver tolerance.
    pub exact: bool,
    pub verdicts: Vec<Verdict>,
    pub note: String,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "epsilon,abs_err,rel_err,norm_u,norm_d1u,norm_d2u_scaled,nx,ny,cells,iterations,refinement_delta\n",
        );
        for r in &self.runs {
            let delta = r.refinement_delta.map(|d| format!("{d:.12e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{},{},{}\n",
                r.epsilon,
                r.error.abs,
                r.error.rel,
                r.norms.u,
                r.norms.d1,
                r.norms.d2_scaled,
                r.mesh.nx,
                r.mesh.ny,
                r.mesh.triangles,
                r.iterations,
                delta
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySetup {
    pub g: Profile,
    pub h: Profile,
    pub alpha: f64,
    pub forcing: Forcing,
    /// Strictly decreasing, at least three entries.
    pub eps_list: Vec<f64>,
    pub policy: ResolutionPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StudyOptions {
    pub solver: CgOptions,
    /// `0` uses the available parallelism.
    pub workers: usize,
    pub refinement_check: bool,
}

/// A sweep that stopped early, with the runs that did complete.
#[derive(Debug)]
pub struct StudyFailure {
    pub partial: ConvergenceReport,
    pub error: Error,
}

impl fmt::Display for StudyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} runs completed)", self.error, self.partial.runs.len())
    }
}

impl std::error::Error for StudyFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<StudyFailure> for Error {
    fn from(f: StudyFailure) -> Self {
        f.error
    }
}

fn empty_report(flat: bool) -> ConvergenceReport {
    ConvergenceReport {
        runs: Vec::new(),
        slope: None,
        monotone: false,
        flat,
        exact: false,
        verdicts: Vec::new(),
        note: MEASURE_NOTE.into(),
    }
}

pub fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.len() < 3 {
        return Err(Error::Argument(format!(
            "eps_list needs at least 3 entries, got {}",
            eps_list.len()
        )));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Argument("eps_list must be strictly decreasing".into()));
    }
    Ok(())
}

fn summarize(
    spec: &ThinDomainSpec,
    setup: &StudySetup,
    u0: &LimitSolution,
    opts: &StudyOptions,
) -> Result<EpsilonSummary> {
    let (nx, ny) = resolution_for(spec, &setup.policy)?;
    let forcing = &setup.forcing;
    let run = solve_epsilon_problem(spec, |x, _| forcing.eval(x), nx, ny, &opts.solver)?;
    let error = error_vs_limit(&run, |x| u0.eval(x));
    let refinement_delta = if opts.refinement_check {
        let half = ResolutionPolicy {
            points_per_period: (setup.policy.points_per_period / 2).max(4),
            ..setup.policy
        };
        let (hx, hy) = resolution_for(spec, &half)?;
        let coarse = solve_epsilon_problem(spec, |x, _| forcing.eval(x), hx, hy, &opts.solver)?;
        Some((error_vs_limit(&coarse, |x| u0.eval(x)).rel - error.rel).abs())
    } else {
        None
    };
    Ok(EpsilonSummary {
        epsilon: spec.epsilon,
        mesh: run.stats,
        error,
        norms: run.norms,
        iterations: run.report.iterations,
        relative_residual: run.report.relative_residual,
        refinement_delta,
    })
}

/// Solves every `eps` of the sweep, possibly in parallel, against the same `u0`.
#[allow(clippy::result_large_err)]
pub fn convergence_study(
    setup: &StudySetup,
    u0: &LimitSolution,
    opts: &StudyOptions,
) -> std::result::Result<ConvergenceReport, StudyFailure> {
    let flat = setup.g.is_constant() && setup.h.is_constant();
    let fail = |partial: ConvergenceReport, error: Error| StudyFailure { partial, error };
    if let Err(e) = check_eps_list(&setup.eps_list).and_then(|_| setup.forcing.validate()) {
        return Err(fail(empty_report(flat), e));
    }
    let mut specs = Vec::new();
    for &eps in &setup.eps_list {
        let spec = ThinDomainSpec::new(eps, setup.alpha, setup.g.clone(), setup.h.clone());
        match spec.and_then(|s| resolution_for(&s, &setup.policy).map(|_| s)) {
            Ok(s) => specs.push(s),
            Err(e) => {
                let affordable = specs.last().map(|s: &ThinDomainSpec| s.epsilon);
                let hint = match affordable {
                    Some(a) => format!("smallest affordable epsilon in the sweep is {a}"),
                    None => "no epsilon in the sweep is affordable".into(),
                };
                let e = Error::Argument(format!("{e}; {hint}")).in_stage(format!("converge (eps = {eps})"));
                return Err(fail(empty_report(flat), e));
            }
        }
    }

    let results: Vec<Result<EpsilonSummary>> = {
        let work = || {
            specs
                .par_iter()
                .map(|s| {
                    summarize(s, setup, u0, opts).map_err(|e| e.in_stage(format!("converge (eps = {})", s.epsilon)))
                })
                .collect()
        };
        match rayon::ThreadPoolBuilder::new().num_threads(opts.workers).build() {
            Ok(pool) => pool.install(work),
            Err(e) => return Err(fail(empty_report(flat), Error::Argument(format!("thread pool: {e}")))),
        }
    };

    let mut report = empty_report(flat);
    for r in results {
        match r {
            Ok(s) => report.runs.push(s),
            Err(e) => return Err(fail(report, e)),
        }
    }
    finish_report(&mut report, opts.solver.tol);
    Ok(report)
}

fn finish_report(report: &mut ConvergenceReport, tol: f64) {
    let runs = &report.runs;
    let rel: Vec<f64> = runs.iter().map(|r| r.error.rel).collect();
    let (first, last) = (rel[0], rel[rel.len() - 1]);
    let violations = rel.windows(2).filter(|w| !(w[1] < w[0])).count();
    report.monotone = violations <= 1 && last < first;
    report.exact = report.flat && rel.iter().all(|&e| e < 10.0 * tol);

    let mut verdicts = Vec::new();
    if report.flat {
        let worst = rel.iter().copied().fold(0.0, f64::max);
        verdicts.push(Verdict::new(
            "flat_domain_error",
            worst < 1e-3,
            format!("max relative error {worst:.3e} (limit 1e-3)"),
        ));
    } else {
        report.slope = fit_slope(&runs.iter().map(|r| r.epsilon).collect::<Vec<_>>(), &rel);
        verdicts.push(Verdict::new(
            "monotone_decrease",
            report.monotone,
            format!(
                "relative errors [{}], {violations} non-decreasing adjacent pairs",
                rel.iter().map(|e| format!("{e:.4e}")).collect::<Vec<_>>().join(", ")
            ),
        ));
        verdicts.push(Verdict::new(
            "halving",
            last < 0.5 * first,
            format!("last/first = {:.4}", last / first),
        ));
    }
    let base = runs[0].norms;
    let worst = runs
        .iter()
        .map(|r| {
            [
                r.norms.u / base.u,
                r.norms.d1 / base.d1,
                r.norms.d2_scaled / base.d2_scaled,
            ]
            .map(|x| if x.is_finite() { x } else { 0.0 })
        })
        .fold([0.0f64; 3], |acc, x| {
            [acc[0].max(x[0]), acc[1].max(x[1]), acc[2].max(x[2])]
        });
    verdicts.push(Verdict::new(
        "a_priori_bounds",
        worst.iter().all(|&w| w <= 3.0),
        format!("max growth over largest eps: {worst:.3?}"),
    ));
    report.verdicts = verdicts;
}

/// Least-squares slope of `log y` on `log x`; `None` if undefined.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx).filter(|s| s.is_finite())
}

/// Dirichlet data on the bottom edge of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundaryDatum {
    Constant {
        value: f64,
    },
    Linear {
        slope: f64,
        offset: f64,
    },
    /// `amplitude * sin(wavenumber * x)`.
    Sine {
        amplitude: f64,
        wavenumber: f64,
    },
}

impl BoundaryDatum {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            BoundaryDatum::Constant { value } => value,
            BoundaryDatum::Linear { slope, offset } => slope * x + offset,
            BoundaryDatum::Sine { amplitude, wavenumber } => amplitude * (wavenumber * x).sin(),
        }
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        match *self {
            BoundaryDatum::Constant { .. } => 0.0,
            BoundaryDatum::Linear { slope, .. } => slope,
            BoundaryDatum::Sine { amplitude, wavenumber } => amplitude * wavenumber * (wavenumber * x).cos(),
        }
    }
}

impl fmt::Display for BoundaryDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BoundaryDatum::Constant { value } => write!(f, "constant({value})"),
            BoundaryDatum::Linear { slope, offset } => write!(f, "linear(slope={slope}, offset={offset})"),
            BoundaryDatum::Sine { amplitude, wavenumber } => {
                write!(f, "sine(amplitude={amplitude}, wavenumber={wavenumber})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma31Run {
    pub alpha: f64,
    pub epsilon: f64,
    pub datum: String,
    /// `int_Q |u - mean(u0)|^2`.
    pub lhs37: f64,
    /// `|d1 u|^2 + eps^-2 |d2 u|^2`.
    pub energy38: f64,
    pub u0_norm_sq: f64,
    pub du0_norm_sq: f64,
    /// `lhs37 / (eps^(alpha-1) |u0|^2)`, zero when both vanish.
    pub ratio37: f64,
    /// `energy38 / (eps^(alpha-1) |u0'|^2)`, zero when both vanish.
    pub ratio38: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaOptions {
    pub nx: usize,
    pub ny: usize,
    pub solver: CgOptions,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        Self {
            nx: 32,
            ny: 256,
            solver: CgOptions::default(),
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num.abs() <= 1e-14 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Solves `-d1^2 u - eps^-2 d2^2 u = 0` on `(-eps^alpha, eps^alpha) x (0, 1)`
/// with `u = u0` on the bottom and natural conditions elsewhere.
pub fn lemma31_run(alpha: f64, epsilon: f64, datum: BoundaryDatum, opts: &LemmaOptions) -> Result<Lemma31Run> {
    let rect = RectangleSpec::new(epsilon, alpha)?;
    let a = rect.half_width();
    let mesh = mesh_rectangle(&rect, opts.nx, opts.ny)?;
    let tensor = DiffusionTensor::thin(epsilon)?;
    let n = mesh.node_count();
    let system = LinearSystem::new(assemble_stiffness(&mesh, tensor), vec![0.0; n])?;
    let bottom = mesh.tagged_nodes(BoundaryTag::Bottom);
    let values: Vec<f64> = bottom.iter().map(|&i| datum.eval(mesh.nodes()[i][0])).collect();
    let reduced = apply_dirichlet(&system, &bottom, &values)?;
    let (x, iterations) = if reduced.system.matrix.dim() == 0 {
        (reduced.expand(&[]), 0)
    } else {
        let sol = solve_cg(
            &reduced.system.matrix,
            &reduced.system.rhs,
            &CgOptions {
                pin: None,
                ..opts.solver
            },
        )?;
        (reduced.expand(&sol.x), sol.report.iterations)
    };
    let u = Field::new(&mesh, x)?;

    let rule = gauss_legendre_unit(16);
    let over_gamma =
        |f: &dyn Fn(f64) -> f64| -> f64 { rule.iter().map(|&(t, w)| w * 2.0 * a * f(-a + 2.0 * a * t)).sum() };
    let mean = over_gamma(&|x| datum.eval(x)) / (2.0 * a);
    let u0_norm_sq = over_gamma(&|x| datum.eval(x).powi(2));
    let du0_norm_sq = over_gamma(&|x| datum.eval_deriv(x).powi(2));

    let shifted = Field::new(&mesh, u.values().iter().map(|v| v - mean).collect())?;
    let lhs37 = l2_norm(&mesh, &shifted).powi(2);
    let energy38 = energy(&mesh, &u, tensor);
    let scale = epsilon.powf(alpha - 1.0);
    Ok(Lemma31Run {
        alpha,
        epsilon,
        datum: datum.to_string(),
        lhs37,
        energy38,
        u0_norm_sq,
        du0_norm_sq,
        ratio37: ratio(lhs37, scale * u0_norm_sq),
        ratio38: ratio(energy38, scale * du0_norm_sq),
        iterations,
    })
}

pub fn lemma31_harness(
    alpha: f64,
    eps_list: &[f64],
    datum: BoundaryDatum,
    opts: &LemmaOptions,
) -> Result<Vec<Lemma31Run>> {
    if !(alpha > 1.0) {
        return Err(Error::Argument(format!("alpha must be > 1, got {alpha}")));
    }
    if eps_list.is_empty() {
        return Err(Error::Argument("lemma eps_list is empty".into()));
    }
    eps_list
        .iter()
        .map(|&eps| lemma31_run(alpha, eps, datum, opts).map_err(|e| e.in_stage(format!("lemma31 (eps = {eps})"))))
        .collect()
}

/// Both ratios stay within a factor `3` across the sweep (all-zero counts as bounded).
pub fn lemma31_verdicts(runs: &[Lemma31Run]) -> Vec<Verdict> {
    let spread = |pick: fn(&Lemma31Run) -> f64| -> (bool, String) {
        let v: Vec<f64> = runs.iter().map(pick).collect();
        if v.iter().all(|&x| x.abs() <= 1e-10) {
            return (true, "identically zero".into());
        }
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        (lo > 0.0 && hi / lo < 3.0, format!("max/min = {:.4}", hi / lo))
    };
    let (p37, d37) = spread(|r| r.ratio37);
    let (p38, d38) = spread(|r| r.ratio38);
    vec![
        Verdict::new("lemma31_ratio37_bounded", p37, d37),
        Verdict::new("lemma31_ratio38_bounded", p38, d38),
    ]
}

pub fn lemma31_csv(runs: &[Lemma31Run]) -> String {
    let mut out = String::from("epsilon,lhs37,energy38,ratio37,ratio38\n");
    for r in runs {
        out.push_str(&format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            r.epsilon, r.lhs37, r.energy38, r.ratio37, r.ratio38
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn flat(eps: f64) -> ThinDomainSpec {
        ThinDomainSpec::new(eps, 1.5, Profile::constant(1.0), Profile::constant(0.0)).unwrap()
    }

    #[test]
    fn unit_forcing_gives_unit_solution() {
        for eps in [0.2, 0.05] {
            let run = solve_epsilon_problem(&flat(eps), |_, _| 1.0, 16, 8, &CgOptions::default()).unwrap();
            let err = error_vs_limit(&run, |_| 1.0);
            assert!(err.rel < 1e-9, "{err:?}");
            assert!(run.norms.d2_scaled < 1e-8);
        }
    }

    #[test]
    fn zero_reference_gives_solution_norm() {
        let run = solve_epsilon_problem(&flat(0.2), |x, _| (PI * x).cos(), 16, 8, &CgOptions::default()).unwrap();
        let err = error_vs_limit(&run, |_| 0.0);
        assert_abs_diff_eq!(err.abs, run.norms.u, epsilon = 1e-14);
        assert!(err.rel.is_infinite());
    }

    #[test]
    fn separable_cosine_solution() {
        let exact = |x: f64| (PI * x).cos() / (1.0 + PI * PI);
        let errs: Vec<f64> = [(32, 16), (64, 32)]
            .iter()
            .map(|&(nx, ny)| {
                let run =
                    solve_epsilon_problem(&flat(0.1), |x, _| (PI * x).cos(), nx, ny, &CgOptions::default()).unwrap();
                error_vs_limit(&run, exact).rel
            })
            .collect();
        assert!(errs[1] < 1e-4 && (errs[0] / errs[1]).log2() > 1.8, "{errs:?}");
    }

    #[test]
    fn slope_fit() {
        let x = [0.4, 0.2, 0.1];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert_abs_diff_eq!(fit_slope(&x, &y).unwrap(), 1.5, epsilon = 1e-12);
        assert!(fit_slope(&x, &[0.0, 1.0, 1.0]).is_none());
        assert!(fit_slope(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn eps_list_preconditions() {
        assert!(check_eps_list(&[0.1]).is_err());
        assert!(check_eps_list(&[0.1, 0.2, 0.05]).is_err());
        assert!(check_eps_list(&[0.2, 0.1, 0.05]).is_ok());
    }

    #[test]
    fn study_rejects_single_eps_with_empty_partial() {
        let setup = StudySetup {
            g: Profile::constant(1.0),
            h: Profile::constant(0.0),
            alpha: 1.5,
            forcing: Forcing::cosine(1).unwrap(),
            eps_list: vec![0.1],
            policy: ResolutionPolicy::default(),
        };
        let u0 = crate::limit1d::solve_limit(&crate::limit1d::LimitProblem::from_fn(1.0, 1.0, 64, |_| 1.0).unwrap());
        let err = convergence_study(&setup, &u0, &StudyOptions::default()).unwrap_err();
        assert!(err.partial.runs.is_empty());
    }

    #[test]
    fn unaffordable_sweep_names_required_size() {
        let setup = StudySetup {
            g: Profile::sine(1.0, &[(0.5, 1)], 1.0).unwrap(),
            h: Profile::cosine(1.0, &[(1.0, 1)], 1.0).unwrap(),
            alpha: 2.0,
            forcing: Forcing::cosine(1).unwrap(),
            eps_list: vec![0.2, 0.1, 0.001],
            policy: ResolutionPolicy::default(),
        };
        let u0 = crate::limit1d::solve_limit(&crate::limit1d::LimitProblem::from_fn(1.0, 1.0, 64, |_| 1.0).unwrap());
        let err = convergence_study(&setup, &u0, &StudyOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("elements required") && msg.contains("smallest affordable epsilon in the sweep is 0.1"),
            "{msg}"
        );
    }

    #[test]
    fn constant_datum_is_reproduced() {
        let opts = LemmaOptions {
            nx: 8,
            ny: 16,
            ..Default::default()
        };
        let run = lemma31_run(2.0, 0.3, BoundaryDatum::Constant { value: 1.7 }, &opts).unwrap();
        assert!(run.lhs37 < 1e-10 && run.energy38 < 1e-10, "{run:?}");
        assert_eq!(run.ratio38, 0.0);
    }

    #[test]
    fn datum_descriptions() {
        let d = BoundaryDatum::Linear {
            slope: 1.0,
            offset: 0.0,
        };
        assert_eq!(d.to_string(), "linear(slope=1, offset=0)");
        let s = BoundaryDatum::Sine {
            amplitude: 2.0,
            wavenumber: 3.0,
        };
        assert_abs_diff_eq!(s.eval_deriv(0.0), 6.0);
    }

    #[test]
    fn verdict_spreads() {
        let mk = |r37, r38| Lemma31Run {
            alpha: 2.0,
            epsilon: 0.1,
            datum: String::new(),
            lhs37: 0.0,
            energy38: 0.0,
            u0_norm_sq: 0.0,
            du0_norm_sq: 0.0,
            ratio37: r37,
            ratio38: r38,
            iterations: 0,
        };
        let v = lemma31_verdicts(&[mk(1.0, 0.0), mk(2.5, 0.0)]);
        assert!(v.iter().all(|v| v.passed));
        let v = lemma31_verdicts(&[mk(1.0, 1.0), mk(3.5, 1.0)]);
        assert!(!v[0].passed && v[1].passed);
    }
}

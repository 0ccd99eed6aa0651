//! Python bindings: profiles, homogenized coefficients, the limit problem,
//! a single thin-domain solve and the rectangle harness.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use thinhom::fem::CgOptions;
use thinhom::geometry::ThinDomainSpec;
use thinhom::homogenize::CellOptions;
use thinhom::limit1d::{Forcing, LimitProblem};
use thinhom::verify::{BoundaryDatum, LemmaOptions};

type LemmaRow = (f64, f64, f64, f64, f64);

fn err(e: thinhom::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(frozen, module = "thinhom_py")]
struct Profile(thinhom::geometry::Profile);

#[pymethods]
impl Profile {
    /// Parses `constant(1.0)`, `sine(base=1.0, terms=[(0.5, 1)])` and the other profile forms.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(Profile).map_err(err)
    }

    fn __call__(&self, y: f64) -> f64 {
        self.0.eval(y)
    }

    fn deriv(&self, y: f64) -> f64 {
        self.0.eval_deriv(y)
    }

    #[getter]
    fn period(&self) -> f64 {
        self.0.period()
    }

    #[getter]
    fn min(&self) -> f64 {
        self.0.min()
    }

    #[getter]
    fn max(&self) -> f64 {
        self.0.max()
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn __repr__(&self) -> String {
        format!("Profile('{}')", self.0)
    }
}

#[pyclass(get_all, frozen, module = "thinhom_py")]
struct Coefficients {
    q_hat: f64,
    q_hat_error_bar: f64,
    q_hat_coarse: f64,
    q_hat_fine: f64,
    q_hat_energy: f64,
    p: f64,
    area_ratio: f64,
    mass_coeff: f64,
}

#[pymethods]
impl Coefficients {
    fn __repr__(&self) -> String {
        format!(
            "Coefficients(q_hat={}, q_hat_error_bar={}, p={}, area_ratio={})",
            self.q_hat, self.q_hat_error_bar, self.p, self.area_ratio
        )
    }
}

/// Homogenized coefficients of the cell under `g` over the floor `-min h`.
#[pyfunction]
#[pyo3(signature = (g, h, nodes_per_period = 32))]
fn coefficients(py: Python<'_>, g: &Profile, h: &Profile, nodes_per_period: usize) -> PyResult<Coefficients> {
    let opts = CellOptions {
        nodes_per_period,
        ..Default::default()
    };
    let c = py
        .detach(|| thinhom::homogenize::homogenized_coefficients(&g.0, &h.0, &opts))
        .map_err(err)?;
    Ok(Coefficients {
        q_hat: c.q_hat,
        q_hat_error_bar: c.q_hat_error_bar,
        q_hat_coarse: c.q_hat_coarse,
        q_hat_fine: c.q_hat_fine,
        q_hat_energy: c.q_hat_energy,
        p: c.p,
        area_ratio: c.area_ratio,
        mass_coeff: c.mass_coeff(),
    })
}

/// Nodal values of the limit solution on `m + 1` uniform nodes of `[0, 1]` for `f = cos(mode pi x)`.
#[pyfunction]
#[pyo3(signature = (q_hat, mass_coeff, m = 1024, mode = 1))]
fn solve_limit(q_hat: f64, mass_coeff: f64, m: usize, mode: u32) -> PyResult<Vec<f64>> {
    let forcing = Forcing::cosine(mode).map_err(err)?;
    let problem = LimitProblem::new(q_hat, mass_coeff, forcing.limit_fhat(mass_coeff, m)).map_err(err)?;
    Ok(thinhom::limit1d::solve_limit(&problem).values().to_vec())
}

/// Amplitude of the exact limit solution for `f = cos(mode pi x)`.
#[pyfunction]
#[pyo3(signature = (q_hat, mass_coeff, mode = 1))]
fn limit_amplitude(q_hat: f64, mass_coeff: f64, mode: u32) -> PyResult<f64> {
    thinhom::limit1d::analytic_limit_cosine(q_hat, mass_coeff, mode)
        .map(|c| c.amplitude)
        .map_err(err)
}

/// Solves the thin-domain problem for `f = cos(mode pi x1)` and returns
/// `(x1, x2, u)` node lists plus the norms `(|u|, |d1 u|, |d2 u| / eps)`.
#[pyfunction]
#[pyo3(signature = (epsilon, alpha, g, h, nx, ny, mode = 1))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn solve_epsilon(
    py: Python<'_>,
    epsilon: f64,
    alpha: f64,
    g: &Profile,
    h: &Profile,
    nx: usize,
    ny: usize,
    mode: u32,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, (f64, f64, f64))> {
    let spec = ThinDomainSpec::new(epsilon, alpha, g.0.clone(), h.0.clone()).map_err(err)?;
    let forcing = Forcing::cosine(mode).map_err(err)?;
    let run = py
        .detach(|| thinhom::verify::solve_epsilon_problem(&spec, |x, _| forcing.eval(x), nx, ny, &CgOptions::default()))
        .map_err(err)?;
    let nodes = run.mesh.nodes();
    Ok((
        nodes.iter().map(|p| p[0]).collect(),
        nodes.iter().map(|p| p[1]).collect(),
        run.u.values().to_vec(),
        (run.norms.u, run.norms.d1, run.norms.d2_scaled),
    ))
}

/// Rectangle harness with bottom datum `slope x + offset`; returns one
/// `(epsilon, lhs, energy, ratio_lhs, ratio_energy)` tuple per epsilon.
#[pyfunction]
#[pyo3(signature = (alpha, eps_list, slope = 1.0, offset = 0.0, nx = 32, ny = 256))]
fn lemma31(
    py: Python<'_>,
    alpha: f64,
    eps_list: Vec<f64>,
    slope: f64,
    offset: f64,
    nx: usize,
    ny: usize,
) -> PyResult<Vec<LemmaRow>> {
    let datum = if slope == 0.0 {
        BoundaryDatum::Constant { value: offset }
    } else {
        BoundaryDatum::Linear { slope, offset }
    };
    let opts = LemmaOptions {
        nx,
        ny,
        solver: CgOptions::default(),
    };
    let runs = py
        .detach(|| thinhom::verify::lemma31_harness(alpha, &eps_list, datum, &opts))
        .map_err(err)?;
    Ok(runs
        .iter()
        .map(|r| (r.epsilon, r.lhs37, r.energy38, r.ratio37, r.ratio38))
        .collect())
}

#[pymodule]
fn thinhom_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Profile>()?;
    m.add_class::<Coefficients>()?;
    m.add_function(wrap_pyfunction!(coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(solve_limit, m)?)?;
    m.add_function(wrap_pyfunction!(limit_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(solve_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(lemma31, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

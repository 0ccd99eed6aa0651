//! Run configuration, read from TOML.
//!
//! ```toml
//! [geometry]
//! g = "sine(base=1.0, terms=[(0.5, 1)])"
//! h = "cosine(base=1.0, terms=[(1.0, 1)])"
//! alpha = 1.5
//!
//! [sweep]
//! eps_list = [0.2, 0.1, 0.05]
//!
//! [forcing]
//! kind = "cosine"      # or "table" with x = [...] and values = [...]
//! mode = 1
//!
//! [resolution]
//! points_per_period = 8
//! limit_grid = 1024
//! cell_nodes_per_period = 32
//! min_ny = 8
//!
//! [solver]
//! tol = 1e-10
//! max_iter = 100000    # optional, default 20 x unknowns
//! preconditioner = "jacobi"   # or "ic0"
//!
//! [output]
//! dir = "out"
//! export_mesh = false
//!
//! [run]
//! single_threaded = false
//! workers = 0          # 0 = available parallelism
//! mesh_cell_cap = 2000000
//! refinement_check = false
//!
//! [lemma31]
//! enabled = false
//! alpha = 2.0
//! eps_list = [0.4, 0.3, 0.2]
//! datum = { kind = "linear", slope = 1.0, offset = 0.0 }
//! nx = 32
//! ny = 256
//! ```
//!
//! Every section and key is optional except `geometry.g`. Unknown keys are
//! errors, and all violations are reported together.

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::fem::cg::Preconditioner;
use crate::geometry::Profile;
use crate::limit1d::Forcing;
use crate::verify::BoundaryDatum;

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaConfig {
    pub enabled: bool,
    pub alpha: f64,
    pub eps_list: Vec<f64>,
    pub datum: BoundaryDatum,
    pub nx: usize,
    pub ny: usize,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            alpha: 2.0,
            eps_list: vec![0.4, 0.3, 0.2],
            datum: BoundaryDatum::Linear {
                slope: 1.0,
                offset: 0.0,
            },
            nx: 32,
            ny: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub g: Profile,
    pub h: Profile,
    pub alpha: f64,
    pub eps_list: Vec<f64>,
    pub forcing: Forcing,
    pub points_per_period: usize,
    pub limit_grid: usize,
    pub cell_nodes_per_period: usize,
    pub min_ny: usize,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
    pub output_dir: PathBuf,
    pub export_mesh: bool,
    pub single_threaded: bool,
    pub workers: usize,
    pub mesh_cell_cap: usize,
    pub refinement_check: bool,
    pub lemma31: LemmaConfig,
}

impl RunConfig {
    /// Defaults for everything but the top profile.
    pub fn with_profile(g: Profile) -> Self {
        Self {
            g,
            h: Profile::constant(0.0),
            alpha: 1.5,
            eps_list: vec![0.2, 0.1, 0.05],
            forcing: Forcing::Cosine { mode: 1 },
            points_per_period: 8,
            limit_grid: 1024,
            cell_nodes_per_period: 32,
            min_ny: 8,
            tol: 1e-10,
            max_iter: None,
            preconditioner: Preconditioner::Jacobi,
            output_dir: PathBuf::from("out"),
            export_mesh: false,
            single_threaded: false,
            workers: 0,
            mesh_cell_cap: 2_000_000,
            refinement_check: false,
            lemma31: LemmaConfig::default(),
        }
    }

    /// Worker count for the sweep; `1` when single-threaded.
    pub fn effective_workers(&self) -> usize {
        if self.single_threaded {
            1
        } else {
            self.workers
        }
    }

    /// Range checks on an assembled config.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        check_ranges(self, &mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("syntax: {}", e.message())]))?;
    let mut r = Reader::default();
    let defaults = RunConfig::with_profile(Profile::constant(1.0));
    let mut cfg = defaults.clone();

    let sections = [
        "geometry",
        "sweep",
        "forcing",
        "resolution",
        "solver",
        "output",
        "run",
        "lemma31",
    ];
    for (key, value) in &root {
        if !sections.contains(&key.as_str()) {
            r.err(format!("unknown section `{key}`"));
        } else if !value.is_table() {
            r.err(format!("`{key}` must be a section"));
        }
    }
    let section = |name: &str| root.get(name).and_then(Value::as_table).cloned().unwrap_or_default();

    let geo = section("geometry");
    r.known(&geo, "geometry", &["g", "h", "alpha"]);
    match geo.get("g") {
        Some(v) => {
            if let Some(p) = r.profile(v, "geometry.g") {
                cfg.g = p;
            }
        }
        None => r.err("missing required key `geometry.g`".into()),
    }
    if let Some(v) = geo.get("h") {
        if let Some(p) = r.profile(v, "geometry.h") {
            cfg.h = p;
        }
    }
    r.float(&geo, "geometry.alpha", &mut cfg.alpha);

    let sweep = section("sweep");
    r.known(&sweep, "sweep", &["eps_list"]);
    r.floats(&sweep, "sweep.eps_list", &mut cfg.eps_list);

    let forcing = section("forcing");
    let kind = match forcing.get("kind") {
        None => "cosine".to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => {
            r.err("`forcing.kind` must be a string".into());
            String::new()
        }
    };
    match kind.as_str() {
        "cosine" => {
            r.known(&forcing, "forcing", &["kind", "mode"]);
            let mut mode = 1usize;
            r.count(&forcing, "forcing.mode", &mut mode);
            cfg.forcing = Forcing::Cosine {
                mode: u32::try_from(mode).unwrap_or(u32::MAX),
            };
        }
        "table" => {
            r.known(&forcing, "forcing", &["kind", "x", "values"]);
            let (mut x, mut values) = (Vec::new(), Vec::new());
            if !forcing.contains_key("x") || !forcing.contains_key("values") {
                r.err("table forcing needs `forcing.x` and `forcing.values`".into());
            }
            r.floats(&forcing, "forcing.x", &mut x);
            r.floats(&forcing, "forcing.values", &mut values);
            cfg.forcing = Forcing::Table { x, values };
        }
        "" => {}
        other => r.err(format!(
            "`forcing.kind` must be \"cosine\" or \"table\", got \"{other}\""
        )),
    }

    let res = section("resolution");
    r.known(
        &res,
        "resolution",
        &["points_per_period", "limit_grid", "cell_nodes_per_period", "min_ny"],
    );
    r.count(&res, "resolution.points_per_period", &mut cfg.points_per_period);
    r.count(&res, "resolution.limit_grid", &mut cfg.limit_grid);
    r.count(&res, "resolution.cell_nodes_per_period", &mut cfg.cell_nodes_per_period);
    r.count(&res, "resolution.min_ny", &mut cfg.min_ny);

    let solver = section("solver");
    r.known(&solver, "solver", &["tol", "max_iter", "preconditioner"]);
    r.float(&solver, "solver.tol", &mut cfg.tol);
    if solver.contains_key("max_iter") {
        let mut m = 0;
        r.count(&solver, "solver.max_iter", &mut m);
        cfg.max_iter = Some(m);
    }
    match solver.get("preconditioner") {
        None => {}
        Some(Value::String(s)) if s == "jacobi" => cfg.preconditioner = Preconditioner::Jacobi,
        Some(Value::String(s)) if s == "ic0" => cfg.preconditioner = Preconditioner::Ic0,
        Some(v) => r.err(format!(
            "`solver.preconditioner` must be \"jacobi\" or \"ic0\", got {v}"
        )),
    }

    let out = section("output");
    r.known(&out, "output", &["dir", "export_mesh"]);
    match out.get("dir") {
        None => {}
        Some(Value::String(s)) => cfg.output_dir = PathBuf::from(s),
        Some(_) => r.err("`output.dir` must be a string".into()),
    }
    r.boolean(&out, "output.export_mesh", &mut cfg.export_mesh);

    let run = section("run");
    r.known(
        &run,
        "run",
        &["single_threaded", "workers", "mesh_cell_cap", "refinement_check"],
    );
    r.boolean(&run, "run.single_threaded", &mut cfg.single_threaded);
    r.count(&run, "run.workers", &mut cfg.workers);
    r.count(&run, "run.mesh_cell_cap", &mut cfg.mesh_cell_cap);
    r.boolean(&run, "run.refinement_check", &mut cfg.refinement_check);

    let lemma = section("lemma31");
    r.known(
        &lemma,
        "lemma31",
        &["enabled", "alpha", "eps_list", "datum", "nx", "ny"],
    );
    r.boolean(&lemma, "lemma31.enabled", &mut cfg.lemma31.enabled);
    r.float(&lemma, "lemma31.alpha", &mut cfg.lemma31.alpha);
    r.floats(&lemma, "lemma31.eps_list", &mut cfg.lemma31.eps_list);
    r.count(&lemma, "lemma31.nx", &mut cfg.lemma31.nx);
    r.count(&lemma, "lemma31.ny", &mut cfg.lemma31.ny);
    if let Some(v) = lemma.get("datum") {
        if let Some(d) = r.datum(v) {
            cfg.lemma31.datum = d;
        }
    }

    check_ranges(&cfg, &mut r.errors);
    if r.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(r.errors))
    }
}

fn check_ranges(cfg: &RunConfig, errors: &mut Vec<String>) {
    let mut err = |m: String| errors.push(m);
    if !(cfg.alpha > 1.0) || !cfg.alpha.is_finite() {
        err(format!("alpha must be > 1 (got {})", cfg.alpha));
    }
    if !(cfg.g.min() > 0.0) {
        err(format!(
            "geometry.g must be bounded below by a positive constant (min = {})",
            cfg.g.min()
        ));
    }
    if !(cfg.h.min() >= 0.0) {
        err(format!("geometry.h must be nonnegative (min = {})", cfg.h.min()));
    }
    if !cfg.g.has_continuous_derivative() {
        err("geometry.g must have a continuous derivative (piecewise-linear tops are not supported)".into());
    }
    check_eps(&cfg.eps_list, "sweep.eps_list", 3, &mut err);
    if let Err(e) = cfg.forcing.validate() {
        err(format!("forcing: {e}"));
    }
    if cfg.points_per_period < 4 {
        err(format!(
            "resolution.points_per_period must be >= 4 (got {})",
            cfg.points_per_period
        ));
    }
    if cfg.limit_grid < 8 {
        err(format!("resolution.limit_grid must be >= 8 (got {})", cfg.limit_grid));
    }
    if cfg.cell_nodes_per_period < 16 || !cfg.cell_nodes_per_period.is_multiple_of(2) {
        err(format!(
            "resolution.cell_nodes_per_period must be even and >= 16 (got {})",
            cfg.cell_nodes_per_period
        ));
    }
    if cfg.min_ny < 2 {
        err(format!("resolution.min_ny must be >= 2 (got {})", cfg.min_ny));
    }
    if !(cfg.tol > 0.0 && cfg.tol < 1.0) {
        err(format!("solver.tol must lie in (0, 1) (got {})", cfg.tol));
    }
    if cfg.max_iter == Some(0) {
        err("solver.max_iter must be >= 1".into());
    }
    if cfg.mesh_cell_cap < 8 {
        err(format!("run.mesh_cell_cap must be >= 8 (got {})", cfg.mesh_cell_cap));
    }
    let l = &cfg.lemma31;
    if !(l.alpha > 1.0) || !l.alpha.is_finite() {
        err(format!("lemma31.alpha must be > 1 (got {})", l.alpha));
    }
    check_eps(&l.eps_list, "lemma31.eps_list", 1, &mut err);
    if l.nx < 2 || l.ny < 2 {
        err(format!(
            "lemma31.nx and lemma31.ny must be >= 2 (got {} and {})",
            l.nx, l.ny
        ));
    }
}

fn check_eps(list: &[f64], key: &str, min_len: usize, err: &mut impl FnMut(String)) {
    if list.len() < min_len {
        err(format!("{key} needs at least {min_len} entries (got {})", list.len()));
    }
    if let Some(e) = list.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        err(format!("{key}: every epsilon must lie in (0, 1) (got {e})"));
    }
    if list.windows(2).any(|w| !(w[1] < w[0])) {
        err(format!("{key} must be strictly decreasing"));
    }
}

type DatumReader<R> = fn(&mut R, &Table) -> BoundaryDatum;

#[derive(Default)]
struct Reader {
    errors: Vec<String>,
}

impl Reader {
    fn err(&mut self, m: String) {
        self.errors.push(m);
    }

    fn known(&mut self, table: &Table, section: &str, keys: &[&str]) {
        for k in table.keys() {
            if !keys.contains(&k.as_str()) {
                self.err(format!("unknown key `{section}.{k}`"));
            }
        }
    }

    fn leaf<'a>(table: &'a Table, key: &str) -> Option<&'a Value> {
        table.get(key.rsplit('.').next().unwrap_or(key))
    }

    fn float(&mut self, table: &Table, key: &str, slot: &mut f64) {
        match Self::leaf(table, key) {
            None => {}
            Some(Value::Float(v)) => *slot = *v,
            Some(Value::Integer(v)) => *slot = *v as f64,
            Some(_) => self.err(format!("`{key}` must be a number")),
        }
    }

    fn floats(&mut self, table: &Table, key: &str, slot: &mut Vec<f64>) {
        match Self::leaf(table, key) {
            None => {}
            Some(Value::Array(a)) => {
                let mut out = Vec::with_capacity(a.len());
                for v in a {
                    match v {
                        Value::Float(x) => out.push(*x),
                        Value::Integer(x) => out.push(*x as f64),
                        _ => {
                            self.err(format!("`{key}` must be an array of numbers"));
                            return;
                        }
                    }
                }
                *slot = out;
            }
            Some(_) => self.err(format!("`{key}` must be an array of numbers")),
        }
    }

    fn count(&mut self, table: &Table, key: &str, slot: &mut usize) {
        match Self::leaf(table, key) {
            None => {}
            Some(Value::Integer(v)) if *v >= 0 => *slot = *v as usize,
            Some(_) => self.err(format!("`{key}` must be a nonnegative integer")),
        }
    }

    fn boolean(&mut self, table: &Table, key: &str, slot: &mut bool) {
        match Self::leaf(table, key) {
            None => {}
            Some(Value::Boolean(b)) => *slot = *b,
            Some(_) => self.err(format!("`{key}` must be true or false")),
        }
    }

    fn profile(&mut self, v: &Value, key: &str) -> Option<Profile> {
        match v {
            Value::String(s) => match s.parse::<Profile>() {
                Ok(p) => Some(p),
                Err(e) => {
                    self.err(format!("`{key}`: {e}"));
                    None
                }
            },
            Value::Float(x) => Some(Profile::constant(*x)),
            Value::Integer(x) => Some(Profile::constant(*x as f64)),
            _ => {
                self.err(format!("`{key}` must be a profile descriptor string"));
                None
            }
        }
    }

    fn datum(&mut self, v: &Value) -> Option<BoundaryDatum> {
        let Some(t) = v.as_table() else {
            self.err("`lemma31.datum` must be a table with a `kind`".into());
            return None;
        };
        let kind = t.get("kind").and_then(Value::as_str).unwrap_or("");
        let (keys, datum): (&[&str], DatumReader<Self>) = match kind {
            "constant" => (&["kind", "value"], |r, t| {
                let mut value = 1.0;
                r.float(t, "lemma31.datum.value", &mut value);
                BoundaryDatum::Constant { value }
            }),
            "linear" => (&["kind", "slope", "offset"], |r, t| {
                let (mut slope, mut offset) = (1.0, 0.0);
                r.float(t, "lemma31.datum.slope", &mut slope);
                r.float(t, "lemma31.datum.offset", &mut offset);
                BoundaryDatum::Linear { slope, offset }
            }),
            "sine" => (&["kind", "amplitude", "wavenumber"], |r, t| {
                let (mut amplitude, mut wavenumber) = (1.0, 1.0);
                r.float(t, "lemma31.datum.amplitude", &mut amplitude);
                r.float(t, "lemma31.datum.wavenumber", &mut wavenumber);
                BoundaryDatum::Sine { amplitude, wavenumber }
            }),
            other => {
                self.err(format!(
                    "`lemma31.datum.kind` must be constant, linear or sine (got \"{other}\")"
                ));
                return None;
            }
        };
        self.known(t, "lemma31.datum", keys);
        Some(datum(self, t))
    }
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
}

fn int(n: usize) -> Value {
    Value::Integer(i64::try_from(n).unwrap_or(i64::MAX))
}

/// Serializes every field, so the output parses back to an equal config.
pub fn write_config(cfg: &RunConfig) -> String {
    let mut root = Table::new();
    let mut put = |name: &str, entries: Vec<(&str, Value)>| {
        root.insert(
            name.into(),
            Value::Table(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()),
        );
    };
    put(
        "geometry",
        vec![
            ("g", Value::String(cfg.g.to_string())),
            ("h", Value::String(cfg.h.to_string())),
            ("alpha", Value::Float(cfg.alpha)),
        ],
    );
    put("sweep", vec![("eps_list", floats(&cfg.eps_list))]);
    let forcing = match &cfg.forcing {
        Forcing::Cosine { mode } => vec![
            ("kind", Value::String("cosine".into())),
            ("mode", Value::Integer(i64::from(*mode))),
        ],
        Forcing::Table { x, values } => vec![
            ("kind", Value::String("table".into())),
            ("x", floats(x)),
            ("values", floats(values)),
        ],
    };
    put("forcing", forcing);
    put(
        "resolution",
        vec![
            ("points_per_period", int(cfg.points_per_period)),
            ("limit_grid", int(cfg.limit_grid)),
            ("cell_nodes_per_period", int(cfg.cell_nodes_per_period)),
            ("min_ny", int(cfg.min_ny)),
        ],
    );
    let mut solver = vec![
        ("tol", Value::Float(cfg.tol)),
        ("preconditioner", Value::String(cfg.preconditioner.name().into())),
    ];
    if let Some(m) = cfg.max_iter {
        solver.push(("max_iter", int(m)));
    }
    put("solver", solver);
    put(
        "output",
        vec![
            ("dir", Value::String(cfg.output_dir.display().to_string())),
            ("export_mesh", Value::Boolean(cfg.export_mesh)),
        ],
    );
    put(
        "run",
        vec![
            ("single_threaded", Value::Boolean(cfg.single_threaded)),
            ("workers", int(cfg.workers)),
            ("mesh_cell_cap", int(cfg.mesh_cell_cap)),
            ("refinement_check", Value::Boolean(cfg.refinement_check)),
        ],
    );
    let l = &cfg.lemma31;
    let datum: Table = match l.datum {
        BoundaryDatum::Constant { value } => [
            ("kind", Value::String("constant".into())),
            ("value", Value::Float(value)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect(),
        BoundaryDatum::Linear { slope, offset } => [
            ("kind", Value::String("linear".into())),
            ("slope", Value::Float(slope)),
            ("offset", Value::Float(offset)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect(),
        BoundaryDatum::Sine { amplitude, wavenumber } => [
            ("kind", Value::String("sine".into())),
            ("amplitude", Value::Float(amplitude)),
            ("wavenumber", Value::Float(wavenumber)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect(),
    };
    put(
        "lemma31",
        vec![
            ("enabled", Value::Boolean(l.enabled)),
            ("alpha", Value::Float(l.alpha)),
            ("eps_list", floats(&l.eps_list)),
            ("datum", Value::Table(datum)),
            ("nx", int(l.nx)),
            ("ny", int(l.ny)),
        ],
    );
    toml::to_string(&root).expect("config tables always serialize")
}

/// The config as JSON, for echoing into reports.
pub fn config_json(cfg: &RunConfig) -> serde_json::Value {
    let table: Table = write_config(cfg).parse().expect("written config parses");
    serde_json::to_value(table).unwrap_or(serde_json::Value::Null)
}

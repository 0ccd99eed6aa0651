//! Stage orchestration and artifact output for the command-line driver.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{config_json, RunConfig};
use crate::error::{Error, Result};
use crate::fem::CgOptions;
use crate::geometry::ThinDomainSpec;
use crate::homogenize::{homogenized_coefficients, CellOptions, HomogenizedCoefficients};
use crate::limit1d::{analytic_limit_cosine, solve_limit, Forcing, LimitProblem, LimitSolution};
use crate::mesh::{resolution_for, ResolutionPolicy};
use crate::verify::{
    convergence_study, error_vs_limit, lemma31_csv, lemma31_harness, lemma31_verdicts, solve_epsilon_problem,
    LemmaOptions, StudyOptions, StudySetup, Verdict, MEASURE_NOTE,
};

pub const SCHEMA_VERSION: u32 = 1;

/// `git describe` of the build, or the crate version if unavailable.
pub fn toolkit_version() -> String {
    let describe = env!("THINHOM_GIT_DESCRIBE");
    if describe == "unknown" {
        env!("CARGO_PKG_VERSION").to_string()
    } else {
        format!("{} ({describe})", env!("CARGO_PKG_VERSION"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    /// Cell, limit, sweep and (if enabled) the rectangle harness.
    Run,
    Cell,
    Limit,
    SolveEps,
    Converge,
    Lemma31,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Run => "run",
            Stage::Cell => "cell",
            Stage::Limit => "limit",
            Stage::SolveEps => "solve-eps",
            Stage::Converge => "converge",
            Stage::Lemma31 => "lemma31",
        }
    }
}

/// Command-line overrides of the config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub deterministic: bool,
    pub verbose: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub verdicts: Vec<Verdict>,
    pub artifacts: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// `0` when every verdict passes, `2` on a failed verdict, `1` on an error.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.passed() => 0,
        Ok(_) => 2,
        Err(_) => 1,
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    verbose: bool,
    artifacts: Vec<String>,
    verdicts: Vec<Verdict>,
    sections: serde_json::Map<String, Value>,
}

impl Ctx {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[thinhom] {}", msg.as_ref());
        }
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(name.to_string());
        self.log(format!("wrote {}", path.display()));
        Ok(())
    }

    fn solver(&self) -> CgOptions {
        CgOptions {
            tol: self.cfg.tol,
            max_iter: self.cfg.max_iter,
            pin: None,
            preconditioner: self.cfg.preconditioner,
        }
    }

    fn cell(&mut self) -> Result<HomogenizedCoefficients> {
        self.log("solving the cell problem");
        let opts = CellOptions {
            nodes_per_period: self.cfg.cell_nodes_per_period,
            theta_samples: 64,
            q_profile_bins: Some(32),
            solver: self.solver(),
        };
        let coeffs = homogenized_coefficients(&self.cfg.g, &self.cfg.h, &opts).map_err(|e| e.in_stage("cell"))?;
        let mut record = serde_json::to_value(&coeffs)?;
        record["schema_version"] = json!(SCHEMA_VERSION);
        record["mass_coeff"] = json!(coeffs.mass_coeff());
        self.write("coefficients.json", &serde_json::to_string_pretty(&record)?)?;
        let mut theta = String::from("x2,theta\n");
        for (z, t) in &coeffs.theta {
            writeln!(theta, "{z:.12e},{t:.12e}").ok();
        }
        self.write("theta.csv", &theta)?;
        if let Some(profile) = &coeffs.q_profile {
            let mut q = String::from("x2,q\n");
            for (z, v) in profile {
                writeln!(q, "{z:.12e},{v:.12e}").ok();
            }
            self.write("q_profile.csv", &q)?;
        }
        let gap = (coeffs.q_hat_fine - coeffs.q_hat_energy).abs() / coeffs.q_hat_fine;
        let self_conv = (coeffs.q_hat_fine - coeffs.q_hat_coarse).abs() / coeffs.q_hat_fine;
        self.verdicts.push(Verdict {
            name: "cell_energy_identity".into(),
            passed: gap < 0.01,
            detail: format!(
                "flux {:.8} vs energy {:.8}, relative gap {gap:.3e}",
                coeffs.q_hat_fine, coeffs.q_hat_energy
            ),
        });
        self.verdicts.push(Verdict {
            name: "cell_self_convergence".into(),
            passed: self_conv < 0.02,
            detail: format!(
                "coarse {:.8} vs fine {:.8}, relative change {self_conv:.3e}; extrapolated {:.8} +- {:.2e}",
                coeffs.q_hat_coarse, coeffs.q_hat_fine, coeffs.q_hat, coeffs.q_hat_error_bar
            ),
        });
        self.sections.insert("coefficients".into(), record);
        Ok(coeffs)
    }

    fn limit(&mut self, coeffs: &HomogenizedCoefficients) -> Result<LimitSolution> {
        self.log("solving the limit problem");
        let mass = coeffs.mass_coeff();
        let f_hat = self.cfg.forcing.limit_fhat(mass, self.cfg.limit_grid);
        let problem = LimitProblem::new(coeffs.q_hat, mass, f_hat).map_err(|e| e.in_stage("limit"))?;
        let u0 = solve_limit(&problem);
        let mut csv = String::from("x,u0\n");
        for (x, u) in u0.nodes().zip(u0.values()) {
            writeln!(csv, "{x:.12e},{u:.12e}").ok();
        }
        self.write("u0.csv", &csv)?;
        let mut record = json!({
            "q_hat": coeffs.q_hat,
            "mass_coeff": mass,
            "grid": self.cfg.limit_grid,
            "l2_norm": u0.l2_norm(),
        });
        if let Forcing::Cosine { mode } = self.cfg.forcing {
            let exact = analytic_limit_cosine(coeffs.q_hat, mass, mode)?;
            let gap = u0.l2_error(|x| exact.eval(x)) / (exact.amplitude.abs() / 2f64.sqrt());
            record["closed_form_amplitude"] = json!(exact.amplitude);
            record["closed_form_rel_gap"] = json!(gap);
            self.verdicts.push(Verdict {
                name: "limit_closed_form".into(),
                passed: gap < 1e-4,
                detail: format!(
                    "relative L2 gap to the closed form {gap:.3e} (amplitude {:.8})",
                    exact.amplitude
                ),
            });
        }
        self.sections.insert("limit".into(), record);
        Ok(u0)
    }

    fn policy(&self) -> ResolutionPolicy {
        ResolutionPolicy {
            points_per_period: self.cfg.points_per_period,
            min_ny: self.cfg.min_ny,
            max_cells: self.cfg.mesh_cell_cap,
        }
    }

    fn solve_eps(&mut self, u0: &LimitSolution) -> Result<()> {
        let eps = self.cfg.eps_list[0];
        let stage = format!("solve-eps (eps = {eps})");
        self.log(&stage);
        let spec = ThinDomainSpec::new(eps, self.cfg.alpha, self.cfg.g.clone(), self.cfg.h.clone())
            .map_err(|e| e.in_stage(&stage))?;
        let (nx, ny) = resolution_for(&spec, &self.policy()).map_err(|e| e.in_stage(&stage))?;
        let forcing = self.cfg.forcing.clone();
        let run = solve_epsilon_problem(&spec, |x, _| forcing.eval(x), nx, ny, &self.solver())
            .map_err(|e| e.in_stage(&stage))?;
        let err = error_vs_limit(&run, |x| u0.eval(x));
        let mut csv = String::from("x1,x2,u\n");
        for (p, u) in run.mesh.nodes().iter().zip(run.u.values()) {
            writeln!(csv, "{:.12e},{:.12e},{u:.12e}", p[0], p[1]).ok();
        }
        self.write("solution.csv", &csv)?;
        if self.cfg.export_mesh {
            run.mesh.export_csv(&self.out)?;
            self.artifacts
                .extend(["nodes.csv", "triangles.csv", "boundary.csv"].map(String::from));
        }
        self.sections.insert(
            "solve_eps".into(),
            json!({ "epsilon": eps, "mesh": run.stats, "norms": run.norms, "error": err, "solver": run.report }),
        );
        Ok(())
    }

    fn converge(&mut self, u0: &LimitSolution) -> Result<()> {
        self.log(format!("sweeping eps over {:?}", self.cfg.eps_list));
        let setup = StudySetup {
            g: self.cfg.g.clone(),
            h: self.cfg.h.clone(),
            alpha: self.cfg.alpha,
            forcing: self.cfg.forcing.clone(),
            eps_list: self.cfg.eps_list.clone(),
            policy: self.policy(),
        };
        let opts = StudyOptions {
            solver: self.solver(),
            workers: self.cfg.effective_workers(),
            refinement_check: self.cfg.refinement_check,
        };
        match convergence_study(&setup, u0, &opts) {
            Ok(report) => {
                self.write("convergence.csv", &report.to_csv())?;
                self.verdicts.extend(report.verdicts.iter().cloned());
                self.sections
                    .insert("convergence".into(), serde_json::to_value(&report)?);
                Ok(())
            }
            Err(failure) => {
                if !failure.partial.runs.is_empty() {
                    self.write("convergence.csv", &failure.partial.to_csv())?;
                }
                self.sections
                    .insert("convergence_partial".into(), serde_json::to_value(&failure.partial)?);
                Err(failure.error)
            }
        }
    }

    fn lemma31(&mut self) -> Result<()> {
        let l = self.cfg.lemma31.clone();
        self.log(format!("rectangle harness over {:?}", l.eps_list));
        let opts = LemmaOptions {
            nx: l.nx,
            ny: l.ny,
            solver: self.solver(),
        };
        let runs = lemma31_harness(l.alpha, &l.eps_list, l.datum, &opts)?;
        self.write("lemma31.csv", &lemma31_csv(&runs))?;
        self.verdicts.extend(lemma31_verdicts(&runs));
        self.sections.insert("lemma31".into(), serde_json::to_value(&runs)?);
        Ok(())
    }
}

/// Runs `stage` and writes its artifacts plus `report.json` into the output directory.
pub fn run_stage(stage: Stage, cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    if let Some(out) = &opts.out {
        cfg.output_dir = out.clone();
    }
    if let Some(w) = opts.workers {
        cfg.workers = w;
    }
    if opts.deterministic {
        cfg.single_threaded = true;
    }
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let mut ctx = Ctx {
        cfg,
        out,
        verbose: opts.verbose,
        artifacts: Vec::new(),
        verdicts: Vec::new(),
        sections: serde_json::Map::new(),
    };
    let result = (|| -> Result<()> {
        match stage {
            Stage::Cell => {
                ctx.cell()?;
            }
            Stage::Limit => {
                let c = ctx.cell()?;
                ctx.limit(&c)?;
            }
            Stage::SolveEps => {
                let c = ctx.cell()?;
                let u0 = ctx.limit(&c)?;
                ctx.solve_eps(&u0)?;
            }
            Stage::Converge => {
                let c = ctx.cell()?;
                let u0 = ctx.limit(&c)?;
                ctx.converge(&u0)?;
            }
            Stage::Lemma31 => ctx.lemma31()?,
            Stage::Run => {
                let c = ctx.cell()?;
                let u0 = ctx.limit(&c)?;
                ctx.converge(&u0)?;
                if ctx.cfg.lemma31.enabled {
                    ctx.lemma31()?;
                }
            }
        }
        Ok(())
    })();

    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "toolkit_version": toolkit_version(),
        "command": stage.name(),
        "status": match &result {
            Ok(()) if ctx.verdicts.iter().all(|v| v.passed) => "pass",
            Ok(()) => "fail",
            Err(_) => "error",
        },
        "config": config_json(&ctx.cfg),
        "note": MEASURE_NOTE,
        "verdicts": ctx.verdicts,
        "artifacts": ctx.artifacts,
    });
    if let Err(e) = &result {
        report["error"] = json!(e.to_string());
    }
    for (k, v) in std::mem::take(&mut ctx.sections) {
        report[k] = v;
    }
    let text = serde_json::to_string_pretty(&report)?;
    ctx.write("report.json", &text)?;
    result.map(|()| Outcome {
        out_dir: ctx.out.clone(),
        verdicts: ctx.verdicts,
        artifacts: ctx.artifacts,
    })
}

/// Full pipeline; returns the process exit code.
pub fn run_pipeline(cfg: &RunConfig, opts: &RunOptions) -> i32 {
    let result = run_stage(Stage::Run, cfg, opts);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    exit_code(&result)
}

const KNOWN_ARTIFACTS: [&str; 8] = [
    "report.json",
    "coefficients.json",
    "u0.csv",
    "theta.csv",
    "q_profile.csv",
    "convergence.csv",
    "lemma31.csv",
    "solution.csv",
];

/// Human-readable summary of the artifacts in `dir`; also returns whether the stored verdicts passed.
pub fn render_report(dir: &Path) -> Result<(String, bool)> {
    let present: Vec<&str> = KNOWN_ARTIFACTS
        .iter()
        .copied()
        .filter(|a| dir.join(a).is_file())
        .collect();
    if present.is_empty() {
        return Err(Error::Argument(format!("no artifacts found in {}", dir.display())));
    }
    let mut out = String::new();
    let mut passed = true;
    let read = |name: &str| -> Result<String> {
        let p = dir.join(name);
        fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    };
    if present.contains(&"report.json") {
        let report: Value = serde_json::from_str(&read("report.json")?)?;
        writeln!(
            out,
            "command {}  status {}  toolkit {}",
            report["command"].as_str().unwrap_or("?"),
            report["status"].as_str().unwrap_or("?"),
            report["toolkit_version"].as_str().unwrap_or("?")
        )
        .ok();
        if let Some(e) = report["error"].as_str() {
            writeln!(out, "error: {e}").ok();
            passed = false;
        }
        if let Some(vs) = report["verdicts"].as_array() {
            writeln!(out, "\nverdicts").ok();
            for v in vs {
                let ok = v["passed"].as_bool().unwrap_or(false);
                passed &= ok;
                writeln!(
                    out,
                    "  {:<24} {}  {}",
                    v["name"].as_str().unwrap_or("?"),
                    if ok { "PASS" } else { "FAIL" },
                    v["detail"].as_str().unwrap_or("")
                )
                .ok();
            }
        }
    }
    if present.contains(&"coefficients.json") {
        let c: Value = serde_json::from_str(&read("coefficients.json")?)?;
        writeln!(out, "\ncoefficients").ok();
        for key in [
            "q_hat",
            "q_hat_error_bar",
            "q_hat_energy",
            "p",
            "area_ratio",
            "mass_coeff",
        ] {
            if let Some(v) = c[key].as_f64() {
                writeln!(out, "  {key:<16} {v:.8}").ok();
            }
        }
    }
    for (name, title) in [("convergence.csv", "convergence"), ("lemma31.csv", "rectangle harness")] {
        if present.contains(&name) {
            writeln!(out, "\n{title}").ok();
            out.push_str(&render_csv(&read(name)?));
        }
    }
    let others: Vec<&str> = present
        .iter()
        .copied()
        .filter(|a| !["report.json", "coefficients.json", "convergence.csv", "lemma31.csv"].contains(a))
        .collect();
    if !others.is_empty() {
        writeln!(out, "\nother artifacts: {}", others.join(", ")).ok();
    }
    Ok((out, passed))
}

fn render_csv(text: &str) -> String {
    let rows: Vec<Vec<String>> = text
        .lines()
        .map(|l| {
            l.split(',')
                .map(|c| match c.parse::<f64>() {
                    Ok(v) if c.contains('e') => format!("{v:.4e}"),
                    _ => c.to_string(),
                })
                .collect()
        })
        .collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|j| rows.iter().filter_map(|r| r.get(j)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c:>w$}", w = widths[j]))
            .collect();
        writeln!(out, "  {}", cells.join("  ")).ok();
    }
    out
}

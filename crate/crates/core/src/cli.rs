//! Scenario files and the `solve | verify | convergence | ineq` commands.
//!
//! A scenario is a UTF-8 file of `key = value` lines; `#` starts a comment and
//! list values are comma separated:
//!
//! ```text
//! scenario.name = hump
//! grid.nx = 129
//! grid.nt = 129
//! grid.T = 1
//! obstacle.id = shrinking-hump
//! p = 3
//! ```
//!
//! Every command returns a process exit code: 0 pass, 1 input error,
//! 2 solver non-convergence, 3 verification failure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::catalog::{self, ObstacleId};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, Grid};
use crate::ineq;
use crate::obstacle::Obstacle;
use crate::pflux::PParams;
use crate::solver::{solve, SolveResult, SolverConfig};
use crate::verification::eps_study::eps_convergence_study;
use crate::verification::refinement::{solve_levels, study_from_results};
use crate::verification::{
    attach_eps_study, detect_coincidence, run_checks, time_derivative_residual, CheckName,
    CheckOutcome, VerificationReport, VerifyOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NON_CONVERGED: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

/// Coarse-over-fine ratio required of the time-derivative residual.
pub const RESIDUAL_RATIO_MIN: f64 = 1.3;
/// Allowed drift `max(r, 1/r)` of the gradient-estimate lhs between levels.
pub const LHS_RATIO_MAX: f64 = 1.1;
/// Coarse-over-fine ratio required of the integration-by-parts mismatch.
pub const IBP_RATIO_MIN: f64 = 1.8;

/// A parsed scenario with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    pub extent: Vec<(f64, f64)>,
    pub nx: Vec<usize>,
    pub nt: usize,
    pub t_final: f64,
    pub p: f64,
    pub eps: f64,
    pub eps_list: Vec<f64>,
    pub obstacle: ObstacleId,
    pub obstacle_params: BTreeMap<String, f64>,
    pub step_tol: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub omega: f64,
    pub checks: BTreeSet<CheckName>,
    pub refine_levels: usize,
    pub cutoff_margin: f64,
    pub verify_margin: f64,
    pub tol_scale: f64,
}

const REQUIRED: [&str; 5] = ["grid.nx", "grid.nt", "grid.T", "obstacle.id", "p"];

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| Error::ScenarioLine {
        line,
        msg: format!("`{key}`: expected a number, got `{v}`"),
    })
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| Error::ScenarioLine {
        line,
        msg: format!("`{key}`: expected a non-negative integer, got `{v}`"),
    })
}

fn parse_list<T>(
    line: usize,
    key: &str,
    v: &str,
    f: fn(usize, &str, &str) -> Result<T>,
) -> Result<Vec<T>> {
    v.split(',').map(|s| f(line, key, s.trim())).collect()
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let mut raw: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, full) in text.lines().enumerate() {
            let line = i + 1;
            let content = full.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| Error::ScenarioLine {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(Error::ScenarioLine {
                    line,
                    msg: "empty key or value".into(),
                });
            }
            if raw.insert(k.to_string(), (line, v.to_string())).is_some() {
                return Err(Error::ScenarioLine {
                    line,
                    msg: format!("duplicate key `{k}`"),
                });
            }
        }
        for key in REQUIRED {
            if !raw.contains_key(key) {
                return Err(Error::Scenario(format!("missing required key `{key}`")));
            }
        }

        let mut sc = Scenario {
            name: "unnamed".into(),
            dim: 1,
            extent: Vec::new(),
            nx: Vec::new(),
            nt: 0,
            t_final: 0.0,
            p: 0.0,
            eps: 0.0,
            eps_list: Vec::new(),
            obstacle: ObstacleId::Constant,
            obstacle_params: BTreeMap::new(),
            step_tol: None,
            max_sweeps: None,
            omega: 1.0,
            checks: CheckName::ALL.iter().copied().collect(),
            refine_levels: 1,
            cutoff_margin: 0.1,
            verify_margin: 0.1,
            tol_scale: 1.0,
        };
        let mut extent_flat: Option<(usize, Vec<f64>)> = None;
        for (key, (line, v)) in &raw {
            let (line, v) = (*line, v.as_str());
            match key.as_str() {
                "scenario.name" => sc.name = v.to_string(),
                "grid.dim" => sc.dim = parse_usize(line, key, v)?,
                "grid.extent" => extent_flat = Some((line, parse_list(line, key, v, parse_f64)?)),
                "grid.nx" => sc.nx = parse_list(line, key, v, parse_usize)?,
                "grid.nt" => sc.nt = parse_usize(line, key, v)?,
                "grid.T" => sc.t_final = parse_f64(line, key, v)?,
                "p" => sc.p = parse_f64(line, key, v)?,
                "eps" => sc.eps = parse_f64(line, key, v)?,
                "eps_list" => sc.eps_list = parse_list(line, key, v, parse_f64)?,
                "obstacle.id" => {
                    sc.obstacle = v.parse().map_err(|e: Error| Error::ScenarioLine {
                        line,
                        msg: e.to_string(),
                    })?
                }
                "solver.step_tol" => sc.step_tol = Some(parse_f64(line, key, v)?),
                "solver.max_sweeps" => sc.max_sweeps = Some(parse_usize(line, key, v)?),
                "solver.omega" => sc.omega = parse_f64(line, key, v)?,
                "refine.levels" => sc.refine_levels = parse_usize(line, key, v)?,
                "cutoff.margin" => sc.cutoff_margin = parse_f64(line, key, v)?,
                "verify.margin" => sc.verify_margin = parse_f64(line, key, v)?,
                "verify.tol_scale" => sc.tol_scale = parse_f64(line, key, v)?,
                other => {
                    if let Some(name) = other.strip_prefix("obstacle.") {
                        sc.obstacle_params
                            .insert(name.to_string(), parse_f64(line, key, v)?);
                    } else if let Some(name) = other.strip_prefix("checks.") {
                        let check: CheckName =
                            name.parse().map_err(|e: Error| Error::ScenarioLine {
                                line,
                                msg: e.to_string(),
                            })?;
                        match v {
                            "on" => {
                                sc.checks.insert(check);
                            }
                            "off" => {
                                sc.checks.remove(&check);
                            }
                            _ => {
                                return Err(Error::ScenarioLine {
                                    line,
                                    msg: format!("`{key}` must be on or off, got `{v}`"),
                                })
                            }
                        }
                    } else {
                        return Err(Error::ScenarioLine {
                            line,
                            msg: format!("unknown key `{other}`"),
                        });
                    }
                }
            }
        }
        if sc.dim != 1 && sc.dim != 2 {
            return Err(Error::Scenario(format!(
                "grid.dim must be 1 or 2, got {}",
                sc.dim
            )));
        }
        sc.extent = match extent_flat {
            None => vec![(0.0, 1.0); sc.dim],
            Some((line, v)) => {
                if v.len() != 2 * sc.dim {
                    return Err(Error::ScenarioLine {
                        line,
                        msg: format!("grid.extent needs {} numbers", 2 * sc.dim),
                    });
                }
                v.chunks(2).map(|c| (c[0], c[1])).collect()
            }
        };
        if sc.refine_levels == 0 {
            return Err(Error::Scenario("refine.levels must be >= 1".into()));
        }
        if !(sc.tol_scale >= 0.0) {
            return Err(Error::Scenario("verify.tol_scale must be >= 0".into()));
        }
        if let Some(line) = raw.get("obstacle.id").map(|e| e.0) {
            catalog::resolve_params(sc.obstacle, &sc.obstacle_params).map_err(|e| {
                Error::ScenarioLine {
                    line,
                    msg: e.to_string(),
                }
            })?;
        }
        // surface grid and parameter errors at parse time
        sc.grid()?;
        sc.solver_config()?;
        Ok(sc)
    }

    pub fn from_file(path: &Path) -> Result<Scenario> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Scenario::parse(&text)
    }

    pub fn grid(&self) -> Result<Grid> {
        build_grid(self.dim, &self.extent, &self.nx, self.t_final, self.nt)
    }

    pub fn obstacle(&self, grid: &Grid) -> Result<Obstacle> {
        catalog::build(self.obstacle, &self.obstacle_params, grid)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let mut c = SolverConfig::new(PParams::new(self.p, self.eps)?);
        c.step_tol = self.step_tol;
        c.max_sweeps = self.max_sweeps;
        c.omega = self.omega;
        c.validate()?;
        Ok(c)
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            enabled: self.checks.clone(),
            margin: self.verify_margin,
            cutoff_margin: self.cutoff_margin,
            tol_scale: self.tol_scale,
            tol_xi: None,
        }
    }

    /// All settings, defaults included, as `key = value` lines.
    pub fn echo(&self) -> String {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = String::new();
        let _ = writeln!(s, "scenario.name = {}", self.name);
        let _ = writeln!(s, "grid.dim = {}", self.dim);
        let ext: Vec<f64> = self.extent.iter().flat_map(|(a, b)| [*a, *b]).collect();
        let _ = writeln!(s, "grid.extent = {}", list(&ext));
        let nx: Vec<String> = self.nx.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "grid.nx = {}", nx.join(","));
        let _ = writeln!(s, "grid.nt = {}", self.nt);
        let _ = writeln!(s, "grid.T = {:?}", self.t_final);
        let _ = writeln!(s, "p = {:?}", self.p);
        let _ = writeln!(s, "eps = {:?}", self.eps);
        if !self.eps_list.is_empty() {
            let _ = writeln!(s, "eps_list = {}", list(&self.eps_list));
        }
        let _ = writeln!(s, "obstacle.id = {}", self.obstacle);
        if let Ok(params) = catalog::resolve_params(self.obstacle, &self.obstacle_params) {
            for (k, v) in params {
                let _ = writeln!(s, "obstacle.{k} = {v:?}");
            }
        }
        match self.step_tol {
            Some(t) => {
                let _ = writeln!(s, "solver.step_tol = {t:?}");
            }
            None => {
                let _ = writeln!(s, "solver.step_tol = default");
            }
        }
        match self.max_sweeps {
            Some(m) => {
                let _ = writeln!(s, "solver.max_sweeps = {m}");
            }
            None => {
                let _ = writeln!(s, "solver.max_sweeps = default");
            }
        }
        let _ = writeln!(s, "solver.omega = {:?}", self.omega);
        for c in CheckName::ALL {
            let on = if self.checks.contains(&c) {
                "on"
            } else {
                "off"
            };
            let _ = writeln!(s, "checks.{c} = {on}");
        }
        let _ = writeln!(s, "refine.levels = {}", self.refine_levels);
        let _ = writeln!(s, "cutoff.margin = {:?}", self.cutoff_margin);
        let _ = writeln!(s, "verify.margin = {:?}", self.verify_margin);
        let _ = writeln!(s, "verify.tol_scale = {:?}", self.tol_scale);
        s
    }
}

/// Writes the manifest first and rewrites it with the inventory at the end.
struct Manifest {
    dir: PathBuf,
    command: &'static str,
    scenario: String,
    outputs: Vec<String>,
    sections: Vec<String>,
    start: Instant,
}

impl Manifest {
    fn create(dir: &Path, command: &'static str, scenario: &Scenario) -> Result<Manifest> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let m = Manifest {
            dir: dir.to_path_buf(),
            command,
            scenario: scenario.echo(),
            outputs: vec!["manifest.txt".into()],
            sections: Vec::new(),
            start: Instant::now(),
        };
        m.flush(None)?;
        Ok(m)
    }

    fn flush(&self, status: Option<&str>) -> Result<()> {
        let mut s = format!(
            "tool = pobst {}\ncommand = {}\n\n[scenario]\n{}",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.scenario
        );
        match status {
            Some(st) => {
                let _ = write!(
                    s,
                    "\n[run]\nstatus = {st}\nwall_time_s = {:.3}\n",
                    self.start.elapsed().as_secs_f64()
                );
            }
            None => s.push_str("\n[run]\nstatus = running\n"),
        }
        for sec in &self.sections {
            s.push('\n');
            s.push_str(sec);
        }
        s.push_str("\n[outputs]\n");
        for o in &self.outputs {
            let _ = writeln!(s, "{o}");
        }
        fs::write(self.dir.join("manifest.txt"), s)?;
        Ok(())
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.outputs.push(name.to_string());
        Ok(())
    }
}

fn solver_section(results: &[SolveResult]) -> String {
    let mut s = String::from("[solver]\n");
    for (level, r) in results.iter().enumerate() {
        let _ = writeln!(
            s,
            "level {level}: nx = {:?} nt = {} step_tol = {:e} max_sweeps = {} total_sweeps = {} converged = {}",
            r.grid().nx(),
            r.grid().nt(),
            r.step_tol(),
            r.max_sweeps(),
            r.total_sweeps(),
            r.converged()
        );
    }
    s
}

fn report_input_error(e: &Error) -> i32 {
    eprintln!("error: {e}");
    EXIT_INPUT
}

fn load(path: &Path) -> std::result::Result<(Scenario, Grid, Obstacle, SolverConfig), i32> {
    let sc = Scenario::from_file(path).map_err(|e| report_input_error(&e))?;
    let grid = sc.grid().map_err(|e| report_input_error(&e))?;
    let ob = sc.obstacle(&grid).map_err(|e| report_input_error(&e))?;
    let cfg = sc.solver_config().map_err(|e| report_input_error(&e))?;
    Ok((sc, grid, ob, cfg))
}

macro_rules! tryx {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return report_input_error(&e),
        }
    };
}

/// Solve the scenario and write `trajectory.csv` and `manifest.txt`.
pub fn cmd_solve(scenario: &Path, out: &Path) -> i32 {
    let (sc, grid, ob, cfg) = match load(scenario) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let mut manifest = tryx!(Manifest::create(out, "solve", &sc));
    let result = tryx!(solve(&grid, &ob, &cfg));
    let mut csv = Vec::new();
    tryx!(result.write_trajectory(&mut csv));
    tryx!(manifest.write("trajectory.csv", &csv));
    manifest
        .sections
        .push(solver_section(std::slice::from_ref(&result)));
    manifest
        .sections
        .push(format!("[steps]\n{}", result.diagnostics_text()));
    let converged = result.converged();
    let status = if converged { "ok" } else { "NON_CONVERGED" };
    tryx!(manifest.flush(Some(status)));
    if converged {
        println!(
            "solve: ok ({} steps, {} sweeps)",
            result.steps().len(),
            result.total_sweeps()
        );
        EXIT_OK
    } else {
        eprintln!("solve: NON_CONVERGED (max_sweeps exhausted)");
        EXIT_NON_CONVERGED
    }
}

fn merge_levels(name: &str, reports: &[VerificationReport], levels: usize) -> VerificationReport {
    let finest = reports.last().expect("at least one level");
    let mut merged = VerificationReport {
        scenario: name.to_string(),
        meta: finest.meta.clone(),
        checks: Vec::new(),
    };
    merged.meta.push(("levels".into(), levels.to_string()));
    for c in &finest.checks {
        let mut out: CheckOutcome = c.clone();
        if reports.len() > 1 {
            out.extras.clear();
            for (l, r) in reports.iter().enumerate() {
                if let Some(rc) = r.get(c.name) {
                    out.extras.push((format!("level{l}.value"), rc.value));
                    out.extras
                        .push((format!("level{l}.tolerance"), rc.tolerance));
                    out.passed &= rc.passed;
                }
            }
            out.extras.extend(c.extras.iter().cloned());
        }
        merged.checks.push(out);
    }
    merged
}

/// Solve every refinement level, run the enabled checks on each, add the ε
/// study if requested, and write `report.txt` / `report.kv`.
pub fn cmd_verify(scenario: &Path, out: &Path) -> i32 {
    let (sc, grid, ob, cfg) = match load(scenario) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let mut manifest = tryx!(Manifest::create(out, "verify", &sc));
    let opts = sc.verify_options();
    let results = tryx!(solve_levels(&grid, &ob, &cfg, sc.refine_levels));
    let mut reports = Vec::with_capacity(results.len());
    for r in &results {
        reports.push(tryx!(run_checks(&sc.name, r, &ob, &opts)));
    }
    let mut report = merge_levels(&sc.name, &reports, results.len());
    let mut eps_ok = true;
    if opts.enabled.contains(&CheckName::EpsConvergence) {
        if sc.eps_list.is_empty() {
            let mut c = CheckOutcome::new(
                CheckName::EpsConvergence,
                0.0,
                0.0,
                crate::verification::Bound::AtMost,
            );
            c.note = Some("no eps_list given; study not run".into());
            report.push(c);
        } else {
            let study = tryx!(eps_convergence_study(&grid, &ob, &cfg, &sc.eps_list));
            eps_ok = study.reference_converged && study.rows.iter().all(|r| r.converged);
            let mut csv = Vec::new();
            tryx!(study.write_csv(&mut csv));
            tryx!(manifest.write("eps_convergence.csv", &csv));
            attach_eps_study(&mut report, &study);
        }
    }
    if opts.enabled.contains(&CheckName::TimeDerivative) {
        let finest = results.last().expect("at least one level");
        let mask = detect_coincidence(finest, None);
        let r = tryx!(time_derivative_residual(finest, &ob, &mask, opts.margin));
        let mut csv = Vec::new();
        tryx!(crate::fields::write_csv(
            &mut csv,
            &[("residual", &r.field)]
        ));
        tryx!(manifest.write("time_derivative_residual.csv", &csv));
    }
    tryx!(manifest.write("report.txt", report.to_text().as_bytes()));
    tryx!(manifest.write("report.kv", report.to_kv().as_bytes()));
    manifest.sections.push(solver_section(&results));
    let converged = eps_ok && results.iter().all(|r| r.converged());
    let code = if !converged {
        EXIT_NON_CONVERGED
    } else if !report.passed() {
        EXIT_VERIFY_FAILED
    } else {
        EXIT_OK
    };
    let status = match code {
        EXIT_OK => "pass",
        EXIT_NON_CONVERGED => "NON_CONVERGED",
        _ => "fail",
    };
    tryx!(manifest.flush(Some(status)));
    print!("{}", report.to_text());
    code
}

/// ε study and/or refinement study with their monotonicity and ratio contracts.
pub fn cmd_convergence(scenario: &Path, out: &Path) -> i32 {
    let (sc, grid, ob, cfg) = match load(scenario) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if sc.eps_list.is_empty() && sc.refine_levels < 2 {
        return report_input_error(&Error::Scenario(
            "convergence needs eps_list or refine.levels >= 2".into(),
        ));
    }
    let mut manifest = tryx!(Manifest::create(out, "convergence", &sc));
    let mut summary = String::new();
    let mut pass = true;
    let mut converged = true;
    if !sc.eps_list.is_empty() {
        let study = tryx!(eps_convergence_study(&grid, &ob, &cfg, &sc.eps_list));
        converged &= study.reference_converged && study.rows.iter().all(|r| r.converged);
        let mut csv = Vec::new();
        tryx!(study.write_csv(&mut csv));
        tryx!(manifest.write("eps_convergence.csv", &csv));
        let v = study.violations();
        let _ = writeln!(
            summary,
            "eps_convergence {}  failed drops = {}",
            if v.is_empty() { "PASS" } else { "FAIL" },
            v.len()
        );
        pass &= v.is_empty();
    }
    if sc.refine_levels >= 2 {
        let results = tryx!(solve_levels(&grid, &ob, &cfg, sc.refine_levels));
        converged &= results.iter().all(|r| r.converged());
        let study = tryx!(study_from_results(
            &results,
            &ob,
            sc.verify_margin,
            sc.cutoff_margin
        ));
        let mut csv = Vec::new();
        tryx!(study.write_csv(&mut csv));
        tryx!(manifest.write("refinement.csv", &csv));
        let mut contract = |name: &str, values: Vec<f64>, ok: &dyn Fn(f64) -> bool, rule: &str| {
            let good = values.iter().all(|&v| ok(v));
            pass &= good;
            let vals: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
            let _ = writeln!(
                summary,
                "{name} {}  ratios = [{}]  ({rule})",
                if good { "PASS" } else { "FAIL" },
                vals.join(", ")
            );
        };
        contract(
            "time_derivative_refinement",
            study.residual_ratios(),
            &|r| r >= RESIDUAL_RATIO_MIN,
            "coarse/fine >= 1.3",
        );
        contract(
            "gradient_lhs_refinement",
            study.lhs_ratios(),
            &|r| r.max(1.0 / r) <= LHS_RATIO_MAX,
            "fine/coarse within 1.1",
        );
        contract(
            "ibp_refinement",
            study.ibp_ratios(),
            &|r| r >= IBP_RATIO_MIN,
            "coarse/fine >= 1.8",
        );
        manifest.sections.push(solver_section(&results));
    }
    let _ = writeln!(summary, "overall: {}", if pass { "PASS" } else { "FAIL" });
    tryx!(manifest.write("convergence.txt", summary.as_bytes()));
    let code = if !converged {
        EXIT_NON_CONVERGED
    } else if pass {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    };
    tryx!(manifest.flush(Some(if code == EXIT_OK { "pass" } else { "fail" })));
    print!("{summary}");
    code
}

/// Run the three inequality suites and print the worst slack of each.
pub fn cmd_ineq(trials: usize, seed: u64, debug_swap: bool) -> i32 {
    let reports = tryx!(ineq::run_all(trials, seed, debug_swap));
    let mut ok = true;
    for r in &reports {
        ok &= r.passed();
        println!(
            "{:<13} trials = {}  violations = {}  worst relative slack = {:e}",
            r.suite.name(),
            r.trials,
            r.violations,
            r.worst_relative_slack
        );
    }
    if ok {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "grid.nx = 9\ngrid.nt = 5\ngrid.T = 1\nobstacle.id = constant\np = 3\n";

    #[test]
    fn defaults_filled() {
        let sc = Scenario::parse(BASE).unwrap();
        assert_eq!(sc.dim, 1);
        assert_eq!(sc.extent, vec![(0.0, 1.0)]);
        assert_eq!(sc.refine_levels, 1);
        assert_eq!(sc.checks.len(), CheckName::ALL.len());
    }

    #[test]
    fn unknown_key_names_line() {
        let text = format!("{BASE}# comment\n\nbogus.key = 1\n");
        match Scenario::parse(&text) {
            Err(Error::ScenarioLine { line, msg }) => {
                assert_eq!(line, 8);
                assert!(msg.contains("bogus.key"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_required_key_named() {
        let text = BASE.replace("grid.nx = 9\n", "");
        let err = Scenario::parse(&text).unwrap_err();
        assert!(err.to_string().contains("grid.nx"), "{err}");
    }

    #[test]
    fn checks_and_lists() {
        let text = format!(
            "{BASE}checks.vi = off\neps_list = 0.2, 0.1\nobstacle.value = 2\ngrid.dim = 2\ngrid.extent = 0,1,0,2\n"
        );
        let sc = Scenario::parse(&text).unwrap();
        assert!(!sc.checks.contains(&CheckName::Vi));
        assert_eq!(sc.eps_list, vec![0.2, 0.1]);
        assert_eq!(sc.obstacle_params["value"], 2.0);
        assert_eq!(sc.extent, vec![(0.0, 1.0), (0.0, 2.0)]);
        assert!(Scenario::parse(&format!("{BASE}checks.vi = maybe\n")).is_err());
        assert!(Scenario::parse(&format!("{BASE}obstacle.height = 1\n")).is_err());
        assert!(Scenario::parse(&format!("{BASE}p = 4\n")).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let sc =
            Scenario::parse(&format!("{BASE}eps_list = 0.1\nsolver.step_tol = 1e-9\n")).unwrap();
        let echoed: String = sc
            .echo()
            .lines()
            .filter(|l| !l.ends_with("= default"))
            .map(|l| format!("{l}\n"))
            .collect();
        // echo fills in resolved obstacle defaults, so compare echoes
        let again = Scenario::parse(&echoed).unwrap();
        assert_eq!(again.echo(), sc.echo());
        assert_eq!(again.step_tol, sc.step_tol);
    }
}

//! A-posteriori checks of solved trajectories and the report they produce.
//!
//! Every check is a pure function of a [`SolveResult`] and the analytic
//! obstacle. [`run_checks`] evaluates the enabled single-run checks and
//! collects them into a [`VerificationReport`]; studies that need extra
//! solves live in [`eps_study`] and [`refinement`].

pub mod coincidence;
pub mod eps_study;
pub mod gradient_estimate;
pub mod refinement;
pub mod testfns;
pub mod time_derivative;
pub mod weak;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::bump_cutoff;
use crate::obstacle::Obstacle;
use crate::solver::SolveResult;

pub use coincidence::{default_tol_xi, detect_coincidence, CoincidenceMask};
pub use eps_study::{eps_convergence_study, EpsRow, EpsStudy};
pub use gradient_estimate::{gradient_estimate, GradientEstimate};
pub use refinement::{refinement_study, RefinementRow, RefinementStudy};
pub use testfns::{Bump, TestFunctionSet};
pub use time_derivative::{exact_p_laplacian, time_derivative_residual, TimeDerivativeResidual};
pub use weak::{ibp_identity, supersolution_test, vi_residual, vi_slack, IbpOutcome, ViOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckName {
    Constraint,
    Vi,
    Supersolution,
    TimeDerivative,
    GradientEstimate,
    IbpIdentity,
    Viscosity,
    EpsConvergence,
}

impl CheckName {
    pub const ALL: [CheckName; 8] = [
        CheckName::Constraint,
        CheckName::Vi,
        CheckName::Supersolution,
        CheckName::TimeDerivative,
        CheckName::GradientEstimate,
        CheckName::IbpIdentity,
        CheckName::Viscosity,
        CheckName::EpsConvergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckName::Constraint => "constraint",
            CheckName::Vi => "vi",
            CheckName::Supersolution => "supersolution",
            CheckName::TimeDerivative => "time_derivative",
            CheckName::GradientEstimate => "gradient_estimate",
            CheckName::IbpIdentity => "ibp_identity",
            CheckName::Viscosity => "viscosity",
            CheckName::EpsConvergence => "eps_convergence",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CheckName::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Scenario(format!("unknown check `{s}`")))
    }
}

/// How the measured value is compared with the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// `value ≥ −tolerance`.
    AtLeastMinus,
    /// `value ≤ tolerance`.
    AtMost,
    /// Only finiteness is required; the value is reported.
    Finite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: CheckName,
    pub value: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
    /// Supporting numbers, reported alongside.
    pub extras: Vec<(String, f64)>,
    pub note: Option<String>,
}

impl CheckOutcome {
    pub fn new(name: CheckName, value: f64, tolerance: f64, bound: Bound) -> Self {
        let passed = match bound {
            Bound::AtLeastMinus => value >= -tolerance,
            Bound::AtMost => value <= tolerance,
            Bound::Finite => value.is_finite(),
        };
        CheckOutcome {
            name,
            value,
            tolerance,
            bound,
            passed,
            extras: Vec::new(),
            note: None,
        }
    }

    fn extra(mut self, key: &str, v: f64) -> Self {
        self.extras.push((key.to_string(), v));
        self
    }

    fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub scenario: String,
    /// Grid and run metadata, in insertion order.
    pub meta: Vec<(String, String)>,
    pub checks: Vec<CheckOutcome>,
}

impl VerificationReport {
    pub fn new(scenario: &str, result: &SolveResult) -> Self {
        let g = result.grid();
        let join = |v: &[usize]| {
            v.iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join("x")
        };
        let meta = vec![
            ("obstacle".to_string(), result.obstacle_id().to_string()),
            ("dim".to_string(), g.dim().to_string()),
            ("nx".to_string(), join(g.nx())),
            ("nt".to_string(), g.nt().to_string()),
            ("T".to_string(), format!("{:?}", g.t_final())),
            ("h".to_string(), format!("{:?}", g.h_max())),
            ("tau".to_string(), format!("{:?}", g.tau())),
            ("p".to_string(), format!("{:?}", result.params().p())),
            ("eps".to_string(), format!("{:?}", result.eps())),
            ("step_tol".to_string(), format!("{:?}", result.step_tol())),
            (
                "solver_converged".to_string(),
                result.converged().to_string(),
            ),
        ];
        VerificationReport {
            scenario: scenario.to_string(),
            meta,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, outcome: CheckOutcome) {
        self.checks.retain(|c| c.name != outcome.name);
        self.checks.push(outcome);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failing(&self) -> Vec<CheckName> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }

    pub fn get(&self, name: CheckName) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("scenario: {}\n", self.scenario);
        for (k, v) in &self.meta {
            s.push_str(&format!("{k}: {v}\n"));
        }
        s.push('\n');
        for c in &self.checks {
            let rel = match c.bound {
                Bound::AtLeastMinus => ">= -",
                Bound::AtMost => "<= ",
                Bound::Finite => "finite; tol ",
            };
            s.push_str(&format!(
                "{:<18} {}  value = {:e}  ({}{:e})\n",
                c.name.name(),
                if c.passed { "PASS" } else { "FAIL" },
                c.value,
                rel,
                c.tolerance
            ));
            for (k, v) in &c.extras {
                s.push_str(&format!("    {k} = {v:e}\n"));
            }
            if let Some(n) = &c.note {
                s.push_str(&format!("    note: {n}\n"));
            }
        }
        s.push_str(&format!(
            "\noverall: {}\n",
            if self.passed() { "PASS" } else { "FAIL" }
        ));
        let failing = self.failing();
        if !failing.is_empty() {
            let names: Vec<&str> = failing.iter().map(|c| c.name()).collect();
            s.push_str(&format!("failing: {}\n", names.join(", ")));
        }
        s
    }

    /// `key = value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = format!("scenario = {}\n", self.scenario);
        for (k, v) in &self.meta {
            s.push_str(&format!("meta.{k} = {v}\n"));
        }
        for c in &self.checks {
            let n = c.name.name();
            s.push_str(&format!("check.{n}.pass = {}\n", c.passed));
            s.push_str(&format!("check.{n}.value = {:?}\n", c.value));
            s.push_str(&format!("check.{n}.tolerance = {:?}\n", c.tolerance));
            for (k, v) in &c.extras {
                s.push_str(&format!("check.{n}.{k} = {v:?}\n"));
            }
        }
        s.push_str(&format!("overall.pass = {}\n", self.passed()));
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub enabled: BTreeSet<CheckName>,
    /// Collar excluded from the time-derivative residual.
    pub margin: f64,
    pub cutoff_margin: f64,
    /// Multiplies every tolerance; 0 demands exact agreement.
    pub tol_scale: f64,
    /// `None`: [`default_tol_xi`].
    pub tol_xi: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            enabled: CheckName::ALL.iter().copied().collect(),
            margin: 0.1,
            cutoff_margin: 0.1,
            tol_scale: 1.0,
            tol_xi: None,
        }
    }
}

/// Relative time-derivative residual allowed in a single run.
pub const TIME_DERIVATIVE_REL_TOL: f64 = 0.25;
/// Constant in the `C (h + τ)` weak-form tolerances.
pub const WEAK_TOL_CONST: f64 = 10.0;

/// `10 (h + τ)(1 + ‖ψ_t‖_∞ + ‖Δ_p ψ‖_∞)` over the grid.
pub fn viscosity_tolerance(result: &SolveResult, obstacle: &Obstacle) -> f64 {
    let grid = result.grid();
    let mut sup_t = 0.0f64;
    let mut sup_lap = 0.0f64;
    for node in 0..grid.n_nodes() {
        let (k, s) = grid.split(node);
        let (x, t) = (grid.coords(s), grid.time(k));
        sup_t = sup_t.max(obstacle.psi_t(&x, t).abs());
        sup_lap = sup_lap.max(exact_p_laplacian(obstacle, &x, t, result.params()).abs());
    }
    WEAK_TOL_CONST * (grid.h_max() + grid.tau()) * (1.0 + sup_t + sup_lap)
}

/// `min (ψ_t − Δ_p ψ)` over interior nodes of `Ξ`; `None` if that set is empty.
pub fn viscosity_necessary_condition(
    result: &SolveResult,
    obstacle: &Obstacle,
    mask: &CoincidenceMask,
) -> Option<f64> {
    let grid = result.grid();
    let inner = mask.interior(grid);
    (0..grid.n_nodes())
        .filter(|&n| inner[n])
        .map(|node| {
            let (k, s) = grid.split(node);
            let (x, t) = (grid.coords(s), grid.time(k));
            obstacle.psi_t(&x, t) - exact_p_laplacian(obstacle, &x, t, result.params())
        })
        .reduce(f64::min)
}

/// `(min (u − ψ), max |u − ψ| on the parabolic boundary)`.
pub fn constraint_check(result: &SolveResult) -> Option<(f64, f64)> {
    let psi = result.psi()?;
    let grid = result.grid();
    let u = result.u().values();
    let mut min_gap = f64::INFINITY;
    let mut boundary = 0.0f64;
    for node in 0..grid.n_nodes() {
        let gap = u[node] - psi.values()[node];
        min_gap = min_gap.min(gap);
        let (k, s) = grid.split(node);
        if k == 0 || grid.is_lateral(s) {
            boundary = boundary.max(gap.abs());
        }
    }
    Some((min_gap, boundary))
}

/// Evaluate the enabled single-run checks. The ε study needs extra solves and
/// is attached separately with [`attach_eps_study`].
pub fn run_checks(
    scenario: &str,
    result: &SolveResult,
    obstacle: &Obstacle,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let grid = result.grid();
    let mut report = VerificationReport::new(scenario, result);
    let on = |c: CheckName| opts.enabled.contains(&c);
    let scale = opts.tol_scale;
    let weak_tol = WEAK_TOL_CONST * (grid.h_max() + grid.tau()) * scale;
    let mask = detect_coincidence(result, opts.tol_xi);
    report
        .meta
        .push(("tol_xi".into(), format!("{:?}", mask.tol_xi())));
    report
        .meta
        .push(("coincidence_nodes".into(), mask.count().to_string()));

    if on(CheckName::Constraint) {
        let outcome = match constraint_check(result) {
            Some((min_gap, boundary)) => {
                let mut c =
                    CheckOutcome::new(CheckName::Constraint, min_gap, 0.0, Bound::AtLeastMinus)
                        .extra("boundary_mismatch", boundary);
                c.passed &= boundary == 0.0;
                c
            }
            None => CheckOutcome::new(CheckName::Constraint, 0.0, 0.0, Bound::AtLeastMinus)
                .note("unconstrained run"),
        };
        report.push(outcome);
    }
    let needs_tests =
        on(CheckName::Vi) || on(CheckName::Supersolution) || on(CheckName::IbpIdentity);
    let tests = if needs_tests {
        Some(TestFunctionSet::with_signed(grid))
    } else {
        None
    };
    if on(CheckName::Vi) {
        let nonneg = TestFunctionSet::standard(grid);
        let vi = vi_residual(result, &nonneg)?;
        report.push(
            CheckOutcome::new(CheckName::Vi, vi.min_slack, weak_tol, Bound::AtLeastMinus)
                .extra("perturbations", vi.entries.len() as f64)
                .extra("skipped_negative", vi.skipped_negative as f64),
        );
    }
    if on(CheckName::Supersolution) {
        let v = supersolution_test(result, tests.as_ref().expect("built above"));
        report.push(CheckOutcome::new(
            CheckName::Supersolution,
            v,
            weak_tol,
            Bound::AtLeastMinus,
        ));
    }
    if on(CheckName::TimeDerivative) {
        let r = time_derivative_residual(result, obstacle, &mask, opts.margin)?;
        let denom = r.u_t_norm.max(r.lap_norm);
        let floor = 10.0 * result.step_tol() / grid.tau().min(grid.h_max().powi(2));
        let c = if denom <= floor {
            CheckOutcome::new(CheckName::TimeDerivative, r.norm, floor, Bound::AtMost)
                .note("u_t and the p-Laplacian vanish to solver tolerance; absolute bound")
        } else {
            CheckOutcome::new(
                CheckName::TimeDerivative,
                r.norm / denom,
                TIME_DERIVATIVE_REL_TOL * scale,
                Bound::AtMost,
            )
        };
        report.push(
            c.extra("residual_norm", r.norm)
                .extra("u_t_norm", r.u_t_norm)
                .extra("p_laplacian_norm", r.lap_norm),
        );
    }
    if on(CheckName::GradientEstimate) {
        let cutoff = bump_cutoff(grid, opts.cutoff_margin)?;
        let ge = gradient_estimate(result, obstacle, &cutoff);
        let mut c = CheckOutcome::new(
            CheckName::GradientEstimate,
            ge.ratio,
            f64::INFINITY,
            Bound::Finite,
        )
        .extra("lhs", ge.lhs);
        for (i, t) in ge.rhs_terms.iter().enumerate() {
            c = c.extra(&format!("rhs_term{}", i + 1), *t);
        }
        if !ge.p_in_range {
            c = c.note("p = 2: the bound is stated for p > 2");
        }
        report.push(c);
    }
    if on(CheckName::IbpIdentity) {
        let ibp = ibp_identity(result, tests.as_ref().expect("built above"));
        let tol = grid.h_max() * (1.0 + ibp.scale) * scale;
        report.push(
            CheckOutcome::new(CheckName::IbpIdentity, ibp.mismatch, tol, Bound::AtMost)
                .extra("scale", ibp.scale),
        );
    }
    if on(CheckName::Viscosity) {
        let tol = viscosity_tolerance(result, obstacle) * scale;
        let c = match viscosity_necessary_condition(result, obstacle, &mask) {
            Some(v) => CheckOutcome::new(CheckName::Viscosity, v, tol, Bound::AtLeastMinus),
            None => CheckOutcome::new(CheckName::Viscosity, 0.0, tol, Bound::AtLeastMinus)
                .note("coincidence set has no interior nodes"),
        };
        report.push(c);
    }
    Ok(report)
}

/// Add the ε-study outcome: the value is the number of failed drops.
pub fn attach_eps_study(report: &mut VerificationReport, study: &EpsStudy) {
    let fails = study.violations().len() as f64;
    let mut c = CheckOutcome::new(CheckName::EpsConvergence, fails, 0.0, Bound::AtMost)
        .extra("u_floor", study.u_floor)
        .extra("grad_floor", study.grad_floor);
    for r in &study.rows {
        c = c
            .extra(&format!("u_err[eps={}]", r.eps), r.u_err)
            .extra(&format!("grad_err[eps={}]", r.eps), r.grad_err);
    }
    c.passed &= study.reference_converged && study.rows.iter().all(|r| r.converged);
    report.push(c);
}

//! Implicit Euler time stepping for the (regularized) obstacle problem.
//!
//! Each step minimizes the convex functional
//! `E(v) + (h^n / 2τ) Σ (v − u_prev)²` over `v ≥ ψ(·, t_next)` with lateral
//! values fixed, which is the complementarity system
//! `v ≥ ψ`, `(v − u_prev)/τ − Δ_p v ≥ 0`, with equality where `v > ψ`.
//! The minimization is projected nonlinear Gauss–Seidel: every interior node
//! is relaxed in a fixed lexicographic order by a bracketed scalar Newton
//! solve and clamped to the obstacle. With `omega > 1` the update is
//! over-relaxed, and an over-relaxed value is kept only if it does not
//! increase the local energy.

use std::io::Write;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::fields::{write_csv, ScalarField};
use crate::geometry::Grid;
use crate::obstacle::Obstacle;
use crate::pflux::{flux_factor, phi, LocalTerm, PParams, Stencil};

/// Boundary and initial data `g(x, t)` for the parabolic boundary.
pub type DataFn<'a> = dyn Fn(&[f64], f64) -> f64 + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub params: PParams,
    /// `None`: `500 · max nx`.
    pub max_sweeps: Option<usize>,
    /// Complementarity residual tolerance; `None`: `1e−10 (1 + ‖ψ‖_∞)`.
    pub step_tol: Option<f64>,
    /// Relaxation factor in `(0, 2)`.
    pub omega: f64,
    pub sweep: SweepOrder,
    /// Track the step energy after every sweep and count increases.
    pub check_energy: bool,
}

impl SolverConfig {
    pub fn new(params: PParams) -> Self {
        SolverConfig {
            params,
            max_sweeps: None,
            step_tol: None,
            omega: 1.0,
            sweep: SweepOrder::Forward,
            check_energy: false,
        }
    }

    pub fn with_step_tol(mut self, tol: f64) -> Self {
        self.step_tol = Some(tol);
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        self.params = self.params.with_eps(eps)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.step_tol {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument(format!("step_tol = {t}, need > 0")));
            }
        }
        if self.max_sweeps == Some(0) {
            return Err(Error::InvalidArgument("max_sweeps must be >= 1".into()));
        }
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::InvalidArgument(format!(
                "omega = {}, need 0 < omega < 2",
                self.omega
            )));
        }
        Ok(())
    }

    pub fn resolved_step_tol(&self, data_sup: f64) -> f64 {
        self.step_tol.unwrap_or(1e-10 * (1.0 + data_sup))
    }

    pub fn resolved_max_sweeps(&self, grid: &Grid) -> usize {
        self.max_sweeps
            .unwrap_or_else(|| 500 * grid.nx().iter().copied().max().unwrap_or(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub sweeps: usize,
    /// Max natural complementarity residual of the returned slice.
    pub residual: f64,
    pub converged: bool,
    /// Sweeps after which the step energy went up (only with `check_energy`).
    pub energy_increases: usize,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub values: Vec<f64>,
    pub diag: StepDiagnostics,
}

/// A solved trajectory.
#[derive(Debug, Clone)]
pub struct SolveResult {
    u: ScalarField,
    psi: Option<ScalarField>,
    obstacle_id: String,
    config: SolverConfig,
    step_tol: f64,
    max_sweeps: usize,
    steps: Vec<StepDiagnostics>,
    wall_time: Duration,
}

impl SolveResult {
    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    /// Sampled obstacle; `None` for unconstrained solves.
    pub fn psi(&self) -> Option<&ScalarField> {
        self.psi.as_ref()
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn params(&self) -> &PParams {
        &self.config.params
    }

    pub fn eps(&self) -> f64 {
        self.config.params.eps()
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn obstacle_id(&self) -> &str {
        &self.obstacle_id
    }

    pub fn step_tol(&self) -> f64 {
        self.step_tol
    }

    pub fn max_sweeps(&self) -> usize {
        self.max_sweeps
    }

    /// Per-step diagnostics for levels `1..nt`.
    pub fn steps(&self) -> &[StepDiagnostics] {
        &self.steps
    }

    pub fn wall_time(&self) -> Duration {
        self.wall_time
    }

    pub fn converged(&self) -> bool {
        self.steps.iter().all(|s| s.converged)
    }

    pub fn total_sweeps(&self) -> usize {
        self.steps.iter().map(|s| s.sweeps).sum()
    }

    /// Trajectory CSV: `t, x[, y], u, psi`.
    pub fn write_trajectory<W: Write>(&self, out: &mut W) -> Result<()> {
        match &self.psi {
            Some(psi) => write_csv(out, &[("u", &self.u), ("psi", psi)]),
            None => write_csv(out, &[("u", &self.u)]),
        }
    }

    /// One line per step: `k sweeps residual converged`.
    pub fn diagnostics_text(&self) -> String {
        let mut s = String::new();
        for (i, d) in self.steps.iter().enumerate() {
            s.push_str(&format!(
                "step {} sweeps={} residual={:e} converged={}\n",
                i + 1,
                d.sweeps,
                d.residual,
                d.converged
            ));
        }
        s
    }
}

const MAX_NEWTON: usize = 80;
const JACOBIAN_FLOOR: f64 = 1e-12;

struct StepEngine<'a> {
    stencil: &'a Stencil,
    params: PParams,
    /// Regularization used only inside the Newton derivative.
    jac_params: PParams,
    tau: f64,
    omega: f64,
    tol: f64,
    max_sweeps: usize,
    order: Vec<usize>,
    check_energy: bool,
}

impl<'a> StepEngine<'a> {
    fn new(grid: &Grid, stencil: &'a Stencil, config: &SolverConfig, tol: f64) -> Self {
        let mut order = grid.interior_spatial();
        if config.sweep == SweepOrder::Backward {
            order.reverse();
        }
        let params = config.params;
        StepEngine {
            stencil,
            params,
            jac_params: PParams::new(params.p(), params.eps().max(JACOBIAN_FLOOR))
                .expect("validated parameters"),
            tau: grid.tau(),
            omega: config.omega,
            tol,
            max_sweeps: config.resolved_max_sweeps(grid),
            order,
            check_energy: config.check_energy,
        }
    }

    /// Residual `(v − a)/τ + β Σ A(g + dδ)·d` and its derivative at offset `δ`.
    #[inline]
    fn eval(&self, terms: &[LocalTerm], v0: f64, a: f64, delta: f64) -> (f64, f64) {
        let beta = self.stencil.beta();
        let p = self.params.p();
        let mut r = (v0 + delta - a) / self.tau;
        let mut dr = 1.0 / self.tau;
        for t in terms {
            let g = [t.g[0] + t.d[0] * delta, t.g[1] + t.d[1] * delta];
            let g2 = g[0] * g[0] + g[1] * g[1];
            let gd = g[0] * t.d[0] + g[1] * t.d[1];
            let dd = t.d[0] * t.d[0] + t.d[1] * t.d[1];
            r += beta * flux_factor(g2, &self.params) * gd;
            let ej = self.jac_params.eps();
            let sj = g2 + ej * ej;
            dr += beta * flux_factor(g2, &self.jac_params) * (dd + (p - 2.0) * gd * gd / sj);
        }
        (r, dr)
    }

    fn local_energy(&self, terms: &[LocalTerm], v0: f64, a: f64, delta: f64) -> f64 {
        let beta = self.stencil.beta();
        let mut e = (v0 + delta - a).powi(2) / (2.0 * self.tau);
        for t in terms {
            let g = [t.g[0] + t.d[0] * delta, t.g[1] + t.d[1] * delta];
            e += beta * phi(g[0] * g[0] + g[1] * g[1], &self.params);
        }
        e
    }

    /// Relax node `s`; returns the natural residual before the update.
    fn relax(&self, v: &mut [f64], s: usize, a: f64, lower: Option<f64>) -> f64 {
        let mut buf = [LocalTerm::default(); 12];
        let n = self.stencil.local_terms(v, s, &mut buf);
        let terms = &buf[..n];
        let v0 = v[s];
        let (r0, dr0) = self.eval(terms, v0, a, 0.0);
        let pre = match lower {
            Some(l) => (v0 - l).min(self.tau * r0).abs(),
            None => (self.tau * r0).abs(),
        };
        let lb = lower.map(|l| l - v0);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut d, mut r, mut dr) = (0.0, r0, dr0);
        for _ in 0..MAX_NEWTON {
            if r == 0.0 {
                break;
            }
            if r > 0.0 {
                hi = d;
            } else {
                lo = d;
            }
            if let Some(lb) = lb {
                if d <= lb && r >= 0.0 {
                    d = lb;
                    break;
                }
            }
            let mut dn = d - r / dr;
            if let Some(lb) = lb {
                dn = dn.max(lb);
            }
            if !(dn > lo && dn < hi) && lo.is_finite() && hi.is_finite() {
                dn = 0.5 * (lo + hi);
            }
            let step = dn - d;
            d = dn;
            if step.abs() <= 1e-15 * (1.0 + (v0 + d).abs()) {
                break;
            }
            let (rn, drn) = self.eval(terms, v0, a, d);
            r = rn;
            dr = drn;
        }
        let mut target = v0 + d;
        if self.omega != 1.0 {
            let mut over = v0 + self.omega * d;
            if let Some(l) = lower {
                over = over.max(l);
            }
            if self.local_energy(terms, v0, a, over - v0) <= self.local_energy(terms, v0, a, 0.0) {
                target = over;
            }
        }
        if let Some(l) = lower {
            target = target.max(l);
        }
        v[s] = target;
        pre
    }

    fn step_energy(&self, v: &[f64], prev: &[f64]) -> f64 {
        let mass_terms: Vec<f64> = self
            .order
            .iter()
            .map(|&s| self.stencil.mass() * (v[s] - prev[s]).powi(2) / (2.0 * self.tau))
            .collect();
        self.stencil.energy(v, &self.params) + crate::fields::pairwise_sum(&mass_terms)
    }

    /// Max natural residual over interior nodes.
    fn full_residual(&self, v: &[f64], prev: &[f64], lower: Option<&[f64]>) -> f64 {
        let lap = self.stencil.p_laplacian(v, &self.params);
        self.order
            .iter()
            .map(|&s| {
                let r = self.tau * ((v[s] - prev[s]) / self.tau - lap[s]);
                match lower {
                    Some(l) => (v[s] - l[s]).min(r).abs(),
                    None => r.abs(),
                }
            })
            .fold(0.0, f64::max)
    }

    fn run(&self, prev: &[f64], lower: Option<&[f64]>, lateral: &[f64]) -> StepOutcome {
        let mut v = prev.to_vec();
        for s in 0..v.len() {
            if !self.stencil.is_interior(s) {
                v[s] = lateral[s];
            } else if let Some(l) = lower {
                v[s] = v[s].max(l[s]);
            }
        }
        let mut diag = StepDiagnostics {
            sweeps: 0,
            residual: f64::INFINITY,
            converged: false,
            energy_increases: 0,
        };
        if self.order.is_empty() {
            diag.residual = 0.0;
            diag.converged = true;
            return StepOutcome { values: v, diag };
        }
        let mut energy = if self.check_energy {
            self.step_energy(&v, prev)
        } else {
            0.0
        };
        for sweep in 1..=self.max_sweeps {
            let mut max_pre = 0.0f64;
            for &s in &self.order {
                let pre = self.relax(&mut v, s, prev[s], lower.map(|l| l[s]));
                max_pre = max_pre.max(pre);
            }
            diag.sweeps = sweep;
            if self.check_energy {
                let e = self.step_energy(&v, prev);
                if e > energy + 1e-13 * energy.abs().max(1e-300) {
                    diag.energy_increases += 1;
                }
                energy = e;
            }
            if max_pre <= self.tol {
                let res = self.full_residual(&v, prev, lower);
                diag.residual = res;
                if res <= self.tol {
                    diag.converged = true;
                    break;
                }
            }
        }
        if !diag.converged {
            diag.residual = self.full_residual(&v, prev, lower);
        }
        StepOutcome { values: v, diag }
    }
}

fn sample_level(grid: &Grid, k: usize, f: &DataFn<'_>) -> Vec<f64> {
    let t = grid.time(k);
    (0..grid.n_space())
        .map(|s| {
            let x = grid.coords(s);
            f(&x[..grid.dim()], t)
        })
        .collect()
}

fn sup_over_grid(grid: &Grid, f: &DataFn<'_>) -> f64 {
    (0..grid.nt())
        .flat_map(|k| sample_level(grid, k, f))
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// One implicit Euler step for the obstacle problem from `u_prev` (level
/// `k_next − 1`) to level `k_next`; lateral values come from `ψ(·, t_next)`.
pub fn step_vi(
    grid: &Grid,
    obstacle: &Obstacle,
    config: &SolverConfig,
    u_prev: &[f64],
    k_next: usize,
) -> Result<StepOutcome> {
    config.validate()?;
    if u_prev.len() != grid.n_space() || k_next == 0 || k_next >= grid.nt() {
        return Err(Error::InvalidArgument(
            "step_vi: bad slice length or level".into(),
        ));
    }
    let psi = obstacle.sample_level(grid, k_next);
    let sup = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let stencil = Stencil::new(grid);
    let engine = StepEngine::new(grid, &stencil, config, config.resolved_step_tol(sup));
    Ok(engine.run(u_prev, Some(&psi), &psi))
}

fn march(
    grid: &Grid,
    config: &SolverConfig,
    data: &DataFn<'_>,
    obstacle: Option<&Obstacle>,
) -> Result<SolveResult> {
    config.validate()?;
    let start = Instant::now();
    let sup = match obstacle {
        Some(ob) => sup_over_grid(grid, &|x, t| ob.psi(x, t)),
        None => sup_over_grid(grid, data),
    };
    let tol = config.resolved_step_tol(sup);
    let stencil = Stencil::new(grid);
    let engine = StepEngine::new(grid, &stencil, config, tol);
    let mut levels = Vec::with_capacity(grid.nt());
    levels.push(sample_level(grid, 0, data));
    let mut steps = Vec::with_capacity(grid.nt() - 1);
    for k in 1..grid.nt() {
        let lateral = sample_level(grid, k, data);
        let lower = obstacle.map(|ob| ob.sample_level(grid, k));
        let out = engine.run(&levels[k - 1], lower.as_deref(), &lateral);
        steps.push(out.diag);
        levels.push(out.values);
    }
    let u = ScalarField::from_levels(grid, &levels)?;
    Ok(SolveResult {
        u,
        psi: obstacle.map(|ob| ob.sample(grid)),
        obstacle_id: obstacle.map_or_else(|| "none".to_string(), |ob| ob.id().to_string()),
        config: config.clone(),
        step_tol: tol,
        max_sweeps: config.resolved_max_sweeps(grid),
        steps,
        wall_time: start.elapsed(),
    })
}

/// Solve the obstacle problem with data `ψ` on the parabolic boundary.
pub fn solve(grid: &Grid, obstacle: &Obstacle, config: &SolverConfig) -> Result<SolveResult> {
    march(grid, config, &|x, t| obstacle.psi(x, t), Some(obstacle))
}

/// Solve the obstacle problem with separate parabolic-boundary data `g ≥ ψ`.
pub fn solve_with_data(
    grid: &Grid,
    obstacle: &Obstacle,
    data: &DataFn<'_>,
    config: &SolverConfig,
) -> Result<SolveResult> {
    for k in 0..grid.nt() {
        let t = grid.time(k);
        for s in 0..grid.n_space() {
            if k == 0 || grid.is_lateral(s) {
                let x = grid.coords(s);
                let x = &x[..grid.dim()];
                if data(x, t) < obstacle.psi(x, t) {
                    return Err(Error::InvalidArgument(format!(
                        "boundary data below the obstacle at x={x:?}, t={t}"
                    )));
                }
            }
        }
    }
    march(grid, config, data, Some(obstacle))
}

/// The same stepping without the constraint.
pub fn solve_unconstrained(
    grid: &Grid,
    data: &DataFn<'_>,
    config: &SolverConfig,
) -> Result<SolveResult> {
    march(grid, config, data, None)
}

/// True iff `u_a ≤ u_b + tol` at every node, `tol` the larger step tolerance.
pub fn comparison_check(a: &SolveResult, b: &SolveResult) -> Result<bool> {
    if !a.grid().compatible(b.grid()) {
        return Err(Error::IncompatibleGrids("comparison_check".into()));
    }
    let tol = a.step_tol.max(b.step_tol);
    Ok(a.u
        .values()
        .iter()
        .zip(b.u.values())
        .all(|(ua, ub)| *ua <= ub + tol))
}

//! Grid-refinement study: the same problem on `(h, τ)`, `(h/2, τ/2)`, ...

use std::io::Write;

use crate::error::Result;
use crate::geometry::{bump_cutoff, Grid};
use crate::obstacle::Obstacle;
use crate::solver::{solve, SolveResult, SolverConfig};

use super::coincidence::detect_coincidence;
use super::gradient_estimate::gradient_estimate;
use super::testfns::TestFunctionSet;
use super::time_derivative::time_derivative_residual;
use super::weak::ibp_identity;

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementRow {
    pub level: usize,
    pub h: f64,
    pub tau: f64,
    pub time_derivative_residual: f64,
    pub u_t_norm: f64,
    pub gradient_lhs: f64,
    pub gradient_ratio: f64,
    pub ibp_mismatch: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementStudy {
    pub rows: Vec<RefinementRow>,
}

fn ratios(rows: &[RefinementRow], f: impl Fn(&RefinementRow) -> f64) -> Vec<f64> {
    rows.windows(2).map(|w| f(&w[0]) / f(&w[1])).collect()
}

impl RefinementStudy {
    /// Coarse-over-fine ratios of the time-derivative residual.
    pub fn residual_ratios(&self) -> Vec<f64> {
        ratios(&self.rows, |r| r.time_derivative_residual)
    }

    /// Fine-over-coarse ratios of the gradient-estimate lhs.
    pub fn lhs_ratios(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| w[1].gradient_lhs / w[0].gradient_lhs)
            .collect()
    }

    /// Coarse-over-fine ratios of the integration-by-parts mismatch.
    pub fn ibp_ratios(&self) -> Vec<f64> {
        ratios(&self.rows, |r| r.ibp_mismatch)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(
            out,
            "level,h,tau,time_derivative_residual,u_t_norm,gradient_lhs,gradient_ratio,ibp_mismatch"
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                r.level,
                r.h,
                r.tau,
                r.time_derivative_residual,
                r.u_t_norm,
                r.gradient_lhs,
                r.gradient_ratio,
                r.ibp_mismatch
            )?;
        }
        Ok(())
    }
}

/// Solve on `base` and its `levels − 1` refinements, concurrently.
pub fn solve_levels(
    base: &Grid,
    obstacle: &Obstacle,
    config: &SolverConfig,
    levels: usize,
) -> Result<Vec<SolveResult>> {
    let grids: Vec<Grid> = (0..levels).map(|l| base.refined(l)).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = grids
            .iter()
            .map(|g| scope.spawn(move || solve(g, obstacle, config)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    })
}

/// Tabulate the refinement metrics for already solved levels.
pub fn study_from_results(
    results: &[SolveResult],
    obstacle: &Obstacle,
    margin: f64,
    cutoff_margin: f64,
) -> Result<RefinementStudy> {
    let mut rows = Vec::with_capacity(results.len());
    for (level, r) in results.iter().enumerate() {
        let grid = r.grid();
        let mask = detect_coincidence(r, None);
        let td = time_derivative_residual(r, obstacle, &mask, margin)?;
        let ge = gradient_estimate(r, obstacle, &bump_cutoff(grid, cutoff_margin)?);
        let ibp = ibp_identity(r, &TestFunctionSet::with_signed(grid));
        rows.push(RefinementRow {
            level,
            h: grid.h_max(),
            tau: grid.tau(),
            time_derivative_residual: td.norm,
            u_t_norm: td.u_t_norm,
            gradient_lhs: ge.lhs,
            gradient_ratio: ge.ratio,
            ibp_mismatch: ibp.mismatch,
            converged: r.converged(),
        });
    }
    Ok(RefinementStudy { rows })
}

/// Solve and tabulate in one go.
pub fn refinement_study(
    base: &Grid,
    obstacle: &Obstacle,
    config: &SolverConfig,
    levels: usize,
    margin: f64,
    cutoff_margin: f64,
) -> Result<(RefinementStudy, Vec<SolveResult>)> {
    let results = solve_levels(base, obstacle, config, levels)?;
    let study = study_from_results(&results, obstacle, margin, cutoff_margin)?;
    Ok((study, results))
}

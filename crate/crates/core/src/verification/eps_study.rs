//! Convergence of the regularized solutions `u^ε → u` as `ε ↓ 0`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fields::{gradient_field, lq_norm, ScalarField, Weight};
use crate::geometry::Grid;
use crate::obstacle::Obstacle;
use crate::solver::{solve, SolveResult, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct EpsRow {
    pub eps: f64,
    /// `‖u^ε − u‖_{L^p(Ω_T)}`.
    pub u_err: f64,
    /// `‖ |∇u^ε − ∇u| ‖_{L^p(Ω_T)}`.
    pub grad_err: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsStudy {
    pub rows: Vec<EpsRow>,
    /// Values below these count as zero: `10 · step_tol` and `10 · step_tol / h`.
    pub u_floor: f64,
    pub grad_floor: f64,
    pub reference_converged: bool,
}

/// Minimum relative drop between consecutive rows above the floor.
pub const MIN_DROP: f64 = 0.05;

impl EpsStudy {
    /// True iff each column drops by at least [`MIN_DROP`] from row to row
    /// until it is within its floor.
    pub fn decreasing(&self) -> bool {
        self.violations().is_empty()
    }

    /// `(column, row)` pairs where the drop fails.
    pub fn violations(&self) -> Vec<(&'static str, usize)> {
        let mut out = Vec::new();
        for i in 1..self.rows.len() {
            let (a, b) = (&self.rows[i - 1], &self.rows[i]);
            if b.u_err > self.u_floor
                && a.u_err > self.u_floor
                && b.u_err > (1.0 - MIN_DROP) * a.u_err
            {
                out.push(("u", i));
            }
            if b.grad_err > self.grad_floor
                && a.grad_err > self.grad_floor
                && b.grad_err > (1.0 - MIN_DROP) * a.grad_err
            {
                out.push(("grad", i));
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "eps,u_err,grad_err")?;
        for r in &self.rows {
            writeln!(out, "{:?},{:?},{:?}", r.eps, r.u_err, r.grad_err)?;
        }
        Ok(())
    }
}

fn grad_diff_norm(a: &ScalarField, b: &ScalarField, p: f64) -> Result<f64> {
    let ga = gradient_field(a);
    let gb = gradient_field(b);
    let d = a.grid().dim();
    let vals: Vec<f64> = ga
        .values()
        .chunks(d)
        .zip(gb.values().chunks(d))
        .map(|(x, y)| {
            x.iter()
                .zip(y)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    lq_norm(&ScalarField::new(a.grid(), vals)?, p, Weight::Unit, None)
}

/// Error norms of `u^ε` against an `ε = 0` reference.
pub fn compare_to_reference(reference: &SolveResult, others: &[SolveResult]) -> Result<EpsStudy> {
    let p = reference.params().p();
    let h = reference.grid().h_max();
    let mut rows = Vec::with_capacity(others.len());
    for r in others {
        let diff = r.u().sub(reference.u())?;
        rows.push(EpsRow {
            eps: r.eps(),
            u_err: lq_norm(&diff, p, Weight::Unit, None)?,
            grad_err: grad_diff_norm(r.u(), reference.u(), p)?,
            converged: r.converged(),
        });
    }
    let tol = reference.step_tol();
    Ok(EpsStudy {
        rows,
        u_floor: 10.0 * tol,
        grad_floor: 10.0 * tol / h,
        reference_converged: reference.converged(),
    })
}

/// Solve for every `ε` in `eps_list` (descending) and for `ε = 0`,
/// concurrently, and tabulate the errors.
pub fn eps_convergence_study(
    grid: &Grid,
    obstacle: &Obstacle,
    config: &SolverConfig,
    eps_list: &[f64],
) -> Result<EpsStudy> {
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "eps_list must be strictly descending".into(),
        ));
    }
    let mut all = vec![0.0];
    all.extend_from_slice(eps_list);
    let configs = all
        .iter()
        .map(|&e| config.clone().with_eps(e))
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<SolveResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || solve(grid, obstacle, c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    let mut results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let reference = results.remove(0);
    compare_to_reference(&reference, &results)
}

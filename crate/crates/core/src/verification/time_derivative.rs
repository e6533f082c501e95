//! The formula `u_t = Δ_p u + (ψ_t − Δ_p ψ) χ_Ξ` checked on the grid.

use crate::error::{Error, Result};
use crate::fields::{lq_norm, time_diff, ScalarField, Weight};
use crate::geometry::Grid;
use crate::obstacle::Obstacle;
use crate::pflux::PParams;
use crate::solver::SolveResult;

use super::coincidence::CoincidenceMask;
use super::weak::discrete_p_laplacian;

/// Exact `div A_ε(∇ψ)` from the analytic derivatives; for `ε = 0` and `p > 2`
/// it is taken as 0 where `∇ψ = 0`.
pub fn exact_p_laplacian(obstacle: &Obstacle, x: &[f64], t: f64, params: &PParams) -> f64 {
    let (p, eps) = (params.p(), params.eps());
    if eps == 0.0 {
        return obstacle.p_laplacian(x, t, p);
    }
    let d = obstacle.dim();
    let g = obstacle.grad_psi(x, t);
    let hs = obstacle.hess_psi(x, t);
    let lap: f64 = (0..d).map(|i| hs[i * d + i]).sum();
    let mut quad = 0.0;
    for i in 0..d {
        for j in 0..d {
            quad += g[i] * hs[i * d + j] * g[j];
        }
    }
    let s = g[..d].iter().map(|v| v * v).sum::<f64>() + eps * eps;
    s.powf(0.5 * (p - 2.0)) * (lap + (p - 2.0) * quad / s)
}

/// Nodes at distance `≥ margin` from the lateral boundary with
/// `margin ≤ t ≤ T − margin`.
pub fn interior_region(grid: &Grid, margin: f64) -> Result<Vec<bool>> {
    if !(margin > 0.0) || 2.0 * margin >= grid.t_final() {
        return Err(Error::InvalidArgument(format!(
            "interior margin {margin} out of range"
        )));
    }
    let slack = 1e-9 * grid.h_max().min(grid.tau());
    Ok((0..grid.n_nodes())
        .map(|node| {
            let (k, s) = grid.split(node);
            let t = grid.time(k);
            grid.boundary_distance(s) >= margin - slack
                && t >= margin - slack
                && t <= grid.t_final() - margin + slack
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct TimeDerivativeResidual {
    /// `L^{p/(p−1)}` norm of the residual on the region.
    pub norm: f64,
    /// Same norm of `u_t` (central differences).
    pub u_t_norm: f64,
    /// Same norm of `Δ_p^h u`.
    pub lap_norm: f64,
    pub field: ScalarField,
}

/// Residual `r = u_t − [Δ_p^h u + (ψ_t − Δ_p ψ) χ_Ξ]` with central time
/// differences, measured on [`interior_region`].
pub fn time_derivative_residual(
    result: &SolveResult,
    obstacle: &Obstacle,
    mask: &CoincidenceMask,
    margin: f64,
) -> Result<TimeDerivativeResidual> {
    let grid = result.grid();
    let params = result.params();
    let region = interior_region(grid, margin)?;
    let u_t = time_diff(result.u())?;
    let lap = discrete_p_laplacian(result.u().values(), grid, params);
    let values: Vec<f64> = (0..grid.n_nodes())
        .map(|node| {
            let mut rhs = lap[node];
            if mask.mask()[node] {
                let (k, s) = grid.split(node);
                let (x, t) = (grid.coords(s), grid.time(k));
                rhs += obstacle.psi_t(&x, t) - exact_p_laplacian(obstacle, &x, t, params);
            }
            u_t.values()[node] - rhs
        })
        .collect();
    let field = ScalarField::new(grid, values)?;
    let q = params.conjugate();
    let norm = lq_norm(&field, q, Weight::Unit, Some(&region))?;
    let u_t_norm = lq_norm(&u_t, q, Weight::Unit, Some(&region))?;
    let lap_norm = lq_norm(
        &ScalarField::new(grid, lap)?,
        q,
        Weight::Unit,
        Some(&region),
    )?;
    Ok(TimeDerivativeResidual {
        norm,
        u_t_norm,
        lap_norm,
        field,
    })
}

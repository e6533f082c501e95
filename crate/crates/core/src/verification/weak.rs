//! Weak-form checks against the test-function family: the variational
//! inequality, the supersolution inequality and integration by parts.

use crate::error::Result;
use crate::fields::{gradient_field, integrate, time_diff, Weight};
use crate::geometry::Grid;
use crate::pflux::{flux_factor, PParams, Stencil};
use crate::solver::SolveResult;

use super::testfns::{Bump, SampledBump, TestFunctionSet};

/// Nodal flux `A_ε(∇u)` from central gradients, interleaved.
pub fn nodal_flux(result: &SolveResult) -> Vec<f64> {
    let d = result.grid().dim();
    let grad = gradient_field(result.u());
    let params = result.params();
    let mut out = grad.values().to_vec();
    for g in out.chunks_mut(d) {
        let g2: f64 = g.iter().map(|v| v * v).sum();
        let f = flux_factor(g2, params);
        g.iter_mut().for_each(|v| *v *= f);
    }
    out
}

fn flux_dot(grid: &Grid, flux: &[f64], b: &SampledBump) -> f64 {
    let d = grid.dim();
    let vals: Vec<f64> = (0..grid.n_nodes())
        .map(|n| (0..d).map(|a| flux[n * d + a] * b.grad[n * d + a]).sum())
        .collect();
    integrate(grid, &vals, Weight::Unit, None)
}

fn product(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let vals: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    integrate(grid, &vals, Weight::Unit, None)
}

/// Per-member slacks of the variational inequality for `φ̃ = u + sφ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViOutcome {
    pub min_slack: f64,
    /// `(member, s, slack)` for every evaluated perturbation.
    pub entries: Vec<(usize, f64, f64)>,
    /// Members without an admissible negative perturbation.
    pub skipped_negative: usize,
}

/// Smallest admissible negative step below which a direction is skipped.
const MIN_STEP: f64 = 1e-12;

/// Slack of the variational inequality for `φ̃ = u + s φ`.
pub fn vi_slack(result: &SolveResult, bump: &Bump, s: f64) -> Result<f64> {
    let grid = result.grid();
    let sb = bump.sample(grid);
    let u_t = time_diff(result.u())?;
    let first = flux_dot(grid, &nodal_flux(result), &sb) + product(grid, &sb.phi, u_t.values());
    let second = product(grid, &sb.phi, &sb.phi_t);
    Ok(s * first + s * s * second)
}

/// Discrete variational inequality with `φ̃ = u + sφ_j`. `s = 1` is always
/// admissible; `s = −min(1, min (u − ψ)/φ_j)` keeps `φ̃ ≥ ψ`. The slack is
/// `s ∬(⟨A(∇u), ∇φ⟩ + φ u_t) + s² ∬ φ φ_t` (the final-time term vanishes).
pub fn vi_residual(result: &SolveResult, set: &TestFunctionSet) -> Result<ViOutcome> {
    let grid = result.grid();
    let flux = nodal_flux(result);
    let u_t = time_diff(result.u())?;
    let u = result.u().values();
    let mut entries = Vec::new();
    let mut skipped = 0;
    for (j, b) in set.members.iter().enumerate() {
        let sb = b.sample(grid);
        let first = flux_dot(grid, &flux, &sb) + product(grid, &sb.phi, u_t.values());
        let second = product(grid, &sb.phi, &sb.phi_t);
        let room = match result.psi() {
            Some(psi) => sb
                .phi
                .iter()
                .zip(u.iter().zip(psi.values()))
                .filter(|(phi, _)| **phi > 0.0)
                .map(|(phi, (u, p))| (u - p) / phi)
                .fold(1.0f64, f64::min),
            None => 1.0,
        };
        entries.push((j, 1.0, first + second));
        if room > MIN_STEP {
            let s = -room;
            entries.push((j, s, s * first + s * s * second));
        } else {
            skipped += 1;
        }
    }
    let min_slack = entries.iter().map(|e| e.2).fold(f64::INFINITY, f64::min);
    Ok(ViOutcome {
        min_slack,
        entries,
        skipped_negative: skipped,
    })
}

/// `min_j ∬ ⟨A(∇u), ∇φ_j⟩ − u ∂_t φ_j` over nonnegative members.
pub fn supersolution_test(result: &SolveResult, set: &TestFunctionSet) -> f64 {
    let grid = result.grid();
    let flux = nodal_flux(result);
    set.members
        .iter()
        .filter(|b| !b.signed)
        .map(|b| {
            let sb = b.sample(grid);
            flux_dot(grid, &flux, &sb) - product(grid, result.u().values(), &sb.phi_t)
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpOutcome {
    /// `max_j |∬ φ_j Δ_p u + ∬ ⟨A(∇u), ∇φ_j⟩|`.
    pub mismatch: f64,
    /// `max_j |∬ ⟨A(∇u), ∇φ_j⟩|`, the size of the terms that cancel.
    pub scale: f64,
}

/// Integration by parts of the discrete p-Laplacian against every member.
pub fn ibp_identity(result: &SolveResult, set: &TestFunctionSet) -> IbpOutcome {
    let grid = result.grid();
    let flux = nodal_flux(result);
    let lap = discrete_p_laplacian(result.u().values(), grid, result.params());
    let mut out = IbpOutcome {
        mismatch: 0.0,
        scale: 0.0,
    };
    for b in &set.members {
        let sb = b.sample(grid);
        let fd = flux_dot(grid, &flux, &sb);
        let m = (product(grid, &sb.phi, &lap) + fd).abs();
        out.mismatch = out.mismatch.max(m);
        out.scale = out.scale.max(fd.abs());
    }
    out
}

/// Staggered `Δ_p^h` at every time level.
pub fn discrete_p_laplacian(u: &[f64], grid: &Grid, params: &PParams) -> Vec<f64> {
    let stencil = Stencil::new(grid);
    let n = grid.n_space();
    let mut out = Vec::with_capacity(u.len());
    for k in 0..grid.nt() {
        out.extend(stencil.p_laplacian(&u[k * n..(k + 1) * n], params));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use crate::solver::{solve_unconstrained, SolverConfig};

    fn stationary(n: usize, data: &(dyn Fn(&[f64], f64) -> f64 + Sync)) -> SolveResult {
        let g = build_grid(1, &[(0.0, 1.0)], &[n], 1.0, n / 2 + 1).unwrap();
        let cfg = SolverConfig::new(PParams::new(3.0, 0.0).unwrap()).with_step_tol(1e-13);
        solve_unconstrained(&g, data, &cfg).unwrap()
    }

    #[test]
    fn zero_and_constant_states() {
        let r = stationary(33, &|_, _| 0.0);
        let set = TestFunctionSet::with_signed(r.grid());
        assert_eq!(supersolution_test(&r, &set), 0.0);
        assert_eq!(ibp_identity(&r, &set).mismatch, 0.0);

        // −0.7 ∬ φ_t vanishes up to quadrature
        let r = stationary(129, &|_, _| 0.7);
        let v = supersolution_test(&r, &TestFunctionSet::standard(r.grid()));
        assert!(v.abs() < 1e-4, "{v}");
    }

    #[test]
    fn zero_state_vi_slack_is_quadrature_error() {
        // slack reduces to s² ∬ φ φ_t = s²/2 ∬ ∂_t φ², zero up to quadrature
        let slack = |n| {
            let r = stationary(n, &|_, _| 0.0);
            vi_residual(&r, &TestFunctionSet::with_signed(r.grid()))
                .unwrap()
                .min_slack
        };
        let (coarse, fine) = (slack(33), slack(129));
        assert!(fine.abs() < 1e-5, "{fine}");
        assert!(coarse.abs() > 4.0 * fine.abs(), "{coarse} {fine}");
    }

    #[test]
    fn affine_state_integrates_by_parts() {
        let mismatch = |n| {
            let r = stationary(n, &|x, _| 2.0 * x[0] - 0.3);
            let lap = discrete_p_laplacian(r.u().values(), r.grid(), r.params());
            assert!(lap.iter().all(|v| v.abs() < 1e-9));
            ibp_identity(&r, &TestFunctionSet::with_signed(r.grid())).mismatch
        };
        // only the quadrature of ∬ ∇φ remains
        let (coarse, fine) = (mismatch(33), mismatch(129));
        assert!(fine < 1e-4, "{fine}");
        assert!(coarse > 4.0 * fine, "{coarse} {fine}");
    }
}

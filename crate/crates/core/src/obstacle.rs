//! Obstacles with analytic derivatives.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::geometry::Grid;

/// An obstacle `ψ(x, t)` together with the derivatives the checks need.
///
/// Slices `x`, `grad` and `hess` have length `dim` and `dim * dim` (row-major).
pub trait ObstacleModel: Send + Sync {
    fn id(&self) -> &str;
    fn psi(&self, x: &[f64], t: f64) -> f64;
    fn psi_t(&self, x: &[f64], t: f64) -> f64;
    fn grad_psi(&self, x: &[f64], t: f64, grad: &mut [f64]);
    fn hess_psi(&self, x: &[f64], t: f64, hess: &mut [f64]);
    /// `∇ψ_t`.
    fn grad_psi_t(&self, x: &[f64], t: f64, grad: &mut [f64]);
}

/// A self-checked obstacle model bound to a spatial dimension.
#[derive(Clone)]
pub struct Obstacle {
    model: Arc<dyn ObstacleModel>,
    dim: usize,
    analytic: bool,
}

impl fmt::Debug for Obstacle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Obstacle")
            .field("id", &self.model.id())
            .field("dim", &self.dim)
            .finish()
    }
}

const PROBES: usize = 24;
const FD_STEP: f64 = 1e-4;
const FD_TOL: f64 = 1e-4;

impl Obstacle {
    /// Wrap `model` after probing its derivatives against central differences at
    /// seeded random points of the grid's space-time box.
    pub fn new(model: Arc<dyn ObstacleModel>, grid: &Grid) -> Result<Self> {
        let ob = Obstacle {
            model,
            dim: grid.dim(),
            analytic: true,
        };
        ob.self_check(grid)?;
        Ok(ob)
    }

    pub fn id(&self) -> &str {
        self.model.id()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    pub fn psi(&self, x: &[f64], t: f64) -> f64 {
        self.model.psi(&x[..self.dim], t)
    }

    pub fn psi_t(&self, x: &[f64], t: f64) -> f64 {
        self.model.psi_t(&x[..self.dim], t)
    }

    pub fn grad_psi(&self, x: &[f64], t: f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        self.model.grad_psi(&x[..self.dim], t, &mut g[..self.dim]);
        g
    }

    pub fn grad_psi_t(&self, x: &[f64], t: f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        self.model.grad_psi_t(&x[..self.dim], t, &mut g[..self.dim]);
        g
    }

    /// Hessian, row-major `[ψ_xx, ψ_xy, ψ_yx, ψ_yy]` (only `[0]` used in 1D).
    pub fn hess_psi(&self, x: &[f64], t: f64) -> [f64; 4] {
        let mut h = [0.0; 4];
        let d = self.dim;
        self.model.hess_psi(&x[..d], t, &mut h[..d * d]);
        h
    }

    /// `|D²ψ| = (Σ ψ_{x_i x_j}²)^{1/2}`.
    pub fn hess_norm(&self, x: &[f64], t: f64) -> f64 {
        let d = self.dim;
        self.hess_psi(x, t)[..d * d]
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Exact `Δ_p ψ = |∇ψ|^{p−2}(Δψ + (p−2)⟨D²ψ ∇ψ, ∇ψ⟩/|∇ψ|²)`, taken as 0
    /// where `∇ψ = 0` and `p > 2`.
    pub fn p_laplacian(&self, x: &[f64], t: f64, p: f64) -> f64 {
        let d = self.dim;
        let g = self.grad_psi(x, t);
        let hs = self.hess_psi(x, t);
        let lap: f64 = (0..d).map(|i| hs[i * d + i]).sum();
        if p == 2.0 {
            return lap;
        }
        let g2: f64 = g[..d].iter().map(|v| v * v).sum();
        if g2 == 0.0 {
            return 0.0;
        }
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += g[i] * hs[i * d + j] * g[j];
            }
        }
        g2.powf(0.5 * (p - 2.0)) * (lap + (p - 2.0) * quad / g2)
    }

    /// `ψ` sampled at every node.
    pub fn sample(&self, grid: &Grid) -> ScalarField {
        ScalarField::from_fn(grid, |x, t| self.psi(x, t)).expect("obstacle values must be finite")
    }

    /// `ψ(·, t_k)` at every spatial node.
    pub fn sample_level(&self, grid: &Grid, k: usize) -> Vec<f64> {
        let t = grid.time(k);
        (0..grid.n_space())
            .map(|s| self.psi(&grid.coords(s), t))
            .collect()
    }

    fn self_check(&self, grid: &Grid) -> Result<()> {
        let d = self.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0b57);
        let fail = |what: &str, x: &[f64], t: f64, a: f64, b: f64| Error::ObstacleCheck {
            id: self.id().to_string(),
            detail: format!("{what} at x={x:?}, t={t}: analytic {a}, finite difference {b}"),
        };
        let close = |a: f64, b: f64| (a - b).abs() <= FD_TOL * (1.0 + a.abs().max(b.abs()));
        for _ in 0..PROBES {
            let mut x = [0.0; 2];
            for a in 0..d {
                x[a] = rng.random_range(grid.lower()[a]..=grid.upper()[a]);
            }
            let t = rng.random_range(0.0..=grid.t_final());
            let x = &x[..d];
            let v = self.psi(x, t);
            if !v.is_finite() {
                return Err(fail("psi", x, t, v, v));
            }
            let fd_t = (self.psi(x, t + FD_STEP) - self.psi(x, t - FD_STEP)) / (2.0 * FD_STEP);
            let at = self.psi_t(x, t);
            if !close(at, fd_t) {
                return Err(fail("psi_t", x, t, at, fd_t));
            }
            let grad = self.grad_psi(x, t);
            let hess = self.hess_psi(x, t);
            let gt = self.grad_psi_t(x, t);
            let gp = self.grad_psi(x, t + FD_STEP);
            let gm = self.grad_psi(x, t - FD_STEP);
            for i in 0..d {
                let fd = (gp[i] - gm[i]) / (2.0 * FD_STEP);
                if !close(gt[i], fd) {
                    return Err(fail("grad_psi_t", x, t, gt[i], fd));
                }
                let mut xp = [0.0; 2];
                let mut xm = [0.0; 2];
                xp[..d].copy_from_slice(x);
                xm[..d].copy_from_slice(x);
                xp[i] += FD_STEP;
                xm[i] -= FD_STEP;
                let fd = (self.psi(&xp, t) - self.psi(&xm, t)) / (2.0 * FD_STEP);
                if !close(grad[i], fd) {
                    return Err(fail("grad_psi", x, t, grad[i], fd));
                }
                let gxp = self.grad_psi(&xp, t);
                let gxm = self.grad_psi(&xm, t);
                for j in 0..d {
                    let fd = (gxp[j] - gxm[j]) / (2.0 * FD_STEP);
                    if !close(hess[i * d + j], fd) {
                        return Err(fail("hess_psi", x, t, hess[i * d + j], fd));
                    }
                }
            }
        }
        Ok(())
    }
}

//! The coincidence set `Ξ = {u = ψ}` on the grid.

use crate::geometry::Grid;
use crate::solver::SolveResult;

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceMask {
    mask: Vec<bool>,
    tol_xi: f64,
}

impl CoincidenceMask {
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn tol_xi(&self) -> f64 {
        self.tol_xi
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Nodes off `Ξ` that are spatially interior and have `t > 0`.
    pub fn complement_interior(&self, grid: &Grid) -> Vec<bool> {
        (0..grid.n_nodes())
            .map(|node| {
                let (k, s) = grid.split(node);
                !self.mask[node] && k > 0 && !grid.is_lateral(s)
            })
            .collect()
    }

    /// Nodes of `Ξ` that are spatially interior and have `t > 0`.
    pub fn interior(&self, grid: &Grid) -> Vec<bool> {
        (0..grid.n_nodes())
            .map(|node| {
                let (k, s) = grid.split(node);
                self.mask[node] && k > 0 && !grid.is_lateral(s)
            })
            .collect()
    }
}

/// Default detection tolerance: ten times the step tolerance. Projection puts
/// contact nodes exactly on `ψ`, so only solver noise needs absorbing.
pub fn default_tol_xi(result: &SolveResult) -> f64 {
    10.0 * result.step_tol()
}

/// Flag nodes with `u − ψ ≤ tol_xi` (`None`: [`default_tol_xi`]).
/// Unconstrained results give an empty mask.
pub fn detect_coincidence(result: &SolveResult, tol_xi: Option<f64>) -> CoincidenceMask {
    let tol_xi = tol_xi.unwrap_or_else(|| default_tol_xi(result));
    let mask = match result.psi() {
        Some(psi) => result
            .u()
            .values()
            .iter()
            .zip(psi.values())
            .map(|(u, p)| u - p <= tol_xi)
            .collect(),
        None => vec![false; result.grid().n_nodes()],
    };
    CoincidenceMask { mask, tol_xi }
}

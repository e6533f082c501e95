//! Weighted difference quotients of `F = |∇u|^{(p−2)/2} ∇u` against the
//! a-priori bound built from `u`, `ψ` and the cutoff.

use crate::fields::{gradient_field, integrate, integrate_space, Weight};
use crate::geometry::Cutoff;
use crate::obstacle::Obstacle;
use crate::pflux::f_map;
use crate::solver::SolveResult;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    /// `∬ ζ^p |D_h F|²`.
    pub lhs: f64,
    /// `∬(ζ^p + |∇ζ|^p)|∇u|^p`, `∬ ζ^p |∇u|²`, `∬ |∇ζ|^p |∇ψ|^p`,
    /// `∬ ζ^p (|D²ψ|^p + |∇ψ_t|²)`, `∫ ζ^p |∇ψ(·, T)|²`.
    pub rhs_terms: [f64; 5],
    /// `lhs / Σ rhs_terms`, 0 when both vanish.
    pub ratio: f64,
    /// The bound is stated for `p > 2`; false flags a run outside that range.
    pub p_in_range: bool,
}

/// `D_h F` uses forward and backward quotients along every axis, averaged in
/// square: `Σ_i ½(|F(x + h e_i) − F(x)|² + |F(x) − F(x − h e_i)|²)/h_i²`.
/// Nodes whose neighbour falls outside the grid lie in the cutoff's zero
/// collar and contribute nothing.
pub fn gradient_estimate(
    result: &SolveResult,
    obstacle: &Obstacle,
    cutoff: &Cutoff,
) -> GradientEstimate {
    let grid = result.grid();
    let d = grid.dim();
    let p = result.params().p();
    let n = grid.n_space();
    let zeta: Vec<f64> = cutoff.sample(grid).iter().map(|z| z.powf(p)).collect();
    let dzeta: Vec<f64> = cutoff
        .sample_grad_norm(grid)
        .iter()
        .map(|z| z.powf(p))
        .collect();

    let grad = gradient_field(result.u());
    let mut fvals = vec![0.0; grid.n_nodes() * d];
    for node in 0..grid.n_nodes() {
        let f = f_map(grad.at(node), p);
        fvals[node * d..node * d + d].copy_from_slice(&f);
    }
    let dist2 = |a: usize, b: usize| -> f64 {
        (0..d)
            .map(|c| (fvals[a * d + c] - fvals[b * d + c]).powi(2))
            .sum()
    };
    let dq: Vec<f64> = (0..grid.n_nodes())
        .map(|node| {
            let s = node % n;
            if zeta[s] == 0.0 {
                return 0.0;
            }
            let idx = grid.axis_indices(s);
            let mut total = 0.0;
            for a in 0..d {
                let stride = if a == 0 { 1 } else { grid.nx()[0] };
                let h2 = grid.h()[a] * grid.h()[a];
                let mut acc = 0.0;
                if idx[a] + 1 < grid.nx()[a] {
                    acc += 0.5 * dist2(node + stride, node);
                }
                if idx[a] > 0 {
                    acc += 0.5 * dist2(node, node - stride);
                }
                total += acc / h2;
            }
            total
        })
        .collect();
    let lhs = integrate(grid, &dq, Weight::Spatial(&zeta), None);

    let grad_norm2: Vec<f64> = grad
        .values()
        .chunks(d)
        .map(|g| g.iter().map(|v| v * v).sum())
        .collect();
    let w1: Vec<f64> = zeta.iter().zip(&dzeta).map(|(a, b)| a + b).collect();
    let gp: Vec<f64> = grad_norm2.iter().map(|g2| g2.powf(0.5 * p)).collect();
    let t1 = integrate(grid, &gp, Weight::Spatial(&w1), None);
    let t2 = integrate(grid, &grad_norm2, Weight::Spatial(&zeta), None);

    let mut psi_gp = vec![0.0; grid.n_nodes()];
    let mut psi_second = vec![0.0; grid.n_nodes()];
    for (node, (gp_out, sec_out)) in psi_gp.iter_mut().zip(psi_second.iter_mut()).enumerate() {
        let (k, s) = grid.split(node);
        let (x, t) = (grid.coords(s), grid.time(k));
        let g = obstacle.grad_psi(&x, t);
        let gt = obstacle.grad_psi_t(&x, t);
        let g2: f64 = g[..d].iter().map(|v| v * v).sum();
        let gt2: f64 = gt[..d].iter().map(|v| v * v).sum();
        *gp_out = g2.powf(0.5 * p);
        *sec_out = obstacle.hess_norm(&x, t).powf(p) + gt2;
    }
    let t3 = integrate(grid, &psi_gp, Weight::Spatial(&dzeta), None);
    let t4 = integrate(grid, &psi_second, Weight::Spatial(&zeta), None);
    let t_final = grid.t_final();
    let final_grad2: Vec<f64> = (0..n)
        .map(|s| {
            let g = obstacle.grad_psi(&grid.coords(s), t_final);
            g[..d].iter().map(|v| v * v).sum()
        })
        .collect();
    let t5 = integrate_space(grid, &final_grad2, Some(&zeta));

    let rhs_terms = [t1, t2, t3, t4, t5];
    let total: f64 = rhs_terms.iter().sum();
    let ratio = match (lhs == 0.0, total == 0.0) {
        (true, true) => 0.0,
        (false, true) => f64::INFINITY,
        _ => lhs / total,
    };
    GradientEstimate {
        lhs,
        rhs_terms,
        ratio,
        p_in_range: p > 2.0,
    }
}

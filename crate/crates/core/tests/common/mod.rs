#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use pobstacle::geometry::{build_grid, Grid};
use pobstacle::{Obstacle, ObstacleModel};

/// `ψ = c + m·x₀ + A sin(π x₀) e^{−r t}` on `[0, 1]`, constant in `x₁` if present.
#[derive(Debug, Clone, Copy)]
pub struct SineObstacle {
    pub c: f64,
    pub m: f64,
    pub a: f64,
    pub r: f64,
}

impl ObstacleModel for SineObstacle {
    fn id(&self) -> &str {
        "test-sine"
    }
    fn psi(&self, x: &[f64], t: f64) -> f64 {
        self.c + self.m * x[0] + self.a * (PI * x[0]).sin() * (-self.r * t).exp()
    }
    fn psi_t(&self, x: &[f64], t: f64) -> f64 {
        -self.r * self.a * (PI * x[0]).sin() * (-self.r * t).exp()
    }
    fn grad_psi(&self, x: &[f64], t: f64, g: &mut [f64]) {
        g.fill(0.0);
        g[0] = self.m + PI * self.a * (PI * x[0]).cos() * (-self.r * t).exp();
    }
    fn hess_psi(&self, x: &[f64], t: f64, h: &mut [f64]) {
        h.fill(0.0);
        h[0] = -PI * PI * self.a * (PI * x[0]).sin() * (-self.r * t).exp();
    }
    fn grad_psi_t(&self, x: &[f64], t: f64, g: &mut [f64]) {
        g.fill(0.0);
        g[0] = -self.r * PI * self.a * (PI * x[0]).cos() * (-self.r * t).exp();
    }
}

/// Stationary `1 − 10 (x − 1/2)²`, held at zero on the lateral boundary by
/// the data passed to the solver.
#[derive(Debug, Clone, Copy)]
pub struct Parabola;

impl ObstacleModel for Parabola {
    fn id(&self) -> &str {
        "test-parabola"
    }
    fn psi(&self, x: &[f64], _t: f64) -> f64 {
        1.0 - 10.0 * (x[0] - 0.5).powi(2)
    }
    fn psi_t(&self, _x: &[f64], _t: f64) -> f64 {
        0.0
    }
    fn grad_psi(&self, x: &[f64], _t: f64, g: &mut [f64]) {
        g[0] = -20.0 * (x[0] - 0.5);
    }
    fn hess_psi(&self, _x: &[f64], _t: f64, h: &mut [f64]) {
        h[0] = -20.0;
    }
    fn grad_psi_t(&self, _x: &[f64], _t: f64, g: &mut [f64]) {
        g[0] = 0.0;
    }
}

pub fn obstacle(model: impl ObstacleModel + 'static, grid: &Grid) -> Obstacle {
    Obstacle::new(Arc::new(model), grid).expect("analytic test obstacle")
}

pub fn grid_1d(nx: usize, nt: usize) -> Grid {
    build_grid(1, &[(0.0, 1.0)], &[nx], 1.0, nt).unwrap()
}

/// Tridiagonal solve `a_i x_{i−1} + b_i x_i + c_i x_{i+1} = d_i`.
pub fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Implicit Euler for `u_t = u_xx` on a 1D grid with Dirichlet data `g`,
/// every step a tridiagonal solve. Returns the levels concatenated.
pub fn implicit_heat(grid: &Grid, g: &dyn Fn(f64, f64) -> f64) -> Vec<f64> {
    let n = grid.nx()[0];
    let (h, tau) = (grid.h()[0], grid.tau());
    let xs: Vec<f64> = (0..n).map(|s| grid.coords(s)[0]).collect();
    let mut u: Vec<f64> = xs.iter().map(|&x| g(x, 0.0)).collect();
    let mut out = u.clone();
    let r = tau / (h * h);
    let m = n - 2;
    for k in 1..grid.nt() {
        let t = grid.time(k);
        let (left, right) = (g(xs[0], t), g(xs[n - 1], t));
        let a = vec![-r; m];
        let b = vec![1.0 + 2.0 * r; m];
        let c = vec![-r; m];
        let mut d: Vec<f64> = u[1..n - 1].to_vec();
        d[0] += r * left;
        d[m - 1] += r * right;
        let inner = thomas(&a, &b, &c, &d);
        u[0] = left;
        u[n - 1] = right;
        u[1..n - 1].copy_from_slice(&inner);
        out.extend_from_slice(&u);
    }
    out
}

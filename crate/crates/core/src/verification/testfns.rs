//! Compactly supported space-time test functions.

use crate::geometry::Grid;

/// `φ(x, t) = (1 − ρ²)³₊` with `ρ² = Σ ((z_i − c_i)/r_i)²` over `z = (t, x[, y])`,
/// optionally multiplied by `(x_0 − c_x)/r_x` to make it change sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    /// `(t, x, y)`.
    pub center: [f64; 3],
    pub radius: [f64; 3],
    pub dim: usize,
    pub signed: bool,
}

/// Values of one test function sampled on a grid.
#[derive(Debug, Clone)]
pub struct SampledBump {
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
    /// Interleaved spatial gradient, `dim` entries per node.
    pub grad: Vec<f64>,
}

impl Bump {
    /// `(φ, φ_t, ∇φ)` at `(x, t)`.
    pub fn eval(&self, x: &[f64], t: f64) -> (f64, f64, [f64; 2]) {
        let mut z = [0.0; 3];
        z[0] = (t - self.center[0]) / self.radius[0];
        for a in 0..self.dim {
            z[a + 1] = (x[a] - self.center[a + 1]) / self.radius[a + 1];
        }
        let rho2: f64 = z[..=self.dim].iter().map(|v| v * v).sum();
        if rho2 >= 1.0 {
            return (0.0, 0.0, [0.0; 2]);
        }
        let w = 1.0 - rho2;
        let b = w * w * w;
        // ∂b/∂z_i = −6 w² z_i / r_i
        let db = |i: usize| -6.0 * w * w * z[i] / self.radius[i];
        let (mut phi, mut phi_t) = (b, db(0));
        let mut grad = [0.0; 2];
        for a in 0..self.dim {
            grad[a] = db(a + 1);
        }
        if self.signed {
            let m = z[1];
            phi = b * m;
            phi_t *= m;
            for (a, g) in grad.iter_mut().enumerate().take(self.dim) {
                *g *= m;
                if a == 0 {
                    *g += b / self.radius[1];
                }
            }
        }
        (phi, phi_t, grad)
    }

    pub fn sample(&self, grid: &Grid) -> SampledBump {
        let d = grid.dim();
        let n = grid.n_nodes();
        let mut out = SampledBump {
            phi: vec![0.0; n],
            phi_t: vec![0.0; n],
            grad: vec![0.0; n * d],
        };
        for node in 0..n {
            let (k, s) = grid.split(node);
            let (v, vt, g) = self.eval(&grid.coords(s), grid.time(k));
            out.phi[node] = v;
            out.phi_t[node] = vt;
            out.grad[node * d..node * d + d].copy_from_slice(&g[..d]);
        }
        out
    }
}

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// A deterministic family of bumps whose supports stay inside the open
/// cylinder, away from the lateral walls, `t = 0` and `t = T`.
#[derive(Debug, Clone)]
pub struct TestFunctionSet {
    pub members: Vec<Bump>,
}

/// Radius as a fraction of each extent.
const RADIUS: f64 = 0.15;
/// Gap between a support and the boundary, as a fraction of each extent.
const GAP: f64 = 0.05;

impl TestFunctionSet {
    /// `count` bumps with centers on a Halton sequence.
    pub fn new(grid: &Grid, count: usize, signed: bool) -> Self {
        let d = grid.dim();
        let mut lo = [0.0; 3];
        let mut len = [grid.t_final(), 0.0, 0.0];
        for a in 0..d {
            lo[a + 1] = grid.lower()[a];
            len[a + 1] = grid.upper()[a] - grid.lower()[a];
        }
        let bases = [2usize, 3, 5];
        let members = (0..count)
            .map(|j| {
                let mut center = [0.0; 3];
                let mut radius = [1.0; 3];
                for i in 0..=d {
                    radius[i] = RADIUS * len[i];
                    let span = len[i] - 2.0 * (radius[i] + GAP * len[i]);
                    center[i] = lo[i] + radius[i] + GAP * len[i] + span * halton(j + 1, bases[i]);
                }
                Bump {
                    center,
                    radius,
                    dim: d,
                    signed,
                }
            })
            .collect();
        TestFunctionSet { members }
    }

    /// The 20 nonnegative bumps used by the weak-form checks.
    pub fn standard(grid: &Grid) -> Self {
        Self::new(grid, 20, false)
    }

    /// Nonnegative and sign-changing variants together.
    pub fn with_signed(grid: &Grid) -> Self {
        let mut set = Self::new(grid, 20, false);
        set.members.extend(Self::new(grid, 20, true).members);
        set
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

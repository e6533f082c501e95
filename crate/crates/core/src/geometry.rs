//! Uniform space-time grids on axis-aligned boxes.
//!
//! Nodes are ordered lexicographically in `(k, s)`: time level `k` is the slow
//! index and the spatial index `s` is `i + nx0 * j` (x fastest).

use crate::error::{Error, Result};

/// Uniform Cartesian grid on `Ω × [0, T]` with `Ω` a box in one or two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
    nx: [usize; 2],
    h: [f64; 2],
    t_final: f64,
    nt: usize,
    tau: f64,
}

/// Node classification with respect to the parabolic boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Interior,
    /// `t = 0`, or `x ∈ ∂Ω` at any time.
    ParabolicBoundary,
}

/// Build a grid. `extent` and `nx` must have one entry per spatial axis; a single
/// `nx` entry is broadcast to all axes.
pub fn build_grid(
    dim: usize,
    extent: &[(f64, f64)],
    nx: &[usize],
    t_final: f64,
    nt: usize,
) -> Result<Grid> {
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidGrid(format!(
            "dimension {dim} not supported (1 or 2)"
        )));
    }
    if extent.len() != dim {
        return Err(Error::InvalidGrid(format!(
            "expected {dim} extent intervals, got {}",
            extent.len()
        )));
    }
    let nx_full: Vec<usize> = match nx.len() {
        1 => vec![nx[0]; dim],
        n if n == dim => nx.to_vec(),
        n => {
            return Err(Error::InvalidGrid(format!(
                "expected 1 or {dim} node counts, got {n}"
            )))
        }
    };
    let mut g = Grid {
        dim,
        lower: [0.0; 2],
        upper: [0.0; 2],
        nx: [1; 2],
        h: [1.0; 2],
        t_final,
        nt,
        tau: 0.0,
    };
    for axis in 0..dim {
        let (a, b) = extent[axis];
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::InvalidGrid(format!(
                "degenerate extent [{a}, {b}] on axis {axis}"
            )));
        }
        if nx_full[axis] < 3 {
            return Err(Error::InvalidGrid(format!(
                "nx = {} on axis {axis}, need at least 3",
                nx_full[axis]
            )));
        }
        g.lower[axis] = a;
        g.upper[axis] = b;
        g.nx[axis] = nx_full[axis];
        g.h[axis] = (b - a) / (nx_full[axis] - 1) as f64;
    }
    if nt < 2 {
        return Err(Error::InvalidGrid(format!("nt = {nt}, need at least 2")));
    }
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "time horizon {t_final} must be positive"
        )));
    }
    g.tau = t_final / (nt - 1) as f64;
    Ok(g)
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per spatial axis (length `dim`).
    pub fn nx(&self) -> &[usize] {
        &self.nx[..self.dim]
    }

    pub fn h(&self) -> &[f64] {
        &self.h[..self.dim]
    }

    /// Largest spatial step.
    pub fn h_max(&self) -> f64 {
        self.h().iter().cloned().fold(0.0, f64::max)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper[..self.dim]
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Number of spatial nodes per time level.
    pub fn n_space(&self) -> usize {
        self.nx[0] * self.nx[1]
    }

    pub fn n_nodes(&self) -> usize {
        self.n_space() * self.nt
    }

    /// Volume of one spatial cell, `Π h_i`.
    pub fn cell_volume(&self) -> f64 {
        self.h().iter().product()
    }

    pub fn node(&self, k: usize, s: usize) -> usize {
        k * self.n_space() + s
    }

    /// Inverse of [`Grid::node`].
    pub fn split(&self, node: usize) -> (usize, usize) {
        (node / self.n_space(), node % self.n_space())
    }

    pub fn spatial_index(&self, idx: [usize; 2]) -> usize {
        idx[0] + self.nx[0] * idx[1]
    }

    /// Per-axis indices of spatial node `s` (unused axes are 0).
    pub fn axis_indices(&self, s: usize) -> [usize; 2] {
        [s % self.nx[0], s / self.nx[0]]
    }

    /// Coordinates of spatial node `s`; entries past `dim` are 0.
    pub fn coords(&self, s: usize) -> [f64; 2] {
        let idx = self.axis_indices(s);
        let mut x = [0.0; 2];
        for axis in 0..self.dim {
            x[axis] = if idx[axis] == self.nx[axis] - 1 {
                self.upper[axis]
            } else {
                self.lower[axis] + idx[axis] as f64 * self.h[axis]
            };
        }
        x
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.nt - 1 {
            self.t_final
        } else {
            k as f64 * self.tau
        }
    }

    /// True if spatial node `s` lies on `∂Ω`.
    pub fn is_lateral(&self, s: usize) -> bool {
        let idx = self.axis_indices(s);
        (0..self.dim).any(|a| idx[a] == 0 || idx[a] == self.nx[a] - 1)
    }

    /// Distance from spatial node `s` to `∂Ω` (max-norm, i.e. the minimum over axes).
    pub fn boundary_distance(&self, s: usize) -> f64 {
        let x = self.coords(s);
        (0..self.dim)
            .map(|a| (x[a] - self.lower[a]).min(self.upper[a] - x[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Interior spatial nodes in lexicographic order.
    pub fn interior_spatial(&self) -> Vec<usize> {
        (0..self.n_space())
            .filter(|&s| !self.is_lateral(s))
            .collect()
    }

    /// Refine by halving `h` and `tau` `level` times (node counts `2n − 1`).
    pub fn refined(&self, level: usize) -> Grid {
        let mut g = self.clone();
        for _ in 0..level {
            for axis in 0..g.dim {
                g.nx[axis] = 2 * g.nx[axis] - 1;
                g.h[axis] = (g.upper[axis] - g.lower[axis]) / (g.nx[axis] - 1) as f64;
            }
            g.nt = 2 * g.nt - 1;
            g.tau = g.t_final / (g.nt - 1) as f64;
        }
        g
    }

    /// Same box, node counts and time axis.
    pub fn compatible(&self, other: &Grid) -> bool {
        self == other
    }
}

/// Classify every node; depends only on the grid.
pub fn classify_boundary(grid: &Grid) -> Vec<NodeKind> {
    let mut out = Vec::with_capacity(grid.n_nodes());
    for k in 0..grid.nt() {
        for s in 0..grid.n_space() {
            out.push(if k == 0 || grid.is_lateral(s) {
                NodeKind::ParabolicBoundary
            } else {
                NodeKind::Interior
            });
        }
    }
    out
}

/// Quintic smoothstep `6r⁵ − 15r⁴ + 10r³` on `[0, 1]`.
fn smoothstep(r: f64) -> (f64, f64) {
    let r = r.clamp(0.0, 1.0);
    let s = (r * r * r * (10.0 + r * (-15.0 + 6.0 * r))).min(1.0);
    let ds = 30.0 * r * r * (1.0 - r) * (1.0 - r);
    (s, ds)
}

/// Spatial cutoff `ζ(x) = Π_i s((d_i − m)/m)`, `d_i` the distance to the nearest
/// wall along axis `i`. Zero within `m` of `∂Ω`, one once every `d_i ≥ 2m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutoff {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
    margin: f64,
}

/// Largest slope of the smoothstep profile, attained at `r = 1/2`.
pub const SMOOTHSTEP_MAX_SLOPE: f64 = 1.875;

pub fn bump_cutoff(grid: &Grid, margin: f64) -> Result<Cutoff> {
    let min_extent = (0..grid.dim())
        .map(|a| grid.upper()[a] - grid.lower()[a])
        .fold(f64::INFINITY, f64::min);
    if !(margin > 0.0 && margin < 0.5 * min_extent) {
        return Err(Error::InvalidArgument(format!(
            "cutoff margin {margin} outside (0, {})",
            0.5 * min_extent
        )));
    }
    Ok(Cutoff {
        dim: grid.dim(),
        lower: grid.lower,
        upper: grid.upper,
        margin,
    })
}

impl Cutoff {
    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Value and gradient at `x`.
    pub fn eval(&self, x: &[f64]) -> (f64, [f64; 2]) {
        let mut factors = [1.0; 2];
        let mut slopes = [0.0; 2];
        for a in 0..self.dim {
            let dl = x[a] - self.lower[a];
            let du = self.upper[a] - x[a];
            let (d, sign) = if dl <= du { (dl, 1.0) } else { (du, -1.0) };
            let (s, ds) = smoothstep((d - self.margin) / self.margin);
            factors[a] = s;
            slopes[a] = sign * ds / self.margin;
        }
        let value: f64 = factors[..self.dim].iter().product();
        let mut grad = [0.0; 2];
        for a in 0..self.dim {
            let others: f64 = (0..self.dim)
                .filter(|&b| b != a)
                .map(|b| factors[b])
                .product();
            grad[a] = slopes[a] * others;
        }
        (value, grad)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.eval(x).0
    }

    /// Analytic bound on `|∇ζ|`.
    pub fn gradient_bound(&self) -> f64 {
        SMOOTHSTEP_MAX_SLOPE * (self.dim as f64).sqrt() / self.margin
    }

    /// `ζ` at every spatial node.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.n_space())
            .map(|s| self.value(&grid.coords(s)))
            .collect()
    }

    /// `|∇ζ|` at every spatial node.
    pub fn sample_grad_norm(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.n_space())
            .map(|s| {
                let (_, g) = self.eval(&grid.coords(s));
                (g[0] * g[0] + g[1] * g[1]).sqrt()
            })
            .collect()
    }
}

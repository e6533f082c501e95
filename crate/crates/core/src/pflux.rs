//! p-structure kernels and the staggered discrete p-Laplacian.
//!
//! The discrete operator is the negative gradient of the discrete energy
//! `E(u) = Σ_T w_T Φ(g_T)`, `Φ(g) = (|g|² + ε²)^{p/2} / p`, divided by the lumped
//! nodal mass. In 1D the elements `T` are the grid edges. In 2D every cell is
//! split into four corner triangles (the union of both diagonal
//! triangulations, each weighted `h_x h_y / 4`); the gradient of the linear
//! interpolant on a corner triangle is the pair of one-sided differences at
//! that corner. For `p = 2` this reproduces the 3-point and 5-point Laplacians,
//! and affine data gives a constant element gradient and hence `Δ_p u = 0`.

use crate::error::{Error, Result};
use crate::geometry::Grid;

/// Exponent and regularization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PParams {
    p: f64,
    eps: f64,
}

impl PParams {
    pub fn new(p: f64, eps: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 2.0) {
            return Err(Error::InvalidArgument(format!("p = {p}, need p >= 2")));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eps = {eps}, need eps >= 0"
            )));
        }
        Ok(PParams { p, eps })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        PParams::new(self.p, eps)
    }

    /// Conjugate exponent `p/(p−1)`.
    pub fn conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

/// `s^e` with shortcuts for the exponents that occur most (`p = 2, 3, 4`).
#[inline]
fn pow_half_units(s: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 0.5 {
        s.sqrt()
    } else if e == 1.0 {
        s
    } else {
        s.powf(e)
    }
}

fn norm2(g: &[f64]) -> f64 {
    g.iter().map(|v| v * v).sum()
}

/// Scalar factor `(|g|² + ε²)^{(p−2)/2}` given `|g|²`.
#[inline]
pub fn flux_factor(g2: f64, params: &PParams) -> f64 {
    pow_half_units(g2 + params.eps * params.eps, 0.5 * (params.p - 2.0))
}

/// `A_ε(g) = (|g|² + ε²)^{(p−2)/2} g`.
pub fn flux_eps(g: &[f64], params: &PParams) -> Vec<f64> {
    let f = flux_factor(norm2(g), params);
    g.iter().map(|v| f * v).collect()
}

/// `F(g) = |g|^{(p−2)/2} g`.
pub fn f_map(g: &[f64], p: f64) -> Vec<f64> {
    let f = pow_half_units(norm2(g), 0.25 * (p - 2.0));
    g.iter().map(|v| f * v).collect()
}

/// Both sides of `(4/p²)|F(b) − F(a)|² ≤ ⟨|b|^{p−2}b − |a|^{p−2}a, b − a⟩`.
pub fn monotonicity_lhs_rhs(a: &[f64], b: &[f64], p: f64) -> (f64, f64) {
    let (na, nb) = (norm2(a), norm2(b));
    let (fa, fb) = (
        pow_half_units(na, 0.25 * (p - 2.0)),
        pow_half_units(nb, 0.25 * (p - 2.0)),
    );
    let (aa, ab) = (
        pow_half_units(na, 0.5 * (p - 2.0)),
        pow_half_units(nb, 0.5 * (p - 2.0)),
    );
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..a.len() {
        let df = fb * b[i] - fa * a[i];
        lhs += df * df;
        rhs += (ab * b[i] - aa * a[i]) * (b[i] - a[i]);
    }
    (4.0 / (p * p) * lhs, rhs)
}

/// Both sides of
/// `||b|^{p−2}b − |a|^{p−2}a| ≤ (p−1)(|b|^{(p−2)/2} + |a|^{(p−2)/2}) |F(b) − F(a)|`.
pub fn lipschitz_bound_lhs_rhs(a: &[f64], b: &[f64], p: f64) -> (f64, f64) {
    let (na, nb) = (norm2(a), norm2(b));
    let (fa, fb) = (
        pow_half_units(na, 0.25 * (p - 2.0)),
        pow_half_units(nb, 0.25 * (p - 2.0)),
    );
    let (aa, ab) = (
        pow_half_units(na, 0.5 * (p - 2.0)),
        pow_half_units(nb, 0.5 * (p - 2.0)),
    );
    let mut dflux = 0.0;
    let mut df = 0.0;
    for i in 0..a.len() {
        dflux += (ab * b[i] - aa * a[i]).powi(2);
        df += (fb * b[i] - fa * a[i]).powi(2);
    }
    (dflux.sqrt(), (p - 1.0) * (fb + fa) * df.sqrt())
}

/// Three-factor Young inequality `abc ≤ ε²a²/2 + ε^{−p}b^p/p + (p−2)c^{2p/(p−2)}/(2p)`,
/// returned as `(abc, bound)`. Needs `p > 2`.
pub fn young3(a: f64, b: f64, c: f64, p: f64, eps_y: f64) -> Result<(f64, f64)> {
    if !(p > 2.0) {
        return Err(Error::InvalidArgument(format!(
            "three-factor Young bound needs p > 2, got {p}"
        )));
    }
    if a < 0.0 || b < 0.0 || c < 0.0 || !(eps_y > 0.0) {
        return Err(Error::InvalidArgument(
            "young3 needs a, b, c >= 0 and eps > 0".into(),
        ));
    }
    let r = 2.0 * p / (p - 2.0);
    let bound = eps_y * eps_y * a * a / 2.0
        + eps_y.powf(-p) * b.powf(p) / p
        + (p - 2.0) * c.powf(r) / (2.0 * p);
    Ok((a * b * c, bound))
}

/// One element of the discrete energy: its nodes and `∂g_T/∂u_node` for each.
#[derive(Debug, Clone, Copy)]
struct Element {
    nodes: [usize; 3],
    coef: [[f64; 2]; 3],
    len: usize,
}

impl Element {
    #[inline]
    fn gradient(&self, u: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for m in 0..self.len {
            let v = u[self.nodes[m]];
            g[0] += self.coef[m][0] * v;
            g[1] += self.coef[m][1] * v;
        }
        g
    }
}

/// Element contribution seen from one node: element gradient at the current
/// iterate and its derivative with respect to that node's value.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct LocalTerm {
    pub g: [f64; 2],
    pub d: [f64; 2],
}

/// Precomputed element structure of a grid's spatial slice.
#[derive(Debug, Clone)]
pub struct Stencil {
    dim: usize,
    elements: Vec<Element>,
    /// Element weight divided by nodal mass.
    beta: f64,
    weight: f64,
    mass: f64,
    /// CSR map node → (element, slot).
    offsets: Vec<usize>,
    incidence: Vec<(usize, usize)>,
    interior: Vec<bool>,
}

impl Stencil {
    pub fn new(grid: &Grid) -> Self {
        let dim = grid.dim();
        let n = grid.n_space();
        let mut elements = Vec::new();
        let (weight, mass);
        if dim == 1 {
            let h = grid.h()[0];
            for i in 0..grid.nx()[0] - 1 {
                elements.push(Element {
                    nodes: [i, i + 1, 0],
                    coef: [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0; 2]],
                    len: 2,
                });
            }
            weight = h;
            mass = h;
        } else {
            let (hx, hy) = (grid.h()[0], grid.h()[1]);
            let (ix, iy) = (1.0 / hx, 1.0 / hy);
            for j in 0..grid.nx()[1] - 1 {
                for i in 0..grid.nx()[0] - 1 {
                    let n00 = grid.spatial_index([i, j]);
                    let n10 = grid.spatial_index([i + 1, j]);
                    let n01 = grid.spatial_index([i, j + 1]);
                    let n11 = grid.spatial_index([i + 1, j + 1]);
                    // corner 00: g = (u10 − u00, u01 − u00)
                    elements.push(Element {
                        nodes: [n00, n10, n01],
                        coef: [[-ix, -iy], [ix, 0.0], [0.0, iy]],
                        len: 3,
                    });
                    // corner 10: g = (u10 − u00, u11 − u10)
                    elements.push(Element {
                        nodes: [n00, n10, n11],
                        coef: [[-ix, 0.0], [ix, -iy], [0.0, iy]],
                        len: 3,
                    });
                    // corner 01: g = (u11 − u01, u01 − u00)
                    elements.push(Element {
                        nodes: [n01, n11, n00],
                        coef: [[-ix, iy], [ix, 0.0], [0.0, -iy]],
                        len: 3,
                    });
                    // corner 11: g = (u11 − u01, u11 − u10)
                    elements.push(Element {
                        nodes: [n11, n01, n10],
                        coef: [[ix, iy], [-ix, 0.0], [0.0, -iy]],
                        len: 3,
                    });
                }
            }
            weight = 0.25 * hx * hy;
            mass = hx * hy;
        }
        let mut counts = vec![0usize; n + 1];
        for e in &elements {
            for m in 0..e.len {
                counts[e.nodes[m] + 1] += 1;
            }
        }
        for s in 0..n {
            counts[s + 1] += counts[s];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut incidence = vec![(0, 0); offsets[n]];
        for (ei, e) in elements.iter().enumerate() {
            for m in 0..e.len {
                let s = e.nodes[m];
                incidence[fill[s]] = (ei, m);
                fill[s] += 1;
            }
        }
        Stencil {
            dim,
            elements,
            beta: weight / mass,
            weight,
            mass,
            offsets,
            incidence,
            interior: (0..n).map(|s| !grid.is_lateral(s)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn beta(&self) -> f64 {
        self.beta
    }

    /// Lumped nodal mass (`h^n`).
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn is_interior(&self, s: usize) -> bool {
        self.interior[s]
    }

    /// Fill `out` with the element terms around node `s`; returns how many.
    pub(crate) fn local_terms(&self, u: &[f64], s: usize, out: &mut [LocalTerm; 12]) -> usize {
        let mut count = 0;
        for &(ei, slot) in &self.incidence[self.offsets[s]..self.offsets[s + 1]] {
            let e = &self.elements[ei];
            out[count] = LocalTerm {
                g: e.gradient(u),
                d: e.coef[slot],
            };
            count += 1;
        }
        count
    }

    /// Discrete `Δ_p u` with regularization `params.eps`; zero on `∂Ω`.
    pub fn p_laplacian(&self, u: &[f64], params: &PParams) -> Vec<f64> {
        let mut acc = vec![0.0; u.len()];
        for e in &self.elements {
            let g = e.gradient(u);
            let f = flux_factor(g[0] * g[0] + g[1] * g[1], params);
            let a = [f * g[0], f * g[1]];
            for m in 0..e.len {
                let c = e.coef[m];
                acc[e.nodes[m]] -= self.beta * (a[0] * c[0] + a[1] * c[1]);
            }
        }
        for (s, v) in acc.iter_mut().enumerate() {
            if !self.interior[s] {
                *v = 0.0;
            }
        }
        acc
    }

    /// `Σ_T w_T Φ(g_T)`.
    pub fn energy(&self, u: &[f64], params: &PParams) -> f64 {
        let terms: Vec<f64> = self
            .elements
            .iter()
            .map(|e| {
                let g = e.gradient(u);
                self.weight * phi(g[0] * g[0] + g[1] * g[1], params)
            })
            .collect();
        crate::fields::pairwise_sum(&terms)
    }

    /// Quadrature weight of one element (the same for all).
    pub fn element_weight(&self) -> f64 {
        self.weight
    }

    /// Gradient of `u` on every element, in element order.
    pub fn element_gradients(&self, u: &[f64]) -> Vec<[f64; 2]> {
        self.elements.iter().map(|e| e.gradient(u)).collect()
    }
}

/// `Φ(g) = (|g|² + ε²)^{p/2} / p` given `|g|²`.
#[inline]
pub fn phi(g2: f64, params: &PParams) -> f64 {
    let s = g2 + params.eps * params.eps;
    s * flux_factor(g2, params) / params.p
}

/// Discrete `Δ_p` of one spatial slice.
pub fn p_laplacian(u: &[f64], params: &PParams, grid: &Grid) -> Vec<f64> {
    Stencil::new(grid).p_laplacian(u, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    fn pp(p: f64, eps: f64) -> PParams {
        PParams::new(p, eps).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(PParams::new(1.5, 0.0).is_err());
        assert!(PParams::new(3.0, -1.0).is_err());
        assert!(PParams::new(2.0, 0.0).is_ok());
        assert_eq!(pp(3.0, 0.0).conjugate(), 1.5);
    }

    #[test]
    fn flux_examples() {
        assert_eq!(flux_eps(&[0.0, 0.0], &pp(3.0, 0.5)), vec![0.0, 0.0]);
        assert_eq!(flux_eps(&[0.0, 0.0], &pp(2.0, 0.0)), vec![0.0, 0.0]);
        assert_eq!(flux_eps(&[1.0, 0.0], &pp(4.0, 0.0)), vec![1.0, 0.0]);
        assert_eq!(flux_eps(&[3.0, 4.0], &pp(3.0, 0.0)), vec![15.0, 20.0]);
        assert_eq!(f_map(&[0.0, 0.0], 3.0), vec![0.0, 0.0]);
        assert_eq!(f_map(&[1.0, 0.0], 4.0), vec![1.0, 0.0]);
        assert_eq!(f_map(&[0.0, 2.0], 6.0), vec![0.0, 8.0]);
    }

    #[test]
    fn inequality_examples() {
        assert_eq!(
            monotonicity_lhs_rhs(&[0.3, -1.0], &[0.3, -1.0], 3.5),
            (0.0, 0.0)
        );
        let (l, r) = monotonicity_lhs_rhs(&[0.0, 0.0], &[1.0, 0.0], 4.0);
        assert!((l - 0.25).abs() < 1e-15 && (r - 1.0).abs() < 1e-15);
        assert_eq!(
            lipschitz_bound_lhs_rhs(&[2.0, 1.0], &[2.0, 1.0], 3.0),
            (0.0, 0.0)
        );
        let (l, r) = lipschitz_bound_lhs_rhs(&[0.0, 0.0], &[1.0, 0.0], 4.0);
        assert!((l - 1.0).abs() < 1e-15 && (r - 3.0).abs() < 1e-15);
    }

    #[test]
    fn young_examples() {
        assert_eq!(young3(0.0, 0.0, 0.0, 3.0, 1.0).unwrap(), (0.0, 0.0));
        let (l, r) = young3(1.0, 1.0, 1.0, 4.0, 1.0).unwrap();
        assert_eq!(l, 1.0);
        assert!((r - 1.0).abs() < 1e-15);
        assert!(young3(1.0, 1.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn p_laplacian_examples_1d() {
        let g = build_grid(1, &[(0.0, 1.0)], &[11], 1.0, 2).unwrap();
        let xs: Vec<f64> = (0..11).map(|s| g.coords(s)[0]).collect();
        let aff: Vec<f64> = xs.iter().map(|x| 2.0 - 3.0 * x).collect();
        let lap = p_laplacian(&aff, &pp(3.5, 0.0), &g);
        assert!(lap.iter().all(|v| v.abs() < 1e-11), "{lap:?}");
        let c = vec![0.7; 11];
        assert!(p_laplacian(&c, &pp(4.0, 0.0), &g).iter().all(|&v| v == 0.0));
        let q: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let lap = p_laplacian(&q, &pp(2.0, 0.0), &g);
        for s in 1..10 {
            assert!((lap[s] - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn p2_matches_five_point_laplacian() {
        let g = build_grid(2, &[(0.0, 1.0), (0.0, 2.0)], &[7, 9], 1.0, 2).unwrap();
        let u: Vec<f64> = (0..g.n_space())
            .map(|s| ((s * 7919) % 101) as f64 / 101.0 - 0.5)
            .collect();
        let lap = p_laplacian(&u, &pp(2.0, 0.0), &g);
        let (hx, hy) = (g.h()[0], g.h()[1]);
        for s in 0..g.n_space() {
            if g.is_lateral(s) {
                continue;
            }
            let nx = g.nx()[0];
            let five = (u[s + 1] - 2.0 * u[s] + u[s - 1]) / (hx * hx)
                + (u[s + nx] - 2.0 * u[s] + u[s - nx]) / (hy * hy);
            assert!((lap[s] - five).abs() <= 1e-12 * five.abs().max(1.0) * 100.0);
        }
    }

    #[test]
    fn affine_is_p_harmonic_2d() {
        let g = build_grid(2, &[(0.0, 1.0), (0.0, 1.0)], &[9], 1.0, 2).unwrap();
        let u: Vec<f64> = (0..g.n_space())
            .map(|s| {
                let x = g.coords(s);
                0.3 + 1.7 * x[0] - 0.4 * x[1]
            })
            .collect();
        let lap = p_laplacian(&u, &pp(3.0, 0.0), &g);
        assert!(lap.iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn p_laplacian_is_negative_energy_gradient() {
        let g = build_grid(2, &[(0.0, 1.0), (0.0, 1.0)], &[6], 1.0, 2).unwrap();
        let st = Stencil::new(&g);
        let params = pp(3.3, 0.1);
        let u: Vec<f64> = (0..g.n_space())
            .map(|s| ((s * 31) % 17) as f64 / 17.0)
            .collect();
        let lap = st.p_laplacian(&u, &params);
        let d = 1e-6;
        for s in 0..g.n_space() {
            if g.is_lateral(s) {
                continue;
            }
            let mut up = u.clone();
            let mut um = u.clone();
            up[s] += d;
            um[s] -= d;
            let de = (st.energy(&up, &params) - st.energy(&um, &params)) / (2.0 * d);
            assert!((-de / st.mass() - lap[s]).abs() < 1e-5 * (1.0 + lap[s].abs()));
        }
    }
}

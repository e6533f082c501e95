mod common;

use std::sync::OnceLock;

use proptest::prelude::*;

use pobstacle::catalog::{self, ObstacleId};
use pobstacle::fields::{
    divergence_slice, gradient_slice, integrate_space, lq_norm, time_diff, ScalarField, Weight,
};
use pobstacle::geometry::{build_grid, bump_cutoff, classify_boundary, Grid, NodeKind};
use pobstacle::pflux::{
    f_map, flux_eps, flux_factor, lipschitz_bound_lhs_rhs, monotonicity_lhs_rhs, p_laplacian,
    young3, PParams, Stencil,
};
use pobstacle::solver::{comparison_check, solve, SolveResult, SolverConfig};
use pobstacle::verification::{detect_coincidence, vi_slack, TestFunctionSet};

use common::{grid_1d, obstacle, SineObstacle};

fn grid_for(dim: usize, n: usize) -> Grid {
    let extent = vec![(0.0, 1.0); dim];
    build_grid(dim, &extent, &[n], 1.0, 5).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn vec_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

fn gvec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, dim)
}

/// Hand-rolled 3- or 5-point Laplacian at interior nodes, zero on the walls.
fn classical_laplacian(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    let nx = grid.nx()[0];
    for (s, o) in out.iter_mut().enumerate() {
        if grid.is_lateral(s) {
            continue;
        }
        let hx2 = grid.h()[0] * grid.h()[0];
        let mut v = (u[s - 1] - 2.0 * u[s] + u[s + 1]) / hx2;
        if grid.dim() == 2 {
            let hy2 = grid.h()[1] * grid.h()[1];
            v += (u[s - nx] - 2.0 * u[s] + u[s + nx]) / hy2;
        }
        *o = v;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spatial_operators_are_linear(
        dim in 1usize..=2,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        seed in vec_strategy(2 * 81 * 2),
    ) {
        let grid = grid_for(dim, 9);
        let n = grid.n_space();
        let (x, y) = (&seed[..n], &seed[n..2 * n]);
        let comb: Vec<f64> = x.iter().zip(y).map(|(p, q)| a * p + b * q).collect();
        let (gx, gy, gc) = (gradient_slice(&grid, x), gradient_slice(&grid, y), gradient_slice(&grid, &comb));
        let expect: Vec<f64> = gx.iter().zip(&gy).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(max_diff(&gc, &expect) <= 1e-12 * (1.0 + max_abs(&expect)));

        let m = n * dim;
        let (vx, vy) = (&seed[..m], &seed[m..2 * m]);
        let vc: Vec<f64> = vx.iter().zip(vy).map(|(p, q)| a * p + b * q).collect();
        let (dx, dy, dc) = (divergence_slice(&grid, vx), divergence_slice(&grid, vy), divergence_slice(&grid, &vc));
        let expect: Vec<f64> = dx.iter().zip(&dy).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(max_diff(&dc, &expect) <= 1e-12 * (1.0 + max_abs(&expect)));
    }

    #[test]
    fn time_diff_is_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        seed in vec_strategy(2 * 9 * 5),
    ) {
        let grid = grid_for(1, 9);
        let n = grid.n_nodes();
        let x = ScalarField::new(&grid, seed[..n].to_vec()).unwrap();
        let y = ScalarField::new(&grid, seed[n..].to_vec()).unwrap();
        let comb = x.zip_with(&y, |p, q| a * p + b * q).unwrap();
        let (tx, ty, tc) = (time_diff(&x).unwrap(), time_diff(&y).unwrap(), time_diff(&comb).unwrap());
        let expect: Vec<f64> = tx.values().iter().zip(ty.values()).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(max_diff(tc.values(), &expect) <= 1e-12 * (1.0 + max_abs(&expect)));
    }

    /// `Σ m φ Δ_p u = −Σ_T w ⟨A(g_T u), g_T φ⟩` for `φ` vanishing on the walls.
    #[test]
    fn staggered_stencil_sums_by_parts(
        dim in 1usize..=2,
        p in 2.0f64..6.0,
        eps in 0.0f64..0.5,
        seed in vec_strategy(2 * 49),
    ) {
        let grid = grid_for(dim, 7);
        let n = grid.n_space();
        let u = &seed[..n];
        let mut phi = seed[n..2 * n].to_vec();
        for (s, v) in phi.iter_mut().enumerate() {
            if grid.is_lateral(s) {
                *v = 0.0;
            }
        }
        let params = PParams::new(p, eps).unwrap();
        let st = Stencil::new(&grid);
        let lap = st.p_laplacian(u, &params);
        let lhs: f64 = phi.iter().zip(&lap).map(|(f, l)| st.mass() * f * l).sum();
        let gu = st.element_gradients(u);
        let gphi = st.element_gradients(&phi);
        let rhs: f64 = gu
            .iter()
            .zip(&gphi)
            .map(|(g, q)| {
                let f = (g[0] * g[0] + g[1] * g[1] + eps * eps).powf((p - 2.0) / 2.0);
                st.element_weight() * f * (g[0] * q[0] + g[1] * q[1])
            })
            .sum();
        prop_assert!((lhs + rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{} {}", lhs, rhs);
    }

    /// Central differences sum by parts exactly against `φ` vanishing near the walls.
    #[test]
    fn central_differences_sum_by_parts(
        dim in 1usize..=2,
        seed in vec_strategy(3 * 144),
    ) {
        let grid = grid_for(dim, 12);
        let n = grid.n_space();
        let d = dim;
        let v = &seed[..n * d];
        let phi: Vec<f64> = (0..n)
            .map(|s| if grid.boundary_distance(s) > 2.5 * grid.h_max() { seed[n * d + s] } else { 0.0 })
            .collect();
        let div = divergence_slice(&grid, v);
        let gphi = gradient_slice(&grid, &phi);
        let a: Vec<f64> = phi.iter().zip(&div).map(|(f, q)| f * q).collect();
        let b: Vec<f64> = (0..n).map(|s| (0..d).map(|k| v[s * d + k] * gphi[s * d + k]).sum()).collect();
        let (ia, ib) = (integrate_space(&grid, &a, None), integrate_space(&grid, &b, None));
        prop_assert!((ia + ib).abs() <= 1e-12 * (1.0 + ia.abs()), "{} {}", ia, ib);
    }

    /// Against the exact gradient of a smooth `φ` the mismatch is second order.
    #[test]
    fn smooth_integration_by_parts_is_second_order(
        dim in 1usize..=2,
        amp in 0.5f64..2.0,
        rate in 0.5f64..2.0,
    ) {
        let mismatch = |n: usize| {
            let grid = grid_for(dim, n);
            let ns = grid.n_space();
            let mut v = vec![0.0; ns * dim];
            let mut phi = vec![0.0; ns];
            let mut dphi = vec![0.0; ns * dim];
            for s in 0..ns {
                let x = grid.coords(s);
                let (f, g) = smooth_bump(&x[..dim]);
                phi[s] = f;
                for k in 0..dim {
                    v[s * dim + k] = amp * (rate * (k as f64 + 1.0) * x[k]).exp();
                    dphi[s * dim + k] = g[k];
                }
            }
            let div = divergence_slice(&grid, &v);
            let a: Vec<f64> = phi.iter().zip(&div).map(|(f, q)| f * q).collect();
            let b: Vec<f64> = (0..ns).map(|s| (0..dim).map(|k| v[s * dim + k] * dphi[s * dim + k]).sum()).collect();
            (integrate_space(&grid, &a, None) + integrate_space(&grid, &b, None)).abs()
        };
        let e: Vec<f64> = [17, 33, 65].iter().map(|&n| mismatch(n)).collect();
        prop_assert!(e[0] / e[1] >= 3.5 && e[1] / e[2] >= 3.5, "{:?}", e);
    }

    #[test]
    fn lq_norm_is_monotone(
        dim in 1usize..=2,
        q1 in 1.0f64..6.0,
        dq in 0.0f64..4.0,
        seed in vec_strategy(81 * 5),
        mask_seed in prop::collection::vec(any::<bool>(), 81 * 5),
    ) {
        let grid = grid_for(dim, 9);
        let n = grid.n_nodes();
        let f = ScalarField::new(&grid, seed[..n].to_vec()).unwrap();
        let small: Vec<bool> = mask_seed[..n].to_vec();
        let big: Vec<bool> = small.iter().enumerate().map(|(i, &m)| m || i % 3 == 0).collect();
        let a = lq_norm(&f, q1, Weight::Unit, Some(&small)).unwrap();
        let b = lq_norm(&f, q1, Weight::Unit, Some(&big)).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-12), "{} {}", a, b);
        // the unit cylinder has measure one, so norms grow with the exponent
        let c = lq_norm(&f, q1 + dq, Weight::Unit, Some(&big)).unwrap();
        prop_assert!(b <= c * (1.0 + 1e-12), "{} {}", b, c);
    }

    #[test]
    fn flux_symmetries(
        g in gvec(2),
        p in 2.0f64..6.0,
        eps in 0.0f64..2.0,
        deps in 0.0f64..2.0,
        angle in 0.0f64..std::f64::consts::TAU,
    ) {
        let params = PParams::new(p, eps).unwrap();
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let (a, b) = (flux_eps(&g, &params), flux_eps(&neg, &params));
        prop_assert!(a.iter().zip(&b).all(|(x, y)| *x == -*y));

        let (c, s) = (angle.cos(), angle.sin());
        let rot = |v: &[f64]| vec![c * v[0] - s * v[1], s * v[0] + c * v[1]];
        let lhs = f_map(&rot(&g), p);
        let rhs = rot(&f_map(&g, p));
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12 * (1.0 + max_abs(&rhs)));

        let zero = PParams::new(p, 0.0).unwrap();
        let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let expect: Vec<f64> = g.iter().map(|v| norm.powf(p - 2.0) * v).collect();
        prop_assert!(max_diff(&flux_eps(&g, &zero), &expect) <= 1e-12 * (1.0 + max_abs(&expect)));

        let g2 = norm * norm;
        let more = PParams::new(p, eps + deps).unwrap();
        prop_assert!(flux_factor(g2, &params) <= flux_factor(g2, &more));
    }

    #[test]
    fn p2_stencil_is_classical_laplacian(dim in 1usize..=2, seed in vec_strategy(121)) {
        let grid = grid_for(dim, 11);
        let u = &seed[..grid.n_space()];
        let lap = p_laplacian(u, &PParams::new(2.0, 0.0).unwrap(), &grid);
        let expect = classical_laplacian(&grid, u);
        prop_assert!(max_diff(&lap, &expect) <= 1e-12 * (1.0 + max_abs(&expect)));
    }

    #[test]
    fn affine_slices_are_p_harmonic(
        dim in 1usize..=2,
        p in 2.0f64..6.0,
        eps in 0.0f64..0.5,
        coef in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let grid = grid_for(dim, 9);
        let u: Vec<f64> = (0..grid.n_space())
            .map(|s| {
                let x = grid.coords(s);
                coef[0] + coef[1] * x[0] + coef[2] * x[1]
            })
            .collect();
        let lap = p_laplacian(&u, &PParams::new(p, eps).unwrap(), &grid);
        prop_assert!(max_abs(&lap) <= 1e-9, "{}", max_abs(&lap));
    }

    #[test]
    fn boundary_classification_and_cutoff(
        dim in 1usize..=2,
        n in 5usize..40,
        nt in 2usize..6,
        margin in 0.05f64..0.45,
    ) {
        let extent = vec![(0.0, 1.0); dim];
        let grid = build_grid(dim, &extent, &[n], 1.0, nt).unwrap();
        let kinds = classify_boundary(&grid);
        prop_assert_eq!(&kinds, &classify_boundary(&grid.clone()));
        for (node, kind) in kinds.iter().enumerate() {
            let (k, s) = grid.split(node);
            let expect = if k == 0 || grid.is_lateral(s) { NodeKind::ParabolicBoundary } else { NodeKind::Interior };
            prop_assert_eq!(*kind, expect);
        }
        let cutoff = bump_cutoff(&grid, margin).unwrap();
        let zeta = cutoff.sample(&grid);
        prop_assert!(zeta.iter().all(|z| (0.0..=1.0).contains(z)));
        let bound = cutoff.gradient_bound();
        prop_assert!(cutoff.sample_grad_norm(&grid).iter().all(|g| *g <= bound * (1.0 + 1e-12)));
        // one-sided stencils at the walls see only zeros once the margin spans two cells
        if margin > 2.0 * grid.h_max() {
            let dz = gradient_slice(&grid, &zeta);
            let worst = dz.chunks(dim).map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
            prop_assert!(worst <= bound * (1.0 + 1e-12), "{} {}", worst, bound);
        }
    }

    #[test]
    fn kernel_inequalities(
        dim in 1usize..=3,
        a in gvec(3),
        b in gvec(3),
        p in 2.0f64..=6.0,
        abc in prop::collection::vec(0.0f64..10.0, 3),
        py in 2.0001f64..=6.0,
        eps_y in 0.1f64..=10.0,
    ) {
        let (l, r) = monotonicity_lhs_rhs(&a[..dim], &b[..dim], p);
        prop_assert!(l <= r * (1.0 + 1e-12), "{} {}", l, r);
        let (l, r) = lipschitz_bound_lhs_rhs(&a[..dim], &b[..dim], p);
        prop_assert!(l <= r * (1.0 + 1e-12), "{} {}", l, r);
        let (l, r) = young3(abc[0], abc[1], abc[2], py, eps_y).unwrap();
        prop_assert!(l <= r * (1.0 + 1e-12), "{} {}", l, r);
    }
}

/// `exp(−1/(1 − ρ²))` around the box center, radius 0.3, with its gradient.
fn smooth_bump(x: &[f64]) -> (f64, [f64; 2]) {
    let r = 0.3;
    let rho2: f64 = x.iter().map(|v| ((v - 0.5) / r).powi(2)).sum();
    if rho2 >= 1.0 {
        return (0.0, [0.0; 2]);
    }
    let w = 1.0 - rho2;
    let f = (-1.0 / w).exp();
    let mut g = [0.0; 2];
    for (k, v) in x.iter().enumerate() {
        // d/dx exp(−1/w) = exp(−1/w) · (−2 (x − c)/r²) / w²
        g[k] = f * (-2.0 * (v - 0.5) / (r * r)) / (w * w);
    }
    (f, g)
}

fn hump() -> &'static SolveResult {
    static CELL: OnceLock<SolveResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let grid = grid_1d(65, 65);
        let ob = catalog::build(ObstacleId::ShrinkingHump, &Default::default(), &grid).unwrap();
        let cfg = SolverConfig::new(PParams::new(3.0, 0.0).unwrap()).with_omega(1.7);
        solve(&grid, &ob, &cfg).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coincidence_grows_with_tolerance(t1 in 0.0f64..1e-3, dt in 0.0f64..1e-3) {
        let r = hump();
        let small = detect_coincidence(r, Some(t1));
        let big = detect_coincidence(r, Some(t1 + dt));
        prop_assert!(small.mask().iter().zip(big.mask()).all(|(a, b)| !*a || *b));
    }

    #[test]
    fn unperturbed_vi_slack_is_zero(j in 0usize..20) {
        let r = hump();
        let set = TestFunctionSet::standard(r.grid());
        prop_assert_eq!(vi_slack(r, &set.members[j], 0.0).unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Ordered obstacles give ordered solutions.
    #[test]
    fn comparison_on_ordered_obstacles(
        c in -1.0f64..1.0,
        m in -1.0f64..1.0,
        a in -1.0f64..1.0,
        r in 0.0f64..5.0,
        d0 in 0.0f64..0.5,
        d1 in 0.0f64..0.5,
        p in 2.0f64..4.0,
    ) {
        let grid = grid_1d(17, 9);
        let lo = obstacle(SineObstacle { c, m, a, r }, &grid);
        let hi = obstacle(SineObstacle { c: c + d0, m, a: a + d1, r }, &grid);
        let cfg = SolverConfig::new(PParams::new(p, 0.0).unwrap());
        let (ua, ub) = (solve(&grid, &lo, &cfg).unwrap(), solve(&grid, &hi, &cfg).unwrap());
        prop_assert!(ua.converged() && ub.converged());
        prop_assert!(comparison_check(&ua, &ub).unwrap());
    }
}

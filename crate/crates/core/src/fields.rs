//! Nodal fields on a space-time grid and the discrete calculus on them.
//!
//! Quadrature is the tensor trapezoid rule: full weight at interior nodes, half
//! weight per face the node sits on (space and time alike). Reductions use
//! pairwise summation in node order, so every integral is a deterministic
//! function of its inputs.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::Grid;

/// Scalar values at every node of a grid.
///
/// Nodes can be flagged invalid (translates whose source left the grid);
/// invalid nodes are skipped by every norm and integral.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    valid: Option<Vec<bool>>,
}

/// An n-vector at every node, stored interleaved (`values[node * dim + c]`).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<f64>,
}

/// Quadrature weight applied on top of the trapezoid weights.
#[derive(Debug, Clone, Copy)]
pub enum Weight<'a> {
    Unit,
    /// One value per node of the space-time grid.
    Nodal(&'a [f64]),
    /// One value per spatial node, reused at every time level (e.g. `ζ^p`).
    Spatial(&'a [f64]),
}

impl<'a> Weight<'a> {
    fn at(&self, grid: &Grid, node: usize) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::Nodal(w) => w[node],
            Weight::Spatial(w) => w[node % grid.n_space()],
        }
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite value {} at node {i}",
            values[i]
        )));
    }
    Ok(())
}

impl ScalarField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        check_finite(&values)?;
        Ok(ScalarField {
            grid: grid.clone(),
            values,
            valid: None,
        })
    }

    /// Sample `f(x, t)` at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64], f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.n_nodes());
        for k in 0..grid.nt() {
            let t = grid.time(k);
            for s in 0..grid.n_space() {
                let x = grid.coords(s);
                values.push(f(&x[..grid.dim()], t));
            }
        }
        Self::new(grid, values)
    }

    /// Stack per-level slices.
    pub fn from_levels(grid: &Grid, levels: &[Vec<f64>]) -> Result<Self> {
        if levels.len() != grid.nt() {
            return Err(Error::InvalidArgument("wrong number of time levels".into()));
        }
        let values: Vec<f64> = levels.iter().flat_map(|l| l.iter().cloned()).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.n_nodes()],
            valid: None,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn level(&self, k: usize) -> &[f64] {
        let n = self.grid.n_space();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn is_valid(&self, node: usize) -> bool {
        self.valid.as_ref().is_none_or(|v| v[node])
    }

    pub fn validity(&self) -> Option<&[bool]> {
        self.valid.as_deref()
    }

    /// Pointwise map, keeping the validity flags.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        check_finite(&values)?;
        Ok(ScalarField {
            grid: self.grid.clone(),
            values,
            valid: self.valid.clone(),
        })
    }

    /// Pointwise combination; the result is valid where both inputs are.
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.grid.compatible(&other.grid) {
            return Err(Error::IncompatibleGrids("zip_with".into()));
        }
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        check_finite(&values)?;
        Ok(ScalarField {
            grid: self.grid.clone(),
            values,
            valid: merge_valid(self.valid.as_deref(), other.valid.as_deref()),
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.is_valid(*i))
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }
}

fn merge_valid(a: Option<&[bool]>, b: Option<&[bool]>) -> Option<Vec<bool>> {
    match (a, b) {
        (None, None) => None,
        (Some(a), None) | (None, Some(a)) => Some(a.to_vec()),
        (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(&x, &y)| x && y).collect()),
    }
}

impl VectorField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() * grid.dim() {
            return Err(Error::InvalidArgument(
                "vector field length mismatch".into(),
            ));
        }
        check_finite(&values)?;
        Ok(VectorField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let d = self.grid.dim();
        &self.values[node * d..(node + 1) * d]
    }

    pub fn level(&self, k: usize) -> &[f64] {
        let n = self.grid.n_space() * self.grid.dim();
        &self.values[k * n..(k + 1) * n]
    }

    /// Apply `f` to every nodal vector.
    pub fn map_vectors(&self, f: impl Fn(&[f64], &mut [f64])) -> Result<Self> {
        let d = self.grid.dim();
        let mut out = vec![0.0; self.values.len()];
        for (src, dst) in self.values.chunks(d).zip(out.chunks_mut(d)) {
            f(src, dst);
        }
        VectorField::new(&self.grid, out)
    }

    /// Component `c` as a scalar field.
    pub fn component(&self, c: usize) -> ScalarField {
        let d = self.grid.dim();
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().skip(c).step_by(d).cloned().collect(),
            valid: None,
        }
    }

    /// Euclidean norm at every node.
    pub fn norms(&self) -> ScalarField {
        let d = self.grid.dim();
        ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .chunks(d)
                .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
                .collect(),
            valid: None,
        }
    }
}

/// Derivative along `axis` at spatial node `s` of a single slice: central in the
/// interior, second-order one-sided at the walls.
fn axis_derivative(grid: &Grid, u: &[f64], s: usize, axis: usize) -> f64 {
    let idx = grid.axis_indices(s);
    let n = grid.nx()[axis];
    let h = grid.h()[axis];
    let stride = if axis == 0 { 1 } else { grid.nx()[0] };
    let i = idx[axis];
    if i == 0 {
        (-3.0 * u[s] + 4.0 * u[s + stride] - u[s + 2 * stride]) / (2.0 * h)
    } else if i == n - 1 {
        (3.0 * u[s] - 4.0 * u[s - stride] + u[s - 2 * stride]) / (2.0 * h)
    } else {
        (u[s + stride] - u[s - stride]) / (2.0 * h)
    }
}

/// Discrete gradient of one spatial slice, interleaved by component.
pub fn gradient_slice(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let d = grid.dim();
    let mut out = vec![0.0; grid.n_space() * d];
    for s in 0..grid.n_space() {
        for axis in 0..d {
            out[s * d + axis] = axis_derivative(grid, u, s, axis);
        }
    }
    out
}

/// Gradient of time level `k`.
pub fn gradient(field: &ScalarField, k: usize) -> Vec<f64> {
    gradient_slice(&field.grid, field.level(k))
}

/// Spatial gradient at every time level.
pub fn gradient_field(field: &ScalarField) -> VectorField {
    let grid = &field.grid;
    let mut values = Vec::with_capacity(grid.n_nodes() * grid.dim());
    for k in 0..grid.nt() {
        values.extend(gradient_slice(grid, field.level(k)));
    }
    VectorField {
        grid: grid.clone(),
        values,
    }
}

/// Discrete divergence of one interleaved vector slice.
pub fn divergence_slice(grid: &Grid, v: &[f64]) -> Vec<f64> {
    let d = grid.dim();
    let n = grid.n_space();
    let mut out = vec![0.0; n];
    let mut comp = vec![0.0; n];
    for axis in 0..d {
        for s in 0..n {
            comp[s] = v[s * d + axis];
        }
        for s in 0..n {
            out[s] += axis_derivative(grid, &comp, s, axis);
        }
    }
    out
}

/// Divergence of time level `k` of a vector field.
pub fn divergence(vfield: &VectorField, k: usize) -> Vec<f64> {
    divergence_slice(&vfield.grid, vfield.level(k))
}

/// Time derivative: central at interior levels, second-order one-sided at
/// `t = 0` and `t = T`.
pub fn time_diff(field: &ScalarField) -> Result<ScalarField> {
    let grid = &field.grid;
    let nt = grid.nt();
    if nt < 3 {
        return Err(Error::InvalidArgument(format!(
            "time_diff needs nt >= 3, got {nt}"
        )));
    }
    let tau = grid.tau();
    let n = grid.n_space();
    let v = &field.values;
    let mut out = vec![0.0; v.len()];
    for k in 0..nt {
        for s in 0..n {
            let at = |kk: usize| v[kk * n + s];
            out[k * n + s] = if k == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * tau)
            } else if k == nt - 1 {
                (3.0 * at(k) - 4.0 * at(k - 1) + at(k - 2)) / (2.0 * tau)
            } else {
                (at(k + 1) - at(k - 1)) / (2.0 * tau)
            };
        }
    }
    let mut f = ScalarField::new(grid, out)?;
    f.valid = field.valid.clone();
    Ok(f)
}

/// Trapezoid weight of spatial node `s` (includes `Π h_i`).
pub fn space_weight(grid: &Grid, s: usize) -> f64 {
    let idx = grid.axis_indices(s);
    let mut w = grid.cell_volume();
    for a in 0..grid.dim() {
        if idx[a] == 0 || idx[a] == grid.nx()[a] - 1 {
            w *= 0.5;
        }
    }
    w
}

/// Trapezoid weight of time level `k` (includes `tau`).
pub fn time_weight(grid: &Grid, k: usize) -> f64 {
    if k == 0 || k == grid.nt() - 1 {
        0.5 * grid.tau()
    } else {
        grid.tau()
    }
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if v.len() <= BLOCK {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

/// `∬ weight · value` over the nodes selected by `region` (all if `None`).
pub fn integrate(grid: &Grid, values: &[f64], weight: Weight<'_>, region: Option<&[bool]>) -> f64 {
    let n = grid.n_space();
    let terms: Vec<f64> = (0..grid.n_nodes())
        .map(|node| {
            if region.is_none_or(|r| r[node]) {
                let (k, s) = (node / n, node % n);
                time_weight(grid, k) * space_weight(grid, s) * weight.at(grid, node) * values[node]
            } else {
                0.0
            }
        })
        .collect();
    pairwise_sum(&terms)
}

/// `∫_Ω weight · value dx` for one spatial slice.
pub fn integrate_space(grid: &Grid, values: &[f64], weight: Option<&[f64]>) -> f64 {
    let terms: Vec<f64> = (0..grid.n_space())
        .map(|s| space_weight(grid, s) * weight.map_or(1.0, |w| w[s]) * values[s])
        .collect();
    pairwise_sum(&terms)
}

/// `(∬ weight · |value|^q)^{1/q}` over masked, valid nodes.
pub fn lq_norm(
    field: &ScalarField,
    q: f64,
    weight: Weight<'_>,
    region: Option<&[bool]>,
) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "L^q norm needs q >= 1, got {q}"
        )));
    }
    let grid = &field.grid;
    let mask: Vec<bool> = (0..grid.n_nodes())
        .map(|i| field.is_valid(i) && region.is_none_or(|r| r[i]))
        .collect();
    let powered: Vec<f64> = field.values.iter().map(|v| v.abs().powf(q)).collect();
    let s = integrate(grid, &powered, weight, Some(&mask));
    Ok(s.max(0.0).powf(1.0 / q))
}

/// Translate by `steps` nodes along `axis`: `out(x) = f(x + steps·h e_axis)`.
/// Nodes whose source lies outside the grid are flagged invalid.
pub fn shift_steps(field: &ScalarField, axis: usize, steps: isize) -> ScalarField {
    let grid = &field.grid;
    let n = grid.n_space();
    let nax = grid.nx()[axis] as isize;
    let stride = if axis == 0 { 1 } else { grid.nx()[0] } as isize;
    let mut values = vec![0.0; field.values.len()];
    let mut valid = vec![false; field.values.len()];
    for node in 0..grid.n_nodes() {
        let s = node % n;
        let i = grid.axis_indices(s)[axis] as isize + steps;
        if (0..nax).contains(&i) {
            let src = (node as isize + steps * stride) as usize;
            values[node] = field.values[src];
            valid[node] = field.is_valid(src);
        }
    }
    ScalarField {
        grid: grid.clone(),
        values,
        valid: Some(valid),
    }
}

/// Translate by a spatial offset that is an integer multiple of `h` along one axis.
pub fn shift(field: &ScalarField, offset: &[f64]) -> Result<ScalarField> {
    let grid = &field.grid;
    if offset.len() != grid.dim() {
        return Err(Error::InvalidArgument(
            "shift offset dimension mismatch".into(),
        ));
    }
    let nonzero: Vec<usize> = (0..grid.dim()).filter(|&a| offset[a] != 0.0).collect();
    match nonzero.as_slice() {
        [] => Ok(field.clone()),
        [axis] => {
            let r = offset[*axis] / grid.h()[*axis];
            let steps = r.round();
            if (r - steps).abs() > 1e-9 * r.abs().max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "shift {} is not a multiple of h = {}",
                    offset[*axis],
                    grid.h()[*axis]
                )));
            }
            Ok(shift_steps(field, *axis, steps as isize))
        }
        _ => Err(Error::InvalidArgument(
            "shift must be along a single axis".into(),
        )),
    }
}

/// Write named fields as CSV: `t, x[, y], name...` in node order.
pub fn write_csv<W: Write>(out: &mut W, columns: &[(&str, &ScalarField)]) -> Result<()> {
    let grid = match columns.first() {
        Some((_, f)) => f.grid(),
        None => return Err(Error::InvalidArgument("no columns".into())),
    };
    if columns.iter().any(|(_, f)| !f.grid().compatible(grid)) {
        return Err(Error::IncompatibleGrids("csv columns".into()));
    }
    let mut header = String::from("t,x");
    if grid.dim() == 2 {
        header.push_str(",y");
    }
    for (name, _) in columns {
        header.push(',');
        header.push_str(name);
    }
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for k in 0..grid.nt() {
        let t = grid.time(k);
        for s in 0..grid.n_space() {
            line.clear();
            let x = grid.coords(s);
            line.push_str(&format!("{t:?},{:?}", x[0]));
            if grid.dim() == 2 {
                line.push_str(&format!(",{:?}", x[1]));
            }
            for (_, f) in columns {
                line.push_str(&format!(",{:?}", f.values[grid.node(k, s)]));
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    fn grid1(nx: usize, nt: usize) -> Grid {
        build_grid(1, &[(0.0, 1.0)], &[nx], 1.0, nt).unwrap()
    }

    fn grid2(nx: usize, nt: usize) -> Grid {
        build_grid(2, &[(0.0, 1.0), (0.0, 1.0)], &[nx], 1.0, nt).unwrap()
    }

    #[test]
    fn gradient_examples() {
        let g = grid1(11, 3);
        let c = ScalarField::from_fn(&g, |_, _| 2.5).unwrap();
        assert!(gradient(&c, 1).iter().all(|&d| d.abs() < 1e-13));
        let lin = ScalarField::from_fn(&g, |x, _| 3.0 * x[0]).unwrap();
        assert!(gradient(&lin, 0).iter().all(|&d| (d - 3.0).abs() < 1e-12));
        let q = ScalarField::from_fn(&g, |x, _| x[0] * x[0]).unwrap();
        assert!((gradient(&q, 0)[5] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_exact_on_affine_2d() {
        let g = grid2(7, 2);
        let f = ScalarField::from_fn(&g, |x, _| 1.0 - 2.0 * x[0] + 0.5 * x[1]).unwrap();
        let gr = gradient(&f, 1);
        for s in 0..g.n_space() {
            assert!((gr[2 * s] + 2.0).abs() < 1e-12);
            assert!((gr[2 * s + 1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_examples() {
        let g = grid2(11, 2);
        let n = g.n_space();
        let mut cst = vec![0.0; 2 * n];
        let mut lin = vec![0.0; 2 * n];
        let mut quad = vec![0.0; 2 * n];
        for s in 0..n {
            let x = g.coords(s);
            cst[2 * s] = 1.5;
            cst[2 * s + 1] = -0.5;
            lin[2 * s] = x[0];
            lin[2 * s + 1] = x[1];
            quad[2 * s] = x[0] * x[0];
        }
        assert!(divergence_slice(&g, &cst).iter().all(|d| d.abs() < 1e-12));
        assert!(divergence_slice(&g, &lin)
            .iter()
            .all(|d| (d - 2.0).abs() < 1e-12));
        let mid = g.spatial_index([5, 5]);
        assert!((divergence_slice(&g, &quad)[mid] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn time_diff_examples() {
        let g = grid1(5, 11);
        let f = ScalarField::from_fn(&g, |_, t| t).unwrap();
        assert!(time_diff(&f)
            .unwrap()
            .values()
            .iter()
            .all(|d| (d - 1.0).abs() < 1e-12));
        let c = ScalarField::from_fn(&g, |_, _| 4.0).unwrap();
        assert!(time_diff(&c)
            .unwrap()
            .values()
            .iter()
            .all(|d| d.abs() < 1e-12));
        let sq = ScalarField::from_fn(&g, |_, t| t * t).unwrap();
        let d = time_diff(&sq).unwrap();
        assert!((d.values()[g.node(5, 2)] - 1.0).abs() < 1e-12);
        assert!(time_diff(&ScalarField::zeros(&grid1(5, 2))).is_err());
    }

    #[test]
    fn norms() {
        let g = build_grid(1, &[(0.0, 1.0)], &[17], 1.0, 9).unwrap();
        let one = ScalarField::from_fn(&g, |_, _| 1.0).unwrap();
        assert!((lq_norm(&one, 2.0, Weight::Unit, None).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            lq_norm(&ScalarField::zeros(&g), 2.0, Weight::Unit, None).unwrap(),
            0.0
        );
        let x = ScalarField::from_fn(&g, |x, _| x[0]).unwrap();
        let n = lq_norm(&x, 2.0, Weight::Unit, None).unwrap();
        let h = g.h()[0];
        assert!((n - (1.0f64 / 3.0).sqrt()).abs() < h * h, "{n}");
        assert!(lq_norm(&x, 0.5, Weight::Unit, None).is_err());
    }

    #[test]
    fn norm_monotone_in_region_and_q() {
        let g = grid1(21, 11);
        let f = ScalarField::from_fn(&g, |x, t| (7.0 * x[0] + 3.0 * t).sin()).unwrap();
        let half: Vec<bool> = (0..g.n_nodes()).map(|i| i % 3 != 0).collect();
        let full = lq_norm(&f, 1.5, Weight::Unit, None).unwrap();
        let part = lq_norm(&f, 1.5, Weight::Unit, Some(&half)).unwrap();
        assert!(part <= full);
        // unit-measure domain and |f| <= 1: the norm grows with q
        let n1 = lq_norm(&f, 1.0, Weight::Unit, None).unwrap();
        let n2 = lq_norm(&f, 2.0, Weight::Unit, None).unwrap();
        let n4 = lq_norm(&f, 4.0, Weight::Unit, None).unwrap();
        assert!(n1 <= n2 && n2 <= n4);
    }

    #[test]
    fn shift_examples() {
        let g = grid1(11, 2);
        let x = ScalarField::from_fn(&g, |x, _| x[0]).unwrap();
        assert_eq!(shift(&x, &[0.0]).unwrap(), x);
        let h = g.h()[0];
        let sx = shift(&x, &[h]).unwrap();
        for node in 0..g.n_nodes() {
            if sx.is_valid(node) {
                assert!((sx.values()[node] - x.values()[node] - h).abs() < 1e-12);
            }
        }
        assert!(!sx.is_valid(g.node(0, 10)));
        let step =
            ScalarField::from_fn(&g, |x, _| if x[0] >= 0.5 - 1e-12 { 1.0 } else { 0.0 }).unwrap();
        let ss = shift(&step, &[h]).unwrap();
        assert_eq!(ss.values()[g.node(1, 4)], 1.0);
        assert!(shift(&x, &[0.37 * h]).is_err());
    }

    #[test]
    fn invalid_nodes_are_excluded_from_norms() {
        let g = grid1(11, 3);
        let one = ScalarField::from_fn(&g, |_, _| 1.0).unwrap();
        let s = shift_steps(&one, 0, 10);
        // only the x = 0 column survives; it has half space weight
        let n = lq_norm(&s, 1.0, Weight::Unit, None).unwrap();
        assert!((n - 0.5 * g.h()[0]).abs() < 1e-14);
    }

    #[test]
    fn csv_layout() {
        let g = grid1(3, 2);
        let f = ScalarField::from_fn(&g, |x, t| x[0] + t).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &[("u", &f)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,u");
        assert_eq!(lines.len(), 1 + 6);
        assert_eq!(lines[4], "1.0,0.0,1.0");
        assert_eq!(lines[5], "1.0,0.5,1.5");
    }

    #[test]
    fn rejects_non_finite() {
        let g = grid1(3, 2);
        assert!(ScalarField::new(&g, vec![f64::NAN; 6]).is_err());
    }
}

//! Built-in obstacles. Each one carries closed-form derivatives.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::obstacle::{Obstacle, ObstacleModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObstacleId {
    Constant,
    AffineInactive,
    ParabolicHump,
    ShrinkingHump,
    TravelingHump,
}

impl ObstacleId {
    pub const ALL: [ObstacleId; 5] = [
        ObstacleId::Constant,
        ObstacleId::AffineInactive,
        ObstacleId::ParabolicHump,
        ObstacleId::ShrinkingHump,
        ObstacleId::TravelingHump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObstacleId::Constant => "constant",
            ObstacleId::AffineInactive => "affine-inactive",
            ObstacleId::ParabolicHump => "parabolic-hump",
            ObstacleId::ShrinkingHump => "shrinking-hump",
            ObstacleId::TravelingHump => "traveling-hump",
        }
    }

    /// Parameter names and defaults.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            ObstacleId::Constant => &[("value", 0.5)],
            ObstacleId::AffineInactive => &[
                ("slope", 1.0),
                ("offset", 0.0),
                ("depth", 1.0),
                ("rate", 10.0),
            ],
            ObstacleId::ParabolicHump => &[("height", 1.0), ("curvature", 10.0)],
            ObstacleId::ShrinkingHump => &[("amplitude", 0.25), ("rate", 3.0)],
            ObstacleId::TravelingHump => &[
                ("amplitude", 0.25),
                ("width", 0.25),
                ("speed", 0.3),
                ("start", 0.35),
            ],
        }
    }
}

impl fmt::Display for ObstacleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObstacleId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ObstacleId::ALL
            .iter()
            .copied()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Scenario(format!("unknown obstacle id `{s}`")))
    }
}

/// Resolve parameters: defaults overridden by `params`; unknown names are rejected.
pub fn resolve_params(
    id: ObstacleId,
    params: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>> {
    let mut out: BTreeMap<String, f64> = id
        .defaults()
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    for (k, v) in params {
        match out.get_mut(k) {
            Some(slot) => *slot = *v,
            None => {
                return Err(Error::Scenario(format!(
                    "obstacle `{id}` has no parameter `{k}`"
                )))
            }
        }
    }
    Ok(out)
}

/// Build a catalog obstacle on `grid`'s box.
pub fn build(id: ObstacleId, params: &BTreeMap<String, f64>, grid: &Grid) -> Result<Obstacle> {
    let p = resolve_params(id, params)?;
    let box_ = BoxInfo::of(grid);
    let model: Arc<dyn ObstacleModel> = match id {
        ObstacleId::Constant => Arc::new(Constant { value: p["value"] }),
        ObstacleId::AffineInactive => Arc::new(AffineInactive {
            slope: p["slope"],
            offset: p["offset"],
            depth: p["depth"],
            rate: p["rate"],
            sines: SineProduct::new(&box_),
        }),
        ObstacleId::ParabolicHump => Arc::new(ParabolicHump {
            height: p["height"],
            curvature: p["curvature"],
            center: box_.center(),
        }),
        ObstacleId::ShrinkingHump => Arc::new(ShrinkingHump {
            amplitude: p["amplitude"],
            rate: p["rate"],
            sines: SineProduct::new(&box_),
        }),
        ObstacleId::TravelingHump => {
            if p["width"] <= 0.0 {
                return Err(Error::Scenario(
                    "traveling-hump width must be positive".into(),
                ));
            }
            Arc::new(TravelingHump {
                amplitude: p["amplitude"],
                width: p["width"],
                speed: p["speed"],
                start: p["start"],
                center: box_.center(),
            })
        }
    };
    Obstacle::new(model, grid)
}

#[derive(Debug, Clone, Copy)]
struct BoxInfo {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
}

impl BoxInfo {
    fn of(grid: &Grid) -> Self {
        let mut b = BoxInfo {
            dim: grid.dim(),
            lower: [0.0; 2],
            upper: [0.0; 2],
        };
        b.lower[..grid.dim()].copy_from_slice(grid.lower());
        b.upper[..grid.dim()].copy_from_slice(grid.upper());
        b
    }

    fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.lower[0] + self.upper[0]),
            0.5 * (self.lower[1] + self.upper[1]),
        ]
    }
}

/// `S(x) = Π sin(k_i (x_i − a_i))` with `k_i = π / L_i`: positive inside the box,
/// zero on its boundary.
#[derive(Debug, Clone, Copy)]
struct SineProduct {
    dim: usize,
    lower: [f64; 2],
    k: [f64; 2],
}

impl SineProduct {
    fn new(b: &BoxInfo) -> Self {
        let mut k = [0.0; 2];
        for a in 0..b.dim {
            k[a] = PI / (b.upper[a] - b.lower[a]);
        }
        SineProduct {
            dim: b.dim,
            lower: b.lower,
            k,
        }
    }

    fn parts(&self, x: &[f64]) -> ([f64; 2], [f64; 2]) {
        let mut s = [1.0; 2];
        let mut c = [0.0; 2];
        for a in 0..self.dim {
            let arg = self.k[a] * (x[a] - self.lower[a]);
            s[a] = arg.sin();
            c[a] = arg.cos();
        }
        (s, c)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (s, _) = self.parts(x);
        s[..self.dim].iter().product()
    }

    fn grad(&self, x: &[f64], g: &mut [f64]) {
        let (s, c) = self.parts(x);
        for a in 0..self.dim {
            let mut v = self.k[a] * c[a];
            for b in 0..self.dim {
                if b != a {
                    v *= s[b];
                }
            }
            g[a] = v;
        }
    }

    fn hess(&self, x: &[f64], h: &mut [f64]) {
        let (s, c) = self.parts(x);
        let d = self.dim;
        let val: f64 = s[..d].iter().product();
        for a in 0..d {
            for b in 0..d {
                h[a * d + b] = if a == b {
                    -self.k[a] * self.k[a] * val
                } else {
                    self.k[a] * self.k[b] * c[a] * c[b]
                };
            }
        }
    }
}

struct Constant {
    value: f64,
}

impl ObstacleModel for Constant {
    fn id(&self) -> &str {
        "constant"
    }
    fn psi(&self, _x: &[f64], _t: f64) -> f64 {
        self.value
    }
    fn psi_t(&self, _x: &[f64], _t: f64) -> f64 {
        0.0
    }
    fn grad_psi(&self, _x: &[f64], _t: f64, g: &mut [f64]) {
        g.fill(0.0);
    }
    fn hess_psi(&self, _x: &[f64], _t: f64, h: &mut [f64]) {
        h.fill(0.0);
    }
    fn grad_psi_t(&self, _x: &[f64], _t: f64, g: &mut [f64]) {
        g.fill(0.0);
    }
}

/// `ψ = L(x) − depth·(1 − e^{−rate·t})·S(x)` with `L(x) = offset + slope·Σx_i`.
/// Equal to `L` on the parabolic boundary and strictly below it inside, so the
/// affine function `L` is the solution and the obstacle never binds.
struct AffineInactive {
    slope: f64,
    offset: f64,
    depth: f64,
    rate: f64,
    sines: SineProduct,
}

impl AffineInactive {
    fn sigma(&self, t: f64) -> (f64, f64) {
        let e = (-self.rate * t).exp();
        (1.0 - e, self.rate * e)
    }
}

impl ObstacleModel for AffineInactive {
    fn id(&self) -> &str {
        "affine-inactive"
    }
    fn psi(&self, x: &[f64], t: f64) -> f64 {
        let lin = self.offset + self.slope * x.iter().sum::<f64>();
        lin - self.depth * self.sigma(t).0 * self.sines.value(x)
    }
    fn psi_t(&self, x: &[f64], t: f64) -> f64 {
        -self.depth * self.sigma(t).1 * self.sines.value(x)
    }
    fn grad_psi(&self, x: &[f64], t: f64, g: &mut [f64]) {
        self.sines.grad(x, g);
        let s = self.depth * self.sigma(t).0;
        for v in g.iter_mut() {
            *v = self.slope - s * *v;
        }
    }
    fn hess_psi(&self, x: &[f64], t: f64, h: &mut [f64]) {
        self.sines.hess(x, h);
        let s = self.depth * self.sigma(t).0;
        h.iter_mut().for_each(|v| *v *= -s);
    }
    fn grad_psi_t(&self, x: &[f64], t: f64, g: &mut [f64]) {
        self.sines.grad(x, g);
        let s = self.depth * self.sigma(t).1;
        g.iter_mut().for_each(|v| *v *= -s);
    }
}

/// Stationary concave paraboloid `height − curvature·|x − c|²`.
struct ParabolicHump {
    height: f64,
    curvature: f64,
    center: [f64; 2],
}

impl ObstacleModel for ParabolicHump {
    fn id(&self) -> &str {
        "parabolic-hump"
    }
    fn psi(&self, x: &[f64], _t: f64) -> f64 {
        let r2: f64 = x
            .iter()
            .enumerate()
            .map(|(a, v)| (v - self.center[a]).powi(2))
            .sum();
        self.height - self.curvature * r2
    }
    fn psi_t(&self, _x: &[f64], _t: f64) -> f64 {
        0.0
    }
    fn grad_psi(&self, x: &[f64], _t: f64, g: &mut [f64]) {
        for a in 0..x.len() {
            g[a] = -2.0 * self.curvature * (x[a] - self.center[a]);
        }
    }
    fn hess_psi(&self, x: &[f64], _t: f64, h: &mut [f64]) {
        let d = x.len();
        for a in 0..d {
            for b in 0..d {
                h[a * d + b] = if a == b { -2.0 * self.curvature } else { 0.0 };
            }
        }
    }
    fn grad_psi_t(&self, _x: &[f64], _t: f64, g: &mut [f64]) {
        g.fill(0.0);
    }
}

/// `amplitude · e^{−rate·t} · S(x)`: a hump decaying in time, zero on `∂Ω`.
struct ShrinkingHump {
    amplitude: f64,
    rate: f64,
    sines: SineProduct,
}

impl ShrinkingHump {
    fn scale(&self, t: f64) -> f64 {
        self.amplitude * (-self.rate * t).exp()
    }
}

impl ObstacleModel for ShrinkingHump {
    fn id(&self) -> &str {
        "shrinking-hump"
    }
    fn psi(&self, x: &[f64], t: f64) -> f64 {
        self.scale(t) * self.sines.value(x)
    }
    fn psi_t(&self, x: &[f64], t: f64) -> f64 {
        -self.rate * self.psi(x, t)
    }
    fn grad_psi(&self, x: &[f64], t: f64, g: &mut [f64]) {
        self.sines.grad(x, g);
        let s = self.scale(t);
        g.iter_mut().for_each(|v| *v *= s);
    }
    fn hess_psi(&self, x: &[f64], t: f64, h: &mut [f64]) {
        self.sines.hess(x, h);
        let s = self.scale(t);
        h.iter_mut().for_each(|v| *v *= s);
    }
    fn grad_psi_t(&self, x: &[f64], t: f64, g: &mut [f64]) {
        self.grad_psi(x, t, g);
        g.iter_mut().for_each(|v| *v *= -self.rate);
    }
}

/// Gaussian `amplitude · exp(−|x − c(t)|²/width²)` whose center moves along the
/// first axis, `c_0(t) = start + speed·t`; other axes are centered in the box.
struct TravelingHump {
    amplitude: f64,
    width: f64,
    speed: f64,
    start: f64,
    center: [f64; 2],
}

impl TravelingHump {
    fn offsets(&self, x: &[f64], t: f64) -> [f64; 2] {
        let mut r = [0.0; 2];
        r[0] = x[0] - (self.start + self.speed * t);
        for a in 1..x.len() {
            r[a] = x[a] - self.center[a];
        }
        r
    }

    fn gauss(&self, x: &[f64], t: f64) -> f64 {
        let r = self.offsets(x, t);
        let r2: f64 = r[..x.len()].iter().map(|v| v * v).sum();
        self.amplitude * (-r2 / (self.width * self.width)).exp()
    }
}

impl ObstacleModel for TravelingHump {
    fn id(&self) -> &str {
        "traveling-hump"
    }
    fn psi(&self, x: &[f64], t: f64) -> f64 {
        self.gauss(x, t)
    }
    fn psi_t(&self, x: &[f64], t: f64) -> f64 {
        let r = self.offsets(x, t);
        let w2 = self.width * self.width;
        2.0 * r[0] * self.speed / w2 * self.gauss(x, t)
    }
    fn grad_psi(&self, x: &[f64], t: f64, g: &mut [f64]) {
        let r = self.offsets(x, t);
        let w2 = self.width * self.width;
        let v = self.gauss(x, t);
        for a in 0..x.len() {
            g[a] = -2.0 * r[a] / w2 * v;
        }
    }
    fn hess_psi(&self, x: &[f64], t: f64, h: &mut [f64]) {
        let d = x.len();
        let r = self.offsets(x, t);
        let w2 = self.width * self.width;
        let v = self.gauss(x, t);
        for a in 0..d {
            for b in 0..d {
                let delta = if a == b { 1.0 } else { 0.0 };
                h[a * d + b] = (4.0 * r[a] * r[b] / (w2 * w2) - 2.0 * delta / w2) * v;
            }
        }
    }
    fn grad_psi_t(&self, x: &[f64], t: f64, g: &mut [f64]) {
        // ψ_t = q ψ with q = 2 speed r_0 / w²
        let r = self.offsets(x, t);
        let w2 = self.width * self.width;
        let v = self.gauss(x, t);
        let q = 2.0 * self.speed * r[0] / w2;
        for a in 0..x.len() {
            let dq = if a == 0 { 2.0 * self.speed / w2 } else { 0.0 };
            g[a] = (dq + q * (-2.0 * r[a] / w2)) * v;
        }
    }
}

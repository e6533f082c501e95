//! Randomized checks of the vector inequalities behind the regularity estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::pflux::{lipschitz_bound_lhs_rhs, monotonicity_lhs_rhs, young3};

/// Relative slack granted to `rhs` before a sample counts as a violation.
pub const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Monotonicity,
    Lipschitz,
    Young,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Monotonicity, Suite::Lipschitz, Suite::Young];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Monotonicity => "monotonicity",
            Suite::Lipschitz => "lipschitz",
            Suite::Young => "young",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub trials: usize,
    pub violations: usize,
    /// `min (rhs − lhs) / max(|lhs|, |rhs|)` over all samples.
    pub worst_relative_slack: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn vector(rng: &mut ChaCha8Rng, dim: usize, out: &mut [f64; 3]) {
    for v in out.iter_mut().take(dim) {
        let z: f64 = rng.sample(StandardNormal);
        *v = z * 10f64.powf(rng.random_range(-3.0..3.0));
    }
}

/// Run `trials` samples of `suite` from `seed`. With `swap`, the two sides are
/// exchanged, which must produce violations.
pub fn run_suite(suite: Suite, trials: usize, seed: u64, swap: bool) -> Result<SuiteReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (suite as u64).wrapping_mul(0x9e37_79b9));
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
    for _ in 0..trials {
        let (lhs, rhs) = match suite {
            Suite::Monotonicity | Suite::Lipschitz => {
                let dim = rng.random_range(1..=3);
                vector(&mut rng, dim, &mut a);
                vector(&mut rng, dim, &mut b);
                let p = rng.random_range(2.0..=6.0);
                if suite == Suite::Monotonicity {
                    monotonicity_lhs_rhs(&a[..dim], &b[..dim], p)
                } else {
                    lipschitz_bound_lhs_rhs(&a[..dim], &b[..dim], p)
                }
            }
            Suite::Young => {
                let mut abc = [0.0; 3];
                vector(&mut rng, 3, &mut abc);
                let p = loop {
                    let p = rng.random_range(2.0..=6.0);
                    if p > 2.0 {
                        break p;
                    }
                };
                let eps_y = 10f64.powf(rng.random_range(-1.0..=1.0));
                young3(abc[0].abs(), abc[1].abs(), abc[2].abs(), p, eps_y)?
            }
        };
        let (lhs, rhs) = if swap { (rhs, lhs) } else { (lhs, rhs) };
        if lhs > rhs * (1.0 + REL_TOL) {
            violations += 1;
        }
        let slack = (rhs - lhs) / rhs.abs().max(lhs.abs()).max(f64::MIN_POSITIVE);
        worst = worst.min(slack);
    }
    Ok(SuiteReport {
        suite,
        trials,
        violations,
        worst_relative_slack: worst,
    })
}

/// All suites with the same trial count and seed.
pub fn run_all(trials: usize, seed: u64, swap: bool) -> Result<Vec<SuiteReport>> {
    Suite::ALL
        .iter()
        .map(|&s| run_suite(s, trials, seed, swap))
        .collect()
}

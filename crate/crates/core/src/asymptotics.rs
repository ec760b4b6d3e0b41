//! Borderless ring model, the flat area of long optimal chains and the
//! uniform-backoff contest on a circle that explains the 1/3 limit.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fairness::{maximize, OptResult};
use crate::model::ChainParams;
use crate::solver::{newton_solve, SolveOptions};

/// Common emission probability of every pair on a ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSolution {
    pub x: f64,
}

/// Root in `[0, 1)` of `x = α (1 - x)²`, for `0 < α ≤ 1`.
pub fn ring_fixed_point(alpha: f64) -> Result<RingSolution> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
        });
    }
    // (2α + 1 - √(4α + 1)) / (2α), rewritten to avoid cancellation for small α
    let s = sqrt(4.0 * alpha + 1.0);
    let x = 2.0 * alpha / (2.0 * alpha + 1.0 + s);
    Ok(RingSolution { x })
}

/// `α = x / (1 - x)²`, the inverse of [`ring_fixed_point`].
pub fn alpha_for_ring_prob(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain {
            what: "ring probability",
            value: x,
        });
    }
    Ok(x / ((1.0 - x) * (1.0 - x)))
}

/// Tolerance on `α̂` used by [`flat_value`] and [`optimal_alpha_curve`].
pub const ALPHA_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct FlatValue {
    pub alpha_hat: f64,
    pub central_prob: f64,
    pub optimum: OptResult,
}

/// Optimal `α̂(n)` and the emission probability of the central pair at it.
pub fn flat_value(n: usize) -> Result<FlatValue> {
    if n < 3 {
        return Err(Error::Domain {
            what: "chain length",
            value: n as f64,
        });
    }
    let optimum = maximize(n, ALPHA_TOL)?;
    let x = newton_solve(
        &ChainParams::new(n, optimum.alpha_hat)?,
        &SolveOptions::default(),
    )?;
    Ok(FlatValue {
        alpha_hat: optimum.alpha_hat,
        central_prob: x.central(),
        optimum,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub n: usize,
    pub alpha_hat: Result<f64>,
}

/// `α̂(n)` for each requested chain length, in input order.
pub fn optimal_alpha_curve(ns: &[usize]) -> Vec<CurveRow> {
    ns.iter()
        .map(|&n| CurveRow {
            n,
            alpha_hat: if n < 2 {
                Err(Error::Domain {
                    what: "chain length",
                    value: n as f64,
                })
            } else {
                maximize(n, ALPHA_TOL).map(|r| r.alpha_hat)
            },
        })
        .collect()
}

/// Per-pair outcome of [`circle_backoff_mc`].
#[derive(Debug, Clone, PartialEq)]
pub struct CircleWins {
    pub trials: u64,
    pub wins: Vec<u64>,
}

impl CircleWins {
    pub fn frequencies(&self) -> Vec<f64> {
        let t = self.trials as f64;
        self.wins.iter().map(|&w| w as f64 / t).collect()
    }

    fn merge(&mut self, other: &CircleWins) {
        self.trials += other.trials;
        for (a, b) in self.wins.iter_mut().zip(&other.wins) {
            *a += b;
        }
    }
}

/// Each trial draws one uniform per pair; a pair wins when its draw is
/// strictly below both neighbours' on the circle. Uses ChaCha8 seeded
/// with `seed`.
pub fn circle_backoff_mc(n_pairs: usize, trials: u64, seed: u64) -> Result<CircleWins> {
    circle_backoff_shard(n_pairs, trials, seed, 0)
}

/// One shard of a split run: ChaCha8 keyed by `seed` on stream `shard`.
/// Shards of the same seed are independent and can be summed in any order.
pub fn circle_backoff_shard(
    n_pairs: usize,
    trials: u64,
    seed: u64,
    shard: u64,
) -> Result<CircleWins> {
    if n_pairs < 3 {
        return Err(Error::Domain {
            what: "circle size",
            value: n_pairs as f64,
        });
    }
    if trials == 0 {
        return Err(Error::Domain {
            what: "trials",
            value: 0.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    let mut u = vec![0.0f64; n_pairs];
    let mut wins = vec![0u64; n_pairs];
    for _ in 0..trials {
        for v in u.iter_mut() {
            *v = rng.gen::<f64>();
        }
        for i in 0..n_pairs {
            let left = u[(i + n_pairs - 1) % n_pairs];
            let right = u[(i + 1) % n_pairs];
            if u[i] < left && u[i] < right {
                wins[i] += 1;
            }
        }
    }
    Ok(CircleWins { trials, wins })
}

/// Sums shards `0..shards` of the same seed; `trials` is split evenly.
pub fn circle_backoff_sharded(
    n_pairs: usize,
    trials: u64,
    seed: u64,
    shards: u64,
) -> Result<CircleWins> {
    let shards = shards.max(1);
    let mut total = CircleWins {
        trials: 0,
        wins: vec![0; n_pairs],
    };
    for s in 0..shards {
        let share = trials / shards + u64::from(s < trials % shards);
        if share > 0 {
            total.merge(&circle_backoff_shard(n_pairs, share, seed, s)?);
        }
    }
    Ok(total)
}

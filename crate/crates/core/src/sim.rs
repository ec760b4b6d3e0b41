//! Slot-level simulation of the interaction process
//! `y_i = z_i (1 - y_{i-1}) (1 - y_{i+1})` and an exact stationary oracle
//! for short chains.
//!
//! A slot updates sites one at a time: the chosen pair draws
//! `z ~ Bernoulli(α)` and emits only if both neighbours are idle, so the
//! emitting set is always an independent set of the path. Both update
//! policies leave the hard-core measure `π(S) ∝ (α / (1 - α))^|S|`
//! invariant.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64`, which is portable across platforms.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{check_alpha, ChainParams};
use crate::solver::{newton_solve, SolveOptions};

/// Number of batches used for the batch-means standard error.
pub const BATCHES: usize = 32;
/// Longest chain accepted by [`exact_stationary`].
pub const EXACT_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdatePolicy {
    /// One uniformly chosen site per slot.
    #[default]
    RandomSingleSite,
    /// Every site once per slot, in a fresh random order.
    SynchronousRandomOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub alpha: f64,
    pub steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub policy: UpdatePolicy,
}

impl SimConfig {
    /// Configuration with the default burn-in of 10% of the steps.
    pub fn new(n: usize, alpha: f64, steps: u64, seed: u64) -> Self {
        Self {
            n,
            alpha,
            steps,
            burn_in: steps / 10,
            seed,
            policy: UpdatePolicy::RandomSingleSite,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ChainParams::new(self.n, self.alpha)?;
        if self.burn_in >= self.steps {
            return Err(Error::Invalid("burn-in must be shorter than the run"));
        }
        if ((self.steps - self.burn_in) as usize) < BATCHES {
            return Err(Error::Invalid("too few recorded slots for batch means"));
        }
        Ok(())
    }
}

/// Emission state of every pair in one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotState {
    y: Vec<bool>,
}

impl SlotState {
    pub fn idle(n: usize) -> Self {
        Self { y: vec![false; n] }
    }

    pub fn new(y: Vec<bool>) -> Result<Self> {
        let s = Self { y };
        if s.is_independent() {
            Ok(s)
        } else {
            Err(Error::Invalid("adjacent pairs emitting in the same slot"))
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// No two adjacent pairs emit.
    pub fn is_independent(&self) -> bool {
        self.y.windows(2).all(|w| !(w[0] && w[1]))
    }

    fn neighbours_idle(&self, i: usize) -> bool {
        let left = i > 0 && self.y[i - 1];
        let right = i + 1 < self.y.len() && self.y[i + 1];
        !left && !right
    }

    /// Applies the emission rule at site `i` with draw `z`; returns whether
    /// the site changed.
    pub fn update_site(&mut self, i: usize, z: bool) -> bool {
        let new = z && self.neighbours_idle(i);
        let changed = self.y[i] != new;
        self.y[i] = new;
        changed
    }
}

/// Advances `state` by one slot under `config.policy`.
pub fn sim_step<R: Rng + ?Sized>(
    state: &mut SlotState,
    config: &SimConfig,
    rng: &mut R,
) -> Result<()> {
    if state.len() != config.n {
        return Err(Error::DimensionMismatch {
            expected: config.n,
            actual: state.len(),
        });
    }
    if !state.is_independent() {
        return Err(Error::Invalid("adjacent pairs emitting in the same slot"));
    }
    let mut order = Vec::new();
    step_with(state, config, rng, &mut order, |_, _| {});
    Ok(())
}

/// Core slot update; `on_change(site, now_emitting)` sees every flip.
fn step_with<R: Rng + ?Sized, F: FnMut(usize, bool)>(
    state: &mut SlotState,
    config: &SimConfig,
    rng: &mut R,
    order: &mut Vec<usize>,
    mut on_change: F,
) {
    match config.policy {
        UpdatePolicy::RandomSingleSite => {
            let i = rng.gen_range(0..config.n);
            let z = rng.gen_bool(config.alpha);
            if state.update_site(i, z) {
                on_change(i, state.y[i]);
            }
        }
        UpdatePolicy::SynchronousRandomOrder => {
            order.clear();
            order.extend(0..config.n);
            order.shuffle(rng);
            for &i in order.iter() {
                let z = rng.gen_bool(config.alpha);
                if state.update_site(i, z) {
                    on_change(i, state.y[i]);
                }
            }
        }
    }
    debug_assert!(state.is_independent());
}

/// Time-averaged emission frequencies with batch-means standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalEstimate {
    pub x_hat: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Runs the slot process from the all-idle state and averages `y` over
/// the slots after burn-in. Deterministic in `config.seed`.
pub fn simulate(config: &SimConfig) -> Result<MarginalEstimate> {
    config.validate()?;
    let n = config.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = SlotState::idle(n);
    let mut order = Vec::with_capacity(n);

    for _ in 0..config.burn_in {
        step_with(&mut state, config, &mut rng, &mut order, |_, _| {});
    }

    // Occupancy is integrated lazily: `since[i]` is the slot at which site
    // i last switched on, flushed at every batch boundary.
    let recorded = config.steps - config.burn_in;
    let mut batch_means = vec![[0.0f64; BATCHES]; n];
    let mut since = vec![0u64; n];
    let mut busy = vec![0u64; n];
    let mut t = 0u64;
    for b in 0..BATCHES {
        let end = recorded * (b as u64 + 1) / BATCHES as u64;
        let start = t;
        for (i, s) in since.iter_mut().enumerate() {
            busy[i] = 0;
            *s = start;
        }
        while t < end {
            // the state reached after slot t is held during slot t
            step_with(&mut state, config, &mut rng, &mut order, |i, on| {
                if on {
                    since[i] = t;
                } else {
                    busy[i] += t - since[i];
                }
            });
            t += 1;
        }
        let len = (end - start) as f64;
        for i in 0..n {
            if state.y[i] {
                busy[i] += end - since[i];
            }
            batch_means[i][b] = busy[i] as f64 / len;
        }
    }

    let mut x_hat = Vec::with_capacity(n);
    let mut stderr = Vec::with_capacity(n);
    for means in &batch_means {
        let m = means.iter().sum::<f64>() / BATCHES as f64;
        let var = means.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (BATCHES - 1) as f64;
        x_hat.push(m);
        stderr.push(libm::sqrt(var / BATCHES as f64));
    }
    Ok(MarginalEstimate { x_hat, stderr })
}

/// Independent sets of the path on `n` vertices, as bit masks.
fn independent_sets(n: usize) -> Vec<u32> {
    (0u32..1 << n).filter(|m| m & (m >> 1) == 0).collect()
}

/// Stationary per-pair emission probabilities of the single-site chain,
/// computed by power iteration on the exact transition kernel.
pub fn exact_stationary(n: usize, alpha: f64) -> Result<Vec<f64>> {
    if n > EXACT_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: EXACT_MAX_N,
        });
    }
    ChainParams::new(n, alpha)?;
    let states = independent_sets(n);
    let index = |m: u32| states.binary_search(&m).expect("independent set");

    // Sparse kernel rows: (target, probability), self loops folded in.
    let pick = 1.0 / n as f64;
    let mut kernel: Vec<Vec<(usize, f64)>> = Vec::with_capacity(states.len());
    for &m in &states {
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut stay = 0.0;
        for i in 0..n {
            let bit = 1u32 << i;
            let neigh = (bit << 1) | (bit >> 1);
            if m & neigh != 0 {
                stay += pick;
                continue;
            }
            let on = m | bit;
            let off = m & !bit;
            for (target, p) in [(on, alpha), (off, 1.0 - alpha)] {
                if target == m {
                    stay += pick * p;
                } else {
                    row.push((index(target), pick * p));
                }
            }
        }
        row.push((index(m), stay));
        kernel.push(row);
    }

    let k = states.len();
    let mut pi = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    let mut converged = false;
    for _ in 0..1_000_000 {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (s, row) in kernel.iter().enumerate() {
            for &(t, p) in row {
                next[t] += pi[s] * p;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let change: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        core::mem::swap(&mut pi, &mut next);
        if change <= 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: 1_000_000,
            residual: f64::NAN,
            last: pi,
        });
    }

    let mut marginals = vec![0.0; n];
    for (&m, p) in states.iter().zip(&pi) {
        for (i, x) in marginals.iter_mut().enumerate() {
            if m & (1 << i) != 0 {
                *x += p;
            }
        }
    }
    Ok(marginals)
}

/// `‖exact_stationary - x_meanfield‖∞`, the error of neglecting
/// neighbour correlations.
pub fn meanfield_gap(n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let exact = exact_stationary(n, alpha)?;
    let mf = newton_solve(&ChainParams::new(n, alpha)?, &SolveOptions::default())?;
    Ok(exact
        .iter()
        .zip(mf.iter())
        .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Marginals of the hard-core measure by direct enumeration.
    fn hard_core(n: usize, alpha: f64) -> Vec<f64> {
        let lambda = alpha / (1.0 - alpha);
        let mut z = 0.0;
        let mut m = vec![0.0; n];
        for s in independent_sets(n) {
            let w = libm::pow(lambda, s.count_ones() as f64);
            z += w;
            for (i, v) in m.iter_mut().enumerate() {
                if s & (1 << i) != 0 {
                    *v += w;
                }
            }
        }
        m.iter().map(|v| v / z).collect()
    }

    #[test]
    fn blocked_site_stays_idle() {
        for z in [false, true] {
            let mut s = SlotState::new(vec![true, false, false]).unwrap();
            s.update_site(1, z);
            assert!(!s.bits()[1]);
        }
    }

    #[test]
    fn free_sites_follow_the_draw() {
        let mut s = SlotState::idle(1);
        s.update_site(0, true);
        assert_eq!(s.bits(), &[true]);
        let mut s = SlotState::idle(2);
        s.update_site(0, true);
        assert_eq!(s.bits(), &[true, false]);
    }

    #[test]
    fn invalid_states_are_rejected() {
        assert!(SlotState::new(vec![true, true, false]).is_err());
        let cfg = SimConfig::new(3, 0.5, 100, 1);
        let mut bad = SlotState {
            y: vec![false, true, true],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sim_step(&mut bad, &cfg, &mut rng).is_err());
        let mut short = SlotState::idle(2);
        assert!(sim_step(&mut short, &cfg, &mut rng).is_err());
    }

    #[test]
    fn invariant_holds_every_slot() {
        for policy in [
            UpdatePolicy::RandomSingleSite,
            UpdatePolicy::SynchronousRandomOrder,
        ] {
            let cfg = SimConfig {
                policy,
                ..SimConfig::new(5, 0.5, 10_000, 3)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut s = SlotState::idle(5);
            for _ in 0..cfg.steps {
                sim_step(&mut s, &cfg, &mut rng).unwrap();
                assert!(s.is_independent());
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0, 0.5, 1000, 0).validate().is_err());
        assert!(SimConfig::new(3, 1.0, 1000, 0).validate().is_err());
        let mut c = SimConfig::new(3, 0.5, 1000, 0);
        c.burn_in = 1000;
        assert!(c.validate().is_err());
        assert!(SimConfig::new(3, 0.5, 20, 0).validate().is_err());
    }

    #[test]
    fn exact_matches_hard_core_measure() {
        for n in 1..=EXACT_MAX_N {
            for a in [0.2, 0.5, 0.862] {
                let e = exact_stationary(n, a).unwrap();
                let h = hard_core(n, a);
                for (u, v) in e.iter().zip(&h) {
                    assert!((u - v).abs() < 1e-10, "n={n} a={a}");
                }
                for i in 0..n {
                    assert!((e[i] - e[n - 1 - i]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn exact_single_pair_is_alpha() {
        for a in [0.1, 0.37, 0.9] {
            assert!((exact_stationary(1, a).unwrap()[0] - a).abs() < 1e-15);
        }
        assert!(matches!(
            exact_stationary(13, 0.5),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn gap_vanishes_without_neighbours() {
        for a in [0.2, 0.6, 0.95] {
            assert!(meanfield_gap(1, a).unwrap() < 1e-14);
        }
    }

    #[test]
    fn gap_for_two_pairs_is_zero() {
        // For two pairs both the hard-core marginal and the mean-field
        // solution equal α / (1 + α).
        let g = meanfield_gap(2, 0.5).unwrap();
        assert!(g < 1e-12, "{g}");
    }

    #[test]
    fn gap_is_positive_for_three_pairs() {
        let g = meanfield_gap(3, 0.862).unwrap();
        let exact = exact_stationary(3, 0.862).unwrap();
        let mf = crate::model::closed_form_n3(0.862).unwrap();
        let direct = exact
            .iter()
            .zip(mf.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!((g - direct).abs() < 1e-10);
        assert!(g > 1e-3);
    }

    #[test]
    fn single_pair_simulation_is_bernoulli() {
        let est = simulate(&SimConfig::new(1, 0.6, 1_000_000, 11)).unwrap();
        assert!((est.x_hat[0] - 0.6).abs() <= 3.0 * est.stderr[0]);
    }

    #[test]
    fn two_pair_simulation_matches_exact() {
        let exact = exact_stationary(2, 0.8).unwrap();
        let est = simulate(&SimConfig::new(2, 0.8, 1_000_000, 5)).unwrap();
        for i in 0..2 {
            assert!((est.x_hat[i] - exact[i]).abs() <= 3.0 * est.stderr[i]);
        }
    }

    #[test]
    fn simulation_is_symmetric_and_reproducible() {
        let cfg = SimConfig::new(6, 0.7, 1_000_000, 21);
        let a = simulate(&cfg).unwrap();
        assert_eq!(a, simulate(&cfg).unwrap());
        for i in 0..6 {
            let se = a.stderr[i].max(a.stderr[5 - i]);
            assert!((a.x_hat[i] - a.x_hat[5 - i]).abs() <= 4.0 * se);
        }
    }

    #[test]
    fn synchronous_policy_has_same_marginals() {
        let cfg = SimConfig {
            policy: UpdatePolicy::SynchronousRandomOrder,
            ..SimConfig::new(4, 0.6, 200_000, 8)
        };
        let est = simulate(&cfg).unwrap();
        let exact = exact_stationary(4, 0.6).unwrap();
        for i in 0..4 {
            assert!((est.x_hat[i] - exact[i]).abs() <= 4.0 * est.stderr[i]);
        }
    }
}

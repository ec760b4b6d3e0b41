//! Normalization of measured per-pair throughputs and least-squares
//! fitting of `α`.
//!
//! Over a window of length `T` pair `i` sends for `x_i T` seconds at a rate
//! that is the same for every pair, so `r_i / r_1 = x_i / x_1` and rates in
//! any unit can be compared with the model after dividing by pair 1.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::ChainParams;
use crate::scalar::golden_max;
use crate::solver::{solve, Method, SolveOptions};

/// Measured rates of pairs `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputTrace {
    rates: Vec<f64>,
    pub label: String,
}

impl ThroughputTrace {
    pub fn new(rates: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if rates.len() < 2 {
            return Err(Error::Domain {
                what: "trace length",
                value: rates.len() as f64,
            });
        }
        if let Some(&bad) = rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(Error::Domain {
                what: "rate",
                value: bad,
            });
        }
        Ok(Self {
            rates,
            label: label.into(),
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

/// Reference used to normalize a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide by the first (border) pair.
    #[default]
    FirstPair,
    /// Divide by the largest component.
    Max,
}

fn normalize_slice(v: &[f64], how: Normalization) -> Result<Vec<f64>> {
    let anchor = match how {
        Normalization::FirstPair => v[0],
        Normalization::Max => v.iter().copied().fold(0.0, f64::max),
    };
    if !(anchor > 0.0) {
        return Err(Error::Normalization);
    }
    Ok(v.iter().map(|r| r / anchor).collect())
}

/// `ρ_i = r_i / r_1`.
pub fn normalize(trace: &ThroughputTrace) -> Result<Vec<f64>> {
    normalize_slice(&trace.rates, Normalization::FirstPair)
}

pub fn normalize_by(trace: &ThroughputTrace, how: Normalization) -> Result<Vec<f64>> {
    normalize_slice(&trace.rates, how)
}

/// Model profile `x(α)` normalized the same way as the data.
pub fn model_profile(n: usize, alpha: f64, how: Normalization, method: Method) -> Result<Vec<f64>> {
    let x = solve(
        &ChainParams::new(n, alpha)?,
        method,
        &SolveOptions::default(),
    )?;
    normalize_slice(&x, how)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub alpha_fit: f64,
    /// Sum of squared residuals at `alpha_fit`.
    pub sse: f64,
    /// Observed minus model, per pair.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub lo: f64,
    pub hi: f64,
    pub normalization: Normalization,
    pub method: Method,
    /// Final golden-section bracket width.
    pub width: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            lo: 0.05,
            hi: 0.99,
            normalization: Normalization::FirstPair,
            method: Method::Newton,
            width: 1e-4,
        }
    }
}

/// Points of the grid scan that seeds the golden-section bracket.
const FIT_GRID: usize = 99;

fn residuals(observed: &[f64], alpha: f64, opts: &FitOptions) -> Result<Vec<f64>> {
    let model = model_profile(observed.len(), alpha, opts.normalization, opts.method)?;
    Ok(observed.iter().zip(&model).map(|(o, m)| o - m).collect())
}

fn sse_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Least-squares `α` on `[lo, hi]` with default options otherwise.
pub fn fit_alpha(trace: &ThroughputTrace, lo: f64, hi: f64) -> Result<FitResult> {
    fit_alpha_with(
        trace,
        &FitOptions {
            lo,
            hi,
            ..FitOptions::default()
        },
    )
}

/// Minimizes `Σ (model_i(α) - ρ_i)²`: a grid scan brackets the best
/// point, golden-section search narrows it. Values of `α` where the chain
/// cannot be solved are skipped.
pub fn fit_alpha_with(trace: &ThroughputTrace, opts: &FitOptions) -> Result<FitResult> {
    if !(opts.lo > 0.0 && opts.lo < opts.hi && opts.hi < 1.0) {
        return Err(Error::Invalid("fit bounds must satisfy 0 < lo < hi < 1"));
    }
    let observed = normalize_by(trace, opts.normalization)?;
    let sse = |a: f64| {
        residuals(&observed, a, opts)
            .map(|r| sse_of(&r))
            .unwrap_or(f64::INFINITY)
    };

    let step = (opts.hi - opts.lo) / (FIT_GRID - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..FIT_GRID)
        .map(|k| {
            let a = opts.lo + step * k as f64;
            (a, sse(a))
        })
        .collect();
    let (best, _) = grid
        .iter()
        .enumerate()
        .filter(|(_, (_, s))| s.is_finite())
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .ok_or(Error::FitFailed)?;

    let lo = grid[best.saturating_sub(1)].0;
    let hi = grid[(best + 1).min(FIT_GRID - 1)].0;
    let bracket = golden_max(|a| Ok(-sse(a)), lo, hi, opts.width)?;
    let mut alpha_fit = bracket.mid();
    let mut res = residuals(&observed, alpha_fit, opts);
    if res.is_err() {
        alpha_fit = grid[best].0;
        res = residuals(&observed, alpha_fit, opts);
    }
    let residuals = res?;
    Ok(FitResult {
        alpha_fit,
        sse: sse_of(&residuals),
        residuals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    /// 1-based pair index.
    pub pair: usize,
    pub observed: f64,
    pub model: f64,
    pub residual: f64,
}

/// Per-pair observed and model profiles at `alpha`, both normalized.
pub fn compare_normalized(
    trace: &ThroughputTrace,
    alpha: f64,
    how: Normalization,
) -> Result<Vec<CompareRow>> {
    let observed = normalize_by(trace, how)?;
    let model = model_profile(trace.len(), alpha, how, Method::Newton)?;
    Ok(observed
        .iter()
        .zip(&model)
        .enumerate()
        .map(|(i, (&o, &m))| CompareRow {
            pair: i + 1,
            observed: o,
            model: m,
            residual: o - m,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn model_trace(n: usize, alpha: f64, scale: f64) -> ThroughputTrace {
        let x = solve(
            &ChainParams::new(n, alpha).unwrap(),
            Method::Newton,
            &SolveOptions::default(),
        )
        .unwrap();
        ThroughputTrace::new(x.iter().map(|v| v * scale).collect(), "model").unwrap()
    }

    #[test]
    fn normalize_examples() {
        let t = ThroughputTrace::new(vec![1.55, 0.04, 1.55], "ns-2").unwrap();
        let rho = normalize(&t).unwrap();
        assert_eq!(rho[0], 1.0);
        assert!((rho[1] - 0.0258).abs() < 1e-4);
        assert_eq!(rho[2], 1.0);
        let t = ThroughputTrace::new(vec![3.0; 5], "flat").unwrap();
        assert_eq!(normalize(&t).unwrap(), vec![1.0; 5]);
    }

    #[test]
    fn normalize_requires_positive_anchor() {
        let t = ThroughputTrace::new(vec![0.0, 1.0], "x").unwrap();
        assert_eq!(normalize(&t), Err(Error::Normalization));
        assert_eq!(
            normalize_by(&t, Normalization::Max).unwrap(),
            vec![0.0, 1.0]
        );
        assert!(ThroughputTrace::new(vec![1.0], "short").is_err());
        assert!(ThroughputTrace::new(vec![1.0, -1.0], "neg").is_err());
    }

    #[test]
    fn normalize_is_scale_invariant() {
        let t = model_trace(7, 0.6, 1.0);
        let scaled = model_trace(7, 0.6, 1234.5);
        let a = normalize(&t).unwrap();
        let b = normalize(&scaled).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
        let x = t.rates();
        for (i, v) in a.iter().enumerate() {
            assert!((v - x[i] / x[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn recovers_alpha_from_model_data() {
        let t = model_trace(6, 0.75, 2.0);
        let fit = fit_alpha(&t, 0.05, 0.99).unwrap();
        assert!((fit.alpha_fit - 0.75).abs() < 1e-3);
        assert!(fit.sse < 1e-8);
        assert!((fit.sse - fit.residuals.iter().map(|r| r * r).sum::<f64>()).abs() < 1e-18);
    }

    #[test]
    fn three_pair_ns2_trace() {
        let t = ThroughputTrace::new(vec![1.55, 0.04, 1.55], "ns-2").unwrap();
        let fit = fit_alpha(&t, 0.05, 0.99).unwrap();
        assert!((fit.alpha_fit - 0.862).abs() < 0.02, "{}", fit.alpha_fit);
    }

    #[test]
    fn max_normalization_fits_too() {
        let t = model_trace(8, 0.5, 1.0);
        let opts = FitOptions {
            normalization: Normalization::Max,
            ..FitOptions::default()
        };
        assert!((fit_alpha_with(&t, &opts).unwrap().alpha_fit - 0.5).abs() < 1e-3);
    }

    #[test]
    fn sse_agrees_between_solvers() {
        let t = ThroughputTrace::new(vec![1.0, 0.3, 0.6, 0.35, 0.55], "x").unwrap();
        for a in [0.3, 0.6, 0.862] {
            let nt = FitOptions::default();
            let fp = FitOptions {
                method: Method::FixedPoint,
                ..nt
            };
            let rho = normalize(&t).unwrap();
            let s1 = sse_of(&residuals(&rho, a, &nt).unwrap());
            let s2 = sse_of(&residuals(&rho, a, &fp).unwrap());
            assert!((s1 - s2).abs() <= 1e-9);
        }
    }

    #[test]
    fn bad_bounds_are_rejected() {
        let t = model_trace(4, 0.5, 1.0);
        assert!(fit_alpha(&t, 0.0, 0.9).is_err());
        assert!(fit_alpha(&t, 0.6, 0.5).is_err());
        assert!(fit_alpha(&t, 0.5, 1.0).is_err());
    }

    #[test]
    fn comparison_rows() {
        let t = model_trace(5, 0.7, 3.0);
        let rows = compare_normalized(&t, 0.7, Normalization::FirstPair).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0].pair, 1);
        assert!(rows.iter().all(|r| r.residual.abs() < 1e-12));
    }

    #[test]
    fn even_pairs_decay_toward_the_border() {
        let t = model_trace(100, 0.6826, 1.0);
        let rows = compare_normalized(&t, 0.6826, Normalization::FirstPair).unwrap();
        assert!(rows[1].model < rows[3].model && rows[3].model < rows[5].model);
        let central = model_trace(100, 0.6826, 1.0).rates()[49];
        let x1 = t.rates()[0];
        assert!((rows[49].model - central / x1).abs() < 1e-12);
    }
}

//! Stationary emission vector by successive approximation and by Newton's
//! method, plus the sup-norm contraction certificate.
//!
//! Inside the contraction domain `‖x - 1‖∞ < 1/(2α)` the plain iteration
//! `x ← F_α(x)` converges from the all-ones vector. Long chains with
//! `α > 3/4` leave that domain: the plain iteration then settles into a
//! period-two oscillation, so the fixed-point solver switches to the
//! relaxed map `x ← (1-ω) x + ω F_α(x)` with `ω = 1/2`, which shares its
//! fixed points with `F_α`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{apply_f_into, jacobian_unchecked, residual_norm, ChainParams, EmissionVector};
use crate::tridiag;

pub const FIXED_POINT_MAX_ITER: usize = 1_000_000;
pub const NEWTON_MAX_ITER: usize = 100;

/// Relaxation used by [`fixed_point_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relaxation {
    /// Plain iteration, switching to `ω = 1/2` if it stops contracting.
    Auto,
    /// Always use the given `ω ∈ (0, 1]`.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Sup-norm threshold on `x - F_α(x)`.
    pub tol: f64,
    /// Iteration cap; `None` picks the method default.
    pub max_iter: Option<usize>,
    /// Starting point; `None` is the all-ones vector.
    pub x0: Option<EmissionVector>,
    pub relaxation: Relaxation,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: None,
            x0: None,
            relaxation: Relaxation::Auto,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn validate(&self, params: &ChainParams) -> Result<Vec<f64>> {
        if !(self.tol > 0.0) {
            return Err(Error::Domain {
                what: "tolerance",
                value: self.tol,
            });
        }
        if self.max_iter == Some(0) {
            return Err(Error::Domain {
                what: "max_iter",
                value: 0.0,
            });
        }
        if let Relaxation::Fixed(w) = self.relaxation {
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::Domain {
                    what: "relaxation",
                    value: w,
                });
            }
        }
        match &self.x0 {
            Some(x0) if x0.len() != params.n() => Err(Error::DimensionMismatch {
                expected: params.n(),
                actual: x0.len(),
            }),
            Some(x0) => Ok(x0.to_vec()),
            None => Ok(vec![1.0; params.n()]),
        }
    }
}

/// Which solver to use where a caller gets to choose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    FixedPoint,
    #[default]
    Newton,
}

pub fn solve(params: &ChainParams, method: Method, opts: &SolveOptions) -> Result<EmissionVector> {
    match method {
        Method::FixedPoint => fixed_point_solve(params, opts),
        Method::Newton => newton_solve(params, opts),
    }
}

/// Iterations per progress check of the automatic relaxation switch.
const STALL_WINDOW: usize = 2000;

/// Successive approximation `x ← F_α(x)`.
pub fn fixed_point_solve(params: &ChainParams, opts: &SolveOptions) -> Result<EmissionVector> {
    let x = opts.validate(params)?;
    let max_iter = opts.max_iter.unwrap_or(FIXED_POINT_MAX_ITER);
    let (omega, auto) = match opts.relaxation {
        Relaxation::Auto => (1.0, true),
        Relaxation::Fixed(w) => (w, false),
    };
    let (x, _) = iterate(params.alpha(), x, omega, auto, opts.tol, max_iter)?;
    finish(x)
}

/// Runs the (relaxed) iteration until the residual drops to `tol`.
/// Returns the iterate and the number of iterations used.
fn iterate(
    alpha: f64,
    mut x: Vec<f64>,
    mut omega: f64,
    auto: bool,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let mut fx = vec![0.0; x.len()];
    let mut checkpoint = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for k in 0..max_iter {
        apply_f_into(alpha, &x, &mut fx);
        residual = x
            .iter()
            .zip(&fx)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if residual <= tol {
            return Ok((x, k));
        }
        if auto && omega == 1.0 && k > 0 && k % STALL_WINDOW == 0 {
            if residual > 0.5 * checkpoint {
                omega = 0.5;
            }
            checkpoint = residual;
        } else if k == 0 {
            checkpoint = residual;
        }
        for (xi, fi) in x.iter_mut().zip(&fx) {
            *xi += omega * (fi - *xi);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
        last: x,
    })
}

/// Newton's method on `G(x) = x - F_α(x)` with tridiagonal solves.
///
/// Steps are halved until they stay in `[-0.5, 1.5]^n` and decrease
/// `‖G‖₂`. If Newton stalls from the requested start, a relaxed
/// successive-approximation warm start is computed and Newton is retried
/// from there.
pub fn newton_solve(params: &ChainParams, opts: &SolveOptions) -> Result<EmissionVector> {
    let x0 = opts.validate(params)?;
    let alpha = params.alpha();
    let max_iter = opts.max_iter.unwrap_or(NEWTON_MAX_ITER);
    let first = match newton_from(alpha, x0.clone(), opts.tol, max_iter) {
        Ok(x) => return finish(x),
        Err(e) => e,
    };

    let warm_tol = opts.tol.max(1e-6);
    let (warm, _) = iterate(alpha, x0, 0.5, false, warm_tol, FIXED_POINT_MAX_ITER)?;
    if let Ok(x) = newton_from(alpha, warm.clone(), opts.tol, max_iter) {
        return finish(x);
    }
    match iterate(alpha, warm, 0.5, false, opts.tol, FIXED_POINT_MAX_ITER) {
        Ok((x, _)) => finish(x),
        Err(Error::NoConvergence { residual, last, .. }) => {
            let iterations = match first {
                Error::NoConvergence { iterations, .. } => iterations,
                _ => max_iter,
            };
            Err(Error::NoConvergence {
                iterations,
                residual,
                last,
            })
        }
        Err(e) => Err(e),
    }
}

fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|a| a * a).sum::<f64>())
}

fn newton_from(alpha: f64, mut x: Vec<f64>, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = x.len();
    let mut fx = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let diag = vec![1.0; n];
    // F_α commutes with index reversal, so a palindromic start keeps a
    // palindromic root; rounding in the linear solve would otherwise break
    // the symmetry, badly so when the system is ill-conditioned.
    let symmetric = (0..n / 2).all(|i| x[i] == x[n - 1 - i]);
    for _ in 0..max_iter {
        apply_f_into(alpha, &x, &mut fx);
        for i in 0..n {
            g[i] = x[i] - fx[i];
        }
        let sup = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if sup <= tol {
            return Ok(x);
        }
        let merit = norm2(&g);

        let jac = jacobian_unchecked(alpha, &x);
        let sub: Vec<f64> = jac.lower.iter().map(|v| -v).collect();
        let sup_diag: Vec<f64> = jac.upper.iter().map(|v| -v).collect();
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let step = match tridiag::solve(&sub, &diag, &sup_diag, &rhs) {
            Ok(dx) => dx,
            // damped fixed-point direction
            Err(Error::Singular) => g.iter().map(|v| -0.5 * v).collect(),
            Err(e) => return Err(e),
        };

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            for i in 0..n {
                trial[i] = x[i] + t * step[i];
            }
            if trial.iter().all(|v| (-0.5..=1.5).contains(v)) {
                apply_f_into(alpha, &trial, &mut fx);
                let m = libm::sqrt(
                    trial
                        .iter()
                        .zip(&fx)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>(),
                );
                if m < (1.0 - 1e-4 * t) * merit {
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: sup,
                last: x,
            });
        }
        core::mem::swap(&mut x, &mut trial);
        if symmetric {
            for i in 0..n / 2 {
                let m = 0.5 * (x[i] + x[n - 1 - i]);
                x[i] = m;
                x[n - 1 - i] = m;
            }
        }
    }
    let residual = residual_norm(alpha, &x);
    if residual <= tol {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
        last: x,
    })
}

/// Rejects roots outside the unit box and snaps rounding noise onto it.
fn finish(mut x: Vec<f64>) -> Result<EmissionVector> {
    const SLACK: f64 = 1e-9;
    for v in &mut x {
        if *v < -SLACK || *v > 1.0 + SLACK {
            return Err(Error::Invalid("solution left the unit box"));
        }
        *v = v.clamp(0.0, 1.0);
    }
    EmissionVector::new(x)
}

/// Sup-norm certificate for the contraction hypothesis at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionCertificate {
    /// `‖x - 1‖∞ < 1/(2α)`.
    pub domain_ok: bool,
    /// `‖F'_α(x)‖∞`.
    pub norm_bound: f64,
    /// `norm_bound < 1`.
    pub contractive: bool,
}

pub fn contraction_check(params: &ChainParams, x: &[f64]) -> Result<ContractionCertificate> {
    let jac = crate::model::jacobian_f(params, x)?;
    let dist = x.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    let norm_bound = jac.sup_norm();
    Ok(ContractionCertificate {
        domain_ok: dist < 1.0 / (2.0 * params.alpha()),
        norm_bound,
        contractive: norm_bound < 1.0,
    })
}

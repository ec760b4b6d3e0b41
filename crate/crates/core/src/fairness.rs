//! Entropy fairness objective `J(α) = E(x(α)) / n`, its adjoint-state
//! derivative and its maximization over `α`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{apply_f, entropy, grad_entropy, jacobian_f, ChainParams};
use crate::scalar::{bisect_decreasing, golden_max};
use crate::solver::{solve, Method, SolveOptions};
use crate::tridiag;

/// Lower and upper end of the search interval for `α̂`.
pub const SEARCH_LO: f64 = 0.01;
pub const SEARCH_HI: f64 = 0.99;
/// Points of the unimodality scan, spaced 0.01 over the search interval.
pub const GRID_POINTS: usize = 99;

/// Multiplier vector of the Lagrangian `E(x)/n + λᵀ(x - F_α(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState {
    pub lambda: Vec<f64>,
}

/// Solves `(F'_α(x) - I)ᵀ λ = ∇E(x) / n` at a solved chain `x`.
pub fn adjoint_state(params: &ChainParams, x: &[f64]) -> Result<AdjointState> {
    let n = params.n() as f64;
    let jac = jacobian_f(params, x)?;
    let rhs: Vec<f64> = grad_entropy(x)?.into_iter().map(|g| g / n).collect();
    let diag = alloc::vec![-1.0; x.len()];
    // the transpose swaps the two off-diagonals
    let lambda = tridiag::solve(&jac.upper, &diag, &jac.lower, &rhs)?;
    Ok(AdjointState { lambda })
}

/// `J(α)` with the Newton solver.
pub fn objective(alpha: f64, n: usize) -> Result<f64> {
    objective_with(alpha, n, Method::Newton)
}

pub fn objective_with(alpha: f64, n: usize, method: Method) -> Result<f64> {
    let params = ChainParams::new(n, alpha)?;
    let x = solve(&params, method, &SolveOptions::default())?;
    Ok(entropy(&x)? / n as f64)
}

/// `J'(α) = -(1/α) λᵀ F_α(x(α))`.
pub fn objective_derivative(alpha: f64, n: usize) -> Result<f64> {
    objective_and_derivative(alpha, n).map(|(_, d)| d)
}

/// `J(α)` and `J'(α)` from a single solve.
pub fn objective_and_derivative(alpha: f64, n: usize) -> Result<(f64, f64)> {
    let params = ChainParams::new(n, alpha)?;
    let x = solve(&params, Method::Newton, &SolveOptions::default())?;
    let value = entropy(&x)? / n as f64;
    let lambda = adjoint_state(&params, &x)?.lambda;
    let fx = apply_f(&params, &x)?;
    let dot: f64 = lambda.iter().zip(&fx).map(|(l, f)| l * f).sum();
    let derivative = -dot / alpha;
    if !derivative.is_finite() {
        return Err(Error::Singular);
    }
    Ok((value, derivative))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub alpha_hat: f64,
    pub value: f64,
    /// Number of `J` / `J'` evaluations, grid scan included.
    pub evaluations: usize,
    /// Width of the final bracket around `alpha_hat`.
    pub bracket: f64,
    /// Sign changes of `J'` seen on the scan grid.
    pub sign_changes: usize,
    /// `false` when the scan saw more than one sign change; `alpha_hat` is
    /// then the best grid point.
    pub unimodal: bool,
}

/// Maximizes `J` over `[0.01, 0.99]` to within `tol_alpha`.
///
/// A 99-point scan checks that `J'` changes sign once and brackets the
/// best grid point, golden-section search narrows the bracket, and
/// bisection on the sign of `J'` finishes it.
pub fn maximize(n: usize, tol_alpha: f64) -> Result<OptResult> {
    if n == 0 {
        return Err(Error::Domain {
            what: "chain length",
            value: 0.0,
        });
    }
    if !(tol_alpha > 0.0) {
        return Err(Error::Domain {
            what: "alpha tolerance",
            value: tol_alpha,
        });
    }
    let step = (SEARCH_HI - SEARCH_LO) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|k| SEARCH_LO + step * k as f64)
        .collect();
    let scan: Vec<Option<(f64, f64)>> = grid
        .iter()
        .map(|&a| objective_and_derivative(a, n).ok())
        .collect();
    let mut evaluations = GRID_POINTS;

    let best = scan
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.map(|(j, _)| (k, j)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::NoConvergence {
            iterations: GRID_POINTS,
            residual: f64::NAN,
            last: Vec::new(),
        })?;

    let signs: Vec<bool> = scan.iter().flatten().map(|&(_, d)| d > 0.0).collect();
    let sign_changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    if sign_changes > 1 {
        return Ok(OptResult {
            alpha_hat: grid[best.0],
            value: best.1,
            evaluations,
            bracket: step,
            sign_changes,
            unimodal: false,
        });
    }

    let lo = grid[best.0.saturating_sub(1)];
    let hi = grid[(best.0 + 1).min(GRID_POINTS - 1)];
    let coarse = tol_alpha.max(1e-3);
    let gold = golden_max(|a| objective(a, n), lo, hi, coarse)?;
    evaluations += gold.evaluations;
    let mut bracket = gold;

    if bracket.width() > tol_alpha {
        let dl = objective_derivative(bracket.lo, n);
        let dh = objective_derivative(bracket.hi, n);
        evaluations += 2;
        bracket = match (dl, dh) {
            (Ok(l), Ok(h)) if l > 0.0 && h <= 0.0 => {
                let b = bisect_decreasing(
                    |a| objective_derivative(a, n),
                    bracket.lo,
                    bracket.hi,
                    tol_alpha,
                )?;
                evaluations += b.evaluations;
                b
            }
            // no usable sign change inside, finish with golden section
            _ => {
                let b = golden_max(|a| objective(a, n), bracket.lo, bracket.hi, tol_alpha)?;
                evaluations += b.evaluations;
                b
            }
        };
    }
    let alpha_hat = bracket.mid();
    let value = objective(alpha_hat, n)?;
    Ok(OptResult {
        alpha_hat,
        value,
        evaluations: evaluations + 1,
        bracket: bracket.width(),
        sign_changes,
        unimodal: true,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    /// `None` when the chain could not be solved at this `α`.
    pub value: Option<f64>,
}

/// Evaluates `J` at each `α`, keeping input order and marking failures.
pub fn sweep(n: usize, alphas: &[f64]) -> Vec<SweepRow> {
    alphas
        .iter()
        .map(|&alpha| SweepRow {
            alpha,
            value: objective(alpha, n).ok(),
        })
        .collect()
}

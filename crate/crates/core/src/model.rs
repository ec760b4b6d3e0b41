//! Chain parameters, the successive-approximation map `F_α`, its Jacobian
//! and the entropy functional.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use libm::{log, sqrt};

use crate::error::{Error, Result};

/// Number of pairs and emission coefficient of a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    n: usize,
    alpha: f64,
}

impl ChainParams {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain {
                what: "chain length",
                value: 0.0,
            });
        }
        check_alpha(alpha)?;
        Ok(Self { n, alpha })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "alpha",
            value: alpha,
        })
    }
}

/// Per-pair emission probabilities, every component in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionVector(Vec<f64>);

impl EmissionVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain {
                what: "emission probability",
                value: bad,
            });
        }
        Ok(Self(x))
    }

    /// The all-ones vector, the customary starting point of the iteration.
    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Component of the central pair, index `⌈n/2⌉` counted from 1.
    pub fn central(&self) -> f64 {
        self.0[self.0.len().div_ceil(2) - 1]
    }
}

impl Deref for EmissionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn check_len(params: &ChainParams, x: &[f64]) -> Result<()> {
    if x.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            actual: x.len(),
        });
    }
    Ok(())
}

/// Evaluates `F_α(x)`. The virtual border pairs never send, so the first
/// and last rows drop one factor.
pub fn apply_f(params: &ChainParams, x: &[f64]) -> Result<Vec<f64>> {
    check_len(params, x)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("non-finite component"));
    }
    let mut out = vec![0.0; x.len()];
    apply_f_into(params.alpha, x, &mut out);
    Ok(out)
}

/// Unchecked `F_α` for the solver inner loops.
pub(crate) fn apply_f_into(alpha: f64, x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let left = if i > 0 { 1.0 - x[i - 1] } else { 1.0 };
        let right = if i + 1 < n { 1.0 - x[i + 1] } else { 1.0 };
        out[i] = alpha * (left * right);
    }
}

/// Sup-norm of `x - F_α(x)`.
pub(crate) fn residual_norm(alpha: f64, x: &[f64]) -> f64 {
    let n = x.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        let left = if i > 0 { 1.0 - x[i - 1] } else { 1.0 };
        let right = if i + 1 < n { 1.0 - x[i + 1] } else { 1.0 };
        worst = worst.max((x[i] - alpha * (left * right)).abs());
    }
    worst
}

/// Jacobian of `F_α`: zero diagonal, two off-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct TriJacobian {
    /// `lower[i - 1]` is entry `(i, i-1)`, i.e. `α (x_{i+1} - 1)`.
    pub lower: Vec<f64>,
    /// `upper[i]` is entry `(i, i+1)`, i.e. `α (x_{i-1} - 1)`.
    pub upper: Vec<f64>,
}

impl TriJacobian {
    pub fn n(&self) -> usize {
        self.upper.len() + 1
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if col + 1 == row {
            self.lower[col]
        } else if row + 1 == col {
            self.upper[row]
        } else {
            0.0
        }
    }

    /// Maximum absolute row sum.
    pub fn sup_norm(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| {
                let l = if i > 0 { self.lower[i - 1].abs() } else { 0.0 };
                let u = if i + 1 < n { self.upper[i].abs() } else { 0.0 };
                l + u
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

pub fn jacobian_f(params: &ChainParams, x: &[f64]) -> Result<TriJacobian> {
    check_len(params, x)?;
    Ok(jacobian_unchecked(params.alpha, x))
}

pub(crate) fn jacobian_unchecked(alpha: f64, x: &[f64]) -> TriJacobian {
    let n = x.len();
    let at = |k: isize| -> f64 {
        if k < 0 || k as usize >= n {
            0.0
        } else {
            x[k as usize]
        }
    };
    let m = n.saturating_sub(1);
    let mut lower = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m);
    for i in 0..m {
        let row = i as isize;
        // d F_{i+1} / d x_i = α (x_{i+2} - 1)
        lower.push(alpha * (at(row + 2) - 1.0));
        // d F_i / d x_{i+1} = α (x_{i-1} - 1)
        upper.push(alpha * (at(row - 1) - 1.0));
    }
    TriJacobian { lower, upper }
}

/// Shannon entropy `-Σ x_i ln x_i`, with `0 ln 0 = 0`.
pub fn entropy(x: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for &v in x {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain {
                what: "emission probability",
                value: v,
            });
        }
        if v > 0.0 {
            acc -= v * log(v);
        }
    }
    Ok(acc)
}

/// Gradient of [`entropy`]: `-(ln x_i + 1)`.
pub fn grad_entropy(x: &[f64]) -> Result<Vec<f64>> {
    x.iter()
        .map(|&v| {
            if v > 0.0 && v <= 1.0 {
                Ok(-(log(v) + 1.0))
            } else {
                Err(Error::Domain {
                    what: "emission probability",
                    value: v,
                })
            }
        })
        .collect()
}

/// Closed-form solution for three pairs, `(x_1, x_2, x_1)`.
pub fn closed_form_n3(alpha: f64) -> Result<EmissionVector> {
    check_alpha(alpha)?;
    let a2 = alpha * alpha;
    let b = 1.0 - 2.0 * a2;
    let disc = b * b - 4.0 * a2 * alpha * (alpha - 1.0);
    let x1 = (2.0 * a2 - 1.0 + sqrt(disc)) / (2.0 * a2);
    let x2 = alpha * (1.0 - x1) * (1.0 - x1);
    EmissionVector::new(vec![x1, x2, x1])
}

/// Closed-form solution for four pairs, `(x_1, x_2, x_2, x_1)`.
pub fn closed_form_n4(alpha: f64) -> Result<EmissionVector> {
    check_alpha(alpha)?;
    let x1 = (1.0 + alpha - sqrt((1.0 - alpha) * (1.0 + 3.0 * alpha))) / (2.0 * alpha);
    let c = alpha * (1.0 - x1);
    let x2 = c / (1.0 + c);
    EmissionVector::new(vec![x1, x2, x2, x1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(n: usize, a: f64) -> ChainParams {
        ChainParams::new(n, a).unwrap()
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(ChainParams::new(0, 0.5).is_err());
        assert!(ChainParams::new(3, 0.0).is_err());
        assert!(ChainParams::new(3, 1.0).is_err());
        assert!(ChainParams::new(3, f64::NAN).is_err());
    }

    #[test]
    fn apply_f_examples() {
        assert_eq!(apply_f(&p(3, 0.5), &[0.0; 3]).unwrap(), vec![0.5; 3]);
        assert_eq!(apply_f(&p(3, 0.5), &[1.0; 3]).unwrap(), vec![0.0; 3]);
        let t = 1.0 / 3.0;
        let y = apply_f(&p(4, 0.75), &[t; 4]).unwrap();
        let want = [0.5, t, t, 0.5];
        for (a, b) in y.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn apply_f_degenerate_shapes() {
        assert_eq!(apply_f(&p(1, 0.3), &[0.9]).unwrap(), vec![0.3]);
        let y = apply_f(&p(2, 0.5), &[0.2, 0.6]).unwrap();
        assert_eq!(y, vec![0.5 * 0.4, 0.5 * 0.8]);
    }

    #[test]
    fn apply_f_rejects_wrong_length() {
        assert_eq!(
            apply_f(&p(3, 0.5), &[0.0; 2]),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 2
            })
        );
        assert!(jacobian_f(&p(3, 0.5), &[0.0; 4]).is_err());
    }

    #[test]
    fn jacobian_examples() {
        let a = 0.7;
        let jac = jacobian_f(&p(3, a), &[1.0; 3]).unwrap();
        let d = jac.to_dense();
        assert_eq!(d[0], vec![0.0, -a, 0.0]);
        assert_eq!(d[1], vec![0.0, 0.0, 0.0]);
        assert_eq!(d[2], vec![0.0, -a, 0.0]);

        let jac = jacobian_f(&p(2, 0.5), &[0.0, 0.0]).unwrap();
        assert_eq!(jac.to_dense(), vec![vec![0.0, -0.5], vec![-0.5, 0.0]]);

        let jac = jacobian_f(&p(1, 0.5), &[0.2]).unwrap();
        assert_eq!(jac.to_dense(), vec![vec![0.0]]);
        assert_eq!(jac.sup_norm(), 0.0);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        let t = 1.0 / 3.0;
        assert!((entropy(&[t, t, t]).unwrap() - log(3.0)).abs() < 1e-15);
        assert_eq!(entropy(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(entropy(&[0.5, 1.2]).is_err());
        assert!(entropy(&[-0.1]).is_err());
    }

    #[test]
    fn grad_entropy_examples() {
        assert_eq!(grad_entropy(&[1.0, 1.0]).unwrap(), vec![-1.0, -1.0]);
        let e = core::f64::consts::E;
        for g in grad_entropy(&[1.0 / e, 1.0 / e]).unwrap() {
            assert!(g.abs() < 1e-15);
        }
        assert!(grad_entropy(&[0.5, 0.0]).is_err());
    }

    #[test]
    fn closed_forms_at_half() {
        let x = closed_form_n3(0.5).unwrap();
        assert!((x[0] - (-0.5 + sqrt(0.5)) / 0.5).abs() < 1e-15);
        assert!((x[0] - 0.41421356237309503).abs() < 1e-12);
        let x = closed_form_n4(0.5).unwrap();
        assert!((x[0] - (1.5 - sqrt(1.25))).abs() < 1e-15);
        assert!(closed_form_n3(1.0).is_err());
        assert!(closed_form_n4(0.0).is_err());
    }

    #[test]
    fn closed_forms_are_fixed_points_on_grid() {
        for k in 1..=19 {
            let a = 0.05 * k as f64;
            for x in [closed_form_n3(a).unwrap(), closed_form_n4(a).unwrap()] {
                let params = p(x.len(), a);
                assert!(residual_norm(a, &x) <= 1e-12, "alpha {a}");
                assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
                let fx = apply_f(&params, &x).unwrap();
                assert!(x.iter().zip(&fx).all(|(u, v)| (u - v).abs() <= 1e-12));
            }
            let x = closed_form_n4(a).unwrap();
            assert_eq!(x[0], x[3]);
            assert_eq!(x[1], x[2]);
        }
    }

    #[test]
    fn ratio_at_fitted_alpha_shows_central_starvation() {
        let x = closed_form_n3(0.862).unwrap();
        let ratio = x[1] / x[0];
        assert!((ratio - 0.025).abs() < 1e-3, "{ratio}");
        // ns-2 reports 0.04 / 1.55 for the same configuration.
        assert!((ratio - 0.04 / 1.55).abs() < 2e-3);
    }

    fn central_difference(params: &ChainParams, x: &[f64], col: usize, h: f64) -> Vec<f64> {
        let mut up = x.to_vec();
        let mut down = x.to_vec();
        up[col] += h;
        down[col] -= h;
        let fu = apply_f(params, &up).unwrap();
        let fd = apply_f(params, &down).unwrap();
        fu.iter()
            .zip(&fd)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect()
    }

    proptest! {
        #[test]
        fn jacobian_matches_finite_differences(
            x in prop::collection::vec(0.0..=1.0f64, 1..=10),
            alpha in 0.01..0.99f64,
        ) {
            let params = p(x.len(), alpha);
            let jac = jacobian_f(&params, &x).unwrap();
            for col in 0..x.len() {
                let fd = central_difference(&params, &x, col, 1e-5);
                for (row, d) in fd.iter().enumerate() {
                    prop_assert!((jac.get(row, col) - d).abs() <= 1e-6);
                }
            }
            for i in 0..x.len() {
                prop_assert_eq!(jac.get(i, i), 0.0);
            }
        }

        #[test]
        fn apply_f_maps_box_into_alpha_box(
            x in prop::collection::vec(0.0..=1.0f64, 1..=30),
            alpha in 0.001..0.999f64,
        ) {
            let y = apply_f(&p(x.len(), alpha), &x).unwrap();
            prop_assert!(y.iter().all(|v| *v >= 0.0 && *v <= alpha));
        }

        #[test]
        fn apply_f_commutes_with_reversal(
            x in prop::collection::vec(0.0..=1.0f64, 1..=30),
            alpha in 0.001..0.999f64,
        ) {
            let params = p(x.len(), alpha);
            let mut rev = x.clone();
            rev.reverse();
            let mut y = apply_f(&params, &x).unwrap();
            y.reverse();
            prop_assert_eq!(y, apply_f(&params, &rev).unwrap());
        }

        #[test]
        fn grad_entropy_matches_finite_differences(
            x in prop::collection::vec(0.05..0.95f64, 4),
        ) {
            let g = grad_entropy(&x).unwrap();
            for i in 0..x.len() {
                let h = 1e-5;
                let mut up = x.clone();
                let mut down = x.clone();
                up[i] += h;
                down[i] -= h;
                let fd = (entropy(&up).unwrap() - entropy(&down).unwrap()) / (2.0 * h);
                prop_assert!((g[i] - fd).abs() <= 1e-6);
            }
        }

        #[test]
        fn entropy_peaks_at_inverse_e(x in prop::collection::vec(0.0..=1.0f64, 1..8)) {
            let e = core::f64::consts::E;
            let best = entropy(&vec![1.0 / e; x.len()]).unwrap();
            prop_assert!(entropy(&x).unwrap() <= best + 1e-12);
        }
    }
}

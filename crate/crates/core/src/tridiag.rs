//! Tridiagonal linear solves with partial pivoting (the `gtsv` scheme).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Solves `A z = rhs` where `A` has sub-diagonal `sub`, diagonal `diag` and
/// super-diagonal `sup`. Row swaps fill a second super-diagonal.
pub(crate) fn solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    debug_assert_eq!(rhs.len(), n);
    debug_assert_eq!(sub.len(), n.saturating_sub(1));
    debug_assert_eq!(sup.len(), n.saturating_sub(1));
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut b = rhs.to_vec();

    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return Err(Error::Singular);
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0;
        } else {
            // swap rows i and i + 1
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    if d[n - 1] == 0.0 {
        return Err(Error::Singular);
    }

    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(b)
}

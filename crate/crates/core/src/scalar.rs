//! Bracketed one-dimensional searches shared by the optimizer and the fit.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub evaluations: usize,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`,
/// shrinking the bracket to at most `width`.
pub(crate) fn golden_max<F>(mut f: F, lo: f64, hi: f64, width: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evaluations = 2;
    while b - a > width {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
    }
    Ok(Bracket {
        lo: a,
        hi: b,
        evaluations,
    })
}

/// Bisection on a sign change of `g` from positive at `lo` to negative at
/// `hi`.
pub(crate) fn bisect_decreasing<G>(mut g: G, lo: f64, hi: f64, width: f64) -> Result<Bracket>
where
    G: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let mut evaluations = 0;
    while b - a > width {
        let m = 0.5 * (a + b);
        evaluations += 1;
        if g(m)? > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(Bracket {
        lo: a,
        hi: b,
        evaluations,
    })
}

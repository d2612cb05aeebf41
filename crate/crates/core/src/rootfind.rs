//! Safeguarded Newton iteration on a sign-changing bracket.

use crate::error::{Error, Result};

/// One evaluation made by [`newton_bisection`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iterate {
    pub x: f64,
    pub f: f64,
    pub df: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootResult {
    pub root: f64,
    pub value: f64,
    /// Every evaluation in order, endpoints first.
    pub iterates: Vec<Iterate>,
}

const MAX_ITER: usize = 200;

/// Root of `f` on `[a, b]`, where `eval(x)` returns `(f(x), f'(x))`.
///
/// A Newton step is taken from the latest iterate when it lands strictly
/// inside the current bracket, otherwise the bracket is bisected. Stops when
/// `|f| <= tol` or the bracket is narrower than `tol * max(1, |x|)`. A
/// non-finite derivative forces bisection.
pub fn newton_bisection<F>(mut eval: F, a: f64, b: f64, tol: f64) -> Result<RootResult>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let (fa, da) = eval(a)?;
    let mut iterates = vec![Iterate { x: a, f: fa, df: da }];
    if fa == 0.0 {
        return Ok(RootResult { root: a, value: fa, iterates });
    }
    let (fb, db) = eval(b)?;
    iterates.push(Iterate { x: b, f: fb, df: db });
    if fb == 0.0 {
        return Ok(RootResult { root: b, value: fb, iterates });
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::Bracket { a, b, fa, fb });
    }
    let neg_at_lo = fa < 0.0;
    let (mut lo, mut hi) = (a, b);
    let (mut x, mut fx, mut dx) = if fa.abs() <= fb.abs() { (a, fa, da) } else { (b, fb, db) };
    for _ in 0..MAX_ITER {
        let newton = x - fx / dx;
        let next = if dx.is_finite() && dx != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let (fn_, dn) = eval(next)?;
        iterates.push(Iterate { x: next, f: fn_, df: dn });
        x = next;
        fx = fn_;
        dx = dn;
        if fx.abs() <= tol {
            break;
        }
        if (fx < 0.0) == neg_at_lo {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= tol * x.abs().max(1.0) {
            break;
        }
    }
    Ok(RootResult { root: x, value: fx, iterates })
}

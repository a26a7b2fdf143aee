//! Bracketed inversion of strictly monotone functions.

use alloc::format;

use super::{BigReal, Interval};
use crate::error::{Error, Result};

/// Stopping rule for [`invert_monotone_with`].
#[derive(Clone, Debug)]
pub struct RootConfig {
    /// Iteration cap; bisection alone needs about `precision` steps.
    pub max_iter: usize,
    /// Bits below the bracket magnitude at which the bracket counts as
    /// collapsed. `None` means the working precision minus two.
    pub resolution_bits: Option<usize>,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig {
            max_iter: 4096,
            resolution_bits: None,
        }
    }
}

/// Solves `f(x) = y` on `bracket`. See [`invert_monotone_with`].
pub fn invert_monotone<F>(f: F, y: &BigReal, bracket: &Interval) -> Result<BigReal>
where
    F: Fn(&BigReal) -> Result<BigReal>,
{
    invert_monotone_with(
        f,
        None::<fn(&BigReal) -> Result<BigReal>>,
        y,
        bracket,
        &RootConfig::default(),
    )
}

/// Solves `f(x) = y` for strictly monotone `f` on `bracket`.
///
/// Every iterate stays inside a sign-change bracket. A Newton step (when
/// `derivative` is given) or an Illinois secant step is taken when it lands
/// strictly inside the bracket and the bracket keeps shrinking; otherwise the
/// bracket is bisected.
pub fn invert_monotone_with<F, D>(
    f: F,
    derivative: Option<D>,
    y: &BigReal,
    bracket: &Interval,
    cfg: &RootConfig,
) -> Result<BigReal>
where
    F: Fn(&BigReal) -> Result<BigReal>,
    D: Fn(&BigReal) -> Result<BigReal>,
{
    let p = bracket.precision().max(y.precision());
    let mut lo = bracket.lo().with_precision(p);
    let mut hi = bracket.hi().with_precision(p);
    let residual = |x: &BigReal| -> Result<BigReal> {
        let v = f(x)?;
        if !v.is_finite() {
            return Err(Error::Domain(format!("function not finite at {x}")));
        }
        Ok(&v - y)
    };
    let mut r_lo = residual(&lo)?;
    let mut r_hi = residual(&hi)?;
    if r_lo.is_zero() {
        return Ok(lo);
    }
    if r_hi.is_zero() {
        return Ok(hi);
    }
    if r_lo.signum() == r_hi.signum() {
        let (a, b) = if r_lo < r_hi {
            (&r_lo + y, &r_hi + y)
        } else {
            (&r_hi + y, &r_lo + y)
        };
        return Err(Error::Bracket(format!("target {y} outside [{a}, {b}]")));
    }

    let magnitude = lo.abs().max(&hi.abs());
    let bits = cfg.resolution_bits.unwrap_or(p.saturating_sub(2)) as i64;
    let resolution = match magnitude.exponent() {
        Some(e) => BigReal::pow2(e - bits, p),
        None => BigReal::pow2(-bits, p),
    };

    // Illinois weights for the secant step
    let mut w_lo = BigReal::one(p);
    let mut w_hi = BigReal::one(p);
    let mut best = if r_lo.abs() < r_hi.abs() {
        (lo.clone(), r_lo.clone())
    } else {
        (hi.clone(), r_hi.clone())
    };
    let mut stalls = 0usize;

    for _ in 0..cfg.max_iter {
        let width = &hi - &lo;
        if width <= resolution {
            return Ok(best.0);
        }
        let mid = (&lo + &hi).mul_pow2(-1);
        let candidate = if stalls >= 2 {
            None
        } else if let Some(df) = derivative.as_ref() {
            let slope = df(&best.0)?;
            if slope.is_zero() || !slope.is_finite() {
                None
            } else {
                Some(&best.0 - &(&best.1 / &slope))
            }
        } else {
            let a = &r_lo * &w_lo;
            let b = &r_hi * &w_hi;
            let denom = &b - &a;
            if denom.is_zero() {
                None
            } else {
                Some(&lo - &(&a * &(&width / &denom)))
            }
        };
        let step_from = best.0.clone();
        let x = match candidate {
            Some(c) if c > lo && c < hi => c,
            _ => mid,
        };
        let r = residual(&x)?;
        if r.is_zero() {
            return Ok(x);
        }
        if r.signum() == r_lo.signum() {
            lo = x.clone();
            r_lo = r.clone();
            w_lo = BigReal::one(p);
            w_hi = w_hi.mul_pow2(-1);
        } else {
            hi = x.clone();
            r_hi = r.clone();
            w_hi = BigReal::one(p);
            w_lo = w_lo.mul_pow2(-1);
        }
        let new_width = &hi - &lo;
        stalls = if new_width.mul_pow2(1) > width { stalls + 1 } else { 0 };
        if r.abs() <= best.1.abs() {
            best = (x.clone(), r);
        }
        // a Newton step that moved less than the resolution has converged
        if derivative.is_some() && (&x - &step_from).abs() <= resolution {
            return Ok(best.0);
        }
    }
    Err(Error::NonConvergence {
        what: "monotone inversion",
        detail: format!("bracket [{lo}, {hi}] after {} iterations", cfg.max_iter),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: usize = 256;

    fn d(s: &str) -> BigReal {
        BigReal::parse_decimal(s, P).unwrap()
    }

    fn bracket(lo: &str, hi: &str) -> Interval {
        Interval::parse(lo, hi, P).unwrap()
    }

    #[test]
    fn identity_inverse() {
        let x = invert_monotone(|x| Ok(x.clone()), &d("3"), &bracket("0", "10")).unwrap();
        assert!(x.approx_eq(&d("3"), &d("1e-70")));
    }

    #[test]
    fn square_inverse() {
        let x = invert_monotone(|x| Ok(x.square()), &d("25"), &bracket("0", "10")).unwrap();
        assert!(x.approx_eq(&d("5"), &d("1e-70")), "{x}");
    }

    #[test]
    fn log_inverse_is_e() {
        // e from the series sum 1/k!, independent of the library exponential
        let mut e = BigReal::zero(P);
        let mut term = BigReal::one(P);
        for k in 1..80 {
            e += &term;
            term /= BigReal::from_i64(k, P);
        }
        let x = invert_monotone(|x| Ok(x.ln()), &d("1"), &bracket("1", "10")).unwrap();
        assert!(x.approx_eq(&e, &d("1e-70")), "{x}");
    }

    #[test]
    fn decreasing_function_with_derivative() {
        let f = |x: &BigReal| Ok(x.recip());
        let df = |x: &BigReal| Ok(-x.square().recip());
        let x = invert_monotone_with(f, Some(df), &d("0.125"), &bracket("1", "100"), &RootConfig::default()).unwrap();
        assert!(x.approx_eq(&d("8"), &d("1e-70")), "{x}");
    }

    #[test]
    fn target_outside_bracket() {
        let r = invert_monotone(|x| Ok(x.square()), &d("200"), &bracket("0", "10"));
        assert!(matches!(r, Err(Error::Bracket(_))));
    }
}

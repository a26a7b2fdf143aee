//! Quasi-arithmetic and power means, and the statistics `(mean, Var, delta)`
//! of a sample vector.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::numerics::{invert_monotone_with, sum, BigReal, Interval, RootConfig};

/// Extra bits carried while evaluating a mean.
pub(crate) const GUARD_BITS: usize = 32;

/// A nonempty vector of finite reals.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleVector {
    entries: Vec<BigReal>,
}

impl SampleVector {
    pub fn new(entries: Vec<BigReal>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Spec("sample vector must have at least one entry".into()));
        }
        if let Some(bad) = entries.iter().find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("sample entry {bad} is not finite")));
        }
        Ok(SampleVector { entries })
    }

    /// Parses decimal strings exactly at `precision` bits.
    pub fn from_decimals<S: AsRef<str>>(values: &[S], precision: usize) -> Result<Self> {
        let entries = values
            .iter()
            .map(|s| BigReal::parse_decimal(s.as_ref(), precision))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[BigReal] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<BigReal> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest precision among the entries.
    pub fn precision(&self) -> usize {
        self.entries.iter().map(BigReal::precision).max().expect("nonempty")
    }

    pub fn min(&self) -> &BigReal {
        self.entries
            .iter()
            .fold(&self.entries[0], |m, x| if x < m { x } else { m })
    }

    pub fn max(&self) -> &BigReal {
        self.entries
            .iter()
            .fold(&self.entries[0], |m, x| if x > m { x } else { m })
    }

    /// `[min, max]`, or `None` for a constant vector.
    pub fn hull(&self) -> Option<Interval> {
        Interval::new(self.min().clone(), self.max().clone()).ok()
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(|x| *x == self.entries[0])
    }

    /// Whether every entry lies in `interval`.
    pub fn within(&self, interval: &Interval) -> bool {
        self.entries.iter().all(|x| interval.contains(x))
    }

    /// `k * a`.
    pub fn scale(&self, k: &BigReal) -> SampleVector {
        SampleVector {
            entries: self.entries.iter().map(|x| x * k).collect(),
        }
    }

    /// Largest `|a_i|`, or one for the zero vector; the magnitude against
    /// which rounding floors are measured.
    pub fn magnitude(&self) -> BigReal {
        let m = self
            .entries
            .iter()
            .fold(BigReal::zero(self.precision()), |m, x| m.max(&x.abs()));
        if m.is_zero() {
            BigReal::one(self.precision())
        } else {
            m
        }
    }
}

/// Arithmetic mean, population variance (divisor `n`) and spread.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorStats {
    pub mean: BigReal,
    pub variance: BigReal,
    pub spread: BigReal,
}

/// Two-pass statistics, computed with guard bits and rounded to the vector's
/// precision.
pub fn stats(a: &SampleVector) -> VectorStats {
    let p = a.precision();
    let work = p + GUARD_BITS;
    let n = BigReal::from_i64(a.len() as i64, work);
    let xs: Vec<BigReal> = a.entries().iter().map(|x| x.with_precision(work)).collect();
    let mean = sum(&xs, work) / &n;
    let variance = if a.is_constant() {
        BigReal::zero(p)
    } else {
        let squares: Vec<BigReal> = xs.iter().map(|x| (x - &mean).square()).collect();
        (sum(&squares, work) / &n).with_precision(p)
    };
    let mean = if a.is_constant() {
        a.entries()[0].clone()
    } else {
        mean.with_precision(p)
    };
    VectorStats {
        mean,
        variance,
        spread: (a.max().with_precision(work) - a.min().with_precision(work)).with_precision(p),
    }
}

/// Arithmetic mean of the entries.
pub fn arithmetic_mean(a: &SampleVector) -> BigReal {
    stats(a).mean
}

/// `f^{-1}((f(a_1) + ... + f(a_n)) / n)`.
///
/// Uses the closed-form inverse when the generator has one and otherwise
/// inverts `f` on `[min a, max a]`. The result is clamped to that interval
/// and is exact for constant vectors.
pub fn qa_mean(g: &Generator, a: &SampleVector) -> Result<BigReal> {
    for x in a.entries() {
        g.check_domain(x)?;
    }
    if a.is_constant() {
        return Ok(a.entries()[0].clone());
    }
    let p = a.precision();
    let work = p + GUARD_BITS;
    let images = a
        .entries()
        .iter()
        .map(|x| g.value(&x.with_precision(work)))
        .collect::<Result<Vec<_>>>()?;
    let target = sum(&images, work) / BigReal::from_i64(a.len() as i64, work);
    let lo = a.min().with_precision(work);
    let hi = a.max().with_precision(work);
    let raw = match g.inverse(&target) {
        Some(v) => v?,
        None => {
            let bracket = Interval::new(lo.clone(), hi.clone())?;
            invert_monotone_with(
                |x| g.value(x),
                Some(|x: &BigReal| g.d1(x)),
                &target,
                &bracket,
                &RootConfig::default(),
            )?
        }
    };
    Ok(raw.clamp(&lo, &hi).with_precision(p))
}

/// The power mean `P_p`: `(sum a_i^p / n)^(1/p)`, geometric for `p = 0`.
pub fn power_mean(p: &BigReal, a: &SampleVector) -> Result<BigReal> {
    let needs_positive = !p.is_positive();
    if let Some(bad) = a.entries().iter().find(|x| {
        if needs_positive {
            !x.is_positive()
        } else {
            x.is_negative()
        }
    }) {
        return Err(Error::Domain(format!(
            "power mean of order {p} undefined at entry {bad}"
        )));
    }
    if a.is_constant() {
        return Ok(a.entries()[0].clone());
    }
    let prec = a.precision();
    let work = prec + GUARD_BITS;
    let n = BigReal::from_i64(a.len() as i64, work);
    let xs: Vec<BigReal> = a.entries().iter().map(|x| x.with_precision(work)).collect();
    let value = if p.is_zero() {
        let mut product = BigReal::one(work);
        for x in &xs {
            product *= x;
        }
        (product.ln() / &n).exp()
    } else {
        let powers: Vec<BigReal> = xs.iter().map(|x| x.powf(p)).collect();
        let m = sum(&powers, work) / &n;
        (m.ln() / p).exp()
    };
    Ok(value
        .clamp(&a.min().with_precision(work), &a.max().with_precision(work))
        .with_precision(prec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{CustomFunctions, Descriptor};
    use alloc::sync::Arc;
    use proptest::prelude::*;

    const P: usize = 256;

    fn d(s: &str) -> BigReal {
        BigReal::parse_decimal(s, P).unwrap()
    }

    fn v(xs: &[&str]) -> SampleVector {
        SampleVector::from_decimals(xs, P).unwrap()
    }

    fn gen(desc: &str) -> Generator {
        let dom = Interval::parse("0.001", "1000", P).unwrap();
        Generator::builtin(&Descriptor::parse(desc, P).unwrap(), dom).unwrap()
    }

    fn close(a: &BigReal, b: &BigReal) -> bool {
        a.approx_eq(b, &d("1e-70"))
    }

    #[test]
    fn qa_mean_examples() {
        assert!(close(
            &qa_mean(&gen("identity"), &v(&["1", "2", "3"])).unwrap(),
            &d("2")
        ));
        assert!(close(&qa_mean(&gen("power:0"), &v(&["2", "8"])).unwrap(), &d("4")));
        assert!(close(&qa_mean(&gen("power:2"), &v(&["1", "7"])).unwrap(), &d("5")));
    }

    #[test]
    fn power_mean_examples() {
        assert!(close(&power_mean(&d("1"), &v(&["1", "2", "3"])).unwrap(), &d("2")));
        assert!(close(&power_mean(&d("2"), &v(&["1", "7"])).unwrap(), &d("5")));
        assert!(close(&power_mean(&d("0"), &v(&["1", "4"])).unwrap(), &d("2")));
        assert!(matches!(power_mean(&d("0"), &v(&["0", "4"])), Err(Error::Domain(_))));
    }

    #[test]
    fn stats_examples() {
        let s = stats(&v(&["1", "2", "3"]));
        assert!(close(&s.mean, &d("2")) && close(&s.spread, &d("2")));
        assert!(close(&s.variance, &BigReal::from_ratio(2, 3, P)));
        let c = stats(&v(&["1.7", "1.7", "1.7"]));
        assert!(c.variance.is_zero() && c.spread.is_zero() && c.mean == d("1.7"));
        let two = stats(&v(&["0", "1"]));
        assert_eq!(two.variance, d("0.25"));
    }

    #[test]
    fn constant_vector_is_fixed_exactly() {
        let a = v(&["3.3", "3.3"]);
        assert_eq!(qa_mean(&gen("exp:1.5"), &a).unwrap(), d("3.3"));
    }

    #[test]
    fn outside_domain_is_rejected() {
        assert!(matches!(
            qa_mean(&gen("power:0"), &v(&["0", "1"])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn custom_generator_without_inverse_uses_root_finder() {
        let cube = CustomFunctions {
            f: Arc::new(|x: &BigReal| x.powi(3)),
            d1: Arc::new(|x: &BigReal| x.square() * BigReal::from_i64(3, x.precision())),
            d2: Arc::new(|x: &BigReal| x * &BigReal::from_i64(6, x.precision())),
            d3: None,
            inverse: None,
        };
        let g = Generator::custom("cube", cube, Interval::parse("0.5", "10", P).unwrap()).unwrap();
        let a = v(&["1", "2", "4"]);
        let expect = power_mean(&d("3"), &a).unwrap();
        assert!(close(&qa_mean(&g, &a).unwrap(), &expect));
    }

    fn vector_strategy() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.01f64..50.0, 2..8)
    }

    fn to_vector(xs: &[f64]) -> SampleVector {
        SampleVector::new(xs.iter().map(|x| BigReal::from_f64(*x, P)).collect()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn qa_mean_is_a_strict_mean(xs in vector_strategy(), k in 0usize..6) {
            let descs = ["power:-1.5", "power:0", "power:0.5", "power:3", "exp:0.2", "exp:-0.3"];
            let a = to_vector(&xs);
            let m = qa_mean(&gen(descs[k]), &a).unwrap();
            prop_assert!(&m >= a.min() && &m <= a.max());
            if !a.is_constant() {
                prop_assert!(&m > a.min() && &m < a.max());
            }
        }

        #[test]
        fn affine_change_of_generator_is_invisible(xs in vector_strategy(), beta in -5.0f64..5.0, gamma in -5.0f64..5.0) {
            prop_assume!(beta.abs() > 1e-3);
            let a = to_vector(&xs);
            let dom = Interval::parse("0.001", "1000", P).unwrap();
            let affine = Generator::affine(BigReal::from_f64(beta, P), BigReal::from_f64(gamma, P), dom).unwrap();
            let m1 = qa_mean(&gen("identity"), &a).unwrap();
            let m2 = qa_mean(&affine, &a).unwrap();
            prop_assert!(m1.approx_eq(&m2, &d("1e-60")));
        }

        #[test]
        fn variance_spread_bracket(xs in proptest::collection::vec(-100.0f64..100.0, 2..9)) {
            let a = to_vector(&xs);
            prop_assume!(!a.is_constant());
            let s = stats(&a);
            let n = BigReal::from_i64(a.len() as i64, P);
            let d2 = s.spread.square();
            prop_assert!(s.variance.is_positive() && s.spread.is_positive());
            prop_assert!(&d2 / &(n.mul_pow2(1)) <= s.variance);
            prop_assert!(s.variance <= d2.mul_pow2(-2));
        }
    }
}

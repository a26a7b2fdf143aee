//! Generator functions of quasi-arithmetic means.
//!
//! A [`Generator`] bundles a strictly monotone `C^2` function `f` on an
//! interval with its first two (and, for builtins, third) derivatives and,
//! when available, a closed-form inverse. Builtins are the power family
//! `x^p` (`ln x` for `p = 0`), exponentials `e^(a x)`, the identity and
//! affine maps; arbitrary user functions are accepted through
//! [`Generator::custom`].

mod class;
mod descriptor;

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use core::fmt;

pub use class::{
    arrow_pratt, classify, compare_indexes, index_sup, index_sup_sampled, lipschitz_f2, lipschitz_f2_sampled, rescale,
    star_norm, star_norm_sampled, GeneratorClassReport, IndexComparison, IndexOrdering,
};
pub use descriptor::Descriptor;

use crate::error::{Error, Result};
use crate::numerics::{BigReal, Interval};

/// A real function of one `BigReal` argument.
pub type ScalarFn = Arc<dyn Fn(&BigReal) -> BigReal + Send + Sync>;

/// Numeric pieces of a user-supplied generator.
#[derive(Clone)]
pub struct CustomFunctions {
    pub f: ScalarFn,
    pub d1: ScalarFn,
    pub d2: ScalarFn,
    pub d3: Option<ScalarFn>,
    pub inverse: Option<ScalarFn>,
}

#[derive(Clone)]
pub enum GeneratorKind {
    /// `x^p`, or `ln x` when `p = 0`. `integer` caches an exact small
    /// integer exponent.
    Power {
        exponent: BigReal,
        integer: Option<i64>,
    },
    /// `e^(rate * x)`.
    Exp {
        rate: BigReal,
    },
    Identity,
    Affine {
        slope: BigReal,
        intercept: BigReal,
    },
    /// `x -> base(x / factor)`.
    Rescaled {
        base: Arc<Generator>,
        factor: BigReal,
    },
    Custom(CustomFunctions),
}

/// A generator `f` of a quasi-arithmetic mean on its domain.
#[derive(Clone)]
pub struct Generator {
    name: String,
    kind: GeneratorKind,
    domain: Interval,
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Generator")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Points sampled when validating a custom generator.
const CUSTOM_CHECK_POINTS: usize = 65;

fn small_integer(v: &BigReal) -> Option<i64> {
    (-64..=64).find(|&k| *v == BigReal::from_i64(k, v.precision()))
}

impl Generator {
    /// `x^p` on a domain of positive reals; `p = 0` gives `ln x`.
    pub fn power(exponent: BigReal, domain: Interval) -> Result<Self> {
        if !domain.lo().is_positive() {
            return Err(Error::Spec(format!(
                "power generator needs a domain of positive reals, got [{}, {}]",
                domain.lo(),
                domain.hi()
            )));
        }
        if !exponent.is_finite() {
            return Err(Error::Spec("power exponent must be finite".into()));
        }
        let integer = small_integer(&exponent);
        let name = format!("power:{}", exponent.to_short_string());
        Ok(Generator {
            name,
            kind: GeneratorKind::Power { exponent, integer },
            domain,
        })
    }

    pub fn log(domain: Interval) -> Result<Self> {
        let p = domain.precision();
        let mut g = Self::power(BigReal::zero(p), domain)?;
        g.name = "log".into();
        Ok(g)
    }

    /// `e^(rate * x)` with `rate != 0`.
    pub fn exp(rate: BigReal, domain: Interval) -> Result<Self> {
        if rate.is_zero() || !rate.is_finite() {
            return Err(Error::Spec(format!(
                "exponential rate must be finite and nonzero, got {rate}"
            )));
        }
        Ok(Generator {
            name: format!("exp:{}", rate.to_short_string()),
            kind: GeneratorKind::Exp { rate },
            domain,
        })
    }

    pub fn identity(domain: Interval) -> Self {
        Generator {
            name: "identity".into(),
            kind: GeneratorKind::Identity,
            domain,
        }
    }

    /// `slope * x + intercept` with `slope != 0`.
    pub fn affine(slope: BigReal, intercept: BigReal, domain: Interval) -> Result<Self> {
        if slope.is_zero() || !slope.is_finite() || !intercept.is_finite() {
            return Err(Error::Spec(format!(
                "affine slope must be finite and nonzero, got {slope}"
            )));
        }
        Ok(Generator {
            name: format!("affine:{},{}", slope.to_short_string(), intercept.to_short_string()),
            kind: GeneratorKind::Affine { slope, intercept },
            domain,
        })
    }

    /// A user-supplied generator.
    ///
    /// `f'` is sampled on a grid and must be finite, nonzero and of constant
    /// sign. When `d3` is given it is compared against central differences
    /// of `d2`.
    pub fn custom(name: impl Into<String>, fns: CustomFunctions, domain: Interval) -> Result<Self> {
        let name = name.into();
        let grid = domain.grid(CUSTOM_CHECK_POINTS);
        let mut sign = 0i8;
        for x in &grid {
            let slope = (fns.d1)(x);
            if !slope.is_finite() || slope.is_zero() {
                return Err(Error::Spec(format!("{name}: f'({x}) = {slope} violates f' != 0")));
            }
            if sign == 0 {
                sign = slope.signum();
            } else if slope.signum() != sign {
                return Err(Error::Spec(format!("{name}: f' changes sign, f is not monotone")));
            }
        }
        if let Some(d3) = &fns.d3 {
            let p = domain.precision();
            // h ~ width * 2^-24; the central difference error is O(h^2)
            let h = domain.width().mul_pow2(-24);
            let inner = Interval::new(domain.lo() + &h, domain.hi() - &h)?;
            for x in inner.grid(17) {
                let fd = ((fns.d2)(&(&x + &h)) - (fns.d2)(&(&x - &h))) / h.mul_pow2(1);
                let exact = d3(&x);
                let scale = exact.abs().max(&BigReal::one(p));
                let tol = &scale * &BigReal::pow2(-20, p);
                if !(&fd - &exact).abs().le(&tol) {
                    return Err(Error::Spec(format!(
                        "{name}: f''' disagrees with finite differences of f'' at {x}"
                    )));
                }
            }
        }
        Ok(Generator {
            name,
            kind: GeneratorKind::Custom(fns),
            domain,
        })
    }

    /// Builds a builtin generator from a parsed descriptor.
    pub fn builtin(descriptor: &Descriptor, domain: Interval) -> Result<Self> {
        match descriptor {
            Descriptor::Power(p) => Self::power(p.clone(), domain),
            Descriptor::Log => Self::log(domain),
            Descriptor::Exp(rate) => Self::exp(rate.clone(), domain),
            Descriptor::Identity => Ok(Self::identity(domain)),
            Descriptor::Affine(slope, intercept) => Self::affine(slope.clone(), intercept.clone(), domain),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &GeneratorKind {
        &self.kind
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub(crate) fn with_parts(name: String, kind: GeneratorKind, domain: Interval) -> Self {
        Generator { name, kind, domain }
    }

    pub fn has_third_derivative(&self) -> bool {
        match &self.kind {
            GeneratorKind::Custom(c) => c.d3.is_some(),
            GeneratorKind::Rescaled { base, .. } => base.has_third_derivative(),
            _ => true,
        }
    }

    pub fn has_closed_inverse(&self) -> bool {
        match &self.kind {
            GeneratorKind::Custom(c) => c.inverse.is_some(),
            GeneratorKind::Rescaled { base, .. } => base.has_closed_inverse(),
            _ => true,
        }
    }

    pub fn check_domain(&self, x: &BigReal) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "{x} outside domain [{}, {}] of {}",
                self.domain.lo(),
                self.domain.hi(),
                self.name
            )))
        }
    }

    fn finite(&self, what: &str, x: &BigReal, v: BigReal) -> Result<BigReal> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("{what} of {} not finite at {x}", self.name)))
        }
    }

    /// `f(x)`.
    pub fn value(&self, x: &BigReal) -> Result<BigReal> {
        self.check_domain(x)?;
        let v = self.eval(0, x).expect("order 0 always available");
        self.finite("f", x, v)
    }

    /// `f'(x)`.
    pub fn d1(&self, x: &BigReal) -> Result<BigReal> {
        self.check_domain(x)?;
        let v = self.eval(1, x).expect("order 1 always available");
        self.finite("f'", x, v)
    }

    /// `f''(x)`.
    pub fn d2(&self, x: &BigReal) -> Result<BigReal> {
        self.check_domain(x)?;
        let v = self.eval(2, x).expect("order 2 always available");
        self.finite("f''", x, v)
    }

    /// `f'''(x)` when the generator carries it.
    pub fn d3(&self, x: &BigReal) -> Result<Option<BigReal>> {
        self.check_domain(x)?;
        match self.eval(3, x) {
            Some(v) => self.finite("f'''", x, v).map(Some),
            None => Ok(None),
        }
    }

    /// Closed-form `f^{-1}(y)`, or `None` if the generator has none.
    pub fn inverse(&self, y: &BigReal) -> Option<Result<BigReal>> {
        let v = self.eval_inverse(y)?;
        Some(if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("inverse of {} not finite at {y}", self.name)))
        })
    }

    /// Arrow-Pratt index `f''(x) / f'(x)`.
    pub fn arrow_pratt(&self, x: &BigReal) -> Result<BigReal> {
        self.check_domain(x)?;
        let v = self.eval_index(x);
        self.finite("A_f", x, v)
    }

    /// Derivative of order `k <= 3` at `x`, without a domain check.
    pub(crate) fn eval(&self, order: u8, x: &BigReal) -> Option<BigReal> {
        let p = x.precision();
        match &self.kind {
            GeneratorKind::Power { exponent, integer } => {
                if exponent.is_zero() {
                    let r = x.recip();
                    return Some(match order {
                        0 => x.ln(),
                        1 => r,
                        2 => -r.square(),
                        _ => r.powi(3).mul_pow2(1),
                    });
                }
                let xp = match integer {
                    Some(k) => x.powi(*k),
                    None => x.powf(exponent),
                };
                let one = BigReal::one(p);
                Some(match order {
                    0 => xp,
                    1 => exponent * &xp / x,
                    2 => exponent * &(exponent - &one) * &xp / x.square(),
                    _ => {
                        let two = BigReal::from_i64(2, p);
                        exponent * &(exponent - &one) * &(exponent - &two) * &xp / x.powi(3)
                    }
                })
            }
            GeneratorKind::Exp { rate } => {
                let e = (rate * x).exp();
                Some(match order {
                    0 => e,
                    1 => rate * &e,
                    2 => rate.square() * &e,
                    _ => rate.powi(3) * &e,
                })
            }
            GeneratorKind::Identity => Some(match order {
                0 => x.clone(),
                1 => BigReal::one(p),
                _ => BigReal::zero(p),
            }),
            GeneratorKind::Affine { slope, intercept } => Some(match order {
                0 => slope * x + intercept,
                1 => slope.with_precision(p.max(slope.precision())),
                _ => BigReal::zero(p),
            }),
            GeneratorKind::Rescaled { base, factor } => {
                let inner = base.eval(order, &(x / factor))?;
                Some(inner / factor.powi(i64::from(order)))
            }
            GeneratorKind::Custom(c) => match order {
                0 => Some((c.f)(x)),
                1 => Some((c.d1)(x)),
                2 => Some((c.d2)(x)),
                _ => c.d3.as_ref().map(|d3| d3(x)),
            },
        }
    }

    pub(crate) fn eval_index(&self, x: &BigReal) -> BigReal {
        let p = x.precision();
        match &self.kind {
            GeneratorKind::Power { exponent, .. } => (exponent - &BigReal::one(p)) / x,
            GeneratorKind::Exp { rate } => rate.with_precision(p.max(rate.precision())),
            GeneratorKind::Identity | GeneratorKind::Affine { .. } => BigReal::zero(p),
            GeneratorKind::Rescaled { base, factor } => base.eval_index(&(x / factor)) / factor,
            GeneratorKind::Custom(c) => (c.d2)(x) / (c.d1)(x),
        }
    }

    fn eval_inverse(&self, y: &BigReal) -> Option<BigReal> {
        match &self.kind {
            GeneratorKind::Power { exponent, integer } => Some(if exponent.is_zero() {
                y.exp()
            } else {
                match integer {
                    Some(1) => y.clone(),
                    Some(2) => y.sqrt(),
                    _ => (y.ln() / exponent).exp(),
                }
            }),
            GeneratorKind::Exp { rate } => Some(y.ln() / rate),
            GeneratorKind::Identity => Some(y.clone()),
            GeneratorKind::Affine { slope, intercept } => Some((y - intercept) / slope),
            GeneratorKind::Rescaled { base, factor } => base.eval_inverse(y).map(|v| v * factor),
            GeneratorKind::Custom(c) => c.inverse.as_ref().map(|inv| inv(y)),
        }
    }
}

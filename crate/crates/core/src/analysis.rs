//! Second-order expansion of a quasi-arithmetic mean,
//!
//! `QA_f(a) = mean + Var/2 * A_f(mean) + R_f(a) + S_f(a)`,
//!
//! the bounds on its remainders, and the variance contraction estimate of the
//! Gauss map built on it.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generators::{index_sup, lipschitz_f2, rescale, star_norm, Generator};
use crate::iteration::{apply_map, GaussMap};
use crate::means::{qa_mean, stats, SampleVector};
use crate::numerics::{integrate, sum, BigReal, Interval, QuadratureConfig};

/// `alpha = (3 + 7e) / 3`.
pub fn alpha(precision: usize) -> BigReal {
    let e = BigReal::e(precision);
    (BigReal::from_i64(3, precision) + BigReal::from_i64(7, precision) * e) / BigReal::from_i64(3, precision)
}

/// `alpha^2 e / 4`, the generator-independent part of each theorem term.
pub fn alpha_term(precision: usize) -> BigReal {
    (alpha(precision).square() * BigReal::e(precision)).mul_pow2(-2)
}

/// `S_f(a) = int_mean^QA (f(u) - f(QA)) f''(u) / f'(u)^2 du`.
pub fn s_term(g: &Generator, a: &SampleVector, cfg: &QuadratureConfig) -> Result<BigReal> {
    let q = qa_mean(g, a)?;
    let abar = stats(a).mean;
    s_term_at(g, &abar, &q, cfg)
}

fn s_term_at(g: &Generator, abar: &BigReal, q: &BigReal, cfg: &QuadratureConfig) -> Result<BigReal> {
    let fq = g.value(q)?;
    integrate(
        |u| {
            let slope = g.d1(u)?;
            Ok((g.value(u)? - &fq) * g.d2(u)? / slope.square())
        },
        abar,
        q,
        cfg,
    )
}

/// `R_f(a)` by direct quadrature of `sum int_mean^a_i (a_i - t)^2 f'''(t) dt
/// / (2 n f'(mean))`; `None` when the generator has no `f'''`.
pub fn r_term_direct(g: &Generator, a: &SampleVector, cfg: &QuadratureConfig) -> Result<Option<BigReal>> {
    if !g.has_third_derivative() {
        return Ok(None);
    }
    let p = a.precision();
    let abar = stats(a).mean;
    let mut parts = Vec::with_capacity(a.len());
    for ai in a.entries() {
        let v = integrate(
            |t| {
                let d3 = g.d3(t)?.expect("third derivative present");
                Ok((ai - t).square() * d3)
            },
            &abar,
            ai,
            cfg,
        )?;
        parts.push(v);
    }
    let denom = BigReal::from_i64(2 * a.len() as i64, p) * g.d1(&abar)?;
    Ok(Some(sum(&parts, p) / denom))
}

/// `R_f(a)` by the identity route `QA - mean - Var/2 A_f(mean) - S`,
/// cross-checked against [`r_term_direct`] when `f'''` is available.
pub fn r_term(g: &Generator, a: &SampleVector, cfg: &QuadratureConfig) -> Result<BigReal> {
    Ok(Expansion::compute(g, a, cfg, true)?.r_identity)
}

struct Expansion {
    qa: BigReal,
    second_order: BigReal,
    s: BigReal,
    r_identity: BigReal,
    r_direct: Option<BigReal>,
}

impl Expansion {
    fn compute(g: &Generator, a: &SampleVector, cfg: &QuadratureConfig, cross_check: bool) -> Result<Self> {
        let p = a.precision();
        let st = stats(a);
        let qa = qa_mean(g, a)?;
        let second_order = &st.mean + &(st.variance.mul_pow2(-1) * g.arrow_pratt(&st.mean)?);
        let s = s_term_at(g, &st.mean, &qa, cfg)?;
        let r_identity = &qa - &second_order - &s;
        let r_direct = r_term_direct(g, a, cfg)?;
        if let (true, Some(rd)) = (cross_check, &r_direct) {
            // quadrature error of both routes plus rounding of QA
            let allowance = (cfg.budget(&s) + cfg.budget(rd)) * BigReal::from_i64(8, p)
                + a.magnitude() * BigReal::pow2(-(p as i64 - 8), p);
            let gap = (rd - &r_identity).abs();
            if gap > allowance {
                return Err(Error::CrossCheckMismatch(format!(
                    "R of {}: identity route {} vs direct quadrature {} (gap {gap}, allowed {allowance})",
                    g.name(),
                    r_identity,
                    rd
                )));
            }
        }
        Ok(Expansion {
            qa,
            second_order,
            s,
            r_identity,
            r_direct,
        })
    }
}

/// Bound pairs `(R bound, S bound)` on the hull, without the class check.
fn lipschitz_bounds(g: &Generator, a: &SampleVector) -> Result<(BigReal, BigReal)> {
    let p = a.precision();
    let Some(hull) = a.hull() else {
        return Ok((BigReal::zero(p), BigReal::zero(p)));
    };
    let st = stats(a);
    let lip = lipschitz_f2(g, &hull)?;
    let r = lip * &st.spread * &st.variance / g.d1(&st.mean)?.abs().mul_pow2(1);
    let s = (alpha(p).square().mul_pow2(-2)) * star_norm(g, &hull)?.exp() * st.spread.powi(4);
    Ok((r, s))
}

/// Whether `sup |A_f| <= 1` on the hull of `a` (trivially true for constant
/// vectors).
pub fn in_unit_class(g: &Generator, a: &SampleVector) -> Result<bool> {
    match a.hull() {
        Some(hull) => Ok(index_sup(g, &hull)? <= BigReal::one(a.precision())),
        None => Ok(true),
    }
}

/// `(Lip(f'') / (2|f'(mean)|) * delta * Var, alpha^2/4 * exp(||A_f||_*) *
/// delta^4)` with class data taken on `[min a, max a]`.
///
/// Requires `sup |A_f| <= 1` on the hull.
pub fn remainder_bounds(g: &Generator, a: &SampleVector) -> Result<(BigReal, BigReal)> {
    if !in_unit_class(g, a)? {
        let hull = a.hull().expect("nonconstant");
        return Err(Error::Class(format!(
            "sup |A_f| = {} > 1 on the hull for {}; rescale first",
            index_sup(g, &hull)?,
            g.name()
        )));
    }
    lipschitz_bounds(g, a)
}

/// The older pair `(exp(||A_f||_*) / (6n) * sum |a_i - mean|^3,
/// (QA - mean)^2 * exp(||A_f||_*))`, star norm on the hull.
pub fn legacy_bounds(g: &Generator, a: &SampleVector) -> Result<(BigReal, BigReal)> {
    let p = a.precision();
    for x in a.entries() {
        g.check_domain(x)?;
    }
    let Some(hull) = a.hull() else {
        return Ok((BigReal::zero(p), BigReal::zero(p)));
    };
    let st = stats(a);
    let growth = star_norm(g, &hull)?.exp();
    let cubes: Vec<BigReal> = a.entries().iter().map(|x| (x - &st.mean).abs().powi(3)).collect();
    let r = &growth * &sum(&cubes, p) / BigReal::from_i64(6 * a.len() as i64, p);
    let s = (qa_mean(g, a)? - &st.mean).square() * growth;
    Ok((r, s))
}

#[derive(Clone, Debug)]
pub struct ExpansionReport {
    pub qa_value: BigReal,
    /// `mean + Var/2 * A_f(mean)`.
    pub second_order: BigReal,
    pub s_value: BigReal,
    /// Identity-route `R`.
    pub r_value: BigReal,
    /// Direct-quadrature `R`, when `f'''` is available.
    pub r_direct: Option<BigReal>,
    /// `|QA - second_order - R - S|` using the direct `R` when available: the
    /// identity route satisfies the expansion by construction.
    pub identity_residual: BigReal,
    pub r_bound: BigReal,
    pub s_bound: BigReal,
    /// `sup |A_f| <= 1` on the hull, the hypothesis of `r_bound`/`s_bound`.
    pub in_unit_class: bool,
    pub bounds_hold: bool,
    pub legacy_r_bound: BigReal,
    pub legacy_s_bound: BigReal,
    pub legacy_bounds_hold: bool,
}

/// Expansion terms, residual and both bound pairs. The two `R` routes are
/// reported, not cross-checked; the Lipschitz bounds are evaluated even when
/// the class hypothesis fails (see `in_unit_class`).
pub fn expansion_report(g: &Generator, a: &SampleVector, cfg: &QuadratureConfig) -> Result<ExpansionReport> {
    let ex = Expansion::compute(g, a, cfg, false)?;
    let r_used = ex.r_direct.as_ref().unwrap_or(&ex.r_identity);
    let identity_residual = (&ex.qa - &ex.second_order - r_used - &ex.s).abs();
    let (r_bound, s_bound) = lipschitz_bounds(g, a)?;
    let (legacy_r_bound, legacy_s_bound) = legacy_bounds(g, a)?;
    let bounds_hold = ex.r_identity.abs() <= r_bound && ex.s.abs() <= s_bound;
    let legacy_bounds_hold = ex.r_identity.abs() <= legacy_r_bound && ex.s.abs() <= legacy_s_bound;
    Ok(ExpansionReport {
        in_unit_class: in_unit_class(g, a)?,
        qa_value: ex.qa,
        second_order: ex.second_order,
        s_value: ex.s,
        r_value: ex.r_identity,
        r_direct: ex.r_direct,
        identity_residual,
        r_bound,
        s_bound,
        bounds_hold,
        legacy_r_bound,
        legacy_s_bound,
        legacy_bounds_hold,
    })
}

#[derive(Clone, Debug)]
pub struct TheoremConstants {
    pub alpha: BigReal,
    /// Arithmetic mean of the per-generator terms.
    pub c: BigReal,
    /// Quadratic mean of the same terms.
    pub c2: BigReal,
    pub k: BigReal,
    /// `Lip(f_k'') / (2 K^2 |f_k'(mean)|) + alpha^2 e / 4` per generator.
    pub terms: Vec<BigReal>,
}

/// `C` and `C_2` for the map at `abar`, class data on `hull`.
pub fn theorem_constants(m: &GaussMap, abar: &BigReal, k: &BigReal, hull: &Interval) -> Result<TheoremConstants> {
    if !k.is_positive() {
        return Err(Error::InvalidConfig(format!("K must be positive, got {k}")));
    }
    if !hull.contains(abar) {
        return Err(Error::Domain(format!("mean {abar} outside the hull")));
    }
    let p = hull.precision().max(abar.precision());
    let base = alpha_term(p);
    let two_k2 = k.square().mul_pow2(1);
    let mut terms = Vec::with_capacity(m.len());
    for g in m.generators() {
        let sup = index_sup(g, hull)?;
        if sup > *k {
            return Err(Error::Class(format!("sup |A| = {sup} of {} exceeds K = {k}", g.name())));
        }
        let lip = lipschitz_f2(g, hull)?;
        terms.push(lip / (&two_k2 * &g.d1(abar)?.abs()) + &base);
    }
    let n = BigReal::from_i64(terms.len() as i64, p);
    let c = sum(&terms, p) / &n;
    let squares: Vec<BigReal> = terms.iter().map(BigReal::square).collect();
    let c2 = (sum(&squares, p) / &n).sqrt();
    Ok(TheoremConstants {
        alpha: alpha(p),
        c,
        c2,
        k: k.clone(),
        terms,
    })
}

#[derive(Clone, Debug)]
pub struct MainTheoremReport {
    /// `Var(M(a))`.
    pub lhs: BigReal,
    /// `Var(a)^2 Var(A(mean)) / 4`.
    pub model: BigReal,
    /// `4 C K^5 delta^5 + (3 C^2 + C_2^2) K^6 delta^6`.
    pub error_budget: BigReal,
    pub holds: bool,
    /// For `K delta >= 1`: whether the budget is at least `3 (K delta)^6` and
    /// dominates the crude bound `(K delta)^2 + (K delta)^4 / 4` on the
    /// rescaled gap.
    pub large_spread_branch: Option<bool>,
    /// `None` for constant vectors.
    pub constants: Option<TheoremConstants>,
}

/// Variance of the Arrow-Pratt vector `(A_f1(x), ..., A_fn(x))`.
pub fn index_variance(m: &GaussMap, x: &BigReal) -> Result<BigReal> {
    let indexes = m
        .generators()
        .iter()
        .map(|g| g.arrow_pratt(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(stats(&SampleVector::new(indexes)?).variance)
}

/// Evaluates both sides of the variance contraction estimate.
pub fn main_theorem_check(m: &GaussMap, a: &SampleVector, k: &BigReal) -> Result<MainTheoremReport> {
    let p = a.precision();
    let st = stats(a);
    let lhs = stats(&apply_map(m, a)?).variance;
    let model = st.variance.square() * index_variance(m, &st.mean)?.mul_pow2(-2);
    let Some(hull) = a.hull() else {
        return Ok(MainTheoremReport {
            holds: (&lhs - &model).is_zero(),
            lhs,
            model,
            error_budget: BigReal::zero(p),
            large_spread_branch: None,
            constants: None,
        });
    };
    let constants = theorem_constants(m, &st.mean, k, &hull)?;
    let kd = k * &st.spread;
    let error_budget = BigReal::from_i64(4, p) * &constants.c * k.powi(5) * st.spread.powi(5)
        + (BigReal::from_i64(3, p) * constants.c.square() + constants.c2.square()) * k.powi(6) * st.spread.powi(6);
    let holds = (&lhs - &model).abs() <= error_budget;
    // In the units of the rescaled problem (`b = K a`, every index bounded by
    // one) the spread is `D = K delta` and the gap scales by `K^2`; for
    // `D >= 1` the budget dominates `D^2 + D^4 / 4`, which bounds the gap.
    let large_spread_branch = if kd >= BigReal::one(p) {
        let crude = kd.square() + kd.powi(4).mul_pow2(-2);
        let floor = BigReal::from_i64(3, p) * kd.powi(6);
        let gap = (&lhs - &model).abs() * k.square();
        Some(floor <= error_budget && crude <= error_budget && gap <= crude)
    } else {
        None
    };
    Ok(MainTheoremReport {
        lhs,
        model,
        error_budget,
        holds,
        large_spread_branch,
        constants: Some(constants),
    })
}

#[derive(Clone, Debug)]
pub struct RatioBoundReport {
    /// `Var(M(b)) / Var(b)^2` for the rescaled vector `b = K a`.
    pub ratio: BigReal,
    /// `Var(A(mean b)) / 4` for the rescaled generators.
    pub center: BigReal,
    pub deviation: BigReal,
    /// `16 n^2 C delta + 4 n^2 (3 C^2 + C_2^2) delta^2`, in rescaled units.
    pub bound: BigReal,
    pub holds: bool,
}

/// The contraction estimate divided by `Var^2`, evaluated after rescaling
/// generators and vector by `K` so that every index is bounded by one.
pub fn ratio_bound_check(m: &GaussMap, a: &SampleVector, k: &BigReal) -> Result<RatioBoundReport> {
    let st = stats(a);
    if !st.variance.is_positive() {
        return Err(Error::DegenerateInput("ratio bound needs Var(a) > 0".into()));
    }
    let p = a.precision();
    let gens = m
        .generators()
        .iter()
        .map(|g| rescale(g, k))
        .collect::<Result<Vec<_>>>()?;
    let scaled = GaussMap::new(gens)?;
    let b = a.scale(k);
    let sb = stats(&b);
    let hull = b.hull().expect("nonconstant");
    let one = BigReal::one(p);
    let constants = theorem_constants(&scaled, &sb.mean, &one, &hull)?;
    let ratio = stats(&apply_map(&scaled, &b)?).variance / sb.variance.square();
    let center = index_variance(&scaled, &sb.mean)?.mul_pow2(-2);
    let n2 = BigReal::from_i64((a.len() * a.len()) as i64, p);
    let bound = BigReal::from_i64(16, p) * &n2 * &constants.c * &sb.spread
        + BigReal::from_i64(4, p)
            * &n2
            * (BigReal::from_i64(3, p) * constants.c.square() + constants.c2.square())
            * sb.spread.square();
    let deviation = (&ratio - &center).abs();
    Ok(RatioBoundReport {
        holds: deviation <= bound,
        ratio,
        center,
        deviation,
        bound,
    })
}

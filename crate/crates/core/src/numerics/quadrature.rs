//! Adaptive Gauss-Legendre quadrature at arbitrary precision.
//!
//! Each panel is integrated with an 8-point and a 16-point Gauss-Legendre
//! rule; their difference is the panel error estimate and the 16-point value
//! is kept. Panels that miss their share of the tolerance are bisected.
//! Nodes and weights are computed by Newton iteration on the Legendre
//! polynomial at the working precision and cached per precision.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::BigReal;
use crate::error::{Error, Result};

const LOW_ORDER: usize = 8;
const HIGH_ORDER: usize = 16;
const NODE_GUARD_BITS: usize = 32;
/// Bisections allowed per integral. Smooth integrands need a few dozen; an
/// unreachable tolerance would otherwise grow the panel count geometrically.
const MAX_BISECTIONS: usize = 4096;

/// Tolerances and refinement budget for [`integrate`].
#[derive(Clone, Debug)]
pub struct QuadratureConfig {
    abs_tol: BigReal,
    rel_tol: BigReal,
    max_depth: usize,
}

impl QuadratureConfig {
    pub const MIN_DEPTH: usize = 10;

    pub fn new(abs_tol: BigReal, rel_tol: BigReal, max_depth: usize) -> Result<Self> {
        if !abs_tol.is_positive() || !rel_tol.is_positive() {
            return Err(Error::InvalidConfig(format!(
                "quadrature tolerances must be positive (abs {abs_tol}, rel {rel_tol})"
            )));
        }
        if max_depth < Self::MIN_DEPTH {
            return Err(Error::InvalidConfig(format!(
                "quadrature max_depth must be at least {}, got {max_depth}",
                Self::MIN_DEPTH
            )));
        }
        Ok(QuadratureConfig {
            abs_tol,
            rel_tol,
            max_depth,
        })
    }

    /// Defaults scaled to the precision: `rel_tol = 1e-30` at 256 bits (and
    /// proportionally more or fewer digits elsewhere), `abs_tol` twenty digits
    /// tighter, depth 48.
    pub fn for_precision(precision: usize) -> Self {
        let digits = (30 * precision / 256).max(6);
        let rel = BigReal::parse_decimal(&format!("1e-{digits}"), precision).expect("literal");
        let abs = BigReal::parse_decimal(&format!("1e-{}", digits + 20), precision).expect("literal");
        QuadratureConfig {
            abs_tol: abs,
            rel_tol: rel,
            max_depth: 48,
        }
    }

    pub fn abs_tol(&self) -> &BigReal {
        &self.abs_tol
    }

    pub fn rel_tol(&self) -> &BigReal {
        &self.rel_tol
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// The error allowance `max(abs_tol, rel_tol * |value|)`.
    pub fn budget(&self, value: &BigReal) -> BigReal {
        let rel = &self.rel_tol * &value.abs();
        rel.max(&self.abs_tol)
    }
}

struct Rule {
    nodes: Vec<BigReal>,
    weights: Vec<BigReal>,
}

struct RulePair {
    low: Rule,
    high: Rule,
}

static RULE_CACHE: spin::Mutex<Vec<(usize, Arc<RulePair>)>> = spin::Mutex::new(Vec::new());

fn rules_for(precision: usize) -> Arc<RulePair> {
    if let Some((_, r)) = RULE_CACHE.lock().iter().find(|(p, _)| *p == precision) {
        return r.clone();
    }
    let pair = Arc::new(RulePair {
        low: gauss_legendre(LOW_ORDER, precision),
        high: gauss_legendre(HIGH_ORDER, precision),
    });
    let mut cache = RULE_CACHE.lock();
    if !cache.iter().any(|(p, _)| *p == precision) {
        cache.push((precision, pair.clone()));
    }
    pair
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: &BigReal) -> (BigReal, BigReal) {
    let p = x.precision();
    let one = BigReal::one(p);
    let mut prev = one.clone();
    let mut cur = x.clone();
    for k in 2..=n {
        let kk = BigReal::from_i64(k as i64, p);
        let a = BigReal::from_i64(2 * k as i64 - 1, p);
        let b = BigReal::from_i64(k as i64 - 1, p);
        let next = (&a * x * &cur - &b * &prev) / &kk;
        prev = cur;
        cur = next;
    }
    let nn = BigReal::from_i64(n as i64, p);
    let deriv = &nn * &(x * &cur - &prev) / &(x.square() - &one);
    (cur, deriv)
}

fn gauss_legendre(n: usize, precision: usize) -> Rule {
    let work = precision + NODE_GUARD_BITS;
    let pi = BigReal::pi(work);
    let one = BigReal::one(work);
    let two = BigReal::from_i64(2, work);
    let stop = BigReal::pow2(-(work as i64 - 8), work);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 1..=n {
        // Tricomi-style starting point; Newton converges from here.
        let theta = &pi * &BigReal::from_ratio(4 * i as i64 - 1, 4 * n as i64 + 2, work);
        let mut x = theta.cos();
        for _ in 0..200 {
            let (pn, dpn) = legendre(n, &x);
            let dx = &pn / &dpn;
            x = &x - &dx;
            if dx.abs() <= stop {
                break;
            }
        }
        let (_, dpn) = legendre(n, &x);
        let w = &two / &((&one - &x.square()) * dpn.square());
        nodes.push(x.with_precision(precision));
        weights.push(w.with_precision(precision));
    }
    Rule { nodes, weights }
}

struct Panel {
    lo: BigReal,
    hi: BigReal,
    high: BigReal,
    low: BigReal,
    noise: BigReal,
    depth: usize,
}

fn eval_panel<G>(g: &G, rules: &RulePair, lo: &BigReal, hi: &BigReal, depth: usize) -> Result<Panel>
where
    G: Fn(&BigReal) -> Result<BigReal>,
{
    let p = lo.precision().max(hi.precision());
    let half = (hi - lo).mul_pow2(-1);
    let center = (hi + lo).mul_pow2(-1);
    let apply = |rule: &Rule, l1: &mut BigReal| -> Result<BigReal> {
        let mut acc = BigReal::zero(p);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let x = &center + &(&half * t);
            let v = g(&x)?;
            if !v.is_finite() {
                return Err(Error::Domain(format!("integrand not finite at {x}")));
            }
            let term = w * &v;
            *l1 += term.abs();
            acc += term;
        }
        Ok(&acc * &half)
    };
    let mut l1 = BigReal::zero(p);
    let high = apply(&rules.high, &mut l1)?;
    let low = apply(&rules.low, &mut BigReal::zero(p))?;
    // rounding noise of the 16-point sum
    let noise = (l1 * half.abs()).mul_pow2(-(p as i64 - 10));
    Ok(Panel {
        lo: lo.clone(),
        hi: hi.clone(),
        high,
        low,
        noise,
        depth,
    })
}

/// Signed integral of `g` from `a` to `b`.
///
/// The estimated error is at most `max(abs_tol, rel_tol * |result|)`, up to
/// the rounding noise of the working precision. `integrate(g, a, a)` is zero
/// and swapping the limits flips the sign.
pub fn integrate<G>(g: G, a: &BigReal, b: &BigReal, cfg: &QuadratureConfig) -> Result<BigReal>
where
    G: Fn(&BigReal) -> Result<BigReal>,
{
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("integration limits must be finite: [{a}, {b}]")));
    }
    if a == b {
        return Ok(BigReal::zero(a.precision().max(b.precision())));
    }
    if a > b {
        return integrate(g, b, a, cfg).map(|v| -v);
    }
    let p = a.precision().max(b.precision());
    let rules = rules_for(p);
    let total_width = b - a;
    let first = eval_panel(&g, &rules, a, b, 0)?;
    let tol = cfg.budget(&first.high);

    let mut total = BigReal::zero(p);
    let mut stack = alloc::vec![first];
    let mut bisections = 0;
    while let Some(panel) = stack.pop() {
        let err = (&panel.high - &panel.low).abs();
        let share = &tol * &(&(&panel.hi - &panel.lo) / &total_width);
        if err <= share || err <= panel.noise {
            total += &panel.high;
            continue;
        }
        if panel.depth >= cfg.max_depth {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                detail: format!(
                    "panel [{}, {}] still has error estimate {} after {} bisections",
                    panel.lo, panel.hi, err, cfg.max_depth
                ),
            });
        }
        bisections += 1;
        if bisections > MAX_BISECTIONS {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                detail: format!(
                    "error estimate {err} on [{}, {}] after {MAX_BISECTIONS} bisections",
                    panel.lo, panel.hi
                ),
            });
        }
        let mid = (&panel.lo + &panel.hi).mul_pow2(-1);
        let right = eval_panel(&g, &rules, &mid, &panel.hi, panel.depth + 1)?;
        let left = eval_panel(&g, &rules, &panel.lo, &mid, panel.depth + 1)?;
        stack.push(right);
        stack.push(left);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DEFAULT_PRECISION;

    const P: usize = DEFAULT_PRECISION;

    fn d(s: &str) -> BigReal {
        BigReal::parse_decimal(s, P).unwrap()
    }

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::for_precision(P)
    }

    #[test]
    fn constant_integrand() {
        let v = integrate(|_| Ok(BigReal::one(P)), &d("0"), &d("1"), &cfg()).unwrap();
        assert!(v.approx_eq(&BigReal::one(P), &d("1e-70")));
    }

    #[test]
    fn odd_integrand_vanishes() {
        let v = integrate(|t| Ok(t.clone()), &d("-1"), &d("1"), &cfg()).unwrap();
        assert!(v.abs() <= d("1e-70"));
    }

    #[test]
    fn reciprocal_gives_ln2() {
        // ln 2, independently from the logarithm
        let ln2 = d(
            "0.693147180559945309417232121458176568075500134360255254120680009493393621969694715605863326996418687542",
        );
        let v = integrate(|t| Ok(t.recip()), &d("1"), &d("2"), &cfg()).unwrap();
        assert!(v.approx_eq(&ln2, &d("1e-30")), "{v}");
    }

    #[test]
    fn limits_swap_and_collapse() {
        let g = |t: &BigReal| Ok(t.exp());
        let fwd = integrate(g, &d("0.25"), &d("1.5"), &cfg()).unwrap();
        let back = integrate(g, &d("1.5"), &d("0.25"), &cfg()).unwrap();
        assert_eq!(fwd, -back);
        assert!(integrate(g, &d("1.5"), &d("1.5"), &cfg()).unwrap().is_zero());
    }

    #[test]
    fn domain_error_propagates() {
        let g = |t: &BigReal| {
            if t > &d("0.5") {
                Err(Error::Domain("outside".into()))
            } else {
                Ok(t.clone())
            }
        };
        assert!(matches!(integrate(g, &d("0"), &d("1"), &cfg()), Err(Error::Domain(_))));
    }

    #[test]
    fn nonconvergence_is_reported() {
        // jump discontinuity defeats the polynomial rules at any finite depth
        let g = |t: &BigReal| {
            Ok(if t > &d("0.3") {
                BigReal::one(P)
            } else {
                BigReal::zero(P)
            })
        };
        let tight = QuadratureConfig::new(d("1e-70"), d("1e-70"), 10).unwrap();
        assert!(matches!(
            integrate(g, &d("0"), &d("1"), &tight),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(QuadratureConfig::new(d("0"), d("1e-10"), 20).is_err());
        assert!(QuadratureConfig::new(d("1e-10"), d("1e-10"), 5).is_err());
    }

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        let rules = rules_for(P);
        // 16-point rule is exact through degree 31
        let mut acc = BigReal::zero(P);
        for (x, w) in rules.high.nodes.iter().zip(&rules.high.weights) {
            acc += w * &x.powi(30);
        }
        let exact = BigReal::from_ratio(2, 31, P);
        assert!(acc.approx_eq(&exact, &d("1e-70")), "{acc}");
    }
}

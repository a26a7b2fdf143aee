//! Arrow-Pratt index, class data (`sup |A_f|`, `Lip(f'')`, `||A_f||_*`) and
//! the rescaling `f(x) -> f(x / K)`.
//!
//! Builtins use closed forms; every quantity also has a sampled route
//! (`*_sampled`) working from function values only, on a 1024-point grid
//! refined three times around the extremum.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{Generator, GeneratorKind};
use crate::error::{Error, Result};
use crate::numerics::{BigReal, Interval};

const GRID_POINTS: usize = 1024;
const REFINE_ROUNDS: usize = 3;
const REFINE_POINTS: usize = 64;
const COMPARE_POINTS: usize = 257;

/// Class data of a generator on an interval.
#[derive(Clone, Debug)]
pub struct GeneratorClassReport {
    /// `sup |A_f|` on the interval.
    pub k_bound: BigReal,
    /// Lipschitz constant of `f''` on the interval.
    pub lip_f2: BigReal,
    /// `||A_f||_*`: oscillation of `ln |f'|` on the interval.
    pub star_norm: BigReal,
    pub in_x_k: bool,
    pub in_x_lip_k: bool,
    /// `lip_f2` came from difference quotients rather than `f'''`.
    pub lipschitz_estimated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexOrdering {
    Equal,
    /// `A_g1 <= A_g2` everywhere sampled.
    LessEq,
    /// `A_g1 >= A_g2` everywhere sampled.
    GreaterEq,
    Incomparable,
}

#[derive(Clone, Debug)]
pub struct IndexComparison {
    pub ordering: IndexOrdering,
    /// Extremes of `A_g1 - A_g2` over the sample.
    pub min_difference: BigReal,
    pub max_difference: BigReal,
}

fn check_restrict(g: &Generator, restrict: &Interval) -> Result<()> {
    if g.domain().contains_interval(restrict) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "[{}, {}] not inside domain [{}, {}] of {}",
            restrict.lo(),
            restrict.hi(),
            g.domain().lo(),
            g.domain().hi(),
            g.name()
        )))
    }
}

/// `f''(x) / f'(x)`.
pub fn arrow_pratt(g: &Generator, x: &BigReal) -> Result<BigReal> {
    g.arrow_pratt(x)
}

fn unscaled(restrict: &Interval, factor: &BigReal) -> Result<Interval> {
    Interval::new(restrict.lo() / factor, restrict.hi() / factor)
}

/// `sup |A_f|` on `restrict`.
pub fn index_sup(g: &Generator, restrict: &Interval) -> Result<BigReal> {
    check_restrict(g, restrict)?;
    index_sup_unchecked(g, restrict)
}

fn index_sup_unchecked(g: &Generator, restrict: &Interval) -> Result<BigReal> {
    let p = restrict.precision();
    match g.kind() {
        GeneratorKind::Power { exponent, .. } => Ok((exponent - &BigReal::one(p)).abs() / restrict.lo()),
        GeneratorKind::Exp { rate } => Ok(rate.abs()),
        GeneratorKind::Identity | GeneratorKind::Affine { .. } => Ok(BigReal::zero(p)),
        GeneratorKind::Rescaled { base, factor } => {
            Ok(index_sup_unchecked(base, &unscaled(restrict, factor)?)? / factor)
        }
        GeneratorKind::Custom(_) => index_sup_sampled(g, restrict),
    }
}

/// `||A_f||_* = sup_{a,b} |int_a^b A_f|` on `restrict`, i.e. the oscillation
/// of `ln |f'|`.
pub fn star_norm(g: &Generator, restrict: &Interval) -> Result<BigReal> {
    check_restrict(g, restrict)?;
    star_norm_unchecked(g, restrict)
}

fn star_norm_unchecked(g: &Generator, restrict: &Interval) -> Result<BigReal> {
    let p = restrict.precision();
    match g.kind() {
        GeneratorKind::Power { exponent, .. } => {
            let span = restrict.hi().ln() - restrict.lo().ln();
            Ok((exponent - &BigReal::one(p)).abs() * span)
        }
        GeneratorKind::Exp { rate } => Ok(rate.abs() * restrict.width()),
        GeneratorKind::Identity | GeneratorKind::Affine { .. } => Ok(BigReal::zero(p)),
        GeneratorKind::Rescaled { base, factor } => star_norm_unchecked(base, &unscaled(restrict, factor)?),
        GeneratorKind::Custom(_) => star_norm_sampled(g, restrict),
    }
}

/// Lipschitz constant of `f''` on `restrict`: `sup |f'''|` in closed form for
/// builtins, sampled otherwise.
pub fn lipschitz_f2(g: &Generator, restrict: &Interval) -> Result<BigReal> {
    check_restrict(g, restrict)?;
    lipschitz_unchecked(g, restrict)
}

fn lipschitz_unchecked(g: &Generator, restrict: &Interval) -> Result<BigReal> {
    let p = restrict.precision();
    match g.kind() {
        GeneratorKind::Power { exponent, .. } => {
            let one = BigReal::one(p);
            let two = BigReal::from_i64(2, p);
            if exponent.is_zero() {
                // |f'''| = 2 / x^3, largest at the left end
                return Ok(two / restrict.lo().powi(3));
            }
            let coeff = (exponent * &(exponent - &one) * &(exponent - &two)).abs();
            if coeff.is_zero() {
                return Ok(coeff);
            }
            let three = BigReal::from_i64(3, p);
            let shifted = exponent - &three;
            let at = |x: &BigReal| x.powf(&shifted);
            Ok(coeff * at(restrict.lo()).max(&at(restrict.hi())))
        }
        GeneratorKind::Exp { rate } => {
            let at = |x: &BigReal| (rate * x).exp();
            Ok(rate.abs().powi(3) * at(restrict.lo()).max(&at(restrict.hi())))
        }
        GeneratorKind::Identity | GeneratorKind::Affine { .. } => Ok(BigReal::zero(p)),
        GeneratorKind::Rescaled { base, factor } => {
            Ok(lipschitz_unchecked(base, &unscaled(restrict, factor)?)? / factor.powi(3))
        }
        GeneratorKind::Custom(_) => lipschitz_f2_sampled(g, restrict),
    }
}

/// Grid maximum of `h` with local refinement around the argmax.
fn sampled_max<H>(h: H, restrict: &Interval) -> Result<BigReal>
where
    H: Fn(&BigReal) -> Result<BigReal>,
{
    let grid = restrict.grid(GRID_POINTS);
    let values: Vec<BigReal> = grid.iter().map(&h).collect::<Result<_>>()?;
    let (mut best_i, mut best) = argmax(&values);
    let mut nodes = grid;
    for _ in 0..REFINE_ROUNDS {
        let lo = nodes[best_i.saturating_sub(1)].clone();
        let hi = nodes[(best_i + 1).min(nodes.len() - 1)].clone();
        let Ok(window) = Interval::new(lo, hi) else { break };
        nodes = window.grid(REFINE_POINTS);
        let vals: Vec<BigReal> = nodes.iter().map(&h).collect::<Result<_>>()?;
        let (i, v) = argmax(&vals);
        best_i = i;
        if v > best {
            best = v;
        }
    }
    Ok(best)
}

fn argmax(values: &[BigReal]) -> (usize, BigReal) {
    let mut best_i = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best_i] {
            best_i = i;
        }
    }
    (best_i, values[best_i].clone())
}

/// Sampled `sup |A_f|`.
pub fn index_sup_sampled(g: &Generator, restrict: &Interval) -> Result<BigReal> {
    check_restrict(g, restrict)?;
    sampled_max(|x| Ok((g.d2(x)? / g.d1(x)?).abs()), restrict)
}

/// Sampled oscillation of `ln |f'|`.
pub fn star_norm_sampled(g: &Generator, restrict: &Interval) -> Result<BigReal> {
    check_restrict(g, restrict)?;
    let log_slope = |x: &BigReal| Ok(g.d1(x)?.abs().ln());
    let hi = sampled_max(log_slope, restrict)?;
    let lo = -sampled_max(|x| log_slope(x).map(|v| -v), restrict)?;
    Ok(hi - lo)
}

/// Sampled Lipschitz constant of `f''`: `sup |f'''|` when `f'''` is known,
/// otherwise the largest difference quotient of `f''` between neighbouring
/// grid points (refined around the steepest cell).
pub fn lipschitz_f2_sampled(g: &Generator, restrict: &Interval) -> Result<BigReal> {
    check_restrict(g, restrict)?;
    if g.has_third_derivative() {
        return sampled_max(|x| Ok(g.d3(x)?.expect("third derivative present").abs()), restrict);
    }
    let mut nodes = restrict.grid(GRID_POINTS);
    let mut best = BigReal::zero(restrict.precision());
    for _ in 0..=REFINE_ROUNDS {
        let values: Vec<BigReal> = nodes.iter().map(|x| g.d2(x)).collect::<Result<_>>()?;
        let mut best_cell = 0;
        let mut cell_best = BigReal::zero(restrict.precision());
        for i in 0..nodes.len() - 1 {
            let q = ((&values[i + 1] - &values[i]) / (&nodes[i + 1] - &nodes[i])).abs();
            if q > cell_best {
                cell_best = q;
                best_cell = i;
            }
        }
        if cell_best > best {
            best = cell_best;
        }
        let lo = nodes[best_cell.saturating_sub(1)].clone();
        let hi = nodes[(best_cell + 2).min(nodes.len() - 1)].clone();
        let Ok(window) = Interval::new(lo, hi) else { break };
        nodes = window.grid(REFINE_POINTS);
    }
    Ok(best)
}

/// Class data on `restrict` and membership in `X_K` and `X^Lip_K`.
pub fn classify(g: &Generator, restrict: &Interval, k: &BigReal) -> Result<GeneratorClassReport> {
    if !k.is_positive() {
        return Err(Error::InvalidConfig(format!("class bound K must be positive, got {k}")));
    }
    check_restrict(g, restrict)?;
    let k_bound = index_sup_unchecked(g, restrict)?;
    let lip_f2 = lipschitz_unchecked(g, restrict)?;
    let star = star_norm_unchecked(g, restrict)?;
    let in_x_k = k_bound <= *k;
    Ok(GeneratorClassReport {
        in_x_lip_k: in_x_k && lip_f2.is_finite(),
        k_bound,
        lip_f2,
        star_norm: star,
        in_x_k,
        lipschitz_estimated: !g.has_third_derivative(),
    })
}

/// `h(x) = f(x / K)` on `K * domain`; maps `X^Lip_K(I)` into `X^Lip_1(K I)`.
pub fn rescale(g: &Generator, k: &BigReal) -> Result<Generator> {
    if !k.is_positive() || !k.is_finite() {
        return Err(Error::Spec(format!("rescale factor must be positive, got {k}")));
    }
    if *k == BigReal::one(k.precision()) {
        return Ok(g.clone());
    }
    let domain = g.domain().scale(k)?;
    let p = domain.precision();
    let name = format!("{}(x/{})", g.name(), k.to_short_string());
    match g.kind() {
        GeneratorKind::Exp { rate } => Generator::exp(rate / k, domain),
        GeneratorKind::Identity => Generator::affine(BigReal::one(p) / k, BigReal::zero(p), domain)
            .map(|h| Generator::with_parts(name, h.kind().clone(), h.domain().clone())),
        GeneratorKind::Affine { slope, intercept } => Generator::affine(slope / k, intercept.clone(), domain),
        GeneratorKind::Rescaled { base, factor } => Ok(Generator::with_parts(
            name,
            GeneratorKind::Rescaled {
                base: base.clone(),
                factor: factor * k,
            },
            domain,
        )),
        _ => Ok(Generator::with_parts(
            name,
            GeneratorKind::Rescaled {
                base: Arc::new(g.clone()),
                factor: k.clone(),
            },
            domain,
        )),
    }
}

/// Pointwise comparison of Arrow-Pratt indexes on a sample grid.
pub fn compare_indexes(g1: &Generator, g2: &Generator, restrict: &Interval) -> Result<IndexComparison> {
    check_restrict(g1, restrict)?;
    check_restrict(g2, restrict)?;
    let p = restrict.precision();
    let mut lo: Option<BigReal> = None;
    let mut hi: Option<BigReal> = None;
    let mut below = false;
    let mut above = false;
    for x in restrict.grid(COMPARE_POINTS) {
        let a1 = g1.arrow_pratt(&x)?;
        let a2 = g2.arrow_pratt(&x)?;
        let diff = &a1 - &a2;
        let noise = (BigReal::one(p) + a1.abs() + a2.abs()).mul_pow2(-(p as i64 - 8));
        if diff > noise {
            above = true;
        } else if -&diff > noise {
            below = true;
        }
        lo = Some(match lo {
            Some(m) => m.min(&diff),
            None => diff.clone(),
        });
        hi = Some(match hi {
            Some(m) => m.max(&diff),
            None => diff,
        });
    }
    let ordering = match (below, above) {
        (false, false) => IndexOrdering::Equal,
        (true, false) => IndexOrdering::LessEq,
        (false, true) => IndexOrdering::GreaterEq,
        (true, true) => IndexOrdering::Incomparable,
    };
    Ok(IndexComparison {
        ordering,
        min_difference: lo.expect("grid is nonempty"),
        max_difference: hi.expect("grid is nonempty"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{CustomFunctions, Descriptor};
    use crate::numerics::{integrate, QuadratureConfig};

    const P: usize = 256;

    fn d(s: &str) -> BigReal {
        BigReal::parse_decimal(s, P).unwrap()
    }

    fn iv(lo: &str, hi: &str) -> Interval {
        Interval::parse(lo, hi, P).unwrap()
    }

    fn gen(desc: &str, lo: &str, hi: &str) -> Generator {
        Generator::builtin(&Descriptor::parse(desc, P).unwrap(), iv(lo, hi)).unwrap()
    }

    fn close(a: &BigReal, b: &BigReal, tol: &str) -> bool {
        a.approx_eq(b, &d(tol))
    }

    #[test]
    fn star_norm_examples() {
        assert!(star_norm(&gen("identity", "-3", "5"), &iv("-1", "2"))
            .unwrap()
            .is_zero());
        let e = gen("exp:-1.5", "0", "4");
        assert!(close(&star_norm(&e, &iv("1", "3")).unwrap(), &d("3"), "1e-70"));
        let ln2 = d(
            "0.693147180559945309417232121458176568075500134360255254120680009493393621969694715605863326996418687542",
        );
        assert!(close(
            &star_norm(&gen("power:0", "1", "2"), &iv("1", "2")).unwrap(),
            &ln2,
            "1e-70"
        ));
    }

    #[test]
    fn star_norm_matches_quadrature_sup_search() {
        // oracle: sup over grid endpoints of |int_a^b A_f| by direct quadrature
        let g = gen("power:0", "1", "2");
        let cfg = QuadratureConfig::for_precision(P);
        let pts = iv("1", "2").grid(9);
        let mut best = BigReal::zero(P);
        for a in &pts {
            for b in &pts {
                let v = integrate(|t| g.arrow_pratt(t), a, b, &cfg).unwrap().abs();
                best = best.max(&v);
            }
        }
        assert!(close(&star_norm(&g, &iv("1", "2")).unwrap(), &best, "1e-28"));
        assert!(close(&star_norm_sampled(&g, &iv("1", "2")).unwrap(), &best, "1e-28"));
    }

    #[test]
    fn lipschitz_examples() {
        assert!(lipschitz_f2(&gen("identity", "0", "1"), &iv("0", "1"))
            .unwrap()
            .is_zero());
        let log = gen("power:0", "1", "4");
        assert!(close(&lipschitz_f2(&log, &iv("1", "4")).unwrap(), &d("2"), "1e-70"));
        let e = gen("exp:1", "0", "1");
        assert!(close(
            &lipschitz_f2(&e, &iv("0", "1")).unwrap(),
            &BigReal::e(P),
            "1e-70"
        ));
    }

    #[test]
    fn closed_forms_agree_with_sampling() {
        let cases = [
            ("power:2.5", "0.5", "3"),
            ("power:-1.5", "0.5", "3"),
            ("power:0", "0.2", "5"),
            ("power:1", "1", "2"),
            ("exp:0.8", "-1", "2"),
            ("exp:-2", "-1", "2"),
            ("affine:-3,1", "0", "1"),
        ];
        for (desc, lo, hi) in cases {
            let g = gen(desc, lo, hi);
            let r = iv(lo, hi);
            assert!(
                close(
                    &index_sup(&g, &r).unwrap(),
                    &index_sup_sampled(&g, &r).unwrap(),
                    "1e-60"
                ),
                "{desc}"
            );
            assert!(
                close(
                    &star_norm(&g, &r).unwrap(),
                    &star_norm_sampled(&g, &r).unwrap(),
                    "1e-60"
                ),
                "{desc}"
            );
            assert!(
                close(
                    &lipschitz_f2(&g, &r).unwrap(),
                    &lipschitz_f2_sampled(&g, &r).unwrap(),
                    "1e-60"
                ),
                "{desc}"
            );
        }
    }

    #[test]
    fn difference_quotient_lipschitz_for_custom() {
        let cube = CustomFunctions {
            f: Arc::new(|x: &BigReal| x.powi(4)),
            d1: Arc::new(|x: &BigReal| x.powi(3) * BigReal::from_i64(4, x.precision())),
            d2: Arc::new(|x: &BigReal| x.square() * BigReal::from_i64(12, x.precision())),
            d3: None,
            inverse: None,
        };
        let g = Generator::custom("quartic", cube, iv("1", "2")).unwrap();
        let r = iv("1", "2");
        // sup |f'''| = 24 x at x = 2
        let lip = lipschitz_f2(&g, &r).unwrap();
        assert!(close(&lip, &d("48"), "1e-3"), "{lip}");
        assert!(lip <= d("48"));
        let report = classify(&g, &r, &d("3")).unwrap();
        assert!(report.lipschitz_estimated);
        assert!(close(&report.k_bound, &d("3"), "1e-60"));
    }

    #[test]
    fn classify_examples() {
        let one = d("1");
        let r = classify(&gen("identity", "-5", "5"), &iv("-2", "2"), &one).unwrap();
        assert!(r.k_bound.is_zero() && r.in_x_k && r.in_x_lip_k);
        let r = classify(&gen("power:0", "1", "4"), &iv("1", "4"), &one).unwrap();
        assert!(close(&r.k_bound, &one, "1e-70") && r.in_x_k);
        let r = classify(&gen("exp:2", "0", "1"), &iv("0", "1"), &one).unwrap();
        assert!(close(&r.k_bound, &d("2"), "1e-70") && !r.in_x_k && !r.in_x_lip_k);
        assert!(!r.lipschitz_estimated);
        assert!(matches!(
            classify(&gen("exp:2", "0", "1"), &iv("0", "2"), &one),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rescale_examples() {
        let g = gen("power:2", "1", "3");
        let same = rescale(&g, &d("1")).unwrap();
        assert_eq!(same.name(), g.name());

        let e = rescale(&gen("exp:3", "0", "1"), &d("4")).unwrap();
        assert!(matches!(e.kind(), GeneratorKind::Exp { .. }));
        assert!(close(&e.arrow_pratt(&d("2")).unwrap(), &d("0.75"), "1e-70"));

        let log = gen("power:0", "1", "4");
        let h = rescale(&log, &d("2")).unwrap();
        let ah = h.arrow_pratt(&d("2")).unwrap();
        let ag = log.arrow_pratt(&d("1")).unwrap() / d("2");
        assert!(close(&ah, &d("-0.5"), "1e-70") && close(&ah, &ag, "1e-70"));
        assert!(close(
            &h.d1(&d("4")).unwrap(),
            &(log.d1(&d("2")).unwrap() / d("2")),
            "1e-70"
        ));
        assert!(close(
            &h.d2(&d("4")).unwrap(),
            &(log.d2(&d("2")).unwrap() / d("4")),
            "1e-70"
        ));
        assert!(rescale(&log, &d("-1")).is_err());
    }

    #[test]
    fn compare_examples() {
        let r = iv("1", "4");
        let id = gen("identity", "0.5", "5");
        let e = gen("exp:1", "0.5", "5");
        let log = gen("power:0", "0.5", "5");
        let cube = gen("power:3", "0.5", "5");
        assert_eq!(compare_indexes(&id, &e, &r).unwrap().ordering, IndexOrdering::LessEq);
        assert_eq!(compare_indexes(&log, &id, &r).unwrap().ordering, IndexOrdering::LessEq);
        assert_eq!(
            compare_indexes(&cube, &log, &r).unwrap().ordering,
            IndexOrdering::GreaterEq
        );
        assert_eq!(
            compare_indexes(&cube, &cube, &r).unwrap().ordering,
            IndexOrdering::Equal
        );
        // A = 2/x crosses A = 1 at x = 2
        assert_eq!(
            compare_indexes(&cube, &e, &r).unwrap().ordering,
            IndexOrdering::Incomparable
        );
    }
}

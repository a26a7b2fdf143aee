//! The Gauss map `a -> (QA_f1(a), ..., QA_fn(a))`, its orbits and the
//! invariant mean they converge to.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::means::{qa_mean, stats, SampleVector, VectorStats};
use crate::numerics::{BigReal, Interval};

/// Default iteration cap for [`gaussian_product`].
pub const DEFAULT_MAX_ITERS: usize = 200;

/// `n >= 2` generators acting on a common interval.
#[derive(Clone, Debug)]
pub struct GaussMap {
    generators: Vec<Generator>,
    interval: Interval,
}

impl GaussMap {
    /// The common interval is the intersection of the generator domains.
    pub fn new(generators: Vec<Generator>) -> Result<Self> {
        if generators.len() < 2 {
            return Err(Error::Spec(format!(
                "a Gauss map needs at least 2 generators, got {}",
                generators.len()
            )));
        }
        let mut interval = generators[0].domain().clone();
        for g in &generators[1..] {
            interval = interval
                .intersect(g.domain())
                .ok_or_else(|| Error::Domain(format!("domain of {} misses the other generators' domains", g.name())))?;
        }
        Ok(GaussMap { generators, interval })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }
}

/// One component per generator. The input may have any length; the output
/// always has `m.len()` entries.
pub fn apply_map(m: &GaussMap, a: &SampleVector) -> Result<SampleVector> {
    if let Some(bad) = a.entries().iter().find(|x| !m.interval.contains(x)) {
        return Err(Error::Domain(format!(
            "{bad} outside common interval [{}, {}]",
            m.interval.lo(),
            m.interval.hi()
        )));
    }
    let out = m.generators.iter().map(|g| qa_mean(g, a)).collect::<Result<Vec<_>>>()?;
    SampleVector::new(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Terminal {
    Converged,
    Degenerate,
    MaxIters,
    PrecisionFloor,
}

impl Terminal {
    pub fn as_str(self) -> &'static str {
        match self {
            Terminal::Converged => "converged",
            Terminal::Degenerate => "degenerate",
            Terminal::MaxIters => "max_iters",
            Terminal::PrecisionFloor => "precision_floor",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Step {
    pub vector: SampleVector,
    pub stats: VectorStats,
}

/// `Var_{k+1} / Var_k^2` for a step pair with `Var_k > 0`.
#[derive(Clone, Debug)]
pub struct RatioSample {
    /// Index `k + 1` of the later step.
    pub step: usize,
    pub ratio: BigReal,
    /// `delta_{k+1}` is well above the rounding floor, so the ratio carries
    /// meaningful digits.
    pub above_floor: bool,
}

#[derive(Clone, Debug)]
pub struct IterationTrace {
    pub steps: Vec<Step>,
    pub ratio_series: Vec<RatioSample>,
    /// Three-point order estimates `(step, p)` on spreads above the noise floor.
    pub order_estimates: Vec<(usize, BigReal)>,
    pub terminal: Terminal,
    pub precision: usize,
}

impl IterationTrace {
    /// The last computed step.
    pub fn last(&self) -> &Step {
        self.steps.last().expect("trace has a start step")
    }

    /// Number of map applications performed.
    pub fn iterations(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn spreads(&self) -> Vec<BigReal> {
        self.steps.iter().map(|s| s.stats.spread.clone()).collect()
    }
}

/// `2^-(p/2)` relative to the vector magnitude: below this the spread is
/// dominated by rounding of the quadratic step.
fn half_precision_floor(v: &SampleVector, p: usize) -> BigReal {
    v.magnitude() * BigReal::pow2(-((p / 2) as i64), p)
}

/// Spreads below `2^-(p-16)` relative are not used for order estimates.
fn noise_floor(scale: &BigReal, p: usize) -> BigReal {
    scale * &BigReal::pow2(-(p as i64 - 16), p)
}

/// Iterates the map from `a` until the spread is at most `tol`, the orbit
/// degenerates, rounding stalls the spread, or `max_iters` steps are done.
pub fn iterate(m: &GaussMap, a: &SampleVector, max_iters: usize, tol: &BigReal) -> Result<IterationTrace> {
    if max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
    }
    if !tol.is_positive() {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let p = a.precision();
    let start = Step {
        stats: stats(a),
        vector: a.clone(),
    };
    let mut trace = IterationTrace {
        steps: alloc::vec![start],
        ratio_series: Vec::new(),
        order_estimates: Vec::new(),
        terminal: Terminal::MaxIters,
        precision: p,
    };
    if a.len() == m.len() && trace.steps[0].stats.spread <= *tol {
        trace.terminal = Terminal::Converged;
        return Ok(trace);
    }
    let scale = a.magnitude();
    for k in 0..max_iters {
        let prev = &trace.steps[k];
        let next_vec = apply_map(m, &prev.vector)?;
        let next_stats = stats(&next_vec);
        let floor = half_precision_floor(&next_vec, p);
        if prev.stats.variance.is_positive() {
            trace.ratio_series.push(RatioSample {
                step: k + 1,
                ratio: &next_stats.variance / &prev.stats.variance.square(),
                above_floor: next_stats.spread >= floor,
            });
        }
        let degenerate = next_vec.is_constant()
            && !prev.vector.is_constant()
            && prev.stats.spread >= half_precision_floor(&prev.vector, p);
        let converged = next_stats.spread <= *tol;
        let stalled = prev.stats.spread < half_precision_floor(&prev.vector, p)
            && next_stats.spread >= &prev.stats.spread * &(BigReal::one(p) - BigReal::pow2(-10, p));
        trace.steps.push(Step {
            vector: next_vec,
            stats: next_stats,
        });
        if k >= 1 {
            let ds = [&trace.steps[k - 1], &trace.steps[k], &trace.steps[k + 1]].map(|s| &s.stats.spread);
            if let Some(order) = three_point_order(ds[0], ds[1], ds[2], &noise_floor(&scale, p)) {
                trace.order_estimates.push((k + 1, order));
            }
        }
        if degenerate {
            trace.terminal = Terminal::Degenerate;
            return Ok(trace);
        }
        if converged {
            trace.terminal = Terminal::Converged;
            return Ok(trace);
        }
        if stalled {
            trace.terminal = Terminal::PrecisionFloor;
            return Ok(trace);
        }
    }
    Ok(trace)
}

/// `ln(d2 / d1) / ln(d1 / d0)`, or `None` when a spread is under the floor or
/// the spreads do not decrease.
fn three_point_order(d0: &BigReal, d1: &BigReal, d2: &BigReal, floor: &BigReal) -> Option<BigReal> {
    if d2 < floor || d1 < floor || d0 < floor {
        return None;
    }
    let lower = (d1 / d0).ln();
    let upper = (d2 / d1).ln();
    if !lower.is_negative() || !upper.is_negative() {
        return None;
    }
    Some(upper / lower)
}

/// Convergence order from a spread sequence, using the three-point estimate
/// `p_k = ln(d_{k+1}/d_k) / ln(d_k/d_{k-1})` on spreads at least `floor`.
/// Returns the last estimate.
pub fn estimate_order_from_spreads(spreads: &[BigReal], floor: &BigReal) -> Result<BigReal> {
    let usable: Vec<&BigReal> = spreads.iter().take_while(|d| d.is_positive() && *d >= floor).collect();
    if usable.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "order estimate needs 4 spreads above the noise floor, have {}",
            usable.len()
        )));
    }
    let mut last = None;
    for w in usable.windows(3) {
        if let Some(p) = three_point_order(w[0], w[1], w[2], floor) {
            last = Some(p);
        }
    }
    last.ok_or_else(|| Error::InsufficientData("spreads never decrease".into()))
}

/// Convergence order of an orbit; see [`estimate_order_from_spreads`].
pub fn estimate_order(trace: &IterationTrace) -> Result<BigReal> {
    let scale = trace.steps[0].vector.magnitude();
    estimate_order_from_spreads(&trace.spreads(), &noise_floor(&scale, trace.precision))
}

/// Tail value of `Var_{k+1} / Var_k^2`: the last ratio above the precision
/// floor.
pub fn ratio_limit_empirical(trace: &IterationTrace) -> Result<BigReal> {
    if trace.terminal == Terminal::Degenerate {
        return Err(Error::DegenerateProcess {
            step: trace.iterations(),
        });
    }
    let usable: Vec<&RatioSample> = trace.ratio_series.iter().filter(|r| r.above_floor).collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "ratio limit needs 3 ratios above the precision floor, have {}",
            usable.len()
        )));
    }
    Ok(usable.last().expect("nonempty").ratio.clone())
}

/// `Var_j(A_fj(point)) / 4`.
pub fn ratio_limit_predicted(m: &GaussMap, point: &BigReal) -> Result<BigReal> {
    let indexes = m
        .generators
        .iter()
        .map(|g| g.arrow_pratt(point))
        .collect::<Result<Vec<_>>>()?;
    Ok(stats(&SampleVector::new(indexes)?).variance.mul_pow2(-2))
}

#[derive(Clone, Debug)]
pub struct GaussianProductResult {
    pub value: BigReal,
    pub iterations: usize,
    /// Final spread plus a rounding allowance of `2^-(p-4)` times the vector
    /// magnitude.
    pub certified_error: BigReal,
    pub terminal: Terminal,
}

fn default_tol(a: &SampleVector) -> BigReal {
    let p = a.precision();
    a.magnitude() * BigReal::pow2(-(p as i64 - 8), p)
}

/// The invariant mean with default iteration cap and tolerance.
pub fn gaussian_product(m: &GaussMap, a: &SampleVector) -> Result<GaussianProductResult> {
    gaussian_product_with(m, a, DEFAULT_MAX_ITERS, &default_tol(a))
}

/// The invariant mean `QA_(x)(a)`, reported as the arithmetic mean of the
/// final orbit vector.
pub fn gaussian_product_with(
    m: &GaussMap,
    a: &SampleVector,
    max_iters: usize,
    tol: &BigReal,
) -> Result<GaussianProductResult> {
    let trace = iterate(m, a, max_iters, tol)?;
    product_from_trace(&trace)
}

/// Reads the invariant mean off a finished trace.
pub fn product_from_trace(trace: &IterationTrace) -> Result<GaussianProductResult> {
    let last = trace.last();
    if trace.terminal == Terminal::MaxIters {
        return Err(Error::NonConvergence {
            what: "Gaussian iteration",
            detail: format!("spread {} after {} iterations", last.stats.spread, trace.iterations()),
        });
    }
    let p = trace.precision;
    let allowance = last.vector.magnitude() * BigReal::pow2(-(p as i64 - 4), p);
    Ok(GaussianProductResult {
        value: last.stats.mean.clone(),
        iterations: trace.iterations(),
        certified_error: &last.stats.spread + &allowance,
        terminal: trace.terminal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::Descriptor;
    use proptest::prelude::*;

    fn d(s: &str, p: usize) -> BigReal {
        BigReal::parse_decimal(s, p).unwrap()
    }

    fn map(descs: &[&str], p: usize) -> GaussMap {
        let dom = Interval::parse("0.001", "1000", p).unwrap();
        GaussMap::new(
            descs
                .iter()
                .map(|s| Generator::builtin(&Descriptor::parse(s, p).unwrap(), dom.clone()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn v(xs: &[&str], p: usize) -> SampleVector {
        SampleVector::from_decimals(xs, p).unwrap()
    }

    /// AGM(x, y) by the two-term recursion on plain arithmetic/sqrt.
    fn agm_oracle(x: &str, y: &str, p: usize) -> BigReal {
        let mut a = d(x, p);
        let mut b = d(y, p);
        let stop = BigReal::pow2(-(p as i64 - 4), p);
        for _ in 0..100 {
            let next = (&a + &b).mul_pow2(-1);
            b = (&a * &b).sqrt();
            a = next;
            if (&a - &b).abs() <= stop {
                break;
            }
        }
        a
    }

    #[test]
    fn apply_map_examples() {
        let p = 256;
        let out = apply_map(&map(&["power:1", "power:0"], p), &v(&["1", "2"], p)).unwrap();
        assert!(out.entries()[0].approx_eq(&d("1.5", p), &d("1e-70", p)));
        assert!(out.entries()[1].approx_eq(&d("2", p).sqrt(), &d("1e-70", p)));
        let c = apply_map(&map(&["power:3", "exp:1"], p), &v(&["2.5", "2.5"], p)).unwrap();
        assert!(c.entries().iter().all(|x| *x == d("2.5", p)));
        let same = apply_map(&map(&["power:1", "power:1"], p), &v(&["1", "3"], p)).unwrap();
        assert!(same.is_constant() && same.entries()[0] == d("2", p));
        let single = apply_map(&map(&["power:1", "power:0"], p), &v(&["5"], p)).unwrap();
        assert_eq!(single.len(), 2);
        assert!(single.entries().iter().all(|x| *x == d("5", p)));
    }

    #[test]
    fn agm_converges_quickly() {
        let p = 256;
        let m = map(&["power:1", "power:0"], p);
        let t = iterate(&m, &v(&["1", "2"], p), 50, &d("1e-60", p)).unwrap();
        assert_eq!(t.terminal, Terminal::Converged);
        assert!(t.iterations() <= 10, "{}", t.iterations());
    }

    #[test]
    fn identical_generators_degenerate_at_step_one() {
        let p = 256;
        let t = iterate(&map(&["power:1", "power:1"], p), &v(&["1", "3"], p), 50, &d("1e-60", p)).unwrap();
        assert_eq!(t.terminal, Terminal::Degenerate);
        assert_eq!(t.iterations(), 1);
        assert!(matches!(
            ratio_limit_empirical(&t),
            Err(Error::DegenerateProcess { .. })
        ));
        let g = gaussian_product(&map(&["power:1", "power:1"], p), &v(&["1", "3"], p)).unwrap();
        assert_eq!(g.value, d("2", p));
    }

    #[test]
    fn constant_start_converges_at_step_zero() {
        let p = 256;
        let t = iterate(
            &map(&["power:1", "power:0"], p),
            &v(&["1.25", "1.25"], p),
            50,
            &d("1e-60", p),
        )
        .unwrap();
        assert_eq!(t.terminal, Terminal::Converged);
        assert_eq!(t.iterations(), 0);
        assert!(t.last().stats.spread.is_zero());
        let g = gaussian_product(&map(&["power:1", "power:0"], p), &v(&["1.25", "1.25"], p)).unwrap();
        assert_eq!(g.value, d("1.25", p));
    }

    #[test]
    fn agm_matches_oracle_at_two_precisions() {
        for p in [256, 384] {
            let g = gaussian_product(&map(&["power:1", "power:0"], p), &v(&["1", "2"], p)).unwrap();
            let oracle = agm_oracle("1", "2", p + 64);
            assert!(g.value.approx_eq(&oracle, &d("1e-50", p)));
            assert!(g.value.approx_eq(&d("1.456791031046906869", p), &d("1e-18", p)));
        }
    }

    #[test]
    fn agm_order_is_two() {
        let p = 512;
        let t = iterate(
            &map(&["power:1", "power:0"], p),
            &v(&["1", "2"], p),
            50,
            &BigReal::pow2(-480, p),
        )
        .unwrap();
        let order = estimate_order(&t).unwrap();
        assert!((order - d("2", p)).abs() <= d("0.05", p));
    }

    #[test]
    fn synthetic_orders() {
        let p = 256;
        let floor = BigReal::pow2(-(p as i64 - 16), p);
        let linear: Vec<BigReal> = (0..30).map(|k| BigReal::pow2(-k, p)).collect();
        let o1 = estimate_order_from_spreads(&linear, &floor).unwrap();
        assert!((o1 - d("1", p)).abs() <= d("0.05", p));
        let mut cubic = alloc::vec![d("0.5", p)];
        for _ in 0..4 {
            let next = cubic.last().unwrap().powi(3);
            cubic.push(next);
        }
        let o3 = estimate_order_from_spreads(&cubic, &floor).unwrap();
        assert!((o3 - d("3", p)).abs() <= d("0.05", p));
        assert!(matches!(
            estimate_order_from_spreads(&cubic[..3], &floor),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn agm_ratio_limit() {
        let p = 512;
        let m = map(&["power:1", "power:0"], p);
        let a = v(&["1", "2"], p);
        let t = iterate(&m, &a, 50, &BigReal::pow2(-500, p)).unwrap();
        let g = gaussian_product(&m, &a).unwrap();
        let predicted = ratio_limit_predicted(&m, &g.value).unwrap();
        let oracle = (g.value.square() * BigReal::from_i64(16, p)).recip();
        assert!(predicted.approx_eq(&oracle, &d("1e-70", p)));
        let empirical = ratio_limit_empirical(&t).unwrap();
        assert!(((&empirical - &predicted) / &predicted).abs() <= d("1e-6", p));
    }

    #[test]
    fn predicted_ratio_examples() {
        let p = 256;
        let zero = ratio_limit_predicted(&map(&["exp:2", "exp:2"], p), &d("1", p)).unwrap();
        assert!(zero.is_zero());
        let dom = Interval::parse("-10", "10", p).unwrap();
        let gens = ["identity", "exp:1", "exp:-1"]
            .iter()
            .map(|s| Generator::builtin(&Descriptor::parse(s, p).unwrap(), dom.clone()).unwrap())
            .collect();
        let r = ratio_limit_predicted(&GaussMap::new(gens).unwrap(), &d("0.3", p)).unwrap();
        assert!(r.approx_eq(&BigReal::from_ratio(1, 6, p), &d("1e-70", p)));
    }

    #[test]
    fn map_needs_two_generators() {
        let p = 128;
        let dom = Interval::parse("1", "2", p).unwrap();
        assert!(GaussMap::new(alloc::vec![Generator::identity(dom)]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hull_contracts_and_permutation_is_harmless(
            xs in proptest::collection::vec(0.1f64..20.0, 2..5),
            pick in proptest::sample::subsequence(alloc::vec!["power:-1", "power:0", "power:2", "exp:0.3", "identity"], 2..4),
        ) {
            let p = 192;
            let a = SampleVector::new(xs.iter().map(|x| BigReal::from_f64(*x, p)).collect()).unwrap();
            let m = map(&pick, p);
            let out = apply_map(&m, &a).unwrap();
            prop_assert!(out.min() >= a.min() && out.max() <= a.max());

            let mut rev = pick.clone();
            rev.reverse();
            let mr = map(&rev, p);
            let g1 = gaussian_product(&m, &a).unwrap();
            let g2 = gaussian_product(&mr, &a).unwrap();
            prop_assert!(g1.value.approx_eq(&g2.value, &(&g1.certified_error + &g2.certified_error)));
            let s1 = stats(&out);
            let s2 = stats(&apply_map(&mr, &a).unwrap());
            prop_assert!(s1.variance.approx_eq(&s2.variance, &BigReal::pow2(-(p as i64 - 16), p)));
        }

        #[test]
        fn product_is_invariant_under_the_map(xs in proptest::collection::vec(0.1f64..20.0, 2..4)) {
            let p = 192;
            let a = SampleVector::new(xs.iter().map(|x| BigReal::from_f64(*x, p)).collect()).unwrap();
            let m = map(&["power:1", "power:0", "power:-1"], p);
            let g = gaussian_product(&m, &a).unwrap();
            let gm = gaussian_product(&m, &apply_map(&m, &a).unwrap()).unwrap();
            let budget = (&g.certified_error + &gm.certified_error).mul_pow2(1);
            prop_assert!((&g.value - &gm.value).abs() <= budget);
        }
    }
}

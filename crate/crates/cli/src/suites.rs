//! Seeded verification suites.
//!
//! Each case draws its inputs from a ChaCha8 stream selected by the case
//! index, so a case does not depend on how many others run or in which order.
//! Cases are evaluated in parallel and returned in index order.

use std::collections::BTreeMap;

use qamean::analysis::{expansion_report, main_theorem_check};
use qamean::generators::{index_sup, rescale, Descriptor, Generator};
use qamean::iteration::{
    apply_map, estimate_order, estimate_order_from_spreads, gaussian_product, iterate, ratio_limit_empirical,
    ratio_limit_predicted, GaussMap, Terminal,
};
use qamean::means::{power_mean, qa_mean, stats, SampleVector};
use qamean::{BigReal, Interval, QuadratureConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::output::dec;
use crate::CliError;

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Tolerances the suites judge against.
pub mod tol {
    pub const EXPANSION_RESIDUAL: &str = "1e-20";
    pub const R_ROUTES: &str = "1e-18";
    pub const QUADRATURE_REL: &str = "1e-25";
    pub const QUADRATURE_ABS: &str = "1e-45";
    pub const RATIO_REL: &str = "1e-6";
    pub const ORDER: &str = "0.05";
    pub const POWER_MEAN_REL: &str = "1e-15";
    /// Agreement of the predicted ratio limit with its closed form.
    pub const ORACLE_REL: &str = "1e-30";
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Expansion,
    RemainderBounds,
    MainTheorem,
    RatioLimit,
    ConvergenceOrder,
    Invariance,
    VarianceSpread,
    PowerMean,
    Degeneracy,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Expansion,
        Suite::RemainderBounds,
        Suite::MainTheorem,
        Suite::RatioLimit,
        Suite::ConvergenceOrder,
        Suite::Invariance,
        Suite::VarianceSpread,
        Suite::PowerMean,
        Suite::Degeneracy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Expansion => "expansion",
            Suite::RemainderBounds => "remainder-bounds",
            Suite::MainTheorem => "main-theorem",
            Suite::RatioLimit => "ratio-limit",
            Suite::ConvergenceOrder => "convergence-order",
            Suite::Invariance => "invariance",
            Suite::VarianceSpread => "variance-spread",
            Suite::PowerMean => "power-mean",
            Suite::Degeneracy => "degeneracy",
        }
    }

    pub fn parse(s: &str) -> Result<Suite, CliError> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
            CliError::Usage(format!("unknown suite {s:?}; expected one of {}", names.join(", ")))
        })
    }

    pub fn default_cases(self) -> usize {
        match self {
            Suite::Expansion => 500,
            Suite::RemainderBounds | Suite::MainTheorem | Suite::PowerMean => 200,
            Suite::RatioLimit | Suite::ConvergenceOrder => 3,
            Suite::Invariance => 100,
            Suite::VarianceSpread => 1000,
            Suite::Degeneracy => 40,
        }
    }

    pub fn default_precision(self) -> usize {
        match self {
            Suite::RatioLimit | Suite::ConvergenceOrder => 512,
            _ => 256,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub precision: usize,
    pub seed: u64,
    pub cases: usize,
}

impl SuiteConfig {
    pub fn defaults(suite: Suite) -> Self {
        SuiteConfig {
            precision: suite.default_precision(),
            seed: DEFAULT_SEED,
            cases: suite.default_cases(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseOutcome {
    pub case: usize,
    pub pass: bool,
    pub detail: BTreeMap<String, String>,
}

impl CaseOutcome {
    /// A detail value parsed back at `precision`.
    pub fn number(&self, key: &str, precision: usize) -> Option<BigReal> {
        BigReal::parse_decimal(self.detail.get(key)?, precision).ok()
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        self.detail.get(key).map(|v| v == "true")
    }
}

struct Detail(BTreeMap<String, String>);

impl Detail {
    fn new() -> Self {
        Detail(BTreeMap::new())
    }

    fn put(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    fn num(&mut self, key: &str, value: &BigReal) -> &mut Self {
        self.put(key, dec(value))
    }
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Vec<CaseOutcome> {
    (0..cfg.cases)
        .into_par_iter()
        .map(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(case as u64);
            let mut detail = Detail::new();
            let pass = match run_case(suite, case, &mut rng, cfg.precision, &mut detail) {
                Ok(pass) => pass,
                Err(e) => {
                    detail.put("error", e);
                    false
                }
            };
            CaseOutcome {
                case,
                pass,
                detail: detail.0,
            }
        })
        .collect()
}

fn run_case(suite: Suite, case: usize, rng: &mut ChaCha8Rng, p: usize, d: &mut Detail) -> Result<bool, CliError> {
    match suite {
        Suite::Expansion => expansion_case(case, rng, p, d),
        Suite::RemainderBounds => remainder_case(case, rng, p, d),
        Suite::MainTheorem => main_theorem_case(case, rng, p, d),
        Suite::RatioLimit => ratio_case(case, p, d),
        Suite::ConvergenceOrder => order_case(case, p, d),
        Suite::Invariance => invariance_case(case, rng, p, d),
        Suite::VarianceSpread => variance_case(case, rng, p, d),
        Suite::PowerMean => power_mean_case(rng, p, d),
        Suite::Degeneracy => degeneracy_case(case, rng, p, d),
    }
}

fn num(s: &str, p: usize) -> BigReal {
    BigReal::parse_decimal(s, p).expect("suite literal")
}

/// A builtin descriptor: powers, exponentials, identity or affine.
fn random_descriptor(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..10) {
        0..=4 => {
            let p = f64::from(rng.gen_range(-12i32..=16)) / 4.0;
            if p == 0.0 && rng.gen_bool(0.5) {
                "log".into()
            } else {
                format!("power:{p}")
            }
        }
        5..=7 => {
            let mut a = rng.gen_range(-2.0f64..2.0);
            if a.abs() < 0.05 {
                a = 0.05f64.copysign(a);
            }
            format!("exp:{a:.2}")
        }
        8 => "identity".into(),
        _ => format!(
            "affine:{:.2},{:.2}",
            rng.gen_range(0.5f64..3.0) * sign(rng),
            rng.gen_range(-2.0f64..2.0)
        ),
    }
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Spread: log-uniform on `[1e-6, 0.5]`, or uniform on `[1, 3]` for the
/// large-spread batch (every fifth case).
fn random_spread(case: usize, rng: &mut ChaCha8Rng) -> f64 {
    if case % 5 == 4 {
        rng.gen_range(1.0..3.0)
    } else {
        10f64.powf(rng.gen_range(-6.0..0.5f64.log10()))
    }
}

/// `n` positive entries `c + delta u_i` with `u` covering `[0, 1]`, so the
/// spread is exactly `delta`; shuffled.
fn random_vector(rng: &mut ChaCha8Rng, n: usize, delta: f64, p: usize) -> SampleVector {
    let c = num(&format!("{:.3}", rng.gen_range(0.5..3.0)), p);
    let dl = num(&format!("{delta:.6e}"), p);
    let mut us: Vec<BigReal> = vec![BigReal::zero(p), BigReal::one(p)];
    for _ in 2..n {
        us.push(num(&format!("{:.6}", rng.gen_range(0.0..1.0)), p));
    }
    us.truncate(n.max(1));
    us.shuffle(rng);
    SampleVector::new(us.iter().map(|u| &c + &(&dl * u)).collect()).expect("finite entries")
}

/// `[min/2, 2 max]`.
fn domain_for(a: &SampleVector) -> Interval {
    Interval::new(a.min().mul_pow2(-1), a.max().mul_pow2(1)).expect("positive vector")
}

fn builtin(desc: &str, domain: &Interval, p: usize) -> Result<Generator, CliError> {
    let d = Descriptor::parse(desc, p)?;
    Ok(Generator::builtin(&d, domain.clone())?)
}

fn quadrature(p: usize) -> Result<QuadratureConfig, CliError> {
    Ok(QuadratureConfig::new(
        num(tol::QUADRATURE_ABS, p),
        num(tol::QUADRATURE_REL, p),
        48,
    )?)
}

fn expansion_case(case: usize, rng: &mut ChaCha8Rng, p: usize, d: &mut Detail) -> Result<bool, CliError> {
    let desc = random_descriptor(rng);
    let n = rng.gen_range(2..=6);
    let delta = random_spread(case, rng);
    let a = random_vector(rng, n, delta, p);
    let g = builtin(&desc, &domain_for(&a), p)?;
    let rep = expansion_report(&g, &a, &quadrature(p)?)?;
    d.put("generator", &desc).put("n", n).num("delta", &stats(&a).spread);
    d.num("residual", &rep.identity_residual)
        .num("r", &rep.r_value)
        .num("s", &rep.s_value);
    let mut pass = rep.identity_residual <= num(tol::EXPANSION_RESIDUAL, p);
    if let Some(rd) = &rep.r_direct {
        let gap = (rd - &rep.r_value).abs();
        d.num("r_direct", rd).num("r_routes_gap", &gap);
        pass &= gap <= num(tol::R_ROUTES, p);
    }
    Ok(pass)
}

fn remainder_case(case: usize, rng: &mut ChaCha8Rng, p: usize, d: &mut Detail) -> Result<bool, CliError> {
    let desc = random_descriptor(rng);
    let n = rng.gen_range(2..=6);
    let delta = random_spread(case, rng);
    let a = random_vector(rng, n, delta, p);
    let g = builtin(&desc, &domain_for(&a), p)?;
    let hull = a.hull().expect("nonconstant");
    let sup = index_sup(&g, &hull)?;
    let one = BigReal::one(p);
    // certify membership in the unit class by rescaling with a small margin
    let (g, a, factor) = if sup > one {
        let k = &sup * &(&one + &BigReal::pow2(-20, p));
        (rescale(&g, &k)?, a.scale(&k), k)
    } else {
        (g, a, one)
    };
    let rep = expansion_report(&g, &a, &quadrature(p)?)?;
    // the direct integral is exact for polynomial f'', the identity route is not
    let r = rep.r_direct.clone().unwrap_or_else(|| rep.r_value.clone()).abs();
    let lip_ok = r <= rep.r_bound && rep.s_value.abs() <= rep.s_bound;
    let legacy_r_ok = r <= rep.legacy_r_bound;
    let legacy_s_ok = rep.s_value.abs() <= rep.legacy_s_bound;
    d.put("generator", &desc)
        .put("n", n)
        .num("rescale", &factor)
        .put("in_unit_class", rep.in_unit_class);
    d.num("r", &r)
        .num("r_bound", &rep.r_bound)
        .num("s", &rep.s_value)
        .num("s_bound", &rep.s_bound);
    d.num("legacy_r_bound", &rep.legacy_r_bound)
        .num("legacy_s_bound", &rep.legacy_s_bound);
    d.put("lipschitz_ok", lip_ok)
        .put("legacy_r_ok", legacy_r_ok)
        .put("legacy_s_ok", legacy_s_ok);
    Ok(rep.in_unit_class && lip_ok && legacy_r_ok && legacy_s_ok)
}

fn random_map(
    rng: &mut ChaCha8Rng,
    n: usize,
    domain: &Interval,
    p: usize,
) -> Result<(Vec<String>, GaussMap), CliError> {
    let descs: Vec<String> = (0..n).map(|_| random_descriptor(rng)).collect();
    let gens = descs
        .iter()
        .map(|s| builtin(s, domain, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((descs, GaussMap::new(gens)?))
}

fn main_theorem_case(case: usize, rng: &mut ChaCha8Rng, p: usize, d: &mut Detail) -> Result<bool, CliError> {
    let n = rng.gen_range(2..=4);
    let delta = random_spread(case, rng);
    let a = random_vector(rng, n, delta, p);
    let (descs, m) = random_map(rng, n, &domain_for(&a), p)?;
    let hull = a.hull().expect("nonconstant");
    let mut sup = BigReal::zero(p);
    for g in m.generators() {
        sup = sup.max(&index_sup(g, &hull)?);
    }
    // any admissible K: the smallest one stretched by up to a factor two
    let stretch = num(&format!("{:.4}", rng.gen_range(1.0..2.0)), p);
    let k = if sup.is_zero() {
        num(&format!("{:.4}", 10f64.powf(rng.gen_range(-1.0..0.3))), p)
    } else {
        &sup * &stretch
    };
    let rep = main_theorem_check(&m, &a, &k)?;
    let gap = (&rep.lhs - &rep.model).abs();
    d.put("generators", descs.join(";"))
        .num("k", &k)
        .num("delta", &stats(&a).spread);
    d.num("lhs", &rep.lhs)
        .num("model", &rep.model)
        .num("gap", &gap)
        .num("budget", &rep.error_budget);
    if let Some(b) = rep.large_spread_branch {
        d.put("large_spread_branch", b);
    }
    Ok(rep.holds && rep.large_spread_branch != Some(false))
}

struct RatioFixture {
    generators: &'static [&'static str],
    vector: &'static [&'static str],
    domain: [&'static str; 2],
    /// Closed-form limit `Var(A(x)) / 4` at the invariant mean `x`.
    limit: fn(&BigReal) -> BigReal,
}

fn ratio_fixture(case: usize) -> RatioFixture {
    match case % 3 {
        // indexes (0, -1/m): variance 1/(4 m^2)
        0 => RatioFixture {
            generators: &["power:1", "power:0"],
            vector: &["1", "2"],
            domain: ["0.5", "4"],
            limit: |m| (m.square() * BigReal::from_i64(16, m.precision())).recip(),
        },
        // indexes (0, 1)
        1 => RatioFixture {
            generators: &["identity", "exp:1"],
            vector: &["0", "0.5"],
            domain: ["-1", "1.5"],
            limit: |m| BigReal::from_ratio(1, 16, m.precision()),
        },
        // indexes (0, 1, -1): variance 2/3
        _ => RatioFixture {
            generators: &["identity", "exp:1", "exp:-1"],
            vector: &["0", "0.3", "0.6"],
            domain: ["-1", "1.6"],
            limit: |m| BigReal::from_ratio(1, 6, m.precision()),
        },
    }
}

fn ratio_case(case: usize, p: usize, d: &mut Detail) -> Result<bool, CliError> {
    let RatioFixture {
        generators: descs,
        vector: xs,
        domain: dom,
        limit: oracle,
    } = ratio_fixture(case);
    let domain = Interval::parse(dom[0], dom[1], p)?;
    let gens = descs
        .iter()
        .map(|s| builtin(s, &domain, p))
        .collect::<Result<Vec<_>, _>>()?;
    let m = GaussMap::new(gens)?;
    let a = SampleVector::from_decimals(xs, p)?;
    let tol = a.magnitude() * BigReal::pow2(-(p as i64 - 8), p);
    let trace = iterate(&m, &a, 100, &tol)?;
    let product = gaussian_product(&m, &a)?;
    let predicted = ratio_limit_predicted(&m, &product.value)?;
    let closed = oracle(&product.value);
    let empirical = ratio_limit_empirical(&trace)?;
    let gap = ((&empirical - &predicted) / &predicted).abs();
    let oracle_gap = ((&predicted - &closed) / &closed).abs();
    d.put("generators", descs.join(";"))
        .put("vector", xs.join(";"))
        .num("product", &product.value);
    d.num("empirical", &empirical)
        .num("predicted", &predicted)
        .num("oracle", &closed);
    d.num("relative_gap", &gap).num("oracle_gap", &oracle_gap);
    Ok(gap <= num(tol::RATIO_REL, p) && oracle_gap <= num(tol::ORACLE_REL, p))
}

fn order_case(case: usize, p: usize, d: &mut Detail) -> Result<bool, CliError> {
    let floor = BigReal::pow2(-(p as i64 - 16), p);
    let (label, expected, order) = match case % 3 {
        0 => {
            let domain = Interval::parse("0.5", "4", p)?;
            let m = GaussMap::new(vec![builtin("power:1", &domain, p)?, builtin("power:0", &domain, p)?])?;
            let a = SampleVector::from_decimals(&["1", "2"], p)?;
            let t = iterate(&m, &a, 100, &(a.magnitude() * BigReal::pow2(-(p as i64 - 8), p)))?;
            ("agm", 2, estimate_order(&t)?)
        }
        1 => {
            let spreads: Vec<BigReal> = (0..40).map(|k| BigReal::pow2(-k, p)).collect();
            ("linear", 1, estimate_order_from_spreads(&spreads, &floor)?)
        }
        _ => {
            let mut spreads = vec![num("0.5", p)];
            for _ in 0..5 {
                let next = spreads.last().expect("nonempty").powi(3);
                spreads.push(next);
            }
            ("cubic", 3, estimate_order_from_spreads(&spreads, &floor)?)
        }
    };
    let err = (&order - &BigReal::from_i64(expected, p)).abs();
    d.put("trace", label)
        .put("expected", expected)
        .num("order", &order)
        .num("order_error", &err);
    Ok(err <= num(tol::ORDER, p))
}

fn invariance_case(case: usize, rng: &mut ChaCha8Rng, p: usize, d: &mut Detail) -> Result<bool, CliError> {
    let n = rng.gen_range(2..=4);
    let delta = random_spread(case, rng);
    let len = rng.gen_range(2..=5);
    let a = random_vector(rng, len, delta, p);
    let (descs, m) = random_map(rng, n, &domain_for(&a), p)?;
    let g = gaussian_product(&m, &a)?;
    let gm = gaussian_product(&m, &apply_map(&m, &a)?)?;
    let gap = (&g.value - &gm.value).abs();
    let budget = (&g.certified_error + &gm.certified_error).mul_pow2(1);
    d.put("generators", descs.join(";"))
        .put("n", len)
        .num("product", &g.value);
    d.num("gap", &gap).num("budget", &budget);
    Ok(gap <= budget)
}

fn variance_case(case: usize, rng: &mut ChaCha8Rng, p: usize, d: &mut Detail) -> Result<bool, CliError> {
    let a = if case == 0 {
        SampleVector::from_decimals(&["0", "1"], p)?
    } else {
        let n = rng.gen_range(2..=8);
        loop {
            let xs: Vec<String> = (0..n).map(|_| format!("{:.6}", rng.gen_range(-10.0..10.0))).collect();
            let a = SampleVector::from_decimals(&xs, p)?;
            if !a.is_constant() {
                break a;
            }
        }
    };
    let s = stats(&a);
    let d2 = s.spread.square();
    let lower = &d2 / &BigReal::from_i64(2 * a.len() as i64, p);
    let upper = d2.mul_pow2(-2);
    d.put("n", a.len())
        .num("var", &s.variance)
        .num("lower", &lower)
        .num("upper", &upper);
    // var and delta are rounded separately
    let slack = BigReal::pow2(-(p as i64 - 4), p);
    let one = BigReal::one(p);
    d.put("lower_attained", s.variance.approx_eq(&lower, &(&lower * &slack)));
    Ok(&lower * &(&one - &slack) <= s.variance && s.variance <= &upper * &(&one + &slack))
}

fn power_mean_case(rng: &mut ChaCha8Rng, p: usize, d: &mut Detail) -> Result<bool, CliError> {
    let exponent = if rng.gen_bool(0.1) {
        "0".to_string()
    } else {
        format!("{:.2}", rng.gen_range(-4.0..4.0))
    };
    let n = rng.gen_range(2..=6);
    let a = loop {
        let xs: Vec<String> = (0..n).map(|_| format!("{:.4}", rng.gen_range(0.1..10.0))).collect();
        let a = SampleVector::from_decimals(&xs, p)?;
        if !a.is_constant() {
            break a;
        }
    };
    let e = num(&exponent, p);
    let g = Generator::power(e.clone(), domain_for(&a))?;
    let via_generator = qa_mean(&g, &a)?;
    let closed = power_mean(&e, &a)?;
    let rel = ((&via_generator - &closed) / &closed).abs();
    d.put("p", &exponent)
        .put("n", n)
        .num("qa_mean", &via_generator)
        .num("power_mean", &closed)
        .num("relative_gap", &rel);
    Ok(rel <= num(tol::POWER_MEAN_REL, p))
}

fn degeneracy_case(case: usize, rng: &mut ChaCha8Rng, p: usize, d: &mut Detail) -> Result<bool, CliError> {
    let tol = BigReal::pow2(-(p as i64 * 3 / 4), p);
    if case.is_multiple_of(2) {
        let n = rng.gen_range(2..=4);
        let delta = random_spread(case, rng);
        let a = random_vector(rng, n, delta, p);
        let desc = random_descriptor(rng);
        let domain = domain_for(&a);
        let gens = (0..n)
            .map(|_| builtin(&desc, &domain, p))
            .collect::<Result<Vec<_>, _>>()?;
        let t = iterate(&GaussMap::new(gens)?, &a, 100, &tol)?;
        d.put("map", format!("{n} x {desc}"))
            .put("terminal", t.terminal.as_str())
            .put("step", t.iterations());
        Ok(t.terminal == Terminal::Degenerate && t.iterations() == 1)
    } else {
        let delta = random_spread(case, rng);
        let a = random_vector(rng, 2, delta, p);
        let domain = domain_for(&a);
        let m = GaussMap::new(vec![builtin("power:1", &domain, p)?, builtin("power:0", &domain, p)?])?;
        let t = iterate(&m, &a, 100, &tol)?;
        d.put("map", "agm")
            .put("terminal", t.terminal.as_str())
            .put("step", t.iterations());
        Ok(t.terminal != Terminal::Degenerate)
    }
}

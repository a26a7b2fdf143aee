use std::sync::Arc;

use qamean::analysis::{expansion_report, main_theorem_check, ratio_bound_check};
use qamean::generators::{CustomFunctions, Descriptor, Generator};
use qamean::iteration::{gaussian_product, iterate, GaussMap, Terminal};
use qamean::means::{qa_mean, SampleVector};
use qamean::{BigReal, Error, Interval, QuadratureConfig};

const P: usize = 256;

fn d(s: &str) -> BigReal {
    BigReal::parse_decimal(s, P).unwrap()
}

fn gen(desc: &str, lo: &str, hi: &str) -> Generator {
    let desc = Descriptor::parse(desc, P).unwrap();
    Generator::builtin(&desc, Interval::parse(lo, hi, P).unwrap()).unwrap()
}

#[test]
fn gauss_constant_from_the_agm() {
    // 1 / AGM(1, sqrt 2)
    let gauss = d("0.83462684167407318628142973279904681");
    let m = GaussMap::new(vec![gen("power:1", "0.5", "2"), gen("log", "0.5", "2")]).unwrap();
    let a = SampleVector::new(vec![BigReal::one(P), d("2").sqrt()]).unwrap();
    let g = gaussian_product(&m, &a).unwrap();
    assert!((g.value.recip() - gauss).abs() <= d("1e-34"));
    assert!(g.certified_error <= d("1e-70"));
}

#[test]
fn custom_generator_matches_builtin_cube_mean() {
    let cube = CustomFunctions {
        f: Arc::new(|x: &BigReal| x.powi(3)),
        d1: Arc::new(|x: &BigReal| x.square() * BigReal::from_i64(3, x.precision())),
        d2: Arc::new(|x: &BigReal| x * &BigReal::from_i64(6, x.precision())),
        d3: None,
        inverse: None,
    };
    let dom = Interval::parse("0.5", "4", P).unwrap();
    let custom = Generator::custom("cube", cube, dom).unwrap();
    let a = SampleVector::from_decimals(&["1", "2", "3"], P).unwrap();
    let builtin = qa_mean(&gen("power:3", "0.5", "4"), &a).unwrap();
    // cube root of 12
    let target = d("2.2894284851066637356160844238794");
    assert!((qa_mean(&custom, &a).unwrap() - &builtin).abs() <= d("1e-60"));
    assert!((builtin - target).abs() <= d("1e-30"));
}

#[test]
fn expansion_report_for_a_skewed_exponential_sample() {
    let g = gen("exp:0.7", "0", "3");
    let a = SampleVector::from_decimals(&["1", "1.01", "1.02", "1.3"], P).unwrap();
    let rep = expansion_report(&g, &a, &QuadratureConfig::for_precision(P)).unwrap();
    assert!(rep.identity_residual <= d("1e-25"));
    assert!(rep.in_unit_class && rep.bounds_hold && rep.legacy_bounds_hold);
    assert!(rep.r_value.abs() > BigReal::zero(P));
}

#[test]
fn theorem_reports_on_a_three_generator_map() {
    let m = GaussMap::new(vec![
        gen("identity", "-1", "2"),
        gen("exp:1", "-1", "2"),
        gen("exp:-1", "-1", "2"),
    ])
    .unwrap();
    let a = SampleVector::from_decimals(&["0.1", "0.2", "0.45"], P).unwrap();
    let rep = main_theorem_check(&m, &a, &d("1")).unwrap();
    assert!(rep.holds, "{} vs {} (budget {})", rep.lhs, rep.model, rep.error_budget);
    let ratio = ratio_bound_check(&m, &a, &d("1")).unwrap();
    assert!(ratio.holds);
    assert!(matches!(main_theorem_check(&m, &a, &d("0.5")), Err(Error::Class(_))));
}

#[test]
fn iteration_reports_degeneracy_and_domain_errors() {
    let m = GaussMap::new(vec![gen("exp:2", "0", "5"), gen("exp:2", "0", "5")]).unwrap();
    let a = SampleVector::from_decimals(&["1", "3"], P).unwrap();
    let t = iterate(&m, &a, 50, &d("1e-60")).unwrap();
    assert_eq!((t.terminal, t.iterations()), (Terminal::Degenerate, 1));
    let outside = SampleVector::from_decimals(&["1", "7"], P).unwrap();
    assert!(matches!(iterate(&m, &outside, 50, &d("1e-60")), Err(Error::Domain(_))));
}

#[test]
fn descriptor_errors_report_positions() {
    match Descriptor::parse("affine:1,", P) {
        Err(Error::Parse { position, .. }) => assert_eq!(position, 9),
        other => panic!("{other:?}"),
    }
}

//! Job description shared by the flags and the JSON job file.
//!
//! ```json
//! {
//!   "generators": ["power:1", "power:0"],
//!   "vector": ["1", "2"],
//!   "precision_bits": 256,
//!   "max_iters": 100,
//!   "tolerance": "1e-60",
//!   "seed": 7,
//!   "suite": "expansion",
//!   "cases": 100,
//!   "domain": ["0.5", "4"],
//!   "k": "1",
//!   "format": "records"
//! }
//! ```
//!
//! Every key is optional in the file; flags given on the command line
//! override the file. Numbers that feed the computation are decimal strings,
//! parsed exactly at `precision_bits`.

use std::path::Path;

use qamean::generators::{Descriptor, Generator};
use qamean::iteration::GaussMap;
use qamean::means::SampleVector;
use qamean::{BigReal, Interval};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_PRECISION: usize = 256;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const MIN_PRECISION: usize = 53;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Records,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobSpec {
    pub generators: Vec<String>,
    pub vector: Vec<String>,
    pub precision_bits: Option<usize>,
    pub max_iters: Option<usize>,
    pub tolerance: Option<String>,
    pub seed: Option<u64>,
    pub suite: Option<String>,
    pub cases: Option<usize>,
    pub domain: Option<[String; 2]>,
    pub k: Option<String>,
    pub format: Option<Format>,
}

impl JobSpec {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("job file {}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: JobSpec) -> JobSpec {
        if !other.generators.is_empty() {
            self.generators = other.generators;
        }
        if !other.vector.is_empty() {
            self.vector = other.vector;
        }
        macro_rules! take {
            ($($field:ident),*) => { $( if other.$field.is_some() { self.$field = other.$field; } )* };
        }
        take!(
            precision_bits,
            max_iters,
            tolerance,
            seed,
            suite,
            cases,
            domain,
            k,
            format
        );
        self
    }

    pub fn precision(&self) -> Result<usize, CliError> {
        let p = self.precision_bits.unwrap_or(DEFAULT_PRECISION);
        if p < MIN_PRECISION {
            return Err(CliError::Usage(format!(
                "precision_bits must be at least {MIN_PRECISION}, got {p}"
            )));
        }
        Ok(p)
    }

    pub fn max_iters(&self) -> Result<usize, CliError> {
        match self.max_iters.unwrap_or(DEFAULT_MAX_ITERS) {
            0 => Err(CliError::Usage("max_iters must be at least 1".into())),
            n => Ok(n),
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    /// `tolerance`, or `10^-(0.75 p log10 2)` (three quarters of the working digits).
    pub fn tolerance(&self) -> Result<BigReal, CliError> {
        let p = self.precision()?;
        let text = match &self.tolerance {
            Some(t) => t.clone(),
            None => format!("1e-{}", (0.75 * p as f64 * std::f64::consts::LOG10_2).floor() as usize),
        };
        let tol = parse_number("tolerance", &text, p)?;
        if !tol.is_positive() {
            return Err(CliError::Usage(format!("tolerance must be positive, got {text}")));
        }
        Ok(tol)
    }

    pub fn k(&self) -> Result<BigReal, CliError> {
        let p = self.precision()?;
        let k = parse_number("k", self.k.as_deref().unwrap_or("1"), p)?;
        if !k.is_positive() {
            return Err(CliError::Usage("k must be positive".into()));
        }
        Ok(k)
    }

    pub fn sample_vector(&self) -> Result<SampleVector, CliError> {
        if self.vector.is_empty() {
            return Err(CliError::Usage("vector must have at least one entry".into()));
        }
        let p = self.precision()?;
        let entries = self
            .vector
            .iter()
            .map(|s| parse_number("vector entry", s, p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SampleVector::new(entries)?)
    }

    /// The explicit `domain`, or one inferred from the vector:
    /// `[min/2, 2 max]` for positive vectors, `[min - 1, max + 1]` otherwise.
    pub fn domain(&self) -> Result<Interval, CliError> {
        let p = self.precision()?;
        if let Some([lo, hi]) = &self.domain {
            let lo = parse_number("domain", lo, p)?;
            let hi = parse_number("domain", hi, p)?;
            return Interval::new(lo, hi).map_err(|e| CliError::Usage(format!("domain: {e}")));
        }
        let a = self.sample_vector()?;
        let one = BigReal::one(p);
        let (lo, hi) = if a.min().is_positive() {
            (a.min().mul_pow2(-1), a.max().mul_pow2(1))
        } else {
            (a.min() - &one, a.max() + &one)
        };
        Ok(Interval::new(lo, hi)?)
    }

    pub fn generator_list(&self) -> Result<Vec<Generator>, CliError> {
        if self.generators.is_empty() {
            return Err(CliError::Usage("at least one generator is required".into()));
        }
        let p = self.precision()?;
        let domain = self.domain()?;
        self.generators
            .iter()
            .map(|s| parse_descriptor(s, &domain, p))
            .collect()
    }

    pub fn gauss_map(&self) -> Result<GaussMap, CliError> {
        Ok(GaussMap::new(self.generator_list()?)?)
    }
}

/// A builtin generator from its descriptor; `log` is `power:0`.
pub fn parse_descriptor(s: &str, domain: &Interval, precision: usize) -> Result<Generator, CliError> {
    let desc = Descriptor::parse(s, precision).map_err(|e| CliError::Usage(format!("generator {s:?}: {e}")))?;
    Generator::builtin(&desc, domain.clone()).map_err(|e| CliError::Usage(format!("generator {s:?}: {e}")))
}

fn parse_number(what: &str, s: &str, precision: usize) -> Result<BigReal, CliError> {
    BigReal::parse_decimal(s.trim(), precision).map_err(|e| CliError::Usage(format!("{what} {s:?}: {e}")))
}

/// Splits a comma-separated generator list, keeping numeric arguments with
/// their descriptor: `affine:2,1,log` is `["affine:2,1", "log"]`.
pub fn split_generators(list: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for piece in list.split([',', ';']) {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let numeric = piece.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+' || c == '.');
        match out.last_mut() {
            Some(prev) if numeric => {
                prev.push(',');
                prev.push_str(piece);
            }
            _ => out.push(piece.to_string()),
        }
    }
    out
}

pub fn split_vector(list: &str) -> Vec<String> {
    list.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_lists_keep_arguments() {
        assert_eq!(split_generators("power:1,power:0"), ["power:1", "power:0"]);
        assert_eq!(split_generators("affine:2,1,log"), ["affine:2,1", "log"]);
        assert_eq!(
            split_generators("exp:-1, identity; affine:-1,0.5"),
            ["exp:-1", "identity", "affine:-1,0.5"]
        );
    }

    #[test]
    fn overlay_prefers_flags() {
        let file = JobSpec {
            generators: vec!["log".into()],
            precision_bits: Some(128),
            seed: Some(1),
            ..Default::default()
        };
        let flags = JobSpec {
            seed: Some(9),
            ..Default::default()
        };
        let job = file.overlay(flags);
        assert_eq!(job.generators, ["log"]);
        assert_eq!((job.precision_bits, job.seed), (Some(128), Some(9)));
    }

    #[test]
    fn inferred_domains() {
        let job = JobSpec {
            vector: vec!["1".into(), "2".into()],
            ..Default::default()
        };
        let d = job.domain().unwrap();
        let num = |s: &str| BigReal::parse_decimal(s, DEFAULT_PRECISION).unwrap();
        assert_eq!((d.lo(), d.hi()), (&num("0.5"), &num("4")));
        let job = JobSpec {
            vector: vec!["0".into(), "0.5".into()],
            ..Default::default()
        };
        let d = job.domain().unwrap();
        assert_eq!(d.lo(), &num("-1"));
    }

    #[test]
    fn descriptor_errors_are_usage_errors() {
        let dom = Interval::parse("1", "2", 64).unwrap();
        assert!(matches!(parse_descriptor("exp:0", &dom, 64), Err(CliError::Usage(_))));
        assert!(parse_descriptor("log", &dom, 64).is_ok());
    }

    #[test]
    fn rejects_low_precision_and_unknown_keys() {
        let job = JobSpec {
            precision_bits: Some(32),
            ..Default::default()
        };
        assert!(job.precision().is_err());
        assert!(serde_json::from_str::<JobSpec>(r#"{"vectr": ["1"]}"#).is_err());
    }
}

//! Command-line flags.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::job::{split_generators, split_vector, Format, JobSpec};
use crate::run::Command;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "qamean", version, about = "Gaussian iteration of quasi-arithmetic means")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Trace the orbit of the Gauss map.
    Iterate(JobArgs),
    /// Compare the variance ratio series with its predicted limit.
    Ratio(JobArgs),
    /// Run a seeded verification suite.
    Verify(JobArgs),
    /// Compute the invariant mean with a certified error.
    Invariant(JobArgs),
    /// Report index bounds and class membership of each generator.
    Classify(JobArgs),
}

#[derive(Debug, Default, clap::Args)]
pub struct JobArgs {
    /// Comma-separated generator descriptors, e.g. `power:1,log`.
    #[arg(long, short = 'g')]
    pub generators: Option<String>,
    /// Comma-separated decimal entries.
    #[arg(long, short = 'v', allow_hyphen_values = true)]
    pub vector: Option<String>,
    /// Working precision in bits.
    #[arg(long, short = 'p')]
    pub precision: Option<usize>,
    /// Stop when the spread falls to this value.
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub cases: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON job file; flags override its fields.
    #[arg(long)]
    pub job: Option<PathBuf>,
    /// Common domain of the generators as `lo,hi`.
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,
    /// Index bound for `classify`.
    #[arg(long)]
    pub k: Option<String>,
}

impl JobArgs {
    pub fn into_job(self) -> Result<JobSpec, CliError> {
        let base = match &self.job {
            Some(path) => JobSpec::from_file(path)?,
            None => JobSpec::default(),
        };
        let domain = match self.domain.as_deref().map(split_vector) {
            None => None,
            Some(v) if v.len() == 2 => Some([v[0].clone(), v[1].clone()]),
            Some(_) => return Err(CliError::Usage("--domain takes two numbers: lo,hi".into())),
        };
        let flags = JobSpec {
            generators: self.generators.as_deref().map(split_generators).unwrap_or_default(),
            vector: self.vector.as_deref().map(split_vector).unwrap_or_default(),
            precision_bits: self.precision,
            max_iters: self.max_iters,
            tolerance: self.tol,
            seed: self.seed,
            suite: self.suite,
            cases: self.cases,
            domain,
            k: self.k,
            format: self.format,
        };
        Ok(base.overlay(flags))
    }
}

impl Sub {
    pub fn split(self) -> (Command, JobArgs) {
        match self {
            Sub::Iterate(a) => (Command::Iterate, a),
            Sub::Ratio(a) => (Command::Ratio, a),
            Sub::Verify(a) => (Command::Verify, a),
            Sub::Invariant(a) => (Command::Invariant, a),
            Sub::Classify(a) => (Command::Classify, a),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_become_a_job() {
        let cli = Cli::try_parse_from([
            "qamean",
            "iterate",
            "--generators",
            "affine:2,1,log",
            "--vector",
            "-1,2",
            "--domain",
            "-3,3",
            "--format",
            "csv",
        ])
        .unwrap();
        let (cmd, args) = cli.command.split();
        assert_eq!(cmd, Command::Iterate);
        let job = args.into_job().unwrap();
        assert_eq!(job.generators, ["affine:2,1", "log"]);
        assert_eq!(job.vector, ["-1", "2"]);
        assert_eq!(job.domain, Some(["-3".to_string(), "3".to_string()]));
        assert_eq!(job.format, Some(Format::Csv));
    }

    #[test]
    fn domain_needs_two_numbers() {
        let args = JobArgs {
            domain: Some("1".into()),
            ..Default::default()
        };
        assert!(args.into_job().is_err());
    }
}

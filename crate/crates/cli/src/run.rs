//! Command execution, independent of process I/O.

use qamean::generators::classify;
use qamean::iteration::{iterate, product_from_trace, ratio_limit_empirical, ratio_limit_predicted, Terminal};

use crate::job::{Format, JobSpec};
use crate::output::{csv_table, dec, to_line, Record, Summary};
use crate::suites::{run_suite, Suite, SuiteConfig};
use crate::{exit, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Iterate,
    Ratio,
    Verify,
    Invariant,
    Classify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Iterate => "iterate",
            Command::Ratio => "ratio",
            Command::Verify => "verify",
            Command::Invariant => "invariant",
            Command::Classify => "classify",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Collects body output; the summary goes to stdout for records and to
/// stderr for CSV, so that CSV output stays a single table.
struct Sink {
    format: Format,
    records: Vec<Record>,
    table: Option<(Vec<String>, Vec<Vec<String>>)>,
}

impl Sink {
    fn finish(self, summary: Summary, error: Option<&CliError>) -> Outcome {
        let mut out = Outcome {
            code: summary.exit_code,
            ..Default::default()
        };
        let summary = to_line(&Record::Summary(summary));
        match self.format {
            Format::Records => {
                for r in &self.records {
                    out.stdout.push_str(&to_line(r));
                    out.stdout.push('\n');
                }
                out.stdout.push_str(&summary);
                out.stdout.push('\n');
            }
            Format::Csv => {
                if let Some((header, rows)) = &self.table {
                    let header: Vec<&str> = header.iter().map(String::as_str).collect();
                    out.stdout = csv_table(&header, rows);
                }
                out.stderr.push_str(&summary);
                out.stderr.push('\n');
            }
        }
        if let Some(e) = error {
            out.stderr.push_str(&format!("error: {e}\n"));
        }
        out
    }
}

pub fn run(command: Command, job: &JobSpec) -> Outcome {
    let mut sink = Sink {
        format: job.format(),
        records: Vec::new(),
        table: None,
    };
    let mut summary = Summary {
        command: command.name().into(),
        precision_bits: job.precision_bits,
        ..Default::default()
    };
    let result = match command {
        Command::Iterate => run_iterate(job, &mut sink, &mut summary),
        Command::Ratio => run_ratio(job, &mut sink, &mut summary),
        Command::Verify => run_verify(job, &mut sink, &mut summary),
        Command::Invariant => run_invariant(job, &mut sink, &mut summary),
        Command::Classify => run_classify(job, &mut sink, &mut summary),
    };
    match result {
        Ok(code) => {
            summary.exit_code = code;
            sink.finish(summary, None)
        }
        Err(e) => {
            summary.exit_code = e.exit_code();
            summary.message = Some(e.to_string());
            sink.finish(summary, Some(&e))
        }
    }
}

fn terminal_code(t: Terminal) -> i32 {
    match t {
        Terminal::Converged => exit::OK,
        Terminal::Degenerate => exit::DEGENERATE,
        Terminal::MaxIters => exit::MAX_ITERS,
        Terminal::PrecisionFloor => exit::PRECISION_FLOOR,
    }
}

fn run_iterate(job: &JobSpec, sink: &mut Sink, summary: &mut Summary) -> Result<i32, CliError> {
    let m = job.gauss_map()?;
    let a = job.sample_vector()?;
    summary.precision_bits = Some(job.precision()?);
    let trace = iterate(&m, &a, job.max_iters()?, &job.tolerance()?)?;
    let width = trace.steps.iter().map(|s| s.vector.len()).max().unwrap_or(0);
    let mut header: Vec<String> = ["index", "mean", "var", "delta", "ratio"].map(String::from).to_vec();
    header.extend((0..width).map(|i| format!("v{i}")));
    let mut rows = Vec::new();
    for (index, step) in trace.steps.iter().enumerate() {
        let ratio = trace
            .ratio_series
            .iter()
            .find(|r| r.step == index)
            .map(|r| dec(&r.ratio));
        let vector: Vec<String> = step.vector.entries().iter().map(dec).collect();
        let mut row = vec![
            index.to_string(),
            dec(&step.stats.mean),
            dec(&step.stats.variance),
            dec(&step.stats.spread),
            ratio.clone().unwrap_or_default(),
        ];
        row.extend(vector.iter().cloned());
        row.resize(header.len(), String::new());
        rows.push(row);
        sink.records.push(Record::Step {
            index,
            vector,
            mean: dec(&step.stats.mean),
            var: dec(&step.stats.variance),
            delta: dec(&step.stats.spread),
            ratio,
        });
    }
    sink.table = Some((header, rows));
    summary.terminal = Some(trace.terminal.as_str().into());
    summary.iterations = Some(trace.iterations());
    if let Ok(g) = product_from_trace(&trace) {
        summary.product = Some(dec(&g.value));
        summary.certified_error = Some(dec(&g.certified_error));
    }
    Ok(terminal_code(trace.terminal))
}

fn run_ratio(job: &JobSpec, sink: &mut Sink, summary: &mut Summary) -> Result<i32, CliError> {
    let m = job.gauss_map()?;
    let a = job.sample_vector()?;
    summary.precision_bits = Some(job.precision()?);
    let trace = iterate(&m, &a, job.max_iters()?, &job.tolerance()?)?;
    summary.terminal = Some(trace.terminal.as_str().into());
    summary.iterations = Some(trace.iterations());
    let mut rows = Vec::new();
    for r in &trace.ratio_series {
        rows.push(vec![r.step.to_string(), dec(&r.ratio), r.above_floor.to_string()]);
        sink.records.push(Record::Ratio {
            step: r.step,
            ratio: dec(&r.ratio),
            above_floor: r.above_floor,
        });
    }
    sink.table = Some((vec!["step".into(), "ratio".into(), "above_floor".into()], rows));
    let empirical = ratio_limit_empirical(&trace)?;
    let product = product_from_trace(&trace)?;
    let predicted = ratio_limit_predicted(&m, &product.value)?;
    summary.product = Some(dec(&product.value));
    summary.certified_error = Some(dec(&product.certified_error));
    summary.empirical = Some(dec(&empirical));
    summary.predicted = Some(dec(&predicted));
    if !predicted.is_zero() {
        summary.relative_gap = Some(dec(&((&empirical - &predicted) / &predicted).abs()));
    }
    Ok(exit::OK)
}

fn run_invariant(job: &JobSpec, sink: &mut Sink, summary: &mut Summary) -> Result<i32, CliError> {
    let m = job.gauss_map()?;
    let a = job.sample_vector()?;
    summary.precision_bits = Some(job.precision()?);
    let trace = iterate(&m, &a, job.max_iters()?, &job.tolerance()?)?;
    summary.terminal = Some(trace.terminal.as_str().into());
    summary.iterations = Some(trace.iterations());
    let g = product_from_trace(&trace)?;
    summary.product = Some(dec(&g.value));
    summary.certified_error = Some(dec(&g.certified_error));
    sink.table = Some((
        vec![
            "product".into(),
            "certified_error".into(),
            "iterations".into(),
            "terminal".into(),
        ],
        vec![vec![
            dec(&g.value),
            dec(&g.certified_error),
            g.iterations.to_string(),
            g.terminal.as_str().into(),
        ]],
    ));
    Ok(exit::OK)
}

fn run_classify(job: &JobSpec, sink: &mut Sink, summary: &mut Summary) -> Result<i32, CliError> {
    let gens = job.generator_list()?;
    let k = job.k()?;
    summary.precision_bits = Some(job.precision()?);
    let restrict = match job.vector.is_empty() {
        false => match job.sample_vector()?.hull() {
            Some(h) => h,
            None => job.domain()?,
        },
        true => job.domain()?,
    };
    let mut rows = Vec::new();
    for (name, g) in job.generators.iter().zip(&gens) {
        let rep = classify(g, &restrict, &k)?;
        let rec = Record::Class {
            generator: name.clone(),
            lo: dec(restrict.lo()),
            hi: dec(restrict.hi()),
            k: dec(&k),
            k_bound: dec(&rep.k_bound),
            lip_f2: dec(&rep.lip_f2),
            star_norm: dec(&rep.star_norm),
            in_x_k: rep.in_x_k,
            in_x_lip_k: rep.in_x_lip_k,
            lipschitz_estimated: rep.lipschitz_estimated,
        };
        if let Record::Class {
            generator,
            k_bound,
            lip_f2,
            star_norm,
            in_x_k,
            in_x_lip_k,
            ..
        } = &rec
        {
            rows.push(vec![
                generator.clone(),
                k_bound.clone(),
                lip_f2.clone(),
                star_norm.clone(),
                in_x_k.to_string(),
                in_x_lip_k.to_string(),
            ]);
        }
        sink.records.push(rec);
    }
    sink.table = Some((
        ["generator", "k_bound", "lip_f2", "star_norm", "in_x_k", "in_x_lip_k"]
            .map(String::from)
            .to_vec(),
        rows,
    ));
    Ok(exit::OK)
}

fn run_verify(job: &JobSpec, sink: &mut Sink, summary: &mut Summary) -> Result<i32, CliError> {
    let name = job
        .suite
        .as_deref()
        .ok_or_else(|| CliError::Usage("verify needs --suite".into()))?;
    let suite = Suite::parse(name)?;
    let mut cfg = SuiteConfig::defaults(suite);
    if job.precision_bits.is_some() {
        cfg.precision = job.precision()?;
    }
    if let Some(seed) = job.seed {
        cfg.seed = seed;
    }
    if let Some(cases) = job.cases {
        cfg.cases = cases;
    }
    let outcomes = run_suite(suite, &cfg);
    let passed = outcomes.iter().filter(|c| c.pass).count();
    let mut rows = Vec::new();
    for c in outcomes {
        let detail: Vec<String> = c.detail.iter().map(|(k, v)| format!("{k}={v}")).collect();
        rows.push(vec![
            suite.name().into(),
            c.case.to_string(),
            c.pass.to_string(),
            detail.join(";"),
        ]);
        sink.records.push(Record::Case {
            suite: suite.name().into(),
            case: c.case,
            pass: c.pass,
            detail: c.detail,
        });
    }
    let failed = rows.len() - passed;
    sink.table = Some((["suite", "case", "pass", "detail"].map(String::from).to_vec(), rows));
    summary.precision_bits = Some(cfg.precision);
    summary.suite = Some(suite.name().into());
    summary.seed = Some(cfg.seed);
    summary.cases = Some(cfg.cases);
    summary.passed = Some(passed);
    summary.failed = Some(failed);
    Ok(if failed == 0 { exit::OK } else { exit::VERIFY_FAILED })
}

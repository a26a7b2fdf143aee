//! Line-delimited JSON records and CSV tables.
//!
//! Every record is one JSON object on its own line, tagged by `"record"`.
//! Numbers are decimal strings that parse back to the same value at the job
//! precision; integers and flags are plain JSON.

use std::collections::BTreeMap;

use qamean::BigReal;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub fn dec(x: &BigReal) -> String {
    x.to_decimal_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    /// One orbit step.
    Step {
        index: usize,
        vector: Vec<String>,
        mean: String,
        var: String,
        delta: String,
        /// `Var_index / Var_(index-1)^2`, when `Var_(index-1) > 0`.
        ratio: Option<String>,
    },
    /// One entry of the ratio series.
    Ratio {
        step: usize,
        ratio: String,
        above_floor: bool,
    },
    /// Class data of one generator.
    Class {
        generator: String,
        lo: String,
        hi: String,
        k: String,
        k_bound: String,
        lip_f2: String,
        star_norm: String,
        in_x_k: bool,
        in_x_lip_k: bool,
        lipschitz_estimated: bool,
    },
    /// One verification case; `detail` holds the measured quantities.
    Case {
        suite: String,
        case: usize,
        pass: bool,
        detail: BTreeMap<String, String>,
    },
    Summary(Summary),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_bits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_gap: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passed: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

pub fn to_line(record: &Record) -> String {
    serde_json::to_string(record).expect("records serialize")
}

pub fn parse_line(line: &str) -> Result<Record, CliError> {
    serde_json::from_str(line).map_err(|e| CliError::Usage(format!("bad record: {e}")))
}

/// Renders rows as CSV with a header.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip() {
        let recs = vec![
            Record::Step {
                index: 1,
                vector: vec!["1.5".into(), "1.41".into()],
                mean: "1.45".into(),
                var: "0.0012".into(),
                delta: "0.08".into(),
                ratio: None,
            },
            Record::Summary(Summary {
                command: "iterate".into(),
                terminal: Some("converged".into()),
                ..Default::default()
            }),
        ];
        for r in recs {
            assert_eq!(parse_line(&to_line(&r)).unwrap(), r);
        }
    }

    #[test]
    fn csv_has_header() {
        let t = csv_table(&["step", "ratio"], &[vec!["1".into(), "0.03".into()]]);
        assert_eq!(t, "step,ratio\n1,0.03\n");
    }
}

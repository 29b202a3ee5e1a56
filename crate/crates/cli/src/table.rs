//! CSV reading and writing. Floats are written with 17 significant digits
//! so every value round-trips exactly.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tunebench::{BudgetCurve, Direction, Quartiles};

use crate::error::{CliError, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes `f64` fields with [`fmt_f64`].
pub mod sci {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::fmt_f64(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        s.trim().parse().map_err(serde::de::Error::custom)
    }
}

pub fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Rows of a CSV with exactly the expected header. Empty or malformed
/// files are parse errors.
pub fn read_csv<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_csv(&text, path, header)
}

pub fn parse_csv<T: DeserializeOwned>(text: &str, path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let found = r.headers().map_err(|e| CliError::parse(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CliError::parse(
            path,
            format!("expected header `{}`", header.join(",")),
        ));
    }
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| CliError::parse(path, e))?;
    if rows.is_empty() {
        return Err(CliError::parse(path, "no data rows"));
    }
    Ok(rows)
}

/// First line of a file, for telling CSV kinds apart.
pub fn header_of(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let first = text.lines().next().ok_or_else(|| CliError::parse(path, "empty file"))?;
    Ok(first.split(',').map(|s| s.trim().to_string()).collect())
}

pub const CURVE_HEADER: [&str; 9] = [
    "optimizer", "task", "direction", "budget", "mean", "variance", "q25", "q50", "q75",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub optimizer: String,
    pub task: String,
    pub direction: Direction,
    pub budget: usize,
    #[serde(with = "sci")]
    pub mean: f64,
    #[serde(with = "sci")]
    pub variance: f64,
    #[serde(with = "sci")]
    pub q25: f64,
    #[serde(with = "sci")]
    pub q50: f64,
    #[serde(with = "sci")]
    pub q75: f64,
}

pub fn curve_rows(optimizer: &str, task: &str, curve: &BudgetCurve) -> Vec<CurveRow> {
    (0..curve.len())
        .map(|i| CurveRow {
            optimizer: optimizer.to_string(),
            task: task.to_string(),
            direction: curve.direction,
            budget: curve.budgets[i],
            mean: curve.mean[i],
            variance: curve.variance[i],
            q25: curve.quantiles[i].q25,
            q50: curve.quantiles[i].q50,
            q75: curve.quantiles[i].q75,
        })
        .collect()
}

pub fn rows_to_curve(rows: &[&CurveRow]) -> BudgetCurve {
    BudgetCurve {
        direction: rows[0].direction,
        budgets: rows.iter().map(|r| r.budget).collect(),
        mean: rows.iter().map(|r| r.mean).collect(),
        variance: rows.iter().map(|r| r.variance).collect(),
        quantiles: rows
            .iter()
            .map(|r| Quartiles {
                q25: r.q25,
                q50: r.q50,
                q75: r.q75,
            })
            .collect(),
    }
}

pub const TIME_HEADER: [&str; 9] = [
    "task", "optimizer", "interval", "steps", "mean", "variance", "q25", "q50", "q75",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRow {
    pub task: String,
    pub optimizer: String,
    pub interval: usize,
    pub steps: u64,
    #[serde(with = "sci")]
    pub mean: f64,
    #[serde(with = "sci")]
    pub variance: f64,
    #[serde(with = "sci")]
    pub q25: f64,
    #[serde(with = "sci")]
    pub q50: f64,
    #[serde(with = "sci")]
    pub q75: f64,
}

pub const PROB_HEADER: [&str; 5] = ["task", "budget", "optimizer", "probability", "sampling"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbRow {
    pub task: String,
    pub budget: usize,
    pub optimizer: String,
    #[serde(with = "sci")]
    pub probability: f64,
    pub sampling: String,
}

pub const RELATIVE_HEADER: [&str; 4] = ["scope", "optimizer", "budget", "score"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeRow {
    pub scope: String,
    pub optimizer: String,
    pub budget: usize,
    #[serde(with = "sci")]
    pub score: f64,
}

pub const TUNABILITY_HEADER: [&str; 10] = [
    "scope", "optimizer", "one_hot", "cpe", "cpl", "cpu", "zeta_0.9", "zeta_0.99", "sharpness",
    "shift",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunabilityRow {
    pub scope: String,
    pub optimizer: String,
    #[serde(with = "sci")]
    pub one_hot: f64,
    #[serde(with = "sci")]
    pub cpe: f64,
    #[serde(with = "sci")]
    pub cpl: f64,
    #[serde(with = "sci")]
    pub cpu: f64,
    #[serde(rename = "zeta_0.9", with = "sci")]
    pub zeta_lo: f64,
    #[serde(rename = "zeta_0.99", with = "sci")]
    pub zeta_hi: f64,
    #[serde(with = "sci")]
    pub sharpness: f64,
    pub shift: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for v in [0.1, 22.0 / 9.0, 1e-300, -3.5e200, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(2.0), "2.0000000000000000e0");
    }

    #[test]
    fn curve_csv_round_trips() {
        let row = CurveRow {
            optimizer: "adam".into(),
            task: "quadratic".into(),
            direction: Direction::Minimize,
            budget: 3,
            mean: 22.0 / 9.0,
            variance: 0.1,
            q25: 1.0,
            q50: 2.0,
            q75: 3.0,
        };
        let text = to_csv(std::slice::from_ref(&row), &CURVE_HEADER);
        assert!(text.starts_with("optimizer,task,direction,budget,mean"));
        let back: Vec<CurveRow> = parse_csv(&text, Path::new("x"), &CURVE_HEADER).unwrap();
        assert_eq!(back, vec![row]);
    }

    #[test]
    fn empty_and_malformed_csvs_are_parse_errors() {
        let header_only = CURVE_HEADER.join(",") + "\n";
        for text in ["", header_only.as_str(), "a,b\n1,2\n"] {
            let e = parse_csv::<CurveRow>(text, Path::new("x"), &CURVE_HEADER).unwrap_err();
            assert_eq!(e.exit_code(), 6);
        }
    }
}

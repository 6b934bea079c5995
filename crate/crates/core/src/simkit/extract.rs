//! Required Eb/N0 at a target error rate.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::SimRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Ber,
    Fer,
}

impl Metric {
    fn value(self, r: &SimRecord) -> f64 {
        match self {
            Metric::Ber => r.ber,
            Metric::Fer => r.fer,
        }
    }

    fn count(self, r: &SimRecord) -> u64 {
        match self {
            Metric::Ber => r.bits_sent,
            Metric::Fer => r.frames_sent,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Ber => "BER",
            Metric::Fer => "FER",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BER" => Ok(Metric::Ber),
            "FER" => Ok(Metric::Fer),
            _ => Err(Error::config(format!("unknown metric '{s}'"))),
        }
    }
}

/// Outcome of a required-Eb/N0 lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Required {
    /// Interpolated Eb/N0 in dB.
    Reached(f64),
    /// Every point is above the target (error floor or grid too short).
    NotReached,
    /// Already below the target at the lowest grid point; the target is
    /// reached at some Eb/N0 no larger than that point.
    BelowGrid,
}

impl Required {
    pub fn value(self) -> Option<f64> {
        match self {
            Required::Reached(v) => Some(v),
            _ => None,
        }
    }
}

/// Required Eb/N0 for `target` on one detector/load curve.
///
/// Records are sorted by Eb/N0; a zero count is replaced by half an error
/// over the number of trials, and the curve is made non-increasing with a
/// running minimum. The result interpolates `log10(metric)` linearly between
/// the two points that bracket the target.
pub fn required_ebn0(records: &[SimRecord], target: f64, metric: Metric) -> Result<Required> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Argument(format!("target {target} must be in (0, 1)")));
    }
    if records.is_empty() {
        return Err(Error::Argument("no records to extract from".into()));
    }
    let mut curve: Vec<(f64, f64)> = records
        .iter()
        .map(|r| {
            let v = metric.value(r);
            let v = if v > 0.0 { v } else { 0.5 / metric.count(r).max(1) as f64 };
            (r.ebn0_db, v)
        })
        .collect();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    for i in 1..curve.len() {
        curve[i].1 = curve[i].1.min(curve[i - 1].1);
    }
    let Some(i) = curve.iter().position(|&(_, m)| m <= target) else {
        return Ok(Required::NotReached);
    };
    let (x1, m1) = curve[i];
    if m1 == target {
        return Ok(Required::Reached(x1));
    }
    if i == 0 {
        return Ok(Required::BelowGrid);
    }
    let (x0, m0) = curve[i - 1];
    let (l0, l1, lt) = (m0.log10(), m1.log10(), target.log10());
    Ok(Required::Reached(x0 + (lt - l0) / (l1 - l0) * (x1 - x0)))
}

/// One row of the extraction output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractRow {
    pub detector: String,
    pub n_users: usize,
    pub metric: Metric,
    pub target: f64,
    pub required: Required,
}

#[derive(Serialize, Deserialize)]
struct ExtractCsv {
    detector: String,
    #[serde(rename = "K")]
    n_users: usize,
    metric: String,
    target: f64,
    required_ebn0_db: Option<f64>,
    reached: String,
}

/// Required Eb/N0 for every (detector, K) curve, in order of first
/// appearance.
pub fn extract(records: &[SimRecord], target: f64, metric: Metric) -> Result<Vec<ExtractRow>> {
    let mut keys: Vec<(&str, usize)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.detector.as_str(), r.n_users)) {
            keys.push((&r.detector, r.n_users));
        }
    }
    keys.into_iter()
        .map(|(det, k)| {
            let curve: Vec<SimRecord> = records
                .iter()
                .filter(|r| r.detector == det && r.n_users == k)
                .cloned()
                .collect();
            Ok(ExtractRow {
                detector: det.to_string(),
                n_users: k,
                metric,
                target,
                required: required_ebn0(&curve, target, metric)?,
            })
        })
        .collect()
}

/// Writes `detector,K,metric,target,required_ebn0_db,reached`. `reached` is
/// `yes`, `no` (target not reached, empty value) or `below` (target already
/// met at the lowest Eb/N0, empty value).
pub fn write_extract(path: &Path, rows: &[ExtractRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        let reached = match row.required {
            Required::Reached(_) => "yes",
            Required::NotReached => "no",
            Required::BelowGrid => "below",
        };
        w.serialize(ExtractCsv {
            detector: row.detector.clone(),
            n_users: row.n_users,
            metric: row.metric.to_string(),
            target: row.target,
            required_ebn0_db: row.required.value(),
            reached: reached.into(),
        })?;
    }
    if rows.is_empty() {
        w.write_record(["detector", "K", "metric", "target", "required_ebn0_db", "reached"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_extract(path: &Path) -> Result<Vec<ExtractRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let row: ExtractCsv = row?;
        let required = match (row.reached.as_str(), row.required_ebn0_db) {
            ("yes", Some(v)) => Required::Reached(v),
            ("no", None) => Required::NotReached,
            ("below", None) => Required::BelowGrid,
            _ => return Err(Error::Format(format!("inconsistent extraction row for {}", row.detector))),
        };
        out.push(ExtractRow {
            detector: row.detector,
            n_users: row.n_users,
            metric: row.metric.parse().map_err(|_| Error::Format(format!("bad metric '{}'", row.metric)))?,
            target: row.target,
            required,
        });
    }
    Ok(out)
}

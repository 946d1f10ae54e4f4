//! Per-trial CSV rows.

use std::fmt;
use std::io::Write;
use std::path::Path;

use feedcap_core::InputClass;

use crate::error::Result;

pub const CSV_HEADER: [&str; 10] = [
    "trial_seed",
    "input_class",
    "info_q1",
    "info_q2_given_q1",
    "info_total",
    "chi1_ref",
    "chi2_ref",
    "excess",
    "min_pt_eigenvalue",
    "verdict",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowVerdict {
    Pass,
    Fail,
    /// Exploratory row with nothing asserted.
    Observed,
}

impl fmt::Display for RowVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowVerdict::Pass => "pass",
            RowVerdict::Fail => "fail",
            RowVerdict::Observed => "observed",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    /// Seed of the generated protocol; `None` for a protocol file.
    pub trial_seed: Option<u64>,
    pub input_class: InputClass,
    pub info_q1: f64,
    pub info_q2_given_q1: f64,
    pub info_total: f64,
    pub chi1_ref: Option<f64>,
    pub chi2_ref: Option<f64>,
    /// `info_total` minus the total bound it is compared with.
    pub excess: f64,
    pub min_pt_eigenvalue: f64,
    pub verdict: RowVerdict,
}

/// Twelve significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

impl TrialRow {
    pub fn record(&self) -> [String; 10] {
        let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
        [
            self.trial_seed.map(|s| s.to_string()).unwrap_or_default(),
            self.input_class.name().to_string(),
            fmt_num(self.info_q1),
            fmt_num(self.info_q2_given_q1),
            fmt_num(self.info_total),
            opt(self.chi1_ref),
            opt(self.chi2_ref),
            fmt_num(self.excess),
            fmt_num(self.min_pt_eigenvalue),
            self.verdict.to_string(),
        ]
    }
}

pub fn write_rows<W: Write>(rows: &[TrialRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        out.write_record(r.record())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_report(rows: &[TrialRow], path: &Path) -> Result<()> {
    write_rows(rows, std::fs::File::create(path)?)
}

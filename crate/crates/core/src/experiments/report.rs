use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::fmt::fmt_g17;
use crate::kernels::Family;

pub const CSV_HEADER: &str = "experiment,family,H,K,n,statistic,empirical,oracle,tolerance,pass";

/// How `empirical` is compared against `oracle` and `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `|empirical - oracle| <= tolerance`
    Within,
    /// `empirical <= oracle + tolerance`
    AtMost,
    /// `empirical > oracle`
    Above,
    /// `empirical < oracle`
    Below,
}

impl Check {
    pub fn eval(self, empirical: f64, oracle: f64, tolerance: f64) -> bool {
        match self {
            Check::Within => (empirical - oracle).abs() <= tolerance,
            Check::AtMost => empirical <= oracle + tolerance,
            Check::Above => empirical > oracle,
            Check::Below => empirical < oracle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub family: Option<Family>,
    #[serde(rename = "H")]
    pub h: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub n: Option<usize>,
    pub statistic: String,
    pub empirical: f64,
    pub oracle: f64,
    pub tolerance: f64,
    pub check: Check,
    pub pass: bool,
}

/// Row identity shared by a batch of rows: experiment tag, family,
/// parameters and `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowKey {
    pub experiment: String,
    pub family: Option<Family>,
    pub h: Option<f64>,
    pub k: Option<f64>,
    pub n: Option<usize>,
}

impl RowKey {
    pub fn new(experiment: &str) -> Self {
        Self { experiment: experiment.to_string(), family: None, h: None, k: None, n: None }
    }

    pub fn family(mut self, family: Family, h: f64, k: f64) -> Self {
        self.family = Some(family);
        self.h = family.uses_h().then_some(h);
        self.k = family.uses_k().then_some(k);
        self
    }

    pub fn n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn row(
        &self,
        statistic: impl Into<String>,
        empirical: f64,
        oracle: f64,
        tolerance: f64,
        check: Check,
    ) -> ReportRow {
        ReportRow {
            experiment: self.experiment.clone(),
            family: self.family,
            h: self.h,
            k: self.k,
            n: self.n,
            statistic: statistic.into(),
            empirical,
            oracle,
            tolerance,
            check,
            pass: check.eval(empirical, oracle, tolerance),
        }
    }

    /// A boolean condition encoded as `empirical ∈ {0, 1}` against oracle 1.
    pub fn flag(&self, statistic: impl Into<String>, ok: bool) -> ReportRow {
        self.row(statistic, if ok { 1.0 } else { 0.0 }, 1.0, 0.0, Check::Within)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub rows: Vec<ReportRow>,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64, config: serde_json::Value, rows: Vec<ReportRow>) -> Self {
        let passed = rows.iter().all(|r| r.pass);
        Self { experiment: experiment.to_string(), seed, config, rows, passed }
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn find(&self, statistic: &str, n: Option<usize>) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.statistic == statistic && (n.is_none() || r.n == n))
    }

    pub fn write_csv_rows<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.experiment,
                r.family.map(|f| f.id()).unwrap_or(""),
                r.h.map(fmt_g17).unwrap_or_default(),
                r.k.map(fmt_g17).unwrap_or_default(),
                r.n.map(|n| n.to_string()).unwrap_or_default(),
                r.statistic,
                fmt_g17(r.empirical),
                fmt_g17(r.oracle),
                fmt_g17(r.tolerance),
                r.pass
            )?;
        }
        Ok(())
    }

    /// Header plus rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        self.write_csv_rows(out)
    }
}

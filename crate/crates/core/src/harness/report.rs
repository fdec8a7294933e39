//! Report files: a CSV with a schema comment line, or a JSON document.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codes::Mode;
use crate::error::{Error, Result};

pub const SCHEMA: &str = "fjscc-report/1";
pub const CSV_HEADER: [&str; 10] =
    ["mode", "k", "eps", "trials", "mean_eta", "rate", "err_rate", "rate_ci95", "approx_rate", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidConfig(format!("unknown format {s:?}"))),
        }
    }
}

/// Rounds to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn fmt6(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{}", sig6(x))
    }
}

/// One `(mode, k)` cell of a rate experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mode: Mode,
    pub k: usize,
    pub eps: f64,
    pub trials: usize,
    pub mean_eta: f64,
    /// `k / mean_eta`.
    pub rate: f64,
    pub err_rate: f64,
    /// Half-width of the 95% delta-method interval on `rate`.
    pub rate_ci95: f64,
    pub approx_rate: f64,
    pub seed: u64,
    pub errors: usize,
    /// 95% Wilson interval on the error probability.
    pub err_ci_lo: f64,
    pub err_ci_hi: f64,
    /// One-sided 99% Clopper-Pearson upper bound on the error probability.
    pub err_upper99: f64,
    pub sd_eta: f64,
    /// Trials stopped by the horizon cap (counted as errors with `eta = cap`).
    pub capped: usize,
    /// Trials that failed with any other error (counted as errors, excluded
    /// from `mean_eta`).
    pub failures: usize,
}

impl ReportRow {
    fn rounded(&self) -> Self {
        ReportRow {
            eps: sig6(self.eps),
            mean_eta: sig6(self.mean_eta),
            rate: sig6(self.rate),
            err_rate: sig6(self.err_rate),
            rate_ci95: sig6(self.rate_ci95),
            approx_rate: sig6(self.approx_rate),
            err_ci_lo: sig6(self.err_ci_lo),
            err_ci_hi: sig6(self.err_ci_hi),
            err_upper99: sig6(self.err_upper99),
            sd_eta: sig6(self.sd_eta),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ExperimentReport {
    pub schema: String,
    pub channel: String,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn row(&self, mode: Mode, k: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.mode == mode && r.k == k)
    }

    /// Copy with every float rounded to 6 significant digits.
    pub fn rounded(&self) -> Self {
        ExperimentReport { rows: self.rows.iter().map(ReportRow::rounded).collect(), ..self.clone() }
    }
}

pub fn write_report<W: Write>(report: &ExperimentReport, format: Format, out: W) -> Result<()> {
    match format {
        Format::Json => serde_json::to_writer_pretty(out, &report.rounded()).map_err(|e| Error::Parse(e.to_string())),
        Format::Csv => {
            let mut out = out;
            writeln!(out, "# schema={SCHEMA} channel={}", report.channel)?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in &report.rows {
                w.write_record([
                    r.mode.to_string(),
                    r.k.to_string(),
                    fmt6(r.eps),
                    r.trials.to_string(),
                    fmt6(r.mean_eta),
                    fmt6(r.rate),
                    fmt6(r.err_rate),
                    fmt6(r.rate_ci95),
                    fmt6(r.approx_rate),
                    r.seed.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

/// Writes `report` to `path`.
pub fn emit_report(report: &ExperimentReport, format: Format, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_report(report, format, std::io::BufWriter::new(f))
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Reads a report written by [`emit_report`]. CSV files carry only the
/// header columns; the remaining row fields load as zero.
pub fn load_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()));
    }
    let first = text.lines().next().unwrap_or("");
    let meta = first.strip_prefix("# ").ok_or_else(|| Error::Parse("missing schema line".into()))?;
    let mut schema = String::new();
    let mut channel = String::new();
    for part in meta.split_whitespace() {
        if let Some(v) = part.strip_prefix("schema=") {
            schema = v.into();
        } else if let Some(v) = part.strip_prefix("channel=") {
            channel = v.into();
        }
    }
    if schema != SCHEMA {
        return Err(Error::Parse(format!("unsupported schema {schema:?}")));
    }
    let body = text.as_bytes().lines().skip(1).collect::<std::io::Result<Vec<_>>>()?.join("\n");
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let f =
            |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| Error::Parse(format!("bad number {:?}", &rec[i]))) };
        let u = |i: usize| -> Result<u64> {
            rec[i].parse().map_err(|_| Error::Parse(format!("bad integer {:?}", &rec[i])))
        };
        rows.push(ReportRow {
            mode: rec[0].parse()?,
            k: u(1)? as usize,
            eps: f(2)?,
            trials: u(3)? as usize,
            mean_eta: f(4)?,
            rate: f(5)?,
            err_rate: f(6)?,
            rate_ci95: f(7)?,
            approx_rate: f(8)?,
            seed: u(9)?,
            errors: 0,
            err_ci_lo: 0.0,
            err_ci_hi: 0.0,
            err_upper99: 0.0,
            sd_eta: 0.0,
            capped: 0,
            failures: 0,
        });
    }
    Ok(ExperimentReport { schema, channel, rows })
}

//! Rate to distortion mappings.
//!
//! The analytic results only depend on a codec through `D(R)`. [`ShannonModel`]
//! uses the distortion-rate bound; [`TableModel`] interpolates distortions
//! measured for real codes (for instance sparse linear codes with `K` ones per
//! row and `C` per column, rate `K/C`), loaded from a `rate,distortion` CSV.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::analytic::distortion_of_rate;
use crate::error::{Error, Result};
use crate::types::{Distortion, Rate};

/// Slack allowed below the Shannon bound for measured distortions.
pub const SHANNON_BOUND_TOL: f64 = 1e-9;

pub trait DistortionModel: fmt::Debug + Send + Sync {
    /// Per-bit distortion at rate `r`. Non-increasing in `r`, within `[0, 1/2]`.
    fn d_of_rate(&self, r: Rate) -> Result<Distortion>;

    fn id(&self) -> &str;

    /// Closed range of rates the model answers. A lower bound of zero means
    /// every rate in `(0, upper]`.
    fn rate_domain(&self) -> (f64, f64);

    /// Whether the `R -> 0` limit of the decay rate is defined for this model.
    fn has_zero_rate_limit(&self) -> bool {
        false
    }
}

/// Distortion-rate function of the uniform binary source.
#[derive(Debug, Clone, Copy, Default)]
pub struct ShannonModel;

pub fn shannon_model() -> ShannonModel {
    ShannonModel
}

impl DistortionModel for ShannonModel {
    fn d_of_rate(&self, r: Rate) -> Result<Distortion> {
        Ok(distortion_of_rate(r))
    }

    fn id(&self) -> &str {
        "shannon"
    }

    fn rate_domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn has_zero_rate_limit(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
}

/// Knots `(rate, distortion)` with strictly increasing rates and
/// non-increasing distortions, none below the Shannon bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionTable {
    knots: Vec<(Rate, Distortion)>,
    interpolation: Interpolation,
}

impl DistortionTable {
    pub fn new(knots: &[(f64, f64)]) -> Result<Self> {
        let lines: Vec<_> = knots
            .iter()
            .enumerate()
            .map(|(i, &(r, d))| (i + 1, r, d))
            .collect();
        Self::from_numbered(&lines)
    }

    /// Parses the `rate,distortion` CSV format, reporting the first problem
    /// with its 1-based line number.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let report = check_table_csv(text);
        match report.issues.first() {
            Some(issue) if issue.line == 0 => Err(Error::EmptyTable),
            Some(issue) => Err(Error::InvalidTable {
                line: issue.line,
                reason: issue.message.clone(),
            }),
            None => Ok(Self {
                knots: report
                    .knots
                    .iter()
                    .map(|k| (Rate(k.rate), Distortion(k.distortion)))
                    .collect(),
                interpolation: Interpolation::Linear,
            }),
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_csv_str(&text)
    }

    fn from_numbered(knots: &[(usize, f64, f64)]) -> Result<Self> {
        let report = check_knots(knots);
        if knots.is_empty() {
            return Err(Error::EmptyTable);
        }
        if let Some(issue) = report.first() {
            return Err(Error::InvalidTable {
                line: issue.line,
                reason: issue.message.clone(),
            });
        }
        Ok(Self {
            knots: knots
                .iter()
                .map(|&(_, r, d)| (Rate(r), Distortion(d)))
                .collect(),
            interpolation: Interpolation::Linear,
        })
    }

    pub fn knots(&self) -> &[(Rate, Distortion)] {
        &self.knots
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn rate_range(&self) -> (f64, f64) {
        (
            self.knots[0].0.get(),
            self.knots[self.knots.len() - 1].0.get(),
        )
    }

    fn interpolate(&self, r: f64) -> Result<f64> {
        let (lo, hi) = self.rate_range();
        if r < lo || r > hi {
            return Err(Error::RateOutOfRange {
                rate: r,
                min: lo,
                max: hi,
            });
        }
        let idx = self.knots.partition_point(|(kr, _)| kr.get() < r);
        let (r1, d1) = self.knots[idx];
        if r1.get() == r {
            return Ok(d1.get());
        }
        let (r0, d0) = self.knots[idx - 1];
        let t = (r - r0.get()) / (r1.get() - r0.get());
        Ok(d0.get() + t * (d1.get() - d0.get()))
    }
}

/// Piecewise-linear model over a [`DistortionTable`].
#[derive(Debug, Clone)]
pub struct TableModel {
    table: DistortionTable,
    id: String,
}

pub fn table_model(table: DistortionTable) -> TableModel {
    TableModel::new(table, "table")
}

impl TableModel {
    pub fn new(table: DistortionTable, id: impl Into<String>) -> Self {
        Self {
            table,
            id: id.into(),
        }
    }

    pub fn table(&self) -> &DistortionTable {
        &self.table
    }
}

impl DistortionModel for TableModel {
    fn d_of_rate(&self, r: Rate) -> Result<Distortion> {
        self.table.interpolate(r.get()).map(Distortion)
    }

    fn id(&self) -> &str {
        &self.id
    }

    fn rate_domain(&self) -> (f64, f64) {
        self.table.rate_range()
    }
}

/// A measured code: `K` ones per row, `C` per column, rate `K/C`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCodeSpec {
    pub k_ones_per_row: u32,
    pub c_ones_per_column: u32,
    pub measured_distortion: Distortion,
    pub provenance: String,
}

impl EmpiricalCodeSpec {
    pub fn new(
        k_ones_per_row: u32,
        c_ones_per_column: u32,
        measured_distortion: f64,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if k_ones_per_row == 0 || c_ones_per_column == 0 || k_ones_per_row > c_ones_per_column {
            return Err(Error::domain(
                "code rate K/C",
                k_ones_per_row as f64 / c_ones_per_column.max(1) as f64,
                "(0, 1] with K, C >= 1",
            ));
        }
        Ok(Self {
            k_ones_per_row,
            c_ones_per_column,
            measured_distortion: Distortion::new(measured_distortion)?,
            provenance: provenance.into(),
        })
    }

    pub fn rate(&self) -> Rate {
        Rate(self.k_ones_per_row as f64 / self.c_ones_per_column as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub within_bound: bool,
    pub shannon_distortion: f64,
    /// Measured minus optimal distortion; the code's suboptimality.
    pub gap: f64,
}

/// Checks a measured code against the distortion-rate bound at its rate.
pub fn validate_against_bound(spec: &EmpiricalCodeSpec) -> BoundCheck {
    let shannon = distortion_of_rate(spec.rate()).get();
    let gap = spec.measured_distortion.get() - shannon;
    BoundCheck {
        within_bound: gap >= -SHANNON_BOUND_TOL,
        shannon_distortion: shannon,
        gap,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnotCheck {
    pub line: usize,
    pub rate: f64,
    pub distortion: f64,
    pub shannon_distortion: f64,
    pub within_bound: bool,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableIssue {
    /// 1-based source line; 0 for whole-file problems.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct TableReport {
    pub knots: Vec<KnotCheck>,
    pub issues: Vec<TableIssue>,
}

impl TableReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }
}

fn check_knots(knots: &[(usize, f64, f64)]) -> Vec<TableIssue> {
    check_knots_detailed(knots).1
}

fn check_knots_detailed(knots: &[(usize, f64, f64)]) -> (Vec<KnotCheck>, Vec<TableIssue>) {
    let mut checks = Vec::with_capacity(knots.len());
    let mut issues = Vec::new();
    let mut prev: Option<(f64, f64)> = None;

    for &(line, r, d) in knots {
        let rate = match Rate::new(r) {
            Ok(rate) => rate,
            Err(e) => {
                issues.push(TableIssue {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if let Err(e) = Distortion::new(d) {
            issues.push(TableIssue {
                line,
                message: e.to_string(),
            });
            continue;
        }
        let shannon = distortion_of_rate(rate).get();
        let within_bound = d >= shannon - SHANNON_BOUND_TOL;
        if !within_bound {
            issues.push(TableIssue {
                line,
                message: format!(
                    "distortion {d} at rate {r} is below the Shannon bound {shannon:.12}"
                ),
            });
        }
        let monotone = match prev {
            None => true,
            Some((pr, pd)) => {
                if r <= pr {
                    issues.push(TableIssue {
                        line,
                        message: format!("rate {r} does not increase over previous rate {pr}"),
                    });
                    false
                } else if d > pd {
                    issues.push(TableIssue {
                        line,
                        message: format!("distortion {d} increases over previous distortion {pd}"),
                    });
                    false
                } else {
                    true
                }
            }
        };
        prev = Some((r, d));
        checks.push(KnotCheck {
            line,
            rate: r,
            distortion: d,
            shannon_distortion: shannon,
            within_bound,
            monotone,
        });
    }
    (checks, issues)
}

/// Full validation of a `rate,distortion` CSV: every knot is checked and
/// every problem reported with its line number.
pub fn check_table_csv(text: &str) -> TableReport {
    let mut report = TableReport::default();
    let mut records = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
        .into_records()
        .filter(|rec| !matches!(rec, Ok(r) if r.iter().all(str::is_empty)));
    let line_of = |rec: &csv::StringRecord| rec.position().map_or(0, |p| p.line() as usize);

    match records.next() {
        None => {
            report.issues.push(TableIssue {
                line: 0,
                message: "no knots".into(),
            });
            return report;
        }
        Some(Err(e)) => {
            report.issues.push(TableIssue {
                line: e.position().map_or(1, |p| p.line() as usize),
                message: e.to_string(),
            });
            return report;
        }
        Some(Ok(header)) => {
            if header.iter().collect::<Vec<_>>() != ["rate", "distortion"] {
                report.issues.push(TableIssue {
                    line: line_of(&header),
                    message: format!(
                        "expected header 'rate,distortion', found '{}'",
                        header.iter().collect::<Vec<_>>().join(",")
                    ),
                });
                return report;
            }
        }
    }

    let mut parsed = Vec::new();
    for rec in records {
        let rec = match rec {
            Ok(rec) => rec,
            Err(e) => {
                report.issues.push(TableIssue {
                    line: e.position().map_or(0, |p| p.line() as usize),
                    message: e.to_string(),
                });
                continue;
            }
        };
        let n = line_of(&rec);
        if rec.len() != 2 {
            report.issues.push(TableIssue {
                line: n,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
            continue;
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(r), Ok(d)) => parsed.push((n, r, d)),
            _ => report.issues.push(TableIssue {
                line: n,
                message: format!(
                    "cannot parse '{},{}' as two decimal numbers",
                    &rec[0], &rec[1]
                ),
            }),
        }
    }

    if parsed.is_empty() && report.issues.is_empty() {
        report.issues.push(TableIssue {
            line: 0,
            message: "no knots".into(),
        });
        return report;
    }

    let (knots, issues) = check_knots_detailed(&parsed);
    report.knots = knots;
    report.issues.extend(issues);
    report.issues.sort_by_key(|i| i.line);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shannon_queries() {
        let m = shannon_model();
        assert_eq!(m.id(), "shannon");
        assert_eq!(m.d_of_rate(Rate::ONE).unwrap().get(), 0.0);
        let half = m.d_of_rate(Rate::new(0.5).unwrap()).unwrap().get();
        assert!((half - 0.110_027_864_438_359_55).abs() < 1e-12);
        let two_thirds = m.d_of_rate(Rate::new(2.0 / 3.0).unwrap()).unwrap().get();
        assert!((two_thirds - 0.061_490_470_078_724_18).abs() < 1e-12);
    }

    #[test]
    fn table_knots_and_midpoint() {
        let m = table_model(DistortionTable::new(&[(0.5, 0.2), (1.0, 0.05)]).unwrap());
        assert_eq!(m.d_of_rate(Rate::new(0.5).unwrap()).unwrap().get(), 0.2);
        assert_eq!(m.d_of_rate(Rate::ONE).unwrap().get(), 0.05);
        let mid = m.d_of_rate(Rate::new(0.75).unwrap()).unwrap().get();
        assert!((mid - 0.125).abs() < 1e-15);
        assert!(matches!(
            m.d_of_rate(Rate::new(0.4).unwrap()),
            Err(Error::RateOutOfRange { .. })
        ));
    }

    #[test]
    fn table_rejects_sub_shannon_knot() {
        assert!(matches!(
            DistortionTable::new(&[(0.5, 0.05)]),
            Err(Error::InvalidTable { line: 1, .. })
        ));
    }

    #[test]
    fn table_rejects_disorder() {
        assert!(DistortionTable::new(&[(0.6, 0.2), (0.5, 0.25)]).is_err());
        assert!(DistortionTable::new(&[(0.5, 0.2), (0.6, 0.25)]).is_err());
        assert!(matches!(DistortionTable::new(&[]), Err(Error::EmptyTable)));
    }

    #[test]
    fn bound_check_examples() {
        let good = EmpiricalCodeSpec::new(2, 3, 0.20, "K=2 C=3").unwrap();
        let chk = validate_against_bound(&good);
        assert!(chk.within_bound);
        // 0.2 - D(2/3), 40-digit reference 0.13850952992127582...
        assert!((chk.gap - 0.138_509_529_921_275_8).abs() < 1e-12);

        let lossless = EmpiricalCodeSpec::new(1, 1, 0.0, "identity").unwrap();
        let chk = validate_against_bound(&lossless);
        assert!(chk.within_bound);
        assert_eq!(chk.gap, 0.0);

        let impossible = EmpiricalCodeSpec::new(2, 4, 0.01, "too good").unwrap();
        assert!(!validate_against_bound(&impossible).within_bound);

        assert!(EmpiricalCodeSpec::new(3, 2, 0.1, "").is_err());
        assert!(EmpiricalCodeSpec::new(0, 2, 0.1, "").is_err());
    }

    #[test]
    fn csv_parsing_and_diagnostics() {
        let t = DistortionTable::from_csv_str("rate,distortion\n0.5,0.2\n1.0,0.05\n").unwrap();
        assert_eq!(t.knots().len(), 2);

        let err =
            DistortionTable::from_csv_str("rate,distortion\n0.25,0.3\n0.5,0.05\n").unwrap_err();
        assert!(matches!(err, Error::InvalidTable { line: 3, .. }), "{err}");

        assert!(matches!(
            DistortionTable::from_csv_str(""),
            Err(Error::EmptyTable)
        ));
        assert!(matches!(
            DistortionTable::from_csv_str("rate,distortion\n"),
            Err(Error::EmptyTable)
        ));
        assert!(matches!(
            DistortionTable::from_csv_str("r,d\n0.5,0.2\n"),
            Err(Error::InvalidTable { line: 1, .. })
        ));
        assert!(matches!(
            DistortionTable::from_csv_str("rate,distortion\n0.5;0.2\n"),
            Err(Error::InvalidTable { line: 2, .. })
        ));
    }

    #[test]
    fn report_lists_every_issue() {
        let report = check_table_csv("rate,distortion\n0.5,0.05\n0.6,0.3\nx,1\n");
        assert!(!report.passed());
        let lines: Vec<_> = report.issues.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![2, 3, 4]);
        assert_eq!(report.knots.len(), 2);
        assert!(!report.knots[0].within_bound);
    }
}

//! Scenario tables read from CSV, and portfolios over their columns.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::axioms::PairedScenarios;
use crate::dist::EmpiricalDistribution;
use crate::error::RiskError;
use crate::numeric::{compensated_sum, format_g17};

/// Reserved column name carrying scenario probabilities.
pub const PROB_COLUMN: &str = "prob";

const PROB_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error("cannot read {path}: {message}")]
    Unreadable { path: String, message: String },
    #[error("cannot write {path}: {message}")]
    Unwritable { path: String, message: String },
    #[error("missing header row")]
    MissingHeader,
    #[error("row {row}, column {column:?}: cannot parse {cell:?} as a number")]
    ParseError {
        row: usize,
        column: String,
        cell: String,
    },
    #[error("row {row}: expected {expected} fields, found {actual}")]
    RaggedRow {
        row: usize,
        expected: usize,
        actual: usize,
    },
    #[error("duplicate column {0:?}")]
    DuplicateColumn(String),
    #[error("table has no data rows")]
    EmptyTable,
    #[error("table has no outcome columns")]
    NoOutcomeColumns,
    #[error("row {row}: probability {value} is not positive")]
    NegativeProb { row: usize, value: f64 },
    #[error("probabilities sum to {sum}, not 1")]
    ProbSumMismatch { sum: f64 },
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("invalid portfolio: {0}")]
    InvalidPortfolio(String),
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {}", .0.join(", "))]
    VerificationFailed(Vec<String>),
}

impl IoError {
    /// 1 for usage errors, 2 for data and verification errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            IoError::Usage(_) => 1,
            _ => 2,
        }
    }
}

pub type IoResult<T> = std::result::Result<T, IoError>;

/// Named outcome columns over common scenarios. `probs` is `None` for
/// equally weighted scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    probs: Option<Vec<f64>>,
}

impl ScenarioTable {
    pub fn new(
        columns: Vec<String>,
        rows: Vec<Vec<f64>>,
        probs: Option<Vec<f64>>,
    ) -> IoResult<Self> {
        if columns.is_empty() {
            return Err(IoError::NoOutcomeColumns);
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &columns {
            if c == PROB_COLUMN || !seen.insert(c.as_str()) {
                return Err(IoError::DuplicateColumn(c.clone()));
            }
        }
        if rows.is_empty() {
            return Err(IoError::EmptyTable);
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != columns.len() {
                return Err(IoError::RaggedRow {
                    row: i + 1,
                    expected: columns.len(),
                    actual: r.len(),
                });
            }
            if let Some(k) = r.iter().position(|v| !v.is_finite()) {
                return Err(IoError::ParseError {
                    row: i + 1,
                    column: columns[k].clone(),
                    cell: r[k].to_string(),
                });
            }
        }
        let probs = match probs {
            None => None,
            Some(p) => Some(normalize_probs(p, rows.len())?),
        };
        Ok(Self {
            columns,
            rows,
            probs,
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn probs(&self) -> Option<&[f64]> {
        self.probs.as_deref()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Scenario probabilities, filled in as `1/len` when absent.
    pub fn scenario_probs(&self) -> Vec<f64> {
        match &self.probs {
            Some(p) => p.clone(),
            None => vec![1.0 / self.len() as f64; self.len()],
        }
    }

    pub fn column_index(&self, name: &str) -> IoResult<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| IoError::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> IoResult<Vec<f64>> {
        let k = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Joint scenarios of two columns.
    pub fn pair(&self, a: &str, b: &str) -> IoResult<PairedScenarios> {
        Ok(PairedScenarios::new(
            self.column(a)?,
            self.column(b)?,
            self.scenario_probs(),
        )?)
    }

    /// CSV text with every number printed to 17 significant digits, so that
    /// [`parse_csv`] reproduces the table exactly.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        if self.probs.is_some() {
            header.push(PROB_COLUMN);
        }
        w.write_record(&header).expect("in-memory write");
        for (i, r) in self.rows.iter().enumerate() {
            let mut rec: Vec<String> = r.iter().map(|&v| format_g17(v)).collect();
            if let Some(p) = &self.probs {
                rec.push(format_g17(p[i]));
            }
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }
}

fn normalize_probs(probs: Vec<f64>, rows: usize) -> IoResult<Vec<f64>> {
    if probs.len() != rows {
        return Err(IoError::RaggedRow {
            row: probs.len().min(rows) + 1,
            expected: rows,
            actual: probs.len(),
        });
    }
    for (i, &p) in probs.iter().enumerate() {
        if p.is_nan() || p <= 0.0 || p.is_infinite() {
            return Err(IoError::NegativeProb {
                row: i + 1,
                value: p,
            });
        }
    }
    let sum = compensated_sum(probs.iter().copied());
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(IoError::ProbSumMismatch { sum });
    }
    // Already normalized tables pass through untouched, which keeps
    // emit-then-load exact.
    if (sum - 1.0).abs() <= 1e-12 {
        return Ok(probs);
    }
    Ok(probs.into_iter().map(|p| p / sum).collect())
}

fn parse_cell(cell: &str, row: usize, column: &str) -> IoResult<f64> {
    let t = cell.trim();
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IoError::ParseError {
            row,
            column: column.to_string(),
            cell: cell.to_string(),
        }),
    }
}

/// Parses CSV text: a header row, then one scenario per row. A column named
/// `prob` holds scenario probabilities. Rows are numbered from 1, not
/// counting the header.
pub fn parse_csv<R: Read>(input: R) -> IoResult<ScenarioTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(IoError::MissingHeader),
        Some(Err(e)) => return Err(IoError::Usage(format!("malformed CSV header: {e}"))),
        Some(Ok(h)) => h,
    };
    let names: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    if names.iter().all(String::is_empty) {
        return Err(IoError::MissingHeader);
    }
    let prob_index = names.iter().position(|n| n == PROB_COLUMN);
    let columns: Vec<String> = names
        .iter()
        .enumerate()
        .filter(|&(k, _)| Some(k) != prob_index)
        .map(|(_, n)| n.clone())
        .collect();
    if let Some(dup) = names
        .iter()
        .enumerate()
        .find(|(k, n)| names[..*k].contains(n))
        .map(|(_, n)| n.clone())
    {
        return Err(IoError::DuplicateColumn(dup));
    }

    let mut rows = Vec::new();
    let mut probs = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| IoError::ParseError {
            row,
            column: String::new(),
            cell: e.to_string(),
        })?;
        if rec.len() != names.len() {
            return Err(IoError::RaggedRow {
                row,
                expected: names.len(),
                actual: rec.len(),
            });
        }
        let mut values = Vec::with_capacity(columns.len());
        for (k, cell) in rec.iter().enumerate() {
            let v = parse_cell(cell, row, &names[k])?;
            if Some(k) == prob_index {
                probs.push(v);
            } else {
                values.push(v);
            }
        }
        rows.push(values);
    }
    if columns.is_empty() {
        return Err(IoError::NoOutcomeColumns);
    }
    ScenarioTable::new(columns, rows, prob_index.map(|_| probs))
}

pub fn load_csv(path: &Path) -> IoResult<ScenarioTable> {
    let file = std::fs::File::open(path).map_err(|e| IoError::Unreadable {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_csv(std::io::BufReader::new(file))
}

/// Linear combination of table columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSpec {
    weights: BTreeMap<String, f64>,
}

impl PortfolioSpec {
    pub fn new(weights: BTreeMap<String, f64>) -> IoResult<Self> {
        if let Some((name, w)) = weights.iter().find(|(_, w)| !w.is_finite()) {
            return Err(IoError::InvalidPortfolio(format!(
                "weight {w} for {name:?}"
            )));
        }
        if weights.values().all(|&w| w == 0.0) {
            return Err(IoError::InvalidPortfolio("no nonzero weight".into()));
        }
        Ok(Self { weights })
    }

    pub fn single(column: &str) -> Self {
        Self {
            weights: BTreeMap::from([(column.to_string(), 1.0)]),
        }
    }

    /// Parses `name=weight` pairs separated by commas, e.g. `a=0.5,b=0.5`.
    pub fn parse(text: &str) -> IoResult<Self> {
        let mut weights = BTreeMap::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, w) = part
                .split_once('=')
                .ok_or_else(|| IoError::Usage(format!("weight {part:?} is not name=value")))?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| IoError::Usage(format!("weight {part:?} is not a number")))?;
            if weights.insert(name.trim().to_string(), w).is_some() {
                return Err(IoError::Usage(format!(
                    "column {:?} weighted twice",
                    name.trim()
                )));
            }
        }
        if weights.is_empty() {
            return Err(IoError::Usage("empty weight list".into()));
        }
        Self::new(weights)
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn validate(&self, t: &ScenarioTable) -> IoResult<()> {
        for name in self.weights.keys() {
            t.column_index(name)?;
        }
        Ok(())
    }
}

/// Per-scenario portfolio values with the table's scenario probabilities.
pub fn portfolio_law(t: &ScenarioTable, p: &PortfolioSpec) -> IoResult<EmpiricalDistribution> {
    let terms: Vec<(usize, f64)> = p
        .weights
        .iter()
        .map(|(name, &w)| Ok((t.column_index(name)?, w)))
        .collect::<IoResult<_>>()?;
    let probs = t.scenario_probs();
    let pairs: Vec<(f64, f64)> = t
        .rows
        .iter()
        .zip(probs)
        .map(|(r, prob)| (compensated_sum(terms.iter().map(|&(k, w)| w * r[k])), prob))
        .collect();
    Ok(EmpiricalDistribution::from_samples(&pairs)?)
}

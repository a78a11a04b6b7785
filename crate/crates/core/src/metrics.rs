//! Campaign and sweep statistics plus the CSV reports built from them.

use std::collections::HashSet;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Digest;
use crate::fsutil::write_atomic;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("ratio over an empty collection")]
    UndefinedRatio,
    #[error("statistics over an empty sample")]
    UndefinedStats,
    #[error("missing or NaN value in row {row}, column {column}")]
    MissingCell { row: usize, column: usize },
    #[error("rank matrix row {row} has {got} columns, expected {expected}")]
    Shape { row: usize, got: usize, expected: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed report: {0}")]
    Format(String),
}

/// The swept temperature grid: 0.00 to 2.00 in steps of 0.25.
pub fn temperature_grid() -> Vec<f64> {
    (0..=8).map(|i| i as f64 * 0.25).collect()
}

/// Fraction of distinct inputs, by content digest.
pub fn unique_ratio<S: AsRef<[u8]>>(seeds: &[S]) -> Result<f64, MetricsError> {
    if seeds.is_empty() {
        return Err(MetricsError::UndefinedRatio);
    }
    let distinct: HashSet<Digest> = seeds.iter().map(|s| Digest::of(s.as_ref())).collect();
    Ok(distinct.len() as f64 / seeds.len() as f64)
}

/// Ranks `values` in descending order (1 = largest). Tied values share the
/// mean of the positions they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Mean over programs of each column's per-program rank.
/// `improvements[p][t]` is program `p` at temperature `t`.
pub fn rank_row(improvements: &[Vec<f64>]) -> Result<Vec<f64>, MetricsError> {
    let width = improvements.first().map(Vec::len).ok_or(MetricsError::UndefinedStats)?;
    let mut sums = vec![0.0; width];
    for (row, values) in improvements.iter().enumerate() {
        if values.len() != width {
            return Err(MetricsError::Shape {
                row,
                got: values.len(),
                expected: width,
            });
        }
        if let Some(column) = values.iter().position(|v| v.is_nan()) {
            return Err(MetricsError::MissingCell { row, column });
        }
        for (s, r) in sums.iter_mut().zip(average_ranks(values)) {
            *s += r;
        }
    }
    let n = improvements.len() as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub config: String,
    pub ranks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub temperatures: Vec<f64>,
    pub rows: Vec<RankRow>,
}

impl RankTable {
    pub fn new(temperatures: Vec<f64>) -> Self {
        Self {
            temperatures,
            rows: Vec::new(),
        }
    }

    /// Adds one model configuration from its program × temperature matrix.
    pub fn push(&mut self, config: &str, improvements: &[Vec<f64>]) -> Result<(), MetricsError> {
        let ranks = rank_row(improvements)?;
        if ranks.len() != self.temperatures.len() {
            return Err(MetricsError::Shape {
                row: 0,
                got: ranks.len(),
                expected: self.temperatures.len(),
            });
        }
        self.rows.push(RankRow {
            config: config.to_string(),
            ranks,
        });
        Ok(())
    }

    /// The table as emitted: every rank rounded to one decimal.
    pub fn rounded(&self) -> RankTable {
        RankTable {
            temperatures: self.temperatures.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| RankRow {
                    config: r.config.clone(),
                    ranks: r.ranks.iter().map(|v| format!("{v:.1}").parse().expect("formatted float")).collect(),
                })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, MetricsError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["config".to_string()];
        header.extend(self.temperatures.iter().map(|t| format!("{t:.2}")));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.config.clone()];
            rec.extend(row.ranks.iter().map(|r| format!("{r:.1}")));
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| MetricsError::Io(e.into_error()))
    }

    pub fn from_csv(data: &[u8]) -> Result<RankTable, MetricsError> {
        let mut r = csv::Reader::from_reader(data);
        let header = r.headers()?.clone();
        if header.get(0) != Some("config") {
            return Err(MetricsError::Format("first column must be 'config'".into()));
        }
        let temperatures = header
            .iter()
            .skip(1)
            .map(|t| t.parse::<f64>().map_err(|_| MetricsError::Format(format!("bad temperature {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let ranks = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<f64>().map_err(|_| MetricsError::Format(format!("bad rank {v:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(RankRow {
                config: rec.get(0).unwrap_or_default().to_string(),
                ranks,
            });
        }
        Ok(RankTable { temperatures, rows })
    }

    pub fn emit(&self, path: &Path) -> Result<(), MetricsError> {
        write_atomic(path, &self.to_csv()?)?;
        Ok(())
    }
}

/// Order statistics of a latency sample. Quartiles interpolate linearly
/// between closest ranks, so the median of an even sample is the mean of
/// the middle two values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub mean: f64,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
    pub min: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn latency_summary(samples: &[f64]) -> Result<LatencySummary, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::UndefinedStats);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(LatencySummary {
        mean: s.iter().sum::<f64>() / s.len() as f64,
        median: quantile(&s, 0.5),
        p25: quantile(&s, 0.25),
        p75: quantile(&s, 0.75),
        min: s[0],
        max: s[s.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub program: String,
    pub temperature: f64,
    pub unique_ratio: f64,
    pub valid_ratio: f64,
    pub cov_improvement: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRow {
    pub target: String,
    pub config: String,
    pub duration_s: f64,
    pub edges: usize,
    pub queue_len: usize,
    pub imported_ai: usize,
    pub import_ratio: f64,
    pub valid_ratio_queue: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CampaignTable {
    pub rows: Vec<CampaignRow>,
}

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>, MetricsError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| MetricsError::Io(e.into_error()))
}

fn from_csv<T: for<'de> Deserialize<'de>>(data: &[u8], header: &[&str]) -> Result<Vec<T>, MetricsError> {
    let mut r = csv::Reader::from_reader(data);
    if r.headers()?.iter().ne(header.iter().copied()) {
        return Err(MetricsError::Format(format!("expected header {}", header.join(","))));
    }
    Ok(r.deserialize().collect::<Result<Vec<T>, _>>()?)
}

pub const SWEEP_HEADER: [&str; 5] = ["program", "temperature", "unique_ratio", "valid_ratio", "cov_improvement"];

pub const CAMPAIGN_HEADER: [&str; 8] = [
    "target",
    "config",
    "duration_s",
    "edges",
    "queue_len",
    "imported_ai",
    "import_ratio",
    "valid_ratio_queue",
];

impl SweepReport {
    pub fn to_csv(&self) -> Result<Vec<u8>, MetricsError> {
        to_csv(&self.cells, &SWEEP_HEADER)
    }

    pub fn from_csv(data: &[u8]) -> Result<Self, MetricsError> {
        Ok(Self {
            cells: from_csv(data, &SWEEP_HEADER)?,
        })
    }

    pub fn emit(&self, path: &Path) -> Result<(), MetricsError> {
        write_atomic(path, &self.to_csv()?)?;
        Ok(())
    }

    /// Cells for one program, ordered by temperature.
    pub fn program(&self, name: &str) -> Vec<&SweepCell> {
        let mut cells: Vec<&SweepCell> = self.cells.iter().filter(|c| c.program == name).collect();
        cells.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
        cells
    }
}

impl CampaignTable {
    pub fn to_csv(&self) -> Result<Vec<u8>, MetricsError> {
        to_csv(&self.rows, &CAMPAIGN_HEADER)
    }

    pub fn from_csv(data: &[u8]) -> Result<Self, MetricsError> {
        Ok(Self {
            rows: from_csv(data, &CAMPAIGN_HEADER)?,
        })
    }

    pub fn emit(&self, path: &Path) -> Result<(), MetricsError> {
        write_atomic(path, &self.to_csv()?)?;
        Ok(())
    }
}

/// Relative change of a variant against a reference, e.g. an ablation's "vs AI" column.
pub fn relative_change(reference: f64, variant: f64) -> Result<f64, MetricsError> {
    if reference == 0.0 {
        return Err(MetricsError::UndefinedRatio);
    }
    Ok((variant - reference) / reference)
}

pub fn median(values: &[f64]) -> Result<f64, MetricsError> {
    Ok(latency_summary(values)?.median)
}

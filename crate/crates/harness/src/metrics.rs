//! Per-episode training metrics and run summaries.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::RunError;

pub const ROLLING_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub rolling_mean: f64,
    pub sales_revenue: f64,
    pub holding_cost: f64,
    pub procurement_cost: f64,
    pub unfulfilled_penalty: f64,
    pub stockouts: usize,
    /// Store-product periods in the episode, the stock-out denominator.
    pub store_periods: usize,
}

/// Mean of the last `window` values pushed, summed oldest first.
#[derive(Debug, Clone)]
pub struct RollingMean {
    window: usize,
    values: VecDeque<f64>,
}

impl RollingMean {
    pub fn new(window: usize) -> Self {
        assert!(window > 0);
        Self {
            window,
            values: VecDeque::with_capacity(window),
        }
    }

    pub fn push(&mut self, x: f64) -> f64 {
        if self.values.len() == self.window {
            self.values.pop_front();
        }
        self.values.push_back(x);
        self.mean()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &x| a + x) / self.values.len().max(1) as f64
    }
}

pub fn rolling_means(returns: &[f64], window: usize) -> Vec<f64> {
    let mut r = RollingMean::new(window);
    returns.iter().map(|&x| r.push(x)).collect()
}

pub struct MetricsWriter {
    inner: csv::Writer<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self, RunError> {
        let file = File::create(path).map_err(|e| RunError::io(path, e))?;
        let mut inner = csv::Writer::from_writer(file);
        // Header even for runs that end before their first row.
        inner
            .write_record([
                "episode",
                "return",
                "rolling_mean",
                "sales_revenue",
                "holding_cost",
                "procurement_cost",
                "unfulfilled_penalty",
                "stockouts",
                "store_periods",
            ])
            .map_err(|e| RunError::Runtime(format!("{}: {e}", path.display())))?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &MetricsRow) -> Result<(), RunError> {
        self.inner
            .serialize(RowNoHeader(row))
            .map_err(|e| RunError::Runtime(format!("writing metrics: {e}")))
    }

    pub fn flush(&mut self) -> Result<(), RunError> {
        self.inner
            .flush()
            .map_err(|e| RunError::Runtime(format!("flushing metrics: {e}")))
    }
}

/// Serializes as a bare tuple so the writer never emits a second header.
struct RowNoHeader<'a>(&'a MetricsRow);

impl Serialize for RowNoHeader<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let r = self.0;
        (
            r.episode,
            r.ret,
            r.rolling_mean,
            r.sales_revenue,
            r.holding_cost,
            r.procurement_cost,
            r.unfulfilled_penalty,
            r.stockouts,
            r.store_periods,
        )
            .serialize(s)
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>, RunError> {
    let corrupt = |e: csv::Error| RunError::Runtime(format!("{}: corrupt metrics: {e}", path.display()));
    let file = File::open(path).map_err(|e| RunError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let rows: Vec<MetricsRow> = reader.deserialize().collect::<Result<_, _>>().map_err(corrupt)?;
    for (i, r) in rows.iter().enumerate() {
        if r.episode != i {
            return Err(RunError::Runtime(format!(
                "{}: corrupt metrics: row {} holds episode {}",
                path.display(),
                i + 1,
                r.episode
            )));
        }
    }
    Ok(rows)
}

/// Text report over a run's metrics; rolling means are recomputed from the
/// returns.
pub fn summarize_rows(rows: &[MetricsRow]) -> String {
    let mut out = String::new();
    if rows.is_empty() {
        out.push_str("0 episodes\n");
        return out;
    }
    let returns: Vec<f64> = rows.iter().map(|r| r.ret).collect();
    let means = rolling_means(&returns, ROLLING_WINDOW);
    let (best_at, best) = means
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, m)| if m > acc.1 { (i, m) } else { acc });
    let tail = &rows[rows.len().saturating_sub(ROLLING_WINDOW)..];
    let n = tail.len() as f64;
    let avg = |f: fn(&MetricsRow) -> f64| tail.iter().fold(0.0, |a, r| a + f(r)) / n;
    let stockouts: usize = rows.iter().map(|r| r.stockouts).sum();
    let cells: usize = rows.iter().map(|r| r.store_periods).sum();
    let _ = writeln!(out, "{} episodes", rows.len());
    let _ = writeln!(out, "final rolling mean return: {:.3}", means[means.len() - 1]);
    let _ = writeln!(out, "best rolling mean return: {best:.3} (episode {})", rows[best_at].episode);
    let _ = writeln!(
        out,
        "last {} episodes, mean per episode: revenue {:.3}, holding {:.3}, procurement {:.3}, unfulfilled {:.3}",
        tail.len(),
        avg(|r| r.sales_revenue),
        avg(|r| r.holding_cost),
        avg(|r| r.procurement_cost),
        avg(|r| r.unfulfilled_penalty)
    );
    let rate = if cells == 0 { 0.0 } else { stockouts as f64 / cells as f64 };
    let _ = writeln!(
        out,
        "stock-out rate: {rate:.4} ({:.2} per episode)",
        stockouts as f64 / rows.len() as f64
    );
    out
}

pub fn summarize(run_dir: &Path) -> Result<String, RunError> {
    Ok(summarize_rows(&read_metrics(&run_dir.join("metrics.csv"))?))
}

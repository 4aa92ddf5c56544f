//! Pairwise dependence screening of a variable matrix, and the probability
//! that a pair changes dependence status between two conditions.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::bf::TestResult;
use crate::config::{Method, PartitionConfig};
use crate::error::{Error, Result};
use crate::transforms::PairedSample;

/// Samples in rows, variables in named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    var_names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl ExpressionMatrix {
    pub fn new(var_names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if var_names.len() != columns.len() {
            return Err(Error::InvalidInput(format!(
                "{} names for {} columns",
                var_names.len(),
                columns.len()
            )));
        }
        let n = columns.first().map_or(0, Vec::len);
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "matrix needs at least 2 samples, got {n}"
            )));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::InvalidInput(format!(
                    "column {} has {} values, expected {n}",
                    var_names[j],
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite value in column {} at sample {i}",
                    var_names[j]
                )));
            }
        }
        Ok(Self { var_names, columns })
    }

    pub fn from_rows(var_names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let columns = (0..var_names.len())
            .map(|j| {
                rows.iter()
                    .map(|r| r.get(j).copied().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        Self::new(var_names, columns)
    }

    pub fn n_samples(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn pair(&self, a: usize, b: usize) -> PairedSample {
        PairedSample::new(self.columns[a].clone(), self.columns[b].clone())
            .expect("matrix columns are validated at construction")
    }
}

/// Result of testing one unordered pair of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub a: usize,
    pub b: usize,
    pub var_a: String,
    pub var_b: String,
    pub outcome: std::result::Result<TestResult, String>,
}

impl PairOutcome {
    pub fn result(&self) -> Option<&TestResult> {
        self.outcome.as_ref().ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    LostInB,
    GainedInB,
    Indeterminate,
}

impl EdgeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeClass::LostInB => "lost_in_B",
            EdgeClass::GainedInB => "gained_in_B",
            EdgeClass::Indeterminate => "indeterminate",
        }
    }

    pub fn classify(p_dep_a: f64, p_dep_b: f64) -> Self {
        if p_dep_a > 0.5 && 0.5 > p_dep_b {
            EdgeClass::LostInB
        } else if p_dep_b > 0.5 && 0.5 > p_dep_a {
            EdgeClass::GainedInB
        } else {
            EdgeClass::Indeterminate
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffEdge {
    pub var_a: String,
    pub var_b: String,
    pub p_dep_a: f64,
    pub p_dep_b: f64,
    pub p_diff: f64,
    pub class: EdgeClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedPair {
    pub var_a: String,
    pub var_b: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiffScan {
    pub edges: Vec<DiffEdge>,
    pub skipped: Vec<SkippedPair>,
}

/// Probability that exactly one of two independent conditions shows
/// dependence.
pub fn p_diff(p_a: f64, p_b: f64) -> f64 {
    p_a * (1.0 - p_b) + p_b * (1.0 - p_a)
}

/// Run `f` on a dedicated pool of `workers` threads (0 = rayon default).
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn upper_pairs(n_vars: usize) -> Vec<(usize, usize)> {
    (0..n_vars)
        .flat_map(|a| (a + 1..n_vars).map(move |b| (a, b)))
        .collect()
}

/// Test every unordered pair of columns. Output is ordered by `(a, b)` no
/// matter how many workers run.
pub fn pairwise_scan(
    m: &ExpressionMatrix,
    cfg: &PartitionConfig,
    method: &Method,
    workers: usize,
) -> Result<Vec<PairOutcome>> {
    cfg.validate()?;
    if m.n_vars() < 2 {
        return Err(Error::InvalidInput(
            "pairwise scan needs at least 2 variables".into(),
        ));
    }
    let pairs = upper_pairs(m.n_vars());
    with_workers(workers, || {
        pairs
            .par_iter()
            .map(|&(a, b)| PairOutcome {
                a,
                b,
                var_a: m.var_names[a].clone(),
                var_b: m.var_names[b].clone(),
                outcome: crate::run_test(&m.pair(a, b), cfg, method).map_err(|e| e.to_string()),
            })
            .collect()
    })
}

/// Differential-dependence scan between conditions A and B. Pairs are
/// enumerated in A's column order; B's columns are matched by name. Only
/// pairs with `p_diff >= threshold` are returned as edges.
pub fn diff_scan(
    m_a: &ExpressionMatrix,
    m_b: &ExpressionMatrix,
    cfg: &PartitionConfig,
    method: &Method,
    threshold: f64,
    workers: usize,
) -> Result<DiffScan> {
    let b_index: HashMap<&str, usize> = m_b
        .var_names()
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut names_a: Vec<&String> = m_a.var_names().iter().collect();
    let mut names_b: Vec<&String> = m_b.var_names().iter().collect();
    names_a.sort();
    names_b.sort();
    if names_a != names_b || b_index.len() != m_b.n_vars() {
        return Err(Error::VarMismatch(format!(
            "condition A has [{}], condition B has [{}]",
            m_a.var_names().join(", "),
            m_b.var_names().join(", ")
        )));
    }
    let permuted: Vec<Vec<f64>> = m_a
        .var_names()
        .iter()
        .map(|n| m_b.column(b_index[n.as_str()]).to_vec())
        .collect();
    let m_b = ExpressionMatrix::new(m_a.var_names().to_vec(), permuted)?;

    let scan_a = pairwise_scan(m_a, cfg, method, workers)?;
    let scan_b = pairwise_scan(&m_b, cfg, method, workers)?;
    let mut out = DiffScan::default();
    for (ra, rb) in scan_a.into_iter().zip(scan_b) {
        match (&ra.outcome, &rb.outcome) {
            (Ok(ta), Ok(tb)) => {
                let pd = p_diff(ta.p_dependent, tb.p_dependent);
                if pd >= threshold {
                    out.edges.push(DiffEdge {
                        var_a: ra.var_a,
                        var_b: ra.var_b,
                        p_dep_a: ta.p_dependent,
                        p_dep_b: tb.p_dependent,
                        p_diff: pd,
                        class: EdgeClass::classify(ta.p_dependent, tb.p_dependent),
                    });
                }
            }
            (ea, eb) => {
                let reason = [("A", ea), ("B", eb)]
                    .iter()
                    .filter_map(|(tag, r)| r.as_ref().err().map(|e| format!("{tag}: {e}")))
                    .collect::<Vec<_>>()
                    .join("; ");
                out.skipped.push(SkippedPair {
                    var_a: ra.var_a,
                    var_b: ra.var_b,
                    reason,
                });
            }
        }
    }
    Ok(out)
}

//! CSV matrix input and JSON/CSV report output.
//!
//! Matrices are comma-separated UTF-8 with a header row of variable names and
//! one sample per row. Every floating-point number written by this module uses
//! 17 significant digits (trailing zeros trimmed), so values read back are
//! bit-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::ser::Serializer;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::bf::TestResult;
use crate::diffcoexp::{DiffScan, ExpressionMatrix, PairOutcome};
use crate::error::{Error, Result};
use crate::simgen::{Percentiles, PowerReport, ReplicateSummary};

/// `%.17g`-style rendering of a finite float; non-finite values become `null`.
pub fn format_g17(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if negative { "-" } else { "" };

    if !(-4..17).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        let frac = if tail.is_empty() {
            String::new()
        } else {
            format!(".{tail}")
        };
        return format!("{sign}{head}{frac}e{exp}");
    }
    let body = if exp >= 0 {
        let point = exp as usize + 1;
        let (int, frac) = digits.split_at(point);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            int.to_string()
        } else {
            format!("{int}.{frac}")
        }
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("0.{zeros}{}", digits.trim_end_matches('0'))
    };
    format!("{sign}{body}")
}

/// A float serialized with [`format_g17`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format_g17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

/// Column names and values of a CSV table with at least one data row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// Resolve a column given either its zero-based index or its header name.
    pub fn column_index(&self, key: &str) -> Result<usize> {
        if let Some(i) = self.names.iter().position(|n| n == key) {
            return Ok(i);
        }
        match key.parse::<usize>() {
            Ok(i) if i < self.names.len() => Ok(i),
            _ => Err(Error::InvalidInput(format!(
                "no column '{key}' (have {} columns: {})",
                self.names.len(),
                self.names.join(", ")
            ))),
        }
    }

    pub fn into_matrix(self) -> Result<ExpressionMatrix> {
        ExpressionMatrix::new(self.names, self.columns)
    }
}

/// Parse a numeric CSV table from any reader.
pub fn parse_table<R: std::io::Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(Error::EmptyMatrix);
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() {
            return Err(Error::RaggedRows {
                line,
                expected: names.len(),
                found: record.len(),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let field = field.trim();
            let parse_err = |message: String| Error::Parse {
                line,
                column: j + 1,
                message,
            };
            if field.is_empty() {
                return Err(parse_err("empty cell".into()));
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("'{field}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite value '{field}'")));
            }
            columns[j].push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(Error::EmptyMatrix);
    }
    Ok(Table { names, columns })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    parse_table(File::open(path)?)
}

/// Read a samples-by-variables matrix with a header row of variable names.
pub fn read_matrix(path: &Path) -> Result<ExpressionMatrix> {
    read_table(path)?.into_matrix()
}

pub fn write_matrix<W: Write>(m: &ExpressionMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(m.var_names()).map_err(csv_error)?;
    for i in 0..m.n_samples() {
        w.write_record((0..m.n_vars()).map(|j| format_g17(m.column(j)[i])))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidInput(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Serialize)]
struct LevelJson {
    k: usize,
    #[serde(rename = "B_k")]
    b_k: Num,
}

#[derive(Serialize)]
struct ResultJson<'a> {
    n: usize,
    method: &'a str,
    c: Num,
    prior_odds: Num,
    log_bf: Num,
    p_dependent: Num,
    p_independent: Num,
    levels: Vec<LevelJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_star: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shift_axis: Option<crate::transforms::Axis>,
    truncated: bool,
}

/// Reject a result whose level contributions do not add up to its log Bayes
/// factor.
pub fn check_level_sum(r: &TestResult) -> Result<()> {
    let sum: f64 = r.level_contributions.iter().sum();
    let tol = 1e-10 * r.level_contributions.len().max(1) as f64;
    if (sum - r.log_bf).abs() > tol {
        return Err(Error::InvalidInput(format!(
            "level contributions sum to {sum}, log Bayes factor is {}",
            r.log_bf
        )));
    }
    Ok(())
}

fn result_json(r: &TestResult) -> Result<ResultJson<'static>> {
    check_level_sum(r)?;
    Ok(ResultJson {
        n: r.n,
        method: r.method.as_str(),
        c: Num(r.c),
        prior_odds: Num(r.prior_odds),
        log_bf: Num(r.log_bf),
        p_dependent: Num(r.p_dependent),
        p_independent: Num(r.p_independent()),
        levels: r
            .level_contributions
            .iter()
            .enumerate()
            .map(|(i, &b)| LevelJson {
                k: i + 1,
                b_k: Num(b),
            })
            .collect(),
        delta_star: r.delta_star.map(Num),
        shift_axis: r.shift_axis,
        truncated: r.truncated,
    })
}

fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn test_result_json(r: &TestResult) -> Result<String> {
    to_json_string(&result_json(r)?)
}

const TEST_CSV_HEADER: [&str; 10] = [
    "n",
    "method",
    "c",
    "prior_odds",
    "log_bf",
    "p_dependent",
    "p_independent",
    "delta_star",
    "truncated",
    "levels",
];

fn test_csv_fields(r: &TestResult) -> Vec<String> {
    vec![
        r.n.to_string(),
        r.method.as_str().into(),
        format_g17(r.c),
        format_g17(r.prior_odds),
        format_g17(r.log_bf),
        format_g17(r.p_dependent),
        format_g17(r.p_independent()),
        r.delta_star.map(format_g17).unwrap_or_default(),
        r.truncated.to_string(),
        r.level_contributions
            .iter()
            .map(|&b| format_g17(b))
            .collect::<Vec<_>>()
            .join(";"),
    ]
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Single test result. CSV columns: `n, method, c, prior_odds, log_bf,
/// p_dependent, p_independent, delta_star, truncated, levels` with the
/// levels joined by `;`.
pub fn render_test_result(r: &TestResult, format: Format) -> Result<String> {
    match format {
        Format::Json => test_result_json(r),
        Format::Csv => {
            check_level_sum(r)?;
            csv_string(&TEST_CSV_HEADER, [test_csv_fields(r)])
        }
    }
}

#[derive(Serialize)]
struct PairJson<'a> {
    var_a: &'a str,
    var_b: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<ResultJson<'static>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<&'a str>,
}

/// Pairwise scan. CSV columns: `var_a, var_b, status` followed by the single
/// test columns (empty for skipped pairs) and `reason`.
pub fn render_scan(pairs: &[PairOutcome], format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let rows = pairs
                .iter()
                .map(|p| {
                    Ok(PairJson {
                        var_a: &p.var_a,
                        var_b: &p.var_b,
                        result: p.result().map(result_json).transpose()?,
                        skipped: p.outcome.as_ref().err().map(String::as_str),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            to_json_string(&rows)
        }
        Format::Csv => {
            let mut header = vec!["var_a", "var_b", "status"];
            header.extend(TEST_CSV_HEADER);
            header.push("reason");
            let rows = pairs
                .iter()
                .map(|p| {
                    let mut row = vec![p.var_a.clone(), p.var_b.clone()];
                    match &p.outcome {
                        Ok(r) => {
                            check_level_sum(r)?;
                            row.push("ok".into());
                            row.extend(test_csv_fields(r));
                            row.push(String::new());
                        }
                        Err(reason) => {
                            row.push("skipped".into());
                            row.extend(std::iter::repeat_n(String::new(), TEST_CSV_HEADER.len()));
                            row.push(reason.clone());
                        }
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            csv_string(&header, rows)
        }
    }
}

#[derive(Serialize)]
struct EdgeJson<'a> {
    var_a: &'a str,
    var_b: &'a str,
    #[serde(rename = "p_dep_A")]
    p_dep_a: Num,
    #[serde(rename = "p_dep_B")]
    p_dep_b: Num,
    p_diff: Num,
    class: &'static str,
}

#[derive(Serialize)]
struct SkippedJson<'a> {
    var_a: &'a str,
    var_b: &'a str,
    reason: &'a str,
}

#[derive(Serialize)]
struct DiffJson<'a> {
    edges: Vec<EdgeJson<'a>>,
    skipped: Vec<SkippedJson<'a>>,
}

/// Differential scan. CSV columns: `var_a, var_b, p_dep_A, p_dep_B, p_diff,
/// class`; skipped pairs appear only in JSON.
pub fn render_diff(d: &DiffScan, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json_string(&DiffJson {
            edges: d
                .edges
                .iter()
                .map(|e| EdgeJson {
                    var_a: &e.var_a,
                    var_b: &e.var_b,
                    p_dep_a: Num(e.p_dep_a),
                    p_dep_b: Num(e.p_dep_b),
                    p_diff: Num(e.p_diff),
                    class: e.class.as_str(),
                })
                .collect(),
            skipped: d
                .skipped
                .iter()
                .map(|s| SkippedJson {
                    var_a: &s.var_a,
                    var_b: &s.var_b,
                    reason: &s.reason,
                })
                .collect(),
        }),
        Format::Csv => csv_string(
            &["var_a", "var_b", "p_dep_A", "p_dep_B", "p_diff", "class"],
            d.edges.iter().map(|e| {
                vec![
                    e.var_a.clone(),
                    e.var_b.clone(),
                    format_g17(e.p_dep_a),
                    format_g17(e.p_dep_b),
                    format_g17(e.p_diff),
                    e.class.as_str().into(),
                ]
            }),
        ),
    }
}

#[derive(Serialize)]
struct PercentilesJson {
    p5: Num,
    p25: Num,
    p50: Num,
    p75: Num,
    p95: Num,
}

impl From<&Percentiles> for PercentilesJson {
    fn from(p: &Percentiles) -> Self {
        Self {
            p5: Num(p.p5),
            p25: Num(p.p25),
            p50: Num(p.p50),
            p75: Num(p.p75),
            p95: Num(p.p95),
        }
    }
}

#[derive(Serialize)]
struct LevelPercentilesJson {
    k: usize,
    #[serde(flatten)]
    percentiles: PercentilesJson,
}

#[derive(Serialize)]
struct SummaryJson {
    model: &'static str,
    n: usize,
    sigma: Num,
    reps: usize,
    p_dependent: PercentilesJson,
    levels: Vec<LevelPercentilesJson>,
}

fn percentile_fields(p: &Percentiles) -> [String; 5] {
    [p.p5, p.p25, p.p50, p.p75, p.p95].map(format_g17)
}

/// Replicate summary. CSV is tidy: one row per quantity (`p_dependent` or
/// `B_k`) with columns `model, n, sigma, reps, quantity, p5, p25, p50, p75,
/// p95`.
pub fn render_summaries(summaries: &[ReplicateSummary], format: Format) -> Result<String> {
    match format {
        Format::Json => to_json_string(
            &summaries
                .iter()
                .map(|s| SummaryJson {
                    model: s.model.kind.as_str(),
                    n: s.n,
                    sigma: Num(s.model.sigma),
                    reps: s.reps,
                    p_dependent: (&s.p_dependent).into(),
                    levels: s
                        .levels
                        .iter()
                        .enumerate()
                        .map(|(i, p)| LevelPercentilesJson {
                            k: i + 1,
                            percentiles: p.into(),
                        })
                        .collect(),
                })
                .collect::<Vec<_>>(),
        ),
        Format::Csv => {
            let mut rows = Vec::new();
            for s in summaries {
                let lead = vec![
                    s.model.kind.as_str().to_string(),
                    s.n.to_string(),
                    format_g17(s.model.sigma),
                    s.reps.to_string(),
                ];
                let mut row = lead.clone();
                row.push("p_dependent".into());
                row.extend(percentile_fields(&s.p_dependent));
                rows.push(row);
                for (i, p) in s.levels.iter().enumerate() {
                    let mut row = lead.clone();
                    row.push(format!("B_{}", i + 1));
                    row.extend(percentile_fields(p));
                    rows.push(row);
                }
            }
            csv_string(
                &[
                    "model", "n", "sigma", "reps", "quantity", "p5", "p25", "p50", "p75", "p95",
                ],
                rows,
            )
        }
    }
}

#[derive(Serialize)]
struct PowerJson<'a> {
    model: &'static str,
    n: usize,
    sigma: Num,
    reps: usize,
    method: &'a str,
    tpr: Num,
    fpr: Num,
    threshold: Num,
    fpr_threshold: Num,
    threshold_source: crate::simgen::ThresholdSource,
}

/// Power reports. CSV columns: `model, n, sigma, reps, method, tpr, fpr,
/// threshold, fpr_threshold, threshold_source`.
pub fn render_power(reports: &[PowerReport], format: Format) -> Result<String> {
    let source = |r: &PowerReport| match r.threshold_source {
        crate::simgen::ThresholdSource::Posterior => "posterior",
        crate::simgen::ThresholdSource::Permutation => "permutation",
    };
    match format {
        Format::Json => to_json_string(
            &reports
                .iter()
                .map(|r| PowerJson {
                    model: r.model.as_str(),
                    n: r.n,
                    sigma: Num(r.sigma),
                    reps: r.reps,
                    method: &r.method,
                    tpr: Num(r.tpr),
                    fpr: Num(r.fpr),
                    threshold: Num(r.threshold),
                    fpr_threshold: Num(r.fpr_threshold),
                    threshold_source: r.threshold_source,
                })
                .collect::<Vec<_>>(),
        ),
        Format::Csv => csv_string(
            &[
                "model",
                "n",
                "sigma",
                "reps",
                "method",
                "tpr",
                "fpr",
                "threshold",
                "fpr_threshold",
                "threshold_source",
            ],
            reports.iter().map(|r| {
                vec![
                    r.model.as_str().into(),
                    r.n.to_string(),
                    format_g17(r.sigma),
                    r.reps.to_string(),
                    r.method.clone(),
                    format_g17(r.tpr),
                    format_g17(r.fpr),
                    format_g17(r.threshold),
                    format_g17(r.fpr_threshold),
                    source(r).into(),
                ]
            }),
        ),
    }
}

/// One row of a sensitivity sweep over the concentration constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub c: f64,
    pub label: String,
    pub n: usize,
    pub p_dependent: Percentiles,
}

#[derive(Serialize)]
struct SweepJson<'a> {
    c: Num,
    label: &'a str,
    n: usize,
    p_dependent: PercentilesJson,
}

/// Sweep table. CSV columns: `c, label, n, p5, p25, p50, p75, p95`.
pub fn render_sweep(rows: &[SweepRow], format: Format) -> Result<String> {
    match format {
        Format::Json => to_json_string(
            &rows
                .iter()
                .map(|r| SweepJson {
                    c: Num(r.c),
                    label: &r.label,
                    n: r.n,
                    p_dependent: (&r.p_dependent).into(),
                })
                .collect::<Vec<_>>(),
        ),
        Format::Csv => csv_string(
            &["c", "label", "n", "p5", "p25", "p50", "p75", "p95"],
            rows.iter().map(|r| {
                let mut row = vec![format_g17(r.c), r.label.clone(), r.n.to_string()];
                row.extend(percentile_fields(&r.p_dependent));
                row
            }),
        ),
    }
}

/// Write `contents` to `path`, or to stdout when `path` is `None`.
pub fn emit(contents: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(contents.as_bytes())?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(contents.as_bytes())?;
            lock.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_formatting() {
        assert_eq!(format_g17(0.5), "0.5");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(5.0), "5");
        assert_eq!(format_g17(-2.25), "-2.25");
        assert_eq!(format_g17(1e-5), "1.0000000000000001e-5");
        assert_eq!(format_g17(1e20), "1e20");
        assert_eq!(format_g17(123456.0), "123456");
        assert_eq!(format_g17(0.0001), "0.0001");
        assert_eq!(format_g17(f64::NAN), "null");
        assert_eq!(format_g17(-0.0), "0");
    }

    #[test]
    fn g17_round_trips() {
        for &x in &[
            std::f64::consts::PI,
            -1.0 / 3.0,
            6.02214076e23,
            1.7976931348623157e308,
            5e-324,
            2.2250738585072014e-308,
            123_456_789.123_456_79,
            0.95,
        ] {
            let s = format_g17(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn parses_small_matrix() {
        let t = parse_table("a,b\n1,2\n3,4\n5,6\n7,8\n9,10\n".as_bytes()).unwrap();
        assert_eq!(t.names, vec!["a", "b"]);
        assert_eq!(t.n_rows(), 5);
        let m = t.into_matrix().unwrap();
        assert_eq!(m.n_samples(), 5);
        assert_eq!(m.column(1)[4], 10.0);
    }

    #[test]
    fn header_only_is_empty() {
        assert!(matches!(
            parse_table("a,b\n".as_bytes()),
            Err(Error::EmptyMatrix)
        ));
        assert!(matches!(
            parse_table("".as_bytes()),
            Err(Error::EmptyMatrix)
        ));
    }

    #[test]
    fn nan_rejected_with_location() {
        let err = parse_table("a,b\n1,2\n3,NaN\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_garbage_cells_rejected() {
        assert!(matches!(
            parse_table("a,b\n1,\n".as_bytes()),
            Err(Error::Parse {
                line: 2,
                column: 2,
                ..
            })
        ));
        assert!(matches!(
            parse_table("a,b\nx,1\n".as_bytes()),
            Err(Error::Parse {
                line: 2,
                column: 1,
                ..
            })
        ));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matches!(
            parse_table("a,b\n1,2\n3\n".as_bytes()),
            Err(Error::RaggedRows {
                line: 3,
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn column_lookup() {
        let t = parse_table("alpha,beta\n1,2\n".as_bytes()).unwrap();
        assert_eq!(t.column_index("beta").unwrap(), 1);
        assert_eq!(t.column_index("0").unwrap(), 0);
        assert!(t.column_index("2").is_err());
        assert!(t.column_index("gamma").is_err());
    }
}

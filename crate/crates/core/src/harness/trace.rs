//! Run traces, their CSV form and the scalar summary derived from them.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// One row of a run trace.
///
/// Scheduler invocations carry `u_hat` and `eta`; control-job completions
/// leave them empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Seconds.
    pub time: f64,
    /// Period in force for every non-scheduler task, in task order.
    pub periods: Vec<f64>,
    pub u_hat: Option<f64>,
    pub eta: Option<f64>,
    pub actual: (f64, f64),
    pub reference: (f64, f64),
    pub error: f64,
    /// Cumulative deadline misses per non-scheduler task.
    pub misses: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub task_names: Vec<String>,
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace has no records")]
    Empty,
    #[error("trace line {line}: {msg}")]
    Format { line: u64, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl TraceError {
    fn io(path: &Path, source: io::Error) -> Self {
        TraceError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// Time-weighted mean of the tracking error, metres.
    pub mean_tracking_error: f64,
    pub max_tracking_error: f64,
    /// Time-weighted mean of the measured utilization over the run.
    pub mean_u_hat: Option<f64>,
    /// Same, restricted to the last second of the run.
    pub mean_u_hat_final_second: Option<f64>,
    pub eta_min: Option<f64>,
    pub eta_max: Option<f64>,
    /// Total deadline misses per non-scheduler task.
    pub misses: Vec<(String, u64)>,
    /// Not derived from the trace and not compared by equality checks.
    pub wall_clock_s: Option<f64>,
}

impl RunSummary {
    pub fn misses_of(&self, task: &str) -> Option<u64> {
        self.misses.iter().find(|(n, _)| n == task).map(|m| m.1)
    }

    /// Equality on everything the trace determines.
    pub fn same_outcome(&self, other: &RunSummary) -> bool {
        RunSummary {
            wall_clock_s: None,
            ..self.clone()
        } == RunSummary {
            wall_clock_s: None,
            ..other.clone()
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |v| v.to_string());
        let _ = writeln!(out, "mean_tracking_error_m = {}", self.mean_tracking_error);
        let _ = writeln!(out, "max_tracking_error_m = {}", self.max_tracking_error);
        let _ = writeln!(out, "mean_u_hat = {}", opt(self.mean_u_hat));
        let _ = writeln!(
            out,
            "mean_u_hat_final_second = {}",
            opt(self.mean_u_hat_final_second)
        );
        let _ = writeln!(out, "eta_min = {}", opt(self.eta_min));
        let _ = writeln!(out, "eta_max = {}", opt(self.eta_max));
        for (name, m) in &self.misses {
            let _ = writeln!(out, "deadline_misses_{name} = {m}");
        }
        if let Some(w) = self.wall_clock_s {
            let _ = writeln!(out, "wall_clock_s = {w:.3}");
        }
        out
    }
}

/// Mean of a piecewise-constant signal held forward from each sample, over
/// `[from, to]`.
fn held_mean(samples: &[(f64, f64)], from: f64, to: f64) -> Option<f64> {
    if samples.is_empty() || !(to > from) {
        return None;
    }
    let mut area = 0.0;
    let mut covered = 0.0;
    for (i, &(t, v)) in samples.iter().enumerate() {
        let next = samples.get(i + 1).map_or(to, |s| s.0);
        let a = t.max(from);
        let b = next.min(to);
        if b > a {
            area += v * (b - a);
            covered += b - a;
        }
    }
    (covered > 0.0).then(|| area / covered)
}

/// Derives the run summary from a trace. Each value is held forward from its
/// record until the next one, and means are weighted by that holding time up
/// to the last record.
pub fn summarize(trace: &Trace) -> Result<RunSummary, TraceError> {
    let recs = &trace.records;
    let (Some(first), Some(last)) = (recs.first(), recs.last()) else {
        return Err(TraceError::Empty);
    };
    let horizon = last.time;
    let errors: Vec<(f64, f64)> = recs.iter().map(|r| (r.time, r.error)).collect();
    let mean_tracking_error = held_mean(&errors, first.time, horizon).unwrap_or(last.error);
    let max_tracking_error = errors.iter().map(|e| e.1).fold(0.0, f64::max);

    let u: Vec<(f64, f64)> = recs
        .iter()
        .filter_map(|r| r.u_hat.map(|u| (r.time, u)))
        .collect();
    let mean_u_hat = u.first().and_then(|f| held_mean(&u, f.0, horizon));
    let final_from = (horizon - 1.0).max(0.0);
    let mean_u_hat_final_second = {
        // Start from the last sample at or before the final second, if any.
        let first = u.iter().rposition(|s| s.0 <= final_from).unwrap_or(0);
        let tail = &u[first.min(u.len())..];
        tail.first()
            .and_then(|f| held_mean(tail, f.0.max(final_from), horizon))
    };

    let etas = recs.iter().filter_map(|r| r.eta);
    let eta_min = etas.clone().reduce(f64::min);
    let eta_max = etas.reduce(f64::max);

    let misses = trace
        .task_names
        .iter()
        .cloned()
        .zip(last.misses.iter().copied())
        .collect();

    Ok(RunSummary {
        mean_tracking_error,
        max_tracking_error,
        mean_u_hat,
        mean_u_hat_final_second,
        eta_min,
        eta_max,
        misses,
        wall_clock_s: None,
    })
}

const FIXED_COLUMNS: [&str; 7] = [
    "u_hat",
    "eta",
    "x_act",
    "y_act",
    "x_ref",
    "y_ref",
    "track_err",
];

pub fn csv_header(task_names: &[String]) -> Vec<String> {
    let mut h = vec!["time_s".to_string()];
    h.extend(task_names.iter().map(|n| format!("h_{n}")));
    h.extend(FIXED_COLUMNS.iter().map(|s| s.to_string()));
    h.extend(task_names.iter().map(|n| format!("miss_{n}")));
    h
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Writes the trace as CSV. Floats use the shortest representation that
/// reads back to the same value, so a write/read cycle is lossless.
pub fn write_trace_csv<W: io::Write>(trace: &Trace, out: W) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(&trace.task_names))?;
    let n = trace.task_names.len();
    for (i, r) in trace.records.iter().enumerate() {
        if r.periods.len() != n || r.misses.len() != n {
            return Err(TraceError::Format {
                line: i as u64 + 2,
                msg: format!(
                    "record has {} periods and {} miss counts for {n} tasks",
                    r.periods.len(),
                    r.misses.len()
                ),
            });
        }
        let mut row = Vec::with_capacity(2 * n + 8);
        row.push(r.time.to_string());
        row.extend(r.periods.iter().map(f64::to_string));
        row.push(fmt_opt(r.u_hat));
        row.push(fmt_opt(r.eta));
        for v in [
            r.actual.0,
            r.actual.1,
            r.reference.0,
            r.reference.1,
            r.error,
        ] {
            row.push(v.to_string());
        }
        row.extend(r.misses.iter().map(u64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn trace_to_csv_string(trace: &Trace) -> Result<String, TraceError> {
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is ascii"))
}

/// Reads a trace written by [`write_trace_csv`].
pub fn read_trace_csv<R: io::Read>(input: R) -> Result<Trace, TraceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let bad_header = |msg: &str| TraceError::Format {
        line: 1,
        msg: msg.to_string(),
    };
    if cols.len() < 1 + FIXED_COLUMNS.len()
        || !(cols.len() - 1 - FIXED_COLUMNS.len()).is_multiple_of(2)
    {
        return Err(bad_header("unexpected number of columns"));
    }
    let n = (cols.len() - 1 - FIXED_COLUMNS.len()) / 2;
    if cols[0] != "time_s" {
        return Err(bad_header("first column must be time_s"));
    }
    let mut task_names = Vec::with_capacity(n);
    for c in &cols[1..=n] {
        let name = c
            .strip_prefix("h_")
            .filter(|s| !s.is_empty())
            .ok_or_else(|| bad_header(&format!("expected a period column, found `{c}`")))?;
        task_names.push(name.to_string());
    }
    if cols[1 + n..1 + n + FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(bad_header("fixed columns are missing or out of order"));
    }
    for (c, name) in cols[1 + n + FIXED_COLUMNS.len()..].iter().zip(&task_names) {
        if c.strip_prefix("miss_") != Some(name.as_str()) {
            return Err(bad_header(&format!("expected miss_{name}, found `{c}`")));
        }
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| match e.position() {
            Some(p) => TraceError::Format {
                line: p.line(),
                msg: e.to_string(),
            },
            None => e.into(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let err = |msg: String| TraceError::Format { line, msg };
        let f = |i: usize| -> Result<f64, TraceError> {
            let s = &row[i];
            s.parse::<f64>()
                .map_err(|_| err(format!("column {}: `{s}` is not a number", cols[i])))
        };
        let opt = |i: usize| -> Result<Option<f64>, TraceError> {
            if row[i].is_empty() {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        let time = f(0)?;
        let periods = (1..=n).map(f).collect::<Result<Vec<_>, _>>()?;
        let base = 1 + n;
        let u_hat = opt(base)?;
        let eta = opt(base + 1)?;
        let actual = (f(base + 2)?, f(base + 3)?);
        let reference = (f(base + 4)?, f(base + 5)?);
        let error = f(base + 6)?;
        let misses = (base + 7..base + 7 + n)
            .map(|i| {
                let s = &row[i];
                s.parse::<u64>()
                    .map_err(|_| err(format!("column {}: `{s}` is not a count", cols[i])))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(prev) = records.last().map(|r: &TraceRecord| r.time) {
            if time < prev {
                return Err(err(format!("time {time} goes backwards from {prev}")));
            }
        }
        records.push(TraceRecord {
            time,
            periods,
            u_hat,
            eta,
            actual,
            reference,
            error,
            misses,
        });
    }
    Ok(Trace {
        task_names,
        records,
    })
}

/// Writes `trace.csv`, `summary.txt` and, when given, `table_diff.txt` into
/// `dir`, creating it if needed.
pub fn emit_traces(
    trace: &Trace,
    summary: &RunSummary,
    table_diff: Option<&str>,
    dir: &Path,
) -> Result<(), TraceError> {
    fs::create_dir_all(dir).map_err(|e| TraceError::io(dir, e))?;
    let csv_path = dir.join("trace.csv");
    let file = fs::File::create(&csv_path).map_err(|e| TraceError::io(&csv_path, e))?;
    write_trace_csv(trace, io::BufWriter::new(file))?;
    let summary_path = dir.join("summary.txt");
    fs::write(&summary_path, summary.to_text()).map_err(|e| TraceError::io(&summary_path, e))?;
    if let Some(diff) = table_diff {
        let path = dir.join("table_diff.txt");
        fs::write(&path, diff).map_err(|e| TraceError::io(&path, e))?;
    }
    Ok(())
}

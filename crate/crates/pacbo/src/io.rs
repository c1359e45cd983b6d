//! On-disk formats.
//!
//! | file | format | columns / contents |
//! |------|--------|--------------------|
//! | `run.jsonl` | JSON lines | one `StepRecord` per time step |
//! | `final.json` | JSON | prediction after the last observation and its chain trace |
//! | `summary.csv` | CSV | `t,k,loss,cumulative_loss,wall_time_secs` |
//! | `trace.csv` | CSV | `t,n,k_current,k_proposed,alpha,accepted` |
//! | `stream.csv` | CSV | `t,x_1,...,x_d[,k_true]` |
//! | `regret.csv` | CSV | `t,ecl,ocl,regret,bound_cor3,k_true,k_mode` |
//! | `table1.csv` | CSV | `rep,seed,correct_k` |
//! | `table1_summary.csv` | CSV | `reps,mean,sd` (`sd` empty for one repetition) |

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use pacbo_core::datagen::Stream;
use pacbo_core::metrics::RegretReport;
use pacbo_core::rjmcmc::ChainTrace;
use pacbo_core::{Centers, StepRecord};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, IoContext, Result};

pub const RUN_JSONL: &str = "run.jsonl";
pub const FINAL_JSON: &str = "final.json";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const TRACE_CSV: &str = "trace.csv";
pub const STREAM_CSV: &str = "stream.csv";
pub const REGRET_CSV: &str = "regret.csv";
pub const TABLE1_CSV: &str = "table1.csv";
pub const TABLE1_SUMMARY_CSV: &str = "table1_summary.csv";

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).at(path)?;
    serde_json::from_str(&text).at(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).at(path)?);
    serde_json::to_writer_pretty(&mut w, value).at(path)?;
    writeln!(w).at(path)?;
    w.flush().at(path)
}

/// An output directory that refuses to clobber existing files unless asked to.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
    overwrite: bool,
}

impl OutputDir {
    pub fn new(root: impl Into<PathBuf>, overwrite: bool) -> Self {
        OutputDir { root: root.into(), overwrite }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Creates the directory and checks that none of `files` exists yet (unless overwriting).
    pub fn prepare(&self, files: &[&str]) -> Result<()> {
        if !self.overwrite {
            for f in files {
                let path = self.root.join(f);
                if path.exists() {
                    return Err(AppError::OutputExists(path));
                }
            }
        }
        fs::create_dir_all(&self.root).at(&self.root)
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalPrediction {
    pub t: usize,
    pub centers: Centers,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<ChainTrace>,
}

pub fn write_run_jsonl(path: &Path, steps: &[StepRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).at(path)?);
    for s in steps {
        serde_json::to_writer(&mut w, s).at(path)?;
        writeln!(w).at(path)?;
    }
    w.flush().at(path)
}

pub fn read_run_jsonl(path: &Path) -> Result<Vec<StepRecord>> {
    let reader = BufReader::new(File::open(path).at(path)?);
    let mut steps = Vec::new();
    for line in reader.lines() {
        let line = line.at(path)?;
        if line.trim().is_empty() {
            continue;
        }
        steps.push(serde_json::from_str(&line).at(path)?);
    }
    Ok(steps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub t: usize,
    pub k: usize,
    pub loss: f64,
    pub cumulative_loss: f64,
    pub wall_time_secs: Option<f64>,
}

pub fn write_run_summary_csv(path: &Path, steps: &[StepRecord]) -> Result<()> {
    write_rows(
        path,
        steps.iter().map(|s| SummaryRow {
            t: s.t,
            k: s.k,
            loss: s.loss,
            cumulative_loss: s.cumulative_loss,
            wall_time_secs: s.wall_time_secs,
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub n: usize,
    pub k_current: usize,
    pub k_proposed: usize,
    pub alpha: f64,
    pub accepted: bool,
}

/// `t` is the number of observations the chain was conditioned on.
pub fn write_trace_csv(path: &Path, t: usize, trace: &ChainTrace) -> Result<()> {
    write_rows(
        path,
        trace.entries.iter().map(|e| TraceRow {
            t,
            n: e.n,
            k_current: e.k_current,
            k_proposed: e.k_proposed,
            alpha: e.alpha,
            accepted: e.accepted,
        }),
    )
}

pub fn write_regret_csv(path: &Path, report: &RegretReport) -> Result<()> {
    write_rows(path, report.rows.iter().copied())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub rep: usize,
    pub seed: u64,
    pub correct_k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Summary {
    pub reps: usize,
    pub mean: f64,
    pub sd: Option<f64>,
}

pub fn write_rows<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).at(path)?;
    for row in rows {
        w.serialize(row).at(path)?;
    }
    w.flush().at(path)
}

pub fn read_rows<S: DeserializeOwned>(path: &Path) -> Result<Vec<S>> {
    let mut r = csv::Reader::from_path(path).at(path)?;
    r.deserialize().collect::<std::result::Result<_, _>>().at(path)
}

/// Writes `t,x_1..x_d[,k_true]`.
pub fn write_stream_csv(path: &Path, stream: &Stream) -> Result<()> {
    let mut w = csv::Writer::from_path(path).at(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=stream.d).map(|i| format!("x_{i}")));
    if stream.k_true.is_some() {
        header.push("k_true".into());
    }
    w.write_record(&header).at(path)?;
    for t in 1..=stream.len() {
        let mut rec = vec![t.to_string()];
        rec.extend(stream.observation(t).iter().map(|v| v.to_string()));
        if let Some(k) = &stream.k_true {
            rec.push(k[t - 1].to_string());
        }
        w.write_record(&rec).at(path)?;
    }
    w.flush().at(path)
}

/// Reads a stream written by [`write_stream_csv`]. The `t` and `k_true`
/// columns are optional; every `x_*` column is a coordinate.
pub fn read_stream_csv(path: &Path) -> Result<Stream> {
    let mut r = csv::Reader::from_path(path).at(path)?;
    let header = r.headers().at(path)?.clone();
    let coords: Vec<usize> = header.iter().enumerate().filter(|(_, h)| h.starts_with("x_")).map(|(i, _)| i).collect();
    if coords.is_empty() {
        return Err(AppError::Input(format!("{}: no x_* columns", path.display())));
    }
    let k_col = header.iter().position(|h| h == "k_true");
    let mut data = Vec::new();
    let mut k_true = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.at(path)?;
        let parse = |i: usize| -> Result<f64> {
            let v: f64 = rec[i]
                .trim()
                .parse()
                .map_err(|_| AppError::Input(format!("{}: row {}: bad number {:?}", path.display(), line + 1, &rec[i])))?;
            if !v.is_finite() {
                return Err(AppError::Input(format!("{}: row {}: non-finite value", path.display(), line + 1)));
            }
            Ok(v)
        };
        for &i in &coords {
            data.push(parse(i)?);
        }
        if let Some(i) = k_col {
            let k = rec[i]
                .trim()
                .parse()
                .map_err(|_| AppError::Input(format!("{}: row {}: bad k_true", path.display(), line + 1)))?;
            k_true.push(k);
        }
    }
    Ok(Stream { d: coords.len(), data, k_true: k_col.map(|_| k_true) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = Stream { d: 2, data: vec![0.1, -2.5, 1e-300, 3.0], k_true: Some(vec![1, 2]) };
        write_stream_csv(&path, &s).unwrap();
        assert_eq!(read_stream_csv(&path).unwrap(), s);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,x_1,x_2,k_true\n"));
    }

    #[test]
    fn refuses_to_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::new(dir.path().join("o"), false);
        out.prepare(&["a.csv"]).unwrap();
        std::fs::write(out.path("a.csv"), "x").unwrap();
        assert!(matches!(out.prepare(&["a.csv"]), Err(AppError::OutputExists(_))));
        OutputDir::new(dir.path().join("o"), true).prepare(&["a.csv"]).unwrap();
    }

    #[test]
    fn bad_numbers_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "t,x_1\n1,abc\n").unwrap();
        assert!(matches!(read_stream_csv(&path), Err(AppError::Input(_))));
        std::fs::write(&path, "t,y\n1,2\n").unwrap();
        assert!(read_stream_csv(&path).is_err());
    }
}

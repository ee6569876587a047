use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::registry::CheckTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Identity, oracle or explicit-constant bound satisfied.
    Pass,
    /// Measurement against an empirical or unknown constant.
    Info,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Info => "info",
            Verdict::Fail => "fail",
        }
    }

    pub fn check(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub tag: CheckTag,
    pub fixture: String,
    pub value: f64,
    /// Bound, tolerance or oracle value `value` is compared against.
    pub bound: f64,
    pub verdict: Verdict,
}

impl CheckRecord {
    /// `value ≤ bound` as pass/fail.
    pub fn at_most(tag: CheckTag, fixture: impl Into<String>, value: f64, bound: f64) -> Self {
        CheckRecord {
            tag,
            fixture: fixture.into(),
            value,
            bound,
            verdict: Verdict::check(value <= bound),
        }
    }

    pub fn info(tag: CheckTag, fixture: impl Into<String>, value: f64, bound: f64) -> Self {
        CheckRecord {
            tag,
            fixture: fixture.into(),
            value,
            bound,
            verdict: Verdict::Info,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    /// `(lambda, eta)`.
    Ssf,
    /// `(fixture, abs_trace, bound)`.
    BoundMargin,
    /// `(x, abs_eta, envelope)`.
    Growth,
    /// `(x, phi)`.
    Bump,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 4] = [
        SeriesKind::Ssf,
        SeriesKind::BoundMargin,
        SeriesKind::Growth,
        SeriesKind::Bump,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SeriesKind::Ssf => "ssf",
            SeriesKind::BoundMargin => "bound-margin",
            SeriesKind::Growth => "growth",
            SeriesKind::Bump => "bump",
        }
    }

    pub fn headers(self) -> &'static [&'static str] {
        match self {
            SeriesKind::Ssf => &["lambda", "eta"],
            SeriesKind::BoundMargin => &["fixture", "abs_trace", "bound"],
            SeriesKind::Growth => &["x", "abs_eta", "envelope"],
            SeriesKind::Bump => &["x", "phi"],
        }
    }

    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        SeriesKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| HarnessError::Lookup(format!("unknown series kind `{s}`")))
    }
}

/// Plot rows: a label column (fixture id) where the kind has one, then
/// numbers.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Series {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub info: usize,
    pub fail: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub task: String,
    pub seed: u64,
    pub records: Vec<CheckRecord>,
    /// Running suprema of the empirical constants used, by key.
    pub constants: Vec<(String, f64)>,
    pub series: BTreeMap<SeriesKind, Series>,
}

impl VerificationReport {
    pub fn new(task: &str, seed: u64) -> Self {
        VerificationReport {
            task: task.to_string(),
            seed,
            records: Vec::new(),
            constants: Vec::new(),
            series: BTreeMap::new(),
        }
    }

    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        for r in &self.records {
            match r.verdict {
                Verdict::Pass => s.pass += 1,
                Verdict::Info => s.info += 1,
                Verdict::Fail => s.fail += 1,
            }
        }
        s
    }

    pub fn passed(&self) -> bool {
        self.summary().fail == 0
    }

    pub fn records_with(&self, tag: CheckTag) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(move |r| r.tag == tag)
    }

    /// Body of the records CSV.
    pub fn records_csv(&self) -> Result<Vec<u8>, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["tag", "fixture", "value", "bound", "verdict"])
            .map_err(HarnessError::io)?;
        for r in &self.records {
            w.write_record([
                r.tag.as_str(),
                &r.fixture,
                &num(r.value),
                &num(r.bound),
                r.verdict.as_str(),
            ])
            .map_err(HarnessError::io)?;
        }
        w.into_inner().map_err(HarnessError::io)
    }

    pub fn constants_csv(&self) -> Result<Vec<u8>, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["key", "sup"]).map_err(HarnessError::io)?;
        for (k, v) in &self.constants {
            w.write_record([k.as_str(), &num(*v)])
                .map_err(HarnessError::io)?;
        }
        w.into_inner().map_err(HarnessError::io)
    }
}

/// Fixed-width scientific notation so identical runs give identical bytes.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let name = path
        .file_name()
        .ok_or_else(|| HarnessError::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let mut f =
        fs::File::create(&tmp).map_err(|e| HarnessError::Io(format!("{}: {e}", tmp.display())))?;
    f.write_all(bytes)
        .and_then(|_| f.sync_all())
        .map_err(|e| HarnessError::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

/// Plain CSV of one series with its documented headers.
pub fn emit_plotdata(
    report: &VerificationReport,
    kind: SeriesKind,
    dir: &Path,
    stem: &str,
) -> Result<PathBuf, HarnessError> {
    let series = report.series.get(&kind).ok_or_else(|| {
        HarnessError::Lookup(format!(
            "report `{}` has no {} series",
            report.task,
            kind.as_str()
        ))
    })?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(kind.headers()).map_err(HarnessError::io)?;
    for (i, row) in series.rows.iter().enumerate() {
        let mut fields: Vec<String> = series.labels.get(i).cloned().into_iter().collect();
        fields.extend(row.iter().map(|x| num(*x)));
        w.write_record(&fields).map_err(HarnessError::io)?;
    }
    let path = dir.join(format!("{stem}-{}.csv", kind.as_str()));
    write_atomic(&path, &w.into_inner().map_err(HarnessError::io)?)?;
    Ok(path)
}

#[derive(Debug, Clone, Serialize)]
struct Sidecar {
    started_unix: f64,
    finished_unix: f64,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Files written for one report.
#[derive(Debug, Clone, PartialEq)]
pub struct WrittenFiles {
    pub records: PathBuf,
    pub constants: Option<PathBuf>,
    pub plots: Vec<PathBuf>,
    pub sidecar: PathBuf,
}

/// Writes `<stem>.csv`, `<stem>-constants.csv` when constants were used,
/// one plot file per series and `<stem>.meta.json` with the timestamps.
pub fn write_report(
    report: &VerificationReport,
    dir: &Path,
    stem: &str,
    started_unix: f64,
) -> Result<WrittenFiles, HarnessError> {
    let records = dir.join(format!("{stem}.csv"));
    write_atomic(&records, &report.records_csv()?)?;
    let constants = if report.constants.is_empty() {
        None
    } else {
        let p = dir.join(format!("{stem}-constants.csv"));
        write_atomic(&p, &report.constants_csv()?)?;
        Some(p)
    };
    let plots = report
        .series
        .keys()
        .map(|&k| emit_plotdata(report, k, dir, stem))
        .collect::<Result<_, _>>()?;
    let sidecar = dir.join(format!("{stem}.meta.json"));
    let meta = Sidecar {
        started_unix,
        finished_unix: unix_now(),
    };
    write_atomic(
        &sidecar,
        serde_json::to_string_pretty(&meta)
            .map_err(HarnessError::io)?
            .as_bytes(),
    )?;
    Ok(WrittenFiles {
        records,
        constants,
        plots,
        sidecar,
    })
}

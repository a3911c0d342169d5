//! JSON-lines result files, recovery measures and result audits.
//!
//! A result file holds one `{"kind": "entry", ...}` object per pattern and
//! ends with one `{"kind": "summary", "schema": 1, ...}` object.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::PlantedPattern;
use crate::discriminant::{DiscriminantGenotype, DiscriminantScores};
use crate::engine::{MinerConfig, PatternGenotype};
use crate::error::{Error, Result};
use crate::metrics::{Alignment, Interval, ScoreVector, Weights};
use crate::momoo::{self, ArchiveEntry, InclusionMode, Support};

pub const SCHEMA_VERSION: u32 = 1;

/// Minimum sensor Jaccard index and interval overlap ratio for a planted
/// pattern to count as recovered.
pub const RECOVERY_JACCARD: f64 = 0.5;
pub const RECOVERY_OVERLAP: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryRecord {
    pub center: usize,
    /// Center in the negative setting (discriminant runs only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_neg: Option<usize>,
    pub weights: Weights,
    pub t1: usize,
    pub t2: usize,
    pub radius: f64,
    pub length: usize,
    pub area: usize,
    pub alignment: Alignment,
    pub sensors: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<DiscriminantScores>,
}

impl EntryRecord {
    pub fn from_pattern(e: &ArchiveEntry<PatternGenotype>) -> Self {
        let g = &e.genotype;
        Self {
            center: g.center,
            center_neg: None,
            weights: g.weights,
            t1: g.interval.t1,
            t2: g.interval.t2,
            radius: g.radius,
            length: e.scores.length,
            area: e.scores.area,
            alignment: e.scores.alignment,
            sensors: e.support.sensors.clone(),
            settings: None,
        }
    }

    /// `scores` are the per-setting scores of the entry's genotype.
    pub fn from_discriminant(e: &ArchiveEntry<DiscriminantGenotype>, scores: DiscriminantScores) -> Self {
        let g = &e.genotype;
        Self {
            center: g.center_pos,
            center_neg: Some(g.center_neg),
            weights: g.weights,
            t1: g.interval.t1,
            t2: g.interval.t2,
            radius: g.radius,
            length: e.scores.length,
            area: e.scores.area,
            alignment: e.scores.alignment,
            sensors: e.support.sensors.clone(),
            settings: Some(scores),
        }
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.t1, self.t2)
    }

    pub fn scores(&self) -> ScoreVector {
        ScoreVector {
            length: self.length,
            area: self.area,
            alignment: self.alignment,
        }
    }

    pub fn support(&self) -> Support {
        Support::new(self.center, self.sensors.clone(), self.interval())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRecord {
    pub schema: u32,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Objective evaluations spent (miner runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<usize>,
    /// Admissible grid candidates scored (oracle runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
    pub entries: usize,
    pub config: MinerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

impl SummaryRecord {
    /// Summary with the current schema, the config's seed and no optional
    /// counters.
    pub fn new(command: &str, cfg: &MinerConfig, entries: usize) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command: command.into(),
            seed: Some(cfg.seed),
            evaluations: None,
            candidates: None,
            entries,
            config: cfg.clone(),
            wall_seconds: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Entry(EntryRecord),
    Summary(SummaryRecord),
}

/// A parsed result file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub entries: Vec<EntryRecord>,
    pub summary: SummaryRecord,
}

impl RunReport {
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(&Line::Entry(e.clone()))?);
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&Line::Summary(self.summary.clone()))?);
        out.push('\n');
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut summary = None;
        for (k, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            if summary.is_some() {
                return Err(Error::Schema(format!("line {}: content after the summary line", k + 1)));
            }
            let line: Line =
                serde_json::from_str(raw).map_err(|e| Error::Schema(format!("line {}: {e}", k + 1)))?;
            match line {
                Line::Entry(e) => entries.push(e),
                Line::Summary(s) => {
                    if s.schema != SCHEMA_VERSION {
                        return Err(Error::Schema(format!(
                            "schema version {} is not supported (expected {SCHEMA_VERSION})",
                            s.schema
                        )));
                    }
                    summary = Some(s);
                }
            }
        }
        let summary = summary.ok_or_else(|| Error::Schema("missing summary line".into()))?;
        if summary.entries != entries.len() {
            return Err(Error::Schema(format!(
                "summary announces {} entries, file has {}",
                summary.entries,
                entries.len()
            )));
        }
        Ok(Self { entries, summary })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// `|A ∩ B| / |A ∪ B|`; 1 for two empty sets.
pub fn jaccard(a: &[usize], b: &BTreeSet<usize>) -> f64 {
    let a: BTreeSet<usize> = a.iter().copied().collect();
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Shared duration over joint duration, with lengths `t2 - t1`.
pub fn interval_overlap_ratio(a: Interval, b: Interval) -> f64 {
    let shared = a.overlap(&b);
    let joint = a.len() + b.len() - shared;
    if joint == 0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    shared as f64 / joint as f64
}

pub fn is_recovered(entries: &[EntryRecord], truth: &PlantedPattern) -> bool {
    entries.iter().any(|e| {
        jaccard(&e.sensors, &truth.sensor_ids) >= RECOVERY_JACCARD
            && interval_overlap_ratio(e.interval(), truth.interval) >= RECOVERY_OVERLAP
    })
}

/// For each entry, whether some reference entry p-mo-dominates it with
/// exact inclusion.
pub fn dominated_by(entries: &[EntryRecord], reference: &[EntryRecord], p: f64) -> Vec<bool> {
    let wrap = |e: &EntryRecord| ArchiveEntry {
        genotype: (),
        scores: e.scores(),
        support: e.support(),
    };
    let refs: Vec<ArchiveEntry<()>> = reference.iter().map(wrap).collect();
    entries
        .iter()
        .map(|e| {
            let y = wrap(e);
            refs.iter().any(|x| momoo::pmo_dominates(x, &y, p, InclusionMode::Exact))
        })
        .collect()
}

/// Per-entry comparison rows for the text table and CSV summary.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub index: usize,
    pub center: usize,
    pub t1: usize,
    pub t2: usize,
    pub length: usize,
    pub area: usize,
    pub alignment: Alignment,
    pub dominated_by_oracle: Option<bool>,
    /// Best Jaccard index against any planted pattern.
    pub jaccard: Option<f64>,
    pub overlap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ReportRow>,
    /// Recovery flag per planted pattern, when ground truth was given.
    pub recovered: Option<Vec<bool>>,
}

pub fn compare(run: &RunReport, oracle: Option<&RunReport>, truth: Option<&[PlantedPattern]>) -> Comparison {
    let audit = oracle.map(|o| dominated_by(&run.entries, &o.entries, run.summary.config.p));
    let rows = run
        .entries
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let best = truth.and_then(|t| {
                t.iter()
                    .map(|p| {
                        (
                            jaccard(&e.sensors, &p.sensor_ids),
                            interval_overlap_ratio(e.interval(), p.interval),
                        )
                    })
                    .max_by(|a, b| a.0.min(a.1).total_cmp(&b.0.min(b.1)))
            });
            ReportRow {
                index: k + 1,
                center: e.center,
                t1: e.t1,
                t2: e.t2,
                length: e.length,
                area: e.area,
                alignment: e.alignment,
                dominated_by_oracle: audit.as_ref().map(|a| a[k]),
                jaccard: best.map(|b| b.0),
                overlap: best.map(|b| b.1),
            }
        })
        .collect();
    Comparison {
        rows,
        recovered: truth.map(|t| t.iter().map(|p| is_recovered(&run.entries, p)).collect()),
    }
}

impl Comparison {
    fn has_audit(&self) -> bool {
        self.rows.iter().any(|r| r.dominated_by_oracle.is_some())
    }

    fn has_truth(&self) -> bool {
        self.recovered.is_some()
    }

    fn header(&self, audit: bool, truth: bool) -> Vec<&'static str> {
        let mut h = vec!["#", "center", "t1", "t2", "length", "area", "alignment"];
        if audit {
            h.push("dominated_by_oracle");
        }
        if truth {
            h.extend(["jaccard", "overlap"]);
        }
        h
    }

    fn cells(&self, r: &ReportRow, audit: bool, truth: bool) -> Vec<String> {
        let mut c = vec![
            r.index.to_string(),
            r.center.to_string(),
            r.t1.to_string(),
            r.t2.to_string(),
            r.length.to_string(),
            r.area.to_string(),
            r.alignment.value().map_or("undefined".into(), |v| format!("{v:.4}")),
        ];
        if audit {
            c.push(r.dominated_by_oracle.unwrap_or(false).to_string());
        }
        if truth {
            c.push(r.jaccard.map_or(String::new(), |v| format!("{v:.3}")));
            c.push(r.overlap.map_or(String::new(), |v| format!("{v:.3}")));
        }
        c
    }

    /// Column set depends on which inputs were given; `audit` and `truth`
    /// flags let an empty archive still print the full header.
    pub fn to_table(&self, audit: bool, truth: bool) -> String {
        let audit = audit || self.has_audit();
        let truth = truth || self.has_truth();
        let header = self.header(audit, truth);
        let body: Vec<Vec<String>> = self.rows.iter().map(|r| self.cells(r, audit, truth)).collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|k| body.iter().map(|row| row[k].len()).chain([header[k].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let line = |cells: Vec<String>, out: &mut String| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            out.push_str(padded.join("  ").trim_end());
            out.push('\n');
        };
        line(header.iter().map(|s| s.to_string()).collect(), &mut out);
        for row in body {
            line(row, &mut out);
        }
        if audit {
            let n = self.rows.iter().filter(|r| r.dominated_by_oracle == Some(true)).count();
            let _ = writeln!(out, "dominated by oracle: {n} of {}", self.rows.len());
        }
        if let Some(rec) = &self.recovered {
            let n = rec.iter().filter(|&&b| b).count();
            let _ = writeln!(out, "planted patterns recovered: {n} of {}", rec.len());
        }
        out
    }

    pub fn to_csv(&self, audit: bool, truth: bool) -> Result<String> {
        let audit = audit || self.has_audit();
        let truth = truth || self.has_truth();
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Data(format!("csv: {e}"));
        w.write_record(self.header(audit, truth)).map_err(io)?;
        for r in &self.rows {
            w.write_record(self.cells(r, audit, truth)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

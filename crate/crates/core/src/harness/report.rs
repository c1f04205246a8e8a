use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::presence::{accuracy_percentiles, overall_accuracy, ConfusionMatrix};

use super::aggregate::AggregateStats;
use super::task::EvalTask;
use super::HarnessError;

pub const INDEX_FILE: &str = "index.tsv";

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub run_id: String,
    pub classifier_version: String,
    pub query: String,
    pub input_digest: String,
    pub stats: AggregateStats,
}

/// Hex sha256 over the classifier version and the ordered task list.
pub fn input_digest(tasks: &[EvalTask], classifier_version: &str) -> String {
    let mut h = Sha256::new();
    h.update(classifier_version.as_bytes());
    h.update(b"\n");
    for t in tasks {
        h.update(format!("{}\t{}\t{}\n", t.task_id, t.frame_id, t.payload_ref).as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn accuracy_cell(cm: &ConfusionMatrix) -> String {
    overall_accuracy(cm).map_or("-".to_string(), |a| format!("{a:.6}"))
}

fn counts(cm: &ConfusionMatrix) -> String {
    format!("{}\t{}\t{}\t{}", cm.tp, cm.fn_, cm.fp, cm.tn)
}

/// Deterministic report body. Timing and retry counts depend on how a run
/// went rather than on what it computed, so they live in the archive trailer.
pub fn render_report(r: &RunReport) -> String {
    let s = &r.stats;
    let mut out = String::from("roadboost-run-report v1\n");
    out.push_str("\n[run]\n");
    writeln!(out, "run_id\t{}", r.run_id).unwrap();
    writeln!(out, "classifier_version\t{}", r.classifier_version).unwrap();
    writeln!(out, "query\t{}", r.query).unwrap();
    writeln!(out, "input_digest\t{}", r.input_digest).unwrap();

    out.push_str("\n[totals]\n");
    writeln!(out, "tasks\t{}", s.task_ids.len()).unwrap();
    writeln!(out, "succeeded\t{}", s.succeeded).unwrap();
    writeln!(out, "failed\t{}", s.failed).unwrap();
    writeln!(out, "tp\tfn\tfp\ttn").unwrap();
    writeln!(out, "{}", counts(&s.total)).unwrap();
    writeln!(out, "overall_accuracy\t{}", accuracy_cell(&s.total)).unwrap();

    out.push_str("\n[per_tag]\ncategory\tvalue\ttp\tfn\tfp\ttn\taccuracy\n");
    for ((cat, val), cm) in &s.per_tag {
        writeln!(out, "{cat}\t{val}\t{}\t{}", counts(cm), accuracy_cell(cm)).unwrap();
    }

    out.push_str("\n[per_video]\nvideo_id\ttp\tfn\tfp\ttn\taccuracy\n");
    for (video, cm) in &s.per_video {
        writeln!(out, "{video}\t{}\t{}", counts(cm), accuracy_cell(cm)).unwrap();
    }

    out.push_str("\n[accuracy_cdf]\n");
    let per_video: Vec<f64> = s.per_video_accuracy().into_iter().map(|(_, a)| a).collect();
    match accuracy_percentiles(&per_video) {
        Ok(p) => {
            writeln!(out, "videos\t{}", per_video.len()).unwrap();
            writeln!(out, "median\t{:.6}", p.median()).unwrap();
            writeln!(out, "p05\t{:.6}", p.p05()).unwrap();
        }
        Err(_) => out.push_str("videos\t0\n"),
    }

    out.push_str("\n[failures]\n");
    for id in &s.failed_tasks {
        writeln!(out, "{id}").unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchiveEntry {
    pub run_id: String,
    pub timestamp: u64,
    pub report_path: String,
    pub input_digest: String,
}

/// Directory of run reports plus an append-only `index.tsv`.
#[derive(Debug, Clone)]
pub struct Archive {
    root: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Archive {
    pub fn open(root: &Path) -> Result<Self, HarnessError> {
        fs::create_dir_all(root.join("runs")).map_err(io_err(root))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn index_path(&self) -> PathBuf {
        self.root.join(INDEX_FILE)
    }

    pub fn entries(&self) -> Result<Vec<ArchiveEntry>, HarnessError> {
        let path = self.index_path();
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&path)(e)),
        };
        text.lines()
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(i, line)| {
                let f: Vec<&str> = line.split('\t').collect();
                let bad = || HarnessError::Archive {
                    path: path.clone(),
                    message: format!("malformed index line {}", i + 1),
                };
                if f.len() != 4 {
                    return Err(bad());
                }
                Ok(ArchiveEntry {
                    run_id: f[0].to_string(),
                    timestamp: f[1].parse().map_err(|_| bad())?,
                    report_path: f[2].to_string(),
                    input_digest: f[3].to_string(),
                })
            })
            .collect()
    }

    /// Writes the report (body plus a trailer holding the timestamp, total
    /// runtime and retry count) and then appends the index line. The report is written to a
    /// temporary file and renamed, and the index line is one append, so a
    /// failure leaves earlier entries intact.
    pub fn record(&self, report: &RunReport, timestamp: u64) -> Result<ArchiveEntry, HarnessError> {
        let valid = !report.run_id.is_empty()
            && report
                .run_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && !report.run_id.starts_with('.');
        if !valid {
            return Err(HarnessError::InvalidConfig(format!(
                "run_id {:?} must be non-empty [A-Za-z0-9._-] not starting with '.'",
                report.run_id
            )));
        }
        if self.entries()?.iter().any(|e| e.run_id == report.run_id) {
            return Err(HarnessError::DuplicateRun(report.run_id.clone()));
        }
        let report_path = format!("runs/{}.txt", report.run_id);
        let full = self.root.join(&report_path);
        let tmp = self.root.join(format!("runs/.{}.tmp", report.run_id));
        let mut text = render_report(report);
        write!(
            text,
            "\n[trailer]\ntimestamp\t{timestamp}\nruntime_us\t{}\nretried\t{}\n",
            report.stats.runtime_us, report.stats.retried
        )
        .unwrap();
        fs::write(&tmp, text).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &full).map_err(io_err(&full))?;

        let entry = ArchiveEntry {
            run_id: report.run_id.clone(),
            timestamp,
            report_path,
            input_digest: report.input_digest.clone(),
        };
        let line = format!(
            "{}\t{}\t{}\t{}\n",
            entry.run_id, entry.timestamp, entry.report_path, entry.input_digest
        );
        let index = self.index_path();
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&index)
            .map_err(io_err(&index))?;
        f.write_all(line.as_bytes()).map_err(io_err(&index))?;
        f.sync_all().map_err(io_err(&index))?;
        Ok(entry)
    }

    /// Report body with the trailer stripped.
    pub fn read_body(&self, entry: &ArchiveEntry) -> Result<String, HarnessError> {
        let path = self.root.join(&entry.report_path);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        Ok(match text.find("\n[trailer]\n") {
            Some(i) => text[..i].to_string(),
            None => text,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(run_id: &str) -> RunReport {
        RunReport {
            run_id: run_id.to_string(),
            classifier_version: "abc".to_string(),
            query: "*".to_string(),
            input_digest: "d1".to_string(),
            stats: AggregateStats::default(),
        }
    }

    #[test]
    fn archive_lists_runs_and_rejects_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let archive = Archive::open(dir.path()).unwrap();
        archive.record(&report("r1"), 10).unwrap();
        archive.record(&report("r2"), 11).unwrap();
        let entries = archive.entries().unwrap();
        assert_eq!(entries.len(), 2);
        assert_ne!(entries[0].run_id, entries[1].run_id);
        assert!(matches!(
            archive.record(&report("r1"), 12),
            Err(HarnessError::DuplicateRun(_))
        ));
        assert_eq!(archive.entries().unwrap().len(), 2);
        assert_eq!(archive.read_body(&entries[0]).unwrap(), render_report(&report("r1")));
    }

    #[test]
    fn bad_run_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let archive = Archive::open(dir.path()).unwrap();
        for bad in ["", "a/b", "a\tb", ".hidden"] {
            assert!(archive.record(&report(bad), 1).is_err());
        }
        assert!(archive.entries().unwrap().is_empty());
    }

    #[test]
    fn empty_stats_render() {
        let body = render_report(&report("r"));
        assert!(body.contains("overall_accuracy\t-"));
        assert!(body.contains("videos\t0"));
    }
}

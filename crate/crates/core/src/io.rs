//! Line-oriented file formats and report rendering.
//!
//! Record and prototype files are JSON Lines. The first line is a header
//! object carrying the format name, its version and the vector dimension;
//! every following line is one object. Vector components are written with a
//! fixed eight decimals so that files are byte-identical across platforms.
//!
//! ```text
//! {"format":"spc-records","version":1,"dim":3,"normalize":false}
//! {"user":"u0001","t":1,"label":"rice","vec":[0.60000002,0.80000001,0.00000000]}
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{BucketReport, CvResult};
use crate::model::{Embedding, LabelRegistry, LabeledRecord, PrototypeSet, VectorSet};

pub const FORMAT_VERSION: u32 = 1;
pub const RECORDS_FORMAT: &str = "spc-records";
pub const PROTOTYPES_FORMAT: &str = "spc-prototypes";

#[derive(Debug, Serialize, Deserialize)]
struct RecordsHeader {
    format: String,
    version: u32,
    dim: usize,
    #[serde(default)]
    normalize: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct PrototypesHeader {
    format: String,
    version: u32,
    dim: usize,
}

#[derive(Debug, Deserialize)]
struct RecordLine {
    user: String,
    t: u32,
    label: String,
    vec: Vec<f32>,
}

#[derive(Debug, Deserialize)]
struct PrototypeLine {
    label: String,
    #[serde(default)]
    count: u64,
    vec: Vec<f32>,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn open(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l)))
}

fn check_header(path: &Path, format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(parse_err(
            path,
            1,
            format!("expected format {expected:?}, found {format:?}"),
        ));
    }
    if version != FORMAT_VERSION {
        return Err(parse_err(
            path,
            1,
            format!("unsupported format version {version}"),
        ));
    }
    Ok(())
}

fn vector_from_line(
    path: &Path,
    line: usize,
    dim: usize,
    vec: Vec<f32>,
    normalize: bool,
) -> Result<Embedding> {
    if vec.len() != dim {
        return Err(parse_err(
            path,
            line,
            format!("dimension mismatch: expected {dim}, got {}", vec.len()),
        ));
    }
    let embedding = if normalize {
        Embedding::normalize_f32(&vec)
    } else {
        Embedding::from_unit(vec)
    };
    embedding.map_err(|e| parse_err(path, line, e.to_string()))
}

/// Reads a record file, interning labels into `registry`.
///
/// Returns the header dimension alongside the records.
pub fn read_records(
    path: &Path,
    registry: &mut LabelRegistry,
) -> Result<(usize, Vec<LabeledRecord>)> {
    let mut lines = open(path)?;
    let header: RecordsHeader = match lines.next() {
        Some((n, line)) => {
            let line = line.map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&line)
                .map_err(|e| parse_err(path, n, format!("bad header: {e}")))?
        }
        None => return Err(parse_err(path, 1, "missing header line")),
    };
    check_header(path, &header.format, header.version, RECORDS_FORMAT)?;
    if header.dim == 0 {
        return Err(parse_err(path, 1, "dimension must be positive"));
    }
    let mut records = Vec::new();
    for (n, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RecordLine =
            serde_json::from_str(&line).map_err(|e| parse_err(path, n, e.to_string()))?;
        let embedding = vector_from_line(path, n, header.dim, parsed.vec, header.normalize)?;
        let class = registry
            .intern(&parsed.label)
            .map_err(|e| parse_err(path, n, e.to_string()))?;
        if parsed.t == 0 {
            return Err(parse_err(path, n, "t is 1-based"));
        }
        records.push(LabeledRecord {
            user: parsed.user,
            t: parsed.t,
            class,
            embedding,
        });
    }
    Ok((header.dim, records))
}

fn push_vector(out: &mut String, v: &[f32]) {
    out.push('[');
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{x:.8}").expect("write to string");
    }
    out.push(']');
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes records with unit-norm vectors (`normalize: false` header).
pub fn write_records(
    path: &Path,
    dim: usize,
    records: &[LabeledRecord],
    registry: &LabelRegistry,
) -> Result<()> {
    let mut out = create(path)?;
    let header = RecordsHeader {
        format: RECORDS_FORMAT.into(),
        version: FORMAT_VERSION,
        dim,
        normalize: false,
    };
    let mut buf = serde_json::to_string(&header).expect("header serializes");
    buf.push('\n');
    for r in records {
        if r.embedding.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: r.embedding.dim(),
            });
        }
        let label = registry
            .resolve(r.class)
            .ok_or(Error::UnknownClass(r.class))?;
        write!(
            buf,
            "{{\"user\":{},\"t\":{},\"label\":{},\"vec\":",
            json_string(&r.user),
            r.t,
            json_string(label)
        )
        .expect("write to string");
        push_vector(&mut buf, r.embedding.as_slice());
        buf.push_str("}\n");
        if buf.len() > 1 << 20 {
            out.write_all(buf.as_bytes())
                .map_err(|e| Error::io(path, e))?;
            buf.clear();
        }
    }
    out.write_all(buf.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_prototypes(path: &Path, set: &PrototypeSet, registry: &LabelRegistry) -> Result<()> {
    let mut out = create(path)?;
    let header = PrototypesHeader {
        format: PROTOTYPES_FORMAT.into(),
        version: FORMAT_VERSION,
        dim: set.dim(),
    };
    let mut buf = serde_json::to_string(&header).expect("header serializes");
    buf.push('\n');
    for (class, v) in set.entries() {
        let label = registry.resolve(class).ok_or(Error::UnknownClass(class))?;
        write!(
            buf,
            "{{\"label\":{},\"count\":{},\"vec\":",
            json_string(label),
            set.count(class).unwrap_or(0)
        )
        .expect("write to string");
        push_vector(&mut buf, v);
        buf.push_str("}\n");
    }
    out.write_all(buf.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a prototype file. A zero-byte file is an empty set.
pub fn read_prototypes(path: &Path, registry: &mut LabelRegistry) -> Result<PrototypeSet> {
    let mut lines = open(path)?;
    let header: PrototypesHeader = match lines.next() {
        Some((n, line)) => {
            let line = line.map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&line)
                .map_err(|e| parse_err(path, n, format!("bad header: {e}")))?
        }
        None => return Ok(PrototypeSet::new(0)),
    };
    check_header(path, &header.format, header.version, PROTOTYPES_FORMAT)?;
    let mut set = PrototypeSet::new(header.dim);
    let mut labels = HashSet::new();
    for (n, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: PrototypeLine =
            serde_json::from_str(&line).map_err(|e| parse_err(path, n, e.to_string()))?;
        if !labels.insert(parsed.label.clone()) {
            return Err(parse_err(
                path,
                n,
                format!("duplicate label {:?}", parsed.label),
            ));
        }
        let mean = vector_from_line(path, n, header.dim, parsed.vec, false)?;
        let class = registry
            .intern(&parsed.label)
            .map_err(|e| parse_err(path, n, e.to_string()))?;
        set.insert(class, mean, parsed.count)
            .map_err(|e| parse_err(path, n, e.to_string()))?;
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Markdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    /// One cell per (bucket, k), bucket-major. `None` renders as `-`.
    pub cells: Vec<Option<f64>>,
}

/// A rectangular report: rows of per-bucket, per-k rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub corner: String,
    pub buckets: Vec<String>,
    pub topk: Vec<usize>,
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
}

fn notes_for(report: &BucketReport) -> Vec<String> {
    let mut notes = Vec::new();
    if report.ragged {
        notes.push("streams have unequal lengths; each t averages the users that reach it".into());
    }
    if let Some(b) = report.buckets.iter().find(|b| b.partial) {
        notes.push(format!(
            "bucket {} is narrower than {}",
            b.label(),
            report.width
        ));
    }
    notes
}

fn spread(value: f64, nk: usize) -> impl Iterator<Item = Option<f64>> {
    std::iter::repeat_n(Some(value), nk)
}

impl ReportTable {
    /// Accuracy, both upper limits and the conditional breakdown of one run.
    pub fn from_eval(report: &BucketReport) -> Self {
        let nk = report.topk.len();
        let b = &report.buckets;
        let rows = vec![
            ReportRow {
                label: "accuracy".into(),
                cells: b
                    .iter()
                    .flat_map(|b| b.accuracy.iter().copied().map(Some))
                    .collect(),
            },
            ReportRow {
                label: "upper limit (initial)".into(),
                cells: b.iter().flat_map(|b| spread(b.upper_initial, nk)).collect(),
            },
            ReportRow {
                label: "upper limit (initial+user)".into(),
                cells: b.iter().flat_map(|b| spread(b.upper_union, nk)).collect(),
            },
            ReportRow {
                label: "initial classes".into(),
                cells: b
                    .iter()
                    .flat_map(|b| b.initial_accuracy.iter().copied())
                    .collect(),
            },
            ReportRow {
                label: "non-initial classes".into(),
                cells: b
                    .iter()
                    .flat_map(|b| b.novel_accuracy.iter().copied())
                    .collect(),
            },
        ];
        Self {
            corner: "method".into(),
            buckets: b.iter().map(|b| b.label()).collect(),
            topk: report.topk.clone(),
            rows,
            notes: notes_for(report),
        }
    }

    /// One accuracy row per swept parameter value.
    pub fn from_sweep(
        parameter: &str,
        rows: &[(f64, BucketReport)],
        annotate: impl Fn(f64) -> Option<&'static str>,
    ) -> Self {
        let first = &rows.first().expect("sweep has rows").1;
        Self {
            corner: parameter.into(),
            buckets: first.buckets.iter().map(|b| b.label()).collect(),
            topk: first.topk.clone(),
            rows: rows
                .iter()
                .map(|(v, r)| ReportRow {
                    label: match annotate(*v) {
                        Some(a) => format!("{v} ({a})"),
                        None => v.to_string(),
                    },
                    cells: r
                        .buckets
                        .iter()
                        .flat_map(|b| b.accuracy.iter().copied().map(Some))
                        .collect(),
                })
                .collect(),
            notes: notes_for(first),
        }
    }

    fn headers(&self, precise: bool) -> Vec<String> {
        let mut cols = vec![self.corner.clone()];
        let names: Vec<String> = self
            .buckets
            .iter()
            .flat_map(|b| self.topk.iter().map(move |k| format!("{b} top-{k}")))
            .collect();
        cols.extend(names.iter().cloned());
        if precise {
            cols.extend(names.iter().map(|n| format!("{n} exact")));
        }
        cols
    }

    fn cells(&self, row: &ReportRow, precise: bool) -> Vec<String> {
        let mut out = vec![row.label.clone()];
        out.extend(row.cells.iter().map(|c| c.map_or("-".into(), percent)));
        if precise {
            out.extend(
                row.cells
                    .iter()
                    .map(|c| c.map_or("-".into(), |v| v.to_string())),
            );
        }
        out
    }

    pub fn render(&self, format: ReportFormat, precise: bool) -> String {
        let mut s = String::new();
        match format {
            ReportFormat::Tsv => {
                s.push_str(&self.headers(precise).join("\t"));
                s.push('\n');
                for row in &self.rows {
                    s.push_str(&self.cells(row, precise).join("\t"));
                    s.push('\n');
                }
                for note in &self.notes {
                    writeln!(s, "# {note}").expect("write to string");
                }
            }
            ReportFormat::Markdown => {
                let headers = self.headers(precise);
                writeln!(s, "| {} |", headers.join(" | ")).expect("write to string");
                let rule: Vec<&str> = std::iter::once("---")
                    .chain(std::iter::repeat_n("---:", headers.len() - 1))
                    .collect();
                writeln!(s, "|{}|", rule.join("|")).expect("write to string");
                for row in &self.rows {
                    writeln!(s, "| {} |", self.cells(row, precise).join(" | "))
                        .expect("write to string");
                }
                for note in &self.notes {
                    writeln!(s, "\n_{note}_").expect("write to string");
                }
            }
        }
        s
    }
}

/// A rate in `[0, 1]` as a percentage with one decimal.
pub fn percent(value: f64) -> String {
    format!("{:.1}", value * 100.0)
}

pub fn write_report(
    table: &ReportTable,
    path: &Path,
    format: ReportFormat,
    precise: bool,
) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::invalid("report has no rows"));
    }
    std::fs::write(path, table.render(format, precise)).map_err(|e| Error::io(path, e))
}

/// Per-fold cross-validation table: one row per fold, then the fold mean.
pub fn render_cv(result: &CvResult, format: ReportFormat, precise: bool) -> String {
    let mut headers: Vec<String> = vec![
        "fold".into(),
        "users".into(),
        "best w".into(),
        "held-out at best".into(),
    ];
    for w in &result.grid {
        headers.push(format!("w={w} train"));
        headers.push(format!("w={w} held-out"));
    }
    let fmt = |v: f64| if precise { v.to_string() } else { percent(v) };
    let mut rows: Vec<Vec<String>> = result
        .folds
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut row = vec![
                (i + 1).to_string(),
                f.held_out.len().to_string(),
                f.best_w.to_string(),
                fmt(f.held_out_at_best),
            ];
            for (tr, ho) in f.train_scores.iter().zip(&f.held_out_scores) {
                row.push(fmt(*tr));
                row.push(fmt(*ho));
            }
            row
        })
        .collect();
    let mut mean = vec![
        "mean".into(),
        "-".into(),
        result.chosen_w.to_string(),
        "-".into(),
    ];
    for v in &result.mean_held_out {
        mean.push("-".into());
        mean.push(fmt(*v));
    }
    rows.push(mean);

    let mut s = String::new();
    match format {
        ReportFormat::Tsv => {
            s.push_str(&headers.join("\t"));
            s.push('\n');
            for r in rows {
                s.push_str(&r.join("\t"));
                s.push('\n');
            }
        }
        ReportFormat::Markdown => {
            writeln!(s, "| {} |", headers.join(" | ")).expect("write to string");
            writeln!(s, "|---|{}", "---:|".repeat(headers.len() - 1)).expect("write to string");
            for r in rows {
                writeln!(s, "| {} |", r.join(" | ")).expect("write to string");
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Bucket;
    use crate::model::normalize;

    fn report(acc: &[[f64; 2]]) -> BucketReport {
        BucketReport {
            topk: vec![1, 5],
            width: 50,
            ragged: false,
            buckets: acc
                .iter()
                .enumerate()
                .map(|(i, a)| Bucket {
                    start: i as u32 * 50 + 1,
                    end: i as u32 * 50 + 50,
                    partial: false,
                    accuracy: a.to_vec(),
                    upper_initial: 0.4,
                    upper_union: 0.6,
                    initial_accuracy: vec![Some(0.5), Some(0.8)],
                    novel_accuracy: vec![None, None],
                })
                .collect(),
        }
    }

    #[test]
    fn percent_rounding() {
        assert_eq!(percent(0.314159), "31.4");
        assert_eq!(percent(1.0), "100.0");
        assert_eq!(percent(0.0), "0.0");
    }

    #[test]
    fn tsv_layout() {
        let table = ReportTable::from_eval(&report(&[[0.314159, 0.5], [0.4, 0.6]]));
        let tsv = table.render(ReportFormat::Tsv, false);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(
            lines[0],
            "method\tt1-t50 top-1\tt1-t50 top-5\tt51-t100 top-1\tt51-t100 top-5"
        );
        assert_eq!(lines[1], "accuracy\t31.4\t50.0\t40.0\t60.0");
        assert_eq!(lines[2], "upper limit (initial)\t40.0\t40.0\t40.0\t40.0");
        assert_eq!(lines[5], "non-initial classes\t-\t-\t-\t-");
        for line in &lines {
            assert_eq!(line.split('\t').count(), 5);
        }
        let precise = table.render(ReportFormat::Tsv, true);
        let first = precise.lines().nth(1).unwrap();
        assert_eq!(first.split('\t').count(), 9);
        assert!(first.ends_with("\t0.314159\t0.5\t0.4\t0.6"));
    }

    #[test]
    fn markdown_layout() {
        let table = ReportTable::from_eval(&report(&[[0.25, 0.5]]));
        let md = table.render(ReportFormat::Markdown, false);
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[0], "| method | t1-t50 top-1 | t1-t50 top-5 |");
        assert_eq!(lines[1], "|---|---:|---:|");
        assert_eq!(lines[2], "| accuracy | 25.0 | 50.0 |");
    }

    #[test]
    fn report_files_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let table = ReportTable::from_eval(&report(&[[0.25, 0.5]]));
        let a = dir.path().join("a.tsv");
        let b = dir.path().join("b.tsv");
        write_report(&table, &a, ReportFormat::Tsv, true).unwrap();
        write_report(&table, &b, ReportFormat::Tsv, true).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        assert!(write_report(
            &table,
            &dir.path().join("missing/x.tsv"),
            ReportFormat::Tsv,
            false
        )
        .is_err());
    }

    fn records(reg: &mut LabelRegistry) -> Vec<LabeledRecord> {
        let rice = reg.intern("rice").unwrap();
        let natto = reg.intern("natto \"fermented\"").unwrap();
        vec![
            LabeledRecord {
                user: "u1".into(),
                t: 1,
                class: rice,
                embedding: normalize(&[3.0, 4.0, 0.0]).unwrap(),
            },
            LabeledRecord {
                user: "u1".into(),
                t: 2,
                class: natto,
                embedding: normalize(&[-1.0, 2.0, 2.0]).unwrap(),
            },
        ]
    }

    #[test]
    fn records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let mut reg = LabelRegistry::new();
        let written = records(&mut reg);
        write_records(&path, 3, &written, &reg).unwrap();
        let mut fresh = LabelRegistry::new();
        let (dim, read) = read_records(&path, &mut fresh).unwrap();
        assert_eq!(dim, 3);
        assert_eq!(read.len(), 2);
        for (a, b) in written.iter().zip(&read) {
            assert_eq!(a.user, b.user);
            assert_eq!(a.t, b.t);
            assert_eq!(reg.resolve(a.class), fresh.resolve(b.class));
            for (x, y) in a.embedding.as_slice().iter().zip(b.embedding.as_slice()) {
                assert!((x - y).abs() <= 1e-6);
            }
        }
    }

    fn write_lines(path: &Path, lines: &[String]) {
        std::fs::write(path, lines.join("\n") + "\n").unwrap();
    }

    #[test]
    fn record_errors_cite_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let mut lines =
            vec![r#"{"format":"spc-records","version":1,"dim":2,"normalize":true}"#.to_string()];
        for t in 1..=5 {
            lines.push(format!(
                r#"{{"user":"u","t":{t},"label":"a","vec":[1.0,2.0]}}"#
            ));
        }
        lines.push(r#"{"user":"u","t":6,"label":"a","vec":[1.0,2.0,3.0]}"#.into());
        write_lines(&path, &lines);
        let err = read_records(&path, &mut LabelRegistry::new()).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 7);
                assert!(message.contains("dimension mismatch"));
            }
            other => panic!("unexpected {other:?}"),
        }

        lines.truncate(3);
        lines.push("{not json".into());
        write_lines(&path, &lines);
        assert!(matches!(
            read_records(&path, &mut LabelRegistry::new()),
            Err(Error::Parse { line: 4, .. })
        ));

        lines.truncate(1);
        lines[0] = lines[0].replace("true", "false");
        lines.push(r#"{"user":"u","t":1,"label":"a","vec":[1.0,2.0]}"#.into());
        write_lines(&path, &lines);
        assert!(matches!(
            read_records(&path, &mut LabelRegistry::new()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn header_only_file_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        write_lines(
            &path,
            &[r#"{"format":"spc-records","version":1,"dim":4}"#.into()],
        );
        let (dim, recs) = read_records(&path, &mut LabelRegistry::new()).unwrap();
        assert_eq!(dim, 4);
        assert!(recs.is_empty());
        std::fs::write(&path, "").unwrap();
        assert!(read_records(&path, &mut LabelRegistry::new()).is_err());
    }

    #[test]
    fn prototypes_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        let mut reg = LabelRegistry::new();
        let mut set = PrototypeSet::new(3);
        for (label, v) in [
            ("rice", [1.0, 2.0, 3.0]),
            ("natto", [0.0, 1.0, 0.0]),
            ("miso", [-2.0, 0.5, 1.0]),
        ] {
            set.insert(reg.intern(label).unwrap(), normalize(&v).unwrap(), 7)
                .unwrap();
        }
        write_prototypes(&path, &set, &reg).unwrap();
        let mut fresh = LabelRegistry::new();
        let read = read_prototypes(&path, &mut fresh).unwrap();
        assert_eq!(read.len(), 3);
        for (class, v) in set.entries() {
            let other = read
                .get(fresh.get(reg.resolve(class).unwrap()).unwrap())
                .unwrap();
            for (x, y) in v.iter().zip(other) {
                assert!((x - y).abs() <= 1e-6);
            }
            assert_eq!(
                read.count(fresh.get(reg.resolve(class).unwrap()).unwrap()),
                Some(7)
            );
        }

        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        lines.push(lines[1].clone());
        write_lines(&path, &lines);
        assert!(matches!(
            read_prototypes(&path, &mut LabelRegistry::new()),
            Err(Error::Parse { line: 5, .. })
        ));

        std::fs::write(&path, "").unwrap();
        let empty = read_prototypes(&path, &mut LabelRegistry::new()).unwrap();
        assert!(empty.is_empty());
    }
}

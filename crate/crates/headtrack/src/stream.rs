//! Frame-stream file formats: line-delimited JSON and CSV.
//!
//! The JSONL form is canonical and matches the wire protocol one-to-one:
//! one object per line, `{"t": s, "pitch": deg, "yaw": deg, "roll": deg}`
//! with optional `gt_pitch`/`gt_yaw`/`gt_roll`. The CSV form carries the
//! same fields under the header `t,pitch,yaw,roll[,gt_pitch,gt_yaw,gt_roll]`.
//!
//! Ingestion normalizes angles into `[-180, 180)` and enforces strictly
//! increasing timestamps: records that do not advance the clock are dropped
//! and reported, malformed content fails with a line-precise diagnostic.

use crate::pose::{EulerPose, FrameRecord};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

/// On-disk frame stream encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StreamFormat {
    #[default]
    Jsonl,
    Csv,
}

impl FromStr for StreamFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(StreamFormat::Jsonl),
            "csv" => Ok(StreamFormat::Csv),
            other => Err(Error::Config(format!("unknown stream format {other:?}"))),
        }
    }
}

impl fmt::Display for StreamFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StreamFormat::Jsonl => "jsonl",
            StreamFormat::Csv => "csv",
        })
    }
}

/// Wire/file form of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsonFrame {
    pub t: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_pitch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_yaw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_roll: Option<f64>,
}

impl JsonFrame {
    pub fn from_record(r: &FrameRecord) -> Self {
        Self {
            t: r.t,
            pitch: r.pose.pitch,
            yaw: r.pose.yaw,
            roll: r.pose.roll,
            gt_pitch: r.ground_truth.map(|g| g.pitch),
            gt_yaw: r.ground_truth.map(|g| g.yaw),
            gt_roll: r.ground_truth.map(|g| g.roll),
        }
    }

    /// Validate and normalize into a [`FrameRecord`]. Ground-truth fields
    /// must be present together or not at all.
    pub fn into_record(self) -> Result<FrameRecord> {
        if !self.t.is_finite() {
            return Err(Error::NonFinite {
                what: "timestamp",
                value: self.t,
            });
        }
        let pose = EulerPose::new(self.pitch, self.yaw, self.roll).normalized()?;
        let ground_truth = match (self.gt_pitch, self.gt_yaw, self.gt_roll) {
            (None, None, None) => None,
            (Some(p), Some(y), Some(r)) => Some(EulerPose::new(p, y, r).normalized()?),
            _ => {
                return Err(Error::Config(
                    "ground-truth fields must be given together".into(),
                ))
            }
        };
        Ok(FrameRecord {
            t: self.t,
            pose,
            ground_truth,
        })
    }
}

/// A record dropped at ingestion, with its 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

/// Result of reading a stream: the accepted frames plus everything that was
/// dropped for not advancing the timestamp.
#[derive(Debug, Clone, Default)]
pub struct StreamReport {
    pub frames: Vec<FrameRecord>,
    pub rejected: Vec<Rejection>,
}

fn parse_error(path: &str, line: usize, message: impl fmt::Display) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.to_string(),
    }
}

/// Push a record, enforcing strict timestamp ordering; regressions and
/// duplicates are recorded instead of accepted.
fn accept(report: &mut StreamReport, record: FrameRecord, line: usize) {
    if let Some(last) = report.frames.last() {
        if record.t <= last.t {
            report.rejected.push(Rejection {
                line,
                reason: format!("timestamp {} does not advance past {}", record.t, last.t),
            });
            return;
        }
    }
    report.frames.push(record);
}

pub fn read_stream_from(
    reader: impl Read,
    path: &str,
    format: StreamFormat,
) -> Result<StreamReport> {
    match format {
        StreamFormat::Jsonl => read_jsonl(reader, path),
        StreamFormat::Csv => read_csv(reader, path),
    }
}

pub fn read_stream(path: impl AsRef<Path>, format: StreamFormat) -> Result<StreamReport> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    read_stream_from(BufReader::new(file), &path.display().to_string(), format)
}

fn read_jsonl(reader: impl Read, path: &str) -> Result<StreamReport> {
    let mut report = StreamReport::default();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| parse_error(path, line_no, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: JsonFrame =
            serde_json::from_str(&line).map_err(|e| parse_error(path, line_no, e))?;
        let record = frame
            .into_record()
            .map_err(|e| parse_error(path, line_no, e))?;
        accept(&mut report, record, line_no);
    }
    Ok(report)
}

const CSV_BASE_HEADER: [&str; 4] = ["t", "pitch", "yaw", "roll"];
const CSV_GT_HEADER: [&str; 3] = ["gt_pitch", "gt_yaw", "gt_roll"];

fn read_csv(reader: impl Read, path: &str) -> Result<StreamReport> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| parse_error(path, 1, e))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    let with_gt = match cols.as_slice() {
        c if c == CSV_BASE_HEADER => false,
        c if c.len() == 7 && c[..4] == CSV_BASE_HEADER && c[4..] == CSV_GT_HEADER => true,
        other => {
            return Err(parse_error(
                path,
                1,
                format!("unexpected CSV header {other:?}"),
            ))
        }
    };
    let mut report = StreamReport::default();
    for (idx, row) in csv_reader.records().enumerate() {
        let line_no = idx + 2; // header is line 1
        let row = row.map_err(|e| parse_error(path, line_no, e))?;
        let field = |i: usize| -> Result<f64> {
            let raw = row.get(i).unwrap_or("");
            raw.trim()
                .parse::<f64>()
                .map_err(|e| parse_error(path, line_no, format!("column {}: {e}", cols[i])))
        };
        let frame = JsonFrame {
            t: field(0)?,
            pitch: field(1)?,
            yaw: field(2)?,
            roll: field(3)?,
            gt_pitch: if with_gt { Some(field(4)?) } else { None },
            gt_yaw: if with_gt { Some(field(5)?) } else { None },
            gt_roll: if with_gt { Some(field(6)?) } else { None },
        };
        let record = frame
            .into_record()
            .map_err(|e| parse_error(path, line_no, e))?;
        accept(&mut report, record, line_no);
    }
    Ok(report)
}

pub fn write_stream_to(
    writer: impl Write,
    frames: &[FrameRecord],
    format: StreamFormat,
) -> Result<()> {
    match format {
        StreamFormat::Jsonl => write_jsonl(writer, frames),
        StreamFormat::Csv => write_csv(writer, frames),
    }
}

pub fn write_stream(
    path: impl AsRef<Path>,
    frames: &[FrameRecord],
    format: StreamFormat,
) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_stream_to(std::io::BufWriter::new(file), frames, format)
}

fn write_jsonl(mut writer: impl Write, frames: &[FrameRecord]) -> Result<()> {
    for frame in frames {
        serde_json::to_writer(&mut writer, &JsonFrame::from_record(frame))
            .map_err(|e| Error::Config(format!("serialize frame: {e}")))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

fn write_csv(writer: impl Write, frames: &[FrameRecord]) -> Result<()> {
    let with_gt = frames.iter().any(|f| f.ground_truth.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = CSV_BASE_HEADER.to_vec();
    if with_gt {
        header.extend(CSV_GT_HEADER);
    }
    w.write_record(&header).map_err(csv_write_error)?;
    // Float Display is shortest-round-trip, which is the fidelity the
    // format contract promises.
    let fmt = |v: f64| format!("{v}");
    for frame in frames {
        let mut fields = vec![
            fmt(frame.t),
            fmt(frame.pose.pitch),
            fmt(frame.pose.yaw),
            fmt(frame.pose.roll),
        ];
        if with_gt {
            match frame.ground_truth {
                Some(g) => fields.extend([fmt(g.pitch), fmt(g.yaw), fmt(g.roll)]),
                None => fields.extend([String::new(), String::new(), String::new()]),
            }
        }
        w.write_record(&fields).map_err(csv_write_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_write_error(e: csv::Error) -> Error {
    Error::Config(format!("csv write: {e}"))
}

/// Read a labeled error CSV: header
/// `true_pitch,true_yaw,true_roll,pred_pitch,pred_yaw,pred_roll`, one row
/// per sample, degrees. Returns (true, predicted) pose pairs.
pub fn read_error_pairs(path: impl AsRef<Path>) -> Result<Vec<(EulerPose, EulerPose)>> {
    let path_label = path.as_ref().display().to_string();
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Config(format!("cannot open {path_label}: {e}")))?;
    read_error_pairs_from(BufReader::new(file), &path_label)
}

pub fn read_error_pairs_from(reader: impl Read, path: &str) -> Result<Vec<(EulerPose, EulerPose)>> {
    const HEADER: [&str; 6] = [
        "true_pitch",
        "true_yaw",
        "true_roll",
        "pred_pitch",
        "pred_yaw",
        "pred_roll",
    ];
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| parse_error(path, 1, e))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols != HEADER {
        return Err(parse_error(
            path,
            1,
            format!("unexpected CSV header {cols:?}"),
        ));
    }
    let mut pairs = Vec::new();
    for (idx, row) in csv_reader.records().enumerate() {
        let line_no = idx + 2;
        let row = row.map_err(|e| parse_error(path, line_no, e))?;
        let field = |i: usize| -> Result<f64> {
            row.get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_error(path, line_no, format!("column {}: {e}", HEADER[i])))
        };
        pairs.push((
            EulerPose::new(field(0)?, field(1)?, field(2)?),
            EulerPose::new(field(3)?, field(4)?, field(5)?),
        ));
    }
    Ok(pairs)
}

/// Write (true, predicted) pose pairs in the error-CSV layout.
pub fn write_error_pairs(path: impl AsRef<Path>, pairs: &[(EulerPose, EulerPose)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())
        .map_err(|e| Error::Config(format!("cannot create error csv: {e}")))?;
    w.write_record([
        "true_pitch",
        "true_yaw",
        "true_roll",
        "pred_pitch",
        "pred_yaw",
        "pred_roll",
    ])
    .map_err(csv_write_error)?;
    for (truth, predicted) in pairs {
        w.write_record([
            format!("{}", truth.pitch),
            format!("{}", truth.yaw),
            format!("{}", truth.roll),
            format!("{}", predicted.pitch),
            format!("{}", predicted.yaw),
            format!("{}", predicted.roll),
        ])
        .map_err(csv_write_error)?;
    }
    w.flush()?;
    Ok(())
}

//! Dataset CSV format.
//!
//! ```text
//! # radloc-dataset: {"n_detectors":8,"angle_classes":[...],"bin_spec":{...},"grid":{...}}
//! # provenance: {...}                      (optional, written by the CLI)
//! det_0,...,det_7,true_angle_deg,true_distance_m,angle_class,distance_bin,obstruction_id
//! 812,790,...,35,4.5,7,3,
//! ```
//!
//! Comment lines start with `#` and precede the header. The metadata line
//! carries the label spaces so that a file read back reproduces the dataset
//! exactly. UTF-8, comma separated, `.` decimal point, LF line endings;
//! `obstruction_id` is empty when no candidate obstruction applies.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BinSpec, Dataset, Sample, ScenarioGrid};
use crate::error::{Error, Result};
use crate::transport::CountVector;

pub const CSV_META_PREFIX: &str = "# radloc-dataset: ";

const TRAILING_COLUMNS: [&str; 5] = [
    "true_angle_deg",
    "true_distance_m",
    "angle_class",
    "distance_bin",
    "obstruction_id",
];

#[derive(Serialize, Deserialize)]
struct Meta {
    n_detectors: usize,
    angle_classes: Vec<f64>,
    bin_spec: BinSpec,
    grid: Option<ScenarioGrid>,
}

fn header(n_detectors: usize) -> Vec<String> {
    (0..n_detectors)
        .map(|d| format!("det_{d}"))
        .chain(TRAILING_COLUMNS.iter().map(|s| s.to_string()))
        .collect()
}

/// Writes `ds`, with each entry of `comments` emitted as an extra `# ` line.
pub fn write_csv_to<W: Write>(ds: &Dataset, out: W, comments: &[String]) -> Result<()> {
    let mut out = BufWriter::new(out);
    let meta = Meta {
        n_detectors: ds.n_detectors,
        angle_classes: ds.angle_classes.clone(),
        bin_spec: ds.bin_spec.clone(),
        grid: ds.provenance.clone(),
    };
    let meta_json = serde_json::to_string(&meta).map_err(|e| Error::Schema(e.to_string()))?;
    writeln!(out, "{CSV_META_PREFIX}{meta_json}")?;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{}", header(ds.n_detectors).join(","))?;
    for s in &ds.samples {
        let mut fields: Vec<String> = s.counts.iter().map(|c| c.to_string()).collect();
        fields.push(s.true_angle.to_string());
        fields.push(s.true_distance.to_string());
        fields.push(s.angle_label.to_string());
        fields.push(s.distance_label.to_string());
        fields.push(s.obstruction_id.map(|o| o.to_string()).unwrap_or_default());
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv_to(ds, File::create(path)?, &[])
}

fn parse_f64(line: usize, column: &str, value: &str) -> Result<f64> {
    value.trim().parse::<f64>().map_err(|_| Error::NonNumeric {
        line,
        column: column.to_string(),
        value: value.to_string(),
    })
}

fn parse_usize(line: usize, column: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::NonNumeric {
            line,
            column: column.to_string(),
            value: value.to_string(),
        })
}

pub fn read_csv_from<R: Read>(input: R) -> Result<Dataset> {
    let mut reader = BufReader::new(input);
    let mut meta: Option<Meta> = None;
    let mut line_no = 0usize;
    let mut line = String::new();
    // comment block, then the header line
    let header_line = loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::Schema("missing header row".into()));
        }
        line_no += 1;
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if let Some(json) = trimmed.strip_prefix(CSV_META_PREFIX) {
            meta = Some(
                serde_json::from_str(json)
                    .map_err(|e| Error::Schema(format!("bad dataset metadata: {e}")))?,
            );
        } else if !trimmed.starts_with('#') {
            break trimmed.to_string();
        }
    };
    let meta = meta.ok_or_else(|| Error::Schema("missing dataset metadata line".into()))?;
    let expected = header(meta.n_detectors);
    let found: Vec<&str> = header_line.split(',').collect();
    if found != expected {
        return Err(Error::Schema(format!(
            "header mismatch: expected {:?}, found {:?}",
            expected.join(","),
            header_line
        )));
    }
    let header_line_no = line_no;
    let width = expected.len();
    let n = meta.n_detectors;

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut samples = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = header_line_no + k + 1;
        let rec = rec.map_err(|e| Error::Corrupt(format!("line {line}: {e}")))?;
        if rec.len() != width {
            return Err(Error::InconsistentWidth {
                line,
                expected: width,
                found: rec.len(),
            });
        }
        let counts = (0..n)
            .map(|d| parse_f64(line, &expected[d], &rec[d]))
            .collect::<Result<Vec<_>>>()?;
        let obstruction_id = match rec[n + 4].trim() {
            "" => None,
            v => Some(parse_usize(line, "obstruction_id", v)?),
        };
        samples.push(Sample {
            counts: CountVector(counts),
            true_angle: parse_f64(line, "true_angle_deg", &rec[n])?,
            true_distance: parse_f64(line, "true_distance_m", &rec[n + 1])?,
            angle_label: parse_usize(line, "angle_class", &rec[n + 2])?,
            distance_label: parse_usize(line, "distance_bin", &rec[n + 3])?,
            obstruction_id,
        });
    }
    let ds = Dataset {
        n_detectors: n,
        samples,
        angle_classes: meta.angle_classes,
        bin_spec: meta.bin_spec,
        provenance: meta.grid,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    read_csv_from(File::open(path)?)
}

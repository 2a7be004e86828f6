//! CSV and plot-data serialization of sweep results.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::arq::LatencyModel;
use crate::awgn::{AccessScheme, User};
use crate::error::{Error, Result};
use crate::figures::FigureId;
use crate::flags::Flags;
use crate::montecarlo::RNG_ALGORITHM;
use crate::sweep::{Axis, Evaluator, Metric, ResultRecord};

pub const CSV_HEADER: [&str; 14] = [
    "scheme",
    "user",
    "k",
    "n",
    "beta",
    "p1_db",
    "p2_db",
    "m_max",
    "latency_model",
    "evaluator",
    "epsilon",
    "throughput",
    "expected_channel_uses",
    "flags",
];

pub const TOOL: &str = concat!("fbl-noma ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metadata {
    pub tool: String,
    pub config_hash: String,
    pub rng: String,
    pub seed: u64,
    /// Further `key: value` lines, written in order.
    pub extra: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Metadata {
            tool: TOOL.to_string(),
            config_hash,
            rng: RNG_ALGORITHM.to_string(),
            seed,
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.extra.push((key.to_string(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.extra
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn lines(&self) -> Vec<(String, String)> {
        let mut lines = vec![
            ("tool".to_string(), self.tool.clone()),
            ("config_hash".to_string(), self.config_hash.clone()),
            ("rng".to_string(), self.rng.clone()),
            ("seed".to_string(), self.seed.to_string()),
        ];
        lines.extend(self.extra.iter().cloned());
        lines
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    pub metadata: Metadata,
    pub records: Vec<ResultRecord>,
}

/// First 16 hex digits of the SHA-256 of the value's JSON form.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_vec(config)
        .map_err(|e| Error::InvalidSpec(format!("cannot canonicalize config: {e}")))?;
    let digest = Sha256::digest(&json);
    Ok(hex::encode(&digest[..8]))
}

/// `<figure_id>_<config_hash>.<extension>`.
pub fn output_file_name(figure_id: &str, config_hash: &str, extension: &str) -> String {
    format!("{figure_id}_{config_hash}.{extension}")
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_float(value: f64) -> String {
    if value.is_finite() {
        ryu::Buffer::new().format_finite(value).to_string()
    } else {
        value.to_string()
    }
}

fn record_fields(r: &ResultRecord) -> [String; 14] {
    [
        r.scheme.as_str().to_string(),
        r.user.number().to_string(),
        r.k.to_string(),
        r.n.to_string(),
        format_float(r.beta),
        format_float(r.p1_db),
        format_float(r.p2_db),
        r.m_max.to_string(),
        r.latency_model.as_str().to_string(),
        r.evaluator.as_str().to_string(),
        format_float(r.epsilon),
        format_float(r.throughput),
        format_float(r.expected_channel_uses),
        r.flags.to_string(),
    ]
}

/// Serializes `ds` as CSV: `#` metadata lines, the fixed header, one row
/// per record.
pub fn to_csv_bytes(ds: &DataSet) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (key, value) in ds.metadata.lines() {
        writeln!(out, "# {key}: {value}").expect("writing to memory");
    }
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for r in &ds.records {
        writer.write_record(record_fields(r))?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::Csv(e.into_error().into()))
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_csv(ds: &DataSet, destination: &Path) -> Result<()> {
    let bytes = to_csv_bytes(ds)?;
    fs::write(destination, bytes).map_err(io_error(destination))
}

fn parse_field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = row.get(i).unwrap_or_default();
    raw.parse()
        .map_err(|_| Error::Parse(format!("column `{}`: cannot parse `{raw}`", CSV_HEADER[i])))
}

fn parse_record(row: &csv::StringRecord) -> Result<ResultRecord> {
    if row.len() != CSV_HEADER.len() {
        return Err(Error::Parse(format!(
            "expected {} fields, found {}",
            CSV_HEADER.len(),
            row.len()
        )));
    }
    let user = User::from_number(parse_field(row, 1)?)
        .ok_or_else(|| Error::Parse(format!("bad user `{}`", &row[1])))?;
    Ok(ResultRecord {
        scheme: row[0].parse::<AccessScheme>().map_err(|e| Error::Parse(e.to_string()))?,
        user,
        k: parse_field(row, 2)?,
        n: parse_field(row, 3)?,
        beta: parse_field(row, 4)?,
        p1_db: parse_field(row, 5)?,
        p2_db: parse_field(row, 6)?,
        m_max: parse_field(row, 7)?,
        latency_model: row[8].parse::<LatencyModel>()?,
        evaluator: row[9].parse::<Evaluator>()?,
        epsilon: parse_field(row, 10)?,
        throughput: parse_field(row, 11)?,
        expected_channel_uses: parse_field(row, 12)?,
        flags: row[13].parse::<Flags>().map_err(Error::Parse)?,
    })
}

/// Parses CSV written by [`to_csv_bytes`].
pub fn read_csv<R: Read>(mut source: R) -> Result<DataSet> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::Parse(e.to_string()))?;
    let mut pairs = Vec::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim();
        let (key, value) = body
            .split_once(": ")
            .ok_or_else(|| Error::Parse(format!("metadata line `{line}` is not `key: value`")))?;
        pairs.push((key.to_string(), value.to_string()));
    }
    let take = |key: &str, pairs: &mut Vec<(String, String)>| -> Result<String> {
        let pos = pairs
            .iter()
            .position(|(k, _)| k == key)
            .ok_or_else(|| Error::Parse(format!("metadata `{key}` missing")))?;
        Ok(pairs.remove(pos).1)
    };
    let metadata = Metadata {
        tool: take("tool", &mut pairs)?,
        config_hash: take("config_hash", &mut pairs)?,
        rng: take("rng", &mut pairs)?,
        seed: take("seed", &mut pairs)?
            .parse()
            .map_err(|_| Error::Parse("seed is not an integer".into()))?,
        extra: pairs,
    };

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        records.push(parse_record(&row?)?);
    }
    Ok(DataSet { metadata, records })
}

pub fn read_csv_file(path: &Path) -> Result<DataSet> {
    let file = fs::File::open(path).map_err(io_error(path))?;
    read_csv(file)
}

/// Records sharing everything but the swept coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve<'a> {
    pub scheme: AccessScheme,
    pub user: User,
    /// OMA split; `None` for NOMA.
    pub beta: Option<f64>,
    pub m_max: u32,
    pub evaluator: Evaluator,
    pub latency_model: LatencyModel,
    pub label: String,
    /// `(axis value, record)`, in record order.
    pub points: Vec<(f64, &'a ResultRecord)>,
}

impl Curve<'_> {
    pub fn ys(&self, metric: Metric) -> Vec<f64> {
        self.points.iter().map(|(_, r)| metric.of(r)).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|(x, _)| *x).collect()
    }
}

/// Groups records into curves along `axis`, in order of first appearance.
///
/// Labels name the scheme and user, and add the OMA split, ARQ cap or
/// evaluator only where the data set holds more than one of them.
pub fn curves(records: &[ResultRecord], axis: Axis) -> Vec<Curve<'_>> {
    fn distinct<T: PartialEq>(items: impl Iterator<Item = T>) -> usize {
        let mut seen: Vec<T> = Vec::new();
        for item in items {
            if !seen.contains(&item) {
                seen.push(item);
            }
        }
        seen.len()
    }
    let key_of = |r: &ResultRecord| {
        let beta = match (r.scheme, axis) {
            (AccessScheme::Oma, a) if a != Axis::Beta => Some(r.beta),
            _ => None,
        };
        let m = if axis == Axis::MMax { 0 } else { r.m_max };
        (r.scheme, r.user, beta.map(f64::to_bits), m, r.evaluator, r.latency_model)
    };
    let many_betas = distinct(
        records
            .iter()
            .filter(|r| r.scheme == AccessScheme::Oma)
            .map(|r| r.beta.to_bits()),
    ) > 1
        && axis != Axis::Beta;
    let many_ms = distinct(records.iter().map(|r| r.m_max)) > 1 && axis != Axis::MMax;
    let many_evaluators = distinct(records.iter().map(|r| r.evaluator)) > 1;
    let many_models = distinct(records.iter().map(|r| r.latency_model)) > 1;

    let mut out: Vec<Curve> = Vec::new();
    let mut keys = Vec::new();
    for r in records {
        let key = key_of(r);
        let idx = match keys.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                let beta = key.2.map(f64::from_bits);
                let mut label = r.scheme.as_str().to_uppercase();
                if let (true, Some(b)) = (many_betas, beta) {
                    label.push_str(&format!(" β={}%", format_float(b * 100.0).trim_end_matches(".0")));
                }
                label.push_str(&format!(" User {}", r.user.number()));
                if many_ms {
                    label.push_str(&format!(", M={}", r.m_max));
                }
                if many_evaluators {
                    label.push_str(&format!(" [{}]", r.evaluator));
                }
                if many_models {
                    label.push_str(&format!(" ({})", r.latency_model));
                }
                keys.push(key);
                out.push(Curve {
                    scheme: r.scheme,
                    user: r.user,
                    beta,
                    m_max: r.m_max,
                    evaluator: r.evaluator,
                    latency_model: r.latency_model,
                    label,
                    points: Vec::new(),
                });
                out.len() - 1
            }
        };
        out[idx].points.push((axis.value_of(r), r));
    }
    out
}

/// Plot data for `figure` as whitespace-separated column blocks, one block
/// per curve, blocks separated by two blank lines.
pub fn plot_data_string(ds: &DataSet, figure: FigureId) -> Result<String> {
    let axis = figure.axis();
    let metric = figure.y_metric();
    let curves = curves(&ds.records, axis);
    let mismatch = |reason: String| Error::FigureMismatch {
        figure: figure.as_str().to_string(),
        reason,
    };
    if curves.len() != figure.expected_curves() {
        return Err(mismatch(format!(
            "expected {} curves, data set has {}",
            figure.expected_curves(),
            curves.len()
        )));
    }
    for c in &curves {
        let xs = c.xs();
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(mismatch(format!(
                "curve `{}` is not strictly increasing along {axis}",
                c.label
            )));
        }
    }

    let mut out = String::new();
    out.push_str(&format!("# figure: {}\n# title: {}\n", figure.as_str(), figure.title()));
    for (key, value) in ds.metadata.lines() {
        out.push_str(&format!("# {key}: {value}\n"));
    }
    for (i, c) in curves.iter().enumerate() {
        out.push_str(&format!("\n\n# curve {}: {}\n", i + 1, c.label));
        out.push_str(&format!("{} {}\n", axis.as_str(), metric.as_str()));
        for (x, r) in &c.points {
            out.push_str(&format!("{} {}\n", format_float(*x), format_float(metric.of(r))));
        }
    }
    Ok(out)
}

pub fn write_plot_data(ds: &DataSet, figure: FigureId, destination: &Path) -> Result<()> {
    let text = plot_data_string(ds, figure)?;
    fs::write(destination, text).map_err(io_error(destination))
}

/// Creates `dir` if needed and returns it.
pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    Ok(dir.to_path_buf())
}

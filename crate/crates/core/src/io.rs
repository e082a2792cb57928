//! File formats, manifest loading, result serialization and the evaluation
//! driver behind the CLI.
//!
//! Every file is line-oriented JSON: the manifest is a single JSON object
//! with a top-level `models` list, prediction files and all result files
//! are JSON Lines with one record per line. Numbers in result files are
//! printed with six significant digits and fixed field order, so identical
//! inputs produce byte-identical outputs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::divergence::GroundTruth;
use crate::error::{Error, Result};
use crate::evaluator::{
    evaluate_instance_budgeted, rank_models, EvalConfig, ModelSummary, RankedModel, RankingRow,
    RankingTable, SummaryAccumulator,
};
use crate::setfn::{LabelSpace, MASS_DROP_TOL};

/// Result file names inside an output directory.
pub const SUMMARIES_FILE: &str = "summaries.jsonl";
pub const RANKINGS_FILE: &str = "rankings.jsonl";
pub const PER_INSTANCE_FILE: &str = "per_instance.jsonl";

/// Default ceiling on the tolerated fraction of failed instances.
pub const DEFAULT_MAX_FAILURE_FRACTION: f64 = 0.001;

/// How a model's predictions are encoded on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Point,
    Samples,
    Intervals,
    Masses,
}

impl Encoding {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "point" => Some(Self::Point),
            "samples" => Some(Self::Samples),
            "intervals" => Some(Self::Intervals),
            "masses" => Some(Self::Masses),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Point => "point",
            Self::Samples => "samples",
            Self::Intervals => "intervals",
            Self::Masses => "masses",
        }
    }
}

/// One model entry from an evaluation manifest.
#[derive(Debug, Clone)]
pub struct ModelManifest {
    pub model_id: String,
    pub encoding: Encoding,
    pub num_classes: usize,
    /// Resolved against the manifest's directory at load time.
    pub predictions_path: PathBuf,
    /// Budgeted subset-family size for sample encodings.
    pub budget: Option<usize>,
    /// Declared sample count per instance, checked against each record.
    pub num_samples: Option<usize>,
}

#[derive(Deserialize)]
struct RawManifest {
    models: Vec<RawManifestEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifestEntry {
    model_id: String,
    encoding: String,
    num_classes: usize,
    predictions_path: String,
    #[serde(default)]
    budget: Option<usize>,
    #[serde(default)]
    num_samples: Option<usize>,
}

/// Loads and validates a manifest; relative prediction paths are resolved
/// against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<ModelManifest>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Load(format!("cannot read manifest {}: {e}", path.display())))?;
    let raw: RawManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Load(format!("manifest {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut models = Vec::with_capacity(raw.models.len());
    for entry in raw.models {
        let id = &entry.model_id;
        if id.is_empty() {
            return Err(Error::Load("manifest entry with empty model_id".into()));
        }
        if models.iter().any(|m: &ModelManifest| m.model_id == *id) {
            return Err(Error::Load(format!("duplicate model_id {id:?}")));
        }
        let encoding = Encoding::parse(&entry.encoding).ok_or_else(|| {
            Error::Load(format!(
                "model {id:?}: unknown encoding {:?} (expected point|samples|intervals|masses)",
                entry.encoding
            ))
        })?;
        if entry.num_classes < 2 {
            return Err(Error::Load(format!(
                "model {id:?}: num_classes must be at least 2, got {}",
                entry.num_classes
            )));
        }
        if encoding == Encoding::Masses && entry.num_classes > 64 {
            return Err(Error::Load(format!(
                "model {id:?}: the masses encoding supports at most 64 classes, got {}",
                entry.num_classes
            )));
        }
        if let Some(b) = entry.budget {
            if encoding != Encoding::Samples {
                return Err(Error::Load(format!(
                    "model {id:?}: budget is only valid for the samples encoding"
                )));
            }
            if b < entry.num_classes + 1 {
                return Err(Error::Load(format!(
                    "model {id:?}: budget {b} is below the minimum {}",
                    entry.num_classes + 1
                )));
            }
        }
        if entry.num_samples.is_some() && encoding != Encoding::Samples {
            return Err(Error::Load(format!(
                "model {id:?}: num_samples is only valid for the samples encoding"
            )));
        }
        let predictions_path = {
            let p = PathBuf::from(&entry.predictions_path);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        if !predictions_path.is_file() {
            return Err(Error::Load(format!(
                "model {id:?}: predictions file {} is not readable",
                predictions_path.display()
            )));
        }
        models.push(ModelManifest {
            model_id: entry.model_id,
            encoding,
            num_classes: entry.num_classes,
            predictions_path,
            budget: entry.budget,
            num_samples: entry.num_samples,
        });
    }
    Ok(models)
}

/// One test instance's raw prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub instance_id: u64,
    pub payload: PredictionPayload,
}

/// The four supported prediction encodings.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictionPayload {
    Point(Vec<f64>),
    Samples(Vec<Vec<f64>>),
    Intervals { lower: Vec<f64>, upper: Vec<f64> },
    /// Focal subsets as `(bitmask, mass)` pairs, bit i set iff class i.
    Masses(Vec<(u64, f64)>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointRow {
    instance_id: u64,
    point: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SamplesRow {
    instance_id: u64,
    samples: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalsRow {
    instance_id: u64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MassesRow {
    instance_id: u64,
    focal: Vec<(u64, f64)>,
}

/// Streams prediction records from a file, one instance per line, in
/// ascending instance order. Memory use stays bounded by one record.
pub struct PredictionStream {
    reader: BufReader<File>,
    encoding: Encoding,
    num_classes: usize,
    num_samples: Option<usize>,
    row: usize,
    last_instance: Option<u64>,
    singleton_warnings: usize,
    line: String,
}

/// Opens the predictions file declared by a manifest entry.
pub fn load_predictions(manifest: &ModelManifest) -> Result<PredictionStream> {
    let file = File::open(&manifest.predictions_path).map_err(|e| {
        Error::Load(format!(
            "cannot open {}: {e}",
            manifest.predictions_path.display()
        ))
    })?;
    Ok(PredictionStream {
        reader: BufReader::new(file),
        encoding: manifest.encoding,
        num_classes: manifest.num_classes,
        num_samples: manifest.num_samples,
        row: 0,
        last_instance: None,
        singleton_warnings: 0,
        line: String::new(),
    })
}

impl PredictionStream {
    /// Records whose focal lists do not cover every singleton. Informative
    /// only; such mass files are accepted.
    pub fn singleton_warnings(&self) -> usize {
        self.singleton_warnings
    }

    fn row_err(&self, message: impl Into<String>) -> Error {
        Error::Row {
            row: self.row,
            message: message.into(),
        }
    }

    fn parse_line(&mut self) -> Result<PredictionRecord> {
        let n = self.num_classes;
        let line = self.line.trim();
        let (instance_id, payload) = match self.encoding {
            Encoding::Point => {
                let row: PointRow =
                    serde_json::from_str(line).map_err(|e| self.row_err(e.to_string()))?;
                crate::credal::validate_probability_row(&row.point, n)
                    .map_err(|e| self.row_err(e))?;
                (row.instance_id, PredictionPayload::Point(row.point))
            }
            Encoding::Samples => {
                let row: SamplesRow =
                    serde_json::from_str(line).map_err(|e| self.row_err(e.to_string()))?;
                if row.samples.is_empty() {
                    return Err(self.row_err("empty sample list"));
                }
                if let Some(k) = self.num_samples {
                    if row.samples.len() != k {
                        return Err(self.row_err(format!(
                            "expected {k} samples per the manifest, got {}",
                            row.samples.len()
                        )));
                    }
                }
                for (k, s) in row.samples.iter().enumerate() {
                    crate::credal::validate_probability_row(s, n)
                        .map_err(|e| self.row_err(format!("sample {k}: {e}")))?;
                }
                (row.instance_id, PredictionPayload::Samples(row.samples))
            }
            Encoding::Intervals => {
                let row: IntervalsRow =
                    serde_json::from_str(line).map_err(|e| self.row_err(e.to_string()))?;
                if row.lower.len() != n || row.upper.len() != n {
                    return Err(self.row_err(format!(
                        "expected {n} lower and upper bounds, got {} and {}",
                        row.lower.len(),
                        row.upper.len()
                    )));
                }
                for i in 0..n {
                    let (l, u) = (row.lower[i], row.upper[i]);
                    if !l.is_finite() || !u.is_finite() || l < 0.0 || u > 1.0 {
                        return Err(
                            self.row_err(format!("class {i}: bounds [{l}, {u}] outside [0, 1]"))
                        );
                    }
                    if l > u {
                        return Err(self.row_err(format!(
                            "class {i}: lower bound {l} exceeds upper bound {u}"
                        )));
                    }
                }
                (
                    row.instance_id,
                    PredictionPayload::Intervals {
                        lower: row.lower,
                        upper: row.upper,
                    },
                )
            }
            Encoding::Masses => {
                let row: MassesRow =
                    serde_json::from_str(line).map_err(|e| self.row_err(e.to_string()))?;
                let full = crate::setfn::SubsetMask::full(n).bits();
                let mut total = 0.0;
                let mut singleton_cover: u64 = 0;
                for &(bits, mass) in &row.focal {
                    if bits & !full != 0 {
                        return Err(self.row_err(format!(
                            "focal bitmask {bits} is not below 2^{n}"
                        )));
                    }
                    if !mass.is_finite() || mass < 0.0 {
                        return Err(self.row_err(format!("negative mass {mass}")));
                    }
                    if bits == 0 && mass > MASS_DROP_TOL {
                        return Err(self.row_err(format!("empty set carries mass {mass}")));
                    }
                    if bits.count_ones() == 1 {
                        singleton_cover |= bits;
                    }
                    total += mass;
                }
                if (total - 1.0).abs() > crate::credal::SAMPLE_SUM_TOL {
                    return Err(self.row_err(format!("masses sum to {total}, expected 1")));
                }
                if singleton_cover != full {
                    self.singleton_warnings += 1;
                }
                (row.instance_id, PredictionPayload::Masses(row.focal))
            }
        };

        if let Some(last) = self.last_instance {
            if instance_id <= last {
                return Err(self.row_err(format!(
                    "instance_id {instance_id} does not ascend past {last}"
                )));
            }
        }
        self.last_instance = Some(instance_id);
        Ok(PredictionRecord { instance_id, payload })
    }
}

impl Iterator for PredictionStream {
    type Item = Result<PredictionRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line.clear();
            match self.reader.read_line(&mut self.line) {
                Err(e) => return Some(Err(e.into())),
                Ok(0) => return None,
                Ok(_) => {
                    self.row += 1;
                    if self.line.trim().is_empty() {
                        continue;
                    }
                    return Some(self.parse_line());
                }
            }
        }
    }
}

/// Loads a labels file: one class index per line, line number = instance id.
pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Load(format!("cannot read labels {}: {e}", path.display())))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let label: usize = line.parse().map_err(|_| Error::Row {
            row: i + 1,
            message: format!("invalid label {line:?}"),
        })?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::Load(format!(
            "labels file {} contains no labels",
            path.display()
        )));
    }
    Ok(labels)
}

/// Formats with six significant digits: fixed-point notation between 1e-4
/// and 1e6, scientific outside. Deterministic across runs and platforms.
pub fn fmt_sig(x: f64) -> String {
    assert!(x.is_finite(), "refusing to serialize non-finite value {x}");
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:e}", x.abs());
    let exp: i32 = sci
        .split('e')
        .nth(1)
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let out = if !(-4..6).contains(&exp) {
        format!("{x:.5e}")
    } else {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    };
    if out.starts_with('-') && out[1..].chars().all(|c| c == '0' || c == '.') {
        out[1..].to_string()
    } else {
        out
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn summary_line(s: &ModelSummary) -> String {
    let mut line = String::new();
    line.push_str(&format!(
        "{{\"model_id\":{},\"count\":{},\"correct_count\":{},\"accuracy\":{},\"ece\":{}",
        json_str(&s.model_id),
        s.count,
        s.correct_count,
        fmt_sig(s.accuracy),
        fmt_sig(s.ece),
    ));
    for (name, m) in [("d", &s.d), ("ns", &s.ns), ("e", &s.e)] {
        line.push_str(&format!(
            ",\"{name}_mean\":{},\"{name}_std\":{},\"{name}_cc_mean\":{},\"{name}_cc_std\":{},\"{name}_icc_mean\":{},\"{name}_icc_std\":{}",
            fmt_sig(m.overall.mean),
            fmt_sig(m.overall.std),
            fmt_sig(m.correct.mean),
            fmt_sig(m.correct.std),
            fmt_sig(m.incorrect.mean),
            fmt_sig(m.incorrect.std),
        ));
    }
    line.push('}');
    line
}

fn ranking_line(row: &RankingRow) -> String {
    let ids: Vec<String> = row.entries.iter().map(|e| json_str(&e.model_id)).collect();
    let e_means: Vec<String> = row.entries.iter().map(|e| fmt_sig(e.e_mean)).collect();
    let d_means: Vec<String> = row.entries.iter().map(|e| fmt_sig(e.d_mean)).collect();
    let ns_means: Vec<String> = row.entries.iter().map(|e| fmt_sig(e.ns_mean)).collect();
    format!(
        "{{\"lambda\":{},\"ranking\":[{}],\"e_means\":[{}],\"d_means\":[{}],\"ns_means\":[{}]}}",
        fmt_sig(row.lambda),
        ids.join(","),
        e_means.join(","),
        d_means.join(","),
        ns_means.join(","),
    )
}

/// One line of the per-instance long-format output.
#[derive(Debug, Clone, PartialEq)]
pub struct PerInstanceRow {
    pub model: String,
    pub instance: u64,
    pub d: f64,
    pub ns: f64,
    pub e: f64,
    pub correct: bool,
}

fn per_instance_line(r: &PerInstanceRow) -> String {
    format!(
        "{{\"model\":{},\"instance\":{},\"d\":{},\"ns\":{},\"e\":{},\"correct\":{}}}",
        json_str(&r.model),
        r.instance,
        fmt_sig(r.d),
        fmt_sig(r.ns),
        fmt_sig(r.e),
        r.correct,
    )
}

/// Streaming writer for the per-instance file.
pub struct PerInstanceWriter {
    writer: BufWriter<File>,
}

impl PerInstanceWriter {
    pub fn create(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(PER_INSTANCE_FILE);
        let file = File::create(&path)
            .map_err(|e| Error::Load(format!("cannot create {}: {e}", path.display())))?;
        Ok(Self {
            writer: BufWriter::new(file),
        })
    }

    pub fn write_row(&mut self, row: &PerInstanceRow) -> Result<()> {
        writeln!(self.writer, "{}", per_instance_line(row))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

/// Writes model summaries, the lambda-sweep ranking table and (optionally)
/// per-instance records into `out_dir`.
pub fn write_results(
    summaries: &[ModelSummary],
    rankings: &RankingTable,
    per_instance: Option<&[PerInstanceRow]>,
    out_dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    write_summaries(summaries, &out_dir.join(SUMMARIES_FILE))?;
    write_rankings(rankings, &out_dir.join(RANKINGS_FILE))?;
    if let Some(rows) = per_instance {
        let mut w = PerInstanceWriter::create(out_dir)?;
        for row in rows {
            w.write_row(row)?;
        }
        w.finish()?;
    }
    Ok(())
}

pub fn write_summaries(summaries: &[ModelSummary], path: &Path) -> Result<()> {
    let mut out = String::new();
    for s in summaries {
        out.push_str(&summary_line(s));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_rankings(rankings: &RankingTable, path: &Path) -> Result<()> {
    let mut out = String::new();
    for row in &rankings.rows {
        out.push_str(&ranking_line(row));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[derive(Deserialize)]
struct SummaryRowDe {
    model_id: String,
    count: usize,
    correct_count: usize,
    accuracy: f64,
    ece: f64,
    d_mean: f64,
    d_std: f64,
    d_cc_mean: f64,
    d_cc_std: f64,
    d_icc_mean: f64,
    d_icc_std: f64,
    ns_mean: f64,
    ns_std: f64,
    ns_cc_mean: f64,
    ns_cc_std: f64,
    ns_icc_mean: f64,
    ns_icc_std: f64,
    e_mean: f64,
    e_std: f64,
    e_cc_mean: f64,
    e_cc_std: f64,
    e_icc_mean: f64,
    e_icc_std: f64,
}

/// Reads a summaries file back into memory; writing the result again
/// reproduces the file byte for byte.
pub fn read_summaries(path: &Path) -> Result<Vec<ModelSummary>> {
    use crate::evaluator::{MetricStats, Stats};
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let r: SummaryRowDe = serde_json::from_str(line)?;
        let stats = |mean: f64, std: f64| Stats { mean, std };
        out.push(ModelSummary {
            model_id: r.model_id,
            count: r.count,
            correct_count: r.correct_count,
            accuracy: r.accuracy,
            ece: r.ece,
            d: MetricStats {
                overall: stats(r.d_mean, r.d_std),
                correct: stats(r.d_cc_mean, r.d_cc_std),
                incorrect: stats(r.d_icc_mean, r.d_icc_std),
            },
            ns: MetricStats {
                overall: stats(r.ns_mean, r.ns_std),
                correct: stats(r.ns_cc_mean, r.ns_cc_std),
                incorrect: stats(r.ns_icc_mean, r.ns_icc_std),
            },
            e: MetricStats {
                overall: stats(r.e_mean, r.e_std),
                correct: stats(r.e_cc_mean, r.e_cc_std),
                incorrect: stats(r.e_icc_mean, r.e_icc_std),
            },
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct RankingRowDe {
    lambda: f64,
    ranking: Vec<String>,
    e_means: Vec<f64>,
    d_means: Vec<f64>,
    ns_means: Vec<f64>,
}

pub fn read_rankings(path: &Path) -> Result<RankingTable> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let r: RankingRowDe = serde_json::from_str(line)?;
        let entries = r
            .ranking
            .into_iter()
            .enumerate()
            .map(|(i, model_id)| RankedModel {
                model_id,
                e_mean: r.e_means[i],
                d_mean: r.d_means[i],
                ns_mean: r.ns_means[i],
            })
            .collect();
        rows.push(RankingRow {
            lambda: r.lambda,
            entries,
        });
    }
    Ok(RankingTable { rows })
}

#[derive(Deserialize)]
struct PerInstanceRowDe {
    model: String,
    instance: u64,
    d: f64,
    ns: f64,
    e: f64,
    correct: bool,
}

pub fn read_per_instance(path: &Path) -> Result<Vec<PerInstanceRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let r: PerInstanceRowDe = serde_json::from_str(line)?;
        out.push(PerInstanceRow {
            model: r.model,
            instance: r.instance,
            d: r.d,
            ns: r.ns,
            e: r.e,
            correct: r.correct,
        });
    }
    Ok(out)
}

/// A quarantined instance.
#[derive(Debug, Clone)]
pub struct FailureNote {
    pub model_id: String,
    pub instance_id: u64,
    pub row: Option<usize>,
    pub message: String,
}

/// Outcome of evaluating a manifest's models over a labels file.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summaries: Vec<ModelSummary>,
    pub total_records: usize,
    pub failed_records: usize,
    /// First few failures, for reporting.
    pub failures: Vec<FailureNote>,
    /// Mass records whose focal lists do not cover every singleton.
    pub singleton_warnings: usize,
}

impl RunOutcome {
    pub fn failure_fraction(&self) -> f64 {
        if self.total_records == 0 {
            0.0
        } else {
            self.failed_records as f64 / self.total_records as f64
        }
    }
}

const MAX_REPORTED_FAILURES: usize = 20;

/// Evaluates every model in the manifest against the labels, streaming one
/// record at a time. Malformed rows and per-instance evaluation errors are
/// quarantined and counted instead of aborting the run; a model whose every
/// instance fails aborts with the underlying error.
pub fn run_models(
    manifests: &[ModelManifest],
    labels: &[usize],
    cfg: &EvalConfig,
    mut per_instance: Option<&mut PerInstanceWriter>,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut outcome = RunOutcome {
        summaries: Vec::with_capacity(manifests.len()),
        total_records: 0,
        failed_records: 0,
        failures: Vec::new(),
        singleton_warnings: 0,
    };

    for manifest in manifests {
        let space = LabelSpace::new(manifest.num_classes)?;
        let mut acc = SummaryAccumulator::new(&manifest.model_id);
        let mut stream = load_predictions(manifest)?;
        let note_failure = |outcome: &mut RunOutcome, instance_id, row, message: String| {
            outcome.failed_records += 1;
            if outcome.failures.len() < MAX_REPORTED_FAILURES {
                outcome.failures.push(FailureNote {
                    model_id: manifest.model_id.clone(),
                    instance_id,
                    row,
                    message,
                });
            }
        };

        loop {
            let item = match stream.next() {
                None => break,
                Some(item) => item,
            };
            outcome.total_records += 1;
            let record = match item {
                Ok(r) => r,
                Err(Error::Row { row, message }) => {
                    note_failure(&mut outcome, 0, Some(row), message);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let label = match labels.get(record.instance_id as usize) {
                Some(&l) => l,
                None => {
                    note_failure(
                        &mut outcome,
                        record.instance_id,
                        None,
                        format!(
                            "instance_id {} has no label (labels file has {} lines)",
                            record.instance_id,
                            labels.len()
                        ),
                    );
                    continue;
                }
            };
            if label >= manifest.num_classes {
                note_failure(
                    &mut outcome,
                    record.instance_id,
                    None,
                    format!(
                        "label {label} is out of range for {} classes",
                        manifest.num_classes
                    ),
                );
                continue;
            }
            let y = GroundTruth::new(space.clone(), label);
            match evaluate_instance_budgeted(&record, &y, cfg, manifest.budget) {
                Ok(r) => {
                    if let Some(w) = per_instance.as_deref_mut() {
                        w.write_row(&PerInstanceRow {
                            model: manifest.model_id.clone(),
                            instance: r.instance_id,
                            d: r.d,
                            ns: r.ns,
                            e: r.e,
                            correct: r.correct,
                        })?;
                    }
                    acc.push(&r);
                }
                Err(e) => {
                    note_failure(&mut outcome, record.instance_id, None, e.to_string());
                }
            }
        }
        outcome.singleton_warnings += stream.singleton_warnings();
        if acc.count() == 0 {
            let cause = outcome
                .failures
                .iter()
                .rev()
                .find(|f| f.model_id == manifest.model_id)
                .map(|f| f.message.clone())
                .unwrap_or_else(|| "predictions file is empty".into());
            return Err(Error::Load(format!(
                "model {:?}: no instance survived evaluation; last failure: {cause}",
                manifest.model_id
            )));
        }
        outcome.summaries.push(acc.finish()?);
    }
    Ok(outcome)
}

/// Evaluates the manifest and writes summaries plus a one-row ranking at
/// the configured lambda.
pub fn evaluate_to_dir(
    manifests: &[ModelManifest],
    labels: &[usize],
    cfg: &EvalConfig,
    per_instance: bool,
    out_dir: &Path,
) -> Result<RunOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let mut writer = if per_instance {
        Some(PerInstanceWriter::create(out_dir)?)
    } else {
        None
    };
    let outcome = run_models(manifests, labels, cfg, writer.as_mut())?;
    if let Some(w) = writer {
        w.finish()?;
    }
    let rankings = rank_models(&outcome.summaries, &[cfg.lambda]);
    write_summaries(&outcome.summaries, &out_dir.join(SUMMARIES_FILE))?;
    write_rankings(&rankings, &out_dir.join(RANKINGS_FILE))?;
    Ok(outcome)
}

/// Evaluates the manifest and writes summaries plus the ranking table over
/// a lambda grid. Summaries use the last grid value as their trade-off.
pub fn rank_to_dir(
    manifests: &[ModelManifest],
    labels: &[usize],
    cfg: &EvalConfig,
    lambdas: &[f64],
    out_dir: &Path,
) -> Result<RunOutcome> {
    if lambdas.is_empty() {
        return Err(Error::Contract("lambda grid is empty".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut cfg = cfg.clone();
    cfg.lambda = *lambdas.last().unwrap();
    let outcome = run_models(manifests, labels, &cfg, None)?;
    let rankings = rank_models(&outcome.summaries, lambdas);
    write_summaries(&outcome.summaries, &out_dir.join(SUMMARIES_FILE))?;
    write_rankings(&rankings, &out_dir.join(RANKINGS_FILE))?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, content).unwrap();
        path
    }

    #[test]
    fn fmt_sig_reference_values() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(0.564619), "0.564619");
        assert_eq!(fmt_sig(1.0), "1.00000");
        assert_eq!(fmt_sig(2.26950), "2.26950");
        assert_eq!(fmt_sig(0.1), "0.100000");
        assert_eq!(fmt_sig(1234.5649), "1234.56");
        assert_eq!(fmt_sig(0.000207944), "0.000207944");
        assert_eq!(fmt_sig(-0.25), "-0.250000");
        assert_eq!(fmt_sig(1.5e-7), "1.50000e-7");
        assert_eq!(fmt_sig(2.5e7), "2.50000e7");
        assert_eq!(fmt_sig(-1e-30), "-1.00000e-30");
    }

    #[test]
    fn manifest_roundtrip_and_validation() {
        let dir = TempDir::new().unwrap();
        write_file(dir.path(), "preds.jsonl", "{\"instance_id\":0,\"point\":[0.5,0.5]}\n");
        let manifest = write_file(
            dir.path(),
            "manifest.json",
            r#"{"models":[{"model_id":"m1","encoding":"point","num_classes":2,"predictions_path":"preds.jsonl"}]}"#,
        );
        let models = load_manifest(&manifest).unwrap();
        assert_eq!(models.len(), 1);
        assert_eq!(models[0].encoding, Encoding::Point);
        assert!(models[0].predictions_path.is_file());
    }

    #[test]
    fn manifest_rejects_unknown_encoding() {
        let dir = TempDir::new().unwrap();
        write_file(dir.path(), "p.jsonl", "");
        let manifest = write_file(
            dir.path(),
            "manifest.json",
            r#"{"models":[{"model_id":"m1","encoding":"ensembles","num_classes":2,"predictions_path":"p.jsonl"}]}"#,
        );
        let err = load_manifest(&manifest).unwrap_err();
        assert!(err.to_string().contains("unknown encoding"));
    }

    #[test]
    fn manifest_accepts_mixed_class_counts() {
        let dir = TempDir::new().unwrap();
        write_file(dir.path(), "a.jsonl", "");
        write_file(dir.path(), "b.jsonl", "");
        let manifest = write_file(
            dir.path(),
            "manifest.json",
            r#"{"models":[
                {"model_id":"a","encoding":"point","num_classes":10,"predictions_path":"a.jsonl"},
                {"model_id":"b","encoding":"point","num_classes":100,"predictions_path":"b.jsonl"}
            ]}"#,
        );
        assert_eq!(load_manifest(&manifest).unwrap().len(), 2);
    }

    #[test]
    fn manifest_rejects_missing_file_and_bad_budget() {
        let dir = TempDir::new().unwrap();
        let manifest = write_file(
            dir.path(),
            "manifest.json",
            r#"{"models":[{"model_id":"m","encoding":"point","num_classes":2,"predictions_path":"nope.jsonl"}]}"#,
        );
        assert!(load_manifest(&manifest).unwrap_err().to_string().contains("m"));

        write_file(dir.path(), "s.jsonl", "");
        let manifest = write_file(
            dir.path(),
            "manifest2.json",
            r#"{"models":[{"model_id":"m","encoding":"samples","num_classes":5,"predictions_path":"s.jsonl","budget":3}]}"#,
        );
        assert!(load_manifest(&manifest).is_err());
    }

    fn samples_manifest(dir: &Path, body: &str) -> ModelManifest {
        let path = write_file(dir, "preds.jsonl", body);
        ModelManifest {
            model_id: "m".into(),
            encoding: Encoding::Samples,
            num_classes: 2,
            predictions_path: path,
            budget: None,
            num_samples: None,
        }
    }

    #[test]
    fn stream_parses_samples_and_checks_order() {
        let dir = TempDir::new().unwrap();
        let m = samples_manifest(
            dir.path(),
            "{\"instance_id\":0,\"samples\":[[0.7,0.3],[0.4,0.6]]}\n{\"instance_id\":1,\"samples\":[[1.0,0.0]]}\n",
        );
        let records: Result<Vec<_>> = load_predictions(&m).unwrap().collect();
        let records = records.unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].instance_id, 0);

        let m = samples_manifest(
            dir.path(),
            "{\"instance_id\":1,\"samples\":[[1.0,0.0]]}\n{\"instance_id\":0,\"samples\":[[1.0,0.0]]}\n",
        );
        let records: Vec<_> = load_predictions(&m).unwrap().collect();
        assert!(records[1].is_err());
    }

    #[test]
    fn stream_reports_row_numbers() {
        let dir = TempDir::new().unwrap();
        let m = samples_manifest(
            dir.path(),
            "{\"instance_id\":0,\"samples\":[[0.7,0.3]]}\n{\"instance_id\":1,\"samples\":[[0.9,0.3]]}\n",
        );
        let records: Vec<_> = load_predictions(&m).unwrap().collect();
        match &records[1] {
            Err(Error::Row { row, message }) => {
                assert_eq!(*row, 2);
                assert!(message.contains("sums"));
            }
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn interval_rows_reject_inverted_bounds() {
        let dir = TempDir::new().unwrap();
        let path = write_file(
            dir.path(),
            "iv.jsonl",
            "{\"instance_id\":0,\"lower\":[0.8,0.1],\"upper\":[0.4,0.9]}\n",
        );
        let m = ModelManifest {
            model_id: "iv".into(),
            encoding: Encoding::Intervals,
            num_classes: 2,
            predictions_path: path,
            budget: None,
            num_samples: None,
        };
        let records: Vec<_> = load_predictions(&m).unwrap().collect();
        assert!(matches!(&records[0], Err(Error::Row { row: 1, .. })));
    }

    #[test]
    fn mass_rows_validate_bitmask_and_count_singleton_warnings() {
        let dir = TempDir::new().unwrap();
        let path = write_file(
            dir.path(),
            "mass.jsonl",
            "{\"instance_id\":0,\"focal\":[[4,1.0]]}\n",
        );
        let m = ModelManifest {
            model_id: "bf".into(),
            encoding: Encoding::Masses,
            num_classes: 2,
            predictions_path: path,
            budget: None,
            num_samples: None,
        };
        let records: Vec<_> = load_predictions(&m).unwrap().collect();
        assert!(matches!(&records[0], Err(Error::Row { row: 1, .. })));

        let path = write_file(
            dir.path(),
            "mass2.jsonl",
            "{\"instance_id\":0,\"focal\":[[3,1.0]]}\n",
        );
        let m = ModelManifest {
            model_id: "bf".into(),
            encoding: Encoding::Masses,
            num_classes: 2,
            predictions_path: path,
            budget: None,
            num_samples: None,
        };
        let mut stream = load_predictions(&m).unwrap();
        assert!(stream.next().unwrap().is_ok());
        assert_eq!(stream.singleton_warnings(), 1);
    }

    #[test]
    fn declared_sample_count_is_enforced() {
        let dir = TempDir::new().unwrap();
        let path = write_file(
            dir.path(),
            "s.jsonl",
            "{\"instance_id\":0,\"samples\":[[0.7,0.3],[0.4,0.6]]}\n{\"instance_id\":1,\"samples\":[[1.0,0.0]]}\n",
        );
        let m = ModelManifest {
            model_id: "m".into(),
            encoding: Encoding::Samples,
            num_classes: 2,
            predictions_path: path,
            budget: None,
            num_samples: Some(2),
        };
        let records: Vec<_> = load_predictions(&m).unwrap().collect();
        assert!(records[0].is_ok());
        match &records[1] {
            Err(Error::Row { row: 2, message }) => assert!(message.contains("expected 2 samples")),
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn mass_rows_reject_empty_set_mass() {
        let dir = TempDir::new().unwrap();
        let path = write_file(
            dir.path(),
            "m.jsonl",
            "{\"instance_id\":0,\"focal\":[[0,0.5],[3,0.5]]}\n",
        );
        let m = ModelManifest {
            model_id: "m".into(),
            encoding: Encoding::Masses,
            num_classes: 2,
            predictions_path: path,
            budget: None,
            num_samples: None,
        };
        let records: Vec<_> = load_predictions(&m).unwrap().collect();
        match &records[0] {
            Err(Error::Row { row: 1, message }) => assert!(message.contains("empty set")),
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn results_roundtrip_byte_identical() {
        use crate::evaluator::{MetricStats, Stats};
        let dir = TempDir::new().unwrap();
        let summary = ModelSummary {
            model_id: "fixture".into(),
            count: 2,
            correct_count: 1,
            accuracy: 0.5,
            ece: 0.25,
            d: MetricStats {
                overall: Stats { mean: 0.356675, std: 0.0 },
                correct: Stats { mean: 0.356675, std: 0.0 },
                incorrect: Stats::default(),
            },
            ns: MetricStats {
                overall: Stats { mean: 0.207944, std: 0.0 },
                correct: Stats { mean: 0.207944, std: 0.0 },
                incorrect: Stats::default(),
            },
            e: MetricStats {
                overall: Stats { mean: 0.564619, std: 0.0 },
                correct: Stats { mean: 0.564619, std: 0.0 },
                incorrect: Stats::default(),
            },
        };
        let rankings = rank_models(std::slice::from_ref(&summary), &[0.5, 1.0]);
        let rows = vec![PerInstanceRow {
            model: "fixture".into(),
            instance: 0,
            d: 0.356675,
            ns: 0.207944,
            e: 0.564619,
            correct: true,
        }];
        write_results(&[summary], &rankings, Some(&rows), dir.path()).unwrap();

        let s1 = std::fs::read(dir.path().join(SUMMARIES_FILE)).unwrap();
        let r1 = std::fs::read(dir.path().join(RANKINGS_FILE)).unwrap();
        let p1 = std::fs::read(dir.path().join(PER_INSTANCE_FILE)).unwrap();

        let summaries = read_summaries(&dir.path().join(SUMMARIES_FILE)).unwrap();
        let rankings2 = read_rankings(&dir.path().join(RANKINGS_FILE)).unwrap();
        let rows2 = read_per_instance(&dir.path().join(PER_INSTANCE_FILE)).unwrap();
        write_results(&summaries, &rankings2, Some(&rows2), dir.path()).unwrap();

        assert_eq!(s1, std::fs::read(dir.path().join(SUMMARIES_FILE)).unwrap());
        assert_eq!(r1, std::fs::read(dir.path().join(RANKINGS_FILE)).unwrap());
        assert_eq!(p1, std::fs::read(dir.path().join(PER_INSTANCE_FILE)).unwrap());
    }
}

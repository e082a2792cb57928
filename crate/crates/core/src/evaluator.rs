//! Per-instance evaluation metric, test-set aggregation with correct /
//! incorrect splits, lambda sweeps and model ranking, accuracy and ECE.
//!
//! The metric for one instance is `E = d + lambda * NS`: a divergence from
//! the ground truth to the nearest credal-set vertex plus a weighted
//! imprecision term. Point predictions have `NS = 0`, so `E` reduces to the
//! plain divergence whatever the trade-off.

use crate::credal::{
    credal_width, full_family, intervals_from_samples, lower_prob_from_samples,
    select_budget_subsets, vertices_approx, vertices_exact, CredalVertices, IntervalPrediction,
    SampleSet,
};
use crate::divergence::{
    min_divergence_to_vertices_clamped, DivergenceKind, GroundTruth, DEFAULT_EPSILON,
};
use crate::error::{Error, Result};
use crate::io::{PredictionPayload, PredictionRecord};
use crate::setfn::{belief, mobius_inverse, pignistic, plausibility, LabelSpace, MassFunction};
use crate::uncertainty::{credal_uncertainty, ns_dubois, ns_korner, ns_smets};

/// Number of equal-width confidence bins in the ECE estimator.
pub const ECE_BINS: usize = 15;

/// Which non-specificity measure feeds the metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsKind {
    Dubois,
    Smets,
    Korner,
    CredalUncertainty,
}

/// Whether credal-set vertices are enumerated exactly or approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexMode {
    Exact,
    Approximate,
}

/// Evaluation settings shared by a whole run.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub lambda: f64,
    pub divergence: DivergenceKind,
    pub ns: NsKind,
    pub vertex_mode: VertexMode,
    pub log_base: f64,
    pub epsilon: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            divergence: DivergenceKind::Kl,
            ns: NsKind::Dubois,
            vertex_mode: VertexMode::Approximate,
            log_base: std::f64::consts::E,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl EvalConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        let cfg = Self {
            lambda,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return Err(Error::Contract(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 || self.epsilon > 1e-6 {
            return Err(Error::Contract(format!(
                "epsilon must lie in (0, 1e-6], got {}",
                self.epsilon
            )));
        }
        if self.log_base.is_nan() || self.log_base <= 1.0 {
            return Err(Error::Contract(format!(
                "log base must exceed 1, got {}",
                self.log_base
            )));
        }
        Ok(())
    }

    /// Converts a value measured in nats into the configured base.
    pub fn from_nats(&self, value: f64) -> f64 {
        if self.log_base == std::f64::consts::E {
            value
        } else {
            value / self.log_base.ln()
        }
    }
}

/// One scored test instance.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    pub instance_id: u64,
    /// Divergence to the nearest vertex, in the configured base.
    pub d: f64,
    /// Non-specificity, in the configured base. Zero for point predictions.
    pub ns: f64,
    /// `d + lambda * ns`.
    pub e: f64,
    pub correct: bool,
    pub predicted_class: usize,
    pub nearest_vertex_index: usize,
    /// Vertex spread of the predicted class.
    pub credal_width: f64,
    /// Max coordinate of the point summary; feeds the ECE estimator.
    pub confidence: f64,
}

/// Scores one prediction against its label with the full-powerset subset
/// family for sample sets.
pub fn evaluate_instance(
    pred: &PredictionRecord,
    y: &GroundTruth,
    cfg: &EvalConfig,
) -> Result<EvaluationRecord> {
    evaluate_instance_budgeted(pred, y, cfg, None)
}

/// Scores one prediction, restricting sample-derived lower probabilities to
/// a budgeted subset family of the given size when one is supplied.
pub fn evaluate_instance_budgeted(
    pred: &PredictionRecord,
    y: &GroundTruth,
    cfg: &EvalConfig,
    budget: Option<usize>,
) -> Result<EvaluationRecord> {
    cfg.validate()?;
    let space = y.space();
    let summary = point_summary(pred, space)?;
    let predicted_class = argmax_lowest(&summary);
    let confidence = summary[predicted_class];
    let correct = predicted_class == y.true_class();

    let (d_nats, ns_nats, nearest_vertex_index, width) = match &pred.payload {
        PredictionPayload::Point(p) => {
            let one_hot = y.one_hot();
            let d = match cfg.divergence {
                DivergenceKind::Kl => {
                    crate::divergence::kl_divergence_clamped(&one_hot, p, cfg.epsilon)
                }
                DivergenceKind::Js => {
                    crate::divergence::js_divergence_clamped(&one_hot, p, cfg.epsilon)
                }
            };
            (d, 0.0, 0, 0.0)
        }
        PredictionPayload::Samples(rows) => {
            let s = SampleSet::new(space.clone(), rows.clone())?;
            let family = match budget {
                Some(b) => select_budget_subsets(&s, b)?,
                None => full_family(space)?,
            };
            let lp = lower_prob_from_samples(&s, &family)?;
            let m = mobius_inverse(&lp)?;
            let v = vertices(&m, cfg.vertex_mode)?;
            let (d, idx) =
                min_divergence_to_vertices_clamped(y, &v, cfg.divergence, cfg.epsilon);
            let ns = match cfg.ns {
                NsKind::CredalUncertainty => credal_uncertainty(&intervals_from_samples(&s))?,
                kind => ns_of_mass(kind, &m)?,
            };
            (d, ns, idx, credal_width(&v, predicted_class))
        }
        PredictionPayload::Intervals { lower, upper } => {
            let ip = IntervalPrediction::new(space.clone(), lower.clone(), upper.clone())?;
            let lp = crate::credal::interval_envelope(&ip)?;
            let m = mobius_inverse(&lp)?;
            let v = vertices(&m, cfg.vertex_mode)?;
            let (d, idx) =
                min_divergence_to_vertices_clamped(y, &v, cfg.divergence, cfg.epsilon);
            let ns = match cfg.ns {
                NsKind::CredalUncertainty => credal_uncertainty(&ip)?,
                kind => ns_of_mass(kind, &m)?,
            };
            (d, ns, idx, credal_width(&v, predicted_class))
        }
        PredictionPayload::Masses(pairs) => {
            let m = mass_from_pairs(space, pairs)?;
            let v = vertices(&m, cfg.vertex_mode)?;
            let (d, idx) =
                min_divergence_to_vertices_clamped(y, &v, cfg.divergence, cfg.epsilon);
            let ns = match cfg.ns {
                NsKind::CredalUncertainty => credal_uncertainty(&singleton_intervals(&m))?,
                kind => ns_of_mass(kind, &m)?,
            };
            (d, ns, idx, credal_width(&v, predicted_class))
        }
    };

    let d = cfg.from_nats(d_nats);
    let ns = cfg.from_nats(ns_nats);
    Ok(EvaluationRecord {
        instance_id: pred.instance_id,
        d,
        ns,
        e: d + cfg.lambda * ns,
        correct,
        predicted_class,
        nearest_vertex_index,
        credal_width: width,
        confidence,
    })
}

fn vertices(m: &MassFunction, mode: VertexMode) -> Result<CredalVertices> {
    match mode {
        VertexMode::Exact => vertices_exact(m),
        VertexMode::Approximate => vertices_approx(m),
    }
}

fn ns_of_mass(kind: NsKind, m: &MassFunction) -> Result<f64> {
    match kind {
        NsKind::Dubois => Ok(ns_dubois(m)),
        NsKind::Smets => ns_smets(m),
        NsKind::Korner => Ok(ns_korner(m)),
        NsKind::CredalUncertainty => unreachable!("handled per encoding"),
    }
}

/// Per-class belief/plausibility bounds of a mass function, the interval
/// representation used for credal uncertainty of mass predictions.
fn singleton_intervals(m: &MassFunction) -> IntervalPrediction {
    let space = m.space().clone();
    let n = space.num_classes();
    let lower: Vec<f64> = (0..n).map(|i| belief(m, space.singleton(i))).collect();
    let upper: Vec<f64> = (0..n)
        .map(|i| plausibility(m, space.singleton(i)).clamp(0.0, 1.0))
        .collect();
    IntervalPrediction::new(space, lower, upper)
        .expect("belief/plausibility of singletons are valid bounds")
}

pub(crate) fn mass_from_pairs(space: &LabelSpace, pairs: &[(u64, f64)]) -> Result<MassFunction> {
    let full = space.full_set().bits();
    let mut total = 0.0;
    for &(bits, mass) in pairs {
        if bits & !full != 0 {
            return Err(Error::Contract(format!(
                "focal bitmask {bits:#b} exceeds the label space"
            )));
        }
        if mass < 0.0 {
            return Err(Error::Contract(format!("negative mass {mass}")));
        }
        total += mass;
    }
    if total <= 0.0 {
        return Err(Error::Degenerate("mass total is zero".into()));
    }
    if (total - 1.0).abs() > crate::credal::SAMPLE_SUM_TOL {
        return Err(Error::Contract(format!(
            "masses sum to {total}, expected 1"
        )));
    }
    MassFunction::new(
        space.clone(),
        pairs
            .iter()
            .map(|&(bits, mass)| (crate::setfn::SubsetMask::from_bits(bits), mass / total)),
    )
}

/// The single-vector summary of a prediction: the point itself, the sample
/// mean, the pignistic transform of a mass, or normalized interval
/// midpoints.
pub fn point_summary(pred: &PredictionRecord, space: &LabelSpace) -> Result<Vec<f64>> {
    let n = space.num_classes();
    let check_len = |len: usize| -> Result<()> {
        if len != n {
            return Err(Error::Contract(format!(
                "prediction has {len} classes, label space has {n}"
            )));
        }
        Ok(())
    };
    match &pred.payload {
        PredictionPayload::Point(p) => {
            check_len(p.len())?;
            crate::credal::validate_probability_row(p, n).map_err(Error::Contract)?;
            Ok(p.clone())
        }
        PredictionPayload::Samples(rows) => {
            let s = SampleSet::new(space.clone(), rows.clone())?;
            Ok(s.mean())
        }
        PredictionPayload::Intervals { lower, upper } => {
            check_len(lower.len())?;
            check_len(upper.len())?;
            let mids: Vec<f64> = lower.iter().zip(upper).map(|(&l, &u)| 0.5 * (l + u)).collect();
            let sum: f64 = mids.iter().sum();
            if sum <= 0.0 {
                return Ok(vec![1.0 / n as f64; n]);
            }
            Ok(mids.into_iter().map(|m| m / sum).collect())
        }
        PredictionPayload::Masses(pairs) => {
            let m = mass_from_pairs(space, pairs)?;
            Ok(pignistic(&m))
        }
    }
}

/// Class the model is taken to predict: the argmax of the point summary,
/// ties to the lowest index.
pub fn predicted_class(pred: &PredictionRecord, space: &LabelSpace) -> Result<usize> {
    Ok(argmax_lowest(&point_summary(pred, space)?))
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Population mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
}

/// Statistics overall and split by correctly / incorrectly classified.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricStats {
    pub overall: Stats,
    pub correct: Stats,
    pub incorrect: Stats,
}

/// Aggregated scores for one model over a test set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub model_id: String,
    pub count: usize,
    pub correct_count: usize,
    pub accuracy: f64,
    pub ece: f64,
    pub d: MetricStats,
    pub ns: MetricStats,
    pub e: MetricStats,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn stats(&self) -> Stats {
        if self.n == 0 {
            return Stats::default();
        }
        let mean = self.sum / self.n as f64;
        let var = (self.sum_sq / self.n as f64 - mean * mean).max(0.0);
        Stats { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct SplitMoments {
    overall: Moments,
    correct: Moments,
    incorrect: Moments,
}

impl SplitMoments {
    fn push(&mut self, x: f64, correct: bool) {
        self.overall.push(x);
        if correct {
            self.correct.push(x);
        } else {
            self.incorrect.push(x);
        }
    }

    fn stats(&self) -> MetricStats {
        MetricStats {
            overall: self.overall.stats(),
            correct: self.correct.stats(),
            incorrect: self.incorrect.stats(),
        }
    }
}

/// Streaming aggregator: holds only counters and the ECE bins, so whole
/// test sets never need to be resident.
#[derive(Debug, Clone)]
pub struct SummaryAccumulator {
    model_id: String,
    d: SplitMoments,
    ns: SplitMoments,
    e: SplitMoments,
    count: usize,
    correct_count: usize,
    bin_count: [usize; ECE_BINS],
    bin_confidence: [f64; ECE_BINS],
    bin_correct: [usize; ECE_BINS],
}

impl SummaryAccumulator {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            d: SplitMoments::default(),
            ns: SplitMoments::default(),
            e: SplitMoments::default(),
            count: 0,
            correct_count: 0,
            bin_count: [0; ECE_BINS],
            bin_confidence: [0.0; ECE_BINS],
            bin_correct: [0; ECE_BINS],
        }
    }

    pub fn push(&mut self, record: &EvaluationRecord) {
        self.count += 1;
        if record.correct {
            self.correct_count += 1;
        }
        self.d.push(record.d, record.correct);
        self.ns.push(record.ns, record.correct);
        self.e.push(record.e, record.correct);
        let bin = ece_bin(record.confidence);
        self.bin_count[bin] += 1;
        self.bin_confidence[bin] += record.confidence;
        if record.correct {
            self.bin_correct[bin] += 1;
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(self) -> Result<ModelSummary> {
        if self.count == 0 {
            return Err(Error::Contract(format!(
                "model {:?} produced no evaluated instances",
                self.model_id
            )));
        }
        let total = self.count as f64;
        let mut ece = 0.0;
        for b in 0..ECE_BINS {
            if self.bin_count[b] == 0 {
                continue;
            }
            let nb = self.bin_count[b] as f64;
            let acc = self.bin_correct[b] as f64 / nb;
            let conf = self.bin_confidence[b] / nb;
            ece += nb / total * (acc - conf).abs();
        }
        Ok(ModelSummary {
            model_id: self.model_id,
            count: self.count,
            correct_count: self.correct_count,
            accuracy: self.correct_count as f64 / total,
            ece,
            d: self.d.stats(),
            ns: self.ns.stats(),
            e: self.e.stats(),
        })
    }
}

/// Bins are right-inclusive: bin k covers (k/15, (k+1)/15], with zero
/// confidence landing in the first bin.
fn ece_bin(confidence: f64) -> usize {
    let scaled = (confidence * ECE_BINS as f64).ceil() as isize - 1;
    scaled.clamp(0, ECE_BINS as isize - 1) as usize
}

/// Folds a record list into a model summary. Errors on an empty list.
pub fn aggregate(model_id: &str, records: &[EvaluationRecord]) -> Result<ModelSummary> {
    let mut acc = SummaryAccumulator::new(model_id);
    for r in records {
        acc.push(r);
    }
    acc.finish()
}

/// Binned expected calibration error over explicit confidence / correctness
/// pairs.
pub fn expected_calibration_error(confidences: &[f64], correct: &[bool]) -> f64 {
    assert_eq!(
        confidences.len(),
        correct.len(),
        "confidence and correctness lists must have equal length"
    );
    let mut bin_count = [0usize; ECE_BINS];
    let mut bin_confidence = [0.0f64; ECE_BINS];
    let mut bin_correct = [0usize; ECE_BINS];
    for (&c, &ok) in confidences.iter().zip(correct) {
        assert!((0.0..=1.0).contains(&c), "confidence {c} outside [0, 1]");
        let b = ece_bin(c);
        bin_count[b] += 1;
        bin_confidence[b] += c;
        if ok {
            bin_correct[b] += 1;
        }
    }
    let total: usize = bin_count.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let mut ece = 0.0;
    for b in 0..ECE_BINS {
        if bin_count[b] == 0 {
            continue;
        }
        let nb = bin_count[b] as f64;
        let acc = bin_correct[b] as f64 / nb;
        let conf = bin_confidence[b] / nb;
        ece += nb / total as f64 * (acc - conf).abs();
    }
    ece
}

/// One model's entry in a ranking row.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedModel {
    pub model_id: String,
    pub e_mean: f64,
    pub d_mean: f64,
    pub ns_mean: f64,
}

/// Models ordered by ascending mean metric at one trade-off value.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingRow {
    pub lambda: f64,
    pub entries: Vec<RankedModel>,
}

/// The lambda-sweep ranking table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankingTable {
    pub rows: Vec<RankingRow>,
}

/// Ranks models at each trade-off value by `mean d + lambda * mean NS`
/// (equal to the mean per-instance metric by linearity), ties broken
/// alphabetically by model id. All summaries must come from runs sharing
/// the divergence and non-specificity configuration.
pub fn rank_models(summaries: &[ModelSummary], lambdas: &[f64]) -> RankingTable {
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let mut entries: Vec<RankedModel> = summaries
            .iter()
            .map(|s| RankedModel {
                model_id: s.model_id.clone(),
                e_mean: s.d.overall.mean + lambda * s.ns.overall.mean,
                d_mean: s.d.overall.mean,
                ns_mean: s.ns.overall.mean,
            })
            .collect();
        entries.sort_by(|a, b| {
            a.e_mean
                .total_cmp(&b.e_mean)
                .then_with(|| a.model_id.cmp(&b.model_id))
        });
        rows.push(RankingRow { lambda, entries });
    }
    RankingTable { rows }
}

/// Inclusive arithmetic grid `start, start + step, ...` up to `stop`.
pub fn lambda_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || start < 0.0 || stop < start {
        return Err(Error::Contract(format!(
            "invalid lambda grid {start}:{stop}:{step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

/// The default sweep: 0.1 through 1.0 in steps of 0.1.
pub fn default_lambda_grid() -> Vec<f64> {
    lambda_grid(0.1, 1.0, 0.1).expect("default grid is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-9;

    fn space(n: usize) -> LabelSpace {
        LabelSpace::new(n).unwrap()
    }

    fn cfg(lambda: f64) -> EvalConfig {
        EvalConfig::new(lambda).unwrap()
    }

    fn samples_record() -> PredictionRecord {
        PredictionRecord {
            instance_id: 0,
            payload: PredictionPayload::Samples(vec![vec![0.7, 0.3], vec![0.4, 0.6]]),
        }
    }

    #[test]
    fn fixture_samples_end_to_end() {
        let y = GroundTruth::new(space(2), 0);
        let r = evaluate_instance(&samples_record(), &y, &cfg(1.0)).unwrap();
        assert!((r.d - 0.356675).abs() < 1e-6);
        assert!((r.ns - 0.207944).abs() < 1e-6);
        assert!((r.e - 0.564619).abs() < 1e-6);
        assert!(r.correct);
        assert_eq!(r.predicted_class, 0);
        assert!((r.confidence - 0.55).abs() < EPS);
        assert!((r.credal_width - 0.3).abs() < EPS);
    }

    #[test]
    fn perfect_point_prediction_scores_zero() {
        let pred = PredictionRecord {
            instance_id: 3,
            payload: PredictionPayload::Point(vec![1.0, 0.0]),
        };
        let y = GroundTruth::new(space(2), 0);
        for lambda in [0.0, 0.5, 2.0] {
            let r = evaluate_instance(&pred, &y, &cfg(lambda)).unwrap();
            assert_eq!(r.d, 0.0);
            assert_eq!(r.ns, 0.0);
            assert_eq!(r.e, 0.0);
            assert_eq!(r.credal_width, 0.0);
        }
    }

    #[test]
    fn mass_fixture_with_wrong_label() {
        let pred = PredictionRecord {
            instance_id: 1,
            payload: PredictionPayload::Masses(vec![(0b01, 0.4), (0b10, 0.3), (0b11, 0.3)]),
        };
        let y = GroundTruth::new(space(2), 1);
        let mut c = cfg(0.5);
        c.vertex_mode = VertexMode::Exact;
        let r = evaluate_instance(&pred, &y, &c).unwrap();
        assert!((r.d - 0.510826).abs() < 1e-6);
        assert!((r.ns - 0.207944).abs() < 1e-6);
        assert!((r.e - 0.614798).abs() < 1e-6);
        assert!(!r.correct);
        assert_eq!(r.predicted_class, 0);
        assert_eq!(r.nearest_vertex_index, 1);
    }

    #[test]
    fn interval_record_uses_envelope_path() {
        let pred = PredictionRecord {
            instance_id: 0,
            payload: PredictionPayload::Intervals {
                lower: vec![0.4, 0.3],
                upper: vec![0.7, 0.6],
            },
        };
        let y = GroundTruth::new(space(2), 0);
        let r = evaluate_instance(&pred, &y, &cfg(1.0)).unwrap();
        assert!((r.d - 0.356675).abs() < 1e-6);
        assert!((r.ns - 0.207944).abs() < 1e-6);

        let mut c = cfg(1.0);
        c.ns = NsKind::CredalUncertainty;
        let r = evaluate_instance(&pred, &y, &c).unwrap();
        assert!((r.ns - 0.082283).abs() < 1e-6);
    }

    #[test]
    fn infeasible_intervals_error_per_instance() {
        let pred = PredictionRecord {
            instance_id: 0,
            payload: PredictionPayload::Intervals {
                lower: vec![0.6, 0.6],
                upper: vec![0.8, 0.8],
            },
        };
        let y = GroundTruth::new(space(2), 0);
        assert!(matches!(
            evaluate_instance(&pred, &y, &cfg(1.0)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn budgeted_samples_route() {
        let rows: Vec<Vec<f64>> = vec![vec![0.5, 0.45, 0.05], vec![0.48, 0.48, 0.04]];
        let pred = PredictionRecord {
            instance_id: 0,
            payload: PredictionPayload::Samples(rows),
        };
        let y = GroundTruth::new(space(3), 0);
        let r = evaluate_instance_budgeted(&pred, &y, &cfg(1.0), Some(5)).unwrap();
        assert!(r.d >= 0.0 && r.ns >= 0.0);
    }

    #[test]
    fn predicted_class_rules() {
        let s = space(3);
        let p = PredictionRecord {
            instance_id: 0,
            payload: PredictionPayload::Point(vec![1.0 / 3.0; 3]),
        };
        assert_eq!(predicted_class(&p, &s).unwrap(), 0);

        let m = PredictionRecord {
            instance_id: 0,
            payload: PredictionPayload::Masses(vec![(0b01, 0.4), (0b10, 0.3), (0b11, 0.3)]),
        };
        assert_eq!(predicted_class(&m, &space(2)).unwrap(), 0);

        let sam = samples_record();
        assert_eq!(predicted_class(&sam, &space(2)).unwrap(), 0);

        let iv = PredictionRecord {
            instance_id: 0,
            payload: PredictionPayload::Intervals {
                lower: vec![0.1, 0.3],
                upper: vec![0.3, 0.9],
            },
        };
        assert_eq!(predicted_class(&iv, &space(2)).unwrap(), 1);
    }

    #[test]
    fn aggregate_single_and_pair() {
        let mk = |d: f64, ns: f64, e: f64, correct: bool| EvaluationRecord {
            instance_id: 0,
            d,
            ns,
            e,
            correct,
            predicted_class: 0,
            nearest_vertex_index: 0,
            credal_width: 0.0,
            confidence: 1.0,
        };
        let s = aggregate("m", &[mk(0.4, 0.1, 0.5, true)]).unwrap();
        assert_eq!(s.d.overall.mean, 0.4);
        assert_eq!(s.d.overall.std, 0.0);
        assert_eq!(s.accuracy, 1.0);

        let s = aggregate("m", &[mk(0.0, 0.0, 0.2, true), mk(0.0, 0.0, 0.4, false)]).unwrap();
        assert!((s.e.overall.mean - 0.3).abs() < EPS);
        assert!((s.e.overall.std - 0.1).abs() < EPS);
        assert_eq!(s.correct_count, 1);
        assert_eq!(s.count, 2);
    }

    #[test]
    fn aggregate_rejects_empty() {
        assert!(aggregate("m", &[]).is_err());
    }

    #[test]
    fn ece_reference_values() {
        assert_eq!(expected_calibration_error(&[1.0; 4], &[true; 4]), 0.0);
        assert_eq!(expected_calibration_error(&[1.0; 4], &[false; 4]), 1.0);
        let conf = [0.9; 5];
        let correct = [true, true, true, true, false];
        assert!((expected_calibration_error(&conf, &correct) - 0.1).abs() < EPS);
    }

    #[test]
    fn ece_bins_are_right_inclusive() {
        assert_eq!(ece_bin(0.0), 0);
        assert_eq!(ece_bin(1.0 / 15.0), 0);
        assert_eq!(ece_bin(1.0 / 15.0 + 1e-12), 1);
        assert_eq!(ece_bin(1.0), 14);
    }

    #[test]
    fn ranking_sorts_by_mean_and_breaks_ties_alphabetically() {
        let mk = |id: &str, d: f64, ns: f64| ModelSummary {
            model_id: id.into(),
            count: 1,
            correct_count: 1,
            accuracy: 1.0,
            ece: 0.0,
            d: MetricStats {
                overall: Stats { mean: d, std: 0.0 },
                ..Default::default()
            },
            ns: MetricStats {
                overall: Stats { mean: ns, std: 0.0 },
                ..Default::default()
            },
            e: MetricStats::default(),
        };
        let summaries = vec![mk("b", 0.2, 0.0), mk("a", 0.2, 0.0), mk("c", 0.1, 1.0)];
        let table = rank_models(&summaries, &[0.0, 1.0]);
        let ids: Vec<&str> = table.rows[0].entries.iter().map(|e| e.model_id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
        let ids: Vec<&str> = table.rows[1].entries.iter().map(|e| e.model_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn lambda_grid_is_inclusive() {
        let grid = lambda_grid(0.1, 1.0, 0.1).unwrap();
        assert_eq!(grid.len(), 10);
        assert!((grid[0] - 0.1).abs() < 1e-12);
        assert!((grid[9] - 1.0).abs() < 1e-12);
        assert!(lambda_grid(0.5, 0.1, 0.1).is_err());
        assert_eq!(lambda_grid(0.5, 0.5, 0.1).unwrap(), vec![0.5]);
    }

    #[test]
    fn config_validation() {
        assert!(EvalConfig::new(-0.1).is_err());
        let c = EvalConfig { epsilon: 1e-3, ..EvalConfig::default() };
        assert!(c.validate().is_err());
        let c = EvalConfig { log_base: 1.0, ..EvalConfig::default() };
        assert!(c.validate().is_err());
        let c = EvalConfig { log_base: 2.0, ..EvalConfig::default() };
        assert!(c.validate().is_ok());
        assert!((c.from_nats(std::f64::consts::LN_2) - 1.0).abs() < EPS);
    }
}

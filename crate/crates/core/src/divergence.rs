//! Distance component of the evaluation metric: KL and JS divergences
//! between the one-hot ground truth and the nearest credal-set vertex.
//!
//! All divergences are in nats. Denominators are clamped below at
//! [`DEFAULT_EPSILON`] so one-hot targets against vertices with zero
//! coordinates stay finite.

use crate::credal::CredalVertices;
use crate::setfn::LabelSpace;

/// Default clamp applied to divergence denominators.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// The distance measure used between ground truth and prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    Kl,
    Js,
}

/// The true class of one test instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    space: LabelSpace,
    true_class: usize,
}

impl GroundTruth {
    pub fn new(space: LabelSpace, true_class: usize) -> Self {
        assert!(
            true_class < space.num_classes(),
            "true class {true_class} out of range for {} classes",
            space.num_classes()
        );
        Self { space, true_class }
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    pub fn true_class(&self) -> usize {
        self.true_class
    }

    pub fn one_hot(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.space.num_classes()];
        v[self.true_class] = 1.0;
        v
    }
}

/// Kullback-Leibler divergence `sum p ln(p/q)` with `0 ln 0 == 0` and the
/// default denominator clamp.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    kl_divergence_clamped(p, q, DEFAULT_EPSILON)
}

/// KL divergence with an explicit denominator clamp.
pub fn kl_divergence_clamped(p: &[f64], q: &[f64], epsilon: f64) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must have equal length");
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            d += pi * (pi / qi.max(epsilon)).ln();
        }
    }
    d.max(0.0)
}

/// Jensen-Shannon divergence, the symmetrized KL to the midpoint mixture.
/// Bounded by ln 2.
pub fn js_divergence(p: &[f64], q: &[f64]) -> f64 {
    js_divergence_clamped(p, q, DEFAULT_EPSILON)
}

/// JS divergence with an explicit denominator clamp.
pub fn js_divergence_clamped(p: &[f64], q: &[f64], epsilon: f64) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must have equal length");
    let mid: Vec<f64> = p.iter().zip(q).map(|(&a, &b)| 0.5 * (a + b)).collect();
    0.5 * kl_divergence_clamped(p, &mid, epsilon) + 0.5 * kl_divergence_clamped(q, &mid, epsilon)
}

/// Minimum divergence from the one-hot ground truth to any vertex, plus the
/// index of the nearest vertex (ties go to the lowest index).
pub fn min_divergence_to_vertices(
    y: &GroundTruth,
    v: &CredalVertices,
    kind: DivergenceKind,
) -> (f64, usize) {
    min_divergence_to_vertices_clamped(y, v, kind, DEFAULT_EPSILON)
}

/// As [`min_divergence_to_vertices`] with an explicit denominator clamp.
pub fn min_divergence_to_vertices_clamped(
    y: &GroundTruth,
    v: &CredalVertices,
    kind: DivergenceKind,
    epsilon: f64,
) -> (f64, usize) {
    assert!(!v.is_empty(), "vertex list must be nonempty");
    let one_hot = y.one_hot();
    let mut best = f64::INFINITY;
    let mut best_index = 0;
    for (i, vertex) in v.vertices().iter().enumerate() {
        let d = match kind {
            DivergenceKind::Kl => kl_divergence_clamped(&one_hot, vertex, epsilon),
            DivergenceKind::Js => js_divergence_clamped(&one_hot, vertex, epsilon),
        };
        if d < best {
            best = d;
            best_index = i;
        }
    }
    (best, best_index)
}

/// Scaling factor for the trade-off parameter when switching divergence
/// kinds: the ratio of the maximum observed KL to the maximum observed JS.
/// A lambda tuned for KL maps to `lambda / factor` for JS. Returns 1 when
/// either slice is empty or its maximum is not positive.
pub fn lambda_rescale_factor(kl_values: &[f64], js_values: &[f64]) -> f64 {
    let max_kl = kl_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_js = js_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max_kl <= 0.0 || max_js <= 0.0 {
        return 1.0;
    }
    max_kl / max_js
}

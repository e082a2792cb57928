//! Building credal sets from every prediction encoding: lower probabilities
//! from prediction samples, budgeted subset selection, exact and approximate
//! vertex enumeration, interval-based credal sets, and credal width.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::setfn::{
    mobius_inverse, LabelSpace, LowerProbability, MassFunction, SubsetMask, DENSE_POWERSET_CAP,
};

/// Largest class count for exact N! vertex enumeration.
pub const EXACT_VERTEX_CAP: usize = 8;

/// Two vertices closer than this in max-norm are duplicates.
pub const VERTEX_DEDUP_TOL: f64 = 1e-9;

/// Per-sample probability vectors must sum to 1 this tightly.
pub const SAMPLE_SUM_TOL: f64 = 1e-6;

/// Cumulative-probability threshold for budgeted subset selection.
pub const BUDGET_PREFIX_MASS: f64 = 0.95;

/// A set of K predicted probability vectors for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    space: LabelSpace,
    samples: Vec<Vec<f64>>,
}

impl SampleSet {
    pub fn new(space: LabelSpace, samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Contract("sample set must be nonempty".into()));
        }
        for (k, s) in samples.iter().enumerate() {
            validate_probability_row(s, space.num_classes())
                .map_err(|e| Error::Contract(format!("sample {k}: {e}")))?;
        }
        Ok(Self { space, samples })
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Per-class mean over the samples.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.space.num_classes();
        let mut mean = vec![0.0; n];
        for s in &self.samples {
            for (m, &p) in mean.iter_mut().zip(s) {
                *m += p;
            }
        }
        let k = self.samples.len() as f64;
        for m in &mut mean {
            *m /= k;
        }
        mean
    }
}

/// Checks a vector is a probability distribution of the expected length.
pub(crate) fn validate_probability_row(row: &[f64], n: usize) -> std::result::Result<(), String> {
    if row.len() != n {
        return Err(format!("expected {n} entries, got {}", row.len()));
    }
    for (i, &p) in row.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(format!("negative or non-finite probability {p} at class {i}"));
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > SAMPLE_SUM_TOL {
        return Err(format!("row sums to {sum}, expected 1 within {SAMPLE_SUM_TOL}"));
    }
    Ok(())
}

/// Per-class probability bounds for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPrediction {
    space: LabelSpace,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl IntervalPrediction {
    /// Validates `0 <= lower_c <= upper_c <= 1` per class. Feasibility of
    /// the whole interval set (`sum lower <= 1 <= sum upper`) is checked by
    /// the operations that need it, so infeasible rows can still be loaded
    /// and quarantined per instance.
    pub fn new(space: LabelSpace, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = space.num_classes();
        if lower.len() != n || upper.len() != n {
            return Err(Error::Contract(format!(
                "expected {n} lower and upper bounds, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for i in 0..n {
            let (l, u) = (lower[i], upper[i]);
            if !l.is_finite() || !u.is_finite() || l < 0.0 || u > 1.0 || l > u {
                return Err(Error::Contract(format!(
                    "class {i}: bounds [{l}, {u}] are not within [0, 1] with lower <= upper"
                )));
            }
        }
        Ok(Self { space, lower, upper })
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// True when some probability vector satisfies all the bounds.
    pub fn is_feasible(&self) -> bool {
        let sl: f64 = self.lower.iter().sum();
        let su: f64 = self.upper.iter().sum();
        sl <= 1.0 + SAMPLE_SUM_TOL && su >= 1.0 - SAMPLE_SUM_TOL
    }

    pub(crate) fn ensure_feasible(&self) -> Result<()> {
        if self.is_feasible() {
            Ok(())
        } else {
            Err(Error::Infeasible(format!(
                "lower bounds sum to {}, upper bounds to {}",
                self.lower.iter().sum::<f64>(),
                self.upper.iter().sum::<f64>()
            )))
        }
    }
}

/// How a vertex list was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    Approximate,
    Native,
}

/// The extreme points of a credal set, deduplicated within
/// [`VERTEX_DEDUP_TOL`] in max-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct CredalVertices {
    space: LabelSpace,
    vertices: Vec<Vec<f64>>,
    provenance: Provenance,
}

impl CredalVertices {
    pub fn new(space: LabelSpace, vertices: Vec<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Contract("vertex list must be nonempty".into()));
        }
        for v in &vertices {
            validate_probability_row(v, space.num_classes()).map_err(Error::Contract)?;
        }
        let vertices = dedup_vertices(vertices);
        Ok(Self { space, vertices, provenance })
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

const PAIRWISE_DEDUP_CAP: usize = 512;

fn close(u: &[f64], v: &[f64]) -> bool {
    u.iter()
        .zip(v)
        .all(|(a, b)| (a - b).abs() <= VERTEX_DEDUP_TOL)
}

fn dedup_vertices(mut vertices: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    if vertices.len() <= PAIRWISE_DEDUP_CAP {
        // Pairwise pass, preserving first-occurrence order.
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if !out.iter().any(|u| close(u, &v)) {
                out.push(v);
            }
        }
        return out;
    }
    // Large permutation sets: lexicographic sort puts float-identical
    // copies next to each other, then one adjacent pass collapses them.
    vertices.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vertices {
        if out.last().is_some_and(|u| close(u, &v)) {
            continue;
        }
        out.push(v);
    }
    out
}

/// Lower probability of every subset in `family` as the minimum over the
/// samples of the subset's probability. The family must contain the full
/// set and all singletons; the full set gets lower probability exactly 1.
pub fn lower_prob_from_samples(s: &SampleSet, family: &[SubsetMask]) -> Result<LowerProbability> {
    let space = s.space().clone();
    let full = space.full_set();
    if family.is_empty() || !family.contains(&full) {
        return Err(Error::Contract(
            "family must be nonempty and contain the full set".into(),
        ));
    }
    for i in 0..space.num_classes() {
        if !family.contains(&space.singleton(i)) {
            return Err(Error::Contract(format!(
                "family must contain every singleton, missing class {i}"
            )));
        }
    }

    let n = space.num_classes();
    let dense = n <= DENSE_POWERSET_CAP && family.len() as u64 >= (1u64 << n) - 1;
    let mut entries: Vec<(SubsetMask, f64)> = Vec::with_capacity(family.len());
    if dense {
        // Subset-sum DP per sample, then a pointwise min-fold.
        let size = 1usize << n;
        let mut mins = vec![f64::INFINITY; size];
        mins[0] = 0.0;
        let mut sums = vec![0.0f64; size];
        for sample in s.samples() {
            for m in 1..size {
                let low = m & m.wrapping_neg();
                sums[m] = sums[m ^ low] + sample[low.trailing_zeros() as usize];
            }
            for m in 1..size {
                if sums[m] < mins[m] {
                    mins[m] = sums[m];
                }
            }
        }
        for &mask in family {
            entries.push((mask, mins[mask.bits() as usize].clamp(0.0, 1.0)));
        }
    } else {
        for &mask in family {
            let mut min = f64::INFINITY;
            for sample in s.samples() {
                let p: f64 = mask.members().map(|i| sample[i]).sum();
                if p < min {
                    min = p;
                }
            }
            entries.push((mask, min.clamp(0.0, 1.0)));
        }
    }
    for e in &mut entries {
        if e.0 == full {
            e.1 = 1.0;
        }
    }
    LowerProbability::new(space, entries)
}

/// The full-powerset family for `space` (capped at
/// [`DENSE_POWERSET_CAP`] classes).
pub fn full_family(space: &LabelSpace) -> Result<Vec<SubsetMask>> {
    space.nonempty_subsets()
}

/// Selects a budgeted subset family: all singletons and the full set, plus
/// up to `budget - N - 1` of the most frequent high-probability prefix sets
/// found in the samples. For each sample, classes are sorted by descending
/// probability and the shortest prefix with cumulative probability at least
/// [`BUDGET_PREFIX_MASS`] is collected; prefixes are ranked by frequency,
/// ties broken by smaller bit pattern. Deterministic given inputs.
pub fn select_budget_subsets(s: &SampleSet, budget: usize) -> Result<Vec<SubsetMask>> {
    let space = s.space();
    let n = space.num_classes();
    if budget < n + 1 {
        return Err(Error::Contract(format!(
            "budget {budget} is below the minimum {} (singletons plus the full set)",
            n + 1
        )));
    }

    let mut family: Vec<SubsetMask> = (0..n).map(|i| space.singleton(i)).collect();
    family.push(space.full_set());

    let mut counts: Vec<(SubsetMask, usize)> = Vec::new();
    for sample in s.samples() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            sample[b]
                .partial_cmp(&sample[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut prefix = SubsetMask::EMPTY;
        let mut cum = 0.0;
        for &c in &order {
            prefix = prefix.with(c);
            cum += sample[c];
            if cum >= BUDGET_PREFIX_MASS {
                break;
            }
        }
        if prefix.cardinality() <= 1 || prefix == space.full_set() {
            continue;
        }
        match counts.iter_mut().find(|(m, _)| *m == prefix) {
            Some((_, c)) => *c += 1,
            None => counts.push((prefix, 1)),
        }
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.bits().cmp(&b.0.bits())));
    family.extend(counts.into_iter().take(budget - n - 1).map(|(m, _)| m));
    family.sort_by_key(|m| (m.cardinality(), m.bits()));
    Ok(family)
}

fn permutation_vertex(m: &MassFunction, order: &[usize]) -> Vec<f64> {
    let n = m.space().num_classes();
    let mut vertex = vec![0.0; n];
    let focal: Vec<(u64, f64)> = m.focal_iter().map(|(s, v)| (s.bits(), v)).collect();
    let mut seen: u64 = 0;
    for &class in order {
        let bit = 1u64 << class;
        let mut acc = 0.0;
        for &(f, mass) in &focal {
            if f & bit != 0 && f & seen == 0 {
                acc += mass;
            }
        }
        vertex[class] = acc;
        seen |= bit;
    }
    vertex
}

/// All distinct extreme points of the credal set of `m`, one per
/// permutation of the classes: the class in each position receives the mass
/// of every focal subset containing it and no earlier class. Capped at
/// [`EXACT_VERTEX_CAP`] classes.
pub fn vertices_exact(m: &MassFunction) -> Result<CredalVertices> {
    let n = m.space().num_classes();
    if n > EXACT_VERTEX_CAP {
        return Err(Error::Capacity(format!(
            "exact enumeration of {n}! permutations exceeds the cap of {EXACT_VERTEX_CAP} classes; use vertices_approx"
        )));
    }
    let mut vertices = Vec::new();
    for order in (0..n).permutations(n) {
        vertices.push(permutation_vertex(m, &order));
    }
    CredalVertices::new(m.space().clone(), vertices, Provenance::Exact)
}

/// At most 2N extreme points of the credal set of `m`: for each class, the
/// permutation placing it first (its coordinate becomes the singleton
/// plausibility) and the one placing it last (its coordinate becomes the
/// singleton mass). Remaining classes keep ascending index order.
pub fn vertices_approx(m: &MassFunction) -> Result<CredalVertices> {
    let n = m.space().num_classes();
    let mut vertices = Vec::with_capacity(2 * n);
    let mut order = Vec::with_capacity(n);
    for c in 0..n {
        order.clear();
        order.push(c);
        order.extend((0..n).filter(|&i| i != c));
        vertices.push(permutation_vertex(m, &order));

        order.clear();
        order.extend((0..n).filter(|&i| i != c));
        order.push(c);
        vertices.push(permutation_vertex(m, &order));
    }
    CredalVertices::new(m.space().clone(), vertices, Provenance::Approximate)
}

/// The tightest lower probability reachable within the interval bounds:
/// `P(A) = max(sum of lower over A, 1 - sum of upper over the complement)`,
/// over the full powerset.
pub fn interval_envelope(ip: &IntervalPrediction) -> Result<LowerProbability> {
    ip.ensure_feasible()?;
    let space = ip.space().clone();
    let subsets = space.nonempty_subsets()?;
    let full = space.full_set();
    let entries: Vec<(SubsetMask, f64)> = subsets
        .into_iter()
        .map(|mask| {
            if mask == full {
                return (mask, 1.0);
            }
            let low: f64 = mask.members().map(|i| ip.lower()[i]).sum();
            let cap: f64 = 1.0 - mask.complement(&space).members().map(|i| ip.upper()[i]).sum::<f64>();
            (mask, low.max(cap).clamp(0.0, 1.0))
        })
        .collect();
    LowerProbability::new(space, entries)
}

/// Credal-set vertices of an interval prediction: envelope lower
/// probability, Möbius inverse, then exact vertex enumeration when the
/// class count allows it and the 2N approximation otherwise.
pub fn credal_from_intervals(ip: &IntervalPrediction) -> Result<CredalVertices> {
    let lp = interval_envelope(ip)?;
    let m = mobius_inverse(&lp)?;
    if ip.space().num_classes() <= EXACT_VERTEX_CAP {
        vertices_exact(&m)
    } else {
        vertices_approx(&m)
    }
}

/// Per-class min/max over the samples.
pub fn intervals_from_samples(s: &SampleSet) -> IntervalPrediction {
    let n = s.space().num_classes();
    let mut lower = vec![f64::INFINITY; n];
    let mut upper = vec![f64::NEG_INFINITY; n];
    for sample in s.samples() {
        for i in 0..n {
            lower[i] = lower[i].min(sample[i]);
            upper[i] = upper[i].max(sample[i]);
        }
    }
    for i in 0..n {
        lower[i] = lower[i].clamp(0.0, 1.0);
        upper[i] = upper[i].clamp(0.0, 1.0);
    }
    IntervalPrediction::new(s.space().clone(), lower, upper)
        .expect("per-class min/max of valid samples are valid bounds")
}

/// Spread of the credal set along one class: the difference between the
/// maximal and minimal vertex coordinate.
pub fn credal_width(v: &CredalVertices, class_index: usize) -> f64 {
    assert!(
        class_index < v.space().num_classes(),
        "class index out of range"
    );
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for vertex in v.vertices() {
        min = min.min(vertex[class_index]);
        max = max.max(vertex[class_index]);
    }
    (max - min).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setfn::belief;

    const EPS: f64 = 1e-9;

    fn space(n: usize) -> LabelSpace {
        LabelSpace::new(n).unwrap()
    }

    fn mask(bits: u64) -> SubsetMask {
        SubsetMask::from_bits(bits)
    }

    fn fixture_samples() -> SampleSet {
        SampleSet::new(space(2), vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap()
    }

    fn fixture_mass() -> MassFunction {
        MassFunction::new(space(2), [(mask(0b01), 0.4), (mask(0b10), 0.3), (mask(0b11), 0.3)])
            .unwrap()
    }

    #[test]
    fn lower_prob_from_fixture_samples() {
        let family = full_family(&space(2)).unwrap();
        let lp = lower_prob_from_samples(&fixture_samples(), &family).unwrap();
        assert!((lp.value(mask(0b01)).unwrap() - 0.4).abs() < EPS);
        assert!((lp.value(mask(0b10)).unwrap() - 0.3).abs() < EPS);
        assert_eq!(lp.value(mask(0b11)).unwrap(), 1.0);
    }

    #[test]
    fn single_sample_gives_precise_probability() {
        let s = SampleSet::new(space(3), vec![vec![0.5, 0.3, 0.2]]).unwrap();
        let family = full_family(&space(3)).unwrap();
        let lp = lower_prob_from_samples(&s, &family).unwrap();
        assert!((lp.value(mask(0b011)).unwrap() - 0.8).abs() < EPS);
        assert!((lp.value(mask(0b100)).unwrap() - 0.2).abs() < EPS);
    }

    #[test]
    fn conflicting_samples_give_vacuous_lower_probability() {
        let s = SampleSet::new(space(2), vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let family = full_family(&space(2)).unwrap();
        let lp = lower_prob_from_samples(&s, &family).unwrap();
        assert_eq!(lp.value(mask(0b01)).unwrap(), 0.0);
        assert_eq!(lp.value(mask(0b10)).unwrap(), 0.0);
        assert_eq!(lp.value(mask(0b11)).unwrap(), 1.0);
    }

    #[test]
    fn lower_prob_rejects_family_without_singletons() {
        let family = vec![space(2).full_set()];
        assert!(lower_prob_from_samples(&fixture_samples(), &family).is_err());
    }

    #[test]
    fn budget_family_with_wide_prefix_is_base_family() {
        // Prefix of (0.6, 0.3, 0.1) only reaches 0.95 at the full set, so no
        // extra subsets join the singletons and the full set.
        let s = SampleSet::new(space(3), vec![vec![0.6, 0.3, 0.1]]).unwrap();
        let family = select_budget_subsets(&s, 5).unwrap();
        let expected = vec![mask(0b001), mask(0b010), mask(0b100), mask(0b111)];
        assert_eq!(family, expected);
    }

    #[test]
    fn budget_family_collects_shared_prefix() {
        let s = SampleSet::new(
            space(3),
            vec![vec![0.5, 0.45, 0.05], vec![0.48, 0.48, 0.04]],
        )
        .unwrap();
        let family = select_budget_subsets(&s, 5).unwrap();
        let expected = vec![mask(0b001), mask(0b010), mask(0b100), mask(0b011), mask(0b111)];
        assert_eq!(family, expected);
    }

    #[test]
    fn budget_three_covers_binary_powerset() {
        let family = select_budget_subsets(&fixture_samples(), 3).unwrap();
        assert_eq!(family, vec![mask(0b01), mask(0b10), mask(0b11)]);
    }

    #[test]
    fn budget_below_minimum_is_rejected() {
        assert!(select_budget_subsets(&fixture_samples(), 2).is_err());
    }

    #[test]
    fn exact_vertices_of_fixture_mass() {
        let v = vertices_exact(&fixture_mass()).unwrap();
        assert_eq!(v.len(), 2);
        assert!(has_vertex(&v, &[0.7, 0.3]));
        assert!(has_vertex(&v, &[0.4, 0.6]));
    }

    #[test]
    fn exact_vertices_three_classes() {
        let m = MassFunction::new(
            space(3),
            [(mask(0b001), 0.5), (mask(0b011), 0.3), (mask(0b111), 0.2)],
        )
        .unwrap();
        let v = vertices_exact(&m).unwrap();
        assert_eq!(v.len(), 4);
        assert!(has_vertex(&v, &[1.0, 0.0, 0.0]));
        assert!(has_vertex(&v, &[0.5, 0.5, 0.0]));
        assert!(has_vertex(&v, &[0.8, 0.0, 0.2]));
        assert!(has_vertex(&v, &[0.5, 0.3, 0.2]));
    }

    #[test]
    fn bayesian_mass_collapses_to_single_vertex() {
        let m = MassFunction::bayesian(space(2), &[0.7, 0.3]).unwrap();
        let v = vertices_exact(&m).unwrap();
        assert_eq!(v.len(), 1);
        assert!(has_vertex(&v, &[0.7, 0.3]));
        let v = vertices_approx(&m).unwrap();
        assert_eq!(v.len(), 1);
    }

    #[test]
    fn exact_enumeration_capped() {
        let m = MassFunction::vacuous(space(9));
        let err = vertices_exact(&m).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
        assert!(err.to_string().contains("vertices_approx"));
    }

    #[test]
    fn approx_vertices_of_fixture_match_exact() {
        let v = vertices_approx(&fixture_mass()).unwrap();
        assert_eq!(v.len(), 2);
        assert!(has_vertex(&v, &[0.7, 0.3]));
        assert!(has_vertex(&v, &[0.4, 0.6]));
    }

    #[test]
    fn approx_vertices_of_vacuous_mass_are_simplex_corners() {
        let v = vertices_approx(&MassFunction::vacuous(space(3))).unwrap();
        assert_eq!(v.len(), 3);
        assert!(has_vertex(&v, &[1.0, 0.0, 0.0]));
        assert!(has_vertex(&v, &[0.0, 1.0, 0.0]));
        assert!(has_vertex(&v, &[0.0, 0.0, 1.0]));
    }

    #[test]
    fn approx_first_and_last_coordinates_hit_plausibility_and_mass() {
        use crate::setfn::plausibility;
        let m = MassFunction::new(
            space(4),
            [
                (mask(0b0011), 0.25),
                (mask(0b0101), 0.25),
                (mask(0b0001), 0.2),
                (mask(0b1111), 0.3),
            ],
        )
        .unwrap();
        let v = vertices_approx(&m).unwrap();
        for c in 0..4 {
            let pl = plausibility(&m, mask(1 << c));
            let max = v
                .vertices()
                .iter()
                .map(|p| p[c])
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((max - pl).abs() < EPS);
            let min = v.vertices().iter().map(|p| p[c]).fold(f64::INFINITY, f64::min);
            assert!((min - m.mass(mask(1 << c))).abs() < EPS);
        }
    }

    #[test]
    fn interval_fixture_envelope_and_vertices() {
        let ip = IntervalPrediction::new(space(2), vec![0.4, 0.3], vec![0.7, 0.6]).unwrap();
        let lp = interval_envelope(&ip).unwrap();
        assert!((lp.value(mask(0b01)).unwrap() - 0.4).abs() < EPS);
        assert!((lp.value(mask(0b10)).unwrap() - 0.3).abs() < EPS);
        let v = credal_from_intervals(&ip).unwrap();
        assert_eq!(v.len(), 2);
        assert!(has_vertex(&v, &[0.7, 0.3]));
        assert!(has_vertex(&v, &[0.4, 0.6]));
    }

    #[test]
    fn degenerate_interval_is_single_vertex() {
        let ip = IntervalPrediction::new(space(2), vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
        let v = credal_from_intervals(&ip).unwrap();
        assert_eq!(v.len(), 1);
        assert!(has_vertex(&v, &[0.5, 0.5]));
    }

    #[test]
    fn vacuous_interval_spans_simplex_corners() {
        let ip = IntervalPrediction::new(space(2), vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let v = credal_from_intervals(&ip).unwrap();
        assert_eq!(v.len(), 2);
        assert!(has_vertex(&v, &[1.0, 0.0]));
        assert!(has_vertex(&v, &[0.0, 1.0]));
    }

    #[test]
    fn infeasible_intervals_are_rejected() {
        let ip = IntervalPrediction::new(space(2), vec![0.6, 0.6], vec![0.7, 0.7]).unwrap();
        assert!(!ip.is_feasible());
        let err = credal_from_intervals(&ip).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn intervals_from_fixture_samples() {
        let ip = intervals_from_samples(&fixture_samples());
        assert_eq!(ip.lower(), &[0.4, 0.3]);
        assert_eq!(ip.upper(), &[0.7, 0.6]);

        let single = SampleSet::new(space(2), vec![vec![0.7, 0.3]]).unwrap();
        let ip = intervals_from_samples(&single);
        assert_eq!(ip.lower(), ip.upper());

        let conflicting =
            SampleSet::new(space(2), vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let ip = intervals_from_samples(&conflicting);
        assert_eq!(ip.lower(), &[0.0, 0.0]);
        assert_eq!(ip.upper(), &[1.0, 1.0]);
    }

    #[test]
    fn credal_width_on_fixtures() {
        let v = vertices_exact(&fixture_mass()).unwrap();
        assert!((credal_width(&v, 0) - 0.3).abs() < EPS);

        let single = vertices_exact(&MassFunction::bayesian(space(2), &[0.7, 0.3]).unwrap()).unwrap();
        assert_eq!(credal_width(&single, 0), 0.0);

        let vac = vertices_exact(&MassFunction::vacuous(space(3))).unwrap();
        assert!((credal_width(&vac, 1) - 1.0).abs() < EPS);
    }

    #[test]
    fn sample_pipeline_belief_reproduces_lower_probability() {
        let family = full_family(&space(2)).unwrap();
        let lp = lower_prob_from_samples(&fixture_samples(), &family).unwrap();
        let m = mobius_inverse(&lp).unwrap();
        for (mask, value) in lp.family() {
            assert!((belief(&m, mask) - value).abs() < EPS);
        }
    }

    fn has_vertex(v: &CredalVertices, expected: &[f64]) -> bool {
        v.vertices()
            .iter()
            .any(|p| p.iter().zip(expected).all(|(a, b)| (a - b).abs() < EPS))
    }
}

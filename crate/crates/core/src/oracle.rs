//! Brute-force reference implementations that independently verify the
//! optimized paths on small instances, plus the batched equivalence suite
//! behind `oracle --self-test`.
//!
//! Everything here is written for readability over speed and ships in the
//! artifact so downstream users can validate a build.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::credal::{
    lower_prob_from_samples, vertices_approx, vertices_exact, CredalVertices, IntervalPrediction,
    Provenance, SampleSet,
};
use crate::error::{Error, Result};
use crate::setfn::{mobius_inverse, LabelSpace, LowerProbability, MassFunction, SubsetMask};
use crate::uncertainty::{entropy_bounds, shannon_entropy, EntropyBounds};

/// Class-count cap for [`brute_lower_probability`].
pub const BRUTE_LOWER_PROB_CAP: usize = 12;

/// Class-count cap for [`brute_vertices`].
pub const BRUTE_VERTEX_CAP: usize = 6;

/// Class-count cap for [`brute_entropy_bounds`].
pub const BRUTE_ENTROPY_CAP: usize = 3;

/// Full-powerset lower probability of a sample set by direct enumeration:
/// every nonempty subset, every sample, explicit sums.
pub fn brute_lower_probability(s: &SampleSet) -> Result<LowerProbability> {
    let n = s.space().num_classes();
    if n > BRUTE_LOWER_PROB_CAP {
        return Err(Error::Capacity(format!(
            "brute-force lower probability supports at most {BRUTE_LOWER_PROB_CAP} classes, got {n}"
        )));
    }
    let mut entries = Vec::new();
    for bits in 1u64..(1u64 << n) {
        let mask = SubsetMask::from_bits(bits);
        let mut min = f64::INFINITY;
        for sample in s.samples() {
            let mut p = 0.0;
            for (i, &x) in sample.iter().enumerate() {
                if mask.contains(i) {
                    p += x;
                }
            }
            if p < min {
                min = p;
            }
        }
        if bits == (1u64 << n) - 1 {
            min = 1.0;
        }
        entries.push((mask, min.clamp(0.0, 1.0)));
    }
    LowerProbability::new(s.space().clone(), entries)
}

/// Exact credal-set vertices by walking every permutation of the classes
/// and, for each position, summing the masses of the focal subsets that
/// contain that class and none of the earlier ones.
pub fn brute_vertices(m: &MassFunction) -> Result<CredalVertices> {
    let n = m.space().num_classes();
    if n > BRUTE_VERTEX_CAP {
        return Err(Error::Capacity(format!(
            "brute-force vertex enumeration supports at most {BRUTE_VERTEX_CAP} classes, got {n}"
        )));
    }
    let mut vertices = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    loop {
        let mut vertex = vec![0.0; n];
        for (pos, &class) in order.iter().enumerate() {
            let mut acc = 0.0;
            for (focal, mass) in m.focal_iter() {
                if !focal.contains(class) {
                    continue;
                }
                let blocked = order[..pos].iter().any(|&earlier| focal.contains(earlier));
                if !blocked {
                    acc += mass;
                }
            }
            vertex[class] = acc;
        }
        vertices.push(vertex);
        if !next_permutation(&mut order) {
            break;
        }
    }
    CredalVertices::new(m.space().clone(), vertices, Provenance::Exact)
}

fn next_permutation(order: &mut [usize]) -> bool {
    let n = order.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && order[i - 1] >= order[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while order[j] <= order[i - 1] {
        j -= 1;
    }
    order.swap(i - 1, j);
    order[i..].reverse();
    true
}

/// Entropy bounds by grid search over the feasible region.
pub fn brute_entropy_bounds(ip: &IntervalPrediction, step: f64) -> Result<EntropyBounds> {
    let n = ip.space().num_classes();
    if n > BRUTE_ENTROPY_CAP {
        return Err(Error::Capacity(format!(
            "brute-force entropy bounds support at most {BRUTE_ENTROPY_CAP} classes, got {n}"
        )));
    }
    if !(1e-4..=1e-2).contains(&step) {
        return Err(Error::Contract(format!(
            "grid step {step} must lie in [1e-4, 1e-2]"
        )));
    }
    ip.ensure_feasible()?;

    let (lo, up) = (ip.lower(), ip.upper());
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut consider = |p: &[f64]| {
        let h = shannon_entropy(p);
        if h < min {
            min = h;
        }
        if h > max {
            max = h;
        }
    };

    if n == 2 {
        // The feasible region is the segment of first coordinates whose
        // remainder stays within the second class's bounds; its exact
        // endpoints are evaluated so vertex minima are not missed.
        let a_min = lo[0].max(1.0 - up[1]);
        let a_max = up[0].min(1.0 - lo[1]);
        let mut a = a_min;
        while a <= a_max + 1e-12 {
            let b = (1.0 - a).clamp(lo[1], up[1]);
            consider(&[a.clamp(lo[0], up[0]), b]);
            if a >= a_max {
                break;
            }
            a = (a + step).min(a_max);
        }
    } else {
        let a_min = lo[0].max(1.0 - up[1] - up[2]);
        let a_max = up[0].min(1.0 - lo[1] - lo[2]);
        if a_min > a_max + 1e-12 {
            return Err(Error::Infeasible(
                "grid search found no feasible point".into(),
            ));
        }
        // First-coordinate values where some polytope vertex can sit: the
        // range ends plus every pairing of a second-class bound with a
        // third-class bound.
        let mut a_values: Vec<f64> = Vec::new();
        for cand in [
            a_min,
            a_max,
            1.0 - lo[1] - lo[2],
            1.0 - lo[1] - up[2],
            1.0 - up[1] - lo[2],
            1.0 - up[1] - up[2],
        ] {
            if cand >= a_min - 1e-12 && cand <= a_max + 1e-12 {
                a_values.push(cand.clamp(a_min, a_max));
            }
        }
        let mut a = a_min;
        while a <= a_max + 1e-12 {
            a_values.push(a);
            if a >= a_max {
                break;
            }
            a = (a + step).min(a_max);
        }
        for &a in &a_values {
            let b_min = lo[1].max(1.0 - a - up[2]);
            let b_max = up[1].min(1.0 - a - lo[2]);
            if b_min > b_max + 1e-12 {
                continue;
            }
            let mut b = b_min;
            while b <= b_max + 1e-12 {
                let c = (1.0 - a - b).clamp(lo[2], up[2]);
                consider(&[a.clamp(lo[0], up[0]), b.clamp(lo[1], up[1]), c]);
                if b >= b_max {
                    break;
                }
                b = (b + step).min(b_max);
            }
        }
    }

    if !min.is_finite() {
        return Err(Error::Infeasible(
            "grid search found no feasible point".into(),
        ));
    }
    Ok(EntropyBounds { lower: min, upper: max })
}

/// Outcome of one self-test batch.
#[derive(Debug, Clone)]
pub struct BatchReport {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Outcome of the full self-test.
#[derive(Debug, Clone)]
pub struct SelfTestReport {
    pub batches: Vec<BatchReport>,
    pub elapsed_secs: f64,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.batches.iter().all(|b| b.passed)
    }
}

/// Runs the three oracle equivalence batches with a fixed seed:
///
/// 1. 500 random sample sets: the optimized pipeline (lower probabilities,
///    Möbius inverse, exact vertices) agrees with the brute-force
///    composition within 1e-9 per vertex coordinate.
/// 2. 200 random masses: every approximate vertex appears among the
///    brute-force vertices within 1e-9.
/// 3. 100 random interval predictions: entropy bounds agree with the grid
///    search at step 1e-3 within 1e-4.
///
/// `max_classes` caps the label-space sizes drawn for batches 1 and 2
/// (default 6, the brute-force vertex cap).
pub fn self_test(max_classes: usize) -> Result<SelfTestReport> {
    let start = Instant::now();
    let max_classes = max_classes.clamp(2, BRUTE_VERTEX_CAP);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_CAFE);
    let mut batches = Vec::new();

    // Batch 1: pipeline vs brute-force composition on sample sets.
    let mut max_err: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.gen_range(2..=max_classes);
        let k = rng.gen_range(1..=20);
        let s = random_sample_set(&mut rng, n, k)?;
        let fast_lp = lower_prob_from_samples(&s, &s.space().nonempty_subsets()?)?;
        let slow_lp = brute_lower_probability(&s)?;
        let fast = vertices_exact(&mobius_inverse(&fast_lp)?)?;
        let slow = brute_vertices(&mobius_inverse(&slow_lp)?)?;
        max_err = max_err.max(vertex_set_distance(&fast, &slow));
    }
    batches.push(BatchReport {
        name: "sample pipeline vs brute force",
        cases: 500,
        max_error: max_err,
        tolerance: 1e-9,
        passed: max_err <= 1e-9,
    });

    // Batch 2: approximate vertices are a subset of the brute-force set.
    let mut max_err: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=max_classes);
        let m = random_mass(&mut rng, n)?;
        let approx = vertices_approx(&m)?;
        let exact = brute_vertices(&m)?;
        for v in approx.vertices() {
            let nearest = exact
                .vertices()
                .iter()
                .map(|u| max_norm(u, v))
                .fold(f64::INFINITY, f64::min);
            max_err = max_err.max(nearest);
        }
    }
    batches.push(BatchReport {
        name: "approximate vertices within exact set",
        cases: 200,
        max_error: max_err,
        tolerance: 1e-9,
        passed: max_err <= 1e-9,
    });

    // Batch 3: entropy bounds vs grid search.
    let mut max_err: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=BRUTE_ENTROPY_CAP);
        let ip = random_intervals(&mut rng, n)?;
        let fast = entropy_bounds(&ip)?;
        let slow = brute_entropy_bounds(&ip, 1e-3)?;
        max_err = max_err.max((fast.lower - slow.lower).abs());
        max_err = max_err.max((fast.upper - slow.upper).abs());
    }
    batches.push(BatchReport {
        name: "entropy bounds vs grid search",
        cases: 100,
        max_error: max_err,
        tolerance: 1e-4,
        passed: max_err <= 1e-4,
    });

    Ok(SelfTestReport {
        batches,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

fn max_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Greatest distance from any vertex of one set to the nearest vertex of
/// the other, in either direction.
fn vertex_set_distance(a: &CredalVertices, b: &CredalVertices) -> f64 {
    let one_way = |from: &CredalVertices, to: &CredalVertices| -> f64 {
        from.vertices()
            .iter()
            .map(|v| {
                to.vertices()
                    .iter()
                    .map(|u| max_norm(u, v))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// A random probability vector via normalized exponentials.
pub(crate) fn random_simplex_point(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n)
        .map(|_| -(rng.gen_range(1e-12f64..1.0)).ln())
        .collect();
    let sum: f64 = p.iter().sum();
    for x in &mut p {
        *x /= sum;
    }
    p
}

pub(crate) fn random_sample_set(rng: &mut impl Rng, n: usize, k: usize) -> Result<SampleSet> {
    let samples = (0..k).map(|_| random_simplex_point(rng, n)).collect();
    SampleSet::new(LabelSpace::new(n)?, samples)
}

/// A random mass function with up to eight focal subsets.
pub(crate) fn random_mass(rng: &mut impl Rng, n: usize) -> Result<MassFunction> {
    let space = LabelSpace::new(n)?;
    let all = (1u64 << n) - 1;
    let focal_count = rng.gen_range(1..=8usize.min(all as usize));
    let weights = random_simplex_point(rng, focal_count);
    let entries: Vec<(SubsetMask, f64)> = weights
        .into_iter()
        .map(|w| (SubsetMask::from_bits(rng.gen_range(1..=all)), w))
        .collect();
    MassFunction::new(space, entries)
}

/// Random feasible intervals built around a cloud of simplex points, so the
/// credal set is guaranteed nonempty.
pub(crate) fn random_intervals(rng: &mut impl Rng, n: usize) -> Result<IntervalPrediction> {
    let k = rng.gen_range(1..=6);
    let cloud: Vec<Vec<f64>> = (0..k).map(|_| random_simplex_point(rng, n)).collect();
    let mut lower = vec![1.0f64; n];
    let mut upper = vec![0.0f64; n];
    for p in &cloud {
        for i in 0..n {
            lower[i] = lower[i].min(p[i]);
            upper[i] = upper[i].max(p[i]);
        }
    }
    for i in 0..n {
        lower[i] = (lower[i] - rng.gen_range(0.0..0.05)).max(0.0);
        upper[i] = (upper[i] + rng.gen_range(0.0..0.05)).min(1.0);
    }
    IntervalPrediction::new(LabelSpace::new(n)?, lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-9;

    fn space(n: usize) -> LabelSpace {
        LabelSpace::new(n).unwrap()
    }

    fn mask(bits: u64) -> SubsetMask {
        SubsetMask::from_bits(bits)
    }

    #[test]
    fn brute_lower_probability_matches_fixture() {
        let s = SampleSet::new(space(2), vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        let lp = brute_lower_probability(&s).unwrap();
        assert!((lp.value(mask(0b01)).unwrap() - 0.4).abs() < EPS);
        assert!((lp.value(mask(0b10)).unwrap() - 0.3).abs() < EPS);
        assert_eq!(lp.value(mask(0b11)).unwrap(), 1.0);

        let fast = lower_prob_from_samples(&s, &space(2).nonempty_subsets().unwrap()).unwrap();
        assert_eq!(lp, fast);
    }

    #[test]
    fn brute_lower_probability_ignores_duplicates() {
        let s1 = SampleSet::new(space(3), vec![vec![0.5, 0.3, 0.2]]).unwrap();
        let s2 = SampleSet::new(space(3), vec![vec![0.5, 0.3, 0.2]; 3]).unwrap();
        assert_eq!(
            brute_lower_probability(&s1).unwrap(),
            brute_lower_probability(&s2).unwrap()
        );
    }

    #[test]
    fn brute_vertices_matches_hand_traced_fixture() {
        let m = MassFunction::new(
            space(3),
            [(mask(0b001), 0.5), (mask(0b011), 0.3), (mask(0b111), 0.2)],
        )
        .unwrap();
        let v = brute_vertices(&m).unwrap();
        assert_eq!(v.len(), 4);
        let fast = vertices_exact(&m).unwrap();
        assert!(vertex_set_distance(&v, &fast) < EPS);
    }

    #[test]
    fn brute_vertices_degenerate_cases() {
        let bayes = MassFunction::bayesian(space(3), &[0.5, 0.3, 0.2]).unwrap();
        assert_eq!(brute_vertices(&bayes).unwrap().len(), 1);
        let vac = MassFunction::vacuous(space(3));
        assert_eq!(brute_vertices(&vac).unwrap().len(), 3);
    }

    #[test]
    fn caps_are_enforced() {
        let s = random_sample_set(&mut ChaCha8Rng::seed_from_u64(1), 13, 2).unwrap();
        assert!(matches!(
            brute_lower_probability(&s),
            Err(Error::Capacity(_))
        ));
        let m = MassFunction::vacuous(space(7));
        assert!(matches!(brute_vertices(&m), Err(Error::Capacity(_))));
        let ip = IntervalPrediction::new(space(4), vec![0.0; 4], vec![1.0; 4]).unwrap();
        assert!(matches!(
            brute_entropy_bounds(&ip, 1e-3),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn brute_entropy_bounds_on_fixture() {
        let ip = IntervalPrediction::new(space(2), vec![0.4, 0.3], vec![0.7, 0.6]).unwrap();
        let b = brute_entropy_bounds(&ip, 1e-3).unwrap();
        assert!((b.upper - std::f64::consts::LN_2).abs() < 1e-4);
        assert!((b.lower - 0.610864).abs() < 1e-4);

        let p = vec![0.6, 0.4];
        let ip = IntervalPrediction::new(space(2), p.clone(), p.clone()).unwrap();
        let b = brute_entropy_bounds(&ip, 1e-3).unwrap();
        assert!((b.lower - shannon_entropy(&p)).abs() < 1e-9);
        assert!((b.upper - shannon_entropy(&p)).abs() < 1e-9);

        let ip = IntervalPrediction::new(space(2), vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let b = brute_entropy_bounds(&ip, 1e-3).unwrap();
        assert!(b.lower.abs() < 1e-4);
        assert!((b.upper - std::f64::consts::LN_2).abs() < 1e-4);
    }

    #[test]
    fn quick_self_test_passes() {
        let report = self_test(3).unwrap();
        assert!(report.passed(), "{:?}", report.batches);
    }
}

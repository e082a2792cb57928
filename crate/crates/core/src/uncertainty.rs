//! Imprecision and uncertainty measures: Dubois-Prade non-specificity (the
//! default), the Smets, Körner and Pal measures, credal uncertainty from
//! entropy bounds over interval predictions, and sample-level entropy and
//! mutual-information utilities.
//!
//! Everything is reported in nats; callers needing another base divide by
//! the log of that base.

use std::collections::BTreeSet;

use crate::credal::{IntervalPrediction, SampleSet};
use crate::error::{Error, Result};
use crate::setfn::{MassFunction, SubsetMask, DENSE_POWERSET_CAP};

/// Largest class count for exact minimum-entropy vertex enumeration.
pub const EXACT_MIN_ENTROPY_CAP: usize = 10;

/// Largest focal-set cardinality the sparse Smets sum will expand.
const SMETS_FOCAL_CAP: usize = 20;

/// Lower and upper Shannon entropy over a credal set, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Dubois-Prade non-specificity: mass-weighted log cardinality of the focal
/// subsets. Zero exactly on Bayesian masses, `ln N` on the vacuous mass.
pub fn ns_dubois(m: &MassFunction) -> f64 {
    m.focal_iter()
        .map(|(mask, mass)| mass * (mask.cardinality() as f64).ln())
        .sum()
}

/// Smets non-specificity: `sum over nonempty A of ln(1/Q(A))`, with zero-
/// commonality terms skipped. Zero for the vacuous mass.
///
/// Above [`DENSE_POWERSET_CAP`] classes only subsets of focal sets can have
/// positive commonality, so the sum is taken over those; a focal set of more
/// than 20 elements that is not covered by every other focal set makes that
/// expansion infeasible and produces a capacity error.
pub fn ns_smets(m: &MassFunction) -> Result<f64> {
    let n = m.space().num_classes();
    let total = if n <= DENSE_POWERSET_CAP {
        let size = 1usize << n;
        let mut q = vec![0.0f64; size];
        for (mask, mass) in m.focal_iter() {
            q[mask.bits() as usize] = mass;
        }
        // Superset-sum transform.
        for i in 0..n {
            let bit = 1usize << i;
            for mask in 0..size {
                if mask & bit == 0 {
                    q[mask] += q[mask | bit];
                }
            }
        }
        q.iter()
            .skip(1)
            .filter(|&&qa| qa > 0.0)
            .map(|&qa| (1.0 / qa).ln())
            .sum()
    } else {
        // Positive commonality requires A to sit inside some focal set, and
        // subsets of the intersection of all focal sets have Q = 1 and
        // contribute nothing.
        let focal: Vec<(SubsetMask, f64)> = m.focal_iter().collect();
        let core = focal
            .iter()
            .fold(SubsetMask::from_bits(u64::MAX), |acc, &(f, _)| acc.intersection(f));
        let mut seen: BTreeSet<SubsetMask> = BTreeSet::new();
        let mut sum = 0.0;
        for &(f, _) in &focal {
            if f.is_subset_of(core) {
                continue;
            }
            if f.cardinality() > SMETS_FOCAL_CAP {
                return Err(Error::Capacity(format!(
                    "Smets sum would expand a focal set of {} elements",
                    f.cardinality()
                )));
            }
            let members: Vec<usize> = f.members().collect();
            for bits in 1u64..(1u64 << members.len()) {
                let mut a = SubsetMask::EMPTY;
                for (j, &c) in members.iter().enumerate() {
                    if (bits >> j) & 1 == 1 {
                        a = a.with(c);
                    }
                }
                if a.is_subset_of(core) || !seen.insert(a) {
                    continue;
                }
                let q: f64 = focal
                    .iter()
                    .filter(|&&(g, _)| a.is_subset_of(g))
                    .map(|&(_, mass)| mass)
                    .sum();
                if q > 0.0 {
                    sum += (1.0 / q).ln();
                }
            }
        }
        sum
    };
    Ok(total.max(0.0))
}

/// Körner non-specificity: expected focal cardinality, in `[1, N]`.
pub fn ns_korner(m: &MassFunction) -> f64 {
    m.focal_iter()
        .map(|(mask, mass)| mass * mask.cardinality() as f64)
        .sum()
}

/// Pal specificity: expected reciprocal focal cardinality, in `[1/N, 1]`.
pub fn spec_pal(m: &MassFunction) -> f64 {
    m.focal_iter()
        .map(|(mask, mass)| mass / mask.cardinality() as f64)
        .sum()
}

/// Shannon entropy in nats, with `0 ln 0 == 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .map(|&x| if x > 0.0 { -x * x.ln() } else { 0.0 })
        .sum()
}

/// Mutual information of a sample set: entropy of the mean prediction minus
/// the mean entropy of the samples. Also the ensemble predictive variance.
/// Nonnegative; zero when all samples agree.
pub fn mutual_information(s: &SampleSet) -> f64 {
    let mean_entropy: f64 =
        s.samples().iter().map(|p| shannon_entropy(p)).sum::<f64>() / s.len() as f64;
    (shannon_entropy(&s.mean()) - mean_entropy).max(0.0)
}

/// Entropy bounds over the credal set defined by interval bounds.
///
/// The upper bound is the exact maximum entropy, found by raising a common
/// water level clamped into each class interval until the masses total one.
/// The lower bound is the minimum entropy; a concave function attains its
/// minimum at a vertex, so vertices are enumerated exactly up to
/// [`EXACT_MIN_ENTROPY_CAP`] classes and searched by pairwise descent from
/// the 2N envelope corners above that.
pub fn entropy_bounds(ip: &IntervalPrediction) -> Result<EntropyBounds> {
    ip.ensure_feasible()?;
    let upper_p = max_entropy_point(ip.lower(), ip.upper());
    let upper = shannon_entropy(&upper_p);
    let lower = if ip.space().num_classes() <= EXACT_MIN_ENTROPY_CAP {
        min_entropy_exact(ip.lower(), ip.upper())
    } else {
        min_entropy_descent(ip.lower(), ip.upper())
    };
    let n = ip.space().num_classes() as f64;
    let upper = upper.clamp(0.0, n.ln());
    let lower = lower.clamp(0.0, upper);
    Ok(EntropyBounds { lower, upper })
}

/// Credal uncertainty: the gap between the upper and lower entropy bounds.
pub fn credal_uncertainty(ip: &IntervalPrediction) -> Result<f64> {
    let b = entropy_bounds(ip)?;
    Ok((b.upper - b.lower).max(0.0))
}

fn max_entropy_point(lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let fill = |t: f64| -> f64 {
        lower
            .iter()
            .zip(upper)
            .map(|(&l, &u)| t.clamp(l, u))
            .sum::<f64>()
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        if hi - lo <= 1e-16 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if fill(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    lower.iter().zip(upper).map(|(&l, &u)| t.clamp(l, u)).collect()
}

fn min_entropy_exact(lower: &[f64], upper: &[f64]) -> f64 {
    let n = lower.len();
    let mut best = f64::INFINITY;
    let mut p = vec![0.0; n];
    // A vertex of the box-and-simplex polytope pins all but one coordinate
    // to a bound; the free coordinate absorbs the remainder.
    for free in 0..n {
        let others: Vec<usize> = (0..n).filter(|&i| i != free).collect();
        for bits in 0..(1u64 << others.len()) {
            let mut sum = 0.0;
            for (j, &i) in others.iter().enumerate() {
                p[i] = if (bits >> j) & 1 == 1 { upper[i] } else { lower[i] };
                sum += p[i];
            }
            let v = 1.0 - sum;
            if v < lower[free] - 1e-9 || v > upper[free] + 1e-9 {
                continue;
            }
            p[free] = v.clamp(lower[free], upper[free]);
            let h = shannon_entropy(&p);
            if h < best {
                best = h;
            }
        }
    }
    best
}

fn min_entropy_descent(lower: &[f64], upper: &[f64]) -> f64 {
    let n = lower.len();
    let mut best = f64::INFINITY;
    for anchor in 0..n {
        for &anchor_high in &[true, false] {
            let mut p: Vec<f64> = lower.to_vec();
            let mut slack = 1.0 - p.iter().sum::<f64>();
            if anchor_high {
                let add = (upper[anchor] - p[anchor]).min(slack);
                p[anchor] += add;
                slack -= add;
            }
            for i in 0..n {
                if slack <= 0.0 {
                    break;
                }
                let add = (upper[i] - p[i]).min(slack);
                p[i] += add;
                slack -= add;
            }
            descend_to_vertex(&mut p, lower, upper);
            let h = shannon_entropy(&p);
            if h < best {
                best = h;
            }
        }
    }
    best
}

fn descend_to_vertex(p: &mut [f64], lower: &[f64], upper: &[f64]) {
    let n = p.len();
    let max_sweeps = 4 * n;
    for _ in 0..max_sweeps {
        let mut improved = false;
        let mut h = shannon_entropy(p);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                // Entropy is concave along the transfer segment, so only the
                // full move can improve.
                let delta = (p[i] - lower[i]).min(upper[j] - p[j]);
                if delta <= 1e-12 {
                    continue;
                }
                p[i] -= delta;
                p[j] += delta;
                let h_new = shannon_entropy(p);
                if h_new < h - 1e-12 {
                    h = h_new;
                    improved = true;
                } else {
                    p[i] += delta;
                    p[j] -= delta;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setfn::LabelSpace;

    const EPS: f64 = 1e-9;

    fn space(n: usize) -> LabelSpace {
        LabelSpace::new(n).unwrap()
    }

    fn mask(bits: u64) -> SubsetMask {
        SubsetMask::from_bits(bits)
    }

    fn fixture_mass() -> MassFunction {
        MassFunction::new(space(2), [(mask(0b01), 0.4), (mask(0b10), 0.3), (mask(0b11), 0.3)])
            .unwrap()
    }

    #[test]
    fn dubois_on_fixture_and_extremes() {
        assert!((ns_dubois(&fixture_mass()) - 0.3 * std::f64::consts::LN_2).abs() < EPS);
        let bayes = MassFunction::bayesian(space(2), &[0.7, 0.3]).unwrap();
        assert_eq!(ns_dubois(&bayes), 0.0);
        let vac = MassFunction::vacuous(space(10));
        assert!((ns_dubois(&vac) - 10.0f64.ln()).abs() < EPS);
    }

    #[test]
    fn smets_on_fixture() {
        // Q({a}) = 0.7, Q({b}) = 0.6, Q({a,b}) = 0.3.
        let expected = (1.0f64 / 0.7).ln() + (1.0f64 / 0.6).ln() + (1.0f64 / 0.3).ln();
        assert!((ns_smets(&fixture_mass()).unwrap() - expected).abs() < EPS);
        assert!((expected - 2.071473).abs() < 1e-6);
    }

    #[test]
    fn smets_vacuous_and_degenerate() {
        assert_eq!(ns_smets(&MassFunction::vacuous(space(3))).unwrap(), 0.0);
        let m = MassFunction::new(space(2), [(mask(0b01), 1.0)]).unwrap();
        assert_eq!(ns_smets(&m).unwrap(), 0.0);
    }

    #[test]
    fn smets_sparse_path_matches_dense() {
        let entries = [(mask(0b0011), 0.5), (mask(0b0110), 0.3), (mask(0b0100), 0.2)];
        let dense = ns_smets(&MassFunction::new(space(4), entries).unwrap()).unwrap();
        // Same focal structure embedded in a space too large for the dense
        // transform.
        let sparse = ns_smets(&MassFunction::new(space(20), entries).unwrap()).unwrap();
        assert!((dense - sparse).abs() < EPS);
    }

    #[test]
    fn korner_and_pal_on_fixture_and_extremes() {
        assert!((ns_korner(&fixture_mass()) - 1.3).abs() < EPS);
        assert!((spec_pal(&fixture_mass()) - 0.85).abs() < EPS);
        let bayes = MassFunction::bayesian(space(4), &[0.4, 0.3, 0.2, 0.1]).unwrap();
        assert!((ns_korner(&bayes) - 1.0).abs() < EPS);
        assert!((spec_pal(&bayes) - 1.0).abs() < EPS);
        let vac = MassFunction::vacuous(space(4));
        assert!((ns_korner(&vac) - 4.0).abs() < EPS);
        assert!((spec_pal(&vac) - 0.25).abs() < EPS);
    }

    #[test]
    fn entropy_reference_values() {
        assert!((shannon_entropy(&[0.7, 0.3]) - 0.610864).abs() < 1e-6);
        assert_eq!(shannon_entropy(&[1.0, 0.0]), 0.0);
        assert!((shannon_entropy(&[0.25; 4]) - 4.0f64.ln()).abs() < EPS);
    }

    #[test]
    fn mutual_information_reference_values() {
        let s = SampleSet::new(space(2), vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        assert!((mutual_information(&s) - 0.046201).abs() < 1e-6);

        let same = SampleSet::new(space(2), vec![vec![0.6, 0.4]; 3]).unwrap();
        assert_eq!(mutual_information(&same), 0.0);

        let conflict = SampleSet::new(space(2), vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((mutual_information(&conflict) - std::f64::consts::LN_2).abs() < EPS);
    }

    #[test]
    fn entropy_bounds_on_fixture_intervals() {
        let ip = IntervalPrediction::new(space(2), vec![0.4, 0.3], vec![0.7, 0.6]).unwrap();
        let b = entropy_bounds(&ip).unwrap();
        assert!((b.upper - std::f64::consts::LN_2).abs() < 1e-9);
        assert!((b.lower - 0.610864).abs() < 1e-6);
        assert!((credal_uncertainty(&ip).unwrap() - 0.082283).abs() < 1e-6);
    }

    #[test]
    fn entropy_bounds_degenerate_and_vacuous() {
        let p = vec![0.2, 0.5, 0.3];
        let ip = IntervalPrediction::new(space(3), p.clone(), p.clone()).unwrap();
        let b = entropy_bounds(&ip).unwrap();
        assert!((b.lower - shannon_entropy(&p)).abs() < EPS);
        assert!((b.upper - shannon_entropy(&p)).abs() < EPS);
        assert!(credal_uncertainty(&ip).unwrap() < EPS);

        let ip = IntervalPrediction::new(space(4), vec![0.0; 4], vec![1.0; 4]).unwrap();
        let b = entropy_bounds(&ip).unwrap();
        assert!(b.lower.abs() < EPS);
        assert!((b.upper - 4.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn entropy_bounds_rejects_infeasible() {
        let ip = IntervalPrediction::new(space(2), vec![0.6, 0.6], vec![0.8, 0.8]).unwrap();
        assert!(matches!(entropy_bounds(&ip), Err(Error::Infeasible(_))));
    }

    #[test]
    fn descent_lower_bound_agrees_with_exact_on_small_cases() {
        let lower = vec![0.05, 0.1, 0.0, 0.2];
        let upper = vec![0.5, 0.4, 0.3, 0.6];
        let exact = min_entropy_exact(&lower, &upper);
        let descended = min_entropy_descent(&lower, &upper);
        assert!((exact - descended).abs() < 1e-9);
    }
}

//! Set-function algebra over the powerset of a label space: mass functions,
//! belief / plausibility / commonality, the Möbius inverse of a lower
//! probability, and the pignistic transform.
//!
//! Subsets of the label space are N-bit masks (bit `i` set iff class `i` is a
//! member), which caps mask-based representations at 64 classes. The full
//! powerset is only ever materialized for `N <= DENSE_POWERSET_CAP`; beyond
//! that, operations work on sparse subset families.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Largest class count for which the full powerset is materialized.
pub const DENSE_POWERSET_CAP: usize = 16;

/// Mass totals must match 1 this tightly.
pub const MASS_SUM_TOL: f64 = 1e-9;

/// Masses smaller than this are dropped from the sparse focal map.
pub const MASS_DROP_TOL: f64 = 1e-12;

/// The set of classes a classifier predicts over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    num_classes: usize,
    class_names: Option<Vec<String>>,
}

impl LabelSpace {
    /// A label space of `num_classes` unnamed classes. Requires `2..=64`.
    pub fn new(num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Contract(format!(
                "label space needs at least 2 classes, got {num_classes}"
            )));
        }
        if num_classes > 64 {
            return Err(Error::Capacity(format!(
                "subset masks support at most 64 classes, got {num_classes}"
            )));
        }
        Ok(Self {
            num_classes,
            class_names: None,
        })
    }

    /// A label space with one distinct name per class.
    pub fn with_names(names: Vec<String>) -> Result<Self> {
        let mut space = Self::new(names.len())?;
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::Contract(format!("duplicate class name {a:?}")));
            }
        }
        space.class_names = Some(names);
        Ok(space)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_name(&self, index: usize) -> String {
        assert!(index < self.num_classes, "class index out of range");
        match &self.class_names {
            Some(names) => names[index].clone(),
            None => format!("c{index}"),
        }
    }

    /// The subset containing every class.
    pub fn full_set(&self) -> SubsetMask {
        SubsetMask::full(self.num_classes)
    }

    pub fn singleton(&self, index: usize) -> SubsetMask {
        assert!(index < self.num_classes, "class index out of range");
        SubsetMask::from_bits(1u64 << index)
    }

    /// All nonempty subsets, ascending by bit pattern. Errors above the
    /// dense cap.
    pub fn nonempty_subsets(&self) -> Result<Vec<SubsetMask>> {
        if self.num_classes > DENSE_POWERSET_CAP {
            return Err(Error::Capacity(format!(
                "full powerset requires at most {DENSE_POWERSET_CAP} classes, got {}",
                self.num_classes
            )));
        }
        let count = 1u64 << self.num_classes;
        Ok((1..count).map(SubsetMask::from_bits).collect())
    }

    /// Renders a subset as `{c0,c2}` using class names.
    pub fn format_subset(&self, mask: SubsetMask) -> String {
        let members: Vec<String> = mask.members().map(|i| self.class_name(i)).collect();
        format!("{{{}}}", members.join(","))
    }
}

/// A subset of the label space as a bit pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsetMask(u64);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    pub fn from_bits(bits: u64) -> Self {
        SubsetMask(bits)
    }

    /// The full set over `n` classes.
    pub fn full(n: usize) -> Self {
        assert!((1..=64).contains(&n), "class count out of range");
        SubsetMask(u64::MAX >> (64 - n))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn cardinality(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, class: usize) -> bool {
        class < 64 && (self.0 >> class) & 1 == 1
    }

    pub fn is_subset_of(self, other: SubsetMask) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: SubsetMask) -> bool {
        self.0 & other.0 != 0
    }

    pub fn union(self, other: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 | other.0)
    }

    pub fn intersection(self, other: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 & other.0)
    }

    pub fn with(self, class: usize) -> SubsetMask {
        SubsetMask(self.0 | (1u64 << class))
    }

    pub fn without(self, class: usize) -> SubsetMask {
        SubsetMask(self.0 & !(1u64 << class))
    }

    /// Complement within `space`.
    pub fn complement(self, space: &LabelSpace) -> SubsetMask {
        SubsetMask(!self.0 & space.full_set().0)
    }

    /// Class indices of the members, ascending.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..64).filter(move |i| (bits >> i) & 1 == 1)
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}

/// A basic belief assignment: nonnegative masses on focal subsets, summing
/// to one, with no mass on the empty set.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction {
    space: LabelSpace,
    focal: BTreeMap<SubsetMask, f64>,
}

impl MassFunction {
    /// Builds a mass function from `(subset, mass)` pairs. Duplicate subsets
    /// are merged. Masses below [`MASS_DROP_TOL`] are dropped; negative
    /// masses and totals off from 1 by more than [`MASS_SUM_TOL`] are
    /// rejected.
    pub fn new(space: LabelSpace, entries: impl IntoIterator<Item = (SubsetMask, f64)>) -> Result<Self> {
        let full = space.full_set();
        let mut focal: BTreeMap<SubsetMask, f64> = BTreeMap::new();
        for (mask, mass) in entries {
            if !mask.is_subset_of(full) {
                return Err(Error::Contract(format!(
                    "focal subset {mask} is not contained in the label space"
                )));
            }
            if mass < 0.0 {
                return Err(Error::Contract(format!(
                    "negative mass {mass} on subset {mask}"
                )));
            }
            if mask.is_empty() {
                if mass > MASS_DROP_TOL {
                    return Err(Error::Contract(format!(
                        "empty set carries mass {mass}, must be 0"
                    )));
                }
                continue;
            }
            *focal.entry(mask).or_insert(0.0) += mass;
        }
        focal.retain(|_, m| *m >= MASS_DROP_TOL);
        let total: f64 = focal.values().sum();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::Contract(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(Self { space, focal })
    }

    /// A Bayesian mass function carrying `probs` on the singletons.
    pub fn bayesian(space: LabelSpace, probs: &[f64]) -> Result<Self> {
        assert_eq!(probs.len(), space.num_classes(), "probability vector length");
        let entries: Vec<(SubsetMask, f64)> = probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (SubsetMask::from_bits(1u64 << i), p))
            .collect();
        Self::new(space, entries)
    }

    /// The vacuous mass function: all mass on the full set.
    pub fn vacuous(space: LabelSpace) -> Self {
        let full = space.full_set();
        let mut focal = BTreeMap::new();
        focal.insert(full, 1.0);
        Self { space, focal }
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    /// Mass of a subset (0 for non-focal subsets).
    pub fn mass(&self, mask: SubsetMask) -> f64 {
        self.focal.get(&mask).copied().unwrap_or(0.0)
    }

    /// Focal subsets and masses, ascending by bit pattern.
    pub fn focal_iter(&self) -> impl Iterator<Item = (SubsetMask, f64)> + '_ {
        self.focal.iter().map(|(&m, &v)| (m, v))
    }

    pub fn num_focal(&self) -> usize {
        self.focal.len()
    }

    /// True when every focal subset is a singleton.
    pub fn is_bayesian(&self) -> bool {
        self.focal.keys().all(|m| m.cardinality() == 1)
    }
}

/// A lower probability on a (possibly budgeted) family of subsets.
///
/// The empty set is implicit with value 0 and never stored; the family must
/// contain the full set with value 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerProbability {
    space: LabelSpace,
    values: BTreeMap<SubsetMask, f64>,
}

impl LowerProbability {
    /// Builds a lower probability from `(subset, value)` pairs, validating
    /// range, the boundary conditions and monotonicity on the stored family.
    pub fn new(space: LabelSpace, entries: impl IntoIterator<Item = (SubsetMask, f64)>) -> Result<Self> {
        let full = space.full_set();
        let mut values: BTreeMap<SubsetMask, f64> = BTreeMap::new();
        for (mask, value) in entries {
            if !mask.is_subset_of(full) {
                return Err(Error::Contract(format!(
                    "subset {mask} is not contained in the label space"
                )));
            }
            if mask.is_empty() {
                if value.abs() > MASS_SUM_TOL {
                    return Err(Error::Contract(format!(
                        "lower probability of the empty set is {value}, must be 0"
                    )));
                }
                continue;
            }
            if !(-MASS_SUM_TOL..=1.0 + MASS_SUM_TOL).contains(&value) {
                return Err(Error::Contract(format!(
                    "lower probability {value} on {mask} is outside [0, 1]"
                )));
            }
            values.insert(mask, value.clamp(0.0, 1.0));
        }
        match values.get(&full) {
            None => {
                return Err(Error::InconsistentFamily(
                    "family must contain the full set".into(),
                ))
            }
            Some(&v) if (v - 1.0).abs() > MASS_SUM_TOL => {
                return Err(Error::Contract(format!(
                    "lower probability of the full set is {v}, must be 1"
                )));
            }
            Some(_) => {
                values.insert(full, 1.0);
            }
        }
        let lp = Self { space, values };
        lp.check_monotone()?;
        Ok(lp)
    }

    fn check_monotone(&self) -> Result<()> {
        let n = self.space.num_classes();
        let dense = n <= DENSE_POWERSET_CAP && self.values.len() as u64 >= (1u64 << n) - 1;
        if dense {
            // Neighbor comparisons suffice on the full powerset.
            let size = 1usize << n;
            let mut table = vec![0.0f64; size];
            for (&mask, &v) in &self.values {
                table[mask.bits() as usize] = v;
            }
            for mask in 1..size {
                let v = table[mask];
                let mut bits = mask;
                while bits != 0 {
                    let low = bits & bits.wrapping_neg();
                    bits ^= low;
                    let sub = mask ^ low;
                    if sub != 0 && table[sub] > v + MASS_SUM_TOL {
                        return Err(Error::Contract(format!(
                            "monotonicity violated: P({:#b}) = {} > P({:#b}) = {v}",
                            sub, table[sub], mask
                        )));
                    }
                }
            }
        } else {
            let entries: Vec<(SubsetMask, f64)> = self.values.iter().map(|(&m, &v)| (m, v)).collect();
            for (i, &(a, va)) in entries.iter().enumerate() {
                for &(b, vb) in &entries[i + 1..] {
                    if a.is_subset_of(b) && va > vb + MASS_SUM_TOL {
                        return Err(Error::Contract(format!(
                            "monotonicity violated: P({a}) = {va} > P({b}) = {vb}"
                        )));
                    }
                    if b.is_subset_of(a) && vb > va + MASS_SUM_TOL {
                        return Err(Error::Contract(format!(
                            "monotonicity violated: P({b}) = {vb} > P({a}) = {va}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    pub fn value(&self, mask: SubsetMask) -> Option<f64> {
        if mask.is_empty() {
            return Some(0.0);
        }
        self.values.get(&mask).copied()
    }

    /// The subset family on which values are defined, ascending by bit
    /// pattern. The implicit empty set is not listed.
    pub fn family(&self) -> impl Iterator<Item = (SubsetMask, f64)> + '_ {
        self.values.iter().map(|(&m, &v)| (m, v))
    }

    pub fn family_len(&self) -> usize {
        self.values.len()
    }

    /// True when the family is the full powerset of the label space.
    pub fn is_full_powerset(&self) -> bool {
        let n = self.space.num_classes();
        n <= DENSE_POWERSET_CAP && self.values.len() as u64 == (1u64 << n) - 1
    }

    /// True when the family contains the full set and every singleton.
    pub fn covers_singletons(&self) -> bool {
        (0..self.space.num_classes()).all(|i| self.values.contains_key(&self.space.singleton(i)))
    }
}

/// Raw Möbius masses of `lp`, before clamping and renormalization.
///
/// On a full-powerset family this is the alternating-sign Möbius inversion,
/// whose masses may be negative and always total exactly the lower
/// probability of the full set. On a budgeted family, masses are recovered
/// in increasing cardinality as `m(A) = P(A) - sum of m(B) over stored
/// strict subsets B of A`, which keeps the total at 1 and treats unlisted
/// subsets as carrying no direct evidence.
pub fn mobius_inverse_raw(lp: &LowerProbability) -> Result<Vec<(SubsetMask, f64)>> {
    if lp.value(lp.space.full_set()).is_none() {
        return Err(Error::InconsistentFamily(
            "family must contain the full set".into(),
        ));
    }
    if lp.is_full_powerset() {
        let n = lp.space.num_classes();
        let size = 1usize << n;
        let mut dense = vec![0.0f64; size];
        for (mask, value) in lp.family() {
            dense[mask.bits() as usize] = value;
        }
        // In-place subset Moebius transform.
        for i in 0..n {
            let bit = 1usize << i;
            for m in 0..size {
                if m & bit != 0 {
                    dense[m] -= dense[m ^ bit];
                }
            }
        }
        Ok((1..size)
            .map(|m| (SubsetMask::from_bits(m as u64), dense[m]))
            .collect())
    } else {
        let mut family: Vec<(SubsetMask, f64)> = lp.family().collect();
        family.sort_by_key(|&(m, _)| (m.cardinality(), m.bits()));
        let mut masses: Vec<(SubsetMask, f64)> = Vec::with_capacity(family.len());
        for &(mask, value) in &family {
            let below: f64 = masses
                .iter()
                .filter(|&&(b, _)| b != mask && b.is_subset_of(mask))
                .map(|&(_, m)| m)
                .sum();
            masses.push((mask, value - below));
        }
        Ok(masses)
    }
}

/// Möbius inverse of a lower probability: the mass function whose belief
/// function reproduces `lp` on its family, with negative masses clamped to
/// zero and the result renormalized to total one.
pub fn mobius_inverse(lp: &LowerProbability) -> Result<MassFunction> {
    let raw = mobius_inverse_raw(lp)?;
    let clamped: Vec<(SubsetMask, f64)> = raw
        .into_iter()
        .map(|(mask, m)| (mask, m.max(0.0)))
        .collect();
    let total: f64 = clamped.iter().map(|&(_, m)| m).sum();
    if total <= MASS_DROP_TOL {
        return Err(Error::Degenerate(
            "total mass is zero after clamping".into(),
        ));
    }
    let mut focal = BTreeMap::new();
    for (mask, m) in clamped {
        let m = m / total;
        if m >= MASS_DROP_TOL {
            *focal.entry(mask).or_insert(0.0) += m;
        }
    }
    Ok(MassFunction {
        space: lp.space.clone(),
        focal,
    })
}

/// Belief of `subset`: total mass of focal subsets contained in it.
pub fn belief(m: &MassFunction, subset: SubsetMask) -> f64 {
    m.focal_iter()
        .filter(|&(f, _)| f.is_subset_of(subset))
        .map(|(_, v)| v)
        .sum()
}

/// Plausibility of `subset`, the conjugate of belief.
pub fn plausibility(m: &MassFunction, subset: SubsetMask) -> f64 {
    1.0 - belief(m, subset.complement(&m.space))
}

/// Commonality of a nonempty `subset`: total mass of focal supersets.
pub fn commonality(m: &MassFunction, subset: SubsetMask) -> f64 {
    assert!(!subset.is_empty(), "commonality is undefined on the empty set");
    m.focal_iter()
        .filter(|&(f, _)| subset.is_subset_of(f))
        .map(|(_, v)| v)
        .sum()
}

/// Pignistic transform: each focal mass split equally among its members.
pub fn pignistic(m: &MassFunction) -> Vec<f64> {
    let n = m.space.num_classes();
    let mut p = vec![0.0; n];
    for (mask, mass) in m.focal_iter() {
        let share = mass / mask.cardinality() as f64;
        for i in mask.members() {
            p[i] += share;
        }
    }
    p
}

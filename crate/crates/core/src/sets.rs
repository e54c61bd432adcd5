//! Ground sets, k-subsets and families, with exact binomials.
//!
//! A subset of `[n] = {1, ..., n}` is a single `u64`: element `i` lives in
//! bit `i - 1`. That caps enumeration at `n <= 64`; the bound formulas in
//! [`crate::formulas`] take `n` as a big integer and have no cap.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

pub const MAX_GROUND: u32 = 64;

fn ground_mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// A subset of `[n]`. Used both for family members (where the popcount is
/// the family's uniformity `k`) and for probe sets such as covers.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KSubset {
    bits: u64,
    n: u8,
}

impl KSubset {
    pub fn from_bits(n: u32, bits: u64) -> Result<Self> {
        if n == 0 || n > MAX_GROUND {
            return param(format!("ground set size {n} outside 1..=64"));
        }
        if bits & !ground_mask(n) != 0 {
            return param(format!("bit pattern {bits:#x} has elements outside [{n}]"));
        }
        Ok(KSubset { bits, n: n as u8 })
    }

    pub(crate) fn from_bits_unchecked(n: u32, bits: u64) -> Self {
        debug_assert!(bits & !ground_mask(n) == 0);
        KSubset { bits, n: n as u8 }
    }

    /// Builds a subset from 1-indexed elements. Repeated elements are an error.
    pub fn from_elements(n: u32, elements: &[u32]) -> Result<Self> {
        if n == 0 || n > MAX_GROUND {
            return param(format!("ground set size {n} outside 1..=64"));
        }
        let mut bits = 0u64;
        for &e in elements {
            if e == 0 || e > n {
                return param(format!("element {e} outside [{n}]"));
            }
            let b = 1u64 << (e - 1);
            if bits & b != 0 {
                return param(format!("element {e} repeated"));
            }
            bits |= b;
        }
        Ok(KSubset { bits, n: n as u8 })
    }

    pub fn empty(n: u32) -> Result<Self> {
        Self::from_bits(n, 0)
    }

    /// The initial segment `[m] = {1, ..., m}` inside `[n]`; `[0]` is empty.
    pub fn prefix(n: u32, m: u32) -> Result<Self> {
        if m > n {
            return param(format!("[{m}] does not fit in [{n}]"));
        }
        Self::from_bits(n, ground_mask(m) * (m > 0) as u64)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn n(&self) -> u32 {
        self.n as u32
    }

    pub fn len(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn contains(&self, element: u32) -> bool {
        element >= 1 && element <= self.n() && self.bits & (1u64 << (element - 1)) != 0
    }

    pub fn is_subset_of(&self, other: &KSubset) -> bool {
        self.bits & !other.bits == 0
    }

    /// `|self ∩ other|` without the ground-set check.
    #[inline]
    pub fn meet(&self, other: &KSubset) -> u32 {
        debug_assert_eq!(self.n, other.n);
        (self.bits & other.bits).count_ones()
    }

    pub fn elements(&self) -> impl Iterator<Item = u32> + '_ {
        BitIter(self.bits).map(|b| b + 1)
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.elements().collect()
    }

    pub fn union(&self, other: &KSubset) -> KSubset {
        KSubset {
            bits: self.bits | other.bits,
            n: self.n,
        }
    }
}

impl fmt::Debug for KSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.elements().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

/// Iterates the indices of set bits, lowest first.
#[derive(Clone, Copy)]
pub(crate) struct BitIter(pub u64);

impl Iterator for BitIter {
    type Item = u32;

    #[inline]
    fn next(&mut self) -> Option<u32> {
        if self.0 == 0 {
            None
        } else {
            let i = self.0.trailing_zeros();
            self.0 &= self.0 - 1;
            Some(i)
        }
    }
}

/// `|a ∩ b|`, rejecting subsets of different ground sets.
pub fn intersection_size(a: &KSubset, b: &KSubset) -> Result<u32> {
    if a.n != b.n {
        return param(format!("ground sets differ: [{}] vs [{}]", a.n, b.n));
    }
    Ok(a.meet(b))
}

/// A k-uniform family over `[n]`, members strictly increasing by bit pattern.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Family {
    n: u8,
    k: u8,
    members: Vec<KSubset>,
}

impl Family {
    /// Sorts the members; rejects duplicates, wrong sizes and foreign ground sets.
    pub fn new(n: u32, k: u32, mut members: Vec<KSubset>) -> Result<Self> {
        if n == 0 || n > MAX_GROUND {
            return param(format!("ground set size {n} outside 1..=64"));
        }
        if k > n {
            return param(format!("uniformity {k} exceeds ground set size {n}"));
        }
        for m in &members {
            if m.n() != n {
                return param(format!("member {m:?} is over [{}], expected [{n}]", m.n));
            }
            if m.len() != k {
                return param(format!("member {m:?} has size {}, expected {k}", m.len()));
            }
        }
        members.sort_unstable();
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return param(format!("member {:?} repeated", w[0]));
        }
        Ok(Family {
            n: n as u8,
            k: k as u8,
            members,
        })
    }

    pub fn empty(n: u32, k: u32) -> Result<Self> {
        Self::new(n, k, Vec::new())
    }

    /// Members must already be sorted, distinct and k-uniform.
    pub(crate) fn from_sorted_unchecked(n: u32, k: u32, members: Vec<KSubset>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(members.iter().all(|m| m.len() == k && m.n() == n));
        Family {
            n: n as u8,
            k: k as u8,
            members,
        }
    }

    pub fn from_element_lists(n: u32, k: u32, lists: &[Vec<u32>]) -> Result<Self> {
        let members = lists
            .iter()
            .map(|l| KSubset::from_elements(n, l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, k, members)
    }

    /// All k-subsets of `[n]`.
    pub fn complete(n: u32, k: u32) -> Result<Self> {
        let members: Vec<_> = enumerate_k_subsets(n, k)?.collect();
        Ok(Self::from_sorted_unchecked(n, k, members))
    }

    pub fn n(&self) -> u32 {
        self.n as u32
    }

    pub fn k(&self) -> u32 {
        self.k as u32
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[KSubset] {
        &self.members
    }

    pub fn iter(&self) -> std::slice::Iter<'_, KSubset> {
        self.members.iter()
    }

    pub fn contains(&self, set: &KSubset) -> bool {
        self.members.binary_search(set).is_ok()
    }

    /// Union of all members as a bit mask.
    pub fn support(&self) -> u64 {
        self.members.iter().fold(0, |acc, m| acc | m.bits())
    }

    /// Keeps the members satisfying `keep`; order is preserved.
    pub fn filter(&self, mut keep: impl FnMut(&KSubset) -> bool) -> Family {
        let members = self.members.iter().copied().filter(|m| keep(m)).collect();
        Self::from_sorted_unchecked(self.n(), self.k(), members)
    }

    pub fn with_member(&self, set: KSubset) -> Result<Family> {
        let mut members = self.members.clone();
        members.push(set);
        Self::new(self.n(), self.k(), members)
    }

    pub fn without_index(&self, idx: usize) -> Family {
        let mut members = self.members.clone();
        members.remove(idx);
        Self::from_sorted_unchecked(self.n(), self.k(), members)
    }

    pub fn is_subfamily_of(&self, other: &Family) -> bool {
        self.members.iter().all(|m| other.contains(m))
    }

    /// Element lists, each ascending, the outer list in lexicographic order.
    pub fn to_element_lists(&self) -> Vec<Vec<u32>> {
        let mut lists: Vec<Vec<u32>> = self.members.iter().map(KSubset::to_vec).collect();
        lists.sort();
        lists
    }

    /// Re-embeds the family in a larger ground set `[n]`.
    pub fn embed(&self, n: u32) -> Result<Family> {
        if n < self.n() || self.support() & !ground_mask(n) != 0 {
            return param(format!("cannot embed a family over [{}] into [{n}]", self.n));
        }
        let members = self
            .members
            .iter()
            .map(|m| KSubset::from_bits_unchecked(n, m.bits()))
            .collect();
        Family::new(n, self.k(), members)
    }

    pub fn to_json(&self) -> FamilyJson {
        FamilyJson {
            n: self.n(),
            k: self.k(),
            members: self.to_element_lists(),
        }
    }
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Family[n={}, k={}]", self.n, self.k)?;
        f.debug_list().entries(self.members.iter()).finish()
    }
}

impl<'a> IntoIterator for &'a Family {
    type Item = &'a KSubset;
    type IntoIter = std::slice::Iter<'a, KSubset>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

/// On-disk family format: `{"n": 4, "k": 2, "members": [[1, 2], [1, 3]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyJson {
    pub n: u32,
    pub k: u32,
    pub members: Vec<Vec<u32>>,
}

impl FamilyJson {
    pub fn into_family(self) -> Result<Family> {
        Family::from_element_lists(self.n, self.k, &self.members)
    }
}

impl Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Family {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        FamilyJson::deserialize(d)?
            .into_family()
            .map_err(serde::de::Error::custom)
    }
}

pub fn parse_family(text: &str) -> Result<Family> {
    let raw: FamilyJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    raw.into_family().map_err(|e| Error::Parse(e.to_string()))
}

/// The parameter quadruple `(n, k, t, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Params {
    pub n: u64,
    pub k: u64,
    pub t: u64,
    pub s: u64,
}

impl Params {
    pub fn new(n: u64, k: u64, t: u64, s: u64) -> Result<Self> {
        if t == 0 || t > k || k > n {
            return param(format!("need n >= k >= t >= 1, got n={n} k={k} t={t}"));
        }
        Ok(Params { n, k, t, s })
    }

    /// `k >= t + 1` and `n >= 2(t+1)((k-t+1)^2 + s)`.
    pub fn satisfies_theorem1(&self) -> bool {
        let (n, k, t, s) = self.wide();
        k > t && n >= 2 * (t + 1) * ((k - t + 1).pow(2) + s)
    }

    /// `k >= t + 2` and `n >= 3 max{C(t+2,2), (k-t)/2} ((k-t+1)^2 + s)`,
    /// with `(k-t)/2` taken as a rational (no rounding).
    pub fn satisfies_theorem2(&self) -> bool {
        let (n, k, t, s) = self.wide();
        if k < t + 2 {
            return false;
        }
        let c = (t + 2) * (t + 1) / 2;
        // 2n >= 3 * max(2C, k - t) * (...)
        2 * n >= 3 * (2 * c).max(k - t) * ((k - t + 1).pow(2) + s)
    }

    /// `k = t + 1`, `s >= 1` and `n >= t + s + 2`.
    pub fn satisfies_theorem3(&self) -> bool {
        let (n, k, t, s) = self.wide();
        k == t + 1 && s >= 1 && n >= t + s + 2
    }

    fn wide(&self) -> (u128, u128, u128, u128) {
        (self.n as u128, self.k as u128, self.t as u128, self.s as u128)
    }
}

/// All k-subsets of `[n]` in ascending bit-pattern order.
pub fn enumerate_k_subsets(n: u32, k: u32) -> Result<KSubsets> {
    if k == 0 || k > n || n > MAX_GROUND {
        return param(format!("need 1 <= k <= n <= 64, got n={n} k={k}"));
    }
    Ok(KSubsets {
        n,
        next: Some(ground_mask(k)),
    })
}

/// Iterator returned by [`enumerate_k_subsets`] (Gosper's hack).
pub struct KSubsets {
    n: u32,
    next: Option<u64>,
}

impl Iterator for KSubsets {
    type Item = KSubset;

    fn next(&mut self) -> Option<KSubset> {
        let cur = self.next?;
        let low = cur & cur.wrapping_neg();
        let ripple = cur as u128 + low as u128;
        self.next = (ripple <= ground_mask(self.n) as u128).then(|| {
            let ripple = ripple as u64;
            (((ripple ^ cur) >> 2) / low) | ripple
        });
        Some(KSubset::from_bits_unchecked(self.n, cur))
    }
}

/// `C(n, r)` exactly; zero when `r > n`.
pub fn binomial(n: &BigUint, r: u64) -> BigUint {
    let r_big = BigUint::from(r);
    if &r_big > n {
        return BigUint::zero();
    }
    let complement = n - &r_big;
    let r = if complement < r_big {
        // complement < r <= u64::MAX
        complement.iter_u64_digits().next().unwrap_or(0)
    } else {
        r
    };
    let mut acc = BigUint::one();
    for i in 0..r {
        acc *= n - BigUint::from(i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

pub fn binomial_u64(n: u64, r: u64) -> BigUint {
    binomial(&BigUint::from(n), r)
}

/// `C(n, r)` over signed arguments: negative `r` is rejected, `n < r`
/// (including negative `n`) gives zero.
pub fn binomial_signed(n: i64, r: i64) -> Result<BigUint> {
    if r < 0 {
        return param(format!("binomial with negative lower index {r}"));
    }
    if n < r {
        return Ok(BigUint::zero());
    }
    Ok(binomial_u64(n as u64, r as u64))
}

/// Relabels the ground set. `perm[i - 1]` is the image of element `i`.
pub fn apply_permutation(family: &Family, perm: &[u32]) -> Result<Family> {
    let n = family.n();
    if perm.len() != n as usize {
        return param(format!("permutation has length {}, expected {n}", perm.len()));
    }
    let mut seen = 0u64;
    for &p in perm {
        if p == 0 || p > n || seen & (1u64 << (p - 1)) != 0 {
            return param("permutation is not a bijection on [n]");
        }
        seen |= 1u64 << (p - 1);
    }
    let members = family
        .iter()
        .map(|m| {
            let bits = BitIter(m.bits()).fold(0u64, |acc, i| acc | 1u64 << (perm[i as usize] - 1));
            KSubset::from_bits_unchecked(n, bits)
        })
        .collect();
    Family::new(n, family.k(), members)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: u32, e: &[u32]) -> KSubset {
        KSubset::from_elements(n, e).unwrap()
    }

    #[test]
    fn intersection_examples() {
        assert_eq!(intersection_size(&set(4, &[1, 2]), &set(4, &[3, 4])).unwrap(), 0);
        assert_eq!(intersection_size(&set(3, &[1, 2, 3]), &set(3, &[1, 2, 3])).unwrap(), 3);
        assert_eq!(intersection_size(&set(6, &[1, 2, 5]), &set(6, &[2, 5, 6])).unwrap(), 2);
        assert!(matches!(
            intersection_size(&set(4, &[1]), &set(5, &[1])),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn enumeration_examples() {
        let all: Vec<_> = enumerate_k_subsets(3, 2).unwrap().map(|s| s.to_vec()).collect();
        assert_eq!(all, vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(enumerate_k_subsets(4, 2).unwrap().count(), 6);
        let full: Vec<_> = enumerate_k_subsets(5, 5).unwrap().collect();
        assert_eq!(full.len(), 1);
        assert_eq!(full[0].to_vec(), vec![1, 2, 3, 4, 5]);
        assert!(enumerate_k_subsets(3, 4).is_err());
        assert!(enumerate_k_subsets(65, 2).is_err());
    }

    #[test]
    fn enumeration_at_word_boundary() {
        assert_eq!(enumerate_k_subsets(64, 1).unwrap().count(), 64);
        assert_eq!(enumerate_k_subsets(64, 63).unwrap().count(), 64);
        assert_eq!(enumerate_k_subsets(64, 64).unwrap().count(), 1);
        assert_eq!(enumerate_k_subsets(64, 2).unwrap().count(), 2016);
    }

    #[test]
    fn enumeration_count_matches_binomial() {
        for n in 1..=20u32 {
            for k in 1..=n {
                let count = enumerate_k_subsets(n, k).unwrap().count();
                assert_eq!(BigUint::from(count), binomial_u64(n as u64, k as u64), "C({n},{k})");
            }
        }
    }

    #[test]
    fn enumeration_is_strictly_increasing() {
        let v: Vec<_> = enumerate_k_subsets(9, 4).unwrap().collect();
        assert!(v.windows(2).all(|w| w[0].bits() < w[1].bits()));
        assert!(v.iter().all(|s| s.len() == 4));
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial_u64(5, 2), BigUint::from(10u32));
        assert_eq!(binomial_u64(3, 5), BigUint::zero());
        assert_eq!(binomial_u64(7, 0), BigUint::one());
        assert_eq!(binomial_signed(3, -1), Err(Error::Param("binomial with negative lower index -1".into())));
        assert_eq!(binomial_signed(-2, 1).unwrap(), BigUint::zero());
    }

    #[test]
    fn binomial_52_5_against_factorial_ratio() {
        let fact = |m: u64| (1..=m).fold(BigUint::one(), |a, i| a * i);
        let oracle = fact(52) / (fact(5) * fact(47));
        assert_eq!(oracle, BigUint::from(2_598_960u32));
        assert_eq!(binomial_u64(52, 5), oracle);
    }

    #[test]
    fn permutation_examples() {
        let f = Family::from_element_lists(3, 2, &[vec![1, 2], vec![1, 3]]).unwrap();
        assert_eq!(apply_permutation(&f, &[1, 2, 3]).unwrap(), f);
        let swapped = apply_permutation(&f, &[2, 1, 3]).unwrap();
        assert_eq!(swapped.to_element_lists(), vec![vec![1, 2], vec![2, 3]]);
        assert!(apply_permutation(&f, &[1, 1, 3]).is_err());
        assert!(apply_permutation(&f, &[1, 2]).is_err());
    }

    #[test]
    fn family_rejects_bad_members() {
        assert!(Family::from_element_lists(4, 2, &[vec![1, 2], vec![2, 1]]).is_err());
        assert!(Family::from_element_lists(4, 2, &[vec![1, 2, 3]]).is_err());
        assert!(Family::from_element_lists(4, 2, &[vec![1, 5]]).is_err());
    }

    #[test]
    fn json_is_lexicographic() {
        // {1,4} has a larger bit pattern than {2,3} but sorts first lexicographically.
        let f = Family::from_element_lists(4, 2, &[vec![2, 3], vec![1, 4]]).unwrap();
        assert_eq!(f.members()[0].to_vec(), vec![2, 3]);
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, r#"{"n":4,"k":2,"members":[[1,4],[2,3]]}"#);
        assert_eq!(parse_family(&text).unwrap(), f);
        assert!(matches!(parse_family("{\"n\":4,\"k\":2,\"members\":[[1,"), Err(Error::Parse(_))));
    }

    #[test]
    fn prefix_sets() {
        assert!(KSubset::prefix(5, 0).unwrap().is_empty());
        assert_eq!(KSubset::prefix(5, 3).unwrap().to_vec(), vec![1, 2, 3]);
        assert_eq!(KSubset::prefix(64, 64).unwrap().len(), 64);
        assert!(KSubset::prefix(3, 4).is_err());
    }

    #[test]
    fn params_hypotheses() {
        assert!(Params::new(3, 4, 1, 0).is_err());
        assert!(Params::new(40, 3, 1, 1).unwrap().satisfies_theorem1());
        assert!(!Params::new(39, 3, 1, 1).unwrap().satisfies_theorem1());
        assert!(Params::new(4, 2, 1, 1).unwrap().satisfies_theorem3());
        assert!(!Params::new(3, 2, 1, 1).unwrap().satisfies_theorem3());
        // t=1, k=3: max{C(3,2)=3, 1} = 3, 3*3*(9+1) = 90
        assert!(Params::new(90, 3, 1, 1).unwrap().satisfies_theorem2());
        assert!(!Params::new(89, 3, 1, 1).unwrap().satisfies_theorem2());
        // t=1, k=20: (k-t)/2 = 9.5 dominates, 3 * 9.5 * (400 + 1) = 11428.5
        assert!(Params::new(11429, 20, 1, 1).unwrap().satisfies_theorem2());
        assert!(!Params::new(11428, 20, 1, 1).unwrap().satisfies_theorem2());
    }
}

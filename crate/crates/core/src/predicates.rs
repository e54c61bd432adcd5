//! Intersection predicates, defect sets, restrictions and t-covers, plus the
//! per-family bound checks that can be evaluated on a concrete family.

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sets::{binomial_u64, BitIter, Family, KSubset};

/// Result of a bound check that only applies under some hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Holds,
    Violated,
    /// The hypothesis of the check is not met; nothing was asserted.
    Skipped,
}

impl Outcome {
    pub fn from_bool(holds: bool) -> Self {
        if holds {
            Outcome::Holds
        } else {
            Outcome::Violated
        }
    }

    pub fn is_violated(self) -> bool {
        self == Outcome::Violated
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Holds => "holds",
            Outcome::Violated => "violated",
            Outcome::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberDefect {
    pub member: Vec<u32>,
    pub defect: usize,
}

/// Defect degrees `|D_F(F; t)|` of every member, with the partners of the
/// first member (in family order) attaining the maximum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectReport {
    pub t: u32,
    pub per_member: Vec<MemberDefect>,
    pub max_defect: usize,
    pub maximizer: Option<Vec<u32>>,
    pub witnesses: Vec<Vec<u32>>,
}

/// Minimum t-covers of a family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverResult {
    pub t: u32,
    pub tau: u32,
    #[serde(serialize_with = "ser_sets", deserialize_with = "de_sets")]
    pub witnesses: Vec<KSubset>,
    /// More minimum covers exist than were recorded.
    pub truncated: bool,
}

pub const DEFAULT_WITNESS_CAP: usize = 1000;

fn ser_sets<S: serde::Serializer>(sets: &[KSubset], s: S) -> std::result::Result<S::Ok, S::Error> {
    let lists: Vec<Vec<u32>> = sets.iter().map(KSubset::to_vec).collect();
    lists.serialize(s)
}

fn de_sets<'de, D: serde::Deserializer<'de>>(_d: D) -> std::result::Result<Vec<KSubset>, D::Error> {
    Err(serde::de::Error::custom("cover witnesses are write-only"))
}

pub fn is_t_intersecting(f: &Family, t: u32) -> bool {
    let m = f.members();
    m.iter()
        .enumerate()
        .all(|(i, a)| m[i + 1..].iter().all(|b| a.meet(b) >= t))
}

/// `D_F(H; t)`: members meeting `h` in fewer than `t` elements.
pub fn defect_set(f: &Family, h: &KSubset, t: u32) -> Family {
    f.filter(|m| m.meet(h) < t)
}

/// `F_H`: members containing `h`.
pub fn restrict(f: &Family, h: &KSubset) -> Family {
    f.filter(|m| h.is_subset_of(m))
}

const PARALLEL_THRESHOLD: usize = 512;

fn defect_degrees(f: &Family, t: u32) -> Vec<usize> {
    let m = f.members();
    let degree = |i: usize| {
        let a = &m[i];
        m.iter()
            .enumerate()
            .filter(|&(j, b)| j != i && a.meet(b) < t)
            .count()
    };
    if m.len() >= PARALLEL_THRESHOLD {
        (0..m.len()).into_par_iter().map(degree).collect()
    } else {
        (0..m.len()).map(degree).collect()
    }
}

pub fn defect_report(f: &Family, t: u32) -> DefectReport {
    let degrees = defect_degrees(f, t);
    let per_member = f
        .iter()
        .zip(&degrees)
        .map(|(m, &d)| MemberDefect {
            member: m.to_vec(),
            defect: d,
        })
        .collect();
    let max_defect = degrees.iter().copied().max().unwrap_or(0);
    let argmax = degrees.iter().position(|&d| d == max_defect);
    let (maximizer, witnesses) = match argmax {
        Some(i) => {
            let a = f.members()[i];
            let partners = f
                .iter()
                .enumerate()
                .filter(|&(j, b)| j != i && a.meet(b) < t)
                .map(|(_, b)| b.to_vec())
                .collect();
            (Some(a.to_vec()), partners)
        }
        None => (None, Vec::new()),
    };
    DefectReport {
        t,
        per_member,
        max_defect,
        maximizer,
        witnesses,
    }
}

/// Every member has at most `s` other members meeting it in fewer than `t`
/// elements. The defect report is returned either way.
pub fn is_s_almost_t_intersecting(f: &Family, t: u32, s: usize) -> (bool, DefectReport) {
    let report = defect_report(f, t);
    (report.max_defect <= s, report)
}

/// Adjacency lists of the induced subgraph `K(n,k,t)[f]`.
pub fn kneser_induced_graph(f: &Family, t: u32) -> Vec<Vec<usize>> {
    let m = f.members();
    let mut adj = vec![Vec::new(); m.len()];
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            if m[i].meet(&m[j]) < t {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// `K(n,k,t)[f]` is `K_{1,s+1}`-free, i.e. its maximum degree is at most `s`.
pub fn kneser_edge_check(f: &Family, t: u32, s: usize) -> bool {
    kneser_induced_graph(f, t).iter().all(|nbrs| nbrs.len() <= s)
}

pub fn is_t_cover(tset: &KSubset, f: &Family, t: u32) -> bool {
    f.iter().all(|m| m.meet(tset) >= t)
}

/// Spreads the low bits of `pattern` onto the set bits of `mask`.
fn deposit(mut pattern: u64, mask: u64) -> u64 {
    let mut out = 0;
    for bit in BitIter(mask) {
        if pattern == 0 {
            break;
        }
        if pattern & 1 != 0 {
            out |= 1u64 << bit;
        }
        pattern >>= 1;
    }
    out
}

/// Calls `visit` on each `r`-subset of `mask`, in increasing pattern order,
/// until it returns `false`.
pub(crate) fn for_each_subset_of_size(mask: u64, r: u32, mut visit: impl FnMut(u64) -> bool) {
    let width = mask.count_ones();
    if r > width {
        return;
    }
    if r == 0 {
        visit(0);
        return;
    }
    let limit: u128 = 1u128 << width;
    let mut cur: u64 = if r == 64 { u64::MAX } else { (1u64 << r) - 1 };
    loop {
        if !visit(deposit(cur, mask)) {
            return;
        }
        let low = cur & cur.wrapping_neg();
        let ripple = cur as u128 + low as u128;
        if ripple >= limit {
            return;
        }
        let ripple = ripple as u64;
        cur = (((ripple ^ cur) >> 2) / low) | ripple;
    }
}

/// `τ_t(f)` by iterative deepening over subsets of the union of the
/// members, starting at size `t`. Records up to `witness_cap` minimum covers.
pub fn covering_number(f: &Family, t: u32, witness_cap: usize) -> Result<CoverResult> {
    if f.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let n = f.n();
    let support = f.support();
    for r in t..=support.count_ones() {
        let mut witnesses = Vec::new();
        let mut truncated = false;
        for_each_subset_of_size(support, r, |bits| {
            let cand = KSubset::from_bits_unchecked(n, bits);
            if is_t_cover(&cand, f, t) {
                if witnesses.len() < witness_cap {
                    witnesses.push(cand);
                } else {
                    truncated = true;
                    return false;
                }
            }
            true
        });
        if !witnesses.is_empty() || truncated {
            return Ok(CoverResult {
                t,
                tau: r,
                witnesses,
                truncated,
            });
        }
    }
    // The support covers every member in k >= t elements, so the loop returns
    // unless t exceeds k.
    Err(Error::Param(format!(
        "no {t}-cover exists for a {}-uniform family",
        f.k()
    )))
}

fn pow(base: u64, exp: u64) -> BigUint {
    num_traits::pow(BigUint::from(base), exp as usize)
}

/// `(k-t+1)^(τ-h) C(n-τ, k-τ) + Σ_{i<τ-h} s (k-t+1)^i`.
pub fn restriction_bound(n: u64, k: u64, t: u64, s: u64, tau: u64, h: u64) -> BigUint {
    debug_assert!(h < tau && tau <= k && t <= k);
    let q = k - t + 1;
    let lead = pow(q, tau - h) * binomial_u64(n - tau, k - tau);
    let tail: BigUint = (0..tau - h).map(|i| BigUint::from(s) * pow(q, i)).sum();
    lead + tail
}

/// Checks `|f_h|` against [`restriction_bound`] for an s-almost t-intersecting
/// family with `t+1 <= τ_t(f) <= k`, `|h| < τ_t(f)`, `k >= t+1` and
/// `n >= (t+1)(k-t+1)^2`.
pub fn check_prop31_bound(f: &Family, t: u32, s: usize, h: &KSubset) -> Outcome {
    let (n, k, t64) = (f.n() as u64, f.k() as u64, t as u64);
    if f.is_empty() || k < t64 + 1 || n < (t64 + 1) * (k - t64 + 1).pow(2) {
        return Outcome::Skipped;
    }
    if !is_s_almost_t_intersecting(f, t, s).0 {
        return Outcome::Skipped;
    }
    let tau = match covering_number(f, t, 1) {
        Ok(c) => c.tau as u64,
        Err(_) => return Outcome::Skipped,
    };
    let hsize = h.len() as u64;
    if tau < t64 + 1 || tau > k || hsize >= tau {
        return Outcome::Skipped;
    }
    let restricted = restrict(f, h).len();
    Outcome::from_bool(
        BigUint::from(restricted) <= restriction_bound(n, k, t64, s as u64, tau, hsize),
    )
}

/// For a `(t+1)`-uniform s-almost t-intersecting family over `n >= t+3`
/// that is not t-intersecting: `|f| <= 2s+4` when all pairwise intersections
/// are at least `t-1`, and `|f| <= 2s` otherwise.
pub fn check_lemma32_bounds(f: &Family, t: u32, s: usize) -> Outcome {
    if f.k() != t + 1 || f.n() < t + 3 {
        return Outcome::Skipped;
    }
    if !is_s_almost_t_intersecting(f, t, s).0 || is_t_intersecting(f, t) {
        return Outcome::Skipped;
    }
    let m = f.members();
    let close = m
        .iter()
        .enumerate()
        .all(|(i, a)| m[i + 1..].iter().all(|b| a.meet(b) + 1 >= t));
    let cap = if close { 2 * s + 4 } else { 2 * s };
    Outcome::from_bool(f.len() <= cap)
}

/// `s C(2k-2t+2, k-t+1)`.
pub fn lemma33_bound(k: u64, t: u64, s: u64) -> BigUint {
    BigUint::from(s) * binomial_u64(2 * (k - t + 1), k - t + 1)
}

/// For an s-almost t-intersecting family with `τ_t(f) >= k+1`, `k >= t+1`
/// and `n >= 2k`: `|f| <= s C(2k-2t+2, k-t+1)`.
pub fn check_lemma33_bound(f: &Family, t: u32, s: usize) -> Outcome {
    let (n, k) = (f.n(), f.k());
    if f.is_empty() || k < t + 1 || n < 2 * k {
        return Outcome::Skipped;
    }
    if !is_s_almost_t_intersecting(f, t, s).0 {
        return Outcome::Skipped;
    }
    match covering_number(f, t, 1) {
        Ok(c) if c.tau > k => {}
        _ => return Outcome::Skipped,
    }
    Outcome::from_bool(BigUint::from(f.len()) <= lemma33_bound(k as u64, t as u64, s as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::enumerate_k_subsets;

    fn fam(n: u32, k: u32, lists: &[&[u32]]) -> Family {
        let v: Vec<Vec<u32>> = lists.iter().map(|l| l.to_vec()).collect();
        Family::from_element_lists(n, k, &v).unwrap()
    }

    fn star(n: u32, k: u32, t: u32) -> Family {
        let core = KSubset::prefix(n, t).unwrap();
        Family::complete(n, k).unwrap().filter(|m| core.is_subset_of(m))
    }

    fn set(n: u32, e: &[u32]) -> KSubset {
        KSubset::from_elements(n, e).unwrap()
    }

    #[test]
    fn t_intersecting_examples() {
        assert!(is_t_intersecting(&star(5, 2, 1), 1));
        assert!(!is_t_intersecting(&fam(4, 2, &[&[1, 2], &[3, 4]]), 1));
        assert!(!is_t_intersecting(&Family::complete(4, 2).unwrap(), 1));
        assert!(is_t_intersecting(&Family::empty(4, 2).unwrap(), 3));
    }

    #[test]
    fn defect_set_examples() {
        let all = Family::complete(4, 2).unwrap();
        let d = defect_set(&all, &set(4, &[1, 2]), 1);
        assert_eq!(d.to_element_lists(), vec![vec![3, 4]]);
        assert!(defect_set(&all, &set(4, &[1, 2]), 0).is_empty());
        assert!(defect_set(&star(5, 2, 1), &set(5, &[1, 4]), 1).is_empty());
    }

    #[test]
    fn almost_intersecting_examples() {
        // {F in C([5],3) : 1 in F}: t = 2 instance of the six-set family on [t+3].
        let ex = star(5, 3, 1);
        assert_eq!(ex.len(), 6);
        assert!(is_s_almost_t_intersecting(&ex, 2, 1).0);
        assert!(!is_s_almost_t_intersecting(&ex, 2, 0).0);
        let all5 = Family::complete(5, 2).unwrap();
        let (ok, rep) = is_s_almost_t_intersecting(&all5, 1, 3);
        assert!(ok);
        assert_eq!(rep.max_defect, 3);
        let (ok, rep) = is_s_almost_t_intersecting(&star(6, 3, 2), 2, 0);
        assert!(ok);
        assert_eq!(rep.max_defect, 0);
    }

    #[test]
    fn defect_report_witnesses() {
        let all = Family::complete(4, 2).unwrap();
        let rep = defect_report(&all, 1);
        assert_eq!(rep.max_defect, 1);
        assert_eq!(rep.maximizer, Some(vec![1, 2]));
        assert_eq!(rep.witnesses, vec![vec![3, 4]]);
        assert!(rep.per_member.iter().all(|d| d.defect == 1));
        let empty = defect_report(&Family::empty(4, 2).unwrap(), 1);
        assert_eq!(empty.max_defect, 0);
        assert!(empty.maximizer.is_none());
    }

    #[test]
    fn kneser_graph_of_c42_is_a_perfect_matching() {
        let all = Family::complete(4, 2).unwrap();
        let g = kneser_induced_graph(&all, 1);
        assert!(g.iter().all(|nbrs| nbrs.len() == 1));
        for (i, nbrs) in g.iter().enumerate() {
            assert_eq!(g[nbrs[0]], vec![i]);
        }
        assert!(kneser_edge_check(&all, 1, 1));
        assert!(!kneser_edge_check(&all, 1, 0));
        assert!(kneser_induced_graph(&star(6, 2, 1), 1).iter().all(Vec::is_empty));
    }

    #[test]
    fn restrict_examples() {
        let all = Family::complete(4, 2).unwrap();
        let r = restrict(&all, &set(4, &[1]));
        assert_eq!(r.to_element_lists(), vec![vec![1, 2], vec![1, 3], vec![1, 4]]);
        assert_eq!(restrict(&all, &KSubset::empty(4).unwrap()), all);
        let st = star(7, 4, 2);
        assert_eq!(restrict(&st, &KSubset::prefix(7, 2).unwrap()), st);
    }

    #[test]
    fn cover_examples() {
        let st = star(7, 3, 2);
        assert!(is_t_cover(&KSubset::prefix(7, 2).unwrap(), &st, 2));
        // |A ∩ B| = t - 1 with t = 2
        let a = set(6, &[1, 2, 3]);
        let pair = fam(6, 3, &[&[1, 2, 3], &[1, 4, 5]]);
        assert!(!is_t_cover(&a, &pair, 2));
        assert!(!is_t_cover(&KSubset::empty(6).unwrap(), &pair, 1));
    }

    /// Smallest cover size by scanning every subset of [n].
    fn tau_oracle(f: &Family, t: u32) -> u32 {
        let n = f.n();
        (0u64..1 << n)
            .filter(|&b| f.iter().all(|m| (m.bits() & b).count_ones() >= t))
            .map(|b| b.count_ones())
            .min()
            .unwrap()
    }

    #[test]
    fn covering_number_examples() {
        for t in 1..=3 {
            let st = star(7, t + 1, t);
            let c = covering_number(&st, t, 10).unwrap();
            assert_eq!(c.tau, t);
            assert_eq!(c.witnesses, vec![KSubset::prefix(7, t).unwrap()]);
        }
        // |A ∩ B| = t - 1, t = 2: oracle says t + 1.
        let pair = fam(6, 3, &[&[1, 2, 3], &[1, 4, 5]]);
        assert_eq!(tau_oracle(&pair, 2), 3);
        assert_eq!(covering_number(&pair, 2, 100).unwrap().tau, 3);
        // C([4],2), t = 1: oracle fixes τ_1 = 3 (any pair misses its complement).
        let all = Family::complete(4, 2).unwrap();
        let oracle = tau_oracle(&all, 1);
        assert_eq!(oracle, 3);
        let c = covering_number(&all, 1, 100).unwrap();
        assert_eq!(c.tau, oracle);
        assert_eq!(c.witnesses.len(), 4);
        assert!(c.witnesses.iter().all(|w| is_t_cover(w, &all, 1)));
        assert_eq!(covering_number(&Family::empty(4, 2).unwrap(), 1, 5), Err(Error::EmptyFamily));
    }

    #[test]
    fn covering_number_truncates() {
        let all = Family::complete(6, 2).unwrap();
        let c = covering_number(&all, 1, 3).unwrap();
        assert_eq!(c.tau, 5);
        assert!(c.truncated);
        assert_eq!(c.witnesses.len(), 3);
    }

    #[test]
    fn covering_number_matches_oracle_on_small_families() {
        let all: Vec<_> = enumerate_k_subsets(6, 3).unwrap().collect();
        for mask in (1u32..1 << 20).step_by(997) {
            let members: Vec<_> = (0..20).filter(|i| mask >> i & 1 == 1).map(|i| all[i]).collect();
            let f = Family::new(6, 3, members).unwrap();
            for t in 1..=3 {
                assert_eq!(covering_number(&f, t, 1).unwrap().tau, tau_oracle(&f, t));
            }
        }
    }

    #[test]
    fn subset_iteration_counts() {
        let mut count = 0;
        for_each_subset_of_size(0b1011_0110, 3, |b| {
            assert_eq!(b & !0b1011_0110, 0);
            assert_eq!(b.count_ones(), 3);
            count += 1;
            true
        });
        assert_eq!(count, 10);
        let mut full = 0;
        for_each_subset_of_size(u64::MAX, 64, |_| {
            full += 1;
            true
        });
        assert_eq!(full, 1);
    }

    #[test]
    fn lemma32_on_six_and_ten_set_families() {
        let ex51 = Family::complete(4, 2).unwrap();
        assert_eq!(check_lemma32_bounds(&ex51, 1, 1), Outcome::Holds);
        let ex52 = Family::complete(5, 2).unwrap();
        assert_eq!(check_lemma32_bounds(&ex52, 1, 3), Outcome::Holds);
        // t-intersecting: skipped
        assert_eq!(check_lemma32_bounds(&star(6, 2, 1), 1, 1), Outcome::Skipped);
        // not s-almost: skipped
        assert_eq!(check_lemma32_bounds(&ex52, 1, 2), Outcome::Skipped);
        assert_eq!(check_lemma32_bounds(&ex51, 1, 0), Outcome::Skipped);
    }

    #[test]
    fn lemma33_formula() {
        assert_eq!(lemma33_bound(3, 2, 1), BigUint::from(6u32));
        assert_eq!(lemma33_bound(4, 2, 2), BigUint::from(40u32));
        // C([4],2) with t=1 has τ_1 = 3 = k+1 and 6 <= 1 * C(4,2)
        assert_eq!(check_lemma33_bound(&Family::complete(4, 2).unwrap(), 1, 1), Outcome::Holds);
        let ex = Family::complete(4, 2).unwrap().embed(5).unwrap();
        assert_eq!(check_lemma33_bound(&ex, 1, 1), Outcome::Holds);
        // n < 2k
        assert_eq!(check_lemma33_bound(&Family::complete(5, 3).unwrap(), 1, 9), Outcome::Skipped);
    }

    #[test]
    fn prop31_skips_outside_hypothesis() {
        let ex = Family::complete(4, 2).unwrap().embed(8).unwrap();
        // τ_1 = 3 > k
        assert_eq!(check_prop31_bound(&ex, 1, 1, &set(8, &[1])), Outcome::Skipped);
        let not_almost = Family::complete(8, 2).unwrap();
        assert_eq!(check_prop31_bound(&not_almost, 1, 1, &set(8, &[1])), Outcome::Skipped);
    }

    #[test]
    fn prop31_holds_on_triangle_plus_defects() {
        // t=1, k=2, n=8: the triangle {12,13,23} has τ_1 = 2.
        let f = fam(8, 2, &[&[1, 2], &[1, 3], &[2, 3], &[1, 4]]);
        assert_eq!(covering_number(&f, 1, 10).unwrap().tau, 2);
        for h in [&[][..], &[1], &[4]] {
            assert_eq!(check_prop31_bound(&f, 1, 1, &set(8, h)), Outcome::Holds);
        }
    }
}

//! Maximal families and the pairwise structure of their minimum t-covers.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::predicates::{covering_number, defect_report, is_s_almost_t_intersecting, Outcome};
use crate::sets::{binomial_u64, enumerate_k_subsets, Family, KSubset};

/// Skip the maximality test beyond this many candidate k-subsets.
const MAXIMALITY_LIMIT: u64 = 5_000_000;
const COVER_CAP: usize = 100_000;

/// Whether `x` can join `f` with every defect degree staying at most `s`.
fn can_add(f: &Family, degrees: &[usize], x: &KSubset, t: u32, s: usize) -> bool {
    let mut own = 0usize;
    for (m, &d) in f.iter().zip(degrees) {
        if m.meet(x) < t {
            own += 1;
            if d >= s || own > s {
                return false;
            }
        }
    }
    true
}

fn degrees(f: &Family, t: u32) -> Vec<usize> {
    defect_report(f, t).per_member.iter().map(|m| m.defect).collect()
}

/// No k-subset outside `f` can be added while staying s-almost
/// t-intersecting. `None` when `[n]` has too many k-subsets to check.
pub fn is_maximal(f: &Family, t: u32, s: usize) -> Option<bool> {
    if binomial_u64(f.n() as u64, f.k() as u64) > MAXIMALITY_LIMIT.into() {
        return None;
    }
    let deg = degrees(f, t);
    let subsets = enumerate_k_subsets(f.n(), f.k()).ok()?;
    Some(
        subsets
            .filter(|x| !f.contains(x))
            .all(|x| !can_add(f, &deg, &x, t, s)),
    )
}

/// Adds the sets of `order` one at a time whenever the result stays
/// s-almost t-intersecting.
pub fn extend_to_maximal(f: &Family, t: u32, s: usize, order: &[KSubset]) -> Result<Family> {
    let mut current = f.clone();
    let mut deg = degrees(&current, t);
    for x in order {
        if current.contains(x) || !can_add(&current, &deg, x, t, s) {
            continue;
        }
        current = current.with_member(*x)?;
        deg = degrees(&current, t);
    }
    Ok(current)
}

/// Greedy extension of the empty family along a random order of all
/// k-subsets of `[n]`; the result is maximal.
pub fn random_maximal_family<R: Rng>(n: u32, k: u32, t: u32, s: usize, rng: &mut R) -> Result<Family> {
    let mut order: Vec<KSubset> = enumerate_k_subsets(n, k)?.collect();
    order.shuffle(rng);
    extend_to_maximal(&Family::empty(n, k)?, t, s, &order)
}

/// For a maximal s-almost t-intersecting family with `τ_t ≤ k`,
/// `n ≥ 2k + s` and `k ≥ t + 2`, every two minimum t-covers meet in at
/// least t elements. Unmet preconditions give `Skipped`.
pub fn check_lemma41(f: &Family, t: u32, s: usize) -> Outcome {
    let (n, k) = (f.n() as u64, f.k() as u64);
    if f.is_empty() || (k as u32) < t + 2 || n < 2 * k + s as u64 {
        return Outcome::Skipped;
    }
    if !is_s_almost_t_intersecting(f, t, s).0 || is_maximal(f, t, s) != Some(true) {
        return Outcome::Skipped;
    }
    let covers = match covering_number(f, t, COVER_CAP) {
        Ok(c) if c.tau as u64 <= k && !c.truncated => c,
        _ => return Outcome::Skipped,
    };
    let w = &covers.witnesses;
    let holds = w
        .iter()
        .enumerate()
        .all(|(i, a)| w[i + 1..].iter().all(|b| a.meet(b) >= t));
    Outcome::from_bool(holds)
}

//! Canonical forms of set families under relabeling of the ground set.
//!
//! Individualization-refinement over the element/member incidence structure:
//! colour refinement splits the support into cells, the search individualizes
//! one element of the first non-singleton cell at a time, and every discrete
//! partition yields a labeling. The canonical form is the smallest
//! serialization over the explored labelings. Automorphisms discovered when a
//! leaf reproduces the first leaf prune both the current subtree and
//! equivalent siblings.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::sets::{BitIter, Family, KSubset};

/// Largest support the canonicalizer accepts.
pub const MAX_SUPPORT: u32 = 12;

/// Byte layout: `n`, `k`, support size, member count (u32, big-endian), then
/// each relabeled member mask (u64, big-endian) in ascending order. Support
/// elements are relabeled `1..=m`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm {
    bytes: Vec<u8>,
}

impl CanonicalForm {
    fn encode(n: u32, k: u32, support: u32, masks: &[u64]) -> Self {
        let mut bytes = Vec::with_capacity(7 + 8 * masks.len());
        bytes.extend([n as u8, k as u8, support as u8]);
        bytes.extend((masks.len() as u32).to_be_bytes());
        for m in masks {
            bytes.extend(m.to_be_bytes());
        }
        CanonicalForm { bytes }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        self.bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The canonical representative: the family relabeled so that its
    /// support is `{1, ..., m}`.
    pub fn to_family(&self) -> Result<Family> {
        let b = &self.bytes;
        if b.len() < 7 {
            return Err(Error::Parse("canonical form too short".into()));
        }
        let (n, k) = (b[0] as u32, b[1] as u32);
        let count = u32::from_be_bytes([b[3], b[4], b[5], b[6]]) as usize;
        if b.len() != 7 + 8 * count {
            return Err(Error::Parse("canonical form length mismatch".into()));
        }
        let members = b[7..]
            .chunks_exact(8)
            .map(|c| KSubset::from_bits(n, u64::from_be_bytes(c.try_into().expect("8 bytes"))))
            .collect::<Result<Vec<_>>>()?;
        Family::new(n, k, members)
    }
}

impl Serialize for CanonicalForm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl fmt::Debug for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalForm({})", self.to_hex())
    }
}

/// Family restricted to its support, elements renumbered `0..m`.
struct Local {
    m: usize,
    members: Vec<u64>,
    /// Members containing each element, as indices into `members`.
    incidence: Vec<Vec<usize>>,
}

impl Local {
    fn new(f: &Family) -> Self {
        let support: Vec<u32> = BitIter(f.support()).collect();
        let m = support.len();
        let mut index = [usize::MAX; 64];
        for (i, &e) in support.iter().enumerate() {
            index[e as usize] = i;
        }
        let members: Vec<u64> = f
            .iter()
            .map(|s| BitIter(s.bits()).fold(0u64, |acc, e| acc | 1u64 << index[e as usize]))
            .collect();
        let mut incidence = vec![Vec::new(); m];
        for (j, &mem) in members.iter().enumerate() {
            for e in BitIter(mem) {
                incidence[e as usize].push(j);
            }
        }
        Local {
            m,
            members,
            incidence,
        }
    }

    /// Replaces `colors` by the ranks of `keys` (a refinement when each key
    /// starts with the old colour).
    fn rerank<K: Ord + Clone>(keys: &[K]) -> Vec<u32> {
        let mut sorted = keys.to_vec();
        sorted.sort();
        sorted.dedup();
        keys.iter()
            .map(|k| sorted.binary_search(k).expect("present") as u32)
            .collect()
    }

    fn distinct(colors: &[u32]) -> usize {
        colors.iter().copied().max().map_or(0, |c| c as usize + 1)
    }

    /// Colour refinement to a stable partition.
    fn refine(&self, mut colors: Vec<u32>) -> Vec<u32> {
        loop {
            let member_keys: Vec<Vec<u32>> = self
                .members
                .iter()
                .map(|&mem| {
                    let mut sig: Vec<u32> = BitIter(mem).map(|e| colors[e as usize]).collect();
                    sig.sort_unstable();
                    sig
                })
                .collect();
            let member_colors = Self::rerank(&member_keys);
            let element_keys: Vec<(u32, Vec<u32>)> = (0..self.m)
                .map(|e| {
                    let mut sig: Vec<u32> =
                        self.incidence[e].iter().map(|&j| member_colors[j]).collect();
                    sig.sort_unstable();
                    (colors[e], sig)
                })
                .collect();
            let next = Self::rerank(&element_keys);
            if Self::distinct(&next) == Self::distinct(&colors) {
                return next;
            }
            colors = next;
        }
    }

    fn individualize(&self, colors: &[u32], e: usize) -> Vec<u32> {
        let keys: Vec<(u32, bool)> = (0..self.m).map(|x| (colors[x], x != e)).collect();
        self.refine(Self::rerank(&keys))
    }

    fn serialize(&self, labels: &[u32]) -> Vec<u64> {
        let mut masks: Vec<u64> = self
            .members
            .iter()
            .map(|&mem| BitIter(mem).fold(0u64, |acc, e| acc | 1u64 << labels[e as usize]))
            .collect();
        masks.sort_unstable();
        masks
    }
}

struct Search<'a> {
    local: &'a Local,
    first: Option<(Vec<u32>, Vec<u64>, Vec<usize>)>,
    best: Option<Vec<u64>>,
    /// Automorphisms as element permutations.
    generators: Vec<Vec<usize>>,
}

impl Search<'_> {
    /// Explores the node reached by individualizing `path`; returns the depth
    /// to backjump to when a leaf matched the first leaf.
    fn explore(&mut self, colors: Vec<u32>, path: &mut Vec<usize>) -> Option<usize> {
        let m = self.local.m;
        if Local::distinct(&colors) == m {
            return self.leaf(colors, path);
        }
        let target = first_nontrivial_cell(&colors);
        let cell: Vec<usize> = (0..m).filter(|&x| colors[x] == target).collect();
        let depth = path.len();
        let mut explored: Vec<usize> = Vec::new();
        for &e in &cell {
            if self.equivalent_to_explored(path, &explored, e) {
                continue;
            }
            explored.push(e);
            path.push(e);
            let child = self.local.individualize(&colors, e);
            let jump = self.explore(child, path);
            path.pop();
            if let Some(level) = jump {
                if level < depth {
                    return Some(level);
                }
            }
        }
        None
    }

    fn leaf(&mut self, labels: Vec<u32>, path: &[usize]) -> Option<usize> {
        let ser = self.local.serialize(&labels);
        match &self.first {
            None => {
                self.best = Some(ser.clone());
                self.first = Some((labels, ser, path.to_vec()));
                None
            }
            Some((first_labels, first_ser, first_path)) => {
                if self.best.as_ref().is_none_or(|b| ser.cmp(b) == Ordering::Less) {
                    self.best = Some(ser.clone());
                }
                if ser != *first_ser {
                    return None;
                }
                // labels ∘ γ = first_labels, i.e. γ(x) = labels⁻¹(first_labels(x)).
                let mut inverse = vec![0usize; labels.len()];
                for (x, &l) in labels.iter().enumerate() {
                    inverse[l as usize] = x;
                }
                let gamma: Vec<usize> = first_labels.iter().map(|&l| inverse[l as usize]).collect();
                self.generators.push(gamma);
                let common = first_path
                    .iter()
                    .zip(path)
                    .take_while(|(a, b)| a == b)
                    .count();
                Some(common)
            }
        }
    }

    /// Whether a known automorphism fixing `path` pointwise maps an explored
    /// sibling onto `e`.
    fn equivalent_to_explored(&self, path: &[usize], explored: &[usize], e: usize) -> bool {
        if explored.is_empty() || self.generators.is_empty() {
            return false;
        }
        let m = self.local.m;
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for g in &self.generators {
            if path.iter().any(|&v| g[v] != v) {
                continue;
            }
            for (x, &image) in g.iter().enumerate() {
                let (a, b) = (find(&mut parent, x), find(&mut parent, image));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let root = find(&mut parent, e);
        explored.iter().any(|&x| find(&mut parent, x) == root)
    }
}

fn first_nontrivial_cell(colors: &[u32]) -> u32 {
    let mut counts = vec![0usize; colors.len()];
    for &c in colors {
        counts[c as usize] += 1;
    }
    counts.iter().position(|&c| c > 1).expect("partition is not discrete") as u32
}

/// Canonical form of `f`; isomorphic families (same `n`, `k`) get
/// byte-identical forms.
pub fn canonicalize(f: &Family) -> Result<CanonicalForm> {
    let support = f.support().count_ones();
    if support > MAX_SUPPORT {
        return Err(Error::SupportTooLarge {
            support,
            limit: MAX_SUPPORT,
        });
    }
    let local = Local::new(f);
    if local.m == 0 {
        return Ok(CanonicalForm::encode(f.n(), f.k(), 0, &[]));
    }
    let colors = local.refine(vec![0; local.m]);
    let mut search = Search {
        local: &local,
        first: None,
        best: None,
        generators: Vec::new(),
    };
    search.explore(colors, &mut Vec::new());
    let best = search.best.expect("at least one leaf");
    Ok(CanonicalForm::encode(f.n(), f.k(), support, &best))
}

pub fn are_isomorphic(a: &Family, b: &Family) -> Result<bool> {
    if a.n() != b.n() || a.k() != b.k() || a.len() != b.len() {
        return Ok(false);
    }
    Ok(canonicalize(a)? == canonicalize(b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::apply_permutation;

    fn fam(n: u32, k: u32, lists: &[&[u32]]) -> Family {
        let v: Vec<Vec<u32>> = lists.iter().map(|l| l.to_vec()).collect();
        Family::from_element_lists(n, k, &v).unwrap()
    }

    /// Isomorphism by trying every permutation of `[n]`.
    fn brute_isomorphic(a: &Family, b: &Family) -> bool {
        let mut perm: Vec<u32> = (1..=a.n()).collect();
        let mut found = false;
        permute(&mut perm, 0, &mut |p| {
            if !found && apply_permutation(a, p).unwrap() == *b {
                found = true;
            }
        });
        found
    }

    fn permute(v: &mut Vec<u32>, i: usize, visit: &mut dyn FnMut(&[u32])) {
        if i == v.len() {
            visit(v);
            return;
        }
        for j in i..v.len() {
            v.swap(i, j);
            permute(v, i + 1, visit);
            v.swap(i, j);
        }
    }

    #[test]
    fn shared_element_pairs_are_isomorphic() {
        let a = fam(3, 2, &[&[1, 2], &[1, 3]]);
        let b = fam(3, 2, &[&[2, 3], &[1, 2]]);
        assert_eq!(canonicalize(&a).unwrap(), canonicalize(&b).unwrap());
    }

    #[test]
    fn disjoint_pair_differs_from_star_pair() {
        let a = fam(4, 2, &[&[1, 2], &[3, 4]]);
        let b = fam(4, 2, &[&[1, 2], &[1, 3]]);
        assert_ne!(canonicalize(&a).unwrap(), canonicalize(&b).unwrap());
    }

    #[test]
    fn idempotent() {
        let f = fam(7, 3, &[&[1, 2, 5], &[2, 5, 7], &[1, 3, 4], &[4, 6, 7]]);
        let c = canonicalize(&f).unwrap();
        let back = c.to_family().unwrap();
        assert_eq!(canonicalize(&back).unwrap(), c);
        assert_eq!(back.len(), f.len());
    }

    #[test]
    fn agrees_with_brute_force_isomorphism() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let all = Family::complete(6, 3).unwrap();
        let sample = |rng: &mut rand_chacha::ChaCha8Rng| {
            let size = rng.gen_range(1..=6);
            let picks = rand::seq::index::sample(rng, all.len(), size);
            Family::new(6, 3, picks.iter().map(|i| all.members()[i]).collect()).unwrap()
        };
        let mut equal = 0;
        for _ in 0..300 {
            let a = sample(&mut rng);
            let b = sample(&mut rng);
            let iso = a.len() == b.len() && brute_isomorphic(&a, &b);
            assert_eq!(are_isomorphic(&a, &b).unwrap(), iso, "{a:?} {b:?}");
            let mut perm: Vec<u32> = (1..=6).collect();
            perm.swap(0, rng.gen_range(0..6));
            let c = apply_permutation(&a, &perm).unwrap();
            assert_eq!(canonicalize(&a).unwrap(), canonicalize(&c).unwrap());
            equal += iso as usize;
        }
        assert!(equal > 0);
    }

    #[test]
    fn symmetric_families_are_fast() {
        // 12! labelings without pruning
        let f = Family::complete(12, 2).unwrap();
        let c = canonicalize(&f).unwrap();
        let rev: Vec<u32> = (1..=12).rev().collect();
        assert_eq!(canonicalize(&apply_permutation(&f, &rev).unwrap()).unwrap(), c);
        let g = Family::complete(12, 6).unwrap();
        assert!(canonicalize(&g).is_ok());
    }

    #[test]
    fn refuses_large_support() {
        let f = Family::complete(13, 1).unwrap();
        assert_eq!(
            canonicalize(&f),
            Err(Error::SupportTooLarge {
                support: 13,
                limit: 12
            })
        );
    }

    #[test]
    fn empty_family() {
        let e = Family::empty(5, 2).unwrap();
        let c = canonicalize(&e).unwrap();
        assert_eq!(c.to_family().unwrap(), e);
    }
}

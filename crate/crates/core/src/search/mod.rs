//! Exact branch-and-bound search for maximum s-almost t-intersecting
//! families on the k-subsets of a small ground set.

mod canon;
mod maximal;
mod thm3;

pub use canon::{are_isomorphic, canonicalize, CanonicalForm, MAX_SUPPORT};
pub use maximal::{check_lemma41, extend_to_maximal, is_maximal, random_maximal_family};
pub use thm3::{verify_theorem3, ClassMatch, Thm3Options, Thm3Verdict};

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::sets::{binomial_u64, enumerate_k_subsets, BitIter, Family, KSubset, Params, MAX_GROUND};

pub const DEFAULT_VERTEX_CAP: u64 = 40;
pub const DEFAULT_EXTREMAL_CAP: usize = 100_000;

/// Frontier depth used to split the tree across threads.
const SPLIT_DEPTH: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub params: Params,
    pub require_not_t_intersecting: bool,
    pub collect_all_extremal: bool,
    pub node_limit: u64,
    pub time_limit: Option<Duration>,
    pub vertex_cap: u64,
    pub extremal_cap: usize,
    pub parallel: bool,
}

impl SearchConfig {
    pub fn new(params: Params) -> Self {
        SearchConfig {
            params,
            require_not_t_intersecting: false,
            collect_all_extremal: false,
            node_limit: u64::MAX,
            time_limit: None,
            vertex_cap: DEFAULT_VERTEX_CAP,
            extremal_cap: DEFAULT_EXTREMAL_CAP,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub prunes: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    /// `None` when no admissible family was found.
    pub max_size: Option<usize>,
    pub extremal: Vec<Family>,
    /// More extremal families exist than `extremal_cap`.
    pub extremal_truncated: bool,
    pub canonical_classes: Vec<CanonicalForm>,
    /// Canonical forms were not computed because a support was too large.
    pub canonical_skipped: bool,
    pub stats: SearchStats,
    pub exhausted: bool,
}

/// The Kneser conflict graph on the candidate k-subsets.
struct Graph {
    n: u32,
    k: u32,
    vertices: Vec<KSubset>,
    adj: Vec<u64>,
    s: u32,
}

impl Graph {
    fn degree(&self, v: usize, chosen: u64) -> u32 {
        (self.adj[v] & chosen).count_ones()
    }

    fn addable(&self, v: usize, st: &State) -> bool {
        self.degree(v, st.chosen) <= self.s && self.adj[v] & st.saturated == 0
    }

    /// Whether some future inclusion from `st.cand` can block `v`.
    fn blockable(&self, v: usize, st: &State) -> bool {
        if self.adj[v] & st.cand != 0 {
            return true;
        }
        BitIter(self.adj[v] & st.chosen).any(|u| self.adj[u as usize] & st.cand != 0)
    }

    fn include(&self, st: &State, v: usize) -> State {
        let bit = 1u64 << v;
        let chosen = st.chosen | bit;
        let mut saturated = st.saturated;
        let mut region = self.adj[v];
        for u in BitIter((self.adj[v] & st.chosen) | bit) {
            if saturated >> u & 1 == 0 && self.degree(u as usize, chosen) >= self.s {
                saturated |= 1u64 << u;
                region |= self.adj[u as usize];
            }
        }
        let mut next = State {
            chosen,
            cand: st.cand & !bit,
            open: st.open,
            saturated,
            conflict: st.conflict || self.adj[v] & st.chosen != 0,
        };
        for w in BitIter((next.cand | next.open) & region) {
            if !self.addable(w as usize, &next) {
                next.cand &= !(1u64 << w);
                next.open &= !(1u64 << w);
            }
        }
        next
    }

    fn exclude(&self, st: &State, v: usize) -> State {
        let bit = 1u64 << v;
        State {
            cand: st.cand & !bit,
            open: st.open | bit,
            ..*st
        }
    }

    /// An excluded vertex that can never be blocked makes every completion
    /// non-maximal.
    fn dead(&self, st: &State) -> bool {
        BitIter(st.open).any(|v| !self.blockable(v as usize, st))
    }

    /// Greedy clique partition of the candidates; a clique admits at most
    /// `r` new members where the r-th smallest current degree is at most
    /// `s + 1 - r`.
    fn upper_bound(&self, st: &State) -> usize {
        let mut rest = st.cand;
        let mut total = 0usize;
        let mut degrees: Vec<u32> = Vec::with_capacity(64);
        while rest != 0 {
            let first = rest.trailing_zeros() as usize;
            let mut common = self.adj[first];
            let mut clique = 1u64 << first;
            for w in BitIter(rest & common) {
                if common >> w & 1 == 1 {
                    clique |= 1u64 << w;
                    common &= self.adj[w as usize];
                }
            }
            rest &= !clique;
            degrees.clear();
            degrees.extend(BitIter(clique).map(|w| self.degree(w as usize, st.chosen)));
            degrees.sort_unstable();
            let fit = degrees
                .iter()
                .enumerate()
                .take_while(|&(i, &d)| d + i as u32 <= self.s)
                .count();
            total += fit;
        }
        st.chosen.count_ones() as usize + total
    }
}

#[derive(Clone, Copy)]
struct State {
    chosen: u64,
    /// Still-undecided vertices that can be added.
    cand: u64,
    /// Excluded vertices that are still addable.
    open: u64,
    /// Chosen vertices already at defect degree `s`.
    saturated: u64,
    /// The chosen family contains a pair meeting in fewer than t elements.
    conflict: bool,
}

struct Shared<'a> {
    cfg: &'a SearchConfig,
    graph: &'a Graph,
    /// Best admissible size found by any worker, or -1.
    best: AtomicI64,
    nodes: AtomicU64,
    stop: AtomicBool,
    start: Instant,
}

struct Worker<'a> {
    shared: &'a Shared<'a>,
    best: i64,
    found: Vec<u64>,
    truncated: bool,
    nodes: u64,
    unflushed: u64,
    prunes: u64,
}

impl<'a> Worker<'a> {
    fn new(shared: &'a Shared<'a>) -> Self {
        Worker {
            shared,
            best: -1,
            found: Vec::new(),
            truncated: false,
            nodes: 0,
            unflushed: 0,
            prunes: 0,
        }
    }

    fn tick(&mut self) -> bool {
        self.nodes += 1;
        self.unflushed += 1;
        let sh = self.shared;
        let batch = if sh.cfg.parallel { 256 } else { 1 };
        if self.unflushed >= batch {
            let total = sh.nodes.fetch_add(self.unflushed, Ordering::Relaxed) + self.unflushed;
            self.unflushed = 0;
            if total >= sh.cfg.node_limit {
                sh.stop.store(true, Ordering::Relaxed);
            }
            if self.nodes % 4096 < batch {
                if let Some(limit) = sh.cfg.time_limit {
                    if sh.start.elapsed() >= limit {
                        sh.stop.store(true, Ordering::Relaxed);
                    }
                }
            }
        }
        !sh.stop.load(Ordering::Relaxed)
    }

    fn flush(&mut self) {
        self.shared.nodes.fetch_add(self.unflushed, Ordering::Relaxed);
        self.unflushed = 0;
    }

    fn prune(&self, bound: usize) -> bool {
        let bound = bound as i64;
        let global = self.shared.best.load(Ordering::Relaxed);
        if self.shared.cfg.collect_all_extremal {
            bound < self.best.max(global)
        } else {
            bound < global || bound <= self.best
        }
    }

    fn record(&mut self, st: &State) {
        let cfg = self.shared.cfg;
        if cfg.require_not_t_intersecting && !st.conflict {
            return;
        }
        let size = st.chosen.count_ones() as i64;
        if size > self.best {
            self.best = size;
            self.found.clear();
            self.found.push(st.chosen);
            self.truncated = false;
            self.shared.best.fetch_max(size, Ordering::Relaxed);
        } else if size == self.best && cfg.collect_all_extremal {
            if self.found.len() < cfg.extremal_cap {
                self.found.push(st.chosen);
            } else {
                self.truncated = true;
            }
        }
    }

    fn run(&mut self, st: State) {
        if !self.tick() {
            return;
        }
        let g = self.shared.graph;
        if g.dead(&st) {
            self.prunes += 1;
            return;
        }
        if st.cand == 0 {
            self.record(&st);
            return;
        }
        let quick = st.chosen.count_ones() as usize + st.cand.count_ones() as usize;
        if self.prune(quick) || self.prune(g.upper_bound(&st)) {
            self.prunes += 1;
            return;
        }
        let v = st.cand.trailing_zeros() as usize;
        self.run(g.include(&st, v));
        self.run(g.exclude(&st, v));
    }
}

fn build_graph(cfg: &SearchConfig) -> Result<Graph> {
    let p = cfg.params;
    if cfg.node_limit == 0 {
        return param("node_limit must be at least 1");
    }
    if p.n > MAX_GROUND as u64 {
        return param(format!("n = {} exceeds 64", p.n));
    }
    let cap = cfg.vertex_cap.min(64);
    let count = binomial_u64(p.n, p.k);
    if count > cap.into() {
        return Err(Error::VertexCap {
            n: p.n as u32,
            k: p.k as u32,
            vertices: u64::try_from(&count).unwrap_or(u64::MAX),
            cap,
        });
    }
    let vertices: Vec<KSubset> = enumerate_k_subsets(p.n as u32, p.k as u32)?.collect();
    let t = p.t as u32;
    let adj = vertices
        .iter()
        .map(|a| {
            vertices
                .iter()
                .enumerate()
                .filter(|(_, b)| a.meet(b) < t)
                .fold(0u64, |acc, (j, _)| acc | 1u64 << j)
        })
        .collect();
    Ok(Graph {
        n: p.n as u32,
        k: p.k as u32,
        vertices,
        adj,
        s: p.s.min(u32::MAX as u64) as u32,
    })
}

/// Splits the tree into independent subproblems, in search order.
fn frontier(g: &Graph, st: State, depth: u32, out: &mut Vec<State>) {
    if g.dead(&st) {
        return;
    }
    if depth == 0 || st.cand == 0 {
        out.push(st);
        return;
    }
    let v = st.cand.trailing_zeros() as usize;
    frontier(g, g.include(&st, v), depth - 1, out);
    frontier(g, g.exclude(&st, v), depth - 1, out);
}

impl Graph {
    fn family(&self, chosen: u64) -> Family {
        let members = BitIter(chosen).map(|v| self.vertices[v as usize]).collect();
        Family::new(self.n, self.k, members).expect("distinct k-subsets")
    }
}

/// Maximum s-almost t-intersecting families among the k-subsets of `[n]`.
pub fn max_family(cfg: &SearchConfig) -> Result<SearchResult> {
    let start = Instant::now();
    let graph = build_graph(cfg)?;
    let all = if graph.vertices.len() == 64 {
        u64::MAX
    } else {
        (1u64 << graph.vertices.len()) - 1
    };
    let root = State {
        chosen: 0,
        cand: all,
        open: 0,
        saturated: 0,
        conflict: false,
    };
    let shared = Shared {
        cfg,
        graph: &graph,
        best: AtomicI64::new(-1),
        nodes: AtomicU64::new(0),
        stop: AtomicBool::new(false),
        start,
    };
    let workers: Vec<Worker> = if cfg.parallel {
        let mut tasks = Vec::new();
        frontier(&graph, root, SPLIT_DEPTH, &mut tasks);
        tasks
            .into_par_iter()
            .map(|st| {
                let mut w = Worker::new(&shared);
                w.run(st);
                w.flush();
                w
            })
            .collect()
    } else {
        let mut w = Worker::new(&shared);
        w.run(root);
        w.flush();
        vec![w]
    };

    let best = workers.iter().map(|w| w.best).max().unwrap_or(-1);
    let mut chosen: Vec<u64> = Vec::new();
    let mut truncated = false;
    for w in workers.iter().filter(|w| w.best == best && best >= 0) {
        if !cfg.collect_all_extremal {
            chosen.push(w.found[0]);
            break;
        }
        truncated |= w.truncated;
        for &c in &w.found {
            if chosen.len() < cfg.extremal_cap {
                chosen.push(c);
            } else {
                truncated = true;
            }
        }
    }
    let extremal: Vec<Family> = chosen.iter().map(|&c| graph.family(c)).collect();
    let (canonical_classes, canonical_skipped) = classes(&extremal);
    let stopped = shared.stop.load(Ordering::Relaxed);
    Ok(SearchResult {
        max_size: (best >= 0).then_some(best as usize),
        extremal,
        extremal_truncated: truncated,
        canonical_classes,
        canonical_skipped,
        stats: SearchStats {
            nodes: shared.nodes.load(Ordering::Relaxed),
            prunes: workers.iter().map(|w| w.prunes).sum(),
            wall_seconds: start.elapsed().as_secs_f64(),
        },
        exhausted: !stopped,
    })
}

/// Sorted, deduplicated canonical forms; empty with the flag set when some
/// support exceeds the canonicalization limit.
fn classes(families: &[Family]) -> (Vec<CanonicalForm>, bool) {
    let forms: Result<BTreeSet<CanonicalForm>> = families.par_iter().map(canonicalize).collect();
    match forms {
        Ok(set) => (set.into_iter().collect(), false),
        Err(_) => (Vec::new(), true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicates::{is_s_almost_t_intersecting, is_t_intersecting};

    fn cfg(n: u64, k: u64, t: u64, s: u64, not_t: bool, all: bool) -> SearchConfig {
        let mut c = SearchConfig::new(Params::new(n, k, t, s).unwrap());
        c.require_not_t_intersecting = not_t;
        c.collect_all_extremal = all;
        c
    }

    /// Every subfamily, checked directly.
    fn brute(n: u64, k: u64, t: u64, s: u64, not_t: bool) -> (Option<usize>, Vec<Family>) {
        let all = Family::complete(n as u32, k as u32).unwrap();
        let m = all.len();
        let mut best: Option<usize> = None;
        let mut fams = Vec::new();
        for mask in 0u64..(1u64 << m) {
            let f = all.filter({
                let mut i = 0;
                move |_| {
                    i += 1;
                    mask >> (i - 1) & 1 == 1
                }
            });
            if !is_s_almost_t_intersecting(&f, t as u32, s as usize).0 {
                continue;
            }
            if not_t && is_t_intersecting(&f, t as u32) {
                continue;
            }
            let size = f.len();
            if best.is_none_or(|b| size > b) {
                best = Some(size);
                fams.clear();
            }
            if best == Some(size) {
                fams.push(f);
            }
        }
        (best, fams)
    }

    #[test]
    fn four_two_one_one_not_intersecting() {
        let r = max_family(&cfg(4, 2, 1, 1, true, true)).unwrap();
        assert_eq!(r.max_size, Some(6));
        assert!(r.exhausted);
        assert_eq!(r.canonical_classes.len(), 1);
        let full = Family::complete(4, 2).unwrap();
        assert_eq!(r.canonical_classes[0], canonicalize(&full).unwrap());
    }

    #[test]
    fn five_two_star() {
        let r = max_family(&cfg(5, 2, 1, 0, false, true)).unwrap();
        assert_eq!(r.max_size, Some(4));
        for f in &r.extremal {
            assert!(is_t_intersecting(f, 1));
        }
    }

    #[test]
    fn six_two_one_three() {
        let r = max_family(&cfg(6, 2, 1, 3, true, false)).unwrap();
        assert_eq!(r.max_size, Some(10));
        assert_eq!(r.extremal.len(), 1);
    }

    #[test]
    fn agrees_with_brute_force() {
        for &(n, k) in &[(4u64, 2u64), (5, 2), (4, 3), (5, 3), (6, 5)] {
            for t in 1..=k {
                for s in 0..=3 {
                    for not_t in [false, true] {
                        let (size, fams) = brute(n, k, t, s, not_t);
                        for parallel in [false, true] {
                            let mut c = cfg(n, k, t, s, not_t, true);
                            c.parallel = parallel;
                            let r = max_family(&c).unwrap();
                            assert_eq!(r.max_size, size, "{n} {k} {t} {s} {not_t}");
                            assert_eq!(r.extremal.len(), fams.len(), "{n} {k} {t} {s} {not_t}");
                            let want: BTreeSet<_> = fams.iter().map(|f| canonicalize(f).unwrap()).collect();
                            let got: BTreeSet<_> = r.canonical_classes.iter().cloned().collect();
                            assert_eq!(got, want);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let mut a = cfg(6, 2, 1, 2, true, false);
        a.parallel = false;
        let mut b = a.clone();
        b.parallel = true;
        let (ra, rb) = (max_family(&a).unwrap(), max_family(&b).unwrap());
        assert_eq!(ra.max_size, rb.max_size);
        assert_eq!(ra.extremal, rb.extremal);
    }

    #[test]
    fn vertex_cap_refusal() {
        let c = cfg(10, 3, 1, 1, false, false);
        assert!(matches!(max_family(&c), Err(Error::VertexCap { vertices: 120, .. })));
    }

    #[test]
    fn node_limit_marks_partial() {
        let mut c = cfg(6, 2, 1, 3, true, true);
        c.node_limit = 5;
        c.parallel = false;
        let r = max_family(&c).unwrap();
        assert!(!r.exhausted);
        c.node_limit = 0;
        assert!(max_family(&c).is_err());
    }
}

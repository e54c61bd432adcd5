//! Exhaustive classification check for `(t+1)`-uniform s-almost
//! t-intersecting families that are not t-intersecting.

use std::time::Duration;

use serde::Serialize;

use super::{canonicalize, max_family, CanonicalForm, SearchConfig, SearchStats, DEFAULT_VERTEX_CAP};
use crate::constructions::{thm3_expected_size, thm3_family, Thm3Case};
use crate::error::{param, Result};
use crate::sets::{Family, Params};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thm3Options {
    pub node_limit: u64,
    pub time_limit: Option<Duration>,
    pub vertex_cap: u64,
    pub parallel: bool,
}

impl Default for Thm3Options {
    fn default() -> Self {
        Thm3Options {
            node_limit: u64::MAX,
            time_limit: None,
            vertex_cap: DEFAULT_VERTEX_CAP,
            parallel: true,
        }
    }
}

/// One isomorphism class of extremal families and the cases it matches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMatch {
    pub canonical: CanonicalForm,
    pub representative: Family,
    pub cases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thm3Verdict {
    pub t: u64,
    pub s: u64,
    pub n: u64,
    pub max_size: Option<usize>,
    pub expected_size: u64,
    pub classes: Vec<ClassMatch>,
    pub unmatched: usize,
    pub exhausted: bool,
    pub stats: SearchStats,
}

impl Thm3Verdict {
    pub fn size_matches(&self) -> bool {
        self.max_size == Some(self.expected_size as usize)
    }

    /// Optimality proven, size as predicted, every class matched.
    pub fn verified(&self) -> bool {
        self.exhausted && self.size_matches() && self.unmatched == 0 && !self.classes.is_empty()
    }

    /// Case tags matched by some class, in case order.
    pub fn matched_cases(&self) -> Vec<String> {
        let mut tags: Vec<String> = Vec::new();
        for case in Thm3Case::ALL {
            let tag = case.roman().to_string();
            if self.classes.iter().any(|c| c.cases.contains(&tag)) {
                tags.push(tag);
            }
        }
        tags
    }
}

/// Canonical forms of every applicable case family embedded in `[n]`.
fn case_forms(t: u64, s: u64, n: u64) -> Result<Vec<(Thm3Case, CanonicalForm)>> {
    let mut out = Vec::new();
    for case in Thm3Case::ALL {
        if !case.applies(t, s) || case.natural_ground(t, s) > n {
            continue;
        }
        if let Some(f) = thm3_family(case, t, s, n)?.family {
            out.push((case, canonicalize(&f)?));
        }
    }
    Ok(out)
}

/// Runs the constrained search at `(t, s, n)` with `k = t + 1`, collects
/// every extremal family and matches its isomorphism class against the
/// classified constructions.
pub fn verify_theorem3(t: u64, s: u64, n: u64, opts: &Thm3Options) -> Result<Thm3Verdict> {
    if t == 0 || s == 0 {
        return param("t and s must be positive");
    }
    if n < t + s + 2 {
        return param(format!("need n >= t+s+2 = {}, got n={n}", t + s + 2));
    }
    let mut cfg = SearchConfig::new(Params::new(n, t + 1, t, s)?);
    cfg.require_not_t_intersecting = true;
    cfg.collect_all_extremal = true;
    cfg.node_limit = opts.node_limit;
    cfg.time_limit = opts.time_limit;
    cfg.vertex_cap = opts.vertex_cap;
    cfg.parallel = opts.parallel;
    let result = max_family(&cfg)?;
    let forms = case_forms(t, s, n)?;

    let mut classes = Vec::new();
    for canonical in &result.canonical_classes {
        let representative = result
            .extremal
            .iter()
            .find(|f| canonicalize(f).as_ref() == Ok(canonical))
            .cloned()
            .expect("class comes from an extremal family");
        let cases = forms
            .iter()
            .filter(|(_, form)| form == canonical)
            .map(|(case, _)| case.roman().to_string())
            .collect();
        classes.push(ClassMatch {
            canonical: canonical.clone(),
            representative,
            cases,
        });
    }
    let unmatched = classes.iter().filter(|c| c.cases.is_empty()).count()
        + usize::from(result.canonical_skipped);
    Ok(Thm3Verdict {
        t,
        s,
        n,
        max_size: result.max_size,
        expected_size: thm3_expected_size(s),
        classes,
        unmatched,
        exhausted: result.exhausted,
        stats: result.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t1_s1_n4_matches_first_case() {
        let v = verify_theorem3(1, 1, 4, &Thm3Options::default()).unwrap();
        assert!(v.verified());
        assert_eq!(v.max_size, Some(6));
        assert_eq!(v.matched_cases(), vec!["i"]);
    }

    #[test]
    fn t1_s2_n5_matches_general_case() {
        let v = verify_theorem3(1, 2, 5, &Thm3Options::default()).unwrap();
        assert!(v.verified());
        assert_eq!(v.max_size, Some(7));
        assert_eq!(v.matched_cases(), vec!["vi"]);
    }

    #[test]
    fn t2_s1_n5_matches_first_case() {
        let v = verify_theorem3(2, 1, 5, &Thm3Options::default()).unwrap();
        assert!(v.verified());
        assert_eq!(v.max_size, Some(6));
        assert_eq!(v.matched_cases(), vec!["i"]);
    }

    #[test]
    fn below_threshold_refused() {
        assert!(verify_theorem3(1, 2, 4, &Thm3Options::default()).is_err());
    }
}

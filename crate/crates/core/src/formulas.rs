//! Exact evaluation of the bound functions `f`, `g`, `h` and sweeps that
//! machine-check the binomial inequalities relating them.
//!
//! Everything here is integer arithmetic on [`BigUint`]/[`BigInt`]; the one
//! rational constant (17/18) is compared by cross-multiplication.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{pow, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::predicates::Outcome;
use crate::sets::binomial;

/// `C(n - a, r)`, zero when `r < 0` or `n - a < r`.
fn binom_shifted(n: &BigUint, a: u64, r: i64) -> BigUint {
    if r < 0 {
        return BigUint::zero();
    }
    let a = BigUint::from(a);
    if *n < a {
        return BigUint::zero();
    }
    binomial(&(n - a), r as u64)
}

fn big_pow(base: u64, exp: u64) -> BigUint {
    pow(BigUint::from(base), exp as usize)
}

fn check_basic(n: &BigUint, k: u64, t: u64) -> Result<()> {
    if t == 0 || k < t || *n < BigUint::from(k) {
        return param(format!("need n >= k >= t >= 1, got n={n} k={k} t={t}"));
    }
    Ok(())
}

/// `f(n,k,t,s,x) = (k-t+1)^(x-t) C(x,t) C(n-x,k-x) + Σ_{i=0}^{x-t-1} s (k-t+1)^i C(x,t)`.
pub fn eval_f(n: &BigUint, k: u64, t: u64, s: u64, x: u64) -> Result<BigUint> {
    check_basic(n, k, t)?;
    if x < t {
        return param(format!("f needs x >= t, got x={x} t={t}"));
    }
    let q = k - t + 1;
    let cxt = binomial(&BigUint::from(x), t);
    let lead = big_pow(q, x - t) * &cxt * binom_shifted(n, x, k as i64 - x as i64);
    let geometric: BigUint = (0..x - t).map(|i| big_pow(q, i)).sum();
    Ok(lead + BigUint::from(s) * geometric * cxt)
}

/// `g(n,k,t,s,x) = (x-t) C(n-t-1,k-t-1) + (k-x+1)(k-t+1) C(n-t-2,k-t-2)
///   + t(k-t) C(n-x,k-x) + s(k-x+3)`.
///
/// Defined for `t <= x <= k+1`, where every coefficient is nonnegative.
pub fn eval_g(n: &BigUint, k: u64, t: u64, s: u64, x: u64) -> Result<BigUint> {
    check_basic(n, k, t)?;
    if x < t || x > k + 1 {
        return param(format!("g needs t <= x <= k+1, got x={x} t={t} k={k}"));
    }
    let (ki, ti) = (k as i64, t as i64);
    let a = BigUint::from(x - t) * binom_shifted(n, t + 1, ki - ti - 1);
    let b = BigUint::from((k + 1 - x) * (k - t + 1)) * binom_shifted(n, t + 2, ki - ti - 2);
    let c = BigUint::from(t * (k - t)) * binom_shifted(n, x, ki - x as i64);
    let d = BigUint::from(s * (k + 3 - x));
    Ok(a + b + c + d)
}

/// Size of the family `{F : [t] ⊆ F, |F ∩ [k+1]| >= t+1}` together with its
/// two augmenting blocks, computed by conditioning on `j = |F ∩ [k+1]|`:
/// `Σ_{j=t+1}^{k} C(k+1-t, j-t) C(n-k-1, k-j) + s + min(t, s)`.
pub fn eval_h(n: &BigUint, k: u64, t: u64, s: u64) -> Result<BigUint> {
    check_basic(n, k, t)?;
    if k < t + 1 {
        return param(format!("h needs k >= t+1, got k={k} t={t}"));
    }
    if *n < BigUint::from(2 * k + s - t) {
        return param(format!("h needs n >= 2k - t + s = {}, got n={n}", 2 * k + s - t));
    }
    h_formula(n, k, t, s)
}

/// The closed form behind [`eval_h`] without the ground-set size condition;
/// below `n = 2k - t + s` it no longer counts a family.
pub fn h_formula(n: &BigUint, k: u64, t: u64, s: u64) -> Result<BigUint> {
    check_basic(n, k, t)?;
    if k < t + 1 {
        return param(format!("h needs k >= t+1, got k={k} t={t}"));
    }
    let body: BigUint = (t + 1..=k)
        .map(|j| {
            binomial(&BigUint::from(k + 1 - t), j - t) * binom_shifted(n, k + 1, (k - j) as i64)
        })
        .sum();
    Ok(body + BigUint::from(s + s.min(t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LemmaId {
    /// `(k-t+1)^(j-i) C(n-j,k-j) <= C(n-i,k-i)`
    #[serde(rename = "binomial_ratio")]
    BinomialRatio,
    /// `f` strictly decreasing in `x`
    #[serde(rename = "f_decreasing")]
    FDecreasing,
    /// `g` strictly increasing in `x`
    #[serde(rename = "g_increasing")]
    GIncreasing,
    /// lower bounds on `h`
    #[serde(rename = "h_lower_bound")]
    HLowerBound,
}

impl LemmaId {
    pub const ALL: [LemmaId; 4] = [
        LemmaId::BinomialRatio,
        LemmaId::FDecreasing,
        LemmaId::GIncreasing,
        LemmaId::HLowerBound,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LemmaId::BinomialRatio => "binomial_ratio",
            LemmaId::FDecreasing => "f_decreasing",
            LemmaId::GIncreasing => "g_increasing",
            LemmaId::HLowerBound => "h_lower_bound",
        }
    }

    /// Smallest `k - t` the lemma's hypothesis allows.
    pub fn min_gap(self) -> u64 {
        match self {
            LemmaId::BinomialRatio => 1,
            LemmaId::FDecreasing | LemmaId::HLowerBound => 2,
            LemmaId::GIncreasing => 3,
        }
    }

    /// Smallest `n` the lemma's hypothesis allows.
    pub fn min_n(self, k: u64, t: u64, s: u64) -> u64 {
        let sq = (k - t + 1).pow(2);
        match self {
            LemmaId::BinomialRatio => (t + 1) * sq,
            LemmaId::FDecreasing => 2 * (t + 1) * (sq + s),
            LemmaId::GIncreasing | LemmaId::HLowerBound => {
                3 * ((t + 2) * (t + 1) / 2) * (sq + s)
            }
        }
    }

    pub fn hypothesis(self, n: u64, k: u64, t: u64, s: u64) -> bool {
        t >= 1 && k >= t + self.min_gap() && n >= self.min_n(k, t, s)
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One instance of an inequality, identified by its parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lemma: LemmaId,
    pub n: u64,
    pub k: u64,
    pub t: u64,
    pub s: Option<u64>,
    /// `(i, j)` for the binomial-ratio lemma, `x` otherwise.
    pub i: Option<u64>,
    pub j: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub point: GridPoint,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundSweepReport {
    pub params_range: Vec<GridPoint>,
    pub checked: usize,
    pub skipped: usize,
    pub failures: Vec<Failure>,
}

impl BoundSweepReport {
    fn skipped(point: GridPoint) -> Self {
        BoundSweepReport {
            params_range: vec![point],
            checked: 0,
            skipped: 1,
            failures: Vec::new(),
        }
    }

    pub fn outcome(&self) -> Outcome {
        if !self.failures.is_empty() {
            Outcome::Violated
        } else if self.checked == 0 {
            Outcome::Skipped
        } else {
            Outcome::Holds
        }
    }

    pub fn merge(&mut self, other: BoundSweepReport) {
        self.params_range.extend(other.params_range);
        self.checked += other.checked;
        self.skipped += other.skipped;
        self.failures.extend(other.failures);
    }
}

/// `(k-t+1)^(j-i) C(n-j,k-j) <= C(n-i,k-i)` under `k >= t+1`,
/// `n >= (t+1)(k-t+1)^2` and `t <= i <= j`.
pub fn check_lemma21(n: u64, k: u64, t: u64, i: u64, j: u64) -> Outcome {
    if !LemmaId::BinomialRatio.hypothesis(n, k, t, 0) || i < t || j < i {
        return Outcome::Skipped;
    }
    let nb = BigUint::from(n);
    let lhs = big_pow(k - t + 1, j - i) * binom_shifted(&nb, j, k as i64 - j as i64);
    let rhs = binom_shifted(&nb, i, k as i64 - i as i64);
    Outcome::from_bool(lhs <= rhs)
}

/// `f(x) > f(x+1)` for every `x` in `t+1..k` under `k >= t+2` and
/// `n >= 2(t+1)((k-t+1)^2+s)`.
pub fn check_lemma22(n: u64, k: u64, t: u64, s: u64) -> BoundSweepReport {
    let point = |x: Option<u64>| GridPoint {
        lemma: LemmaId::FDecreasing,
        n,
        k,
        t,
        s: Some(s),
        i: x,
        j: None,
    };
    if !LemmaId::FDecreasing.hypothesis(n, k, t, s) {
        return BoundSweepReport::skipped(point(None));
    }
    let nb = BigUint::from(n);
    let mut report = BoundSweepReport {
        params_range: vec![point(None)],
        checked: 0,
        skipped: 0,
        failures: Vec::new(),
    };
    for x in t + 1..k {
        let a = eval_f(&nb, k, t, s, x).expect("hypothesis implies valid arguments");
        let b = eval_f(&nb, k, t, s, x + 1).expect("hypothesis implies valid arguments");
        report.checked += 1;
        if a <= b {
            report.failures.push(Failure {
                point: point(Some(x)),
                detail: format!("f(x)={a} <= f(x+1)={b}"),
            });
        }
    }
    report
}

/// `g(x) < g(x+1)` for every `x` in `t+2..k` under `k >= t+3` and
/// `n >= 3 C(t+2,2)((k-t+1)^2+s)`.
pub fn check_lemma23(n: u64, k: u64, t: u64, s: u64) -> BoundSweepReport {
    let point = |x: Option<u64>| GridPoint {
        lemma: LemmaId::GIncreasing,
        n,
        k,
        t,
        s: Some(s),
        i: x,
        j: None,
    };
    if !LemmaId::GIncreasing.hypothesis(n, k, t, s) {
        return BoundSweepReport::skipped(point(None));
    }
    let nb = BigUint::from(n);
    let mut report = BoundSweepReport {
        params_range: vec![point(None)],
        checked: 0,
        skipped: 0,
        failures: Vec::new(),
    };
    for x in t + 2..k {
        let a = eval_g(&nb, k, t, s, x).expect("hypothesis implies valid arguments");
        let b = eval_g(&nb, k, t, s, x + 1).expect("hypothesis implies valid arguments");
        report.checked += 1;
        if a >= b {
            report.failures.push(Failure {
                point: point(Some(x)),
                detail: format!("g(x)={a} >= g(x+1)={b}"),
            });
        }
    }
    report
}

/// Both lower bounds on `h`:
/// `h > (k-t+1) C(n-t-1,k-t-1) - C(k-t+1,2) C(n-t-2,k-t-2)` and that middle
/// term is at least `17/18 (k-t+1) C(n-t-1,k-t-1)`.
pub fn check_lemma24(n: u64, k: u64, t: u64, s: u64) -> Outcome {
    if !LemmaId::HLowerBound.hypothesis(n, k, t, s) {
        return Outcome::Skipped;
    }
    let nb = BigUint::from(n);
    let (ki, ti) = (k as i64, t as i64);
    let h = BigInt::from(eval_h(&nb, k, t, s).expect("hypothesis implies n >= 2k-t+s"));
    let q = k - t + 1;
    let first = BigInt::from(BigUint::from(q) * binom_shifted(&nb, t + 1, ki - ti - 1));
    let second = BigInt::from(
        binomial(&BigUint::from(q), 2) * binom_shifted(&nb, t + 2, ki - ti - 2),
    );
    let middle = &first - second;
    let strict = h > middle;
    let ratio = BigInt::from(18) * &middle >= BigInt::from(17) * &first;
    Outcome::from_bool(strict && ratio)
}

/// Sweep grid. `k` runs over `t + k_offsets`, `n` over the lemma's minimal
/// legal value plus each entry of `n_offsets` (negative offsets probe the
/// sub-threshold region and produce skipped rows).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub t_max: u64,
    pub k_offsets: (u64, u64),
    pub s_max: u64,
    pub n_offsets: Vec<i64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            t_max: 3,
            k_offsets: (2, 6),
            s_max: 4,
            n_offsets: vec![0, 1, 7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: GridPoint,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid: SweepGrid,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.rows.iter().filter(|r| r.outcome == outcome).count()
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.outcome == Outcome::Violated)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lemma", "n", "k", "t", "s", "i_or_x", "j", "outcome"])?;
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let p = &r.point;
            w.write_record([
                p.lemma.as_str().to_string(),
                p.n.to_string(),
                p.k.to_string(),
                p.t.to_string(),
                opt(p.s),
                opt(p.i),
                opt(p.j),
                r.outcome.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn shifted(base: u64, offset: i64) -> Option<u64> {
    let v = base as i64 + offset;
    (v >= 1).then_some(v as u64)
}

/// Enumerates the grid points of one lemma in a fixed order.
pub fn grid_points(lemma: LemmaId, grid: &SweepGrid) -> Vec<GridPoint> {
    let mut points = Vec::new();
    for t in 1..=grid.t_max {
        for k in t + grid.k_offsets.0..=t + grid.k_offsets.1 {
            let s_values: Vec<Option<u64>> = match lemma {
                LemmaId::BinomialRatio => vec![None],
                _ => (1..=grid.s_max).map(Some).collect(),
            };
            for s in s_values {
                let base = lemma.min_n(k, t, s.unwrap_or(0));
                for &off in &grid.n_offsets {
                    let Some(n) = shifted(base, off) else { continue };
                    if lemma == LemmaId::BinomialRatio {
                        for i in t..=k + 1 {
                            for j in i..=k + 1 {
                                points.push(GridPoint {
                                    lemma,
                                    n,
                                    k,
                                    t,
                                    s,
                                    i: Some(i),
                                    j: Some(j),
                                });
                            }
                        }
                    } else {
                        points.push(GridPoint {
                            lemma,
                            n,
                            k,
                            t,
                            s,
                            i: None,
                            j: None,
                        });
                    }
                }
            }
        }
    }
    points
}

pub fn evaluate_point(p: &GridPoint) -> Outcome {
    let s = p.s.unwrap_or(0);
    match p.lemma {
        LemmaId::BinomialRatio => check_lemma21(p.n, p.k, p.t, p.i.unwrap_or(p.t), p.j.unwrap_or(p.t)),
        LemmaId::FDecreasing => check_lemma22(p.n, p.k, p.t, s).outcome(),
        LemmaId::GIncreasing => check_lemma23(p.n, p.k, p.t, s).outcome(),
        LemmaId::HLowerBound => check_lemma24(p.n, p.k, p.t, s),
    }
}

/// Runs the given lemmas over the grid; rows come back in grid order.
pub fn sweep_lemmas(lemmas: &[LemmaId], grid: &SweepGrid) -> SweepResult {
    let points: Vec<GridPoint> = lemmas.iter().flat_map(|&l| grid_points(l, grid)).collect();
    let rows = points
        .into_par_iter()
        .map(|point| {
            let outcome = evaluate_point(&point);
            SweepRow { point, outcome }
        })
        .collect();
    SweepResult {
        grid: grid.clone(),
        rows,
    }
}

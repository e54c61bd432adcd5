//! Generators for the named extremal families.
//!
//! Every generator embeds its family in a caller-chosen ground set `[n]`
//! that is at least as large as the family's natural ground set; the extra
//! elements are unused.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::formulas::eval_h;
use crate::predicates::{for_each_subset_of_size, is_s_almost_t_intersecting, is_t_intersecting};
use crate::sets::{binomial_u64, Family, KSubset, Params, MAX_GROUND};

/// Families larger than this are reported by predicted size only.
pub const MATERIALIZE_LIMIT: u64 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Thm3Case {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
}

impl Thm3Case {
    pub const ALL: [Thm3Case; 7] = [
        Thm3Case::I,
        Thm3Case::II,
        Thm3Case::III,
        Thm3Case::IV,
        Thm3Case::V,
        Thm3Case::VI,
        Thm3Case::VII,
    ];

    pub fn roman(self) -> &'static str {
        match self {
            Thm3Case::I => "i",
            Thm3Case::II => "ii",
            Thm3Case::III => "iii",
            Thm3Case::IV => "iv",
            Thm3Case::V => "v",
            Thm3Case::VI => "vi",
            Thm3Case::VII => "vii",
        }
    }

    /// Whether the case's side conditions allow `(t, s)`.
    pub fn applies(self, t: u64, s: u64) -> bool {
        match self {
            Thm3Case::I => s == 1,
            Thm3Case::II => s == 3,
            Thm3Case::III => s == 3 && t >= 2,
            Thm3Case::IV => s == 6,
            Thm3Case::V => s == 6 && t >= 3,
            Thm3Case::VI => s != 1 && s != 3,
            Thm3Case::VII => s != 1 && s != 3 && t >= s,
        }
    }

    /// The `m` in `F ∈ C([m], t+1)`.
    pub fn natural_ground(self, t: u64, s: u64) -> u64 {
        match self {
            Thm3Case::I | Thm3Case::III | Thm3Case::V | Thm3Case::VII => t + 3,
            Thm3Case::II => t + 4,
            Thm3Case::IV => t + 5,
            Thm3Case::VI => t + s + 2,
        }
    }

    /// `c` such that every member contains `[c]`.
    fn core(self, t: u64, s: u64) -> u64 {
        match self {
            Thm3Case::I | Thm3Case::II | Thm3Case::IV | Thm3Case::VI => t - 1,
            Thm3Case::III => t - 2,
            Thm3Case::V => t - 3,
            Thm3Case::VII => t - s,
        }
    }

    /// Members must also meet `[t+1]` in at least `t` elements.
    fn needs_near_core(self) -> bool {
        matches!(self, Thm3Case::VI | Thm3Case::VII)
    }
}

impl fmt::Display for Thm3Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.roman())
    }
}

impl FromStr for Thm3Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Thm3Case::ALL
            .into_iter()
            .find(|c| c.roman().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Param(format!("unknown case '{s}' (expected i..vii)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstructionId {
    Star,
    HmType,
    Ex51,
    Ex52,
    Ex53,
    Thm3(Thm3Case),
}

impl FromStr for ConstructionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        Ok(match upper.as_str() {
            "STAR" => ConstructionId::Star,
            "HM_TYPE" | "HM" => ConstructionId::HmType,
            "EX51" => ConstructionId::Ex51,
            "EX52" => ConstructionId::Ex52,
            "EX53" => ConstructionId::Ex53,
            other => match other.strip_prefix("THM3_") {
                Some(case) => ConstructionId::Thm3(case.parse()?),
                None => return param(format!("unknown construction '{s}'")),
            },
        })
    }
}

impl Serialize for ConstructionId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ConstructionId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for ConstructionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstructionId::Star => f.write_str("STAR"),
            ConstructionId::HmType => f.write_str("HM_TYPE"),
            ConstructionId::Ex51 => f.write_str("EX51"),
            ConstructionId::Ex52 => f.write_str("EX52"),
            ConstructionId::Ex53 => f.write_str("EX53"),
            ConstructionId::Thm3(c) => write!(f, "THM3_{}", c.roman().to_ascii_uppercase()),
        }
    }
}

/// A named family with its predicted size. `family` is `None` when the
/// family was too large to materialize.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NamedConstruction {
    pub id: ConstructionId,
    pub params: Params,
    #[serde(serialize_with = "decimal")]
    pub predicted_size: BigUint,
    pub family: Option<Family>,
}

fn decimal<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Predicate results for a materialized construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionCheck {
    pub size: usize,
    pub size_matches: bool,
    pub s_almost_t_intersecting: bool,
    pub t_intersecting: bool,
    /// The construction claims it is not t-intersecting.
    pub claims_not_t_intersecting: bool,
}

impl ConstructionCheck {
    pub fn consistent(&self) -> bool {
        self.size_matches
            && self.s_almost_t_intersecting
            && (!self.claims_not_t_intersecting || !self.t_intersecting)
    }
}

impl NamedConstruction {
    /// Every construction except the star has a defect pair, the HM-type
    /// family only once `s >= 1`.
    pub fn claims_not_t_intersecting(&self) -> bool {
        match self.id {
            ConstructionId::Star => false,
            ConstructionId::HmType => self.params.s >= 1,
            _ => true,
        }
    }

    pub fn check(&self) -> Option<ConstructionCheck> {
        let f = self.family.as_ref()?;
        let t = self.params.t as u32;
        Some(ConstructionCheck {
            size: f.len(),
            size_matches: BigUint::from(f.len()) == self.predicted_size,
            s_almost_t_intersecting: is_s_almost_t_intersecting(f, t, self.params.s as usize).0,
            t_intersecting: is_t_intersecting(f, t),
            claims_not_t_intersecting: self.claims_not_t_intersecting(),
        })
    }
}

fn ground(n: u64) -> Result<u32> {
    if n == 0 || n > MAX_GROUND as u64 {
        return param(format!("ground set size {n} outside 1..=64"));
    }
    Ok(n as u32)
}

fn low_mask(m: u64) -> u64 {
    if m >= 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

/// `{F ∈ C([window], k) : [core] ⊆ F, keep(F)}` inside `[n]`.
fn block(n: u32, k: u64, core: u64, window: u64, keep: impl Fn(u64) -> bool) -> Vec<KSubset> {
    let core_bits = low_mask(core);
    let free = low_mask(window) & !core_bits;
    let mut out = Vec::new();
    if k < core {
        return out;
    }
    for_each_subset_of_size(free, (k - core) as u32, |extra| {
        let bits = core_bits | extra;
        if keep(bits) {
            out.push(KSubset::from_bits_unchecked(n, bits));
        }
        true
    });
    out
}

fn finish(
    id: ConstructionId,
    params: Params,
    predicted_size: BigUint,
    build: impl FnOnce() -> Result<Family>,
) -> Result<NamedConstruction> {
    let family = if params.n <= MAX_GROUND as u64 && predicted_size <= BigUint::from(MATERIALIZE_LIMIT) {
        Some(build()?)
    } else {
        None
    };
    Ok(NamedConstruction {
        id,
        params,
        predicted_size,
        family,
    })
}

/// `{F ∈ C([n], k) : [t] ⊆ F}`, of size `C(n-t, k-t)`.
pub fn star_family(n: u64, k: u64, t: u64) -> Result<NamedConstruction> {
    let params = Params::new(n, k, t, 0)?;
    let predicted = binomial_u64(n - t, k - t);
    finish(ConstructionId::Star, params, predicted, || {
        let n32 = n as u32;
        let members = block(n32, k, t, n, |_| true);
        Family::new(n32, k as u32, members)
    })
}

/// How the free blocks of the HM-type family are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HmChoice {
    /// `None` takes the first `s` candidates in family order.
    pub a_seed: Option<u64>,
    /// `None` takes the first `min(t, s)` candidates in family order.
    pub b_seed: Option<u64>,
}

fn pick(candidates: Vec<KSubset>, amount: usize, seed: Option<u64>) -> Result<Vec<KSubset>> {
    if candidates.len() < amount {
        return param(format!(
            "only {} candidates for a block of size {amount}",
            candidates.len()
        ));
    }
    Ok(match seed {
        None => candidates.into_iter().take(amount).collect(),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = rand::seq::index::sample(&mut rng, candidates.len(), amount).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| candidates[i]).collect()
        }
    })
}

/// `{F : [t] ⊆ F, |F ∩ [k+1]| >= t+1} ∪ A ∪ B`, where `A` is an `s`-subset
/// of `{F : F ∩ [k+1] = [t]}` and `B` a `min(t,s)`-subset of
/// `{F ∈ C([k+1], k) : [t] ⊄ F}`. Needs `k >= t+1` and `n >= 2k - t + s`.
pub fn hm_family(n: u64, k: u64, t: u64, s: u64, choice: HmChoice) -> Result<NamedConstruction> {
    let params = Params::new(n, k, t, s)?;
    if k < t + 1 || n < 2 * k + s - t {
        return param(format!(
            "HM-type family needs k >= t+1 and n >= 2k-t+s, got n={n} k={k} t={t} s={s}"
        ));
    }
    let predicted = eval_h(&BigUint::from(n), k, t, s)?;
    finish(ConstructionId::HmType, params, predicted, || {
        let n32 = n as u32;
        let head = low_mask(k + 1);
        let core = low_mask(t);
        let mut members = block(n32, k, t, n, |b| (b & head).count_ones() as u64 > t);
        let a_candidates = block(n32, k, t, n, |b| b & head == core);
        members.extend(pick(a_candidates, s as usize, choice.a_seed)?);
        let b_candidates = block(n32, k, 0, k + 1, |b| b & core != core);
        members.extend(pick(b_candidates, s.min(t) as usize, choice.b_seed)?);
        Family::new(n32, k as u32, members)
    })
}

fn t_uniform_params(n: u64, t: u64, s: u64, natural: u64) -> Result<Params> {
    if t == 0 {
        return param("t must be positive");
    }
    if n < natural {
        return param(format!("family lives on [{natural}], ambient [{n}] is too small"));
    }
    ground(n)?;
    Params::new(n, t + 1, t, s)
}

/// `{F ∈ C([t+3], t+1) : [t-1] ⊆ F}`: six sets, 1-almost t-intersecting.
pub fn ex51_family(n: u64, t: u64) -> Result<NamedConstruction> {
    let params = t_uniform_params(n, t, 1, t + 3)?;
    finish(ConstructionId::Ex51, params, binomial_u64(4, 2), || {
        Family::new(n as u32, t as u32 + 1, block(n as u32, t + 1, t - 1, t + 3, |_| true))
    })
}

/// `{F ∈ C([t+4], t+1) : [t-1] ⊆ F}`: ten sets, 3-almost t-intersecting.
pub fn ex52_family(n: u64, t: u64) -> Result<NamedConstruction> {
    let params = t_uniform_params(n, t, 3, t + 4)?;
    finish(ConstructionId::Ex52, params, binomial_u64(5, 2), || {
        Family::new(n as u32, t as u32 + 1, block(n as u32, t + 1, t - 1, t + 4, |_| true))
    })
}

fn near_core(t: u64) -> impl Fn(u64) -> bool {
    let head = low_mask(t + 1);
    move |b| (b & head).count_ones() as u64 >= t
}

/// `{F ∈ C([t+s+2], t+1) : [t-1] ⊆ F, |F ∩ [t+1]| >= t}`: `2s+3` sets,
/// s-almost t-intersecting.
pub fn ex53_family(n: u64, t: u64, s: u64) -> Result<NamedConstruction> {
    if s == 0 {
        return param("s must be positive");
    }
    let params = t_uniform_params(n, t, s, t + s + 2)?;
    finish(ConstructionId::Ex53, params, BigUint::from(2 * s + 3), || {
        let members = block(n as u32, t + 1, t - 1, t + s + 2, near_core(t));
        Family::new(n as u32, t as u32 + 1, members)
    })
}

/// The family displayed in one case of the `(t+1)`-uniform classification.
pub fn thm3_family(case: Thm3Case, t: u64, s: u64, n: u64) -> Result<NamedConstruction> {
    if t == 0 || s == 0 {
        return param("t and s must be positive");
    }
    if !case.applies(t, s) {
        return param(format!("case ({case}) does not apply to t={t}, s={s}"));
    }
    let natural = case.natural_ground(t, s);
    let params = t_uniform_params(n, t, s, natural)?;
    let core = case.core(t, s);
    let predicted = if case.needs_near_core() {
        BigUint::from(2 * s + 3)
    } else {
        binomial_u64(natural - core, t + 1 - core)
    };
    finish(ConstructionId::Thm3(case), params, predicted, || {
        let keep = near_core(t);
        let needs = case.needs_near_core();
        let members = block(n as u32, t + 1, core, natural, |b| !needs || keep(b));
        Family::new(n as u32, t as u32 + 1, members)
    })
}

/// Largest known size of a `(t+1)`-uniform
/// s-almost t-intersecting family that is not t-intersecting:
/// `2s + 4` for `s ∈ {1, 3}`, otherwise `2s + 3`.
pub fn thm3_expected_size(s: u64) -> u64 {
    if s == 1 || s == 3 {
        2 * s + 4
    } else {
        2 * s + 3
    }
}

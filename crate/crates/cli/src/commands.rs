use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};

use kns_core::constructions::{
    ex51_family, ex52_family, ex53_family, hm_family, star_family, thm3_family, ConstructionId, HmChoice,
    NamedConstruction,
};
use kns_core::predicates::{
    check_lemma32_bounds, check_lemma33_bound, covering_number, is_s_almost_t_intersecting, is_t_intersecting,
    kneser_edge_check, CoverResult, DefectReport, Outcome as Verdict, DEFAULT_WITNESS_CAP,
};
use kns_core::search::{canonicalize, check_lemma41, max_family, SearchConfig};
use kns_core::sets::{parse_family, Family, Params};

use crate::manifest::Recorder;
use crate::{CanonArgs, CheckArgs, ConstructArgs, Failure, Outcome, SearchArgs};

pub fn read_family(path: &Path) -> Result<Family, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(parse_family(&text)?)
}

/// Prints `value` and, when requested, writes it with a manifest.
pub fn emit(value: &impl Serialize, json_out: Option<&PathBuf>, config: Value) -> Outcome {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    print!("{text}");
    if let Some(path) = json_out {
        let mut rec = Recorder::new(config);
        rec.write(path, text.as_bytes())?;
        rec.finish()?;
    }
    Ok(())
}

fn config_of(args: &impl Serialize, seed: Option<u64>) -> Value {
    let mut v = serde_json::to_value(args).expect("arguments serialize");
    if let (Some(seed), Value::Object(map)) = (seed, &mut v) {
        map.insert("seed".into(), seed.into());
    }
    v
}

#[derive(Serialize)]
struct BoundChecks {
    small_uniform: Verdict,
    large_cover: Verdict,
    minimum_cover_structure: Verdict,
}

#[derive(Serialize)]
struct CheckReport {
    n: u32,
    k: u32,
    size: usize,
    t: u32,
    s: usize,
    s_almost_t_intersecting: bool,
    kneser_max_degree_at_most_s: bool,
    t_intersecting: bool,
    defects: DefectReport,
    cover: Option<CoverResult>,
    bounds: BoundChecks,
}

pub fn check(args: &CheckArgs) -> Outcome {
    let f = read_family(&args.file)?;
    let (t, s) = (args.t, args.s);
    if t == 0 || t > f.k() {
        return Err(Failure::Input(format!("need 1 <= t <= k = {}", f.k())));
    }
    let (almost, defects) = is_s_almost_t_intersecting(&f, t, s);
    let cover = if f.is_empty() {
        None
    } else {
        Some(covering_number(&f, t, DEFAULT_WITNESS_CAP)?)
    };
    let report = CheckReport {
        n: f.n(),
        k: f.k(),
        size: f.len(),
        t,
        s,
        s_almost_t_intersecting: almost,
        kneser_max_degree_at_most_s: kneser_edge_check(&f, t, s),
        t_intersecting: is_t_intersecting(&f, t),
        defects,
        cover,
        bounds: BoundChecks {
            small_uniform: check_lemma32_bounds(&f, t, s),
            large_cover: check_lemma33_bound(&f, t, s),
            minimum_cover_structure: check_lemma41(&f, t, s),
        },
    };
    emit(&report, args.json_out.as_ref(), config_of(args, None))?;
    let bounds = [
        report.bounds.small_uniform,
        report.bounds.large_cover,
        report.bounds.minimum_cover_structure,
    ];
    if bounds.iter().any(|b| b.is_violated()) {
        return Err(Failure::Property("a bound check is violated".into()));
    }
    if !almost {
        return Err(Failure::Property(format!("family is not {s}-almost {t}-intersecting")));
    }
    Ok(())
}

pub fn build_construction(
    id: ConstructionId,
    n: u64,
    k: Option<u64>,
    t: u64,
    s: u64,
    seed: Option<u64>,
) -> Result<NamedConstruction, Failure> {
    let need_k = || k.ok_or_else(|| Failure::Input(format!("{id} needs --k")));
    Ok(match id {
        ConstructionId::Star => star_family(n, need_k()?, t)?,
        ConstructionId::HmType => {
            let choice = HmChoice {
                a_seed: seed,
                b_seed: seed.map(|x| x.wrapping_add(1)),
            };
            hm_family(n, need_k()?, t, s, choice)?
        }
        ConstructionId::Ex51 => ex51_family(n, t)?,
        ConstructionId::Ex52 => ex52_family(n, t)?,
        ConstructionId::Ex53 => ex53_family(n, t, s)?,
        ConstructionId::Thm3(case) => thm3_family(case, t, s, n)?,
    })
}

pub fn construct(args: &ConstructArgs, seed: u64) -> Outcome {
    let id: ConstructionId = args.id.parse()?;
    let seed = args.seeded.then_some(seed);
    let named = build_construction(id, args.n, args.k, args.t, args.s, seed)?;
    let check = named.check();
    let report = json!({ "construction": named, "check": check });
    emit(&report, args.json_out.as_ref(), config_of(args, seed))?;
    match check {
        Some(c) if !c.consistent() => Err(Failure::Property(format!("{id} fails its claimed properties"))),
        _ => Ok(()),
    }
}

pub fn search(args: &SearchArgs) -> Outcome {
    let mut cfg = SearchConfig::new(Params::new(args.n, args.k, args.t, args.s)?);
    cfg.require_not_t_intersecting = args.not_t_intersecting;
    cfg.collect_all_extremal = args.all_extremal;
    if let Some(limit) = args.node_limit {
        cfg.node_limit = limit;
    }
    if let Some(secs) = args.time_limit {
        let limit = Duration::try_from_secs_f64(secs).map_err(|e| Failure::Input(e.to_string()))?;
        cfg.time_limit = Some(limit);
    }
    cfg.vertex_cap = args.vertex_cap;
    cfg.parallel = !args.sequential;
    let result = max_family(&cfg)?;
    let summary = json!({
        "max_size": result.max_size,
        "exhausted": result.exhausted,
        "extremal_count": result.extremal.len(),
        "extremal_truncated": result.extremal_truncated,
        "canonical_classes": result.canonical_classes,
        "canonical_skipped": result.canonical_skipped,
        "first_extremal": result.extremal.first(),
        "stats": result.stats,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    if let Some(path) = &args.json_out {
        let full = json!({ "config": cfg, "result": result });
        let text = serde_json::to_string_pretty(&full).expect("result serializes") + "\n";
        let mut rec = Recorder::new(config_of(args, None));
        rec.write(path, text.as_bytes())?;
        rec.finish()?;
    }
    if result.exhausted {
        Ok(())
    } else {
        Err(Failure::Limit("search stopped at a resource limit; the result is not proven optimal".into()))
    }
}

pub fn canon(args: &CanonArgs) -> Outcome {
    let f = read_family(&args.file)?;
    let form = canonicalize(&f)?;
    let report = json!({ "canonical": form, "family": form.to_family()? });
    emit(&report, args.json_out.as_ref(), config_of(args, None))
}

use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};

use kns_core::constructions::{ConstructionId, Thm3Case};
use kns_core::formulas::{sweep_lemmas, LemmaId, SweepGrid};
use kns_core::predicates::{is_s_almost_t_intersecting, is_t_intersecting, Outcome as Verdict};
use kns_core::search::{verify_theorem3, Thm3Options, DEFAULT_VERTEX_CAP};
use kns_core::sets::{binomial_u64, Family};

use crate::commands::build_construction;
use crate::manifest::Recorder;
use crate::{Failure, Outcome};

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[command(subcommand)]
    pub suite: Suite,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Suite {
    /// Inequality sweeps. CSV: `lemma,n,k,t,s,i_or_x,j,outcome` with
    /// outcome `holds`, `violated` or `skipped`.
    Lemmas(LemmaGrid),
    /// Exhaustive search over `(t+1)`-uniform families that are not
    /// t-intersecting. CSV: `t,s,n,status,max_size,expected_size,classes,
    /// matched_cases,unmatched,exhausted,nodes` with status `verified`,
    /// `failed`, `partial` or `skipped`.
    Thm3(Thm3Grid),
    /// Predicate checks of every named construction. CSV:
    /// `id,n,k,t,s,predicted_size,size,s_almost_t_intersecting,
    /// t_intersecting,claims_not_t_intersecting,fixture,status`.
    Constructions(ConstructionArgs),
    /// All three suites with default grids.
    All(AllArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LemmaGrid {
    #[arg(long, default_value_t = 3)]
    pub t_max: u64,
    /// Smallest `k - t`.
    #[arg(long, default_value_t = 2)]
    pub k_min_offset: u64,
    /// Largest `k - t`.
    #[arg(long, default_value_t = 6)]
    pub k_max_offset: u64,
    #[arg(long, default_value_t = 4)]
    pub s_max: u64,
    /// Offsets from the minimal legal n; negative values give skipped rows.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0i64, 1, 7])]
    pub n_offsets: Vec<i64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Thm3Grid {
    #[arg(long, default_value_t = 2)]
    pub t_max: u64,
    #[arg(long, default_value_t = 4)]
    pub s_max: u64,
    /// n runs from t+s+2 to t+s+2+n_extra.
    #[arg(long, default_value_t = 2)]
    pub n_extra: u64,
    /// Also emit this many sub-threshold n values per (t, s), marked skipped.
    #[arg(long, default_value_t = 0)]
    pub n_below: u64,
    #[arg(long, env = "KNS_NODE_LIMIT")]
    pub node_limit: Option<u64>,
    /// Seconds per grid point.
    #[arg(long, env = "KNS_TIME_LIMIT")]
    pub time_limit: Option<f64>,
    #[arg(long, env = "KNS_VERTEX_CAP", default_value_t = DEFAULT_VERTEX_CAP)]
    pub vertex_cap: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstructionArgs {
    /// JSON list of `{id, n, k?, t, s?, size?, family?}` entries to check
    /// against the generated constructions.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AllArgs {
    /// Write lemmas.csv, thm3.csv and constructions.csv here instead of stdout.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Worst status across suites: failures beat resource limits.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    #[default]
    Ok,
    Limit,
    Failed,
}

struct Table {
    bytes: Vec<u8>,
    status: Status,
    summary: String,
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, Failure> {
    w.into_inner().map_err(|e| Failure::Input(e.to_string()))
}

fn lemmas(grid: &LemmaGrid) -> Result<Table, Failure> {
    let sweep = SweepGrid {
        t_max: grid.t_max,
        k_offsets: (grid.k_min_offset, grid.k_max_offset),
        s_max: grid.s_max,
        n_offsets: grid.n_offsets.clone(),
    };
    let result = sweep_lemmas(&LemmaId::ALL, &sweep);
    let mut bytes = Vec::new();
    result.write_csv(&mut bytes)?;
    let failed = result.count(Verdict::Violated);
    Ok(Table {
        bytes,
        status: if failed > 0 { Status::Failed } else { Status::Ok },
        summary: format!(
            "lemmas: {} holds, {} skipped, {failed} violated",
            result.count(Verdict::Holds),
            result.count(Verdict::Skipped)
        ),
    })
}

fn thm3(grid: &Thm3Grid) -> Result<Table, Failure> {
    let mut opts = Thm3Options {
        vertex_cap: grid.vertex_cap,
        ..Thm3Options::default()
    };
    if let Some(limit) = grid.node_limit {
        opts.node_limit = limit;
    }
    if let Some(secs) = grid.time_limit {
        opts.time_limit = Some(Duration::try_from_secs_f64(secs).map_err(|e| Failure::Input(e.to_string()))?);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "t", "s", "n", "status", "max_size", "expected_size", "classes", "matched_cases", "unmatched", "exhausted",
        "nodes",
    ])?;
    let mut status = Status::Ok;
    let mut counts = [0usize; 4];
    for t in 1..=grid.t_max {
        for s in 1..=grid.s_max {
            let first = (t + s + 2).saturating_sub(grid.n_below).max(t + 1);
            for n in first..=t + s + 2 + grid.n_extra {
                let skip = |reason: &str| -> Vec<String> {
                    let mut row = vec![t.to_string(), s.to_string(), n.to_string(), "skipped".into()];
                    row.extend(["", "", "", reason, "", "", ""].map(String::from));
                    row
                };
                let vertices = binomial_u64(n, t + 1);
                if n < t + s + 2 {
                    w.write_record(skip("below n >= t+s+2"))?;
                    counts[3] += 1;
                    continue;
                }
                if n > 64 || vertices > grid.vertex_cap.min(64).into() {
                    w.write_record(skip(&format!("{vertices} vertices exceed the cap")))?;
                    counts[3] += 1;
                    continue;
                }
                let v = verify_theorem3(t, s, n, &opts)?;
                let row_status = if v.verified() {
                    counts[0] += 1;
                    "verified"
                } else if v.exhausted {
                    status = status.max(Status::Failed);
                    counts[1] += 1;
                    "failed"
                } else {
                    status = status.max(Status::Limit);
                    counts[2] += 1;
                    "partial"
                };
                w.write_record([
                    t.to_string(),
                    s.to_string(),
                    n.to_string(),
                    row_status.into(),
                    v.max_size.map(|m| m.to_string()).unwrap_or_default(),
                    v.expected_size.to_string(),
                    v.classes.len().to_string(),
                    v.matched_cases().join("/"),
                    v.unmatched.to_string(),
                    v.exhausted.to_string(),
                    v.stats.nodes.to_string(),
                ])?;
            }
        }
    }
    Ok(Table {
        bytes: finish_csv(w)?,
        status,
        summary: format!(
            "thm3: {} verified, {} failed, {} partial, {} skipped",
            counts[0], counts[1], counts[2], counts[3]
        ),
    })
}

#[derive(Debug, Deserialize)]
struct FixtureEntry {
    id: String,
    n: u64,
    k: Option<u64>,
    t: u64,
    #[serde(default = "one")]
    s: u64,
    size: Option<u64>,
    family: Option<Family>,
}

fn one() -> u64 {
    1
}

/// `(id, n, k, t, s, seed)`.
type Entry = (ConstructionId, u64, Option<u64>, u64, u64, Option<u64>);

fn default_entries(seed: u64) -> Vec<Entry> {
    let mut out = Vec::new();
    for t in 1..=3u64 {
        out.push((ConstructionId::Ex51, t + 3, None, t, 1, None));
        out.push((ConstructionId::Ex52, t + 4, None, t, 3, None));
        for s in 1..=6u64 {
            out.push((ConstructionId::Ex53, t + s + 2, None, t, s, None));
            for case in Thm3Case::ALL.into_iter().filter(|c| c.applies(t, s)) {
                out.push((ConstructionId::Thm3(case), case.natural_ground(t, s), None, t, s, None));
            }
        }
    }
    for n in 4..=10u64 {
        for k in 2..=4u64.min(n - 1) {
            for t in 1..k {
                out.push((ConstructionId::Star, n, Some(k), t, 0, None));
                if n + t > 2 * k {
                    let s = (n + t - 2 * k).min(3);
                    out.push((ConstructionId::HmType, n, Some(k), t, s, None));
                    out.push((ConstructionId::HmType, n, Some(k), t, s, Some(seed)));
                }
            }
        }
    }
    out
}

fn constructions(args: &ConstructionArgs, seed: u64) -> Result<Table, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "id",
        "n",
        "k",
        "t",
        "s",
        "predicted_size",
        "size",
        "s_almost_t_intersecting",
        "t_intersecting",
        "claims_not_t_intersecting",
        "fixture",
        "status",
    ])?;
    let mut failed = 0usize;
    let mut total = 0usize;
    let mut row = |w: &mut csv::Writer<Vec<u8>>,
                   id: ConstructionId,
                   n: u64,
                   k: Option<u64>,
                   t: u64,
                   s: u64,
                   seed: Option<u64>,
                   fixture: Option<(Option<u64>, Option<Family>)>|
     -> Result<(), Failure> {
        let named = build_construction(id, n, k, t, s, seed)?;
        let mut ok = true;
        let (size, almost, intersecting) = match &named.family {
            Some(f) => {
                let almost = is_s_almost_t_intersecting(f, t as u32, s as usize).0;
                let inter = is_t_intersecting(f, t as u32);
                ok &= named.check().is_some_and(|c| c.consistent());
                (f.len().to_string(), almost.to_string(), inter.to_string())
            }
            None => (String::new(), String::new(), String::new()),
        };
        let fixture_text = match fixture {
            None => String::new(),
            Some((want_size, want_family)) => {
                let mut agree = true;
                if let Some(sz) = want_size {
                    agree &= named.predicted_size == sz.into();
                }
                if let Some(fam) = want_family {
                    agree &= named.family.as_ref() == Some(&fam);
                    agree &= is_s_almost_t_intersecting(&fam, t as u32, s as usize).0;
                    agree &= !named.claims_not_t_intersecting() || !is_t_intersecting(&fam, t as u32);
                }
                ok &= agree;
                if agree { "match" } else { "mismatch" }.to_string()
            }
        };
        total += 1;
        failed += usize::from(!ok);
        w.write_record([
            id.to_string(),
            n.to_string(),
            named.params.k.to_string(),
            t.to_string(),
            s.to_string(),
            named.predicted_size.to_string(),
            size,
            almost,
            intersecting,
            named.claims_not_t_intersecting().to_string(),
            fixture_text,
            if ok { "ok" } else { "failed" }.to_string(),
        ])?;
        Ok(())
    };

    match &args.fixture {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            let entries: Vec<FixtureEntry> =
                serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            for e in entries {
                let id: ConstructionId = e.id.parse()?;
                row(&mut w, id, e.n, e.k, e.t, e.s, None, Some((e.size, e.family)))?;
            }
        }
        None => {
            for (id, n, k, t, s, sd) in default_entries(seed) {
                row(&mut w, id, n, k, t, s, sd, None)?;
            }
        }
    }
    Ok(Table {
        bytes: finish_csv(w)?,
        status: if failed > 0 { Status::Failed } else { Status::Ok },
        summary: format!("constructions: {} ok, {failed} failed", total - failed),
    })
}

fn deliver(table: &Table, csv: Option<&PathBuf>, config: &serde_json::Value) -> Outcome {
    match csv {
        Some(path) => {
            let mut rec = Recorder::new(config.clone());
            rec.write(path, &table.bytes)?;
            rec.finish()?;
        }
        None => print!("{}", String::from_utf8_lossy(&table.bytes)),
    }
    eprintln!("{}", table.summary);
    Ok(())
}

fn conclude(status: Status) -> Outcome {
    match status {
        Status::Ok => Ok(()),
        Status::Limit => Err(Failure::Limit("some grid points stopped at a resource limit".into())),
        Status::Failed => Err(Failure::Property("verification failed".into())),
    }
}

pub fn run(args: &VerifyArgs, seed: u64) -> Outcome {
    let mut config = serde_json::to_value(args).expect("arguments serialize");
    if let serde_json::Value::Object(map) = &mut config {
        map.insert("seed".into(), seed.into());
    }
    match &args.suite {
        Suite::Lemmas(g) => {
            let table = lemmas(g)?;
            deliver(&table, g.csv.as_ref(), &config)?;
            conclude(table.status)
        }
        Suite::Thm3(g) => {
            let table = thm3(g)?;
            deliver(&table, g.csv.as_ref(), &config)?;
            conclude(table.status)
        }
        Suite::Constructions(c) => {
            let table = constructions(c, seed)?;
            deliver(&table, c.csv.as_ref(), &config)?;
            conclude(table.status)
        }
        Suite::All(a) => {
            let lemma_grid = LemmaGrid {
                t_max: 3,
                k_min_offset: 2,
                k_max_offset: 6,
                s_max: 4,
                n_offsets: vec![0, 1, 7],
                csv: None,
            };
            let thm3_grid = Thm3Grid {
                t_max: 2,
                s_max: 4,
                n_extra: 2,
                n_below: 0,
                node_limit: None,
                time_limit: None,
                vertex_cap: DEFAULT_VERTEX_CAP,
                csv: None,
            };
            let tables = [
                ("lemmas", lemmas(&lemma_grid)?),
                ("thm3", thm3(&thm3_grid)?),
                ("constructions", constructions(&ConstructionArgs { fixture: None, csv: None }, seed)?),
            ];
            let mut status = Status::Ok;
            for (name, table) in &tables {
                match &a.out_dir {
                    Some(dir) => deliver(table, Some(&dir.join(format!("{name}.csv"))), &config)?,
                    None => {
                        println!("# {name}");
                        deliver(table, None, &config)?;
                    }
                }
                status = status.max(table.status);
            }
            conclude(status)
        }
    }
}

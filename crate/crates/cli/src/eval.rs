use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;

use kns_core::formulas::{eval_f, eval_g, h_formula, LemmaId};

use crate::manifest::Recorder;
use crate::{Failure, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Function {
    F,
    G,
    H,
}

/// A single value or an inclusive range `a:b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Values {
    One(BigUint),
    Range(u64, u64),
}

impl FromStr for Values {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|e| format!("{s}: {e}"))?;
                let b: u64 = b.trim().parse().map_err(|e| format!("{s}: {e}"))?;
                if a > b {
                    return Err(format!("empty range {s}"));
                }
                Ok(Values::Range(a, b))
            }
            None => s.trim().parse().map(Values::One).map_err(|e| format!("{s}: {e}")),
        }
    }
}

impl Values {
    fn expand(&self) -> Vec<BigUint> {
        match self {
            Values::One(v) => vec![v.clone()],
            Values::Range(a, b) => (*a..=*b).map(BigUint::from).collect(),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(value_enum)]
    pub function: Function,
    pub n: Values,
    pub k: Values,
    pub t: Values,
    pub s: Values,
    /// Required for f and g.
    pub x: Option<Values>,
    /// Write the sweep CSV here instead of stdout.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn small(v: &BigUint, name: &str) -> Result<u64, Failure> {
    u64::try_from(v).map_err(|_| Failure::Input(format!("{name} = {v} is too large")))
}

/// Evaluates one point, warning on stderr when outside the range the
/// bound statements cover.
fn point(function: Function, n: &BigUint, k: u64, t: u64, s: u64, x: Option<u64>) -> Result<BigUint, Failure> {
    let fits = u64::try_from(n).ok();
    let warn = |lemma: LemmaId, what: &str| {
        if fits.is_some_and(|n| !lemma.hypothesis(n, k, t, s)) {
            eprintln!("warning: (n={n}, k={k}, t={t}, s={s}) is outside the range where {what}");
        }
    };
    let need_x = || x.ok_or_else(|| Failure::Input("f and g need x".into()));
    Ok(match function {
        Function::F => {
            warn(LemmaId::FDecreasing, "f is proven decreasing");
            eval_f(n, k, t, s, need_x()?)?
        }
        Function::G => {
            warn(LemmaId::GIncreasing, "g is proven increasing");
            eval_g(n, k, t, s, need_x()?)?
        }
        Function::H => {
            if *n < BigUint::from((2 * k + s).saturating_sub(t)) {
                eprintln!("warning: n < 2k - t + s; h no longer counts the HM-type family");
            }
            h_formula(n, k, t, s)?
        }
    })
}

pub fn run(args: &EvalArgs) -> Outcome {
    let all = [&args.n, &args.k, &args.t, &args.s];
    let sweep = all.iter().any(|v| matches!(v, Values::Range(..))) || matches!(args.x, Some(Values::Range(..)));
    if !sweep {
        let one = |v: &Values| v.expand().remove(0);
        let x = args.x.as_ref().map(|v| small(&one(v), "x")).transpose()?;
        let value = point(
            args.function,
            &one(&args.n),
            small(&one(&args.k), "k")?,
            small(&one(&args.t), "t")?,
            small(&one(&args.s), "s")?,
            x,
        )?;
        println!("{value}");
        return Ok(());
    }

    let xs: Vec<Option<BigUint>> = match &args.x {
        Some(v) => v.expand().into_iter().map(Some).collect(),
        None => vec![None],
    };
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["function", "n", "k", "t", "s", "x", "value"])?;
    let name = format!("{:?}", args.function).to_lowercase();
    for n in args.n.expand() {
        for k in args.k.expand() {
            for t in args.t.expand() {
                for s in args.s.expand() {
                    for x in &xs {
                        let (k, t, s) = (small(&k, "k")?, small(&t, "t")?, small(&s, "s")?);
                        let xv = x.as_ref().map(|v| small(v, "x")).transpose()?;
                        let value = match point(args.function, &n, k, t, s, xv) {
                            Ok(v) => v.to_string(),
                            Err(Failure::Input(e)) => {
                                eprintln!("warning: undefined at (n={n}, k={k}, t={t}, s={s}): {e}");
                                String::new()
                            }
                            Err(other) => return Err(other),
                        };
                        let x_text = x.as_ref().map(|v| v.to_string()).unwrap_or_default();
                        out.write_record([
                            name.clone(),
                            n.to_string(),
                            k.to_string(),
                            t.to_string(),
                            s.to_string(),
                            x_text,
                            value,
                        ])?;
                    }
                }
            }
        }
    }
    let bytes = out.into_inner().map_err(|e| Failure::Input(e.to_string()))?;
    match &args.csv {
        Some(path) => {
            let mut rec = Recorder::new(serde_json::to_value(args).expect("arguments serialize"));
            rec.write(path, &bytes)?;
            rec.finish()?;
        }
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    Ok(())
}

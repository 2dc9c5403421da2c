//! The `treechain` command line.
//!
//! Every artifact starts with the tool version, the resolved configuration
//! and its SHA-256 hash. Output is assembled in memory and written once, so
//! a failed run leaves nothing behind. Exit status: 0 on success, 1 on a
//! domain error (JSON report on stderr), 2 on a usage error.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::classify::{classify_by_ends, classify_positive_recurrence, classify_recurrence, PositiveConfig, RecurrenceConfig};
use crate::contfrac::{green_aud, green_aud_series, green_rw, GreenConfig, Tail};
use crate::error::Error;
use crate::gw::{gw_classifier, mass_tables, slope, KestenConfig};
use crate::invariant::{h_invariant_det_all, h_invariant_leaf_addition, rw_invariant, total_mass};
use crate::io::{self, SpecError};
use crate::kernel::{check_irreducible, project_subtree, validate_aud, HomogeneousParams, Irreducibility, Kernel};
use crate::measure::Measure;
use crate::oracle::{enumerate_paths, stationary_dense, DenseChain, PathQuery};
use crate::scalar::{parse_scalar, Scalar, Q};
use crate::selftest;
use crate::sternbrocot::{sb_depth, sb_step, simulate_sb, PosRational, SbConfig};
use crate::tree::{truncate, truncate_capped, NodeWord, TreeSource, Truncation};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const CERTIFY_CAP: usize = 1 << 16;

#[derive(Parser)]
#[command(name = "treechain", version, about = "Invariant measures, recurrence and Green functions for Markov chains on trees")]
struct Cli {
    /// Write the artifact to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Leave the timestamp out of the header.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// h-invariant measure on a truncation, as CSV.
    Invariant(InvariantArgs),
    /// Recurrence and positive recurrence verdicts, as JSON.
    Classify(ClassifyArgs),
    /// Green function G_u(x) or its power series.
    Green(GreenArgs),
    /// Galton-Watson (Kesten tree) classifier and Monte Carlo masses.
    Gw(GwArgs),
    /// Stern-Brocot chains on the positive rationals.
    Sb(SbArgs),
    /// Brute-force oracles on a finite truncation.
    Oracle(OracleArgs),
    /// Runs the acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Args, Serialize)]
struct Model {
    /// Tree: a JSON file, inline JSON or a shorthand such as line, complete:2, star4.
    #[arg(long)]
    tree: Option<String>,
    /// Kernel: a JSON file, inline JSON or a shorthand such as bd:down=2/3.
    #[arg(long)]
    kernel: String,
    /// Exact rational arithmetic.
    #[arg(long)]
    exact: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Det,
    Leaf,
    Rw,
}

#[derive(Args, Serialize)]
struct InvariantArgs {
    #[command(flatten)]
    model: Model,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = Method::Det)]
    method: Method,
}

#[derive(Args, Serialize)]
struct ClassifyArgs {
    #[command(flatten)]
    model: Model,
    /// Classify through the projections onto each end.
    #[arg(long)]
    by_ends: bool,
    #[arg(long, default_value_t = 64)]
    h_max: usize,
    /// Depth of the level sums for positive recurrence.
    #[arg(long, default_value_t = 40)]
    depth: usize,
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TailArg {
    Zero,
    One,
}

#[derive(Args, Serialize)]
struct GreenArgs {
    #[command(flatten)]
    model: Model,
    /// Node word such as 0.1; root for ∅.
    #[arg(long, default_value = "root")]
    node: String,
    #[arg(long, default_value = "1/2")]
    x: String,
    #[arg(long, default_value_t = 20)]
    depth: usize,
    /// Print the power series coefficients up to this degree instead.
    #[arg(long)]
    series: Option<usize>,
    #[arg(long, value_enum, default_value_t = TailArg::Zero)]
    tail: TailArg,
    /// Use the nearest-neighbour recursion.
    #[arg(long)]
    walk: bool,
}

#[derive(Args, Serialize)]
struct GwArgs {
    /// Offspring law as degree:probability pairs, e.g. 0:1/2,2:1/2.
    #[arg(long)]
    law: String,
    /// Up weights F(k), as k:value pairs or one value for all degrees.
    #[arg(long = "F")]
    f: String,
    /// Child weights G(k), same format.
    #[arg(long = "G")]
    g: String,
    /// Print f, m, L and the verdict (the default).
    #[arg(long, conflicts_with = "simulate")]
    classify: bool,
    /// Number of Kesten samples for the Monte Carlo mass profile.
    #[arg(long)]
    simulate: Option<usize>,
    #[arg(long, default_value_t = 200)]
    spine: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    graft_cap: usize,
}

#[derive(Args, Serialize)]
struct SbArgs {
    /// Move probabilities, e.g. r=1/4,l=1/4,p=1/2; staying takes the rest.
    #[arg(long)]
    family: String,
    #[arg(long, default_value = "1")]
    start: String,
    #[arg(long, default_value_t = 100_000)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run this many seeds (seed, seed+1, ...) until the first return to 1/1.
    #[arg(long, conflicts_with = "trajectory")]
    runs: Option<u64>,
    /// Print every state visited.
    #[arg(long)]
    trajectory: bool,
    /// Occupancy is tracked for states up to this depth.
    #[arg(long, default_value_t = 4)]
    track_depth: usize,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Query {
    Stationary,
    Paths,
}

#[derive(Args, Serialize)]
struct OracleArgs {
    #[command(flatten)]
    model: Model,
    /// Truncation depth; infinite trees are projected onto it.
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = Query::Stationary)]
    query: Query,
    #[arg(long, default_value = "root")]
    start: String,
    #[arg(long, default_value = "root")]
    end: String,
    #[arg(long, default_value_t = 8)]
    length: usize,
    /// Stop paths at their first visit to the end node.
    #[arg(long)]
    first_hit: bool,
}

#[derive(Args, Serialize)]
struct SelftestArgs {
    /// Run only these criteria, e.g. --only 1 5 or --only 1,5.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    only: Vec<usize>,
}

enum Fail {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Domain(e)
    }
}

type Run<T> = std::result::Result<T, Fail>;

enum Artifact {
    Csv { notes: Vec<(String, String)>, rows: Vec<String> },
    Json(Value),
    Text { lines: Vec<String>, ok: bool },
}

struct Resolved {
    tree_doc: Option<Value>,
    kernel_doc: Value,
    tree: Option<TreeSource>,
}

fn spec(arg: &str, shorthand: fn(&str) -> crate::Result<Value>) -> Run<Value> {
    io::read_spec(arg, shorthand).map_err(|e| match e {
        SpecError::Usage(m) => Fail::Usage(m),
        SpecError::Invalid(e) => Fail::Domain(e),
    })
}

fn resolve(m: &Model) -> Run<Resolved> {
    let kernel_doc = spec(&m.kernel, io::kernel_shorthand)?;
    let tree_doc = m.tree.as_deref().map(|t| spec(t, io::tree_shorthand)).transpose()?;
    let tree = match &tree_doc {
        Some(d) => Some(io::build_tree(d)?),
        None => io::default_tree(&kernel_doc),
    };
    Ok(Resolved {
        tree_doc,
        kernel_doc,
        tree,
    })
}

impl Resolved {
    fn kernel<T: Scalar>(&self) -> Run<Kernel<T>> {
        Ok(io::build_kernel(&self.kernel_doc, self.tree.as_ref())?)
    }

    fn config(&self) -> Value {
        json!({"tree": self.tree_doc, "kernel": self.kernel_doc})
    }
}

fn node(text: &str) -> Run<NodeWord> {
    text.parse().map_err(|e: Error| Fail::Usage(e.to_string()))
}

fn tol<T: Scalar>() -> f64 {
    if T::EXACT {
        0.0
    } else {
        1e-12
    }
}

/// CSV cells for a value: `num,den` when exact, a decimal otherwise.
fn cells<T: Scalar>(x: &T) -> String {
    match x.to_q() {
        Some(q) => format!("{},{}", q.numer(), q.denom()),
        None => format!("{}", x.to_f64()),
    }
}

fn value_columns<T: Scalar>() -> &'static str {
    if T::EXACT {
        "value_num,value_den"
    } else {
        "value"
    }
}

/// Deepest truncation within the node cap, and the irreducibility check on it.
fn certify<T: Scalar>(k: &Kernel<T>, max_depth: usize) -> Run<(Truncation, Irreducibility)> {
    let mut best = truncate_capped(k.tree(), 0, CERTIFY_CAP)?;
    for h in 1..=max_depth {
        match truncate_capped(k.tree(), h, CERTIFY_CAP) {
            Ok(t) => best = t,
            Err(_) => break,
        }
        if best.len() == k.tree().as_finite().map_or(usize::MAX, |t| t.len()) {
            break;
        }
    }
    let irr = check_irreducible(k, &best);
    Ok((best, irr))
}

fn irreducibility_note(irr: &Irreducibility) -> Run<String> {
    match irr {
        Irreducibility::Pass { certified_depth } => Ok(format!("certified to depth {certified_depth}")),
        Irreducibility::Counterexample { node, reason } => Err(Fail::Domain(Error::InvalidKernel(format!(
            "not irreducible at {node}: {reason}"
        )))),
    }
}

fn invariant(a: &InvariantArgs, jobs: usize) -> Run<(Value, Artifact)> {
    let r = resolve(&a.model)?;
    let art = if a.model.exact {
        invariant_with::<Q>(a, &r, jobs)?
    } else {
        invariant_with::<f64>(a, &r, jobs)?
    };
    Ok((r.config(), art))
}

fn invariant_with<T: Scalar>(a: &InvariantArgs, r: &Resolved, jobs: usize) -> Run<Artifact> {
    let k = r.kernel::<T>()?;
    let trunc = truncate(k.tree(), a.depth)?;
    if let Some(v) = validate_aud(&k, &trunc, tol::<T>()).first() {
        return Err(Error::InvalidKernel(v.to_string()).into());
    }
    let (_, irr) = certify(&k, a.depth)?;
    let certified = irreducibility_note(&irr)?;
    let rw_all = |t: &Truncation| -> crate::Result<Measure<T>> {
        t.nodes()
            .iter()
            .map(|u| rw_invariant(&k, u).map(|v| (u.clone(), v)))
            .collect::<crate::Result<Vec<_>>>()
            .map(Measure::from_pairs)
    };
    let m = match a.method {
        Method::Det => h_invariant_det_all(&k, &trunc, &T::one(), jobs)?,
        Method::Leaf => h_invariant_leaf_addition(&k, trunc.nodes())?,
        Method::Rw => rw_all(&trunc)?,
    };
    let (scale, normalization) = if k.tree().is_finite() {
        let total = match a.method {
            Method::Rw => rw_all(&Truncation::whole(k.tree())?)?.total(),
            _ => total_mass(&k, usize::MAX)?,
        };
        (total, "total mass 1")
    } else {
        (T::one(), "root value 1")
    };
    let mut rows = vec![format!("node,depth,{}", value_columns::<T>())];
    for u in trunc.nodes() {
        let v = m.get(u).cloned().unwrap_or_else(T::zero) / scale.clone();
        rows.push(format!("{u},{},{}", u.depth(), cells(&v)));
    }
    Ok(Artifact::Csv {
        notes: vec![
            ("normalization".into(), normalization.into()),
            ("irreducibility".into(), certified),
        ],
        rows,
    })
}

fn classify(a: &ClassifyArgs) -> Run<(Value, Artifact)> {
    let r = resolve(&a.model)?;
    let art = if a.model.exact {
        classify_with::<Q>(a, &r)?
    } else {
        classify_with::<f64>(a, &r)?
    };
    Ok((r.config(), art))
}

fn classify_with<T: Scalar>(a: &ClassifyArgs, r: &Resolved) -> Run<Artifact> {
    let k = r.kernel::<T>()?;
    let (trunc, irr) = certify(&k, a.depth.min(16))?;
    if let Some(v) = validate_aud(&k, &trunc, tol::<T>()).first() {
        return Err(Error::InvalidKernel(v.to_string()).into());
    }
    let certified = irreducibility_note(&irr)?;
    let rec = RecurrenceConfig {
        eps: a.eps,
        h_max: a.h_max,
        ..Default::default()
    };
    let pos = PositiveConfig {
        depth: a.depth,
        ..Default::default()
    };
    let mut out = json!({ "irreducibility": certified, "kernel": k.name() });
    if a.by_ends {
        out["by_ends"] = json!(classify_by_ends(&k, &rec, &pos)?);
    } else {
        out["recurrence"] = json!(classify_recurrence(&k, &rec));
        out["positive_recurrence"] = json!(classify_positive_recurrence(&k, &pos));
    }
    Ok(Artifact::Json(out))
}

fn green(a: &GreenArgs) -> Run<(Value, Artifact)> {
    let r = resolve(&a.model)?;
    let u = node(&a.node)?;
    let cfg = GreenConfig {
        depth: a.depth,
        tail: match a.tail {
            TailArg::Zero => Tail::Zero,
            TailArg::One => Tail::One,
        },
        ..Default::default()
    };
    let art = if let Some(degree) = a.series {
        let k = r.kernel::<Q>()?;
        let s = if a.walk {
            crate::contfrac::green_rw_series(&k, &u, degree, &cfg)?
        } else {
            green_aud_series(&k, &u, degree, &cfg)?
        };
        let mut rows = vec!["n,coeff_num,coeff_den".to_string()];
        rows.extend(s.coeffs().iter().enumerate().map(|(n, c)| format!("{n},{}", cells(c))));
        Artifact::Csv {
            notes: vec![("node".into(), u.to_string())],
            rows,
        }
    } else if a.model.exact {
        green_with::<Q>(a, &r, &u, &cfg)?
    } else {
        green_with::<f64>(a, &r, &u, &cfg)?
    };
    Ok((r.config(), art))
}

fn green_with<T: Scalar>(a: &GreenArgs, r: &Resolved, u: &NodeWord, cfg: &GreenConfig) -> Run<Artifact> {
    let k = r.kernel::<T>()?;
    let x: T = parse_scalar(&a.x).map_err(|e| Fail::Usage(e.to_string()))?;
    let g = if a.walk {
        green_rw(&k, u, &x, cfg)?
    } else {
        green_aud(&k, u, &x, cfg)?
    };
    Ok(Artifact::Json(json!({
        "node": g.node,
        "x": x.render(),
        "value": g.value.render(),
        "first_return": g.first_return.render(),
        "previous": g.previous.render(),
        "depth": g.depth,
        "converged": g.converged,
    })))
}

fn gw(a: &GwArgs) -> Run<(Value, Artifact)> {
    let law = io::parse_law(&a.law)?;
    let top = law.max_degree();
    let params = HomogeneousParams {
        f: io::parse_degree_values::<f64>(&a.f, top)?,
        g: io::parse_degree_values::<f64>(&a.g, top)?,
    };
    let config = json!({"law": law.probs().iter().map(|p| p.render()).collect::<Vec<_>>()});
    let art = match a.simulate {
        None => {
            let v = gw_classifier(&law, &params)?;
            let mut notes = Vec::new();
            if let Some(reason) = &v.verdict.reason {
                notes.push(("reason".into(), reason.clone()));
            }
            Artifact::Csv {
                notes,
                rows: vec![
                    "f,e_inv_f,m,L,verdict".into(),
                    format!("{},{},{},{},{:?}", v.f, v.e_inv_f, v.m, v.l, v.verdict.outcome),
                ],
            }
        }
        Some(samples) => {
            if samples == 0 || a.spine < 2 {
                return Err(Fail::Usage("--simulate needs at least one sample and --spine at least 2".into()));
            }
            let cfg = KestenConfig {
                graft_cap: a.graft_cap,
                ..Default::default()
            };
            let tables = mass_tables(&law, &params, samples, a.spine, a.seed, &cfg)?;
            let n = samples as f64;
            let mut rows = vec!["depth,mean_log_pi,mean_log_increment,mean_log_cumulative".to_string()];
            let (mut pi_pts, mut inc_pts) = (Vec::new(), Vec::new());
            for j in 0..a.spine {
                let (mut lp, mut li, mut lc) = (0.0, 0.0, 0.0);
                for (t, _) in &tables {
                    lp += t.log_pi[j];
                    li += t.log_increment[j];
                    lc += t.cumulative[j].ln();
                    if j > 0 {
                        pi_pts.push((j as f64, t.log_pi[j]));
                        inc_pts.push((j as f64, t.log_increment[j]));
                    }
                }
                rows.push(format!("{j},{},{},{}", lp / n, li / n, lc / n));
            }
            let resamples: usize = tables.iter().map(|(_, r)| r).sum();
            Artifact::Csv {
                notes: vec![
                    ("log_pi_slope".into(), slope(&pi_pts).to_string()),
                    ("log_increment_slope".into(), slope(&inc_pts).to_string()),
                    ("graft_resamples".into(), resamples.to_string()),
                ],
                rows,
            }
        }
    };
    Ok((config, art))
}

fn sb(a: &SbArgs) -> Run<(Value, Artifact)> {
    let family = io::parse_family(&a.family)?;
    let start: PosRational = a.start.parse().map_err(|e: Error| Fail::Usage(e.to_string()))?;
    let config = json!({"family": family.name(), "start": start.to_string()});
    let art = if let Some(runs) = a.runs {
        let results: Vec<Option<usize>> = (0..runs)
            .into_par_iter()
            .map(|i| {
                let cfg = SbConfig {
                    steps: a.steps,
                    seed: a.seed.wrapping_add(i),
                    track_depth: 0,
                    stop_at_root: true,
                };
                simulate_sb(&family, &start, &cfg).first_return
            })
            .collect();
        let hits = results.iter().filter(|r| r.is_some()).count();
        let mut rows = vec!["seed,first_return".to_string()];
        for (i, r) in results.iter().enumerate() {
            let t = r.map_or(String::new(), |t| t.to_string());
            rows.push(format!("{},{t}", a.seed.wrapping_add(i as u64)));
        }
        Artifact::Csv {
            notes: vec![("returned".into(), format!("{hits}/{runs}"))],
            rows,
        }
    } else if a.trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let mut x = start.clone();
        let mut rows = vec!["step,state,depth".to_string(), format!("0,{x},{}", sb_depth(&x))];
        for t in 1..=a.steps {
            x = sb_step(&family, &x, &mut rng);
            rows.push(format!("{t},{x},{}", sb_depth(&x)));
        }
        Artifact::Csv { notes: Vec::new(), rows }
    } else {
        let cfg = SbConfig {
            steps: a.steps,
            seed: a.seed,
            track_depth: a.track_depth,
            stop_at_root: false,
        };
        let run = simulate_sb(&family, &start, &cfg);
        let mut states: Vec<(&PosRational, &usize)> = run.occupancy.iter().collect();
        states.sort_by(|a, b| (sb_depth(a.0), a.0).cmp(&(sb_depth(b.0), b.0)));
        let mut rows = vec!["state,depth,visits,fraction".to_string()];
        for (x, &v) in states {
            rows.push(format!("{x},{},{v},{}", sb_depth(x), v as f64 / run.steps.max(1) as f64));
        }
        Artifact::Csv {
            notes: vec![
                ("first_return".into(), run.first_return.map_or("none".into(), |t| t.to_string())),
                ("visits_to_root".into(), run.visits_to_root.to_string()),
                ("last".into(), run.last.to_string()),
            ],
            rows,
        }
    };
    Ok((config, art))
}

fn oracle(a: &OracleArgs) -> Run<(Value, Artifact)> {
    let r = resolve(&a.model)?;
    let art = if a.model.exact {
        oracle_with::<Q>(a, &r)?
    } else {
        oracle_with::<f64>(a, &r)?
    };
    Ok((r.config(), art))
}

fn oracle_with<T: Scalar>(a: &OracleArgs, r: &Resolved) -> Run<Artifact> {
    let k = r.kernel::<T>()?;
    let trunc = truncate(k.tree(), a.depth)?;
    let finite = k.tree().is_finite() && trunc.len() == Truncation::whole(k.tree())?.len();
    let chain = if finite {
        DenseChain::from_kernel(&k, &trunc)
    } else {
        DenseChain::from_kernel(&project_subtree(&k, &trunc)?, &trunc)
    };
    let note = ("chain".to_string(), if finite { "whole tree" } else { "projection onto the truncation" }.to_string());
    match a.query {
        Query::Stationary => {
            let pi = stationary_dense(&chain)?;
            let mut rows = vec![format!("node,depth,{}", value_columns::<T>())];
            for (u, v) in trunc.nodes().iter().zip(&pi) {
                rows.push(format!("{u},{},{}", u.depth(), cells(v)));
            }
            Ok(Artifact::Csv { notes: vec![note], rows })
        }
        Query::Paths => {
            let index = |s: &str| -> Run<usize> {
                let u = node(s)?;
                trunc.index_of(&u).ok_or_else(|| Fail::Domain(Error::UnknownNode(u.to_string())))
            };
            let q = PathQuery {
                start: index(&a.start)?,
                end: index(&a.end)?,
                max_length: Some(a.length),
                first_hit: a.first_hit,
                ..Default::default()
            };
            let coeffs = enumerate_paths(&chain, &q)?;
            let mut rows = vec![format!("length,{}", value_columns::<T>())];
            rows.extend(coeffs.iter().enumerate().map(|(n, c)| format!("{n},{}", cells(c))));
            Ok(Artifact::Csv { notes: vec![note], rows })
        }
    }
}

fn selftest(a: &SelftestArgs) -> Run<(Value, Artifact)> {
    let ids: Vec<usize> = if a.only.is_empty() { (1..=9).collect() } else { a.only.clone() };
    let reports: Vec<_> = ids.iter().map(|&i| selftest::run(i)).collect();
    let ok = reports.iter().all(|r| r.passed);
    Ok((json!({}), Artifact::Text {
        lines: reports.iter().map(selftest::line).collect(),
        ok,
    }))
}

fn render(config: &Value, art: Artifact, timestamp: Option<u64>) -> (String, bool) {
    let text = serde_json::to_string(config).expect("config serializes");
    let hash = format!("{:x}", Sha256::digest(text.as_bytes()));
    let mut header = vec![format!("# treechain {VERSION}"), format!("# config: {text}"), format!("# config_sha256: {hash}")];
    if let Some(t) = timestamp {
        header.push(format!("# timestamp: {t}"));
    }
    match art {
        Artifact::Csv { notes, rows } => {
            header.extend(notes.iter().map(|(k, v)| format!("# {k}: {v}")));
            header.extend(rows);
            (header.join("\n") + "\n", true)
        }
        Artifact::Text { lines, ok } => {
            header.extend(lines);
            (header.join("\n") + "\n", ok)
        }
        Artifact::Json(result) => {
            let mut doc = json!({
                "tool": "treechain",
                "version": VERSION,
                "config": config,
                "config_sha256": hash,
                "result": result,
            });
            if let Some(t) = timestamp {
                doc["timestamp"] = json!(t);
            }
            (serde_json::to_string_pretty(&doc).expect("result serializes") + "\n", true)
        }
    }
}

fn report_domain(e: &Error) {
    let doc = json!({"error": {"kind": e.kind(), "message": e.to_string()}});
    eprintln!("{doc}");
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit status.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.jobs > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    let jobs = if cli.jobs > 0 { cli.jobs } else { rayon::current_num_threads() };
    let outcome = match &cli.command {
        Command::Invariant(a) => invariant(a, jobs),
        Command::Classify(a) => classify(a),
        Command::Green(a) => green(a),
        Command::Gw(a) => gw(a),
        Command::Sb(a) => sb(a),
        Command::Oracle(a) => oracle(a),
        Command::Selftest(a) => selftest(a),
    };
    let (resolved, art) = match outcome {
        Ok(x) => x,
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            return 2;
        }
        Err(Fail::Domain(e)) => {
            report_domain(&e);
            return 1;
        }
    };
    let config = json!({"command": cli.command, "resolved": resolved});
    let timestamp = if cli.no_timestamp {
        None
    } else {
        SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
    };
    let (text, ok) = render(&config, art, timestamp);
    let written = match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        report_domain(&e);
        return 1;
    }
    if ok {
        0
    } else {
        1
    }
}

pub fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(run(std::env::args_os()) as u8)
}

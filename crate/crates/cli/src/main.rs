//! `stabkit` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a proof or audit fails (a JSON report is
//! printed on stdout), 2 on usage or input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use stabkit_core::antichain::{
    empirical_nf, enumerate_admissible, level_counts, min_proof_search, self_reduce, slab_casualties, sperner_ok,
};
use stabkit_core::arith::{format_rational, rat};
use stabkit_core::cover::{grid_lowerbound_audit, grid_squares};
use stabkit_core::cp::{build_sphp_rank1, cp_verify, CpProof};
use stabkit_core::formula::{gen_lop, gen_php, gen_sphp, gen_tseitin, Charging, Formula, Graph};
use stabkit_core::solver::{depth_profile, solve, Limits, SolveError, Strategy};
use stabkit_core::sp::{
    audit_slab_cover, certify, restrict_formula, restrict_proof, verify, AuditMethod, Restriction, SpProof,
};
use stabkit_core::ValueSet;

#[derive(Parser)]
#[command(name = "stabkit", version, about = "Stabbing Planes and Cutting Planes laboratory")]
struct Cli {
    /// Worker threads for enumerations and verification (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a formula as JSON.
    Gen(GenArgs),
    /// Search for a Stabbing Planes refutation.
    Solve {
        #[arg(long)]
        formula: PathBuf,
        #[arg(long, default_value = "frac")]
        strategy: String,
        #[arg(long, default_value_t = 1_000_000)]
        max_nodes: usize,
        #[arg(long, default_value_t = 256)]
        max_depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a Stabbing Planes refutation against a formula.
    Verify {
        #[arg(long)]
        formula: PathBuf,
        #[arg(long)]
        proof: PathBuf,
    },
    /// Check a Cutting Planes derivation.
    CpVerify {
        #[arg(long)]
        formula: PathBuf,
        #[arg(long)]
        proof: PathBuf,
    },
    /// Emit the rank-1 Cutting Planes refutation of the simple pigeonhole formula.
    CpBuildSphp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        formula_out: Option<PathBuf>,
    },
    /// Restrict a formula and a proof by a partial assignment or a self-reduction.
    Restrict(RestrictArgs),
    /// Check that every admissible W-point lies in some slab of the proof.
    Audit {
        #[arg(long)]
        formula: PathBuf,
        #[arg(long)]
        proof: PathBuf,
        #[arg(long = "W", default_value = "half")]
        w: String,
    },
    /// Run a sweep and write a CSV table.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Args)]
struct GenArgs {
    /// sphp | php | tseitin | lop
    #[arg(long)]
    family: String,
    /// Size parameter (holes for php, vertices or grid side for tseitin).
    #[arg(long)]
    n: usize,
    /// Pigeons for php (default n + 1).
    #[arg(long)]
    m: Option<usize>,
    /// complete | grid (tseitin only).
    #[arg(long, default_value = "complete")]
    graph: String,
    /// Comma-separated charged vertices, 1-based (tseitin only; default 1).
    #[arg(long, default_value = "1")]
    charged: String,
    /// Ordering-principle transitivity with right-hand side +1.
    #[arg(long)]
    paper_literal: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RestrictArgs {
    #[arg(long)]
    formula: PathBuf,
    #[arg(long)]
    proof: PathBuf,
    /// Partial assignment `name=0|1,...`.
    #[arg(long, conflicts_with = "self_reduce")]
    assign: Option<String>,
    /// Variable names to self-reduce away, `name,...`.
    #[arg(long)]
    self_reduce: Option<String>,
    /// Output formula (restricted, or the smaller family member).
    #[arg(long)]
    formula_out: PathBuf,
    /// Output proof, renamed to the output formula's variables.
    #[arg(long)]
    out: PathBuf,
    /// Recompute leaf certificates of the restricted proof.
    #[arg(long)]
    certify: bool,
}

#[derive(Subcommand)]
enum Experiment {
    /// Admissible-word counts per family size.
    Fullness {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n_range: String,
        #[arg(long = "W", default_value = "half")]
        w: String,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Level counts of every integer vector against the Sperner bound.
    Sperner {
        #[arg(long)]
        n_range: String,
        #[arg(long = "W", default_value = "half")]
        w: String,
        #[arg(long, default_value_t = 2)]
        coeff_bound: i64,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Slab casualties of every query of a proof.
    Casualties {
        #[arg(long)]
        formula: PathBuf,
        #[arg(long)]
        proof: PathBuf,
        #[arg(long = "W", default_value = "half")]
        w: String,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Brute-force minimal refutation length of small formulas.
    Minproof {
        #[arg(long)]
        formula: Vec<PathBuf>,
        #[arg(long, default_value_t = 2)]
        coeff_bound: i64,
        #[arg(long, default_value_t = 3)]
        max_len: usize,
        #[arg(long, default_value_t = 200_000)]
        lp_budget: u64,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Length and depth of solver refutations per family size.
    Depth {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n_range: String,
        #[arg(long, default_value = "frac")]
        strategy: String,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Greedy essential-cover staging of a grid Tseitin refutation.
    GridCover {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        proof: PathBuf,
        /// Formula refuted by the proof (default: grid formula charged at vertex 1).
        #[arg(long)]
        formula: Option<PathBuf>,
        #[arg(long)]
        csv: PathBuf,
    },
}

/// A failed check: printed as JSON, exit code 1.
struct Failed(Value);

type Outcome = Result<Option<Failed>>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(k) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Failed(report))) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Solve { formula, strategy, max_nodes, max_depth, out } => {
            cmd_solve(&formula, &strategy, Limits { max_nodes, max_depth }, out.as_deref())
        }
        Command::Verify { formula, proof } => cmd_verify(&formula, &proof),
        Command::CpVerify { formula, proof } => cmd_cp_verify(&formula, &proof),
        Command::CpBuildSphp { n, out, formula_out } => cmd_cp_build(n, out.as_deref(), formula_out.as_deref()),
        Command::Restrict(a) => cmd_restrict(a),
        Command::Audit { formula, proof, w } => cmd_audit(&formula, &proof, &w),
        Command::Experiment(e) => experiment(e),
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_formula(path: &Path) -> Result<Formula> {
    Formula::from_json(&read_json(path)?).with_context(|| format!("formula {}", path.display()))
}

fn read_proof(path: &Path, formula: &Formula) -> Result<SpProof> {
    SpProof::from_json(&read_json(path)?, formula.vars()).with_context(|| format!("proof {}", path.display()))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Writes to `path`, or stdout when absent.
fn emit(path: Option<&Path>, v: &Value) -> Result<()> {
    match path {
        Some(p) => fs::write(p, pretty(v)).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{}", pretty(v));
            Ok(())
        }
    }
}

fn value_set(s: &str) -> Result<ValueSet> {
    ValueSet::parse(s).map_err(|e| anyhow!("--W: {e}"))
}

fn strategy(s: &str) -> Result<Strategy> {
    Strategy::parse(s).ok_or_else(|| anyhow!("--strategy: unknown strategy {s:?} (expected var, frac, hybrid or sep)"))
}

fn n_range(s: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let (a, b) = s.split_once("..").ok_or_else(|| anyhow!("--n-range: expected a..b, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|_| anyhow!("--n-range: bad start {a:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| anyhow!("--n-range: bad end {b:?}"))?;
    if a > b {
        bail!("--n-range: empty range {s:?}");
    }
    Ok(a..=b)
}

fn family_formula(family: &str, n: usize) -> Result<Formula> {
    Ok(match family {
        "sphp" => gen_sphp(n)?,
        "php" => gen_php(n + 1, n)?,
        "tseitin" | "tseitin-complete" => gen_tseitin(&Graph::complete(n), &Charging::indicator(n, 0))?,
        "tseitin-grid" => gen_tseitin(&Graph::grid(n), &Charging::indicator(n * n, 0))?,
        "lop" => gen_lop(n, false)?,
        other => bail!("--family: unknown family {other:?} (expected sphp, php, tseitin, tseitin-grid or lop)"),
    })
}

fn gen(a: GenArgs) -> Outcome {
    let f = match a.family.as_str() {
        "sphp" => gen_sphp(a.n)?,
        "php" => gen_php(a.m.unwrap_or(a.n + 1), a.n)?,
        "lop" => gen_lop(a.n, a.paper_literal)?,
        "tseitin" => {
            let g = match a.graph.as_str() {
                "complete" => Graph::complete(a.n),
                "grid" => Graph::grid(a.n),
                other => bail!("--graph: unknown graph {other:?} (expected complete or grid)"),
            };
            let mut bits = vec![0u8; g.num_vertices()];
            for tok in a.charged.split(',').filter(|t| !t.trim().is_empty()) {
                let v: usize = tok.trim().parse().map_err(|_| anyhow!("--charged: bad vertex {tok:?}"))?;
                if v == 0 || v > bits.len() {
                    bail!("--charged: vertex {v} out of range 1..={}", bits.len());
                }
                bits[v - 1] ^= 1;
            }
            gen_tseitin(&g, &Charging::new(bits)?)?
        }
        other => bail!("--family: unknown family {other:?} (expected sphp, php, tseitin or lop)"),
    };
    emit(a.out.as_deref(), &f.to_json())?;
    Ok(None)
}

fn cmd_solve(formula: &Path, strat: &str, limits: Limits, out: Option<&Path>) -> Outcome {
    let f = read_formula(formula)?;
    match solve(&f, strategy(strat)?, limits) {
        Ok(p) => {
            emit(out, &p.to_json(f.vars()))?;
            let m = p.metrics();
            eprintln!("refutation: length {} depth {} leaves {} bitsize {}", m.length, m.depth, m.leaves, m.bitsize);
            Ok(None)
        }
        Err(SolveError::LimitExceeded { partial, open }) => {
            emit(out, &partial.to_json(f.vars()))?;
            Ok(Some(Failed(json!({ "ok": false, "reason": "limit exceeded", "open": open, "complete": false }))))
        }
        Err(SolveError::FormulaSatisfiable(p)) => {
            Ok(Some(Failed(json!({ "ok": false, "reason": "formula satisfiable", "witness": p.to_strings() }))))
        }
    }
}

fn cmd_verify(formula: &Path, proof: &Path) -> Outcome {
    let f = read_formula(formula)?;
    let p = read_proof(proof, &f)?;
    let report = verify(&p, &f)?;
    let hash_ok = p.formula == f.hash();
    let mut v = report.to_json();
    v["formula_hash_ok"] = json!(hash_ok);
    if report.ok && hash_ok {
        println!("{}", serde_json::to_string_pretty(&v)?);
        Ok(None)
    } else {
        v["ok"] = json!(false);
        Ok(Some(Failed(v)))
    }
}

fn cmd_cp_verify(formula: &Path, proof: &Path) -> Outcome {
    let f = read_formula(formula)?;
    let p = CpProof::from_json(&read_json(proof)?, &f)?;
    match cp_verify(&p, &f) {
        Ok(r) => {
            let v = json!({ "ok": r.ok, "rank": r.rank, "length": r.length, "size": r.size });
            if r.ok {
                println!("{}", serde_json::to_string_pretty(&v)?);
                Ok(None)
            } else {
                Ok(Some(Failed(v)))
            }
        }
        Err(e) => Ok(Some(Failed(json!({ "ok": false, "error": e.to_string() })))),
    }
}

fn cmd_cp_build(n: usize, out: Option<&Path>, formula_out: Option<&Path>) -> Outcome {
    let (f, p) = build_sphp_rank1(n)?;
    if let Some(path) = formula_out {
        emit(Some(path), &f.to_json())?;
    }
    emit(out, &p.to_json(&f))?;
    let r = cp_verify(&p, &f)?;
    eprintln!("rank {} length {} ok {}", r.rank, r.length, r.ok);
    Ok(None)
}

fn var_ids(f: &Formula, names: &str) -> Result<Vec<usize>> {
    names
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| f.system.var_index(t.trim()).ok_or_else(|| anyhow!("unknown variable {:?}", t.trim())))
        .collect()
}

fn cmd_restrict(a: RestrictArgs) -> Outcome {
    let f = read_formula(&a.formula)?;
    let p = read_proof(&a.proof, &f)?;
    let (target, rho, map) = match (&a.assign, &a.self_reduce) {
        (Some(spec), None) => {
            let pairs = spec
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    let (name, val) = t.split_once('=').ok_or_else(|| anyhow!("--assign: expected name=0|1, got {t:?}"))?;
                    let v = f.system.var_index(name.trim()).ok_or_else(|| anyhow!("--assign: unknown variable {name:?}"))?;
                    match val.trim() {
                        "0" => Ok((v, false)),
                        "1" => Ok((v, true)),
                        other => Err(anyhow!("--assign: value {other:?} is not 0 or 1")),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let rho = Restriction::new(pairs)?;
            let (g, map) = restrict_formula(&f, &rho)?;
            (g, rho, map)
        }
        (None, Some(names)) => {
            let r = self_reduce(&f, &var_ids(&f, names)?)?;
            (r.target, r.restriction, r.renaming)
        }
        _ => bail!("exactly one of --assign or --self-reduce is required"),
    };
    let mut q = restrict_proof(&p, &rho).renamed(&map)?;
    q.formula = target.hash();
    if a.certify {
        q = certify(&q, &target)?;
    }
    emit(Some(&a.formula_out), &target.to_json())?;
    emit(Some(&a.out), &q.to_json(target.vars()))?;
    let report = verify(&q, &target)?;
    let v = json!({ "ok": report.ok, "restricted_vars": rho.len(), "length": report.metrics.length });
    if report.ok {
        println!("{}", serde_json::to_string_pretty(&v)?);
        Ok(None)
    } else {
        Ok(Some(Failed(report.to_json())))
    }
}

fn cmd_audit(formula: &Path, proof: &Path, w: &str) -> Outcome {
    let f = read_formula(formula)?;
    let p = read_proof(proof, &f)?;
    let r = audit_slab_cover(&p, &f, value_set(w)?);
    let v = json!({
        "ok": r.ok(),
        "W": r.w.name(),
        "method": match r.method { AuditMethod::Sweep => "sweep", AuditMethod::LeafSearch => "leaf-search" },
        "admissible": r.admissible,
        "uncovered_count": r.uncovered_count,
        "uncovered": r.uncovered.iter().map(|p| p.to_strings()).collect::<Vec<_>>(),
    });
    if r.ok() {
        println!("{}", serde_json::to_string_pretty(&v)?);
        Ok(None)
    } else {
        Ok(Some(Failed(v)))
    }
}

/// CSV file whose first line is `# stabkit-csv v1 <kind>`.
fn write_csv(path: &Path, kind: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut buf = format!("# stabkit-csv v1 {kind}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
    }
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

fn experiment(e: Experiment) -> Outcome {
    match e {
        Experiment::Fullness { family, n_range: r, w, csv } => {
            let w = value_set(&w)?;
            let mut reports = Vec::new();
            for n in n_range(&r)? {
                reports.push(enumerate_admissible(&family_formula(&family, n)?, w)?);
            }
            let rows = reports
                .iter()
                .map(|r| {
                    vec![
                        family.clone(),
                        r.n.map_or(String::new(), |n| n.to_string()),
                        r.nu.to_string(),
                        w.name().to_string(),
                        r.total.to_string(),
                        r.admissible.to_string(),
                        r.ratio.as_ref().map_or("inf".to_string(), format_rational),
                        r.ratio_at_most(2).to_string(),
                    ]
                })
                .collect();
            write_csv(&csv, "fullness", &["family", "n", "nu", "W", "words", "admissible", "ratio", "ratio_le_2"], rows)?;
            match empirical_nf(&reports) {
                Some(nf) => eprintln!("empirical n_F = {nf}"),
                None => eprintln!("empirical n_F not reached in range"),
            }
            Ok(None)
        }
        Experiment::Sperner { n_range: r, w, coeff_bound, csv } => {
            let w = value_set(&w)?;
            let mut rows = Vec::new();
            let mut violations = 0u64;
            for n in n_range(&r)? {
                let k = (2 * coeff_bound + 1) as usize;
                for code in 0..k.pow(n as u32) {
                    let mut rest = code;
                    let a: Vec<i64> = (0..n)
                        .map(|_| {
                            let d = (rest % k) as i64 - coeff_bound;
                            rest /= k;
                            d
                        })
                        .collect();
                    let width = a.iter().filter(|c| **c != 0).count();
                    if width == 0 {
                        continue;
                    }
                    let bound = w.word_count(n).expect("small n") as f64 / (width as f64).sqrt();
                    let text: Vec<String> = a.iter().map(i64::to_string).collect();
                    for (level, count) in level_counts(&a, w) {
                        let ok = sperner_ok(count, width, w.k(), n);
                        violations += u64::from(!ok);
                        rows.push(vec![
                            n.to_string(),
                            text.join(";"),
                            format_rational(&rat(level, w.ell())),
                            count.to_string(),
                            format!("{bound:.6}"),
                            ok.to_string(),
                        ]);
                    }
                }
            }
            write_csv(&csv, "sperner", &["n", "a", "b", "count", "bound", "ok"], rows)?;
            if violations > 0 {
                return Ok(Some(Failed(json!({ "ok": false, "violations": violations }))));
            }
            Ok(None)
        }
        Experiment::Casualties { formula, proof, w, csv } => {
            let f = read_formula(&formula)?;
            let p = read_proof(&proof, &f)?;
            let w = value_set(&w)?;
            let admissible = enumerate_admissible(&f, w)?.admissible;
            let mut total = 0u64;
            let mut rows = Vec::new();
            // Levels strictly inside a slab: ell - 1, each bounded by k^n / sqrt(width).
            for (i, q) in p.distinct_queries().iter().enumerate() {
                let c = slab_casualties(q, f.nu(), w)?;
                total += c;
                let bound = (w.ell() - 1) as f64 * w.word_count(f.nu()).expect("checked") as f64 / (q.width() as f64).sqrt();
                rows.push(vec![
                    i.to_string(),
                    q.display_with(f.vars()),
                    q.width().to_string(),
                    c.to_string(),
                    format!("{bound:.6}"),
                ]);
            }
            write_csv(&csv, "casualties", &["query", "inequality", "width", "casualties", "bound"], rows)?;
            let v = json!({ "ok": total >= admissible, "casualties": total, "admissible": admissible });
            if total >= admissible {
                eprintln!("casualties {total} >= admissible {admissible}");
                Ok(None)
            } else {
                Ok(Some(Failed(v)))
            }
        }
        Experiment::Minproof { formula, coeff_bound, max_len, lp_budget, csv } => {
            if formula.is_empty() {
                bail!("--formula: at least one formula is required");
            }
            let mut rows = Vec::new();
            for path in &formula {
                let f = read_formula(path)?;
                let r = min_proof_search(&f, coeff_bound, max_len, lp_budget)?;
                rows.push(vec![
                    path.display().to_string(),
                    f.family.name().to_string(),
                    f.nu().to_string(),
                    r.min_length.map_or("UNKNOWN".to_string(), |l| l.to_string()),
                    r.refuted_below.map_or(String::new(), |l| l.to_string()),
                    r.lp_calls.to_string(),
                    r.budget_exhausted.to_string(),
                ]);
            }
            write_csv(
                &csv,
                "minproof",
                &["formula", "family", "nu", "min_length", "no_proof_up_to", "lp_calls", "budget_exhausted"],
                rows,
            )?;
            Ok(None)
        }
        Experiment::Depth { family, n_range: r, strategy: s, csv } => {
            let instances = n_range(&r)?
                .map(|n| Ok((format!("{family}{n}"), n, family_formula(&family, n)?)))
                .collect::<Result<Vec<_>>>()?;
            let table = depth_profile(&instances, strategy(&s)?, Limits::default())?;
            let rows = table
                .iter()
                .map(|r| {
                    vec![
                        r.label.clone(),
                        r.n.to_string(),
                        r.length.to_string(),
                        r.depth.to_string(),
                        r.leaves.to_string(),
                        r.log_ref.to_string(),
                    ]
                })
                .collect();
            write_csv(&csv, "depth", &["instance", "n", "length", "depth", "leaves", "ceil_log2_n"], rows)?;
            Ok(None)
        }
        Experiment::GridCover { n, proof, formula, csv } => {
            let f = match formula {
                Some(path) => read_formula(&path)?,
                None => family_formula("tseitin-grid", n)?,
            };
            let p = read_proof(&proof, &f)?;
            let report = verify(&p, &f)?;
            if !report.ok {
                return Ok(Some(Failed(report.to_json())));
            }
            let sys = grid_squares(n)?;
            let audit = grid_lowerbound_audit(&p, &f)?;
            let rows = audit
                .stages
                .iter()
                .enumerate()
                .map(|(i, st)| {
                    let (r, c) = sys.squares[st.s];
                    vec![
                        i.to_string(),
                        format!("{r}_{c}"),
                        st.covered.to_string(),
                        st.l.len().to_string(),
                        st.m.len().to_string(),
                        st.bound_ok.to_string(),
                        st.essential.to_string(),
                    ]
                })
                .collect();
            write_csv(&csv, "grid-cover", &["stage", "square", "covered", "L_size", "M_size", "bound_ok", "essential"], rows)?;
            let v = json!({
                "ok": audit.ok(),
                "squares": audit.squares,
                "stages": audit.stages.len(),
                "sum_M": audit.sum_m,
                "disjoint": audit.disjoint,
                "exhausted": audit.exhausted,
            });
            if audit.ok() {
                println!("{}", serde_json::to_string_pretty(&v)?);
                Ok(None)
            } else {
                Ok(Some(Failed(v)))
            }
        }
    }
}

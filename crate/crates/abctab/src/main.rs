//! Command-line surface. Exit codes: 0 pass, 1 property failure,
//! 2 usage error, 3 guard violation.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use abctab::alu::{check_homomorphism, eval_expr, PlainEnv};
use abctab::attack::{run_attack, AttackKind};
use abctab::error::Error;
use abctab::expr::{parse as parse_expr, quaternion_of, type_of};
use abctab::fileformat::{read_file, write_file};
use abctab::forge::{
    build_codebook, build_dual, build_keyed, build_tables, check_no_accidental_pairs,
    FillPolicy, Layout,
};
use abctab::model::{Codebook, SchemeKind};
use abctab::search::{
    enumerate_candidates, enumerate_constant_exprs, max_compatible_set, search_overlapping_pairs,
    signature_closure, CliqueBounds,
};

#[derive(Parser)]
#[command(
    name = "abctab",
    version,
    about = "Homomorphic arithmetic lookup tables under the ABC type discipline"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a table file.
    Build(BuildArgs),
    /// Verify homomorphism and accidental-pair hygiene of a table file.
    Check(CheckArgs),
    /// Evaluate a typed expression against a table file.
    Eval(EvalArgs),
    /// Type-check an expression and print its quaternion unit.
    Typecheck(TypecheckArgs),
    /// Run attacker procedures against a table file and judge them.
    Attack(AttackArgs),
    /// Exhaustive searches.
    #[command(subcommand)]
    Search(SearchCmd),
    /// Verify the no-retyping property by exhaustive enumeration.
    Lemma1(Lemma1Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Plain,
    Ab,
    Abc,
}

impl From<SchemeArg> for SchemeKind {
    fn from(s: SchemeArg) -> SchemeKind {
        match s {
            SchemeArg::Plain => SchemeKind::Plain,
            SchemeArg::Ab => SchemeKind::Ab,
            SchemeArg::Abc => SchemeKind::Abc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FillArg {
    Safe,
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Explicit,
    Strided,
    Random,
}

impl From<LayoutArg> for Layout {
    fn from(l: LayoutArg) -> Layout {
        match l {
            LayoutArg::Explicit => Layout::Explicit,
            LayoutArg::Strided => Layout::Strided,
            LayoutArg::Random => Layout::Random,
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    modulus: usize,
    #[arg(long, default_value_t = 0)]
    padding: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::Abc)]
    scheme: SchemeArg,
    #[arg(long, value_enum, default_value_t = FillArg::Safe)]
    fill: FillArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = LayoutArg::Random)]
    layout: LayoutArg,
    /// Fit a second 1-bit embedding; variant 0..7.
    #[arg(long, conflicts_with = "keyed")]
    dual: Option<u8>,
    /// Also write a table file carrying the secondary codebook.
    #[arg(long, requires = "dual")]
    dual_codebook_out: Option<PathBuf>,
    /// Keyed functional construction (cipherspace 4n).
    #[arg(long)]
    keyed: bool,
    /// Omit the codebook section (attacker view).
    #[arg(long)]
    redact: bool,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    /// Check against the codebook of another table file as well.
    #[arg(long)]
    codebook: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    file: PathBuf,
    #[arg(long)]
    expr: String,
    /// Comma-separated plain bindings, e.g. `x=1,y=0`.
    #[arg(long, default_value = "")]
    bind: String,
}

#[derive(Args)]
struct TypecheckArgs {
    #[arg(long)]
    expr: String,
}

#[derive(Args)]
struct AttackArgs {
    file: PathBuf,
    /// `all` or one of doubling, self-sub, self-div, lagrange, ab-defeat.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum SearchCmd {
    /// Candidate-embedding searches over an n, S cipherspace.
    Embeddings(EmbeddingsArgs),
    /// The constant-valued expression search.
    Expr(ExprSearchArgs),
}

#[derive(Args)]
struct EmbeddingsArgs {
    #[arg(long)]
    modulus: usize,
    #[arg(long)]
    size: usize,
    /// Scan all candidate pairs for compatible overlapping pairs.
    #[arg(long, conflicts_with = "max_clique")]
    pairs_overlap: bool,
    /// Maximum set of jointly satisfiable embeddings.
    #[arg(long)]
    max_clique: bool,
    /// Candidate cap; results are flagged PARTIAL when it bites.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExprSearchArgs {
    /// Signature-closure fixpoint (the default).
    #[arg(long)]
    closure: bool,
    /// Size-bounded enumeration cross-check instead.
    #[arg(long, conflicts_with = "closure")]
    max_ops: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct Lemma1Args {
    #[arg(long)]
    max_leaves: usize,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialization")
}

fn with_pool<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> Result<T, Error> + Send,
) -> Result<T, Error> {
    match workers {
        None => f(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Param(format!("worker pool: {e}")))?
            .install(f),
    }
}

fn run(cmd: Cmd) -> Result<u8, Error> {
    match cmd {
        Cmd::Build(args) => build(args),
        Cmd::Check(args) => check(args),
        Cmd::Eval(args) => eval(args),
        Cmd::Typecheck(args) => typecheck(args),
        Cmd::Attack(args) => attack(args),
        Cmd::Search(SearchCmd::Embeddings(args)) => search_embeddings(args),
        Cmd::Search(SearchCmd::Expr(args)) => search_expr(args),
        Cmd::Lemma1(args) => lemma1(args),
    }
}

fn build(args: BuildArgs) -> Result<u8, Error> {
    let scheme: SchemeKind = args.scheme.into();
    if args.keyed {
        if scheme != SchemeKind::Abc {
            return Err(Error::Param("keyed construction is ABC-only".into()));
        }
        let (ts, cb) = build_keyed(args.modulus, args.seed)?;
        write_file(&args.out, &ts, Some(&cb), args.redact)?;
        return Ok(0);
    }
    let cb = build_codebook(
        args.modulus,
        args.padding,
        scheme,
        args.seed,
        args.layout.into(),
    )?;
    let (ts, secondary) = match args.dual {
        Some(variant) => {
            let (ts, cb2) = build_dual(&cb, variant, args.seed)?;
            (ts, Some(cb2))
        }
        None => {
            let policy = match args.fill {
                FillArg::Safe => FillPolicy::SafeRandom { seed: args.seed },
                FillArg::Raw => FillPolicy::RawRandom { seed: args.seed },
            };
            (build_tables(&cb, &policy)?, None)
        }
    };
    write_file(&args.out, &ts, Some(&cb), args.redact)?;
    if let (Some(path), Some(cb2)) = (&args.dual_codebook_out, &secondary) {
        write_file(path, &ts, Some(cb2), args.redact)?;
    }
    Ok(0)
}

fn check(args: CheckArgs) -> Result<u8, Error> {
    let tf = read_file(&args.file)?;
    let ts = tf.table_set();
    let mut codebooks: Vec<Codebook> = tf.codebook.iter().cloned().collect();
    if let Some(path) = &args.codebook {
        let other = read_file(path)?;
        codebooks.extend(other.codebook);
    }
    let mut failed = false;
    if codebooks.is_empty() {
        eprintln!("no codebook available: structural checks only");
    } else {
        let refs: Vec<&Codebook> = codebooks.iter().collect();
        let hom = check_homomorphism(&ts, &refs)?;
        println!(
            "homomorphism: {} ({} cells)",
            if hom.passed() { "ok" } else { "FAIL" },
            hom.cells_checked
        );
        for v in &hom.violations {
            eprintln!(
                "homomorphism violation: {}({}, {}) = {}, expected {}",
                v.op, v.c1, v.c2, v.found, v.expected
            );
        }
        failed |= !hom.passed();
    }
    let offenders = check_no_accidental_pairs(&tf.tables);
    println!(
        "accidental pairs: {}",
        if offenders.is_empty() { "none" } else { "FOUND" }
    );
    for o in &offenders {
        eprintln!("accidental pair {{{}, {}}} under {}", o.x, o.y, o.op);
    }
    failed |= !offenders.is_empty();
    Ok(if failed { 1 } else { 0 })
}

fn parse_bindings(text: &str) -> Result<PlainEnv, Error> {
    let mut env = PlainEnv::new();
    for item in text.split(',').filter(|s| !s.is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Param(format!("binding `{item}` is not NAME=VALUE")))?;
        let v: u64 = value
            .parse()
            .map_err(|_| Error::Param(format!("binding value `{value}` is not a number")))?;
        env.insert(name.to_string(), v);
    }
    Ok(env)
}

fn eval(args: EvalArgs) -> Result<u8, Error> {
    let tf = read_file(&args.file)?;
    let cb = tf
        .codebook
        .as_ref()
        .ok_or_else(|| Error::Param("eval needs a file with a codebook section".into()))?;
    let e = parse_expr(&args.expr)?;
    let env = parse_bindings(&args.bind)?;
    let c = eval_expr(&tf.table_set(), cb, &env, &e)?;
    match cb.decrypt(c)? {
        abctab::Decoded::Coded { value, class } => {
            println!("cipher {c} decrypts to {value} in class {class}")
        }
        abctab::Decoded::Padding => println!("cipher {c} decrypts to padding"),
    }
    Ok(0)
}

fn typecheck(args: TypecheckArgs) -> Result<u8, Error> {
    let e = parse_expr(&args.expr)?;
    let q = quaternion_of(&e);
    match type_of(&e) {
        Some(t) => {
            println!("type {t} quaternion {q}");
            Ok(0)
        }
        None => {
            println!("ILL_TYPED quaternion {q}");
            Ok(1)
        }
    }
}

fn attack(args: AttackArgs) -> Result<u8, Error> {
    let tf = read_file(&args.file)?;
    let cb = tf
        .codebook
        .as_ref()
        .ok_or_else(|| Error::Param("the verdict judge needs a codebook section".into()))?;
    let ts = tf.table_set();
    let kinds: Vec<AttackKind> = if args.suite == "all" {
        AttackKind::ALL.to_vec()
    } else {
        vec![AttackKind::parse(&args.suite).ok_or_else(|| {
            Error::Param(format!("unknown attack `{}`", args.suite))
        })?]
    };
    let mut outcomes = Vec::new();
    for kind in kinds {
        match run_attack(&ts, cb, kind) {
            Ok(outcome) => outcomes.push((kind, Some(outcome), None::<String>)),
            Err(Error::Param(msg)) if args.suite == "all" => {
                outcomes.push((kind, None, Some(msg)))
            }
            Err(e) => return Err(e),
        }
    }
    if args.json {
        let payload: Vec<_> = outcomes
            .iter()
            .map(|(kind, outcome, skipped)| {
                serde_json::json!({
                    "attack": kind.name(),
                    "outcome": outcome,
                    "not_applicable": skipped,
                })
            })
            .collect();
        println!("{}", json(&payload));
    } else {
        for (kind, outcome, skipped) in &outcomes {
            match (outcome, skipped) {
                (Some(o), _) => println!("{:<10} {}", kind.name(), o.verdict),
                (None, Some(msg)) => println!("{:<10} n/a ({msg})", kind.name()),
                (None, None) => unreachable!(),
            }
        }
    }
    Ok(0)
}

fn search_embeddings(args: EmbeddingsArgs) -> Result<u8, Error> {
    let (n, s) = (args.modulus, args.size);
    with_pool(args.workers, move || {
        if args.pairs_overlap {
            let report = search_overlapping_pairs(n, s, args.limit)?;
            if args.json {
                println!("{}", json(&report));
            } else {
                println!(
                    "candidates {} (distinct maps {}), pairs {}, compatible {}",
                    report.raw_candidates,
                    report.distinct_maps,
                    report.pairs_scanned,
                    report.compatible_pairs
                );
                if report.hits.is_empty() {
                    println!("overlapping compatible pairs: NONE");
                } else {
                    println!("overlapping compatible pairs: {}", report.hits.len());
                    for hit in &report.hits {
                        println!(
                            "  {:?} / {:?} share {} cells",
                            hit.roles1, hit.roles2, hit.shared_cells
                        );
                    }
                }
            }
        } else if args.max_clique {
            let bounds = CliqueBounds { limit: args.limit, inject_dual: true };
            let report = max_compatible_set(n, s, bounds)?;
            if args.json {
                println!("{}", json(&report));
            } else {
                println!(
                    "max compatible set: {}{} over {} distinct maps ({} compatible pairs)",
                    report.max_size,
                    if report.partial { " (PARTIAL lower bound)" } else { "" },
                    report.distinct_maps,
                    report.compatible_pairs
                );
                for roles in &report.witness {
                    println!("  {roles:?}");
                }
                println!(
                    "witness overlap: {}",
                    if report.witness_overlapping { "yes" } else { "no" }
                );
            }
        } else {
            let list = enumerate_candidates(n, s, true, args.limit)?;
            if args.json {
                let payload = serde_json::json!({
                    "raw_count": list.raw_count,
                    "canonical": list.candidates.len(),
                    "symmetry_multiplier": list.symmetry_multiplier,
                    "truncated": list.truncated,
                });
                println!("{}", json(&payload));
            } else {
                println!(
                    "{} candidates ({} canonical x {}){}",
                    list.raw_count,
                    list.candidates.len(),
                    list.symmetry_multiplier,
                    if list.truncated { ", truncated" } else { "" }
                );
            }
        }
        Ok(0)
    })
}

fn search_expr(args: ExprSearchArgs) -> Result<u8, Error> {
    match args.max_ops {
        Some(max_ops) => {
            let report = enumerate_constant_exprs(max_ops)?;
            if args.json {
                println!("{}", json(&report));
            } else {
                println!(
                    "signatures reachable within {} ops: {}",
                    report.max_ops,
                    report.reachable.len()
                );
                println!("new states per size: {:?}", report.new_states_per_size);
                if report.odd_even_constant_witnesses.is_empty() {
                    println!("constant-valued typed expression: NONE (x odd, y even)");
                } else {
                    for (s, w) in &report.odd_even_constant_witnesses {
                        println!("constant witness {w} (truth {:#06b})", s.truth);
                    }
                }
            }
        }
        None => {
            let report = signature_closure();
            if args.json {
                println!("{}", json(&report));
            } else {
                println!(
                    "closure: {} reachable states in {} rounds",
                    report.reachable.len(),
                    report.rounds
                );
                println!("constant states overall: {}", report.constant_hits.len());
                if report.odd_even_constant_hits.is_empty() {
                    println!("constant-valued typed expression: NONE (x odd, y even)");
                } else {
                    for s in &report.odd_even_constant_hits {
                        let witness = report
                            .witnesses
                            .iter()
                            .find(|(w, _)| w == s)
                            .map(|(_, e)| e.as_str())
                            .unwrap_or("?");
                        println!(
                            "constant-valued typed expression (x odd, y even): {witness} = {}",
                            if s.truth == 0 { 0 } else { 1 }
                        );
                    }
                }
            }
        }
    }
    Ok(0)
}

fn lemma1(args: Lemma1Args) -> Result<u8, Error> {
    let report = abctab::expr::verify_lemma1(args.max_leaves)?;
    if args.json {
        println!("{}", json(&report));
    } else {
        println!(
            "expressions checked: {} ({} validly typed)",
            report.expressions_checked, report.valid_expressions
        );
        println!("retyping counterexamples: {}", report.counterexamples.len());
        println!("quaternion mismatches: {}", report.quaternion_mismatches);
    }
    Ok(if report.holds() { 0 } else { 1 })
}

//! Command-line front end: symbol evaluation, class reduction, conductor
//! computation, unit-quotient tables, and the verification suites.
//!
//! Exit codes: 0 on success, 1 when a verification assertion fails, 2 on
//! usage, parse, or parameter errors.

use asw_core::algebra::{CoeffRing, FqField};
use asw_core::asw::AswCtx;
use asw_core::localfield::UnitQuot;
use asw_core::series::{Laurent, Valuation};
use asw_core::verify::{
    filagree_suite, orders_suite, pairing_suite, schmid_suite, tower_suite, witt_suite,
    SuiteReport,
};
use asw_core::{Error, KSeries, KWitt};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Largest pole depth accepted on the command line.
const MAX_POLE: i64 = 8;

const DEFAULT_SEED: u64 = 1729;

#[derive(Parser)]
#[command(name = "asw", version, about = "Artin-Schreier-Witt symbols, conductors, and \
verification suites over F_q((t))")]
struct Cli {
    /// Output format for results
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct FieldArgs {
    /// Residue characteristic p
    #[arg(long)]
    p: u64,
    /// Extension degree e of the residue field F_q, q = p^e
    #[arg(long, default_value_t = 1)]
    e: usize,
    /// Coefficients of a custom modulus polynomial over F_p, constant term
    /// first, degree e monic (e.g. --modulus 1,1,1 for x^2 + x + 1)
    #[arg(long, value_delimiter = ',')]
    modulus: Option<Vec<u64>>,
}

impl FieldArgs {
    fn field(&self) -> Result<FqField, Error> {
        match &self.modulus {
            Some(m) => FqField::with_modulus(self.p, self.e, m.clone()),
            None => FqField::new(self.p, self.e),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the symbol [a, b) for a Witt vector a over F_q((t)) and a
    /// nonzero Laurent series b
    Pair {
        #[command(flatten)]
        field: FieldArgs,
        /// Witt length n (values land in Z/p^n)
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Class, e.g. "(t^-1)" or "(t^-1; 1 + t^-3)"
        a: String,
        /// Unit or uniformizer series, e.g. "1 + t" or "t"
        b: String,
        /// Lift precision override (default 2n)
        #[arg(long)]
        precision: Option<u32>,
        /// Re-evaluate against a shifted representative and a higher lift
        /// precision; exit 1 if any value disagrees
        #[arg(long)]
        self_check: bool,
        /// Seed for the self-check shift
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Reduce a class to its canonical representative
    Reduce {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Class to reduce, e.g. "(t^-2 + t)"
        x: String,
    },
    /// Reduce a class and compute both Artin conductors
    Conductor {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Class, e.g. "(t^-2)"
        x: String,
    },
    /// Describe the unit quotient G_(n,m) = K^x / (K^x)^(p^n) U^m
    Unitgroup {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Depth m of the unit subgroup U^m
        #[arg(long)]
        m: i64,
    },
    /// Run a verification suite; with no --p the suite covers its default
    /// parameter grid
    Verify {
        #[command(subcommand)]
        suite: Suite,
    },
}

#[derive(Args)]
struct GridArgs {
    /// Residue characteristic; omit to run the suite's default grid
    #[arg(long)]
    p: Option<u64>,
    /// Extension degree (with --p)
    #[arg(long, default_value_t = 1)]
    e: usize,
    /// Witt length (with --p)
    #[arg(long)]
    n: Option<usize>,
    /// Seed for randomized checks
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads for independent suite instances
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Suite {
    /// Ring laws and structural identities in W_n(F_q)
    Witt {
        #[command(flatten)]
        grid: GridArgs,
        /// Random cases per law
        #[arg(long, default_value_t = 500)]
        iters: usize,
    },
    /// Well-definedness, bilinearity, and precision independence of [a, b),
    /// with the n = 1 residue oracle and the Witt-tower compatibilities
    Pairing {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 200)]
        iters: usize,
    },
    /// Perfectness of fil_m H^1 x G_(n,m) and annihilator identification
    Orthogonality {
        #[command(flatten)]
        grid: GridArgs,
        /// Single depth m (default: every m up to --mmax)
        #[arg(long)]
        m: Option<u64>,
        #[arg(long, default_value_t = 5)]
        mmax: u64,
    },
    /// Agreement of the filtration conductor with the duality conductor
    Filagree {
        #[command(flatten)]
        grid: GridArgs,
        /// Pole depth bound for the exhaustive class enumeration
        #[arg(long, default_value_t = 4)]
        poles: u64,
    },
    /// The unit-quotient order identity across levels
    Orders {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 4)]
        mmax: i64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Pair { field, n, a, b, precision, self_check, seed } => {
            cmd_pair(cli.format, &field, n, &a, &b, precision, self_check, seed)
        }
        Cmd::Reduce { field, n, x } => cmd_reduce(cli.format, &field, n, &x),
        Cmd::Conductor { field, n, x } => cmd_conductor(cli.format, &field, n, &x),
        Cmd::Unitgroup { field, n, m } => cmd_unitgroup(cli.format, &field, n, m),
        Cmd::Verify { suite } => cmd_verify(cli.format, suite),
    }
}

fn parse_class(ctx: &AswCtx, s: &str) -> Result<KWitt, Error> {
    let a = ctx.witt_k().parse_witt(s)?;
    for c in a.components() {
        if let Valuation::Finite(v) = c.valuation() {
            if -v > MAX_POLE {
                return Err(Error::InvalidParameter(format!(
                    "pole depth {} exceeds the desk bound {MAX_POLE}",
                    -v
                )));
            }
        }
    }
    Ok(a)
}

fn parse_unit(ctx: &AswCtx, s: &str) -> Result<KSeries, Error> {
    let b = Laurent::parse_exact(ctx.fq(), s)?;
    match b.valuation() {
        Valuation::Finite(v) if v.abs() <= MAX_POLE => Ok(b),
        Valuation::Finite(_) => Err(Error::InvalidParameter(format!(
            "valuation of b exceeds the desk bound {MAX_POLE}"
        ))),
        Valuation::AtLeast(_) => Err(Error::DivisionByZero),
    }
}

#[derive(Serialize)]
struct PairOut {
    q: u64,
    n: usize,
    modulus: u64,
    value: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    self_check: Option<bool>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_pair(
    format: Format,
    field: &FieldArgs,
    n: usize,
    a: &str,
    b: &str,
    precision: Option<u32>,
    self_check: bool,
    seed: u64,
) -> Result<ExitCode, Error> {
    let fq = field.field()?;
    let ctx = AswCtx::new(&fq, n)?;
    let a = parse_class(&ctx, a)?;
    let b = parse_unit(&ctx, b)?;
    let value = match precision {
        Some(m) => ctx.sw_pair_at(&a, &b, m)?,
        None => ctx.sw_pair(&a, &b)?,
    };
    let mut check = None;
    if self_check {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = ctx.random_class(&mut rng, -2, 2);
        let shifted = ctx.witt_k().add(&a, &ctx.one_minus_f(&r)?);
        let again = ctx.sw_pair(&shifted, &b)?;
        let deeper = ctx.sw_pair_at(&a, &b, 2 * n as u32 + 2)?;
        check = Some(again == value && deeper == value);
    }
    let out = PairOut { q: fq.q(), n, modulus: ctx.pn(), value, self_check: check };
    match format {
        Format::Json => println!("{}", serde_json::to_string(&out).expect("serializable")),
        Format::Text => {
            println!("[a, b) = {} (mod {})", out.value, out.modulus);
            if let Some(ok) = check {
                println!("self-check: {}", if ok { "ok" } else { "FAILED" });
            }
        }
    }
    Ok(if check == Some(false) { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn witness_hash(ctx: &AswCtx, w: &KWitt) -> String {
    let mut h = Sha256::new();
    h.update(ctx.witt_k().format_witt(w).as_bytes());
    hex::encode(h.finalize())
}

#[derive(Serialize)]
struct ReduceOut {
    q: u64,
    n: usize,
    input: String,
    reduced: String,
    const_index: u64,
    witness_sha256: String,
    verified: bool,
}

fn cmd_reduce(format: Format, field: &FieldArgs, n: usize, x: &str) -> Result<ExitCode, Error> {
    let fq = field.field()?;
    let ctx = AswCtx::new(&fq, n)?;
    let input = parse_class(&ctx, x)?;
    let red = ctx.reduce(&input)?;
    let out = ReduceOut {
        q: fq.q(),
        n,
        input: ctx.witt_k().format_witt(&input),
        reduced: ctx.witt_k().format_witt(&red.rep),
        const_index: red.const_index,
        witness_sha256: witness_hash(&ctx, &red.witness),
        verified: true, // reduce() certifies the witness identity exactly
    };
    match format {
        Format::Json => println!("{}", serde_json::to_string(&out).expect("serializable")),
        Format::Text => {
            println!("reduced  = {}", out.reduced);
            println!("constant = {} . [c0]", out.const_index);
            println!("witness sha256 = {}", out.witness_sha256);
            println!("witness identity verified exactly");
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ConductorOut {
    q: u64,
    n: usize,
    reduced: String,
    witness_sha256: String,
    fil_log: u64,
    fil: u64,
    dual: u64,
    agree: bool,
    boundary: bool,
}

fn cmd_conductor(format: Format, field: &FieldArgs, n: usize, x: &str) -> Result<ExitCode, Error> {
    let fq = field.field()?;
    let ctx = AswCtx::new(&fq, n)?;
    let input = parse_class(&ctx, x)?;
    let red = ctx.reduce(&input)?;
    let fil = ctx.conductor_fil(&red)?;
    let dual = ctx.conductor_dual(&red)?;
    let boundary = fil == 1 && dual == 0;
    let out = ConductorOut {
        q: fq.q(),
        n,
        reduced: ctx.witt_k().format_witt(&red.rep),
        witness_sha256: witness_hash(&ctx, &red.witness),
        fil_log: ctx.fil_log_level(&red.rep),
        fil,
        dual,
        agree: fil == dual || boundary,
        boundary,
    };
    match format {
        Format::Json => println!("{}", serde_json::to_string(&out).expect("serializable")),
        Format::Text => {
            println!("reduced = {}", out.reduced);
            println!("witness sha256 = {}", out.witness_sha256);
            println!("fil^log = {}", out.fil_log);
            println!("fil = {}, Fil = {}", out.fil, out.dual);
            if out.boundary {
                println!("note: unramified nonzero class; fil = 1 vs Fil = 0 is the \
out-of-scope m = 0 boundary");
            } else if out.agree {
                println!("conductors agree");
            } else {
                println!("CONDUCTOR MISMATCH: fil = {} but Fil = {}", out.fil, out.dual);
            }
        }
    }
    Ok(if out.agree { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct UnitgroupOut {
    q: u64,
    n: usize,
    m: i64,
    order: u64,
    generators: Vec<String>,
}

fn cmd_unitgroup(format: Format, field: &FieldArgs, n: usize, m: i64) -> Result<ExitCode, Error> {
    let fq = field.field()?;
    let g = UnitQuot::new(&fq, n, m)?;
    let mut generators = vec!["t".to_string()];
    generators.extend(g.gen_series().iter().map(|s| s.format()));
    let out = UnitgroupOut { q: fq.q(), n, m, order: g.order(), generators };
    match format {
        Format::Json => println!("{}", serde_json::to_string(&out).expect("serializable")),
        Format::Text => {
            println!("G_(n={}, m={}) over F_{}: order {}", out.n, out.m, out.q, out.order);
            println!("  = Z/p^n (from t) x unit part of order {}", g.coset_count());
            println!("generators: {}", out.generators.join(", "));
        }
    }
    Ok(ExitCode::SUCCESS)
}

// ----------------------------------------------------------------------
// verify
// ----------------------------------------------------------------------

/// Run `count` independent jobs on up to `jobs` workers, assembling results
/// in job order regardless of scheduling.
fn run_jobs<T, F>(count: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let jobs = jobs.clamp(1, count.max(1));
    let next = AtomicUsize::new(0);
    let out = Mutex::new((0..count).map(|_| None).collect::<Vec<Option<T>>>());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let ix = next.fetch_add(1, Ordering::Relaxed);
                if ix >= count {
                    break;
                }
                let val = f(ix);
                out.lock().expect("result lock")[ix] = Some(val);
            });
        }
    });
    out.into_inner()
        .expect("result lock")
        .into_iter()
        .map(|v| v.expect("job ran"))
        .collect()
}

#[derive(Serialize)]
struct VerifyOut {
    suite: String,
    reports: Vec<SuiteReport>,
    pass: bool,
}

#[derive(Serialize)]
struct OrthoRecord {
    q: u64,
    n: usize,
    m: u64,
    h1_order: u64,
    g_order: u64,
    perfect: bool,
    orthogonality: bool,
}

#[derive(Serialize)]
struct OrthoOut {
    suite: String,
    records: Vec<OrthoRecord>,
    pass: bool,
}

fn grid_of(grid: &GridArgs, default_n: usize, fallback: &[(u64, usize, usize)]) -> Vec<(u64, usize, usize)> {
    match grid.p {
        Some(p) => vec![(p, grid.e, grid.n.unwrap_or(default_n))],
        None => fallback.to_vec(),
    }
}

fn emit_reports(format: Format, suite: &str, reports: Vec<SuiteReport>) -> ExitCode {
    let pass = reports.iter().all(|r| r.passed());
    match format {
        Format::Json => {
            let out = VerifyOut { suite: suite.into(), reports, pass };
            println!("{}", serde_json::to_string(&out).expect("serializable"));
        }
        Format::Text => {
            for r in &reports {
                if r.passed() {
                    println!("PASS {} ({} checks)", r.name, r.cases);
                } else {
                    println!("FAIL {} ({} checks, {} failures)", r.name, r.cases, r.failures.len());
                    println!("  first failure: {}", r.failures[0]);
                }
            }
            println!("{}", if pass { "all suites passed" } else { "FAILURES PRESENT" });
        }
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_verify(format: Format, suite: Suite) -> Result<ExitCode, Error> {
    match suite {
        Suite::Witt { grid, iters } => {
            let instances = grid_of(
                &grid,
                2,
                &[
                    (2, 1, 1),
                    (2, 1, 2),
                    (2, 1, 3),
                    (2, 1, 4),
                    (3, 1, 1),
                    (3, 1, 2),
                    (3, 1, 3),
                    (5, 1, 1),
                    (5, 1, 2),
                ],
            );
            let reports = try_jobs(instances.len(), grid.jobs, |ix| {
                let (p, e, n) = instances[ix];
                witt_suite(p, e, n, iters, grid.seed)
            })?;
            Ok(emit_reports(format, "witt", reports))
        }
        Suite::Pairing { grid, iters } => {
            let instances = grid_of(&grid, 2, &[(2, 1, 1), (2, 1, 2), (2, 2, 1), (3, 1, 2)]);
            let reports = try_jobs(instances.len(), grid.jobs, |ix| {
                let (p, e, n) = instances[ix];
                let mut batch = vec![pairing_suite(p, e, n, iters, grid.seed)?];
                if n == 1 {
                    batch.push(schmid_suite(p, e, iters, grid.seed)?);
                } else {
                    batch.push(tower_suite(p, e, n, iters, grid.seed)?);
                }
                Ok(batch)
            })?;
            Ok(emit_reports(format, "pairing", reports.into_iter().flatten().collect()))
        }
        Suite::Orthogonality { grid, m, mmax } => {
            let bases = grid_of(&grid, 1, &[(2, 1, 1), (2, 1, 2), (2, 2, 1), (2, 2, 2)]);
            let mut instances = Vec::new();
            for (p, e, n) in bases {
                match m {
                    Some(m) => instances.push((p, e, n, m)),
                    None => instances.extend((1..=mmax).map(|m| (p, e, n, m))),
                }
            }
            let records = try_jobs(instances.len(), grid.jobs, |ix| {
                let (p, e, n, m) = instances[ix];
                let fq = FqField::new(p, e)?;
                let ctx = AswCtx::new(&fq, n)?;
                let r = ctx.orthogonality_report(m)?;
                Ok(OrthoRecord {
                    q: fq.q(),
                    n,
                    m,
                    h1_order: r.class_count,
                    g_order: r.group_order,
                    perfect: r.counts_match && r.rows_distinct && r.cols_distinct,
                    orthogonality: r.annihilators.iter().all(|a| a.matches),
                })
            })?;
            let pass = records.iter().all(|r| r.perfect && r.orthogonality);
            match format {
                Format::Json => {
                    let out = OrthoOut { suite: "orthogonality".into(), records, pass };
                    println!("{}", serde_json::to_string(&out).expect("serializable"));
                }
                Format::Text => {
                    for r in &records {
                        println!(
                            "{} q={} n={} m={}: |fil_m H^1| = {}, |G| = {}, perfect = {}, \
orthogonality = {}",
                            if r.perfect && r.orthogonality { "PASS" } else { "FAIL" },
                            r.q,
                            r.n,
                            r.m,
                            r.h1_order,
                            r.g_order,
                            r.perfect,
                            r.orthogonality
                        );
                    }
                    println!("{}", if pass { "all suites passed" } else { "FAILURES PRESENT" });
                }
            }
            Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Suite::Filagree { grid, poles } => {
            let instances = grid_of(&grid, 1, &[(2, 1, 1), (2, 1, 2), (3, 1, 1)]);
            let reports = try_jobs(instances.len(), grid.jobs, |ix| {
                let (p, e, n) = instances[ix];
                filagree_suite(p, e, n, poles)
            })?;
            Ok(emit_reports(format, "filagree", reports))
        }
        Suite::Orders { grid, mmax } => {
            let instances = grid_of(&grid, 2, &[(2, 1, 2), (3, 1, 2)]);
            let reports = try_jobs(instances.len(), grid.jobs, |ix| {
                let (p, e, n) = instances[ix];
                orders_suite(p, e, n, mmax)
            })?;
            Ok(emit_reports(format, "orders", reports))
        }
    }
}

/// `run_jobs` over fallible work: the first error (in job order) wins.
fn try_jobs<T, F>(count: usize, jobs: usize, f: F) -> Result<Vec<T>, Error>
where
    T: Send,
    F: Fn(usize) -> Result<T, Error> + Sync,
{
    run_jobs(count, jobs, f).into_iter().collect()
}

//! Command-line interface.
//!
//! Every stochastic step receives a seed derived from the single `--seed`
//! flag with [`derive_seed`] and a fixed component name, so one flag
//! reproduces a whole run. A JSON config file (`--config`) may supply any
//! flag under its long name; flags given on the command line win.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::cube::{biased_spectrum, character, signed_character, CharacterIndex, CubeFunction};
use crate::distributions::{
    contains_blr, coord, eta, feasibility_search, make_composed_distribution, make_case_distribution, make_dfh19,
    make_full_support_perturbation, make_pairwise_independent, make_uniform_even_weight, pairwise_independent_coordinates,
    weight, BiasedDistribution,
};
use crate::error::{Error, Result};
use crate::hermite::{gaussian_mc_moment, hermite_product_expectation, CovarianceMatrix};
use crate::io::{distribution_to_json, function_from_json, read_distribution, read_text, sigma_from_json, to_pretty, WitnessFile};
use crate::lintest::{negated_test, product_expectation, tuple_count, TestMode, EXACT_BUDGET};
use crate::mc::derive_seed;
use crate::polyalg::DEFAULT_D_MAX;
use crate::rational::{format_rational, parse_rational, Rational};
use crate::witness::{build_counterexample, PipelineConfig};

const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "biaslin", version, about = "Biased linearity testing toolkit")]
pub struct Cli {
    /// Experiment seed; every stochastic component derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Cube dimension.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Worker thread cap (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// JSON file with flag values keyed by long flag name.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print errors as JSON on stderr.
    #[arg(long, global = true)]
    error_json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build, check and perturb distributions.
    Dist {
        #[command(subcommand)]
        cmd: DistCmd,
    },
    /// Pairwise-independence feasibility over a (k, p) grid.
    Feasibility {
        #[command(subcommand)]
        cmd: FeasibilityCmd,
    },
    /// Run Lin(nu) on a function.
    Test {
        #[command(subcommand)]
        cmd: TestCmd,
    },
    /// Build and verify a Gaussian counterexample.
    Witness {
        #[command(subcommand)]
        cmd: WitnessCmd,
    },
    /// Gaussian Hermite product moments.
    Hermite {
        #[command(subcommand)]
        cmd: HermiteCmd,
    },
    /// Biased Fourier spectra.
    Fourier {
        #[command(subcommand)]
        cmd: FourierCmd,
    },
}

#[derive(Debug, Subcommand)]
enum DistCmd {
    /// Write a distribution file.
    Make(MakeArgs),
    /// Validate a distribution file and report its structure.
    Check(CheckArgs),
    /// Full-support perturbation of a Hamming-symmetric distribution.
    Perturb(FileArg),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Family {
    Uniform,
    Case,
    Composed,
    Dfh19,
    Blr,
    Pairwise,
}

#[derive(Debug, Args)]
struct MakeArgs {
    #[arg(long, value_enum)]
    family: Option<Family>,
    #[arg(long)]
    k: Option<usize>,
    /// Bias as an exact rational "a/b".
    #[arg(long)]
    p: Option<String>,
    /// All-ones mass for the dfh19 family.
    #[arg(long)]
    p1: Option<String>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    file: PathBuf,
    /// Also search BLR patterns on every coordinate triple.
    #[arg(long)]
    permutations: bool,
}

#[derive(Debug, Args)]
struct FileArg {
    file: PathBuf,
}

#[derive(Debug, Subcommand)]
enum FeasibilityCmd {
    /// One row per (k, p).
    Scan(ScanArgs),
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Grid step; the grid is step, 2 step, ... below 1.
    #[arg(long)]
    p_step: Option<String>,
    /// Explicit comma-separated p values (overrides the step).
    #[arg(long)]
    p: Option<String>,
}

#[derive(Debug, Subcommand)]
enum TestCmd {
    Run(TestArgs),
}

#[derive(Debug, Args)]
struct TestArgs {
    /// `chi:S`, `neg-chi:S`, `random:SEED`, or a function file. `S` is a
    /// table bitmask `0b...` (coordinate 1 leftmost) or a list like `1,3`.
    #[arg(long = "fn")]
    function: Option<String>,
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Require exact enumeration.
    #[arg(long)]
    exact: bool,
    /// Force Monte Carlo.
    #[arg(long, conflicts_with = "exact")]
    mc: bool,
    /// Negate every query coordinate before evaluating.
    #[arg(long)]
    negated: bool,
}

#[derive(Debug, Subcommand)]
enum WitnessCmd {
    Build(WitnessArgs),
}

#[derive(Debug, Args)]
struct WitnessArgs {
    #[arg(long)]
    dist: Option<PathBuf>,
    #[arg(long)]
    d_max: Option<u32>,
    /// Number of random coordinate pairs probed.
    #[arg(long)]
    pairs: Option<usize>,
    /// Verification report file (stdout when absent).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum HermiteCmd {
    Moment(MomentArgs),
}

#[derive(Debug, Args)]
struct MomentArgs {
    /// Degrees, comma-separated.
    #[arg(long)]
    s: Option<String>,
    /// Common off-diagonal entry.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<String>,
    /// Covariance file `{"sigma": [["1", "a/b", ...], ...]}`.
    #[arg(long)]
    sigma: Option<PathBuf>,
    /// Add a Monte Carlo cross-check.
    #[arg(long)]
    mc: bool,
}

#[derive(Debug, Subcommand)]
enum FourierCmd {
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[arg(long = "fn")]
    function: Option<String>,
    #[arg(long)]
    p: Option<String>,
}

/// Flag values from `--config`.
struct Config(Map<String, Value>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Config(Map::new()));
        };
        match serde_json::from_str::<Value>(&read_text(path)?)? {
            Value::Object(m) => Ok(Config(m)),
            _ => Err(Error::Parse("config file must hold a JSON object".into())),
        }
    }

    /// `flag` if given, else the config entry `key`.
    fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.0.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| Error::Parse(format!("config entry {key:?}: {e}"))),
        }
    }

    fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

struct Ctx {
    seed: u64,
    samples: u64,
    n: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
    config: Config,
}

impl Ctx {
    fn emit(&self, text: &str) -> Result<()> {
        write_output(self.out.as_deref(), text)
    }

    fn need<T>(&self, v: Option<T>, name: &str) -> Result<T> {
        v.ok_or_else(|| Error::Parse(format!("missing required --{name}")))
    }

    fn rational(&self, flag: Option<String>, key: &str) -> Result<Option<Rational>> {
        self.config.pick(flag, key)?.map(|s: String| parse_rational(&s)).transpose()
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command, and returns the process exit status:
/// 0 on success, 1 on validation errors, 2 on computation failures.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let error_json = cli.error_json;
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            if error_json {
                let v = json!({"error": e.kind(), "message": e.to_string(), "validation": e.is_validation()});
                eprintln!("{v}");
            } else {
                eprintln!("error: {e}");
            }
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

fn execute(cli: Cli) -> Result<()> {
    let config = Config::load(cli.config.as_deref())?;
    if let Some(t) = config.pick(cli.threads, "threads")? {
        if t == 0 {
            return Err(Error::OutOfRange { what: "threads = 0".into(), admissible: "threads >= 1".into() });
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let ctx = Ctx {
        seed: config.pick(cli.seed, "seed")?.unwrap_or(0),
        samples: config.pick(cli.samples, "samples")?.unwrap_or(DEFAULT_SAMPLES),
        n: config.pick(cli.n, "n")?,
        out: config.pick(cli.out, "out")?,
        format: config.pick(cli.format, "format")?,
        config,
    };
    if ctx.samples == 0 {
        return Err(Error::OutOfRange { what: "samples = 0".into(), admissible: "samples >= 1".into() });
    }
    match cli.command {
        Command::Dist { cmd: DistCmd::Make(a) } => dist_make(&ctx, a),
        Command::Dist { cmd: DistCmd::Check(a) } => dist_check(&ctx, a),
        Command::Dist { cmd: DistCmd::Perturb(a) } => {
            let d = read_distribution(&a.file)?;
            ctx.emit(&distribution_to_json(&make_full_support_perturbation(&d)?))
        }
        Command::Feasibility { cmd: FeasibilityCmd::Scan(a) } => feasibility_scan(&ctx, a),
        Command::Test { cmd: TestCmd::Run(a) } => test_run(&ctx, a),
        Command::Witness { cmd: WitnessCmd::Build(a) } => witness_build(&ctx, a),
        Command::Hermite { cmd: HermiteCmd::Moment(a) } => hermite_moment(&ctx, a),
        Command::Fourier { cmd: FourierCmd::Spectrum(a) } => fourier_spectrum(&ctx, a),
    }
}

fn dist_make(ctx: &Ctx, a: MakeArgs) -> Result<()> {
    let cfg = &ctx.config;
    let family = ctx.need(cfg.pick(a.family, "family")?, "family")?;
    let k: Option<usize> = cfg.pick(a.k, "k")?;
    let p = ctx.rational(a.p, "p")?;
    let p1 = ctx.rational(a.p1, "p1")?;
    let d = match family {
        Family::Uniform => make_uniform_even_weight(ctx.need(k, "k")?)?,
        Family::Blr => {
            if k.is_some_and(|k| k != 3) {
                return Err(Error::InvalidArity { k: k.unwrap_or(3), min: 3 });
            }
            make_uniform_even_weight(3)?
        }
        Family::Case => make_case_distribution(ctx.need(k, "k")?, ctx.need(p, "p")?)?,
        Family::Composed => make_composed_distribution(ctx.need(k, "k")?, ctx.need(p, "p")?)?,
        Family::Pairwise => make_pairwise_independent(ctx.need(k, "k")?, ctx.need(p, "p")?)?,
        Family::Dfh19 => {
            if k.is_some_and(|k| k != 4) {
                return Err(Error::OutOfRange { what: format!("k = {}", k.unwrap_or(4)), admissible: "k = 4".into() });
            }
            make_dfh19(ctx.need(p, "p")?, p1)?
        }
    };
    ctx.emit(&distribution_to_json(&d))
}

fn set_string(coords: impl IntoIterator<Item = usize>) -> String {
    let items: Vec<String> = coords.into_iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", items.join(","))
}

fn dist_check(ctx: &Ctx, a: CheckArgs) -> Result<()> {
    let d = read_distribution(&a.file)?;
    let permutations = ctx.config.flag(a.permutations, "permutations")?;
    let k = d.k();
    let total: Rational = d.probs().values().sum();
    let marginals: Vec<Rational> = (0..k)
        .map(|i| d.probs().iter().filter(|(&x, _)| coord(x, i, k) == 1).map(|(_, pr)| pr.clone()).sum())
        .collect();
    let even = d.support().all(|x| weight(x).is_multiple_of(2));
    let pi = pairwise_independent_coordinates(&d);
    let eta_v = if k >= 2 { Some(eta(&d)?) } else { None };
    let blr = contains_blr(&d, false);
    let blr_perm = if permutations { contains_blr(&d, true) } else { None };
    let blr_json = |w: &Option<crate::distributions::BlrWitness>| match w {
        Some(w) => json!({"b": w.b, "z": w.z, "coords": w.coords.iter().map(|c| c + 1).collect::<Vec<_>>()}),
        None => Value::Null,
    };
    if ctx.format == Some(Format::Json) {
        let mut v = json!({
            "k": k,
            "p": format_rational(d.p()),
            "total": format_rational(&total),
            "support_size": d.support_len(),
            "even_weight_support": even,
            "full_even_weight_support": d.has_full_even_weight_support(),
            "marginals": marginals.iter().map(format_rational).collect::<Vec<_>>(),
            "pairwise_independent": pi.iter().map(|i| i + 1).collect::<Vec<_>>(),
            "eta": eta_v.as_ref().map(format_rational),
            "contains_blr": blr_json(&blr),
        });
        if permutations {
            v["contains_blr_up_to_permutation"] = blr_json(&blr_perm);
        }
        return ctx.emit(&to_pretty(&v));
    }
    let mut s = String::new();
    let yes = |b: bool| if b { "yes" } else { "no" };
    s += &format!("k: {k}\np: {}\n", format_rational(d.p()));
    s += &format!("total probability: {}\n", format_rational(&total));
    s += &format!("support: {} points, even weight: {}\n", d.support_len(), yes(even));
    s += &format!("full even-weight support: {}\n", yes(d.has_full_even_weight_support()));
    s += &format!("marginals: {}\n", marginals.iter().map(format_rational).collect::<Vec<_>>().join(" "));
    s += &format!("pairwise independent: {}\n", set_string(pi.iter().copied()));
    if let Some(e) = &eta_v {
        s += &format!("eta: {}\n", format_rational(e));
    }
    let describe = |w: &Option<crate::distributions::BlrWitness>| match w {
        Some(w) => format!(
            "b={} z=({}) on coordinates ({})",
            w.b,
            w.z.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(","),
            w.coords.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>().join(",")
        ),
        None => "no".into(),
    };
    s += &format!("contains BLR: {}\n", describe(&blr));
    if permutations {
        s += &format!("contains BLR up to permutation: {}\n", describe(&blr_perm));
    }
    ctx.emit(&s)
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub k: usize,
    pub p: String,
    pub feasible: bool,
    pub bound_check: bool,
    /// Vertex `q`, entries joined with `;`.
    pub q: Option<String>,
}

fn feasibility_scan(ctx: &Ctx, a: ScanArgs) -> Result<()> {
    let cfg = &ctx.config;
    let k_min = cfg.pick(a.k_min, "k-min")?.unwrap_or(2);
    let k_max = cfg.pick(a.k_max, "k-max")?.unwrap_or(6);
    if k_min < 1 || k_max < k_min {
        return Err(Error::OutOfRange { what: format!("k range {k_min}..={k_max}"), admissible: "1 <= k-min <= k-max".into() });
    }
    let grid: Vec<Rational> = match cfg.pick(a.p, "p")? {
        Some(list) => {
            let list: String = list;
            list.split(',').map(|s| parse_rational(s.trim())).collect::<Result<_>>()?
        }
        None => {
            let step = ctx.rational(a.p_step, "p-step")?.unwrap_or_else(|| crate::rational::rat(1, 20));
            if step <= Rational::from_integer(0.into()) || step >= Rational::from_integer(1.into()) {
                return Err(Error::OutOfRange { what: format!("p-step = {}", format_rational(&step)), admissible: "(0, 1)".into() });
            }
            let one = Rational::from_integer(1.into());
            std::iter::successors(Some(step.clone()), |x| Some(x + &step)).take_while(|x| *x < one).collect()
        }
    };
    let mut rows = Vec::new();
    for k in k_min..=k_max {
        for p in &grid {
            crate::rational::check_open_unit(p, "p")?;
            let cert = feasibility_search(k, p);
            rows.push(FrontierRow {
                k,
                p: format_rational(p),
                feasible: cert.feasible,
                bound_check: cert.bound_check,
                q: cert.q.map(|q| q.iter().map(format_rational).collect::<Vec<_>>().join(";")),
            });
        }
    }
    let disagreements = rows.iter().filter(|r| r.feasible != r.bound_check).count();
    let text = match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => frontier_csv(&rows)?,
        Format::Json => to_pretty(&rows),
    };
    ctx.emit(&text)?;
    if disagreements > 0 {
        return Err(Error::Internal(format!("{disagreements} rows where vertex enumeration and the analytic bound disagree")));
    }
    Ok(())
}

pub fn frontier_csv(rows: &[FrontierRow]) -> Result<String> {
    to_csv(rows)
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

pub fn parse_frontier_csv(text: &str) -> Result<Vec<FrontierRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(e.to_string()))
}

/// `S` as `0b...` (table order) or a 1-based coordinate list; returns the
/// set and the dimension.
fn parse_set(spec: &str, n: Option<usize>) -> Result<(CharacterIndex, usize)> {
    let spec = spec.trim();
    if let Some(bits) = spec.strip_prefix("0b") {
        let mask = u64::from_str_radix(bits, 2).map_err(|e| Error::Parse(format!("bitmask {spec:?}: {e}")))?;
        let n = n.unwrap_or(bits.len());
        return Ok((CharacterIndex::from_table_mask(n, mask)?, n));
    }
    let n = n.ok_or_else(|| Error::Parse("a coordinate-list character needs --n".into()))?;
    let body = spec.trim_start_matches('{').trim_end_matches('}');
    let coords = body
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| match s.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(Error::Parse(format!("coordinate {s:?} is not a positive integer"))),
            Ok(c) => Ok(c - 1),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((CharacterIndex::from_coords(n, &coords)?, n))
}

/// Resolves a `--fn` argument.
pub fn parse_function(spec: &str, n: Option<usize>) -> Result<CubeFunction> {
    let f = if let Some(s) = spec.strip_prefix("chi:") {
        let (set, n) = parse_set(s, n)?;
        character(&set, n)?
    } else if let Some(s) = spec.strip_prefix("neg-chi:") {
        let (set, n) = parse_set(s, n)?;
        signed_character(&set, n, true)?
    } else if let Some(s) = spec.strip_prefix("random:") {
        let seed: u64 = s.trim().parse().map_err(|_| Error::Parse(format!("random seed {s:?}")))?;
        let n = n.ok_or_else(|| Error::Parse("random functions need --n".into()))?;
        if n > crate::cube::MAX_DENSE_N {
            return Err(Error::TooLarge { what: "dense table dimension".into(), value: n as u128, limit: crate::cube::MAX_DENSE_N as u128 });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CubeFunction::dense(n, (0..1usize << n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())?
    } else {
        function_from_json(&read_text(Path::new(spec))?)?
    };
    if let Some(n) = n {
        if f.n() != n {
            return Err(Error::Index(format!("function has n = {}, but --n {n} was given", f.n())));
        }
    }
    Ok(f)
}

fn test_run(ctx: &Ctx, a: TestArgs) -> Result<()> {
    let cfg = &ctx.config;
    let spec: String = ctx.need(cfg.pick(a.function, "fn")?, "fn")?;
    let dist: PathBuf = ctx.need(cfg.pick(a.dist, "dist")?, "dist")?;
    let d = read_distribution(&dist)?;
    let f = parse_function(&spec, ctx.n)?;
    let n = f.n();
    let exact = cfg.flag(a.exact, "exact")?;
    let mc = cfg.flag(a.mc, "mc")?;
    let negated = cfg.flag(a.negated, "negated")?;
    let mc_mode = TestMode::MonteCarlo { samples: ctx.samples, seed: derive_seed(ctx.seed, "test") };
    let mode = if exact {
        TestMode::Exact
    } else if mc {
        mc_mode
    } else if f.product_factors().is_some() || tuple_count(&d, n) <= EXACT_BUDGET {
        TestMode::Exact
    } else {
        mc_mode
    };
    let report = if negated { negated_test(&f, &d, n, mode)? } else { product_expectation(&f, &d, n, mode)? };
    let text = match ctx.format.unwrap_or(Format::Json) {
        Format::Json => to_pretty(&report),
        Format::Csv => to_csv(std::slice::from_ref(&report))?,
    };
    ctx.emit(&text)
}

fn witness_build(ctx: &Ctx, a: WitnessArgs) -> Result<()> {
    let cfg = &ctx.config;
    let dist: PathBuf = ctx.need(cfg.pick(a.dist, "dist")?, "dist")?;
    let d: BiasedDistribution = read_distribution(&dist)?;
    let pi = pairwise_independent_coordinates(&d);
    if !pi.is_empty() {
        return Err(Error::PairwiseIndependent(format!(
            "coordinates {} are pairwise independent; no counterexample of this kind exists",
            set_string(pi.iter().copied())
        )));
    }
    let config = PipelineConfig {
        n: ctx.n.unwrap_or(2000),
        samples: ctx.samples,
        seed: ctx.seed,
        d_max: cfg.pick(a.d_max, "d-max")?.unwrap_or(DEFAULT_D_MAX as u32),
        pairs: cfg.pick(a.pairs, "pairs")?.unwrap_or(100),
    };
    let ce = build_counterexample(&d, &config)?;
    let witness = WitnessFile::new(&ce.truncation.bounded, ctx.seed);
    let report_path: Option<PathBuf> = cfg.pick(a.report, "report")?;
    match (&ctx.out, &report_path) {
        (None, None) => ctx.emit(&to_pretty(&json!({"witness": witness, "report": ce.report})))?,
        _ => {
            write_output(ctx.out.as_deref(), &to_pretty(&witness))?;
            write_output(report_path.as_deref(), &to_pretty(&ce.report))?;
        }
    }
    let r = &ce.report;
    let mut failed = Vec::new();
    if !r.product_pass {
        failed.push("product expectation below alpha_const - 3 stderr");
    }
    if !r.correlation_pass {
        failed.push("a probed correlation exceeds the bound");
    }
    if r.rounded_pass == Some(false) {
        failed.push("rounded product expectation below alpha_const/2 - 3 stderr");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(failed.join("; ")))
    }
}

fn hermite_moment(ctx: &Ctx, a: MomentArgs) -> Result<()> {
    let cfg = &ctx.config;
    let s_spec: String = ctx.need(cfg.pick(a.s, "s")?, "s")?;
    let s: Vec<u32> = s_spec
        .split(',')
        .map(|x| x.trim().parse::<u32>().map_err(|_| Error::Parse(format!("degree {x:?}"))))
        .collect::<Result<_>>()?;
    let sigma_path: Option<PathBuf> = cfg.pick(a.sigma, "sigma")?;
    let sigma = match (sigma_path, ctx.rational(a.rho, "rho")?) {
        (Some(path), _) => sigma_from_json(&read_text(&path)?)?,
        (None, Some(rho)) => CovarianceMatrix::from_rho(s.len(), &rho)?,
        (None, None) => CovarianceMatrix::identity(s.len()),
    };
    let exact = hermite_product_expectation(&s, &sigma)?;
    let mc = if cfg.flag(a.mc, "mc")? {
        Some(gaussian_mc_moment(&s, &sigma, ctx.samples, derive_seed(ctx.seed, "hermite"))?)
    } else {
        None
    };
    let text = if ctx.format == Some(Format::Json) {
        to_pretty(&json!({"s": s, "moment": format_rational(&exact), "mc": mc}))
    } else {
        let mut t = format!("{}\n", format_rational(&exact));
        if let Some(e) = mc {
            t += &format!("mc: {} +/- {} ({} samples)\n", e.estimate, e.stderr, e.samples);
        }
        t
    };
    ctx.emit(&text)
}

#[derive(Serialize)]
struct SpectrumRow {
    set: String,
    mask: usize,
    value: f64,
}

fn fourier_spectrum(ctx: &Ctx, a: SpectrumArgs) -> Result<()> {
    let cfg = &ctx.config;
    let spec: String = ctx.need(cfg.pick(a.function, "fn")?, "fn")?;
    let p = ctx.rational(a.p, "p")?.unwrap_or_else(|| crate::rational::rat(1, 2));
    crate::rational::check_open_unit(&p, "p")?;
    let f = parse_function(&spec, ctx.n)?;
    let spectrum = biased_spectrum(&f, &p)?;
    let n = f.n();
    let label = |mask: usize| set_string((0..n).filter(|j| (mask >> (n - 1 - j)) & 1 == 1));
    let text = match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let rows: Vec<SpectrumRow> =
                spectrum.iter().enumerate().map(|(mask, &value)| SpectrumRow { set: label(mask), mask, value }).collect();
            to_csv(&rows)?
        }
        Format::Json => to_pretty(&json!({
            "n": n,
            "p": format_rational(&p),
            "values": spectrum,
        })),
    };
    ctx.emit(&text)
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use berkovich::corpus::{builtin, parse_mobius, Corpus, CorpusEntry, MapSpec};
use berkovich::dynamics::{nu, pullback_measure, DynOptions, DEFAULT_BUDGET};
use berkovich::lyapunov::{analyze, AnalyzeConfig};
use berkovich::map::{Mobius, RationalMap};
use berkovich::measure::DiscreteMeasure;
use berkovich::point::BerkPoint;
use berkovich::rational::{format_rat, int, Rat};
use berkovich::suite::{verify_corpus, SuiteConfig};
use berkovich::tree::FiniteTree;
use berkovich::valuation::LogValue;
use berkovich::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::One;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "berk", version, about = "Exact dynamics of rational maps on the Berkovich line over Q_p")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lyapunov estimates and their lower bounds for one map.
    Analyze(AnalyzeArgs),
    /// Weighted preimages `d^{-n} (φ^n)^* [target]`.
    Preimages(PreimageArgs),
    /// The finite tree spanned by a set of points.
    Tree(TreeArgs),
    /// Run the property suites over a corpus of maps.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct MapArgs {
    /// Map file: {"p", "precision", "numerator", "denominator"}.
    #[arg(long)]
    map: PathBuf,
    /// Overrides the prime of the map file.
    #[arg(long)]
    prime: Option<u64>,
    /// Overrides the precision of the map file.
    #[arg(long)]
    precision: Option<u32>,
}

#[derive(Args)]
struct Common {
    /// Number of pullback levels.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Cap on the worst-case number of atoms.
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    common: Common,
    /// Conjugation candidates `a,b,c,d` for `(az+b)/(cz+d)`, separated by `;`.
    #[arg(long, allow_hyphen_values = true)]
    conjugates: Option<String>,
    /// Random type II points for the derivative bound.
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct PreimageArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    common: Common,
    /// Target point as JSON; the Gauss point when absent.
    #[arg(long)]
    target: Option<String>,
}

#[derive(Args)]
struct TreeArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    common: Common,
    /// Vertices of type I points sit this far from the rest of the tree.
    #[arg(long, default_value_t = 2)]
    truncation: i64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Corpus file: {"maps": [{"name", "p", "precision", "numerator", "denominator"}]}.
    #[arg(long, conflicts_with = "map")]
    corpus: Option<PathBuf>,
    /// A single map file instead of a corpus.
    #[arg(long)]
    map: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 10_000)]
    lipschitz_pairs: usize,
    #[arg(long, default_value_t = 500)]
    trees: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

enum Failure {
    Input(String),
    Math(Error),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Math(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::RequiresExtension(_) | Error::InsufficientPrecision(_) => 3,
        Error::MultiplicityMismatch { .. } | Error::InconsistentSurplus(_) | Error::ConsistencyFailure(_) => 2,
        _ => 1,
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_map_file(path: &Path, prime: Option<u64>, precision: Option<u32>) -> Result<MapSpec, Failure> {
    let mut v: Value =
        serde_json::from_str(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let obj = v.as_object_mut().ok_or_else(|| Failure::Input(format!("{}: expected a JSON object", path.display())))?;
    if let Some(p) = prime {
        obj.insert("p".into(), json!(p));
    }
    if let Some(n) = precision {
        obj.insert("precision".into(), json!(n));
    }
    Ok(MapSpec::parse(&v.to_string())?)
}

fn load_map(args: &MapArgs) -> Result<RationalMap, Failure> {
    Ok(load_map_file(&args.map, args.prime, args.precision)?.to_map()?)
}

fn emit(common: &Common, json: &Value, csv: impl FnOnce() -> String) -> Result<(), Failure> {
    let text = match common.format {
        Format::Json => serde_json::to_string_pretty(json).expect("serializable") + "\n",
        Format::Csv => csv(),
    };
    match &common.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn opts(common: &Common) -> DynOptions {
    DynOptions { budget: common.budget, ..DynOptions::default() }
}

fn parse_conjugates(s: &str) -> Result<Vec<Mobius>, Failure> {
    Ok(s.split(';').filter(|t| !t.trim().is_empty()).map(parse_mobius).collect::<Result<_, _>>()?)
}

fn run_analyze(a: &AnalyzeArgs) -> Result<(), Failure> {
    let phi = load_map(&a.map)?;
    let conjugates = a.conjugates.as_deref().map(parse_conjugates).transpose()?.unwrap_or_default();
    let cfg = AnalyzeConfig {
        n_max: a.common.levels,
        conjugates,
        derivative_samples: a.samples,
        seed: a.seed,
        opts: opts(&a.common),
        ..AnalyzeConfig::default()
    };
    let report = analyze(&phi, &cfg)?;
    emit(&a.common, &report.to_json(), || report.to_csv())?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn measure_csv(mu: &DiscreteMeasure) -> String {
    let mut out = String::from("type,center,log_radius,weight\n");
    for (pt, w) in mu.atoms() {
        let (kind, center, radius) = match pt.center_radius() {
            None => ("I", "inf".to_string(), String::new()),
            Some((c, LogValue::Finite(t))) => ("disc", format_rat(&c), format_rat(&t)),
            Some((c, _)) => ("I", format_rat(&c), String::new()),
        };
        out.push_str(&format!("{kind},{center},{radius},{}\n", format_rat(w)));
    }
    out
}

fn levels_of(phi: &RationalMap, target: &BerkPoint, n: usize, opts: &DynOptions) -> Result<DiscreteMeasure, Error> {
    if target.in_h() {
        return Ok(nu(phi, target, n, opts)?.levels.pop().expect("level 0"));
    }
    let needed = berkovich::dynamics::atom_bound(phi.degree(), n);
    if needed > opts.budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget: opts.budget });
    }
    let inv_d = Rat::one() / int(phi.degree() as i64);
    let mut mu = DiscreteMeasure::dirac(target.clone());
    for _ in 0..n {
        mu = pullback_measure(phi, &mu, opts)?.scale(&inv_d);
    }
    Ok(mu)
}

fn run_preimages(a: &PreimageArgs) -> Result<(), Failure> {
    let phi = load_map(&a.map)?;
    let target = match &a.target {
        None => BerkPoint::gauss(),
        Some(s) => {
            let v: Value = serde_json::from_str(s).map_err(|e| Failure::Input(format!("target: {e}")))?;
            BerkPoint::from_json(&v, phi.ctx())?
        }
    };
    let mu = levels_of(&phi, &target, a.common.levels, &opts(&a.common))?;
    let report = json!({
        "map": phi.to_string(),
        "p": phi.ctx().prime(),
        "target": target.to_json(),
        "levels": a.common.levels,
        "atoms": mu.to_json(),
    });
    emit(&a.common, &report, || measure_csv(&mu))
}

fn run_tree(a: &TreeArgs) -> Result<(), Failure> {
    let phi = load_map(&a.map)?;
    let mu = nu(&phi, &BerkPoint::gauss(), a.common.levels, &opts(&a.common))?.levels.pop().expect("level 0");
    let mut points: Vec<BerkPoint> = vec![BerkPoint::gauss()];
    points.extend(mu.atoms().map(|(p, _)| p.clone()));
    let tree = FiniteTree::span(&points, a.truncation, phi.ctx())?;
    let (plus, minus) = tree.branching_measure();
    let report = json!({
        "map": phi.to_string(),
        "p": phi.ctx().prime(),
        "levels": a.common.levels,
        "tree": tree.to_json(),
        "branching_plus": plus.to_json(),
        "branching_minus": minus.to_json(),
    });
    emit(&a.common, &report, || {
        let disc = |i: usize| {
            let d = tree.vertices()[i].as_disc().expect("tree vertices are discs");
            format!("{},{}", format_rat(d.center()), format_rat(d.log_radius()))
        };
        let mut out = String::from("child_center,child_log_radius,parent_center,parent_log_radius,length\n");
        for (c, p, l) in tree.edges() {
            out.push_str(&format!("{},{},{}\n", disc(c), disc(p), format_rat(&l)));
        }
        out
    })
}

fn run_verify(a: &VerifyArgs) -> Result<(), Failure> {
    let corpus = match (&a.corpus, &a.map) {
        (Some(path), _) => Corpus::parse(&read(path)?)?,
        (None, Some(path)) => {
            let map = load_map_file(path, None, None)?;
            Corpus { maps: vec![CorpusEntry { name: path.display().to_string(), map }], fault_injection: None }
        }
        (None, None) => builtin(),
    };
    let cfg = SuiteConfig {
        n_max: a.common.levels,
        derivative_samples: a.samples,
        lipschitz_pairs: a.lipschitz_pairs,
        trees: a.trees,
        seed: a.seed,
        opts: opts(&a.common),
        ..SuiteConfig::default()
    };
    let report = verify_corpus(&corpus, &cfg)?;
    if matches!(a.common.format, Format::Json) {
        eprint!("{}", report.summary_table());
    }
    emit(&a.common, &report.to_json(), || report.summary_table())?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => run_analyze(a),
        Command::Preimages(a) => run_preimages(a),
        Command::Tree(a) => run_tree(a),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Math(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Verification) => {
            eprintln!("error: verification failed");
            ExitCode::from(2)
        }
    }
}

//! `amphimax`: solve, simulate, inspect and generate amphibious influence instances.
//!
//! Results are JSON on stdout or in `--out`; every `--out` file gets a sibling
//! `<out>.manifest.json`. Diagnostics go to stderr. Exit codes: 0 success, 1 runtime
//! failure, 2 usage error.

mod manifest;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use amphimax::diffusion::{estimate_sigma, exact_sigma, SpreadEstimate};
use amphimax::generators::GeneratorSpec;
use amphimax::instance::{numerical_rank, parse_instance, serialize_instance, AimInstance, DEFAULT_RANK_TOL};
use amphimax::net::{build_net, NetOptions};
use amphimax::sdg::{approximation_ratio, solve, SdgConfig};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(name = "amphimax", version, about = "Amphibious influence maximization solver")]
struct Cli {
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long, global = true, env = "AMPHIMAX_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pick seed providers and consumers with Sampled Double Greedy.
    Solve(SolveArgs),
    /// Monte Carlo spread of a fixed seed pair.
    Simulate(SimulateArgs),
    /// Exact spread of a fixed seed pair by enumerating social-edge outcomes.
    Exact(ExactArgs),
    /// Write the one-sided net over the image of the activation matrix.
    Net(NetArgs),
    /// Generate an instance from a seeded family.
    Gen(GenArgs),
    /// Print the guarantee factor (1 - 1/e - epsilon)^3.
    Ratio(RatioArgs),
}

#[derive(Args, Debug, Serialize)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scenarios per greedy evaluation; derived from epsilon, delta and the net size if unset.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 200_000)]
    max_net_points: usize,
    #[arg(long, default_value_t = 4)]
    max_rank: usize,
    /// Keep net points that no budget-respecting provider set can reach.
    #[arg(long)]
    no_prune: bool,
    /// Per-net-point rows.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock time in the outputs (makes them run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Comma-separated provider indices.
    #[arg(long)]
    x: IndexList,
    /// Comma-separated consumer indices.
    #[arg(long)]
    y: IndexList,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ExactArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    x: IndexList,
    #[arg(long)]
    y: IndexList,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct NetArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    /// rank_r, planted, classic_im or three_layer.
    #[arg(long)]
    family: String,
    /// Comma-separated key=value pairs.
    #[arg(long, default_value = "")]
    params: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct RatioArgs {
    #[arg(long)]
    epsilon: f64,
}

/// Comma-separated indices; the empty string is the empty list.
#[derive(Clone, Debug, Serialize)]
struct IndexList(Vec<usize>);

impl FromStr for IndexList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|_| format!("not an index: {t:?}")))
            .collect::<std::result::Result<_, _>>()
            .map(IndexList)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Solve(args) => run_solve(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Exact(args) => run_exact(args),
        Command::Net(args) => run_net(args),
        Command::Gen(args) => run_gen(args),
        Command::Ratio(args) => {
            let manifest = RunManifest::new("ratio", &args, 0, &[], None)?;
            emit(&format!("{}\n", approximation_ratio(args.epsilon)?), None, &manifest)
        }
    }
}

fn load(path: &Path) -> Result<(AimInstance, Vec<u8>)> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
    let instance = parse_instance(text).with_context(|| format!("in {}", path.display()))?;
    Ok((instance, bytes))
}

fn check_indices(what: &str, list: &[usize], size: usize) -> Result<()> {
    if let Some(&bad) = list.iter().find(|&&i| i >= size) {
        bail!("{what} index {bad} out of range 0..{size}");
    }
    let mut sorted = list.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        bail!("{what} list has duplicates");
    }
    Ok(())
}

fn render(value: &impl Serialize) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Writes `body` to `out` (plus its manifest) or to stdout.
fn emit(body: &str, out: Option<&Path>, manifest: &RunManifest) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))?;
            manifest.write_beside(path)
        }
        None => match std::io::stdout().lock().write_all(body.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn estimate_json(e: &SpreadEstimate) -> Value {
    json!({ "mean": e.mean, "std_error": e.std_error, "samples": e.samples })
}

fn run_solve(args: SolveArgs) -> Result<()> {
    let start = Instant::now();
    let (instance, bytes) = load(&args.instance)?;
    let config = SdgConfig {
        epsilon: args.epsilon,
        delta: args.delta,
        samples_per_eval: args.samples,
        master_seed: args.seed,
        max_net_points: args.max_net_points,
        max_rank: args.max_rank,
        prune_infeasible: !args.no_prune,
        ..SdgConfig::default()
    };
    let (solution, report) = solve(&instance, &config)?;
    let elapsed = args.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    eprintln!(
        "net: {} points (rank {}, grid {}), {} scenarios per evaluation",
        report.net_size, report.rank, report.grid_size, report.samples_per_eval
    );
    let mut result = json!({
        "providers": solution.providers,
        "consumers": solution.consumers,
        "value": solution.value.mean,
        "std_error": solution.value.std_error,
        "net_size": report.net_size,
        "rank": report.rank,
        "net_point_index": solution.net_point_index,
        "samples_per_eval": report.samples_per_eval,
    });
    if let Some(ms) = elapsed {
        result["elapsed_ms"] = json!(ms);
    }
    let manifest = RunManifest::new("solve", &args, args.seed, &bytes, elapsed)?;
    if let Some(path) = &args.report {
        std::fs::write(path, render(&report)?).with_context(|| format!("cannot write {}", path.display()))?;
        manifest.write_beside(path)?;
    }
    emit(&render(&result)?, args.out.as_deref(), &manifest)
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let (instance, bytes) = load(&args.instance)?;
    check_indices("provider", &args.x.0, instance.n_providers)?;
    check_indices("consumer", &args.y.0, instance.n_consumers)?;
    if args.samples == 0 {
        bail!("--samples must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let estimate = estimate_sigma(&instance, &args.x.0, &args.y.0, args.samples, &mut rng);
    let manifest = RunManifest::new("simulate", &args, args.seed, &bytes, None)?;
    emit(&render(&estimate_json(&estimate))?, args.out.as_deref(), &manifest)
}

fn run_exact(args: ExactArgs) -> Result<()> {
    let (instance, bytes) = load(&args.instance)?;
    check_indices("provider", &args.x.0, instance.n_providers)?;
    check_indices("consumer", &args.y.0, instance.n_consumers)?;
    let value = exact_sigma(&instance, &args.x.0, &args.y.0)?;
    let estimate = SpreadEstimate { mean: value, std_error: 0.0, samples: 0 };
    let manifest = RunManifest::new("exact", &args, 0, &bytes, None)?;
    emit(&render(&estimate_json(&estimate))?, args.out.as_deref(), &manifest)
}

fn run_net(args: NetArgs) -> Result<()> {
    let (instance, bytes) = load(&args.instance)?;
    let basis = numerical_rank(&instance.bipartite, DEFAULT_RANK_TOL);
    let bound = amphimax::net::size_bound(
        instance.n_consumers,
        basis.rank,
        amphimax::net::Grid::build(instance.bit_precision, (1.0 + args.epsilon).sqrt() - 1.0, instance.n_providers)?
            .len(),
    );
    if bound > 100 * args.max_points as u128 {
        bail!("net enumeration bound {bound} is far above --max-points {}; increase --epsilon", args.max_points);
    }
    let net = build_net(&instance.bipartite, &basis, instance.bit_precision, args.epsilon, &NetOptions::default())?;
    if net.len() > args.max_points {
        bail!("net has {} points, above --max-points {}", net.len(), args.max_points);
    }
    let points: Vec<Vec<f64>> = net.points().map(|p| p.coords).collect();
    let result = json!({
        "r": net.rank,
        "grid_size": net.grid_size,
        "count": net.len(),
        "size_bound": net.size_bound(),
        "epsilon": net.epsilon,
        "points": points,
    });
    let manifest = RunManifest::new("net", &args, 0, &bytes, None)?;
    emit(&render(&result)?, args.out.as_deref(), &manifest)
}

fn parse_params(text: &str) -> Result<BTreeMap<String, String>> {
    let mut params = BTreeMap::new();
    for pair in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((key, value)) = pair.split_once('=') else {
            bail!("parameter {pair:?} is not key=value");
        };
        params.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(params)
}

fn run_gen(args: GenArgs) -> Result<()> {
    let spec = GeneratorSpec::from_params(&args.family, &parse_params(&args.params)?)?;
    let generated = spec.generate(args.seed)?;
    if let Some(planted) = &generated.planted {
        eprintln!("planted: {planted:?}");
    }
    let mut body = serialize_instance(&generated.instance);
    body.push('\n');
    let mut manifest = RunManifest::new("gen", &args, args.seed, body.as_bytes(), None)?;
    manifest.extra = Some(json!({ "spec": spec, "planted": generated.planted }));
    emit(&body, args.out.as_deref(), &manifest)
}

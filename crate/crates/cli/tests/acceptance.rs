//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and exits non-zero
//! if any failed. Pass criterion numbers as arguments to run a subset.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use amphimax::diffusion::{
    estimate_sigma, exact_rho_bar, exact_sigma, exact_sigma_hat, ScenarioEstimator, SocialGraph, StreamId,
};
use amphimax::generators::{gen_classic_im, gen_planted_biclique, gen_rank_r, random_social_graph};
use amphimax::instance::{numerical_rank, serialize_instance, AimInstance, Matrix, DEFAULT_RANK_TOL};
use amphimax::net::{build_net, size_bound, Grid, NetOptions};
use amphimax::relaxation::{concave_relaxation, initial_activation, IndicatorVector, LinearImagePoint};
use amphimax::sdg::{approximation_ratio, brute_force_opt, solve, SdgConfig, STREAM_CONSUMERS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ONE_MINUS_INV_E: f64 = 1.0 - 0.367_879_441_171_442_3;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria = [
        Criterion { id: 1, name: "relaxation sandwich", budget: secs(1), run: sandwich },
        Criterion { id: 2, name: "net coverage", budget: secs(30), run: net_coverage },
        Criterion { id: 3, name: "sigma-hat sandwich", budget: secs(30), run: sigma_hat_sandwich },
        Criterion { id: 4, name: "oracle equivalence", budget: secs(30), run: oracle_equivalence },
        Criterion { id: 5, name: "exhaustive submodularity", budget: secs(60), run: exhaustive_submodularity },
        Criterion { id: 6, name: "end-to-end guarantee", budget: secs(300), run: end_to_end },
        Criterion { id: 7, name: "classic IM reduction", budget: secs(120), run: classic_im },
        Criterion { id: 8, name: "planted instance value", budget: secs(1), run: planted_value },
        Criterion { id: 9, name: "scaling check", budget: secs(300), run: scaling },
        Criterion { id: 10, name: "determinism", budget: secs(60), run: determinism },
    ];
    let mut failed = 0;
    for c in criteria.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > c.budget => {
                Err(format!("{detail}; took {:.2}s over the {}s budget", took.as_secs_f64(), c.budget.as_secs()))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} {}: PASS ({detail}) [{:.2}s]", c.id, c.name, took.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {}: FAIL ({detail}) [{:.2}s]", c.id, c.name, took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_mask(rng: &mut ChaCha8Rng, len: usize) -> IndicatorVector {
    IndicatorVector::from_bits((0..len).map(|_| rng.gen_bool(0.5)).collect())
}

/// Every subset of `0..len` as an index list.
fn subsets(len: usize) -> Vec<Vec<usize>> {
    (0..1u64 << len).map(|mask| IndicatorVector::from_mask(len, mask).indices()).collect()
}

fn tiny_instance(n: usize, m: usize, max_edges: usize, rng: &mut ChaCha8Rng) -> AimInstance {
    let data = (0..n * m).map(|_| rng.gen_range(0..=8) as f64 / 8.0).collect();
    let edges = rng.gen_range(0..=max_edges.min(m * (m - 1)));
    AimInstance {
        n_providers: n,
        n_consumers: m,
        bipartite: Matrix::from_vec(n, m, data).unwrap(),
        social_edges: random_social_graph(m, edges, rng.gen()).unwrap(),
        budget_providers: 1,
        budget_consumers: 1,
        bit_precision: 3,
    }
    .checked()
    .unwrap()
}

fn sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = 0;
    let mut checked = 0;
    for _ in 0..1000 {
        let (n, m) = (rng.gen_range(1..=20), rng.gen_range(1..=20));
        let data = (0..n * m).map(|_| rng.gen::<f64>()).collect();
        let matrix = Matrix::from_vec(n, m, data).unwrap();
        let x = random_mask(&mut rng, n);
        let y = random_mask(&mut rng, m);
        let f = initial_activation(&x, &y, &matrix).unwrap();
        let relaxed = concave_relaxation(&x, &y, &matrix).unwrap();
        for (fj, rj) in f.iter().zip(&relaxed) {
            checked += 1;
            if ONE_MINUS_INV_E * fj > rj + 1e-12 || *rj > fj + 1e-12 {
                violations += 1;
            }
        }
    }
    check(violations == 0, format!("{violations} violations over {checked} coordinates"))
}

/// Rank-2 `n x m` matrix `A B / 2` with factors uniform in `[1/4, 1]`, entries in `[1/16, 1]`.
fn rank_two(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let a: Vec<f64> = (0..n * 2).map(|_| rng.gen_range(0.25..=1.0)).collect();
    let b: Vec<f64> = (0..2 * m).map(|_| rng.gen_range(0.25..=1.0)).collect();
    let data = (0..n * m)
        .map(|idx| {
            let (i, j) = (idx / m, idx % m);
            (a[i * 2] * b[j] + a[i * 2 + 1] * b[m + j]) / 2.0
        })
        .collect();
    Matrix::from_vec(n, m, data).unwrap()
}

fn net_coverage() -> Outcome {
    let (n, m, lambda) = (10, 8, 4);
    let floor = (-(lambda as f64)).exp2();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut details = Vec::new();
    let mut ok = true;
    for eps in [0.25, 0.5, 1.0] {
        let start = Instant::now();
        let mut uncovered = 0;
        let mut largest = (0, 0);
        for _ in 0..3 {
            let matrix = rank_two(n, m, &mut rng);
            let basis = numerical_rank(&matrix, DEFAULT_RANK_TOL);
            if basis.rank != 2 {
                return Err(format!("generated rank {} instead of 2", basis.rank));
            }
            let net = build_net(&matrix, &basis, lambda, eps, &NetOptions::default()).map_err(|e| e.to_string())?;
            if net.len() as u128 > net.size_bound() {
                ok = false;
            }
            largest = largest.max((net.len(), net.size_bound() as usize));
            for mask in 0..1u64 << n {
                let v = LinearImagePoint::image_of(&IndicatorVector::from_mask(n, mask), &matrix).unwrap();
                if net.find_covering(&v.coords, floor).is_none() {
                    uncovered += 1;
                }
            }
        }
        let took = start.elapsed().as_secs_f64();
        ok &= uncovered == 0 && took < 10.0;
        details.push(format!("eps {eps}: {uncovered} uncovered, net {} <= bound {}, {took:.2}s", largest.0, largest.1));
    }
    check(ok, details.join("; "))
}

fn sigma_hat_sandwich() -> Outcome {
    let eps = 0.5;
    let lower = ONE_MINUS_INV_E - eps;
    let mut violations = 0;
    let mut checked = 0;
    for seed in 0..20u64 {
        let inst = gen_rank_r(3, 4, 1 + seed as usize % 2, 0.6, seed as usize % 7, seed).map_err(|e| e.to_string())?;
        let basis = numerical_rank(&inst.bipartite, DEFAULT_RANK_TOL);
        let net = build_net(&inst.bipartite, &basis, inst.bit_precision, eps, &NetOptions::default())
            .map_err(|e| e.to_string())?;
        for x in subsets(3) {
            let v = LinearImagePoint::image_of(&IndicatorVector::from_indices(3, &x), &inst.bipartite).unwrap();
            let Some(idx) = net.find_covering(&v.coords, inst.min_entry()) else {
                return Err(format!("seed {seed}: x {x:?} has no covering point"));
            };
            let s = net.point(idx).coords;
            for y in subsets(4) {
                let sigma = exact_sigma(&inst, &x, &y).map_err(|e| e.to_string())?;
                let hat = exact_sigma_hat(&inst, &s, &y).map_err(|e| e.to_string())?;
                checked += 1;
                if hat > sigma + 1e-12 || lower * sigma > hat + 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    check(violations == 0, format!("{violations} violations over {checked} (x, y) pairs"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut agree = 0;
    for _ in 0..50 {
        let inst = tiny_instance(3, 4, 8, &mut rng);
        let x = random_mask(&mut rng, 3).indices();
        let y = random_mask(&mut rng, 4).indices();
        let exact = exact_sigma(&inst, &x, &y).map_err(|e| e.to_string())?;
        let est = estimate_sigma(&inst, &x, &y, 20_000, &mut rng);
        let within = if est.std_error == 0.0 {
            (est.mean - exact).abs() < 1e-12
        } else {
            (est.mean - exact).abs() <= 3.0 * est.std_error
        };
        agree += within as usize;
    }
    check(agree >= 47, format!("{agree}/50 within 3 standard errors"))
}

fn exhaustive_submodularity() -> Outcome {
    let mut violations = 0;
    let mut instances = 0;
    let mut inequalities = 0u64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        for n in 1..=3 {
            for m in 1..=4 {
                let inst = tiny_instance(n, m, 8, &mut rng);
                instances += 1;
                let xs = subsets(n);
                let ys = subsets(m);
                let mut table = vec![0.0; xs.len() * ys.len()];
                for (xi, x) in xs.iter().enumerate() {
                    for (yi, y) in ys.iter().enumerate() {
                        table[xi * ys.len() + yi] = exact_sigma(&inst, x, y).map_err(|e| e.to_string())?;
                    }
                }
                let value = |xm: usize, ym: usize| table[xm * ys.len() + ym];
                // masks index `subsets` directly
                for fixed in 0..ys.len() {
                    let (v, c) = lattice_violations(n, |a| value(a, fixed));
                    violations += v;
                    inequalities += c;
                }
                for fixed in 0..xs.len() {
                    let (v, c) = lattice_violations(m, |b| value(fixed, b));
                    violations += v;
                    inequalities += c;
                }
                for _ in 0..8 {
                    let z: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
                    let alpha = rng.gen::<f64>();
                    let scaled: Vec<f64> = z.iter().map(|v| alpha * v).collect();
                    let lhs = exact_rho_bar(&inst, &scaled).map_err(|e| e.to_string())?;
                    let rhs = alpha * exact_rho_bar(&inst, &z).map_err(|e| e.to_string())?;
                    inequalities += 1;
                    if lhs < rhs - 1e-12 {
                        violations += 1;
                    }
                }
            }
        }
    }
    check(violations == 0, format!("{violations} violations over {inequalities} inequalities on {instances} instances"))
}

/// Monotonicity and diminishing-returns violations of a set function on `0..len` given by
/// bitmask, at slack `1e-12`.
fn lattice_violations(len: usize, f: impl Fn(usize) -> f64) -> (u64, u64) {
    let (mut bad, mut count) = (0, 0);
    let full = 1usize << len;
    for a in 0..full {
        for e in (0..len).filter(|e| a >> e & 1 == 0) {
            let gain_a = f(a | 1 << e) - f(a);
            count += 1;
            if gain_a < -1e-12 {
                bad += 1;
            }
            // every superset b of a not containing e
            let free = (full - 1) & !a & !(1 << e);
            let mut extra = free;
            loop {
                let b = a | extra;
                count += 1;
                if gain_a < f(b | 1 << e) - f(b) - 1e-12 {
                    bad += 1;
                }
                if extra == 0 {
                    break;
                }
                extra = (extra - 1) & free;
            }
        }
    }
    (bad, count)
}

fn end_to_end() -> Outcome {
    let eps = 0.3;
    let ratio = approximation_ratio(eps).map_err(|e| e.to_string())?;
    let mut failures = Vec::new();
    let mut ratios = Vec::new();
    for seed in 0..30u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let (n, m) = (rng.gen_range(3..=4), rng.gen_range(4..=5));
        let r = rng.gen_range(1..=2);
        let edges = rng.gen_range(0..=8);
        let inst = gen_rank_r(n, m, r, 0.6, edges, 700 + seed).map_err(|e| e.to_string())?;
        let config = SdgConfig { epsilon: eps, delta: 0.01, master_seed: seed, ..SdgConfig::default() };
        let (sol, _) = solve(&inst, &config).map_err(|e| e.to_string())?;
        let got = exact_sigma(&inst, &sol.providers, &sol.consumers).map_err(|e| e.to_string())?;
        let opt = brute_force_opt(&inst).map_err(|e| e.to_string())?;
        if got < ratio * opt.value {
            failures.push(seed);
        }
        ratios.push(if opt.value > 0.0 { got / opt.value } else { 1.0 });
    }
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    check(
        failures.len() <= 1,
        format!(
            "{} of 30 below {ratio:.6} x OPT (seeds {failures:?}); empirical ratio min {min:.4}, mean {mean:.4}",
            failures.len()
        ),
    )
}

/// Non-lazy greedy on the classic IC spread, ties to the lowest index.
fn plain_greedy_im(inst: &AimInstance, stream: StreamId, samples: usize, budget: usize) -> Vec<usize> {
    let graph = SocialGraph::from_instance(inst);
    let mut est = ScenarioEstimator::new(inst, &graph, stream, samples);
    let mut chosen: Vec<usize> = Vec::new();
    for _ in 0..budget {
        let mut best: Option<(f64, usize)> = None;
        for v in (0..inst.n_consumers).filter(|v| !chosen.contains(v)) {
            let mut with = chosen.clone();
            with.push(v);
            let value = est.spread_from(&with).mean;
            if best.is_none_or(|(b, _)| value > b) {
                best = Some((value, v));
            }
        }
        chosen.push(best.expect("budget within ground set").1);
    }
    chosen.sort_unstable();
    chosen
}

fn classic_im() -> Outcome {
    let mut mismatches = Vec::new();
    let mut sizes = Vec::new();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + seed);
        let m = rng.gen_range(10..=30);
        let edges = random_social_graph(m, 2 * m, 900 + seed).map_err(|e| e.to_string())?;
        let inst = gen_classic_im(edges, m, 3).map_err(|e| e.to_string())?;
        let config = SdgConfig { epsilon: 0.5, master_seed: seed, ..SdgConfig::default() };
        let (sol, report) = solve(&inst, &config).map_err(|e| e.to_string())?;
        let reference = plain_greedy_im(&inst, StreamId::new(seed, STREAM_CONSUMERS), report.samples_per_eval, 3);
        if sol.consumers != reference {
            mismatches.push((seed, sol.consumers.clone(), reference));
        }
        sizes.push(m);
    }
    check(
        mismatches.is_empty(),
        format!("{} of 10 graphs differ {mismatches:?}; consumer counts {sizes:?}", mismatches.len()),
    )
}

fn planted_value() -> Outcome {
    let (n, k) = (40usize, 12usize);
    let planted = gen_planted_biclique(n, k, 42).map_err(|e| e.to_string())?;
    let (x, y) = planted.planted_split();
    let exact = exact_sigma(&planted.instance, &x, &y).map_err(|e| e.to_string())?;
    let q = 1.0 / (n * n) as f64;
    let closed = (k / 2) as f64 * (1.0 - (1.0 - q).powi((k / 2) as i32));
    let target = (k * k) as f64 / (4 * n * n) as f64;
    let rel = (closed - target).abs() / target;
    check(
        (exact - closed).abs() <= 1e-12 && rel <= 0.01,
        format!("exact {exact:.12}, closed form {closed:.12}, k^2/(4n^2) {target}, relative gap {rel:.4}"),
    )
}

fn scaling() -> Outcome {
    let mut ok = true;
    let mut fits = 0;
    let mut cells = 0;
    for (m, r) in [(4, 1), (6, 1), (6, 2), (8, 2), (5, 3)] {
        for eps in [1.0, 0.5, 0.25] {
            let inst = gen_rank_r(6, m, r, 0.6, 0, 1000 + m as u64).map_err(|e| e.to_string())?;
            let basis = numerical_rank(&inst.bipartite, DEFAULT_RANK_TOL);
            let net = build_net(&inst.bipartite, &basis, inst.bit_precision, eps, &NetOptions::default())
                .map_err(|e| e.to_string())?;
            let grid = Grid::build(inst.bit_precision, (1.0 + eps).sqrt() - 1.0, 6).map_err(|e| e.to_string())?;
            let bound = size_bound(m, r, grid.len());
            cells += 1;
            if net.len() as u128 <= bound && bound == net.size_bound() {
                fits += 1;
            } else {
                ok = false;
            }
        }
    }

    let inst = gen_rank_r(6, 8, 2, 0.6, 12, 77).map_err(|e| e.to_string())?;
    let epsilons = [1.0, 0.7, 0.5, 0.35, 0.25];
    let mut times = Vec::new();
    for &eps in &epsilons {
        let config = SdgConfig { epsilon: eps, master_seed: 1, ..SdgConfig::default() };
        let mut best = f64::INFINITY;
        let mut size = 0;
        for _ in 0..3 {
            let start = Instant::now();
            let (_, report) = solve(&inst, &config).map_err(|e| e.to_string())?;
            best = best.min(start.elapsed().as_secs_f64());
            size = report.net_size;
        }
        times.push((best, size));
    }
    // least-squares slope of log time against log(1/eps)
    let xs: Vec<f64> = epsilons.iter().map(|e| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.0.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 5.0, ys.iter().sum::<f64>() / 5.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    ok &= slope <= 3.0;
    let table: Vec<String> =
        epsilons.iter().zip(&times).map(|(e, (t, s))| format!("eps {e}: {s} pts {:.3}s", t)).collect();
    check(
        ok,
        format!(
            "{fits}/{cells} net sizes within C(m,r)|Grid|^r; time exponent in 1/eps {slope:.2}; {}",
            table.join(", ")
        ),
    )
}

struct Scratch(PathBuf);

impl Scratch {
    fn new() -> Scratch {
        let dir = std::env::temp_dir().join(format!("amphimax-acceptance-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

/// Runs the CLI in a fresh directory and returns stdout plus every file it wrote, by name.
fn run_cli(root: &Path, tag: &str, fixture: &Path, args: &[&str]) -> Result<Vec<(String, Vec<u8>)>, String> {
    let dir = root.join(tag);
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    std::fs::copy(fixture, dir.join("instance.json")).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_amphimax"))
        .args(args)
        .current_dir(&dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    let mut files = vec![("<stdout>".to_string(), out.stdout)];
    let mut entries: Vec<_> = std::fs::read_dir(&dir).map_err(|e| e.to_string())?.flatten().collect();
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        files.push((entry.file_name().to_string_lossy().into_owned(), std::fs::read(entry.path()).unwrap()));
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let scratch = Scratch::new();
    let fixture = scratch.0.join("fixture.json");
    let inst = gen_rank_r(4, 5, 2, 0.6, 6, 5).map_err(|e| e.to_string())?;
    std::fs::write(&fixture, serialize_instance(&inst)).map_err(|e| e.to_string())?;
    let commands: Vec<Vec<&str>> = vec![
        vec!["solve", "--instance", "instance.json", "--epsilon", "0.5", "--seed", "3", "--report", "report.json"],
        vec!["solve", "--instance", "instance.json", "--epsilon", "0.5", "--seed", "3", "--out", "result.json"],
        vec!["simulate", "--instance", "instance.json", "--x", "0,1", "--y", "2,3", "--samples", "5000", "--seed", "9"],
        vec!["exact", "--instance", "instance.json", "--x", "0,1", "--y", "2,3", "--out", "exact.json"],
        vec!["net", "--instance", "instance.json", "--epsilon", "1.0", "--out", "net.json"],
        vec!["gen", "--family", "rank_r", "--params", "n=5,m=6,r=2", "--seed", "4", "--out", "gen.json"],
        vec!["gen", "--family", "planted", "--params", "n_vertices=12,k=4", "--seed", "4", "--out", "gen.json"],
        vec!["gen", "--family", "classic_im", "--params", "m=12,social_edges=20,b2=2", "--seed", "4"],
        vec!["gen", "--family", "three_layer", "--params", "k=3,strings=2", "--seed", "4", "--out", "gen.json"],
        vec!["ratio", "--epsilon", "0.1"],
        vec!["--threads", "1", "solve", "--instance", "instance.json", "--epsilon", "0.5", "--seed", "3"],
    ];
    let mut differing = Vec::new();
    let mut compared = 0;
    for (i, args) in commands.iter().enumerate() {
        let first = run_cli(&scratch.0, &format!("{i}a"), &fixture, args)?;
        let second = run_cli(&scratch.0, &format!("{i}b"), &fixture, args)?;
        compared += first.len();
        if first != second {
            differing.push(args.join(" "));
        }
    }
    check(
        differing.is_empty(),
        format!("{} commands, {compared} outputs compared, differing: {differing:?}", commands.len()),
    )
}

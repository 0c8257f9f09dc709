//! Seeded instance generators.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{AimInstance, Matrix, SocialEdge};

/// Provider count of [`gen_classic_im`]. With all-ones rows and `b1 = |U|`, every seed
/// consumer's relaxed activation `1 - exp(-64)` rounds to exactly 1.
pub const CLASSIC_IM_PROVIDERS: usize = 64;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smallest `lambda >= 1` with `2^-lambda <= min_positive`.
fn bits_for(min_positive: f64) -> u32 {
    ((-min_positive.log2()).ceil() as i64).max(1) as u32
}

/// `count` distinct directed non-loop edges on `m` nodes, probabilities uniform in `(0, 0.5]`,
/// sorted by `(source, target)`.
pub fn random_social_graph(m: usize, count: usize, seed: u64) -> Result<Vec<SocialEdge>> {
    let slots = m * m.saturating_sub(1);
    if count > slots {
        return Err(Error::InvalidParameter(format!(
            "{count} social edges requested but a simple digraph on {m} nodes has at most {slots}"
        )));
    }
    let mut rng = rng(seed);
    let mut picked = sample(&mut rng, slots, count).into_vec();
    picked.sort_unstable();
    Ok(picked
        .into_iter()
        .map(|slot| {
            let source = slot / (m - 1);
            let offset = slot % (m - 1);
            let target = if offset >= source { offset + 1 } else { offset };
            SocialEdge { source, target, prob: 0.5 * (1.0 - rng.gen::<f64>()) }
        })
        .collect())
}

/// `M = edge_prob * (A B) / r` with `A` (`n x r`) and `B` (`r x m`) uniform in `[0.1, 1]`, so
/// every entry lies in `(0, edge_prob]` and the rank is `r` almost surely. Budgets default
/// to half of each side, at least one.
pub fn gen_rank_r(
    n: usize,
    m: usize,
    r: usize,
    edge_prob: f64,
    social_edge_count: usize,
    seed: u64,
) -> Result<AimInstance> {
    if r == 0 || r > n.min(m) {
        return Err(Error::InvalidParameter(format!("rank {r} must lie in 1..=min(n, m) = {}", n.min(m))));
    }
    if !(edge_prob > 0.0 && edge_prob <= 1.0) {
        return Err(Error::InvalidParameter(format!("edge_prob must lie in (0,1], got {edge_prob}")));
    }
    let mut rng = rng(seed);
    let mut factor = |rows: usize, cols: usize| {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(0.1..=1.0)).collect())
    };
    let a = factor(n, r)?;
    let b = factor(r, m)?;
    let mut data = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let dot: f64 = (0..r).map(|k| a.get(i, k) * b.get(k, j)).sum();
            data.push(edge_prob * dot / r as f64);
        }
    }
    let min_positive = data.iter().copied().fold(f64::INFINITY, f64::min);
    let social_edges = random_social_graph(m, social_edge_count, seed ^ 0x5eed_50c1)?;
    AimInstance {
        n_providers: n,
        n_consumers: m,
        bipartite: Matrix::from_vec(n, m, data)?,
        social_edges,
        budget_providers: (n / 2).max(1),
        budget_consumers: (m / 2).max(1),
        bit_precision: bits_for(min_positive),
    }
    .checked()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedInstance {
    pub instance: AimInstance,
    /// Clique vertices in ascending order.
    pub planted: Vec<usize>,
}

impl PlantedInstance {
    /// The clique split in half: lower vertices as providers, upper as consumers.
    pub fn planted_split(&self) -> (Vec<usize>, Vec<usize>) {
        let half = self.planted.len() / 2;
        (self.planted[..half].to_vec(), self.planted[half..].to_vec())
    }
}

/// `G(n, 1/2)` with a planted `k`-clique; providers and consumers are both the vertex set and
/// `M_uv = 1/n^2` exactly on graph edges. No social edges; budgets `k/2`.
pub fn gen_planted_biclique(n_vertices: usize, k: usize, seed: u64) -> Result<PlantedInstance> {
    if k == 0 || !k.is_multiple_of(2) || k > n_vertices {
        return Err(Error::InvalidParameter(format!(
            "clique size must be even, positive and at most {n_vertices}, got {k}"
        )));
    }
    let n = n_vertices;
    let mut rng = rng(seed);
    let mut adjacent = vec![false; n * n];
    for u in 0..n {
        for v in u + 1..n {
            let edge = rng.gen_bool(0.5);
            adjacent[u * n + v] = edge;
            adjacent[v * n + u] = edge;
        }
    }
    let mut planted = sample(&mut rng, n, k).into_vec();
    planted.sort_unstable();
    for &u in &planted {
        for &v in &planted {
            if u != v {
                adjacent[u * n + v] = true;
            }
        }
    }
    let weight = 1.0 / (n * n) as f64;
    let data = adjacent.iter().map(|&e| if e { weight } else { 0.0 }).collect();
    let instance = AimInstance {
        n_providers: n,
        n_consumers: n,
        bipartite: Matrix::from_vec(n, n, data)?,
        social_edges: Vec::new(),
        budget_providers: k / 2,
        budget_consumers: k / 2,
        bit_precision: bits_for(weight),
    }
    .checked()?;
    Ok(PlantedInstance { instance, planted })
}

/// Classic influence maximization embedded as AIM: [`CLASSIC_IM_PROVIDERS`] providers with
/// all-ones rows and `b1 = |U|`, so `sigma(U, Y)` is the IC spread of `Y`.
pub fn gen_classic_im(social_edges: Vec<SocialEdge>, m: usize, b2: usize) -> Result<AimInstance> {
    AimInstance {
        n_providers: CLASSIC_IM_PROVIDERS,
        n_consumers: m,
        bipartite: Matrix::filled(CLASSIC_IM_PROVIDERS, m, 1.0),
        social_edges,
        budget_providers: CLASSIC_IM_PROVIDERS,
        budget_consumers: b2,
        bit_precision: 1,
    }
    .checked()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeLayerParams {
    /// Provers per string; every provider edge has probability `1/k`.
    pub k: usize,
    /// Number of strings (groups).
    pub strings: usize,
    /// Middle nodes per string.
    pub assignments: usize,
    /// Bottom nodes per string.
    pub eta: usize,
}

impl ThreeLayerParams {
    /// Consumer index of middle node `(string, assignment)`.
    pub fn middle(&self, string: usize, assignment: usize) -> usize {
        string * self.assignments + assignment
    }

    /// Consumer index of bottom node `(string, e)`.
    pub fn bottom(&self, string: usize, e: usize) -> usize {
        self.strings * self.assignments + string * self.eta + e
    }

    /// Provider index of `(string, prover, assignment)`.
    pub fn provider(&self, string: usize, prover: usize, assignment: usize) -> usize {
        (string * self.k + prover) * self.assignments + assignment
    }
}

/// Three-layer miniature: provider `(r, i, a)` reaches middle node `(r, pi_{r,i}(a))` with
/// probability `1/k` for a seeded permutation `pi_{r,i}`; every middle node of string `r`
/// activates all `eta` bottom nodes of `r` with probability 1. Budgets `b1 = k * strings`,
/// `b2 = strings`.
pub fn gen_three_layer(params: ThreeLayerParams, seed: u64) -> Result<AimInstance> {
    let ThreeLayerParams { k, strings, assignments, eta } = params;
    if k == 0 || strings == 0 || assignments == 0 {
        return Err(Error::InvalidParameter("k, strings and assignments must be positive".into()));
    }
    let n = strings * k * assignments;
    let m = strings * (assignments + eta);
    let mut rng = rng(seed);
    let mut bipartite = Matrix::zeros(n, m);
    let weight = 1.0 / k as f64;
    for r in 0..strings {
        for i in 0..k {
            let mut perm: Vec<usize> = (0..assignments).collect();
            perm.shuffle(&mut rng);
            for (a, &target) in perm.iter().enumerate() {
                bipartite.set(params.provider(r, i, a), params.middle(r, target), weight);
            }
        }
    }
    let mut social_edges = Vec::with_capacity(strings * assignments * eta);
    for r in 0..strings {
        for a in 0..assignments {
            for e in 0..eta {
                social_edges.push(SocialEdge { source: params.middle(r, a), target: params.bottom(r, e), prob: 1.0 });
            }
        }
    }
    AimInstance {
        n_providers: n,
        n_consumers: m,
        bipartite,
        social_edges,
        budget_providers: k * strings,
        budget_consumers: strings,
        bit_precision: bits_for(weight),
    }
    .checked()
}

/// A generator family with its size parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GeneratorSpec {
    RankR { n: usize, m: usize, r: usize, edge_prob: f64, social_edges: usize },
    Planted { n_vertices: usize, k: usize },
    ClassicIm { m: usize, social_edges: usize, b2: usize },
    ThreeLayer(ThreeLayerParams),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub instance: AimInstance,
    pub planted: Option<Vec<usize>>,
}

impl GeneratorSpec {
    /// Builds a spec from a family name (`rank_r`, `planted`, `classic_im`, `three_layer`)
    /// and `key=value` parameters; unset keys take small defaults.
    pub fn from_params(family: &str, params: &BTreeMap<String, String>) -> Result<GeneratorSpec> {
        let known: &[&str] = match family {
            "rank_r" => &["n", "m", "r", "edge_prob", "social_edges"],
            "planted" => &["n_vertices", "k"],
            "classic_im" => &["m", "social_edges", "b2"],
            "three_layer" => &["k", "strings", "assignments", "eta"],
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown family {other:?}; expected rank_r, planted, classic_im or three_layer"
                )))
            }
        };
        if let Some(bad) = params.keys().find(|key| !known.contains(&key.as_str())) {
            return Err(Error::InvalidParameter(format!(
                "unknown parameter {bad:?} for {family}; expected one of {}",
                known.join(", ")
            )));
        }
        fn get<T: std::str::FromStr>(params: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
            params.get(key).map_or(Ok(default), |v| {
                v.parse().map_err(|_| Error::InvalidParameter(format!("cannot parse {key}={v}")))
            })
        }
        Ok(match family {
            "rank_r" => GeneratorSpec::RankR {
                n: get(params, "n", 6)?,
                m: get(params, "m", 8)?,
                r: get(params, "r", 2)?,
                edge_prob: get(params, "edge_prob", 0.5)?,
                social_edges: get(params, "social_edges", 10)?,
            },
            "planted" => {
                GeneratorSpec::Planted { n_vertices: get(params, "n_vertices", 40)?, k: get(params, "k", 12)? }
            }
            "classic_im" => GeneratorSpec::ClassicIm {
                m: get(params, "m", 20)?,
                social_edges: get(params, "social_edges", 40)?,
                b2: get(params, "b2", 3)?,
            },
            _ => GeneratorSpec::ThreeLayer(ThreeLayerParams {
                k: get(params, "k", 2)?,
                strings: get(params, "strings", 2)?,
                assignments: get(params, "assignments", 2)?,
                eta: get(params, "eta", 3)?,
            }),
        })
    }

    pub fn generate(&self, seed: u64) -> Result<Generated> {
        let plain = |instance| Generated { instance, planted: None };
        Ok(match *self {
            GeneratorSpec::RankR { n, m, r, edge_prob, social_edges } => {
                plain(gen_rank_r(n, m, r, edge_prob, social_edges, seed)?)
            }
            GeneratorSpec::Planted { n_vertices, k } => {
                let p = gen_planted_biclique(n_vertices, k, seed)?;
                Generated { instance: p.instance, planted: Some(p.planted) }
            }
            GeneratorSpec::ClassicIm { m, social_edges, b2 } => {
                plain(gen_classic_im(random_social_graph(m, social_edges, seed)?, m, b2)?)
            }
            GeneratorSpec::ThreeLayer(params) => plain(gen_three_layer(params, seed)?),
        })
    }
}

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;

use super::{KnnGraph, Layout2D, LayoutError, LayoutMethod};

/// Keeps the repulsive term finite when two points coincide.
const REPULSION_EPS: f64 = 0.1;
const GRAD_CLIP: f64 = 5.0;
const NEGATIVE_ATTEMPTS: usize = 10;
const EXACT_OBJECTIVE_MAX_N: usize = 2000;
const TRACE_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct LargeVisConfig {
    /// Negative samples per positive edge sample.
    pub negatives: usize,
    /// Weight of the repulsive term.
    pub gamma: f64,
    /// Initial learning rate; decays linearly to zero.
    pub rho0: f64,
    /// Total edge samples. `None` means `200 · n · k`.
    pub n_updates: Option<u64>,
    /// Lock-free multi-threaded updates. Not reproducible.
    pub asynchronous: bool,
    /// Record the objective at evenly spaced checkpoints.
    pub trace: bool,
}

impl Default for LargeVisConfig {
    fn default() -> Self {
        LargeVisConfig {
            negatives: 5,
            gamma: 7.0,
            rho0: 1.0,
            n_updates: None,
            asynchronous: false,
            trace: false,
        }
    }
}

impl LargeVisConfig {
    pub fn updates_for(&self, graph: &KnnGraph) -> u64 {
        self.n_updates
            .unwrap_or(200 * graph.n() as u64 * graph.k().max(1) as u64)
    }

    fn validate(&self) -> Result<(), LayoutError> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(LayoutError::Contract(format!("gamma = {}", self.gamma)));
        }
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return Err(LayoutError::Contract(format!("rho0 = {}", self.rho0)));
        }
        if self.n_updates == Some(0) {
            return Err(LayoutError::Contract("n_updates = 0".into()));
        }
        Ok(())
    }
}

fn clip(v: f64) -> f64 {
    v.clamp(-GRAD_CLIP, GRAD_CLIP)
}

/// Gradient of `log f(d)` with respect to `a`.
fn attraction(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let c = -2.0 / (1.0 + dx * dx + dy * dy);
    [clip(c * dx), clip(c * dy)]
}

/// Gradient of `γ log(1 - f(d))` with respect to `a`, softened by `REPULSION_EPS`.
fn repulsion(a: [f64; 2], b: [f64; 2], gamma: f64) -> [f64; 2] {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let d2 = dx * dx + dy * dy;
    let c = 2.0 * gamma * (1.0 - REPULSION_EPS) / ((d2 + REPULSION_EPS) * (1.0 + d2));
    [clip(c * dx), clip(c * dy)]
}

fn init_uniform(n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)])
        .collect()
}

struct Sampler<'a> {
    graph: &'a KnnGraph,
    alias: WeightedAliasIndex<f64>,
    config: &'a LargeVisConfig,
    total: u64,
}

impl Sampler<'_> {
    fn learning_rate(&self, t: u64) -> f64 {
        let frac = 1.0 - t as f64 / self.total as f64;
        self.config.rho0 * frac.max(1e-4)
    }

    fn draw_edge(&self, rng: &mut ChaCha8Rng) -> (usize, usize) {
        let (a, b, _) = self.graph.edges()[self.alias.sample(rng)];
        if rng.random_bool(0.5) {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn draw_negative(&self, i: usize, j: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
        let n = self.graph.n();
        (0..NEGATIVE_ATTEMPTS)
            .map(|_| rng.random_range(0..n))
            .find(|&k| k != i && k != j && !self.graph.adjacent(i, k))
    }
}

/// Optimises a 2D layout of `graph` by edge sampling with negative sampling.
pub fn fit_largevis(graph: &KnnGraph, seed: u64, config: &LargeVisConfig) -> Result<Layout2D, LayoutError> {
    config.validate()?;
    let n = graph.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = init_uniform(n, &mut rng);
    let mut trace = Vec::new();

    if !graph.edges().is_empty() {
        let weights: Vec<f64> = graph.edges().iter().map(|e| e.2).collect();
        let alias = WeightedAliasIndex::new(weights)
            .map_err(|e| LayoutError::Contract(format!("edge weights: {e}")))?;
        let sampler = Sampler {
            graph,
            alias,
            config,
            total: config.updates_for(graph),
        };
        if config.asynchronous {
            y = run_async(&sampler, y, seed)?;
        } else {
            run_serial(&sampler, &mut y, &mut rng, &mut trace)?;
        }
    }

    let final_objective = largevis_objective(graph, &y, config);
    if config.trace {
        trace.push((config.updates_for(graph) as usize, final_objective));
    }
    Ok(Layout2D {
        coordinates: y,
        seed,
        method: LayoutMethod::Largevis,
        final_objective,
        objective_trace: trace,
    })
}

fn run_serial(
    s: &Sampler<'_>,
    y: &mut [[f64; 2]],
    rng: &mut ChaCha8Rng,
    trace: &mut Vec<(usize, f64)>,
) -> Result<(), LayoutError> {
    let every = (s.total / TRACE_POINTS as u64).max(1);
    for t in 0..s.total {
        if s.config.trace && t % every == 0 {
            trace.push((t as usize, largevis_objective(s.graph, y, s.config)));
        }
        let rho = s.learning_rate(t);
        let (i, j) = s.draw_edge(rng);
        let g = attraction(y[i], y[j]);
        let mut acc = g;
        y[j][0] -= rho * g[0];
        y[j][1] -= rho * g[1];
        for _ in 0..s.config.negatives {
            let Some(k) = s.draw_negative(i, j, rng) else {
                continue;
            };
            let g = repulsion(y[i], y[k], s.config.gamma);
            acc[0] += g[0];
            acc[1] += g[1];
            y[k][0] -= rho * g[0];
            y[k][1] -= rho * g[1];
        }
        y[i][0] += rho * acc[0];
        y[i][1] += rho * acc[1];
        if !(y[i][0].is_finite() && y[i][1].is_finite()) {
            return Err(LayoutError::NonFinite { iteration: t as usize, node: i });
        }
    }
    Ok(())
}

fn run_async(s: &Sampler<'_>, y: Vec<[f64; 2]>, seed: u64) -> Result<Vec<[f64; 2]>, LayoutError> {
    let shared: Vec<AtomicU64> = y
        .iter()
        .flat_map(|p| [AtomicU64::new(p[0].to_bits()), AtomicU64::new(p[1].to_bits())])
        .collect();
    let load = |i: usize| {
        [
            f64::from_bits(shared[2 * i].load(Ordering::Relaxed)),
            f64::from_bits(shared[2 * i + 1].load(Ordering::Relaxed)),
        ]
    };
    let store = |i: usize, p: [f64; 2]| {
        shared[2 * i].store(p[0].to_bits(), Ordering::Relaxed);
        shared[2 * i + 1].store(p[1].to_bits(), Ordering::Relaxed);
    };
    let threads = rayon::current_num_threads().max(1) as u64;
    let chunk = s.total.div_ceil(threads);
    (0..threads).into_par_iter().try_for_each(|w| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (w + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let start = w * chunk;
        for t in start..(start + chunk).min(s.total) {
            let rho = s.learning_rate(((t - start) * threads + w).min(s.total - 1));
            let (i, j) = s.draw_edge(&mut rng);
            let yi = load(i);
            let yj = load(j);
            let g = attraction(yi, yj);
            let mut acc = g;
            store(j, [yj[0] - rho * g[0], yj[1] - rho * g[1]]);
            for _ in 0..s.config.negatives {
                let Some(k) = s.draw_negative(i, j, &mut rng) else {
                    continue;
                };
                let yk = load(k);
                let g = repulsion(yi, yk, s.config.gamma);
                acc[0] += g[0];
                acc[1] += g[1];
                store(k, [yk[0] - rho * g[0], yk[1] - rho * g[1]]);
            }
            let yi = load(i);
            let next = [yi[0] + rho * acc[0], yi[1] + rho * acc[1]];
            if !(next[0].is_finite() && next[1].is_finite()) {
                return Err(LayoutError::NonFinite { iteration: t as usize, node: i });
            }
            store(i, next);
        }
        Ok(())
    })?;
    Ok((0..y.len()).map(load).collect())
}

/// Expected per-sample objective that the SGD ascends:
/// `Σ_E (w_ij / W) log f(d_ij) + γ·M·mean_{non-edges} log(1 - f(d))`,
/// with the same softening as the update rule. Non-edge pairs are
/// enumerated exactly for small `n` and sampled on a fixed stride otherwise.
pub fn largevis_objective(graph: &KnnGraph, y: &[[f64; 2]], config: &LargeVisConfig) -> f64 {
    let d2 = |a: usize, b: usize| {
        let dx = y[a][0] - y[b][0];
        let dy = y[a][1] - y[b][1];
        dx * dx + dy * dy
    };
    let total_w: f64 = graph.edges().iter().map(|e| e.2).sum();
    let attract: f64 = if total_w > 0.0 {
        graph
            .edges()
            .iter()
            .map(|&(i, j, w)| -w * (1.0 + d2(i, j)).ln())
            .sum::<f64>()
            / total_w
    } else {
        0.0
    };
    let n = graph.n();
    let soft = |d: f64| ((d + REPULSION_EPS) / (1.0 + d)).ln();
    let (sum, count) = if n <= EXACT_OBJECTIVE_MAX_N {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                let mut c = 0usize;
                for j in i + 1..n {
                    if !graph.adjacent(i, j) {
                        s += soft(d2(i, j));
                        c += 1;
                    }
                }
                (s, c)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1))
    } else {
        let mut s = 0.0;
        let mut c = 0usize;
        for offset in [1usize, 7, 31, 127, 511] {
            for i in 0..n {
                let j = (i + offset) % n;
                if i != j && !graph.adjacent(i, j) {
                    s += soft(d2(i, j));
                    c += 1;
                }
            }
        }
        (s, c)
    };
    let repel = if count > 0 { sum / count as f64 } else { 0.0 };
    attract + config.gamma * config.negatives as f64 * repel
}

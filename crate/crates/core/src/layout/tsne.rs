use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{conditional_probabilities, kernel, sq_dist, Layout2D, LayoutError, LayoutMethod};
use crate::embedding::EmbeddingMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub iterations: usize,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub learning_rate: f64,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    /// Largest `n` accepted by the O(n²) solver.
    pub max_n: usize,
    /// Evaluate KL every this many iterations into the trace (0 = never).
    pub trace_every: usize,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            iterations: 1000,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            learning_rate: 200.0,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            max_n: 5000,
            trace_every: 50,
        }
    }
}

/// Dense symmetric joint probabilities `p_ij`, zero diagonal, summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct JointProbabilities {
    n: usize,
    values: Vec<f64>,
}

impl JointProbabilities {
    /// Wraps an explicit matrix; rows are `n` entries each.
    pub fn from_dense(n: usize, values: Vec<f64>) -> Result<Self, LayoutError> {
        if values.len() != n * n {
            return Err(LayoutError::Contract(format!("{} values for n = {n}", values.len())));
        }
        Ok(JointProbabilities { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// Conditional rows over all other points, symmetrised as
/// `p_ij = (p_{j|i} + p_{i|j}) / 2n`. Also returns each conditional row's sum.
pub fn joint_probabilities(
    matrix: &EmbeddingMatrix,
    perplexity: f64,
) -> Result<(JointProbabilities, Vec<f64>), LayoutError> {
    let n = matrix.n();
    if n < 3 {
        return Err(LayoutError::Contract(format!("need at least 3 rows, got {n}")));
    }
    if !(perplexity > 1.0) || perplexity >= (n - 1) as f64 {
        return Err(LayoutError::Contract(format!(
            "perplexity {perplexity} must lie in (1, n - 1 = {})",
            n - 1
        )));
    }
    let rows = matrix.normalized_rows();
    let cond: Vec<Result<Vec<f64>, LayoutError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let dist: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| sq_dist(&rows[i], &rows[j]).sqrt())
                .collect();
            let (p, _) = conditional_probabilities(&dist, perplexity)?;
            let mut full = Vec::with_capacity(n);
            full.extend_from_slice(&p[..i]);
            full.push(0.0);
            full.extend_from_slice(&p[i..]);
            Ok(full)
        })
        .collect();
    let cond = cond.into_iter().collect::<Result<Vec<_>, _>>()?;
    let sums = cond.iter().map(|r| r.iter().sum()).collect();
    let scale = 0.5 / n as f64;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = (cond[i][j] + cond[j][i]) * scale;
        }
    }
    Ok((JointProbabilities { n, values }, sums))
}

fn pair_kernel(y: &[[f64; 2]], i: usize, j: usize) -> f64 {
    let dx = y[i][0] - y[j][0];
    let dy = y[i][1] - y[j][1];
    kernel((dx * dx + dy * dy).sqrt())
}

/// Normaliser `Z = Σ_{i≠j} f(d_ij)`, summed row by row in index order.
fn normaliser(y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).filter(|&j| j != i).map(|j| pair_kernel(y, i, j)).sum())
        .collect();
    rows.iter().sum()
}

/// `KL(P‖Q)` with `q_ij = f(d_ij) / Z`.
pub fn kl_divergence(p: &JointProbabilities, y: &[[f64; 2]]) -> f64 {
    let n = p.n();
    let z = normaliser(y);
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && p.get(i, j) > 0.0)
                .map(|j| {
                    let pij = p.get(i, j);
                    pij * (pij / (pair_kernel(y, i, j) / z)).ln()
                })
                .sum()
        })
        .collect();
    rows.iter().sum()
}

/// `∂KL/∂y_i = 4 Σ_j (α p_ij − q_ij) f(d_ij) (y_i − y_j)`, with `α` the
/// exaggeration factor (1 for the true gradient).
pub fn tsne_gradient(p: &JointProbabilities, y: &[[f64; 2]], exaggeration: f64) -> Vec<[f64; 2]> {
    let n = p.n();
    let z = normaliser(y);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = [0.0; 2];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let f = pair_kernel(y, i, j);
                let c = 4.0 * (exaggeration * p.get(i, j) - f / z) * f;
                g[0] += c * (y[i][0] - y[j][0]);
                g[1] += c * (y[i][1] - y[j][1]);
            }
            g
        })
        .collect()
}

/// Exact O(n²) t-SNE by momentum gradient descent.
pub fn fit_tsne_exact(
    matrix: &EmbeddingMatrix,
    perplexity: f64,
    seed: u64,
    config: &TsneConfig,
) -> Result<Layout2D, LayoutError> {
    let n = matrix.n();
    if n > config.max_n {
        return Err(LayoutError::Contract(format!(
            "n = {n} exceeds the exact t-SNE cap of {}",
            config.max_n
        )));
    }
    if perplexity >= n as f64 {
        return Err(LayoutError::Contract(format!("perplexity {perplexity} >= n = {n}")));
    }
    if !(config.learning_rate > 0.0) {
        return Err(LayoutError::Contract("learning rate must be positive".into()));
    }
    let (p, _) = joint_probabilities(matrix, perplexity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let mut velocity = vec![[0.0f64; 2]; n];
    let mut trace = Vec::new();

    for it in 0..config.iterations {
        let alpha = if it < config.exaggeration_iterations {
            config.early_exaggeration
        } else {
            1.0
        };
        let momentum = if it < config.momentum_switch {
            config.initial_momentum
        } else {
            config.final_momentum
        };
        let grad = tsne_gradient(&p, &y, alpha);
        for i in 0..n {
            for c in 0..2 {
                velocity[i][c] = momentum * velocity[i][c] - config.learning_rate * grad[i][c];
                y[i][c] += velocity[i][c];
            }
            if !(y[i][0].is_finite() && y[i][1].is_finite()) {
                return Err(LayoutError::NonFinite { iteration: it, node: i });
            }
        }
        if config.trace_every > 0 && (it + 1) % config.trace_every == 0 {
            trace.push((it + 1, kl_divergence(&p, &y)));
        }
    }
    let final_objective = match trace.last() {
        Some(&(it, kl)) if it == config.iterations => kl,
        _ => kl_divergence(&p, &y),
    };
    Ok(Layout2D {
        coordinates: y,
        seed,
        method: LayoutMethod::Tsne,
        final_objective,
        objective_trace: trace,
    })
}

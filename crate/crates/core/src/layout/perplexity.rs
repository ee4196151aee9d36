use super::LayoutError;

const MAX_ITERS: usize = 50;
const TOLERANCE: f64 = 1e-5;

/// Shannon entropy in bits.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>()
}

fn gaussian_row(shifted_sq: &[f64], beta: f64) -> Vec<f64> {
    let mut p: Vec<f64> = shifted_sq.iter().map(|&d| (-d * beta).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    p
}

/// Neighbour distribution `p_j ∝ exp(-d_j² / 2σ²)` with σ chosen so that the
/// perplexity `2^H(p)` matches `target_perplexity`.
///
/// Returns the row and σ. σ is searched by bisection in log-precision space;
/// distances are shifted by the smallest squared distance first, which leaves
/// the distribution unchanged and keeps every weight representable. A row of
/// identical distances is returned uniform with σ = ∞.
pub fn conditional_probabilities(
    distances: &[f64],
    target_perplexity: f64,
) -> Result<(Vec<f64>, f64), LayoutError> {
    let m = distances.len();
    if m < 2 {
        return Err(LayoutError::Contract(format!("need at least 2 distances, got {m}")));
    }
    if distances.iter().any(|d| !d.is_finite()) {
        return Err(LayoutError::Contract("non-finite distance".into()));
    }
    if !(target_perplexity > 1.0 && target_perplexity < m as f64) {
        return Err(LayoutError::Contract(format!(
            "perplexity {target_perplexity} outside (1, {m})"
        )));
    }
    let sq: Vec<f64> = distances.iter().map(|d| d * d).collect();
    let min = sq.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = sq.iter().map(|d| d - min).collect();
    let spread = shifted.iter().sum::<f64>() / m as f64;
    if spread <= 0.0 {
        return Ok((vec![1.0 / m as f64; m], f64::INFINITY));
    }

    // beta = exp(t) / spread; entropy decreases monotonically in t.
    let (mut lo, mut hi) = (-50.0f64, 50.0f64);
    let mut best = (f64::INFINITY, 0.0f64, Vec::new());
    for _ in 0..MAX_ITERS {
        let t = 0.5 * (lo + hi);
        let beta = t.exp() / spread;
        let p = gaussian_row(&shifted, beta);
        let perp = entropy_bits(&p).exp2();
        let err = (perp - target_perplexity).abs();
        if err < best.0 {
            best = (err, beta, p);
        }
        if err < TOLERANCE {
            break;
        }
        if perp > target_perplexity {
            lo = t;
        } else {
            hi = t;
        }
    }
    let (_, beta, p) = best;
    Ok((p, (1.0 / (2.0 * beta)).sqrt()))
}

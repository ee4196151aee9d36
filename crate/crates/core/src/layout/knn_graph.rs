use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{conditional_probabilities, sq_dist, LayoutError};
use crate::embedding::EmbeddingMatrix;

/// Symmetrised, weighted k-nearest-neighbour graph.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    n: usize,
    k: usize,
    /// `(i, j, w)` with `i < j`, sorted.
    edges: Vec<(usize, usize, f64)>,
    sigmas: Vec<f64>,
    /// Directed kNN lists, nearest first.
    neighbors: Vec<Vec<usize>>,
    /// Symmetric adjacency, sorted ascending.
    adjacency: Vec<Vec<usize>>,
}

impl KnnGraph {
    /// Builds a graph directly from weighted pairs; used for hand-made graphs.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, LayoutError> {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(a, b, w) in edges {
            if a == b || a >= n || b >= n || !(w > 0.0 && w.is_finite()) {
                return Err(LayoutError::Contract(format!("bad edge ({a}, {b}, {w})")));
            }
            *merged.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
        }
        let edges: Vec<_> = merged.into_iter().map(|((i, j), w)| (i, j, w)).collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j, _) in &edges {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        adjacency.iter_mut().for_each(|a| a.sort_unstable());
        Ok(KnnGraph {
            n,
            k: 0,
            edges,
            sigmas: vec![f64::NAN; n],
            neighbors: adjacency.clone(),
            adjacency,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn knn(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn adjacency(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let key = (i.min(j), i.max(j));
        self.edges
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .ok()
            .map(|pos| self.edges[pos].2)
    }
}

/// For every row, finds its `k` nearest rows (Euclidean on unit-normalised
/// rows, ties by index), turns the distances into `p_{j|i}` at the given
/// perplexity and symmetrises with `w_ij = (p_{j|i} + p_{i|j}) / 2`.
pub fn build_knn_graph(matrix: &EmbeddingMatrix, k: usize, perplexity: f64) -> Result<KnnGraph, LayoutError> {
    let n = matrix.n();
    if k < 2 {
        return Err(LayoutError::Contract(format!("k = {k} < 2")));
    }
    if n <= k {
        return Err(LayoutError::Contract(format!("need more than k = {k} rows, got {n}")));
    }
    if !(perplexity > 1.0 && perplexity <= k as f64) {
        return Err(LayoutError::Contract(format!("perplexity {perplexity} outside (1, k = {k}]")));
    }
    // A perplexity equal to k is only reachable in the uniform limit.
    let perplexity = perplexity.min(k as f64 * (1.0 - 1e-9));
    let rows = matrix.normalized_rows();

    let per_row: Vec<Result<(Vec<usize>, Vec<f64>, f64), LayoutError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(&rows[i], &rows[j]), j))
                .collect();
            d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.truncate(k);
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let dist: Vec<f64> = d.iter().map(|p| p.0.sqrt()).collect();
            let (p, sigma) = conditional_probabilities(&dist, perplexity)?;
            Ok((d.into_iter().map(|p| p.1).collect(), p, sigma))
        })
        .collect();

    let mut neighbors = Vec::with_capacity(n);
    let mut sigmas = Vec::with_capacity(n);
    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, r) in per_row.into_iter().enumerate() {
        let (nbrs, p, sigma) = r?;
        for (&j, &pj) in nbrs.iter().zip(&p) {
            *weights.entry((i.min(j), i.max(j))).or_insert(0.0) += 0.5 * pj;
        }
        neighbors.push(nbrs);
        sigmas.push(sigma);
    }
    let edges: Vec<(usize, usize, f64)> = weights
        .into_iter()
        .filter(|&(_, w)| w > 0.0)
        .map(|((i, j), w)| (i, j, w.min(1.0)))
        .collect();
    let mut adjacency = vec![Vec::new(); n];
    for &(i, j, _) in &edges {
        adjacency[i].push(j);
        adjacency[j].push(i);
    }
    adjacency.iter_mut().for_each(|a| a.sort_unstable());
    Ok(KnnGraph {
        n,
        k,
        edges,
        sigmas,
        neighbors,
        adjacency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{i:04}")).collect()
    }

    #[test]
    fn equilateral_triangle_has_equal_weights() {
        // Basis vectors are exactly equidistant even after f32 storage.
        let rows = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let m = EmbeddingMatrix::from_rows(ids(3), &rows).unwrap();
        let g = build_knn_graph(&m, 2, 1.5).unwrap();
        assert_eq!(g.edges().len(), 3);
        let w0 = g.edges()[0].2;
        for &(_, _, w) in g.edges() {
            assert_eq!(w, w0);
        }
    }

    #[test]
    fn cloned_node_is_first_neighbor() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        rows.push(rows[7].clone());
        let m = EmbeddingMatrix::from_rows(ids(21), &rows).unwrap();
        let g = build_knn_graph(&m, 4, 3.0).unwrap();
        assert_eq!(g.knn(20)[0], 7);
        assert_eq!(g.knn(7)[0], 20);
    }

    #[test]
    fn neighbor_sets_match_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..10).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let m = EmbeddingMatrix::from_rows(ids(100), &rows).unwrap();
        let g = build_knn_graph(&m, 10, 5.0).unwrap();
        let unit: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let r: Vec<f64> = r.iter().map(|&v| v as f32 as f64).collect();
                let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                r.iter().map(|v| v / n).collect()
            })
            .collect();
        for i in 0..100 {
            let mut all: Vec<(f64, usize)> = (0..100)
                .filter(|&j| j != i)
                .map(|j| {
                    let d: f64 = unit[i].iter().zip(&unit[j]).map(|(a, b)| (a - b).powi(2)).sum();
                    (d, j)
                })
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut expect: Vec<usize> = all[..10].iter().map(|p| p.1).collect();
            let mut got = g.knn(i).to_vec();
            expect.sort_unstable();
            got.sort_unstable();
            assert_eq!(got, expect, "row {i}");
        }
        for &(i, j, w) in g.edges() {
            assert!(i < j);
            assert!(w > 0.0 && w <= 1.0);
            assert_eq!(g.weight(j, i), Some(w));
        }
        assert!((0..100).all(|i| !g.adjacency(i).is_empty()));
    }

    #[test]
    fn rejects_bad_parameters() {
        let m = EmbeddingMatrix::from_rows(ids(4), &vec![vec![1.0, 0.0]; 4]).unwrap();
        assert!(build_knn_graph(&m, 1, 1.5).is_err());
        assert!(build_knn_graph(&m, 4, 2.0).is_err());
        assert!(build_knn_graph(&m, 2, 3.0).is_err());
    }
}

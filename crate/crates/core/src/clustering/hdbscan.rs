use rayon::prelude::*;

use super::{dist, ClusteringError};

/// Smallest distance used when converting to `λ = 1/d`.
const MIN_DISTANCE: f64 = 1e-12;

/// Distance from each point to its `k`-th nearest other point.
pub fn core_distances(points: &[[f64; 2]], k: usize) -> Result<Vec<f64>, ClusteringError> {
    let n = points.len();
    if k == 0 || n <= k {
        return Err(ClusteringError::Contract(format!(
            "need n > k >= 1, got n = {n}, k = {k}"
        )));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| dist(points[i], points[j]))
                .collect();
            let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect())
}

/// Mutual reachability `max(core(a), core(b), d(a, b))`, computed on demand.
#[derive(Debug, Clone)]
pub struct MutualReachability<'a> {
    points: &'a [[f64; 2]],
    core: Vec<f64>,
    min_samples: usize,
}

impl<'a> MutualReachability<'a> {
    pub fn new(points: &'a [[f64; 2]], min_samples: usize) -> Result<Self, ClusteringError> {
        let core = core_distances(points, min_samples)?;
        Ok(MutualReachability {
            points,
            core,
            min_samples,
        })
    }

    pub fn min_samples(&self) -> usize {
        self.min_samples
    }

    pub fn core(&self) -> &[f64] {
        &self.core
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        self.core[a]
            .max(self.core[b])
            .max(dist(self.points[a], self.points[b]))
    }

    /// Dense row-major matrix with a zero diagonal.
    pub fn matrix(&self) -> Vec<f64> {
        let n = self.points.len();
        (0..n * n).map(|x| self.distance(x / n, x % n)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

fn edge_key(e: &MstEdge) -> (f64, usize, usize) {
    (e.weight, e.a.min(e.b), e.a.max(e.b))
}

fn edge_order(x: &MstEdge, y: &MstEdge) -> std::cmp::Ordering {
    let (wx, ax, bx) = edge_key(x);
    let (wy, ay, by) = edge_key(y);
    wx.total_cmp(&wy).then(ax.cmp(&ay)).then(bx.cmp(&by))
}

/// Minimum spanning tree of the mutual-reachability graph by Prim's
/// algorithm, sorted ascending by weight. Equal weights are broken by the
/// (smaller, larger) endpoint index pair, so callers that order points by
/// pmid get pmid tie-breaking.
pub fn mst_mutual_reachability(points: &[[f64; 2]], min_samples: usize) -> Result<Vec<MstEdge>, ClusteringError> {
    let n = points.len();
    if n < 2 {
        return Err(ClusteringError::Contract(format!("need at least 2 points, got {n}")));
    }
    let mr = MutualReachability::new(points, min_samples)?;
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![usize::MAX; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = mr.distance(current, j);
            let better = d < best[j]
                || (d == best[j] && (current.min(j), current.max(j)) < (from[j].min(j), from[j].max(j)));
            if better {
                best[j] = d;
                from[j] = current;
            }
        }
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&x, &y| {
                let ex = MstEdge { a: from[x], b: x, weight: best[x] };
                let ey = MstEdge { a: from[y], b: y, weight: best[y] };
                edge_order(&ex, &ey)
            })
            .expect("a vertex remains");
        in_tree[next] = true;
        edges.push(MstEdge {
            a: from[next].min(next),
            b: from[next].max(next),
            weight: best[next],
        });
        current = next;
    }
    edges.sort_by(edge_order);
    Ok(edges)
}

/// Flat clustering: per-point labels (−1 for noise) and selected clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatClustering {
    pub labels: Vec<i64>,
    /// Members of each selected cluster, ascending; indexed by label.
    pub clusters: Vec<Vec<usize>>,
    pub stabilities: Vec<f64>,
}

impl FlatClustering {
    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l < 0).count()
    }
}

struct Dendrogram {
    /// Internal node `n + t` merges `children[t]` at `heights[t]`.
    children: Vec<(usize, usize)>,
    heights: Vec<f64>,
    sizes: Vec<usize>,
}

fn single_linkage(n: usize, mst: &[MstEdge]) -> Dendrogram {
    let mut parent: Vec<usize> = (0..2 * n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut sizes = vec![1usize; n];
    let mut children = Vec::with_capacity(n - 1);
    let mut heights = Vec::with_capacity(n - 1);
    for e in mst {
        let ra = find(&mut parent, e.a);
        let rb = find(&mut parent, e.b);
        let node = n + children.len();
        parent[ra] = node;
        parent[rb] = node;
        children.push((ra.min(rb), ra.max(rb)));
        heights.push(e.weight);
        sizes.push(sizes[ra] + sizes[rb]);
    }
    Dendrogram {
        children,
        heights,
        sizes,
    }
}

struct Condensed {
    /// Parent cluster of each cluster (root has none).
    cluster_parent: Vec<Option<usize>>,
    birth: Vec<f64>,
    /// Σ over points and child clusters leaving the cluster of `λ · size`.
    leave_mass: Vec<f64>,
    leave_count: Vec<usize>,
    /// For each point, the cluster it fell out of.
    point_cluster: Vec<usize>,
}

fn lambda(d: f64) -> f64 {
    1.0 / d.max(MIN_DISTANCE)
}

fn condense(n: usize, dendro: &Dendrogram, m: usize) -> Condensed {
    let mut c = Condensed {
        cluster_parent: vec![None],
        birth: vec![0.0],
        leave_mass: vec![0.0],
        leave_count: vec![0],
        point_cluster: vec![0; n],
    };
    let root = n + dendro.children.len() - 1;
    let mut stack = vec![(root, 0usize)];
    let mut leaves = Vec::new();
    while let Some((node, cluster)) = stack.pop() {
        if node < n {
            c.point_cluster[node] = cluster;
            continue;
        }
        let t = node - n;
        let l = lambda(dendro.heights[t]);
        let (left, right) = dendro.children[t];
        let big = |x: usize| dendro.sizes[x] >= m;
        match (big(left), big(right)) {
            (true, true) => {
                for child in [left, right] {
                    let id = c.birth.len();
                    c.cluster_parent.push(Some(cluster));
                    c.birth.push(l);
                    c.leave_mass.push(0.0);
                    c.leave_count.push(0);
                    c.leave_mass[cluster] += l * dendro.sizes[child] as f64;
                    c.leave_count[cluster] += dendro.sizes[child];
                    stack.push((child, id));
                }
            }
            (l_big, r_big) => {
                for (child, keep) in [(left, l_big), (right, r_big)] {
                    if keep {
                        stack.push((child, cluster));
                    } else {
                        leaves.clear();
                        collect_leaves(n, dendro, child, &mut leaves);
                        for &p in &leaves {
                            c.point_cluster[p] = cluster;
                        }
                        c.leave_mass[cluster] += l * leaves.len() as f64;
                        c.leave_count[cluster] += leaves.len();
                    }
                }
            }
        }
    }
    c
}

fn collect_leaves(n: usize, dendro: &Dendrogram, node: usize, out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x < n {
            out.push(x);
        } else {
            let (a, b) = dendro.children[x - n];
            stack.push(a);
            stack.push(b);
        }
    }
}

/// Condensed-tree extraction with excess-of-mass selection. The root is
/// eligible, so a single dense group yields one cluster rather than none.
pub fn extract_flat(mst: &[MstEdge], min_cluster_size: usize) -> Result<FlatClustering, ClusteringError> {
    if min_cluster_size < 2 {
        return Err(ClusteringError::Contract(format!(
            "min_cluster_size = {min_cluster_size} < 2"
        )));
    }
    let n = mst.len() + 1;
    if min_cluster_size > n {
        log::warn!("min_cluster_size {min_cluster_size} exceeds n = {n}; everything is noise");
        return Ok(FlatClustering {
            labels: vec![-1; n],
            clusters: Vec::new(),
            stabilities: Vec::new(),
        });
    }
    if mst.windows(2).any(|w| edge_order(&w[0], &w[1]).is_gt()) {
        return Err(ClusteringError::Contract("MST edges must be sorted by weight".into()));
    }
    let dendro = single_linkage(n, mst);
    let c = condense(n, &dendro, min_cluster_size);
    let k = c.birth.len();
    let stability: Vec<f64> = (0..k)
        .map(|i| c.leave_mass[i] - c.birth[i] * c.leave_count[i] as f64)
        .collect();

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, p) in c.cluster_parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(i);
        }
    }
    // Children always carry larger ids than their parent.
    let mut selected = vec![false; k];
    let mut subtree = vec![0.0; k];
    for i in (0..k).rev() {
        let below: f64 = children[i].iter().map(|&ch| subtree[ch]).sum();
        if children[i].is_empty() || stability[i] >= below {
            selected[i] = true;
            subtree[i] = stability[i];
        } else {
            subtree[i] = below;
        }
    }
    // Keep only the topmost selected cluster on every path.
    let mut chosen = vec![false; k];
    for i in 0..k {
        let mut anc = c.cluster_parent[i];
        let mut covered = false;
        while let Some(a) = anc {
            if chosen[a] {
                covered = true;
                break;
            }
            anc = c.cluster_parent[a];
        }
        chosen[i] = selected[i] && !covered;
    }
    let owner = |mut x: usize| -> Option<usize> {
        let mut hit = None;
        loop {
            if chosen[x] {
                hit = Some(x);
            }
            match c.cluster_parent[x] {
                Some(p) => x = p,
                None => return hit,
            }
        }
    };
    let mut by_cluster: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut slot = vec![usize::MAX; k];
    for p in 0..n {
        if let Some(cl) = owner(c.point_cluster[p]) {
            if slot[cl] == usize::MAX {
                slot[cl] = by_cluster.len();
                by_cluster.push((cl, Vec::new()));
            }
            by_cluster[slot[cl]].1.push(p);
        }
    }
    // Points are visited in index order, so labels follow each cluster's
    // smallest member.
    let mut labels = vec![-1i64; n];
    for (label, (_, members)) in by_cluster.iter().enumerate() {
        for &p in members {
            labels[p] = label as i64;
        }
    }
    let stabilities = by_cluster.iter().map(|(cl, _)| stability[*cl]).collect();
    Ok(FlatClustering {
        labels,
        clusters: by_cluster.into_iter().map(|(_, m)| m).collect(),
        stabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{planar_blobs, uniform_points};
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn line(ts: &[f64]) -> Vec<[f64; 2]> {
        ts.iter().map(|&t| [t, 0.0]).collect()
    }

    /// Adjusted Rand index from the contingency table.
    fn ari(a: &[i64], b: &[usize]) -> f64 {
        let c2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
        let mut table: HashMap<(i64, usize), usize> = HashMap::new();
        let mut ra: HashMap<i64, usize> = HashMap::new();
        let mut rb: HashMap<usize, usize> = HashMap::new();
        for (&x, &y) in a.iter().zip(b) {
            *table.entry((x, y)).or_default() += 1;
            *ra.entry(x).or_default() += 1;
            *rb.entry(y).or_default() += 1;
        }
        let index: f64 = table.values().map(|&v| c2(v)).sum();
        let sa: f64 = ra.values().map(|&v| c2(v)).sum();
        let sb: f64 = rb.values().map(|&v| c2(v)).sum();
        let expected = sa * sb / c2(a.len());
        let max = (sa + sb) / 2.0;
        if max == expected {
            return 1.0;
        }
        (index - expected) / (max - expected)
    }

    #[test]
    fn core_distances_on_a_line() {
        assert_eq!(core_distances(&line(&[0.0, 1.0, 3.0]), 1).unwrap(), vec![1.0, 1.0, 2.0]);
        assert_eq!(core_distances(&line(&[0.0, 1.0, 3.0]), 2).unwrap(), vec![3.0, 2.0, 3.0]);
        assert_eq!(core_distances(&vec![[2.0, 2.0]; 6], 3).unwrap(), vec![0.0; 6]);
        assert!(core_distances(&line(&[0.0, 1.0]), 2).is_err());
    }

    #[test]
    fn mst_on_a_line() {
        let mst = mst_mutual_reachability(&line(&[0.0, 1.0, 3.0]), 1).unwrap();
        assert_eq!(
            mst,
            vec![
                MstEdge { a: 0, b: 1, weight: 1.0 },
                MstEdge { a: 1, b: 2, weight: 2.0 }
            ]
        );
        let two = mst_mutual_reachability(&line(&[0.0, 2.5]), 1).unwrap();
        assert_eq!(two, vec![MstEdge { a: 0, b: 1, weight: 2.5 }]);
    }

    #[test]
    fn mreach_matches_definition() {
        let pts = uniform_points(50, 0.0, 10.0, 1);
        let k = 4;
        let mr = MutualReachability::new(&pts, k).unwrap();
        let m = mr.matrix();
        for a in 0..50 {
            let mut da: Vec<f64> = (0..50).filter(|&j| j != a).map(|j| dist(pts[a], pts[j])).collect();
            da.sort_by(f64::total_cmp);
            assert_eq!(mr.core()[a], da[k - 1]);
        }
        for a in 0..50 {
            for b in 0..50 {
                let expect = if a == b {
                    0.0
                } else {
                    mr.core()[a].max(mr.core()[b]).max(dist(pts[a], pts[b]))
                };
                assert_eq!(m[a * 50 + b], expect);
                assert_eq!(m[a * 50 + b], m[b * 50 + a]);
            }
        }
    }

    #[test]
    fn mst_total_weight_matches_kruskal() {
        let pts = uniform_points(40, 0.0, 5.0, 9);
        let mr = MutualReachability::new(&pts, 3).unwrap();
        let mut all: Vec<(f64, usize, usize)> = Vec::new();
        for a in 0..40 {
            for b in a + 1..40 {
                all.push((mr.distance(a, b), a, b));
            }
        }
        all.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut comp: Vec<usize> = (0..40).collect();
        let mut total = 0.0;
        for (w, a, b) in all {
            let (ca, cb) = (comp[a], comp[b]);
            if ca != cb {
                total += w;
                comp.iter_mut().filter(|c| **c == cb).for_each(|c| *c = ca);
            }
        }
        let mst = mst_mutual_reachability(&pts, 3).unwrap();
        assert_eq!(mst.len(), 39);
        let got: f64 = mst.iter().map(|e| e.weight).sum();
        assert!((got - total).abs() < 1e-9);
    }

    #[test]
    fn two_blobs_give_two_clusters() {
        let (pts, truth) = planar_blobs(&[(0.0, 0.0, 1.0, 100), (10.0, 0.0, 1.0, 100)], 3);
        let mst = mst_mutual_reachability(&pts, 5).unwrap();
        let flat = extract_flat(&mst, 10).unwrap();
        assert_eq!(flat.n_clusters(), 2);
        assert!(flat.noise_count() <= 10);
        let (a, b): (Vec<i64>, Vec<usize>) = flat
            .labels
            .iter()
            .zip(&truth)
            .filter(|(l, _)| **l >= 0)
            .map(|(l, t)| (*l, *t))
            .unzip();
        assert_eq!(ari(&a, &b), 1.0);
    }

    #[test]
    fn single_blob_gives_one_cluster() {
        let (pts, _) = planar_blobs(&[(3.0, 3.0, 1.0, 60)], 5);
        let mst = mst_mutual_reachability(&pts, 5).unwrap();
        assert_eq!(extract_flat(&mst, 5).unwrap().n_clusters(), 1);
    }

    #[test]
    fn huge_min_cluster_size_is_at_most_one_cluster() {
        let pts = uniform_points(50, 0.0, 1.0, 2);
        let mst = mst_mutual_reachability(&pts, 5).unwrap();
        assert!(extract_flat(&mst, 49).unwrap().n_clusters() <= 1);
        let all_noise = extract_flat(&mst, 51).unwrap();
        assert_eq!(all_noise.noise_count(), 50);
    }

    #[test]
    fn cluster_count_does_not_grow_with_min_size() {
        let (pts, _) = planar_blobs(
            &[(0.0, 0.0, 0.5, 30), (6.0, 0.0, 0.5, 30), (0.0, 6.0, 0.5, 30), (40.0, 40.0, 2.0, 80)],
            11,
        );
        let mst = mst_mutual_reachability(&pts, 5).unwrap();
        let counts: Vec<usize> = [5, 10, 20, 40, 100]
            .iter()
            .map(|&m| extract_flat(&mst, m).unwrap().n_clusters())
            .collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
    }

    #[test]
    fn ari_oracle_sanity() {
        assert_eq!(ari(&[0, 0, 1, 1], &[5, 5, 7, 7]), 1.0);
        assert!(ari(&[0, 1, 0, 1], &[0, 0, 1, 1]) < 0.0);
    }

    proptest! {
        #[test]
        fn mreach_dominates_distance(seed in 0u64..500, k in 1usize..6) {
            let pts = uniform_points(20, -3.0, 3.0, seed);
            let mr = MutualReachability::new(&pts, k).unwrap();
            for a in 0..20 {
                for b in 0..20 {
                    prop_assert_eq!(mr.distance(a, b), mr.distance(b, a));
                    if a != b {
                        prop_assert!(mr.distance(a, b) >= dist(pts[a], pts[b]));
                        prop_assert!(mr.distance(a, b) >= mr.core()[a].max(mr.core()[b]));
                    }
                }
            }
        }

        #[test]
        fn labels_partition_points(seed in 0u64..200, m in 2usize..15) {
            let pts = uniform_points(60, 0.0, 10.0, seed);
            let mst = mst_mutual_reachability(&pts, 3).unwrap();
            let flat = extract_flat(&mst, m).unwrap();
            let mut seen = vec![false; 60];
            for (label, members) in flat.clusters.iter().enumerate() {
                prop_assert!(members.len() >= m);
                for &p in members {
                    prop_assert!(!seen[p]);
                    seen[p] = true;
                    prop_assert_eq!(flat.labels[p], label as i64);
                }
            }
            for p in 0..60 {
                prop_assert_eq!(seen[p], flat.labels[p] >= 0);
            }
        }
    }
}

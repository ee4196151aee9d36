//! Bucket PR quadtree over map coordinates: circle, nearest and polygon queries.

use thiserror::Error;

pub const DEFAULT_CAPACITY: usize = 16;
pub const DEFAULT_MAX_DEPTH: usize = 24;
const BOUNDS_MARGIN: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("non-finite coordinate for pmid {0}")]
    NonFinite(String),
    #[error("point {pmid} at ({x}, {y}) lies outside the tree bounds")]
    OutOfBounds { pmid: String, x: f64, y: f64 },
    #[error("invalid argument: {0}")]
    Contract(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    fn intersects(&self, o: &Rect) -> bool {
        self.min[0] <= o.max[0] && o.min[0] <= self.max[0] && self.min[1] <= o.max[1] && o.min[1] <= self.max[1]
    }

    fn min_sq_dist(&self, p: [f64; 2]) -> f64 {
        let dx = (self.min[0] - p[0]).max(0.0).max(p[0] - self.max[0]);
        let dy = (self.min[1] - p[1]).max(0.0).max(p[1] - self.max[1]);
        dx * dx + dy * dy
    }

    fn mid(&self) -> [f64; 2] {
        [0.5 * (self.min[0] + self.max[0]), 0.5 * (self.min[1] + self.max[1])]
    }

    fn quadrant(&self, q: usize) -> Rect {
        let m = self.mid();
        let (x0, x1) = if q & 1 == 0 { (self.min[0], m[0]) } else { (m[0], self.max[0]) };
        let (y0, y1) = if q & 2 == 0 { (self.min[1], m[1]) } else { (m[1], self.max[1]) };
        Rect {
            min: [x0, y0],
            max: [x1, y1],
        }
    }

    /// Smallest rectangle containing `points`.
    pub fn bounding(points: impl IntoIterator<Item = [f64; 2]>) -> Option<Rect> {
        let mut r: Option<Rect> = None;
        for p in points {
            let b = r.get_or_insert(Rect { min: p, max: p });
            for k in 0..2 {
                b.min[k] = b.min[k].min(p[k]);
                b.max[k] = b.max[k].max(p[k]);
            }
        }
        r
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(Vec<u32>),
    Internal([u32; 4]),
}

/// Per-query work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryStats {
    pub nodes_visited: usize,
    pub distance_evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeStats {
    pub depth: usize,
    pub leaves: usize,
    pub internal: usize,
    pub largest_leaf: usize,
}

#[derive(Debug, Clone)]
pub struct Quadtree {
    bounds: Rect,
    capacity: usize,
    max_depth: usize,
    pmids: Vec<String>,
    coords: Vec<[f64; 2]>,
    nodes: Vec<Node>,
    rects: Vec<Rect>,
    depths: Vec<usize>,
}

impl Quadtree {
    /// Empty tree over fixed bounds.
    pub fn with_bounds(bounds: Rect, capacity: usize, max_depth: usize) -> Result<Self, SpatialError> {
        if capacity == 0 || max_depth == 0 {
            return Err(SpatialError::Contract(format!(
                "capacity {capacity} and max_depth {max_depth} must be positive"
            )));
        }
        Ok(Quadtree {
            bounds,
            capacity,
            max_depth,
            pmids: Vec::new(),
            coords: Vec::new(),
            nodes: vec![Node::Leaf(Vec::new())],
            rects: vec![bounds],
            depths: vec![0],
        })
    }

    /// Builds over the points' bounding box widened by a small relative margin.
    pub fn build<S: AsRef<str>>(points: &[(S, [f64; 2])], capacity: usize, max_depth: usize) -> Result<Self, SpatialError> {
        if let Some((id, _)) = points.iter().find(|(_, p)| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(SpatialError::NonFinite(id.as_ref().to_string()));
        }
        let bounds = match Rect::bounding(points.iter().map(|(_, p)| *p)) {
            Some(b) => {
                let span = (b.max[0] - b.min[0]).max(b.max[1] - b.min[1]);
                let scale = span.max(b.min[0].abs()).max(b.max[0].abs()).max(b.min[1].abs()).max(b.max[1].abs()).max(1.0);
                let m = BOUNDS_MARGIN * scale;
                Rect {
                    min: [b.min[0] - m, b.min[1] - m],
                    max: [b.max[0] + m, b.max[1] + m],
                }
            }
            None => Rect {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            },
        };
        let mut tree = Quadtree::with_bounds(bounds, capacity, max_depth)?;
        tree.pmids.reserve(points.len());
        tree.coords.reserve(points.len());
        for (id, p) in points {
            tree.insert(id.as_ref(), *p)?;
        }
        Ok(tree)
    }

    pub fn build_default<S: AsRef<str>>(points: &[(S, [f64; 2])]) -> Result<Self, SpatialError> {
        Self::build(points, DEFAULT_CAPACITY, DEFAULT_MAX_DEPTH)
    }

    pub fn insert(&mut self, pmid: &str, p: [f64; 2]) -> Result<usize, SpatialError> {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(SpatialError::NonFinite(pmid.to_string()));
        }
        if !self.bounds.contains(p) {
            return Err(SpatialError::OutOfBounds {
                pmid: pmid.to_string(),
                x: p[0],
                y: p[1],
            });
        }
        let idx = self.coords.len();
        self.pmids.push(pmid.to_string());
        self.coords.push(p);
        let mut node = 0usize;
        loop {
            match &mut self.nodes[node] {
                Node::Internal(children) => {
                    let m = self.rects[node].mid();
                    let q = (p[0] >= m[0]) as usize + 2 * (p[1] >= m[1]) as usize;
                    node = children[q] as usize;
                }
                Node::Leaf(items) => {
                    items.push(idx as u32);
                    if items.len() > self.capacity && self.depths[node] < self.max_depth {
                        let first = self.coords[items[0] as usize];
                        if items.iter().any(|&i| self.coords[i as usize] != first) {
                            self.split(node);
                        }
                    }
                    return Ok(idx);
                }
            }
        }
    }

    fn split(&mut self, node: usize) {
        let Node::Leaf(items) = std::mem::replace(&mut self.nodes[node], Node::Leaf(Vec::new())) else {
            return;
        };
        let rect = self.rects[node];
        let depth = self.depths[node] + 1;
        let base = self.nodes.len() as u32;
        let m = rect.mid();
        let mut buckets: [Vec<u32>; 4] = Default::default();
        for i in items {
            let p = self.coords[i as usize];
            buckets[(p[0] >= m[0]) as usize + 2 * (p[1] >= m[1]) as usize].push(i);
        }
        for (q, b) in buckets.into_iter().enumerate() {
            self.nodes.push(Node::Leaf(b));
            self.rects.push(rect.quadrant(q));
            self.depths.push(depth);
        }
        self.nodes[node] = Node::Internal([base, base + 1, base + 2, base + 3]);
        for c in base..base + 4 {
            let c = c as usize;
            let crowded = matches!(&self.nodes[c], Node::Leaf(v) if v.len() > self.capacity);
            if crowded && depth < self.max_depth {
                let Node::Leaf(v) = &self.nodes[c] else { unreachable!() };
                let first = self.coords[v[0] as usize];
                if v.iter().any(|&i| self.coords[i as usize] != first) {
                    self.split(c);
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn pmid(&self, i: usize) -> &str {
        &self.pmids[i]
    }

    pub fn coord(&self, i: usize) -> [f64; 2] {
        self.coords[i]
    }

    pub fn stats(&self) -> TreeStats {
        let mut s = TreeStats {
            depth: 0,
            leaves: 0,
            internal: 0,
            largest_leaf: 0,
        };
        for (n, d) in self.nodes.iter().zip(&self.depths) {
            s.depth = s.depth.max(*d);
            match n {
                Node::Leaf(v) => {
                    s.leaves += 1;
                    s.largest_leaf = s.largest_leaf.max(v.len());
                }
                Node::Internal(_) => s.internal += 1,
            }
        }
        s
    }

    /// Indices of points within `radius` of `center` (boundary inclusive), ascending.
    pub fn query_circle(&self, center: [f64; 2], radius: f64) -> Vec<usize> {
        self.query_circle_counted(center, radius).0
    }

    pub fn query_circle_counted(&self, center: [f64; 2], radius: f64) -> (Vec<usize>, QueryStats) {
        let mut out = Vec::new();
        let mut stats = QueryStats::default();
        if !(radius >= 0.0) {
            return (out, stats);
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            if self.rects[n].min_sq_dist(center) > r2 {
                continue;
            }
            stats.nodes_visited += 1;
            match &self.nodes[n] {
                Node::Internal(c) => stack.extend(c.iter().map(|&x| x as usize)),
                Node::Leaf(items) => {
                    for &i in items {
                        stats.distance_evaluations += 1;
                        let p = self.coords[i as usize];
                        let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                        if dx * dx + dy * dy <= r2 {
                            out.push(i as usize);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        (out, stats)
    }

    /// Closest point within `radius`, ties broken by ascending pmid.
    pub fn nearest_in_radius(&self, cursor: [f64; 2], radius: f64) -> Option<(usize, f64)> {
        self.query_circle(cursor, radius)
            .into_iter()
            .map(|i| {
                let p = self.coords[i];
                (i, (p[0] - cursor[0]).hypot(p[1] - cursor[1]))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| self.pmids[a.0].cmp(&self.pmids[b.0])))
    }

    /// Indices of points inside `polygon` by the even-odd rule, boundary
    /// included, ascending.
    pub fn query_polygon(&self, polygon: &[[f64; 2]]) -> Result<Vec<usize>, SpatialError> {
        Ok(self.query_polygon_counted(polygon)?.0)
    }

    pub fn query_polygon_counted(&self, polygon: &[[f64; 2]]) -> Result<(Vec<usize>, QueryStats), SpatialError> {
        if polygon.len() < 3 {
            return Err(SpatialError::Contract(format!(
                "polygon needs at least 3 vertices, got {}",
                polygon.len()
            )));
        }
        if polygon.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(SpatialError::Contract("non-finite polygon vertex".into()));
        }
        let bbox = Rect::bounding(polygon.iter().copied()).expect("non-empty polygon");
        let mut out = Vec::new();
        let mut stats = QueryStats::default();
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let rect = self.rects[n];
            if !rect.intersects(&bbox) {
                continue;
            }
            stats.nodes_visited += 1;
            if rect_inside_polygon(&rect, polygon) {
                self.collect(n, &mut out);
                continue;
            }
            match &self.nodes[n] {
                Node::Internal(c) => stack.extend(c.iter().map(|&x| x as usize)),
                Node::Leaf(items) => {
                    for &i in items {
                        stats.distance_evaluations += 1;
                        let p = self.coords[i as usize];
                        if bbox.contains(p) && point_in_polygon(p, polygon) {
                            out.push(i as usize);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        Ok((out, stats))
    }

    fn collect(&self, n: usize, out: &mut Vec<usize>) {
        let mut stack = vec![n];
        while let Some(n) = stack.pop() {
            match &self.nodes[n] {
                Node::Internal(c) => stack.extend(c.iter().map(|&x| x as usize)),
                Node::Leaf(items) => out.extend(items.iter().map(|&i| i as usize)),
            }
        }
    }
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    cross == 0.0
        && p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Even-odd containment; points on an edge count as inside.
pub fn point_in_polygon(p: [f64; 2], polygon: &[[f64; 2]]) -> bool {
    let n = polygon.len();
    let mut inside = false;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if on_segment(p, a, b) {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        let v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && on_segment(c, a, b))
        || (o2 == 0 && on_segment(d, a, b))
        || (o3 == 0 && on_segment(a, c, d))
        || (o4 == 0 && on_segment(b, c, d))
}

fn segment_touches_rect(a: [f64; 2], b: [f64; 2], r: &Rect) -> bool {
    if r.contains(a) || r.contains(b) {
        return true;
    }
    let c = [[r.min[0], r.min[1]], [r.max[0], r.min[1]], [r.max[0], r.max[1]], [r.min[0], r.max[1]]];
    (0..4).any(|i| segments_cross(a, b, c[i], c[(i + 1) % 4]))
}

/// True when no polygon edge touches the closed rectangle and its centre is inside.
fn rect_inside_polygon(r: &Rect, polygon: &[[f64; 2]]) -> bool {
    let n = polygon.len();
    if (0..n).any(|i| segment_touches_rect(polygon[i], polygon[(i + 1) % n], r)) {
        return false;
    }
    point_in_polygon(r.mid(), polygon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::uniform_points;
    use proptest::prelude::*;

    fn named(pts: &[[f64; 2]]) -> Vec<(String, [f64; 2])> {
        pts.iter().enumerate().map(|(i, p)| (format!("{i:05}"), *p)).collect()
    }

    #[test]
    fn capacity_rule() {
        let four = named(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let t = Quadtree::build(&four, 4, 8).unwrap();
        assert_eq!(t.stats(), TreeStats { depth: 0, leaves: 1, internal: 0, largest_leaf: 4 });
        let five = named(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.9, 0.9]]);
        let t = Quadtree::build(&five, 4, 8).unwrap();
        let s = t.stats();
        assert_eq!((s.internal, s.leaves, s.depth), (1, 4, 1));
    }

    #[test]
    fn identical_points_overflow_one_leaf() {
        let pts = named(&vec![[3.0, 4.0]; 1000]);
        let t = Quadtree::build(&pts, 16, 8).unwrap();
        let s = t.stats();
        assert!(s.depth <= 8);
        assert_eq!(s.largest_leaf, 1000);
        assert_eq!(t.query_circle([3.0, 4.0], 0.0).len(), 1000);
    }

    #[test]
    fn rejects_bad_points() {
        assert_eq!(
            Quadtree::build(&[("7", [f64::NAN, 0.0])], 4, 4).unwrap_err(),
            SpatialError::NonFinite("7".into())
        );
        let mut t = Quadtree::with_bounds(Rect { min: [0.0, 0.0], max: [1.0, 1.0] }, 4, 4).unwrap();
        assert!(matches!(t.insert("1", [2.0, 0.5]), Err(SpatialError::OutOfBounds { .. })));
    }

    #[test]
    fn circle_examples() {
        let t = Quadtree::build(&named(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]), 1, 8).unwrap();
        assert_eq!(t.query_circle([0.0, 0.0], 1.5), vec![0, 1]);
        assert_eq!(t.query_circle([1.0, 1.0], 0.0), vec![1]);
    }

    #[test]
    fn nearest_examples() {
        let pts = vec![("9".to_string(), [1.0, 0.0]), ("2".to_string(), [-1.0, 0.0]), ("5".to_string(), [0.0, 3.0])];
        let t = Quadtree::build(&pts, 1, 8).unwrap();
        let (i, d) = t.nearest_in_radius([0.0, 0.0], 2.0).unwrap();
        assert_eq!((t.pmid(i), d), ("2", 1.0));
        assert_eq!(t.nearest_in_radius([0.0, 3.0], 0.5).map(|x| x.1), Some(0.0));
        assert!(t.nearest_in_radius([10.0, 10.0], 1.0).is_none());
    }

    #[test]
    fn polygon_examples() {
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(point_in_polygon([0.5, 0.5], &square));
        assert!(!point_in_polygon([2.0, 2.0], &square));
        assert!(point_in_polygon([1.0, 0.3], &square));
        assert!(point_in_polygon([0.0, 0.0], &square));
        let t = Quadtree::build(&named(&[[0.5, 0.5], [2.0, 2.0], [1.0, 0.5]]), 1, 8).unwrap();
        assert_eq!(t.query_polygon(&square).unwrap(), vec![0, 2]);
        assert!(t.query_polygon(&square[..2]).is_err());
    }

    #[test]
    fn self_intersecting_polygon_uses_even_odd() {
        // Pentagram: the central pentagon is covered twice and so excluded.
        let star: Vec<[f64; 2]> = (0..5)
            .map(|k| {
                let a = std::f64::consts::FRAC_PI_2 + k as f64 * 4.0 * std::f64::consts::PI / 5.0;
                [a.cos(), a.sin()]
            })
            .collect();
        assert!(!point_in_polygon([0.0, 0.0], &star));
        assert!(point_in_polygon([0.0, 0.7], &star));
    }

    #[test]
    fn pruning_keeps_distance_work_small() {
        let pts = uniform_points(10_000, 0.0, 1.0, 3);
        let t = Quadtree::build_default(&named(&pts)).unwrap();
        let centres = uniform_points(200, 0.0, 1.0, 4);
        let total: usize = centres.iter().map(|&c| t.query_circle_counted(c, 0.01).1.distance_evaluations).sum();
        assert!((total as f64 / 200.0) < 0.05 * 10_000.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn circle_matches_scan(seed in 0u64..1000, r in 0.0f64..0.3, cx in -0.1f64..1.1, cy in -0.1f64..1.1) {
            let pts = uniform_points(400, 0.0, 1.0, seed);
            let t = Quadtree::build(&named(&pts), 4, 24).unwrap();
            let expect: Vec<usize> = (0..pts.len())
                .filter(|&i| (pts[i][0] - cx).powi(2) + (pts[i][1] - cy).powi(2) <= r * r)
                .collect();
            prop_assert_eq!(t.query_circle([cx, cy], r), expect);
        }

        #[test]
        fn insertion_order_does_not_matter(seed in 0u64..1000) {
            let pts = named(&uniform_points(300, -5.0, 5.0, seed));
            let mut rev = pts.clone();
            rev.reverse();
            let a = Quadtree::build(&pts, 3, 24).unwrap();
            let b = Quadtree::build(&rev, 3, 24).unwrap();
            let ids = |t: &Quadtree, v: Vec<usize>| {
                let mut s: Vec<String> = v.into_iter().map(|i| t.pmid(i).to_string()).collect();
                s.sort();
                s
            };
            let poly = [[-3.0, -3.0], [4.0, -1.0], [0.0, 4.0]];
            prop_assert_eq!(ids(&a, a.query_circle([0.5, 0.5], 2.0)), ids(&b, b.query_circle([0.5, 0.5], 2.0)));
            prop_assert_eq!(ids(&a, a.query_polygon(&poly).unwrap()), ids(&b, b.query_polygon(&poly).unwrap()));
        }
    }
}

use super::BundlingError;

fn seg_len(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Splits every segment into `⌈len / max_segment_length⌉` equal pieces.
/// Returns the points and whether the polyline had zero total length, in
/// which case it is returned unchanged.
pub fn resample_polyline(
    points: &[[f64; 2]],
    max_segment_length: f64,
) -> Result<(Vec<[f64; 2]>, bool), BundlingError> {
    if points.len() < 2 {
        return Err(BundlingError::Contract(format!(
            "polyline needs at least 2 points, got {}",
            points.len()
        )));
    }
    if !(max_segment_length > 0.0 && max_segment_length.is_finite()) {
        return Err(BundlingError::Contract(format!(
            "max_segment_length = {max_segment_length}"
        )));
    }
    let total: f64 = points.windows(2).map(|w| seg_len(w[0], w[1])).sum();
    if total == 0.0 {
        return Ok((points.to_vec(), true));
    }
    let mut out = Vec::with_capacity(points.len());
    out.push(points[0]);
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = (seg_len(a, b) / max_segment_length).ceil().max(1.0) as usize;
        for k in 1..pieces {
            let f = k as f64 / pieces as f64;
            out.push([a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f]);
        }
        out.push(b);
    }
    Ok((out, false))
}

/// Distance from `p` to the segment `ab`.
pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return seg_len(p, a);
    }
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
    seg_len(p, [a[0] + t * dx, a[1] + t * dy])
}

/// Ramer–Douglas–Peucker simplification; endpoints are always kept.
pub fn douglas_peucker(points: &[[f64; 2]], tolerance: f64) -> Vec<[f64; 2]> {
    let n = points.len();
    if n <= 2 {
        return points.to_vec();
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0, n - 1)];
    while let Some((s, e)) = stack.pop() {
        let mut worst = (0.0, 0);
        for i in s + 1..e {
            let d = point_segment_distance(points[i], points[s], points[e]);
            if d > worst.0 {
                worst = (d, i);
            }
        }
        if worst.0 > tolerance {
            keep[worst.1] = true;
            stack.push((s, worst.1));
            stack.push((worst.1, e));
        }
    }
    points
        .iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect()
}

/// One Jacobi pass of `p_i ← p_i + λ(½(p_{i−1} + p_{i+1}) − p_i)` on
/// interior points.
pub fn laplacian_smooth(points: &mut [[f64; 2]], lambda: f64) {
    if points.len() < 3 {
        return;
    }
    let prev = points.to_vec();
    for i in 1..points.len() - 1 {
        for c in 0..2 {
            let mid = 0.5 * (prev[i - 1][c] + prev[i + 1][c]);
            points[i][c] = prev[i][c] + lambda * (mid - prev[i][c]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn resample_examples() {
        let (p, flag) = resample_polyline(&[[0.0, 0.0], [1.0, 0.0]], 0.5).unwrap();
        assert_eq!(p, vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]);
        assert!(!flag);
        let (p, _) = resample_polyline(&[[0.0, 0.0], [1.0, 0.0]], 0.3).unwrap();
        assert_eq!(p, vec![[0.0, 0.0], [0.25, 0.0], [0.5, 0.0], [0.75, 0.0], [1.0, 0.0]]);
        let fine = vec![[0.0, 0.0], [0.1, 0.1], [0.2, 0.0]];
        assert_eq!(resample_polyline(&fine, 0.5).unwrap().0, fine);
        let (p, flag) = resample_polyline(&[[2.0, 2.0], [2.0, 2.0]], 0.1).unwrap();
        assert!(flag);
        assert_eq!(p.len(), 2);
        assert!(resample_polyline(&[[0.0, 0.0]], 0.1).is_err());
    }

    #[test]
    fn dp_drops_colinear_points() {
        let line: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 2.0 * i as f64]).collect();
        assert_eq!(douglas_peucker(&line, 1e-9), vec![[0.0, 0.0], [9.0, 18.0]]);
        let bent = vec![[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]];
        assert_eq!(douglas_peucker(&bent, 0.5), bent);
        assert_eq!(douglas_peucker(&bent, 1.5).len(), 2);
    }

    #[test]
    fn smoothing_preserves_lines() {
        let mut pts = vec![[0.0, 0.0], [1.0, 1.0], [3.0, 3.0], [4.0, 4.0]];
        laplacian_smooth(&mut pts, 0.5);
        assert_eq!(pts[0], [0.0, 0.0]);
        assert_eq!(pts[3], [4.0, 4.0]);
        assert!(pts.iter().all(|p| p[0] == p[1]));
        let mut bent = vec![[0.0, 0.0], [1.0, 2.0], [2.0, 0.0]];
        laplacian_smooth(&mut bent, 0.5);
        assert_eq!(bent[1], [1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn resample_bounds_segments(
            pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 2..8),
            max in 0.05f64..10.0,
        ) {
            let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let (out, _) = resample_polyline(&pts, max).unwrap();
            prop_assert_eq!(out[0], pts[0]);
            prop_assert_eq!(*out.last().unwrap(), *pts.last().unwrap());
            for w in out.windows(2) {
                prop_assert!(seg_len(w[0], w[1]) <= max * (1.0 + 1e-9));
            }
            let (again, _) = resample_polyline(&out, max).unwrap();
            prop_assert!(again.len() >= out.len());
        }

        #[test]
        fn dp_stays_within_tolerance(
            pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..30),
            tol in 0.01f64..2.0,
        ) {
            let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let simple = douglas_peucker(&pts, tol);
            prop_assert_eq!(simple[0], pts[0]);
            prop_assert_eq!(*simple.last().unwrap(), *pts.last().unwrap());
            prop_assert!(simple.len() <= pts.len());
        }
    }
}

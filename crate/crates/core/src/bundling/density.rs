use rayon::prelude::*;

use super::BundlingError;

/// Kernel support in multiples of the bandwidth.
const SUPPORT: f64 = 3.0;
const SPLAT_CHUNK: usize = 4096;

/// Square `r × r` cells covering a rectangle; cell centres sit at
/// `origin + (i + ½)·cell`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridFrame {
    pub origin: [f64; 2],
    pub cell: f64,
    pub r: usize,
}

impl GridFrame {
    /// Frame of `r` cells per side over the rectangle `[lo, hi]`, using the longer side.
    pub fn covering(lo: [f64; 2], hi: [f64; 2], r: usize) -> Self {
        let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let side = if side > 0.0 { side } else { 1.0 };
        GridFrame {
            origin: lo,
            cell: side / r as f64,
            r,
        }
    }

    pub fn centre(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + (ix as f64 + 0.5) * self.cell,
            self.origin[1] + (iy as f64 + 0.5) * self.cell,
        ]
    }

    /// Continuous cell coordinates, centre of cell 0 at 0.
    fn to_cells(&self, p: [f64; 2]) -> [f64; 2] {
        [
            (p[0] - self.origin[0]) / self.cell - 0.5,
            (p[1] - self.origin[1]) / self.cell - 0.5,
        ]
    }
}

/// Scalar density over a [`GridFrame`], bandwidth `h` in cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub frame: GridFrame,
    pub h: f64,
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.frame.r + ix]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Central differences in map units; one-sided on the border.
    fn cell_gradient(&self, ix: usize, iy: usize) -> [f64; 2] {
        let r = self.frame.r;
        let diff = |lo: f64, hi: f64, span: f64| (hi - lo) / (span * self.frame.cell);
        let gx = match ix {
            _ if r == 1 => 0.0,
            0 => diff(self.value(0, iy), self.value(1, iy), 1.0),
            x if x == r - 1 => diff(self.value(x - 1, iy), self.value(x, iy), 1.0),
            x => diff(self.value(x - 1, iy), self.value(x + 1, iy), 2.0),
        };
        let gy = match iy {
            _ if r == 1 => 0.0,
            0 => diff(self.value(ix, 0), self.value(ix, 1), 1.0),
            y if y == r - 1 => diff(self.value(ix, y - 1), self.value(ix, y), 1.0),
            y => diff(self.value(ix, y - 1), self.value(ix, y + 1), 2.0),
        };
        [gx, gy]
    }

    /// Bilinear interpolation of the cell values at `p`.
    pub fn density_at(&self, p: [f64; 2]) -> f64 {
        let ((x0, y0, x1, y1), (fx, fy)) = self.corners(p);
        (1.0 - fy) * ((1.0 - fx) * self.value(x0, y0) + fx * self.value(x1, y0))
            + fy * ((1.0 - fx) * self.value(x0, y1) + fx * self.value(x1, y1))
    }

    fn corners(&self, p: [f64; 2]) -> ((usize, usize, usize, usize), (f64, f64)) {
        let max = (self.frame.r - 1) as f64;
        let c = self.frame.to_cells(p);
        let x = c[0].clamp(0.0, max);
        let y = c[1].clamp(0.0, max);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.frame.r - 1), (y0 + 1).min(self.frame.r - 1));
        ((x0, y0, x1, y1), (x - x0 as f64, y - y0 as f64))
    }

    /// Bilinear interpolation of the cell-centred gradient at `p`.
    pub fn gradient_at(&self, p: [f64; 2]) -> [f64; 2] {
        let ((x0, y0, x1, y1), (fx, fy)) = self.corners(p);
        let g00 = self.cell_gradient(x0, y0);
        let g10 = self.cell_gradient(x1, y0);
        let g01 = self.cell_gradient(x0, y1);
        let g11 = self.cell_gradient(x1, y1);
        let mut g = [0.0; 2];
        for k in 0..2 {
            g[k] = (1.0 - fy) * ((1.0 - fx) * g00[k] + fx * g10[k]) + fy * ((1.0 - fx) * g01[k] + fx * g11[k]);
        }
        g
    }
}

/// Adds `w · exp(−r² / 2h²)` at every cell centre within `3h` cells of each
/// weighted point. Points are processed in fixed chunks whose partial grids
/// are summed in order, so the result does not depend on thread count.
pub fn splat_density(points: &[([f64; 2], f64)], frame: &GridFrame, h: f64) -> Result<DensityGrid, BundlingError> {
    if !(h >= 0.5 && h.is_finite()) {
        return Err(BundlingError::Contract(format!("bandwidth {h} cells < 0.5")));
    }
    let r = frame.r;
    let reach = (SUPPORT * h).ceil() as i64;
    let inv = 1.0 / (2.0 * h * h);
    let partials: Vec<Vec<f64>> = points
        .par_chunks(SPLAT_CHUNK)
        .map(|chunk| {
            let mut g = vec![0.0; r * r];
            for &(p, w) in chunk {
                let c = frame.to_cells(p);
                let (cx, cy) = (c[0].round() as i64, c[1].round() as i64);
                for iy in (cy - reach).max(0)..=(cy + reach).min(r as i64 - 1) {
                    let dy = iy as f64 - c[1];
                    for ix in (cx - reach).max(0)..=(cx + reach).min(r as i64 - 1) {
                        let dx = ix as f64 - c[0];
                        let d2 = dx * dx + dy * dy;
                        if d2 <= SUPPORT * SUPPORT * h * h {
                            g[iy as usize * r + ix as usize] += w * (-d2 * inv).exp();
                        }
                    }
                }
            }
            g
        })
        .collect();
    let mut values = vec![0.0; r * r];
    for p in partials {
        values.iter_mut().zip(p).for_each(|(v, x)| *v += x);
    }
    Ok(DensityGrid {
        frame: *frame,
        h,
        values,
    })
}

/// Exact kernel sum over a point set, queried through a bucket hash whose
/// bucket side equals the kernel support.
pub struct PointField<'a> {
    points: &'a [([f64; 2], f64)],
    sigma: f64,
    origin: [f64; 2],
    side: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> PointField<'a> {
    /// `sigma` in map units; `lo`/`hi` bound every point.
    pub fn new(points: &'a [([f64; 2], f64)], sigma: f64, lo: [f64; 2], hi: [f64; 2]) -> Self {
        let side = SUPPORT * sigma;
        let nx = (((hi[0] - lo[0]) / side).floor() as usize + 1).max(1);
        let ny = (((hi[1] - lo[1]) / side).floor() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let mut field = PointField {
            points,
            sigma,
            origin: lo,
            side,
            nx,
            ny,
            buckets: Vec::new(),
        };
        for (i, &(p, _)) in points.iter().enumerate() {
            let (bx, by) = field.bucket(p);
            buckets[by * nx + bx].push(i as u32);
        }
        field.buckets = buckets;
        field
    }

    fn bucket(&self, p: [f64; 2]) -> (usize, usize) {
        let bx = ((p[0] - self.origin[0]) / self.side).floor().max(0.0) as usize;
        let by = ((p[1] - self.origin[1]) / self.side).floor().max(0.0) as usize;
        (bx.min(self.nx - 1), by.min(self.ny - 1))
    }

    /// `∇D(p) = Σ w exp(−d²/2σ²)(q − p)/σ²` over points within `3σ`.
    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        self.evaluate(p).1
    }

    pub fn density(&self, p: [f64; 2]) -> f64 {
        self.evaluate(p).0
    }

    /// Density and gradient in one pass.
    pub fn evaluate(&self, p: [f64; 2]) -> (f64, [f64; 2]) {
        let (bx, by) = self.bucket(p);
        let s2 = self.sigma * self.sigma;
        let cutoff = SUPPORT * SUPPORT * s2;
        let mut d = 0.0;
        let mut g = [0.0; 2];
        for y in by.saturating_sub(1)..=(by + 1).min(self.ny - 1) {
            for x in bx.saturating_sub(1)..=(bx + 1).min(self.nx - 1) {
                for &qi in &self.buckets[y * self.nx + x] {
                    let (q, w) = self.points[qi as usize];
                    let dx = q[0] - p[0];
                    let dy = q[1] - p[1];
                    let d2 = dx * dx + dy * dy;
                    if d2 <= cutoff {
                        let e = w * (-d2 / (2.0 * s2)).exp();
                        d += e;
                        g[0] += e * dx / s2;
                        g[1] += e * dy / s2;
                    }
                }
            }
        }
        (d, g)
    }
}

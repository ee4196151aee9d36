//! Kernel-density edge bundling of citation and co-citation links.

mod cocitation;
mod density;
mod geometry;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cocitation::{citation_edges, co_citation_edges};
pub use density::{splat_density, DensityGrid, GridFrame, PointField};
pub use geometry::{douglas_peucker, laplacian_smooth, point_segment_distance, resample_polyline};

/// The step regulariser is `EPS_DENSITY_FRACTION · D(p) / σ`. Near a density
/// ridge the normalised step then shrinks in proportion to the gradient
/// instead of jumping a full step across it.
const EPS_DENSITY_FRACTION: f64 = 0.5;

#[derive(Debug, Error)]
pub enum BundlingError {
    #[error("invalid argument: {0}")]
    Contract(String),
    #[error("edge {source_pmid}->{target_pmid}: {message}")]
    Edge {
        source_pmid: String,
        target_pmid: String,
        message: String,
    },
    #[error("non-finite point on edge {edge} at iteration {iteration}")]
    NonFinite { edge: usize, iteration: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEdge {
    pub source: String,
    pub target: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundledEdge {
    pub source: String,
    pub target: String,
    pub weight: f64,
    pub points: Vec<[f64; 2]>,
    /// Set when both endpoints coincide; such edges are not bundled.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

/// How the density gradient is evaluated at each control point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientMode {
    /// Exact kernel sum over neighbouring control points.
    Analytic,
    /// Central differences on the splatted grid, bilinearly interpolated.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleConfig {
    /// Grid cells per side.
    pub resolution: usize,
    /// Initial bandwidth as a fraction of the map's bounding-box diagonal.
    pub h0_fraction: f64,
    pub decay: f64,
    pub iterations: usize,
    /// Advection step as a fraction of the current bandwidth.
    pub step: f64,
    pub smoothing: f64,
    /// Resampling length as a fraction of the bounding-box diagonal.
    pub max_segment_fraction: f64,
    pub gradient: GradientMode,
}

impl Default for BundleConfig {
    fn default() -> Self {
        BundleConfig {
            resolution: 256,
            h0_fraction: 0.05,
            decay: 0.9,
            iterations: 10,
            step: 0.3,
            smoothing: 0.5,
            max_segment_fraction: 0.02,
            gradient: GradientMode::Analytic,
        }
    }
}

impl BundleConfig {
    fn validate(&self) -> Result<(), BundlingError> {
        let positive = [
            ("h0_fraction", self.h0_fraction),
            ("decay", self.decay),
            ("step", self.step),
            ("smoothing", self.smoothing),
            ("max_segment_fraction", self.max_segment_fraction),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BundlingError::Contract(format!("{name} = {v}")));
            }
        }
        if self.resolution < 2 {
            return Err(BundlingError::Contract(format!("resolution = {}", self.resolution)));
        }
        if self.smoothing > 1.0 {
            return Err(BundlingError::Contract(format!("smoothing = {} > 1", self.smoothing)));
        }
        Ok(())
    }
}

/// Geometry derived from the map extent and the configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleFrame {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub grid: GridFrame,
    /// Initial bandwidth in cells.
    pub h0: f64,
    pub max_segment_length: f64,
}

impl BundleFrame {
    pub fn new(coords: impl IntoIterator<Item = [f64; 2]>, config: &BundleConfig) -> Option<Self> {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in coords {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if !lo[0].is_finite() {
            return None;
        }
        let diag = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
        let diag = if diag > 0.0 { diag } else { 1.0 };
        let h0_map = config.h0_fraction * diag;
        let pad = 3.0 * h0_map;
        let lo = [lo[0] - pad, lo[1] - pad];
        let hi = [hi[0] + pad, hi[1] + pad];
        let grid = GridFrame::covering(lo, hi, config.resolution);
        Some(BundleFrame {
            lo,
            hi,
            grid,
            h0: h0_map / grid.cell,
            max_segment_length: config.max_segment_fraction * diag,
        })
    }

    fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(self.lo[0], self.hi[0]), p[1].clamp(self.lo[1], self.hi[1])]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleResult {
    /// In input order.
    pub edges: Vec<BundledEdge>,
    pub frame: Option<BundleFrame>,
    /// Segments after the final iteration, before simplification.
    pub unsimplified_segments: usize,
    pub simplified_segments: usize,
}

/// Bundles `raw` edges drawn between article coordinates.
///
/// Each iteration resamples every polyline, builds the kernel density of all
/// interior control points, moves each interior point up the density
/// gradient by at most one cell, applies one Laplacian smoothing pass and
/// narrows the bandwidth. Polylines are then simplified with a quarter-cell
/// Douglas–Peucker tolerance. Endpoints are never moved. Work is done in a
/// canonical edge order, so the result does not depend on input order.
pub fn bundle_edges(
    raw: &[RawEdge],
    coords: &HashMap<String, [f64; 2]>,
    config: &BundleConfig,
) -> Result<BundleResult, BundlingError> {
    config.validate()?;
    let Some(frame) = BundleFrame::new(coords.values().copied(), config) else {
        if raw.is_empty() {
            return Ok(BundleResult {
                edges: Vec::new(),
                frame: None,
                unsimplified_segments: 0,
                simplified_segments: 0,
            });
        }
        return Err(BundlingError::Contract("edges given without coordinates".into()));
    };

    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&raw[a], &raw[b]);
        x.source
            .cmp(&y.source)
            .then_with(|| x.target.cmp(&y.target))
            .then_with(|| x.weight.total_cmp(&y.weight))
    });

    let mut lines: Vec<Vec<[f64; 2]>> = Vec::with_capacity(raw.len());
    let mut degenerate = Vec::with_capacity(raw.len());
    let mut weights = Vec::with_capacity(raw.len());
    for &i in &order {
        let e = &raw[i];
        let err = |message: String| BundlingError::Edge {
            source_pmid: e.source.clone(),
            target_pmid: e.target.clone(),
            message,
        };
        if e.source == e.target {
            return Err(err("self-loop".into()));
        }
        if !(e.weight > 0.0 && e.weight.is_finite()) {
            return Err(err(format!("weight {}", e.weight)));
        }
        let a = *coords.get(&e.source).ok_or_else(|| err("unknown source".into()))?;
        let b = *coords.get(&e.target).ok_or_else(|| err("unknown target".into()))?;
        degenerate.push(a == b);
        lines.push(vec![a, b]);
        weights.push(e.weight);
    }

    let mut h = frame.h0;
    for iteration in 0..config.iterations {
        for (line, &deg) in lines.iter_mut().zip(&degenerate) {
            if !deg {
                *line = resample_polyline(line, frame.max_segment_length)?.0;
            }
        }
        let samples: Vec<([f64; 2], f64)> = lines
            .iter()
            .zip(&weights)
            .filter(|(l, _)| l.len() > 2)
            .flat_map(|(l, &w)| l[1..l.len() - 1].iter().map(move |&p| (p, w)))
            .collect();
        if samples.is_empty() {
            break;
        }
        let sigma = h * frame.grid.cell;
        let grid = match config.gradient {
            GradientMode::Grid => Some(splat_density(&samples, &frame.grid, h.max(0.5))?),
            GradientMode::Analytic => None,
        };
        let field = PointField::new(&samples, sigma, frame.lo, frame.hi);
        let evaluate = |p: [f64; 2]| match &grid {
            Some(g) => (g.density_at(p), g.gradient_at(p)),
            None => field.evaluate(p),
        };
        let reach = config.step * h * frame.grid.cell;
        let cap = frame.grid.cell;
        let moves: Vec<Vec<[f64; 2]>> = lines
            .par_iter()
            .map(|l| {
                if l.len() <= 2 {
                    return Vec::new();
                }
                l[1..l.len() - 1]
                    .iter()
                    .map(|&p| {
                        let (d, g) = evaluate(p);
                        let eps = EPS_DENSITY_FRACTION * d / sigma + f64::MIN_POSITIVE;
                        let norm = g[0].hypot(g[1]);
                        let mut m = [reach * g[0] / (norm + eps), reach * g[1] / (norm + eps)];
                        let len = m[0].hypot(m[1]);
                        if len > cap {
                            m = [m[0] * cap / len, m[1] * cap / len];
                        }
                        m
                    })
                    .collect()
            })
            .collect();
        for (line, m) in lines.iter_mut().zip(&moves) {
            for (p, m) in line[1..].iter_mut().zip(m) {
                *p = frame.clamp([p[0] + m[0], p[1] + m[1]]);
            }
        }
        for (k, line) in lines.iter_mut().enumerate() {
            laplacian_smooth(line, config.smoothing);
            if line.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
                return Err(BundlingError::NonFinite {
                    edge: order[k],
                    iteration,
                });
            }
        }
        h *= config.decay;
    }

    let tolerance = 0.25 * frame.grid.cell;
    let unsimplified_segments = lines.iter().map(|l| l.len() - 1).sum();
    let simplified: Vec<Vec<[f64; 2]>> = lines.par_iter().map(|l| douglas_peucker(l, tolerance)).collect();
    let simplified_segments = simplified.iter().map(|l| l.len() - 1).sum();

    let mut edges: Vec<Option<BundledEdge>> = vec![None; raw.len()];
    for ((points, deg), &i) in simplified.into_iter().zip(degenerate).zip(&order) {
        let e = &raw[i];
        edges[i] = Some(BundledEdge {
            source: e.source.clone(),
            target: e.target.clone(),
            weight: e.weight,
            points,
            degenerate: deg,
        });
    }
    Ok(BundleResult {
        edges: edges.into_iter().map(|e| e.expect("every edge placed")).collect(),
        frame: Some(frame),
        unsimplified_segments,
        simplified_segments,
    })
}

pub fn edges_to_json(edges: &[BundledEdge]) -> String {
    serde_json::to_string(edges).expect("edges serialise")
}

pub fn edges_from_json(s: &str) -> Result<Vec<BundledEdge>, serde_json::Error> {
    serde_json::from_str(s)
}

//! Bundles edges between two point groups and writes the result as SVG.
//!
//! cargo run --example edge_bundling -- [OUT.svg]

use std::collections::HashMap;
use std::fmt::Write as _;

use litmap::bundling::{bundle_edges, BundleConfig, RawEdge};
use litmap::synth::planar_blobs;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "bundles.svg".into());
    let (points, groups) = planar_blobs(&[(10.0, 50.0, 6.0, 40), (90.0, 50.0, 6.0, 40)], 11);
    let coords: HashMap<String, [f64; 2]> = points.iter().enumerate().map(|(i, p)| (format!("{i:03}"), *p)).collect();
    let left: Vec<usize> = (0..points.len()).filter(|&i| groups[i] == 0).collect();
    let right: Vec<usize> = (0..points.len()).filter(|&i| groups[i] == 1).collect();
    let edges: Vec<RawEdge> = left
        .iter()
        .zip(right.iter().rev())
        .map(|(a, b)| RawEdge { source: format!("{a:03}"), target: format!("{b:03}"), weight: 1.0 })
        .collect();

    let result = bundle_edges(&edges, &coords, &BundleConfig::default())?;
    println!(
        "{} edges, {} resampled segments, {} after simplification",
        result.edges.len(),
        result.unsimplified_segments,
        result.simplified_segments
    );

    let mut svg = String::from(r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="-10 20 120 60">"#);
    for e in &result.edges {
        let pts: Vec<String> = e.points.iter().map(|p| format!("{:.3},{:.3}", p[0], p[1])).collect();
        write!(svg, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="0.15" stroke-opacity="0.6"/>"#, pts.join(" "))?;
    }
    for p in &points {
        write!(svg, r#"<circle cx="{:.3}" cy="{:.3}" r="0.4" fill="black"/>"#, p[0], p[1])?;
    }
    svg.push_str("</svg>\n");
    std::fs::write(&out, svg)?;
    println!("wrote {out}");
    Ok(())
}

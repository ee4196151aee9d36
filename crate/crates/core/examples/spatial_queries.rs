//! Hover, circle and lasso queries against the quadtree.

use litmap::spatial::Quadtree;
use litmap::synth::uniform_points;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pts = uniform_points(50_000, 0.0, 100.0, 3);
    let named: Vec<(String, [f64; 2])> = pts.iter().enumerate().map(|(i, p)| (format!("{}", 1_000_000 + i), *p)).collect();
    let tree = Quadtree::build_default(&named)?;
    let s = tree.stats();
    println!("{} points, depth {}, {} leaves", tree.len(), s.depth, s.leaves);

    if let Some((i, d)) = tree.nearest_in_radius([50.0, 50.0], 0.5) {
        println!("hover at (50, 50): pmid {} at distance {d:.4}", tree.pmid(i));
    }
    let (hits, stats) = tree.query_circle_counted([20.0, 70.0], 3.0);
    println!(
        "circle r=3: {} points, {} distance evaluations over {} nodes",
        hits.len(),
        stats.distance_evaluations,
        stats.nodes_visited
    );
    let lasso = [[10.0, 10.0], [40.0, 12.0], [30.0, 25.0], [35.0, 40.0], [12.0, 30.0]];
    let (hits, stats) = tree.query_polygon_counted(&lasso)?;
    println!("lasso: {} points, {} point-in-polygon tests", hits.len(), stats.distance_evaluations);
    Ok(())
}

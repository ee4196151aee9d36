//! Builds a two-level cluster tree over four sub-blobs arranged in two pairs.

use litmap::clustering::{build_hierarchy, LevelParams};
use litmap::synth::planar_blobs;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = [
        (0.0, 0.0, 0.4, 60),
        (3.0, 0.0, 0.4, 60),
        (30.0, 0.0, 0.4, 60),
        (33.0, 0.0, 0.4, 60),
    ];
    let (points, _) = planar_blobs(&spec, 5);
    let pmids: Vec<String> = (0..points.len()).map(|i| format!("{:05}", i + 1)).collect();
    let schedule = [
        LevelParams { min_cluster_size: 10, min_samples: 5 },
        LevelParams { min_cluster_size: 80, min_samples: 5 },
    ];
    let tree = build_hierarchy(&points, &pmids, &schedule, 0.6)?;
    for n in &tree.nodes {
        let parent = n.parent_id.map_or("root".to_string(), |p| format!("parent {p}"));
        println!(
            "cluster {:>2}  level {}  {:>3} members  stability {:>8.3}  {parent}",
            n.cluster_id,
            n.level,
            n.member_pmids.len(),
            n.stability
        );
    }
    Ok(())
}

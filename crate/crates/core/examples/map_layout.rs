//! Lays out planted high-dimensional blobs with LargeVis and exact t-SNE
//! and reports how well each keeps blob neighbourhoods.

use litmap::layout::{build_knn_graph, fit_largevis, fit_tsne_exact, knn_label_purity, LargeVisConfig, TsneConfig};
use litmap::synth::planted_blobs;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (matrix, labels) = planted_blobs(5, 120, 50, 3.0, 1);
    let graph = build_knn_graph(&matrix, 15, 5.0)?;
    let lv = fit_largevis(&graph, 42, &LargeVisConfig::default())?;
    println!(
        "largevis: objective {:.4}, 10-NN purity {:.3}",
        lv.final_objective,
        knn_label_purity(&lv.coordinates, &labels, 10)
    );
    let ts = fit_tsne_exact(&matrix, 30.0, 42, &TsneConfig::default())?;
    println!(
        "t-SNE:    KL {:.4}, 10-NN purity {:.3}",
        ts.final_objective,
        knn_label_purity(&ts.coordinates, &labels, 10)
    );
    Ok(())
}

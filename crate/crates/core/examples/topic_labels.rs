//! Labels a small cluster tree with c-TF-IDF at the roots and sibling-local
//! tree TF-IDF below them.

use litmap::labeling::label_tree;
use litmap::synth::sibling_corpus;

fn main() {
    let (articles, mut tree) = sibling_corpus(12, 3);
    for l in label_tree(&mut tree, &articles, 3) {
        let node = &tree.nodes[l.cluster_id as usize];
        let scores: Vec<String> = l.terms.iter().map(|t| format!("{}={:.2}", t.term, t.score)).collect();
        println!("cluster {} (level {}): {}    [{}]", l.cluster_id, node.level, l.label, scores.join(" "));
    }
}

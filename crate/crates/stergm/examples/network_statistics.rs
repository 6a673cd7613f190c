//! The change statistics that drive the models, computed on a small
//! hand-checkable network: degree shares, the lagged mutual-tie indicator,
//! directed two-paths, shared suppliers and the whole-network summaries.

use stergm::network::Network;
use stergm::stats::{
    global_stats, outdegree, reciprocity, shared_suppliers, transitivity_stat,
};

fn main() -> stergm::Result<()> {
    // five actors; edges: 0->1, 1->0, 0->2, 2->1, 3->0, 3->1, 3->4
    let net = Network::from_edges(
        vec![0, 1, 2, 3, 4],
        &[(0, 1), (1, 0), (0, 2), (2, 1), (3, 0), (3, 1), (3, 4)],
    );

    println!("actor  outdegree%");
    for i in 0..5 {
        println!("{i:>5}  {:>8.2}", outdegree(&net, i)?);
    }

    println!("\ndyad (0,1):");
    println!("  reciprocity      = {}", reciprocity(&net, 0, 1)?);
    println!("  two-paths%       = {:.2}", transitivity_stat(&net, 0, 1)?);
    println!("  shared suppliers% = {:.2}", shared_suppliers(&net, 0, 1)?);

    // 0 -> 2 -> 1 is the single directed two-path from 0 to 1, and actor 3
    // supplies both 0 and 1
    assert_eq!(transitivity_stat(&net, 0, 1)?, 100.0 / 3.0);
    assert_eq!(shared_suppliers(&net, 0, 1)?, 100.0 / 3.0);

    let s = global_stats(&net)?;
    println!("\nglobal statistics:");
    println!("  size          = {}", s.size);
    println!("  order         = {}", s.order);
    println!("  density       = {:.4}", s.density);
    println!("  mean indegree = {:.4}", s.mean_indegree);
    println!("  reciprocity   = {:.4}", s.reciprocity);
    println!("  transitivity  = {:.4}", s.transitivity);
    Ok(())
}

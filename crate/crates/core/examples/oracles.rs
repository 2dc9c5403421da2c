//! Brute-force cross-checks on a dense truncation: stationary vectors by
//! determinants and by elimination, spanning trees and path enumeration.

use std::collections::HashSet;

use treechain::oracle::{enumerate_paths, spanning_tree_enumeration, spanning_tree_weight, stationary_by_determinants, stationary_by_solve, DenseChain, PathQuery};
use treechain::fixtures::star4;
use treechain::tree::truncate;
use treechain::{Scalar, Q};

fn main() -> treechain::Result<()> {
    let k = star4::<Q>();
    let chain = DenseChain::from_kernel(&k, &truncate(k.tree(), 1)?);
    let a = stationary_by_determinants(&chain)?;
    let b = stationary_by_solve(&chain)?;
    assert_eq!(a, b);
    println!("stationary: {}", a.iter().map(|v| v.render()).collect::<Vec<_>>().join(" "));

    let m = treechain::fixtures::star4_matrix::<Q>();
    println!(
        "root spanning-tree weight: {} (matrix-tree) = {} (enumeration)",
        spanning_tree_weight(&m, 0).render(),
        spanning_tree_enumeration(&m, 0)?.render()
    );

    let q = PathQuery { start: 0, end: 0, max_length: Some(6), forbidden: HashSet::new(), first_hit: false };
    let by_length = enumerate_paths(&chain, &q)?;
    for (n, w) in by_length.iter().enumerate() {
        println!("  closed paths of length {n}: {}", w.render());
    }
    Ok(())
}

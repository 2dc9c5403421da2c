//! Invariant measure of a four-node star, computed two ways, plus the
//! stationary law of a birth-death chain on a truncated half-line.

use treechain::fixtures::star4;
use treechain::invariant::{h_invariant_det_all, h_invariant_leaf_addition, level_sums};
use treechain::scalar::q;
use treechain::tree::truncate;
use treechain::{Kernel, Scalar, TreeSource, Q};

fn main() -> treechain::Result<()> {
    let k = star4::<Q>();
    let trunc = truncate(k.tree(), 1)?;
    let by_det = h_invariant_det_all(&k, &trunc, &Q::from_int(1), 1)?;
    let by_leaves = h_invariant_leaf_addition(&k, trunc.nodes())?;
    assert_eq!(by_det, by_leaves);
    println!("star4, normalised:");
    for (u, v) in by_det.normalized_total().iter() {
        println!("  {u}  {}", v.render());
    }

    // Up 1/3, down 2/3: π(n) = 2^-n, so the total mass is 2.
    let bd = Kernel::birth_death(q(1, 3), q(2, 3));
    let line = truncate(&TreeSource::line(), 6)?;
    let m = h_invariant_det_all(&bd, &line, &Q::from_int(1), 1)?;
    println!("birth-death, root value 1:");
    for (u, v) in m.iter() {
        println!("  depth {}  {}", u.depth(), v.render());
    }
    let sums = level_sums(&bd, 40, 1 << 10)?;
    let mass = sums.iter().fold(Q::from_int(0), |a, s| a + s.clone());
    println!("mass up to depth 40: {:.12}", mass.to_f64());
    Ok(())
}

//! The binary tree as the positive rationals, and a walk on it that keeps
//! coming back to 1/1.

use treechain::sternbrocot::{return_count, sb_decode, sb_encode, simulate_sb, PosRational, SbConfig, TransitionFamily};
use treechain::NodeWord;

fn main() -> treechain::Result<()> {
    for w in ["∅", "0", "1", "0.1.1", "1.0.0.1"] {
        let u: NodeWord = w.parse()?;
        let x = sb_encode(&u)?;
        assert_eq!(sb_decode(&x), u);
        println!("{w:>8} <-> {x}");
    }

    let family = TransitionFamily::constant(0.25, 0.25, 0.5)?;
    let start = PosRational::from_u64(7, 5)?;
    let run = simulate_sb(&family, &start, &SbConfig { steps: 20_000, seed: 1, ..SbConfig::default() });
    println!("from {start}: first return {:?}, {} visits to 1/1", run.first_return, run.visits_to_root);
    let n = return_count(&family, &start, 100_000, 0..200);
    println!("{n}/200 seeds return within 10^5 steps");
    Ok(())
}

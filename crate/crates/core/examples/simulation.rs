//! Seeded trajectories: the height drift of a transient walk on the binary
//! tree and return times of a recurrent one on the star.

use treechain::fixtures::{star4, transient_binary_walk};
use treechain::oracle::simulate;
use treechain::NodeWord;

fn main() {
    let s = simulate(&transient_binary_walk::<f64>(), &NodeWord::root(), 1_000_000, 55);
    println!(
        "binary walk: drift {:.5} ± {:.5} (exact 5/23 = {:.5}), height {} after {} steps",
        s.increment_mean(),
        s.increment_standard_error(),
        5.0 / 23.0,
        s.final_node.depth(),
        s.steps
    );

    let s = simulate(&star4::<f64>(), &NodeWord::root(), 100_000, 1);
    let mean = s.return_times.iter().sum::<u64>() as f64 / s.return_times.len() as f64;
    println!("star4: mean return time to the root {mean:.3} (1/π(∅) = {:.3})", 77.0 / 20.0);
    for (u, n) in &s.occupancy {
        println!("  {u}: {:.4}", *n as f64 / (s.steps + 1) as f64);
    }
}

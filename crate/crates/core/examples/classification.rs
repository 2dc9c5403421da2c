//! Recurrence and positive recurrence verdicts, including the end-by-end
//! analysis of a walk on two rays.

use treechain::classify::{classify_by_ends, classify_positive_recurrence, classify_recurrence, PositiveConfig, RecurrenceConfig};
use treechain::fixtures::{biased_z_walk, transient_binary_walk};
use treechain::Kernel;

fn main() -> treechain::Result<()> {
    let rec = RecurrenceConfig::default();
    let pos = PositiveConfig::default();
    for down in [0.7, 0.5, 0.3] {
        let k = Kernel::birth_death(1.0 - down, down);
        let r = classify_recurrence(&k, &rec);
        let p = classify_positive_recurrence(&k, &pos);
        println!("line, down {down}: {:?} / {:?}", r.outcome, p.outcome);
    }

    let z = biased_z_walk(2.0 / 3.0);
    let v = classify_by_ends(&z, &rec, &pos)?;
    println!("two rays: {:?}", v.outcome);
    for (end, part) in &v.parts {
        println!("  end {end}: {:?}", part.outcome);
    }

    let b = transient_binary_walk::<f64>();
    println!("binary walk: {:?}", classify_recurrence(&b, &rec).outcome);
    Ok(())
}

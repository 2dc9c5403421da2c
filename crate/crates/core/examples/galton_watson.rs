//! Walks on Galton-Watson trees: the classifier for two parameter sets and
//! a Monte Carlo estimate of the mass decay along the spine.

use treechain::gw::{gw_classifier, monte_carlo, KestenConfig, OffspringLaw};
use treechain::kernel::HomogeneousParams;
use treechain::scalar::q;

fn main() -> treechain::Result<()> {
    let law = OffspringLaw::new(vec![q(1, 2), q(0, 1), q(1, 2)])?;
    for (f, g) in [(0.5, 0.25), (0.25, 0.375)] {
        let params = HomogeneousParams { f: vec![f; 3], g: vec![g; 3] };
        let v = gw_classifier(&law, &params)?;
        println!("F={f} G={g}: f={:.4} m={:.4} L={:.4} -> {:?}", v.f, v.m, v.l, v.verdict.outcome);
    }

    let params = HomogeneousParams { f: vec![0.5; 3], g: vec![0.25; 3] };
    let mc = monte_carlo(&law, &params, 40, 150, 6, &KestenConfig::default())?;
    println!(
        "{} samples, spine {}: log pi slope {:.4}, log increment slope {:.4} (ln 1/2 = {:.4})",
        mc.samples,
        mc.spine_length,
        mc.log_pi_slope,
        mc.log_increment_slope,
        0.5f64.ln()
    );
    Ok(())
}

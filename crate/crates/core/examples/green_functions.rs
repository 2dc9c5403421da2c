//! Green functions as continued fractions: Dyck paths on the line, the
//! Catalan series and the star at x = 1/2.

use treechain::contfrac::{cf_convergent, golden_ratio, green_aud, green_aud_series, GreenConfig, LineWeights};
use treechain::fixtures::star4;
use treechain::scalar::q;
use treechain::{NodeWord, Scalar, Q};

fn main() -> treechain::Result<()> {
    for x in [0.1, 0.25, 0.4] {
        let c = cf_convergent(&LineWeights::dyck(x), 200)?;
        let closed = (1.0 - (1.0 - 4.0 * x * x).sqrt()) / (2.0 * x * x);
        println!("dyck x={x}: {:.15} (closed form {:.15})", c.value, closed);
    }

    let (cf, radical) = golden_ratio(40)?;
    println!("golden ratio: {cf} as a fraction, {radical} as a radical");

    let k = star4::<Q>();
    let cfg = GreenConfig::default();
    let g = green_aud(&k, &NodeWord::root(), &q(1, 2), &cfg)?;
    println!("star4 G(1/2) = {}, first return {}", g.value.render(), g.first_return.render());
    let s = green_aud_series(&k, &NodeWord::root(), 6, &cfg)?;
    let coeffs: Vec<String> = s.coeffs().iter().map(|c| c.render()).collect();
    println!("star4 series: {}", coeffs.join(", "));
    Ok(())
}

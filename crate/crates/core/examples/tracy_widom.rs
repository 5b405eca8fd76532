//! GUE and GOE Tracy-Widom distributions by Nyström discretization.
use halfflat::airy::{tw1_cdf, tw2_cdf, FredholmQuad};

fn main() -> halfflat::Result<()> {
    let coarse = FredholmQuad::default();
    let fine = FredholmQuad { n_nodes: 80, ..coarse };
    for s in [-3.0, -1.77, -1.27, 0.0, 1.0] {
        println!(
            "s = {s:>5}: F2 {:.12} (80 nodes {:.12})  F1 {:.12}",
            tw2_cdf(s, &coarse)?,
            tw2_cdf(s, &fine)?,
            tw1_cdf(s, &coarse)?
        );
    }
    Ok(())
}

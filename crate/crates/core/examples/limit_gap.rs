//! Prelimit CDF against the Airy2->1 target along a short t grid, with a
//! Monte Carlo column.
use halfflat::harness::{limit_gap, LimitConfig};

fn main() -> halfflat::Result<()> {
    let cfg = LimitConfig { t_grid: vec![10.0, 20.0], mc_paths: 5_000, ..LimitConfig::default() };
    let rep = limit_gap(0.0, 0.0, &cfg)?;
    println!("target G = {:.6}", rep.target.cdf);
    for r in &rep.rows {
        let mc = r.mc.expect("simulated");
        println!("t = {:>4}: prelimit {:.6}, mc {:.4} +- {:.4}, gap {:.4}", r.t, r.prelimit, mc.mean, mc.stderr, r.gap);
    }
    println!("gap nonincreasing: {}", rep.nonincreasing);
    Ok(())
}

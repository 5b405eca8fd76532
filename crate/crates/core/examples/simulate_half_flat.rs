//! A few half-flat ASEP trajectories: height profile and snapshot export.
use halfflat::asep_sim::*;

fn main() -> halfflat::Result<()> {
    let params = AsepParams::from_tau(0.25)?;
    let t = 20.0;
    let start = init_half_flat(SimWindow::default_for_time(t));
    let s = simulate_to(&start, t, &params, 7);
    print!("h(t, x) for x = -30..30 step 5:");
    for x in (-30..=30).step_by(5) {
        print!(" {}", s.height(x)?);
    }
    println!();
    assert_eq!(s.height(10)?, s.height_from_flux(10)?);

    let mut buf = Vec::new();
    write_snapshots(&mut buf, &[s.snapshot()])?;
    println!("snapshot: {} bytes of JSON lines", buf.len());

    let mean_n0 = mc_expectation(|s| s.particle_count(0).unwrap() as f64, t, &params, start.window(), 2000, 1)?;
    println!("E[N_0({t})] ~ {:.3} +- {:.3}", mean_n0.mean, mean_n0.stderr);
    Ok(())
}

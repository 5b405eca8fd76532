//! Exact moments E[tau^{m N_x(t)}] from the contour formula against simulation.
use halfflat::asep_sim::*;
use halfflat::exact_series::{moment, MomentQuad};

fn main() -> halfflat::Result<()> {
    let params = AsepParams::from_tau(0.005)?;
    let (t, x) = (4.0, 0);
    let window = SimWindow::default_for_time(t);
    for m in 1..=2u32 {
        let exact = moment(m, t, x, &params, &MomentQuad::default())?;
        let mc = mc_expectation(
            |s| params.tau.powi((m as u64 * s.particle_count(x).unwrap()) as i32),
            t,
            &params,
            window,
            50_000,
            11,
        )?;
        println!("m = {m}: exact {exact:.6}, Monte Carlo {:.6} +- {:.6}", mc.mean, mc.stderr);
    }
    Ok(())
}

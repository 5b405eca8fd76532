//! The tau-Laplace series on the circles (path A) and on the steepest-descent
//! contours (path B) at one scaled point.
use halfflat::asep_sim::AsepParams;
use halfflat::exact_series::{tau_laplace, Path, SeriesQuad};
use halfflat::harness::ScaledQuery;

fn main() -> halfflat::Result<()> {
    let params = AsepParams::from_tau(0.005)?;
    let sq = ScaledQuery::new(12.0, 0.0, 0.0)?;
    let quad = SeriesQuad::default();
    for (path, kmax) in [(Path::A, 2), (Path::B, 2), (Path::B, 4)] {
        let r = tau_laplace(&sq.log_zeta(&params), sq.time(&params), sq.x(), &params, kmax, &quad, path)?;
        let terms: Vec<String> = r.terms.iter().map(|t| format!("{:.10e}", t.re)).collect();
        println!("{path:?} k <= {kmax}: total {:.10}  terms [{}]", r.total, terms.join(", "));
    }
    Ok(())
}

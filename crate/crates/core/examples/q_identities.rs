//! q-Pochhammer, q-exponential and the Cauchy determinants.
use halfflat::qmath::*;
use num_complex::Complex64;

fn main() -> halfflat::Result<()> {
    let tau = QReal::new(0.3)?;
    let policy = TruncationPolicy::default();
    let a = Complex64::new(0.4, 0.1);
    println!("(a; tau)_inf        = {}", qpochhammer(a, tau, &policy)?);
    println!("(1-a)(a tau; tau)   = {}", (1.0 - a) * qpochhammer(a * 0.3, tau, &policy)?);
    println!("[5]_tau!            = {}", qfactorial(5, tau));

    let x = Complex64::new(0.3, 0.2);
    let p = qexp(x, tau, QExpMode::Product, &policy)?;
    let s = qexp(x, tau, QExpMode::Series, &policy)?;
    println!("e_tau(x): product {p}, series {s}");

    let xs: Vec<Complex64> = (0..4).map(|i| Complex64::from_polar(0.7, 1.3 * i as f64)).collect();
    let ys: Vec<Complex64> = (0..4).map(|i| Complex64::from_polar(0.4, 0.5 + 1.7 * i as f64)).collect();
    let m = ComplexMatrix::from_fn(4, |i, j| ((xs[i] - ys[j]) * (1.0 - xs[i] * ys[j])).inv())?;
    println!("double Cauchy: LU {} closed form {}", det_complex(&m), cauchy_closed_form(&xs, &ys, CauchyVariant::Double)?);
    println!("Hadamard bound {:.4}", hadamard_bound(&m));
    Ok(())
}

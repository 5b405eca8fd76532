//! The Airy2->1 one-point CDF at a few times, next to its Tracy-Widom limits.
use halfflat::airy::*;

fn main() -> halfflat::Result<()> {
    let quad = AiryQuad::default();
    let fq = FredholmQuad::default();
    println!("{:>5} {:>5} {:>10} {:>10} {:>10}", "t1", "y", "G", "F1(4^1/3 y~)", "F2(y)");
    for t1 in [-4.0, 0.0, 2.0] {
        for y in [-2.0, -1.0, 0.0, 1.0] {
            let q = Airy21Query::new(t1, y)?;
            let g = airy21_cdf(&q, usize::MAX, &quad)?;
            let s1 = 4f64.cbrt() * q.y_tilde();
            let f1 = if s1 >= -10.0 { tw1_cdf(s1, &fq)? } else { 0.0 };
            println!("{t1:>5} {y:>5} {:>10.6} {f1:>10.6} {:>10.6}", g.cdf, tw2_cdf(y, &fq)?);
        }
    }
    Ok(())
}

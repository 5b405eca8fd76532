//! Tensor, Fredholm and sampled evaluation of the 2k-fold series integrals.
//!
//! Both contour parametrizations reduce to the same shape after the double
//! Cauchy identity:
//!
//! `H_k = (1/k!) sum_{i,j} prod_a P[i_a][j_a] det[C[i_a][j_b]] prod_{a<b} Q`
//!
//! with `Q = X[i_a][i_b] Y[j_a][j_b] / (Z[j_a][i_b] Z[j_b][i_a])`, where `P`
//! carries the one-pair factors together with the quadrature weights and the
//! `(2 pi i)^{-2}` normalization, `C` is the double Cauchy entry, and `X, Y, Z`
//! are tau-shifted q-Pochhammer tables close to one.

use num_complex::Complex64;
use rand::Rng;

use crate::fredholm::elementary_by_traces;
use crate::par;
use crate::qmath::small_det;
use crate::rng;

#[derive(Debug, Clone)]
pub(crate) struct PairTables {
    pub nw: usize,
    pub nz: usize,
    /// `nw x nz`
    pub p: Vec<Complex64>,
    /// `nw x nz`
    pub c: Vec<Complex64>,
    /// `nw x nw`
    pub x: Vec<Complex64>,
    /// `nz x nz`
    pub y: Vec<Complex64>,
    /// `nz x nw`, reciprocal of `Z[j][i]`
    pub zinv: Vec<Complex64>,
}

impl PairTables {
    /// Drop `w` rows and `z` columns whose weights are negligible against the
    /// largest pair weight.
    pub fn pruned(&self, rel: f64) -> PairTables {
        let max = self.p.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let cut = rel * max;
        let rows: Vec<usize> =
            (0..self.nw).filter(|&i| (0..self.nz).any(|j| self.p[i * self.nz + j].norm() >= cut)).collect();
        let cols: Vec<usize> =
            (0..self.nz).filter(|&j| (0..self.nw).any(|i| self.p[i * self.nz + j].norm() >= cut)).collect();
        let (nw, nz) = (rows.len(), cols.len());
        let pick = |src: &[Complex64], stride: usize, r: &[usize], c: &[usize]| {
            let mut v = Vec::with_capacity(r.len() * c.len());
            for &a in r {
                for &b in c {
                    v.push(src[a * stride + b]);
                }
            }
            v
        };
        PairTables {
            nw,
            nz,
            p: pick(&self.p, self.nz, &rows, &cols),
            c: pick(&self.c, self.nz, &rows, &cols),
            x: pick(&self.x, self.nw, &rows, &rows),
            y: pick(&self.y, self.nz, &cols, &cols),
            zinv: pick(&self.zinv, self.nw, &cols, &rows),
        }
    }

    #[inline]
    fn q(&self, i1: usize, j1: usize, i2: usize, j2: usize) -> Complex64 {
        self.x[i1 * self.nw + i2]
            * self.y[j1 * self.nz + j2]
            * self.zinv[j1 * self.nw + i2]
            * self.zinv[j2 * self.nw + i1]
    }

    pub fn h1(&self) -> Complex64 {
        self.p.iter().zip(&self.c).map(|(a, b)| a * b).sum()
    }

    /// Full tensor-product value of `H_2`, `O((nw nz)^2)`.
    pub fn h2_tensor(&self) -> Complex64 {
        let (nw, nz) = (self.nw, self.nz);
        let pc: Vec<Complex64> = self.p.iter().zip(&self.c).map(|(a, b)| a * b).collect();
        let parts = par::chunked(nw * nz, 16, |range| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut b = vec![Complex64::new(0.0, 0.0); nz];
            let mut d = vec![Complex64::new(0.0, 0.0); nz];
            for flat in range {
                let (i1, j1) = (flat / nz, flat % nz);
                let p11 = self.p[flat];
                if p11 == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j2 in 0..nz {
                    b[j2] = self.y[j1 * nz + j2] * self.zinv[j2 * nw + i1];
                    d[j2] = self.c[i1 * nz + j2] * b[j2];
                }
                let mut s1 = Complex64::new(0.0, 0.0);
                let mut s2 = Complex64::new(0.0, 0.0);
                for i2 in 0..nw {
                    let a = self.x[i1 * nw + i2] * self.zinv[j1 * nw + i2];
                    let row_pc = &pc[i2 * nz..(i2 + 1) * nz];
                    let row_p = &self.p[i2 * nz..(i2 + 1) * nz];
                    let mut r1 = Complex64::new(0.0, 0.0);
                    let mut r2 = Complex64::new(0.0, 0.0);
                    for j2 in 0..nz {
                        r1 += row_pc[j2] * b[j2];
                        r2 += row_p[j2] * d[j2];
                    }
                    s1 += a * r1;
                    s2 += a * self.c[i2 * nz + j1] * r2;
                }
                acc += p11 * (self.c[flat] * s1 - s2);
            }
            acc
        });
        parts.into_iter().sum::<Complex64>() * 0.5
    }

    /// The terms with every `Q` replaced by one: `e_k` of the Nyström matrix
    /// `K[i][i'] = sum_j C[i][j] P[i'][j]`.
    pub fn determinantal(&self, kmax: usize) -> Vec<Complex64> {
        let (nw, nz) = (self.nw, self.nz);
        let rows = par::chunked(nw, 4, |range| {
            let mut out = Vec::with_capacity(range.len() * nw);
            for i in range {
                for i2 in 0..nw {
                    let mut s = Complex64::new(0.0, 0.0);
                    for j in 0..nz {
                        s += self.c[i * nz + j] * self.p[i2 * nz + j];
                    }
                    out.push(s);
                }
            }
            out
        });
        let k: Vec<Complex64> = rows.into_iter().flatten().collect();
        elementary_by_traces(&k, nw, kmax)
    }

    /// Importance-sampled estimate of `H_k` minus its determinantal part,
    /// i.e. the contribution of `prod Q - 1`. Pairs are drawn with
    /// probability proportional to `|P|`. Returns the estimate and its
    /// standard error.
    pub fn coupling_remainder(&self, k: usize, samples: u64, seed: u64) -> (Complex64, f64) {
        let weights: Vec<f64> = self.p.iter().map(|v| v.norm()).collect();
        let total: f64 = weights.iter().sum();
        let mut cdf = Vec::with_capacity(weights.len());
        let mut run = 0.0;
        for w in &weights {
            run += w / total;
            cdf.push(run);
        }
        let phase: Vec<Complex64> =
            self.p.iter().zip(&weights).map(|(v, w)| if *w > 0.0 { v / w } else { Complex64::new(0.0, 0.0) }).collect();
        let scale = total.powi(k as i32);
        const CHUNK: usize = 1024;
        let parts = par::chunked(samples as usize, CHUNK, |range| {
            let mut r = rng::stream(seed, (range.start / CHUNK) as u64);
            let mut s = Complex64::new(0.0, 0.0);
            let mut ss = 0.0;
            let mut idx = vec![(0usize, 0usize); k];
            let mut mat = vec![Complex64::new(0.0, 0.0); k * k];
            for _ in range {
                let mut ph = Complex64::new(scale, 0.0);
                for slot in idx.iter_mut() {
                    let u: f64 = r.random();
                    let f = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
                    *slot = (f / self.nz, f % self.nz);
                    ph *= phase[f];
                }
                for a in 0..k {
                    for b in 0..k {
                        mat[a * k + b] = self.c[idx[a].0 * self.nz + idx[b].1];
                    }
                }
                let mut qprod = Complex64::new(1.0, 0.0);
                for a in 0..k {
                    for b in a + 1..k {
                        qprod *= self.q(idx[a].0, idx[a].1, idx[b].0, idx[b].1);
                    }
                }
                let v = ph * small_det(&mut mat, k) * (qprod - 1.0);
                s += v;
                ss += v.norm_sqr();
            }
            (s, ss)
        });
        let (mut s, mut ss) = (Complex64::new(0.0, 0.0), 0.0);
        for (a, b) in parts {
            s += a;
            ss += b;
        }
        let n = samples as f64;
        let mean = s / n;
        let var = ((ss - n * mean.norm_sqr()) / (n - 1.0)).max(0.0);
        let kf: f64 = (1..=k).map(|i| i as f64).product();
        (mean / kf, (var / n).sqrt() / kf)
    }

    /// Direct evaluation of the summand at one index tuple (used in tests).
    #[cfg(test)]
    pub fn summand(&self, ij: &[(usize, usize)]) -> Complex64 {
        let k = ij.len();
        let mut mat = vec![Complex64::new(0.0, 0.0); k * k];
        for a in 0..k {
            for b in 0..k {
                mat[a * k + b] = self.c[ij[a].0 * self.nz + ij[b].1];
            }
        }
        let mut v = small_det(&mut mat, k);
        for a in 0..k {
            v *= self.p[ij[a].0 * self.nz + ij[a].1];
            for b in a + 1..k {
                v *= self.q(ij[a].0, ij[a].1, ij[b].0, ij[b].1);
            }
        }
        v
    }
}

/// One series term with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermEstimate {
    pub value: Complex64,
    /// Standard error for sampled terms, refinement difference otherwise.
    pub quad_error: f64,
}

/// `H_1..H_kmax` from the tables. `coarse` is a lower-resolution version of
/// the same integrand used to estimate discretization error.
pub(crate) fn evaluate_terms(
    fine: &PairTables,
    coarse: Option<&PairTables>,
    kmax: usize,
    samples: u64,
    seed: u64,
) -> Vec<TermEstimate> {
    let h1 = fine.h1();
    let rel = coarse.map(|c| (c.h1() - h1).norm() / h1.norm().max(1e-300)).unwrap_or(0.0);
    let mut out = vec![TermEstimate { value: h1, quad_error: rel * h1.norm() }];
    if kmax >= 2 {
        let h2 = fine.h2_tensor();
        out.push(TermEstimate { value: h2, quad_error: 2.0 * rel * h2.norm() });
    }
    if kmax >= 3 {
        let det = fine.determinantal(kmax);
        for k in 3..=kmax {
            let (rem, se) = fine.coupling_remainder(k, samples, seed.wrapping_add(k as u64));
            let v = det[k - 1] + rem;
            out.push(TermEstimate { value: v, quad_error: se + k as f64 * rel * v.norm() });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(nw: usize, nz: usize) -> PairTables {
        let c = |a: f64, b: f64| Complex64::new(a, b);
        let mut t = PairTables {
            nw,
            nz,
            p: vec![],
            c: vec![],
            x: vec![],
            y: vec![],
            zinv: vec![],
        };
        for i in 0..nw {
            for j in 0..nz {
                t.p.push(c(0.05 * ((i + 2 * j) as f64).sin(), 0.03 * (i as f64 - j as f64).cos()));
                t.c.push(c(1.0 + 0.1 * i as f64, 0.2 * j as f64).inv());
            }
            for i2 in 0..nw {
                t.x.push(c(1.0 + 0.01 * (i * i2) as f64, 0.02));
            }
        }
        for j in 0..nz {
            for j2 in 0..nz {
                t.y.push(c(1.0, 0.01 * (j + j2) as f64));
            }
            for i in 0..nw {
                t.zinv.push(c(1.0 - 0.005 * (i + j) as f64, -0.01));
            }
        }
        t
    }

    #[test]
    fn h2_matches_bruteforce() {
        let t = toy(5, 4);
        let mut s = Complex64::new(0.0, 0.0);
        for a in 0..20 {
            for b in 0..20 {
                s += t.summand(&[(a / 4, a % 4), (b / 4, b % 4)]);
            }
        }
        assert!((t.h2_tensor() - s * 0.5).norm() < 1e-14);
    }

    #[test]
    fn determinantal_plus_remainder_matches_bruteforce_k3() {
        let t = toy(3, 3);
        let n = 9;
        let mut full = Complex64::new(0.0, 0.0);
        let mut detonly = Complex64::new(0.0, 0.0);
        let ones = PairTables {
            x: vec![Complex64::new(1.0, 0.0); 9],
            y: vec![Complex64::new(1.0, 0.0); 9],
            zinv: vec![Complex64::new(1.0, 0.0); 9],
            ..t.clone()
        };
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let ij = [(a / 3, a % 3), (b / 3, b % 3), (c / 3, c % 3)];
                    full += t.summand(&ij);
                    detonly += ones.summand(&ij);
                }
            }
        }
        let det = t.determinantal(3);
        assert!((det[2] - detonly / 6.0).norm() < 1e-14);
        let (rem, se) = t.coupling_remainder(3, 200_000, 7);
        let exact_rem = (full - detonly) / 6.0;
        assert!((rem - exact_rem).norm() < 5.0 * se + 1e-15, "{rem} vs {exact_rem} (se {se})");
    }
}

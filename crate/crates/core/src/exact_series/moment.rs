use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::asep_sim::AsepParams;
use crate::contour::CircleContour;
use crate::error::{Error, Result};
use crate::par;
use crate::qmath::{qfactorial, small_det};

const POLE_DIST: f64 = 1e-8;

/// Time, site and rates shared by the moment integrands. `x` is the literal
/// label of the formulas, see [`super::formula_site`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentModel {
    pub params: AsepParams,
    pub t: f64,
    pub x: i64,
}

/// The three building blocks of the moment integrand at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentFactors {
    pub f: Complex64,
    pub g: Complex64,
    pub h: Option<Complex64>,
}

fn near(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() < POLE_DIST
}

impl MomentModel {
    pub fn new(params: AsepParams, t: f64, x: i64) -> Self {
        MomentModel { params, t, x }
    }

    /// `(1-tau)^n exp(gamma t/(1+w) - gamma t/(1+tau^n w)) ((1+tau^n w)/(1+w))^{x-1}`
    pub fn frak_f(&self, w: Complex64, n: u32) -> Result<Complex64> {
        let tau = self.params.tau;
        let tn = tau.powi(n as i32);
        let one = Complex64::new(1.0, 0.0);
        if near(w, -one) || near(w * tn, -one) {
            return Err(Error::Pole(format!("f(w; {n}) at w = {w}")));
        }
        Ok(self.frak_f_unchecked(w, n))
    }

    #[inline]
    fn frak_f_unchecked(&self, w: Complex64, n: u32) -> Complex64 {
        let tau = self.params.tau;
        let tn = tau.powi(n as i32);
        let gt = self.params.gamma * self.t;
        let a = 1.0 + w;
        let b = 1.0 + w * tn;
        let expo = gt / a - gt / b + (b.ln() - a.ln()) * (self.x - 1) as f64;
        expo.exp() * (1.0 - tau).powi(n as i32)
    }

    /// `(-w; tau)(tau^{2n} w^2; tau) / ((-tau^n w; tau)(tau^n w^2; tau))`,
    /// which for integer `n` is the finite ratio
    /// `prod_{j<n} (1 + tau^j w) / prod_{j=n}^{2n-1} (1 - tau^j w^2)`.
    pub fn frak_g(&self, w: Complex64, n: u32) -> Result<Complex64> {
        let tau = self.params.tau;
        let one = Complex64::new(1.0, 0.0);
        for j in n..2 * n {
            if near(w * w * tau.powi(j as i32), one) {
                return Err(Error::Pole(format!("g(w; {n}) at w = {w}")));
            }
        }
        Ok(self.frak_g_unchecked(w, n))
    }

    #[inline]
    fn frak_g_unchecked(&self, w: Complex64, n: u32) -> Complex64 {
        let tau = self.params.tau;
        let mut num = Complex64::new(1.0, 0.0);
        let mut den = Complex64::new(1.0, 0.0);
        let mut tj = 1.0;
        let w2 = w * w;
        for j in 0..2 * n {
            if j < n {
                num *= 1.0 + w * tj;
            } else {
                den *= 1.0 - w2 * tj;
            }
            tj *= tau;
        }
        num / den
    }

    /// `(P; tau)(tau^{n1+n2} P; tau) / ((tau^{n1} P; tau)(tau^{n2} P; tau))`
    /// with `P = w1 w2`, as the finite ratio
    /// `prod_{j<n1} (1 - tau^j P) / prod_{j=n2}^{n1+n2-1} (1 - tau^j P)`.
    pub fn frak_h(&self, w1: Complex64, w2: Complex64, n1: u32, n2: u32) -> Result<Complex64> {
        let tau = self.params.tau;
        let p = w1 * w2;
        for j in n2..n1 + n2 {
            if near(p * tau.powi(j as i32), Complex64::new(1.0, 0.0)) {
                return Err(Error::Pole(format!("h at w1 w2 = {p}")));
            }
        }
        Ok(frak_h_of_product(p, n1, n2, tau))
    }

    /// `F(n, w) = det[-1/(w_a tau^{n_a} - w_b)] prod f g prod_{a<b} h`.
    pub fn special_f(&self, n: &[u32], w: &[Complex64]) -> Result<Complex64> {
        let k = n.len();
        if w.len() != k || k == 0 {
            return Err(Error::Domain("need matching nonempty n and w".into()));
        }
        let tau = self.params.tau;
        let mut mat = vec![Complex64::new(0.0, 0.0); k * k];
        for a in 0..k {
            for b in 0..k {
                let d = w[a] * tau.powi(n[a] as i32) - w[b];
                if d.norm() < POLE_DIST {
                    return Err(Error::Pole(format!("Cauchy pole at w_{a} tau^n = w_{b}")));
                }
                mat[a * k + b] = -d.inv();
            }
        }
        let mut v = small_det(&mut mat, k);
        for a in 0..k {
            v *= self.frak_f(w[a], n[a])? * self.frak_g(w[a], n[a])?;
            for b in a + 1..k {
                v *= self.frak_h(w[a], w[b], n[a], n[b])?;
            }
        }
        Ok(v)
    }
}

#[inline]
fn frak_h_of_product(p: Complex64, n1: u32, n2: u32, tau: f64) -> Complex64 {
    let mut num = Complex64::new(1.0, 0.0);
    let mut den = Complex64::new(1.0, 0.0);
    for j in 0..n1 {
        num *= 1.0 - p * tau.powi(j as i32);
    }
    for j in n2..n1 + n2 {
        den *= 1.0 - p * tau.powi(j as i32);
    }
    num / den
}

/// `f`, `g` at `(w, n)` and, if a second point is given, `h(w, w2; n, n2)`.
pub fn moment_factors(model: &MomentModel, w: Complex64, n: u32, pair: Option<(Complex64, u32)>) -> Result<MomentFactors> {
    Ok(MomentFactors {
        f: model.frak_f(w, n)?,
        g: model.frak_g(w, n)?,
        h: match pair {
            Some((w2, n2)) => Some(model.frak_h(w, w2, n, n2)?),
            None => None,
        },
    })
}

/// Quadrature settings for the moment integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentQuad {
    /// Trapezoid nodes per circle (at least 64); raised for large sites.
    pub n_nodes: usize,
}

impl MomentQuad {
    /// Nodes used at formula label `site`. The integrand carries a
    /// `site`-th power, so the trapezoid rule needs about 24 nodes per unit.
    pub fn nodes_for(&self, site: i64) -> usize {
        self.n_nodes.max((24 * site.max(0) as usize + 40).next_multiple_of(8))
    }
}

impl Default for MomentQuad {
    fn default() -> Self {
        MomentQuad { n_nodes: 64 }
    }
}

/// Partitions of `m` into exactly `k` positive parts, largest first.
fn partitions(m: u32, k: u32, max_part: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if k == 0 {
        if m == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    let hi = max_part.min(m.saturating_sub(k - 1));
    for part in (1..=hi).rev() {
        if m - part < k - 1 {
            continue;
        }
        prefix.push(part);
        partitions(m - part, k - 1, part, prefix, out);
        prefix.pop();
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Nondecreasing index tuples of length `s` over `0..n`, each with the number
/// of ordered tuples it stands for.
fn multisets(n: usize, s: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; s];
    if s == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    loop {
        let mut weight = factorial(s as u32);
        let mut run = 1;
        for i in 1..=s {
            if i < s && cur[i] == cur[i - 1] {
                run += 1;
            } else {
                weight /= factorial(run);
                run = 1;
            }
        }
        out.push((cur.clone(), weight));
        // advance
        let mut i = s;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] + 1 < n {
                cur[i] += 1;
                let v = cur[i];
                for c in cur.iter_mut().skip(i + 1) {
                    *c = v;
                }
                break;
            }
        }
    }
}

/// `(2 pi i)^{-k} oint ... oint F(n, w) dw` over circles of radius
/// `tau^{-1/8}`, using that `F` is symmetric in the `w`'s sharing a value
/// of `n` so that only sorted index tuples within each group are visited.
pub(crate) fn composition_integral(model: &MomentModel, n: &[u32], nodes: usize) -> Result<Complex64> {
    let tau = model.params.tau;
    let circle = CircleContour::new(tau.powf(-0.125), nodes)?.discretize();
    let w = &circle.z;
    // normalized weights dw/(2 pi i) = w/N
    let wt: Vec<Complex64> = w.iter().map(|z| z / nodes as f64).collect();
    let k = n.len();
    for &z in w {
        for &na in n {
            model.frak_f(z, na)?;
            model.frak_g(z, na)?;
        }
    }
    let mut distinct: Vec<u32> = n.to_vec();
    distinct.dedup();
    // f g tables per distinct n
    let fg: Vec<Vec<Complex64>> = distinct
        .iter()
        .map(|&na| w.iter().map(|&z| model.frak_f_unchecked(z, na) * model.frak_g_unchecked(z, na)).collect())
        .collect();
    let slot = |na: u32| distinct.iter().position(|&d| d == na).unwrap();
    let groups: Vec<(u32, usize)> = distinct.iter().map(|&d| (d, n.iter().filter(|&&x| x == d).count())).collect();
    let lists: Vec<Vec<(Vec<usize>, f64)>> = groups.iter().map(|&(_, s)| multisets(nodes, s)).collect();
    let sizes: Vec<usize> = lists.iter().map(|l| l.len()).collect();
    let total: usize = sizes.iter().product();
    let tn: Vec<f64> = n.iter().map(|&na| tau.powi(na as i32)).collect();

    let partial = par::chunked(total, 4096, |range| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut idx = vec![0usize; k];
        let mut mat = vec![Complex64::new(0.0, 0.0); k * k];
        for flat in range {
            let mut rem = flat;
            let mut weight = 1.0;
            let mut pos = 0;
            for (g, list) in lists.iter().enumerate() {
                let (tuple, wgt) = &list[rem % sizes[g]];
                rem /= sizes[g];
                weight *= wgt;
                for &i in tuple {
                    idx[pos] = i;
                    pos += 1;
                }
            }
            let ws: Vec<Complex64> = idx.iter().map(|&i| w[i]).collect();
            for a in 0..k {
                for b in 0..k {
                    mat[a * k + b] = -(ws[a] * tn[a] - ws[b]).inv();
                }
            }
            let mut v = small_det(&mut mat, k) * weight;
            for a in 0..k {
                v *= fg[slot(n[a])][idx[a]] * wt[idx[a]];
                for b in a + 1..k {
                    v *= frak_h_of_product(ws[a] * ws[b], n[a], n[b], tau);
                }
            }
            acc += v;
        }
        acc
    });
    Ok(partial.into_iter().sum())
}

/// `E[tau^{m N_x(t)}] = m_tau! sum_{k=0}^m nu_{k,m}`.
///
/// Each `nu_{k,m}` sums the k-fold circle integrals of `F` over the
/// compositions of `m` into `k` parts. Orderings of the same parts give equal
/// integrals, so each partition is integrated once and weighted by its number
/// of distinct orderings.
pub fn moment(m: u32, t: f64, x: i64, params: &AsepParams, quad: &MomentQuad) -> Result<f64> {
    if m == 0 {
        return Ok(1.0);
    }
    if m > 6 {
        return Err(Error::Unsupported(format!("moments beyond m = 6 (got {m})")));
    }
    if quad.n_nodes < 64 {
        return Err(Error::Config(format!("moment quadrature needs at least 64 nodes, got {}", quad.n_nodes)));
    }
    let site = super::formula_site(x);
    let model = MomentModel::new(*params, t, site);
    let nodes = quad.nodes_for(site);
    let mut total = Complex64::new(0.0, 0.0);
    for k in 1..=m {
        let mut parts = Vec::new();
        partitions(m, k, m, &mut Vec::new(), &mut parts);
        let mut nu = Complex64::new(0.0, 0.0);
        for p in parts {
            // number of distinct orderings of p
            let mut orderings = factorial(k);
            let mut run = 1;
            for i in 1..=p.len() {
                if i < p.len() && p[i] == p[i - 1] {
                    run += 1;
                } else {
                    orderings /= factorial(run);
                    run = 1;
                }
            }
            nu += composition_integral(&model, &p, nodes)? * orderings;
        }
        total += nu / factorial(k);
    }
    let total = total * qfactorial(m, params.qreal());
    if total.im.abs() > 1e-8 * total.re.abs() {
        return Err(Error::Quadrature(format!("moment has imaginary residue {} (real part {})", total.im, total.re)));
    }
    Ok(total.re)
}

/// Direct tensor-product version of a single composition integral, visiting
/// every ordered index tuple. Used to check the symmetry reduction.
pub fn composition_integral_direct(model: &MomentModel, n: &[u32], nodes: usize) -> Result<Complex64> {
    let tau = model.params.tau;
    let circle = CircleContour::new(tau.powf(-0.125), nodes)?.discretize();
    let k = n.len();
    let total = nodes.pow(k as u32);
    let mut acc = Complex64::new(0.0, 0.0);
    for flat in 0..total {
        let mut rem = flat;
        let mut ws = Vec::with_capacity(k);
        let mut wt = Complex64::new(1.0, 0.0);
        for _ in 0..k {
            let i = rem % nodes;
            rem /= nodes;
            ws.push(circle.z[i]);
            wt *= circle.z[i] / nodes as f64;
        }
        acc += model.special_f(n, &ws)? * wt;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> MomentModel {
        MomentModel::new(AsepParams::from_tau(0.005).unwrap(), 4.0, 0)
    }

    #[test]
    fn factors_collapse_at_zero() {
        let m = model();
        let w = Complex64::new(0.7, 1.1);
        assert!((m.frak_f(w, 0).unwrap() - 1.0).norm() < 1e-14);
        assert!((m.frak_g(w, 0).unwrap() - 1.0).norm() < 1e-14);
        assert!((m.frak_h(w, Complex64::new(-0.3, 0.2), 0, 3).unwrap() - 1.0).norm() < 1e-14);
        assert!(m.frak_f(Complex64::new(-1.0, 0.0), 1).is_err());
    }

    #[test]
    fn finite_ratios_match_pochhammer_form() {
        use crate::qmath::{qpochhammer, TruncationPolicy};
        let m = model();
        let tau = m.params.qreal();
        let pol = TruncationPolicy::default();
        let t = tau.get();
        let (w, w2) = (Complex64::new(0.9, -1.4), Complex64::new(-1.2, 0.5));
        for n in 1..4u32 {
            let tn = t.powi(n as i32);
            let g = qpochhammer(-w, tau, &pol).unwrap() * qpochhammer(w * w * tn * tn, tau, &pol).unwrap()
                / (qpochhammer(-w * tn, tau, &pol).unwrap() * qpochhammer(w * w * tn, tau, &pol).unwrap());
            assert!((m.frak_g(w, n).unwrap() - g).norm() < 1e-12 * g.norm());
            let n2 = 2u32;
            let p = w * w2;
            let h = qpochhammer(p, tau, &pol).unwrap() * qpochhammer(p * t.powi((n + n2) as i32), tau, &pol).unwrap()
                / (qpochhammer(p * tn, tau, &pol).unwrap() * qpochhammer(p * t.powi(n2 as i32), tau, &pol).unwrap());
            assert!((m.frak_h(w, w2, n, n2).unwrap() - h).norm() < 1e-12 * h.norm());
        }
    }

    #[test]
    fn partitions_and_multisets() {
        let mut out = Vec::new();
        partitions(6, 3, 6, &mut Vec::new(), &mut out);
        assert_eq!(out, vec![vec![4, 1, 1], vec![3, 2, 1], vec![2, 2, 2]]);
        let ms = multisets(4, 2);
        assert_eq!(ms.len(), 10);
        assert_eq!(ms.iter().map(|m| m.1).sum::<f64>(), 16.0);
    }

    #[test]
    fn symmetry_reduction_matches_direct_sum() {
        let m = model();
        for n in [vec![1u32, 1], vec![2, 1], vec![1, 2]] {
            let a = composition_integral(&m, &[*n.iter().max().unwrap(), *n.iter().min().unwrap()], 64).unwrap();
            let b = composition_integral_direct(&m, &n, 64).unwrap();
            assert!((a - b).norm() < 1e-12 * b.norm().max(1e-300), "{n:?}: {a} vs {b}");
        }
    }

    #[test]
    fn zero_time_at_origin_is_one() {
        let p = AsepParams::from_tau(0.005).unwrap();
        for m in 0..4 {
            let v = moment(m, 0.0, 0, &p, &MomentQuad::default()).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "m={m}: {v}");
        }
    }
}

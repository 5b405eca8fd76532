//! The Airy2->1 one-point distribution and Tracy–Widom comparators.
//!
//! `G(t1, y1) = det(I - chi K_inf chi)` is evaluated from its explicit
//! determinant series. Integrating out the `z` variables turns the k-th term
//! into the k-th expansion coefficient of `det(I + M)` for a Nyström matrix
//! `M` on the `w`-contour, so all terms come from one matrix.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{gl_interval, gl_rule, Discretized, Polyline, VContour};
use crate::error::{Error, Result};
use crate::fredholm::{coefficients_by_dft, elementary_by_traces};
use crate::qmath::lu_det_in_place;

const AI0: f64 = 0.355_028_053_887_817_24;
const AIP0: f64 = 0.258_819_403_792_806_8;
const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// Ai(x) from its power series. Accurate to about `1e-16 e^{2/3 |x|^{3/2}}`
/// absolute, so only used for small `|x|`.
pub fn airy_ai_series(x: f64) -> f64 {
    let x3 = x * x * x;
    let (mut f, mut g) = (1.0, x);
    let (mut a, mut b) = (1.0, x);
    for k in 1..200 {
        let k3 = 3.0 * k as f64;
        a *= x3 / ((k3 - 1.0) * k3);
        b *= x3 / (k3 * (k3 + 1.0));
        f += a;
        g += b;
        if a.abs() < 1e-18 * f.abs().max(1e-300) && b.abs() < 1e-18 * g.abs().max(1e-300) {
            break;
        }
    }
    AI0 * f - AIP0 * g
}

/// Ai(x) as `(2 pi i)^{-1} int exp(t^3/3 - x t) dt` over a path through the
/// saddle points. For `x > 0` this is the wedge at `sqrt x` with angle
/// `pi/3`; for `x < 0` the path runs up the imaginary axis between the
/// saddles `+-i sqrt|x|`, where the integrand has modulus one.
pub fn airy_ai_contour(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 30.0 {
        return Err(Error::Domain(format!("Ai is supported on |x| <= 30, got {x}")));
    }
    let phase = |t: Complex64| t * t * t / 3.0 - t * x;
    let dir = Complex64::from_polar(1.0, PI / 3.0);
    let h = 0.5f64.min(6.0 / x.abs().max(1e-9));
    let (low, high) = if x > 0.0 {
        let v = Complex64::new(x.sqrt(), 0.0);
        (v, v)
    } else {
        let c = (-x).sqrt();
        (Complex64::new(0.0, -c), Complex64::new(0.0, c))
    };
    let top = phase(high).re;
    let mut arm = 0.5;
    while phase(high + dir * arm).re > top - 40.0 {
        arm += 0.5;
    }
    let mut vertices = vec![low + dir.conj() * arm, low];
    if x <= 0.0 {
        vertices.push(high);
    }
    vertices.push(high + dir * arm);
    let path = Polyline { vertices, panel_len: h, nodes_per_panel: 16 }.discretize();
    let s: Complex64 = path.iter().map(|(t, dt)| phase(t).exp() * dt).sum();
    Ok((s / TWO_PI_I).re)
}

/// Ai(x) for `|x| <= 30`: power series on `|x| <= 5`, contour quadrature
/// beyond.
pub fn airy_ai(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 30.0 {
        return Err(Error::Domain(format!("Ai is supported on |x| <= 30, got {x}")));
    }
    if x.abs() <= 5.0 {
        Ok(airy_ai_series(x))
    } else {
        airy_ai_contour(x)
    }
}

/// One evaluation point `(t1, y1)`; `y_tilde = y1 - t1^2 1{t1 <= 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Airy21Query {
    pub t1: f64,
    pub y1: f64,
}

impl Airy21Query {
    pub fn new(t1: f64, y1: f64) -> Result<Self> {
        if !t1.is_finite() || !y1.is_finite() {
            return Err(Error::Config(format!("non-finite Airy query ({t1}, {y1})")));
        }
        Ok(Airy21Query { t1, y1 })
    }

    pub fn y_tilde(&self) -> f64 {
        tilde(self.t1, self.y1)
    }
}

fn tilde(t: f64, y: f64) -> f64 {
    if t <= 0.0 {
        y - t * t
    } else {
        y
    }
}

/// Discretization of the two wedges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AiryQuad {
    pub panel_len: f64,
    pub nodes_per_panel: usize,
    /// Arms stop once the log-modulus has dropped this far below its maximum.
    pub log_drop: f64,
    /// Points on `|lambda| = 1` used to split `det(I + lambda M)` into terms.
    pub dft_points: usize,
    /// Vertices `(a, b)` of `C_{a,pi/4}` and `C_{b,3pi/4}`; `None` places
    /// them near the saddle points.
    pub vertices: Option<(f64, f64)>,
    /// Also evaluate at half the nodes per panel to estimate the error.
    pub estimate_error: bool,
}

impl Default for AiryQuad {
    fn default() -> Self {
        AiryQuad { panel_len: 0.5, nodes_per_panel: 10, log_drop: 32.0, dft_points: 32, vertices: None, estimate_error: true }
    }
}

/// `log E(w)` up to a constant shared by `w` and `z`, where
/// `E(w) = exp(w^3/3 + t1 w^2 + 1{t1 <= 0} t1^2 w - y1 w)`.
fn log_e(w: Complex64, t1: f64, y1: f64) -> Complex64 {
    if t1 <= 0.0 {
        let s = w + t1;
        s * s * s / 3.0 - w * y1
    } else {
        w * w * w / 3.0 + w * w * t1 - w * y1
    }
}

/// Peak log-modulus of the `w` (sign 1) or `z` (sign -1) factor along a
/// wedge, scanned out to where it has dropped `drop` below the peak.
fn wedge_peak(vertex: f64, angle: f64, sign: f64, t1: f64, y1: f64, drop: f64) -> (f64, f64) {
    let d = Complex64::from_polar(1.0, angle);
    let g = |r: f64| {
        let w = vertex + d * r;
        sign * log_e(w, t1, y1).re + if sign > 0.0 { w.norm().ln() } else { 0.0 }
    };
    let arm = arm_length(g, drop);
    let peak = (0..=(arm / 0.25) as usize).map(|i| g(i as f64 * 0.25)).fold(f64::NEG_INFINITY, f64::max);
    (peak, arm)
}

/// Wedge vertices `(a, b)`, `-a < b < a`. For `t1 <= 0` the saddle sits at
/// `w = |t1| + sqrt(y~)`, and `(|t1| + 1, |t1|)` works well. For `t1 > 0`
/// the growth of `t1 w^2` along the arms makes the choice matter, so the
/// pair with the smallest combined peak modulus (penalizing close
/// vertices, where the Cauchy factor is large) is picked from a grid.
pub fn default_vertices(t1: f64, y1: f64) -> (f64, f64) {
    if t1 <= 0.0 {
        return (-t1 + 1.0, -t1);
    }
    let mut best = (f64::INFINITY, (1.0, 0.0));
    for a in [0.2, 0.3, 0.4, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0] {
        let (pw, _) = wedge_peak(a, PI / 4.0, 1.0, t1, y1, 32.0);
        for rel in [-0.5, -0.25, 0.0, 0.25, 0.5] {
            let b = a * rel;
            let (pz, _) = wedge_peak(b, 3.0 * PI / 4.0, -1.0, t1, y1, 32.0);
            let gap = (a - b).min(a + b);
            let score = pw + pz - 3.0 * gap.ln();
            if score < best.0 {
                best = (score, (a, b));
            }
        }
    }
    best.1
}

/// Arm length at which `g` (the log-modulus along the arm) has fallen
/// `drop` below its running maximum.
fn arm_length(g: impl Fn(f64) -> f64, drop: f64) -> f64 {
    let mut best = g(0.0);
    let mut r = 0.0;
    loop {
        r += 0.25;
        let v = g(r);
        best = best.max(v);
        if v < best - drop || r > 60.0 {
            return r;
        }
    }
}

/// A wedge with Gauss–Legendre panels of length `h0` at the vertex growing
/// geometrically to `hmax` along each arm, oriented by increasing imaginary
/// part.
fn graded_wedge(vertex: f64, angle: f64, arm: f64, h0: f64, hmax: f64, npp: usize) -> Discretized {
    let mut cuts = vec![0.0];
    let mut h = h0;
    while *cuts.last().unwrap() < arm {
        let next = (cuts.last().unwrap() + h).min(arm);
        cuts.push(next);
        h = (h * 1.5).min(hmax);
    }
    let v = Complex64::new(vertex, 0.0);
    let (down, up) = (Complex64::from_polar(1.0, -angle), Complex64::from_polar(1.0, angle));
    let rule = gl_rule(npp);
    let mut out = Discretized::default();
    for c in cuts.windows(2).rev() {
        out.push_segment(v + down * c[1], v + down * c[0], 1, &rule);
    }
    for c in cuts.windows(2) {
        out.push_segment(v + up * c[0], v + up * c[1], 1, &rule);
    }
    out
}

fn wedges(q: &Airy21Query, quad: &AiryQuad, nodes_per_panel: usize) -> (Discretized, Discretized) {
    let (a, b) = quad.vertices.unwrap_or_else(|| default_vertices(q.t1, q.y1));
    let (_, la) = wedge_peak(a, PI / 4.0, 1.0, q.t1, q.y1, quad.log_drop);
    let (_, lb) = wedge_peak(b, 3.0 * PI / 4.0, -1.0, q.t1, q.y1, quad.log_drop);
    // near the vertices the Cauchy factor varies on the scale of the gap
    let h0 = quad.panel_len.min(0.5 * (a - b).min(a + b));
    (
        graded_wedge(a, PI / 4.0, la, h0, quad.panel_len, nodes_per_panel),
        graded_wedge(b, 3.0 * PI / 4.0, lb, h0, quad.panel_len, nodes_per_panel),
    )
}

/// The Nyström matrix `M[a][b] = (dw_a/2 pi i) K(w_a, w_b)` with
/// `K(w1, w2) = sum_j (dz_j/2 pi i) 2 w1 E(w1) / ((z_j^2 - w2^2)(w1 - z_j) E(z_j))`.
fn nystrom(q: &Airy21Query, wc: &Discretized, zc: &Discretized) -> Vec<Complex64> {
    let (nw, nz) = (wc.len(), zc.len());
    let lw: Vec<Complex64> = wc.z.iter().map(|&w| log_e(w, q.t1, q.y1)).collect();
    let lz: Vec<Complex64> = zc.z.iter().map(|&z| log_e(z, q.t1, q.y1)).collect();
    let mut a = vec![Complex64::new(0.0, 0.0); nw * nz];
    for i in 0..nw {
        let (w, dw) = (wc.z[i], wc.dz[i]);
        for j in 0..nz {
            let (z, dz) = (zc.z[j], zc.dz[j]);
            a[i * nz + j] = dw / TWO_PI_I * 2.0 * w * (lw[i] - lz[j]).exp() * dz / TWO_PI_I / (w - z);
        }
    }
    let mut b = vec![Complex64::new(0.0, 0.0); nz * nw];
    for j in 0..nz {
        for i in 0..nw {
            b[j * nw + i] = (zc.z[j] * zc.z[j] - wc.z[i] * wc.z[i]).inv();
        }
    }
    // M = A B, with A nw x nz and B nz x nw
    let mut m = vec![Complex64::new(0.0, 0.0); nw * nw];
    for i in 0..nw {
        for j in 0..nz {
            let aij = a[i * nz + j];
            let row = &b[j * nw..(j + 1) * nw];
            let out = &mut m[i * nw..(i + 1) * nw];
            for (o, v) in out.iter_mut().zip(row) {
                *o += aij * v;
            }
        }
    }
    m
}

/// Result of one `G(t1, y1)` evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Airy21Value {
    pub t1: f64,
    pub y1: f64,
    /// `1 + sum_{k <= k_max} I_k`, clamped to [0, 1].
    pub cdf: f64,
    /// The same before clamping.
    pub raw: f64,
    /// Leading terms `I_1, I_2, ...` (real parts); the first four when every
    /// term is kept.
    pub terms: Vec<f64>,
    /// Number of terms included in `cdf`.
    pub k_max: usize,
    /// Omitted terms plus the coarse/fine quadrature difference.
    pub est_error: f64,
}

/// The listed terms, the value, the truncation error and the number of terms
/// included (at most the Nyström dimension, beyond which all vanish).
fn terms_and_total(q: &Airy21Query, quad: &AiryQuad, npp: usize, k_max: usize) -> Result<(Vec<Complex64>, Complex64, f64, usize)> {
    let (wc, zc) = wedges(q, quad, npp);
    let m = nystrom(q, &wc, &zc);
    let n = wc.len();
    let mut full = m.clone();
    for i in 0..n {
        full[i * n + i] += 1.0;
    }
    let det = lu_det_in_place(&mut full, n);
    if k_max <= 4 {
        let e = elementary_by_traces(&m, n, k_max);
        let partial = Complex64::new(1.0, 0.0) + e.iter().sum::<Complex64>();
        return Ok((e, partial, (det - partial).norm(), k_max.min(n)));
    }
    if k_max.saturating_add(1) >= quad.dft_points {
        // every term kept: det(I + M) itself, with the leading terms listed
        return Ok((elementary_by_traces(&m, n, 4), det, 0.0, n));
    }
    let c = coefficients_by_dft(&m, n, quad.dft_points);
    let partial: Complex64 = c[..=k_max].iter().sum();
    let alias = c[quad.dft_points - 1].norm();
    Ok((c[1..=k_max].to_vec(), partial, (det - partial).norm() + alias, k_max.min(n)))
}

/// `G(t1, y1) = 1 + sum_{k=1}^{k_max} I_k`. Pass `k_max >= dft_points - 1`
/// (e.g. `usize::MAX`) to keep every term, i.e. `det(I + M)` itself.
pub fn airy21_cdf(q: &Airy21Query, k_max: usize, quad: &AiryQuad) -> Result<Airy21Value> {
    if k_max == 0 {
        return Err(Error::Config("airy21 needs k_max >= 1".into()));
    }
    if quad.dft_points < 4 || quad.nodes_per_panel < 2 || !(quad.panel_len > 0.0) {
        return Err(Error::Config("Airy quadrature too coarse".into()));
    }
    let (terms, value, trunc, used) = terms_and_total(q, quad, quad.nodes_per_panel, k_max)?;
    let mut est_error = trunc;
    if quad.estimate_error {
        let (_, coarse, _, _) = terms_and_total(q, quad, (3 * quad.nodes_per_panel / 4).max(2), k_max)?;
        est_error += (coarse - value).norm();
    }
    if value.im.abs() > 1e-8 + est_error {
        return Err(Error::Quadrature(format!("G({}, {}) has imaginary part {}", q.t1, q.y1, value.im)));
    }
    let raw = value.re;
    if !(-1e-3..=1.0 + 1e-3).contains(&raw) {
        return Err(Error::NonConvergence {
            reason: format!("G({}, {}) = {raw} is outside [0, 1]", q.t1, q.y1),
            partial_sums: terms.iter().scan(1.0, |s, t| {
                *s += t.re;
                Some(*s)
            }).collect(),
        });
    }
    Ok(Airy21Value {
        t1: q.t1,
        y1: q.y1,
        cdf: raw.clamp(0.0, 1.0),
        raw,
        terms: terms.iter().map(|t| t.re).collect(),
        k_max: used,
        est_error,
    })
}

/// `K_inf(s, x; t, y)`, including the heat-kernel term when `t > s`.
pub fn k_infinity(s: f64, x: f64, t: f64, y: f64, quad: &AiryQuad) -> Result<Complex64> {
    let (xt, yt) = (tilde(s, x), tilde(t, y));
    let lw = |w: Complex64| w * w * w / 3.0 + w * w * t - w * yt;
    let lz = |z: Complex64| z * z * z / 3.0 + z * z * s - z * xt;
    let (a, b) = quad.vertices.unwrap_or((1.0, 0.0));
    if !(-a < b && b < a) {
        return Err(Error::Config(format!("wedge vertices need -a < b < a, got ({a}, {b})")));
    }
    let dw = Complex64::from_polar(1.0, PI / 4.0);
    let dz = Complex64::from_polar(1.0, 3.0 * PI / 4.0);
    let la = arm_length(|r| lw(a + dw * r).re + (a + dw * r).norm().ln(), quad.log_drop);
    let lb = arm_length(|r| -lz(b + dz * r).re, quad.log_drop);
    let wc = VContour { vertex: Complex64::new(a, 0.0), angle: PI / 4.0, arm_length: la, panel_len: quad.panel_len, nodes_per_panel: quad.nodes_per_panel }.discretize();
    let zc = VContour { vertex: Complex64::new(b, 0.0), angle: 3.0 * PI / 4.0, arm_length: lb, panel_len: quad.panel_len, nodes_per_panel: quad.nodes_per_panel }.discretize();
    let mut sum = Complex64::new(0.0, 0.0);
    for (w, dwt) in wc.iter() {
        let ew = lw(w);
        for (z, dzt) in zc.iter() {
            sum += (ew - lz(z)).exp() * (-2.0 * w) / (z * z - w * w) * dwt * dzt;
        }
    }
    let mut k = sum / (TWO_PI_I * TWO_PI_I);
    if t > s {
        let d = t - s;
        k -= (-(yt - xt).powi(2) / (4.0 * d)).exp() / (4.0 * PI * d).sqrt();
    }
    Ok(k)
}

/// Gauss–Legendre Nyström discretization for the Tracy–Widom oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FredholmQuad {
    pub n_nodes: usize,
    pub domain_length: f64,
}

impl Default for FredholmQuad {
    fn default() -> Self {
        FredholmQuad { n_nodes: 40, domain_length: 12.0 }
    }
}

impl FredholmQuad {
    fn check(&self, s: f64) -> Result<()> {
        if self.n_nodes < 10 || !(self.domain_length > 0.0) {
            return Err(Error::Config(format!("Fredholm quadrature needs >= 10 nodes, got {}", self.n_nodes)));
        }
        if !(-10.0..=6.0).contains(&s) {
            return Err(Error::Domain(format!("Tracy-Widom oracles cover s in [-10, 6], got {s}")));
        }
        Ok(())
    }
}

fn det_i_minus(k: impl Fn(usize, usize) -> f64, nodes: &[(f64, f64)]) -> f64 {
    let n = nodes.len();
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let v = nodes[i].1.sqrt() * k(i, j) * nodes[j].1.sqrt();
            m[i * n + j] = Complex64::new(if i == j { 1.0 - v } else { -v }, 0.0);
        }
    }
    lu_det_in_place(&mut m, n).re
}

/// GUE Tracy–Widom `F_2(s) = det(I - K_Ai)` on `L^2(s, inf)`, with
/// `K_Ai(x, y) = int_0^inf Ai(x+u) Ai(y+u) du` done by quadrature.
pub fn tw2_cdf(s: f64, quad: &FredholmQuad) -> Result<f64> {
    quad.check(s)?;
    let nodes = gl_interval(s, s + quad.domain_length, quad.n_nodes);
    // u in [0, 16 - s]; beyond that Ai(x + u) < 1e-19
    let umax = 16.0 - s;
    let panels = (umax / 1.0).ceil() as usize;
    let rule = gl_rule(12);
    let mut un = Vec::with_capacity(panels * rule.len());
    for p in 0..panels {
        let (lo, hi) = (p as f64 * umax / panels as f64, (p + 1) as f64 * umax / panels as f64);
        for &(x, w) in &rule {
            un.push((lo + 0.5 * (hi - lo) * (x + 1.0), 0.5 * (hi - lo) * w));
        }
    }
    let mut ai = vec![0.0; nodes.len() * un.len()];
    for (i, &(x, _)) in nodes.iter().enumerate() {
        for (l, &(u, _)) in un.iter().enumerate() {
            let arg = x + u;
            ai[i * un.len() + l] = if arg > 30.0 { 0.0 } else { airy_ai(arg)? };
        }
    }
    let nu = un.len();
    let kai = |i: usize, j: usize| -> f64 { (0..nu).map(|l| un[l].1 * ai[i * nu + l] * ai[j * nu + l]).sum() };
    Ok(det_i_minus(kai, &nodes))
}

/// GOE Tracy–Widom `F_1(s) = det(I - B_s)` on `L^2(0, inf)` with
/// `B_s(x, y) = Ai(x + y + s)`.
pub fn tw1_cdf(s: f64, quad: &FredholmQuad) -> Result<f64> {
    quad.check(s)?;
    let nodes = gl_interval(0.0, quad.domain_length, quad.n_nodes);
    let n = nodes.len();
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let arg = nodes[i].0 + nodes[j].0 + s;
            let v = if arg > 30.0 { 0.0 } else { airy_ai(arg)? };
            b[i * n + j] = v;
            b[j * n + i] = v;
        }
    }
    Ok(det_i_minus(|i, j| b[i * n + j], &nodes))
}

/// Writes `t1,y,cdf,k_max,est_error` rows.
pub fn write_cdf_csv<W: Write>(out: W, rows: &[Airy21Value]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t1", "y", "cdf", "k_max", "est_error"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            format!("{}", r.t1),
            format!("{}", r.y1),
            format!("{:.12e}", r.cdf),
            format!("{}", r.k_max),
            format!("{:.3e}", r.est_error),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// All-terms evaluation helper used by the harness.
pub fn airy21_full(t1: f64, y1: f64, quad: &AiryQuad) -> Result<Airy21Value> {
    airy21_cdf(&Airy21Query::new(t1, y1)?, usize::MAX, quad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ai_at_zero() {
        assert!((airy_ai(0.0).unwrap() - 0.355_028_053_887_817_24).abs() < 1e-15);
    }

    #[test]
    fn series_and_contour_agree() {
        for x in [-8.0, -5.0, -1.0, 0.5, 3.0, 5.0, 8.0] {
            let (s, c) = (airy_ai_series(x), airy_ai_contour(x).unwrap());
            assert!((s - c).abs() < 1e-9, "x = {x}: {s} vs {c}");
        }
    }
}

//! Discretized complex contours: trapezoid circles and piecewise-linear paths
//! with composite Gauss–Legendre panels.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Quadrature nodes `z` with complex weights `dz`, so that
/// `sum f(z_j) dz_j` approximates the contour integral of `f`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Discretized {
    pub z: Vec<Complex64>,
    pub dz: Vec<Complex64>,
}

impl Discretized {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.z.iter().copied().zip(self.dz.iter().copied())
    }

    /// Gauss–Legendre panels on the segment from `a` to `b`.
    pub fn push_segment(&mut self, a: Complex64, b: Complex64, panels: usize, rule: &[(f64, f64)]) {
        let panels = panels.max(1);
        let step = (b - a) / panels as f64;
        for p in 0..panels {
            let left = a + step * p as f64;
            for &(x, w) in rule {
                self.z.push(left + step * (0.5 * (x + 1.0)));
                self.dz.push(step * (0.5 * w));
            }
        }
    }

    /// Keep only the nodes for which `keep` is true.
    pub fn retain(&mut self, mut keep: impl FnMut(Complex64) -> bool) {
        let mut z = Vec::with_capacity(self.z.len());
        let mut dz = Vec::with_capacity(self.z.len());
        for (a, b) in self.iter() {
            if keep(a) {
                z.push(a);
                dz.push(b);
            }
        }
        self.z = z;
        self.dz = dz;
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
pub fn gl_rule(n: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(n.max(1)).expect("nonzero");
    let mut v: Vec<(f64, f64)> = GaussLegendre::new(n).as_node_weight_pairs().to_vec();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// Gauss–Legendre nodes and weights mapped to [a, b].
pub fn gl_interval(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let h = 0.5 * (b - a);
    gl_rule(n).into_iter().map(|(x, w)| (a + h * (x + 1.0), h * w)).collect()
}

/// Positively oriented circle centred at the origin, trapezoid rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleContour {
    pub radius: f64,
    pub n_nodes: usize,
}

impl CircleContour {
    pub fn new(radius: f64, n_nodes: usize) -> Result<Self> {
        if !(radius > 0.0) || n_nodes == 0 {
            return Err(Error::Config(format!("circle needs radius > 0 and nodes >= 1 ({radius}, {n_nodes})")));
        }
        Ok(CircleContour { radius, n_nodes })
    }

    pub fn discretize(&self) -> Discretized {
        let n = self.n_nodes;
        let mut out = Discretized::default();
        for j in 0..n {
            let th = 2.0 * PI * j as f64 / n as f64;
            let z = Complex64::from_polar(self.radius, th);
            out.z.push(z);
            out.dz.push(Complex64::new(0.0, 2.0 * PI / n as f64) * z);
        }
        out
    }
}

/// A path through a list of vertices, each edge split into panels of length
/// at most `panel_len` carrying `nodes_per_panel` Gauss–Legendre nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<Complex64>,
    pub panel_len: f64,
    pub nodes_per_panel: usize,
}

impl Polyline {
    pub fn discretize(&self) -> Discretized {
        let rule = gl_rule(self.nodes_per_panel);
        let mut out = Discretized::default();
        for e in self.vertices.windows(2) {
            let len = (e[1] - e[0]).norm();
            let panels = (len / self.panel_len).ceil().max(1.0) as usize;
            out.push_segment(e[0], e[1], panels, &rule);
        }
        out
    }
}

/// The wedge `C_{a,phi}`: rays `a + y e^{-i phi}` and `a + y e^{i phi}`,
/// `y in [0, arm_length]`, oriented by increasing imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VContour {
    pub vertex: Complex64,
    pub angle: f64,
    pub arm_length: f64,
    pub panel_len: f64,
    pub nodes_per_panel: usize,
}

impl VContour {
    pub fn polyline(&self) -> Polyline {
        let a = self.vertex;
        Polyline {
            vertices: vec![
                a + Complex64::from_polar(self.arm_length, -self.angle),
                a,
                a + Complex64::from_polar(self.arm_length, self.angle),
            ],
            panel_len: self.panel_len,
            nodes_per_panel: self.nodes_per_panel,
        }
    }

    pub fn discretize(&self) -> Discretized {
        self.polyline().discretize()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaSide {
    /// V opening to the right, vertex at `t^{1/3} rho`.
    U,
    /// V opening to the left.
    V,
}

/// `t^{1/3} gamma^{+-}_{rho,eps}`: a 45-degree V of arm length `eps sqrt 2`
/// continued vertically to `|Im| = pi`, then scaled by `t^{1/3}`.
/// `panel_len` is measured in the scaled variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaContour {
    pub side: GammaSide,
    pub rho: f64,
    pub epsilon: f64,
    pub t: f64,
    pub panel_len: f64,
    pub nodes_per_panel: usize,
}

impl GammaContour {
    /// Corners in the unscaled variable, bottom to top.
    pub fn unscaled_vertices(&self) -> [Complex64; 5] {
        let e = self.epsilon;
        let s = match self.side {
            GammaSide::U => 1.0,
            GammaSide::V => -1.0,
        };
        let c = |re: f64, im: f64| Complex64::new(self.rho + s * re, im);
        [c(e, -PI), c(e, -e), c(0.0, 0.0), c(e, e), c(e, PI)]
    }

    pub fn discretize(&self) -> Discretized {
        let scale = self.t.cbrt();
        Polyline {
            vertices: self.unscaled_vertices().iter().map(|v| v * scale).collect(),
            panel_len: self.panel_len,
            nodes_per_panel: self.nodes_per_panel,
        }
        .discretize()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_integrates_residue() {
        let c = CircleContour::new(2.0, 32).unwrap().discretize();
        let s: Complex64 = c.iter().map(|(z, dz)| dz / (z - 0.5)).sum();
        assert!((s - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-12);
    }

    #[test]
    fn wedge_orientation_and_length() {
        let v = VContour {
            vertex: Complex64::new(1.0, 0.0),
            angle: PI / 4.0,
            arm_length: 3.0,
            panel_len: 0.5,
            nodes_per_panel: 8,
        }
        .discretize();
        let len: f64 = v.dz.iter().map(|d| d.norm()).sum();
        assert!((len - 6.0).abs() < 1e-12);
        assert!(v.dz.iter().all(|d| d.im > 0.0));
        assert!(v.z.windows(2).all(|w| w[1].im > w[0].im));
    }

    #[test]
    fn gamma_shape() {
        let g = GammaContour { side: GammaSide::V, rho: -0.5, epsilon: 0.1, t: 8.0, panel_len: 0.3, nodes_per_panel: 6 };
        let v = g.unscaled_vertices();
        assert_eq!(v[2], Complex64::new(-0.5, 0.0));
        assert!((v[0] - Complex64::new(-0.6, -PI)).norm() < 1e-15);
        let d = g.discretize();
        assert!(d.z.windows(2).all(|w| w[1].im > w[0].im));
        // exact integral of a polynomial along the path is endpoint difference
        let s: Complex64 = d.iter().map(|(z, dz)| 3.0 * z * z * dz).sum();
        let (a, b) = (v[0] * 2.0, v[4] * 2.0);
        assert!((s - (b * b * b - a * a * a)).norm() < 1e-10);
    }
}

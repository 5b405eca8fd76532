//! Continuous-time simulation of ASEP from the half-flat initial condition
//! on a finite window with closed boundaries.
//!
//! Particles jump right at rate `p` and left at rate `q = 1 - p`; a jump is
//! suppressed if the target site is occupied or outside the window. The
//! scheme is event driven: with `n` particles the next clock rings after an
//! `Exp(n)` wait, a uniformly chosen particle attempts the move.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::rng;

/// Jump rates and derived constants, validated together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsepParams {
    pub p: f64,
    pub q: f64,
    pub tau: f64,
    pub gamma: f64,
}

impl AsepParams {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::Domain(format!("p must lie in (0, 1/2), got {p}")));
        }
        let q = 1.0 - p;
        let out = AsepParams { p, q, tau: p / q, gamma: q - p };
        debug_assert!(out.tau > 0.0 && out.tau < 1.0 && out.gamma > 0.0 && out.gamma < 1.0);
        Ok(out)
    }

    /// Parameters with a prescribed `tau = p/q`.
    pub fn from_tau(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Domain(format!("tau must lie in (0,1), got {tau}")));
        }
        let mut out = Self::new(tau / (1.0 + tau))?;
        out.tau = tau;
        Ok(out)
    }

    pub fn qreal(&self) -> crate::qmath::QReal {
        crate::qmath::QReal::new(self.tau).expect("validated at construction")
    }
}

/// Sites `left..=right` with closed boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimWindow {
    pub left: i64,
    pub right: i64,
}

impl SimWindow {
    pub fn new(left: i64, right: i64) -> Result<Self> {
        if left >= 0 || right <= 0 {
            return Err(Error::Config(format!("window needs left < 0 < right, got [{left}, {right}]")));
        }
        Ok(SimWindow { left, right })
    }

    /// `±(ceil(3t) + 50)`.
    pub fn default_for_time(t: f64) -> Self {
        let h = (3.0 * t.max(0.0)).ceil() as i64 + 50;
        SimWindow { left: -h, right: h }
    }

    pub fn width(&self) -> usize {
        (self.right - self.left + 1) as usize
    }

    pub fn contains(&self, x: i64) -> bool {
        x >= self.left && x <= self.right
    }
}

/// One trajectory: occupancy, clock and the flux through the bond (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct AsepState {
    window: SimWindow,
    occ: Vec<u8>,
    particles: Vec<i64>,
    pub time: f64,
    /// Net number of particles that crossed from site 1 to site 0.
    pub flux0: i64,
}

/// Half-flat start: particles on the positive even sites.
pub fn init_half_flat(window: SimWindow) -> AsepState {
    let positions: Vec<i64> = (1..=window.right).filter(|x| x % 2 == 0).collect();
    AsepState::from_positions(window, &positions).expect("positions inside window")
}

impl AsepState {
    pub fn from_positions(window: SimWindow, positions: &[i64]) -> Result<Self> {
        let mut occ = vec![0u8; window.width()];
        for &x in positions {
            if !window.contains(x) {
                return Err(Error::Domain(format!("site {x} outside window")));
            }
            let i = (x - window.left) as usize;
            if occ[i] == 1 {
                return Err(Error::Domain(format!("site {x} occupied twice")));
            }
            occ[i] = 1;
        }
        Ok(AsepState { window, occ, particles: positions.to_vec(), time: 0.0, flux0: 0 })
    }

    pub fn window(&self) -> SimWindow {
        self.window
    }

    pub fn occupancy(&self, x: i64) -> Result<u8> {
        self.index(x).map(|i| self.occ[i])
    }

    pub fn n_particles(&self) -> usize {
        self.particles.len()
    }

    pub fn positions(&self) -> &[i64] {
        &self.particles
    }

    fn index(&self, x: i64) -> Result<usize> {
        if self.window.contains(x) {
            Ok((x - self.window.left) as usize)
        } else {
            Err(Error::Domain(format!(
                "site {x} outside window [{}, {}]",
                self.window.left, self.window.right
            )))
        }
    }

    /// Run the dynamics up to time `t` using `rng`.
    pub fn advance<R: Rng + ?Sized>(&mut self, t: f64, params: &AsepParams, rng: &mut R) {
        assert!(t >= self.time, "cannot run backwards ({} -> {t})", self.time);
        let n = self.particles.len();
        if n == 0 {
            self.time = t;
            return;
        }
        let rate = n as f64;
        let w = self.occ.len() as i64;
        loop {
            let dt: f64 = Exp1.sample(rng);
            let next = self.time + dt / rate;
            if next > t {
                self.time = t;
                return;
            }
            self.time = next;
            let k = rng.random_range(0..n);
            let right = rng.random::<f64>() < params.p;
            let x = self.particles[k];
            let y = if right { x + 1 } else { x - 1 };
            let j = y - self.window.left;
            if j < 0 || j >= w || self.occ[j as usize] == 1 {
                continue;
            }
            self.occ[(x - self.window.left) as usize] = 0;
            self.occ[j as usize] = 1;
            self.particles[k] = y;
            match (x, y) {
                (1, 0) => self.flux0 += 1,
                (0, 1) => self.flux0 -= 1,
                _ => {}
            }
        }
    }

    /// `N_x`: particles at or left of `x`.
    pub fn particle_count(&self, x: i64) -> Result<u64> {
        let i = self.index(x)?;
        Ok(self.occ[..=i].iter().map(|&b| b as u64).sum())
    }

    /// `h = 2 N_x - x`.
    pub fn height(&self, x: i64) -> Result<i64> {
        Ok(2 * self.particle_count(x)? as i64 - x)
    }

    /// The height built from the flux counter and the occupation variables
    /// between 0 and `x`. Agrees with [`AsepState::height`] on a
    /// half-flat-started trajectory.
    pub fn height_from_flux(&self, x: i64) -> Result<i64> {
        self.index(x)?;
        let hat = |y: i64| 2 * self.occ[(y - self.window.left) as usize] as i64 - 1;
        let base = 2 * self.flux0;
        Ok(if x >= 0 { base + (1..=x).map(hat).sum::<i64>() } else { base - (x + 1..=0).map(hat).sum::<i64>() })
    }

    pub fn snapshot(&self) -> Snapshot {
        let mut rle: Vec<[u32; 2]> = Vec::new();
        for &b in &self.occ {
            match rle.last_mut() {
                Some(last) if last[0] == b as u32 => last[1] += 1,
                _ => rle.push([b as u32, 1]),
            }
        }
        Snapshot {
            time: self.time,
            window: [self.window.left, self.window.right],
            occupancy_rle: rle,
            flux0: self.flux0,
        }
    }
}

/// Advance a copy of `state` to time `t` with the stream for `seed`.
pub fn simulate_to(state: &AsepState, t: f64, params: &AsepParams, seed: u64) -> AsepState {
    let mut s = state.clone();
    s.advance(t, params, &mut rng::stream(seed, 0));
    s
}

/// Serializable trajectory snapshot. Occupancy is run-length encoded as
/// `[value, run]` pairs from the left edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub window: [i64; 2],
    pub occupancy_rle: Vec<[u32; 2]>,
    pub flux0: i64,
}

impl Snapshot {
    pub fn to_state(&self) -> Result<AsepState> {
        let window = SimWindow::new(self.window[0], self.window[1])?;
        let mut positions = Vec::new();
        let mut x = window.left;
        for &[v, run] in &self.occupancy_rle {
            for _ in 0..run {
                if v == 1 {
                    positions.push(x);
                }
                x += 1;
            }
        }
        if x != window.right + 1 {
            return Err(Error::Domain("run lengths do not cover the window".into()));
        }
        let mut s = AsepState::from_positions(window, &positions)?;
        s.time = self.time;
        s.flux0 = self.flux0;
        Ok(s)
    }
}

/// Write snapshots as JSON lines.
pub fn write_snapshots<W: Write>(mut out: W, snaps: &[Snapshot]) -> Result<()> {
    for s in snaps {
        serde_json::to_writer(&mut out, s).map_err(|e| Error::Io(e.into()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Read JSON lines written by [`write_snapshots`]. Blank lines and a
/// `{"metadata": ..}` header line are skipped.
pub fn read_snapshots<R: BufRead>(input: R) -> Result<Vec<Snapshot>> {
    let mut v = Vec::new();
    for line in input.lines() {
        let line = line?;
        let l = line.trim();
        if l.is_empty() || l.starts_with("{\"metadata\"") {
            continue;
        }
        v.push(serde_json::from_str(&line).map_err(|e| Error::Io(e.into()))?);
    }
    Ok(v)
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: u64,
    pub seed: u64,
}

const PATH_CHUNK: usize = 2048;

/// Several observables on the same trajectories. Path `i` uses the random
/// stream `(seed, i)`, so the result does not depend on scheduling.
pub fn mc_expectations<const K: usize, F>(
    observable: F,
    t: f64,
    params: &AsepParams,
    window: SimWindow,
    n_paths: u64,
    seed: u64,
) -> Result<[McEstimate; K]>
where
    F: Fn(&AsepState) -> [f64; K] + Sync,
{
    if n_paths < 2 {
        return Err(Error::Config("need at least two paths".into()));
    }
    let start = init_half_flat(window);
    let partial = par::chunked(n_paths as usize, PATH_CHUNK, |range| {
        let mut s = [0.0; K];
        let mut ss = [0.0; K];
        for i in range {
            let mut st = start.clone();
            st.advance(t, params, &mut rng::stream(seed, i as u64));
            let v = observable(&st);
            for k in 0..K {
                s[k] += v[k];
                ss[k] += v[k] * v[k];
            }
        }
        (s, ss)
    });
    let mut s = [0.0; K];
    let mut ss = [0.0; K];
    for (a, b) in partial {
        for k in 0..K {
            s[k] += a[k];
            ss[k] += b[k];
        }
    }
    let n = n_paths as f64;
    Ok(std::array::from_fn(|k| {
        let mean = s[k] / n;
        let var = ((ss[k] - n * mean * mean) / (n - 1.0)).max(0.0);
        McEstimate { mean, stderr: (var / n).sqrt(), n_paths, seed }
    }))
}

/// Monte Carlo estimate of `E[observable(state at time t)]`.
pub fn mc_expectation<F>(
    observable: F,
    t: f64,
    params: &AsepParams,
    window: SimWindow,
    n_paths: u64,
    seed: u64,
) -> Result<McEstimate>
where
    F: Fn(&AsepState) -> f64 + Sync,
{
    mc_expectations(|s| [observable(s)], t, params, window, n_paths, seed).map(|[e]| e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_flat_layout() {
        let s = init_half_flat(SimWindow::new(-10, 10).unwrap());
        assert_eq!(s.occupancy(2).unwrap(), 1);
        assert_eq!(s.occupancy(4).unwrap(), 1);
        for x in [1, 0, -2] {
            assert_eq!(s.occupancy(x).unwrap(), 0);
        }
        assert_eq!(s.particle_count(7).unwrap(), 3);
        assert_eq!(s.particle_count(-3).unwrap(), 0);
        for x in 0..=10 {
            assert_eq!(s.particle_count(x).unwrap(), (x / 2) as u64);
            assert_eq!(s.height(x).unwrap(), -(x % 2));
        }
        for x in -10..=0 {
            assert_eq!(s.height(x).unwrap(), -x);
        }
        assert!(s.particle_count(11).is_err());
    }

    #[test]
    fn zero_time_is_identity() {
        let p = AsepParams::new(0.25).unwrap();
        let s = init_half_flat(SimWindow::default_for_time(1.0));
        assert_eq!(simulate_to(&s, 0.0, &p, 9), s);
    }

    #[test]
    fn params_identities() {
        let p = AsepParams::from_tau(0.005).unwrap();
        assert!((p.p / p.q - 0.005).abs() < 1e-15);
        assert!((p.q - p.p - p.gamma).abs() < 1e-15);
        assert!(AsepParams::new(0.5).is_err());
        assert!(AsepParams::new(0.0).is_err());
    }

    #[test]
    fn snapshot_roundtrip() {
        let p = AsepParams::new(0.3).unwrap();
        let s = simulate_to(&init_half_flat(SimWindow::default_for_time(2.0)), 2.0, &p, 4);
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &[s.snapshot()]).unwrap();
        let back = read_snapshots(&buf[..]).unwrap();
        let r = back[0].to_state().unwrap();
        assert_eq!(r.snapshot(), s.snapshot());
        for x in -20..20 {
            assert_eq!(r.height(x).unwrap(), s.height(x).unwrap());
        }
    }
}

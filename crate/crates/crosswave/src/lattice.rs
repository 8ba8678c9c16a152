//! Periodic tensor-product discretization of configuration space and the
//! unitary discrete Fourier transform between space and frequency
//! representations.
//!
//! The configuration space of `N` particles in `d` dimensions each is the
//! torus `[-L, L)^{dN}` sampled on `n` points per axis. Frequencies follow
//! the convention `ω_k = (π/L) k`, `k ∈ {-n/2, …, n/2-1}`, so continuum
//! multiplier formulas apply literally.
//!
//! ```
//! use crosswave::lattice::{make_grid, WaveState, Rep};
//! let grid = make_grid(1, 2, 8.0, 32).unwrap();
//! assert_eq!(grid.modes(), 1024);
//! assert!((grid.hx() - 0.5).abs() < 1e-15);
//! let one = WaveState::constant(&grid, 1.0.into());
//! assert!((one.l2_norm() - 16.0).abs() < 1e-12); // sqrt(volume) = sqrt(256)
//! ```

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{CwError, Result};

/// Hard ceiling on total mode count; beyond this a grid is rejected as
/// infeasible for the desk-scale memory budget.
pub const MODE_CEILING: usize = 1 << 24;

/// Representation tag of a coefficient field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rep {
    Space,
    Frequency,
}

/// Periodic lattice descriptor for `N` particles in `d` dimensions each.
///
/// Immutable and cheaply shareable behind `Arc`; all other modules hold a
/// reference to one of these.
pub struct GridSpec {
    d: usize,
    n_particles: usize,
    half_len: f64,
    points: usize,
    axes: usize,
    modes: usize,
    hx: f64,
    xs: Vec<f64>,
    freqs: Vec<f64>,
    /// (-1)^k phase aligning the FFT with the [-L, L) coordinate offset.
    alt: Vec<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridSpec")
            .field("d", &self.d)
            .field("n_particles", &self.n_particles)
            .field("half_len", &self.half_len)
            .field("points", &self.points)
            .finish()
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d
            && self.n_particles == other.n_particles
            && self.half_len == other.half_len
            && self.points == other.points
    }
}

/// Validated grid constructor.
pub fn make_grid(d: usize, n_particles: usize, half_len: f64, points: usize) -> Result<Arc<GridSpec>> {
    if !(1..=3).contains(&d) {
        return Err(CwError::InvalidGrid(format!("d must be 1..=3, got {d}")));
    }
    if n_particles == 0 {
        return Err(CwError::InvalidGrid("N must be >= 1".into()));
    }
    if half_len <= 0.0 || !half_len.is_finite() {
        return Err(CwError::InvalidGrid(format!("L must be positive, got {half_len}")));
    }
    if points < 4 || points % 2 != 0 {
        return Err(CwError::InvalidGrid(format!("n must be even and >= 4, got {points}")));
    }
    let axes = d * n_particles;
    let modes = (points as u128).checked_pow(axes as u32).ok_or_else(|| {
        CwError::InvalidGrid("mode count overflows".into())
    })?;
    if modes > MODE_CEILING as u128 {
        return Err(CwError::InvalidGrid(format!(
            "mode count {modes} exceeds ceiling {MODE_CEILING}"
        )));
    }
    let modes = modes as usize;
    let hx = 2.0 * half_len / points as f64;
    let xs = (0..points).map(|j| -half_len + j as f64 * hx).collect();
    let freqs = (0..points)
        .map(|m| {
            let k = if m < points / 2 { m as i64 } else { m as i64 - points as i64 };
            std::f64::consts::PI / half_len * k as f64
        })
        .collect();
    let alt = (0..points).map(|m| if m % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let mut planner = FftPlanner::new();
    let fft_fwd = planner.plan_fft_forward(points);
    let fft_inv = planner.plan_fft_inverse(points);
    Ok(Arc::new(GridSpec {
        d,
        n_particles,
        half_len,
        points,
        axes,
        modes,
        hx,
        xs,
        freqs,
        alt,
        fft_fwd,
        fft_inv,
    }))
}

impl GridSpec {
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn n_particles(&self) -> usize {
        self.n_particles
    }
    pub fn half_len(&self) -> f64 {
        self.half_len
    }
    pub fn points(&self) -> usize {
        self.points
    }
    /// Number of lattice axes, `d * N`.
    pub fn axes(&self) -> usize {
        self.axes
    }
    /// Total mode count `n^{dN}`.
    pub fn modes(&self) -> usize {
        self.modes
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    /// Axis coordinate of lattice index `j`.
    pub fn x(&self, j: usize) -> f64 {
        self.xs[j]
    }
    /// Signed frequency of FFT bin `m` on any axis.
    pub fn freq(&self, m: usize) -> f64 {
        self.freqs[m]
    }
    pub fn axis_coords(&self) -> &[f64] {
        &self.xs
    }
    pub fn axis_freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Decompose a flat mode index into per-axis indices (axis 0 slowest).
    pub fn decompose(&self, mut flat: usize, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.axes);
        for a in (0..self.axes).rev() {
            out[a] = flat % self.points;
            flat /= self.points;
        }
    }

    /// Recompose per-axis indices into a flat index.
    pub fn compose(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    /// Squared frequency magnitude `|ω_i|²` of particle `i` at a flat index.
    pub fn particle_freq_sq(&self, idx: &[usize], particle: usize) -> f64 {
        (0..self.d)
            .map(|c| {
                let w = self.freqs[idx[particle * self.d + c]];
                w * w
            })
            .sum()
    }

    /// Total `|ω|² = Σ_j |ω_j|²` at a flat index.
    pub fn total_freq_sq(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&m| self.freqs[m] * self.freqs[m]).sum()
    }

    pub(crate) fn fft_fwd_plan(&self) -> Arc<dyn Fft<f64>> {
        self.fft_fwd.clone()
    }
    pub(crate) fn fft_inv_plan(&self) -> Arc<dyn Fft<f64>> {
        self.fft_inv.clone()
    }

    /// Minimum-image displacement on one axis.
    pub fn min_image(&self, delta: f64) -> f64 {
        let period = 2.0 * self.half_len;
        let mut r = delta % period;
        if r < -self.half_len {
            r += period;
        } else if r >= self.half_len {
            r -= period;
        }
        r
    }
}

/// Complex coefficient field over the lattice, tagged with its
/// representation and time stamp.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub grid: Arc<GridSpec>,
    pub rep: Rep,
    pub coeffs: Vec<Complex64>,
    pub t: f64,
}

impl WaveState {
    pub fn zero(grid: &Arc<GridSpec>) -> Self {
        WaveState {
            grid: grid.clone(),
            rep: Rep::Space,
            coeffs: vec![Complex64::ZERO; grid.modes()],
            t: 0.0,
        }
    }

    pub fn constant(grid: &Arc<GridSpec>, value: Complex64) -> Self {
        WaveState {
            grid: grid.clone(),
            rep: Rep::Space,
            coeffs: vec![value; grid.modes()],
            t: 0.0,
        }
    }

    /// Build a state from a closure over configuration coordinates
    /// `x[axis]`, in space representation.
    pub fn from_fn(grid: &Arc<GridSpec>, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut coeffs = vec![Complex64::ZERO; grid.modes()];
        let mut idx = vec![0usize; grid.axes()];
        let mut xs = vec![0f64; grid.axes()];
        for (flat, c) in coeffs.iter_mut().enumerate() {
            grid.decompose(flat, &mut idx);
            for (a, &i) in idx.iter().enumerate() {
                xs[a] = grid.x(i);
            }
            *c = f(&xs);
        }
        WaveState {
            grid: grid.clone(),
            rep: Rep::Space,
            coeffs,
            t: 0.0,
        }
    }

    /// The plane wave `exp(i ω_k · x)` for per-axis bin indices `k`.
    pub fn plane_wave(grid: &Arc<GridSpec>, bins: &[usize]) -> Self {
        let omegas: Vec<f64> = bins.iter().map(|&m| grid.freq(m)).collect();
        Self::from_fn(grid, |xs| {
            let phase: f64 = xs.iter().zip(&omegas).map(|(x, w)| w * x).sum();
            Complex64::from_polar(1.0, phase)
        })
    }

    /// Discrete L² norm `(Σ |u|² hx^{dN})^{1/2}`; representation-independent
    /// under the unitary transform convention.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        s.sqrt() * self.grid.hx().powf(self.grid.axes() as f64 / 2.0)
    }

    /// L² inner product `⟨u, v⟩ = Σ conj(u) v hx^{dN}`.
    pub fn inner(&self, other: &WaveState) -> Complex64 {
        assert_eq!(self.rep, other.rep);
        let s: Complex64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.grid.hx().powi(self.grid.axes() as i32)
    }

    pub fn scale(&mut self, c: Complex64) {
        for v in &mut self.coeffs {
            *v *= c;
        }
    }

    pub fn axpy(&mut self, c: Complex64, other: &WaveState) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
    }

    /// `self - other`, elementwise (same representation required).
    pub fn sub(&self, other: &WaveState) -> WaveState {
        assert_eq!(self.rep, other.rep);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        WaveState {
            grid: self.grid.clone(),
            rep: self.rep,
            coeffs,
            t: self.t,
        }
    }

    /// Normalize to unit L² norm. Errors on the zero state.
    pub fn normalize(&mut self) -> Result<()> {
        let nrm = self.l2_norm();
        if nrm == 0.0 {
            return Err(CwError::InvalidGrid("cannot normalize the zero state".into()));
        }
        self.scale(Complex64::new(1.0 / nrm, 0.0));
        Ok(())
    }

    /// Unitary transform into the requested representation. A no-op when the
    /// state is already there.
    pub fn transform(&self, target: Rep) -> WaveState {
        if self.rep == target {
            return self.clone();
        }
        let mut out = self.clone();
        out.transform_in_place(target);
        out
    }

    pub fn transform_in_place(&mut self, target: Rep) {
        if self.rep == target {
            return;
        }
        let grid = self.grid.clone();
        let n = grid.points;
        let scale = 1.0 / (n as f64).sqrt();
        let forward = target == Rep::Frequency;
        let fft = if forward { grid.fft_fwd.clone() } else { grid.fft_inv.clone() };
        let mut line = vec![Complex64::ZERO; n];
        for axis in 0..grid.axes {
            let stride = grid.points.pow((grid.axes - 1 - axis) as u32);
            let block = stride * n;
            let outer = grid.modes / block;
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * block + inner;
                    if forward {
                        for (t, v) in line.iter_mut().enumerate() {
                            *v = self.coeffs[base + t * stride];
                        }
                        fft.process(&mut line);
                        for (m, v) in line.iter().enumerate() {
                            self.coeffs[base + m * stride] = v * (grid.alt[m] * scale);
                        }
                    } else {
                        for (m, v) in line.iter_mut().enumerate() {
                            *v = self.coeffs[base + m * stride] * grid.alt[m];
                        }
                        fft.process(&mut line);
                        for (t, v) in line.iter().enumerate() {
                            self.coeffs[base + t * stride] = v * scale;
                        }
                    }
                }
            }
        }
        self.rep = target;
    }

    /// Permute particle blocks of the multi-index: returns `u ∘ P`, i.e.
    /// `out(x) = u(P x)` where `P` sends particle `i`'s coordinates to
    /// position `perm[i]`. Exact coordinate-axis relabeling, no
    /// interpolation.
    pub fn permute_particles(&self, perm: &[usize]) -> WaveState {
        let grid = &self.grid;
        assert_eq!(perm.len(), grid.n_particles());
        let d = grid.d();
        let axes = grid.axes();
        let mut out = vec![Complex64::ZERO; grid.modes()];
        let mut idx = vec![0usize; axes];
        let mut pidx = vec![0usize; axes];
        for (flat, o) in out.iter_mut().enumerate() {
            grid.decompose(flat, &mut idx);
            for i in 0..grid.n_particles() {
                for c in 0..d {
                    pidx[i * d + c] = idx[perm[i] * d + c];
                }
            }
            *o = self.coeffs[grid.compose(&pidx)];
        }
        WaveState {
            grid: grid.clone(),
            rep: self.rep,
            coeffs: out,
            t: self.t,
        }
    }
}

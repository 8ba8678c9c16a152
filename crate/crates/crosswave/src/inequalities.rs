//! Quadrature and grid verification of the analytic inequalities the solver
//! relies on: radial Hardy bounds (with sharp constant `(k−3)²/4`), the pair
//! Hardy bound for antisymmetric two-particle states (`(k−5)²(k−3)²/16`),
//! the magnetic Hardy bound (`min_{k∈ℤ}(k−α)²`), mixed-norm Sobolev ratio
//! checks, Kato-type dispersive decay fits, Strichartz boundedness, and the
//! deterministic hyperbolic-cross projection bound.
//!
//! Measurement functions return raw ratios/fits; pass/fail aggregation into
//! [`CheckReport`] rows happens in the experiment drivers.
//!
//! ```
//! use crosswave::inequalities::{hardy_bound, hardy_ratio, RadialProfile};
//! let k = 4.5;
//! let profile = RadialProfile::bump(1.0, 0.3).unwrap();
//! assert!(hardy_ratio(&profile, k).unwrap() >= hardy_bound(k));
//! // Near-extremal profiles approach the sharp constant from above.
//! let tight = RadialProfile::near_extremal(k, 0.05).unwrap();
//! let ratio = hardy_ratio(&tight, k).unwrap();
//! assert!(ratio >= hardy_bound(k) && ratio < hardy_bound(k) * 1.10);
//! ```

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CwError, Result};
use crate::hypercross::{residual, CrossIndexSet, CutoffKind};
use crate::lattice::{make_grid, GridSpec, Rep, WaveState};
use crate::multipliers::{apply_k_sum, free_propagate, gradient, sobolev_half};
use crate::norms::{random_band_limited, spacetime_norm, SpatialNorm, Trajectory};
use crate::potentials::theta_p;

/// Default log-radial quadrature window and resolution.
pub const RHO_MIN: f64 = 1e-4;
pub const RHO_MAX: f64 = 1e2;
pub const RADIAL_NODES: usize = 4096;

// ---------------------------------------------------------------------------
// Radial Hardy inequality
// ---------------------------------------------------------------------------

/// Samples of a smooth radial function `f(ρ)` on a log-spaced grid, vanishing
/// near both ends (a stand-in for compact support away from the origin).
#[derive(Debug, Clone)]
pub struct RadialProfile {
    rho: Vec<f64>,
    f: Vec<f64>,
}

impl RadialProfile {
    /// Sample `f` on `nodes` log-spaced points of `[rho_min, rho_max]`.
    /// The sampled endpoint values must vanish (relative to the profile's
    /// amplitude); they are then clamped to exactly zero.
    pub fn from_fn(
        rho_min: f64,
        rho_max: f64,
        nodes: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(rho_min > 0.0 && rho_max > rho_min) || nodes < 16 {
            return Err(CwError::InvalidProfile(format!(
                "need 0 < rho_min < rho_max and >= 16 nodes, got [{rho_min}, {rho_max}] x {nodes}"
            )));
        }
        let dt = (rho_max / rho_min).ln() / (nodes - 1) as f64;
        let rho: Vec<f64> = (0..nodes)
            .map(|j| rho_min * (j as f64 * dt).exp())
            .collect();
        let mut vals: Vec<f64> = rho.iter().map(|&r| f(r)).collect();
        let amp = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if amp == 0.0 {
            return Err(CwError::InvalidProfile("zero profile".into()));
        }
        for &end in &[0usize, nodes - 1] {
            if vals[end].abs() > 1e-12 * amp {
                return Err(CwError::InvalidProfile(format!(
                    "profile must vanish at the radial endpoints (got {:.3e} at rho = {:.3e})",
                    vals[end], rho[end]
                )));
            }
            vals[end] = 0.0;
        }
        Ok(Self { rho, f: vals })
    }

    /// Smooth bump `exp(1 − 1/(1−x²))` with `x = (ρ−center)/width`, sampled
    /// on the default quadrature window. Support `[center−width, center+width]`
    /// must stay inside the window.
    pub fn bump(center: f64, width: f64) -> Result<Self> {
        if !(center - width > RHO_MIN && center + width < RHO_MAX && width > 0.0) {
            return Err(CwError::InvalidProfile(format!(
                "bump support [{}, {}] leaves the window [{RHO_MIN}, {RHO_MAX}]",
                center - width,
                center + width
            )));
        }
        Self::from_fn(RHO_MIN, RHO_MAX, RADIAL_NODES, move |r| {
            bump01((r - center) / width)
        })
    }

    /// Near-extremal family for the Hardy bound with exponent `k`: in the
    /// log variable `τ = ln ρ` the profile is `e^{στ}φ(τ)` with
    /// `σ = (k−3)/2` and `φ` a smoothstep plateau designed so that the exact
    /// continuum ratio equals `σ²(1+δ)` — i.e. the bound is approached from
    /// above as `δ → 0`.
    pub fn near_extremal(k: f64, delta: f64) -> Result<Self> {
        validate_hardy_k(k)?;
        if !(delta > 0.0) {
            return Err(CwError::InvalidProfile(format!(
                "delta must be positive, got {delta}"
            )));
        }
        let sigma = (k - 3.0) / 2.0;
        // With ramps of width w and plateau P = w, the excess over σ² is
        // (∫φ'²)/(∫φ²) = 2.4 / (w(P + 26w/35)) = 2.4 / ((61/35) w²).
        let w = (84.0 / (61.0 * delta * sigma * sigma)).sqrt();
        let p = w;
        let half = p / 2.0 + w;
        let pad = 0.5;
        let rho_min = (-(half + pad)).exp();
        let rho_max = (half + pad).exp();
        Self::from_fn(rho_min, rho_max, RADIAL_NODES, move |r| {
            let tau = r.ln();
            (sigma * tau).exp() * plateau(tau, p, w)
        })
    }

    /// Radii of the quadrature nodes.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Sampled profile values.
    pub fn values(&self) -> &[f64] {
        &self.f
    }

    /// Number of quadrature nodes (the recorded resolution).
    pub fn nodes(&self) -> usize {
        self.rho.len()
    }
}

/// Smoothstep `3x²−2x³` on `[0,1]`, clamped outside.
fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x * x * (3.0 - 2.0 * x)
    }
}

/// Plateau of height 1 on `[−p/2, p/2]` with smoothstep ramps of width `w`.
fn plateau(tau: f64, p: f64, w: f64) -> f64 {
    let a = tau.abs();
    if a <= p / 2.0 {
        1.0
    } else {
        smoothstep((p / 2.0 + w - a) / w)
    }
}

/// Normalized C^∞ bump: `exp(1 − 1/(1−x²))` for `|x| < 1`, zero outside.
fn bump01(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

/// Derivative of [`bump01`].
fn bump01_prime(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - x * x;
        bump01(x) * (-2.0 * x / (s * s))
    }
}

fn validate_hardy_k(k: f64) -> Result<()> {
    let ok = (2.0..3.0).contains(&k) || (k > 3.0 && k < 5.0);
    if ok {
        Ok(())
    } else {
        Err(CwError::ExponentWindow(format!(
            "Hardy exponent must lie in [2,3) ∪ (3,5), got {k}"
        )))
    }
}

/// Sharp radial Hardy constant `(k−3)²/4`.
pub fn hardy_bound(k: f64) -> f64 {
    (k - 3.0) * (k - 3.0) / 4.0
}

/// Ratio `∫ ρ^{2−k}|f′|² dx / ∫ ρ^{−k}|f|² dx` for a radial function in three
/// dimensions (the `4πρ²` measure factor cancels). Evaluated by trapezoid
/// quadrature in `τ = ln ρ` with a central-difference derivative; the result
/// is bounded below by [`hardy_bound`] up to quadrature error.
pub fn hardy_ratio(profile: &RadialProfile, k: f64) -> Result<f64> {
    validate_hardy_k(k)?;
    let n = profile.nodes();
    let f = &profile.f;
    let rho = &profile.rho;
    let dt = (rho[n - 1] / rho[0]).ln() / (n - 1) as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        // df/dτ by second-order differences on the uniform τ grid.
        let dfdt = if j == 0 {
            (-1.5 * f[0] + 2.0 * f[1] - 0.5 * f[2]) / dt
        } else if j == n - 1 {
            (1.5 * f[n - 1] - 2.0 * f[n - 2] + 0.5 * f[n - 3]) / dt
        } else {
            (f[j + 1] - f[j - 1]) / (2.0 * dt)
        };
        // In τ: ∫ρ^{4−k} f′(ρ)² dρ = ∫ e^{(3−k)τ}(df/dτ)² dτ and
        // ∫ρ^{2−k} f² dρ = ∫ e^{(3−k)τ} f² dτ.
        let weight = if j == 0 || j == n - 1 { 0.5 } else { 1.0 } * dt;
        let pw = rho[j].powf(3.0 - k);
        num += weight * pw * dfdt * dfdt;
        den += weight * pw * f[j] * f[j];
    }
    if den == 0.0 {
        return Err(CwError::InvalidProfile(
            "zero profile (vanishing denominator)".into(),
        ));
    }
    Ok(num / den)
}

// ---------------------------------------------------------------------------
// Pair Hardy inequality (Monte Carlo)
// ---------------------------------------------------------------------------

/// Pair Hardy constant `(k−5)²(k−3)²/16`.
pub fn pair_hardy_bound(k: f64) -> f64 {
    let a = k - 5.0;
    let b = k - 3.0;
    a * a * b * b / 16.0
}

/// Antisymmetric two-particle state in continuum ℝ³: a Slater pair of
/// Gaussians `u(x,y) = g_a(x)g_b(y) − g_b(x)g_a(y)` with
/// `g_c(x) = exp(−|x−c|²/(2σ²))`. Closed form, so all derivatives entering
/// the pair Hardy functional are analytic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianSlaterPair {
    pub center_a: [f64; 3],
    pub center_b: [f64; 3],
    pub sigma: f64,
}

impl GaussianSlaterPair {
    /// Centers displaced by `separation` along the z-axis.
    pub fn displaced(separation: f64, sigma: f64) -> Self {
        let h = separation / 2.0;
        Self {
            center_a: [0.0, 0.0, h],
            center_b: [0.0, 0.0, -h],
            sigma,
        }
    }

    fn orbital(&self, x: &[f64; 3], c: &[f64; 3]) -> f64 {
        let mut q = 0.0;
        for i in 0..3 {
            let d = x[i] - c[i];
            q += d * d;
        }
        (-q / (2.0 * self.sigma * self.sigma)).exp()
    }

    fn orbital_grad(&self, x: &[f64; 3], c: &[f64; 3]) -> [f64; 3] {
        let g = self.orbital(x, c);
        let s2 = self.sigma * self.sigma;
        [
            -(x[0] - c[0]) / s2 * g,
            -(x[1] - c[1]) / s2 * g,
            -(x[2] - c[2]) / s2 * g,
        ]
    }

    /// `u(x, y)`.
    pub fn value(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        self.orbital(x, &self.center_a) * self.orbital(y, &self.center_b)
            - self.orbital(x, &self.center_b) * self.orbital(y, &self.center_a)
    }

    /// Squared Frobenius norm of the mixed tensor `∇_x ⊗ ∇_y u`.
    pub fn mixed_frob_sq(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        // ∇_x∇_y u = A⊗B − C⊗D with the orbital gradients below;
        // |A⊗B − C⊗D|_F² = |A|²|B|² + |C|²|D|² − 2(A·C)(B·D).
        let a = self.orbital_grad(x, &self.center_a);
        let b = self.orbital_grad(y, &self.center_b);
        let c = self.orbital_grad(x, &self.center_b);
        let d = self.orbital_grad(y, &self.center_a);
        let dot = |u: &[f64; 3], v: &[f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        dot(&a, &a) * dot(&b, &b) + dot(&c, &c) * dot(&d, &d)
            - 2.0 * dot(&a, &c) * dot(&b, &d)
    }
}

/// Monte Carlo configuration for [`pair_hardy_ratio`]: stratified log-uniform
/// sampling of the relative radius `|r|` over `shells` equal log-width
/// strata, a uniform direction, and an isotropic Gaussian center coordinate
/// `D = x + y` of per-component standard deviation `d_std`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub batches: usize,
    pub shells: usize,
    pub seed: u64,
    pub r_min: f64,
    pub r_max: f64,
    pub d_std: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            batches: 50,
            shells: 16,
            seed: 7,
            r_min: 1e-4,
            r_max: 12.0,
            d_std: 4.0,
        }
    }
}

/// Relative-stderr threshold above which the MC estimate is inconclusive.
pub const MC_STDERR_THRESHOLD: f64 = 0.05;

/// Pair Hardy ratio `∫∫ |x−y|^{4−k} |∇_x∇_y u|² / ∫∫ |x−y|^{−k} |u|²`
/// estimated by importance-sampled Monte Carlo in `(r, D)` coordinates
/// (`r = x−y`, `D = x+y`, Jacobian `2^{−3}`), with both integrals sharing
/// samples and the ratio error bar from batch means. Must exceed
/// [`pair_hardy_bound`] up to `3·stderr`.
pub fn pair_hardy_ratio(
    pair: &GaussianSlaterPair,
    k: f64,
    cfg: &McConfig,
) -> Result<(f64, f64)> {
    if !(4.0..5.0).contains(&k) {
        return Err(CwError::ExponentWindow(format!(
            "pair Hardy exponent must lie in [4,5), got {k}"
        )));
    }
    if pair.center_a == pair.center_b {
        return Err(CwError::NotAntisymmetric(0.0));
    }
    if pair.sigma <= 0.0 || cfg.samples == 0 || cfg.batches == 0 || cfg.shells == 0 {
        return Err(CwError::Config("degenerate pair-Hardy configuration".into()));
    }
    if !(cfg.r_min > 0.0 && cfg.r_max > cfg.r_min && cfg.d_std > 0.0) {
        return Err(CwError::Config("invalid MC sampling ranges".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let batches = cfg.batches.min(cfg.samples);
    let per_batch = cfg.samples / batches;
    let log_span = (cfg.r_max / cfg.r_min).ln();
    let shell_span = log_span / cfg.shells as f64;
    let d_norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * cfg.d_std);

    let mut lhs_b = vec![0.0f64; batches];
    let mut rhs_b = vec![0.0f64; batches];
    for (b, (lb, rb)) in lhs_b.iter_mut().zip(rhs_b.iter_mut()).enumerate() {
        let _ = b;
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for s in 0..per_batch {
            // Stratified |r|: sample log-uniformly inside stratum s % shells.
            let stratum = s % cfg.shells;
            let log_rho = cfg.r_min.ln()
                + shell_span * (stratum as f64 + rng.gen::<f64>());
            let rho = log_rho.exp();
            // Uniform direction on S².
            let cos_t: f64 = rng.gen_range(-1.0..1.0);
            let sin_t = (1.0 - cos_t * cos_t).sqrt();
            let phi: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let r = [
                rho * sin_t * phi.cos(),
                rho * sin_t * phi.sin(),
                rho * cos_t,
            ];
            // Isotropic Gaussian D.
            let mut d = [0.0f64; 3];
            let mut q_d = 1.0;
            for dc in &mut d {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                *dc = z * cfg.d_std;
                q_d *= d_norm * (-0.5 * z * z).exp();
            }
            // Sampling density in Cartesian (r, D).
            let q_r = 1.0 / (log_span * rho) / (4.0 * std::f64::consts::PI * rho * rho);
            let weight = 1.0 / (8.0 * q_r * q_d);

            let x = [
                (d[0] + r[0]) / 2.0,
                (d[1] + r[1]) / 2.0,
                (d[2] + r[2]) / 2.0,
            ];
            let y = [
                (d[0] - r[0]) / 2.0,
                (d[1] - r[1]) / 2.0,
                (d[2] - r[2]) / 2.0,
            ];
            let u = pair.value(&x, &y);
            lhs += weight * rho.powf(4.0 - k) * pair.mixed_frob_sq(&x, &y);
            rhs += weight * rho.powf(-k) * u * u;
        }
        *lb = lhs / per_batch as f64;
        *rb = rhs / per_batch as f64;
    }

    let lhs_mean: f64 = lhs_b.iter().sum::<f64>() / batches as f64;
    let rhs_mean: f64 = rhs_b.iter().sum::<f64>() / batches as f64;
    if rhs_mean <= 0.0 {
        return Err(CwError::InvalidProfile(
            "pair-Hardy denominator estimate vanished".into(),
        ));
    }
    let ratio = lhs_mean / rhs_mean;
    // Delta-method stderr from batch means of the linearized statistic.
    let mut var = 0.0;
    for (lb, rb) in lhs_b.iter().zip(&rhs_b) {
        let dev = (lb - ratio * rb) / rhs_mean;
        var += dev * dev;
    }
    let stderr = (var / (batches as f64 * (batches as f64 - 1.0))).sqrt();
    let rel = stderr / ratio;
    if rel > MC_STDERR_THRESHOLD {
        return Err(CwError::Inconclusive(rel, MC_STDERR_THRESHOLD));
    }
    Ok((ratio, stderr))
}

// ---------------------------------------------------------------------------
// Magnetic Hardy inequality
// ---------------------------------------------------------------------------

/// Magnetic Hardy constant `min_{k∈ℤ} (k−α)²`.
pub fn magnetic_bound(alpha: f64) -> f64 {
    let lo = alpha.floor();
    let hi = alpha.ceil();
    (lo - alpha).powi(2).min((hi - alpha).powi(2))
}

/// Axially symmetric mode profile `g(r, z)` (the state is `g·e^{ikθ}` in
/// cylindrical coordinates) with analytic partials, sampled on a rectangle
/// `[r_min, r_max] × [z_min, z_max]` away from the axis.
pub struct AxialProfile {
    pub g: Box<dyn Fn(f64, f64) -> f64>,
    pub g_r: Box<dyn Fn(f64, f64) -> f64>,
    pub g_z: Box<dyn Fn(f64, f64) -> f64>,
    pub r_range: (f64, f64),
    pub z_range: (f64, f64),
    pub nodes: (usize, usize),
}

impl AxialProfile {
    /// Reference bump: `g = b((r−2)/1.2)·b(z/2)` with the normalized C^∞
    /// bump `b`, supported in `r ∈ [0.8, 3.2]`, `|z| ≤ 2` — compactly away
    /// from both the axis and the quadrature boundary.
    pub fn reference_bump() -> Self {
        let br = move |r: f64| bump01((r - 2.0) / 1.2);
        let bz = move |z: f64| bump01(z / 2.0);
        AxialProfile {
            g: Box::new(move |r, z| br(r) * bz(z)),
            g_r: Box::new(move |r, z| bump01_prime((r - 2.0) / 1.2) / 1.2 * bz(z)),
            g_z: Box::new(move |r, z| br(r) * bump01_prime(z / 2.0) / 2.0),
            r_range: (0.7, 3.3),
            z_range: (-2.1, 2.1),
            nodes: (400, 400),
        }
    }
}

/// Magnetic Hardy ratio for the azimuthal mode `mode_k` at flux `alpha`:
/// `∫∫ (g_r² + g_z² + (k−α)² g²/r²) / √(r²+z²) · r dr dz`
/// over `∫∫ g² / (r²+z²)^{3/2} · r dr dz`, by 2-d trapezoid quadrature.
/// Bounded below by [`magnetic_bound`] (the check is per mode, and
/// `1/(r²|x|) ≥ 1/|x|³` pointwise).
pub fn magnetic_hardy_ratio(profile: &AxialProfile, mode_k: i64, alpha: f64) -> Result<f64> {
    let (r0, r1) = profile.r_range;
    let (z0, z1) = profile.z_range;
    let (nr, nz) = profile.nodes;
    if !(r0 > 0.0 && r1 > r0 && z1 > z0) || nr < 8 || nz < 8 {
        return Err(CwError::InvalidProfile(
            "axial profile needs r_min > 0 and at least 8×8 nodes".into(),
        ));
    }
    let dr = (r1 - r0) / (nr - 1) as f64;
    let dz = (z1 - z0) / (nz - 1) as f64;
    let coef = (mode_k as f64 - alpha) * (mode_k as f64 - alpha);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..nr {
        let r = r0 + i as f64 * dr;
        let wi = if i == 0 || i == nr - 1 { 0.5 } else { 1.0 };
        for j in 0..nz {
            let z = z0 + j as f64 * dz;
            let wj = if j == 0 || j == nz - 1 { 0.5 } else { 1.0 };
            let w = wi * wj * dr * dz * r;
            let g = (profile.g)(r, z);
            let gr = (profile.g_r)(r, z);
            let gz = (profile.g_z)(r, z);
            let abs_x = (r * r + z * z).sqrt();
            num += w * (gr * gr + gz * gz + coef * g * g / (r * r)) / abs_x;
            den += w * g * g / (abs_x * abs_x * abs_x);
        }
    }
    if den == 0.0 {
        return Err(CwError::InvalidProfile(
            "zero profile (vanishing denominator)".into(),
        ));
    }
    Ok(num / den)
}

// ---------------------------------------------------------------------------
// Sobolev ratios in mixed norms
// ---------------------------------------------------------------------------

/// Which mixed norm a ratio check targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormTarget {
    /// `L^{p,2}_{x_k}`; the differentiated particle is `k` itself.
    Single { k: usize },
    /// `L^{p,2}_{i,j}`; the differentiated particle is `i`.
    Pair { i: usize, j: usize },
}

impl NormTarget {
    pub fn spatial(&self, p: f64) -> SpatialNorm {
        match *self {
            NormTarget::Single { k } => SpatialNorm::Single { k, p },
            NormTarget::Pair { i, j } => SpatialNorm::Pair { i, j, p },
        }
    }

    /// The particle index appearing in the differential operators.
    pub fn grad_index(&self) -> usize {
        match *self {
            NormTarget::Single { k } => k,
            NormTarget::Pair { i, .. } => i,
        }
    }

    fn norm_vec(&self, states: &[WaveState], p: f64) -> Result<f64> {
        match *self {
            NormTarget::Single { k } => crate::norms::norm_single_vec(states, k, p),
            NormTarget::Pair { i, j } => crate::norms::norm_pair_vec(states, i, j, p),
        }
    }
}

/// Numerator operator of a Sobolev ratio check; the denominator is always
/// `‖(1−Δ_i)^{1/2}u‖` in the same mixed norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SobolevVariant {
    /// `‖∇_i u‖` (inner L² over the gradient components).
    Gradient,
    /// `‖u‖` itself.
    Identity,
    /// The affine stack `(u, ∇_i u)`: its pointwise length is exactly the
    /// half-Laplacian weight, so the p = 2 ratio is identically 1.
    GradientStack,
}

/// Deterministic band-limited random ensemble shared by the ratio checks.
/// Because the band and seed pin the underlying trigonometric polynomial,
/// the same config on a refined grid (`points` doubled) resamples the very
/// same functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub d: usize,
    pub n_particles: usize,
    pub half_len: f64,
    pub points: usize,
    pub band: usize,
    pub count: usize,
    pub seed: u64,
}

impl EnsembleConfig {
    fn grid(&self, points: usize) -> Result<Arc<GridSpec>> {
        make_grid(self.d, self.n_particles, self.half_len, points)
    }

    fn members(&self, grid: &Arc<GridSpec>) -> Vec<WaveState> {
        (0..self.count)
            .map(|m| random_band_limited(grid, self.band, self.seed.wrapping_add(m as u64)))
            .collect()
    }
}

/// Outcome of an ensemble ratio check with a grid-refinement stability probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReport {
    pub max_ratio: f64,
    pub refined_max_ratio: f64,
    /// `|max − refined_max| / max`.
    pub drift: f64,
    pub ratios: Vec<f64>,
}

fn sobolev_ratio_one(
    u: &WaveState,
    target: NormTarget,
    p: f64,
    variant: SobolevVariant,
) -> Result<f64> {
    let i = target.grad_index();
    let num = match variant {
        SobolevVariant::Gradient => target.norm_vec(&gradient(u, i), p)?,
        SobolevVariant::Identity => target.norm_vec(std::slice::from_ref(u), p)?,
        SobolevVariant::GradientStack => {
            let mut stack = gradient(u, i);
            stack.push(u.clone());
            target.norm_vec(&stack, p)?
        }
    };
    let den = target.norm_vec(&[sobolev_half(u, i)], p)?;
    if den == 0.0 {
        return Err(CwError::InvalidProfile("zero state in ensemble".into()));
    }
    Ok(num / den)
}

/// Ensemble maximum of the ratio `‖Au‖_{L^{p,2}} / ‖(1−Δ_i)^{1/2}u‖_{L^{p,2}}`
/// for the requested variant `A`, plus the same maximum on a grid with twice
/// the points per axis (same band-limited functions) and the relative drift.
/// At p = 2 the per-mode multiplier is at most one, so `max_ratio ≤ 1`
/// exactly; for p ≠ 2 small drift is the boundedness evidence.
pub fn sobolev_ratio(
    cfg: &EnsembleConfig,
    target: NormTarget,
    p: f64,
    variant: SobolevVariant,
) -> Result<RatioReport> {
    let grid = cfg.grid(cfg.points)?;
    let fine = cfg.grid(cfg.points * 2)?;
    let mut ratios = Vec::with_capacity(cfg.count);
    let mut max_ratio = 0.0f64;
    let mut refined_max = 0.0f64;
    for (u, v) in cfg.members(&grid).iter().zip(cfg.members(&fine).iter()) {
        let r = sobolev_ratio_one(u, target, p, variant)?;
        ratios.push(r);
        max_ratio = max_ratio.max(r);
        refined_max = refined_max.max(sobolev_ratio_one(v, target, p, variant)?);
    }
    let drift = if max_ratio > 0.0 {
        (max_ratio - refined_max).abs() / max_ratio
    } else {
        0.0
    };
    Ok(RatioReport {
        max_ratio,
        refined_max_ratio: refined_max,
        drift,
        ratios,
    })
}

// ---------------------------------------------------------------------------
// Dispersive decay fit
// ---------------------------------------------------------------------------

/// Mass fraction allowed in the outer 10% coordinate band before a dispersive
/// measurement is declared boundary-contaminated.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;

/// Result of a dispersive-decay fit: `samples` holds `(t, norm)` pairs, the
/// `exponent` is the least-squares slope of `ln norm` against `ln t`, and
/// `expected = −d(1/2 − 1/p)` (the free-flow decay law, `−3(1/2−1/p)` in
/// three dimensions).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersiveFit {
    pub exponent: f64,
    pub expected: f64,
    pub residual: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Fraction of the state's mass with any coordinate in the outer 10% of the
/// box.
pub fn boundary_mass_fraction(state: &WaveState) -> f64 {
    let grid = state.grid.clone();
    let u = state.transform(Rep::Space);
    let edge = 0.9 * grid.half_len();
    let mut idx = vec![0usize; grid.axes()];
    let mut outer = 0.0;
    let mut total = 0.0;
    for (flat, v) in u.coeffs.iter().enumerate() {
        grid.decompose(flat, &mut idx);
        let m = v.norm_sqr();
        total += m;
        if idx.iter().any(|&j| grid.x(j).abs() >= edge) {
            outer += m;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outer / total
    }
}

/// Free-flow decay fit: evolve a centered Gaussian of width `sigma` and fit
/// the log-log slope of the requested spatial norm against time. Errors with
/// `BoundaryContamination` if at any sampled time the wave packet puts more
/// than [`BOUNDARY_MASS_LIMIT`] of its mass in the outer 10% band.
pub fn dispersive_fit(
    grid: &Arc<GridSpec>,
    spatial: &SpatialNorm,
    sigma: f64,
    times: &[f64],
) -> Result<DispersiveFit> {
    if times.len() < 2 || times.iter().any(|&t| t <= 0.0) {
        return Err(CwError::Config(
            "dispersive fit needs at least two positive times".into(),
        ));
    }
    if sigma <= 0.0 {
        return Err(CwError::Config("Gaussian width must be positive".into()));
    }
    let mut u0 = WaveState::from_fn(grid, |x| {
        let q: f64 = x.iter().map(|&c| c * c).sum();
        Complex64::new((-q / (2.0 * sigma * sigma)).exp(), 0.0)
    });
    u0.normalize()?;
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let ut = free_propagate(&u0, t);
        let frac = boundary_mass_fraction(&ut);
        if frac > BOUNDARY_MASS_LIMIT {
            return Err(CwError::BoundaryContamination(frac, BOUNDARY_MASS_LIMIT));
        }
        samples.push((t, spatial.eval(&ut)?));
    }
    let (slope, residual) = log_log_fit(&samples)?;
    let d = grid.d() as f64;
    let p = match *spatial {
        SpatialNorm::L2 => 2.0,
        SpatialNorm::Single { p, .. } | SpatialNorm::Pair { p, .. } => p,
    };
    Ok(DispersiveFit {
        exponent: slope,
        expected: -d * (0.5 - 1.0 / p),
        residual,
        samples,
    })
}

/// Least-squares slope of `ln y` vs `ln x` with RMS residual.
pub fn log_log_fit(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(_, y)| y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(CwError::Config("too few positive samples for a fit".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(CwError::Config("degenerate fit abscissae".into()));
    }
    let slope = sxy / sxx;
    let res2: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - my - slope * (p.0 - mx);
            e * e
        })
        .sum();
    Ok((slope, (res2 / n).sqrt()))
}

// ---------------------------------------------------------------------------
// Strichartz boundedness
// ---------------------------------------------------------------------------

/// Ensemble maximum of `‖U₀(·)f‖_{L_t^{θ_p} L^{p,2}} / ‖f‖₂` over free
/// evolutions sampled at `steps + 1` uniform times on `[0, horizon]`, with
/// the grid-refinement probe of [`RatioReport`]. At p = 2 (θ = ∞) unitarity
/// makes every ratio exactly 1; for p > 2 stability under refinement is the
/// boundedness evidence.
pub fn strichartz_ratio(
    cfg: &EnsembleConfig,
    target: NormTarget,
    p: f64,
    horizon: f64,
    steps: usize,
) -> Result<RatioReport> {
    if !(horizon > 0.0) || steps < 1 {
        return Err(CwError::Config(
            "Strichartz probe needs a positive horizon and at least one step".into(),
        ));
    }
    let theta = theta_p(p)?;
    let spatial = target.spatial(p);
    let one = |u: &WaveState| -> Result<f64> {
        let snaps: Vec<WaveState> = (0..=steps)
            .map(|m| free_propagate(u, m as f64 * horizon / steps as f64))
            .collect();
        let traj = Trajectory::new(snaps)?;
        Ok(spacetime_norm(&traj, theta, &spatial)? / u.l2_norm())
    };
    let grid = cfg.grid(cfg.points)?;
    let fine = cfg.grid(cfg.points * 2)?;
    let mut ratios = Vec::with_capacity(cfg.count);
    let mut max_ratio = 0.0f64;
    let mut refined_max = 0.0f64;
    for (u, v) in cfg.members(&grid).iter().zip(cfg.members(&fine).iter()) {
        let r = one(u)?;
        ratios.push(r);
        max_ratio = max_ratio.max(r);
        refined_max = refined_max.max(one(v)?);
    }
    let drift = if max_ratio > 0.0 {
        (max_ratio - refined_max).abs() / max_ratio
    } else {
        0.0
    };
    Ok(RatioReport {
        max_ratio,
        refined_max_ratio: refined_max,
        drift,
        ratios,
    })
}

// ---------------------------------------------------------------------------
// Hyperbolic-cross projection bound
// ---------------------------------------------------------------------------

/// Deterministic residual bound `‖(1−P_R)u‖₂ ≤ (1/R)‖Σ_l K_{I_l} u‖₂`,
/// valid for EVERY state because the cross weight of each excluded mode
/// exceeds `R`. Returns `(lhs, rhs, pass)` with a `1e−12` relative slack.
pub fn projection_bound(state: &WaveState, cross: &CrossIndexSet) -> Result<(f64, f64, bool)> {
    if cross.cutoff() != CutoffKind::Indicator {
        return Err(CwError::Config(
            "projection bound requires the indicator cutoff".into(),
        ));
    }
    let lhs = residual(state, cross)?.l2_norm();
    let classes: Vec<Vec<usize>> = cross.partition().classes().to_vec();
    let rhs = apply_k_sum(state, &classes).l2_norm() / cross.r();
    Ok((lhs, rhs, lhs <= rhs * (1.0 + 1e-12)))
}

// ---------------------------------------------------------------------------
// Check reports
// ---------------------------------------------------------------------------

/// One verified inequality: the claimed `constant`, the `measured` value,
/// the `tolerance` used for the comparison, and the verdict. `reference`
/// names the inequality family the check belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub reference: String,
    pub constant: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckReport {
    /// A one-sided lower-bound check: `measured ≥ constant − tolerance`.
    pub fn lower_bound(
        name: &str,
        reference: &str,
        constant: f64,
        measured: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            reference: reference.into(),
            constant,
            measured,
            tolerance,
            pass: measured >= constant - tolerance,
        }
    }

    /// A two-sided target check: `|measured − constant| ≤ tolerance`.
    pub fn target(
        name: &str,
        reference: &str,
        constant: f64,
        measured: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            reference: reference.into(),
            constant,
            measured,
            tolerance,
            pass: (measured - constant).abs() <= tolerance,
        }
    }

    /// An upper-bound check: `measured ≤ constant + tolerance`.
    pub fn upper_bound(
        name: &str,
        reference: &str,
        constant: f64,
        measured: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            reference: reference.into(),
            constant,
            measured,
            tolerance,
            pass: measured <= constant + tolerance,
        }
    }
}

/// Serialize a batch of checks as a JSON array.
pub fn checks_to_json(checks: &[CheckReport]) -> String {
    serde_json::to_string_pretty(checks).expect("check reports serialize")
}

/// Write `(t, value)` fit samples as a two-column CSV.
pub fn write_fit_csv<W: std::io::Write>(w: W, samples: &[(f64, f64)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["t", "value"])
        .map_err(|e| CwError::Format(e.to_string()))?;
    for &(t, v) in samples {
        wtr.write_record([format!("{t:.17e}"), format!("{v:.17e}")])
            .map_err(|e| CwError::Format(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

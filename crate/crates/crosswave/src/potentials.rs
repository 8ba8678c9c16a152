//! Regularized Coulomb potentials with moving nuclei, and the exponent
//! arithmetic for the Strichartz / contraction machinery.
//!
//! The nuclear attraction of charge `Z_μ` at `a_μ(t)` acts on every
//! particle as `Z_μ / (|x_j - a_μ(t)| + ε)`, and the pair repulsion as
//! `1 / (|x_k - x_j| + ε)`; both use minimum-image distances on the torus.
//! The soft-core `ε > 0` removes the singularity on the grid.
//!
//! ```
//! use crosswave::potentials::{theta_p, theta_alpha_beta, ExponentSet};
//! assert_eq!(theta_p(4.0).unwrap(), 8.0 / 3.0);
//! assert!(theta_p(2.0).unwrap().is_infinite()); // p = 2 carries no gain
//! assert_eq!(theta_alpha_beta(&ExponentSet::default()).unwrap(), 4.0);
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{CwError, Result};
use crate::lattice::GridSpec;

/// A nucleus: positive charge and a trajectory given per coordinate as
/// polynomial coefficients in time (constant term first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nucleus {
    pub charge: f64,
    /// `path[c]` = coefficients of the degree-k polynomial for coordinate c.
    pub path: Vec<Vec<f64>>,
}

impl Nucleus {
    pub fn static_at(charge: f64, position: &[f64]) -> Self {
        Nucleus {
            charge,
            path: position.iter().map(|&p| vec![p]).collect(),
        }
    }

    /// Position at time `t` by Horner evaluation.
    pub fn position(&self, t: f64) -> Vec<f64> {
        self.path
            .iter()
            .map(|coeffs| coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c))
            .collect()
    }

    pub fn is_static(&self) -> bool {
        self.path.iter().all(|c| c.len() <= 1)
    }
}

/// Potential configuration: nuclei, soft-core regularization, and whether
/// the pair interaction is active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub nuclei: Vec<Nucleus>,
    pub epsilon: f64,
    pub pair_interaction: bool,
}

impl PotentialSpec {
    pub fn free() -> Self {
        PotentialSpec {
            nuclei: Vec::new(),
            epsilon: 0.1,
            pair_interaction: false,
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        for nuc in &self.nuclei {
            if nuc.charge <= 0.0 {
                return Err(CwError::Config(format!(
                    "nuclear charge must be positive, got {}",
                    nuc.charge
                )));
            }
            if nuc.path.len() != grid.d() {
                return Err(CwError::Config(format!(
                    "nucleus path has {} coordinates, grid has d = {}",
                    nuc.path.len(),
                    grid.d()
                )));
            }
        }
        if self.epsilon < 0.0 {
            return Err(CwError::Config("epsilon must be nonnegative".into()));
        }
        if self.epsilon == 0.0 && self.pair_interaction {
            return Err(CwError::SingularPotential(
                "pair interaction with ε = 0 is singular on the coincidence set".into(),
            ));
        }
        Ok(())
    }

    pub fn charge_sum(&self) -> f64 {
        self.nuclei.iter().map(|n| n.charge).sum()
    }
}

/// Nuclear attraction field `Σ_j Σ_μ Z_μ / (|x_j - a_μ(t)| + ε)` over the
/// configuration lattice, with minimum-image distances.
pub fn eval_nuclear(grid: &GridSpec, spec: &PotentialSpec, t: f64) -> Result<Vec<f64>> {
    spec.validate(grid)?;
    let d = grid.d();
    let n_p = grid.n_particles();
    let positions: Vec<Vec<f64>> = spec.nuclei.iter().map(|nuc| nuc.position(t)).collect();
    // per-particle table over the n^d single-particle lattice
    let pts = grid.points();
    let sub_count = pts.pow(d as u32);
    let mut table = vec![0.0f64; sub_count];
    let mut xs = vec![0.0f64; d];
    for (sub, slot) in table.iter_mut().enumerate() {
        let mut rem = sub;
        for c in (0..d).rev() {
            xs[c] = grid.x(rem % pts);
            rem /= pts;
        }
        for (nuc, pos) in spec.nuclei.iter().zip(&positions) {
            let dist2: f64 = xs
                .iter()
                .zip(pos)
                .map(|(&x, &a)| {
                    let dd = grid.min_image(x - a);
                    dd * dd
                })
                .sum();
            let dist = dist2.sqrt();
            if dist + spec.epsilon == 0.0 {
                return Err(CwError::SingularPotential(format!(
                    "ε = 0 and nucleus on a grid point at t = {t}"
                )));
            }
            *slot += nuc.charge / (dist + spec.epsilon);
        }
    }
    // sum over particles by multi-index decomposition
    let mut field = vec![0.0f64; grid.modes()];
    let mut idx = vec![0usize; grid.axes()];
    for (flat, slot) in field.iter_mut().enumerate() {
        grid.decompose(flat, &mut idx);
        for i in 0..n_p {
            let mut sub = 0usize;
            for c in 0..d {
                sub = sub * pts + idx[i * d + c];
            }
            *slot += table[sub];
        }
    }
    Ok(field)
}

/// Pair repulsion field `Σ_{j<k} 1 / (|x_k - x_j| + ε)`; exactly symmetric
/// under particle permutations.
pub fn eval_pair(grid: &GridSpec, spec: &PotentialSpec) -> Result<Vec<f64>> {
    spec.validate(grid)?;
    if !spec.pair_interaction {
        return Ok(vec![0.0; grid.modes()]);
    }
    if spec.epsilon == 0.0 {
        return Err(CwError::SingularPotential(
            "pair interaction requires ε > 0".into(),
        ));
    }
    let d = grid.d();
    let n_p = grid.n_particles();
    let mut field = vec![0.0f64; grid.modes()];
    let mut idx = vec![0usize; grid.axes()];
    for (flat, slot) in field.iter_mut().enumerate() {
        grid.decompose(flat, &mut idx);
        for j in 0..n_p {
            for k in j + 1..n_p {
                let mut dist2 = 0.0;
                for c in 0..d {
                    let dd = grid
                        .min_image(grid.x(idx[j * d + c]) - grid.x(idx[k * d + c]));
                    dist2 += dd * dd;
                }
                *slot += 1.0 / (dist2.sqrt() + spec.epsilon);
            }
        }
    }
    Ok(field)
}

/// Exponent bundle for the mixed-norm machinery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub p: f64,
    pub q: f64,
    pub p_tilde: f64,
    pub q_tilde: f64,
    pub alpha: f64,
    pub alpha_p: f64,
    pub alpha_q: f64,
    pub beta_p: f64,
    pub beta_q: f64,
}

impl Default for ExponentSet {
    /// The Coulomb case: `p = q = 4` with all auxiliary time exponents
    /// infinite.
    fn default() -> Self {
        ExponentSet {
            p: 4.0,
            q: 4.0,
            p_tilde: 4.0,
            q_tilde: 4.0,
            alpha: 0.25,
            alpha_p: f64::INFINITY,
            alpha_q: f64::INFINITY,
            beta_p: f64::INFINITY,
            beta_q: f64::INFINITY,
        }
    }
}

/// Strichartz time exponent: `2/θ_p = 3(1/2 - 1/p)`, with `θ_2 = +∞`.
pub fn theta_p(p: f64) -> Result<f64> {
    if !(2.0..=6.0).contains(&p) {
        return Err(CwError::ExponentWindow(format!("p must be in [2, 6], got {p}")));
    }
    if p == 2.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(4.0 * p / (3.0 * (p - 2.0)))
    }
}

/// Contraction exponent for general potential classes:
/// `1/θ_{α,β} = min{3/p - 1/2 - 1/α_p, 3/q - 1/2 - 1/α_q, 1 - 1/β_p, 1 - 1/β_q}`.
pub fn theta_alpha_beta(e: &ExponentSet) -> Result<f64> {
    if !(2.0..6.0).contains(&e.p) || !(2.0..6.0).contains(&e.q) {
        return Err(CwError::ExponentWindow(format!(
            "need 2 <= p,q < 6, got p = {}, q = {}",
            e.p, e.q
        )));
    }
    let entries = [
        3.0 / e.p - 0.5 - 1.0 / e.alpha_p,
        3.0 / e.q - 0.5 - 1.0 / e.alpha_q,
        1.0 - 1.0 / e.beta_p,
        1.0 - 1.0 / e.beta_q,
    ];
    let m = entries.iter().cloned().fold(f64::INFINITY, f64::min);
    if m <= 0.0 {
        return Err(CwError::ExponentWindow(format!(
            "contraction exponent not positive: min = {m}"
        )));
    }
    Ok(1.0 / m)
}

/// Mixed-regularity contraction exponent:
/// `1/θ = min{3/(2p) + 3/(2p̃) - 1/2, 3/(2q) + 3/(2q̃) - 1/2}`.
pub fn theta_mixed(p: f64, p_tilde: f64, q: f64, q_tilde: f64) -> Result<f64> {
    let entries = [
        1.5 / p + 1.5 / p_tilde - 0.5,
        1.5 / q + 1.5 / q_tilde - 0.5,
    ];
    let m = entries.iter().cloned().fold(f64::INFINITY, f64::min);
    if m <= 0.0 {
        return Err(CwError::ExponentWindow(format!(
            "mixed exponent not positive: min = {m}"
        )));
    }
    Ok(1.0 / m)
}

/// Which contraction inequality to solve for the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContractionRule {
    /// `C T^{1/θ} N(N+1) < 1/2`
    General,
    /// `C₁ (Σ_μ Z_μ + N) N T^{1/θ} < 1/2`
    MixedRegularity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionWindow {
    pub t_max: f64,
    pub rule: ContractionRule,
    /// `C_est` used; the constants are not pinned down analytically, so all
    /// windows are conditional on this estimate.
    pub c_est: f64,
}

impl ContractionWindow {
    /// Dimensionless margin `1/2 - C·prefactor·T^{1/θ}` at a given horizon;
    /// positive inside the window.
    pub fn margin_at(&self, t: f64, prefactor: f64, theta: f64) -> f64 {
        0.5 - self.c_est * prefactor * t.powf(1.0 / theta)
    }
}

/// Largest horizon `T` keeping the selected contraction inequality strict.
pub fn contraction_t(
    c_est: f64,
    n_particles: usize,
    z_sum: f64,
    theta: f64,
    rule: ContractionRule,
) -> Result<ContractionWindow> {
    if c_est <= 0.0 || theta <= 0.0 || n_particles == 0 {
        return Err(CwError::Config(
            "contraction inputs must be positive".into(),
        ));
    }
    let n = n_particles as f64;
    let prefactor = match rule {
        ContractionRule::General => n * (n + 1.0),
        ContractionRule::MixedRegularity => (z_sum + n) * n,
    };
    let t_max = (0.5 / (c_est * prefactor)).powf(theta);
    Ok(ContractionWindow { t_max, rule, c_est })
}

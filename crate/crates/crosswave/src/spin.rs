//! Spin classes, the Pauli antisymmetry condition, the antisymmetrizer, and
//! construction of admissible initial data.
//!
//! A fixed spin assignment `σ` partitions the particle indices into classes
//! `I_1, …, I_s`; the wavefunction must change sign under exchange of two
//! particles in a common class. The antisymmetrizer averages signed
//! permutations per class, which is an L²-orthogonal projection onto the
//! admissible subspace.
//!
//! ```
//! use crosswave::lattice::make_grid;
//! use crosswave::spin::{slater_init, pauli_residual, Orbital, SlaterOptions, SpinPartition};
//! let grid = make_grid(1, 2, 8.0, 16).unwrap();
//! let part = SpinPartition::single_class(2);
//! let orbitals = vec![vec![
//!     Orbital::gaussian(&grid, &[-1.0], 0.8),
//!     Orbital::gaussian(&grid, &[1.0], 0.8),
//! ]];
//! let u = slater_init(&orbitals, &part, &grid, SlaterOptions::default()).unwrap();
//! assert!((u.l2_norm() - 1.0).abs() < 1e-12);
//! assert!(pauli_residual(&u, &part) < 1e-12);
//! ```

use num_complex::Complex64;

use crate::error::{CwError, Result};
use crate::lattice::{GridSpec, Rep, WaveState};
use std::sync::Arc;

/// Largest class size for which the exact permutation sum is attempted.
pub const FACTORIAL_BUDGET: usize = 5;

/// The spin classes `I_1 … I_s` partitioning particle indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinPartition {
    sigma: Vec<usize>,
    classes: Vec<Vec<usize>>,
}

impl SpinPartition {
    /// Build from per-particle spin labels (1-based, e.g. `[1, 1, 2]`).
    pub fn from_labels(sigma: &[usize]) -> Result<Self> {
        if sigma.is_empty() {
            return Err(CwError::Config("empty spin label list".into()));
        }
        let s = *sigma.iter().max().unwrap();
        if sigma.iter().any(|&l| l == 0 || l > s) {
            return Err(CwError::Config("spin labels must be 1..=s".into()));
        }
        let mut classes: Vec<Vec<usize>> = vec![Vec::new(); s];
        for (i, &l) in sigma.iter().enumerate() {
            classes[l - 1].push(i);
        }
        // drop empty label values but keep I_l = {i : σ_i = l} intact
        let classes: Vec<Vec<usize>> = classes.into_iter().filter(|c| !c.is_empty()).collect();
        Ok(SpinPartition {
            sigma: sigma.to_vec(),
            classes,
        })
    }

    /// One class containing every particle.
    pub fn single_class(n_particles: usize) -> Self {
        SpinPartition {
            sigma: vec![1; n_particles],
            classes: vec![(0..n_particles).collect()],
        }
    }

    /// Every particle alone in its own class (no antisymmetry constraints).
    pub fn distinguishable(n_particles: usize) -> Self {
        SpinPartition {
            sigma: (1..=n_particles).collect(),
            classes: (0..n_particles).map(|i| vec![i]).collect(),
        }
    }

    pub fn n_particles(&self) -> usize {
        self.sigma.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.sigma
    }

    /// All intra-class transpositions (i, j), i < j.
    pub fn transpositions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for class in &self.classes {
            for a in 0..class.len() {
                for b in a + 1..class.len() {
                    out.push((class[a], class[b]));
                }
            }
        }
        out
    }
}

fn permutation_sign(perm: &[usize]) -> f64 {
    let mut inv = 0usize;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Generate all permutations of `0..k` with Heap's algorithm.
fn all_permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut arr: Vec<usize> = (0..k).collect();
    fn heap(arr: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            out.push(arr.clone());
            return;
        }
        for i in 0..k {
            heap(arr, k - 1, out);
            if k % 2 == 0 {
                arr.swap(i, k - 1);
            } else {
                arr.swap(0, k - 1);
            }
        }
    }
    let k0 = arr.len();
    heap(&mut arr, k0, &mut out);
    out
}

/// Signed permutation average over one class, applied in sequence over all
/// classes: `𝒜 u(x) = (1/|I_l|!) Σ sign(P) u(P x)` per class.
///
/// Idempotent and L²-orthogonal; the result satisfies
/// `u(P_{i,j} x) = -u(x)` for every intra-class transposition.
pub fn antisymmetrize(state: &WaveState, partition: &SpinPartition) -> Result<WaveState> {
    assert_eq!(partition.n_particles(), state.grid.n_particles());
    let mut current = state.transform(Rep::Space);
    for class in partition.classes() {
        let k = class.len();
        if k <= 1 {
            continue;
        }
        if k > FACTORIAL_BUDGET {
            return Err(CwError::ClassTooLarge(k));
        }
        let mut acc = WaveState::zero(&state.grid);
        acc.t = state.t;
        let inv_fact = 1.0 / (1..=k).product::<usize>() as f64;
        for perm in all_permutations(k) {
            let sign = permutation_sign(&perm);
            // full-particle permutation: identity outside the class
            let mut full: Vec<usize> = (0..partition.n_particles()).collect();
            for (slot, &p) in perm.iter().enumerate() {
                full[class[slot]] = class[p];
            }
            let permuted = current.permute_particles(&full);
            acc.axpy(Complex64::new(sign * inv_fact, 0.0), &permuted);
        }
        current = acc;
    }
    Ok(current)
}

/// Max over intra-class transpositions of `‖u∘P_{i,j} + u‖₂ / ‖u‖₂`;
/// zero iff Pauli-admissible, 2 for a symmetric state, and in [0, 2] always.
pub fn pauli_residual(state: &WaveState, partition: &SpinPartition) -> f64 {
    let u = state.transform(Rep::Space);
    let nrm = u.l2_norm();
    if nrm == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for (i, j) in partition.transpositions() {
        let mut perm: Vec<usize> = (0..partition.n_particles()).collect();
        perm.swap(i, j);
        let mut swapped = u.permute_particles(&perm);
        swapped.axpy(Complex64::ONE, &u);
        worst = worst.max(swapped.l2_norm() / nrm);
    }
    worst
}

/// A one-particle orbital sampled on the `n^d` single-particle lattice.
#[derive(Debug, Clone)]
pub struct Orbital {
    pub values: Vec<Complex64>,
}

impl Orbital {
    /// Periodized Gaussian `exp(-|x-c|²/(2σ²))` (minimum-image distance).
    pub fn gaussian(grid: &GridSpec, center: &[f64], sigma: f64) -> Self {
        Self::from_fn(grid, |xs| {
            let r2: f64 = xs
                .iter()
                .zip(center)
                .map(|(&x, &c)| {
                    let d = grid.min_image(x - c);
                    d * d
                })
                .sum();
            Complex64::new((-r2 / (2.0 * sigma * sigma)).exp(), 0.0)
        })
    }

    /// Periodized exponential `exp(-|x-c|/a)`; its frequency tail decays
    /// only polynomially (Lorentzian in d = 1), which is what makes shaped
    /// initial data genuinely rough.
    pub fn exponential(grid: &GridSpec, center: &[f64], a: f64) -> Self {
        Self::from_fn(grid, |xs| {
            let r2: f64 = xs
                .iter()
                .zip(center)
                .map(|(&x, &c)| {
                    let d = grid.min_image(x - c);
                    d * d
                })
                .sum();
            Complex64::new((-r2.sqrt() / a).exp(), 0.0)
        })
    }

    /// Periodized stretched exponential `exp(-(|x-c|/a)^p)`, `0 < p ≤ 1`.
    /// The cusp sharpness `p` tunes the algebraic frequency-decay rate
    /// continuously between the exponential (`p = 1`) and flatter tails,
    /// which is how rough-but-admissible initial data is calibrated.
    pub fn stretched_exponential(grid: &GridSpec, center: &[f64], a: f64, p: f64) -> Self {
        Self::from_fn(grid, |xs| {
            let r2: f64 = xs
                .iter()
                .zip(center)
                .map(|(&x, &c)| {
                    let d = grid.min_image(x - c);
                    d * d
                })
                .sum();
            Complex64::new((-(r2.sqrt() / a).powf(p)).exp(), 0.0)
        })
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let d = grid.d();
        let pts = grid.points();
        let count = pts.pow(d as u32);
        let mut values = vec![Complex64::ZERO; count];
        let mut xs = vec![0f64; d];
        for (flat, v) in values.iter_mut().enumerate() {
            let mut rem = flat;
            for c in (0..d).rev() {
                xs[c] = grid.x(rem % pts);
                rem /= pts;
            }
            *v = f(&xs);
        }
        Orbital { values }
    }
}

/// Frequency-decay shaping and determinant construction options.
#[derive(Debug, Clone, Copy)]
pub struct SlaterOptions {
    /// When set, multiply frequency coefficients by
    /// `∏_i (1+|ω_i|²)^{-s/2}` and re-antisymmetrize, prescribing a finite
    /// first-order mixed norm while higher ones stay divergent.
    pub s_decay: Option<f64>,
}

impl Default for SlaterOptions {
    fn default() -> Self {
        SlaterOptions { s_decay: None }
    }
}

/// Normalized determinantal product over spin classes.
///
/// `orbitals[l]` supplies `|I_l|` one-particle orbitals for class `l`.
pub fn slater_init(
    orbitals: &[Vec<Orbital>],
    partition: &SpinPartition,
    grid: &Arc<GridSpec>,
    options: SlaterOptions,
) -> Result<WaveState> {
    if orbitals.len() != partition.n_classes() {
        return Err(CwError::Config(format!(
            "expected {} orbital groups, got {}",
            partition.n_classes(),
            orbitals.len()
        )));
    }
    for (l, class) in partition.classes().iter().enumerate() {
        if orbitals[l].len() != class.len() {
            return Err(CwError::Config(format!(
                "class {} needs {} orbitals, got {}",
                l,
                class.len(),
                orbitals[l].len()
            )));
        }
    }
    let d = grid.d();
    let pts = grid.points();
    // product state: orbital m of class l occupies particle classes[l][m]
    let mut product = WaveState::zero(grid);
    let mut idx = vec![0usize; grid.axes()];
    for (flat, out) in product.coeffs.iter_mut().enumerate() {
        grid.decompose(flat, &mut idx);
        let mut v = Complex64::ONE;
        for (l, class) in partition.classes().iter().enumerate() {
            for (m, &i) in class.iter().enumerate() {
                let mut sub = 0usize;
                for c in 0..d {
                    sub = sub * pts + idx[i * d + c];
                }
                v *= orbitals[l][m].values[sub];
            }
        }
        *out = v;
    }
    let prod_norm = product.l2_norm();
    let mut state = antisymmetrize(&product, partition)?;
    let det_norm = state.l2_norm();
    if det_norm < 1e-10 * prod_norm.max(f64::MIN_POSITIVE) {
        return Err(CwError::RankDeficient(det_norm));
    }
    state.normalize()?;
    if let Some(s) = options.s_decay {
        let mut hat = state.transform(Rep::Frequency);
        let mut idx = vec![0usize; grid.axes()];
        for flat in 0..grid.modes() {
            grid.decompose(flat, &mut idx);
            let mut w = 1.0;
            for i in 0..grid.n_particles() {
                w *= (1.0 + grid.particle_freq_sq(&idx, i)).powf(-s / 2.0);
            }
            hat.coeffs[flat] *= w;
        }
        state = antisymmetrize(&hat.transform(Rep::Space), partition)?;
        state.normalize()?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_state(grid: &Arc<GridSpec>, seed: u64) -> WaveState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..grid.modes())
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        WaveState {
            grid: grid.clone(),
            rep: Rep::Space,
            coeffs,
            t: 0.0,
        }
    }

    #[test]
    fn two_particle_antisymmetrization() {
        let grid = make_grid(1, 2, 8.0, 32).unwrap();
        let part = SpinPartition::single_class(2);
        let phi = Orbital::gaussian(&grid, &[-1.0], 1.0);
        let psi = Orbital::gaussian(&grid, &[1.0], 1.0);
        // u = φ(x1)ψ(x2) -> (φψ - ψφ)/2
        let u = WaveState::from_fn(&grid, |x| {
            let i1 = ((x[0] + 8.0) / grid.hx()).round() as usize % 32;
            let i2 = ((x[1] + 8.0) / grid.hx()).round() as usize % 32;
            phi.values[i1] * psi.values[i2]
        });
        let a = antisymmetrize(&u, &part).unwrap();
        let expected = WaveState::from_fn(&grid, |x| {
            let i1 = ((x[0] + 8.0) / grid.hx()).round() as usize % 32;
            let i2 = ((x[1] + 8.0) / grid.hx()).round() as usize % 32;
            (phi.values[i1] * psi.values[i2] - psi.values[i1] * phi.values[i2]) / 2.0
        });
        let dev = a
            .coeffs
            .iter()
            .zip(&expected.coeffs)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-13);
        assert!(pauli_residual(&a, &part) < 1e-12);
    }

    #[test]
    fn symmetric_input_annihilated() {
        let grid = make_grid(1, 2, 8.0, 16).unwrap();
        let part = SpinPartition::single_class(2);
        let sym = WaveState::from_fn(&grid, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0));
        let a = antisymmetrize(&sym, &part).unwrap();
        assert!(a.l2_norm() < 1e-12);
        // and a symmetric nonzero state has residual exactly 2
        assert!((pauli_residual(&sym, &part) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn idempotent_and_projection() {
        let grid = make_grid(1, 3, 4.0, 8).unwrap();
        let part = SpinPartition::from_labels(&[1, 1, 2]).unwrap();
        let u = random_state(&grid, 11);
        let a1 = antisymmetrize(&u, &part).unwrap();
        let a2 = antisymmetrize(&a1, &part).unwrap();
        let dev = a1
            .coeffs
            .iter()
            .zip(&a2.coeffs)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12);
        assert!(a1.l2_norm() <= u.l2_norm() * (1.0 + 1e-12));
        assert!(pauli_residual(&a1, &part) < 1e-12);
    }

    #[test]
    fn residual_range_on_random_states() {
        let grid = make_grid(1, 2, 4.0, 8).unwrap();
        let part = SpinPartition::single_class(2);
        for seed in 0..5 {
            let r = pauli_residual(&random_state(&grid, seed), &part);
            assert!((0.0..=2.0 + 1e-12).contains(&r));
        }
    }

    #[test]
    fn slater_two_gaussians() {
        let grid = make_grid(1, 2, 8.0, 32).unwrap();
        let part = SpinPartition::single_class(2);
        let orbs = vec![vec![
            Orbital::gaussian(&grid, &[-1.5], 0.8),
            Orbital::gaussian(&grid, &[1.5], 0.8),
        ]];
        let u = slater_init(&orbs, &part, &grid, SlaterOptions::default()).unwrap();
        assert!((u.l2_norm() - 1.0).abs() < 1e-12);
        assert!(pauli_residual(&u, &part) < 1e-12);
    }

    #[test]
    fn identical_orbitals_rejected() {
        let grid = make_grid(1, 2, 8.0, 32).unwrap();
        let part = SpinPartition::single_class(2);
        let o = Orbital::gaussian(&grid, &[0.0], 1.0);
        let orbs = vec![vec![o.clone(), o]];
        assert!(matches!(
            slater_init(&orbs, &part, &grid, SlaterOptions::default()),
            Err(CwError::RankDeficient(_))
        ));
    }

    #[test]
    fn class_too_large() {
        let grid = make_grid(1, 6, 4.0, 4).unwrap();
        let part = SpinPartition::single_class(6);
        let u = random_state(&grid, 0);
        assert!(matches!(
            antisymmetrize(&u, &part),
            Err(CwError::ClassTooLarge(6))
        ));
    }
}

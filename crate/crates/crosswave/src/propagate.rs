//! Time integration: Strang splitting for the regularized Hamiltonian
//! `H(t) = −ΣΔ_j − ΣV + ΣW`, the projected Galerkin system on a
//! hyperbolic cross, the Duhamel operator `S`, and Picard iteration with
//! contraction diagnostics.
//!
//! Sign conventions follow the Hamiltonian exactly: the potential part of
//! `H` is `−V + W`, so one splitting substep multiplies by the phase
//! `exp(+i·dt·(V − W))`. The Duhamel fixed-point equation is solved in the
//! form `u = U₀u₀ + i S((V − W) u)`, which is the unique sign choice
//! consistent with that Hamiltonian.
//!
//! ```
//! use crosswave::lattice::make_grid;
//! use crosswave::norms::random_band_limited;
//! use crosswave::potentials::PotentialSpec;
//! use crosswave::propagate::{evolve, EvolveConfig};
//! let grid = make_grid(1, 1, 4.0, 16).unwrap();
//! let mut u0 = random_band_limited(&grid, 3, 1);
//! u0.normalize().unwrap();
//! let cfg = EvolveConfig::new(PotentialSpec::free(), 0.1, 1e-2);
//! let traj = evolve(&u0, &cfg).unwrap();
//! // Strang splitting is a product of phase multipliers: exactly unitary.
//! let end = traj.snapshots.last().unwrap();
//! assert!((end.l2_norm() - 1.0).abs() < 1e-12);
//! ```

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CwError, Result};
use crate::hypercross::{project, residual, CrossIndexSet};
use crate::lattice::{make_grid, Rep, WaveState};
use crate::multipliers::free_propagate;
use crate::norms::{x_norm, Trajectory};
use crate::potentials::{
    contraction_t, eval_nuclear, eval_pair, theta_alpha_beta, ContractionRule, ExponentSet,
    PotentialSpec,
};
use crate::spin::{pauli_residual, SpinPartition};

/// Admissibility threshold on the Pauli residual of initial data.
pub const PAULI_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    Strang,
    Picard,
}

/// Full description of one evolution run.
#[derive(Debug, Clone)]
pub struct EvolveConfig {
    pub potential: PotentialSpec,
    pub partition: Option<SpinPartition>,
    pub exponents: ExponentSet,
    pub t_end: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub projected: Option<CrossIndexSet>,
    pub snapshot_stride: usize,
    /// Estimated contraction constant entering the admissible-horizon
    /// inequality (not pinned down analytically; windows are conditional).
    pub c_est: f64,
}

impl EvolveConfig {
    pub fn new(potential: PotentialSpec, t_end: f64, dt: f64) -> Self {
        EvolveConfig {
            potential,
            partition: None,
            exponents: ExponentSet::default(),
            t_end,
            dt,
            scheme: Scheme::Strang,
            projected: None,
            snapshot_stride: 1,
            c_est: 1.0,
        }
    }

    /// Number of steps; errors unless `T/dt` is integral.
    pub fn steps(&self) -> Result<usize> {
        if self.dt <= 0.0 || self.t_end <= 0.0 {
            return Err(CwError::Config("dt and T must be positive".into()));
        }
        let ratio = self.t_end / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(CwError::Config(format!(
                "T/dt = {ratio} is not an integer step count"
            )));
        }
        let steps = steps as usize;
        if self.snapshot_stride == 0 || steps % self.snapshot_stride != 0 {
            return Err(CwError::Config(format!(
                "snapshot stride {} must divide the step count {steps}",
                self.snapshot_stride
            )));
        }
        Ok(steps)
    }
}

/// One Strang step: half kinetic, potential substep at the midpoint, half
/// kinetic.
///
/// Unprojected, the potential substep is the exact unitary phase
/// `exp(+i·dt·(V−W))`. In projected mode the substep integrates the
/// Galerkin system on `Ω(R)` instead — a Crank–Nicolson (Cayley) step of
/// the projected generator `P_R (V−W) P_R`, which is self-adjoint on the
/// subspace, so the step is exactly unitary there and the discrete norm is
/// conserved; the kinetic multiplier leaves `Ω(R)` invariant on its own.
/// Returns the stepped state and the magnitude of the driving term removed
/// by the Galerkin truncation (`dt·‖(1−P_R)((V−W)u)‖`, zero unprojected).
pub fn strang_step(
    state: &WaveState,
    potential: &PotentialSpec,
    t: f64,
    dt: f64,
    projected: Option<&CrossIndexSet>,
) -> Result<(WaveState, f64)> {
    let w_field = eval_pair(&state.grid, potential)?;
    let v_field = eval_nuclear(&state.grid, potential, t + dt / 2.0)?;
    strang_step_cached(state, &v_field, &w_field, dt, projected)
}

/// [`strang_step`] with pre-evaluated potential fields (`v_field` at the
/// midpoint time), for inner loops.
pub fn strang_step_cached(
    state: &WaveState,
    v_field: &[f64],
    w_field: &[f64],
    dt: f64,
    projected: Option<&CrossIndexSet>,
) -> Result<(WaveState, f64)> {
    let mut u = free_propagate(state, dt / 2.0);
    u.transform_in_place(Rep::Space);
    let mut leakage = 0.0;
    match projected {
        None => {
            for ((c, &v), &w) in u.coeffs.iter_mut().zip(v_field).zip(w_field) {
                *c *= Complex64::from_polar(1.0, dt * (v - w));
            }
        }
        Some(cross) => {
            // Galerkin substep on Ω(R): u' = i P φ P u with φ = V − W.
            // Crank–Nicolson: (1 − i·dt/2·Pφ)u⁺ = (1 + i·dt/2·Pφ)u⁻,
            // solved by fixed-point iteration (dt·max|φ|/2 < 1 in practice).
            let mul_phi = |s: &WaveState| -> WaveState {
                let mut out = s.clone();
                for ((c, &v), &w) in out.coeffs.iter_mut().zip(v_field).zip(w_field) {
                    *c *= v - w;
                }
                out
            };
            let phi_u = mul_phi(&u);
            leakage = dt * residual(&phi_u, cross)?.l2_norm();
            let g_minus = project(&phi_u, cross)?;
            // rhs = u⁻ + i dt/2 G u⁻
            let mut rhs = u.clone();
            rhs.axpy(Complex64::new(0.0, 0.5 * dt), &g_minus);
            let nrm = u.l2_norm().max(f64::MIN_POSITIVE);
            let mut x = u.clone();
            let mut converged = false;
            for _ in 0..200 {
                // x ← rhs + i dt/2 G x
                let gx = project(&mul_phi(&x), cross)?;
                let mut next = rhs.clone();
                next.axpy(Complex64::new(0.0, 0.5 * dt), &gx);
                let delta = next.sub(&x).l2_norm();
                x = next;
                if delta < 1e-14 * nrm {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(CwError::Config(
                    "projected potential substep did not converge; reduce dt".into(),
                ));
            }
            u = x;
        }
    }
    let out = free_propagate(&u, dt / 2.0);
    Ok((out, leakage))
}

/// Diagnostics gathered along an evolution.
#[derive(Debug, Clone, Default)]
pub struct EvolveDiagnostics {
    /// Per-step projection leakage norms (empty when unprojected).
    pub leakage: Vec<f64>,
}

/// Strang evolution of `u0` under `config`, recording snapshots every
/// `snapshot_stride` steps (the initial state included). In projected mode
/// the run starts from `P_R u0` and every snapshot stays supported in
/// `Ω(R)` exactly.
pub fn evolve(u0: &WaveState, config: &EvolveConfig) -> Result<Trajectory> {
    Ok(evolve_diagnostic(u0, config)?.0)
}

pub fn evolve_diagnostic(
    u0: &WaveState,
    config: &EvolveConfig,
) -> Result<(Trajectory, EvolveDiagnostics)> {
    let steps = config.steps()?;
    config.potential.validate(&u0.grid)?;
    if let Some(part) = &config.partition {
        let res = pauli_residual(u0, part);
        if res > PAULI_TOL {
            return Err(CwError::NotAntisymmetric(res));
        }
    }
    let mut u = match &config.projected {
        Some(cross) => project(u0, cross)?,
        None => u0.transform(Rep::Space),
    };
    u.t = 0.0;
    let w_field = eval_pair(&u0.grid, &config.potential)?;
    let static_nuclei = config.potential.nuclei.iter().all(|n| n.is_static());
    let v_static = if static_nuclei {
        Some(eval_nuclear(&u0.grid, &config.potential, 0.0)?)
    } else {
        None
    };
    let mut snapshots = vec![u.clone()];
    let mut diag = EvolveDiagnostics::default();
    for step in 0..steps {
        let t = step as f64 * config.dt;
        let (next, leak) = match &v_static {
            Some(v) => strang_step_cached(&u, v, &w_field, config.dt, config.projected.as_ref())?,
            None => strang_step(&u, &config.potential, t, config.dt, config.projected.as_ref())?,
        };
        u = next;
        // keep time stamps exact multiples of dt
        u.t = (step + 1) as f64 * config.dt;
        if config.projected.is_some() {
            diag.leakage.push(leak);
        }
        if (step + 1) % config.snapshot_stride == 0 {
            snapshots.push(u.clone());
        }
    }
    Ok((Trajectory::new(snapshots)?, diag))
}

/// Duhamel operator `(S f)(t) = ∫₀ᵗ U₀(t−τ) f(τ) dτ` by trapezoid
/// quadrature over the forcing snapshots. `t` must coincide with a
/// snapshot time inside the horizon.
pub fn duhamel_s(forcing: &Trajectory, t: f64) -> Result<WaveState> {
    let times = forcing.times();
    if t > forcing.horizon() * (1.0 + 1e-12) {
        return Err(CwError::Trajectory(format!(
            "t = {t} beyond the forcing horizon {}",
            forcing.horizon()
        )));
    }
    let m_end = times
        .iter()
        .position(|&tm| (tm - t).abs() < 1e-10 * t.max(1.0))
        .ok_or_else(|| CwError::Trajectory(format!("t = {t} is not a snapshot time")))?;
    let mut acc = WaveState::zero(&forcing.snapshots[0].grid);
    acc.t = t;
    if m_end == 0 {
        return Ok(acc);
    }
    acc.transform_in_place(Rep::Space);
    for m in 0..=m_end {
        let dt_left = if m == 0 { 0.0 } else { times[m] - times[m - 1] };
        let dt_right = if m == m_end { 0.0 } else { times[m + 1] - times[m] };
        let weight = 0.5 * (dt_left + dt_right);
        let prop = free_propagate(&forcing.snapshots[m], t - times[m]);
        acc.axpy(Complex64::new(weight, 0.0), &prop.transform(Rep::Space));
    }
    Ok(acc)
}

/// The combined potential forcing `(V_total − W_total)(t)·u(t)` per
/// snapshot — the integrand of the Duhamel form of the equation.
fn potential_forcing(traj: &Trajectory, potential: &PotentialSpec) -> Result<Trajectory> {
    let grid = traj.grid().clone();
    potential.validate(&grid)?;
    let w_field = eval_pair(&grid, potential)?;
    let mut out = Vec::with_capacity(traj.snapshots.len());
    for snap in &traj.snapshots {
        let v_field = eval_nuclear(&grid, potential, snap.t)?;
        let mut s = snap.transform(Rep::Space);
        for ((c, &v), &w) in s.coeffs.iter_mut().zip(&v_field).zip(&w_field) {
            *c *= v - w;
        }
        out.push(s);
    }
    Trajectory::new(out)
}

/// `Q u`: Duhamel integral of the potential forcing at every snapshot time,
/// evaluated with the exact trapezoid recurrence
/// `I(t_{m+1}) = U₀(dt)(I(t_m) + dt/2·f(t_m)) + dt/2·f(t_{m+1})`.
/// The fixed-point update is `u ← U₀u₀ + i·Qu`.
pub fn apply_q(
    traj: &Trajectory,
    potential: &PotentialSpec,
    _partition: Option<&SpinPartition>,
) -> Result<Trajectory> {
    let forcing = potential_forcing(traj, potential)?;
    let grid = traj.grid().clone();
    let mut out = Vec::with_capacity(traj.snapshots.len());
    let mut acc = WaveState::zero(&grid);
    out.push(acc.clone());
    for m in 1..forcing.snapshots.len() {
        let dt = forcing.snapshots[m].t - forcing.snapshots[m - 1].t;
        let mut half = acc.clone();
        half.axpy(Complex64::new(0.5 * dt, 0.0), &forcing.snapshots[m - 1]);
        acc = free_propagate(&half, dt);
        acc.transform_in_place(Rep::Space);
        acc.axpy(Complex64::new(0.5 * dt, 0.0), &forcing.snapshots[m]);
        acc.t = forcing.snapshots[m].t;
        out.push(acc.clone());
    }
    Trajectory::new(out)
}

/// Result of a Picard solve.
#[derive(Debug, Clone)]
pub struct PicardResult {
    pub trajectory: Trajectory,
    /// `‖u^{m+1}−u^m‖_X / ‖u^m−u^{m−1}‖_X` per iteration (first entry NaN-free:
    /// starts at the second difference).
    pub ratios: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Horizon of the configured contraction window (diagnostic).
    pub t_max: f64,
}

/// Picard iteration `u^{(m+1)} = U₀u₀ + i·Q u^{(m)}` from `u^{(0)} = U₀u₀`,
/// measured in the X norm with the configured exponents. The horizon must
/// lie inside the contraction window unless `override_contraction` is set;
/// outside the window diverging ratios are flagged, not fatal.
pub fn picard_solve(
    u0: &WaveState,
    config: &EvolveConfig,
    tol: f64,
    max_iter: usize,
    override_contraction: bool,
) -> Result<PicardResult> {
    let steps = config.steps()?;
    config.potential.validate(&u0.grid)?;
    if let Some(part) = &config.partition {
        let res = pauli_residual(u0, part);
        if res > PAULI_TOL {
            return Err(CwError::NotAntisymmetric(res));
        }
    }
    let theta = theta_alpha_beta(&config.exponents)?;
    let window = contraction_t(
        config.c_est,
        u0.grid.n_particles(),
        config.potential.charge_sum(),
        theta,
        ContractionRule::General,
    )?;
    if config.t_end > window.t_max && !override_contraction {
        return Err(CwError::ContractionWindow {
            t: config.t_end,
            t_max: window.t_max,
        });
    }
    let (p, q) = (config.exponents.p, config.exponents.q);
    // free trajectory U₀(t)u₀ on the snapshot grid
    let stride = config.snapshot_stride;
    let free: Vec<WaveState> = (0..=steps / stride)
        .map(|m| {
            let t = (m * stride) as f64 * config.dt;
            let mut s = free_propagate(u0, t);
            s.t = t;
            s
        })
        .collect();
    let free_traj = Trajectory::new(free)?;
    let mut current = free_traj.clone();
    let mut ratios = Vec::new();
    let mut prev_diff: Option<f64> = None;
    for iter in 1..=max_iter {
        let qu = apply_q(&current, &config.potential, config.partition.as_ref())?;
        let next_snaps: Vec<WaveState> = free_traj
            .snapshots
            .iter()
            .zip(&qu.snapshots)
            .map(|(f, q)| {
                let mut s = f.transform(Rep::Space);
                s.axpy(Complex64::I, &q.transform(Rep::Space));
                s.t = f.t;
                s
            })
            .collect();
        let next = Trajectory::new(next_snaps)?;
        let diff_snaps: Vec<WaveState> = next
            .snapshots
            .iter()
            .zip(&current.snapshots)
            .map(|(a, b)| {
                let mut d = a.sub(&b.transform(a.rep));
                d.t = a.t;
                d
            })
            .collect();
        let diff = x_norm(&Trajectory::new(diff_snaps)?, p, q)?.x_value;
        if let Some(prev) = prev_diff {
            if prev > 0.0 {
                ratios.push(diff / prev);
            }
        }
        current = next;
        if diff < tol {
            return Ok(PicardResult {
                trajectory: current,
                ratios,
                iterations: iter,
                converged: true,
                t_max: window.t_max,
            });
        }
        prev_diff = Some(diff);
    }
    let diverging = ratios.last().map_or(true, |&r| r >= 1.0);
    if diverging && !override_contraction {
        return Err(CwError::NoContraction(max_iter));
    }
    Ok(PicardResult {
        trajectory: current,
        ratios,
        iterations: max_iter,
        converged: false,
        t_max: window.t_max,
    })
}

const CHECKPOINT_MAGIC: &[u8] = b"CROSSWAVE-CKPT-1\n";

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    version: u32,
    d: usize,
    n_particles: usize,
    half_len: f64,
    points: usize,
    rep: String,
    t: f64,
    scheme: Scheme,
    spin_labels: Option<Vec<usize>>,
    potential: PotentialSpec,
}

/// Write a bit-exact checkpoint: JSON header line (grid, partition,
/// potential, scheme, time) followed by the raw little-endian coefficient
/// array.
pub fn write_checkpoint<W: Write>(
    mut w: W,
    state: &WaveState,
    partition: Option<&SpinPartition>,
    potential: &PotentialSpec,
    scheme: Scheme,
) -> Result<()> {
    let header = CheckpointHeader {
        version: 1,
        d: state.grid.d(),
        n_particles: state.grid.n_particles(),
        half_len: state.grid.half_len(),
        points: state.grid.points(),
        rep: match state.rep {
            Rep::Space => "space".into(),
            Rep::Frequency => "frequency".into(),
        },
        t: state.t,
        scheme,
        spin_labels: partition.map(|p| p.labels().to_vec()),
        potential: potential.clone(),
    };
    w.write_all(CHECKPOINT_MAGIC)?;
    let json = serde_json::to_string(&header).map_err(|e| CwError::Format(e.to_string()))?;
    w.write_all(json.as_bytes())?;
    w.write_all(b"\n")?;
    for c in &state.coeffs {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

/// Read a checkpoint written by [`write_checkpoint`]; the coefficient
/// round trip is bit-exact.
pub fn read_checkpoint<R: Read>(
    mut r: R,
) -> Result<(WaveState, Option<SpinPartition>, PotentialSpec, Scheme)> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if !buf.starts_with(CHECKPOINT_MAGIC) {
        return Err(CwError::Format("bad checkpoint magic".into()));
    }
    let rest = &buf[CHECKPOINT_MAGIC.len()..];
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| CwError::Format("truncated checkpoint header".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&rest[..nl])
        .map_err(|e| CwError::Format(format!("checkpoint header: {e}")))?;
    if header.version != 1 {
        return Err(CwError::Format(format!(
            "unsupported checkpoint version {}",
            header.version
        )));
    }
    let grid = make_grid(header.d, header.n_particles, header.half_len, header.points)?;
    let body = &rest[nl + 1..];
    let expect = grid.modes() * 16;
    if body.len() != expect {
        return Err(CwError::Format(format!(
            "coefficient payload is {} bytes, expected {expect}",
            body.len()
        )));
    }
    let coeffs: Vec<Complex64> = body
        .chunks_exact(16)
        .map(|ch| {
            let re = f64::from_le_bytes(ch[..8].try_into().unwrap());
            let im = f64::from_le_bytes(ch[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    let rep = match header.rep.as_str() {
        "space" => Rep::Space,
        "frequency" => Rep::Frequency,
        other => return Err(CwError::Format(format!("unknown representation {other}"))),
    };
    let state = WaveState {
        grid,
        rep,
        coeffs,
        t: header.t,
    };
    let partition = header
        .spin_labels
        .map(|l| SpinPartition::from_labels(&l))
        .transpose()?;
    Ok((state, partition, header.potential, header.scheme))
}

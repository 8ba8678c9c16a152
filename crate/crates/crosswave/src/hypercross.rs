//! The hyperbolic-cross frequency set `Ω(R)`, its cutoff `χ_R`, and the
//! projection `P_R` with its residual.
//!
//! A mode `ω = (ω_1, …, ω_N)` belongs to `Ω(R)` when
//! `Σ_l ∏_{i∈I_l} (1+|ω_i|²)^{1/2} ≤ R`, with the sum running over the spin
//! classes; equality is inside the set. The cross weight majorizes `R` on
//! the complement, which is exactly what drives the `1/R` residual bound.
//!
//! ```
//! use crosswave::lattice::{make_grid, WaveState};
//! use crosswave::spin::SpinPartition;
//! use crosswave::hypercross::{enumerate_cross, project};
//! let grid = make_grid(1, 1, 8.0, 32).unwrap();
//! let part = SpinPartition::single_class(1);
//! let cross = enumerate_cross(&grid, &part, 1.0).unwrap();
//! assert_eq!(cross.members().len(), 1); // only ω = 0 at the boundary R = 1
//! let u = WaveState::plane_wave(&grid, &[0]);
//! let pu = project(&u, &cross).unwrap();
//! assert!((pu.l2_norm() - u.l2_norm()).abs() < 1e-12);
//! ```

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{CwError, Result};
use crate::lattice::{GridSpec, Rep, WaveState};
use crate::spin::SpinPartition;

/// Grids with at most this many modes are enumerated by a full scan; larger
/// ones go through depth-first pruning over per-particle shells.
pub const FULL_SCAN_LIMIT: usize = 1 << 20;

/// Cutoff shape for `χ_R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutoffKind {
    /// Exactly 1 on `Ω(R)`, 0 elsewhere (default; projection bounds use it).
    Indicator,
    /// 1 on `Ω(R)`, a raised-cosine roll-off over weights in
    /// `(R, R(1+taper_width))`, 0 beyond; smooth in the cross weight.
    RaisedCosine { taper_width: f64 },
}

/// Immutable hyperbolic-cross index set over one grid and spin partition.
#[derive(Debug, Clone)]
pub struct CrossIndexSet {
    grid: Arc<GridSpec>,
    partition: SpinPartition,
    r: f64,
    cutoff: CutoffKind,
    /// Sorted flat indices of `Ω(R)` proper.
    members: Vec<usize>,
    /// `χ_R` on members: exactly 1 for either cutoff.
    weights: Vec<f64>,
    /// Taper zone of the raised cosine (empty for the indicator).
    taper: Vec<(usize, f64)>,
    /// Membership/χ lookup covering members and taper.
    chi: HashMap<usize, f64>,
    /// Set when `R < s` forced `Ω(R)` to be empty (vacuous projection).
    vacuous: bool,
}

impl CrossIndexSet {
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }
    pub fn partition(&self) -> &SpinPartition {
        &self.partition
    }
    pub fn cutoff(&self) -> CutoffKind {
        self.cutoff
    }
    pub fn members(&self) -> &[usize] {
        &self.members
    }
    pub fn member_weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn taper(&self) -> &[(usize, f64)] {
        &self.taper
    }
    pub fn is_vacuous(&self) -> bool {
        self.vacuous
    }

    /// `χ_R` at a flat mode index.
    pub fn chi(&self, flat: usize) -> f64 {
        self.chi.get(&flat).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, flat: usize) -> bool {
        self.members.binary_search(&flat).is_ok()
    }

    /// Audit export: CSV with columns flat index, per-particle |ω_i|, and
    /// the cross weight.
    pub fn to_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let n_p = self.grid.n_particles();
        let mut header = vec!["flat".to_string()];
        for i in 0..n_p {
            header.push(format!("abs_omega_{i}"));
        }
        header.push("cross_weight".into());
        wtr.write_record(&header)
            .map_err(|e| CwError::Format(e.to_string()))?;
        let mut idx = vec![0usize; self.grid.axes()];
        for &flat in &self.members {
            self.grid.decompose(flat, &mut idx);
            let mut row = vec![flat.to_string()];
            for i in 0..n_p {
                row.push(format!("{}", self.grid.particle_freq_sq(&idx, i).sqrt()));
            }
            row.push(format!("{}", cross_weight(&self.grid, &self.partition, &idx)));
            wtr.write_record(&row)
                .map_err(|e| CwError::Format(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// The cross weight `Σ_l ∏_{i∈I_l} (1+|ω_i|²)^{1/2}` at a multi-index.
pub fn cross_weight(grid: &GridSpec, partition: &SpinPartition, idx: &[usize]) -> f64 {
    partition
        .classes()
        .iter()
        .map(|class| {
            class
                .iter()
                .map(|&i| (1.0 + grid.particle_freq_sq(idx, i)).sqrt())
                .product::<f64>()
        })
        .sum()
}

fn raised_cosine(weight: f64, r: f64, taper_width: f64) -> f64 {
    if weight <= r {
        1.0
    } else if weight >= r * (1.0 + taper_width) {
        0.0
    } else {
        let s = (weight - r) / (r * taper_width);
        let c = (std::f64::consts::FRAC_PI_2 * s).cos();
        c * c
    }
}

/// Enumerate `Ω(R)` with the indicator cutoff.
pub fn enumerate_cross(
    grid: &Arc<GridSpec>,
    partition: &SpinPartition,
    r: f64,
) -> Result<CrossIndexSet> {
    enumerate_cross_with(grid, partition, r, CutoffKind::Indicator)
}

/// Enumerate `Ω(R)` with an explicit cutoff choice. `R` below the class
/// count `s` yields an empty set flagged as vacuous (each class product is
/// at least 1, so the weight is at least `s` everywhere).
pub fn enumerate_cross_with(
    grid: &Arc<GridSpec>,
    partition: &SpinPartition,
    r: f64,
    cutoff: CutoffKind,
) -> Result<CrossIndexSet> {
    if partition.n_particles() != grid.n_particles() {
        return Err(CwError::Config(format!(
            "partition has {} particles, grid has {}",
            partition.n_particles(),
            grid.n_particles()
        )));
    }
    if !r.is_finite() || r <= 0.0 {
        return Err(CwError::Config(format!("cross radius must be positive, got {r}")));
    }
    if let CutoffKind::RaisedCosine { taper_width } = cutoff {
        if taper_width <= 0.0 {
            return Err(CwError::Config("taper width must be positive".into()));
        }
    }
    let s = partition.n_classes() as f64;
    let r_outer = match cutoff {
        CutoffKind::Indicator => r,
        CutoffKind::RaisedCosine { taper_width } => r * (1.0 + taper_width),
    };
    let mut hits: Vec<(usize, f64)> = if r_outer < s {
        Vec::new()
    } else if grid.modes() <= FULL_SCAN_LIMIT {
        scan_full(grid, partition, r_outer)
    } else {
        scan_pruned(grid, partition, r_outer)
    };
    hits.sort_unstable_by_key(|&(flat, _)| flat);
    let mut members = Vec::new();
    let mut weights = Vec::new();
    let mut taper = Vec::new();
    let mut chi = HashMap::with_capacity(hits.len());
    for (flat, w) in hits {
        if w <= r {
            members.push(flat);
            weights.push(1.0);
            chi.insert(flat, 1.0);
        } else if let CutoffKind::RaisedCosine { taper_width } = cutoff {
            let v = raised_cosine(w, r, taper_width);
            if v > 0.0 {
                taper.push((flat, v));
                chi.insert(flat, v);
            }
        }
    }
    Ok(CrossIndexSet {
        grid: grid.clone(),
        partition: partition.clone(),
        r,
        cutoff,
        vacuous: members.is_empty(),
        members,
        weights,
        taper,
        chi,
    })
}

fn scan_full(grid: &GridSpec, partition: &SpinPartition, r: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; grid.axes()];
    for flat in 0..grid.modes() {
        grid.decompose(flat, &mut idx);
        let w = cross_weight(grid, partition, &idx);
        if w <= r {
            out.push((flat, w));
        }
    }
    out
}

/// Depth-first enumeration assigning one particle at a time, walking each
/// particle's `n^d` wavevector shells in ascending `(1+|ω|²)^{1/2}` order.
/// Every factor is ≥ 1, so once the partial weight (unassigned particles
/// at their minimum, factor 1) exceeds `R` the branch — and all heavier
/// shells after it — can be dropped.
fn scan_pruned(grid: &GridSpec, partition: &SpinPartition, r: f64) -> Vec<(usize, f64)> {
    let d = grid.d();
    let pts = grid.points();
    let sub_count = pts.pow(d as u32);
    // per-particle shells (identical for all particles), ascending by factor
    let mut shells: Vec<(f64, usize)> = (0..sub_count)
        .map(|sub| {
            let mut rem = sub;
            let mut w2 = 0.0;
            for _ in 0..d {
                let f = grid.freq(rem % pts);
                w2 += f * f;
                rem /= pts;
            }
            ((1.0 + w2).sqrt(), sub)
        })
        .collect();
    shells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let n_p = grid.n_particles();
    let class_of: Vec<usize> = {
        let mut c = vec![0usize; n_p];
        for (l, class) in partition.classes().iter().enumerate() {
            for &i in class {
                c[i] = l;
            }
        }
        c
    };
    let s = partition.n_classes();
    let mut out = Vec::new();
    // products per class for the currently assigned prefix of particles
    let mut prod = vec![1.0f64; s];
    let mut subs = vec![0usize; n_p];
    dfs(
        0, grid, &shells, &class_of, &mut prod, &mut subs, r, d, &mut out,
    );
    return out;

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        p: usize,
        grid: &GridSpec,
        shells: &[(f64, usize)],
        class_of: &[usize],
        prod: &mut Vec<f64>,
        subs: &mut Vec<usize>,
        r: f64,
        d: usize,
        out: &mut Vec<(usize, f64)>,
    ) {
        let n_p = class_of.len();
        if p == n_p {
            let w: f64 = prod.iter().sum();
            if w <= r {
                let pts = grid.points();
                let mut flat = 0usize;
                for &sub in subs.iter() {
                    let mut digits = vec![0usize; d];
                    let mut rem = sub;
                    for c in (0..d).rev() {
                        digits[c] = rem % pts;
                        rem /= pts;
                    }
                    for &dg in &digits {
                        flat = flat * pts + dg;
                    }
                }
                out.push((flat, w));
            }
            return;
        }
        let l = class_of[p];
        for &(f, sub) in shells {
            let saved = prod[l];
            prod[l] = saved * f;
            let bound: f64 = prod.iter().sum();
            if bound > r {
                prod[l] = saved;
                break;
            }
            subs[p] = sub;
            dfs(p + 1, grid, shells, class_of, prod, subs, r, d, out);
            prod[l] = saved;
        }
    }
}

fn apply_chi(state: &WaveState, cross: &CrossIndexSet, residual: bool) -> Result<WaveState> {
    if *state.grid != *cross.grid {
        return Err(CwError::GridMismatch);
    }
    let original = state.rep;
    let mut hat = state.transform(Rep::Frequency);
    for (flat, c) in hat.coeffs.iter_mut().enumerate() {
        let chi = cross.chi(flat);
        *c *= if residual { 1.0 - chi } else { chi };
    }
    hat.transform_in_place(original);
    Ok(hat)
}

/// Projection `P_R u`: frequency coefficients multiplied by `χ_R`. With the
/// indicator cutoff this is an orthogonal projection.
pub fn project(state: &WaveState, cross: &CrossIndexSet) -> Result<WaveState> {
    apply_chi(state, cross, false)
}

/// Residual `(1 − P_R) u`; with the indicator cutoff orthogonal to the
/// projection.
pub fn residual(state: &WaveState, cross: &CrossIndexSet) -> Result<WaveState> {
    apply_chi(state, cross, true)
}

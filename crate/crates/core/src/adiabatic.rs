//! Adiabatic eigenstates of `H_int` on spatial grids.
//!
//! Eigenvectors are computed in the `phi = 0` half-plane, where `H_int` is real
//! symmetric, and carried to any other azimuth with `exp(-i Jz phi)`. Within the
//! half-plane the signs follow the parallel-transport convention, and
//! surfaces keep their identity through crossings by maximal overlap.

use crate::error::{Error, Result};
use crate::model::{InteractionModel, InternalOperator, Position, RealOperator, StateVector, N};
use crate::scalar::{creal, Real, C};
use nalgebra::{ComplexField, DMatrix, DVector, SMatrix, SVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Overlaps closer than this cannot be told apart when assigning labels or signs.
pub const AMBIGUITY_TOL: f64 = 1e-3;

/// Spectral decomposition of `H_int` at one point.
///
/// Columns of `vectors` are ordered by ascending energy; `labels[col]` is the
/// continuity label of the surface that column belongs to.
#[derive(Debug, Clone)]
pub struct AdiabaticFrame<T: Real> {
    pub position: Position<T>,
    pub energies: SVector<T, N>,
    pub vectors: InternalOperator<T>,
    pub labels: [usize; N],
}

impl<T: Real> AdiabaticFrame<T> {
    pub fn column_of(&self, label: usize) -> usize {
        self.labels
            .iter()
            .position(|&l| l == label)
            .unwrap_or_else(|| panic!("label {label} not present in frame"))
    }

    pub fn energy(&self, label: usize) -> T {
        self.energies[self.column_of(label)]
    }

    pub fn vector(&self, label: usize) -> StateVector<T> {
        self.vectors.column(self.column_of(label)).into_owned()
    }

    /// Largest `|H v - e v|` over all columns.
    pub fn residual(&self, model: &InteractionModel<T>) -> Result<T> {
        let h = model.hint(&self.position)?;
        let mut worst = T::zero();
        for k in 0..N {
            let v = self.vectors.column(k);
            let r = h * v - v * creal(self.energies[k]);
            worst = worst.max(r.norm());
        }
        Ok(worst)
    }

    /// `<psi_n| Jz |psi_n>` for every label, indexed by label.
    pub fn jz_expectations(&self, model: &InteractionModel<T>) -> [T; N] {
        let jz = model.jz_diagonal();
        let mut out = [T::zero(); N];
        for k in 0..N {
            let v = self.vectors.column(k);
            let mut acc = T::zero();
            for i in 0..N {
                acc += jz[i] * v[i].norm_sqr();
            }
            out[self.labels[k]] = acc;
        }
        out
    }
}

/// Diagonalizes `H_int` at `pos`.
///
/// The real symmetric problem at `(rho, z, 0)` is solved and the eigenvectors
/// are rotated to `pos.phi`. Each column's largest component is made positive
/// at `phi = 0`; labels start out in energy order.
pub fn eigensystem_at<T: Real>(model: &InteractionModel<T>, pos: &Position<T>) -> Result<AdiabaticFrame<T>> {
    let (energies, real) = real_eigensystem(model, pos)?;
    let rot = model.rotation_phases(pos.phi);
    let vectors = InternalOperator::<T>::from_fn(|i, k| rot[i] * creal(real[(i, k)]));
    Ok(AdiabaticFrame {
        position: *pos,
        energies,
        vectors,
        labels: std::array::from_fn(|i| i),
    })
}

/// Eigen decomposition of a fixed-size sub-block of `h` with a stack-allocated solver.
macro_rules! fixed_block_eigen {
    ($k:literal, $h:expr, $block:expr) => {{
        let sub = SMatrix::<T, $k, $k>::from_fn(|a, b| $h[($block[a], $block[b])]);
        SymmetricEigen::try_new(sub, T::default_epsilon(), 10_000).map(|eig| {
            (
                DVector::from_column_slice(eig.eigenvalues.as_slice()),
                DMatrix::from_column_slice($k, $k, eig.eigenvectors.as_slice()),
            )
        })
    }};
}

/// Energies and real eigenvectors of `H_int` at `(pos.rho, pos.z, 0)`, sorted
/// ascending, each column with its largest component positive.
///
/// `H_int` commutes with atom exchange, so it is first written in the basis
/// `(|i> +- |P i>) / sqrt 2`. The result is then split into the blocks left
/// uncoupled by (numerically) zero entries; in the `x-y` plane these are the
/// four exchange and reflection sectors. Each block is diagonalized on its own.
pub fn real_eigensystem<T: Real>(model: &InteractionModel<T>, pos: &Position<T>) -> Result<(SVector<T, N>, RealOperator<T>)> {
    let h = model.hint_plane(pos.rho, pos.z)?;
    let fail = || {
        let p = pos.to_f64();
        Error::Eigensolver {
            rho: p.rho,
            z: p.z,
            phi: p.phi,
        }
    };
    let basis = model.basis();
    let half = N / 2;
    // Adapted vector k is (e_{r(k)} + sign(k) e_{P r(k)}) / sqrt 2.
    let root = |k: usize| k % half;
    let partner = |k: usize| basis.exchange_partner(k % half);
    let sign = |k: usize| if k < half { T::one() } else { -T::one() };
    let w = RealOperator::<T>::from_fn(|k, l| {
        let (i, pi, si) = (root(k), partner(k), sign(k));
        let (j, pj, sj) = (root(l), partner(l), sign(l));
        (h[(i, j)] + sj * h[(i, pj)] + si * h[(pi, j)] + si * sj * h[(pi, pj)]) * T::lit(0.5)
    });
    let scale = h.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let blocks = coupled_blocks(&w, scale * T::lit(1e-13));
    let mut values = Vec::with_capacity(N);
    let mut columns: Vec<SVector<T, N>> = Vec::with_capacity(N);
    let inv_sqrt2 = T::one() / T::lit(2.0).sqrt();
    for block in &blocks {
        let (vals, vecs) = match block.len() {
            4 => fixed_block_eigen!(4, w, block).ok_or_else(fail)?,
            8 => fixed_block_eigen!(8, w, block).ok_or_else(fail)?,
            16 => fixed_block_eigen!(16, w, block).ok_or_else(fail)?,
            k => {
                let sub = DMatrix::<T>::from_fn(k, k, |a, b| w[(block[a], block[b])]);
                let eig = SymmetricEigen::try_new(sub, T::default_epsilon(), 10_000).ok_or_else(fail)?;
                (eig.eigenvalues, eig.eigenvectors)
            }
        };
        for k in 0..block.len() {
            values.push(vals[k]);
            let mut col = SVector::<T, N>::zeros();
            for (a, &m) in block.iter().enumerate() {
                let c = vecs[(a, k)] * inv_sqrt2;
                col[root(m)] += c;
                col[partner(m)] += sign(m) * c;
            }
            columns.push(col);
        }
    }
    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let energies = SVector::<T, N>::from_fn(|k, _| values[order[k]]);
    let mut vectors = RealOperator::<T>::zeros();
    for (k, &src) in order.iter().enumerate() {
        let col = &columns[src];
        let mut lead = 0;
        for i in 1..N {
            if col[i].abs() > col[lead].abs() + T::lit(1e-12) {
                lead = i;
            }
        }
        let sign = if col[lead] < T::zero() { -T::one() } else { T::one() };
        vectors.set_column(k, &(col * sign));
    }
    Ok((energies, vectors))
}

/// Index sets connected through off-diagonal entries larger than `tol`.
fn coupled_blocks<T: Real>(h: &RealOperator<T>, tol: T) -> Vec<Vec<usize>> {
    let mut owner: [usize; N] = std::array::from_fn(|i| i);
    fn root(owner: &mut [usize; N], mut i: usize) -> usize {
        while owner[i] != i {
            owner[i] = owner[owner[i]];
            i = owner[i];
        }
        i
    }
    for i in 0..N {
        for j in i + 1..N {
            if h[(i, j)].abs() > tol {
                let (a, b) = (root(&mut owner, i), root(&mut owner, j));
                owner[a.max(b)] = a.min(b);
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = [usize::MAX; N];
    for i in 0..N {
        let r = root(&mut owner, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

/// Direct complex Hermitian diagonalization at `pos`, with no phase
/// convention. Used to cross-check [`eigensystem_at`] away from `phi = 0`.
pub fn eigenvalues_direct<T: Real>(model: &InteractionModel<T>, pos: &Position<T>) -> Result<SVector<T, N>> {
    let h = model.hint(pos)?;
    let eig = SymmetricEigen::try_new(h, T::default_epsilon(), 10_000).ok_or_else(|| {
        let p = pos.to_f64();
        Error::Eigensolver {
            rho: p.rho,
            z: p.z,
            phi: p.phi,
        }
    })?;
    let mut ev: Vec<T> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(SVector::from_fn(|i, _| ev[i]))
}

/// Multiplies every eigenvector by `exp(-i Jz phi)` and moves the frame to azimuth `phi`.
pub fn rotate_state<T: Real>(model: &InteractionModel<T>, frame: &AdiabaticFrame<T>, phi: T) -> AdiabaticFrame<T> {
    let rot = model.rotation_phases(phi - frame.position.phi);
    let mut out = frame.clone();
    for k in 0..N {
        for i in 0..N {
            out.vectors[(i, k)] = rot[i] * frame.vectors[(i, k)];
        }
    }
    out.position.phi = phi;
    out
}

fn overlap_abs<T: Real>(a: &AdiabaticFrame<T>, b: &AdiabaticFrame<T>) -> [[T; N]; N] {
    let o = a.vectors.adjoint() * b.vectors;
    std::array::from_fn(|i| std::array::from_fn(|j| o[(i, j)].modulus()))
}

/// Copies labels from `prev` to `cur` by maximal `|overlap|`.
///
/// Pairs are fixed greedily from the largest overlap down. Only labels with
/// `watch[label]` set are checked for ambiguity; `index` is reported in errors.
pub fn assign_labels<T: Real>(
    prev: &AdiabaticFrame<T>,
    cur: &mut AdiabaticFrame<T>,
    watch: &[bool; N],
    index: usize,
) -> Result<()> {
    let o = overlap_abs(prev, cur);
    let mut entries: Vec<(usize, usize)> = (0..N).flat_map(|i| (0..N).map(move |j| (i, j))).collect();
    entries.sort_by(|&(a, b), &(c, d)| o[c][d].partial_cmp(&o[a][b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut row_done = [false; N];
    let mut col_of_row = [usize::MAX; N];
    let mut col_done = [false; N];
    for (i, j) in entries {
        if row_done[i] || col_done[j] {
            continue;
        }
        row_done[i] = true;
        col_done[j] = true;
        col_of_row[i] = j;
    }
    let tol = T::lit(AMBIGUITY_TOL);
    for i in 0..N {
        let label = prev.labels[i];
        if !watch[label] {
            continue;
        }
        let best = o[i][col_of_row[i]];
        let rival = (0..N)
            .filter(|&j| j != col_of_row[i])
            .map(|j| o[i][j])
            .fold(T::zero(), |a, b| a.max(b));
        if best - rival < tol {
            return Err(Error::AmbiguousTracking { index, label });
        }
    }
    for i in 0..N {
        cur.labels[col_of_row[i]] = prev.labels[i];
    }
    Ok(())
}

/// Flips the sign of each column of `cur` so its overlap with the like-labeled
/// column of `prev` is positive. Both frames must lie in the `phi = 0` half-plane.
fn align_signs<T: Real>(prev: &AdiabaticFrame<T>, cur: &mut AdiabaticFrame<T>, index: usize) -> Result<()> {
    for k in 0..N {
        let label = cur.labels[k];
        let p = prev.column_of(label);
        let mut ov = creal(T::zero());
        for i in 0..N {
            ov += prev.vectors[(i, p)].conj() * cur.vectors[(i, k)];
        }
        if ov.re.abs() < T::lit(AMBIGUITY_TOL) {
            return Err(Error::AmbiguousPhase {
                index,
                label,
                overlap: ov.re.as_f64(),
            });
        }
        if ov.re < T::zero() {
            for i in 0..N {
                cur.vectors[(i, k)] = -cur.vectors[(i, k)];
            }
        }
    }
    Ok(())
}

/// Sampling layout of a [`SurfaceScan`].
#[derive(Debug, Clone, PartialEq)]
pub enum Grid<T: Real> {
    /// Points visited in order along a path.
    Line(Vec<Position<T>>),
    /// Rectangular grid in the `phi = 0` half-plane; frame `iz * rho.len() + ir`.
    Plane { rho: Vec<T>, z: Vec<T> },
}

impl<T: Real> Grid<T> {
    /// `n` equally spaced points from `rho_lo` to `rho_hi` at height `z`, `phi = 0`.
    pub fn radial(rho_lo: T, rho_hi: T, n: usize, z: T) -> Self {
        Grid::Line(linspace(rho_lo, rho_hi, n).into_iter().map(|r| Position::plane(r, z)).collect())
    }

    pub fn plane(rho: Vec<T>, z: Vec<T>) -> Self {
        Grid::Plane { rho, z }
    }

    pub fn positions(&self) -> Vec<Position<T>> {
        match self {
            Grid::Line(p) => p.clone(),
            Grid::Plane { rho, z } => z
                .iter()
                .flat_map(|&zz| rho.iter().map(move |&r| Position::plane(r, zz)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Line(p) => p.len(),
            Grid::Plane { rho, z } => rho.len() * z.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visiting order for label and sign propagation from `seed`: pairs
    /// `(from, to)` along straight lines, first along the seed row in `rho`,
    /// then up and down every column in `z`.
    fn paths(&self, seed: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let line = |n: usize, s: usize, idx: &dyn Fn(usize) -> usize, out: &mut Vec<(usize, usize)>| {
            for k in s + 1..n {
                out.push((idx(k - 1), idx(k)));
            }
            for k in (0..s).rev() {
                out.push((idx(k + 1), idx(k)));
            }
        };
        match self {
            Grid::Line(p) => line(p.len(), seed, &|k| k, &mut out),
            Grid::Plane { rho, z } => {
                let nr = rho.len();
                let (iz0, ir0) = (seed / nr, seed % nr);
                line(nr, ir0, &|k| iz0 * nr + k, &mut out);
                for ir in 0..nr {
                    line(z.len(), iz0, &|k| k * nr + ir, &mut out);
                }
            }
        }
        out
    }
}

pub(crate) fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / T::from_usize(n - 1).expect("grid size");
    (0..n)
        .map(|k| lo + step * T::from_usize(k).expect("grid index"))
        .collect()
}

/// Adiabatic frames over a grid.
#[derive(Debug, Clone)]
pub struct SurfaceScan<T: Real> {
    pub grid: Grid<T>,
    pub frames: Vec<AdiabaticFrame<T>>,
}

impl<T: Real> SurfaceScan<T> {
    /// Diagonalizes at every grid point (in parallel). Labels are energy order.
    pub fn compute(model: &InteractionModel<T>, grid: Grid<T>) -> Result<Self> {
        let frames = grid
            .positions()
            .par_iter()
            .map(|p| eigensystem_at(model, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(SurfaceScan { grid, frames })
    }

    /// Computes, tracks from `seed` and fixes signs relative to `seed`.
    pub fn build(model: &InteractionModel<T>, grid: Grid<T>, seed: usize) -> Result<Self> {
        let scan = Self::compute(model, grid)?;
        let scan = track_surfaces(scan, seed)?;
        fix_phases_parallel_transport(scan, seed)
    }

    /// Energy of `label` at every frame.
    pub fn curve(&self, label: usize) -> Vec<T> {
        self.frames.iter().map(|f| f.energy(label)).collect()
    }

    /// Index of the frame closest to `pos` (Euclidean in `(rho, z)`).
    pub fn nearest(&self, pos: &Position<T>) -> usize {
        let d = |f: &AdiabaticFrame<T>| {
            let dr = f.position.rho - pos.rho;
            let dz = f.position.z - pos.z;
            dr * dr + dz * dz
        };
        let mut best = 0;
        for k in 1..self.frames.len() {
            if d(&self.frames[k]) < d(&self.frames[best]) {
                best = k;
            }
        }
        best
    }

    /// CSV rows `rho,z,phi,label,energy`, frame-major and label-ascending.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "rho,z,phi,label,energy")?;
        for f in &self.frames {
            let p = f.position.to_f64();
            for label in 0..N {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    crate::io::fmt12(p.rho),
                    crate::io::fmt12(p.z),
                    crate::io::fmt12(p.phi),
                    label,
                    crate::io::fmt12(f.energy(label).as_f64())
                )?;
            }
        }
        Ok(())
    }
}

/// Assigns continuity labels, starting from energy order at `seed`.
pub fn track_surfaces<T: Real>(mut scan: SurfaceScan<T>, seed: usize) -> Result<SurfaceScan<T>> {
    if seed >= scan.frames.len() {
        return Err(Error::InvalidArgument(format!("seed index {seed} outside scan")));
    }
    scan.frames[seed].labels = std::array::from_fn(|i| i);
    let watch = [true; N];
    for (from, to) in scan.grid.paths(seed) {
        let prev = scan.frames[from].clone();
        assign_labels(&prev, &mut scan.frames[to], &watch, to)?;
    }
    Ok(scan)
}

/// Enforces the parallel-transport sign convention in the `phi = 0` half-plane.
///
/// Signs at `reference` are kept; every other frame is aligned with its
/// predecessor along the scan paths, so like-labeled neighbours have positive
/// overlap and the discretized `rho` and `z` connection components vanish.
pub fn fix_phases_parallel_transport<T: Real>(mut scan: SurfaceScan<T>, reference: usize) -> Result<SurfaceScan<T>> {
    if reference >= scan.frames.len() {
        return Err(Error::InvalidArgument(format!("reference index {reference} outside scan")));
    }
    if scan.frames.iter().any(|f| f.position.phi != T::zero()) {
        return Err(Error::InvalidArgument("parallel transport requires the phi = 0 half-plane".into()));
    }
    for f in scan.frames.iter_mut() {
        for v in f.vectors.iter_mut() {
            *v = creal(v.re);
        }
    }
    for (from, to) in scan.grid.paths(reference) {
        let prev = scan.frames[from].clone();
        align_signs(&prev, &mut scan.frames[to], to)?;
    }
    Ok(scan)
}

/// Discretized diagonal connection between two neighbouring frames,
/// `-arg <psi_n(a)|psi_n(b)> / |b - a|` for every label (link-variable form).
pub fn discrete_diagonal_connection<T: Real>(a: &AdiabaticFrame<T>, b: &AdiabaticFrame<T>) -> [T; N] {
    let dr = a.position.rho - b.position.rho;
    let dz = a.position.z - b.position.z;
    let h = (dr * dr + dz * dz).sqrt();
    std::array::from_fn(|label| {
        let va = a.vector(label);
        let vb = b.vector(label);
        let ov: C<T> = va.dotc(&vb);
        -ov.argument() / h
    })
}

/// Location and depth of the donut-shaped well.
#[derive(Debug, Clone)]
pub struct WellDescriptor<T: Real> {
    /// Continuity label of the well surface in the scan it was found in.
    pub surface_label: usize,
    pub rho_min: T,
    pub energy_min: T,
    /// Asymptote minus minimum. Negative when the minimum lies above the
    /// asymptote and the well is only held by a barrier.
    pub depth: T,
    /// Energy of the surface at `R = ASYMPTOTE_RADIUS`.
    pub asymptote: T,
    /// Highest energy on the way out from the minimum, never below the asymptote.
    pub barrier: T,
    /// Barrier minus minimum: the energy needed to leave the well outward.
    pub trap_depth: T,
    /// Eigenvector at the refined minimum (real, `phi = 0`).
    pub vector: StateVector<T>,
}

/// Radius at which the asymptote of a surface is read off.
pub const ASYMPTOTE_RADIUS: f64 = 50.0;

/// Rules for picking the well surface out of a radial scan.
#[derive(Debug, Clone, PartialEq)]
pub struct WellCriteria {
    /// The minimum must lie in this `rho` interval (units `R0`).
    pub window: (f64, f64),
    /// Accepted asymptotic energies (units `hbar |delta|`).
    pub asymptotes: Vec<f64>,
    pub tolerance: f64,
}

impl Default for WellCriteria {
    /// Minimum near `R0` and asymptote at the `p -1/2` level `-1`.
    fn default() -> Self {
        WellCriteria {
            window: (0.75, 2.0),
            asymptotes: vec![-1.0],
            tolerance: 0.05,
        }
    }
}

impl WellCriteria {
    /// Accepts any single-atom Stark level as asymptote. Needed for
    /// `Delta = delta`, where the well connects to the `p 3/2` level instead.
    pub fn widened(params: &crate::model::ModelParams) -> Self {
        WellCriteria {
            asymptotes: vec![0.0, params.small_delta(), params.big_delta()],
            ..Self::default()
        }
    }
}

/// Finds the eigenvector at `pos` that best matches `reference` and returns its column.
pub fn follow<T: Real>(frame: &AdiabaticFrame<T>, reference: &StateVector<T>) -> usize {
    let mut best = 0;
    let mut best_ov = T::zero();
    for k in 0..N {
        let ov = frame.vectors.column(k).dotc(reference).modulus();
        if ov > best_ov {
            best_ov = ov;
            best = k;
        }
    }
    best
}

/// Tracks `labels` of `start` outward along the `phi = 0`, `z = 0` ray to
/// `rho_end` on a geometric grid and returns the final frame.
pub fn continue_outward<T: Real>(
    model: &InteractionModel<T>,
    start: &AdiabaticFrame<T>,
    rho_end: T,
    watch: &[bool; N],
) -> Result<AdiabaticFrame<T>> {
    let ratio = T::lit(1.002);
    let mut prev = start.clone();
    let mut rho = start.position.rho;
    let mut k = 0;
    while rho < rho_end {
        rho = (rho * ratio).min(rho_end);
        let mut cur = eigensystem_at(model, &Position::new(rho, start.position.z, T::zero()))?;
        assign_labels(&prev, &mut cur, watch, k)?;
        prev = cur;
        k += 1;
    }
    Ok(prev)
}

/// Hellmann-Feynman radial slope of the surface matching `reference` at `rho` (`z = 0`).
fn radial_slope<T: Real>(model: &InteractionModel<T>, rho: T, reference: &StateVector<T>) -> Result<(T, StateVector<T>)> {
    let pos = Position::plane(rho, T::zero());
    let frame = eigensystem_at(model, &pos)?;
    let col = follow(&frame, reference);
    let v = frame.vectors.column(col).into_owned();
    let g = model.grad_hint(&pos)?;
    Ok((v.dotc(&(g[0] * v)).re, v))
}

/// Refines a radial minimum of the surface matching `reference` by Newton
/// iteration on the Hellmann-Feynman slope. Returns `(rho, energy, vector)`.
pub fn refine_minimum<T: Real>(
    model: &InteractionModel<T>,
    rho0: T,
    reference: &StateVector<T>,
) -> Result<(T, T, StateVector<T>)> {
    let h = T::lit(1e-5);
    let mut rho = rho0;
    let mut reference = *reference;
    for _ in 0..50 {
        let (g, v) = radial_slope(model, rho, &reference)?;
        let (gp, _) = radial_slope(model, rho + h, &v)?;
        let (gm, _) = radial_slope(model, rho - h, &v)?;
        let curv = (gp - gm) / (h + h);
        if curv <= T::zero() {
            return Err(Error::Numerical(format!("no minimum near rho = {}", rho.as_f64())));
        }
        let step = g / curv;
        rho -= step;
        reference = v;
        if step.abs() < T::lit(1e-13) {
            break;
        }
    }
    let pos = Position::plane(rho, T::zero());
    let frame = eigensystem_at(model, &pos)?;
    let col = follow(&frame, &reference);
    Ok((rho, frame.energies[col], frame.vectors.column(col).into_owned()))
}

/// Finds the well surface in a tracked radial scan at `z = 0` with the default criteria.
pub fn find_well_state<T: Real>(model: &InteractionModel<T>, scan: &SurfaceScan<T>) -> Result<WellDescriptor<T>> {
    find_well_state_with(model, scan, &WellCriteria::default())
}

/// Finds the well surface in a tracked radial scan at `z = 0`.
///
/// Candidates are labeled curves with an interior local minimum inside the
/// criteria window whose energy at `R = 50 R0` matches an accepted asymptote.
/// The candidate with the largest trap depth wins.
pub fn find_well_state_with<T: Real>(
    model: &InteractionModel<T>,
    scan: &SurfaceScan<T>,
    criteria: &WellCriteria,
) -> Result<WellDescriptor<T>> {
    let frames = &scan.frames;
    if frames.len() < 3 {
        return Err(Error::WellNotFound("scan too short".into()));
    }
    if frames.iter().any(|f| f.position.z != T::zero()) {
        return Err(Error::InvalidArgument("well detection needs a radial scan at z = 0".into()));
    }
    let (lo, hi) = (T::lit(criteria.window.0), T::lit(criteria.window.1));
    let mut candidates = Vec::new();
    for label in 0..N {
        let e = scan.curve(label);
        let mut best: Option<usize> = None;
        for k in 1..e.len() - 1 {
            let rho = frames[k].position.rho;
            if rho < lo || rho > hi {
                continue;
            }
            if e[k] < e[k - 1] && e[k] <= e[k + 1] && best.is_none_or(|b| e[k] < e[b]) {
                best = Some(k);
            }
        }
        if let Some(k) = best {
            candidates.push((label, k, e));
        }
    }
    if candidates.is_empty() {
        return Err(Error::WellNotFound("no surface has a local minimum near R0".into()));
    }
    let mut watch = [false; N];
    for (label, _, _) in &candidates {
        watch[*label] = true;
    }
    let last = frames.last().expect("nonempty scan");
    let far = continue_outward(model, last, T::lit(ASYMPTOTE_RADIUS), &watch)?;
    let mut found: Option<WellDescriptor<T>> = None;
    for (label, k, e) in candidates {
        let asymptote = far.energy(label);
        let matches = criteria
            .asymptotes
            .iter()
            .any(|&a| (asymptote - T::lit(a)).abs() <= T::lit(criteria.tolerance));
        if !matches {
            continue;
        }
        let v0 = frames[k].vector(label);
        let (rho_min, energy_min, vector) = refine_minimum(model, frames[k].position.rho, &v0)?;
        let barrier = e[k..].iter().copied().fold(asymptote, |a, b| a.max(b));
        let trap_depth = barrier - energy_min;
        if found.as_ref().is_none_or(|w| trap_depth > w.trap_depth) {
            found = Some(WellDescriptor {
                surface_label: label,
                rho_min,
                energy_min,
                depth: asymptote - energy_min,
                asymptote,
                barrier,
                trap_depth,
                vector,
            });
        }
    }
    found.ok_or_else(|| Error::WellNotFound("no minimum connects to an accepted asymptote".into()))
}

/// Label in `scan` whose eigenvector at the frame nearest `rho` best matches `vector`.
pub fn label_of<T: Real>(scan: &SurfaceScan<T>, rho: T, z: T, vector: &StateVector<T>) -> usize {
    let f = &scan.frames[scan.nearest(&Position::plane(rho, z))];
    f.labels[follow(f, vector)]
}

/// Partner of `label` in the avoided crossing: the surface with the smallest
/// gap to it over `rho` in `window`, among those it couples to.
pub fn avoided_crossing_partner<T: Real>(
    model: &InteractionModel<T>,
    scan: &SurfaceScan<T>,
    label: usize,
    window: (T, T),
) -> Result<(usize, T, T)> {
    let mut best: Option<(usize, T, T)> = None;
    for f in &scan.frames {
        let rho = f.position.rho;
        if rho < window.0 || rho > window.1 {
            continue;
        }
        let g = model.grad_hint(&f.position)?;
        let vn = f.vector(label);
        for other in 0..N {
            if other == label {
                continue;
            }
            let vm = f.vector(other);
            let coupling = (0..3).map(|c| vn.dotc(&(g[c] * vm)).modulus()).fold(T::zero(), |a, b| a.max(b));
            if coupling < T::lit(1e-8) {
                continue;
            }
            let gap = (f.energy(other) - f.energy(label)).abs();
            if best.is_none_or(|b| gap < b.1) {
                best = Some((other, gap, rho));
            }
        }
    }
    best.ok_or_else(|| Error::WellNotFound("no coupled partner surface in the window".into()))
}

/// Surface that truly crosses `label` inside `window`: the energy difference
/// changes sign between neighbouring frames of a radial scan. If several do,
/// the crossing at the largest `rho` wins. Returns `(label, rho)`.
pub fn true_crossing_partner<T: Real>(scan: &SurfaceScan<T>, label: usize, window: (T, T)) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for pair in scan.frames.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.position.rho < window.0 || b.position.rho > window.1 {
            continue;
        }
        for other in (0..N).filter(|&o| o != label) {
            let da = a.energy(other) - a.energy(label);
            let db = b.energy(other) - b.energy(label);
            if da * db < T::zero() {
                let rho = (a.position.rho + b.position.rho) * T::lit(0.5);
                if best.is_none_or(|(_, r)| rho > r) {
                    best = Some((other, rho));
                }
            }
        }
    }
    best
}

/// Plane of a potential map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapPlane {
    /// Cartesian `x-y` grid; `a = x`, `b = y`.
    Xy,
    /// Polar grid in the `x-z` plane on both sides of the `z` axis; `a = x`, `b = z`.
    Xz,
}

/// Sampling window of a potential map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapWindow {
    /// `x-y`: half-width of the square. `x-z`: outer radius.
    pub extent: f64,
    /// `x-z` only: inner radius.
    pub r_min: f64,
    /// `x-z` only: largest polar angle from the `x` axis, in degrees.
    pub theta_max_deg: f64,
    pub n_a: usize,
    pub n_b: usize,
}

impl MapWindow {
    pub fn xy_default() -> Self {
        MapWindow {
            extent: 2.5,
            r_min: 0.0,
            theta_max_deg: 0.0,
            n_a: 400,
            n_b: 400,
        }
    }

    pub fn xz_default() -> Self {
        MapWindow {
            extent: 3.0,
            r_min: 0.6,
            theta_max_deg: 60.0,
            n_a: 400,
            n_b: 400,
        }
    }
}

/// Well-state energy sampled over a plane.
#[derive(Debug, Clone)]
pub struct PotentialMap {
    pub plane: MapPlane,
    /// `(a, b, energy)`; `NaN` energy where the well state is undefined.
    pub points: Vec<(f64, f64, f64)>,
    /// `x-z` only: polar samples `(side, R, theta_deg, energy)` with side `+1`/`-1` for `+x`/`-x`.
    pub polar: Vec<(i8, f64, f64, f64)>,
}

impl PotentialMap {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header = match self.plane {
            MapPlane::Xy => "x,y,energy",
            MapPlane::Xz => "x,z,energy",
        };
        writeln!(out, "{header}")?;
        for &(a, b, e) in &self.points {
            writeln!(
                out,
                "{},{},{}",
                crate::io::fmt12(a),
                crate::io::fmt12(b),
                crate::io::fmt12(e)
            )?;
        }
        Ok(())
    }

    /// Lowest energy on the `+x` (`side = 1`) or `-x` (`side = -1`) half and its position.
    pub fn side_minimum(&self, side: i8) -> Option<(f64, f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.2.is_finite() && (p.0 > 0.0) == (side > 0))
            .copied()
            .min_by(|a, b| a.2.total_cmp(&b.2))
    }

    /// `x-z` only: the polar angle (degrees) at which the minimum over `R` of
    /// the `+x` well energy rises through `threshold`, linearly interpolated.
    pub fn bound_half_width(&self, threshold: f64) -> Option<f64> {
        let mut by_theta: std::collections::BTreeMap<i64, (f64, f64)> = std::collections::BTreeMap::new();
        for &(side, _, th, e) in &self.polar {
            if side != 1 || th < 0.0 || !e.is_finite() {
                continue;
            }
            let key = (th * 1e6).round() as i64;
            let entry = by_theta.entry(key).or_insert((th, f64::INFINITY));
            entry.1 = entry.1.min(e);
        }
        let rows: Vec<(f64, f64)> = by_theta.into_values().collect();
        for w in rows.windows(2) {
            let ((t0, e0), (t1, e1)) = (w[0], w[1]);
            if e0 < threshold && e1 >= threshold {
                return Some(t0 + (threshold - e0) / (e1 - e0) * (t1 - t0));
            }
        }
        None
    }
}

/// Maps the well-state energy over a plane.
///
/// The well is identified by its eigenvector at the minimum (`well.vector`).
/// For `x-y`, each point takes the surface continuing the well along a radial
/// scan at `z = 0`; for `x-z`, rings of fixed `R` are tracked in polar angle
/// away from the `x` axis on both sides.
pub fn potential_map(model: &InteractionModel<f64>, well: &WellDescriptor<f64>, plane: MapPlane, window: MapWindow) -> Result<PotentialMap> {
    match plane {
        MapPlane::Xy => xy_map(model, well, window),
        MapPlane::Xz => xz_map(model, well, window),
    }
}

const RADIAL_SCAN: (f64, f64, usize) = (0.7, 6.0, 4000);

fn well_radial_scan(model: &InteractionModel<f64>, well: &WellDescriptor<f64>) -> Result<(SurfaceScan<f64>, usize)> {
    let grid = Grid::radial(RADIAL_SCAN.0, RADIAL_SCAN.1, RADIAL_SCAN.2, 0.0);
    let scan = SurfaceScan::build(model, grid, 0)?;
    let label = label_of(&scan, well.rho_min, 0.0, &well.vector);
    Ok((scan, label))
}

fn xy_map(model: &InteractionModel<f64>, well: &WellDescriptor<f64>, window: MapWindow) -> Result<PotentialMap> {
    let (scan, label) = well_radial_scan(model, well)?;
    let axis = linspace(-window.extent, window.extent, window.n_a);
    let points = axis
        .par_iter()
        .map(|&y| {
            axis.iter()
                .map(|&x| {
                    let rho = x.hypot(y);
                    if !(RADIAL_SCAN.0..=RADIAL_SCAN.1).contains(&rho) {
                        return Ok((x, y, f64::NAN));
                    }
                    let phi = y.atan2(x);
                    let near = &scan.frames[scan.nearest(&Position::plane(rho, 0.0))];
                    let reference = rotate_state(model, near, phi).vector(label);
                    let frame = eigensystem_at(model, &Position::new(rho, 0.0, phi))?;
                    Ok((x, y, frame.energies[follow(&frame, &reference)]))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PotentialMap {
        plane: MapPlane::Xy,
        points: points.into_iter().flatten().collect(),
        polar: Vec::new(),
    })
}

fn xz_map(model: &InteractionModel<f64>, well: &WellDescriptor<f64>, window: MapWindow) -> Result<PotentialMap> {
    let radii = linspace(window.r_min, window.extent, window.n_a);
    let half = window.n_b / 2;
    let thetas: Vec<f64> = linspace(0.0, window.theta_max_deg, half.max(2));
    let ring_scan = {
        let grid = Grid::Line(radii.iter().map(|&r| Position::plane(r, 0.0)).collect());
        let seed = radii
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - well.rho_min).abs().total_cmp(&(b.1 - well.rho_min).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        let scan = SurfaceScan::compute(model, grid)?;
        track_surfaces(scan, seed)?
    };
    let seed_frame = &ring_scan.frames[ring_scan.nearest(&Position::plane(well.rho_min, 0.0))];
    let label = seed_frame.labels[follow(seed_frame, &well.vector)];
    let rings = radii
        .par_iter()
        .enumerate()
        .map(|(ir, &r)| {
            let mut rows = Vec::with_capacity(4 * thetas.len());
            for side in [1i8, -1] {
                let phi = if side > 0 { 0.0 } else { std::f64::consts::PI };
                for sgn in [1.0, -1.0] {
                    let mut reference = ring_scan.frames[ir].vector(label);
                    for (k, &th) in thetas.iter().enumerate() {
                        if k == 0 && sgn < 0.0 {
                            continue;
                        }
                        let t = sgn * th.to_radians();
                        let frame = eigensystem_at(model, &Position::plane(r * t.cos(), r * t.sin()))?;
                        let col = follow(&frame, &reference);
                        reference = frame.vectors.column(col).into_owned();
                        let x = side as f64 * r * t.cos();
                        rows.push((side, r, sgn * th, x, r * t.sin(), frame.energies[col], phi));
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::new();
    let mut polar = Vec::new();
    for (side, r, th, x, z, e, _) in rings.into_iter().flatten() {
        points.push((x, z, e));
        polar.push((side, r, th, e));
    }
    Ok(PotentialMap {
        plane: MapPlane::Xz,
        points,
        polar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use approx::assert_abs_diff_eq;

    fn model(ratio: f64) -> InteractionModel<f64> {
        InteractionModel::new(ModelParams::new(ratio, 2.8e-6).unwrap()).unwrap()
    }

    #[test]
    fn asymptotic_multiplicities() {
        let m = model(3.0);
        let f = eigensystem_at(&m, &Position::plane(100.0, 0.0)).unwrap();
        let count = |target: f64| f.energies.iter().filter(|e| (*e - target).abs() < 1e-4).count();
        assert_eq!(count(0.0), 8);
        assert_eq!(count(-1.0), 4);
        assert_eq!(count(-3.0), 4);
    }

    #[test]
    fn frame_is_orthonormal_eigenbasis() {
        let m = model(1.13);
        for pos in [Position::plane(1.2, 0.3), Position::new(0.9, -0.2, 2.1)] {
            let f = eigensystem_at(&m, &pos).unwrap();
            assert!(f.residual(&m).unwrap() < 1e-9);
            let id = f.vectors * f.vectors.adjoint();
            assert!((id - InternalOperator::identity()).norm() < 1e-10);
            let h = m.hint(&pos).unwrap();
            assert_abs_diff_eq!(f.energies.sum(), h.trace().re, epsilon = 1e-9);
            for k in 1..N {
                assert!(f.energies[k - 1] <= f.energies[k]);
            }
        }
    }

    #[test]
    fn rotated_frame_matches_direct_diagonalization() {
        let m = model(3.0);
        let pos = Position::new(1.1, 0.25, 1.234);
        let f = eigensystem_at(&m, &pos).unwrap();
        let direct = eigenvalues_direct(&m, &pos).unwrap();
        for k in 0..N {
            assert_abs_diff_eq!(f.energies[k], direct[k], epsilon = 1e-10);
        }
        let f0 = eigensystem_at(&m, &Position::plane(1.1, 0.25)).unwrap();
        let full = rotate_state(&m, &rotate_state(&m, &f0, 2.0 * std::f64::consts::PI), 0.0);
        assert!((full.vectors - f0.vectors).norm() < 1e-12);
    }

    #[test]
    fn tracking_without_crossings_keeps_energy_order() {
        let m = model(3.0);
        let scan = SurfaceScan::build(&m, Grid::radial(20.0, 25.0, 50, 0.0), 0).unwrap();
        // far out the sectors never cross
        for f in &scan.frames {
            for k in 0..N {
                assert_eq!(f.labels[k], k);
            }
        }
    }

    #[test]
    fn sign_flip_at_reference_propagates() {
        let m = model(3.0);
        let grid = Grid::radial(0.8, 1.6, 200, 0.0);
        let a = SurfaceScan::build(&m, grid.clone(), 50).unwrap();
        let mut b = SurfaceScan::compute(&m, grid).unwrap();
        b = track_surfaces(b, 50).unwrap();
        for v in b.frames[50].vectors.column_mut(3).iter_mut() {
            *v = -*v;
        }
        let b = fix_phases_parallel_transport(b, 50).unwrap();
        for (fa, fb) in a.frames.iter().zip(b.frames.iter()) {
            assert!((fa.vector(3) + fb.vector(3)).norm() < 1e-12);
            assert!((fa.vector(4) - fb.vector(4)).norm() < 1e-12);
        }
    }
}

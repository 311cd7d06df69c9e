//! Rotational-vibrational levels of the donut well.
//!
//! With `psi = exp(i M phi) R(rho)` and `u = sqrt(rho) R`, the radial problem at
//! `z = 0` reads (units `hbar |delta|`, `R0`)
//!
//! ```text
//! kappa [-u'' - u / (4 rho^2)] + kappa (M / rho - A(rho))^2 u + V(rho) u = E u
//! ```
//!
//! where `A = <Jz>/rho` is the well-state connection. It is discretized with a
//! three-point stencil between hard walls and solved by Sturm bisection.

use crate::adiabatic::{follow, Grid, SurfaceScan, WellDescriptor};
use crate::error::{Error, Result};
use crate::gauge::LocalGauge;
use crate::model::{InteractionModel, Position};
use crate::scalar::Real;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Mass of 39K in atomic mass units.
pub const MASS_K39_AMU: f64 = 38.963_706_486_4;
/// Mass of 23Na in atomic mass units.
pub const MASS_NA23_AMU: f64 = 22.989_769_282_0;

/// Default radial window and resolution for bound-state calculations.
pub const RADIAL_WINDOW: (f64, f64, usize) = (0.7, 3.5, 4000);

/// Minimum number of grid points inside the well.
pub const MIN_WELL_POINTS: usize = 200;

/// Well potential and connection sampled on a uniform radial grid at `z = 0`.
#[derive(Debug, Clone)]
pub struct WellProfile<T: Real> {
    pub rho: Vec<T>,
    pub potential: Vec<T>,
    /// `A^(phi)(rho) = <Jz>/rho`.
    pub connection: Vec<T>,
}

impl<T: Real> WellProfile<T> {
    /// Copy with the connection set to zero.
    pub fn without_gauge_field(&self) -> Self {
        WellProfile {
            connection: vec![T::zero(); self.rho.len()],
            ..self.clone()
        }
    }
}

/// Samples the well surface on `n` points over `[rho_lo, rho_hi]` at `z = 0`.
pub fn well_profile<T: Real>(
    model: &InteractionModel<T>,
    well: &WellDescriptor<T>,
    rho_lo: T,
    rho_hi: T,
    n: usize,
) -> Result<WellProfile<T>> {
    if !(rho_lo > T::zero() && rho_hi > rho_lo && n >= 3) {
        return Err(Error::InvalidArgument("radial window must satisfy 0 < lo < hi, n >= 3".into()));
    }
    if well.rho_min < rho_lo || well.rho_min > rho_hi {
        return Err(Error::InvalidArgument("radial window does not contain the well minimum".into()));
    }
    let grid = Grid::radial(rho_lo, rho_hi, n, T::zero());
    let step = (rho_hi - rho_lo) / T::from_usize(n - 1).expect("grid size");
    let seed = ((well.rho_min - rho_lo) / step).round().to_usize().unwrap_or(0).min(n - 1);
    let scan = SurfaceScan::build(model, grid, seed)?;
    let label = scan.frames[seed].labels[follow(&scan.frames[seed], &well.vector)];
    let rho: Vec<T> = scan.frames.iter().map(|f| f.position.rho).collect();
    let potential = scan.curve(label);
    let connection = scan
        .frames
        .iter()
        .map(|f| f.jz_expectations(model)[label] / f.position.rho)
        .collect();
    Ok(WellProfile {
        rho,
        potential,
        connection,
    })
}

/// Scalar potential `Phi_11` of the well state on the grid of `profile`.
///
/// Left out of the radial operator by default; add it with
/// [`RadialProblem::add_potential`] to quantify its effect.
pub fn scalar_potential_profile<T: Real>(
    model: &InteractionModel<T>,
    well: &WellDescriptor<T>,
    profile: &WellProfile<T>,
) -> Result<Vec<T>> {
    let n = profile.rho.len();
    if n < 3 {
        return Err(Error::InvalidArgument("profile too short".into()));
    }
    let grid = Grid::Line(profile.rho.iter().map(|&r| Position::plane(r, T::zero())).collect());
    let seed = (0..n)
        .min_by(|&a, &b| {
            let da = (profile.rho[a] - well.rho_min).abs();
            let db = (profile.rho[b] - well.rho_min).abs();
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("nonempty profile");
    let scan = SurfaceScan::build(model, grid, seed)?;
    let label = scan.frames[seed].labels[follow(&scan.frames[seed], &well.vector)];
    scan.frames
        .par_iter()
        .map(|f| Ok(LocalGauge::new(model, f)?.scalar_potential(&[label])?[(0, 0)].re))
        .collect()
}

/// Discretized radial operator for one motional quantum number.
#[derive(Debug, Clone)]
pub struct RadialProblem<T: Real> {
    pub m_mot: i32,
    pub rho: Vec<T>,
    pub potential: Vec<T>,
    pub connection: Vec<T>,
    pub kappa: T,
    /// Diagonal of the symmetric tridiagonal matrix.
    pub diag: Vec<T>,
    /// Constant off-diagonal entry, `-kappa / h^2`.
    pub off: T,
}

impl<T: Real> RadialProblem<T> {
    pub fn spacing(&self) -> T {
        self.rho[1] - self.rho[0]
    }

    /// Adds an extra potential (for instance the scalar potential `Phi_11`).
    pub fn add_potential(&mut self, extra: &[T]) -> Result<()> {
        if extra.len() != self.diag.len() {
            return Err(Error::InvalidArgument("extra potential has the wrong length".into()));
        }
        for (d, e) in self.diag.iter_mut().zip(extra) {
            *d += *e;
        }
        Ok(())
    }

    /// Dense copy of the matrix, for small checks.
    pub fn dense(&self) -> nalgebra::DMatrix<T> {
        let n = self.diag.len();
        nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if i.abs_diff(j) == 1 {
                self.off
            } else {
                T::zero()
            }
        })
    }
}

/// Zeeman (`-2 kappa M A / rho`) and diamagnetic (`kappa A^2`) pieces plus the
/// centrifugal term `kappa M^2 / rho^2`, returned separately.
pub fn gauge_terms<T: Real>(m_mot: i32, rho: T, a: T, kappa: T) -> (T, T, T) {
    let m = T::from_i32(m_mot).expect("small integer");
    let two = T::lit(2.0);
    (kappa * m * m / (rho * rho), -two * kappa * m * a / rho, kappa * a * a)
}

/// Builds the tridiagonal radial operator for motional quantum number `m_mot`.
pub fn assemble_radial<T: Real>(m_mot: i32, well: &WellProfile<T>, kappa: T) -> Result<RadialProblem<T>> {
    let n = well.rho.len();
    if n < 3 || well.potential.len() != n || well.connection.len() != n {
        return Err(Error::InvalidArgument("profile arrays must share a length of at least 3".into()));
    }
    if kappa <= T::zero() {
        return Err(Error::InvalidArgument("kappa must be positive".into()));
    }
    let h = well.rho[1] - well.rho[0];
    if h <= T::zero() || well.rho[0] <= T::zero() {
        return Err(Error::InvalidArgument("grid must be positive and increasing".into()));
    }
    for w in well.rho.windows(2) {
        if ((w[1] - w[0]) - h).abs() > T::lit(1e-6) * h {
            return Err(Error::InvalidArgument("grid must be uniform".into()));
        }
    }
    let walls = well.potential[0].min(well.potential[n - 1]);
    let inside = well.potential.iter().filter(|v| **v < walls).count();
    if inside < MIN_WELL_POINTS {
        return Err(Error::Resolution(format!(
            "{inside} grid points inside the well, need at least {MIN_WELL_POINTS}"
        )));
    }
    let m = T::from_i32(m_mot).expect("small integer");
    let quarter = T::lit(0.25);
    let two = T::lit(2.0);
    let diag = (0..n)
        .map(|i| {
            let r = well.rho[i];
            let g = m / r - well.connection[i];
            kappa * (two / (h * h) - quarter / (r * r)) + kappa * g * g + well.potential[i]
        })
        .collect();
    Ok(RadialProblem {
        m_mot,
        rho: well.rho.clone(),
        potential: well.potential.clone(),
        connection: well.connection.clone(),
        kappa,
        diag,
        off: -kappa / (h * h),
    })
}

/// Lowest levels of one radial problem.
#[derive(Debug, Clone)]
pub struct RadialSpectrum<T: Real> {
    pub m_mot: i32,
    pub levels: Vec<T>,
    /// Normalized `u(rho)` per level, when requested.
    pub wavefunctions: Option<Vec<Vec<T>>>,
}

/// Number of eigenvalues of the tridiagonal matrix below `x` (Sturm sequence).
fn sturm_count<T: Real>(diag: &[T], off: T, x: T) -> usize {
    let off2 = off * off;
    let tiny = T::default_epsilon() * (off.abs() + T::one()) * T::lit(1e-6);
    let mut count = 0;
    let mut q = T::one();
    for (i, d) in diag.iter().enumerate() {
        q = if i == 0 { *d - x } else { *d - x - off2 / q };
        if q == T::zero() {
            q = -tiny;
        }
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

/// `k`-th smallest eigenvalue (0-based) by bisection.
fn bisect_eigenvalue<T: Real>(diag: &[T], off: T, k: usize) -> Result<T> {
    let r = off.abs() * T::lit(2.0);
    let mut lo = diag.iter().copied().fold(T::max_value().expect("finite max"), |a, b| a.min(b)) - r;
    let mut hi = diag.iter().copied().fold(T::min_value().expect("finite min"), |a, b| a.max(b)) + r;
    for _ in 0..400 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let gap = (hi - lo).abs();
    if gap > T::default_epsilon().sqrt() * (T::one() + hi.abs()) {
        return Err(Error::Numerical(format!("bisection for level {k} did not converge")));
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// Solves `(T - shift) x = b` for the constant-off-diagonal tridiagonal `T`.
fn tridiagonal_solve<T: Real>(diag: &[T], off: T, shift: T, b: &[T]) -> Vec<T> {
    let n = diag.len();
    let tiny = T::default_epsilon() * T::lit(1e-3);
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut denom = diag[0] - shift;
    if denom.abs() < tiny {
        denom = tiny;
    }
    c[0] = off / denom;
    d[0] = b[0] / denom;
    for i in 1..n {
        let mut denom = diag[i] - shift - off * c[i - 1];
        if denom.abs() < tiny {
            denom = tiny;
        }
        c[i] = off / denom;
        d[i] = (b[i] - off * d[i - 1]) / denom;
    }
    let mut x = vec![T::zero(); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn inverse_iteration<T: Real>(problem: &RadialProblem<T>, level: T) -> Vec<T> {
    let n = problem.diag.len();
    let h = problem.spacing();
    let shift = level + T::default_epsilon() * (T::one() + level.abs()) * T::lit(10.0);
    let mut x: Vec<T> = (0..n)
        .map(|i| T::one() + T::lit(1e-3) * T::from_usize(i % 7).expect("small"))
        .collect();
    for _ in 0..4 {
        x = tridiagonal_solve(&problem.diag, problem.off, shift, &x);
        let norm = (x.iter().fold(T::zero(), |a, v| a + *v * *v) * h).sqrt();
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
    let peak = x.iter().copied().fold(T::zero(), |a, v| if v.abs() > a.abs() { v } else { a });
    if peak < T::zero() {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
    x
}

/// Lowest `count` levels (ascending), with wavefunctions normalized as
/// `sum u^2 h = 1` when `with_vectors` is set.
pub fn vibrational_spectrum<T: Real>(problem: &RadialProblem<T>, count: usize, with_vectors: bool) -> Result<RadialSpectrum<T>> {
    if count == 0 || count > problem.diag.len() {
        return Err(Error::InvalidArgument("level count out of range".into()));
    }
    let levels = (0..count)
        .map(|k| bisect_eigenvalue(&problem.diag, problem.off, k))
        .collect::<Result<Vec<_>>>()?;
    let wavefunctions = with_vectors.then(|| levels.iter().map(|&e| inverse_iteration(problem, e)).collect());
    Ok(RadialSpectrum {
        m_mot: problem.m_mot,
        levels,
        wavefunctions,
    })
}

/// One rung of the rotational ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderEntry<T> {
    pub m_mot: i32,
    /// Lowest level, units `hbar |delta|`.
    pub energy: T,
    /// Lowest level relative to the `M = 0` level, units `hbar Omega_L`.
    pub relative_omega_l: T,
}

/// Lowest level for each motional quantum number in `m_range`, relative to `M = 0`.
pub fn zeeman_ladder<T: Real>(well: &WellProfile<T>, kappa: T, m_range: std::ops::RangeInclusive<i32>) -> Result<Vec<LadderEntry<T>>> {
    if !m_range.contains(&0) {
        return Err(Error::InvalidArgument("M range must contain 0 as the reference".into()));
    }
    let ms: Vec<i32> = m_range.collect();
    let lowest = ms
        .par_iter()
        .map(|&m| {
            let p = assemble_radial(m, well, kappa)?;
            Ok((m, vibrational_spectrum(&p, 1, false)?.levels[0]))
        })
        .collect::<Result<Vec<_>>>()?;
    let e0 = lowest.iter().find(|(m, _)| *m == 0).expect("range contains 0").1;
    Ok(lowest
        .into_iter()
        .map(|(m_mot, energy)| LadderEntry {
            m_mot,
            energy,
            relative_omega_l: (energy - e0) / kappa,
        })
        .collect())
}

/// Physical energy and length scales of a pair of atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalScales {
    /// kg
    pub reduced_mass: f64,
    /// m
    pub r0: f64,
    /// rad/s
    pub delta_abs: f64,
    /// `hbar / (2 mu R0^2)`, rad/s
    pub omega_l: f64,
}

impl PhysicalScales {
    /// `kappa = Omega_L / |delta|`.
    pub fn kappa(&self) -> f64 {
        self.omega_l / self.delta_abs
    }

    /// `Omega_L / 2 pi` in Hz.
    pub fn omega_l_hz(&self) -> f64 {
        self.omega_l / (2.0 * std::f64::consts::PI)
    }
}

/// Larmor scale for reduced mass `reduced_mass` (kg), length `r0` (m) and `delta_abs` (rad/s).
pub fn physical_scales(reduced_mass: f64, r0: f64, delta_abs: f64) -> Result<PhysicalScales> {
    for (name, v) in [("reduced mass", reduced_mass), ("R0", r0), ("|delta|", delta_abs)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(PhysicalScales {
        reduced_mass,
        r0,
        delta_abs,
        omega_l: HBAR / (2.0 * reduced_mass * r0 * r0),
    })
}

/// `R0 = (|D|^2 / (4 pi eps0 hbar |delta|))^(1/3)`; the first argument is
/// `|D|^2 / (4 pi eps0)` in J m^3.
pub fn r0_from_coupling(reduced_element_sq_over_4pieps0: f64, delta_abs: f64) -> Result<f64> {
    let d2 = reduced_element_sq_over_4pieps0;
    if !(d2.is_finite() && d2 > 0.0 && delta_abs.is_finite() && delta_abs > 0.0) {
        return Err(Error::InvalidArgument("coupling and |delta| must be positive".into()));
    }
    Ok((d2 / (HBAR * delta_abs)).cbrt())
}

/// Physical inputs in SI-friendly units, as read from JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConfig {
    /// Mass of one atom in atomic mass units; the pair's reduced mass is half of it.
    pub atom_mass_amu: f64,
    pub r0_m: f64,
    pub delta_rad_s: f64,
}

impl PhysicalConfig {
    pub fn scales(&self) -> Result<PhysicalScales> {
        physical_scales(self.atom_mass_amu * AMU / 2.0, self.r0_m, self.delta_rad_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn harmonic_profile(n: usize) -> WellProfile<f64> {
        let rho = crate::adiabatic::linspace(0.5, 1.5, n);
        let potential = rho.iter().map(|r| 50.0 * (r - 1.0) * (r - 1.0)).collect();
        let connection = rho.iter().map(|r| 0.3 / r).collect();
        WellProfile {
            rho,
            potential,
            connection,
        }
    }

    #[test]
    fn sturm_bisection_matches_dense_solver() {
        let well = harmonic_profile(300);
        let p = assemble_radial(2, &well, 1e-3).unwrap();
        let mut dense: Vec<f64> = p.dense().symmetric_eigenvalues().iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let s = vibrational_spectrum(&p, 6, true).unwrap();
        for k in 0..6 {
            assert_relative_eq!(s.levels[k], dense[k], epsilon = 1e-11);
        }
        let h = p.spacing();
        let u = &s.wavefunctions.as_ref().unwrap()[1];
        let tu: Vec<f64> = (0..u.len())
            .map(|i| {
                let left = if i > 0 { u[i - 1] } else { 0.0 };
                let right = if i + 1 < u.len() { u[i + 1] } else { 0.0 };
                p.diag[i] * u[i] + p.off * (left + right)
            })
            .collect();
        let res: f64 = tu.iter().zip(u).map(|(a, b)| (a - s.levels[1] * b).powi(2)).sum::<f64>() * h;
        assert!(res.sqrt() < 1e-8);
    }

    #[test]
    fn harmonic_spacing_oracle() {
        // kappa p^2 + k x^2 / 2 has spacing sqrt(2 kappa k)
        let well = harmonic_profile(4000).without_gauge_field();
        let kappa = 1e-4;
        let p = assemble_radial(0, &well, kappa).unwrap();
        let s = vibrational_spectrum(&p, 4, false).unwrap();
        let expect = (2.0 * kappa * 100.0f64).sqrt();
        for k in 1..4 {
            assert_relative_eq!(s.levels[k] - s.levels[k - 1], expect, max_relative = 2e-3);
        }
    }

    #[test]
    fn opposite_m_degenerate_without_gauge_field() {
        let well = harmonic_profile(500).without_gauge_field();
        let a = assemble_radial(3, &well, 1e-3).unwrap();
        let b = assemble_radial(-3, &well, 1e-3).unwrap();
        assert_eq!(a.diag, b.diag);
        assert_eq!(a.off, b.off);
    }

    #[test]
    fn gauge_term_expansion() {
        let well = harmonic_profile(400);
        let kappa = 2e-3;
        let m = -2;
        let p = assemble_radial(m, &well, kappa).unwrap();
        let h = p.spacing();
        for i in 0..well.rho.len() {
            let r = well.rho[i];
            let (centrifugal, zeeman, dia) = gauge_terms(m, r, well.connection[i], kappa);
            let expect = kappa * (2.0 / (h * h) - 0.25 / (r * r)) + centrifugal + zeeman + dia + well.potential[i];
            assert_relative_eq!(p.diag[i], expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let well = harmonic_profile(150);
        assert!(matches!(assemble_radial(0, &well, 1e-3), Err(Error::Resolution(_))));
    }

    #[test]
    fn larmor_scaling_and_r0() {
        let a = physical_scales(1e-25, 1e-6, 1e7).unwrap();
        let b = physical_scales(1e-25, 2e-6, 1e7).unwrap();
        assert_relative_eq!(a.omega_l / b.omega_l, 4.0, max_relative = 1e-14);
        assert!(physical_scales(-1.0, 1e-6, 1e7).is_err());
        let delta = 2.0e7;
        assert_relative_eq!(r0_from_coupling(HBAR * delta, delta).unwrap(), 1.0, max_relative = 1e-14);
        let r1 = r0_from_coupling(3e-40, delta).unwrap();
        assert_relative_eq!(r0_from_coupling(8.0 * 3e-40, delta).unwrap(), 2.0 * r1, max_relative = 1e-14);
        assert_relative_eq!(r0_from_coupling(3e-40, 4.0 * delta).unwrap(), r1 * 4f64.powf(-1.0 / 3.0), max_relative = 1e-14);
        assert!(r0_from_coupling(0.0, delta).is_err());
    }

    #[test]
    fn physical_config_json() {
        let cfg: PhysicalConfig =
            serde_json::from_str(r#"{"atom_mass_amu": 38.9637064864, "r0_m": 2.85e-6, "delta_rad_s": 1e7}"#).unwrap();
        assert_relative_eq!(cfg.scales().unwrap().omega_l_hz(), 31.9, max_relative = 1e-2);
        assert!(serde_json::from_str::<PhysicalConfig>(r#"{"atom_mass_amu": 1, "r0_m": 1, "delta_rad_s": 1, "x": 0}"#).is_err());
    }
}

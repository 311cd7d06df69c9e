//! Two-atom `nsnp` basis and the internal Hamiltonian `H_int = H_S + V_dd`.
//!
//! Units: energies in `hbar |delta|`, lengths in `R0`, angular momentum in
//! `hbar`. The offset `omega_0` common to all `nsnp` states is dropped.

use crate::angular::{dipole_between, AtomicState};
use crate::error::{Error, Result};
use crate::scalar::{creal, phase, Real, C};
use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Dimension of the `nsnp` subspace.
pub const N: usize = 16;

/// Dense operator on the two-atom basis.
pub type InternalOperator<T> = SMatrix<C<T>, N, N>;
/// Real operator on the two-atom basis (the `phi = 0` half-plane).
pub type RealOperator<T> = SMatrix<T, N, N>;
pub type StateVector<T> = SVector<C<T>, N>;

/// Which atom carries the `p` excitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairKind {
    /// `|s m1, p m2>`
    SP,
    /// `|p m2, s m1>`
    PS,
}

/// Two-atom product state, stored as the `s` and `p` sublevels plus which atom is excited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairState {
    pub kind: PairKind,
    pub s: AtomicState,
    pub p: AtomicState,
}

impl PairState {
    pub fn atom1(&self) -> AtomicState {
        match self.kind {
            PairKind::SP => self.s,
            PairKind::PS => self.p,
        }
    }

    pub fn atom2(&self) -> AtomicState {
        match self.kind {
            PairKind::SP => self.p,
            PairKind::PS => self.s,
        }
    }

    /// Total azimuthal quantum number `M = m1 + m2` (always an integer here).
    pub fn total_m(&self) -> i32 {
        (self.s.m.doubled() + self.p.m.doubled()) / 2
    }

    pub fn swapped(&self) -> PairState {
        PairState {
            kind: match self.kind {
                PairKind::SP => PairKind::PS,
                PairKind::PS => PairKind::SP,
            },
            ..*self
        }
    }
}

impl fmt::Display for PairState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}, {}>", self.atom1(), self.atom2())
    }
}

/// Canonical ordering of the 16 `nsnp` states.
///
/// Index `4 a + b` (with `a` over `m_s = -1/2, +1/2` and `b` over
/// `m_p = -3/2 .. 3/2`) is `|s m_s, p m_p>`; index `8 + 4 a + b` is the
/// atom-swapped state `|p m_p, s m_s>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoAtomBasis {
    states: Vec<PairState>,
}

impl TwoAtomBasis {
    pub fn new() -> Self {
        let mut states = Vec::with_capacity(N);
        for kind in [PairKind::SP, PairKind::PS] {
            for ms in [-1, 1] {
                for mp in [-3, -1, 1, 3] {
                    states.push(PairState {
                        kind,
                        s: AtomicState::s(ms).expect("valid s sublevel"),
                        p: AtomicState::p(mp).expect("valid p sublevel"),
                    });
                }
            }
        }
        TwoAtomBasis { states }
    }

    pub fn states(&self) -> &[PairState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &PairState) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    pub fn total_m(&self) -> [i32; N] {
        std::array::from_fn(|i| self.states[i].total_m())
    }

    /// Basis index of the atom-swapped partner of state `i`.
    pub fn exchange_partner(&self, i: usize) -> usize {
        (i + N / 2) % N
    }
}

impl Default for TwoAtomBasis {
    fn default() -> Self {
        Self::new()
    }
}

/// Dimensionless model parameters.
///
/// `delta_ratio = Delta / delta` with both Stark shifts negative, so the
/// `p +1/2` level sits at `-delta_ratio` and `p -1/2` at `-1`.
/// `kappa = Omega_L / |delta|` sets the kinetic energy scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub delta_ratio: f64,
    pub kappa: f64,
}

impl ModelParams {
    pub fn new(delta_ratio: f64, kappa: f64) -> Result<Self> {
        let p = ModelParams { delta_ratio, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_ratio.is_finite() && self.delta_ratio > 0.0) {
            return Err(Error::Config(format!(
                "delta_ratio = Delta/delta must be positive (both shifts negative), got {}",
                self.delta_ratio
            )));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::Config(format!("kappa must be positive, got {}", self.kappa)));
        }
        Ok(())
    }

    /// Parses and validates a JSON document `{"delta_ratio": .., "kappa": ..}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let p: ModelParams = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    /// `Delta` in units of `|delta|` (negative).
    pub fn big_delta(&self) -> f64 {
        -self.delta_ratio
    }

    /// `delta` in units of `|delta|`, always `-1`.
    pub fn small_delta(&self) -> f64 {
        -1.0
    }
}

/// Relative position in cylindrical coordinates (units of `R0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position<T> {
    pub rho: T,
    pub z: T,
    pub phi: T,
}

impl<T: Real> Position<T> {
    pub fn new(rho: T, z: T, phi: T) -> Self {
        Position { rho, z, phi }
    }

    /// Point in the `phi = 0` half-plane.
    pub fn plane(rho: T, z: T) -> Self {
        Position { rho, z, phi: T::zero() }
    }

    pub fn from_cartesian(r: Vector3<T>) -> Self {
        let rho = (r.x * r.x + r.y * r.y).sqrt();
        let phi = if rho > T::zero() { r.y.atan2(r.x) } else { T::zero() };
        Position { rho, z: r.z, phi }
    }

    pub fn cartesian(&self) -> Vector3<T> {
        Vector3::new(self.rho * self.phi.cos(), self.rho * self.phi.sin(), self.z)
    }

    pub fn radius(&self) -> T {
        (self.rho * self.rho + self.z * self.z).sqrt()
    }

    pub fn e_rho(&self) -> Vector3<T> {
        Vector3::new(self.phi.cos(), self.phi.sin(), T::zero())
    }

    pub fn e_phi(&self) -> Vector3<T> {
        Vector3::new(-self.phi.sin(), self.phi.cos(), T::zero())
    }

    pub fn to_f64(&self) -> Position<f64> {
        Position {
            rho: self.rho.as_f64(),
            z: self.z.as_f64(),
            phi: self.phi.as_f64(),
        }
    }
}

/// Nonzero dipole-dipole coupling between two basis states:
/// `<i| V_dd |j> = u . K(R) . w` with `u`, `w` the single-atom dipole elements.
#[derive(Debug, Clone)]
struct DipolePair<T: Real> {
    i: usize,
    j: usize,
    /// `u_a w_b + u_b w_a` (halved on the diagonal) for `(a, b)` in [`SYM_PAIRS`],
    /// so that `u.K.w = sum t_ab K_ab` for symmetric `K`.
    t: [C<T>; 6],
}

const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// Internal Hamiltonian of the two-atom system for fixed parameters.
#[derive(Debug, Clone)]
pub struct InteractionModel<T: Real> {
    params: ModelParams,
    basis: TwoAtomBasis,
    stark: SVector<T, N>,
    pairs: Vec<DipolePair<T>>,
}

impl<T: Real> InteractionModel<T> {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let basis = TwoAtomBasis::new();
        let big_delta = T::lit(params.big_delta());
        let small_delta = T::lit(params.small_delta());
        let stark = SVector::<T, N>::from_fn(|i, _| {
            let p = basis.states[i].p.m.doubled();
            match p {
                -1 => small_delta,
                1 => big_delta,
                _ => T::zero(),
            }
        });
        let mut pairs = Vec::new();
        for (i, bra) in basis.states.iter().enumerate() {
            for (j, ket) in basis.states.iter().enumerate() {
                let u = dipole_between::<T>(bra.atom1(), ket.atom1());
                let w = dipole_between::<T>(bra.atom2(), ket.atom2());
                let zero = T::zero();
                if u.iter().all(|c| c.norm_sqr() == zero) || w.iter().all(|c| c.norm_sqr() == zero) {
                    continue;
                }
                let t = SYM_PAIRS.map(|(a, b)| if a == b { u[a] * w[a] } else { u[a] * w[b] + u[b] * w[a] });
                pairs.push(DipolePair { i, j, t });
            }
        }
        Ok(InteractionModel {
            params,
            basis,
            stark,
            pairs,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn basis(&self) -> &TwoAtomBasis {
        &self.basis
    }

    pub fn kappa(&self) -> T {
        T::lit(self.params.kappa)
    }

    /// Diagonal Stark Hamiltonian `H_S` (units `hbar |delta|`).
    pub fn stark_hamiltonian(&self) -> InternalOperator<T> {
        InternalOperator::from_diagonal(&self.stark.map(creal))
    }

    pub fn stark_diagonal(&self) -> &SVector<T, N> {
        &self.stark
    }

    fn contract(&self, kernel: &Matrix3<T>) -> InternalOperator<T> {
        let mut out = InternalOperator::zeros();
        let k = SYM_PAIRS.map(|(a, b)| kernel[(a, b)]);
        for pair in &self.pairs {
            let mut acc = creal(T::zero());
            for (t, k) in pair.t.iter().zip(k) {
                acc += t.scale(k);
            }
            out[(pair.i, pair.j)] = acc;
        }
        out
    }

    fn checked_cartesian(pos: &Position<T>) -> Result<(Vector3<T>, T)> {
        let r = pos.cartesian();
        let r2 = r.norm_squared();
        if r2 == T::zero() {
            return Err(Error::Singular);
        }
        Ok((r, r2))
    }

    /// Dipole-dipole interaction, `[d1.d2 - 3 (d1.n)(d2.n)] / R^3`.
    pub fn vdd_matrix(&self, pos: &Position<T>) -> Result<InternalOperator<T>> {
        let (r, r2) = Self::checked_cartesian(pos)?;
        Ok(self.contract(&dd_kernel(&r, r2)))
    }

    pub fn hint(&self, pos: &Position<T>) -> Result<InternalOperator<T>> {
        let mut h = self.vdd_matrix(pos)?;
        for i in 0..N {
            h[(i, i)] += creal(self.stark[i]);
        }
        Ok(h)
    }

    /// `H_int` restricted to the `phi = 0` half-plane, where it is real symmetric.
    pub fn hint_plane(&self, rho: T, z: T) -> Result<RealOperator<T>> {
        let h = self.hint(&Position::plane(rho, z))?;
        Ok(h.map(|c| c.re))
    }

    /// Cartesian components of `grad H_int` (units `hbar |delta| / R0`).
    pub fn grad_hint(&self, pos: &Position<T>) -> Result<[InternalOperator<T>; 3]> {
        let (r, r2) = Self::checked_cartesian(pos)?;
        Ok(std::array::from_fn(|c| self.contract(&dd_kernel_derivative(&r, r2, c))))
    }

    /// One Cartesian component `c` of `grad H_int`.
    pub fn grad_hint_component(&self, pos: &Position<T>, c: usize) -> Result<InternalOperator<T>> {
        if c > 2 {
            return Err(Error::InvalidArgument(format!("Cartesian component {c} out of range")));
        }
        let (r, r2) = Self::checked_cartesian(pos)?;
        Ok(self.contract(&dd_kernel_derivative(&r, r2, c)))
    }

    /// Total internal `J_z` (diagonal, entries `M`).
    pub fn jz_matrix(&self) -> InternalOperator<T> {
        InternalOperator::from_fn(|i, j| {
            if i == j {
                creal(T::from_i32(self.basis.states[i].total_m()).expect("small integer"))
            } else {
                creal(T::zero())
            }
        })
    }

    pub fn jz_diagonal(&self) -> SVector<T, N> {
        SVector::from_fn(|i, _| T::from_i32(self.basis.states[i].total_m()).expect("small integer"))
    }

    /// Permutation swapping the two atoms.
    pub fn exchange_operator(&self) -> InternalOperator<T> {
        InternalOperator::from_fn(|i, j| {
            if self.basis.exchange_partner(i) == j {
                creal(T::one())
            } else {
                creal(T::zero())
            }
        })
    }

    /// `exp(-i Jz phi)` as a diagonal of phases.
    pub fn rotation_phases(&self, phi: T) -> StateVector<T> {
        self.jz_diagonal().map(|m| phase(m * phi))
    }
}

/// `K_ab(R) = (delta_ab R^2 - 3 R_a R_b) / R^5`.
fn dd_kernel<T: Real>(r: &Vector3<T>, r2: T) -> Matrix3<T> {
    let three = T::lit(3.0);
    let inv_r5 = T::one() / (r2 * r2 * r2.sqrt());
    Matrix3::from_fn(|a, b| {
        let delta = if a == b { r2 } else { T::zero() };
        (delta - three * r[a] * r[b]) * inv_r5
    })
}

/// `d K_ab / d R_c = -3 (delta_ab R_c + delta_ac R_b + delta_bc R_a) / R^5 + 15 R_a R_b R_c / R^7`.
fn dd_kernel_derivative<T: Real>(r: &Vector3<T>, r2: T, c: usize) -> Matrix3<T> {
    let three = T::lit(3.0);
    let fifteen = T::lit(15.0);
    let inv_r5 = T::one() / (r2 * r2 * r2.sqrt());
    let inv_r7 = inv_r5 / r2;
    let kd = |a: usize, b: usize| if a == b { T::one() } else { T::zero() };
    Matrix3::from_fn(|a, b| {
        -three * (kd(a, b) * r[c] + kd(a, c) * r[b] + kd(b, c) * r[a]) * inv_r5
            + fifteen * r[a] * r[b] * r[c] * inv_r7
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(ratio: f64) -> InteractionModel<f64> {
        InteractionModel::new(ModelParams::new(ratio, 2.8e-6).unwrap()).unwrap()
    }

    fn max_abs(m: &InternalOperator<f64>) -> f64 {
        m.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn random_position(rng: &mut ChaCha8Rng) -> Position<f64> {
        Position::new(
            rng.random_range(0.3..3.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-3.1..3.1),
        )
    }

    #[test]
    fn basis_counts() {
        let basis = TwoAtomBasis::new();
        assert_eq!(basis.len(), 16);
        let ms = basis.total_m();
        assert_eq!(ms.iter().filter(|m| m.abs() == 1).count(), 8);
        assert_eq!(ms.iter().filter(|m| **m == 0).count(), 4);
        assert_eq!(ms.iter().filter(|m| m.abs() == 2).count(), 4);
        for (i, a) in basis.states().iter().enumerate() {
            for b in &basis.states()[i + 1..] {
                assert_ne!(a, b);
            }
            assert_eq!(basis.states()[basis.exchange_partner(i)], a.swapped());
        }
    }

    #[test]
    fn stark_entries() {
        let m = model(3.0);
        let b = m.basis().clone();
        let idx = |kind, ms, mp| {
            b.index_of(&PairState {
                kind,
                s: AtomicState::s(ms).unwrap(),
                p: AtomicState::p(mp).unwrap(),
            })
            .unwrap()
        };
        let hs = m.stark_hamiltonian();
        assert_eq!(hs[(idx(PairKind::SP, 1, -1), idx(PairKind::SP, 1, -1))].re, -1.0);
        assert_eq!(hs[(idx(PairKind::PS, -1, 1), idx(PairKind::PS, -1, 1))].re, -3.0);
        assert_eq!(hs[(idx(PairKind::SP, -1, 3), idx(PairKind::SP, -1, 3))].re, 0.0);
        assert_eq!(max_abs(&(hs - InternalOperator::from_diagonal(&hs.diagonal()))), 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(-3.0, 1e-6).is_err());
        assert!(ModelParams::new(3.0, 0.0).is_err());
        assert!(ModelParams::from_json(r#"{"delta_ratio": 3.0, "kappa": 2.8e-6}"#).is_ok());
        assert!(ModelParams::from_json(r#"{"delta_ratio": 3.0, "kappa": 2.8e-6, "kapa": 1}"#).is_err());
        assert!(ModelParams::from_json(r#"{"delta_ratio": 3.0}"#).is_err());
    }

    #[test]
    fn vdd_scales_as_inverse_cube() {
        let m = model(3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = random_position(&mut rng);
            let p2 = Position::new(2.0 * p.rho, 2.0 * p.z, p.phi);
            let v1 = m.vdd_matrix(&p).unwrap();
            let v2 = m.vdd_matrix(&p2).unwrap();
            assert_abs_diff_eq!(max_abs(&(v2 * creal(8.0) - v1)), 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(v1.norm() / v2.norm(), 8.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn vdd_conserves_m_on_axis() {
        let m = model(3.0);
        let ms = m.basis().total_m();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let z: f64 = rng.random_range(0.2..4.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let v = m.vdd_matrix(&Position::new(0.0, z, 0.0)).unwrap();
            for i in 0..N {
                for j in 0..N {
                    if ms[i] != ms[j] {
                        assert!(v[(i, j)].norm() < 1e-14, "({i},{j}) at z={z}");
                    }
                }
            }
        }
    }

    #[test]
    fn vdd_only_exchanges_excitation() {
        let m = model(3.0);
        let v = m.vdd_matrix(&Position::new(1.1, 0.4, 0.3)).unwrap();
        for i in 0..N {
            for j in 0..N {
                if (i < 8) == (j < 8) {
                    assert_eq!(v[(i, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn singular_at_origin() {
        let m = model(3.0);
        assert!(matches!(m.vdd_matrix(&Position::new(0.0, 0.0, 0.0)), Err(Error::Singular)));
        assert!(m.grad_hint(&Position::new(0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn operators_hermitian_and_exchange_symmetric() {
        let m = model(1.13);
        let x = m.exchange_operator();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = random_position(&mut rng);
            let h = m.hint(&p).unwrap();
            assert!(max_abs(&(h - h.adjoint())) < 1e-12);
            let v = m.vdd_matrix(&p).unwrap();
            assert!(max_abs(&(x * v * x - v)) < 1e-14);
            for g in m.grad_hint(&p).unwrap() {
                assert!(max_abs(&(g - g.adjoint())) < 1e-12);
            }
        }
        let jz = m.jz_matrix();
        assert!(max_abs(&(jz - jz.adjoint())) == 0.0);
    }

    #[test]
    fn real_symmetric_in_phi_zero_plane() {
        let m = model(3.0);
        let p = Position::plane(1.3, 0.6);
        let h = m.hint(&p).unwrap();
        assert!(h.iter().all(|c| c.im.abs() < 1e-15));
        let g = m.grad_hint(&p).unwrap();
        for c in [0, 2] {
            assert!(g[c].iter().all(|v| v.im.abs() < 1e-15));
            assert!(max_abs(&(g[c] - g[c].transpose())) < 1e-15);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = model(3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let step = 1e-6;
        for _ in 0..50 {
            let p = random_position(&mut rng);
            let g = m.grad_hint(&p).unwrap();
            let r = p.cartesian();
            for c in 0..3 {
                let mut rp = r;
                let mut rm = r;
                rp[c] += step;
                rm[c] -= step;
                let fd = (m.hint(&Position::from_cartesian(rp)).unwrap()
                    - m.hint(&Position::from_cartesian(rm)).unwrap())
                    / creal(2.0 * step);
                let rel = max_abs(&(fd - g[c])) / max_abs(&g[c]);
                assert!(rel < 1e-5, "component {c} rel err {rel}");
            }
        }
    }

    #[test]
    fn azimuthal_derivative_is_jz_commutator() {
        let m = model(3.0);
        let jz = m.jz_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let p = random_position(&mut rng);
            let h = m.hint(&p).unwrap();
            let comm = (jz * h - h * jz) * C::new(0.0, -1.0);
            // analytic route: (1/rho) d_phi H = e_phi . grad H
            let g = m.grad_hint(&p).unwrap();
            let e = p.e_phi();
            let dphi = (g[0] * creal(e.x) + g[1] * creal(e.y)) * creal(p.rho);
            assert!(max_abs(&(dphi - comm)) < 1e-10);
            // finite-difference route
            let hstep = 1e-5;
            let fd = (m.hint(&Position::new(p.rho, p.z, p.phi + hstep)).unwrap()
                - m.hint(&Position::new(p.rho, p.z, p.phi - hstep)).unwrap())
                / creal(2.0 * hstep);
            assert!(max_abs(&(fd - comm)) < 1e-7 * max_abs(&comm).max(1.0));
        }
    }

    #[test]
    fn rotation_covariance() {
        let m = model(1.3);
        let p = Position::new(1.2, 0.3, 0.77);
        let u = InternalOperator::from_diagonal(&m.rotation_phases(p.phi));
        let h0 = m.hint(&Position::plane(p.rho, p.z)).unwrap();
        let h = m.hint(&p).unwrap();
        assert!(max_abs(&(u * h0 * u.adjoint() - h)) < 1e-13);
    }

    #[test]
    fn jz_properties() {
        let m = model(3.0);
        let jz = m.jz_matrix();
        let idx = m
            .basis()
            .index_of(&PairState {
                kind: PairKind::SP,
                s: AtomicState::s(1).unwrap(),
                p: AtomicState::p(3).unwrap(),
            })
            .unwrap();
        assert_eq!(jz[(idx, idx)].re, 2.0);
        assert_eq!(jz.trace().re, 0.0);
        let hs = m.stark_hamiltonian();
        assert_eq!(max_abs(&(jz * hs - hs * jz)), 0.0);
    }

    #[test]
    fn large_separation_recovers_stark_spectrum() {
        let m = model(3.0);
        let h = m.hint_plane(100.0, 0.0).unwrap();
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let expect = [[-3.0; 4].as_slice(), &[-1.0; 4], &[0.0; 8]].concat();
        for (a, b) in ev.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-5);
        }
    }

    #[test]
    fn spectrum_independent_of_phi() {
        let m = model(3.0);
        let sorted = |h: InternalOperator<f64>| {
            let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let a = sorted(m.hint(&Position::new(1.1, 0.2, 0.0)).unwrap());
        let b = sorted(m.hint(&Position::new(1.1, 0.2, 1.234)).unwrap());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }
}

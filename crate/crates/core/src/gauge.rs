//! Berry connections, curvature and the non-Abelian quantities built from them.
//!
//! Everything is evaluated from matrix elements of `grad H_int` between
//! adiabatic states, `A_nm = i <n|grad H|m> / (e_m - e_n)`, so no numerical
//! differentiation of eigenvectors is needed. Diagonal connection elements
//! follow the parallel-transport convention: only the azimuthal one survives,
//! `A_n^(phi) = <Jz>_n / rho`. Units: `hbar / R0` for `A`, `hbar / R0^2` for
//! curvature, `hbar |delta|` for `Phi`; the artificial charge is set to 1.

use crate::adiabatic::AdiabaticFrame;
use crate::error::{Error, Result};
use crate::model::{InteractionModel, InternalOperator, Position, StateVector, N};
use crate::scalar::{cplx, creal, Real, C};
use nalgebra::{ComplexField, DMatrix, Matrix2, SVector, Vector3};

/// Energy gaps below this make `A_nm` undefined.
pub const DEGENERACY_GAP: f64 = 1e-8;

/// Gauge quantities at one point, indexed by surface label.
#[derive(Debug, Clone)]
pub struct LocalGauge<T: Real> {
    pub position: Position<T>,
    pub energies: SVector<T, N>,
    /// `<Jz>` per label.
    pub jz: SVector<T, N>,
    /// Cartesian `<m| d_c H |n>` in the label basis.
    grad: [InternalOperator<T>; 3],
    kappa: T,
}

impl<T: Real> LocalGauge<T> {
    /// Builds the gradient matrix elements for a frame.
    pub fn new(model: &InteractionModel<T>, frame: &AdiabaticFrame<T>) -> Result<Self> {
        let mut vectors = InternalOperator::<T>::zeros();
        let mut energies = SVector::<T, N>::zeros();
        for k in 0..N {
            let l = frame.labels[k];
            vectors.set_column(l, &frame.vectors.column(k));
            energies[l] = frame.energies[k];
        }
        Self::from_vectors(model, frame.position, energies, vectors)
    }

    /// Builds from explicit eigenpairs (columns of `vectors` paired with `energies`).
    pub fn from_vectors(
        model: &InteractionModel<T>,
        position: Position<T>,
        energies: SVector<T, N>,
        vectors: InternalOperator<T>,
    ) -> Result<Self> {
        let g = model.grad_hint(&position)?;
        let adj = vectors.adjoint();
        let grad = [adj * g[0] * vectors, adj * g[1] * vectors, adj * g[2] * vectors];
        let jzd = model.jz_diagonal();
        let jz = SVector::<T, N>::from_fn(|l, _| {
            let mut acc = T::zero();
            for i in 0..N {
                acc += jzd[i] * vectors[(i, l)].norm_sqr();
            }
            acc
        });
        Ok(LocalGauge {
            position,
            energies,
            jz,
            grad,
            kappa: model.kappa(),
        })
    }

    /// `<n| d_c H |m>` for Cartesian direction `c`.
    pub fn grad_element(&self, c: usize, n: usize, m: usize) -> C<T> {
        self.grad[c][(n, m)]
    }

    fn gap(&self, n: usize, m: usize) -> Result<T> {
        let gap = self.energies[m] - self.energies[n];
        if gap.abs() < T::lit(DEGENERACY_GAP) {
            return Err(Error::Degenerate {
                n,
                m,
                gap: gap.as_f64(),
            });
        }
        Ok(gap)
    }

    /// Off-diagonal connection `A_nm` (Cartesian components).
    pub fn connection_offdiag(&self, n: usize, m: usize) -> Result<Vector3<C<T>>> {
        if n == m {
            return Err(Error::InvalidArgument("connection_offdiag needs n != m".into()));
        }
        let gap = self.gap(n, m)?;
        let i = cplx(T::zero(), T::one());
        Ok(Vector3::from_fn(|c, _| i * self.grad[c][(n, m)] / creal(gap)))
    }

    /// `A_n^(phi) = <Jz>_n / rho`.
    pub fn connection_diag_phi(&self, n: usize) -> Result<T> {
        if self.position.rho == T::zero() {
            return Err(Error::OnAxis);
        }
        Ok(self.jz[n] / self.position.rho)
    }

    /// Diagonal connection in Cartesian components, `A_n^(phi) e_phi`.
    pub fn connection_diag(&self, n: usize) -> Result<Vector3<C<T>>> {
        let a = self.connection_diag_phi(n)?;
        Ok(self.position.e_phi().map(|e| creal(e * a)))
    }

    /// Any element of the connection.
    pub fn connection(&self, n: usize, m: usize) -> Result<Vector3<C<T>>> {
        if n == m {
            self.connection_diag(n)
        } else {
            self.connection_offdiag(n, m)
        }
    }

    /// `q x q` blocks of the three Cartesian connection components for `labels`.
    pub fn connection_block(&self, labels: &[usize]) -> Result<[DMatrix<C<T>>; 3]> {
        let q = labels.len();
        let mut out = [DMatrix::zeros(q, q), DMatrix::zeros(q, q), DMatrix::zeros(q, q)];
        for (a, &n) in labels.iter().enumerate() {
            for (b, &m) in labels.iter().enumerate() {
                let v = self.connection(n, m)?;
                for c in 0..3 {
                    out[c][(a, b)] = v[c];
                }
            }
        }
        Ok(out)
    }

    /// `i sum_{p in outside} (A^k_np A^l_pm - A^l_np A^k_pm)` for Cartesian `k`, `l`.
    fn outside_sum(&self, n: usize, m: usize, k: usize, l: usize, inside: &[usize]) -> Result<C<T>> {
        let i = cplx(T::zero(), T::one());
        let mut acc = creal(T::zero());
        for p in 0..N {
            if inside.contains(&p) {
                continue;
            }
            let a_np = self.connection_offdiag(n, p)?;
            let a_pm = self.connection_offdiag(p, m)?;
            acc += a_np[k] * a_pm[l] - a_np[l] * a_pm[k];
        }
        Ok(i * acc)
    }

    /// Curvature of a single surface from the sum over all others,
    /// `Omega_n^(kl) = i sum_{p != n} (A^k_np A^l_pn - A^l_np A^k_pn)`.
    pub fn berry_curvature_diag(&self, n: usize, k: usize, l: usize) -> Result<T> {
        Ok(self.outside_sum(n, n, k, l, &[n])?.re)
    }

    /// Field-strength tensor `F^(kl)` of the subspace `labels`, from the sum over
    /// the states outside it.
    pub fn field_strength(&self, labels: &[usize], k: usize, l: usize) -> Result<DMatrix<C<T>>> {
        let q = labels.len();
        let mut f = DMatrix::zeros(q, q);
        for (a, &n) in labels.iter().enumerate() {
            for (b, &m) in labels.iter().enumerate() {
                f[(a, b)] = self.outside_sum(n, m, k, l, labels)?;
            }
        }
        Ok(f)
    }

    /// Artificial magnetic field of surface `n`, `B^i = eps_ikl Omega^(kl) / 2`.
    pub fn magnetic_field(&self, n: usize) -> Result<Vector3<T>> {
        Ok(Vector3::new(
            self.berry_curvature_diag(n, 1, 2)?,
            self.berry_curvature_diag(n, 2, 0)?,
            self.berry_curvature_diag(n, 0, 1)?,
        ))
    }

    /// `(B_rho, B_phi, B_z)` of surface `n`.
    pub fn magnetic_field_cylindrical(&self, n: usize) -> Result<Vector3<T>> {
        let b = self.magnetic_field(n)?;
        let p = &self.position;
        Ok(Vector3::new(b.dot(&p.e_rho()), b.dot(&p.e_phi()), b.z))
    }

    /// `C = i [A^(1), A^(2)]` from the explicit `2 x 2` connection blocks.
    pub fn commutator_direct(&self, pair: [usize; 2]) -> Result<Matrix2<C<T>>> {
        let blocks = self.connection_block(&pair)?;
        let (a1, a2) = (&blocks[0], &blocks[1]);
        let c = (a1 * a2 - a2 * a1) * cplx(T::zero(), T::one());
        Ok(Matrix2::from_fn(|r, s| c[(r, s)]))
    }

    /// Diagonal of `C` without any phase convention:
    /// `C_nn = F_n^(12)(q=1) - F_n^(12)(q=2)`.
    pub fn commutator_diag_convention_free(&self, pair: [usize; 2]) -> Result<[T; 2]> {
        let mut out = [T::zero(); 2];
        for (a, &n) in pair.iter().enumerate() {
            let single = self.outside_sum(n, n, 0, 1, &[n])?;
            let double = self.outside_sum(n, n, 0, 1, &pair)?;
            out[a] = (single - double).re;
        }
        Ok(out)
    }

    /// `C` for `pair`, with the diagonal cross-checked against the
    /// convention-free route to `1e-6`.
    pub fn commutator_c(&self, pair: [usize; 2]) -> Result<Matrix2<C<T>>> {
        let direct = self.commutator_direct(pair)?;
        let free = self.commutator_diag_convention_free(pair)?;
        for a in 0..2 {
            let diff = (direct[(a, a)] - creal(free[a])).modulus();
            if diff > T::lit(1e-6) {
                return Err(Error::Consistency(format!(
                    "commutator routes disagree by {:e} at rho={}",
                    diff.as_f64(),
                    self.position.rho.as_f64()
                )));
            }
        }
        Ok(direct)
    }

    /// `Phi_kl = kappa sum_{p outside} A_kp . A_pl` for the subspace `labels`.
    pub fn scalar_potential(&self, labels: &[usize]) -> Result<DMatrix<C<T>>> {
        let q = labels.len();
        let mut phi = DMatrix::zeros(q, q);
        for (a, &k) in labels.iter().enumerate() {
            for (b, &l) in labels.iter().enumerate() {
                let mut acc = creal(T::zero());
                for p in 0..N {
                    if labels.contains(&p) {
                        continue;
                    }
                    let a_kp = self.connection_offdiag(k, p)?;
                    let a_pl = self.connection_offdiag(p, l)?;
                    for c in 0..3 {
                        acc += a_kp[c] * a_pl[c];
                    }
                }
                phi[(a, b)] = acc * creal(self.kappa);
            }
        }
        Ok(phi)
    }
}

/// `<Jz>` of the surface continuing `reference` at `pos`.
fn jz_following<T: Real>(model: &InteractionModel<T>, pos: &Position<T>, reference: &StateVector<T>) -> Result<T> {
    let frame = crate::adiabatic::eigensystem_at(model, pos)?;
    let col = crate::adiabatic::follow(&frame, reference);
    Ok(frame.jz_expectations(model)[frame.labels[col]])
}

/// `(B_rho, B_z)` of the surface continuing `reference`, from central
/// differences of `A^(phi) = <Jz>/rho` with step `h`:
/// `B_rho = -d_z A^(phi)`, `B_z = (1/rho) d_rho (rho A^(phi))`.
pub fn magnetic_field_curl<T: Real>(
    model: &InteractionModel<T>,
    pos: &Position<T>,
    reference: &StateVector<T>,
    h: T,
) -> Result<(T, T)> {
    if pos.rho <= h {
        return Err(Error::OnAxis);
    }
    let at = |dr: T, dz: T| jz_following(model, &Position::new(pos.rho + dr, pos.z + dz, pos.phi), reference);
    let two_h = h + h;
    let b_z = (at(h, T::zero())? - at(-h, T::zero())?) / two_h / pos.rho;
    let b_rho = -(at(T::zero(), h)? - at(T::zero(), -h)?) / two_h / pos.rho;
    Ok((b_rho, b_z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adiabatic::eigensystem_at;
    use crate::model::ModelParams;

    fn model(ratio: f64) -> InteractionModel<f64> {
        InteractionModel::new(ModelParams::new(ratio, 2.8e-6).unwrap()).unwrap()
    }

    fn gauge(ratio: f64, pos: Position<f64>) -> LocalGauge<f64> {
        let m = model(ratio);
        LocalGauge::new(&m, &eigensystem_at(&m, &pos).unwrap()).unwrap()
    }

    #[test]
    fn connection_is_hermitian() {
        let g = gauge(1.13, Position::new(1.2, 0.3, 0.4));
        for n in 0..N {
            for m in 0..N {
                let a = g.connection(n, m).unwrap();
                let b = g.connection(m, n).unwrap();
                assert!((a - b.map(|c| c.conj())).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn curvature_is_antisymmetric_and_sums_to_zero() {
        let g = gauge(3.0, Position::new(1.0, 0.2, 0.7));
        for (k, l) in [(0, 1), (1, 2), (2, 0)] {
            let mut total = 0.0;
            for n in 0..N {
                let a = g.berry_curvature_diag(n, k, l).unwrap();
                assert_eq!(a, -g.berry_curvature_diag(n, l, k).unwrap());
                total += a;
            }
            assert!(total.abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_pair_is_rejected() {
        let m = model(3.0);
        let f = eigensystem_at(&m, &Position::plane(0.0, 1.0)).unwrap();
        let g = LocalGauge::from_vectors(&m, f.position, f.energies, f.vectors).unwrap();
        // on the z axis +M and -M partners are degenerate
        let pair = (0..N - 1).find(|&k| (f.energies[k + 1] - f.energies[k]).abs() < 1e-10).unwrap();
        assert!(matches!(g.connection_offdiag(pair, pair + 1), Err(Error::Degenerate { .. })));
        assert!(matches!(g.connection_diag_phi(0), Err(Error::OnAxis)));
    }

    #[test]
    fn scalar_potential_is_gram_like() {
        let g = gauge(3.0, Position::plane(0.9, 0.0));
        let phi = g.scalar_potential(&[7, 8]).unwrap();
        assert!((phi.adjoint() - &phi).norm() < 1e-15);
        let ev = phi.symmetric_eigenvalues();
        assert!(ev.iter().all(|e| *e > -1e-12));
        let all: Vec<usize> = (0..N).collect();
        assert_eq!(g.scalar_potential(&all).unwrap().norm(), 0.0);
    }
}

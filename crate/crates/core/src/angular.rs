//! Angular-momentum algebra for the `s1/2` and `p3/2` multiplets.
//!
//! Half-integers are stored doubled so that selection rules are exact integer
//! comparisons. Clebsch-Gordan coefficients are evaluated with the Racah
//! formula in rational arithmetic: the coefficient is `sign * sqrt(q)` for an
//! exact rational `q`, and only the final square root is taken in floating
//! point.

use crate::error::{Error, Result};
use crate::scalar::{cplx, Real, C};
use nalgebra::Vector3;
use num_rational::Ratio;
use std::fmt;

/// A half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_doubled(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt(2 * n)
    }

    /// `n / 2`.
    pub const fn half(n: i32) -> Self {
        HalfInt(n)
    }

    pub const fn doubled(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl TryFrom<f64> for HalfInt {
    type Error = Error;

    fn try_from(x: f64) -> Result<Self> {
        let twice = 2.0 * x;
        if !twice.is_finite() || (twice - twice.round()).abs() > 1e-12 || twice.abs() > 1e6 {
            return Err(Error::InvalidArgument(format!("{x} is not a half-integer")));
        }
        Ok(HalfInt(twice.round() as i32))
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orbital {
    S,
    P,
}

impl Orbital {
    /// Total angular momentum of the multiplet (`s1/2` or `p3/2`).
    pub const fn j(self) -> HalfInt {
        match self {
            Orbital::S => HalfInt::half(1),
            Orbital::P => HalfInt::half(3),
        }
    }
}

/// Single-atom Zeeman sublevel `|l m_j>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomicState {
    pub orbital: Orbital,
    pub m: HalfInt,
}

impl AtomicState {
    pub fn new(orbital: Orbital, m: HalfInt) -> Result<Self> {
        let j = orbital.j().doubled();
        if m.is_integer() || m.doubled().abs() > j {
            return Err(Error::InvalidArgument(format!(
                "m = {m} is not a sublevel of j = {}",
                orbital.j()
            )));
        }
        Ok(AtomicState { orbital, m })
    }

    pub fn s(m2: i32) -> Result<Self> {
        Self::new(Orbital::S, HalfInt::from_doubled(m2))
    }

    pub fn p(m2: i32) -> Result<Self> {
        Self::new(Orbital::P, HalfInt::from_doubled(m2))
    }
}

impl fmt::Display for AtomicState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = match self.orbital {
            Orbital::S => 's',
            Orbital::P => 'p',
        };
        write!(f, "{l}{:+}/2", self.m.doubled())
    }
}

/// Spherical unit vector `eps_q` for `q in {-1, 0, 1}`:
/// `eps_0 = z`, `eps_{+-1} = -+(x +- i y)/sqrt(2)`.
pub fn spherical_unit<T: Real>(q: i32) -> Vector3<C<T>> {
    let zero = T::zero();
    let s = T::one() / T::lit(2.0).sqrt();
    match q {
        0 => Vector3::new(cplx(zero, zero), cplx(zero, zero), cplx(T::one(), zero)),
        1 => Vector3::new(cplx(-s, zero), cplx(zero, -s), cplx(zero, zero)),
        -1 => Vector3::new(cplx(s, zero), cplx(zero, -s), cplx(zero, zero)),
        _ => panic!("spherical index must be -1, 0 or 1, got {q}"),
    }
}

/// Exact Clebsch-Gordan coefficient `sign * sqrt(squared)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactCg {
    pub sign: i8,
    pub squared: Ratio<i128>,
}

impl ExactCg {
    pub fn value<T: Real>(self) -> T {
        let num = T::from_i128(*self.squared.numer()).expect("numerator fits");
        let den = T::from_i128(*self.squared.denom()).expect("denominator fits");
        let mag = (num / den).sqrt();
        match self.sign {
            s if s < 0 => -mag,
            0 => T::zero(),
            _ => mag,
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    const ZERO: ExactCg = ExactCg {
        sign: 0,
        squared: Ratio::new_raw(0, 1),
    };
}

// 33! overflows i128; couplings beyond j ~ 8 are never needed here.
const MAX_FACTORIAL: i32 = 33;

fn factorial(n: i32) -> i128 {
    debug_assert!((0..=MAX_FACTORIAL).contains(&n));
    (1..=n as i128).product()
}

fn check_pair(j: HalfInt, m: HalfInt) -> Result<()> {
    if j.doubled() < 0 {
        return Err(Error::InvalidArgument(format!("negative angular momentum {j}")));
    }
    if (j.doubled() - m.doubled()) % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "j = {j} and m = {m} differ by a non-integer"
        )));
    }
    if m.doubled().abs() > j.doubled() {
        return Err(Error::InvalidArgument(format!("|m| = |{m}| exceeds j = {j}")));
    }
    Ok(())
}

/// `<j1 m1; j2 m2 | J M>` in the Condon-Shortley convention, exact.
pub fn cg_exact(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<ExactCg> {
    check_pair(j1, m1)?;
    check_pair(j2, m2)?;
    check_pair(j, m)?;
    if (j1.doubled() + j2.doubled() + j.doubled()) % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "j1 + j2 + J = {j1} + {j2} + {j} is not an integer"
        )));
    }
    if m != m1 + m2 {
        return Ok(ExactCg::ZERO);
    }
    let (a, b, c) = (j1.doubled(), j2.doubled(), j.doubled());
    if c < (a - b).abs() || c > a + b {
        return Ok(ExactCg::ZERO);
    }
    if (a + b + c) / 2 + 1 > MAX_FACTORIAL {
        return Err(Error::InvalidArgument(format!(
            "angular momenta too large for exact evaluation ({j1}, {j2}, {j})"
        )));
    }
    // integer arguments of the Racah formula
    let (ma, mb, mc) = (m1.doubled(), m2.doubled(), m.doubled());
    let h = |x: i32| x / 2;
    let j1pj2mj = h(a + b - c);
    let j1mm1 = h(a - ma);
    let j2pm2 = h(b + mb);
    let jmj2pm1 = h(c - b + ma);
    let jmj1mm2 = h(c - a - mb);

    let prefactor = Ratio::new(
        (c as i128 + 1) * factorial(h(c + a - b)) * factorial(h(c - a + b)) * factorial(j1pj2mj),
        factorial(h(a + b + c) + 1),
    ) * Ratio::from_integer(
        factorial(h(c + mc))
            * factorial(h(c - mc))
            * factorial(h(a - ma))
            * factorial(h(a + ma))
            * factorial(h(b - mb))
            * factorial(h(b + mb)),
    );

    let k_min = 0.max(-jmj2pm1).max(-jmj1mm2);
    let k_max = j1pj2mj.min(j1mm1).min(j2pm2);
    let mut sum = Ratio::from_integer(0i128);
    for k in k_min..=k_max {
        let denom = factorial(k)
            * factorial(j1pj2mj - k)
            * factorial(j1mm1 - k)
            * factorial(j2pm2 - k)
            * factorial(jmj2pm1 + k)
            * factorial(jmj1mm2 + k);
        let term = Ratio::new(1, denom);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let sign = match sum.numer().signum() {
        0 => return Ok(ExactCg::ZERO),
        s => s as i8,
    };
    Ok(ExactCg {
        sign,
        squared: prefactor * sum * sum,
    })
}

/// `<j1 m1; j2 m2 | J M>` as a floating-point value.
pub fn cg_coefficient<T: Real>(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<T> {
    cg_exact(j1, m1, j2, m2, j, m).map(ExactCg::value)
}

/// Dipole matrix element `<p m| d |s m'>` in units of the reduced element
/// divided by `sqrt(2 j_p + 1)`.
///
/// The spherical components are combined with conjugated unit vectors,
/// `d = sum_q C^{3/2 m}_{1/2 m' 1 q} eps_q^*`, which makes the two-atom
/// Hamiltonian transform as `H(phi) = exp(-i Jz phi) H(0) exp(i Jz phi)`.
pub fn dipole_element<T: Real>(p_state: AtomicState, s_state: AtomicState) -> Result<Vector3<C<T>>> {
    if p_state.orbital != Orbital::P || s_state.orbital != Orbital::S {
        return Err(Error::InvalidArgument(format!(
            "dipole element needs (p, s) states, got ({p_state}, {s_state})"
        )));
    }
    let mut out = Vector3::from_element(cplx(T::zero(), T::zero()));
    let q2 = p_state.m.doubled() - s_state.m.doubled();
    if q2.abs() > 2 {
        return Ok(out);
    }
    let q = q2 / 2;
    let coeff: T = cg_coefficient(
        Orbital::S.j(),
        s_state.m,
        HalfInt::from_int(1),
        HalfInt::from_int(q),
        Orbital::P.j(),
        p_state.m,
    )?;
    let eps = spherical_unit::<T>(q);
    for a in 0..3 {
        out[a] = eps[a].conj() * coeff;
    }
    Ok(out)
}

/// Single-atom dipole operator element between arbitrary `s`/`p` sublevels.
pub fn dipole_between<T: Real>(bra: AtomicState, ket: AtomicState) -> Vector3<C<T>> {
    match (bra.orbital, ket.orbital) {
        (Orbital::P, Orbital::S) => dipole_element(bra, ket).expect("orbitals checked"),
        (Orbital::S, Orbital::P) => dipole_element::<T>(ket, bra)
            .expect("orbitals checked")
            .map(|c| c.conj()),
        _ => Vector3::from_element(cplx(T::zero(), T::zero())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h(n: i32) -> HalfInt {
        HalfInt::half(n)
    }

    // Independent oracle: the standard closed-form table for j2 = 1 couplings,
    // <j1 m-q; 1 q | J M> for J = j1 + 1, j1, j1 - 1.
    fn cg_j2_one_table(j1: f64, m1: f64, q: i32, big_j: f64, m: f64) -> f64 {
        if (m1 + f64::from(q) - m).abs() > 1e-12 {
            return 0.0;
        }
        let j = j1;
        let mm = m;
        if (big_j - (j + 1.0)).abs() < 1e-12 {
            match q {
                1 => ((j + mm) * (j + mm + 1.0) / ((2.0 * j + 1.0) * (2.0 * j + 2.0))).sqrt(),
                0 => ((j - mm + 1.0) * (j + mm + 1.0) / ((2.0 * j + 1.0) * (j + 1.0))).sqrt(),
                _ => ((j - mm) * (j - mm + 1.0) / ((2.0 * j + 1.0) * (2.0 * j + 2.0))).sqrt(),
            }
        } else if (big_j - j).abs() < 1e-12 {
            match q {
                1 => -((j + mm) * (j - mm + 1.0) / (2.0 * j * (j + 1.0))).sqrt(),
                0 => mm / (j * (j + 1.0)).sqrt(),
                _ => ((j - mm) * (j + mm + 1.0) / (2.0 * j * (j + 1.0))).sqrt(),
            }
        } else if (big_j - (j - 1.0)).abs() < 1e-12 {
            match q {
                1 => ((j - mm) * (j - mm + 1.0) / (2.0 * j * (2.0 * j + 1.0))).sqrt(),
                0 => -((j - mm) * (j + mm) / (j * (2.0 * j + 1.0))).sqrt(),
                _ => ((j + mm + 1.0) * (j + mm) / (2.0 * j * (2.0 * j + 1.0))).sqrt(),
            }
        } else {
            0.0
        }
    }

    #[test]
    fn stretched_state_is_one() {
        let c: f64 = cg_coefficient(h(1), h(1), h(2), h(2), h(3), h(3)).unwrap();
        assert_eq!(c, 1.0);
    }

    #[test]
    fn m_mismatch_is_exact_zero() {
        let c = cg_exact(h(1), h(1), h(2), h(2), h(3), h(1)).unwrap();
        assert!(c.is_zero());
        assert_eq!(c.value::<f64>(), 0.0);
    }

    #[test]
    fn sqrt_two_thirds() {
        let c = cg_exact(h(1), h(1), h(2), h(0), h(3), h(1)).unwrap();
        assert_eq!(c.sign, 1);
        assert_eq!(c.squared, Ratio::new(2, 3));
        assert_abs_diff_eq!(c.value::<f64>(), (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn racah_matches_closed_form_table() {
        for j1d in 1..=7 {
            let j1 = f64::from(j1d) / 2.0;
            for m1d in (-j1d..=j1d).step_by(2) {
                for q in -1..=1 {
                    for jd in [j1d - 2, j1d, j1d + 2] {
                        if jd < 0 {
                            continue;
                        }
                        for md in (-jd..=jd).step_by(2) {
                            let exact: f64 =
                                cg_coefficient(h(j1d), h(m1d), h(2), h(2 * q), h(jd), h(md)).unwrap();
                            let table = cg_j2_one_table(
                                j1,
                                f64::from(m1d) / 2.0,
                                q,
                                f64::from(jd) / 2.0,
                                f64::from(md) / 2.0,
                            );
                            assert_abs_diff_eq!(exact, table, epsilon = 1e-13);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cg_rows_are_unitary() {
        for (j1, j2) in [(1i32, 2i32), (3, 2), (1, 1), (2, 4), (3, 3)] {
            for m1 in (-j1..=j1).step_by(2) {
                for m2 in (-j2..=j2).step_by(2) {
                    let mut total = 0.0;
                    let mut jd = (j1 - j2).abs();
                    while jd <= j1 + j2 {
                        let m = m1 + m2;
                        if m.abs() <= jd {
                            let c: f64 =
                                cg_coefficient(h(j1), h(m1), h(j2), h(m2), h(jd), h(m)).unwrap();
                            total += c * c;
                        }
                        jd += 2;
                    }
                    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn invalid_quantum_numbers_are_rejected() {
        // j - m not an integer
        assert!(cg_exact(h(1), h(2), h(2), h(0), h(3), h(2)).is_err());
        // |m| > j
        assert!(cg_exact(h(1), h(3), h(2), h(0), h(3), h(3)).is_err());
        assert!(HalfInt::try_from(0.3).is_err());
        assert_eq!(HalfInt::try_from(-1.5).unwrap(), h(-3));
        assert!(AtomicState::s(3).is_err());
        assert!(AtomicState::p(2).is_err());
    }

    #[test]
    fn spherical_vectors_orthonormal_and_conjugation_symmetric() {
        for q in -1..=1 {
            for qp in -1..=1 {
                let a = spherical_unit::<f64>(q);
                let b = spherical_unit::<f64>(qp);
                let dot: C<f64> = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
                let expect = if q == qp { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot.re, expect, epsilon = 1e-15);
                assert_abs_diff_eq!(dot.im, 0.0, epsilon = 1e-15);
            }
            // eps_q^* = (-1)^q eps_{-q}
            let lhs = spherical_unit::<f64>(q).map(|c| c.conj());
            let rhs = spherical_unit::<f64>(-q) * cplx(if q % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
            assert_abs_diff_eq!((lhs - rhs).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn dipole_examples() {
        let eps_plus_conj = spherical_unit::<f64>(1).map(|c| c.conj());
        let d = dipole_element::<f64>(AtomicState::p(3).unwrap(), AtomicState::s(1).unwrap()).unwrap();
        assert_abs_diff_eq!((d - eps_plus_conj).norm(), 0.0, epsilon = 1e-15);

        let d = dipole_element::<f64>(AtomicState::p(3).unwrap(), AtomicState::s(-1).unwrap()).unwrap();
        assert_eq!(d.norm(), 0.0);

        let d = dipole_element::<f64>(AtomicState::p(1).unwrap(), AtomicState::s(1).unwrap()).unwrap();
        let expect = spherical_unit::<f64>(0) * cplx((2.0f64 / 3.0).sqrt(), 0.0);
        assert_abs_diff_eq!((d - expect).norm(), 0.0, epsilon = 1e-15);

        assert!(dipole_element::<f64>(AtomicState::s(1).unwrap(), AtomicState::p(1).unwrap()).is_err());
    }

    #[test]
    fn dipole_selection_rule() {
        for mp in [-3, -1, 1, 3] {
            for ms in [-1, 1] {
                let d = dipole_element::<f64>(AtomicState::p(mp).unwrap(), AtomicState::s(ms).unwrap())
                    .unwrap();
                let allowed = (mp - ms).abs() <= 2;
                assert_eq!(d.norm() > 0.0, allowed, "p {mp}/2 <- s {ms}/2");
            }
        }
    }

    #[test]
    fn f32_path_agrees() {
        let c32: f32 = cg_coefficient(h(1), h(-1), h(2), h(2), h(3), h(1)).unwrap();
        assert!((f64::from(c32) - (1.0f64 / 3.0).sqrt()).abs() < 1e-6);
    }
}

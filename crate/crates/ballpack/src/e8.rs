//! The exceptional classes of the 9-fold blow-up through the affine E8 root
//! lattice: the three one-parameter families that bound 8-ball packings of
//! the twisted bundle, the root-to-exceptional bijection, and the `u`/`s`
//! functions cutting out the piecewise width.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::exact::{QuadExt, Rational};
use crate::lattice::HClass;
use crate::{Error, Result};

/// Which of the three class families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyTag {
    I,
    II,
    III,
}

/// The family member with parameter `n` (any integer; `n = 0` gives the
/// degenerate members, including `(6; 0, 3, 2^7)` for family III).
pub fn e8_family(tag: FamilyTag, n: i64) -> HClass {
    let n = BigInt::from(n);
    let (a0, mut tail) = match tag {
        FamilyTag::I => {
            let head = &n * (4 * &n - 3);
            let second = 4 * &n * &n - 1;
            let rest = 4 * &n * &n;
            let mut tail = vec![head, second];
            tail.extend(std::iter::repeat_n(rest, 7));
            (&n * (12 * &n - 1), tail)
        }
        FamilyTag::II => {
            let head = 4 * &n * &n - 1;
            let rest = &n * (4 * &n + 3);
            let mut tail = vec![head];
            tail.extend(std::iter::repeat_n(rest, 8));
            (4 * &n * (3 * &n + 2), tail)
        }
        FamilyTag::III => {
            let head = &n * (4 * &n + 3);
            let base = 2 * (&n + 1) * (2 * &n + 1);
            let second = &base + 1;
            let mut tail = vec![head, second];
            tail.extend(std::iter::repeat_n(base, 7));
            ((3 * &n + 2) * (4 * &n + 3), tail)
        }
    };
    debug_assert_eq!(tail.len(), 9);
    let tail: Vec<Rational> = tail.drain(..).map(Rational::from_integer).collect();
    HClass::from_rationals(Rational::from_integer(a0), tail).expect("9 entries")
}

/// `u_1(mu, n) = (2n(4n+1) mu + 12n^2 - n) / (32n^2 - 1)`, for `n != 0`.
pub fn u1(mu: &Rational, n: i64) -> Result<Rational> {
    if n == 0 {
        return Err(Error::Domain("u1 needs n != 0".into()));
    }
    let n = BigInt::from(n);
    let num = Rational::from_integer(2 * &n * (4 * &n + 1)) * mu
        + Rational::from_integer(12 * &n * &n - &n);
    Ok(num / Rational::from_integer(32 * &n * &n - 1))
}

/// `u_2(mu, n) = ((8n^2 + 8n + 1) mu + 12n^2 + 8n) / (8n(4n + 3))`, for `n != 0`.
pub fn u2(mu: &Rational, n: i64) -> Result<Rational> {
    if n == 0 {
        return Err(Error::Domain("u2 needs n != 0".into()));
    }
    let n = BigInt::from(n);
    let num = Rational::from_integer(8 * &n * &n + 8 * &n + 1) * mu
        + Rational::from_integer(12 * &n * &n + 8 * &n);
    Ok(num / Rational::from_integer(8 * &n * (4 * &n + 3)))
}

/// `u_3(mu, n) = (2(4n^2 + 7n + 3) mu + 12n^2 + 17n + 6) / (32n^2 + 48n + 17)`.
pub fn u3(mu: &Rational, n: i64) -> Rational {
    let n = BigInt::from(n);
    let num = Rational::from_integer(2 * (4 * &n * &n + 7 * &n + 3)) * mu
        + Rational::from_integer(12 * &n * &n + 17 * &n + 6);
    num / Rational::from_integer(32 * &n * &n + 48 * &n + 17)
}

/// All three `u` values at once (so `n != 0`).
pub fn u_functions(mu: &Rational, n: i64) -> Result<(Rational, Rational, Rational)> {
    Ok((u1(mu, n)?, u2(mu, n)?, u3(mu, n)))
}

/// A breakpoint value, possibly the infinite marker `s_3(-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SValue {
    Finite(Rational),
    Infinite,
}

impl SValue {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            SValue::Finite(r) => Some(r),
            SValue::Infinite => None,
        }
    }
}

/// `s_1(n) = 4n(3n-2) / (24n^2 + 8n + 1)`.
pub fn s1(n: i64) -> Rational {
    let n = BigInt::from(n);
    Rational::new(4 * &n * (3 * &n - 2), 24 * &n * &n + 8 * &n + 1)
}

/// `s_2(n) = 4n(3n+2) / (24n^2 + 40n + 17)`.
pub fn s2(n: i64) -> Rational {
    let n = BigInt::from(n);
    Rational::new(4 * &n * (3 * &n + 2), 24 * &n * &n + 40 * &n + 17)
}

/// `s_3(n) = (8n^2 + 8n + 1) / (16(n+1)^2)`, with `s_3(-1)` the infinite marker.
pub fn s3(n: i64) -> SValue {
    if n == -1 {
        return SValue::Infinite;
    }
    let n = BigInt::from(n);
    let np1 = &n + 1;
    SValue::Finite(Rational::new(8 * &n * &n + 8 * &n + 1, 16 * &np1 * &np1))
}

/// All three breakpoints at parameter `n`.
pub fn s_functions(n: i64) -> (Rational, Rational, SValue) {
    (s1(n), s2(n), s3(n))
}

fn alpha_coords_to_vector(coords: &[BigInt; 8]) -> (BigInt, Vec<BigInt>) {
    // alpha_0 = L - E1 - E2 - E3, alpha_i = E_i - E_{i+1} for 1 <= i <= 7;
    // a class (a0; a) stands for a0*L - sum(a_j E_j), so alpha_0 contributes
    // +1 to tail slots 0..3 and alpha_i contributes (-1, +1) to slots (i-1, i).
    let a0 = coords[0].clone();
    let mut tail = vec![BigInt::zero(); 9];
    for t in tail.iter_mut().take(3) {
        *t += &coords[0];
    }
    for (i, c) in coords.iter().enumerate().skip(1) {
        tail[i - 1] -= c;
        tail[i] += c;
    }
    (a0, tail)
}

/// The bijection `T(alpha) = E9 - alpha - (alpha.alpha/2) K` from the E8 root
/// lattice onto the exceptional classes of the 9-fold blow-up.
pub fn e8_bijection(coords: &[BigInt; 8]) -> HClass {
    let (alpha0, alpha_tail) = alpha_coords_to_vector(coords);
    // alpha.alpha = alpha0^2 - sum(tail^2), an even (negative) integer.
    let self_int = &alpha0 * &alpha0 - alpha_tail.iter().map(|t| t * t).sum::<BigInt>();
    let half = self_int / 2;
    let a0 = -&alpha0 - 3 * &half;
    let mut tail: Vec<BigInt> = alpha_tail.iter().map(|t| -t - &half).collect();
    tail[8] -= 1; // the E9 term
    HClass::from_rationals(
        Rational::from_integer(a0),
        tail.into_iter().map(Rational::from_integer).collect(),
    )
    .expect("9 entries")
}

/// Inverse bijection `T^{-1}(E) = E9 - E + (1 + E.E9) K`, returned in root
/// coordinates. Errors when `E` is not an integer class on the 9-fold blow-up.
pub fn e8_bijection_inverse(e: &HClass) -> Result<[BigInt; 8]> {
    if e.n() != 9 {
        return Err(Error::DimensionMismatch(e.n(), 9));
    }
    let as_int = |q: &QuadExt| -> Result<BigInt> {
        let r = q
            .as_rational()
            .ok_or_else(|| Error::Domain(format!("non-rational coefficient {q}")))?;
        if !r.is_integer() {
            return Err(Error::Domain(format!("non-integer coefficient {r}")));
        }
        Ok(r.to_integer())
    };
    let e0 = as_int(e.a0())?;
    let et: Vec<BigInt> = e.tail().iter().map(as_int).collect::<Result<_>>()?;
    // pairing(E, E9) equals the last subtracted coefficient of E
    let k_mult = BigInt::one() + &et[8];
    let b0 = -&e0 + 3 * &k_mult;
    let mut bt: Vec<BigInt> = et.iter().map(|t| -t + &k_mult).collect();
    bt[8] -= 1; // the E9 term
    // Solve B = c0*alpha_0 + ... + c7*alpha_7 slot by slot.
    let mut coords: [BigInt; 8] = Default::default();
    coords[0] = b0;
    coords[1] = &coords[0] - &bt[0];
    coords[2] = &coords[0] + &coords[1] - &bt[1];
    coords[3] = &coords[0] + &coords[2] - &bt[2];
    for i in 4..8 {
        coords[i] = &coords[i - 1] - &bt[i - 1];
    }
    if coords[7] != bt[7] || !bt[8].is_zero() {
        return Err(Error::Domain("class is not in the image of the root lattice".into()));
    }
    Ok(coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int};
    use crate::lattice::class_i64;

    #[test]
    fn family_members() {
        assert_eq!(e8_family(FamilyTag::I, 1), class_i64(11, &[1, 3, 4, 4, 4, 4, 4, 4, 4]));
        assert_eq!(e8_family(FamilyTag::II, 1), class_i64(20, &[3, 7, 7, 7, 7, 7, 7, 7, 7]));
        assert_eq!(e8_family(FamilyTag::III, 0), class_i64(6, &[0, 3, 2, 2, 2, 2, 2, 2, 2]));
        assert_eq!(e8_family(FamilyTag::I, 0), class_i64(0, &[0, -1, 0, 0, 0, 0, 0, 0, 0]));
        assert_eq!(e8_family(FamilyTag::II, 0), class_i64(0, &[-1, 0, 0, 0, 0, 0, 0, 0, 0]));
    }

    #[test]
    fn families_are_exceptional() {
        for tag in [FamilyTag::I, FamilyTag::II, FamilyTag::III] {
            for n in -6..=6i64 {
                let e = e8_family(tag, n);
                assert_eq!(e.self_intersection(), QuadExt::from_int(-1), "{tag:?} n={n}");
                assert_eq!(e.k_pairing(), QuadExt::from_int(1), "{tag:?} n={n}");
            }
        }
    }

    #[test]
    fn u_values() {
        let mu = rat(4, 33);
        let a = u1(&mu, 1).unwrap();
        let b = u2(&mu, 1).unwrap();
        assert_eq!(a, rat(13, 33));
        assert_eq!(a, b);
        assert_eq!(u2(&rat_int(4), -1).unwrap(), rat_int(1));
        assert_eq!(u3(&rat_int(1), 0), rat(12, 17));
        assert!(u1(&mu, 0).is_err());
    }

    #[test]
    fn s_values() {
        assert_eq!(s3(0), SValue::Finite(rat(1, 16)));
        assert_eq!(s3(1), SValue::Finite(rat(17, 64)));
        assert_eq!(s3(-1), SValue::Infinite);
        assert_eq!(s1(1), rat(4, 33));
        assert_eq!(s2(-1), rat_int(4));
    }

    #[test]
    fn breakpoints_interlock() {
        // ascending toward 1/2: s1(n) < s2(n) < s3(n) < s1(n+1)
        let half = rat(1, 2);
        for n in 1..=30i64 {
            let s3n = s3(n).finite().unwrap().clone();
            assert!(s1(n) < s2(n) && s2(n) < s3n && s3n < s1(n + 1));
            assert!(s1(n + 1) < half);
        }
        // negative side, decreasing toward 1/2 as n -> -infinity:
        // 1/2 < ... < s3(n-1) < s1(n) < s2(n) < s3(n) < ... < s2(-1) < s3(-1)
        for n in -30..=-2i64 {
            let s3n = s3(n).finite().unwrap().clone();
            let s3prev = s3(n - 1).finite().unwrap().clone();
            assert!(s3prev < s1(n) && s1(n) < s2(n) && s2(n) < s3n);
            assert!(s3prev > half);
        }
        assert!(s3(-2).finite().unwrap() < &s1(-1) && s1(-1) < s2(-1));
        assert_eq!(s3(-1), SValue::Infinite);
    }

    #[test]
    fn bijection_round_trip() {
        let samples: Vec<[i64; 8]> = vec![
            [0, 0, 0, 0, 0, 0, 0, 0],
            [1, 0, 0, 0, 0, 0, 0, 0],
            [4, 0, 2, 5, 4, 3, 2, 1],
            [-2, 3, 1, 0, -1, 2, 0, 5],
        ];
        for s in samples {
            let coords = s.map(BigInt::from);
            let e = e8_bijection(&coords);
            assert_eq!(e.self_intersection(), QuadExt::from_int(-1));
            assert_eq!(e.k_pairing(), QuadExt::from_int(1));
            let back = e8_bijection_inverse(&e).unwrap();
            assert_eq!(back, coords);
        }
    }

    #[test]
    fn family_one_root_coordinates() {
        // the first family at n = 1 corresponds to root coords (4, 0, 2, 5, 4, 3, 2, 1)
        let e = e8_family(FamilyTag::I, 1);
        let coords = e8_bijection_inverse(&e).unwrap();
        assert_eq!(coords, [4, 0, 2, 5, 4, 3, 2, 1].map(BigInt::from));
        assert_eq!(e8_bijection(&coords), e);
    }
}

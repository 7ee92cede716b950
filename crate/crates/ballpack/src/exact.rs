//! Exact arithmetic over the rationals and real quadratic extensions.
//!
//! Every quantity in this crate is either a [`Rational`] or a [`QuadExt`]
//! value `a + b*sqrt(d)`. Signs and orderings are decided by exact case
//! analysis and squaring; no floating point enters any decision path.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// Arbitrary-precision rational, always in lowest terms with positive denominator.
pub type Rational = num_rational::BigRational;

/// Shorthand for an integer-valued [`Rational`].
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shorthand for the rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parse a rational from `"p/q"` or `"n"` form.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    Rational::from_str(t).map_err(|e| Error::Parse(format!("bad rational {t:?}: {e}")))
}

/// Splits `n >= 0` as `outer^2 * inner` with `inner` square-reduced.
///
/// Full trial division is only attempted below a size cutoff; larger radicands
/// keep whatever square factors survive, which is harmless because comparisons
/// never rely on canonical radicands.
fn extract_square(n: &BigInt) -> (BigInt, BigInt) {
    if n.is_zero() {
        return (BigInt::one(), BigInt::zero());
    }
    let root = n.sqrt();
    if (&root * &root) == *n {
        return (root, BigInt::one());
    }
    let mut outer = BigInt::one();
    let mut m = n.clone();
    if let Some(small) = m.to_u64_digits().1.first().copied().filter(|_| m.bits() <= 63) {
        let mut m64 = small;
        let mut out64: u64 = 1;
        let mut f: u64 = 2;
        while f * f <= m64 {
            let sq = f * f;
            while m64 % sq == 0 {
                m64 /= sq;
                out64 *= f;
            }
            f += 1;
        }
        return (BigInt::from(out64), BigInt::from(m64));
    }
    // Large radicand: peel small square factors only.
    for f in 2u64..1000 {
        let sq = BigInt::from(f * f);
        while (&m % &sq).is_zero() {
            m /= &sq;
            outer *= f;
        }
    }
    (outer, m)
}

/// An element `rat + coef*sqrt(rad)` of a real quadratic extension of the
/// rationals, with `rad` a nonnegative square-reduced integer.
///
/// Values over a common radicand form a field. Mixing two distinct
/// irrational radicands in `+`, `-`, `*`, `/` is rejected; comparison across
/// radicands is always decided exactly (at most two squarings).
#[derive(Clone, Debug)]
pub struct QuadExt {
    rat: Rational,
    coef: Rational,
    rad: BigInt,
}

impl QuadExt {
    fn normalized(rat: Rational, coef: Rational, rad: BigInt) -> Self {
        debug_assert!(!rad.is_negative());
        if coef.is_zero() || rad.is_zero() {
            return QuadExt { rat, coef: Rational::zero(), rad: BigInt::zero() };
        }
        let (outer, inner) = extract_square(&rad);
        let coef = coef * Rational::from_integer(outer);
        if inner.is_one() {
            QuadExt { rat: rat + coef, coef: Rational::zero(), rad: BigInt::zero() }
        } else {
            QuadExt { rat, coef, rad: inner }
        }
    }

    /// Builds `rat + coef*sqrt(rad)` for a rational radicand `rad >= 0`.
    pub fn new(rat: Rational, coef: Rational, rad: Rational) -> Result<Self> {
        if rad.is_negative() {
            return Err(Error::Domain(format!("negative radicand {rad}")));
        }
        // sqrt(n/d) = sqrt(n*d)/d
        let int_rad = rad.numer() * rad.denom();
        let coef = coef / Rational::from_integer(rad.denom().clone());
        Ok(Self::normalized(rat, coef, int_rad))
    }

    /// The exact square root of a nonnegative rational.
    pub fn sqrt_rational(r: &Rational) -> Result<Self> {
        Self::new(Rational::zero(), Rational::one(), r.clone())
    }

    pub fn from_rational(r: Rational) -> Self {
        QuadExt { rat: r, coef: Rational::zero(), rad: BigInt::zero() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(rat_int(n))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn is_zero(&self) -> bool {
        self.sign() == 0
    }

    pub fn is_rational(&self) -> bool {
        self.coef.is_zero()
    }

    /// Returns the value as a plain rational when the surd part vanishes.
    pub fn as_rational(&self) -> Option<&Rational> {
        if self.coef.is_zero() {
            Some(&self.rat)
        } else {
            None
        }
    }

    pub fn rational_part(&self) -> &Rational {
        &self.rat
    }

    pub fn surd_coefficient(&self) -> &Rational {
        &self.coef
    }

    pub fn radicand(&self) -> &BigInt {
        &self.rad
    }

    /// Exact sign in `{-1, 0, +1}`.
    pub fn sign(&self) -> i32 {
        if self.coef.is_zero() {
            return sign_of(&self.rat);
        }
        if self.rat.is_zero() {
            return sign_of(&self.coef);
        }
        let sr = sign_of(&self.rat);
        let sc = sign_of(&self.coef);
        if sr == sc {
            return sr;
        }
        // Opposite signs: the larger of rat^2 and coef^2*rad wins.
        let lhs = &self.rat * &self.rat;
        let rhs = &self.coef * &self.coef * Rational::from_integer(self.rad.clone());
        match lhs.cmp(&rhs) {
            Ordering::Greater => sr,
            Ordering::Less => sc,
            Ordering::Equal => 0,
        }
    }

    fn common_radicand(&self, other: &Self) -> Result<BigInt> {
        if self.rad.is_zero() || self.rad == other.rad {
            Ok(other.rad.clone().max(self.rad.clone()))
        } else if other.rad.is_zero() {
            Ok(self.rad.clone())
        } else {
            Err(Error::RadicandMix(self.rad.clone(), other.rad.clone()))
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        let rad = self.common_radicand(other)?;
        Ok(Self::normalized(&self.rat + &other.rat, &self.coef + &other.coef, rad))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        let rad = self.common_radicand(other)?;
        Ok(Self::normalized(&self.rat - &other.rat, &self.coef - &other.coef, rad))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        let rad = self.common_radicand(other)?;
        let d = Rational::from_integer(rad.clone());
        let rat = &self.rat * &other.rat + &self.coef * &other.coef * &d;
        let coef = &self.rat * &other.coef + &self.coef * &other.rat;
        Ok(Self::normalized(rat, coef, rad))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        if other.sign() == 0 {
            return Err(Error::Domain("division by zero".into()));
        }
        let rad = self.common_radicand(other)?;
        let d = Rational::from_integer(rad.clone());
        // 1/(e + f*sqrt(d)) = (e - f*sqrt(d)) / (e^2 - f^2 d)
        let denom = &other.rat * &other.rat - &other.coef * &other.coef * &d;
        let conj = Self::normalized(&other.rat / &denom, -(&other.coef / &denom), rad);
        self.checked_mul(&conj)
    }

    pub fn square(&self) -> Self {
        self.checked_mul(self).expect("same radicand")
    }

    /// Rational lower/upper bounds with `2^-bits` worth of slack on the surd.
    pub fn approx_bounds(&self, bits: u32) -> (Rational, Rational) {
        if self.coef.is_zero() {
            return (self.rat.clone(), self.rat.clone());
        }
        let scale = BigInt::one() << (2 * bits);
        let lo_root = (&self.rad * &scale).sqrt();
        let hi_root = &lo_root + 1;
        let denom = BigInt::one() << bits;
        let lo_s = Rational::new(lo_root, denom.clone());
        let hi_s = Rational::new(hi_root, denom);
        let (a, b) = if self.coef.is_positive() {
            (&self.rat + &self.coef * lo_s, &self.rat + &self.coef * hi_s)
        } else {
            (&self.rat + &self.coef * hi_s, &self.rat + &self.coef * lo_s)
        };
        (a, b)
    }

    /// Smallest integer `>= self`, decided exactly.
    pub fn ceil_int(&self) -> BigInt {
        if let Some(r) = self.as_rational() {
            return r.ceil().to_integer();
        }
        let (lo, _) = self.approx_bounds(64);
        let mut m = lo.floor().to_integer();
        while QuadExt::from_rational(Rational::from_integer(m.clone())).cmp(self) == Ordering::Less
        {
            m += 1;
        }
        while QuadExt::from_rational(Rational::from_integer(&m - 1)).cmp(self) != Ordering::Less {
            m -= 1;
        }
        m
    }

    /// Decimal rendering with `digits` fractional digits (truncated toward zero).
    pub fn to_decimal(&self, digits: u32) -> String {
        let pow = BigInt::from(10u32).pow(digits);
        let scaled = {
            let mut bits = 64 + 4 * digits;
            loop {
                let (lo, hi) = self.approx_bounds(bits);
                let lo_i = (lo * Rational::from_integer(pow.clone())).floor().to_integer();
                let hi_i = (hi * Rational::from_integer(pow.clone())).floor().to_integer();
                if lo_i == hi_i {
                    break lo_i;
                }
                bits += 64;
                if bits > 4096 {
                    break lo_i;
                }
            }
        };
        let neg = scaled.is_negative();
        let abs = scaled.abs();
        let (int, frac) = abs.div_rem(&pow);
        let mut s = String::new();
        if neg {
            s.push('-');
        }
        if digits == 0 {
            s.push_str(&int.to_string());
        } else {
            s.push_str(&format!("{int}.{frac:0>width$}", width = digits as usize));
        }
        s
    }
}

fn sign_of(r: &Rational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl PartialEq for QuadExt {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QuadExt {}

impl PartialOrd for QuadExt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadExt {
    /// Total order agreeing with the real numbers.
    ///
    /// Same-field differences reduce to one exact sign test. When the two
    /// operands carry distinct irrational radicands `d` and `f`, the sign of
    /// `r + b*sqrt(d) - g*sqrt(f)` is resolved by squaring the surd part
    /// (landing in the single field over `d*f`) and comparing against `r^2`.
    fn cmp(&self, other: &Self) -> Ordering {
        if self.rad.is_zero() || other.rad.is_zero() || self.rad == other.rad {
            let diff = self.checked_sub(other).expect("compatible radicands");
            return sign_to_ordering(diff.sign());
        }
        let r = &self.rat - &other.rat;
        let b = &self.coef;
        let g = -other.coef.clone();
        // u = b*sqrt(d) + g*sqrt(f)
        let bsq_d = b * b * Rational::from_integer(self.rad.clone());
        let gsq_f = &g * &g * Rational::from_integer(other.rad.clone());
        let su = match (sign_of(b), sign_of(&g)) {
            (0, sg) => sg,
            (sb, 0) => sb,
            (sb, sg) if sb == sg => sb,
            (sb, sg) => match bsq_d.cmp(&gsq_f) {
                Ordering::Greater => sb,
                Ordering::Less => sg,
                Ordering::Equal => 0,
            },
        };
        let sr = sign_of(&r);
        if su == 0 {
            return sign_to_ordering(sr);
        }
        if sr == 0 || sr == su {
            return sign_to_ordering(su);
        }
        // Opposite signs: compare r^2 against u^2 = b^2 d + g^2 f + 2bg*sqrt(df).
        let u_sq = QuadExt::normalized(
            bsq_d + gsq_f,
            Rational::from_integer(BigInt::from(2)) * b * &g,
            &self.rad * &other.rad,
        );
        let r_sq = QuadExt::from_rational(&r * &r);
        let diff = r_sq.checked_sub(&u_sq).expect("single field");
        match diff.sign() {
            1 => sign_to_ordering(sr),
            -1 => sign_to_ordering(su),
            _ => Ordering::Equal,
        }
    }
}

fn sign_to_ordering(s: i32) -> Ordering {
    match s {
        1 => Ordering::Greater,
        -1 => Ordering::Less,
        _ => Ordering::Equal,
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for QuadExt {
            type Output = QuadExt;
            fn $method(self, rhs: QuadExt) -> QuadExt {
                self.$checked(&rhs).expect("radicand mix in arithmetic")
            }
        }
        impl<'a> $trait<&'a QuadExt> for &'a QuadExt {
            type Output = QuadExt;
            fn $method(self, rhs: &'a QuadExt) -> QuadExt {
                self.$checked(rhs).expect("radicand mix in arithmetic")
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);
forward_binop!(Div, div, checked_div);

impl Neg for QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        QuadExt { rat: -self.rat, coef: -self.coef, rad: self.rad }
    }
}

impl From<Rational> for QuadExt {
    fn from(r: Rational) -> Self {
        Self::from_rational(r)
    }
}

impl fmt::Display for QuadExt {
    /// Renders as `"p/q"`/`"n"` when rational, else `"(P+Q*sqrt(D))/R"`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coef.is_zero() {
            return write!(f, "{}", self.rat);
        }
        let r = self.rat.denom().lcm(self.coef.denom());
        let p = (&self.rat * Rational::from_integer(r.clone())).to_integer();
        let q = (&self.coef * Rational::from_integer(r.clone())).to_integer();
        let sign = if q.is_negative() { '-' } else { '+' };
        write!(f, "({p}{sign}{}*sqrt({}))/{r}", q.abs(), self.rad)
    }
}

impl FromStr for QuadExt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if !t.starts_with('(') {
            return Ok(QuadExt::from_rational(parse_rational(t)?));
        }
        let err = || Error::Parse(format!("bad quadratic value {t:?}"));
        let close = t.rfind(")/").ok_or_else(err)?;
        let inner = &t[1..close];
        let denom: BigInt = t[close + 2..].trim().parse().map_err(|_| err())?;
        if !denom.is_positive() {
            return Err(err());
        }
        let sqrt_pos = inner.find("*sqrt(").ok_or_else(err)?;
        // split P and Q at the sign of Q, scanning back from "*sqrt("
        let head = &inner[..sqrt_pos];
        let split = head
            .char_indices()
            .skip(1)
            .filter(|(_, c)| *c == '+' || *c == '-')
            .map(|(i, _)| i)
            .last()
            .ok_or_else(err)?;
        let p: BigInt = head[..split].trim().parse().map_err(|_| err())?;
        let q: BigInt = head[split..].trim().parse().map_err(|_| err())?;
        let rest = &inner[sqrt_pos + "*sqrt(".len()..];
        let d_end = rest.find(')').ok_or_else(err)?;
        let d: BigInt = rest[..d_end].trim().parse().map_err(|_| err())?;
        if d.is_negative() {
            return Err(err());
        }
        QuadExt::new(
            Rational::new(p, denom.clone()),
            Rational::new(q, denom),
            Rational::from_integer(d),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qx(rat: Rational, coef: Rational, rad: i64) -> QuadExt {
        QuadExt::new(rat, coef, rat_int(rad)).unwrap()
    }

    #[test]
    fn sign_of_sqrt2() {
        assert_eq!(qx(rat_int(0), rat_int(1), 2).sign(), 1);
    }

    #[test]
    fn perfect_square_radicand_normalizes() {
        // 3 - 2*sqrt(9/4) = 3 - 2*(3/2) = 0
        let x = QuadExt::new(rat_int(3), rat_int(-2), rat(9, 4)).unwrap();
        assert!(x.is_rational());
        assert_eq!(x.sign(), 0);
    }

    #[test]
    fn sign_by_squaring() {
        // 5 - 3*sqrt(3) < 0 because 25 < 27
        assert_eq!(qx(rat_int(5), rat_int(-3), 3).sign(), -1);
    }

    #[test]
    fn compare_sqrt_half_to_rational() {
        let lhs = QuadExt::sqrt_rational(&rat(1, 2)).unwrap();
        let rhs = QuadExt::from_rational(rat(12, 17));
        assert_eq!(lhs.cmp(&rhs), Ordering::Greater);
    }

    #[test]
    fn compare_equal_rationals() {
        let a = QuadExt::from_rational(rat(1, 2));
        let b = QuadExt::from_rational(rat(1, 2));
        assert_eq!(a.cmp(&b), Ordering::Equal);
    }

    #[test]
    fn compare_five_minus_sqrt21_to_half() {
        // 5 - sqrt(21) vs 1/2: (9/2)^2 = 81/4 < 21, so sqrt(21) > 9/2
        let lhs = qx(rat_int(5), rat_int(-1), 21);
        let rhs = QuadExt::from_rational(rat(1, 2));
        assert_eq!(lhs.cmp(&rhs), Ordering::Less);
    }

    #[test]
    fn cross_radicand_compare() {
        // sqrt(2) + 1 vs sqrt(8) = 2*sqrt(2): 1 < sqrt(2) so LHS < RHS
        let lhs = qx(rat_int(1), rat_int(1), 2);
        let rhs = qx(rat_int(0), rat_int(1), 8);
        assert_eq!(lhs.cmp(&rhs), Ordering::Less);
        // sqrt(3) vs sqrt(2) with rational offsets
        let a = qx(rat_int(1), rat_int(1), 3); // 2.732
        let b = qx(rat_int(2), rat_int(-1), 2); // 0.586
        assert_eq!(a.cmp(&b), Ordering::Greater);
        assert_eq!(b.cmp(&a), Ordering::Less);
    }

    #[test]
    fn sign_antisymmetry() {
        let xs = [
            qx(rat(3, 7), rat(-1, 5), 11),
            qx(rat_int(4), rat_int(-1), 17),
            qx(rat(-2, 3), rat(5, 4), 6),
        ];
        for x in xs {
            assert_eq!(x.sign() * (-x.clone()).sign(), -1);
        }
    }

    #[test]
    fn arithmetic_in_one_field() {
        let a = qx(rat_int(1), rat_int(2), 5);
        let b = qx(rat_int(-3), rat(1, 2), 5);
        let prod = a.clone() * b.clone();
        // (1+2s)(-3+s/2) = -3 + s/2 - 6s + s^2 = -3 + 5 - 11s/2 = 2 - (11/2)s
        assert_eq!(prod, qx(rat_int(2), rat(-11, 2), 5));
        let back = prod / b;
        assert_eq!(back, a);
    }

    #[test]
    fn radicand_mix_rejected_in_arithmetic() {
        let a = qx(rat_int(0), rat_int(1), 2);
        let b = qx(rat_int(0), rat_int(1), 3);
        assert!(matches!(a.checked_add(&b), Err(Error::RadicandMix(_, _))));
    }

    #[test]
    fn square_extraction() {
        // sqrt(8) -> 2*sqrt(2)
        let x = qx(rat_int(0), rat_int(1), 8);
        assert_eq!(x.radicand(), &BigInt::from(2));
        assert_eq!(x.surd_coefficient(), &rat_int(2));
    }

    #[test]
    fn ceil_of_surds() {
        let x = qx(rat_int(3), rat_int(1), 6); // 3 + 2.449...
        assert_eq!(x.ceil_int(), BigInt::from(6));
        let y = QuadExt::from_rational(rat_int(5));
        assert_eq!(y.ceil_int(), BigInt::from(5));
        let z = qx(rat_int(0), rat_int(1), 4); // = 2 exactly
        assert_eq!(z.ceil_int(), BigInt::from(2));
    }

    #[test]
    fn display_round_trips() {
        let vals = [
            qx(rat_int(5), rat_int(-1), 21),
            qx(rat(1, 3), rat(2, 5), 7),
            QuadExt::from_rational(rat(-4, 9)),
            QuadExt::sqrt_rational(&rat(1, 2)).unwrap(),
        ];
        for v in vals {
            let s = v.to_string();
            let back: QuadExt = s.parse().unwrap();
            assert_eq!(back, v, "round trip of {s}");
        }
        assert_eq!(qx(rat_int(5), rat_int(-1), 21).to_string(), "(5-1*sqrt(21))/1");
    }

    #[test]
    fn decimal_rendering() {
        let x = QuadExt::sqrt_rational(&rat_int(2)).unwrap();
        assert_eq!(x.to_decimal(5), "1.41421");
        assert_eq!(QuadExt::from_rational(rat(-1, 4)).to_decimal(3), "-0.250");
    }
}

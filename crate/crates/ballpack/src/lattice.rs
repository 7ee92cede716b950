//! The blow-up homology lattice: classes `(a0; a1, ..., an)` standing for
//! `a0*L - sum(ai*Ei)` with the intersection form of type `(1, n)`, together
//! with Cremona moves, coefficient permutations, general reflections, and
//! words of such moves.

use std::fmt;
use std::str::FromStr;

use crate::exact::{QuadExt, Rational};
use crate::{Error, Result};

/// A class `(a0; a1, ..., an)` in the blow-up lattice, `n >= 3`.
///
/// Tail entries are the positive multipliers of the subtracted exceptional
/// classes, so all of the usual coefficient formulas transcribe verbatim.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HClass {
    a0: QuadExt,
    tail: Vec<QuadExt>,
}

impl HClass {
    pub fn new(a0: QuadExt, tail: Vec<QuadExt>) -> Result<Self> {
        if tail.len() < 3 {
            return Err(Error::TooFewEntries(tail.len()));
        }
        Ok(HClass { a0, tail })
    }

    pub fn from_rationals(a0: Rational, tail: Vec<Rational>) -> Result<Self> {
        Self::new(QuadExt::from_rational(a0), tail.into_iter().map(QuadExt::from_rational).collect())
    }

    pub fn from_ints(a0: i64, tail: &[i64]) -> Self {
        Self::new(
            QuadExt::from_int(a0),
            tail.iter().map(|&v| QuadExt::from_int(v)).collect(),
        )
        .expect("at least 3 tail entries")
    }

    /// The canonical class `(3; 1, ..., 1)` on the `n`-fold blow-up.
    pub fn canonical(n: usize) -> Result<Self> {
        Self::new(QuadExt::from_int(3), vec![QuadExt::from_int(1); n])
    }

    /// The exceptional class `Ei` itself: tail entry `-1` at `idx`, zero elsewhere.
    pub fn unit_exceptional(n: usize, idx: usize) -> Result<Self> {
        if idx >= n {
            return Err(Error::Domain(format!("index {idx} out of range for n={n}")));
        }
        let mut tail = vec![QuadExt::from_int(0); n];
        tail[idx] = QuadExt::from_int(-1);
        Self::new(QuadExt::from_int(0), tail)
    }

    pub fn n(&self) -> usize {
        self.tail.len()
    }

    pub fn a0(&self) -> &QuadExt {
        &self.a0
    }

    pub fn tail(&self) -> &[QuadExt] {
        &self.tail
    }

    pub fn is_rational(&self) -> bool {
        self.a0.is_rational() && self.tail.iter().all(|c| c.is_rational())
    }

    /// The intersection pairing `a0*b0 - sum(ai*bi)`.
    pub fn pairing(&self, other: &Self) -> Result<QuadExt> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch(self.n(), other.n()));
        }
        let mut acc = self.a0.checked_mul(&other.a0)?;
        for (a, b) in self.tail.iter().zip(&other.tail) {
            acc = acc.checked_sub(&a.checked_mul(b)?)?;
        }
        Ok(acc)
    }

    pub fn self_intersection(&self) -> QuadExt {
        self.pairing(self).expect("same dimension")
    }

    /// Pairing with the canonical class, `3*a0 - sum(ai)`.
    pub fn k_pairing(&self) -> QuadExt {
        let k = Self::canonical(self.n()).expect("n >= 3");
        self.pairing(&k).expect("same dimension")
    }

    /// `a1 + a2 + a3 - a0`, computed on the class as given.
    pub fn defect(&self) -> QuadExt {
        let s = &(&self.tail[0] + &self.tail[1]) + &self.tail[2];
        &s - &self.a0
    }

    /// The Cremona move: subtracts the defect from `a0, a1, a2, a3`.
    pub fn cremona(&self) -> Self {
        let d = self.defect();
        let mut tail = self.tail.clone();
        for entry in tail.iter_mut().take(3) {
            *entry = &*entry - &d;
        }
        HClass { a0: &self.a0 - &d, tail }
    }

    /// Stable nonincreasing sort of the tail; returns the permutation applied,
    /// with `sorted_tail[i] = old_tail[sigma[i]]`.
    pub fn reorder(&self) -> (Self, Vec<usize>) {
        let mut sigma: Vec<usize> = (0..self.n()).collect();
        sigma.sort_by(|&i, &j| self.tail[j].cmp(&self.tail[i]));
        let tail = sigma.iter().map(|&i| self.tail[i].clone()).collect();
        (HClass { a0: self.a0.clone(), tail }, sigma)
    }

    /// Reflection about a root: `B - 2*(root.B / root.root)*root`.
    pub fn reflect(&self, root: &Self) -> Result<Self> {
        let rr = root.self_intersection();
        if rr.sign() == 0 {
            return Err(Error::NullRoot);
        }
        let factor = self
            .pairing(root)?
            .checked_mul(&QuadExt::from_int(2))?
            .checked_div(&rr)?;
        let a0 = self.a0.checked_sub(&factor.checked_mul(&root.a0)?)?;
        let tail = self
            .tail
            .iter()
            .zip(&root.tail)
            .map(|(b, r)| b.checked_sub(&factor.checked_mul(r)?))
            .collect::<Result<_>>()?;
        Ok(HClass { a0, tail })
    }

    /// True iff `a1 >= a2 >= ... >= an >= 0` and `a0 >= a1 + a2 + a3`.
    pub fn is_reduced(&self) -> bool {
        self.tail.windows(2).all(|w| w[0] >= w[1])
            && self.tail.last().expect("nonempty").sign() >= 0
            && self.defect().sign() <= 0
    }

    pub fn min_tail_sign(&self) -> i32 {
        self.tail.iter().map(|c| c.sign()).min().unwrap_or(0)
    }

    /// Indices of exactly-zero tail entries.
    pub fn zero_tail_indices(&self) -> Vec<usize> {
        self.tail
            .iter()
            .enumerate()
            .filter(|(_, c)| c.sign() == 0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Tail entries sorted nonincreasing, for order-insensitive comparisons.
    pub fn sorted_tail(&self) -> Vec<QuadExt> {
        let mut t = self.tail.clone();
        t.sort_by(|a, b| b.cmp(a));
        t
    }
}

impl fmt::Display for HClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}; ", self.a0)?;
        for (i, c) in self.tail.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for HClass {
    type Err = Error;

    /// Parses the class literal `"a0; a1, a2, ..."`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = s
            .split_once(';')
            .ok_or_else(|| Error::Parse(format!("missing ';' in class literal {s:?}")))?;
        let a0: QuadExt = head.trim().parse()?;
        let tail = rest
            .split(',')
            .map(|tok| tok.trim().parse())
            .collect::<Result<Vec<QuadExt>>>()?;
        HClass::new(a0, tail)
    }
}

/// One step of a reduction word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    /// Reflection about `L - E1 - E2 - E3`.
    Cremona,
    /// Tail permutation, `new_tail[i] = old_tail[sigma[i]]`.
    Permute(Vec<usize>),
}

impl Move {
    pub fn apply(&self, class: &HClass) -> Result<HClass> {
        match self {
            Move::Cremona => Ok(class.cremona()),
            Move::Permute(sigma) => {
                if sigma.len() != class.n() {
                    return Err(Error::DimensionMismatch(sigma.len(), class.n()));
                }
                let tail = sigma.iter().map(|&i| class.tail[i].clone()).collect();
                Ok(HClass { a0: class.a0.clone(), tail })
            }
        }
    }

    pub fn inverse(&self) -> Move {
        match self {
            Move::Cremona => Move::Cremona,
            Move::Permute(sigma) => {
                let mut inv = vec![0; sigma.len()];
                for (i, &j) in sigma.iter().enumerate() {
                    inv[j] = i;
                }
                Move::Permute(inv)
            }
        }
    }
}

/// A word of moves, composed left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MoveWord(pub Vec<Move>);

impl MoveWord {
    pub fn new() -> Self {
        MoveWord(Vec::new())
    }

    pub fn push(&mut self, m: Move) {
        self.0.push(m);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn moves(&self) -> &[Move] {
        &self.0
    }

    /// Applies the word: first move first.
    pub fn apply(&self, class: &HClass) -> Result<HClass> {
        let mut c = class.clone();
        for m in &self.0 {
            c = m.apply(&c)?;
        }
        Ok(c)
    }

    /// Applies the adjoint (= inverse) word: each move inverted, order
    /// reversed, so that `pairing(apply(w, A), B) = pairing(A, adjoint_apply(w, B))`.
    pub fn adjoint_apply(&self, class: &HClass) -> Result<HClass> {
        let mut c = class.clone();
        for m in self.0.iter().rev() {
            c = m.inverse().apply(&c)?;
        }
        Ok(c)
    }
}

/// Convenience: the class with all-integer coefficients given as `(a0, tail)`.
pub fn class_i64(a0: i64, tail: &[i64]) -> HClass {
    HClass::from_ints(a0, tail)
}

/// Builds a rational class from integer pairs `(numer, denom)`.
pub fn class_rat(a0: (i64, i64), tail: &[(i64, i64)]) -> HClass {
    HClass::from_rationals(
        Rational::new(a0.0.into(), a0.1.into()),
        tail.iter().map(|&(n, d)| Rational::new(n.into(), d.into())).collect(),
    )
    .expect("at least 3 tail entries")
}

impl HClass {
    /// The root `E_i - E_{i+1}` (0-based tail indices `i`, `i+1`).
    pub fn swap_root(n: usize, i: usize) -> Result<Self> {
        if i + 1 >= n {
            return Err(Error::Domain(format!("swap root {i} out of range for n={n}")));
        }
        let mut tail = vec![QuadExt::from_int(0); n];
        tail[i] = QuadExt::from_int(-1);
        tail[i + 1] = QuadExt::from_int(1);
        Self::new(QuadExt::from_int(0), tail)
    }

    /// The root `L - E1 - E2 - E3` whose reflection is the Cremona move.
    pub fn cremona_root(n: usize) -> Result<Self> {
        let mut tail = vec![QuadExt::from_int(0); n];
        for entry in tail.iter_mut().take(3) {
            *entry = QuadExt::from_int(1);
        }
        Self::new(QuadExt::from_int(1), tail)
    }
}

pub fn is_identity_permutation(sigma: &[usize]) -> bool {
    sigma.iter().enumerate().all(|(i, &j)| i == j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn pairing_examples() {
        let k9 = class_i64(3, &[1, 1, 1, 1, 1, 1, 1, 1, 1]);
        assert_eq!(k9.self_intersection(), QuadExt::from_int(0));

        let e = class_i64(1, &[1, 1, 0, 0]);
        assert_eq!(e.self_intersection(), QuadExt::from_int(-1));

        // (5/2; 3/2, (1/2)^8) on X9
        let v = class_rat((5, 2), &[(3, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2)]);
        assert_eq!(v.self_intersection(), QuadExt::from_int(2));
    }

    #[test]
    fn pairing_dimension_mismatch() {
        let a = class_i64(1, &[1, 0, 0]);
        let b = class_i64(1, &[1, 0, 0, 0]);
        assert!(matches!(a.pairing(&b), Err(Error::DimensionMismatch(3, 4))));
    }

    #[test]
    fn defect_examples() {
        assert_eq!(class_i64(3, &[1, 1, 1, 0]).defect(), QuadExt::from_int(0));
        // (mu+1; mu, c, ...) at mu=1, c=3/5: defect = 2c - 1 = 1/5
        let v = class_rat((2, 1), &[(1, 1), (3, 5), (3, 5), (3, 5)]);
        assert_eq!(v.defect(), QuadExt::from_rational(rat(1, 5)));
        let w = class_rat((5, 2), &[(3, 2), (1, 2), (1, 2), (1, 2)]);
        assert_eq!(w.defect(), QuadExt::from_int(0));
    }

    #[test]
    fn cremona_examples() {
        let fixed = class_i64(3, &[1, 1, 1]);
        assert_eq!(fixed.cremona(), fixed);

        let v = class_rat((12, 5), &[(7, 5), (3, 5), (3, 5), (1, 5)]);
        let moved = v.cremona();
        assert_eq!(moved, class_rat((11, 5), &[(6, 5), (2, 5), (2, 5), (1, 5)]));
        assert_eq!(moved.cremona(), v);
    }

    #[test]
    fn cremona_preserves_pairing_and_k() {
        let v = class_rat((7, 3), &[(5, 3), (1, 2), (2, 7), (1, 9), (0, 1)]);
        let w = v.cremona();
        assert_eq!(v.self_intersection(), w.self_intersection());
        assert_eq!(v.k_pairing(), w.k_pairing());
    }

    #[test]
    fn reorder_examples() {
        let (sorted, sigma) = class_i64(3, &[0, 2, 1]).reorder();
        assert_eq!(sorted, class_i64(3, &[2, 1, 0]));
        assert_eq!(sigma, vec![1, 2, 0]);

        // already sorted block of equal entries stays put (stable)
        let v = class_rat(
            (5, 2),
            &[(3, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2)],
        );
        let (sorted, sigma) = v.reorder();
        assert_eq!(sorted, v);
        assert!(is_identity_permutation(&sigma));
    }

    #[test]
    fn reflect_swap_root_transposes() {
        let v = class_i64(4, &[3, 1, 2, 0]);
        let root = HClass::swap_root(4, 0).unwrap();
        let w = v.reflect(&root).unwrap();
        assert_eq!(w, class_i64(4, &[1, 3, 2, 0]));
        assert_eq!(w.reflect(&root).unwrap(), v);
    }

    #[test]
    fn reflect_cremona_root_is_cremona() {
        let v = class_rat((9, 2), &[(5, 2), (3, 2), (1, 2), (1, 3)]);
        let root = HClass::cremona_root(4).unwrap();
        assert_eq!(v.reflect(&root).unwrap(), v.cremona());
    }

    #[test]
    fn reflect_rejects_null_root() {
        let v = class_i64(1, &[1, 0, 0]);
        let null = class_i64(1, &[1, 0, 0]); // self-intersection 0
        assert!(matches!(v.reflect(&null), Err(Error::NullRoot)));
    }

    #[test]
    fn word_apply_and_adjoint() {
        let w = MoveWord(vec![
            Move::Cremona,
            Move::Permute(vec![2, 0, 1, 3]),
            Move::Cremona,
        ]);
        let a = class_i64(5, &[4, 2, 1, 1]);
        let b = class_i64(2, &[1, 1, 1, 0]);
        let lhs = w.apply(&a).unwrap().pairing(&b).unwrap();
        let rhs = a.pairing(&w.adjoint_apply(&b).unwrap()).unwrap();
        assert_eq!(lhs, rhs);

        // apply then adjoint is the identity
        let roundtrip = w.adjoint_apply(&w.apply(&a).unwrap()).unwrap();
        assert_eq!(roundtrip, a);

        let empty = MoveWord::new();
        assert_eq!(empty.apply(&a).unwrap(), a);
    }

    #[test]
    fn is_reduced_examples() {
        assert!(class_i64(3, &[1, 1, 1, 0]).is_reduced());
        assert!(!class_i64(2, &[1, 1, 1]).is_reduced());
        let v = class_rat(
            (5, 2),
            &[(3, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2)],
        );
        assert!(v.is_reduced());
        // unsorted tail is not reduced even with small defect
        assert!(!class_i64(9, &[1, 0, 1]).is_reduced());
    }

    #[test]
    fn class_literal_round_trip() {
        let v: HClass = "5/2; 3/2, 1/2, 1/2, 1/2".parse().unwrap();
        assert_eq!(v, class_rat((5, 2), &[(3, 2), (1, 2), (1, 2), (1, 2)]));
        let s = v.to_string();
        let back: HClass = s.parse().unwrap();
        assert_eq!(back, v);

        // QuadExt coefficients parse too
        let w: HClass = "(0+1*sqrt(2))/1; 1, 0, 0".parse().unwrap();
        assert_eq!(*w.a0(), QuadExt::sqrt_rational(&rat(2, 1)).unwrap());
    }
}

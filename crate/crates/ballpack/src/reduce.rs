//! Cremona reduction as a decision procedure for symplectic-cone membership,
//! with full move tracing, obstruction-class extraction, and a bisection
//! width oracle built on top of the verdicts.

use num_traits::{One, Signed, Zero};

use crate::exact::{QuadExt, Rational};
use crate::lattice::{is_identity_permutation, HClass, Move, MoveWord};
use crate::{Error, Result};

/// Default Cremona-move budget; the reduction provably terminates, so hitting
/// this signals a bug or an absurd input rather than genuine divergence.
pub const DEFAULT_MAX_ITER: u64 = 1_000_000;

/// Which ruled bundle a ball configuration lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BundleKind {
    /// `S^2 x S^2` with section area `mu >= 1` and fiber area 1.
    Trivial,
    /// The nontrivial `S^2`-bundle over `S^2`, section area `mu > 0`, fiber area 1.
    Twisted,
}

impl BundleKind {
    pub fn name(self) -> &'static str {
        match self {
            BundleKind::Trivial => "trivial",
            BundleKind::Twisted => "twisted",
        }
    }
}

/// A normalized ruled bundle together with its area parameter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleSpec {
    pub kind: BundleKind,
    pub mu: Rational,
}

impl BundleSpec {
    pub fn new(kind: BundleKind, mu: Rational) -> Result<Self> {
        match kind {
            BundleKind::Trivial if mu < Rational::one() => Err(Error::Domain(format!(
                "trivial bundle needs mu >= 1, got {mu}"
            ))),
            BundleKind::Twisted if !mu.is_positive() => Err(Error::Domain(format!(
                "twisted bundle needs mu > 0, got {mu}"
            ))),
            _ => Ok(BundleSpec { kind, mu }),
        }
    }

    pub fn trivial(mu: Rational) -> Result<Self> {
        Self::new(BundleKind::Trivial, mu)
    }

    pub fn twisted(mu: Rational) -> Result<Self> {
        Self::new(BundleKind::Twisted, mu)
    }

    /// Symplectic volume: `mu` for the trivial bundle, `mu + 1/2` for the twisted one.
    pub fn volume(&self) -> Rational {
        match self.kind {
            BundleKind::Trivial => self.mu.clone(),
            BundleKind::Twisted => &self.mu + Rational::new(1.into(), 2.into()),
        }
    }

    /// Square of the volume bound for `k` equal balls, `2*vol/k`.
    pub fn cvol_squared(&self, k: u32) -> Rational {
        Rational::new(2.into(), k.into()) * self.volume()
    }

    /// The volume bound itself, as an exact quadratic value.
    pub fn cvol(&self, k: u32) -> QuadExt {
        QuadExt::sqrt_rational(&self.cvol_squared(k)).expect("nonnegative")
    }
}

/// Outcome classification of a reduction run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Final reduced class has all tail entries strictly positive.
    Interior,
    /// Final reduced class has minimal tail entry zero.
    Boundary,
    /// Some iterate acquired a negative entry, or the input failed the
    /// forward-cone precheck.
    Exterior,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Interior => "interior",
            Verdict::Boundary => "boundary",
            Verdict::Exterior => "exterior",
        }
    }
}

/// Why a run was declared Exterior.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExteriorReason {
    /// `v.v < 0` or `a0 < 0` before any move.
    NotInForwardCone,
    /// A sorted iterate acquired a negative tail entry.
    NegativeCoefficient,
}

/// Full record of one reduction run.
#[derive(Clone, Debug)]
pub struct ReductionOutcome {
    pub verdict: Verdict,
    pub final_class: HClass,
    pub word: MoveWord,
    /// Number of Cremona moves performed.
    pub iterations: u64,
    pub exterior_reason: Option<ExteriorReason>,
}

/// The class encoding `k` equal balls of capacity `c` in the bundle.
///
/// Trivial: `(mu+1-c; mu-c, c^(k-1), 1-c)`. Twisted: `(mu+1; mu, c^k)`.
/// Tails shorter than 3 are padded with zero blow-up coefficients, which
/// changes no pairing and no feasibility verdict.
pub fn ball_vector(spec: &BundleSpec, k: u32, c: &Rational) -> Result<HClass> {
    ball_vector_qx(spec, k, &QuadExt::from_rational(c.clone()))
}

/// Same as [`ball_vector`] for an exact quadratic capacity.
pub fn ball_vector_qx(spec: &BundleSpec, k: u32, c: &QuadExt) -> Result<HClass> {
    if k == 0 {
        return Err(Error::Domain("need k >= 1 balls".into()));
    }
    if c.sign() <= 0 {
        return Err(Error::Domain(format!("capacity must be positive, got {c}")));
    }
    let mu = QuadExt::from_rational(spec.mu.clone());
    let one = QuadExt::from_int(1);
    let mut tail = Vec::with_capacity((k as usize + 1).max(3));
    let a0 = match spec.kind {
        BundleKind::Trivial => {
            tail.push(&mu - c);
            for _ in 0..k - 1 {
                tail.push(c.clone());
            }
            tail.push(&one - c);
            &(&mu + &one) - c
        }
        BundleKind::Twisted => {
            tail.push(mu.clone());
            for _ in 0..k {
                tail.push(c.clone());
            }
            &mu + &one
        }
    };
    while tail.len() < 3 {
        tail.push(QuadExt::zero());
    }
    HClass::new(a0, tail)
}

/// Runs the reduction algorithm, recording every move.
///
/// Precheck: `v.v >= 0` and `a0 >= 0`, else Exterior with zero moves. Then
/// loop: sort the tail nonincreasing (stable); a negative minimum means
/// Exterior; a nonpositive defect means the class is reduced and the verdict
/// is read off the minimal entry; otherwise apply a Cremona move and repeat.
pub fn reduce(v: &HClass, max_iter: u64) -> Result<ReductionOutcome> {
    if v.self_intersection().sign() < 0 || v.a0().sign() < 0 {
        return Ok(ReductionOutcome {
            verdict: Verdict::Exterior,
            final_class: v.clone(),
            word: MoveWord::new(),
            iterations: 0,
            exterior_reason: Some(ExteriorReason::NotInForwardCone),
        });
    }
    let mut current = v.clone();
    let mut word = MoveWord::new();
    let mut iterations = 0u64;
    loop {
        let (sorted, sigma) = current.reorder();
        if !is_identity_permutation(&sigma) {
            word.push(Move::Permute(sigma));
        }
        current = sorted;
        let min_sign = current.tail().last().expect("nonempty tail").sign();
        if min_sign < 0 {
            return Ok(ReductionOutcome {
                verdict: Verdict::Exterior,
                final_class: current,
                word,
                iterations,
                exterior_reason: Some(ExteriorReason::NegativeCoefficient),
            });
        }
        if current.defect().sign() <= 0 {
            let verdict = if min_sign > 0 { Verdict::Interior } else { Verdict::Boundary };
            debug_assert!(current.is_reduced());
            return Ok(ReductionOutcome {
                verdict,
                final_class: current,
                word,
                iterations,
                exterior_reason: None,
            });
        }
        if iterations >= max_iter {
            return Err(Error::IterationBudget(iterations));
        }
        current = current.cremona();
        word.push(Move::Cremona);
        iterations += 1;
    }
}

/// Pulls an obstructing exceptional class out of a Boundary outcome.
///
/// Returns the adjoint image of the unit exceptional class at `zero_index`,
/// which pairs to zero with the original input and satisfies `E.E = -1`,
/// `K.E = 1`.
pub fn obstruction_from_outcome(o: &ReductionOutcome, zero_index: usize) -> Result<HClass> {
    if o.verdict != Verdict::Boundary {
        return Err(Error::Domain(format!(
            "obstruction extraction needs a boundary outcome, got {}",
            o.verdict.name()
        )));
    }
    let n = o.final_class.n();
    if zero_index >= n || o.final_class.tail()[zero_index].sign() != 0 {
        return Err(Error::Domain(format!(
            "tail entry {zero_index} of the final class is not zero"
        )));
    }
    let e = HClass::unit_exceptional(n, zero_index)?;
    let pulled = o.word.adjoint_apply(&e)?;
    debug_assert_eq!(pulled.self_intersection(), QuadExt::from_int(-1));
    debug_assert_eq!(pulled.k_pairing(), QuadExt::from_int(1));
    Ok(pulled)
}

/// Verdict-only reduction on rational coordinates; same steps as [`reduce`],
/// minus tracing and minus the quadratic wrappers. This is the hot path of
/// the bisection oracle.
pub fn rational_verdict(a0: &Rational, tail: &[Rational], max_iter: u64) -> Result<Verdict> {
    let self_int = a0 * a0 - tail.iter().map(|t| t * t).sum::<Rational>();
    if self_int.is_negative() || a0.is_negative() {
        return Ok(Verdict::Exterior);
    }
    let mut a0 = a0.clone();
    let mut tail = tail.to_vec();
    let mut iterations = 0u64;
    loop {
        tail.sort_by(|x, y| y.cmp(x));
        let last = tail.last().expect("nonempty");
        if last.is_negative() {
            return Ok(Verdict::Exterior);
        }
        let defect = &tail[0] + &tail[1] + &tail[2] - &a0;
        if !defect.is_positive() {
            return Ok(if tail.last().expect("nonempty").is_positive() {
                Verdict::Interior
            } else {
                Verdict::Boundary
            });
        }
        if iterations >= max_iter {
            return Err(Error::IterationBudget(iterations));
        }
        a0 -= &defect;
        for entry in tail.iter_mut().take(3) {
            *entry -= &defect;
        }
        iterations += 1;
    }
}

fn ball_verdict(spec: &BundleSpec, k: u32, c: &Rational) -> Result<Verdict> {
    let mu = &spec.mu;
    let one = Rational::one();
    let mut tail = Vec::with_capacity((k as usize + 1).max(3));
    let a0 = match spec.kind {
        BundleKind::Trivial => {
            tail.push(mu - c);
            for _ in 0..k - 1 {
                tail.push(c.clone());
            }
            tail.push(&one - c);
            mu + &one - c
        }
        BundleKind::Twisted => {
            tail.push(mu.clone());
            for _ in 0..k {
                tail.push(c.clone());
            }
            mu + &one
        }
    };
    while tail.len() < 3 {
        tail.push(Rational::zero());
    }
    rational_verdict(&a0, &tail, DEFAULT_MAX_ITER)
}

/// True iff `k` balls of capacity `c` fit (possibly on the cone boundary).
pub fn is_feasible(spec: &BundleSpec, k: u32, c: &Rational) -> Result<bool> {
    Ok(ball_verdict(spec, k, c)? != Verdict::Exterior)
}

/// Brackets the `k`-ball width of the bundle to within `1/denom` by bisection.
///
/// Returns `(lo, hi)` with `hi - lo <= 1/denom`, `lo` feasible and `hi`
/// infeasible; the feasible capacities form the interval `(0, w_k]`, so the
/// width lies in `[lo, hi)`.
pub fn width_by_bisection(spec: &BundleSpec, k: u32, denom: u64) -> Result<(Rational, Rational)> {
    if k == 0 {
        return Err(Error::Domain("need k >= 1 balls".into()));
    }
    if denom < 2 {
        return Err(Error::Domain("precision denominator must be >= 2".into()));
    }
    let half = Rational::new(1.into(), 2.into());
    let mut lo = match spec.kind {
        BundleKind::Trivial => half,
        BundleKind::Twisted => {
            if spec.mu >= half {
                half
            } else {
                (&spec.mu + Rational::one()) / Rational::from_integer(3.into())
            }
        }
    };
    let mut hi = Rational::from_integer(2.into());
    // Both endpoints hold by construction; fix up defensively if not.
    for _ in 0..128 {
        if is_feasible(spec, k, &lo)? {
            break;
        }
        lo /= Rational::from_integer(2.into());
    }
    for _ in 0..128 {
        if !is_feasible(spec, k, &hi)? {
            break;
        }
        hi *= Rational::from_integer(2.into());
    }
    if !is_feasible(spec, k, &lo)? || is_feasible(spec, k, &hi)? {
        return Err(Error::Domain("bisection failed to bracket the width".into()));
    }
    let tol = Rational::new(1.into(), denom.into());
    while &hi - &lo > tol {
        let mid = (&lo + &hi) / Rational::from_integer(2.into());
        if is_feasible(spec, k, &mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int};
    use crate::lattice::{class_i64, class_rat};

    fn trivial(mu: Rational) -> BundleSpec {
        BundleSpec::trivial(mu).unwrap()
    }

    fn twisted(mu: Rational) -> BundleSpec {
        BundleSpec::twisted(mu).unwrap()
    }

    #[test]
    fn ball_vector_shapes() {
        let v = ball_vector(&trivial(rat_int(2)), 8, &rat(1, 2)).unwrap();
        assert_eq!(
            v,
            class_rat(
                (5, 2),
                &[(3, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2)]
            )
        );
        let w = ball_vector(&twisted(rat_int(1)), 8, &rat(1, 3)).unwrap();
        assert_eq!(
            w,
            class_rat(
                (2, 1),
                &[(1, 1), (1, 3), (1, 3), (1, 3), (1, 3), (1, 3), (1, 3), (1, 3), (1, 3)]
            )
        );
        // k = 1 pads with zero coefficients up to three tail slots
        let u = ball_vector(&trivial(rat_int(1)), 1, &rat_int(1)).unwrap();
        assert_eq!(u, class_i64(1, &[0, 0, 0]));
    }

    #[test]
    fn ball_vector_rejects_bad_parameters() {
        assert!(BundleSpec::trivial(rat(1, 2)).is_err());
        assert!(BundleSpec::twisted(rat_int(0)).is_err());
        assert!(ball_vector(&trivial(rat_int(1)), 0, &rat(1, 2)).is_err());
        assert!(ball_vector(&trivial(rat_int(1)), 3, &rat_int(0)).is_err());
    }

    #[test]
    fn reduce_boundary_with_zero_entry() {
        let o = reduce(&class_i64(3, &[1, 1, 1, 0]), DEFAULT_MAX_ITER).unwrap();
        assert_eq!(o.verdict, Verdict::Boundary);
        assert_eq!(o.iterations, 0);
    }

    #[test]
    fn reduce_interior_zero_defect() {
        let v = ball_vector(&trivial(rat_int(2)), 8, &rat(1, 2)).unwrap();
        let o = reduce(&v, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(o.verdict, Verdict::Interior);
        assert_eq!(o.iterations, 0);
    }

    #[test]
    fn reduce_at_the_width_is_boundary() {
        let v = ball_vector(&trivial(rat_int(2)), 8, &rat(12, 17)).unwrap();
        let o = reduce(&v, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(o.verdict, Verdict::Boundary);
        assert_eq!(o.word.apply(&v).unwrap(), o.final_class);
    }

    #[test]
    fn reduce_above_the_width_is_exterior() {
        // 70/99 lies strictly between the width 12/17 and the volume bound
        // sqrt(1/2), so the run dies on a negative coefficient, not upfront
        let v = ball_vector(&trivial(rat_int(2)), 8, &rat(70, 99)).unwrap();
        let o = reduce(&v, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(o.verdict, Verdict::Exterior);
        assert_eq!(o.exterior_reason, Some(ExteriorReason::NegativeCoefficient));
        // past the volume bound the precheck already rejects
        let v = ball_vector(&trivial(rat_int(2)), 8, &rat(5, 7)).unwrap();
        let o = reduce(&v, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(o.exterior_reason, Some(ExteriorReason::NotInForwardCone));
        // 7/10 sits just below 12/17 (119 < 120), so it is still feasible
        let v = ball_vector(&trivial(rat_int(2)), 8, &rat(7, 10)).unwrap();
        assert_eq!(reduce(&v, DEFAULT_MAX_ITER).unwrap().verdict, Verdict::Interior);
    }

    #[test]
    fn reduce_precheck_exterior() {
        // v.v = 1 - 3 < 0
        let o = reduce(&class_i64(1, &[1, 1, 1]), DEFAULT_MAX_ITER).unwrap();
        assert_eq!(o.verdict, Verdict::Exterior);
        assert_eq!(o.exterior_reason, Some(ExteriorReason::NotInForwardCone));
        assert_eq!(o.iterations, 0);
        assert!(o.word.is_empty());
    }

    #[test]
    fn trace_preserves_invariants() {
        let v = ball_vector(&trivial(rat(9, 4)), 10, &rat(43, 64)).unwrap();
        let o = reduce(&v, DEFAULT_MAX_ITER).unwrap();
        let mut c = v.clone();
        for m in o.word.moves() {
            c = m.apply(&c).unwrap();
            assert_eq!(c.self_intersection(), v.self_intersection());
            assert_eq!(c.k_pairing(), v.k_pairing());
        }
        assert_eq!(c, o.final_class);
        // the stable sort pins the trace: identical runs, identical words
        let again = reduce(&v, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(again.word, o.word);
    }

    #[test]
    fn obstruction_at_twelve_seventeenths() {
        let spec = trivial(rat_int(2));
        let v = ball_vector(&spec, 8, &rat(12, 17)).unwrap();
        let o = reduce(&v, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(o.verdict, Verdict::Boundary);
        let zeros = o.final_class.zero_tail_indices();
        assert!(!zeros.is_empty());
        let expected = class_i64(7, &[4, 3, 2, 2, 2, 2, 2, 2, 1]);
        let mut found = false;
        for &z in &zeros {
            let e = obstruction_from_outcome(&o, z).unwrap();
            assert_eq!(e.self_intersection(), QuadExt::from_int(-1));
            assert_eq!(e.k_pairing(), QuadExt::from_int(1));
            assert_eq!(v.pairing(&e).unwrap(), QuadExt::zero());
            if e == expected {
                found = true;
            }
        }
        assert!(found, "expected the (7; 4, 3, 2^6, 1) obstruction");
    }

    /// Extracts obstructions at every zero index, asserting all are valid and
    /// at least one matches the expected class up to tail permutation.
    fn assert_obstruction_type(spec: &BundleSpec, k: u32, c: Rational, expected: HClass) {
        let v = ball_vector(spec, k, &c).unwrap();
        let o = reduce(&v, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(o.verdict, Verdict::Boundary);
        let mut found = false;
        for z in o.final_class.zero_tail_indices() {
            let e = obstruction_from_outcome(&o, z).unwrap();
            assert_eq!(e.self_intersection(), QuadExt::from_int(-1));
            assert_eq!(e.k_pairing(), QuadExt::from_int(1));
            assert_eq!(v.pairing(&e).unwrap(), QuadExt::zero());
            if e.a0() == expected.a0() && e.sorted_tail() == expected.sorted_tail() {
                found = true;
            }
        }
        assert!(found, "no zero index produced the expected type {expected}");
    }

    #[test]
    fn obstruction_types_up_to_permutation() {
        assert_obstruction_type(
            &trivial(rat_int(5)),
            9,
            rat_int(1),
            class_i64(1, &[1, 1, 0, 0, 0, 0, 0, 0, 0, 0]),
        );
        // (4; 3, 1^8, 0) pairs with (mu+1; mu, c^9) to 7 - 8c, vanishing at 7/8
        assert_obstruction_type(
            &twisted(rat_int(3)),
            9,
            rat(7, 8),
            class_i64(4, &[3, 1, 1, 1, 1, 1, 1, 1, 1, 0]),
        );
    }

    #[test]
    fn iteration_budget_is_reported() {
        // reaching the reduced form here takes several Cremona moves
        let v = ball_vector(&trivial(rat_int(5)), 9, &rat_int(1)).unwrap();
        assert!(matches!(reduce(&v, 1), Err(Error::IterationBudget(1))));
        assert!(reduce(&v, 10).is_ok());
    }

    #[test]
    fn rational_verdict_matches_reduce() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(3..9);
            let a0 = rat(rng.gen_range(0..40), rng.gen_range(1..8));
            let tail: Vec<Rational> = (0..n)
                .map(|_| rat(rng.gen_range(-6..20), rng.gen_range(1..8)))
                .collect();
            let v = HClass::from_rationals(a0.clone(), tail.clone()).unwrap();
            let slow = reduce(&v, DEFAULT_MAX_ITER).unwrap().verdict;
            let fast = rational_verdict(&a0, &tail, DEFAULT_MAX_ITER).unwrap();
            assert_eq!(slow, fast);
        }
    }

    #[test]
    fn bisection_brackets_known_widths() {
        let denom = 1u64 << 40;
        let (lo, hi) = width_by_bisection(&trivial(rat_int(2)), 9, denom).unwrap();
        assert!(lo <= rat(2, 3) && rat(2, 3) <= hi);
        let (lo, hi) = width_by_bisection(&trivial(rat_int(2)), 8, denom).unwrap();
        assert!(lo <= rat(12, 17) && rat(12, 17) <= hi);
        let (lo, hi) = width_by_bisection(&twisted(rat(1, 2)), 8, denom).unwrap();
        assert!(lo <= rat(1, 2) && rat(1, 2) <= hi);
        assert!(&hi - &lo <= rat(1, 1) / Rational::from_integer(denom.into()));
    }

    #[test]
    fn feasibility_is_monotone_on_a_grid() {
        let spec = trivial(rat(7, 4));
        for k in [8u32, 9] {
            let mut seen_infeasible = false;
            for i in 1..=32 {
                let c = rat(i, 32);
                let feasible = is_feasible(&spec, k, &c).unwrap();
                if seen_infeasible {
                    assert!(!feasible, "feasible set must be an interval (k={k}, c={c})");
                }
                if !feasible {
                    seen_infeasible = true;
                }
            }
            assert!(seen_infeasible);
        }
    }
}

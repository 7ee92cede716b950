//! Closed-form generalized Gromov widths, packing numbers, stability numbers,
//! full-packing detection, and obstructing exceptional classes for both ruled
//! bundles and every ball count `k >= 1`, as piecewise functions of `mu` with
//! exact breakpoints.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::e8::{self, FamilyTag, SValue};
use crate::exact::{QuadExt, Rational};
use crate::lattice::HClass;
use crate::reduce::{ball_vector_qx, BundleKind, BundleSpec};
use crate::seq::{interval_index, lambda_of, PieceIndex, Sequences};
use crate::{Error, Result};

/// Formula attached to one piece of a width profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PieceFormula {
    Constant(Rational),
    /// `w(mu) = slope * mu + intercept`.
    Linear { slope: Rational, intercept: Rational },
    /// The volume bound `sqrt(2*vol(mu)/k)`.
    VolumeBound,
}

impl PieceFormula {
    fn linear(slope: Rational, intercept: Rational) -> Self {
        PieceFormula::Linear { slope, intercept }
    }

    /// Evaluates the formula at a rational `mu` (exact).
    pub fn eval(&self, bundle: BundleKind, k: u32, mu: &Rational) -> QuadExt {
        match self {
            PieceFormula::Constant(c) => QuadExt::from_rational(c.clone()),
            PieceFormula::Linear { slope, intercept } => {
                QuadExt::from_rational(slope * mu + intercept)
            }
            PieceFormula::VolumeBound => {
                QuadExt::sqrt_rational(&cvol_squared_at(bundle, k, mu)).expect("nonnegative")
            }
        }
    }
}

/// `c_vol^2 = 2*vol(mu)/k` as a rational function of `mu`.
pub fn cvol_squared_at(bundle: BundleKind, k: u32, mu: &Rational) -> Rational {
    let vol = match bundle {
        BundleKind::Trivial => mu.clone(),
        BundleKind::Twisted => mu + Rational::new(1.into(), 2.into()),
    };
    Rational::new(2.into(), k.into()) * vol
}

/// Same evaluation with a possibly irrational `mu`, returned squared so the
/// value stays inside one quadratic field.
pub fn cvol_squared_at_qx(bundle: BundleKind, k: u32, mu: &QuadExt) -> QuadExt {
    let vol = match bundle {
        BundleKind::Trivial => mu.clone(),
        BundleKind::Twisted => mu + &QuadExt::from_rational(Rational::new(1.into(), 2.into())),
    };
    QuadExt::from_rational(Rational::new(2.into(), k.into())) * vol
}

/// One maximal interval of `mu` on which a single formula computes the width.
#[derive(Clone, Debug)]
pub struct WidthPiece {
    pub lo: QuadExt,
    /// `None` means unbounded above.
    pub hi: Option<QuadExt>,
    pub lo_closed: bool,
    pub hi_closed: bool,
    pub formula: PieceFormula,
}

/// A materialized width profile.
///
/// The even trivial bundle and the twisted 8-ball width have infinitely many
/// linear pieces accumulating at an interior point of the domain; those
/// families are materialized to `depth` members and `truncated` is set. Point
/// queries ([`width_at`]) never truncate: they locate the exact piece lazily.
#[derive(Clone, Debug)]
pub struct WidthProfile {
    pub bundle: BundleKind,
    pub k: u32,
    pub pieces: Vec<WidthPiece>,
    pub truncated: bool,
}

/// Parity restriction for stability queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
    All,
}

impl Parity {
    pub fn name(self) -> &'static str {
        match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
            Parity::All => "all",
        }
    }
}

/// Which closed-form piece is active at a given `mu`, with enough data to
/// name the obstructing classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ActivePiece {
    /// Volume bound: no obstructing class.
    Volume,
    /// `w = 1`, cut out by `(1; 1, 1, 0, ...)`.
    ConstantOne,
    /// Trivial odd: `w = (mu + p)/(2p + 1)`.
    TrivOddLinear { p: u32 },
    /// Trivial even: `w = w_n(mu)` on the n-th interval.
    TrivEvenN { p: u32, n: u64 },
    /// Twisted odd: `w = p(p + mu - 1)/(2p^2 - p - 1)`.
    TwistSteep { p: u32 },
    /// Twisted: `w = (p + mu)/(2p)`.
    TwistHalf { p: u32 },
    /// Twisted 8 balls: one of the three root-lattice families.
    Twist8 { tag: FamilyTag, n: i64 },
    /// `k <= 7`: finitely many exceptional classes decide everything.
    SmallK,
}

fn check_domain(spec: &BundleSpec) -> Result<()> {
    // BundleSpec construction already enforces the domain; re-validate so a
    // hand-built struct cannot sneak past.
    BundleSpec::new(spec.kind, spec.mu.clone()).map(|_| ())
}

/// Locates the active piece and evaluates the width there.
pub fn classify(spec: &BundleSpec, k: u32) -> Result<(ActivePiece, QuadExt)> {
    check_domain(spec)?;
    if k == 0 {
        return Err(Error::Domain("need k >= 1 balls".into()));
    }
    let mu = &spec.mu;
    if k <= 7 {
        let w = small_k_width(spec.kind, k, mu)?;
        return Ok((ActivePiece::SmallK, QuadExt::from_rational(w)));
    }
    let p = k / 2;
    let cvol = || spec.cvol(k);
    match (spec.kind, k % 2 == 0) {
        (BundleKind::Trivial, false) => {
            // pieces: volume | (mu+p)/(2p+1) | 1, split at p+1-sqrt(2p+1) and p+1
            let b = QuadExt::new(
                Rational::from_integer(BigInt::from(p + 1)),
                -Rational::one(),
                Rational::from_integer(BigInt::from(2 * p + 1)),
            )?;
            let mu_qx = QuadExt::from_rational(mu.clone());
            if mu_qx < b {
                Ok((ActivePiece::Volume, cvol()))
            } else if *mu < Rational::from_integer(BigInt::from(p + 1)) {
                let w = (mu + Rational::from_integer(BigInt::from(p)))
                    / Rational::from_integer(BigInt::from(2 * p + 1));
                Ok((ActivePiece::TrivOddLinear { p }, QuadExt::from_rational(w)))
            } else {
                Ok((ActivePiece::ConstantOne, QuadExt::from_int(1)))
            }
        }
        (BundleKind::Trivial, true) => match interval_index(p, mu)? {
            PieceIndex::Infinity => Ok((ActivePiece::Volume, cvol())),
            PieceIndex::Zero => Ok((ActivePiece::ConstantOne, QuadExt::from_int(1))),
            PieceIndex::N(n) => {
                let w = Sequences::new(p)?.w(n, mu);
                Ok((ActivePiece::TrivEvenN { p, n }, QuadExt::from_rational(w)))
            }
        },
        (BundleKind::Twisted, true) if k == 8 => classify_twisted8(mu),
        (BundleKind::Twisted, true) => {
            // pieces: volume | (p+mu)/(2p) | 1, split at p-sqrt(2p) and p
            let b = QuadExt::new(
                Rational::from_integer(BigInt::from(p)),
                -Rational::one(),
                Rational::from_integer(BigInt::from(2 * p)),
            )?;
            let mu_qx = QuadExt::from_rational(mu.clone());
            if mu_qx < b {
                Ok((ActivePiece::Volume, cvol()))
            } else if *mu < Rational::from_integer(BigInt::from(p)) {
                let w = (mu + Rational::from_integer(BigInt::from(p)))
                    / Rational::from_integer(BigInt::from(2 * p));
                Ok((ActivePiece::TwistHalf { p }, QuadExt::from_rational(w)))
            } else {
                Ok((ActivePiece::ConstantOne, QuadExt::from_int(1)))
            }
        }
        (BundleKind::Twisted, false) => {
            // pieces: volume | p(p+mu-1)/(2p^2-p-1) | (p+mu)/(2p) | 1
            let pq = Rational::from_integer(BigInt::from(p));
            let psq = &pq * &pq;
            let b = QuadExt::new(
                (&psq * &pq - Rational::from_integer(2.into()) * &psq + Rational::one()) / &psq,
                -(&pq - Rational::one()) / &psq,
                Rational::from_integer(BigInt::from(2 * p + 1)),
            )?;
            let mu_qx = QuadExt::from_rational(mu.clone());
            let mid = &pq * (&pq - Rational::one()) / (&pq + Rational::one());
            if mu_qx < b {
                Ok((ActivePiece::Volume, cvol()))
            } else if *mu < mid {
                let w = &pq * (&pq + mu - Rational::one())
                    / (Rational::from_integer(2.into()) * &psq - &pq - Rational::one());
                Ok((ActivePiece::TwistSteep { p }, QuadExt::from_rational(w)))
            } else if *mu < pq {
                let w = (&pq + mu) / (Rational::from_integer(2.into()) * &pq);
                Ok((ActivePiece::TwistHalf { p }, QuadExt::from_rational(w)))
            } else {
                Ok((ActivePiece::ConstantOne, QuadExt::from_int(1)))
            }
        }
    }
}

/// The twisted 8-ball width: three interlocking families of linear pieces
/// accumulating at `mu = 1/2` from both sides, with the volume bound attained
/// exactly at the accumulation point and at the breakpoints `s_3`.
fn classify_twisted8(mu: &Rational) -> Result<(ActivePiece, QuadExt)> {
    let spec = BundleSpec::twisted(mu.clone())?;
    let half = Rational::new(1.into(), 2.into());
    let volume = |_: ()| -> (ActivePiece, QuadExt) { (ActivePiece::Volume, spec.cvol(8)) };
    let linear = |tag: FamilyTag, n: i64| -> Result<(ActivePiece, QuadExt)> {
        let w = match tag {
            FamilyTag::I => e8::u1(mu, n)?,
            FamilyTag::II => e8::u2(mu, n)?,
            FamilyTag::III => e8::u3(mu, n),
        };
        Ok((ActivePiece::Twist8 { tag, n }, QuadExt::from_rational(w)))
    };
    if *mu == half {
        return Ok(volume(()));
    }
    // The pieces accumulate at 1/2 with gaps of order 1/(2n), so seed the
    // scan near 1/(2|mu - 1/2|) and walk back to the scan invariant; the
    // estimate is within a few steps of the right piece.
    let seed = |gap: Rational| -> Result<i64> {
        let est = (Rational::one() / (Rational::from_integer(2.into()) * gap)).ceil();
        i64::try_from(est.to_integer())
            .map(|n| n.max(1))
            .map_err(|_| Error::Domain("mu is unworkably close to 1/2".into()))
    };
    if *mu < half {
        // ascending side: s2(0) = 0 < s3(0) < s1(1) < s2(1) < s3(1) < ... -> 1/2
        let mut n = seed(&half - mu)?;
        while n > 1 && *mu <= e8::s2(n - 1) {
            n -= 1;
        }
        loop {
            let s3 = e8::s3(n - 1);
            let s3 = s3.finite().expect("n - 1 >= 0");
            if mu < s3 {
                return linear(FamilyTag::III, n - 1);
            }
            if mu == s3 {
                return Ok(volume(()));
            }
            if *mu <= e8::s1(n) {
                return linear(FamilyTag::I, n);
            }
            if *mu <= e8::s2(n) {
                return linear(FamilyTag::II, n);
            }
            n += 1;
        }
    }
    // descending side: infinity = s3(-1) > s2(-1) = 4 > s1(-1) > s3(-2) > ... -> 1/2
    let mut n = seed(mu - &half)?;
    while n > 1 {
        match e8::s3(-n) {
            SValue::Finite(s3) if *mu >= s3 => n -= 1,
            _ => break,
        }
    }
    loop {
        match e8::s3(-(n + 1)) {
            SValue::Finite(s3) => {
                if *mu > s3 {
                    if *mu <= e8::s1(-n) {
                        return linear(FamilyTag::I, -n);
                    }
                    if *mu <= e8::s2(-n) {
                        return linear(FamilyTag::II, -n);
                    }
                    return linear(FamilyTag::III, -n);
                }
                if *mu == s3 {
                    return Ok(volume(()));
                }
            }
            SValue::Infinite => unreachable!("s3 is finite for arguments <= -2"),
        }
        n += 1;
    }
}

/// The generalized Gromov width of `k` equal balls, exact.
pub fn width_at(spec: &BundleSpec, k: u32) -> Result<QuadExt> {
    classify(spec, k).map(|(_, w)| w)
}

/// Packing number `p_k = k * w_k^2 / (2 * vol)`; always a rational in `(0, 1]`.
pub fn packing_number(spec: &BundleSpec, k: u32) -> Result<Rational> {
    let (piece, w) = classify(spec, k)?;
    if piece == ActivePiece::Volume {
        return Ok(Rational::one());
    }
    let w = w.as_rational().expect("non-volume pieces are rational").clone();
    let p = Rational::from_integer(BigInt::from(k)) * &w * &w
        / (Rational::from_integer(2.into()) * spec.volume());
    debug_assert!(p <= Rational::one());
    Ok(p)
}

/// True iff `k` balls fill the whole volume, i.e. `p_k = 1` exactly.
pub fn full_packing_set_contains(spec: &BundleSpec, k: u32) -> Result<bool> {
    Ok(packing_number(spec, k)? == Rational::one())
}

fn ceil_rational(r: &Rational) -> BigInt {
    r.ceil().to_integer()
}

/// Exact ceiling of `(mu + 2 + sqrt((mu+2)^2 + 4 sqrt(2 mu + 1))) / 2`.
///
/// The nested radical is eliminated by two staged squarings: `r <= m` iff
/// `t := 2m - mu - 2 >= 0`, `u := t^2 - (mu+2)^2 >= 0`, and
/// `16 (2 mu + 1) <= u^2`.
fn ceil_twisted_odd_root(mu: &Rational) -> BigInt {
    let two = Rational::from_integer(2.into());
    let mu2 = mu + &two;
    let leq = |m: &BigInt| -> bool {
        let t = &two * Rational::from_integer(m.clone()) - &mu2;
        if t.is_negative() {
            return false;
        }
        let u = &t * &t - &mu2 * &mu2;
        if u.is_negative() {
            return false;
        }
        Rational::from_integer(16.into()) * (&two * mu + Rational::one()) <= &u * &u
    };
    let mut m = ceil_rational(&mu2);
    while !leq(&m) {
        m += 1;
    }
    m
}

/// Smallest ball count of the requested parity from which every packing of
/// that parity is full, by the closed forms (sporadic values included).
pub fn stability(spec: &BundleSpec, parity: Parity) -> Result<u64> {
    check_domain(spec)?;
    let mu = &spec.mu;
    let one = Rational::one();
    let two = Rational::from_integer(2.into());
    let to_u64 = |b: BigInt| -> u64 { u64::try_from(b).expect("small positive count") };
    match spec.kind {
        BundleKind::Trivial => {
            let even = || -> u64 {
                let inner = mu + &two + (&one / mu);
                2 * to_u64(ceil_rational(&inner))
            };
            let odd = || -> Result<u64> {
                if *mu == Rational::new(8.into(), 7.into()) {
                    return Ok(7);
                }
                if *mu <= two {
                    return Ok(9);
                }
                let x = QuadExt::from_rational(mu.clone())
                    .checked_add(&QuadExt::sqrt_rational(&(&two * mu))?)?;
                Ok(2 * to_u64(x.ceil_int()) + 1)
            };
            match parity {
                Parity::Even => Ok(even()),
                Parity::Odd => odd(),
                // The parities stabilize independently and their stability
                // numbers differ in parity, so every count from
                // max(N_odd, N_even) - 1 on is covered by one side or the
                // other, and the max's own predecessor-of-its-parity is not.
                Parity::All => Ok(odd()?.max(even()) - 1),
            }
        }
        BundleKind::Twisted => {
            let in_s = full_packing_set_contains(spec, 8)?;
            let three_halves = Rational::new(3.into(), 2.into());
            let even = || -> Result<u64> {
                if in_s {
                    return Ok(8);
                }
                if *mu <= three_halves {
                    return Ok(10);
                }
                let x = QuadExt::from_rational(mu + &one)
                    .checked_add(&QuadExt::sqrt_rational(&(&two * mu + &one))?)?;
                Ok(2 * to_u64(x.ceil_int()))
            };
            let odd = || -> Result<u64> {
                if *mu == Rational::new(1.into(), 7.into())
                    || *mu == Rational::new(3.into(), 8.into())
                {
                    Ok(7)
                } else if *mu < one {
                    Ok(9)
                } else {
                    Ok(2 * to_u64(ceil_twisted_odd_root(mu)) + 1)
                }
            };
            match parity {
                Parity::Even => even(),
                Parity::Odd => odd(),
                Parity::All => Ok(odd()?.max(even()?) - 1),
            }
        }
    }
}

/// Stability by direct search: the smallest `N` of the parity class whose
/// packings are full for every admissible `j` in `[N, N + window]`.
pub fn stability_by_search(spec: &BundleSpec, parity: Parity, window: u32) -> Result<u64> {
    let admissible = |j: u64| match parity {
        Parity::Odd => j % 2 == 1,
        Parity::Even => j % 2 == 0,
        Parity::All => true,
    };
    let mut n = 1u64;
    loop {
        if admissible(n) {
            let mut all_full = true;
            for j in (n..=n + window as u64).filter(|j| admissible(*j)) {
                if !full_packing_set_contains(spec, j as u32)? {
                    all_full = false;
                    break;
                }
            }
            if all_full {
                return Ok(n);
            }
        }
        n += 1;
    }
}

/// The obstructing classes active at `mu`, or an empty list when the volume
/// bound is the only constraint.
#[derive(Clone, Debug)]
pub struct Obstructions {
    pub classes: Vec<HClass>,
    /// True when the binding constraint is the volume bound.
    pub volume_only: bool,
}

/// Returns the catalog classes cutting out the active width piece. Every
/// returned class is verified on the spot: self-intersection `-1`, canonical
/// pairing `1`, and zero symplectic area at the width.
pub fn obstructions(spec: &BundleSpec, k: u32) -> Result<Obstructions> {
    let (piece, width) = classify(spec, k)?;
    let n_tail = (k as usize + 1).max(3);
    let classes: Vec<HClass> = match &piece {
        ActivePiece::Volume => Vec::new(),
        ActivePiece::ConstantOne => {
            let mut tail = vec![0i64; n_tail];
            tail[0] = 1;
            tail[1] = 1;
            vec![HClass::from_ints(1, &tail)]
        }
        ActivePiece::TrivOddLinear { p } => {
            // (p; p-1, 1^(2p), 0)
            let p = *p as i64;
            let mut tail = vec![1i64; n_tail];
            tail[0] = p - 1;
            tail[n_tail - 1] = 0;
            vec![HClass::from_ints(p, &tail)]
        }
        ActivePiece::TrivEvenN { p, n } => {
            // (d_n; z_n, y_n, x_n^(2p-2), t_n) built from the a-family
            let s = Sequences::new(*p)?;
            let an = s.a(*n);
            let an1 = s.a(*n - 1);
            let x = s.x(*n);
            let sign = if *n % 2 == 0 { BigInt::one() } else { -BigInt::one() };
            let d = &an + &an1 - &x;
            let z = &an - &x;
            let y = &x - sign;
            let t = &an1 - &x;
            let mut tail = vec![x; n_tail];
            tail[0] = z;
            tail[1] = y;
            tail[n_tail - 1] = t;
            vec![HClass::from_rationals(
                Rational::from_integer(d),
                tail.into_iter().map(Rational::from_integer).collect(),
            )?]
        }
        ActivePiece::TwistSteep { p } => {
            // (p(p-1); p(p-2), (p-1)^(2p+1))
            let p = *p as i64;
            let mut tail = vec![p - 1; n_tail];
            tail[0] = p * (p - 2);
            vec![HClass::from_ints(p * (p - 1), &tail)]
        }
        ActivePiece::TwistHalf { p } => {
            // (p; p-1, 1^(2p)) and, for odd k, a trailing zero
            let p = *p as i64;
            let mut tail = vec![1i64; n_tail];
            tail[0] = p - 1;
            if k % 2 == 1 {
                tail[n_tail - 1] = 0;
            }
            vec![HClass::from_ints(p, &tail)]
        }
        ActivePiece::Twist8 { tag, n } => vec![e8::e8_family(*tag, *n)],
        ActivePiece::SmallK => {
            let (brute_w, argmin, _) = brute_force_small_k(spec, k)?;
            assert_eq!(brute_w, width, "table width disagrees with the finite class list");
            argmin
        }
    };
    let v = ball_vector_qx(spec, k, &width)?;
    for e in &classes {
        assert_eq!(e.self_intersection(), QuadExt::from_int(-1), "bad self-intersection");
        assert_eq!(e.k_pairing(), QuadExt::from_int(1), "bad canonical pairing");
        assert_eq!(v.pairing(e)?, QuadExt::zero(), "class does not vanish at the width");
    }
    Ok(Obstructions { classes, volume_only: piece == ActivePiece::Volume })
}

// ---------------------------------------------------------------------------
// Small ball counts: the finite exceptional-class list decides everything.

/// Base types of exceptional classes on blow-ups of at most 8 points:
/// `(a0; multiset of tail entries)`.
const SMALL_K_TYPES: &[(i64, &[i64])] = &[
    (0, &[-1]),
    (1, &[1, 1]),
    (2, &[1, 1, 1, 1, 1]),
    (3, &[2, 1, 1, 1, 1, 1, 1]),
    (4, &[2, 2, 2, 1, 1, 1, 1, 1]),
    (5, &[2, 2, 2, 2, 2, 2, 1, 1]),
    (6, &[3, 2, 2, 2, 2, 2, 2, 2]),
];

fn distinct_arrangements(values: &[i64], slots: usize) -> Vec<Vec<i64>> {
    let mut padded = values.to_vec();
    padded.resize(slots, 0);
    padded.sort_unstable();
    let mut out = Vec::new();
    // lexicographic multiset permutations
    loop {
        out.push(padded.clone());
        // next_permutation
        let Some(i) = (0..padded.len() - 1).rev().find(|&i| padded[i] < padded[i + 1]) else {
            break;
        };
        let j = (i + 1..padded.len()).rev().find(|&j| padded[j] > padded[i]).expect("exists");
        padded.swap(i, j);
        padded[i + 1..].reverse();
    }
    out
}

/// All exceptional classes of the `n`-fold blow-up for `n <= 8`, with every
/// distinct assignment of tail entries to slots.
pub fn small_k_exceptional_classes(n: usize) -> Result<Vec<HClass>> {
    if !(3..=8).contains(&n) {
        return Err(Error::Domain(format!("finite class list covers 3..=8 slots, got {n}")));
    }
    let mut out = Vec::new();
    for (a0, tail_type) in SMALL_K_TYPES {
        if tail_type.len() > n {
            continue;
        }
        for tail in distinct_arrangements(tail_type, n) {
            out.push(HClass::from_ints(*a0, &tail));
        }
    }
    Ok(out)
}

/// Brute-force width for `k <= 7`: minimize the vanishing capacity over the
/// finite class list, then cap with the volume bound. Returns the width, the
/// classes achieving it (empty when the volume bound is strictly binding),
/// and whether the volume bound is binding.
pub fn brute_force_small_k(spec: &BundleSpec, k: u32) -> Result<(QuadExt, Vec<HClass>, bool)> {
    if k == 0 || k > 7 {
        return Err(Error::Domain(format!("brute force applies to 1 <= k <= 7, got {k}")));
    }
    check_domain(spec)?;
    let n = (k as usize + 1).max(3);
    let mu = &spec.mu;
    let one = Rational::one();
    // v(c) = v0 + c * dv
    let (v0, dv): (Vec<Rational>, Vec<Rational>) = match spec.kind {
        BundleKind::Trivial => {
            let mut v0 = vec![mu + &one, mu.clone()];
            let mut dv = vec![-one.clone(), -one.clone()];
            for _ in 0..k - 1 {
                v0.push(Rational::zero());
                dv.push(one.clone());
            }
            v0.push(one.clone());
            dv.push(-one.clone());
            while v0.len() < n + 1 {
                v0.push(Rational::zero());
                dv.push(Rational::zero());
            }
            (v0, dv)
        }
        BundleKind::Twisted => {
            let mut v0 = vec![mu + &one, mu.clone()];
            let mut dv = vec![Rational::zero(), Rational::zero()];
            for _ in 0..k {
                v0.push(Rational::zero());
                dv.push(one.clone());
            }
            while v0.len() < n + 1 {
                v0.push(Rational::zero());
                dv.push(Rational::zero());
            }
            (v0, dv)
        }
    };
    let pair = |x: &[Rational], e: &HClass| -> Rational {
        let mut acc = &x[0] * e.a0().as_rational().expect("integer class");
        for (xi, ei) in x[1..].iter().zip(e.tail()) {
            acc -= xi * ei.as_rational().expect("integer class");
        }
        acc
    };
    let mut best: Option<Rational> = None;
    let mut argmin: Vec<HClass> = Vec::new();
    for e in small_k_exceptional_classes(n)? {
        let a = pair(&v0, &e);
        let b = -pair(&dv, &e);
        if b.is_positive() {
            let bound = a / b;
            match &best {
                Some(cur) if bound > *cur => {}
                Some(cur) if bound == *cur => argmin.push(e),
                _ => {
                    best = Some(bound);
                    argmin = vec![e];
                }
            }
        } else {
            debug_assert!(!a.is_negative(), "constraint infeasible at c -> 0");
        }
    }
    let best = best.ok_or_else(|| Error::Domain("no binding class".into()))?;
    let cvol = spec.cvol(k);
    let best_qx = QuadExt::from_rational(best);
    if cvol < best_qx {
        Ok((cvol, Vec::new(), true))
    } else {
        let volume_binding = cvol == best_qx;
        Ok((best_qx, argmin, volume_binding))
    }
}

/// Width tables for `k <= 7` distilled from the small-blow-up packing
/// numbers; each piece is linear in `mu` and the last piece is constant 1.
/// Entries are `(lo, hi, lo_closed, hi_closed, slope, intercept)` over i64
/// fractions `(num, den)`.
type SmallPieceRow = ((i64, i64), Option<(i64, i64)>, bool, bool, (i64, i64), (i64, i64));

fn small_k_rows(bundle: BundleKind, k: u32) -> &'static [SmallPieceRow] {
    match (bundle, k) {
        (BundleKind::Trivial, 1) | (BundleKind::Trivial, 2) => {
            &[((1, 1), None, true, false, (0, 1), (1, 1))]
        }
        (BundleKind::Trivial, 3) | (BundleKind::Trivial, 4) => &[
            ((1, 1), Some((2, 1)), true, false, (1, 3), (1, 3)),
            ((2, 1), None, true, false, (0, 1), (1, 1)),
        ],
        (BundleKind::Trivial, 5) => &[
            ((1, 1), Some((3, 1)), true, false, (1, 5), (2, 5)),
            ((3, 1), None, true, false, (0, 1), (1, 1)),
        ],
        (BundleKind::Trivial, 6) => &[
            ((1, 1), Some((4, 3)), true, false, (2, 7), (2, 7)),
            ((4, 3), Some((3, 1)), true, false, (1, 5), (2, 5)),
            ((3, 1), None, true, false, (0, 1), (1, 1)),
        ],
        (BundleKind::Trivial, 7) => &[
            ((1, 1), Some((8, 7)), true, false, (4, 15), (4, 15)),
            ((8, 7), Some((11, 8)), true, false, (3, 13), (4, 13)),
            ((11, 8), Some((4, 1)), true, false, (1, 7), (3, 7)),
            ((4, 1), None, true, false, (0, 1), (1, 1)),
        ],
        (BundleKind::Twisted, 1) => &[((0, 1), None, false, false, (0, 1), (1, 1))],
        (BundleKind::Twisted, 2) | (BundleKind::Twisted, 3) => &[
            ((0, 1), Some((1, 1)), false, false, (1, 2), (1, 2)),
            ((1, 1), None, true, false, (0, 1), (1, 1)),
        ],
        (BundleKind::Twisted, 4) => &[
            ((0, 1), Some((2, 1)), false, false, (1, 4), (1, 2)),
            ((2, 1), None, true, false, (0, 1), (1, 1)),
        ],
        (BundleKind::Twisted, 5) => &[
            ((0, 1), Some((2, 3)), false, true, (2, 5), (2, 5)),
            ((2, 3), Some((2, 1)), false, true, (1, 4), (1, 2)),
            ((2, 1), None, false, false, (0, 1), (1, 1)),
        ],
        (BundleKind::Twisted, 6) => &[
            ((0, 1), Some((1, 4)), false, true, (2, 5), (2, 5)),
            ((1, 4), Some((3, 5)), false, true, (2, 7), (3, 7)),
            ((3, 5), Some((3, 1)), false, true, (1, 6), (1, 2)),
            ((3, 1), None, false, false, (0, 1), (1, 1)),
        ],
        (BundleKind::Twisted, 7) => &[
            ((0, 1), Some((1, 7)), false, true, (3, 8), (3, 8)),
            ((1, 7), Some((3, 8)), false, true, (4, 13), (5, 13)),
            ((3, 8), Some((6, 11)), false, true, (4, 15), (6, 15)),
            ((6, 11), Some((3, 2)), false, true, (3, 14), (6, 14)),
            ((3, 2), Some((3, 1)), false, true, (1, 6), (1, 2)),
            ((3, 1), None, false, false, (0, 1), (1, 1)),
        ],
        _ => unreachable!("small-k table queried with k = {k}"),
    }
}

fn small_k_width(bundle: BundleKind, k: u32, mu: &Rational) -> Result<Rational> {
    let to_rat = |(n, d): (i64, i64)| Rational::new(BigInt::from(n), BigInt::from(d));
    for &(lo, hi, lo_closed, hi_closed, slope, intercept) in small_k_rows(bundle, k) {
        let lo = to_rat(lo);
        let above = if lo_closed { *mu >= lo } else { *mu > lo };
        let below = match hi {
            None => true,
            Some(h) => {
                let h = to_rat(h);
                if hi_closed {
                    *mu <= h
                } else {
                    *mu < h
                }
            }
        };
        if above && below {
            return Ok(to_rat(slope) * mu + to_rat(intercept));
        }
    }
    Err(Error::Domain(format!("mu = {mu} outside the width domain")))
}

// ---------------------------------------------------------------------------
// Profile materialization.

/// Materializes the width profile.
///
/// `depth` bounds the number of members taken from any infinite piece family
/// (even trivial bundle, twisted 8 balls); profiles with such families come
/// back with `truncated = true` and a coverage gap next to the accumulation
/// point of the omitted pieces.
pub fn width_profile(bundle: BundleKind, k: u32, depth: u32) -> Result<WidthProfile> {
    if k == 0 {
        return Err(Error::Domain("need k >= 1 balls".into()));
    }
    let depth = depth.max(2);
    let qx = QuadExt::from_rational;
    let ri = |n: u32| Rational::from_integer(BigInt::from(n));
    let mut pieces = Vec::new();
    let mut truncated = false;
    if k <= 7 {
        let to_rat = |(n, d): (i64, i64)| Rational::new(BigInt::from(n), BigInt::from(d));
        for &(lo, hi, lo_closed, hi_closed, slope, intercept) in small_k_rows(bundle, k) {
            pieces.push(WidthPiece {
                lo: qx(to_rat(lo)),
                hi: hi.map(|h| qx(to_rat(h))),
                lo_closed,
                hi_closed,
                formula: PieceFormula::linear(to_rat(slope), to_rat(intercept)),
            });
        }
        return Ok(WidthProfile { bundle, k, pieces, truncated: false });
    }
    let p = k / 2;
    match (bundle, k % 2 == 0) {
        (BundleKind::Trivial, false) => {
            let b = QuadExt::new(ri(p + 1), -Rational::one(), ri(2 * p + 1))?;
            pieces.push(WidthPiece {
                lo: QuadExt::from_int(1),
                hi: Some(b.clone()),
                lo_closed: true,
                hi_closed: false,
                formula: PieceFormula::VolumeBound,
            });
            pieces.push(WidthPiece {
                lo: b,
                hi: Some(qx(ri(p + 1))),
                lo_closed: true,
                hi_closed: false,
                formula: PieceFormula::linear(
                    Rational::new(1.into(), (2 * p + 1).into()),
                    Rational::new(p.into(), (2 * p + 1).into()),
                ),
            });
            pieces.push(WidthPiece {
                lo: qx(ri(p + 1)),
                hi: None,
                lo_closed: true,
                hi_closed: false,
                formula: PieceFormula::Constant(Rational::one()),
            });
        }
        (BundleKind::Trivial, true) => {
            truncated = true;
            let lambda = lambda_of(p)?;
            pieces.push(WidthPiece {
                lo: QuadExt::from_int(1),
                hi: Some(lambda),
                lo_closed: true,
                hi_closed: true,
                formula: PieceFormula::VolumeBound,
            });
            let s = Sequences::new(p)?;
            for n in (2..=depth as u64).rev() {
                let an = s.a(n);
                let an1 = s.a(n - 1);
                let beta = Rational::from_integer(s.beta(n));
                pieces.push(WidthPiece {
                    lo: qx(s.gamma_ratio(n as i64)),
                    hi: Some(qx(s.gamma_ratio(n as i64 - 1))),
                    lo_closed: true,
                    hi_closed: false,
                    formula: PieceFormula::linear(
                        Rational::from_integer(an1) / &beta,
                        Rational::from_integer(an) / &beta,
                    ),
                });
            }
            pieces.push(WidthPiece {
                lo: qx(ri(p)),
                hi: None,
                lo_closed: true,
                hi_closed: false,
                formula: PieceFormula::Constant(Rational::one()),
            });
        }
        (BundleKind::Twisted, true) if k == 8 => {
            truncated = true;
            let half = Rational::new(1.into(), 2.into());
            let u_formula = |tag: FamilyTag, n: i64| -> PieceFormula {
                // read off slope and intercept from u_i(mu, n)
                let at0 = match tag {
                    FamilyTag::I => e8::u1(&Rational::zero(), n).expect("n != 0"),
                    FamilyTag::II => e8::u2(&Rational::zero(), n).expect("n != 0"),
                    FamilyTag::III => e8::u3(&Rational::zero(), n),
                };
                let at1 = match tag {
                    FamilyTag::I => e8::u1(&Rational::one(), n).expect("n != 0"),
                    FamilyTag::II => e8::u2(&Rational::one(), n).expect("n != 0"),
                    FamilyTag::III => e8::u3(&Rational::one(), n),
                };
                PieceFormula::linear(at1 - &at0, at0)
            };
            let point = |at: Rational| WidthPiece {
                lo: qx(at.clone()),
                hi: Some(qx(at)),
                lo_closed: true,
                hi_closed: true,
                formula: PieceFormula::VolumeBound,
            };
            // ascending side toward 1/2
            for n in 1..=depth as i64 {
                let s3_prev = e8::s3(n - 1).finite().expect("n-1 >= 0").clone();
                pieces.push(WidthPiece {
                    lo: qx(e8::s2(n - 1)),
                    hi: Some(qx(s3_prev.clone())),
                    lo_closed: false,
                    hi_closed: false,
                    formula: u_formula(FamilyTag::III, n - 1),
                });
                pieces.push(point(s3_prev.clone()));
                pieces.push(WidthPiece {
                    lo: qx(s3_prev),
                    hi: Some(qx(e8::s1(n))),
                    lo_closed: false,
                    hi_closed: true,
                    formula: u_formula(FamilyTag::I, n),
                });
                pieces.push(WidthPiece {
                    lo: qx(e8::s1(n)),
                    hi: Some(qx(e8::s2(n))),
                    lo_closed: false,
                    hi_closed: true,
                    formula: u_formula(FamilyTag::II, n),
                });
            }
            pieces.push(point(half));
            // descending side away from 1/2, emitted in ascending mu order
            for n in (1..=depth as i64).rev() {
                let lo_point = e8::s3(-(n + 1)).finite().expect("-(n+1) <= -2").clone();
                pieces.push(point(lo_point.clone()));
                pieces.push(WidthPiece {
                    lo: qx(lo_point),
                    hi: Some(qx(e8::s1(-n))),
                    lo_closed: false,
                    hi_closed: true,
                    formula: u_formula(FamilyTag::I, -n),
                });
                pieces.push(WidthPiece {
                    lo: qx(e8::s1(-n)),
                    hi: Some(qx(e8::s2(-n))),
                    lo_closed: false,
                    hi_closed: true,
                    formula: u_formula(FamilyTag::II, -n),
                });
                let hi = e8::s3(-n).finite().cloned();
                pieces.push(WidthPiece {
                    lo: qx(e8::s2(-n)),
                    hi: hi.map(qx),
                    lo_closed: false,
                    hi_closed: false,
                    formula: u_formula(FamilyTag::III, -n),
                });
            }
        }
        (BundleKind::Twisted, true) => {
            let b = QuadExt::new(ri(p), -Rational::one(), ri(2 * p))?;
            pieces.push(WidthPiece {
                lo: QuadExt::zero(),
                hi: Some(b.clone()),
                lo_closed: false,
                hi_closed: false,
                formula: PieceFormula::VolumeBound,
            });
            pieces.push(WidthPiece {
                lo: b,
                hi: Some(qx(ri(p))),
                lo_closed: true,
                hi_closed: false,
                formula: PieceFormula::linear(
                    Rational::new(1.into(), (2 * p).into()),
                    Rational::new(1.into(), 2.into()),
                ),
            });
            pieces.push(WidthPiece {
                lo: qx(ri(p)),
                hi: None,
                lo_closed: true,
                hi_closed: false,
                formula: PieceFormula::Constant(Rational::one()),
            });
        }
        (BundleKind::Twisted, false) => {
            let pq = ri(p);
            let psq = &pq * &pq;
            let b = QuadExt::new(
                (&psq * &pq - Rational::from_integer(2.into()) * &psq + Rational::one()) / &psq,
                -(&pq - Rational::one()) / &psq,
                ri(2 * p + 1),
            )?;
            let mid = &pq * (&pq - Rational::one()) / (&pq + Rational::one());
            let steep_den = Rational::from_integer(2.into()) * &psq - &pq - Rational::one();
            pieces.push(WidthPiece {
                lo: QuadExt::zero(),
                hi: Some(b.clone()),
                lo_closed: false,
                hi_closed: false,
                formula: PieceFormula::VolumeBound,
            });
            pieces.push(WidthPiece {
                lo: b,
                hi: Some(qx(mid.clone())),
                lo_closed: true,
                hi_closed: false,
                formula: PieceFormula::linear(&pq / &steep_den, &pq * (&pq - Rational::one()) / &steep_den),
            });
            pieces.push(WidthPiece {
                lo: qx(mid),
                hi: Some(qx(pq.clone())),
                lo_closed: true,
                hi_closed: false,
                formula: PieceFormula::linear(
                    Rational::new(1.into(), (2 * p).into()),
                    Rational::new(1.into(), 2.into()),
                ),
            });
            pieces.push(WidthPiece {
                lo: qx(pq),
                hi: None,
                lo_closed: true,
                hi_closed: false,
                formula: PieceFormula::Constant(Rational::one()),
            });
        }
    }
    Ok(WidthProfile { bundle, k, pieces, truncated })
}

/// Checks that two piece formulas evaluate to the same width at the (possibly
/// irrational) breakpoint `mu`; volume-bound values are compared by squaring.
pub fn formulas_agree_at(
    bundle: BundleKind,
    k: u32,
    f1: &PieceFormula,
    f2: &PieceFormula,
    mu: &QuadExt,
) -> bool {
    let eval_linear = |f: &PieceFormula| -> Option<QuadExt> {
        match f {
            PieceFormula::Constant(c) => Some(QuadExt::from_rational(c.clone())),
            PieceFormula::Linear { slope, intercept } => Some(
                &(&QuadExt::from_rational(slope.clone()) * mu)
                    + &QuadExt::from_rational(intercept.clone()),
            ),
            PieceFormula::VolumeBound => None,
        }
    };
    match (eval_linear(f1), eval_linear(f2)) {
        (Some(a), Some(b)) => a == b,
        (None, None) => true,
        (Some(v), None) | (None, Some(v)) => {
            v.sign() >= 0 && v.square() == cvol_squared_at_qx(bundle, k, mu)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int};
    use crate::lattice::class_i64;

    fn trivial(mu: Rational) -> BundleSpec {
        BundleSpec::trivial(mu).unwrap()
    }

    fn twisted(mu: Rational) -> BundleSpec {
        BundleSpec::twisted(mu).unwrap()
    }

    #[test]
    fn spot_widths() {
        assert_eq!(width_at(&trivial(rat_int(2)), 9).unwrap(), QuadExt::from_rational(rat(2, 3)));
        assert_eq!(width_at(&trivial(rat_int(2)), 8).unwrap(), QuadExt::from_rational(rat(12, 17)));
        assert_eq!(width_at(&trivial(rat_int(1)), 8).unwrap(), QuadExt::from_rational(rat(1, 2)));
        assert_eq!(width_at(&twisted(rat(1, 2)), 8).unwrap(), QuadExt::from_rational(rat(1, 2)));
        assert_eq!(width_at(&twisted(rat_int(2)), 9).unwrap(), QuadExt::from_rational(rat(20, 27)));
        assert_eq!(
            width_at(&twisted(rat(17, 16)), 8).unwrap(),
            QuadExt::from_rational(rat(5, 8))
        );
        assert_eq!(width_at(&twisted(rat_int(4)), 8).unwrap(), QuadExt::from_int(1));
        assert_eq!(width_at(&trivial(rat_int(5)), 8).unwrap(), QuadExt::from_int(1));
        assert_eq!(width_at(&trivial(rat(3, 2)), 3).unwrap(), QuadExt::from_rational(rat(5, 6)));
    }

    #[test]
    fn volume_piece_for_small_mu() {
        // trivial k=8, mu=1 sits at the accumulation point: width is c_vol = 1/2
        let (piece, w) = classify(&trivial(rat_int(1)), 8).unwrap();
        assert_eq!(piece, ActivePiece::Volume);
        assert_eq!(w, QuadExt::from_rational(rat(1, 2)));
        // twisted k=16, small mu: irrational volume bound
        let (piece, w) = classify(&twisted(rat(1, 8)), 16).unwrap();
        assert_eq!(piece, ActivePiece::Volume);
        assert_eq!(w.square(), QuadExt::from_rational(rat(5, 64)));
    }

    #[test]
    fn packing_numbers() {
        assert_eq!(packing_number(&trivial(rat(8, 7)), 7).unwrap(), rat_int(1));
        assert_eq!(packing_number(&trivial(rat_int(2)), 1).unwrap(), rat(1, 4));
        assert_eq!(packing_number(&twisted(rat_int(1)), 5).unwrap(), rat(15, 16));
    }

    #[test]
    fn full_packing_examples() {
        assert!(full_packing_set_contains(&twisted(rat(17, 16)), 8).unwrap());
        assert!(full_packing_set_contains(&trivial(rat(4, 3)), 6).unwrap());
        assert!(!full_packing_set_contains(&trivial(rat_int(2)), 8).unwrap());
    }

    #[test]
    fn stability_examples() {
        assert_eq!(stability(&trivial(rat_int(1)), Parity::Even).unwrap(), 8);
        assert_eq!(stability(&trivial(rat(8, 7)), Parity::All).unwrap(), 9);
        assert_eq!(stability(&trivial(rat_int(3)), Parity::Odd).unwrap(), 13);
        assert_eq!(stability(&twisted(rat(1, 2)), Parity::All).unwrap(), 8);
    }

    #[test]
    fn obstruction_catalogs() {
        let obs = obstructions(&trivial(rat_int(2)), 8).unwrap();
        assert_eq!(obs.classes, vec![class_i64(7, &[4, 3, 2, 2, 2, 2, 2, 2, 1])]);

        let obs = obstructions(&trivial(rat_int(3)), 9).unwrap();
        assert_eq!(obs.classes, vec![class_i64(4, &[3, 1, 1, 1, 1, 1, 1, 1, 1, 0])]);

        let obs = obstructions(&trivial(rat_int(1)), 8).unwrap();
        assert!(obs.volume_only && obs.classes.is_empty());

        // twisted 8 balls on a linear piece picks a root-lattice family member
        let obs = obstructions(&twisted(rat(1, 4)), 8).unwrap();
        assert_eq!(obs.classes, vec![e8::e8_family(FamilyTag::III, 1)]);
        assert_eq!(obs.classes[0], class_i64(35, &[7, 13, 12, 12, 12, 12, 12, 12, 12]));

        // constant piece classes carry the right tail length for both parities
        let obs = obstructions(&twisted(rat_int(6)), 10).unwrap();
        assert_eq!(obs.classes, vec![class_i64(1, &[1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0])]);
    }

    #[test]
    fn twisted8_fine_grid_matches_the_bisection_oracle() {
        use crate::reduce::width_by_bisection;
        // step 1/64 across the interlocking region up to just past 17/16
        for j in 1..=70i64 {
            let mu = rat(j, 64);
            let spec = twisted(mu.clone());
            let w = width_at(&spec, 8).unwrap();
            let (lo, hi) = width_by_bisection(&spec, 8, 1 << 32).unwrap();
            assert!(
                QuadExt::from_rational(lo.clone()) <= w && w <= QuadExt::from_rational(hi.clone()),
                "mu={mu}: width {w} outside [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn small_k_brute_force_matches_tables() {
        for k in 1..=7u32 {
            for i in 0..=40 {
                let mu = Rational::one() + rat(i, 8);
                let spec = trivial(mu.clone());
                let (w, _, _) = brute_force_small_k(&spec, k).unwrap();
                assert_eq!(
                    w,
                    width_at(&spec, k).unwrap(),
                    "trivial k={k}, mu={mu}"
                );
            }
            for i in 1..=40 {
                let mu = rat(i, 8);
                let spec = twisted(mu.clone());
                let (w, _, _) = brute_force_small_k(&spec, k).unwrap();
                assert_eq!(w, width_at(&spec, k).unwrap(), "twisted k={k}, mu={mu}");
            }
        }
    }

    #[test]
    fn twisted8_piece_scan() {
        // mu = 1/8 lands on the u2(., 1) piece
        let (piece, w) = classify(&twisted(rat(1, 8)), 8).unwrap();
        assert_eq!(piece, ActivePiece::Twist8 { tag: FamilyTag::II, n: 1 });
        assert_eq!(w, QuadExt::from_rational(rat(177, 448)));
        // mu = 1/4 lands on u3(., 1)
        let (piece, w) = classify(&twisted(rat(1, 4)), 8).unwrap();
        assert_eq!(piece, ActivePiece::Twist8 { tag: FamilyTag::III, n: 1 });
        assert_eq!(w, QuadExt::from_rational(rat(42, 97)));
        // mu = 2 lands on u2(., -1): w = (mu + 4)/8
        let (piece, w) = classify(&twisted(rat_int(2)), 8).unwrap();
        assert_eq!(piece, ActivePiece::Twist8 { tag: FamilyTag::II, n: -1 });
        assert_eq!(w, QuadExt::from_rational(rat(3, 4)));
    }

    #[test]
    fn twisted8_deep_pieces_match_the_bisection_oracle() {
        use crate::reduce::width_by_bisection;
        // values straddling the accumulation point exercise the piece-scan
        // seeding; the reduction oracle must bracket every closed form
        for mu in [
            rat(127, 256),
            rat(129, 256),
            rat(255, 512),
            rat(257, 512),
            rat(2047, 4096),
            rat(2049, 4096),
        ] {
            let spec = twisted(mu.clone());
            let w = width_at(&spec, 8).unwrap();
            let (lo, hi) = width_by_bisection(&spec, 8, 1 << 36).unwrap();
            assert!(
                QuadExt::from_rational(lo.clone()) <= w && w <= QuadExt::from_rational(hi.clone()),
                "mu={mu}: width {w} outside [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn profiles_are_adjacent_where_materialized() {
        for (bundle, k) in [
            (BundleKind::Trivial, 9),
            (BundleKind::Trivial, 8),
            (BundleKind::Twisted, 10),
            (BundleKind::Twisted, 11),
            (BundleKind::Twisted, 8),
            (BundleKind::Trivial, 7),
            (BundleKind::Twisted, 6),
        ] {
            let profile = width_profile(bundle, k, 5).unwrap();
            for w in profile.pieces.windows(2) {
                let hi = w[0].hi.as_ref().expect("interior piece");
                // pieces meet with complementary closure, except across a
                // truncation gap where the flag owns the discrepancy
                if hi == &w[1].lo {
                    assert!(w[0].hi_closed != w[1].lo_closed || profile.truncated);
                } else {
                    assert!(profile.truncated, "gap in a non-truncated profile");
                }
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(BundleSpec::trivial(rat(7, 8)).is_err());
        assert!(width_at(&twisted(rat_int(1)), 0).is_err());
    }
}

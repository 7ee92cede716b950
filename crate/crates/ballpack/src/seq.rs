//! Integer sequences attached to the even trivial-bundle widths: the families
//! `a_n`, `beta_n`, `gamma_n`, `x_n` driven by the third-order recurrence
//! `u_{n+3} = (p-1)u_{n+2} - (p-1)u_{n+1} + u_n`, the associated 2x2 orbit
//! dynamics, the interval index of a given `mu`, and the identity suite
//! connecting all of them.

use std::cell::RefCell;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::exact::{QuadExt, Rational};
use crate::{Error, Result};

/// Which sequence family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeqKind {
    A,
    Beta,
    Gamma,
    X,
}

/// Memoized sequence tables for one value of `p >= 4`.
///
/// An instance is cheap to create and is not meant to be shared across
/// threads; make one per execution context.
#[derive(Debug)]
pub struct Sequences {
    p: u32,
    a: RefCell<Vec<BigInt>>,
    beta: RefCell<Vec<BigInt>>,
    /// `gamma[i]` stores the term of index `i - 1`, starting at `gamma_{-1} = 0`.
    gamma: RefCell<Vec<BigInt>>,
}

impl Sequences {
    pub fn new(p: u32) -> Result<Self> {
        if p < 4 {
            return Err(Error::Domain(format!("sequences need p >= 4, got {p}")));
        }
        let pb = BigInt::from(p);
        Ok(Sequences {
            p,
            a: RefCell::new(vec![BigInt::zero(), BigInt::one(), &pb - 1]),
            beta: RefCell::new(vec![-BigInt::one(), BigInt::one(), 2 * &pb - 1]),
            gamma: RefCell::new(vec![BigInt::zero(), BigInt::one(), pb]),
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    fn grow(&self, table: &RefCell<Vec<BigInt>>, len: usize) {
        let mut t = table.borrow_mut();
        let pm1 = BigInt::from(self.p - 1);
        while t.len() < len {
            let n = t.len();
            let next = &pm1 * (&t[n - 1] - &t[n - 2]) + &t[n - 3];
            t.push(next);
        }
    }

    pub fn a(&self, n: u64) -> BigInt {
        if self.p == 4 {
            // at p = 4 the three roots collide and a_n = n(n+1)/2
            let n = BigInt::from(n);
            return &n * (&n + 1) / 2;
        }
        self.grow(&self.a, n as usize + 1);
        self.a.borrow()[n as usize].clone()
    }

    pub fn beta(&self, n: u64) -> BigInt {
        if self.p == 4 {
            let n = BigInt::from(n);
            return 2 * &n * &n - 1;
        }
        self.grow(&self.beta, n as usize + 1);
        self.beta.borrow()[n as usize].clone()
    }

    /// `gamma_n` for `n >= -1`.
    pub fn gamma(&self, n: i64) -> BigInt {
        assert!(n >= -1, "gamma is defined for n >= -1");
        if self.p == 4 {
            let np1 = BigInt::from(n + 1);
            return &np1 * &np1;
        }
        let idx = (n + 1) as usize;
        self.grow(&self.gamma, idx + 1);
        self.gamma.borrow()[idx].clone()
    }

    /// `x_n = (beta_n + (-1)^n) / (2p)`, always an integer.
    pub fn x(&self, n: u64) -> BigInt {
        let sign = if n % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        let num = self.beta(n) + sign;
        let den = BigInt::from(2 * self.p);
        debug_assert!((&num % &den).is_zero(), "x_{n} must be integral");
        num / den
    }

    /// Ratio `gamma_n / gamma_{n-1}`, the left endpoint of the n-th interval.
    pub fn gamma_ratio(&self, n: i64) -> Rational {
        Rational::new(self.gamma(n), self.gamma(n - 1))
    }

    /// The width bound `w_n(mu) = (a_n + a_{n-1} mu) / (2(a_n + a_{n-1}) - 1)`.
    pub fn w(&self, n: u64, mu: &Rational) -> Rational {
        assert!(n >= 1);
        let an = self.a(n);
        let an1 = self.a(n - 1);
        let num = Rational::from_integer(an.clone()) + Rational::from_integer(an1.clone()) * mu;
        let den = 2 * (an + an1) - 1;
        num / Rational::from_integer(den)
    }
}

/// One sequence term as an exact rational.
pub fn seq(p: u32, kind: SeqKind, n: u64) -> Result<Rational> {
    let s = Sequences::new(p)?;
    let v = match kind {
        SeqKind::A => s.a(n),
        SeqKind::Beta => s.beta(n),
        SeqKind::Gamma => s.gamma(n as i64),
        SeqKind::X => s.x(n),
    };
    Ok(Rational::from_integer(v))
}

/// `w_n(mu)` as a free function.
pub fn w_n(p: u32, n: u64, mu: &Rational) -> Result<Rational> {
    if n == 0 {
        return Err(Error::Domain("w_n needs n >= 1".into()));
    }
    Ok(Sequences::new(p)?.w(n, mu))
}

/// The limit `lambda = (p - 2 + sqrt(p^2 - 4p)) / 2` of the interval endpoints.
pub fn lambda_of(p: u32) -> Result<QuadExt> {
    if p < 4 {
        return Err(Error::Domain(format!("need p >= 4, got {p}")));
    }
    let pr = Rational::from_integer(BigInt::from(p));
    let half = Rational::new(1.into(), 2.into());
    QuadExt::new(
        (&pr - Rational::from_integer(2.into())) * &half,
        half,
        &pr * &pr - Rational::from_integer(4.into()) * &pr,
    )
}

/// Index of the width piece containing `mu` for the even trivial bundle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PieceIndex {
    /// `mu >= p`: the constant piece.
    Zero,
    /// `mu` in `[gamma_n/gamma_{n-1}, gamma_{n-1}/gamma_{n-2})`, `n >= 2`.
    N(u64),
    /// `mu <= lambda`: the volume-bound region.
    Infinity,
}

/// Locates `mu >= 1` among the interval pieces.
///
/// The ratios `gamma_n/gamma_{n-1}` decrease strictly to `lambda`, so the
/// scan below `p` terminates as soon as `mu > lambda`; values at or below
/// `lambda` (which for `p = 4` means exactly `mu = 1`) fall in the volume
/// region.
pub fn interval_index(p: u32, mu: &Rational) -> Result<PieceIndex> {
    if mu < &Rational::one() {
        return Err(Error::Domain(format!("need mu >= 1, got {mu}")));
    }
    let s = Sequences::new(p)?;
    if mu >= &Rational::from_integer(BigInt::from(p)) {
        return Ok(PieceIndex::Zero);
    }
    let lambda = lambda_of(p)?;
    if QuadExt::from_rational(mu.clone()) <= lambda {
        return Ok(PieceIndex::Infinity);
    }
    if p == 4 {
        // gamma_n = (n+1)^2, so the endpoint test is b(n+1)^2 <= a n^2 for
        // mu = a/b; binary-search the smallest such n instead of walking a
        // table that grows linearly as mu approaches 1.
        let (a, b) = (mu.numer(), mu.denom());
        let holds = |n: &BigInt| b * (n + 1) * (n + 1) <= a * n * n;
        let mut lo = BigInt::from(2);
        // n* <= (mu + 3)/(2(mu - 1)) + 2, because 1/(sqrt(mu) - 1) is below
        // that bound for every mu > 1
        let mut hi = ((mu + Rational::from_integer(3.into()))
            / (Rational::from_integer(2.into()) * (mu - Rational::one())))
        .ceil()
        .to_integer()
            + 2;
        debug_assert!(holds(&hi));
        while lo < hi {
            let mid: BigInt = (&lo + &hi) / 2;
            if holds(&mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let n = u64::try_from(lo)
            .map_err(|_| Error::Domain("mu is unworkably close to 1".into()))?;
        return Ok(PieceIndex::N(n));
    }
    let mut n = 2u64;
    loop {
        if mu >= &s.gamma_ratio(n as i64) {
            return Ok(PieceIndex::N(n));
        }
        n += 1;
    }
}

/// A point of the reduced two-variable orbit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitState {
    pub r: Rational,
    pub s: Rational,
}

/// The initial orbit point for parameters `(mu, c)`:
/// `R1 = 1 - mu + (p-1)(2c-1)`, `S1 = mu - 1 - (p-2)(2c-1)`.
pub fn initial_orbit_state(p: u32, mu: &Rational, c: &Rational) -> OrbitState {
    let d0 = Rational::from_integer(2.into()) * c - Rational::one();
    let one = Rational::one();
    OrbitState {
        r: &one - mu + Rational::from_integer(BigInt::from(p - 1)) * &d0,
        s: mu - &one - Rational::from_integer(BigInt::from(p - 2)) * &d0,
    }
}

/// One application of the orbit matrix `((p-3, -1), (-(p-4), 1))`.
pub fn orbit_step(p: u32, state: &OrbitState) -> OrbitState {
    let pm3 = Rational::from_integer(BigInt::from(p) - 3);
    let pm4 = Rational::from_integer(BigInt::from(p) - 4);
    OrbitState {
        r: &pm3 * &state.r - &state.s,
        s: -&pm4 * &state.r + &state.s,
    }
}

/// The orbit `[s, M s, ..., M^steps s]`.
pub fn orbit_trace(p: u32, start: &OrbitState, steps: usize) -> Vec<OrbitState> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(start.clone());
    for _ in 0..steps {
        let next = orbit_step(p, out.last().expect("nonempty"));
        out.push(next);
    }
    out
}

/// The quadratic form `S^2 - (p-4) R S + (4-p) R^2` preserved by every orbit step.
pub fn orbit_invariant(p: u32, state: &OrbitState) -> Rational {
    let pm4 = Rational::from_integer(BigInt::from(p) - 4);
    &state.s * &state.s - &pm4 * &state.r * &state.s - &pm4 * &state.r * &state.r
}

/// One identity check of [`verify_identities`].
#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub pass: bool,
    pub first_failure: Option<u64>,
}

/// Result of the full identity suite for one `p`.
#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub p: u32,
    pub n_max: u64,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Verifies, exactly and for all `n <= n_max`:
/// `beta_n^2 = 4p a_n a_{n-1} + 1`; the completed-square form
/// `(a_n+a_{n-1})^2/p - (a_n+a_{n-1})/p = a_n a_{n-1}`;
/// `beta_n = 2(a_n+a_{n-1}) - 1`; closure of crossed sequences
/// `x_n y_n - x_{n+n0} y_{n-n0}` under the driving recurrence; and
/// `gamma_n = a_n beta_{n+1} - a_{n+1} beta_n`.
pub fn verify_identities(p: u32, n_max: u64) -> Result<IdentityReport> {
    let s = Sequences::new(p)?;
    let mut checks = Vec::new();

    let mut record = |name: &'static str, first_failure: Option<u64>| {
        checks.push(IdentityCheck { name, pass: first_failure.is_none(), first_failure });
    };

    let mut fail = None;
    for n in 1..=n_max {
        let beta = s.beta(n);
        let rhs = 4 * BigInt::from(p) * s.a(n) * s.a(n - 1) + 1;
        if &beta * &beta != rhs {
            fail = Some(n);
            break;
        }
    }
    record("beta_n^2 = 4p a_n a_{n-1} + 1", fail);

    let mut fail = None;
    for n in 1..=n_max {
        let sum = s.a(n) + s.a(n - 1);
        if &sum * &sum - &sum != BigInt::from(p) * s.a(n) * s.a(n - 1) {
            fail = Some(n);
            break;
        }
    }
    record("(a_n+a_{n-1})^2/p - (a_n+a_{n-1})/p = a_n a_{n-1}", fail);

    let mut fail = None;
    for n in 1..=n_max {
        if s.beta(n) != 2 * (s.a(n) + s.a(n - 1)) - 1 {
            fail = Some(n);
            break;
        }
    }
    record("beta_n = 2(a_n+a_{n-1}) - 1", fail);

    // Crossed sequences phi_n = x_n y_n - x_{n+n0} y_{n-n0} close under the
    // recurrence for (x, y) in {(a, beta), (a, gamma)} and n0 in {1, 2}.
    let mut fail = None;
    let pm1 = BigInt::from(p - 1);
    'outer: for n0 in [1u64, 2] {
        for gamma_side in [false, true] {
            let phi = |n: u64| -> BigInt {
                let y = |m: u64| if gamma_side { s.gamma(m as i64) } else { s.beta(m) };
                s.a(n) * y(n) - s.a(n + n0) * y(n - n0)
            };
            for n in n0..=n_max.saturating_sub(3) {
                let lhs = phi(n + 3);
                let rhs = &pm1 * (phi(n + 2) - phi(n + 1)) + phi(n);
                if lhs != rhs {
                    fail = Some(n);
                    break 'outer;
                }
            }
        }
    }
    record("crossed sequences close under the recurrence", fail);

    let mut fail = None;
    for n in 0..=n_max {
        if s.gamma(n as i64) != s.a(n) * s.beta(n + 1) - s.a(n + 1) * s.beta(n) {
            fail = Some(n);
            break;
        }
    }
    record("gamma_n = a_n beta_{n+1} - a_{n+1} beta_n", fail);

    Ok(IdentityReport { p, n_max, checks })
}

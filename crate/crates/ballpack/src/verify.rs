//! Self-verification suites: the recurrence identity checks, the
//! bisection-vs-closed-form oracle grid, obstruction-class verification, and
//! the capacity cross-checks. The command-line `verify` subcommand and the
//! acceptance tests both run these.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::One;

use crate::ech::{ellipsoid_cap_at_int, index_window_check, polydisk_cap_at};
use crate::exact::{QuadExt, Rational};
use crate::reduce::{
    ball_vector, obstruction_from_outcome, reduce, width_by_bisection, BundleKind, BundleSpec,
    Verdict, DEFAULT_MAX_ITER,
};
use crate::seq::{verify_identities, Sequences};
use crate::widths::{obstructions, width_at};
use crate::{e8, Result};

/// One named check with its outcome.
#[derive(Clone, Debug)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// A batch of checks.
#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub lines: Vec<CheckLine>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    pub fn push(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.lines.push(CheckLine { name: name.into(), pass, detail: detail.into() });
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let tag = if l.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag} {}", l.name));
            if !l.detail.is_empty() {
                out.push_str(&format!(": {}", l.detail));
            }
            out.push('\n');
        }
        out
    }
}

/// Recurrence identity suite over a range of `p`.
pub fn identities_suite(p_lo: u32, p_hi: u32, n_max: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    for p in p_lo..=p_hi {
        let r = verify_identities(p, n_max)?;
        for c in &r.checks {
            let detail = match c.first_failure {
                Some(n) => format!("first failure at n = {n}"),
                None => format!("n <= {n_max}"),
            };
            report.push(format!("identities p={p}: {}", c.name), c.pass, detail);
        }
    }
    Ok(report)
}

/// Timing and agreement statistics for one oracle grid.
#[derive(Clone, Debug)]
pub struct OracleStats {
    pub points: usize,
    pub mismatches: Vec<String>,
    pub point_times: Vec<Duration>,
    pub total: Duration,
}

impl OracleStats {
    pub fn max_point(&self) -> Duration {
        self.point_times.iter().max().copied().unwrap_or_default()
    }

    pub fn count_slower_than(&self, budget: Duration) -> usize {
        self.point_times.iter().filter(|t| **t > budget).count()
    }
}

/// Runs the bisection oracle against the closed-form width on the grid
/// `mu = step, 2*step, ...` over the bundle's domain up to `mu = k`,
/// requiring the bracket to contain the closed form exactly.
pub fn oracle_grid(kind: BundleKind, k: u32, denom: u64, step_denom: u32) -> Result<OracleStats> {
    let step = Rational::new(BigInt::one(), step_denom.into());
    let lo_index: u32 = match kind {
        BundleKind::Trivial => step_denom,
        BundleKind::Twisted => 1,
    };
    let start = Instant::now();
    let mut stats = OracleStats {
        points: 0,
        mismatches: Vec::new(),
        point_times: Vec::new(),
        total: Duration::ZERO,
    };
    for i in lo_index..=k * step_denom {
        let mu = &step * Rational::from_integer(i.into());
        let spec = BundleSpec::new(kind, mu.clone())?;
        let t0 = Instant::now();
        let (lo, hi) = width_by_bisection(&spec, k, denom)?;
        let w = width_at(&spec, k)?;
        let contained = QuadExt::from_rational(lo.clone()) <= w
            && w <= QuadExt::from_rational(hi.clone());
        stats.point_times.push(t0.elapsed());
        stats.points += 1;
        if !contained {
            stats.mismatches.push(format!(
                "{} k={k} mu={mu}: width {w} outside bracket [{lo}, {hi}]",
                kind.name()
            ));
        }
    }
    stats.total = start.elapsed();
    Ok(stats)
}

/// Oracle grids over both bundles and a range of ball counts.
pub fn oracle_suite(k_lo: u32, k_hi: u32, denom: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    for kind in [BundleKind::Trivial, BundleKind::Twisted] {
        for k in k_lo..=k_hi {
            let stats = oracle_grid(kind, k, denom, 8)?;
            let detail = format!(
                "{} points, max {:.1?}{}",
                stats.points,
                stats.max_point(),
                if stats.mismatches.is_empty() {
                    String::new()
                } else {
                    format!("; first mismatch: {}", stats.mismatches[0])
                }
            );
            report.push(
                format!("oracle {} k={k}", kind.name()),
                stats.mismatches.is_empty(),
                detail,
            );
        }
    }
    Ok(report)
}

fn mu_grid(kind: BundleKind, k: u32, step_denom: u32) -> Vec<Rational> {
    let lo = match kind {
        BundleKind::Trivial => step_denom,
        BundleKind::Twisted => 1,
    };
    (lo..=k.max(2) * step_denom)
        .map(|i| Rational::new(i.into(), step_denom.into()))
        .collect()
}

/// Verifies every catalog obstruction class over parameter grids, re-derives
/// boundary obstructions through the reduction word, and checks the
/// root-lattice families wholesale.
pub fn obstructions_suite(k_max: u32) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();

    let mut catalog_classes = 0usize;
    let mut catalog_bad: Option<String> = None;
    for kind in [BundleKind::Trivial, BundleKind::Twisted] {
        for k in 1..=k_max {
            for mu in mu_grid(kind, k, 4) {
                let spec = BundleSpec::new(kind, mu.clone())?;
                // obstructions() verifies internally; re-check here so the
                // suite fails loudly instead of panicking.
                let obs = obstructions(&spec, k)?;
                let w = width_at(&spec, k)?;
                let v = crate::reduce::ball_vector_qx(&spec, k, &w)?;
                for e in &obs.classes {
                    catalog_classes += 1;
                    let ok = e.self_intersection() == QuadExt::from_int(-1)
                        && e.k_pairing() == QuadExt::from_int(1)
                        && v.pairing(e)? == QuadExt::zero();
                    if !ok && catalog_bad.is_none() {
                        catalog_bad =
                            Some(format!("{} k={k} mu={mu}: class {e}", kind.name()));
                    }
                }
            }
        }
    }
    report.push(
        "catalog classes are exceptional and vanish at the width",
        catalog_bad.is_none(),
        catalog_bad.unwrap_or_else(|| format!("{catalog_classes} classes checked")),
    );

    let mut extracted = 0usize;
    let mut extraction_bad: Option<String> = None;
    for kind in [BundleKind::Trivial, BundleKind::Twisted] {
        for k in 1..=k_max {
            for mu in mu_grid(kind, k, 4) {
                let spec = BundleSpec::new(kind, mu.clone())?;
                let w = width_at(&spec, k)?;
                let Some(w_rat) = w.as_rational() else { continue };
                let v = ball_vector(&spec, k, w_rat)?;
                let o = reduce(&v, DEFAULT_MAX_ITER)?;
                if o.verdict != Verdict::Boundary {
                    continue;
                }
                for z in o.final_class.zero_tail_indices() {
                    let e = obstruction_from_outcome(&o, z)?;
                    extracted += 1;
                    let ok = e.self_intersection() == QuadExt::from_int(-1)
                        && e.k_pairing() == QuadExt::from_int(1)
                        && v.pairing(&e)? == QuadExt::zero();
                    if !ok && extraction_bad.is_none() {
                        extraction_bad =
                            Some(format!("{} k={k} mu={mu} zero={z}", kind.name()));
                    }
                }
            }
        }
    }
    report.push(
        "boundary-extracted classes pair to zero with their input",
        extraction_bad.is_none(),
        extraction_bad.unwrap_or_else(|| format!("{extracted} extractions checked")),
    );

    let mut family_bad: Option<String> = None;
    for tag in [e8::FamilyTag::I, e8::FamilyTag::II, e8::FamilyTag::III] {
        for n in -50..=50i64 {
            let e = e8::e8_family(tag, n);
            let ok = e.self_intersection() == QuadExt::from_int(-1)
                && e.k_pairing() == QuadExt::from_int(1)
                && e8::e8_bijection(&e8::e8_bijection_inverse(&e)?) == e;
            if !ok && family_bad.is_none() {
                family_bad = Some(format!("{tag:?} n={n}"));
            }
        }
    }
    report.push(
        "root-lattice families are exceptional for |n| <= 50",
        family_bad.is_none(),
        family_bad.unwrap_or_else(|| "303 classes checked".into()),
    );

    Ok(report)
}

/// Capacity cross-checks: the distinguished index identities connecting the
/// width bounds to the two capacity sequences, plus the index-window audit.
pub fn ech_suite() -> Result<SuiteReport> {
    let mut report = SuiteReport::default();

    let mut bad: Option<String> = None;
    let mut checked = 0usize;
    for p in 4u32..=8 {
        let s = Sequences::new(p)?;
        for n in 2u64..=6 {
            let an = s.a(n);
            let an1 = s.a(n - 1);
            let index = u64::try_from((&an + 1) * (&an1 + 1) - 1).expect("fits");
            let ell = ellipsoid_cap_at_int(2 * p as u64, index);
            if ell != s.beta(n) {
                bad.get_or_insert(format!("ellipsoid index p={p} n={n}: {ell}"));
                continue;
            }
            let lo = s.gamma_ratio(n as i64);
            let hi = s.gamma_ratio(n as i64 - 1);
            let quarter = (&hi - &lo) / Rational::from_integer(4.into());
            for step in 0..4 {
                let mu = &lo + &quarter * Rational::from_integer(step.into());
                let poly = polydisk_cap_at(&Rational::one(), &mu, index);
                let expect = Rational::from_integer(an.clone())
                    + Rational::from_integer(an1.clone()) * &mu;
                checked += 1;
                if poly != expect {
                    bad.get_or_insert(format!("polydisk index p={p} n={n} mu={mu}"));
                } else if &poly / Rational::from_integer(s.beta(n)) != s.w(n, &mu) {
                    bad.get_or_insert(format!("ratio p={p} n={n} mu={mu}"));
                }
            }
        }
    }
    report.push(
        "distinguished capacities reproduce the width bounds",
        bad.is_none(),
        bad.unwrap_or_else(|| format!("{checked} grid points over p in 4..=8, n in 2..=6")),
    );

    // The odd-index identity M_{2p+1}(1, mu) = mu + p holds for mu above a
    // p-dependent threshold (all of [1, p+1] at p = 4); below it a lattice
    // point with n >= 2 is strictly cheaper. The width derivation only needs
    // the identity on the linear piece, which sits above the threshold.
    let mut bad: Option<String> = None;
    for (p, lo8) in [(4u64, 8u64), (5, 16), (6, 16), (7, 16), (8, 24)] {
        for num in lo8..=8 * (p + 1) {
            let mu = Rational::new(num.into(), 8.into());
            let got = polydisk_cap_at(&Rational::one(), &mu, 2 * p + 1);
            if got != &mu + Rational::from_integer(p.into()) {
                bad.get_or_insert(format!("p={p} mu={mu}: got {got}"));
            }
        }
    }
    report.push(
        "polydisk capacity at the odd index is mu + p on its validity range",
        bad.is_none(),
        bad.unwrap_or_default(),
    );

    let mut bad: Option<String> = None;
    for k in 8u64..=16 {
        for x in 1..=5u64 {
            let r = index_window_check(k, x)?;
            if !(r.minus.full_agrees && r.plus.lower_agrees) {
                bad.get_or_insert(format!("k={k} x={x}: {r:?}"));
            }
        }
    }
    report.push(
        "printed index windows agree with enumeration (lower endpoints)",
        bad.is_none(),
        bad.unwrap_or_default(),
    );

    Ok(report)
}

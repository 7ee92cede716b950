//! CSV and JSON emitters: reduction traces, width profiles, sequence tables,
//! orbit traces, width sweeps, and capacity listings. All numbers are printed
//! exactly and re-parse to equal values.

use serde_json::{json, Value};

use crate::ech::{CapSequence, EmbedVerdict};
use crate::exact::Rational;
use crate::lattice::{HClass, Move};
use crate::reduce::{BundleKind, BundleSpec, ReductionOutcome};
use crate::seq::{initial_orbit_state, orbit_trace, OrbitState, Sequences};
use crate::widths::{width_at, PieceFormula, WidthProfile};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Reduction run as JSON lines: one header object, then one object per move
/// carrying the class reached after that move.
pub fn trace_json_lines(input: &HClass, outcome: &ReductionOutcome) -> Result<String> {
    let mut out = String::new();
    let header = json!({
        "schemaVersion": SCHEMA_VERSION,
        "input": input.to_string(),
        "verdict": outcome.verdict.name(),
        "finalClass": outcome.final_class.to_string(),
        "cremonaMoves": outcome.iterations,
        "exteriorReason": outcome.exterior_reason.map(|r| format!("{r:?}")),
    });
    out.push_str(&header.to_string());
    out.push('\n');
    let mut current = input.clone();
    for m in outcome.word.moves() {
        current = m.apply(&current)?;
        let line = match m {
            Move::Cremona => json!({ "move": "cremona", "class": current.to_string() }),
            Move::Permute(sigma) => {
                json!({ "move": "permute", "sigma": sigma, "class": current.to_string() })
            }
        };
        out.push_str(&line.to_string());
        out.push('\n');
    }
    Ok(out)
}

fn formula_json(f: &PieceFormula) -> Value {
    match f {
        PieceFormula::Constant(c) => json!({ "type": "constant", "value": c.to_string() }),
        PieceFormula::Linear { slope, intercept } => json!({
            "type": "linear",
            "slope": slope.to_string(),
            "intercept": intercept.to_string(),
        }),
        PieceFormula::VolumeBound => json!({ "type": "volume" }),
    }
}

/// Width profile as a JSON document.
pub fn profile_json(profile: &WidthProfile) -> Value {
    let pieces: Vec<Value> = profile
        .pieces
        .iter()
        .map(|p| {
            json!({
                "muLo": p.lo.to_string(),
                "muHi": p.hi.as_ref().map(|h| h.to_string()),
                "loClosed": p.lo_closed,
                "hiClosed": p.hi_closed,
                "formula": formula_json(&p.formula),
            })
        })
        .collect();
    json!({
        "schemaVersion": SCHEMA_VERSION,
        "bundle": profile.bundle.name(),
        "k": profile.k,
        "truncated": profile.truncated,
        "pieces": pieces,
    })
}

/// Embedding verdict as a JSON document.
pub fn embed_json(v: &EmbedVerdict) -> Value {
    json!({
        "schemaVersion": SCHEMA_VERSION,
        "embeds": v.embeds,
        "method": v.method.name(),
        "prefixLen": v.prefix_len,
        "witnessIndex": v.witness_index,
        "certified": v.certified,
    })
}

/// Table of the four sequence families, one row per index.
pub fn sequence_table_csv(p: u32, n_max: u64) -> Result<String> {
    let s = Sequences::new(p)?;
    let mut out = String::from("n,a_n,beta_n,gamma_n,x_n\n");
    for n in 0..=n_max {
        out.push_str(&format!("{n},{},{},{},{}\n", s.a(n), s.beta(n), s.gamma(n as i64), s.x(n)));
    }
    Ok(out)
}

/// Orbit of the initial point for `(mu, c)` under the reduction-cycle matrix.
pub fn orbit_csv(p: u32, mu: &Rational, c: &Rational, steps: usize) -> Result<String> {
    if p < 4 {
        return Err(Error::Domain(format!("orbit needs p >= 4, got {p}")));
    }
    let start = initial_orbit_state(p, mu, c);
    let mut out = String::from("n,R,S\n");
    for (n, OrbitState { r, s }) in orbit_trace(p, &start, steps).iter().enumerate() {
        out.push_str(&format!("{},{r},{s}\n", n + 1));
    }
    Ok(out)
}

/// The volume curve `(R(c, c^2 p), S(c, c^2 p))` sampled over a rational grid.
pub fn volume_curve_csv(
    p: u32,
    c_from: &Rational,
    c_to: &Rational,
    step: &Rational,
) -> Result<String> {
    use num_traits::Signed;
    if p < 4 {
        return Err(Error::Domain(format!("volume curve needs p >= 4, got {p}")));
    }
    if !step.is_positive() {
        return Err(Error::Domain("step must be positive".into()));
    }
    let mut out = String::from("c,mu,R,S\n");
    let mut c = c_from.clone();
    while &c <= c_to {
        let mu = &c * &c * Rational::from_integer(p.into());
        let OrbitState { r, s } = initial_orbit_state(p, &mu, &c);
        out.push_str(&format!("{c},{mu},{r},{s}\n"));
        c += step;
    }
    Ok(out)
}

/// Width sweep `(mu, w_k(mu))` over a rational grid.
pub fn width_sweep_csv(
    kind: BundleKind,
    k: u32,
    mu_from: &Rational,
    mu_to: &Rational,
    step: &Rational,
) -> Result<String> {
    use num_traits::Signed;
    if !step.is_positive() {
        return Err(Error::Domain("step must be positive".into()));
    }
    let mut out = String::from("mu,width\n");
    let mut mu = mu_from.clone();
    while &mu <= mu_to {
        let spec = BundleSpec::new(kind, mu.clone())?;
        let w = width_at(&spec, k)?;
        out.push_str(&format!("{mu},{w}\n"));
        mu += step;
    }
    Ok(out)
}

/// Capacity sequence as `(index, value)` rows.
pub fn caps_csv(seq: &CapSequence, count: usize) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in seq.prefix(count).iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

//! Command-line surface for the exact ball-packing library: reduction runs,
//! width/packing/stability queries, obstruction listings, capacity
//! comparisons, sweeps, and self-verification suites.
//!
//! All numbers are read and printed exactly ("p/q" rationals, or the
//! normalized quadratic form "(P+Q*sqrt(D))/R"). Exit codes: 0 success, 1
//! domain or usage errors, 2 internal assertion failures.

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ballpack::ech::{embeds_ellipsoid_in_polydisk, CapSequence};
use ballpack::emit;
use ballpack::exact::{parse_rational, Rational};
use ballpack::lattice::HClass;
use ballpack::reduce::{
    reduce, width_by_bisection, BundleKind, BundleSpec, DEFAULT_MAX_ITER,
};
use ballpack::verify;
use ballpack::widths::{
    obstructions, packing_number, stability, width_at, width_profile, Parity,
};
use ballpack::QuadExt;

#[derive(Parser)]
#[command(name = "ballpack", version, about = "Exact ball packings of rational ruled 4-manifolds")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BundleArg {
    Trivial,
    Twisted,
}

impl From<BundleArg> for BundleKind {
    fn from(b: BundleArg) -> Self {
        match b {
            BundleArg::Trivial => BundleKind::Trivial,
            BundleArg::Twisted => BundleKind::Twisted,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Closed,
    Bisect,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParityArg {
    Odd,
    Even,
    All,
}

impl From<ParityArg> for Parity {
    fn from(p: ParityArg) -> Self {
        match p {
            ParityArg::Odd => Parity::Odd,
            ParityArg::Even => Parity::Even,
            ParityArg::All => Parity::All,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Ellipsoid,
    Polydisk,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Identities,
    Oracle,
    Obstructions,
    Ech,
}

#[derive(Subcommand)]
enum Command {
    /// Run the reduction algorithm on a class literal "a0; a1, a2, ..."
    Reduce {
        #[arg(long)]
        class: String,
        /// Cremona-move budget (default from BALLPACK_MAX_ITER or 10^6)
        #[arg(long)]
        max_iter: Option<u64>,
    },
    /// Generalized Gromov width of k equal balls
    Width {
        #[arg(long, value_enum)]
        bundle: BundleArg,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        mu: String,
        #[arg(long, value_enum, default_value = "closed")]
        method: MethodArg,
        /// Bracket denominator for --method bisect
        #[arg(long, default_value_t = 1u64 << 40)]
        denom: u64,
        /// Append a decimal rendering with this many digits (display only)
        #[arg(long)]
        approx: Option<u32>,
    },
    /// Packing number of k equal balls
    Packing {
        #[arg(long, value_enum)]
        bundle: BundleArg,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        mu: String,
        #[arg(long)]
        approx: Option<u32>,
    },
    /// Stability number for the given parity class
    Stability {
        #[arg(long, value_enum)]
        bundle: BundleArg,
        #[arg(long, value_enum, default_value = "all")]
        parity: ParityArg,
        #[arg(long)]
        mu: String,
    },
    /// Obstructing exceptional classes at the active width piece (JSON)
    Obstructions {
        #[arg(long, value_enum)]
        bundle: BundleArg,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        mu: String,
    },
    /// Width profile pieces (JSON)
    Profile {
        #[arg(long, value_enum)]
        bundle: BundleArg,
        #[arg(long)]
        k: u32,
        /// Members materialized from infinite piece families
        #[arg(long, default_value_t = 8)]
        depth: u32,
    },
    /// Capacity sequence of an ellipsoid or polydisk (CSV)
    EchCaps {
        #[arg(long, value_enum)]
        shape: ShapeArg,
        /// Two positive rationals "a,b"
        #[arg(long)]
        params: String,
        #[arg(long)]
        count: usize,
    },
    /// Decide an ellipsoid-into-polydisk embedding (JSON)
    Embed {
        /// Ellipsoid parameters "a,b"
        #[arg(long)]
        ellipsoid: String,
        /// Polydisk parameters "s,t"
        #[arg(long)]
        polydisk: String,
        /// Prefix length for the dominance check (forces the prefix method)
        #[arg(long)]
        prefix: Option<usize>,
    },
    /// Orbit of the reduction-cycle dynamics, or the volume curve (CSV)
    Orbit {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        mu: Option<String>,
        #[arg(long)]
        c: Option<String>,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Emit the volume curve (R(c, c^2 p), S(c, c^2 p)) instead
        #[arg(long)]
        volume_curve: bool,
        #[arg(long)]
        c_from: Option<String>,
        #[arg(long)]
        c_to: Option<String>,
        #[arg(long)]
        step: Option<String>,
    },
    /// Width as a function of mu over a rational grid (CSV)
    Sweep {
        #[arg(long, value_enum)]
        bundle: BundleArg,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        mu_from: String,
        #[arg(long)]
        mu_to: String,
        #[arg(long)]
        step: String,
    },
    /// Self-verification suites (pass/fail report)
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 4)]
        p_min: u32,
        #[arg(long, default_value_t = 12)]
        p_max: u32,
        #[arg(long, default_value_t = 50)]
        n_max: u64,
        #[arg(long, default_value_t = 1)]
        k_min: u32,
        #[arg(long, default_value_t = 16)]
        k_max: u32,
        #[arg(long, default_value_t = 1u64 << 40)]
        denom: u64,
    },
}

fn default_max_iter() -> u64 {
    std::env::var("BALLPACK_MAX_ITER")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_ITER)
}

fn spec_of(bundle: BundleArg, mu: &str) -> ballpack::Result<BundleSpec> {
    BundleSpec::new(bundle.into(), parse_rational(mu)?)
}

fn parse_pair(s: &str) -> ballpack::Result<(Rational, Rational)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| ballpack::Error::Parse(format!("expected \"a,b\", got {s:?}")))?;
    Ok((parse_rational(a)?, parse_rational(b)?))
}

fn with_approx(value: &QuadExt, digits: Option<u32>) -> String {
    match digits {
        Some(d) => format!("{value}\t{}", value.to_decimal(d)),
        None => value.to_string(),
    }
}

fn run() -> ballpack::Result<i32> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own message; usage problems are domain errors
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            e.print().expect("stderr");
            return Ok(if is_help { 0 } else { 1 });
        }
    };
    match cli.cmd {
        Command::Reduce { class, max_iter } => {
            let v: HClass = class.parse()?;
            let outcome = reduce(&v, max_iter.unwrap_or_else(default_max_iter))?;
            print!("{}", emit::trace_json_lines(&v, &outcome)?);
        }
        Command::Width { bundle, k, mu, method, denom, approx } => {
            let spec = spec_of(bundle, &mu)?;
            match method {
                MethodArg::Closed => {
                    let w = width_at(&spec, k)?;
                    println!("{}", with_approx(&w, approx));
                }
                MethodArg::Bisect => {
                    let (lo, hi) = width_by_bisection(&spec, k, denom)?;
                    println!("{}", json!([lo.to_string(), hi.to_string()]));
                }
            }
        }
        Command::Packing { bundle, k, mu, approx } => {
            let spec = spec_of(bundle, &mu)?;
            let p = packing_number(&spec, k)?;
            println!("{}", with_approx(&QuadExt::from_rational(p), approx));
        }
        Command::Stability { bundle, parity, mu } => {
            let spec = spec_of(bundle, &mu)?;
            println!("{}", stability(&spec, parity.into())?);
        }
        Command::Obstructions { bundle, k, mu } => {
            let spec = spec_of(bundle, &mu)?;
            let w = width_at(&spec, k)?;
            let obs = obstructions(&spec, k)?;
            let classes: Vec<_> = obs
                .classes
                .iter()
                .map(|e| {
                    json!({
                        "class": e.to_string(),
                        "selfIntersection": e.self_intersection().to_string(),
                        "kPairing": e.k_pairing().to_string(),
                    })
                })
                .collect();
            println!(
                "{}",
                json!({
                    "schemaVersion": emit::SCHEMA_VERSION,
                    "bundle": spec.kind.name(),
                    "k": k,
                    "mu": spec.mu.to_string(),
                    "width": w.to_string(),
                    "volumeOnly": obs.volume_only,
                    "classes": classes,
                })
            );
        }
        Command::Profile { bundle, k, depth } => {
            let profile = width_profile(bundle.into(), k, depth)?;
            println!("{}", emit::profile_json(&profile));
        }
        Command::EchCaps { shape, params, count } => {
            let (a, b) = parse_pair(&params)?;
            let seq = match shape {
                ShapeArg::Ellipsoid => CapSequence::ellipsoid(a, b)?,
                ShapeArg::Polydisk => CapSequence::polydisk(a, b)?,
            };
            print!("{}", emit::caps_csv(&seq, count));
        }
        Command::Embed { ellipsoid, polydisk, prefix } => {
            let (a, b) = parse_pair(&ellipsoid)?;
            let (s, t) = parse_pair(&polydisk)?;
            let verdict = embeds_ellipsoid_in_polydisk(&a, &b, &s, &t, prefix)?;
            println!("{}", emit::embed_json(&verdict));
        }
        Command::Orbit { p, mu, c, steps, volume_curve, c_from, c_to, step } => {
            if volume_curve {
                let missing = || ballpack::Error::Domain(
                    "--volume-curve needs --c-from, --c-to, --step".into(),
                );
                let c_from = parse_rational(&c_from.ok_or_else(missing)?)?;
                let c_to = parse_rational(&c_to.ok_or_else(missing)?)?;
                let step = parse_rational(&step.ok_or_else(missing)?)?;
                print!("{}", emit::volume_curve_csv(p, &c_from, &c_to, &step)?);
            } else {
                let missing =
                    || ballpack::Error::Domain("orbit needs --mu and --c".into());
                let mu = parse_rational(&mu.ok_or_else(missing)?)?;
                let c = parse_rational(&c.ok_or_else(missing)?)?;
                print!("{}", emit::orbit_csv(p, &mu, &c, steps)?);
            }
        }
        Command::Sweep { bundle, k, mu_from, mu_to, step } => {
            let from = parse_rational(&mu_from)?;
            let to = parse_rational(&mu_to)?;
            let step = parse_rational(&step)?;
            print!("{}", emit::width_sweep_csv(bundle.into(), k, &from, &to, &step)?);
        }
        Command::Verify { suite, p_min, p_max, n_max, k_min, k_max, denom } => {
            let report = match suite {
                SuiteArg::Identities => verify::identities_suite(p_min, p_max, n_max)?,
                SuiteArg::Oracle => verify::oracle_suite(k_min, k_max, denom)?,
                SuiteArg::Obstructions => verify::obstructions_suite(k_max)?,
                SuiteArg::Ech => verify::ech_suite()?,
            };
            print!("{}", report.render());
            if !report.passed() {
                return Ok(2);
            }
        }
    }
    Ok(0)
}

fn main() {
    let code = match std::panic::catch_unwind(run) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(_) => 2,
    };
    std::process::exit(code);
}

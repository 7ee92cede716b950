//! End-to-end tests against the compiled binary.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ballpack"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "command failed: {args:?}\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).expect("utf-8")
}

#[test]
fn width_spot_value() {
    assert_eq!(stdout_of(&["width", "--bundle", "trivial", "--k", "8", "--mu", "2"]).trim(), "12/17");
    // an irrational width prints in the normalized quadratic form
    let w = stdout_of(&["width", "--bundle", "trivial", "--k", "9", "--mu", "1"]);
    assert_eq!(w.trim(), "(0+1*sqrt(2))/3");
}

#[test]
fn width_bisect_brackets_the_closed_form() {
    let out = stdout_of(&[
        "width", "--bundle", "trivial", "--k", "8", "--mu", "2", "--method", "bisect", "--denom",
        "1099511627776",
    ]);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    let parse = |s: &str| -> (i128, i128) {
        let (n, d) = s.split_once('/').unwrap();
        (n.parse().unwrap(), d.parse().unwrap())
    };
    let (lon, lod) = parse(v[0].as_str().unwrap());
    let (hin, hid) = parse(v[1].as_str().unwrap());
    // lo <= 12/17 <= hi, cross-multiplied
    assert!(lon * 17 <= 12 * lod);
    assert!(12 * hid <= hin * 17);
}

#[test]
fn stability_and_packing() {
    assert_eq!(
        stdout_of(&["stability", "--bundle", "trivial", "--parity", "all", "--mu", "8/7"]).trim(),
        "9"
    );
    assert_eq!(
        stdout_of(&["packing", "--bundle", "trivial", "--k", "7", "--mu", "8/7"]).trim(),
        "1"
    );
    let with_approx =
        stdout_of(&["packing", "--bundle", "trivial", "--k", "1", "--mu", "2", "--approx", "4"]);
    assert_eq!(with_approx.trim(), "1/4\t0.2500");
}

#[test]
fn embed_verdict_json() {
    let out = stdout_of(&["embed", "--ellipsoid", "2/3,6", "--polydisk", "1,2"]);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["embeds"], true);
    assert_eq!(v["method"], "width-exact");
}

#[test]
fn reduce_trace_round_trips() {
    let out = stdout_of(&["reduce", "--class", "3; 1, 1, 1, 0"]);
    let header: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(header["verdict"], "boundary");
    assert_eq!(header["cremonaMoves"], 0);
}

#[test]
fn csv_emitters() {
    let caps = stdout_of(&["ech-caps", "--shape", "polydisk", "--params", "1,2", "--count", "6"]);
    let rows: Vec<&str> = caps.lines().collect();
    assert_eq!(rows[0], "index,value");
    assert_eq!(rows[6], "5,4");

    let sweep = stdout_of(&[
        "sweep", "--bundle", "twisted", "--k", "9", "--mu-from", "2", "--mu-to", "3", "--step",
        "1/2",
    ]);
    assert!(sweep.lines().any(|l| l == "2,20/27"));

    let orbit = stdout_of(&["orbit", "--p", "4", "--mu", "2", "--c", "3/5", "--steps", "2"]);
    assert_eq!(orbit.lines().count(), 4);
}

#[test]
fn profile_json_parses() {
    let out = stdout_of(&["profile", "--bundle", "twisted", "--k", "8", "--depth", "3"]);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["truncated"], true);
    assert!(v["pieces"].as_array().unwrap().len() > 10);
}

#[test]
fn verify_suite_exit_codes() {
    let ok = run(&["verify", "--suite", "identities", "--p-min", "4", "--p-max", "5", "--n-max", "10"]);
    assert!(ok.status.success());
}

#[test]
fn domain_and_usage_errors_exit_one() {
    let out = run(&["width", "--bundle", "trivial", "--k", "8", "--mu", "1/2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu >= 1"));

    let out = run(&["width", "--bundle", "trivial", "--k", "8", "--mu", "nonsense"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["width", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

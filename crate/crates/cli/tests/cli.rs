use std::io::Write;
use std::process::{Command, Output};

use tempfile::NamedTempFile;

const L1: &str = "A=lp(1);A=lp(1)";

fn kfunc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kfunc"))
        .args(args)
        .env_remove("KFUNC_CAP")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn one() -> NamedTempFile {
    field("0 0\n0 0 1.0\n")
}

#[test]
fn kfunc_single_coefficient() {
    let f = one();
    let o = kfunc(&["kfunc", "--field", f.path().to_str().unwrap(), "--pair", L1, "--t", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "i,1.0\n");
}

#[test]
fn kfunc_infinite_q_is_case_iv() {
    let f = field("0 0\n0 0 3\n0 1 1\n");
    let p = f.path().to_str().unwrap();
    let pair = "s=0,q=1,A=lp(1);s=0,q=inf,A=lp(2)";
    let o = kfunc(&["kfunc", "--field", p, "--pair", pair, "--t", "1"]);
    assert!(stdout(&o).starts_with("iv,"), "{}", stdout(&o));
    let worked = ["kfunc", "--field", p, "--pair", "0,1,lp(1);0,inf,lp(1)", "--t", "1", "--method", "oracle"];
    assert_eq!(stdout(&kfunc(&worked)), "i,4.0\n");
    let mut max = worked.to_vec();
    max.extend(["--form", "max"]);
    assert_eq!(stdout(&kfunc(&max)), "i,3.0\n");
}

#[test]
fn malformed_pair_names_token() {
    let f = one();
    let o = kfunc(&["kfunc", "--field", f.path().to_str().unwrap(), "--pair", "A=lp(1);A=wat(3)", "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wat(3)"));
}

#[test]
fn unreadable_field_is_usage_error() {
    let o = kfunc(&["kfunc", "--field", "/nonexistent/field.txt", "--pair", L1, "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fast_path_rejects_foreign_form() {
    let f = one();
    let o = kfunc(&[
        "kfunc", "--field", f.path().to_str().unwrap(), "--pair", "0,1,lp(1);0,2,lp(2)", "--t", "1", "--form", "sum",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let oracle = kfunc(&[
        "kfunc", "--field", f.path().to_str().unwrap(), "--pair", "0,1,lp(1);0,2,lp(2)", "--t", "1", "--form", "sum",
        "--method", "oracle",
    ]);
    assert_eq!(stdout(&oracle), "iii,1.0\n");
}

#[test]
fn oracle_cap_from_env_and_flag() {
    let f = field("0 0\n0 0 1\n0 1 1\n0 2 1\n");
    let p = f.path().to_str().unwrap();
    let args = ["kfunc", "--field", p, "--pair", L1, "--t", "1", "--method", "oracle"];
    let env = Command::new(env!("CARGO_BIN_EXE_kfunc")).args(args).env("KFUNC_CAP", "2").output().unwrap();
    assert_eq!(env.status.code(), Some(3));
    let mut flagged = args.to_vec();
    flagged.extend(["--cap", "2"]);
    assert_eq!(kfunc(&flagged).status.code(), Some(3));
    assert_eq!(kfunc(&args).status.code(), Some(0));
}

#[test]
fn curve_rows_increase() {
    let f = one();
    let o = kfunc(&[
        "curve", "--field", f.path().to_str().unwrap(), "--pair", L1, "--tmin", "0.01", "--tmax", "100", "--ppd", "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (t, v) = l.split_once(',').unwrap();
            (t.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 17);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
    assert!(rows.iter().all(|(t, v)| (v - t.min(1.0)).abs() <= 1e-11));
}

#[test]
fn interp_min_curve() {
    let f = one();
    let p = f.path().to_str().unwrap();
    let o = kfunc(&["interp", "--field", p, "--pair", L1, "--theta", "0.5", "--eta", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    let (norm, tail) = row.split_once(',').unwrap();
    let (norm, tail): (f64, f64) = (norm.parse().unwrap(), tail.parse().unwrap());
    assert!((norm / 4.0 - 1.0).abs() < 0.01);
    assert!(tail < 0.01);
    let sup = kfunc(&["interp", "--field", p, "--pair", L1, "--theta", "0.5", "--eta", "inf"]);
    assert!(stdout(&sup).lines().nth(1).unwrap().starts_with("1.0,"));
}

#[test]
fn interp_requires_theta() {
    let f = one();
    let o = kfunc(&["interp", "--field", f.path().to_str().unwrap(), "--pair", L1, "--eta", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_zero_trials() {
    let o = kfunc(&["verify", "--pair", L1, "--trials", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("trial,t,fast,oracle,ratio\n"));
    assert!(text.contains("# 0 instances"));
}

#[test]
fn verify_single_coefficient_ratios_are_one() {
    let o = kfunc(&["verify", "--pair", L1, "--trials", "3", "--jmax", "0", "--size", "1"]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines().skip(1).filter(|l| !l.starts_with('#')) {
        assert!(line.ends_with(",1.0"), "{line}");
    }
}

#[test]
fn verify_case_iii_batch() {
    let o = kfunc(&["verify", "--pair", "0,1,lp(1);0.5,2,lp(2)", "--trials", "8", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("case iii"));
}

#[test]
fn verify_refuses_above_cap() {
    let o = kfunc(&["verify", "--pair", L1, "--size", "20"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--cap"));
}

#[test]
fn gen_round_trips_through_kfunc() {
    let out = NamedTempFile::new().unwrap();
    let p = out.path().to_str().unwrap();
    assert_eq!(kfunc(&["gen", "--seed", "4", "--size", "3", "--out", p]).status.code(), Some(0));
    let printed = stdout(&kfunc(&["gen", "--seed", "4", "--size", "3"]));
    assert_eq!(std::fs::read_to_string(p).unwrap(), printed);
    let fast = kfunc(&["kfunc", "--field", p, "--pair", L1, "--t", "0.7"]);
    let oracle = kfunc(&["kfunc", "--field", p, "--pair", L1, "--t", "0.7", "--method", "oracle"]);
    assert_eq!(fast.status.code(), Some(0));
    assert!(stdout(&fast).starts_with("i,"));
    let v = |o: &Output| -> f64 { stdout(o).trim().split_once(',').unwrap().1.parse().unwrap() };
    assert!(v(&fast) <= 8.0 * v(&oracle) && v(&oracle) <= 8.0 * v(&fast));
}

#[test]
fn output_is_deterministic() {
    let args = ["verify", "--pair", "0,1,lp(1);0,inf,lp(2)", "--trials", "4", "--seed", "9"];
    assert_eq!(kfunc(&args).stdout, kfunc(&args).stdout);
}

#[test]
fn norm_verb() {
    let f = field("0 1\n0 0 3\n1 0 4\n");
    let p = f.path().to_str().unwrap();
    assert_eq!(stdout(&kfunc(&["norm", "--field", p, "--space", "s=0,q=2,A=lp(1)"])), "5.0\n");
    assert_eq!(stdout(&kfunc(&["norm", "--field", p, "--space", "s=0,q=2,A=lp(1)", "--power"])), "25.0\n");
    let o = kfunc(&["norm", "--field", p, "--space", "s=0,q=inf,A=lp(1)", "--power"]);
    assert_eq!(o.status.code(), Some(2));
}

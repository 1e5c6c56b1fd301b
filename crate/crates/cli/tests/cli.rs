use serde_json::Value;
use std::process::{Command, Output};

fn csk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csk"))
        .args(args)
        .env_remove("CSK_QUAD_RELTOL")
        .output()
        .expect("run csk")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).filter(|r| r.starts_with(' ')))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
        .trim()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn laws_listing() {
    let o = csk(&["laws", "--json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let laws = v.as_array().unwrap();
    assert_eq!(laws.len(), 7);
    for l in laws {
        for key in ["name", "params", "domain"] {
            assert!(l.get(key).is_some(), "{key} missing in {l}");
        }
    }
    let atoms = stdout(&csk(&["laws", "--filter", "atom"]));
    let names: Vec<&str> = atoms.lines().filter(|l| !l.starts_with(' ')).collect();
    assert_eq!(names, ["mp", "bernoulli"]);
}

#[test]
fn describe_reports_domains_and_bounds() {
    let s = stdout(&csk(&["describe", "--law", "semicircle"]));
    assert_eq!(field(&s, "m0"), "0");
    assert_eq!(field(&s, "m_plus"), "1");
    assert_eq!(field(&s, "m_plus_bold"), "1");
    assert_eq!(field(&s, "M_plus_bold"), "inf");

    let s = stdout(&csk(&["describe", "--law", "isc:p=1"]));
    assert_eq!(field(&s, "m_plus"), "-1");
    assert_eq!(field(&s, "m_plus_bold"), "-0.5");
    assert_eq!(field(&s, "M_plus_bold"), "inf");

    let o = csk(&["describe", "--law", "bernoulli", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["m_plus", "m_plus_bold", "M_plus_bold"] {
        assert!((v[key].as_f64().unwrap() - 1.0).abs() < 1e-9, "{key}: {}", v[key]);
    }
}

#[test]
fn semicircle_v1_table() {
    let o = csk(&["table", "--law", "semicircle", "--quantity", "v1", "--m1", "0.5", "--grid", "0.5:0.1:1.5"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("mbar,v1,reason\n"));
    let rows = csv_rows(&s);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][1], "null");
    assert!(!rows[0][2].is_empty());
    for r in &rows[1..10] {
        let mb: f64 = r[0].parse().unwrap();
        let v: f64 = r[1].parse().unwrap();
        assert!((v - (1.25 - 0.5 * mb)).abs() < 1e-7, "{r:?}");
    }
}

#[test]
fn isc_atom_weight_table() {
    let s = stdout(&csk(&["table", "--law", "isc:p=1", "--quantity", "atom_weight", "--grid", "-0.4:0.1:1.0"]));
    for r in csv_rows(&s) {
        let m: f64 = r[0].parse().unwrap();
        if m == 0.0 {
            // 𝕍(0)/0 = 0: no tilted member exists there
            assert_eq!(r[1], "null");
            continue;
        }
        let want = (1.0 + 2.0 * m).max(0.0) / ((1.0 + m) * (1.0 + m));
        assert!((r[1].parse::<f64>().unwrap() - want).abs() < 1e-7, "{r:?}");
    }
}

#[test]
fn mp_pv_table_csv_and_json_agree() {
    let args = ["table", "--law", "mp:a=0.5", "--quantity", "pv", "--grid", "0.1:0.1:0.9"];
    let csv_out = stdout(&csk(&args));
    let mut json_args = args.to_vec();
    json_args.push("--json");
    let json: Value = serde_json::from_slice(&csk(&json_args).stdout).unwrap();
    let rows = csv_rows(&csv_out);
    let objs = json.as_array().unwrap();
    assert_eq!(rows.len(), objs.len());
    for (r, o) in rows.iter().zip(objs) {
        let m: f64 = r[0].parse().unwrap();
        let v: f64 = r[1].parse().unwrap();
        assert!((v - (1.0 + 0.5 * m)).abs() < 1e-6);
        // identical to the last bit
        assert_eq!(v, o["pv"].as_f64().unwrap());
        assert_eq!(m, o["m"].as_f64().unwrap());
    }
    let fmt = stdout(&csk(&[&args[..], &["--format", "json"]].concat()));
    assert_eq!(serde_json::from_str::<Value>(&fmt).unwrap(), json);
}

#[test]
fn iterate_domains() {
    let cases = [("semicircle", "0.5", 0.5, 1.5), ("free_ressel", "-3", -3.0, -1.5)];
    for (law, m1, lo, hi) in cases {
        let o = csk(&["iterate", "--law", law, "--m1", m1, "--domain", "--json"]);
        assert!(o.status.success(), "{law}");
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!((v["lower"].as_f64().unwrap() - lo).abs() < 1e-9);
        assert!((v["upper"].as_f64().unwrap() - hi).abs() < 1e-6, "{law}: {v}");
    }
}

#[test]
fn iterate_abel_v1() {
    let s = stdout(&csk(&["iterate", "--law", "free_abel", "--m1", "-1", "--quantity", "v1", "--grid", "-0.9:0.1:-0.1"]));
    let rows = csv_rows(&s);
    assert_eq!(rows.len(), 9);
    for r in rows {
        let mb: f64 = r[0].parse().unwrap();
        let want = mb / (mb + 1.0) * (1.0 - mb) * (mb - 1.0);
        let got: f64 = r[1].parse().unwrap();
        assert!((got - want).abs() < 1e-6 * want.abs().max(1.0), "{mb}: {got} vs {want}");
    }
}

#[test]
fn verify_semicircle_all() {
    let o = csk(&["verify", "--law", "semicircle", "--suite", "all", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.len() >= 25);
    assert!(checks.iter().all(|c| c["status"] == "pass"));
    assert!(v["wall_time_ms"].is_u64());
}

#[test]
fn verify_isc_extend_covers_regimes() {
    let o = csk(&["verify", "--law", "isc:p=1", "--suite", "extend", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for m in ["-2", "-0.75", "-0.25", "0.5", "2"] {
        for what in ["mass", "mean"] {
            let want = format!("extend.qbar[m={m}].{what}");
            assert!(names.contains(&want.as_str()), "{want}");
        }
    }
}

#[test]
fn verify_bernoulli_cannot_extend() {
    let o = csk(&["verify", "--law", "bernoulli", "--suite", "extend", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let c = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "extend.cannot_extend").unwrap();
    assert_eq!(c["status"], "pass");
}

#[test]
fn verify_failure_exit_code() {
    let o = csk(&["verify", "--law", "semicircle", "--suite", "transforms", "--tol", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(csk(&["describe", "--law", "gamma"]).status.code(), Some(2));
    assert_eq!(csk(&["table", "--law", "semicircle", "--quantity", "v1", "--grid", "0:1:2"]).status.code(), Some(2));
    assert_eq!(csk(&["table", "--law", "semicircle", "--quantity", "pv", "--grid", "1:0:2"]).status.code(), Some(2));
    assert_eq!(csk(&["verify", "--suite", "everything"]).status.code(), Some(2));
    assert_eq!(csk(&["iterate", "--law", "semicircle", "--m1", "3"]).status.code(), Some(2));
    assert_eq!(csk(&["bogus"]).status.code(), Some(2));
}

#[test]
fn numeric_failure_exit_3() {
    let o = csk(&["verify", "--law", "free_abel", "--suite", "transforms", "--max-subdiv", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

#[test]
fn env_tolerance_is_read() {
    let o = Command::new(env!("CARGO_BIN_EXE_csk"))
        .args(["describe", "--law", "semicircle"])
        .env("CSK_QUAD_RELTOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_csk"))
        .args(["describe", "--law", "semicircle"])
        .env("CSK_QUAD_RELTOL", "1e-8")
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn deterministic_output() {
    let args = ["verify", "--law", "arcsine", "--suite", "iterate"];
    let strip = |o: Output| {
        stdout(&o)
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(csk(&args)), strip(csk(&args)));
}

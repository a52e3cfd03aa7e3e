use std::path::PathBuf;
use std::process::Command;

use dipole_gs_cli::config::{validate, RunConfig};
use dipole_gs::quadform::Pole;
use dipole_gs::AngularCoefficient;
use proptest::prelude::*;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_dipole-gs");

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(BIN).args(args).env_remove("DIPOLE_GS_CACHE").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap_or(Value::Null);
    (out.status.code().unwrap(), v, text)
}

const ANTI: &str = "n = 4\npole = 2\n\n[[poles]]\na = [0.0, 0.0, 0.0, -2.0]\nh = { kind = \"dipole\", lambda = 1.1369535602222698, d = [0.0, 0.0, 0.0, 1.0] }\n\n[[poles]]\na = [0.0, 0.0, 0.0, 2.0]\nh = { kind = \"dipole\", lambda = 1.1369535602222698, d = [0.0, 0.0, 0.0, -1.0] }\n";

#[test]
fn hardy_reports_a_converged_root() {
    let (code, v, _) = run(&["hardy", "--N", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["status"], "COMPUTED");
    let lam = v["result"]["lambda_n"]["value"].as_f64().unwrap();
    assert!((lam - 0.26386302).abs() < 1e-7);
    assert!(v["result"]["residual"].as_f64().unwrap() < v["result"]["tol"].as_f64().unwrap());
}

#[test]
fn duplicate_poles_are_a_schema_violation() {
    let body = "n = 3\n[[poles]]\na = [0.0, 0.0, 1.0]\nh = { kind = \"constant\", n = 3, c = 0.1 }\n[[poles]]\na = [0.0, 0.0, 1.0]\nh = { kind = \"constant\", n = 3, c = 0.1 }\n";
    let p = scratch("dup.toml", body);
    let (code, v, _) = run(&["check-rn", "--config", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(v["status"], "ERROR");
    assert_eq!(v["error"]["kind"], "SchemaViolation");
    assert_eq!(v["error"]["violations"][0]["path"], "poles[1].a");
    assert_eq!(v["error"]["violations"][0]["line"], 6);
}

#[test]
fn unknown_key_and_non_unit_direction() {
    let p = scratch("bogus.toml", "n = 4\nbogus = 1\n");
    let (code, v, _) = run(&["sobolev", "--config", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(v["error"]["message"].as_str().unwrap().contains("bogus"));
    let p = scratch("nonunit.toml", "n = 3\nh = { kind = \"dipole\", lambda = 0.5, d = [0.0, 0.0, 2.0] }\n");
    let (code, v, _) = run(&["mu1", "--config", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(v["error"]["violations"][0]["path"], "h.d");
}

#[test]
fn dimension_flag_must_agree_with_config() {
    let p = scratch("n3.toml", "n = 3\n");
    let (code, _, _) = run(&["sobolev", "--config", p.to_str().unwrap(), "--N", "4"]);
    assert_eq!(code, 1);
    let (code, v, _) = run(&["sobolev", "--config", p.to_str().unwrap(), "--N", "3"]);
    assert_eq!(code, 0);
    assert!(v["result"]["sobolev"]["error"].as_f64().unwrap() < 1e-8);
}

#[test]
fn antiparallel_dipoles_pass_and_parallel_fail() {
    let p = scratch("anti.toml", ANTI);
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join("anti.json");
    let (code, _, _) = run(&["check-dipoles", "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["status"], "PASS");
    assert_eq!(v["result"]["verdict"]["overall"], "PASS");
    let par = ANTI.replace("d = [0.0, 0.0, 0.0, -1.0]", "d = [0.0, 0.0, 0.0, 1.0]");
    let p = scratch("par.toml", &par);
    let (code, v, _) = run(&["check-dipoles", "--config", p.to_str().unwrap()]);
    assert_eq!(code, 2);
    let entries = v["result"]["verdict"]["entries"].as_array().unwrap();
    let e29 = entries.iter().find(|e| e["id"] == "eq:29").unwrap();
    assert_eq!(e29["status"], "FAIL");
}

fn unit(v: &[f64]) -> Vec<f64> {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / r).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn config_round_trips(n in 3usize..7, k in 1usize..4, seed in prop::collection::vec(-3.0f64..3.0, 24), lam in 0.01f64..0.5) {
        let mut cfg = RunConfig::minimal(n);
        for i in 0..k {
            let mut a = vec![0.0; n];
            a[n - 1] = i as f64 * 1.5 + seed[i];
            let d: Vec<f64> = (0..n).map(|j| seed[(i * n + j) % seed.len()] + 0.1).collect();
            cfg.poles.push(Pole { a, h: AngularCoefficient::dipole(lam, unit(&d)) });
        }
        cfg.pole = Some(k);
        let text = cfg.to_toml();
        let back = validate(&text);
        prop_assert!(back.is_ok(), "{:?}\n{}", back.err(), text);
        let back = back.unwrap();
        prop_assert_eq!(&validate(&back.to_toml()).unwrap(), &back);
        prop_assert_eq!(back.poles, cfg.poles);
    }
}

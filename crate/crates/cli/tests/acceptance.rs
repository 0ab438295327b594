//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use yk_core::adversary::{joint_probs_opaque, joint_probs_translucent};
use yk_core::mathkit::SnrValue;
use yk_core::protocol::{decision_rate_analytic, error_rate_analytic, run_session, SessionConfig, ThresholdPolicy};
use yk_core::public_channel::PublicLog;
use yk_core::reconciliation::{error_correct, CascadeConfig};
use yk_core::rng::{SeedTree, Stage};
use yk_core::security::{
    analytic_translucent_report, boundary_eve_error, boundary_eve_error_opaque, distance_limit, eve_max_snr,
    required_bob_snr, snr_tolerance, tau_from_joint, tau_translucent, throughput,
};
use yk_core::signal::{NoiseRegime, SignalParams};
use yk_core::sweep::TRADEOFF_SNR_DB;
use yk_core::Execution;

const YK: &str = env!("CARGO_BIN_EXE_yk");
/// Fixed before any run was inspected.
const SEED: u64 = 1;

type Criterion<'a> = (u32, &'static str, Duration, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn yk(args: &[&str]) -> std::process::Output {
    Command::new(YK).args(args).output().expect("run yk")
}

fn criterion_1() -> Outcome {
    let ee = boundary_eve_error(0.15).unwrap();
    Outcome { pass: within(ee, 0.27, 0.005), detail: format!("ee_min(0.15) = {ee:.5}") }
}

fn criterion_2() -> Outcome {
    let t = snr_tolerance(0.15, 1e-3).unwrap();
    let t01 = snr_tolerance(0.01, 1e-3).unwrap();
    let pass = within(t.db, 8.0, 0.5)
        && within(t.bob.snr.linear, 0.057, 0.002)
        && within(t.eve_max_snr.linear, 0.38, 0.01)
        && within(t01.db, 10.0, 0.5);
    Outcome {
        pass,
        detail: format!(
            "e_B=0.15: {:.2} dB (Bob {:.4}, Eve {:.4}); e_B=0.01: {:.2} dB",
            t.db, t.bob.snr.linear, t.eve_max_snr.linear, t01.db
        ),
    }
}

fn criterion_3() -> Outcome {
    let ee = boundary_eve_error_opaque(0.1, 0.15).unwrap();
    let eve = eve_max_snr(ee).unwrap().linear;
    let bob = required_bob_snr(0.1, 1e-3).unwrap().snr.linear;
    let pass = within(ee, 0.12, 0.005) && within(eve, 1.35, 0.05) && within(bob, 0.089, 0.003);
    Outcome { pass, detail: format!("ee_min = {ee:.5}, Eve SNR < {eve:.4}, Bob SNR > {bob:.4}") }
}

fn criterion_4() -> Outcome {
    let beta = SnrValue::from_db(-9.25).unwrap().beta();
    let e = error_rate_analytic(beta, 10.0).unwrap();
    let f = decision_rate_analytic(beta, 10.0).unwrap();
    let pass = within(e, 0.072, 0.002) && within(f, 1e-3, 1e-4);
    Outcome { pass, detail: format!("e = {e:.5}, F = {f:.4e}") }
}

fn report_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn criterion_5(dir: &Path) -> Outcome {
    let report = dir.join("c5.json");
    let seed = SEED.to_string();
    let out = yk(&[
        "simulate", "--snr-db", "0", "--eve-snr-db", "0", "--threshold-m", "2", "--n-bits", "1000000",
        "--attack", "translucent", "--tap-fraction", "0.5", "--seed", &seed, "--report", report.to_str().unwrap(),
    ]);
    let j = report_json(&report);
    let get = |k: &str| j[k].as_f64().unwrap();
    let (f, eb, ee, r, fr) = (get("f_plus"), get("eb"), get("ee"), get("r"), get("fr"));
    let analytic = analytic_translucent_report(0.0, 2.0, 0.0).unwrap();
    let checks = [
        ("F", within(f, 0.160, 0.002)),
        ("e_B", within(eb, 0.0084, 0.002)),
        ("e_E", within(ee, 0.159, 0.002)),
        ("R", (0.29..=0.40).contains(&r)),
        ("analytic R", (0.29..=0.40).contains(&analytic.r)),
        ("F*R", within(fr, 0.045, 0.015)),
        ("exit", out.status.code() == Some(0)),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Outcome {
        pass: failed.is_empty(),
        detail: format!(
            "F = {f:.5}, e_B = {eb:.5}, e_E = {ee:.5}, R = {r:.4} (analytic {:.4}), F*R = {fr:.5} (analytic {:.5}){}",
            analytic.r,
            analytic.throughput_fraction,
            if failed.is_empty() { String::new() } else { format!("; out of range: {}", failed.join(", ")) }
        ),
    }
}

fn criterion_6(dir: &Path) -> Outcome {
    let (report, alice, bob) = (dir.join("c6.json"), dir.join("c6_alice.hex"), dir.join("c6_bob.hex"));
    let seed = SEED.to_string();
    let out = yk(&[
        "simulate", "--snr-db", "-9", "--eve-snr-db", "0", "--threshold-m", "2", "--n-bits", "1000000",
        "--attack", "translucent", "--tap-fraction", "0.5", "--seed", &seed,
        "--report", report.to_str().unwrap(),
        "--alice-key", alice.to_str().unwrap(),
        "--bob-key", bob.to_str().unwrap(),
    ]);
    let r = report_json(&report)["r"].as_f64().unwrap();
    let no_keys = !alice.exists() && !bob.exists();
    let pass = out.status.code() == Some(2) && r <= 0.0 && no_keys;
    Outcome { pass, detail: format!("R = {r:.4}, exit {:?}, key files absent: {no_keys}", out.status.code()) }
}

fn criterion_7() -> Outcome {
    let thermal = distance_limit(9.0, 0.2, NoiseRegime::Thermal).unwrap();
    let shot = distance_limit(9.0, 0.2, NoiseRegime::Shot).unwrap();
    Outcome { pass: thermal == 22.5 && shot == 45.0, detail: format!("thermal {thermal} km, shot {shot} km") }
}

fn criterion_8() -> Outcome {
    let a = throughput(0.04, 1.0, 50e6);
    let b = throughput(0.04, 1.0, 10e9);
    Outcome { pass: a == 2e6 && b == 4e8, detail: format!("{a} b/s at 50 Mb/s, {b} b/s at 10 Gb/s") }
}

fn eq12_grid() -> bool {
    (0..50).all(|i| {
        (0..50).all(|j| {
            (0..=10).all(|k| {
                let p = joint_probs_opaque(0.5 * i as f64 / 50.0, 0.5 * j as f64 / 49.0, k as f64 / 10.0).unwrap();
                (p.p00 + p.p01 + p.p10 + p.p11 - 1.0).abs() < 1e-12
                    && (p.p00 + p.p01 - 0.5).abs() < 1e-12
                    && (p.p00 + p.p10 - 0.5).abs() < 1e-12
            })
        })
    })
}

fn tau_identity() -> bool {
    (0..=500).all(|i| {
        let e = i as f64 * 1e-3;
        (tau_from_joint(&joint_probs_translucent(e).unwrap()).unwrap() - tau_translucent(e).unwrap()).abs() < 1e-12
    })
}

fn monte_carlo_grid() -> (usize, usize) {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = 200_000;
    let (mut checked, mut outside) = (0, 0);
    for &snr in &TRADEOFF_SNR_DB {
        let params = SignalParams::from_snr_db(snr, NoiseRegime::Thermal).unwrap();
        let beta = params.beta();
        for m in [0.0, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0] {
            let cfg = SessionConfig::new(n, params, ThresholdPolicy::new(m).unwrap());
            let s = run_session(&cfg, SEED, Execution::Parallel).unwrap().stats;
            let (a, b) = (normal.sf((m + 1.0) * beta), normal.sf((m - 1.0) * beta));
            let f = a + b;
            let sigma_f = (f * (1.0 - f) / n as f64).sqrt().max(1.0 / n as f64);
            checked += 1;
            outside += usize::from((s.decision_rate_f - f).abs() > 3.0 * sigma_f);
            if s.n_sifted > 0 {
                let e = a / f;
                let sigma_e = (e * (1.0 - e) / s.n_sifted as f64).sqrt().max(1.0 / s.n_sifted as f64);
                checked += 1;
                outside += usize::from((s.error_rate_e - e).abs() > 3.0 * sigma_e);
            }
        }
    }
    (checked, outside)
}

fn reconciliation_trials() -> usize {
    let seeds = SeedTree::new(SEED);
    let ok = Execution::Parallel.map_indexed(1000, |i| {
        let mut rng = seeds.stream(Stage::Sampling, i as u64);
        let a: Vec<bool> = (0..10_000).map(|_| rng.random()).collect();
        let b: Vec<bool> = a.iter().map(|&x| x ^ (rng.random::<f64>() < 0.12)).collect();
        let mut log = PublicLog::new();
        let mut rng = seeds.stream(Stage::Reconciliation, i as u64);
        let (ra, rb, _) = error_correct(&a, &b, 0.12, &CascadeConfig::default(), &mut log, &mut rng).unwrap();
        ra == rb
    });
    ok.iter().filter(|&&x| x).count()
}

fn replay_identical(dir: &Path) -> bool {
    let run = |tag: &str| -> Vec<Vec<u8>> {
        let names = ["json", "alice.hex", "bob.hex", "transcript.csv", "log.csv"].map(|s| dir.join(format!("replay_{tag}_{s}")));
        let p = |i: usize| names[i].to_str().unwrap().to_owned();
        let out = yk(&[
            "simulate", "--n-bits", "200000", "--seed", "424242", "--report", &p(0), "--alice-key", &p(1),
            "--bob-key", &p(2), "--transcript", &p(3), "--public-log", &p(4),
        ]);
        assert_eq!(out.status.code(), Some(0));
        names.iter().map(|n| std::fs::read(n).unwrap()).collect()
    };
    let (a, b) = (run("a"), run("b"));
    let seq = {
        let path = dir.join("replay_seq_alice.hex");
        let out = yk(&["simulate", "--sequential", "--n-bits", "200000", "--seed", "424242", "--report", "/dev/null", "--alice-key", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(path).unwrap()
    };
    a == b && a[1] == a[2] && a[1] == seq
}

fn criterion_9(dir: &Path) -> Outcome {
    let eq12 = eq12_grid();
    let tau = tau_identity();
    let (checked, outside) = monte_carlo_grid();
    let agreed = reconciliation_trials();
    let replay = replay_identical(dir);
    let pass = eq12 && tau && outside == 0 && agreed >= 999 && replay;
    Outcome {
        pass,
        detail: format!(
            "joint normalization {eq12}, tau identity {tau}, MC grid {}/{checked} within 3 sigma, reconciliation {agreed}/1000, replay {replay}",
            checked - outside
        ),
    }
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let criteria: Vec<Criterion> = vec![
        (1, "translucent boundary", Duration::from_secs(1), Box::new(criterion_1)),
        (2, "SNR tolerance", Duration::from_secs(1), Box::new(criterion_2)),
        (3, "opaque boundary", Duration::from_secs(1), Box::new(criterion_3)),
        (4, "threshold tradeoff point", Duration::from_secs(1), Box::new(criterion_4)),
        (5, "experimental operating point", Duration::from_secs(30), Box::new(|| criterion_5(dir.path()))),
        (6, "security failure mode", Duration::from_secs(30), Box::new(|| criterion_6(dir.path()))),
        (7, "link budget", Duration::from_secs(1), Box::new(criterion_7)),
        (8, "throughput", Duration::from_secs(1), Box::new(criterion_8)),
        (9, "property suites", Duration::from_secs(300), Box::new(|| criterion_9(dir.path()))),
    ];
    let mut failures = 0;
    for (id, name, budget, check) in &criteria {
        let t0 = Instant::now();
        let outcome = check();
        let elapsed = t0.elapsed();
        let pass = outcome.pass && elapsed < *budget;
        failures += usize::from(!pass);
        println!(
            "{} [{id}] {name}: {} ({:.3} s, budget {} s)",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {}/{} passed in {:.1} s", criteria.len() - failures, criteria.len(), start.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}

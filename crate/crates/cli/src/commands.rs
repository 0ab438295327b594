use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use yk_core::adversary::{intensity_audit, AttackConfig, DEFAULT_AUDIT_TOLERANCE};
use yk_core::bits::to_hex;
use yk_core::pipeline::{simulate, SimulationConfig, SimulationOutcome, Verdict};
use yk_core::protocol::{SessionConfig, ThresholdPolicy};
use yk_core::security::RateReport;
use yk_core::signal::{launch_for_received, tap, NoiseRegime, SignalParams};
use yk_core::sweep::{boundary_grid, tradeoff_grid, BoundaryRow, Grid, TradeoffRow};
use yk_core::Execution;

use crate::config::{AttackChoice, RunConfig};
use crate::UsageError;

pub const EXIT_INSECURE: u8 = 2;
pub const EXIT_RECONCILIATION: u8 = 3;
pub const EXIT_NO_SIFTED: u8 = 5;
pub const EXIT_NO_KEY: u8 = 6;

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_csv<'a>(path: Option<&Path>, header: &str, rows: impl Iterator<Item = String> + 'a) -> Result<()> {
    let mut out = open_output(path)?;
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn analyze_tradeoff(snr_db: &[f64], m: Grid, output: Option<&Path>, exec: Execution) -> Result<()> {
    let rows = tradeoff_grid(snr_db, &m, exec)?;
    write_csv(output, TradeoffRow::CSV_HEADER, rows.iter().map(TradeoffRow::csv_row))
}

pub fn analyze_boundary(eb: Grid, rate_levels: &[f64], opaque_eb: &[f64], output: Option<&Path>, exec: Execution) -> Result<()> {
    let rows = boundary_grid(&eb, rate_levels, opaque_eb, exec)?;
    write_csv(output, BoundaryRow::CSV_HEADER, rows.iter().map(BoundaryRow::csv_row))
}

/// Session settings and Eve's effective SNR for a resolved run.
pub fn build_session(cfg: &RunConfig) -> Result<(SessionConfig, Option<f64>)> {
    let regime: NoiseRegime = cfg.regime.into();
    let bob = SignalParams::from_snr_db(cfg.snr_db, regime)?;
    let policy = ThresholdPolicy::new(cfg.threshold_m)?;
    if cfg.cheat_gamma.is_some() && cfg.attack != AttackChoice::Opaque {
        return Err(UsageError("--cheat-gamma requires --attack opaque".into()).into());
    }
    let eve_at = |default: SignalParams| -> Result<SignalParams> {
        Ok(match cfg.eve_snr_db {
            Some(db) => SignalParams::from_snr_db(db, regime)?,
            None => default,
        })
    };
    let (session, eve) = match cfg.attack {
        AttackChoice::None => (SessionConfig::new(cfg.n_bits, bob, policy), None),
        AttackChoice::Translucent => {
            let kept = 1.0 - cfg.tap_fraction;
            if !(cfg.tap_fraction > 0.0 && cfg.tap_fraction < 1.0) {
                return Err(UsageError(format!("tap fraction must lie in (0,1), got {}", cfg.tap_fraction)).into());
            }
            let launch = launch_for_received(&bob, kept)?;
            let eve = eve_at(tap(&launch, kept)?.1)?;
            (SessionConfig::new(cfg.n_bits, launch, policy).with_attack(AttackConfig::translucent(cfg.tap_fraction, eve)), Some(eve))
        }
        AttackChoice::Opaque => {
            let eve = eve_at(bob)?;
            let mut attack = AttackConfig::opaque(cfg.eta, eve);
            if let Some(gamma) = cfg.cheat_gamma {
                attack = attack.with_cheat(gamma, ThresholdPolicy::new(cfg.eve_threshold_m)?);
            }
            (SessionConfig::new(cfg.n_bits, bob, policy).with_attack(attack), Some(eve))
        }
    };
    session.validate()?;
    let eve_db = eve.map(|p| p.snr().map(|s| s.db)).transpose()?;
    Ok((session, eve_db))
}

#[derive(Serialize)]
struct AuditSummary {
    too_bright: usize,
    too_dim: usize,
    allowed_false_positives: usize,
    passed: bool,
}

#[derive(Serialize)]
struct Report {
    verdict: Verdict,
    seed: u64,
    n_bits: usize,
    n_sifted: usize,
    bob_snr_db: f64,
    eve_snr_db: Option<f64>,
    threshold_m: f64,
    #[serde(flatten)]
    rates: Option<RateReport>,
    tau_collision: Option<f64>,
    analytic: Option<RateReport>,
    parity_bits_leaked: Option<usize>,
    final_key_bits: usize,
    intensity_audit: AuditSummary,
}

fn report(cfg: &RunConfig, seed: u64, eve_snr_db: Option<f64>, out: &SimulationOutcome) -> Result<Report> {
    let t = &out.transcript;
    let audit = intensity_audit(&t.bob_intensities, t.bob_params.mean_voltage_s, t.bob_params.noise_sigma, DEFAULT_AUDIT_TOLERANCE)?;
    Ok(Report {
        verdict: out.verdict,
        seed,
        n_bits: t.stats.n_raw,
        n_sifted: t.stats.n_sifted,
        bob_snr_db: cfg.snr_db,
        eve_snr_db,
        threshold_m: cfg.threshold_m,
        rates: out.report,
        tau_collision: out.tau_collision,
        analytic: out.analytic,
        parity_bits_leaked: out.reconciliation.map(|r| r.parity_bits_leaked),
        final_key_bits: out.alice_key.len(),
        intensity_audit: AuditSummary {
            too_bright: audit.n_too_bright,
            too_dim: audit.n_too_dim,
            allowed_false_positives: audit.allowed_false_positives,
            passed: audit.passed,
        },
    })
}

fn write_key(path: &Path, key: &[bool]) -> Result<()> {
    std::fs::write(path, format!("{}\n", to_hex(key))).with_context(|| format!("writing {}", path.display()))
}

/// Runs the full pipeline and returns the process exit code.
pub fn simulate_cmd(cfg: &RunConfig, exec: Execution) -> Result<u8> {
    let (session, eve_snr_db) = build_session(cfg)?;
    let seed = match cfg.seed {
        Some(s) => s,
        None => {
            let s = rand::random::<u64>();
            eprintln!("seed: {s}");
            s
        }
    };
    let sim = SimulationConfig { safety_bits: cfg.n_s, ..SimulationConfig::new(session, seed) };
    let out = simulate(&sim, exec)?;

    let rep = report(cfg, seed, eve_snr_db, &out)?;
    let mut w = open_output(cfg.report.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &rep)?;
    writeln!(w)?;
    w.flush()?;

    if let Some(p) = &cfg.transcript {
        let mut w = open_output(Some(p))?;
        out.transcript.write_records(&mut w)?;
        w.flush()?;
    }
    if let Some(p) = &cfg.public_log {
        let mut w = open_output(Some(p))?;
        out.transcript.public_log.write_records(&mut w)?;
        w.flush()?;
    }

    Ok(match out.verdict {
        Verdict::Secure => {
            if let Some(p) = &cfg.alice_key {
                write_key(p, &out.alice_key)?;
            }
            if let Some(p) = &cfg.bob_key {
                write_key(p, &out.bob_key)?;
            }
            0
        }
        Verdict::Insecure => EXIT_INSECURE,
        Verdict::ReconciliationAborted => EXIT_RECONCILIATION,
        Verdict::NoSiftedBits => EXIT_NO_SIFTED,
        Verdict::NoSecureKey => EXIT_NO_KEY,
    })
}

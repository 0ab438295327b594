//! Alice's transmitter, Bob's threshold receiver and public-channel
//! sifting, plus the analytic decision and error rates the Monte Carlo
//! runs converge to.

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{opaque_eavesdrop, relay_noise, translucent_eavesdrop, AttackConfig, AttackKind};
use crate::error::{domain, Error, Result};
use crate::exec::Execution;
use crate::mathkit::q_unchecked;
use crate::public_channel::{Message, PublicLog};
use crate::rng::{SeedTree, Stage};
use crate::signal::{encode_bit, gaussian, tap, SignalParams};

/// Decision threshold `V_th = m * S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub m: f64,
}

impl ThresholdPolicy {
    /// Zero threshold: every slot is conclusive.
    pub const ZERO: ThresholdPolicy = ThresholdPolicy { m: 0.0 };

    pub fn new(m: f64) -> Result<Self> {
        let p = Self { m };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m.is_finite() && self.m >= 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("threshold multiplier must be >= 0, got {}", self.m)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecisionOutcome {
    Zero,
    One,
    Inconclusive,
}

impl DecisionOutcome {
    pub fn bit(self) -> Option<bool> {
        match self {
            DecisionOutcome::Zero => Some(false),
            DecisionOutcome::One => Some(true),
            DecisionOutcome::Inconclusive => None,
        }
    }

    pub fn is_conclusive(self) -> bool {
        self != DecisionOutcome::Inconclusive
    }

    pub fn label(self) -> &'static str {
        match self {
            DecisionOutcome::Zero => "0",
            DecisionOutcome::One => "1",
            DecisionOutcome::Inconclusive => "?",
        }
    }
}

/// Three-way threshold rule; `|V| <= m S` is inconclusive.
pub fn decide(v: f64, s: f64, policy: ThresholdPolicy) -> DecisionOutcome {
    let th = policy.m * s;
    if v > th {
        DecisionOutcome::Zero
    } else if v < -th {
        DecisionOutcome::One
    } else {
        DecisionOutcome::Inconclusive
    }
}

fn check_beta_m(beta: f64, m: f64) -> Result<()> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(domain("beta", beta));
    }
    if !(m.is_finite() && m >= 0.0) {
        return Err(domain("m", m));
    }
    Ok(())
}

/// `F+ = Q((m+1) beta) + Q((m-1) beta)`.
pub fn decision_rate_analytic(beta: f64, m: f64) -> Result<f64> {
    check_beta_m(beta, m)?;
    Ok(q_unchecked((m + 1.0) * beta) + q_unchecked((m - 1.0) * beta))
}

/// `e = Q((m+1) beta) / F+`.
pub fn error_rate_analytic(beta: f64, m: f64) -> Result<f64> {
    check_beta_m(beta, m)?;
    let wrong = q_unchecked((m + 1.0) * beta);
    let right = q_unchecked((m - 1.0) * beta);
    if wrong + right == 0.0 {
        // deep tail: ratio of Gaussian tails -> exp(-2 m beta^2)
        return Ok(1.0 / (1.0 + (2.0 * m * beta * beta).exp()));
    }
    Ok(wrong / (wrong + right))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionStats {
    pub n_raw: usize,
    pub n_sifted: usize,
    pub n_errors: usize,
    pub decision_rate_f: f64,
    /// Errors over sifted slots only.
    pub error_rate_e: f64,
}

impl DecisionStats {
    pub fn from_counts(n_raw: usize, n_sifted: usize, n_errors: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Self {
            n_raw,
            n_sifted,
            n_errors,
            decision_rate_f: ratio(n_sifted, n_raw),
            error_rate_e: ratio(n_errors, n_sifted),
        }
    }

    /// One binomial standard deviation of the decision rate estimate.
    pub fn decision_rate_sigma(&self, f: f64) -> f64 {
        (f * (1.0 - f) / self.n_raw.max(1) as f64).sqrt()
    }

    pub fn error_rate_sigma(&self, e: f64) -> f64 {
        (e * (1.0 - e) / self.n_sifted.max(1) as f64).sqrt()
    }
}

/// Eve's zero-threshold statistics over the slots she measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveStats {
    pub n_measured: usize,
    pub n_conclusive: usize,
    pub n_errors: usize,
    pub error_rate: f64,
}

/// Where Alice's raw bits come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BitSource {
    #[default]
    Random,
    /// Fixed `1010...` pattern, for reproducing bench statistics only.
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub n_bits: usize,
    /// Signal as launched towards Bob, before any tap.
    pub channel: SignalParams,
    pub policy: ThresholdPolicy,
    pub attack: Option<AttackConfig>,
    pub source: BitSource,
}

impl SessionConfig {
    pub fn new(n_bits: usize, channel: SignalParams, policy: ThresholdPolicy) -> Self {
        Self { n_bits, channel, policy, attack: None, source: BitSource::Random }
    }

    pub fn with_attack(mut self, attack: AttackConfig) -> Self {
        self.attack = Some(attack);
        self
    }

    pub fn with_source(mut self, source: BitSource) -> Self {
        self.source = source;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bits == 0 {
            return Err(Error::Config("n_bits must be at least 1".into()));
        }
        self.channel.validate()?;
        self.policy.validate()?;
        if let Some(a) = &self.attack {
            a.validate()?;
        }
        Ok(())
    }

    /// Operating point at Bob's detector.
    pub fn bob_arm(&self) -> Result<SignalParams> {
        match &self.attack {
            Some(a) if a.kind == AttackKind::Translucent => Ok(tap(&self.channel, 1.0 - a.tap_fraction)?.0),
            _ => Ok(self.channel),
        }
    }
}

/// Full record of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub alice_bits: Vec<bool>,
    pub bob_voltages: Vec<f64>,
    pub bob_outcomes: Vec<DecisionOutcome>,
    /// Per-slot intensity monitor readings at Bob.
    pub bob_intensities: Vec<f64>,
    pub eve_outcomes: Option<Vec<DecisionOutcome>>,
    /// Opaque attack: which slots Eve intercepted.
    pub intercepted: Option<Vec<bool>>,
    pub sift_indices: Vec<usize>,
    pub sifted_alice: Vec<bool>,
    pub sifted_bob: Vec<bool>,
    /// Bob's key after error correction.
    pub reconciled_key: Vec<bool>,
    /// Bob's key after privacy amplification.
    pub final_key: Vec<bool>,
    pub leakage_bits: usize,
    pub stats: DecisionStats,
    pub eve_stats: Option<EveStats>,
    pub public_log: PublicLog,
    /// Bob's operating point, for analytic comparisons and the audit.
    pub bob_params: SignalParams,
}

impl SessionTranscript {
    /// Line-oriented `index,sent,voltage,outcome` export.
    pub fn write_records<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,sent,voltage,outcome")?;
        for (i, ((&bit, &v), &o)) in self.alice_bits.iter().zip(&self.bob_voltages).zip(&self.bob_outcomes).enumerate() {
            writeln!(out, "{i},{},{v:.17e},{}", u8::from(bit), o.label())?;
        }
        Ok(())
    }
}

/// Alice's and Bob's bits on the conclusive slots.
pub fn sift(transcript: &SessionTranscript) -> (Vec<bool>, Vec<bool>) {
    let mut alice = Vec::with_capacity(transcript.sift_indices.len());
    let mut bob = Vec::with_capacity(transcript.sift_indices.len());
    for &i in &transcript.sift_indices {
        if let Some(b) = transcript.bob_outcomes[i].bit() {
            alice.push(transcript.alice_bits[i]);
            bob.push(b);
        }
    }
    (alice, bob)
}

pub(crate) const CHUNK_BITS: usize = 1 << 14;

#[derive(Default)]
struct Chunk {
    alice: Vec<bool>,
    voltages: Vec<f64>,
    outcomes: Vec<DecisionOutcome>,
    intensities: Vec<f64>,
    eve: Vec<DecisionOutcome>,
    intercepted: Vec<bool>,
}

fn alice_bit<R: Rng + ?Sized>(source: BitSource, index: usize, rng: &mut R) -> bool {
    match source {
        BitSource::Random => rng.random::<bool>(),
        BitSource::Alternating => index.is_multiple_of(2),
    }
}

fn simulate_chunk(cfg: &SessionConfig, bob: &SignalParams, seeds: &SeedTree, chunk: usize) -> Chunk {
    let start = chunk * CHUNK_BITS;
    let end = (start + CHUNK_BITS).min(cfg.n_bits);
    let len = end - start;
    let base = chunk as u64 * 3;
    let mut alice_rng = seeds.stream(Stage::Session, base);
    let mut bob_rng = seeds.stream(Stage::Session, base + 1);
    let mut eve_rng = seeds.stream(Stage::Session, base + 2);

    let mut out = Chunk {
        alice: Vec::with_capacity(len),
        voltages: Vec::with_capacity(len),
        outcomes: Vec::with_capacity(len),
        intensities: Vec::with_capacity(len),
        ..Default::default()
    };
    let s_b = bob.mean_voltage_s;
    let sigma_b = bob.noise_sigma;
    for i in start..end {
        let bit = alice_bit(cfg.source, i, &mut alice_rng);
        // amplitude reaching Bob in units of S_B, plus relay noise
        let (amplitude, extra) = match &cfg.attack {
            None => (encode_bit(bit), 0.0),
            Some(a) => match a.kind {
                AttackKind::Translucent => {
                    out.eve.push(translucent_eavesdrop(bit, a, &mut eve_rng));
                    (encode_bit(bit), 0.0)
                }
                AttackKind::Opaque => {
                    let slot = opaque_eavesdrop(bit, a, &mut eve_rng);
                    out.eve.push(slot.eve_outcome);
                    out.intercepted.push(slot.resent_amplitude.is_some());
                    match slot.resent_amplitude {
                        Some(amp) => (amp, relay_noise(a.relay, &mut eve_rng)),
                        None => (encode_bit(bit), 0.0),
                    }
                }
            },
        };
        let v = amplitude * s_b + extra + gaussian(sigma_b, &mut bob_rng);
        let intensity = amplitude.abs() * s_b + gaussian(sigma_b, &mut bob_rng);
        out.alice.push(bit);
        out.voltages.push(v);
        out.outcomes.push(decide(v, s_b, cfg.policy));
        out.intensities.push(intensity);
    }
    out
}

/// Runs one session of `cfg.n_bits` slots.
///
/// The run is split into fixed-size chunks, each with generators derived
/// from `seed`, so sequential and parallel execution give identical
/// transcripts. Bob announces his conclusive slots on the public log.
pub fn run_session(cfg: &SessionConfig, seed: u64, exec: Execution) -> Result<SessionTranscript> {
    cfg.validate()?;
    let bob = cfg.bob_arm()?;
    let seeds = SeedTree::new(seed);
    let n_chunks = cfg.n_bits.div_ceil(CHUNK_BITS);
    let chunks = exec.map_indexed(n_chunks, |c| simulate_chunk(cfg, &bob, &seeds, c));

    let n = cfg.n_bits;
    let mut alice_bits = Vec::with_capacity(n);
    let mut bob_voltages = Vec::with_capacity(n);
    let mut bob_outcomes = Vec::with_capacity(n);
    let mut bob_intensities = Vec::with_capacity(n);
    let mut eve = Vec::new();
    let mut intercepted = Vec::new();
    for c in chunks {
        alice_bits.extend(c.alice);
        bob_voltages.extend(c.voltages);
        bob_outcomes.extend(c.outcomes);
        bob_intensities.extend(c.intensities);
        eve.extend(c.eve);
        intercepted.extend(c.intercepted);
    }

    let sift_indices: Vec<usize> = bob_outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.is_conclusive())
        .map(|(i, _)| i)
        .collect();
    let mut public_log = PublicLog::new();
    public_log.push(Message::SiftIndices(sift_indices.clone()));

    let mut transcript = SessionTranscript {
        alice_bits,
        bob_voltages,
        bob_outcomes,
        bob_intensities,
        eve_outcomes: cfg.attack.map(|_| eve),
        intercepted: match cfg.attack {
            Some(a) if a.kind == AttackKind::Opaque => Some(intercepted),
            _ => None,
        },
        sift_indices,
        sifted_alice: Vec::new(),
        sifted_bob: Vec::new(),
        reconciled_key: Vec::new(),
        final_key: Vec::new(),
        leakage_bits: 0,
        stats: DecisionStats::from_counts(0, 0, 0),
        eve_stats: None,
        public_log,
        bob_params: bob,
    };
    let (sa, sb) = sift(&transcript);
    let n_errors = sa.iter().zip(&sb).filter(|(a, b)| a != b).count();
    transcript.stats = DecisionStats::from_counts(n, sa.len(), n_errors);
    transcript.sifted_alice = sa;
    transcript.sifted_bob = sb;
    transcript.eve_stats = transcript.eve_outcomes.as_ref().map(|eve| {
        let measured: Vec<usize> = match &transcript.intercepted {
            Some(hit) => (0..n).filter(|&i| hit[i]).collect(),
            None => (0..n).collect(),
        };
        let mut n_conclusive = 0;
        let mut n_errors = 0;
        for &i in &measured {
            if let Some(b) = eve[i].bit() {
                n_conclusive += 1;
                n_errors += usize::from(b != transcript.alice_bits[i]);
            }
        }
        EveStats {
            n_measured: measured.len(),
            n_conclusive,
            n_errors,
            error_rate: if n_conclusive == 0 { 0.0 } else { n_errors as f64 / n_conclusive as f64 },
        }
    });
    Ok(transcript)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::NoiseRegime;

    #[test]
    fn threshold_rule() {
        let p = ThresholdPolicy::new(2.0).unwrap();
        assert_eq!(decide(2.1, 1.0, p), DecisionOutcome::Zero);
        assert_eq!(decide(-2.1, 1.0, p), DecisionOutcome::One);
        assert_eq!(decide(2.0, 1.0, p), DecisionOutcome::Inconclusive);
        assert_eq!(decide(-2.0, 1.0, p), DecisionOutcome::Inconclusive);
        assert_eq!(decide(0.0, 1.0, ThresholdPolicy::ZERO), DecisionOutcome::Inconclusive);
        assert_eq!(decide(1e-300, 1.0, ThresholdPolicy::ZERO), DecisionOutcome::Zero);
        assert!(ThresholdPolicy::new(-0.1).is_err());
    }

    #[test]
    fn analytic_rates() {
        for beta in [0.1, 0.5, 1.0, 3.0] {
            assert!((decision_rate_analytic(beta, 0.0).unwrap() - 1.0).abs() < 1e-15);
            let e0 = error_rate_analytic(beta, 0.0).unwrap();
            assert!((e0 - q_unchecked(beta)).abs() < 1e-15);
        }
        let f = decision_rate_analytic(1.0, 2.0).unwrap();
        assert!((f - 0.160_005_151_963_087_2).abs() < 1e-12);
        let e = error_rate_analytic(1.0, 2.0).unwrap();
        assert!((e - 0.008_436_591_041_402_914).abs() < 1e-12);
        let beta = crate::mathkit::SnrValue::from_db(-9.25).unwrap().beta();
        assert!((error_rate_analytic(beta, 10.0).unwrap() - 0.072).abs() < 0.001);
        assert!((decision_rate_analytic(beta, 10.0).unwrap() - 1.0e-3).abs() < 0.1e-3);
        assert!(decision_rate_analytic(0.0, 1.0).is_err());
    }

    #[test]
    fn analytic_monotone_in_m() {
        for beta in [0.2, 0.5, 1.0, 1.6] {
            let mut pf = f64::INFINITY;
            let mut pe = f64::INFINITY;
            for i in 0..=100 {
                let m = i as f64 * 0.2;
                let f = decision_rate_analytic(beta, m).unwrap();
                let e = error_rate_analytic(beta, m).unwrap();
                assert!(f < pf || (i > 0 && f == 0.0));
                assert!(e <= pe && e <= 0.5);
                pf = f;
                pe = e;
            }
        }
    }

    #[test]
    fn noiseless_session() {
        let ch = SignalParams::new(1.0, 0.0, NoiseRegime::Thermal).unwrap();
        let t = run_session(&SessionConfig::new(1000, ch, ThresholdPolicy::new(0.5).unwrap()), 1, Execution::Sequential).unwrap();
        assert_eq!(t.stats.decision_rate_f, 1.0);
        assert_eq!(t.stats.error_rate_e, 0.0);
        assert_eq!(t.sifted_alice, t.sifted_bob);
    }

    #[test]
    fn sift_edge_cases() {
        let ch = SignalParams::new(1.0, 1.0, NoiseRegime::Thermal).unwrap();
        let t = run_session(&SessionConfig::new(5000, ch, ThresholdPolicy::ZERO), 3, Execution::Sequential).unwrap();
        assert_eq!(t.sift_indices.len(), 5000);
        let t = run_session(&SessionConfig::new(200, ch, ThresholdPolicy::new(1e6).unwrap()), 3, Execution::Sequential).unwrap();
        assert!(t.sift_indices.is_empty());
        let (a, b) = sift(&t);
        assert!(a.is_empty() && b.is_empty());
        assert_eq!(t.stats.error_rate_e, 0.0);
    }

    #[test]
    fn rejects_empty_session() {
        let ch = SignalParams::new(1.0, 1.0, NoiseRegime::Thermal).unwrap();
        assert!(run_session(&SessionConfig::new(0, ch, ThresholdPolicy::ZERO), 1, Execution::Sequential).is_err());
    }

    #[test]
    fn alternating_source() {
        let ch = SignalParams::new(1.0, 0.0, NoiseRegime::Thermal).unwrap();
        let cfg = SessionConfig::new(6, ch, ThresholdPolicy::ZERO).with_source(BitSource::Alternating);
        let t = run_session(&cfg, 1, Execution::Sequential).unwrap();
        assert_eq!(t.alice_bits, vec![true, false, true, false, true, false]);
    }

    #[test]
    fn transcript_export() {
        let ch = SignalParams::new(1.0, 1.0, NoiseRegime::Thermal).unwrap();
        let t = run_session(&SessionConfig::new(3, ch, ThresholdPolicy::new(1.0).unwrap()), 9, Execution::Sequential).unwrap();
        let mut buf = Vec::new();
        t.write_records(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,sent,voltage,outcome");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,"));
    }
}

//! Eavesdropping strategies and the joint-probability algebra that turns
//! Eve's error rate into Bob/Eve correlations.
//!
//! Two attacks are modelled. The translucent attack taps part of the light
//! with a beam splitter; Eve measures her arm with her own detector and a
//! zero threshold while Bob's arm continues unchanged apart from the power
//! loss. The opaque attack intercepts a Bernoulli(eta) subset of slots,
//! measures them and resends her decision at the original intensity. The
//! intensity-cheating variant lets Eve use a finite threshold, drop
//! inconclusive slots and boost the rest by `1/gamma`; per-bit intensity
//! monitoring catches it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, domain, Error, Result};
use crate::mathkit::q_unchecked;
use crate::protocol::{decide, DecisionOutcome, SessionTranscript, ThresholdPolicy};
use crate::signal::{encode_bit, gaussian, transmit, SignalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    Translucent,
    Opaque,
}

/// Propagation of Eve's resent signal to Bob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RelayMode {
    /// Resent pulse arrives like Alice's would; only Bob's detector noise.
    #[default]
    Ideal,
    /// Extra Gaussian noise of the given sigma on the Eve-to-Bob hop.
    Noisy { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub kind: AttackKind,
    /// Translucent only: optical power fraction diverted to Eve.
    pub tap_fraction: f64,
    /// Opaque only: probability that a slot is intercepted.
    pub eta: f64,
    /// Eve's operating point at her detector.
    pub eve_params: SignalParams,
    pub eve_policy: ThresholdPolicy,
    /// Opaque only: conclusive fraction for the intensity-cheating variant.
    pub cheat_gamma: Option<f64>,
    pub relay: RelayMode,
}

impl AttackConfig {
    pub fn translucent(tap_fraction: f64, eve_params: SignalParams) -> Self {
        Self {
            kind: AttackKind::Translucent,
            tap_fraction,
            eta: 0.0,
            eve_params,
            eve_policy: ThresholdPolicy::ZERO,
            cheat_gamma: None,
            relay: RelayMode::Ideal,
        }
    }

    pub fn opaque(eta: f64, eve_params: SignalParams) -> Self {
        Self {
            kind: AttackKind::Opaque,
            tap_fraction: 0.0,
            eta,
            eve_params,
            eve_policy: ThresholdPolicy::ZERO,
            cheat_gamma: None,
            relay: RelayMode::Ideal,
        }
    }

    /// Switches an opaque attack to the intensity-cheating variant.
    pub fn with_cheat(mut self, gamma: f64, eve_policy: ThresholdPolicy) -> Self {
        self.cheat_gamma = Some(gamma);
        self.eve_policy = eve_policy;
        self
    }

    pub fn with_relay(mut self, relay: RelayMode) -> Self {
        self.relay = relay;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.eve_params.validate()?;
        self.eve_policy.validate()?;
        match self.kind {
            AttackKind::Translucent => {
                if !(self.tap_fraction > 0.0 && self.tap_fraction < 1.0) {
                    return Err(Error::Config(format!("tap fraction must lie in (0,1), got {}", self.tap_fraction)));
                }
                if self.cheat_gamma.is_some() {
                    return Err(Error::Config("cheat_gamma only applies to the opaque attack".into()));
                }
            }
            AttackKind::Opaque => {
                if !(0.0..=1.0).contains(&self.eta) {
                    return Err(Error::Config(format!("eta must lie in [0,1], got {}", self.eta)));
                }
                if let Some(g) = self.cheat_gamma {
                    if !(g > 0.0 && g <= 1.0) {
                        return Err(Error::Config(format!("cheat_gamma must lie in (0,1], got {g}")));
                    }
                }
            }
        }
        if let RelayMode::Noisy { sigma } = self.relay {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(Error::Config(format!("relay sigma must be non-negative, got {sigma}")));
            }
        }
        Ok(())
    }
}

/// What Eve did in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotAttack {
    pub eve_outcome: DecisionOutcome,
    /// Signed amplitude factor of what reaches Bob, in units of Bob's `S`,
    /// `None` when the slot was left untouched.
    pub resent_amplitude: Option<f64>,
}

/// Eve's measurement on her tapped arm.
pub fn translucent_eavesdrop<R: Rng + ?Sized>(bit: bool, cfg: &AttackConfig, rng: &mut R) -> DecisionOutcome {
    let v = transmit(bit, &cfg.eve_params, rng);
    decide(v, cfg.eve_params.mean_voltage_s, cfg.eve_policy)
}

/// Intercept-and-resend in one slot. Untouched slots report an
/// inconclusive Eve outcome.
pub fn opaque_eavesdrop<R: Rng + ?Sized>(bit: bool, cfg: &AttackConfig, rng: &mut R) -> SlotAttack {
    let intercepted = rng.random::<f64>() < cfg.eta;
    if !intercepted {
        return SlotAttack { eve_outcome: DecisionOutcome::Inconclusive, resent_amplitude: None };
    }
    let v = transmit(bit, &cfg.eve_params, rng);
    let outcome = decide(v, cfg.eve_params.mean_voltage_s, cfg.eve_policy);
    let amplitude = match (outcome.bit(), cfg.cheat_gamma) {
        (Some(b), Some(gamma)) => encode_bit(b) / gamma,
        (Some(b), None) => encode_bit(b),
        // cheating Eve drops the slot
        (None, Some(_)) => 0.0,
        // an honest-intensity Eve must still send something
        (None, None) => encode_bit(rng.random::<bool>()),
    };
    SlotAttack { eve_outcome: outcome, resent_amplitude: Some(amplitude) }
}

/// Relay-hop noise added to a resent slot.
pub(crate) fn relay_noise<R: Rng + ?Sized>(relay: RelayMode, rng: &mut R) -> f64 {
    match relay {
        RelayMode::Ideal => 0.0,
        RelayMode::Noisy { sigma } => gaussian(sigma, rng),
    }
}

/// Joint distribution `p(k,l)` of Bob's value `k` and Eve's value `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

impl JointDistribution {
    pub fn new(p00: f64, p01: f64, p10: f64, p11: f64) -> Result<Self> {
        for p in [p00, p01, p10, p11] {
            check_range("p(k,l)", p, 0.0, 1.0)?;
        }
        let total = p00 + p01 + p10 + p11;
        if (total - 1.0).abs() > 1e-9 {
            return Err(domain("sum p(k,l)", total));
        }
        Ok(Self { p00, p01, p10, p11 })
    }

    pub fn p0(&self) -> f64 {
        self.p00 + self.p01
    }

    pub fn p1(&self) -> f64 {
        self.p10 + self.p11
    }

    pub fn total(&self) -> f64 {
        self.p00 + self.p01 + self.p10 + self.p11
    }

    /// `[(p(k,l), p(k))]` over the four cells.
    pub fn cells(&self) -> [(f64, f64); 4] {
        let (p0, p1) = (self.p0(), self.p1());
        [(self.p00, p0), (self.p01, p0), (self.p10, p1), (self.p11, p1)]
    }

    pub fn uniform() -> Self {
        Self { p00: 0.25, p01: 0.25, p10: 0.25, p11: 0.25 }
    }
}

/// Bob's error rate against Alice when a fraction `eta` of slots is
/// intercepted and resent by an Eve with error rate `e_e`.
pub fn effective_bob_error(e_b: f64, e_e: f64, eta: f64) -> Result<f64> {
    check_range("e_b", e_b, 0.0, 0.5)?;
    check_range("e_e", e_e, 0.0, 0.5)?;
    check_range("eta", eta, 0.0, 1.0)?;
    Ok((1.0 - eta) * e_b + eta * ((1.0 - e_e) * e_b + e_e * (1.0 - e_b)))
}

/// Joint probabilities under the translucent attack.
pub fn joint_probs_translucent(e_e: f64) -> Result<JointDistribution> {
    check_range("e_e", e_e, 0.0, 0.5)?;
    let same = 0.5 * (1.0 - e_e);
    let diff = 0.5 * e_e;
    Ok(JointDistribution { p00: same, p01: diff, p10: diff, p11: same })
}

/// Joint probabilities under the opaque attack, over the slots where Bob
/// ends up agreeing with Alice. Eve's value on untouched slots is a fair
/// guess.
pub fn joint_probs_opaque(e_b: f64, e_e: f64, eta: f64) -> Result<JointDistribution> {
    let e_b_prime = effective_bob_error(e_b, e_e, eta)?;
    let denom = 2.0 * (1.0 - e_b_prime);
    if denom <= 0.0 {
        return Err(domain("e_b_prime", e_b_prime));
    }
    let same = ((1.0 - e_e) * eta + 0.5 * (1.0 - eta)) * (1.0 - e_b) / denom;
    let diff = (e_b * e_e * eta + 0.5 * (1.0 - e_b) * (1.0 - eta)) / denom;
    Ok(JointDistribution { p00: same, p01: diff, p10: diff, p11: same })
}

/// Estimates `p(k,l)` from a transcript, over sifted slots where Bob's
/// decision matches Alice's bit. Slots where Eve holds no conclusive value
/// count as a fair guess, half to each of her values.
pub fn empirical_joint_probs(transcript: &SessionTranscript) -> Result<JointDistribution> {
    let eve = transcript
        .eve_outcomes
        .as_ref()
        .ok_or_else(|| Error::Estimation("transcript has no eavesdropper outcomes".into()))?;
    let mut counts = [[0.0f64; 2]; 2];
    let mut eve_conclusive = 0usize;
    let mut total = 0usize;
    for &i in &transcript.sift_indices {
        let Some(bob) = transcript.bob_outcomes[i].bit() else { continue };
        if bob != transcript.alice_bits[i] {
            continue;
        }
        total += 1;
        let k = usize::from(bob);
        match eve[i].bit() {
            Some(l) => {
                counts[k][usize::from(l)] += 1.0;
                eve_conclusive += 1;
            }
            None => {
                counts[k][0] += 0.5;
                counts[k][1] += 0.5;
            }
        }
    }
    if total == 0 || eve_conclusive == 0 {
        return Err(Error::Estimation("no overlapping conclusive Bob/Eve data".into()));
    }
    let n = total as f64;
    Ok(JointDistribution {
        p00: counts[0][0] / n,
        p01: counts[0][1] / n,
        p10: counts[1][0] / n,
        p11: counts[1][1] / n,
    })
}

/// Per-bit verdict of the intensity monitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuditFlag {
    Pass,
    TooBright,
    TooDim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub flags: Vec<AuditFlag>,
    pub n_too_bright: usize,
    pub n_too_dim: usize,
    /// Largest flag count compatible with an unattacked channel.
    pub allowed_false_positives: usize,
    pub passed: bool,
}

impl AuditReport {
    pub fn flagged(&self) -> usize {
        self.n_too_bright + self.n_too_dim
    }

    pub fn flagged_fraction(&self) -> f64 {
        if self.flags.is_empty() {
            0.0
        } else {
            self.flagged() as f64 / self.flags.len() as f64
        }
    }
}

/// Default audit tolerance in noise standard deviations.
pub const DEFAULT_AUDIT_TOLERANCE: f64 = 5.0;

/// Flags bits whose monitored intensity deviates from the expected level
/// by more than `tolerance_sigmas` noise standard deviations.
///
/// The summary passes when the flag count stays within the false-positive
/// budget of an honest channel: expected count `n * 2Q(k)` plus three
/// Poisson deviations.
pub fn intensity_audit(readings: &[f64], expected_s: f64, noise_sigma: f64, tolerance_sigmas: f64) -> Result<AuditReport> {
    if !(expected_s > 0.0 && expected_s.is_finite()) {
        return Err(domain("expected_s", expected_s));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(domain("noise_sigma", noise_sigma));
    }
    if tolerance_sigmas.is_nan() || tolerance_sigmas <= 0.0 {
        return Err(domain("tolerance_sigmas", tolerance_sigmas));
    }
    let band = tolerance_sigmas * noise_sigma;
    let mut n_too_bright = 0;
    let mut n_too_dim = 0;
    let flags: Vec<AuditFlag> = readings
        .iter()
        .map(|&r| {
            let dev = r - expected_s;
            if dev > band {
                n_too_bright += 1;
                AuditFlag::TooBright
            } else if dev < -band {
                n_too_dim += 1;
                AuditFlag::TooDim
            } else {
                AuditFlag::Pass
            }
        })
        .collect();
    let expected_fp = readings.len() as f64 * 2.0 * q_unchecked(tolerance_sigmas);
    let allowed_false_positives = (expected_fp + 3.0 * expected_fp.sqrt()).ceil() as usize;
    let passed = n_too_bright + n_too_dim <= allowed_false_positives;
    Ok(AuditReport { flags, n_too_bright, n_too_dim, allowed_false_positives, passed })
}

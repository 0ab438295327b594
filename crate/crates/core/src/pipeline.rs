//! End-to-end key generation: session, sifting, security estimate,
//! reconciliation and privacy amplification.

use serde::{Deserialize, Serialize};

use crate::adversary::{empirical_joint_probs, AttackKind, JointDistribution};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mathkit::q_unchecked;
use crate::protocol::{decision_rate_analytic, error_rate_analytic, run_session, SessionConfig, SessionTranscript};
use crate::public_channel::Message;
use crate::reconciliation::{
    error_correct, privacy_amplify, AmplificationParams, CascadeConfig, ReconciliationReport, ToeplitzHash,
    MAX_RECONCILABLE_ERROR,
};
use crate::rng::{SeedTree, Stage};
use crate::security::{tau_from_collision, tau_from_joint, tau_translucent, RateReport};

pub const DEFAULT_SAFETY_BITS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub session: SessionConfig,
    pub seed: u64,
    pub safety_bits: usize,
    pub cascade: CascadeConfig,
}

impl SimulationConfig {
    pub fn new(session: SessionConfig, seed: u64) -> Self {
        Self { session, seed, safety_bits: DEFAULT_SAFETY_BITS, cascade: CascadeConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Secure,
    /// `R <= 0`; no key material is produced.
    Insecure,
    ReconciliationAborted,
    NoSiftedBits,
    NoSecureKey,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub verdict: Verdict,
    pub report: Option<RateReport>,
    /// Closed-form counterpart of `report`, where one exists.
    pub analytic: Option<RateReport>,
    pub joint: Option<JointDistribution>,
    /// Privacy-amplification fraction via averaged collision probability.
    pub tau_collision: Option<f64>,
    pub reconciliation: Option<ReconciliationReport>,
    pub amplification: Option<AmplificationParams>,
    pub alice_key: Vec<bool>,
    pub bob_key: Vec<bool>,
    pub transcript: SessionTranscript,
}

/// Closed-form rates for the configured channel and attack. Only the
/// unattacked and translucent cases have one.
pub fn analytic_report(cfg: &SessionConfig) -> Result<Option<RateReport>> {
    let bob = cfg.bob_arm()?;
    let beta = bob.beta();
    if !beta.is_finite() {
        return Ok(None);
    }
    let e_b = error_rate_analytic(beta, cfg.policy.m)?;
    let f_plus = decision_rate_analytic(beta, cfg.policy.m)?;
    let (e_e, tau) = match &cfg.attack {
        None => (0.5, 0.0),
        Some(a) if a.kind == AttackKind::Translucent && a.eve_policy.m == 0.0 => {
            let beta_e = a.eve_params.beta();
            let e_e = if beta_e.is_finite() { q_unchecked(beta_e) } else { 0.0 };
            (e_e, tau_translucent(e_e)?)
        }
        Some(_) => return Ok(None),
    };
    if e_b > 0.5 {
        return Ok(None);
    }
    RateReport::new(e_b, e_e, f_plus, tau).map(Some)
}

#[derive(Default)]
struct Stages {
    report: Option<RateReport>,
    joint: Option<JointDistribution>,
    tau_collision: Option<f64>,
    reconciliation: Option<ReconciliationReport>,
    amplification: Option<AmplificationParams>,
    alice_key: Vec<bool>,
    bob_key: Vec<bool>,
}

/// Runs the whole pipeline. Key material is only produced when the
/// estimated secure rate is positive and reconciliation succeeds.
pub fn simulate(cfg: &SimulationConfig, exec: Execution) -> Result<SimulationOutcome> {
    let mut transcript = run_session(&cfg.session, cfg.seed, exec)?;
    let analytic = analytic_report(&cfg.session)?;
    let mut st = Stages::default();
    let verdict = run_stages(cfg, exec, &mut transcript, &mut st)?;
    Ok(SimulationOutcome {
        verdict,
        report: st.report,
        analytic,
        joint: st.joint,
        tau_collision: st.tau_collision,
        reconciliation: st.reconciliation,
        amplification: st.amplification,
        alice_key: st.alice_key,
        bob_key: st.bob_key,
        transcript,
    })
}

fn run_stages(cfg: &SimulationConfig, exec: Execution, transcript: &mut SessionTranscript, st: &mut Stages) -> Result<Verdict> {
    if transcript.stats.n_sifted == 0 {
        return Ok(Verdict::NoSiftedBits);
    }
    let stats = transcript.stats;
    let e_b = stats.error_rate_e;
    // the estimate conditions on Bob-correct slots, which is what the
    // reconciled key would reveal
    let (joint, e_e) = match transcript.eve_stats {
        Some(eve) => (empirical_joint_probs(transcript)?, eve.error_rate),
        None => (JointDistribution::uniform(), 0.5),
    };
    let tau = tau_from_joint(&joint)?.clamp(0.0, 1.0);
    st.joint = Some(joint);
    st.tau_collision = Some(tau_from_collision(&joint)?.clamp(0.0, 1.0));
    if e_b > 0.5 {
        return Ok(Verdict::Insecure);
    }
    let report = RateReport::new(e_b, e_e, stats.decision_rate_f, tau)?;
    st.report = Some(report);
    if !report.is_secure() {
        return Ok(Verdict::Insecure);
    }
    if e_b > MAX_RECONCILABLE_ERROR {
        return Ok(Verdict::ReconciliationAborted);
    }

    let seeds = SeedTree::new(cfg.seed);
    let mut rng = seeds.stream(Stage::Reconciliation, 0);
    let (alice_rec, bob_rec, rec) = error_correct(
        &transcript.sifted_alice,
        &transcript.sifted_bob,
        e_b,
        &cfg.cascade,
        &mut transcript.public_log,
        &mut rng,
    )?;
    st.reconciliation = Some(rec);
    transcript.leakage_bits = rec.parity_bits_leaked;
    transcript.reconciled_key = bob_rec.clone();
    if rec.residual_error > 0.0 {
        return Ok(Verdict::ReconciliationAborted);
    }

    let retained = ((1.0 - e_b) * (1.0 - tau)).clamp(0.0, 1.0);
    let params = AmplificationParams::new(retained, cfg.safety_bits, rec.parity_bits_leaked, rec.n_reconciled)?;
    st.amplification = Some(params);
    let len = params.final_length();
    if len < 1 {
        return Ok(Verdict::NoSecureKey);
    }
    let len = len as usize;
    let mut rng = seeds.stream(Stage::Amplification, 0);
    let hash = ToeplitzHash::random(rec.n_reconciled, len, &mut rng)?;
    transcript.public_log.push(Message::ToeplitzSeed { bits: rec.n_reconciled + len - 1, hex: hash.seed_hex() });
    st.alice_key = privacy_amplify(&alice_rec, &params, &hash, exec)?;
    st.bob_key = privacy_amplify(&bob_rec, &params, &hash, exec)?;
    if st.alice_key != st.bob_key {
        return Err(Error::Estimation("final keys differ after reconciliation".into()));
    }
    transcript.final_key = st.bob_key.clone();
    Ok(Verdict::Secure)
}

//! Closed-form security computations: privacy-amplification fraction,
//! secure key rate, security boundaries, SNR budgets and link arithmetic.
//!
//! Eve is always assumed to decide at zero threshold, so her error rate and
//! SNR are tied by `e_E = Q(beta_E)`. SNR values are `beta^2`.

use serde::{Deserialize, Serialize};

use crate::adversary::{joint_probs_opaque, JointDistribution};
use crate::error::{check_range, domain, Error, Result};
use crate::mathkit::{linear_to_db, mutual_information, q_inverse, q_unchecked, SnrValue};
use crate::protocol::{decision_rate_analytic, error_rate_analytic};
use crate::reconciliation::collision_probability;
use crate::signal::NoiseRegime;

/// Per-configuration security summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    #[serde(rename = "eb")]
    pub e_b: f64,
    #[serde(rename = "ee")]
    pub e_e: f64,
    pub f_plus: f64,
    pub i_ab: f64,
    pub tau: f64,
    pub r: f64,
    #[serde(rename = "fr")]
    pub throughput_fraction: f64,
}

impl RateReport {
    pub const CSV_HEADER: &'static str = "eb,ee,f_plus,i_ab,tau,r,fr";

    pub fn new(e_b: f64, e_e: f64, f_plus: f64, tau: f64) -> Result<Self> {
        let i_ab = mutual_information(e_b)?;
        let r = secure_rate(e_b, tau)?;
        Ok(Self { e_b, e_e, f_plus, i_ab, tau, r, throughput_fraction: f_plus * r })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.e_b, self.e_e, self.f_plus, self.i_ab, self.tau, self.r, self.throughput_fraction
        )
    }

    pub fn is_secure(&self) -> bool {
        self.r > 0.0
    }
}

/// Analytic report for a translucent attack: Bob at `bob_snr_db` with
/// threshold `m`, Eve at `eve_snr_db` with zero threshold.
pub fn analytic_translucent_report(bob_snr_db: f64, m: f64, eve_snr_db: f64) -> Result<RateReport> {
    let beta_b = SnrValue::from_db(bob_snr_db)?.beta();
    let beta_e = SnrValue::from_db(eve_snr_db)?.beta();
    let e_b = error_rate_analytic(beta_b, m)?;
    let f_plus = decision_rate_analytic(beta_b, m)?;
    let e_e = q_unchecked(beta_e);
    RateReport::new(e_b, e_e, f_plus, tau_translucent(e_e)?)
}

/// `tau = 1 + log2 sum_{k,l} p(k,l)^2 / p(k)`.
pub fn tau_from_joint(j: &JointDistribution) -> Result<f64> {
    let mut sum = 0.0;
    for (pkl, pk) in j.cells() {
        if pk <= 0.0 {
            return Err(domain("p(k)", pk));
        }
        sum += pkl * pkl / pk;
    }
    Ok(1.0 + sum.log2())
}

/// Privacy-amplification fraction from the averaged per-bit collision
/// probability of Bob's bit given Eve's value, `1 + log2 E_l[P_C(k | l)]`.
pub fn tau_from_collision(j: &JointDistribution) -> Result<f64> {
    let mut avg = 0.0;
    for (a, b) in [(j.p00, j.p10), (j.p01, j.p11)] {
        let pl = a + b;
        if pl > 0.0 {
            avg += pl * collision_probability(&[a / pl, b / pl])?;
        }
    }
    Ok(1.0 + avg.log2())
}

/// Closed form of [`tau_from_joint`] for the translucent joint
/// distribution.
pub fn tau_translucent(e_e: f64) -> Result<f64> {
    check_range("e_e", e_e, 0.0, 0.5)?;
    Ok(1.0 + (1.0 - 2.0 * e_e + 2.0 * e_e * e_e).log2())
}

/// Secure bits per sifted bit, `I_AB - (1 - e_B) tau - e_B`.
pub fn secure_rate(e_b: f64, tau: f64) -> Result<f64> {
    check_range("tau", tau, 0.0, 1.0)?;
    Ok(mutual_information(e_b)? - (1.0 - e_b) * tau - e_b)
}

const BISECTION_TOL: f64 = 1e-12;

/// Smallest `x` in `[lo, hi]` with `f(x) >= 0` for increasing `f`.
fn bisect_increasing(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Minimum Eve error rate for `R >= 0` under the translucent attack.
pub fn boundary_eve_error(e_b: f64) -> Result<f64> {
    boundary_eve_error_for_rate(e_b, 0.0)
}

/// Minimum Eve error rate for `R >= target_r` under the translucent
/// attack.
pub fn boundary_eve_error_for_rate(e_b: f64, target_r: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&e_b) {
        return Err(domain("e_b", e_b));
    }
    let f = |e_e: f64| Ok(secure_rate(e_b, tau_translucent(e_e)?)? - target_r);
    if f(0.0)? >= 0.0 {
        return Ok(0.0);
    }
    if f(0.5)? < 0.0 {
        return Err(Error::NoSolution(format!("insecure at any Eve error (e_b = {e_b}, R = {target_r})")));
    }
    bisect_increasing(0.0, 0.5, f)
}

/// Intercept fraction that turns Bob's intrinsic error `e_b` into the
/// observed `e_b_prime` when Eve errs at `e_e`.
pub fn intercept_fraction(e_b: f64, e_b_prime: f64, e_e: f64) -> Result<f64> {
    if e_b_prime == e_b {
        return Ok(0.0);
    }
    let eta = (e_b_prime - e_b) / (e_e * (1.0 - 2.0 * e_b));
    if !(0.0..=1.0).contains(&eta) {
        return Err(domain("eta", eta));
    }
    Ok(eta)
}

/// Secure rate seen by Bob under the opaque attack with the intercept
/// fraction eliminated.
pub fn opaque_rate(e_b: f64, e_b_prime: f64, e_e: f64) -> Result<f64> {
    let eta = intercept_fraction(e_b, e_b_prime, e_e)?;
    let tau = tau_from_joint(&joint_probs_opaque(e_b, e_e, eta)?)?;
    secure_rate(e_b_prime, tau.clamp(0.0, 1.0))
}

/// Minimum Eve error rate for `R >= 0` under the opaque attack, for Bob's
/// intrinsic error `e_b` and observed error `e_b_prime`.
pub fn boundary_eve_error_opaque(e_b: f64, e_b_prime: f64) -> Result<f64> {
    if !(e_b >= 0.0 && e_b <= e_b_prime && e_b_prime < 0.5) {
        return Err(Error::Domain { what: "e_b <= e_b_prime < 1/2", value: e_b_prime });
    }
    if e_b_prime == e_b {
        // no interception: Eve knows nothing
        return if secure_rate(e_b, 0.0)? >= 0.0 {
            Ok(0.0)
        } else {
            Err(Error::NoSolution("insecure without eavesdropping".into()))
        };
    }
    // eta <= 1 needs e_e >= (e_b' - e_b) / (1 - 2 e_b)
    let lo = (e_b_prime - e_b) / (1.0 - 2.0 * e_b);
    if lo > 0.5 {
        return Err(domain("eta", lo / 0.5));
    }
    let f = |e_e: f64| opaque_rate(e_b, e_b_prime, e_e.max(lo));
    if f(lo)? >= 0.0 {
        return Ok(lo);
    }
    if f(0.5)? < 0.0 {
        return Err(Error::NoSolution(format!("insecure at any Eve error (e_b = {e_b}, e_b' = {e_b_prime})")));
    }
    bisect_increasing(lo, 0.5, f)
}

/// Bob's receiver requirement for a target error and decision rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BobRequirement {
    pub snr: SnrValue,
    pub beta: f64,
    pub m: f64,
}

/// Solves `Q((m+1) beta) = e F` and `Q((m-1) beta) = (1-e) F`.
pub fn required_bob_snr(e_target: f64, f_target: f64) -> Result<BobRequirement> {
    if !(e_target > 0.0 && e_target < 0.5) {
        return Err(domain("e_target", e_target));
    }
    if !(f_target > 0.0 && f_target <= 1.0) {
        return Err(domain("f_target", f_target));
    }
    let outer = q_inverse(e_target * f_target)?;
    let inner = q_inverse((1.0 - e_target) * f_target)?;
    let beta = 0.5 * (outer - inner);
    let m = (outer + inner) / (outer - inner);
    if beta.is_nan() || beta <= 0.0 || m < 0.0 {
        return Err(Error::NoSolution(format!("no threshold reaches e = {e_target} at F = {f_target}")));
    }
    Ok(BobRequirement { snr: SnrValue::from_linear(beta * beta)?, beta, m })
}

/// Largest Eve SNR compatible with an error rate of at least `e_e`.
pub fn eve_max_snr(e_e: f64) -> Result<SnrValue> {
    let beta = q_inverse(e_e)?;
    if beta <= 0.0 {
        return Err(domain("e_e", e_e));
    }
    SnrValue::from_linear(beta * beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrTolerance {
    pub db: f64,
    pub eve_boundary_error: f64,
    pub eve_max_snr: SnrValue,
    pub bob: BobRequirement,
}

pub fn tolerance_db(eve_max_snr: f64, bob_min_snr: f64) -> f64 {
    linear_to_db(eve_max_snr / bob_min_snr)
}

/// How much better Eve's SNR may be than Bob's under the translucent
/// attack, for Bob at error `e_b` and decision rate `f_target`.
pub fn snr_tolerance(e_b: f64, f_target: f64) -> Result<SnrTolerance> {
    let bob = required_bob_snr(e_b, f_target)?;
    let boundary = boundary_eve_error(e_b)?;
    let eve = eve_max_snr(boundary)?;
    Ok(SnrTolerance { db: tolerance_db(eve.linear, bob.snr.linear), eve_boundary_error: boundary, eve_max_snr: eve, bob })
}

/// Same as [`snr_tolerance`] for the opaque attack, where Bob observes
/// `e_b_prime`.
pub fn snr_tolerance_opaque(e_b: f64, e_b_prime: f64, f_target: f64) -> Result<SnrTolerance> {
    let bob = required_bob_snr(e_b, f_target)?;
    let boundary = boundary_eve_error_opaque(e_b, e_b_prime)?;
    let eve = eve_max_snr(boundary)?;
    Ok(SnrTolerance { db: tolerance_db(eve.linear, bob.snr.linear), eve_boundary_error: boundary, eve_max_snr: eve, bob })
}

/// Fiber length over which Bob's SNR advantage is used up.
pub fn distance_limit(advantage_db: f64, fiber_loss_db_per_km: f64, regime: NoiseRegime) -> Result<f64> {
    if !(advantage_db.is_finite() && advantage_db >= 0.0) {
        return Err(domain("advantage_db", advantage_db));
    }
    if !(fiber_loss_db_per_km.is_finite() && fiber_loss_db_per_km > 0.0) {
        return Err(domain("fiber_loss_db_per_km", fiber_loss_db_per_km));
    }
    Ok(advantage_db / (regime.snr_db_per_power_db() * fiber_loss_db_per_km))
}

/// Secure key bits per second, with negative rates reported as zero.
pub fn throughput(f_plus: f64, r: f64, clock_bits_per_s: f64) -> f64 {
    f_plus * r.max(0.0) * clock_bits_per_s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplifierPenalty {
    pub db: f64,
    /// Thermal-limited links gain from amplification instead.
    pub thermal_gain: bool,
}

pub const SHOT_AMPLIFIER_PENALTY_DB: f64 = 3.0;

pub fn amplifier_penalty(n_amps: u32, regime: NoiseRegime) -> AmplifierPenalty {
    match regime {
        NoiseRegime::Shot => AmplifierPenalty { db: SHOT_AMPLIFIER_PENALTY_DB * n_amps as f64, thermal_gain: false },
        NoiseRegime::Thermal => AmplifierPenalty { db: 0.0, thermal_gain: n_amps > 0 },
    }
}

/// Amplifiers that fit in `margin_db`; `None` when amplification costs
/// nothing.
pub fn max_amplifiers(margin_db: f64, regime: NoiseRegime) -> Option<u32> {
    match regime {
        NoiseRegime::Shot => Some((margin_db / SHOT_AMPLIFIER_PENALTY_DB + 1e-9).floor().max(0.0) as u32),
        NoiseRegime::Thermal => None,
    }
}

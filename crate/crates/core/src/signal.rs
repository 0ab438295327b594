//! Physical layer: antipodal and Manchester encoding, the Gaussian
//! decision-variable channel, beam-splitter taps and fiber attenuation.
//!
//! Noise is modelled on the integrated decision variable `V`, one Gaussian
//! draw per bit slot. Power changes propagate through the noise regime:
//! thermal-limited receivers keep their noise fixed (SNR goes with the
//! square of optical power), shot-limited receivers see noise variance
//! grow with power (SNR proportional to power).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mathkit::{db_to_linear, SnrValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseRegime {
    #[default]
    Thermal,
    Shot,
}

impl NoiseRegime {
    /// SNR change in dB for an optical power change of `power_db`.
    pub fn snr_db_per_power_db(self) -> f64 {
        match self {
            NoiseRegime::Thermal => 2.0,
            NoiseRegime::Shot => 1.0,
        }
    }
}

impl std::str::FromStr for NoiseRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "thermal" => Ok(NoiseRegime::Thermal),
            "shot" => Ok(NoiseRegime::Shot),
            other => Err(Error::Config(format!("unknown noise regime `{other}`"))),
        }
    }
}

/// Operating point of one receiver: mean signal voltage `S`, noise
/// standard deviation `sigma` and the regime that governs how both react
/// to optical power changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalParams {
    pub mean_voltage_s: f64,
    pub noise_sigma: f64,
    pub regime: NoiseRegime,
}

impl SignalParams {
    pub fn new(mean_voltage_s: f64, noise_sigma: f64, regime: NoiseRegime) -> Result<Self> {
        let p = Self { mean_voltage_s, noise_sigma, regime };
        p.validate()?;
        Ok(p)
    }

    /// Unit signal amplitude with the noise chosen to hit `snr_db`.
    pub fn from_snr_db(snr_db: f64, regime: NoiseRegime) -> Result<Self> {
        let snr = SnrValue::from_db(snr_db)?;
        Self::new(1.0, 1.0 / snr.beta(), regime)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_voltage_s.is_finite() && self.mean_voltage_s > 0.0) {
            return Err(Error::Config(format!("mean signal voltage must be positive, got {}", self.mean_voltage_s)));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Config(format!("noise sigma must be non-negative, got {}", self.noise_sigma)));
        }
        Ok(())
    }

    /// `beta = S / sigma`; infinite for a noiseless receiver.
    pub fn beta(&self) -> f64 {
        self.mean_voltage_s / self.noise_sigma
    }

    pub fn snr(&self) -> Result<SnrValue> {
        SnrValue::from_linear(self.beta().powi(2))
    }

    /// Optical power in units where direct detection maps it linearly to
    /// `S`.
    pub fn optical_power(&self) -> f64 {
        self.mean_voltage_s
    }

    fn scale_power(&self, factor: f64) -> Self {
        let noise_sigma = match self.regime {
            NoiseRegime::Thermal => self.noise_sigma,
            NoiseRegime::Shot => self.noise_sigma * factor.sqrt(),
        };
        Self { mean_voltage_s: self.mean_voltage_s * factor, noise_sigma, regime: self.regime }
    }
}

/// Antipodal sign: `0 -> +1`, `1 -> -1`.
pub fn encode_bit(bit: bool) -> f64 {
    if bit {
        -1.0
    } else {
        1.0
    }
}

/// Two half-slot intensities of the unipolar Manchester code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsePair {
    pub first_half: f64,
    pub second_half: f64,
}

/// `1 -> (ON, OFF)`, `0 -> (OFF, ON)` with `ON = 2S`, `OFF = 0`.
pub fn manchester_encode(bit: bool, mean_voltage_s: f64) -> PulsePair {
    let on = 2.0 * mean_voltage_s;
    if bit {
        PulsePair { first_half: on, second_half: 0.0 }
    } else {
        PulsePair { first_half: 0.0, second_half: on }
    }
}

/// Delayed-difference detection, halved so the result is the antipodal
/// `±S` decision variable.
pub fn manchester_decode(pulse: PulsePair) -> f64 {
    0.5 * (pulse.second_half - pulse.first_half)
}

/// One noisy decision variable `V = encode(bit) * S + n`.
pub fn transmit<R: Rng + ?Sized>(bit: bool, params: &SignalParams, rng: &mut R) -> f64 {
    encode_bit(bit) * params.mean_voltage_s + gaussian(params.noise_sigma, rng)
}

#[inline]
pub(crate) fn gaussian<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sigma * z
}

/// Splits the optical power: the kept arm carries `power_fraction`, the
/// tapped arm the rest. Both arms are seen by receivers identical to the
/// input's.
pub fn tap(params: &SignalParams, power_fraction: f64) -> Result<(SignalParams, SignalParams)> {
    if !(power_fraction > 0.0 && power_fraction < 1.0) {
        return Err(domain("power_fraction", power_fraction));
    }
    Ok((params.scale_power(power_fraction), params.scale_power(1.0 - power_fraction)))
}

/// Fiber or attenuator loss of `loss_db` (optical power dB).
pub fn attenuate(params: &SignalParams, loss_db: f64) -> Result<SignalParams> {
    if !(loss_db.is_finite() && loss_db >= 0.0) {
        return Err(domain("loss_db", loss_db));
    }
    Ok(params.scale_power(db_to_linear(-loss_db)))
}

/// Launch operating point that yields `received` after keeping
/// `kept_fraction` of the power.
pub fn launch_for_received(received: &SignalParams, kept_fraction: f64) -> Result<SignalParams> {
    if !(kept_fraction > 0.0 && kept_fraction <= 1.0) {
        return Err(domain("kept_fraction", kept_fraction));
    }
    Ok(received.scale_power(1.0 / kept_fraction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeedTree, Stage};

    fn at_db(db: f64, regime: NoiseRegime) -> SignalParams {
        SignalParams::from_snr_db(db, regime).unwrap()
    }

    #[test]
    fn antipodal_encoding() {
        assert_eq!(encode_bit(false), 1.0);
        assert_eq!(encode_bit(true), -1.0);
        for b in [false, true] {
            assert_eq!(encode_bit(b), -encode_bit(!b));
        }
    }

    #[test]
    fn manchester_signs() {
        let zero = manchester_decode(manchester_encode(false, 1.5));
        let one = manchester_decode(manchester_encode(true, 1.5));
        assert!(zero > 0.0);
        assert!(one < 0.0);
        assert_eq!(zero, -one);
        assert_eq!(zero, 1.5);
        for b in [false, true] {
            let v = manchester_decode(manchester_encode(b, 0.3));
            assert_eq!(v < 0.0, b);
            assert_eq!(v, encode_bit(b) * 0.3);
        }
    }

    #[test]
    fn noiseless_transmit() {
        let p = SignalParams::new(0.7, 0.0, NoiseRegime::Thermal).unwrap();
        let mut rng = SeedTree::new(1).stream(Stage::Session, 0);
        assert_eq!(transmit(false, &p, &mut rng), 0.7);
        assert_eq!(transmit(true, &p, &mut rng), -0.7);
    }

    #[test]
    fn transmit_moments() {
        let p = SignalParams::new(1.0, 1.0, NoiseRegime::Thermal).unwrap();
        let mut rng = SeedTree::new(11).stream(Stage::Session, 0);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut neg = 0usize;
        for _ in 0..n {
            let v = transmit(false, &p, &mut rng);
            sum += v;
            neg += usize::from(v < 0.0);
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.004, "mean {mean}");
        let e = crate::mathkit::q_function(1.0).unwrap();
        let frac = neg as f64 / n as f64;
        assert!((frac - e).abs() < 3.0 * (e * (1.0 - e) / n as f64).sqrt());
    }

    #[test]
    fn tap_regimes() {
        let (kept, tapped) = tap(&at_db(0.0, NoiseRegime::Thermal), 0.5).unwrap();
        assert!((kept.snr().unwrap().db + 6.020_599_913_279_624).abs() < 1e-9);
        assert!((kept.optical_power() + tapped.optical_power() - 1.0).abs() < 1e-15);
        let (kept, _) = tap(&at_db(0.0, NoiseRegime::Shot), 0.5).unwrap();
        assert!((kept.snr().unwrap().db + 3.010_299_956_639_812).abs() < 1e-9);
        assert!(tap(&kept, 0.0).is_err());
        assert!(tap(&kept, 1.0).is_err());
        let input = at_db(1.0, NoiseRegime::Thermal);
        let (kept, _) = tap(&input, 1.0 - 1e-12).unwrap();
        assert!((kept.snr().unwrap().linear / input.snr().unwrap().linear - 1.0).abs() < 1e-11);
    }

    #[test]
    fn tap_composes() {
        for regime in [NoiseRegime::Thermal, NoiseRegime::Shot] {
            let input = at_db(2.65, regime);
            let (a, _) = tap(&input, 0.3).unwrap();
            let (ab, _) = tap(&a, 0.6).unwrap();
            let (direct, _) = tap(&input, 0.18).unwrap();
            let (x, y) = (ab.snr().unwrap().linear, direct.snr().unwrap().linear);
            assert!((x / y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn attenuation() {
        let t = at_db(0.0, NoiseRegime::Thermal);
        assert!((attenuate(&t, 4.5).unwrap().snr().unwrap().db + 9.0).abs() < 1e-9);
        let s = at_db(0.0, NoiseRegime::Shot);
        assert!((attenuate(&s, 9.0).unwrap().snr().unwrap().db + 9.0).abs() < 1e-9);
        assert_eq!(attenuate(&s, 0.0).unwrap(), s);
        assert!(attenuate(&s, -1.0).is_err());
    }

    #[test]
    fn launch_inverts_tap() {
        let bob = at_db(0.0, NoiseRegime::Thermal);
        let launch = launch_for_received(&bob, 0.5).unwrap();
        let (kept, _) = tap(&launch, 0.5).unwrap();
        assert!((kept.beta() - bob.beta()).abs() < 1e-12);
    }
}

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;
use yk_core::signal::NoiseRegime;

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum AttackChoice {
    None,
    #[default]
    Translucent,
    Opaque,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum RegimeChoice {
    #[default]
    Thermal,
    Shot,
}

impl From<RegimeChoice> for NoiseRegime {
    fn from(r: RegimeChoice) -> Self {
        match r {
            RegimeChoice::Thermal => NoiseRegime::Thermal,
            RegimeChoice::Shot => NoiseRegime::Shot,
        }
    }
}

/// Run settings as given on the command line or in a TOML file. Every
/// field is optional so that the two sources can be layered.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    /// Bob's SNR at his detector, dB
    #[arg(long, allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    /// Eve's SNR at her detector, dB [default: her tapped arm for the
    /// translucent attack, Bob's SNR for the opaque one]
    #[arg(long, allow_negative_numbers = true)]
    pub eve_snr_db: Option<f64>,
    /// Bob's threshold multiplier m
    #[arg(long)]
    pub threshold_m: Option<f64>,
    /// Eve's threshold multiplier, only used by the intensity-cheating attack
    #[arg(long)]
    pub eve_threshold_m: Option<f64>,
    #[arg(long)]
    pub n_bits: Option<usize>,
    #[arg(long, value_enum)]
    pub attack: Option<AttackChoice>,
    /// Power fraction diverted to Eve by the translucent tap
    #[arg(long)]
    pub tap_fraction: Option<f64>,
    /// Intercepted fraction for the opaque attack
    #[arg(long)]
    pub eta: Option<f64>,
    /// Enables intensity cheating: conclusive decisions are resent 1/gamma brighter
    #[arg(long)]
    pub cheat_gamma: Option<f64>,
    #[arg(long, value_enum)]
    pub regime: Option<RegimeChoice>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Safety bits sacrificed in privacy amplification
    #[arg(long)]
    pub n_s: Option<usize>,
    /// JSON report path [default: stdout]
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub alice_key: Option<PathBuf>,
    #[arg(long)]
    pub bob_key: Option<PathBuf>,
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long)]
    pub public_log: Option<PathBuf>,
}

macro_rules! layer {
    ($flags:expr, $file:expr, $($field:ident),+) => {
        RunArgs { $($field: $flags.$field.or($file.$field)),+ }
    };
}

impl RunArgs {
    /// Flags win over the file.
    pub fn layered_over(self, file: RunArgs) -> RunArgs {
        layer!(
            self, file, snr_db, eve_snr_db, threshold_m, eve_threshold_m, n_bits, attack, tap_fraction, eta,
            cheat_gamma, regime, seed, n_s, report, alice_key, bob_key, transcript, public_log
        )
    }

    pub fn from_file(path: &Path) -> Result<RunArgs> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
    }

    pub fn resolve(self) -> RunConfig {
        RunConfig {
            snr_db: self.snr_db.unwrap_or(0.0),
            eve_snr_db: self.eve_snr_db,
            threshold_m: self.threshold_m.unwrap_or(2.0),
            eve_threshold_m: self.eve_threshold_m.unwrap_or(0.0),
            n_bits: self.n_bits.unwrap_or(1_000_000),
            attack: self.attack.unwrap_or_default(),
            tap_fraction: self.tap_fraction.unwrap_or(0.5),
            eta: self.eta.unwrap_or(0.5),
            cheat_gamma: self.cheat_gamma,
            regime: self.regime.unwrap_or_default(),
            seed: self.seed,
            n_s: self.n_s.unwrap_or(yk_core::pipeline::DEFAULT_SAFETY_BITS),
            report: self.report,
            alice_key: self.alice_key,
            bob_key: self.bob_key,
            transcript: self.transcript,
            public_log: self.public_log,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub snr_db: f64,
    pub eve_snr_db: Option<f64>,
    pub threshold_m: f64,
    pub eve_threshold_m: f64,
    pub n_bits: usize,
    pub attack: AttackChoice,
    pub tap_fraction: f64,
    pub eta: f64,
    pub cheat_gamma: Option<f64>,
    pub regime: RegimeChoice,
    pub seed: Option<u64>,
    pub n_s: usize,
    pub report: Option<PathBuf>,
    pub alice_key: Option<PathBuf>,
    pub bob_key: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
    pub public_log: Option<PathBuf>,
}

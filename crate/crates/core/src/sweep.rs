//! Analytic parameter sweeps behind the figure datasets: threshold
//! trade-off curves and security boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mathkit::SnrValue;
use crate::protocol::{decision_rate_analytic, error_rate_analytic};
use crate::security::{boundary_eve_error_for_rate, boundary_eve_error_opaque};

/// SNR grid (dB) of the measured threshold trade-off curves.
pub const TRADEOFF_SNR_DB: [f64; 6] = [7.8, 2.65, -3.28, -9.25, -15.1, -21.4];
/// Secure-rate levels of the translucent boundary family.
pub const BOUNDARY_RATE_LEVELS: [f64; 4] = [0.0, 0.1, 0.2, 0.4];
/// Intrinsic Bob error rates of the opaque boundary lines.
pub const OPAQUE_INTRINSIC_EB: [f64; 3] = [0.0, 0.05, 0.1];

/// Inclusive arithmetic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
            return Err(Error::Config(format!("bad range {start}..={stop} step {step}")));
        }
        Ok(Self { start, stop, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub snr_db: f64,
    pub m: f64,
    pub f_plus: f64,
    pub e: f64,
}

impl TradeoffRow {
    pub const CSV_HEADER: &'static str = "snr_db,m,f_plus,e";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.snr_db, self.m, self.f_plus, self.e)
    }
}

/// Decision and error rate for every `(snr, m)` pair, SNR-major.
pub fn tradeoff_grid(snr_db: &[f64], m: &Grid, exec: Execution) -> Result<Vec<TradeoffRow>> {
    let ms = m.points();
    if ms.iter().any(|&x| x < 0.0) {
        return Err(Error::Config("threshold multipliers must be >= 0".into()));
    }
    let points: Vec<(f64, f64)> = snr_db.iter().flat_map(|&s| ms.iter().map(move |&m| (s, m))).collect();
    exec.map_slice(&points, |&(snr, m)| {
        let beta = SnrValue::from_db(snr)?.beta();
        Ok(TradeoffRow { snr_db: snr, m, f_plus: decision_rate_analytic(beta, m)?, e: error_rate_analytic(beta, m)? })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryFamily {
    /// `param` is the secure-rate level.
    Translucent,
    /// `param` is Bob's intrinsic error rate; `eb` is the observed one.
    Opaque,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub family: BoundaryFamily,
    pub param: f64,
    pub eb: f64,
    /// `None` when no Eve error rate makes the point secure.
    pub ee_min: Option<f64>,
}

impl BoundaryRow {
    pub const CSV_HEADER: &'static str = "attack,param,eb,ee_min";

    pub fn csv_row(&self) -> String {
        let family = match self.family {
            BoundaryFamily::Translucent => "translucent",
            BoundaryFamily::Opaque => "opaque",
        };
        let ee = self.ee_min.map(|v| v.to_string()).unwrap_or_default();
        format!("{family},{},{},{ee}", self.param, self.eb)
    }
}

fn solved(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NoSolution(_)) | Err(Error::Domain { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Translucent boundary for each rate level over `eb`, then opaque lines
/// for each intrinsic error over the observed errors `eb' >= eb`.
pub fn boundary_grid(eb: &Grid, rate_levels: &[f64], opaque_intrinsic: &[f64], exec: Execution) -> Result<Vec<BoundaryRow>> {
    let ebs = eb.points();
    if ebs.iter().any(|&x| !(0.0..0.5).contains(&x)) {
        return Err(Error::Config("Bob error rates must lie in [0, 0.5)".into()));
    }
    let mut points = Vec::new();
    for &r in rate_levels {
        points.extend(ebs.iter().map(|&e| (BoundaryFamily::Translucent, r, e)));
    }
    for &e0 in opaque_intrinsic {
        points.extend(ebs.iter().filter(|&&e| e >= e0 - 1e-12).map(|&e| (BoundaryFamily::Opaque, e0, e.max(e0))));
    }
    exec.map_slice(&points, |&(family, param, e)| {
        let ee_min = match family {
            BoundaryFamily::Translucent => solved(boundary_eve_error_for_rate(e, param))?,
            BoundaryFamily::Opaque => solved(boundary_eve_error_opaque(param, e))?,
        };
        Ok(BoundaryRow { family, param, eb: e, ee_min })
    })
    .into_iter()
    .collect()
}

use mlmc::OutcomeVector;

use crate::error::{AdequacyError, Result};

/// Curtailment at or below this level is treated as zero.
pub const CURTAILMENT_THRESHOLD_MW: f64 = 1e-6;

/// Hourly curtailment `max(0, s - m)` for margin `m` and storage load `s`.
pub fn curtailment(margin: &[f64], storage: &[f64]) -> Result<Vec<f64>> {
    if margin.len() != storage.len() {
        return Err(AdequacyError::LengthMismatch { left: margin.len(), right: storage.len() });
    }
    Ok(margin.iter().zip(storage).map(|(m, s)| (s - m).max(0.0)).collect())
}

/// Loss-of-load hours and energy not served of an hourly curtailment trace.
pub fn risk_metrics(curtailment: &[f64]) -> Result<OutcomeVector> {
    let mut out = OutcomeVector::ZERO;
    for (hour, &c) in curtailment.iter().enumerate() {
        if !(c >= 0.0) {
            return Err(AdequacyError::NegativeCurtailment { hour, value: c });
        }
        accumulate(&mut out, c);
    }
    Ok(out)
}

#[inline]
pub(crate) fn accumulate(out: &mut OutcomeVector, c: f64) {
    if c > CURTAILMENT_THRESHOLD_MW {
        out.lol_hours += 1.0;
        out.ens_energy += c;
    }
}

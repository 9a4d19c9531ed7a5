//! Variance-optimal split of a cost budget across level pairs.

use crate::error::MlmcError;

/// Real-valued optimal sample counts `t · (σ_l/√τ_l) / Σ σ_l'√τ_l'`.
pub fn optimal_allocation_real(sigmas: &[f64], taus: &[f64], budget: f64) -> Result<Vec<f64>, MlmcError> {
    validate(sigmas, taus, budget)?;
    let denom: f64 = sigmas.iter().zip(taus).map(|(s, t)| s * t.sqrt()).sum();
    Ok(sigmas.iter().zip(taus).map(|(s, t)| budget * (s / t.sqrt()) / denom).collect())
}

/// Optimal sample counts rounded half up; every level gets at least `min_samples`.
pub fn optimal_allocation(sigmas: &[f64], taus: &[f64], budget: f64, min_samples: u64) -> Result<Vec<u64>, MlmcError> {
    let real = optimal_allocation_real(sigmas, taus, budget)?;
    Ok(real.into_iter().map(|n| ((n + 0.5).floor() as u64).max(min_samples)).collect())
}

/// Estimator variance `Σ σ_l² / n_l` for a given allocation.
pub fn estimator_variance(sigmas: &[f64], counts: &[f64]) -> f64 {
    sigmas.iter().zip(counts).map(|(s, n)| if *s == 0.0 { 0.0 } else { s * s / n }).sum()
}

/// Allocation that gives every level the same share of the budget.
pub fn equal_split_allocation(taus: &[f64], budget: f64) -> Vec<f64> {
    let share = budget / taus.len() as f64;
    taus.iter().map(|t| share / t).collect()
}

fn validate(sigmas: &[f64], taus: &[f64], budget: f64) -> Result<(), MlmcError> {
    if sigmas.is_empty() || sigmas.len() != taus.len() {
        return Err(MlmcError::InvalidInput(format!(
            "allocation needs matching nonempty sigma/tau lists (got {} and {})",
            sigmas.len(),
            taus.len()
        )));
    }
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(MlmcError::InvalidInput(format!("budget must be positive, got {budget}")));
    }
    if let Some(t) = taus.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(MlmcError::InvalidInput(format!("costs must be positive, got {t}")));
    }
    if sigmas.iter().any(|s| *s < 0.0 || !s.is_finite()) {
        return Err(MlmcError::InvalidInput("sigmas must be finite and nonnegative".into()));
    }
    if sigmas.iter().all(|s| *s == 0.0) {
        return Err(MlmcError::DegenerateStack);
    }
    Ok(())
}

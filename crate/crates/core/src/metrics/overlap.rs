//! Share of bootstrap samples within `gamma` of the true PN/PS.

use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapDensity;
use super::MetricsError;

/// Absolute slack on `|sample - truth| <= gamma`, so that grid points built
/// as `i * step` are not lost to rounding.
pub const OVERLAP_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaGrid(Vec<f64>);

impl GammaGrid {
    /// `0, step, 2*step, ...` up to 1 inclusive.
    pub fn uniform(step: f64) -> Result<Self, MetricsError> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(MetricsError::InvalidGamma(step));
        }
        let count = (1.0 / step + OVERLAP_EPSILON).floor() as usize;
        Ok(Self((0..=count).map(|i| i as f64 * step).collect()))
    }

    /// Explicit grid; values must be finite, non-negative and increasing.
    pub fn new(values: Vec<f64>) -> Result<Self, MetricsError> {
        if values.is_empty() {
            return Err(MetricsError::InvalidGamma(f64::NAN));
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(MetricsError::InvalidGamma(bad));
        }
        if let Some(w) = values.windows(2).find(|w| w[1] <= w[0]) {
            return Err(MetricsError::InvalidGamma(w[1]));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for GammaGrid {
    fn default() -> Self {
        Self((0..=100).map(|i| i as f64 * 0.01).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapCurve {
    pub gamma: Vec<f64>,
    pub pn: Vec<f64>,
    pub ps: Vec<f64>,
}

impl OverlapCurve {
    /// Overlap at the smallest grid point not below `gamma`.
    pub fn at(&self, gamma: f64) -> Option<(f64, f64)> {
        let i = self
            .gamma
            .iter()
            .position(|&g| g + OVERLAP_EPSILON >= gamma)?;
        Some((self.pn[i], self.ps[i]))
    }
}

fn curve(samples: &[f64], truth: f64, m: usize, grid: &[f64]) -> Vec<f64> {
    let mut dist: Vec<f64> = samples.iter().map(|s| (s - truth).abs()).collect();
    dist.sort_by(f64::total_cmp);
    // Undefined iterations count as misses: the denominator is m.
    grid.iter()
        .map(|&g| dist.partition_point(|&d| d <= g + OVERLAP_EPSILON) as f64 / m as f64)
        .collect()
}

pub fn overlap(
    density: &BootstrapDensity,
    true_pn: f64,
    true_ps: f64,
    grid: &GammaGrid,
) -> Result<OverlapCurve, MetricsError> {
    if density.m == 0 || (density.pn_samples.is_empty() && density.ps_samples.is_empty()) {
        return Err(MetricsError::AllUndefined);
    }
    Ok(OverlapCurve {
        gamma: grid.values().to_vec(),
        pn: curve(&density.pn_samples, true_pn, density.m, grid.values()),
        ps: curve(&density.ps_samples, true_ps, density.m, grid.values()),
    })
}

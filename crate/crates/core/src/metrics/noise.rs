//! Sensitivity of the PN/PS estimates to corrupted counterfactual answers.
//!
//! For each flip probability, exact datasets are widened to `k` replicates
//! and every interventional reading is inverted independently with that
//! probability. Factual readings are left intact.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap, BootstrapDensity, BootstrapScheme};
use super::rates::{cir_pooled, RateReport};
use super::MetricsError;
use crate::causation::{
    estimate, problem_truth, CausationEstimate, DatasetTriple, InterventionalDataset,
    InterventionalRecord,
};
use crate::problems::Problem;
use crate::seeding::{derive_seed, rng_for};

pub const DEFAULT_FLIP_PROBS: [f64; 5] = [0.005, 0.001, 0.05, 0.1, 0.2];

const FLIP_STREAM: u64 = 1;
const BOOTSTRAP_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevel {
    pub flip_prob: f64,
    /// Realized counterfactual inconsistency of the corrupted data.
    pub cir: RateReport,
    /// Point estimate on the corrupted data; `None` when undefined.
    pub estimate: Option<CausationEstimate>,
    pub density: BootstrapDensity,
}

fn flip(d: &InterventionalDataset, p: f64, rng: &mut impl Rng) -> InterventionalDataset {
    let records = d
        .records()
        .iter()
        .map(|r| InterventionalRecord {
            outcomes: r
                .outcomes
                .iter()
                .map(|o| o.map(|v| v ^ rng.random_bool(p)))
                .collect(),
            ..r.clone()
        })
        .collect();
    InterventionalDataset::new(d.value(), records).expect("flipping keeps shape")
}

/// Corrupts the interventional channels of `data` with flip probability `p`.
pub fn corrupt_counterfactuals(
    data: &DatasetTriple,
    p: f64,
    seed: u64,
) -> Result<DatasetTriple, MetricsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(MetricsError::InvalidProbability(p));
    }
    let mut rng = rng_for(seed, &[FLIP_STREAM]);
    Ok(DatasetTriple {
        factual: data.factual.clone(),
        do_true: flip(&data.do_true, p, &mut rng),
        do_false: flip(&data.do_false, p, &mut rng),
    })
}

pub fn noise_sensitivity(
    problem: &Problem,
    flip_probs: &[f64],
    replicates: usize,
    m: usize,
    seed: u64,
    scheme: BootstrapScheme,
) -> Result<Vec<NoiseLevel>, MetricsError> {
    if let Some(&bad) = flip_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(MetricsError::InvalidProbability(bad));
    }
    let exact = problem_truth(problem)?;
    let wide = exact.with_replicates(replicates)?;
    let monotone = problem
        .model
        .check_monotonicity(&problem.treatment, &problem.outcome)
        .map_err(crate::causation::CausationError::from)?;
    flip_probs
        .iter()
        .enumerate()
        .map(|(level, &p)| {
            let level_seed = derive_seed(seed, &[level as u64]);
            let noisy = corrupt_counterfactuals(&wide, p, level_seed)?;
            let density = bootstrap(
                &noisy.factual,
                &noisy.do_true,
                &noisy.do_false,
                m,
                derive_seed(level_seed, &[BOOTSTRAP_STREAM]),
                scheme,
            )?;
            Ok(NoiseLevel {
                flip_prob: p,
                cir: cir_pooled(&exact, &noisy)?,
                estimate: estimate(&noisy.factual, &noisy.do_true, &noisy.do_false, monotone).ok(),
                density,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::build_div6;

    #[test]
    fn zero_flip_is_exact() {
        let p = build_div6(120).unwrap();
        let levels = noise_sensitivity(&p, &[0.0], 3, 50, 4, BootstrapScheme::Replicate).unwrap();
        assert_eq!(levels[0].cir.rate, 0.0);
        let exact = estimate(
            &problem_truth(&p).unwrap().factual,
            &problem_truth(&p).unwrap().do_true,
            &problem_truth(&p).unwrap().do_false,
            true,
        )
        .unwrap();
        assert_eq!(levels[0].estimate, Some(exact));
        assert!(levels[0].density.pn_samples.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn realized_rate_tracks_probability() {
        let p = build_div6(400).unwrap();
        let levels = noise_sensitivity(&p, &[0.2], 10, 20, 11, BootstrapScheme::Replicate).unwrap();
        assert!(
            (levels[0].cir.rate - 0.2).abs() < 0.02,
            "{}",
            levels[0].cir.rate
        );
    }

    #[test]
    fn factual_channel_untouched() {
        let t = problem_truth(&build_div6(60).unwrap()).unwrap();
        let noisy = corrupt_counterfactuals(&t, 1.0, 0).unwrap();
        assert_eq!(noisy.factual, t.factual);
        assert!(noisy
            .do_true
            .records()
            .iter()
            .zip(t.do_true.records())
            .all(|(a, b)| a.outcomes[0] != b.outcomes[0]));
    }

    #[test]
    fn bad_probability() {
        let p = build_div6(60).unwrap();
        assert_eq!(
            noise_sensitivity(&p, &[1.5], 1, 1, 0, BootstrapScheme::Replicate),
            Err(MetricsError::InvalidProbability(1.5))
        );
    }

    #[test]
    fn reproducible() {
        let p = build_div6(90).unwrap();
        let a = noise_sensitivity(&p, &DEFAULT_FLIP_PROBS, 4, 30, 8, BootstrapScheme::Instance)
            .unwrap();
        let b = noise_sensitivity(&p, &DEFAULT_FLIP_PROBS, 4, 30, 8, BootstrapScheme::Instance)
            .unwrap();
        assert_eq!(a, b);
    }
}

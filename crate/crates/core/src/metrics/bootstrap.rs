//! Bootstrap densities of the PN/PS estimates.
//!
//! Every iteration draws, for each instance it visits, one answer per
//! channel (factual, `do(x)`, `do(x')`) uniformly from that instance's parsed
//! replicates. [`BootstrapScheme::Replicate`] visits every instance once, so
//! the spread reflects only disagreement between replicates and an agent
//! that always answers the same way yields a point mass.
//! [`BootstrapScheme::Instance`] first resamples instances with replacement,
//! which adds sampling variability over the domain.
//!
//! Iteration `i` seeds its own generator from `(seed, i)`, so serial and
//! parallel runs agree.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::causation::{index_by_id, FactualDataset, Frequencies, InterventionalDataset};
use crate::seeding::rng_for;

pub const DEFAULT_BOOTSTRAP: usize = 500;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BootstrapScheme {
    /// Keep every instance; resample only among its replicates.
    #[default]
    Replicate,
    /// Resample instances with replacement, then one replicate each.
    Instance,
}

impl BootstrapScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            BootstrapScheme::Replicate => "replicate",
            BootstrapScheme::Instance => "instance",
        }
    }
}

impl std::str::FromStr for BootstrapScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "replicate" => Ok(BootstrapScheme::Replicate),
            "instance" => Ok(BootstrapScheme::Instance),
            other => Err(format!("unknown bootstrap scheme '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDensity {
    pub m: usize,
    pub seed: u64,
    pub scheme: BootstrapScheme,
    pub pn_samples: Vec<f64>,
    pub ps_samples: Vec<f64>,
    /// Iterations whose PN (resp. PS) had a zero denominator.
    pub pn_dropped: usize,
    pub ps_dropped: usize,
    /// Indices of those iterations, so samples can be paired back up.
    pub pn_undefined_at: Vec<usize>,
    pub ps_undefined_at: Vec<usize>,
}

impl BootstrapDensity {
    /// `(pn, ps)` for every iteration, `None` where undefined.
    pub fn pairs(&self) -> Vec<(Option<f64>, Option<f64>)> {
        fn spread(samples: &[f64], undefined: &[usize], m: usize) -> Vec<Option<f64>> {
            let mut values = samples.iter().copied();
            let mut holes = undefined.iter().peekable();
            (0..m)
                .map(|i| {
                    if holes.peek() == Some(&&i) {
                        holes.next();
                        None
                    } else {
                        values.next()
                    }
                })
                .collect()
        }
        let pn = spread(&self.pn_samples, &self.pn_undefined_at, self.m);
        let ps = spread(&self.ps_samples, &self.ps_undefined_at, self.m);
        pn.into_iter().zip(ps).collect()
    }

    pub fn pn_quantile(&self, q: f64) -> Option<f64> {
        quantile(&self.pn_samples, q)
    }

    pub fn ps_quantile(&self, q: f64) -> Option<f64> {
        quantile(&self.ps_samples, q)
    }
}

/// Linear-interpolation quantile, `q` in `[0, 1]`.
pub fn quantile(samples: &[f64], q: f64) -> Option<f64> {
    if samples.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (rank.floor() as usize, rank.ceil() as usize);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64))
}

struct Unit {
    x: bool,
    factual: Vec<bool>,
    on: Vec<bool>,
    off: Vec<bool>,
}

fn parsed(readings: &[Option<bool>]) -> Vec<bool> {
    readings.iter().flatten().copied().collect()
}

fn pick<R: Rng>(rng: &mut R, readings: &[bool]) -> Option<bool> {
    (!readings.is_empty()).then(|| readings[rng.random_range(0..readings.len())])
}

pub fn bootstrap(
    factual: &FactualDataset,
    do_true: &InterventionalDataset,
    do_false: &InterventionalDataset,
    m: usize,
    seed: u64,
    scheme: BootstrapScheme,
) -> Result<BootstrapDensity, MetricsError> {
    if m == 0 {
        return Err(MetricsError::EmptyBootstrap);
    }
    if !do_true.value() || do_false.value() {
        return Err(MetricsError::InterventionMismatch);
    }
    let on_idx = index_by_id(do_true.records().iter().map(|r| &r.id));
    let off_idx = index_by_id(do_false.records().iter().map(|r| &r.id));
    if on_idx.len() != factual.len() || off_idx.len() != factual.len() {
        return Err(MetricsError::Misaligned);
    }
    let units = factual
        .records()
        .iter()
        .map(|r| {
            let on = on_idx.get(&r.id).ok_or(MetricsError::Misaligned)?;
            let off = off_idx.get(&r.id).ok_or(MetricsError::Misaligned)?;
            Ok(Unit {
                x: r.x,
                factual: parsed(&r.outcomes),
                on: parsed(&do_true.records()[*on].outcomes),
                off: parsed(&do_false.records()[*off].outcomes),
            })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    if units.is_empty() {
        return Err(MetricsError::Misaligned);
    }

    let draws: Vec<(Option<f64>, Option<f64>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, &[i as u64]);
            let mut freq = Frequencies::default();
            for j in 0..units.len() {
                let u = match scheme {
                    BootstrapScheme::Replicate => &units[j],
                    BootstrapScheme::Instance => &units[rng.random_range(0..units.len())],
                };
                if let Some(y) = pick(&mut rng, &u.factual) {
                    freq.table.add(u.x, y);
                }
                if let Some(y) = pick(&mut rng, &u.on) {
                    freq.do_true_total += 1;
                    freq.do_true_y += u64::from(y);
                }
                if let Some(y) = pick(&mut rng, &u.off) {
                    freq.do_false_total += 1;
                    freq.do_false_y += u64::from(y);
                }
            }
            (freq.pn(), freq.ps())
        })
        .collect();

    let pn_samples: Vec<f64> = draws.iter().filter_map(|d| d.0).collect();
    let ps_samples: Vec<f64> = draws.iter().filter_map(|d| d.1).collect();
    let holes = |undefined: fn(&(Option<f64>, Option<f64>)) -> bool| -> Vec<usize> {
        draws
            .iter()
            .enumerate()
            .filter(|(_, d)| undefined(d))
            .map(|(i, _)| i)
            .collect()
    };
    if pn_samples.is_empty() && ps_samples.is_empty() {
        return Err(MetricsError::AllUndefined);
    }
    Ok(BootstrapDensity {
        m,
        seed,
        scheme,
        pn_dropped: m - pn_samples.len(),
        ps_dropped: m - ps_samples.len(),
        pn_undefined_at: holes(|d| d.0.is_none()),
        ps_undefined_at: holes(|d| d.1.is_none()),
        pn_samples,
        ps_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causation::{problem_truth, FactualRecord, InterventionalRecord};
    use crate::problems::build_div6;

    use BootstrapScheme::{Instance, Replicate};

    #[test]
    fn perfect_data_has_no_spread() {
        let t = problem_truth(&build_div6(400).unwrap()).unwrap();
        let wide = t.with_replicates(5).unwrap();
        let d = bootstrap(
            &wide.factual,
            &wide.do_true,
            &wide.do_false,
            200,
            1,
            Replicate,
        )
        .unwrap();
        assert_eq!((d.pn_dropped, d.ps_dropped), (0, 0));
        assert!(d.pn_samples.iter().all(|&v| v == 1.0));
        assert!(d.ps_samples.iter().all(|&v| v == 134.0 / 267.0));
    }

    #[test]
    fn instance_resampling_moves_ps_on_exact_data() {
        // Div6 PS is the share of even numbers among non-multiples of 3, which
        // changes with the resample; PN stays at 1.
        let t = problem_truth(&build_div6(400).unwrap()).unwrap();
        let d = bootstrap(&t.factual, &t.do_true, &t.do_false, 200, 1, Instance).unwrap();
        assert_eq!(d.pn_samples.len() + d.pn_dropped, 200);
        assert!(d.pn_samples.iter().all(|&v| v == 1.0));
        assert!(d.ps_samples.iter().any(|&v| v != 134.0 / 267.0));
    }

    #[test]
    fn replicate_scheme_spread_comes_from_disagreement() {
        let f = FactualDataset::new(vec![
            FactualRecord {
                id: 0,
                exogenous: vec![],
                x: true,
                outcomes: vec![Some(true)],
            },
            FactualRecord {
                id: 1,
                exogenous: vec![],
                x: false,
                outcomes: vec![Some(false)],
            },
        ])
        .unwrap();
        let iv = |v, a: Vec<Option<bool>>, b: Vec<Option<bool>>| {
            InterventionalDataset::new(
                v,
                vec![
                    InterventionalRecord {
                        id: 0,
                        exogenous: vec![],
                        outcomes: a,
                    },
                    InterventionalRecord {
                        id: 1,
                        exogenous: vec![],
                        outcomes: b,
                    },
                ],
            )
            .unwrap()
        };
        let on = iv(
            true,
            vec![Some(true), Some(true)],
            vec![Some(true), Some(false)],
        );
        let off = iv(
            false,
            vec![Some(false), None],
            vec![Some(false), Some(false)],
        );
        let d = bootstrap(&f, &on, &off, 400, 3, Replicate).unwrap();
        // P(y) = 1/2; P(y|do(x)) is 1 or 1/2 depending on the draw for unit 1.
        assert!(d.ps_samples.iter().all(|&v| v == 1.0 || v == 0.0));
        let ones = d.ps_samples.iter().filter(|&&v| v == 1.0).count();
        assert!((150..250).contains(&ones), "{ones}");
        assert!(d.pn_samples.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn zero_iterations_is_an_error() {
        let t = problem_truth(&build_div6(60).unwrap()).unwrap();
        assert_eq!(
            bootstrap(&t.factual, &t.do_true, &t.do_false, 0, 1, Replicate),
            Err(MetricsError::EmptyBootstrap)
        );
    }

    #[test]
    fn seeded_runs_are_identical() {
        let t = problem_truth(&build_div6(120).unwrap()).unwrap();
        let a = bootstrap(&t.factual, &t.do_true, &t.do_false, 64, 9, Instance).unwrap();
        let b = bootstrap(&t.factual, &t.do_true, &t.do_false, 64, 9, Instance).unwrap();
        assert_eq!(a, b);
        let c = bootstrap(&t.factual, &t.do_true, &t.do_false, 64, 10, Instance).unwrap();
        assert_ne!(a.ps_samples, c.ps_samples);
    }

    #[test]
    fn all_undefined_is_an_error() {
        // Single unit with x = false, y = true: P(x,y) = 0 and P(x',y') = 0.
        let f = FactualDataset::new(vec![FactualRecord {
            id: 0,
            exogenous: vec![],
            x: false,
            outcomes: vec![Some(true)],
        }])
        .unwrap();
        let iv = |v| {
            InterventionalDataset::new(
                v,
                vec![InterventionalRecord {
                    id: 0,
                    exogenous: vec![],
                    outcomes: vec![Some(true)],
                }],
            )
            .unwrap()
        };
        assert_eq!(
            bootstrap(&f, &iv(true), &iv(false), 5, 0, Instance),
            Err(MetricsError::AllUndefined)
        );
    }

    #[test]
    fn pairs_restore_iteration_order() {
        // Tiny domain so that some resamples contain no (x, y) unit.
        let t = problem_truth(&build_div6(6).unwrap()).unwrap();
        let d = bootstrap(&t.factual, &t.do_true, &t.do_false, 100, 2, Instance).unwrap();
        assert!(d.pn_dropped > 0);
        let pairs = d.pairs();
        assert_eq!(pairs.len(), 100);
        let pn: Vec<f64> = pairs.iter().filter_map(|p| p.0).collect();
        let ps: Vec<f64> = pairs.iter().filter_map(|p| p.1).collect();
        assert_eq!((pn, ps), (d.pn_samples.clone(), d.ps_samples.clone()));
        for &i in &d.pn_undefined_at {
            assert!(pairs[i].0.is_none());
        }
    }

    #[test]
    fn quantiles() {
        let s = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile(&s, 0.0), Some(1.0));
        assert_eq!(quantile(&s, 1.0), Some(4.0));
        assert_eq!(quantile(&s, 0.5), Some(2.5));
        assert_eq!(quantile(&[], 0.5), None);
    }
}

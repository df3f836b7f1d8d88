//! Probabilities of necessity (PN), sufficiency (PS) and both (PNS).
//!
//! [`estimate`] identifies PN and PS from a factual dataset and two
//! interventional datasets, assuming the outcome is monotonic in the
//! treatment:
//!
//! ```text
//! PN = (P(y) - P(y | do(x'))) / P(x, y)
//! PS = (P(y | do(x)) - P(y)) / P(x', y')
//! ```
//!
//! with `x` = treatment true and `y` = outcome true. [`oracle_pn_ps`] computes
//! the same quantities straight from their counterfactual definitions by
//! enumerating the model; the two agree exactly when monotonicity holds.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problems::Problem;
use crate::scm::{CausalModel, Intervention, ScmError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CausationError {
    #[error("dataset is empty")]
    Empty,
    #[error("duplicate instance id {0}")]
    DuplicateId(u64),
    #[error("record {id} has {got} readings, expected {expected}")]
    RaggedReplicates {
        id: u64,
        expected: usize,
        got: usize,
    },
    #[error("interventional dataset holds do(X={got}), expected do(X={expected})")]
    WrongIntervention { expected: bool, got: bool },
    #[error("datasets are not aligned on instance ids")]
    Misaligned,
    #[error("{0} is undefined: its conditioning event has zero probability")]
    Undefined(&'static str),
    #[error(transparent)]
    Scm(#[from] ScmError),
}

/// One factual unit: exogenous point, treatment value and outcome readings.
///
/// A reading is `None` when the answer could not be concretized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactualRecord {
    pub id: u64,
    pub exogenous: Vec<i64>,
    pub x: bool,
    pub outcomes: Vec<Option<bool>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionalRecord {
    pub id: u64,
    pub exogenous: Vec<i64>,
    pub outcomes: Vec<Option<bool>>,
}

fn check_records<'a>(
    ids_and_lens: impl Iterator<Item = (u64, usize)> + 'a,
) -> Result<usize, CausationError> {
    let mut seen = BTreeSet::new();
    let mut replicates = None;
    for (id, len) in ids_and_lens {
        if !seen.insert(id) {
            return Err(CausationError::DuplicateId(id));
        }
        match replicates {
            None if len == 0 => {
                return Err(CausationError::RaggedReplicates {
                    id,
                    expected: 1,
                    got: 0,
                })
            }
            None => replicates = Some(len),
            Some(k) if k != len => {
                return Err(CausationError::RaggedReplicates {
                    id,
                    expected: k,
                    got: len,
                })
            }
            Some(_) => {}
        }
    }
    replicates.ok_or(CausationError::Empty)
}

/// Factual dataset `{(x_i, y_i, z_i)}` with `k` outcome readings per unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactualDataset {
    records: Vec<FactualRecord>,
    replicates: usize,
}

impl FactualDataset {
    pub fn new(records: Vec<FactualRecord>) -> Result<Self, CausationError> {
        let replicates = check_records(records.iter().map(|r| (r.id, r.outcomes.len())))?;
        Ok(Self {
            records,
            replicates,
        })
    }

    pub fn records(&self) -> &[FactualRecord] {
        &self.records
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Outcomes of every unit under a single intervention `do(X = value)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionalDataset {
    value: bool,
    records: Vec<InterventionalRecord>,
    replicates: usize,
}

impl InterventionalDataset {
    pub fn new(value: bool, records: Vec<InterventionalRecord>) -> Result<Self, CausationError> {
        let replicates = check_records(records.iter().map(|r| (r.id, r.outcomes.len())))?;
        Ok(Self {
            value,
            records,
            replicates,
        })
    }

    pub fn value(&self) -> bool {
        self.value
    }

    pub fn records(&self) -> &[InterventionalRecord] {
        &self.records
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Exact datasets for one problem: factual plus both interventions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetTriple {
    pub factual: FactualDataset,
    pub do_true: InterventionalDataset,
    pub do_false: InterventionalDataset,
}

impl DatasetTriple {
    /// Copies every reading `k` times, for comparing against k-replicate answers.
    pub fn with_replicates(&self, k: usize) -> Result<DatasetTriple, CausationError> {
        let widen = |o: &[Option<bool>]| -> Vec<Option<bool>> {
            o.iter().flat_map(|&v| std::iter::repeat_n(v, k)).collect()
        };
        let iv = |d: &InterventionalDataset| {
            InterventionalDataset::new(
                d.value,
                d.records
                    .iter()
                    .map(|r| InterventionalRecord {
                        outcomes: widen(&r.outcomes),
                        ..r.clone()
                    })
                    .collect(),
            )
        };
        Ok(DatasetTriple {
            factual: FactualDataset::new(
                self.factual
                    .records
                    .iter()
                    .map(|r| FactualRecord {
                        outcomes: widen(&r.outcomes),
                        ..r.clone()
                    })
                    .collect(),
            )?,
            do_true: iv(&self.do_true)?,
            do_false: iv(&self.do_false)?,
        })
    }
}

/// Ground-truth datasets generated by the model over its whole domain, with
/// instance ids numbering the enumeration order from zero.
pub fn truth_datasets(
    model: &CausalModel,
    treatment: &str,
    outcome: &str,
) -> Result<DatasetTriple, CausationError> {
    let x = model.node_position(treatment)?;
    let y = model.node_position(outcome)?;
    let forced_true = model.intervene(&Intervention::new(treatment, true))?;
    let forced_false = model.intervene(&Intervention::new(treatment, false))?;

    let mut factual = Vec::new();
    let mut on = Vec::new();
    let mut off = Vec::new();
    for (id, point) in model.enumerate_domain().enumerate() {
        let id = id as u64;
        let fact = model.eval_unchecked(&point);
        factual.push(FactualRecord {
            id,
            exogenous: point.clone(),
            x: fact[x],
            outcomes: vec![Some(fact[y])],
        });
        on.push(InterventionalRecord {
            id,
            exogenous: point.clone(),
            outcomes: vec![Some(forced_true.eval_unchecked(&point)[y])],
        });
        off.push(InterventionalRecord {
            id,
            exogenous: point.clone(),
            outcomes: vec![Some(forced_false.eval_unchecked(&point)[y])],
        });
    }
    Ok(DatasetTriple {
        factual: FactualDataset::new(factual)?,
        do_true: InterventionalDataset::new(true, on)?,
        do_false: InterventionalDataset::new(false, off)?,
    })
}

pub fn problem_truth(problem: &Problem) -> Result<DatasetTriple, CausationError> {
    truth_datasets(&problem.model, &problem.treatment, &problem.outcome)
}

/// Counts over (treatment, outcome) for every parsed reading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

impl ContingencyTable {
    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    pub fn add(&mut self, x: bool, y: bool) {
        match (x, y) {
            (true, true) => self.n11 += 1,
            (true, false) => self.n10 += 1,
            (false, true) => self.n01 += 1,
            (false, false) => self.n00 += 1,
        }
    }
}

pub fn contingency(f: &FactualDataset) -> Result<ContingencyTable, CausationError> {
    if f.is_empty() {
        return Err(CausationError::Empty);
    }
    let mut table = ContingencyTable::default();
    for r in &f.records {
        for y in r.outcomes.iter().flatten() {
            table.add(r.x, *y);
        }
    }
    Ok(table)
}

/// Raw counts feeding the estimator. Shared with the bootstrap so resamples
/// need not materialize datasets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Frequencies {
    pub table: ContingencyTable,
    pub do_true_total: u64,
    pub do_true_y: u64,
    pub do_false_total: u64,
    pub do_false_y: u64,
}

impl Frequencies {
    pub fn p_y(&self) -> Option<f64> {
        ratio(self.table.n11 + self.table.n01, self.table.total())
    }

    pub fn p_xy(&self) -> Option<f64> {
        ratio(self.table.n11, self.table.total())
    }

    pub fn p_xprime_yprime(&self) -> Option<f64> {
        ratio(self.table.n00, self.table.total())
    }

    pub fn p_y_do_x(&self) -> Option<f64> {
        ratio(self.do_true_y, self.do_true_total)
    }

    pub fn p_y_do_xprime(&self) -> Option<f64> {
        ratio(self.do_false_y, self.do_false_total)
    }

    pub fn pn(&self) -> Option<f64> {
        let p_xy = self.p_xy().filter(|&p| p > 0.0)?;
        Some((self.p_y()? - self.p_y_do_xprime()?) / p_xy)
    }

    pub fn ps(&self) -> Option<f64> {
        let p_x0y0 = self.p_xprime_yprime().filter(|&p| p > 0.0)?;
        Some((self.p_y_do_x()? - self.p_y()?) / p_x0y0)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausationEstimate {
    pub pn: f64,
    pub ps: f64,
    pub pns: f64,
    pub p_y: f64,
    pub p_y_do_x: f64,
    pub p_y_do_xprime: f64,
    pub p_xy: f64,
    pub p_xprime_yprime: f64,
    /// Whether the outcome is monotonic in the treatment. When false the
    /// identification formula does not apply and `pn`/`ps` are only
    /// indicative; the arithmetic itself is unchanged.
    pub monotone: bool,
}

impl CausationEstimate {
    pub fn from_frequencies(freq: &Frequencies, monotone: bool) -> Result<Self, CausationError> {
        let p_y = freq.p_y().ok_or(CausationError::Empty)?;
        let p_y_do_x = freq.p_y_do_x().ok_or(CausationError::Empty)?;
        let p_y_do_xprime = freq.p_y_do_xprime().ok_or(CausationError::Empty)?;
        let pn = freq.pn().ok_or(CausationError::Undefined("PN"))?;
        let ps = freq.ps().ok_or(CausationError::Undefined("PS"))?;
        let p_xy = freq.p_xy().unwrap_or(0.0);
        let p_xprime_yprime = freq.p_xprime_yprime().unwrap_or(0.0);
        Ok(Self {
            pn,
            ps,
            pns: p_xy * pn + p_xprime_yprime * ps,
            p_y,
            p_y_do_x,
            p_y_do_xprime,
            p_xy,
            p_xprime_yprime,
            monotone,
        })
    }
}

fn outcome_counts(d: &InterventionalDataset) -> (u64, u64) {
    d.records
        .iter()
        .flat_map(|r| r.outcomes.iter().flatten())
        .fold((0, 0), |(n, y), &v| (n + 1, y + u64::from(v)))
}

fn same_ids(f: &FactualDataset, d: &InterventionalDataset) -> bool {
    f.records.len() == d.records.len() && {
        let ids: BTreeSet<u64> = f.records.iter().map(|r| r.id).collect();
        d.records.iter().all(|r| ids.contains(&r.id))
    }
}

pub fn frequencies(
    f: &FactualDataset,
    do_true: &InterventionalDataset,
    do_false: &InterventionalDataset,
) -> Result<Frequencies, CausationError> {
    if f.is_empty() || do_true.is_empty() || do_false.is_empty() {
        return Err(CausationError::Empty);
    }
    for (d, expected) in [(do_true, true), (do_false, false)] {
        if d.value != expected {
            return Err(CausationError::WrongIntervention {
                expected,
                got: d.value,
            });
        }
        if !same_ids(f, d) {
            return Err(CausationError::Misaligned);
        }
    }
    let (do_true_total, do_true_y) = outcome_counts(do_true);
    let (do_false_total, do_false_y) = outcome_counts(do_false);
    Ok(Frequencies {
        table: contingency(f)?,
        do_true_total,
        do_true_y,
        do_false_total,
        do_false_y,
    })
}

/// PN, PS and PNS from empirical frequencies. Results outside `[0, 1]` are
/// returned unclamped: they flag factual and interventional data that no
/// monotone model could have produced.
pub fn estimate(
    f: &FactualDataset,
    do_true: &InterventionalDataset,
    do_false: &InterventionalDataset,
    monotone: bool,
) -> Result<CausationEstimate, CausationError> {
    CausationEstimate::from_frequencies(&frequencies(f, do_true, do_false)?, monotone)
}

/// PN and PS by their counterfactual definitions, enumerating the domain
/// with uniform weight:
///
/// * PN: among units with treatment and outcome true, the share whose
///   outcome would be false under `do(treatment = false)`.
/// * PS: among units with both false, the share whose outcome would be true
///   under `do(treatment = true)`.
pub fn oracle_pn_ps(
    model: &CausalModel,
    treatment: &str,
    outcome: &str,
) -> Result<(f64, f64), CausationError> {
    let x = model.node_position(treatment)?;
    let y = model.node_position(outcome)?;
    let forced_true = model.intervene(&Intervention::new(treatment, true))?;
    let forced_false = model.intervene(&Intervention::new(treatment, false))?;
    let (mut pn_units, mut pn_hits, mut ps_units, mut ps_hits) = (0u64, 0u64, 0u64, 0u64);
    for point in model.enumerate_domain() {
        let fact = model.eval_unchecked(&point);
        match (fact[x], fact[y]) {
            (true, true) => {
                pn_units += 1;
                pn_hits += u64::from(!forced_false.eval_unchecked(&point)[y]);
            }
            (false, false) => {
                ps_units += 1;
                ps_hits += u64::from(forced_true.eval_unchecked(&point)[y]);
            }
            _ => {}
        }
    }
    let pn = ratio(pn_hits, pn_units).ok_or(CausationError::Undefined("PN"))?;
    let ps = ratio(ps_hits, ps_units).ok_or(CausationError::Undefined("PS"))?;
    Ok((pn, ps))
}

/// Ground truth for a problem: the identification-formula estimate on exact
/// datasets, the definitional values, and the monotonicity flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub estimate: CausationEstimate,
    pub oracle_pn: f64,
    pub oracle_ps: f64,
    pub contingency: ContingencyTable,
}

pub fn ground_truth(problem: &Problem) -> Result<GroundTruth, CausationError> {
    let data = problem_truth(problem)?;
    let monotone = problem
        .model
        .check_monotonicity(&problem.treatment, &problem.outcome)?;
    let estimate = estimate(&data.factual, &data.do_true, &data.do_false, monotone)?;
    let (oracle_pn, oracle_ps) =
        oracle_pn_ps(&problem.model, &problem.treatment, &problem.outcome)?;
    Ok(GroundTruth {
        estimate,
        oracle_pn,
        oracle_ps,
        contingency: contingency(&data.factual)?,
    })
}

/// Maps instance id to record position, for aligning datasets.
pub(crate) fn index_by_id<'a>(ids: impl Iterator<Item = &'a u64>) -> HashMap<u64, usize> {
    ids.enumerate().map(|(i, &id)| (id, i)).collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::problems::{build_candyparty, build_conpref, build_div6, build_evensum};

    fn truth(p: &Problem) -> (DatasetTriple, bool) {
        let data = problem_truth(p).unwrap();
        let mono = p
            .model
            .check_monotonicity(&p.treatment, &p.outcome)
            .unwrap();
        (data, mono)
    }

    fn est(p: &Problem) -> CausationEstimate {
        let (d, mono) = truth(p);
        estimate(&d.factual, &d.do_true, &d.do_false, mono).unwrap()
    }

    #[test]
    fn contingency_examples() {
        let (d, _) = truth(&build_div6(400).unwrap());
        let t = contingency(&d.factual).unwrap();
        assert_eq!((t.n11, t.n10, t.n01, t.n00), (66, 67, 0, 267));

        let (d, _) = truth(&build_evensum(8).unwrap());
        let t = contingency(&d.factual).unwrap();
        assert_eq!((t.n11, t.n10, t.n01, t.n00), (128, 128, 128, 128));

        let single = FactualDataset::new(vec![FactualRecord {
            id: 0,
            exogenous: vec![],
            x: true,
            outcomes: vec![Some(true)],
        }])
        .unwrap();
        assert_eq!(
            contingency(&single).unwrap(),
            ContingencyTable {
                n11: 1,
                ..Default::default()
            }
        );
    }

    #[test]
    fn empty_and_malformed_datasets() {
        assert_eq!(FactualDataset::new(vec![]), Err(CausationError::Empty));
        let rec = |id, k| FactualRecord {
            id,
            exogenous: vec![],
            x: true,
            outcomes: vec![Some(true); k],
        };
        assert_eq!(
            FactualDataset::new(vec![rec(0, 1), rec(0, 1)]),
            Err(CausationError::DuplicateId(0))
        );
        assert!(matches!(
            FactualDataset::new(vec![rec(0, 2), rec(1, 1)]),
            Err(CausationError::RaggedReplicates { .. })
        ));
    }

    // Expected values below were computed by hand from enumeration counts and
    // are cross-checked by `oracle_pn_ps` and `brute_force_probabilities`.

    #[test]
    fn div6_estimate() {
        let e = est(&build_div6(400).unwrap());
        assert_eq!(e.pn, 1.0);
        // P(y|do(x)) = 200/400, P(y) = 66/400, P(x',y') = 267/400.
        assert!((e.ps - 134.0 / 267.0).abs() < 1e-12);
        assert!((e.ps - 0.50).abs() < 0.005);
        assert!(e.monotone);
    }

    #[test]
    fn conpref_estimate() {
        let e = est(&build_conpref(8).unwrap());
        assert!((e.p_y - 120.0 / 512.0).abs() < 1e-15);
        assert!((e.p_y_do_x - 36.0 / 64.0).abs() < 1e-15);
        assert_eq!(e.p_y_do_xprime, 0.0);
        assert!((e.p_xprime_yprime - 28.0 / 64.0).abs() < 1e-15);
        assert!((e.pn - 1.0).abs() < 1e-12);
        assert!((e.ps - 0.75).abs() < 1e-12);
    }

    #[test]
    fn evensum_estimate_and_oracle_diverge() {
        let p = build_evensum(8).unwrap();
        let e = est(&p);
        assert_eq!((e.pn, e.ps, e.monotone), (0.0, 0.0, false));
        assert_eq!(
            oracle_pn_ps(&p.model, &p.treatment, &p.outcome).unwrap(),
            (1.0, 1.0)
        );
    }

    #[test]
    fn oracle_examples() {
        let p = build_div6(400).unwrap();
        let (pn, ps) = oracle_pn_ps(&p.model, &p.treatment, &p.outcome).unwrap();
        assert_eq!(pn, 1.0);
        assert!((ps - 134.0 / 267.0).abs() < 1e-12);
        let p = build_conpref(8).unwrap();
        let (pn, ps) = oracle_pn_ps(&p.model, &p.treatment, &p.outcome).unwrap();
        assert!((pn - 1.0).abs() < 1e-12 && (ps - 0.75).abs() < 1e-12);
    }

    /// Identification-formula ingredients straight from the problem definition, no model.
    fn brute_force_probabilities(range: i64) -> (f64, f64, f64, f64, f64) {
        let (mut y, mut xy, mut x0y0, mut do_x) = (0, 0, 0, 0);
        let total = range * range * range;
        for n in 1..=range {
            for m in 1..=range {
                for t in 1..=range {
                    let x = n <= m;
                    let out = x && m <= t;
                    y += i64::from(out);
                    xy += i64::from(x && out);
                    x0y0 += i64::from(!x && !out);
                    do_x += i64::from(m <= t);
                }
            }
        }
        let f = |c: i64| c as f64 / total as f64;
        // Under do(N > M) the conjunction never holds.
        (f(y), f(xy), f(x0y0), f(do_x), 0.0)
    }

    #[test]
    fn conpref_matches_brute_force() {
        let (y, xy, x0y0, do_x, do_x0) = brute_force_probabilities(8);
        let e = est(&build_conpref(8).unwrap());
        assert!((e.pn - (y - do_x0) / xy).abs() < 1e-12);
        assert!((e.ps - (do_x - y) / x0y0).abs() < 1e-12);
    }

    #[test]
    fn identifiability_under_monotonicity() {
        for p in crate::problems::registry() {
            let e = est(&p);
            let (pn, ps) = oracle_pn_ps(&p.model, &p.treatment, &p.outcome).unwrap();
            if e.monotone {
                assert!((e.pn - pn).abs() < 1e-12, "{}", p.name());
                assert!((e.ps - ps).abs() < 1e-12, "{}", p.name());
                assert!((0.0..=1.0).contains(&e.pn) && (0.0..=1.0).contains(&e.ps));
            }
            assert!((e.pns - (e.p_xy * e.pn + e.p_xprime_yprime * e.ps)).abs() < 1e-12);
        }
    }

    #[test]
    fn candyparty_is_defined_and_monotone() {
        let e = est(&build_candyparty(20).unwrap());
        assert!(e.monotone);
        assert!((0.0..=1.0).contains(&e.pn));
    }

    #[test]
    fn undefined_estimates_are_typed_errors() {
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
            estimate(&f, &iv(true), &iv(false), true),
            Err(CausationError::Undefined("PN"))
        );
        assert!(matches!(
            estimate(&f, &iv(false), &iv(false), true),
            Err(CausationError::WrongIntervention { .. })
        ));
    }

    #[test]
    fn unparseable_readings_are_excluded() {
        let f = FactualDataset::new(vec![
            FactualRecord {
                id: 0,
                exogenous: vec![],
                x: true,
                outcomes: vec![Some(true), None],
            },
            FactualRecord {
                id: 1,
                exogenous: vec![],
                x: false,
                outcomes: vec![None, Some(false)],
            },
        ])
        .unwrap();
        let t = contingency(&f).unwrap();
        assert_eq!((t.n11, t.n00, t.total()), (1, 1, 2));
    }

    #[test]
    fn replicate_widening_keeps_estimates() {
        let p = build_div6(60).unwrap();
        let (d, mono) = truth(&p);
        let wide = d.with_replicates(4).unwrap();
        assert_eq!(wide.factual.replicates(), 4);
        let a = estimate(&d.factual, &d.do_true, &d.do_false, mono).unwrap();
        let b = estimate(&wide.factual, &wide.do_true, &wide.do_false, mono).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn permutation_invariance(seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let p = build_div6(120).unwrap();
            let (d, mono) = truth(&p);
            let base = estimate(&d.factual, &d.do_true, &d.do_false, mono).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut fr = d.factual.records().to_vec();
            fr.shuffle(&mut rng);
            let mut tr = d.do_true.records().to_vec();
            tr.shuffle(&mut rng);
            let f = FactualDataset::new(fr).unwrap();
            let t = InterventionalDataset::new(true, tr).unwrap();
            prop_assert_eq!(estimate(&f, &t, &d.do_false, mono).unwrap(), base);
        }

        #[test]
        fn pns_identity_on_arbitrary_counts(
            n11 in 1u64..50, n10 in 0u64..50, n01 in 0u64..50, n00 in 1u64..50,
            t in 1u64..50, ty in 0u64..50, f in 1u64..50, fy in 0u64..50,
        ) {
            let freq = Frequencies {
                table: ContingencyTable { n11, n10, n01, n00 },
                do_true_total: t, do_true_y: ty.min(t),
                do_false_total: f, do_false_y: fy.min(f),
            };
            let e = CausationEstimate::from_frequencies(&freq, true).unwrap();
            prop_assert!((e.pns - (e.p_xy * e.pn + e.p_xprime_yprime * e.ps)).abs() < 1e-12);
        }
    }
}

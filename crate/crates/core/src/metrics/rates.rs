//! Factual and counterfactual inconsistency rates and element-wise errors.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::causation::{index_by_id, DatasetTriple, FactualDataset, InterventionalDataset};

/// Mismatch rate between agent answers and model truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Mismatches over all parsed (instance, replicate) answers.
    pub rate: f64,
    /// Sample standard deviation of the per-replicate rates over `sqrt(k)`.
    pub stderr: f64,
    /// Instances per channel.
    pub n: usize,
    /// Replicates per instance.
    pub k: usize,
    /// Parsed answers the rate is taken over.
    pub parsed: usize,
}

/// Truth value and agent readings for one instance of one channel.
struct Row<'a> {
    id: u64,
    truth: bool,
    readings: &'a [Option<bool>],
}

fn truth_value(id: u64, outcomes: &[Option<bool>]) -> Result<bool, MetricsError> {
    outcomes
        .iter()
        .flatten()
        .copied()
        .next()
        .ok_or(MetricsError::MissingTruth(id))
}

fn align<'a>(
    truth: impl Iterator<Item = (u64, &'a [Option<bool>])>,
    llm: impl Iterator<Item = (u64, &'a [Option<bool>])>,
) -> Result<Vec<Row<'a>>, MetricsError> {
    let truth: Vec<(u64, &[Option<bool>])> = truth.collect();
    let llm: HashMap<u64, &[Option<bool>]> = llm.collect();
    if truth.len() != llm.len() {
        return Err(MetricsError::Misaligned);
    }
    truth
        .into_iter()
        .map(|(id, t)| {
            let readings = llm.get(&id).ok_or(MetricsError::Misaligned)?;
            Ok(Row {
                id,
                truth: truth_value(id, t)?,
                readings,
            })
        })
        .collect()
}

fn factual_rows<'a>(
    truth: &'a FactualDataset,
    llm: &'a FactualDataset,
) -> Result<Vec<Row<'a>>, MetricsError> {
    align(
        truth
            .records()
            .iter()
            .map(|r| (r.id, r.outcomes.as_slice())),
        llm.records().iter().map(|r| (r.id, r.outcomes.as_slice())),
    )
}

fn interventional_rows<'a>(
    truth: &'a InterventionalDataset,
    llm: &'a InterventionalDataset,
) -> Result<Vec<Row<'a>>, MetricsError> {
    if truth.value() != llm.value() {
        return Err(MetricsError::InterventionMismatch);
    }
    align(
        truth
            .records()
            .iter()
            .map(|r| (r.id, r.outcomes.as_slice())),
        llm.records().iter().map(|r| (r.id, r.outcomes.as_slice())),
    )
}

fn rate_over(channels: &[Vec<Row<'_>>], n: usize, k: usize) -> Result<RateReport, MetricsError> {
    let mut mism = vec![0u64; k];
    let mut parsed = vec![0u64; k];
    for row in channels.iter().flatten() {
        for (j, reading) in row.readings.iter().enumerate() {
            if let Some(v) = reading {
                parsed[j] += 1;
                mism[j] += u64::from(*v != row.truth);
            }
        }
    }
    let total: u64 = parsed.iter().sum();
    if total == 0 {
        return Err(MetricsError::NoParsedAnswers);
    }
    let rate = mism.iter().sum::<u64>() as f64 / total as f64;
    let per_rep: Vec<f64> = mism
        .iter()
        .zip(&parsed)
        .filter(|(_, &p)| p > 0)
        .map(|(&m, &p)| m as f64 / p as f64)
        .collect();
    let stderr = if per_rep.len() < 2 {
        0.0
    } else {
        let mean = per_rep.iter().sum::<f64>() / per_rep.len() as f64;
        let var =
            per_rep.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (per_rep.len() - 1) as f64;
        var.sqrt() / (per_rep.len() as f64).sqrt()
    };
    Ok(RateReport {
        rate,
        stderr,
        n,
        k,
        parsed: total as usize,
    })
}

/// Factual inconsistency rate.
pub fn fir(truth: &FactualDataset, llm: &FactualDataset) -> Result<RateReport, MetricsError> {
    let rows = factual_rows(truth, llm)?;
    rate_over(&[rows], llm.len(), llm.replicates())
}

/// Counterfactual inconsistency rate for one intervention value.
pub fn cir(
    truth: &InterventionalDataset,
    llm: &InterventionalDataset,
) -> Result<RateReport, MetricsError> {
    let rows = interventional_rows(truth, llm)?;
    rate_over(&[rows], llm.len(), llm.replicates())
}

/// Counterfactual inconsistency rate over both interventions together.
pub fn cir_pooled(truth: &DatasetTriple, llm: &DatasetTriple) -> Result<RateReport, MetricsError> {
    if llm.do_true.replicates() != llm.do_false.replicates() {
        return Err(MetricsError::Misaligned);
    }
    let on = interventional_rows(&truth.do_true, &llm.do_true)?;
    let off = interventional_rows(&truth.do_false, &llm.do_false)?;
    rate_over(&[on, off], llm.do_true.len(), llm.do_true.replicates())
}

/// Per-instance mismatch fraction over replicates; `None` where no replicate
/// was parsed. Rows follow the truth dataset order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMatrix {
    pub instance_ids: Vec<u64>,
    pub factual: Vec<Option<f64>>,
    pub counterfactual_true: Vec<Option<f64>>,
    pub counterfactual_false: Vec<Option<f64>>,
}

fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

impl ErrorMatrix {
    /// Mean of the two counterfactual channels per instance.
    pub fn counterfactual(&self) -> Vec<Option<f64>> {
        self.counterfactual_true
            .iter()
            .zip(&self.counterfactual_false)
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => Some((a + b) / 2.0),
                (Some(v), None) | (None, Some(v)) => Some(*v),
                (None, None) => None,
            })
            .collect()
    }

    pub fn factual_mean(&self) -> Option<f64> {
        mean_defined(&self.factual)
    }

    pub fn counterfactual_mean(&self) -> Option<f64> {
        mean_defined(&self.counterfactual())
    }
}

fn per_instance(rows: &[Row<'_>], order: &HashMap<u64, usize>) -> Vec<Option<f64>> {
    let mut out = vec![None; rows.len()];
    for row in rows {
        let parsed: Vec<bool> = row.readings.iter().flatten().copied().collect();
        if !parsed.is_empty() {
            let wrong = parsed.iter().filter(|&&v| v != row.truth).count();
            out[order[&row.id]] = Some(wrong as f64 / parsed.len() as f64);
        }
    }
    out
}

pub fn element_error_matrix(
    truth: &DatasetTriple,
    llm: &DatasetTriple,
) -> Result<ErrorMatrix, MetricsError> {
    let order = index_by_id(truth.factual.records().iter().map(|r| &r.id));
    let f = factual_rows(&truth.factual, &llm.factual)?;
    let on = interventional_rows(&truth.do_true, &llm.do_true)?;
    let off = interventional_rows(&truth.do_false, &llm.do_false)?;
    if on.iter().chain(&off).any(|r| !order.contains_key(&r.id)) {
        return Err(MetricsError::Misaligned);
    }
    Ok(ErrorMatrix {
        instance_ids: truth.factual.records().iter().map(|r| r.id).collect(),
        factual: per_instance(&f, &order),
        counterfactual_true: per_instance(&on, &order),
        counterfactual_false: per_instance(&off, &order),
    })
}

//! The subcommands. Each reads its inputs from, and writes its outputs to,
//! the configured output directory:
//!
//! ```text
//! <out>/truth/{factual,do_true,do_false}.csv, truth.json      truth
//! <out>/query/{factual,do_true,do_false}.csv, summary.json    query
//! <out>/report.json, <out>/exports/*.csv                      evaluate
//! <out>/noise/density_<p>.csv, noise_report.json              noise
//! ```

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use causeval_core::causation::{estimate, ground_truth, problem_truth, DatasetTriple, GroundTruth};
use causeval_core::llm::{
    collect, Agent, CollectOptions, Concretization, RemoteClient, ResponseCache, UnparseableCounts,
};
use causeval_core::metrics::{
    bootstrap, cir, cir_pooled, element_error_matrix, fir, noise_sensitivity, overlap, quantile,
    RateReport,
};
use causeval_core::problems::Problem;

use crate::io::{read_triple, write_collection, write_truth};
use crate::report::{
    read_json, write_json, CounterfactualRates, EvaluationReport, NoiseLevelReport, NoiseReport,
    QuerySummary, SampleSummary, TrueValues, TruthRecord, SCHEMA_VERSION,
};
use crate::{HarnessError, RunConfig, TruthReference};

pub const NON_MONOTONE_CAVEAT: &str = "the outcome is not monotone in the treatment: the \
    identification formula does not recover PN and PS here, and the oracle values give the \
    counterfactual probabilities";

/// Paths under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(cfg: &RunConfig) -> Self {
        Self {
            root: cfg.out_dir.clone(),
        }
    }

    pub fn truth_dir(&self) -> PathBuf {
        self.root.join("truth")
    }

    pub fn truth_record(&self) -> PathBuf {
        self.truth_dir().join("truth.json")
    }

    pub fn query_dir(&self) -> PathBuf {
        self.root.join("query")
    }

    pub fn query_summary(&self) -> PathBuf {
        self.query_dir().join("summary.json")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn exports_dir(&self) -> PathBuf {
        self.root.join("exports")
    }

    pub fn noise_dir(&self) -> PathBuf {
        self.root.join("noise")
    }

    pub fn noise_report(&self) -> PathBuf {
        self.noise_dir().join("noise_report.json")
    }
}

fn now(cfg: &RunConfig) -> Option<u64> {
    cfg.record_timestamps.then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    })
}

fn caveat(monotone: bool) -> Option<String> {
    (!monotone).then(|| NON_MONOTONE_CAVEAT.to_string())
}

fn true_values(gt: &GroundTruth) -> TrueValues {
    TrueValues {
        pn: gt.estimate.pn,
        ps: gt.estimate.ps,
        pns: gt.estimate.pns,
        oracle_pn: gt.oracle_pn,
        oracle_ps: gt.oracle_ps,
    }
}

pub fn cmd_truth(cfg: &RunConfig) -> Result<TruthRecord, HarnessError> {
    let problem = cfg.problem()?;
    let layout = Layout::new(cfg);
    let names = problem.model.exogenous_names();
    let data = problem_truth(&problem)?;
    let gt = ground_truth(&problem)?;
    write_truth(&layout.truth_dir(), &names, &data)?;
    let record = TruthRecord {
        schema_version: SCHEMA_VERSION,
        problem: problem.name().into(),
        domain: cfg.domain(),
        exogenous: names,
        treatment: problem.treatment.clone(),
        outcome: problem.outcome.clone(),
        instances: data.factual.len(),
        monotone: gt.estimate.monotone,
        contingency: gt.contingency,
        estimate: gt.estimate,
        oracle_pn: gt.oracle_pn,
        oracle_ps: gt.oracle_ps,
        caveat: caveat(gt.estimate.monotone),
    };
    write_json(&layout.truth_record(), &record)?;
    Ok(record)
}

fn extractor_client(cfg: &RunConfig) -> Result<Option<(String, RemoteClient)>, HarnessError> {
    match (&cfg.extractor, cfg.concretization) {
        (Some(spec), Concretization::Extractor) => Ok(Some((
            format!("extractor:{}:{}", spec.endpoint, spec.model),
            RemoteClient::from_spec(spec)?,
        ))),
        _ => Ok(None),
    }
}

fn query_problem(
    cfg: &RunConfig,
    problem: &Problem,
) -> Result<causeval_core::llm::Collection, HarnessError> {
    let agent = Agent::from_spec(&cfg.agent)?;
    let extractor = extractor_client(cfg)?;
    // Mock agents never reach the network, so they get no cache file.
    let cache = if agent.is_remote() || extractor.is_some() {
        ResponseCache::open(cfg.cache_path())?
    } else {
        ResponseCache::in_memory()
    };
    let opts = CollectOptions {
        replicates: cfg.replicates,
        concretization: cfg.concretization,
        concurrency: cfg.concurrency,
    };
    let extractor = extractor.as_ref().map(|(id, c)| (id.as_str(), c));
    Ok(collect(problem, &agent, &opts, &cache, extractor)?)
}

pub fn cmd_query(cfg: &RunConfig) -> Result<QuerySummary, HarnessError> {
    let problem = cfg.problem()?;
    let layout = Layout::new(cfg);
    let c = query_problem(cfg, &problem)?;
    write_collection(&layout.query_dir(), &problem.model.exogenous_names(), &c)?;
    let summary = QuerySummary {
        schema_version: SCHEMA_VERSION,
        problem: problem.name().into(),
        agent: cfg.agent.identity(),
        replicates: cfg.replicates,
        instances: c.datasets.factual.len(),
        concretization: cfg.concretization,
        unparseable: c.unparseable,
        all_unparseable: c.all_unparseable,
    };
    write_json(&layout.query_summary(), &summary)?;
    Ok(summary)
}

fn unparseable(d: &DatasetTriple) -> UnparseableCounts {
    let none = |outcomes: &[Option<bool>]| outcomes.iter().filter(|o| o.is_none()).count();
    UnparseableCounts {
        factual: d.factual.records().iter().map(|r| none(&r.outcomes)).sum(),
        counterfactual_true: d.do_true.records().iter().map(|r| none(&r.outcomes)).sum(),
        counterfactual_false: d.do_false.records().iter().map(|r| none(&r.outcomes)).sum(),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[String], rows: Vec<Vec<String>>) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(HarnessError::io(parent))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::format(path, e))?;
    let err = |e: csv::Error| HarnessError::format(path, e);
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(HarnessError::io(path))
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvaluationReport, HarnessError> {
    let problem = cfg.problem()?;
    let layout = Layout::new(cfg);
    let names = problem.model.exogenous_names();
    let truth = read_triple(&layout.truth_dir(), &names, "truth")?;
    let llm = read_triple(&layout.query_dir(), &names, "query")?;

    let agent = if layout.query_summary().exists() {
        let summary: QuerySummary = read_json(&layout.query_summary(), "query")?;
        if summary.problem != problem.name() {
            return Err(HarnessError::Config(format!(
                "query outputs are for {}, configuration is for {}",
                summary.problem,
                problem.name()
            )));
        }
        summary.agent
    } else {
        "unknown".to_string()
    };

    let monotone = problem
        .model
        .check_monotonicity(&problem.treatment, &problem.outcome)?;
    let true_est = estimate(&truth.factual, &truth.do_true, &truth.do_false, monotone)?;
    let (oracle_pn, oracle_ps) = causeval_core::causation::oracle_pn_ps(
        &problem.model,
        &problem.treatment,
        &problem.outcome,
    )?;
    let truth_values = TrueValues {
        pn: true_est.pn,
        ps: true_est.ps,
        pns: true_est.pns,
        oracle_pn,
        oracle_ps,
    };

    let mut notes = Vec::new();
    let est = keep(
        &mut notes,
        "estimate",
        estimate(&llm.factual, &llm.do_true, &llm.do_false, monotone).map_err(|e| e.to_string()),
    );
    let fir_report = keep(
        &mut notes,
        "fir",
        fir(&truth.factual, &llm.factual).map_err(|e| e.to_string()),
    );
    let cir_report = keep(
        &mut notes,
        "cir",
        (|| -> Result<CounterfactualRates, causeval_core::metrics::MetricsError> {
            Ok(CounterfactualRates {
                do_true: cir(&truth.do_true, &llm.do_true)?,
                do_false: cir(&truth.do_false, &llm.do_false)?,
                pooled: cir_pooled(&truth, &llm)?,
            })
        })()
        .map_err(|e| e.to_string()),
    );
    let density = keep(
        &mut notes,
        "bootstrap",
        bootstrap(
            &llm.factual,
            &llm.do_true,
            &llm.do_false,
            cfg.bootstrap,
            cfg.seed,
            cfg.bootstrap_scheme,
        )
        .map_err(|e| e.to_string()),
    );
    let (ref_pn, ref_ps) = match cfg.overlap_truth {
        TruthReference::Estimate => (truth_values.pn, truth_values.ps),
        TruthReference::Oracle => (oracle_pn, oracle_ps),
    };
    let grid = cfg.grid()?;
    let curve = match &density {
        Some(d) => keep(
            &mut notes,
            "overlap",
            overlap(d, ref_pn, ref_ps, &grid).map_err(|e| e.to_string()),
        ),
        None => None,
    };
    let matrix = keep(
        &mut notes,
        "error_matrix",
        element_error_matrix(&truth, &llm).map_err(|e| e.to_string()),
    );

    let report = EvaluationReport {
        schema_version: SCHEMA_VERSION,
        problem: problem.name().into(),
        agent,
        instances: llm.factual.len(),
        replicates: llm.factual.replicates(),
        monotone,
        caveat: caveat(monotone),
        truth: truth_values,
        estimate: est,
        fir: fir_report,
        cir: cir_report,
        unparseable: unparseable(&llm),
        bootstrap: density,
        overlap_truth: cfg.overlap_truth,
        overlap: curve,
        error_matrix: matrix,
        notes,
        generated_at: now(cfg),
        config: cfg.clone(),
    };
    write_json(&layout.report(), &report)?;
    write_exports(&layout.exports_dir(), &truth, &names, &report)?;
    Ok(report)
}

fn write_exports(
    dir: &Path,
    truth: &DatasetTriple,
    names: &[String],
    report: &EvaluationReport,
) -> Result<(), HarnessError> {
    let samples = report
        .bootstrap
        .as_ref()
        .map(|d| d.pairs())
        .unwrap_or_default()
        .into_iter()
        .enumerate()
        .map(|(i, (pn, ps))| vec![i.to_string(), fmt_opt(pn), fmt_opt(ps)])
        .collect();
    write_csv(
        &dir.join("pn_ps_samples.csv"),
        &strings(&["iteration", "pn", "ps"]),
        samples,
    )?;

    let overlap_rows = report
        .overlap
        .as_ref()
        .map(|c| {
            (0..c.gamma.len())
                .map(|i| {
                    vec![
                        c.gamma[i].to_string(),
                        c.pn[i].to_string(),
                        c.ps[i].to_string(),
                    ]
                })
                .collect()
        })
        .unwrap_or_default();
    write_csv(
        &dir.join("overlap.csv"),
        &strings(&["gamma", "pn", "ps"]),
        overlap_rows,
    )?;

    let mut header = vec!["instance_id".to_string()];
    header.extend(names.iter().cloned());
    header.extend(strings(&[
        "factual",
        "counterfactual_true",
        "counterfactual_false",
        "counterfactual",
    ]));
    let heat = report
        .error_matrix
        .as_ref()
        .map(|m| {
            let cf = m.counterfactual();
            truth
                .factual
                .records()
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut row = vec![r.id.to_string()];
                    row.extend(r.exogenous.iter().map(i64::to_string));
                    row.extend([
                        fmt_opt(m.factual[i]),
                        fmt_opt(m.counterfactual_true[i]),
                        fmt_opt(m.counterfactual_false[i]),
                        fmt_opt(cf[i]),
                    ]);
                    row
                })
                .collect()
        })
        .unwrap_or_default();
    write_csv(&dir.join("heatmap.csv"), &header, heat)
}

fn keep<T>(notes: &mut Vec<String>, what: &str, r: Result<T, String>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            None
        }
    }
}

fn summarize(samples: &[f64]) -> Option<SampleSummary> {
    Some(SampleSummary {
        min: quantile(samples, 0.0)?,
        p05: quantile(samples, 0.05)?,
        p50: quantile(samples, 0.5)?,
        p95: quantile(samples, 0.95)?,
        max: quantile(samples, 1.0)?,
    })
}

pub fn density_file_name(flip_prob: f64) -> String {
    format!("density_{flip_prob}.csv")
}

pub fn cmd_noise(cfg: &RunConfig) -> Result<NoiseReport, HarnessError> {
    let problem = cfg.problem()?;
    let layout = Layout::new(cfg);
    let gt = ground_truth(&problem)?;
    let levels = noise_sensitivity(
        &problem,
        &cfg.flip_probs,
        cfg.replicates,
        cfg.bootstrap,
        cfg.seed,
        cfg.bootstrap_scheme,
    )?;
    let mut reports = Vec::with_capacity(levels.len());
    for level in &levels {
        let file = density_file_name(level.flip_prob);
        let rows = level
            .density
            .pairs()
            .into_iter()
            .enumerate()
            .map(|(i, (pn, ps))| vec![i.to_string(), fmt_opt(pn), fmt_opt(ps)])
            .collect();
        write_csv(
            &layout.noise_dir().join(&file),
            &strings(&["iteration", "pn", "ps"]),
            rows,
        )?;
        reports.push(NoiseLevelReport {
            flip_prob: level.flip_prob,
            density_file: file,
            cir: level.cir,
            estimate: level.estimate,
            pn_dropped: level.density.pn_dropped,
            ps_dropped: level.density.ps_dropped,
            pn: summarize(&level.density.pn_samples),
            ps: summarize(&level.density.ps_samples),
        });
    }
    let report = NoiseReport {
        schema_version: SCHEMA_VERSION,
        problem: problem.name().into(),
        truth: true_values(&gt),
        monotone: gt.estimate.monotone,
        replicates: cfg.replicates,
        bootstrap: cfg.bootstrap,
        levels: reports,
        generated_at: now(cfg),
        config: cfg.clone(),
    };
    write_json(&layout.noise_report(), &report)?;
    Ok(report)
}

/// Outcome of a smoke run against a configured endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SmokeOutcome {
    pub agent: String,
    pub fir: Option<RateReport>,
    pub cir: Option<CounterfactualRates>,
    pub pn: Option<f64>,
    pub ps: Option<f64>,
    pub unparseable: UnparseableCounts,
}

/// Queries the configured agent on the configured problem and compares the
/// answers with the model truth, using the response cache but writing no
/// tables.
pub fn cmd_smoke(cfg: &RunConfig) -> Result<SmokeOutcome, HarnessError> {
    let problem = cfg.problem()?;
    let truth = problem_truth(&problem)?;
    let c = query_problem(cfg, &problem)?;
    let llm = &c.datasets;
    let monotone = problem
        .model
        .check_monotonicity(&problem.treatment, &problem.outcome)?;
    let est = estimate(&llm.factual, &llm.do_true, &llm.do_false, monotone).ok();
    let cir_report = (|| -> Result<CounterfactualRates, causeval_core::metrics::MetricsError> {
        Ok(CounterfactualRates {
            do_true: cir(&truth.do_true, &llm.do_true)?,
            do_false: cir(&truth.do_false, &llm.do_false)?,
            pooled: cir_pooled(&truth, llm)?,
        })
    })()
    .ok();
    Ok(SmokeOutcome {
        agent: cfg.agent.identity(),
        fir: fir(&truth.factual, &llm.factual).ok(),
        cir: cir_report,
        pn: est.map(|e| e.pn),
        ps: est.map(|e| e.ps),
        unparseable: c.unparseable,
    })
}

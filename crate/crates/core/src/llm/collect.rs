use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use serde::{Deserialize, Serialize};

use super::agent::{Agent, PromptKind, Query};
use super::cache::ResponseCache;
use super::concretize::{concretize, Concretization, ConcretizationMethod};
use super::remote::RemoteClient;
use super::{render_counterfactual, render_factual, LlmError};
use crate::causation::{
    DatasetTriple, FactualDataset, FactualRecord, InterventionalDataset, InterventionalRecord,
};
use crate::problems::Problem;
use crate::scm::Intervention;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectOptions {
    pub replicates: usize,
    pub concretization: Concretization,
    /// Maximum in-flight remote requests.
    pub concurrency: usize,
}

impl Default for CollectOptions {
    fn default() -> Self {
        Self {
            replicates: 10,
            concretization: Concretization::Lexical,
            concurrency: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub instance_id: u64,
    pub kind: PromptKind,
    pub replicate: usize,
    pub raw_text: String,
    /// `None` when the answer could not be concretized.
    pub parsed: Option<bool>,
    pub method: ConcretizationMethod,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnparseableCounts {
    pub factual: usize,
    pub counterfactual_true: usize,
    pub counterfactual_false: usize,
}

impl UnparseableCounts {
    pub fn total(&self) -> usize {
        self.factual + self.counterfactual_true + self.counterfactual_false
    }

    fn bump(&mut self, kind: PromptKind) {
        match kind {
            PromptKind::Factual => self.factual += 1,
            PromptKind::CounterfactualTrue => self.counterfactual_true += 1,
            PromptKind::CounterfactualFalse => self.counterfactual_false += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collection {
    pub datasets: DatasetTriple,
    /// Ordered by instance id, prompt kind, then replicate.
    pub answers: Vec<AnswerRecord>,
    pub unparseable: UnparseableCounts,
    /// Instances where no replicate of a prompt could be concretized.
    pub all_unparseable: Vec<(u64, PromptKind)>,
}

struct Job {
    query: Query,
}

type JobResult = Result<Vec<(String, Option<bool>)>, LlmError>;

/// Asks the three questions for every instance of `problem` and assembles
/// datasets aligned with the causal-model truth. The treatment value in the
/// factual dataset comes from the model, not from the agent.
pub fn collect(
    problem: &Problem,
    agent: &Agent,
    opts: &CollectOptions,
    cache: &ResponseCache,
    extractor: Option<(&str, &RemoteClient)>,
) -> Result<Collection, LlmError> {
    if opts.replicates == 0 {
        return Err(LlmError::InvalidAgent(
            "replicates must be at least 1".into(),
        ));
    }
    let model = &problem.model;
    let x = model.node_position(&problem.treatment)?;
    let y = model.node_position(&problem.outcome)?;
    let forced_true = model.intervene(&Intervention::new(problem.treatment.clone(), true))?;
    let forced_false = model.intervene(&Intervention::new(problem.treatment.clone(), false))?;

    let points: Vec<Vec<i64>> = model.enumerate_domain().collect();
    let mut treatment = Vec::with_capacity(points.len());
    let mut jobs = Vec::with_capacity(points.len() * 3);
    for (id, point) in points.iter().enumerate() {
        let id = id as u64;
        let fact = model.evaluate_point(point)?;
        treatment.push(fact[x]);
        let prompts = [
            (
                PromptKind::Factual,
                render_factual(problem, point)?,
                fact[y],
            ),
            (
                PromptKind::CounterfactualTrue,
                render_counterfactual(problem, point, true)?,
                forced_true.evaluate_point(point)?[y],
            ),
            (
                PromptKind::CounterfactualFalse,
                render_counterfactual(problem, point, false)?,
                forced_false.evaluate_point(point)?[y],
            ),
        ];
        for (kind, prompt, truth) in prompts {
            jobs.push(Job {
                query: Query {
                    instance_id: id,
                    kind,
                    prompt,
                    truth,
                },
            });
        }
    }

    let run = |job: &Job| -> JobResult {
        let raws = agent.ask(&job.query, opts.replicates, cache)?;
        raws.into_iter()
            .map(|raw| {
                let parsed = concretize(
                    &job.query.prompt,
                    &raw,
                    opts.concretization,
                    extractor,
                    cache,
                )?;
                Ok((raw, parsed))
            })
            .collect()
    };
    let workers = if agent.is_remote() {
        opts.concurrency.max(1)
    } else {
        1
    };
    let results = run_pool(&jobs, workers, run);

    let method = ConcretizationMethod::from(opts.concretization);
    let mut answers = Vec::with_capacity(jobs.len() * opts.replicates);
    let mut unparseable = UnparseableCounts::default();
    let mut all_unparseable = Vec::new();
    let mut factual = Vec::with_capacity(points.len());
    let mut on = Vec::with_capacity(points.len());
    let mut off = Vec::with_capacity(points.len());
    for (job, result) in jobs.iter().zip(results) {
        let readings = result?;
        let q = &job.query;
        let outcomes: Vec<Option<bool>> = readings.iter().map(|(_, p)| *p).collect();
        for (replicate, (raw, parsed)) in readings.into_iter().enumerate() {
            if parsed.is_none() {
                unparseable.bump(q.kind);
            }
            answers.push(AnswerRecord {
                instance_id: q.instance_id,
                kind: q.kind,
                replicate,
                raw_text: raw,
                parsed,
                method,
            });
        }
        if outcomes.iter().all(Option::is_none) {
            all_unparseable.push((q.instance_id, q.kind));
        }
        let exogenous = points[q.instance_id as usize].clone();
        match q.kind {
            PromptKind::Factual => factual.push(FactualRecord {
                id: q.instance_id,
                exogenous,
                x: treatment[q.instance_id as usize],
                outcomes,
            }),
            PromptKind::CounterfactualTrue => on.push(InterventionalRecord {
                id: q.instance_id,
                exogenous,
                outcomes,
            }),
            PromptKind::CounterfactualFalse => off.push(InterventionalRecord {
                id: q.instance_id,
                exogenous,
                outcomes,
            }),
        }
    }

    Ok(Collection {
        datasets: DatasetTriple {
            factual: FactualDataset::new(factual)?,
            do_true: InterventionalDataset::new(true, on)?,
            do_false: InterventionalDataset::new(false, off)?,
        },
        answers,
        unparseable,
        all_unparseable,
    })
}

/// Runs `f` over `jobs` on up to `workers` threads; output order matches
/// `jobs` regardless of completion order.
fn run_pool<J: Sync, R: Send>(jobs: &[J], workers: usize, f: impl Fn(&J) -> R + Sync) -> Vec<R> {
    if workers <= 1 {
        return jobs.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut indexed: Vec<(usize, R)> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(job) = jobs.get(i) else { break };
                        done.push((i, f(job)));
                    }
                    done
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("collect worker panicked"))
            .collect()
    });
    indexed.sort_by_key(|(i, _)| *i);
    indexed.into_iter().map(|(_, r)| r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causation::problem_truth;
    use crate::llm::AgentSpec;
    use crate::problems::{build_div6, registry};

    #[test]
    fn perfect_agent_reproduces_truth() {
        let p = build_div6(400).unwrap();
        let opts = CollectOptions {
            replicates: 1,
            ..Default::default()
        };
        let c = collect(
            &p,
            &Agent::Perfect,
            &opts,
            &ResponseCache::in_memory(),
            None,
        )
        .unwrap();
        assert_eq!(c.datasets, problem_truth(&p).unwrap());
        assert_eq!(c.unparseable.total(), 0);
        assert_eq!(c.answers.len(), 1200);
    }

    #[test]
    fn zero_noise_equals_perfect() {
        for p in registry() {
            let opts = CollectOptions {
                replicates: 2,
                ..Default::default()
            };
            let cache = ResponseCache::in_memory();
            let noisy = Agent::from_spec(&AgentSpec::Noisy {
                p_factual: 0.0,
                p_counterfactual: 0.0,
                seed: 5,
            })
            .unwrap();
            let a = collect(&p, &Agent::Perfect, &opts, &cache, None).unwrap();
            let b = collect(&p, &noisy, &opts, &cache, None).unwrap();
            assert_eq!(a.datasets, b.datasets);
        }
    }

    #[test]
    fn pool_preserves_order() {
        let jobs: Vec<u64> = (0..100).collect();
        let out = run_pool(&jobs, 7, |j| {
            std::thread::sleep(std::time::Duration::from_micros(100 - *j));
            j * 2
        });
        assert_eq!(out, jobs.iter().map(|j| j * 2).collect::<Vec<_>>());
    }
}

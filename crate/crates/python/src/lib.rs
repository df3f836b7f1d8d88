//! Python module `causeval`: problems, ground truth, prompts, answer
//! parsing, agent evaluation and noise sensitivity.
//!
//! Structured results come back as plain dicts and lists.

use std::collections::BTreeMap;

use causeval_core::causation::{estimate, ground_truth as core_ground_truth, problem_truth};
use causeval_core::llm::{
    collect, concretize_lexical, render_counterfactual, render_factual, Agent, AgentSpec,
    CollectOptions, ResponseCache,
};
use causeval_core::metrics::{
    bootstrap, cir_pooled, fir, noise_sensitivity as core_noise, overlap, quantile,
    BootstrapScheme, GammaGrid, DEFAULT_FLIP_PROBS,
};
use causeval_core::problems::{registry, DomainOverrides, Problem as CoreProblem, ProblemKind};
use causeval_core::scm::Intervention;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

fn err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Round-trips a serializable value through `json.loads`.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn scheme(name: &str) -> PyResult<BootstrapScheme> {
    name.parse().map_err(err)
}

/// A built-in reasoning problem.
#[pyclass(frozen, module = "causeval")]
struct Problem {
    inner: CoreProblem,
}

impl Problem {
    fn point(&self, values: BTreeMap<String, i64>) -> PyResult<Vec<i64>> {
        let point = self.inner.model.point_from_map(&values).map_err(err)?;
        self.inner.model.check_point(&point).map_err(err)?;
        Ok(point)
    }
}

#[pymethods]
impl Problem {
    #[new]
    #[pyo3(signature = (name, range_max=None, total_candies=None))]
    fn new(name: &str, range_max: Option<i64>, total_candies: Option<i64>) -> PyResult<Self> {
        let kind: ProblemKind = name.parse().map_err(err)?;
        let inner = CoreProblem::build(
            kind,
            DomainOverrides {
                range_max,
                total_candies,
            },
        )
        .map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn exogenous(&self) -> Vec<String> {
        self.inner.model.exogenous_names()
    }

    #[getter]
    fn nodes(&self) -> Vec<String> {
        self.inner.model.node_names()
    }

    #[getter]
    fn treatment(&self) -> String {
        self.inner.treatment.clone()
    }

    #[getter]
    fn outcome(&self) -> String {
        self.inner.outcome.clone()
    }

    fn domain_size(&self) -> usize {
        self.inner.model.domain_size()
    }

    fn monotone(&self) -> PyResult<bool> {
        self.inner
            .model
            .check_monotonicity(&self.inner.treatment, &self.inner.outcome)
            .map_err(err)
    }

    /// Condition values at one exogenous setting.
    fn evaluate(&self, values: BTreeMap<String, i64>) -> PyResult<BTreeMap<String, bool>> {
        Ok(self.inner.model.evaluate(&values).map_err(err)?.conditions)
    }

    /// Condition values at `values` had `node` been forced to `value`.
    fn counterfactual(
        &self,
        values: BTreeMap<String, i64>,
        node: &str,
        value: bool,
    ) -> PyResult<BTreeMap<String, bool>> {
        let iv = Intervention::new(node, value);
        Ok(self
            .inner
            .model
            .counterfactual(&values, &iv)
            .map_err(err)?
            .conditions)
    }

    fn factual_prompt(&self, values: BTreeMap<String, i64>) -> PyResult<String> {
        render_factual(&self.inner, &self.point(values)?).map_err(err)
    }

    fn counterfactual_prompt(
        &self,
        values: BTreeMap<String, i64>,
        forced: bool,
    ) -> PyResult<String> {
        render_counterfactual(&self.inner, &self.point(values)?, forced).map_err(err)
    }

    /// Identification-formula estimate on exact data, oracle values and the
    /// factual contingency table.
    fn ground_truth<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &core_ground_truth(&self.inner).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem('{}', instances={})",
            self.inner.name(),
            self.inner.model.domain_size()
        )
    }
}

/// Names of the built-in problems.
#[pyfunction]
fn problems() -> Vec<&'static str> {
    registry().iter().map(|p| p.name()).collect()
}

/// Lexical yes/no reading of a free-text answer; `None` when ambiguous.
#[pyfunction]
fn concretize(answer: &str) -> Option<bool> {
    concretize_lexical(answer)
}

#[derive(Serialize)]
struct Evaluation {
    agent: String,
    fir: Option<f64>,
    cir: Option<f64>,
    pn: Option<f64>,
    ps: Option<f64>,
    true_pn: f64,
    true_ps: f64,
    pn_samples: Vec<f64>,
    ps_samples: Vec<f64>,
    gamma: Vec<f64>,
    pn_overlap: Vec<f64>,
    ps_overlap: Vec<f64>,
}

/// Queries an agent (`perfect`, `noisy:<p_f>:<p_cf>[:<seed>]` or
/// `remote:<model>@<endpoint>`) on every instance and scores it.
#[pyfunction]
#[pyo3(signature = (problem, agent="perfect", replicates=10, bootstrap_iterations=500, seed=0, scheme="replicate"))]
fn evaluate_agent<'py>(
    py: Python<'py>,
    problem: &Problem,
    agent: &str,
    replicates: usize,
    bootstrap_iterations: usize,
    seed: u64,
    scheme: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let p = &problem.inner;
    let spec: AgentSpec = agent.parse().map_err(err)?;
    let scheme = self::scheme(scheme)?;
    let out = py.detach(|| -> Result<Evaluation, String> {
        let s = |e: &dyn ToString| e.to_string();
        let truth = problem_truth(p).map_err(|e| s(&e))?;
        let gt = core_ground_truth(p).map_err(|e| s(&e))?;
        let agent = Agent::from_spec(&spec).map_err(|e| s(&e))?;
        let opts = CollectOptions {
            replicates,
            ..Default::default()
        };
        let c = collect(p, &agent, &opts, &ResponseCache::in_memory(), None).map_err(|e| s(&e))?;
        let d = &c.datasets;
        let est = estimate(&d.factual, &d.do_true, &d.do_false, gt.estimate.monotone).ok();
        let density = bootstrap(
            &d.factual,
            &d.do_true,
            &d.do_false,
            bootstrap_iterations,
            seed,
            scheme,
        )
        .ok();
        let curve = density.as_ref().and_then(|den| {
            overlap(den, gt.estimate.pn, gt.estimate.ps, &GammaGrid::default()).ok()
        });
        Ok(Evaluation {
            agent: spec.identity(),
            fir: fir(&truth.factual, &d.factual).ok().map(|r| r.rate),
            cir: cir_pooled(&truth, d).ok().map(|r| r.rate),
            pn: est.map(|e| e.pn),
            ps: est.map(|e| e.ps),
            true_pn: gt.estimate.pn,
            true_ps: gt.estimate.ps,
            pn_samples: density
                .as_ref()
                .map(|d| d.pn_samples.clone())
                .unwrap_or_default(),
            ps_samples: density.map(|d| d.ps_samples).unwrap_or_default(),
            gamma: curve.as_ref().map(|c| c.gamma.clone()).unwrap_or_default(),
            pn_overlap: curve.as_ref().map(|c| c.pn.clone()).unwrap_or_default(),
            ps_overlap: curve.map(|c| c.ps).unwrap_or_default(),
        })
    });
    to_py(py, &out.map_err(PyValueError::new_err)?)
}

#[derive(Serialize)]
struct Level {
    flip_prob: f64,
    cir: f64,
    pn: Option<f64>,
    ps: Option<f64>,
    pn_p05: Option<f64>,
    pn_p95: Option<f64>,
    pn_samples: Vec<f64>,
    ps_samples: Vec<f64>,
}

/// Bootstrap densities on exact data with counterfactual answers flipped at
/// each probability.
#[pyfunction]
#[pyo3(signature = (problem, flip_probs=None, replicates=10, bootstrap_iterations=500, seed=0, scheme="replicate"))]
fn noise_sensitivity<'py>(
    py: Python<'py>,
    problem: &Problem,
    flip_probs: Option<Vec<f64>>,
    replicates: usize,
    bootstrap_iterations: usize,
    seed: u64,
    scheme: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let probs = flip_probs.unwrap_or_else(|| DEFAULT_FLIP_PROBS.to_vec());
    let scheme = self::scheme(scheme)?;
    let p = &problem.inner;
    let levels = py
        .detach(|| core_noise(p, &probs, replicates, bootstrap_iterations, seed, scheme))
        .map_err(err)?;
    let out: Vec<Level> = levels
        .into_iter()
        .map(|l| Level {
            flip_prob: l.flip_prob,
            cir: l.cir.rate,
            pn: l.estimate.map(|e| e.pn),
            ps: l.estimate.map(|e| e.ps),
            pn_p05: quantile(&l.density.pn_samples, 0.05),
            pn_p95: quantile(&l.density.pn_samples, 0.95),
            pn_samples: l.density.pn_samples,
            ps_samples: l.density.ps_samples,
        })
        .collect();
    to_py(py, &out)
}

#[pymodule]
fn causeval(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_function(wrap_pyfunction!(problems, m)?)?;
    m.add_function(wrap_pyfunction!(concretize, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_agent, m)?)?;
    m.add_function(wrap_pyfunction!(noise_sensitivity, m)?)?;
    Ok(())
}

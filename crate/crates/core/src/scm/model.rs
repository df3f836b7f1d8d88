use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::expr::{CompiledExpr, CompiledTerm, Expr, Term};
use super::ScmError;

/// Inclusive integer range of an exogenous variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Domain {
    pub min: i64,
    pub max: i64,
}

impl Domain {
    pub fn new(min: i64, max: i64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, value: i64) -> bool {
        (self.min..=self.max).contains(&value)
    }

    pub fn is_empty(&self) -> bool {
        self.min > self.max
    }

    pub fn len(&self) -> u64 {
        if self.is_empty() {
            0
        } else {
            (self.max - self.min) as u64 + 1
        }
    }
}

impl From<RangeInclusive<i64>> for Domain {
    fn from(r: RangeInclusive<i64>) -> Self {
        Domain::new(*r.start(), *r.end())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExogenousVar {
    pub name: String,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionNode {
    pub name: String,
    pub equation: Expr,
}

/// `do(node = value)` on a condition node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Intervention {
    pub node: String,
    pub value: bool,
}

impl Intervention {
    pub fn new(node: impl Into<String>, value: bool) -> Self {
        Self {
            node: node.into(),
            value,
        }
    }
}

/// Full state of a model at one exogenous setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub exogenous: BTreeMap<String, i64>,
    pub conditions: BTreeMap<String, bool>,
}

impl Assignment {
    pub fn condition(&self, name: &str) -> Option<bool> {
        self.conditions.get(name).copied()
    }
}

/// A boolean structural causal model over finite integer exogenous inputs.
///
/// Values are immutable once built; [`CausalModel::intervene`] returns a new
/// submodel. Condition nodes are kept in declaration order for reporting and
/// evaluated in a topological order computed at construction.
#[derive(Debug, Clone)]
pub struct CausalModel {
    exogenous: Vec<ExogenousVar>,
    nodes: Vec<ConditionNode>,
    admissible: Option<Expr>,
    compiled: Vec<CompiledExpr>,
    compiled_admissible: Option<CompiledExpr>,
    order: Vec<usize>,
    children: Vec<Vec<usize>>,
    node_index: HashMap<String, usize>,
}

impl PartialEq for CausalModel {
    fn eq(&self, other: &Self) -> bool {
        self.exogenous == other.exogenous
            && self.nodes == other.nodes
            && self.admissible == other.admissible
    }
}

#[derive(Debug, Default, Clone)]
pub struct CausalModelBuilder {
    exogenous: Vec<ExogenousVar>,
    nodes: Vec<ConditionNode>,
    admissible: Option<Expr>,
}

impl CausalModelBuilder {
    pub fn exogenous(mut self, name: impl Into<String>, domain: impl Into<Domain>) -> Self {
        self.exogenous.push(ExogenousVar {
            name: name.into(),
            domain: domain.into(),
        });
        self
    }

    pub fn node(mut self, name: impl Into<String>, equation: Expr) -> Self {
        self.nodes.push(ConditionNode {
            name: name.into(),
            equation,
        });
        self
    }

    /// Restricts the exogenous domain to tuples satisfying `predicate`,
    /// which may reference exogenous variables only.
    pub fn admissible(mut self, predicate: Expr) -> Self {
        self.admissible = Some(predicate);
        self
    }

    pub fn build(self) -> Result<CausalModel, ScmError> {
        CausalModel::new(self.exogenous, self.nodes, self.admissible)
    }
}

impl CausalModel {
    pub fn builder() -> CausalModelBuilder {
        CausalModelBuilder::default()
    }

    pub fn new(
        exogenous: Vec<ExogenousVar>,
        nodes: Vec<ConditionNode>,
        admissible: Option<Expr>,
    ) -> Result<Self, ScmError> {
        let mut seen = BTreeSet::new();
        for name in exogenous
            .iter()
            .map(|v| &v.name)
            .chain(nodes.iter().map(|n| &n.name))
        {
            if !seen.insert(name.as_str()) {
                return Err(ScmError::DuplicateName(name.clone()));
            }
        }
        for var in &exogenous {
            if var.domain.is_empty() {
                return Err(ScmError::EmptyDomain(var.name.clone()));
            }
        }

        let var_index: HashMap<String, usize> = exogenous
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        let node_index: HashMap<String, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), i))
            .collect();

        let resolver = Resolver {
            vars: &var_index,
            nodes: &node_index,
        };
        let compiled = nodes
            .iter()
            .map(|n| resolver.expr(&n.equation, &n.name, true))
            .collect::<Result<Vec<_>, _>>()?;
        let compiled_admissible = admissible
            .as_ref()
            .map(|p| resolver.expr(p, "admissibility predicate", false))
            .transpose()?;

        let mut children = vec![Vec::new(); nodes.len()];
        let mut indegree = vec![0usize; nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            let parents: BTreeSet<usize> = node
                .equation
                .node_refs()
                .into_iter()
                .map(|p| node_index[p])
                .collect();
            for p in parents {
                children[p].push(i);
                indegree[i] += 1;
            }
        }
        let order = topological_order(&children, indegree)
            .ok_or_else(|| ScmError::Cycle(nodes.iter().map(|n| n.name.clone()).collect()))?;

        Ok(Self {
            exogenous,
            nodes,
            admissible,
            compiled,
            compiled_admissible,
            order,
            children,
            node_index,
        })
    }

    pub fn exogenous_vars(&self) -> &[ExogenousVar] {
        &self.exogenous
    }

    pub fn exogenous_names(&self) -> Vec<String> {
        self.exogenous.iter().map(|v| v.name.clone()).collect()
    }

    pub fn condition_nodes(&self) -> &[ConditionNode] {
        &self.nodes
    }

    pub fn node_names(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.name.clone()).collect()
    }

    pub fn admissibility(&self) -> Option<&Expr> {
        self.admissible.as_ref()
    }

    pub fn node_position(&self, name: &str) -> Result<usize, ScmError> {
        self.node_index.get(name).copied().ok_or_else(|| {
            if self.exogenous.iter().any(|v| v.name == name) {
                ScmError::NotACondition(name.to_string())
            } else {
                ScmError::UnknownNode(name.to_string())
            }
        })
    }

    pub fn equation(&self, name: &str) -> Result<&Expr, ScmError> {
        Ok(&self.nodes[self.node_position(name)?].equation)
    }

    /// Condition nodes reachable from `name` along equation dependencies,
    /// not including `name` itself.
    pub fn descendants(&self, name: &str) -> Result<BTreeSet<String>, ScmError> {
        let start = self.node_position(name)?;
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = self.children[start].clone();
        while let Some(i) = stack.pop() {
            if !seen[i] {
                seen[i] = true;
                stack.extend(self.children[i].iter().copied());
            }
        }
        Ok(seen
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| self.nodes[i].name.clone())
            .collect())
    }

    /// Converts a name → value mapping to a point in declaration order.
    pub fn point_from_map(&self, exogenous: &BTreeMap<String, i64>) -> Result<Vec<i64>, ScmError> {
        for name in exogenous.keys() {
            if !self.exogenous.iter().any(|v| &v.name == name) {
                return Err(ScmError::UnknownVariable {
                    name: name.clone(),
                    context: "exogenous mapping".into(),
                });
            }
        }
        self.exogenous
            .iter()
            .map(|v| {
                exogenous
                    .get(&v.name)
                    .copied()
                    .ok_or_else(|| ScmError::MissingValue(v.name.clone()))
            })
            .collect()
    }

    pub fn point_to_map(&self, point: &[i64]) -> BTreeMap<String, i64> {
        self.exogenous
            .iter()
            .zip(point)
            .map(|(v, &x)| (v.name.clone(), x))
            .collect()
    }

    pub fn check_point(&self, point: &[i64]) -> Result<(), ScmError> {
        if point.len() != self.exogenous.len() {
            return Err(ScmError::Arity {
                expected: self.exogenous.len(),
                got: point.len(),
            });
        }
        for (var, &value) in self.exogenous.iter().zip(point) {
            if !var.domain.contains(value) {
                return Err(ScmError::OutOfDomain {
                    name: var.name.clone(),
                    value,
                });
            }
        }
        if !self.is_admissible_unchecked(point) {
            return Err(ScmError::Inadmissible(point.to_vec()));
        }
        Ok(())
    }

    fn is_admissible_unchecked(&self, point: &[i64]) -> bool {
        self.compiled_admissible
            .as_ref()
            .is_none_or(|p| p.eval(point, &[]))
    }

    /// Node values in declaration order; `point` must already be validated.
    pub(crate) fn eval_unchecked(&self, point: &[i64]) -> Vec<bool> {
        let mut values = vec![false; self.nodes.len()];
        for &i in &self.order {
            values[i] = self.compiled[i].eval(point, &values);
        }
        values
    }

    /// Evaluates every condition node at a point given in declaration order.
    pub fn evaluate_point(&self, point: &[i64]) -> Result<Vec<bool>, ScmError> {
        self.check_point(point)?;
        Ok(self.eval_unchecked(point))
    }

    pub fn evaluate(&self, exogenous: &BTreeMap<String, i64>) -> Result<Assignment, ScmError> {
        let point = self.point_from_map(exogenous)?;
        let values = self.evaluate_point(&point)?;
        Ok(self.assignment(&point, &values))
    }

    fn assignment(&self, point: &[i64], values: &[bool]) -> Assignment {
        Assignment {
            exogenous: self.point_to_map(point),
            conditions: self
                .nodes
                .iter()
                .zip(values)
                .map(|(n, &b)| (n.name.clone(), b))
                .collect(),
        }
    }

    /// Submodel with `iv.node`'s equation replaced by the constant `iv.value`.
    pub fn intervene(&self, iv: &Intervention) -> Result<CausalModel, ScmError> {
        let idx = self.node_position(&iv.node)?;
        let mut sub = self.clone();
        sub.nodes[idx].equation = Expr::Const(iv.value);
        sub.compiled[idx] = CompiledExpr::Const(iv.value);
        for kids in sub.children.iter_mut() {
            kids.retain(|&k| k != idx);
        }
        Ok(sub)
    }

    /// Full counterfactual state `evaluate(intervene(self, iv), exogenous)`.
    pub fn counterfactual(
        &self,
        exogenous: &BTreeMap<String, i64>,
        iv: &Intervention,
    ) -> Result<Assignment, ScmError> {
        self.intervene(iv)?.evaluate(exogenous)
    }

    /// Value of `query` had `iv` been applied, at a point in declaration order.
    pub fn counterfactual_at(
        &self,
        point: &[i64],
        iv: &Intervention,
        query: &str,
    ) -> Result<bool, ScmError> {
        let q = self.node_position(query)?;
        Ok(self.intervene(iv)?.evaluate_point(point)?[q])
    }

    /// Every admissible exogenous point exactly once, odometer order with the
    /// last declared variable varying fastest.
    pub fn enumerate_domain(&self) -> DomainIter<'_> {
        let start: Vec<i64> = self.exogenous.iter().map(|v| v.domain.min).collect();
        DomainIter {
            model: self,
            next: Some(start),
        }
    }

    pub fn domain_size(&self) -> usize {
        self.enumerate_domain().count()
    }

    /// Uniform draws from the admissible domain by rejection.
    pub fn sample_domain<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        count: usize,
    ) -> Result<Vec<Vec<i64>>, ScmError> {
        const MAX_ATTEMPTS_PER_DRAW: usize = 100_000;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut found = None;
            for _ in 0..MAX_ATTEMPTS_PER_DRAW {
                let point: Vec<i64> = self
                    .exogenous
                    .iter()
                    .map(|v| rng.random_range(v.domain.min..=v.domain.max))
                    .collect();
                if self.is_admissible_unchecked(&point) {
                    found = Some(point);
                    break;
                }
            }
            out.push(found.ok_or(ScmError::SamplingExhausted)?);
        }
        Ok(out)
    }

    /// True iff forcing `x_node` true never yields a smaller `y_node` than
    /// forcing it false, over every admissible exogenous point.
    pub fn check_monotonicity(&self, x_node: &str, y_node: &str) -> Result<bool, ScmError> {
        let y = self.node_position(y_node)?;
        self.node_position(x_node)?;
        if x_node == y_node || self.descendants(y_node)?.contains(x_node) {
            return Err(ScmError::TreatmentDownstream {
                treatment: x_node.into(),
                outcome: y_node.into(),
            });
        }
        let forced_true = self.intervene(&Intervention::new(x_node, true))?;
        let forced_false = self.intervene(&Intervention::new(x_node, false))?;
        Ok(self.enumerate_domain().all(|point| {
            let hi = forced_true.eval_unchecked(&point)[y];
            let lo = forced_false.eval_unchecked(&point)[y];
            hi >= lo
        }))
    }
}

/// Iterator over admissible exogenous points.
#[derive(Debug, Clone)]
pub struct DomainIter<'a> {
    model: &'a CausalModel,
    next: Option<Vec<i64>>,
}

impl Iterator for DomainIter<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        loop {
            let current = self.next.take()?;
            let mut succ = current.clone();
            let mut advanced = false;
            for (slot, var) in succ.iter_mut().zip(&self.model.exogenous).rev() {
                if *slot < var.domain.max {
                    *slot += 1;
                    advanced = true;
                    break;
                }
                *slot = var.domain.min;
            }
            if advanced {
                self.next = Some(succ);
            }
            if self.model.is_admissible_unchecked(&current) {
                return Some(current);
            }
        }
    }
}

fn topological_order(children: &[Vec<usize>], mut indegree: Vec<usize>) -> Option<Vec<usize>> {
    let mut ready: BTreeSet<usize> = (0..indegree.len()).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(indegree.len());
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &k in &children[i] {
            indegree[k] -= 1;
            if indegree[k] == 0 {
                ready.insert(k);
            }
        }
    }
    (order.len() == indegree.len()).then_some(order)
}

struct Resolver<'a> {
    vars: &'a HashMap<String, usize>,
    nodes: &'a HashMap<String, usize>,
}

impl Resolver<'_> {
    fn expr(&self, e: &Expr, owner: &str, nodes_allowed: bool) -> Result<CompiledExpr, ScmError> {
        let many = |items: &[Expr]| {
            items
                .iter()
                .map(|i| self.expr(i, owner, nodes_allowed))
                .collect::<Result<Vec<_>, _>>()
        };
        Ok(match e {
            Expr::Const(b) => CompiledExpr::Const(*b),
            Expr::Node(name) => match self.nodes.get(name) {
                Some(&i) if nodes_allowed => CompiledExpr::Node(i),
                _ => {
                    return Err(ScmError::UnknownVariable {
                        name: name.clone(),
                        context: owner.to_string(),
                    })
                }
            },
            Expr::Not(inner) => {
                CompiledExpr::Not(Box::new(self.expr(inner, owner, nodes_allowed)?))
            }
            Expr::And(items) => CompiledExpr::And(many(items)?),
            Expr::Or(items) => CompiledExpr::Or(many(items)?),
            Expr::Cmp(lhs, op, rhs) => CompiledExpr::Cmp(
                self.term(lhs, owner, nodes_allowed)?,
                *op,
                self.term(rhs, owner, nodes_allowed)?,
            ),
        })
    }

    fn term(&self, t: &Term, owner: &str, nodes_allowed: bool) -> Result<CompiledTerm, ScmError> {
        Ok(match t {
            Term::Const(v) => CompiledTerm::Const(*v),
            Term::Var(name) => CompiledTerm::Var(*self.vars.get(name).ok_or_else(|| {
                ScmError::UnknownVariable {
                    name: name.clone(),
                    context: owner.to_string(),
                }
            })?),
            Term::Add(items) => CompiledTerm::Add(
                items
                    .iter()
                    .map(|i| self.term(i, owner, nodes_allowed))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Term::Mod(inner, d) => {
                if *d <= 0 {
                    return Err(ScmError::InvalidModulus {
                        context: owner.to_string(),
                        divisor: *d,
                    });
                }
                CompiledTerm::Mod(Box::new(self.term(inner, owner, nodes_allowed)?), *d)
            }
            Term::Indicator(e) => {
                CompiledTerm::Indicator(Box::new(self.expr(e, owner, nodes_allowed)?))
            }
        })
    }
}

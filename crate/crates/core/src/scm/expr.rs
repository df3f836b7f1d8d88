//! Expression trees for structural equations.
//!
//! Boolean expressions ([`Expr`]) combine condition nodes, constants and
//! comparisons between integer [`Term`]s. Terms are built from exogenous
//! variables, constants, sums, modulo by a positive constant, and boolean
//! indicators (so that "number of true conditions" can be written as a sum).
//!
//! Expressions are written with names. [`CausalModel`](super::CausalModel)
//! resolves names to indices once, at construction, into the private
//! `Compiled*` forms used for evaluation.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Comparison operator between two integer terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn apply(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Integer-valued term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Const(i64),
    /// Reference to an exogenous variable.
    Var(String),
    Add(Vec<Term>),
    /// Euclidean remainder by a positive constant.
    Mod(Box<Term>, i64),
    /// 1 if the expression holds, 0 otherwise.
    Indicator(Box<Expr>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(value: i64) -> Self {
        Term::Const(value)
    }

    pub fn sum(terms: impl IntoIterator<Item = Term>) -> Self {
        Term::Add(terms.into_iter().collect())
    }

    pub fn indicator(expr: Expr) -> Self {
        Term::Indicator(Box::new(expr))
    }

    pub fn modulo(self, divisor: i64) -> Self {
        Term::Mod(Box::new(self), divisor)
    }

    pub fn cmp(self, op: CmpOp, rhs: impl Into<Term>) -> Expr {
        Expr::Cmp(self, op, rhs.into())
    }

    pub fn eq(self, rhs: impl Into<Term>) -> Expr {
        self.cmp(CmpOp::Eq, rhs)
    }

    pub fn le(self, rhs: impl Into<Term>) -> Expr {
        self.cmp(CmpOp::Le, rhs)
    }

    pub fn lt(self, rhs: impl Into<Term>) -> Expr {
        self.cmp(CmpOp::Lt, rhs)
    }

    pub fn ge(self, rhs: impl Into<Term>) -> Expr {
        self.cmp(CmpOp::Ge, rhs)
    }

    pub fn gt(self, rhs: impl Into<Term>) -> Expr {
        self.cmp(CmpOp::Gt, rhs)
    }
}

impl From<i64> for Term {
    fn from(value: i64) -> Self {
        Term::Const(value)
    }
}

/// Boolean expression: the right-hand side of a structural equation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Const(bool),
    /// Reference to another condition node.
    Node(String),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Cmp(Term, CmpOp, Term),
}

impl Expr {
    pub fn node(name: impl Into<String>) -> Self {
        Expr::Node(name.into())
    }

    pub fn and(items: impl IntoIterator<Item = Expr>) -> Self {
        Expr::And(items.into_iter().collect())
    }

    pub fn or(items: impl IntoIterator<Item = Expr>) -> Self {
        Expr::Or(items.into_iter().collect())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Expr) -> Self {
        Expr::Not(Box::new(inner))
    }

    /// Condition nodes referenced anywhere in this expression.
    pub fn node_refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_refs(&mut out, &mut Vec::new());
        out
    }

    /// Exogenous variables referenced anywhere in this expression.
    pub fn var_refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_refs(&mut Vec::new(), &mut out);
        out
    }

    fn collect_refs<'a>(&'a self, nodes: &mut Vec<&'a str>, vars: &mut Vec<&'a str>) {
        match self {
            Expr::Const(_) => {}
            Expr::Node(name) => nodes.push(name),
            Expr::Not(inner) => inner.collect_refs(nodes, vars),
            Expr::And(items) | Expr::Or(items) => {
                for item in items {
                    item.collect_refs(nodes, vars);
                }
            }
            Expr::Cmp(lhs, _, rhs) => {
                lhs.collect_refs(nodes, vars);
                rhs.collect_refs(nodes, vars);
            }
        }
    }
}

impl Term {
    fn collect_refs<'a>(&'a self, nodes: &mut Vec<&'a str>, vars: &mut Vec<&'a str>) {
        match self {
            Term::Const(_) => {}
            Term::Var(name) => vars.push(name),
            Term::Add(items) => {
                for item in items {
                    item.collect_refs(nodes, vars);
                }
            }
            Term::Mod(inner, _) => inner.collect_refs(nodes, vars),
            Term::Indicator(expr) => expr.collect_refs(nodes, vars),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(v) => write!(f, "{v}"),
            Term::Var(name) => write!(f, "{name}"),
            Term::Add(items) => {
                write!(f, "(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, ")")
            }
            Term::Mod(inner, d) => write!(f, "({inner} mod {d})"),
            Term::Indicator(expr) => write!(f, "[{expr}]"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn joined(f: &mut fmt::Formatter<'_>, items: &[Expr], sep: &str) -> fmt::Result {
            write!(f, "(")?;
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, " {sep} ")?;
                }
                write!(f, "{item}")?;
            }
            write!(f, ")")
        }
        match self {
            Expr::Const(b) => write!(f, "{b}"),
            Expr::Node(name) => write!(f, "{name}"),
            Expr::Not(inner) => write!(f, "not {inner}"),
            Expr::And(items) => joined(f, items, "and"),
            Expr::Or(items) => joined(f, items, "or"),
            Expr::Cmp(lhs, op, rhs) => write!(f, "{lhs} {} {rhs}", op.symbol()),
        }
    }
}

// Index-resolved forms. Built only by the model, after validation.

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum CompiledTerm {
    Const(i64),
    Var(usize),
    Add(Vec<CompiledTerm>),
    Mod(Box<CompiledTerm>, i64),
    Indicator(Box<CompiledExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum CompiledExpr {
    Const(bool),
    Node(usize),
    Not(Box<CompiledExpr>),
    And(Vec<CompiledExpr>),
    Or(Vec<CompiledExpr>),
    Cmp(CompiledTerm, CmpOp, CompiledTerm),
}

impl CompiledTerm {
    pub(crate) fn eval(&self, exo: &[i64], nodes: &[bool]) -> i64 {
        match self {
            CompiledTerm::Const(v) => *v,
            CompiledTerm::Var(i) => exo[*i],
            CompiledTerm::Add(items) => items.iter().map(|t| t.eval(exo, nodes)).sum(),
            CompiledTerm::Mod(inner, d) => inner.eval(exo, nodes).rem_euclid(*d),
            CompiledTerm::Indicator(expr) => i64::from(expr.eval(exo, nodes)),
        }
    }
}

impl CompiledExpr {
    /// `nodes` must already hold the values of every referenced node.
    pub(crate) fn eval(&self, exo: &[i64], nodes: &[bool]) -> bool {
        match self {
            CompiledExpr::Const(b) => *b,
            CompiledExpr::Node(i) => nodes[*i],
            CompiledExpr::Not(inner) => !inner.eval(exo, nodes),
            CompiledExpr::And(items) => items.iter().all(|e| e.eval(exo, nodes)),
            CompiledExpr::Or(items) => items.iter().any(|e| e.eval(exo, nodes)),
            CompiledExpr::Cmp(lhs, op, rhs) => op.apply(lhs.eval(exo, nodes), rhs.eval(exo, nodes)),
        }
    }
}

//! The four benchmark reasoning problems.
//!
//! Each [`Problem`] bundles a causal model of the reasoning graph, the
//! treatment/outcome pair whose probabilities of causation are measured,
//! and the factual and counterfactual prompt templates used to question an
//! answer agent about the same instances.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::PromptTemplate;
use crate::scm::{CausalModel, Expr, ScmError, Term};

pub const DEFAULT_DIV6_RANGE: i64 = 400;
pub const DEFAULT_SMALL_RANGE: i64 = 8;
pub const DEFAULT_TOTAL_CANDIES: i64 = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProblemError {
    #[error("unknown problem `{0}` (expected one of Div6, EvenSum, ConPref, CandyParty)")]
    NotFound(String),
    #[error("invalid parameter for {problem}: {message}")]
    InvalidParameter {
        problem: ProblemKind,
        message: String,
    },
    #[error(transparent)]
    Scm(#[from] ScmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProblemKind {
    Div6,
    EvenSum,
    ConPref,
    CandyParty,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [
        ProblemKind::Div6,
        ProblemKind::EvenSum,
        ProblemKind::ConPref,
        ProblemKind::CandyParty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Div6 => "Div6",
            ProblemKind::EvenSum => "EvenSum",
            ProblemKind::ConPref => "ConPref",
            ProblemKind::CandyParty => "CandyParty",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ProblemError::NotFound(s.to_string()))
    }
}

/// Domain overrides; `None` keeps the default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainOverrides {
    pub range_max: Option<i64>,
    pub total_candies: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub kind: ProblemKind,
    pub model: CausalModel,
    pub treatment: String,
    pub outcome: String,
    pub factual_template: PromptTemplate,
    pub counterfactual_template: PromptTemplate,
    /// Template slot values that do not depend on the instance.
    pub constants: BTreeMap<String, String>,
}

impl Problem {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn build(kind: ProblemKind, overrides: DomainOverrides) -> Result<Problem, ProblemError> {
        match kind {
            ProblemKind::Div6 => build_div6(overrides.range_max.unwrap_or(DEFAULT_DIV6_RANGE)),
            ProblemKind::EvenSum => {
                build_evensum(overrides.range_max.unwrap_or(DEFAULT_SMALL_RANGE))
            }
            ProblemKind::ConPref => {
                build_conpref(overrides.range_max.unwrap_or(DEFAULT_SMALL_RANGE))
            }
            ProblemKind::CandyParty => {
                build_candyparty(overrides.total_candies.unwrap_or(DEFAULT_TOTAL_CANDIES))
            }
        }
    }

    /// Slot values for one instance: exogenous values plus problem constants.
    pub fn slot_values(&self, point: &[i64]) -> BTreeMap<String, String> {
        let mut slots = self.constants.clone();
        for (name, value) in self.model.point_to_map(point) {
            slots.insert(name, value.to_string());
        }
        slots
    }
}

fn invalid(problem: ProblemKind, message: String) -> ProblemError {
    ProblemError::InvalidParameter { problem, message }
}

fn templates(factual: &str, counterfactual: &str) -> (PromptTemplate, PromptTemplate) {
    (
        PromptTemplate::parse(factual).expect("built-in factual template"),
        PromptTemplate::parse(counterfactual).expect("built-in counterfactual template"),
    )
}

/// Divisibility by 6 of `N ∈ [1, range_max]`; treatment C3, outcome C6.
pub fn build_div6(range_max: i64) -> Result<Problem, ProblemError> {
    if range_max < 6 {
        return Err(invalid(
            ProblemKind::Div6,
            format!("range_max must be at least 6, got {range_max}"),
        ));
    }
    let model = CausalModel::builder()
        .exogenous("N", 1..=range_max)
        .node("C2", Term::var("N").modulo(2).eq(0))
        .node("C3", Term::var("N").modulo(3).eq(0))
        .node("C6", Expr::and([Expr::node("C2"), Expr::node("C3")]))
        .build()?;
    let (factual_template, counterfactual_template) = templates(
        "Does 6 divide {N}? Use the factor method to answer this question. \
         Be as concise as possible.",
        "Imagine that {N} {has|has not} 3 as prime factor while retaining all its other \
         prime factors. With this assumption does 6 divide {N}? Use the factor method to \
         answer this question. Be as concise as possible.",
    );
    Ok(Problem {
        kind: ProblemKind::Div6,
        model,
        treatment: "C3".into(),
        outcome: "C6".into(),
        factual_template,
        counterfactual_template,
        constants: BTreeMap::new(),
    })
}

/// Parity of `N + M + T` with each in `[1, range_max]`; treatment C_m, outcome C_nmt.
pub fn build_evensum(range_max: i64) -> Result<Problem, ProblemError> {
    if range_max < 2 {
        return Err(invalid(
            ProblemKind::EvenSum,
            format!("range_max must be at least 2, got {range_max}"),
        ));
    }
    let even = |v: &str| Term::var(v).modulo(2).eq(0);
    let even_count = || {
        Term::sum(
            ["C_n", "C_m", "C_t"]
                .into_iter()
                .map(|c| Term::indicator(Expr::node(c))),
        )
    };
    let model = CausalModel::builder()
        .exogenous("N", 1..=range_max)
        .exogenous("M", 1..=range_max)
        .exogenous("T", 1..=range_max)
        .node("C_n", even("N"))
        .node("C_m", even("M"))
        .node("C_t", even("T"))
        .node("C_nmt", Expr::or([even_count().eq(1), even_count().eq(3)]))
        .build()?;
    let preamble = "Let N, M and T be three integers. Then N+M+T is even if the three numbers \
                    are even or if only one is even and the remaining two are odd. ";
    let (factual_template, counterfactual_template) = templates(
        &format!(
            "{preamble}Consider the numbers N={{N}}, M={{M}} and T={{T}}. Is N+M+T even? \
             Be as concise as possible."
        ),
        &format!(
            "{preamble}Consider the numbers N={{N}}, M={{M}} and T={{T}} and imagine that M \
             {{is|is not}} even. With this assumption, is N+M+T even? Be as concise as possible."
        ),
    );
    Ok(Problem {
        kind: ProblemKind::EvenSum,
        model,
        treatment: "C_m".into(),
        outcome: "C_nmt".into(),
        factual_template,
        counterfactual_template,
        constants: BTreeMap::new(),
    })
}

/// Transitivity of `≤` over `N, M, T ∈ [1, range_max]`; treatment C_nm, outcome C_nmt.
pub fn build_conpref(range_max: i64) -> Result<Problem, ProblemError> {
    if range_max < 2 {
        return Err(invalid(
            ProblemKind::ConPref,
            format!("range_max must be at least 2, got {range_max}"),
        ));
    }
    let model = CausalModel::builder()
        .exogenous("N", 1..=range_max)
        .exogenous("M", 1..=range_max)
        .exogenous("T", 1..=range_max)
        .node("C_nm", Term::var("N").le(Term::var("M")))
        .node("C_mt", Term::var("M").le(Term::var("T")))
        .node("C_nmt", Expr::and([Expr::node("C_nm"), Expr::node("C_mt")]))
        .build()?;
    let (factual_template, counterfactual_template) = templates(
        "Let N, M and T be three integers. We know that if N is smaller or equal that M and M \
         is smaller or equal than T then N is smaller or equal than T.Consider the numbers \
         N={N}, M={M} and T={T}. By only looking at the relationships (N={N} vs. M={M}) and \
         (M={M} vs. T={T}), can we know if N is smaller or equal that T? Be as concise as \
         possible.",
        "Let N, M and T be three integers. We know that if N is smaller or equal that M and M \
         is smaller or equal than T then N is smaller or equal than T. Consider the numbers \
         N={N}, M={M} and T={T}. Now imagine that the number N {is smaller or equal |is not \
         smaller or equal} than M. Even if this contradict the values of the numbers X and Y, \
         use this assumption and the relationships between and M={M} and T={T}, to decide if \
         can we tell if N is smaller or equal that T? Don't make any conclusion or comment \
         based on the values, just based on the assumption and the relationships. Be as \
         concise as possible.",
    );
    Ok(Problem {
        kind: ProblemKind::ConPref,
        model,
        treatment: "C_nm".into(),
        outcome: "C_nmt".into(),
        factual_template,
        counterfactual_template,
        constants: BTreeMap::new(),
    })
}

/// Candy distribution `R + L + E = total`; treatment C_le, outcome C_h.
pub fn build_candyparty(total_candies: i64) -> Result<Problem, ProblemError> {
    if total_candies < 3 {
        return Err(invalid(
            ProblemKind::CandyParty,
            format!("total_candies must be at least 3, got {total_candies}"),
        ));
    }
    let model = CausalModel::builder()
        .exogenous("R", 0..=total_candies)
        .exogenous("L", 0..=total_candies)
        .exogenous("E", 0..=total_candies)
        .admissible(Term::sum([Term::var("R"), Term::var("L"), Term::var("E")]).eq(total_candies))
        .node(
            "C_all2",
            Expr::and(["R", "L", "E"].map(|v| Term::var(v).ge(2))),
        )
        .node("C_le", Term::var("L").eq(Term::var("E")))
        .node(
            "C_le1",
            Expr::and([Term::var("L").ge(1), Term::var("E").ge(1)]),
        )
        .node(
            "C_rgt",
            Expr::and([
                Term::var("R").gt(Term::var("L")),
                Term::var("R").gt(Term::var("E")),
            ]),
        )
        .node(
            "C_h",
            Expr::or([
                Expr::node("C_all2"),
                Expr::and([Expr::node("C_le"), Expr::node("C_le1"), Expr::node("C_rgt")]),
            ]),
        )
        .build()?;
    let rules = "They all will be happy in the party in one of the following cases: 1) Each of \
                 them gets at least 2 candies or 2) Lara and Emma get the same number of \
                 candies, but at least one candy each, and Rafa gets more than them";
    let (factual_template, counterfactual_template) = templates(
        &format!(
            "Rafa has invited Lara and Emma to his birthday party. He has {{candies}} to \
             distribute among them. {rules}. After distributing the candies, Lara gets {{L}}, \
             Emma gets {{E}} and Raphael gets {{R}} candies. With this candies distribution, \
             will they all be happy in the party? Be as concise as possible."
        ),
        &format!(
            "Rafa has invited Lara and Emma to his birthday party. He has {{candies}} candies \
             to distribute among them. {rules} After distributing the candies. After \
             distributing the candies, Lara gets {{L}}, Emma gets {{E}} and Rafa gets {{R}} \
             candies. Consider the number of candies distributed to each of them and imagine \
             that they think that {{Lara and Emma have the same number of candies|Lara and \
             Emma have different number of candies}}. With this assumption, will they all be \
             happy in the party? Be as concise as possible."
        ),
    );
    Ok(Problem {
        kind: ProblemKind::CandyParty,
        model,
        treatment: "C_le".into(),
        outcome: "C_h".into(),
        factual_template,
        counterfactual_template,
        constants: BTreeMap::from([("candies".to_string(), total_candies.to_string())]),
    })
}

/// The four problems with default domains.
pub fn registry() -> Vec<Problem> {
    ProblemKind::ALL
        .into_iter()
        .map(|k| Problem::build(k, DomainOverrides::default()).expect("default domains are valid"))
        .collect()
}

/// Case-insensitive lookup with default domains.
pub fn lookup(name: &str) -> Result<Problem, ProblemError> {
    Problem::build(name.parse()?, DomainOverrides::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::Intervention;

    fn eval(p: &Problem, point: &[i64], node: &str) -> bool {
        let idx = p.model.node_position(node).unwrap();
        p.model.evaluate_point(point).unwrap()[idx]
    }

    #[test]
    fn div6_examples() {
        let p = build_div6(400).unwrap();
        assert!(!eval(&p, &[16], "C6"));
        assert!(eval(&p, &[6], "C6"));
        assert!(build_div6(5).is_err());
    }

    #[test]
    fn div6_contingency_by_brute_force() {
        // Independent count over 1..=400 without the model.
        let (mut n11, mut n10, mut n01, mut n00) = (0, 0, 0, 0);
        for n in 1..=400i64 {
            match (n % 3 == 0, n % 6 == 0) {
                (true, true) => n11 += 1,
                (true, false) => n10 += 1,
                (false, true) => n01 += 1,
                (false, false) => n00 += 1,
            }
        }
        assert_eq!((n11, n10, n01, n00), (66, 67, 0, 267));

        let p = build_div6(400).unwrap();
        let (x, y) = (
            p.model.node_position("C3").unwrap(),
            p.model.node_position("C6").unwrap(),
        );
        let mut counts = [0; 4];
        for point in p.model.enumerate_domain() {
            let v = p.model.evaluate_point(&point).unwrap();
            counts[(usize::from(!v[x]) << 1) | usize::from(!v[y])] += 1;
        }
        assert_eq!(counts, [n11, n10, n01, n00]);
    }

    #[test]
    fn evensum_examples() {
        let p = build_evensum(8).unwrap();
        // Points are (N, M, T).
        assert!(eval(&p, &[5, 3, 2], "C_nmt"));
        assert!(!eval(&p, &[3, 2, 4], "C_nmt"));
        assert!(eval(&p, &[2, 4, 6], "C_nmt"));
        assert_eq!(p.model.domain_size(), 512);
        assert!(!p.model.check_monotonicity("C_m", "C_nmt").unwrap());
        for point in p.model.enumerate_domain() {
            let sum_even = point.iter().sum::<i64>() % 2 == 0;
            assert_eq!(eval(&p, &point, "C_nmt"), sum_even);
        }
    }

    #[test]
    fn evensum_non_monotone_witness() {
        // N, M odd and T even: one even, sum even. Forcing M even gives two evens.
        let p = build_evensum(8).unwrap();
        let hi = p
            .model
            .counterfactual_at(&[1, 1, 2], &Intervention::new("C_m", true), "C_nmt")
            .unwrap();
        let lo = p
            .model
            .counterfactual_at(&[1, 1, 2], &Intervention::new("C_m", false), "C_nmt")
            .unwrap();
        assert!(!hi && lo);
    }

    #[test]
    fn conpref_examples() {
        let p = build_conpref(8).unwrap();
        assert!(eval(&p, &[1, 2, 3], "C_nmt"));
        assert!(!eval(&p, &[5, 2, 8], "C_nmt"));
        assert!(p.model.check_monotonicity("C_nm", "C_nmt").unwrap());
    }

    #[test]
    fn candyparty_examples() {
        let p = build_candyparty(20).unwrap();
        // Points are (R, L, E).
        assert!(eval(&p, &[10, 5, 5], "C_h"));
        assert!(eval(&p, &[18, 1, 1], "C_h"));
        assert!(!eval(&p, &[19, 1, 0], "C_h"));
        assert!(p
            .model
            .counterfactual_at(&[10, 6, 4], &Intervention::new("C_le", true), "C_h")
            .unwrap());
        assert!(p.model.check_monotonicity("C_le", "C_h").unwrap());
    }

    #[test]
    fn candyparty_domain_is_all_compositions() {
        for total in [3i64, 7, 20] {
            let brute = (0..=total)
                .flat_map(|r| (0..=total - r).map(move |l| (r, l)))
                .count();
            let p = build_candyparty(total).unwrap();
            assert_eq!(p.model.domain_size(), brute);
            assert_eq!(brute as i64, (total + 2) * (total + 1) / 2);
        }
        assert_eq!(build_candyparty(20).unwrap().model.domain_size(), 231);
    }

    #[test]
    fn registry_and_lookup() {
        let names: Vec<_> = registry().iter().map(|p| p.name()).collect();
        assert_eq!(names, ["Div6", "EvenSum", "ConPref", "CandyParty"]);
        assert_eq!(lookup("Div6").unwrap().treatment, "C3");
        assert_eq!(lookup("candyparty").unwrap().kind, ProblemKind::CandyParty);
        assert_eq!(
            lookup("nope").unwrap_err(),
            ProblemError::NotFound("nope".into())
        );
    }

    #[test]
    fn treatment_is_ancestor_of_outcome() {
        for p in registry() {
            assert!(p
                .model
                .descendants(&p.treatment)
                .unwrap()
                .contains(&p.outcome));
        }
    }

    #[test]
    fn templates_are_fillable_from_instances() {
        for p in registry() {
            let point = p.model.enumerate_domain().next().unwrap();
            let slots = p.slot_values(&point);
            for name in p
                .factual_template
                .slot_names()
                .into_iter()
                .chain(p.counterfactual_template.slot_names())
            {
                assert!(slots.contains_key(name), "{}: {name}", p.name());
            }
            assert!(p.counterfactual_template.has_branch());
            assert!(!p.factual_template.has_branch());
        }
    }

    #[test]
    fn consistency_rule_holds_for_every_instance() {
        for p in registry() {
            let x = p.model.node_position(&p.treatment).unwrap();
            for point in p.model.enumerate_domain() {
                let fact = p.model.evaluate_point(&point).unwrap();
                let iv = Intervention::new(p.treatment.clone(), fact[x]);
                let cf = p
                    .model
                    .intervene(&iv)
                    .unwrap()
                    .evaluate_point(&point)
                    .unwrap();
                assert_eq!(cf, fact, "{} at {point:?}", p.name());
            }
        }
    }
}

//! Boolean structural causal models over enumerable integer inputs.

mod expr;
mod model;

pub use expr::{CmpOp, Expr, Term};
pub use model::{
    Assignment, CausalModel, CausalModelBuilder, ConditionNode, Domain, DomainIter, ExogenousVar,
    Intervention,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScmError {
    #[error("name `{0}` is declared more than once")]
    DuplicateName(String),
    #[error("exogenous variable `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("unknown variable `{name}` referenced in {context}")]
    UnknownVariable { name: String, context: String },
    #[error("unknown condition node `{0}`")]
    UnknownNode(String),
    #[error("`{0}` is an exogenous variable, not a condition node")]
    NotACondition(String),
    #[error("condition nodes form a cycle: {0:?}")]
    Cycle(Vec<String>),
    #[error("modulo by non-positive constant {divisor} in {context}")]
    InvalidModulus { context: String, divisor: i64 },
    #[error("value {value} is outside the domain of `{name}`")]
    OutOfDomain { name: String, value: i64 },
    #[error("no value given for exogenous variable `{0}`")]
    MissingValue(String),
    #[error("expected {expected} exogenous values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("exogenous point {0:?} violates the admissibility predicate")]
    Inadmissible(Vec<i64>),
    #[error("`{treatment}` is not upstream of `{outcome}`")]
    TreatmentDownstream { treatment: String, outcome: String },
    #[error("could not draw an admissible point by rejection sampling")]
    SamplingExhausted,
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn div6() -> CausalModel {
        CausalModel::builder()
            .exogenous("N", 1..=400)
            .node("C2", Term::var("N").modulo(2).eq(0))
            .node("C3", Term::var("N").modulo(3).eq(0))
            .node("C6", Expr::and([Expr::node("C2"), Expr::node("C3")]))
            .build()
            .unwrap()
    }

    fn n(v: i64) -> BTreeMap<String, i64> {
        BTreeMap::from([("N".to_string(), v)])
    }

    #[test]
    fn evaluate_div6_ten() {
        let a = div6().evaluate(&n(10)).unwrap();
        assert_eq!(a.condition("C2"), Some(true));
        assert_eq!(a.condition("C3"), Some(false));
        assert_eq!(a.condition("C6"), Some(false));
    }

    #[test]
    fn evaluate_div6_twelve() {
        let a = div6().evaluate(&n(12)).unwrap();
        assert_eq!(a.condition("C6"), Some(true));
        assert_eq!(a.condition("C3"), Some(true));
    }

    #[test]
    fn evaluate_rejects_out_of_domain_and_unknown() {
        let m = div6();
        assert!(matches!(
            m.evaluate(&n(401)),
            Err(ScmError::OutOfDomain { .. })
        ));
        let mut bad = n(3);
        bad.insert("Q".into(), 1);
        assert!(matches!(
            m.evaluate(&bad),
            Err(ScmError::UnknownVariable { .. })
        ));
        assert!(matches!(
            m.evaluate(&BTreeMap::new()),
            Err(ScmError::MissingValue(_))
        ));
    }

    #[test]
    fn intervene_forces_and_leaves_original_alone() {
        let m = div6();
        let sub = m.intervene(&Intervention::new("C3", true)).unwrap();
        assert_eq!(sub.evaluate(&n(10)).unwrap().condition("C6"), Some(true));
        assert_eq!(m.evaluate(&n(10)).unwrap().condition("C6"), Some(false));

        let off = m.intervene(&Intervention::new("C3", false)).unwrap();
        assert!(m
            .enumerate_domain()
            .all(|p| !off.evaluate_point(&p).unwrap()[2]));

        assert_eq!(sub.evaluate(&n(12)).unwrap(), m.evaluate(&n(12)).unwrap());
    }

    #[test]
    fn intervene_rejects_unknown_and_exogenous_targets() {
        let m = div6();
        assert_eq!(
            m.intervene(&Intervention::new("C7", true)).unwrap_err(),
            ScmError::UnknownNode("C7".into())
        );
        assert_eq!(
            m.intervene(&Intervention::new("N", true)).unwrap_err(),
            ScmError::NotACondition("N".into())
        );
    }

    #[test]
    fn counterfactual_queries() {
        let m = div6();
        let cf = m
            .counterfactual(&n(10), &Intervention::new("C3", true))
            .unwrap();
        assert_eq!(cf.condition("C6"), Some(true));
        assert!(!m
            .counterfactual_at(&[18], &Intervention::new("C3", false), "C6")
            .unwrap());
    }

    #[test]
    fn cycles_are_rejected() {
        let err = CausalModel::builder()
            .exogenous("N", 1..=3)
            .node("A", Expr::node("B"))
            .node("B", Expr::not(Expr::node("A")))
            .build()
            .unwrap_err();
        assert!(matches!(err, ScmError::Cycle(_)));
    }

    #[test]
    fn forward_references_are_sorted() {
        let m = CausalModel::builder()
            .exogenous("N", 1..=3)
            .node("B", Expr::not(Expr::node("A")))
            .node("A", Term::var("N").eq(2))
            .build()
            .unwrap();
        assert_eq!(m.evaluate_point(&[2]).unwrap(), vec![false, true]);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            CausalModel::builder()
                .exogenous("N", Domain { min: 3, max: 1 })
                .build(),
            Err(ScmError::EmptyDomain(_))
        ));
        assert!(matches!(
            CausalModel::builder()
                .exogenous("N", 1..=3)
                .node("A", Term::var("N").modulo(0).eq(0))
                .build(),
            Err(ScmError::InvalidModulus { .. })
        ));
        assert!(matches!(
            CausalModel::builder()
                .exogenous("N", 1..=3)
                .node("N", Expr::Const(true))
                .build(),
            Err(ScmError::DuplicateName(_))
        ));
        assert!(matches!(
            CausalModel::builder()
                .exogenous("N", 1..=3)
                .node("A", Term::var("M").eq(0))
                .build(),
            Err(ScmError::UnknownVariable { .. })
        ));
        assert!(matches!(
            CausalModel::builder()
                .exogenous("N", 1..=3)
                .node("A", Expr::Const(true))
                .admissible(Expr::node("A"))
                .build(),
            Err(ScmError::UnknownVariable { .. })
        ));
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(div6().domain_size(), 400);
        let m = CausalModel::builder()
            .exogenous("A", 0..=1)
            .exogenous("B", 0..=2)
            .admissible(Term::sum([Term::var("A"), Term::var("B")]).le(2))
            .build()
            .unwrap();
        let pts: Vec<_> = m.enumerate_domain().collect();
        assert_eq!(
            pts,
            vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1]]
        );
        assert!(matches!(
            m.evaluate_point(&[1, 2]),
            Err(ScmError::Inadmissible(_))
        ));
    }

    #[test]
    fn monotonicity_div6_and_downstream_error() {
        let m = div6();
        assert!(m.check_monotonicity("C3", "C6").unwrap());
        assert!(matches!(
            m.check_monotonicity("C6", "C3"),
            Err(ScmError::TreatmentDownstream { .. })
        ));
        let flip = CausalModel::builder()
            .exogenous("N", 0..=1)
            .node("X", Term::var("N").eq(1))
            .node("Y", Expr::not(Expr::node("X")))
            .build()
            .unwrap();
        assert!(!flip.check_monotonicity("X", "Y").unwrap());
    }

    #[test]
    fn sampler_stays_admissible_and_is_seeded() {
        let m = CausalModel::builder()
            .exogenous("R", 0..=20)
            .exogenous("L", 0..=20)
            .admissible(Term::sum([Term::var("R"), Term::var("L")]).eq(20))
            .build()
            .unwrap();
        let a = m
            .sample_domain(&mut ChaCha8Rng::seed_from_u64(3), 50)
            .unwrap();
        let b = m
            .sample_domain(&mut ChaCha8Rng::seed_from_u64(3), 50)
            .unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p[0] + p[1] == 20));
    }

    proptest! {
        #[test]
        fn intervention_fixed_point_and_locality(nv in 1i64..=400, value: bool, target in 0usize..3) {
            let m = div6();
            let names = ["C2", "C3", "C6"];
            let iv = Intervention::new(names[target], value);
            let sub = m.intervene(&iv).unwrap();
            let orig = m.evaluate(&n(nv)).unwrap();
            let forced = sub.evaluate(&n(nv)).unwrap();
            prop_assert_eq!(forced.condition(names[target]), Some(value));
            let desc = m.descendants(names[target]).unwrap();
            for name in names {
                if name != names[target] && !desc.contains(name) {
                    prop_assert_eq!(forced.condition(name), orig.condition(name));
                }
            }
        }

        #[test]
        fn consistency_rule(nv in 1i64..=400, target in 0usize..3) {
            let m = div6();
            let names = ["C2", "C3", "C6"];
            let orig = m.evaluate(&n(nv)).unwrap();
            let natural = orig.condition(names[target]).unwrap();
            let cf = m.counterfactual(&n(nv), &Intervention::new(names[target], natural)).unwrap();
            prop_assert_eq!(cf, orig);
        }

        #[test]
        fn evaluation_is_deterministic(nv in 1i64..=400) {
            let m = div6();
            prop_assert_eq!(m.evaluate(&n(nv)).unwrap(), m.evaluate(&n(nv)).unwrap());
        }
    }
}

use causeval_core::causation::{estimate, ground_truth, problem_truth};
use causeval_core::llm::{collect, Agent, AgentSpec, CollectOptions, ResponseCache};
use causeval_core::metrics::{
    bootstrap, cir_pooled, element_error_matrix, fir, overlap, BootstrapScheme, GammaGrid,
};
use causeval_core::problems::{build_div6, registry};

#[test]
fn perfect_agent_matches_ground_truth_everywhere() {
    for problem in registry() {
        let opts = CollectOptions {
            replicates: 3,
            ..Default::default()
        };
        let c = collect(
            &problem,
            &Agent::Perfect,
            &opts,
            &ResponseCache::in_memory(),
            None,
        )
        .unwrap();
        let truth = problem_truth(&problem).unwrap();
        assert_eq!(fir(&truth.factual, &c.datasets.factual).unwrap().rate, 0.0);
        assert_eq!(cir_pooled(&truth, &c.datasets).unwrap().rate, 0.0);

        let gt = ground_truth(&problem).unwrap();
        let d = &c.datasets;
        let est = estimate(&d.factual, &d.do_true, &d.do_false, gt.estimate.monotone).unwrap();
        assert_eq!(est, gt.estimate, "{}", problem.name());

        let m = element_error_matrix(&truth, &c.datasets).unwrap();
        assert_eq!(m.factual_mean(), Some(0.0));
        assert_eq!(m.counterfactual_mean(), Some(0.0));
    }
}

#[test]
fn noisy_agent_rates_and_overlap() {
    let problem = build_div6(400).unwrap();
    let agent = Agent::from_spec(&AgentSpec::Noisy {
        p_factual: 0.0,
        p_counterfactual: 0.1,
        seed: 3,
    })
    .unwrap();
    let opts = CollectOptions::default();
    let c = collect(&problem, &agent, &opts, &ResponseCache::in_memory(), None).unwrap();
    let truth = problem_truth(&problem).unwrap();
    assert_eq!(fir(&truth.factual, &c.datasets.factual).unwrap().rate, 0.0);
    let cir = cir_pooled(&truth, &c.datasets).unwrap();
    assert!((cir.rate - 0.1).abs() < 0.015, "{}", cir.rate);
    assert!(cir.stderr > 0.0);

    let gt = ground_truth(&problem).unwrap();
    let d = &c.datasets;
    let density = bootstrap(
        &d.factual,
        &d.do_true,
        &d.do_false,
        200,
        1,
        BootstrapScheme::Replicate,
    )
    .unwrap();
    let clean = {
        let t = truth.with_replicates(10).unwrap();
        bootstrap(
            &t.factual,
            &t.do_true,
            &t.do_false,
            200,
            1,
            BootstrapScheme::Replicate,
        )
        .unwrap()
    };
    let grid = GammaGrid::default();
    let noisy_curve = overlap(&density, gt.estimate.pn, gt.estimate.ps, &grid).unwrap();
    let clean_curve = overlap(&clean, gt.estimate.pn, gt.estimate.ps, &grid).unwrap();
    // Corrupted counterfactuals pull PN below 1; exact answers never do.
    assert_eq!(clean_curve.pn[0], 1.0);
    assert!(noisy_curve.pn[0] < 0.5);
}

use proptest::prelude::*;

use ssm_colorings::experiments::{
    decay_sweep, generate_boundary_pair, regression_corpus, run_contraction,
    subtree_completion_check, trial_rng, ContractionConfig, DecayConfig, PairRequest, PairStyle,
};
use ssm_colorings::oracle::DEFAULT_STATE_BUDGET;
use ssm_colorings::tree::{BoundaryPair, Distance, TreeShape, VertexAddress};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn completing_pruned_trees_keeps_the_root_gap(
        q in 4usize..=6,
        seed in any::<u64>(),
        prune in prop::collection::vec(any::<prop::sample::Index>(), 1..4),
    ) {
        let request = PairRequest { q, d: 2, h: 4, depth: 3, style: PairStyle::Random, extra_root_child: false };
        let pair = generate_boundary_pair(&request, &mut trial_rng(seed, 0), DEFAULT_STATE_BUDGET).unwrap();
        // prune free subtrees hanging below the disagreement level
        let candidates: Vec<VertexAddress> = pair
            .disagreements()
            .into_iter()
            .flat_map(|v| [v.child(0), v.child(1)])
            .collect();
        let chosen: Vec<VertexAddress> = prune.iter().map(|i| i.get(&candidates).clone()).collect();
        let shape = pair.shape().clone().with_pruned(chosen).unwrap();
        let pruned = BoundaryPair::new(shape, pair.eta().clone(), pair.eta_prime().clone()).unwrap();
        let check = subtree_completion_check(&pruned, DEFAULT_STATE_BUDGET).unwrap();
        prop_assert!(check.equal);
        prop_assert!(check.marginals_identical);
    }
}

#[test]
fn extra_root_child_adds_a_child() {
    let request = PairRequest {
        q: 7,
        d: 2,
        h: 3,
        depth: 3,
        style: PairStyle::AdversarialLeaves,
        extra_root_child: true,
    };
    let pair =
        generate_boundary_pair(&request, &mut trial_rng(1, 0), DEFAULT_STATE_BUDGET).unwrap();
    let root = VertexAddress::root();
    assert_eq!(pair.shape().children(&root).count(), 3);
    assert_eq!(pair.disagreements().len(), 12);
    assert_eq!(pair.root_distance(), Distance::Finite(3));

    let mut config = ContractionConfig::new(9, 2, 3, 9, 0);
    config.extra_root_child = true;
    config.t_grid = 101;
    let report = run_contraction(&config).unwrap();
    assert!(report.rows.iter().all(|r| r.child_gaps.len() == 3));
    assert!(report.summary.all_certificates_hold);
}

#[test]
fn contraction_rows_are_consistent() {
    let mut config = ContractionConfig::new(10, 2, 4, 24, 3);
    config.t_grid = 201;
    let report = run_contraction(&config).unwrap();
    for row in &report.rows {
        let max = row.child_gaps.iter().copied().fold(0.0, f64::max);
        assert_eq!(row.max_child_gap, max);
        if let Some(r) = row.ratio {
            assert!((r - row.root_gap / max).abs() <= 1e-15 * r.max(1.0));
        }
        assert!(row.oracle_delta.unwrap() < 1e-12);
        assert!(row.depth >= 3 && row.depth <= 4);
        assert_eq!(row.certificate_holds, Some(true));
    }
    let styles: Vec<_> = report
        .rows
        .iter()
        .take(3)
        .map(|r| r.style.unwrap())
        .collect();
    assert_eq!(styles, PairStyle::ALL.to_vec());
}

#[test]
fn contraction_rejects_shallow_depths() {
    let mut config = ContractionConfig::new(10, 2, 4, 3, 0);
    config.depths = vec![2];
    assert!(run_contraction(&config).is_err());
}

#[test]
fn frozen_regime_reports_generation_failure() {
    // with two colors, freezing a whole level forces the root
    let config = DecayConfig {
        styles: vec![PairStyle::AdversarialLeaves],
        ..DecayConfig::new(2, 2, 3, 2, 0)
    };
    let curve = decay_sweep(&config).unwrap();
    assert!(curve
        .levels
        .iter()
        .all(|l| l.failures == 2 && l.error.is_some()));
}

#[test]
fn decay_small_sweep_decreases() {
    let curve = decay_sweep(&DecayConfig::new(10, 2, 5, 20, 4)).unwrap();
    assert_eq!(curve.levels.len(), 5);
    assert!(curve.strictly_decreasing_from(2));
    assert!(curve.fit.unwrap().slope < 0.0);
    assert!(curve.pipeline.is_some());
}

#[test]
fn corpus_is_deterministic_and_distant() {
    let a = regression_corpus().unwrap();
    let b = regression_corpus().unwrap();
    assert_eq!(a, b);
    assert!(a.len() >= 100);
    for pair in &a {
        assert!(pair.root_distance().at_least(3));
        assert!(pair.shape().q() >= pair.shape().d() + 2);
    }
}

#[test]
fn completion_on_an_irregular_shape() {
    let shape = TreeShape::new(4, 3, 4)
        .unwrap()
        .with_pruned(["2", "0.1", "1.0.2"].map(|s| s.parse().unwrap()))
        .unwrap();
    let eta = [("0.0.0", 0), ("1.1.1", 2)]
        .into_iter()
        .map(|(v, c)| (v.parse().unwrap(), c))
        .collect();
    let eta_prime = [("0.0.0", 1), ("1.1.1", 2)]
        .into_iter()
        .map(|(v, c)| (v.parse().unwrap(), c))
        .collect();
    let pair = BoundaryPair::new(shape, eta, eta_prime).unwrap();
    let check = subtree_completion_check(&pair, DEFAULT_STATE_BUDGET).unwrap();
    assert!(check.equal && check.marginals_identical);
    assert!(check.pruned_distance > 0.0);
}

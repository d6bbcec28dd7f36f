mod common;

use num_bigint::BigUint;
use proptest::prelude::*;

use ssm_colorings::bp::{self, ColorDistribution};
use ssm_colorings::experiments::{generate_boundary_pair, trial_rng, PairRequest, PairStyle};
use ssm_colorings::jacobian::{self, PairAnalysis};
use ssm_colorings::oracle::{self, DEFAULT_STATE_BUDGET};
use ssm_colorings::tree::{
    blocked_agreement_check, Boundary, TreeInstance, TreeShape, VertexAddress,
};

use common::{brute_force_counts, brute_force_marginal, vertices};

const SMALL_SHAPES: [(usize, usize); 7] = [(1, 1), (1, 3), (1, 5), (2, 1), (2, 2), (3, 1), (3, 2)];

/// A small tree with each vertex frozen independently.
fn small_instance() -> impl Strategy<Value = TreeInstance> {
    (2usize..=4, 0..SMALL_SHAPES.len(), 0.0f64..0.6).prop_flat_map(|(q, k, density)| {
        let (d, h) = SMALL_SHAPES[k];
        let shape = TreeShape::new(q, d, h).unwrap();
        let n = vertices(&TreeInstance::free(shape.clone())).len();
        prop::collection::vec(prop::option::weighted(density, 0..q), n).prop_map(move |colors| {
            let all = vertices(&TreeInstance::free(shape.clone()));
            let boundary: Boundary = all
                .into_iter()
                .zip(colors)
                .skip(1)
                .filter_map(|(v, c)| c.map(|c| (v, c)))
                .collect();
            TreeInstance::new(shape.clone(), boundary).unwrap()
        })
    })
}

fn distribution(q: usize) -> impl Strategy<Value = ColorDistribution> {
    prop::collection::vec(0.0f64..1.0, q).prop_filter_map("positive mass", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-3).then(|| ColorDistribution::new(w.iter().map(|x| x / s).collect()).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exact_counts_match_enumeration(inst in small_instance()) {
        let exact = oracle::root_counts(&inst, DEFAULT_STATE_BUDGET).unwrap();
        let brute: Vec<BigUint> = brute_force_counts(&inst).into_iter().map(BigUint::from).collect();
        prop_assert_eq!(exact, brute);
    }

    #[test]
    fn bp_matches_enumeration(inst in small_instance()) {
        match brute_force_marginal(&inst) {
            Some(expected) => {
                let pi = bp::root_marginal(&inst).unwrap();
                prop_assert!(pi.max_abs_diff(&expected) <= 1e-12);
            }
            None => prop_assert!(bp::root_marginal(&inst).is_err()),
        }
    }

    #[test]
    fn relabelling_colors_permutes_the_marginal(
        inst in small_instance(),
        seed in any::<u64>(),
    ) {
        prop_assume!(oracle::is_extendible(&inst, DEFAULT_STATE_BUDGET).unwrap());
        let q = inst.q();
        let mut perm: Vec<usize> = (0..q).collect();
        let mut rng = trial_rng(seed, 0);
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let relabelled = TreeInstance::new(inst.shape().clone(), inst.boundary().permuted(&perm)).unwrap();
        let a = bp::root_marginal(&inst).unwrap();
        let b = bp::root_marginal(&relabelled).unwrap();
        for (c, &image) in perm.iter().enumerate() {
            prop_assert!((a.get(c) - b.get(image)).abs() <= 1e-14);
        }
    }

    #[test]
    fn unconditioned_subtrees_do_not_change_the_marginal(
        inst in small_instance(),
        pick in any::<prop::sample::Index>(),
    ) {
        prop_assume!(oracle::is_extendible(&inst, DEFAULT_STATE_BUDGET).unwrap());
        let free: Vec<VertexAddress> = vertices(&inst)
            .into_iter()
            .filter(|v| !v.is_root() && inst.boundary().is_free_below(v))
            .collect();
        prop_assume!(!free.is_empty());
        let v = pick.get(&free).clone();
        let pruned = TreeInstance::new(
            inst.shape().clone().with_pruned([v]).unwrap(),
            inst.boundary().clone(),
        ).unwrap();
        let full = oracle::exact_marginal(&inst, DEFAULT_STATE_BUDGET).unwrap();
        let cut = oracle::exact_marginal(&pruned, DEFAULT_STATE_BUDGET).unwrap();
        for c in 0..inst.q() {
            prop_assert_eq!(full.prob(c), cut.prob(c));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distant_disagreements_leave_blocked_children_untouched(
        q in 5usize..=8,
        d in 1usize..=3,
        style in prop::sample::select(PairStyle::ALL.to_vec()),
        seed in any::<u64>(),
    ) {
        let request = PairRequest { q, d, h: 3, depth: 3, style, extra_root_child: false };
        let pair = generate_boundary_pair(&request, &mut trial_rng(seed, 0), DEFAULT_STATE_BUDGET).unwrap();
        prop_assert_eq!(blocked_agreement_check(&pair), Ok(true));
        let analysis = PairAnalysis::from_bp(&pair).unwrap();
        let gaps = analysis.child_gaps();
        for (i, gap) in gaps.iter().enumerate() {
            if !analysis.profile.non_frozen().contains(&i) {
                prop_assert_eq!(*gap, 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn power_iteration_agrees_with_dense_decomposition(
        (pi, gamma) in (2usize..=10).prop_flat_map(|q| (distribution(q), prop::collection::vec(0.0f64..=1.0, q))),
    ) {
        let m = jacobian::gradient_matrix(pi.probs(), &gamma);
        let (norm, _) = jacobian::spectral_norm_with_fallback(&m).unwrap();
        let dense = jacobian::spectral_norm_dense(&m);
        prop_assert!((norm - dense).abs() <= 1e-10, "power {} dense {}", norm, dense);
        let transposed = jacobian::spectral_norm_dense(&m.transpose());
        prop_assert!((dense - transposed).abs() <= 1e-10);
        prop_assert!(dense <= jacobian::closed_form_bound(pi.probs(), &gamma) + 1e-10);
    }

    #[test]
    fn zero_gamma_entries_zero_their_columns(
        (pi, gamma) in (2usize..=8).prop_flat_map(|q| (distribution(q), prop::collection::vec(prop::option::of(0.0f64..=1.0), q))),
    ) {
        let gamma: Vec<f64> = gamma.into_iter().map(|g| g.unwrap_or(0.0)).collect();
        let m = jacobian::gradient_matrix(pi.probs(), &gamma);
        for (j, g) in gamma.iter().enumerate() {
            if *g == 0.0 {
                prop_assert!(m.column(j).iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn jacobian_columns_sum_to_zero(
        (a, b, t) in (2usize..=6, 1usize..=3).prop_flat_map(|(q, n)| (
            prop::collection::vec(distribution(q), n),
            prop::collection::vec(distribution(q), n),
            0.0f64..=1.0,
        )),
    ) {
        let point = bp::interpolation_point(t, &a, &b).unwrap();
        prop_assume!(point.z.iter().flatten().all(|&z| z < 1.0 - 1e-6));
        let jac = bp::bp_jacobian(&point).unwrap();
        let q = point.q();
        for i in 0..a.len() {
            for j in 0..q {
                let sum: f64 = (0..q).map(|c| jac.get(c, i, j).unwrap()).sum();
                prop_assert!(sum.abs() <= 1e-9 * (1.0 + (0..q).map(|c| jac.get(c, i, j).unwrap().abs()).sum::<f64>()));
            }
        }
    }

    #[test]
    fn lower_bound_sits_below_one_third_over_d(
        (q, d) in (2usize..=200).prop_flat_map(|d| {
            let lo = ((1.59 * d as f64).ceil() as usize).max(d + 2);
            let hi = (2.01 * d as f64).floor() as usize;
            (lo..=hi.max(lo)).prop_map(move |q| (q, d))
        }),
    ) {
        prop_assume!(q as f64 <= 2.01 * d as f64);
        prop_assert!(d as f64 * jacobian::marginal_lower_bound(q, d).unwrap() < 1.0 / 3.0);
    }
}

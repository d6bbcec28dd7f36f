#![allow(dead_code)]

use ssm_colorings::tree::{Color, TreeInstance, VertexAddress};

/// All vertices of the instance's tree, parents before children.
pub fn vertices(instance: &TreeInstance) -> Vec<VertexAddress> {
    let shape = instance.shape();
    let mut out = vec![VertexAddress::root()];
    let mut k = 0;
    while k < out.len() {
        let children: Vec<_> = shape.children(&out[k]).collect();
        out.extend(children);
        k += 1;
    }
    out
}

/// Root-color counts by backtracking over every vertex assignment.
pub fn brute_force_counts(instance: &TreeInstance) -> Vec<u64> {
    let order = vertices(instance);
    let parent: Vec<Option<usize>> = order
        .iter()
        .map(|v| {
            v.parent()
                .map(|p| order.iter().position(|u| *u == p).unwrap())
        })
        .collect();
    let fixed: Vec<Option<Color>> = order.iter().map(|v| instance.boundary().get(v)).collect();
    let q = instance.q();
    let mut colors = vec![0usize; order.len()];
    let mut counts = vec![0u64; q];

    fn go(
        k: usize,
        q: usize,
        parent: &[Option<usize>],
        fixed: &[Option<Color>],
        colors: &mut Vec<usize>,
        counts: &mut Vec<u64>,
    ) {
        if k == colors.len() {
            counts[colors[0]] += 1;
            return;
        }
        for c in 0..q {
            if fixed[k].is_some_and(|f| f != c) {
                continue;
            }
            if parent[k].is_some_and(|p| colors[p] == c) {
                continue;
            }
            colors[k] = c;
            go(k + 1, q, parent, fixed, colors, counts);
        }
    }
    go(0, q, &parent, &fixed, &mut colors, &mut counts);
    counts
}

/// Root marginal by enumeration; `None` if no proper extension exists.
pub fn brute_force_marginal(instance: &TreeInstance) -> Option<Vec<f64>> {
    let counts = brute_force_counts(instance);
    let total: u64 = counts.iter().sum();
    (total > 0).then(|| counts.iter().map(|&n| n as f64 / total as f64).collect())
}

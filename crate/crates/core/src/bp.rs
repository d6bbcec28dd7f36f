//! Belief propagation for uniform proper colorings on trees.
//!
//! The marginal at a vertex is obtained from its children's subtree marginals
//! `x_1, .., x_k` by
//!
//! ```text
//! f_c(x) = prod_i (1 - x_{i,c}) / sum_j prod_i (1 - x_{i,j})
//! ```
//!
//! Products run over children in ascending index order and sums over colors
//! in ascending order, so results do not depend on evaluation order.

use crate::error::BpError;
use crate::tree::{Color, TreeInstance, VertexAddress};

/// Tolerance on the total mass of a probability vector.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A probability vector over the `q` colors.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorDistribution {
    probs: Vec<f64>,
}

impl ColorDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, BpError> {
        if probs.is_empty() {
            return Err(BpError::InvalidDistribution("empty vector".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(BpError::InvalidDistribution(format!("entry {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(BpError::InvalidDistribution(format!(
                "entries sum to {total}"
            )));
        }
        Ok(ColorDistribution { probs })
    }

    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        ColorDistribution { probs }
    }

    pub fn uniform(q: usize) -> Self {
        ColorDistribution {
            probs: vec![1.0 / q as f64; q],
        }
    }

    pub fn point_mass(q: usize, color: Color) -> Self {
        let mut probs = vec![0.0; q];
        probs[color] = 1.0;
        ColorDistribution { probs }
    }

    pub fn q(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, color: Color) -> f64 {
        self.probs[color]
    }

    /// Squared Euclidean distance.
    pub fn sq_dist(&self, other: &ColorDistribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.probs
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Evaluates `f` on raw child vectors. The inputs need not be normalised,
/// which the finite-difference checks rely on.
pub fn bp_step_raw(children: &[&[f64]], q: usize) -> Result<ColorDistribution, BpError> {
    if let Some(bad) = children.iter().find(|x| x.len() != q) {
        return Err(BpError::DimensionMismatch {
            expected: q,
            found: bad.len(),
        });
    }
    let weights: Vec<f64> = (0..q)
        .map(|c| children.iter().map(|x| 1.0 - x[c]).product())
        .collect();
    let denominator: f64 = weights.iter().sum();
    if denominator.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(BpError::ZeroDenominator);
    }
    Ok(ColorDistribution::from_normalized(
        weights.into_iter().map(|w| w / denominator).collect(),
    ))
}

/// One BP step: the parent's marginal from its children's subtree marginals.
/// With no children this is the uniform distribution.
pub fn bp_step(children: &[ColorDistribution], q: usize) -> Result<ColorDistribution, BpError> {
    let raw: Vec<&[f64]> = children.iter().map(|x| x.probs()).collect();
    bp_step_raw(&raw, q)
}

/// Conditional marginal of the root given the instance's boundary.
pub fn root_marginal(instance: &TreeInstance) -> Result<ColorDistribution, BpError> {
    let root = VertexAddress::root();
    if instance.is_frozen(&root) {
        return Err(BpError::FrozenRoot);
    }
    subtree_marginal(instance, &root)
}

/// Marginal of `v` in the subtree hanging from it, conditioned on the part of
/// the boundary inside that subtree. Frozen vertices yield a point mass.
pub fn subtree_marginal(
    instance: &TreeInstance,
    v: &VertexAddress,
) -> Result<ColorDistribution, BpError> {
    let q = instance.q();
    if instance.boundary().is_free_below(v) {
        // no conditioning below v: every color is equally likely by symmetry
        return Ok(ColorDistribution::uniform(q));
    }
    let children = instance
        .shape()
        .children(v)
        .map(|c| subtree_marginal(instance, &c))
        .collect::<Result<Vec<_>, _>>()?;
    match instance.boundary().get(v) {
        Some(color) => {
            if children.iter().any(|x| x.get(color) >= 1.0) {
                return Err(BpError::NonExtendible(v.to_string()));
            }
            Ok(ColorDistribution::point_mass(q, color))
        }
        None => bp_step(&children, q).map_err(|e| match e {
            BpError::ZeroDenominator => BpError::NonExtendible(v.to_string()),
            other => other,
        }),
    }
}

/// Subtree marginals of the root's children, indexed by child slot.
pub fn child_marginals(instance: &TreeInstance) -> Result<Vec<ColorDistribution>, BpError> {
    let root = VertexAddress::root();
    instance
        .shape()
        .children(&root)
        .map(|c| subtree_marginal(instance, &c))
        .collect()
}

/// A point on the segment between two tuples of child marginals, with the
/// root marginal evaluated there.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationPoint {
    pub t: f64,
    pub z: Vec<Vec<f64>>,
    pub pi_hat: ColorDistribution,
}

impl InterpolationPoint {
    pub fn q(&self) -> usize {
        self.pi_hat.q()
    }

    /// Largest `z_{i,j}` over the given children.
    pub fn max_entry(&self, children: &[usize]) -> f64 {
        children
            .iter()
            .flat_map(|&i| self.z[i].iter().copied())
            .fold(0.0, f64::max)
    }
}

/// `z_i = t * pi_i + (1 - t) * pi'_i` and `pi_hat = f(z)`.
pub fn interpolation_point(
    t: f64,
    children_eta: &[ColorDistribution],
    children_eta_prime: &[ColorDistribution],
) -> Result<InterpolationPoint, BpError> {
    if children_eta.len() != children_eta_prime.len() {
        return Err(BpError::LengthMismatch(
            children_eta.len(),
            children_eta_prime.len(),
        ));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(BpError::InvalidT(t));
    }
    let q = children_eta
        .first()
        .map(ColorDistribution::q)
        .ok_or(BpError::LengthMismatch(0, 0))?;
    let z: Vec<Vec<f64>> = children_eta
        .iter()
        .zip(children_eta_prime)
        .map(|(a, b)| {
            a.probs()
                .iter()
                .zip(b.probs())
                .map(|(x, y)| t * x + (1.0 - t) * y)
                .collect()
        })
        .collect();
    let raw: Vec<&[f64]> = z.iter().map(Vec::as_slice).collect();
    let pi_hat = bp_step_raw(&raw, q)?;
    Ok(InterpolationPoint { t, z, pi_hat })
}

/// Partial derivatives `F^{(i)}_{c,j} = d f_c / d x_{i,j}` at a point, for a
/// chosen set of children.
#[derive(Clone, Debug, PartialEq)]
pub struct BpJacobian {
    q: usize,
    children: Vec<usize>,
    // row c, column (k, j) at c * (children.len() * q) + k * q + j
    values: Vec<f64>,
}

impl BpJacobian {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn children(&self) -> &[usize] {
        &self.children
    }

    /// Entry for output color `c` and input `x_{i,j}`; `None` if child `i` was not requested.
    pub fn get(&self, c: Color, i: usize, j: Color) -> Option<f64> {
        let k = self.children.iter().position(|&x| x == i)?;
        let width = self.children.len() * self.q;
        Some(self.values[c * width + k * self.q + j])
    }
}

/// Jacobian with respect to every child.
pub fn bp_jacobian(point: &InterpolationPoint) -> Result<BpJacobian, BpError> {
    let all: Vec<usize> = (0..point.z.len()).collect();
    bp_jacobian_for(point, &all)
}

/// Jacobian restricted to the given children, typically the non-frozen set.
pub fn bp_jacobian_for(
    point: &InterpolationPoint,
    children: &[usize],
) -> Result<BpJacobian, BpError> {
    let q = point.q();
    let f = point.pi_hat.probs();
    for &i in children {
        if let Some(j) = point.z[i].iter().position(|&z| z == 1.0) {
            return Err(BpError::DivisionByOne { child: i, color: j });
        }
    }
    let width = children.len() * q;
    let mut values = vec![0.0; q * width];
    for c in 0..q {
        for (k, &i) in children.iter().enumerate() {
            for j in 0..q {
                let denom = 1.0 - point.z[i][j];
                values[c * width + k * q + j] = if j == c {
                    -(f[c] - f[c] * f[c]) / denom
                } else {
                    f[c] * f[j] / denom
                };
            }
        }
    }
    Ok(BpJacobian {
        q,
        children: children.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{Boundary, TreeShape};
    use approx::assert_abs_diff_eq;

    fn dist(p: &[f64]) -> ColorDistribution {
        ColorDistribution::new(p.to_vec()).unwrap()
    }

    fn instance(q: usize, d: usize, h: usize, entries: &[(&str, Color)]) -> TreeInstance {
        let b: Boundary = entries
            .iter()
            .map(|(v, c)| (v.parse().unwrap(), *c))
            .collect();
        TreeInstance::new(TreeShape::new(q, d, h).unwrap(), b).unwrap()
    }

    #[test]
    fn step_with_uniform_children_is_uniform() {
        let u = ColorDistribution::uniform(3);
        let out = bp_step(&[u.clone(), u], 3).unwrap();
        for p in out.probs() {
            assert_abs_diff_eq!(*p, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn step_with_frozen_child_excludes_its_color() {
        let out = bp_step(&[ColorDistribution::point_mass(3, 0)], 3).unwrap();
        assert_eq!(out.probs(), &[0.0, 0.5, 0.5]);
    }

    #[test]
    fn step_hand_evaluated_product() {
        let out = bp_step(&[dist(&[0.5, 0.5, 0.0]), ColorDistribution::uniform(3)], 3).unwrap();
        assert_abs_diff_eq!(out.get(0), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(out.get(1), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(out.get(2), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn step_detects_zero_denominator() {
        let children = [
            ColorDistribution::point_mass(2, 0),
            ColorDistribution::point_mass(2, 1),
        ];
        assert_eq!(bp_step(&children, 2), Err(BpError::ZeroDenominator));
    }

    #[test]
    fn root_marginal_with_two_frozen_leaves() {
        let inst = instance(3, 2, 1, &[("0", 0), ("1", 0)]);
        assert_eq!(root_marginal(&inst).unwrap().probs(), &[0.0, 0.5, 0.5]);
    }

    #[test]
    fn root_marginal_of_free_tree_is_uniform() {
        let inst = instance(4, 2, 2, &[]);
        assert_eq!(root_marginal(&inst).unwrap().probs(), &[0.25; 4]);
    }

    #[test]
    fn root_marginal_errors() {
        let inst = instance(3, 2, 1, &[("", 0)]);
        assert_eq!(root_marginal(&inst), Err(BpError::FrozenRoot));
        // q = 2 star whose leaves use both colors
        let inst = instance(2, 2, 1, &[("0", 0), ("1", 1)]);
        assert!(matches!(
            root_marginal(&inst),
            Err(BpError::NonExtendible(_))
        ));
        // frozen vertex adjacent to a frozen child of the same color
        let inst = instance(3, 1, 2, &[("0", 1), ("0.0", 1)]);
        assert!(matches!(
            root_marginal(&inst),
            Err(BpError::NonExtendible(_))
        ));
    }

    #[test]
    fn forced_child_excludes_color_exactly() {
        // child 0 has its two children frozen to colors 1 and 2, forcing it to 0
        let inst = instance(3, 2, 2, &[("0.0", 1), ("0.1", 2)]);
        let kids = child_marginals(&inst).unwrap();
        assert_eq!(kids[0].probs(), &[1.0, 0.0, 0.0]);
        assert_eq!(root_marginal(&inst).unwrap().get(0), 0.0);
    }

    #[test]
    fn interpolation_endpoints() {
        let inst_a = instance(4, 2, 3, &[("0.0.0", 1), ("1.1.1", 2)]);
        let inst_b = instance(4, 2, 3, &[("0.0.0", 3), ("1.1.1", 0)]);
        let a = child_marginals(&inst_a).unwrap();
        let b = child_marginals(&inst_b).unwrap();
        let one = interpolation_point(1.0, &a, &b).unwrap();
        let zero = interpolation_point(0.0, &a, &b).unwrap();
        assert!(
            one.pi_hat
                .max_abs_diff(root_marginal(&inst_a).unwrap().probs())
                < 1e-15
        );
        assert!(
            zero.pi_hat
                .max_abs_diff(root_marginal(&inst_b).unwrap().probs())
                < 1e-15
        );
        let mid = interpolation_point(0.3, &a, &a).unwrap();
        assert!(mid.pi_hat.max_abs_diff(one.pi_hat.probs()) < 1e-15);
        assert!(matches!(
            interpolation_point(1.5, &a, &b),
            Err(BpError::InvalidT(_))
        ));
        assert!(matches!(
            interpolation_point(0.5, &a, &b[..1]),
            Err(BpError::LengthMismatch(2, 1))
        ));
    }

    #[test]
    fn jacobian_at_uniform_input() {
        let u = ColorDistribution::uniform(3);
        let point = interpolation_point(0.5, std::slice::from_ref(&u), std::slice::from_ref(&u)).unwrap();
        let jac = bp_jacobian(&point).unwrap();
        assert_abs_diff_eq!(jac.get(0, 0, 0).unwrap(), -1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jac.get(0, 0, 1).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        assert_eq!(jac.get(0, 1, 0), None);
    }

    #[test]
    fn jacobian_rejects_frozen_columns() {
        let point = interpolation_point(
            0.5,
            &[
                ColorDistribution::point_mass(3, 2),
                ColorDistribution::uniform(3),
            ],
            &[
                ColorDistribution::point_mass(3, 2),
                ColorDistribution::uniform(3),
            ],
        )
        .unwrap();
        assert_eq!(
            bp_jacobian(&point),
            Err(BpError::DivisionByOne { child: 0, color: 2 })
        );
        assert!(bp_jacobian_for(&point, &[1]).is_ok());
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let a = [dist(&[0.2, 0.3, 0.1, 0.4]), dist(&[0.25, 0.25, 0.3, 0.2])];
        let b = [dist(&[0.1, 0.1, 0.5, 0.3]), dist(&[0.3, 0.2, 0.2, 0.3])];
        let point = interpolation_point(0.37, &a, &b).unwrap();
        let jac = bp_jacobian(&point).unwrap();
        let step = 1e-6;
        for i in 0..2 {
            for j in 0..4 {
                let mut plus = point.z.clone();
                let mut minus = point.z.clone();
                plus[i][j] += step;
                minus[i][j] -= step;
                let eval = |z: &Vec<Vec<f64>>| {
                    let raw: Vec<&[f64]> = z.iter().map(Vec::as_slice).collect();
                    bp_step_raw(&raw, 4).unwrap()
                };
                let (fp, fm) = (eval(&plus), eval(&minus));
                for c in 0..4 {
                    let fd = (fp.get(c) - fm.get(c)) / (2.0 * step);
                    assert_abs_diff_eq!(jac.get(c, i, j).unwrap(), fd, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn jacobian_columns_sum_to_zero() {
        let a = [dist(&[0.2, 0.3, 0.1, 0.4]), dist(&[0.25, 0.25, 0.3, 0.2])];
        let point = interpolation_point(1.0, &a, &a).unwrap();
        let jac = bp_jacobian(&point).unwrap();
        for i in 0..2 {
            for j in 0..4 {
                let s: f64 = (0..4).map(|c| jac.get(c, i, j).unwrap()).sum();
                assert_abs_diff_eq!(s, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn distribution_validation() {
        assert!(ColorDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(ColorDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(ColorDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(ColorDistribution::new(vec![]).is_err());
    }
}

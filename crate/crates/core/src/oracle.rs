//! Exact ground truth: proper-coloring counts and conditional root marginals
//! in arbitrary-precision integers.
//!
//! The count is a bottom-up dynamic program over every vertex of the tree. For
//! a vertex `v` and color `c`, `N_v(c)` is the number of proper colorings of the
//! subtree at `v` that give `v` color `c` and agree with the boundary:
//!
//! ```text
//! N_v(c) = [c allowed at v] * prod_{u child of v} (sum_c' N_u(c') - N_u(c))
//! ```
//!
//! No shortcuts are taken for unconditioned subtrees, which keeps this module
//! independent of the floating-point engine it is used to check.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::OracleError;
use crate::tree::{TreeInstance, VertexAddress};

/// Default cap on `q * vertex count`.
pub const DEFAULT_STATE_BUDGET: usize = 10_000_000;

/// The exact root marginal as counts over a common denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMarginal {
    numerators: Vec<BigUint>,
    denominator: BigUint,
}

impl RationalMarginal {
    pub fn numerators(&self) -> &[BigUint] {
        &self.numerators
    }

    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    pub fn q(&self) -> usize {
        self.numerators.len()
    }

    /// Probability of color `c` as a reduced fraction.
    pub fn prob(&self, c: usize) -> BigRational {
        BigRational::new(
            BigInt::from(self.numerators[c].clone()),
            BigInt::from(self.denominator.clone()),
        )
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.q())
            .map(|c| self.prob(c).to_f64().expect("finite probability"))
            .collect()
    }
}

fn check_budget(instance: &TreeInstance, budget: usize) -> Result<(), OracleError> {
    let q = instance.q();
    match instance.shape().vertex_count_capped(budget / q) {
        Some(_) => Ok(()),
        None => Err(OracleError::BudgetExceeded { budget }),
    }
}

/// Per-color counts `N_root(c)` for the instance.
pub fn root_counts(instance: &TreeInstance, budget: usize) -> Result<Vec<BigUint>, OracleError> {
    check_budget(instance, budget)?;
    Ok(counts_at(instance, &VertexAddress::root()))
}

fn counts_at(instance: &TreeInstance, v: &VertexAddress) -> Vec<BigUint> {
    let q = instance.q();
    let mut counts: Vec<BigUint> = match instance.boundary().get(v) {
        Some(color) => (0..q)
            .map(|c| {
                if c == color {
                    BigUint::from(1u8)
                } else {
                    BigUint::zero()
                }
            })
            .collect(),
        None => vec![BigUint::from(1u8); q],
    };
    for child in instance.shape().children(v) {
        let below = counts_at(instance, &child);
        let total: BigUint = below.iter().sum();
        for (c, n) in counts.iter_mut().enumerate() {
            if !n.is_zero() {
                *n *= &total - &below[c];
            }
        }
    }
    counts
}

/// Number of proper colorings consistent with the boundary.
pub fn count_extensions(instance: &TreeInstance, budget: usize) -> Result<BigUint, OracleError> {
    Ok(root_counts(instance, budget)?.into_iter().sum())
}

pub fn is_extendible(instance: &TreeInstance, budget: usize) -> Result<bool, OracleError> {
    Ok(!count_extensions(instance, budget)?.is_zero())
}

/// Exact conditional marginal of the root.
pub fn exact_marginal(
    instance: &TreeInstance,
    budget: usize,
) -> Result<RationalMarginal, OracleError> {
    if instance.is_frozen(&VertexAddress::root()) {
        return Err(OracleError::FrozenRoot);
    }
    let numerators = root_counts(instance, budget)?;
    let denominator: BigUint = numerators.iter().sum();
    if denominator.is_zero() {
        return Err(OracleError::NonExtendible);
    }
    Ok(RationalMarginal {
        numerators,
        denominator,
    })
}

/// Exact marginal of `v` in the subtree hanging from it.
pub fn exact_subtree_marginal(
    instance: &TreeInstance,
    v: &VertexAddress,
    budget: usize,
) -> Result<RationalMarginal, OracleError> {
    let sub = instance.subtree(v);
    let numerators = root_counts(&sub, budget)?;
    let denominator: BigUint = numerators.iter().sum();
    if denominator.is_zero() {
        return Err(OracleError::NonExtendible);
    }
    Ok(RationalMarginal {
        numerators,
        denominator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{Boundary, Color, TreeShape};

    fn instance(q: usize, d: usize, h: usize, entries: &[(&str, Color)]) -> TreeInstance {
        let b: Boundary = entries
            .iter()
            .map(|(v, c)| (v.parse().unwrap(), *c))
            .collect();
        TreeInstance::new(TreeShape::new(q, d, h).unwrap(), b).unwrap()
    }

    const B: usize = DEFAULT_STATE_BUDGET;

    #[test]
    fn counts_small_trees() {
        assert_eq!(
            count_extensions(&instance(3, 2, 1, &[]), B).unwrap(),
            BigUint::from(12u8)
        );
        assert_eq!(
            count_extensions(&instance(2, 2, 1, &[("0", 0), ("1", 1)]), B).unwrap(),
            BigUint::zero()
        );
        assert_eq!(
            count_extensions(&instance(3, 2, 0, &[]), B).unwrap(),
            BigUint::from(3u8)
        );
    }

    #[test]
    fn counts_match_brute_force_enumeration() {
        // q = 3, d = 2, h = 2: 7 vertices, 3^7 assignments
        let inst = instance(3, 2, 2, &[("0.1", 2), ("1", 0)]);
        let shape = inst.shape();
        let mut vertices = Vec::new();
        let mut stack = vec![VertexAddress::root()];
        while let Some(v) = stack.pop() {
            stack.extend(shape.children(&v));
            vertices.push(v);
        }
        let n = vertices.len();
        let mut brute = 0u64;
        for code in 0..3usize.pow(n as u32) {
            let color = |k: usize| (code / 3usize.pow(k as u32)) % 3;
            let index = |v: &VertexAddress| vertices.iter().position(|u| u == v).unwrap();
            let proper = vertices.iter().enumerate().all(|(k, v)| {
                v.parent().is_none_or(|p| color(index(&p)) != color(k))
                    && inst.boundary().get(v).is_none_or(|c| c == color(k))
            });
            if proper {
                brute += 1;
            }
        }
        assert_eq!(count_extensions(&inst, B).unwrap(), BigUint::from(brute));
    }

    #[test]
    fn marginal_with_two_frozen_leaves() {
        let m = exact_marginal(&instance(3, 2, 1, &[("0", 0), ("1", 0)]), B).unwrap();
        assert_eq!(m.to_f64(), vec![0.0, 0.5, 0.5]);
        assert_eq!(m.prob(1), BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn marginal_of_free_tree_is_uniform() {
        let m = exact_marginal(&instance(4, 2, 2, &[]), B).unwrap();
        for c in 0..4 {
            assert_eq!(m.prob(c), BigRational::new(1.into(), 4.into()));
        }
    }

    #[test]
    fn errors() {
        assert_eq!(
            exact_marginal(&instance(2, 2, 1, &[("0", 0), ("1", 1)]), B),
            Err(OracleError::NonExtendible)
        );
        assert_eq!(
            exact_marginal(&instance(3, 2, 1, &[("", 1)]), B),
            Err(OracleError::FrozenRoot)
        );
        assert_eq!(
            count_extensions(&instance(3, 2, 10, &[]), 1000),
            Err(OracleError::BudgetExceeded { budget: 1000 })
        );
        assert!(is_extendible(&instance(2, 3, 3, &[]), B).unwrap());
        assert!(!is_extendible(&instance(2, 2, 1, &[("0", 0), ("1", 1)]), B).unwrap());
    }

    #[test]
    fn subtree_marginal_uses_only_the_subtree() {
        let inst = instance(3, 2, 2, &[("", 0), ("0.0", 1)]);
        let m = exact_subtree_marginal(&inst, &"0".parse().unwrap(), B).unwrap();
        assert_eq!(m.to_f64(), vec![0.5, 0.0, 0.5]);
    }
}

//! Complete d-ary trees, sparse boundary assignments, and the frozen/blocked
//! classification of the root's children.
//!
//! Vertices are addressed by the path of child indices from the root, so the
//! tree itself is never materialised: every operation walks addresses lazily
//! and only the boundary map is stored. Colors are 0-based here; files and the
//! command line use 1-based colors and convert at the boundary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::TreeError;

/// A color index in `0..q`.
pub type Color = usize;

/// Path of child indices from the root. The empty path is the root.
///
/// The derived ordering is lexicographic, so a vertex sorts immediately
/// before all of its descendants and a subtree is a contiguous key range.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexAddress(Vec<usize>);

impl VertexAddress {
    pub fn root() -> Self {
        VertexAddress(Vec::new())
    }

    pub fn from_path(path: Vec<usize>) -> Self {
        VertexAddress(path)
    }

    pub fn path(&self) -> &[usize] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, index: usize) -> Self {
        let mut path = self.0.clone();
        path.push(index);
        VertexAddress(path)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.is_root() {
            None
        } else {
            Some(VertexAddress(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// True when `self` lies in the subtree rooted at `ancestor` (itself included).
    pub fn is_within(&self, ancestor: &VertexAddress) -> bool {
        self.0.starts_with(&ancestor.0)
    }

    /// The address of `self` relative to `ancestor`, if it lies below it.
    pub fn relative_to(&self, ancestor: &VertexAddress) -> Option<Self> {
        self.0
            .strip_prefix(ancestor.0.as_slice())
            .map(|rest| VertexAddress(rest.to_vec()))
    }

    pub fn prefixed_by(&self, prefix: &VertexAddress) -> Self {
        let mut path = prefix.0.clone();
        path.extend_from_slice(&self.0);
        VertexAddress(path)
    }
}

impl fmt::Display for VertexAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, index) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(".")?;
            }
            write!(f, "{index}")?;
        }
        Ok(())
    }
}

impl FromStr for VertexAddress {
    type Err = TreeError;

    /// Parses the canonical dotted form, e.g. `"0.2.1"`; the empty string is the root.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(VertexAddress::root());
        }
        s.split('.')
            .map(|part| {
                part.parse::<usize>()
                    .map_err(|_| TreeError::ParseAddress(s.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(VertexAddress)
    }
}

/// Distance from the root to a vertex set; the empty set is infinitely far.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Finite(usize),
    Infinite,
}

impl Distance {
    pub fn finite(self) -> Option<usize> {
        match self {
            Distance::Finite(n) => Some(n),
            Distance::Infinite => None,
        }
    }

    pub fn at_least(self, n: usize) -> bool {
        self >= Distance::Finite(n)
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(n) => write!(f, "{n}"),
            Distance::Infinite => f.write_str("inf"),
        }
    }
}

/// The shape of a rooted tree of height `h`: every internal vertex has `d`
/// children except the root, which has `root_degree` (equal to `d` unless the
/// regular-tree adjustment adds one). Whole subtrees can be pruned to describe
/// finite subtrees that embed in the complete tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeShape {
    q: usize,
    d: usize,
    h: usize,
    root_degree: usize,
    pruned: BTreeSet<VertexAddress>,
}

impl TreeShape {
    pub fn new(q: usize, d: usize, h: usize) -> Result<Self, TreeError> {
        if q < 2 {
            return Err(TreeError::InvalidShape(format!(
                "q = {q} must be at least 2"
            )));
        }
        if d < 1 {
            return Err(TreeError::InvalidShape(format!(
                "d = {d} must be at least 1"
            )));
        }
        Ok(TreeShape {
            q,
            d,
            h,
            root_degree: d,
            pruned: BTreeSet::new(),
        })
    }

    /// Gives the root `root_degree` children instead of `d`.
    pub fn with_root_degree(mut self, root_degree: usize) -> Result<Self, TreeError> {
        if root_degree < 1 {
            return Err(TreeError::InvalidShape(
                "root degree must be at least 1".into(),
            ));
        }
        self.root_degree = root_degree;
        self.pruned.retain(|v| v.path()[0] < root_degree);
        Ok(self)
    }

    /// Removes the subtrees rooted at the given (non-root) vertices.
    pub fn with_pruned<I>(mut self, vertices: I) -> Result<Self, TreeError>
    where
        I: IntoIterator<Item = VertexAddress>,
    {
        for v in vertices {
            if v.is_root() {
                return Err(TreeError::InvalidShape("the root cannot be pruned".into()));
            }
            if !self.is_slot(&v) {
                return Err(TreeError::AddressOutOfRange(v.to_string()));
            }
            self.pruned.insert(v);
        }
        Ok(self)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn root_degree(&self) -> usize {
        self.root_degree
    }

    pub fn pruned(&self) -> &BTreeSet<VertexAddress> {
        &self.pruned
    }

    pub fn is_complete(&self) -> bool {
        self.pruned.is_empty()
    }

    /// The same shape with nothing pruned.
    pub fn completed(&self) -> Self {
        TreeShape {
            pruned: BTreeSet::new(),
            ..self.clone()
        }
    }

    /// Number of child slots of `v` in the complete tree.
    pub fn branching(&self, v: &VertexAddress) -> usize {
        if v.depth() >= self.h {
            0
        } else if v.is_root() {
            self.root_degree
        } else {
            self.d
        }
    }

    /// Whether `v` is a vertex of the complete (unpruned) tree.
    pub fn is_slot(&self, v: &VertexAddress) -> bool {
        if v.depth() > self.h {
            return false;
        }
        v.path().iter().enumerate().all(|(k, &index)| {
            let limit = if k == 0 { self.root_degree } else { self.d };
            index < limit
        })
    }

    /// Whether `v` is a vertex of this (possibly pruned) tree.
    pub fn contains(&self, v: &VertexAddress) -> bool {
        if !self.is_slot(v) {
            return false;
        }
        if self.pruned.is_empty() {
            return true;
        }
        (1..=v.depth()).all(|k| {
            !self
                .pruned
                .contains(&VertexAddress::from_path(v.path()[..k].to_vec()))
        })
    }

    /// Children of `v` present in this tree, in ascending index order.
    pub fn children<'a>(
        &'a self,
        v: &'a VertexAddress,
    ) -> impl Iterator<Item = VertexAddress> + 'a {
        (0..self.branching(v))
            .map(move |i| v.child(i))
            .filter(move |c| !self.pruned.contains(c))
    }

    /// Counts the vertices of this tree, giving up (returning `None`) once the
    /// count exceeds `cap`.
    pub fn vertex_count_capped(&self, cap: usize) -> Option<usize> {
        if self.pruned.is_empty() {
            return complete_count(self.root_degree, self.d, self.h).filter(|&n| n <= cap);
        }
        let mut count = 0usize;
        let mut stack = vec![VertexAddress::root()];
        while let Some(v) = stack.pop() {
            count += 1;
            if count > cap {
                return None;
            }
            stack.extend(self.children(&v));
        }
        Some(count)
    }

    /// The shape of the subtree hanging from `v`, re-rooted at `v`.
    pub fn subtree_shape(&self, v: &VertexAddress) -> Self {
        let pruned = self
            .pruned
            .iter()
            .filter_map(|p| p.relative_to(v))
            .filter(|p| !p.is_root())
            .collect();
        TreeShape {
            q: self.q,
            d: self.d,
            h: self.h.saturating_sub(v.depth()),
            root_degree: if v.is_root() {
                self.root_degree
            } else {
                self.d
            },
            pruned,
        }
    }
}

/// Vertex count of a complete tree whose root has `root_degree` children and
/// every other internal vertex `d`, or `None` on overflow.
fn complete_count(root_degree: usize, d: usize, h: usize) -> Option<usize> {
    if h == 0 {
        return Some(1);
    }
    // 1 + root_degree * (1 + d + ... + d^(h-1))
    let mut level = 1usize;
    let mut below = 0usize;
    for _ in 0..h {
        below = below.checked_add(level)?;
        level = level.checked_mul(d)?;
    }
    root_degree.checked_mul(below)?.checked_add(1)
}

/// A sparse partial coloring: vertex address to 0-based color.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Boundary(BTreeMap<VertexAddress, Color>);

impl Boundary {
    pub fn new() -> Self {
        Boundary(BTreeMap::new())
    }

    /// Inserts an assignment, returning the previous color if `v` was already set.
    pub fn insert(&mut self, v: VertexAddress, color: Color) -> Option<Color> {
        self.0.insert(v, color)
    }

    pub fn get(&self, v: &VertexAddress) -> Option<Color> {
        self.0.get(v).copied()
    }

    pub fn contains(&self, v: &VertexAddress) -> bool {
        self.0.contains_key(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexAddress, Color)> {
        self.0.iter().map(|(v, &c)| (v, c))
    }

    pub fn keys(&self) -> impl Iterator<Item = &VertexAddress> {
        self.0.keys()
    }

    /// Assignments at `v` or any of its descendants.
    pub fn within<'a>(
        &'a self,
        v: &'a VertexAddress,
    ) -> impl Iterator<Item = (&'a VertexAddress, Color)> + 'a {
        self.0
            .range(v.clone()..)
            .take_while(move |(k, _)| k.is_within(v))
            .map(|(k, &c)| (k, c))
    }

    /// True when nothing at or below `v` is assigned.
    pub fn is_free_below(&self, v: &VertexAddress) -> bool {
        self.within(v).next().is_none()
    }

    /// The assignments inside the subtree of `v`, re-addressed relative to `v`.
    pub fn restricted_to(&self, v: &VertexAddress) -> Boundary {
        self.within(v)
            .map(|(k, c)| (k.relative_to(v).expect("within subtree"), c))
            .collect()
    }

    /// Vertices assigned by both maps with different colors, plus vertices
    /// assigned by only one of them.
    pub fn disagreements(&self, other: &Boundary) -> BTreeSet<VertexAddress> {
        let mut out: BTreeSet<VertexAddress> = self
            .iter()
            .filter(|(v, c)| other.get(v) != Some(*c))
            .map(|(v, _)| v.clone())
            .collect();
        out.extend(other.keys().filter(|v| !self.contains(v)).cloned());
        out
    }

    /// Applies a color permutation (`perm[c]` is the image of color `c`).
    pub fn permuted(&self, perm: &[Color]) -> Boundary {
        self.iter().map(|(v, c)| (v.clone(), perm[c])).collect()
    }
}

impl FromIterator<(VertexAddress, Color)> for Boundary {
    fn from_iter<I: IntoIterator<Item = (VertexAddress, Color)>>(iter: I) -> Self {
        Boundary(iter.into_iter().collect())
    }
}

fn validate_boundary(shape: &TreeShape, boundary: &Boundary) -> Result<(), TreeError> {
    for (v, c) in boundary.iter() {
        if !shape.contains(v) {
            return Err(TreeError::AddressOutOfRange(v.to_string()));
        }
        if c >= shape.q() {
            return Err(TreeError::ColorOutOfRange {
                vertex: v.to_string(),
                color: c,
                q: shape.q(),
            });
        }
    }
    Ok(())
}

/// A tree together with one partial boundary assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeInstance {
    shape: TreeShape,
    boundary: Boundary,
}

impl TreeInstance {
    pub fn new(shape: TreeShape, boundary: Boundary) -> Result<Self, TreeError> {
        validate_boundary(&shape, &boundary)?;
        Ok(TreeInstance { shape, boundary })
    }

    /// The unconditioned instance.
    pub fn free(shape: TreeShape) -> Self {
        TreeInstance {
            shape,
            boundary: Boundary::new(),
        }
    }

    pub fn shape(&self) -> &TreeShape {
        &self.shape
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn q(&self) -> usize {
        self.shape.q()
    }

    pub fn d(&self) -> usize {
        self.shape.d()
    }

    pub fn h(&self) -> usize {
        self.shape.h()
    }

    pub fn is_frozen(&self, v: &VertexAddress) -> bool {
        self.boundary.contains(v)
    }

    /// The instance on the subtree rooted at `v` with the boundary restricted to it.
    pub fn subtree(&self, v: &VertexAddress) -> TreeInstance {
        TreeInstance {
            shape: self.shape.subtree_shape(v),
            boundary: self.boundary.restricted_to(v),
        }
    }

    /// Colors held by frozen neighbors of `v` (parent and children).
    pub fn blocked_colors(&self, v: &VertexAddress) -> BTreeSet<Color> {
        let mut blocked: BTreeSet<Color> = self
            .shape
            .children(v)
            .filter_map(|c| self.boundary.get(&c))
            .collect();
        if let Some(p) = v.parent() {
            blocked.extend(self.boundary.get(&p));
        }
        blocked
    }

    /// Colors not blocked at `v`.
    pub fn available_colors(&self, v: &VertexAddress) -> Vec<Color> {
        let blocked = self.blocked_colors(v);
        (0..self.q()).filter(|c| !blocked.contains(c)).collect()
    }
}

/// Two assignments on the same vertex set Λ of one tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryPair {
    shape: TreeShape,
    eta: Boundary,
    eta_prime: Boundary,
}

impl BoundaryPair {
    pub fn new(shape: TreeShape, eta: Boundary, eta_prime: Boundary) -> Result<Self, TreeError> {
        validate_boundary(&shape, &eta)?;
        validate_boundary(&shape, &eta_prime)?;
        if !eta.keys().eq(eta_prime.keys()) {
            return Err(TreeError::KeySetMismatch);
        }
        Ok(BoundaryPair {
            shape,
            eta,
            eta_prime,
        })
    }

    pub fn shape(&self) -> &TreeShape {
        &self.shape
    }

    pub fn eta(&self) -> &Boundary {
        &self.eta
    }

    pub fn eta_prime(&self) -> &Boundary {
        &self.eta_prime
    }

    pub fn eta_instance(&self) -> TreeInstance {
        TreeInstance {
            shape: self.shape.clone(),
            boundary: self.eta.clone(),
        }
    }

    pub fn eta_prime_instance(&self) -> TreeInstance {
        TreeInstance {
            shape: self.shape.clone(),
            boundary: self.eta_prime.clone(),
        }
    }

    /// The disagreement set Δ.
    pub fn disagreements(&self) -> BTreeSet<VertexAddress> {
        self.eta.disagreements(&self.eta_prime)
    }

    pub fn root_distance(&self) -> Distance {
        dist_root_to_set(&self.disagreements())
    }

    /// The same pair on a different shape (used to embed a pruned tree in its completion).
    pub fn with_shape(&self, shape: TreeShape) -> Result<Self, TreeError> {
        BoundaryPair::new(shape, self.eta.clone(), self.eta_prime.clone())
    }
}

/// Non-frozen children of the root and, per color, how many of them have
/// that color available.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AvailabilityProfile {
    non_frozen: Vec<usize>,
    available_counts: Vec<usize>,
}

impl AvailabilityProfile {
    /// Child indices D of the non-frozen children, ascending.
    pub fn non_frozen(&self) -> &[usize] {
        &self.non_frozen
    }

    /// |D|.
    pub fn size(&self) -> usize {
        self.non_frozen.len()
    }

    /// Number of children in D with color `c` available (`gamma_c * |D|`).
    pub fn available_count(&self, c: Color) -> usize {
        self.available_counts[c]
    }

    /// Availability fractions; the zero vector when D is empty.
    pub fn gamma(&self) -> Vec<f64> {
        let size = self.size();
        self.available_counts
            .iter()
            .map(|&n| {
                if size == 0 {
                    0.0
                } else {
                    n as f64 / size as f64
                }
            })
            .collect()
    }

    pub fn gamma_sqrt(&self) -> Vec<f64> {
        self.gamma().into_iter().map(f64::sqrt).collect()
    }
}

/// Classifies the root's children into frozen and non-frozen and counts,
/// per color, the non-frozen children for which it is available.
///
/// A child's blocked colors come from all of its frozen tree neighbors. The
/// parent clause only matters when the root itself is frozen, which the
/// contraction setting excludes.
pub fn classify_children(instance: &TreeInstance) -> AvailabilityProfile {
    let root = VertexAddress::root();
    let q = instance.q();
    let mut non_frozen = Vec::new();
    let mut available_counts = vec![0usize; q];
    for child in instance.shape().children(&root) {
        if instance.is_frozen(&child) {
            continue;
        }
        non_frozen.push(*child.path().last().expect("child of root"));
        let blocked = instance.blocked_colors(&child);
        for (c, count) in available_counts.iter_mut().enumerate() {
            if !blocked.contains(&c) {
                *count += 1;
            }
        }
    }
    if non_frozen.is_empty() {
        available_counts.iter_mut().for_each(|n| *n = 0);
    }
    AvailabilityProfile {
        non_frozen,
        available_counts,
    }
}

/// Checks that the frozen children and their blocked colors coincide under
/// both assignments. Requires the disagreements to be at distance at least 3
/// from the root, where agreement is guaranteed; a `false` result therefore
/// signals a bug rather than a property of the instance.
pub fn blocked_agreement_check(pair: &BoundaryPair) -> Result<bool, TreeError> {
    let distance = pair.root_distance();
    if let Distance::Finite(n) = distance {
        if n < 3 {
            return Err(TreeError::DisagreementTooClose { distance: n });
        }
    }
    Ok(classify_children(&pair.eta_instance()) == classify_children(&pair.eta_prime_instance()))
}

/// Minimum depth over a vertex set; `Infinite` for the empty set.
pub fn dist_root_to_set<'a, I>(vertices: I) -> Distance
where
    I: IntoIterator<Item = &'a VertexAddress>,
{
    vertices
        .into_iter()
        .map(|v| Distance::Finite(v.depth()))
        .min()
        .unwrap_or(Distance::Infinite)
}

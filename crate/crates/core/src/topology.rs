//! Uniform k-ary quantum tree networks.
//!
//! End nodes sit on the depth-`n` leaves and routers on every internal node.
//! Nodes are addressed by their base-k digit label (the root has the empty
//! label), and edges by the child endpoint, since every non-root node has
//! exactly one parent.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform k-ary tree of height `n` with buffering factor `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeTopology {
    k: u32,
    n: u32,
    m: u32,
    leaves: u64,
}

/// Serializable summary of a topology for embedding in result files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyDescriptor {
    pub k: u32,
    pub n: u32,
    pub m: u32,
    #[serde(rename = "N")]
    pub end_nodes: u64,
}

/// Builds a uniform tree, rejecting `k < 2`, `n < 1`, `m < 1` and any size whose
/// node count overflows 64 bits.
pub fn build_tree(k: u32, n: u32, m: u32) -> Result<TreeTopology> {
    TreeTopology::new(k, n, m)
}

impl TreeTopology {
    pub fn new(k: u32, n: u32, m: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::param("k", k, "k >= 2"));
        }
        if n < 1 {
            return Err(Error::param("n", n, "n >= 1"));
        }
        if m < 1 {
            return Err(Error::param("m", m, "m >= 1"));
        }
        let leaves = checked_pow(k as u64, n).ok_or(Error::Overflow { k, n })?;
        // Total node count and the largest per-node allocation must also fit.
        let total = (0..=n).try_fold(0u64, |acc, d| checked_pow(k as u64, d).and_then(|c| acc.checked_add(c)));
        let root_qubits = leaves.checked_mul(2 * m as u64);
        if total.is_none() || root_qubits.is_none() {
            return Err(Error::Overflow { k, n });
        }
        Ok(Self { k, n, m, leaves })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Tree height, `log_k N`.
    pub fn height(&self) -> u32 {
        self.n
    }

    pub fn buffering(&self) -> u32 {
        self.m
    }

    /// Number of end nodes, `k^n`.
    pub fn leaves(&self) -> u64 {
        self.leaves
    }

    pub fn descriptor(&self) -> TopologyDescriptor {
        TopologyDescriptor { k: self.k, n: self.n, m: self.m, end_nodes: self.leaves }
    }

    pub fn nodes_at_depth(&self, depth: u32) -> u64 {
        assert!(depth <= self.n, "depth {depth} exceeds height {}", self.n);
        (self.k as u64).pow(depth)
    }

    /// Leaves below a node at `depth`.
    pub fn subtree_leaves(&self, depth: u32) -> u64 {
        assert!(depth <= self.n, "depth {depth} exceeds height {}", self.n);
        (self.k as u64).pow(self.n - depth)
    }

    pub fn node_count(&self) -> u64 {
        (0..=self.n).map(|d| self.nodes_at_depth(d)).sum()
    }

    /// Routers, including the root.
    pub fn router_count(&self) -> u64 {
        self.node_count() - self.leaves
    }

    pub fn edge_count(&self) -> usize {
        (self.node_count() - 1) as usize
    }

    /// Index of the first node at `depth` in breadth-first order.
    pub fn depth_offset(&self, depth: u32) -> u64 {
        (0..depth).map(|d| self.nodes_at_depth(d)).sum()
    }

    /// Breadth-first index of the node at (`depth`, `ordinal`).
    pub fn node_index(&self, depth: u32, ordinal: u64) -> usize {
        debug_assert!(ordinal < self.nodes_at_depth(depth));
        (self.depth_offset(depth) + ordinal) as usize
    }

    /// Dense index of an edge; edges are numbered by their child node.
    pub fn edge_index(&self, edge: EdgeId) -> usize {
        self.node_index(edge.child_depth, edge.child_ordinal) - 1
    }

    /// Entangled-pair slots on every edge between `parent_depth` and
    /// `parent_depth + 1`: `m * k^(n - parent_depth - 1)`.
    pub fn edge_capacity(&self, parent_depth: u32) -> Result<u64> {
        if parent_depth >= self.n {
            return Err(Error::param("parent_depth", parent_depth, "0 <= parent_depth < n"));
        }
        Ok(self.m as u64 * self.subtree_leaves(parent_depth + 1))
    }

    /// Capacities of all edges in [`edge_index`](Self::edge_index) order.
    pub fn edge_capacities(&self) -> Vec<u64> {
        let mut caps = Vec::with_capacity(self.edge_count());
        for child_depth in 1..=self.n {
            let cap = self.m as u64 * self.subtree_leaves(child_depth);
            caps.extend(std::iter::repeat_n(cap, self.nodes_at_depth(child_depth) as usize));
        }
        caps
    }

    pub fn leaf(&self, ordinal: u64) -> NodeLabel {
        NodeLabel::from_ordinal(self.k, self.n, ordinal)
    }

    pub fn root(&self) -> NodeLabel {
        NodeLabel::root()
    }

    /// Iterates the labels of every node at `depth`.
    pub fn labels_at_depth(&self, depth: u32) -> impl Iterator<Item = NodeLabel> + '_ {
        (0..self.nodes_at_depth(depth)).map(move |o| NodeLabel::from_ordinal(self.k, depth, o))
    }

    fn check_label(&self, label: &NodeLabel) -> Result<()> {
        if label.depth() > self.n {
            return Err(Error::InvalidLabel { label: label.to_string(), reason: "deeper than the tree" });
        }
        if label.digits.iter().any(|&d| d >= self.k) {
            return Err(Error::InvalidLabel { label: label.to_string(), reason: "digit out of range for branching factor" });
        }
        Ok(())
    }

    fn check_leaf(&self, label: &NodeLabel) -> Result<()> {
        self.check_label(label)?;
        if label.depth() != self.n {
            return Err(Error::InvalidLabel { label: label.to_string(), reason: "not a leaf" });
        }
        Ok(())
    }

    /// The unique tree path between two distinct leaves.
    pub fn routing_path(&self, a: &NodeLabel, b: &NodeLabel) -> Result<RoutingPath> {
        self.check_leaf(a)?;
        self.check_leaf(b)?;
        if a == b {
            return Err(Error::InvalidLabel { label: a.to_string(), reason: "routing requires two distinct leaves" });
        }
        let apex_depth = a.common_prefix_len(b) as u32;
        let mut edges = Vec::with_capacity(2 * (self.n - apex_depth) as usize);
        for depth in (apex_depth + 1..=self.n).rev() {
            edges.push(EdgeId { child_depth: depth, child_ordinal: a.prefix_ordinal(self.k, depth) });
        }
        for depth in apex_depth + 1..=self.n {
            edges.push(EdgeId { child_depth: depth, child_ordinal: b.prefix_ordinal(self.k, depth) });
        }
        Ok(RoutingPath { a: a.clone(), b: b.clone(), apex_depth, edges })
    }

    /// Appends the dense edge indices of the path between leaf ordinals `a`
    /// and `b` to `out`. Same edge order as [`routing_path`](Self::routing_path).
    pub(crate) fn path_edge_indices(&self, a: u64, b: u64, out: &mut Vec<u32>) {
        debug_assert!(a != b && a < self.leaves && b < self.leaves);
        let k = self.k as u64;
        let mut apex = self.n;
        let (mut x, mut y) = (a, b);
        while x != y {
            x /= k;
            y /= k;
            apex -= 1;
        }
        let len = (self.n - apex) as usize;
        let start = out.len();
        out.resize(start + 2 * len, 0);
        // offset(d) = (k^d - 1) / (k - 1); edge index = offset(d) + ordinal - 1
        let mut width = self.leaves;
        let mut offset = (self.leaves - 1) / (k - 1);
        let (mut x, mut y) = (a, b);
        for i in 0..len {
            out[start + i] = (offset + x - 1) as u32;
            out[start + 2 * len - 1 - i] = (offset + y - 1) as u32;
            x /= k;
            y /= k;
            width /= k;
            offset -= width;
        }
    }

    pub fn allocation(&self) -> MemoryAllocation {
        MemoryAllocation { tree: *self }
    }
}

fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

/// Base-k digit label of a node. The number of digits is the node depth.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeLabel {
    digits: Vec<u32>,
}

impl NodeLabel {
    pub fn root() -> Self {
        Self { digits: Vec::new() }
    }

    pub fn new(digits: Vec<u32>) -> Self {
        Self { digits }
    }

    /// Label of the `ordinal`-th node (in left-to-right order) at `depth`.
    pub fn from_ordinal(k: u32, depth: u32, ordinal: u64) -> Self {
        let k64 = k as u64;
        let mut digits = vec![0u32; depth as usize];
        let mut rest = ordinal;
        for slot in digits.iter_mut().rev() {
            *slot = (rest % k64) as u32;
            rest /= k64;
        }
        debug_assert_eq!(rest, 0, "ordinal {ordinal} too large for depth {depth}");
        Self { digits }
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn depth(&self) -> u32 {
        self.digits.len() as u32
    }

    pub fn ordinal(&self, k: u32) -> u64 {
        self.prefix_ordinal(k, self.depth())
    }

    /// Ordinal of this node's ancestor at `depth` (or itself at its own depth).
    pub fn prefix_ordinal(&self, k: u32, depth: u32) -> u64 {
        self.digits[..depth as usize].iter().fold(0u64, |acc, &d| acc * k as u64 + d as u64)
    }

    pub fn parent(&self) -> Option<NodeLabel> {
        if self.digits.is_empty() {
            None
        } else {
            Some(Self { digits: self.digits[..self.digits.len() - 1].to_vec() })
        }
    }

    pub fn child(&self, digit: u32) -> NodeLabel {
        let mut digits = self.digits.clone();
        digits.push(digit);
        Self { digits }
    }

    pub fn ancestor(&self, depth: u32) -> NodeLabel {
        Self { digits: self.digits[..depth as usize].to_vec() }
    }

    pub fn common_prefix_len(&self, other: &NodeLabel) -> usize {
        self.digits.iter().zip(&other.digits).take_while(|(a, b)| a == b).count()
    }

    pub fn is_ancestor_of(&self, other: &NodeLabel) -> bool {
        self.digits.len() <= other.digits.len() && other.digits.starts_with(&self.digits)
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N")?;
        let wide = self.digits.iter().any(|&d| d > 9);
        for (i, d) in self.digits.iter().enumerate() {
            if wide && i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// An edge, identified by its child endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId {
    pub child_depth: u32,
    pub child_ordinal: u64,
}

impl EdgeId {
    pub fn parent_depth(&self) -> u32 {
        self.child_depth - 1
    }
}

/// Unique path between two leaves: up from `a` to the apex, then down to `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingPath {
    pub a: NodeLabel,
    pub b: NodeLabel,
    pub apex_depth: u32,
    pub edges: Vec<EdgeId>,
}

impl RoutingPath {
    /// Nodes visited in order, leaf `a` first and leaf `b` last.
    pub fn nodes(&self) -> Vec<NodeLabel> {
        let n = self.a.depth();
        let mut nodes: Vec<NodeLabel> = (self.apex_depth..=n).rev().map(|d| self.a.ancestor(d)).collect();
        nodes.extend((self.apex_depth + 1..=n).map(|d| self.b.ancestor(d)));
        nodes
    }

    /// Routers that perform a swap: every node strictly between the leaves.
    pub fn routers(&self) -> Vec<NodeLabel> {
        let nodes = self.nodes();
        nodes[1..nodes.len() - 1].to_vec()
    }

    pub fn contains(&self, label: &NodeLabel) -> bool {
        let d = label.depth();
        if d < self.apex_depth {
            return false;
        }
        label.is_ancestor_of(&self.a) || label.is_ancestor_of(&self.b)
    }

    pub fn apex(&self) -> NodeLabel {
        self.a.ancestor(self.apex_depth)
    }
}

/// Qubits per node: `2 m k^(n-d)` for internal routers, `m k^n` at the root
/// and `m` at each leaf.
#[derive(Debug, Clone, Copy)]
pub struct MemoryAllocation {
    tree: TreeTopology,
}

impl MemoryAllocation {
    pub fn qubits_at_depth(&self, depth: u32) -> u64 {
        let t = &self.tree;
        let below = t.m as u64 * t.subtree_leaves(depth);
        if depth == 0 || depth == t.n {
            below
        } else {
            2 * below
        }
    }

    pub fn qubits(&self, label: &NodeLabel) -> u64 {
        self.qubits_at_depth(label.depth())
    }

    /// Qubits facing the parent (upward) and facing the children (downward).
    pub fn split(&self, depth: u32) -> (u64, u64) {
        let t = &self.tree;
        let half = t.m as u64 * t.subtree_leaves(depth);
        let up = if depth == 0 { 0 } else { half };
        let down = if depth == t.n { 0 } else { half };
        (up, down)
    }

    pub fn layer_total(&self, depth: u32) -> u64 {
        self.qubits_at_depth(depth) * self.tree.nodes_at_depth(depth)
    }

    pub fn network_total(&self) -> u64 {
        (0..=self.tree.n).map(|d| self.layer_total(d)).sum()
    }
}

/// Table of router activation probabilities for one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationProbability {
    /// Router on the path but not its highest router.
    pub branch: f64,
    /// Router is the apex of the path.
    pub root: f64,
    pub total: f64,
}

/// Analytic activation probability of a router labeled with `y` digits
/// beyond the first, from the closed form `(1 - p^2) p + k^(-2y)(k-1)/k` with
/// `p = 1 - k^(-y)`.
pub fn activation_probability(k: u32, y: u32) -> Result<ActivationProbability> {
    if k < 2 {
        return Err(Error::param("k", k, "k >= 2"));
    }
    let x = (k as f64).powi(-(y as i32));
    let p = 1.0 - x;
    let branch = (1.0 - p * p) * p;
    let root = x * x * ((k - 1) as f64 / k as f64);
    Ok(ActivationProbability { branch, root, total: branch + root })
}

/// [`activation_probability`] evaluated in exact rational arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactActivation {
    pub branch: BigRational,
    pub root: BigRational,
    pub total: BigRational,
}

pub fn activation_probability_exact(k: u32, y: u32) -> Result<ExactActivation> {
    if k < 2 {
        return Err(Error::param("k", k, "k >= 2"));
    }
    let kr = BigRational::from_integer(BigInt::from(k));
    let x = BigRational::one() / num_traits::pow(kr.clone(), y as usize);
    let one = BigRational::one();
    let p = &one - &x;
    let branch = (&one - &p * &p) * &p;
    let root = &x * &x * ((&kr - &one) / &kr);
    let total = &branch + &root;
    Ok(ExactActivation { branch, root, total })
}

/// Fraction of unordered distinct leaf pairs whose routing path visits
/// `label`, found by enumerating every pair.
pub fn activation_probability_empirical(tree: &TreeTopology, label: &NodeLabel) -> Result<f64> {
    tree.check_label(label)?;
    if label.depth() == tree.height() {
        return Err(Error::InvalidLabel { label: label.to_string(), reason: "leaves are not routers" });
    }
    let n_leaves = tree.leaves();
    let mut hits = 0u64;
    let mut pairs = 0u64;
    for a in 0..n_leaves {
        let la = tree.leaf(a);
        for b in a + 1..n_leaves {
            let path = tree.routing_path(&la, &tree.leaf(b))?;
            pairs += 1;
            if path.contains(label) {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / pairs as f64)
}

/// Mean enumerated activation probability of the routers at each depth
/// `0..n`.
pub fn layer_activation_profile(tree: &TreeTopology) -> Result<Vec<f64>> {
    (0..tree.height())
        .map(|d| {
            let count = tree.nodes_at_depth(d);
            let sum = tree.labels_at_depth(d).map(|l| activation_probability_empirical(tree, &l)).sum::<Result<f64>>()?;
            Ok(sum / count as f64)
        })
        .collect()
}

/// Closed-form count of unordered distinct leaf pairs whose path visits a
/// given router at `depth`: `s (N - s) + C(k, 2) (s / k)^2` with `s`
/// leaves under the router. Returned as an exact fraction of `C(N, 2)`.
pub fn activation_fraction_pairs(tree: &TreeTopology, depth: u32) -> Result<BigRational> {
    if depth >= tree.height() {
        return Err(Error::param("depth", depth, "router depth < n"));
    }
    let n_leaves = BigInt::from(tree.leaves());
    let s = BigInt::from(tree.subtree_leaves(depth));
    let k = BigInt::from(tree.k());
    let child = &s / &k;
    let one_side = &s * (&n_leaves - &s);
    let apex: BigInt = (&k * (&k - 1u32) / 2u32) * &child * &child;
    let pairs: BigInt = &n_leaves * (&n_leaves - 1u32) / 2u32;
    if pairs.is_zero() {
        return Err(Error::Degenerate("tree with fewer than two leaves".into()));
    }
    Ok(BigRational::new(one_side + apex, pairs))
}

//! Adaptive quadtree discretization of the unit state-action square.
//!
//! The state-action space is `[0, 1] × [0, 1]` under the max metric
//! `D((x, a), (x', a')) = max{|x - x'|, |a - a'|}`, so every "ball" is an
//! axis-aligned square identified by its center and radius (half
//! side-length). The partition starts as a single square covering the whole
//! space and is refined by splitting squares into four equal quadrants.
//! Each leaf square carries a Q-value estimate and a visit counter; the set
//! of leaves is the current set of arms.
//!
//! Squares are half-open (`[lo, hi)` in both coordinates) except along the
//! global upper boundary, where they are closed. This makes the leaves an
//! exact partition: every point of the square belongs to exactly one leaf.
//! All centers and radii are dyadic rationals, so the geometry is exact in
//! `f64` at any depth reachable in practice.

use std::io::{self, Write};
use std::num::NonZeroU32;

use crate::util::fmt_g12;

/// Diameter of `[0,1]²` under the max metric; used in the split threshold.
pub const SPACE_DIAMETER: f64 = 1.0;

/// A point of the state-action square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub state: f64,
    pub action: f64,
}

impl Point {
    pub fn new(state: f64, action: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&state) && (0.0..=1.0).contains(&action));
        Self { state, action }
    }
}

/// Handle to a ball (a node of the partition tree).
///
/// Ids are stable for the lifetime of the tree they came from: splitting
/// appends nodes and never moves existing ones. A clone of a tree has the
/// same ids for the same balls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BallId(u32);

impl BallId {
    fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug)]
struct Node {
    center_state: f64,
    center_action: f64,
    radius: f64,
    q: f64,
    visits: u32,
    /// Index of the first of four contiguous children; `None` for leaves.
    /// Children are stored in the order (s⁻a⁻, s⁻a⁺, s⁺a⁻, s⁺a⁺).
    first_child: Option<NonZeroU32>,
}

/// The adaptive discretization of the state-action square.
///
/// Nodes live in an arena, so `clone()` is a deep copy: the clone shares no
/// state with the original and either side can be mutated freely. A tree is
/// single-writer; read-only queries on a quiescent tree may be shared across
/// threads.
#[derive(Clone, Debug)]
pub struct PartitionTree {
    nodes: Vec<Node>,
    d_max: f64,
    split_count: u32,
    leaf_count: u32,
}

/// One exported leaf: `(center_state, center_action, radius, q, visits)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafRecord {
    pub center_state: f64,
    pub center_action: f64,
    pub radius: f64,
    pub q_estimate: f64,
    pub visit_count: u32,
}

impl PartitionTree {
    /// A fresh partition: one ball centered at (0.5, 0.5) with radius 0.5
    /// covering the square tightly, with the given optimistic Q value.
    pub fn new(initial_q: f64) -> Self {
        assert!(initial_q >= 0.0, "initial Q estimate must be nonnegative");
        Self {
            nodes: vec![Node {
                center_state: 0.5,
                center_action: 0.5,
                radius: 0.5,
                q: initial_q,
                visits: 0,
                first_child: None,
            }],
            d_max: SPACE_DIAMETER,
            split_count: 0,
            leaf_count: 1,
        }
    }

    pub fn root(&self) -> BallId {
        BallId(0)
    }

    /// Number of arms (leaf balls). Always `1 + 3 * split_count`.
    pub fn num_arms(&self) -> u32 {
        self.leaf_count
    }

    pub fn split_count(&self) -> u32 {
        self.split_count
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    fn node(&self, id: BallId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn center_state(&self, id: BallId) -> f64 {
        self.node(id).center_state
    }

    pub fn center_action(&self, id: BallId) -> f64 {
        self.node(id).center_action
    }

    pub fn radius(&self, id: BallId) -> f64 {
        self.node(id).radius
    }

    pub fn q_estimate(&self, id: BallId) -> f64 {
        self.node(id).q
    }

    pub fn set_q_estimate(&mut self, id: BallId, q: f64) {
        self.nodes[id.index()].q = q;
    }

    pub fn visit_count(&self, id: BallId) -> u32 {
        self.node(id).visits
    }

    /// Increments the visit counter and returns the new count.
    pub fn record_visit(&mut self, id: BallId) -> u32 {
        let node = &mut self.nodes[id.index()];
        node.visits += 1;
        node.visits
    }

    pub fn is_leaf(&self, id: BallId) -> bool {
        self.node(id).first_child.is_none()
    }

    pub fn children(&self, id: BallId) -> Option<[BallId; 4]> {
        self.node(id).first_child.map(|c| {
            let c = c.get();
            [BallId(c), BallId(c + 1), BallId(c + 2), BallId(c + 3)]
        })
    }

    /// Membership under the half-open convention: `[lo, hi)` in each
    /// coordinate, closed on a side that touches the global upper boundary.
    pub fn contains(&self, id: BallId, p: Point) -> bool {
        let n = self.node(id);
        in_interval(n.center_state, n.radius, p.state)
            && in_interval(n.center_action, n.radius, p.action)
    }

    /// Calls `f` for every leaf whose state interval contains `state`, in
    /// depth-first child order. These are exactly the balls with nonempty
    /// domain at `state`: each split tiles its parent, so only leaves have
    /// nonempty domains.
    pub fn for_each_relevant(&self, state: f64, mut f: impl FnMut(BallId)) {
        self.relevant_rec(0, state, &mut f);
    }

    fn relevant_rec(&self, index: u32, state: f64, f: &mut impl FnMut(BallId)) {
        let node = &self.nodes[index as usize];
        match node.first_child {
            None => f(BallId(index)),
            Some(c) => {
                // The two children in the state half containing `state`,
                // lower action half first (child order 0..3).
                let base = if state < node.center_state { c.get() } else { c.get() + 2 };
                self.relevant_rec(base, state, f);
                self.relevant_rec(base + 1, state, f);
            }
        }
    }

    /// All leaves relevant for `state`. Never empty for `state ∈ [0, 1]`.
    pub fn relevant_balls(&self, state: f64) -> Vec<BallId> {
        let mut out = Vec::new();
        self.for_each_relevant(state, |b| out.push(b));
        out
    }

    /// Appends the relevant leaves for `state` to `out` without clearing it.
    pub fn relevant_balls_into(&self, state: f64, out: &mut Vec<BallId>) {
        self.for_each_relevant(state, |b| out.push(b));
    }

    /// The relevant leaf with maximal Q estimate. Ties go to the first ball
    /// in depth-first traversal order, so the result is deterministic.
    pub fn select_greedy(&self, state: f64) -> BallId {
        let mut best = BallId(0);
        let mut best_q = f64::NEG_INFINITY;
        self.for_each_relevant(state, |b| {
            let q = self.q_estimate(b);
            if q > best_q {
                best_q = q;
                best = b;
            }
        });
        best
    }

    /// `min(horizon, max_{relevant leaves} Q)` — the capped value estimate,
    /// applied uniformly at every step including the final one.
    pub fn value_estimate(&self, state: f64, horizon: u32) -> f64 {
        let mut max_q = f64::NEG_INFINITY;
        self.for_each_relevant(state, |b| max_q = max_q.max(self.q_estimate(b)));
        max_q.min(horizon as f64)
    }

    /// Split threshold: a leaf is due for splitting once
    /// `visits ≥ (d_max / radius)²` (4 for the root, quadrupling per level).
    pub fn should_split(&self, id: BallId) -> bool {
        let n = self.node(id);
        let threshold = (self.d_max / n.radius) * (self.d_max / n.radius);
        f64::from(n.visits) >= threshold
    }

    /// Replaces a leaf by four half-radius quadrants that tile it exactly.
    /// Children inherit the parent's Q estimate and visit count.
    ///
    /// Panics if the ball has already been split.
    pub fn split_ball(&mut self, id: BallId) {
        assert!(self.is_leaf(id), "split_ball called on a non-leaf ball");
        let parent = self.node(id).clone();
        let h = parent.radius / 2.0;
        let first = u32::try_from(self.nodes.len()).expect("partition tree node overflow");
        for (ds, da) in [(-h, -h), (-h, h), (h, -h), (h, h)] {
            self.nodes.push(Node {
                center_state: parent.center_state + ds,
                center_action: parent.center_action + da,
                radius: h,
                q: parent.q,
                visits: parent.visits,
                first_child: None,
            });
        }
        self.nodes[id.index()].first_child = NonZeroU32::new(first);
        self.split_count += 1;
        self.leaf_count += 3;
    }

    /// One record per leaf, in depth-first traversal order.
    pub fn export_geometry(&self) -> Vec<LeafRecord> {
        let mut out = Vec::with_capacity(self.leaf_count as usize);
        self.geometry_rec(0, &mut out);
        out
    }

    fn geometry_rec(&self, index: u32, out: &mut Vec<LeafRecord>) {
        let node = &self.nodes[index as usize];
        match node.first_child {
            None => out.push(LeafRecord {
                center_state: node.center_state,
                center_action: node.center_action,
                radius: node.radius,
                q_estimate: node.q,
                visit_count: node.visits,
            }),
            Some(c) => {
                for i in 0..4 {
                    self.geometry_rec(c.get() + i, out);
                }
            }
        }
    }

    /// Writes the leaf geometry as CSV (12 significant digits).
    pub fn write_geometry_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "center_state,center_action,radius,q,visits")?;
        for leaf in self.export_geometry() {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_g12(leaf.center_state),
                fmt_g12(leaf.center_action),
                fmt_g12(leaf.radius),
                fmt_g12(leaf.q_estimate),
                leaf.visit_count
            )?;
        }
        Ok(())
    }
}

fn in_interval(center: f64, radius: f64, v: f64) -> bool {
    let lo = center - radius;
    let hi = center + radius;
    if v < lo {
        return false;
    }
    // Closed on the side touching the global upper boundary.
    if hi == 1.0 {
        v <= hi
    } else {
        v < hi
    }
}

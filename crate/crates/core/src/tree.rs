//! The balanced binary merge tree over per-element generators.
//!
//! Leaves are [`MultinomialGenerator`]s, one per element, in formula order.
//! The leaf list is split in half recursively (the left half takes the extra
//! leaf when the count is odd), so leaf depths differ by at most one. Every
//! inner node is a
//! [`PairwiseSelector`], so the root emits the whole compound's isotopologues
//! as a descending layer-ordered stream.

use thiserror::Error;

use crate::formula::Composition;
use crate::isotope_data::IsotopeTable;
use crate::loh::{partition_top_by, LayerSchedule};
use crate::multinomial::{num_tuples, MultinomialConfig, MultinomialGenerator};
use crate::pairwise::{LayerStream, PairwiseSelector, SelectorStats};
use crate::peak::Peak;

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("layer growth rate must be a finite number >= 1, got {0}")]
    InvalidAlpha(f64),
    #[error("empty composition")]
    Empty,
}

pub enum TreeNode {
    Leaf {
        symbol: String,
        generator: Box<MultinomialGenerator>,
    },
    Inner(Box<PairwiseSelector<TreeNode, TreeNode>>),
}

pub fn build_tree(
    comp: &Composition,
    table: &IsotopeTable,
    alpha: f64,
) -> Result<TreeNode, BuildError> {
    let schedule = LayerSchedule::new(alpha).map_err(|e| BuildError::InvalidAlpha(e.0))?;
    if comp.is_empty() {
        return Err(BuildError::Empty);
    }
    let leaves = comp
        .entries()
        .iter()
        .map(|(symbol, n)| {
            let isotopes = table
                .get(symbol)
                .ok_or_else(|| BuildError::UnknownElement(symbol.clone()))?;
            Ok(TreeNode::Leaf {
                symbol: symbol.clone(),
                generator: Box::new(MultinomialGenerator::new(
                    MultinomialConfig::from_isotopes(*n, isotopes),
                    schedule,
                )),
            })
        })
        .collect::<Result<Vec<_>, BuildError>>()?;

    Ok(join(leaves, schedule))
}

fn join(mut nodes: Vec<TreeNode>, schedule: LayerSchedule) -> TreeNode {
    if nodes.len() == 1 {
        return nodes.pop().unwrap();
    }
    let right = nodes.split_off(nodes.len().div_ceil(2));
    TreeNode::Inner(Box::new(PairwiseSelector::new(
        join(nodes, schedule),
        join(right, schedule),
        schedule,
    )))
}

impl LayerStream for TreeNode {
    fn next_layer(&mut self) -> Vec<Peak> {
        match self {
            TreeNode::Leaf { generator, .. } => generator.next_layer(),
            TreeNode::Inner(sel) => sel.next_layer(),
        }
    }
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn children(&self) -> Option<(&TreeNode, &TreeNode)> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Inner(sel) => Some(sel.children()),
        }
    }

    /// Leaf symbols in left-to-right order.
    pub fn leaf_symbols(&self) -> Vec<&str> {
        match self {
            TreeNode::Leaf { symbol, .. } => vec![symbol.as_str()],
            TreeNode::Inner(sel) => {
                let (l, r) = sel.children();
                let mut out = l.leaf_symbols();
                out.extend(r.leaf_symbols());
                out
            }
        }
    }

    /// Depth of every leaf, left to right; the root is at depth 0.
    pub fn leaf_depths(&self) -> Vec<usize> {
        match self.children() {
            None => vec![0],
            Some((l, r)) => l
                .leaf_depths()
                .into_iter()
                .chain(r.leaf_depths())
                .map(|d| d + 1)
                .collect(),
        }
    }

    /// Shape as a string, e.g. `((Au,Ca),(Ga,Pd))`.
    pub fn shape(&self) -> String {
        match self {
            TreeNode::Leaf { symbol, .. } => symbol.clone(),
            TreeNode::Inner(sel) => {
                let (l, r) = sel.children();
                format!("({},{})", l.shape(), r.shape())
            }
        }
    }

    /// Number of distinct isotopologues, saturating at `i64::MAX`.
    pub fn total_isotopologues(&self) -> u64 {
        const CAP: u64 = i64::MAX as u64;
        match self {
            TreeNode::Leaf { generator, .. } => {
                let c = generator.config();
                num_tuples(c.n(), c.num_isotopes()).min(CAP)
            }
            TreeNode::Inner(sel) => {
                let (l, r) = sel.children();
                l.total_isotopologues()
                    .saturating_mul(r.total_isotopologues())
                    .min(CAP)
            }
        }
    }

    /// Tuples emitted by all leaves.
    pub fn leaf_tuples_emitted(&self) -> u64 {
        match self {
            TreeNode::Leaf { generator, .. } => generator.emitted(),
            TreeNode::Inner(sel) => {
                let (l, r) = sel.children();
                l.leaf_tuples_emitted() + r.leaf_tuples_emitted()
            }
        }
    }

    /// Upper bound on peaks held at once across the tree: each selector's
    /// largest candidate buffer plus its stored child layers, plus each leaf's
    /// largest proposal heap.
    pub fn peak_resident(&self) -> usize {
        match self {
            TreeNode::Leaf { generator, .. } => generator.max_heap_len(),
            TreeNode::Inner(sel) => {
                let (l, r) = sel.children();
                sel.stats().max_buffer + (sel.resident() - sel.buffer_len())
                    + l.peak_resident()
                    + r.peak_resident()
            }
        }
    }

    /// Selector statistics, root first, depth-first.
    pub fn selector_stats(&self) -> Vec<&SelectorStats> {
        match self {
            TreeNode::Leaf { .. } => Vec::new(),
            TreeNode::Inner(sel) => {
                let (l, r) = sel.children();
                let mut out = vec![sel.stats()];
                out.extend(l.selector_stats());
                out.extend(r.selector_stats());
                out
            }
        }
    }

    /// Total child-layer pulls made by every selector in the tree.
    pub fn total_pulls(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Inner(sel) => {
                let (l, r) = sel.children();
                let (a, b) = sel.child_layer_counts();
                a + b + l.total_pulls() + r.total_pulls()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SelectionRequest {
    TopK(u64),
    /// Smallest top set whose probabilities sum to at least `p`, `0 < p < 1`.
    CumulativeTarget(f64),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Selection {
    /// Peaks in layer order; unordered within a layer.
    pub peaks: Vec<Peak>,
    /// The stream ran out before the request was met.
    pub exhausted: bool,
}

/// Pulls layers until `k` peaks are collected. The layer that crosses `k` is
/// trimmed to its best peaks.
pub fn select_top_k<S: LayerStream>(stream: &mut S, k: u64) -> Selection {
    let mut peaks: Vec<Peak> = Vec::new();
    let k = usize::try_from(k).unwrap_or(usize::MAX);
    while peaks.len() < k {
        let mut layer = stream.next_layer();
        if layer.is_empty() {
            return Selection {
                peaks,
                exhausted: true,
            };
        }
        let need = k - peaks.len();
        if layer.len() > need {
            let split = partition_top_by(&mut layer, need, Peak::cmp_logp);
            peaks.extend_from_slice(&layer[split..]);
        } else {
            peaks.extend(layer);
        }
    }
    Selection {
        peaks,
        exhausted: false,
    }
}

/// Pulls layers until the accumulated probability reaches `p`. The layer that
/// crosses `p` is sorted and cut at the shortest prefix that reaches it.
pub fn select_until_cumulative<S: LayerStream>(stream: &mut S, p: f64) -> Selection {
    let mut peaks: Vec<Peak> = Vec::new();
    let mut total = 0.0f64;
    loop {
        let mut layer = stream.next_layer();
        if layer.is_empty() {
            return Selection {
                peaks,
                exhausted: true,
            };
        }
        let layer_total: f64 = layer.iter().map(Peak::prob).sum();
        if total + layer_total < p {
            total += layer_total;
            peaks.extend(layer);
            continue;
        }
        layer.sort_by(|a, b| b.cmp_logp(a));
        for peak in layer {
            total += peak.prob();
            peaks.push(peak);
            if total >= p {
                break;
            }
        }
        // Rounding in the layer sum can leave the prefix just short of `p`;
        // in that case keep pulling.
        if total >= p {
            return Selection {
                peaks,
                exhausted: false,
            };
        }
    }
}

pub fn select<S: LayerStream>(stream: &mut S, request: SelectionRequest) -> Selection {
    match request {
        SelectionRequest::TopK(k) => select_top_k(stream, k),
        SelectionRequest::CumulativeTarget(p) => select_until_cumulative(stream, p),
    }
}

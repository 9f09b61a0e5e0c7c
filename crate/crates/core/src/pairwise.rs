//! Online top-k selection on X+Y over two layer-ordered peak streams.
//!
//! The selector pulls whole layers from its two children, which are
//! themselves descending layer-ordered streams. The Cartesian product of
//! layer `u` of X and layer `v` of Y is a *layer product* `(u, v)`; its best
//! corner is `max X_u + max Y_v` and its worst corner `min X_u + min Y_v`.
//!
//! Layer products sit in a max-heap. A product first enters keyed by its best
//! corner; when that pops, all `|X_u| * |Y_v|` sums are materialized into a
//! candidate buffer and the product re-enters keyed by its worst corner. When
//! the worst corner pops, every value still outside the buffer is no better
//! than it, so those `|X_u| * |Y_v|` candidates are certified. Once the
//! certified count reaches the number of peaks requested so far, the next
//! output layer is rank-selected from the buffer.
//!
//! Products are discovered along a frontier: `(u + 1, 1)` after `(u, 1)`, and
//! `(u, v + 1)` after `(u, v)`, which reaches every cell once. A product that
//! needs a child layer not yet generated is keyed by an upper bound (the
//! previous layer's minimum bounds every value in the next) and the child is
//! asked for that layer only when the product reaches the top of the heap.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::loh::{partition_top_by, LayerCursor, LayerSchedule};
use crate::peak::Peak;

/// A source of descending layer-ordered peaks. An empty layer means the
/// stream is exhausted; later calls keep returning empty layers.
pub trait LayerStream {
    fn next_layer(&mut self) -> Vec<Peak>;
}

/// Replays fixed layers. Useful for feeding hand-built streams to a selector.
#[derive(Clone, Debug, Default)]
pub struct VecStream {
    layers: std::collections::VecDeque<Vec<Peak>>,
    pulls: usize,
}

impl VecStream {
    pub fn new(layers: Vec<Vec<Peak>>) -> Self {
        VecStream {
            layers: layers.into_iter().filter(|l| !l.is_empty()).collect(),
            pulls: 0,
        }
    }

    /// Builds a stream of the given keys (unit masses) laid out by `schedule`.
    pub fn from_logps(logps: &[f64], schedule: LayerSchedule) -> Self {
        let mut sorted = logps.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut layers = Vec::new();
        let mut start = 0;
        for end in schedule.boundaries(sorted.len()) {
            layers.push(sorted[start..end].iter().map(|&lp| Peak::new(1.0, lp)).collect());
            start = end;
        }
        VecStream::new(layers)
    }

    pub fn pulls(&self) -> usize {
        self.pulls
    }
}

impl LayerStream for VecStream {
    fn next_layer(&mut self) -> Vec<Peak> {
        self.pulls += 1;
        self.layers.pop_front().unwrap_or_default()
    }
}

/// Layers received from one child, stored contiguously.
#[derive(Debug, Default)]
struct ChildLayers {
    peaks: Vec<Peak>,
    /// `ends[t - 1]` is the end offset of layer `t`.
    ends: Vec<usize>,
    max: Vec<f64>,
    min: Vec<f64>,
    exhausted: bool,
}

impl ChildLayers {
    fn num_layers(&self) -> usize {
        self.ends.len()
    }

    fn layer(&self, t: usize) -> &[Peak] {
        let start = if t == 1 { 0 } else { self.ends[t - 2] };
        &self.peaks[start..self.ends[t - 1]]
    }

    fn max(&self, t: usize) -> f64 {
        self.max[t - 1]
    }

    fn min(&self, t: usize) -> f64 {
        self.min[t - 1]
    }

    /// Pulls one more layer. Returns false once the child is exhausted.
    fn pull<S: LayerStream>(&mut self, source: &mut S) -> bool {
        if self.exhausted {
            return false;
        }
        let layer = source.next_layer();
        if layer.is_empty() {
            self.exhausted = true;
            return false;
        }
        let (lo, hi) = layer
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.logp), hi.max(p.logp))
            });
        self.peaks.extend_from_slice(&layer);
        self.ends.push(self.peaks.len());
        self.max.push(hi);
        self.min.push(lo);
        true
    }
}

/// State of a layer product in the heap. On equal keys, later phases pop
/// first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    /// One child layer has not been generated; keyed by an upper bound.
    Pending,
    /// Keyed by the best corner; not yet materialized.
    Best,
    /// Materialized; keyed by the worst corner.
    Worst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PopEvent {
    pub u: u32,
    pub v: u32,
    pub phase: Phase,
}

#[derive(Clone, Copy, Debug)]
struct Product {
    key: f64,
    phase: Phase,
    u: u32,
    v: u32,
}

impl PartialEq for Product {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Product {}

impl PartialOrd for Product {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Product {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then(self.phase.cmp(&other.phase))
            .then_with(|| other.u.cmp(&self.u))
            .then_with(|| other.v.cmp(&self.v))
    }
}

/// Which child a layer pull went to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}

#[derive(Clone, Debug, Default)]
pub struct SelectorStats {
    /// Heap pops of any phase.
    pub pops: u64,
    /// Candidates written to the buffer.
    pub materialized: u64,
    /// Largest candidate buffer length seen.
    pub max_buffer: usize,
    /// Layer pulls after construction, in order.
    pub pulls: Vec<Side>,
}

pub struct PairwiseSelector<X, Y> {
    x: X,
    y: Y,
    xs: ChildLayers,
    ys: ChildLayers,
    heap: BinaryHeap<Product>,
    buffer: Vec<Peak>,
    /// Total size of products whose worst corner has popped.
    guaranteed: u64,
    emitted: u64,
    schedule: LayerSchedule,
    cursor: LayerCursor,
    stats: SelectorStats,
    trace: Option<Vec<PopEvent>>,
}

impl<X: LayerStream, Y: LayerStream> PairwiseSelector<X, Y> {
    /// Pulls the first layer of each child and seeds the heap with `(1, 1)`.
    pub fn new(mut x: X, mut y: Y, schedule: LayerSchedule) -> Self {
        let mut xs = ChildLayers::default();
        let mut ys = ChildLayers::default();
        let has_x = xs.pull(&mut x);
        let has_y = ys.pull(&mut y);
        let mut heap = BinaryHeap::new();
        if has_x && has_y {
            heap.push(Product {
                key: xs.max(1) + ys.max(1),
                phase: Phase::Best,
                u: 1,
                v: 1,
            });
        }
        PairwiseSelector {
            x,
            y,
            xs,
            ys,
            heap,
            buffer: Vec::new(),
            guaranteed: 0,
            emitted: 0,
            schedule,
            cursor: LayerCursor::default(),
            stats: SelectorStats::default(),
            trace: None,
        }
    }

    /// Starts recording every heap pop.
    pub fn record_pops(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn pop_log(&self) -> &[PopEvent] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn stats(&self) -> &SelectorStats {
        &self.stats
    }

    pub fn children(&self) -> (&X, &Y) {
        (&self.x, &self.y)
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn guaranteed(&self) -> u64 {
        self.guaranteed
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    /// Peaks currently held: candidates plus stored child layers.
    pub fn resident(&self) -> usize {
        self.buffer.len() + self.xs.peaks.len() + self.ys.peaks.len()
    }

    /// Layers received so far from each child.
    pub fn child_layer_counts(&self) -> (usize, usize) {
        (self.xs.num_layers(), self.ys.num_layers())
    }

    /// Pending heap entries as `(u, v, phase)`.
    pub fn heap_entries(&self) -> Vec<(u32, u32, Phase)> {
        self.heap.iter().map(|p| (p.u, p.v, p.phase)).collect()
    }

    /// True once no further peaks can be produced.
    pub fn is_exhausted(&self) -> bool {
        self.heap.is_empty() && self.buffer.is_empty()
    }

    fn push_product(&mut self, u: usize, v: usize) {
        let (has_x, has_y) = (u <= self.xs.num_layers(), v <= self.ys.num_layers());
        let (key, phase) = if has_x && has_y {
            (self.xs.max(u) + self.ys.max(v), Phase::Best)
        } else if !has_x {
            if self.xs.exhausted {
                return;
            }
            (self.xs.min(u - 1) + self.ys.max(v), Phase::Pending)
        } else {
            if self.ys.exhausted {
                return;
            }
            (self.xs.max(u) + self.ys.min(v - 1), Phase::Pending)
        };
        self.heap.push(Product {
            key,
            phase,
            u: u as u32,
            v: v as u32,
        });
    }

    /// Pops one layer product and processes it. Returns false if the heap was
    /// empty.
    pub fn advance(&mut self) -> bool {
        let Some(product) = self.heap.pop() else {
            return false;
        };
        self.stats.pops += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(PopEvent {
                u: product.u,
                v: product.v,
                phase: product.phase,
            });
        }
        let (u, v) = (product.u as usize, product.v as usize);
        match product.phase {
            Phase::Pending => {
                let available = if u > self.xs.num_layers() {
                    self.stats.pulls.push(Side::X);
                    self.xs.pull(&mut self.x)
                } else if v > self.ys.num_layers() {
                    self.stats.pulls.push(Side::Y);
                    self.ys.pull(&mut self.y)
                } else {
                    true
                };
                if available {
                    self.push_product(u, v);
                }
            }
            Phase::Best => {
                let (xl, yl) = (self.xs.layer(u), self.ys.layer(v));
                self.buffer.reserve(xl.len() * yl.len());
                for a in xl {
                    self.buffer.extend(yl.iter().map(|b| a.combine(b)));
                }
                self.stats.materialized += (xl.len() * yl.len()) as u64;
                self.stats.max_buffer = self.stats.max_buffer.max(self.buffer.len());
                self.heap.push(Product {
                    key: self.xs.min(u) + self.ys.min(v),
                    phase: Phase::Worst,
                    u: product.u,
                    v: product.v,
                });
                if v == 1 {
                    self.push_product(u + 1, 1);
                }
                self.push_product(u, v + 1);
            }
            Phase::Worst => {
                self.guaranteed += (self.xs.layer(u).len() * self.ys.layer(v).len()) as u64;
            }
        }
        true
    }

    /// Returns the next `s` best sums not yet returned (fewer once the product
    /// space runs out), in no particular order.
    pub fn take(&mut self, s: usize) -> Vec<Peak> {
        let target = self.emitted + s as u64;
        while self.guaranteed < target && self.advance() {}
        let split = partition_top_by(&mut self.buffer, s, Peak::cmp_logp);
        let out = self.buffer.split_off(split);
        self.emitted += out.len() as u64;
        out
    }
}

impl<X: LayerStream, Y: LayerStream> LayerStream for PairwiseSelector<X, Y> {
    fn next_layer(&mut self) -> Vec<Peak> {
        if self.is_exhausted() {
            return Vec::new();
        }
        let s = self.cursor.advance(&self.schedule);
        self.take(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sched(alpha: f64) -> LayerSchedule {
        LayerSchedule::new(alpha).unwrap()
    }

    fn stream(layers: &[&[f64]]) -> VecStream {
        VecStream::new(
            layers
                .iter()
                .map(|l| l.iter().map(|&lp| Peak::new(1.0, lp)).collect())
                .collect(),
        )
    }

    fn drain<S: LayerStream>(s: &mut S) -> Vec<Vec<Peak>> {
        std::iter::from_fn(|| Some(s.next_layer()).filter(|l| !l.is_empty())).collect()
    }

    fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    fn brute_force(x: &[f64], y: &[f64]) -> Vec<f64> {
        sorted_desc(x.iter().flat_map(|a| y.iter().map(move |b| a + b)).collect())
    }

    #[test]
    fn seeds_origin() {
        let sel = PairwiseSelector::new(stream(&[&[-0.5]]), stream(&[&[-0.25]]), sched(1.05));
        assert_eq!(sel.heap_entries(), vec![(1, 1, Phase::Best)]);
        assert_eq!(sel.heap.peek().unwrap().key, -0.75);
    }

    #[test]
    fn empty_child_yields_nothing() {
        let mut sel = PairwiseSelector::new(stream(&[]), stream(&[&[0.0]]), sched(1.05));
        assert!(sel.next_layer().is_empty());
        assert!(sel.next_layer().is_empty());
    }

    #[test]
    fn first_advance_expands_origin() {
        let mut sel = PairwiseSelector::new(
            stream(&[&[10.0], &[9.0, 8.0]]),
            stream(&[&[7.0], &[6.0, 5.0]]),
            sched(2.0),
        );
        sel.advance();
        assert_eq!(sel.buffer_len(), 1);
        let mut entries = sel.heap_entries();
        entries.sort();
        assert_eq!(
            entries,
            vec![(1, 1, Phase::Worst), (1, 2, Phase::Pending), (2, 1, Phase::Pending)]
        );
        // Worst corner of (1, 1) is 17, above every pending bound.
        sel.advance();
        assert_eq!(sel.guaranteed(), 1);
    }

    #[test]
    fn single_peaks() {
        let mut sel = PairwiseSelector::new(
            VecStream::new(vec![vec![Peak::new(1.0, -1.0)]]),
            VecStream::new(vec![vec![Peak::new(1.0, -1.0)]]),
            sched(1.05),
        );
        assert_eq!(sel.next_layer(), vec![Peak::new(2.0, -2.0)]);
        assert!(sel.next_layer().is_empty());
    }

    #[test]
    fn small_prefixes_match_brute_force() {
        let x = [0.0, -1.0, -2.0];
        let y = [0.0, -3.0];
        for alpha in [1.0, 1.05, 1.5, 2.0] {
            let mut sel = PairwiseSelector::new(
                VecStream::from_logps(&x, sched(alpha)),
                VecStream::from_logps(&y, sched(alpha)),
                sched(alpha),
            );
            let mut got = Vec::new();
            for layer in drain(&mut sel) {
                got.extend(layer.iter().map(|p| p.logp));
                let prefix = sorted_desc(got.clone());
                assert_eq!(prefix, [0.0, -1.0, -2.0, -3.0, -4.0, -5.0][..got.len()]);
            }
            assert_eq!(got.len(), 6);
        }
    }

    #[test]
    fn frontier_never_extends_x_off_the_first_column() {
        let x: Vec<f64> = (0..40).map(|i| -(i as f64) * 0.3).collect();
        let y: Vec<f64> = (0..40).map(|i| -(i as f64) * 0.7).collect();
        let mut sel = PairwiseSelector::new(
            VecStream::from_logps(&x, sched(1.2)),
            VecStream::from_logps(&y, sched(1.2)),
            sched(1.2),
        );
        sel.record_pops();
        drain(&mut sel);
        let best: Vec<(u32, u32)> = sel
            .pop_log()
            .iter()
            .filter(|e| e.phase == Phase::Best)
            .map(|e| (e.u, e.v))
            .collect();
        let unique: std::collections::HashSet<_> = best.iter().collect();
        assert_eq!(unique.len(), best.len(), "a product was materialized twice");
        let (nx, ny) = sel.child_layer_counts();
        assert_eq!(best.len(), nx * ny);
    }

    #[test]
    fn one_child_per_pull() {
        let x: Vec<f64> = (0..300).map(|i| -(i as f64).sqrt()).collect();
        let y: Vec<f64> = (0..300).map(|i| -(i as f64) * 0.1).collect();
        let mut sel = PairwiseSelector::new(
            VecStream::from_logps(&x, sched(1.05)),
            VecStream::from_logps(&y, sched(1.05)),
            sched(1.05),
        );
        for _ in 0..20 {
            let before = sel.child_layer_counts();
            let pulls_before = sel.stats().pulls.len();
            while sel.stats().pulls.len() == pulls_before && sel.advance() {}
            let after = sel.child_layer_counts();
            let grew = (after.0 - before.0) + (after.1 - before.1);
            assert!(grew <= 1);
        }
    }

    fn layered_keys() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        let keys = prop::collection::vec((-40i32..=0).prop_map(|k| k as f64 * 0.25), 1..=200);
        (keys.clone(), keys, prop::sample::select(vec![1.0, 1.05, 1.3, 2.0, 3.5]))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]

        #[test]
        fn every_prefix_is_top_k((x, y, alpha) in layered_keys()) {
            let expected = brute_force(&x, &y);
            let mut sel = PairwiseSelector::new(
                VecStream::from_logps(&x, sched(alpha)),
                VecStream::from_logps(&y, sched(alpha)),
                sched(alpha),
            );
            let mut got = Vec::new();
            let mut prev_min = f64::INFINITY;
            for layer in drain(&mut sel) {
                let hi = layer.iter().map(|p| p.logp).fold(f64::NEG_INFINITY, f64::max);
                let lo = layer.iter().map(|p| p.logp).fold(f64::INFINITY, f64::min);
                prop_assert!(hi <= prev_min);
                prev_min = lo;
                got.extend(layer.iter().map(|p| p.logp));
                prop_assert_eq!(sorted_desc(got.clone()), expected[..got.len()].to_vec());
            }
            prop_assert_eq!(got.len(), expected.len());
            prop_assert_eq!(sel.stats().materialized as usize, expected.len());
        }

        #[test]
        fn sequential_takes_pop_the_same_products(
            (x, y, alpha) in layered_keys(),
            k1 in 1usize..300,
            k2 in 1usize..300,
        ) {
            let make = || {
                let mut s = PairwiseSelector::new(
                    VecStream::from_logps(&x, sched(alpha)),
                    VecStream::from_logps(&y, sched(alpha)),
                    sched(alpha),
                );
                s.record_pops();
                s
            };
            let mut one_shot = make();
            let a = one_shot.take(k1 + k2);
            let mut split = make();
            let mut b = split.take(k1);
            b.extend(split.take(k2));
            prop_assert_eq!(one_shot.pop_log(), split.pop_log());
            prop_assert_eq!(
                sorted_desc(a.iter().map(|p| p.logp).collect()),
                sorted_desc(b.iter().map(|p| p.logp).collect())
            );
        }
    }
}

//! Layer-ordered heaps.
//!
//! A layer-ordered heap (LOH) is a contiguous array split into layers whose
//! sizes grow geometrically with rate `alpha`. Here the order is descending:
//! every value in layer `t` is at least every value in layer `t + 1`, so the
//! first layer holds the maximum. Within a layer there is no order.
//!
//! Layer `t` (1-based) has size `floor(alpha^(t - 1))`, so the first layer
//! always holds exactly one value, sizes never drop below one, and
//! `alpha = 1` gives unit layers (a full sort).

use std::cmp::Ordering;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("layer growth rate must be a finite number >= 1, got {0}")]
pub struct InvalidAlpha(pub f64);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerSchedule {
    alpha: f64,
}

impl LayerSchedule {
    pub fn new(alpha: f64) -> Result<Self, InvalidAlpha> {
        if alpha.is_finite() && alpha >= 1.0 {
            Ok(LayerSchedule { alpha })
        } else {
            Err(InvalidAlpha(alpha))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `floor(alpha^(t - 1))`, saturating at `usize::MAX`.
    fn size(&self, t: usize) -> usize {
        let v = self.alpha.powf((t - 1) as f64).floor();
        if v >= usize::MAX as f64 {
            usize::MAX
        } else {
            (v as usize).max(1)
        }
    }

    /// End offset of layer `t`; `cumulative(0) = 0`.
    pub fn cumulative(&self, t: usize) -> usize {
        let mut cursor = LayerCursor::default();
        for _ in 0..t {
            cursor.advance(self);
        }
        cursor.cumulative
    }

    /// Size of layer `t >= 1`.
    pub fn layer_size(&self, t: usize) -> usize {
        assert!(t >= 1, "layers are numbered from 1");
        self.cumulative(t) - self.cumulative(t - 1)
    }

    /// End offsets of the layers of an array of length `n`; the last layer may
    /// be short.
    pub fn boundaries(&self, n: usize) -> Vec<usize> {
        let mut ends = Vec::new();
        let mut cursor = LayerCursor::default();
        while cursor.cumulative < n {
            cursor.advance(self);
            ends.push(cursor.cumulative.min(n));
        }
        ends
    }
}

impl Default for LayerSchedule {
    fn default() -> Self {
        LayerSchedule { alpha: 1.05 }
    }
}

/// Walks a schedule one layer at a time without recomputing from layer 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LayerCursor {
    layer: usize,
    cumulative: usize,
}

impl LayerCursor {
    /// Moves to the next layer and returns its size.
    pub fn advance(&mut self, schedule: &LayerSchedule) -> usize {
        self.layer += 1;
        let size = schedule.size(self.layer);
        self.cumulative = self.cumulative.saturating_add(size);
        size
    }

    /// Number of layers advanced so far.
    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn cumulative(&self) -> usize {
        self.cumulative
    }
}

/// Partially reorders `values` so that its last `s` elements are the `s`
/// greatest under `cmp` (in no particular order). Returns the split point
/// `values.len() - s`. Expected linear time.
pub fn partition_top_by<T, F>(values: &mut [T], s: usize, mut cmp: F) -> usize
where
    F: FnMut(&T, &T) -> Ordering,
{
    let n = values.len();
    let s = s.min(n);
    if s == 0 {
        return n;
    }
    let split = n - s;
    if split > 0 {
        values.select_nth_unstable_by(split, &mut cmp);
    }
    split
}

/// An array arranged as a descending layer-ordered heap.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredValues<T> {
    values: Vec<T>,
    ends: Vec<usize>,
    schedule: LayerSchedule,
}

impl<T> LayeredValues<T> {
    /// Wraps an already-arranged array without checking it; see [`verify_loh`].
    pub fn from_parts(values: Vec<T>, ends: Vec<usize>, schedule: LayerSchedule) -> Self {
        LayeredValues {
            values,
            ends,
            schedule,
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn num_layers(&self) -> usize {
        self.ends.len()
    }

    /// Layer `t`, numbered from 1.
    pub fn layer(&self, t: usize) -> &[T] {
        let start = if t == 1 { 0 } else { self.ends[t - 2] };
        &self.values[start..self.ends[t - 1]]
    }

    pub fn layers(&self) -> impl Iterator<Item = &[T]> {
        (1..=self.ends.len()).map(move |t| self.layer(t))
    }

    pub fn schedule(&self) -> LayerSchedule {
        self.schedule
    }
}

/// Arranges `values` into a descending LOH under `cmp`.
///
/// Layers are peeled off from the back: the array is partitioned at the start
/// of its last layer, then that prefix at the start of the layer before, and
/// so on. Each step is a linear-time selection on a prefix whose length
/// shrinks geometrically.
pub fn lohify_by<T, F>(mut values: Vec<T>, schedule: LayerSchedule, mut cmp: F) -> LayeredValues<T>
where
    F: FnMut(&T, &T) -> Ordering,
{
    let ends = schedule.boundaries(values.len());
    if schedule.alpha() == 1.0 {
        values.sort_unstable_by(|a, b| cmp(b, a));
    } else {
        for w in ends.windows(2).rev() {
            let (start, end) = (w[0], w[1]);
            // Move the `start` largest of values[..end] to the front.
            let prefix = &mut values[..end];
            prefix.select_nth_unstable_by(start - 1, |a, b| cmp(b, a));
        }
    }
    LayeredValues {
        values,
        ends,
        schedule,
    }
}

pub fn lohify<T: Ord>(values: Vec<T>, schedule: LayerSchedule) -> LayeredValues<T> {
    lohify_by(values, schedule, T::cmp)
}

/// True iff layer boundaries follow the schedule and every layer's minimum is
/// at least the next layer's maximum.
pub fn verify_loh_by<T, F>(lv: &LayeredValues<T>, mut cmp: F) -> bool
where
    F: FnMut(&T, &T) -> Ordering,
{
    if lv.ends != lv.schedule.boundaries(lv.values.len()) {
        return false;
    }
    let mut prev_min: Option<&T> = None;
    for layer in lv.layers() {
        let max = layer.iter().max_by(|a, b| cmp(a, b));
        let min = layer.iter().min_by(|a, b| cmp(a, b));
        if let (Some(prev), Some(max)) = (prev_min, max) {
            if cmp(prev, max) == Ordering::Less {
                return false;
            }
        }
        prev_min = min;
    }
    true
}

pub fn verify_loh<T: Ord>(lv: &LayeredValues<T>) -> bool {
    verify_loh_by(lv, T::cmp)
}

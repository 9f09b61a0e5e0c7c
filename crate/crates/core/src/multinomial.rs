//! Subisotopologue enumeration for a single element.
//!
//! The isotope counts of `n` atoms of an element with isotope abundances
//! `p_1..p_m` follow a multinomial distribution. [`MultinomialGenerator`]
//! emits every index tuple (weak composition of `n` into `m` parts) exactly
//! once, in nonincreasing probability, without a visited set:
//!
//! 1. Start at the mode.
//! 2. Pop the most probable tuple from a max-heap. It carries markers
//!    `(inc, dec)`: the last entry that was incremented and the last that was
//!    decremented on the way from the mode.
//! 3. Propose `tuple + e_i - e_j` for every `i >= inc`, `j >= dec`, `i != j`,
//!    where entry `i` is not below its mode value and entry `j` is not above
//!    it (and is nonzero). The proposal carries markers `(i, j)`.
//!
//! Every tuple has exactly one such path from the mode: its increments and
//! decrements, each sorted by index. Each move leads away from the mode, which
//! never increases the probability, so the heap pops in order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use smallvec::SmallVec;

use crate::isotope_data::Isotope;
use crate::loh::{LayerCursor, LayerSchedule};
use crate::pairwise::LayerStream;
use crate::peak::Peak;

/// Isotope counts of one subisotopologue.
pub type IndexTuple = SmallVec<[u32; 10]>;

/// `ln(i!)` for `i` in `0..=n`, accumulated in ascending order.
pub fn log_factorial_table(n: u32) -> Vec<f64> {
    let mut table = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0f64;
    table.push(acc);
    for i in 1..=n {
        acc += (i as f64).ln();
        table.push(acc);
    }
    table
}

#[derive(Clone, Debug)]
pub struct MultinomialConfig {
    n: u32,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    masses: Vec<f64>,
    log_factorial: Vec<f64>,
}

impl MultinomialConfig {
    /// `probs` must be positive and sum to 1; `masses` has the same length.
    pub fn new(n: u32, probs: Vec<f64>, masses: Vec<f64>) -> Self {
        assert!(!probs.is_empty(), "an element needs at least one isotope");
        assert_eq!(probs.len(), masses.len());
        assert!(probs.iter().all(|&p| p > 0.0), "abundances must be positive");
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        MultinomialConfig {
            n,
            probs,
            log_probs,
            masses,
            log_factorial: log_factorial_table(n),
        }
    }

    pub fn from_isotopes(n: u32, isotopes: &[Isotope]) -> Self {
        Self::new(
            n,
            isotopes.iter().map(|i| i.abundance).collect(),
            isotopes.iter().map(|i| i.mass).collect(),
        )
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn num_isotopes(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// `ln(n!) - sum ln(x_i!) + sum x_i ln(p_i)`, summed in ascending `i`.
    pub fn log_pmf(&self, tuple: &[u32]) -> f64 {
        debug_assert_eq!(tuple.len(), self.probs.len());
        let mut acc = self.log_factorial[self.n as usize];
        for &x in tuple {
            acc -= self.log_factorial[x as usize];
        }
        for (&x, &lp) in tuple.iter().zip(&self.log_probs) {
            acc += x as f64 * lp;
        }
        acc
    }

    pub fn mass(&self, tuple: &[u32]) -> f64 {
        tuple
            .iter()
            .zip(&self.masses)
            .map(|(&x, &m)| x as f64 * m)
            .sum()
    }

    /// A maximum of the pmf: binomial modes as a seed, repaired to sum to `n`,
    /// then hill-climbed over single (+1, -1) moves on strict improvement.
    pub fn find_mode(&self) -> IndexTuple {
        let n = self.n;
        let m = self.probs.len();
        let mut x: IndexTuple = self
            .probs
            .iter()
            .map(|&p| (((n as f64 + 1.0) * p).floor() as u64).min(n as u64) as u32)
            .collect();
        let mut sum: u64 = x.iter().map(|&v| v as u64).sum();

        // Change in log-pmf (n held fixed) from moving a single entry.
        let inc_gain = |x: &[u32], i: usize| self.log_probs[i] - ((x[i] + 1) as f64).ln();
        let dec_gain = |x: &[u32], i: usize| (x[i] as f64).ln() - self.log_probs[i];

        while sum < n as u64 {
            let i = (0..m)
                .max_by(|&a, &b| inc_gain(&x, a).total_cmp(&inc_gain(&x, b)))
                .unwrap();
            x[i] += 1;
            sum += 1;
        }
        while sum > n as u64 {
            let i = (0..m)
                .filter(|&i| x[i] > 0)
                .max_by(|&a, &b| dec_gain(&x, a).total_cmp(&dec_gain(&x, b)))
                .unwrap();
            x[i] -= 1;
            sum -= 1;
        }

        let mut current = self.log_pmf(&x);
        loop {
            let mut best: Option<(f64, usize, usize)> = None;
            for j in 0..m {
                if x[j] == 0 {
                    continue;
                }
                for i in 0..m {
                    if i == j {
                        continue;
                    }
                    x[i] += 1;
                    x[j] -= 1;
                    let value = self.log_pmf(&x);
                    x[i] -= 1;
                    x[j] += 1;
                    if value > best.map_or(current, |b| b.0) {
                        best = Some((value, i, j));
                    }
                }
            }
            match best {
                Some((value, i, j)) => {
                    x[i] += 1;
                    x[j] -= 1;
                    current = value;
                }
                None => return x,
            }
        }
    }
}

/// Number of weak compositions of `n` into `m` parts, `C(n + m - 1, m - 1)`,
/// saturating at `u64::MAX`.
pub fn num_tuples(n: u32, m: usize) -> u64 {
    let k = (m as u64).saturating_sub(1);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // C(n + i, i) = C(n + i - 1, i - 1) * (n + i) / i, exact at each step.
        acc = acc * (n as u128 + i as u128) / i as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

#[derive(Debug)]
struct Candidate {
    logp: f64,
    tuple: IndexTuple,
    inc: u8,
    dec: u8,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Max-heap on logp; equal logp pops the lexicographically smaller tuple.
    fn cmp(&self, other: &Self) -> Ordering {
        self.logp
            .total_cmp(&other.logp)
            .then_with(|| other.tuple.cmp(&self.tuple))
    }
}

/// Emits the subisotopologues of one element in nonincreasing probability,
/// grouped into layers by a [`LayerSchedule`].
#[derive(Debug)]
pub struct MultinomialGenerator {
    config: MultinomialConfig,
    mode: IndexTuple,
    heap: BinaryHeap<Candidate>,
    emitted: u64,
    schedule: LayerSchedule,
    cursor: LayerCursor,
    max_heap_len: usize,
    #[cfg(debug_assertions)]
    proposed: std::collections::HashSet<IndexTuple>,
}

impl MultinomialGenerator {
    pub fn new(config: MultinomialConfig, schedule: LayerSchedule) -> Self {
        assert!(
            config.num_isotopes() <= u8::MAX as usize + 1,
            "too many isotopes for one element"
        );
        let mode = config.find_mode();
        let mut heap = BinaryHeap::new();
        heap.push(Candidate {
            logp: config.log_pmf(&mode),
            tuple: mode.clone(),
            inc: 0,
            dec: 0,
        });
        MultinomialGenerator {
            #[cfg(debug_assertions)]
            proposed: std::collections::HashSet::from([mode.clone()]),
            config,
            mode,
            heap,
            emitted: 0,
            schedule,
            cursor: LayerCursor::default(),
            max_heap_len: 1,
        }
    }

    pub fn config(&self) -> &MultinomialConfig {
        &self.config
    }

    pub fn mode(&self) -> &[u32] {
        &self.mode
    }

    /// Tuples emitted so far.
    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Largest number of pending proposals held at once.
    pub fn max_heap_len(&self) -> usize {
        self.max_heap_len
    }

    pub fn is_exhausted(&self) -> bool {
        self.heap.is_empty()
    }

    /// Pops the most probable remaining tuple and proposes its successors.
    pub fn next_tuple(&mut self) -> Option<(IndexTuple, f64)> {
        let Candidate {
            logp,
            tuple,
            inc,
            dec,
        } = self.heap.pop()?;
        let m = tuple.len();
        for i in inc as usize..m {
            if tuple[i] < self.mode[i] {
                continue;
            }
            for j in dec as usize..m {
                if i == j || tuple[j] == 0 || tuple[j] > self.mode[j] {
                    continue;
                }
                let mut next = tuple.clone();
                next[i] += 1;
                next[j] -= 1;
                #[cfg(debug_assertions)]
                assert!(
                    self.proposed.insert(next.clone()),
                    "tuple {next:?} proposed twice"
                );
                self.heap.push(Candidate {
                    logp: self.config.log_pmf(&next),
                    tuple: next,
                    inc: i as u8,
                    dec: j as u8,
                });
            }
        }
        self.max_heap_len = self.max_heap_len.max(self.heap.len());
        self.emitted += 1;
        Some((tuple, logp))
    }
}

impl LayerStream for MultinomialGenerator {
    fn next_layer(&mut self) -> Vec<Peak> {
        if self.heap.is_empty() {
            return Vec::new();
        }
        let size = self.cursor.advance(&self.schedule);
        let mut layer = Vec::with_capacity(size.min(self.heap.len() * 4));
        while layer.len() < size {
            match self.next_tuple() {
                Some((tuple, logp)) => layer.push(Peak::new(self.config.mass(&tuple), logp)),
                None => break,
            }
        }
        layer
    }
}

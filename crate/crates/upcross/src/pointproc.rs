//! Upcrossing marks, block partitions, and cluster multiplicity histograms.
//!
//! A window of length `n` yields an `n x d` boolean mark matrix: margin `j`
//! is marked at time `i` when it sits at or below its level at `i` and
//! above it at `i + 1` (the path's extra row makes time `n` decidable).
//! Two structural facts drive everything downstream:
//!
//! * a margin can never be marked at two consecutive times, because the
//!   shared observation at `i + 1` would have to be on both sides of the
//!   level; the union row (any margin marked) can be, when different
//!   margins alternate;
//! * partitioning the window into `k` blocks of length `floor(n/k)` and
//!   recording each nonempty block's per-margin count vector estimates the
//!   cluster multiplicity distribution. The remainder `(k*floor(n/k), n]`
//!   belongs to no block and never enters a histogram.
//!
//! Exceedance marks (margin above its level) are the companion matrix used
//! by the extremal-index estimators.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::SamplePath;
use crate::levels::LevelVector;

#[derive(Debug, Error)]
pub enum PointProcError {
    #[error("levels are for d = {levels} margins, path has d = {path}")]
    MarginMismatch { levels: usize, path: usize },
    #[error("levels are calibrated for n = {levels}, path has n = {path}")]
    LengthMismatch { levels: usize, path: usize },
    #[error("block count k = {k} must be between 1 and n = {n}")]
    BadBlockCount { k: usize, n: usize },
}

pub type Result<T> = std::result::Result<T, PointProcError>;

/// Upcrossing marks of one window: `marks[j][i]` says margin `j` upcrosses
/// its level at time `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpcrossingMarks {
    n: usize,
    per_margin: Vec<Vec<bool>>,
    union: Vec<bool>,
}

/// Exceedance marks of one window: `marks[j][i]` says margin `j` is above
/// its level at time `i + 1`, for times `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceMarks {
    n: usize,
    per_margin: Vec<Vec<bool>>,
    union: Vec<bool>,
}

macro_rules! mark_accessors {
    ($ty:ident) => {
        impl $ty {
            pub fn n(&self) -> usize {
                self.n
            }

            pub fn d(&self) -> usize {
                self.per_margin.len()
            }

            pub fn margin(&self, j: usize) -> &[bool] {
                &self.per_margin[j]
            }

            /// Row-wise OR over margins.
            pub fn union(&self) -> &[bool] {
                &self.union
            }

            pub fn margin_count(&self, j: usize) -> u64 {
                self.per_margin[j].iter().filter(|&&m| m).count() as u64
            }

            pub fn union_count(&self) -> u64 {
                self.union.iter().filter(|&&m| m).count() as u64
            }

            /// Marked times (0-based) of one margin, ascending.
            pub fn margin_positions(&self, j: usize) -> Vec<u32> {
                positions(&self.per_margin[j])
            }

            pub fn union_positions(&self) -> Vec<u32> {
                positions(&self.union)
            }
        }
    };
}

mark_accessors!(UpcrossingMarks);
mark_accessors!(ExceedanceMarks);

fn positions(row: &[bool]) -> Vec<u32> {
    row.iter()
        .enumerate()
        .filter_map(|(i, &m)| m.then_some(i as u32))
        .collect()
}

fn check_dims(path: &SamplePath, levels: &LevelVector) -> Result<()> {
    if levels.d() != path.d() {
        return Err(PointProcError::MarginMismatch {
            levels: levels.d(),
            path: path.d(),
        });
    }
    if levels.n() != path.n() {
        return Err(PointProcError::LengthMismatch {
            levels: levels.n(),
            path: path.n(),
        });
    }
    Ok(())
}

/// Mark upcrossings of every margin at times `1..=n`.
pub fn mark_upcrossings(path: &SamplePath, levels: &LevelVector) -> Result<UpcrossingMarks> {
    check_dims(path, levels)?;
    let n = path.n();
    let per_margin: Vec<Vec<bool>> = (0..path.d())
        .map(|j| {
            let u = levels.u(j);
            let col = path.column(j);
            (0..n).map(|i| col[i] <= u && col[i + 1] > u).collect()
        })
        .collect();
    let union = union_rows(&per_margin, n);
    Ok(UpcrossingMarks {
        n,
        per_margin,
        union,
    })
}

/// Mark exceedances of every margin at times `1..=n`.
pub fn mark_exceedances(path: &SamplePath, levels: &LevelVector) -> Result<ExceedanceMarks> {
    check_dims(path, levels)?;
    let n = path.n();
    let per_margin: Vec<Vec<bool>> = (0..path.d())
        .map(|j| {
            let u = levels.u(j);
            path.column(j)[..n].iter().map(|&v| v > u).collect()
        })
        .collect();
    let union = union_rows(&per_margin, n);
    Ok(ExceedanceMarks {
        n,
        per_margin,
        union,
    })
}

fn union_rows(per_margin: &[Vec<bool>], n: usize) -> Vec<bool> {
    (0..n)
        .map(|i| per_margin.iter().any(|col| col[i]))
        .collect()
}

/// Count adjacent same-margin upcrossing marks. The construction makes this
/// impossible, so any nonzero count is a defect in the marking itself.
pub fn no_consecutive_violations(marks: &UpcrossingMarks) -> u64 {
    marks
        .per_margin
        .iter()
        .map(|col| col.windows(2).filter(|w| w[0] && w[1]).count() as u64)
        .sum()
}

/// Numerator and denominator event counts of a runs-declustering ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunsCounts {
    pub num: u64,
    pub den: u64,
}

impl RunsCounts {
    pub fn merge(&mut self, other: RunsCounts) {
        self.num += other.num;
        self.den += other.den;
    }
}

/// Union-row runs counts: an anchor time `i` (first `n - 2` times only, so
/// the lookahead exists) enters the denominator when the union row is
/// marked, and the numerator when additionally neither of the next two
/// times is marked. Cluster-opening marks are exactly the numerator events.
pub fn runs_counts_union(marks: &UpcrossingMarks) -> RunsCounts {
    runs_scan(&marks.union, 2)
}

/// Per-margin runs counts: same anchor range, but only the two-step
/// lookahead is checked because same-margin marks cannot be adjacent.
pub fn runs_counts_margin(marks: &UpcrossingMarks, margin: usize) -> RunsCounts {
    let row = &marks.per_margin[margin];
    let n = row.len();
    let mut counts = RunsCounts::default();
    if n < 3 {
        return counts;
    }
    for i in 0..n - 2 {
        if row[i] {
            counts.den += 1;
            if !row[i + 2] {
                counts.num += 1;
            }
        }
    }
    counts
}

fn runs_scan(row: &[bool], lookahead: usize) -> RunsCounts {
    let n = row.len();
    let mut counts = RunsCounts::default();
    if n < lookahead + 1 {
        return counts;
    }
    for i in 0..n - lookahead {
        if row[i] {
            counts.den += 1;
            if (1..=lookahead).all(|s| !row[i + s]) {
                counts.num += 1;
            }
        }
    }
    counts
}

/// Partition of `[0, n)` into `k` blocks of length `r = floor(n/k)` plus an
/// excluded remainder `[k*r, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockScheme {
    n: usize,
    k: usize,
    r: usize,
}

impl BlockScheme {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(PointProcError::BadBlockCount { k, n });
        }
        Ok(BlockScheme { n, k, r: n / k })
    }

    /// Default block count `floor(sqrt(n))`.
    pub fn sqrt_rule(n: usize) -> Result<Self> {
        Self::new(n, (n as f64).sqrt().floor() as usize)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Block length.
    pub fn r(&self) -> usize {
        self.r
    }

    /// Half-open time range (0-based) of full block `s`, `s in 0..k`.
    pub fn block(&self, s: usize) -> std::ops::Range<usize> {
        debug_assert!(s < self.k);
        s * self.r..(s + 1) * self.r
    }

    /// Excluded tail range; empty when `k` divides `n`.
    pub fn remainder(&self) -> std::ops::Range<usize> {
        self.k * self.r..self.n
    }
}

/// Per-block mark-count vectors of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCounts {
    /// `full[s][j]` = margin-`j` marks in full block `s`.
    pub full: Vec<Vec<u32>>,
    /// Counts in the excluded remainder, kept for audit only.
    pub remainder: Vec<u32>,
}

/// Count marks per block and margin.
pub fn block_count_vectors(marks: &UpcrossingMarks, scheme: &BlockScheme) -> BlockCounts {
    debug_assert_eq!(marks.n(), scheme.n());
    let d = marks.d();
    let mut full = vec![vec![0u32; d]; scheme.k()];
    let mut remainder = vec![0u32; d];
    let boundary = scheme.k() * scheme.r();
    for (j, col) in marks.per_margin.iter().enumerate() {
        for (i, &m) in col.iter().enumerate() {
            if m {
                if i < boundary {
                    full[i / scheme.r()][j] += 1;
                } else {
                    remainder[j] += 1;
                }
            }
        }
    }
    BlockCounts { full, remainder }
}

/// One bin of the cluster multiplicity distribution: a per-margin count
/// vector and the number of blocks showing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityBin {
    pub counts: Vec<u32>,
    pub blocks: u64,
    pub frequency: f64,
}

/// Empirical distribution of per-margin counts over nonempty full blocks,
/// pooled over however many windows fed the accumulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityHistogram {
    pub bins: Vec<MultiplicityBin>,
    pub nonempty_blocks: u64,
    pub total_blocks: u64,
}

impl MultiplicityHistogram {
    /// False when no block was nonempty; frequencies are then meaningless
    /// and callers must treat dependent estimates as undefined.
    pub fn is_defined(&self) -> bool {
        self.nonempty_blocks > 0
    }

    pub fn frequency(&self, counts: &[u32]) -> f64 {
        self.bins
            .iter()
            .find(|b| b.counts == counts)
            .map_or(0.0, |b| b.frequency)
    }

    /// Mass on count vectors with two or more active margins.
    pub fn multi_margin_mass(&self) -> f64 {
        self.bins
            .iter()
            .filter(|b| b.counts.iter().filter(|&&c| c > 0).count() >= 2)
            .map(|b| b.frequency)
            .sum()
    }

    /// Marginal multiplicity of one margin: distribution of its block count
    /// conditional on that count being positive. Blocks that are nonempty
    /// overall but empty in this margin count as empty here.
    pub fn marginal(&self, margin: usize) -> ClusterSizeHistogram {
        let mut acc = ClusterSizeAccumulator::default();
        for bin in &self.bins {
            let c = bin.counts[margin];
            if c > 0 {
                *acc.map.entry(c).or_default() += bin.blocks;
            }
        }
        acc.total_blocks = self.total_blocks;
        acc.finalize()
    }
}

/// Accumulates block count vectors across windows.
#[derive(Debug, Default, Clone)]
pub struct MultiplicityAccumulator {
    map: BTreeMap<Vec<u32>, u64>,
    total_blocks: u64,
}

impl MultiplicityAccumulator {
    pub fn add_window(&mut self, blocks: &BlockCounts) {
        for counts in &blocks.full {
            self.total_blocks += 1;
            if counts.iter().any(|&c| c > 0) {
                *self.map.entry(counts.clone()).or_default() += 1;
            }
        }
    }

    pub fn merge(&mut self, other: MultiplicityAccumulator) {
        self.total_blocks += other.total_blocks;
        for (counts, blocks) in other.map {
            *self.map.entry(counts).or_default() += blocks;
        }
    }

    pub fn finalize(self) -> MultiplicityHistogram {
        let nonempty: u64 = self.map.values().sum();
        let bins = self
            .map
            .into_iter()
            .map(|(counts, blocks)| MultiplicityBin {
                counts,
                blocks,
                frequency: if nonempty > 0 {
                    blocks as f64 / nonempty as f64
                } else {
                    0.0
                },
            })
            .collect();
        MultiplicityHistogram {
            bins,
            nonempty_blocks: nonempty,
            total_blocks: self.total_blocks,
        }
    }
}

/// One bin of the union cluster-size distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSizeBin {
    pub size: u32,
    pub blocks: u64,
    pub frequency: f64,
}

/// Empirical distribution of union mark counts over nonempty full blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSizeHistogram {
    pub bins: Vec<ClusterSizeBin>,
    pub nonempty_blocks: u64,
    pub total_blocks: u64,
}

impl ClusterSizeHistogram {
    pub fn is_defined(&self) -> bool {
        self.nonempty_blocks > 0
    }

    pub fn frequency(&self, size: u32) -> f64 {
        self.bins
            .iter()
            .find(|b| b.size == size)
            .map_or(0.0, |b| b.frequency)
    }

    /// Mean block count over nonempty blocks; `None` when undefined.
    pub fn mean(&self) -> Option<f64> {
        if !self.is_defined() {
            return None;
        }
        let weighted: f64 = self
            .bins
            .iter()
            .map(|b| b.size as f64 * b.blocks as f64)
            .sum();
        Some(weighted / self.nonempty_blocks as f64)
    }
}

/// Accumulates union block counts across windows.
#[derive(Debug, Default, Clone)]
pub struct ClusterSizeAccumulator {
    map: BTreeMap<u32, u64>,
    total_blocks: u64,
}

impl ClusterSizeAccumulator {
    pub fn add_window(&mut self, blocks: &BlockCounts) {
        for counts in &blocks.full {
            self.total_blocks += 1;
            let size: u32 = counts.iter().sum();
            if size > 0 {
                *self.map.entry(size).or_default() += 1;
            }
        }
    }

    /// Add the union count of one block directly (the union row can carry
    /// fewer marks than the margin total when margins mark the same time).
    pub fn add_union_size(&mut self, size: u32) {
        self.total_blocks += 1;
        if size > 0 {
            *self.map.entry(size).or_default() += 1;
        }
    }

    pub fn merge(&mut self, other: ClusterSizeAccumulator) {
        self.total_blocks += other.total_blocks;
        for (size, blocks) in other.map {
            *self.map.entry(size).or_default() += blocks;
        }
    }

    pub fn finalize(self) -> ClusterSizeHistogram {
        let nonempty: u64 = self.map.values().sum();
        let bins = self
            .map
            .into_iter()
            .map(|(size, blocks)| ClusterSizeBin {
                size,
                blocks,
                frequency: if nonempty > 0 {
                    blocks as f64 / nonempty as f64
                } else {
                    0.0
                },
            })
            .collect();
        ClusterSizeHistogram {
            bins,
            nonempty_blocks: nonempty,
            total_blocks: self.total_blocks,
        }
    }
}

/// Union mark counts per full block, or the remainder-excluded union sizes
/// needed by the cluster-size accumulator.
pub fn union_block_sizes(marks: &UpcrossingMarks, scheme: &BlockScheme) -> Vec<u32> {
    let mut sizes = vec![0u32; scheme.k()];
    let boundary = scheme.k() * scheme.r();
    for (i, &m) in marks.union.iter().enumerate() {
        if m && i < boundary {
            sizes[i / scheme.r()] += 1;
        }
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{builtin_process, generate_window, SamplePath, SeedRecord};
    use crate::levels::levels_from_tau_prime;

    fn level_vector(n: usize, u: &[f64]) -> LevelVector {
        // reconstruct a LevelVector through the public constructor
        let spec = builtin_process("iid", Some(u.len())).unwrap();
        let tau_prime: Vec<f64> = u.iter().map(|&u| n as f64 * (1.0 - u)).collect();
        levels_from_tau_prime(&spec, &tau_prime, n).unwrap()
    }

    #[test]
    fn single_column_marks_match_definition() {
        let path = SamplePath::from_columns(vec![vec![0.5, 0.95, 0.4]]).unwrap();
        let levels = level_vector(2, &[0.9]);
        let marks = mark_upcrossings(&path, &levels).unwrap();
        assert_eq!(marks.margin(0), &[true, false]);
        assert_eq!(marks.union(), &[true, false]);
        assert_eq!(marks.margin_count(0), 1);
        let ex = mark_exceedances(&path, &levels).unwrap();
        assert_eq!(ex.margin(0), &[false, true]);
    }

    #[test]
    fn union_is_rowwise_or_and_counts_joint_marks_once() {
        let path = SamplePath::from_columns(vec![
            vec![0.50, 0.95, 0.40, 0.10],
            vec![0.10, 0.92, 0.10, 0.95],
        ])
        .unwrap();
        let levels = level_vector(3, &[0.9, 0.9]);
        let marks = mark_upcrossings(&path, &levels).unwrap();
        assert_eq!(marks.margin(0), &[true, false, false]);
        assert_eq!(marks.margin(1), &[true, false, true]);
        assert_eq!(marks.union(), &[true, false, true]);
        assert_eq!(marks.union_count(), 2);
        assert_eq!(marks.union_positions(), vec![0, 2]);
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let path = SamplePath::from_columns(vec![vec![0.5, 0.9, 0.4]]).unwrap();
        let levels = level_vector(3, &[0.9]);
        assert!(matches!(
            mark_upcrossings(&path, &levels),
            Err(PointProcError::LengthMismatch { levels: 3, path: 2 })
        ));
        let levels2 = level_vector(2, &[0.9, 0.8]);
        assert!(matches!(
            mark_upcrossings(&path, &levels2),
            Err(PointProcError::MarginMismatch { levels: 2, path: 1 })
        ));
    }

    #[test]
    fn generated_windows_never_mark_consecutively_in_one_margin() {
        for name in ["iid", "ex61", "ex62"] {
            let spec = builtin_process(name, None).unwrap();
            let levels = levels_from_tau_prime(&spec, &vec![2.0; spec.d()], 500).unwrap();
            for r in 0..50 {
                let path = generate_window(&spec, 500, SeedRecord::derive(7, r)).unwrap();
                let marks = mark_upcrossings(&path, &levels).unwrap();
                assert_eq!(no_consecutive_violations(&marks), 0, "{name} rep {r}");
            }
        }
    }

    #[test]
    fn union_runs_counts_match_stated_examples() {
        let marks = UpcrossingMarks {
            n: 6,
            per_margin: vec![vec![false, false, true, false, false, false]],
            union: vec![false, false, true, false, false, false],
        };
        assert_eq!(runs_counts_union(&marks), RunsCounts { num: 1, den: 1 });

        // adjacent union marks: the first anchor fails the lookahead
        let marks = UpcrossingMarks {
            n: 4,
            per_margin: vec![vec![true, true, false, false]],
            union: vec![true, true, false, false],
        };
        assert_eq!(runs_counts_union(&marks), RunsCounts { num: 1, den: 2 });
    }

    #[test]
    fn edge_times_are_excluded_from_both_sides_of_the_ratio() {
        // a mark in the last two times has no full lookahead: not counted
        let marks = UpcrossingMarks {
            n: 5,
            per_margin: vec![vec![false, false, false, false, true]],
            union: vec![false, false, false, false, true],
        };
        assert_eq!(runs_counts_union(&marks), RunsCounts { num: 0, den: 0 });
        assert_eq!(runs_counts_margin(&marks, 0), RunsCounts { num: 0, den: 0 });
    }

    #[test]
    fn margin_runs_use_two_step_lookahead_only() {
        let marks = UpcrossingMarks {
            n: 5,
            per_margin: vec![vec![true, false, true, false, false]],
            union: vec![true, false, true, false, false],
        };
        // anchors 0 and 2; anchor 0 sees the mark at 2, anchor 2 is clear
        assert_eq!(runs_counts_margin(&marks, 0), RunsCounts { num: 1, den: 2 });
        // union scan agrees here: anchor 0 fails on the two-step check alone
        assert_eq!(runs_counts_union(&marks), RunsCounts { num: 1, den: 2 });
    }

    #[test]
    fn block_scheme_partitions_and_validates() {
        let scheme = BlockScheme::new(10, 3).unwrap();
        assert_eq!(scheme.r(), 3);
        assert_eq!(scheme.block(0), 0..3);
        assert_eq!(scheme.block(2), 6..9);
        assert_eq!(scheme.remainder(), 9..10);
        assert!(matches!(
            BlockScheme::new(10, 11),
            Err(PointProcError::BadBlockCount { k: 11, n: 10 })
        ));
        assert!(matches!(
            BlockScheme::new(10, 0),
            Err(PointProcError::BadBlockCount { k: 0, n: 10 })
        ));
        assert_eq!(BlockScheme::sqrt_rule(10_000).unwrap().k(), 100);
    }

    #[test]
    fn block_counts_respect_the_remainder() {
        let marks = UpcrossingMarks {
            n: 10,
            per_margin: vec![vec![
                true, false, false, false, false, true, false, false, false, true,
            ]],
            union: vec![
                true, false, false, false, false, true, false, false, false, true,
            ],
        };
        let scheme = BlockScheme::new(10, 3).unwrap();
        let blocks = block_count_vectors(&marks, &scheme);
        assert_eq!(blocks.full, vec![vec![1], vec![1], vec![0]]);
        assert_eq!(blocks.remainder, vec![1]); // time 9 is excluded
        assert_eq!(union_block_sizes(&marks, &scheme), vec![1, 1, 0]);
    }

    #[test]
    fn multiplicity_histogram_pools_and_normalizes() {
        let mut acc = MultiplicityAccumulator::default();
        acc.add_window(&BlockCounts {
            full: vec![vec![2, 0], vec![0, 0], vec![0, 1]],
            remainder: vec![0, 0],
        });
        acc.add_window(&BlockCounts {
            full: vec![vec![2, 0], vec![0, 0], vec![0, 0]],
            remainder: vec![1, 0],
        });
        let hist = acc.finalize();
        assert!(hist.is_defined());
        assert_eq!(hist.total_blocks, 6);
        assert_eq!(hist.nonempty_blocks, 3);
        assert!((hist.frequency(&[2, 0]) - 2.0 / 3.0).abs() < 1e-15);
        assert!((hist.frequency(&[0, 1]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(hist.frequency(&[1, 1]), 0.0);
        assert_eq!(hist.multi_margin_mass(), 0.0);

        let marginal = hist.marginal(0);
        assert_eq!(marginal.frequency(2), 1.0);
        assert_eq!(marginal.nonempty_blocks, 2);
    }

    #[test]
    fn empty_histograms_are_flagged_undefined() {
        let hist = MultiplicityAccumulator::default().finalize();
        assert!(!hist.is_defined());
        assert_eq!(hist.nonempty_blocks, 0);
        let sizes = ClusterSizeAccumulator::default().finalize();
        assert!(!sizes.is_defined());
        assert_eq!(sizes.mean(), None);
    }

    #[test]
    fn cluster_size_mean_weights_by_blocks() {
        let mut acc = ClusterSizeAccumulator::default();
        for size in [2u32, 2, 1, 0] {
            acc.add_union_size(size);
        }
        let hist = acc.finalize();
        assert_eq!(hist.nonempty_blocks, 3);
        assert_eq!(hist.total_blocks, 4);
        assert!((hist.mean().unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert!((hist.frequency(2) - 2.0 / 3.0).abs() < 1e-15);
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(128))]

            #[test]
            fn prop_marks_never_adjacent_within_margin(
                values in proptest::collection::vec(0.0f64..1.0, 3..120),
                u in 0.05f64..0.95,
            ) {
                let n = values.len() - 1;
                let path = SamplePath::from_columns(vec![values]).unwrap();
                let levels = level_vector(n, &[u]);
                let marks = mark_upcrossings(&path, &levels).unwrap();
                prop_assert_eq!(no_consecutive_violations(&marks), 0);
            }

            #[test]
            fn prop_blocks_partition_the_window(n in 1usize..5_000, k_seed in 1usize..200) {
                let k = k_seed.min(n);
                let scheme = BlockScheme::new(n, k).unwrap();
                let mut covered = 0usize;
                for s in 0..scheme.k() {
                    let b = scheme.block(s);
                    prop_assert_eq!(b.len(), scheme.r());
                    prop_assert_eq!(b.start, s * scheme.r());
                    covered += b.len();
                }
                let rem = scheme.remainder();
                prop_assert_eq!(covered + rem.len(), n);
                prop_assert!(rem.len() < scheme.k().max(scheme.r() + 1));
            }

            #[test]
            fn prop_histogram_mass_sums_to_one_over_nonempty(
                vectors in proptest::collection::vec(
                    proptest::collection::vec(0u32..4, 2), 1..80,
                ),
            ) {
                let mut acc = MultiplicityAccumulator::default();
                acc.add_window(&BlockCounts { full: vectors.clone(), remainder: vec![0, 0] });
                let hist = acc.finalize();
                if hist.is_defined() {
                    let mass: f64 = hist.bins.iter().map(|b| b.frequency).sum();
                    prop_assert!((mass - 1.0).abs() < 1e-12);
                    let blocks: u64 = hist.bins.iter().map(|b| b.blocks).sum();
                    prop_assert_eq!(blocks, hist.nonempty_blocks);
                } else {
                    prop_assert!(vectors.iter().all(|v| v.iter().all(|&c| c == 0)));
                }
            }
        }
    }
}

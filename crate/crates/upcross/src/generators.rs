//! Window generation for moving-maximum processes over i.i.d. Uniform(0,1)
//! innovations.
//!
//! A process is described by one lag set per margin and an assignment of
//! margins to innovation streams. Margin `j` observed at time `i` takes the
//! value `max { Y_{i+l} : l in L_j }`, where `Y` is the i.i.d. Uniform(0,1)
//! innovation stream margin `j` rides. Margins on one stream may share
//! innovations (equal or overlapping lag sets at nearby times), which is
//! what creates cross-margin clustering; margins on distinct streams never
//! share an innovation, so their upcrossing clusters do not interact.
//!
//! Of the built-ins, `ex62` puts both margins on one stream (margin 2 is
//! the bare innovation under margin 1's lagged maximum, so every high
//! innovation clusters the two margins together), while `ex61` gives each
//! margin its own stream (a lagged-maximum margin and a bare margin whose
//! clusters stay disjoint). Custom lag sets all ride a single shared
//! stream.
//!
//! A window of length `n` materializes rows `1..=n+1`: the extra row exists
//! so that an upcrossing can be decided at every time `1..=n`. Each stream
//! draws innovations for the whole index range any of its rows can touch,
//! `[1 + min(0, min lag), n + 1 + max(0, max lag)]` over the lags of the
//! margins riding it, so negative and positive lags are honored exactly
//! rather than clamped or recycled at the window edge.
//!
//! # Seeding
//!
//! Each window is generated from a [`SeedRecord`] tying together the master
//! seed, the replicate index, and the derived stream seed. The derivation is
//! a SplitMix64 finalizer over `master + (replicate + 1) * GOLDEN_GAMMA`,
//! and the stream itself is ChaCha8. Identical records give identical
//! windows on every platform and with any scheduling of replicates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Weyl increment used by the seed-splitting rule.
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Names accepted by [`builtin_process`].
pub const BUILTIN_NAMES: [&str; 3] = ["iid", "ex61", "ex62"];

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("unknown process name '{name}'; valid names are {valid:?}")]
    UnknownProcess {
        name: String,
        valid: [&'static str; 3],
    },
    #[error("process '{name}' has a fixed margin count of {expected}, got {got}")]
    FixedMarginCount {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("process needs at least one margin")]
    NoMargins,
    #[error("margin {margin} has an empty lag set")]
    EmptyLagSet { margin: usize },
    #[error("window length must be at least 2, got {n}")]
    WindowTooShort { n: usize },
}

pub type Result<T> = std::result::Result<T, SpecError>;

/// The built-in lag patterns. Detected structurally, so a custom spec with
/// the same lag sets is the same process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinKind {
    /// Every margin is the bare innovation stream: `L_j = {0}`.
    Iid,
    /// Margins on independent streams: `L_1 = {0, -2, -3}` on one,
    /// `L_2 = {+1}` on the other, so cross-margin clusters never overlap.
    Ex61,
    /// Two margins sharing one stream and the time-`i` innovation:
    /// `L_1 = {0, -2, -3}`, `L_2 = {0}`.
    Ex62,
}

/// A moving-maximum process: one sorted, deduplicated lag set per margin,
/// plus the stream index each margin rides (contiguous from 0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessSpec {
    name: String,
    lags: Vec<Vec<i64>>,
    streams: Vec<usize>,
}

impl ProcessSpec {
    /// Number of margins.
    pub fn d(&self) -> usize {
        self.lags.len()
    }

    /// Process name: a built-in name when the lag pattern matches one,
    /// otherwise `"custom"`.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Lag sets, sorted ascending within each margin.
    pub fn lags(&self) -> &[Vec<i64>] {
        &self.lags
    }

    pub fn lag_set(&self, margin: usize) -> &[i64] {
        &self.lags[margin]
    }

    /// Stream index each margin rides, contiguous from 0.
    pub fn streams(&self) -> &[usize] {
        &self.streams
    }

    /// Stream index of one margin.
    pub fn stream(&self, margin: usize) -> usize {
        self.streams[margin]
    }

    /// Number of distinct innovation streams.
    pub fn stream_count(&self) -> usize {
        self.streams.iter().copied().max().unwrap_or(0) + 1
    }

    /// Smallest lag across all margins (0 when none is negative).
    pub fn min_lag(&self) -> i64 {
        self.lags
            .iter()
            .flatten()
            .copied()
            .min()
            .unwrap_or(0)
            .min(0)
    }

    /// Largest lag across all margins (0 when none is positive).
    pub fn max_lag(&self) -> i64 {
        self.lags
            .iter()
            .flatten()
            .copied()
            .max()
            .unwrap_or(0)
            .max(0)
    }

    pub fn builtin_kind(&self) -> Option<BuiltinKind> {
        if self.lags.iter().all(|l| l.as_slice() == [0]) {
            return Some(BuiltinKind::Iid);
        }
        if self.lags.len() == 2 && self.lags[0] == [-3, -2, 0] {
            if self.lags[1] == [1] {
                return Some(BuiltinKind::Ex61);
            }
            if self.lags[1] == [0] {
                return Some(BuiltinKind::Ex62);
            }
        }
        None
    }

    /// Innovation indices a window of length `n` touches on one stream, as
    /// an inclusive range on the time axis where row `i` reads `Y_{i+l}`
    /// over the lags of the margins riding that stream.
    pub fn stream_innovation_range(&self, stream: usize, n: usize) -> (i64, i64) {
        let mut min_lag = 0i64;
        let mut max_lag = 0i64;
        for (lag_set, &s) in self.lags.iter().zip(&self.streams) {
            if s == stream {
                min_lag = min_lag.min(*lag_set.first().expect("lag sets are non-empty"));
                max_lag = max_lag.max(*lag_set.last().expect("lag sets are non-empty"));
            }
        }
        (1 + min_lag, n as i64 + 1 + max_lag)
    }

    /// Number of innovations drawn per window of length `n`, summed over
    /// streams.
    pub fn innovations_per_window(&self, n: usize) -> u64 {
        (0..self.stream_count())
            .map(|s| {
                let (lo, hi) = self.stream_innovation_range(s, n);
                (hi - lo + 1) as u64
            })
            .sum()
    }
}

/// Construct one of the built-in processes by name. `d` selects the margin
/// count for `"iid"` (default 1) and must be 2 or unset for the others.
pub fn builtin_process(name: &str, d: Option<usize>) -> Result<ProcessSpec> {
    match name {
        "iid" => make_process(vec![vec![0]; d.unwrap_or(1).max(1)]),
        "ex61" | "ex62" => {
            if let Some(d) = d {
                if d != 2 {
                    return Err(SpecError::FixedMarginCount {
                        name: if name == "ex61" { "ex61" } else { "ex62" },
                        expected: 2,
                        got: d,
                    });
                }
            }
            let second = if name == "ex61" { vec![1] } else { vec![0] };
            make_process(vec![vec![0, -2, -3], second])
        }
        other => Err(SpecError::UnknownProcess {
            name: other.to_owned(),
            valid: BUILTIN_NAMES,
        }),
    }
}

/// Construct a process from raw lag sets. Sets are sorted and deduplicated;
/// a pattern matching a built-in gets its name and stream layout, so these
/// lag sets build the identical process. All other patterns ride one
/// shared stream.
pub fn make_process(lags: Vec<Vec<i64>>) -> Result<ProcessSpec> {
    if lags.is_empty() {
        return Err(SpecError::NoMargins);
    }
    let mut normalized = Vec::with_capacity(lags.len());
    for (margin, mut set) in lags.into_iter().enumerate() {
        set.sort_unstable();
        set.dedup();
        if set.is_empty() {
            return Err(SpecError::EmptyLagSet { margin });
        }
        normalized.push(set);
    }
    let d = normalized.len();
    let mut spec = ProcessSpec {
        name: "custom".to_owned(),
        lags: normalized,
        streams: vec![0; d],
    };
    match spec.builtin_kind() {
        Some(BuiltinKind::Iid) => spec.name = "iid".to_owned(),
        Some(BuiltinKind::Ex61) => {
            spec.name = "ex61".to_owned();
            spec.streams = vec![0, 1];
        }
        Some(BuiltinKind::Ex62) => spec.name = "ex62".to_owned(),
        None => {}
    }
    Ok(spec)
}

/// Provenance of one window's randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub replicate: u64,
    pub derived: u64,
}

impl SeedRecord {
    /// Derive the stream seed for one replicate from the master seed.
    pub fn derive(master: u64, replicate: u64) -> Self {
        let derived = split_seed(master, replicate);
        SeedRecord {
            master,
            replicate,
            derived,
        }
    }
}

/// SplitMix64 finalizer over `master + (replicate + 1) * GOLDEN_GAMMA`.
/// The `+ 1` keeps replicate 0 from collapsing onto the bare master seed.
pub fn split_seed(master: u64, replicate: u64) -> u64 {
    let mut z = master.wrapping_add(replicate.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One generated window: rows `1..=n+1` of every margin.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    n: usize,
    columns: Vec<Vec<f64>>, // columns[j][t] = margin j at time t+1, t in 0..=n
    seed: Option<SeedRecord>,
}

impl SamplePath {
    /// Assemble a window from explicit per-margin value columns (each of
    /// length `n + 1`). Used for hand-built fixtures and external data;
    /// such paths carry no seed provenance.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(SpecError::NoMargins);
        }
        let rows = columns[0].len();
        if rows < 3 {
            return Err(SpecError::WindowTooShort {
                n: rows.saturating_sub(1),
            });
        }
        assert!(
            columns.iter().all(|c| c.len() == rows),
            "margin columns must share a length"
        );
        Ok(SamplePath {
            n: rows - 1,
            columns,
            seed: None,
        })
    }

    /// Window length (the path holds `n + 1` rows).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    /// All `n + 1` values of one margin; slot `t` is time `t + 1`.
    pub fn column(&self, margin: usize) -> &[f64] {
        &self.columns[margin]
    }

    /// Seed provenance; `None` for hand-built paths.
    pub fn seed(&self) -> Option<SeedRecord> {
        self.seed
    }
}

/// Generate one window of length `n` (rows `1..=n+1`) from a seed record.
///
/// Innovations are drawn stream by stream in increasing stream index, each
/// stream in increasing time order over the full range its lag sets can
/// touch, from a single ChaCha8 sequence. Each margin then takes its lagged
/// maxima from its stream's array. Values at the window edges therefore
/// have exactly the same law as interior ones, and a single-stream process
/// consumes the ChaCha8 sequence as one ascending run.
pub fn generate_window(spec: &ProcessSpec, n: usize, seed: SeedRecord) -> Result<SamplePath> {
    if n < 2 {
        return Err(SpecError::WindowTooShort { n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.derived);
    let streams: Vec<(i64, Vec<f64>)> = (0..spec.stream_count())
        .map(|s| {
            let (lo, hi) = spec.stream_innovation_range(s, n);
            let mut innovations = vec![0.0f64; (hi - lo + 1) as usize];
            for slot in innovations.iter_mut() {
                *slot = rng.gen();
            }
            (lo, innovations)
        })
        .collect();
    let columns = spec
        .lags
        .iter()
        .zip(&spec.streams)
        .map(|(lag_set, &s)| {
            let (lo, innovations) = &streams[s];
            (1..=(n as i64 + 1))
                .map(|i| {
                    lag_set
                        .iter()
                        .map(|l| innovations[(i + l - lo) as usize])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect()
        })
        .collect();
    Ok(SamplePath {
        n,
        columns,
        seed: Some(seed),
    })
}

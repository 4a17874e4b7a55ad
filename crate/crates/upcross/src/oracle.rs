//! Exact probabilities for finite boolean events over the innovations.
//!
//! Every question this crate asks of a simulated window reduces to a
//! boolean combination of atoms `{Y_t > c}` for finitely many innovation
//! variables and thresholds `c`. A variable is named by its stream and its
//! time index, matching the generator's layout: atoms on one stream at one
//! time are the same variable, atoms on distinct streams are independent
//! no matter the time. Because the innovations are i.i.d. Uniform(0,1),
//! such an event has an exactly computable probability: cut each referenced
//! innovation's unit interval at its thresholds and sum the product of
//! interval lengths over the satisfying joint assignments. Each interval
//! lies entirely on one side of every cut, so an assignment decides every
//! atom.
//!
//! The enumeration is deterministic (streams then times ascending,
//! intervals in order) and the accumulation is compensated, so algebraic
//! identities such as complement and inclusion-exclusion hold to near
//! machine precision. Cost is the product of per-innovation interval
//! counts; expressions beyond the documented budget are rejected up front
//! with the estimated cost rather than attempted.
//!
//! [`upcrossing_event`] and [`exceedance_event`] compile the marked events
//! of a moving-maximum process into this algebra, and
//! [`exact_window_prob`] extends it to any predicate over a whole window's
//! upcrossing-mark and exceedance matrices.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::ProcessSpec;

/// Hard cap on distinct innovation indices one event may reference.
pub const MAX_INDICES: usize = 24;
/// Hard cap on the interval-assignment count the enumeration will walk.
pub const MAX_CELLS: u128 = 1 << 26;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(
        "event references {indices} innovations with {cells} interval assignments; \
         budget is {max_indices} innovations and {max_cells} assignments"
    )]
    BudgetExceeded {
        indices: usize,
        cells: u128,
        max_indices: usize,
        max_cells: u128,
    },
    #[error("threshold {value} is not a finite number")]
    BadThreshold { value: f64 },
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Innovation variable: stream index and time index.
pub type VarKey = (usize, i64);

fn stream_is_zero(stream: &usize) -> bool {
    *stream == 0
}

/// Boolean event over innovations: atoms are `{Y_index > threshold}` on a
/// stream (stream 0 when unstated, which is the only stream of any
/// single-stream process).
///
/// `And` of an empty list is the sure event, `Or` of an empty list the
/// impossible one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventExpr {
    Above {
        index: i64,
        threshold: f64,
        #[serde(default, skip_serializing_if = "stream_is_zero")]
        stream: usize,
    },
    Not(Box<EventExpr>),
    And(Vec<EventExpr>),
    Or(Vec<EventExpr>),
}

impl EventExpr {
    /// Atom `{Y_index > threshold}` on stream 0.
    pub fn above(index: i64, threshold: f64) -> Self {
        Self::above_on(0, index, threshold)
    }

    /// Atom `{Y_index <= threshold}` on stream 0.
    pub fn at_most(index: i64, threshold: f64) -> Self {
        EventExpr::Not(Box::new(Self::above(index, threshold)))
    }

    /// Atom `{Y_index > threshold}` on a chosen stream.
    pub fn above_on(stream: usize, index: i64, threshold: f64) -> Self {
        EventExpr::Above {
            index,
            threshold,
            stream,
        }
    }

    /// Atom `{Y_index <= threshold}` on a chosen stream.
    pub fn at_most_on(stream: usize, index: i64, threshold: f64) -> Self {
        EventExpr::Not(Box::new(Self::above_on(stream, index, threshold)))
    }

    pub fn not(self) -> Self {
        EventExpr::Not(Box::new(self))
    }

    pub fn and(terms: Vec<EventExpr>) -> Self {
        EventExpr::And(terms)
    }

    pub fn or(terms: Vec<EventExpr>) -> Self {
        EventExpr::Or(terms)
    }

    /// Distinct thresholds per referenced innovation variable.
    fn cuts(&self) -> Result<BTreeMap<VarKey, Vec<f64>>> {
        let mut map: BTreeMap<VarKey, Vec<f64>> = BTreeMap::new();
        self.collect_cuts(&mut map)?;
        for thresholds in map.values_mut() {
            // clamp into [0, 1]: Y is Uniform(0,1), so cuts outside add nothing
            for t in thresholds.iter_mut() {
                *t = t.clamp(0.0, 1.0);
            }
            thresholds.sort_by(|a, b| a.partial_cmp(b).expect("finite by construction"));
            thresholds.dedup();
        }
        Ok(map)
    }

    fn collect_cuts(&self, map: &mut BTreeMap<VarKey, Vec<f64>>) -> Result<()> {
        match self {
            EventExpr::Above {
                index,
                threshold,
                stream,
            } => {
                if !threshold.is_finite() {
                    return Err(OracleError::BadThreshold { value: *threshold });
                }
                map.entry((*stream, *index)).or_default().push(*threshold);
                Ok(())
            }
            EventExpr::Not(inner) => inner.collect_cuts(map),
            EventExpr::And(terms) | EventExpr::Or(terms) => {
                terms.iter().try_for_each(|t| t.collect_cuts(map))
            }
        }
    }

    /// Evaluate with an arbitrary atom valuation.
    fn eval(&self, atom: &impl Fn(VarKey, f64) -> bool) -> bool {
        match self {
            EventExpr::Above {
                index,
                threshold,
                stream,
            } => atom((*stream, *index), *threshold),
            EventExpr::Not(inner) => !inner.eval(atom),
            EventExpr::And(terms) => terms.iter().all(|t| t.eval(atom)),
            EventExpr::Or(terms) => terms.iter().any(|t| t.eval(atom)),
        }
    }
}

/// Per-innovation partition of [0, 1] into threshold-cut intervals.
struct Partition {
    key: VarKey,
    /// interval i is (bounds[i], bounds[i+1]]; bounds[0] = 0 is closed
    bounds: Vec<f64>,
}

fn build_partitions(cuts: BTreeMap<VarKey, Vec<f64>>) -> (Vec<Partition>, u128) {
    let mut cells: u128 = 1;
    let mut parts = Vec::with_capacity(cuts.len());
    for (key, thresholds) in cuts {
        let mut bounds = Vec::with_capacity(thresholds.len() + 2);
        bounds.push(0.0);
        for t in thresholds {
            if t > 0.0 && t < 1.0 {
                bounds.push(t);
            }
        }
        bounds.push(1.0);
        bounds.dedup();
        cells = cells.saturating_mul((bounds.len() - 1) as u128);
        parts.push(Partition { key, bounds });
    }
    (parts, cells)
}

/// Kahan-compensated accumulator; the enumeration below adds many small
/// products, and the identity tests demand ~1e-12 additivity.
#[derive(Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Exact probability of `expr` under i.i.d. Uniform(0,1) innovations.
pub fn exact_prob(expr: &EventExpr) -> Result<f64> {
    let cuts = expr.cuts()?;
    let (parts, cells) = build_partitions(cuts);
    if parts.len() > MAX_INDICES || cells > MAX_CELLS {
        return Err(OracleError::BudgetExceeded {
            indices: parts.len(),
            cells,
            max_indices: MAX_INDICES,
            max_cells: MAX_CELLS,
        });
    }
    // assignment[v] = index of the chosen interval for variable v
    let mut assignment = vec![0usize; parts.len()];
    let mut total = Compensated::default();
    let position: BTreeMap<VarKey, usize> =
        parts.iter().enumerate().map(|(v, p)| (p.key, v)).collect();
    enumerate(
        &parts,
        0,
        1.0,
        &mut assignment,
        &mut |assignment, weight| {
            // an interval (lo, hi] satisfies {Y > c} iff lo >= c, because every
            // cut of that variable is an interval boundary
            let holds = expr.eval(&|key, c| {
                let v = position[&key];
                parts[v].bounds[assignment[v]] >= c.clamp(0.0, 1.0)
            });
            if holds {
                total.add(weight);
            }
        },
    );
    Ok(total.sum)
}

fn enumerate(
    parts: &[Partition],
    var: usize,
    weight: f64,
    assignment: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize], f64),
) {
    if var == parts.len() {
        visit(assignment, weight);
        return;
    }
    let bounds = &parts[var].bounds;
    for i in 0..bounds.len() - 1 {
        assignment[var] = i;
        let len = bounds[i + 1] - bounds[i];
        enumerate(parts, var + 1, weight * len, assignment, visit);
    }
}

/// Monte Carlo frequency of `expr` at a given draw count, for cross-checking
/// the exact engine. Referenced innovations are drawn i.i.d. Uniform(0,1).
pub fn monte_carlo_prob(expr: &EventExpr, draws: u64, seed: u64) -> Result<f64> {
    let cuts = expr.cuts()?;
    let keys: Vec<VarKey> = cuts.keys().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: BTreeMap<VarKey, f64> = BTreeMap::new();
    let mut hits = 0u64;
    for _ in 0..draws {
        for &k in &keys {
            values.insert(k, rng.gen());
        }
        if expr.eval(&|key, c| values[&key] > c) {
            hits += 1;
        }
    }
    Ok(hits as f64 / draws.max(1) as f64)
}

/// Event `{margin has an upcrossing of level u at time i}`, i.e. the margin
/// sits at or below `u` at `i` and above it at `i + 1`.
///
/// Compiled form: AND over `{Y_{i+l} <= u}` for the row-`i` innovations,
/// conjoined with OR over `{Y_{i+1+l} > u}` restricted to row-`i+1`
/// innovations not already pinned below `u` by the AND part (shared
/// innovations cannot carry the exceedance). Atoms live on the margin's
/// stream, so compiled events from margins on distinct streams reference
/// distinct variables exactly as the generator does.
pub fn upcrossing_event(spec: &ProcessSpec, margin: usize, i: i64, u: f64) -> EventExpr {
    let lag_set = spec.lag_set(margin);
    let stream = spec.stream(margin);
    let row_i: Vec<i64> = lag_set.iter().map(|l| i + l).collect();
    let mut terms: Vec<EventExpr> = row_i
        .iter()
        .map(|&t| EventExpr::at_most_on(stream, t, u))
        .collect();
    let fresh: Vec<EventExpr> = lag_set
        .iter()
        .map(|l| i + 1 + l)
        .filter(|t| !row_i.contains(t))
        .map(|t| EventExpr::above_on(stream, t, u))
        .collect();
    terms.push(EventExpr::or(fresh));
    EventExpr::and(terms)
}

/// Event `{margin exceeds level u at time i}`.
pub fn exceedance_event(spec: &ProcessSpec, margin: usize, i: i64, u: f64) -> EventExpr {
    let stream = spec.stream(margin);
    EventExpr::or(
        spec.lag_set(margin)
            .iter()
            .map(|l| EventExpr::above_on(stream, i + l, u))
            .collect(),
    )
}

/// Exact probability of an arbitrary predicate over a window's upcrossing
/// marks and exceedances, rows `1..=n` of every margin.
///
/// The predicate receives `marks[i][j]` (upcrossing of margin `j` at time
/// `i + 1`) and `exceeds[i][j]` (margin `j` above its level at time
/// `i + 1`). All joint interval assignments of the window's innovations,
/// cut at every margin's level, decide both matrices exactly.
pub fn exact_window_prob(
    spec: &ProcessSpec,
    levels: &[f64],
    n: usize,
    predicate: impl Fn(&[Vec<bool>], &[Vec<bool>]) -> bool,
) -> Result<f64> {
    let d = spec.d();
    assert_eq!(levels.len(), d, "one level per margin");
    // cut each stream's innovations at the levels of the margins riding it
    let mut cuts: BTreeMap<VarKey, Vec<f64>> = BTreeMap::new();
    for (j, &u) in levels.iter().enumerate() {
        if !u.is_finite() {
            return Err(OracleError::BadThreshold { value: u });
        }
        let s = spec.stream(j);
        let (lo, hi) = spec.stream_innovation_range(s, n);
        for t in lo..=hi {
            cuts.entry((s, t)).or_default().push(u.clamp(0.0, 1.0));
        }
    }
    for thresholds in cuts.values_mut() {
        thresholds.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        thresholds.dedup();
    }
    let count = cuts.len();
    let (parts, cells) = build_partitions(cuts);
    if count > MAX_INDICES || cells > MAX_CELLS {
        return Err(OracleError::BudgetExceeded {
            indices: count,
            cells,
            max_indices: MAX_INDICES,
            max_cells: MAX_CELLS,
        });
    }
    let position: BTreeMap<VarKey, usize> =
        parts.iter().enumerate().map(|(v, p)| (p.key, v)).collect();
    let mut assignment = vec![0usize; parts.len()];
    let mut total = Compensated::default();
    let mut marks = vec![vec![false; d]; n];
    let mut exceeds_rows = vec![vec![false; d]; n + 1];
    enumerate(
        &parts,
        0,
        1.0,
        &mut assignment,
        &mut |assignment, weight| {
            // value of Y_t is "its interval", decided against level u by lo >= u
            let above = |key: VarKey, u: f64| -> bool {
                let v = position[&key];
                parts[v].bounds[assignment[v]] >= u
            };
            for (row, flags) in exceeds_rows.iter_mut().enumerate() {
                let i = row as i64 + 1;
                for (j, flag) in flags.iter_mut().enumerate() {
                    let s = spec.stream(j);
                    *flag = spec.lag_set(j).iter().any(|l| above((s, i + l), levels[j]));
                }
            }
            for (row, flags) in marks.iter_mut().enumerate() {
                for (j, flag) in flags.iter_mut().enumerate() {
                    *flag = !exceeds_rows[row][j] && exceeds_rows[row + 1][j];
                }
            }
            if predicate(&marks, &exceeds_rows[..n]) {
                total.add(weight);
            }
        },
    );
    Ok(total.sum)
}

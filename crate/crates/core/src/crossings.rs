//! Level tracking across ℏ_η and detection/classification of level
//! crossings.
//!
//! Different-parity crossings (the coherent-destruction-of-tunneling
//! points) are located as sign changes of the wrapped phase difference
//! between tracked levels of opposite parity and refined by bisection.
//! Same-parity candidates are local minima of the circular gap along
//! tracked trajectories, refined by golden-section minimization; the
//! refined minimal gap separates true crossings from avoided ones.

use std::rc::Rc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floquet::{FloquetAssembler, FloquetError, ModelParams, Variant};
use crate::linalg::{circular_distance, circular_spread, wrapped_difference};
use crate::spectrum::{eigenphases, ButterflyDataset, EigenphaseSet, ParityLabel, SpectrumError};
use crate::{CMat, HETA_PERIOD};

#[derive(Debug, Error)]
pub enum CrossingError {
    #[error("dataset was computed without eigenvectors; tracking needs them")]
    MissingVectors,
    #[error("ambiguous tracking at grid index {grid_index}: max matched overlap {overlap:.3} < 0.7; refine the grid")]
    AmbiguousTracking { grid_index: usize, overlap: f64 },
    #[error("refinement budget exceeded ({spent} refinements); partial results attached")]
    RefinementBudgetExceeded { spent: usize, partial: Vec<CrossingRecord> },
    #[error("J too large for exhaustive crossing scan: 2J = {two_j} > {max_two_j} (raise the limit explicitly)")]
    JTooLarge { two_j: u32, max_two_j: u32 },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Floquet(#[from] FloquetError),
}

/// What a refined degeneracy turned out to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingKind {
    DifferentParity,
    SameParity,
    Avoided,
    /// The all-level degeneracy at ℏ_η = 2π for integer J, recorded once
    /// instead of as C(2J+1, 2) pair records.
    Collapse,
}

impl std::fmt::Display for CrossingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CrossingKind::DifferentParity => write!(f, "different-parity"),
            CrossingKind::SameParity => write!(f, "same-parity"),
            CrossingKind::Avoided => write!(f, "avoided"),
            CrossingKind::Collapse => write!(f, "collapse"),
        }
    }
}

/// Which sectors the two levels belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectorPair {
    EvenOdd,
    EvenEven,
    OddOdd,
    /// Variant XY: no parity split is available.
    Unresolved,
}

impl std::fmt::Display for SectorPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SectorPair::EvenOdd => write!(f, "even-odd"),
            SectorPair::EvenEven => write!(f, "even-even"),
            SectorPair::OddOdd => write!(f, "odd-odd"),
            SectorPair::Unresolved => write!(f, "unresolved"),
        }
    }
}

/// A located level degeneracy (true or avoided).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub heta_star: f64,
    pub kind: CrossingKind,
    pub sector_pair: SectorPair,
    /// Level indices within their sector(s), in phase-sorted order at the
    /// refinement bracket start; `None` for the collapse record, which
    /// involves every level.
    pub level_ids: Option<(usize, usize)>,
    /// Upper bound on the minimal circular phase gap at heta_star.
    pub gap_bound: f64,
    /// Set by [`crossing_alpha_independent`]; `None` when not tested.
    pub alpha_independent: Option<bool>,
}

/// Scan tuning. Defaults follow the documented conventions: grid spacing
/// 4π/(c·J³) with c = 10, 60 refinement steps, τ_true = 1e−10 (between the
/// eigenphase accuracy ~1e−13 and the smallest observed avoided gaps
/// ~1e−6), dedup radius 1e−9.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub density_multiplier: f64,
    pub max_refine_steps: usize,
    pub tau_true: f64,
    pub dedup_tol: f64,
    /// Same-parity minima are refined when the sampled gap is below
    /// prefilter + 4·(local slope)·h.
    pub gap_prefilter: f64,
    /// Refuse scans above this 2J unless raised (exhaustive detection gets
    /// numerically demanding beyond J ≈ 12).
    pub max_two_j: u32,
    pub max_refinements: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            density_multiplier: 10.0,
            max_refine_steps: 60,
            tau_true: 1e-10,
            dedup_tol: 1e-9,
            gap_prefilter: 1e-3,
            max_two_j: 24,
            max_refinements: 2_000_000,
        }
    }
}

/// Sector selection for [`find_crossings`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectorSelect {
    All,
    /// Same-parity pairs within the even sector only.
    Even,
    /// Same-parity pairs within the odd sector only.
    Odd,
    /// Different-parity (even, odd) pairs only.
    Cross,
}

impl SectorSelect {
    fn wants_even(&self) -> bool {
        matches!(self, SectorSelect::All | SectorSelect::Even)
    }
    fn wants_odd(&self) -> bool {
        matches!(self, SectorSelect::All | SectorSelect::Odd)
    }
    fn wants_cross(&self) -> bool {
        matches!(self, SectorSelect::All | SectorSelect::Cross)
    }
}

/// Classification rule: a refined gap at or below τ_true is a true
/// crossing (boundary inclusive), typed by its sector pair; anything
/// larger is avoided.
pub fn classify_crossing(gap_bound: f64, sector_pair: SectorPair, tau_true: f64) -> CrossingKind {
    if gap_bound <= tau_true {
        match sector_pair {
            SectorPair::EvenOdd => CrossingKind::DifferentParity,
            _ => CrossingKind::SameParity,
        }
    } else {
        CrossingKind::Avoided
    }
}

// ---------------------------------------------------------------------------
// Assignment (optimal bipartite matching on eigenvector overlaps)
// ---------------------------------------------------------------------------

/// |⟨prev_i|cur_j⟩|² matrix between two eigenvector column sets.
fn overlap_sq_matrix(prev: &CMat, cur: &CMat) -> Vec<Vec<f64>> {
    let n = prev.ncols();
    let rows = prev.nrows();
    let mut o = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = num_complex::Complex64::new(0.0, 0.0);
            for r in 0..rows {
                s += prev[(r, i)].conj() * cur[(r, j)];
            }
            o[i][j] = s.norm_sqr();
        }
    }
    o
}

/// Hungarian algorithm (shortest augmenting paths with potentials):
/// assignment row → col maximizing the total score.
fn hungarian_max(score: &[Vec<f64>]) -> Vec<usize> {
    let n = score.len();
    if n == 0 {
        return Vec::new();
    }
    // Minimize cost = max_score − score.
    let top = score
        .iter()
        .flat_map(|r| r.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    let cost = |i: usize, j: usize| top - score[i][j];

    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row assigned to column j (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Match the columns of `cur` against `prev`; returns (perm, min matched
/// amplitude overlap), where perm[i] is the `cur` index continuing
/// trajectory slot i of `prev`.
fn match_columns(prev: &CMat, cur: &CMat) -> (Vec<usize>, f64) {
    let o = overlap_sq_matrix(prev, cur);
    let assign = hungarian_max(&o);
    let min_overlap = assign
        .iter()
        .enumerate()
        .map(|(i, &j)| o[i][j].sqrt())
        .fold(f64::INFINITY, f64::min);
    (assign, min_overlap)
}

// ---------------------------------------------------------------------------
// Public tracking over a precomputed dataset
// ---------------------------------------------------------------------------

/// Continuous eigenphase trajectories over a butterfly dataset.
#[derive(Debug, Clone)]
pub struct TrackedLevels {
    pub grid: Vec<f64>,
    /// trajectories[level][grid_index]
    pub trajectories: Vec<Vec<f64>>,
    /// Parity label per trajectory (from the first column).
    pub parities: Vec<ParityLabel>,
    /// Smallest matched eigenvector overlap amplitude seen between
    /// adjacent columns.
    pub min_overlap: f64,
}

/// Threshold below which an adjacent-column matching is refused.
pub const TRACKING_OVERLAP_MIN: f64 = 0.7;

/// Connect levels across dataset columns by maximizing total squared
/// eigenvector overlap between adjacent grid points.
pub fn track_levels(ds: &ButterflyDataset) -> Result<TrackedLevels, CrossingError> {
    let n_cols = ds.columns.len();
    assert!(n_cols >= 1, "empty dataset");
    let n_levels = ds.columns[0].len();
    let first_vectors = ds.columns[0].vectors.as_ref().ok_or(CrossingError::MissingVectors)?;
    let mut trajectories: Vec<Vec<f64>> = (0..n_levels)
        .map(|i| {
            let mut t = Vec::with_capacity(n_cols);
            t.push(ds.columns[0].phases[i]);
            t
        })
        .collect();
    let parities = ds.columns[0].parities.clone();
    let mut prev_vectors: CMat = first_vectors.clone();
    // slot_to_col[i] = column-level index currently continuing slot i
    let mut slot_to_col: Vec<usize> = (0..n_levels).collect();
    let mut min_overlap = f64::INFINITY;
    for k in 1..n_cols {
        let col = &ds.columns[k];
        let vectors = col.vectors.as_ref().ok_or(CrossingError::MissingVectors)?;
        let (assign, quality) = match_columns(&prev_vectors, vectors);
        if quality < TRACKING_OVERLAP_MIN {
            return Err(CrossingError::AmbiguousTracking { grid_index: k, overlap: quality });
        }
        min_overlap = min_overlap.min(quality);
        let mut new_prev = prev_vectors.clone();
        let mut new_slot = slot_to_col.clone();
        for slot in 0..n_levels {
            // prev_vectors column order follows slots, so assign[slot]
            // continues slot directly.
            let j = assign[slot];
            trajectories[slot].push(col.phases[j]);
            new_prev.set_column(slot, &vectors.column(j));
            new_slot[slot] = j;
        }
        prev_vectors = new_prev;
        slot_to_col = new_slot;
    }
    Ok(TrackedLevels { grid: ds.grid.clone(), trajectories, parities, min_overlap })
}

// ---------------------------------------------------------------------------
// Crossing scan
// ---------------------------------------------------------------------------

/// One diagonalized grid point in trajectory order (per sector).
#[derive(Clone)]
struct Column {
    t: f64,
    /// Per sector: phases in trajectory-slot order.
    phases: Vec<Vec<f64>>,
    /// Per sector: eigenvector columns in trajectory-slot order.
    vectors: Vec<CMat>,
}

/// Sector layout of a scan: labels per sector index.
struct Sectors {
    labels: Vec<ParityLabel>,
}

fn eval_sets(assembler: &FloquetAssembler, t: f64) -> Result<Vec<EigenphaseSet>, SpectrumError> {
    match assembler.block_operators_at(t) {
        Some((be, bo)) => Ok(vec![eigenphases(&be, true)?, eigenphases(&bo, true)?]),
        None => Ok(vec![eigenphases(&assembler.operator_at(t), true)?]),
    }
}

/// Diagonalize at t and order each sector by matching against a reference
/// column; falls back to sorted order when no reference is given.
fn eval_column(
    assembler: &FloquetAssembler,
    t: f64,
    reference: Option<&Column>,
) -> Result<(Column, f64), SpectrumError> {
    let sets = eval_sets(assembler, t)?;
    let mut phases = Vec::with_capacity(sets.len());
    let mut vectors = Vec::with_capacity(sets.len());
    let mut quality = f64::INFINITY;
    for (s, set) in sets.into_iter().enumerate() {
        let v = set.vectors.expect("vectors requested");
        match reference {
            None => {
                phases.push(set.phases);
                vectors.push(v);
            }
            Some(r) => {
                let (assign, q) = match_columns(&r.vectors[s], &v);
                quality = quality.min(q);
                let mut ph = vec![0.0; set.phases.len()];
                let mut vm = CMat::zeros(v.nrows(), v.ncols());
                for slot in 0..assign.len() {
                    ph[slot] = set.phases[assign[slot]];
                    vm.set_column(slot, &v.column(assign[slot]));
                }
                phases.push(ph);
                vectors.push(vm);
            }
        }
    }
    Ok((Column { t, phases, vectors }, quality))
}

/// Advance from `prev` to `t`, subdividing when the eigenvectors rotate too
/// fast for a confident matching. Returns the new column in slot order.
fn advance_column(
    assembler: &FloquetAssembler,
    prev: &Column,
    t: f64,
    depth: usize,
) -> Result<Column, SpectrumError> {
    let (col, quality) = eval_column(assembler, t, Some(prev))?;
    if quality >= TRACKING_OVERLAP_MIN || depth == 0 {
        // Near an exact degeneracy (e.g. the 2π collapse) the overlap can
        // stay low at any resolution; accept the best matching then.
        return Ok(col);
    }
    let mid = 0.5 * (prev.t + t);
    if mid <= prev.t || mid >= t {
        return Ok(col);
    }
    let bridge = advance_column(assembler, prev, mid, depth - 1)?;
    advance_column(assembler, &bridge, t, depth - 1)
}

struct PendingEvent {
    sector_pair: SectorPair,
    /// The two levels as (sector, slot in the reference column).
    a: (usize, usize),
    b: (usize, usize),
    /// Bracket [lo, hi] (for cross-parity: a sign change; for same parity:
    /// a discrete local minimum centered in the bracket).
    lo: f64,
    hi: f64,
    /// Bisect a sign change (true) or golden-section a gap minimum (false).
    is_cross: bool,
    /// Whether a minimum that refines above τ_true is worth a record.
    /// Same-parity minima are (they are avoided crossings); cross-parity
    /// minima are only tracked to catch crossings that a label swap at a
    /// coincident same-parity degeneracy hides from the sign detector.
    record_avoided: bool,
    /// The scan column at `lo`, in the scan's tracked ordering: slot
    /// indices stay valid no matter how many crossings happened earlier.
    reference: Rc<Column>,
}

/// rank_of[slot] = position of the slot's phase in ascending sorted order.
fn sorted_ranks(phases: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..phases.len()).collect();
    order.sort_by(|&a, &b| phases[a].total_cmp(&phases[b]));
    let mut ranks = vec![0usize; phases.len()];
    for (rank, &slot) in order.iter().enumerate() {
        ranks[slot] = rank;
    }
    ranks
}

fn scan_chunk(
    assembler: &FloquetAssembler,
    sectors: &Sectors,
    select: SectorSelect,
    lo: f64,
    hi: f64,
    step: f64,
    cfg: &ScanConfig,
    refinements: &mut usize,
) -> Result<Vec<CrossingRecord>, CrossingError> {
    let n_steps = ((hi - lo) / step).round() as usize;
    let mut records = Vec::new();
    let mut events: Vec<PendingEvent> = Vec::new();

    let (col0, _) = eval_column(assembler, lo, None)?;
    let mut window: Vec<Column> = vec![col0];

    let n_sectors = sectors.labels.len();
    let sector_pair_of = |s: usize| -> SectorPair {
        match sectors.labels[s] {
            ParityLabel::Even => SectorPair::EvenEven,
            ParityLabel::Odd => SectorPair::OddOdd,
            ParityLabel::Unresolved => SectorPair::Unresolved,
        }
    };
    let sector_selected = |s: usize| -> bool {
        match sectors.labels[s] {
            ParityLabel::Even => select.wants_even(),
            ParityLabel::Odd => select.wants_odd(),
            ParityLabel::Unresolved => !matches!(select, SectorSelect::Cross),
        }
    };

    for k in 1..=n_steps {
        let t = lo + k as f64 * step;
        let cur = advance_column(assembler, window.last().unwrap(), t, 12)?;
        // Cross-parity sign changes over [prev, cur].
        if select.wants_cross() && n_sectors == 2 {
            let prev = Rc::new(window.last().unwrap().clone());
            let ranks: Vec<Vec<usize>> = prev.phases.iter().map(|p| sorted_ranks(p)).collect();
            for i in 0..prev.phases[0].len() {
                for j in 0..prev.phases[1].len() {
                    let d0 = wrapped_difference(prev.phases[0][i], prev.phases[1][j]);
                    let d1 = wrapped_difference(cur.phases[0][i], cur.phases[1][j]);
                    if d0 == 0.0 {
                        records.push(CrossingRecord {
                            heta_star: prev.t,
                            kind: classify_crossing(0.0, SectorPair::EvenOdd, cfg.tau_true),
                            sector_pair: SectorPair::EvenOdd,
                            level_ids: Some((ranks[0][i], ranks[1][j])),
                            gap_bound: 0.0,
                            alpha_independent: None,
                        });
                    } else if d0.signum() != d1.signum() && d0.abs() < 1.0 && d1.abs() < 1.0 {
                        events.push(PendingEvent {
                            sector_pair: SectorPair::EvenOdd,
                            a: (0, i),
                            b: (1, j),
                            lo: prev.t,
                            hi: t,
                            is_cross: true,
                            record_avoided: false,
                            reference: Rc::clone(&prev),
                        });
                    }
                }
            }
        }
        window.push(cur);
        // Same-parity local minima need a three-column window.
        if window.len() == 3 {
            let left = Rc::new(window[0].clone());
            for s in 0..n_sectors {
                if !sector_selected(s) {
                    continue;
                }
                let n = window[0].phases[s].len();
                for i in 0..n {
                    for j in (i + 1)..n {
                        let g0 = circular_distance(window[0].phases[s][i], window[0].phases[s][j]);
                        let g1 = circular_distance(window[1].phases[s][i], window[1].phases[s][j]);
                        let g2 = circular_distance(window[2].phases[s][i], window[2].phases[s][j]);
                        if g1 <= g0 && g1 <= g2 {
                            let slope = (g0 - g1).max(g2 - g1) / step;
                            if g1 <= cfg.gap_prefilter + 4.0 * slope * step {
                                events.push(PendingEvent {
                                    sector_pair: sector_pair_of(s),
                                    a: (s, i),
                                    b: (s, j),
                                    lo: window[0].t,
                                    hi: window[2].t,
                                    is_cross: false,
                                    record_avoided: true,
                                    reference: Rc::clone(&left),
                                });
                            }
                        }
                    }
                }
            }
            // Cross-parity gap minima: a crossing coinciding with a
            // same-parity degeneracy swaps the tracked labels and leaves
            // no sign change, but still shows up as a gap minimum.
            if select.wants_cross() && n_sectors == 2 {
                let ne = window[0].phases[0].len();
                let no = window[0].phases[1].len();
                for i in 0..ne {
                    for j in 0..no {
                        let g0 = circular_distance(window[0].phases[0][i], window[0].phases[1][j]);
                        let g1 = circular_distance(window[1].phases[0][i], window[1].phases[1][j]);
                        let g2 = circular_distance(window[2].phases[0][i], window[2].phases[1][j]);
                        if g1 <= g0 && g1 <= g2 {
                            let slope = (g0 - g1).max(g2 - g1) / step;
                            if g1 <= cfg.gap_prefilter + 4.0 * slope * step {
                                events.push(PendingEvent {
                                    sector_pair: SectorPair::EvenOdd,
                                    a: (0, i),
                                    b: (1, j),
                                    lo: window[0].t,
                                    hi: window[2].t,
                                    is_cross: false,
                                    record_avoided: false,
                                    reference: Rc::clone(&left),
                                });
                            }
                        }
                    }
                }
            }
            window.remove(0);
        }
    }

    for ev in events {
        *refinements += 1;
        if *refinements > cfg.max_refinements {
            return Err(CrossingError::RefinementBudgetExceeded { spent: *refinements, partial: records });
        }
        if let Some(rec) = refine_event(assembler, &ev, cfg)? {
            records.push(rec);
        }
    }
    Ok(records)
}

/// Wrapped difference (cross) or circular gap (same-parity) of the tracked
/// pair at t, matched against the reference column.
fn pair_value_at(
    assembler: &FloquetAssembler,
    reference: &Column,
    t: f64,
    ev: &PendingEvent,
) -> Result<(f64, Column), SpectrumError> {
    let (col, _) = eval_column(assembler, t, Some(reference))?;
    let pa = col.phases[ev.a.0][ev.a.1];
    let pb = col.phases[ev.b.0][ev.b.1];
    let v = if ev.is_cross { wrapped_difference(pa, pb) } else { circular_distance(pa, pb) };
    Ok((v, col))
}

fn refine_event(
    assembler: &FloquetAssembler,
    ev: &PendingEvent,
    cfg: &ScanConfig,
) -> Result<Option<CrossingRecord>, CrossingError> {
    let reference = &*ev.reference;
    // Record level indices in phase-sorted order at the bracket start, so
    // a record's identity is reproducible independent of scan history.
    let rank_a = sorted_ranks(&reference.phases[ev.a.0])[ev.a.1];
    let rank_b = sorted_ranks(&reference.phases[ev.b.0])[ev.b.1];
    let level_ids = if ev.a.0 == ev.b.0 {
        Some((rank_a.min(rank_b), rank_a.max(rank_b)))
    } else {
        Some((rank_a, rank_b))
    };
    if ev.is_cross {
        // Bisection on the sign of the wrapped difference.
        let mut d_lo = wrapped_difference(
            reference.phases[ev.a.0][ev.a.1],
            reference.phases[ev.b.0][ev.b.1],
        );
        let (d_hi, _) = pair_value_at(assembler, reference, ev.hi, ev)?;
        if d_lo.signum() == d_hi.signum() {
            return Ok(None); // tracking glitch; not a sign change after all
        }
        let (mut a, mut b) = (ev.lo, ev.hi);
        let mut best_t = a;
        let mut best_gap = d_lo.abs();
        for _ in 0..cfg.max_refine_steps {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let (d_mid, _) = pair_value_at(assembler, reference, mid, ev)?;
            if d_mid.abs() < best_gap {
                best_gap = d_mid.abs();
                best_t = mid;
            }
            if d_mid.abs() <= 1e-12 {
                break;
            }
            if d_mid.signum() == d_lo.signum() {
                a = mid;
                d_lo = d_mid;
            } else {
                b = mid;
            }
        }
        Ok(Some(CrossingRecord {
            heta_star: best_t,
            kind: classify_crossing(best_gap, ev.sector_pair, cfg.tau_true),
            sector_pair: ev.sector_pair,
            level_ids,
            gap_bound: best_gap,
            alpha_independent: None,
        }))
    } else {
        // Golden-section minimization of the circular gap.
        let inv_phi = 0.618_033_988_749_894_9f64;
        let (mut a, mut b) = (ev.lo, ev.hi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, _) = pair_value_at(assembler, reference, c, ev)?;
        let (mut fd, _) = pair_value_at(assembler, reference, d, ev)?;
        let mut best_t = if fc <= fd { c } else { d };
        let mut best_gap = fc.min(fd);
        for _ in 0..cfg.max_refine_steps {
            if (b - a) < 1e-13 {
                break;
            }
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                let (v, _) = pair_value_at(assembler, reference, c, ev)?;
                fc = v;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                let (v, _) = pair_value_at(assembler, reference, d, ev)?;
                fd = v;
            }
            if fc.min(fd) < best_gap {
                best_gap = fc.min(fd);
                best_t = if fc <= fd { c } else { d };
            }
        }
        let kind = classify_crossing(best_gap, ev.sector_pair, cfg.tau_true);
        if kind == CrossingKind::Avoided && !ev.record_avoided {
            return Ok(None);
        }
        Ok(Some(CrossingRecord {
            heta_star: best_t,
            kind,
            sector_pair: ev.sector_pair,
            level_ids,
            gap_bound: best_gap,
            alpha_independent: None,
        }))
    }
}

/// Scan a ℏ_η range for level crossings of the given sectors.
///
/// The initial uniform grid has spacing 4π/(c·J³); cross-parity sign
/// changes are bisected and same-parity gap minima golden-sectioned, to
/// 1e−12 resolution. Records closer than the dedup radius (same pair and
/// sectors) are merged. For integer J the all-level collapse at 2π is
/// reported as a single [`CrossingKind::Collapse`] record.
pub fn find_crossings(
    params: &ModelParams,
    select: SectorSelect,
    range: (f64, f64),
    cfg: &ScanConfig,
) -> Result<Vec<CrossingRecord>, CrossingError> {
    if params.two_j > cfg.max_two_j {
        return Err(CrossingError::JTooLarge { two_j: params.two_j, max_two_j: cfg.max_two_j });
    }
    let assembler = FloquetAssembler::new(params)?;
    let sectors = match params.variant {
        Variant::Xx => Sectors { labels: vec![ParityLabel::Even, ParityLabel::Odd] },
        Variant::Xy => Sectors { labels: vec![ParityLabel::Unresolved] },
    };
    let (lo, hi) = range;
    assert!(hi > lo, "empty scan range");
    let j = params.j();
    let step_target = HETA_PERIOD / (cfg.density_multiplier * j * j * j).max(16.0);
    let n_steps = ((hi - lo) / step_target).ceil().max(8.0) as usize;
    let step = (hi - lo) / n_steps as f64;

    // Fixed chunking (independent of thread count) keeps results
    // deterministic; chunks overlap by 3 steps so window-edge events are
    // seen by at least one chunk, and global dedup removes doubles.
    let n_chunks = ((n_steps / 512).max(1)).min(64);
    let per_chunk = n_steps / n_chunks + 1;
    let chunk_bounds: Vec<(f64, f64)> = (0..n_chunks)
        .map(|c| {
            let a = lo + (c * per_chunk) as f64 * step;
            let b = (lo + ((c + 1) * per_chunk + 3) as f64 * step).min(hi);
            (a - 3.0 * step, b)
        })
        .map(|(a, b)| (a.max(lo), b))
        .collect();

    let results: Vec<Result<(Vec<CrossingRecord>, usize), CrossingError>> = chunk_bounds
        .par_iter()
        .map(|&(a, b)| {
            let mut refinements = 0usize;
            scan_chunk(&assembler, &sectors, select, a, b, step, cfg, &mut refinements)
                .map(|r| (r, refinements))
        })
        .collect();
    let mut records = Vec::new();
    let mut total_refinements = 0usize;
    for r in results {
        let (mut recs, n) = r?;
        records.append(&mut recs);
        total_refinements += n;
        if total_refinements > cfg.max_refinements {
            return Err(CrossingError::RefinementBudgetExceeded { spent: total_refinements, partial: records });
        }
    }

    // Keep records inside [lo, hi).
    records.retain(|r| r.heta_star >= lo - 1e-12 && r.heta_star < hi);

    // Collapse handling for integer J: every pair meets at 2π, which is
    // recorded once.
    let two_pi = std::f64::consts::TAU;
    if params.two_j % 2 == 0 && lo <= two_pi && two_pi < hi {
        let spread = collapse_spread(&assembler, two_pi)?;
        if spread <= 1e-10 {
            let radius = 1e-7;
            records.retain(|r| (r.heta_star - two_pi).abs() > radius);
            records.push(CrossingRecord {
                heta_star: two_pi,
                kind: CrossingKind::Collapse,
                sector_pair: SectorPair::Unresolved,
                level_ids: None,
                gap_bound: spread,
                alpha_independent: None,
            });
        }
    }

    dedup_records(&mut records, cfg.dedup_tol);
    Ok(records)
}

fn collapse_spread(assembler: &FloquetAssembler, at: f64) -> Result<f64, SpectrumError> {
    let sets = eval_sets(assembler, at)?;
    let phases: Vec<f64> = sets.iter().flat_map(|s| s.phases.iter().copied()).collect();
    Ok(circular_spread(&phases))
}

fn dedup_records(records: &mut Vec<CrossingRecord>, tol: f64) {
    records.sort_by(|a, b| {
        (a.sector_pair as usize, a.level_ids, a.heta_star)
            .partial_cmp(&(b.sector_pair as usize, b.level_ids, b.heta_star))
            .unwrap()
    });
    let mut out: Vec<CrossingRecord> = Vec::with_capacity(records.len());
    for r in records.drain(..) {
        if let Some(last) = out.last_mut() {
            if last.sector_pair == r.sector_pair
                && last.level_ids == r.level_ids
                && (last.heta_star - r.heta_star).abs() <= tol
            {
                if r.gap_bound < last.gap_bound {
                    *last = r;
                }
                continue;
            }
        }
        out.push(r);
    }
    out.sort_by(|a, b| a.heta_star.total_cmp(&b.heta_star));
    *records = out;
}

/// Count true crossings of the requested families (ignores records of kind
/// avoided and the collapse record).
pub fn count_true_crossings(records: &[CrossingRecord]) -> (usize, usize) {
    let diff = records.iter().filter(|r| r.kind == CrossingKind::DifferentParity).count();
    let same = records.iter().filter(|r| r.kind == CrossingKind::SameParity).count();
    (diff, same)
}

/// Re-detect a known crossing at several rotation strengths: true when a
/// true crossing of the same sector family is found within `tol` of
/// `heta_star` for every supplied αJ.
pub fn crossing_alpha_independent(
    base: &ModelParams,
    heta_star: f64,
    select: SectorSelect,
    alpha_scaled_values: &[f64],
    cfg: &ScanConfig,
    tol: f64,
) -> Result<bool, CrossingError> {
    for &alpha_scaled in alpha_scaled_values {
        let p = ModelParams { alpha_scaled, ..base.clone() };
        let w = 64.0 * 1e-5;
        let records = find_crossings(&p, select, (heta_star - w, heta_star + w), cfg)?;
        let hit = records.iter().any(|r| {
            matches!(r.kind, CrossingKind::SameParity | CrossingKind::DifferentParity)
                && (r.heta_star - heta_star).abs() <= tol
        });
        if !hit {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Power-law fit: count ∝ J^exponent via least squares in log–log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub stderr: f64,
}

/// Fit log(count) against log(J). Needs at least five distinct J values
/// with nonzero counts.
pub fn scaling_fit(points: &[(f64, usize)]) -> ScalingFit {
    assert!(points.len() >= 5, "need ≥ 5 J values for a scaling fit");
    let xs: Vec<f64> = points.iter().map(|(j, _)| j.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, c)| (*c as f64).max(1e-300).ln()).collect();
    let (slope, _r2, se) = crate::fractal::linear_fit(&xs, &ys);
    ScalingFit { exponent: slope, stderr: se }
}

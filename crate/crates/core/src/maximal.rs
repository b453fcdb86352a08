//! Centered Hardy-Littlewood, fractional and cut-off maximal operators on a grid.
//!
//! A discrete ball `B_ρ(x)` is the set of cells whose centers lie within `ρ` of the
//! center of cell `x`. Radii range over `h/2` (the cell itself) and every lattice
//! distance `h√m`, `m = a² + b² > 0`, up to the grid diameter. The average over a
//! ball divides by its full lattice count, so `f` is taken to vanish off the grid.
//!
//! For a center, the ball sum `S` only changes at radii where support cells appear,
//! so the supremum of `ρ^α S / count` over a radius range is the maximum over those
//! events of `S` times a range maximum of the weights `ρ^α / count`. Ball sums
//! accumulate cell values in `(distance², cell index)` order; with nonnegative `S`
//! rounding is monotone, so the event form returns exactly the same floating-point
//! value as a radius-by-radius scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::CellField;
use crate::grid::{Grid, DIM};
use crate::parallel;

/// Radius restriction of a maximal operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "r", rename_all = "lowercase")]
pub enum Mode {
    /// All radii.
    Full,
    /// Radii `ρ < r`.
    Cutoff(f64),
    /// Radii `ρ ≥ r`.
    Tail(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximalQuery {
    pub alpha: f64,
    pub mode: Mode,
}

impl MaximalQuery {
    pub fn full(alpha: f64) -> Self {
        MaximalQuery { alpha, mode: Mode::Full }
    }

    pub fn cutoff(r: f64, alpha: f64) -> Self {
        MaximalQuery { alpha, mode: Mode::Cutoff(r) }
    }

    pub fn tail(r: f64, alpha: f64) -> Self {
        MaximalQuery { alpha, mode: Mode::Tail(r) }
    }

    fn validate(&self) -> Result<()> {
        check_order(self.alpha)?;
        match self.mode {
            Mode::Full => Ok(()),
            Mode::Cutoff(r) | Mode::Tail(r) if r > 0.0 => Ok(()),
            _ => Err(Error::InvalidParams("cut-off radius must be positive".into())),
        }
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if (0.0..DIM as f64).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidOrder { alpha, n: DIM })
    }
}

/// Sorted radii of a grid with their lattice ball counts.
#[derive(Debug, Clone)]
pub struct RadiusSet {
    pub h: f64,
    /// Squared radius in units of `h²`; entry 0 is the single-cell ball.
    pub m: Vec<u32>,
    pub rho: Vec<f64>,
    /// Lattice points of `ℤ²` inside the ball.
    pub count: Vec<u64>,
    /// Index of the largest radius with `m_k ≤ m`, for every `m` up to the cap.
    index_of: Vec<u32>,
}

impl RadiusSet {
    pub fn new(grid: &Grid) -> Self {
        let cap = ((grid.nx - 1).pow(2) + (grid.ny - 1).pow(2)) as usize;
        let side = (cap as f64).sqrt().ceil() as i64 + 1;
        let mut hist = vec![0u64; cap + 1];
        for a in -side..=side {
            for b in -side..=side {
                let m = (a * a + b * b) as usize;
                if m <= cap {
                    hist[m] += 1;
                }
            }
        }
        let mut m_list = vec![0u32];
        let mut count = vec![1u64];
        let mut index_of = vec![0u32; cap + 1];
        let mut running = 1u64;
        for (m, &c) in hist.iter().enumerate().skip(1) {
            if c > 0 {
                running += c;
                m_list.push(m as u32);
                count.push(running);
            }
            index_of[m] = (m_list.len() - 1) as u32;
        }
        let h = grid.h;
        let rho = m_list.iter().map(|&m| if m == 0 { 0.5 * h } else { h * (m as f64).sqrt() }).collect();
        RadiusSet { h, m: m_list, rho, count, index_of }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn max_m(&self) -> u32 {
        (self.index_of.len() - 1) as u32
    }

    #[inline]
    pub fn index_of(&self, m: u32) -> usize {
        self.index_of[m as usize] as usize
    }

    /// Weights `ρ_k^α / count_k`.
    pub fn weights(&self, alpha: f64) -> Vec<f64> {
        self.rho.iter().zip(&self.count).map(|(&r, &c)| r.powf(alpha) / c as f64).collect()
    }

    /// Inclusive index range allowed by `mode`, or `None` when empty.
    pub fn range(&self, mode: Mode) -> Option<(usize, usize)> {
        let n = self.len();
        let (lo, hi) = match mode {
            Mode::Full => (0, n),
            Mode::Cutoff(r) => (0, self.rho.partition_point(|&x| x < r)),
            Mode::Tail(r) => (self.rho.partition_point(|&x| x < r), n),
        };
        (lo < hi).then(|| (lo, hi - 1))
    }
}

/// Sparse table for range maxima of a fixed weight sequence.
struct RangeMax {
    levels: Vec<Vec<f64>>,
}

impl RangeMax {
    fn new(w: Vec<f64>) -> Self {
        let mut levels = vec![w];
        let mut span = 1;
        while 2 * span <= levels[0].len() {
            let prev = levels.last().unwrap();
            let next = (0..prev.len() - span).map(|i| prev[i].max(prev[i + span])).collect();
            levels.push(next);
            span *= 2;
        }
        RangeMax { levels }
    }

    /// Maximum over `lo..=hi`.
    #[inline]
    fn query(&self, lo: usize, hi: usize) -> f64 {
        let lv = (usize::BITS - 1 - (hi - lo + 1).leading_zeros()) as usize;
        let t = &self.levels[lv];
        t[lo].max(t[hi + 1 - (1 << lv)])
    }
}

/// Lattice offsets within the grid's reach, sorted by `(m, dj, di)` so that, for a
/// fixed center, equal distances visit cells in increasing index order.
struct Offsets {
    di: Vec<i32>,
    dj: Vec<i32>,
    m: Vec<u32>,
}

impl Offsets {
    fn new(grid: &Grid, max_m: u32) -> Self {
        let (nx, ny) = (grid.nx as i32, grid.ny as i32);
        let mut all: Vec<(u32, i32, i32)> = Vec::with_capacity(((2 * nx - 1) * (2 * ny - 1)) as usize);
        for dj in -(ny - 1)..ny {
            for di in -(nx - 1)..nx {
                let m = (di * di + dj * dj) as u32;
                if m <= max_m {
                    all.push((m, dj, di));
                }
            }
        }
        all.sort_unstable();
        Offsets {
            di: all.iter().map(|t| t.2).collect(),
            dj: all.iter().map(|t| t.1).collect(),
            m: all.iter().map(|t| t.0).collect(),
        }
    }
}

struct PreparedQuery {
    range: Option<(usize, usize)>,
    table: std::sync::Arc<RangeMax>,
    /// `suffix[k]` = largest weight over `max(k, lo)..=hi`, for `k ≤ hi`.
    suffix: Vec<f64>,
}

/// Evaluates several maximal queries of one field at chosen cells.
pub struct MaximalEngine<'a> {
    grid: Grid,
    values: &'a [f64],
    radii: RadiusSet,
    offsets: Offsets,
    /// Nonzero cells `(i, j, value)` in increasing cell index.
    support: Vec<(i32, i32, f64)>,
    total: f64,
    bbox: [i32; 4],
}

impl<'a> MaximalEngine<'a> {
    /// Prepare for `f`, which must be nonnegative.
    pub fn new(f: &'a CellField) -> Self {
        let grid = f.grid;
        let radii = RadiusSet::new(&grid);
        let offsets = Offsets::new(&grid, radii.max_m());
        let mut support = Vec::new();
        let mut bbox = [i32::MAX, i32::MAX, i32::MIN, i32::MIN];
        for (c, &v) in f.values.iter().enumerate() {
            debug_assert!(v >= 0.0, "maximal engine expects a nonnegative field");
            if v != 0.0 {
                let (i, j) = grid.cell_ij(c);
                let (i, j) = (i as i32, j as i32);
                support.push((i, j, v));
                bbox = [bbox[0].min(i), bbox[1].min(j), bbox[2].max(i), bbox[3].max(j)];
            }
        }
        let total = support.iter().map(|s| s.2).sum();
        MaximalEngine { grid, values: &f.values, radii, offsets, support, total, bbox }
    }

    pub fn radii(&self) -> &RadiusSet {
        &self.radii
    }

    /// Values of each query at each target cell: `result[q][t]`.
    pub fn evaluate(&self, queries: &[MaximalQuery], targets: &[usize]) -> Result<Vec<Vec<f64>>> {
        for q in queries {
            q.validate()?;
        }
        let mut tables: Vec<(u64, std::sync::Arc<RangeMax>)> = Vec::new();
        let prepared: Vec<PreparedQuery> = queries
            .iter()
            .map(|q| {
                let key = q.alpha.to_bits();
                let table = match tables.iter().find(|t| t.0 == key) {
                    Some(t) => t.1.clone(),
                    None => {
                        let t = std::sync::Arc::new(RangeMax::new(self.radii.weights(q.alpha)));
                        tables.push((key, t.clone()));
                        t
                    }
                };
                let range = self.radii.range(q.mode);
                let mut suffix = Vec::new();
                if let Some((lo, hi)) = range {
                    suffix = vec![0.0; hi + 1];
                    let mut m = 0.0f64;
                    for k in (0..=hi).rev() {
                        if k >= lo {
                            m = m.max(table.query(k, k));
                        }
                        suffix[k] = m;
                    }
                }
                PreparedQuery { range, table, suffix }
            })
            .collect();
        let per_target: Vec<Vec<f64>> = parallel::install(|| {
            targets.par_iter().map(|&c| self.at_center(c, &prepared)).collect()
        });
        let mut out = vec![vec![0.0; targets.len()]; queries.len()];
        for (t, vals) in per_target.into_iter().enumerate() {
            for (q, v) in vals.into_iter().enumerate() {
                out[q][t] = v;
            }
        }
        Ok(out)
    }

    /// Support cells as `(m, value)` sorted by `(m, cell index)`: a stable LSD radix
    /// sort on `m − m_lo` of the index-ordered support list.
    fn sorted_support(&self, ci: i32, cj: i32, m_lo: u32) -> Vec<(u32, f64)> {
        const BITS: u32 = 11;
        const MASK: u32 = (1 << BITS) - 1;
        let mut cur: Vec<(u32, f64)> = self
            .support
            .iter()
            .map(|&(i, j, v)| (((i - ci) * (i - ci) + (j - cj) * (j - cj)) as u32 - m_lo, v))
            .collect();
        let top = cur.iter().map(|e| e.0).max().unwrap_or(0);
        let mut next = vec![(0u32, 0.0f64); cur.len()];
        let mut shift = 0;
        while shift == 0 || (top >> shift) > 0 {
            let mut counts = [0usize; 1 << BITS];
            for e in &cur {
                counts[((e.0 >> shift) & MASK) as usize] += 1;
            }
            let mut sum = 0;
            for c in counts.iter_mut() {
                let t = *c;
                *c = sum;
                sum += t;
            }
            for e in &cur {
                let d = ((e.0 >> shift) & MASK) as usize;
                next[counts[d]] = *e;
                counts[d] += 1;
            }
            std::mem::swap(&mut cur, &mut next);
            shift += BITS;
        }
        for e in cur.iter_mut() {
            e.0 += m_lo;
        }
        cur
    }

    fn at_center(&self, c: usize, queries: &[PreparedQuery]) -> Vec<f64> {
        let mut best = vec![0.0f64; queries.len()];
        if self.support.is_empty() || queries.iter().all(|q| q.range.is_none()) {
            return best;
        }
        let (ci, cj) = self.grid.cell_ij(c);
        let (ci, cj) = (ci as i32, cj as i32);
        let [x0, y0, x1, y1] = self.bbox;
        let gap = |v: i32, lo: i32, hi: i32| if v < lo { lo - v } else if v > hi { v - hi } else { 0 };
        let far = |v: i32, lo: i32, hi: i32| (v - lo).abs().max((v - hi).abs());
        let (gx, gy) = (gap(ci, x0, x1), gap(cj, y0, y1));
        let (fx, fy) = (far(ci, x0, x1), far(cj, y0, y1));
        let m_lo = (gx * gx + gy * gy) as u32;
        let m_hi = ((fx * fx + fy * fy) as u32).min(self.radii.max_m());
        let start = self.offsets.m.partition_point(|&m| m < m_lo);
        let end = self.offsets.m.partition_point(|&m| m <= m_hi);
        let n = self.support.len() as f64;
        let walk_cost = (end - start) as f64;
        let sort_cost = 4.0 * n + (m_hi - m_lo) as f64 / 64.0;
        let mut acc = Accumulator { radii: &self.radii, queries, best: &mut best, total: self.total, pending: None };
        if walk_cost <= sort_cost {
            let (nx, ny) = (self.grid.nx as i32, self.grid.ny as i32);
            let mut found = 0;
            for k in start..end {
                let (i, j) = (ci + self.offsets.di[k], cj + self.offsets.dj[k]);
                if i < 0 || j < 0 || i >= nx || j >= ny {
                    continue;
                }
                let v = self.values[(j * nx + i) as usize];
                if v != 0.0 {
                    if !acc.add(self.offsets.m[k], v) {
                        return best;
                    }
                    found += 1;
                    if found == self.support.len() {
                        break;
                    }
                }
            }
        } else {
            for (m, v) in self.sorted_support(ci, cj, m_lo) {
                if !acc.add(m, v) {
                    return best;
                }
            }
        }
        acc.finish();
        best
    }
}

/// Folds a stream of `(m, value)` pairs, sorted by `m`, into per-query maxima.
struct Accumulator<'r> {
    radii: &'r RadiusSet,
    queries: &'r [PreparedQuery],
    best: &'r mut [f64],
    total: f64,
    /// Radius index where the current ball sum starts to apply, its `m`, and the sum.
    pending: Option<(usize, u32, f64)>,
}

impl Accumulator<'_> {
    /// Add one support cell at squared distance `m`. Returns false once no query can improve.
    #[inline]
    fn add(&mut self, m: u32, v: f64) -> bool {
        match self.pending {
            Some((k0, pm, s)) if pm == m => {
                self.pending = Some((k0, pm, s + v));
                true
            }
            Some((k0, _, s)) => {
                let k1 = self.radii.index_of(m);
                self.close(k0, k1 - 1, s);
                self.pending = Some((k1, m, s + v));
                !self.exhausted(k1)
            }
            None => {
                self.pending = Some((self.radii.index_of(m), m, v));
                true
            }
        }
    }

    fn finish(&mut self) {
        if let Some((k0, _, s)) = self.pending.take() {
            self.close(k0, self.radii.len() - 1, s);
        }
    }

    /// Apply ball sum `s` to radius indices `k0..=k1`.
    #[inline]
    fn close(&mut self, k0: usize, k1: usize, s: f64) {
        for (q, best) in self.queries.iter().zip(self.best.iter_mut()) {
            if let Some((lo, hi)) = q.range {
                let (a, b) = (k0.max(lo), k1.min(hi));
                if a <= b {
                    *best = best.max(s * q.table.query(a, b));
                }
            }
        }
    }

    /// True when no radius from index `k` on can beat the current maxima.
    fn exhausted(&self, k: usize) -> bool {
        self.queries.iter().zip(self.best.iter()).all(|(q, &best)| match q.range {
            Some((_, hi)) if k <= hi => self.total * q.suffix[k] * (1.0 + 1e-12) < best,
            _ => true,
        })
    }
}

fn abs_field(f: &CellField) -> CellField {
    f.map(f64::abs)
}

/// Evaluate several queries of `|f|` at `targets`.
pub fn maximal_at(f: &CellField, queries: &[MaximalQuery], targets: &[usize]) -> Result<Vec<Vec<f64>>> {
    let g = abs_field(f);
    MaximalEngine::new(&g).evaluate(queries, targets)
}

fn on_all_cells(f: &CellField, q: MaximalQuery) -> Result<CellField> {
    let targets: Vec<usize> = (0..f.grid.num_cells()).collect();
    let values = maximal_at(f, &[q], &targets)?.pop().unwrap();
    Ok(CellField { grid: f.grid, values })
}

/// Hardy-Littlewood maximal function `Mf`.
pub fn maximal(f: &CellField) -> CellField {
    on_all_cells(f, MaximalQuery::full(0.0)).expect("order 0 is valid")
}

/// Fractional maximal function `M_α f = sup_ρ ρ^α ⨍_{B_ρ} |f|`.
pub fn fractional_maximal(f: &CellField, alpha: f64) -> Result<CellField> {
    on_all_cells(f, MaximalQuery::full(alpha))
}

/// Cut-off maximal function `M^r_α f`: supremum over radii `ρ < r`.
pub fn cutoff_maximal(f: &CellField, r: f64, alpha: f64) -> Result<CellField> {
    on_all_cells(f, MaximalQuery::cutoff(r, alpha))
}

/// Tail maximal function `T^r_α f`: supremum over radii `ρ ≥ r`.
pub fn tail_maximal(f: &CellField, r: f64, alpha: f64) -> Result<CellField> {
    on_all_cells(f, MaximalQuery::tail(r, alpha))
}

/// `M(M_α f)` at `targets`: the inner operator is evaluated on the whole grid.
pub fn compose_mm_alpha_at(f: &CellField, alpha: f64, targets: &[usize]) -> Result<Vec<f64>> {
    let inner = fractional_maximal(f, alpha)?;
    Ok(maximal_at(&inner, &[MaximalQuery::full(0.0)], targets)?.pop().unwrap())
}

/// `M(M_α f)` on every cell.
pub fn compose_mm_alpha(f: &CellField, alpha: f64) -> Result<CellField> {
    let targets: Vec<usize> = (0..f.grid.num_cells()).collect();
    let values = compose_mm_alpha_at(f, alpha, &targets)?;
    Ok(CellField { grid: f.grid, values })
}

/// Superlevel set measure `|{g > λ}|` among the listed values, each cell of volume `hⁿ`.
pub fn level_measure(values: &[f64], lambda: f64, h: f64) -> f64 {
    values.iter().filter(|&&v| v > lambda).count() as f64 * h.powi(DIM as i32)
}

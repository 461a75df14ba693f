//! Reordering-based partitioning.
//!
//! Indices of a mode are sorted so that the second factor column becomes
//! monotone; the tensor is permuted accordingly and cut where that column
//! changes sign. Block norms of the reordered tensor show how much of the
//! mass lies in the diagonal blocks.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Result, TensError};
use crate::lowrank::{hooi, hooi_symmetric, symmetry_tolerance, RankApproximation, SolverConfig};
use crate::operator::TensorView;
use crate::preprocess::LabelTable;
use crate::tensor::{Mode, Permutation, SparseTensor3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Nonincreasing,
    Nondecreasing,
}

/// A permutation that makes the second factor column monotone, with both
/// leading columns in the new order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reordering {
    pub perm: Permutation,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

pub fn monotone_reorder(u: &DenseMatrix) -> Result<Reordering> {
    monotone_reorder_with(u, Direction::Nonincreasing)
}

/// Stable sort of the indices by column 2 of `u`; ties keep their order.
pub fn monotone_reorder_with(u: &DenseMatrix, direction: Direction) -> Result<Reordering> {
    if u.cols() < 2 {
        return Err(TensError::InvalidArgument(format!(
            "reordering needs at least 2 factor columns, got {}",
            u.cols()
        )));
    }
    let key = u.column(1);
    let mut order: Vec<usize> = (0..u.rows()).collect();
    match direction {
        Direction::Nonincreasing => order.sort_by(|&a, &b| key[b].total_cmp(&key[a])),
        Direction::Nondecreasing => order.sort_by(|&a, &b| key[a].total_cmp(&key[b])),
    }
    Ok(Reordering {
        perm: Permutation::from_order(&order)?,
        u1: order.iter().map(|&p| u[(p, 0)]).collect(),
        u2: order.iter().map(|&p| key[p]).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    /// First index of the second group; `0` or the extent when there is none.
    pub index: usize,
    pub sign_change: bool,
}

/// Smallest `s` with `u2[s−1] ≥ 0 > u2[s]` for a nonincreasing sequence.
/// Without a sign change the split sits at the extent (all nonnegative) or
/// at 0 (all negative) and is flagged.
pub fn sign_change_split(u2: &[f64]) -> Split {
    match (1..u2.len()).find(|&s| u2[s - 1] >= 0.0 && u2[s] < 0.0) {
        Some(index) => Split {
            index,
            sign_change: true,
        },
        None => Split {
            index: if u2.first().is_some_and(|&x| x < 0.0) { 0 } else { u2.len() },
            sign_change: false,
        },
    }
}

fn split_for(u2: &[f64], direction: Direction) -> Split {
    match direction {
        Direction::Nonincreasing => sign_change_split(u2),
        Direction::Nondecreasing => {
            let flipped: Vec<f64> = u2.iter().map(|x| -x).collect();
            sign_change_split(&flipped)
        }
    }
}

/// Frobenius norms of the blocks of a tensor cut into index ranges.
///
/// Ranges are half-open, sorted and non-overlapping; they may leave gaps, as
/// corner tables do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockNormTable {
    pub ranges: [Vec<(usize, usize)>; 3],
    /// Block norms indexed `[a][b][c]` over the mode-1, mode-2, mode-3 ranges.
    pub norms: Vec<Vec<Vec<f64>>>,
    pub total_norm: f64,
    /// `‖blocks‖ / ‖A‖`, the share of the norm captured by the ranges.
    pub mass_fraction: f64,
}

impl BlockNormTable {
    /// The mode-1 × mode-2 table, assuming a single mode-3 range.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.norms
            .iter()
            .map(|row| row.iter().map(|col| col[0]).collect())
            .collect()
    }

    /// Norm of all diagonal blocks `(a, a, ·)` relative to `‖A‖`.
    pub fn diagonal_fraction(&self) -> f64 {
        let mut sq = 0.0;
        for (a, row) in self.norms.iter().enumerate() {
            if let Some(col) = row.get(a) {
                sq += col.iter().map(|x| x * x).sum::<f64>();
            }
        }
        if self.total_norm > 0.0 {
            sq.sqrt() / self.total_norm
        } else {
            0.0
        }
    }
}

fn check_ranges(ranges: &[(usize, usize)], extent: usize, mode: usize) -> Result<()> {
    let mut prev_end = 0;
    for &(lo, hi) in ranges {
        if lo >= hi || hi > extent || lo < prev_end {
            return Err(TensError::InvalidArgument(format!(
                "bad mode-{} block range {lo}..{hi} (extent {extent})",
                mode + 1
            )));
        }
        prev_end = hi;
    }
    if ranges.is_empty() {
        return Err(TensError::InvalidArgument(format!("no mode-{} block ranges", mode + 1)));
    }
    Ok(())
}

fn locate(ranges: &[(usize, usize)], x: usize) -> Option<usize> {
    let p = ranges.partition_point(|&(_, hi)| hi <= x);
    (p < ranges.len() && ranges[p].0 <= x).then_some(p)
}

pub fn block_norms(t: &SparseTensor3, ranges: [Vec<(usize, usize)>; 3]) -> Result<BlockNormTable> {
    let dims = t.dims();
    for (a, r) in ranges.iter().enumerate() {
        check_ranges(r, dims[a], a)?;
    }
    let mut sq = vec![vec![vec![0.0; ranges[2].len()]; ranges[1].len()]; ranges[0].len()];
    for e in t.entries() {
        if let (Some(a), Some(b), Some(c)) = (
            locate(&ranges[0], e.i),
            locate(&ranges[1], e.j),
            locate(&ranges[2], e.k),
        ) {
            sq[a][b][c] += e.value * e.value;
        }
    }
    let covered: f64 = sq.iter().flatten().flatten().sum();
    let total_norm = t.frobenius_norm();
    let norms = sq
        .into_iter()
        .map(|row| row.into_iter().map(|col| col.into_iter().map(f64::sqrt).collect()).collect())
        .collect();
    Ok(BlockNormTable {
        ranges,
        norms,
        total_norm,
        mass_fraction: if total_norm > 0.0 { covered.sqrt() / total_norm } else { 0.0 },
    })
}

/// Ranges `[0, s)` and `[s, extent)`, dropping an empty side.
pub fn split_ranges(split: usize, extent: usize) -> Vec<(usize, usize)> {
    [(0, split), (split, extent)]
        .into_iter()
        .filter(|(lo, hi)| lo < hi)
        .collect()
}

/// Leading and trailing `width` indices of modes 1 and 2, all slices.
pub fn corner_norms(t: &SparseTensor3, width: usize) -> Result<BlockNormTable> {
    let dims = t.dims();
    let corner = |extent: usize| -> Result<Vec<(usize, usize)>> {
        if width == 0 || 2 * width > extent {
            return Err(TensError::InvalidArgument(format!(
                "corner width {width} does not fit twice into extent {extent}"
            )));
        }
        Ok(vec![(0, width), (extent - width, extent)])
    };
    block_norms(t, [corner(dims[0])?, corner(dims[1])?, vec![(0, dims[2])]])
}

/// Default corner width: 10% of the smaller of the first two extents.
pub fn default_corner_width(dims: [usize; 3]) -> usize {
    (dims[0].min(dims[1]) / 10).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedLabel {
    /// Index in the tensor the ranking was computed on.
    pub index: usize,
    pub label: String,
    pub u1: f64,
    pub u2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub beginning: Vec<RankedLabel>,
    pub middle: Vec<RankedLabel>,
    pub end: Vec<RankedLabel>,
}

/// First `k`, last `k` and `k` central (around the split) labels of the
/// reordered index list.
pub fn significance_ranking(
    reordering: &Reordering,
    split: usize,
    labels: &LabelTable,
    k: usize,
) -> Result<Ranking> {
    let n = reordering.perm.len();
    labels.check_extent(n)?;
    if k == 0 || k > n {
        return Err(TensError::InvalidArgument(format!("k = {k} for extent {n}")));
    }
    let order = reordering.perm.order();
    let item = |p: usize| RankedLabel {
        index: order[p],
        label: labels.get(order[p]).to_string(),
        u1: reordering.u1[p],
        u2: reordering.u2[p],
    };
    let mid_start = split.saturating_sub(k / 2).min(n - k);
    Ok(Ranking {
        beginning: (0..k).map(item).collect(),
        middle: (mid_start..mid_start + k).map(item).collect(),
        end: (n - k..n).map(item).collect(),
    })
}

/// Indices whose `|u1|` is below `rel · max|u1|`, the weakly connected
/// middle of a reordering.
pub fn insignificant_indices(u1: &[f64], rel: f64) -> Vec<usize> {
    let max = u1.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (0..u1.len()).filter(|&i| u1[i].abs() < rel * max).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModePartition {
    pub mode: usize,
    pub perm: Permutation,
    pub u1: Vec<f64>,
    /// Empty when the factor has a single column.
    pub u2: Vec<f64>,
    pub split: Split,
    /// `|u1|` in reordered order.
    pub insignificance_scores: Vec<f64>,
    pub ranking: Option<Ranking>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionOptions {
    pub direction: Direction,
    /// Corner block width; `None` picks [`default_corner_width`].
    pub corner_width: Option<usize>,
    pub top_k: usize,
    pub labels: [Option<LabelTable>; 3],
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self {
            direction: Direction::Nonincreasing,
            corner_width: None,
            top_k: 10,
            labels: [None, None, None],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionReport {
    pub dims: [usize; 3],
    pub nnz: usize,
    pub total_norm: f64,
    pub symmetric: bool,
    pub modes: Vec<ModePartition>,
    /// Blocks cut at the mode-1 and mode-2 splits, all slices together.
    pub split_blocks: BlockNormTable,
    pub corner_blocks: Option<BlockNormTable>,
    /// Original tensor index of each local index, for restricted reports.
    pub index_sets: Option<[Vec<usize>; 3]>,
}

impl PartitionReport {
    pub fn mode(&self, mode: Mode) -> &ModePartition {
        &self.modes[mode.axis()]
    }

    /// Membership of every index of `mode`: `true` for the first group.
    pub fn first_group(&self, mode: Mode) -> Vec<bool> {
        let m = self.mode(mode);
        (0..m.perm.len()).map(|old| m.perm.apply(old) < m.split.index).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| TensError::Serialization(e.to_string()))
    }

    /// Plain-text tables: block norms, then beginning/middle/end label lists.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dims {:?}  nnz {}  norm {:.6}", self.dims, self.nnz, self.total_norm);
        for m in &self.modes {
            let _ = writeln!(
                s,
                "mode {}: split at {}{}",
                m.mode,
                m.split.index,
                if m.split.sign_change { "" } else { " (no sign change)" }
            );
        }
        write_table(&mut s, "split blocks", &self.split_blocks);
        if let Some(c) = &self.corner_blocks {
            write_table(&mut s, "corner blocks", c);
        }
        for m in &self.modes {
            let Some(r) = &m.ranking else { continue };
            let _ = writeln!(s, "\nmode {} ranking", m.mode);
            let _ = writeln!(s, "{:<28} {:<28} {:<28}", "beginning", "middle", "end");
            for p in 0..r.beginning.len() {
                let _ = writeln!(
                    s,
                    "{:<28} {:<28} {:<28}",
                    r.beginning[p].label, r.middle[p].label, r.end[p].label
                );
            }
        }
        s
    }
}

fn write_table(s: &mut String, title: &str, t: &BlockNormTable) {
    let _ = writeln!(s, "\n{title} (mass fraction {:.4})", t.mass_fraction);
    for (a, row) in t.matrix().iter().enumerate() {
        let (lo, hi) = t.ranges[0][a];
        let _ = write!(s, "{:>8}..{:<8}", lo + 1, hi);
        for v in row {
            let _ = write!(s, " {v:>12.4}");
        }
        s.push('\n');
    }
}

fn partition_mode(
    factor: &DenseMatrix,
    mode: usize,
    opts: &PartitionOptions,
    labels: Option<&LabelTable>,
) -> Result<ModePartition> {
    if factor.cols() < 2 {
        let u1 = factor.column(0);
        let n = u1.len();
        return Ok(ModePartition {
            mode: mode + 1,
            perm: Permutation::identity(n),
            insignificance_scores: u1.iter().map(|x| x.abs()).collect(),
            u1,
            u2: Vec::new(),
            split: Split {
                index: n,
                sign_change: false,
            },
            ranking: None,
        });
    }
    let reordering = monotone_reorder_with(factor, opts.direction)?;
    let split = split_for(&reordering.u2, opts.direction);
    let n = reordering.perm.len();
    let ranking = match labels {
        Some(l) => Some(significance_ranking(&reordering, split.index, l, opts.top_k.min(n))?),
        None => None,
    };
    Ok(ModePartition {
        mode: mode + 1,
        insignificance_scores: reordering.u1.iter().map(|x| x.abs()).collect(),
        perm: reordering.perm,
        u1: reordering.u1,
        u2: reordering.u2,
        split,
        ranking,
    })
}

/// Reorders every mode by its factor, permutes `t` accordingly and measures
/// the resulting blocks. A shared factor (`U = V`) yields one permutation
/// for modes 1 and 2.
pub fn partition_tensor(
    t: &SparseTensor3,
    approx: &RankApproximation,
    opts: &PartitionOptions,
) -> Result<(PartitionReport, SparseTensor3)> {
    let dims = t.dims();
    let factors = [&approx.u, &approx.v, &approx.w];
    for (a, f) in factors.iter().enumerate() {
        if f.rows() != dims[a] {
            return Err(TensError::mismatch(format!(
                "mode-{} factor has {} rows for extent {}",
                a + 1,
                f.rows(),
                dims[a]
            )));
        }
    }
    for (a, l) in opts.labels.iter().enumerate() {
        if let Some(l) = l {
            l.check_extent(dims[a])?;
        }
    }
    let symmetric = approx.u == approx.v;
    let mut modes: Vec<ModePartition> = Vec::with_capacity(3);
    for (a, f) in factors.iter().enumerate() {
        if a == 1 && symmetric {
            let mut shared: ModePartition = modes[0].clone();
            shared.mode = 2;
            if opts.labels[1].is_some() && opts.labels[1] != opts.labels[0] {
                shared.ranking = partition_mode(f, a, opts, opts.labels[1].as_ref())?.ranking;
            }
            modes.push(shared);
        } else {
            modes.push(partition_mode(f, a, opts, opts.labels[a].as_ref())?);
        }
    }
    let mut reordered = t.clone();
    for (a, m) in modes.iter().enumerate() {
        if !m.perm.is_identity() {
            reordered = reordered.permute_mode(&m.perm, Mode::ALL[a])?;
        }
    }
    let split_blocks = block_norms(
        &reordered,
        [
            split_ranges(modes[0].split.index, dims[0]),
            split_ranges(modes[1].split.index, dims[1]),
            vec![(0, dims[2])],
        ],
    )?;
    let width = opts.corner_width.unwrap_or_else(|| default_corner_width(dims));
    let corner_blocks = if 2 * width <= dims[0].min(dims[1]) && width > 0 {
        Some(corner_norms(&reordered, width)?)
    } else {
        None
    };
    let report = PartitionReport {
        dims,
        nnz: t.nnz(),
        total_norm: t.frobenius_norm(),
        symmetric,
        modes,
        split_blocks,
        corner_blocks,
        index_sets: None,
    };
    Ok((report, reordered))
}

/// Approximates `t` (symmetrically when asked and possible) and partitions it.
pub fn analyze(
    t: &SparseTensor3,
    ranks: [usize; 3],
    symmetric: bool,
    cfg: &SolverConfig,
    opts: &PartitionOptions,
) -> Result<(RankApproximation, PartitionReport, SparseTensor3)> {
    let view = TensorView::new(t, cfg.execution);
    let approx = if symmetric {
        hooi_symmetric(&view, ranks, cfg)?
    } else {
        hooi(&view, ranks, cfg)?
    };
    let (report, reordered) = partition_tensor(t, &approx, opts)?;
    Ok((approx, report, reordered))
}

/// Extracts `t(I, J, K)` and runs the whole analysis on it. Labels are
/// restricted along with the indices and the report remembers the original
/// index sets.
pub fn restrict_and_recurse(
    t: &SparseTensor3,
    subsets: [Vec<usize>; 3],
    ranks: [usize; 3],
    cfg: &SolverConfig,
    opts: &PartitionOptions,
) -> Result<(RankApproximation, PartitionReport, SparseTensor3)> {
    let sub = t.subtensor(&subsets[0], &subsets[1], &subsets[2])?;
    if sub.nnz() == 0 {
        return Err(TensError::EmptySubtensor);
    }
    let symmetric = cfg.symmetric
        && subsets[0] == subsets[1]
        && sub.is_12_symmetric(symmetry_tolerance(sub.max_abs()));
    let mut sub_opts = opts.clone();
    for (a, l) in sub_opts.labels.iter_mut().enumerate() {
        if let Some(table) = l {
            *table = table.select(&subsets[a]);
        }
    }
    let (approx, mut report, reordered) = analyze(&sub, ranks, symmetric, cfg, &sub_opts)?;
    for (a, m) in report.modes.iter_mut().enumerate() {
        if let Some(r) = &mut m.ranking {
            for item in r.beginning.iter_mut().chain(&mut r.middle).chain(&mut r.end) {
                item.index = subsets[a][item.index];
            }
        }
    }
    report.index_sets = Some(subsets);
    Ok((approx, report, reordered))
}

//! Best rank-(r1, r2, r3) approximation by higher-order orthogonal iteration.
//!
//! The approximation is found by maximizing `‖A·(X, Y, Z)‖` over matrices
//! with orthonormal columns. Each half-step replaces one factor by the
//! leading left singular subspace of the tensor contracted with the other
//! two factors, which can only increase the objective. Initialization is the
//! truncated HOSVD; extra restarts start from seeded random subspaces.
//!
//! The solvers are generic over [`TensorOperator`], so a deflated tensor can
//! be approximated through its action on narrow blocks without fill-in.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, DenseTensor3};
use crate::error::{Result, TensError};
use crate::exec::{map_ordered, Execution};
use crate::linalg::{leading_eigen_subspace, leading_left_subspace, random_orthonormal, subspace_iteration, Subspace};
use crate::operator::{TensorOperator, TensorView};
use crate::tensor::{Mode, SparseTensor3};

/// Modes with at most this extent get their HOSVD subspace from an explicit
/// Gram matrix; larger modes use block subspace iteration.
const EXPLICIT_GRAM_LIMIT: usize = 2048;

/// Restarts whose objective trails the best by more than this (relative)
/// mark the problem as possibly non-unique.
const RESTART_AGREEMENT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop when the relative change of `‖core‖` falls below this.
    pub rel_tol: f64,
    pub seed: u64,
    /// Number of starts: the HOSVD start plus `num_restarts − 1` random ones.
    pub num_restarts: usize,
    pub symmetric: bool,
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            rel_tol: 1e-8,
            seed: 0,
            num_restarts: 1,
            symmetric: false,
            execution: Execution::Sequential,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(TensError::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(TensError::InvalidArgument(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.num_restarts == 0 {
            return Err(TensError::InvalidArgument("num_restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Factors, core and convergence record of a rank-(r1, r2, r3) approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankApproximation {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub w: DenseMatrix,
    /// `A·(U, V, W)`.
    pub core: DenseTensor3,
    /// `‖core‖` at initialization and after every sweep.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub rank_deficient: bool,
    /// Final objective of every start, HOSVD start first.
    pub restart_objectives: Vec<f64>,
    pub restarts_disagree: bool,
}

impl RankApproximation {
    pub fn ranks(&self) -> [usize; 3] {
        [self.u.cols(), self.v.cols(), self.w.cols()]
    }

    pub fn objective(&self) -> f64 {
        self.core.frobenius_norm()
    }

    /// Entry `(i, j, k)` of `(U, V, W)·F`.
    pub fn value_at(&self, i: usize, j: usize, k: usize) -> f64 {
        let [r1, r2, r3] = self.ranks();
        let (ui, vj, wk) = (self.u.row(i), self.v.row(j), self.w.row(k));
        let mut s = 0.0;
        for c in 0..r3 {
            for b in 0..r2 {
                let vw = vj[b] * wk[c];
                for (a, &ua) in ui.iter().enumerate().take(r1) {
                    s += ua * vw * self.core.get(a, b, c);
                }
            }
        }
        s
    }

    /// Squared residual `‖A − (U, V, W)·F‖²`, evaluated on the stored entries
    /// of `a` plus `‖F‖²`.
    pub fn residual_norm_sq(&self, a: &SparseTensor3) -> f64 {
        let cross: f64 = a
            .entries()
            .iter()
            .map(|e| e.value * (e.value - 2.0 * self.value_at(e.i, e.j, e.k)))
            .sum();
        (cross + self.core.frobenius_norm().powi(2)).max(0.0)
    }

    /// Largest `|f_{abc} − f_{bac}|`; zero for a (1,2)-symmetric core.
    pub fn core_asymmetry(&self) -> f64 {
        let [p, q, r] = self.core.dims();
        if p != q {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for c in 0..r {
            for a in 0..p {
                for b in 0..a {
                    worst = worst.max((self.core.get(a, b, c) - self.core.get(b, a, c)).abs());
                }
            }
        }
        worst
    }
}

/// `(U, V, W)·F` as a dense tensor.
pub fn reconstruct(approx: &RankApproximation) -> DenseTensor3 {
    let b = approx
        .core
        .contract_mode(Mode::One, &approx.u.transpose())
        .and_then(|t| t.contract_mode(Mode::Two, &approx.v.transpose()))
        .and_then(|t| t.contract_mode(Mode::Three, &approx.w.transpose()));
    b.expect("factor shapes are consistent by construction")
}

/// Initial factors from the truncated HOSVD.
#[derive(Debug, Clone)]
pub struct HosvdFactors {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub w: DenseMatrix,
    pub rank_deficient: bool,
}

/// Leading left singular subspaces of the three unfoldings.
pub fn hosvd_init<O: TensorOperator + ?Sized>(op: &O, ranks: [usize; 3]) -> Result<HosvdFactors> {
    check_ranks(op.dims(), ranks)?;
    let s1 = mode_subspace(op, Mode::One, ranks[0]);
    let s2 = mode_subspace(op, Mode::Two, ranks[1]);
    let s3 = mode_subspace(op, Mode::Three, ranks[2]);
    Ok(HosvdFactors {
        rank_deficient: s1.rank_deficient || s2.rank_deficient || s3.rank_deficient,
        u: s1.basis,
        v: s2.basis,
        w: s3.basis,
    })
}

fn mode_subspace<O: TensorOperator + ?Sized>(op: &O, mode: Mode, r: usize) -> Subspace {
    let extent = op.dims()[mode.axis()];
    if extent <= EXPLICIT_GRAM_LIMIT {
        leading_eigen_subspace(&op.unfolding_gram(mode), r)
    } else {
        subspace_iteration(extent, r, |x| op.gram_apply(mode, x), 1e-10, 500)
    }
}

fn check_ranks(dims: [usize; 3], ranks: [usize; 3]) -> Result<()> {
    for (&r, &extent) in ranks.iter().zip(&dims) {
        if r == 0 || r > extent {
            return Err(TensError::RankOutOfRange { rank: r, extent });
        }
    }
    Ok(())
}

struct Start {
    u: DenseMatrix,
    v: DenseMatrix,
    w: DenseMatrix,
    rank_deficient: bool,
}

/// Best rank-(r1, r2, r3) approximation of a general tensor.
pub fn hooi<O: TensorOperator + ?Sized>(
    op: &O,
    ranks: [usize; 3],
    cfg: &SolverConfig,
) -> Result<RankApproximation> {
    cfg.validate()?;
    check_ranks(op.dims(), ranks)?;
    if op.norm_sq() == 0.0 {
        return Err(TensError::DegenerateObjective);
    }
    let dims = op.dims();
    let starts: Vec<usize> = (0..cfg.num_restarts).collect();
    let runs = map_ordered(cfg.execution, &starts, |&s| {
        let start = if s == 0 {
            let h = hosvd_init(op, ranks).expect("ranks checked");
            Start {
                u: h.u,
                v: h.v,
                w: h.w,
                rank_deficient: h.rank_deficient,
            }
        } else {
            let mut rng = restart_rng(cfg.seed, s);
            Start {
                u: random_orthonormal(dims[0], ranks[0], &mut rng),
                v: random_orthonormal(dims[1], ranks[1], &mut rng),
                w: random_orthonormal(dims[2], ranks[2], &mut rng),
                rank_deficient: false,
            }
        };
        iterate_general(op, ranks, cfg, start)
    });
    pick_best(runs)
}

/// Best rank-(r, r, r3) approximation `(U, U, W)` of a (1,2)-symmetric tensor.
pub fn hooi_symmetric<O: TensorOperator + ?Sized>(
    op: &O,
    ranks: [usize; 3],
    cfg: &SolverConfig,
) -> Result<RankApproximation> {
    cfg.validate()?;
    check_ranks(op.dims(), ranks)?;
    if ranks[0] != ranks[1] {
        return Err(TensError::InvalidArgument(format!(
            "symmetric solver needs r1 = r2, got {ranks:?}"
        )));
    }
    let tol = symmetry_tolerance(op.scale_hint());
    if !op.is_12_symmetric(tol) {
        return Err(TensError::Asymmetric(format!(
            "some frontal slice differs from its transpose by more than {tol:e}"
        )));
    }
    if op.norm_sq() == 0.0 {
        return Err(TensError::DegenerateObjective);
    }
    let dims = op.dims();
    let starts: Vec<usize> = (0..cfg.num_restarts).collect();
    let runs = map_ordered(cfg.execution, &starts, |&s| {
        let (u, w, rank_deficient) = if s == 0 {
            let s1 = mode_subspace(op, Mode::One, ranks[0]);
            let s3 = mode_subspace(op, Mode::Three, ranks[2]);
            (s1.basis, s3.basis, s1.rank_deficient || s3.rank_deficient)
        } else {
            let mut rng = restart_rng(cfg.seed, s);
            (
                random_orthonormal(dims[0], ranks[0], &mut rng),
                random_orthonormal(dims[2], ranks[2], &mut rng),
                false,
            )
        };
        iterate_symmetric(op, ranks, cfg, u, w, rank_deficient)
    });
    pick_best(runs)
}

/// Symmetry tolerance relative to the largest stored magnitude.
pub(crate) fn symmetry_tolerance(scale: f64) -> f64 {
    1e-12 * scale
}

fn restart_rng(seed: u64, start: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(start as u64))
}

fn iterate_general<O: TensorOperator + ?Sized>(
    op: &O,
    ranks: [usize; 3],
    cfg: &SolverConfig,
    start: Start,
) -> Result<RankApproximation> {
    let Start {
        mut u,
        mut v,
        mut w,
        mut rank_deficient,
    } = start;
    let mut core = op.contract_all(&u, &v, &w);
    let mut history = vec![core.frobenius_norm()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let s1 = leading_left_subspace(&op.contract_except(Mode::One, &v, &w).unfold(Mode::One), ranks[0]);
        u = s1.basis;
        let s2 = leading_left_subspace(&op.contract_except(Mode::Two, &u, &w).unfold(Mode::Two), ranks[1]);
        v = s2.basis;
        let c3 = op.contract_except(Mode::Three, &u, &v);
        let s3 = leading_left_subspace(&c3.unfold(Mode::Three), ranks[2]);
        w = s3.basis;
        rank_deficient = s1.rank_deficient || s2.rank_deficient || s3.rank_deficient;
        core = c3.contract_mode(Mode::Three, &w)?;
        let obj = core.frobenius_norm();
        let prev = *history.last().expect("history starts non-empty");
        history.push(obj);
        if (obj - prev).abs() <= cfg.rel_tol * obj {
            converged = true;
            break;
        }
    }
    finish(u, v, w, core, history, iterations, converged, rank_deficient)
}

fn iterate_symmetric<O: TensorOperator + ?Sized>(
    op: &O,
    ranks: [usize; 3],
    cfg: &SolverConfig,
    mut u: DenseMatrix,
    mut w: DenseMatrix,
    mut rank_deficient: bool,
) -> Result<RankApproximation> {
    let mut core = op.contract_all(&u, &u, &w);
    let mut history = vec![core.frobenius_norm()];
    let mut converged = false;
    let mut iterations = 0;
    let mut norm_sq = None;
    while iterations < cfg.max_iters {
        iterations += 1;
        let prev = *history.last().expect("history starts non-empty");
        let m1 = op.contract_except(Mode::One, &u, &w).unfold(Mode::One);
        let m2 = op.contract_except(Mode::Two, &u, &w).unfold(Mode::Two);
        let mut step = symmetric_step(op, &m1, &m2, &u, &w, ranks[0], 0.0)?;
        let shifted = step.value < prev * (1.0 - ASCENT_SLACK);
        if shifted {
            // The plain update maximizes a linearization that is only a
            // minorant when the slices are definite. Adding σ‖UUᵀ‖², which is
            // constant on the feasible set, makes it one for large σ.
            let bound = 2.0 * ranks[2] as f64 * *norm_sq.get_or_insert_with(|| op.norm_sq());
            let mut sigma = prev * prev;
            loop {
                step = symmetric_step(op, &m1, &m2, &u, &w, ranks[0], sigma)?;
                if step.value >= prev * (1.0 - ASCENT_SLACK) || sigma > bound {
                    break;
                }
                sigma *= 4.0;
            }
            if step.value < prev * (1.0 - ASCENT_SLACK) {
                // rounding at the guaranteed shift; keep the current factor
                let c3 = op.contract_except(Mode::Three, &u, &u);
                step = Step {
                    value: prev,
                    basis: Subspace {
                        basis: u.clone(),
                        spectrum: Vec::new(),
                        rank_deficient,
                    },
                    c3,
                };
            }
        }
        u = step.basis.basis;
        let s3 = leading_left_subspace(&step.c3.unfold(Mode::Three), ranks[2]);
        w = s3.basis;
        rank_deficient = step.basis.rank_deficient || s3.rank_deficient;
        core = step.c3.contract_mode(Mode::Three, &w)?;
        let obj = core.frobenius_norm();
        history.push(obj);
        if !shifted && (obj - prev).abs() <= cfg.rel_tol * obj {
            converged = true;
            break;
        }
    }
    finish(u.clone(), u, w, core, history, iterations, converged, rank_deficient)
}

/// Relative slack below which a symmetric update counts as a decrease.
const ASCENT_SLACK: f64 = 1e-14;

struct Step {
    basis: Subspace,
    c3: DenseTensor3,
    /// Objective with the new shared factor and the old temporal factor.
    value: f64,
}

/// Leading subspace of `[M1 | M2 | √(2σ) U]`, i.e. of `M Mᵀ + 2σ U Uᵀ`.
fn symmetric_step<O: TensorOperator + ?Sized>(
    op: &O,
    m1: &DenseMatrix,
    m2: &DenseMatrix,
    u: &DenseMatrix,
    w: &DenseMatrix,
    r: usize,
    sigma: f64,
) -> Result<Step> {
    let (c1, c2) = (m1.cols(), m2.cols());
    let extra = if sigma > 0.0 { u.cols() } else { 0 };
    let scale = (2.0 * sigma).sqrt();
    let stacked = DenseMatrix::from_fn(m1.rows(), c1 + c2 + extra, |i, c| {
        if c < c1 {
            m1[(i, c)]
        } else if c < c1 + c2 {
            m2[(i, c - c1)]
        } else {
            scale * u[(i, c - c1 - c2)]
        }
    });
    let basis = leading_left_subspace(&stacked, r);
    let c3 = op.contract_except(Mode::Three, &basis.basis, &basis.basis);
    let value = c3.contract_mode(Mode::Three, w)?.frobenius_norm();
    Ok(Step { basis, c3, value })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    u: DenseMatrix,
    v: DenseMatrix,
    w: DenseMatrix,
    core: DenseTensor3,
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
    rank_deficient: bool,
) -> Result<RankApproximation> {
    let obj = core.frobenius_norm();
    if obj == 0.0 {
        return Err(TensError::DegenerateObjective);
    }
    Ok(RankApproximation {
        u,
        v,
        w,
        core,
        restart_objectives: vec![obj],
        objective_history: history,
        iterations,
        converged,
        rank_deficient,
        restarts_disagree: false,
    })
}

fn pick_best(runs: Vec<Result<RankApproximation>>) -> Result<RankApproximation> {
    let mut objectives = Vec::with_capacity(runs.len());
    let mut best: Option<RankApproximation> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(a) => {
                let obj = a.objective();
                objectives.push(obj);
                if best.as_ref().is_none_or(|b| obj > b.objective()) {
                    best = Some(a);
                }
            }
            Err(e) => {
                objectives.push(0.0);
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(mut best) = best else {
        return Err(first_err.unwrap_or(TensError::DegenerateObjective));
    };
    let top = best.objective();
    best.restarts_disagree = objectives
        .iter()
        .any(|&o| top - o > RESTART_AGREEMENT * top);
    best.restart_objectives = objectives;
    Ok(best)
}

/// Approximates a general tensor through the symmetric solver applied to
/// its embedding `(0 A; A' 0)`.
///
/// The shared factor of the embedded problem has `r1 + r2` columns; its top
/// `l` rows give the mode-1 subspace and its bottom `m` rows the mode-2
/// subspace, each re-orthonormalized to `r1` and `r2` columns. The temporal
/// factor is computed directly from `a`, and HOOI sweeps on `a` started from
/// these factors finish the job.
pub fn approx_nonsymmetric_via_embedding(
    a: &SparseTensor3,
    ranks: [usize; 3],
    cfg: &SolverConfig,
) -> Result<RankApproximation> {
    check_ranks(a.dims(), ranks)?;
    let [l, m, _] = a.dims();
    let embedded = a.symmetric_embed();
    let joint = ranks[0] + ranks[1];
    let sym = hooi_symmetric(
        &TensorView::new(&embedded, cfg.execution),
        [joint, joint, ranks[2]],
        cfg,
    )?;
    let top = DenseMatrix::from_fn(l, joint, |i, c| sym.u[(i, c)]);
    let bottom = DenseMatrix::from_fn(m, joint, |j, c| sym.u[(l + j, c)]);
    let su = leading_left_subspace(&top, ranks[0]);
    let sv = leading_left_subspace(&bottom, ranks[1]);
    // The embedded optimum need not split into optimal blocks once the
    // ranks exceed one, so the split factors seed plain HOOI sweeps on `a`.
    let view = TensorView::new(a, cfg.execution);
    let c3 = view.contract_except(Mode::Three, &su.basis, &sv.basis);
    let sw = leading_left_subspace(&c3.unfold(Mode::Three), ranks[2]);
    let mut out = iterate_general(
        &view,
        ranks,
        cfg,
        Start {
            u: su.basis,
            v: sv.basis,
            w: sw.basis,
            rank_deficient: sym.rank_deficient || su.rank_deficient || sv.rank_deficient || sw.rank_deficient,
        },
    )?;
    out.iterations += sym.iterations;
    out.converged &= sym.converged;
    out.restarts_disagree = sym.restarts_disagree;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::subspace_distance;

    fn rank_one(a: &[f64], b: &[f64], c: &[f64]) -> SparseTensor3 {
        let mut raw = Vec::new();
        for (k, &ck) in c.iter().enumerate() {
            for (i, &ai) in a.iter().enumerate() {
                for (j, &bj) in b.iter().enumerate() {
                    raw.push((i, j, k, ai * bj * ck));
                }
            }
        }
        SparseTensor3::new([a.len(), b.len(), c.len()], raw).unwrap()
    }

    fn unit(v: &[f64]) -> DenseMatrix {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        DenseMatrix::from_fn(v.len(), 1, |i, _| v[i] / n)
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            max_iters: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }

    #[test]
    fn hosvd_recovers_rank_one_factors() {
        let (a, b, c) = ([1.0, -2.0, 0.5], [0.3, 0.1, 1.0, 2.0], [1.0, 1.0]);
        let t = rank_one(&a, &b, &c);
        let h = hosvd_init(&t, [1, 1, 1]).unwrap();
        assert!(subspace_distance(&h.u, &unit(&a)) < 1e-12);
        assert!(subspace_distance(&h.v, &unit(&b)) < 1e-12);
        assert!(subspace_distance(&h.w, &unit(&c)) < 1e-12);
    }

    #[test]
    fn hosvd_full_rank_diagonal() {
        let t = SparseTensor3::new([3, 3, 3], (0..3).map(|i| (i, i, i, 1.0 + i as f64))).unwrap();
        let h = hosvd_init(&t, [3, 3, 3]).unwrap();
        for f in [&h.u, &h.v, &h.w] {
            assert!(f.orthonormality_error() < 1e-14);
        }
        let core = t.multi_multiply(&h.u, &h.v, &h.w).unwrap();
        assert!((core.frobenius_norm() - t.frobenius_norm()).abs() < 1e-13);
    }

    #[test]
    fn rank_errors() {
        let t = rank_one(&[1.0, 2.0], &[1.0], &[1.0, 1.0]);
        assert!(matches!(
            hooi(&t, [1, 2, 1], &SolverConfig::default()),
            Err(TensError::RankOutOfRange { .. })
        ));
        let zero = SparseTensor3::empty([2, 2, 2]).unwrap();
        assert!(matches!(
            hooi(&zero, [1, 1, 1], &SolverConfig::default()),
            Err(TensError::DegenerateObjective)
        ));
    }

    #[test]
    fn exact_rank_one_converges_immediately() {
        let t = rank_one(&[1.0, 2.0, 3.0], &[0.5, -1.0], &[2.0, 0.0, 1.0]);
        let approx = hooi(&t, [1, 1, 1], &SolverConfig::default()).unwrap();
        assert!(approx.converged);
        assert!(approx.iterations <= 2);
        assert!(approx.residual_norm_sq(&t).sqrt() < 1e-10);
        let dense = reconstruct(&approx);
        assert!(dense.max_abs_diff(&t.to_dense()) < 1e-12);
    }

    #[test]
    fn symmetric_solver_rejects_asymmetric_input() {
        let t = SparseTensor3::new([2, 2, 1], vec![(0, 1, 0, 1.0)]).unwrap();
        assert!(matches!(
            hooi_symmetric(&t, [1, 1, 1], &SolverConfig::default()),
            Err(TensError::Asymmetric(_))
        ));
        let t = SparseTensor3::new([2, 2, 1], vec![(0, 1, 0, 1.0), (1, 0, 0, 1.0)]).unwrap();
        assert!(matches!(
            hooi_symmetric(&t, [1, 2, 1], &SolverConfig::default()),
            Err(TensError::InvalidArgument(_))
        ));
    }

    #[test]
    fn symmetric_single_slice_outer_product() {
        let u = [0.2, 0.9, -0.4, 0.1];
        let raw: Vec<_> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j, 0, u[i] * u[j])))
            .collect();
        let t = SparseTensor3::new([4, 4, 1], raw).unwrap();
        let approx = hooi_symmetric(&t, [1, 1, 1], &SolverConfig::default()).unwrap();
        assert!(subspace_distance(&approx.u, &unit(&u)) < 1e-12);
        assert_eq!(approx.u, approx.v);
        assert!(approx.core_asymmetry() < 1e-10);
    }

    #[test]
    fn embedding_recovers_outer_product_slice() {
        let x = [1.0, 0.5, -0.25];
        let y = [0.3, 0.0, 0.7, 1.1];
        let t = rank_one(&x, &y, &[1.0]);
        let approx = approx_nonsymmetric_via_embedding(&t, [1, 1, 1], &SolverConfig::default()).unwrap();
        assert!(subspace_distance(&approx.u, &unit(&x)) < 1e-12);
        assert!(subspace_distance(&approx.v, &unit(&y)) < 1e-12);
        assert!((approx.objective() - t.frobenius_norm()).abs() < 1e-12);
    }
}

//! Randomized SVD for under-determined systems.
//!
//! The sketch samples the row space: with a Gaussian `Ω` (l×m),
//! `Y = Ω·A` spans approximately the range of `Aᵀ`. A QR factorization of
//! `Yᵀ` gives an orthonormal basis `Q` (n×l), the projected matrix is
//! `B = A·Q` (m×l), and the leading singular triples of `B` are recovered
//! from the eigendecomposition of the small Gram matrix `BᵀB`:
//!
//! ```text
//! BᵀB = Ṽ D Ṽᵀ,  Σ = √D,  V = Q·Ṽ,  U = B·Ṽ·Σ⁻¹
//! ```
//!
//! Only two passes over `A` are made (`Ω·A` and `A·Q`).

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{self, HouseholderQr, MatRef};
use crate::operator::SystemMatrix;
use crate::{Error, Result};

/// Relative eigenvalue floor below which a Gram eigenvalue counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-14;

/// Default oversampling `p`.
pub const DEFAULT_OVERSAMPLING: usize = 10;

/// Rank-q factorization `A ≈ U·diag(sigma)·Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    /// m×q, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Descending, positive.
    pub sigma: Vec<f64>,
    /// n×q, orthonormal columns.
    pub v: DMatrix<f64>,
    /// Sketch width `l` the triple was computed from (`q` for dense SVDs).
    pub sketch: usize,
}

impl SvdTriple {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `Uᵀ·r`.
    pub fn project(&self, r: &[f64]) -> Vec<f64> {
        linalg::matvec(MatRef::from(&self.u).t(), r)
    }

    /// Dense `U·Σ·Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        linalg::matmul((&us).into(), MatRef::from(&self.v).t())
    }

    /// Leading `q` triples.
    pub fn truncated(&self, q: usize) -> SvdTriple {
        let q = q.min(self.rank());
        SvdTriple {
            u: self.u.columns(0, q).into_owned(),
            sigma: self.sigma[..q].to_vec(),
            v: self.v.columns(0, q).into_owned(),
            sketch: self.sketch,
        }
    }
}

/// How the singular triples of the projected matrix `B` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmallFactorization {
    /// Eigendecomposition of `BᵀB`.
    #[default]
    Gram,
    /// Direct SVD of `B`; for severely ill-conditioned inputs.
    Direct,
}

/// How `B = A·Q` is formed from the factored QR of `Yᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QApplication {
    /// Materialize `A` and apply the block reflectors from the right.
    Factored,
    /// Accumulate the thin `Q` from the reflectors, then one product `A·Q`.
    #[default]
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsvdConfig {
    /// Target rank `q`.
    pub rank: usize,
    /// Oversampling `p`.
    pub oversampling: usize,
    pub seed: u64,
    pub small: SmallFactorization,
    pub q_application: QApplication,
}

impl RsvdConfig {
    pub fn new(rank: usize, seed: u64) -> Self {
        RsvdConfig {
            rank,
            oversampling: DEFAULT_OVERSAMPLING,
            seed,
            small: SmallFactorization::default(),
            q_application: QApplication::default(),
        }
    }

    /// `l = min(q + p, m)`.
    pub fn sketch_size(&self, m: usize) -> usize {
        (self.rank + self.oversampling).min(m)
    }
}

/// Gaussian test matrix Ω (l×m), returned transposed as m×l. Entries are
/// drawn row by row from ChaCha8 seeded with `seed`.
pub fn gaussian_sketch_t(l: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut omega_t = DMatrix::zeros(m, l);
    for i in 0..l {
        for j in 0..m {
            omega_t[(j, i)] = StandardNormal.sample(&mut rng);
        }
    }
    omega_t
}

/// Orthonormal basis for the sampled row space, used to lift small right
/// singular vectors back to the full model space.
pub trait RightBasis {
    /// Number of basis vectors `l`.
    fn width(&self) -> usize;
    /// `Q·small` for an l×k block.
    fn lift(&self, small: &DMatrix<f64>) -> DMatrix<f64>;
}

impl RightBasis for DMatrix<f64> {
    fn width(&self) -> usize {
        self.ncols()
    }

    fn lift(&self, small: &DMatrix<f64>) -> DMatrix<f64> {
        linalg::matmul(self.into(), small.into())
    }
}

impl RightBasis for HouseholderQr {
    fn width(&self) -> usize {
        self.rank()
    }

    fn lift(&self, small: &DMatrix<f64>) -> DMatrix<f64> {
        let mut padded = DMatrix::zeros(self.nrows(), small.ncols());
        padded.rows_mut(0, small.nrows()).copy_from(small);
        self.apply_q(&mut padded);
        padded
    }
}

/// Rank-q randomized SVD of an under-determined `a` (m ≤ n).
pub fn rsvd<A: SystemMatrix + ?Sized>(a: &A, cfg: &RsvdConfig) -> Result<SvdTriple> {
    let (m, n) = (a.nrows(), a.ncols());
    if m > n {
        return Err(Error::InvalidParameter(alloc::format!(
            "randomized SVD expects an under-determined matrix, got {m}×{n}"
        )));
    }
    if cfg.rank == 0 || cfg.rank > m {
        return Err(Error::InvalidParameter(alloc::format!(
            "target rank {} must lie in 1..={m}",
            cfg.rank
        )));
    }
    let l = cfg.sketch_size(m);

    let omega_t = gaussian_sketch_t(l, m, cfg.seed);
    // Yᵀ = Aᵀ Ωᵀ (n×l)
    let y_t = a.tr_mul_block(&omega_t);
    let qr = HouseholderQr::new(y_t);

    match cfg.q_application {
        QApplication::Explicit => {
            let q = qr.thin_q();
            let b = a.mul_block(&q);
            small_svd(&b, &q, cfg.rank, cfg.small)
        }
        QApplication::Factored => {
            let mut aq = a.to_dense();
            qr.apply_q_right(&mut aq);
            let b = aq.columns(0, l).into_owned();
            drop(aq);
            small_svd(&b, &qr, cfg.rank, cfg.small)
        }
    }
}

fn small_svd<Q: RightBasis>(
    b: &DMatrix<f64>,
    basis: &Q,
    q: usize,
    method: SmallFactorization,
) -> Result<SvdTriple> {
    match method {
        SmallFactorization::Gram => eig_to_svd(b, basis, q),
        SmallFactorization::Direct => direct_to_svd(b, basis, q),
    }
}

/// Leading `q` singular triples of `A ≈ B·Qᵀ` from the eigendecomposition
/// of `BᵀB`.
pub fn eig_to_svd<Q: RightBasis>(b: &DMatrix<f64>, basis: &Q, q: usize) -> Result<SvdTriple> {
    let l = b.ncols();
    if basis.width() != l {
        return Err(Error::DimensionMismatch {
            context: "basis width",
            expected: l,
            found: basis.width(),
        });
    }
    if q == 0 || q > l {
        return Err(Error::InvalidParameter(alloc::format!(
            "requested rank {q} must lie in 1..={l}"
        )));
    }
    let (values, vectors) = linalg::symmetric_eigen_desc(linalg::gram(b));
    let sigma = leading_singular_values(&values, q)?;

    let v_small = vectors.columns(0, q).into_owned();
    let mut u = linalg::matmul(b.into(), (&v_small).into());
    for (j, s) in sigma.iter().enumerate() {
        u.column_mut(j).unscale_mut(*s);
    }
    let v = basis.lift(&v_small);
    Ok(SvdTriple {
        u,
        sigma,
        v,
        sketch: l,
    })
}

/// Square roots of the leading `q` eigenvalues, after clamping round-off
/// negatives to zero. Fails when any of them is numerically zero.
fn leading_singular_values(values: &[f64], q: usize) -> Result<Vec<f64>> {
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let floor = RANK_TOLERANCE * top;
    let achievable = values.iter().take_while(|&&v| v > floor && v > 0.0).count();
    if achievable < q {
        return Err(Error::RankDeficient {
            requested: q,
            achievable,
        });
    }
    Ok(values[..q].iter().map(|&v| libm::sqrt(v.max(0.0))).collect())
}

fn direct_to_svd<Q: RightBasis>(b: &DMatrix<f64>, basis: &Q, q: usize) -> Result<SvdTriple> {
    let l = b.ncols();
    if q == 0 || q > l.min(b.nrows()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "requested rank {q} exceeds the projected matrix size"
        )));
    }
    let svd = nalgebra::SVD::new(b.clone(), true, true);
    let (u_full, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("both singular vector sets were requested"),
    };
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let top = svd.singular_values[order[0]];
    let achievable = order
        .iter()
        .take_while(|&&i| svd.singular_values[i] > libm::sqrt(RANK_TOLERANCE) * top)
        .count();
    if achievable < q {
        return Err(Error::RankDeficient {
            requested: q,
            achievable,
        });
    }
    let sigma = order[..q].iter().map(|&i| svd.singular_values[i]).collect();
    let u = DMatrix::from_fn(b.nrows(), q, |r, c| u_full[(r, order[c])]);
    let v_small = DMatrix::from_fn(l, q, |r, c| v_t[(order[c], r)]);
    Ok(SvdTriple {
        u,
        sigma,
        v: basis.lift(&v_small),
        sketch: l,
    })
}

/// Thin SVD of an under-determined matrix through the eigendecomposition
/// of the m×m matrix `A·Aᵀ`. Returns every triple with a numerically
/// positive singular value.
pub fn dense_svd_underdetermined<A: SystemMatrix + ?Sized>(a: &A) -> Result<SvdTriple> {
    let (m, n) = (a.nrows(), a.ncols());
    if m > n {
        return Err(Error::InvalidParameter(alloc::format!(
            "dense SVD expects an under-determined matrix, got {m}×{n}"
        )));
    }
    let dense = a.to_dense();
    let view = MatRef::from(&dense);
    let mut aat = linalg::matmul(view, view.t());
    linalg::symmetrize(&mut aat);
    let (values, vectors) = linalg::symmetric_eigen_desc(aat);
    let top = values.first().copied().unwrap_or(0.0);
    let r = values
        .iter()
        .take_while(|&&v| v > RANK_TOLERANCE * top && v > 0.0)
        .count();
    let sigma: Vec<f64> = values[..r].iter().map(|&v| libm::sqrt(v)).collect();
    let u = vectors.columns(0, r).into_owned();
    let mut v = linalg::matmul(view.t(), (&u).into());
    for (j, s) in sigma.iter().enumerate() {
        v.column_mut(j).unscale_mut(*s);
    }
    Ok(SvdTriple {
        u,
        sigma,
        v,
        sketch: r,
    })
}

/// Per-step flop counts of the randomized SVD (a length-n dot product
/// costs 2n flops).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlopEstimate {
    /// Step 2, `Y = Ω·A`: `2lmn`.
    pub sketch: f64,
    /// Step 3, QR of `Yᵀ` without accumulating Q: `2l²(n − l/3)`.
    pub qr: f64,
    /// Step 4, `B = A·Q` with Q applied in factored form: `4lmn`.
    pub project: f64,
    /// Step 5, `BᵀB`: `2l²m`.
    pub gram: f64,
    /// Step 6, symmetric eigendecomposition: `EIGEN_FLOP_FACTOR·l³`.
    pub eigen: f64,
    /// Step 7, recovering `U_q` and `V_q`: `lq(2l + 3m)`.
    pub recover: f64,
}

/// Constant of the cubic eigendecomposition term (tridiagonal reduction
/// with accumulated transforms plus implicit QR, about 9l³).
pub const EIGEN_FLOP_FACTOR: f64 = 9.0;

impl FlopEstimate {
    pub fn total(&self) -> f64 {
        self.sketch + self.qr + self.project + self.gram + self.eigen + self.recover
    }

    /// Share of the total taken by the two passes over A (`6lmn`).
    pub fn dominant_fraction(&self) -> f64 {
        (self.sketch + self.project) / self.total()
    }
}

pub fn flop_estimate(m: usize, n: usize, l: usize, q: usize) -> FlopEstimate {
    let (m, n, l, q) = (m as f64, n as f64, l as f64, q as f64);
    FlopEstimate {
        sketch: 2.0 * l * m * n,
        qr: 2.0 * l * l * (n - l / 3.0),
        project: 4.0 * l * m * n,
        gram: 2.0 * l * l * m,
        eigen: EIGEN_FLOP_FACTOR * l * l * l,
        recover: l * q * (2.0 * l + 3.0 * m),
    }
}

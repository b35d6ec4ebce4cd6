//! Golub-Kahan bidiagonalization and the Krylov-subspace inversion.
//!
//! Starting from the residual `r`, t steps of the recursion
//!
//! ```text
//! β₁u₁ = r,  α₁v₁ = Aᵀu₁
//! βᵢ₊₁uᵢ₊₁ = A vᵢ − αᵢuᵢ
//! αᵢ₊₁vᵢ₊₁ = Aᵀuᵢ₊₁ − βᵢ₊₁vᵢ
//! ```
//!
//! produce `A·Vₜ = Uₜ₊₁·Bₜ` with `Bₜ` lower bidiagonal of size (t+1)×t.
//! The SVD `Bₜ = P·Σ·Zᵀ` lifts to an approximate SVD of `A` with factors
//! `Uₜ₊₁·P` and `Vₜ·Z`, which the inversion driver filters exactly like a
//! randomized SVD.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::inversion::{self, InversionConfig, InversionProblem, InversionResult, Solver};
use crate::linalg::{self, MatRef};
use crate::operator::SystemMatrix;
use crate::randsvd::{SvdTriple, RANK_TOLERANCE};
use crate::{Error, Result};

/// Relative size below which a new Krylov vector counts as zero.
pub const BREAKDOWN_TOLERANCE: f64 = 1e-12;

/// Output of t bidiagonalization steps.
#[derive(Debug, Clone, PartialEq)]
pub struct GkbFactorization {
    /// m×(t+1) left basis, or m×t after a breakdown in the last `u`.
    pub left: DMatrix<f64>,
    /// n×t right basis.
    pub right: DMatrix<f64>,
    /// α₁..αₜ
    pub alpha: Vec<f64>,
    /// β₂.. (one per extra left vector)
    pub beta: Vec<f64>,
    /// `‖r‖`
    pub beta1: f64,
    /// Steps requested.
    pub requested: usize,
    pub breakdown: bool,
}

impl GkbFactorization {
    /// Steps actually taken.
    pub fn steps(&self) -> usize {
        self.right.ncols()
    }

    /// The lower bidiagonal `Bₜ`.
    pub fn bidiagonal(&self) -> DMatrix<f64> {
        let t = self.steps();
        let mut b = DMatrix::zeros(self.left.ncols(), t);
        for i in 0..t {
            b[(i, i)] = self.alpha[i];
            if i + 1 < b.nrows() {
                b[(i + 1, i)] = self.beta[i];
            }
        }
        b
    }
}

/// Runs `steps` bidiagonalization steps on `a` from `r`. Each step costs one
/// product with `A` and one with `Aᵀ`. With `reorthogonalize`, every new
/// vector is orthogonalized twice against its whole block.
pub fn gkb<A: SystemMatrix + ?Sized>(
    a: &A,
    r: &[f64],
    steps: usize,
    reorthogonalize: bool,
) -> Result<GkbFactorization> {
    let (m, n) = (a.nrows(), a.ncols());
    if r.len() != m {
        return Err(Error::DimensionMismatch {
            context: "starting residual",
            expected: m,
            found: r.len(),
        });
    }
    if steps == 0 || steps > m.min(n) {
        return Err(Error::InvalidParameter(alloc::format!(
            "subspace dimension {steps} must lie in 1..={}",
            m.min(n)
        )));
    }
    let beta1 = linalg::norm2(r);
    if !(beta1 > 0.0) || !beta1.is_finite() {
        return Err(Error::InvalidParameter(
            "bidiagonalization needs a non-zero finite residual".into(),
        ));
    }

    let mut left = DMatrix::<f64>::zeros(m, steps + 1);
    let mut right = DMatrix::<f64>::zeros(n, steps);
    let mut alphas = Vec::with_capacity(steps);
    let mut betas = Vec::with_capacity(steps);
    for (dst, src) in left.column_mut(0).iter_mut().zip(r) {
        *dst = src / beta1;
    }

    let mut scale = 0.0f64;
    let mut breakdown = false;
    let mut left_cols = 1;
    for i in 0..steps {
        // αᵢ vᵢ = Aᵀuᵢ − βᵢ vᵢ₋₁
        let mut v = a.tr_mul_vec(left.column(i).as_slice());
        if i > 0 {
            let b = betas[i - 1];
            for (x, p) in v.iter_mut().zip(right.column(i - 1).iter()) {
                *x -= b * p;
            }
        }
        if reorthogonalize {
            orthogonalize(&mut v, &right, i);
        }
        let alpha = linalg::norm2(&v);
        scale = scale.max(alpha);
        if alpha <= BREAKDOWN_TOLERANCE * scale || alpha == 0.0 {
            if i == 0 {
                return Err(Error::InvalidParameter(
                    "residual is orthogonal to the range of the system matrix".into(),
                ));
            }
            breakdown = true;
            break;
        }
        for (dst, x) in right.column_mut(i).iter_mut().zip(&v) {
            *dst = x / alpha;
        }
        alphas.push(alpha);

        // βᵢ₊₁ uᵢ₊₁ = A vᵢ − αᵢ uᵢ
        let mut u = a.mul_vec(right.column(i).as_slice());
        for (x, p) in u.iter_mut().zip(left.column(i).iter()) {
            *x -= alpha * p;
        }
        if reorthogonalize {
            orthogonalize(&mut u, &left, i + 1);
        }
        let beta = linalg::norm2(&u);
        scale = scale.max(beta);
        if beta <= BREAKDOWN_TOLERANCE * scale || beta == 0.0 {
            breakdown = true;
            break;
        }
        for (dst, x) in left.column_mut(i + 1).iter_mut().zip(&u) {
            *dst = x / beta;
        }
        betas.push(beta);
        left_cols = i + 2;
    }

    let t = alphas.len();
    let left = left.columns(0, left_cols).into_owned();
    let right = right.columns(0, t).into_owned();
    betas.truncate(left_cols - 1);
    Ok(GkbFactorization {
        left,
        right,
        alpha: alphas,
        beta: betas,
        beta1,
        requested: steps,
        breakdown,
    })
}

/// Two Gram-Schmidt passes of `w` against the first `k` columns of `basis`.
fn orthogonalize(w: &mut [f64], basis: &DMatrix<f64>, k: usize) {
    if k == 0 {
        return;
    }
    let rows = basis.nrows();
    let block = MatRef::col_major(&basis.as_slice()[..rows * k], rows, k);
    for _ in 0..2 {
        let c = linalg::matvec(block.t(), w);
        let proj = linalg::matvec(block, &c);
        for (x, p) in w.iter_mut().zip(&proj) {
            *x -= p;
        }
    }
}

/// Approximate SVD of `A` carried by the Krylov bases. Singular values of
/// `Bₜ` below the rank tolerance are dropped.
pub fn subspace_svd(gkb: &GkbFactorization) -> SvdTriple {
    let b = gkb.bidiagonal();
    let svd = nalgebra::SVD::new(b, true, true);
    let (p, z_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("both singular vector sets were requested"),
    };
    let values = svd.singular_values;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let top = order.first().map_or(0.0, |&i| values[i]);
    order.retain(|&i| values[i] > libm::sqrt(RANK_TOLERANCE) * top && values[i] > 0.0);
    let k = order.len();

    let p_sel = DMatrix::from_fn(p.nrows(), k, |r, c| p[(r, order[c])]);
    let z_sel = DMatrix::from_fn(z_t.ncols(), k, |r, c| z_t[(order[c], r)]);
    SvdTriple {
        u: linalg::matmul((&gkb.left).into(), (&p_sel).into()),
        sigma: order.iter().map(|&i| values[i]).collect(),
        v: linalg::matmul((&gkb.right).into(), (&z_sel).into()),
        sketch: gkb.steps(),
    }
}

/// Reweighted inversion on a `steps`-dimensional Krylov subspace with the
/// truncated UPRE rule.
pub fn lsqr_invert(
    problem: &InversionProblem<'_>,
    steps: usize,
    cfg: &InversionConfig,
) -> Result<InversionResult> {
    let cfg = InversionConfig {
        solver: Solver::Lsqr { steps },
        ..cfg.clone()
    };
    inversion::invert(problem, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::filtered_solve;
    use crate::kernel::KernelMatrix;
    use crate::operator::ScaledKernel;
    use crate::randsvd;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    fn max_orthogonality_error(q: &DMatrix<f64>) -> f64 {
        let g = q.transpose() * q;
        (g - DMatrix::identity(q.ncols(), q.ncols())).abs().max()
    }

    #[test]
    fn single_step() {
        let a = random(5, 8, 1);
        let r: Vec<f64> = random(5, 1, 2).as_slice().to_vec();
        let f = gkb(&a, &r, 1, true).unwrap();
        assert_eq!(f.steps(), 1);
        assert_eq!(f.bidiagonal().shape(), (2, 1));
        let atu = a.transpose() * f.left.column(0);
        assert!((atu.norm() - f.alpha[0]).abs() < 1e-12);
        assert!((f.beta1 - linalg::norm2(&r)).abs() < 1e-14);
    }

    #[test]
    fn bases_and_relation() {
        let a = random(60, 200, 3);
        let r: Vec<f64> = random(60, 1, 4).as_slice().to_vec();
        let f = gkb(&a, &r, 30, true).unwrap();
        assert!(!f.breakdown);
        assert!(max_orthogonality_error(&f.left) < 1e-10);
        assert!(max_orthogonality_error(&f.right) < 1e-10);
        let lhs = &a * &f.right;
        let rhs = &f.left * f.bidiagonal();
        let norm_a = nalgebra::SVD::new(a.clone(), false, false).singular_values[0];
        assert!((lhs - rhs).norm() <= 1e-8 * norm_a);
    }

    #[test]
    fn product_counts() {
        let data: Vec<f64> = random(30, 90, 5).transpose().as_slice().to_vec();
        let kernel = KernelMatrix::from_row_major(30, 90, data).unwrap();
        let rows = vec![1.0; 30];
        let op = ScaledKernel::new(&kernel, &rows, vec![0.5; 90]).unwrap();
        let r: Vec<f64> = random(30, 1, 6).as_slice().to_vec();
        let f = gkb(&op, &r, 12, true).unwrap();
        assert_eq!(f.steps(), 12);
        let v = op.visits();
        assert_eq!(v.forward_products, 12);
        assert_eq!(v.transpose_products, 12);
        assert_eq!(v.block_products, 0);
        assert_eq!(v.densifications, 0);
    }

    #[test]
    fn breakdown_on_low_rank() {
        // rank 3: the Krylov space is exhausted after three steps
        let a = random(10, 3, 7) * random(3, 20, 8);
        let r: Vec<f64> = random(10, 1, 9).as_slice().to_vec();
        let f = gkb(&a, &r, 8, true).unwrap();
        assert!(f.breakdown);
        assert!(f.steps() <= 4);
        let lhs = &a * &f.right;
        let rhs = &f.left * f.bidiagonal();
        assert!((lhs - rhs).norm() < 1e-8 * a.norm());
    }

    #[test]
    fn full_subspace_matches_dense_solution() {
        let a = random(20, 60, 10);
        let r: Vec<f64> = random(20, 1, 11).as_slice().to_vec();
        let f = gkb(&a, &r, 20, true).unwrap();
        let sub = subspace_svd(&f);
        let dense = randsvd::dense_svd_underdetermined(&a).unwrap();
        for alpha in [0.1, 1.0, 5.0] {
            let h = filtered_solve(&sub, &r, alpha).unwrap();
            let oracle = filtered_solve(&dense, &r, alpha).unwrap();
            let diff: Vec<f64> = h.iter().zip(&oracle).map(|(x, y)| x - y).collect();
            assert!(linalg::norm2(&diff) <= 1e-6 * linalg::norm2(&oracle));
        }
        // subspace spectrum bounded by the true one
        assert!(sub.sigma[0] <= dense.sigma[0] * (1.0 + 1e-10));
    }

    #[test]
    fn rejections() {
        let a = random(4, 6, 12);
        assert!(gkb(&a, &[1.0; 4], 0, true).is_err());
        assert!(gkb(&a, &[1.0; 4], 5, true).is_err());
        assert!(gkb(&a, &[1.0; 3], 2, true).is_err());
        assert!(gkb(&a, &[0.0; 4], 2, true).is_err());
    }
}

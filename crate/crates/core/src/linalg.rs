//! Dense kernels shared by the factorizations: strided GEMM, blocked
//! Householder QR with compact-WY block reflectors, and a sorted symmetric
//! eigendecomposition.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

/// Borrowed strided matrix view. Element `(i, j)` lives at
/// `data[i * row_stride + j * col_stride]`.
#[derive(Debug, Clone, Copy)]
pub struct MatRef<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    row_stride: usize,
    col_stride: usize,
}

impl<'a> MatRef<'a> {
    fn checked(data: &'a [f64], rows: usize, cols: usize, rs: usize, cs: usize) -> Self {
        if rows > 0 && cols > 0 {
            let last = (rows - 1) * rs + (cols - 1) * cs;
            assert!(last < data.len(), "matrix view exceeds its storage");
        }
        MatRef {
            data,
            rows,
            cols,
            row_stride: rs,
            col_stride: cs,
        }
    }

    pub fn row_major(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self::checked(data, rows, cols, cols, 1)
    }

    pub fn col_major(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self::checked(data, rows, cols, 1, rows)
    }

    pub fn from_dmatrix(m: &'a DMatrix<f64>) -> Self {
        Self::col_major(m.as_slice(), m.nrows(), m.ncols())
    }

    /// Single column vector.
    pub fn column(v: &'a [f64]) -> Self {
        Self::col_major(v, v.len(), 1)
    }

    pub fn t(self) -> Self {
        MatRef {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.row_stride + j * self.col_stride]
    }
}

impl<'a> From<&'a DMatrix<f64>> for MatRef<'a> {
    fn from(m: &'a DMatrix<f64>) -> Self {
        MatRef::from_dmatrix(m)
    }
}

/// `c ← alpha·a·b + beta·c` with `c` column-major.
pub fn gemm_into(alpha: f64, a: MatRef<'_>, b: MatRef<'_>, beta: f64, c: &mut DMatrix<f64>) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    assert_eq!(c.nrows(), a.rows, "output rows differ");
    assert_eq!(c.ncols(), b.cols, "output columns differ");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        *c *= beta;
        return;
    }
    let crs = 1isize;
    let ccs = m as isize;
    // SAFETY: both views were bounds-checked at construction and `c` has
    // exactly m×n column-major storage.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr(),
            b.row_stride as isize,
            b.col_stride as isize,
            beta,
            c.as_mut_slice().as_mut_ptr(),
            crs,
            ccs,
        );
    }
}

pub fn matmul(a: MatRef<'_>, b: MatRef<'_>) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(a.rows, b.cols);
    gemm_into(1.0, a, b, 0.0, &mut c);
    c
}

pub fn matvec(a: MatRef<'_>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.cols, x.len());
    let y = matmul(a, MatRef::column(x));
    y.as_slice().to_vec()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    // scaled to avoid overflow on large residuals
    let scale = a.iter().fold(0.0f64, |s, v| s.max(libm::fabs(*v)));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let sum: f64 = a.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * libm::sqrt(sum)
}

pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    norm2(a.as_slice())
}

/// Householder QR of a tall matrix, reflectors kept in factored form.
///
/// The factor is stored LAPACK style: R on and above the diagonal, the
/// essential parts of the Householder vectors below it, scalars in `tau`.
/// `Q = H_0 H_1 ⋯ H_{k-1}` with `H_i = I - tau_i v_i v_iᵀ`.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    factors: DMatrix<f64>,
    tau: Vec<f64>,
}

const QR_BLOCK: usize = 32;

impl HouseholderQr {
    pub fn new(mut a: DMatrix<f64>) -> Self {
        let (n, l) = a.shape();
        let kmax = n.min(l);
        let mut tau = vec![0.0; kmax];
        let mut start = 0;
        while start < kmax {
            let nb = QR_BLOCK.min(kmax - start);
            // unblocked factorization of the panel
            for c in start..start + nb {
                tau[c] = make_reflector(&mut a, c);
                apply_reflector_left(&mut a, c, tau[c], c + 1, start + nb);
            }
            // block update of the trailing columns: C ← (I - V T Vᵀ)ᵀ C
            if start + nb < l {
                let v = reflector_block(&a, start, nb);
                let t = triangular_factor(&v, &tau[start..start + nb]);
                let rows = n - start;
                let trailing = l - start - nb;
                let c_view = sub_view(&a, start, start + nb, rows, trailing);
                let w = matmul(MatRef::from_dmatrix(&v).t(), c_view); // nb × trailing
                let tw = matmul(MatRef::from_dmatrix(&t).t(), MatRef::from_dmatrix(&w));
                let update = matmul(MatRef::from_dmatrix(&v), MatRef::from_dmatrix(&tw));
                for jc in 0..trailing {
                    let col = start + nb + jc;
                    for i in 0..rows {
                        a[(start + i, col)] -= update[(i, jc)];
                    }
                }
            }
            start += nb;
        }
        HouseholderQr { factors: a, tau }
    }

    pub fn nrows(&self) -> usize {
        self.factors.nrows()
    }

    /// Number of reflectors (columns of the thin Q).
    pub fn rank(&self) -> usize {
        self.tau.len()
    }

    pub fn r(&self) -> DMatrix<f64> {
        let k = self.rank();
        let l = self.factors.ncols();
        DMatrix::from_fn(k, l, |i, j| if i <= j { self.factors[(i, j)] } else { 0.0 })
    }

    fn blocks(&self) -> impl DoubleEndedIterator<Item = (usize, usize)> + '_ {
        let k = self.rank();
        (0..k.div_ceil(QR_BLOCK)).map(move |b| {
            let start = b * QR_BLOCK;
            (start, QR_BLOCK.min(k - start))
        })
    }

    /// `x ← Q x` for an n×c block, applied reflector block by block.
    pub fn apply_q(&self, x: &mut DMatrix<f64>) {
        assert_eq!(x.nrows(), self.nrows());
        for (start, nb) in self.blocks().rev() {
            let v = reflector_block(&self.factors, start, nb);
            let t = triangular_factor(&v, &self.tau[start..start + nb]);
            apply_block_left(x, &v, &t, start, false);
        }
    }

    /// `x ← Qᵀ x`.
    pub fn apply_qt(&self, x: &mut DMatrix<f64>) {
        assert_eq!(x.nrows(), self.nrows());
        for (start, nb) in self.blocks() {
            let v = reflector_block(&self.factors, start, nb);
            let t = triangular_factor(&v, &self.tau[start..start + nb]);
            apply_block_left(x, &v, &t, start, true);
        }
    }

    /// `a ← a Q` for an m×n matrix `a`, without forming Q.
    pub fn apply_q_right(&self, a: &mut DMatrix<f64>) {
        assert_eq!(a.ncols(), self.nrows());
        let m = a.nrows();
        for (start, nb) in self.blocks() {
            let v = reflector_block(&self.factors, start, nb);
            let t = triangular_factor(&v, &self.tau[start..start + nb]);
            let rows = self.nrows() - start;
            // a[:, start..] ← a[:, start..] - (a[:, start..] V) T Vᵀ
            let av = matmul(sub_view(a, 0, start, m, rows), MatRef::from_dmatrix(&v));
            let avt = matmul(MatRef::from_dmatrix(&av), MatRef::from_dmatrix(&t));
            let update = matmul(MatRef::from_dmatrix(&avt), MatRef::from_dmatrix(&v).t());
            for jc in 0..rows {
                for i in 0..m {
                    a[(i, start + jc)] -= update[(i, jc)];
                }
            }
        }
    }

    /// Explicit thin Q (n×k).
    pub fn thin_q(&self) -> DMatrix<f64> {
        let n = self.nrows();
        let k = self.rank();
        let mut q = DMatrix::zeros(n, k);
        for i in 0..k {
            q[(i, i)] = 1.0;
        }
        self.apply_q(&mut q);
        q
    }
}

/// View of the `rows × cols` block of `a` starting at `(r0, c0)`.
fn sub_view(a: &DMatrix<f64>, r0: usize, c0: usize, rows: usize, cols: usize) -> MatRef<'_> {
    let ld = a.nrows();
    let offset = r0 + c0 * ld;
    let data = &a.as_slice()[offset..];
    MatRef::checked(data, rows, cols, 1, ld)
}

/// Generates the reflector annihilating column `c` below the diagonal and
/// stores its essential part in place. Returns tau.
fn make_reflector(a: &mut DMatrix<f64>, c: usize) -> f64 {
    let n = a.nrows();
    let col = &mut a.column_mut(c);
    let alpha = col[c];
    let tail = &col.as_mut_slice()[c + 1..n];
    let xnorm = norm2(tail);
    if xnorm == 0.0 {
        return 0.0;
    }
    let beta = -libm::copysign(libm::hypot(alpha, xnorm), alpha);
    let scale = 1.0 / (alpha - beta);
    for v in col.as_mut_slice()[c + 1..n].iter_mut() {
        *v *= scale;
    }
    col[c] = beta;
    (beta - alpha) / beta
}

/// Applies `H_c` (from column `c` of `a`) to columns `from..to` of `a`.
fn apply_reflector_left(a: &mut DMatrix<f64>, c: usize, tau: f64, from: usize, to: usize) {
    if tau == 0.0 {
        return;
    }
    let n = a.nrows();
    let ld = n;
    let data = a.as_mut_slice();
    let (head, tail) = data.split_at_mut(from * ld);
    let v = &head[c * ld + c + 1..c * ld + n];
    for j in 0..(to - from) {
        let col = &mut tail[j * ld + c..j * ld + n];
        let w = col[0] + dot(v, &col[1..]);
        let s = tau * w;
        col[0] -= s;
        for (x, vi) in col[1..].iter_mut().zip(v) {
            *x -= s * vi;
        }
    }
}

/// Explicit unit-lower-trapezoidal block of reflectors `start..start+nb`,
/// restricted to rows `start..`.
fn reflector_block(factors: &DMatrix<f64>, start: usize, nb: usize) -> DMatrix<f64> {
    let rows = factors.nrows() - start;
    DMatrix::from_fn(rows, nb, |i, j| {
        if i == j {
            1.0
        } else if i > j {
            factors[(start + i, start + j)]
        } else {
            0.0
        }
    })
}

/// Upper triangular T with `H_0 ⋯ H_{nb-1} = I - V T Vᵀ` (forward,
/// column-wise storage).
fn triangular_factor(v: &DMatrix<f64>, tau: &[f64]) -> DMatrix<f64> {
    let nb = tau.len();
    let mut t = DMatrix::zeros(nb, nb);
    for i in 0..nb {
        t[(i, i)] = tau[i];
        if i == 0 || tau[i] == 0.0 {
            continue;
        }
        // w = V[:, :i]ᵀ v_i
        let vi = v.column(i);
        let w: Vec<f64> = (0..i).map(|j| v.column(j).dot(&vi)).collect();
        for r in 0..i {
            let mut s = 0.0;
            for c in r..i {
                s += t[(r, c)] * w[c];
            }
            t[(r, i)] = -tau[i] * s;
        }
    }
    t
}

/// `x[start.., :] ← (I - V T Vᵀ) x` or with `Tᵀ` when `transpose`.
fn apply_block_left(
    x: &mut DMatrix<f64>,
    v: &DMatrix<f64>,
    t: &DMatrix<f64>,
    start: usize,
    transpose: bool,
) {
    let rows = v.nrows();
    let cols = x.ncols();
    let w = matmul(MatRef::from_dmatrix(v).t(), sub_view(x, start, 0, rows, cols));
    let t_view = if transpose {
        MatRef::from_dmatrix(t).t()
    } else {
        MatRef::from_dmatrix(t)
    };
    let tw = matmul(t_view, MatRef::from_dmatrix(&w));
    let update = matmul(MatRef::from_dmatrix(v), MatRef::from_dmatrix(&tw));
    for j in 0..cols {
        for i in 0..rows {
            x[(start + i, j)] -= update[(i, j)];
        }
    }
}

/// Eigenpairs of a symmetric matrix sorted by descending eigenvalue.
pub fn symmetric_eigen_desc(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let eig = nalgebra::SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `aᵀ a` for a column-major matrix.
pub fn gram(a: &DMatrix<f64>) -> DMatrix<f64> {
    let view = MatRef::from_dmatrix(a);
    let mut g = matmul(view.t(), view);
    symmetrize(&mut g);
    g
}

/// Averages `g` with its transpose to remove round-off asymmetry.
pub fn symmetrize(g: &mut DMatrix<f64>) {
    let n = g.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = s;
            g[(j, i)] = s;
        }
    }
}

//! Dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Thin singular value decomposition `m = u * diag(s) * v_t`, with `s`
/// sorted in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v_t: CMatrix,
}

pub fn svd(m: &CMatrix) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd {
            u: CMatrix::zeros(rows, 0),
            s: Vec::new(),
            v_t: CMatrix::zeros(0, cols),
        };
    }
    // nalgebra's complex SVD mis-handles some rank-deficient inputs
    let a = faer::Mat::<C64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    match a.thin_svd() {
        Ok(f) => {
            let (fu, fv) = (f.U(), f.V());
            let s = f.S().column_vector();
            Svd {
                u: CMatrix::from_fn(rows, k, |i, j| fu[(i, j)]),
                s: (0..k).map(|i| s[i].re).collect(),
                v_t: CMatrix::from_fn(k, cols, |i, j| fv[(j, i)].conj()),
            }
        }
        Err(_) => nalgebra_svd(m),
    }
}

fn nalgebra_svd(m: &CMatrix) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    let raw = m.clone().svd(true, true);
    let u = raw.u.expect("left singular vectors requested");
    let v_t = raw.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw.singular_values[b].total_cmp(&raw.singular_values[a]));
    let s = order.iter().map(|&i| raw.singular_values[i]).collect();
    let u = CMatrix::from_fn(rows, k, |r, c| u[(r, order[c])]);
    let v_t = CMatrix::from_fn(k, cols, |r, c| v_t[(order[r], c)]);
    Svd { u, s, v_t }
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues descending, with
/// eigenvectors as the matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    // symmetrize so rounding noise does not leak into the eigensolver
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

pub fn kron_all<'a, I: IntoIterator<Item = &'a CVector>>(vectors: I) -> CVector {
    vectors
        .into_iter()
        .fold(CVector::from_element(1, ONE), |acc, v| kron_vec(&acc, v))
}

/// `<a|b>`
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Returns the vector rotated so that its first component with magnitude
/// above `tol * max|v_i|` is real and positive, together with the phase that
/// was divided out (`v = phase * rotated`).
pub fn fix_phase(v: &CVector, tol: f64) -> (CVector, C64) {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return (v.clone(), ONE);
    }
    let lead = v
        .iter()
        .find(|z| z.norm() > tol * scale)
        .copied()
        .unwrap_or(ONE);
    let phase = lead / lead.norm();
    (v.map(|z| z / phase), phase)
}

/// Extends an orthonormal family to a `dim × dim` unitary whose leading
/// columns are the given vectors (re-orthonormalized).
pub fn complete_orthonormal(vectors: &[CVector], dim: usize) -> CMatrix {
    let mut basis: Vec<CVector> = Vec::with_capacity(dim);
    for v in vectors.iter().take(dim) {
        let r = orthogonalize(v, &basis);
        let n = r.norm();
        if n > 1e-12 {
            basis.push(r / C64::from(n));
        }
    }
    while basis.len() < dim {
        let mut best: Option<(f64, CVector)> = None;
        for k in 0..dim {
            let mut e = CVector::zeros(dim);
            e[k] = ONE;
            let r = orthogonalize(&e, &basis);
            let n = r.norm();
            if best.as_ref().is_none_or(|(bn, _)| n > *bn + 1e-12) {
                best = Some((n, r));
            }
        }
        let (n, r) = best.expect("dim > 0");
        basis.push(r / C64::from(n));
    }
    CMatrix::from_columns(&basis)
}

// twice-is-enough Gram-Schmidt
fn orthogonalize(v: &CVector, basis: &[CVector]) -> CVector {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = inner(b, &r);
            r -= b * c;
        }
    }
    r
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// `count` orthonormal vectors in dimension `dim`, from Gram-Schmidt on
/// Gaussian columns.
pub fn random_orthonormal<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Vec<CVector> {
    let g = gaussian_matrix(dim, count, rng);
    let mut out: Vec<CVector> = Vec::with_capacity(count);
    for c in 0..count {
        let r = orthogonalize(&g.column(c).into_owned(), &out);
        let n = r.norm();
        out.push(r / C64::from(n));
    }
    out
}

pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_columns(&random_orthonormal(dim, dim, rng))
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| acc.max(z.norm()))
}

/// Largest magnitude of an entry `(i, j)` with `i != j` (rectangular).
pub fn max_offdiag(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if r != c {
                worst = worst.max(m[(r, c)].norm());
            }
        }
    }
    worst
}

/// Frobenius distance of `u† u` from the identity.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    (g - CMatrix::identity(u.ncols(), u.ncols())).norm()
}

/// Gram matrix deviation `max |<v_i|v_j> - δ_ij|` of a vector family.
pub fn orthonormality_defect(vectors: &[CVector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((inner(a, b) - target).norm());
        }
    }
    worst
}

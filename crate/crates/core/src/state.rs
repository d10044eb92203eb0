//! Pure states, density matrices and the index arithmetic between them.
//!
//! Amplitudes are stored row-major with subsystem 1 slowest-varying: the
//! amplitude of `|i_1 i_2 ... i_n>` sits at `((i_1 * d_2 + i_2) * d_3 + ...)`.
//! Subsystem indices are 0-based in the API and 1-based in text and on the
//! command line.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ONE, ZERO};
use crate::tol::{self, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub struct StateTensor {
    dims: Vec<usize>,
    amplitudes: Vec<C64>,
    label: Option<String>,
}

impl StateTensor {
    /// Validates and builds a state. Inputs within the renormalization
    /// window of unit norm are rescaled; anything further off is rejected.
    pub fn new(dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self> {
        check_dims(&dims, amplitudes.len())?;
        let norm = norm_of(&amplitudes);
        if norm == 0.0 || !norm.is_finite() || (norm - 1.0).abs() > tol::RENORM_WINDOW {
            return Err(Error::NotNormalizable { norm });
        }
        Ok(Self::scaled(dims, amplitudes, norm))
    }

    /// Like [`StateTensor::new`] but rescales any nonzero vector.
    pub fn normalized(dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self> {
        check_dims(&dims, amplitudes.len())?;
        let norm = norm_of(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalizable { norm });
        }
        Ok(Self::scaled(dims, amplitudes, norm))
    }

    fn scaled(dims: Vec<usize>, mut amplitudes: Vec<C64>, norm: f64) -> Self {
        // Already unit up to rounding: keep the amplitudes bit-exact.
        if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
            amplitudes.iter_mut().for_each(|a| *a /= norm);
        }
        StateTensor { dims, amplitudes, label: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn to_vector(&self) -> CVector {
        CVector::from_column_slice(&self.amplitudes)
    }

    /// `|ψ><ψ|` with the same subsystem layout.
    pub fn density(&self) -> DensityMatrix {
        let v = self.to_vector();
        DensityMatrix::from_parts(self.dims.clone(), &v * v.adjoint())
    }

    /// `<self|other>`
    pub fn overlap(&self, other: &StateTensor) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Euclidean distance after removing the relative global phase.
    pub fn distance_up_to_phase(&self, other: &StateTensor) -> f64 {
        if self.dims != other.dims {
            return f64::INFINITY;
        }
        let ov = self.overlap(other);
        let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a * phase - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Plain Euclidean distance.
    pub fn distance(&self, other: &StateTensor) -> f64 {
        if self.dims != other.dims {
            return f64::INFINITY;
        }
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Tensor product `self ⊗ other`, subsystems concatenated.
    pub fn kron(&self, other: &StateTensor) -> StateTensor {
        let a = linalg::kron_vec(&self.to_vector(), &other.to_vector());
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        StateTensor { dims, amplitudes: a.as_slice().to_vec(), label: None }
    }

    /// Reorders subsystems: new subsystem `k` is old subsystem `order[k]`.
    pub fn permute_subsystems(&self, order: &[usize]) -> Result<StateTensor> {
        let n = self.dims.len();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&k| k >= n || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::InvalidPartition(format!("{order:?} is not a permutation of 0..{n}")));
        }
        let new_dims: Vec<usize> = order.iter().map(|&k| self.dims[k]).collect();
        let old_strides = strides(&self.dims);
        let mut out = vec![ZERO; self.amplitudes.len()];
        let mut digits = vec![0usize; n];
        for (flat, slot) in out.iter_mut().enumerate() {
            decode(flat, &new_dims, &mut digits);
            let src: usize = digits.iter().zip(order).map(|(&d, &k)| d * old_strides[k]).sum();
            *slot = self.amplitudes[src];
        }
        Ok(StateTensor { dims: new_dims, amplitudes: out, label: self.label.clone() })
    }

    /// Applies `u` to subsystem `k`, identity elsewhere.
    pub fn apply_local(&self, k: usize, u: &CMatrix) -> Result<StateTensor> {
        let d = *self
            .dims
            .get(k)
            .ok_or_else(|| Error::InvalidPartition(format!("no subsystem {}", k + 1)))?;
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, subsystem {} has dimension {d}",
                u.nrows(),
                u.ncols(),
                k + 1
            )));
        }
        let outer: usize = self.dims[..k].iter().product();
        let inner: usize = self.dims[k + 1..].iter().product();
        let mut out = vec![ZERO; self.amplitudes.len()];
        for o in 0..outer {
            for i in 0..inner {
                for r in 0..d {
                    let mut acc = ZERO;
                    for c in 0..d {
                        acc += u[(r, c)] * self.amplitudes[(o * d + c) * inner + i];
                    }
                    out[(o * d + r) * inner + i] = acc;
                }
            }
        }
        Ok(StateTensor { dims: self.dims.clone(), amplitudes: out, label: None })
    }

    /// Applies `⊗_k us[k]`.
    pub fn apply_local_all(&self, us: &[CMatrix]) -> Result<StateTensor> {
        if us.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} operators for {} subsystems",
                us.len(),
                self.dims.len()
            )));
        }
        us.iter()
            .enumerate()
            .try_fold(self.clone(), |s, (k, u)| s.apply_local(k, u))
    }
}

fn check_dims(dims: &[usize], len: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!(
            "dimensions must be a nonempty list of positive integers, got {dims:?}"
        )));
    }
    let total = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::DimensionMismatch("dimension product overflows".into()))?;
    if total != len {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} need {total} amplitudes, got {len}"
        )));
    }
    Ok(())
}

fn norm_of(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

pub(crate) fn decode(mut flat: usize, dims: &[usize], digits: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        digits[k] = flat % dims[k];
        flat /= dims[k];
    }
}

/// A split of subsystems `0..n` into two nonempty sorted sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bipartition {
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Bipartition {
    /// `left` must be a nonempty proper subset of `0..n` without repeats.
    pub fn new(left: &[usize], n: usize) -> Result<Self> {
        let mut l = left.to_vec();
        l.sort_unstable();
        if l.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPartition(format!("repeated index in {left:?}")));
        }
        if l.iter().any(|&k| k >= n) {
            return Err(Error::InvalidPartition(format!("index out of range 1..={n} in {:?}", one_based(&l))));
        }
        if l.is_empty() || l.len() == n {
            return Err(Error::InvalidPartition("both sides must be nonempty".into()));
        }
        let right = (0..n).filter(|k| l.binary_search(k).is_err()).collect();
        Ok(Bipartition { left: l, right })
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    pub fn num_subsystems(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn swapped(&self) -> Bipartition {
        Bipartition { left: self.right.clone(), right: self.left.clone() }
    }

    fn check_for(&self, dims: &[usize]) -> Result<()> {
        if self.num_subsystems() != dims.len() {
            return Err(Error::InvalidPartition(format!(
                "cut {self} is over {} subsystems, state has {}",
                self.num_subsystems(),
                dims.len()
            )));
        }
        Ok(())
    }
}

fn one_based(ix: &[usize]) -> Vec<usize> {
    ix.iter().map(|k| k + 1).collect()
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| v.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{}|{}", join(&self.left), join(&self.right))
    }
}

/// Coefficient matrix `M[flat(left)][flat(right)]` for the cut.
pub fn flatten(state: &StateTensor, cut: &Bipartition) -> Result<CMatrix> {
    cut.check_for(&state.dims)?;
    let dims = &state.dims;
    let rows: usize = cut.left.iter().map(|&k| dims[k]).product();
    let cols: usize = cut.right.iter().map(|&k| dims[k]).product();
    let st = strides(dims);
    let mut m = CMatrix::zeros(rows, cols);
    let mut digits = vec![0usize; dims.len()];
    for r in 0..rows {
        decode_subset(r, dims, &cut.left, &mut digits);
        let base: usize = cut.left.iter().map(|&k| digits[k] * st[k]).sum();
        for c in 0..cols {
            decode_subset(c, dims, &cut.right, &mut digits);
            let off: usize = cut.right.iter().map(|&k| digits[k] * st[k]).sum();
            m[(r, c)] = state.amplitudes[base + off];
        }
    }
    Ok(m)
}

/// Inverse of [`flatten`].
pub fn unflatten(m: &CMatrix, dims: &[usize], cut: &Bipartition) -> Result<StateTensor> {
    cut.check_for(dims)?;
    let rows: usize = cut.left.iter().map(|&k| dims[k]).product();
    let cols: usize = cut.right.iter().map(|&k| dims[k]).product();
    if m.shape() != (rows, cols) {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {:?}, cut {cut} needs {rows}x{cols}",
            m.shape()
        )));
    }
    let st = strides(dims);
    let mut amps = vec![ZERO; rows * cols];
    let mut digits = vec![0usize; dims.len()];
    for r in 0..rows {
        decode_subset(r, dims, &cut.left, &mut digits);
        let base: usize = cut.left.iter().map(|&k| digits[k] * st[k]).sum();
        for c in 0..cols {
            decode_subset(c, dims, &cut.right, &mut digits);
            let off: usize = cut.right.iter().map(|&k| digits[k] * st[k]).sum();
            amps[base + off] = m[(r, c)];
        }
    }
    StateTensor::normalized(dims.to_vec(), amps)
}

fn decode_subset(mut flat: usize, dims: &[usize], subset: &[usize], digits: &mut [usize]) {
    for &k in subset.iter().rev() {
        digits[k] = flat % dims[k];
        flat /= dims[k];
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix over `dims`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(dims: Vec<usize>, entries: CMatrix) -> Result<Self> {
        Self::with_tolerances(dims, entries, &Tolerances::default())
    }

    pub fn with_tolerances(dims: Vec<usize>, entries: CMatrix, tol: &Tolerances) -> Result<Self> {
        let side: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) || entries.shape() != (side, side) {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} need a {side}x{side} matrix, got {:?}",
                entries.shape()
            )));
        }
        let herm = linalg::max_abs(&(&entries - entries.adjoint()));
        if herm > tol.herm {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = entries.trace();
        if (tr - ONE).norm() > tol.norm {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        let (vals, _) = linalg::hermitian_eigen(&entries);
        let min = vals.last().copied().unwrap_or(0.0);
        if min < -tol.psd {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(DensityMatrix { dims, entries })
    }

    pub(crate) fn from_parts(dims: Vec<usize>, entries: CMatrix) -> Self {
        DensityMatrix { dims, entries }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn side(&self) -> usize {
        self.entries.nrows()
    }

    /// Eigenvalues, descending.
    pub fn spectrum(&self) -> Vec<f64> {
        linalg::hermitian_eigen(&self.entries).0
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityMatrix { dims, entries: self.entries.kronecker(&other.entries) }
    }
}

fn check_keep(keep: &[usize], n: usize) -> Result<Bipartition> {
    if n < 2 {
        return Err(Error::InvalidPartition("need at least two subsystems to trace out".into()));
    }
    Bipartition::new(keep, n)
}

/// Reduced state on `keep` as `M M†`, `M = flatten(state, keep|rest)`.
pub fn reduced_density(state: &StateTensor, keep: &[usize]) -> Result<DensityMatrix> {
    let cut = check_keep(keep, state.dims.len())?;
    let m = flatten(state, &cut)?;
    let dims = cut.left.iter().map(|&k| state.dims[k]).collect();
    Ok(DensityMatrix::from_parts(dims, &m * m.adjoint()))
}

/// Partial trace by direct index contraction, keeping the subsystems in
/// `keep` (in ascending order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = &rho.dims;
    let cut = check_keep(keep, dims.len())?;
    let kept: Vec<usize> = cut.left.iter().map(|&k| dims[k]).collect();
    let traced: Vec<usize> = cut.right.iter().map(|&k| dims[k]).collect();
    let side: usize = kept.iter().product();
    let tsize: usize = traced.iter().product();
    let st = strides(dims);
    let index = |kd: &[usize], td: &[usize]| -> usize {
        cut.left.iter().zip(kd).map(|(&k, &d)| d * st[k]).sum::<usize>()
            + cut.right.iter().zip(td).map(|(&k, &d)| d * st[k]).sum::<usize>()
    };
    let mut out = CMatrix::zeros(side, side);
    let (mut a, mut b, mut t) = (vec![0; kept.len()], vec![0; kept.len()], vec![0; traced.len()]);
    for r in 0..side {
        decode(r, &kept, &mut a);
        for c in 0..side {
            decode(c, &kept, &mut b);
            let mut acc = ZERO;
            for x in 0..tsize {
                decode(x, &traced, &mut t);
                acc += rho.entries[(index(&a, &t), index(&b, &t))];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(DensityMatrix::from_parts(kept, out))
}

/// `Σ_ℓ λ_ℓ ⊗_k |ℓ_k>` with per-subsystem orthonormal families.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition {
    coefficients: Vec<f64>,
    vectors: Vec<Vec<CVector>>,
    dims: Vec<usize>,
}

impl SchmidtDecomposition {
    /// `vectors[k][ℓ]` is the ℓ-th vector of subsystem `k`. Checks ordering,
    /// normalization and per-subsystem orthonormality.
    pub fn new(coefficients: Vec<f64>, vectors: Vec<Vec<CVector>>) -> Result<Self> {
        Self::with_tolerances(coefficients, vectors, &Tolerances::default())
    }

    pub fn with_tolerances(coefficients: Vec<f64>, vectors: Vec<Vec<CVector>>, tol: &Tolerances) -> Result<Self> {
        let r = coefficients.len();
        if r == 0 || vectors.is_empty() {
            return Err(Error::DimensionMismatch("empty decomposition".into()));
        }
        if coefficients.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
            return Err(Error::InvalidArgs(format!("coefficients must be positive: {coefficients:?}")));
        }
        if coefficients.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgs("coefficients must be sorted descending".into()));
        }
        let total: f64 = coefficients.iter().map(|l| l * l).sum();
        if (total - 1.0).abs() > tol.norm.max(tol::RENORM_WINDOW) {
            return Err(Error::NotNormalizable { norm: total.sqrt() });
        }
        let mut dims = Vec::with_capacity(vectors.len());
        for (k, fam) in vectors.iter().enumerate() {
            if fam.len() != r {
                return Err(Error::DimensionMismatch(format!(
                    "subsystem {} has {} vectors for {r} coefficients",
                    k + 1,
                    fam.len()
                )));
            }
            let d = fam[0].len();
            if d == 0 || fam.iter().any(|v| v.len() != d) {
                return Err(Error::DimensionMismatch(format!("ragged vectors on subsystem {}", k + 1)));
            }
            if r > d {
                return Err(Error::RankTooLarge { rank: r, max: d });
            }
            let defect = linalg::orthonormality_defect(fam);
            if defect > tol.orth {
                return Err(Error::InvalidArgs(format!(
                    "subsystem {} vectors are not orthonormal (defect {defect:.3e})",
                    k + 1
                )));
            }
            dims.push(d);
        }
        Ok(SchmidtDecomposition { coefficients, vectors, dims })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn vectors(&self) -> &[Vec<CVector>] {
        &self.vectors
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// Largest deviation from orthonormality over all subsystem families.
    pub fn orthonormality_defect(&self) -> f64 {
        self.vectors.iter().map(|f| linalg::orthonormality_defect(f)).fold(0.0, f64::max)
    }

    pub fn reconstruct(&self) -> StateTensor {
        let total: usize = self.dims.iter().product();
        let mut acc = CVector::zeros(total);
        for (l, &lambda) in self.coefficients.iter().enumerate() {
            let term = linalg::kron_all(self.vectors.iter().map(|fam| &fam[l]));
            acc += term * C64::from(lambda);
        }
        StateTensor::normalized(self.dims.clone(), acc.as_slice().to_vec())
            .expect("coefficients are positive, so the sum is nonzero")
    }
}

pub mod fixtures {
    //! Named reference states.

    use super::*;

    /// `(|001> + |010> + |100>)/√3`
    pub fn w_state() -> StateTensor {
        let a = C64::from(1.0 / 3f64.sqrt());
        let mut amps = vec![ZERO; 8];
        for i in [1, 2, 4] {
            amps[i] = a;
        }
        StateTensor::new(vec![2, 2, 2], amps).unwrap().with_label("W")
    }

    /// `(|0...0> + |1...1>)/√2` on `n` qubits.
    pub fn ghz(n: usize) -> StateTensor {
        assert!(n >= 1);
        let a = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = a;
        amps[(1 << n) - 1] = a;
        StateTensor::new(vec![2; n], amps).unwrap().with_label(format!("GHZ{n}"))
    }

    /// `(|00> + |11>)/√2`
    pub fn bell() -> StateTensor {
        ghz(2).with_label("Bell")
    }

    /// Computational basis state `|digits>`.
    pub fn basis_state(dims: &[usize], digits: &[usize]) -> Result<StateTensor> {
        if dims.len() != digits.len() || dims.iter().zip(digits).any(|(&d, &i)| i >= d) {
            return Err(Error::DimensionMismatch(format!("digits {digits:?} do not fit dims {dims:?}")));
        }
        let st = strides(dims);
        let total: usize = dims.iter().product();
        let mut amps = vec![ZERO; total];
        amps[digits.iter().zip(&st).map(|(i, s)| i * s).sum::<usize>()] = ONE;
        StateTensor::new(dims.to_vec(), amps)
    }

    /// `⊗_k v_k`, each factor normalized.
    pub fn product(factors: &[CVector]) -> Result<StateTensor> {
        let v = linalg::kron_all(factors.iter());
        StateTensor::normalized(factors.iter().map(|f| f.len()).collect(), v.as_slice().to_vec())
    }
}

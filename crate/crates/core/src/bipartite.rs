//! Bipartite Schmidt decomposition through the singular value decomposition
//! of the flattened coefficient matrix.

use crate::error::Result;
use crate::linalg::{self, CVector};
use crate::state::{self, Bipartition, SchmidtDecomposition, StateTensor};
use crate::tol::Tolerances;

/// Schmidt decomposition across a cut. The two vector families live on the
/// grouped left and right spaces, in ascending subsystem order.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteDecomposition {
    pub decomposition: SchmidtDecomposition,
    pub cut: Bipartition,
    /// Dimensions of the source state.
    pub source_dims: Vec<usize>,
}

impl BipartiteDecomposition {
    pub fn coefficients(&self) -> &[f64] {
        self.decomposition.coefficients()
    }

    /// Rebuilds the state in the original subsystem order.
    pub fn reconstruct(&self) -> StateTensor {
        let grouped = self.decomposition.reconstruct();
        let (l, r) = (self.decomposition.dims()[0], self.decomposition.dims()[1]);
        let m = crate::linalg::CMatrix::from_row_slice(l, r, grouped.amplitudes());
        state::unflatten(&m, &self.source_dims, &self.cut).expect("shape follows the cut")
    }
}

pub fn schmidt_decompose_bipartite(state: &StateTensor, cut: &Bipartition) -> Result<BipartiteDecomposition> {
    schmidt_decompose_bipartite_with(state, cut, &Tolerances::default())
}

pub fn schmidt_decompose_bipartite_with(
    state: &StateTensor,
    cut: &Bipartition,
    tol: &Tolerances,
) -> Result<BipartiteDecomposition> {
    let m = state::flatten(state, cut)?;
    let svd = linalg::svd(&m);
    let kept = count_above(&svd.s, tol.rank);
    let mut coefficients = Vec::with_capacity(kept);
    let mut left = Vec::with_capacity(kept);
    let mut right = Vec::with_capacity(kept);
    for l in 0..kept {
        // first nonzero component of the left vector is made real-positive,
        // the phase moves to the right vector
        let (u, phase) = linalg::fix_phase(&svd.u.column(l).into_owned(), 1e-12);
        let v: CVector = svd.v_t.row(l).transpose() * phase;
        coefficients.push(svd.s[l]);
        left.push(u);
        right.push(v);
    }
    // renormalize away the discarded tail
    let norm = coefficients.iter().map(|x| x * x).sum::<f64>().sqrt();
    coefficients.iter_mut().for_each(|x| *x /= norm);
    let decomposition = SchmidtDecomposition::with_tolerances(coefficients, vec![left, right], tol)?;
    Ok(BipartiteDecomposition { decomposition, cut: cut.clone(), source_dims: state.dims().to_vec() })
}

/// Number of singular values above `rel * σ_max`.
pub(crate) fn count_above(s: &[f64], rel: f64) -> usize {
    let max = s.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    s.iter().take_while(|&&x| x > rel * max).count()
}

pub fn schmidt_number(state: &StateTensor, cut: &Bipartition) -> Result<usize> {
    schmidt_number_with(state, cut, &Tolerances::default())
}

pub fn schmidt_number_with(state: &StateTensor, cut: &Bipartition, tol: &Tolerances) -> Result<usize> {
    let m = state::flatten(state, cut)?;
    Ok(count_above(&linalg::svd(&m).s, tol.rank))
}

/// Eigenvalues of the reduced state on `keep`, descending: the squared
/// singular values across the cut, padded with zeros.
pub fn spectra(state: &StateTensor, keep: &[usize]) -> Result<Vec<f64>> {
    let cut = Bipartition::new(keep, state.num_subsystems())?;
    let m = state::flatten(state, &cut)?;
    let mut values: Vec<f64> = linalg::svd(&m).s.iter().map(|x| x * x).collect();
    values.resize(m.nrows(), 0.0);
    Ok(values)
}

/// Matrix rank of a complex matrix with the relative threshold.
pub fn matrix_rank(m: &linalg::CMatrix, rel: f64) -> usize {
    count_above(&linalg::svd(m).s, rel)
}

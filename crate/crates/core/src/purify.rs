//! Purifications of density matrices: construction, the reference-side
//! unitary linking two purifications, and decomposability classes.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ZERO};
use crate::multipartite::{self, Verdict};
use crate::state::{self, Bipartition, DensityMatrix, StateTensor};
use crate::tol::{self, Tolerances};

/// Pure state on the system's subsystems plus one reference subsystem,
/// appended last.
#[derive(Debug, Clone, PartialEq)]
pub struct Purification {
    pub state: StateTensor,
    /// Number of eigenvalues of the purified matrix kept in the support.
    pub rank: usize,
}

impl Purification {
    pub fn reference_index(&self) -> usize {
        self.state.num_subsystems() - 1
    }

    pub fn reference_dim(&self) -> usize {
        self.state.dims()[self.reference_index()]
    }

    /// The reduced state on everything but the reference.
    pub fn trace_back(&self) -> DensityMatrix {
        trace_out_last(&self.state)
    }
}

fn trace_out_last(state: &StateTensor) -> DensityMatrix {
    let n = state.num_subsystems();
    let keep: Vec<usize> = (0..n - 1).collect();
    state::reduced_density(state, &keep).expect("purifications have a system and a reference")
}

pub fn purify(rho: &DensityMatrix, reference_dim: Option<usize>) -> Result<Purification> {
    purify_with(rho, reference_dim, &Tolerances::default())
}

/// `Σ_i √λ_i |i> ⊗ |i_R>` over the eigenpairs of `rho` above
/// `tol.rank · λ_max`, eigenvectors ordered by descending eigenvalue with the
/// first nonzero component made real-positive.
pub fn purify_with(rho: &DensityMatrix, reference_dim: Option<usize>, tol: &Tolerances) -> Result<Purification> {
    let (values, vectors) = linalg::hermitian_eigen(rho.entries());
    let min = values.last().copied().unwrap_or(0.0);
    if min < -tol.psd {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let top = values.first().copied().unwrap_or(0.0);
    let rank = values.iter().take_while(|&&x| x > tol.rank * top).count();
    let r = reference_dim.unwrap_or(rank);
    if r < rank || r == 0 {
        return Err(Error::ReferenceTooSmall { given: r, rank });
    }
    let side = rho.side();
    let mut amps = vec![ZERO; side * r];
    for i in 0..rank {
        let (v, _) = linalg::fix_phase(&vectors.column(i).into_owned(), 1e-12);
        let w = values[i].sqrt();
        for a in 0..side {
            amps[a * r + i] = v[a] * w;
        }
    }
    let mut dims = rho.dims().to_vec();
    dims.push(r);
    Ok(Purification { state: StateTensor::normalized(dims, amps)?, rank })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PurificationLink {
    /// `U` with `(I ⊗ U)|AR_2> = |AR_1>`.
    pub unitary: CMatrix,
    pub residual: f64,
}

/// Reference-side unitary taking `second` to `first`. Both must purify the
/// same density matrix with the reference as the last subsystem.
pub fn linking_unitary(first: &StateTensor, second: &StateTensor) -> Result<PurificationLink> {
    linking_unitary_with(first, second, &Tolerances::default())
}

pub fn linking_unitary_with(first: &StateTensor, second: &StateTensor, tol: &Tolerances) -> Result<PurificationLink> {
    if first.dims() != second.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", first.dims(), second.dims())));
    }
    let n = first.num_subsystems();
    if n < 2 {
        return Err(Error::TooFewSubsystems { required: 2, got: n });
    }
    let rho1 = trace_out_last(first);
    let rho2 = trace_out_last(second);
    let deviation = linalg::max_abs(&(rho1.entries() - rho2.entries()));
    if deviation > tol::EPS_SPECTRA {
        return Err(Error::DifferentStates { deviation });
    }
    let (values, vectors) = linalg::hermitian_eigen(rho1.entries());
    let top = values.first().copied().unwrap_or(0.0);
    let kept = values.iter().take_while(|&&x| x > tol.rank * top).count();
    let system: Vec<usize> = (0..n - 1).collect();
    let cut = Bipartition::new(&system, n)?;
    let r = first.dims()[n - 1];
    // |i_R> = (<i| ⊗ I)|AR> / √λ_i
    let reference_family = |state: &StateTensor| -> Result<Vec<CVector>> {
        let m = state::flatten(state, &cut)?;
        Ok((0..kept)
            .map(|i| {
                let v = vectors.column(i).map(|z| z.conj());
                m.transpose() * v / C64::from(values[i].sqrt())
            })
            .collect())
    };
    let w1 = linalg::complete_orthonormal(&reference_family(first)?, r);
    let w2 = linalg::complete_orthonormal(&reference_family(second)?, r);
    let unitary = w1 * w2.adjoint();
    let residual = second.apply_local(n - 1, &unitary)?.distance(first);
    Ok(PurificationLink { unitary, residual })
}

/// Decomposability verdict of a purification (any purification of the same
/// matrix gives the same verdict).
pub fn purification_class(rho: &DensityMatrix, reference_dim: Option<usize>, seed: u64) -> Result<Verdict> {
    classify(&purify(rho, reference_dim)?.state, seed)
}

/// Verdict for a pure state with at least two subsystems; bipartite states
/// are always decomposable.
pub fn classify(state: &StateTensor, seed: u64) -> Result<Verdict> {
    match multipartite::decompose(state, seed, &Tolerances::default()) {
        Ok(_) => Ok(Verdict::Decomposable),
        Err(Error::NotDecomposable) => Ok(Verdict::NotDecomposable),
        Err(e) => Err(e),
    }
}

//! Decomposability of pure states with three or more subsystems.
//!
//! The state is cut into the slice family `A_c[i][j] = a_{i j c}` (first
//! subsystem as rows, the middle subsystems grouped as columns, the last
//! subsystem as the slice index). It is Schmidt decomposable exactly when
//! one unitary pair `(P, Q)` turns every slice diagonal and the rows of
//! `S[ℓ][c] = (P† A_c Q†)_{ℓℓ}` are pairwise orthogonal; the row norms of `S`
//! are then the Schmidt coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::bipartite;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::par::{self, Execution};
use crate::state::{self, Bipartition, SchmidtDecomposition, StateTensor};
use crate::tol::{self, Tolerances};

/// Number of seeds tried by [`find_diagonalizing_pair`].
pub const PAIR_RETRIES: u64 = 8;

/// Singular values of the random combination closer than this (relative to
/// the largest) are treated as one degenerate block.
const CLUSTER_GAP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct SliceSet {
    pub matrices: Vec<CMatrix>,
    /// Subsystem fixed by the slice index.
    pub axis: usize,
    /// Subsystem indexing the rows.
    pub row_subsystem: usize,
    /// Subsystems grouped into the columns, ascending.
    pub column_subsystems: Vec<usize>,
    pub dims: Vec<usize>,
}

impl SliceSet {
    pub fn rows(&self) -> usize {
        self.dims[self.row_subsystem]
    }

    pub fn cols(&self) -> usize {
        self.column_subsystems.iter().map(|&k| self.dims[k]).product()
    }
}

pub fn slice_tensor(state: &StateTensor, axis: usize) -> Result<SliceSet> {
    let n = state.num_subsystems();
    if n < 3 {
        return Err(Error::TooFewSubsystems { required: 3, got: n });
    }
    if axis >= n {
        return Err(Error::InvalidAxis { axis, subsystems: n });
    }
    let rest: Vec<usize> = (0..n).filter(|&k| k != axis).collect();
    let mut order = rest.clone();
    order.push(axis);
    let permuted = state.permute_subsystems(&order)?;
    let dims = state.dims();
    let rows = dims[rest[0]];
    let cols: usize = rest[1..].iter().map(|&k| dims[k]).product();
    let count = dims[axis];
    let amps = permuted.amplitudes();
    let matrices = (0..count)
        .map(|c| CMatrix::from_fn(rows, cols, |i, j| amps[(i * cols + j) * count + c]))
        .collect();
    Ok(SliceSet {
        matrices,
        axis,
        row_subsystem: rest[0],
        column_subsystems: rest[1..].to_vec(),
        dims: dims.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationCheck {
    pub commutes: bool,
    /// Largest Frobenius norm of a commutator among `{A A†}` and `{A† A}`.
    pub max_commutator: f64,
}

/// Whether all `A_c A_c†` commute pairwise and all `A_c† A_c` commute
/// pairwise. Each commutator is compared to `tol · ‖X‖‖Y‖`.
pub fn positive_products_commute(slices: &SliceSet, tol: f64) -> CommutationCheck {
    let left: Vec<CMatrix> = slices.matrices.iter().map(|a| a * a.adjoint()).collect();
    let right: Vec<CMatrix> = slices.matrices.iter().map(|a| a.adjoint() * a).collect();
    let mut commutes = true;
    let mut worst: f64 = 0.0;
    for family in [&left, &right] {
        for (i, x) in family.iter().enumerate() {
            for y in &family[i + 1..] {
                let comm = (x * y - y * x).norm();
                worst = worst.max(comm);
                if comm > tol * x.norm() * y.norm() {
                    commutes = false;
                }
            }
        }
    }
    CommutationCheck { commutes, max_commutator: worst }
}

/// Unitaries with `P† A_c Q†` diagonal for every slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalizationPair {
    pub p: CMatrix,
    pub q: CMatrix,
}

impl DiagonalizationPair {
    pub fn rotate(&self, a: &CMatrix) -> CMatrix {
        self.p.adjoint() * a * self.q.adjoint()
    }

    /// Largest off-diagonal magnitude over all rotated slices.
    pub fn residual(&self, slices: &SliceSet) -> f64 {
        slices
            .matrices
            .iter()
            .map(|a| linalg::max_offdiag(&self.rotate(a)))
            .fold(0.0, f64::max)
    }
}

pub fn find_diagonalizing_pair(slices: &SliceSet, seed: u64) -> Result<DiagonalizationPair> {
    find_diagonalizing_pair_with(slices, seed, &Tolerances::default())
}

pub fn find_diagonalizing_pair_with(slices: &SliceSet, seed: u64, tol: &Tolerances) -> Result<DiagonalizationPair> {
    let (rows, cols) = (slices.rows(), slices.cols());
    let identity = DiagonalizationPair { p: CMatrix::identity(rows, rows), q: CMatrix::identity(cols, cols) };
    let mut best = identity.residual(slices);
    if best <= tol.diag {
        return Ok(identity);
    }
    for attempt in 0..PAIR_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let pair = random_combination_pair(slices, &mut rng, tol);
        let r = pair.residual(slices);
        if r <= tol.diag {
            return Ok(pair);
        }
        best = best.min(r);
    }
    Err(Error::NoPairFound { max_offdiag: best })
}

// SVD of a random combination B = Σ r_c A_c; degenerate singular blocks are
// split with a random Hermitian combination of the compressed slices.
fn random_combination_pair(slices: &SliceSet, rng: &mut ChaCha8Rng, tol: &Tolerances) -> DiagonalizationPair {
    let (rows, cols) = (slices.rows(), slices.cols());
    let mut b = CMatrix::zeros(rows, cols);
    for a in &slices.matrices {
        b += a * linalg::complex_gaussian(rng);
    }
    let svd = linalg::svd(&b);
    let kept = bipartite::count_above(&svd.s, tol.rank);
    let mut u: Vec<CVector> = (0..kept).map(|l| svd.u.column(l).into_owned()).collect();
    let mut v: Vec<CVector> = (0..kept).map(|l| svd.v_t.row(l).adjoint()).collect();
    let smax = svd.s.first().copied().unwrap_or(0.0);

    let mut start = 0;
    while start < kept {
        let mut end = start + 1;
        while end < kept && svd.s[end - 1] - svd.s[end] <= CLUSTER_GAP * smax {
            end += 1;
        }
        if end - start > 1 {
            refine_block(slices, &mut u[start..end], &mut v[start..end], rng);
        }
        start = end;
    }
    let p = linalg::complete_orthonormal(&u, rows);
    let q = linalg::complete_orthonormal(&v, cols).adjoint();
    DiagonalizationPair { p, q }
}

fn refine_block(slices: &SliceSet, u: &mut [CVector], v: &mut [CVector], rng: &mut ChaCha8Rng) {
    let m = u.len();
    let ub = CMatrix::from_columns(u);
    let vb = CMatrix::from_columns(v);
    let mut z = CMatrix::zeros(m, m);
    for a in &slices.matrices {
        let x = ub.adjoint() * a * &vb;
        let herm = (&x + x.adjoint()).scale(0.5);
        let anti = (&x - x.adjoint()) * C64::new(0.0, -0.5);
        let s: f64 = rng.sample(StandardNormal);
        let t: f64 = rng.sample(StandardNormal);
        z += herm.scale(s) + anti.scale(t);
    }
    let (_, w) = linalg::hermitian_eigen(&z);
    let ub = ub * &w;
    let vb = vb * &w;
    for l in 0..m {
        u[l] = ub.column(l).into_owned();
        v[l] = vb.column(l).into_owned();
    }
}

/// `S[ℓ][c] = (P† A_c Q†)_{ℓℓ}`, rows `ℓ < min(rows, cols)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SMatrix(pub CMatrix);

/// Builds `S` after checking that every rotated slice is diagonal.
pub fn build_s_matrix(slices: &SliceSet, pair: &DiagonalizationPair, tol: f64) -> Result<SMatrix> {
    let rotated: Vec<CMatrix> = slices.matrices.iter().map(|a| pair.rotate(a)).collect();
    let worst = rotated.iter().map(linalg::max_offdiag).fold(0.0, f64::max);
    if worst > tol {
        return Err(Error::SlicesNotDiagonal { max_offdiag: worst });
    }
    let k = slices.rows().min(slices.cols());
    Ok(SMatrix(CMatrix::from_fn(k, rotated.len(), |l, c| rotated[c][(l, l)])))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledUnitaryCheck {
    pub passes: bool,
    /// `S S†`
    pub gram: CMatrix,
    pub max_offdiag: f64,
    /// Nonzero row norms of `S`, descending (only meaningful on a pass).
    pub coefficients: Vec<f64>,
}

/// Passes when `S S†` is diagonal within `tol`, i.e. the rows of `S` are
/// pairwise orthogonal. Zero rows are allowed and dropped from the
/// coefficients.
pub fn scaled_unitary_check(s: &SMatrix, tol: f64) -> ScaledUnitaryCheck {
    scaled_unitary_check_with(s, tol, tol::EPS_RANK)
}

fn scaled_unitary_check_with(s: &SMatrix, tol: f64, rank_tol: f64) -> ScaledUnitaryCheck {
    let gram = &s.0 * s.0.adjoint();
    let max_offdiag = linalg::max_offdiag(&gram);
    let passes = max_offdiag <= tol;
    let mut coefficients: Vec<f64> = (0..gram.nrows()).map(|l| gram[(l, l)].re.max(0.0).sqrt()).collect();
    coefficients.sort_by(|a, b| b.total_cmp(a));
    let keep = bipartite::count_above(&coefficients, rank_tol);
    coefficients.truncate(keep);
    ScaledUnitaryCheck { passes, gram, max_offdiag, coefficients }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Decomposable,
    NotDecomposable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureStage {
    SpectraUnequal,
    SlicesNotSimultaneouslyDiagonalizable,
    SNotScaledUnitary,
    TailNotProduct,
    ReconstructionMismatch,
}

impl FailureStage {
    pub fn name(self) -> &'static str {
        match self {
            FailureStage::SpectraUnequal => "SpectraUnequal",
            FailureStage::SlicesNotSimultaneouslyDiagonalizable => "SlicesNotSimultaneouslyDiagonalizable",
            FailureStage::SNotScaledUnitary => "SNotScaledUnitary",
            FailureStage::TailNotProduct => "TailNotProduct",
            FailureStage::ReconstructionMismatch => "ReconstructionMismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposabilityReport {
    pub verdict: Verdict,
    pub stage: Option<FailureStage>,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Largest disagreement between reduced spectra.
    pub spectra_deviation: f64,
    pub max_commutator: Option<f64>,
    /// Largest off-diagonal entry of a rotated slice under the best pair found.
    pub pair_residual: Option<f64>,
    /// `S S†` when a diagonalizing pair was found.
    pub gram: Option<CMatrix>,
    pub gram_offdiag: Option<f64>,
    /// Orthonormality defect of the factored middle families (n > 3).
    pub tail_defect: Option<f64>,
    pub reconstruction_residual: Option<f64>,
    pub decomposition: Option<SchmidtDecomposition>,
}

impl DecomposabilityReport {
    pub fn is_decomposable(&self) -> bool {
        self.verdict == Verdict::Decomposable
    }

    fn new(seed: u64, tolerances: Tolerances) -> Self {
        DecomposabilityReport {
            verdict: Verdict::NotDecomposable,
            stage: None,
            seed,
            tolerances,
            spectra_deviation: 0.0,
            max_commutator: None,
            pair_residual: None,
            gram: None,
            gram_offdiag: None,
            tail_defect: None,
            reconstruction_residual: None,
            decomposition: None,
        }
    }

    fn reject(mut self, stage: FailureStage) -> Self {
        self.verdict = Verdict::NotDecomposable;
        self.stage = Some(stage);
        self
    }
}

pub fn check_decomposable(state: &StateTensor, seed: u64) -> Result<DecomposabilityReport> {
    check_decomposable_with(state, seed, &Tolerances::default())
}

/// Full decision pipeline. An accept always carries a decomposition whose
/// reconstruction matches the input within [`tol::EPS_RECONSTRUCT`].
pub fn check_decomposable_with(state: &StateTensor, seed: u64, tol: &Tolerances) -> Result<DecomposabilityReport> {
    let n = state.num_subsystems();
    if n < 3 {
        return Err(Error::TooFewSubsystems { required: 3, got: n });
    }
    let mut report = DecomposabilityReport::new(seed, *tol);

    let spectra = equal_spectra_check_with(state, tol)?;
    report.spectra_deviation = spectra.max_deviation;
    if !spectra.equal {
        return Ok(report.reject(FailureStage::SpectraUnequal));
    }

    let slices = slice_tensor(state, n - 1)?;
    let comm = positive_products_commute(&slices, tol.diag);
    report.max_commutator = Some(comm.max_commutator);
    if !comm.commutes {
        return Ok(report.reject(FailureStage::SlicesNotSimultaneouslyDiagonalizable));
    }

    let pair = match find_diagonalizing_pair_with(&slices, seed, tol) {
        Ok(pair) => pair,
        Err(Error::NoPairFound { max_offdiag }) => {
            report.pair_residual = Some(max_offdiag);
            return Ok(report.reject(FailureStage::SlicesNotSimultaneouslyDiagonalizable));
        }
        Err(e) => return Err(e),
    };
    report.pair_residual = Some(pair.residual(&slices));
    let s = build_s_matrix(&slices, &pair, tol.diag)?;
    let check = scaled_unitary_check_with(&s, tol.diag, tol.rank);
    report.gram = Some(check.gram.clone());
    report.gram_offdiag = Some(check.max_offdiag);
    if !check.passes {
        return Ok(report.reject(FailureStage::SNotScaledUnitary));
    }

    let candidate = match assemble(state, &slices, &pair, &s, tol) {
        Assembled::Ok(d, defect) => {
            report.tail_defect = defect;
            d
        }
        Assembled::TailNotProduct(defect) => {
            report.tail_defect = Some(defect);
            return Ok(report.reject(FailureStage::TailNotProduct));
        }
        Assembled::Invalid => return Ok(report.reject(FailureStage::ReconstructionMismatch)),
    };
    let residual = candidate.reconstruct().distance(state);
    report.reconstruction_residual = Some(residual);
    if residual > tol::EPS_RECONSTRUCT || candidate.orthonormality_defect() > tol.orth {
        return Ok(report.reject(FailureStage::ReconstructionMismatch));
    }
    report.verdict = Verdict::Decomposable;
    report.decomposition = Some(candidate);
    Ok(report)
}

enum Assembled {
    Ok(SchmidtDecomposition, Option<f64>),
    TailNotProduct(f64),
    Invalid,
}

fn assemble(
    state: &StateTensor,
    slices: &SliceSet,
    pair: &DiagonalizationPair,
    s: &SMatrix,
    tol: &Tolerances,
) -> Assembled {
    let dims = state.dims();
    let n = dims.len();
    let s = &s.0;
    let mut terms: Vec<(f64, usize)> = (0..s.nrows()).map(|l| (s.row(l).norm(), l)).collect();
    terms.sort_by(|a, b| b.0.total_cmp(&a.0));
    let smax = terms.first().map(|t| t.0).unwrap_or(0.0);
    terms.retain(|t| t.0 > tol.rank * smax);

    let middle: Vec<usize> = slices.column_subsystems.clone();
    let mut first = Vec::new();
    let mut mids: Vec<Vec<CVector>> = vec![Vec::new(); middle.len()];
    let mut last = Vec::new();
    let mut worst_tail: f64 = 0.0;
    for &(lambda, l) in &terms {
        first.push(pair.p.column(l).into_owned());
        last.push(s.row(l).transpose() / C64::from(lambda));
        let grouped: CVector = pair.q.row(l).transpose();
        if middle.len() == 1 {
            mids[0].push(grouped);
            continue;
        }
        let mdims: Vec<usize> = middle.iter().map(|&k| dims[k]).collect();
        match factor_product(&grouped, &mdims, tol) {
            Some(factors) => {
                for (fam, f) in mids.iter_mut().zip(factors) {
                    fam.push(f);
                }
            }
            None => return Assembled::TailNotProduct(f64::INFINITY),
        }
    }
    let coefficients: Vec<f64> = {
        let norm = terms.iter().map(|t| t.0 * t.0).sum::<f64>().sqrt();
        terms.iter().map(|t| t.0 / norm).collect()
    };
    let defect = if n > 3 {
        for fam in &mids {
            worst_tail = worst_tail.max(linalg::orthonormality_defect(fam));
        }
        if worst_tail > tol.orth {
            return Assembled::TailNotProduct(worst_tail);
        }
        Some(worst_tail)
    } else {
        None
    };
    let mut vectors = vec![first];
    vectors.extend(mids);
    vectors.push(last);
    match SchmidtDecomposition::with_tolerances(coefficients, vectors, tol) {
        Ok(d) => Assembled::Ok(d, defect),
        Err(_) => Assembled::Invalid,
    }
}

/// Splits a product vector into unit factors (the global phase is folded
/// into the last factor). `None` when some single-vs-rest cut has Schmidt
/// number above one.
pub fn factor_product(v: &CVector, dims: &[usize], tol: &Tolerances) -> Option<Vec<CVector>> {
    let st = StateTensor::normalized(dims.to_vec(), v.as_slice().to_vec()).ok()?;
    let n = dims.len();
    let mut factors = Vec::with_capacity(n);
    for k in 0..n {
        let cut = Bipartition::new(&[k], n).ok()?;
        let m = state::flatten(&st, &cut).ok()?;
        let svd = linalg::svd(&m);
        if bipartite::count_above(&svd.s, tol.rank) != 1 {
            return None;
        }
        factors.push(linalg::fix_phase(&svd.u.column(0).into_owned(), 1e-12).0);
    }
    let prod = linalg::kron_all(factors.iter());
    let phase = linalg::inner(&prod, &st.to_vector());
    if (phase.norm() - 1.0).abs() > tol.orth {
        return None;
    }
    let last = factors.last_mut().expect("n >= 1");
    *last *= phase;
    Some(factors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectraCheck {
    pub equal: bool,
    /// `(kept subsystems, nonzero spectrum)` for each subset containing the
    /// first subsystem.
    pub table: Vec<(Vec<usize>, Vec<f64>)>,
    pub max_deviation: f64,
}

pub fn equal_spectra_check(state: &StateTensor) -> Result<SpectraCheck> {
    equal_spectra_check_with(state, &Tolerances::default())
}

/// Compares the nonzero reduced spectra of every cut. Subsets containing the
/// first subsystem cover all cuts, since complementary reductions share
/// their nonzero spectrum.
pub fn equal_spectra_check_with(state: &StateTensor, tol: &Tolerances) -> Result<SpectraCheck> {
    let n = state.num_subsystems();
    if n < 2 {
        return Err(Error::TooFewSubsystems { required: 2, got: n });
    }
    let masks: Vec<u64> = (0..(1u64 << (n - 1)) - 1).collect();
    let table: Vec<(Vec<usize>, Vec<f64>)> = par::map(Execution::default(), &masks, |&mask| {
        let keep: Vec<usize> = std::iter::once(0)
            .chain((1..n).filter(|k| mask >> (k - 1) & 1 == 1))
            .collect();
        // nonzero eigenvalues of the reduced density are the squared
        // singular values across the cut
        let cut = Bipartition::new(&keep, n).expect("keep is a proper subset");
        let m = state::flatten(state, &cut).expect("cut matches the state");
        let sp: Vec<f64> = linalg::svd(&m).s.iter().map(|x| x * x).collect();
        let top = sp.first().copied().unwrap_or(0.0);
        let nz = sp.into_iter().filter(|&x| x > tol.rank * top).collect();
        (keep, nz)
    })
    .into_iter()
    .collect::<Vec<_>>();
    let reference = &table[0].1;
    let mut equal = true;
    let mut max_deviation: f64 = 0.0;
    for (_, sp) in &table[1..] {
        if sp.len() != reference.len() {
            equal = false;
            max_deviation = f64::INFINITY;
            continue;
        }
        for (a, b) in sp.iter().zip(reference) {
            max_deviation = max_deviation.max((a - b).abs());
        }
    }
    if max_deviation > tol::EPS_SPECTRA {
        equal = false;
    }
    Ok(SpectraCheck { equal, table, max_deviation })
}

/// Random decomposition with `λ²` uniform on the simplex and Gaussian-derived
/// orthonormal families. Deterministic per seed.
pub fn random_decomposition(dims: &[usize], rank: usize, seed: u64) -> Result<SchmidtDecomposition> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!("invalid dims {dims:?}")));
    }
    let max = *dims.iter().min().expect("nonempty");
    if rank == 0 {
        return Err(Error::InvalidArgs("rank must be positive".into()));
    }
    if rank > max {
        return Err(Error::RankTooLarge { rank, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..rank).map(|_| rng.sample::<f64, _>(Exp1) + f64::MIN_POSITIVE).collect();
    let total: f64 = weights.iter().sum();
    let mut coefficients: Vec<f64> = weights.iter().map(|w| (w / total).sqrt()).collect();
    coefficients.sort_by(|a, b| b.total_cmp(a));
    let vectors = dims.iter().map(|&d| linalg::random_orthonormal(d, rank, &mut rng)).collect();
    SchmidtDecomposition::new(coefficients, vectors)
}

pub fn random_decomposable_state(dims: &[usize], rank: usize, seed: u64) -> Result<StateTensor> {
    Ok(random_decomposition(dims, rank, seed)?.reconstruct())
}

/// Generic (almost surely non-decomposable) state with Gaussian amplitudes.
pub fn random_state(dims: &[usize], seed: u64) -> Result<StateTensor> {
    let total: usize = dims.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..total).map(|_| linalg::complex_gaussian(&mut rng)).collect();
    StateTensor::normalized(dims.to_vec(), amps)
}

/// Random local unitaries, one per subsystem.
pub fn random_local_unitaries(dims: &[usize], seed: u64) -> Vec<CMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dims.iter().map(|&d| linalg::random_unitary(d, &mut rng)).collect()
}

/// Schmidt decomposition of a state with at least two subsystems, or
/// `NotDecomposable`.
pub fn decompose(state: &StateTensor, seed: u64, tol: &Tolerances) -> Result<SchmidtDecomposition> {
    match state.num_subsystems() {
        0 | 1 => Err(Error::TooFewSubsystems { required: 2, got: state.num_subsystems() }),
        2 => {
            let cut = Bipartition::new(&[0], 2)?;
            Ok(bipartite::schmidt_decompose_bipartite_with(state, &cut, tol)?.decomposition)
        }
        _ => check_decomposable_with(state, seed, tol)?.decomposition.ok_or(Error::NotDecomposable),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalUnitaryLink {
    /// `U_k` with `(⊗_k U_k)|φ> = |ψ>`.
    pub unitaries: Vec<CMatrix>,
    /// Distance between `(⊗U_k)φ` and `ψ` up to global phase.
    pub residual: f64,
}

/// Local unitaries taking `phi` to `psi`, which exist exactly when both are
/// decomposable with equal Schmidt coefficients.
pub fn local_unitary_link(psi: &StateTensor, phi: &StateTensor, seed: u64) -> Result<LocalUnitaryLink> {
    local_unitary_link_with(psi, phi, seed, &Tolerances::default())
}

pub fn local_unitary_link_with(
    psi: &StateTensor,
    phi: &StateTensor,
    seed: u64,
    tol: &Tolerances,
) -> Result<LocalUnitaryLink> {
    if psi.dims() != phi.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", psi.dims(), phi.dims())));
    }
    let dpsi = decompose(psi, seed, tol)?;
    let dphi = decompose(phi, seed, tol)?;
    let (a, b) = (dpsi.coefficients(), dphi.coefficients());
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > tol::EPS_SPECTRA) {
        return Err(Error::CoefficientsMismatch { left: a.to_vec(), right: b.to_vec() });
    }
    let unitaries: Vec<CMatrix> = dpsi
        .vectors()
        .iter()
        .zip(dphi.vectors())
        .zip(psi.dims())
        .map(|((to, from), &d)| {
            let e_to = linalg::complete_orthonormal(to, d);
            let e_from = linalg::complete_orthonormal(from, d);
            e_to * e_from.adjoint()
        })
        .collect();
    let residual = phi.apply_local_all(&unitaries)?.distance_up_to_phase(psi);
    Ok(LocalUnitaryLink { unitaries, residual })
}

/// Runs [`check_decomposable`] over a batch.
pub fn check_many(states: &[StateTensor], seed: u64, exec: Execution) -> Vec<Result<DecomposabilityReport>> {
    par::map(exec, states, |s| check_decomposable(s, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};
    use crate::state::fixtures::*;

    fn c(x: f64) -> C64 {
        C64::from(x)
    }

    fn m2(a: f64, b: f64, cc: f64, d: f64) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(a), c(b), c(cc), c(d)])
    }

    #[test]
    fn w_slices_match_worked_example() {
        let s = slice_tensor(&w_state(), 2).unwrap();
        let a = 1.0 / 3f64.sqrt();
        assert!((&s.matrices[0] - m2(0.0, a, a, 0.0)).norm() < 1e-15);
        assert!((&s.matrices[1] - m2(a, 0.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn slices_of_basis_and_ghz() {
        let s = slice_tensor(&basis_state(&[2, 2, 2], &[0, 0, 0]).unwrap(), 2).unwrap();
        assert_eq!(s.matrices[0], m2(1.0, 0.0, 0.0, 0.0));
        assert_eq!(s.matrices[1], m2(0.0, 0.0, 0.0, 0.0));
        let h = 0.5f64.sqrt();
        let s = slice_tensor(&ghz(3), 2).unwrap();
        assert!((&s.matrices[0] - m2(h, 0.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((&s.matrices[1] - m2(0.0, 0.0, 0.0, h)).norm() < 1e-15);
    }

    #[test]
    fn slice_errors() {
        assert!(matches!(slice_tensor(&bell(), 1), Err(Error::TooFewSubsystems { .. })));
        assert!(matches!(slice_tensor(&ghz(3), 3), Err(Error::InvalidAxis { .. })));
    }

    #[test]
    fn slicing_other_axes() {
        let s = random_state(&[2, 3, 4], 5).unwrap();
        let sl = slice_tensor(&s, 0).unwrap();
        assert_eq!(sl.matrices.len(), 2);
        assert_eq!((sl.rows(), sl.cols()), (3, 4));
        // a_{c i j} with c on subsystem 1
        assert_eq!(sl.matrices[1][(2, 3)], s.amplitudes()[12 + 2 * 4 + 3]);
    }

    #[test]
    fn commutation_examples() {
        let w = slice_tensor(&w_state(), 2).unwrap();
        assert!(positive_products_commute(&w, 1e-10).commutes);
        let g = slice_tensor(&ghz(3), 2).unwrap();
        assert!(positive_products_commute(&g, 1e-10).commutes);
        // seed 11 recorded for the generic sample
        let r = slice_tensor(&random_state(&[2, 2, 2], 11).unwrap(), 2).unwrap();
        let chk = positive_products_commute(&r, 1e-8);
        assert!(!chk.commutes && chk.max_commutator > 1e-3);
    }

    #[test]
    fn pair_for_ghz_is_identity() {
        let g = slice_tensor(&ghz(3), 2).unwrap();
        let pair = find_diagonalizing_pair(&g, 0).unwrap();
        assert_eq!(pair.p, CMatrix::identity(2, 2));
        let s = build_s_matrix(&g, &pair, 1e-8).unwrap();
        assert!((s.0 - CMatrix::identity(2, 2).scale(0.5f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn pair_for_w_does_not_exist() {
        let w = slice_tensor(&w_state(), 2).unwrap();
        assert!(matches!(find_diagonalizing_pair(&w, 0), Err(Error::NoPairFound { .. })));
    }

    #[test]
    fn pair_guard_on_off_diagonal_slice() {
        // (|000> + |011>)/√2: A_0 = |0><0|/√2, A_1 = |0><1|/√2
        let h = 0.5f64.sqrt();
        let mut amps = vec![ZERO; 8];
        amps[0] = c(h);
        amps[3] = c(h);
        let st = StateTensor::new(vec![2, 2, 2], amps).unwrap();
        let sl = slice_tensor(&st, 2).unwrap();
        assert!((&sl.matrices[1] - m2(0.0, h, 0.0, 0.0)).norm() < 1e-15);
        assert!(find_diagonalizing_pair(&sl, 0).is_err());
        // bare diagonal extraction would see S = [[h, 0], [0, 0]] and accept
        let identity = DiagonalizationPair { p: CMatrix::identity(2, 2), q: CMatrix::identity(2, 2) };
        assert!(matches!(build_s_matrix(&sl, &identity, 1e-8), Err(Error::SlicesNotDiagonal { .. })));
        let rep = check_decomposable(&st, 0).unwrap();
        assert_eq!(rep.verdict, Verdict::NotDecomposable);
    }

    #[test]
    fn w_with_displayed_swap_pair() {
        // the swap pair rotates A_1 to diag(0, 1)/√3 but leaves A_0 = X/√3
        // off-diagonal, so the S matrix is refused
        let w = slice_tensor(&w_state(), 2).unwrap();
        let x = m2(0.0, 1.0, 1.0, 0.0);
        let pair = DiagonalizationPair { p: x.clone(), q: x };
        let a = 1.0 / 3f64.sqrt();
        assert!((pair.rotate(&w.matrices[1]) - m2(0.0, 0.0, 0.0, a)).norm() < 1e-15);
        match build_s_matrix(&w, &pair, 1e-8) {
            Err(Error::SlicesNotDiagonal { max_offdiag }) => assert!((max_offdiag - a).abs() < 1e-15),
            other => panic!("expected SlicesNotDiagonal, got {other:?}"),
        }
    }

    #[test]
    fn s_matrix_of_basis_state() {
        let sl = slice_tensor(&basis_state(&[2, 2, 2], &[0, 0, 0]).unwrap(), 2).unwrap();
        let pair = find_diagonalizing_pair(&sl, 0).unwrap();
        let s = build_s_matrix(&sl, &pair, 1e-8).unwrap();
        assert_eq!(s.0, m2(1.0, 0.0, 0.0, 0.0));
        let chk = scaled_unitary_check(&s, 1e-10);
        assert!(chk.passes);
        assert_eq!(chk.coefficients, vec![1.0]);
    }

    #[test]
    fn scaled_unitary_examples() {
        let a = 1.0 / 3f64.sqrt();
        let chk = scaled_unitary_check(&SMatrix(m2(a, 0.0, a, a)), 1e-10);
        assert!(!chk.passes);
        let expect = m2(1.0, 1.0, 1.0, 2.0).scale(1.0 / 3.0);
        assert!((chk.gram - expect).norm() < 1e-15);

        let h = 0.5f64.sqrt();
        let chk = scaled_unitary_check(&SMatrix(CMatrix::identity(2, 2).scale(h)), 1e-10);
        assert!(chk.passes);
        assert!(chk.coefficients.iter().all(|l| (l - h).abs() < 1e-15));
    }

    #[test]
    fn w_is_rejected_but_has_equal_spectra() {
        let sp = equal_spectra_check(&w_state()).unwrap();
        assert!(sp.equal);
        for (keep, vals) in &sp.table {
            if keep.len() == 1 {
                assert!((vals[0] - 2.0 / 3.0).abs() < 1e-14 && (vals[1] - 1.0 / 3.0).abs() < 1e-14);
            }
        }
        let rep = check_decomposable(&w_state(), 0).unwrap();
        assert_eq!(rep.verdict, Verdict::NotDecomposable);
        assert_eq!(rep.stage, Some(FailureStage::SlicesNotSimultaneouslyDiagonalizable));
        assert!(rep.gram.is_none());
    }

    #[test]
    fn spectra_check_examples() {
        assert!(equal_spectra_check(&ghz(3)).unwrap().equal);
        let s = basis_state(&[2], &[0]).unwrap().kron(&bell());
        assert!(!equal_spectra_check(&s).unwrap().equal);
        assert_eq!(check_decomposable(&s, 0).unwrap().stage, Some(FailureStage::SpectraUnequal));
    }

    #[test]
    fn ghz_family_accepted() {
        let h = 0.5f64.sqrt();
        for n in 3..=5 {
            let rep = check_decomposable(&ghz(n), 0).unwrap();
            assert!(rep.is_decomposable(), "GHZ{n}: {:?}", rep.stage);
            let d = rep.decomposition.unwrap();
            assert_eq!(d.num_subsystems(), n);
            assert!(d.coefficients().iter().all(|l| (l - h).abs() < 1e-12));
        }
    }

    #[test]
    fn generated_states_accepted() {
        let p = random_decomposable_state(&[2, 2, 2], 1, 3).unwrap();
        for k in 0..3 {
            assert_eq!(bipartite::schmidt_number(&p, &Bipartition::new(&[k], 3).unwrap()).unwrap(), 1);
        }
        let s = random_decomposable_state(&[2, 2, 2], 2, 42).unwrap();
        let rep = check_decomposable(&s, 0).unwrap();
        assert_eq!(rep.decomposition.unwrap().rank(), 2);

        let d = random_decomposition(&[3, 3, 3], 3, 7).unwrap();
        let s = d.reconstruct();
        assert!(check_decomposable(&s, 0).unwrap().is_decomposable());
        let sq: Vec<f64> = d.coefficients().iter().map(|l| l * l).collect();
        for (_, sp) in equal_spectra_check(&s).unwrap().table {
            for (a, b) in sp.iter().zip(&sq) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(matches!(random_decomposable_state(&[2, 3], 3, 0), Err(Error::RankTooLarge { .. })));
    }

    #[test]
    fn tail_product_check_four_parties() {
        // |0>|00>|0> + |1>|01>|1>: middle vectors orthonormal as a pair but
        // the second middle subsystem family is not orthonormal
        let h = 0.5f64.sqrt();
        let mut amps = vec![ZERO; 16];
        amps[0] = c(h);
        amps[8 + 2 + 1] = c(h);
        let st = StateTensor::new(vec![2, 2, 2, 2], amps).unwrap();
        let rep = check_decomposable(&st, 0).unwrap();
        assert_eq!(rep.verdict, Verdict::NotDecomposable);
    }

    #[test]
    fn too_few_subsystems() {
        assert!(matches!(check_decomposable(&bell(), 0), Err(Error::TooFewSubsystems { .. })));
    }

    #[test]
    fn link_identity_and_hadamard() {
        let g = ghz(3);
        let link = local_unitary_link(&g, &g, 0).unwrap();
        assert!(link.residual < 1e-12);
        for u in &link.unitaries {
            // identity up to phase on the support
            assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
            assert!(linalg::unitarity_defect(u) < 1e-12);
        }
        let h = 0.5f64.sqrt();
        let had = m2(h, h, h, -h);
        let target = g.apply_local_all(&[had.clone(), had.clone(), had]).unwrap();
        let link = local_unitary_link(&target, &g, 0).unwrap();
        assert!(link.residual < 1e-10);
    }

    #[test]
    fn link_refuses_mismatched_coefficients() {
        let s = random_decomposable_state(&[2, 2, 2], 2, 9).unwrap();
        match local_unitary_link(&s, &ghz(3), 0) {
            Err(Error::CoefficientsMismatch { left, right }) => {
                assert_eq!(left.len(), 2);
                assert!((right[0] - 0.5f64.sqrt()).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(local_unitary_link(&w_state(), &ghz(3), 0), Err(Error::NotDecomposable)));
    }

    #[test]
    fn factor_product_roundtrip() {
        let tol = Tolerances::default();
        let a = CVector::from_vec(vec![c(0.6), C64::new(0.0, 0.8)]);
        let b = CVector::from_vec(vec![c(0.0), ONE, c(0.0)]);
        let v = linalg::kron_vec(&a, &b);
        let f = factor_product(&v, &[2, 3], &tol).unwrap();
        assert!((linalg::kron_vec(&f[0], &f[1]) - v).norm() < 1e-14);
        let ent = bell().to_vector();
        assert!(factor_product(&ent, &[2, 2], &tol).is_none());
    }
}

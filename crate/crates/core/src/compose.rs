//! Tensor composition of decomposable states and the rank inequality for
//! superpositions.

use crate::bipartite;
use crate::error::{Error, Result};
use crate::linalg::{self, CVector, C64};
use crate::multipartite;
use crate::state::{Bipartition, SchmidtDecomposition, StateTensor};
use crate::tol::Tolerances;

/// `(parts, rank)` of a decomposable state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchmidtDimension {
    pub parts: usize,
    pub rank: usize,
}

pub fn schmidt_dimension(dec: &SchmidtDecomposition) -> SchmidtDimension {
    SchmidtDimension { parts: dec.num_subsystems(), rank: dec.rank() }
}

/// Sizes of consecutive groups of the larger state's subsystems; group `g`
/// is joined with subsystem `g` of the smaller state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grouping(Vec<usize>);

impl Grouping {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::GroupingMismatch(format!("group sizes must be positive, got {sizes:?}")));
        }
        Ok(Grouping(sizes))
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Subsystem order of `A ⊗ B` (A's `m` parts first) after grouping:
    /// each group of A followed by its partner from B.
    pub fn subsystem_order(&self) -> Vec<usize> {
        let m = self.total();
        let mut order = Vec::with_capacity(m + self.0.len());
        let mut next = 0;
        for (g, &size) in self.0.iter().enumerate() {
            order.extend(next..next + size);
            order.push(m + g);
            next += size;
        }
        order
    }
}

/// Every way to cut `m` ordered parts into `n` nonempty consecutive groups,
/// in lexicographic order.
pub fn enumerate_groupings(m: usize, n: usize) -> Result<Vec<Grouping>> {
    if n == 0 || n > m {
        return Err(Error::InvalidArgs(format!("need 1 <= n <= m, got m={m}, n={n}")));
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    compositions(m, n, &mut current, &mut out);
    Ok(out)
}

fn compositions(rest: usize, slots: usize, current: &mut Vec<usize>, out: &mut Vec<Grouping>) {
    if slots == 1 {
        current.push(rest);
        out.push(Grouping(current.clone()));
        current.pop();
        return;
    }
    for first in 1..=rest - (slots - 1) {
        current.push(first);
        compositions(rest - first, slots - 1, current, out);
        current.pop();
    }
}

/// Decomposition of `A ⊗ B` as an `n`-partite state, where `n` is the number
/// of parts of `b`. Coefficients are all products `λ^A_i λ^B_j`.
pub fn compose(a: &SchmidtDecomposition, b: &SchmidtDecomposition, grouping: &Grouping) -> Result<SchmidtDecomposition> {
    let (m, n) = (a.num_subsystems(), b.num_subsystems());
    if m < n {
        return Err(Error::GroupingMismatch(format!("first state has {m} parts, second has {n}; need m >= n")));
    }
    if grouping.sizes().len() != n || grouping.total() != m {
        return Err(Error::GroupingMismatch(format!(
            "grouping {:?} must split {m} parts into {n} groups",
            grouping.sizes()
        )));
    }
    let mut terms: Vec<(f64, usize, usize)> = Vec::with_capacity(a.rank() * b.rank());
    for (i, la) in a.coefficients().iter().enumerate() {
        for (j, lb) in b.coefficients().iter().enumerate() {
            let c = la * lb;
            if c > 0.0 {
                terms.push((c, i, j));
            }
        }
    }
    terms.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut vectors: Vec<Vec<CVector>> = vec![Vec::with_capacity(terms.len()); n];
    let mut start = 0;
    for (g, &size) in grouping.sizes().iter().enumerate() {
        for &(_, i, j) in &terms {
            let mut v = linalg::kron_all(a.vectors()[start..start + size].iter().map(|fam| &fam[i]));
            v = linalg::kron_vec(&v, &b.vectors()[g][j]);
            vectors[g].push(v);
        }
        start += size;
    }
    SchmidtDecomposition::new(terms.iter().map(|t| t.0).collect(), vectors)
}

#[derive(Debug, Clone)]
pub enum RankMode {
    /// Bipartite Schmidt number across a cut.
    Cut(Bipartition),
    /// Multipartite Schmidt number; requires decomposable inputs.
    Multipartite { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub phi_rank: usize,
    pub gamma_rank: usize,
    /// `None` when the combination is not decomposable.
    pub psi_rank: Option<usize>,
    /// `false` when the combination is not decomposable, so there is no
    /// Schmidt number to compare.
    pub applicable: bool,
    pub holds: Option<bool>,
    pub psi: StateTensor,
}

/// Forms `ψ ∝ αφ + βγ` and tests `Sch(ψ) >= |Sch(φ) - Sch(γ)|`.
pub fn rank_inequality_check(
    phi: &StateTensor,
    gamma: &StateTensor,
    alpha: C64,
    beta: C64,
    mode: &RankMode,
) -> Result<InequalityReport> {
    if phi.dims() != gamma.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", phi.dims(), gamma.dims())));
    }
    let amps: Vec<C64> = phi
        .amplitudes()
        .iter()
        .zip(gamma.amplitudes())
        .map(|(p, g)| alpha * p + beta * g)
        .collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-8 {
        return Err(Error::DegenerateCombination { norm });
    }
    let psi = StateTensor::normalized(phi.dims().to_vec(), amps)?;
    let tol = Tolerances::default();
    let (phi_rank, gamma_rank, psi_rank) = match mode {
        RankMode::Cut(cut) => (
            bipartite::schmidt_number(phi, cut)?,
            bipartite::schmidt_number(gamma, cut)?,
            Some(bipartite::schmidt_number(&psi, cut)?),
        ),
        RankMode::Multipartite { seed } => {
            let rp = multipartite::decompose(phi, *seed, &tol)?.rank();
            let rg = multipartite::decompose(gamma, *seed, &tol)?.rank();
            let rs = match multipartite::decompose(&psi, *seed, &tol) {
                Ok(d) => Some(d.rank()),
                Err(Error::NotDecomposable) => None,
                Err(e) => return Err(e),
            };
            (rp, rg, rs)
        }
    };
    let holds = psi_rank.map(|r| r >= phi_rank.abs_diff(gamma_rank));
    Ok(InequalityReport { phi_rank, gamma_rank, psi_rank, applicable: psi_rank.is_some(), holds, psi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipartite::random_decomposition;
    use crate::state::fixtures::*;

    fn ghz3_dec() -> SchmidtDecomposition {
        multipartite::check_decomposable(&ghz(3), 0).unwrap().decomposition.unwrap()
    }

    fn bell_dec() -> SchmidtDecomposition {
        multipartite::decompose(&bell(), 0, &Tolerances::default()).unwrap()
    }

    #[test]
    fn ghz_with_bell() {
        let g = Grouping::new(vec![2, 1]).unwrap();
        let d = compose(&ghz3_dec(), &bell_dec(), &g).unwrap();
        assert_eq!(schmidt_dimension(&d), SchmidtDimension { parts: 2, rank: 4 });
        assert!(d.coefficients().iter().all(|l| (l - 0.5).abs() < 1e-12));
        assert!(d.orthonormality_defect() < 1e-12);
        assert_eq!(d.dims(), &[8, 4]);
    }

    #[test]
    fn product_with_product() {
        let a = random_decomposition(&[2, 3, 2], 1, 1).unwrap();
        let b = random_decomposition(&[3, 2], 1, 2).unwrap();
        let d = compose(&a, &b, &Grouping::new(vec![1, 2]).unwrap()).unwrap();
        assert_eq!(d.rank(), 1);
    }

    #[test]
    fn rank_multiplies() {
        let a = random_decomposition(&[3, 3, 3], 2, 3).unwrap();
        let b = random_decomposition(&[3, 3, 3], 3, 4).unwrap();
        let d = compose(&a, &b, &Grouping::new(vec![1, 1, 1]).unwrap()).unwrap();
        assert_eq!(d.rank(), 6);
        let total: f64 = d.coefficients().iter().map(|l| l * l).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn composition_matches_tensor_product() {
        let a = random_decomposition(&[2, 3, 2], 2, 5).unwrap();
        let b = random_decomposition(&[2, 2], 2, 6).unwrap();
        let g = Grouping::new(vec![1, 2]).unwrap();
        let d = compose(&a, &b, &g).unwrap();
        let direct = a.reconstruct().kron(&b.reconstruct());
        let permuted = direct.permute_subsystems(&g.subsystem_order()).unwrap();
        let composed = d.reconstruct();
        let diff: f64 = composed
            .amplitudes()
            .iter()
            .zip(permuted.amplitudes())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-12);
    }

    #[test]
    fn grouping_errors() {
        let g = Grouping::new(vec![1, 1]).unwrap();
        assert!(matches!(compose(&ghz3_dec(), &bell_dec(), &g), Err(Error::GroupingMismatch(_))));
        let g = Grouping::new(vec![1, 1, 1]).unwrap();
        assert!(matches!(compose(&bell_dec(), &ghz3_dec(), &g), Err(Error::GroupingMismatch(_))));
        assert!(Grouping::new(vec![2, 0]).is_err());
    }

    #[test]
    fn grouping_enumeration() {
        let g = enumerate_groupings(4, 2).unwrap();
        let sizes: Vec<&[usize]> = g.iter().map(|g| g.sizes()).collect();
        assert_eq!(sizes, vec![&[1, 3][..], &[2, 2], &[3, 1]]);
        assert_eq!(enumerate_groupings(3, 3).unwrap().len(), 1);
        assert_eq!(enumerate_groupings(5, 3).unwrap().len(), 6);
        assert!(enumerate_groupings(2, 3).is_err());
        assert!(enumerate_groupings(2, 0).is_err());
    }

    #[test]
    fn inequality_cut_example() {
        let h = C64::from(0.5f64.sqrt());
        let cut = Bipartition::new(&[0], 3).unwrap();
        let zero = basis_state(&[2, 2, 2], &[0, 0, 0]).unwrap();
        let r = rank_inequality_check(&ghz(3), &zero, h, h, &RankMode::Cut(cut)).unwrap();
        assert_eq!((r.phi_rank, r.gamma_rank), (2, 1));
        assert!(r.psi_rank.unwrap() >= 1);
        assert_eq!(r.holds, Some(true));
    }

    #[test]
    fn cancellation_is_flagged() {
        let cut = Bipartition::new(&[0], 3).unwrap();
        let r = rank_inequality_check(&ghz(3), &ghz(3), C64::from(1.0), C64::from(-1.0), &RankMode::Cut(cut));
        assert!(matches!(r, Err(Error::DegenerateCombination { .. })));
    }

    #[test]
    fn combination_of_products_not_decomposable() {
        let a = basis_state(&[2, 2, 2], &[0, 0, 1]).unwrap();
        let b = basis_state(&[2, 2, 2], &[0, 1, 0]).unwrap();
        let h = C64::from(0.5f64.sqrt());
        let r = rank_inequality_check(&a, &b, h, h, &RankMode::Multipartite { seed: 0 }).unwrap();
        assert_eq!((r.phi_rank, r.gamma_rank), (1, 1));
        assert!(!r.applicable);
        assert_eq!(r.holds, None);
        // W itself is a sum of three rank-one terms
        let c = basis_state(&[2, 2, 2], &[1, 0, 0]).unwrap();
        let w = rank_inequality_check(&r.psi, &c, C64::from((2.0f64 / 3.0).sqrt()), C64::from(1.0 / 3f64.sqrt()), &RankMode::Cut(Bipartition::new(&[0], 3).unwrap())).unwrap();
        assert!(w.psi.distance(&w_state()) < 1e-12);
        assert!(!multipartite::check_decomposable(&w.psi, 0).unwrap().is_decomposable());
    }
}

//! Exact search for the bipartition with the largest attainable Schmidt
//! number: the smaller of the two dimension products.
//!
//! Products are exact integers. When the full product fits in `u128` every
//! partial product does too and the solver runs on `u128`; otherwise it
//! falls back to arbitrary precision.
//!
//! Ties are broken deterministically: among optimal splits, prefer one where
//! neither side is a single dimension-1 subsystem, then the
//! lexicographically smallest left set (left always contains subsystem 1).

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::state::Bipartition;

/// Largest instance handled by the exact solvers.
pub const MAX_SUBSYSTEMS: usize = 30;
/// Largest instance handled by plain enumeration under [`Strategy::Auto`].
pub const BRUTE_FORCE_LIMIT: usize = 20;
/// Products beyond this many bits are refused.
pub const MAX_PRODUCT_BITS: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionInstance {
    pub dims: Vec<BigUint>,
    pub target: Option<BigUint>,
}

impl PartitionInstance {
    pub fn from_u64(dims: &[u64], target: Option<u64>) -> Self {
        PartitionInstance {
            dims: dims.iter().map(|&d| BigUint::from(d)).collect(),
            target: target.map(BigUint::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSolution {
    pub cut: Bipartition,
    pub left_product: BigUint,
    pub right_product: BigUint,
    /// `min(left_product, right_product)`
    pub k: BigUint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    Auto,
    BruteForce,
    MeetInTheMiddle,
}

pub fn max_schmidt_number(dims: &[u64]) -> Result<PartitionSolution> {
    let inst = PartitionInstance::from_u64(dims, None);
    max_schmidt_number_with(&inst.dims, Strategy::Auto, Execution::default())
}

pub fn max_schmidt_number_with(dims: &[BigUint], strategy: Strategy, exec: Execution) -> Result<PartitionSolution> {
    let mask = dispatch(dims, strategy, |s| s.best_mask(exec), |s| s.best_mask(exec))?;
    Ok(solution(dims, mask.expect("at least one split exists")))
}

/// Some split whose smaller side reaches `k`, or `None` when infeasible.
pub fn decide(dims: &[u64], k: u64) -> Result<Option<PartitionSolution>> {
    let inst = PartitionInstance::from_u64(dims, Some(k));
    decide_with(&inst.dims, &BigUint::from(k), Strategy::Auto, Execution::default())
}

pub fn decide_with(
    dims: &[BigUint],
    k: &BigUint,
    strategy: Strategy,
    exec: Execution,
) -> Result<Option<PartitionSolution>> {
    if k.is_zero() {
        return Err(Error::InvalidArgs("target must be at least 1".into()));
    }
    let mask = dispatch(
        dims,
        strategy,
        |s| Mag::from_big(k).map_or(Ok(None), |k| s.decide_mask(&k, exec)),
        |s| s.decide_mask(k, exec),
    )?;
    Ok(mask.map(|m| solution(dims, m)))
}

pub fn solve(instance: &PartitionInstance, strategy: Strategy, exec: Execution) -> Result<Option<PartitionSolution>> {
    match &instance.target {
        Some(k) => decide_with(&instance.dims, k, strategy, exec),
        None => max_schmidt_number_with(&instance.dims, strategy, exec).map(Some),
    }
}

/// `2^⌊n/2⌋`, the largest Schmidt number over any split of `n` qubits.
pub fn qubit_bound(n: u32) -> u128 {
    assert!(n / 2 < 128, "bound overflows u128");
    1u128 << (n / 2)
}

fn dispatch<T>(
    dims: &[BigUint],
    strategy: Strategy,
    small: impl FnOnce(&Solver<u128>) -> Result<T>,
    big: impl FnOnce(&Solver<BigUint>) -> Result<T>,
) -> Result<T> {
    let n = dims.len();
    if n < 2 {
        return Err(Error::InvalidArgs(format!("need at least 2 subsystems, got {n}")));
    }
    if n > MAX_SUBSYSTEMS {
        return Err(Error::TooManySubsystems { n, max: MAX_SUBSYSTEMS });
    }
    if dims.iter().any(Zero::is_zero) {
        return Err(Error::InvalidArgs("dimensions must be positive".into()));
    }
    let strategy = match strategy {
        Strategy::Auto if n <= BRUTE_FORCE_LIMIT => Strategy::BruteForce,
        Strategy::Auto => Strategy::MeetInTheMiddle,
        s => s,
    };
    let total: BigUint = dims.iter().product();
    if total.bits() > MAX_PRODUCT_BITS {
        return Err(Error::ProductOverflow);
    }
    match total.to_u128() {
        Some(_) => small(&Solver::new(dims.iter().map(|d| d.to_u128().expect("divides total")).collect(), strategy)),
        None => big(&Solver::new(dims.to_vec(), strategy)),
    }
}

fn solution(dims: &[BigUint], mask: u64) -> PartitionSolution {
    let n = dims.len();
    let left: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
    let cut = Bipartition::new(&left, n).expect("mask is a proper nonempty subset");
    let left_product: BigUint = cut.left().iter().map(|&i| &dims[i]).product();
    let right_product: BigUint = cut.right().iter().map(|&i| &dims[i]).product();
    let k = (&left_product).min(&right_product).clone();
    PartitionSolution { cut, left_product, right_product, k }
}

trait Mag: Clone + Ord + Send + Sync {
    fn one() -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn isqrt(&self) -> Self;
    fn is_one(&self) -> bool;
    fn from_big(b: &BigUint) -> Option<Self>;
}

impl Mag for u128 {
    fn one() -> Self {
        1
    }
    fn mul(&self, o: &Self) -> Self {
        self.checked_mul(*o).expect("partial products divide the total")
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn isqrt(&self) -> Self {
        u128::isqrt(*self)
    }
    fn is_one(&self) -> bool {
        *self == 1
    }
    fn from_big(b: &BigUint) -> Option<Self> {
        b.to_u128()
    }
}

impl Mag for BigUint {
    fn one() -> Self {
        One::one()
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn isqrt(&self) -> Self {
        self.sqrt()
    }
    fn is_one(&self) -> bool {
        One::is_one(self)
    }
    fn from_big(b: &BigUint) -> Option<Self> {
        Some(b.clone())
    }
}

/// Lexicographic order of two index sets given as bit masks.
pub(crate) fn lex_cmp(a: u64, b: u64) -> Ordering {
    let diff = a ^ b;
    if diff == 0 {
        return Ordering::Equal;
    }
    let p = diff.trailing_zeros();
    let above = !((2u64 << p) - 1);
    // the set holding p is smaller unless the other set stops before p
    if a >> p & 1 == 1 {
        if b & above != 0 { Ordering::Less } else { Ordering::Greater }
    } else if a & above != 0 {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

// (lone, mask): non-lone first, then lexicographically smaller
fn tie_better(a: (bool, u64), b: (bool, u64)) -> bool {
    if a.0 != b.0 {
        return !a.0;
    }
    lex_cmp(a.1, b.1) == Ordering::Less
}

struct Solver<M> {
    dims: Vec<M>,
    total: M,
    n: usize,
    full: u64,
    strategy: Strategy,
}

impl<M: Mag> Solver<M> {
    fn new(dims: Vec<M>, strategy: Strategy) -> Self {
        let total = dims.iter().fold(M::one(), |acc, d| acc.mul(d));
        let n = dims.len();
        Solver { dims, total, n, full: (1u64 << n) - 1, strategy }
    }

    fn lone(&self, mask: u64) -> bool {
        let single = |m: u64| m.count_ones() == 1 && self.dims[m.trailing_zeros() as usize].is_one();
        single(mask) || single(self.full & !mask)
    }

    fn k_of(&self, left: &M) -> M {
        let right = self.total.div(left);
        if *left <= right { left.clone() } else { right }
    }

    /// All left masks containing subsystem 0 (full set excluded) with their
    /// left and right products, in chunks evaluated in parallel.
    fn scan<U: Send>(
        &self,
        exec: Execution,
        eval: impl Fn(u64, &M, &M) -> Option<U> + Sync + Send,
        better: impl Fn(&U, &U) -> bool + Sync + Send,
    ) -> Option<U> {
        let free = self.n - 1;
        let low_bits = free.min(10);
        let high_bits = free - low_bits;
        // tables over the free bits (subsystems 1..n)
        let table = |offset: usize, bits: usize| -> Vec<M> {
            let mut t = vec![M::one(); 1 << bits];
            for m in 1..(1usize << bits) {
                let b = m.trailing_zeros() as usize;
                t[m] = t[m & (m - 1)].mul(&self.dims[1 + offset + b]);
            }
            t
        };
        let low = table(0, low_bits);
        let high = table(low_bits, high_bits);
        let low_mask = (1u64 << low_bits) - 1;
        let free_full = (1u64 << free) - 1;
        let d0 = &self.dims[0];
        par::best_in_range(
            exec,
            0,
            1u64 << high_bits,
            |h| {
                let mut best: Option<U> = None;
                for l in 0..=low_mask {
                    let m = h << low_bits | l;
                    if m == free_full {
                        continue;
                    }
                    let c = free_full & !m;
                    let lp = d0.mul(&low[l as usize]).mul(&high[h as usize]);
                    let rp = low[(c & low_mask) as usize].mul(&high[(c >> low_bits) as usize]);
                    if let Some(u) = eval(m << 1 | 1, &lp, &rp) {
                        if best.as_ref().is_none_or(|b| better(&u, b)) {
                            best = Some(u);
                        }
                    }
                }
                best
            },
            &better,
        )
    }

    fn best_mask(&self, exec: Execution) -> Result<Option<u64>> {
        if self.strategy == Strategy::BruteForce {
            let best = self.scan(
                exec,
                |mask, lp, rp| Some(((lp.min(rp)).clone(), self.lone(mask), mask)),
                |a, b| match a.0.cmp(&b.0) {
                    Ordering::Equal => tie_better((a.1, a.2), (b.1, b.2)),
                    o => o == Ordering::Greater,
                },
            );
            return Ok(best.map(|b| b.2));
        }
        let k = self.mitm_optimum(exec);
        Ok(self.lex_first_feasible(&k, exec))
    }

    fn decide_mask(&self, k: &M, exec: Execution) -> Result<Option<u64>> {
        if self.strategy == Strategy::BruteForce {
            let best = self.scan(
                exec,
                |mask, lp, rp| (lp.min(rp) >= k).then(|| (self.lone(mask), mask)),
                |a, b| tie_better(*a, *b),
            );
            return Ok(best.map(|b| b.1));
        }
        Ok(self.lex_first_feasible(k, exec))
    }

    /// Lexicographically smallest left set with `min(L, R) >= k`.
    fn lex_first_feasible(&self, k: &M, exec: Execution) -> Option<u64> {
        if k.is_one() {
            return Some(self.first_non_lone());
        }
        if *k > self.total.isqrt() {
            return None;
        }
        let hi = self.total.div(k);
        let mut set = 1u64;
        let mut prod = self.dims[0].clone();
        let mut last = 0usize;
        loop {
            if prod >= *k && prod <= hi {
                return Some(set);
            }
            let next = (last + 1..self.n).find(|&t| {
                let p = prod.mul(&self.dims[t]);
                self.completion_exists(&p, t + 1, k, &hi, exec)
            })?;
            set |= 1 << next;
            prod = prod.mul(&self.dims[next]);
            last = next;
        }
    }

    // first set in lex order (containing 0, not full) that is not a lone
    // dimension-1 split; every split is optimal when the optimum is 1
    fn first_non_lone(&self) -> u64 {
        let mut stack = vec![(1u64, 0usize)];
        let mut visited = 0;
        while let Some((set, last)) = stack.pop() {
            if set != self.full {
                if !self.lone(set) {
                    return set;
                }
                visited += 1;
                if visited > self.n + 2 {
                    break;
                }
            }
            for t in (last + 1..self.n).rev() {
                stack.push((set | 1 << t, t));
            }
        }
        1
    }

    /// Whether some subset `X` of `from..n` puts `base * p(X)` in `[lo, hi]`.
    fn completion_exists(&self, base: &M, from: usize, lo: &M, hi: &M, exec: Execution) -> bool {
        let rest: Vec<usize> = (from..self.n).collect();
        let (a, b) = rest.split_at(rest.len() / 2);
        let mut right = self.subset_products(b);
        right.sort();
        let left = self.subset_products(a);
        let hits = par::map(exec, &left, |x| {
            let p = base.mul(x);
            if p > *hi {
                return false;
            }
            // smallest r with p * r >= lo
            let i = right.partition_point(|r| p.mul(r) < *lo);
            i < right.len() && p.mul(&right[i]) <= *hi
        });
        hits.into_iter().any(|h| h)
    }

    fn subset_products(&self, idx: &[usize]) -> Vec<M> {
        let mut out = vec![M::one()];
        for &i in idx {
            let ext: Vec<M> = out.iter().map(|p| p.mul(&self.dims[i])).collect();
            out.extend(ext);
        }
        out
    }

    /// Optimal `min(L, R)` by meet-in-the-middle: for each half-subset `a`
    /// containing subsystem 0, the best partner products sit on either side
    /// of `isqrt(total) / p(a)` in the sorted products of the other half.
    fn mitm_optimum(&self, exec: Execution) -> M {
        let h = self.n / 2;
        let second: Vec<usize> = (h..self.n).collect();
        let mut right = self.subset_products(&second);
        right.sort();
        let first: Vec<usize> = (1..h).collect();
        let firsts: Vec<M> = self.subset_products(&first).into_iter().map(|p| p.mul(&self.dims[0])).collect();
        let root = self.total.isqrt();
        let best = par::map(exec, &firsts, |pa| {
            let mut best: Option<M> = None;
            // `l == total` stands for the full set, whose k of 1 every
            // proper split attains anyway.
            let mut offer = |l: M| {
                let k = self.k_of(&l);
                if best.as_ref().is_none_or(|b| k > *b) {
                    best = Some(k);
                }
            };
            let i = right.partition_point(|r| pa.mul(r) <= root);
            if i > 0 {
                offer(pa.mul(&right[i - 1]));
            }
            if i < right.len() {
                offer(pa.mul(&right[i]));
            }
            best
        });
        best.into_iter().flatten().max().unwrap_or_else(M::one)
    }
}

/// Outcome of mapping a subset-sum instance onto a partition instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSumReduction {
    /// `dims = 2^{x_i}`, `K = 2^t`: feasible iff some side's exponents sum to
    /// at least `t` while the other side also reaches `t`.
    pub at_least: PartitionInstance,
    /// Padded with one extra subsystem of dimension `2^{|Σx - 2t|}` and
    /// `K = 2^{max(t, Σx - t)}`: feasible iff some subset sums to exactly `t`.
    pub exact: PartitionInstance,
    pub padding_exponent: u64,
}

pub fn subset_sum_to_partition(values: &[u64], target: u64) -> Result<SubsetSumReduction> {
    if values.is_empty() || values.contains(&0) {
        return Err(Error::InvalidArgs("values must be a nonempty list of positive integers".into()));
    }
    if target == 0 {
        return Err(Error::InvalidArgs("target must be at least 1".into()));
    }
    let sum = values
        .iter()
        .try_fold(0u64, |a, &v| a.checked_add(v))
        .ok_or(Error::OverflowRisk { bits: u64::MAX })?;
    let padding = sum.abs_diff(target.saturating_mul(2));
    let half = target.max(sum.saturating_sub(target));
    let bits = sum.saturating_add(padding);
    if bits > MAX_PRODUCT_BITS || target > MAX_PRODUCT_BITS {
        return Err(Error::OverflowRisk { bits });
    }
    let pow = |e: u64| <BigUint as One>::one() << e;
    let dims: Vec<BigUint> = values.iter().map(|&v| pow(v)).collect();
    let at_least = PartitionInstance { dims: dims.clone(), target: Some(pow(target)) };
    let mut padded = dims;
    padded.push(pow(padding));
    let exact = PartitionInstance { dims: padded, target: Some(pow(half)) };
    Ok(SubsetSumReduction { at_least, exact, padding_exponent: padding })
}

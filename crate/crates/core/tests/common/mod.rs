//! Independent reference implementations used as test oracles. Nothing
//! here calls into the library's linear algebra.

#![allow(dead_code)]

use num_complex::Complex64 as C;

/// Digits of `flat` in mixed radix `dims`, first subsystem most significant.
pub fn digits(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = flat % dims[k];
        flat /= dims[k];
    }
    out
}

fn index(ds: &[usize], dims: &[usize]) -> usize {
    ds.iter().zip(dims).fold(0, |acc, (d, n)| acc * n + d)
}

/// `Tr_{not keep} |ψ><ψ|` by summing matching index pairs; `keep` sorted.
pub fn partial_trace(amps: &[C], dims: &[usize], keep: &[usize]) -> Vec<Vec<C>> {
    let kd: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let side: usize = kd.iter().product();
    let mut rho = vec![vec![C::new(0.0, 0.0); side]; side];
    for (a, x) in amps.iter().enumerate() {
        let da = digits(a, dims);
        for (b, y) in amps.iter().enumerate() {
            let db = digits(b, dims);
            let traced_equal = (0..dims.len()).filter(|k| !keep.contains(k)).all(|k| da[k] == db[k]);
            if traced_equal {
                let r = index(&keep.iter().map(|&k| da[k]).collect::<Vec<_>>(), &kd);
                let c = index(&keep.iter().map(|&k| db[k]).collect::<Vec<_>>(), &kd);
                rho[r][c] += x * y.conj();
            }
        }
    }
    rho
}

/// Largest `min(L, R)` over all proper bipartitions, by enumeration.
pub fn partition_max(dims: &[u64]) -> u128 {
    let n = dims.len();
    (1..(1u64 << n) - 1)
        .map(|m| {
            let l: u128 = (0..n).filter(|i| m >> i & 1 == 1).map(|i| dims[i] as u128).product();
            let r: u128 = (0..n).filter(|i| m >> i & 1 == 0).map(|i| dims[i] as u128).product();
            l.min(r)
        })
        .max()
        .unwrap_or(0)
}

/// Whether some subset of `values` sums to exactly `target`.
pub fn subset_sum(values: &[u64], target: u64) -> bool {
    let t = target as usize;
    let mut reach = vec![false; t + 1];
    reach[0] = true;
    for &v in values {
        let v = v as usize;
        for s in (v..=t).rev() {
            reach[s] |= reach[s - v];
        }
    }
    reach[t]
}

pub fn binomial(n: u64, k: u64) -> u64 {
    let fact = |x: u64| (1..=x).product::<u64>();
    fact(n) / (fact(k) * fact(n - k))
}

/// Small deterministic generator (SplitMix64) for test inputs.
pub struct Mix(pub u64);

impl Mix {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.below(hi - lo + 1)
    }
}

/// Random dims with product at most `max_total` and at least two parts.
pub fn small_dims(mix: &mut Mix, max_total: usize) -> Vec<usize> {
    loop {
        let n = mix.range(2, 5) as usize;
        let dims: Vec<usize> = (0..n).map(|_| mix.range(1, 4) as usize).collect();
        if dims.iter().product::<usize>() <= max_total && dims.iter().product::<usize>() > 1 {
            return dims;
        }
    }
}

pub fn max_entry_gap(a: &[Vec<C>], b: &nalgebra::DMatrix<C>) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            worst = worst.max((z - b[(i, j)]).norm());
        }
    }
    worst
}

//! Graded monomial enumeration and index tables.
//!
//! A homogeneous polynomial of degree `d` in `v` variables stores its
//! coefficients in a dense vector indexed by exponent tuples
//! `a = (a_0, ..., a_{v-1})` with `|a| = d`. The fixed order is
//! *lexicographically decreasing*: the first exponent is `(d, 0, ..., 0)`,
//! the last is `(0, ..., 0, d)`, and `a` precedes `b` iff `a > b` in
//! lexicographic comparison. This order is part of the serialization
//! contract and must not change.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

/// Number of monomials of degree `d` in `v` variables: C(d + v - 1, v - 1).
pub fn monomial_count(v: usize, d: usize) -> usize {
    binomial_u64((d + v - 1) as u64, (v - 1) as u64) as usize
}

/// Exact binomial coefficient in u64 (panics on overflow; desk-scale sizes only).
pub fn binomial_u64(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul(n - i)
            .expect("binomial overflow: argument too large for u64")
            / (i + 1);
    }
    acc
}

/// Binomial coefficient as f64 via the multiplicative formula.
///
/// Relative error stays near machine precision for n <= ~300, which covers
/// every degree this crate handles.
pub fn binomial_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Multinomial coefficient d! / (a_0! ... a_{v-1}!) as f64, with |a| = d.
///
/// Computed as a product of binomials of the partial sums so intermediate
/// values never overflow.
pub fn multinomial_f64(exps: &[u32]) -> f64 {
    let mut acc = 1.0f64;
    let mut partial: u64 = 0;
    for &a in exps {
        partial += a as u64;
        acc *= binomial_f64(partial, a as u64);
    }
    acc
}

/// Immutable monomial table for a fixed (variables, degree) pair.
///
/// Stores the exponent tuples flat (stride = `v`) in the canonical order and
/// answers rank queries in O(v) via the combinatorial number system, so no
/// hash map is needed even for large tables.
pub struct MonomialTable {
    v: usize,
    degree: usize,
    len: usize,
    exps: Vec<u32>,
    // pascal[n * (v + 1) + k] = C(n, k) for n <= d + v, k <= v
    pascal: Vec<u64>,
}

impl MonomialTable {
    fn build(v: usize, d: usize) -> Self {
        assert!(v >= 1, "need at least one variable");
        let len = monomial_count(v, d);
        let mut exps = Vec::with_capacity(len * v);
        let mut current = vec![0u32; v];
        gen_exponents(v, d, 0, &mut current, &mut exps);
        debug_assert_eq!(exps.len(), len * v);
        let rows = d + v + 1;
        let cols = v + 1;
        let mut pascal = vec![0u64; rows * cols];
        for n in 0..rows {
            pascal[n * cols] = 1;
            for k in 1..cols {
                if k <= n {
                    pascal[n * cols + k] =
                        pascal[(n - 1) * cols + k] + pascal[(n - 1) * cols + k - 1];
                }
            }
        }
        MonomialTable { v, degree: d, len, exps, pascal }
    }

    pub fn n_vars(&self) -> usize {
        self.v
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Exponent tuple of the monomial at `index`.
    pub fn exponents(&self, index: usize) -> &[u32] {
        &self.exps[index * self.v..(index + 1) * self.v]
    }

    /// Iterator over (index, exponents).
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[u32])> {
        self.exps.chunks_exact(self.v).enumerate()
    }

    /// Rank of an exponent tuple in the canonical order.
    ///
    /// For each prefix position the tuples with a larger entry all precede,
    /// and their count telescopes to a single binomial (hockey stick).
    pub fn rank(&self, exps: &[u32]) -> usize {
        debug_assert_eq!(exps.len(), self.v);
        let cols = self.v + 1;
        let mut rank: u64 = 0;
        let mut rem = self.degree;
        for (i, &a) in exps.iter().enumerate().take(self.v - 1) {
            let v_left = self.v - i; // variables not yet fixed
            let a = a as usize;
            debug_assert!(a <= rem);
            if rem > a {
                rank += self.pascal[(rem - a - 1 + v_left - 1) * cols + v_left - 1];
            }
            rem -= a;
        }
        rank as usize
    }
}

fn gen_exponents(v: usize, d: usize, pos: usize, current: &mut [u32], out: &mut Vec<u32>) {
    if pos == v - 1 {
        current[pos] = d as u32;
        out.extend_from_slice(current);
        return;
    }
    for a in (0..=d).rev() {
        current[pos] = a as u32;
        gen_exponents(v, d - a, pos + 1, current, out);
    }
}

type TableKey = (usize, usize);

fn table_cache() -> &'static RwLock<HashMap<TableKey, Arc<MonomialTable>>> {
    static CACHE: OnceLock<RwLock<HashMap<TableKey, Arc<MonomialTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Shared monomial table for (`v` variables, degree `d`), built on first use.
pub fn table(v: usize, d: usize) -> Arc<MonomialTable> {
    {
        let cache = table_cache().read().unwrap();
        if let Some(t) = cache.get(&(v, d)) {
            return Arc::clone(t);
        }
    }
    let built = Arc::new(MonomialTable::build(v, d));
    let mut cache = table_cache().write().unwrap();
    Arc::clone(cache.entry((v, d)).or_insert(built))
}

/// Drop all cached tables. Intended for long sweeps over many degrees.
#[doc(hidden)]
pub fn clear_table_cache() {
    table_cache().write().unwrap().clear();
}

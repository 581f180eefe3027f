//! Exponent-matrix classes and the finite-set sum-product identity.
//!
//! For an exponent vector `p = (p_1, ..., p_q)` and a column count `l`, the
//! class `M_l^p` holds every `q x l` matrix of non-negative integers whose
//! row `i` sums to `p_i` and whose columns are all non-zero. Each matrix
//! counts the ways a `||p||_1`-tuple of points collapses onto `l` distinct
//! points, and its multiplicity `C_M = prod_i p_i! / prod_ij m_ij!` is the
//! size of that collapse class.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, LazyLock, Mutex};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};

/// Per-sum exponents `p = (p_1, ..., p_q)` with `||p||_1 > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ExponentVector(Vec<u32>);

impl ExponentVector {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidInput(
                "exponent vector must have at least one entry".into(),
            ));
        }
        if exponents.iter().all(|&p| p == 0) {
            return Err(Error::InvalidInput(
                "exponent vector must have a positive total (||p||_1 > 0)".into(),
            ));
        }
        Ok(Self(exponents))
    }

    pub fn scalar(p: u32) -> Result<Self> {
        Self::new(vec![p])
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `||p||_1`.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A `q x l` member of `M_l^p`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ExponentMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
}

impl ExponentMatrix {
    /// Builds a matrix from rows, checking the class invariants against `p`.
    pub fn from_rows(p: &ExponentVector, rows: &[Vec<u32>]) -> Result<Self> {
        if rows.len() != p.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} rows, got {}",
                p.len(),
                rows.len()
            )));
        }
        let cols = rows[0].len();
        if cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("rows must be non-empty and of equal length".into()));
        }
        let m = Self {
            rows: rows.len(),
            cols,
            entries: rows.concat(),
        };
        for (i, &pi) in p.as_slice().iter().enumerate() {
            if m.row(i).iter().sum::<u32>() != pi {
                return Err(Error::InvalidInput(format!("row {i} does not sum to p_{i} = {pi}")));
            }
        }
        if (0..cols).any(|j| m.column_sum(j) == 0) {
            return Err(Error::InvalidInput("every column must have a positive sum".into()));
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u32> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> impl Iterator<Item = Vec<u32>> + '_ {
        (0..self.cols).map(move |j| self.column(j))
    }

    pub fn column_sum(&self, j: usize) -> u32 {
        (0..self.rows).map(|i| self.get(i, j)).sum()
    }

    pub fn transpose_rows(&self) -> Vec<Vec<u32>> {
        self.columns().collect()
    }

    /// Same matrix with its columns reordered by `perm` (column `j` of the
    /// result is column `perm[j]` of `self`).
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.cols);
        let mut entries = Vec::with_capacity(self.entries.len());
        for i in 0..self.rows {
            entries.extend(perm.iter().map(|&j| self.get(i, j)));
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    /// Swaps the roles of the rows (reverses row order).
    pub fn reverse_rows(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for i in (0..self.rows).rev() {
            entries.extend_from_slice(self.row(i));
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }
}

/// Exact multiplicity `C_M`. Held in 64 bits when it fits, promoted to an
/// arbitrary-precision integer otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MultiplicityCoefficient {
    Small(u64),
    Big(BigUint),
}

impl MultiplicityCoefficient {
    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Small(v) => *v as f64,
            Self::Big(v) => v.to_f64().unwrap_or(f64::INFINITY),
        }
    }

    pub fn to_biguint(&self) -> BigUint {
        match self {
            Self::Small(v) => BigUint::from(*v),
            Self::Big(v) => v.clone(),
        }
    }
}

impl PartialEq<u64> for MultiplicityCoefficient {
    fn eq(&self, other: &u64) -> bool {
        match self {
            Self::Small(v) => v == other,
            Self::Big(v) => *v == BigUint::from(*other),
        }
    }
}

impl fmt::Display for MultiplicityCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Small(v) => write!(f, "{v}"),
            Self::Big(v) => write!(f, "{v}"),
        }
    }
}

fn binomial_u64(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

fn binomial_big(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `C_M = prod_i p_i! / prod_j m_ij!`, computed row by row as products of
/// binomial coefficients.
pub fn multiplicity(m: &ExponentMatrix) -> MultiplicityCoefficient {
    let small = (|| {
        let mut acc: u64 = 1;
        for i in 0..m.rows() {
            let mut filled: u64 = 0;
            for &e in m.row(i) {
                filled += u64::from(e);
                acc = acc.checked_mul(binomial_u64(filled, u64::from(e))?)?;
            }
        }
        Some(acc)
    })();
    match small {
        Some(v) => MultiplicityCoefficient::Small(v),
        None => {
            let mut acc = BigUint::one();
            for i in 0..m.rows() {
                let mut filled: u64 = 0;
                for &e in m.row(i) {
                    filled += u64::from(e);
                    acc *= binomial_big(filled, u64::from(e));
                }
            }
            MultiplicityCoefficient::Big(acc)
        }
    }
}

/// Weak compositions of `n` into `parts` parts, lexicographic order.
fn weak_compositions(n: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(n: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=n {
            prefix.push(first);
            rec(n - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// Every member of `M_l^p` exactly once, in row-major lexicographic order.
///
/// Columns are not deduplicated: matrices that differ only by a column
/// permutation are distinct members.
pub fn enumerate_matrices(p: &ExponentVector, l: usize) -> Result<Vec<ExponentMatrix>> {
    let total = p.total() as usize;
    if l == 0 || l > total {
        return Err(Error::OutOfRange(format!(
            "column count l = {l} must satisfy 1 <= l <= ||p||_1 = {total}"
        )));
    }
    let row_options: Vec<Vec<Vec<u32>>> = p
        .as_slice()
        .iter()
        .map(|&pi| weak_compositions(pi, l))
        .collect();
    let q = p.len();
    // Capacity still available in rows below `i` (used to prune early).
    let remaining: Vec<u32> = (0..=q).map(|i| p.as_slice()[i..].iter().sum()).collect();

    let mut out = Vec::new();
    let mut col_sums = vec![0u32; l];
    let mut chosen: Vec<&Vec<u32>> = Vec::with_capacity(q);

    #[allow(clippy::too_many_arguments)]
    fn rec<'a>(
        i: usize,
        q: usize,
        l: usize,
        row_options: &'a [Vec<Vec<u32>>],
        remaining: &[u32],
        col_sums: &mut Vec<u32>,
        chosen: &mut Vec<&'a Vec<u32>>,
        out: &mut Vec<ExponentMatrix>,
    ) {
        let empty = col_sums.iter().filter(|&&s| s == 0).count() as u32;
        if empty > remaining[i] {
            return;
        }
        if i == q {
            if empty == 0 {
                let entries = chosen.iter().flat_map(|r| r.iter().copied()).collect();
                out.push(ExponentMatrix {
                    rows: q,
                    cols: l,
                    entries,
                });
            }
            return;
        }
        for row in &row_options[i] {
            for (s, &e) in col_sums.iter_mut().zip(row) {
                *s += e;
            }
            chosen.push(row);
            rec(i + 1, q, l, row_options, remaining, col_sums, chosen, out);
            chosen.pop();
            for (s, &e) in col_sums.iter_mut().zip(row) {
                *s -= e;
            }
        }
    }

    rec(
        0,
        q,
        l,
        &row_options,
        &remaining,
        &mut col_sums,
        &mut chosen,
        &mut out,
    );
    Ok(out)
}

/// A class member paired with its multiplicity as a float, as consumed by
/// the analytic formulas.
#[derive(Debug, Clone)]
pub struct WeightedMatrix {
    pub matrix: ExponentMatrix,
    pub multiplicity: MultiplicityCoefficient,
    pub weight: f64,
}

type ClassKey = (Vec<u32>, usize);

static CLASS_CACHE: LazyLock<Mutex<HashMap<ClassKey, Arc<Vec<WeightedMatrix>>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Memoized `M_l^p` with multiplicities attached.
pub fn matrix_class(p: &ExponentVector, l: usize) -> Result<Arc<Vec<WeightedMatrix>>> {
    let key = (p.as_slice().to_vec(), l);
    if let Some(hit) = CLASS_CACHE.lock().expect("class cache poisoned").get(&key) {
        return Ok(Arc::clone(hit));
    }
    let class: Vec<WeightedMatrix> = enumerate_matrices(p, l)?
        .into_iter()
        .map(|matrix| {
            let multiplicity = multiplicity(&matrix);
            let weight = multiplicity.to_f64();
            WeightedMatrix {
                matrix,
                multiplicity,
                weight,
            }
        })
        .collect();
    let class = Arc::new(class);
    CLASS_CACHE
        .lock()
        .expect("class cache poisoned")
        .insert(key, Arc::clone(&class));
    Ok(class)
}

/// JSON dump of `M_l^p` for every `l`, used by `--dump-matrices`.
pub fn dump_classes(p: &ExponentVector) -> Result<serde_json::Value> {
    let mut classes = Vec::new();
    for l in 1..=p.total() as usize {
        let members: Vec<serde_json::Value> = matrix_class(p, l)?
            .iter()
            .map(|w| {
                let rows: Vec<&[u32]> = (0..w.matrix.rows()).map(|i| w.matrix.row(i)).collect();
                serde_json::json!({ "rows": rows, "multiplicity": w.multiplicity.to_string() })
            })
            .collect();
        classes.push(serde_json::json!({ "l": l, "count": members.len(), "matrices": members }));
    }
    Ok(serde_json::json!({ "p": p.as_slice(), "classes": classes }))
}

/// `prod_i (sum_u f_i(u))^{p_i} * prod_u g(u)` evaluated directly.
///
/// `f_values[i][u]` is `f_i` at point `u`; `g_values[u]` is `g` at `u`.
pub fn sum_product_brute_force(f_values: &[Vec<f64>], g_values: &[f64], p: &ExponentVector) -> f64 {
    assert_eq!(f_values.len(), p.len(), "one function table per exponent");
    let sums: f64 = f_values
        .iter()
        .zip(p.as_slice())
        .map(|(f, &pi)| f.iter().sum::<f64>().powi(pi as i32))
        .product();
    sums * g_values.iter().product::<f64>()
}

/// The collapse-class side of the identity:
/// `sum_l sum_{M in M_l^p} C_M sum_{V subset U, |V| = l} prod_i prod_j f_i(v_j)^{m_ij}`.
pub fn lemma2_rhs(f_values: &[Vec<f64>], p: &ExponentVector) -> Result<f64> {
    assert_eq!(f_values.len(), p.len(), "one function table per exponent");
    let n = f_values.first().map_or(0, Vec::len);
    let max_l = (p.total() as usize).min(n);
    let mut total = crate::special::NeumaierSum::new();
    for l in 1..=max_l {
        let class = matrix_class(p, l)?;
        for subset in Subsets::new(n, l) {
            for w in class.iter() {
                let mut prod = w.weight;
                for (j, &v) in subset.iter().enumerate() {
                    for (i, f) in f_values.iter().enumerate() {
                        prod *= f[v].powi(w.matrix.get(i, j) as i32);
                    }
                }
                total.add(prod);
            }
        }
    }
    Ok(total.value())
}

/// `sum_{u in U^{||p||_1}} prod_i prod_{k <= p_i} f_i(u^{(i)}_k)` by direct
/// enumeration of all `|U|^{||p||_1}` tuples.
pub fn expanded_sum(f_values: &[Vec<f64>], p: &ExponentVector) -> f64 {
    let n = f_values.first().map_or(0, Vec::len);
    // Slot k of the tuple uses function `owner[k]`.
    let owner: Vec<usize> = p
        .as_slice()
        .iter()
        .enumerate()
        .flat_map(|(i, &pi)| std::iter::repeat_n(i, pi as usize))
        .collect();
    product_tuple_sum(n, owner.len(), |k, u| f_values[owner[k]][u])
}

/// `sum_{u in U^k} prod_i f_i(u_i)` by direct enumeration; the left side of
/// the distributivity exchange.
pub fn product_tuple_sum(n: usize, k: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    if n == 0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let mut idx = vec![0usize; k];
    let mut total = crate::special::NeumaierSum::new();
    loop {
        total.add(idx.iter().enumerate().map(|(slot, &u)| f(slot, u)).product());
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == k {
                return total.value();
            }
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Index subsets of `{0..n}` of a fixed size in lexicographic order.
pub struct Subsets {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Subsets {
    pub fn new(n: usize, k: usize) -> Self {
        let current = if k <= n { Some((0..k).collect()) } else { None };
        Self { n, current }
    }
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// Binomial coefficient as an exact `u64` (panics on overflow).
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    binomial_u64(n, k).expect("binomial overflow")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(p: &[u32]) -> ExponentVector {
        ExponentVector::new(p.to_vec()).unwrap()
    }

    fn rows_of(m: &ExponentMatrix) -> Vec<Vec<u32>> {
        (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
    }

    // Independent oracle: every q x l matrix with entries in 0..=max(p),
    // filtered by the class constraints.
    fn brute_force_class(p: &[u32], l: usize) -> Vec<Vec<Vec<u32>>> {
        let q = p.len();
        let cap = *p.iter().max().unwrap();
        let cells = q * l;
        let mut out = Vec::new();
        let mut idx = vec![0u32; cells];
        loop {
            let rows: Vec<Vec<u32>> = (0..q).map(|i| idx[i * l..(i + 1) * l].to_vec()).collect();
            let rows_ok = rows.iter().zip(p).all(|(r, &pi)| r.iter().sum::<u32>() == pi);
            let cols_ok = (0..l).all(|j| rows.iter().map(|r| r[j]).sum::<u32>() > 0);
            if rows_ok && cols_ok {
                out.push(rows);
            }
            let mut pos = 0;
            loop {
                if pos == cells {
                    out.sort();
                    return out;
                }
                idx[pos] += 1;
                if idx[pos] <= cap {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn exponent_vector_rejects_zero_total() {
        assert!(ExponentVector::new(vec![0, 0]).is_err());
        assert!(ExponentVector::new(vec![]).is_err());
        assert_eq!(ev(&[0, 2, 1]).total(), 3);
    }

    #[test]
    fn enumerate_small_cases() {
        let one = enumerate_matrices(&ev(&[1]), 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(rows_of(&one[0]), vec![vec![1]]);

        let two = enumerate_matrices(&ev(&[2]), 2).unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(rows_of(&two[0]), vec![vec![1, 1]]);

        let col = enumerate_matrices(&ev(&[1, 1]), 1).unwrap();
        assert_eq!(col.len(), 1);
        assert_eq!(rows_of(&col[0]), vec![vec![1], vec![1]]);
    }

    #[test]
    fn enumerate_range_errors() {
        assert!(matches!(enumerate_matrices(&ev(&[2]), 0), Err(Error::OutOfRange(_))));
        assert!(matches!(enumerate_matrices(&ev(&[2]), 3), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn enumeration_matches_brute_force_filter() {
        for p in [vec![3], vec![2, 1], vec![1, 2], vec![0, 3], vec![2, 2], vec![1, 1, 1], vec![2, 0, 2]] {
            let total: u32 = p.iter().sum();
            for l in 1..=total as usize {
                let mut got: Vec<Vec<Vec<u32>>> = enumerate_matrices(&ev(&p), l)
                    .unwrap()
                    .iter()
                    .map(rows_of)
                    .collect();
                let sorted_already = got.windows(2).all(|w| w[0] < w[1]);
                assert!(sorted_already, "order not row-major lexicographic for p={p:?} l={l}");
                got.sort();
                assert_eq!(got, brute_force_class(&p, l), "p={p:?} l={l}");
            }
        }
    }

    #[test]
    fn scalar_class_counts_are_stars_and_bars() {
        for k in 1..=8u32 {
            for l in 1..=k as usize {
                let n = enumerate_matrices(&ev(&[k]), l).unwrap().len() as u64;
                assert_eq!(n, binomial(u64::from(k) - 1, l as u64 - 1), "k={k} l={l}");
            }
        }
    }

    #[test]
    fn multiplicity_examples() {
        let p1 = ev(&[1]);
        let p2 = ev(&[2]);
        assert_eq!(multiplicity(&ExponentMatrix::from_rows(&p1, &[vec![1]]).unwrap()), 1);
        assert_eq!(multiplicity(&ExponentMatrix::from_rows(&p2, &[vec![1, 1]]).unwrap()), 2);
        assert_eq!(multiplicity(&ExponentMatrix::from_rows(&p2, &[vec![2]]).unwrap()), 1);
        let p = ev(&[3, 2]);
        let m = ExponentMatrix::from_rows(&p, &[vec![2, 1, 0], vec![0, 1, 1]]).unwrap();
        // 3!/(2!1!0!) * 2!/(0!1!1!) = 3 * 2
        assert_eq!(multiplicity(&m), 6);
    }

    #[test]
    fn multiplicity_promotes_past_u64() {
        // 25 ones in a single row: C_M = 25!, which exceeds u64.
        let p = ev(&[25]);
        let m = ExponentMatrix::from_rows(&p, &[vec![1; 25]]).unwrap();
        let c = multiplicity(&m);
        assert!(matches!(c, MultiplicityCoefficient::Big(_)));
        let expected: BigUint = (1u32..=25).map(BigUint::from).product();
        assert_eq!(c.to_biguint(), expected);
        // 20! still fits
        let p = ev(&[20]);
        let m = ExponentMatrix::from_rows(&p, &[vec![1; 20]]).unwrap();
        assert_eq!(multiplicity(&m), 2_432_902_008_176_640_000u64);
    }

    #[test]
    fn from_rows_validates() {
        let p = ev(&[2, 1]);
        assert!(ExponentMatrix::from_rows(&p, &[vec![1, 1], vec![0, 0]]).is_err());
        assert!(ExponentMatrix::from_rows(&p, &[vec![1, 0], vec![1, 0]]).is_err());
        assert!(ExponentMatrix::from_rows(&p, &[vec![2, 0], vec![0, 1]]).is_ok());
    }

    #[test]
    fn brute_force_examples() {
        let p = ev(&[2]);
        assert_eq!(sum_product_brute_force(&[vec![]], &[], &p), 0.0);
        assert_eq!(sum_product_brute_force(&[vec![2.0]], &[0.5], &p), 2.0);
    }

    #[test]
    fn lemma2_rhs_examples() {
        assert!((lemma2_rhs(&[vec![1.7]], &ev(&[5])).unwrap() - 1.7f64.powi(5)).abs() < 1e-12);
        assert_eq!(lemma2_rhs(&[vec![1.0, 2.0]], &ev(&[2])).unwrap(), 9.0);
        assert_eq!(lemma2_rhs(&[vec![1.0, 1.0], vec![1.0, 1.0]], &ev(&[1, 1])).unwrap(), 4.0);
        assert_eq!(lemma2_rhs(&[vec![]], &ev(&[3])).unwrap(), 0.0);
    }

    #[test]
    fn lemma2_rhs_all_ones_counts_tuples() {
        for p in [vec![3], vec![2, 1], vec![1, 1, 2], vec![0, 4]] {
            let p = ev(&p);
            for n in 1..=5usize {
                let f = vec![vec![1.0; n]; p.len()];
                let expected = (n as f64).powi(p.total() as i32);
                assert_eq!(lemma2_rhs(&f, &p).unwrap(), expected, "p={p} n={n}");
            }
        }
    }

    #[test]
    fn subsets_enumerate_binomial_many() {
        for n in 0..7 {
            for k in 0..=n {
                let all: Vec<_> = Subsets::new(n, k).collect();
                assert_eq!(all.len() as u64, binomial(n as u64, k as u64));
                assert!(all.windows(2).all(|w| w[0] < w[1]));
            }
        }
        assert_eq!(Subsets::new(2, 3).count(), 0);
    }

    #[test]
    fn dump_lists_every_class() {
        let json = dump_classes(&ev(&[2, 1])).unwrap();
        let classes = json["classes"].as_array().unwrap();
        assert_eq!(classes.len(), 3);
        let counts: Vec<u64> = classes.iter().map(|c| c["count"].as_u64().unwrap()).collect();
        let expected: Vec<u64> = (1..=3).map(|l| enumerate_matrices(&ev(&[2, 1]), l).unwrap().len() as u64).collect();
        assert_eq!(counts, expected);
    }

    fn table_strategy() -> impl Strategy<Value = (Vec<u32>, Vec<Vec<f64>>)> {
        (1usize..=3, 1usize..=6).prop_flat_map(|(q, n)| {
            (
                proptest::collection::vec(0u32..=3, q).prop_filter("positive total", |p| {
                    let t: u32 = p.iter().sum();
                    t > 0 && t <= 6
                }),
                proptest::collection::vec(proptest::collection::vec(0.0f64..2.0, n), q),
            )
        })
    }

    proptest! {
        #[test]
        fn collapse_identity_matches_expanded_sum((p, f) in table_strategy()) {
            let p = ExponentVector::new(p).unwrap();
            let lhs = expanded_sum(&f, &p);
            let rhs = lemma2_rhs(&f, &p).unwrap();
            let scale = lhs.abs().max(1e-300);
            prop_assert!(((lhs - rhs) / scale).abs() < 1e-12 || (lhs - rhs).abs() < 1e-300,
                "lhs={} rhs={}", lhs, rhs);
        }

        #[test]
        fn distributivity_exchange(k in 1usize..=5, n in 1usize..=6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let tables: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
            let lhs = product_tuple_sum(n, k, |slot, u| tables[slot][u]);
            let rhs: f64 = tables.iter().map(|t| t.iter().sum::<f64>()).product();
            prop_assert!(((lhs - rhs) / rhs).abs() < 1e-12);
        }

        #[test]
        fn multiplicity_invariant_under_column_permutation(
            p in proptest::collection::vec(0u32..=3, 1..=3).prop_filter("positive", |p| p.iter().sum::<u32>() > 0),
            pick in any::<prop::sample::Index>(),
            shuffle_seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let p = ExponentVector::new(p).unwrap();
            let l = 1 + pick.index(p.total() as usize);
            let class = enumerate_matrices(&p, l).unwrap();
            let m = &class[pick.index(class.len())];
            let mut perm: Vec<usize> = (0..l).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle_seed));
            let permuted = m.permute_columns(&perm);
            prop_assert!(class.contains(&permuted));
            prop_assert_eq!(multiplicity(m), multiplicity(&permuted));
        }
    }
}

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Coefficients with modulus below this are dropped on construction.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// A finitely supported vector in ℓ²(ℕ), stored as index-sorted `(index, coefficient)` pairs.
///
/// Basis indices start at 1 (`e₁, e₂, …`). Every stored coefficient has modulus at
/// least [`PRUNE_THRESHOLD`], so the empty vector is the only representation of zero.
#[derive(Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, f64, f64)>", into = "Vec<(usize, f64, f64)>")]
pub struct FinVec {
    entries: Vec<(usize, Complex64)>,
}

impl FinVec {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The standard basis vector `e_k`.
    pub fn basis(k: usize) -> Self {
        Self {
            entries: vec![(k, Complex64::new(1.0, 0.0))],
        }
    }

    /// Builds a vector from arbitrary pairs; duplicates are summed.
    pub fn from_pairs<I: IntoIterator<Item = (usize, Complex64)>>(pairs: I) -> Self {
        let mut entries: Vec<(usize, Complex64)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(k, _)| k);
        let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(entries.len());
        for (k, c) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == k => *acc += c,
                _ => merged.push((k, c)),
            }
        }
        merged.retain(|(_, c)| c.norm() >= PRUNE_THRESHOLD);
        Self { entries: merged }
    }

    /// Places `coeffs[i]` at index `start + i`.
    pub fn from_window(start: usize, coeffs: &[Complex64]) -> Self {
        let entries = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() >= PRUNE_THRESHOLD)
            .map(|(i, &c)| (start + i, c))
            .collect();
        Self { entries }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn min_support(&self) -> Option<usize> {
        self.entries.first().map(|&(k, _)| k)
    }

    pub fn max_support(&self) -> Option<usize> {
        self.entries.last().map(|&(k, _)| k)
    }

    pub fn get(&self, k: usize) -> Complex64 {
        match self.entries.binary_search_by_key(&k, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|(_, c)| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, other⟩ = Σ self(k)·conj(other(k))`.
    pub fn inner(&self, other: &FinVec) -> Complex64 {
        let (a, b) = (&self.entries, &other.entries);
        let mut acc = Complex64::new(0.0, 0.0);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1.conj();
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn scale(&self, c: Complex64) -> FinVec {
        FinVec::from_pairs(self.entries.iter().map(|&(k, v)| (k, v * c)))
    }

    pub fn scale_real(&self, c: f64) -> FinVec {
        self.scale(Complex64::new(c, 0.0))
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: Complex64, other: &FinVec) -> FinVec {
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
                let e = a[i];
                i += 1;
                e
            } else if i >= a.len() || b[j].0 < a[i].0 {
                let e = (b[j].0, c * b[j].1);
                j += 1;
                e
            } else {
                let e = (a[i].0, a[i].1 + c * b[j].1);
                i += 1;
                j += 1;
                e
            };
            if next.1.norm() >= PRUNE_THRESHOLD {
                out.push(next);
            }
        }
        FinVec { entries: out }
    }

    pub fn add(&self, other: &FinVec) -> FinVec {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &FinVec) -> FinVec {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// Unit vector in the direction of `self`, or `None` when the norm is below `tol`.
    pub fn normalized(&self, tol: f64) -> Option<FinVec> {
        let n = self.norm();
        (n > tol).then(|| self.scale_real(1.0 / n))
    }

    /// Dense copy of the coefficients on `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for &(k, c) in &self.entries {
            if k >= start && k < start + len {
                out[k - start] = c;
            }
        }
        out
    }
}

/// `⟨u, v⟩`, conjugate-linear in `v`.
pub fn inner_product(u: &FinVec, v: &FinVec) -> Complex64 {
    u.inner(v)
}

impl fmt::Debug for FinVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.entries.iter().map(|(k, c)| (k, c)))
            .finish()
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid sparse vector: {0}")]
pub struct FinVecFormatError(String);

impl TryFrom<Vec<(usize, f64, f64)>> for FinVec {
    type Error = FinVecFormatError;

    fn try_from(raw: Vec<(usize, f64, f64)>) -> Result<Self, Self::Error> {
        let mut entries = Vec::with_capacity(raw.len());
        for (k, re, im) in raw {
            if !(re.is_finite() && im.is_finite()) {
                return Err(FinVecFormatError(format!("non-finite coefficient at index {k}")));
            }
            if let Some(&(prev, _)) = entries.last() {
                if prev >= k {
                    return Err(FinVecFormatError(format!(
                        "indices must be strictly increasing ({prev} then {k})"
                    )));
                }
            }
            entries.push((k, Complex64::new(re, im)));
        }
        Ok(FinVec { entries })
    }
}

impl From<FinVec> for Vec<(usize, f64, f64)> {
    fn from(v: FinVec) -> Self {
        v.entries.into_iter().map(|(k, c)| (k, c.re, c.im)).collect()
    }
}

/// Dense scratch buffer over an index range, used to accumulate sparse updates cheaply.
pub(crate) struct DenseAccumulator {
    offset: usize,
    data: Vec<Complex64>,
}

impl DenseAccumulator {
    pub(crate) fn new(lo: usize, hi: usize) -> Self {
        let len = if hi >= lo { hi - lo + 1 } else { 0 };
        Self {
            offset: lo,
            data: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub(crate) fn add_at(&mut self, k: usize, c: Complex64) {
        self.data[k - self.offset] += c;
    }

    pub(crate) fn load(&mut self, v: &FinVec) {
        for (k, c) in v.iter() {
            self.add_at(k, c);
        }
    }

    /// `⟨buffer, v⟩`; `v` must lie inside the buffer range.
    pub(crate) fn inner_with(&self, v: &FinVec) -> Complex64 {
        v.iter()
            .map(|(k, c)| self.data[k - self.offset] * c.conj())
            .sum()
    }

    pub(crate) fn axpy(&mut self, a: Complex64, v: &FinVec) {
        for (k, c) in v.iter() {
            self.data[k - self.offset] += a * c;
        }
    }

    pub(crate) fn into_finvec(self) -> FinVec {
        FinVec::from_window(self.offset, &self.data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inner_products_of_basis_vectors() {
        assert_eq!(inner_product(&FinVec::basis(1), &FinVec::basis(1)), c(1.0, 0.0));
        assert_eq!(inner_product(&FinVec::basis(1), &FinVec::basis(2)), c(0.0, 0.0));
        let u = FinVec::from_pairs([(1, c(1.0, 0.0)), (2, c(0.0, 1.0))]);
        assert_eq!(inner_product(&u, &FinVec::basis(2)), c(0.0, 1.0));
        // conjugate-linear in the second slot
        assert_eq!(inner_product(&FinVec::basis(2), &u), c(0.0, -1.0));
    }

    #[test]
    fn pruning_drops_tiny_coefficients() {
        let v = FinVec::from_pairs([(3, c(1e-16, 0.0)), (4, c(0.5, 0.0)), (4, c(-0.5, 0.0))]);
        assert!(v.is_zero());
        let w = FinVec::basis(2).axpy(c(-1.0, 0.0), &FinVec::basis(2));
        assert!(w.is_zero());
    }

    #[test]
    fn support_queries() {
        let v = FinVec::from_pairs([(7, c(1.0, 0.0)), (3, c(2.0, 0.0))]);
        assert_eq!(v.min_support(), Some(3));
        assert_eq!(v.max_support(), Some(7));
        assert_eq!(v.norm_sqr(), 5.0);
        assert_eq!(v.get(7), c(1.0, 0.0));
        assert_eq!(v.get(5), c(0.0, 0.0));
    }

    #[test]
    fn serde_rejects_unsorted_indices() {
        let bad = "[[3, 1.0, 0.0], [2, 1.0, 0.0]]";
        assert!(serde_json::from_str::<FinVec>(bad).is_err());
        let good = FinVec::from_pairs([(2, c(0.25, -1.5)), (9, c(1e-3, 0.0))]);
        let text = serde_json::to_string(&good).unwrap();
        assert_eq!(serde_json::from_str::<FinVec>(&text).unwrap(), good);
    }
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::finvec::{DenseAccumulator, FinVec};

/// Default bound on `|⟨uᵢ,uⱼ⟩ − δᵢⱼ|` accepted for a family.
pub const DEFAULT_GRAM_TOLERANCE: f64 = 1e-10;

/// An ordered, (numerically) orthonormal list of sparse vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthoFamily {
    pub vectors: Vec<FinVec>,
    pub gram_tolerance: f64,
}

impl Default for OrthoFamily {
    fn default() -> Self {
        Self::new(DEFAULT_GRAM_TOLERANCE)
    }
}

impl OrthoFamily {
    pub fn new(gram_tolerance: f64) -> Self {
        Self {
            vectors: Vec::new(),
            gram_tolerance,
        }
    }

    pub fn from_vectors(vectors: Vec<FinVec>, gram_tolerance: f64) -> Self {
        Self {
            vectors,
            gram_tolerance,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn push(&mut self, v: FinVec) {
        self.vectors.push(v);
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FinVec> {
        self.vectors.iter()
    }

    /// Largest index in the support of any member.
    pub fn max_support(&self) -> Option<usize> {
        self.vectors.iter().filter_map(FinVec::max_support).max()
    }

    /// `max |⟨uᵢ,uⱼ⟩ − δᵢⱼ|` over all stored pairs.
    pub fn gram_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.inner(b) - target).norm());
            }
        }
        worst
    }

    /// `(I − P)u` where `P` projects onto the span of the family.
    pub fn residual(&self, u: &FinVec) -> FinVec {
        residual(u, self)
    }

    /// `Σ |⟨x, uᵢ⟩|²`, the squared norm of the projection of `x`.
    pub fn projection_norm_sqr(&self, x: &FinVec) -> f64 {
        self.vectors.iter().map(|u| x.inner(u).norm_sqr()).sum()
    }
}

/// `(I − P)u` for the orthogonal projection `P` onto `span(family)`.
///
/// Two classical Gram–Schmidt passes; the second removes the drift left by the first.
pub fn residual(u: &FinVec, family: &OrthoFamily) -> FinVec {
    residual_against(u, family.vectors.iter())
}

pub(crate) fn residual_against<'a, I>(u: &FinVec, family: I) -> FinVec
where
    I: IntoIterator<Item = &'a FinVec> + Clone,
{
    let Some(lo_u) = u.min_support() else {
        return FinVec::zero();
    };
    let hi_u = u.max_support().unwrap_or(lo_u);
    let (mut lo, mut hi) = (lo_u, hi_u);
    let mut touching = Vec::new();
    for v in family.clone() {
        if let (Some(a), Some(b)) = (v.min_support(), v.max_support()) {
            touching.push(v);
            lo = lo.min(a);
            hi = hi.max(b);
        }
    }
    if touching.is_empty() {
        return u.clone();
    }
    let mut acc = DenseAccumulator::new(lo, hi);
    acc.load(u);
    for _pass in 0..2 {
        for v in &touching {
            let c: Complex64 = acc.inner_with(v);
            if c.norm() > 0.0 {
                acc.axpy(-c, v);
            }
        }
    }
    acc.into_finvec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn family(vs: Vec<FinVec>) -> OrthoFamily {
        OrthoFamily::from_vectors(vs, DEFAULT_GRAM_TOLERANCE)
    }

    #[test]
    fn residual_examples() {
        let f = family(vec![FinVec::basis(1)]);
        assert!(residual(&FinVec::basis(1), &f).is_zero());
        assert_eq!(residual(&FinVec::basis(2), &f), FinVec::basis(2));
        let u = FinVec::basis(1).add(&FinVec::basis(2));
        assert_eq!(residual(&u, &f), FinVec::basis(2));
    }

    #[test]
    fn residual_against_empty_family_is_identity() {
        let u = FinVec::from_pairs([(4, c(0.3, 0.1)), (8, c(-1.0, 2.0))]);
        assert_eq!(residual(&u, &OrthoFamily::default()), u);
    }

    #[test]
    fn gram_error_detects_duplicates() {
        let f = family(vec![FinVec::basis(1), FinVec::basis(1)]);
        assert!((f.gram_error() - 1.0).abs() < 1e-15);
        let g = family((1..=5).map(FinVec::basis).collect());
        assert_eq!(g.gram_error(), 0.0);
    }
}

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::finvec::{DenseAccumulator, FinVec};
use super::sequence::{Sequence, SequenceError};
use crate::numrange::ConvexRegion;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One constant diagonal of a banded Toeplitz operator: `entry(j, n) = value` when `j − n = offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToeplitzDiagonal {
    pub offset: i64,
    pub value: Complex64,
}

/// A single matrix entry added on top of a base operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryPatch {
    pub row: usize,
    pub col: usize,
    pub value: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorKind {
    /// `eₙ ↦ eₙ₊₁`.
    Shift {},
    /// `eₙ ↦ wₙ eₙ₊₁`.
    WeightedShift { weights: Sequence },
    /// `eₙ ↦ dₙ eₙ`.
    Diagonal { values: Sequence },
    ToeplitzBanded { diagonals: Vec<ToeplitzDiagonal> },
    /// `α·inner + β·I`.
    Affine {
        alpha: Complex64,
        beta: Complex64,
        inner: Box<OperatorModel>,
    },
    /// `left ⊕ right`, with `left` on odd and `right` on even basis indices.
    DirectSum {
        left: Box<OperatorModel>,
        right: Box<OperatorModel>,
    },
    /// `base` plus finitely many entries.
    Perturbed {
        base: Box<OperatorModel>,
        entries: Vec<EntryPatch>,
    },
}

/// A banded operator on ℓ²(ℕ) given by its entries `⟨T eₙ, eⱼ⟩`.
///
/// `we_region` and `norm_bound` may be omitted in JSON; they are then filled from the
/// closed forms available for each kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value")]
pub struct OperatorModel {
    #[serde(flatten)]
    pub kind: OperatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub we_region: Option<ConvexRegion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("no closed form for the essential numerical range of this model; set `we_region`")]
    MissingEssentialRange,
    #[error("perturbation entry ({row}, {col}) uses index 0; basis indices start at 1")]
    ZeroIndex { row: usize, col: usize },
    #[error("norm bound must be finite and non-negative, got {0}")]
    BadNormBound(f64),
    #[error("invalid essential range: {0}")]
    BadRegion(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

impl OperatorModel {
    pub fn new(kind: OperatorKind) -> Self {
        Self {
            kind,
            we_region: None,
            norm_bound: None,
        }
    }

    pub fn shift() -> Self {
        Self::new(OperatorKind::Shift {})
    }

    pub fn diagonal(values: Sequence) -> Self {
        Self::new(OperatorKind::Diagonal { values })
    }

    pub fn weighted_shift(weights: Sequence) -> Self {
        Self::new(OperatorKind::WeightedShift { weights })
    }

    pub fn with_we_region(mut self, region: ConvexRegion) -> Self {
        self.we_region = Some(region);
        self
    }

    pub fn with_norm_bound(mut self, bound: f64) -> Self {
        self.norm_bound = Some(bound);
        self
    }

    /// Fills unseeded random sequences from the run seed; `salt` separates nested models.
    pub fn with_run_seed(&self, run_seed: u64, salt: u64) -> OperatorModel {
        let kind = match &self.kind {
            OperatorKind::WeightedShift { weights } => OperatorKind::WeightedShift {
                weights: weights.with_run_seed(run_seed, salt),
            },
            OperatorKind::Diagonal { values } => OperatorKind::Diagonal {
                values: values.with_run_seed(run_seed, salt),
            },
            OperatorKind::Affine { alpha, beta, inner } => OperatorKind::Affine {
                alpha: *alpha,
                beta: *beta,
                inner: Box::new(inner.with_run_seed(run_seed, 2 * salt + 1)),
            },
            OperatorKind::DirectSum { left, right } => OperatorKind::DirectSum {
                left: Box::new(left.with_run_seed(run_seed, 2 * salt + 1)),
                right: Box::new(right.with_run_seed(run_seed, 2 * salt + 2)),
            },
            OperatorKind::Perturbed { base, entries } => OperatorKind::Perturbed {
                base: Box::new(base.with_run_seed(run_seed, 2 * salt + 1)),
                entries: entries.clone(),
            },
            other => other.clone(),
        };
        OperatorModel {
            kind,
            we_region: self.we_region.clone(),
            norm_bound: self.norm_bound,
        }
    }

    /// Checks parameters and that the essential range and norm bound are determinable.
    pub fn validate(&self) -> Result<(), ModelError> {
        match &self.kind {
            OperatorKind::WeightedShift { weights } => weights.validate()?,
            OperatorKind::Diagonal { values } => values.validate()?,
            OperatorKind::Affine { inner, .. } => inner.validate()?,
            OperatorKind::DirectSum { left, right } => {
                left.validate()?;
                right.validate()?;
            }
            OperatorKind::Perturbed { base, entries } => {
                base.validate()?;
                if let Some(e) = entries.iter().find(|e| e.row == 0 || e.col == 0) {
                    return Err(ModelError::ZeroIndex {
                        row: e.row,
                        col: e.col,
                    });
                }
            }
            OperatorKind::Shift {} | OperatorKind::ToeplitzBanded { .. } => {}
        }
        if let Some(b) = self.norm_bound {
            if !(b.is_finite() && b >= 0.0) {
                return Err(ModelError::BadNormBound(b));
            }
        }
        if let Some(r) = &self.we_region {
            r.validate().map_err(ModelError::BadRegion)?;
        }
        self.essential_range().map(|_| ())
    }

    /// `⟨T eₙ, eⱼ⟩` for basis indices `j, n ≥ 1`.
    pub fn entry(&self, j: usize, n: usize) -> Complex64 {
        match &self.kind {
            OperatorKind::Shift {} => {
                if j == n + 1 {
                    Complex64::new(1.0, 0.0)
                } else {
                    ZERO
                }
            }
            OperatorKind::WeightedShift { weights } => {
                if j == n + 1 {
                    weights.value(n)
                } else {
                    ZERO
                }
            }
            OperatorKind::Diagonal { values } => {
                if j == n {
                    values.value(n)
                } else {
                    ZERO
                }
            }
            OperatorKind::ToeplitzBanded { diagonals } => {
                let offset = j as i64 - n as i64;
                diagonals
                    .iter()
                    .filter(|d| d.offset == offset)
                    .map(|d| d.value)
                    .sum()
            }
            OperatorKind::Affine { alpha, beta, inner } => {
                let base = alpha * inner.entry(j, n);
                if j == n {
                    base + beta
                } else {
                    base
                }
            }
            OperatorKind::DirectSum { left, right } => match (j % 2, n % 2) {
                (1, 1) => left.entry(j.div_ceil(2), n.div_ceil(2)),
                (0, 0) => right.entry(j / 2, n / 2),
                _ => ZERO,
            },
            OperatorKind::Perturbed { base, entries } => {
                base.entry(j, n)
                    + entries
                        .iter()
                        .filter(|e| e.row == j && e.col == n)
                        .map(|e| e.value)
                        .sum::<Complex64>()
            }
        }
    }

    /// `b` with `entry(j, n) = 0` whenever `|j − n| > b`.
    pub fn band_width(&self) -> usize {
        match &self.kind {
            OperatorKind::Shift {} | OperatorKind::WeightedShift { .. } => 1,
            OperatorKind::Diagonal { .. } => 0,
            OperatorKind::ToeplitzBanded { diagonals } => diagonals
                .iter()
                .map(|d| d.offset.unsigned_abs() as usize)
                .max()
                .unwrap_or(0),
            OperatorKind::Affine { inner, .. } => inner.band_width(),
            OperatorKind::DirectSum { left, right } => 2 * left.band_width().max(right.band_width()),
            OperatorKind::Perturbed { base, entries } => entries
                .iter()
                .map(|e| e.row.abs_diff(e.col))
                .fold(base.band_width(), usize::max),
        }
    }

    /// An upper bound for `‖T‖`: the configured value, or a closed-form estimate.
    pub fn norm_bound(&self) -> f64 {
        if let Some(b) = self.norm_bound {
            return b;
        }
        match &self.kind {
            OperatorKind::Shift {} => 1.0,
            OperatorKind::WeightedShift { weights } => weights.sup_modulus(),
            OperatorKind::Diagonal { values } => values.sup_modulus(),
            OperatorKind::ToeplitzBanded { diagonals } => {
                diagonals.iter().map(|d| d.value.norm()).sum()
            }
            OperatorKind::Affine { alpha, beta, inner } => {
                alpha.norm() * inner.norm_bound() + beta.norm()
            }
            OperatorKind::DirectSum { left, right } => left.norm_bound().max(right.norm_bound()),
            OperatorKind::Perturbed { base, entries } => {
                // the Frobenius norm of the patch bounds its operator norm
                let mut cells: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
                for e in entries {
                    *cells.entry((e.row, e.col)).or_default() += e.value;
                }
                base.norm_bound() + cells.values().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
            }
        }
    }

    /// `W_e(T)`: the configured region, or the closed form for the model.
    pub fn essential_range(&self) -> Result<ConvexRegion, ModelError> {
        if let Some(r) = &self.we_region {
            return Ok(r.clone());
        }
        match &self.kind {
            OperatorKind::Shift {} => Ok(ConvexRegion::disk(ZERO, 1.0)),
            OperatorKind::WeightedShift { weights } => match weights {
                // a weighted shift with constant modulus is unitarily equivalent to |w|·S
                Sequence::Constant { value } => Ok(ConvexRegion::disk(ZERO, value.norm())),
                Sequence::Harmonic { .. } => Ok(ConvexRegion::point(ZERO)),
                _ => Err(ModelError::MissingEssentialRange),
            },
            OperatorKind::Diagonal { values } => {
                values.limit_hull().ok_or(ModelError::MissingEssentialRange)
            }
            OperatorKind::ToeplitzBanded { diagonals } => Ok(toeplitz_symbol_hull(diagonals)),
            OperatorKind::Affine { alpha, beta, inner } => {
                Ok(inner.essential_range()?.affine_image(*alpha, *beta))
            }
            OperatorKind::DirectSum { left, right } => Ok(ConvexRegion::hull_of_regions(&[
                left.essential_range()?,
                right.essential_range()?,
            ])),
            OperatorKind::Perturbed { base, .. } => base.essential_range(),
        }
    }

    /// `T x`.
    pub fn apply(&self, x: &FinVec) -> FinVec {
        self.apply_impl(x, false)
    }

    /// `T* x`.
    pub fn apply_adjoint(&self, x: &FinVec) -> FinVec {
        self.apply_impl(x, true)
    }

    fn apply_impl(&self, x: &FinVec, adjoint: bool) -> FinVec {
        let (Some(lo), Some(hi)) = (x.min_support(), x.max_support()) else {
            return FinVec::zero();
        };
        let b = self.band_width();
        let out_lo = lo.saturating_sub(b).max(1);
        let mut acc = DenseAccumulator::new(out_lo, hi + b);
        for (n, c) in x.iter() {
            for j in n.saturating_sub(b).max(1)..=n + b {
                let e = if adjoint {
                    self.entry(n, j).conj()
                } else {
                    self.entry(j, n)
                };
                if e != ZERO {
                    acc.add_at(j, e * c);
                }
            }
        }
        acc.into_finvec()
    }

    /// Dense `length × length` block `(⟨T e_{start+c}, e_{start+r}⟩)_{r,c}`.
    pub fn block(&self, start: usize, length: usize) -> Vec<Vec<Complex64>> {
        let b = self.band_width();
        let mut m = vec![vec![ZERO; length]; length];
        for (r, row) in m.iter_mut().enumerate() {
            let lo = r.saturating_sub(b);
            let hi = (r + b + 1).min(length);
            for (c, cell) in row.iter_mut().enumerate().take(hi).skip(lo) {
                *cell = self.entry(start + r, start + c);
            }
        }
        m
    }
}

impl TryFrom<serde_json::Value> for OperatorModel {
    type Error = String;

    // `flatten` cannot forward `deny_unknown_fields`, so the optional keys are split off by hand.
    fn try_from(value: serde_json::Value) -> Result<Self, Self::Error> {
        let serde_json::Value::Object(mut map) = value else {
            return Err("operator model must be a JSON object".into());
        };
        let we_region = map
            .remove("we_region")
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| format!("we_region: {e}"))?;
        let norm_bound = map
            .remove("norm_bound")
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| format!("norm_bound: {e}"))?;
        let kind = serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| e.to_string())?;
        Ok(OperatorModel {
            kind,
            we_region,
            norm_bound,
        })
    }
}

/// `⟨T u_col, u_row⟩`.
pub fn matrix_entry(t: &OperatorModel, u_col: &FinVec, u_row: &FinVec) -> Complex64 {
    t.apply(u_col).inner(u_row)
}

/// Inscribed polygon for the convex hull of the symbol `Σ a_k e^{ikθ}`.
fn toeplitz_symbol_hull(diagonals: &[ToeplitzDiagonal]) -> ConvexRegion {
    const SAMPLES: usize = 512;
    let points = (0..SAMPLES)
        .map(|s| {
            let theta = 2.0 * PI * s as f64 / SAMPLES as f64;
            diagonals
                .iter()
                .map(|d| d.value * Complex64::from_polar(1.0, d.offset as f64 * theta))
                .sum()
        })
        .collect();
    ConvexRegion::hull(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn shift_entries_and_action() {
        let s = OperatorModel::shift();
        assert_eq!(matrix_entry(&s, &FinVec::basis(1), &FinVec::basis(2)), c(1.0, 0.0));
        assert_eq!(matrix_entry(&s, &FinVec::basis(1), &FinVec::basis(1)), c(0.0, 0.0));
        assert_eq!(s.apply(&FinVec::basis(1)), FinVec::basis(2));
        assert!(s.apply_adjoint(&FinVec::basis(1)).is_zero());
        assert_eq!(s.apply_adjoint(&FinVec::basis(5)), FinVec::basis(4));
    }

    #[test]
    fn diagonal_and_weighted_shift() {
        let d = OperatorModel::diagonal(Sequence::Harmonic { scale: 1.0 });
        let e = matrix_entry(&d, &FinVec::basis(3), &FinVec::basis(3));
        assert!((e - c(1.0 / 3.0, 0.0)).norm() < 1e-16);
        let w = OperatorModel::weighted_shift(Sequence::constant(c(0.5, 0.0)));
        assert_eq!(w.apply(&FinVec::basis(3)), FinVec::basis(4).scale_real(0.5));
    }

    #[test]
    fn direct_sum_interleaves() {
        let sum = OperatorModel::new(OperatorKind::DirectSum {
            left: Box::new(OperatorModel::shift()),
            right: Box::new(OperatorModel::diagonal(Sequence::constant(c(2.0, 0.0)))),
        });
        assert_eq!(sum.band_width(), 2);
        // left e₁ ↦ e₂ sits at global 1 ↦ 3
        assert_eq!(sum.apply(&FinVec::basis(1)), FinVec::basis(3));
        assert_eq!(sum.apply(&FinVec::basis(4)), FinVec::basis(4).scale_real(2.0));
        assert_eq!(sum.norm_bound(), 2.0);
    }

    #[test]
    fn essential_ranges_from_closed_forms() {
        let shift = OperatorModel::shift().essential_range().unwrap();
        assert_eq!(shift, ConvexRegion::disk(c(0.0, 0.0), 1.0));
        let aff = OperatorModel::new(OperatorKind::Affine {
            alpha: c(2.0, 0.0),
            beta: c(0.0, 1.0),
            inner: Box::new(OperatorModel::shift()),
        });
        assert_eq!(aff.essential_range().unwrap(), ConvexRegion::disk(c(0.0, 1.0), 2.0));
        let odd = OperatorModel::weighted_shift(Sequence::Explicit {
            values: vec![c(1.0, 0.0), c(0.5, 0.0)],
        });
        assert_eq!(odd.validate(), Err(ModelError::MissingEssentialRange));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"kind":"perturbed","base":{"kind":"shift"},
            "entries":[{"row":1,"col":2,"value":[0.5,0.0]}],
            "we_region":{"kind":"disk","center":[0,0],"radius":1}}"#;
        let m: OperatorModel = serde_json::from_str(text).unwrap();
        assert_eq!(m.band_width(), 1);
        assert_eq!(m.entry(1, 2), c(0.5, 0.0));
        let back: OperatorModel =
            serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<OperatorModel>(r#"{"kind":"shift","bogus":1}"#).is_err());
    }
}

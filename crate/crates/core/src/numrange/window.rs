use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::boundary::{CMatrix, CVector};
use super::inverse::{certify, solve_in_hull, VALUE_TOLERANCE};
use super::NumRangeError;
use crate::seqspace::{FinVec, OperatorModel};

/// The compression of `T` to `span{e_start, …, e_{start+length−1}}`.
///
/// Every vector in `excluded` is supported strictly before `start`, so the window is already
/// orthogonal to it and the compression needs no further projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionWindow {
    pub start: usize,
    pub length: usize,
    #[serde(default)]
    pub excluded: Vec<FinVec>,
}

impl CompressionWindow {
    pub fn compress(&self, t: &OperatorModel) -> Result<CMatrix, NumRangeError> {
        if self.start == 0 || self.length == 0 {
            return Err(NumRangeError::InvalidInput(
                "window needs start ≥ 1 and length ≥ 1".into(),
            ));
        }
        if let Some(k) = self.excluded.iter().filter_map(FinVec::max_support).max() {
            if k >= self.start {
                return Err(NumRangeError::InvalidInput(format!(
                    "excluded vector reaches index {k}, inside the window starting at {}",
                    self.start
                )));
            }
        }
        let block = t.block(self.start, self.length);
        Ok(CMatrix::from_fn(self.length, self.length, |r, c| block[r][c]))
    }

    /// The window coordinates as a vector of ℓ²(ℕ).
    pub fn embed(&self, x: &CVector) -> FinVec {
        FinVec::from_window(self.start, x.as_slice())
    }
}

/// Growth schedule for far windows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowPolicy {
    pub initial_length: usize,
    pub max_length: usize,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self {
            initial_length: 64,
            max_length: 1 << 14,
        }
    }
}

/// First admissible window index: past every constraint, and past their images when
/// `protect_images` is set.
pub fn window_start(t: &OperatorModel, constraints: &[FinVec], protect_images: bool) -> usize {
    let horizon = constraints.iter().filter_map(FinVec::max_support).max().unwrap_or(0);
    horizon + 1 + if protect_images { t.band_width() } else { 0 }
}

/// Unit `v` with `⟨Tv, v⟩ = λ` (to 1e−11), supported in a window beyond all constraints.
///
/// Support separation makes `v ⊥ constraints` exact, and with `protect_images` also
/// `Tv, T*v ⊥ constraints`. Requires `λ` at depth at least `margin` inside `W_e(T)`; the window
/// compression is certified at depth `margin / 2`.
pub fn find_state_in_complement(
    t: &OperatorModel,
    constraints: &[FinVec],
    lambda: Complex64,
    margin: f64,
    protect_images: bool,
) -> Result<FinVec, NumRangeError> {
    find_state_in_complement_with(t, constraints, lambda, margin, protect_images, WindowPolicy::default())
        .map(|(v, _)| v)
}

/// [`find_state_in_complement`] with an explicit growth policy; also returns the window used.
pub fn find_state_in_complement_with(
    t: &OperatorModel,
    constraints: &[FinVec],
    lambda: Complex64,
    margin: f64,
    protect_images: bool,
    policy: WindowPolicy,
) -> Result<(FinVec, CompressionWindow), NumRangeError> {
    let horizon = constraints.iter().filter_map(FinVec::max_support).max().unwrap_or(0);
    let (v, window) = find_state_beyond(t, horizon, lambda, margin, protect_images, policy)?;
    Ok((
        v,
        CompressionWindow {
            excluded: constraints.to_vec(),
            ..window
        },
    ))
}

/// Same search, with the constraints summarized by their largest support index `horizon`
/// (0 when there are none). The returned window has an empty `excluded` list.
pub fn find_state_beyond(
    t: &OperatorModel,
    horizon: usize,
    lambda: Complex64,
    margin: f64,
    protect_images: bool,
    policy: WindowPolicy,
) -> Result<(FinVec, CompressionWindow), NumRangeError> {
    let region = t
        .essential_range()
        .map_err(|e| NumRangeError::Precondition(e.to_string()))?;
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(NumRangeError::InvalidInput(format!("margin must be positive, got {margin}")));
    }
    let depth = region.interior_depth(lambda);
    if depth < margin * (1.0 - 1e-12) {
        return Err(NumRangeError::Precondition(format!(
            "λ = {lambda} has depth {depth:.3e} in the essential range, below the margin {margin:.3e}"
        )));
    }
    let start = horizon + 1 + if protect_images { t.band_width() } else { 0 };
    let mut length = policy.initial_length.max(1);
    let mut last: Option<NumRangeError> = None;
    while length <= policy.max_length {
        let window = CompressionWindow {
            start,
            length,
            excluded: Vec::new(),
        };
        let m = window.compress(t)?;
        match certify(&m, lambda, 0.5 * margin).and_then(|hull| solve_in_hull(&m, &hull, lambda)) {
            Ok(x) => {
                let v = window.embed(&x);
                let err = (t.apply(&v).inner(&v) - lambda).norm();
                if err <= VALUE_TOLERANCE {
                    return Ok((v, window));
                }
                last = Some(NumRangeError::BisectionStall { error: err });
            }
            Err(e @ (NumRangeError::OutsideRange { .. } | NumRangeError::NotCertified { .. })) => {
                last = Some(e)
            }
            Err(e) => return Err(e),
        }
        length *= 2;
    }
    Err(NumRangeError::WindowCapExceeded {
        lambda,
        start,
        max_length: policy.max_length,
        last: last.map(|e| e.to_string()).unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_value_on_the_shift() {
        let s = OperatorModel::shift();
        let v = find_state_in_complement(&s, &[], c(0.0, 0.0), 0.5, false).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!(s.apply(&v).inner(&v).norm() <= 1e-11);
    }

    #[test]
    fn window_respects_constraints_and_images() {
        let s = OperatorModel::shift();
        let cons: Vec<FinVec> = (1..=10).map(FinVec::basis).collect();
        let (v, w) = find_state_in_complement_with(&s, &cons, c(0.5, 0.0), 0.4, true, WindowPolicy::default())
            .unwrap();
        assert_eq!(w.start, 12);
        assert!(v.min_support().unwrap() >= 12);
        for e in &cons {
            assert_eq!(v.inner(e), c(0.0, 0.0));
            assert_eq!(s.apply(&v).inner(e), c(0.0, 0.0));
            assert_eq!(s.apply_adjoint(&v).inner(e), c(0.0, 0.0));
        }
        assert!((s.apply(&v).inner(&v) - c(0.5, 0.0)).norm() <= 1e-11);
    }

    #[test]
    fn precondition_and_cap_failures() {
        let s = OperatorModel::shift();
        let err = find_state_in_complement(&s, &[], c(0.95, 0.0), 0.1, false).unwrap_err();
        assert!(matches!(err, NumRangeError::Precondition(_)));
        // a tiny cap cannot reach radius 0.995
        let policy = WindowPolicy {
            initial_length: 4,
            max_length: 8,
        };
        let err = find_state_in_complement_with(&s, &[], c(0.99, 0.0), 0.005, false, policy).unwrap_err();
        assert!(matches!(err, NumRangeError::WindowCapExceeded { .. }));
    }
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{defect, fresh_state, horizon_of, ForgeError};
use crate::numrange::{ConvexRegion, WindowPolicy};
use crate::seqspace::{FinVec, OperatorModel};

/// Tolerance on each of the three re-verified lower bounds.
pub const PEARCY_TOLERANCE: f64 = 1e-9;

/// A unit `u = (x + y)/√2` with a large diagonal value and two large defects.
///
/// `⟨Tx,x⟩ ≈ λ` and `⟨Ty,y⟩ ≈ μ = (λ+ν)/2` for a diameter pair `(λ, ν)`. Separated supports
/// kill every cross term, so `⟨Tu,u⟩` is the mean of the two values and each defect is at least
/// half their distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PearcyState {
    pub u: FinVec,
    pub x: FinVec,
    pub y: FinVec,
    pub lambda: Complex64,
    pub nu: Complex64,
    pub mu: Complex64,
    pub epsilon: f64,
    /// `|⟨Tu,u⟩|`.
    pub value: f64,
    /// `‖Tu − ⟨Tu,u⟩u‖`.
    pub defect: f64,
    /// `‖T*u − ⟨T*u,u⟩u‖`.
    pub defect_adjoint: f64,
}

impl PearcyState {
    /// `[|⟨Tu,u⟩|, ‖Tu − ⟨Tu,u⟩u‖, ‖T*u − ⟨T*u,u⟩u‖]`.
    pub fn triple(&self) -> [f64; 3] {
        [self.value, self.defect, self.defect_adjoint]
    }
}

/// [`PearcyState`] orthogonal to `constraints` and their images, with `|⟨Tu,u⟩| ≥ D` and both
/// defects at least `C`.
///
/// Requires `C < diam/(4√2)` and `D < diam/4`, each with slack 1e−6. `epsilon` is the allowed
/// error in the two prescribed values and defaults to 0.9 of its upper limit.
pub fn pearcy_state(
    t: &OperatorModel,
    constraints: &[FinVec],
    c: f64,
    d: f64,
    epsilon: Option<f64>,
) -> Result<PearcyState, ForgeError> {
    pearcy_beyond(t, horizon_of(constraints), c, d, epsilon, WindowPolicy::default(), 0)
}

/// `(b₁, b₂) = (|λ+μ|/2 − D, |λ−μ|/2 − C√2)`; the value error must stay below both.
fn epsilon_limits(lambda: Complex64, mu: Complex64, c: f64, d: f64) -> (f64, f64) {
    (0.5 * (lambda + mu).norm() - d, 0.5 * (lambda - mu).norm() - c * 2f64.sqrt())
}

pub(crate) fn check_constants(we: &ConvexRegion, c: f64, d: f64) -> Result<f64, ForgeError> {
    let diam = we.diameter();
    if diam <= 0.0 {
        return Err(ForgeError::Precondition {
            step: 0,
            reason: "the essential range is a single point".into(),
        });
    }
    let c_max = diam / (4.0 * 2f64.sqrt()) - 1e-6;
    let d_max = diam / 4.0 - 1e-6;
    if !(c > 0.0 && c <= c_max) {
        return Err(ForgeError::InvalidParameters(format!("C = {c} must lie in (0, {c_max:.9}]")));
    }
    if !(d > 0.0 && d <= d_max) {
        return Err(ForgeError::InvalidParameters(format!("D = {d} must lie in (0, {d_max:.9}]")));
    }
    Ok(diam)
}

/// Moves `p` toward the reference point by `dist` (or onto it when closer).
fn inward(we: &ConvexRegion, p: Complex64, dist: f64) -> Complex64 {
    let r = we.reference_point();
    let gap = (r - p).norm();
    if gap <= dist {
        r
    } else {
        p + (r - p) * (dist / gap)
    }
}

pub(crate) fn pearcy_beyond(
    t: &OperatorModel,
    horizon: usize,
    c: f64,
    d: f64,
    epsilon: Option<f64>,
    policy: WindowPolicy,
    step: usize,
) -> Result<PearcyState, ForgeError> {
    let we = t.essential_range()?;
    check_constants(&we, c, d)?;
    let (lambda, nu) = we.diameter_pair();
    let mu = 0.5 * (lambda + nu);
    let (b1, b2) = epsilon_limits(lambda, mu, c, d);
    let limit = b1.min(b2);
    let eps = epsilon.unwrap_or(0.9 * limit);
    if !(eps > 0.0 && eps < limit) {
        return Err(ForgeError::InvalidParameters(format!(
            "value error ε = {eps} must lie in (0, {limit:.9})"
        )));
    }
    let search = |h: usize, target: Complex64| {
        let margin = we.interior_depth(target);
        if margin <= 0.0 {
            return Err(ForgeError::Precondition {
                step,
                reason: format!("target {target} is not interior to the essential range"),
            });
        }
        fresh_state(t, h, target, margin, policy).map_err(|e| ForgeError::at(step, e))
    };
    let x = search(horizon, inward(&we, lambda, 0.9 * eps))?;
    let y_target = if we.interior_depth(mu) >= 0.45 * eps {
        mu
    } else {
        inward(&we, mu, 0.9 * eps)
    };
    let y = search(horizon.max(horizon_of([&x])), y_target)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let u = x.scale_real(s).axpy(Complex64::new(s, 0.0), &y);
    let tu = t.apply(&u);
    let value = tu.inner(&u).norm();
    let def = defect(&tu, &u).norm();
    let def_adj = defect(&t.apply_adjoint(&u), &u).norm();
    if value < d - PEARCY_TOLERANCE || def.min(def_adj) < c - PEARCY_TOLERANCE {
        return Err(ForgeError::Consistency {
            step,
            reason: format!(
                "state gives |⟨Tu,u⟩| = {value:.6e} (need {d}) and defects {def:.6e}, {def_adj:.6e} (need {c})"
            ),
        });
    }
    Ok(PearcyState {
        u,
        x,
        y,
        lambda,
        nu,
        mu,
        epsilon: eps,
        value,
        defect: def,
        defect_adjoint: def_adj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_limits() {
        let (l, n) = ConvexRegion::disk(Complex64::new(0.0, 0.0), 1.0).diameter_pair();
        let mu = 0.5 * (l + n);
        assert_eq!(mu, Complex64::new(0.0, 0.0));
        let (b1, b2) = epsilon_limits(l, mu, 0.35, 0.49);
        assert!((b1 - 0.01).abs() < 1e-15);
        assert!((b2 - (0.5 - 0.35 * 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn shift_state_meets_bounds() {
        let s = OperatorModel::shift();
        let cons: Vec<FinVec> = (1..=7).map(FinVec::basis).collect();
        let p = pearcy_state(&s, &cons, 0.35, 0.49, None).unwrap();
        assert!((p.u.norm() - 1.0).abs() < 1e-12);
        assert!(p.value >= 0.49 && p.defect >= 0.35 && p.defect_adjoint >= 0.35);
        for e in &cons {
            assert_eq!(p.u.inner(e), Complex64::new(0.0, 0.0));
            assert_eq!(s.apply(&p.u).inner(e), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rejects_excess_constants() {
        let s = OperatorModel::shift();
        assert!(matches!(
            pearcy_state(&s, &[], 0.36, 0.3, None),
            Err(ForgeError::InvalidParameters(_))
        ));
        assert!(matches!(
            pearcy_state(&s, &[], 0.3, 0.5, None),
            Err(ForgeError::InvalidParameters(_))
        ));
    }
}

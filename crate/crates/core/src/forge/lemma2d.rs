use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{defect, fresh_state, horizon_of, ForgeError};
use crate::numrange::WindowPolicy;
use crate::seqspace::{FinVec, OperatorModel};

/// A unit `u` with `⟨Tu,u⟩ = λ` whose defects `w, w′` admit small biorthogonal solutions.
///
/// `u = ½(x₁+x₂+x₃+x₄)` with `⟨Txᵢ,xᵢ⟩ = λ+ε, λ+iε, λ−ε, λ−iε` and mutually separated supports,
/// which forces `‖(I−P′)w‖, ‖(I−P)w′‖ ≥ ε/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma2dState {
    pub lambda: Complex64,
    pub epsilon: f64,
    pub u: FinVec,
    pub xs: Vec<FinVec>,
    /// `Tu − ⟨Tu,u⟩u`.
    pub w: FinVec,
    /// `T*u − ⟨T*u,u⟩u`.
    pub w_prime: FinVec,
    /// `(I − P′)w`, the part of `w` orthogonal to `w′`.
    pub w_perp: FinVec,
    /// `(I − P)w′`, the part of `w′` orthogonal to `w`.
    pub w_prime_perp: FinVec,
}

impl Lemma2dState {
    /// `(‖(I−P′)w‖, ‖(I−P)w′‖)`.
    pub fn separations(&self) -> (f64, f64) {
        (self.w_perp.norm(), self.w_prime_perp.norm())
    }

    /// `z ∈ span{w, w′}` with `⟨w,z⟩ = α` and `⟨w′,z⟩ = β`.
    pub fn solve(&self, alpha: Complex64, beta: Complex64) -> FinVec {
        let a = alpha.conj() / self.w_perp.norm_sqr();
        let b = beta.conj() / self.w_prime_perp.norm_sqr();
        self.w_perp.scale(a).axpy(b, &self.w_prime_perp)
    }

    /// `2(|α| + |β|)/ε`, the guaranteed bound on `‖solve(α, β)‖`.
    pub fn z_bound(&self, alpha: Complex64, beta: Complex64) -> f64 {
        2.0 * (alpha.norm() + beta.norm()) / self.epsilon
    }
}

/// [`Lemma2dState`] orthogonal to `constraints` and their images under `T` and `T*`.
///
/// Requires `λ` at depth greater than `ε` inside the essential range.
pub fn lemma2d_state(
    t: &OperatorModel,
    lambda: Complex64,
    epsilon: f64,
    constraints: &[FinVec],
) -> Result<Lemma2dState, ForgeError> {
    lemma2d_beyond(t, lambda, epsilon, horizon_of(constraints), WindowPolicy::default(), 0)
}

pub(crate) fn lemma2d_beyond(
    t: &OperatorModel,
    lambda: Complex64,
    epsilon: f64,
    horizon: usize,
    policy: WindowPolicy,
    step: usize,
) -> Result<Lemma2dState, ForgeError> {
    let we = t.essential_range()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(ForgeError::InvalidParameters(format!("ε must be positive, got {epsilon}")));
    }
    let depth = we.interior_depth(lambda);
    if depth <= epsilon {
        return Err(ForgeError::Precondition {
            step,
            reason: format!("λ = {lambda} has depth {depth:.6e}, not above ε = {epsilon}"),
        });
    }
    let offsets = [
        Complex64::new(epsilon, 0.0),
        Complex64::new(0.0, epsilon),
        Complex64::new(-epsilon, 0.0),
        Complex64::new(0.0, -epsilon),
    ];
    let mut xs: Vec<FinVec> = Vec::with_capacity(4);
    let mut h = horizon;
    for off in offsets {
        let value = lambda + off;
        let margin = we.interior_depth(value);
        let x = fresh_state(t, h, value, margin, policy).map_err(|e| ForgeError::at(step, e))?;
        h = h.max(x.max_support().unwrap_or(h));
        xs.push(x);
    }
    let mut u = FinVec::zero();
    for x in &xs {
        u = u.axpy(Complex64::new(0.5, 0.0), x);
    }
    let w = defect(&t.apply(&u), &u);
    let w_prime = defect(&t.apply_adjoint(&u), &u);
    let w_perp = project_out(&w, &w_prime);
    let w_prime_perp = project_out(&w_prime, &w);
    let state = Lemma2dState {
        lambda,
        epsilon,
        u,
        xs,
        w,
        w_prime,
        w_perp,
        w_prime_perp,
    };
    let (s1, s2) = state.separations();
    if s1.min(s2) < 0.5 * epsilon - 1e-8 {
        return Err(ForgeError::Consistency {
            step,
            reason: format!("defect separations {s1:.6e}, {s2:.6e} fall below ε/2 = {}", 0.5 * epsilon),
        });
    }
    Ok(state)
}

/// `a − (⟨a,b⟩/‖b‖²) b`.
fn project_out(a: &FinVec, b: &FinVec) -> FinVec {
    let nb = b.norm_sqr();
    if nb == 0.0 {
        a.clone()
    } else {
        a.axpy(-a.inner(b) / nb, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn shift_state_and_solver() {
        let s = OperatorModel::shift();
        let st = lemma2d_state(&s, c(0.0, 0.0), 0.2, &[]).unwrap();
        assert!((st.u.norm() - 1.0).abs() < 1e-12);
        assert!((s.apply(&st.u).inner(&st.u)).norm() <= 1e-10);
        assert!(st.solve(c(0.0, 0.0), c(0.0, 0.0)).is_zero());
        let z = st.solve(c(1.0, 0.0), c(0.0, 0.0));
        assert!((st.w.inner(&z) - c(1.0, 0.0)).norm() <= 1e-10);
        assert!(st.w_prime.inner(&z).norm() <= 1e-10);
        let z = st.solve(c(0.01, 0.0), c(0.01, 0.0));
        assert!(z.norm() <= 0.2 + 1e-10);
    }

    #[test]
    fn respects_constraints() {
        let s = OperatorModel::shift();
        let cons: Vec<FinVec> = (1..=5).map(FinVec::basis).collect();
        let st = lemma2d_state(&s, c(0.1, -0.2), 0.3, &cons).unwrap();
        let tu = s.apply(&st.u);
        let tsu = s.apply_adjoint(&st.u);
        for e in &cons {
            assert_eq!(st.u.inner(e), c(0.0, 0.0));
            assert_eq!(tu.inner(e), c(0.0, 0.0));
            assert_eq!(tsu.inner(e), c(0.0, 0.0));
        }
    }

    #[test]
    fn rejects_shallow_target() {
        let s = OperatorModel::shift();
        let err = lemma2d_state(&s, c(0.9, 0.0), 0.2, &[]).unwrap_err();
        assert!(matches!(err, ForgeError::Precondition { .. }));
    }
}

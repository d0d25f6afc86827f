use std::collections::HashMap;

use num_complex::Complex64;

use super::lemma2d::{lemma2d_beyond, Lemma2dState};
use super::state::{BuildState, FactorKind, SeedFamily, StepBranch, StepRecord};
use super::{horizon_of, unit_residual, ForgeError, Halted, MEMBERSHIP_TOLERANCE};
use crate::numrange::WindowPolicy;
use crate::seqspace::{FinVec, OperatorModel};

#[derive(Clone, Debug, PartialEq)]
pub struct TridiagParams {
    pub epsilon: f64,
    pub steps: usize,
    /// Must be orthonormal.
    pub seeds: SeedFamily,
    pub policy: WindowPolicy,
}

impl TridiagParams {
    pub fn new(epsilon: f64, steps: usize) -> Self {
        Self {
            epsilon,
            steps,
            seeds: SeedFamily::default(),
            policy: WindowPolicy::default(),
        }
    }

    /// `ε√ε/16`, the strict bound on the off-diagonal targets.
    pub fn off_diagonal_bound(&self) -> f64 {
        self.epsilon * self.epsilon.sqrt() / 16.0
    }

    /// `ε√ε/32`, the norm of every seed component `bₙ`.
    pub fn seed_component_norm(&self) -> f64 {
        self.epsilon * self.epsilon.sqrt() / 32.0
    }

    /// `1 − ε³/2¹²`, the guaranteed per-assignment decay of the seed residuals.
    pub fn decay_factor(&self) -> f64 {
        1.0 - self.epsilon.powi(3) / 4096.0
    }
}

/// Orthonormal `u₁..u_N` with `⟨Tuₙ,uₙ⟩ = λₙ`, `⟨Tuₙ,uₙ₊₁⟩ = μₙ` and `⟨Tuₙ₊₁,uₙ⟩ = νₙ`.
///
/// `lambdas[i]`, `mus[i]`, `nus[i]` hold the values at `n = i + 1`. Each `uₙ = sₙvₙ + zₙ + bₙ`
/// where `vₙ` is a [`Lemma2dState`] at the corrected target `λ′ₙ`, `bₙ` is a short multiple of the
/// residual of an admissible seed and `zₙ` solves the previous state's defect system.
pub fn build_tridiagonal(
    t: &OperatorModel,
    lambdas: &[Complex64],
    mus: &[Complex64],
    nus: &[Complex64],
    params: &TridiagParams,
) -> Result<BuildState, Halted> {
    let mut state = BuildState::new(params.seeds.clone());
    if let Err(e) = validate(t, lambdas, mus, nus, params) {
        return Err(Halted::new(e, state));
    }
    let mut builder = Builder {
        t,
        params,
        counts: HashMap::new(),
        horizon: 0,
        prev: None,
    };
    for n in 1..=params.steps {
        let step = if n == 1 {
            builder.first(lambdas[0])
        } else {
            builder.next(&mut state, n, lambdas[n - 1], mus[n - 2], nus[n - 2])
        };
        match step {
            Ok((u, rec)) => {
                builder.horizon = builder.horizon.max(u.max_support().unwrap_or(0));
                if let Some(lem) = &builder.prev {
                    state.aux.v = Some(lem.u.clone());
                    state.aux.w = Some(lem.w.clone());
                    state.aux.w_prime = Some(lem.w_prime.clone());
                }
                state.push(u, rec);
            }
            Err(e) => return Err(Halted::new(e, state)),
        }
    }
    Ok(state)
}

fn validate(
    t: &OperatorModel,
    lambdas: &[Complex64],
    mus: &[Complex64],
    nus: &[Complex64],
    params: &TridiagParams,
) -> Result<(), ForgeError> {
    t.validate()?;
    params.seeds.validate()?;
    let invalid = |s: String| Err(ForgeError::InvalidParameters(s));
    let n = params.steps;
    if n == 0 {
        return invalid("steps must be positive".into());
    }
    let eps = params.epsilon;
    if !(eps > 0.0 && eps.is_finite()) {
        return invalid(format!("ε must be positive, got {eps}"));
    }
    if t.norm_bound() > 1.0 + 1e-12 {
        return invalid(format!("requires ‖T‖ ≤ 1, the model bound is {}", t.norm_bound()));
    }
    if lambdas.len() < n || mus.len() + 1 < n || nus.len() + 1 < n {
        return invalid("fewer prescribed values than steps".into());
    }
    let we = t.essential_range()?;
    for (i, l) in lambdas[..n].iter().enumerate() {
        let d = we.interior_depth(*l);
        if d <= 2.0 * eps {
            return invalid(format!("λ_{} = {l} has depth {d:.6e}, not above 2ε", i + 1));
        }
    }
    let bound = params.off_diagonal_bound();
    for (i, (m, v)) in mus.iter().zip(nus).take(n.saturating_sub(1)).enumerate() {
        if m.norm() >= bound || v.norm() >= bound {
            return invalid(format!(
                "|μ_{0}| = {1:.6e} or |ν_{0}| = {2:.6e} is not below ε√ε/16 = {bound:.6e}",
                i + 1,
                m.norm(),
                v.norm()
            ));
        }
    }
    Ok(())
}

struct Builder<'a> {
    t: &'a OperatorModel,
    params: &'a TridiagParams,
    /// `card{k ≥ 2 : m(k) = m}` over completed steps.
    counts: HashMap<usize, usize>,
    horizon: usize,
    prev: Option<Lemma2dState>,
}

impl Builder<'_> {
    fn first(&mut self, lambda: Complex64) -> Result<(FinVec, StepRecord), ForgeError> {
        let lem = lemma2d_beyond(self.t, lambda, self.params.epsilon, 0, self.params.policy, 1)?;
        let u = lem.u.clone();
        let mut rec = StepRecord::new(1, StepBranch::Fresh, self.t.apply(&u).inner(&u));
        rec.target = Some(lambda);
        rec.lambda_prime = Some(lambda);
        rec.scale = Some(1.0);
        self.prev = Some(lem);
        Ok((u, rec))
    }

    fn next(
        &mut self,
        state: &mut BuildState,
        n: usize,
        lambda: Complex64,
        mu_prev: Complex64,
        nu_prev: Complex64,
    ) -> Result<(FinVec, StepRecord), ForgeError> {
        let t = self.t;
        let eps = self.params.epsilon;
        let (m, r) = self.admissible_seed(state, n)?;
        let before = r.norm_sqr();
        state.ledger.track(m, n - 1, before);
        let b = unit_residual(&state.us, &r).scale_real(self.params.seed_component_norm());

        let u_prev = state.us.vectors.last().expect("step ≥ 2 has a predecessor");
        let s_prev = state.records.last().and_then(|r| r.scale).unwrap_or(1.0);
        let alpha = (mu_prev - t.apply(u_prev).inner(&b)) / s_prev;
        let beta = (nu_prev.conj() - t.apply_adjoint(u_prev).inner(&b)) / s_prev;
        let prev = self.prev.as_ref().expect("previous lemma state");
        let z = prev.solve(alpha, beta);
        let z_bound = prev.z_bound(alpha, beta);
        let z_norm = z.norm();
        if z_norm > 0.5 * eps.sqrt() + 1e-10 {
            return Err(ForgeError::Consistency {
                step: n,
                reason: format!("‖z‖ = {z_norm:.6e} exceeds √ε/2"),
            });
        }

        let zb = z.add(&b);
        let q = zb.norm_sqr();
        let lambda_prime = (lambda - t.apply(&zb).inner(&zb)) / (1.0 - q);
        if (lambda_prime - lambda).norm() > eps + 1e-10 {
            return Err(ForgeError::Consistency {
                step: n,
                reason: format!("|λ′ − λ| = {:.6e} exceeds ε", (lambda_prime - lambda).norm()),
            });
        }
        let scale = (1.0 - q).sqrt();
        if scale < 0.8 {
            return Err(ForgeError::Consistency {
                step: n,
                reason: format!("√(1 − ‖z+b‖²) = {scale:.6e} is below 4/5"),
            });
        }
        // v and its images stay clear of z, b and their images
        let y = state.seeds.fetch(n, m)?;
        let images = [t.apply(&z), t.apply_adjoint(&z), t.apply(&b), t.apply_adjoint(&b)];
        let horizon = self
            .horizon
            .max(horizon_of([&y, &z, &b]))
            .max(horizon_of(images.iter()));
        let lem = lemma2d_beyond(t, lambda_prime, eps, horizon, self.params.policy, n)?;
        let u = lem.u.scale_real(scale).add(&zb);
        let after = r.axpy(-r.inner(&u), &u).norm_sqr();

        let mut rec = StepRecord::new(n, StepBranch::Mixed, t.apply(&u).inner(&u));
        rec.m = Some(m);
        rec.target = Some(lambda);
        rec.z_norm = Some(z_norm);
        rec.z_bound = Some(z_bound);
        rec.b_norm = Some(b.norm());
        rec.lambda_prime = Some(lambda_prime);
        rec.scale = Some(scale);
        rec.seed_before = Some(before);
        rec.seed_after = Some(after);
        rec.factor = Some(self.params.decay_factor());
        rec.factor_kind = Some(FactorKind::UpperBound);
        *self.counts.entry(m).or_insert(0) += 1;
        state.aux.z = Some(z);
        state.aux.b = Some(b);
        self.prev = Some(lem);
        Ok((u, rec))
    }

    /// `m(n)`: the admissible seed minimizing `m + card{k : m(k) = m}`, smallest `m` on ties,
    /// together with its residual.
    fn admissible_seed(&self, state: &BuildState, n: usize) -> Result<(usize, FinVec), ForgeError> {
        let t = self.t;
        let u_prev = state.us.vectors.last().expect("step ≥ 2 has a predecessor");
        let basis = orthonormalize(&[u_prev.clone(), t.apply(u_prev), t.apply_adjoint(u_prev)]);
        let ratio = self.params.epsilon / 32.0;
        // past this index a standard seed is untouched by everything built so far
        let free = self.horizon + t.band_width() + 1;
        let limit = state.seeds.available().unwrap_or(usize::MAX).min(free.max(1));
        let count = |m: usize| self.counts.get(&m).copied().unwrap_or(0);
        let mut score = 1usize;
        loop {
            for m in 1..=score.min(limit) {
                if m + count(m) != score {
                    continue;
                }
                let r = state.seed_residual(n, m)?;
                let rn = r.norm();
                if rn <= MEMBERSHIP_TOLERANCE {
                    continue;
                }
                let proj: f64 = basis.iter().map(|q| r.inner(q).norm_sqr()).sum::<f64>().sqrt();
                if proj <= rn * ratio {
                    return Ok((m, r));
                }
            }
            if score >= limit + self.counts.values().copied().max().unwrap_or(0) {
                return Err(ForgeError::NoAdmissibleSeed { step: n, examined: limit });
            }
            score += 1;
        }
    }
}

/// Orthonormal basis of the span, dropping numerically dependent vectors.
fn orthonormalize(vs: &[FinVec]) -> Vec<FinVec> {
    let mut out: Vec<FinVec> = Vec::with_capacity(vs.len());
    for v in vs {
        let scale = v.norm();
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &out {
                r = r.axpy(-r.inner(q), q);
            }
        }
        let rn = r.norm();
        if rn > 1e-10 * scale.max(1e-300) {
            out.push(r.scale_real(1.0 / rn));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constants_at_epsilon_02() {
        let p = TridiagParams::new(0.2, 1);
        assert!((p.off_diagonal_bound() - 5.590_169_943_749_474e-3).abs() < 1e-15);
        assert!((p.seed_component_norm() - 2.795_084_971_874_737e-3).abs() < 1e-15);
    }

    #[test]
    fn short_run_hits_three_diagonals() {
        let s = OperatorModel::shift();
        let n = 8;
        let lambdas: Vec<Complex64> = (0..n).map(|i| c(0.3 * (i as f64).cos(), 0.2)).collect();
        let mus = vec![c(0.004, 0.0); n];
        let nus = vec![c(0.0, -0.003); n];
        let st = build_tridiagonal(&s, &lambdas, &mus, &nus, &TridiagParams::new(0.2, n)).unwrap();
        assert!(st.us.gram_error() <= 1e-10);
        let u = &st.us.vectors;
        for i in 0..n {
            assert!((s.apply(&u[i]).inner(&u[i]) - lambdas[i]).norm() <= 1e-9);
            if i + 1 < n {
                assert!((s.apply(&u[i]).inner(&u[i + 1]) - mus[i]).norm() <= 1e-9);
                assert!((s.apply(&u[i + 1]).inner(&u[i]) - nus[i]).norm() <= 1e-9);
            }
        }
        for rec in &st.records[1..] {
            assert!(rec.z_norm.unwrap() <= 0.2f64.sqrt() / 2.0 + 1e-10);
            assert!((rec.b_norm.unwrap() - 0.2 * 0.2f64.sqrt() / 32.0).abs() <= 1e-12);
            assert!(rec.seed_after.unwrap() <= rec.seed_before.unwrap() * rec.factor.unwrap() + 1e-12);
        }
    }

    #[test]
    fn rejects_large_off_diagonal() {
        let s = OperatorModel::shift();
        let err = build_tridiagonal(&s, &[c(0.0, 0.0); 3], &[c(0.006, 0.0); 3], &[c(0.0, 0.0); 3], &TridiagParams::new(0.2, 3))
            .unwrap_err();
        assert!(matches!(err.error, ForgeError::InvalidParameters(_)));
    }
}

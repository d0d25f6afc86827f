use num_complex::Complex64;

use super::partition::{select_residue_class, PartitionScheme};
use super::state::{BuildState, FactorKind, SeedFamily, StepBranch, StepRecord};
use super::{fresh_state, horizon_of, unit_residual, ForgeError, Halted, MEMBERSHIP_TOLERANCE};
use crate::numrange::WindowPolicy;
use crate::seqspace::OperatorModel;

#[derive(Clone, Debug, PartialEq)]
pub struct BandParams {
    /// Half-width `K` of the zero band around the diagonal.
    pub k: usize,
    pub steps: usize,
    pub seeds: SeedFamily,
    pub policy: WindowPolicy,
}

impl BandParams {
    pub fn new(k: usize, steps: usize) -> Self {
        Self {
            k,
            steps,
            seeds: SeedFamily::default(),
            policy: WindowPolicy::default(),
        }
    }
}

/// `(μ, ρ)` with `ρ = |⟨Tb,b⟩ − λ|` and `μ` the point at distance `δ` from `λ` opposite to
/// `⟨Tb,b⟩`, so that `(ρμ + δ⟨Tb,b⟩)/(ρ + δ) = λ`. When `ρ = 0`, `μ = λ`.
pub fn reflected_target(lambda: Complex64, delta: f64, tbb: Complex64) -> (Complex64, f64) {
    let rho = (tbb - lambda).norm();
    if rho == 0.0 {
        (lambda, 0.0)
    } else {
        (lambda - (tbb - lambda) * (delta / rho), rho)
    }
}

/// Orthonormal `u₁..u_N` with `⟨Tuₙ,uₙ⟩ = λₙ` and `⟨Tuₙ,uⱼ⟩ = 0` for `1 ≤ |n−j| ≤ K`.
///
/// `lambdas[i]` is `λ_{i+1}`. Steps in the selected residue class `B_{r₀}` mix in the residual of
/// the seed `y_{m(n)}`; the other steps are fresh far states kept orthogonal to the seed that the
/// next class step will use.
pub fn build_banded_diagonal(
    t: &OperatorModel,
    lambdas: &[Complex64],
    params: &BandParams,
) -> Result<BuildState, Halted> {
    let mut state = BuildState::new(params.seeds.clone());
    let fail = |e: ForgeError, s: BuildState| Halted::new(e, s);
    if let Err(e) = validate(t, lambdas, params) {
        return Err(fail(e, state));
    }
    let we = match t.essential_range() {
        Ok(r) => r,
        Err(e) => return Err(fail(e.into(), state)),
    };
    let n_steps = params.steps;
    let modulus = params.k + 1;
    let r0 = select_residue_class(&lambdas[..n_steps], &we, params.k);
    let in_class = |n: usize| n % modulus == r0;
    let partition = PartitionScheme::greedy_blocks(
        (1..=n_steps)
            .filter(|&n| in_class(n))
            .map(|n| (n, we.interior_depth(lambdas[n - 1]))),
        1.0,
    );
    let mut horizon = 0usize;
    for n in 1..=n_steps {
        let lambda = lambdas[n - 1];
        let dist = we.interior_depth(lambda);
        if dist <= 0.0 {
            let e = ForgeError::Precondition {
                step: n,
                reason: format!("λ_{n} = {lambda} is not interior to the essential range"),
            };
            return Err(fail(e, state));
        }
        let step = if in_class(n) {
            class_step(t, &mut state, &partition, n, lambda, dist, horizon, params.policy)
        } else {
            // keep clear of the seed that the next class step mixes in
            let next = n + (r0 + modulus - n % modulus) % modulus;
            let seed_horizon = match partition.m(next) {
                Some(m) if next <= n_steps => state.seeds.fetch(n, m).map(|y| horizon_of([&y])),
                _ => Ok(0),
            };
            seed_horizon.and_then(|h| {
                let v = fresh_state(t, horizon.max(h), lambda, dist, params.policy)
                    .map_err(|e| ForgeError::at(n, e))?;
                let mut rec = StepRecord::new(n, StepBranch::Fresh, t.apply(&v).inner(&v));
                rec.target = Some(lambda);
                state.aux.v = Some(v.clone());
                Ok((v, rec))
            })
        };
        match step {
            Ok((u, rec)) => {
                horizon = horizon.max(u.max_support().unwrap_or(0));
                state.push(u, rec);
            }
            Err(e) => return Err(fail(e, state)),
        }
    }
    Ok(state)
}

fn validate(t: &OperatorModel, lambdas: &[Complex64], params: &BandParams) -> Result<(), ForgeError> {
    t.validate()?;
    params.seeds.validate()?;
    if params.steps == 0 {
        return Err(ForgeError::InvalidParameters("steps must be positive".into()));
    }
    if lambdas.len() < params.steps {
        return Err(ForgeError::InvalidParameters(format!(
            "{} diagonal values supplied for {} steps",
            lambdas.len(),
            params.steps
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn class_step(
    t: &OperatorModel,
    state: &mut BuildState,
    partition: &PartitionScheme,
    n: usize,
    lambda: Complex64,
    dist: f64,
    horizon: usize,
    policy: WindowPolicy,
) -> Result<(crate::seqspace::FinVec, StepRecord), ForgeError> {
    let m = partition
        .m(n)
        .ok_or_else(|| ForgeError::Consistency {
            step: n,
            reason: "class step without a partition class".into(),
        })?;
    let y = state.seeds.fetch(n, m)?;
    let r = state.us.residual(&y);
    let before = r.norm_sqr();
    state.ledger.track(m, n - 1, before);
    let horizon = horizon.max(horizon_of([&y]));
    if before.sqrt() <= MEMBERSHIP_TOLERANCE {
        let v = fresh_state(t, horizon, lambda, dist, policy).map_err(|e| ForgeError::at(n, e))?;
        let mut rec = StepRecord::new(n, StepBranch::SeedInSpan, t.apply(&v).inner(&v));
        rec.m = Some(m);
        rec.target = Some(lambda);
        rec.seed_before = Some(before);
        state.aux.v = Some(v.clone());
        return Ok((v, rec));
    }
    let b = unit_residual(&state.us, &r);
    let tbb = t.apply(&b).inner(&b);
    let delta = 0.5 * dist;
    let (mu, rho) = reflected_target(lambda, delta, tbb);
    // μ sits at depth at least dist − δ = δ
    let v = fresh_state(t, horizon, mu, delta, policy).map_err(|e| ForgeError::at(n, e))?;
    let alpha = (rho / (rho + delta)).sqrt();
    let beta = (delta / (rho + delta)).sqrt();
    let u = v.scale_real(alpha).axpy(Complex64::new(beta, 0.0), &b);
    let after = r.axpy(-r.inner(&u), &u).norm_sqr();
    let mut rec = StepRecord::new(n, StepBranch::Mixed, t.apply(&u).inner(&u));
    rec.m = Some(m);
    rec.target = Some(lambda);
    rec.rho = Some(rho);
    rec.delta = Some(delta);
    rec.mu = Some(mu);
    rec.seed_before = Some(before);
    rec.seed_after = Some(after);
    rec.factor = Some(1.0 - delta / (rho + delta));
    rec.factor_kind = Some(FactorKind::Equality);
    state.aux.v = Some(v);
    state.aux.b = Some(b);
    Ok((u, rec))
}

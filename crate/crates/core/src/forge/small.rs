use num_complex::Complex64;

use super::partition::{sparsify_weights, PartitionScheme, Sparsified};
use super::state::{BuildState, FactorKind, SeedFamily, StepBranch, StepRecord};
use super::{fresh_state, horizon_of, unit_residual, ForgeError, Halted, MEMBERSHIP_TOLERANCE};
use crate::numrange::{ConvexRegion, WindowPolicy};
use crate::seqspace::OperatorModel;

#[derive(Clone, Debug, PartialEq)]
pub struct SmallParams {
    pub steps: usize,
    pub seeds: SeedFamily,
    pub policy: WindowPolicy,
}

impl SmallParams {
    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            seeds: SeedFamily::default(),
            policy: WindowPolicy::default(),
        }
    }
}

/// `d(n)` evaluated on the prefix: the least `r ∈ [n, H]` with `a′ₖ/aₖ < aₙ` for every
/// `k ∈ [r, H]`, where `H = a_prime.len()`. `None` when even `k = H` fails.
pub fn horizon_d(n: usize, a: &[f64], a_prime: &[f64]) -> Option<usize> {
    let h = a_prime.len().min(a.len());
    if n == 0 || n > h {
        return None;
    }
    let an = a[n - 1];
    let mut r = None;
    for k in (n..=h).rev() {
        if a_prime[k - 1] / a[k - 1] < an {
            r = Some(k);
        } else {
            break;
        }
    }
    r
}

/// Orthonormal `u₁..u_N` with `|⟨Tuₙ,uⱼ⟩| ≤ ‖T‖'·√(aₙaⱼ)` on the whole grid, `‖T‖' = max{1, ‖T‖}`.
///
/// `a[i]` is `a_{i+1}`. Each step takes a fresh state with small value and, unless its seed is
/// already in the span, tilts it toward the seed residual by `cₙ = √a′ₙ/2`.
///
/// Fresh states stay orthogonal to the seeds `y₁..y_N` and their images. Pairs inside the
/// prefix only need that up to `min{d(n), N}`, so this covers `d(n)` even when `d(n)` lies far
/// past the prefix.
pub fn build_small_entries(t: &OperatorModel, a: &[f64], params: &SmallParams) -> Result<BuildState, Halted> {
    let mut state = BuildState::new(params.seeds.clone());
    let prepared = match prepare(t, a, params) {
        Ok(p) => p,
        Err(e) => return Err(Halted::new(e, state)),
    };
    let Prepared {
        we,
        scale,
        sparse,
        partition,
        seed_horizon,
    } = prepared;
    let n_steps = params.steps;
    let mut horizon = 0usize;
    for n in 1..=n_steps {
        match step(t, &mut state, &we, scale, a, &sparse, &partition, n, horizon.max(seed_horizon), params) {
            Ok((u, rec)) => {
                horizon = horizon.max(u.max_support().unwrap_or(0));
                state.push(u, rec);
            }
            Err(e) => return Err(Halted::new(e, state)),
        }
    }
    Ok(state)
}

struct Prepared {
    we: ConvexRegion,
    scale: f64,
    sparse: Sparsified,
    partition: PartitionScheme,
    seed_horizon: usize,
}

fn prepare(t: &OperatorModel, a: &[f64], params: &SmallParams) -> Result<Prepared, ForgeError> {
    t.validate()?;
    params.seeds.validate()?;
    let n = params.steps;
    if n == 0 {
        return Err(ForgeError::InvalidParameters("steps must be positive".into()));
    }
    if a.len() < n {
        return Err(ForgeError::InvalidParameters(format!("{} weights supplied for {n} steps", a.len())));
    }
    let we = t.essential_range()?;
    if !we.contains(Complex64::new(0.0, 0.0), 1e-12) {
        return Err(ForgeError::Precondition {
            step: 1,
            reason: "0 is not in the essential numerical range".into(),
        });
    }
    let sparse = sparsify_weights(&a[..n])?;
    let partition = PartitionScheme::greedy_blocks(sparse.values.iter().enumerate().map(|(i, &w)| (i + 1, w)), 1.0);
    let mut seed_horizon = 0;
    for k in 1..=n {
        match params.seeds.get(k) {
            Some(y) => seed_horizon = seed_horizon.max(horizon_of([&y])),
            None => break,
        }
    }
    Ok(Prepared {
        we,
        scale: t.norm_bound().max(1.0),
        sparse,
        partition,
        seed_horizon,
    })
}

/// Target with `|λ| < tol` inside the essential range, and its depth.
fn small_target(we: &ConvexRegion, tol: f64) -> (Complex64, f64) {
    let zero = Complex64::new(0.0, 0.0);
    let d0 = we.interior_depth(zero);
    if d0 > 0.0 {
        return (zero, d0);
    }
    let r = we.reference_point();
    let len = r.norm();
    let target = if len <= 0.5 * tol { r } else { r * (0.5 * tol / len) };
    (target, we.interior_depth(target))
}

#[allow(clippy::too_many_arguments)]
fn step(
    t: &OperatorModel,
    state: &mut BuildState,
    we: &ConvexRegion,
    scale: f64,
    a: &[f64],
    sparse: &Sparsified,
    partition: &PartitionScheme,
    n: usize,
    horizon: usize,
    params: &SmallParams,
) -> Result<(crate::seqspace::FinVec, StepRecord), ForgeError> {
    let a_prime = sparse.values[n - 1];
    let c = 0.5 * a_prime.sqrt();
    let (target, depth) = small_target(we, scale * a_prime / 2.0);
    if depth <= 0.0 {
        return Err(ForgeError::Precondition {
            step: n,
            reason: "the essential range has no interior point of modulus below a′ₙ/2".into(),
        });
    }
    let v = fresh_state(t, horizon, target, depth, params.policy).map_err(|e| ForgeError::at(n, e))?;
    let m = partition.m(n).ok_or_else(|| ForgeError::Consistency {
        step: n,
        reason: "step without a partition class".into(),
    })?;
    let r = state.seed_residual(n, m)?;
    let before = r.norm_sqr();
    state.ledger.track(m, n - 1, before);
    let (u, branch) = if before.sqrt() <= MEMBERSHIP_TOLERANCE {
        (v.clone(), StepBranch::SeedInSpan)
    } else {
        let w = unit_residual(&state.us, &r);
        let u = v.scale_real((1.0 - c * c).sqrt()).axpy(Complex64::new(c, 0.0), &w);
        (u, StepBranch::Mixed)
    };
    let mut rec = StepRecord::new(n, branch, t.apply(&u).inner(&u));
    rec.m = Some(m);
    rec.c = Some(c);
    rec.a_prime = Some(a_prime);
    rec.d = horizon_d(n, &a[..params.steps], &sparse.values);
    rec.orthogonal_through = Some(params.steps);
    rec.seed_before = Some(before);
    if branch == StepBranch::Mixed {
        rec.seed_after = Some(r.axpy(-r.inner(&u), &u).norm_sqr());
        rec.factor = Some(1.0 - a_prime / 4.0);
        rec.factor_kind = Some(FactorKind::Equality);
    }
    state.aux.v = Some(v);
    Ok((u, rec))
}

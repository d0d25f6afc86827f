use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::pearcy::{check_constants, pearcy_beyond};
use super::state::{BuildState, FactorKind, PlankAudit, SeedFamily, StepBranch, StepRecord};
use super::{horizon_of, ForgeError, Halted};
use crate::numrange::{plank_coordinates, CVector, NumRangeError, WindowPolicy};
use crate::seqspace::{mix_seed, DenseAccumulator, FinVec, OperatorModel};

/// Slack on every re-verified plank inequality, relative to unit targets.
const PLANK_AUDIT_SLACK: f64 = 1e-9;
/// Relative eigenvalue cutoff for the span of the plank targets.
const EIGEN_CUTOFF: f64 = 1e-12;
/// Targets with squared norm below this are treated as zero and carry no plank condition.
const ZERO_TARGET: f64 = 1e-24;

/// The constants derived from `(C, D)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LargeConstants {
    pub c: f64,
    pub d_in: f64,
    /// Lower bound on every diagonal entry, `D/2`.
    pub d: f64,
    /// Smallest `a ≥ 1` with `4/a ≤ D` and `54/√a ≤ C²`.
    pub a: f64,
    /// `C/(3√a)`.
    pub c1: f64,
    /// `1/√a`.
    pub c2: f64,
}

impl LargeConstants {
    pub fn derive(c: f64, d: f64) -> Self {
        let a = 1f64.max(4.0 / d).max((54.0 / (c * c)).powi(2));
        Self {
            c,
            d_in: d,
            d: 0.5 * d,
            a,
            c1: c / (3.0 * a.sqrt()),
            c2: 1.0 / a.sqrt(),
        }
    }

    /// `c₁·min{n,j}^{1/2}/max{n,j}^{3/2}`.
    pub fn lower(&self, n: usize, j: usize) -> f64 {
        let (lo, hi) = (n.min(j) as f64, n.max(j) as f64);
        self.c1 * lo.sqrt() / hi.powf(1.5)
    }

    /// `c₂/max{n,j}^{1/2}`.
    pub fn upper(&self, n: usize, j: usize) -> f64 {
        self.c2 / (n.max(j) as f64).sqrt()
    }

    /// `C²j/(2k)`, the floor on `‖(I−P_k)Tuⱼ‖²` and `‖(I−P_k)T*uⱼ‖²`.
    pub fn residual_floor(&self, j: usize, k: usize) -> f64 {
        self.c * self.c * j as f64 / (2.0 * k as f64)
    }

    /// `1 − 1/(2an)`.
    pub fn decay_factor(&self, n: usize) -> f64 {
        1.0 - 1.0 / (2.0 * self.a * n as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LargeParams {
    pub c: f64,
    pub d: f64,
    pub steps: usize,
    /// Allowed value error of each large-entry state; `None` picks the default.
    pub epsilon: Option<f64>,
    pub seeds: SeedFamily,
    pub policy: WindowPolicy,
    /// Drives the plank solver restarts.
    pub seed: u64,
}

impl LargeParams {
    pub fn new(c: f64, d: f64, steps: usize) -> Self {
        Self {
            c,
            d,
            steps,
            epsilon: None,
            seeds: SeedFamily::default(),
            policy: WindowPolicy::default(),
            seed: 0,
        }
    }

    pub fn constants(&self) -> LargeConstants {
        LargeConstants::derive(self.c, self.d)
    }
}

/// Seed class of step `n`: `n = 2^{m−1}(2k − 1)`, so classes are numbered from 1 and step `n`
/// works on `y_m`.
pub fn large_class(n: usize) -> usize {
    super::partition::dyadic_class(n) + 1
}

/// Orthonormal `u₁..u_N` with `|⟨Tuₙ,uₙ⟩| ≥ D/2` and every off-diagonal entry between
/// `c₁ min^{1/2}/max^{3/2}` and `c₂/max^{1/2}`.
///
/// Step `n` mixes a large-entry state `vₙ` with a unit `zₙ` that has a fixed share of every
/// residual `(I−P)Tuⱼ`, `(I−P)T*uⱼ` and of the seed residual, found by the plank solver.
/// Requires `‖T‖ ≤ 1`.
pub fn build_large_entries(t: &OperatorModel, params: &LargeParams) -> Result<BuildState, Halted> {
    let mut state = BuildState::new(params.seeds.clone());
    if let Err(e) = validate(t, params) {
        return Err(Halted::new(e, state));
    }
    let k = params.constants();
    let mut targets = Targets::default();
    let mut horizon = 0usize;
    for n in 1..=params.steps {
        match step(t, &mut state, &targets, &k, n, horizon, params) {
            Ok((u, rec)) => {
                horizon = horizon.max(u.max_support().unwrap_or(0));
                targets.project_out(&u);
                let tu = t.apply(&u);
                let tsu = t.apply_adjoint(&u);
                state.push(u, rec);
                targets.append(state.us.residual(&tu));
                targets.append(state.us.residual(&tsu));
            }
            Err(e) => return Err(Halted::new(e, state)),
        }
    }
    Ok(state)
}

fn validate(t: &OperatorModel, params: &LargeParams) -> Result<(), ForgeError> {
    t.validate()?;
    params.seeds.validate()?;
    if params.steps == 0 {
        return Err(ForgeError::InvalidParameters("steps must be positive".into()));
    }
    if t.norm_bound() > 1.0 + 1e-12 {
        return Err(ForgeError::Precondition {
            step: 0,
            reason: format!("‖T‖ ≤ {} exceeds 1; normalize the operator first", t.norm_bound()),
        });
    }
    check_constants(&t.essential_range()?, params.c, params.d)?;
    if let Some(avail) = params.seeds.available() {
        let need = large_class(1 << (usize::BITS - 1 - params.steps.leading_zeros()));
        if avail < need {
            return Err(ForgeError::InvalidParameters(format!(
                "{need} seeds needed for {} steps, {avail} supplied",
                params.steps
            )));
        }
    }
    Ok(())
}

/// Residual targets `(I−P)Tuⱼ` at even slots and `(I−P)T*uⱼ` at odd slots, with their Gram
/// matrix `h[i][j] = ⟨tⱼ, tᵢ⟩` kept in step with the family.
#[derive(Default)]
struct Targets {
    vecs: Vec<FinVec>,
    h: Vec<Vec<Complex64>>,
}

impl Targets {
    fn append(&mut self, x: FinVec) {
        for (i, t) in self.vecs.iter().enumerate() {
            self.h[i].push(x.inner(t));
        }
        let mut row: Vec<Complex64> = self.vecs.iter().map(|t| t.inner(&x)).collect();
        row.push(Complex64::new(x.norm_sqr(), 0.0));
        self.h.push(row);
        self.vecs.push(x);
    }

    /// `tᵢ ← tᵢ − ⟨tᵢ,u⟩u` for unit `u`; then `⟨tⱼ,tᵢ⟩` drops by `cⱼ·conj(cᵢ)`.
    fn project_out(&mut self, u: &FinVec) {
        let cs: Vec<Complex64> = self.vecs.iter().map(|t| t.inner(u)).collect();
        for (t, c) in self.vecs.iter_mut().zip(&cs) {
            if c.norm() > 0.0 {
                *t = t.axpy(-c, u);
            }
        }
        for (i, ci) in cs.iter().enumerate() {
            for (j, cj) in cs.iter().enumerate() {
                self.h[i][j] -= cj * ci.conj();
            }
        }
    }

    fn recompute(&mut self) {
        let vecs = std::mem::take(&mut self.vecs);
        self.h.clear();
        for v in vecs {
            self.append(v);
        }
    }
}

/// Unit `z` in the span of `vecs` with `|⟨z, vecᵢ⟩| ≥ wᵢ‖vecᵢ‖`, verified directly.
///
/// Works in the eigen-coordinates of the normalized Gram matrix `A = QΛQᴴ`: the vectors
/// `e_k = Σⱼ t̂ⱼ Q_{jk}/√Λ_k` are orthonormal and `⟨t̂ᵢ, e_k⟩ = conj(Q_{ik})√Λ_k`.
fn plank_step(
    vecs: &[&FinVec],
    h: &DMatrix<Complex64>,
    weights: &[f64],
    seed: u64,
) -> Result<(FinVec, f64, Vec<f64>), NumRangeError> {
    let norms: Vec<f64> = (0..vecs.len()).map(|i| h[(i, i)].re.max(0.0).sqrt()).collect();
    let live: Vec<usize> = (0..vecs.len()).filter(|&i| norms[i] * norms[i] > ZERO_TARGET).collect();
    if live.is_empty() {
        return Err(NumRangeError::InvalidInput("every plank target vanishes".into()));
    }
    let dim = live.len();
    let a = DMatrix::from_fn(dim, dim, |r, c| {
        let (i, j) = (live[r], live[c]);
        h[(i, j)] / (norms[i] * norms[j])
    });
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 10_000 * dim)
        .ok_or(NumRangeError::EigenFailure { theta: 0.0 })?;
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..dim).filter(|&k| eig.eigenvalues[k] > EIGEN_CUTOFF * lmax).collect();
    let q = &eig.eigenvectors;
    let rows: Vec<CVector> = (0..dim)
        .map(|r| {
            DVector::from_iterator(
                keep.len(),
                keep.iter().map(|&k| q[(r, k)].conj() * eig.eigenvalues[k].sqrt()),
            )
        })
        .collect();
    let w: Vec<f64> = live.iter().map(|&i| weights[i]).collect();
    let zeta = plank_coordinates(&rows, &w, seed)?;
    let (lo, hi) = vecs
        .iter()
        .filter_map(|v| Some((v.min_support()?, v.max_support()?)))
        .fold((usize::MAX, 0), |(a, b), (c, d)| (a.min(c), b.max(d)));
    let mut acc = DenseAccumulator::new(lo, hi);
    for (r, &i) in live.iter().enumerate() {
        let gamma: Complex64 = keep
            .iter()
            .enumerate()
            .map(|(kk, &k)| q[(r, k)] * zeta[kk] / eig.eigenvalues[k].sqrt())
            .sum();
        acc.axpy(gamma / norms[i], vecs[i]);
    }
    let z = acc.into_finvec();
    let zn = z.norm();
    let z = z.scale_real(1.0 / zn);
    let shares: Vec<f64> = (0..vecs.len())
        .map(|i| {
            if live.contains(&i) {
                z.inner(vecs[i]).norm() / norms[i]
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let worst = shares
        .iter()
        .zip(weights)
        .map(|(s, w)| s - w)
        .fold(f64::INFINITY, f64::min);
    if worst < -PLANK_AUDIT_SLACK {
        return Err(NumRangeError::PlankFailure { worst_gap: worst });
    }
    Ok((z, zn - 1.0, shares))
}

fn step(
    t: &OperatorModel,
    state: &mut BuildState,
    targets: &Targets,
    k: &LargeConstants,
    n: usize,
    horizon: usize,
    params: &LargeParams,
) -> Result<(FinVec, StepRecord), ForgeError> {
    let m = large_class(n);
    let y = state.seeds.fetch(n, m)?;
    let s = state.us.residual(&y);
    let before = s.norm_sqr();
    state.ledger.track(m, n - 1, before);

    let far = (horizon + t.band_width()).max(horizon_of([&y]));
    let p = pearcy_beyond(t, far, k.c, k.d_in, params.epsilon, params.policy, n)?;
    let v = p.u.clone();

    let nf = n as f64;
    let tw = 1.0 / (2.0 * nf.sqrt());
    let sw = std::f64::consts::FRAC_1_SQRT_2;
    let mut vecs: Vec<&FinVec> = targets.vecs.iter().collect();
    vecs.push(&s);
    let mut weights = vec![tw; targets.vecs.len()];
    weights.push(sw);
    let weight_sum: f64 = weights.iter().map(|w| w * w).sum();

    let seed = mix_seed(params.seed, n as u64);
    let gram = |tg: &Targets| {
        let dim = tg.vecs.len() + 1;
        DMatrix::from_fn(dim, dim, |i, j| match (i + 1 == dim, j + 1 == dim) {
            (false, false) => tg.h[i][j],
            (true, true) => Complex64::new(before, 0.0),
            (true, false) => tg.vecs[j].inner(&s),
            (false, true) => s.inner(&tg.vecs[i]),
        })
    };
    let (z, norm_defect, shares) = match plank_step(&vecs, &gram(targets), &weights, seed) {
        Ok(r) => r,
        Err(_) => {
            let mut fresh = Targets {
                vecs: targets.vecs.clone(),
                h: Vec::new(),
            };
            fresh.recompute();
            let vecs2: Vec<&FinVec> = fresh.vecs.iter().chain(std::iter::once(&s)).collect();
            plank_step(&vecs2, &gram(&fresh), &weights, seed).map_err(|source| ForgeError::Plank { step: n, source })?
        }
    };

    let margin = |slot: usize| {
        (0..targets.vecs.len())
            .filter(|i| i % 2 == slot)
            .map(|i| shares[i] - tw)
            .fold(f64::INFINITY, f64::min)
    };
    let audit = PlankAudit {
        weight_sum,
        seed_margin: shares[targets.vecs.len()] - sw,
        t_margin: margin(0),
        tstar_margin: margin(1),
        norm_defect,
    };

    let alpha = 1.0 / (k.a * nf).sqrt();
    let beta = (1.0 - 1.0 / (k.a * nf)).sqrt();
    let u = z.scale_real(alpha).axpy(Complex64::new(beta, 0.0), &v);
    let after = s.axpy(-s.inner(&u), &u).norm_sqr();

    let mut rec = StepRecord::new(n, StepBranch::Mixed, t.apply(&u).inner(&u));
    rec.m = Some(m);
    rec.pearcy = Some(p.triple());
    rec.plank = Some(audit);
    rec.z_norm = Some(1.0 + norm_defect);
    rec.seed_before = Some(before);
    rec.seed_after = Some(after);
    rec.factor = Some(k.decay_factor(n));
    rec.factor_kind = Some(FactorKind::UpperBound);
    if before.sqrt() <= super::MEMBERSHIP_TOLERANCE {
        rec.branch = StepBranch::SeedInSpan;
    }
    state.aux.v = Some(v);
    state.aux.z = Some(z);
    Ok((u, rec))
}

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::boundary::CVector;
use super::NumRangeError;
use crate::seqspace::{FinVec, OrthoFamily};

/// Slack allowed below each weight in a returned certificate.
pub const PLANK_SLACK: f64 = 1e-10;

const RESTARTS: usize = 24;
const LOG_ITERATIONS: usize = 3000;
const SOFTMIN_ITERATIONS: usize = 2000;

/// `⟨ζ, r⟩ = Σ ζᵢ·conj(rᵢ)`.
fn pair(z: &CVector, r: &CVector) -> Complex64 {
    r.dotc(z)
}

fn normalize(z: CVector) -> Option<CVector> {
    let n = z.norm();
    (n > 1e-300 && n.is_finite()).then(|| z / Complex64::new(n, 0.0))
}

struct Problem<'a> {
    rows: Vec<&'a CVector>,
    weights: Vec<f64>,
    total: f64,
}

impl Problem<'_> {
    /// `min_j |⟨ζ, r_j⟩| − a_j`.
    fn worst_gap(&self, z: &CVector) -> f64 {
        self.rows
            .iter()
            .zip(&self.weights)
            .map(|(r, a)| pair(z, r).norm() - a)
            .fold(f64::INFINITY, f64::min)
    }

    fn solved(&self, z: &CVector) -> bool {
        self.worst_gap(z) >= 0.0
    }

    fn log_objective(&self, z: &CVector) -> f64 {
        self.rows
            .iter()
            .zip(&self.weights)
            .map(|(r, a)| a * a * pair(z, r).norm().ln())
            .sum()
    }

    /// Riemannian ascent on `Σ a_j² ln|⟨ζ, r_j⟩|` over the unit sphere.
    fn log_ascent(&self, mut z: CVector) -> CVector {
        let mut f = self.log_objective(&z);
        let mut step: f64 = 1.0;
        for _ in 0..LOG_ITERATIONS {
            if self.solved(&z) || !f.is_finite() {
                break;
            }
            let mut g = CVector::zeros(z.len());
            for (r, a) in self.rows.iter().zip(&self.weights) {
                let c = pair(&z, r);
                g.axpy(Complex64::new(a * a, 0.0) / c.conj(), r, Complex64::new(1.0, 0.0));
            }
            // ⟨g, ζ⟩ = Σ a_j², so this is the tangent component
            g.axpy(Complex64::new(-self.total, 0.0), &z, Complex64::new(1.0, 0.0));
            let gn2 = g.norm_squared();
            if gn2 < 1e-28 {
                break;
            }
            step = (step * 2.0).min(1e6);
            let mut moved = false;
            while step > 1e-16 {
                if let Some(cand) = normalize(&z + &g * Complex64::new(step, 0.0)) {
                    let fc = self.log_objective(&cand);
                    if fc > f + 1e-4 * step * gn2 {
                        z = cand;
                        f = fc;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        z
    }

    /// Ascent on the soft minimum of `|⟨ζ, r_j⟩| / a_j`.
    fn softmin_ascent(&self, mut z: CVector) -> CVector {
        let beta = 200.0;
        let value = |z: &CVector| -> (f64, Vec<f64>) {
            let q: Vec<f64> = self
                .rows
                .iter()
                .zip(&self.weights)
                .map(|(r, a)| pair(z, r).norm() / a)
                .collect();
            let qmin = q.iter().cloned().fold(f64::INFINITY, f64::min);
            let s: f64 = q.iter().map(|x| (-beta * (x - qmin)).exp()).sum();
            (qmin - s.ln() / beta, q)
        };
        let (mut f, mut q) = value(&z);
        let mut step = 0.1;
        for _ in 0..SOFTMIN_ITERATIONS {
            if self.solved(&z) {
                break;
            }
            let qmin = q.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut g = CVector::zeros(z.len());
            for ((r, a), qj) in self.rows.iter().zip(&self.weights).zip(&q) {
                let c = pair(&z, r);
                if c.norm() == 0.0 {
                    continue;
                }
                let pi = (-beta * (qj - qmin)).exp();
                g.axpy(c / c.norm() * (pi / a), r, Complex64::new(1.0, 0.0));
            }
            let proj = g.dotc(&z).conj().re;
            g.axpy(Complex64::new(-proj, 0.0), &z, Complex64::new(1.0, 0.0));
            let gn = g.norm();
            if gn < 1e-15 {
                break;
            }
            g /= Complex64::new(gn, 0.0);
            step = (step * 2.0f64).min(1.0);
            let mut moved = false;
            while step > 1e-14 {
                if let Some(cand) = normalize(&z + &g * Complex64::new(step, 0.0)) {
                    let (fc, qc) = value(&cand);
                    if fc > f {
                        z = cand;
                        f = fc;
                        q = qc;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        z
    }
}

/// Start `Σ e^{iφ_j} a_j r_j`, each phase aligned with the partial sum so terms never cancel.
fn greedy_start(rows: &[&CVector], weights: &[f64], dim: usize) -> CVector {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&i, &j| weights[j].total_cmp(&weights[i]).then(i.cmp(&j)));
    let mut p = CVector::zeros(dim);
    for i in order {
        let ip = pair(&p, rows[i]);
        let phase = if ip.norm() > 0.0 {
            ip / ip.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        p.axpy(phase * weights[i], rows[i], Complex64::new(1.0, 0.0));
    }
    normalize(p).unwrap_or_else(|| {
        let mut e = CVector::zeros(dim);
        e[0] = Complex64::new(1.0, 0.0);
        e
    })
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> CVector {
    loop {
        let z = DVector::from_fn(dim, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        if let Some(u) = normalize(z) {
            return u;
        }
    }
}

/// Unit `ζ ∈ ℂ^d` with `|⟨ζ, r_j⟩| ≥ a_j − 1e−10` for every row.
///
/// Rows should have norm at most one and the weights `Σ a_j² ≤ 1`; then a solution exists.
/// The result is always checked directly, so a returned vector is a valid certificate.
pub fn plank_coordinates(rows: &[CVector], weights: &[f64], seed: u64) -> Result<CVector, NumRangeError> {
    if rows.len() != weights.len() {
        return Err(NumRangeError::InvalidInput("rows and weights differ in length".into()));
    }
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    if dim == 0 || rows.iter().any(|r| r.len() != dim) {
        return Err(NumRangeError::InvalidInput("rows must share a positive dimension".into()));
    }
    if weights.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(NumRangeError::InvalidInput("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().map(|a| a * a).sum();
    if total > 1.0 + 1e-12 {
        return Err(NumRangeError::InvalidInput(format!("Σ a_j² = {total} exceeds 1")));
    }
    let (act_rows, act_w): (Vec<&CVector>, Vec<f64>) = rows
        .iter()
        .zip(weights)
        .filter(|(_, a)| **a > 0.0)
        .map(|(r, a)| (r, *a))
        .unzip();
    let problem = Problem {
        rows: act_rows,
        weights: act_w,
        total,
    };
    let verify = |z: &CVector| {
        rows.iter()
            .zip(weights)
            .all(|(r, a)| pair(z, r).norm() >= a - PLANK_SLACK)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, CVector)> = None;
    for attempt in 0..=RESTARTS {
        let start = if attempt == 0 {
            greedy_start(&problem.rows, &problem.weights, dim)
        } else {
            random_unit(&mut rng, dim)
        };
        let mut z = problem.log_ascent(start);
        if !verify(&z) {
            z = problem.softmin_ascent(z);
        }
        if verify(&z) {
            return Ok(z);
        }
        let gap = problem.worst_gap(&z);
        if best.as_ref().is_none_or(|(g, _)| gap > *g) {
            best = Some((gap, z));
        }
    }
    Err(NumRangeError::PlankFailure {
        worst_gap: best.map(|(g, _)| g).unwrap_or(f64::NEG_INFINITY),
    })
}

/// Unit `v ∈ span(subspace)` with `|⟨v, w_j⟩| ≥ a_j − 1e−10` for each target `(w_j, a_j)`.
pub fn plank_vector(targets: &[(FinVec, f64)], subspace: &OrthoFamily, seed: u64) -> Result<FinVec, NumRangeError> {
    if subspace.is_empty() {
        return Err(NumRangeError::InvalidInput("subspace basis is empty".into()));
    }
    let rows: Vec<CVector> = targets
        .iter()
        .map(|(w, _)| DVector::from_iterator(subspace.len(), subspace.iter().map(|e| w.inner(e))))
        .collect();
    let weights: Vec<f64> = targets.iter().map(|(_, a)| *a).collect();
    let z = plank_coordinates(&rows, &weights, seed)?;
    let mut v = FinVec::zero();
    for (e, zk) in subspace.iter().zip(z.iter()) {
        v = v.axpy(*zk, e);
    }
    let worst = targets
        .iter()
        .map(|(w, a)| v.inner(w).norm() - a)
        .fold(f64::INFINITY, f64::min);
    if worst < -PLANK_SLACK {
        return Err(NumRangeError::PlankFailure { worst_gap: worst });
    }
    Ok(v)
}

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use super::region::ConvexRegion;
use super::NumRangeError;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Default number of sweep angles.
pub const DEFAULT_ANGLES: usize = 256;

/// A boundary point of `W(M)` attained by a recorded unit state.
#[derive(Clone, Debug)]
pub struct SupportPoint {
    pub theta: f64,
    /// `λ_max` of the Hermitian part of `e^{−iθ}M`; `W(M)` lies in `Re(e^{−iθ}z) ≤ support`.
    pub support: f64,
    /// `⟨Mx, x⟩`.
    pub value: Complex64,
    pub state: CVector,
}

/// The inscribed polygon produced by a boundary sweep.
#[derive(Clone, Debug)]
pub struct BoundaryPolygon {
    pub points: Vec<SupportPoint>,
    pub region: ConvexRegion,
}

/// `⟨Mx, x⟩ = x* M x`.
pub fn rayleigh(m: &CMatrix, x: &CVector) -> Complex64 {
    x.dotc(&(m * x))
}

/// `(e^{−iθ}M + e^{iθ}M*)/2`.
fn hermitian_part(m: &CMatrix, theta: f64) -> CMatrix {
    let rot = Complex64::from_polar(1.0, -theta);
    let a = m * rot;
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

fn compute_support_point(m: &CMatrix, theta: f64) -> Result<SupportPoint, NumRangeError> {
    let h = hermitian_part(m, theta);
    let n = h.nrows();
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 10_000 * n.max(1))
        .ok_or(NumRangeError::EigenFailure { theta })?;
    let (mut best, mut lam) = (0, f64::NEG_INFINITY);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v > lam {
            lam = v;
            best = i;
        }
    }
    let mut x: CVector = eig.eigenvectors.column(best).into_owned();
    let nrm = x.norm();
    x /= Complex64::new(nrm, 0.0);
    // fix the phase so the largest component is real positive
    let (imax, _) = x
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 + 1e-14 { (i, z.norm()) } else { acc });
    let ph = x[imax] / x[imax].norm();
    x *= ph.conj();
    Ok(SupportPoint {
        theta,
        support: lam,
        value: rayleigh(m, &x),
        state: x,
    })
}

struct CacheEntry {
    matrix: CMatrix,
    points: BTreeMap<u64, SupportPoint>,
}

/// Support points keyed by the exact matrix and angle; eviction is first-in first-out.
struct SupportCache {
    entries: VecDeque<Arc<Mutex<CacheEntry>>>,
}

const CACHE_MATRICES: usize = 8;
const CACHE_MAX_DIM: usize = 512;

fn cache() -> &'static Mutex<SupportCache> {
    static CACHE: OnceLock<Mutex<SupportCache>> = OnceLock::new();
    CACHE.get_or_init(|| {
        Mutex::new(SupportCache {
            entries: VecDeque::new(),
        })
    })
}

fn cache_slot(m: &CMatrix) -> Option<Arc<Mutex<CacheEntry>>> {
    if m.nrows() > CACHE_MAX_DIM {
        return None;
    }
    let mut c = cache().lock().unwrap_or_else(|e| e.into_inner());
    if let Some(e) = c
        .entries
        .iter()
        .find(|e| e.lock().map(|g| g.matrix == *m).unwrap_or(false))
    {
        return Some(Arc::clone(e));
    }
    let slot = Arc::new(Mutex::new(CacheEntry {
        matrix: m.clone(),
        points: BTreeMap::new(),
    }));
    c.entries.push_back(Arc::clone(&slot));
    while c.entries.len() > CACHE_MATRICES {
        c.entries.pop_front();
    }
    Some(slot)
}

/// Support points of `W(M)` at the given angles, in input order.
pub fn support_points(m: &CMatrix, thetas: &[f64]) -> Result<Vec<SupportPoint>, NumRangeError> {
    let slot = cache_slot(m);
    let mut out: Vec<Option<SupportPoint>> = vec![None; thetas.len()];
    if let Some(slot) = &slot {
        let g = slot.lock().unwrap_or_else(|e| e.into_inner());
        for (o, t) in out.iter_mut().zip(thetas) {
            *o = g.points.get(&t.to_bits()).cloned();
        }
    }
    let missing: Vec<usize> = (0..thetas.len()).filter(|&i| out[i].is_none()).collect();
    let computed: Vec<Result<SupportPoint, NumRangeError>> = if m.nrows() >= 48 && missing.len() > 1 {
        missing
            .par_iter()
            .map(|&i| compute_support_point(m, thetas[i]))
            .collect()
    } else {
        missing.iter().map(|&i| compute_support_point(m, thetas[i])).collect()
    };
    for (&i, r) in missing.iter().zip(computed) {
        out[i] = Some(r?);
    }
    let out: Vec<SupportPoint> = out.into_iter().map(|p| p.expect("filled above")).collect();
    if let Some(slot) = &slot {
        let mut g = slot.lock().unwrap_or_else(|e| e.into_inner());
        for p in &out {
            g.points.entry(p.theta.to_bits()).or_insert_with(|| p.clone());
        }
    }
    Ok(out)
}

/// `2πk/n` for `k = 0..n`.
pub fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

/// Inscribed polygon of `W(M)` from a uniform sweep of `n_angles` support points.
pub fn numerical_range_boundary(m: &CMatrix, n_angles: usize) -> Result<BoundaryPolygon, NumRangeError> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(NumRangeError::InvalidInput(format!(
            "matrix must be square and non-empty, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if n_angles < 8 {
        return Err(NumRangeError::InvalidInput(format!("n_angles must be ≥ 8, got {n_angles}")));
    }
    let points = support_points(m, &uniform_angles(n_angles))?;
    let region = ConvexRegion::hull(points.iter().map(|p| p.value).collect());
    Ok(BoundaryPolygon { points, region })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jordan(k: usize) -> CMatrix {
        let mut m = CMatrix::zeros(k, k);
        for i in 0..k - 1 {
            m[(i, i + 1)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    #[test]
    fn normal_matrix_gives_segment() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]));
        let b = numerical_range_boundary(&m, 16).unwrap();
        match b.region {
            ConvexRegion::Segment { endpoints } => {
                let mut re = [endpoints[0].re, endpoints[1].re];
                re.sort_by(f64::total_cmp);
                assert!(re[0].abs() < 1e-12 && (re[1] - 1.0).abs() < 1e-12);
            }
            other => panic!("expected a segment, got {other:?}"),
        }
    }

    #[test]
    fn jordan_support_is_rotation_invariant() {
        let m = jordan(5);
        let expected = (PI / 6.0).cos();
        for p in numerical_range_boundary(&m, 64).unwrap().points {
            assert!((p.support - expected).abs() < 1e-12);
            assert!((p.value.norm() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(numerical_range_boundary(&jordan(3), 4).is_err());
        assert!(numerical_range_boundary(&CMatrix::zeros(2, 3), 8).is_err());
    }
}

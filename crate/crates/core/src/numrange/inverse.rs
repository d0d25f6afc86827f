use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::boundary::{rayleigh, support_points, uniform_angles, CMatrix, CVector, SupportPoint};
use super::NumRangeError;

/// Required accuracy of `⟨Mx, x⟩` for a returned state.
pub const VALUE_TOLERANCE: f64 = 1e-11;

const INITIAL_ANGLES: usize = 8;
const MAX_ANGLES: usize = 4096;
const POLISH_ROUNDS: usize = 4;

/// Inscribed hull of `W(M)` whose vertices carry the states attaining them.
#[derive(Clone, Debug)]
pub(crate) enum CertifiedHull {
    Point(SupportPoint),
    Segment(SupportPoint, SupportPoint),
    /// Counterclockwise, strictly convex.
    Polygon(Vec<SupportPoint>),
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a - o).re * (b - o).im - (a - o).im * (b - o).re
}

/// Counterclockwise hull of support points; collinear and duplicate values are dropped.
fn hull_of(points: &[SupportPoint], tol: f64) -> CertifiedHull {
    let mut pts: Vec<&SupportPoint> = points.iter().collect();
    pts.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
            .then(a.theta.total_cmp(&b.theta))
    });
    pts.dedup_by(|a, b| (a.value - b.value).norm() <= tol);
    if pts.len() == 1 {
        return CertifiedHull::Point(pts[0].clone());
    }
    let area_tol = tol * pts.iter().fold(1.0f64, |s, p| s.max(p.value.norm()));
    let mut lower = monotone_chain(pts.iter().copied(), area_tol);
    let mut upper = monotone_chain(pts.iter().rev().copied(), area_tol);
    lower.pop();
    upper.pop();
    lower.extend(upper);
    match lower.len() {
        0 | 1 => CertifiedHull::Point(pts[0].clone()),
        2 => CertifiedHull::Segment(lower[0].clone(), lower[1].clone()),
        _ => CertifiedHull::Polygon(lower.into_iter().cloned().collect()),
    }
}

fn monotone_chain<'a>(iter: impl Iterator<Item = &'a SupportPoint>, area_tol: f64) -> Vec<&'a SupportPoint> {
    let mut out: Vec<&SupportPoint> = Vec::new();
    for p in iter {
        while out.len() >= 2 && cross(out[out.len() - 2].value, out[out.len() - 1].value, p.value) <= area_tol {
            out.pop();
        }
        out.push(p);
    }
    out
}

/// Angle of the outward normal of the counterclockwise edge `a → b`.
fn outward_normal_angle(a: Complex64, b: Complex64) -> f64 {
    ((b - a) * Complex64::new(0.0, -1.0)).arg()
}

fn scale_of(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0)
}

/// Certifies `λ ∈ W(M)` at depth `margin` by an adaptively refined inscribed hull.
///
/// `margin = 0` asks for plain membership (boundary points allowed). Fails with
/// [`NumRangeError::OutsideRange`] when a supporting half-plane shows the depth is below
/// `margin`, and with [`NumRangeError::NotCertified`] when refinement runs out.
pub(crate) fn certify(m: &CMatrix, lambda: Complex64, margin: f64) -> Result<CertifiedHull, NumRangeError> {
    let tol = 1e-12 * scale_of(m);
    let mut thetas = uniform_angles(INITIAL_ANGLES);
    let mut pts = support_points(m, &thetas)?;
    loop {
        for p in &pts {
            let gap = p.support - (Complex64::from_polar(1.0, -p.theta) * lambda).re;
            if (margin > 0.0 && gap < margin) || gap < -tol {
                return Err(NumRangeError::OutsideRange {
                    lambda,
                    theta: p.theta,
                    gap,
                    margin,
                });
            }
        }
        let hull = hull_of(&pts, tol);
        let mut fresh: Vec<f64> = Vec::new();
        match &hull {
            CertifiedHull::Point(p) => {
                if margin == 0.0 && (p.value - lambda).norm() <= tol {
                    return Ok(hull);
                }
                // supporting lines at the existing angles already pin W to this point
            }
            CertifiedHull::Segment(a, b) => {
                let on_line = super::region::dist_to_segment(lambda, a.value, b.value);
                if margin == 0.0 && on_line <= tol {
                    return Ok(hull);
                }
                fresh.push(outward_normal_angle(a.value, b.value));
                fresh.push(outward_normal_angle(b.value, a.value));
            }
            CertifiedHull::Polygon(v) => {
                let k = v.len();
                let mut depth = f64::INFINITY;
                let mut shallow = Vec::new();
                for i in 0..k {
                    let (a, b) = (v[i].value, v[(i + 1) % k].value);
                    let d = cross(a, b, lambda) / (b - a).norm();
                    depth = depth.min(d);
                    if d < margin.max(tol) {
                        shallow.push(outward_normal_angle(a, b));
                    }
                }
                if (margin > 0.0 && depth >= margin) || (margin == 0.0 && depth >= -tol) {
                    return Ok(hull);
                }
                fresh = shallow;
            }
        }
        fresh.retain(|t| {
            thetas
                .iter()
                .all(|s| (Complex64::from_polar(1.0, *t) - Complex64::from_polar(1.0, *s)).norm() > 1e-12)
        });
        fresh.sort_by(f64::total_cmp);
        fresh.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        if fresh.is_empty() || thetas.len() + fresh.len() > MAX_ANGLES {
            return Err(NumRangeError::NotCertified {
                lambda,
                angles: thetas.len(),
            });
        }
        pts.extend(support_points(m, &fresh)?);
        thetas.extend(fresh);
    }
}

/// Unit state `w(s) = (cos s·x + e^{iφ} sin s·y)/‖·‖` whose value sits at fraction `t` of the
/// way from `⟨Mx,x⟩` to `⟨My,y⟩`; `φ` makes the value path a real segment.
fn path_state(m: &CMatrix, x: &CVector, y: &CVector, t: f64) -> CVector {
    let (mx, my) = (m * x, m * y);
    let alpha = x.dotc(&mx);
    let beta = y.dotc(&my);
    let span = beta - alpha;
    if span.norm() == 0.0 || t <= 0.0 {
        return x.clone();
    }
    if t >= 1.0 {
        return y.clone();
    }
    // scalars of A = (M − α)/(β − α) and the overlap of x and y
    let xy = y.dotc(x); // ⟨x, y⟩
    let a = (x.dotc(&my) - alpha * xy.conj()) / span; // ⟨Ay, x⟩
    let b = (y.dotc(&mx) - alpha * xy) / span; // ⟨Ax, y⟩
    let d = a - b.conj();
    let phase = if d.norm() > 0.0 {
        Complex64::from_polar(1.0, -d.arg())
    } else {
        Complex64::new(1.0, 0.0)
    };
    let f = |s: f64| {
        let (c, sn) = (s.cos(), s.sin());
        // ⟨Ax,x⟩ = 0 and ⟨Ay,y⟩ = 1
        let num = sn * sn + ((phase * a + phase.conj() * b) * c * sn).re;
        let den = 1.0 + 2.0 * c * sn * (phase * xy.conj()).re;
        num / den
    };
    let (mut lo, mut hi) = (0.0f64, FRAC_PI_2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = if (f(lo) - t).abs() <= (f(hi) - t).abs() { lo } else { hi };
    let w = x * Complex64::new(s.cos(), 0.0) + y * (phase * s.sin());
    let n = w.norm();
    w / Complex64::new(n, 0.0)
}

/// Fraction `t ∈ [0,1]` with `λ = a + t(b − a)`, for `λ` on the segment.
fn fraction_on_segment(lambda: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    (((lambda - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0)
}

/// State with value `λ` from an apex state and a fan of boundary states around it.
fn fan_solve(m: &CMatrix, apex: &CVector, ring: &[SupportPoint], lambda: Complex64) -> Option<CVector> {
    let p0 = rayleigh(m, apex);
    let dir = lambda - p0;
    if dir.norm() == 0.0 {
        return Some(apex.clone());
    }
    let k = ring.len();
    let mut best: Option<(f64, usize, f64)> = None;
    for i in 0..k {
        let (pa, pb) = (ring[i].value, ring[(i + 1) % k].value);
        let e = pb - pa;
        // p0 + s·dir = pa + u·e
        let det = dir.re * (-e.im) - dir.im * (-e.re);
        if det.abs() < 1e-300 {
            continue;
        }
        let r = pa - p0;
        let s = (r.re * (-e.im) - r.im * (-e.re)) / det;
        let u = (dir.re * r.im - dir.im * r.re) / det;
        let slack = -1e-12;
        if s >= 1.0 + slack && (slack..=1.0 - slack).contains(&u) {
            // prefer the nearest exit point along the ray
            if best.is_none_or(|(bs, ..)| s < bs) {
                best = Some((s, i, u.clamp(0.0, 1.0)));
            }
        }
    }
    let (_, i, u) = best?;
    let q_state = path_state(m, &ring[i].state, &ring[(i + 1) % k].state, u);
    let q = rayleigh(m, &q_state);
    Some(path_state(m, apex, &q_state, fraction_on_segment(lambda, p0, q)))
}

fn value_error(m: &CMatrix, x: &CVector, lambda: Complex64) -> f64 {
    (rayleigh(m, x) - lambda).norm()
}

pub(crate) fn solve_in_hull(m: &CMatrix, hull: &CertifiedHull, lambda: Complex64) -> Result<CVector, NumRangeError> {
    let mut x = match hull {
        CertifiedHull::Point(p) => p.state.clone(),
        CertifiedHull::Segment(a, b) => {
            path_state(m, &a.state, &b.state, fraction_on_segment(lambda, a.value, b.value))
        }
        CertifiedHull::Polygon(v) => {
            fan_solve(m, &v[0].state, &v[1..], lambda).ok_or(NumRangeError::BisectionStall {
                error: f64::INFINITY,
            })?
        }
    };
    if let CertifiedHull::Polygon(v) = hull {
        for _ in 0..POLISH_ROUNDS {
            if value_error(m, &x, lambda) <= 0.1 * VALUE_TOLERANCE {
                break;
            }
            match fan_solve(m, &x, v, lambda) {
                Some(y) if value_error(m, &y, lambda) < value_error(m, &x, lambda) => x = y,
                _ => break,
            }
        }
    }
    let err = value_error(m, &x, lambda);
    if err > VALUE_TOLERANCE || (x.norm() - 1.0).abs() > 1e-12 {
        return Err(NumRangeError::BisectionStall { error: err });
    }
    Ok(x)
}

/// Unit `x` with `|⟨Mx,x⟩ − λ| ≤ 1e−11`, for `λ` at depth `margin` inside `W(M)`.
///
/// `margin = 0` accepts any `λ ∈ W(M)`, including boundary points and degenerate ranges.
pub fn find_state_with_value(m: &CMatrix, lambda: Complex64, margin: f64) -> Result<CVector, NumRangeError> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(NumRangeError::InvalidInput("matrix must be square and non-empty".into()));
    }
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(NumRangeError::InvalidInput(format!("margin must be ≥ 0, got {margin}")));
    }
    let hull = certify(m, lambda, margin)?;
    solve_in_hull(m, &hull, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag01() -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]))
    }

    #[test]
    fn midpoint_of_a_normal_pair() {
        let x = find_state_with_value(&diag01(), c(0.5, 0.0), 0.0).unwrap();
        assert!((x[0].norm() - 0.5f64.sqrt()).abs() < 1e-11);
        assert!((x[1].norm() - 0.5f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn endpoint_is_an_eigenstate() {
        let x = find_state_with_value(&diag01(), c(0.0, 0.0), 0.0).unwrap();
        assert!((x[0].norm() - 1.0).abs() < 1e-11 && x[1].norm() < 1e-5);
    }

    #[test]
    fn outside_points_are_rejected() {
        let err = find_state_with_value(&diag01(), c(0.5, 0.1), 0.0).unwrap_err();
        assert!(matches!(err, NumRangeError::OutsideRange { .. }));
        let mut j = CMatrix::zeros(3, 3);
        j[(0, 1)] = c(1.0, 0.0);
        j[(1, 2)] = c(1.0, 0.0);
        // radius of W is cos(π/4) ≈ 0.7071
        assert!(find_state_with_value(&j, c(0.6, 0.0), 0.2).is_err());
        let x = find_state_with_value(&j, c(0.6, 0.0), 0.1).unwrap();
        assert!((rayleigh(&j, &x) - c(0.6, 0.0)).norm() <= VALUE_TOLERANCE);
    }

    #[test]
    fn path_hits_intermediate_fractions() {
        let m = CMatrix::from_fn(4, 4, |i, j| c((i * 3 + j) as f64 * 0.1, (i as f64 - j as f64) * 0.2));
        let pts = support_points(&m, &[0.0, 2.0]).unwrap();
        let (a, b) = (&pts[0], &pts[1]);
        for t in [0.1, 0.5, 0.9] {
            let w = path_state(&m, &a.state, &b.state, t);
            let target = a.value + (b.value - a.value) * t;
            assert!((rayleigh(&m, &w) - target).norm() < 1e-12);
        }
    }
}

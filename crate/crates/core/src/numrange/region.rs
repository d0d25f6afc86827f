use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Vertices used when a disk must be replaced by an inscribed polygon.
const DISK_POLYGON_VERTICES: usize = 256;

/// A compact convex subset of ℂ.
///
/// Polygons are stored counterclockwise with strictly convex corners; [`ConvexRegion::hull`]
/// produces that normal form and collapses to a segment or point when the input is degenerate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexRegion {
    Disk { center: Complex64, radius: f64 },
    Polygon { vertices: Vec<Complex64> },
    Segment { endpoints: [Complex64; 2] },
    Point { value: Complex64 },
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a - o).re * (b - o).im - (a - o).im * (b - o).re
}

/// Distance from `p` to the closed segment `[a, b]`.
pub(crate) fn dist_to_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Argument mapped to `[0, 2π)`.
fn positive_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

impl ConvexRegion {
    pub fn disk(center: Complex64, radius: f64) -> Self {
        ConvexRegion::Disk { center, radius }
    }

    pub fn point(value: Complex64) -> Self {
        ConvexRegion::Point { value }
    }

    pub fn segment(a: Complex64, b: Complex64) -> Self {
        ConvexRegion::Segment { endpoints: [a, b] }
    }

    /// Convex hull of a finite point set, in normal form.
    pub fn hull(points: Vec<Complex64>) -> Self {
        let (mut pts, scale) = (points, 0.0f64);
        let scale = pts.iter().fold(scale, |s, p| s.max(p.norm())).max(1.0);
        let eps = 1e-13 * scale;
        pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        pts.dedup_by(|a, b| (*a - *b).norm() <= eps);
        match pts.len() {
            0 => return ConvexRegion::point(Complex64::new(0.0, 0.0)),
            1 => return ConvexRegion::point(pts[0]),
            _ => {}
        }
        // Andrew's monotone chain; near-collinear corners are dropped.
        let tol = eps * scale;
        let mut lower: Vec<Complex64> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= tol {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Complex64> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= tol {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        match lower.len() {
            0 | 1 => ConvexRegion::point(pts[0]),
            2 => ConvexRegion::segment(lower[0], lower[1]),
            _ => ConvexRegion::Polygon { vertices: lower },
        }
    }

    /// Convex hull of a union of regions; disks contribute inscribed polygons.
    pub fn hull_of_regions(regions: &[ConvexRegion]) -> Self {
        if let [single] = regions {
            return single.clone();
        }
        let pts = regions.iter().flat_map(|r| r.extreme_points()).collect();
        ConvexRegion::hull(pts)
    }

    /// `{α z + β : z ∈ R}`.
    pub fn affine_image(&self, alpha: Complex64, beta: Complex64) -> Self {
        match self {
            ConvexRegion::Disk { center, radius } => {
                ConvexRegion::disk(alpha * center + beta, alpha.norm() * radius)
            }
            other => ConvexRegion::hull(
                other
                    .extreme_points()
                    .into_iter()
                    .map(|z| alpha * z + beta)
                    .collect(),
            ),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        match self {
            ConvexRegion::Disk { center, radius } => {
                if !finite(center) || !radius.is_finite() || *radius < 0.0 {
                    return Err(format!("disk needs a finite center and radius ≥ 0, got {radius}"));
                }
            }
            ConvexRegion::Polygon { vertices } => {
                if vertices.len() < 3 || !vertices.iter().all(finite) {
                    return Err("polygon needs at least three finite vertices".into());
                }
                let k = vertices.len();
                for i in 0..k {
                    let turn = cross(vertices[i], vertices[(i + 1) % k], vertices[(i + 2) % k]);
                    if turn <= 0.0 {
                        return Err("polygon vertices must be strictly convex and counterclockwise".into());
                    }
                }
            }
            ConvexRegion::Segment { endpoints } => {
                if !endpoints.iter().all(finite) {
                    return Err("segment endpoints must be finite".into());
                }
            }
            ConvexRegion::Point { value } => {
                if !finite(value) {
                    return Err("point must be finite".into());
                }
            }
        }
        Ok(())
    }

    /// Extreme points; a disk is represented by an inscribed regular polygon.
    pub fn extreme_points(&self) -> Vec<Complex64> {
        match self {
            ConvexRegion::Disk { center, radius } => (0..DISK_POLYGON_VERTICES)
                .map(|k| {
                    center
                        + Complex64::from_polar(
                            *radius,
                            2.0 * PI * k as f64 / DISK_POLYGON_VERTICES as f64,
                        )
                })
                .collect(),
            ConvexRegion::Polygon { vertices } => vertices.clone(),
            ConvexRegion::Segment { endpoints } => endpoints.to_vec(),
            ConvexRegion::Point { value } => vec![*value],
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            ConvexRegion::Disk { radius, .. } => 2.0 * radius,
            other => {
                let pts = other.extreme_points();
                let mut best: f64 = 0.0;
                for (i, a) in pts.iter().enumerate() {
                    for b in &pts[i + 1..] {
                        best = best.max((a - b).norm());
                    }
                }
                best
            }
        }
    }

    /// A diameter-realizing pair `(λ, ν)` with `|λ| ≥ |ν|`.
    ///
    /// Among realizing pairs, `|λ|` is maximized, then `arg λ ∈ [0, 2π)` minimized.
    pub fn diameter_pair(&self) -> (Complex64, Complex64) {
        match self {
            ConvexRegion::Disk { center, radius } => {
                let dir = if center.norm() > 0.0 {
                    center / center.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                };
                (center + dir * *radius, center - dir * *radius)
            }
            other => {
                let pts = other.extreme_points();
                let diam = other.diameter();
                let tol = 1e-12 * diam.max(1.0);
                let mut best: Option<(Complex64, Complex64)> = None;
                for (i, &a) in pts.iter().enumerate() {
                    for &b in &pts[i..] {
                        if (a - b).norm() < diam - tol {
                            continue;
                        }
                        for (l, n) in [(a, b), (b, a)] {
                            if l.norm() < n.norm() - tol {
                                continue;
                            }
                            let better = match best {
                                None => true,
                                Some((bl, _)) => {
                                    l.norm() > bl.norm() + tol
                                        || ((l.norm() - bl.norm()).abs() <= tol
                                            && positive_arg(l) < positive_arg(bl))
                                }
                            };
                            if better {
                                best = Some((l, n));
                            }
                        }
                    }
                }
                best.unwrap_or((pts[0], pts[0]))
            }
        }
    }

    /// A canonical interior point (center, vertex centroid, midpoint, or the point).
    pub fn reference_point(&self) -> Complex64 {
        match self {
            ConvexRegion::Disk { center, .. } => *center,
            other => {
                let pts = other.extreme_points();
                pts.iter().sum::<Complex64>() / pts.len() as f64
            }
        }
    }

    /// Whether `λ` is in the closed region, up to `tol`.
    pub fn contains(&self, lambda: Complex64, tol: f64) -> bool {
        match self {
            ConvexRegion::Disk { center, radius } => (lambda - center).norm() <= radius + tol,
            ConvexRegion::Polygon { vertices } => {
                let k = vertices.len();
                (0..k).all(|i| {
                    let (a, b) = (vertices[i], vertices[(i + 1) % k]);
                    cross(a, b, lambda) / (b - a).norm() >= -tol
                })
            }
            ConvexRegion::Segment { endpoints } => {
                dist_to_segment(lambda, endpoints[0], endpoints[1]) <= tol
            }
            ConvexRegion::Point { value } => (lambda - value).norm() <= tol,
        }
    }

    /// Euclidean distance from `λ` to the boundary `∂R` (unsigned).
    ///
    /// Segments and points have empty interior in ℂ, so their boundary is the whole set.
    pub fn dist_to_boundary(&self, lambda: Complex64) -> f64 {
        match self {
            ConvexRegion::Disk { center, radius } => ((lambda - center).norm() - radius).abs(),
            ConvexRegion::Polygon { vertices } => {
                let k = vertices.len();
                (0..k)
                    .map(|i| dist_to_segment(lambda, vertices[i], vertices[(i + 1) % k]))
                    .fold(f64::INFINITY, f64::min)
            }
            ConvexRegion::Segment { endpoints } => {
                dist_to_segment(lambda, endpoints[0], endpoints[1])
            }
            ConvexRegion::Point { value } => (lambda - value).norm(),
        }
    }

    /// `dist(λ, ∂R)` for interior points, zero otherwise.
    pub fn interior_depth(&self, lambda: Complex64) -> f64 {
        match self {
            ConvexRegion::Disk { center, radius } => (radius - (lambda - center).norm()).max(0.0),
            ConvexRegion::Polygon { .. } => {
                if self.contains(lambda, 0.0) {
                    self.dist_to_boundary(lambda)
                } else {
                    0.0
                }
            }
            ConvexRegion::Segment { .. } | ConvexRegion::Point { .. } => 0.0,
        }
    }

    /// Support function `h(θ) = max_{z ∈ R} Re(e^{−iθ} z)`.
    pub fn support(&self, theta: f64) -> f64 {
        let rot = Complex64::from_polar(1.0, -theta);
        match self {
            ConvexRegion::Disk { center, radius } => (rot * center).re + radius,
            other => other
                .extreme_points()
                .iter()
                .map(|z| (rot * z).re)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square() -> ConvexRegion {
        ConvexRegion::hull(vec![c(1.0, 1.0), c(-1.0, 1.0), c(-1.0, -1.0), c(1.0, -1.0)])
    }

    #[test]
    fn distance_examples() {
        let d = ConvexRegion::disk(c(0.0, 0.0), 1.0);
        assert!((d.dist_to_boundary(c(0.5, 0.0)) - 0.5).abs() < 1e-15);
        assert_eq!(d.dist_to_boundary(c(0.0, 0.0)), 1.0);
        assert!((square().dist_to_boundary(c(0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert_eq!(square().interior_depth(c(3.0, 0.0)), 0.0);
        assert!((square().dist_to_boundary(c(3.0, 0.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn hull_normal_forms() {
        assert!(matches!(square(), ConvexRegion::Polygon { ref vertices } if vertices.len() == 4));
        assert!(square().validate().is_ok());
        let seg = ConvexRegion::hull(vec![c(0.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)]);
        assert_eq!(seg, ConvexRegion::segment(c(0.0, 0.0), c(1.0, 0.0)));
        let pt = ConvexRegion::hull(vec![c(0.2, 0.2), c(0.2, 0.2)]);
        assert_eq!(pt, ConvexRegion::point(c(0.2, 0.2)));
        let cw = ConvexRegion::Polygon {
            vertices: vec![c(0.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)],
        };
        assert!(cw.validate().is_err());
    }

    #[test]
    fn diameters() {
        assert_eq!(ConvexRegion::disk(c(3.0, 0.0), 1.5).diameter(), 3.0);
        assert!((square().diameter() - 8f64.sqrt()).abs() < 1e-15);
        assert_eq!(ConvexRegion::point(c(1.0, 1.0)).diameter(), 0.0);
    }

    #[test]
    fn diameter_pair_tie_breaks() {
        let (l, n) = ConvexRegion::disk(c(0.0, 0.0), 1.0).diameter_pair();
        assert_eq!((l, n), (c(1.0, 0.0), c(-1.0, 0.0)));
        let (l, n) = ConvexRegion::disk(c(0.0, 0.5), 1.0).diameter_pair();
        assert!((l - c(0.0, 1.5)).norm() < 1e-15 && (n - c(0.0, -0.5)).norm() < 1e-15);
        // all four corner pairs have equal modulus; smallest argument is π/4
        let (l, _) = square().diameter_pair();
        assert_eq!(l, c(1.0, 1.0));
    }

    #[test]
    fn support_function_of_disk_and_polygon() {
        let d = ConvexRegion::disk(c(1.0, 0.0), 2.0);
        assert!((d.support(0.0) - 3.0).abs() < 1e-15);
        assert!((square().support(PI / 4.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn json_shape() {
        let r: ConvexRegion =
            serde_json::from_str(r#"{"kind":"disk","center":[0,0],"radius":1}"#).unwrap();
        assert_eq!(r, ConvexRegion::disk(c(0.0, 0.0), 1.0));
    }
}

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numrange::ConvexRegion;

/// A complex sequence indexed from `n = 1`, described by a small parametric family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sequence {
    /// `value` for every `n`.
    Constant { value: Complex64 },
    /// `scale / n`.
    Harmonic { scale: f64 },
    /// `center + radius·(1 − 1/(n+1))·exp(2πi·turn·n)`.
    Spiral {
        #[serde(default)]
        center: Complex64,
        radius: f64,
        turn: f64,
    },
    /// `values[(n − 1) mod len]`; a finite list is repeated periodically.
    Explicit { values: Vec<Complex64> },
    /// Independent uniform draws from the closed disk, one RNG stream per index.
    ///
    /// A missing `seed` is filled from the run seed before use.
    UniformDisk {
        #[serde(default)]
        center: Complex64,
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SequenceError {
    #[error("explicit sequence has no values")]
    EmptyExplicit,
    #[error("uniform_disk sequence has no seed")]
    Unseeded,
    #[error("sequence parameter is not finite")]
    NonFinite,
    #[error("radius must be non-negative, got {0}")]
    NegativeRadius(f64),
}

impl Sequence {
    pub fn constant(value: Complex64) -> Self {
        Sequence::Constant { value }
    }

    pub fn validate(&self) -> Result<(), SequenceError> {
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        match self {
            Sequence::Constant { value } if !finite(value) => Err(SequenceError::NonFinite),
            Sequence::Harmonic { scale } if !scale.is_finite() => Err(SequenceError::NonFinite),
            Sequence::Spiral { center, radius, turn } => {
                if !(finite(center) && radius.is_finite() && turn.is_finite()) {
                    Err(SequenceError::NonFinite)
                } else if *radius < 0.0 {
                    Err(SequenceError::NegativeRadius(*radius))
                } else {
                    Ok(())
                }
            }
            Sequence::Explicit { values } if values.is_empty() => Err(SequenceError::EmptyExplicit),
            Sequence::Explicit { values } if !values.iter().all(finite) => {
                Err(SequenceError::NonFinite)
            }
            Sequence::UniformDisk { center, radius, seed } => {
                if !(finite(center) && radius.is_finite()) {
                    Err(SequenceError::NonFinite)
                } else if *radius < 0.0 {
                    Err(SequenceError::NegativeRadius(*radius))
                } else if seed.is_none() {
                    Err(SequenceError::Unseeded)
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Replaces a missing `uniform_disk` seed with one derived from `run_seed` and `salt`.
    pub fn with_run_seed(&self, run_seed: u64, salt: u64) -> Sequence {
        match self {
            Sequence::UniformDisk {
                center,
                radius,
                seed: None,
            } => Sequence::UniformDisk {
                center: *center,
                radius: *radius,
                seed: Some(mix_seed(run_seed, salt)),
            },
            other => other.clone(),
        }
    }

    /// The `n`-th term, `n ≥ 1`.
    pub fn value(&self, n: usize) -> Complex64 {
        debug_assert!(n >= 1);
        match self {
            Sequence::Constant { value } => *value,
            Sequence::Harmonic { scale } => Complex64::new(scale / n as f64, 0.0),
            Sequence::Spiral { center, radius, turn } => {
                let r = radius * (1.0 - 1.0 / (n as f64 + 1.0));
                // reduce the phase before scaling to keep large n accurate
                let phase = (turn * n as f64).rem_euclid(1.0);
                center + Complex64::from_polar(r, 2.0 * PI * phase)
            }
            Sequence::Explicit { values } => values[(n - 1) % values.len()],
            Sequence::UniformDisk { center, radius, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
                rng.set_stream(n as u64);
                let u: f64 = rng.random();
                let t: f64 = rng.random();
                center + Complex64::from_polar(radius * u.sqrt(), 2.0 * PI * t)
            }
        }
    }

    /// The real part of the `n`-th term, for sequences used as weights.
    pub fn real_value(&self, n: usize) -> f64 {
        self.value(n).re
    }

    /// An upper bound for `sup |value(n)|`.
    pub fn sup_modulus(&self) -> f64 {
        match self {
            Sequence::Constant { value } => value.norm(),
            Sequence::Harmonic { scale } => scale.abs(),
            Sequence::Spiral { center, radius, .. } => center.norm() + radius,
            Sequence::Explicit { values } => values.iter().map(|v| v.norm()).fold(0.0, f64::max),
            Sequence::UniformDisk { center, radius, .. } => center.norm() + radius,
        }
    }

    /// Closed convex hull of the limit points, when it has a closed form.
    pub fn limit_hull(&self) -> Option<ConvexRegion> {
        match self {
            Sequence::Constant { value } => Some(ConvexRegion::point(*value)),
            Sequence::Harmonic { .. } => Some(ConvexRegion::point(Complex64::new(0.0, 0.0))),
            Sequence::Spiral { center, radius, turn } => {
                // a rational turn p/q visits q points; otherwise the orbit is dense on the circle
                match small_denominator(*turn) {
                    Some(q) => Some(ConvexRegion::hull(
                        (0..q)
                            .map(|k| {
                                center
                                    + Complex64::from_polar(
                                        *radius,
                                        2.0 * PI * (turn * k as f64).rem_euclid(1.0),
                                    )
                            })
                            .collect(),
                    )),
                    None => Some(ConvexRegion::disk(*center, *radius)),
                }
            }
            Sequence::Explicit { values } => Some(ConvexRegion::hull(values.clone())),
            Sequence::UniformDisk { center, radius, .. } => {
                Some(ConvexRegion::disk(*center, *radius))
            }
        }
    }
}

/// Denominator `q ≤ 64` with `turn·q` an integer (to 1e−12), if any.
fn small_denominator(turn: f64) -> Option<usize> {
    (1..=64).find(|&q| {
        let x = turn * q as f64;
        (x - x.round()).abs() < 1e-12
    })
}

/// SplitMix64 finalizer over the pair, so nearby seeds give unrelated streams.
pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_and_constant_terms() {
        let h = Sequence::Harmonic { scale: 1.0 };
        assert_eq!(h.value(1).re, 1.0);
        assert!((h.value(3).re - 1.0 / 3.0).abs() < 1e-16);
        let c = Sequence::constant(Complex64::new(0.25, -1.0));
        assert_eq!(c.value(99), Complex64::new(0.25, -1.0));
    }

    #[test]
    fn spiral_distance_to_unit_circle() {
        let s = Sequence::Spiral {
            center: Complex64::new(0.0, 0.0),
            radius: 1.0,
            turn: 0.3819,
        };
        for n in 1..50 {
            let d = 1.0 - s.value(n).norm();
            assert!((d - 1.0 / (n as f64 + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn explicit_is_periodic() {
        let e = Sequence::Explicit {
            values: vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)],
        };
        assert_eq!(e.value(1).re, 1.0);
        assert_eq!(e.value(4).re, 2.0);
    }

    #[test]
    fn uniform_disk_is_seeded_and_bounded() {
        let raw = Sequence::UniformDisk {
            center: Complex64::new(0.0, 0.0),
            radius: 0.55,
            seed: None,
        };
        assert_eq!(raw.validate(), Err(SequenceError::Unseeded));
        let a = raw.with_run_seed(7, 1);
        let b = raw.with_run_seed(7, 1);
        let c = raw.with_run_seed(7, 2);
        assert_eq!(a.value(10), b.value(10));
        assert_ne!(a.value(10), c.value(10));
        assert!((1..500).all(|n| a.value(n).norm() <= 0.55));
    }

    #[test]
    fn json_shape() {
        let s: Sequence =
            serde_json::from_str(r#"{"kind":"spiral","radius":1.0,"turn":0.3819}"#).unwrap();
        assert!(matches!(s, Sequence::Spiral { .. }));
        assert!(serde_json::from_str::<Sequence>(r#"{"kind":"harmonic","scale":1,"x":2}"#).is_err());
    }
}

//! Post-hoc verification of a constructed basis.
//!
//! Everything here is recomputed from the basis vectors, the operator and the seed family. The
//! only construction-time data consulted are the recorded factors and seed classes, which are
//! themselves replayed against fresh residual norms.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::forge::{FactorKind, LargeConstants, SeedFamily, StepRecord};
use crate::seqspace::{residual_against, FinVec, OperatorModel};

/// Tolerance for `|⟨uᵢ,uⱼ⟩ − δᵢⱼ|`.
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-10;
/// Tolerance for prescribed entries.
pub const ENTRY_TOLERANCE: f64 = 1e-9;
/// Additive slack for inequality audits.
pub const INEQUALITY_SLACK: f64 = 1e-8;
/// Relative tolerance for replayed decrement equalities.
pub const DECAY_EQUALITY_TOLERANCE: f64 = 1e-6;
/// Additive slack for replayed decrement inequalities.
pub const DECAY_INEQUALITY_SLACK: f64 = 1e-9;

/// One line of a [`VerificationReport`].
///
/// `worst` is the largest violation measure found and `at` its `[n, j]` index; the check passes
/// when `worst ≤ tolerance`. A check over an empty index set reports `worst = 0` at `[0, 0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub tolerance: f64,
    pub worst: f64,
    pub at: [usize; 2],
    pub pass: bool,
}

impl CheckResult {
    fn from_worst(name: &str, tolerance: f64, worst: Option<(f64, [usize; 2])>) -> Self {
        let (worst, at) = worst.unwrap_or((0.0, [0, 0]));
        Self {
            name: name.to_string(),
            tolerance,
            worst,
            at,
            pass: worst <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(checks: Vec<CheckResult>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self { checks, pass }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Keeps the larger violation; ties go to the lexicographically smaller index.
fn worse(a: Option<(f64, [usize; 2])>, b: Option<(f64, [usize; 2])>) -> Option<(f64, [usize; 2])> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) || x.0.is_nan() {
                Some(y)
            } else {
                Some(x)
            }
        }
    }
}

fn fold_worst(items: impl IntoIterator<Item = (f64, [usize; 2])>) -> Option<(f64, [usize; 2])> {
    items.into_iter().fold(None, |acc, x| worse(acc, Some(x)))
}

/// The matrix `⟨Tuₙ,uⱼ⟩` of `T` in the constructed family, with the norms of `Tuₙ` and `T*uₙ`.
#[derive(Clone, Debug, PartialEq)]
pub struct EntryGrid {
    rows: Vec<Vec<Complex64>>,
    image_norms_sqr: Vec<f64>,
    adjoint_norms_sqr: Vec<f64>,
}

impl EntryGrid {
    pub fn compute(t: &OperatorModel, us: &[FinVec]) -> Self {
        let images: Vec<(FinVec, f64)> = us
            .par_iter()
            .map(|u| {
                let tu = t.apply(u);
                let n2 = tu.norm_sqr();
                (tu, n2)
            })
            .collect();
        let adjoint_norms_sqr = us.par_iter().map(|u| t.apply_adjoint(u).norm_sqr()).collect();
        let rows = images
            .par_iter()
            .map(|(tu, _)| us.iter().map(|uj| tu.inner(uj)).collect())
            .collect();
        Self {
            rows,
            image_norms_sqr: images.into_iter().map(|(_, n2)| n2).collect(),
            adjoint_norms_sqr,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `⟨Tuₙ,uⱼ⟩`, indices from 1.
    pub fn entry(&self, n: usize, j: usize) -> Complex64 {
        self.rows[n - 1][j - 1]
    }

    /// `‖(I−P_k)Tuⱼ‖²` from the prefix sums of column data.
    pub fn image_residual_sqr(&self, j: usize, k: usize) -> f64 {
        let s: f64 = (1..=k).map(|i| self.entry(j, i).norm_sqr()).sum();
        self.image_norms_sqr[j - 1] - s
    }

    /// `‖(I−P_k)T*uⱼ‖²`, using `⟨T*uⱼ,uᵢ⟩ = conj⟨Tuᵢ,uⱼ⟩`.
    pub fn adjoint_residual_sqr(&self, j: usize, k: usize) -> f64 {
        let s: f64 = (1..=k).map(|i| self.entry(i, j).norm_sqr()).sum();
        self.adjoint_norms_sqr[j - 1] - s
    }
}

/// `max |⟨uᵢ,uⱼ⟩ − δᵢⱼ|` over all pairs, reported at `[i, j]`.
pub fn check_orthonormality(us: &[FinVec], tol: f64) -> CheckResult {
    let worst = (0..us.len())
        .into_par_iter()
        .map(|i| {
            fold_worst((i..us.len()).map(|j| {
                let target = if i == j { 1.0 } else { 0.0 };
                ((us[i].inner(&us[j]) - target).norm(), [i + 1, j + 1])
            }))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None, worse);
    CheckResult::from_worst("orthonormality", tol, worst)
}

/// `max |⟨Tuₙ,uⱼ⟩ − value|` over `(n, j, value)` targets inside the grid.
pub fn check_prescribed_entries(
    name: &str,
    grid: &EntryGrid,
    targets: &[(usize, usize, Complex64)],
    tol: f64,
) -> CheckResult {
    let worst = fold_worst(
        targets
            .iter()
            .filter(|(n, j, _)| *n <= grid.len() && *j <= grid.len())
            .map(|&(n, j, v)| ((grid.entry(n, j) - v).norm(), [n, j])),
    );
    CheckResult::from_worst(name, tol, worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// `|entry| ≤ bound`.
    Upper,
    /// `|entry| ≥ bound`.
    Lower,
}

/// Bound audit over the pairs selected by `include`; the violation is `|entry| − bound` for
/// upper bounds and `bound − |entry|` for lower ones, and must not exceed `slack`.
pub fn check_entry_bounds(
    name: &str,
    grid: &EntryGrid,
    bound: impl Fn(usize, usize) -> f64 + Sync,
    mode: BoundMode,
    include: impl Fn(usize, usize) -> bool + Sync,
    slack: f64,
) -> CheckResult {
    let n = grid.len();
    let worst = (1..=n)
        .into_par_iter()
        .map(|row| {
            fold_worst((1..=n).filter(|&j| include(row, j)).filter_map(|j| {
                let b = bound(row, j);
                if b.is_infinite() {
                    return None;
                }
                let e = grid.entry(row, j).norm();
                let v = match mode {
                    BoundMode::Upper => e - b,
                    BoundMode::Lower => b - e,
                };
                Some((v, [row, j]))
            }))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None, worse);
    CheckResult::from_worst(name, slack, worst)
}

/// `‖(I−P_k)y‖` for `k = 0..=N`, peeling one `uᵢ` off the running residual at a time.
fn residual_curve(y: &FinVec, us: &[FinVec]) -> Vec<f64> {
    let mut r = y.clone();
    let mut out = Vec::with_capacity(us.len() + 1);
    out.push(r.norm());
    for u in us {
        r = r.axpy(-r.inner(u), u);
        out.push(r.norm());
    }
    out
}

/// `‖(I−P_k)y‖²` from the residual vector itself, so small residuals keep their relative accuracy.
fn seed_residual_sqr(y: &FinVec, us: &[FinVec], k: usize) -> f64 {
    residual_against(y, us[..k].iter()).norm_sqr()
}

/// Replays every recorded decrement from fresh seed residual norms.
///
/// Equality factors must match `after/before` to relative 1e−6; upper-bound factors must satisfy
/// `after ≤ before·factor + 1e−9`. Recorded before/after values must match the replay to relative
/// 1e−6 as well. The violation at step `n` is reported at `[n, m(n)]`.
pub fn check_decay_ledger(us: &[FinVec], seeds: &SeedFamily, records: &[StepRecord]) -> CheckResult {
    let steps: Vec<&StepRecord> = records
        .iter()
        .filter(|r| r.n >= 1 && r.n <= us.len() && r.m.is_some() && r.factor.is_some() && r.factor_kind.is_some())
        .collect();
    let worst = steps
        .par_iter()
        .map(|rec| {
            let (m, factor) = (rec.m.unwrap_or(0), rec.factor.unwrap_or(1.0));
            let Some(y) = seeds.get(m) else {
                return (f64::INFINITY, [rec.n, m]);
            };
            let before = seed_residual_sqr(&y, us, rec.n - 1);
            let after = seed_residual_sqr(&y, us, rec.n);
            let scale = before.max(f64::MIN_POSITIVE);
            let mut v = match rec.factor_kind {
                Some(FactorKind::Equality) => (after - before * factor).abs() / scale / DECAY_EQUALITY_TOLERANCE,
                _ => (after - before * factor) / DECAY_INEQUALITY_SLACK,
            };
            for (recorded, replayed) in [(rec.seed_before, before), (rec.seed_after, after)] {
                if let Some(r) = recorded {
                    // measured against the mass in play at this step, so an absorbed seed (after = 0) compares sanely
                    let rel = (r - replayed).abs() / scale.max(replayed).max(r);
                    v = v.max(rel / DECAY_EQUALITY_TOLERANCE);
                }
            }
            (v, [rec.n, m])
        })
        .collect::<Vec<_>>();
    // violations are normalized by their own tolerance, so the threshold is 1
    CheckResult::from_worst("decay_ledger", 1.0, fold_worst(worst))
}

/// The claims a construction makes about its output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "construction", rename_all = "snake_case")]
pub enum Claims {
    /// `⟨Tuₙ,uₙ⟩ = λₙ` and zero entries for `1 ≤ |n−j| ≤ K`.
    Band { lambdas: Vec<Complex64>, k: usize },
    /// `⟨Tuₙ,uₙ⟩ = λₙ`, `⟨Tuₙ,uₙ₊₁⟩ = μₙ`, `⟨Tuₙ₊₁,uₙ⟩ = νₙ`, with the per-step `‖zₙ‖`, `‖bₙ‖`
    /// audits.
    Tridiag {
        lambdas: Vec<Complex64>,
        mus: Vec<Complex64>,
        nus: Vec<Complex64>,
        epsilon: f64,
    },
    /// `|⟨Tuₙ,uⱼ⟩| ≤ s·√(aₙaⱼ)` with `s = max{1, ‖T‖}`.
    Small { a: Vec<f64>, scale: f64 },
    /// Large diagonal, two-sided off-diagonal bounds, residual floors and plank shares.
    Large { constants: LargeConstants },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// Runs every check that applies to `claims`.
pub fn verify_basis(
    t: &OperatorModel,
    us: &[FinVec],
    seeds: &SeedFamily,
    records: &[StepRecord],
    claims: &Claims,
    options: VerifyOptions,
) -> VerificationReport {
    let run = || verify_inner(t, us, seeds, records, claims);
    match options.threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    }
}

fn verify_inner(
    t: &OperatorModel,
    us: &[FinVec],
    seeds: &SeedFamily,
    records: &[StepRecord],
    claims: &Claims,
) -> VerificationReport {
    let grid = EntryGrid::compute(t, us);
    let n = us.len();
    let mut checks = vec![
        check_orthonormality(us, ORTHONORMALITY_TOLERANCE),
        check_decay_ledger(us, seeds, records),
    ];
    let diag = |values: &[Complex64]| -> Vec<(usize, usize, Complex64)> {
        (1..=n.min(values.len())).map(|i| (i, i, values[i - 1])).collect()
    };
    match claims {
        Claims::Band { lambdas, k } => {
            checks.push(check_prescribed_entries("main_diagonal", &grid, &diag(lambdas), ENTRY_TOLERANCE));
            let zeros: Vec<_> = (1..=n)
                .flat_map(|a| (1..=n).filter(move |b| (1..=*k).contains(&a.abs_diff(*b))).map(move |b| (a, b)))
                .map(|(a, b)| (a, b, Complex64::new(0.0, 0.0)))
                .collect();
            checks.push(check_prescribed_entries("zero_band", &grid, &zeros, ENTRY_TOLERANCE));
        }
        Claims::Tridiag {
            lambdas,
            mus,
            nus,
            epsilon,
        } => {
            checks.push(check_prescribed_entries("main_diagonal", &grid, &diag(lambdas), ENTRY_TOLERANCE));
            let upper: Vec<_> = (1..n.min(mus.len() + 1)).map(|i| (i, i + 1, mus[i - 1])).collect();
            let lower: Vec<_> = (1..n.min(nus.len() + 1)).map(|i| (i + 1, i, nus[i - 1])).collect();
            checks.push(check_prescribed_entries("upper_diagonal", &grid, &upper, ENTRY_TOLERANCE));
            checks.push(check_prescribed_entries("lower_diagonal", &grid, &lower, ENTRY_TOLERANCE));
            let zb = 0.5 * epsilon.sqrt();
            let bn = epsilon * epsilon.sqrt() / 32.0;
            checks.push(CheckResult::from_worst(
                "z_norm_bound",
                1e-10,
                fold_worst(records.iter().filter_map(|r| r.z_norm.map(|z| (z - zb, [r.n, r.n])))),
            ));
            checks.push(CheckResult::from_worst(
                "b_norm",
                1e-12,
                fold_worst(records.iter().filter_map(|r| r.b_norm.map(|b| ((b - bn).abs(), [r.n, r.n])))),
            ));
        }
        Claims::Small { a, scale } => {
            let w = |i: usize| a.get(i - 1).copied().unwrap_or(f64::INFINITY);
            checks.push(check_entry_bounds(
                "small_entries",
                &grid,
                |p, q| scale * (w(p) * w(q)).sqrt() * (1.0 + INEQUALITY_SLACK),
                BoundMode::Upper,
                |_, _| true,
                0.0,
            ));
            checks.push(check_entry_bounds(
                "diagonal_bound",
                &grid,
                |p, _| scale * w(p),
                BoundMode::Upper,
                |p, q| p == q,
                INEQUALITY_SLACK,
            ));
        }
        Claims::Large { constants: k } => {
            checks.push(check_entry_bounds(
                "diagonal_lower",
                &grid,
                |_, _| k.d,
                BoundMode::Lower,
                |p, q| p == q,
                INEQUALITY_SLACK,
            ));
            checks.push(check_entry_bounds(
                "off_diagonal_lower",
                &grid,
                |p, q| k.lower(p, q),
                BoundMode::Lower,
                |p, q| p != q,
                INEQUALITY_SLACK,
            ));
            checks.push(check_entry_bounds(
                "off_diagonal_upper",
                &grid,
                |p, q| k.upper(p, q),
                BoundMode::Upper,
                |p, q| p != q,
                INEQUALITY_SLACK,
            ));
            checks.extend(large_checks(&grid, us, seeds, records, k));
        }
    }
    VerificationReport::new(checks)
}

/// Residual floors and plank shares, all from grid prefix sums.
fn large_checks(
    grid: &EntryGrid,
    us: &[FinVec],
    seeds: &SeedFamily,
    records: &[StepRecord],
    k: &LargeConstants,
) -> Vec<CheckResult> {
    let n = grid.len();
    let floors = (1..=n)
        .into_par_iter()
        .map(|j| {
            // k-sweeps reuse one running sum per kind
            let (mut s, mut sa) = (0.0, 0.0);
            let mut w = None;
            for kk in 1..=n {
                s += grid.entry(j, kk).norm_sqr();
                sa += grid.entry(kk, j).norm_sqr();
                if kk >= j {
                    let floor = k.residual_floor(j, kk);
                    let r = grid.image_norms_sqr[j - 1] - s;
                    let ra = grid.adjoint_norms_sqr[j - 1] - sa;
                    w = worse(w, Some((floor - r.min(ra), [kk, j])));
                }
            }
            w
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None, worse);

    // share of each residual captured by uₙ, rescaled by √(an) to the plank vector zₙ
    let shares = (1..=n)
        .into_par_iter()
        .map(|step| {
            let amp = (k.a * step as f64).sqrt();
            let tw = 1.0 / (2.0 * (step as f64).sqrt());
            let (mut t, mut ts) = (None, None);
            for j in 1..step {
                let r = grid.image_residual_sqr(j, step - 1).max(0.0).sqrt();
                let ra = grid.adjoint_residual_sqr(j, step - 1).max(0.0).sqrt();
                t = worse(t, Some((tw - grid.entry(j, step).norm() * amp / r, [step, j])));
                ts = worse(ts, Some((tw - grid.entry(step, j).norm() * amp / ra, [step, j])));
            }
            (t, ts)
        })
        .collect::<Vec<_>>();
    let (t, ts) = shares
        .into_iter()
        .fold((None, None), |(a, b), (x, y)| (worse(a, x), worse(b, y)));

    let mut z1 = None;
    for rec in records.iter().filter(|r| r.n <= n) {
        let Some(m) = rec.m else { continue };
        let Some(y) = seeds.get(m) else {
            z1 = worse(z1, Some((f64::INFINITY, [rec.n, m])));
            continue;
        };
        let before = seed_residual_sqr(&y, us, rec.n - 1).sqrt();
        if before <= crate::forge::MEMBERSHIP_TOLERANCE {
            continue;
        }
        let amp = (k.a * rec.n as f64).sqrt();
        let share = y.inner(&us[rec.n - 1]).norm() * amp / before;
        z1 = worse(z1, Some((std::f64::consts::FRAC_1_SQRT_2 - share, [rec.n, m])));
    }
    vec![
        CheckResult::from_worst("residual_floor", INEQUALITY_SLACK, floors),
        CheckResult::from_worst("plank_seed", INEQUALITY_SLACK, z1),
        CheckResult::from_worst("plank_image", INEQUALITY_SLACK, t),
        CheckResult::from_worst("plank_adjoint", INEQUALITY_SLACK, ts),
    ]
}

/// `re+imi` with 17 significant digits, e.g. `1.0000000000000000e0-2.5000000000000000e-1i`.
pub fn format_complex(z: Complex64) -> String {
    format!("{:.16e}{:+.16e}i", z.re, z.im)
}

/// Inverse of [`format_complex`].
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let body = s.strip_suffix('i')?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))?;
    let re = body[..split].parse().ok()?;
    let im = body[split..].trim_start_matches('+').parse().ok()?;
    Some(Complex64::new(re, im))
}

/// The leading `size × size` block as CSV: row `j`, column `n` holds `⟨Tuₙ,uⱼ⟩`.
///
/// The header is `j` followed by the column indices; `size = 0` gives the header alone.
pub fn matrix_csv(grid: &EntryGrid, size: usize) -> String {
    let size = size.min(grid.len());
    let mut out = String::from("j");
    for n in 1..=size {
        let _ = write!(out, ",{n}");
    }
    out.push('\n');
    for j in 1..=size {
        let _ = write!(out, "{j}");
        for n in 1..=size {
            let _ = write!(out, ",{}", format_complex(grid.entry(n, j)));
        }
        out.push('\n');
    }
    out
}

/// The same block as JSON: `{"size": k, "rows": [[[re, im], …], …]}` with `rows[j−1][n−1]`.
pub fn matrix_json(grid: &EntryGrid, size: usize) -> serde_json::Value {
    let size = size.min(grid.len());
    let rows: Vec<Vec<[f64; 2]>> = (1..=size)
        .map(|j| {
            (1..=size)
                .map(|n| {
                    let e = grid.entry(n, j);
                    [e.re, e.im]
                })
                .collect()
        })
        .collect();
    serde_json::json!({ "size": size, "rows": rows })
}

/// `(n, m, ‖(I−Pₙ)yₘ‖)` for every seed that appears in the records, after every step.
pub fn decay_curves(us: &[FinVec], seeds: &SeedFamily, records: &[StepRecord]) -> Vec<(usize, usize, f64)> {
    let mut ms: Vec<usize> = records.iter().filter_map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    let mut out = Vec::new();
    for m in ms {
        let Some(y) = seeds.get(m) else { continue };
        for (k, r) in residual_curve(&y, us).into_iter().enumerate() {
            out.push((k, m, r));
        }
    }
    out
}

pub fn decay_csv(curves: &[(usize, usize, f64)]) -> String {
    let mut out = String::from("n,m,residual_norm\n");
    for (n, m, r) in curves {
        let _ = writeln!(out, "{n},{m},{r:.16e}");
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
    fn standard_prefix_is_orthonormal() {
        let us: Vec<FinVec> = (1..=6).map(FinVec::basis).collect();
        let r = check_orthonormality(&us, 1e-10);
        assert!(r.pass);
        assert_eq!(r.worst, 0.0);
    }

    #[test]
    fn duplicate_vector_violates_by_one() {
        let us = vec![FinVec::basis(1), FinVec::basis(1)];
        let r = check_orthonormality(&us, 1e-10);
        assert!(!r.pass);
        assert_eq!(r.worst, 1.0);
        assert_eq!(r.at, [1, 2]);
    }

    #[test]
    fn shift_grid_has_unit_subdiagonal() {
        let us: Vec<FinVec> = (1..=5).map(FinVec::basis).collect();
        let g = EntryGrid::compute(&OperatorModel::shift(), &us);
        // S e_n = e_{n+1}: row n+1, column n
        assert_eq!(g.entry(2, 3), c(1.0, 0.0));
        assert_eq!(g.entry(3, 2), c(0.0, 0.0));
        let csv = matrix_csv(&g, 3);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "j,1,2,3");
        assert_eq!(parse_complex(lines[2].split(',').nth(1).unwrap()), Some(c(1.0, 0.0)));
        assert_eq!(matrix_csv(&g, 0), "j\n");
    }

    #[test]
    fn empty_targets_and_infinite_bounds_are_vacuous() {
        let us: Vec<FinVec> = (1..=3).map(FinVec::basis).collect();
        let g = EntryGrid::compute(&OperatorModel::shift(), &us);
        assert!(check_prescribed_entries("x", &g, &[], 1e-9).pass);
        let r = check_entry_bounds("y", &g, |_, _| f64::INFINITY, BoundMode::Upper, |_, _| true, 0.0);
        assert!(r.pass && r.at == [0, 0]);
        assert!(check_decay_ledger(&us, &SeedFamily::default(), &[]).pass);
    }

    #[test]
    fn complex_format_round_trips() {
        for z in [
            c(0.1, -0.2),
            c(-1e-300, 5e300),
            c(std::f64::consts::PI, std::f64::consts::E),
            c(0.0, -0.0),
        ] {
            let back = parse_complex(&format_complex(z)).unwrap();
            assert_eq!(back.re.to_bits(), z.re.to_bits());
            assert_eq!(back.im.to_bits(), z.im.to_bits());
        }
    }

    #[test]
    fn tie_break_prefers_smaller_index() {
        let w = fold_worst([(1.0, [3, 1]), (1.0, [2, 5]), (0.5, [1, 1])]);
        assert_eq!(w, Some((1.0, [2, 5])));
    }
}

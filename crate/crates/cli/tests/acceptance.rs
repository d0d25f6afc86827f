//! The eight acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use forge_cli::config::RunConfig;
use forge_cli::run::{build_run, verify_run, StateFile, STATE_FILE, STEPS_FILE, REPORT_FILE};
use forge_core::forge::{lemma2d_state, pearcy_state, LargeConstants, PEARCY_TOLERANCE};
use forge_core::numrange::{find_state_with_value, numerical_range_boundary, rayleigh, CMatrix, CVector};
use forge_core::seqspace::{FinVec, OperatorKind, OperatorModel};
use forge_core::verify::VerificationReport;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn build(config: &str, dir: &Path) -> Result<(VerificationReport, Duration), String> {
    let cfg = RunConfig::parse(config).map_err(|e| e.to_string())?;
    let t0 = Instant::now();
    let s = build_run(&cfg, dir).map_err(|e| e.to_string())?;
    Ok((s.report, t0.elapsed()))
}

/// Requires every named check to be present and passing; returns their worst values.
fn require(report: &VerificationReport, names: &[&str]) -> Outcome {
    let mut parts = Vec::new();
    for name in names {
        let ch = report.check(name).ok_or(format!("missing check {name}"))?;
        if !ch.pass {
            return Err(format!("{name}: worst {:.3e} at {:?} > {:.1e}", ch.worst, ch.at, ch.tolerance));
        }
        parts.push(format!("{name} {:.1e}", ch.worst));
    }
    if !report.pass {
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
        return Err(format!("report failed: {}", failed.join(", ")));
    }
    Ok(parts.join("; "))
}

fn band(tmp: &Path) -> Outcome {
    let cfg = r#"{"construction":"band","operator":{"kind":"shift"},"steps":200,"K":3,
        "lambda_spec":{"kind":"spiral","radius":1.0,"turn":0.3819},"seed":1}"#;
    let (r, dt) = build(cfg, &tmp.join("band"))?;
    let s = require(&r, &["main_diagonal", "zero_band", "orthonormality", "decay_ledger"])?;
    if dt > Duration::from_secs(120) {
        return Err(format!("wall time {dt:?} exceeds 120 s"));
    }
    Ok(format!("{s}; {:.1} s", dt.as_secs_f64()))
}

fn window(tmp: &Path) -> Outcome {
    let cfg = r#"{"construction":"band","operator":{"kind":"shift"},"steps":150,"K":4,
        "lambda_spec":{"kind":"constant","value":[0.0,0.0]},"seed":2}"#;
    let (r, _) = build(cfg, &tmp.join("window"))?;
    require(&r, &["main_diagonal", "zero_band", "orthonormality"])
}

fn tridiag(tmp: &Path) -> Outcome {
    let bound: f64 = 0.2 * 0.2f64.sqrt() / 16.0;
    if (bound - 5.590169943749474e-3).abs() > 1e-15 || 5.0e-3 >= bound {
        return Err(format!("off-diagonal bound {bound}"));
    }
    let cfg = r#"{"construction":"tridiag","operator":{"kind":"shift"},"steps":150,"epsilon":0.2,
        "lambda_spec":{"kind":"uniform_disk","radius":0.55},
        "mu_spec":{"kind":"uniform_disk","radius":5.0e-3},
        "nu_spec":{"kind":"uniform_disk","radius":5.0e-3},"seed":3}"#;
    let (r, _) = build(cfg, &tmp.join("tridiag"))?;
    require(
        &r,
        &["main_diagonal", "upper_diagonal", "lower_diagonal", "z_norm_bound", "b_norm", "orthonormality"],
    )
}

fn small(tmp: &Path) -> Outcome {
    let cfg = r#"{"construction":"small","operator":{"kind":"shift"},"steps":150,
        "a_spec":{"kind":"harmonic","scale":1.0},"seed":4}"#;
    let (r, _) = build(cfg, &tmp.join("small"))?;
    let s = require(&r, &["small_entries", "diagonal_bound", "decay_ledger", "orthonormality"])?;
    // the decrement factors must be the exact form 1 − a′ₙ/4
    let st = StateFile::load(&tmp.join("small")).map_err(|e| e.to_string())?;
    for rec in st.records.iter().filter(|r| r.factor.is_some()) {
        let f = 1.0 - rec.a_prime.ok_or("missing a′")? / 4.0;
        if (rec.factor.unwrap() - f).abs() > 1e-15 {
            return Err(format!("step {}: factor {} ≠ 1 − a′/4", rec.n, rec.factor.unwrap()));
        }
    }
    Ok(s)
}

fn large(tmp: &Path) -> Outcome {
    let k = LargeConstants::derive(0.35, 0.49);
    let close = |x: f64, y: f64| (x / y - 1.0).abs() < 5e-4;
    if !(close(k.a, 1.943e5) && close(k.c1, 2.647e-4) && close(k.c2, 2.268e-3) && k.d == 0.245) {
        return Err(format!("constants {k:?}"));
    }
    let cfg = r#"{"construction":"large","operator":{"kind":"shift"},"steps":120,"C":0.35,"D":0.49,"seed":5}"#;
    let (r, _) = build(cfg, &tmp.join("large"))?;
    require(
        &r,
        &[
            "diagonal_lower",
            "off_diagonal_lower",
            "off_diagonal_upper",
            "residual_floor",
            "decay_ledger",
            "plank_seed",
            "plank_image",
            "plank_adjoint",
            "orthonormality",
        ],
    )
}

fn random_sparse(rng: &mut ChaCha8Rng, max_index: usize) -> FinVec {
    let len = rng.random_range(1..6);
    FinVec::from_pairs((0..len).map(|_| {
        (
            rng.random_range(1..=max_index),
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
        )
    }))
}

fn lemma_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s = OperatorModel::shift();
    let eps = 0.2;
    let cons: Vec<FinVec> = (0..4).map(|_| random_sparse(&mut rng, 40)).collect();
    let st = lemma2d_state(&s, c(0.1, -0.2), eps, &cons).map_err(|e| e.to_string())?;
    let mut worst_fit: f64 = 0.0;
    for _ in 0..1000 {
        let alpha = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let beta = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let z = st.solve(alpha, beta);
        let fit = (st.w.inner(&z) - alpha).norm().max((st.w_prime.inner(&z) - beta).norm());
        worst_fit = worst_fit.max(fit);
        if fit > 1e-10 {
            return Err(format!("z misses (α, β) by {fit:.3e}"));
        }
        let bound = 2.0 * (alpha.norm() + beta.norm()) / eps + 1e-10;
        if z.norm() > bound {
            return Err(format!("‖z‖ = {} exceeds {bound}", z.norm()));
        }
    }

    let ops = [
        OperatorModel::shift(),
        OperatorModel::new(OperatorKind::Affine {
            alpha: Complex64::from_polar(0.9, 0.7),
            beta: c(0.05, -0.05),
            inner: Box::new(OperatorModel::shift()),
        }),
    ];
    for i in 0..50 {
        let t = &ops[i % ops.len()];
        let diam = t.essential_range().map_err(|e| e.to_string())?.diameter();
        let cc = (diam / (4.0 * 2f64.sqrt()) - 1e-6) * rng.random_range(0.3..0.99);
        let dd = (diam / 4.0 - 1e-6) * rng.random_range(0.3..0.99);
        let cons: Vec<FinVec> = (0..rng.random_range(0..8)).map(|_| random_sparse(&mut rng, 300)).collect();
        let p = pearcy_state(t, &cons, cc, dd, None).map_err(|e| format!("set {i}: {e}"))?;
        let u = &p.u;
        let tu = t.apply(u);
        let tsu = t.apply_adjoint(u);
        let value = tu.inner(u);
        let def = tu.axpy(-value, u).norm();
        let defa = tsu.axpy(-tsu.inner(u), u).norm();
        if (u.norm() - 1.0).abs() > 1e-12
            || value.norm() < dd - PEARCY_TOLERANCE
            || def.min(defa) < cc - PEARCY_TOLERANCE
        {
            return Err(format!("set {i}: |⟨Tu,u⟩| = {}, defects {def}, {defa}", value.norm()));
        }
        for x in &cons {
            let leak = u.inner(x).norm().max(tu.inner(x).norm()).max(tsu.inner(x).norm());
            if leak > 1e-14 {
                return Err(format!("set {i}: constraint leak {leak:.3e}"));
            }
        }
    }
    Ok(format!("z-solver worst {worst_fit:.1e}; 50 pearcy sets"))
}

fn jordan(k: usize) -> CMatrix {
    CMatrix::from_fn(k, k, |i, j| if j == i + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// `(λ_max, ⟨Mx,x⟩)` of the Hermitian part of `e^{−iθ}M` by shifted power iteration.
fn power_oracle(m: &CMatrix, theta: f64) -> (f64, Complex64) {
    let k = m.nrows();
    let rot = Complex64::from_polar(1.0, -theta);
    let h = |i: usize, j: usize| 0.5 * (rot * m[(i, j)] + (rot * m[(j, i)]).conj());
    let shift: f64 = (0..k).map(|i| (0..k).map(|j| h(i, j).norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut x: Vec<Complex64> = (0..k).map(|i| c(1.0 + 0.1 * i as f64, 0.3)).collect();
    for _ in 0..20_000 {
        let y: Vec<Complex64> = (0..k)
            .map(|i| (0..k).map(|j| h(i, j) * x[j]).sum::<Complex64>() + x[i] * shift)
            .collect();
        let n = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        x = y.into_iter().map(|v| v / n).collect();
    }
    let hx: Vec<Complex64> = (0..k).map(|i| (0..k).map(|j| h(i, j) * x[j]).sum()).collect();
    let lam = (0..k).map(|i| x[i].conj() * hx[i]).sum::<Complex64>().re;
    let mx: Complex64 = (0..k)
        .map(|i| x[i].conj() * (0..k).map(|j| m[(i, j)] * x[j]).sum::<Complex64>())
        .sum();
    (lam, mx)
}

fn numrange_oracles() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in [2usize, 5, 12] {
        let m = jordan(k);
        let radius = (PI / (k as f64 + 1.0)).cos();
        let b = numerical_range_boundary(&m, 256).map_err(|e| e.to_string())?;
        for p in &b.points {
            let (lam, value) = power_oracle(&m, p.theta);
            let err = (p.support - lam)
                .abs()
                .max((p.value - value).norm())
                .max((p.value.norm() - radius).abs());
            worst = worst.max(err);
            if err > 1e-6 {
                return Err(format!("k = {k}, θ = {}: deviation {err:.3e}", p.theta));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..100 {
        let k = rng.random_range(2..9);
        let m = CMatrix::from_fn(k, k, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let x0 = CVector::from_fn(k, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let x0 = &x0 / Complex64::new(x0.norm(), 0.0);
        let lambda = rayleigh(&m, &x0);
        let x = find_state_with_value(&m, lambda, 0.0).map_err(|e| format!("case {case}: {e}"))?;
        let err = (rayleigh(&m, &x) - lambda).norm();
        if err > 1e-11 || (x.norm() - 1.0).abs() > 1e-12 {
            return Err(format!("case {case}: value error {err:.3e}"));
        }
    }
    Ok(format!("Jordan sweeps within {worst:.1e}; 100 inverse cases"))
}

fn read(p: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()))
}

fn determinism_and_tamper(tmp: &Path) -> Outcome {
    let cfg = r#"{"construction":"band","operator":{"kind":"shift"},"steps":60,"K":3,
        "lambda_spec":{"kind":"spiral","radius":0.9,"turn":0.2718},"seed":8}"#;
    let (a, b) = (tmp.join("det_a"), tmp.join("det_b"));
    build(cfg, &a)?;
    build(cfg, &b)?;
    for f in [STATE_FILE, STEPS_FILE, REPORT_FILE] {
        if read(&a.join(f))? != read(&b.join(f))? {
            return Err(format!("{f} differs between identical builds"));
        }
    }
    if !verify_run(&a).map_err(|e| e.to_string())?.pass {
        return Err("untampered run fails verification".into());
    }
    // coefficients of modulus ≥ 1e−4 move ‖u‖² by ≥ 2e−10 under a 1e−6 change along their phase
    let original = StateFile::load(&a).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut tried = 0;
    while tried < 12 {
        let n = rng.random_range(0..original.basis.len());
        let coeffs: Vec<(usize, Complex64)> = original.basis[n].iter().filter(|(_, z)| z.norm() >= 1e-4).collect();
        if coeffs.is_empty() {
            continue;
        }
        let (idx, z) = coeffs[rng.random_range(0..coeffs.len())];
        let mut tampered = original.clone();
        tampered.basis[n] = FinVec::from_pairs(
            original.basis[n]
                .iter()
                .map(|(k, w)| if k == idx { (k, w + z / z.norm() * 1e-6) } else { (k, w) }),
        );
        let dir = tmp.join(format!("tamper_{tried}"));
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        std::fs::write(dir.join(STATE_FILE), serde_json::to_vec(&tampered).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        if verify_run(&dir).map_err(|e| e.to_string())?.pass {
            return Err(format!("perturbing u_{} at e_{idx} went undetected", n + 1));
        }
        tried += 1;
    }
    Ok("3 files byte-identical; 12/12 perturbations detected".into())
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let p = tmp.path();
    let criteria: Vec<Criterion> = vec![
        ("band construction, shift, K = 3, N = 200", Box::new(|| band(p))),
        ("zero window, shift, K = 4, N = 150", Box::new(|| window(p))),
        ("tridiagonal, shift, ε = 0.2, N = 150", Box::new(|| tridiag(p))),
        ("small entries, aₙ = 1/n, N = 150", Box::new(|| small(p))),
        ("large entries, C = 0.35, D = 0.49, N = 120", Box::new(|| large(p))),
        ("lemma-level oracles", Box::new(lemma_oracles)),
        ("numerical-range oracles", Box::new(numrange_oracles)),
        ("determinism and tamper detection", Box::new(|| determinism_and_tamper(p))),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS  {name}  [{detail}]", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {}: FAIL  {name}  [{why}]", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}

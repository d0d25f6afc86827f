use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ForgeError;
use crate::seqspace::{FinVec, OrthoFamily, DEFAULT_GRAM_TOLERANCE};

/// The seed vectors `y₁, y₂, …` whose residual norms track completeness of the family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedFamily {
    /// `y_k = e_k`.
    Standard {},
    /// `y_k = vectors[k − 1]`; indices past the end are unavailable.
    Explicit { vectors: Vec<FinVec> },
}

impl Default for SeedFamily {
    fn default() -> Self {
        SeedFamily::Standard {}
    }
}

impl SeedFamily {
    /// `y_k` for `k ≥ 1`.
    pub fn get(&self, k: usize) -> Option<FinVec> {
        match self {
            SeedFamily::Standard {} => (k >= 1).then(|| FinVec::basis(k)),
            SeedFamily::Explicit { vectors } => k.checked_sub(1).and_then(|i| vectors.get(i)).cloned(),
        }
    }

    pub(crate) fn fetch(&self, step: usize, k: usize) -> Result<FinVec, ForgeError> {
        self.get(k).ok_or(ForgeError::SeedsExhausted { step, index: k })
    }

    /// Number of available seeds, `None` when unbounded.
    pub fn available(&self) -> Option<usize> {
        match self {
            SeedFamily::Standard {} => None,
            SeedFamily::Explicit { vectors } => Some(vectors.len()),
        }
    }

    /// Explicit seeds must be orthonormal to `DEFAULT_GRAM_TOLERANCE`.
    pub fn validate(&self) -> Result<(), ForgeError> {
        if let SeedFamily::Explicit { vectors } = self {
            if vectors.is_empty() {
                return Err(ForgeError::InvalidParameters("explicit seed family is empty".into()));
            }
            let err = OrthoFamily::from_vectors(vectors.clone(), DEFAULT_GRAM_TOLERANCE).gram_error();
            if err > DEFAULT_GRAM_TOLERANCE {
                return Err(ForgeError::InvalidParameters(format!(
                    "explicit seeds are not orthonormal (Gram error {err:.3e})"
                )));
            }
        }
        Ok(())
    }
}

/// `‖(I − Pₙ)yₘ‖²` histories for every seed assigned so far.
///
/// A seed enters the ledger at its first assignment with a directly computed value; later values
/// subtract `|⟨yₘ, uₙ⟩|²` step by step, so each history is non-increasing by construction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedLedger {
    pub histories: BTreeMap<usize, Vec<(usize, f64)>>,
}

impl SeedLedger {
    pub(crate) fn track(&mut self, m: usize, n: usize, residual_sqr: f64) {
        self.histories.entry(m).or_insert_with(|| vec![(n, residual_sqr)]);
    }

    pub(crate) fn advance(&mut self, n: usize, u: &FinVec, seed_of: impl Fn(usize) -> Option<FinVec>) {
        for (&m, hist) in self.histories.iter_mut() {
            let Some(y) = seed_of(m) else { continue };
            let last = hist.last().map(|&(_, r)| r).unwrap_or(1.0);
            hist.push((n, (last - y.inner(u).norm_sqr()).max(0.0)));
        }
    }

    /// Latest recorded `‖(I − P)yₘ‖²`.
    pub fn latest(&self, m: usize) -> Option<f64> {
        self.histories.get(&m).and_then(|h| h.last()).map(|&(_, r)| r)
    }
}

/// How a recorded residual factor relates the seed norms before and after a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    /// `after = before · factor`.
    Equality,
    /// `after ≤ before · factor`.
    UpperBound,
}

/// Which branch of a step produced `uₙ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepBranch {
    /// `uₙ` is a fresh far state.
    Fresh,
    /// `uₙ` mixes a fresh state with the seed residual.
    Mixed,
    /// The seed already lay in the span, so no mixing happened.
    SeedInSpan,
}

/// Plank certificate margins at one step of the large-entry construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlankAudit {
    /// `Σ aⱼ²` over the weights.
    pub weight_sum: f64,
    /// `|⟨s, z⟩| − ‖s‖/√2` for the seed residual `s`.
    pub seed_margin: f64,
    /// `min_j |⟨(I−P)Tuⱼ, z⟩| − ‖(I−P)Tuⱼ‖/(2√n)`, `+∞` when `n = 1`.
    pub t_margin: f64,
    /// The same for `T*uⱼ`.
    pub tstar_margin: f64,
    /// `‖z‖ − 1`.
    pub norm_defect: f64,
}

/// Per-step audit data. Fields that do not apply to a construction are absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub branch: StepBranch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Complex64>,
    pub diagonal: Complex64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_prime: Option<f64>,
    /// `d(n)` when it is determined inside the prefix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Largest seed index the fresh state is kept orthogonal to, with images.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orthogonal_through: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_prime: Option<Complex64>,
    /// `√(1 − ‖zₙ + bₙ‖²)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// `|⟨Tvₙ, vₙ⟩|` and the two defect norms of the large-entry state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pearcy: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plank: Option<PlankAudit>,
    /// `‖(I − P_{n−1})y_{m(n)}‖²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_before: Option<f64>,
    /// `‖(I − Pₙ)y_{m(n)}‖²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_after: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor_kind: Option<FactorKind>,
}

impl StepRecord {
    pub fn new(n: usize, branch: StepBranch, diagonal: Complex64) -> Self {
        Self {
            n,
            m: None,
            branch,
            target: None,
            diagonal,
            rho: None,
            delta: None,
            mu: None,
            c: None,
            a_prime: None,
            d: None,
            orthogonal_through: None,
            z_norm: None,
            z_bound: None,
            b_norm: None,
            lambda_prime: None,
            scale: None,
            pearcy: None,
            plank: None,
            seed_before: None,
            seed_after: None,
            factor: None,
            factor_kind: None,
        }
    }

    /// Every recorded real scalar is finite and any factor lies in `[0, 1]`.
    ///
    /// A zero factor means the seed was absorbed completely.
    pub fn is_well_formed(&self) -> bool {
        let reals = [
            self.rho,
            self.delta,
            self.c,
            self.a_prime,
            self.z_norm,
            self.z_bound,
            self.b_norm,
            self.scale,
            self.seed_before,
            self.seed_after,
            self.factor,
        ];
        let complexes = [self.target, Some(self.diagonal), self.mu, self.lambda_prime];
        reals.iter().flatten().all(|x| x.is_finite())
            && complexes.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.factor.is_none_or(|f| (0.0..=1.0).contains(&f))
    }
}

/// The last step's auxiliary vectors.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Auxiliaries {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<FinVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<FinVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<FinVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<FinVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_prime: Option<FinVec>,
}

/// The growing family together with its seeds, ledger and audit trail.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildState {
    pub us: OrthoFamily,
    pub seeds: SeedFamily,
    pub ledger: SeedLedger,
    pub records: Vec<StepRecord>,
    #[serde(default)]
    pub aux: Auxiliaries,
}

impl BuildState {
    pub fn new(seeds: SeedFamily) -> Self {
        Self {
            seeds,
            ..Self::default()
        }
    }

    /// Number of completed steps.
    pub fn len(&self) -> usize {
        self.us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.us.is_empty()
    }

    /// `(I − P)y_k` against the current family.
    pub(crate) fn seed_residual(&self, step: usize, k: usize) -> Result<FinVec, ForgeError> {
        Ok(self.us.residual(&self.seeds.fetch(step, k)?))
    }

    /// Appends `uₙ` and its record, advancing the seed ledger.
    pub(crate) fn push(&mut self, u: FinVec, record: StepRecord) {
        let n = self.us.len() + 1;
        debug_assert_eq!(record.n, n);
        let seeds = &self.seeds;
        self.ledger.advance(n, &u, |m| seeds.get(m));
        self.us.push(u);
        self.records.push(record);
    }
}

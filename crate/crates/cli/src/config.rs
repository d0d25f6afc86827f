use std::path::Path;

use forge_core::forge::{BandParams, LargeParams, SeedFamily, SmallParams, TridiagParams};
use forge_core::seqspace::{OperatorModel, Sequence};
use forge_core::verify::Claims;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

// Salts that keep the random streams of different inputs apart.
const SALT_OPERATOR: u64 = 1;
const SALT_LAMBDA: u64 = 101;
const SALT_MU: u64 = 102;
const SALT_NU: u64 = 103;
const SALT_A: u64 = 104;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Band,
    Tridiag,
    Small,
    Large,
}

/// A build configuration. Which optional fields are required depends on `construction`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub construction: Construction,
    pub operator: OperatorModel,
    pub steps: usize,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_spec: Option<Sequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_spec: Option<Sequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_spec: Option<Sequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_spec: Option<Sequence>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Seed vectors `y₁, y₂, …`; the standard basis when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<SeedFamily>,
}

/// Everything a build needs, with random inputs pinned to the run seed.
#[derive(Clone, Debug, PartialEq)]
pub enum Plan {
    Band {
        lambdas: Vec<Complex64>,
        params: BandParams,
    },
    Tridiag {
        lambdas: Vec<Complex64>,
        mus: Vec<Complex64>,
        nus: Vec<Complex64>,
        params: TridiagParams,
    },
    Small {
        a: Vec<f64>,
        params: SmallParams,
    },
    Large {
        params: LargeParams,
    },
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
        cfg.plan()?;
        Ok(cfg)
    }

    /// The operator with unseeded random sequences filled from `seed`.
    pub fn operator(&self) -> OperatorModel {
        self.operator.with_run_seed(self.seed, SALT_OPERATOR)
    }

    fn sequence(&self, spec: &Option<Sequence>, field: &str, salt: u64) -> Result<Vec<Complex64>, CliError> {
        let s = spec
            .as_ref()
            .ok_or_else(|| CliError::Input(format!("{field} is required for this construction")))?
            .with_run_seed(self.seed, salt);
        s.validate().map_err(|e| CliError::Input(format!("{field}: {e}")))?;
        Ok((1..=self.steps).map(|n| s.value(n)).collect())
    }

    fn require(&self, v: Option<f64>, field: &str) -> Result<f64, CliError> {
        v.ok_or_else(|| CliError::Input(format!("{field} is required for this construction")))
    }

    pub fn plan(&self) -> Result<Plan, CliError> {
        if self.steps == 0 {
            return Err(CliError::Input("steps must be positive".into()));
        }
        self.operator()
            .validate()
            .map_err(|e| CliError::Input(format!("operator: {e}")))?;
        let seeds = self.seeds.clone().unwrap_or_default();
        let n = self.steps;
        Ok(match self.construction {
            Construction::Band => {
                let k = self.k.ok_or_else(|| CliError::Input("K is required for band".into()))?;
                let mut params = BandParams::new(k, n);
                params.seeds = seeds;
                Plan::Band {
                    lambdas: self.sequence(&self.lambda_spec, "lambda_spec", SALT_LAMBDA)?,
                    params,
                }
            }
            Construction::Tridiag => {
                let mut params = TridiagParams::new(self.require(self.epsilon, "epsilon")?, n);
                params.seeds = seeds;
                Plan::Tridiag {
                    lambdas: self.sequence(&self.lambda_spec, "lambda_spec", SALT_LAMBDA)?,
                    mus: self.sequence(&self.mu_spec, "mu_spec", SALT_MU)?,
                    nus: self.sequence(&self.nu_spec, "nu_spec", SALT_NU)?,
                    params,
                }
            }
            Construction::Small => {
                let mut params = SmallParams::new(n);
                params.seeds = seeds;
                Plan::Small {
                    a: self
                        .sequence(&self.a_spec, "a_spec", SALT_A)?
                        .into_iter()
                        .map(|z| z.re)
                        .collect(),
                    params,
                }
            }
            Construction::Large => {
                let mut params = LargeParams::new(self.require(self.c, "C")?, self.require(self.d, "D")?, n);
                params.seeds = seeds;
                params.epsilon = self.epsilon;
                params.seed = self.seed;
                Plan::Large { params }
            }
        })
    }
}

impl Plan {
    /// The claims the verifier checks for this plan.
    pub fn claims(&self, t: &OperatorModel) -> Claims {
        match self {
            Plan::Band { lambdas, params } => Claims::Band {
                lambdas: lambdas.clone(),
                k: params.k,
            },
            Plan::Tridiag {
                lambdas,
                mus,
                nus,
                params,
            } => Claims::Tridiag {
                lambdas: lambdas.clone(),
                mus: mus.clone(),
                nus: nus.clone(),
                epsilon: params.epsilon,
            },
            Plan::Small { a, .. } => Claims::Small {
                a: a.clone(),
                scale: t.norm_bound().max(1.0),
            },
            Plan::Large { params } => Claims::Large {
                constants: params.constants(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_config_parses() {
        let cfg = RunConfig::parse(
            r#"{"construction":"band","operator":{"kind":"shift"},"steps":5,"K":2,
                "lambda_spec":{"kind":"constant","value":[0.0,0.0]},"seed":3}"#,
        )
        .unwrap();
        assert!(matches!(cfg.plan().unwrap(), Plan::Band { ref lambdas, .. } if lambdas.len() == 5));
    }

    #[test]
    fn unknown_and_missing_fields_are_rejected() {
        let unknown = r#"{"construction":"band","operator":{"kind":"shift"},"steps":5,"K":2,"bogus":1}"#;
        assert!(matches!(RunConfig::parse(unknown), Err(CliError::Input(_))));
        let missing = r#"{"construction":"band","operator":{"kind":"shift"},"steps":5,"K":2}"#;
        assert!(matches!(RunConfig::parse(missing), Err(CliError::Input(_))));
    }

    #[test]
    fn unseeded_disk_draws_follow_the_run_seed() {
        let text = |seed: u64| {
            format!(
                r#"{{"construction":"tridiag","operator":{{"kind":"shift"}},"steps":4,"epsilon":0.2,
                "lambda_spec":{{"kind":"uniform_disk","radius":0.5}},
                "mu_spec":{{"kind":"constant","value":[0.0,0.0]}},
                "nu_spec":{{"kind":"constant","value":[0.0,0.0]}},"seed":{seed}}}"#
            )
        };
        let lam = |seed| match RunConfig::parse(&text(seed)).unwrap().plan().unwrap() {
            Plan::Tridiag { lambdas, .. } => lambdas,
            _ => unreachable!(),
        };
        assert_eq!(lam(1), lam(1));
        assert_ne!(lam(1), lam(2));
    }
}

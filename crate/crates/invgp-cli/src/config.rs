//! Experiment configuration: flat key-value config files, CLI overrides,
//! and resolution into concrete operator/prior/truth objects.
//!
//! Config files hold one `key = value` pair per line, `#` starts a
//! comment. Recognized keys (all optional, CLI flags take precedence):
//!
//! ```text
//! operator   = volterra | heat | radon
//! T          = 0.01          # heat diffusion time
//! n          = 2000
//! m          = 3,6,12        # inducing-variable counts
//! beta       = 1.0           # truth smoothness
//! alpha      = 1.0           # prior polynomial/exponential exponent
//! xi         = 0.1           # prior exponential scale (severe case)
//! prior      = polynomial | exponential   # default: match operator
//! reps       = 10
//! seed       = 1
//! sigma2     = 1.0
//! scheme     = population | empirical | both
//! exact      = on | off
//! grid_size  = 100
//! level      = 0.95          # credible-band level
//! truncation = 512           # series truncation J (default: policy)
//! out        = ./results
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use invgp::error::{Error, Result};
use invgp::spectral::{
    ForwardOperator, IllPosedness, PriorSpectrum, SpectralFamily, TruncationPolicy,
};
use serde::Serialize;

use crate::truth::TruthRecipe;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum OperatorChoice {
    Volterra,
    Heat { diffusion_time: f64 },
    Radon,
}

impl OperatorChoice {
    pub fn build(&self) -> Result<Arc<dyn ForwardOperator>> {
        Ok(match self {
            OperatorChoice::Volterra => invgp::operators::volterra(),
            OperatorChoice::Heat { diffusion_time } => invgp::operators::heat(*diffusion_time)?,
            OperatorChoice::Radon => invgp::operators::radon(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PriorChoice {
    /// Match the operator: polynomial for mild, exponential for severe.
    Auto,
    Polynomial,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SchemeChoice {
    Population,
    Empirical,
    Both,
}

impl SchemeChoice {
    pub fn kinds(&self) -> Vec<invgp::variational::SchemeKind> {
        use invgp::variational::SchemeKind::*;
        match self {
            SchemeChoice::Population => vec![PopulationSpectral],
            SchemeChoice::Empirical => vec![EmpiricalSpectral],
            SchemeChoice::Both => vec![PopulationSpectral, EmpiricalSpectral],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TruthChoice {
    /// The recipe paired with the operator.
    Auto,
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub operator: OperatorChoice,
    pub prior: PriorChoice,
    pub truth: TruthChoice,
    pub n: usize,
    pub m_list: Vec<usize>,
    pub beta: f64,
    pub alpha: Option<f64>,
    pub xi: f64,
    pub sigma2: f64,
    pub replicates: usize,
    pub seed: u64,
    pub scheme: SchemeChoice,
    pub exact: bool,
    pub grid_size: usize,
    pub band_level: f64,
    pub truncation: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            operator: OperatorChoice::Volterra,
            prior: PriorChoice::Auto,
            truth: TruthChoice::Auto,
            n: 1000,
            m_list: vec![5],
            beta: 1.0,
            alpha: None,
            xi: 0.1,
            sigma2: 1.0,
            replicates: 1,
            seed: 1,
            scheme: SchemeChoice::Population,
            exact: true,
            grid_size: 100,
            band_level: 0.95,
            truncation: None,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Parameter("n must be >= 1".into()));
        }
        if self.replicates < 1 {
            return Err(Error::Parameter("reps must be >= 1".into()));
        }
        if self.m_list.is_empty() || self.m_list.iter().any(|m| *m < 1) {
            return Err(Error::Parameter(
                "m list must be nonempty with all m >= 1".into(),
            ));
        }
        if self.band_level.is_nan() || self.band_level <= 0.0 || self.band_level >= 1.0 {
            return Err(Error::Parameter("level must lie in (0,1)".into()));
        }
        if self.sigma2.is_nan() || self.sigma2 < 0.0 {
            return Err(Error::Parameter("sigma2 must be >= 0".into()));
        }
        Ok(())
    }

    /// Prior exponent α: explicit value, or β (mild) / 0 (severe).
    pub fn effective_alpha(&self, op: &dyn ForwardOperator) -> f64 {
        self.alpha.unwrap_or(match op.illposedness() {
            IllPosedness::Mild { .. } => self.beta,
            IllPosedness::Severe { .. } => 0.0,
        })
    }

    pub fn spectral_family(&self, op: &dyn ForwardOperator) -> SpectralFamily {
        let alpha = self.effective_alpha(op);
        let exponential = match self.prior {
            PriorChoice::Polynomial => false,
            PriorChoice::Exponential => true,
            PriorChoice::Auto => {
                matches!(op.illposedness(), IllPosedness::Severe { .. })
            }
        };
        if exponential {
            SpectralFamily::Exponential {
                alpha,
                xi: self.xi,
                p: 2.0,
            }
        } else {
            SpectralFamily::Polynomial { alpha }
        }
    }

    /// Resolves the prior spectrum, honoring an explicit truncation.
    pub fn build_prior(&self, op: &dyn ForwardOperator) -> Result<PriorSpectrum> {
        let family = self.spectral_family(op);
        match self.truncation {
            Some(j) => PriorSpectrum::new(family, j),
            None => {
                let j = TruncationPolicy::default().choose(op, &family);
                PriorSpectrum::new(family, j)
            }
        }
    }

    pub fn truth_recipe(&self, op: &dyn ForwardOperator) -> Result<TruthRecipe> {
        match &self.truth {
            TruthChoice::Auto => TruthRecipe::for_operator(op),
            TruthChoice::Custom(c) => Ok(TruthRecipe::Custom(c.clone())),
        }
    }

    /// Applies `key = value` pairs (file layer: only keys absent from
    /// `overridden` are touched).
    pub fn apply_pairs(
        &mut self,
        pairs: &BTreeMap<String, String>,
        overridden: &[&str],
    ) -> Result<()> {
        for (key, value) in pairs {
            if overridden.contains(&key.as_str()) {
                continue;
            }
            self.apply_pair(key, value)?;
        }
        Ok(())
    }

    pub fn apply_pair(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Parameter(format!("config key {what}: bad value {value:?}"));
        match key {
            "operator" => {
                self.operator = match value {
                    "volterra" => OperatorChoice::Volterra,
                    "heat" => OperatorChoice::Heat {
                        diffusion_time: match self.operator {
                            OperatorChoice::Heat { diffusion_time } => diffusion_time,
                            _ => 0.01,
                        },
                    },
                    "radon" => OperatorChoice::Radon,
                    _ => return Err(bad("operator")),
                }
            }
            "T" => {
                let t: f64 = value.parse().map_err(|_| bad("T"))?;
                self.operator = OperatorChoice::Heat { diffusion_time: t };
            }
            "n" => self.n = value.parse().map_err(|_| bad("n"))?,
            "m" => {
                self.m_list = value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>().map_err(|_| bad("m")))
                    .collect::<Result<_>>()?;
            }
            "beta" => self.beta = value.parse().map_err(|_| bad("beta"))?,
            "alpha" => self.alpha = Some(value.parse().map_err(|_| bad("alpha"))?),
            "xi" => self.xi = value.parse().map_err(|_| bad("xi"))?,
            "sigma2" => self.sigma2 = value.parse().map_err(|_| bad("sigma2"))?,
            "reps" => self.replicates = value.parse().map_err(|_| bad("reps"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "prior" => {
                self.prior = match value {
                    "auto" => PriorChoice::Auto,
                    "polynomial" => PriorChoice::Polynomial,
                    "exponential" => PriorChoice::Exponential,
                    _ => return Err(bad("prior")),
                }
            }
            "scheme" => {
                self.scheme = match value {
                    "population" => SchemeChoice::Population,
                    "empirical" => SchemeChoice::Empirical,
                    "both" => SchemeChoice::Both,
                    _ => return Err(bad("scheme")),
                }
            }
            "exact" => {
                self.exact = match value {
                    "on" => true,
                    "off" => false,
                    _ => return Err(bad("exact")),
                }
            }
            "grid_size" => self.grid_size = value.parse().map_err(|_| bad("grid_size"))?,
            "level" => self.band_level = value.parse().map_err(|_| bad("level"))?,
            "truncation" => self.truncation = Some(value.parse().map_err(|_| bad("truncation"))?),
            "truth_coeffs" => {
                let coeffs = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| bad("truth_coeffs")))
                    .collect::<Result<_>>()?;
                self.truth = TruthChoice::Custom(coeffs);
            }
            "out" => self.out_dir = Some(PathBuf::from(value)),
            other => {
                return Err(Error::Parameter(format!("unknown config key {other:?}")));
            }
        }
        Ok(())
    }
}

/// Parses a flat `key = value` config file.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parameter(format!("cannot read config {}: {e}", path.display())))?;
    let mut pairs = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parameter(format!(
                "{}:{}: expected key = value, got {raw:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        pairs.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(pairs)
}

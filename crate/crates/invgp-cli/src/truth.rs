//! The synthetic truth functions of the reference experiments.
//!
//! Each recipe sets `f_{0,j} = c_j j^{-(1+β)}` on the operator's `e`-basis
//! with an oscillating coefficient pattern that keeps `f_0` exactly at
//! Sobolev smoothness `β`.

use invgp::error::{Error, Result};
use invgp::spectral::{ForwardOperator, SeriesFunction, SobolevTruth};

#[derive(Debug, Clone, PartialEq)]
pub enum TruthRecipe {
    /// Sine-basis truth: `c_j = 1 + 0.4 sin(√5 π j)` (odd),
    /// `2.5 + 2 sin(√2 π j)` (even).
    HeatSine,
    /// Cosine-basis truth: `c_j = 1 + 0.9 sin(√3 π j)` (odd),
    /// `1 + 0.8 sin(√7 π j)` (even).
    VolterraCosine,
    /// Disc truth on the Zernike basis: `c_j = 1 + 0.5 sin(√3 π j)` (odd),
    /// `2 + 0.8 sin(√7 π j)` (even).
    RadonZernike,
    /// Arbitrary user coefficients (padded with zeros / truncated to `J`).
    Custom(Vec<f64>),
}

impl TruthRecipe {
    /// The recipe matching an operator's basis.
    pub fn for_operator(op: &dyn ForwardOperator) -> Result<Self> {
        match op.name() {
            "heat" => Ok(TruthRecipe::HeatSine),
            "volterra" => Ok(TruthRecipe::VolterraCosine),
            "radon" => Ok(TruthRecipe::RadonZernike),
            other => Err(Error::Parameter(format!(
                "no truth recipe for operator {other}"
            ))),
        }
    }

    fn compatible_with(&self, op: &dyn ForwardOperator) -> bool {
        matches!(
            (self, op.name()),
            (TruthRecipe::HeatSine, "heat")
                | (TruthRecipe::VolterraCosine, "volterra")
                | (TruthRecipe::RadonZernike, "radon")
                | (TruthRecipe::Custom(_), _)
        )
    }

    fn c(&self, j: usize) -> f64 {
        let jf = j as f64;
        let pi = std::f64::consts::PI;
        let odd = j % 2 == 1;
        match self {
            TruthRecipe::HeatSine => {
                if odd {
                    1.0 + 0.4 * (5f64.sqrt() * pi * jf).sin()
                } else {
                    2.5 + 2.0 * (2f64.sqrt() * pi * jf).sin()
                }
            }
            TruthRecipe::VolterraCosine => {
                if odd {
                    1.0 + 0.9 * (3f64.sqrt() * pi * jf).sin()
                } else {
                    1.0 + 0.8 * (7f64.sqrt() * pi * jf).sin()
                }
            }
            TruthRecipe::RadonZernike => {
                if odd {
                    1.0 + 0.5 * (3f64.sqrt() * pi * jf).sin()
                } else {
                    2.0 + 0.8 * (7f64.sqrt() * pi * jf).sin()
                }
            }
            TruthRecipe::Custom(_) => unreachable!("custom coefficients bypass c_j"),
        }
    }
}

/// Builds the truth `f_0` truncated at `j_max` on the operator's
/// `e`-basis.
pub fn make_truth(
    recipe: &TruthRecipe,
    beta: f64,
    op: &dyn ForwardOperator,
    j_max: usize,
) -> Result<SobolevTruth> {
    if !recipe.compatible_with(op) {
        return Err(Error::Parameter(format!(
            "truth recipe {recipe:?} incompatible with operator {}",
            op.name()
        )));
    }
    let coeffs: Vec<f64> = match recipe {
        TruthRecipe::Custom(c) => (0..j_max)
            .map(|j| c.get(j).copied().unwrap_or(0.0))
            .collect(),
        _ => (1..=j_max)
            .map(|j| recipe.c(j) * (j as f64).powf(-(1.0 + beta)))
            .collect(),
    };
    SobolevTruth::new(beta, SeriesFunction::new(coeffs, op.e_tag()))
}

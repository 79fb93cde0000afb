//! The phase-transition grid: log MISE ratio of exact to variational
//! posteriors over an `(n, m)` grid, with the theoretical threshold
//! curve alongside.

use std::sync::Arc;

use invgp::error::{Error, Result};
use invgp::exact::exact_posterior_from_gram;
use invgp::metrics::{mise, recommended_m};
use invgp::spectral::{ForwardOperator, PriorSpectrum, SobolevTruth};
use invgp::variational::{fit_variational, population_scheme, variational_posterior};
use rayon::prelude::*;

use crate::sim::{derive_seed, generate_data, SeedPurpose};

#[derive(Debug, Clone)]
pub struct PhaseGrid {
    pub n_list: Vec<usize>,
    pub m_list: Vec<usize>,
    /// `log(mean MISE(exact) / mean MISE(variational))`, indexed
    /// `[n][m]`; NaN when every replicate failed.
    pub log_ratio: Vec<Vec<f64>>,
    /// Threshold curve `n ↦ recommended m`.
    pub threshold: Vec<usize>,
}

impl PhaseGrid {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,m,log_mise_ratio,threshold_m\n");
        for (i, &n) in self.n_list.iter().enumerate() {
            for (k, &m) in self.m_list.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    n, m, self.log_ratio[i][k], self.threshold[i]
                ));
            }
        }
        out
    }
}

/// Runs the grid with the population scheme, averaging MISE over `reps`
/// replicates per cell. Replicate failures are skipped cell-wise.
#[allow(clippy::too_many_arguments)]
pub fn phase_grid(
    op: &Arc<dyn ForwardOperator>,
    prior: &PriorSpectrum,
    truth: &SobolevTruth,
    n_list: &[usize],
    m_list: &[usize],
    reps: usize,
    sigma2: f64,
    seed: u64,
) -> Result<PhaseGrid> {
    if reps < 1 {
        return Err(Error::Parameter("reps must be >= 1".into()));
    }
    let mut log_ratio = Vec::with_capacity(n_list.len());
    let mut threshold = Vec::with_capacity(n_list.len());
    for (n_idx, &n) in n_list.iter().enumerate() {
        // replicate-level work in parallel; exact MISE once per dataset
        let per_rep: Vec<Option<(f64, Vec<Option<f64>>)>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let rep_seed = derive_seed(seed, (n_idx * reps + r) as u64, SeedPurpose::Replicate);
                let run = || -> Result<(f64, Vec<Option<f64>>)> {
                    let data = generate_data(op.as_ref(), truth, n, sigma2, rep_seed)?;
                    let gram = invgp::exact::build_gram(op.as_ref(), prior, &data)?;
                    let exact = exact_posterior_from_gram(op, prior, &data, &gram)?;
                    let mise_exact = mise(&exact, truth)?.mise;
                    drop(gram);
                    let mut per_m = Vec::with_capacity(m_list.len());
                    for &m in m_list {
                        let cell = (|| -> Result<f64> {
                            let m_eff = m.min(prior.truncation());
                            let scheme = population_scheme(op, prior, &data, m_eff)?;
                            let params = fit_variational(&scheme, &data)?;
                            let post = variational_posterior(&scheme, &params, prior, op)?;
                            Ok(mise(&post, truth)?.mise)
                        })();
                        per_m.push(cell.ok());
                    }
                    Ok((mise_exact, per_m))
                };
                run().ok()
            })
            .collect();

        let mut exact_sum = 0.0;
        let mut exact_count = 0usize;
        let mut var_sum = vec![0.0; m_list.len()];
        let mut var_count = vec![0usize; m_list.len()];
        for rep in per_rep.into_iter().flatten() {
            exact_sum += rep.0;
            exact_count += 1;
            for (k, v) in rep.1.iter().enumerate() {
                if let Some(v) = v {
                    var_sum[k] += v;
                    var_count[k] += 1;
                }
            }
        }
        let mut row = Vec::with_capacity(m_list.len());
        for k in 0..m_list.len() {
            if exact_count == 0 || var_count[k] == 0 {
                row.push(f64::NAN);
            } else {
                let e = exact_sum / exact_count as f64;
                let v = var_sum[k] / var_count[k] as f64;
                row.push((e / v).ln());
            }
        }
        log_ratio.push(row);
        threshold.push(recommended_m(op.as_ref(), prior, n.max(2)));
    }
    Ok(PhaseGrid {
        n_list: n_list.to_vec(),
        m_list: m_list.to_vec(),
        log_ratio,
        threshold,
    })
}

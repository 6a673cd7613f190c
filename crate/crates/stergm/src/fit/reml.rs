//! Smoothing-parameter selection by a Laplace-approximate restricted
//! marginal likelihood, optimized with a deterministic coordinate search:
//! a half-decade grid on log10(lambda) followed by golden-section
//! refinement, block by block.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array1;
use rayon::prelude::*;

use crate::error::Result;
use crate::fit::pirls::{pirls_fit, FitResult, PirlsOptions};
use crate::splines::DesignBlock;

#[derive(Debug, Clone)]
pub struct SelectOptions {
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_step: f64,
    /// Width of the golden-section bracket on log10(lambda) at which
    /// refinement stops.
    pub refine_tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions {
            grid_lo: -4.0,
            grid_hi: 6.0,
            grid_step: 0.5,
            refine_tolerance: 0.05,
            max_sweeps: 3,
        }
    }
}

/// Rank and positive log-determinant of a penalty spectrum.
fn penalty_spectrum(block: &DesignBlock) -> Option<(f64, f64)> {
    let penalty = block.penalty.as_ref()?;
    let (per, copies) = match penalty {
        crate::splines::Penalty::Dense(m) => (m.clone(), 1usize),
        crate::splines::Penalty::BlockDiag { block, count } => (block.clone(), *count),
    };
    let q = per.nrows();
    let m = DMatrix::from_fn(q, q, |i, j| per[[i, j]]);
    let eig = SymmetricEigen::new(m);
    let max_e = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut rank = 0usize;
    let mut logdet = 0.0;
    for &e in eig.eigenvalues.iter() {
        if e > 1e-10 * max_e.max(1.0) {
            rank += 1;
            logdet += e.ln();
        }
    }
    Some(((rank * copies) as f64, logdet * copies as f64))
}

/// Negative Laplace-approximate restricted marginal likelihood, up to an
/// additive constant in the data: smaller is better.
fn criterion_value(fit: &FitResult, spectra: &[Option<(f64, f64)>], lambdas: &[f64]) -> f64 {
    let mut log_det_s = 0.0;
    for (k, spec) in spectra.iter().enumerate() {
        if let Some((rank, logdet)) = spec {
            if lambdas[k] > 0.0 {
                log_det_s += rank * lambdas[k].ln() + logdet;
            }
        }
    }
    0.5 * fit.penalized_deviance - 0.5 * log_det_s + 0.5 * fit.log_det_penalized_hessian
}

/// Result of one criterion evaluation.
struct Eval {
    lambda: f64,
    criterion: f64,
    fit: FitResult,
}

fn evaluate(
    response: &[f64],
    blocks: &[DesignBlock],
    spectra: &[Option<(f64, f64)>],
    lambdas: &[f64],
    warm: Option<&Array1<f64>>,
    options: &PirlsOptions,
) -> Result<Eval> {
    let fit = pirls_fit(response, blocks, lambdas, warm, options)?;
    Ok(Eval {
        lambda: 0.0,
        criterion: criterion_value(&fit, spectra, lambdas),
        fit,
    })
}

/// Expose the criterion for diagnostics and tests: evaluates the restricted
/// likelihood at the given smoothing parameters.
pub fn reml_criterion(
    response: &[f64],
    blocks: &[DesignBlock],
    lambdas: &[f64],
    warm: Option<&Array1<f64>>,
) -> Result<f64> {
    let spectra: Vec<_> = blocks.iter().map(penalty_spectrum).collect();
    let opts = PirlsOptions {
        compute_covariance: false,
        ..PirlsOptions::default()
    };
    evaluate(response, blocks, &spectra, lambdas, warm, &opts).map(|e| e.criterion)
}

/// Select per-block smoothing parameters by coordinate descent on the
/// restricted-likelihood criterion. Returns the selected values together
/// with the final fit (with covariance) at those values.
pub fn select_lambdas(
    response: &[f64],
    blocks: &[DesignBlock],
    select: &SelectOptions,
    fit_options: &PirlsOptions,
) -> Result<(Vec<f64>, FitResult)> {
    let penalized: Vec<usize> = blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| b.penalty.is_some())
        .map(|(k, _)| k)
        .collect();
    if penalized.is_empty() {
        let fit = pirls_fit(response, blocks, &vec![0.0; blocks.len()], None, fit_options)?;
        return Ok((fit.lambdas.clone(), fit));
    }
    let spectra: Vec<_> = blocks.iter().map(penalty_spectrum).collect();
    let mut search_opts = fit_options.clone();
    search_opts.compute_covariance = false;

    let mut lambdas: Vec<f64> = blocks
        .iter()
        .map(|b| if b.penalty.is_some() { 1.0 } else { 0.0 })
        .collect();
    let mut warm: Option<Array1<f64>> = None;

    let n_grid = ((select.grid_hi - select.grid_lo) / select.grid_step).round() as usize + 1;
    let grid: Vec<f64> = (0..n_grid)
        .map(|i| select.grid_lo + i as f64 * select.grid_step)
        .collect();

    for _sweep in 0..select.max_sweeps {
        let mut max_shift = 0.0f64;
        for &k in &penalized {
            let current_log = lambdas[k].log10();
            // grid pass, evaluated independently from the shared warm start
            let evals: Vec<Result<Eval>> = grid
                .par_iter()
                .map(|&log_lambda| {
                    let mut trial = lambdas.clone();
                    trial[k] = 10f64.powf(log_lambda);
                    evaluate(response, blocks, &spectra, &trial, warm.as_ref(), &search_opts).map(
                        |mut e| {
                            e.lambda = log_lambda;
                            e
                        },
                    )
                })
                .collect();
            let mut best: Option<Eval> = None;
            for e in evals {
                let e = e?;
                let better = match &best {
                    None => true,
                    Some(b) => e.criterion < b.criterion,
                };
                if better {
                    best = Some(e);
                }
            }
            let mut best = best.expect("grid is nonempty");

            // golden-section refinement around the best grid point
            let mut lo = (best.lambda - select.grid_step).max(select.grid_lo);
            let mut hi = (best.lambda + select.grid_step).min(select.grid_hi);
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            let mut x1 = hi - phi * (hi - lo);
            let mut x2 = lo + phi * (hi - lo);
            let eval_at = |log_lambda: f64, warm: Option<&Array1<f64>>| -> Result<Eval> {
                let mut trial = lambdas.clone();
                trial[k] = 10f64.powf(log_lambda);
                evaluate(response, blocks, &spectra, &trial, warm, &search_opts).map(|mut e| {
                    e.lambda = log_lambda;
                    e
                })
            };
            let mut f1 = eval_at(x1, warm.as_ref())?;
            let mut f2 = eval_at(x2, warm.as_ref())?;
            while hi - lo > select.refine_tolerance {
                if f1.criterion <= f2.criterion {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - phi * (hi - lo);
                    f1 = eval_at(x1, warm.as_ref())?;
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + phi * (hi - lo);
                    f2 = eval_at(x2, warm.as_ref())?;
                }
            }
            for cand in [f1, f2] {
                if cand.criterion < best.criterion {
                    best = cand;
                }
            }

            max_shift = max_shift.max((best.lambda - current_log).abs());
            lambdas[k] = 10f64.powf(best.lambda);
            warm = Some(best.fit.coefficients.clone());
        }
        if max_shift < select.refine_tolerance {
            break;
        }
    }

    let final_fit = pirls_fit(response, blocks, &lambdas, warm.as_ref(), fit_options)?;
    Ok((lambdas, final_fit))
}

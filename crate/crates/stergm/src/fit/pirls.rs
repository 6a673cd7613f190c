//! Penalized iteratively reweighted least squares for Bernoulli responses.
//!
//! Maximizes `loglik(beta) - 0.5 * sum_k lambda_k * u_k' P_k u_k` over the
//! concatenated block coefficients, with step-halving on the penalized
//! deviance and a small permanent ridge so unpenalized directions and
//! penalty null spaces stay solvable.

use nalgebra::{Cholesky, DMatrix, DVector};
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::splines::DesignBlock;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn log1pexp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone)]
pub struct PirlsOptions {
    pub max_iterations: usize,
    /// Relative penalized-deviance change below which the fit is converged.
    pub deviance_tolerance: f64,
    /// Max-norm bound on the penalized score at convergence.
    pub score_tolerance: f64,
    /// Permanent diagonal ridge.
    pub ridge: f64,
    /// Absolute coefficient size that triggers a separation warning.
    pub separation_bound: f64,
    /// Skip the posterior covariance (used by smoothing-selection sweeps).
    pub compute_covariance: bool,
}

impl Default for PirlsOptions {
    fn default() -> Self {
        PirlsOptions {
            max_iterations: 200,
            deviance_tolerance: 1e-8,
            score_tolerance: 1e-6,
            ridge: 1e-8,
            separation_bound: 50.0,
            compute_covariance: true,
        }
    }
}

/// Converged penalized fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: Array1<f64>,
    /// Per-block smoothing parameters (zero for unpenalized blocks).
    pub lambdas: Vec<f64>,
    /// Posterior covariance: inverse penalized Fisher information at the
    /// optimum (empty when not requested).
    pub covariance: Array2<f64>,
    pub deviance: f64,
    pub penalized_deviance: f64,
    /// Penalized deviance after each accepted step, starting at the
    /// initial coefficients.
    pub deviance_trace: Vec<f64>,
    pub iterations: usize,
    pub separation_warning: bool,
    /// Max-norm of the penalized score at the optimum.
    pub score_norm: f64,
    pub log_det_penalized_hessian: f64,
    pub block_offsets: Vec<usize>,
    pub block_labels: Vec<String>,
}

impl FitResult {
    pub fn n_coefficients(&self) -> usize {
        self.coefficients.len()
    }

    pub fn block_slice(&self, block: usize) -> &[f64] {
        let start = self.block_offsets[block];
        let end = self
            .block_offsets
            .get(block + 1)
            .copied()
            .unwrap_or(self.coefficients.len());
        &self.coefficients.as_slice().unwrap()[start..end]
    }
}

pub fn block_offsets(blocks: &[DesignBlock]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(blocks.len() + 1);
    let mut acc = 0;
    for b in blocks {
        offsets.push(acc);
        acc += b.ncols();
    }
    offsets.push(acc);
    offsets
}

fn linear_predictor(blocks: &[DesignBlock], offsets: &[usize], beta: &[f64], eta: &mut [f64]) {
    eta.iter_mut().for_each(|e| *e = 0.0);
    for (k, block) in blocks.iter().enumerate() {
        let coefs = &beta[offsets[k]..offsets[k + 1]];
        for (r, e) in eta.iter_mut().enumerate() {
            *e += block.row_dot(r, coefs);
        }
    }
}

fn penalty_term(blocks: &[DesignBlock], offsets: &[usize], lambdas: &[f64], beta: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (k, block) in blocks.iter().enumerate() {
        if lambdas[k] > 0.0 {
            if let Some(p) = &block.penalty {
                acc += lambdas[k] * p.quad_form(&beta[offsets[k]..offsets[k + 1]]);
            }
        }
    }
    acc
}

fn deviance(response: &[f64], eta: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (&y, &e) in response.iter().zip(eta) {
        ll += y * e - log1pexp(e);
    }
    -2.0 * ll
}

/// Penalized score `X'(y - mu) - S_lambda beta` (the ridge is numerical
/// regularization, not part of the objective).
pub fn penalized_score(
    response: &[f64],
    blocks: &[DesignBlock],
    offsets: &[usize],
    lambdas: &[f64],
    beta: &[f64],
    eta: &[f64],
) -> Vec<f64> {
    let p = offsets[offsets.len() - 1];
    let mut g = vec![0.0; p];
    for (r, (&y, &e)) in response.iter().zip(eta).enumerate() {
        let resid = y - sigmoid(e);
        for (k, block) in blocks.iter().enumerate() {
            let (start, vals) = block.row(r);
            let base = offsets[k] + start;
            for (q, &v) in vals.iter().enumerate() {
                g[base + q] += v * resid;
            }
        }
    }
    let mut scratch = Vec::new();
    for (k, block) in blocks.iter().enumerate() {
        if lambdas[k] > 0.0 {
            if let Some(p) = &block.penalty {
                scratch.resize(block.ncols(), 0.0);
                p.mat_vec(&beta[offsets[k]..offsets[k + 1]], &mut scratch);
                for (q, s) in scratch.iter().enumerate() {
                    g[offsets[k] + q] -= lambdas[k] * s;
                }
            }
        }
    }
    g
}

/// Fit the penalized logistic model for fixed smoothing parameters.
pub fn pirls_fit(
    response: &[f64],
    blocks: &[DesignBlock],
    lambdas: &[f64],
    warm_start: Option<&Array1<f64>>,
    options: &PirlsOptions,
) -> Result<FitResult> {
    let n = response.len();
    if blocks.is_empty() || n == 0 {
        return Err(Error::Design("empty design".into()));
    }
    if lambdas.len() != blocks.len() {
        return Err(Error::Design(format!(
            "{} smoothing parameters for {} blocks",
            lambdas.len(),
            blocks.len()
        )));
    }
    if lambdas.iter().any(|l| *l < 0.0 || !l.is_finite()) {
        return Err(Error::Design("smoothing parameters must be finite and nonnegative".into()));
    }
    for b in blocks {
        if b.n_rows() != n {
            return Err(Error::Design(format!(
                "block {} has {} rows, response has {n}",
                b.label,
                b.n_rows()
            )));
        }
    }
    let offsets = block_offsets(blocks);
    let p = offsets[blocks.len()];
    if p >= n {
        return Err(Error::Design(format!(
            "design has {p} columns but only {n} rows"
        )));
    }

    let mut beta: Vec<f64> = match warm_start {
        Some(w) if w.len() == p => w.to_vec(),
        _ => vec![0.0; p],
    };
    let mut eta = vec![0.0; n];
    linear_predictor(blocks, &offsets, &beta, &mut eta);
    let mut pen_dev = deviance(response, &eta) + penalty_term(blocks, &offsets, lambdas, &beta);
    let mut trace = vec![pen_dev];

    let mut a = Array2::<f64>::zeros((p, p));
    let mut rhs = vec![0.0; p];
    let mut scratch: Vec<(usize, f64)> = Vec::with_capacity(64);
    let mut last_chol: Option<Cholesky<f64, nalgebra::Dyn>> = None;
    let mut iterations = 0;
    let mut converged = false;

    for iter in 1..=options.max_iterations {
        iterations = iter;
        a.fill(0.0);
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..n {
            let mu = sigmoid(eta[r]);
            let w = (mu * (1.0 - mu)).max(1e-10);
            let z = eta[r] + (response[r] - mu) / w;
            scratch.clear();
            for (k, block) in blocks.iter().enumerate() {
                let (start, vals) = block.row(r);
                let base = offsets[k] + start;
                for (q, &v) in vals.iter().enumerate() {
                    if v != 0.0 {
                        scratch.push((base + q, v));
                    }
                }
            }
            for (idx, &(ca, va)) in scratch.iter().enumerate() {
                let wa = w * va;
                rhs[ca] += wa * z;
                for &(cb, vb) in &scratch[idx..] {
                    a[[ca, cb]] += wa * vb;
                }
            }
        }
        for i in 0..p {
            for j in (i + 1)..p {
                a[[j, i]] = a[[i, j]];
            }
        }
        for (k, block) in blocks.iter().enumerate() {
            if lambdas[k] > 0.0 {
                if let Some(pen) = &block.penalty {
                    pen.add_scaled_to(&mut a, offsets[k], lambdas[k]);
                }
            }
        }
        for d in 0..p {
            a[[d, d]] += options.ridge;
        }

        let m = DMatrix::from_row_slice(p, p, a.as_slice().unwrap());
        let chol = Cholesky::new(m).ok_or_else(|| {
            Error::Linalg("penalized Fisher information is not positive definite".into())
        })?;
        let solution = chol.solve(&DVector::from_column_slice(&rhs));
        last_chol = Some(chol);

        let mut candidate: Vec<f64> = solution.iter().copied().collect();
        let mut cand_eta = vec![0.0; n];
        linear_predictor(blocks, &offsets, &candidate, &mut cand_eta);
        let mut cand_dev =
            deviance(response, &cand_eta) + penalty_term(blocks, &offsets, lambdas, &candidate);
        let mut halvings = 0;
        while cand_dev > pen_dev + 1e-12 * (1.0 + pen_dev.abs()) && halvings < 30 {
            for (c, b) in candidate.iter_mut().zip(&beta) {
                *c = 0.5 * (*c + b);
            }
            linear_predictor(blocks, &offsets, &candidate, &mut cand_eta);
            cand_dev =
                deviance(response, &cand_eta) + penalty_term(blocks, &offsets, lambdas, &candidate);
            halvings += 1;
        }
        if cand_dev > pen_dev + 1e-12 * (1.0 + pen_dev.abs()) {
            // no descent direction left at working precision
            converged = true;
            break;
        }
        let rel_change = (pen_dev - cand_dev).abs() / (0.1 + cand_dev.abs());
        beta = candidate;
        eta = cand_eta;
        pen_dev = cand_dev;
        trace.push(pen_dev);

        if rel_change < options.deviance_tolerance {
            let score = penalized_score(response, blocks, &offsets, lambdas, &beta, &eta);
            let score_norm = score.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let separated = beta.iter().any(|b| b.abs() > options.separation_bound);
            if score_norm < options.score_tolerance || separated {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations });
    }

    let chol = last_chol.expect("at least one iteration ran");
    let log_det = 2.0 * (0..p).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>();
    let covariance = if options.compute_covariance {
        let inv = chol.inverse();
        Array2::from_shape_fn((p, p), |(i, j)| inv[(i, j)])
    } else {
        Array2::zeros((0, 0))
    };
    let score = penalized_score(response, blocks, &offsets, lambdas, &beta, &eta);
    let score_norm = score.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let separation_warning = beta.iter().any(|b| b.abs() > options.separation_bound);
    let dev = deviance(response, &eta);

    Ok(FitResult {
        coefficients: Array1::from_vec(beta),
        lambdas: lambdas.to_vec(),
        covariance,
        deviance: dev,
        penalized_deviance: pen_dev,
        deviance_trace: trace,
        iterations,
        separation_warning,
        score_norm,
        log_det_penalized_hessian: log_det,
        block_offsets: offsets,
        block_labels: blocks.iter().map(|b| b.label.clone()).collect(),
    })
}

//! Functional principal component analysis of fitted random-effect curve
//! bundles: discretize each actor's curve on an equidistant grid, center,
//! eigendecompose the sample covariance with quadrature weighting, and read
//! off eigenfunctions, per-actor scores and variance shares.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::fit::{FittedModel, Role, Side};
use crate::panel::Period;

/// Discretized curves, one row per actor.
#[derive(Debug, Clone)]
pub struct CurveBundle {
    pub actors: Vec<String>,
    /// Strictly increasing equidistant grid.
    pub grid: Vec<f64>,
    /// N x T curve evaluations.
    pub curves: Array2<f64>,
}

impl CurveBundle {
    pub fn n_actors(&self) -> usize {
        self.curves.nrows()
    }

    pub fn n_grid(&self) -> usize {
        self.curves.ncols()
    }

    /// Quadrature weight: interval length over number of grid points.
    pub fn quadrature_weight(&self) -> f64 {
        let span = self.grid[self.grid.len() - 1] - self.grid[0];
        span / self.grid.len() as f64
    }
}

pub const DEFAULT_GRID_POINTS: usize = 100;

/// Evaluate the fitted random curves of one role on an equidistant grid.
/// Grid points outside an actor's inclusion span are set to zero.
pub fn discretize_curves(
    model: &FittedModel,
    role: Role,
    side: Side,
    n_grid: usize,
) -> Result<CurveBundle> {
    if n_grid < 2 {
        return Err(Error::Fpca("grid needs at least 2 points".into()));
    }
    let fit = model
        .side(side)
        .ok_or_else(|| Error::Fpca(format!("side {} is not part of this fit", side.label())))?;
    if !fit
        .layout
        .entries
        .iter()
        .any(|e| matches!(&e.blocks, crate::fit::TermBlocks::RandomSmooth { role: r, .. } if *r == role))
    {
        return Err(Error::Fpca(format!(
            "side {} has no {} random smooth",
            side.label(),
            role.label()
        )));
    }
    let (lo, hi) = model.time_range;
    let grid: Vec<f64> = (0..n_grid)
        .map(|g| lo + (hi - lo) * g as f64 / (n_grid - 1) as f64)
        .collect();
    let actors = fit.layout.re_actors.clone();
    let mut curves = Array2::zeros((actors.len(), n_grid));
    let mut names = Vec::with_capacity(actors.len());
    for (row, &actor) in actors.iter().enumerate() {
        let (values, _) = fit.actor_curve(role, actor, &grid)?;
        let (first, last) = model.registry.span(actor);
        for (g, &t) in grid.iter().enumerate() {
            let existent = t >= first as f64 && t <= last as f64;
            curves[[row, g]] = if existent { values[g] } else { 0.0 };
        }
        names.push(model.registry.name(actor).to_string());
    }
    Ok(CurveBundle {
        actors: names,
        grid,
        curves,
    })
}

/// Principal component decomposition of a curve bundle.
#[derive(Debug, Clone)]
pub struct FpcaResult {
    pub grid: Vec<f64>,
    /// Cross-sectional mean curve.
    pub mean: Vec<f64>,
    /// Descending, nonnegative, on the quadrature scale: the m-th value is
    /// the mean squared score of component m.
    pub eigenvalues: Vec<f64>,
    /// M x T, orthonormal under the quadrature inner product.
    pub eigenfunctions: Array2<f64>,
    /// N x M per-actor scores: quadrature inner products of the centered
    /// curves with the eigenfunctions.
    pub scores: Array2<f64>,
    /// Eigenvalue over total variance.
    pub variance_shares: Vec<f64>,
}

/// Decompose centered curves into principal components. The discrete inner
/// product carries weight `span / T` so scores approximate the integral
/// inner product on the time interval.
pub fn fpca(bundle: &CurveBundle, n_components: usize) -> Result<FpcaResult> {
    fpca_with_centering(bundle, n_components, true)
}

/// Like [`fpca`], with the cross-sectional centering optional: when
/// disabled, curves decompose around zero and the reported mean curve is
/// identically zero.
pub fn fpca_with_centering(
    bundle: &CurveBundle,
    n_components: usize,
    center: bool,
) -> Result<FpcaResult> {
    let n = bundle.n_actors();
    let t = bundle.n_grid();
    if n < 2 {
        return Err(Error::Fpca(format!("need at least 2 curves, got {n}")));
    }
    if n_components > n.min(t) {
        return Err(Error::Fpca(format!(
            "{n_components} components requested, at most {} available",
            n.min(t)
        )));
    }
    let w = bundle.quadrature_weight();
    let mean: Vec<f64> = if center {
        (0..t)
            .map(|g| (0..n).map(|i| bundle.curves[[i, g]]).sum::<f64>() / n as f64)
            .collect()
    } else {
        vec![0.0; t]
    };
    let mut centered = bundle.curves.clone();
    for i in 0..n {
        for g in 0..t {
            centered[[i, g]] -= mean[g];
        }
    }
    // T x T sample covariance (population scaling)
    let mut cov = DMatrix::zeros(t, t);
    for a in 0..t {
        for b in a..t {
            let mut acc = 0.0;
            for i in 0..n {
                acc += centered[[i, a]] * centered[[i, b]];
            }
            acc /= n as f64;
            cov[(a, b)] = acc;
            cov[(b, a)] = acc;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let m = n_components;
    let mut eigenvalues = Vec::with_capacity(m);
    let mut eigenfunctions = Array2::zeros((m, t));
    let mut scores = Array2::zeros((n, m));
    let sqrt_w = w.sqrt();
    for (comp, &col) in order.iter().take(m).enumerate() {
        let e = eig.eigenvalues[col].max(0.0);
        eigenvalues.push(w * e);
        let mut xi: Vec<f64> = (0..t).map(|g| eig.eigenvectors[(g, col)] / sqrt_w).collect();
        // sign convention: the entry of largest magnitude is positive
        let extreme = xi
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap().then(b.0.cmp(&a.0)))
            .map(|(_, v)| *v)
            .unwrap_or(0.0);
        let flip = if extreme < 0.0 { -1.0 } else { 1.0 };
        for v in xi.iter_mut() {
            *v *= flip;
        }
        for g in 0..t {
            eigenfunctions[[comp, g]] = xi[g];
        }
        for i in 0..n {
            let mut s = 0.0;
            for g in 0..t {
                s += centered[[i, g]] * xi[g];
            }
            scores[[i, comp]] = w * s;
        }
    }
    let total: f64 = (0..t).map(|c| eig.eigenvalues[c].max(0.0)).sum();
    let variance_shares = eigenvalues
        .iter()
        .map(|&l| if total > 0.0 { l / (w * total) } else { 0.0 })
        .collect();
    Ok(FpcaResult {
        grid: bundle.grid.clone(),
        mean,
        eigenvalues,
        eigenfunctions,
        scores,
        variance_shares,
    })
}

/// Mean curve perturbed by adding and subtracting a multiple of one
/// component: `mean ± multiple * sqrt(eigenvalue) * eigenfunction`.
pub fn perturbation_curves(
    result: &FpcaResult,
    component: usize,
    multiple: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if component >= result.eigenvalues.len() {
        return Err(Error::Fpca(format!(
            "component {component} out of range ({} retained)",
            result.eigenvalues.len()
        )));
    }
    let scale = multiple * result.eigenvalues[component].sqrt();
    let t = result.mean.len();
    let mut plus = Vec::with_capacity(t);
    let mut minus = Vec::with_capacity(t);
    for g in 0..t {
        let offset = scale * result.eigenfunctions[[component, g]];
        plus.push(result.mean[g] + offset);
        minus.push(result.mean[g] - offset);
    }
    Ok((plus, minus))
}

/// Curves that exist only on part of the panel are zero elsewhere; this is
/// the default grid size used throughout.
pub fn default_grid(model_range: (f64, f64)) -> Vec<f64> {
    let (lo, hi) = model_range;
    (0..DEFAULT_GRID_POINTS)
        .map(|g| lo + (hi - lo) * g as f64 / (DEFAULT_GRID_POINTS - 1) as f64)
        .collect()
}

/// Zero curves outside actor inclusion spans (used when bundles are built
/// from external curve matrices rather than a fitted model).
pub fn mask_nonexistence(bundle: &mut CurveBundle, spans: &[(Period, Period)]) {
    for (row, span) in spans.iter().enumerate() {
        for (g, &t) in bundle.grid.clone().iter().enumerate() {
            if t < span.0 as f64 || t > span.1 as f64 {
                bundle.curves[[row, g]] = 0.0;
            }
        }
    }
}

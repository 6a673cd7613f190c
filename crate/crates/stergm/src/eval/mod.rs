//! Out-of-sample scoring and simulation: rolling-origin prediction,
//! exact ROC/PR area computation, replicate simulation of next-period
//! networks and goodness-of-fit comparison against observations.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{fit_transitions, FitSettings, FittedModel, ModelSpec, Side, SideFit};
use crate::network::{reconstruct, ActorIdx, Network};
use crate::panel::{NetworkPanel, Period};
use crate::stats::{global_stats, GofStats};
use crate::transition::{build_transition_with, DyadObs, TransitionData, TransitionOptions};

/// Exact ROC area by the rank-sum (Mann-Whitney) formulation:
/// the probability that a positive outranks a negative, ties counting half.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&l| l == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(a.cmp(&b)));
    // midranks over tied score groups
    let mut rank_sum_pos = 0.0;
    let mut idx = 0;
    while idx < order.len() {
        let mut end = idx;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[idx]] {
            end += 1;
        }
        let midrank = (idx + end) as f64 / 2.0 + 1.0;
        for &o in &order[idx..=end] {
            if labels[o] == 1.0 {
                rank_sum_pos += midrank;
            }
        }
        idx = end + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Area under the precision-recall step curve: thresholds descend through
/// the distinct scores (ties grouped) and each recall increment contributes
/// at the precision reached there.
pub fn pr_auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&l| l == 1.0).count();
    if n_pos == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let mut area = 0.0;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_recall = 0.0;
    let mut idx = 0;
    while idx < order.len() {
        let mut end = idx;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[idx]] {
            end += 1;
        }
        for &o in &order[idx..=end] {
            if labels[o] == 1.0 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        idx = end + 1;
    }
    Ok(area)
}

/// One scored dyad of a prediction step.
#[derive(Debug, Clone, Serialize)]
pub struct ScoredDyad {
    pub sender: ActorIdx,
    pub receiver: ActorIdx,
    pub side: Side,
    pub probability: f64,
    pub observed: Option<f64>,
}

/// Probabilistic predictions for the step into `horizon`.
#[derive(Debug, Clone)]
pub struct PredictionSet {
    pub horizon: Period,
    pub scored: Vec<ScoredDyad>,
    pub diagnostics: Vec<String>,
}

impl PredictionSet {
    pub fn side_slice(&self, side: Side) -> Vec<&ScoredDyad> {
        self.scored.iter().filter(|d| d.side == side).collect()
    }
}

/// Transition used for scoring the step `t -> t+1`. When the horizon period
/// is missing from the panel the current actor set stands in for it and no
/// observations are attached.
fn scoring_transition(
    panel: &NetworkPanel,
    t: Period,
    options: TransitionOptions,
) -> Result<(TransitionData, bool)> {
    if panel.has_period(t + 1) {
        Ok((build_transition_with(panel, t + 1, options)?, true))
    } else {
        let y_prev_full = panel.network(t)?;
        let actors = y_prev_full.actors().to_vec();
        if actors.len() < 3 {
            return Err(Error::TooFewCommonActors {
                period: t + 1,
                count: actors.len(),
            });
        }
        let y_prev = y_prev_full.clone();
        let y_curr = Network::empty(actors.clone());
        let mut formation = Vec::new();
        let mut persistence = Vec::new();
        for (i, j) in y_prev.dyads() {
            let obs = DyadObs { i, j, response: 0.0 };
            if y_prev.has(i, j) {
                persistence.push(obs);
            } else {
                formation.push(obs);
            }
        }
        let lag_sources = actors.clone();
        Ok((
            TransitionData {
                period: t + 1,
                actors,
                lag_sources,
                y_prev,
                y_curr,
                formation,
                persistence,
            },
            false,
        ))
    }
}

fn side_fit_for<'m>(model: &'m FittedModel, side: Side) -> Option<&'m SideFit> {
    if model.spec.variant.pooled() {
        model.side(Side::Pooled)
    } else {
        model.side(side)
    }
}

/// Score formation and persistence probabilities for the step `t -> t+1`
/// under a model fitted on transitions up to `t`.
pub fn predict_transition(
    model: &FittedModel,
    panel: &NetworkPanel,
    t: Period,
    options: TransitionOptions,
) -> Result<PredictionSet> {
    let (td, horizon_observed) = scoring_transition(panel, t, options)?;
    let mut scored = Vec::new();
    let mut diagnostics = Vec::new();
    for (side, rows) in [
        (Side::Formation, &td.formation),
        (Side::Persistence, &td.persistence),
    ] {
        if rows.is_empty() {
            continue;
        }
        let Some(fit) = side_fit_for(model, side) else {
            diagnostics.push(format!(
                "{} dyads unscored: that side was not fitted",
                side.label()
            ));
            continue;
        };
        let dyads: Vec<(usize, usize)> = rows.iter().map(|o| (o.i, o.j)).collect();
        let probs = fit.predict_dyads(&td, panel.covariates(), &dyads)?;
        for (obs, p) in rows.iter().zip(probs) {
            scored.push(ScoredDyad {
                sender: td.actors[obs.i],
                receiver: td.actors[obs.j],
                side,
                probability: p,
                observed: horizon_observed.then_some(obs.response),
            });
        }
    }
    Ok(PredictionSet {
        horizon: t + 1,
        scored,
        diagnostics,
    })
}

/// Per-period scoring summary.
#[derive(Debug, Clone, Serialize)]
pub struct AucRow {
    pub horizon: Period,
    pub side: String,
    pub n_scored: usize,
    pub n_positive: usize,
    pub pr_auc: Option<f64>,
    pub roc_auc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RollingResult {
    pub rows: Vec<AucRow>,
    pub diagnostics: Vec<String>,
}

fn auc_row(horizon: Period, side: &str, dyads: &[&ScoredDyad]) -> AucRow {
    let scores: Vec<f64> = dyads.iter().map(|d| d.probability).collect();
    let labels: Vec<f64> = dyads.iter().filter_map(|d| d.observed).collect();
    let n_positive = labels.iter().filter(|&&l| l == 1.0).count();
    let (pr, roc) = if labels.len() == scores.len() && !labels.is_empty() {
        (
            pr_auc(&scores, &labels).ok(),
            roc_auc(&scores, &labels).ok(),
        )
    } else {
        (None, None)
    };
    AucRow {
        horizon,
        side: side.to_string(),
        n_scored: scores.len(),
        n_positive,
        pr_auc: pr,
        roc_auc: roc,
    }
}

/// Rolling-origin evaluation: for each `t` in `[start, end - 1]`, fit the
/// model on the single step `t-1 -> t` and score the step `t -> t+1`,
/// reporting PR and ROC areas for formation, persistence and their
/// combination.
///
/// Time-varying coefficient terms are demoted to constants for these
/// single-step fits; a one-step window carries no within-fit time variation.
pub fn rolling_evaluation(
    panel: &NetworkPanel,
    spec: &ModelSpec,
    settings: &FitSettings,
    start: Period,
    end: Period,
) -> Result<RollingResult> {
    if end < start + 2 {
        return Err(Error::InsufficientHorizon(format!(
            "evaluation range [{start}, {end}] spans fewer than 3 periods"
        )));
    }
    let first = *panel.periods().first().unwrap();
    let last = *panel.periods().last().unwrap();
    if start < first + 1 || end > last {
        return Err(Error::InsufficientHorizon(format!(
            "range [{start}, {end}] needs fitted step {}..{start} and horizon data up to {end} inside the panel [{first}, {last}]",
            start - 1
        )));
    }
    let step_spec = spec.clone().with_constant_coefficients();
    let time_range = (first as f64, last as f64);
    let ts: Vec<Period> = (start..end).collect();
    let evaluated: Vec<(Period, std::result::Result<PredictionSet, String>)> = ts
        .par_iter()
        .map(|&t| {
            let outcome = (|| -> Result<PredictionSet> {
                let td = build_transition_with(panel, t, settings.transition)?;
                let model = fit_transitions(
                    &[td],
                    panel.covariates(),
                    panel.registry(),
                    &step_spec,
                    settings,
                    time_range,
                    Vec::new(),
                )?;
                predict_transition(&model, panel, t, settings.transition)
            })();
            (t, outcome.map_err(|e| e.to_string()))
        })
        .collect();

    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    for (t, outcome) in evaluated {
        match outcome {
            Ok(pred) => {
                diagnostics.extend(pred.diagnostics.iter().cloned());
                let formation = pred.side_slice(Side::Formation);
                let persistence = pred.side_slice(Side::Persistence);
                let combined: Vec<&ScoredDyad> = pred.scored.iter().collect();
                rows.push(auc_row(pred.horizon, "formation", &formation));
                rows.push(auc_row(pred.horizon, "persistence", &persistence));
                rows.push(auc_row(pred.horizon, "combined", &combined));
            }
            Err(message) => {
                diagnostics.push(format!("step at {t} skipped: {message}"));
            }
        }
    }
    Ok(RollingResult { rows, diagnostics })
}

/// Counter-keyed uniform draw: reproducible for a given
/// (seed, period, replicate, dyad) regardless of evaluation order.
fn counter_uniform(seed: u64, period: Period, replicate: u32, dyad: u32) -> f64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let mut state = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    state = mix(state ^ (period as u32 as u64));
    state = mix(state ^ ((replicate as u64) << 32 | dyad as u64));
    ((state >> 11) as f64) * (1.0 / (1u64 << 53) as f64)
}

/// Simulated networks for the step `t -> t+1`: each formation dyad forms
/// with its fitted probability, each existing edge persists with its fitted
/// probability, and the replicate network is rebuilt from the two draws.
pub fn simulate_networks(
    model: &FittedModel,
    panel: &NetworkPanel,
    t: Period,
    n_sims: usize,
    seed: u64,
    options: TransitionOptions,
) -> Result<Vec<Network>> {
    let (td, _) = scoring_transition(panel, t, options)?;
    let formation_fit = side_fit_for(model, Side::Formation)
        .ok_or_else(|| Error::Design("formation side unavailable for simulation".into()))?;
    let persistence_fit = side_fit_for(model, Side::Persistence)
        .ok_or_else(|| Error::Design("persistence side unavailable for simulation".into()))?;
    let n = td.actors.len();
    let dyad_index = |i: usize, j: usize| -> u32 {
        (i * (n - 1) + if j > i { j - 1 } else { j }) as u32
    };
    let formation_dyads: Vec<(usize, usize)> = td.formation.iter().map(|o| (o.i, o.j)).collect();
    let persistence_dyads: Vec<(usize, usize)> =
        td.persistence.iter().map(|o| (o.i, o.j)).collect();
    let p_plus = if formation_dyads.is_empty() {
        Vec::new()
    } else {
        formation_fit.predict_dyads(&td, panel.covariates(), &formation_dyads)?
    };
    let p_minus = if persistence_dyads.is_empty() {
        Vec::new()
    } else {
        persistence_fit.predict_dyads(&td, panel.covariates(), &persistence_dyads)?
    };

    let replicates: Vec<Network> = (0..n_sims as u32)
        .into_par_iter()
        .map(|rep| {
            let mut y_plus = td.y_prev.clone();
            for (k, &(i, j)) in formation_dyads.iter().enumerate() {
                let u = counter_uniform(seed, td.period, rep, dyad_index(i, j));
                if u < p_plus[k] {
                    y_plus.set(i, j, true);
                }
            }
            let mut y_minus = Network::empty(td.actors.clone());
            for (k, &(i, j)) in persistence_dyads.iter().enumerate() {
                let u = counter_uniform(seed, td.period, rep, dyad_index(i, j));
                if u < p_minus[k] {
                    y_minus.set(i, j, true);
                }
            }
            reconstruct(&td.y_prev, &y_plus, &y_minus)
                .expect("containment holds by construction")
        })
        .collect();
    Ok(replicates)
}

/// Distribution summary of one statistic over replicates.
#[derive(Debug, Clone, Serialize)]
pub struct StatBand {
    pub statistic: String,
    pub observed: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    /// Midrank share of replicates at or below the observation.
    pub observed_quantile: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodGof {
    pub period: Period,
    pub n_replicates: usize,
    pub bands: Vec<StatBand>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GofReport {
    pub periods: Vec<PeriodGof>,
}

/// Linear-interpolation quantile on a sorted sample.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[n - 1]
    }
}

fn band(statistic: &str, observed: f64, values: &[f64]) -> StatBand {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let below = sorted.iter().filter(|&&v| v < observed).count() as f64;
    let equal = sorted.iter().filter(|&&v| v == observed).count() as f64;
    StatBand {
        statistic: statistic.to_string(),
        observed,
        min: sorted[0],
        q25: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q75: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        observed_quantile: (below + 0.5 * equal) / sorted.len() as f64,
    }
}

/// Compare simulated replicate statistics against the observed network,
/// period by period. Observed networks are restricted to the replicate
/// actor set.
pub fn gof_compare(
    simulated: &[(Period, Vec<Network>)],
    observed: &NetworkPanel,
) -> Result<GofReport> {
    let mut periods = Vec::new();
    for (period, replicates) in simulated {
        if replicates.is_empty() {
            continue;
        }
        let obs_net = observed
            .network(*period)?
            .restrict(replicates[0].actors());
        let obs = global_stats(&obs_net)?;
        let rep_stats: Vec<GofStats> = replicates
            .par_iter()
            .map(|net| global_stats(net).expect("replicates have at least 2 actors"))
            .collect();
        let bands = GofStats::NAMES
            .iter()
            .map(|name| {
                let values: Vec<f64> = rep_stats.iter().map(|s| s.get(name).unwrap()).collect();
                band(name, obs.get(name).unwrap(), &values)
            })
            .collect();
        periods.push(PeriodGof {
            period: *period,
            n_replicates: replicates.len(),
            bands,
        });
    }
    Ok(GofReport { periods })
}

/// Simulate each requested step and compare against the observed panel.
pub fn simulation_gof(
    model: &FittedModel,
    panel: &NetworkPanel,
    steps: &[Period],
    n_sims: usize,
    seed: u64,
    options: TransitionOptions,
) -> Result<GofReport> {
    let mut simulated = Vec::new();
    for &t in steps {
        if !panel.has_period(t + 1) {
            return Err(Error::UnknownPeriod(t + 1));
        }
        let replicates = simulate_networks(model, panel, t, n_sims, seed, options)?;
        simulated.push((t + 1, replicates));
    }
    gof_compare(&simulated, panel)
}

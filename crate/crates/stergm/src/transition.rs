//! Step construction: for each pair of consecutive periods, the common actor
//! set, the lagged and current subnetworks, and the formation/persistence
//! row sets with their binary responses.

pub use crate::network::reconstruct;

use crate::error::{Error, Result};
use crate::network::{ActorIdx, Network};
use crate::panel::{NetworkPanel, Period};

/// One observed dyad in a formation or persistence row set (local indices
/// into the transition's actor list).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadObs {
    pub i: usize,
    pub j: usize,
    pub response: f64,
}

/// Data for one step `t-1 -> t` over the common actor set.
#[derive(Debug, Clone)]
pub struct TransitionData {
    pub period: Period,
    /// Common actors, sorted by roster index.
    pub actors: Vec<ActorIdx>,
    /// Roster index whose lagged information each actor uses (differs from
    /// the actor itself only under predecessor substitution).
    pub lag_sources: Vec<ActorIdx>,
    /// Lagged network over the common actors.
    pub y_prev: Network,
    /// Current network over the common actors.
    pub y_curr: Network,
    /// Dyads empty in the lagged network, with their formation responses.
    pub formation: Vec<DyadObs>,
    /// Dyads occupied in the lagged network, with their persistence responses.
    pub persistence: Vec<DyadObs>,
}

impl TransitionData {
    pub fn n_common(&self) -> usize {
        self.actors.len()
    }

    /// Full covariate row for the ordered dyad `(i, j)`: network statistics
    /// on the lagged network, exogenous covariates read at `t - 1` (through
    /// the predecessor state where substitution applies).
    pub fn dyad_row(
        &self,
        covariates: &crate::panel::CovariateTables,
        i: usize,
        j: usize,
    ) -> Result<crate::stats::DyadCovariateRow> {
        let mut row = crate::stats::DyadCovariateRow::network_part(&self.y_prev, i, j)?;
        let lag_period = self.period - 1;
        let (gi, gj) = (self.lag_sources[i], self.lag_sources[j]);
        row.alliance = covariates.alliance(lag_period, gi, gj);
        row.poldiff = covariates.poldiff(lag_period, gi, gj)?;
        row.gdp_i = covariates.gdp(lag_period, gi)?;
        row.gdp_j = covariates.gdp(lag_period, gj)?;
        row.distance = covariates.distance(self.actors[i], self.actors[j])?;
        row.milex_i = covariates.milex(lag_period, gi)?;
        row.milex_j = covariates.milex(lag_period, gj)?;
        Ok(row)
    }
}

/// Options controlling step construction.
#[derive(Debug, Clone, Copy, Default)]
pub struct TransitionOptions {
    /// Substitute a configured predecessor state when an actor is missing
    /// from the previous period.
    pub use_predecessors: bool,
}

/// The common actor set `A^t ∩ A^{t-1}` (without predecessor substitution).
pub fn common_actors(panel: &NetworkPanel, t: Period) -> Result<Vec<ActorIdx>> {
    common_actors_with(panel, t, TransitionOptions::default()).map(|v| v.0)
}

/// Common actors plus the lagged-information source of each, honoring
/// predecessor substitution when enabled.
pub fn common_actors_with(
    panel: &NetworkPanel,
    t: Period,
    options: TransitionOptions,
) -> Result<(Vec<ActorIdx>, Vec<ActorIdx>)> {
    let prev = panel.network(t - 1)?;
    let curr = panel.network(t)?;
    let mut actors = Vec::new();
    let mut sources = Vec::new();
    for &a in curr.actors() {
        if prev.local(a).is_some() {
            actors.push(a);
            sources.push(a);
        } else if options.use_predecessors {
            // walk the predecessor chain until a state observed at t-1
            let mut cur = a;
            while let Some(p) = panel.registry().predecessor(cur) {
                if prev.local(p).is_some() {
                    actors.push(a);
                    sources.push(p);
                    break;
                }
                cur = p;
            }
        }
    }
    Ok((actors, sources))
}

/// Build the transition data for the step ending at `t`.
pub fn build_transition(panel: &NetworkPanel, t: Period) -> Result<TransitionData> {
    build_transition_with(panel, t, TransitionOptions::default())
}

pub fn build_transition_with(
    panel: &NetworkPanel,
    t: Period,
    options: TransitionOptions,
) -> Result<TransitionData> {
    let (actors, lag_sources) = common_actors_with(panel, t, options)?;
    let n = actors.len();
    if n < 3 {
        return Err(Error::TooFewCommonActors { period: t, count: n });
    }
    let prev_full = panel.network(t - 1)?;
    let curr_full = panel.network(t)?;

    let mut y_prev = Network::empty(actors.clone());
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (si, sj) = (lag_sources[i], lag_sources[j]);
            if si == sj {
                continue; // two successors of one predecessor share no lagged tie
            }
            if let (Some(a), Some(b)) = (prev_full.local(si), prev_full.local(sj)) {
                if prev_full.has(a, b) {
                    y_prev.set(i, j, true);
                }
            }
        }
    }
    let y_curr = curr_full.restrict(&actors);

    let mut formation = Vec::new();
    let mut persistence = Vec::new();
    for (i, j) in y_prev.dyads() {
        let response = if y_curr.has(i, j) { 1.0 } else { 0.0 };
        let obs = DyadObs { i, j, response };
        if y_prev.has(i, j) {
            persistence.push(obs);
        } else {
            formation.push(obs);
        }
    }
    Ok(TransitionData {
        period: t,
        actors,
        lag_sources,
        y_prev,
        y_curr,
        formation,
        persistence,
    })
}

/// Build the transitions for every consecutive period pair, skipping steps
/// with too few common actors and reporting them.
pub fn build_all_transitions(
    panel: &NetworkPanel,
    options: TransitionOptions,
) -> Result<(Vec<TransitionData>, Vec<Period>)> {
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for &t in &panel.periods()[1..] {
        match build_transition_with(panel, t, options) {
            Ok(td) => out.push(td),
            Err(Error::TooFewCommonActors { period, .. }) => skipped.push(period),
            Err(e) => return Err(e),
        }
    }
    Ok((out, skipped))
}

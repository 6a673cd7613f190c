//! Dyadic change statistics on lagged networks and whole-network summary
//! statistics used for goodness-of-fit comparisons.
//!
//! Degree and two-path statistics are normed to a 0-100 percent scale so
//! they stay comparable as the actor set changes; reciprocity is the raw
//! lagged indicator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::Network;

/// Outdegree of actor `i` as a percentage of the `n - 1` possible partners.
pub fn outdegree(y: &Network, i: usize) -> Result<f64> {
    let n = y.order();
    if i >= n {
        return Err(Error::ActorOutOfRange { index: i, order: n });
    }
    if n < 2 {
        return Err(Error::NetworkTooSmall { need: 2, have: n });
    }
    let count = (0..n).filter(|&k| k != i && y.has(i, k)).count();
    Ok(100.0 * count as f64 / (n - 1) as f64)
}

/// Indegree of actor `i` as a percentage of the `n - 1` possible partners.
pub fn indegree(y: &Network, i: usize) -> Result<f64> {
    let n = y.order();
    if i >= n {
        return Err(Error::ActorOutOfRange { index: i, order: n });
    }
    if n < 2 {
        return Err(Error::NetworkTooSmall { need: 2, have: n });
    }
    let count = (0..n).filter(|&k| k != i && y.has(k, i)).count();
    Ok(100.0 * count as f64 / (n - 1) as f64)
}

/// Lagged mutual-tie indicator: was `j` already sending to `i`?
pub fn reciprocity(y: &Network, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::ActorOutOfRange {
            index: j,
            order: y.order(),
        });
    }
    Ok(if y.has(j, i) { 1.0 } else { 0.0 })
}

/// Directed two-paths from `i` to `j`, as a percentage of the `n - 2`
/// possible intermediaries.
pub fn transitivity_stat(y: &Network, i: usize, j: usize) -> Result<f64> {
    let n = y.order();
    if n < 3 {
        return Err(Error::NetworkTooSmall { need: 3, have: n });
    }
    if i == j || i >= n || j >= n {
        return Err(Error::ActorOutOfRange {
            index: i.max(j),
            order: n,
        });
    }
    let count = (0..n)
        .filter(|&k| k != i && k != j && y.has(i, k) && y.has(k, j))
        .count();
    Ok(100.0 * count as f64 / (n - 2) as f64)
}

/// Common suppliers of the pair `(i, j)`, as a percentage of the `n - 2`
/// possible third actors.
pub fn shared_suppliers(y: &Network, i: usize, j: usize) -> Result<f64> {
    let n = y.order();
    if n < 3 {
        return Err(Error::NetworkTooSmall { need: 3, have: n });
    }
    if i == j || i >= n || j >= n {
        return Err(Error::ActorOutOfRange {
            index: i.max(j),
            order: n,
        });
    }
    let count = (0..n)
        .filter(|&k| k != i && k != j && y.has(k, i) && y.has(k, j))
        .count();
    Ok(100.0 * count as f64 / (n - 2) as f64)
}

/// Covariate row for one ordered dyad: lagged network statistics plus
/// exogenous covariates, all read one period back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DyadCovariateRow {
    pub sender_outdeg: f64,
    pub receiver_outdeg: f64,
    pub recip: f64,
    pub trans: f64,
    pub shared_sup: f64,
    pub alliance: f64,
    pub poldiff: f64,
    pub gdp_i: f64,
    pub gdp_j: f64,
    pub distance: f64,
    pub milex_i: f64,
    pub milex_j: f64,
}

impl DyadCovariateRow {
    /// The four lagged network statistics for dyad `(i, j)` on `y_prev`,
    /// with zeroed exogenous covariates.
    pub fn network_part(y_prev: &Network, i: usize, j: usize) -> Result<Self> {
        Ok(DyadCovariateRow {
            sender_outdeg: outdegree(y_prev, i)?,
            receiver_outdeg: outdegree(y_prev, j)?,
            recip: reciprocity(y_prev, i, j)?,
            trans: transitivity_stat(y_prev, i, j)?,
            shared_sup: shared_suppliers(y_prev, i, j)?,
            alliance: 0.0,
            poldiff: 0.0,
            gdp_i: 0.0,
            gdp_j: 0.0,
            distance: 0.0,
            milex_i: 0.0,
            milex_j: 0.0,
        })
    }
}

/// Whole-network summary statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GofStats {
    /// Number of edges.
    pub size: f64,
    /// Number of actors with at least one tie in either direction.
    pub order: f64,
    /// Edges relative to the n(n-1) possible ones.
    pub density: f64,
    pub mean_indegree: f64,
    /// Share of edges whose reverse edge is also present; 0 on empty networks.
    pub reciprocity: f64,
    /// Undirected triangle ratio: 3 * triangles / connected triples,
    /// ignoring edge direction; 0 when no connected triples exist.
    pub transitivity: f64,
}

impl GofStats {
    pub const NAMES: [&'static str; 6] = [
        "size",
        "order",
        "density",
        "mean_indegree",
        "reciprocity",
        "transitivity",
    ];

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "size" => Some(self.size),
            "order" => Some(self.order),
            "density" => Some(self.density),
            "mean_indegree" => Some(self.mean_indegree),
            "reciprocity" => Some(self.reciprocity),
            "transitivity" => Some(self.transitivity),
            _ => None,
        }
    }
}

/// Compute the six global statistics of a directed network.
pub fn global_stats(y: &Network) -> Result<GofStats> {
    let n = y.order();
    if n < 2 {
        return Err(Error::NetworkTooSmall { need: 2, have: n });
    }
    let size = y.edge_count();
    let mut active = 0usize;
    for i in 0..n {
        let engaged = (0..n).any(|k| k != i && (y.has(i, k) || y.has(k, i)));
        if engaged {
            active += 1;
        }
    }
    let mut mutual_edges = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j && y.has(i, j) && y.has(j, i) {
                mutual_edges += 1;
            }
        }
    }
    // undirected skeleton: an edge wherever at least one direction exists
    let und = |a: usize, b: usize| y.has(a, b) || y.has(b, a);
    let mut triangles = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if !und(i, j) {
                continue;
            }
            for k in (j + 1)..n {
                if und(i, k) && und(j, k) {
                    triangles += 1;
                }
            }
        }
    }
    let mut triples = 0usize;
    for v in 0..n {
        let deg = (0..n).filter(|&k| k != v && und(v, k)).count();
        triples += deg * deg.saturating_sub(1) / 2;
    }
    Ok(GofStats {
        size: size as f64,
        order: active as f64,
        density: size as f64 / (n * (n - 1)) as f64,
        mean_indegree: size as f64 / n as f64,
        reciprocity: if size == 0 {
            0.0
        } else {
            mutual_edges as f64 / size as f64
        },
        transitivity: if triples == 0 {
            0.0
        } else {
            3.0 * triangles as f64 / triples as f64
        },
    })
}

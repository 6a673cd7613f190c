//! Dense directed binary networks over a fixed set of actors.
//!
//! Actors are referenced by global roster indices; every network stores its
//! own sorted actor list plus an adjacency bitmap over local positions. The
//! diagonal is never stored.

use crate::error::{Error, Result};

/// Index into the panel-wide actor roster.
pub type ActorIdx = u32;

/// A directed binary network on a fixed, sorted actor set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    actors: Vec<ActorIdx>,
    adj: Vec<bool>,
}

impl Network {
    /// Empty network over the given actors. The list is sorted and deduplicated.
    pub fn empty(mut actors: Vec<ActorIdx>) -> Self {
        actors.sort_unstable();
        actors.dedup();
        let n = actors.len();
        Network {
            actors,
            adj: vec![false; n * n],
        }
    }

    /// Build from local-index edge pairs.
    pub fn from_edges(actors: Vec<ActorIdx>, edges: &[(usize, usize)]) -> Self {
        let mut net = Network::empty(actors);
        for &(i, j) in edges {
            net.set(i, j, true);
        }
        net
    }

    pub fn order(&self) -> usize {
        self.actors.len()
    }

    pub fn actors(&self) -> &[ActorIdx] {
        &self.actors
    }

    /// Local position of a roster index, if the actor is in this network.
    pub fn local(&self, actor: ActorIdx) -> Option<usize> {
        self.actors.binary_search(&actor).ok()
    }

    #[inline]
    pub fn has(&self, i: usize, j: usize) -> bool {
        i != j && self.adj[i * self.actors.len() + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, present: bool) {
        assert!(i != j, "self-loops are not representable");
        let n = self.actors.len();
        self.adj[i * n + j] = present;
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }

    /// Iterate ordered dyads (i, j), i != j, in row-major order.
    pub fn dyads(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.actors.len();
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
    }

    /// Edges as local-index pairs, row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.dyads().filter(|&(i, j)| self.has(i, j)).collect()
    }

    /// Restrict to a subset of this network's actors (given as roster indices).
    pub fn restrict(&self, actors: &[ActorIdx]) -> Network {
        let mut out = Network::empty(actors.to_vec());
        for (a, b) in out.clone().dyads() {
            let (ga, gb) = (out.actors[a], out.actors[b]);
            if let (Some(i), Some(j)) = (self.local(ga), self.local(gb)) {
                if self.has(i, j) {
                    out.set(a, b, true);
                }
            }
        }
        out
    }

    fn same_actors(&self, other: &Network) -> bool {
        self.actors == other.actors
    }

    /// Is every edge of `self` also an edge of `other`?
    pub fn subset_of(&self, other: &Network) -> bool {
        self.same_actors(other) && self.adj.iter().zip(&other.adj).all(|(&a, &b)| !a || b)
    }

    pub fn union(&self, other: &Network) -> Network {
        assert!(self.same_actors(other));
        Network {
            actors: self.actors.clone(),
            adj: self.adj.iter().zip(&other.adj).map(|(&a, &b)| a || b).collect(),
        }
    }

    pub fn intersection(&self, other: &Network) -> Network {
        assert!(self.same_actors(other));
        Network {
            actors: self.actors.clone(),
            adj: self.adj.iter().zip(&other.adj).map(|(&a, &b)| a && b).collect(),
        }
    }
}

/// Rebuild the current network from the lagged network together with the
/// formation and persistence networks.
///
/// Both closed forms of the reconstruction identity are computed and must
/// agree: `y_plus \ (y_prev \ y_minus)` and `y_minus ∪ (y_plus \ y_prev)`.
pub fn reconstruct(y_prev: &Network, y_plus: &Network, y_minus: &Network) -> Result<Network> {
    if y_prev.actors != y_plus.actors || y_prev.actors != y_minus.actors {
        return Err(Error::ActorSetMismatch);
    }
    if !y_minus.subset_of(y_prev) {
        return Err(Error::ContainmentViolated(
            "persistence network must be contained in the lagged network",
        ));
    }
    if !y_prev.subset_of(y_plus) {
        return Err(Error::ContainmentViolated(
            "lagged network must be contained in the formation network",
        ));
    }
    let mut a = Network::empty(y_prev.actors.clone());
    let mut b = Network::empty(y_prev.actors.clone());
    for (i, j) in y_prev.dyads() {
        // y_plus minus (y_prev minus y_minus)
        let dissolved = y_prev.has(i, j) && !y_minus.has(i, j);
        a.set(i, j, y_plus.has(i, j) && !dissolved);
        // y_minus union (y_plus minus y_prev)
        b.set(i, j, y_minus.has(i, j) || (y_plus.has(i, j) && !y_prev.has(i, j)));
    }
    debug_assert_eq!(a, b, "the two reconstruction forms must coincide");
    Ok(a)
}

/// Formation network for a step: edges present now or in the lagged network.
pub fn formation_network(y_prev: &Network, y_curr: &Network) -> Network {
    y_prev.union(y_curr)
}

/// Persistence network for a step: edges present both now and in the lagged network.
pub fn persistence_network(y_prev: &Network, y_curr: &Network) -> Network {
    y_prev.intersection(y_curr)
}

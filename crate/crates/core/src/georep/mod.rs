//! Geographic-representation networks: concepts as nodes, expert-set Jaccard
//! similarity as edge weight, summarized by a maximum-similarity spanning
//! tree and a Louvain partition.

mod export;
mod louvain;
mod tree;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::country::CountryCode;
use crate::experts::{expert_overlap, ExpertError, ExpertSet};
use crate::scalar::Scalar;

pub use export::{to_csv, to_dot, to_geojson};
pub use louvain::{louvain_partition, modularity_of, WeightedGraph};
pub use tree::maximum_spanning_forest;

#[derive(Debug, Error)]
pub enum GeoRepError {
    #[error("incompatible expert sets: {0}")]
    IncompatibleSets(String),
    #[error("node {0} has no community assignment")]
    UncoveredNode(CountryCode),
    #[error("tree edges are required for the tree graph; run spanning_tree first")]
    MissingTree,
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error(transparent)]
    Expert(#[from] ExpertError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphChoice {
    /// The spanning tree (or forest).
    #[default]
    Tree,
    /// Every positive-similarity pair.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge<T> {
    pub a: CountryCode,
    pub b: CountryCode,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoRepNetwork<T> {
    pub nodes: Vec<CountryCode>,
    /// Row-major `n x n` similarity matrix.
    pub sim: Vec<T>,
    #[serde(default)]
    pub tree_edges: Vec<TreeEdge<T>>,
    #[serde(default)]
    pub communities: BTreeMap<CountryCode, usize>,
}

/// Pairwise expert-set overlap; nodes sorted by country code.
pub fn build_similarity<T: Scalar>(expert_sets: &[ExpertSet<T>]) -> Result<GeoRepNetwork<T>, GeoRepError> {
    if expert_sets.len() < 2 {
        return Err(GeoRepError::IncompatibleSets(format!("need at least 2 sets, got {}", expert_sets.len())));
    }
    let mut sets: Vec<&ExpertSet<T>> = expert_sets.iter().collect();
    sets.sort_by_key(|s| s.concept);
    if let Some(w) = sets.windows(2).find(|w| w[0].concept == w[1].concept) {
        return Err(GeoRepError::IncompatibleSets(format!("duplicate concept {}", w[0].concept)));
    }
    let n = sets.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values: Vec<T> = pairs
        .par_iter()
        .map(|&(i, j)| {
            expert_overlap(sets[i], sets[j]).map_err(|e| match e {
                ExpertError::IncompatibleSets(m) => GeoRepError::IncompatibleSets(m),
                other => other.into(),
            })
        })
        .collect::<Result<_, _>>()?;
    let mut sim = vec![T::zero(); n * n];
    for i in 0..n {
        sim[i * n + i] = T::one();
    }
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        sim[i * n + j] = v;
        sim[j * n + i] = v;
    }
    Ok(GeoRepNetwork { nodes: sets.iter().map(|s| s.concept).collect(), sim, tree_edges: Vec::new(), communities: BTreeMap::new() })
}

impl<T: Scalar> GeoRepNetwork<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn similarity(&self, i: usize, j: usize) -> T {
        self.sim[i * self.nodes.len() + j]
    }

    pub fn index_of(&self, c: CountryCode) -> Option<usize> {
        self.nodes.binary_search(&c).ok()
    }

    /// Fills `tree_edges` with the maximum-similarity spanning forest.
    pub fn spanning_tree(mut self) -> Self {
        self.tree_edges = maximum_spanning_forest(self.nodes.len(), |i, j| self.similarity(i, j))
            .into_iter()
            .map(|(i, j, w)| TreeEdge { a: self.nodes[i], b: self.nodes[j], weight: w })
            .collect();
        self
    }

    pub fn graph(&self, choice: GraphChoice) -> Result<WeightedGraph<T>, GeoRepError> {
        let n = self.nodes.len();
        let mut g = WeightedGraph::new(n);
        match choice {
            GraphChoice::Tree => {
                if self.tree_edges.is_empty() && n > 1 && self.has_positive_pair() {
                    return Err(GeoRepError::MissingTree);
                }
                for e in &self.tree_edges {
                    let (a, b) = (self.require(e.a)?, self.require(e.b)?);
                    g.add_edge(a, b, e.weight);
                }
            }
            GraphChoice::Full => {
                for i in 0..n {
                    for j in i + 1..n {
                        let w = self.similarity(i, j);
                        if w > T::zero() {
                            g.add_edge(i, j, w);
                        }
                    }
                }
            }
        }
        Ok(g)
    }

    fn has_positive_pair(&self) -> bool {
        let n = self.nodes.len();
        (0..n).any(|i| (i + 1..n).any(|j| self.similarity(i, j) > T::zero()))
    }

    fn require(&self, c: CountryCode) -> Result<usize, GeoRepError> {
        self.index_of(c).ok_or_else(|| GeoRepError::Invalid(format!("edge endpoint {c} is not a node")))
    }

    /// Runs Louvain on the chosen graph and stores contiguous community ids.
    pub fn louvain(mut self, choice: GraphChoice, seed: u64) -> Result<Self, GeoRepError> {
        let g = self.graph(choice)?;
        let part = louvain_partition(&g, seed);
        self.communities = self.nodes.iter().copied().zip(part).collect();
        Ok(self)
    }

    /// Newman modularity of `partition` on the chosen graph.
    pub fn modularity(&self, choice: GraphChoice, partition: &BTreeMap<CountryCode, usize>) -> Result<T, GeoRepError> {
        let labels = self
            .nodes
            .iter()
            .map(|c| partition.get(c).copied().ok_or(GeoRepError::UncoveredNode(*c)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(modularity_of(&self.graph(choice)?, &labels))
    }

    pub fn community_count(&self) -> usize {
        self.communities.values().max().map_or(0, |m| m + 1)
    }

    /// Structural checks: square symmetric matrix with unit diagonal, sorted
    /// nodes, acyclic tree with `n - components` edges, contiguous communities.
    pub fn validate(&self) -> Result<(), GeoRepError> {
        let n = self.nodes.len();
        let bad = |m: String| Err(GeoRepError::Invalid(m));
        if self.sim.len() != n * n {
            return bad(format!("similarity has {} entries for {n} nodes", self.sim.len()));
        }
        if self.nodes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("nodes not strictly sorted".into());
        }
        for i in 0..n {
            if self.similarity(i, i) != T::one() {
                return bad(format!("diagonal entry {i} is not 1"));
            }
            for j in 0..n {
                let v = self.similarity(i, j);
                if v != self.similarity(j, i) || !(T::zero()..=T::one()).contains(&v) {
                    return bad(format!("entry ({i}, {j}) asymmetric or outside [0, 1]"));
                }
            }
        }
        if !self.tree_edges.is_empty() {
            let mut dsu = tree::Dsu::new(n);
            for e in &self.tree_edges {
                let (a, b) = (self.require(e.a)?, self.require(e.b)?);
                if !dsu.union(a, b) {
                    return bad(format!("tree has a cycle through {}-{}", e.a, e.b));
                }
            }
            let comps = maximum_spanning_forest(n, |i, j| self.similarity(i, j)).len();
            if self.tree_edges.len() != comps {
                return bad(format!("tree has {} edges, expected {comps}", self.tree_edges.len()));
            }
        }
        if !self.communities.is_empty() {
            if self.communities.len() != n || self.nodes.iter().any(|c| !self.communities.contains_key(c)) {
                return bad("communities do not cover the nodes".into());
            }
            let k = self.community_count();
            let mut used = vec![false; k];
            for &c in self.communities.values() {
                used[c] = true;
            }
            if used.iter().any(|u| !u) {
                return bad("community ids are not contiguous".into());
            }
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), GeoRepError>
    where
        T: Serialize,
    {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, GeoRepError>
    where
        T: for<'de> Deserialize<'de>,
    {
        let net: Self = serde_json::from_reader(r)?;
        net.validate()?;
        Ok(net)
    }
}

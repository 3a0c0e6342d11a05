//! Neighbourhood score: agreement between a network's tree and real borders.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::country::{CodeError, CountryCode};
use crate::georep::GeoRepNetwork;
use crate::scalar::Scalar;

const BUILTIN_ADJACENCY: &str = include_str!("../data/adjacency.csv");

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("country {0} is not a network node")]
    UnknownCountry(CountryCode),
    #[error("adjacency line {line}: {message}")]
    Adjacency { line: usize, message: String },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Symmetric, irreflexive border relation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdjacencyMap {
    borders: BTreeMap<CountryCode, BTreeSet<CountryCode>>,
}

impl AdjacencyMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `a`–`b` in both directions.
    pub fn insert(&mut self, a: CountryCode, b: CountryCode) -> Result<(), MetricsError> {
        if a == b {
            return Err(MetricsError::Adjacency { line: 0, message: format!("{a} cannot border itself") });
        }
        self.borders.entry(a).or_default().insert(b);
        self.borders.entry(b).or_default().insert(a);
        Ok(())
    }

    /// Reads `iso3_a,iso3_b` lines. A first line that does not parse as two
    /// codes is taken as a header; blank lines and `#` comments are skipped.
    pub fn from_csv<R: BufRead>(r: R) -> Result<Self, MetricsError> {
        let mut map = Self::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let bad = |message: String| MetricsError::Adjacency { line: i + 1, message };
            let mut parts = t.split(',').map(str::trim);
            let (a, b) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => return Err(bad(format!("expected two fields, got {t:?}"))),
            };
            let (a, b) = match (a.parse::<CountryCode>(), b.parse::<CountryCode>()) {
                (Ok(a), Ok(b)) => (a, b),
                _ if i == 0 => continue,
                (Err(e), _) | (_, Err(e)) => return Err(bad(e.to_string())),
            };
            map.insert(a, b).map_err(|_| bad(format!("{a} cannot border itself")))?;
        }
        Ok(map)
    }

    /// Land and sea borders among the default 69-country universe.
    pub fn builtin() -> Self {
        Self::from_csv(BUILTIN_ADJACENCY.as_bytes()).expect("builtin adjacency is valid")
    }

    pub fn borders(&self, c: CountryCode) -> Option<&BTreeSet<CountryCode>> {
        self.borders.get(&c)
    }

    pub fn are_neighbors(&self, a: CountryCode, b: CountryCode) -> bool {
        self.borders.get(&a).is_some_and(|s| s.contains(&b))
    }

    pub fn contains(&self, c: CountryCode) -> bool {
        self.borders.contains_key(&c)
    }

    /// Undirected pairs `(a, b)` with `a < b`.
    pub fn pairs(&self) -> impl Iterator<Item = (CountryCode, CountryCode)> + '_ {
        self.borders.iter().flat_map(|(&a, s)| s.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    pub fn len(&self) -> usize {
        self.pairs().count()
    }

    pub fn is_empty(&self) -> bool {
        self.borders.is_empty()
    }
}

fn tree_neighbors<T: Scalar>(net: &GeoRepNetwork<T>, c: CountryCode) -> BTreeSet<CountryCode> {
    net.tree_edges
        .iter()
        .filter_map(|e| match (e.a == c, e.b == c) {
            (true, false) => Some(e.b),
            (false, true) => Some(e.a),
            _ => None,
        })
        .collect()
}

/// `N_c`: tree neighbours of `c` that share a border with it.
pub fn real_neighbor_set<T: Scalar>(
    net: &GeoRepNetwork<T>,
    adjacency: &AdjacencyMap,
    c: CountryCode,
) -> Result<BTreeSet<CountryCode>, MetricsError> {
    net.index_of(c).ok_or(MetricsError::UnknownCountry(c))?;
    Ok(tree_neighbors(net, c).into_iter().filter(|&j| adjacency.are_neighbors(c, j)).collect())
}

/// `n_s(c) = |N_c| + Σ_{j ∈ N_c} |N_j|`.
pub fn neighbourhood_score_node<T: Scalar>(
    net: &GeoRepNetwork<T>,
    adjacency: &AdjacencyMap,
    c: CountryCode,
) -> Result<usize, MetricsError> {
    let n_c = real_neighbor_set(net, adjacency, c)?;
    let mut total = n_c.len();
    for &j in &n_c {
        total += real_neighbor_set(net, adjacency, j)?.len();
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighbourhoodReport {
    pub raw: usize,
    /// `100 · |{c : n_s(c) > 0}| / |nodes|`.
    pub connected_pct: f64,
    pub per_node: BTreeMap<CountryCode, usize>,
    /// Alternative reading: share of nodes with a real border inside their
    /// tree 2-hop ball. Present only when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_hop_ball_pct: Option<f64>,
    /// Nodes absent from the adjacency file, scored as border-less.
    pub missing: Vec<CountryCode>,
}

#[derive(Debug, Clone, Serialize)]
struct SummaryJson<'a> {
    raw: usize,
    connected_pct: f64,
    flags: SummaryFlags<'a>,
}

#[derive(Debug, Clone, Serialize)]
struct SummaryFlags<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    two_hop_ball_pct: Option<f64>,
    missing_adjacency: &'a [CountryCode],
    nodes: usize,
}

impl NeighbourhoodReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), MetricsError> {
        writeln!(w, "country,n_s")?;
        for (c, n) in &self.per_node {
            writeln!(w, "{c},{n}")?;
        }
        Ok(())
    }

    /// Summary `{raw, connected_pct, flags}`.
    pub fn write_summary_json<W: Write>(&self, w: W) -> Result<(), MetricsError> {
        let s = SummaryJson {
            raw: self.raw,
            connected_pct: self.connected_pct,
            flags: SummaryFlags { two_hop_ball_pct: self.two_hop_ball_pct, missing_adjacency: &self.missing, nodes: self.per_node.len() },
        };
        serde_json::to_writer_pretty(w, &s)?;
        Ok(())
    }
}

fn ball_of<T: Scalar>(net: &GeoRepNetwork<T>, c: CountryCode) -> BTreeSet<CountryCode> {
    let first = tree_neighbors(net, c);
    let mut ball = first.clone();
    for &j in &first {
        ball.extend(tree_neighbors(net, j));
    }
    ball.remove(&c);
    ball
}

/// Network-level score. Nodes missing from `adjacency` are warned about and
/// treated as having no borders.
pub fn neighbourhood_score<T: Scalar>(net: &GeoRepNetwork<T>, adjacency: &AdjacencyMap, two_hop_ball: bool) -> NeighbourhoodReport {
    let missing: Vec<CountryCode> = net.nodes.iter().copied().filter(|&c| !adjacency.contains(c)).collect();
    if !missing.is_empty() {
        warn!("{} network nodes have no adjacency entry: {:?}", missing.len(), missing);
    }
    let per_node: BTreeMap<CountryCode, usize> = net
        .nodes
        .par_iter()
        .map(|&c| (c, neighbourhood_score_node(net, adjacency, c).expect("node is in network")))
        .collect();
    let n = net.nodes.len();
    let pct = |k: usize| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
    let connected = per_node.values().filter(|&&v| v > 0).count();
    let two_hop_ball_pct = two_hop_ball.then(|| {
        let hit = net.nodes.iter().filter(|&&c| ball_of(net, c).iter().any(|&j| adjacency.are_neighbors(c, j))).count();
        pct(hit)
    });
    NeighbourhoodReport { raw: per_node.values().sum(), connected_pct: pct(connected), per_node, two_hop_ball_pct, missing }
}

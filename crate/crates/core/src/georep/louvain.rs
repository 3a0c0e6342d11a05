use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Undirected weighted graph. A self-loop of weight `w` counts `2w` towards
/// its node's degree, matching the adjacency-matrix convention `A_ii = 2w`.
#[derive(Debug, Clone)]
pub struct WeightedGraph<T> {
    adj: Vec<Vec<(usize, T)>>,
    self_loops: Vec<T>,
}

impl<T: Scalar> WeightedGraph<T> {
    pub fn new(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n], self_loops: vec![T::zero(); n] }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn add_edge(&mut self, a: usize, b: usize, w: T) {
        if a == b {
            self.self_loops[a] = self.self_loops[a] + w;
        } else {
            self.adj[a].push((b, w));
            self.adj[b].push((a, w));
        }
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, T)] {
        &self.adj[i]
    }

    /// Row sum of the adjacency matrix.
    pub fn degree(&self, i: usize) -> T {
        self.adj[i].iter().map(|&(_, w)| w).sum::<T>() + self.self_loops[i] + self.self_loops[i]
    }

    /// `2m`, the sum of all degrees.
    pub fn total_degree(&self) -> T {
        (0..self.len()).map(|i| self.degree(i)).sum()
    }

    fn loop_entry(&self, i: usize) -> T {
        self.self_loops[i] + self.self_loops[i]
    }
}

/// `Q = (1/2m) Σ_c [Σ_in(c) - Σ_tot(c)² / 2m]`; zero on an edgeless graph.
pub fn modularity_of<T: Scalar>(g: &WeightedGraph<T>, labels: &[usize]) -> T {
    assert_eq!(labels.len(), g.len(), "one label per node");
    let two_m = g.total_degree();
    if two_m <= T::zero() {
        return T::zero();
    }
    let mut inside: BTreeMap<usize, T> = BTreeMap::new();
    let mut total: BTreeMap<usize, T> = BTreeMap::new();
    for i in 0..g.len() {
        let c = labels[i];
        let mut w_in = g.loop_entry(i);
        for &(j, w) in g.neighbors(i) {
            if labels[j] == c {
                w_in = w_in + w;
            }
        }
        let e = inside.entry(c).or_insert(T::zero());
        *e = *e + w_in;
        let t = total.entry(c).or_insert(T::zero());
        *t = *t + g.degree(i);
    }
    let mut q = T::zero();
    for (c, w_in) in inside {
        let tot = total[&c];
        q = q + w_in - tot * tot / two_m;
    }
    q / two_m
}

/// One local-moving pass over `g`; returns the community of every node and
/// whether any node moved.
fn local_moves<T: Scalar>(g: &WeightedGraph<T>, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let n = g.len();
    let two_m = g.total_degree();
    let degree: Vec<T> = (0..n).map(|i| g.degree(i)).collect();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut tot = degree.clone();
    let eps = T::epsilon() * T::lit(64.0) * two_m;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut link = vec![T::zero(); n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_move = false;
    loop {
        let mut moved = false;
        for &i in &order {
            let k_i = degree[i];
            let old = comm[i];
            touched.clear();
            for &(j, w) in g.neighbors(i) {
                let c = comm[j];
                if link[c] == T::zero() && !touched.contains(&c) {
                    touched.push(c);
                }
                link[c] = link[c] + w;
            }
            tot[old] = tot[old] - k_i;
            let gain = |c: usize, link_c: T| link_c - tot[c] * k_i / two_m;
            let mut best = old;
            let mut best_gain = gain(old, link[old]);
            for &c in &touched {
                let g_c = gain(c, link[c]);
                if g_c > best_gain + eps {
                    best = c;
                    best_gain = g_c;
                }
            }
            tot[best] = tot[best] + k_i;
            comm[i] = best;
            for &c in &touched {
                link[c] = T::zero();
            }
            link[old] = T::zero();
            if best != old {
                moved = true;
                any_move = true;
            }
        }
        if !moved {
            break;
        }
    }
    (comm, any_move)
}

fn relabel(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut next = 0;
    let out = labels
        .iter()
        .map(|&l| {
            *map.entry(l).or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    (out, next)
}

fn aggregate<T: Scalar>(g: &WeightedGraph<T>, comm: &[usize], k: usize) -> WeightedGraph<T> {
    let mut weights: BTreeMap<(usize, usize), T> = BTreeMap::new();
    let mut loops = vec![T::zero(); k];
    for i in 0..g.len() {
        let ci = comm[i];
        loops[ci] = loops[ci] + g.self_loops[i];
        for &(j, w) in g.neighbors(i) {
            let cj = comm[j];
            if ci == cj {
                // seen from both endpoints: half each
                loops[ci] = loops[ci] + w / T::lit(2.0);
            } else if ci < cj {
                let e = weights.entry((ci, cj)).or_insert(T::zero());
                *e = *e + w;
            }
        }
    }
    let mut out = WeightedGraph::new(k);
    out.self_loops = loops;
    for ((a, b), w) in weights {
        out.add_edge(a, b, w);
    }
    out
}

/// Two-phase Louvain modularity maximization (resolution 1). The node sweep
/// order at every level is a seeded shuffle. Community ids are contiguous and
/// numbered by first appearance in node order.
pub fn louvain_partition<T: Scalar>(g: &WeightedGraph<T>, seed: u64) -> Vec<usize> {
    let n = g.len();
    let singletons: Vec<usize> = (0..n).collect();
    if g.total_degree() <= T::zero() {
        return singletons;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut membership = singletons.clone();
    let mut level = g.clone();
    loop {
        let (comm, moved) = local_moves(&level, &mut rng);
        if !moved {
            break;
        }
        let (comm, k) = relabel(&comm);
        for m in membership.iter_mut() {
            *m = comm[*m];
        }
        if k == level.len() {
            break;
        }
        level = aggregate(&level, &comm, k);
    }
    let (membership, _) = relabel(&membership);
    if modularity_of(g, &membership) < modularity_of(g, &singletons) {
        return singletons;
    }
    membership
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cliques() -> WeightedGraph<f64> {
        let mut g = WeightedGraph::new(6);
        for (a, b) in [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)] {
            g.add_edge(a, b, 1.0);
        }
        g.add_edge(2, 3, 0.1);
        g
    }

    #[test]
    fn cliques_split() {
        let g = two_cliques();
        for seed in 0..10 {
            assert_eq!(louvain_partition(&g, seed), vec![0, 0, 0, 1, 1, 1]);
        }
    }

    #[test]
    fn single_edge_merges() {
        let mut g = WeightedGraph::<f64>::new(2);
        g.add_edge(0, 1, 0.4);
        assert_eq!(louvain_partition(&g, 0), vec![0, 0]);
        assert!((modularity_of(&g, &[0, 1]) + 0.5).abs() < 1e-15);
        assert!(modularity_of(&g, &[0, 0]).abs() < 1e-15);
    }

    #[test]
    fn edgeless_graph_is_singletons() {
        let g = WeightedGraph::<f64>::new(3);
        assert_eq!(louvain_partition(&g, 0), vec![0, 1, 2]);
        assert_eq!(modularity_of(&g, &[0, 1, 2]), 0.0);
    }

    #[test]
    fn aggregation_preserves_modularity() {
        let g = two_cliques();
        let comm = vec![0, 0, 0, 1, 1, 1];
        let agg = aggregate(&g, &comm, 2);
        assert!((agg.total_degree() - g.total_degree()).abs() < 1e-12);
        let q_fine = modularity_of(&g, &comm);
        let q_coarse = modularity_of(&agg, &[0, 1]);
        assert!((q_fine - q_coarse).abs() < 1e-12);
    }

    #[test]
    fn path_of_four_merges_into_one() {
        let mut g = WeightedGraph::new(4);
        for (a, b) in [(0, 1), (1, 2), (2, 3)] {
            g.add_edge(a, b, 1.0f32);
        }
        let p = louvain_partition(&g, 5);
        assert!(modularity_of(&g, &p) >= modularity_of(&g, &[0, 0, 1, 1]) - 1e-6);
    }
}

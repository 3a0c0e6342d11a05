use crate::scalar::{cmp_scalar, Scalar};

/// Union-find with path halving and union by size.
pub(crate) struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Kruskal over pairs `i < j` with positive weight, heaviest first; equal
/// weights are taken in `(i, j)` order. Zero-weight pairs are not edges, so
/// the result is a spanning forest with `n - components` edges.
pub fn maximum_spanning_forest<T: Scalar>(n: usize, weight: impl Fn(usize, usize) -> T) -> Vec<(usize, usize, T)> {
    let mut edges: Vec<(usize, usize, T)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, weight(i, j)))
        .filter(|&(_, _, w)| w > T::zero())
        .collect();
    edges.sort_by(|a, b| cmp_scalar(b.2, a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut dsu = Dsu::new(n);
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for (i, j, w) in edges {
        if dsu.union(i, j) {
            out.push((i, j, w));
            if out.len() + 1 == n {
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle() {
        let w = [[1.0, 0.9, 0.1], [0.9, 1.0, 0.8], [0.1, 0.8, 1.0]];
        let t = maximum_spanning_forest(3, |i, j| w[i][j]);
        assert_eq!(t, vec![(0, 1, 0.9), (1, 2, 0.8)]);
    }

    #[test]
    fn ties_follow_pair_order() {
        let t = maximum_spanning_forest(3, |_, _| 0.5f64);
        assert_eq!(t, vec![(0, 1, 0.5), (0, 2, 0.5)]);
    }

    #[test]
    fn zero_similarity_splits_forest() {
        // {0,1} and {2,3} with no cross similarity
        let t = maximum_spanning_forest(4, |i, j| if (i < 2) == (j < 2) { 0.7f64 } else { 0.0 });
        assert_eq!(t.len(), 2);
        assert!(maximum_spanning_forest(3, |_, _| 0.0f64).is_empty());
    }
}

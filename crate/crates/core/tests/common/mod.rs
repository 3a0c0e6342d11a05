//! Definition-literal reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use geoprobe_core::country::{CountryCode, LanguageTag};
use geoprobe_core::generation::GeneratedRecord;
use geoprobe_core::georep::{GeoRepNetwork, TreeEdge};
use geoprobe_core::metrics::AdjacencyMap;

pub fn cc(s: &str) -> CountryCode {
    CountryCode::new(s).unwrap()
}

pub fn tag(s: &str) -> LanguageTag {
    LanguageTag::new(s).unwrap()
}

/// Pseudo code for index `i`: `ZAA`, `ZAB`, ...
pub fn code(i: usize) -> CountryCode {
    let b = [b'Z', b'A' + (i / 26) as u8, b'A' + (i % 26) as u8];
    CountryCode::new(std::str::from_utf8(&b).unwrap()).unwrap()
}

/// Rank of example `i` when sorted by score descending, ties by index.
fn rank(scores: &[f64], i: usize) -> usize {
    1 + (0..scores.len()).filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i)).count()
}

/// Mean over positives of precision at the positive's rank, O(n²).
pub fn ap_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let pos: Vec<usize> = (0..scores.len()).filter(|&i| labels[i]).collect();
    let mut total = 0.0;
    for &i in &pos {
        let r = rank(scores, i);
        let hits = pos.iter().filter(|&&j| rank(scores, j) <= r).count();
        total += hits as f64 / r as f64;
    }
    total / pos.len() as f64
}

/// Heaviest acyclic subset of positive edges, by enumerating all subsets.
pub fn max_forest_weight(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| w[i][j] > 0.0).collect();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << edges.len()) {
        let mut comp: Vec<usize> = (0..n).collect();
        let mut ok = true;
        let mut total = 0.0;
        for (k, &(i, j)) in edges.iter().enumerate() {
            if mask & (1 << k) == 0 {
                continue;
            }
            let (ci, cj) = (comp[i], comp[j]);
            if ci == cj {
                ok = false;
                break;
            }
            for c in comp.iter_mut() {
                if *c == cj {
                    *c = ci;
                }
            }
            total += w[i][j];
        }
        if ok {
            best = best.max(total);
        }
    }
    best
}

/// `Q = (1/2m) Σ_ij [A_ij - k_i k_j / 2m] δ(c_i, c_j)` on a dense matrix.
pub fn modularity_oracle(a: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = a.len();
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// All set partitions of `n` items as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for l in 0..=next {
            prefix.push(l);
            rec(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, &mut out);
    out
}

/// Network with the given tree edges and no similarity structure.
pub fn tree_network(nodes: &[CountryCode], edges: &[(CountryCode, CountryCode)]) -> GeoRepNetwork<f64> {
    let mut nodes = nodes.to_vec();
    nodes.sort();
    let n = nodes.len();
    let mut sim = vec![0.0; n * n];
    for i in 0..n {
        sim[i * n + i] = 1.0;
    }
    GeoRepNetwork {
        nodes,
        sim,
        tree_edges: edges.iter().map(|&(a, b)| TreeEdge { a, b, weight: 1.0 }).collect(),
        communities: BTreeMap::new(),
    }
}

/// `n_s(c) = |N_c| + Σ_{j∈N_c} |N_j|`, recomputing each `N` from edge lists.
pub fn ns_oracle(edges: &[(CountryCode, CountryCode)], borders: &[(CountryCode, CountryCode)], c: CountryCode) -> usize {
    let linked = |x: CountryCode, y: CountryCode, list: &[(CountryCode, CountryCode)]| list.iter().any(|&(a, b)| (a == x && b == y) || (a == y && b == x));
    let n_of = |x: CountryCode| -> Vec<CountryCode> {
        let mut v: Vec<CountryCode> = edges.iter().filter_map(|&(a, b)| if a == x { Some(b) } else if b == x { Some(a) } else { None }).collect();
        v.sort();
        v.dedup();
        v.into_iter().filter(|&j| linked(x, j, borders)).collect()
    };
    let n_c = n_of(c);
    n_c.len() + n_c.iter().map(|&j| n_of(j).len()).sum::<usize>()
}

pub fn adjacency(pairs: &[(CountryCode, CountryCode)]) -> AdjacencyMap {
    let mut m = AdjacencyMap::new();
    for &(a, b) in pairs {
        m.insert(a, b).unwrap();
    }
    m
}

/// Standard normal CDF by composite Simpson integration of the density.
pub fn normal_cdf_simpson(z: f64) -> f64 {
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let (a, b) = if z < 0.0 { (z, 0.0) } else { (0.0, z) };
    let n = 2000;
    let h = (b - a) / n as f64;
    let mut s = pdf(a) + pdf(b);
    for i in 1..n {
        s += pdf(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let area = s * h / 3.0;
    if z < 0.0 {
        0.5 - area
    } else {
        0.5 + area
    }
}

/// KS statistic of `values` against the log-normal with the sample's log
/// mean and population log standard deviation, by brute-force ECDF.
pub fn ks_oracle(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mu = logs.iter().sum::<f64>() / n;
    let sigma = (logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / n).sqrt();
    let mut d = 0.0f64;
    for &x in values {
        let f = normal_cdf_simpson((x.ln() - mu) / sigma);
        let at = values.iter().filter(|&&y| y <= x).count() as f64 / n;
        let below = values.iter().filter(|&&y| y < x).count() as f64 / n;
        d = d.max((at - f).abs()).max((below - f).abs());
    }
    d
}

/// Skewness via raw moments: `(E[x³] - 3μE[x²] + 2μ³) / (E[x²] - μ²)^{3/2}`.
pub fn skewness_oracle(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let e1 = values.iter().sum::<f64>() / n;
    let e2 = values.iter().map(|x| x * x).sum::<f64>() / n;
    let e3 = values.iter().map(|x| x * x * x).sum::<f64>() / n;
    (e3 - 3.0 * e1 * e2 + 2.0 * e1.powi(3)) / (e2 - e1 * e1).powf(1.5)
}

/// Literal double loop over concepts and prefixes.
pub fn rs_oracle(records: &[GeneratedRecord], target: &str, m: usize) -> usize {
    let concepts: BTreeSet<CountryCode> = records.iter().map(|r| r.concept).collect();
    let prefixes: BTreeSet<CountryCode> = records.iter().map(|r| r.prefix_country).collect();
    let top = |counts: &BTreeMap<CountryCode, u64>, m: usize| -> Vec<CountryCode> {
        let mut v: Vec<(CountryCode, u64)> = counts.iter().filter(|(_, &n)| n > 0).map(|(&c, &n)| (c, n)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter().take(m).map(|(c, _)| c).collect()
    };
    let mut global: BTreeMap<CountryCode, u64> = BTreeMap::new();
    for r in records {
        for (&c, &n) in r.country_counts.as_ref().unwrap() {
            *global.entry(c).or_default() += n;
        }
    }
    let top10 = top(&global, 10);
    let mut score = 0;
    for &c in &concepts {
        for &p in &prefixes {
            let group: Vec<&GeneratedRecord> = records.iter().filter(|r| r.concept == c && r.prefix_country == p).collect();
            if group.is_empty() {
                continue;
            }
            let mut counts: BTreeMap<CountryCode, u64> = BTreeMap::new();
            for r in group {
                for (&k, &n) in r.country_counts.as_ref().unwrap() {
                    *counts.entry(k).or_default() += n;
                }
            }
            let t = top(&counts, m);
            let hit = match target {
                "prefix" => t.contains(&p),
                "concept" => t.contains(&c),
                _ => t.iter().any(|x| top10.contains(x)),
            };
            if hit {
                score += 1;
            }
        }
    }
    score
}

/// Per expected language: (total detected, drifted) by recounting.
pub fn drift_oracle(records: &[GeneratedRecord]) -> BTreeMap<LanguageTag, (usize, usize)> {
    let langs: BTreeSet<LanguageTag> = records.iter().filter(|r| r.detected_language.is_some()).map(|r| r.expected_language).collect();
    langs
        .into_iter()
        .map(|l| {
            let total = records.iter().filter(|r| r.expected_language == l && r.detected_language.is_some()).count();
            let drifted = records.iter().filter(|r| r.expected_language == l && r.detected_language.is_some_and(|d| d != l)).count();
            (l, (total, drifted))
        })
        .collect()
}

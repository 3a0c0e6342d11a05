//! Expert units: feed-forward units whose pooled response ranks a concept's
//! positive sentences above its negatives, scored by average precision.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::ActivationDump;
use crate::country::CountryCode;
use crate::scalar::{cmp_scalar, Scalar};

#[derive(Debug, Error)]
pub enum ExpertError {
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("average precision needs at least 2 examples, got {0}")]
    TooFewExamples(usize),
    #[error("labels are all positive or all negative")]
    DegenerateLabels,
    #[error("non-finite score at index {0}")]
    NonFiniteScore(usize),
    #[error("k = {k} is outside 1..={max}")]
    BadK { k: usize, max: usize },
    #[error("both expert sets are empty")]
    EmptySets,
    #[error("incompatible expert sets: {0}")]
    IncompatibleSets(String),
    #[error("invalid expert set: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Average precision of `scores` as a ranking of `labels`.
///
/// Examples are ranked by descending score, equal scores by ascending index.
/// The result is the mean, over positives, of the precision at each
/// positive's rank.
pub fn average_precision<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<T, ExpertError> {
    if scores.len() != labels.len() {
        return Err(ExpertError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    if scores.len() < 2 {
        return Err(ExpertError::TooFewExamples(scores.len()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(ExpertError::NonFiniteScore(i));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(ExpertError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| cmp_scalar(scores[b], scores[a]).then(a.cmp(&b)));

    let mut hits = 0usize;
    let mut sum = T::zero();
    for (rank, &i) in order.iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum = sum + T::from_count(hits) / T::from_count(rank + 1);
        }
    }
    Ok(sum / T::from_count(positives))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopKMode {
    /// `k` units from every layer.
    #[default]
    PerLayer,
    /// `k` units overall, whichever layers they come from.
    Global,
}

/// Statistic over positive-example scores used as the forcing value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetStat {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    pub mode: TopKMode,
    pub target: TargetStat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpertUnit<T> {
    pub layer: usize,
    pub unit: usize,
    pub ap: T,
    pub target_value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertSet<T> {
    pub concept: CountryCode,
    pub model_id: String,
    pub dataset_name: String,
    pub k: usize,
    pub units: Vec<ExpertUnit<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_layers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units_per_layer: Option<usize>,
}

fn target_of<T: Scalar>(scores: &[f32], labels: &[bool], stat: TargetStat) -> T {
    let mut pos: Vec<T> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(&s, _)| T::lit(f64::from(s)))
        .collect();
    match stat {
        TargetStat::Mean => pos.iter().copied().sum::<T>() / T::from_count(pos.len()),
        TargetStat::Median => {
            pos.sort_by(|a, b| cmp_scalar(*a, *b));
            let n = pos.len();
            if n % 2 == 1 {
                pos[n / 2]
            } else {
                (pos[n / 2 - 1] + pos[n / 2]) / T::lit(2.0)
            }
        }
    }
}

/// Ranks every unit of `dump` by average precision and keeps the top `k`.
pub fn extract_experts<T: Scalar>(dump: &ActivationDump, k: usize, opts: ExtractOptions) -> Result<ExpertSet<T>, ExpertError> {
    let (layers, units) = (dump.num_layers(), dump.units_per_layer());
    let max = match opts.mode {
        TopKMode::PerLayer => units,
        TopKMode::Global => layers * units,
    };
    if k == 0 || k > max {
        return Err(ExpertError::BadK { k, max });
    }
    let labels = dump.labels();
    let aps: Vec<T> = (0..layers * units)
        .into_par_iter()
        .map(|i| {
            let s: Vec<T> = dump.unit_scores(i / units, i % units).iter().map(|&v| T::lit(f64::from(v))).collect();
            average_precision(&s, labels)
        })
        .collect::<Result<_, _>>()?;

    let by_ap = |a: &usize, b: &usize| cmp_scalar(aps[*b], aps[*a]).then(a.cmp(b));
    let mut chosen: Vec<usize> = match opts.mode {
        TopKMode::PerLayer => (0..layers)
            .flat_map(|l| {
                let mut idx: Vec<usize> = (l * units..(l + 1) * units).collect();
                idx.sort_by(by_ap);
                idx.truncate(k);
                idx
            })
            .collect(),
        TopKMode::Global => {
            let mut idx: Vec<usize> = (0..layers * units).collect();
            idx.sort_by(by_ap);
            idx.truncate(k);
            idx
        }
    };
    chosen.sort_by(|a, b| (a / units).cmp(&(b / units)).then_with(|| by_ap(a, b)));

    let units_out = chosen
        .into_iter()
        .map(|i| {
            let (layer, unit) = (i / units, i % units);
            ExpertUnit { layer, unit, ap: aps[i], target_value: target_of(dump.unit_scores(layer, unit), labels, opts.target) }
        })
        .collect();
    Ok(ExpertSet {
        concept: dump.concept(),
        model_id: dump.model_id().to_string(),
        dataset_name: dump.dataset_name().to_string(),
        k,
        units: units_out,
        num_layers: Some(layers),
        units_per_layer: Some(units),
    })
}

impl<T: Scalar> ExpertSet<T> {
    pub fn unit_keys(&self) -> BTreeSet<(usize, usize)> {
        self.units.iter().map(|u| (u.layer, u.unit)).collect()
    }

    /// Checks ordering, per-layer cardinality, uniqueness and shape bounds.
    pub fn validate(&self) -> Result<(), ExpertError> {
        let bad = |m: String| Err(ExpertError::Invalid(m));
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if self.unit_keys().len() != self.units.len() {
            return bad("duplicate (layer, unit)".into());
        }
        let mut per_layer: BTreeMap<usize, Vec<&ExpertUnit<T>>> = BTreeMap::new();
        for u in &self.units {
            if !u.ap.is_finite() || u.ap < T::zero() || u.ap > T::one() {
                return bad(format!("ap of ({}, {}) outside [0, 1]", u.layer, u.unit));
            }
            if self.num_layers.is_some_and(|l| u.layer >= l) || self.units_per_layer.is_some_and(|n| u.unit >= n) {
                return bad(format!("({}, {}) outside the declared shape", u.layer, u.unit));
            }
            per_layer.entry(u.layer).or_default().push(u);
        }
        for (layer, us) in per_layer {
            if us.len() > self.k {
                return bad(format!("layer {layer} has {} > k units", us.len()));
            }
            if us.windows(2).any(|w| w[0].ap < w[1].ap) {
                return bad(format!("layer {layer} not ordered by ap"));
            }
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<(), ExpertError> {
        if self.model_id != other.model_id {
            return Err(ExpertError::IncompatibleSets(format!("model {} vs {}", self.model_id, other.model_id)));
        }
        let shape = |s: &Self| (s.num_layers, s.units_per_layer);
        if let ((Some(a), Some(b)), (Some(c), Some(d))) = (shape(self), shape(other)) {
            if (a, b) != (c, d) {
                return Err(ExpertError::IncompatibleSets(format!("shape {a}x{b} vs {c}x{d}")));
            }
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), ExpertError>
    where
        T: Serialize,
    {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, ExpertError>
    where
        T: for<'de> Deserialize<'de>,
    {
        let set: Self = serde_json::from_reader(r)?;
        set.validate()?;
        Ok(set)
    }
}

/// Jaccard similarity of the two sets of `(layer, unit)` pairs.
pub fn expert_overlap<T: Scalar>(a: &ExpertSet<T>, b: &ExpertSet<T>) -> Result<T, ExpertError> {
    a.check_compatible(b)?;
    let (ka, kb) = (a.unit_keys(), b.unit_keys());
    let union = ka.union(&kb).count();
    if union == 0 {
        return Err(ExpertError::EmptySets);
    }
    let inter = ka.intersection(&kb).count();
    Ok(T::from_count(inter) / T::from_count(union))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cc(s: &str) -> CountryCode {
        CountryCode::new(s).unwrap()
    }

    fn set(units: &[(usize, usize)]) -> ExpertSet<f64> {
        ExpertSet {
            concept: cc("IND"),
            model_id: "m".into(),
            dataset_name: "USA-eng".into(),
            k: 10,
            units: units.iter().map(|&(layer, unit)| ExpertUnit { layer, unit, ap: 0.5, target_value: 1.0 }).collect(),
            num_layers: None,
            units_per_layer: None,
        }
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[0.9, 0.8, 0.1], &[true, true, false]).unwrap(), 1.0);
        let ap = average_precision(&[0.9f64, 0.8, 0.7, 0.1], &[true, false, true, false]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
        let ap32 = average_precision(&[0.9f32, 0.8, 0.7, 0.1], &[true, false, true, false]).unwrap();
        assert!((ap32 - 5.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn ap_ties_break_by_index() {
        // tie: the earlier index ranks first
        assert_eq!(average_precision(&[0.5, 0.5], &[true, false]).unwrap(), 1.0);
        assert_eq!(average_precision(&[0.5, 0.5], &[false, true]).unwrap(), 0.5);
    }

    #[test]
    fn ap_errors() {
        assert!(matches!(average_precision(&[1.0, 0.0], &[true, true]), Err(ExpertError::DegenerateLabels)));
        assert!(matches!(average_precision(&[1.0, 0.0], &[false, false]), Err(ExpertError::DegenerateLabels)));
        assert!(matches!(average_precision(&[1.0], &[true]), Err(ExpertError::TooFewExamples(1))));
        assert!(matches!(average_precision(&[1.0, 0.0], &[true]), Err(ExpertError::LengthMismatch { .. })));
        assert!(matches!(average_precision(&[f64::NAN, 0.0], &[true, false]), Err(ExpertError::NonFiniteScore(0))));
    }

    fn dump(layers: usize, units: usize, labels: Vec<bool>, f: impl Fn(usize, usize, usize) -> f32) -> ActivationDump {
        let e = labels.len();
        let mut scores = Vec::new();
        for l in 0..layers {
            for u in 0..units {
                for x in 0..e {
                    scores.push(f(l, u, x));
                }
            }
        }
        ActivationDump::new("m", "USA-eng", cc("IND"), layers, units, labels, scores).unwrap()
    }

    #[test]
    fn planted_perfect_expert() {
        let labels = vec![true, false, true, false, false];
        let lab = labels.clone();
        let d = dump(1, 3, labels, move |_, u, x| if u == 1 { f32::from(u8::from(lab[x])) } else { ((x * 7 + u * 3) % 5) as f32 });
        let set = extract_experts::<f64>(&d, 1, ExtractOptions::default()).unwrap();
        assert_eq!(set.units.len(), 1);
        assert_eq!((set.units[0].layer, set.units[0].unit), (0, 1));
        assert_eq!(set.units[0].ap, 1.0);
        assert_eq!(set.units[0].target_value, 1.0);
        set.validate().unwrap();
    }

    #[test]
    fn exhaustive_selection_is_sorted() {
        let labels = vec![true, false, true, false];
        let d = dump(2, 4, labels, |l, u, x| ((l * 13 + u * 5 + x * 3) % 7) as f32);
        let set = extract_experts::<f64>(&d, 4, ExtractOptions::default()).unwrap();
        assert_eq!(set.units.len(), 8);
        set.validate().unwrap();
        for layer in 0..2 {
            let layer_units: Vec<_> = set.units.iter().filter(|u| u.layer == layer).collect();
            assert_eq!(layer_units.len(), 4);
            assert!(layer_units.windows(2).all(|w| w[0].ap > w[1].ap || (w[0].ap == w[1].ap && w[0].unit < w[1].unit)));
        }
    }

    #[test]
    fn global_mode_and_median() {
        let labels = vec![true, true, true, false];
        let d = dump(2, 3, labels, |l, u, x| if l == 1 && u == 2 { [3.0, 1.0, 2.0, 0.0][x] } else { x as f32 });
        let opts = ExtractOptions { mode: TopKMode::Global, target: TargetStat::Median };
        let set = extract_experts::<f64>(&d, 1, opts).unwrap();
        assert_eq!((set.units[0].layer, set.units[0].unit), (1, 2));
        assert_eq!(set.units[0].target_value, 2.0);
        assert!(matches!(extract_experts::<f64>(&d, 7, opts), Err(ExpertError::BadK { k: 7, max: 6 })));
        assert!(matches!(extract_experts::<f64>(&d, 4, ExtractOptions::default()), Err(ExpertError::BadK { .. })));
        assert!(matches!(extract_experts::<f64>(&d, 0, ExtractOptions::default()), Err(ExpertError::BadK { .. })));
    }

    #[test]
    fn overlap_examples() {
        let a = set(&[(0, 1), (0, 2), (1, 3)]);
        let b = set(&[(0, 2), (1, 3), (2, 4)]);
        assert_eq!(expert_overlap(&a, &b).unwrap(), 0.5);
        assert_eq!(expert_overlap(&a, &a).unwrap(), 1.0);
        assert_eq!(expert_overlap(&a, &set(&[(5, 5)])).unwrap(), 0.0);
        assert!(matches!(expert_overlap(&set(&[]), &set(&[])), Err(ExpertError::EmptySets)));
        let mut c = b.clone();
        c.model_id = "other".into();
        assert!(matches!(expert_overlap(&a, &c), Err(ExpertError::IncompatibleSets(_))));
    }

    #[test]
    fn json_shape() {
        let s = set(&[(0, 1)]);
        let mut buf = Vec::new();
        s.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["units"][0]["target_value"], 1.0);
        assert!(v.get("num_layers").is_none());
        assert_eq!(ExpertSet::<f64>::read_json(&buf[..]).unwrap(), s);
        let bad = br#"{"concept":"IND","model_id":"m","dataset_name":"d","k":1,"units":[{"layer":0,"unit":0,"ap":0.5,"target_value":0},{"layer":0,"unit":1,"ap":0.4,"target_value":0}]}"#;
        assert!(matches!(ExpertSet::<f64>::read_json(&bad[..]), Err(ExpertError::Invalid(_))));
    }
}

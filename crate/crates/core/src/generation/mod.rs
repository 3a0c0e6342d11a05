//! Analysis of generated text: entity-country distributions, representation
//! score, distribution shape, language drift and generation planning.

mod langid;
mod report;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::country::{CountryCode, LanguageTag};
use crate::gazetteer::Gazetteer;

pub use langid::{identify_language, LangIdError, LanguageProfiles, TrigramProfile, MIN_TEXT_CHARS, PROFILE_SIZE};
pub use report::{drift_pairs_csv, rs_table_csv, shape_table_csv, top_share_csv, RsRow, ShapeRow, ShareRow};
pub use stats::{kolmogorov_q, ks_lognormal, skewness, KsResult, StatsError, KS_MIN_VALUES};

/// Default drift fraction above which a (concept, prefix) pair is reported.
pub const DEFAULT_DRIFT_THRESHOLD: f64 = 0.5;
/// Default number of top-represented countries per group.
pub const DEFAULT_RS_M: usize = 3;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("requested {requested} templates per concept but only {available} exist")]
    TemplatesExhausted { requested: usize, available: usize },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("record {index}: {message}")]
    InvalidRecord { index: usize, message: String },
    #[error("record {index} has no country counts; map entities first")]
    MissingCounts { index: usize },
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedRecord {
    pub concept: CountryCode,
    pub prefix_country: CountryCode,
    pub template_id: u32,
    pub expected_language: LanguageTag,
    pub text: String,
    pub perplexity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detected_language: Option<LanguageTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country_counts: Option<BTreeMap<CountryCode, u64>>,
}

impl GeneratedRecord {
    pub fn validate(&self, index: usize) -> Result<(), GenError> {
        if !(self.perplexity.is_finite() && self.perplexity > 0.0) {
            return Err(GenError::InvalidRecord { index, message: format!("perplexity {} is not finite and positive", self.perplexity) });
        }
        Ok(())
    }
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<GeneratedRecord>, GenError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GeneratedRecord = serde_json::from_str(&line).map_err(|source| GenError::Json { line: i + 1, source })?;
        rec.validate(out.len())?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_records<W: Write>(records: &[GeneratedRecord], mut w: W) -> Result<(), GenError> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|source| GenError::Json { line: 0, source })?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Entity counts per country.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryDistribution {
    counts: BTreeMap<CountryCode, u64>,
    total: u64,
}

impl CountryDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Zero entries are dropped.
    pub fn from_counts(counts: impl IntoIterator<Item = (CountryCode, u64)>) -> Self {
        let mut d = Self::new();
        for (c, n) in counts {
            d.add(c, n);
        }
        d
    }

    pub fn add(&mut self, c: CountryCode, n: u64) {
        if n > 0 {
            *self.counts.entry(c).or_default() += n;
            self.total += n;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for (&c, &n) in &other.counts {
            self.add(c, n);
        }
    }

    pub fn get(&self, c: CountryCode) -> u64 {
        self.counts.get(&c).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<CountryCode, u64> {
        &self.counts
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// `P(c) = counts[c] / total`; zero for an empty distribution.
    pub fn probability(&self, c: CountryCode) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.get(c) as f64 / self.total as f64
        }
    }

    /// Percentage of all mentions that fall on the `m` most-represented countries.
    pub fn top_share(&self, m: usize) -> Result<f64, GenError> {
        let top = top_represented(self, m)?;
        Ok(100.0 * top.iter().map(|&c| self.get(c)).sum::<u64>() as f64 / self.total as f64)
    }
}

/// Counts every gazetteer match in `text`.
pub fn map_entities(text: &str, language: LanguageTag, gazetteer: &Gazetteer) -> CountryDistribution {
    let mut d = CountryDistribution::new();
    for m in gazetteer.find(text, language) {
        d.add(m.country, 1);
    }
    d
}

/// Fills missing `country_counts` by gazetteer mapping and missing
/// `detected_language` by trigram identification. Texts too short to
/// classify keep `detected_language = None`.
pub fn annotate_records(records: &mut [GeneratedRecord], gazetteer: &Gazetteer, profiles: Option<&LanguageProfiles>) {
    records.par_iter_mut().for_each(|r| {
        if r.country_counts.is_none() {
            r.country_counts = Some(map_entities(&r.text, r.expected_language, gazetteer).counts);
        }
        if r.detected_language.is_none() {
            if let Some(p) = profiles {
                r.detected_language = identify_language(&r.text, p).ok().map(|(l, _)| l);
            }
        }
    });
}

/// The `m` countries with the highest counts, ties by ascending code.
pub fn top_represented(dist: &CountryDistribution, m: usize) -> Result<Vec<CountryCode>, GenError> {
    if dist.total == 0 {
        return Err(GenError::EmptyDistribution);
    }
    let mut v: Vec<(CountryCode, u64)> = dist.counts.iter().map(|(&c, &n)| (c, n)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(v.into_iter().take(m).map(|(c, _)| c).collect())
}

fn record_counts(r: &GeneratedRecord, index: usize) -> Result<&BTreeMap<CountryCode, u64>, GenError> {
    r.country_counts.as_ref().ok_or(GenError::MissingCounts { index })
}

/// Sum of all record distributions.
pub fn aggregate_distribution<'a>(records: impl IntoIterator<Item = &'a GeneratedRecord>) -> Result<CountryDistribution, GenError> {
    let mut d = CountryDistribution::new();
    for (i, r) in records.into_iter().enumerate() {
        for (&c, &n) in record_counts(r, i)? {
            d.add(c, n);
        }
    }
    Ok(d)
}

/// Merged distribution per `(concept, prefix)` group.
pub fn group_distributions(records: &[GeneratedRecord]) -> Result<BTreeMap<(CountryCode, CountryCode), CountryDistribution>, GenError> {
    let mut out: BTreeMap<(CountryCode, CountryCode), CountryDistribution> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let d = out.entry((r.concept, r.prefix_country)).or_default();
        for (&c, &n) in record_counts(r, i)? {
            d.add(c, n);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RsTarget {
    Prefix,
    Concept,
    Top10,
}

impl RsTarget {
    pub const ALL: [RsTarget; 3] = [RsTarget::Prefix, RsTarget::Concept, RsTarget::Top10];

    pub fn as_str(self) -> &'static str {
        match self {
            RsTarget::Prefix => "prefix",
            RsTarget::Concept => "concept",
            RsTarget::Top10 => "top10",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsResult {
    pub score: usize,
    pub groups: usize,
    /// Groups with an empty distribution.
    pub skipped: usize,
}

/// `RS = #{(c, p) : top_m(c, p) ∩ A_x ≠ ∅}` where `A_x` is `{p}`, `{c}` or
/// the ten most frequent countries over all records.
pub fn representation_score(records: &[GeneratedRecord], target: RsTarget, m: usize) -> Result<RsResult, GenError> {
    let groups = group_distributions(records)?;
    let top10: BTreeSet<CountryCode> = match target {
        RsTarget::Top10 => {
            let all = aggregate_distribution(records)?;
            if all.is_empty() {
                BTreeSet::new()
            } else {
                top_represented(&all, 10)?.into_iter().collect()
            }
        }
        _ => BTreeSet::new(),
    };
    let mut res = RsResult { score: 0, groups: groups.len(), skipped: 0 };
    for (&(concept, prefix), dist) in &groups {
        let top = match top_represented(dist, m) {
            Ok(t) => t,
            Err(GenError::EmptyDistribution) => {
                res.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let hit = top.iter().any(|c| match target {
            RsTarget::Prefix => *c == prefix,
            RsTarget::Concept => *c == concept,
            RsTarget::Top10 => top10.contains(c),
        });
        res.score += usize::from(hit);
    }
    Ok(res)
}

/// Nonzero counts, or counts over `universe` with zeros when given.
pub fn count_values(dist: &CountryDistribution, universe: Option<&[CountryCode]>) -> Vec<f64> {
    match universe {
        None => dist.counts.values().map(|&n| n as f64).collect(),
        Some(u) => {
            let keys: BTreeSet<CountryCode> = u.iter().copied().chain(dist.counts.keys().copied()).collect();
            keys.into_iter().map(|c| dist.get(c) as f64).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageDrift {
    pub total: usize,
    pub drifted: usize,
    pub fraction: f64,
    /// Detected languages other than the expected one, most frequent first.
    pub targets: Vec<(LanguageTag, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftPair {
    pub expected_language: LanguageTag,
    pub concept: CountryCode,
    pub prefix_country: CountryCode,
    pub total: usize,
    pub drifted: usize,
    pub fraction: f64,
    pub top_target: Option<LanguageTag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub per_language: BTreeMap<LanguageTag, LanguageDrift>,
    /// Pairs with drift fraction strictly above the threshold.
    pub pairs: Vec<DriftPair>,
    /// Records without a detected language.
    pub undetected: usize,
}

fn ranked_targets(counts: BTreeMap<LanguageTag, usize>) -> Vec<(LanguageTag, usize)> {
    let mut v: Vec<(LanguageTag, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

/// Drift fraction per expected language and per `(language, concept, prefix)`.
pub fn language_drift(records: &[GeneratedRecord], threshold: f64) -> DriftReport {
    type Tally = (usize, BTreeMap<LanguageTag, usize>);
    let mut by_lang: BTreeMap<LanguageTag, Tally> = BTreeMap::new();
    let mut by_pair: BTreeMap<(LanguageTag, CountryCode, CountryCode), Tally> = BTreeMap::new();
    let mut undetected = 0;
    for r in records {
        let Some(detected) = r.detected_language else {
            undetected += 1;
            continue;
        };
        for t in [by_lang.entry(r.expected_language).or_default(), by_pair.entry((r.expected_language, r.concept, r.prefix_country)).or_default()] {
            t.0 += 1;
            if detected != r.expected_language {
                *t.1.entry(detected).or_default() += 1;
            }
        }
    }
    let per_language = by_lang
        .into_iter()
        .map(|(l, (total, targets))| {
            let drifted = targets.values().sum();
            (l, LanguageDrift { total, drifted, fraction: drifted as f64 / total as f64, targets: ranked_targets(targets) })
        })
        .collect();
    let pairs = by_pair
        .into_iter()
        .filter_map(|((expected_language, concept, prefix_country), (total, targets))| {
            let drifted: usize = targets.values().sum();
            let fraction = drifted as f64 / total as f64;
            (fraction > threshold).then(|| DriftPair {
                expected_language,
                concept,
                prefix_country,
                total,
                drifted,
                fraction,
                top_target: ranked_targets(targets).first().map(|t| t.0),
            })
        })
        .collect();
    DriftReport { per_language, pairs, undetected }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanJob {
    pub concept: CountryCode,
    pub template_id: u32,
    pub prefix_country: CountryCode,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationPlan {
    pub jobs: Vec<PlanJob>,
}

impl GenerationPlan {
    pub fn total_records(&self) -> usize {
        self.jobs.iter().map(|j| j.samples).sum()
    }
}

/// `n_c · n_t · n_p · n_s`, or `None` on overflow.
pub fn plan_size(n_c: usize, n_t: usize, n_p: usize, n_s: usize) -> Option<usize> {
    n_c.checked_mul(n_t)?.checked_mul(n_p)?.checked_mul(n_s)
}

/// One job per (concept, template, prefix). Each concept draws `n_t`
/// distinct templates from `template_ids` with a seeded sample that depends
/// only on `seed` and the concept code.
pub fn generation_plan(
    concepts: &[CountryCode],
    template_ids: &[u32],
    n_t: usize,
    prefixes: &[CountryCode],
    samples: usize,
    seed: u64,
) -> Result<GenerationPlan, GenError> {
    if concepts.is_empty() || prefixes.is_empty() || n_t == 0 || samples == 0 {
        return Err(GenError::InvalidPlan("concepts, prefixes, templates and samples must be positive".into()));
    }
    let available: BTreeSet<u32> = template_ids.iter().copied().collect();
    if n_t > available.len() {
        return Err(GenError::TemplatesExhausted { requested: n_t, available: available.len() });
    }
    let available: Vec<u32> = available.into_iter().collect();
    let mut jobs = Vec::with_capacity(concepts.len() * n_t * prefixes.len());
    for &concept in concepts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_of(concept));
        let mut chosen: Vec<u32> = available.choose_multiple(&mut rng, n_t).copied().collect();
        chosen.sort_unstable();
        for &template_id in &chosen {
            for &prefix_country in prefixes {
                jobs.push(PlanJob { concept, template_id, prefix_country, samples });
            }
        }
    }
    Ok(GenerationPlan { jobs })
}

fn stream_of(c: CountryCode) -> u64 {
    c.as_str().bytes().fold(0u64, |acc, b| (acc << 8) | u64::from(b))
}

/// The `n` lowest-perplexity records; equal perplexities keep input order.
pub fn select_lowest_perplexity(candidates: &[GeneratedRecord], n: usize) -> Vec<GeneratedRecord> {
    let mut v: Vec<&GeneratedRecord> = candidates.iter().collect();
    v.sort_by(|a, b| a.perplexity.total_cmp(&b.perplexity));
    v.into_iter().take(n).cloned().collect()
}

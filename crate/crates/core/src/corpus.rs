//! Country/concept datasets built from pre-collected news sentences, their
//! augmentations, and multilingual generation prefixes.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::country::{CodeError, CountryCode, CountryNames, CountryUniverse, LanguageTag};
use crate::gazetteer::Gazetteer;

pub const POSITIVES_PER_CONCEPT: usize = 100;
pub const NEGATIVES_PER_CONCEPT: usize = 300;
pub const MASK_TOKEN: &str = "[ENT]";
pub const COUNTRY_PLACEHOLDER: &str = "<country>";

const DEFAULT_TEMPLATES: &str = include_str!("../data/templates.json");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("concept {0} has no distinct positive sentence")]
    EmptyConcept(CountryCode),
    #[error("concept {concept}: {available} candidate negatives, {required} required")]
    InsufficientNegatives { concept: CountryCode, available: usize, required: usize },
    #[error("concept {concept}: filler pool has {available} usable sentences, {needed} needed")]
    FillerExhausted { concept: CountryCode, needed: usize, available: usize },
    #[error("no {language} name for {country}")]
    MissingLocalizedName { country: CountryCode, language: LanguageTag },
    #[error("template must contain exactly one {COUNTRY_PLACEHOLDER} placeholder, found {0}")]
    BadTemplate(usize),
    #[error("dataset invariant violated: {0}")]
    Invariant(String),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One line of the raw news input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawNewsRecord {
    pub text: String,
    pub language: String,
    pub source_country: String,
    #[serde(default)]
    pub country: Option<String>,
    #[serde(default)]
    pub published: String,
    #[serde(default)]
    pub url: String,
}

pub fn read_raw_news<R: BufRead>(reader: R) -> Result<Vec<RawNewsRecord>, CorpusError> {
    read_jsonl(reader)
}

fn read_jsonl<T: for<'de> Deserialize<'de>, R: BufRead>(reader: R) -> Result<Vec<T>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| CorpusError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceExample {
    pub text: String,
    pub label: bool,
    pub language: LanguageTag,
    pub source_country: CountryCode,
    /// Index of the earlier positive this one duplicates when upsampled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeated_from: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptExamples {
    pub positives: Vec<SentenceExample>,
    pub negatives: Vec<SentenceExample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativesMode {
    /// Negatives mention no universe country at all.
    OutOfDomain,
    /// Negatives only avoid the concept's own country.
    InDomain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptDataset {
    pub name: String,
    pub source_country: CountryCode,
    pub language: LanguageTag,
    pub concepts: BTreeMap<CountryCode, ConceptExamples>,
}

#[derive(Debug, Clone)]
pub struct DatasetParams {
    pub source_country: CountryCode,
    pub language: LanguageTag,
    pub negatives_mode: NegativesMode,
    pub seed: u64,
    /// Drop concepts without any positive sentence instead of failing.
    pub skip_empty_concepts: bool,
}

pub fn dataset_name(source: CountryCode, language: LanguageTag) -> String {
    format!("{source}-{language}")
}

fn concept_rng(seed: u64, concept: CountryCode) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = concept.as_str().as_bytes();
    rng.set_stream(u64::from_be_bytes([0, 0, 0, 0, 0, b[0], b[1], b[2]]));
    rng
}

/// Builds a `{C}-{l}` dataset with exactly 100 positives and 300 negatives
/// per concept of `universe`.
pub fn build_concept_dataset(
    raw: &[RawNewsRecord],
    universe: &CountryUniverse,
    gazetteer: &Gazetteer,
    params: &DatasetParams,
) -> Result<ConceptDataset, CorpusError> {
    let mut seen = HashSet::new();
    let texts: Vec<&str> = raw
        .iter()
        .filter(|r| r.language == params.language.as_str() && r.source_country == params.source_country.as_str())
        .map(|r| r.text.trim())
        .filter(|t| !t.is_empty() && seen.insert(*t))
        .collect();

    let mentions: Vec<HashSet<CountryCode>> = texts
        .par_iter()
        .map(|t| {
            gazetteer
                .find(t, params.language)
                .into_iter()
                .map(|m| m.country)
                .filter(|c| universe.contains(*c))
                .collect()
        })
        .collect();

    let example = |text: &str, label: bool| SentenceExample {
        text: text.to_string(),
        label,
        language: params.language,
        source_country: params.source_country,
        repeated_from: None,
    };

    let concepts: Vec<CountryCode> = universe.iter().collect();
    let built: Vec<Result<Option<(CountryCode, ConceptExamples)>, CorpusError>> = concepts
        .par_iter()
        .map(|&concept| {
            let mut rng = concept_rng(params.seed, concept);
            let pos_pool: Vec<usize> = (0..texts.len()).filter(|&i| mentions[i].contains(&concept)).collect();
            let neg_pool: Vec<usize> = (0..texts.len())
                .filter(|&i| match params.negatives_mode {
                    NegativesMode::OutOfDomain => mentions[i].is_empty(),
                    NegativesMode::InDomain => !mentions[i].contains(&concept),
                })
                .collect();
            if pos_pool.is_empty() {
                return if params.skip_empty_concepts {
                    log::warn!("skipping concept {concept}: no positive sentence");
                    Ok(None)
                } else {
                    Err(CorpusError::EmptyConcept(concept))
                };
            }
            if neg_pool.len() < NEGATIVES_PER_CONCEPT {
                return Err(CorpusError::InsufficientNegatives {
                    concept,
                    available: neg_pool.len(),
                    required: NEGATIVES_PER_CONCEPT,
                });
            }

            let positives = if pos_pool.len() >= POSITIVES_PER_CONCEPT {
                pos_pool
                    .choose_multiple(&mut rng, POSITIVES_PER_CONCEPT)
                    .map(|&i| example(texts[i], true))
                    .collect()
            } else {
                upsample(&pos_pool, &mut rng).into_iter().map(|i| example(texts[i], true)).collect()
            };
            let positives = mark_repeats(positives);
            let negatives = neg_pool
                .choose_multiple(&mut rng, NEGATIVES_PER_CONCEPT)
                .map(|&i| example(texts[i], false))
                .collect();
            Ok(Some((concept, ConceptExamples { positives, negatives })))
        })
        .collect();

    let mut out = BTreeMap::new();
    for r in built {
        if let Some((c, ex)) = r? {
            out.insert(c, ex);
        }
    }
    Ok(ConceptDataset {
        name: dataset_name(params.source_country, params.language),
        source_country: params.source_country,
        language: params.language,
        concepts: out,
    })
}

/// Round-robin repetition of the distinct pool up to the positive quota, then
/// a seeded shuffle.
fn upsample(pool: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut picks: Vec<usize> = (0..POSITIVES_PER_CONCEPT).map(|i| pool[i % pool.len()]).collect();
    picks.shuffle(rng);
    picks
}

fn mark_repeats(mut examples: Vec<SentenceExample>) -> Vec<SentenceExample> {
    let mut first: HashMap<String, usize> = HashMap::new();
    for (i, ex) in examples.iter_mut().enumerate() {
        ex.repeated_from = None;
        match first.get(&ex.text) {
            Some(&j) => ex.repeated_from = Some(j),
            None => {
                first.insert(ex.text.clone(), i);
            }
        }
    }
    examples
}

impl ConceptDataset {
    /// Checks counts, repetition provenance and alias containment.
    pub fn check_invariants(&self, gazetteer: &Gazetteer, universe: &CountryUniverse, mode: NegativesMode) -> Result<(), CorpusError> {
        let fail = |m: String| Err(CorpusError::Invariant(m));
        for (&c, ex) in &self.concepts {
            if ex.positives.len() != POSITIVES_PER_CONCEPT || ex.negatives.len() != NEGATIVES_PER_CONCEPT {
                return fail(format!("{c}: {} positives / {} negatives", ex.positives.len(), ex.negatives.len()));
            }
            for (i, p) in ex.positives.iter().enumerate() {
                if p.text.trim().is_empty() || !p.label {
                    return fail(format!("{c}: positive {i} empty or mislabeled"));
                }
                if let Some(j) = p.repeated_from {
                    if j >= i || ex.positives[j].text != p.text {
                        return fail(format!("{c}: positive {i} has bad repeated_from {j}"));
                    }
                }
                if !gazetteer.mentions(&p.text, self.language, c) {
                    return fail(format!("{c}: positive {i} does not mention the concept"));
                }
            }
            for (i, n) in ex.negatives.iter().enumerate() {
                if n.text.trim().is_empty() || n.label {
                    return fail(format!("{c}: negative {i} empty or mislabeled"));
                }
                let hits = gazetteer.find(&n.text, self.language);
                let bad = match mode {
                    NegativesMode::OutOfDomain => hits.iter().any(|m| universe.contains(m.country)),
                    NegativesMode::InDomain => hits.iter().any(|m| m.country == c),
                };
                if bad {
                    return fail(format!("{c}: negative {i} mentions a forbidden country"));
                }
            }
        }
        Ok(())
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            name: self.name.clone(),
            source_country: self.source_country,
            language: self.language,
            concepts: self
                .concepts
                .iter()
                .map(|(&c, ex)| (c, ConceptCounts { positives: ex.positives.len(), negatives: ex.negatives.len() }))
                .collect(),
        }
    }

    /// Writes one JSON line per example, concepts in code order, positives first.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), CorpusError> {
        for (&concept, ex) in &self.concepts {
            for example in ex.positives.iter().chain(&ex.negatives) {
                let line = DatasetLine { concept, example: example.clone() };
                serde_json::to_writer(&mut w, &line).map_err(|source| CorpusError::Json { line: 0, source })?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(reader: R, manifest: &DatasetManifest) -> Result<Self, CorpusError> {
        let lines: Vec<DatasetLine> = read_jsonl(reader)?;
        let mut concepts: BTreeMap<CountryCode, ConceptExamples> = BTreeMap::new();
        for l in lines {
            let entry = concepts.entry(l.concept).or_default();
            if l.example.label {
                entry.positives.push(l.example);
            } else {
                entry.negatives.push(l.example);
            }
        }
        let ds = ConceptDataset {
            name: manifest.name.clone(),
            source_country: manifest.source_country,
            language: manifest.language,
            concepts,
        };
        if ds.manifest() != *manifest {
            return Err(CorpusError::Invariant("example counts disagree with manifest".into()));
        }
        Ok(ds)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetLine {
    concept: CountryCode,
    #[serde(flatten)]
    example: SentenceExample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptCounts {
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub source_country: CountryCode,
    pub language: LanguageTag,
    pub concepts: BTreeMap<CountryCode, ConceptCounts>,
}

/// Externally supplied entity spans, keyed by exact sentence text. Ranges are
/// byte offsets into that text.
#[derive(Debug, Clone, Default)]
pub struct SpanAnnotations {
    spans: HashMap<String, Vec<(usize, usize)>>,
}

#[derive(Debug, Deserialize)]
struct SpanLine {
    text: String,
    spans: Vec<(usize, usize)>,
}

impl SpanAnnotations {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, text: impl Into<String>, start: usize, end: usize) {
        self.spans.entry(text.into()).or_default().push((start, end));
    }

    /// JSON lines `{"text": str, "spans": [[start, end], ...]}`.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let mut out = Self::new();
        for l in read_jsonl::<SpanLine, _>(reader)? {
            out.spans.entry(l.text).or_default().extend(l.spans);
        }
        Ok(out)
    }

    fn get(&self, text: &str) -> &[(usize, usize)] {
        self.spans.get(text).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Replaces every other-country alias and every annotated span in the
/// positives with [`MASK_TOKEN`]; the concept's own aliases are kept.
pub fn mask_entities(dataset: &ConceptDataset, spans: Option<&SpanAnnotations>, gazetteer: &Gazetteer) -> ConceptDataset {
    let mut out = dataset.clone();
    for (&concept, ex) in out.concepts.iter_mut() {
        for p in ex.positives.iter_mut() {
            p.text = mask_text(&p.text, concept, dataset.language, spans, gazetteer);
        }
        // upsampled duplicates stay duplicates, provenance still valid
    }
    out
}

fn mask_text(text: &str, concept: CountryCode, language: LanguageTag, spans: Option<&SpanAnnotations>, gazetteer: &Gazetteer) -> String {
    let matches = gazetteer.find(text, language);
    let own: Vec<(usize, usize)> = matches.iter().filter(|m| m.country == concept).map(|m| (m.start, m.end)).collect();
    let overlaps_own = |s: usize, e: usize| own.iter().any(|&(os, oe)| s < oe && os < e);

    let mut ranges: Vec<(usize, usize)> = matches.iter().filter(|m| m.country != concept).map(|m| (m.start, m.end)).collect();
    if let Some(spans) = spans {
        for &(s, e) in spans.get(text) {
            if s >= e || e > text.len() || !text.is_char_boundary(s) || !text.is_char_boundary(e) {
                log::warn!("ignoring invalid span {s}..{e} in {text:?}");
                continue;
            }
            if !overlaps_own(s, e) {
                ranges.push((s, e));
            }
        }
    }
    if ranges.is_empty() {
        return text.to_string();
    }
    ranges.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(ranges.len());
    for (s, e) in ranges {
        match merged.last_mut() {
            Some(last) if s < last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    let mut result = String::with_capacity(text.len());
    let mut cursor = 0;
    for (s, e) in merged {
        result.push_str(&text[cursor..s]);
        result.push_str(MASK_TOKEN);
        cursor = e;
    }
    result.push_str(&text[cursor..]);
    result
}

/// Swaps every sentence for an unrelated filler sentence. Positives get the
/// concept's primary name appended so the class split survives.
///
/// Each concept draws its examples without replacement from the filler
/// sentences that do not already name that concept.
pub fn randomize_text(dataset: &ConceptDataset, filler: &[String], names: &CountryNames, seed: u64) -> Result<ConceptDataset, CorpusError> {
    let language = dataset.language;
    let mut out = dataset.clone();
    let results: Vec<Result<(CountryCode, ConceptExamples), CorpusError>> = dataset
        .concepts
        .par_iter()
        .map(|(&concept, ex)| {
            let name = names
                .get(concept, language)
                .ok_or(CorpusError::MissingLocalizedName { country: concept, language })?;
            let mut probe = Gazetteer::new();
            probe.insert(name, language, concept).expect("single alias");
            let pool: Vec<&str> = filler
                .iter()
                .map(|s| s.trim())
                .filter(|s| !s.is_empty() && !probe.mentions(s, language, concept))
                .collect();
            let needed = ex.positives.len() + ex.negatives.len();
            if pool.len() < needed {
                return Err(CorpusError::FillerExhausted { concept, needed, available: pool.len() });
            }
            let mut rng = concept_rng(seed, concept);
            let mut picks = pool.choose_multiple(&mut rng, needed);
            let mut next = |orig: &SentenceExample, positive: bool| {
                let filler = picks.next().expect("pool sized above");
                SentenceExample {
                    text: if positive { format!("{filler} {name}") } else { filler.to_string() },
                    repeated_from: None,
                    ..orig.clone()
                }
            };
            let positives = ex.positives.iter().map(|p| next(p, true)).collect();
            let negatives = ex.negatives.iter().map(|n| next(n, false)).collect();
            Ok((concept, ConceptExamples { positives, negatives }))
        })
        .collect();
    for r in results {
        let (c, ex) = r?;
        out.concepts.insert(c, ex);
    }
    Ok(out)
}

/// A generation prompt with exactly one `<country>` slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrefixTemplate {
    template_id: u32,
    language: LanguageTag,
    text: String,
}

#[derive(Deserialize)]
struct RawTemplate {
    template_id: u32,
    language: LanguageTag,
    text: String,
}

impl<'de> Deserialize<'de> for PrefixTemplate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = RawTemplate::deserialize(d)?;
        PrefixTemplate::new(r.template_id, r.language, r.text).map_err(serde::de::Error::custom)
    }
}

impl PrefixTemplate {
    pub fn new(template_id: u32, language: LanguageTag, text: impl Into<String>) -> Result<Self, CorpusError> {
        let text = text.into();
        let n = text.matches(COUNTRY_PLACEHOLDER).count();
        if n != 1 {
            return Err(CorpusError::BadTemplate(n));
        }
        Ok(Self { template_id, language, text })
    }

    pub fn template_id(&self) -> u32 {
        self.template_id
    }

    pub fn language(&self) -> LanguageTag {
        self.language
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

/// Parses a JSON array of `{template_id, language, text}`.
pub fn load_templates(json: &str) -> Result<Vec<PrefixTemplate>, CorpusError> {
    serde_json::from_str(json).map_err(|source| CorpusError::Json { line: 0, source })
}

/// Six templates for each of eng, fra, rus, ara, hin, ben, kor and zho.
pub fn builtin_templates() -> Vec<PrefixTemplate> {
    load_templates(DEFAULT_TEMPLATES).expect("bundled templates are valid")
}

pub fn build_prefix(template: &PrefixTemplate, country: CountryCode, names: &CountryNames) -> Result<String, CorpusError> {
    let name = names
        .get(country, template.language)
        .ok_or(CorpusError::MissingLocalizedName { country, language: template.language })?;
    Ok(template.text.replacen(COUNTRY_PLACEHOLDER, name, 1))
}

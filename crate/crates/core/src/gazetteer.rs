//! Alias gazetteer and the country-mention scanner.
//!
//! Matching is case-sensitive. Aliases written in a space-delimited script must
//! sit on word boundaries (no alphanumeric character immediately before or
//! after). Aliases written in an unsegmented script (Han, Kana, Hangul, Thai)
//! match as raw substrings. At every position the longest admissible alias
//! wins and the scan resumes after it, so matches never overlap.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::country::{CodeError, CountryCode, CountryNames, LanguageTag};

const DEFAULT_GAZETTEER: &str = include_str!("../data/gazetteer.tsv");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GazetteerError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("alias {alias:?} ({language}) maps to both {first} and {second}")]
    Conflict { alias: String, language: LanguageTag, first: CountryCode, second: CountryCode },
    #[error("empty alias")]
    EmptyAlias,
}

/// One alias occurrence, as a byte range into the scanned text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AliasMatch {
    pub start: usize,
    pub end: usize,
    pub country: CountryCode,
}

#[derive(Debug, Clone)]
struct Alias {
    text: String,
    country: CountryCode,
    substring: bool,
}

#[derive(Debug, Clone, Default)]
struct LanguageIndex {
    entries: BTreeMap<String, CountryCode>,
    by_first: HashMap<char, Vec<Alias>>,
}

impl LanguageIndex {
    fn rebuild(&mut self) {
        self.by_first.clear();
        for (text, &country) in &self.entries {
            let first = text.chars().next().expect("aliases are non-empty");
            self.by_first.entry(first).or_default().push(Alias {
                text: text.clone(),
                country,
                substring: is_unsegmented(text),
            });
        }
        for list in self.by_first.values_mut() {
            list.sort_by(|a, b| b.text.len().cmp(&a.text.len()).then_with(|| a.text.cmp(&b.text)));
        }
    }
}

/// Map of `(alias, language) -> country`.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    langs: BTreeMap<LanguageTag, LanguageIndex>,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses TSV `alias<TAB>language<TAB>iso3`.
    pub fn from_tsv(text: &str) -> Result<Self, GazetteerError> {
        let mut g = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 3 {
                return Err(GazetteerError::Malformed {
                    line: i + 1,
                    message: format!("expected 3 tab-separated fields, got {}", parts.len()),
                });
            }
            let lang = LanguageTag::new(parts[1].trim())?;
            let country = CountryCode::new(parts[2].trim())?;
            g.insert_unindexed(parts[0].trim(), lang, country)?;
        }
        g.reindex();
        Ok(g)
    }

    /// Country names in every language plus common English capitals, short
    /// forms and demonyms.
    pub fn builtin() -> Self {
        Self::from_tsv(DEFAULT_GAZETTEER).expect("bundled gazetteer is valid")
    }

    /// Every localized name becomes an alias of its country.
    pub fn from_names(names: &CountryNames) -> Result<Self, GazetteerError> {
        let mut g = Self::new();
        for (c, l, n) in names.iter() {
            g.insert_unindexed(n, l, c)?;
        }
        g.reindex();
        Ok(g)
    }

    pub fn insert(&mut self, alias: &str, language: LanguageTag, country: CountryCode) -> Result<(), GazetteerError> {
        self.insert_unindexed(alias, language, country)?;
        if let Some(idx) = self.langs.get_mut(&language) {
            idx.rebuild();
        }
        Ok(())
    }

    fn insert_unindexed(&mut self, alias: &str, language: LanguageTag, country: CountryCode) -> Result<(), GazetteerError> {
        if alias.is_empty() {
            return Err(GazetteerError::EmptyAlias);
        }
        let idx = self.langs.entry(language).or_default();
        match idx.entries.get(alias) {
            Some(&existing) if existing != country => Err(GazetteerError::Conflict {
                alias: alias.to_string(),
                language,
                first: existing,
                second: country,
            }),
            _ => {
                idx.entries.insert(alias.to_string(), country);
                Ok(())
            }
        }
    }

    fn reindex(&mut self) {
        for idx in self.langs.values_mut() {
            idx.rebuild();
        }
    }

    pub fn lookup(&self, alias: &str, language: LanguageTag) -> Option<CountryCode> {
        self.langs.get(&language)?.entries.get(alias).copied()
    }

    pub fn aliases_of(&self, country: CountryCode, language: LanguageTag) -> Vec<&str> {
        self.langs
            .get(&language)
            .map(|idx| idx.entries.iter().filter(|(_, &c)| c == country).map(|(a, _)| a.as_str()).collect())
            .unwrap_or_default()
    }

    pub fn languages(&self) -> impl Iterator<Item = LanguageTag> + '_ {
        self.langs.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.langs.values().map(|i| i.entries.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Longest-match, non-overlapping scan of `text` with the aliases of `language`.
    pub fn find(&self, text: &str, language: LanguageTag) -> Vec<AliasMatch> {
        let Some(idx) = self.langs.get(&language) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut prev: Option<char> = None;
        let mut pos = 0;
        while pos < text.len() {
            let rest = &text[pos..];
            let c = rest.chars().next().expect("pos is on a char boundary");
            let hit = idx.by_first.get(&c).and_then(|cands| {
                cands.iter().find(|a| {
                    rest.starts_with(a.text.as_str())
                        && (a.substring
                            || (!prev.is_some_and(char::is_alphanumeric)
                                && !rest[a.text.len()..].chars().next().is_some_and(char::is_alphanumeric)))
                })
            });
            match hit {
                Some(a) => {
                    let end = pos + a.text.len();
                    out.push(AliasMatch { start: pos, end, country: a.country });
                    prev = text[..end].chars().next_back();
                    pos = end;
                }
                None => {
                    prev = Some(c);
                    pos += c.len_utf8();
                }
            }
        }
        out
    }

    pub fn mentions(&self, text: &str, language: LanguageTag, country: CountryCode) -> bool {
        self.find(text, language).iter().any(|m| m.country == country)
    }
}

/// True when the alias is written in a script without inter-word spaces.
fn is_unsegmented(alias: &str) -> bool {
    alias.chars().any(|c| {
        matches!(c as u32,
            0x3040..=0x30FF      // Hiragana, Katakana
            | 0x3400..=0x4DBF    // CJK extension A
            | 0x4E00..=0x9FFF    // CJK unified ideographs
            | 0xF900..=0xFAFF    // CJK compatibility ideographs
            | 0x1100..=0x11FF    // Hangul Jamo
            | 0x3130..=0x318F    // Hangul compatibility Jamo
            | 0xAC00..=0xD7AF    // Hangul syllables
            | 0x0E00..=0x0E7F    // Thai
        )
    })
}

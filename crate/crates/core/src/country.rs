//! Country codes, language tags and the country universe.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("invalid country code {0:?}: expected 3 uppercase ASCII letters")]
    BadCountryCode(String),
    #[error("country {0} is not in the configured universe")]
    NotInUniverse(CountryCode),
    #[error("invalid language tag {0:?}: expected 3 lowercase ASCII letters")]
    BadLanguageTag(String),
    #[error("line {line}: {message}")]
    Table { line: usize, message: String },
}

/// ISO-3166 alpha-3 identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode([u8; 3]);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self, CodeError> {
        let b = code.as_bytes();
        if b.len() == 3 && b.iter().all(u8::is_ascii_uppercase) {
            Ok(Self([b[0], b[1], b[2]]))
        } else {
            Err(CodeError::BadCountryCode(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        // constructor only admits ASCII
        std::str::from_utf8(&self.0).unwrap()
    }
}

impl FromStr for CountryCode {
    type Err = CodeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl TryFrom<String> for CountryCode {
    type Error = CodeError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(&s)
    }
}

impl From<CountryCode> for String {
    fn from(c: CountryCode) -> String {
        c.as_str().to_string()
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

/// Three-letter language tag such as `eng` or `zho`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageTag([u8; 3]);

impl LanguageTag {
    pub fn new(tag: &str) -> Result<Self, CodeError> {
        let b = tag.as_bytes();
        if b.len() == 3 && b.iter().all(u8::is_ascii_lowercase) {
            Ok(Self([b[0], b[1], b[2]]))
        } else {
            Err(CodeError::BadLanguageTag(tag.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).unwrap()
    }
}

impl FromStr for LanguageTag {
    type Err = CodeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl TryFrom<String> for LanguageTag {
    type Error = CodeError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(&s)
    }
}

impl From<LanguageTag> for String {
    fn from(c: LanguageTag) -> String {
        c.as_str().to_string()
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

const DEFAULT_UNIVERSE: &str = include_str!("../data/countries.tsv");
const DEFAULT_NAMES: &str = include_str!("../data/country_names.tsv");

/// The set of countries a run is allowed to talk about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountryUniverse {
    countries: BTreeSet<CountryCode>,
}

impl CountryUniverse {
    pub fn new(countries: impl IntoIterator<Item = CountryCode>) -> Self {
        Self { countries: countries.into_iter().collect() }
    }

    /// The 69 countries of the default experiment grid.
    pub fn default_universe() -> Self {
        let countries = DEFAULT_UNIVERSE
            .lines()
            .filter_map(|l| l.split('\t').next())
            .map(|c| CountryCode::new(c).expect("bundled universe is valid"));
        Self::new(countries)
    }

    /// Parses and validates a code against the universe.
    pub fn code(&self, s: &str) -> Result<CountryCode, CodeError> {
        let c = CountryCode::new(s)?;
        if self.contains(c) {
            Ok(c)
        } else {
            Err(CodeError::NotInUniverse(c))
        }
    }

    pub fn contains(&self, c: CountryCode) -> bool {
        self.countries.contains(&c)
    }

    pub fn iter(&self) -> impl Iterator<Item = CountryCode> + '_ {
        self.countries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.countries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }
}

/// Localized country names, loaded from TSV `iso3<TAB>language<TAB>name`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountryNames {
    names: BTreeMap<(CountryCode, LanguageTag), String>,
}

impl CountryNames {
    pub fn from_tsv(text: &str) -> Result<Self, CodeError> {
        let mut names = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (Some(iso), Some(lang), Some(name)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(CodeError::Table { line: i + 1, message: "expected 3 tab-separated fields".into() });
            };
            let iso = CountryCode::new(iso.trim())?;
            let lang = LanguageTag::new(lang.trim())?;
            let name = name.trim();
            if name.is_empty() {
                return Err(CodeError::Table { line: i + 1, message: "empty country name".into() });
            }
            names.insert((iso, lang), name.to_string());
        }
        Ok(Self { names })
    }

    /// Names for the default universe in eng, ara, fra, rus, ben, kor, zho and hin.
    pub fn builtin() -> Self {
        Self::from_tsv(DEFAULT_NAMES).expect("bundled name table is valid")
    }

    pub fn insert(&mut self, country: CountryCode, language: LanguageTag, name: impl Into<String>) {
        self.names.insert((country, language), name.into());
    }

    pub fn get(&self, country: CountryCode, language: LanguageTag) -> Option<&str> {
        self.names.get(&(country, language)).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (CountryCode, LanguageTag, &str)> {
        self.names.iter().map(|((c, l), n)| (*c, *l, n.as_str()))
    }
}

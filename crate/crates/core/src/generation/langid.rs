//! Rank-order character-trigram language identification.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::country::LanguageTag;

/// Trigrams kept per profile.
pub const PROFILE_SIZE: usize = 300;
/// Shortest text, in characters after trimming, that will be classified.
pub const MIN_TEXT_CHARS: usize = 20;

const BUILTIN: [(&str, &str); 8] = [
    ("ara", include_str!("../../data/langid/ara.txt")),
    ("ben", include_str!("../../data/langid/ben.txt")),
    ("eng", include_str!("../../data/langid/eng.txt")),
    ("fra", include_str!("../../data/langid/fra.txt")),
    ("hin", include_str!("../../data/langid/hin.txt")),
    ("kor", include_str!("../../data/langid/kor.txt")),
    ("rus", include_str!("../../data/langid/rus.txt")),
    ("zho", include_str!("../../data/langid/zho.txt")),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LangIdError {
    #[error("text has {chars} characters; at least {MIN_TEXT_CHARS} are needed")]
    TextTooShort { chars: usize },
    #[error("no language profiles loaded")]
    NoProfiles,
}

fn is_separator(c: char) -> bool {
    c.is_whitespace()
        || c.is_ascii_punctuation()
        || c.is_numeric()
        || matches!(
            c,
            '，' | '。' | '、' | '；' | '：' | '？' | '！' | '「' | '」' | '『' | '』' | '（' | '）' | '《' | '》' | '“' | '”' | '‘'
                | '’' | '«' | '»' | '—' | '–' | '…' | '،' | '؛' | '؟' | '।' | '॥'
        )
}

/// Ideographs, kana and Hangul syllables: scripts with thousands of
/// symbols, where single symbols rank better than symbol trigrams.
fn is_syllabic(c: char) -> bool {
    matches!(c as u32, 0x3040..=0x30FF | 0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF | 0xAC00..=0xD7AF)
}

/// Words split on whitespace and punctuation; every syllabic symbol is a
/// word of its own.
fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split(is_separator).flat_map(|w| {
        let mut parts = Vec::new();
        let mut start = 0;
        for (i, c) in w.char_indices() {
            if is_syllabic(c) {
                parts.push(&w[start..i]);
                parts.push(&w[i..i + c.len_utf8()]);
                start = i + c.len_utf8();
            }
        }
        parts.push(&w[start..]);
        parts.into_iter().filter(|p| !p.is_empty())
    })
}

/// Ranked trigrams of `text`: words are lowercased and padded with `_`,
/// ordered by count descending then by trigram.
fn ranked_trigrams(text: &str, limit: usize) -> Vec<String> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for word in words(text) {
        let padded: Vec<char> = std::iter::once('_').chain(word.chars().flat_map(char::to_lowercase)).chain(std::iter::once('_')).collect();
        for w in padded.windows(3) {
            *counts.entry(w.iter().collect()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(limit);
    ranked.into_iter().map(|(t, _)| t).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrigramProfile {
    ranks: HashMap<String, usize>,
}

impl TrigramProfile {
    pub fn from_text(text: &str) -> Self {
        Self { ranks: ranked_trigrams(text, PROFILE_SIZE).into_iter().enumerate().map(|(r, t)| (t, r)).collect() }
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Trigrams in rank order.
    pub fn trigrams(&self) -> Vec<&str> {
        let mut v: Vec<(&str, usize)> = self.ranks.iter().map(|(t, &r)| (t.as_str(), r)).collect();
        v.sort_by_key(|&(_, r)| r);
        v.into_iter().map(|(t, _)| t).collect()
    }

    /// Out-of-place distance of a ranked document against this profile.
    /// Trigrams the profile lacks cost `PROFILE_SIZE`.
    fn distance(&self, doc: &[String]) -> usize {
        doc.iter()
            .enumerate()
            .map(|(r, t)| self.ranks.get(t).map_or(PROFILE_SIZE, |&p| p.abs_diff(r)))
            .sum()
    }
}

#[derive(Debug, Clone, Default)]
pub struct LanguageProfiles {
    profiles: BTreeMap<LanguageTag, TrigramProfile>,
}

impl LanguageProfiles {
    pub fn new() -> Self {
        Self::default()
    }

    /// Profiles for ara, ben, eng, fra, hin, kor, rus and zho.
    pub fn builtin() -> Self {
        let mut p = Self::new();
        for (tag, text) in BUILTIN {
            p.train(LanguageTag::new(tag).expect("builtin tag"), text);
        }
        p
    }

    pub fn train(&mut self, language: LanguageTag, text: &str) {
        self.profiles.insert(language, TrigramProfile::from_text(text));
    }

    pub fn get(&self, language: LanguageTag) -> Option<&TrigramProfile> {
        self.profiles.get(&language)
    }

    pub fn languages(&self) -> impl Iterator<Item = LanguageTag> + '_ {
        self.profiles.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Closest profile by out-of-place distance, with confidence
/// `1 - d / d_max` where `d_max` is the distance when no trigram is shared.
/// Ties go to the smaller language tag.
pub fn identify_language(text: &str, profiles: &LanguageProfiles) -> Result<(LanguageTag, f64), LangIdError> {
    let chars = text.trim().chars().count();
    if chars < MIN_TEXT_CHARS {
        return Err(LangIdError::TextTooShort { chars });
    }
    let doc = ranked_trigrams(text, PROFILE_SIZE);
    let (lang, d) = profiles
        .profiles
        .iter()
        .map(|(&l, p)| (l, p.distance(&doc)))
        .min_by_key(|&(_, d)| d)
        .ok_or(LangIdError::NoProfiles)?;
    let d_max = doc.len() * PROFILE_SIZE;
    let confidence = if d_max == 0 { 0.0 } else { 1.0 - d as f64 / d_max as f64 };
    Ok((lang, confidence))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(s: &str) -> LanguageTag {
        LanguageTag::new(s).unwrap()
    }

    #[test]
    fn trigrams_are_padded_and_ranked() {
        assert_eq!(ranked_trigrams("aa aa", 10), vec!["_aa", "aa_"]);
        assert_eq!(ranked_trigrams("Ab, ab", 10), vec!["_ab", "ab_"]);
        assert_eq!(ranked_trigrams("x", 10), vec!["_x_"]);
        assert_eq!(ranked_trigrams("中国a", 10), vec!["_a_", "_中_", "_国_"]);
    }

    #[test]
    fn too_short() {
        assert_eq!(identify_language("Hello", &LanguageProfiles::builtin()), Err(LangIdError::TextTooShort { chars: 5 }));
        assert_eq!(identify_language("a long enough sentence here", &LanguageProfiles::new()), Err(LangIdError::NoProfiles));
    }

    #[test]
    fn own_text_is_exact() {
        let text = "the quick brown fox jumps over the lazy dog";
        let mut p = LanguageProfiles::builtin();
        p.train(tag("tst"), text);
        let (l, conf) = identify_language(text, &p).unwrap();
        assert_eq!(l, tag("tst"));
        assert_eq!(conf, 1.0);
    }

    #[test]
    fn builtin_scripts() {
        let p = LanguageProfiles::builtin();
        assert_eq!(p.len(), 8);
        for (expected, text) in [
            ("eng", "The president said on Tuesday that the talks would continue."),
            ("fra", "Le gouvernement a annoncé mardi une nouvelle réforme des retraites."),
            ("rus", "Правительство объявило во вторник о новых мерах поддержки."),
            ("zho", "政府周二宣布了一项新的经济刺激计划，以支持中小企业。"),
            ("kor", "정부는 화요일 중소기업을 지원하기 위한 새로운 경제 대책을 발표했다."),
        ] {
            assert_eq!(identify_language(text, &p).unwrap().0, tag(expected), "{text}");
        }
    }
}

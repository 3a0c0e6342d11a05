//! CSV tables for generated-text analysis.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{DriftReport, KsResult, RsResult, RsTarget};
use crate::country::LanguageTag;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareRow {
    pub language: LanguageTag,
    /// `generated` or the name of a reference corpus.
    pub source: String,
    pub top10_share_pct: Option<f64>,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeRow {
    pub language: LanguageTag,
    pub countries: usize,
    pub skewness: Option<f64>,
    pub ks: Option<KsResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsRow {
    pub language: LanguageTag,
    pub target: RsTarget,
    pub m: usize,
    pub result: RsResult,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

/// `language,source,top10_share_pct,total`
pub fn top_share_csv(rows: &[ShareRow]) -> String {
    let mut s = String::from("language,source,top10_share_pct,total\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.language, r.source, opt(r.top10_share_pct), r.total);
    }
    s
}

/// `language,countries,skewness,ks_statistic,ks_p_value,ln_mu,ln_sigma`
pub fn shape_table_csv(rows: &[ShapeRow]) -> String {
    let mut s = String::from("language,countries,skewness,ks_statistic,ks_p_value,ln_mu,ln_sigma\n");
    for r in rows {
        let ks = r.ks.as_ref();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.language,
            r.countries,
            opt(r.skewness),
            opt(ks.map(|k| k.statistic)),
            opt(ks.map(|k| k.p_value)),
            opt(ks.map(|k| k.mu)),
            opt(ks.map(|k| k.sigma))
        );
    }
    s
}

/// `language,target,m,score,groups,skipped`
pub fn rs_table_csv(rows: &[RsRow]) -> String {
    let mut s = String::from("language,target,m,score,groups,skipped\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.language, r.target.as_str(), r.m, r.result.score, r.result.groups, r.result.skipped);
    }
    s
}

/// Per-language drift followed by the flagged pairs:
/// `kind,language,concept,prefix,total,drifted,drift_pct,top_target`.
pub fn drift_pairs_csv(report: &DriftReport) -> String {
    let mut s = String::from("kind,language,concept,prefix,total,drifted,drift_pct,top_target\n");
    for (l, d) in &report.per_language {
        let top = d.targets.first().map_or_else(String::new, |t| t.0.to_string());
        let _ = writeln!(s, "language,{l},,,{},{},{:.4},{top}", d.total, d.drifted, 100.0 * d.fraction);
    }
    for p in &report.pairs {
        let top = p.top_target.map_or_else(String::new, |t| t.to_string());
        let _ = writeln!(
            s,
            "pair,{},{},{},{},{},{:.4},{top}",
            p.expected_language,
            p.concept,
            p.prefix_country,
            p.total,
            p.drifted,
            100.0 * p.fraction
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::{language_drift, DriftPair};

    #[test]
    fn tables() {
        let eng = LanguageTag::new("eng").unwrap();
        let share = top_share_csv(&[ShareRow { language: eng, source: "generated".into(), top10_share_pct: Some(50.0), total: 8 }]);
        assert_eq!(share, "language,source,top10_share_pct,total\neng,generated,50.000000,8\n");
        let rs = rs_table_csv(&[RsRow { language: eng, target: RsTarget::Top10, m: 3, result: RsResult { score: 2, groups: 4, skipped: 1 } }]);
        assert_eq!(rs.lines().nth(1), Some("eng,top10,3,2,4,1"));
        let shape = shape_table_csv(&[ShapeRow { language: eng, countries: 2, skewness: None, ks: None }]);
        assert_eq!(shape.lines().nth(1), Some("eng,2,,,,,"));
    }

    #[test]
    fn drift_csv() {
        let mut r = language_drift(&[], 0.5);
        assert_eq!(drift_pairs_csv(&r).lines().count(), 1);
        let cc = |s| crate::country::CountryCode::new(s).unwrap();
        let ben = LanguageTag::new("ben").unwrap();
        r.pairs.push(DriftPair {
            expected_language: ben,
            concept: cc("LVA"),
            prefix_country: cc("PAK"),
            total: 4,
            drifted: 3,
            fraction: 0.75,
            top_target: LanguageTag::new("ara").ok(),
        });
        assert_eq!(drift_pairs_csv(&r).lines().nth(1), Some("pair,ben,LVA,PAK,4,3,75.0000,ara"));
    }
}

//! Per-line gloss statistics across variants or translators.

use std::collections::BTreeSet;

use elmi_core::overlap::gloss_word_set;
use elmi_core::{gloss_metrics, overlap_coefficient, render_percent, tokenize_gloss, GlossError};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// An exact rational with its float value for display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exact {
    pub num: u64,
    pub den: u64,
    pub value: f64,
}

impl From<Ratio<u64>> for Exact {
    fn from(r: Ratio<u64>) -> Self {
        Exact { num: *r.numer(), den: *r.denom(), value: *r.numer() as f64 / *r.denom() as f64 }
    }
}

impl Exact {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.num, self.den)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantMetrics {
    pub label: String,
    pub gloss: String,
    pub sign_count: usize,
    pub nms_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineMetrics {
    pub line_index: usize,
    pub variants: Vec<VariantMetrics>,
    pub sign_min: usize,
    pub sign_max: usize,
    pub sign_mean: Exact,
    /// Sample standard deviation; absent with fewer than two variants.
    pub sign_std: Option<f64>,
    /// Mean pairwise overlap coefficient; absent with fewer than two
    /// variants that contain signs.
    pub overlap: Option<Exact>,
    pub overlap_percent: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// The variants of one project: user gloss, base and alternatives.
    Project,
    /// One gloss per project across projects of the same song.
    Corpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsReport {
    pub project_id: String,
    pub scope: Scope,
    pub lines: Vec<LineMetrics>,
}

fn abs_diff(a: Ratio<u64>, b: Ratio<u64>) -> Ratio<u64> {
    if a >= b {
        a - b
    } else {
        b - a
    }
}

/// Statistics for one line. `variants` is a list of (label, gloss); it must
/// not be empty.
pub fn line_metrics(line_index: usize, variants: &[(String, String)]) -> Result<LineMetrics, GlossError> {
    assert!(!variants.is_empty(), "line_metrics needs at least one variant");
    let mut out = Vec::with_capacity(variants.len());
    let mut sets: Vec<BTreeSet<String>> = Vec::with_capacity(variants.len());
    for (label, gloss) in variants {
        let tokens = tokenize_gloss(gloss)?;
        let m = gloss_metrics(&tokens);
        out.push(VariantMetrics { label: label.clone(), gloss: gloss.clone(), sign_count: m.sign_count, nms_count: m.nms_count });
        sets.push(gloss_word_set(&tokens));
    }
    let counts: Vec<u64> = out.iter().map(|v| v.sign_count as u64).collect();
    let n = counts.len() as u64;
    let mean = Ratio::new(counts.iter().sum::<u64>(), n);
    let sign_std = (n >= 2).then(|| {
        let ss: Ratio<u64> = counts.iter().map(|&c| {
            let d = abs_diff(Ratio::from_integer(c), mean);
            d * d
        }).sum();
        let var = ss / Ratio::from_integer(n - 1);
        (*var.numer() as f64 / *var.denom() as f64).sqrt()
    });

    let mut total = Ratio::from_integer(0u64);
    let mut pairs = 0u64;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if let Ok(r) = overlap_coefficient(&sets[i], &sets[j]) {
                total += r;
                pairs += 1;
            }
        }
    }
    let overlap = (pairs > 0).then(|| total / Ratio::from_integer(pairs));

    Ok(LineMetrics {
        line_index,
        variants: out,
        sign_min: *counts.iter().min().expect("non-empty") as usize,
        sign_max: *counts.iter().max().expect("non-empty") as usize,
        sign_mean: mean.into(),
        sign_std,
        overlap: overlap.map(Exact::from),
        overlap_percent: overlap.map(render_percent),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn identical_pair() {
        let m = line_metrics(0, &v(&[("a", "SMOOTH LIKE BUTTER"), ("b", "SMOOTH LIKE BUTTER")])).unwrap();
        assert_eq!(m.overlap_percent.as_deref(), Some("100.00%"));
        assert_eq!(m.sign_std, Some(0.0));
    }

    #[test]
    fn two_thirds_pair() {
        let m = line_metrics(0, &v(&[("a", "ME SAME-AS BUTTER SMOOTH"), ("b", "SMOOTH LIKE BUTTER")])).unwrap();
        assert_eq!(m.overlap.unwrap().ratio(), Ratio::new(2, 3));
        assert_eq!(m.overlap_percent.as_deref(), Some("66.67%"));
        assert_eq!(m.sign_mean.ratio(), Ratio::new(7, 2));
        assert_eq!((m.sign_min, m.sign_max), (3, 4));
        assert!((m.sign_std.unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_variant_omits_overlap() {
        let m = line_metrics(0, &v(&[("a", "HOT LIKE SUMMER [smile]")])).unwrap();
        assert_eq!((m.overlap, m.sign_std), (None, None));
        assert_eq!(m.variants[0].nms_count, 1);
    }
}

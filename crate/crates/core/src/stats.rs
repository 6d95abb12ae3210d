//! Fisher's exact test with phi, Mann-Whitney with Cohen's d, Bonferroni.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_factorial;

/// Relative slack when comparing hypergeometric point probabilities.
pub const FISHER_SLACK: f64 = 1e-7;
/// Two-sided 95% normal quantile used for the d interval.
pub const Z_95: f64 = 1.959964;
/// Largest smaller-sample size for which Mann-Whitney is computed exactly.
pub const MW_EXACT_MAX: usize = 8;

/// Rows are the two datasets, columns are files with / without a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable2x2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable2x2 {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Self { a, b, c, d }
    }

    fn margins(&self) -> [u64; 4] {
        [self.a + self.b, self.c + self.d, self.a + self.c, self.b + self.d]
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Two-sided p: total probability of all tables with the observed margins
/// that are no more likely than the observed one.
pub fn fisher_exact_2x2(t: ContingencyTable2x2) -> f64 {
    let [r1, r2, c1, _] = t.margins();
    if t.margins().contains(&0) {
        return 1.0;
    }
    let n = r1 + r2;
    let ln_total = ln_choose(n, c1);
    let ln_p = |x: u64| ln_choose(r1, x) + ln_choose(r2, c1 - x) - ln_total;
    let cutoff = ln_p(t.a) + FISHER_SLACK.ln_1p();
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let (mut kept, mut dropped) = (0.0, 0.0);
    for l in (lo..=hi).map(ln_p) {
        if l <= cutoff {
            kept += l.exp();
        } else {
            dropped += l.exp();
        }
    }
    // the smaller mass carries less rounding; tables at the mode give exactly 1
    let p = if kept <= dropped { kept } else { 1.0 - dropped };
    p.clamp(0.0, 1.0)
}

/// `None` when any margin is zero.
pub fn phi_coefficient(t: ContingencyTable2x2) -> Option<f64> {
    let m = t.margins();
    if m.contains(&0) {
        return None;
    }
    let (a, b, c, d) = (t.a as f64, t.b as f64, t.c as f64, t.d as f64);
    let denom = m.iter().map(|&x| x as f64).product::<f64>().sqrt();
    Some(((a * d - b * c) / denom).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MwMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U of the first sample.
    pub u: f64,
    pub p_value: f64,
    pub method: MwMethod,
}

/// A sample as `(value, multiplicity)` pairs; values need not be sorted
/// or distinct.
pub type Grouped = [(f64, u64)];

fn group(xs: &[f64]) -> Vec<(f64, u64)> {
    xs.iter().map(|&v| (v, 1)).collect()
}

fn size(xs: &Grouped) -> u64 {
    xs.iter().map(|g| g.1).sum()
}

struct Ranked {
    rank_sum_x: f64,
    /// Σ (t³ − t) over tie groups.
    tie_term: f64,
    ties: bool,
}

fn rank(xs: &Grouped, ys: &Grouped) -> Ranked {
    let mut pooled: Vec<(f64, u64, bool)> = xs
        .iter()
        .map(|&(v, c)| (v, c, true))
        .chain(ys.iter().map(|&(v, c)| (v, c, false)))
        .filter(|g| g.1 > 0)
        .collect();
    pooled.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut rank_sum_x = 0.0;
    let mut tie_term = 0.0;
    let mut below = 0u64;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        let (mut t, mut in_x) = (0u64, 0u64);
        while j < pooled.len() && pooled[j].0.total_cmp(&pooled[i].0).is_eq() {
            t += pooled[j].1;
            if pooled[j].2 {
                in_x += pooled[j].1;
            }
            j += 1;
        }
        let midrank = below as f64 + (t as f64 + 1.0) / 2.0;
        let t = t as f64;
        tie_term += t * t * t - t;
        rank_sum_x += midrank * in_x as f64;
        below += t as u64;
        i = j;
    }
    Ranked { rank_sum_x, tie_term, ties: tie_term > 0.0 }
}

/// Mann-Whitney U test, two-sided. Exact when the smaller sample has at
/// most eight values and there are no ties, normal approximation with tie
/// and continuity correction otherwise.
///
/// Panics if either sample is empty.
pub fn mann_whitney(xs: &[f64], ys: &[f64]) -> MannWhitney {
    mann_whitney_grouped(&group(xs), &group(ys))
}

pub fn mann_whitney_grouped(xs: &Grouped, ys: &Grouped) -> MannWhitney {
    let small = size(xs).min(size(ys)) <= MW_EXACT_MAX as u64;
    let method = if small && !rank(xs, ys).ties { MwMethod::Exact } else { MwMethod::Normal };
    mann_whitney_grouped_with(xs, ys, method)
}

/// Mann-Whitney with a forced method. `Exact` with tied data falls back to
/// the normal approximation.
pub fn mann_whitney_with(xs: &[f64], ys: &[f64], method: MwMethod) -> MannWhitney {
    mann_whitney_grouped_with(&group(xs), &group(ys), method)
}

pub fn mann_whitney_grouped_with(xs: &Grouped, ys: &Grouped, method: MwMethod) -> MannWhitney {
    let (s1, s2) = (size(xs), size(ys));
    assert!(s1 > 0 && s2 > 0, "mann_whitney needs two non-empty samples");
    let (n1, n2) = (s1 as f64, s2 as f64);
    let r = rank(xs, ys);
    let u = r.rank_sum_x - n1 * (n1 + 1.0) / 2.0;
    let n = n1 + n2;
    if r.tie_term == n * n * n - n {
        return MannWhitney { u, p_value: 1.0, method };
    }
    if method == MwMethod::Exact && !r.ties {
        let p = exact_two_sided(s1.min(s2) as usize, s1.max(s2) as usize, u.min(n1 * n2 - u));
        return MannWhitney { u, p_value: p, method };
    }
    let mean = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
        erfc(z / std::f64::consts::SQRT_2)
    };
    MannWhitney { u, p_value: p.clamp(0.0, 1.0), method: MwMethod::Normal }
}

/// 2·P(U ≤ u_low) under the null, from the coefficients of the Gaussian
/// binomial [m+n choose m]_q truncated to degree `u_low`.
fn exact_two_sided(m: usize, n: usize, u_low: f64) -> f64 {
    let top = u_low.floor() as usize;
    let mut poly = vec![0.0f64; top + 1];
    poly[0] = 1.0;
    for i in 1..=m {
        // multiply by (1 - q^(n+i))
        let k = n + i;
        for u in (k..=top).rev() {
            poly[u] -= poly[u - k];
        }
        // divide by (1 - q^i)
        for u in i..=top {
            poly[u] += poly[u - i];
        }
    }
    let total: f64 = (1..=m).map(|i| (n + i) as f64 / i as f64).product();
    let tail: f64 = poly.iter().sum();
    (2.0 * tail / total).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohensD {
    /// Infinite when both samples have zero variance but different means.
    #[serde(with = "nonfinite")]
    pub d: f64,
    #[serde(with = "nonfinite")]
    pub ci_low: f64,
    #[serde(with = "nonfinite")]
    pub ci_high: f64,
}

impl CohensD {
    pub fn is_infinite(&self) -> bool {
        self.d.is_infinite()
    }
}

fn mean_var(xs: &Grouped) -> (f64, f64, f64) {
    let n = size(xs) as f64;
    let mean = xs.iter().map(|&(v, c)| v * c as f64).sum::<f64>() / n;
    let var = xs.iter().map(|&(v, c)| (v - mean).powi(2) * c as f64).sum::<f64>() / (n - 1.0);
    (n, mean, var)
}

/// Standardized mean difference with pooled sd and a normal-approximation
/// 95% interval. `None` unless both samples have at least two values.
pub fn cohens_d(xs: &[f64], ys: &[f64]) -> Option<CohensD> {
    cohens_d_grouped(&group(xs), &group(ys))
}

pub fn cohens_d_grouped(xs: &Grouped, ys: &Grouped) -> Option<CohensD> {
    if size(xs) < 2 || size(ys) < 2 {
        return None;
    }
    let (n1, m1, v1) = mean_var(xs);
    let (n2, m2, v2) = mean_var(ys);
    let pooled = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / (n1 + n2 - 2.0);
    let d = if pooled > 0.0 {
        (m1 - m2) / pooled.sqrt()
    } else if m1 == m2 {
        0.0
    } else {
        f64::INFINITY.copysign(m1 - m2)
    };
    if d.is_infinite() {
        return Some(CohensD { d, ci_low: d, ci_high: d });
    }
    let se = ((n1 + n2) / (n1 * n2) + d * d / (2.0 * (n1 + n2))).sqrt();
    Some(CohensD { d, ci_low: d - Z_95 * se, ci_high: d + Z_95 * se })
}

pub fn bonferroni(p: f64, k: usize) -> f64 {
    (p * k as f64).min(1.0)
}

/// Sawilowsky's verbal scale for |d|.
pub fn effect_word(d: f64) -> &'static str {
    let d = d.abs();
    if d < 0.01 {
        "negligible"
    } else if d < 0.2 {
        "very small"
    } else if d < 0.5 {
        "small"
    } else if d < 0.8 {
        "medium"
    } else if d < 1.2 {
        "large"
    } else if d < 2.0 {
        "very large"
    } else {
        "huge"
    }
}

/// phi converted to the d scale, `2φ / sqrt(1 − φ²)`, for wording.
pub fn phi_to_d(phi: f64) -> f64 {
    if phi.abs() >= 1.0 {
        f64::INFINITY.copysign(phi)
    } else {
        2.0 * phi / (1.0 - phi * phi).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    FisherExact,
    MannWhitney,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Phi(f64),
    CohensD(CohensD),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub test: TestKind,
    pub p_value: f64,
    pub p_adjusted: f64,
    pub k: usize,
    /// Absent when undefined (zero margin, sample smaller than two).
    pub effect: Option<Effect>,
    pub effect_word: String,
}

fn word_for(effect: Option<&Effect>) -> String {
    match effect {
        Some(Effect::Phi(phi)) => effect_word(phi_to_d(*phi)).to_string(),
        Some(Effect::CohensD(d)) => effect_word(d.d).to_string(),
        None => "undefined".to_string(),
    }
}

pub fn fisher_result(t: ContingencyTable2x2, k: usize) -> StatResult {
    let p = fisher_exact_2x2(t);
    let effect = phi_coefficient(t).map(Effect::Phi);
    StatResult {
        test: TestKind::FisherExact,
        p_value: p,
        p_adjusted: bonferroni(p, k),
        k,
        effect_word: word_for(effect.as_ref()),
        effect,
    }
}

pub fn mann_whitney_result(xs: &[f64], ys: &[f64], k: usize) -> StatResult {
    mann_whitney_grouped_result(&group(xs), &group(ys), k)
}

pub fn mann_whitney_grouped_result(xs: &Grouped, ys: &Grouped, k: usize) -> StatResult {
    let p = mann_whitney_grouped(xs, ys).p_value;
    let effect = cohens_d_grouped(xs, ys).map(Effect::CohensD);
    StatResult {
        test: TestKind::MannWhitney,
        p_value: p,
        p_adjusted: bonferroni(p, k),
        k,
        effect_word: word_for(effect.as_ref()),
        effect,
    }
}

/// JSON has no infinities; they are written as the strings `"inf"` and
/// `"-inf"`.
mod nonfinite {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad number {other:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: u64, b: u64, c: u64, d: u64) -> ContingencyTable2x2 {
        ContingencyTable2x2::new(a, b, c, d)
    }

    #[test]
    fn fisher_examples() {
        assert!((fisher_exact_2x2(t(5, 0, 0, 5)) - 2.0 / 252.0).abs() < 1e-12);
        assert!((fisher_exact_2x2(t(3, 3, 3, 3)) - 1.0).abs() < 1e-12);
        assert!((fisher_exact_2x2(t(1, 9, 11, 3)) - 41.0 / 14858.0).abs() < 1e-12);
        assert_eq!(fisher_exact_2x2(t(0, 0, 3, 4)), 1.0);
    }

    #[test]
    fn fisher_large_tables() {
        let p = fisher_exact_2x2(t(180_000, 20_000, 150_000, 10_000));
        assert!((0.0..=1.0).contains(&p));
        let p = fisher_exact_2x2(t(180_000, 180_000, 180_000, 180_000));
        assert!(p > 0.99);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_coefficient(t(10, 0, 0, 10)), Some(1.0));
        assert_eq!(phi_coefficient(t(10, 10, 10, 10)), Some(0.0));
        assert_eq!(phi_coefficient(t(5, 0, 0, 5)), Some(1.0));
        assert_eq!(phi_coefficient(t(0, 0, 1, 1)), None);
        let phi = phi_coefficient(t(1, 9, 11, 3)).unwrap();
        assert!((phi - -0.6761234037828132).abs() < 1e-12);
    }

    #[test]
    fn mann_whitney_examples() {
        let r = mann_whitney(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(r.u, 0.0);
        assert_eq!(r.method, MwMethod::Exact);
        assert!((r.p_value - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(mann_whitney(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).p_value, 1.0);
        let r = mann_whitney(&[1.0, 2.0, 3.0, 4.0, 5.0], &[6.0, 7.0, 8.0, 9.0, 10.0]);
        assert_eq!(r.u, 0.0);
        assert!((r.p_value - 2.0 / 252.0).abs() < 1e-12);
        assert_eq!(mann_whitney(&[4.0, 4.0], &[4.0, 4.0, 4.0]).p_value, 1.0);
    }

    #[test]
    fn cohens_d_examples() {
        let same = cohens_d(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(same.d, 0.0);
        assert!((same.ci_low + same.ci_high).abs() < 1e-12);
        assert!(cohens_d(&[2.0; 4], &[1.0; 4]).unwrap().is_infinite());
        let d = cohens_d(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((d.d + 1.0).abs() < 1e-12);
        assert!((d.ci_low - -2.6973786145029637).abs() < 1e-12);
        assert!((d.ci_high - 0.6973786145029635).abs() < 1e-12);
        assert_eq!(cohens_d(&[1.0], &[1.0, 2.0]), None);
    }

    #[test]
    fn bonferroni_examples() {
        assert!((bonferroni(0.001, 33) - 0.033).abs() < 1e-15);
        assert_eq!(bonferroni(0.5, 10), 1.0);
        assert_eq!(bonferroni(0.0, 7), 0.0);
    }

    #[test]
    fn effect_words() {
        assert_eq!(effect_word(0.25), "small");
        assert_eq!(effect_word(0.0), "negligible");
        assert_eq!(effect_word(1.5), "very large");
        assert_eq!(effect_word(-0.9), "large");
        assert_eq!(effect_word(f64::INFINITY), "huge");
    }

    #[test]
    fn grouped_matches_expanded() {
        let xs = [0.0, 0.0, 0.0, 1.0, 2.0, 2.0, 5.0];
        let ys = [0.0, 1.0, 1.0, 3.0, 3.0, 3.0, 4.0, 9.0];
        let gx = [(0.0, 3), (1.0, 1), (2.0, 2), (5.0, 1)];
        let gy = [(3.0, 3), (0.0, 1), (1.0, 2), (9.0, 1), (4.0, 1)];
        assert_eq!(mann_whitney(&xs, &ys), mann_whitney_grouped(&gx, &gy));
        let a = cohens_d(&xs, &ys).unwrap();
        let b = cohens_d_grouped(&gx, &gy).unwrap();
        assert!((a.d - b.d).abs() < 1e-12 && (a.ci_low - b.ci_low).abs() < 1e-12);
    }

    #[test]
    fn infinite_d_round_trips() {
        let r = mann_whitney_result(&[2.0; 4], &[1.0; 4], 3);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"inf\""));
        let back: StatResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}

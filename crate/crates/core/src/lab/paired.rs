//! Paired comparisons over matched splits. Deltas are in percentage points.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::stats::{mean, sample_std};

/// Cohen's d_z, with the degenerate zero-spread cases kept explicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum EffectSize {
    Finite(f64),
    PositiveInfinite,
    NegativeInfinite,
    Undefined,
}

impl EffectSize {
    pub fn value(self) -> Option<f64> {
        match self {
            EffectSize::Finite(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedResult {
    pub deltas: Vec<f64>,
    pub n: usize,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub sign_p: f64,
    pub wilcoxon_p: f64,
    /// None when fewer than two deltas or zero spread.
    pub t_p: Option<f64>,
    pub ci95: Option<(f64, f64)>,
    pub d_z: EffectSize,
    pub all_zero: bool,
}

/// Compares accuracy fractions `a` against `b` split by split.
pub fn paired_stats(a: &[f64], b: &[f64]) -> Result<PairedResult> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            expected: format!("{} deltas", a.len()),
            got: format!("{} deltas", b.len()),
        });
    }
    let deltas: Vec<f64> = a.iter().zip(b).map(|(x, y)| 100.0 * (x - y)).collect();
    paired_stats_from_deltas(&deltas)
}

pub fn paired_stats_from_deltas(deltas: &[f64]) -> Result<PairedResult> {
    if deltas.is_empty() {
        return Err(Error::input("paired statistics need at least one delta"));
    }
    if deltas.iter().any(|d| !d.is_finite()) {
        return Err(Error::input("deltas contain non-finite values"));
    }
    let n = deltas.len();
    let wins = deltas.iter().filter(|&&d| d > 0.0).count();
    let losses = deltas.iter().filter(|&&d| d < 0.0).count();
    let ties = n - wins - losses;
    let m = mean(deltas).expect("non-empty");
    let mut sorted = deltas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let all_zero = ties == n;

    let sd = sample_std(deltas);
    let (t_p, ci95) = match sd {
        Some(s) if s > 0.0 => {
            let df = (n - 1) as f64;
            let t = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::input(e.to_string()))?;
            let se = s / (n as f64).sqrt();
            let stat = m / se;
            let p = (2.0 * (1.0 - t.cdf(stat.abs()))).min(1.0);
            let q = t.inverse_cdf(0.975);
            (Some(p), Some((m - q * se, m + q * se)))
        }
        _ => (None, None),
    };
    let d_z = match sd {
        Some(s) if s > 0.0 => EffectSize::Finite(m / s),
        Some(_) if m > 0.0 => EffectSize::PositiveInfinite,
        Some(_) if m < 0.0 => EffectSize::NegativeInfinite,
        _ => EffectSize::Undefined,
    };

    let (sign_p, wilcoxon_p) = if all_zero {
        (1.0, 1.0)
    } else {
        (sign_test_p(wins, losses), wilcoxon_signed_rank_p(deltas))
    };

    Ok(PairedResult {
        deltas: deltas.to_vec(),
        n,
        wins,
        losses,
        ties,
        mean: m,
        median,
        min: sorted[0],
        max: sorted[n - 1],
        sign_p,
        wilcoxon_p,
        t_p: if all_zero { Some(1.0) } else { t_p },
        ci95,
        d_z,
        all_zero,
    })
}

/// Exact two-sided sign test; ties are dropped beforehand.
pub fn sign_test_p(pos: usize, neg: usize) -> f64 {
    let n = pos + neg;
    if n == 0 {
        return 1.0;
    }
    // Binomial(n, 1/2) pmf via log-free recurrence.
    let mut pmf = vec![0.0; n + 1];
    pmf[0] = 0.5f64.powi(n as i32);
    for k in 1..=n {
        pmf[k] = pmf[k - 1] * (n - k + 1) as f64 / k as f64;
    }
    let lower: f64 = pmf[..=pos].iter().sum();
    let upper: f64 = pmf[pos..].iter().sum();
    (2.0 * lower.min(upper)).min(1.0)
}

/// Average ranks of `values` (1-based), ties sharing the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j + 2) as f64 / 2.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Exact two-sided Wilcoxon signed-rank p-value. Zero deltas are dropped;
/// tied magnitudes get average ranks and the null distribution is built
/// over doubled (integer) ranks.
pub fn wilcoxon_signed_rank_p(deltas: &[f64]) -> f64 {
    let nz: Vec<f64> = deltas.iter().copied().filter(|&d| d != 0.0).collect();
    if nz.is_empty() {
        return 1.0;
    }
    let mags: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
    let doubled: Vec<usize> = average_ranks(&mags)
        .iter()
        .map(|r| (2.0 * r).round() as usize)
        .collect();
    let total: usize = doubled.iter().sum();
    let w: usize = doubled.iter().zip(&nz).filter(|(_, &d)| d > 0.0).map(|(r, _)| r).sum();

    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let scale = 0.5f64.powi(nz.len() as i32);
    let lower: f64 = counts[..=w].iter().sum::<f64>() * scale;
    let upper: f64 = counts[w..].iter().sum::<f64>() * scale;
    (2.0 * lower.min(upper)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_test_values() {
        assert_eq!(sign_test_p(6, 0), 0.03125);
        assert_eq!(sign_test_p(0, 6), 0.03125);
        assert_eq!(sign_test_p(1, 1), 1.0);
        assert!((sign_test_p(8, 2) - 0.109375).abs() < 1e-15);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn all_zero_deltas() {
        let r = paired_stats(&[0.5, 0.6], &[0.5, 0.6]).unwrap();
        assert!(r.all_zero);
        assert_eq!(r.sign_p, 1.0);
        assert_eq!(r.wilcoxon_p, 1.0);
        assert_eq!(r.t_p, Some(1.0));
        assert_eq!(r.d_z, EffectSize::Undefined);
    }

    #[test]
    fn constant_positive_delta() {
        let r = paired_stats_from_deltas(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.d_z, EffectSize::PositiveInfinite);
        assert_eq!(r.t_p, None);
        assert_eq!(r.sign_p, 0.25);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(paired_stats(&[0.1], &[0.1, 0.2]).is_err());
        assert!(paired_stats_from_deltas(&[]).is_err());
    }
}

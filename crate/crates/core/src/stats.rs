//! Normality and rank tests for comparing per-replication results.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::numeric::{exact_mean, exact_sum};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {min} groups, got {got}")]
    TooFewGroups { min: usize, got: usize },
    #[error("sample '{label}' has {n} values, need at least {min}")]
    TooSmall { label: String, n: usize, min: usize },
    #[error("sample '{label}' has zero variance")]
    Degenerate { label: String },
    #[error("sample '{label}' contains a non-finite value")]
    NotFinite { label: String },
    #[error("{0} arrangements are too many for an exact test")]
    TooManyArrangements(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub label: String,
    pub values: Vec<f64>,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
        }
    }

    fn check(&self, min: usize) -> Result<(), StatsError> {
        if self.values.len() < min {
            return Err(StatsError::TooSmall {
                label: self.label.clone(),
                n: self.values.len(),
                min,
            });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NotFinite {
                label: self.label.clone(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub reject_at_95: bool,
}

impl TestResult {
    fn new(statistic: f64, p_value: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            statistic,
            p_value,
            reject_at_95: p_value < 0.05,
        }
    }
}

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).map(|d| d.sf(x)).unwrap_or(f64::NAN)
}

/// Lilliefors p-value from the Dallal-Wilkinson approximation, with the
/// Stephens-style polynomial above 0.1.
fn lilliefors_p(d: f64, n: usize) -> f64 {
    let nf = n as f64;
    let (kd, nd) = if n <= 100 {
        (d, nf)
    } else {
        (d * (nf / 100.0).powf(0.49), 100.0)
    };
    let p = (-7.01256 * kd * kd * (nd + 2.78019) + 2.99587 * kd * (nd + 2.78019).sqrt()
        - 0.122119
        + 0.974598 / nd.sqrt()
        + 1.67997 / nd)
        .exp();
    if p <= 0.1 {
        return p;
    }
    let kk = (nf.sqrt() - 0.01 + 0.85 / nf.sqrt()) * d;
    let poly = |c: [f64; 5]| c[0] + kk * (c[1] + kk * (c[2] + kk * (c[3] + kk * c[4])));
    if kk <= 0.302 {
        1.0
    } else if kk <= 0.5 {
        poly([2.76773, -19.828315, 80.709644, -138.55152, 81.218052])
    } else if kk <= 0.9 {
        poly([-4.901232, 40.662806, -97.490286, 94.029866, -32.355711])
    } else if kk <= 1.31 {
        poly([6.198765, -19.558097, 23.186922, -12.234627, 2.423045])
    } else {
        0.0
    }
}

/// Kolmogorov-Smirnov distance to a normal fitted by sample mean and sd.
pub fn lilliefors_statistic(s: &SampleSet) -> Result<f64, StatsError> {
    s.check(5)?;
    let n = s.values.len();
    let mean = exact_mean(&s.values).expect("non-empty");
    let ss = exact_sum(s.values.iter().map(|v| (v - mean) * (v - mean)));
    let sd = (ss / (n - 1) as f64).sqrt();
    if !(sd > 0.0) {
        return Err(StatsError::Degenerate {
            label: s.label.clone(),
        });
    }
    let mut sorted = s.values.clone();
    sorted.sort_by(f64::total_cmp);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let nf = n as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf((x - mean) / sd);
            ((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    Ok(d)
}

pub fn ks_normality(s: &SampleSet) -> Result<TestResult, StatsError> {
    let d = lilliefors_statistic(s)?;
    Ok(TestResult::new(d, lilliefors_p(d, s.values.len())))
}

/// Mid-ranks (1-based) of `values`, plus the tie-correction term
/// `sum(t^3 - t)` over tie groups.
pub fn mid_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

fn pooled(groups: &[SampleSet], min_each: usize) -> Result<(Vec<f64>, Vec<usize>), StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups {
            min: 2,
            got: groups.len(),
        });
    }
    for g in groups {
        g.check(min_each)?;
    }
    let values = groups.iter().flat_map(|g| g.values.iter().copied()).collect();
    let sizes = groups.iter().map(|g| g.values.len()).collect();
    Ok((values, sizes))
}

/// H from pooled ranks split by group sizes, tie-corrected. `None` when
/// every value is tied.
fn h_statistic(ranks: &[f64], sizes: &[usize], ties: f64) -> Option<f64> {
    let n = ranks.len() as f64;
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        return None;
    }
    let mut start = 0;
    let mut sum = 0.0;
    for &size in sizes {
        let r: f64 = ranks[start..start + size].iter().sum();
        sum += r * r / size as f64;
        start += size;
    }
    let h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
    Some((h / correction).max(0.0))
}

pub fn kruskal_wallis(groups: &[SampleSet]) -> Result<TestResult, StatsError> {
    let (values, sizes) = pooled(groups, 3)?;
    let (ranks, ties) = mid_ranks(&values);
    Ok(match h_statistic(&ranks, &sizes, ties) {
        None => TestResult::new(0.0, 1.0),
        Some(h) => TestResult::new(h, chi2_sf(h, (groups.len() - 1) as f64)),
    })
}

const MAX_ARRANGEMENTS: f64 = 5e6;

/// Kruskal-Wallis with the p-value from every assignment of the pooled
/// ranks to groups of the observed sizes. Meant for small samples.
pub fn kruskal_wallis_exact(groups: &[SampleSet]) -> Result<TestResult, StatsError> {
    let (values, sizes) = pooled(groups, 1)?;
    let mut arrangements = 1.0;
    let mut left = values.len();
    for &s in &sizes {
        arrangements *= binomial(left, s);
        left -= s;
    }
    if arrangements > MAX_ARRANGEMENTS {
        return Err(StatsError::TooManyArrangements(arrangements));
    }
    let (ranks, ties) = mid_ranks(&values);
    let Some(observed) = h_statistic(&ranks, &sizes, ties) else {
        return Ok(TestResult::new(0.0, 1.0));
    };
    let mut assignment = vec![usize::MAX; ranks.len()];
    let mut counts = (0u64, 0u64);
    let tol = 1e-9 * observed.max(1.0);
    enumerate(&ranks, &sizes, &mut assignment, 0, &mut vec![0; sizes.len()], &mut |a| {
        let mut arranged = Vec::with_capacity(a.len());
        for g in 0..sizes.len() {
            arranged.extend(a.iter().zip(&ranks).filter(|(&k, _)| k == g).map(|(_, &r)| r));
        }
        let h = h_statistic(&arranged, &sizes, ties).unwrap_or(0.0);
        counts.1 += 1;
        if h >= observed - tol {
            counts.0 += 1;
        }
    });
    Ok(TestResult::new(observed, counts.0 as f64 / counts.1 as f64))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn enumerate(
    ranks: &[f64],
    sizes: &[usize],
    assignment: &mut Vec<usize>,
    pos: usize,
    filled: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if pos == ranks.len() {
        visit(assignment);
        return;
    }
    for g in 0..sizes.len() {
        if filled[g] < sizes[g] {
            filled[g] += 1;
            assignment[pos] = g;
            enumerate(ranks, sizes, assignment, pos + 1, filled, visit);
            filled[g] -= 1;
        }
    }
}

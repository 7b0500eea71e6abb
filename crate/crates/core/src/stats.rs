//! Statistical engine: quantiles, correlations, Theil-Sen fits with
//! bootstrap significance, rolling quantiles, histograms.
//!
//! All operations are pure and deterministic given a seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear-interpolation quantile at rank 1 + q*(n-1) (the common
/// "type 7" rule, matching the defaults of mainstream statistics
/// environments).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid_input("quantile of empty input"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid_input(format!("quantile level {q} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in quantile input"));
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in median input"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid_input(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::invalid_input("need at least 3 observations"));
    }
    Ok(())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

/// Product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    if is_constant(x) || is_constant(y) {
        return Err(Error::invalid_input("correlation undefined for constant vector"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Mid-ranks with ties averaged (1-based).
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("non-finite value"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson applied to mid-ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    if is_constant(x) || is_constant(y) {
        return Err(Error::invalid_input("correlation undefined for constant vector"));
    }
    pearson(&midranks(x), &midranks(y))
}

/// Robust bivariate line fit with bootstrap p-values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheilSenFit {
    pub slope: f64,
    pub intercept: f64,
    pub p_slope: f64,
    pub p_intercept: f64,
    pub n: usize,
}

/// Slope = median of all pairwise slopes (pairs with equal x skipped);
/// intercept = median of y_i - slope * x_i. No significance testing.
pub fn theil_sen_point(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::invalid_input("length mismatch"));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::invalid_input("need at least 3 observations"));
    }
    let mut slopes = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            if x[i] != x[j] {
                slopes.push((y[j] - y[i]) / (x[j] - x[i]));
            }
        }
    }
    if slopes.is_empty() {
        return Err(Error::invalid_input("degenerate fit: all x values equal"));
    }
    let slope = median(&mut slopes);
    let mut residuals: Vec<f64> = x.iter().zip(y).map(|(&a, &b)| b - slope * a).collect();
    let intercept = median(&mut residuals);
    Ok((slope, intercept))
}

pub const DEFAULT_BOOTSTRAP_REPS: u32 = 2000;

/// Theil-Sen fit with two-sided p-values from a seeded case-resampling
/// bootstrap (percentile method). Reproducible given (seed, reps).
pub fn theil_sen(x: &[f64], y: &[f64], bootstrap_reps: u32, seed: u64) -> Result<TheilSenFit> {
    let (slope, intercept) = theil_sen_point(x, y)?;
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(bootstrap_reps as usize);
    let mut intercepts = Vec::with_capacity(bootstrap_reps as usize);
    let mut bx = vec![0.0; n];
    let mut by = vec![0.0; n];
    for _ in 0..bootstrap_reps {
        for k in 0..n {
            let idx = rng.gen_range(0..n);
            bx[k] = x[idx];
            by[k] = y[idx];
        }
        // Degenerate resamples (all x equal) carry no slope information.
        if let Ok((s, i)) = theil_sen_point(&bx, &by) {
            slopes.push(s);
            intercepts.push(i);
        }
    }
    Ok(TheilSenFit {
        slope,
        intercept,
        p_slope: two_sided_p(&slopes),
        p_intercept: two_sided_p(&intercepts),
        n,
    })
}

/// Two-sided percentile-bootstrap p-value against a zero null.
fn two_sided_p(boot: &[f64]) -> f64 {
    if boot.is_empty() {
        return 1.0;
    }
    let m = boot.len() as f64;
    let le = boot.iter().filter(|&&v| v <= 0.0).count() as f64;
    let ge = boot.iter().filter(|&&v| v >= 0.0).count() as f64;
    (2.0 * le.min(ge) / m).min(1.0)
}

/// One point of a rolling-quantile series.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RollingPoint {
    /// Prefix size k (number of cities, defined or not).
    pub n_cities: usize,
    /// Population of the k-th (smallest included) city.
    pub population_threshold: f64,
    pub value: f64,
}

/// Rolling quantile over growing prefixes of a population-descending
/// ordering, one series per requested level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RollingQuantileSeries {
    pub level: f64,
    pub points: Vec<RollingPoint>,
}

/// `entries` is (population, optional value); it is sorted descending by
/// population internally. For each prefix size k = 10..=N the quantile
/// is taken over the *defined* values in the prefix; undefined entries
/// are skipped without shrinking k itself.
pub fn rolling_quantiles(
    entries: &[(f64, Option<f64>)],
    levels: &[f64],
) -> Result<Vec<RollingQuantileSeries>> {
    if entries.len() < 10 {
        return Err(Error::invalid_input(format!(
            "rolling quantiles need at least 10 cities, got {}",
            entries.len()
        )));
    }
    let usable = entries.iter().filter(|(_, v)| v.is_some()).count();
    if usable < 10 {
        return Err(Error::invalid_input(format!(
            "rolling quantiles need at least 10 usable cities, got {usable}"
        )));
    }
    let mut sorted: Vec<(f64, Option<f64>)> = entries.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("non-finite population"));

    let mut series: Vec<RollingQuantileSeries> = levels
        .iter()
        .map(|&level| RollingQuantileSeries {
            level,
            points: Vec::with_capacity(sorted.len() - 9),
        })
        .collect();

    let mut defined: Vec<f64> = Vec::with_capacity(sorted.len());
    for (k, (pop, value)) in sorted.iter().enumerate() {
        if let Some(v) = value {
            defined.push(*v);
        }
        let n_cities = k + 1;
        if n_cities < 10 {
            continue;
        }
        if defined.is_empty() {
            return Err(Error::invalid_input(format!(
                "no defined values among the {n_cities} largest cities"
            )));
        }
        for s in &mut series {
            s.points.push(RollingPoint {
                n_cities,
                population_threshold: *pop,
                value: quantile(&defined, s.level)?,
            });
        }
    }
    Ok(series)
}

/// Equal-width histogram over [min, max]; the last bin is closed on the
/// right so counts always sum to n.
pub fn histogram(values: &[f64], bin_count: usize) -> Result<Vec<(f64, f64, usize)>> {
    if values.is_empty() {
        return Err(Error::invalid_input("histogram of empty input"));
    }
    if bin_count == 0 {
        return Err(Error::invalid_input("histogram needs at least one bin"));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / bin_count as f64;
    let mut counts = vec![0usize; bin_count];
    for &v in values {
        let idx = if width > 0.0 {
            (((v - min) / width).floor() as usize).min(bin_count - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (min + i as f64 * width, min + (i + 1) as f64 * width, c))
        .collect())
}

//! Density estimation with bootstrap bands, quadrant partitioning of the
//! descriptor plane, and enrichment reports.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};
use crate::svm::PerformanceLabel;

/// A density over an evaluation grid, optionally with a pointwise
/// confidence band.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub bandwidth: f64,
}

/// Type-7 quantile (linear interpolation between order statistics) of an
/// already sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile_sorted(&sorted, 0.5)
}

/// Silverman bandwidth `0.9 min(sigma, IQR/1.34) n^(-1/5)`. When the IQR
/// collapses to zero on non-degenerate data, the standard deviation alone is
/// used; fully identical samples are an error.
fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    let sigma = var.sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let scale = if iqr > 0.0 {
        sigma.min(iqr / 1.34)
    } else {
        sigma
    };
    let bandwidth = 0.9 * scale * n.powf(-0.2);
    if !(bandwidth > 0.0) {
        return Err(Error::Degenerate(
            "all samples identical: bandwidth is zero".into(),
        ));
    }
    Ok(bandwidth)
}

fn gaussian_kde(samples: &[f64], bandwidth: f64, grid: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    grid.iter()
        .map(|&x| {
            samples
                .iter()
                .map(|&s| {
                    let z = (x - s) / bandwidth;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect()
}

/// Evaluation grid spanning the samples plus three bandwidths on each side.
/// At least two points are always produced.
pub fn default_grid(samples: &[f64], bandwidth: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = min - 3.0 * bandwidth;
    let hi = max + 3.0 * bandwidth;
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Gaussian KDE point estimate on a grid.
pub fn kde_density(samples: &[f64], grid: &[f64], bandwidth: Option<f64>) -> Result<DensityEstimate> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "KDE needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let bandwidth = match bandwidth {
        Some(h) if h > 0.0 => h,
        Some(h) => {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive, got {h}"
            )))
        }
        None => silverman_bandwidth(samples)?,
    };
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        density: gaussian_kde(samples, bandwidth, grid),
        lower: None,
        upper: None,
        bandwidth,
    })
}

/// Percentile bootstrap band around the KDE. Each resample redraws `n`
/// points with replacement and recomputes its own bandwidth (falling back to
/// the point estimate's bandwidth if a resample collapses), and the band is
/// the pointwise (1-level)/2 and (1+level)/2 percentile across resamples.
pub fn bootstrap_band(
    samples: &[f64],
    grid: &[f64],
    n_boot: usize,
    level: f64,
    seed: u64,
) -> Result<DensityEstimate> {
    if samples.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "bootstrap bands need at least 5 samples, got {}",
            samples.len()
        )));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level must be in (0, 1), got {level}"
        )));
    }
    if n_boot < 2 {
        return Err(Error::InvalidArgument("need at least 2 resamples".into()));
    }
    let mut estimate = kde_density(samples, grid, None)?;
    let n = samples.len();
    let mut curves: Vec<Vec<f64>> = Vec::with_capacity(n_boot);
    for r in 0..n_boot {
        let mut rng = Rng::new(derive_seed(seed, r as u64));
        let resample: Vec<f64> = (0..n)
            .map(|_| samples[rng.next_below(n as u64) as usize])
            .collect();
        let bandwidth = silverman_bandwidth(&resample).unwrap_or(estimate.bandwidth);
        curves.push(gaussian_kde(&resample, bandwidth, grid));
    }
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    let mut column = vec![0.0f64; n_boot];
    for g in 0..grid.len() {
        for (r, curve) in curves.iter().enumerate() {
            column[r] = curve[g];
        }
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lower.push(quantile_sorted(&column, (1.0 - level) / 2.0));
        upper.push(quantile_sorted(&column, (1.0 + level) / 2.0));
    }
    estimate.lower = Some(lower);
    estimate.upper = Some(upper);
    Ok(estimate)
}

/// Quadrants of the (r_min, r_max) plane. Assignment is by strict
/// inequality: points exactly on a threshold fall to the low side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrant {
    HighHigh,
    HighLow,
    LowHigh,
    LowLow,
}

pub fn quadrant_of(r_min: f64, r_max: f64, min_threshold: f64, max_threshold: f64) -> Quadrant {
    match (r_min > min_threshold, r_max > max_threshold) {
        (true, true) => Quadrant::HighHigh,
        (true, false) => Quadrant::HighLow,
        (false, true) => Quadrant::LowHigh,
        (false, false) => Quadrant::LowLow,
    }
}

/// Partition record indices into the four quadrants.
pub fn quadrant_split(
    records: &[(f64, f64)],
    min_threshold: f64,
    max_threshold: f64,
) -> [Vec<usize>; 4] {
    let mut groups: [Vec<usize>; 4] = Default::default();
    for (idx, &(r_min, r_max)) in records.iter().enumerate() {
        let group = match quadrant_of(r_min, r_max, min_threshold, max_threshold) {
            Quadrant::HighHigh => 0,
            Quadrant::HighLow => 1,
            Quadrant::LowHigh => 2,
            Quadrant::LowLow => 3,
        };
        groups[group].push(idx);
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GroupCounts {
    pub performant: usize,
    pub underperforming: usize,
    pub discarded: usize,
}

impl GroupCounts {
    pub fn tally(labels: &[PerformanceLabel]) -> Self {
        let mut counts = GroupCounts::default();
        for label in labels {
            match label {
                PerformanceLabel::Performant => counts.performant += 1,
                PerformanceLabel::Underperforming => counts.underperforming += 1,
                PerformanceLabel::Discarded => counts.discarded += 1,
            }
        }
        counts
    }

    pub fn total(&self) -> usize {
        self.performant + self.underperforming + self.discarded
    }

    pub fn performant_fraction(&self) -> f64 {
        self.performant as f64 / self.total() as f64
    }
}

/// Comparison of the performant fractions of two label groups. The ratio is
/// high over low; a zero low fraction yields +infinity when the high group
/// has any performant member and 1.0 when both fractions vanish.
#[derive(Debug, Clone)]
pub struct EnrichmentReport {
    pub high: GroupCounts,
    pub low: GroupCounts,
    pub high_fraction: f64,
    pub low_fraction: f64,
    pub ratio: f64,
}

pub fn enrichment(
    high_labels: &[PerformanceLabel],
    low_labels: &[PerformanceLabel],
) -> Result<EnrichmentReport> {
    if high_labels.is_empty() || low_labels.is_empty() {
        return Err(Error::InvalidArgument(
            "both enrichment groups must be nonempty".into(),
        ));
    }
    let high = GroupCounts::tally(high_labels);
    let low = GroupCounts::tally(low_labels);
    let high_fraction = high.performant_fraction();
    let low_fraction = low.performant_fraction();
    let ratio = if low_fraction > 0.0 {
        high_fraction / low_fraction
    } else if high_fraction > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    Ok(EnrichmentReport {
        high,
        low,
        high_fraction,
        low_fraction,
        ratio,
    })
}

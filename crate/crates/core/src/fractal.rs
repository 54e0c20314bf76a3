//! Statistical analysis of an eigenphase set: cumulative level density,
//! multi-scale density histograms, and the generalized (Rényi) fractal
//! dimension D_q from box counting.
//!
//! At fixed αJ the spectrum occupies a J-independent sub-arc of the phase
//! circle (the butterfly's envelope); outside it the circle is empty. All
//! density statistics therefore default to the occupied band — the
//! complement of the largest circular gap — which is where "no large
//! gaps" and the box-counting scaling hold. Full-circle analysis remains
//! available through [`BoxDomain::FullCircle`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error)]
pub enum FractalError {
    #[error("need at least {need} levels for a meaningful fit, got {got}")]
    InsufficientLevels { need: usize, got: usize },
    #[error("no phases fall inside the window [{lo}, {hi})")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error("invalid window or bin count: {0}")]
    BadWindow(String),
}

/// Cumulative level density N(ε): a non-decreasing step function with one
/// step per level.
#[derive(Debug, Clone)]
pub struct CumulativeDensity {
    /// Step positions (sorted phases).
    pub phases: Vec<f64>,
    /// N(ε) just after each step: counts[i] = i+1.
    pub counts: Vec<usize>,
}

impl CumulativeDensity {
    pub fn total(&self) -> usize {
        self.phases.len()
    }

    /// N(ε)/N_total at each step.
    pub fn normalized(&self) -> Vec<(f64, f64)> {
        let n = self.total() as f64;
        self.phases
            .iter()
            .zip(&self.counts)
            .map(|(&p, &c)| (p, c as f64 / n))
            .collect()
    }
}

/// Build the cumulative density of a phase set.
pub fn cumulative_density(phases: &[f64]) -> CumulativeDensity {
    let mut sorted = phases.to_vec();
    sorted.sort_by(f64::total_cmp);
    let counts = (1..=sorted.len()).collect();
    CumulativeDensity { phases: sorted, counts }
}

/// The occupied band of a phase set: (start, length) of the smallest arc
/// containing every phase, i.e. the complement of the largest circular
/// gap. Degenerates to (phase, 0) for fewer than two distinct phases.
pub fn occupied_band(phases: &[f64]) -> (f64, f64) {
    let n = phases.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mut sorted: Vec<f64> = phases.iter().map(|p| p.rem_euclid(TAU)).collect();
    sorted.sort_by(f64::total_cmp);
    let mut gap = TAU - sorted[n - 1] + sorted[0];
    let mut gap_start = sorted[n - 1];
    for w in sorted.windows(2) {
        if w[1] - w[0] > gap {
            gap = w[1] - w[0];
            gap_start = w[0];
        }
    }
    ((gap_start + gap).rem_euclid(TAU), TAU - gap)
}

/// Map phases onto [0, 2π) with the occupied band stretched over the full
/// interval. Point-like sets (band below 1e−9) are returned unmapped.
pub fn band_normalized(phases: &[f64]) -> Vec<f64> {
    let (lo, len) = occupied_band(phases);
    if len < 1e-9 {
        return phases.iter().map(|p| p.rem_euclid(TAU)).collect();
    }
    phases
        .iter()
        .map(|&p| ((p.rem_euclid(TAU) - lo).rem_euclid(TAU) / len * TAU).min(TAU - f64::EPSILON))
        .collect()
}

/// Largest interior nearest-neighbor gap divided by the band mean spacing
/// band/(N−1). Interior means the single largest circular gap — the empty
/// arc outside the spectrum's envelope — is excluded. The spectrum "has no
/// large gaps" when this stays below ~20.
pub fn max_gap_over_mean_spacing(phases: &[f64]) -> f64 {
    let n = phases.len();
    if n < 3 {
        return 0.0;
    }
    let mut sorted: Vec<f64> = phases.iter().map(|p| p.rem_euclid(TAU)).collect();
    sorted.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(TAU - sorted[n - 1] + sorted[0]);
    gaps.sort_by(f64::total_cmp);
    let band = TAU - gaps[n - 1];
    let interior_max = gaps[n - 2];
    if band <= 0.0 {
        return 0.0;
    }
    interior_max / (band / (n as f64 - 1.0))
}

/// Fixed-width histogram of phases within a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    /// Counts normalized to unit sum.
    pub fn normalized(&self) -> Vec<f64> {
        let total: usize = self.counts.iter().sum();
        self.counts.iter().map(|&c| c as f64 / total as f64).collect()
    }
}

/// Histogram of the phases falling in [lo, hi), split into `bins` bins.
/// Supports nested zooming for self-similarity inspection.
pub fn density_histogram(phases: &[f64], window: (f64, f64), bins: usize) -> Result<Histogram, FractalError> {
    let (lo, hi) = window;
    if !(hi > lo) || bins < 2 {
        return Err(FractalError::BadWindow(format!("window [{lo}, {hi}), bins {bins}")));
    }
    let mut counts = vec![0usize; bins];
    let width = (hi - lo) / bins as f64;
    let mut seen = 0usize;
    for &p in phases {
        if p >= lo && p < hi {
            let idx = (((p - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
            seen += 1;
        }
    }
    if seen == 0 {
        return Err(FractalError::EmptyWindow { lo, hi });
    }
    Ok(Histogram { lo, hi, counts })
}

/// Pearson correlation of two normalized histograms (used to quantify the
/// visual self-similarity of nested zooms).
pub fn histogram_correlation(a: &Histogram, b: &Histogram) -> f64 {
    let x = a.normalized();
    let y = b.normalized();
    assert_eq!(x.len(), y.len(), "correlate equal bin counts");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(&y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
        syy += (yi - my) * (yi - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return if sxx == syy { 1.0 } else { 0.0 };
    }
    sxy / (sxx * syy).sqrt()
}

/// Generalized fractal dimension curve with fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqCurve {
    pub q_values: Vec<f64>,
    pub d_q: Vec<f64>,
    /// Box counts M = 2^k used in the fits.
    pub fit_scales: Vec<usize>,
    /// Goodness of fit per q.
    pub fit_r2: Vec<f64>,
    /// Standard error of the fitted slope per q (in D_q units).
    pub fit_stderr: Vec<f64>,
}

impl DqCurve {
    pub fn at(&self, q: f64) -> Option<f64> {
        self.q_values.iter().position(|&x| (x - q).abs() < 1e-12).map(|i| self.d_q[i])
    }
}

/// Default q grid: −5 to +5 in steps of 0.25.
pub fn default_q_grid() -> Vec<f64> {
    (0..=40).map(|k| -5.0 + 0.25 * k as f64).collect()
}

/// Minimum number of levels for a box-counting fit.
pub const MIN_LEVELS: usize = 64;

/// Interval the boxes partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoxDomain {
    /// The spectrum's occupied band stretched to [0, 2π) (default): the
    /// empty arc outside the envelope carries no information and would
    /// otherwise dominate the coarse scales.
    #[default]
    OccupiedBand,
    /// The raw phase circle.
    FullCircle,
}

/// Box-counting estimate of D_q (occupied-band domain).
///
/// The domain is split into M = 2^k boxes with occupation probabilities
/// p_i; for q ≠ 1 the slope of ln Σ p_i^q against ln(1/M) gives
/// (q−1)·D_q, and for q = 1 the slope of Σ p_i ln p_i gives D_1. Scales
/// default to 4 ≤ 2^k ≤ N/8 so that boxes stay at least 8× coarser than
/// the mean level spacing.
pub fn dq_spectrum(
    phases: &[f64],
    q_values: &[f64],
    scale_range: Option<(u32, u32)>,
) -> Result<DqCurve, FractalError> {
    dq_spectrum_in(phases, q_values, scale_range, BoxDomain::OccupiedBand)
}

/// [`dq_spectrum`] with an explicit box domain.
pub fn dq_spectrum_in(
    phases: &[f64],
    q_values: &[f64],
    scale_range: Option<(u32, u32)>,
    domain: BoxDomain,
) -> Result<DqCurve, FractalError> {
    let n = phases.len();
    if n < MIN_LEVELS {
        return Err(FractalError::InsufficientLevels { need: MIN_LEVELS, got: n });
    }
    let mapped;
    let phases: &[f64] = match domain {
        BoxDomain::FullCircle => phases,
        BoxDomain::OccupiedBand => {
            mapped = band_normalized(phases);
            &mapped
        }
    };
    let (k_min, k_max) = scale_range.unwrap_or_else(|| {
        let k_max = ((n as f64 / 8.0).log2().floor() as u32).max(3);
        (2, k_max)
    });
    if k_max < k_min + 1 {
        return Err(FractalError::InsufficientLevels { need: MIN_LEVELS, got: n });
    }

    // Occupation probabilities per scale.
    let mut scales = Vec::new();
    let mut probs_per_scale: Vec<Vec<f64>> = Vec::new();
    for k in k_min..=k_max {
        let m = 1usize << k;
        let mut counts = vec![0usize; m];
        for &p in phases {
            let idx = ((p.rem_euclid(TAU) / TAU * m as f64) as usize).min(m - 1);
            counts[idx] += 1;
        }
        scales.push(m);
        probs_per_scale.push(
            counts.iter().filter(|&&c| c > 0).map(|&c| c as f64 / n as f64).collect(),
        );
    }
    let xs: Vec<f64> = scales.iter().map(|&m| -(m as f64).ln()).collect(); // ln(1/M)

    let mut d_q = Vec::with_capacity(q_values.len());
    let mut fit_r2 = Vec::with_capacity(q_values.len());
    let mut fit_stderr = Vec::with_capacity(q_values.len());
    for &q in q_values {
        let ys: Vec<f64> = probs_per_scale
            .iter()
            .map(|probs| {
                if (q - 1.0).abs() < 1e-9 {
                    probs.iter().map(|&p| p * p.ln()).sum::<f64>()
                } else {
                    probs.iter().map(|&p| p.powf(q)).sum::<f64>().ln()
                }
            })
            .collect();
        let (slope, r2, se) = linear_fit(&xs, &ys);
        if (q - 1.0).abs() < 1e-9 {
            d_q.push(slope);
            fit_stderr.push(se);
        } else {
            d_q.push(slope / (q - 1.0));
            fit_stderr.push(se / (q - 1.0).abs());
        }
        fit_r2.push(r2);
    }

    Ok(DqCurve { q_values: q_values.to_vec(), d_q, fit_scales: scales, fit_r2, fit_stderr })
}

/// Least-squares line fit; returns (slope, r², slope standard error).
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let fit = slope * x + intercept;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - my) * (y - my);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let dof = (xs.len() as f64 - 2.0).max(1.0);
    let se = (ss_res / dof / sxx).sqrt();
    (slope, r2, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_phases(n: usize) -> Vec<f64> {
        (0..n).map(|k| TAU * (k as f64 + 0.5) / n as f64).collect()
    }

    #[test]
    fn cumulative_single_phase() {
        let c = cumulative_density(&[1.25]);
        assert_eq!(c.phases, vec![1.25]);
        assert_eq!(c.counts, vec![1]);
        assert_eq!(c.normalized(), vec![(1.25, 1.0)]);
    }

    #[test]
    fn cumulative_uniform_is_linear() {
        let c = cumulative_density(&uniform_phases(100));
        for (p, frac) in c.normalized() {
            assert!((frac - p / TAU).abs() <= 1.0 / 100.0 + 1e-12);
        }
        assert_eq!(c.total(), 100);
    }

    #[test]
    fn histogram_single_level() {
        let h = density_histogram(&[0.5], (0.0, TAU), 8).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), 1);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
    }

    #[test]
    fn histogram_uniform_is_flat() {
        let h = density_histogram(&uniform_phases(4096), (0.0, TAU), 16).unwrap();
        let max = *h.counts.iter().max().unwrap() as f64;
        let min = *h.counts.iter().min().unwrap() as f64;
        assert!(max / min < 2.0);
    }

    #[test]
    fn histogram_empty_window_errors() {
        let r = density_histogram(&uniform_phases(10), (0.0, 1e-9), 4);
        assert!(matches!(r, Err(FractalError::EmptyWindow { .. })));
    }

    #[test]
    fn dq_uniform_is_one() {
        let curve = dq_spectrum(&uniform_phases(1024), &default_q_grid(), None).unwrap();
        for (q, d) in curve.q_values.iter().zip(&curve.d_q) {
            assert!((d - 1.0).abs() < 0.02, "q={q}: D_q={d}");
        }
    }

    #[test]
    fn dq_point_support_is_zero() {
        let phases = vec![1.234; 128];
        let curve = dq_spectrum(&phases, &default_q_grid(), None).unwrap();
        for (q, d) in curve.q_values.iter().zip(&curve.d_q) {
            assert!(d.abs() < 0.02, "q={q}: D_q={d}");
        }
    }

    #[test]
    fn dq_insufficient_levels() {
        let r = dq_spectrum(&uniform_phases(32), &[2.0], None);
        assert!(matches!(r, Err(FractalError::InsufficientLevels { .. })));
    }

    #[test]
    fn max_gap_detects_interior_voids() {
        // Uniform: gap ratio ≈ 1.
        assert!(max_gap_over_mean_spacing(&uniform_phases(128)) < 1.5);
        // Spectrum confined to half the circle (empty envelope arc): the
        // void is outside the band and must NOT count as a gap.
        let half: Vec<f64> = (0..128).map(|k| std::f64::consts::PI * k as f64 / 128.0).collect();
        assert!(max_gap_over_mean_spacing(&half) < 2.5);
        // Two dense clusters separated by an interior void: the larger
        // empty arc defines the band edge, the smaller one is a genuine
        // interior gap.
        let mut clustered: Vec<f64> = (0..64).map(|k| 0.5 * k as f64 / 64.0).collect();
        clustered.extend((0..64).map(|k| 1.5 + 0.5 * k as f64 / 64.0));
        assert!(max_gap_over_mean_spacing(&clustered) > 20.0);
    }

    #[test]
    fn occupied_band_of_arc() {
        let arc: Vec<f64> = (0..100).map(|k| 1.0 + k as f64 / 100.0).collect();
        let (lo, len) = occupied_band(&arc);
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((len - 0.99).abs() < 1e-12);
        // Band-normalized phases span [0, 2π).
        let u = band_normalized(&arc);
        assert!(u.iter().all(|&p| (0.0..TAU).contains(&p)));
        assert!(u[0].abs() < 1e-9);
        assert!(u.last().unwrap() > &(TAU - 1e-9));
    }

    #[test]
    fn band_wraps_across_zero() {
        // Arc straddling the 0/2π seam.
        let arc: Vec<f64> = (0..50).map(|k| (TAU - 0.5 + k as f64 / 49.0).rem_euclid(TAU)).collect();
        let (lo, len) = occupied_band(&arc);
        assert!((lo - (TAU - 0.5)).abs() < 1e-9, "lo = {lo}");
        assert!((len - 1.0).abs() < 1e-9, "len = {len}");
    }

    #[test]
    fn correlation_of_identical_histograms_is_one() {
        let h = density_histogram(&uniform_phases(512), (0.0, TAU), 16).unwrap();
        assert!((histogram_correlation(&h, &h) - 1.0).abs() < 1e-12);
    }
}

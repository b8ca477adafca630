//! Output analysis for simulation runs.
//!
//! * Welch's method on per-demand delivery times to find the warm-up length.
//! * Replication/deletion: per-replication means after the warm-up, then a
//!   Student-t interval over the replication means.
//! * A drift test on the pending-job count to tell stable from unstable runs.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchConfig {
    /// `w`; the moving window spans `2w + 1` demands.
    pub half_window: usize,
    /// Relative half-width of the flatness band around the final-quartile mean.
    pub band: f64,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            half_window: 500,
            band: 0.05,
        }
    }
}

/// Replication-averaged delivery times smoothed with a centred window.
/// `values[j]` is centred on demand index `j + half_window`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchCurve {
    pub half_window: usize,
    pub values: Vec<f64>,
}

impl WelchCurve {
    pub fn demand_index(&self, j: usize) -> usize {
        j + self.half_window
    }
}

pub fn welch_curve(series: &[&[f64]], half_window: usize) -> Result<WelchCurve> {
    if series.is_empty() {
        return Err(invalid_arg!("no replications"));
    }
    let len = series.iter().map(|s| s.len()).min().unwrap_or(0);
    let window = 2 * half_window + 1;
    if len < window + 1 {
        return Err(invalid_arg!(
            "replications have {len} demands, need at least {} for a window of {window}",
            window + 1
        ));
    }
    let r = series.len() as f64;
    let avg: Vec<f64> = (0..len)
        .map(|n| series.iter().map(|s| s[n]).sum::<f64>() / r)
        .collect();

    let mut values = Vec::with_capacity(len - 2 * half_window);
    let mut acc: f64 = avg[..window].iter().sum();
    values.push(acc / window as f64);
    for j in 1..=(len - window) {
        acc += avg[j + window - 1] - avg[j - 1];
        values.push(acc / window as f64);
    }
    Ok(WelchCurve { half_window, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarmUp {
    /// Demands to delete. Equals the series length when `converged` is false.
    pub n_wu: usize,
    pub converged: bool,
}

/// First demand index after which the smoothed curve stays within the band
/// around its final-quartile mean.
pub fn welch_warmup(series: &[&[f64]], cfg: &WelchConfig) -> Result<WarmUp> {
    if series.len() < 2 {
        return Err(invalid_arg!("Welch's method needs at least 2 replications"));
    }
    let curve = welch_curve(series, cfg.half_window)?;
    let len = series.iter().map(|s| s.len()).min().unwrap_or(0);
    Ok(warmup_from_curve(&curve, cfg.band, len))
}

pub(crate) fn warmup_from_curve(curve: &WelchCurve, band: f64, len: usize) -> WarmUp {
    let values = &curve.values;
    let tail = &values[values.len() - values.len().div_ceil(4)..];
    let reference = tail.iter().sum::<f64>() / tail.len() as f64;
    let tol = band * reference.abs();
    let first_stable = values
        .iter()
        .rposition(|y| (y - reference).abs() > tol)
        .map_or(0, |j| j + 1);
    if first_stable >= values.len() {
        WarmUp {
            n_wu: len,
            converged: false,
        }
    } else {
        WarmUp {
            n_wu: curve.demand_index(first_stable),
            converged: true,
        }
    }
}

/// Steady-state mean delivery time with a confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub mean: f64,
    pub ci: (f64, f64),
    pub per_replication: Vec<f64>,
}

/// Replication/deletion estimate: drops the first `n_wu` demands of every
/// replication, averages the rest, and builds a Student-t interval with
/// `R - 1` degrees of freedom over the `R` replication means.
pub fn replication_deletion(series: &[&[f64]], n_wu: usize, confidence: f64) -> Result<SteadyState> {
    let per_replication: Vec<f64> = series
        .iter()
        .filter(|s| s.len() > n_wu)
        .map(|s| mean(&s[n_wu..]))
        .collect();
    if per_replication.len() < 2 {
        return Err(invalid_arg!(
            "need at least 2 replications longer than the warm-up of {n_wu} demands"
        ));
    }
    if !(0.0 < confidence && confidence < 1.0) {
        return Err(invalid_arg!("confidence must lie in (0, 1)"));
    }
    let r = per_replication.len() as f64;
    let m = mean(&per_replication);
    let var = per_replication.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (r - 1.0);
    let half = student_t_quantile(0.5 + confidence / 2.0, r - 1.0) * libm::sqrt(var / r);
    Ok(SteadyState {
        mean: m,
        ci: (m - half, m + half),
        per_replication,
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Undecided,
}

/// Thresholds of the drift test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Fraction of the run, counted from the end, used for the slope fit.
    pub tail_fraction: f64,
    /// The pending series is averaged into this many batches before the fit.
    pub batches: usize,
    pub slope_confidence: f64,
    /// Unstable needs mean N over the last quarter above
    /// `level_factor · (mean over the second quarter) + level_offset`.
    pub level_factor: f64,
    pub level_offset: f64,
    pub welch: WelchConfig,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            tail_fraction: 0.5,
            batches: 20,
            slope_confidence: 0.95,
            level_factor: 2.0,
            level_offset: 5.0,
            welch: WelchConfig::default(),
        }
    }
}

/// Least-squares slope with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub std_error: f64,
    pub dof: f64,
}

pub fn fit_slope(t: &[f64], y: &[f64]) -> Option<SlopeFit> {
    let n = t.len().min(y.len());
    if n < 3 {
        return None;
    }
    let (t, y) = (&t[..n], &y[..n]);
    let tm = mean(t);
    let ym = mean(y);
    let sxx: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let sse: f64 = t
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - intercept - slope * a;
            e * e
        })
        .sum();
    let dof = (n - 2) as f64;
    Some(SlopeFit {
        slope,
        std_error: libm::sqrt(sse / dof / sxx),
        dof,
    })
}

/// Drift test on one run.
///
/// `times`/`pending` are the sampled pending-job counts; `delivery` is the
/// per-demand delivery-time series of the same run.
///
/// * unstable: the slope interval lies above zero and the pending level over
///   the last quarter exceeds the level threshold;
/// * stable: the slope interval contains zero and Welch's method converges on
///   `delivery`;
/// * undecided otherwise.
pub fn detect_instability(times: &[f64], pending: &[f64], delivery: &[f64], cfg: &DetectorConfig) -> Verdict {
    let n = times.len().min(pending.len());
    if n < 8 {
        return Verdict::Undecided;
    }
    let start = n - ((n as f64 * cfg.tail_fraction) as usize).max(3).min(n);
    let batches = cfg.batches.clamp(3, n - start);
    let size = (n - start) / batches;
    let (bt, by): (Vec<f64>, Vec<f64>) = (0..batches)
        .map(|b| {
            let lo = start + b * size;
            let hi = if b + 1 == batches { n } else { lo + size };
            (mean(&times[lo..hi]), mean(&pending[lo..hi]))
        })
        .unzip();
    let Some(fit) = fit_slope(&bt, &by) else {
        return Verdict::Undecided;
    };
    let half = student_t_quantile(0.5 + cfg.slope_confidence / 2.0, fit.dof) * fit.std_error;
    let (lo, hi) = (fit.slope - half, fit.slope + half);

    let q = n / 4;
    let second = mean(&pending[q..2 * q]);
    let last = mean(&pending[n - q..n]);
    if lo > 0.0 && last > cfg.level_factor * second + cfg.level_offset {
        return Verdict::Unstable;
    }
    if lo <= 0.0 && hi >= 0.0 && single_run_converges(delivery, &cfg.welch) {
        return Verdict::Stable;
    }
    Verdict::Undecided
}

fn single_run_converges(delivery: &[f64], cfg: &WelchConfig) -> bool {
    let w = cfg.half_window.min(delivery.len().saturating_sub(2) / 2);
    if w == 0 {
        return false;
    }
    match welch_curve(&[delivery], w) {
        Ok(curve) => warmup_from_curve(&curve, cfg.band, delivery.len()).converged,
        Err(_) => false,
    }
}

/// Quantile of Student's t distribution with `dof` degrees of freedom.
pub fn student_t_quantile(p: f64, dof: f64) -> f64 {
    assert!(0.0 < p && p < 1.0 && dof > 0.0);
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -student_t_quantile(1.0 - p, dof);
    }
    // Bracket, then bisect the CDF; it is monotone and cheap to evaluate.
    let mut hi = 1.0;
    while student_t_cdf(hi, dof) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, dof) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn student_t_cdf(t: f64, dof: f64) -> f64 {
    let x = dof / (dof + t * t);
    let tail = 0.5 * regularized_beta(x, dof / 2.0, 0.5);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Regularised incomplete beta `I_x(a, b)` via Lentz's continued fraction.
fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_fraction(1.0 - x, b, a) / b
    }
}

fn beta_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    fn gauss<R: Rng>(rng: &mut R) -> f64 {
        // Box-Muller
        let u1: f64 = rng.gen::<f64>().max(1e-300);
        let u2: f64 = rng.gen();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    }

    #[test]
    fn t_quantiles_match_reference() {
        for dof in [1.0, 2.0, 3.0, 5.0, 9.0, 19.0, 30.0, 120.0] {
            let reference = StudentsT::new(0.0, 1.0, dof).unwrap();
            for p in [0.6, 0.9, 0.95, 0.975, 0.995] {
                let ours = student_t_quantile(p, dof);
                let theirs = reference.inverse_cdf(p);
                assert!((ours - theirs).abs() < 1e-8 * theirs.abs().max(1.0), "dof={dof} p={p}: {ours} vs {theirs}");
            }
        }
        assert!((student_t_quantile(0.95, 9.0) - 1.833113).abs() < 1e-6);
    }

    #[test]
    fn welch_finds_exponential_transient() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let series: Vec<Vec<f64>> = (0..10)
            .map(|_| {
                (0..6000)
                    .map(|n| 5.0 + 3.0 * libm::exp(-(n as f64) / 300.0) + 0.5 * gauss(&mut rng))
                    .collect()
            })
            .collect();
        let refs: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
        let wu = welch_warmup(&refs, &WelchConfig::default()).unwrap();
        assert!(wu.converged);
        assert!((600..=1800).contains(&wu.n_wu), "{}", wu.n_wu);
    }

    #[test]
    fn welch_flat_series_is_immediately_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let series: Vec<Vec<f64>> = (0..4).map(|_| (0..3000).map(|_| 5.0 + gauss(&mut rng)).collect()).collect();
        let refs: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
        let wu = welch_warmup(&refs, &WelchConfig::default()).unwrap();
        assert!(wu.converged);
        assert!(wu.n_wu <= 1001);
    }

    #[test]
    fn welch_growing_series_does_not_converge() {
        let series: Vec<Vec<f64>> = (0..3).map(|_| (0..4000).map(|n| 1.0 + n as f64 * 0.01).collect()).collect();
        let refs: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
        let wu = welch_warmup(&refs, &WelchConfig::default()).unwrap();
        assert!(!wu.converged);
        assert_eq!(wu.n_wu, 4000);
    }

    #[test]
    fn welch_rejects_short_or_single_series() {
        let s = vec![1.0; 500];
        assert!(welch_warmup(&[&s, &s], &WelchConfig::default()).is_err());
        let s = vec![1.0; 5000];
        assert!(welch_warmup(&[&s], &WelchConfig::default()).is_err());
    }

    #[test]
    fn replication_deletion_coverage() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut covered = 0;
        for _ in 0..100 {
            let series: Vec<Vec<f64>> = (0..10).map(|_| (0..50).map(|_| 5.0 + gauss(&mut rng)).collect()).collect();
            let refs: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
            let ss = replication_deletion(&refs, 0, 0.90).unwrap();
            if ss.ci.0 <= 5.0 && 5.0 <= ss.ci.1 {
                covered += 1;
            }
        }
        assert!(covered >= 85, "{covered}");
    }

    #[test]
    fn replication_deletion_degenerate_cases() {
        let s = vec![2.0, 3.0, 4.0];
        let ss = replication_deletion(&[&s, &s, &s], 1, 0.9).unwrap();
        assert_eq!(ss.mean, 3.5);
        assert_eq!(ss.ci, (3.5, 3.5));

        let a = vec![1.0, 2.0, 3.0];
        let b = vec![1.0, 2.0, 5.0];
        let ss = replication_deletion(&[&a, &b], 2, 0.9).unwrap();
        assert_eq!(ss.per_replication, [3.0, 5.0]);
        assert!(ss.ci.1 - ss.ci.0 > 5.0);

        assert!(replication_deletion(&[&a], 0, 0.9).is_err());
        assert!(replication_deletion(&[&a, &b], 3, 0.9).is_err());
    }

    #[test]
    fn ci_width_scales_with_inverse_sqrt_r() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut widths = Vec::new();
        for r in [5usize, 10, 20, 40] {
            // Average the width over many experiments to tame its own noise.
            let mut total = 0.0;
            for _ in 0..400 {
                let means: Vec<Vec<f64>> = (0..r).map(|_| vec![5.0 + gauss(&mut rng)]).collect();
                let refs: Vec<&[f64]> = means.iter().map(|s| s.as_slice()).collect();
                let ss = replication_deletion(&refs, 0, 0.9).unwrap();
                total += (ss.ci.1 - ss.ci.0) / student_t_quantile(0.95, r as f64 - 1.0);
            }
            widths.push((r, total / 400.0));
        }
        let (r0, w0) = widths[0];
        for &(r, w) in &widths[1..] {
            let expected = w0 * libm::sqrt(r0 as f64 / r as f64);
            assert!((w / expected - 1.0).abs() < 0.2, "r={r}: {w} vs {expected}");
        }
    }

    fn times(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64).collect()
    }

    #[test]
    fn detector_flat_noise_is_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pending: Vec<f64> = (0..2000).map(|_| libm::round(3.0 + gauss(&mut rng)).max(0.0)).collect();
        let delivery: Vec<f64> = (0..4000).map(|_| 2.0 + 0.3 * gauss(&mut rng)).collect();
        let v = detect_instability(&times(2000), &pending, &delivery, &DetectorConfig::default());
        assert_eq!(v, Verdict::Stable);
    }

    #[test]
    fn detector_linear_drift_is_unstable() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pending: Vec<f64> = (0..2000).map(|t| 0.1 * t as f64 + gauss(&mut rng)).collect();
        let delivery: Vec<f64> = (0..4000).map(|n| 1.0 + 0.01 * n as f64).collect();
        let v = detect_instability(&times(2000), &pending, &delivery, &DetectorConfig::default());
        assert_eq!(v, Verdict::Unstable);
    }

    #[test]
    fn detector_short_input_is_undecided() {
        let v = detect_instability(&times(5), &[1.0; 5], &[1.0; 5], &DetectorConfig::default());
        assert_eq!(v, Verdict::Undecided);
    }
}

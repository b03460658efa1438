//! Speedup, idle-rate and aggregate metrics.

use detmip::parallel::ThreadStats;
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum MetricError {
    #[error("times must be positive")]
    NonPositiveTime,
    #[error("thread has zero total time")]
    ZeroDuration,
    #[error("values must be positive")]
    NonPositiveValue,
}

/// `t_serial / t_parallel`.
pub fn speedup(t_serial: f64, t_parallel: f64) -> Result<f64, MetricError> {
    if !(t_serial > 0.0 && t_parallel > 0.0) {
        return Err(MetricError::NonPositiveTime);
    }
    Ok(t_serial / t_parallel)
}

/// Idle percentage `100 W / (W + E)` from execution time `e` and wait time `w`.
pub fn idle_rate(e: f64, w: f64) -> Result<f64, MetricError> {
    let total = e + w;
    if !(total > 0.0) || e < 0.0 || w < 0.0 {
        return Err(MetricError::ZeroDuration);
    }
    Ok(100.0 * w / total)
}

pub fn thread_idle_rate(stats: &ThreadStats) -> Result<f64, MetricError> {
    idle_rate(stats.work_time, stats.wait_time)
}

/// `100 * sum(W) / sum(E)` over all threads.
pub fn aggregate_wait_ratio(stats: &[ThreadStats]) -> Result<f64, MetricError> {
    let e: f64 = stats.iter().map(|s| s.work_time).sum();
    let w: f64 = stats.iter().map(|s| s.wait_time).sum();
    if !(e > 0.0) {
        return Err(MetricError::ZeroDuration);
    }
    Ok(100.0 * w / e)
}

pub fn geometric_mean(values: &[f64]) -> Result<f64, MetricError> {
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0)) {
        return Err(MetricError::NonPositiveValue);
    }
    Ok((values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp())
}

/// Rounds to two decimals, the precision the reports print.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speedup_examples() {
        assert_eq!(round2(speedup(40.83, 15.94).unwrap()), 2.56);
        assert_eq!(round2(speedup(1788.48, 349.1).unwrap()), 5.12);
        assert_eq!(speedup(3.0, 3.0).unwrap(), 1.0);
        assert_eq!(speedup(0.0, 1.0), Err(MetricError::NonPositiveTime));
        assert_eq!(speedup(1.0, -1.0), Err(MetricError::NonPositiveTime));
    }

    #[test]
    fn idle_examples() {
        assert_eq!(round2(idle_rate(154.81, 58.76).unwrap()), 27.51);
        assert_eq!(round2(idle_rate(148.44, 65.13).unwrap()), 30.5);
        assert_eq!(idle_rate(5.0, 0.0).unwrap(), 0.0);
        assert_eq!(idle_rate(0.0, 0.0), Err(MetricError::ZeroDuration));
    }

    #[test]
    fn geometric_mean_examples() {
        assert!((geometric_mean(&[7.0]).unwrap() - 7.0).abs() < 1e-12);
        assert!((geometric_mean(&[2.0, 8.0]).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(geometric_mean(&[1.0, 0.0]), Err(MetricError::NonPositiveValue));
        assert_eq!(geometric_mean(&[]), Err(MetricError::NonPositiveValue));
    }

    #[test]
    fn aggregate_ratio() {
        let t = |e, w| ThreadStats { work_time: e, wait_time: w, ..ThreadStats::default() };
        let r = aggregate_wait_ratio(&[t(3.0, 1.0), t(1.0, 1.0)]).unwrap();
        assert!((r - 50.0).abs() < 1e-12);
    }
}

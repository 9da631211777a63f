//! Replication statistics.

use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub mean: f64,
    /// Half-width of the two-sided Student-t interval; `None` below two samples.
    pub half_width: Option<f64>,
}

/// Two-sided Student-t confidence interval on the sample mean with n−1
/// degrees of freedom.
pub fn confidence_interval(samples: &[f64], level: f64) -> Interval {
    let n = samples.len();
    let mean = if n == 0 { f64::NAN } else { samples.iter().sum::<f64>() / n as f64 };
    if n < 2 {
        return Interval { mean, half_width: None };
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Interval { mean, half_width: Some(0.0) };
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("n ≥ 2 gives positive degrees of freedom")
        .inverse_cdf(0.5 + level / 2.0);
    Interval { mean, half_width: Some(t * (var / n as f64).sqrt()) }
}

/// λ_PDDT / λ_SDDT, or `None` when the serial multiplier is not positive.
pub fn throughput_gain(lambda_pddt: f64, lambda_sddt: f64) -> Option<f64> {
    (lambda_sddt > 0.0).then(|| lambda_pddt / lambda_sddt)
}

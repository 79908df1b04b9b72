//! Aggregation and hypothesis testing over per-agent results.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two
/// samples.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Cross-seed summary of one scalar: mean, standard deviation, and the
/// normal-approximation 95% confidence half-width `1.96·std/√n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AggregateResult {
    pub mean: f64,
    pub std: f64,
    pub ci95_half_width: f64,
    pub n: u32,
}

impl AggregateResult {
    pub fn from_samples(xs: &[f64]) -> Self {
        let std = sample_std(xs);
        Self {
            mean: mean(xs),
            std,
            ci95_half_width: if xs.is_empty() {
                0.0
            } else {
                1.96 * std / (xs.len() as f64).sqrt()
            },
            n: xs.len() as u32,
        }
    }
}

/// Two-sided Welch t-test result.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WelchTTest {
    pub t: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    pub p: f64,
}

/// Welch's unequal-variance t-test. Rejects samples with fewer than two
/// values or with zero variance on both sides.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::DegenerateTTest);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let va = sample_std(a).powi(2);
    let vb = sample_std(b).powi(2);
    if va == 0.0 && vb == 0.0 {
        return Err(Error::DegenerateTTest);
    }

    let sea = va / na;
    let seb = vb / nb;
    let t = (ma - mb) / (sea + seb).sqrt();
    let df = (sea + seb).powi(2) / (sea.powi(2) / (na - 1.0) + seb.powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid t-distribution");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(WelchTTest { t, df, p })
}

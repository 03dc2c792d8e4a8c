//! Moment statistics of sampled waveforms.
//!
//! Kurtosis here is the raw standardized fourth moment
//! `(sum (y_i - mean)^4 / N) / s^4` with the population standard deviation
//! (divisor `N`), so a Gaussian gives 3 and a balanced two-level signal
//! gives exactly 1. Classification is on the excess `kurtosis - 3`.

use std::fmt;

use serde::Serialize;

use crate::error::{invariant, Error, Result};

/// Half-width of the excess-kurtosis band classified as mesokurtic.
pub const MESOKURTIC_BAND: f64 = 0.5;

pub const DEFAULT_HISTOGRAM_BINS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KurtosisClass {
    Platykurtic,
    Mesokurtic,
    Leptokurtic,
}

impl KurtosisClass {
    pub fn from_excess(excess: f64) -> Self {
        if excess < -MESOKURTIC_BAND {
            KurtosisClass::Platykurtic
        } else if excess > MESOKURTIC_BAND {
            KurtosisClass::Leptokurtic
        } else {
            KurtosisClass::Mesokurtic
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            KurtosisClass::Platykurtic => "platykurtic",
            KurtosisClass::Mesokurtic => "mesokurtic",
            KurtosisClass::Leptokurtic => "leptokurtic",
        }
    }
}

impl fmt::Display for KurtosisClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KurtosisReport {
    pub kurtosis: f64,
    pub excess: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
    #[serde(rename = "class")]
    pub classification: KurtosisClass,
}

impl KurtosisReport {
    pub const CSV_HEADER: &'static str = "kurtosis,excess,mean,std,n,class";

    pub fn csv_record(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.kurtosis, self.excess, self.mean, self.std, self.n, self.classification
        )
    }
}

pub fn kurtosis(samples: &[f64]) -> Result<KurtosisReport> {
    let n = samples.len();
    if n < 4 {
        return Err(Error::TooShort {
            needed: 4,
            actual: n,
        });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &y in samples {
        let d = y - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m4 /= nf;
    // A constant sequence can leave rounding residue of a few ulps of the
    // mean; anything that small is treated as zero spread.
    let scale = samples.iter().fold(0.0f64, |a, y| a.max(y.abs()));
    let std = m2.sqrt();
    if !(std > 16.0 * f64::EPSILON * scale) {
        return Err(Error::ZeroVariance);
    }
    let kurtosis = m4 / (m2 * m2);
    let excess = kurtosis - 3.0;
    Ok(KurtosisReport {
        kurtosis,
        excess,
        mean,
        std,
        n,
        classification: KurtosisClass::from_excess(excess),
    })
}

/// Equal-width histogram over `[min, max]`, normalized to probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramPdf {
    pub bin_edges: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl HistogramPdf {
    /// Index of the most probable bin (first on ties).
    pub fn mode_bin(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = i;
            }
        }
        best
    }
}

pub fn histogram_pdf(samples: &[f64], n_bins: usize) -> Result<HistogramPdf> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if n_bins == 0 {
        return Err(invariant("n_bins", "must be >= 1"));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(invariant("samples", "must be finite"));
    }
    let n = samples.len() as f64;
    if hi == lo {
        return Ok(HistogramPdf {
            bin_edges: vec![lo, hi],
            probabilities: vec![1.0],
        });
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &s in samples {
        let k = (((s - lo) / width) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    let mut bin_edges: Vec<f64> = (0..n_bins).map(|k| lo + k as f64 * width).collect();
    bin_edges.push(hi);
    Ok(HistogramPdf {
        bin_edges,
        probabilities: counts.into_iter().map(|c| c as f64 / n).collect(),
    })
}

/// Fraction of positions at which the two bit sequences differ.
pub fn bit_error_rate(tx_bits: &[bool], rx_bits: &[bool]) -> Result<f64> {
    if tx_bits.len() != rx_bits.len() {
        return Err(Error::LengthMismatch {
            expected: tx_bits.len(),
            actual: rx_bits.len(),
        });
    }
    if tx_bits.is_empty() {
        return Err(Error::EmptyInput);
    }
    let errors = tx_bits.iter().zip(rx_bits).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / tx_bits.len() as f64)
}

/// Kurtosis of an equiprobable `+/- d` signal in independent Gaussian noise
/// of standard deviation `sigma`:
///
/// ```text
/// (d^4 + 6 d^2 sigma^2 + 3 sigma^4) / (d^2 + sigma^2)^2
/// ```
///
/// Equals 3 for `d = 0` and falls toward 1 as `d / sigma` grows.
pub fn bimodal_kurtosis_analytic(level_gap_half: f64, noise_std: f64) -> Result<f64> {
    let (d, s) = (level_gap_half.abs(), noise_std.abs());
    if d == 0.0 && s == 0.0 {
        return Err(invariant(
            "bimodal_kurtosis_analytic",
            "d and sigma are both zero",
        ));
    }
    let (d2, s2) = (d * d, s * s);
    Ok((d2 * d2 + 6.0 * d2 * s2 + 3.0 * s2 * s2) / ((d2 + s2) * (d2 + s2)))
}

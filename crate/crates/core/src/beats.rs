//! Frequency analysis of observable time series and beat identification.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::dynamics::BoundStateModel;
use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 256;
pub const DEFAULT_REL_THRESHOLD: f64 = 0.05;
/// Matches must lie within this many frequency bins of the prediction.
pub const MATCH_BINS: f64 = 2.0;
/// Spectra whose largest bin is below this fraction of Σ|x| carry no signal.
const NOISE_FLOOR: f64 = 1e-9;
/// Oscillation amplitudes (2|X_k|/n) below this are rounding noise; the
/// observables are probabilities of order one.
pub const AMPLITUDE_FLOOR: f64 = 1e-12;

/// One-sided magnitude spectrum of a mean-subtracted real series.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySpectrum {
    /// Angular frequencies 2πk/(n·dt), k = 0..=n/2.
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// Bin spacing 2π/T.
    pub resolution: f64,
    pub samples: usize,
    /// Σ|x| of the raw series, the largest magnitude any bin could reach.
    pub scale: f64,
}

impl FrequencySpectrum {
    /// Σ(x − x̄)² recovered from the one-sided spectrum.
    pub fn parseval_energy(&self) -> f64 {
        let n = self.samples;
        self.magnitudes
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let fold = if k == 0 || (n % 2 == 0 && k == n / 2) {
                    1.0
                } else {
                    2.0
                };
                fold * m * m
            })
            .sum::<f64>()
            / n as f64
    }
}

/// FFT magnitude spectrum of `series` sampled every `dt`; the mean is removed.
pub fn fft_spectrum(series: &[f64], dt: f64) -> Result<FrequencySpectrum> {
    let n = series.len();
    if n < MIN_SAMPLES {
        return Err(Error::Input(format!(
            "need at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Input(format!("invalid sampling interval {dt}")));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("series contains non-finite samples".into()));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = series.iter().map(|&x| Complex64::new(x - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let resolution = 2.0 * PI / (n as f64 * dt);
    let half = n / 2;
    Ok(FrequencySpectrum {
        frequencies: (0..=half).map(|k| k as f64 * resolution).collect(),
        magnitudes: buf[..=half].iter().map(|z| z.norm()).collect(),
        resolution,
        samples: n,
        scale: series.iter().map(|x| x.abs()).sum(),
    })
}

/// Like [`fft_spectrum`], but takes explicit sample times and checks that
/// they are uniformly spaced.
pub fn fft_spectrum_sampled(times: &[f64], series: &[f64]) -> Result<FrequencySpectrum> {
    if times.len() != series.len() {
        return Err(Error::Input("times and series differ in length".into()));
    }
    if times.len() < 2 {
        return Err(Error::Input("need at least two samples".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let tol = 1e-9 * dt.abs().max(f64::MIN_POSITIVE);
    if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > tol) {
        return Err(Error::Input("samples are not uniformly spaced".into()));
    }
    fft_spectrum(series, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BeatLabel {
    #[serde(rename = "delta_L")]
    Lower,
    #[serde(rename = "delta_U")]
    Upper,
    #[serde(rename = "delta_L+delta_U")]
    Sum,
}

impl BeatLabel {
    pub const ALL: [BeatLabel; 3] = [BeatLabel::Lower, BeatLabel::Upper, BeatLabel::Sum];

    pub fn name(self) -> &'static str {
        match self {
            BeatLabel::Lower => "delta_L",
            BeatLabel::Upper => "delta_U",
            BeatLabel::Sum => "delta_L+delta_U",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub frequency: f64,
    pub magnitude: f64,
    #[serde(skip)]
    pub bin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeatMatch {
    /// Index into [`PeakReport::peaks`].
    pub peak: usize,
    pub label: BeatLabel,
    /// Peak frequency minus the predicted beat frequency.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakRecord {
    pub frequency: f64,
    pub magnitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<BeatLabel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakReport {
    /// Sorted by magnitude, largest first.
    pub peaks: Vec<Peak>,
    pub matches: Vec<BeatMatch>,
    /// Peaks with no beat frequency within [`MATCH_BINS`] bins.
    pub unmatched: Vec<usize>,
    pub resolution: f64,
}

impl PeakReport {
    pub fn labels(&self) -> Vec<BeatLabel> {
        self.matches.iter().map(|m| m.label).collect()
    }

    pub fn has_label(&self, label: BeatLabel) -> bool {
        self.matches.iter().any(|m| m.label == label)
    }

    /// One record per peak, carrying its match when there is one.
    pub fn records(&self) -> Vec<PeakRecord> {
        self.peaks
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let m = self.matches.iter().find(|m| m.peak == i);
                PeakRecord {
                    frequency: p.frequency,
                    magnitude: p.magnitude,
                    label: m.map(|m| m.label),
                    deviation: m.map(|m| m.deviation),
                }
            })
            .collect()
    }
}

/// Local maxima above `rel_threshold` times the largest non-DC magnitude.
///
/// Plateaus resolve to their lowest-frequency bin.
pub fn detect_peaks(spectrum: &FrequencySpectrum, rel_threshold: f64) -> Result<PeakReport> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::Input(format!(
            "relative threshold must lie in (0, 1), got {rel_threshold}"
        )));
    }
    let m = &spectrum.magnitudes;
    let mut report = PeakReport {
        peaks: Vec::new(),
        matches: Vec::new(),
        unmatched: Vec::new(),
        resolution: spectrum.resolution,
    };
    if m.len() < 2 {
        return Ok(report);
    }
    let max = m[1..].iter().copied().fold(0.0, f64::max);
    let amplitude = 2.0 * max / spectrum.samples as f64;
    if max <= NOISE_FLOOR * spectrum.scale || amplitude < AMPLITUDE_FLOOR {
        return Ok(report);
    }
    let cut = rel_threshold * max;
    let last = m.len() - 1;
    for k in 1..=last {
        let rising = m[k] > m[k - 1];
        let not_falling_next = k == last || m[k] >= m[k + 1];
        if rising && not_falling_next && m[k] >= cut {
            report.peaks.push(Peak {
                frequency: spectrum.frequencies[k],
                magnitude: m[k],
                bin: k,
            });
        }
    }
    report.peaks.sort_by(|a, b| {
        b.magnitude
            .total_cmp(&a.magnitude)
            .then(a.frequency.total_cmp(&b.frequency))
    });
    Ok(report)
}

/// Assigns each peak to the nearest of δ_L, δ_U and δ_L + δ_U.
pub fn match_beats(report: &PeakReport, model: &BoundStateModel) -> PeakReport {
    match_frequencies(report, model.beat_frequencies())
}

/// [`match_beats`] with explicit predictions `[δ_L, δ_U, δ_L + δ_U]`.
pub fn match_frequencies(report: &PeakReport, predicted: [f64; 3]) -> PeakReport {
    let mut out = report.clone();
    out.matches.clear();
    out.unmatched.clear();
    let window = MATCH_BINS * report.resolution;
    for (i, p) in report.peaks.iter().enumerate() {
        let (label, deviation) = BeatLabel::ALL
            .iter()
            .zip(predicted)
            .map(|(&l, f)| (l, p.frequency - f))
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        if deviation.abs() <= window {
            out.matches.push(BeatMatch {
                peak: i,
                label,
                deviation,
            });
        } else {
            out.unmatched.push(i);
        }
    }
    out
}

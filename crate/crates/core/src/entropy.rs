//! Shannon entropy of images, datasets and activation maps, in nats.
//!
//! Probabilities are histogram frequencies over the 256 intensity levels of
//! 8-bit data; empty bins contribute nothing (`0 ln 0 = 0`). Spatial layout
//! never matters, only the intensity histogram does.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Image, ImageDataset};
use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

/// ln 256, the largest entropy an 8-bit histogram can have.
pub const MAX_ENTROPY_8BIT: f64 = 5.545_177_444_479_562;

/// How colour channels enter the histogram.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelMode {
    /// One 256-bin histogram over every channel value of the image.
    #[default]
    FlattenAll,
    /// Entropy of each channel's histogram, averaged over channels.
    PerChannelMean,
}

impl fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelMode::FlattenAll => "flatten-all",
            ChannelMode::PerChannelMean => "per-channel-mean",
        })
    }
}

impl FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flatten-all" => Ok(ChannelMode::FlattenAll),
            "per-channel-mean" => Ok(ChannelMode::PerChannelMean),
            other => Err(Error::Usage(format!(
                "unknown channel mode {other:?} (flatten-all | per-channel-mean)"
            ))),
        }
    }
}

/// Entropy in nats of a histogram with `total` observations.
pub fn histogram_entropy(counts: &[u64], total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum::<f64>();
    // A single occupied bin gives -1·ln 1 = -0.0.
    h.max(0.0)
}

fn histogram<'a>(values: impl Iterator<Item = &'a u8>) -> ([u64; 256], u64) {
    let mut counts = [0u64; 256];
    let mut total = 0;
    for &v in values {
        counts[v as usize] += 1;
        total += 1;
    }
    (counts, total)
}

pub fn image_entropy(img: &Image, mode: ChannelMode) -> Result<f64> {
    if img.pixels.is_empty() {
        return Err(Error::Domain("entropy of an empty image".into()));
    }
    Ok(match mode {
        ChannelMode::FlattenAll => {
            let (counts, total) = histogram(img.pixels.iter());
            histogram_entropy(&counts, total)
        }
        ChannelMode::PerChannelMean => {
            let sum: f64 = (0..img.channels)
                .map(|ch| {
                    let (counts, total) =
                        histogram(img.pixels.iter().skip(ch).step_by(img.channels));
                    histogram_entropy(&counts, total)
                })
                .sum();
            sum / img.channels as f64
        }
    })
}

/// Rounds half away from zero to two decimals.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub schema_version: u32,
    pub dataset: String,
    pub mode: ChannelMode,
    pub per_image: Vec<f64>,
    pub mean_nats: f64,
    pub mean_rounded: f64,
    /// Population standard deviation of `per_image`.
    pub std_nats: f64,
    pub per_class_mean: BTreeMap<usize, f64>,
    pub class_cv: f64,
}

/// Per-image entropies and their aggregates over a whole dataset.
///
/// Sums run in ascending image order so the result does not depend on how
/// per-image values were produced.
pub fn dataset_entropy(ds: &ImageDataset, mode: ChannelMode) -> Result<EntropyReport> {
    if ds.is_empty() {
        return Err(Error::Domain("entropy of an empty dataset".into()));
    }
    let per_image = ds
        .images
        .iter()
        .map(|im| image_entropy(im, mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(report_from_entropies(&ds.name, mode, per_image, &ds.labels))
}

pub(crate) fn report_from_entropies(
    name: &str,
    mode: ChannelMode,
    per_image: Vec<f64>,
    labels: &[usize],
) -> EntropyReport {
    let n = per_image.len() as f64;
    let mean = per_image.iter().sum::<f64>() / n;
    let var = per_image.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;

    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (&e, &label) in per_image.iter().zip(labels) {
        let slot = sums.entry(label).or_insert((0.0, 0));
        slot.0 += e;
        slot.1 += 1;
    }
    let per_class_mean: BTreeMap<usize, f64> = sums
        .into_iter()
        .map(|(k, (s, c))| (k, s / c as f64))
        .collect();
    let class_cv = coefficient_of_variation(per_class_mean.values().copied());

    EntropyReport {
        schema_version: SCHEMA_VERSION,
        dataset: name.to_owned(),
        mode,
        per_image,
        mean_nats: mean,
        mean_rounded: round2(mean),
        std_nats: var.sqrt(),
        per_class_mean,
        class_cv,
    }
}

/// Population coefficient of variation; 0 for fewer than two values or a
/// zero mean.
pub fn coefficient_of_variation(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean.abs()
}

pub const DEFAULT_CV_THRESHOLD: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSpread {
    pub cv: f64,
    pub warn: bool,
}

/// Flags datasets whose classes differ widely in mean entropy. Diagnostic
/// only: planning ignores it.
pub fn class_spread(report: &EntropyReport, cv_threshold: f64) -> ClassSpread {
    let cv = coefficient_of_variation(report.per_class_mean.values().copied());
    ClassSpread {
        cv,
        warn: cv > cv_threshold,
    }
}

pub const DEFAULT_ACTIVATION_BINS: usize = 256;

/// Entropy of a real-valued tensor after equal-width quantization into
/// `bins` buckets spanning `[min, max]`. A constant tensor has entropy 0.
pub fn activation_entropy(values: &[f64], bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::Domain(
            "activation entropy needs at least one bin".into(),
        ));
    }
    if values.is_empty() {
        return Err(Error::Domain(
            "activation entropy of an empty tensor".into(),
        ));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite activation {bad}")));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if lo == hi {
        return Ok(0.0);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Ok(histogram_entropy(&counts, values.len() as u64))
}

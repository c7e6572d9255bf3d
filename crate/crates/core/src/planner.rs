//! Entropy-bounded depth planning.
//!
//! The bound follows from the layer-wise entropy growth of a convolutional
//! stack: each hidden layer can add at most `ln` of the information it
//! receives, the final compressed representation cannot exceed
//! `2^E(X)` for a dataset of entropy `E(X)`, and so the total growth over the
//! whole depth is bounded by
//!
//! ```text
//! ΔE = ln(2^E(X)) = E(X) · ln 2
//! ```
//!
//! `ΔE` is real and positive; its ceiling is the number of repeated blocks
//! `N` handed to each architecture's depth formula.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EbcleEstimate {
    pub entropy_nats: f64,
    pub delta_e: f64,
    pub n_upper: u32,
    pub n_lower: u32,
}

pub fn ebcle(entropy_nats: f64) -> Result<EbcleEstimate> {
    if !entropy_nats.is_finite() || entropy_nats <= 0.0 {
        return Err(Error::Domain(format!(
            "dataset entropy must be positive and finite, got {entropy_nats}"
        )));
    }
    let delta_e = entropy_nats * LN_2;
    let n_upper = (delta_e.ceil() as u32).max(1);
    let n_lower = (delta_e.floor() as u32).max(1);
    Ok(EbcleEstimate {
        entropy_nats,
        delta_e,
        n_upper,
        n_lower,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    ResNet,
    DenseNet,
    ResNeXt,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::ResNet, Family::DenseNet, Family::ResNeXt];

    /// Depth of an `n_blocks` network: 6N+2, 3N+4 or 9N+2.
    pub fn depth_for(self, n_blocks: u32) -> u32 {
        match self {
            Family::ResNet => 6 * n_blocks + 2,
            Family::DenseNet => 3 * n_blocks + 4,
            Family::ResNeXt => 9 * n_blocks + 2,
        }
    }

    /// Shallowest depth the family's block structure allows.
    pub fn depth_lower_bound(self) -> u32 {
        match self {
            Family::ResNet => 8,
            Family::DenseNet => 7,
            Family::ResNeXt => 11,
        }
    }

    /// Inverse of [`Family::depth_for`], when `depth` is on the lattice.
    pub fn blocks_for(self, depth: u32) -> Option<u32> {
        let (step, offset) = match self {
            Family::ResNet => (6, 2),
            Family::DenseNet => (3, 4),
            Family::ResNeXt => (9, 2),
        };
        (depth > offset && (depth - offset).is_multiple_of(step)).then(|| (depth - offset) / step)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::ResNet => "ResNet",
            Family::DenseNet => "DenseNet",
            Family::ResNeXt => "ResNeXt",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "resnet" => Ok(Family::ResNet),
            "densenet" => Ok(Family::DenseNet),
            "resnext" => Ok(Family::ResNeXt),
            other => Err(Error::Usage(format!(
                "unknown architecture {other:?} (resnet | densenet | resnext)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchPlan {
    pub family: Family,
    pub n_blocks: u32,
    /// Layer count H′.
    pub depth: u32,
    /// First-layer kernel count χ′; unset until a breadth is chosen.
    pub breadth: Option<u32>,
    pub depth_lower_bound: u32,
    pub at_lower_bound: bool,
}

impl ArchPlan {
    pub fn with_breadth(mut self, breadth: u32) -> Self {
        self.breadth = Some(breadth);
        self
    }

    /// Plan for an explicit block count, clamped to the family's depth floor.
    pub fn for_blocks(family: Family, n_blocks: u32) -> Self {
        let n_blocks = n_blocks.max(1);
        let floor = family.depth_lower_bound();
        let depth = family.depth_for(n_blocks).max(floor);
        ArchPlan {
            family,
            n_blocks,
            depth,
            breadth: None,
            depth_lower_bound: floor,
            at_lower_bound: depth == floor,
        }
    }
}

/// Maps an estimate onto a family's depth formula. The upper bound is the
/// default; the lower bound risks premature feature growth.
pub fn plan_depth(family: Family, estimate: &EbcleEstimate, use_upper: bool) -> ArchPlan {
    let n = if use_upper {
        estimate.n_upper
    } else {
        estimate.n_lower
    };
    ArchPlan::for_blocks(family, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    /// Small grayscale data such as MNIST.
    Simple,
    /// 32×32 natural images (CIFAR, downsampled ImageNet treated separately).
    #[serde(rename = "natural-32")]
    Natural32,
    /// Large natural-image collections such as ImageNet32.
    NaturalLarge,
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(DatasetKind::Simple),
            "natural-32" => Ok(DatasetKind::Natural32),
            "natural-large" => Ok(DatasetKind::NaturalLarge),
            other => Err(Error::Usage(format!(
                "unknown dataset kind {other:?} (simple | natural-32 | natural-large)"
            ))),
        }
    }
}

/// Breadth used for the shallow configurations in published comparisons.
/// There is no scaling law behind these; callers may override them.
pub fn default_breadth(family: Family, kind: DatasetKind) -> u32 {
    match (family, kind) {
        (Family::ResNet, _) => 24,
        (Family::DenseNet, DatasetKind::NaturalLarge) => 40,
        (Family::DenseNet, _) => 20,
        (Family::ResNeXt, _) => 16,
    }
}

fn check_bound_inputs(delta: f64, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("sample count must be at least 1".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!(
            "confidence δ must lie in (0, 1], got {delta}"
        )));
    }
    Ok(())
}

/// Largest generalization gap ε allowed by the input compression bound
/// `ε² < (2^I(T;X) + ln 1/δ) / 2n`.
pub fn compression_bound_epsilon(i_tx: f64, delta: f64, n: u64) -> Result<f64> {
    compression_bound_epsilon_base(i_tx, delta, n, std::f64::consts::E)
}

/// As [`compression_bound_epsilon`] with `log_base` for the `log 1/δ` term.
pub fn compression_bound_epsilon_base(i_tx: f64, delta: f64, n: u64, log_base: f64) -> Result<f64> {
    check_bound_inputs(delta, n)?;
    if i_tx.is_nan() || i_tx < 0.0 {
        return Err(Error::Domain(format!(
            "I(T;X) must be non-negative, got {i_tx}"
        )));
    }
    if !(log_base > 0.0 && log_base != 1.0) {
        return Err(Error::Domain(format!("invalid logarithm base {log_base}")));
    }
    let conf = (1.0 / delta).ln() / log_base.ln();
    Ok(((i_tx.exp2() + conf) / (2.0 * n as f64)).sqrt())
}

/// Classic hypothesis-count bound `ε² < (log|H| + ln 1/δ) / 2n`.
pub fn classic_bound(log_h: f64, delta: f64, n: u64) -> Result<f64> {
    check_bound_inputs(delta, n)?;
    if log_h.is_nan() || log_h < 0.0 {
        return Err(Error::Domain(format!(
            "log|H| must be non-negative, got {log_h}"
        )));
    }
    Ok(((log_h + (1.0 / delta).ln()) / (2.0 * n as f64)).sqrt())
}

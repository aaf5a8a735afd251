//! Dimensional coactivation (DCA) fingerprints over frozen vision-backbone
//! patch tokens.
//!
//! The crate measures whether semantic face regions of one frame coactivate
//! along the same feature dimensions of a frozen backbone, and validates the
//! measurement with a linear probe and video-level ROC-AUC:
//!
//! 1. [`container`] reads `DCAF` files of raw patch tokens plus region labels.
//! 2. [`normalize`] fits per-dimension token statistics on the training split
//!    and applies them unchanged to every split.
//! 3. [`regions`] samples `K` tokens per region with stream-keyed determinism.
//! 4. [`coactivation`] turns region samples into pair vectors and fingerprints
//!    (DCA and every comparison variant).
//! 5. [`probe`] trains the logistic-regression probe.
//! 6. [`eval`] pools frame scores per video and reports AUC with a bootstrap CI.
//!
//! [`pipeline`] wires the stages together, [`synth`] generates desk-scale
//! datasets with a known answer, and [`cli`] backs the `dca` binary.
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub(crate) mod binio;
pub mod cli;
pub mod coactivation;
pub mod container;
pub mod eval;
pub mod manifest;
pub mod normalize;
pub mod pipeline;
pub mod probe;
pub mod regions;
pub mod synth;

use std::fmt;
use std::str::FromStr;

pub use binio::FormatError;
pub use coactivation::{Fingerprint, FingerprintSet, VariantId};
pub use container::{ContainerHeader, RegionCode, TokenGrid};
pub use eval::{EvalReport, VideoScore};
pub use normalize::{NormStats, ScalerStats};
pub use pipeline::PipelineError;
pub use probe::{ProbeConfig, ProbeModel};
pub use regions::{RegionSample, RegionSet, SamplingPolicy};

/// Ground truth of a video or frame. Fake is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Real,
    Fake,
    Unlabeled,
}

impl Label {
    pub fn code(self) -> u8 {
        match self {
            Label::Real => 0,
            Label::Fake => 1,
            Label::Unlabeled => 255,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Label::Real),
            1 => Some(Label::Fake),
            255 => Some(Label::Unlabeled),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::Fake => "fake",
            Label::Unlabeled => "-",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "0" | "real" => Ok(Label::Real),
            "1" | "fake" => Ok(Label::Fake),
            "255" | "-" | "unlabeled" => Ok(Label::Unlabeled),
            other => Err(format!("invalid label {other:?}")),
        }
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of the CNN (penultimate AlexNet layer) block.
pub const CNN_DIM: usize = 4096;
/// Number of adjective-noun pairs in the semantic bank.
pub const ANP_DIM: usize = 2089;
/// Width of the fused classifier input.
pub const FUSED_DIM: usize = CNN_DIM + ANP_DIM;

/// Ternary sentiment value of an image or event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Positive,
    Neutral,
    Negative,
}

impl SentimentLabel {
    /// Canonical class order used for weight vectors, vote counts and confusion matrices.
    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::Positive,
        SentimentLabel::Neutral,
        SentimentLabel::Negative,
    ];

    pub fn code(self) -> i8 {
        match self {
            SentimentLabel::Positive => 1,
            SentimentLabel::Neutral => 0,
            SentimentLabel::Negative => -1,
        }
    }

    pub fn from_code(code: i8) -> Option<Self> {
        match code {
            1 => Some(SentimentLabel::Positive),
            0 => Some(SentimentLabel::Neutral),
            -1 => Some(SentimentLabel::Negative),
            _ => None,
        }
    }

    /// Position in [`SentimentLabel::ALL`].
    pub fn index(self) -> usize {
        match self {
            SentimentLabel::Positive => 0,
            SentimentLabel::Neutral => 1,
            SentimentLabel::Negative => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Tie-break rank, higher wins: Neutral > Positive > Negative.
    pub(crate) fn tie_priority(self) -> u8 {
        match self {
            SentimentLabel::Neutral => 2,
            SentimentLabel::Positive => 1,
            SentimentLabel::Negative => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SentimentLabel::Positive => "positive",
            SentimentLabel::Neutral => "neutral",
            SentimentLabel::Negative => "negative",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Widths of the two raw feature blocks. The full layout is 4096 + 2089;
/// reduced layouts exist for synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub cnn: usize,
    pub anp: usize,
}

impl FeatureLayout {
    pub const FULL: FeatureLayout = FeatureLayout {
        cnn: CNN_DIM,
        anp: ANP_DIM,
    };

    pub fn fused(&self) -> usize {
        self.cnn + self.anp
    }

    pub fn validate(&self) -> Result<()> {
        if self.cnn == 0 || self.anp == 0 {
            return Err(Error::InvalidParameter(format!(
                "feature dims must be positive, got cnn={} anp={}",
                self.cnn, self.anp
            )));
        }
        Ok(())
    }
}

impl Default for FeatureLayout {
    fn default() -> Self {
        Self::FULL
    }
}

/// One timestamped photostream frame with its two raw feature blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub image_id: String,
    /// Seconds since stream start.
    pub timestamp: u64,
    pub cnn_features: Vec<f64>,
    pub anp_likelihoods: Vec<f64>,
}

impl ImageRecord {
    pub fn validate(&self, layout: FeatureLayout) -> Result<()> {
        if self.cnn_features.len() != layout.cnn {
            return Err(Error::DimMismatch {
                expected: layout.cnn,
                found: self.cnn_features.len(),
            });
        }
        if self.anp_likelihoods.len() != layout.anp {
            return Err(Error::DimMismatch {
                expected: layout.anp,
                found: self.anp_likelihoods.len(),
            });
        }
        if let Some(i) = self.cnn_features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        for (index, &value) in self.anp_likelihoods.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::LikelihoodOutOfRange { index, value });
            }
        }
        Ok(())
    }
}

/// Contiguous run of images sharing one sentiment label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub event_id: String,
    pub stream_id: String,
    pub image_ids: Vec<String>,
    /// Ground truth; `None` for unlabeled data.
    pub label: Option<SentimentLabel>,
}

impl Event {
    /// Number of images in the event.
    pub fn len(&self) -> usize {
        self.image_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image_ids.is_empty()
    }
}

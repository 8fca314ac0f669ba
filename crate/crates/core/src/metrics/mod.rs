//! Evaluation metrics: detection, co-reference (B-Cubed and exact match),
//! grounding, Precision@k, Pearson correlation, annotator agreement and
//! dataset statistics.
//!
//! Every precision/recall is kept as a [`Ratio`] of summed counts so corpus
//! aggregation is a plain fold. A ratio with zero denominator is *absent*,
//! never zero.

mod agreement;
mod coref;
mod correlation;
mod detection;
mod grounding;
mod matching;
mod ranking;
mod stats;

pub use agreement::{agreement_report, AgreementReport};
pub(crate) use agreement::{ranked_characters, text_chain_items, visual_chain_items};
pub use coref::{b_cubed, exact_match};
pub use correlation::pearson;
pub use detection::detection_pr;
pub use grounding::{grounding_pr, map_text_chains, map_visual_chains};
pub use matching::{iou, match_items, Item, MentionMatcher};
pub use ranking::{gold_ranking, precision_at_k, CharacterKey, RankedCharacter};
pub use stats::{dataset_stats, DatasetStats};

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: f64,
    pub den: f64,
}

impl Ratio {
    pub fn new(num: f64, den: f64) -> Self {
        Ratio { num, den }
    }

    pub fn value(&self) -> Option<f64> {
        (self.den > 0.0).then(|| self.num / self.den)
    }
}

impl AddAssign for Ratio {
    fn add_assign(&mut self, rhs: Ratio) {
        self.num += rhs.num;
        self.den += rhs.den;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: Ratio,
    pub recall: Ratio,
}

impl PrecisionRecall {
    pub fn precision(&self) -> Option<f64> {
        self.precision.value()
    }

    pub fn recall(&self) -> Option<f64> {
        self.recall.value()
    }
}

impl AddAssign for PrecisionRecall {
    fn add_assign(&mut self, rhs: PrecisionRecall) {
        self.precision += rhs.precision;
        self.recall += rhs.recall;
    }
}

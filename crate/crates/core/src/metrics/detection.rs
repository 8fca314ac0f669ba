use super::{match_items, Item, MentionMatcher, PrecisionRecall, Ratio};

/// Detection precision and recall: correct predictions over predictions,
/// matched gold items over gold items.
pub fn detection_pr(pred: &[Item], gold: &[Item], matcher: MentionMatcher) -> PrecisionRecall {
    let correct = match_items(pred, gold, matcher)
        .iter()
        .filter(|m| m.is_some())
        .count() as f64;
    PrecisionRecall {
        precision: Ratio::new(correct, pred.len() as f64),
        recall: Ratio::new(correct, gold.len() as f64),
    }
}

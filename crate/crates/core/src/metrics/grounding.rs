use std::collections::{HashMap, HashSet};

use super::{match_items, Item, MentionMatcher, PrecisionRecall, Ratio};

/// Maps predicted text chains to gold text chains with the same head word
/// (the head of the first mention). Each gold chain is taken at most once,
/// in predicted-chain order.
pub fn map_text_chains(pred_heads: &[Option<String>], gold_heads: &[Option<String>]) -> Vec<Option<usize>> {
    let mut taken = vec![false; gold_heads.len()];
    pred_heads
        .iter()
        .map(|head| {
            let head = head.as_ref()?;
            let g = gold_heads
                .iter()
                .enumerate()
                .position(|(g, gh)| !taken[g] && gh.as_ref() == Some(head))?;
            taken[g] = true;
            Some(g)
        })
        .collect()
}

/// Maps each predicted visual chain to the gold visual chain holding the
/// strict majority of its identified faces (face inside body box). Ties and
/// chains with no identified face stay unmapped.
pub fn map_visual_chains(pred: &[Vec<Item>], gold: &[Vec<Item>]) -> Vec<Option<usize>> {
    let mut pred_items = Vec::new();
    let mut pred_owner = Vec::new();
    for (c, chain) in pred.iter().enumerate() {
        pred_items.extend(chain.iter().cloned());
        pred_owner.extend(std::iter::repeat_n(c, chain.len()));
    }
    let mut gold_items = Vec::new();
    let mut gold_owner = Vec::new();
    for (c, chain) in gold.iter().enumerate() {
        gold_items.extend(chain.iter().cloned());
        gold_owner.extend(std::iter::repeat_n(c, chain.len()));
    }
    let mut votes: Vec<HashMap<usize, usize>> = vec![HashMap::new(); pred.len()];
    let links = match_items(&pred_items, &gold_items, MentionMatcher::VisualFaceInBody);
    for (p, g) in links.into_iter().enumerate() {
        if let Some(g) = g {
            *votes[pred_owner[p]].entry(gold_owner[g]).or_insert(0) += 1;
        }
    }
    votes
        .into_iter()
        .map(|v| {
            let max = *v.values().max()?;
            let mut winners = v.iter().filter(|(_, &n)| n == max);
            let (&g, _) = winners.next()?;
            winners.next().is_none().then_some(g)
        })
        .collect()
}

/// Grounding precision and recall. A predicted (text, visual) pair is correct
/// when both sides map to gold chains that the gold alignment pairs.
pub fn grounding_pr(
    pred_pairs: &[(usize, usize)],
    text_map: &[Option<usize>],
    visual_map: &[Option<usize>],
    gold_pairs: &[(usize, usize)],
) -> PrecisionRecall {
    let gold: HashSet<(usize, usize)> = gold_pairs.iter().copied().collect();
    let mut recovered = HashSet::new();
    let mut correct = 0usize;
    for &(t, v) in pred_pairs {
        let mapped = text_map
            .get(t)
            .copied()
            .flatten()
            .zip(visual_map.get(v).copied().flatten());
        if let Some(pair) = mapped {
            if gold.contains(&pair) {
                correct += 1;
                recovered.insert(pair);
            }
        }
    }
    PrecisionRecall {
        precision: Ratio::new(correct as f64, pred_pairs.len() as f64),
        recall: Ratio::new(recovered.len() as f64, gold.len() as f64),
    }
}

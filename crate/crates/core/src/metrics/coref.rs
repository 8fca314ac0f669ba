//! Chain-level co-reference scores over matched mentions.
//!
//! Predicted and gold mentions are first identified with [`match_items`];
//! unmatched predicted mentions are spurious and unmatched gold mentions are
//! missed. Both scores then read off the contingency table `n[i][j]` of
//! identified mentions between predicted chain `i` and gold chain `j`.

use std::collections::HashMap;

use super::{match_items, Item, MentionMatcher, PrecisionRecall, Ratio};

struct Contingency {
    pred_sizes: Vec<usize>,
    gold_sizes: Vec<usize>,
    /// (pred chain, gold chain) -> number of identified mentions
    cells: HashMap<(usize, usize), usize>,
}

fn contingency(pred: &[Vec<Item>], gold: &[Vec<Item>], matcher: MentionMatcher) -> Contingency {
    let flat = |chains: &[Vec<Item>]| -> (Vec<Item>, Vec<usize>) {
        let mut items = Vec::new();
        let mut owner = Vec::new();
        for (c, chain) in chains.iter().enumerate() {
            items.extend(chain.iter().cloned());
            owner.extend(std::iter::repeat_n(c, chain.len()));
        }
        (items, owner)
    };
    let (pred_items, pred_owner) = flat(pred);
    let (gold_items, gold_owner) = flat(gold);
    let mut cells = HashMap::new();
    for (p, g) in match_items(&pred_items, &gold_items, matcher)
        .into_iter()
        .enumerate()
    {
        if let Some(g) = g {
            *cells.entry((pred_owner[p], gold_owner[g])).or_insert(0) += 1;
        }
    }
    Contingency {
        pred_sizes: pred.iter().map(Vec::len).collect(),
        gold_sizes: gold.iter().map(Vec::len).collect(),
        cells,
    }
}

/// B-Cubed precision and recall, including spurious and missed mentions.
pub fn b_cubed(pred: &[Vec<Item>], gold: &[Vec<Item>], matcher: MentionMatcher) -> PrecisionRecall {
    let t = contingency(pred, gold, matcher);
    // sum over mentions m in P_i ∩ G_j of n_ij/|P_i| is n_ij²/|P_i|
    let mut p_num = 0.0;
    let mut r_num = 0.0;
    for (&(i, j), &n) in &t.cells {
        let n2 = (n * n) as f64;
        p_num += n2 / t.pred_sizes[i] as f64;
        r_num += n2 / t.gold_sizes[j] as f64;
    }
    PrecisionRecall {
        precision: Ratio::new(p_num, t.pred_sizes.iter().sum::<usize>() as f64),
        recall: Ratio::new(r_num, t.gold_sizes.iter().sum::<usize>() as f64),
    }
}

/// Exact match: a predicted chain counts when its mentions identify exactly
/// the mentions of one gold chain.
pub fn exact_match(pred: &[Vec<Item>], gold: &[Vec<Item>], matcher: MentionMatcher) -> PrecisionRecall {
    let t = contingency(pred, gold, matcher);
    let mut exact_pred = 0usize;
    let mut covered_gold = vec![false; gold.len()];
    for (&(i, j), &n) in &t.cells {
        if n == t.pred_sizes[i] && n == t.gold_sizes[j] {
            exact_pred += 1;
            covered_gold[j] = true;
        }
    }
    PrecisionRecall {
        precision: Ratio::new(exact_pred as f64, pred.len() as f64),
        recall: Ratio::new(
            covered_gold.iter().filter(|c| **c).count() as f64,
            gold.len() as f64,
        ),
    }
}

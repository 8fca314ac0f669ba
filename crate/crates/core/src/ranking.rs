//! Count-based character importance.

use crate::error::{Error, Result};
use crate::grounding::sort_characters;
use crate::model::{MultiModalChain, TextChain, VisualChain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Text,
    Image,
    Multi,
}

/// Importance of a character: mentions plus faces, absent sides count 0.
pub fn importance_score(chain: &MultiModalChain) -> usize {
    chain.text.as_ref().map_or(0, TextChain::len) + chain.visual.as_ref().map_or(0, VisualChain::len)
}

/// Chain ids by descending importance, ties broken by first occurrence.
pub fn rank_characters(chains: &[MultiModalChain]) -> Vec<String> {
    let mut sorted: Vec<MultiModalChain> = chains
        .iter()
        .cloned()
        .map(|mut c| {
            c.importance = importance_score(&c);
            c
        })
        .collect();
    sort_characters(&mut sorted);
    sorted.into_iter().map(|c| c.chain_id).collect()
}

pub fn protagonist(chains: &[MultiModalChain]) -> Result<String> {
    rank_characters(chains)
        .into_iter()
        .next()
        .ok_or_else(|| Error::parameter("no characters to rank"))
}

/// Characters for single-modality ranking: one uni-modal character per chain
/// of the chosen modality. `Multi` uses the grounded characters as given.
pub fn characters_for(
    modality: Modality,
    text_chains: &[TextChain],
    visual_chains: &[VisualChain],
    grounded: &[MultiModalChain],
) -> Vec<MultiModalChain> {
    match modality {
        Modality::Text => text_chains
            .iter()
            .cloned()
            .map(MultiModalChain::from_text)
            .collect(),
        Modality::Image => visual_chains
            .iter()
            .cloned()
            .map(MultiModalChain::from_visual)
            .collect(),
        Modality::Multi => grounded.to_vec(),
    }
}

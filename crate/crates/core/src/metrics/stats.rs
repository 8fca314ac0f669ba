use serde::{Deserialize, Serialize};

use crate::model::{AnnotatedStory, TextChain, VisualChain};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub stories: usize,
    pub characters: usize,
    pub plural_group_characters: usize,
    pub bounding_boxes: usize,
    pub mean_boxes_per_story: Option<f64>,
    pub mean_characters_per_story: Option<f64>,
    pub mean_text_chain_length: Option<f64>,
    pub mean_visual_chain_length: Option<f64>,
}

fn mean(total: usize, count: usize) -> Option<f64> {
    (count > 0).then(|| total as f64 / count as f64)
}

/// Corpus statistics over gold annotations. Stories without a gold block
/// count as stories with no characters.
pub fn dataset_stats(corpus: &[AnnotatedStory]) -> DatasetStats {
    let mut s = DatasetStats {
        stories: corpus.len(),
        ..Default::default()
    };
    let (mut mentions, mut text_chains, mut visual_chains) = (0, 0, 0);
    for gold in corpus.iter().filter_map(|st| st.gold.as_ref()) {
        let characters = gold.characters();
        s.characters += characters.len();
        s.plural_group_characters += characters.iter().filter(|c| c.is_plural_or_group()).count();
        s.bounding_boxes += gold.visual_chains.iter().map(VisualChain::len).sum::<usize>();
        mentions += gold.text_chains.iter().map(TextChain::len).sum::<usize>();
        text_chains += gold.text_chains.len();
        visual_chains += gold.visual_chains.len();
    }
    s.mean_boxes_per_story = mean(s.bounding_boxes, s.stories);
    s.mean_characters_per_story = mean(s.characters, s.stories);
    s.mean_text_chain_length = mean(mentions, text_chains);
    s.mean_visual_chain_length = mean(s.bounding_boxes, visual_chains);
    s
}

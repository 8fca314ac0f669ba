use crate::error::{Error, Result};
use crate::model::{AnnotatedStory, BoundingBox, FirstOccurrence, MultiModalChain};

/// Identity of a character for ranking evaluation: the head word of its
/// first textual mention, or for visual-only characters the first face.
#[derive(Debug, Clone, PartialEq)]
pub enum CharacterKey {
    Head(String),
    Visual { image: usize, bbox: BoundingBox },
}

impl CharacterKey {
    pub fn of(chain: &MultiModalChain, story: &AnnotatedStory) -> Option<CharacterKey> {
        if let Some(m) = chain.text.as_ref().and_then(|t| t.mentions.first()) {
            return Some(CharacterKey::Head(story.mention_head(m)));
        }
        chain
            .visual
            .as_ref()
            .and_then(|v| v.faces.first())
            .map(|f| CharacterKey::Visual {
                image: f.image_index,
                bbox: f.bbox,
            })
    }

    fn matches(&self, gold: &CharacterKey) -> bool {
        match (self, gold) {
            (CharacterKey::Head(a), CharacterKey::Head(b)) => a == b,
            (CharacterKey::Visual { image: i1, bbox: b1 }, CharacterKey::Visual { image: i2, bbox: b2 }) => {
                i1 == i2 && b1.is_inside(b2)
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedCharacter {
    pub key: Option<CharacterKey>,
    /// Gold importance; unrated characters rank after every rated one.
    pub stars: Option<u8>,
    pub first: FirstOccurrence,
}

/// Gold order: stars descending, ties by first occurrence.
pub fn gold_ranking(gold: &[RankedCharacter]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gold.len()).collect();
    order.sort_by(|&a, &b| {
        gold[b]
            .stars
            .cmp(&gold[a].stars)
            .then(gold[a].first.cmp(&gold[b].first))
            .then(a.cmp(&b))
    });
    order
}

/// Fraction of the top-k predicted characters that match a distinct
/// character in the gold top-k. `k` is clipped to the number of gold
/// characters; absent when there are none.
pub fn precision_at_k(
    predicted: &[Option<CharacterKey>],
    gold: &[RankedCharacter],
    k: usize,
) -> Result<Option<f64>> {
    if k == 0 {
        return Err(Error::parameter("k must be at least 1"));
    }
    let k = k.min(gold.len());
    if k == 0 {
        return Ok(None);
    }
    let top: Vec<usize> = gold_ranking(gold).into_iter().take(k).collect();
    let mut taken = vec![false; top.len()];
    let mut hits = 0usize;
    for key in predicted.iter().take(k) {
        let Some(key) = key else { continue };
        let found = top
            .iter()
            .enumerate()
            .position(|(slot, &g)| !taken[slot] && gold[g].key.as_ref().is_some_and(|gk| key.matches(gk)));
        if let Some(slot) = found {
            taken[slot] = true;
            hits += 1;
        }
    }
    Ok(Some(hits as f64 / k as f64))
}

//! Agreement between two annotations of the same stories, with the first
//! annotation as reference.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{
    b_cubed, detection_pr, exact_match, gold_ranking, iou, CharacterKey, Item, MentionMatcher,
    PrecisionRecall, RankedCharacter, Ratio,
};
use crate::error::{Error, Result};
use crate::model::{AnnotatedStory, GoldAnnotation};

/// IoU a box must exceed to agree with the reference box.
pub const BOX_AGREEMENT_IOU: f64 = 0.6;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub detection: PrecisionRecall,
    pub b_cubed: PrecisionRecall,
    pub exact_match: PrecisionRecall,
    pub bounding_boxes: PrecisionRecall,
    /// Stories whose top-rated character agrees, over stories rated by both.
    pub importance_recall: Ratio,
}

pub(crate) fn text_chain_items(story: &AnnotatedStory, gold: &GoldAnnotation) -> Vec<Vec<Item>> {
    gold.text_chains
        .iter()
        .map(|c| {
            c.mentions
                .iter()
                .map(|m| Item::word(m.sentence_index, m.token_start, story.mention_head(m)))
                .collect()
        })
        .collect()
}

pub(crate) fn visual_chain_items(gold: &GoldAnnotation) -> Vec<Vec<Item>> {
    gold.visual_chains
        .iter()
        .map(|c| {
            c.faces
                .iter()
                .map(|f| Item::region(f.image_index, f.bbox))
                .collect()
        })
        .collect()
}

pub(crate) fn ranked_characters(story: &AnnotatedStory, gold: &GoldAnnotation) -> Vec<RankedCharacter> {
    gold.characters()
        .iter()
        .map(|c| {
            let chain = c.to_multimodal();
            RankedCharacter {
                key: CharacterKey::of(&chain, story),
                stars: c.stars,
                first: chain.first_occurrence(),
            }
        })
        .collect()
}

fn top_agrees(reference: &RankedCharacter, other: &RankedCharacter) -> bool {
    match (&reference.key, &other.key) {
        (Some(CharacterKey::Head(a)), Some(CharacterKey::Head(b))) => a == b,
        (
            Some(CharacterKey::Visual { image: i1, bbox: b1 }),
            Some(CharacterKey::Visual { image: i2, bbox: b2 }),
        ) => i1 == i2 && iou(b1, b2) > BOX_AGREEMENT_IOU,
        _ => false,
    }
}

fn flatten(chains: Vec<Vec<Item>>) -> Vec<Item> {
    chains.into_iter().flatten().collect()
}

/// Scores annotation `b` against reference annotation `a`, story by story.
pub fn agreement_report(a: &[AnnotatedStory], b: &[AnnotatedStory]) -> Result<AgreementReport> {
    let reference: HashMap<&str, &AnnotatedStory> = a.iter().map(|s| (s.story_id.as_str(), s)).collect();
    if reference.len() != b.len() || b.iter().any(|s| !reference.contains_key(s.story_id.as_str())) {
        return Err(Error::data("story-id mismatch between the two annotations"));
    }
    let gold_of = |s: &AnnotatedStory| -> Result<GoldAnnotation> {
        s.gold
            .clone()
            .ok_or_else(|| Error::data(format!("story {} has no annotation", s.story_id)))
    };
    let mut report = AgreementReport::default();
    for other in b {
        let refs = reference[other.story_id.as_str()];
        let (ga, gb) = (gold_of(refs)?, gold_of(other)?);
        let (ta, tb) = (text_chain_items(refs, &ga), text_chain_items(other, &gb));
        report.detection += detection_pr(
            &flatten(tb.clone()),
            &flatten(ta.clone()),
            MentionMatcher::TextHeadWord,
        );
        report.b_cubed += b_cubed(&tb, &ta, MentionMatcher::TextHeadWord);
        report.exact_match += exact_match(&tb, &ta, MentionMatcher::TextHeadWord);
        report.bounding_boxes += detection_pr(
            &flatten(visual_chain_items(&gb)),
            &flatten(visual_chain_items(&ga)),
            MentionMatcher::BoxIoU(BOX_AGREEMENT_IOU),
        );
        let (ra, rb) = (ranked_characters(refs, &ga), ranked_characters(other, &gb));
        if let (Some(&top_a), Some(&top_b)) = (gold_ranking(&ra).first(), gold_ranking(&rb).first()) {
            let agree = top_agrees(&ra[top_a], &rb[top_b]);
            report.importance_recall += Ratio::new(agree as u8 as f64, 1.0);
        }
    }
    Ok(report)
}

//! End-to-end processing of stories: text characters, visual characters,
//! grounding, ranking.

use std::collections::HashMap;

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grounding::{align, assemble_multimodal, Alignment, GroundingConfig};
use crate::metrics::gold_ranking;
use crate::model::{AnnotatedStory, MultiModalChain, TextChain, VisualChain};
use crate::ranking::{characters_for, rank_characters, Modality};
use crate::textchars::{
    detect_mentions, heuristic_coref, ingest_external_coref, CharacterLexicon, ExternalCoref,
};
use crate::visualchars::{cluster_faces, ClusteringConfig};

/// Everything predicted for one story. Stages fill the fields they produce;
/// absent fields were not computed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StoryPrediction {
    pub story_id: String,
    pub text_chains: Option<Vec<TextChain>>,
    pub visual_chains: Option<Vec<VisualChain>>,
    pub alignment: Option<Alignment>,
    pub characters: Option<Vec<MultiModalChain>>,
    /// Character ids, most important first.
    pub ranking: Option<Vec<String>>,
}

impl StoryPrediction {
    pub fn new(story_id: impl Into<String>) -> Self {
        StoryPrediction {
            story_id: story_id.into(),
            ..Default::default()
        }
    }

    /// Characters in ranked order. Falls back to importance order when no
    /// ranking is stored, and to text-only characters when no grounded
    /// characters are stored.
    pub fn ranked_characters(&self) -> Result<Vec<MultiModalChain>> {
        let characters = match (&self.characters, &self.text_chains) {
            (Some(c), _) => c.clone(),
            (None, Some(t)) => characters_for(Modality::Text, t, &[], &[]),
            (None, None) => return Ok(Vec::new()),
        };
        let order = match &self.ranking {
            Some(r) => r.clone(),
            None => rank_characters(&characters),
        };
        let by_id: HashMap<&str, &MultiModalChain> =
            characters.iter().map(|c| (c.chain_id.as_str(), c)).collect();
        order
            .iter()
            .map(|id| {
                by_id.get(id.as_str()).map(|c| (*c).clone()).ok_or_else(|| {
                    Error::data(format!(
                        "ranking of story {} names unknown character {id}",
                        self.story_id
                    ))
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineConfig {
    pub clustering: ClusteringConfig,
    pub grounding: GroundingConfig,
    /// Parallelism across stories; clustering has its own policy.
    pub execution: Execution,
}

/// One story with its optional side inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct StoryInput {
    pub story: AnnotatedStory,
    pub embeddings: Option<EmbeddingTable>,
    pub coref: Option<ExternalCoref>,
}

pub fn text_stage(
    story: &AnnotatedStory,
    lexicon: &CharacterLexicon,
    coref: Option<&ExternalCoref>,
) -> Result<Vec<TextChain>> {
    match coref {
        Some(external) => ingest_external_coref(story, external, lexicon),
        None => Ok(heuristic_coref(&detect_mentions(story, lexicon))),
    }
}

/// Clusters the faces of an embedding table; no table means no faces.
pub fn visual_stage(embeddings: Option<&EmbeddingTable>, cfg: &ClusteringConfig) -> Result<Vec<VisualChain>> {
    match embeddings {
        Some(table) => cluster_faces(&table.faces, cfg),
        None => {
            cfg.validate()?;
            Ok(Vec::new())
        }
    }
}

/// Grounds chains and assembles multimodal characters.
pub fn ground_stage(
    slots: usize,
    text: &[TextChain],
    visual: &[VisualChain],
    embeddings: Option<&EmbeddingTable>,
    cfg: &GroundingConfig,
) -> Result<(Alignment, Vec<MultiModalChain>)> {
    let alignment = align(text, visual, slots, embeddings, cfg)?;
    let characters = assemble_multimodal(text, visual, &alignment)?;
    Ok((alignment, characters))
}

/// Replaces the characters of a prediction by those of `modality` and
/// ranks them.
pub fn rank_stage(prediction: &mut StoryPrediction, modality: Modality) -> Result<()> {
    let text = prediction.text_chains.clone().unwrap_or_default();
    let visual = prediction.visual_chains.clone().unwrap_or_default();
    let grounded = match (modality, &prediction.characters) {
        (Modality::Multi, Some(c)) => c.clone(),
        (Modality::Multi, None) => {
            return Err(Error::data(format!(
                "story {}: multimodal ranking needs grounded characters",
                prediction.story_id
            )))
        }
        _ => Vec::new(),
    };
    let characters = characters_for(modality, &text, &visual, &grounded);
    prediction.ranking = Some(rank_characters(&characters));
    prediction.characters = Some(characters);
    Ok(())
}

fn check_story_id(story: &AnnotatedStory, table: Option<&EmbeddingTable>) -> Result<()> {
    match table.and_then(|t| t.story_id.as_deref()) {
        Some(id) if id != story.story_id => Err(Error::data(format!(
            "embedding file belongs to story {id}, not {}",
            story.story_id
        ))),
        _ => Ok(()),
    }
}

/// Runs every stage on one story.
pub fn run_story(
    input: &StoryInput,
    lexicon: &CharacterLexicon,
    cfg: &PipelineConfig,
) -> Result<StoryPrediction> {
    let story = &input.story;
    let embeddings = input.embeddings.as_ref();
    check_story_id(story, embeddings)?;
    let text = text_stage(story, lexicon, input.coref.as_ref())?;
    let visual = visual_stage(embeddings, &cfg.clustering)?;
    let (alignment, characters) = ground_stage(story.len(), &text, &visual, embeddings, &cfg.grounding)?;
    let mut prediction = StoryPrediction {
        story_id: story.story_id.clone(),
        text_chains: Some(text),
        visual_chains: Some(visual),
        alignment: Some(alignment),
        characters: Some(characters),
        ranking: None,
    };
    rank_stage(&mut prediction, Modality::Multi)?;
    Ok(prediction)
}

/// Runs every story independently; results keep input order.
pub fn run_corpus(
    inputs: &[StoryInput],
    lexicon: &CharacterLexicon,
    cfg: &PipelineConfig,
) -> Vec<Result<StoryPrediction>> {
    cfg.execution.map(inputs, |input| run_story(input, lexicon, cfg))
}

/// The gold annotation of a story restated as a prediction: gold chains,
/// gold alignment, gold characters ranked by their stars.
pub fn prediction_from_gold(story: &AnnotatedStory) -> Result<StoryPrediction> {
    let gold = story
        .gold
        .as_ref()
        .ok_or_else(|| Error::data(format!("story {} has no gold annotation", story.story_id)))?;
    let index_of = |ids: &[&str], id: &str, what: &str| {
        ids.iter()
            .position(|x| *x == id)
            .ok_or_else(|| Error::data(format!("story {}: unknown {what} chain {id}", story.story_id)))
    };
    let text_ids: Vec<&str> = gold.text_chains.iter().map(|c| c.chain_id.as_str()).collect();
    let visual_ids: Vec<&str> = gold.visual_chains.iter().map(|c| c.chain_id.as_str()).collect();
    let mut alignment = Alignment::default();
    for (t, v) in &gold.alignment {
        let ti = index_of(&text_ids, t, "text")?;
        let vi = index_of(&visual_ids, v, "visual")?;
        if gold.text_chains[ti].number.is_singular() {
            alignment.pairs.push((ti, vi, 1.0));
        } else {
            alignment.plural_attachments.push((vi, ti, 1.0));
        }
    }
    alignment.pairs.sort_by_key(|&(t, _, _)| t);
    alignment.plural_attachments.sort_by_key(|&(v, _, _)| v);

    let characters = gold.characters();
    let ranked = crate::metrics::ranked_characters(story, gold);
    let ranking = gold_ranking(&ranked)
        .into_iter()
        .map(|i| characters[i].id.to_string())
        .collect();
    Ok(StoryPrediction {
        story_id: story.story_id.clone(),
        text_chains: Some(gold.text_chains.clone()),
        visual_chains: Some(gold.visual_chains.clone()),
        alignment: Some(alignment),
        characters: Some(characters.iter().map(|c| c.to_multimodal()).collect()),
        ranking: Some(ranking),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::story;
    use crate::model::{BoundingBox, FaceInstance, GoldAnnotation};
    use std::collections::BTreeMap;

    fn face(image: usize, x: f64, e: &[f64]) -> FaceInstance {
        FaceInstance {
            image_index: image,
            bbox: BoundingBox::new(x, 0.0, 10.0, 10.0),
            embedding: e.to_vec(),
        }
    }

    #[test]
    fn runs_every_stage() {
        let st = story(
            "s",
            &[
                "the/DT man/NN walked/VBD",
                "he/PRP sat/VBD",
                "a/DT dog/NN barked/VBD",
            ],
        );
        let faces = vec![
            face(0, 0.0, &[1.0, 0.0]),
            face(1, 0.0, &[1.0, 0.01]),
            face(2, 0.0, &[0.0, 1.0]),
            face(2, 50.0, &[0.01, 1.0]),
        ];
        let input = StoryInput {
            story: st,
            embeddings: Some(EmbeddingTable::new(None, 2, faces, vec![]).unwrap()),
            coref: None,
        };
        let p = run_story(&input, &CharacterLexicon::default(), &PipelineConfig::default()).unwrap();
        assert_eq!(p.text_chains.as_ref().unwrap().len(), 2);
        assert_eq!(p.visual_chains.as_ref().unwrap().len(), 2);
        assert_eq!(p.alignment.as_ref().unwrap().pairs.len(), 2);
        assert_eq!(p.ranking.as_ref().unwrap()[0], "t0");
    }

    #[test]
    fn foreign_embeddings_rejected() {
        let input = StoryInput {
            story: story("s", &["man/NN"]),
            embeddings: Some(EmbeddingTable::new(Some("other".into()), 2, vec![], vec![]).unwrap()),
            coref: None,
        };
        let err = run_story(&input, &CharacterLexicon::default(), &PipelineConfig::default());
        assert!(matches!(err, Err(Error::Data(_))));
    }

    #[test]
    fn gold_prediction_follows_stars() {
        let mut st = story("g", &["the/DT man/NN and/CC a/DT dog/NN"]);
        let chain = |id: &str, t| {
            TextChain::new(
                id,
                vec![crate::model::Mention {
                    sentence_index: 0,
                    token_start: t,
                    token_end: t + 1,
                    surface: "x".into(),
                    number: crate::model::Number::Singular,
                    kind: crate::model::MentionKind::Noun,
                }],
            )
        };
        st.gold = Some(GoldAnnotation {
            text_chains: vec![chain("man", 1), chain("dog", 4)],
            visual_chains: vec![],
            alignment: vec![],
            importance: BTreeMap::from([("man".to_string(), 2), ("dog".to_string(), 5)]),
        });
        let p = prediction_from_gold(&st).unwrap();
        assert_eq!(p.ranking.unwrap(), vec!["dog", "man"]);
    }
}

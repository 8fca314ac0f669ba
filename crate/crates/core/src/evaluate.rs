//! Scoring predictions against gold stories and folding per-story scores
//! into a corpus report.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grounding::{align, GroundingConfig, SimilarityMethod};
use crate::metrics::{
    b_cubed, detection_pr, exact_match, grounding_pr, map_text_chains, map_visual_chains, pearson,
    precision_at_k, ranked_characters, text_chain_items, visual_chain_items, CharacterKey, Item,
    MentionMatcher, PrecisionRecall, Ratio,
};
use crate::model::{AnnotatedStory, GoldAnnotation, TextChain, VisualChain};
use crate::pipeline::StoryPrediction;

/// The k values reported for Precision@k.
pub const PRECISION_AT: [usize; 3] = [1, 3, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricGroup {
    Detection,
    BCubed,
    Exact,
    Grounding,
    PrecisionAtK,
    Pearson,
}

impl MetricGroup {
    pub const ALL: [MetricGroup; 6] = [
        MetricGroup::Detection,
        MetricGroup::BCubed,
        MetricGroup::Exact,
        MetricGroup::Grounding,
        MetricGroup::PrecisionAtK,
        MetricGroup::Pearson,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricGroup::Detection => "detection",
            MetricGroup::BCubed => "bcubed",
            MetricGroup::Exact => "exact",
            MetricGroup::Grounding => "grounding",
            MetricGroup::PrecisionAtK => "pk",
            MetricGroup::Pearson => "pearson",
        }
    }
}

impl FromStr for MetricGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::parameter(format!("unknown metric group {s:?}")))
    }
}

/// Parses a comma-separated list of metric group names.
pub fn parse_metric_groups(list: &str) -> Result<BTreeSet<MetricGroup>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(MetricGroup::from_str)
        .collect()
}

/// A per-story score before corpus aggregation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    /// Summed over stories (micro average).
    Counts(Ratio),
    /// Averaged over the stories where it is present (macro average).
    Value(Option<f64>),
}

impl Score {
    pub fn value(&self) -> Option<f64> {
        match self {
            Score::Counts(r) => r.value(),
            Score::Value(v) => *v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoryScores {
    pub story_id: String,
    pub scores: BTreeMap<String, Score>,
}

fn put_pr(scores: &mut BTreeMap<String, Score>, name: &str, pr: PrecisionRecall) {
    scores.insert(format!("{name}.precision"), Score::Counts(pr.precision));
    scores.insert(format!("{name}.recall"), Score::Counts(pr.recall));
}

fn pred_text_items(story: &AnnotatedStory, chains: &[TextChain]) -> Vec<Vec<Item>> {
    chains
        .iter()
        .map(|c| {
            c.mentions
                .iter()
                .map(|m| Item::word(m.sentence_index, m.token_start, story.mention_head(m)))
                .collect()
        })
        .collect()
}

fn pred_visual_items(chains: &[VisualChain]) -> Vec<Vec<Item>> {
    chains
        .iter()
        .map(|c| {
            c.faces
                .iter()
                .map(|f| Item::region(f.image_index, f.bbox))
                .collect()
        })
        .collect()
}

fn first_heads(story: &AnnotatedStory, chains: &[TextChain]) -> Vec<Option<String>> {
    chains
        .iter()
        .map(|c| c.mentions.first().map(|m| story.mention_head(m)))
        .collect()
}

fn gold_pairs(gold: &GoldAnnotation) -> Result<Vec<(usize, usize)>> {
    gold.alignment
        .iter()
        .map(|(t, v)| {
            let ti = gold.text_chains.iter().position(|c| c.chain_id == *t);
            let vi = gold.visual_chains.iter().position(|c| c.chain_id == *v);
            ti.zip(vi)
                .ok_or_else(|| Error::data(format!("gold alignment ({t}, {v}) names an unknown chain")))
        })
        .collect()
}

/// Detection, B-Cubed and exact match for one modality.
fn chain_scores(
    scores: &mut BTreeMap<String, Score>,
    groups: &BTreeSet<MetricGroup>,
    prefix: &str,
    pred: Option<&[Vec<Item>]>,
    gold: &[Vec<Item>],
    matcher: MentionMatcher,
) {
    let flat = |chains: &[Vec<Item>]| chains.iter().flatten().cloned().collect::<Vec<_>>();
    let gold_flat = flat(gold);
    let pred = pred.unwrap_or(&[]);
    if groups.contains(&MetricGroup::Detection) {
        put_pr(
            scores,
            &format!("{prefix}.detection"),
            detection_pr(&flat(pred), &gold_flat, matcher),
        );
    }
    if groups.contains(&MetricGroup::BCubed) {
        put_pr(scores, &format!("{prefix}.bcubed"), b_cubed(pred, gold, matcher));
    }
    if groups.contains(&MetricGroup::Exact) {
        put_pr(
            scores,
            &format!("{prefix}.exact"),
            exact_match(pred, gold, matcher),
        );
    }
}

/// Gold-chain counts against stars for the characters having the chosen
/// side; `None` side means both sides summed.
fn occurrence_correlation(gold: &GoldAnnotation, side: Option<bool>) -> Result<Option<f64>> {
    let (mut counts, mut stars) = (Vec::new(), Vec::new());
    for c in gold.characters() {
        let Some(s) = c.stars else { continue };
        let n = match side {
            Some(true) if c.text.is_some() => c.text_len(),
            Some(false) if c.visual.is_some() => c.visual_len(),
            None => c.text_len() + c.visual_len(),
            _ => continue,
        };
        counts.push(n as f64);
        stars.push(s as f64);
    }
    pearson(&counts, &stars)
}

/// Scores one predicted story against its gold story.
pub fn evaluate_story(
    prediction: &StoryPrediction,
    story: &AnnotatedStory,
    groups: &BTreeSet<MetricGroup>,
) -> Result<StoryScores> {
    let gold = story
        .gold
        .as_ref()
        .ok_or_else(|| Error::data(format!("story {} has no gold annotation", story.story_id)))?;
    if prediction.story_id != story.story_id {
        return Err(Error::data(format!(
            "prediction for story {} scored against story {}",
            prediction.story_id, story.story_id
        )));
    }
    let mut scores = BTreeMap::new();
    let gold_text = text_chain_items(story, gold);
    let gold_visual = visual_chain_items(gold);
    let pred_text = prediction.text_chains.as_ref().map(|c| pred_text_items(story, c));
    let pred_visual = prediction.visual_chains.as_ref().map(|c| pred_visual_items(c));
    chain_scores(
        &mut scores,
        groups,
        "text",
        pred_text.as_deref(),
        &gold_text,
        MentionMatcher::TextHeadWord,
    );
    chain_scores(
        &mut scores,
        groups,
        "visual",
        pred_visual.as_deref(),
        &gold_visual,
        MentionMatcher::VisualFaceInBody,
    );

    if groups.contains(&MetricGroup::Grounding) {
        let gold_pairs = gold_pairs(gold)?;
        let predicted = match (
            &prediction.alignment,
            &prediction.text_chains,
            &prediction.visual_chains,
        ) {
            (Some(a), Some(text), Some(_)) => {
                let text_map =
                    map_text_chains(&first_heads(story, text), &first_heads(story, &gold.text_chains));
                let visual_map = map_visual_chains(pred_visual.as_deref().unwrap_or(&[]), &gold_visual);
                let pairs: Vec<(usize, usize)> = a
                    .pairs
                    .iter()
                    .map(|&(t, v, _)| (t, v))
                    .chain(a.plural_attachments.iter().map(|&(v, t, _)| (t, v)))
                    .collect();
                grounding_pr(&pairs, &text_map, &visual_map, &gold_pairs)
            }
            _ => PrecisionRecall {
                precision: Ratio::default(),
                recall: Ratio::new(0.0, gold_pairs.len() as f64),
            },
        };
        put_pr(&mut scores, "grounding", predicted);
        put_pr(
            &mut scores,
            "gold_input_grounding",
            gold_input_grounding(story, gold, &gold_pairs)?,
        );
    }

    if groups.contains(&MetricGroup::PrecisionAtK) {
        let ranked = ranked_characters(story, gold);
        let keys: Vec<Option<CharacterKey>> = prediction
            .ranked_characters()?
            .iter()
            .map(|c| CharacterKey::of(c, story))
            .collect();
        for k in PRECISION_AT {
            scores.insert(
                format!("p_at_{k}"),
                Score::Value(precision_at_k(&keys, &ranked, k)?),
            );
        }
    }

    if groups.contains(&MetricGroup::Pearson) {
        scores.insert(
            "pearson.text".into(),
            Score::Value(occurrence_correlation(gold, Some(true))?),
        );
        scores.insert(
            "pearson.visual".into(),
            Score::Value(occurrence_correlation(gold, Some(false))?),
        );
        scores.insert(
            "pearson.multi".into(),
            Score::Value(occurrence_correlation(gold, None)?),
        );
    }

    Ok(StoryScores {
        story_id: story.story_id.clone(),
        scores,
    })
}

/// Distributional grounding run on the gold chains themselves.
fn gold_input_grounding(
    story: &AnnotatedStory,
    gold: &GoldAnnotation,
    gold_pairs: &[(usize, usize)],
) -> Result<PrecisionRecall> {
    let cfg = GroundingConfig {
        method: SimilarityMethod::Distributional,
        ..GroundingConfig::default()
    };
    let a = align(&gold.text_chains, &gold.visual_chains, story.len(), None, &cfg)?;
    let pairs: Vec<(usize, usize)> = a
        .pairs
        .iter()
        .map(|&(t, v, _)| (t, v))
        .chain(a.plural_attachments.iter().map(|&(v, t, _)| (t, v)))
        .collect();
    let text_map: Vec<Option<usize>> = (0..gold.text_chains.len()).map(Some).collect();
    let visual_map: Vec<Option<usize>> = (0..gold.visual_chains.len()).map(Some).collect();
    Ok(grounding_pr(&pairs, &text_map, &visual_map, gold_pairs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryReport {
    pub story_id: String,
    pub metrics: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub corpus: BTreeMap<String, Option<f64>>,
    pub stories: Vec<StoryReport>,
}

/// Folds per-story scores into a report. Counts are summed before dividing;
/// plain values are averaged over the stories where they are present.
pub fn aggregate(stories: &[StoryScores]) -> Report {
    let mut counts: BTreeMap<String, Ratio> = BTreeMap::new();
    let mut values: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for s in stories {
        for (name, score) in &s.scores {
            match score {
                Score::Counts(r) => *counts.entry(name.clone()).or_default() += *r,
                Score::Value(v) => {
                    let e = values.entry(name.clone()).or_insert((0.0, 0));
                    if let Some(v) = v {
                        e.0 += v;
                        e.1 += 1;
                    }
                }
            }
        }
    }
    let mut corpus: BTreeMap<String, Option<f64>> = counts.into_iter().map(|(k, r)| (k, r.value())).collect();
    corpus.extend(
        values
            .into_iter()
            .map(|(k, (sum, n))| (k, (n > 0).then(|| sum / n as f64))),
    );
    let mut reports: Vec<StoryReport> = stories
        .iter()
        .map(|s| StoryReport {
            story_id: s.story_id.clone(),
            metrics: s.scores.iter().map(|(k, v)| (k.clone(), v.value())).collect(),
        })
        .collect();
    reports.sort_by(|a, b| a.story_id.cmp(&b.story_id));
    Report {
        corpus,
        stories: reports,
    }
}

/// Scores every prediction against the gold story of the same id. Every
/// gold story needs exactly one prediction and vice versa.
pub fn evaluate_corpus(
    predictions: &[StoryPrediction],
    gold: &[AnnotatedStory],
    groups: &BTreeSet<MetricGroup>,
) -> Result<Report> {
    let mut by_id: HashMap<&str, &StoryPrediction> = HashMap::new();
    for p in predictions {
        if by_id.insert(p.story_id.as_str(), p).is_some() {
            return Err(Error::data(format!("two predictions for story {}", p.story_id)));
        }
    }
    let mut seen = BTreeSet::new();
    let mut scores = Vec::with_capacity(gold.len());
    for story in gold {
        if !seen.insert(story.story_id.as_str()) {
            return Err(Error::data(format!("gold story {} given twice", story.story_id)));
        }
        let p = by_id
            .get(story.story_id.as_str())
            .ok_or_else(|| Error::data(format!("no prediction for story {}", story.story_id)))?;
        scores.push(evaluate_story(p, story, groups)?);
    }
    if let Some(extra) = predictions.iter().find(|p| !seen.contains(p.story_id.as_str())) {
        return Err(Error::data(format!(
            "prediction for unknown story {}",
            extra.story_id
        )));
    }
    Ok(aggregate(&scores))
}

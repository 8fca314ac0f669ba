//! JSON file formats for stories, embeddings, external co-reference,
//! predictions and reports, plus the CSV report form.
//!
//! Every document carries `"format_version": 1`. Readers accept a missing
//! version and reject any other value.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::evaluate::Report;
use crate::grounding::Alignment;
use crate::model::{
    is_pronoun_tag, validate_story, AnnotatedStory, BoundingBox, FaceInstance, GoldAnnotation, ImageDesc,
    Mention, MentionKind, MultiModalChain, Number, Sentence, TextChain, Token, VisualChain,
};
use crate::pipeline::StoryPrediction;
use crate::textchars::ExternalCoref;

pub const FORMAT_VERSION: u32 = 1;

fn check_version(version: Option<u32>, context: &str) -> Result<()> {
    match version {
        None | Some(FORMAT_VERSION) => Ok(()),
        Some(v) => Err(Error::schema(context, format!("unsupported format_version {v}"))),
    }
}

fn parse<T: DeserializeOwned>(text: &str, context: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        if e.is_data() {
            Error::schema(context, e.to_string())
        } else {
            Error::Syntax(e)
        }
    })
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// JSON files under `path`: the file itself, or the `*.json` files of a
/// directory in name order.
pub fn json_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"));
    files.sort();
    Ok(files)
}

// ---------------------------------------------------------------- stories

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoryDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    format_version: Option<u32>,
    story_id: String,
    sentences: Vec<SentenceDoc>,
    images: Vec<ImageDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold: Option<GoldDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SentenceDoc {
    index: usize,
    text: String,
    tokens: Vec<Token>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoldDoc {
    #[serde(default)]
    text_chains: Vec<TextChainDoc>,
    #[serde(default)]
    visual_chains: Vec<GoldVisualDoc>,
    #[serde(default)]
    alignment: Vec<PairDoc>,
    #[serde(default)]
    importance: Vec<StarsDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TextChainDoc {
    chain_id: String,
    number: Number,
    mentions: Vec<MentionDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MentionDoc {
    sentence_index: usize,
    token_start: usize,
    token_end: usize,
    text: String,
    /// Written only when it differs from the chain's number class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    number: Option<Number>,
    /// Written only when it differs from the kind implied by the tokens.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<MentionKind>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoldVisualDoc {
    chain_id: String,
    boxes: Vec<GoldBoxDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoldBoxDoc {
    image_index: usize,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairDoc {
    text_chain_id: String,
    visual_chain_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StarsDoc {
    chain_id: String,
    stars: u8,
}

/// Kind implied by the tokens of a span: pronoun when every token is
/// pronoun-tagged.
fn implied_kind(sentences: &[Sentence], m: &MentionDoc) -> MentionKind {
    let tokens = sentences
        .get(m.sentence_index)
        .and_then(|s| s.tokens.get(m.token_start..m.token_end))
        .unwrap_or(&[]);
    if !tokens.is_empty() && tokens.iter().all(|t| is_pronoun_tag(&t.pos)) {
        MentionKind::Pronoun
    } else {
        MentionKind::Noun
    }
}

fn mention_from_doc(sentences: &[Sentence], m: MentionDoc, chain_number: Number) -> Mention {
    let kind = m.kind.unwrap_or_else(|| implied_kind(sentences, &m));
    Mention {
        sentence_index: m.sentence_index,
        token_start: m.token_start,
        token_end: m.token_end,
        surface: m.text,
        number: m.number.unwrap_or(chain_number),
        kind,
    }
}

fn mention_to_doc(sentences: &[Sentence], m: &Mention, chain_number: Number) -> MentionDoc {
    let mut doc = MentionDoc {
        sentence_index: m.sentence_index,
        token_start: m.token_start,
        token_end: m.token_end,
        text: m.surface.clone(),
        number: (m.number != chain_number).then_some(m.number),
        kind: None,
    };
    if implied_kind(sentences, &doc) != m.kind {
        doc.kind = Some(m.kind);
    }
    doc
}

/// Chains are rebuilt as written, without reordering, so that validation
/// sees exactly what the file says.
fn text_chain_from_doc(sentences: &[Sentence], c: TextChainDoc) -> TextChain {
    let number = c.number;
    TextChain {
        chain_id: c.chain_id,
        mentions: c
            .mentions
            .into_iter()
            .map(|m| mention_from_doc(sentences, m, number))
            .collect(),
        number,
    }
}

fn text_chain_to_doc(sentences: &[Sentence], c: &TextChain) -> TextChainDoc {
    TextChainDoc {
        chain_id: c.chain_id.clone(),
        number: c.number,
        mentions: c
            .mentions
            .iter()
            .map(|m| mention_to_doc(sentences, m, c.number))
            .collect(),
    }
}

fn story_from_doc(doc: StoryDoc, context: &str) -> Result<AnnotatedStory> {
    check_version(doc.format_version, context)?;
    let sentences: Vec<Sentence> = doc
        .sentences
        .into_iter()
        .map(|s| Sentence {
            index: s.index,
            text: s.text,
            tokens: s.tokens,
        })
        .collect();
    let gold = doc.gold.map(|g| {
        let text_chains = g
            .text_chains
            .into_iter()
            .map(|c| text_chain_from_doc(&sentences, c))
            .collect();
        let visual_chains = g
            .visual_chains
            .into_iter()
            .map(|c| VisualChain {
                chain_id: c.chain_id,
                faces: c
                    .boxes
                    .into_iter()
                    .map(|b| FaceInstance {
                        image_index: b.image_index,
                        bbox: BoundingBox::new(b.x, b.y, b.w, b.h),
                        embedding: Vec::new(),
                    })
                    .collect(),
            })
            .collect();
        let alignment = g
            .alignment
            .into_iter()
            .map(|p| (p.text_chain_id, p.visual_chain_id))
            .collect();
        (text_chains, visual_chains, alignment, g.importance)
    });
    let gold = match gold {
        None => None,
        Some((text_chains, visual_chains, alignment, stars)) => {
            let mut importance = BTreeMap::new();
            for s in stars {
                if importance.insert(s.chain_id.clone(), s.stars).is_some() {
                    return Err(Error::schema(
                        context,
                        format!(
                            "story {}: importance given twice for {}",
                            doc.story_id, s.chain_id
                        ),
                    ));
                }
            }
            Some(GoldAnnotation {
                text_chains,
                visual_chains,
                alignment,
                importance,
            })
        }
    };
    let story = AnnotatedStory {
        story_id: doc.story_id,
        sentences,
        images: doc.images,
        gold,
    };
    let problems = validate_story(&story);
    if !problems.is_empty() {
        return Err(Error::schema(
            context,
            format!("story {}: {}", story.story_id, problems.join("; ")),
        ));
    }
    Ok(story)
}

fn story_to_doc(story: &AnnotatedStory) -> StoryDoc {
    let gold = story.gold.as_ref().map(|g| GoldDoc {
        text_chains: g
            .text_chains
            .iter()
            .map(|c| text_chain_to_doc(&story.sentences, c))
            .collect(),
        visual_chains: g
            .visual_chains
            .iter()
            .map(|c| GoldVisualDoc {
                chain_id: c.chain_id.clone(),
                boxes: c
                    .faces
                    .iter()
                    .map(|f| GoldBoxDoc {
                        image_index: f.image_index,
                        x: f.bbox.x,
                        y: f.bbox.y,
                        w: f.bbox.w,
                        h: f.bbox.h,
                    })
                    .collect(),
            })
            .collect(),
        alignment: g
            .alignment
            .iter()
            .map(|(t, v)| PairDoc {
                text_chain_id: t.clone(),
                visual_chain_id: v.clone(),
                score: None,
            })
            .collect(),
        importance: g
            .importance
            .iter()
            .map(|(id, &stars)| StarsDoc {
                chain_id: id.clone(),
                stars,
            })
            .collect(),
    });
    StoryDoc {
        format_version: Some(FORMAT_VERSION),
        story_id: story.story_id.clone(),
        sentences: story
            .sentences
            .iter()
            .map(|s| SentenceDoc {
                index: s.index,
                text: s.text.clone(),
                tokens: s.tokens.clone(),
            })
            .collect(),
        images: story.images.clone(),
        gold,
    }
}

/// Parses and validates a story document.
pub fn parse_story(text: &str, context: &str) -> Result<AnnotatedStory> {
    story_from_doc(parse(text, context)?, context)
}

pub fn story_to_json(story: &AnnotatedStory) -> String {
    to_json(&story_to_doc(story))
}

pub fn load_story(path: &Path) -> Result<AnnotatedStory> {
    parse_story(&read(path)?, &path.display().to_string())
}

pub fn write_story(story: &AnnotatedStory, path: &Path) -> Result<()> {
    write(path, &story_to_json(story))
}

/// Loads every story under `path` (a file or a directory of `*.json`).
pub fn load_stories(path: &Path) -> Result<Vec<AnnotatedStory>> {
    json_files(path)?.iter().map(|p| load_story(p)).collect()
}

// ------------------------------------------------------------- embeddings

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    format_version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    story_id: Option<String>,
    dim: usize,
    #[serde(default)]
    faces: Vec<FaceDoc>,
    #[serde(default)]
    mentions: Vec<MentionVectorDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FaceDoc {
    image_index: usize,
    #[serde(rename = "box")]
    bbox: BoundingBox,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    vector: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MentionVectorDoc {
    surface: String,
    vector: Vec<f64>,
}

pub fn parse_embeddings(text: &str, context: &str) -> Result<EmbeddingTable> {
    let doc: EmbeddingDoc = parse(text, context)?;
    check_version(doc.format_version, context)?;
    let faces = doc
        .faces
        .into_iter()
        .map(|f| FaceInstance {
            image_index: f.image_index,
            bbox: f.bbox,
            embedding: f.vector,
        })
        .collect();
    let mentions = doc.mentions.into_iter().map(|m| (m.surface, m.vector)).collect();
    EmbeddingTable::new(doc.story_id, doc.dim, faces, mentions).map_err(|e| match e {
        Error::Data(message) => Error::schema(context, message),
        other => other,
    })
}

pub fn embeddings_to_json(table: &EmbeddingTable) -> String {
    to_json(&EmbeddingDoc {
        format_version: Some(FORMAT_VERSION),
        story_id: table.story_id.clone(),
        dim: table.dim,
        faces: table
            .faces
            .iter()
            .map(|f| FaceDoc {
                image_index: f.image_index,
                bbox: f.bbox,
                vector: f.embedding.clone(),
            })
            .collect(),
        mentions: table
            .mentions
            .iter()
            .map(|(s, v)| MentionVectorDoc {
                surface: s.clone(),
                vector: v.clone(),
            })
            .collect(),
    })
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    parse_embeddings(&read(path)?, &path.display().to_string())
}

pub fn write_embeddings(table: &EmbeddingTable, path: &Path) -> Result<()> {
    write(path, &embeddings_to_json(table))
}

// ---------------------------------------------------------- external coref

#[derive(Deserialize)]
struct CorefDoc {
    #[serde(default)]
    format_version: Option<u32>,
    #[serde(flatten)]
    coref: ExternalCoref,
}

pub fn parse_coref(text: &str, context: &str) -> Result<ExternalCoref> {
    let doc: CorefDoc = parse(text, context)?;
    check_version(doc.format_version, context)?;
    Ok(doc.coref)
}

pub fn load_coref(path: &Path) -> Result<ExternalCoref> {
    parse_coref(&read(path)?, &path.display().to_string())
}

// ------------------------------------------------------------ predictions

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    format_version: Option<u32>,
    story_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text_chains: Option<Vec<TextChainDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    visual_chains: Option<Vec<VisualChainDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alignment: Option<AlignmentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    characters: Option<Vec<CharacterDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ranking: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VisualChainDoc {
    chain_id: String,
    faces: Vec<FaceDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlignmentDoc {
    pairs: Vec<PairDoc>,
    plural_attachments: Vec<PairDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CharacterDoc {
    chain_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text_chain_id: Option<String>,
    #[serde(default)]
    visual_chain_ids: Vec<String>,
    importance: usize,
}

fn index_by_id<T>(items: &[T], id: impl Fn(&T) -> &str) -> HashMap<&str, usize> {
    items.iter().enumerate().map(|(i, c)| (id(c), i)).collect()
}

fn prediction_from_doc(
    doc: PredictionDoc,
    story: Option<&AnnotatedStory>,
    context: &str,
) -> Result<StoryPrediction> {
    check_version(doc.format_version, context)?;
    let bad = |msg: String| Error::schema(context, format!("story {}: {msg}", doc.story_id));
    let sentences = story.map_or(&[][..], |s| &s.sentences[..]);
    let text_chains: Option<Vec<TextChain>> = doc.text_chains.map(|cs| {
        cs.into_iter()
            .map(|c| text_chain_from_doc(sentences, c))
            .collect()
    });
    let visual_chains: Option<Vec<VisualChain>> = doc.visual_chains.map(|cs| {
        cs.into_iter()
            .map(|c| VisualChain {
                chain_id: c.chain_id,
                faces: c
                    .faces
                    .into_iter()
                    .map(|f| FaceInstance {
                        image_index: f.image_index,
                        bbox: f.bbox,
                        embedding: f.vector,
                    })
                    .collect(),
            })
            .collect()
    });
    let text = text_chains.as_deref().unwrap_or(&[]);
    let visual = visual_chains.as_deref().unwrap_or(&[]);
    let text_ids = index_by_id(text, |c| c.chain_id.as_str());
    let visual_ids = index_by_id(visual, |c| c.chain_id.as_str());
    if text_ids.len() != text.len() || visual_ids.len() != visual.len() {
        return Err(bad("duplicate chain id".into()));
    }
    let resolve = |p: &PairDoc| -> Result<(usize, usize, f64)> {
        let t = *text_ids
            .get(p.text_chain_id.as_str())
            .ok_or_else(|| bad(format!("alignment names unknown text chain {}", p.text_chain_id)))?;
        let v = *visual_ids.get(p.visual_chain_id.as_str()).ok_or_else(|| {
            bad(format!(
                "alignment names unknown visual chain {}",
                p.visual_chain_id
            ))
        })?;
        Ok((t, v, p.score.unwrap_or(0.0)))
    };
    let alignment = match doc.alignment {
        None => None,
        Some(a) => Some(Alignment {
            pairs: a.pairs.iter().map(&resolve).collect::<Result<_>>()?,
            plural_attachments: a
                .plural_attachments
                .iter()
                .map(|p| resolve(p).map(|(t, v, s)| (v, t, s)))
                .collect::<Result<_>>()?,
        }),
    };
    let characters = match doc.characters {
        None => None,
        Some(cs) => {
            let mut out = Vec::with_capacity(cs.len());
            for c in cs {
                let text_side = match &c.text_chain_id {
                    None => None,
                    Some(id) => Some(
                        text[*text_ids.get(id.as_str()).ok_or_else(|| {
                            bad(format!("character {} names unknown text chain {id}", c.chain_id))
                        })?]
                        .clone(),
                    ),
                };
                let mut sources = Vec::with_capacity(c.visual_chain_ids.len());
                for id in &c.visual_chain_ids {
                    let v = visual_ids.get(id.as_str()).ok_or_else(|| {
                        bad(format!(
                            "character {} names unknown visual chain {id}",
                            c.chain_id
                        ))
                    })?;
                    sources.push(&visual[*v]);
                }
                let visual_side = match sources.as_slice() {
                    [] => None,
                    [one] => Some((*one).clone()),
                    many => Some(VisualChain::new(
                        c.visual_chain_ids.join("+"),
                        many.iter().flat_map(|v| v.faces.iter().cloned()).collect(),
                    )),
                };
                let mut chain =
                    MultiModalChain::new(c.chain_id.clone(), text_side, visual_side, c.visual_chain_ids)
                        .ok_or_else(|| bad(format!("character {} has neither side", c.chain_id)))?;
                chain.importance = c.importance;
                out.push(chain);
            }
            Some(out)
        }
    };
    Ok(StoryPrediction {
        story_id: doc.story_id,
        text_chains,
        visual_chains,
        alignment,
        characters,
        ranking: doc.ranking,
    })
}

fn prediction_to_doc(p: &StoryPrediction, story: Option<&AnnotatedStory>) -> PredictionDoc {
    let sentences = story.map_or(&[][..], |s| &s.sentences[..]);
    let text = p.text_chains.as_deref().unwrap_or(&[]);
    let visual = p.visual_chains.as_deref().unwrap_or(&[]);
    let pair = |t: usize, v: usize, s: f64| PairDoc {
        text_chain_id: text[t].chain_id.clone(),
        visual_chain_id: visual[v].chain_id.clone(),
        score: Some(s),
    };
    PredictionDoc {
        format_version: Some(FORMAT_VERSION),
        story_id: p.story_id.clone(),
        text_chains: p
            .text_chains
            .as_ref()
            .map(|cs| cs.iter().map(|c| text_chain_to_doc(sentences, c)).collect()),
        visual_chains: p.visual_chains.as_ref().map(|cs| {
            cs.iter()
                .map(|c| VisualChainDoc {
                    chain_id: c.chain_id.clone(),
                    faces: c
                        .faces
                        .iter()
                        .map(|f| FaceDoc {
                            image_index: f.image_index,
                            bbox: f.bbox,
                            vector: Vec::new(),
                        })
                        .collect(),
                })
                .collect()
        }),
        alignment: p.alignment.as_ref().map(|a| AlignmentDoc {
            pairs: a.pairs.iter().map(|&(t, v, s)| pair(t, v, s)).collect(),
            plural_attachments: a
                .plural_attachments
                .iter()
                .map(|&(v, t, s)| pair(t, v, s))
                .collect(),
        }),
        characters: p.characters.as_ref().map(|cs| {
            cs.iter()
                .map(|c| CharacterDoc {
                    chain_id: c.chain_id.clone(),
                    text_chain_id: c.text.as_ref().map(|t| t.chain_id.clone()),
                    visual_chain_ids: c.visual_chain_ids.clone(),
                    importance: c.importance,
                })
                .collect()
        }),
        ranking: p.ranking.clone(),
    }
}

/// Parses a prediction document. The story, when given, supplies the
/// tokens from which mention kinds are implied.
pub fn parse_prediction(
    text: &str,
    story: Option<&AnnotatedStory>,
    context: &str,
) -> Result<StoryPrediction> {
    prediction_from_doc(parse(text, context)?, story, context)
}

/// Serializes a prediction. Face embeddings are not written; stages that
/// need them look faces up in the embedding file.
pub fn prediction_to_json(p: &StoryPrediction, story: Option<&AnnotatedStory>) -> String {
    to_json(&prediction_to_doc(p, story))
}

pub fn load_prediction(path: &Path, story: Option<&AnnotatedStory>) -> Result<StoryPrediction> {
    parse_prediction(&read(path)?, story, &path.display().to_string())
}

pub fn write_prediction(p: &StoryPrediction, story: Option<&AnnotatedStory>, path: &Path) -> Result<()> {
    write(path, &prediction_to_json(p, story))
}

/// Loads every prediction under `path`, resolving mention kinds against
/// the stories of the same id when available.
pub fn load_predictions(path: &Path, stories: &[AnnotatedStory]) -> Result<Vec<StoryPrediction>> {
    let by_id: HashMap<&str, &AnnotatedStory> = stories.iter().map(|s| (s.story_id.as_str(), s)).collect();
    json_files(path)?
        .iter()
        .map(|p| {
            let text = read(p)?;
            let context = p.display().to_string();
            let doc: PredictionDoc = parse(&text, &context)?;
            let story = by_id.get(doc.story_id.as_str()).copied();
            prediction_from_doc(doc, story, &context)
        })
        .collect()
}

// ---------------------------------------------------------------- reports

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Serialize, Deserialize)]
struct ReportDoc {
    #[serde(default)]
    format_version: Option<u32>,
    #[serde(flatten)]
    report: Report,
}

/// Display rounding used in CSV cells.
pub fn format_value(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.4}"))
}

pub fn report_to_string(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => to_json(&ReportDoc {
            format_version: Some(FORMAT_VERSION),
            report: report.clone(),
        }),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let rows = report.corpus.iter().map(|(k, v)| ("corpus", k, v)).chain(
                report
                    .stories
                    .iter()
                    .flat_map(|s| s.metrics.iter().map(move |(k, v)| (s.story_id.as_str(), k, v))),
            );
            w.write_record(["scope", "metric", "value"])
                .expect("in-memory write");
            for (scope, metric, value) in rows {
                w.write_record([scope, metric, &format_value(*value)])
                    .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
        }
    }
}

pub fn write_report(report: &Report, path: &Path, format: ReportFormat) -> Result<()> {
    write(path, &report_to_string(report, format))
}

/// Reads a structured (JSON) report.
pub fn parse_report(text: &str, context: &str) -> Result<Report> {
    let doc: ReportDoc = parse(text, context)?;
    check_version(doc.format_version, context)?;
    Ok(doc.report)
}

pub fn read_report(path: &Path) -> Result<Report> {
    parse_report(&read(path)?, &path.display().to_string())
}

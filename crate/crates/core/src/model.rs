//! Domain types shared by every stage of the pipeline.
//!
//! All types are plain data: immutable after construction and `Send + Sync`.
//! A story has `C` aligned sentence/image slots; text characters are
//! [`TextChain`]s of [`Mention`]s, visual characters are [`VisualChain`]s of
//! [`FaceInstance`]s, and a grounded character is a [`MultiModalChain`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

/// Penn Treebank noun tags.
pub fn is_noun_tag(pos: &str) -> bool {
    matches!(pos, "NN" | "NNS" | "NNP" | "NNPS")
}

pub fn is_plural_noun_tag(pos: &str) -> bool {
    matches!(pos, "NNS" | "NNPS")
}

pub fn is_pronoun_tag(pos: &str) -> bool {
    matches!(pos, "PRP" | "PRP$")
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedStory {
    pub story_id: String,
    pub sentences: Vec<Sentence>,
    pub images: Vec<ImageDesc>,
    pub gold: Option<GoldAnnotation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub pos: String,
    pub char_start: usize,
    pub char_end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageDesc {
    pub index: usize,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Number {
    Singular,
    Plural,
    Group,
}

impl Number {
    pub fn is_singular(self) -> bool {
        self == Number::Singular
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionKind {
    Noun,
    Pronoun,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mention {
    pub sentence_index: usize,
    pub token_start: usize,
    pub token_end: usize,
    pub surface: String,
    pub number: Number,
    pub kind: MentionKind,
}

impl Mention {
    pub fn position(&self) -> (usize, usize) {
        (self.sentence_index, self.token_start)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextChain {
    pub chain_id: String,
    pub mentions: Vec<Mention>,
    pub number: Number,
}

impl TextChain {
    /// Builds a chain, sorting mentions into story order and deriving the
    /// chain number class (Group dominates Plural dominates Singular).
    pub fn new(chain_id: impl Into<String>, mut mentions: Vec<Mention>) -> Self {
        mentions.sort_by_key(Mention::position);
        let number = chain_number(&mentions);
        TextChain {
            chain_id: chain_id.into(),
            mentions,
            number,
        }
    }

    pub fn len(&self) -> usize {
        self.mentions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mentions.is_empty()
    }

    pub fn first_position(&self) -> Option<(usize, usize)> {
        self.mentions.first().map(Mention::position)
    }
}

pub(crate) fn chain_number(mentions: &[Mention]) -> Number {
    mentions
        .iter()
        .map(|m| m.number)
        .max()
        .unwrap_or(Number::Singular)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BoundingBox { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// True when `self` lies entirely inside `outer` (shared edges allowed).
    pub fn is_inside(&self, outer: &BoundingBox) -> bool {
        self.x >= outer.x
            && self.y >= outer.y
            && self.right() <= outer.right()
            && self.bottom() <= outer.bottom()
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceInstance {
    pub image_index: usize,
    pub bbox: BoundingBox,
    /// Empty for gold body boxes, which carry no features.
    pub embedding: Vec<f64>,
}

impl FaceInstance {
    fn order_key(&self) -> (usize, f64, f64) {
        (self.image_index, self.bbox.x, self.bbox.y)
    }

    pub(crate) fn cmp_position(&self, other: &FaceInstance) -> Ordering {
        let (ia, xa, ya) = self.order_key();
        let (ib, xb, yb) = other.order_key();
        ia.cmp(&ib).then(xa.total_cmp(&xb)).then(ya.total_cmp(&yb))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisualChain {
    pub chain_id: String,
    pub faces: Vec<FaceInstance>,
}

impl VisualChain {
    /// Builds a chain with faces sorted by image index, then box position.
    pub fn new(chain_id: impl Into<String>, mut faces: Vec<FaceInstance>) -> Self {
        faces.sort_by(FaceInstance::cmp_position);
        VisualChain {
            chain_id: chain_id.into(),
            faces,
        }
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }
}

/// Narrative position of a chain's first appearance, used for tie-breaking.
///
/// Ordered by first sentence, token start, first image, then box x. Chains
/// without a textual side sort after every chain with one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOccurrence {
    pub sentence: usize,
    pub token: usize,
    pub image: usize,
    pub box_x: f64,
}

impl Eq for FirstOccurrence {}

impl PartialOrd for FirstOccurrence {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FirstOccurrence {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sentence
            .cmp(&other.sentence)
            .then(self.token.cmp(&other.token))
            .then(self.image.cmp(&other.image))
            .then(self.box_x.total_cmp(&other.box_x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiModalChain {
    pub chain_id: String,
    pub text: Option<TextChain>,
    pub visual: Option<VisualChain>,
    /// Ids of the visual chains merged into `visual` (several for a plural
    /// or group character that collected more than one visual chain).
    pub visual_chain_ids: Vec<String>,
    pub importance: usize,
}

impl MultiModalChain {
    /// Returns `None` when both sides are absent.
    pub fn new(
        chain_id: impl Into<String>,
        text: Option<TextChain>,
        visual: Option<VisualChain>,
        visual_chain_ids: Vec<String>,
    ) -> Option<Self> {
        if text.is_none() && visual.is_none() {
            return None;
        }
        let importance =
            text.as_ref().map_or(0, TextChain::len) + visual.as_ref().map_or(0, VisualChain::len);
        Some(MultiModalChain {
            chain_id: chain_id.into(),
            text,
            visual,
            visual_chain_ids,
            importance,
        })
    }

    pub fn from_text(chain: TextChain) -> Self {
        let id = chain.chain_id.clone();
        MultiModalChain::new(id, Some(chain), None, Vec::new()).expect("text side present")
    }

    pub fn from_visual(chain: VisualChain) -> Self {
        let id = chain.chain_id.clone();
        let ids = vec![id.clone()];
        MultiModalChain::new(id, None, Some(chain), ids).expect("visual side present")
    }

    pub fn first_occurrence(&self) -> FirstOccurrence {
        let (sentence, token) = self
            .text
            .as_ref()
            .and_then(TextChain::first_position)
            .unwrap_or((usize::MAX, usize::MAX));
        let (image, box_x) = self
            .visual
            .as_ref()
            .and_then(|v| v.faces.first())
            .map_or((usize::MAX, f64::INFINITY), |f| (f.image_index, f.bbox.x));
        FirstOccurrence {
            sentence,
            token,
            image,
            box_x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldAnnotation {
    pub text_chains: Vec<TextChain>,
    pub visual_chains: Vec<VisualChain>,
    /// (text_chain_id, visual_chain_id)
    pub alignment: Vec<(String, String)>,
    pub importance: BTreeMap<String, u8>,
}

impl GoldAnnotation {
    /// Gold characters: one per aligned pair plus every unaligned chain.
    /// A character takes its text chain id when it has one.
    pub fn characters(&self) -> Vec<GoldCharacter<'_>> {
        let mut out = Vec::new();
        let mut used_visual = HashSet::new();
        for text in &self.text_chains {
            let visual = self
                .alignment
                .iter()
                .find(|(t, _)| *t == text.chain_id)
                .and_then(|(_, v)| self.visual_chains.iter().find(|c| c.chain_id == *v));
            if let Some(v) = visual {
                used_visual.insert(v.chain_id.as_str());
            }
            out.push(GoldCharacter {
                id: text.chain_id.as_str(),
                text: Some(text),
                visual,
                stars: self.stars_for(Some(&text.chain_id), visual.map(|v| &v.chain_id)),
            });
        }
        for visual in &self.visual_chains {
            if used_visual.contains(visual.chain_id.as_str()) {
                continue;
            }
            out.push(GoldCharacter {
                id: visual.chain_id.as_str(),
                text: None,
                visual: Some(visual),
                stars: self.stars_for(None, Some(&visual.chain_id)),
            });
        }
        out
    }

    fn stars_for(&self, text_id: Option<&String>, visual_id: Option<&String>) -> Option<u8> {
        text_id
            .and_then(|id| self.importance.get(id))
            .or_else(|| visual_id.and_then(|id| self.importance.get(id)))
            .copied()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GoldCharacter<'a> {
    pub id: &'a str,
    pub text: Option<&'a TextChain>,
    pub visual: Option<&'a VisualChain>,
    pub stars: Option<u8>,
}

impl GoldCharacter<'_> {
    pub fn text_len(&self) -> usize {
        self.text.map_or(0, TextChain::len)
    }

    pub fn visual_len(&self) -> usize {
        self.visual.map_or(0, VisualChain::len)
    }

    pub fn is_plural_or_group(&self) -> bool {
        self.text.is_some_and(|t| !t.number.is_singular())
    }

    pub fn to_multimodal(&self) -> MultiModalChain {
        let ids = self.visual.map(|v| vec![v.chain_id.clone()]).unwrap_or_default();
        MultiModalChain::new(self.id, self.text.cloned(), self.visual.cloned(), ids)
            .expect("gold character has at least one side")
    }
}

/// Dense row-major similarity matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Returns `None` unless `values.len() == rows * cols` and every entry
    /// lies in `[0, 1]`.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Option<Self> {
        if values.len() != rows * cols || !values.iter().all(|v| (0.0..=1.0).contains(v)) {
            return None;
        }
        Some(SimilarityMatrix { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        SimilarityMatrix::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl AnnotatedStory {
    /// Number of aligned sentence/image slots.
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token(&self, sentence: usize, token: usize) -> Option<&Token> {
        self.sentences.get(sentence)?.tokens.get(token)
    }

    /// Lowercased head word of a token span: the rightmost noun-tagged token,
    /// or the rightmost token when the span has no noun.
    pub fn head_word(&self, sentence: usize, token_start: usize, token_end: usize) -> Option<String> {
        let tokens = self.sentences.get(sentence)?.tokens.get(token_start..token_end)?;
        tokens
            .iter()
            .rev()
            .find(|t| is_noun_tag(&t.pos))
            .or_else(|| tokens.last())
            .map(|t| t.text.to_lowercase())
    }

    /// Head word of a mention, falling back to the last word of its surface
    /// form when the span does not resolve against the story tokens.
    pub fn mention_head(&self, mention: &Mention) -> String {
        self.head_word(mention.sentence_index, mention.token_start, mention.token_end)
            .unwrap_or_else(|| {
                mention
                    .surface
                    .split_whitespace()
                    .last()
                    .unwrap_or("")
                    .to_lowercase()
            })
    }
}

/// Checks every model invariant and returns one description per violation.
pub fn validate_story(story: &AnnotatedStory) -> Vec<String> {
    let mut out = Vec::new();
    let c = story.sentences.len();
    if c != story.images.len() {
        out.push(format!(
            "sentence/image count mismatch: {} sentences, {} images",
            c,
            story.images.len()
        ));
    }
    if c == 0 {
        out.push("story has no sentences".to_string());
    }
    for (i, s) in story.sentences.iter().enumerate() {
        if s.index != i {
            out.push(format!("sentence index {} at position {i}", s.index));
        }
        let mut prev_end = 0;
        for (t, tok) in s.tokens.iter().enumerate() {
            if tok.char_start >= tok.char_end {
                out.push(format!("empty token span: sentence {i}, token {t}"));
            } else if tok.char_end > s.text.len()
                || !s.text.is_char_boundary(tok.char_start)
                || !s.text.is_char_boundary(tok.char_end)
            {
                out.push(format!("token out of text bounds: sentence {i}, token {t}"));
            }
            if tok.char_start < prev_end {
                out.push(format!("overlapping or unordered token: sentence {i}, token {t}"));
            }
            prev_end = prev_end.max(tok.char_end);
        }
    }
    for (i, img) in story.images.iter().enumerate() {
        if img.index != i {
            out.push(format!("image index {} at position {i}", img.index));
        }
        if img.width == 0 || img.height == 0 {
            out.push(format!("image {i} has zero size"));
        }
    }
    if let Some(gold) = &story.gold {
        validate_gold(story, gold, &mut out);
    }
    out
}

fn validate_gold(story: &AnnotatedStory, gold: &GoldAnnotation, out: &mut Vec<String>) {
    let mut ids = HashSet::new();
    for chain in &gold.text_chains {
        if !ids.insert(chain.chain_id.as_str()) {
            out.push(format!("duplicate chain id {}", chain.chain_id));
        }
        if chain.mentions.is_empty() {
            out.push(format!("empty text chain {}", chain.chain_id));
        }
        if chain
            .mentions
            .windows(2)
            .any(|w| w[0].position() > w[1].position())
        {
            out.push(format!("text chain {} not in story order", chain.chain_id));
        }
        if chain.number != chain_number(&chain.mentions) {
            out.push(format!(
                "text chain {} number class disagrees with its mentions",
                chain.chain_id
            ));
        }
        for m in &chain.mentions {
            let n_tokens = story.sentences.get(m.sentence_index).map(|s| s.tokens.len());
            match n_tokens {
                None => out.push(format!(
                    "mention sentence {} out of range in chain {}",
                    m.sentence_index, chain.chain_id
                )),
                Some(n) if m.token_start >= m.token_end || m.token_end > n => out.push(format!(
                    "invalid mention span [{}, {}) in sentence {} of chain {}",
                    m.token_start, m.token_end, m.sentence_index, chain.chain_id
                )),
                Some(_) => {}
            }
        }
    }
    for chain in &gold.visual_chains {
        if !ids.insert(chain.chain_id.as_str()) {
            out.push(format!("duplicate chain id {}", chain.chain_id));
        }
        if chain.faces.is_empty() {
            out.push(format!("empty visual chain {}", chain.chain_id));
        }
        for (b, face) in chain.faces.iter().enumerate() {
            validate_box(
                story,
                face,
                &format!("visual chain {}, box {b}", chain.chain_id),
                out,
            );
        }
    }
    let mut seen_t = HashSet::new();
    let mut seen_v = HashSet::new();
    for (t, v) in &gold.alignment {
        if !gold.text_chains.iter().any(|c| c.chain_id == *t) {
            out.push(format!("alignment references unknown text chain {t}"));
        }
        if !gold.visual_chains.iter().any(|c| c.chain_id == *v) {
            out.push(format!("alignment references unknown visual chain {v}"));
        }
        if !seen_t.insert(t) {
            out.push(format!("text chain {t} aligned more than once"));
        }
        if !seen_v.insert(v) {
            out.push(format!("visual chain {v} aligned more than once"));
        }
    }
    for (id, stars) in &gold.importance {
        if !ids.contains(id.as_str()) {
            out.push(format!("importance references unknown chain {id}"));
        }
        if !(1..=5).contains(stars) {
            out.push(format!("stars out of range for {id}: {stars}"));
        }
    }
}

fn validate_box(story: &AnnotatedStory, face: &FaceInstance, what: &str, out: &mut Vec<String>) {
    let b = &face.bbox;
    if !b.is_finite() {
        out.push(format!("non-finite bounding box: {what}"));
        return;
    }
    if b.w <= 0.0 || b.h <= 0.0 {
        out.push(format!("degenerate bounding box: {what}"));
        return;
    }
    match story.images.get(face.image_index) {
        None => out.push(format!("image index {} out of range: {what}", face.image_index)),
        Some(img) => {
            if b.x < 0.0 || b.y < 0.0 || b.right() > img.width as f64 || b.bottom() > img.height as f64 {
                out.push(format!("bounding box outside image bounds: {what}"));
            }
        }
    }
}

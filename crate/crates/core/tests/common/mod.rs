//! Synthetic stories for integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use charground::model::{
    AnnotatedStory, BoundingBox, FaceInstance, GoldAnnotation, ImageDesc, Mention, MentionKind, Number,
    Sentence, TextChain, Token, VisualChain,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub const SLOTS: usize = 5;
pub const IMAGE_WIDTH: u32 = 1000;
pub const IMAGE_HEIGHT: u32 = 480;

const SINGULAR: [&str; 8] = ["man", "woman", "dog", "girl", "boy", "cat", "horse", "baby"];
const PLURAL: [&str; 3] = ["kids", "friends", "people"];

#[derive(Debug, Clone)]
pub struct Character {
    /// Head noun; plural nouns are tagged NNS.
    pub noun: &'static str,
    pub plural: bool,
    pub sentences: Vec<usize>,
    pub images: Vec<usize>,
    pub stars: Option<u8>,
}

impl Character {
    pub fn new(noun: &'static str, sentences: &[usize], images: &[usize]) -> Self {
        Character {
            noun,
            plural: PLURAL.contains(&noun),
            sentences: sentences.to_vec(),
            images: images.to_vec(),
            stars: None,
        }
    }

    pub fn stars(mut self, stars: u8) -> Self {
        self.stars = Some(stars);
        self
    }
}

fn body_box(slot: usize) -> BoundingBox {
    BoundingBox::new(10.0 + 110.0 * slot as f64, 20.0, 90.0, 400.0)
}

/// Face box inside the body box of character `slot`.
pub fn face_box(slot: usize) -> BoundingBox {
    BoundingBox::new(30.0 + 110.0 * slot as f64, 30.0, 40.0, 40.0)
}

/// Builds a story in which sentence `s` mentions every character whose
/// `sentences` contain `s` ("the man and the dog ...") and image `i` shows
/// every character whose `images` contain `i`. Characters with sentences
/// get a text chain, characters with images a visual chain; characters with
/// both are aligned.
pub fn story(id: &str, characters: &[Character]) -> AnnotatedStory {
    let mut sentences = Vec::with_capacity(SLOTS);
    let mut mentions: Vec<Vec<Mention>> = vec![Vec::new(); characters.len()];
    for s in 0..SLOTS {
        let mut words: Vec<(String, &str)> = Vec::new();
        for (c, ch) in characters.iter().enumerate() {
            if !ch.sentences.contains(&s) {
                continue;
            }
            if !words.is_empty() {
                words.push(("and".into(), "CC"));
            }
            words.push(("the".into(), "DT"));
            mentions[c].push(Mention {
                sentence_index: s,
                token_start: words.len(),
                token_end: words.len() + 1,
                surface: ch.noun.into(),
                number: if ch.plural {
                    Number::Plural
                } else {
                    Number::Singular
                },
                kind: MentionKind::Noun,
            });
            words.push((ch.noun.into(), if ch.plural { "NNS" } else { "NN" }));
        }
        words.push(("waited".into(), "VBD"));
        words.push((".".into(), "."));
        let mut text = String::new();
        let mut tokens = Vec::new();
        for (w, pos) in words {
            if !text.is_empty() {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(&w);
            tokens.push(Token {
                text: w,
                pos: pos.into(),
                char_start: start,
                char_end: text.len(),
            });
        }
        sentences.push(Sentence {
            index: s,
            text,
            tokens,
        });
    }
    let images = (0..SLOTS)
        .map(|index| ImageDesc {
            index,
            width: IMAGE_WIDTH,
            height: IMAGE_HEIGHT,
        })
        .collect();

    let mut text_chains = Vec::new();
    let mut visual_chains = Vec::new();
    let mut alignment = Vec::new();
    let mut importance = BTreeMap::new();
    for (c, ch) in characters.iter().enumerate() {
        let tid = format!("T{c}");
        let vid = format!("V{c}");
        if !mentions[c].is_empty() {
            text_chains.push(TextChain::new(tid.clone(), mentions[c].clone()));
        }
        if !ch.images.is_empty() {
            let mut imgs = ch.images.clone();
            imgs.sort();
            let faces = imgs
                .iter()
                .map(|&i| FaceInstance {
                    image_index: i,
                    bbox: body_box(c),
                    embedding: Vec::new(),
                })
                .collect();
            visual_chains.push(VisualChain::new(vid.clone(), faces));
        }
        if !mentions[c].is_empty() && !ch.images.is_empty() {
            alignment.push((tid.clone(), vid.clone()));
        }
        if let Some(stars) = ch.stars {
            let key = if mentions[c].is_empty() { vid } else { tid };
            importance.insert(key, stars);
        }
    }
    AnnotatedStory {
        story_id: id.into(),
        sentences,
        images,
        gold: Some(GoldAnnotation {
            text_chains,
            visual_chains,
            alignment,
            importance,
        }),
    }
}

/// Random non-empty subsets of the slots, pairwise distinct.
pub fn distinct_supports(rng: &mut impl Rng, count: usize) -> Vec<Vec<usize>> {
    let mut masks: Vec<u32> = (1..(1u32 << SLOTS)).collect();
    masks.shuffle(rng);
    masks
        .into_iter()
        .take(count)
        .map(|m| (0..SLOTS).filter(|s| m & (1 << s) != 0).collect())
        .collect()
}

/// A story of 2-5 singular characters, each appearing in the same slots in
/// text and image, with pairwise distinct supports.
pub fn aligned_story(id: &str, rng: &mut impl Rng) -> AnnotatedStory {
    let n = rng.gen_range(2..=5);
    let mut nouns = SINGULAR.to_vec();
    nouns.shuffle(rng);
    let characters: Vec<Character> = distinct_supports(rng, n)
        .into_iter()
        .zip(nouns)
        .map(|(support, noun)| Character::new(noun, &support, &support).stars(rng.gen_range(1..=5)))
        .collect();
    story(id, &characters)
}

/// A story mixing aligned singular characters, a plural character,
/// text-only and visual-only characters; supports and stars are random.
pub fn mixed_story(id: &str, rng: &mut impl Rng) -> AnnotatedStory {
    let mut nouns = SINGULAR.to_vec();
    nouns.shuffle(rng);
    let mut supports = distinct_supports(rng, 5).into_iter();
    let mut characters = Vec::new();
    for noun in nouns.iter().take(rng.gen_range(1..=2)) {
        let s = supports.next().unwrap();
        characters.push(Character::new(noun, &s, &s));
    }
    if rng.gen_bool(0.7) {
        let s = supports.next().unwrap();
        characters.push(Character::new(PLURAL[rng.gen_range(0..PLURAL.len())], &s, &s));
    }
    if rng.gen_bool(0.5) {
        let s = supports.next().unwrap();
        characters.push(Character::new(nouns[3], &s, &[]));
    }
    if rng.gen_bool(0.5) {
        let s = supports.next().unwrap();
        characters.push(Character::new(nouns[4], &[], &s));
    }
    for c in &mut characters {
        if rng.gen_bool(0.9) {
            c.stars = Some(rng.gen_range(1..=5));
        }
    }
    story(id, &characters)
}

/// Face embeddings for the visual characters of a story: character `c`
/// sits at a well-separated point of a `dim`-dimensional space.
pub fn face_embeddings(story: &AnnotatedStory, dim: usize, rng: &mut impl Rng) -> Vec<FaceInstance> {
    let gold = story.gold.as_ref().expect("synthetic stories carry gold");
    let mut faces = Vec::new();
    for chain in &gold.visual_chains {
        let c: usize = chain.chain_id[1..].parse().unwrap();
        for f in &chain.faces {
            let mut v = vec![0.0f64; dim];
            v[c % dim] = 10.0;
            for x in &mut v {
                *x += rng.gen_range(-0.05..0.05);
            }
            faces.push(FaceInstance {
                image_index: f.image_index,
                bbox: face_box(c),
                embedding: v,
            });
        }
    }
    faces
}

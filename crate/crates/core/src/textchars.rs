//! Textual character detection and co-reference.
//!
//! Mentions are single tokens: pronouns (PRP, PRP$), nouns whose lemma is in
//! the character lexicon, and any token found in the group-word list. Chains
//! come either from a deterministic head-word heuristic or from an external
//! co-reference tool's output.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    is_noun_tag, is_plural_noun_tag, is_pronoun_tag, AnnotatedStory, Mention, MentionKind, Number, TextChain,
};

const DEFAULT_WORDS: &str = include_str!("../data/characters.txt");
const DEFAULT_GROUP_WORDS: &str = include_str!("../data/group_words.txt");

const PLURAL_PRONOUNS: &[&str] = &["they", "them", "their", "theirs", "we", "us", "our", "ours"];

/// Irregular plurals that the suffix rules below cannot undo.
const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("children", "child"),
    ("mice", "mouse"),
    ("geese", "goose"),
    ("oxen", "ox"),
    ("wives", "wife"),
    ("wolves", "wolf"),
    ("calves", "calf"),
    ("halves", "half"),
    ("knives", "knife"),
    ("lives", "life"),
    ("elves", "elf"),
    ("teeth", "tooth"),
    ("feet", "foot"),
    ("people", "person"),
];

/// WordNet's noun detachment rules.
const NOUN_SUFFIXES: &[(&str, &str)] = &[
    ("s", ""),
    ("ses", "s"),
    ("xes", "x"),
    ("zes", "z"),
    ("ches", "ch"),
    ("shes", "sh"),
    ("men", "man"),
    ("ies", "y"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterLexicon {
    pub words: HashSet<String>,
    pub group_words: HashSet<String>,
}

impl Default for CharacterLexicon {
    /// The bundled person/animal/vehicle lexicon and group-word list.
    fn default() -> Self {
        CharacterLexicon {
            words: parse_word_list(DEFAULT_WORDS),
            group_words: parse_word_list(DEFAULT_GROUP_WORDS),
        }
    }
}

impl CharacterLexicon {
    pub fn new<I, J, S, T>(words: I, group_words: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        CharacterLexicon {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
            group_words: group_words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        }
    }

    /// Loads lexicon files; `None` keeps the bundled list for that side.
    pub fn load(words: Option<&Path>, group_words: Option<&Path>) -> Result<Self> {
        let mut lexicon = CharacterLexicon::default();
        if let Some(path) = words {
            lexicon.words = parse_word_list(&fs::read_to_string(path)?);
        }
        if let Some(path) = group_words {
            lexicon.group_words = parse_word_list(&fs::read_to_string(path)?);
        }
        Ok(lexicon)
    }

    pub fn is_group_word(&self, lower: &str) -> bool {
        self.group_words.contains(lower)
    }

    /// Whether a lowercased noun names a character. Plural-tagged nouns are
    /// also tried in their singular forms.
    pub fn accepts_noun(&self, lower: &str, plural: bool) -> bool {
        if self.words.contains(lower) {
            return true;
        }
        plural && singular_candidates(lower).any(|c| self.words.contains(&c))
    }
}

fn parse_word_list(content: &str) -> HashSet<String> {
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

fn singular_candidates(word: &str) -> impl Iterator<Item = String> + '_ {
    let irregular = IRREGULAR_PLURALS
        .iter()
        .filter(move |(p, _)| *p == word)
        .map(|(_, s)| s.to_string());
    let detached = NOUN_SUFFIXES.iter().filter_map(move |(suffix, repl)| {
        word.strip_suffix(suffix)
            .filter(|stem| !stem.is_empty())
            .map(|stem| format!("{stem}{repl}"))
    });
    irregular.chain(detached)
}

fn is_plural_pronoun(lower: &str) -> bool {
    PLURAL_PRONOUNS.contains(&lower)
}

/// Number class of a single token under the plural/group rules.
fn token_number(lower: &str, pos: &str, lexicon: &CharacterLexicon) -> Number {
    if lexicon.is_group_word(lower) {
        Number::Group
    } else if is_plural_noun_tag(pos) || (is_pronoun_tag(pos) && is_plural_pronoun(lower)) {
        Number::Plural
    } else {
        Number::Singular
    }
}

fn kind_of(pos: &str) -> MentionKind {
    if is_pronoun_tag(pos) {
        MentionKind::Pronoun
    } else {
        MentionKind::Noun
    }
}

fn token_mention(
    story: &AnnotatedStory,
    sentence: usize,
    token: usize,
    lexicon: &CharacterLexicon,
) -> Option<Mention> {
    let tok = story.token(sentence, token)?;
    let lower = tok.text.to_lowercase();
    Some(Mention {
        sentence_index: sentence,
        token_start: token,
        token_end: token + 1,
        surface: tok.text.clone(),
        number: token_number(&lower, &tok.pos, lexicon),
        kind: kind_of(&tok.pos),
    })
}

/// Detects character mentions in story order.
pub fn detect_mentions(story: &AnnotatedStory, lexicon: &CharacterLexicon) -> Vec<Mention> {
    let mut out = Vec::new();
    for (s, sentence) in story.sentences.iter().enumerate() {
        for (t, tok) in sentence.tokens.iter().enumerate() {
            let lower = tok.text.to_lowercase();
            let is_character = lexicon.is_group_word(&lower)
                || is_pronoun_tag(&tok.pos)
                || (is_noun_tag(&tok.pos) && lexicon.accepts_noun(&lower, is_plural_noun_tag(&tok.pos)));
            if is_character {
                out.extend(token_mention(story, s, t, lexicon));
            }
        }
    }
    out
}

/// Groups mentions into chains: nouns with the same lowercase head share a
/// chain, and each pronoun joins the chain of the nearest preceding noun of
/// compatible number. Pronouns without an antecedent become singletons.
pub fn heuristic_coref(mentions: &[Mention]) -> Vec<TextChain> {
    let mut ordered: Vec<&Mention> = mentions.iter().collect();
    ordered.sort_by_key(|m| m.position());

    let mut chains: Vec<Vec<Mention>> = Vec::new();
    let mut by_head: HashMap<String, usize> = HashMap::new();
    // (chain index, mention number) of every noun seen so far
    let mut nouns: Vec<(usize, Number)> = Vec::new();

    for m in ordered {
        match m.kind {
            MentionKind::Noun => {
                let head = m.surface.to_lowercase();
                let idx = *by_head.entry(head).or_insert_with(|| {
                    chains.push(Vec::new());
                    chains.len() - 1
                });
                chains[idx].push(m.clone());
                nouns.push((idx, m.number));
            }
            MentionKind::Pronoun => {
                let wants_singular = m.number.is_singular();
                let antecedent = nouns
                    .iter()
                    .rev()
                    .find(|(_, n)| n.is_singular() == wants_singular);
                match antecedent {
                    Some(&(idx, _)) => chains[idx].push(m.clone()),
                    None => chains.push(vec![m.clone()]),
                }
            }
        }
    }
    finish_chains(chains)
}

/// Sorts chains by first mention and assigns ids `t0, t1, ...`.
fn finish_chains(chains: Vec<Vec<Mention>>) -> Vec<TextChain> {
    let mut chains: Vec<TextChain> = chains
        .into_iter()
        .filter(|c| !c.is_empty())
        .map(|c| TextChain::new(String::new(), c))
        .collect();
    chains.sort_by_key(|c| c.first_position());
    for (i, c) in chains.iter_mut().enumerate() {
        c.chain_id = format!("t{i}");
    }
    chains
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenRef {
    pub sentence_index: usize,
    pub token_index: usize,
}

/// Chains produced by an external co-reference tool, as token references.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExternalCoref {
    pub chains: Vec<Vec<TokenRef>>,
}

/// Converts external chains into [`TextChain`]s, recomputing number classes
/// from the tokens. Detected mentions not covered by any external chain are
/// appended as singletons.
pub fn ingest_external_coref(
    story: &AnnotatedStory,
    external: &ExternalCoref,
    lexicon: &CharacterLexicon,
) -> Result<Vec<TextChain>> {
    let mut covered = HashSet::new();
    let mut chains = Vec::with_capacity(external.chains.len());
    for (c, refs) in external.chains.iter().enumerate() {
        if refs.is_empty() {
            return Err(Error::data(format!("external chain {c} is empty")));
        }
        let mut mentions = Vec::with_capacity(refs.len());
        for r in refs {
            let m = token_mention(story, r.sentence_index, r.token_index, lexicon).ok_or_else(|| {
                Error::data(format!(
                    "external chain {c} references nonexistent span (sentence {}, token {}) in story {}",
                    r.sentence_index, r.token_index, story.story_id
                ))
            })?;
            if !covered.insert(m.position()) {
                return Err(Error::data(format!(
                    "token (sentence {}, token {}) appears in more than one external chain",
                    r.sentence_index, r.token_index
                )));
            }
            mentions.push(m);
        }
        chains.push(mentions);
    }
    for m in detect_mentions(story, lexicon) {
        if !covered.contains(&m.position()) {
            chains.push(vec![m]);
        }
    }
    Ok(finish_chains(chains))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::story;

    fn lexicon(words: &[&str]) -> CharacterLexicon {
        CharacterLexicon::new(words.iter().copied(), ["family", "team"])
    }

    fn summary(ms: &[Mention]) -> Vec<(String, Number, MentionKind)> {
        ms.iter().map(|m| (m.surface.clone(), m.number, m.kind)).collect()
    }

    #[test]
    fn detects_nouns_pronouns_and_plurals() {
        let s = story("a", &["the/DT man/NN walked/VBD his/PRP$ dogs/NNS"]);
        let got = detect_mentions(&s, &lexicon(&["man", "dog"]));
        assert_eq!(
            summary(&got),
            vec![
                ("man".into(), Number::Singular, MentionKind::Noun),
                ("his".into(), Number::Singular, MentionKind::Pronoun),
                ("dogs".into(), Number::Plural, MentionKind::Noun),
            ]
        );
    }

    #[test]
    fn group_word_is_group() {
        let s = story("a", &["the/DT family/NN ate/VBD"]);
        let got = detect_mentions(&s, &lexicon(&["family"]));
        assert_eq!(
            summary(&got),
            vec![("family".into(), Number::Group, MentionKind::Noun)]
        );
    }

    #[test]
    fn no_character_tokens() {
        let s = story("a", &["blue/JJ sky/NN"]);
        assert!(detect_mentions(&s, &lexicon(&["man"])).is_empty());
    }

    #[test]
    fn plural_pronouns_and_irregulars() {
        let s = story("a", &["they/PRP saw/VBD children/NNS and/CC Women/NNS"]);
        let got = detect_mentions(&s, &lexicon(&["child", "woman"]));
        let numbers: Vec<_> = got.iter().map(|m| m.number).collect();
        assert_eq!(numbers, vec![Number::Plural; 3]);
    }

    #[test]
    fn singular_noun_is_not_lemmatized() {
        // "dogs" tagged NN is matched as-is only
        let s = story("a", &["dogs/NN"]);
        assert!(detect_mentions(&s, &lexicon(&["dog"])).is_empty());
    }

    #[test]
    fn bundled_lexicon_loads() {
        let lex = CharacterLexicon::default();
        assert!(lex.words.contains("man") && lex.words.contains("dog"));
        assert_eq!(lex.group_words.len(), 15);
        assert!(lex.group_words.contains("family"));
    }

    fn mention(s: usize, surface: &str, number: Number, kind: MentionKind) -> Mention {
        Mention {
            sentence_index: s,
            token_start: 0,
            token_end: 1,
            surface: surface.into(),
            number,
            kind,
        }
    }

    fn chain_surfaces(chains: &[TextChain]) -> Vec<Vec<&str>> {
        chains
            .iter()
            .map(|c| c.mentions.iter().map(|m| m.surface.as_str()).collect())
            .collect()
    }

    #[test]
    fn heuristic_joins_heads_and_pronouns() {
        use MentionKind::*;
        use Number::*;
        let ms = vec![
            mention(0, "man", Singular, Noun),
            mention(1, "he", Singular, Pronoun),
            mention(2, "man", Singular, Noun),
        ];
        assert_eq!(
            chain_surfaces(&heuristic_coref(&ms)),
            vec![vec!["man", "he", "man"]]
        );
    }

    #[test]
    fn plural_pronoun_skips_singular_chain() {
        use MentionKind::*;
        use Number::*;
        let ms = vec![
            mention(0, "man", Singular, Noun),
            mention(1, "dogs", Plural, Noun),
            mention(2, "they", Plural, Pronoun),
        ];
        let chains = heuristic_coref(&ms);
        assert_eq!(chain_surfaces(&chains), vec![vec!["man"], vec!["dogs", "they"]]);
        assert_eq!(chains[1].number, Plural);
        assert_eq!(chains[1].chain_id, "t1");
    }

    #[test]
    fn orphan_pronoun_is_singleton() {
        let ms = vec![mention(0, "he", Number::Singular, MentionKind::Pronoun)];
        assert_eq!(chain_surfaces(&heuristic_coref(&ms)), vec![vec!["he"]]);
    }

    fn coref_story() -> AnnotatedStory {
        story(
            "c",
            &[
                "the/DT man/NN came/VBD",
                "he/PRP sat/VBD",
                "a/DT dog/NN barked/VBD",
                "x/NN",
                "y/NN",
            ],
        )
    }

    #[test]
    fn external_chain_is_ingested() {
        let s = coref_story();
        let ext = ExternalCoref {
            chains: vec![vec![
                TokenRef {
                    sentence_index: 0,
                    token_index: 1,
                },
                TokenRef {
                    sentence_index: 1,
                    token_index: 0,
                },
            ]],
        };
        let chains = ingest_external_coref(&s, &ext, &lexicon(&["man"])).unwrap();
        assert_eq!(chain_surfaces(&chains), vec![vec!["man", "he"]]);
        assert_eq!(chains[0].number, Number::Singular);
    }

    #[test]
    fn external_span_out_of_range() {
        let s = coref_story();
        let ext = ExternalCoref {
            chains: vec![vec![TokenRef {
                sentence_index: 9,
                token_index: 0,
            }]],
        };
        let err = ingest_external_coref(&s, &ext, &lexicon(&["man"])).unwrap_err();
        assert!(err.to_string().contains("sentence 9"));
    }

    #[test]
    fn uncovered_mentions_become_singletons() {
        let s = coref_story();
        let ext = ExternalCoref {
            chains: vec![vec![
                TokenRef {
                    sentence_index: 0,
                    token_index: 1,
                },
                TokenRef {
                    sentence_index: 1,
                    token_index: 0,
                },
            ]],
        };
        let chains = ingest_external_coref(&s, &ext, &lexicon(&["man", "dog"])).unwrap();
        assert_eq!(chain_surfaces(&chains), vec![vec!["man", "he"], vec!["dog"]]);
    }

    #[test]
    fn duplicate_external_token_rejected() {
        let s = coref_story();
        let r = TokenRef {
            sentence_index: 0,
            token_index: 1,
        };
        let ext = ExternalCoref {
            chains: vec![vec![r], vec![r]],
        };
        assert!(ingest_external_coref(&s, &ext, &lexicon(&["man"])).is_err());
    }
}

//! Grounding textual chains to visual chains.
//!
//! Singular text chains and visual chains form a bipartite graph weighted by
//! chain similarity; the maximum-weight matching gives the one-to-one
//! alignment. Plural and group text chains are handled afterwards: each
//! still-unmatched visual chain joins its best-scoring plural/group chain
//! when that score clears the threshold.

mod hungarian;

pub use hungarian::kuhn_munkres;

use std::collections::HashSet;

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::model::{FaceInstance, MultiModalChain, SimilarityMatrix, TextChain, VisualChain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityMethod {
    /// Co-occurrence of sentence and image slots.
    Distributional,
    /// Mean pairwise cosine similarity of mention and face embeddings.
    Embedding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundingConfig {
    pub method: SimilarityMethod,
    pub plural_threshold: f64,
    pub drop_zero_similarity: bool,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        GroundingConfig {
            method: SimilarityMethod::Distributional,
            plural_threshold: 0.6,
            drop_zero_similarity: true,
        }
    }
}

impl GroundingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.plural_threshold) {
            return Err(Error::parameter(format!(
                "plural threshold {} outside [0, 1]",
                self.plural_threshold
            )));
        }
        Ok(())
    }
}

/// Indices refer to the full text and visual chain lists of a story.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Alignment {
    /// (text index, visual index, score)
    pub pairs: Vec<(usize, usize, f64)>,
    /// (visual index, plural/group text index, score)
    pub plural_attachments: Vec<(usize, usize, f64)>,
}

/// Anything that occupies sentence or image slots of a story.
pub trait Slots {
    fn slots(&self) -> Vec<usize>;
}

impl Slots for TextChain {
    fn slots(&self) -> Vec<usize> {
        self.mentions.iter().map(|m| m.sentence_index).collect()
    }
}

impl Slots for VisualChain {
    fn slots(&self) -> Vec<usize> {
        self.faces.iter().map(|f| f.image_index).collect()
    }
}

/// Binary vector with a one at every slot the chain occupies.
pub fn presence_vector(chain: &impl Slots, slots: usize) -> Result<Vec<bool>> {
    let mut v = vec![false; slots];
    for s in chain.slots() {
        *v.get_mut(s)
            .ok_or_else(|| Error::data(format!("slot {s} out of range for a story of {slots}")))? = true;
    }
    Ok(v)
}

/// `(t · v) / (|t|₁ |v|₁)` for binary presence vectors.
pub fn distributional_similarity(t: &[bool], v: &[bool]) -> Result<f64> {
    if t.len() != v.len() {
        return Err(Error::parameter("presence vectors differ in length"));
    }
    let dot = t.iter().zip(v).filter(|(a, b)| **a && **b).count();
    let nt = t.iter().filter(|x| **x).count();
    let nv = v.iter().filter(|x| **x).count();
    if nt == 0 || nv == 0 {
        return Err(Error::data("presence vector has no occupied slot"));
    }
    Ok(dot as f64 / (nt * nv) as f64)
}

fn cosine01(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::data(format!(
            "embedding dimensions differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x, y);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::data("zero-norm embedding"));
    }
    let cos = (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0);
    Ok((cos + 1.0) / 2.0)
}

/// Mean over all mention/face pairs of the cosine similarity mapped to
/// `[0, 1]` via `(cos + 1) / 2`.
pub fn embedding_chain_similarity(text: &[&[f64]], visual: &[&[f64]]) -> Result<f64> {
    if text.is_empty() || visual.is_empty() {
        return Err(Error::data("chain has no embeddings"));
    }
    let mut total = 0.0;
    for t in text {
        for v in visual {
            total += cosine01(t, v)?;
        }
    }
    Ok((total / (text.len() * visual.len()) as f64).clamp(0.0, 1.0))
}

/// Scores text/visual chain pairs of one story under a similarity method.
#[derive(Debug, Clone, Copy)]
pub struct ChainScorer<'a> {
    pub slots: usize,
    pub method: SimilarityMethod,
    pub embeddings: Option<&'a EmbeddingTable>,
}

impl<'a> ChainScorer<'a> {
    fn text_vectors(&self, chain: &TextChain) -> Result<Vec<&'a [f64]>> {
        let table = self.table()?;
        chain
            .mentions
            .iter()
            .map(|m| {
                table.mention_vector(&m.surface).ok_or_else(|| {
                    Error::data(format!(
                        "no embedding for mention {:?} of text chain {}",
                        m.surface, chain.chain_id
                    ))
                })
            })
            .collect()
    }

    fn visual_vectors<'c>(&self, chain: &'c VisualChain) -> Result<Vec<&'c [f64]>>
    where
        'a: 'c,
    {
        chain
            .faces
            .iter()
            .map(|f: &'c FaceInstance| {
                if !f.embedding.is_empty() {
                    return Ok(f.embedding.as_slice());
                }
                self.table()?.face_vector(f.image_index, &f.bbox).ok_or_else(|| {
                    Error::data(format!(
                        "no embedding for a face in image {} of visual chain {}",
                        f.image_index, chain.chain_id
                    ))
                })
            })
            .collect()
    }

    fn table(&self) -> Result<&'a EmbeddingTable> {
        self.embeddings
            .ok_or_else(|| Error::data("embedding similarity requires an embedding table"))
    }

    pub fn score(&self, text: &TextChain, visual: &VisualChain) -> Result<f64> {
        match self.method {
            SimilarityMethod::Distributional => distributional_similarity(
                &presence_vector(text, self.slots)?,
                &presence_vector(visual, self.slots)?,
            ),
            SimilarityMethod::Embedding => {
                embedding_chain_similarity(&self.text_vectors(text)?, &self.visual_vectors(visual)?)
            }
        }
    }
}

/// Similarity matrix over the singular text chains (rows) and all visual
/// chains (columns). Also returns the text-chain index of each row.
pub fn build_similarity_matrix(
    text_chains: &[TextChain],
    visual_chains: &[VisualChain],
    scorer: &ChainScorer<'_>,
) -> Result<(SimilarityMatrix, Vec<usize>)> {
    let rows: Vec<usize> = text_chains
        .iter()
        .enumerate()
        .filter(|(_, c)| c.number.is_singular())
        .map(|(i, _)| i)
        .collect();
    let mut values = Vec::with_capacity(rows.len() * visual_chains.len());
    for &r in &rows {
        for v in visual_chains {
            values.push(scorer.score(&text_chains[r], v)?);
        }
    }
    let matrix = SimilarityMatrix::new(rows.len(), visual_chains.len(), values)
        .ok_or_else(|| Error::data("similarity outside [0, 1]"))?;
    Ok((matrix, rows))
}

/// Attaches each visual chain not in `matched` to its best-scoring plural or
/// group text chain when the score is strictly above `threshold`. Ties go to
/// the earlier text chain.
pub fn attach_plural_group(
    text_chains: &[TextChain],
    visual_chains: &[VisualChain],
    matched: &HashSet<usize>,
    scorer: &ChainScorer<'_>,
    threshold: f64,
) -> Result<Vec<(usize, usize, f64)>> {
    let plural: Vec<usize> = text_chains
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.number.is_singular())
        .map(|(i, _)| i)
        .collect();
    let mut out = Vec::new();
    if plural.is_empty() {
        return Ok(out);
    }
    for (vi, visual) in visual_chains.iter().enumerate() {
        if matched.contains(&vi) {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for &ti in &plural {
            let s = scorer.score(&text_chains[ti], visual)?;
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((ti, s));
            }
        }
        if let Some((ti, s)) = best {
            if s > threshold {
                out.push((vi, ti, s));
            }
        }
    }
    Ok(out)
}

/// Full grounding of one story: singular matching then plural/group attachment.
pub fn align(
    text_chains: &[TextChain],
    visual_chains: &[VisualChain],
    slots: usize,
    embeddings: Option<&EmbeddingTable>,
    cfg: &GroundingConfig,
) -> Result<Alignment> {
    cfg.validate()?;
    let scorer = ChainScorer {
        slots,
        method: cfg.method,
        embeddings,
    };
    let (matrix, rows) = build_similarity_matrix(text_chains, visual_chains, &scorer)?;
    let pairs: Vec<(usize, usize, f64)> = kuhn_munkres(&matrix)
        .into_iter()
        .map(|(r, c)| (rows[r], c, matrix.get(r, c)))
        .filter(|&(_, _, s)| !(cfg.drop_zero_similarity && s <= 0.0))
        .collect();
    let matched: HashSet<usize> = pairs.iter().map(|&(_, v, _)| v).collect();
    let plural_attachments = attach_plural_group(
        text_chains,
        visual_chains,
        &matched,
        &scorer,
        cfg.plural_threshold,
    )?;
    Ok(Alignment {
        pairs,
        plural_attachments,
    })
}

/// Orders characters by importance (descending), then first occurrence,
/// then id.
pub(crate) fn sort_characters(chains: &mut [MultiModalChain]) {
    chains.sort_by(|a, b| {
        b.importance
            .cmp(&a.importance)
            .then(a.first_occurrence().cmp(&b.first_occurrence()))
            .then(a.chain_id.cmp(&b.chain_id))
    });
}

/// Builds multimodal characters from an alignment. Visual chains attached to
/// a plural/group text chain are merged into that character; every chain left
/// over becomes a uni-modal character.
pub fn assemble_multimodal(
    text_chains: &[TextChain],
    visual_chains: &[VisualChain],
    alignment: &Alignment,
) -> Result<Vec<MultiModalChain>> {
    let bad = |what: &str, i: usize| Error::data(format!("alignment references {what} chain {i}"));
    let mut visual_used = vec![false; visual_chains.len()];
    let mut text_visuals: Vec<Vec<usize>> = vec![Vec::new(); text_chains.len()];
    for &(t, v, _) in &alignment.pairs {
        text_visuals.get_mut(t).ok_or_else(|| bad("text", t))?.push(v);
    }
    for &(v, t, _) in &alignment.plural_attachments {
        text_visuals.get_mut(t).ok_or_else(|| bad("text", t))?.push(v);
    }
    let mut out = Vec::with_capacity(text_chains.len() + visual_chains.len());
    for (t, text) in text_chains.iter().enumerate() {
        let sources = &text_visuals[t];
        let mut faces = Vec::new();
        let mut ids = Vec::new();
        for &v in sources {
            let chain = visual_chains.get(v).ok_or_else(|| bad("visual", v))?;
            if std::mem::replace(&mut visual_used[v], true) {
                return Err(Error::data(format!("visual chain {v} aligned more than once")));
            }
            faces.extend(chain.faces.iter().cloned());
            ids.push(chain.chain_id.clone());
        }
        let visual = match ids.len() {
            0 => None,
            1 => Some(visual_chains[sources[0]].clone()),
            _ => Some(VisualChain::new(ids.join("+"), faces)),
        };
        out.extend(MultiModalChain::new(
            text.chain_id.clone(),
            Some(text.clone()),
            visual,
            ids,
        ));
    }
    for (v, chain) in visual_chains.iter().enumerate() {
        if !visual_used[v] {
            out.push(MultiModalChain::from_visual(chain.clone()));
        }
    }
    sort_characters(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundingBox, Mention, MentionKind, Number};

    fn text(id: &str, sentences: &[usize], number: Number) -> TextChain {
        TextChain::new(
            id,
            sentences
                .iter()
                .enumerate()
                .map(|(k, &s)| Mention {
                    sentence_index: s,
                    token_start: k,
                    token_end: k + 1,
                    surface: id.to_string(),
                    number,
                    kind: MentionKind::Noun,
                })
                .collect(),
        )
    }

    fn visual(id: &str, images: &[usize]) -> VisualChain {
        VisualChain::new(
            id,
            images
                .iter()
                .enumerate()
                .map(|(k, &i)| FaceInstance {
                    image_index: i,
                    bbox: BoundingBox::new(k as f64 * 20.0, 0.0, 10.0, 10.0),
                    embedding: vec![],
                })
                .collect(),
        )
    }

    fn dist() -> ChainScorer<'static> {
        ChainScorer {
            slots: 5,
            method: SimilarityMethod::Distributional,
            embeddings: None,
        }
    }

    #[test]
    fn presence_vectors() {
        let t = text("t", &[0, 1], Number::Singular);
        assert_eq!(
            presence_vector(&t, 5).unwrap(),
            vec![true, true, false, false, false]
        );
        let v = visual("v", &[3, 3]);
        assert_eq!(
            presence_vector(&v, 5).unwrap(),
            vec![false, false, false, true, false]
        );
        assert!(presence_vector(&visual("v", &[7]), 5).is_err());
    }

    #[test]
    fn distributional_values() {
        let b = |v: [u8; 5]| v.map(|x| x == 1).to_vec();
        assert_eq!(
            distributional_similarity(&b([1, 0, 0, 0, 0]), &b([1, 0, 0, 0, 0])).unwrap(),
            1.0
        );
        assert_eq!(
            distributional_similarity(&b([1, 1, 0, 0, 0]), &b([1, 1, 0, 0, 0])).unwrap(),
            0.5
        );
        assert_eq!(
            distributional_similarity(&b([1, 0, 0, 0, 0]), &b([0, 1, 0, 0, 0])).unwrap(),
            0.0
        );
        assert!(distributional_similarity(&b([0; 5]), &b([1, 0, 0, 0, 0])).is_err());
    }

    #[test]
    fn embedding_similarity_values() {
        let e1: &[f64] = &[1.0, 0.0];
        let e2: &[f64] = &[0.0, 1.0];
        let neg: &[f64] = &[-1.0, 0.0];
        assert_eq!(embedding_chain_similarity(&[e1], &[e1]).unwrap(), 1.0);
        assert!((embedding_chain_similarity(&[e1], &[e2, e1]).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(embedding_chain_similarity(&[e1], &[neg]).unwrap(), 0.0);
        assert!(embedding_chain_similarity(&[&[0.0, 0.0]], &[e1]).is_err());
    }

    #[test]
    fn matrix_shapes() {
        let ts = vec![
            text("a", &[0], Number::Singular),
            text("b", &[1, 2], Number::Singular),
        ];
        let vs = vec![visual("x", &[0]), visual("y", &[1])];
        let (m, rows) = build_similarity_matrix(&ts, &vs, &dist()).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        assert_eq!(rows, vec![0, 1]);
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(1, 1), 0.5);

        let (m, _) = build_similarity_matrix(&[], &vs, &dist()).unwrap();
        assert_eq!((m.rows(), m.cols()), (0, 2));

        let mixed = vec![text("a", &[0], Number::Singular), text("p", &[1], Number::Plural)];
        let (m, rows) = build_similarity_matrix(&mixed, &vs, &dist()).unwrap();
        assert_eq!(m.rows(), 1);
        assert_eq!(rows, vec![0]);
    }

    #[test]
    fn embedding_method_needs_vectors() {
        let ts = vec![text("man", &[0], Number::Singular)];
        let vs = vec![visual("x", &[0])];
        let scorer = ChainScorer {
            slots: 5,
            method: SimilarityMethod::Embedding,
            embeddings: None,
        };
        assert!(matches!(
            build_similarity_matrix(&ts, &vs, &scorer),
            Err(Error::Data(_))
        ));

        let table = EmbeddingTable::new(None, 2, vec![], vec![]).unwrap();
        let scorer = ChainScorer {
            embeddings: Some(&table),
            ..scorer
        };
        let err = build_similarity_matrix(&ts, &vs, &scorer).unwrap_err();
        assert!(err.to_string().contains("text chain man"));
    }

    #[test]
    fn plural_threshold_is_strict() {
        let matched = HashSet::new();
        let one = vec![text("p", &[2], Number::Plural)];
        let got = attach_plural_group(&one, &[visual("v", &[2])], &matched, &dist(), 0.6).unwrap();
        assert_eq!(got, vec![(0, 0, 1.0)]);

        let two = vec![text("p", &[0, 1], Number::Plural)];
        let got = attach_plural_group(&two, &[visual("v", &[0, 1])], &matched, &dist(), 0.6).unwrap();
        assert!(got.is_empty());

        let none = vec![text("s", &[0], Number::Singular)];
        assert!(
            attach_plural_group(&none, &[visual("v", &[0])], &matched, &dist(), 0.6)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn matched_visual_chains_skip_plural_stage() {
        let ts = vec![text("s", &[2], Number::Singular), text("p", &[2], Number::Group)];
        let vs = vec![visual("v", &[2])];
        let a = align(&ts, &vs, 5, None, &GroundingConfig::default()).unwrap();
        assert_eq!(a.pairs, vec![(0, 0, 1.0)]);
        assert!(a.plural_attachments.is_empty());
    }

    #[test]
    fn assemble_counts() {
        let cfg = GroundingConfig::default();
        let ts = vec![
            text("a", &[0], Number::Singular),
            text("b", &[1], Number::Singular),
        ];
        let vs = vec![visual("x", &[0]), visual("y", &[1])];
        let a = align(&ts, &vs, 5, None, &cfg).unwrap();
        assert_eq!(assemble_multimodal(&ts, &vs, &a).unwrap().len(), 2);

        let a = align(&ts, &vs[..1], 5, None, &cfg).unwrap();
        let chars = assemble_multimodal(&ts, &vs[..1], &a).unwrap();
        assert_eq!(chars.len(), 2);
        assert_eq!(chars.iter().filter(|c| c.visual.is_some()).count(), 1);

        // zero-similarity pair is dropped
        let ts = vec![text("a", &[0], Number::Singular)];
        let vs = vec![visual("x", &[3])];
        let a = align(&ts, &vs, 5, None, &cfg).unwrap();
        assert!(a.pairs.is_empty());
        assert_eq!(assemble_multimodal(&ts, &vs, &a).unwrap().len(), 2);

        let keep = GroundingConfig {
            drop_zero_similarity: false,
            ..cfg
        };
        let a = align(&ts, &vs, 5, None, &keep).unwrap();
        assert_eq!(a.pairs.len(), 1);
        assert_eq!(assemble_multimodal(&ts, &vs, &a).unwrap().len(), 1);
    }

    #[test]
    fn plural_chain_collects_visual_chains() {
        let ts = vec![text("kids", &[2, 4], Number::Plural)];
        let vs = vec![visual("x", &[2]), visual("y", &[4]), visual("z", &[0])];
        let cfg = GroundingConfig {
            plural_threshold: 0.4,
            ..Default::default()
        };
        let a = align(&ts, &vs, 5, None, &cfg).unwrap();
        assert_eq!(a.plural_attachments.len(), 2);
        let chars = assemble_multimodal(&ts, &vs, &a).unwrap();
        assert_eq!(chars.len(), 2);
        assert_eq!(chars[0].chain_id, "kids");
        assert_eq!(chars[0].importance, 4);
        assert_eq!(chars[0].visual_chain_ids, vec!["x", "y"]);
        assert_eq!(chars[0].visual.as_ref().unwrap().chain_id, "x+y");
    }
}

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::model::{BoundingBox, FaceInstance};

/// Face features keyed by (image, box) and mention vectors keyed by surface
/// string, all of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub story_id: Option<String>,
    pub dim: usize,
    pub faces: Vec<FaceInstance>,
    pub mentions: BTreeMap<String, Vec<f64>>,
    face_index: HashMap<FaceKey, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct FaceKey(usize, [u64; 4]);

impl FaceKey {
    fn new(image_index: usize, b: &BoundingBox) -> Self {
        FaceKey(
            image_index,
            [b.x.to_bits(), b.y.to_bits(), b.w.to_bits(), b.h.to_bits()],
        )
    }
}

fn check_vector(what: &str, v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::data(format!(
            "{what}: vector has length {}, expected {dim}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::data(format!("{what}: vector has a non-finite value")));
    }
    Ok(())
}

impl EmbeddingTable {
    pub fn new(
        story_id: Option<String>,
        dim: usize,
        faces: Vec<FaceInstance>,
        mentions: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::data("embedding dimension must be positive"));
        }
        let mut face_index = HashMap::with_capacity(faces.len());
        for (i, f) in faces.iter().enumerate() {
            let what = format!("face {i} (image {})", f.image_index);
            check_vector(&what, &f.embedding, dim)?;
            if face_index
                .insert(FaceKey::new(f.image_index, &f.bbox), i)
                .is_some()
            {
                return Err(Error::data(format!("{what}: duplicate face key")));
            }
        }
        let mut map = BTreeMap::new();
        for (surface, v) in mentions {
            check_vector(&format!("mention {surface:?}"), &v, dim)?;
            if map.contains_key(&surface) {
                return Err(Error::data(format!("mention {surface:?}: duplicate surface")));
            }
            map.insert(surface, v);
        }
        Ok(EmbeddingTable {
            story_id,
            dim,
            faces,
            mentions: map,
            face_index,
        })
    }

    pub fn face_vector(&self, image_index: usize, bbox: &BoundingBox) -> Option<&[f64]> {
        self.face_index
            .get(&FaceKey::new(image_index, bbox))
            .map(|&i| self.faces[i].embedding.as_slice())
    }

    /// Exact surface first, then its lowercase form.
    pub fn mention_vector(&self, surface: &str) -> Option<&[f64]> {
        self.mentions
            .get(surface)
            .or_else(|| self.mentions.get(&surface.to_lowercase()))
            .map(Vec::as_slice)
    }
}

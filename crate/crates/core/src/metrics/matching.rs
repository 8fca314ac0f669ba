use crate::model::BoundingBox;

/// How predicted mentions are identified with gold mentions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MentionMatcher {
    /// Same sentence and same lowercase head word.
    TextHeadWord,
    /// Same image and the predicted face lies entirely inside the gold body box.
    VisualFaceInBody,
    /// Same image and IoU strictly above the threshold.
    BoxIoU(f64),
}

/// A mention on either side of an evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    /// `token` only orders items; identity is (sentence, head).
    Word {
        sentence: usize,
        token: usize,
        head: String,
    },
    Region {
        image: usize,
        bbox: BoundingBox,
    },
}

impl Item {
    pub fn word(sentence: usize, token: usize, head: impl Into<String>) -> Self {
        Item::Word {
            sentence,
            token,
            head: head.into(),
        }
    }

    pub fn region(image: usize, bbox: BoundingBox) -> Self {
        Item::Region { image, bbox }
    }

    pub(crate) fn cmp_position(&self, other: &Item) -> std::cmp::Ordering {
        match (self, other) {
            (
                Item::Word {
                    sentence: s1,
                    token: t1,
                    ..
                },
                Item::Word {
                    sentence: s2,
                    token: t2,
                    ..
                },
            ) => (s1, t1).cmp(&(s2, t2)),
            (Item::Region { image: i1, bbox: b1 }, Item::Region { image: i2, bbox: b2 }) => {
                i1.cmp(i2).then(b1.x.total_cmp(&b2.x)).then(b1.y.total_cmp(&b2.y))
            }
            (Item::Word { .. }, Item::Region { .. }) => std::cmp::Ordering::Less,
            (Item::Region { .. }, Item::Word { .. }) => std::cmp::Ordering::Greater,
        }
    }
}

/// Intersection over union of two boxes' areas.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

impl MentionMatcher {
    /// Whether `pred` may be identified with `gold`; for regions also returns
    /// the IoU used to prefer the tightest candidate.
    fn affinity(&self, pred: &Item, gold: &Item) -> Option<f64> {
        match (self, pred, gold) {
            (
                MentionMatcher::TextHeadWord,
                Item::Word {
                    sentence: s1,
                    head: h1,
                    ..
                },
                Item::Word {
                    sentence: s2,
                    head: h2,
                    ..
                },
            ) => (s1 == s2 && h1 == h2).then_some(1.0),
            (
                MentionMatcher::VisualFaceInBody,
                Item::Region { image: i1, bbox: b1 },
                Item::Region { image: i2, bbox: b2 },
            ) => (i1 == i2 && b1.is_inside(b2)).then(|| iou(b1, b2)),
            (
                MentionMatcher::BoxIoU(t),
                Item::Region { image: i1, bbox: b1 },
                Item::Region { image: i2, bbox: b2 },
            ) => {
                let v = iou(b1, b2);
                (i1 == i2 && v > *t).then_some(v)
            }
            _ => None,
        }
    }
}

/// Greedy one-to-one identification of predicted with gold items.
///
/// Predicted items are visited in story order; each takes the unconsumed
/// gold item with the highest affinity (earliest gold item on ties).
/// Returns, for every predicted item, the index of its gold item.
pub fn match_items(pred: &[Item], gold: &[Item], matcher: MentionMatcher) -> Vec<Option<usize>> {
    let mut pred_order: Vec<usize> = (0..pred.len()).collect();
    pred_order.sort_by(|&a, &b| pred[a].cmp_position(&pred[b]).then(a.cmp(&b)));
    let mut gold_order: Vec<usize> = (0..gold.len()).collect();
    gold_order.sort_by(|&a, &b| gold[a].cmp_position(&gold[b]).then(a.cmp(&b)));

    let mut consumed = vec![false; gold.len()];
    let mut out = vec![None; pred.len()];
    for p in pred_order {
        let mut best: Option<(usize, f64)> = None;
        for &g in &gold_order {
            if consumed[g] {
                continue;
            }
            if let Some(a) = matcher.affinity(&pred[p], &gold[g]) {
                if best.is_none_or(|(_, b)| a > b) {
                    best = Some((g, a));
                }
            }
        }
        if let Some((g, _)) = best {
            consumed[g] = true;
            out[p] = Some(g);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h)
    }

    #[test]
    fn iou_values() {
        let a = b(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &b(20.0, 20.0, 5.0, 5.0)), 0.0);
        assert!((iou(&a, &b(5.0, 0.0, 10.0, 10.0)) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn iou_threshold_is_strict() {
        let a = b(0.0, 0.0, 100.0, 1.0);
        let gold = [Item::region(0, a)];
        // overlap 75 of union 125: IoU exactly 0.6 is not "higher than" 0.6
        let at = b(25.0, 0.0, 100.0, 1.0);
        assert_eq!(iou(&a, &at), 0.6);
        assert_eq!(
            match_items(&[Item::region(0, at)], &gold, MentionMatcher::BoxIoU(0.6)),
            vec![None]
        );
        let below = b(25.8, 0.0, 100.0, 1.0);
        assert!((iou(&a, &below) - 0.59).abs() < 0.005);
        assert_eq!(
            match_items(&[Item::region(0, below)], &gold, MentionMatcher::BoxIoU(0.6)),
            vec![None]
        );
        let above = b(20.0, 0.0, 100.0, 1.0);
        assert_eq!(
            match_items(&[Item::region(0, above)], &gold, MentionMatcher::BoxIoU(0.6)),
            vec![Some(0)]
        );
    }

    #[test]
    fn face_must_be_entirely_inside() {
        let body = b(10.0, 10.0, 50.0, 100.0);
        let inside = b(20.0, 10.0, 20.0, 20.0);
        let protruding = b(41.0, 10.0, 20.0, 20.0);
        let gold = [Item::region(0, body)];
        assert_eq!(
            match_items(
                &[Item::region(0, inside)],
                &gold,
                MentionMatcher::VisualFaceInBody
            ),
            vec![Some(0)]
        );
        assert_eq!(
            match_items(
                &[Item::region(0, protruding)],
                &gold,
                MentionMatcher::VisualFaceInBody
            ),
            vec![None]
        );
        assert_eq!(
            match_items(
                &[Item::region(1, inside)],
                &gold,
                MentionMatcher::VisualFaceInBody
            ),
            vec![None]
        );
    }

    #[test]
    fn gold_items_are_consumed_once() {
        let gold = [Item::word(0, 1, "man")];
        let pred = [Item::word(0, 1, "man"), Item::word(0, 4, "man")];
        assert_eq!(
            match_items(&pred, &gold, MentionMatcher::TextHeadWord),
            vec![Some(0), None]
        );
    }

    #[test]
    fn tightest_containing_box_wins() {
        let group = b(0.0, 0.0, 100.0, 100.0);
        let person = b(10.0, 10.0, 20.0, 40.0);
        let gold = [Item::region(0, group), Item::region(0, person)];
        let pred = [Item::region(0, person), Item::region(0, group)];
        assert_eq!(
            match_items(&pred, &gold, MentionMatcher::VisualFaceInBody),
            vec![Some(1), Some(0)]
        );
    }
}

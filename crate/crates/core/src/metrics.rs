//! Matching-based scores: SAMA, frequency precision/recall, RMSE.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;

use serde::Serialize;

use crate::assign::Assignment;
use crate::error::{Error, Result};
use crate::textio::{attr_match, ParsedShape};

/// Discrete attributes scored by SAMA. Center and rotation are continuous
/// and go through RMSE instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Shape,
    Color,
    Quadrant,
    Occlusion,
    RelativePosition,
}

impl Attribute {
    pub const ALL: [Attribute; 5] = [
        Attribute::Shape,
        Attribute::Color,
        Attribute::Quadrant,
        Attribute::Occlusion,
        Attribute::RelativePosition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Shape => "shape",
            Attribute::Color => "color",
            Attribute::Quadrant => "quadrant",
            Attribute::Occlusion => "occlusion",
            Attribute::RelativePosition => "relative_position",
        }
    }

    pub fn matches(self, gt: &ParsedShape, pred: &ParsedShape) -> bool {
        match self {
            Attribute::Shape => attr_match(&gt.shape, &pred.shape),
            Attribute::Color => attr_match(&gt.color, &pred.color),
            Attribute::Quadrant => attr_match(&gt.quadrant, &pred.quadrant),
            Attribute::Occlusion => attr_match(&gt.occluded, &pred.occluded),
            Attribute::RelativePosition => attr_match(&gt.relative_position, &pred.relative_position),
        }
    }

    /// The attribute as an opaque class label, `None` for NA.
    pub fn label(self, p: &ParsedShape) -> Option<String> {
        match self {
            Attribute::Shape => p.shape.map(|v| v.to_string()),
            Attribute::Color => p.color.map(|v| v.to_string()),
            Attribute::Quadrant => p.quadrant.map(|v| v.to_string()),
            Attribute::Occlusion => p.occluded.map(|v| if v { "yes" } else { "no" }.to_string()),
            Attribute::RelativePosition => p.relative_position.clone(),
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// SAMA of one sample, overall and per attribute.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSama {
    pub accuracy: f64,
    pub per_attribute: BTreeMap<Attribute, f64>,
}

/// Fraction of discrete attributes that agree over matched pairs, with the
/// ground-truth shape count in the denominator so missed shapes score zero.
pub fn sama_sample(gt: &[ParsedShape], pred: &[ParsedShape], asg: &Assignment) -> Result<SampleSama> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let mut hits: BTreeMap<Attribute, usize> = Attribute::ALL.iter().map(|&a| (a, 0)).collect();
    for &(g, p) in &asg.pairs {
        for attr in Attribute::ALL {
            if attr.matches(&gt[g], &pred[p]) {
                *hits.get_mut(&attr).expect("all attributes present") += 1;
            }
        }
    }
    let n = gt.len() as f64;
    let total: usize = hits.values().sum();
    Ok(SampleSama {
        accuracy: total as f64 / (Attribute::ALL.len() as f64 * n),
        per_attribute: hits.into_iter().map(|(a, h)| (a, h as f64 / n)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamaResult {
    pub per_sample_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    pub per_attribute_accuracy: BTreeMap<Attribute, f64>,
}

pub fn sama_dataset(samples: &[SampleSama]) -> Result<SamaResult> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("SAMA needs at least one sample".into()));
    }
    let n = samples.len() as f64;
    let per_sample_accuracy: Vec<f64> = samples.iter().map(|s| s.accuracy).collect();
    let per_attribute_accuracy = Attribute::ALL
        .iter()
        .map(|&a| (a, samples.iter().map(|s| s.per_attribute[&a]).sum::<f64>() / n))
        .collect();
    Ok(SamaResult {
        mean_accuracy: per_sample_accuracy.iter().sum::<f64>() / n,
        per_sample_accuracy,
        per_attribute_accuracy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreqPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub total_correct: usize,
    pub true_total: usize,
    pub pred_total: usize,
}

impl FreqPrf {
    pub fn from_counts(total_correct: usize, true_total: usize, pred_total: usize) -> Self {
        let ratio = |a: usize, b: usize| if b > 0 { a as f64 / b as f64 } else { 0.0 };
        let precision = ratio(total_correct, pred_total);
        let recall = ratio(total_correct, true_total);
        FreqPrf {
            precision,
            recall,
            f1: f1(precision, recall),
            total_correct,
            true_total,
            pred_total,
        }
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Precision and recall from class-frequency vectors: the per-class correct
/// count is `min(gt, pred)`, and NA (`None`) is left out of every total.
pub fn freq_pr<T: Eq + Hash>(gt: &[Option<T>], pred: &[Option<T>]) -> FreqPrf {
    let mut counts: HashMap<&T, (usize, usize)> = HashMap::new();
    for v in gt.iter().flatten() {
        counts.entry(v).or_default().0 += 1;
    }
    for v in pred.iter().flatten() {
        counts.entry(v).or_default().1 += 1;
    }
    let (mut correct, mut true_total, mut pred_total) = (0, 0, 0);
    for &(g, p) in counts.values() {
        correct += g.min(p);
        true_total += g;
        pred_total += p;
    }
    FreqPrf::from_counts(correct, true_total, pred_total)
}

/// Per-sample frequency P/R for one attribute.
pub fn attribute_prf(attr: Attribute, gt: &[ParsedShape], pred: &[ParsedShape]) -> FreqPrf {
    let g: Vec<Option<String>> = gt.iter().map(|p| attr.label(p)).collect();
    let p: Vec<Option<String>> = pred.iter().map(|p| attr.label(p)).collect();
    freq_pr(&g, &p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Continuous {
    Center,
    Rotation,
}

/// RMSE of one sample over its matched pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleRmse {
    /// `None` when no matched pair had a concrete prediction.
    pub rmse: Option<f64>,
    pub matched_pairs: usize,
    pub skipped_na: usize,
}

/// Center residuals pool both axes, `sqrt(mean(dx^2 + dy^2))`; rotation uses
/// raw degree differences without wrap-around.
pub fn rmse_matched(gt: &[ParsedShape], pred: &[ParsedShape], asg: &Assignment, attribute: Continuous) -> SampleRmse {
    let mut sq = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for &(g, p) in &asg.pairs {
        let residual = match attribute {
            Continuous::Center => match (gt[g].center, pred[p].center) {
                (Some(a), Some(b)) => {
                    let dx = (a.x - b.x) as f64;
                    let dy = (a.y - b.y) as f64;
                    Some(dx * dx + dy * dy)
                }
                _ => None,
            },
            Continuous::Rotation => match (gt[g].rotation_deg, pred[p].rotation_deg) {
                (Some(a), Some(b)) => Some(((a - b) as f64).powi(2)),
                _ => None,
            },
        };
        match residual {
            Some(r) => {
                sq += r;
                used += 1;
            }
            None => skipped += 1,
        }
    }
    SampleRmse {
        rmse: (used > 0).then(|| (sq / used as f64).sqrt()),
        matched_pairs: used,
        skipped_na: skipped,
    }
}

/// Same pooling as [`rmse_matched`] for float points matched by distance.
pub fn point_rmse(gt: &[[f64; 2]], pred: &[[f64; 2]], asg: &Assignment) -> Option<f64> {
    if asg.pairs.is_empty() {
        return None;
    }
    let sq: f64 = asg
        .pairs
        .iter()
        .map(|&(g, p)| (gt[g][0] - pred[p][0]).powi(2) + (gt[g][1] - pred[p][1]).powi(2))
        .sum();
    Some((sq / asg.pairs.len() as f64).sqrt())
}

/// Dataset RMSE: mean of the per-sample values that exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RmseResult {
    pub rmse: Option<f64>,
    pub samples_used: usize,
    pub samples_skipped: usize,
    pub matched_pairs: usize,
    pub skipped_na_pairs: usize,
}

pub fn rmse_dataset(samples: &[SampleRmse]) -> RmseResult {
    let values: Vec<f64> = samples.iter().filter_map(|s| s.rmse).collect();
    RmseResult {
        rmse: (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64),
        samples_used: values.len(),
        samples_skipped: samples.len() - values.len(),
        matched_pairs: samples.iter().map(|s| s.matched_pairs).sum(),
        skipped_na_pairs: samples.iter().map(|s| s.skipped_na).sum(),
    }
}

pub fn count_rmse(gt: &[i64], pred: &[i64]) -> Result<f64> {
    if gt.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: gt.len(),
            right: pred.len(),
        });
    }
    if gt.is_empty() {
        return Ok(0.0);
    }
    let sq: f64 = gt.iter().zip(pred).map(|(&g, &p)| ((g - p) as f64).powi(2)).sum();
    Ok((sq / gt.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assign::{match_by_edit_distance, match_by_euclidean};
    use crate::scene::{ColorName, Pixel, QuadrantLabel, ShapeKind};
    use proptest::prelude::*;

    fn rec(kind: ShapeKind, color: ColorName, center: (i32, i32), rot: i32) -> ParsedShape {
        ParsedShape {
            shape: Some(kind),
            color: Some(color),
            quadrant: Some(QuadrantLabel::First),
            center: Some(Pixel::new(center.0, center.1)),
            relative_position: Some("none".into()),
            rotation_deg: Some(rot),
            occluded: Some(false),
            raw_segment: format!("{color} {kind} {center:?} {rot}"),
            malformed: false,
        }
    }

    fn gt2() -> Vec<ParsedShape> {
        vec![
            rec(ShapeKind::Circle, ColorName::Red, (50, 50), 0),
            rec(ShapeKind::Square, ColorName::Blue, (150, 150), 15),
        ]
    }

    fn matched(gt: &[ParsedShape], pred: &[ParsedShape]) -> Assignment {
        let g: Vec<&str> = gt.iter().map(|p| p.raw_segment.as_str()).collect();
        let q: Vec<&str> = pred.iter().map(|p| p.raw_segment.as_str()).collect();
        match_by_edit_distance(&g, &q)
    }

    #[test]
    fn sama_examples() {
        let gt = gt2();
        let asg = matched(&gt, &gt);
        assert_eq!(sama_sample(&gt, &gt, &asg).unwrap().accuracy, 1.0);

        let mut wrong = gt.clone();
        wrong[1].color = Some(ColorName::Green);
        let asg = matched(&gt, &wrong);
        let s = sama_sample(&gt, &wrong, &asg).unwrap();
        assert!((s.accuracy - 0.9).abs() < 1e-12);
        assert_eq!(s.per_attribute[&Attribute::Color], 0.5);

        let one = vec![gt[0].clone()];
        let asg = matched(&gt, &one);
        assert!((sama_sample(&gt, &one, &asg).unwrap().accuracy - 0.5).abs() < 1e-12);

        assert!(matches!(sama_sample(&[], &one, &asg), Err(Error::EmptyGroundTruth)));
    }

    #[test]
    fn na_predictions_score_zero() {
        let gt = gt2();
        let blank = vec![ParsedShape::default(), ParsedShape::default()];
        let asg = matched(&gt, &blank);
        assert_eq!(sama_sample(&gt, &blank, &asg).unwrap().accuracy, 0.0);
    }

    #[test]
    fn sama_dataset_examples() {
        let perfect = SampleSama {
            accuracy: 1.0,
            per_attribute: Attribute::ALL.iter().map(|&a| (a, 1.0)).collect(),
        };
        let zero = SampleSama {
            accuracy: 0.0,
            per_attribute: Attribute::ALL.iter().map(|&a| (a, 0.0)).collect(),
        };
        assert_eq!(
            sama_dataset(&[perfect.clone(), perfect.clone()]).unwrap().mean_accuracy,
            1.0
        );
        let r = sama_dataset(&[perfect, zero]).unwrap();
        assert_eq!(r.mean_accuracy, 0.5);
        assert_eq!(r.per_attribute_accuracy[&Attribute::Shape], 0.5);
        assert!(sama_dataset(&[]).is_err());
    }

    #[test]
    fn frequency_worked_example() {
        use ShapeKind::*;
        let gt = [Some(Circle), Some(Circle), Some(Triangle)];
        let pt = [Some(Square), Some(Triangle), Some(Circle)];
        let r = freq_pr(&gt, &pt);
        assert_eq!((r.total_correct, r.true_total, r.pred_total), (2, 3, 3));
        assert_eq!(r.precision, 2.0 / 3.0);
        assert_eq!(r.recall, 2.0 / 3.0);

        let empty: [Option<ShapeKind>; 0] = [];
        let r = freq_pr(&gt, &empty);
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));

        let r = freq_pr(&gt, &gt);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));

        // NA is excluded from the totals
        let r = freq_pr(&gt, &[Some(Circle), None, None]);
        assert_eq!((r.total_correct, r.pred_total), (1, 1));
        assert_eq!(r.precision, 1.0);
    }

    #[test]
    fn rmse_examples() {
        let gt = vec![rec(ShapeKind::Circle, ColorName::Red, (100, 100), 30)];
        let asg = matched(&gt, &gt);
        assert_eq!(rmse_matched(&gt, &gt, &asg, Continuous::Center).rmse, Some(0.0));
        let pred = vec![rec(ShapeKind::Circle, ColorName::Red, (103, 104), 0)];
        let asg = matched(&gt, &pred);
        assert_eq!(rmse_matched(&gt, &pred, &asg, Continuous::Center).rmse, Some(5.0));
        assert_eq!(rmse_matched(&gt, &pred, &asg, Continuous::Rotation).rmse, Some(30.0));

        let mut na = pred.clone();
        na[0].center = None;
        let r = rmse_matched(&gt, &na, &asg, Continuous::Center);
        assert_eq!((r.rmse, r.matched_pairs, r.skipped_na), (None, 0, 1));
    }

    #[test]
    fn rmse_dataset_skips_empty_samples() {
        let s = [
            SampleRmse {
                rmse: Some(2.0),
                matched_pairs: 1,
                skipped_na: 0,
            },
            SampleRmse {
                rmse: None,
                matched_pairs: 0,
                skipped_na: 0,
            },
            SampleRmse {
                rmse: Some(4.0),
                matched_pairs: 2,
                skipped_na: 1,
            },
        ];
        let r = rmse_dataset(&s);
        assert_eq!(r.rmse, Some(3.0));
        assert_eq!(
            (r.samples_used, r.samples_skipped, r.matched_pairs, r.skipped_na_pairs),
            (2, 1, 3, 1)
        );
    }

    #[test]
    fn count_rmse_examples() {
        assert_eq!(count_rmse(&[1, 2], &[1, 2]).unwrap(), 0.0);
        assert_eq!(count_rmse(&[3], &[5]).unwrap(), 2.0);
        assert!((count_rmse(&[1, 2, 3], &[2, 2, 1]).unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(count_rmse(&[1], &[]).is_err());
    }

    #[test]
    fn point_rmse_after_matching() {
        let gt = [[100.0, 100.0], [10.0, 10.0]];
        let pred = [[10.0, 10.0], [103.0, 104.0]];
        let asg = match_by_euclidean(&gt, &pred).unwrap();
        assert!((point_rmse(&gt, &pred, &asg).unwrap() - (25.0f64 / 2.0).sqrt()).abs() < 1e-12);
    }

    fn arb_labels() -> impl Strategy<Value = Vec<Option<u8>>> {
        prop::collection::vec(prop::option::weighted(0.9, 0u8..5), 0..8)
    }

    proptest! {
        #[test]
        fn freq_pr_is_order_invariant(gt in arb_labels(), mut pred in arb_labels(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let a = freq_pr(&gt, &pred);
            pred.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = freq_pr(&gt, &pred);
            prop_assert_eq!(a, b);
            prop_assert!((0.0..=1.0).contains(&a.precision) && (0.0..=1.0).contains(&a.recall));
        }

        #[test]
        fn equal_cardinality_gives_equal_p_and_r(
            pairs in prop::collection::vec((0u8..5, 0u8..5), 1..8)
        ) {
            let gt: Vec<Option<u8>> = pairs.iter().map(|p| Some(p.0)).collect();
            let pred: Vec<Option<u8>> = pairs.iter().map(|p| Some(p.1)).collect();
            let r = freq_pr(&gt, &pred);
            prop_assert_eq!(r.precision, r.recall);
        }
    }
}

//! Scoring prediction files against ground truth.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::assign::{match_by_edit_distance, match_by_euclidean};
use crate::dataset::{CountCenterRecord, PredictionRecord, SceneRecord};
use crate::error::{Error, Result};
use crate::metrics::{
    attribute_prf, count_rmse, point_rmse, rmse_dataset, rmse_matched, sama_dataset, sama_sample, Attribute,
    Continuous, FreqPrf, RmseResult, SampleRmse, SampleSama,
};
use crate::scene::SceneConfig;
use crate::textio::{parse_prediction, serialize_shape, OutputFormat, ParsedShape};

/// Everything computed for one ground-truth sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleScore {
    pub sama: SampleSama,
    pub prf: BTreeMap<Attribute, FreqPrf>,
    pub center: SampleRmse,
    pub rotation: SampleRmse,
    pub segments: usize,
    pub malformed_segments: usize,
    pub na_fields: usize,
}

/// Scores one prediction text against one scene.
pub fn score_sample(scene: &SceneConfig, prediction: &str, fmt: OutputFormat) -> Result<SampleScore> {
    let gt: Vec<ParsedShape> = (0..scene.len()).map(|i| ParsedShape::from_scene(scene, i)).collect();
    let gt_text: Vec<String> = (0..scene.len()).map(|i| serialize_shape(scene, i, fmt)).collect();
    let pred = parse_prediction(prediction, fmt);
    score_parsed(&gt, &gt_text, &pred)
}

pub fn score_parsed(gt: &[ParsedShape], gt_text: &[String], pred: &[ParsedShape]) -> Result<SampleScore> {
    let pred_text: Vec<&str> = pred.iter().map(|p| p.raw_segment.as_str()).collect();
    let asg = match_by_edit_distance(gt_text, &pred_text);
    Ok(SampleScore {
        sama: sama_sample(gt, pred, &asg)?,
        prf: Attribute::ALL
            .iter()
            .map(|&a| (a, attribute_prf(a, gt, pred)))
            .collect(),
        center: rmse_matched(gt, pred, &asg, Continuous::Center),
        rotation: rmse_matched(gt, pred, &asg, Continuous::Rotation),
        segments: pred.len(),
        malformed_segments: pred.iter().filter(|p| p.malformed).count(),
        na_fields: pred.iter().map(ParsedShape::na_count).sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamaSummary {
    pub overall: f64,
    pub per_attribute: BTreeMap<Attribute, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MacroPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributePrf {
    #[serde(rename = "macro")]
    pub macro_avg: MacroPrf,
    pub micro: FreqPrf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ParseStats {
    pub missing_predictions: usize,
    pub empty_predictions: usize,
    pub segments: usize,
    pub malformed_segments: usize,
    pub na_fields: usize,
    pub unknown_ids: Vec<String>,
    pub duplicate_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapesReport {
    pub split: String,
    pub mode: &'static str,
    pub format: OutputFormat,
    pub n_samples: usize,
    pub sama: SamaSummary,
    pub prf: BTreeMap<Attribute, AttributePrf>,
    pub center_rmse: Option<f64>,
    pub rotation_rmse: Option<f64>,
    pub center: RmseResult,
    pub rotation: RmseResult,
    pub parse: ParseStats,
}

/// Indexes predictions by id, recording ids that are unknown or repeated.
/// The first occurrence of a repeated id is used.
fn index_predictions<'a, T>(
    known: &[&str],
    preds: &'a [T],
    id_of: impl Fn(&T) -> &str,
    stats: &mut ParseStats,
) -> HashMap<&'a str, &'a T> {
    let known: std::collections::HashSet<&str> = known.iter().copied().collect();
    let mut map = HashMap::new();
    for p in preds {
        let id = id_of(p);
        if !known.contains(id) {
            stats.unknown_ids.push(id.to_string());
        } else if map.insert(id, p).is_some() {
            stats.duplicate_ids.push(id.to_string());
        }
    }
    // keep the first occurrence
    for p in preds.iter().rev() {
        let id = id_of(p);
        if known.contains(id) {
            map.insert(id, p);
        }
    }
    map
}

pub fn evaluate_shapes(
    split: &str,
    gt: &[SceneRecord],
    preds: &[PredictionRecord],
    fmt: OutputFormat,
) -> Result<ShapesReport> {
    if gt.is_empty() {
        return Err(Error::InvalidConfig("ground truth contains no samples".into()));
    }
    let mut parse = ParseStats::default();
    let ids: Vec<&str> = gt.iter().map(|r| r.id.as_str()).collect();
    let by_id = index_predictions(&ids, preds, |p| p.id.as_str(), &mut parse);

    let scores: Vec<SampleScore> = gt
        .par_iter()
        .map(|rec| {
            let scene = rec.to_scene()?;
            let text = by_id.get(rec.id.as_str()).map_or("", |p| p.prediction.as_str());
            score_sample(&scene, text, fmt)
        })
        .collect::<Result<_>>()?;

    for rec in gt {
        match by_id.get(rec.id.as_str()) {
            None => parse.missing_predictions += 1,
            Some(p) if p.prediction.trim().is_empty() => parse.empty_predictions += 1,
            Some(_) => {}
        }
    }
    for s in &scores {
        parse.segments += s.segments;
        parse.malformed_segments += s.malformed_segments;
        parse.na_fields += s.na_fields;
    }

    let samas: Vec<SampleSama> = scores.iter().map(|s| s.sama.clone()).collect();
    let sama = sama_dataset(&samas)?;
    let n = scores.len() as f64;
    let prf = Attribute::ALL
        .iter()
        .map(|&a| {
            let per: Vec<&FreqPrf> = scores.iter().map(|s| &s.prf[&a]).collect();
            let macro_avg = MacroPrf {
                precision: per.iter().map(|p| p.precision).sum::<f64>() / n,
                recall: per.iter().map(|p| p.recall).sum::<f64>() / n,
                f1: per.iter().map(|p| p.f1).sum::<f64>() / n,
            };
            let micro = FreqPrf::from_counts(
                per.iter().map(|p| p.total_correct).sum(),
                per.iter().map(|p| p.true_total).sum(),
                per.iter().map(|p| p.pred_total).sum(),
            );
            (a, AttributePrf { macro_avg, micro })
        })
        .collect();
    let center = rmse_dataset(&scores.iter().map(|s| s.center).collect::<Vec<_>>());
    let rotation = rmse_dataset(&scores.iter().map(|s| s.rotation).collect::<Vec<_>>());

    Ok(ShapesReport {
        split: split.to_string(),
        mode: "shapes",
        format: fmt,
        n_samples: gt.len(),
        sama: SamaSummary {
            overall: sama.mean_accuracy,
            per_attribute: sama.per_attribute_accuracy,
        },
        prf,
        center_rmse: center.rmse,
        rotation_rmse: rotation.rmse,
        center,
        rotation,
        parse,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountCenterReport {
    pub split: String,
    pub mode: &'static str,
    pub n_samples: usize,
    pub count_rmse: f64,
    pub center_rmse: Option<f64>,
    pub matched_pairs: usize,
    pub samples_without_pairs: usize,
    pub missing_predictions: usize,
    pub unknown_ids: Vec<String>,
    pub duplicate_ids: Vec<String>,
}

/// Count RMSE over all samples and center RMSE after Euclidean matching.
/// A missing prediction counts as zero objects with no centers.
pub fn evaluate_count_center(
    split: &str,
    gt: &[CountCenterRecord],
    preds: &[CountCenterRecord],
) -> Result<CountCenterReport> {
    if gt.is_empty() {
        return Err(Error::InvalidConfig("ground truth contains no samples".into()));
    }
    let mut stats = ParseStats::default();
    let ids: Vec<&str> = gt.iter().map(|r| r.id.as_str()).collect();
    let by_id = index_predictions(&ids, preds, |p| p.id.as_str(), &mut stats);

    let mut gt_counts = Vec::with_capacity(gt.len());
    let mut pred_counts = Vec::with_capacity(gt.len());
    let mut per_sample = Vec::new();
    let mut matched_pairs = 0;
    let mut missing = 0;
    for rec in gt {
        let pred = by_id.get(rec.id.as_str());
        missing += usize::from(pred.is_none());
        gt_counts.push(rec.effective_count() as i64);
        pred_counts.push(pred.map_or(0, |p| p.effective_count() as i64));
        let gp = rec.points();
        let pp = pred.map(|p| p.points()).unwrap_or_default();
        let asg = match_by_euclidean(&gp, &pp)?;
        matched_pairs += asg.pairs.len();
        per_sample.push(point_rmse(&gp, &pp, &asg));
    }
    let used: Vec<f64> = per_sample.iter().flatten().copied().collect();
    Ok(CountCenterReport {
        split: split.to_string(),
        mode: "count_center",
        n_samples: gt.len(),
        count_rmse: count_rmse(&gt_counts, &pred_counts)?,
        center_rmse: (!used.is_empty()).then(|| used.iter().sum::<f64>() / used.len() as f64),
        matched_pairs,
        samples_without_pairs: per_sample.len() - used.len(),
        missing_predictions: missing,
        unknown_ids: stats.unknown_ids,
        duplicate_ids: stats.duplicate_ids,
    })
}

/// Flattens a JSON value into `key,value` CSV rows with dotted keys.
pub fn flatten_csv(value: &serde_json::Value) -> String {
    fn walk(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) {
        let key = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            serde_json::Value::Object(map) => {
                for (k, v) in map {
                    walk(&key(k), v, out);
                }
            }
            serde_json::Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    walk(&key(&i.to_string()), v, out);
                }
            }
            serde_json::Value::String(s) => out.push((prefix.to_string(), s.clone())),
            serde_json::Value::Null => out.push((prefix.to_string(), String::new())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", value, &mut rows);
    let quote = |s: &str| {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{},{}\n", quote(&k), quote(&v)));
    }
    out
}

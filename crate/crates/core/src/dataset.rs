//! JSONL records for scenes, targets and predictions.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genset::GeneratedScene;
use crate::scene::{Canvas, ColorName, Pixel, QuadrantLabel, Scale, SceneConfig, ShapeInstance, ShapeKind, SizeSpec};
use crate::textio::{serialize_scene, OutputFormat};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeRecord {
    pub kind: ShapeKind,
    pub color: ColorName,
    pub center: Pixel,
    pub extents: Vec<u32>,
    pub rotation_deg: i32,
    #[serde(default)]
    pub scale: Scale,
}

/// One line of `<split>.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub id: String,
    pub md5: String,
    pub canvas: Canvas,
    pub shapes: Vec<ShapeRecord>,
    pub occluded: Vec<bool>,
    pub quadrant: Vec<QuadrantLabel>,
    pub relative_position: Vec<String>,
    pub split_name: String,
    pub seed: u64,
    pub relax_fraction: f64,
}

impl SceneRecord {
    pub fn from_generated(g: &GeneratedScene) -> Self {
        let s = &g.scene;
        SceneRecord {
            id: g.id.clone(),
            md5: g.md5.clone(),
            canvas: s.canvas(),
            shapes: s
                .shapes()
                .iter()
                .map(|sh| ShapeRecord {
                    kind: sh.kind,
                    color: sh.color,
                    center: sh.center,
                    extents: sh.size.extents.clone(),
                    rotation_deg: sh.rotation_deg,
                    scale: sh.size.scale,
                })
                .collect(),
            occluded: s.occluded().to_vec(),
            quadrant: s.quadrants().to_vec(),
            relative_position: s.relative_position().to_vec(),
            split_name: g.split_name.clone(),
            seed: g.seed,
            relax_fraction: s.relax_fraction(),
        }
    }

    /// Rebuilds the scene and checks the stored derived attributes and
    /// digest against it.
    pub fn to_scene(&self) -> Result<SceneConfig> {
        let shapes = self
            .shapes
            .iter()
            .map(|r| ShapeInstance {
                kind: r.kind,
                color: r.color,
                center: r.center,
                size: SizeSpec::new(r.extents.clone(), r.scale),
                rotation_deg: r.rotation_deg,
            })
            .collect();
        let scene = SceneConfig::new(self.canvas, shapes, self.relax_fraction)?;
        let mismatch = |what: &str| {
            Err(Error::InvalidConfig(format!(
                "record `{}`: stored {what} disagrees with shapes",
                self.id
            )))
        };
        if scene.occluded() != self.occluded.as_slice() {
            return mismatch("occlusion flags");
        }
        if scene.quadrants() != self.quadrant.as_slice() {
            return mismatch("quadrants");
        }
        if scene.relative_position() != self.relative_position.as_slice() {
            return mismatch("relative positions");
        }
        if scene.canonical_hash() != self.md5 {
            return mismatch("md5");
        }
        Ok(scene)
    }
}

/// One line of `<split>.<fmt>.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub id: String,
    pub target: String,
}

impl TargetRecord {
    pub fn new(record: &SceneRecord, scene: &SceneConfig, fmt: OutputFormat) -> Self {
        TargetRecord {
            id: record.id.clone(),
            target: serialize_scene(scene, fmt),
        }
    }
}

/// One line of `predictions.jsonl`. Target files are accepted too, so a
/// target file scores as a perfect prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    #[serde(alias = "target")]
    pub prediction: String,
}

/// Count/center annotation or prediction. `count` defaults to the number of
/// centers; centers may instead be given as `boxes` (`[x0, y0, x1, y1]`),
/// in which case box centroids are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountCenterRecord {
    pub id: String,
    #[serde(default)]
    pub count: Option<u32>,
    #[serde(default)]
    pub centers: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boxes: Vec<[f64; 4]>,
}

impl CountCenterRecord {
    pub fn points(&self) -> Vec<[f64; 2]> {
        if self.centers.is_empty() {
            self.boxes
                .iter()
                .map(|b| [(b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0])
                .collect()
        } else {
            self.centers.clone()
        }
    }

    pub fn effective_count(&self) -> u32 {
        self.count.unwrap_or(self.points().len() as u32)
    }
}

/// Reads a JSONL file. Blank lines are skipped; a bad line fails with its
/// 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Writes through a temporary sibling and renames into place, so a failed
/// write leaves no partial file behind.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file_name = path.file_name().ok_or_else(|| {
        Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "no file name"),
        )
    })?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_atomic(path, |w| {
        for item in items {
            serde_json::to_writer(&mut *w, item)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genset::{builtin_split, generate_split, GenerationConfig};
    use std::collections::HashSet;

    #[test]
    fn records_round_trip_through_jsonl() {
        let spec = crate::genset::SplitSpec {
            n_samples: 5,
            ..builtin_split("od_size").unwrap()
        };
        let scenes = generate_split(&spec, &GenerationConfig::with_seed(9), &HashSet::new()).unwrap();
        let records: Vec<SceneRecord> = scenes.iter().map(SceneRecord::from_generated).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("od_size.jsonl");
        write_jsonl(&path, &records).unwrap();
        let back: Vec<SceneRecord> = read_jsonl(&path).unwrap();
        assert_eq!(back, records);
        for (r, g) in back.iter().zip(&scenes) {
            assert_eq!(r.to_scene().unwrap(), g.scene);
        }
    }

    #[test]
    fn tampered_record_is_rejected() {
        let spec = crate::genset::SplitSpec {
            n_samples: 1,
            ..builtin_split("train").unwrap()
        };
        let g = &generate_split(&spec, &GenerationConfig::default(), &HashSet::new()).unwrap()[0];
        let mut r = SceneRecord::from_generated(g);
        r.occluded[0] = !r.occluded[0];
        assert!(r.to_scene().is_err());
    }

    #[test]
    fn bad_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        fs::write(&path, "{\"id\":\"a\",\"prediction\":\"x\"}\n\nnot json\n").unwrap();
        match read_jsonl::<PredictionRecord>(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        let err = write_atomic(&path, |_| Err(std::io::Error::other("boom")));
        assert!(err.is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn box_centroids() {
        let r: CountCenterRecord = serde_json::from_str(r#"{"id":"a","boxes":[[0,0,10,20]]}"#).unwrap();
        assert_eq!(r.points(), vec![[5.0, 10.0]]);
        assert_eq!(r.effective_count(), 1);
    }
}

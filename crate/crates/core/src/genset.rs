//! Constrained scene sampling for the benchmark splits.
//!
//! A split bounds the number of shapes, the allowed rotations, a size
//! multiplier, and the size of overlap components. An overlap component is a
//! connected set in the graph whose edges are relaxed bounding-box overlaps.
//! Every split caps the largest component; out-of-domain occlusion splits
//! additionally require one component inside a given size range.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{
    bounding_box, component_sizes, overlap_graph, Aabb, Canvas, ColorName, Pixel, Scale, SceneConfig, ShapeInstance,
    ShapeKind, SizeSpec, DEFAULT_RELAX_FRACTION,
};

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

impl CountRange {
    pub const fn new(min: usize, max: usize) -> Self {
        CountRange { min, max }
    }

    pub fn contains(&self, v: usize) -> bool {
        (self.min..=self.max).contains(&v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub name: String,
    pub n_samples: usize,
    pub shapes_per_image: CountRange,
    /// Largest allowed overlap component is `max`. When `min > 1` a
    /// component with size in `[min, max]` must exist.
    pub occlusion_limit: CountRange,
    pub rotation_set: Vec<i32>,
    pub size_scale: Scale,
    pub forbid_hashes_of: Vec<String>,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("split `{}`: {m}", self.name)));
        if self.shapes_per_image.min < 1 || self.shapes_per_image.min > self.shapes_per_image.max {
            return bad(format!("bad shape range {:?}", self.shapes_per_image));
        }
        if self.occlusion_limit.min < 1 || self.occlusion_limit.min > self.occlusion_limit.max {
            return bad(format!("bad occlusion range {:?}", self.occlusion_limit));
        }
        if self.occlusion_limit.min > self.shapes_per_image.max {
            return bad("required overlap component larger than any scene".into());
        }
        if self.rotation_set.is_empty() {
            return bad("empty rotation set".into());
        }
        Ok(())
    }

    pub fn requires_component(&self) -> bool {
        self.occlusion_limit.min > 1
    }

    /// Shape counts that can satisfy the occlusion requirement.
    pub fn feasible_counts(&self) -> CountRange {
        let min = if self.requires_component() {
            self.shapes_per_image.min.max(self.occlusion_limit.min)
        } else {
            self.shapes_per_image.min
        };
        CountRange::new(min, self.shapes_per_image.max)
    }

    /// Checks a scene against the split's constraints.
    pub fn check(&self, scene: &SceneConfig) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("split `{}`: {m}", self.name)));
        if !self.shapes_per_image.contains(scene.len()) {
            return bad(format!("{} shapes", scene.len()));
        }
        for s in scene.shapes() {
            let allowed = if s.kind == ShapeKind::Circle {
                s.rotation_deg == 0
            } else {
                self.rotation_set.contains(&s.rotation_deg)
            };
            if !allowed {
                return bad(format!("{} rotated by {}", s.kind, s.rotation_deg));
            }
            if s.size.scale != self.size_scale {
                return bad(format!("scale {} instead of {}", s.size.scale, self.size_scale));
            }
        }
        let comps = component_sizes(&overlap_graph(scene.shapes(), scene.relax_fraction()));
        let largest = comps.iter().copied().max().unwrap_or(0);
        if largest > self.occlusion_limit.max {
            return bad(format!("overlap component of {largest} shapes"));
        }
        if self.requires_component() && !comps.iter().any(|&c| self.occlusion_limit.contains(c)) {
            return bad(format!("no overlap component within {:?}", self.occlusion_limit));
        }
        Ok(())
    }
}

pub const TRAIN: &str = "train";
pub const EVAL: &str = "eval";
pub const OD_COMPOSITION: &str = "od_composition";
pub const OD_SPATIAL: &str = "od_spatial";
pub const OD_OCCLUSION: &str = "od_occlusion";
pub const OD_ROTATION: &str = "od_rotation";
pub const OD_SIZE: &str = "od_size";

/// The seven benchmark splits in generation order.
pub fn builtin_split_specs() -> Vec<SplitSpec> {
    let train = SplitSpec {
        name: TRAIN.into(),
        n_samples: 20_000,
        shapes_per_image: CountRange::new(2, 4),
        occlusion_limit: CountRange::new(1, 3),
        rotation_set: vec![0, 15, 30],
        size_scale: Scale::ONE,
        forbid_hashes_of: vec![],
    };
    let derived = |name: &str, n: usize| SplitSpec {
        name: name.into(),
        n_samples: n,
        forbid_hashes_of: vec![TRAIN.into()],
        ..train.clone()
    };
    let eval = derived(EVAL, 1_000);
    let od_composition = SplitSpec {
        shapes_per_image: CountRange::new(5, 6),
        occlusion_limit: CountRange::new(5, 6),
        rotation_set: vec![45, 72],
        ..derived(OD_COMPOSITION, 200)
    };
    let od_spatial = SplitSpec {
        shapes_per_image: CountRange::new(5, 6),
        ..derived(OD_SPATIAL, 200)
    };
    let od_occlusion = SplitSpec {
        occlusion_limit: CountRange::new(4, 5),
        ..derived(OD_OCCLUSION, 200)
    };
    let od_rotation = SplitSpec {
        rotation_set: vec![45, 72],
        ..derived(OD_ROTATION, 200)
    };
    let od_size = SplitSpec {
        size_scale: Scale::integer(2).expect("positive"),
        ..derived(OD_SIZE, 200)
    };
    vec![
        train,
        eval,
        od_composition,
        od_spatial,
        od_occlusion,
        od_rotation,
        od_size,
    ]
}

pub fn builtin_split(name: &str) -> Option<SplitSpec> {
    builtin_split_specs().into_iter().find(|s| s.name == name)
}

/// Base (unscaled) extent ranges in pixels, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtentRanges {
    pub circle_radius: (u32, u32),
    pub rectangle_half: (u32, u32),
    pub ellipse_semi: (u32, u32),
    pub square_half: (u32, u32),
    pub triangle_circumradius: (u32, u32),
}

impl Default for ExtentRanges {
    fn default() -> Self {
        ExtentRanges {
            circle_radius: (15, 35),
            rectangle_half: (15, 35),
            ellipse_semi: (15, 35),
            square_half: (15, 35),
            triangle_circumradius: (18, 40),
        }
    }
}

impl ExtentRanges {
    fn all(&self) -> [(u32, u32); 5] {
        [
            self.circle_radius,
            self.rectangle_half,
            self.ellipse_semi,
            self.square_half,
            self.triangle_circumradius,
        ]
    }

    /// Whether `size` could have been drawn for `kind` at `scale`.
    pub fn admits(&self, kind: ShapeKind, size: &SizeSpec, scale: Scale) -> bool {
        let (lo, hi) = self.range_for(kind);
        let scaled = |b: u32| match kind {
            ShapeKind::Square => scale.apply(2 * b),
            _ => scale.apply(b),
        };
        size.extents.len() == kind.extent_count() && size.extents.iter().all(|&e| (lo..=hi).any(|b| scaled(b) == e))
    }

    fn range_for(&self, kind: ShapeKind) -> (u32, u32) {
        match kind {
            ShapeKind::Circle => self.circle_radius,
            ShapeKind::Rectangle => self.rectangle_half,
            ShapeKind::Ellipse => self.ellipse_semi,
            ShapeKind::Square => self.square_half,
            ShapeKind::Triangle => self.triangle_circumradius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub base_seed: u64,
    pub canvas: Canvas,
    pub extents: ExtentRanges,
    pub relax_fraction: f64,
    pub max_rejections: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            base_seed: 0,
            canvas: Canvas::default(),
            extents: ExtentRanges::default(),
            relax_fraction: DEFAULT_RELAX_FRACTION,
            max_rejections: 100_000,
        }
    }
}

impl GenerationConfig {
    pub fn with_seed(base_seed: u64) -> Self {
        GenerationConfig {
            base_seed,
            ..GenerationConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_rejections == 0 {
            return Err(Error::InvalidConfig("max_rejections must be positive".into()));
        }
        if self.extents.all().iter().any(|&(lo, hi)| lo == 0 || lo > hi) {
            return Err(Error::InvalidConfig(format!("bad extent ranges {:?}", self.extents)));
        }
        if !(0.0..0.5).contains(&self.relax_fraction) {
            return Err(Error::InvalidConfig(format!(
                "relax fraction {} outside [0, 0.5)",
                self.relax_fraction
            )));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed of one sample's RNG stream. `retry` advances past duplicates.
pub fn sample_seed(base_seed: u64, split: &str, index: usize, retry: u32) -> u64 {
    let h = splitmix64(base_seed);
    let h = splitmix64(h ^ fnv1a64(split.as_bytes()));
    let h = splitmix64(h ^ index as u64);
    splitmix64(h ^ retry as u64)
}

/// Draws one scene honoring every constraint of `spec`.
///
/// A failed constraint check discards the whole scene and starts over; after
/// `gen.max_rejections` failures the sampler gives up.
pub fn sample_scene<R: Rng>(rng: &mut R, spec: &SplitSpec, gen: &GenerationConfig) -> Result<SceneConfig> {
    sample_scene_indexed(rng, spec, gen, 0)
}

fn sample_scene_indexed<R: Rng>(
    rng: &mut R,
    spec: &SplitSpec,
    gen: &GenerationConfig,
    index: usize,
) -> Result<SceneConfig> {
    spec.validate()?;
    gen.validate()?;
    let counts = spec.feasible_counts();
    for _ in 0..gen.max_rejections {
        let count = rng.gen_range(counts.min..=counts.max);
        let cluster = spec
            .requires_component()
            .then(|| rng.gen_range(spec.occlusion_limit.min..=spec.occlusion_limit.max.min(count)));
        let Some(shapes) = draw_shapes(rng, spec, gen, count, cluster) else {
            continue;
        };
        let comps = component_sizes(&overlap_graph(&shapes, gen.relax_fraction));
        let largest = comps.iter().copied().max().unwrap_or(0);
        if largest > spec.occlusion_limit.max {
            continue;
        }
        if spec.requires_component() && !comps.iter().any(|&c| spec.occlusion_limit.contains(c)) {
            continue;
        }
        return SceneConfig::new(gen.canvas, shapes, gen.relax_fraction);
    }
    Err(Error::RejectionBudgetExhausted {
        split: spec.name.clone(),
        index,
        budget: gen.max_rejections,
    })
}

fn draw_extents<R: Rng>(rng: &mut R, kind: ShapeKind, gen: &GenerationConfig, scale: Scale) -> Vec<u32> {
    let (lo, hi) = gen.extents.range_for(kind);
    let mut draw = || rng.gen_range(lo..=hi);
    match kind {
        ShapeKind::Rectangle | ShapeKind::Ellipse => vec![scale.apply(draw()), scale.apply(draw())],
        ShapeKind::Square => vec![scale.apply(2 * draw())],
        ShapeKind::Circle | ShapeKind::Triangle => vec![scale.apply(draw())],
    }
}

/// Interval of integer centers keeping `offsets` (a box around the origin)
/// inside `[0, limit]`.
fn center_range(lo_off: i32, hi_off: i32, limit: u32) -> Option<(i32, i32)> {
    let lo = (-lo_off).max(0);
    let hi = (limit as i32 - hi_off).min(limit as i32 - 1);
    (lo <= hi).then_some((lo, hi))
}

fn draw_shapes<R: Rng>(
    rng: &mut R,
    spec: &SplitSpec,
    gen: &GenerationConfig,
    count: usize,
    cluster: Option<usize>,
) -> Option<Vec<ShapeInstance>> {
    let mut shapes = Vec::with_capacity(count);
    let mut offsets: Vec<Aabb> = Vec::with_capacity(count);
    for _ in 0..count {
        let kind = *ShapeKind::ALL.choose(rng).expect("non-empty");
        let color = *ColorName::ALL.choose(rng).expect("non-empty");
        let rotation_deg = if kind == ShapeKind::Circle {
            0
        } else {
            *spec.rotation_set.choose(rng).expect("validated non-empty")
        };
        let shape = ShapeInstance {
            kind,
            color,
            center: Pixel::new(0, 0),
            size: SizeSpec::new(draw_extents(rng, kind, gen, spec.size_scale), spec.size_scale),
            rotation_deg,
        };
        offsets.push(bounding_box(&shape));
        shapes.push(shape);
    }

    // Members of the required overlap component are placed in a chain, each
    // next to an already placed member; everything else is uniform.
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(rng);
    let cluster_size = cluster.unwrap_or(0);
    for (rank, &i) in order.iter().enumerate() {
        let off = offsets[i];
        let (xl, xh) = center_range(off.min.x, off.max.x, gen.canvas.width)?;
        let (yl, yh) = center_range(off.min.y, off.max.y, gen.canvas.height)?;
        let (x, y) = if rank > 0 && rank < cluster_size {
            let anchor = order[rng.gen_range(0..rank)];
            let a = &shapes[anchor];
            let aoff = offsets[anchor];
            let reach_x = ((aoff.width() + off.width()) as f64 * 0.4) as i32;
            let reach_y = ((aoff.height() + off.height()) as f64 * 0.4) as i32;
            let (wxl, wxh) = (xl.max(a.center.x - reach_x), xh.min(a.center.x + reach_x));
            let (wyl, wyh) = (yl.max(a.center.y - reach_y), yh.min(a.center.y + reach_y));
            if wxl > wxh || wyl > wyh {
                return None;
            }
            (rng.gen_range(wxl..=wxh), rng.gen_range(wyl..=wyh))
        } else {
            (rng.gen_range(xl..=xh), rng.gen_range(yl..=yh))
        };
        shapes[i].center = Pixel::new(x, y);
    }
    Some(shapes)
}

/// A scene together with its identity inside a split.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScene {
    pub id: String,
    pub split_name: String,
    pub index: usize,
    pub seed: u64,
    pub md5: String,
    pub scene: SceneConfig,
}

pub fn scene_id(split: &str, index: usize) -> String {
    format!("{split}_{index:05}")
}

fn generate_one(spec: &SplitSpec, gen: &GenerationConfig, index: usize, retry: u32) -> Result<GeneratedScene> {
    let seed = sample_seed(gen.base_seed, &spec.name, index, retry);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = sample_scene_indexed(&mut rng, spec, gen, index)?;
    Ok(GeneratedScene {
        id: scene_id(&spec.name, index),
        split_name: spec.name.clone(),
        index,
        seed,
        md5: scene.canonical_hash(),
        scene,
    })
}

/// Generates `spec.n_samples` scenes with pairwise distinct digests that
/// avoid `forbidden`.
///
/// Samples are drawn in parallel on the current rayon pool. Duplicates are
/// resolved afterwards in index order by redrawing from the next retry
/// stream, so the output depends only on `(gen.base_seed, spec, gen)`.
pub fn generate_split(
    spec: &SplitSpec,
    gen: &GenerationConfig,
    forbidden: &HashSet<String>,
) -> Result<Vec<GeneratedScene>> {
    spec.validate()?;
    gen.validate()?;
    let mut scenes: Vec<GeneratedScene> = (0..spec.n_samples)
        .into_par_iter()
        .map(|i| generate_one(spec, gen, i, 0))
        .collect::<Result<_>>()?;
    let mut seen: HashSet<String> = HashSet::with_capacity(scenes.len());
    for slot in scenes.iter_mut() {
        let mut retry = 0;
        while forbidden.contains(&slot.md5) || seen.contains(&slot.md5) {
            retry += 1;
            if retry as usize > gen.max_rejections {
                return Err(Error::RejectionBudgetExhausted {
                    split: spec.name.clone(),
                    index: slot.index,
                    budget: gen.max_rejections,
                });
            }
            *slot = generate_one(spec, gen, slot.index, retry)?;
        }
        seen.insert(slot.md5.clone());
    }
    Ok(scenes)
}

/// Generates several splits in order, excluding digests as each spec's
/// `forbid_hashes_of` requires. Splits that are only needed as exclusion
/// sources must be included in `specs` too.
pub fn generate_splits(specs: &[SplitSpec], gen: &GenerationConfig) -> Result<Vec<Vec<GeneratedScene>>> {
    let mut done: Vec<(String, HashSet<String>)> = Vec::new();
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut forbidden = HashSet::new();
        for name in &spec.forbid_hashes_of {
            let (_, hashes) = done
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| Error::InvalidConfig(format!("split `{}` needs `{name}` generated first", spec.name)))?;
            forbidden.extend(hashes.iter().cloned());
        }
        let scenes = generate_split(spec, gen, &forbidden)?;
        done.push((spec.name.clone(), scenes.iter().map(|s| s.md5.clone()).collect()));
        out.push(scenes);
    }
    Ok(out)
}

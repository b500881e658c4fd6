//! Shapes, scenes and the ground-truth attributes derived from them.
//!
//! Coordinates are image pixels with the origin at the top-left corner and
//! `y` growing downwards. Rotations are counter-clockwise about the shape
//! center as seen in a `y`-up view, so a positive angle turns the apex of a
//! triangle towards the left of the image.

use std::fmt;
use std::str::FromStr;

use md5::{Digest, Md5};
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const CANVAS_SIZE: u32 = 224;
pub const DEFAULT_RELAX_FRACTION: f64 = 0.05;

// Tolerance used when rounding floating-point outlines to the pixel grid so
// that analytically integral extents do not spill over by one pixel.
const SNAP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Circle,
    Rectangle,
    Ellipse,
    Triangle,
    Square,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 5] = [
        ShapeKind::Circle,
        ShapeKind::Rectangle,
        ShapeKind::Ellipse,
        ShapeKind::Triangle,
        ShapeKind::Square,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Circle => "circle",
            ShapeKind::Rectangle => "rectangle",
            ShapeKind::Ellipse => "ellipse",
            ShapeKind::Triangle => "triangle",
            ShapeKind::Square => "square",
        }
    }

    /// Number of extents stored in a [`SizeSpec`] for this kind.
    pub fn extent_count(self) -> usize {
        match self {
            ShapeKind::Rectangle | ShapeKind::Ellipse => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorName {
    Orange,
    Red,
    Blue,
    Green,
    Yellow,
    Magenta,
}

impl ColorName {
    pub const ALL: [ColorName; 6] = [
        ColorName::Orange,
        ColorName::Red,
        ColorName::Blue,
        ColorName::Green,
        ColorName::Yellow,
        ColorName::Magenta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ColorName::Orange => "orange",
            ColorName::Red => "red",
            ColorName::Blue => "blue",
            ColorName::Green => "green",
            ColorName::Yellow => "yellow",
            ColorName::Magenta => "magenta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadrantLabel {
    First,
    Second,
    Third,
    Fourth,
}

impl QuadrantLabel {
    pub const ALL: [QuadrantLabel; 4] = [
        QuadrantLabel::First,
        QuadrantLabel::Second,
        QuadrantLabel::Third,
        QuadrantLabel::Fourth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QuadrantLabel::First => "first",
            QuadrantLabel::Second => "second",
            QuadrantLabel::Third => "third",
            QuadrantLabel::Fourth => "fourth",
        }
    }
}

macro_rules! name_conversions {
    ($ty:ty, $what:literal) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            /// Case-insensitive lookup of the lowercase name.
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let s = s.trim();
                <$ty>::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name().eq_ignore_ascii_case(s))
                    .ok_or_else(|| Error::UnknownToken {
                        what: $what,
                        token: s.to_string(),
                    })
            }
        }
    };
}

name_conversions!(ShapeKind, "shape kind");
name_conversions!(ColorName, "color");
name_conversions!(QuadrantLabel, "quadrant");

/// Integer pixel position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Pixel {
    pub x: i32,
    pub y: i32,
}

impl Pixel {
    pub const fn new(x: i32, y: i32) -> Self {
        Pixel { x, y }
    }
}

impl From<[i32; 2]> for Pixel {
    fn from([x, y]: [i32; 2]) -> Self {
        Pixel { x, y }
    }
}

impl From<Pixel> for [i32; 2] {
    fn from(p: Pixel) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

impl Default for Canvas {
    fn default() -> Self {
        Canvas {
            width: CANVAS_SIZE,
            height: CANVAS_SIZE,
        }
    }
}

impl Canvas {
    pub fn contains(&self, p: Pixel) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as i64) < self.width as i64 && (p.y as i64) < self.height as i64
    }

    pub fn midpoint(&self) -> Pixel {
        Pixel::new((self.width / 2) as i32, (self.height / 2) as i32)
    }

    /// True when the box lies within `[0, width] x [0, height]`.
    pub fn fits(&self, b: &Aabb) -> bool {
        b.min.x >= 0 && b.min.y >= 0 && b.max.x <= self.width as i32 && b.max.y <= self.height as i32
    }
}

/// Positive rational size multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scale {
    num: u32,
    den: u32,
}

impl Scale {
    pub const ONE: Scale = Scale { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self, Error> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidConfig(format!("scale {num}/{den} must be positive")));
        }
        let g = gcd(num, den);
        Ok(Scale {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(n: u32) -> Result<Self, Error> {
        Scale::new(n, 1)
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `base * scale`, rounded half-up to whole pixels.
    pub fn apply(self, base: u32) -> u32 {
        let n = base as u64 * self.num as u64;
        ((2 * n + self.den as u64) / (2 * self.den as u64)) as u32
    }
}

impl Default for Scale {
    fn default() -> Self {
        Scale::ONE
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::InvalidConfig(format!("invalid scale `{s}`"));
        match s.trim().split_once('/') {
            Some((n, d)) => Scale::new(
                n.trim().parse().map_err(|_| bad())?,
                d.trim().parse().map_err(|_| bad())?,
            ),
            None => Scale::integer(s.trim().parse().map_err(|_| bad())?),
        }
    }
}

impl Serialize for Scale {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scale {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Pixel extents of a shape, already multiplied by `scale`.
///
/// | kind      | extents                      |
/// |-----------|------------------------------|
/// | circle    | `[radius]`                   |
/// | rectangle | `[half_width, half_height]`  |
/// | ellipse   | `[semi_x, semi_y]`           |
/// | square    | `[side]`                     |
/// | triangle  | `[circumradius]`             |
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SizeSpec {
    pub extents: Vec<u32>,
    #[serde(default)]
    pub scale: Scale,
}

impl SizeSpec {
    pub fn new(extents: Vec<u32>, scale: Scale) -> Self {
        SizeSpec { extents, scale }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShapeInstance {
    pub kind: ShapeKind,
    pub color: ColorName,
    pub center: Pixel,
    pub size: SizeSpec,
    pub rotation_deg: i32,
}

/// Outline of a shape in local, unrotated, `y`-up coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Outline {
    Disk { radius: f64 },
    Ellipse { semi_x: f64, semi_y: f64 },
    Rect { half_w: f64, half_h: f64 },
    Triangle { circumradius: f64 },
}

impl ShapeInstance {
    pub fn validate(&self, canvas: &Canvas) -> Result<(), Error> {
        let invalid = |msg: String| Err(Error::InvalidShape(msg));
        if self.size.extents.len() != self.kind.extent_count() {
            return invalid(format!(
                "{} needs {} extents, got {}",
                self.kind,
                self.kind.extent_count(),
                self.size.extents.len()
            ));
        }
        if self.size.extents.contains(&0) {
            return invalid(format!("{} has a zero extent", self.kind));
        }
        if self.kind == ShapeKind::Circle && self.rotation_deg != 0 {
            return invalid(format!("circle rotated by {} degrees", self.rotation_deg));
        }
        if !canvas.contains(self.center) {
            return invalid(format!("center ({}, {}) outside canvas", self.center.x, self.center.y));
        }
        if !canvas.fits(&bounding_box(self)) {
            return invalid(format!("{} does not fit the canvas", self.kind));
        }
        Ok(())
    }

    pub(crate) fn outline(&self) -> Outline {
        let e = |i: usize| self.size.extents.get(i).copied().unwrap_or(0) as f64;
        match self.kind {
            ShapeKind::Circle => Outline::Disk { radius: e(0) },
            ShapeKind::Ellipse => Outline::Ellipse {
                semi_x: e(0),
                semi_y: e(1),
            },
            ShapeKind::Rectangle => Outline::Rect {
                half_w: e(0),
                half_h: e(1),
            },
            ShapeKind::Square => Outline::Rect {
                half_w: e(0) / 2.0,
                half_h: e(0) / 2.0,
            },
            ShapeKind::Triangle => Outline::Triangle { circumradius: e(0) },
        }
    }

    /// `(cos, sin)` of the rotation, exact for multiples of 90 degrees.
    pub(crate) fn rotation_cos_sin(&self) -> (f64, f64) {
        let r = self.rotation_deg.rem_euclid(360);
        match r {
            0 => (1.0, 0.0),
            90 => (0.0, 1.0),
            180 => (-1.0, 0.0),
            270 => (0.0, -1.0),
            _ => {
                let t = (r as f64).to_radians();
                (t.cos(), t.sin())
            }
        }
    }

    /// Maps a local `y`-up offset to image coordinates, applying rotation.
    pub(crate) fn to_image(&self, local: (f64, f64)) -> (f64, f64) {
        let (c, s) = self.rotation_cos_sin();
        let (lx, ly) = local;
        let rx = lx * c - ly * s;
        let ry = lx * s + ly * c;
        (self.center.x as f64 + rx, self.center.y as f64 - ry)
    }

    /// Maps an image point to the local, unrotated `y`-up frame.
    pub(crate) fn to_local(&self, image: (f64, f64)) -> (f64, f64) {
        let (c, s) = self.rotation_cos_sin();
        let dx = image.0 - self.center.x as f64;
        let dy = self.center.y as f64 - image.1;
        (dx * c + dy * s, -dx * s + dy * c)
    }

    pub(crate) fn triangle_vertices_local(circumradius: f64) -> [(f64, f64); 3] {
        let h = 3f64.sqrt() / 2.0 * circumradius;
        [(0.0, circumradius), (-h, -circumradius / 2.0), (h, -circumradius / 2.0)]
    }

    /// Half-extents of the rotated outline's bounding box around the center.
    pub(crate) fn half_extents(&self) -> (f64, f64) {
        let (c, s) = self.rotation_cos_sin();
        let corners = |pts: &[(f64, f64)]| {
            pts.iter().fold((0f64, 0f64), |(hx, hy), &(lx, ly)| {
                let rx = lx * c - ly * s;
                let ry = lx * s + ly * c;
                (hx.max(rx.abs()), hy.max(ry.abs()))
            })
        };
        match self.outline() {
            Outline::Disk { radius } => (radius, radius),
            Outline::Ellipse { semi_x, semi_y } => (
                ((semi_x * c).powi(2) + (semi_y * s).powi(2)).sqrt(),
                ((semi_x * s).powi(2) + (semi_y * c).powi(2)).sqrt(),
            ),
            Outline::Rect { half_w, half_h } => corners(&[
                (half_w, half_h),
                (-half_w, half_h),
                (half_w, -half_h),
                (-half_w, -half_h),
            ]),
            Outline::Triangle { .. } => (f64::NAN, f64::NAN),
        }
    }

    /// Float bounding box `(min_x, min_y, max_x, max_y)` in image coordinates.
    pub(crate) fn float_bounds(&self) -> (f64, f64, f64, f64) {
        if let Outline::Triangle { circumradius } = self.outline() {
            let pts = Self::triangle_vertices_local(circumradius).map(|p| self.to_image(p));
            return pts.iter().fold(
                (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
                |(a, b, c, d), &(x, y)| (a.min(x), b.min(y), c.max(x), d.max(y)),
            );
        }
        let (hx, hy) = self.half_extents();
        let (cx, cy) = (self.center.x as f64, self.center.y as f64);
        (cx - hx, cy - hy, cx + hx, cy + hy)
    }
}

/// Axis-aligned box with integer corners, `min <= max` componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Pixel,
    pub max: Pixel,
}

impl Aabb {
    pub fn new(min: Pixel, max: Pixel) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y);
        Aabb { min, max }
    }

    pub fn from_coords(x0: i32, y0: i32, x1: i32, y1: i32) -> Self {
        Aabb::new(Pixel::new(x0, y0), Pixel::new(x1, y1))
    }

    pub fn width(&self) -> i32 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> i32 {
        self.max.y - self.min.y
    }
}

/// Tight axis-aligned box of the rotated outline, rounded outwards.
pub fn bounding_box(shape: &ShapeInstance) -> Aabb {
    let (x0, y0, x1, y1) = shape.float_bounds();
    let lo = |v: f64| (v + SNAP_EPS).floor() as i32;
    let hi = |v: f64| (v - SNAP_EPS).ceil() as i32;
    Aabb::from_coords(lo(x0), lo(y0), hi(x1), hi(y1))
}

/// Overlap test after shrinking each box towards its own center by
/// `relax_fraction` of its width and height on every side.
pub fn relaxed_overlap(a: &Aabb, b: &Aabb, relax_fraction: f64) -> bool {
    let shrink = |bx: &Aabb| {
        let dx = bx.width() as f64 * relax_fraction;
        let dy = bx.height() as f64 * relax_fraction;
        (
            bx.min.x as f64 + dx,
            bx.min.y as f64 + dy,
            bx.max.x as f64 - dx,
            bx.max.y as f64 - dy,
        )
    };
    let (ax0, ay0, ax1, ay1) = shrink(a);
    let (bx0, by0, bx1, by1) = shrink(b);
    let w = ax1.min(bx1) - ax0.max(bx0);
    let h = ay1.min(by1) - ay0.max(by0);
    w > 0.0 && h > 0.0
}

/// Adjacency matrix of the relaxed-overlap graph.
pub fn overlap_graph(shapes: &[ShapeInstance], relax_fraction: f64) -> Vec<Vec<bool>> {
    let boxes: Vec<Aabb> = shapes.iter().map(bounding_box).collect();
    let n = boxes.len();
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if relaxed_overlap(&boxes[i], &boxes[j], relax_fraction) {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    adj
}

/// Sizes of the connected components of an adjacency matrix, one per node
/// in order of the smallest node index of each component.
pub fn component_sizes(adj: &[Vec<bool>]) -> Vec<usize> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut size = 0;
        while let Some(u) = stack.pop() {
            size += 1;
            for v in 0..n {
                if adj[u][v] && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

pub fn occlusion_flags(shapes: &[ShapeInstance], relax_fraction: f64) -> Vec<bool> {
    overlap_graph(shapes, relax_fraction)
        .iter()
        .map(|row| row.iter().any(|&e| e))
        .collect()
}

/// Quadrant of a point, `first` being top-right in image coordinates.
/// Points on the vertical midline go left, points on the horizontal midline
/// go down.
pub fn quadrant(center: Pixel, canvas: &Canvas) -> QuadrantLabel {
    let mid = canvas.midpoint();
    match (center.x > mid.x, center.y < mid.y) {
        (true, true) => QuadrantLabel::First,
        (false, true) => QuadrantLabel::Second,
        (false, false) => QuadrantLabel::Third,
        (true, false) => QuadrantLabel::Fourth,
    }
}

/// Describes shape `i` relative to every other shape, in scene order.
pub fn relative_positions(shapes: &[ShapeInstance], i: usize) -> String {
    let me = &shapes[i];
    let parts: Vec<String> = shapes
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, other)| {
            let horizontal = match me.center.x.cmp(&other.center.x) {
                std::cmp::Ordering::Less => "left of",
                std::cmp::Ordering::Greater => "right of",
                std::cmp::Ordering::Equal => "aligned with",
            };
            let vertical = match me.center.y.cmp(&other.center.y) {
                std::cmp::Ordering::Less => "above",
                std::cmp::Ordering::Greater => "below",
                std::cmp::Ordering::Equal => "level with",
            };
            format!("{horizontal} and {vertical} the {} {}", other.color, other.kind)
        })
        .collect();
    if parts.is_empty() {
        "none".to_string()
    } else {
        parts.join("; ")
    }
}

/// One image's ground truth. The derived attribute lists are recomputed from
/// `shapes` on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    canvas: Canvas,
    relax_fraction: f64,
    shapes: Vec<ShapeInstance>,
    occluded: Vec<bool>,
    quadrant: Vec<QuadrantLabel>,
    relative_position: Vec<String>,
}

impl SceneConfig {
    pub fn new(canvas: Canvas, shapes: Vec<ShapeInstance>, relax_fraction: f64) -> Result<Self, Error> {
        if !(0.0..0.5).contains(&relax_fraction) {
            return Err(Error::InvalidConfig(format!(
                "relax fraction {relax_fraction} outside [0, 0.5)"
            )));
        }
        for s in &shapes {
            s.validate(&canvas)?;
        }
        let occluded = occlusion_flags(&shapes, relax_fraction);
        let quadrant = shapes.iter().map(|s| quadrant(s.center, &canvas)).collect();
        let relative_position = (0..shapes.len()).map(|i| relative_positions(&shapes, i)).collect();
        Ok(SceneConfig {
            canvas,
            relax_fraction,
            shapes,
            occluded,
            quadrant,
            relative_position,
        })
    }

    pub fn canvas(&self) -> Canvas {
        self.canvas
    }

    pub fn relax_fraction(&self) -> f64 {
        self.relax_fraction
    }

    pub fn shapes(&self) -> &[ShapeInstance] {
        &self.shapes
    }

    pub fn occluded(&self) -> &[bool] {
        &self.occluded
    }

    pub fn quadrants(&self) -> &[QuadrantLabel] {
        &self.quadrant
    }

    pub fn relative_position(&self) -> &[String] {
        &self.relative_position
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    /// `kind|color|cx,cy|extents|rot` per shape, joined by `;`.
    pub fn canonical_string(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.shapes.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            let extents: Vec<String> = s.size.extents.iter().map(u32::to_string).collect();
            out.push_str(&format!(
                "{}|{}|{},{}|{}|{}",
                s.kind,
                s.color,
                s.center.x,
                s.center.y,
                extents.join(","),
                s.rotation_deg
            ));
        }
        out
    }

    pub fn canonical_hash(&self) -> String {
        md5_hex(self.canonical_string().as_bytes())
    }

    /// Largest connected set of mutually overlapping shapes.
    pub fn max_overlap_component(&self) -> usize {
        component_sizes(&overlap_graph(&self.shapes, self.relax_fraction))
            .into_iter()
            .max()
            .unwrap_or(0)
    }
}

pub fn md5_hex(bytes: &[u8]) -> String {
    let digest = Md5::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

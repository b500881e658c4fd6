//! Sentence and Tuple targets, and attribute extraction from model output.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scene::{ColorName, Pixel, QuadrantLabel, SceneConfig, ShapeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Sentence,
    Tuple,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 2] = [OutputFormat::Sentence, OutputFormat::Tuple];

    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Sentence => "sentence",
            OutputFormat::Tuple => "tuple",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OutputFormat::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownToken {
                what: "output format",
                token: s.to_string(),
            })
    }
}

/// Attributes of one shape. `None` is the NA placeholder; use
/// [`attr_match`] to compare, which never treats NA as equal to anything.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ParsedShape {
    pub shape: Option<ShapeKind>,
    pub color: Option<ColorName>,
    pub quadrant: Option<QuadrantLabel>,
    pub center: Option<Pixel>,
    /// Stored normalized.
    pub relative_position: Option<String>,
    pub rotation_deg: Option<i32>,
    pub occluded: Option<bool>,
    pub raw_segment: String,
    pub malformed: bool,
}

/// Equality of two attribute values where NA matches nothing.
pub fn attr_match<T: PartialEq>(a: &Option<T>, b: &Option<T>) -> bool {
    matches!((a, b), (Some(x), Some(y)) if x == y)
}

impl ParsedShape {
    /// Ground-truth record for shape `i` of a scene.
    pub fn from_scene(scene: &SceneConfig, i: usize) -> Self {
        let s = &scene.shapes()[i];
        ParsedShape {
            shape: Some(s.kind),
            color: Some(s.color),
            quadrant: Some(scene.quadrants()[i]),
            center: Some(s.center),
            relative_position: Some(normalize(&scene.relative_position()[i])),
            rotation_deg: Some(s.rotation_deg),
            occluded: Some(scene.occluded()[i]),
            raw_segment: String::new(),
            malformed: false,
        }
    }

    pub fn na_count(&self) -> usize {
        [
            self.shape.is_none(),
            self.color.is_none(),
            self.quadrant.is_none(),
            self.center.is_none(),
            self.relative_position.is_none(),
            self.rotation_deg.is_none(),
            self.occluded.is_none(),
        ]
        .into_iter()
        .filter(|&na| na)
        .count()
    }

    /// Same attributes, ignoring the raw text and malformed flag.
    pub fn same_attributes(&self, other: &ParsedShape) -> bool {
        self.shape == other.shape
            && self.color == other.color
            && self.quadrant == other.quadrant
            && self.center == other.center
            && self.relative_position == other.relative_position
            && self.rotation_deg == other.rotation_deg
            && self.occluded == other.occluded
    }
}

pub fn serialize_shape(scene: &SceneConfig, i: usize, fmt: OutputFormat) -> String {
    let s = &scene.shapes()[i];
    let q = scene.quadrants()[i];
    let rel = &scene.relative_position()[i];
    let occluded = scene.occluded()[i];
    match fmt {
        OutputFormat::Sentence => format!(
            "A {} {} is located in the {} quadrant, centred at coordinates ({}, {}), with relative positions described as {}, rotated by {} degrees, and is {}.",
            s.color,
            s.kind,
            q,
            s.center.x,
            s.center.y,
            rel,
            s.rotation_deg,
            if occluded { "occluded" } else { "not occluded" }
        ),
        OutputFormat::Tuple => format!(
            "({}, quadrant={}, center_coordinates=({}, {}), relative_position={}, rotation={}, occlusion={}, color={})",
            s.kind,
            q,
            s.center.x,
            s.center.y,
            rel,
            s.rotation_deg,
            if occluded { "Yes" } else { "No" },
            s.color
        ),
    }
}

/// Per-shape segments joined by a single space.
pub fn serialize_scene(scene: &SceneConfig, fmt: OutputFormat) -> String {
    (0..scene.len())
        .map(|i| serialize_shape(scene, i, fmt))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub text: String,
    pub malformed: bool,
}

/// Splits model output into one segment per shape.
///
/// Sentence text splits after a period followed by whitespace or the end of
/// input; a trailing run without a period becomes a malformed segment.
/// Tuple text yields each top-level balanced `( ... )` group; text outside
/// groups is dropped, and an unclosed group runs to the end of input as a
/// malformed segment.
pub fn split_segments(text: &str, fmt: OutputFormat) -> Vec<Segment> {
    match fmt {
        OutputFormat::Sentence => split_sentences(text),
        OutputFormat::Tuple => split_tuples(text),
    }
}

fn split_sentences(text: &str) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c != '.' {
            continue;
        }
        let at_boundary = chars.peek().is_none_or(|&(_, n)| n.is_whitespace());
        if at_boundary {
            let end = i + c.len_utf8();
            let seg = text[start..end].trim();
            if !seg.is_empty() && seg != "." {
                out.push(Segment {
                    text: seg.to_string(),
                    malformed: false,
                });
            }
            start = end;
        }
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        out.push(Segment {
            text: rest.to_string(),
            malformed: true,
        });
    }
    out
}

fn split_tuples(text: &str) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut open_at = 0usize;
    for (i, c) in text.char_indices() {
        match c {
            '(' => {
                if depth == 0 {
                    open_at = i;
                }
                depth += 1;
            }
            ')' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    out.push(Segment {
                        text: text[open_at..=i].to_string(),
                        malformed: false,
                    });
                }
            }
            _ => {}
        }
    }
    if depth > 0 {
        out.push(Segment {
            text: text[open_at..].trim_end().to_string(),
            malformed: true,
        });
    }
    out
}

/// Lowercase, collapse whitespace runs to one space, trim.
pub fn normalize(segment: &str) -> String {
    segment.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

struct SentencePatterns {
    subject: Regex,
    quadrant: Regex,
    center: Regex,
    relative: Regex,
    rotation: Regex,
    occluded: Regex,
}

struct TuplePatterns {
    kind: Regex,
    quadrant: Regex,
    center: Regex,
    relative: Regex,
    rotation: Regex,
    occlusion: Regex,
    color: Regex,
}

fn re(pattern: &str) -> Regex {
    Regex::new(pattern).expect("static pattern")
}

fn sentence_patterns() -> &'static SentencePatterns {
    static P: OnceLock<SentencePatterns> = OnceLock::new();
    P.get_or_init(|| SentencePatterns {
        subject: re(r"(?i)^\s*an?\s+(.*?)\s+is\s+located\b"),
        quadrant: re(r"(?i)\bin\s+the\s+([a-z]+)\s+quadrant\b"),
        center: re(r"(?i)\bcoordinates\s*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)"),
        relative: re(r"(?is)\brelative\s+positions?\s+described\s+as\s+(.*?)\s*,\s*rotated\s+by\b"),
        rotation: re(r"(?i)\brotated\s+by\s+(-?\d+)\s*degrees?\b"),
        occluded: re(r"(?i)\bis\s+(not\s+)?occluded\b"),
    })
}

fn tuple_patterns() -> &'static TuplePatterns {
    static P: OnceLock<TuplePatterns> = OnceLock::new();
    P.get_or_init(|| TuplePatterns {
        kind: re(r"(?i)^\s*\(\s*([a-z]+)\s*,"),
        quadrant: re(r"(?i)\bquadrant\s*=\s*([a-z]+)"),
        center: re(r"(?i)\bcenter_coordinates\s*=\s*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)"),
        relative: re(r"(?is)\brelative_position\s*=\s*(.*?)\s*,\s*rotation\s*="),
        rotation: re(r"(?i)\brotation\s*=\s*(-?\d+)"),
        occlusion: re(r"(?i)\bocclusion\s*=\s*(yes|no|true|false)\b"),
        color: re(r"(?i)\bcolor\s*=\s*([a-z]+)"),
    })
}

fn capture<'t>(r: &Regex, text: &'t str, group: usize) -> Option<&'t str> {
    r.captures(text).and_then(|c| c.get(group)).map(|m| m.as_str())
}

fn center_from(r: &Regex, text: &str) -> Option<Pixel> {
    let c = r.captures(text)?;
    Some(Pixel::new(c[1].parse().ok()?, c[2].parse().ok()?))
}

fn relative_from(r: &Regex, text: &str) -> Option<String> {
    capture(r, text, 1).map(normalize).filter(|s| !s.is_empty())
}

/// Pattern-based attribute extraction; anything that does not match is NA.
pub fn parse_shape(segment: &str, fmt: OutputFormat) -> ParsedShape {
    let mut out = ParsedShape {
        raw_segment: segment.to_string(),
        ..ParsedShape::default()
    };
    match fmt {
        OutputFormat::Sentence => {
            let p = sentence_patterns();
            if let Some(subject) = capture(&p.subject, segment, 1) {
                let words: Vec<&str> = subject.split_whitespace().collect();
                if let Some((kind, rest)) = words.split_last() {
                    out.shape = kind.parse().ok();
                    if rest.len() == 1 {
                        out.color = rest[0].parse().ok();
                    }
                }
            }
            out.quadrant = capture(&p.quadrant, segment, 1).and_then(|q| q.parse().ok());
            out.center = center_from(&p.center, segment);
            out.relative_position = relative_from(&p.relative, segment);
            out.rotation_deg = capture(&p.rotation, segment, 1).and_then(|r| r.parse().ok());
            out.occluded = p.occluded.captures(segment).map(|c| c.get(1).is_none());
        }
        OutputFormat::Tuple => {
            let p = tuple_patterns();
            out.shape = capture(&p.kind, segment, 1).and_then(|k| k.parse().ok());
            out.quadrant = capture(&p.quadrant, segment, 1).and_then(|q| q.parse().ok());
            out.center = center_from(&p.center, segment);
            out.relative_position = relative_from(&p.relative, segment);
            out.rotation_deg = capture(&p.rotation, segment, 1).and_then(|r| r.parse().ok());
            out.occluded = capture(&p.occlusion, segment, 1)
                .map(|o| o.eq_ignore_ascii_case("yes") || o.eq_ignore_ascii_case("true"));
            out.color = capture(&p.color, segment, 1).and_then(|c| c.parse().ok());
        }
    }
    out.malformed = out.na_count() > 0;
    out
}

/// Segments and parses a whole prediction.
pub fn parse_prediction(text: &str, fmt: OutputFormat) -> Vec<ParsedShape> {
    split_segments(text, fmt)
        .into_iter()
        .map(|seg| {
            let mut p = parse_shape(&seg.text, fmt);
            p.malformed |= seg.malformed;
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Canvas, Scale, ShapeInstance, SizeSpec};

    fn one_circle() -> SceneConfig {
        SceneConfig::new(
            Canvas::default(),
            vec![ShapeInstance {
                kind: ShapeKind::Circle,
                color: ColorName::Red,
                center: Pixel::new(56, 56),
                size: SizeSpec::new(vec![20], Scale::ONE),
                rotation_deg: 0,
            }],
            0.05,
        )
        .unwrap()
    }

    fn two_shapes() -> SceneConfig {
        let mut shapes = one_circle().shapes().to_vec();
        shapes.push(ShapeInstance {
            kind: ShapeKind::Rectangle,
            color: ColorName::Blue,
            center: Pixel::new(150, 160),
            size: SizeSpec::new(vec![20, 10], Scale::ONE),
            rotation_deg: 15,
        });
        SceneConfig::new(Canvas::default(), shapes, 0.05).unwrap()
    }

    #[test]
    fn sentence_template() {
        assert_eq!(
            serialize_scene(&one_circle(), OutputFormat::Sentence),
            "A red circle is located in the second quadrant, centred at coordinates (56, 56), with relative positions described as none, rotated by 0 degrees, and is not occluded."
        );
    }

    #[test]
    fn tuple_template() {
        assert_eq!(
            serialize_scene(&one_circle(), OutputFormat::Tuple),
            "(circle, quadrant=second, center_coordinates=(56, 56), relative_position=none, rotation=0, occlusion=No, color=red)"
        );
    }

    #[test]
    fn two_shape_scene_concatenates_in_order() {
        let scene = two_shapes();
        for fmt in OutputFormat::ALL {
            let text = serialize_scene(&scene, fmt);
            let expected = format!(
                "{} {}",
                serialize_shape(&scene, 0, fmt),
                serialize_shape(&scene, 1, fmt)
            );
            assert_eq!(text, expected);
            let segs = split_segments(&text, fmt);
            assert_eq!(segs.len(), 2);
            assert!(segs.iter().all(|s| !s.malformed));
        }
    }

    #[test]
    fn tuple_splitting() {
        let segs = split_segments("(a, x=(1, 2)) junk (b)", OutputFormat::Tuple);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].text, "(a, x=(1, 2))");
        assert_eq!(segs[1].text, "(b)");

        // depth: 1, 2, back to 1 at the end -> one unclosed group
        let segs = split_segments("(a, q=1 (b, c=2)", OutputFormat::Tuple);
        assert_eq!(
            segs,
            vec![Segment {
                text: "(a, q=1 (b, c=2)".into(),
                malformed: true
            }]
        );
    }

    #[test]
    fn sentence_splitting() {
        let segs = split_segments("One thing. Two things.", OutputFormat::Sentence);
        assert_eq!(segs.len(), 2);
        let segs = split_segments("Value 1.5 is fine. And a tail", OutputFormat::Sentence);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].text, "Value 1.5 is fine.");
        assert!(segs[1].malformed);
        assert!(split_segments("   ", OutputFormat::Sentence).is_empty());
    }

    #[test]
    fn round_trip_both_formats() {
        let scene = two_shapes();
        for fmt in OutputFormat::ALL {
            let parsed = parse_prediction(&serialize_scene(&scene, fmt), fmt);
            assert_eq!(parsed.len(), 2);
            for (i, p) in parsed.iter().enumerate() {
                assert!(!p.malformed, "{p:?}");
                assert!(p.same_attributes(&ParsedShape::from_scene(&scene, i)));
            }
        }
    }

    #[test]
    fn unknown_color_is_na() {
        let seg = "A blurple circle is located in the second quadrant, centred at coordinates (56, 56), with relative positions described as none, rotated by 0 degrees, and is not occluded.";
        let p = parse_shape(seg, OutputFormat::Sentence);
        assert_eq!(p.color, None);
        assert_eq!(p.shape, Some(ShapeKind::Circle));
        assert!(p.malformed);
    }

    #[test]
    fn empty_segment_is_all_na() {
        for fmt in OutputFormat::ALL {
            let p = parse_shape("", fmt);
            assert_eq!(p.na_count(), 7);
        }
    }

    #[test]
    fn parsing_is_case_and_space_tolerant() {
        let seg = "a  RED   Circle is located in the  Second quadrant, centred at coordinates ( 56 ,56 ), with relative positions described as  Left of and above the blue square , rotated by 15 degrees, and is occluded.";
        let p = parse_shape(seg, OutputFormat::Sentence);
        assert_eq!(p.color, Some(ColorName::Red));
        assert_eq!(p.shape, Some(ShapeKind::Circle));
        assert_eq!(p.quadrant, Some(QuadrantLabel::Second));
        assert_eq!(p.center, Some(Pixel::new(56, 56)));
        assert_eq!(
            p.relative_position.as_deref(),
            Some("left of and above the blue square")
        );
        assert_eq!(p.rotation_deg, Some(15));
        assert_eq!(p.occluded, Some(true));
    }

    #[test]
    fn na_never_matches() {
        assert!(!attr_match::<i32>(&None, &None));
        assert!(!attr_match(&Some(1), &None));
        assert!(attr_match(&Some(1), &Some(1)));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("A  Red  Circle "), "a red circle");
        assert_eq!(normalize("a red circle"), "a red circle");
        assert_eq!(normalize("a\tred\n\ncircle"), "a red circle");
    }
}

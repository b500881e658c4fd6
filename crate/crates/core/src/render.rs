//! Hard-edged rasterization of scenes and PNG output.

use std::path::Path;

use crate::dataset::write_atomic;
use crate::error::{Error, Result};
use crate::scene::{bounding_box, ColorName, Outline, SceneConfig, ShapeInstance};

pub type Rgb = [u8; 3];

pub const WHITE: Rgb = [255, 255, 255];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl RgbImage {
    pub fn filled(width: u32, height: u32, color: Rgb) -> Self {
        RgbImage {
            width,
            height,
            pixels: vec![color; width as usize * height as usize],
        }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self> {
        if pixels.len() != width as usize * height as usize {
            return Err(Error::InvalidConfig(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(RgbImage { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    fn set(&mut self, x: u32, y: u32, c: Rgb) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = c;
    }

    pub fn as_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }
}

pub fn color_value(c: ColorName) -> Rgb {
    match c {
        ColorName::Orange => [255, 165, 0],
        ColorName::Red => [255, 0, 0],
        ColorName::Blue => [0, 0, 255],
        ColorName::Green => [0, 128, 0],
        ColorName::Yellow => [255, 255, 0],
        ColorName::Magenta => [255, 0, 255],
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Whether an image-space point lies inside the shape (boundary included).
pub fn contains_point(shape: &ShapeInstance, x: f64, y: f64) -> bool {
    let (lx, ly) = shape.to_local((x, y));
    match shape.outline() {
        Outline::Disk { radius } => lx * lx + ly * ly <= radius * radius,
        Outline::Ellipse { semi_x, semi_y } => (lx / semi_x).powi(2) + (ly / semi_y).powi(2) <= 1.0,
        Outline::Rect { half_w, half_h } => lx.abs() <= half_w && ly.abs() <= half_h,
        Outline::Triangle { circumradius } => {
            let [a, b, c] = ShapeInstance::triangle_vertices_local(circumradius);
            let p = (lx, ly);
            // vertices are counter-clockwise
            cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
        }
    }
}

/// Draws shapes in scene order on a white canvas. A pixel takes a shape's
/// color when its center point is inside the shape.
pub fn rasterize(scene: &SceneConfig) -> RgbImage {
    rasterize_shapes(scene.canvas().width, scene.canvas().height, scene.shapes())
}

pub fn rasterize_shapes(width: u32, height: u32, shapes: &[ShapeInstance]) -> RgbImage {
    let mut img = RgbImage::filled(width, height, WHITE);
    for shape in shapes {
        let color = color_value(shape.color);
        let b = bounding_box(shape);
        let x0 = b.min.x.max(0) as u32;
        let y0 = b.min.y.max(0) as u32;
        let x1 = (b.max.x.max(0) as u32).min(width);
        let y1 = (b.max.y.max(0) as u32).min(height);
        for y in y0..y1 {
            for x in x0..x1 {
                if contains_point(shape, x as f64 + 0.5, y as f64 + 0.5) {
                    img.set(x, y, color);
                }
            }
        }
    }
    img
}

/// 8-bit RGB PNG with fixed encoder settings, written atomically.
pub fn write_png(img: &RgbImage, path: &Path) -> Result<()> {
    let data = encode_png(img)?;
    write_atomic(path, |w| w.write_all(&data))
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width, img.height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Balanced);
        enc.set_filter(png::Filter::Sub);
        let mut writer = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        writer
            .write_image_data(&img.as_bytes())
            .map_err(|e| Error::Png(e.to_string()))?;
        writer.finish().map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(out)
}

pub fn read_png(path: &Path) -> Result<RgbImage> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = png::Decoder::new(std::io::BufReader::new(file))
        .read_info()
        .map_err(|e| Error::Png(e.to_string()))?;
    let mut buf = vec![
        0;
        reader
            .output_buffer_size()
            .ok_or_else(|| Error::Png("image too large".into()))?
    ];
    let info = reader.next_frame(&mut buf).map_err(|e| Error::Png(e.to_string()))?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Png(format!(
            "unsupported layout {:?}/{:?}",
            info.color_type, info.bit_depth
        )));
    }
    let pixels = buf[..info.buffer_size()]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    RgbImage::from_pixels(info.width, info.height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Canvas, Pixel, Scale, ShapeKind, SizeSpec};

    fn shape(kind: ShapeKind, color: ColorName, c: (i32, i32), ext: &[u32], rot: i32) -> ShapeInstance {
        ShapeInstance {
            kind,
            color,
            center: Pixel::new(c.0, c.1),
            size: SizeSpec::new(ext.to_vec(), Scale::ONE),
            rotation_deg: rot,
        }
    }

    fn scene(shapes: Vec<ShapeInstance>) -> SceneConfig {
        SceneConfig::new(Canvas::default(), shapes, 0.05).unwrap()
    }

    #[test]
    fn palette() {
        assert_eq!(color_value(ColorName::Red), [255, 0, 0]);
        assert_eq!(color_value(ColorName::Magenta), [255, 0, 255]);
        assert_eq!(color_value(ColorName::Green), [0, 128, 0]);
    }

    #[test]
    fn empty_scene_is_white() {
        let img = rasterize(&scene(vec![]));
        assert_eq!((img.width(), img.height()), (224, 224));
        assert!(img.pixels().iter().all(|&p| p == WHITE));
    }

    #[test]
    fn single_circle() {
        let img = rasterize(&scene(vec![shape(
            ShapeKind::Circle,
            ColorName::Red,
            (112, 112),
            &[20],
            0,
        )]));
        assert_eq!(img.get(112, 112), [255, 0, 0]);
        assert_eq!(img.get(10, 10), WHITE);
    }

    #[test]
    fn later_shapes_paint_over_earlier_ones() {
        let a = shape(ShapeKind::Square, ColorName::Blue, (100, 100), &[40], 0);
        let b = shape(ShapeKind::Circle, ColorName::Yellow, (115, 115), &[15], 0);
        // (110, 110) lies in both: |10.5-... | square half 20, circle dist ~6.4
        assert!(contains_point(&a, 110.5, 110.5) && contains_point(&b, 110.5, 110.5));
        let img = rasterize(&scene(vec![a.clone(), b.clone()]));
        assert_eq!(img.get(110, 110), color_value(ColorName::Yellow));
        let img = rasterize(&scene(vec![b, a]));
        assert_eq!(img.get(110, 110), color_value(ColorName::Blue));
    }

    #[test]
    fn disjoint_shapes_commute() {
        let a = shape(ShapeKind::Triangle, ColorName::Green, (50, 50), &[30], 15);
        let b = shape(ShapeKind::Ellipse, ColorName::Orange, (160, 160), &[30, 20], 30);
        assert_eq!(
            rasterize(&scene(vec![a.clone(), b.clone()])),
            rasterize(&scene(vec![b, a]))
        );
    }

    #[test]
    fn rotation_matches_rotated_image() {
        let kinds: [(ShapeKind, &[u32]); 4] = [
            (ShapeKind::Square, &[50]),
            (ShapeKind::Rectangle, &[35, 15]),
            (ShapeKind::Ellipse, &[35, 18]),
            (ShapeKind::Triangle, &[38]),
        ];
        for (kind, ext) in kinds {
            let base = shape(kind, ColorName::Red, (112, 112), ext, 0);
            let upright = rasterize_shapes(224, 224, std::slice::from_ref(&base));
            for theta in [15, 30, 45, 72] {
                let rotated = rasterize_shapes(
                    224,
                    224,
                    &[ShapeInstance {
                        rotation_deg: theta,
                        ..base.clone()
                    }],
                );
                // sample the upright image at the inverse-rotated pixel center
                let (c, s) = ((theta as f64).to_radians().cos(), (theta as f64).to_radians().sin());
                let mut differing = 0;
                for y in 0..224u32 {
                    for x in 0..224u32 {
                        let dx = x as f64 + 0.5 - 112.0;
                        let dy_up = 112.0 - (y as f64 + 0.5);
                        let ux = dx * c + dy_up * s;
                        let uy = -dx * s + dy_up * c;
                        let sx = (112.0 + ux).floor();
                        let sy = (112.0 - uy).floor();
                        let expected = if (0.0..224.0).contains(&sx) && (0.0..224.0).contains(&sy) {
                            upright.get(sx as u32, sy as u32)
                        } else {
                            WHITE
                        };
                        differing += usize::from(rotated.get(x, y) != expected);
                    }
                }
                let frac = differing as f64 / (224.0 * 224.0);
                assert!(frac <= 0.02, "{kind} at {theta}: {frac}");
            }
        }
    }

    #[test]
    fn png_round_trip_and_stability() {
        let dir = tempfile::tempdir().unwrap();
        let img = rasterize(&scene(vec![
            shape(ShapeKind::Circle, ColorName::Red, (60, 60), &[20], 0),
            shape(ShapeKind::Triangle, ColorName::Blue, (150, 150), &[30], 30),
        ]));
        let p = dir.path().join("a.png");
        write_png(&img, &p).unwrap();
        assert_eq!(read_png(&p).unwrap(), img);

        let white = RgbImage::filled(224, 224, WHITE);
        let (p1, p2) = (dir.path().join("w1.png"), dir.path().join("w2.png"));
        write_png(&white, &p1).unwrap();
        write_png(&white, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn bad_path_fails_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("missing").join("x.png");
        let err = write_png(&RgbImage::filled(4, 4, WHITE), &p).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(!p.exists());
    }
}

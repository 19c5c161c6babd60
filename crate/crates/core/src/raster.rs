//! Self-contained 2D software rasterizer for page designs.
//!
//! Paints a design into an in-memory sRGB buffer — the input for the balance
//! metric and for on-disk previews. The renderer is deliberately primitive
//! and fully deterministic:
//!
//! - hard-edged coverage, no anti-aliasing: a pixel is painted iff its
//!   center falls in the shape (half-open on the right/bottom edge, so
//!   abutting rectangles tile without seams or double-paint);
//! - text is approximated as filled bars per wrapped line with a fixed
//!   per-character advance (0.52 × font size for Latin, 1.0 × for CJK) —
//!   plausible visual weight, not legible glyphs;
//! - paint order is background elements by z, then blocks by z, then
//!   images, then all text bars last, so text weight is never buried.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::ir::{
    validate_page_design, Alignment, BackgroundElement, Block, Canvas, Color, ImageFit,
    PageDesign, Payload, Rect, ShapeKind, StyleGuide, TextContent, TextRun, ValidationReport,
};
use crate::pptx::fit_layout;

pub const MIN_DPI: u32 = 32;
pub const MAX_DPI: u32 = 300;

/// Corner radius of rounded rectangles as a fraction of the short side;
/// matches the OOXML `roundRect` default adjustment.
const ROUND_RECT_RADIUS_FRAC: f64 = 0.166_67;

/// Stroke width for `line` decor shapes, in points (same as the compiler).
const LINE_STROKE_PT: f64 = 2.0;

/// Bar height as a fraction of the font size, and line slot height as a
/// multiple of it (single spacing).
const BAR_HEIGHT_FRAC: f64 = 0.70;
const LINE_SPACING: f64 = 1.2;

/// Slot height for a paragraph with no text at all, in points.
const EMPTY_LINE_PT: f64 = 12.0;

/// Row-major 8-bit sRGB image, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl RasterImage {
    /// A solid-color image of the given size.
    pub fn filled(width: u32, height: u32, rgb: (u8, u8, u8)) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..(width as usize * height as usize) {
            pixels.extend_from_slice(&[rgb.0, rgb.1, rgb.2]);
        }
        Self { width, height, pixels }
    }

    pub fn get(&self, x: u32, y: u32) -> (u8, u8, u8) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        (self.pixels[i], self.pixels[i + 1], self.pixels[i + 2])
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: (u8, u8, u8)) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i] = rgb.0;
        self.pixels[i + 1] = rgb.1;
        self.pixels[i + 2] = rgb.2;
    }
}

/// Row-major luminance image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl GrayImage {
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Already-decoded RGB pixels for one image source.
#[derive(Debug, Clone)]
pub struct DecodedImage {
    pub width: u32,
    pub height: u32,
    /// Row-major, three bytes per pixel; length is `width * height * 3`.
    pub rgb: Vec<u8>,
}

/// Supplies decoded pixels for image sources. Decoding (PNG/JPEG parsing)
/// is an IO-side concern; the renderer only samples. `None` is a hard
/// error for the referencing design, mirroring the compiler's media policy.
pub trait ImageProvider {
    fn decode(&self, source: &str) -> Option<DecodedImage>;
}

/// Provider with no images; for text-only pages and tests.
pub struct NoImages;

impl ImageProvider for NoImages {
    fn decode(&self, _source: &str) -> Option<DecodedImage> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("design failed validation with {} violation(s); first: {first}", report.violations.len())]
    InvalidDesign { report: ValidationReport, first: String },
    #[error("image source {0:?} has no decoded pixels available")]
    MissingMedia(String),
    #[error("dpi {dpi} outside supported range [{MIN_DPI}, {MAX_DPI}]")]
    BadDpi { dpi: u32 },
}

/// Pixel index range whose centers fall in `[a, b)` (both in pixel units),
/// clamped to `[0, max)`.
fn px_range(a: f64, b: f64, max: u32) -> (u32, u32) {
    // center(ix) = ix + 0.5, so ix ranges over [ceil(a - 0.5), ceil(b - 0.5)).
    let lo = libm::ceil(a - 0.5);
    let hi = libm::ceil(b - 0.5);
    let lo = if lo <= 0.0 { 0 } else if lo >= max as f64 { max } else { lo as u32 };
    let hi = if hi <= 0.0 { 0 } else if hi >= max as f64 { max } else { hi as u32 };
    (lo, hi.max(lo))
}

struct Painter {
    img: RasterImage,
    dpi: f64,
}

impl Painter {
    fn rect_px(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, rgb: (u8, u8, u8)) {
        let (cx0, cx1) = px_range(x0, x1, self.img.width);
        let (cy0, cy1) = px_range(y0, y1, self.img.height);
        for y in cy0..cy1 {
            for x in cx0..cx1 {
                self.img.set(x, y, rgb);
            }
        }
    }

    fn rect(&mut self, r: &Rect, rgb: (u8, u8, u8)) {
        let d = self.dpi;
        self.rect_px(r.x * d, r.y * d, r.right() * d, r.bottom() * d, rgb);
    }

    /// Centered stroke along a rectangle's outline, as four strips.
    fn rect_border(&mut self, r: &Rect, width_pt: f64, rgb: (u8, u8, u8)) {
        let d = self.dpi;
        let half = width_pt / 72.0 / 2.0 * d;
        let (ox0, oy0) = (r.x * d - half, r.y * d - half);
        let (ox1, oy1) = (r.right() * d + half, r.bottom() * d + half);
        let (ix0, iy0) = (r.x * d + half, r.y * d + half);
        let (ix1, iy1) = (r.right() * d - half, r.bottom() * d - half);
        if ix0 >= ix1 || iy0 >= iy1 {
            // Stroke thicker than the rect itself: solid.
            self.rect_px(ox0, oy0, ox1, oy1, rgb);
            return;
        }
        self.rect_px(ox0, oy0, ox1, iy0, rgb); // top
        self.rect_px(ox0, iy1, ox1, oy1, rgb); // bottom
        self.rect_px(ox0, iy0, ix0, iy1, rgb); // left
        self.rect_px(ix1, iy0, ox1, iy1, rgb); // right
    }

    /// Paint every pixel of `r` whose center satisfies `inside` (in px).
    fn shape_px(&mut self, r: &Rect, rgb: (u8, u8, u8), inside: impl Fn(f64, f64) -> bool) {
        let d = self.dpi;
        let (cx0, cx1) = px_range(r.x * d, r.right() * d, self.img.width);
        let (cy0, cy1) = px_range(r.y * d, r.bottom() * d, self.img.height);
        for y in cy0..cy1 {
            for x in cx0..cx1 {
                if inside(x as f64 + 0.5, y as f64 + 0.5) {
                    self.img.set(x, y, rgb);
                }
            }
        }
    }

    fn ellipse(&mut self, r: &Rect, rgb: (u8, u8, u8)) {
        let d = self.dpi;
        let (cx, cy) = ((r.x + r.w / 2.0) * d, (r.y + r.h / 2.0) * d);
        let (rx, ry) = (r.w / 2.0 * d, r.h / 2.0 * d);
        if rx <= 0.0 || ry <= 0.0 {
            return;
        }
        self.shape_px(r, rgb, |px, py| {
            let u = (px - cx) / rx;
            let v = (py - cy) / ry;
            u * u + v * v <= 1.0
        });
    }

    /// Isosceles triangle: apex at top center, base along the bottom edge.
    fn triangle(&mut self, r: &Rect, rgb: (u8, u8, u8)) {
        let d = self.dpi;
        let a = ((r.x + r.w / 2.0) * d, r.y * d);
        let b = (r.x * d, r.bottom() * d);
        let c = (r.right() * d, r.bottom() * d);
        let sign = |p: (f64, f64), q: (f64, f64), s: (f64, f64)| {
            (p.0 - s.0) * (q.1 - s.1) - (q.0 - s.0) * (p.1 - s.1)
        };
        self.shape_px(r, rgb, |px, py| {
            let p = (px, py);
            let d1 = sign(p, a, b);
            let d2 = sign(p, b, c);
            let d3 = sign(p, c, a);
            let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
            let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
            !(has_neg && has_pos)
        });
    }

    fn round_rect(&mut self, r: &Rect, rgb: (u8, u8, u8)) {
        let d = self.dpi;
        let radius = ROUND_RECT_RADIUS_FRAC * if r.w < r.h { r.w } else { r.h } * d;
        let (x0, y0, x1, y1) = (r.x * d, r.y * d, r.right() * d, r.bottom() * d);
        self.shape_px(r, rgb, |px, py| {
            let cx = px.clamp(x0 + radius, x1 - radius);
            let cy = py.clamp(y0 + radius, y1 - radius);
            let dx = px - cx;
            let dy = py - cy;
            dx * dx + dy * dy <= radius * radius
        });
    }

    /// Stroked segment from the rect's top-left to its bottom-right corner.
    fn line(&mut self, r: &Rect, rgb: (u8, u8, u8)) {
        let d = self.dpi;
        let half = LINE_STROKE_PT / 72.0 / 2.0 * d;
        let p0 = (r.x * d, r.y * d);
        let p1 = (r.right() * d, r.bottom() * d);
        let pad = Rect::new(
            r.x - half / d,
            r.y - half / d,
            r.w + 2.0 * half / d,
            r.h + 2.0 * half / d,
        );
        let (vx, vy) = (p1.0 - p0.0, p1.1 - p0.1);
        let len2 = vx * vx + vy * vy;
        self.shape_px(&pad, rgb, |px, py| {
            let t = if len2 <= 0.0 {
                0.0
            } else {
                (((px - p0.0) * vx + (py - p0.1) * vy) / len2).clamp(0.0, 1.0)
            };
            let dx = px - (p0.0 + t * vx);
            let dy = py - (p0.1 + t * vy);
            dx * dx + dy * dy <= half * half
        });
    }

    /// Sample a decoded image into a frame, honoring the crop fractions.
    fn image(&mut self, frame: &Rect, crop: (f64, f64, f64, f64), src: &DecodedImage) {
        if src.width == 0 || src.height == 0 {
            return;
        }
        let d = self.dpi;
        let (fx0, fy0) = (frame.x * d, frame.y * d);
        let (fw, fh) = (frame.w * d, frame.h * d);
        if fw <= 0.0 || fh <= 0.0 {
            return;
        }
        let (cx0, cx1) = px_range(fx0, fx0 + fw, self.img.width);
        let (cy0, cy1) = px_range(fy0, fy0 + fh, self.img.height);
        let (crop_l, crop_t, crop_r, crop_b) = crop;
        let kept_w = (1.0 - crop_l - crop_r).max(1e-12);
        let kept_h = (1.0 - crop_t - crop_b).max(1e-12);
        for y in cy0..cy1 {
            let v = ((y as f64 + 0.5) - fy0) / fh;
            let sy_f = (crop_t + v * kept_h) * src.height as f64;
            let sy = (libm::floor(sy_f) as i64).clamp(0, src.height as i64 - 1) as usize;
            for x in cx0..cx1 {
                let u = ((x as f64 + 0.5) - fx0) / fw;
                let sx_f = (crop_l + u * kept_w) * src.width as f64;
                let sx = (libm::floor(sx_f) as i64).clamp(0, src.width as i64 - 1) as usize;
                let i = (sy * src.width as usize + sx) * 3;
                self.img.set(x, y, (src.rgb[i], src.rgb[i + 1], src.rgb[i + 2]));
            }
        }
    }
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3000..=0x303F     // CJK punctuation
        | 0x3040..=0x30FF   // Hiragana, Katakana
        | 0x3400..=0x4DBF   // CJK extension A
        | 0x4E00..=0x9FFF   // CJK unified ideographs
        | 0xAC00..=0xD7AF   // Hangul syllables
        | 0xF900..=0xFAFF   // CJK compatibility ideographs
        | 0xFF00..=0xFFEF   // full-width forms
    )
}

/// Advance of one character in inches for a given font size in points.
fn advance_in(c: char, size_pt: f64) -> f64 {
    let factor = if is_cjk(c) { 1.0 } else { 0.52 };
    factor * size_pt / 72.0
}

/// One painted bar: x offset within the line, width, bar height, color.
struct BarSegment {
    x_in: f64,
    w_in: f64,
    bar_h_in: f64,
    rgb: (u8, u8, u8),
}

struct BarLine {
    segments: Vec<BarSegment>,
    width_in: f64,
    slot_h_in: f64,
}

/// Lay text out as bars with greedy per-character wrapping at the block
/// width. Whitespace advances the cursor but paints nothing.
fn layout_bars(text: &TextContent, block_w: f64) -> Vec<BarLine> {
    // Paragraphs first: newlines split runs, text accumulates in between.
    let mut paragraphs: Vec<Vec<(&str, &TextRun)>> = vec![Vec::new()];
    for run in &text.runs {
        for (i, segment) in run.text.split('\n').enumerate() {
            if i > 0 {
                paragraphs.push(Vec::new());
            }
            if !segment.is_empty() {
                paragraphs.last_mut().unwrap().push((segment, run));
            }
        }
    }

    let mut lines: Vec<BarLine> = Vec::new();
    for paragraph in &paragraphs {
        let mut line = BarLine { segments: Vec::new(), width_in: 0.0, slot_h_in: 0.0 };
        let mut cursor = 0.0f64;
        for (segment, run) in paragraph {
            let bar_h = BAR_HEIGHT_FRAC * run.size_pt / 72.0;
            let slot_h = LINE_SPACING * run.size_pt / 72.0;
            let rgb = rgb_of(&run.color);
            for c in segment.chars() {
                let adv = advance_in(c, run.size_pt);
                if cursor > 0.0 && cursor + adv > block_w {
                    line.width_in = cursor;
                    lines.push(line);
                    line = BarLine { segments: Vec::new(), width_in: 0.0, slot_h_in: 0.0 };
                    cursor = 0.0;
                }
                if line.slot_h_in < slot_h {
                    line.slot_h_in = slot_h;
                }
                if !c.is_whitespace() {
                    // Abutting bars of the same color merge visually; no
                    // need to coalesce explicitly.
                    line.segments.push(BarSegment { x_in: cursor, w_in: adv, bar_h_in: bar_h, rgb });
                }
                cursor += adv;
            }
        }
        if line.slot_h_in == 0.0 {
            line.slot_h_in = LINE_SPACING * EMPTY_LINE_PT / 72.0;
        }
        line.width_in = cursor;
        lines.push(line);
    }
    lines
}

fn paint_text(painter: &mut Painter, block: &Rect, text: &TextContent) {
    let mut y = block.y;
    for line in layout_bars(text, block.w) {
        if y >= block.bottom() {
            break; // vertical overflow is clipped, not wrapped elsewhere
        }
        let x_shift = match text.alignment {
            Alignment::Left => 0.0,
            Alignment::Center => (block.w - line.width_in) / 2.0,
            Alignment::Right => block.w - line.width_in,
        };
        for seg in &line.segments {
            let bar_y = y + (line.slot_h_in - seg.bar_h_in) / 2.0;
            let x0 = (block.x + x_shift + seg.x_in).max(block.x);
            let x1 = (block.x + x_shift + seg.x_in + seg.w_in).min(block.right());
            let y0 = bar_y.max(block.y);
            let y1 = (bar_y + seg.bar_h_in).min(block.bottom());
            if x1 > x0 && y1 > y0 {
                let d = painter.dpi;
                painter.rect_px(x0 * d, y0 * d, x1 * d, y1 * d, seg.rgb);
            }
        }
        y += line.slot_h_in;
    }
}

fn rgb_of(color: &Color) -> (u8, u8, u8) {
    let [r, g, b] = color.rgb().unwrap_or([0, 0, 0]);
    (r, g, b)
}

/// Render one page design to pixels.
///
/// Output dimensions are `round(inches × dpi)` in each axis. Identical
/// inputs produce identical pixel buffers on every platform.
pub fn render_page(
    design: &PageDesign,
    style: &StyleGuide,
    canvas: &Canvas,
    dpi: u32,
    images: &dyn ImageProvider,
) -> Result<RasterImage, RenderError> {
    if !(MIN_DPI..=MAX_DPI).contains(&dpi) {
        return Err(RenderError::BadDpi { dpi });
    }
    let report = validate_page_design(design, style, canvas);
    if !report.ok {
        let first = report
            .violations
            .first()
            .map(|v| v.message.clone())
            .unwrap_or_else(|| String::from("unknown"));
        return Err(RenderError::InvalidDesign { report, first });
    }

    let width = libm::round(canvas.width_in * dpi as f64) as u32;
    let height = libm::round(canvas.height_in * dpi as f64) as u32;
    let mut painter = Painter {
        img: RasterImage::filled(width, height, (255, 255, 255)),
        dpi: dpi as f64,
    };

    // Background layer by z (stable for equal z).
    let mut background: Vec<&BackgroundElement> = design.background.iter().collect();
    background.sort_by_key(|e| e.z());
    for element in background {
        match element {
            BackgroundElement::SolidFill { geometry, color, .. } => {
                painter.rect(geometry, rgb_of(color));
            }
            BackgroundElement::DecorShape { shape, geometry, color, .. } => {
                let rgb = rgb_of(color);
                match shape {
                    ShapeKind::Rect => painter.rect(geometry, rgb),
                    ShapeKind::RoundedRect => painter.round_rect(geometry, rgb),
                    ShapeKind::Ellipse => painter.ellipse(geometry, rgb),
                    ShapeKind::Triangle => painter.triangle(geometry, rgb),
                    ShapeKind::Line => painter.line(geometry, rgb),
                }
            }
            BackgroundElement::BackgroundImage { geometry, image_ref, .. } => {
                let decoded = images
                    .decode(image_ref)
                    .ok_or_else(|| RenderError::MissingMedia(image_ref.clone()))?;
                let layout = fit_layout(
                    geometry,
                    Some((decoded.width, decoded.height)),
                    &ImageFit::Cover,
                );
                painter.image(
                    &layout.frame,
                    (layout.crop_l, layout.crop_t, layout.crop_r, layout.crop_b),
                    &decoded,
                );
            }
        }
    }

    // Layout layer: block fills and borders by z.
    let mut blocks: Vec<&Block> = design.layout.iter().collect();
    blocks.sort_by_key(|b| b.z);
    for block in &blocks {
        if let Some(fill) = &block.fill {
            painter.rect(&block.geometry, rgb_of(fill));
        }
        if let Some(border) = &block.border {
            painter.rect_border(&block.geometry, border.width_pt, rgb_of(&border.color));
        }
    }

    // Content images, in content order.
    for item in &design.content {
        if let Payload::Image(image) = &item.payload {
            let block = design
                .block(&item.block_id)
                .expect("validation guarantees content binds to a block");
            let decoded = images
                .decode(&image.source)
                .ok_or_else(|| RenderError::MissingMedia(image.source.clone()))?;
            let layout = fit_layout(
                &block.geometry,
                Some((decoded.width, decoded.height)),
                &image.fit,
            );
            painter.image(
                &layout.frame,
                (layout.crop_l, layout.crop_t, layout.crop_r, layout.crop_b),
                &decoded,
            );
        }
    }

    // Text bars, always last.
    for item in &design.content {
        if let Payload::Text(text) = &item.payload {
            let block = design
                .block(&item.block_id)
                .expect("validation guarantees content binds to a block");
            paint_text(&mut painter, &block.geometry, text);
        }
    }

    Ok(painter.img)
}

/// Rec.709 luma conversion; channels scaled to `[0, 1]` first.
pub fn to_grayscale(img: &RasterImage) -> GrayImage {
    let mut values = Vec::with_capacity(img.width as usize * img.height as usize);
    for i in 0..(img.width as usize * img.height as usize) {
        let r = img.pixels[i * 3] as f64 / 255.0;
        let g = img.pixels[i * 3 + 1] as f64 / 255.0;
        let b = img.pixels[i * 3 + 2] as f64 / 255.0;
        let y = 0.2126 * r + 0.7152 * g + 0.0722 * b;
        values.push(y.clamp(0.0, 1.0));
    }
    GrayImage { width: img.width, height: img.height, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{sample_page_design, sample_style_guide};
    use crate::ir::{Block, BlockRole, ContentItem, ImageContent};
    use alloc::borrow::ToOwned;

    fn empty_design() -> PageDesign {
        PageDesign {
            schema_version: "1".to_owned(),
            slide_index: 0,
            page_kind: crate::ir::PageKind::Content,
            background: Vec::new(),
            layout: Vec::new(),
            content: Vec::new(),
            design_rationale: None,
        }
    }

    fn block(id: &str, rect: Rect, fill: &str, z: i32) -> Block {
        Block {
            id: id.to_owned(),
            role: BlockRole::Panel,
            geometry: rect,
            fill: Some(Color::new(fill).unwrap()),
            border: None,
            z,
        }
    }

    #[test]
    fn empty_design_renders_all_white_at_expected_size() {
        let img = render_page(
            &empty_design(),
            &sample_style_guide(),
            &Canvas::default(),
            96,
            &NoImages,
        )
        .unwrap();
        assert_eq!((img.width, img.height), (1280, 720));
        assert!(img.pixels.iter().all(|&b| b == 255));
    }

    #[test]
    fn resolution_follows_round_of_inches_times_dpi() {
        let img = render_page(
            &empty_design(),
            &sample_style_guide(),
            &Canvas::default(),
            150,
            &NoImages,
        )
        .unwrap();
        // 13.333 × 150 = 1999.95 -> 2000; 7.5 × 150 = 1125.
        assert_eq!((img.width, img.height), (2000, 1125));
    }

    #[test]
    fn dpi_outside_range_is_rejected() {
        for dpi in [0, 31, 301, 1200] {
            let err = render_page(
                &empty_design(),
                &sample_style_guide(),
                &Canvas::default(),
                dpi,
                &NoImages,
            )
            .unwrap_err();
            assert_eq!(err, RenderError::BadDpi { dpi });
        }
    }

    #[test]
    fn black_left_half_panel_has_mean_luminance_half() {
        let mut design = empty_design();
        design.layout.push(block(
            "left",
            Rect::new(0.0, 0.0, 13.333 / 2.0, 7.5),
            "#000000",
            0,
        ));
        let img =
            render_page(&design, &sample_style_guide(), &Canvas::default(), 96, &NoImages)
                .unwrap();
        let mean = to_grayscale(&img).mean();
        assert!(
            (mean - 0.5).abs() <= 1.0 / img.width as f64,
            "mean luminance {mean} not within 1/width of 0.5"
        );
    }

    #[test]
    fn z_order_changes_pixels_iff_blocks_overlap() {
        let style = sample_style_guide();
        let canvas = Canvas::default();
        let render = |a_z: i32, b_z: i32, b_rect: Rect| {
            let mut design = empty_design();
            design.layout.push(block("a", Rect::new(1.0, 1.0, 3.0, 3.0), "#FF0000", a_z));
            design.layout.push(block("b", b_rect, "#0000FF", b_z));
            render_page(&design, &style, &canvas, 96, &NoImages).unwrap()
        };

        // Overlapping: z swap flips who wins the shared pixels.
        let overlap = Rect::new(2.0, 2.0, 3.0, 3.0);
        assert_ne!(render(0, 1, overlap), render(1, 0, overlap));
        // Disjoint: z swap is invisible.
        let disjoint = Rect::new(5.0, 1.0, 3.0, 3.0);
        assert_eq!(render(0, 1, disjoint), render(1, 0, disjoint));
    }

    #[test]
    fn grayscale_conversion_uses_rec709_luma() {
        let white = RasterImage::filled(4, 4, (255, 255, 255));
        assert!(to_grayscale(&white).values.iter().all(|&v| v == 1.0));
        let black = RasterImage::filled(4, 4, (0, 0, 0));
        assert!(to_grayscale(&black).values.iter().all(|&v| v == 0.0));
        let green = RasterImage::filled(4, 4, (0, 255, 0));
        assert!(to_grayscale(&green).values.iter().all(|&v| (v - 0.7152).abs() < 1e-12));
    }

    #[test]
    fn text_bars_stay_on_top_of_higher_z_fills() {
        let mut design = sample_page_design();
        // A filled block above the title's z; bars must still win.
        design.layout.push(block("cover", Rect::new(0.4, 0.2, 12.5, 1.3), "#FF0000", 99));
        let img = render_page(
            &design,
            &sample_style_guide(),
            &Canvas::default(),
            96,
            &NoImages,
        )
        .unwrap();
        // Inside the first bar of the title line (title starts at x=0.5in,
        // y=0.3in, 32pt): sample a pixel a few px into the first glyph bar.
        let probe = img.get(50, 45);
        assert_eq!(probe, (0x1F, 0x4E, 0x79), "expected title bar color, got {probe:?}");
    }

    #[test]
    fn missing_image_pixels_are_a_hard_error() {
        let mut design = sample_page_design();
        design.content.push(ContentItem {
            block_id: "panel".to_owned(),
            payload: Payload::Image(ImageContent {
                source: "absent".to_owned(),
                fit: ImageFit::Contain,
            }),
        });
        let err = render_page(
            &design,
            &sample_style_guide(),
            &Canvas::default(),
            96,
            &NoImages,
        )
        .unwrap_err();
        assert_eq!(err, RenderError::MissingMedia("absent".to_owned()));
    }

    #[test]
    fn stretched_image_pixels_land_where_expected() {
        struct TwoPixel;
        impl ImageProvider for TwoPixel {
            fn decode(&self, _source: &str) -> Option<DecodedImage> {
                // Left pixel red, right pixel blue.
                Some(DecodedImage {
                    width: 2,
                    height: 1,
                    rgb: vec![255, 0, 0, 0, 0, 255],
                })
            }
        }
        let mut design = empty_design();
        design.layout.push(Block {
            id: "img".to_owned(),
            role: BlockRole::Image,
            geometry: Rect::new(1.0, 1.0, 4.0, 2.0),
            fill: None,
            border: None,
            z: 0,
        });
        design.content.push(ContentItem {
            block_id: "img".to_owned(),
            payload: Payload::Image(ImageContent {
                source: "img".to_owned(),
                fit: ImageFit::Stretch,
            }),
        });
        let img = render_page(
            &design,
            &sample_style_guide(),
            &Canvas::default(),
            96,
            &TwoPixel,
        )
        .unwrap();
        // Block spans x 96..480 px; left half red, right half blue.
        assert_eq!(img.get(100, 150), (255, 0, 0));
        assert_eq!(img.get(470, 150), (0, 0, 255));
        // Outside the block stays white.
        assert_eq!(img.get(50, 150), (255, 255, 255));
    }

    #[test]
    fn render_is_deterministic() {
        let design = sample_page_design();
        let style = sample_style_guide();
        let a = render_page(&design, &style, &Canvas::default(), 96, &NoImages).unwrap();
        let b = render_page(&design, &style, &Canvas::default(), 96, &NoImages).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cjk_advance_is_wider_than_latin() {
        assert!((advance_in('漢', 20.0) - 20.0 / 72.0).abs() < 1e-12);
        assert!((advance_in('a', 20.0) - 0.52 * 20.0 / 72.0).abs() < 1e-12);
    }
}

//! Deterministic lowering from a validated page design to a PresentationML
//! slide part.
//!
//! Output is a single `p:sld` XML document plus its relationship entries and
//! deduplicated media payloads. Emission order is the editing-stack order:
//! background elements by z, then layout blocks by z (each immediately
//! followed by any image bound to it), then every text box last, so text is
//! always on top and nothing a user would edit is buried under decor.
//!
//! All geometry is converted to English Metric Units with
//! round-half-away-from-zero, which keeps the mapping exact for the common
//! "nice" fractions of an inch and stable across platforms.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::ir::{
    validate_page_design, Alignment, BackgroundElement, Block, BlockRole, Canvas, Color,
    ImageContent, ImageFit, PageDesign, Payload, Rect, ShapeKind, StyleGuide, TextContent,
    ValidationReport,
};

/// English Metric Units per inch; the native length unit of OOXML drawing.
pub const EMU_PER_INCH: i64 = 914_400;

/// EMU per typographic point (1/72 inch).
pub const EMU_PER_POINT: f64 = 12_700.0;

/// Stroke width used for `line` decor shapes, which have no fill to show.
const LINE_STROKE_PT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmuError {
    #[error("length in inches must be finite, got a NaN or infinity")]
    NonFinite,
    #[error("length in inches overflows the EMU range")]
    Overflow,
}

/// Inches to EMU, rounding half away from zero.
///
/// `1.0 -> 914400`, `13.333 -> 12191695`, `-x -> -emu(x)`.
pub fn inches_to_emu(inches: f64) -> Result<i64, EmuError> {
    if !inches.is_finite() {
        return Err(EmuError::NonFinite);
    }
    let emu = libm::round(inches * EMU_PER_INCH as f64);
    // i64::MAX as f64 rounds up to 2^63, so `>=` catches the true overflow.
    if emu >= i64::MAX as f64 || emu <= i64::MIN as f64 {
        return Err(EmuError::Overflow);
    }
    Ok(emu as i64)
}

/// Points to EMU (line widths), same rounding rule as [`inches_to_emu`].
pub fn points_to_emu(points: f64) -> Result<i64, EmuError> {
    if !points.is_finite() {
        return Err(EmuError::NonFinite);
    }
    let emu = libm::round(points * EMU_PER_POINT);
    if emu >= i64::MAX as f64 || emu <= i64::MIN as f64 {
        return Err(EmuError::Overflow);
    }
    Ok(emu as i64)
}

/// Font size in points to the `sz` attribute unit (hundredths of a point).
pub fn points_to_hundredths(points: f64) -> i64 {
    libm::round(points * 100.0) as i64
}

/// Raster formats accepted as slide media.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MediaFormat {
    Png,
    Jpeg,
}

impl MediaFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            MediaFormat::Png => "png",
            MediaFormat::Jpeg => "jpeg",
        }
    }

    pub fn content_type(&self) -> &'static str {
        match self {
            MediaFormat::Png => "image/png",
            MediaFormat::Jpeg => "image/jpeg",
        }
    }

    /// Detect a format from magic bytes.
    pub fn sniff(bytes: &[u8]) -> Option<MediaFormat> {
        if bytes.starts_with(&[0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A]) {
            Some(MediaFormat::Png)
        } else if bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
            Some(MediaFormat::Jpeg)
        } else {
            None
        }
    }
}

/// Raw image bytes plus their format, as handed over by a media source.
#[derive(Debug, Clone)]
pub struct MediaBytes {
    pub bytes: Vec<u8>,
    pub format: MediaFormat,
}

/// Resolves an image `source` reference (URL or cache key) to actual bytes.
///
/// Compilation is pure; anything that touches the network or disk implements
/// this trait on the std side. Returning `None` makes the referencing design
/// fail to compile with [`CompileError::MissingMedia`] — a dangling image is
/// an error, never silently dropped.
pub trait MediaSource {
    fn resolve(&self, source: &str) -> Option<MediaBytes>;
}

/// A media source with no media at all; for text-only pages and tests.
pub struct NoMedia;

impl MediaSource for NoMedia {
    fn resolve(&self, _source: &str) -> Option<MediaBytes> {
        None
    }
}

/// Pixel dimensions from the image header: PNG IHDR or JPEG SOF segment.
/// Returns `None` when the header is truncated or malformed; callers fall
/// back to stretch-fit in that case rather than failing the compile.
pub fn image_dimensions(bytes: &[u8], format: MediaFormat) -> Option<(u32, u32)> {
    match format {
        MediaFormat::Png => {
            if bytes.len() < 24 || !bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
                return None;
            }
            if &bytes[12..16] != b"IHDR" {
                return None;
            }
            let w = u32::from_be_bytes([bytes[16], bytes[17], bytes[18], bytes[19]]);
            let h = u32::from_be_bytes([bytes[20], bytes[21], bytes[22], bytes[23]]);
            if w == 0 || h == 0 {
                None
            } else {
                Some((w, h))
            }
        }
        MediaFormat::Jpeg => {
            if bytes.len() < 4 || bytes[0] != 0xFF || bytes[1] != 0xD8 {
                return None;
            }
            let mut i = 2;
            while i + 3 < bytes.len() {
                if bytes[i] != 0xFF {
                    return None;
                }
                let marker = bytes[i + 1];
                // Standalone markers without a length field.
                if marker == 0xD8 || (0xD0..=0xD7).contains(&marker) || marker == 0x01 {
                    i += 2;
                    continue;
                }
                let len = u16::from_be_bytes([bytes[i + 2], bytes[i + 3]]) as usize;
                if len < 2 {
                    return None;
                }
                let is_sof = matches!(marker, 0xC0..=0xCF)
                    && !matches!(marker, 0xC4 | 0xC8 | 0xCC);
                if is_sof {
                    if i + 9 > bytes.len() {
                        return None;
                    }
                    let h = u16::from_be_bytes([bytes[i + 5], bytes[i + 6]]) as u32;
                    let w = u16::from_be_bytes([bytes[i + 7], bytes[i + 8]]) as u32;
                    return if w == 0 || h == 0 { None } else { Some((w, h)) };
                }
                i += 2 + len;
            }
            None
        }
    }
}

/// A relationship entry for the slide's `.rels` part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelEntry {
    pub id: String,
    pub rel_type: String,
    pub target: String,
}

pub const REL_TYPE_SLIDE_LAYOUT: &str =
    "http://schemas.openxmlformats.org/officeDocument/2006/relationships/slideLayout";
pub const REL_TYPE_IMAGE: &str =
    "http://schemas.openxmlformats.org/officeDocument/2006/relationships/image";

/// A media payload to be stored in the archive, content-addressed so that
/// the same image reused across slides lands in the package exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MediaItem {
    /// Archive path, `ppt/media/<sha256>.<ext>`.
    pub path: String,
    pub content_type: String,
    pub bytes: Vec<u8>,
}

/// One compiled slide: its XML document, relationships, and media payloads.
#[derive(Debug, Clone)]
pub struct SlidePart {
    pub xml: String,
    pub rel_entries: Vec<RelEntry>,
    pub media: Vec<MediaItem>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("design failed validation with {} violation(s); first: {first}", report.violations.len())]
    InvalidDesign { report: ValidationReport, first: String },
    #[error("image source {0:?} could not be resolved to media bytes")]
    MissingMedia(String),
    #[error(transparent)]
    Emu(#[from] EmuError),
}

fn invalid_design(report: ValidationReport) -> CompileError {
    let first = report
        .violations
        .first()
        .map(|v| v.message.clone())
        .unwrap_or_else(|| String::from("unknown"));
    CompileError::InvalidDesign { report, first }
}

/// Escape a string for use in XML text content or attribute values.
pub fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn hex_lower(bytes: &[u8]) -> String {
    const TABLE: &[u8; 16] = b"0123456789abcdef";
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push(TABLE[(b >> 4) as usize] as char);
        out.push(TABLE[(b & 0x0F) as usize] as char);
    }
    out
}

fn prst_for(shape: &ShapeKind) -> &'static str {
    match shape {
        ShapeKind::Rect => "rect",
        ShapeKind::RoundedRect => "roundRect",
        ShapeKind::Ellipse => "ellipse",
        ShapeKind::Line => "line",
        ShapeKind::Triangle => "triangle",
    }
}

fn role_tag(role: &BlockRole) -> &'static str {
    match role {
        BlockRole::Title => "title",
        BlockRole::Bullets => "bullets",
        BlockRole::Body => "body",
        BlockRole::Image => "image",
        BlockRole::Caption => "caption",
        BlockRole::Panel => "panel",
        BlockRole::Separator => "separator",
    }
}

fn algn_for(alignment: &Alignment) -> &'static str {
    match alignment {
        Alignment::Left => "l",
        Alignment::Center => "ctr",
        Alignment::Right => "r",
    }
}

struct XmlBuilder {
    out: String,
    next_shape_id: u32,
}

impl XmlBuilder {
    fn new() -> Self {
        // Shape id 1 is conventionally the group shape of the tree itself.
        Self { out: String::new(), next_shape_id: 2 }
    }

    fn take_id(&mut self) -> u32 {
        let id = self.next_shape_id;
        self.next_shape_id += 1;
        id
    }

    fn xfrm(&mut self, rect: &Rect) -> Result<(), EmuError> {
        let x = inches_to_emu(rect.x)?;
        let y = inches_to_emu(rect.y)?;
        let cx = inches_to_emu(rect.w)?;
        let cy = inches_to_emu(rect.h)?;
        let _ = write!(
            self.out,
            "<a:xfrm><a:off x=\"{x}\" y=\"{y}\"/><a:ext cx=\"{cx}\" cy=\"{cy}\"/></a:xfrm>"
        );
        Ok(())
    }

    fn solid_fill(&mut self, color: &Color) {
        // Validation upstream guarantees a parseable color.
        let hex = color.hex_upper().unwrap_or_else(|| String::from("000000"));
        let _ = write!(self.out, "<a:solidFill><a:srgbClr val=\"{hex}\"/></a:solidFill>");
    }

    /// Empty text body; PowerPoint expects every `p:sp` to carry one.
    fn empty_tx_body(&mut self) {
        self.out.push_str(
            "<p:txBody><a:bodyPr wrap=\"square\" lIns=\"0\" tIns=\"0\" rIns=\"0\" bIns=\"0\"/>\
             <a:lstStyle/><a:p><a:endParaRPr lang=\"en-US\"/></a:p></p:txBody>",
        );
    }

    /// A plain shape: name, geometry, preset, optional fill/stroke.
    fn shape(
        &mut self,
        name: &str,
        rect: &Rect,
        prst: &str,
        fill: Option<&Color>,
        stroke: Option<(&Color, f64)>,
    ) -> Result<(), EmuError> {
        let id = self.take_id();
        let _ = write!(
            self.out,
            "<p:sp><p:nvSpPr><p:cNvPr id=\"{id}\" name=\"{}\"/><p:cNvSpPr/><p:nvPr/></p:nvSpPr><p:spPr>",
            xml_escape(name)
        );
        self.xfrm(rect)?;
        let _ = write!(self.out, "<a:prstGeom prst=\"{prst}\"><a:avLst/></a:prstGeom>");
        match fill {
            Some(color) => self.solid_fill(color),
            None => self.out.push_str("<a:noFill/>"),
        }
        if let Some((color, width_pt)) = stroke {
            let w = points_to_emu(width_pt)?;
            let _ = write!(self.out, "<a:ln w=\"{w}\">");
            self.solid_fill(color);
            self.out.push_str("</a:ln>");
        }
        self.out.push_str("</p:spPr>");
        self.empty_tx_body();
        self.out.push_str("</p:sp>");
        Ok(())
    }

    fn picture(
        &mut self,
        name: &str,
        rel_id: &str,
        frame: &Rect,
        src_rect: Option<(i64, i64, i64, i64)>,
    ) -> Result<(), EmuError> {
        let id = self.take_id();
        let _ = write!(
            self.out,
            "<p:pic><p:nvPicPr><p:cNvPr id=\"{id}\" name=\"{}\"/>\
             <p:cNvPicPr><a:picLocks noChangeAspect=\"1\"/></p:cNvPicPr><p:nvPr/></p:nvPicPr>\
             <p:blipFill><a:blip r:embed=\"{rel_id}\"/>",
            xml_escape(name)
        );
        if let Some((l, t, r, b)) = src_rect {
            let _ = write!(
                self.out,
                "<a:srcRect l=\"{l}\" t=\"{t}\" r=\"{r}\" b=\"{b}\"/>"
            );
        }
        self.out.push_str("<a:stretch><a:fillRect/></a:stretch></p:blipFill><p:spPr>");
        self.xfrm(frame)?;
        self.out
            .push_str("<a:prstGeom prst=\"rect\"><a:avLst/></a:prstGeom></p:spPr></p:pic>");
        Ok(())
    }

    /// A borderless, fill-less text box over a block's geometry.
    fn text_box(
        &mut self,
        name: &str,
        rect: &Rect,
        text: &TextContent,
        font_family: &str,
    ) -> Result<(), EmuError> {
        let id = self.take_id();
        let _ = write!(
            self.out,
            "<p:sp><p:nvSpPr><p:cNvPr id=\"{id}\" name=\"{}\"/>\
             <p:cNvSpPr txBox=\"1\"/><p:nvPr/></p:nvSpPr><p:spPr>",
            xml_escape(name)
        );
        self.xfrm(rect)?;
        self.out.push_str(
            "<a:prstGeom prst=\"rect\"><a:avLst/></a:prstGeom><a:noFill/></p:spPr>\
             <p:txBody><a:bodyPr wrap=\"square\" lIns=\"0\" tIns=\"0\" rIns=\"0\" bIns=\"0\"/>\
             <a:lstStyle/>",
        );
        let algn = algn_for(&text.alignment);
        // Newlines inside a run split it across paragraphs; runs without
        // newlines keep accumulating into the current paragraph.
        let mut paragraphs: Vec<Vec<(&str, &crate::ir::TextRun)>> = vec![Vec::new()];
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
        for paragraph in &paragraphs {
            let _ = write!(self.out, "<a:p><a:pPr algn=\"{algn}\"/>");
            for (segment, run) in paragraph {
                let sz = points_to_hundredths(run.size_pt);
                let b = if run.bold { 1 } else { 0 };
                let _ = write!(
                    self.out,
                    "<a:r><a:rPr lang=\"en-US\" sz=\"{sz}\" b=\"{b}\" dirty=\"0\">"
                );
                self.solid_fill(&run.color);
                let _ = write!(
                    self.out,
                    "<a:latin typeface=\"{}\"/></a:rPr><a:t>{}</a:t></a:r>",
                    xml_escape(font_family),
                    xml_escape(segment)
                );
            }
            if paragraph.is_empty() {
                self.out.push_str("<a:endParaRPr lang=\"en-US\"/>");
            }
            self.out.push_str("</a:p>");
        }
        self.out.push_str("</p:txBody></p:sp>");
        Ok(())
    }
}

/// Where an image lands inside its block and how much of the source is kept.
///
/// Crop values are fractions of the source image trimmed from each edge;
/// zero everywhere unless the fit is `cover`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitLayout {
    pub frame: Rect,
    pub crop_l: f64,
    pub crop_t: f64,
    pub crop_r: f64,
    pub crop_b: f64,
}

/// Frame and crop for an image inside its block, honoring the fit mode.
/// Unknown or degenerate image dimensions degrade to stretch. Shared by the
/// XML lowering (as `srcRect`) and the rasterizer (as sample-space crop).
pub fn fit_layout(block: &Rect, dims: Option<(u32, u32)>, fit: &ImageFit) -> FitLayout {
    let uncropped = FitLayout { frame: *block, crop_l: 0.0, crop_t: 0.0, crop_r: 0.0, crop_b: 0.0 };
    let (iw, ih) = match dims {
        Some((w, h)) if w > 0 && h > 0 => (w as f64, h as f64),
        _ => return uncropped,
    };
    let image_aspect = iw / ih;
    let frame_aspect = block.w / block.h;
    match fit {
        ImageFit::Stretch => uncropped,
        ImageFit::Contain => {
            // Largest aspect-true frame inside the block, centered.
            let (w, h) = if image_aspect > frame_aspect {
                (block.w, block.w / image_aspect)
            } else {
                (block.h * image_aspect, block.h)
            };
            let x = block.x + (block.w - w) / 2.0;
            let y = block.y + (block.h - h) / 2.0;
            FitLayout { frame: Rect::new(x, y, w, h), ..uncropped }
        }
        ImageFit::Cover => {
            // Fill the whole block and crop the overhang symmetrically.
            let mut layout = uncropped;
            if image_aspect > frame_aspect {
                let side = (1.0 - frame_aspect / image_aspect) / 2.0;
                layout.crop_l = side;
                layout.crop_r = side;
            } else if image_aspect < frame_aspect {
                let side = (1.0 - image_aspect / frame_aspect) / 2.0;
                layout.crop_t = side;
                layout.crop_b = side;
            }
            layout
        }
    }
}

/// [`fit_layout`] with the crop rounded to `srcRect` units (thousandths of a
/// percent); `None` when there is no crop.
fn image_frame(
    block: &Rect,
    dims: Option<(u32, u32)>,
    fit: &ImageFit,
) -> (Rect, Option<(i64, i64, i64, i64)>) {
    let layout = fit_layout(block, dims, fit);
    let to_pct = |f: f64| (libm::round(f * 100_000.0) as i64).clamp(0, 100_000);
    let crop = (
        to_pct(layout.crop_l),
        to_pct(layout.crop_t),
        to_pct(layout.crop_r),
        to_pct(layout.crop_b),
    );
    if crop == (0, 0, 0, 0) {
        (layout.frame, None)
    } else {
        (layout.frame, Some(crop))
    }
}

/// Compile one validated page design into a slide part.
///
/// Preconditions: the design must pass [`validate_page_design`] — an invalid
/// design is rejected wholesale, and every image `source` must resolve
/// through `media`. Output is deterministic: equal inputs yield byte-equal
/// XML, relationship lists, and media names.
pub fn compile_page(
    design: &PageDesign,
    style: &StyleGuide,
    canvas: &Canvas,
    media: &dyn MediaSource,
) -> Result<SlidePart, CompileError> {
    let report = validate_page_design(design, style, canvas);
    if !report.ok {
        return Err(invalid_design(report));
    }

    let mut builder = XmlBuilder::new();
    builder.out.push_str(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\
         <p:sld xmlns:a=\"http://schemas.openxmlformats.org/drawingml/2006/main\" \
         xmlns:r=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships\" \
         xmlns:p=\"http://schemas.openxmlformats.org/presentationml/2006/main\">\
         <p:cSld><p:spTree><p:nvGrpSpPr><p:cNvPr id=\"1\" name=\"\"/><p:cNvGrpSpPr/>\
         <p:nvPr/></p:nvGrpSpPr><p:grpSpPr><a:xfrm><a:off x=\"0\" y=\"0\"/>\
         <a:ext cx=\"0\" cy=\"0\"/><a:chOff x=\"0\" y=\"0\"/><a:chExt cx=\"0\" cy=\"0\"/>\
         </a:xfrm></p:grpSpPr>",
    );

    let mut rel_entries = vec![RelEntry {
        id: String::from("rId1"),
        rel_type: String::from(REL_TYPE_SLIDE_LAYOUT),
        target: String::from("../slideLayouts/slideLayout1.xml"),
    }];
    let mut media_items: Vec<MediaItem> = Vec::new();
    // source string -> (rel id, pixel dims); media is resolved once per
    // distinct source and reuses would reuse the relationship.
    let mut resolved: Vec<(String, String, Option<(u32, u32)>)> = Vec::new();

    // Background layer in z order; sort is stable so equal z keeps authoring
    // order.
    let mut background: Vec<&BackgroundElement> = design.background.iter().collect();
    background.sort_by_key(|e| e.z());
    for (i, element) in background.iter().enumerate() {
        match element {
            BackgroundElement::SolidFill { geometry, color, .. } => {
                builder
                    .shape(&format!("bg:{i}"), geometry, "rect", Some(color), None)
                    .map_err(CompileError::Emu)?;
            }
            BackgroundElement::DecorShape { shape, geometry, color, .. } => {
                let prst = prst_for(shape);
                if matches!(shape, ShapeKind::Line) {
                    builder
                        .shape(
                            &format!("bg:{i}"),
                            geometry,
                            prst,
                            None,
                            Some((color, LINE_STROKE_PT)),
                        )
                        .map_err(CompileError::Emu)?;
                } else {
                    builder
                        .shape(&format!("bg:{i}"), geometry, prst, Some(color), None)
                        .map_err(CompileError::Emu)?;
                }
            }
            BackgroundElement::BackgroundImage { geometry, image_ref, .. } => {
                let (rel_id, dims) = resolve_media(
                    image_ref,
                    media,
                    &mut rel_entries,
                    &mut media_items,
                    &mut resolved,
                )?;
                let (frame, crop) = image_frame(geometry, dims, &ImageFit::Cover);
                builder
                    .picture(&format!("bg:{i}"), &rel_id, &frame, crop)
                    .map_err(CompileError::Emu)?;
            }
        }
    }

    // Layout layer in z order; each block is one shape, and an image bound
    // to it lands directly above it.
    let mut blocks: Vec<&Block> = design.layout.iter().collect();
    blocks.sort_by_key(|b| b.z);
    for block in &blocks {
        let name = format!("blk:{}:{}", role_tag(&block.role), block.id);
        let stroke = block.border.as_ref().map(|b| (&b.color, b.width_pt));
        builder
            .shape(&name, &block.geometry, "rect", block.fill.as_ref(), stroke)
            .map_err(CompileError::Emu)?;
        for (k, item) in design.content.iter().enumerate() {
            if item.block_id != block.id {
                continue;
            }
            if let Payload::Image(ImageContent { source, fit }) = &item.payload {
                let (rel_id, dims) = resolve_media(
                    source,
                    media,
                    &mut rel_entries,
                    &mut media_items,
                    &mut resolved,
                )?;
                let (frame, crop) = image_frame(&block.geometry, dims, fit);
                builder
                    .picture(&format!("img:{}:{k}", block.id), &rel_id, &frame, crop)
                    .map_err(CompileError::Emu)?;
            }
        }
    }

    // Content text layer: always last, so no decor or panel can cover it.
    for (k, item) in design.content.iter().enumerate() {
        if let Payload::Text(text) = &item.payload {
            let block = design
                .block(&item.block_id)
                .expect("validation guarantees content binds to a block");
            let family = match block.role {
                BlockRole::Title => style.title_font.family.as_str(),
                _ => style.body_font.family.as_str(),
            };
            builder
                .text_box(
                    &format!("txt:{}:{k}", block.id),
                    &block.geometry,
                    text,
                    family,
                )
                .map_err(CompileError::Emu)?;
        }
    }

    builder.out.push_str(
        "</p:spTree></p:cSld><p:clrMapOvr><a:masterClrMapping/></p:clrMapOvr></p:sld>",
    );
    let _ = canvas; // geometry bounds already enforced by validation

    Ok(SlidePart { xml: builder.out, rel_entries, media: media_items })
}

/// Resolve one image source: fetch bytes, content-address them, register the
/// relationship, and remember the result so repeats are free.
fn resolve_media(
    source: &str,
    media: &dyn MediaSource,
    rel_entries: &mut Vec<RelEntry>,
    media_items: &mut Vec<MediaItem>,
    resolved: &mut Vec<(String, String, Option<(u32, u32)>)>,
) -> Result<(String, Option<(u32, u32)>), CompileError> {
    if let Some((_, rel_id, dims)) = resolved.iter().find(|(s, _, _)| s == source) {
        return Ok((rel_id.clone(), *dims));
    }
    let bytes = media
        .resolve(source)
        .ok_or_else(|| CompileError::MissingMedia(source.to_string()))?;
    let dims = image_dimensions(&bytes.bytes, bytes.format);
    let digest = Sha256::digest(&bytes.bytes);
    let file = format!("{}.{}", hex_lower(&digest), bytes.format.extension());
    let path = format!("ppt/media/{file}");
    let rel_id = format!("rId{}", rel_entries.len() + 1);
    rel_entries.push(RelEntry {
        id: rel_id.clone(),
        rel_type: String::from(REL_TYPE_IMAGE),
        target: format!("../media/{file}"),
    });
    if !media_items.iter().any(|m| m.path == path) {
        media_items.push(MediaItem {
            path,
            content_type: String::from(bytes.format.content_type()),
            bytes: bytes.bytes,
        });
    }
    resolved.push((source.to_string(), rel_id.clone(), dims));
    Ok((rel_id, dims))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{sample_page_design, sample_style_guide, tiny_png};
    use crate::ir::{ContentItem, Payload, TextRun};
    use alloc::borrow::ToOwned;

    struct OnePng {
        key: &'static str,
        bytes: Vec<u8>,
    }

    impl MediaSource for OnePng {
        fn resolve(&self, source: &str) -> Option<MediaBytes> {
            (source == self.key)
                .then(|| MediaBytes { bytes: self.bytes.clone(), format: MediaFormat::Png })
        }
    }

    #[test]
    fn emu_conversion_matches_hand_computed_values() {
        assert_eq!(inches_to_emu(0.0).unwrap(), 0);
        assert_eq!(inches_to_emu(1.0).unwrap(), 914_400);
        assert_eq!(inches_to_emu(10.0).unwrap(), 9_144_000);
        assert_eq!(inches_to_emu(13.333).unwrap(), 12_191_695);
        assert_eq!(inches_to_emu(7.5).unwrap(), 6_858_000);
        assert_eq!(inches_to_emu(-1.0).unwrap(), -914_400);
    }

    #[test]
    fn emu_conversion_rounds_half_away_from_zero() {
        // 0.5 EMU exactly: must go up in magnitude, not to even.
        let half = 0.5 / EMU_PER_INCH as f64;
        assert_eq!(inches_to_emu(half).unwrap(), 1);
        assert_eq!(inches_to_emu(-half).unwrap(), -1);
        assert_eq!(inches_to_emu(1.5 / EMU_PER_INCH as f64).unwrap(), 2);
    }

    #[test]
    fn emu_conversion_rejects_non_finite_and_overflow() {
        assert_eq!(inches_to_emu(f64::NAN), Err(EmuError::NonFinite));
        assert_eq!(inches_to_emu(f64::INFINITY), Err(EmuError::NonFinite));
        assert_eq!(inches_to_emu(1e300), Err(EmuError::Overflow));
        assert_eq!(inches_to_emu(-1e300), Err(EmuError::Overflow));
    }

    #[test]
    fn title_block_geometry_lands_at_expected_emu() {
        // (0.5, 0.3, 12.3 x 1.0) inches, all computed by plain long
        // multiplication against 914400.
        let design = sample_page_design();
        let part = compile_page(&design, &sample_style_guide(), &Canvas::default(), &NoMedia)
            .unwrap();
        assert!(part.xml.contains("<a:off x=\"457200\" y=\"274320\"/>"));
        assert!(part.xml.contains("<a:ext cx=\"11247120\" cy=\"914400\"/>"));
    }

    #[test]
    fn text_boxes_come_after_every_fill_shape() {
        let design = sample_page_design();
        let part = compile_page(&design, &sample_style_guide(), &Canvas::default(), &NoMedia)
            .unwrap();
        let first_text = part.xml.find("name=\"txt:").unwrap();
        let last_block = part.xml.rfind("name=\"blk:").unwrap();
        let last_bg = part.xml.rfind("name=\"bg:").unwrap();
        assert!(first_text > last_block);
        assert!(first_text > last_bg);
    }

    #[test]
    fn every_block_emits_a_named_shape_even_without_content() {
        let mut design = sample_page_design();
        design.content.clear();
        let part = compile_page(&design, &sample_style_guide(), &Canvas::default(), &NoMedia)
            .unwrap();
        for block in &design.layout {
            let needle = format!(":{}\"", block.id);
            assert!(
                part.xml.contains(&needle),
                "block {} missing from slide XML",
                block.id
            );
        }
        // Still a structurally complete slide.
        assert!(part.xml.ends_with("</p:sld>"));
        assert!(!part.xml.contains("txt:"));
    }

    #[test]
    fn invalid_design_is_rejected_wholesale() {
        let mut design = sample_page_design();
        design.layout[0].geometry = Rect::new(13.0, 7.0, 1.0, 1.0);
        let err = compile_page(&design, &sample_style_guide(), &Canvas::default(), &NoMedia)
            .unwrap_err();
        assert!(matches!(err, CompileError::InvalidDesign { .. }));
    }

    #[test]
    fn missing_media_is_a_hard_error() {
        let mut design = sample_page_design();
        design.content.push(ContentItem {
            block_id: "panel".to_owned(),
            payload: Payload::Image(ImageContent {
                source: "https://example.com/missing.png".to_owned(),
                fit: ImageFit::Contain,
            }),
        });
        let err = compile_page(&design, &sample_style_guide(), &Canvas::default(), &NoMedia)
            .unwrap_err();
        assert!(matches!(err, CompileError::MissingMedia(_)));
    }

    #[test]
    fn media_is_content_addressed_and_relations_are_complete() {
        let mut design = sample_page_design();
        design.content.push(ContentItem {
            block_id: "panel".to_owned(),
            payload: Payload::Image(ImageContent {
                source: "img-1".to_owned(),
                fit: ImageFit::Stretch,
            }),
        });
        let png = tiny_png(4, 2);
        let part = compile_page(
            &design,
            &sample_style_guide(),
            &Canvas::default(),
            &OnePng { key: "img-1", bytes: png.clone() },
        )
        .unwrap();

        assert_eq!(part.media.len(), 1);
        let digest = Sha256::digest(&png);
        assert_eq!(part.media[0].path, format!("ppt/media/{}.png", hex_lower(&digest)));

        // Every r:embed in the XML resolves to a relationship entry.
        for (i, _) in part.xml.match_indices("r:embed=\"") {
            let rest = &part.xml[i + "r:embed=\"".len()..];
            let id = &rest[..rest.find('"').unwrap()];
            assert!(
                part.rel_entries.iter().any(|r| r.id == id),
                "r:embed {id} has no relationship entry"
            );
        }
        assert_eq!(part.rel_entries[0].rel_type, REL_TYPE_SLIDE_LAYOUT);
    }

    #[test]
    fn contain_fit_letterboxes_wide_images() {
        // 2:1 image into a 1:1 block of side 2in -> frame 2.0 x 1.0 centered.
        let block = Rect::new(1.0, 1.0, 2.0, 2.0);
        let (frame, crop) = image_frame(&block, Some((200, 100)), &ImageFit::Contain);
        assert!(crop.is_none());
        assert!((frame.x - 1.0).abs() < 1e-12);
        assert!((frame.y - 1.5).abs() < 1e-12);
        assert!((frame.w - 2.0).abs() < 1e-12);
        assert!((frame.h - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cover_fit_crops_the_overhang_symmetrically() {
        // 2:1 image covering a 1:1 block: keep the middle half horizontally,
        // i.e. crop 25% = 25000 thousandths-of-a-percent per side.
        let block = Rect::new(0.0, 0.0, 2.0, 2.0);
        let (frame, crop) = image_frame(&block, Some((200, 100)), &ImageFit::Cover);
        assert_eq!(frame, block);
        assert_eq!(crop, Some((25_000, 0, 25_000, 0)));
    }

    #[test]
    fn unknown_dimensions_fall_back_to_stretch() {
        let block = Rect::new(0.0, 0.0, 2.0, 1.0);
        let (frame, crop) = image_frame(&block, None, &ImageFit::Contain);
        assert_eq!(frame, block);
        assert!(crop.is_none());
    }

    #[test]
    fn png_and_jpeg_dimension_sniffing() {
        let png = tiny_png(640, 360);
        assert_eq!(MediaFormat::sniff(&png), Some(MediaFormat::Png));
        assert_eq!(image_dimensions(&png, MediaFormat::Png), Some((640, 360)));

        // Minimal JPEG: SOI, APP0 stub, SOF0 with 64x32, then EOI.
        let mut jpeg = vec![0xFF, 0xD8];
        jpeg.extend_from_slice(&[0xFF, 0xE0, 0x00, 0x04, 0x00, 0x00]);
        jpeg.extend_from_slice(&[
            0xFF, 0xC0, 0x00, 0x0B, 0x08, 0x00, 0x20, 0x00, 0x40, 0x01, 0x01, 0x11, 0x00,
        ]);
        jpeg.extend_from_slice(&[0xFF, 0xD9]);
        assert_eq!(MediaFormat::sniff(&jpeg), Some(MediaFormat::Jpeg));
        assert_eq!(image_dimensions(&jpeg, MediaFormat::Jpeg), Some((64, 32)));

        assert_eq!(MediaFormat::sniff(b"GIF89a"), None);
        assert_eq!(image_dimensions(b"\xFF\xD8\xFF", MediaFormat::Jpeg), None);
    }

    #[test]
    fn text_newlines_become_paragraphs() {
        let design = sample_page_design();
        let part = compile_page(&design, &sample_style_guide(), &Canvas::default(), &NoMedia)
            .unwrap();
        // Bullet block has three newline-separated lines -> three a:p with
        // the body alignment, each carrying one run.
        let bullets = part.xml.split("txt:bullets").nth(1).unwrap();
        let body = &bullets[..bullets.find("</p:sp>").unwrap()];
        assert_eq!(body.matches("<a:p>").count(), 3);
        assert_eq!(body.matches("<a:t>").count(), 3);
        assert!(body.contains("<a:t>Second point with more detail</a:t>"));
    }

    #[test]
    fn special_characters_are_escaped() {
        let mut design = sample_page_design();
        design.content[0].payload = Payload::Text(crate::ir::TextContent {
            runs: vec![TextRun {
                text: "AT&T <Q3> \"Results\"".to_owned(),
                size_pt: 30.0,
                bold: false,
                color: Color::new("#000000").unwrap(),
            }],
            alignment: Alignment::Center,
        });
        let part = compile_page(&design, &sample_style_guide(), &Canvas::default(), &NoMedia)
            .unwrap();
        assert!(part.xml.contains("AT&amp;T &lt;Q3&gt; &quot;Results&quot;"));
        assert!(part.xml.contains("algn=\"ctr\""));
    }

    #[test]
    fn equal_inputs_produce_byte_equal_output() {
        let design = sample_page_design();
        let style = sample_style_guide();
        let a = compile_page(&design, &style, &Canvas::default(), &NoMedia).unwrap();
        let b = compile_page(&design, &style, &Canvas::default(), &NoMedia).unwrap();
        assert_eq!(a.xml, b.xml);
        assert_eq!(a.rel_entries, b.rel_entries);
    }
}

//! IR data types shared by the whole pipeline.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// The 16:9 drawing surface every design targets, in decimal inches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Canvas {
    pub width_in: f64,
    pub height_in: f64,
    #[serde(default = "default_dpi")]
    pub dpi_preview: u32,
}

fn default_dpi() -> u32 {
    96
}

impl Canvas {
    /// Create a canvas, enforcing the 16:9 aspect invariant (within 1e-3)
    /// and strictly positive dimensions.
    pub fn new(width_in: f64, height_in: f64, dpi_preview: u32) -> Result<Self, CanvasError> {
        if !(width_in > 0.0) || !(height_in > 0.0) {
            return Err(CanvasError::NonPositive);
        }
        let ratio = width_in / height_in;
        if libm::fabs(ratio - 16.0 / 9.0) > 1e-3 {
            return Err(CanvasError::BadAspect { ratio });
        }
        Ok(Self { width_in, height_in, dpi_preview })
    }
}

impl Default for Canvas {
    fn default() -> Self {
        Self { width_in: 13.333, height_in: 7.5, dpi_preview: 96 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum CanvasError {
    #[error("canvas dimensions must be strictly positive")]
    NonPositive,
    #[error("canvas aspect ratio {ratio} is not 16:9 within 1e-3")]
    BadAspect { ratio: f64 },
}

/// An sRGB color carried as its raw document spelling.
///
/// The IR keeps whatever string the document contained so that validation
/// can flag malformed values (`BAD_COLOR`) instead of failing the parse;
/// only 6-hex-digit `#RRGGBB` forms are considered valid.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Color(pub String);

impl Color {
    /// Strictly parse a `#RRGGBB` color; rejects named colors and short forms.
    pub fn new(s: &str) -> Result<Self, ColorError> {
        let c = Color(String::from(s));
        if c.is_valid() {
            Ok(c)
        } else {
            Err(ColorError(String::from(s)))
        }
    }

    pub fn from_rgb(r: u8, g: u8, b: u8) -> Self {
        Color(alloc::format!("#{r:02X}{g:02X}{b:02X}"))
    }

    pub fn is_valid(&self) -> bool {
        let s = self.0.as_bytes();
        s.len() == 7 && s[0] == b'#' && s[1..].iter().all(|b| b.is_ascii_hexdigit())
    }

    /// Channel triple, if the spelling is valid.
    pub fn rgb(&self) -> Option<[u8; 3]> {
        if !self.is_valid() {
            return None;
        }
        let v = |i: usize| u8::from_str_radix(&self.0[i..i + 2], 16).ok();
        Some([v(1)?, v(3)?, v(5)?])
    }

    /// Uppercase `RRGGBB` (no `#`), the spelling OOXML wants.
    pub fn hex_upper(&self) -> Option<String> {
        self.rgb().map(|[r, g, b]| alloc::format!("{r:02X}{g:02X}{b:02X}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid sRGB color {0:?}, expected \"#RRGGBB\"")]
pub struct ColorError(pub String);

/// Axis-aligned rectangle in inches, origin at the canvas top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Overlap area under half-open interval semantics: rectangles that
    /// only share an edge do not intersect.
    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let ix = f64::min(self.right(), other.right()) - f64::max(self.x, other.x);
        let iy = f64::min(self.bottom(), other.bottom()) - f64::max(self.y, other.y);
        if ix > 0.0 && iy > 0.0 {
            ix * iy
        } else {
            0.0
        }
    }

    /// True iff the rect lies inside `canvas`, with `eps` slack per edge.
    pub fn within_canvas(&self, canvas: &Canvas, eps: f64) -> bool {
        self.x >= -eps
            && self.y >= -eps
            && self.right() <= canvas.width_in + eps
            && self.bottom() <= canvas.height_in + eps
    }
}

/// Functional pages structure the deck; content pages carry its substance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageKind {
    Cover,
    SectionDivider,
    Content,
    End,
}

impl PageKind {
    pub fn is_functional(&self) -> bool {
        !matches!(self, PageKind::Content)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeckOutline {
    #[serde(default = "super::parse::schema_version_string")]
    pub schema_version: String,
    pub topic: String,
    pub sections: Vec<Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_requirements: Option<String>,
}

impl DeckOutline {
    /// All slides in deck order, flattened across sections.
    pub fn slides(&self) -> impl Iterator<Item = &SlideOutline> {
        self.sections.iter().flat_map(|s| s.slides.iter())
    }

    pub fn slide_count(&self) -> usize {
        self.sections.iter().map(|s| s.slides.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub title: String,
    /// Must equal `slides.len()` once the outline is finalized; omitted in
    /// hand-written documents, where it defaults to the slide count.
    #[serde(default)]
    pub slide_budget: Option<u32>,
    pub slides: Vec<SlideOutline>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlideOutline {
    pub title: String,
    #[serde(default)]
    pub bullets: Vec<String>,
    #[serde(default = "default_page_kind")]
    pub page_kind: PageKind,
    /// Short slide-specific layout direction, e.g. "horizontal blocks".
    #[serde(default)]
    pub layout_hint: String,
}

fn default_page_kind() -> PageKind {
    PageKind::Content
}

/// Font family plus the size range (points) the designer may use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FontSpec {
    pub family: String,
    pub min_pt: f64,
    pub max_pt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Rect,
    RoundedRect,
    Ellipse,
    Line,
    Triangle,
}

/// A deck-wide decorative element rule: shape, color, and rough placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecorSpec {
    pub shape: ShapeKind,
    pub color: Color,
    pub approx_region: Rect,
    pub z: i32,
}

/// Deck-wide style contract produced at the slides level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleGuide {
    pub tone: String,
    pub palette: Vec<Color>,
    pub title_color: Color,
    pub body_color: Color,
    pub title_font: FontSpec,
    pub body_font: FontSpec,
    #[serde(default)]
    pub decor: Vec<DecorSpec>,
    pub functional_rules: String,
    pub content_rules: String,
}

/// One element of the background layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackgroundElement {
    SolidFill { geometry: Rect, color: Color, z: i32 },
    DecorShape { shape: ShapeKind, geometry: Rect, color: Color, z: i32 },
    BackgroundImage { geometry: Rect, image_ref: String, z: i32 },
}

impl BackgroundElement {
    pub fn geometry(&self) -> &Rect {
        match self {
            BackgroundElement::SolidFill { geometry, .. }
            | BackgroundElement::DecorShape { geometry, .. }
            | BackgroundElement::BackgroundImage { geometry, .. } => geometry,
        }
    }

    pub fn z(&self) -> i32 {
        match self {
            BackgroundElement::SolidFill { z, .. }
            | BackgroundElement::DecorShape { z, .. }
            | BackgroundElement::BackgroundImage { z, .. } => *z,
        }
    }

    pub fn color(&self) -> Option<&Color> {
        match self {
            BackgroundElement::SolidFill { color, .. }
            | BackgroundElement::DecorShape { color, .. } => Some(color),
            BackgroundElement::BackgroundImage { .. } => None,
        }
    }
}

/// Structural role of a layout block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRole {
    Title,
    Bullets,
    Body,
    Image,
    Caption,
    Panel,
    Separator,
}

impl BlockRole {
    /// Roles that carry content and therefore participate in overlap and
    /// area compliance checks; panels and separators are exempt.
    pub fn is_content_bearing(&self) -> bool {
        !matches!(self, BlockRole::Panel | BlockRole::Separator)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Border {
    pub color: Color,
    pub width_pt: f64,
}

/// One block of the layout layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub id: String,
    pub role: BlockRole,
    pub geometry: Rect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill: Option<Color>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub border: Option<Border>,
    pub z: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    Left,
    Center,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextRun {
    pub text: String,
    pub size_pt: f64,
    #[serde(default)]
    pub bold: bool,
    pub color: Color,
}

/// Text payload. Word wrap is always on in the compiled slide, so it is not
/// represented here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextContent {
    pub runs: Vec<TextRun>,
    #[serde(default = "default_alignment")]
    pub alignment: Alignment,
}

fn default_alignment() -> Alignment {
    Alignment::Left
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageFit {
    Contain,
    Cover,
    Stretch,
}

/// Image payload. `source` must come from the provided image list; invented
/// references are a hard error at compile time, never silently swallowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageContent {
    pub source: String,
    #[serde(default = "default_fit")]
    pub fit: ImageFit,
}

fn default_fit() -> ImageFit {
    ImageFit::Contain
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Payload {
    Text(TextContent),
    Image(ImageContent),
}

/// One item of the content layer, bound to a layout block by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentItem {
    pub block_id: String,
    pub payload: Payload,
}

/// A slide's full specification as three ordered layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageDesign {
    #[serde(default = "super::parse::schema_version_string")]
    pub schema_version: String,
    pub slide_index: u32,
    pub page_kind: PageKind,
    #[serde(default)]
    pub background: Vec<BackgroundElement>,
    pub layout: Vec<Block>,
    #[serde(default)]
    pub content: Vec<ContentItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_rationale: Option<String>,
}

impl PageDesign {
    pub fn block(&self, id: &str) -> Option<&Block> {
        self.layout.iter().find(|b| b.id == id)
    }

    /// Content items attached to `block_id`, in document order.
    pub fn content_for<'a>(
        &'a self,
        block_id: &'a str,
    ) -> impl Iterator<Item = &'a ContentItem> + 'a {
        self.content.iter().filter(move |c| c.block_id == block_id)
    }
}

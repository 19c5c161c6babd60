//! The design IR: canvas model, deck outline, style guide, and the
//! three-layer page design (background / layout / content), plus parsing
//! and validation.
//!
//! Documents are JSON, strict about unknown keys, and carry a
//! `schema_version` string (currently `"1"`). Geometry is stored in decimal
//! inches with the origin at the canvas top-left; nothing is rounded before
//! EMU conversion at emission time.

mod parse;
mod types;
mod validate;

pub use parse::{
    parse_deck_outline, parse_page_design, parse_style_guide, serialize_page_design, IrError,
    SCHEMA_VERSION,
};
pub use types::{
    Alignment, BackgroundElement, Block, BlockRole, Border, Canvas, Color, ContentItem,
    DeckOutline, DecorSpec, FontSpec, ImageContent, ImageFit, PageDesign, PageKind, Payload,
    Rect, Section, ShapeKind, SlideOutline, StyleGuide, TextContent, TextRun,
};
pub use validate::{validate_page_design, ValidationReport, Violation, ViolationCode};

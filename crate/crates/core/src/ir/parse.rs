//! Strict JSON parsing for IR documents.
//!
//! Unknown keys are rejected (agent-emitted documents drift; silently
//! accepting them hides schema violations), and every document version is
//! checked against [`SCHEMA_VERSION`].

use alloc::string::{String, ToString};

use super::types::{DeckOutline, PageDesign, PageKind, StyleGuide};

/// Version stamped into and required of IR documents.
pub const SCHEMA_VERSION: &str = "1";

pub(crate) fn schema_version_string() -> String {
    String::from(SCHEMA_VERSION)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IrError {
    /// Malformed JSON (not even parseable), with source position.
    #[error("JSON syntax error at line {line} column {column}: {detail}")]
    Parse { line: usize, column: usize, detail: String },
    /// Well-formed JSON that does not fit the schema: missing, mistyped,
    /// or unknown fields, with the offending position.
    #[error("schema error at line {line} column {column}: {detail}")]
    Schema { line: usize, column: usize, detail: String },
    /// Outline without sections, or a section without slides.
    #[error("empty outline: {0}")]
    EmptyOutline(String),
    /// Semantic constraint violated by an otherwise well-typed document.
    #[error("invalid document: {0}")]
    Constraint(String),
    #[error("unsupported schema_version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },
}

fn classify(err: serde_json::Error) -> IrError {
    let line = err.line();
    let column = err.column();
    let detail = err.to_string();
    match err.classify() {
        serde_json::error::Category::Data => IrError::Schema { line, column, detail },
        _ => IrError::Parse { line, column, detail },
    }
}

fn check_version(found: &str) -> Result<(), IrError> {
    if found == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(IrError::Version { found: found.to_string(), expected: SCHEMA_VERSION.to_string() })
    }
}

/// Parse a page design document. Structural problems are errors here;
/// geometric and referential problems are left to
/// [`validate_page_design`](super::validate_page_design), which reports
/// instead of failing.
pub fn parse_page_design(doc: &str) -> Result<PageDesign, IrError> {
    let design: PageDesign = serde_json::from_str(doc).map_err(classify)?;
    check_version(&design.schema_version)?;
    Ok(design)
}

/// Canonical serialization: struct field order, compact separators. For any
/// parsed design, `parse_page_design(serialize_page_design(&p)) == p`.
pub fn serialize_page_design(design: &PageDesign) -> String {
    serde_json::to_string(design).expect("page design serialization cannot fail")
}

/// Parse a deck outline and enforce its structural invariants: at least one
/// section, at least one slide per section, non-empty slide titles, bullets
/// on content pages, and `slide_budget == slides.len()` where given.
pub fn parse_deck_outline(doc: &str) -> Result<DeckOutline, IrError> {
    let outline: DeckOutline = serde_json::from_str(doc).map_err(classify)?;
    check_version(&outline.schema_version)?;
    if outline.sections.is_empty() {
        return Err(IrError::EmptyOutline(String::from("no sections")));
    }
    for section in &outline.sections {
        if section.slides.is_empty() {
            return Err(IrError::EmptyOutline(alloc::format!(
                "section {:?} has no slides",
                section.title
            )));
        }
        if let Some(budget) = section.slide_budget {
            if budget as usize != section.slides.len() {
                return Err(IrError::Constraint(alloc::format!(
                    "section {:?}: slide_budget {} != {} slides",
                    section.title,
                    budget,
                    section.slides.len()
                )));
            }
            if budget == 0 {
                return Err(IrError::Constraint(alloc::format!(
                    "section {:?}: slide_budget must be >= 1",
                    section.title
                )));
            }
        }
        for slide in &section.slides {
            if slide.title.trim().is_empty() {
                return Err(IrError::Constraint(alloc::format!(
                    "section {:?} contains a slide with an empty title",
                    section.title
                )));
            }
            if slide.page_kind == PageKind::Content && slide.bullets.is_empty() {
                return Err(IrError::Constraint(alloc::format!(
                    "content slide {:?} has no bullets",
                    slide.title
                )));
            }
        }
    }
    Ok(outline)
}

/// Parse a style guide and enforce its invariants: non-empty palette, valid
/// colors, and font sizes within [8, 96] pt.
pub fn parse_style_guide(doc: &str) -> Result<StyleGuide, IrError> {
    let style: StyleGuide = serde_json::from_str(doc).map_err(classify)?;
    if style.palette.is_empty() {
        return Err(IrError::Constraint(String::from("palette must not be empty")));
    }
    let all_colors = style
        .palette
        .iter()
        .chain([&style.title_color, &style.body_color])
        .chain(style.decor.iter().map(|d| &d.color));
    for color in all_colors {
        if !color.is_valid() {
            return Err(IrError::Constraint(alloc::format!(
                "invalid color {:?}, expected \"#RRGGBB\"",
                color.as_str()
            )));
        }
    }
    for font in [&style.title_font, &style.body_font] {
        if !(font.min_pt >= 8.0 && font.max_pt <= 96.0 && font.min_pt <= font.max_pt) {
            return Err(IrError::Constraint(alloc::format!(
                "font size range [{}, {}] outside [8, 96] pt",
                font.min_pt,
                font.max_pt
            )));
        }
    }
    Ok(style)
}

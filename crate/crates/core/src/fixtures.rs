//! Programmatic builders for known-good IR values.
//!
//! Used by tests across the workspace and by the offline canned backend;
//! not part of the stable API surface.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::ir::{
    Alignment, BackgroundElement, Block, BlockRole, Color, ContentItem, DecorSpec, FontSpec,
    PageDesign, PageKind, Payload, Rect, ShapeKind, StyleGuide, TextContent, TextRun,
};

pub fn sample_style_guide() -> StyleGuide {
    StyleGuide {
        tone: String::from("clean, confident, modern"),
        palette: vec![
            Color::new("#1F4E79").unwrap(),
            Color::new("#2E75B6").unwrap(),
            Color::new("#F2B705").unwrap(),
            Color::new("#F5F6F8").unwrap(),
        ],
        title_color: Color::new("#1F4E79").unwrap(),
        body_color: Color::new("#333333").unwrap(),
        title_font: FontSpec { family: String::from("Calibri"), min_pt: 24.0, max_pt: 40.0 },
        body_font: FontSpec { family: String::from("Calibri"), min_pt: 12.0, max_pt: 20.0 },
        decor: vec![DecorSpec {
            shape: ShapeKind::Rect,
            color: Color::new("#F2B705").unwrap(),
            approx_region: Rect::new(0.0, 7.1, 13.333, 0.4),
            z: 1,
        }],
        functional_rules: String::from(
            "Functional pages use the primary palette color as a full-bleed panel, \
             a single large centered title, and at most one decorative accent bar.",
        ),
        content_rules: String::from(
            "Content pages keep a white background, a left-aligned title band, \
             generous margins, and at most three content blocks per page.",
        ),
    }
}

/// A small, fully valid content page: title band, bullet block, accent panel.
pub fn sample_page_design() -> PageDesign {
    PageDesign {
        schema_version: String::from("1"),
        slide_index: 0,
        page_kind: PageKind::Content,
        background: vec![
            BackgroundElement::SolidFill {
                geometry: Rect::new(0.0, 0.0, 13.333, 7.5),
                color: Color::new("#FFFFFF").unwrap(),
                z: 0,
            },
            BackgroundElement::DecorShape {
                shape: ShapeKind::Rect,
                geometry: Rect::new(0.0, 7.1, 13.333, 0.4),
                color: Color::new("#F2B705").unwrap(),
                z: 1,
            },
        ],
        layout: vec![
            Block {
                id: String::from("title"),
                role: BlockRole::Title,
                geometry: Rect::new(0.5, 0.3, 12.3, 1.0),
                fill: None,
                border: None,
                z: 10,
            },
            Block {
                id: String::from("bullets"),
                role: BlockRole::Bullets,
                geometry: Rect::new(0.7, 1.6, 7.4, 5.0),
                fill: None,
                border: None,
                z: 11,
            },
            Block {
                id: String::from("panel"),
                role: BlockRole::Panel,
                geometry: Rect::new(8.5, 1.6, 4.2, 5.0),
                fill: Some(Color::new("#F5F6F8").unwrap()),
                border: Some(crate::ir::Border {
                    color: Color::new("#2E75B6").unwrap(),
                    width_pt: 1.5,
                }),
                z: 12,
            },
        ],
        content: vec![
            ContentItem {
                block_id: String::from("title"),
                payload: Payload::Text(TextContent {
                    runs: vec![TextRun {
                        text: String::from("Sample Slide Title"),
                        size_pt: 32.0,
                        bold: true,
                        color: Color::new("#1F4E79").unwrap(),
                    }],
                    alignment: Alignment::Left,
                }),
            },
            ContentItem {
                block_id: String::from("bullets"),
                payload: Payload::Text(TextContent {
                    runs: vec![TextRun {
                        text: String::from(
                            "First point about the topic\nSecond point with more detail\nThird point to close",
                        ),
                        size_pt: 16.0,
                        bold: false,
                        color: Color::new("#333333").unwrap(),
                    }],
                    alignment: Alignment::Left,
                }),
            },
        ],
        design_rationale: None,
    }
}

/// A minimal valid PNG bitstream (1x1 unless overridden) for media tests.
/// Only the signature and IHDR carry real information; the payload is a
/// precomputed single-pixel image.
pub fn tiny_png(width: u32, height: u32) -> Vec<u8> {
    let mut bytes = vec![
        0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A, // signature
        0x00, 0x00, 0x00, 0x0D, // IHDR length
        b'I', b'H', b'D', b'R',
    ];
    bytes.extend_from_slice(&width.to_be_bytes());
    bytes.extend_from_slice(&height.to_be_bytes());
    // bit depth 8, color type 2 (RGB), default compression/filter/interlace
    bytes.extend_from_slice(&[8, 2, 0, 0, 0]);
    // CRC placeholder; dimension sniffing does not verify checksums
    bytes.extend_from_slice(&[0, 0, 0, 0]);
    // IDAT with one white RGB pixel, then IEND
    bytes.extend_from_slice(&[
        0x00, 0x00, 0x00, 0x0C, b'I', b'D', b'A', b'T', 0x08, 0xD7, 0x63, 0xF8, 0xFF, 0xFF,
        0x3F, 0x00, 0x05, 0xFE, 0x02, 0xFE, 0xA7, 0x35, 0x81, 0x84, 0x00, 0x00, 0x00, 0x00,
        b'I', b'E', b'N', b'D', 0xAE, 0x42, 0x60, 0x82,
    ]);
    bytes
}

//! Page design validation: reports geometric and referential problems
//! instead of throwing, so callers can decide whether to gate or to score.

use alloc::string::String;
use alloc::vec::Vec;

use super::types::{Canvas, Color, PageDesign, StyleGuide};

/// Slack for float comparisons against canvas edges, in inches.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    OutOfCanvas,
    DupBlockId,
    DanglingContent,
    BadColor,
    BadZOrder,
    BadFontSize,
}

impl core::fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            ViolationCode::OutOfCanvas => "OUT_OF_CANVAS",
            ViolationCode::DupBlockId => "DUP_BLOCK_ID",
            ViolationCode::DanglingContent => "DANGLING_CONTENT",
            ViolationCode::BadColor => "BAD_COLOR",
            ViolationCode::BadZOrder => "BAD_Z_ORDER",
            ViolationCode::BadFontSize => "BAD_FONT_SIZE",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub block_ids: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

/// Validate a parsed page design against the style guide and canvas.
///
/// All problems are reported, never thrown; `ok` is true iff no violation
/// was found. Violations are deterministically ordered by (code, block ids).
pub fn validate_page_design(
    design: &PageDesign,
    style: &StyleGuide,
    canvas: &Canvas,
) -> ValidationReport {
    let mut violations: Vec<Violation> = Vec::new();
    let mut push = |code: ViolationCode, ids: Vec<String>, message: String| {
        violations.push(Violation { code, block_ids: ids, message });
    };

    // OUT_OF_CANVAS over both geometric layers.
    for block in &design.layout {
        if !block.geometry.within_canvas(canvas, EDGE_EPS) {
            push(
                ViolationCode::OutOfCanvas,
                alloc::vec![block.id.clone()],
                alloc::format!(
                    "block {:?} at ({}, {}, {}x{}) exceeds the {}x{} in canvas",
                    block.id,
                    block.geometry.x,
                    block.geometry.y,
                    block.geometry.w,
                    block.geometry.h,
                    canvas.width_in,
                    canvas.height_in
                ),
            );
        }
    }
    for (i, bg) in design.background.iter().enumerate() {
        if !bg.geometry().within_canvas(canvas, EDGE_EPS) {
            push(
                ViolationCode::OutOfCanvas,
                alloc::vec![bg_id(i)],
                alloc::format!("background element {i} exceeds the canvas"),
            );
        }
    }

    // DUP_BLOCK_ID.
    let mut seen: Vec<&str> = Vec::new();
    let mut dup: Vec<&str> = Vec::new();
    for block in &design.layout {
        if seen.contains(&block.id.as_str()) {
            if !dup.contains(&block.id.as_str()) {
                dup.push(&block.id);
            }
        } else {
            seen.push(&block.id);
        }
    }
    for id in dup {
        push(
            ViolationCode::DupBlockId,
            alloc::vec![String::from(id)],
            alloc::format!("block id {id:?} is declared more than once"),
        );
    }

    // DANGLING_CONTENT.
    for item in &design.content {
        if design.block(&item.block_id).is_none() {
            push(
                ViolationCode::DanglingContent,
                alloc::vec![item.block_id.clone()],
                alloc::format!("content item references unknown block id {:?}", item.block_id),
            );
        }
    }

    // BAD_COLOR across page and style colors.
    let check_color = |owner: String, color: &Color, violations: &mut Vec<Violation>| {
        if !color.is_valid() {
            violations.push(Violation {
                code: ViolationCode::BadColor,
                block_ids: alloc::vec![owner],
                message: alloc::format!(
                    "invalid color {:?}, expected \"#RRGGBB\"",
                    color.as_str()
                ),
            });
        }
    };
    for block in &design.layout {
        if let Some(fill) = &block.fill {
            check_color(block.id.clone(), fill, &mut violations);
        }
        if let Some(border) = &block.border {
            check_color(block.id.clone(), &border.color, &mut violations);
        }
    }
    for (i, bg) in design.background.iter().enumerate() {
        if let Some(color) = bg.color() {
            check_color(bg_id(i), color, &mut violations);
        }
    }
    for item in &design.content {
        if let super::types::Payload::Text(text) = &item.payload {
            for run in &text.runs {
                check_color(item.block_id.clone(), &run.color, &mut violations);
            }
        }
    }
    if style.palette.is_empty() {
        violations.push(Violation {
            code: ViolationCode::BadColor,
            block_ids: alloc::vec![String::from("style.palette")],
            message: String::from("style palette must not be empty"),
        });
    }
    for (i, color) in style.palette.iter().enumerate() {
        check_color(alloc::format!("style.palette[{i}]"), color, &mut violations);
    }
    check_color(String::from("style.title_color"), &style.title_color, &mut violations);
    check_color(String::from("style.body_color"), &style.body_color, &mut violations);

    // BAD_Z_ORDER: every background z must sit strictly below every block z.
    if let Some(min_block_z) = design.layout.iter().map(|b| b.z).min() {
        for (i, bg) in design.background.iter().enumerate() {
            if bg.z() >= min_block_z {
                violations.push(Violation {
                    code: ViolationCode::BadZOrder,
                    block_ids: alloc::vec![bg_id(i)],
                    message: alloc::format!(
                        "background element {i} has z {} >= lowest layout z {}",
                        bg.z(),
                        min_block_z
                    ),
                });
            }
        }
    }

    // BAD_FONT_SIZE on text runs.
    for item in &design.content {
        if let super::types::Payload::Text(text) = &item.payload {
            for run in &text.runs {
                if !(8.0..=96.0).contains(&run.size_pt) {
                    violations.push(Violation {
                        code: ViolationCode::BadFontSize,
                        block_ids: alloc::vec![item.block_id.clone()],
                        message: alloc::format!(
                            "font size {} pt outside [8, 96]",
                            run.size_pt
                        ),
                    });
                }
            }
        }
    }

    violations.sort_by(|a, b| {
        (a.code, &a.block_ids, &a.message).cmp(&(b.code, &b.block_ids, &b.message))
    });
    violations.dedup();
    ValidationReport { ok: violations.is_empty(), violations }
}

fn bg_id(i: usize) -> String {
    alloc::format!("background[{i}]")
}

//! Built-in deterministic backend for offline runs.
//!
//! Every stage of the pipeline gets a schema-valid response synthesized
//! from the request's structured `context` — no network, no randomness
//! beyond an FNV-1a hash of stable inputs, so two runs with equal inputs
//! produce byte-equal responses. This is a stand-in generator, not a
//! language model: its job is to exercise the full pipeline (outline,
//! style, designs that validate and compile, parseable judge scores) with
//! honest plumbing.

use serde::Deserialize;
use slidesmith_core::ir::{
    serialize_page_design, Alignment, BackgroundElement, Block, BlockRole, Color, ContentItem,
    DecorSpec, FontSpec, PageDesign, PageKind, Payload, Rect, ShapeKind, StyleGuide, TextContent,
    TextRun,
};

use crate::backend::{BackendError, ChatRequest, ModelBackend};

pub struct CannedBackend {
    name: String,
}

impl Default for CannedBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl CannedBackend {
    pub fn new() -> Self {
        Self { name: String::from("canned-v1") }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in bytes {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn pick<'a, T>(pool: &'a [T], hash: u64, lane: u32) -> &'a T {
    &pool[((hash >> (lane * 7)) % pool.len() as u64) as usize]
}

/// Fold an optional `seed` context field into a hash so different pipeline
/// seeds explore different canned choices. Absent or zero seeds leave the
/// hash unchanged.
fn seed_mix(hash: u64, ctx: &serde_json::Value) -> u64 {
    let seed = ctx.get("seed").and_then(|v| v.as_u64()).unwrap_or(0);
    hash ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

const SECTION_POOL: &[&str] = &[
    "Background",
    "Core Concepts",
    "Current Landscape",
    "Methods",
    "Applications",
    "Case Studies",
    "Challenges",
    "Outlook",
];

const BULLET_TEMPLATES: &[&str] = &[
    "How this area shapes day-to-day practice",
    "Key drivers, constraints, and trade-offs",
    "Evidence and representative examples",
    "Where current approaches fall short",
    "What changed in the last few years",
    "Open questions worth watching",
];

const HINT_POOL: &[&str] = &["single-column", "two-column", "image-right", "wide-panel"];

const PALETTES: &[[&str; 4]] = &[
    ["#1F4E79", "#2E75B6", "#F2B705", "#F5F6F8"],
    ["#2D3142", "#EF8354", "#4F5D75", "#FDFDFD"],
    ["#14342B", "#60935D", "#E0C879", "#FAFFF0"],
    ["#3A2D4D", "#7851A9", "#FFB997", "#F9F6FB"],
    ["#0B3954", "#087E8B", "#FF5A5F", "#F4FAFF"],
    ["#4A1C40", "#C84B31", "#ECDBBA", "#FDF6EC"],
];

const TONE_POOL: &[&str] = &["professional", "minimal", "energetic", "academic", "warm", "bold"];

impl ModelBackend for CannedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let tag = request.tag.as_str();
        let ctx = &request.context;
        if tag == "research" {
            return Ok(research_text(ctx));
        }
        if tag == "outline.sections" {
            return outline_sections(ctx);
        }
        if tag == "outline.budgets" {
            return outline_budgets(ctx);
        }
        if tag == "outline.slides" {
            return outline_slides(ctx);
        }
        if tag == "style.guide" {
            return style_guide(ctx);
        }
        if tag == "style.hints" {
            return style_hints(ctx);
        }
        if tag.starts_with("expand.") {
            return expand(ctx);
        }
        if tag.starts_with("design.") {
            return design(ctx);
        }
        if tag.starts_with("coder.") {
            return ctx
                .get("design")
                .map(|d| d.to_string())
                .ok_or_else(|| BackendError::BadResponse(String::from("coder without design")));
        }
        if tag.starts_with("judge.") || tag.starts_with("content.") || tag.starts_with("imp.") {
            return Ok(scored_response(tag));
        }
        Err(BackendError::BadResponse(format!("canned backend has no recipe for tag {tag:?}")))
    }

    fn identity(&self) -> &str {
        &self.name
    }
}

fn str_field<'v>(ctx: &'v serde_json::Value, key: &str) -> &'v str {
    ctx.get(key).and_then(|v| v.as_str()).unwrap_or("")
}

fn research_text(ctx: &serde_json::Value) -> String {
    let topic = str_field(ctx, "topic");
    format!(
        "{topic} spans several active subareas. The notes below cover the \
         established background, the methods practitioners rely on today, the \
         main application domains, and the open problems that keep the field \
         moving. Where sources were available, their key claims are folded in."
    )
}

fn outline_sections(ctx: &serde_json::Value) -> Result<String, BackendError> {
    let topic = str_field(ctx, "topic");
    let hash = seed_mix(fnv1a(topic.as_bytes()), ctx);
    let count = 3 + (hash % 2) as usize;
    let start = (hash >> 5) as usize % SECTION_POOL.len();
    let sections: Vec<&str> =
        (0..count).map(|i| SECTION_POOL[(start + i * 2) % SECTION_POOL.len()]).collect();
    serde_json::to_string(&sections).map_err(|e| BackendError::BadResponse(e.to_string()))
}

fn outline_budgets(ctx: &serde_json::Value) -> Result<String, BackendError> {
    let topic = str_field(ctx, "topic");
    let n = ctx.get("sections").and_then(|v| v.as_array()).map(|a| a.len()).unwrap_or(3);
    let hash = seed_mix(fnv1a(topic.as_bytes()), ctx);
    let budgets: Vec<u32> = (0..n).map(|i| 1 + ((hash >> (i * 3)) % 2) as u32).collect();
    serde_json::to_string(&budgets).map_err(|e| BackendError::BadResponse(e.to_string()))
}

fn outline_slides(ctx: &serde_json::Value) -> Result<String, BackendError> {
    #[derive(Deserialize)]
    struct In {
        topic: String,
        sections: Vec<String>,
        budgets: Vec<u32>,
    }
    let input: In = serde_json::from_value(ctx.clone())
        .map_err(|e| BackendError::BadResponse(format!("outline.slides context: {e}")))?;
    let hash = seed_mix(fnv1a(input.topic.as_bytes()), ctx);
    let mut sections = Vec::new();
    for (s, (title, budget)) in input.sections.iter().zip(&input.budgets).enumerate() {
        let mut slides = Vec::new();
        for k in 0..*budget {
            let slide_title = if *budget == 1 {
                title.clone()
            } else {
                format!("{title} ({} of {budget})", k + 1)
            };
            let bullets: Vec<String> = (0..3)
                .map(|b| {
                    let t = pick(BULLET_TEMPLATES, hash, (s as u32 * 5 + k * 3 + b) % 9);
                    format!("{t} in {}", input.topic)
                })
                .collect();
            slides.push(serde_json::json!({"title": slide_title, "bullets": bullets}));
        }
        sections.push(serde_json::json!({"title": title, "slides": slides}));
    }
    Ok(serde_json::Value::Array(sections).to_string())
}

fn style_guide(ctx: &serde_json::Value) -> Result<String, BackendError> {
    let topic = str_field(ctx, "topic");
    let hash = seed_mix(fnv1a(topic.as_bytes()), ctx);
    let palette = pick(PALETTES, hash, 0);
    let tone = pick(TONE_POOL, hash, 1);
    let guide = StyleGuide {
        tone: (*tone).to_string(),
        palette: palette.iter().map(|c| Color((*c).to_string())).collect(),
        title_color: Color(palette[0].to_string()),
        body_color: Color(String::from("#333333")),
        title_font: FontSpec { family: String::from("Calibri"), min_pt: 24.0, max_pt: 40.0 },
        body_font: FontSpec { family: String::from("Calibri"), min_pt: 12.0, max_pt: 20.0 },
        decor: vec![DecorSpec {
            shape: ShapeKind::Rect,
            color: Color(palette[1].to_string()),
            approx_region: Rect::new(0.0, 7.1, 13.333, 0.4),
            z: 1,
        }],
        functional_rules: String::from(
            "Cover and divider pages carry one large centered title over a \
             light background with a single accent band; the end page thanks \
             the audience.",
        ),
        content_rules: String::from(
            "Content pages keep a single title bar, left-aligned body text, \
             and at most one panel or image region.",
        ),
    };
    serde_json::to_string(&guide).map_err(|e| BackendError::BadResponse(e.to_string()))
}

fn style_hints(ctx: &serde_json::Value) -> Result<String, BackendError> {
    #[derive(Deserialize)]
    struct SlideIn {
        title: String,
        page_kind: PageKind,
    }
    let slides: Vec<SlideIn> = serde_json::from_value(ctx.get("slides").cloned().unwrap_or_default())
        .map_err(|e| BackendError::BadResponse(format!("style.hints context: {e}")))?;
    let hints: Vec<String> = slides
        .iter()
        .enumerate()
        .map(|(i, s)| match s.page_kind {
            PageKind::Cover => String::from("cover"),
            PageKind::SectionDivider => String::from("divider"),
            PageKind::End => String::from("end"),
            PageKind::Content => {
                let hash = fnv1a(format!("{}|{i}", s.title).as_bytes());
                // Walk the pool by slide position so multi-page decks always
                // mix at least two layouts.
                HINT_POOL[(i + (hash % 2) as usize) % HINT_POOL.len()].to_string()
            }
        })
        .collect();
    serde_json::to_string(&hints).map_err(|e| BackendError::BadResponse(e.to_string()))
}

fn expand(ctx: &serde_json::Value) -> Result<String, BackendError> {
    #[derive(Deserialize)]
    struct Hit {
        url: String,
        snippet: String,
    }
    let hits: Vec<Hit> = serde_json::from_value(ctx.get("hits").cloned().unwrap_or_default())
        .unwrap_or_default();
    let mut snippets = Vec::new();
    let mut images = Vec::new();
    for hit in hits.iter().take(6) {
        let mut text = format!("{} (source: {})", hit.snippet, hit.url);
        text.truncate(400);
        snippets.push(text);
        if hit.url.ends_with(".png") || hit.url.ends_with(".jpg") || hit.url.ends_with(".jpeg") {
            images.push(serde_json::json!({
                "url": hit.url,
                "description": hit.snippet,
            }));
        }
    }
    Ok(serde_json::json!({"snippets": snippets, "images": images}).to_string())
}

fn scored_response(tag: &str) -> String {
    let hash = fnv1a(tag.as_bytes());
    let score = ["4", "4.5", "5"][(hash % 3) as usize];
    let mut out = format!(
        "The page presents its material in a readable order and the palette \
         holds together. Judged for {tag}."
    );
    if score != "5" {
        out.push_str("\nSUGGESTION: tighten the spacing between the title and the body block.");
    }
    out.push_str(&format!("\nSCORE: {score}"));
    out
}

// --- the canned page designer ---

#[derive(Deserialize)]
struct ImageCandidate {
    url: String,
    #[allow(dead_code)]
    description: String,
}

#[derive(Deserialize)]
struct DesignContext {
    slide_index: u32,
    page_kind: PageKind,
    title: String,
    #[serde(default)]
    bullets: Vec<String>,
    #[serde(default)]
    snippets: Vec<String>,
    #[serde(default)]
    images: Vec<ImageCandidate>,
    #[serde(default)]
    hint: String,
    style: StyleGuide,
    #[serde(default)]
    iteration: u32,
    #[serde(default)]
    feedback: Vec<String>,
}

fn design(ctx: &serde_json::Value) -> Result<String, BackendError> {
    let ctx: DesignContext = serde_json::from_value(ctx.clone())
        .map_err(|e| BackendError::BadResponse(format!("design context: {e}")))?;
    Ok(serialize_page_design(&canned_design(&ctx)))
}

/// Deterministic template layouts, one per page kind, with hint-selected
/// variants for content pages and small hash-driven nudges so repeated
/// refinement iterations explore slightly different geometry.
fn canned_design(ctx: &DesignContext) -> PageDesign {
    let hash = fnv1a(
        format!("{}|{}|{}|{}", ctx.title, ctx.slide_index, ctx.iteration, ctx.feedback.len())
            .as_bytes(),
    );
    let dx = ((hash >> 8) % 5) as f64 * 0.04;
    let dy = ((hash >> 16) % 5) as f64 * 0.04;
    let palette = &ctx.style.palette;
    let accent = palette.get(1).cloned().unwrap_or_else(|| Color(String::from("#2E75B6")));
    let light = palette.get(3).cloned().unwrap_or_else(|| Color(String::from("#F5F6F8")));
    let title_pt = (ctx.style.title_font.min_pt + ctx.style.title_font.max_pt) / 2.0;
    let body_pt = (ctx.style.body_font.min_pt + ctx.style.body_font.max_pt) / 2.0;

    let white_fill = BackgroundElement::SolidFill {
        geometry: Rect::new(0.0, 0.0, 13.333, 7.5),
        color: Color(String::from("#FFFFFF")),
        z: 0,
    };

    let title_run = |text: &str, pt: f64| TextRun {
        text: text.to_string(),
        size_pt: pt,
        bold: true,
        color: ctx.style.title_color.clone(),
    };
    let body_run = |text: &str, pt: f64| TextRun {
        text: text.to_string(),
        size_pt: pt,
        bold: false,
        color: ctx.style.body_color.clone(),
    };
    let text_item = |block_id: &str, runs: Vec<TextRun>, alignment: Alignment| ContentItem {
        block_id: block_id.to_string(),
        payload: Payload::Text(TextContent { runs, alignment }),
    };
    let block = |id: &str, role: BlockRole, geometry: Rect, z: i32| Block {
        id: id.to_string(),
        role,
        geometry,
        fill: None,
        border: None,
        z,
    };

    let (background, layout, content) = match ctx.page_kind {
        PageKind::Cover => {
            let background = vec![
                white_fill,
                BackgroundElement::DecorShape {
                    shape: ShapeKind::Rect,
                    geometry: Rect::new(0.0, 4.9, 13.333, 0.3),
                    color: accent.clone(),
                    z: 1,
                },
            ];
            let layout = vec![
                block("title", BlockRole::Title, Rect::new(1.2 + dx, 2.1 + dy, 10.6, 1.6), 10),
                block("subtitle", BlockRole::Body, Rect::new(1.2 + dx, 3.9 + dy, 8.6, 0.8), 11),
            ];
            let content = vec![
                text_item(
                    "title",
                    vec![title_run(&ctx.title, ctx.style.title_font.max_pt)],
                    Alignment::Center,
                ),
                text_item("subtitle", vec![body_run("An overview", body_pt)], Alignment::Center),
            ];
            (background, layout, content)
        }
        PageKind::SectionDivider => {
            let background = vec![
                white_fill,
                BackgroundElement::DecorShape {
                    shape: ShapeKind::Rect,
                    geometry: Rect::new(0.0, 0.0, 0.6, 7.5),
                    color: accent.clone(),
                    z: 1,
                },
            ];
            let layout = vec![
                block("title", BlockRole::Title, Rect::new(1.5, 2.6 + dy, 10.2, 1.8), 10),
                block("lede", BlockRole::Body, Rect::new(1.5, 4.6 + dy, 8.4, 0.8), 11),
            ];
            let content = vec![
                text_item("title", vec![title_run(&ctx.title, title_pt)], Alignment::Left),
                text_item("lede", vec![body_run("What this section covers", body_pt)], Alignment::Left),
            ];
            (background, layout, content)
        }
        PageKind::End => {
            let background = vec![
                white_fill,
                BackgroundElement::DecorShape {
                    shape: ShapeKind::Rect,
                    geometry: Rect::new(0.0, 4.9, 13.333, 0.3),
                    color: accent.clone(),
                    z: 1,
                },
            ];
            let layout = vec![
                block("title", BlockRole::Title, Rect::new(1.7, 2.4 + dy, 9.9, 1.8), 10),
                block("contact", BlockRole::Body, Rect::new(1.7, 4.4 + dy, 8.2, 0.8), 11),
            ];
            let content = vec![
                text_item("title", vec![title_run(&ctx.title, title_pt)], Alignment::Center),
                text_item("contact", vec![body_run("Questions welcome", body_pt)], Alignment::Center),
            ];
            (background, layout, content)
        }
        PageKind::Content => content_page(ctx, hash, dx, dy, &accent, &light, title_pt, body_pt),
    };

    PageDesign {
        schema_version: String::from("1"),
        slide_index: ctx.slide_index,
        page_kind: ctx.page_kind,
        background,
        layout,
        content,
        design_rationale: Some(format!(
            "canned layout {} for {:?} page",
            if ctx.hint.is_empty() { "default" } else { ctx.hint.as_str() },
            ctx.page_kind
        )),
    }
}

#[allow(clippy::too_many_arguments)]
fn content_page(
    ctx: &DesignContext,
    hash: u64,
    dx: f64,
    dy: f64,
    accent: &Color,
    light: &Color,
    title_pt: f64,
    body_pt: f64,
) -> (Vec<BackgroundElement>, Vec<Block>, Vec<ContentItem>) {
    let background = vec![
        BackgroundElement::SolidFill {
            geometry: Rect::new(0.0, 0.0, 13.333, 7.5),
            color: Color(String::from("#FFFFFF")),
            z: 0,
        },
        BackgroundElement::DecorShape {
            shape: ShapeKind::Rect,
            geometry: Rect::new(0.0, 7.15, 13.333, 0.35),
            color: accent.clone(),
            z: 1,
        },
    ];

    let mut layout = vec![Block {
        id: String::from("title"),
        role: BlockRole::Title,
        geometry: Rect::new(0.5 + dx, 0.35, 12.3, 1.0),
        fill: None,
        border: None,
        z: 10,
    }];
    let mut content = vec![ContentItem {
        block_id: String::from("title"),
        payload: Payload::Text(TextContent {
            runs: vec![TextRun {
                text: ctx.title.clone(),
                size_pt: title_pt,
                bold: true,
                color: ctx.style.title_color.clone(),
            }],
            alignment: Alignment::Left,
        }),
    }];

    let bullet_runs: Vec<TextRun> = ctx
        .bullets
        .iter()
        .map(|b| TextRun {
            text: format!("{b}\n"),
            size_pt: body_pt,
            bold: false,
            color: ctx.style.body_color.clone(),
        })
        .collect();
    let panel_text = if ctx.snippets.is_empty() {
        String::from("Notes and supporting detail")
    } else {
        ctx.snippets[0].clone()
    };

    // Image layouts need an actual image; fall back to the panel variant
    // otherwise.
    let hint = if ctx.hint == "image-right" && ctx.images.is_empty() {
        "two-column"
    } else {
        ctx.hint.as_str()
    };

    match hint {
        "two-column" | "wide-panel" => {
            let (bw, px, pw) = if hint == "two-column" {
                (6.2, 7.1, 5.6)
            } else {
                (7.4, 8.3, 4.5)
            };
            layout.push(Block {
                id: String::from("bullets"),
                role: BlockRole::Bullets,
                geometry: Rect::new(0.7, 1.7 + dy, bw, 5.1),
                fill: None,
                border: None,
                z: 11,
            });
            layout.push(Block {
                id: String::from("panel"),
                role: BlockRole::Panel,
                geometry: Rect::new(px, 1.7 + dy, pw, 5.1),
                fill: Some(light.clone()),
                border: Some(slidesmith_core::ir::Border {
                    color: accent.clone(),
                    width_pt: 1.5,
                }),
                z: 12,
            });
            layout.push(Block {
                id: String::from("aside"),
                role: BlockRole::Body,
                geometry: Rect::new(px + 0.3, 2.0 + dy, pw - 0.6, 4.5),
                fill: None,
                border: None,
                z: 13,
            });
            content.push(ContentItem {
                block_id: String::from("bullets"),
                payload: Payload::Text(TextContent { runs: bullet_runs, alignment: Alignment::Left }),
            });
            content.push(ContentItem {
                block_id: String::from("aside"),
                payload: Payload::Text(TextContent {
                    runs: vec![TextRun {
                        text: panel_text,
                        size_pt: (body_pt - 2.0).max(8.0),
                        bold: false,
                        color: ctx.style.body_color.clone(),
                    }],
                    alignment: Alignment::Left,
                }),
            });
        }
        "image-right" => {
            layout.push(Block {
                id: String::from("bullets"),
                role: BlockRole::Bullets,
                geometry: Rect::new(0.7, 1.7 + dy, 6.6, 5.1),
                fill: None,
                border: None,
                z: 11,
            });
            layout.push(Block {
                id: String::from("figure"),
                role: BlockRole::Image,
                geometry: Rect::new(7.7, 1.7 + dy, 5.0, 4.2),
                fill: None,
                border: None,
                z: 12,
            });
            content.push(ContentItem {
                block_id: String::from("bullets"),
                payload: Payload::Text(TextContent { runs: bullet_runs, alignment: Alignment::Left }),
            });
            content.push(ContentItem {
                block_id: String::from("figure"),
                payload: Payload::Image(slidesmith_core::ir::ImageContent {
                    source: ctx.images[0].url.clone(),
                    fit: slidesmith_core::ir::ImageFit::Cover,
                }),
            });
        }
        _ => {
            // single-column and anything unrecognized
            let wiggle = ((hash >> 24) % 3) as f64 * 0.1;
            layout.push(Block {
                id: String::from("bullets"),
                role: BlockRole::Bullets,
                geometry: Rect::new(0.7 + wiggle, 1.7 + dy, 11.9 - wiggle, 5.1),
                fill: None,
                border: None,
                z: 11,
            });
            content.push(ContentItem {
                block_id: String::from("bullets"),
                payload: Payload::Text(TextContent { runs: bullet_runs, alignment: Alignment::Left }),
            });
        }
    }

    (background, layout, content)
}

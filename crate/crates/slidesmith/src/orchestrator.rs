//! The deck-generation pipeline: research → outline → functional-page
//! insertion → style planning → per-page content expansion, design,
//! implementation, and judged refinement → archive assembly and artifact
//! writing.
//!
//! Stage boundaries are the module's public functions so each can be tested
//! against a scripted backend. A page failure never aborts the run: the
//! page is dropped from the deck, recorded in the success-rate accounting,
//! and everything else proceeds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use base64::Engine as _;
use serde::Serialize;
use serde_json::json;

use slidesmith_core::ir::{
    parse_deck_outline, parse_page_design, parse_style_guide, serialize_page_design, Canvas,
    DeckOutline, PageDesign, PageKind, Section, SlideOutline, StyleGuide,
};
use slidesmith_core::judge::{designer_reward, RewardWeights};
use slidesmith_core::metrics::{
    balance_score, compliance_report, success_rate, BalanceParams, ComplianceReport,
    FailureStage, RunOutcome,
};
use slidesmith_core::pptx::{compile_page, MediaSource, SlidePart};
use slidesmith_core::raster::{render_page, to_grayscale, ImageProvider};

use crate::archive::{assemble_deck, ArchiveError, DeckMeta};
use crate::backend::{
    complete_with_retry, BackendError, ChatRequest, ModelBackend, RetryPolicy, SearchClient,
    SearchHit,
};
use crate::eval::{
    evaluate_page, implementation_proxy, implementation_score, EvalError, PageInputs,
};
use crate::preview::{encode_pgm, encode_png};
use crate::prompts::{PromptError, PromptSet};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{stage}: {detail}")]
    Schema { stage: String, detail: String },
    #[error("no page survived generation; there is nothing to assemble")]
    EmptyDeck,
    #[error("configuration: {0}")]
    Config(String),
}

fn schema_err(stage: &str, detail: impl Into<String>) -> PipelineError {
    PipelineError::Schema { stage: stage.to_string(), detail: detail.into() }
}

/// Run-wide knobs. Defaults follow the trained pipeline: up to three
/// refinement rounds per page, acceptance at a designer reward of 0.75.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub topic: String,
    /// Free-text user requirements; a `#RRGGBB` token here overrides the
    /// primary palette color.
    pub requirements: Option<String>,
    pub offline: bool,
    pub seed: u64,
    pub max_refine_iters: u32,
    pub accept_threshold: f64,
    pub weights: RewardWeights,
    pub retry: RetryPolicy,
    pub canvas: Canvas,
    /// Give an invalid design one schema-repair round before failing it.
    pub enable_coder: bool,
}

impl PipelineConfig {
    pub fn new(topic: impl Into<String>) -> Self {
        Self {
            topic: topic.into(),
            requirements: None,
            offline: false,
            seed: 0,
            max_refine_iters: 3,
            accept_threshold: 0.75,
            weights: RewardWeights::default(),
            retry: RetryPolicy::default(),
            canvas: Canvas::default(),
            enable_coder: true,
        }
    }
}

/// Append-only run log. Entries are JSON objects with a monotone `seq`;
/// the whole log serializes to one JSONL document. Kept in memory and
/// flushed once so a crashed run never leaves a half-written line.
#[derive(Debug, Default)]
pub struct RunLog {
    entries: Vec<serde_json::Value>,
}

impl RunLog {
    pub fn record(&mut self, kind: &str, payload: serde_json::Value) {
        let mut object = match payload {
            serde_json::Value::Object(map) => map,
            other => {
                let mut map = serde_json::Map::new();
                map.insert("payload".to_string(), other);
                map
            }
        };
        object.insert("seq".to_string(), json!(self.entries.len() as u64));
        object.insert("kind".to_string(), json!(kind));
        self.entries.push(serde_json::Value::Object(object));
    }

    pub fn exchange(&mut self, tag: &str, prompt: &str, response: &str) {
        self.record("exchange", json!({"tag": tag, "prompt": prompt, "response": response}));
    }

    pub fn decision(&mut self, stage: &str, detail: impl Into<String>) {
        self.record("decision", json!({"stage": stage, "detail": detail.into()}));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            let _ = writeln!(out, "{entry}");
        }
        out
    }
}

/// URL-safe slug of a topic: lowercase alphanumeric runs joined by `-`.
pub fn topic_slug(topic: &str) -> String {
    let mut slug = String::new();
    let mut gap = false;
    for c in topic.chars() {
        if c.is_ascii_alphanumeric() {
            if gap && !slug.is_empty() {
                slug.push('-');
            }
            slug.push(c.to_ascii_lowercase());
            gap = false;
        } else {
            gap = true;
        }
    }
    if slug.is_empty() {
        slug.push_str("deck");
    }
    slug
}

// --- stage 1: research ---

#[derive(Debug, Clone)]
pub struct ResearchNotes {
    pub summary: String,
    pub hits: Vec<SearchHit>,
}

// --- per-page content expansion result ---

#[derive(Debug, Clone, Default, serde::Deserialize)]
pub struct Expansion {
    #[serde(default)]
    pub snippets: Vec<String>,
    #[serde(default)]
    pub images: Vec<ImageCandidate>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ImageCandidate {
    pub url: String,
    pub description: String,
}

// --- per-page outcome types ---

#[derive(Debug, Clone, Serialize)]
pub struct PageScores {
    pub r_cmp: f64,
    pub r_cpl: f64,
    pub r_aes: f64,
    pub r_imp: f64,
    pub r_sty: f64,
    /// Designer reward: the weighted sum the refine loop accepts on.
    pub reward: f64,
    pub balance: f64,
    /// Raw 1–5 content score behind `r_cmp`.
    pub content_score: f64,
    /// Raw 1–5 visual scores (layout, hierarchy, color scheme).
    pub visual_scores: [f64; 3],
}

struct PageSuccess {
    design: PageDesign,
    part: SlidePart,
    png: Vec<u8>,
    pgm: Vec<u8>,
    scores: PageScores,
    iterations: u32,
    design_retries: u32,
    accepted: bool,
}

struct PageFailure {
    stage: FailureStage,
    detail: String,
    iterations: u32,
}

struct Implemented {
    part: SlidePart,
    png: Vec<u8>,
    pgm: Vec<u8>,
    compliance: ComplianceReport,
    balance: f64,
}

/// Everything reported about one planned page after the run.
#[derive(Debug, Clone, Serialize)]
pub struct PageReport {
    pub slide_index: u32,
    pub title: String,
    pub page_kind: PageKind,
    pub rendered_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_stage: Option<FailureStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<PageScores>,
    pub iterations: u32,
    pub design_retries: u32,
    /// True when the page met the acceptance threshold; false when the
    /// best-scoring refinement was kept after exhausting the budget.
    pub accepted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeckScores {
    pub schema_version: String,
    pub topic: String,
    pub slug: String,
    pub seed: u64,
    pub success_rate: f64,
    pub weights: RewardWeights,
    pub pages: Vec<PageReport>,
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub slug: String,
    pub dir: PathBuf,
    pub deck_path: PathBuf,
    pub success_rate: f64,
    pub outline: DeckOutline,
    pub scores: DeckScores,
}

// --- functional-page insertion (pure) ---

fn functional_slide(title: &str, kind: PageKind) -> SlideOutline {
    SlideOutline {
        title: title.to_string(),
        bullets: Vec::new(),
        page_kind: kind,
        layout_hint: String::new(),
    }
}

/// Insert the functional pages a finished deck needs: a cover up front, a
/// divider at the head of every content section, and a closing page.
/// Idempotent — an outline that already carries them passes through
/// unchanged — and section budgets are re-synced to the slide lists.
pub fn insert_functional_pages(mut outline: DeckOutline) -> DeckOutline {
    let has_cover = outline
        .sections
        .first()
        .and_then(|s| s.slides.first())
        .is_some_and(|s| s.page_kind == PageKind::Cover);
    if !has_cover {
        outline.sections.insert(
            0,
            Section {
                title: outline.topic.clone(),
                slide_budget: Some(1),
                slides: vec![functional_slide(&outline.topic, PageKind::Cover)],
            },
        );
    }

    for section in &mut outline.sections {
        let has_content = section.slides.iter().any(|s| s.page_kind == PageKind::Content);
        let starts_with_divider = section
            .slides
            .first()
            .is_some_and(|s| s.page_kind == PageKind::SectionDivider);
        if has_content && !starts_with_divider {
            section.slides.insert(0, functional_slide(&section.title, PageKind::SectionDivider));
        }
    }

    let has_end = outline
        .sections
        .last()
        .and_then(|s| s.slides.last())
        .is_some_and(|s| s.page_kind == PageKind::End);
    if !has_end {
        outline.sections.push(Section {
            title: "Thank You".to_string(),
            slide_budget: Some(1),
            slides: vec![functional_slide("Thank You", PageKind::End)],
        });
    }

    for section in &mut outline.sections {
        section.slide_budget = Some(section.slides.len() as u32);
    }
    outline
}

// --- the pipeline ---

/// Shared handles for one run. Stages are methods so tests can drive any
/// one of them against a scripted backend.
pub struct Pipeline<'a> {
    pub config: &'a PipelineConfig,
    pub backend: &'a dyn ModelBackend,
    pub search: Option<&'a dyn SearchClient>,
    pub prompts: &'a PromptSet,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        config: &'a PipelineConfig,
        backend: &'a dyn ModelBackend,
        search: Option<&'a dyn SearchClient>,
        prompts: &'a PromptSet,
    ) -> Self {
        Self { config, backend, search, prompts }
    }

    fn ask(
        &self,
        tag: &str,
        prompt: &str,
        context: serde_json::Value,
        log: &mut RunLog,
    ) -> Result<String, BackendError> {
        let request = ChatRequest::new(tag, prompt).with_context(context);
        let response = complete_with_retry(self.backend, &request, self.config.retry)?;
        log.exchange(tag, prompt, &response);
        Ok(response)
    }

    /// Gather sources and synthesize research notes. With no search client
    /// (or a failing one) the source list is empty and the synthesis runs
    /// from the topic alone.
    pub fn research(&self, log: &mut RunLog) -> Result<ResearchNotes, PipelineError> {
        let topic = &self.config.topic;
        let hits = match self.search {
            None => Vec::new(),
            Some(client) => match client.search(topic) {
                Ok(hits) => hits,
                Err(err) => {
                    log.decision("research", format!("search failed, proceeding without sources: {err}"));
                    Vec::new()
                }
            },
        };
        let sources_text = if hits.is_empty() {
            "(none)".to_string()
        } else {
            hits.iter()
                .map(|h| format!("- {} — {}", h.url, h.snippet))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let prompt = self.prompts.render("research", &[("topic", topic), ("sources", &sources_text)])?;
        let summary = self.ask(
            "research",
            &prompt,
            json!({"topic": topic, "hits": hits, "seed": self.config.seed}),
            log,
        )?;
        Ok(ResearchNotes { summary, hits })
    }

    /// Build the deck outline in three backend steps: section list, slide
    /// budgets, slide content. Each step's reply is strictly checked.
    pub fn outline(
        &self,
        research: &ResearchNotes,
        log: &mut RunLog,
    ) -> Result<DeckOutline, PipelineError> {
        let topic = &self.config.topic;
        let seed = self.config.seed;

        let prompt = self
            .prompts
            .render("outline_sections", &[("topic", topic), ("research", &research.summary)])?;
        let response = self.ask(
            "outline.sections",
            &prompt,
            json!({"topic": topic, "research": research.summary, "seed": seed}),
            log,
        )?;
        let sections: Vec<String> = serde_json::from_str(response.trim())
            .map_err(|e| schema_err("outline.sections", format!("expected a JSON array of section titles: {e}")))?;
        if sections.is_empty() {
            return Err(schema_err("outline.sections", "no sections proposed"));
        }
        if let Some(blank) = sections.iter().position(|s| s.trim().is_empty()) {
            return Err(schema_err("outline.sections", format!("section {blank} has an empty title")));
        }

        let sections_json = serde_json::to_string(&sections).expect("strings serialize");
        let prompt = self
            .prompts
            .render("outline_budgets", &[("topic", topic), ("sections", &sections_json)])?;
        let response = self.ask(
            "outline.budgets",
            &prompt,
            json!({"topic": topic, "sections": sections, "seed": seed}),
            log,
        )?;
        let budgets: Vec<u32> = serde_json::from_str(response.trim())
            .map_err(|e| schema_err("outline.budgets", format!("expected a JSON array of integers: {e}")))?;
        if budgets.len() != sections.len() {
            return Err(schema_err(
                "outline.budgets",
                format!("{} budgets for {} sections", budgets.len(), sections.len()),
            ));
        }
        if let Some(zero) = budgets.iter().position(|b| *b == 0) {
            return Err(schema_err(
                "outline.budgets",
                format!("section {zero:?} was budgeted zero slides; every section needs at least one"),
            ));
        }

        let budgets_json = serde_json::to_string(&budgets).expect("ints serialize");
        let prompt = self.prompts.render(
            "outline_slides",
            &[("topic", topic), ("sections", &sections_json), ("budgets", &budgets_json)],
        )?;
        let response = self.ask(
            "outline.slides",
            &prompt,
            json!({"topic": topic, "sections": sections, "budgets": budgets, "seed": seed}),
            log,
        )?;

        #[derive(serde::Deserialize)]
        struct SlideIn {
            title: String,
            #[serde(default)]
            bullets: Vec<String>,
        }
        #[derive(serde::Deserialize)]
        struct SectionIn {
            title: String,
            slides: Vec<SlideIn>,
        }
        let body: Vec<SectionIn> = serde_json::from_str(response.trim())
            .map_err(|e| schema_err("outline.slides", format!("expected sections with slides: {e}")))?;
        if body.len() != sections.len() {
            return Err(schema_err(
                "outline.slides",
                format!("{} sections returned for {} planned", body.len(), sections.len()),
            ));
        }

        let mut out_sections = Vec::with_capacity(body.len());
        for (i, section) in body.into_iter().enumerate() {
            if section.slides.is_empty() {
                return Err(schema_err("outline.slides", format!("section {i} has no slides")));
            }
            if section.slides.len() as u32 != budgets[i] {
                log.decision(
                    "outline.slides",
                    format!(
                        "section {i} returned {} slides against a budget of {}; keeping the slides",
                        section.slides.len(),
                        budgets[i]
                    ),
                );
            }
            let slides = section
                .slides
                .into_iter()
                .map(|s| SlideOutline {
                    title: s.title,
                    bullets: s.bullets,
                    page_kind: PageKind::Content,
                    layout_hint: String::new(),
                })
                .collect::<Vec<_>>();
            out_sections.push(Section {
                title: section.title,
                slide_budget: Some(slides.len() as u32),
                slides,
            });
        }

        let outline = DeckOutline {
            schema_version: "1".to_string(),
            topic: topic.clone(),
            sections: out_sections,
            user_requirements: self.config.requirements.clone(),
        };
        // Round-trip through the strict document parser so a generated
        // outline obeys exactly the rules a user-supplied one must.
        let doc = serde_json::to_string(&outline).expect("outline serializes");
        parse_deck_outline(&doc).map_err(|e| schema_err("outline", e.to_string()))
    }

    /// Plan the deck-wide style guide and per-slide layout hints. A
    /// `#RRGGBB` token in the user requirements overrides the primary
    /// palette color; content pages must not all share one layout hint.
    pub fn style(
        &self,
        outline: &mut DeckOutline,
        log: &mut RunLog,
    ) -> Result<StyleGuide, PipelineError> {
        let topic = &self.config.topic;
        let requirements = self.config.requirements.as_deref().unwrap_or("(none)");
        let prompt = self
            .prompts
            .render("style_guide", &[("topic", topic), ("requirements", requirements)])?;
        let response = self.ask(
            "style.guide",
            &prompt,
            json!({"topic": topic, "requirements": requirements, "seed": self.config.seed}),
            log,
        )?;
        let mut style = parse_style_guide(response.trim())
            .map_err(|e| schema_err("style.guide", e.to_string()))?;

        if let Some(color) = self.config.requirements.as_deref().and_then(first_hex_color) {
            if style.palette.is_empty() {
                return Err(schema_err("style.guide", "empty palette"));
            }
            log.decision("style.guide", format!("user requirements pin the primary color to {color}"));
            let color = slidesmith_core::ir::Color::new(&color)
                .map_err(|e| schema_err("style.guide", e.to_string()))?;
            style.palette[0] = color.clone();
            style.title_color = color;
        }

        let slides_ctx: Vec<serde_json::Value> = outline
            .slides()
            .map(|s| json!({"title": s.title, "page_kind": s.page_kind}))
            .collect();
        let slides_json =
            serde_json::to_string(&slides_ctx).expect("slide summaries serialize");
        let hints = self.style_hints(&slides_json, &style.tone, 0, log)?;
        let slide_count = outline.slide_count();
        if hints.len() != slide_count {
            return Err(schema_err(
                "style.hints",
                format!("{} hints for {} slides", hints.len(), slide_count),
            ));
        }

        let content_positions: Vec<usize> = outline
            .slides()
            .enumerate()
            .filter(|(_, s)| s.page_kind == PageKind::Content)
            .map(|(i, _)| i)
            .collect();
        let distinct = |hints: &[String]| {
            let mut seen: Vec<&str> = Vec::new();
            for &i in &content_positions {
                let h = hints[i].as_str();
                if !seen.contains(&h) {
                    seen.push(h);
                }
            }
            seen.len()
        };
        let mut hints = hints;
        if content_positions.len() >= 2 && distinct(&hints) < 2 {
            log.decision("style.hints", "all content pages share one layout hint; asking for more variety");
            let retry = self.style_hints(&slides_json, &style.tone, 1, log)?;
            if retry.len() == slide_count {
                hints = retry;
            }
            if distinct(&hints) < 2 {
                // Deterministic fallback: alternate the repeated hint.
                let alternative = if hints[content_positions[0]] == "two-column" {
                    "single-column"
                } else {
                    "two-column"
                };
                let flip = content_positions[content_positions.len() / 2..].to_vec();
                for i in flip {
                    hints[i] = alternative.to_string();
                }
                log.decision("style.hints", format!("forcing hint variety with {alternative:?}"));
            }
        }

        let mut iter = hints.into_iter();
        for section in &mut outline.sections {
            for slide in &mut section.slides {
                slide.layout_hint = iter.next().unwrap_or_default();
            }
        }
        Ok(style)
    }

    fn style_hints(
        &self,
        slides_json: &str,
        tone: &str,
        attempt: u32,
        log: &mut RunLog,
    ) -> Result<Vec<String>, PipelineError> {
        let prompt =
            self.prompts.render("style_hints", &[("slides", slides_json), ("tone", tone)])?;
        let slides: serde_json::Value =
            serde_json::from_str(slides_json).expect("slide summaries round-trip");
        let response = self.ask(
            "style.hints",
            &prompt,
            json!({"slides": slides, "tone": tone, "seed": self.config.seed, "attempt": attempt}),
            log,
        )?;
        serde_json::from_str(response.trim())
            .map_err(|e| schema_err("style.hints", format!("expected a JSON array of hints: {e}")))
    }

    /// Expand one content slide with retrieved snippets and image
    /// candidates. Functional pages carry no body content, so asking to
    /// expand one is a caller bug, reported as such.
    pub fn expand(
        &self,
        slide_index: u32,
        slide: &SlideOutline,
        log: &mut RunLog,
    ) -> Result<Expansion, PipelineError> {
        if slide.page_kind != PageKind::Content {
            return Err(schema_err(
                "expand",
                format!(
                    "slide {slide_index} is a {:?} page; only content pages carry expanded material",
                    slide.page_kind
                ),
            ));
        }
        let hits = match self.search {
            None => Vec::new(),
            Some(client) => {
                let query = format!("{} {}", self.config.topic, slide.title);
                match client.search(&query) {
                    Ok(hits) => hits,
                    Err(err) => {
                        log.decision(
                            "expand",
                            format!("search failed for slide {slide_index}, continuing without: {err}"),
                        );
                        Vec::new()
                    }
                }
            }
        };
        let bullets = slide.bullets.join("\n");
        let hits_json = serde_json::to_string(&hits).expect("hits serialize");
        let prompt = self.prompts.render(
            "expand",
            &[("title", &slide.title), ("bullets", &bullets), ("hits", &hits_json)],
        )?;
        let tag = format!("expand.s{slide_index}");
        let response = self.ask(
            &tag,
            &prompt,
            json!({
                "topic": self.config.topic,
                "title": slide.title,
                "bullets": slide.bullets,
                "hits": hits,
                "seed": self.config.seed,
            }),
            log,
        )?;
        let mut expansion: Expansion = serde_json::from_str(response.trim())
            .map_err(|e| schema_err(&tag, format!("expected snippets and images: {e}")))?;

        expansion.snippets.truncate(6);
        for snippet in &mut expansion.snippets {
            if snippet.len() > 400 {
                snippet.truncate(400);
            }
        }
        // An image reference is only usable if it came back from retrieval;
        // a described-but-unfetched image cannot be placed on a slide.
        let known: Vec<&str> = hits.iter().map(|h| h.url.as_str()).collect();
        let before = expansion.images.len();
        expansion.images.retain(|img| known.contains(&img.url.as_str()));
        if expansion.images.len() != before {
            log.decision(&tag, format!("dropped {} invented image reference(s)", before - expansion.images.len()));
        }
        Ok(expansion)
    }

    /// Ask for a page design and parse it. One malformed reply earns one
    /// reformat round that quotes the parser error back; a second failure
    /// fails the attempt. Returns the design and the retry count.
    fn design_page(
        &self,
        slide_index: u32,
        slide: &SlideOutline,
        style: &StyleGuide,
        expansion: &Expansion,
        iteration: u32,
        feedback: &[String],
        log: &mut RunLog,
    ) -> Result<(PageDesign, String, u32), String> {
        let canvas = &self.config.canvas;
        let bullets = slide.bullets.join("\n");
        let snippets = expansion.snippets.join("\n");
        let images = if expansion.images.is_empty() {
            "(none)".to_string()
        } else {
            expansion
                .images
                .iter()
                .map(|i| format!("- {} — {}", i.url, i.description))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let suggestions =
            if feedback.is_empty() { "(none)".to_string() } else { feedback.join("\n") };
        let style_json = serde_json::to_string(style).expect("style serializes");
        let canvas_w = format!("{}", canvas.width_in);
        let canvas_h = format!("{}", canvas.height_in);
        let index_str = slide_index.to_string();
        let prompt = self
            .prompts
            .render(
                "design",
                &[
                    ("canvas_width", canvas_w.as_str()),
                    ("canvas_height", canvas_h.as_str()),
                    ("page_kind", page_kind_name(slide.page_kind)),
                    ("slide_index", index_str.as_str()),
                    ("title", slide.title.as_str()),
                    ("bullets", bullets.as_str()),
                    ("snippets", snippets.as_str()),
                    ("images", images.as_str()),
                    ("hint", slide.layout_hint.as_str()),
                    ("style", style_json.as_str()),
                    ("suggestions", suggestions.as_str()),
                ],
            )
            .map_err(|e| e.to_string())?;
        let context = json!({
            "slide_index": slide_index,
            "page_kind": slide.page_kind,
            "title": slide.title,
            "bullets": slide.bullets,
            "snippets": expansion.snippets,
            "images": expansion.images,
            "hint": slide.layout_hint,
            "style": style,
            "iteration": iteration,
            "feedback": feedback,
        });
        let tag = format!("design.s{slide_index}");

        let response =
            self.ask(&tag, &prompt, context.clone(), log).map_err(|e| e.to_string())?;
        match parse_page_design(response.trim()) {
            Ok(mut design) => {
                design.slide_index = slide_index;
                let json = serialize_page_design(&design);
                Ok((design, json, 0))
            }
            Err(first_err) => {
                log.decision(&tag, format!("design reply unparseable ({first_err}); asking for a reformat"));
                let reformat = self
                    .prompts
                    .render(
                        "design_reformat",
                        &[("previous", response.as_str()), ("error", &first_err.to_string())],
                    )
                    .map_err(|e| e.to_string())?;
                let second =
                    self.ask(&tag, &reformat, context, log).map_err(|e| e.to_string())?;
                match parse_page_design(second.trim()) {
                    Ok(mut design) => {
                        design.slide_index = slide_index;
                        let json = serialize_page_design(&design);
                        Ok((design, json, 1))
                    }
                    Err(second_err) => Err(format!(
                        "design stayed unparseable after a reformat round: {second_err}"
                    )),
                }
            }
        }
    }

    /// Validate, compile, and render one design. An invalid design gets
    /// one schema-repair round when the coder is enabled. Failures name
    /// the stage they died at.
    fn implement_page<M: MediaSource + ImageProvider>(
        &self,
        slide_index: u32,
        design: &mut PageDesign,
        style: &StyleGuide,
        media: &M,
        log: &mut RunLog,
    ) -> Result<Implemented, (FailureStage, String)> {
        let canvas = &self.config.canvas;
        let mut report = slidesmith_core::validate_page_design(design, style, canvas);
        if !report.ok && self.config.enable_coder {
            let violations = report
                .violations
                .iter()
                .map(|v| v.message.clone())
                .collect::<Vec<_>>()
                .join("\n");
            let design_json = serialize_page_design(design);
            let tag = format!("coder.s{slide_index}");
            let prompt = self
                .prompts
                .render("coder", &[("design", design_json.as_str()), ("violations", &violations)])
                .map_err(|e| (FailureStage::Validate, e.to_string()))?;
            let context = json!({"design": serde_json::from_str::<serde_json::Value>(&design_json).expect("design json"), "violations": report.violations});
            match self.ask(&tag, &prompt, context, log) {
                Ok(response) => match parse_page_design(response.trim()) {
                    Ok(mut fixed) => {
                        fixed.slide_index = slide_index;
                        let fixed_report =
                            slidesmith_core::validate_page_design(&fixed, style, canvas);
                        if fixed_report.ok {
                            log.decision(&tag, "schema-repair round produced a valid design");
                            *design = fixed;
                            report = fixed_report;
                        } else {
                            log.decision(&tag, "schema-repair round still invalid");
                        }
                    }
                    Err(err) => log.decision(&tag, format!("schema-repair reply unparseable: {err}")),
                },
                Err(err) => log.decision(&tag, format!("schema-repair call failed: {err}")),
            }
        }
        if !report.ok {
            let detail = report
                .violations
                .iter()
                .map(|v| v.message.clone())
                .collect::<Vec<_>>()
                .join("; ");
            return Err((FailureStage::Validate, detail));
        }

        let part = compile_page(design, style, canvas, media)
            .map_err(|e| (FailureStage::Compile, e.to_string()))?;
        let image = render_page(design, style, canvas, canvas.dpi_preview, media)
            .map_err(|e| (FailureStage::Render, e.to_string()))?;
        let gray = to_grayscale(&image);
        let balance = balance_score(&gray, &BalanceParams::defaults_for(gray.width, gray.height));
        let png = encode_png(&image).map_err(|e| (FailureStage::Render, e.to_string()))?;
        let pgm = encode_pgm(&gray);
        Ok(Implemented {
            part,
            png,
            pgm,
            compliance: compliance_report(design, canvas),
            balance: balance.balance,
        })
    }

    /// The judged value an evaluator can reference: a file name offline, a
    /// self-contained data URI when a live backend must see pixels.
    fn image_reference(&self, slide_index: u32, png: &[u8]) -> String {
        if self.config.offline {
            format!("slide_{}.png", slide_index + 1)
        } else {
            format!(
                "data:image/png;base64,{}",
                base64::engine::general_purpose::STANDARD.encode(png)
            )
        }
    }

    /// Design → implement → judge, refining on feedback until the designer
    /// reward clears the acceptance threshold or the iteration budget runs
    /// out — then the best-scoring iteration is kept. A page whose every
    /// iteration failed is reported with the stage of its last failure.
    fn refine_page<M: MediaSource + ImageProvider>(
        &self,
        slide_index: u32,
        slide: &SlideOutline,
        style: &StyleGuide,
        expansion: &Expansion,
        media: &M,
        log: &mut RunLog,
    ) -> Result<Result<PageSuccess, PageFailure>, PipelineError> {
        let iterations = self.config.max_refine_iters.max(1);
        let mut feedback: Vec<String> = Vec::new();
        let mut best: Option<PageSuccess> = None;
        let mut last_failure = (FailureStage::Design, String::from("no iterations ran"));

        for iteration in 0..iterations {
            let (mut design, _json, design_retries) = match self.design_page(
                slide_index,
                slide,
                style,
                expansion,
                iteration,
                &feedback,
                log,
            ) {
                Ok(parts) => parts,
                Err(detail) => {
                    log.record(
                        "refine",
                        json!({
                            "slide_index": slide_index,
                            "iteration": iteration,
                            "failed_at": FailureStage::Design,
                            "detail": detail,
                        }),
                    );
                    last_failure = (FailureStage::Design, detail);
                    continue;
                }
            };

            let implemented =
                match self.implement_page(slide_index, &mut design, style, media, log) {
                    Ok(done) => done,
                    Err((stage, detail)) => {
                        log.record(
                            "refine",
                            json!({
                                "slide_index": slide_index,
                                "iteration": iteration,
                                "failed_at": stage,
                                "detail": detail,
                            }),
                        );
                        feedback = vec![format!(
                            "the previous design failed to build ({stage:?}): {detail}"
                        )];
                        last_failure = (stage, detail);
                        continue;
                    }
                };

            let design_json = serialize_page_design(&design);
            let image_ref = self.image_reference(slide_index, &implemented.png);
            let slide_tag = format!("s{slide_index}");
            let inputs = PageInputs {
                title: &slide.title,
                bullets: &slide.bullets,
                design_json: &design_json,
                image_ref: &image_ref,
                slide_tag: &slide_tag,
            };
            let eval = evaluate_page(
                &inputs,
                &implemented.compliance,
                self.backend,
                self.prompts,
                self.config.retry,
            )?;
            for exchange in &eval.exchanges {
                log.exchange(&exchange.tag, &exchange.prompt, &exchange.response);
            }

            let r_imp = if self.config.offline {
                implementation_proxy(&design, &implemented.part)?
            } else {
                let mut exchanges = Vec::new();
                let score = implementation_score(
                    &design_json,
                    &image_ref,
                    &slide_tag,
                    self.backend,
                    self.prompts,
                    self.config.retry,
                    &mut exchanges,
                )?;
                for exchange in &exchanges {
                    log.exchange(&exchange.tag, &exchange.prompt, &exchange.response);
                }
                score
            };

            let (r_sty, reward) = designer_reward(&eval.evaluation, r_imp, &self.config.weights)
                .map_err(|e| schema_err("reward", e.to_string()))?;
            let accepted = reward >= self.config.accept_threshold;
            log.record(
                "refine",
                json!({
                    "slide_index": slide_index,
                    "iteration": iteration,
                    "r_cmp": eval.evaluation.r_cmp,
                    "r_cpl": eval.evaluation.r_cpl,
                    "r_aes": eval.evaluation.r_aes,
                    "r_imp": r_imp,
                    "r_sty": r_sty,
                    "reward": reward,
                    "balance": implemented.balance,
                    "accepted": accepted,
                    "judge_retries": eval.retries,
                }),
            );

            let candidate = PageSuccess {
                design,
                part: implemented.part,
                png: implemented.png,
                pgm: implemented.pgm,
                scores: PageScores {
                    r_cmp: eval.evaluation.r_cmp,
                    r_cpl: eval.evaluation.r_cpl,
                    r_aes: eval.evaluation.r_aes,
                    r_imp,
                    r_sty,
                    reward,
                    balance: implemented.balance,
                    content_score: eval.content_score,
                    visual_scores: eval.visual_scores,
                },
                iterations: iteration + 1,
                design_retries,
                accepted,
            };
            if accepted {
                return Ok(Ok(candidate));
            }
            feedback = eval.evaluation.suggestions.clone();
            if feedback.is_empty() {
                feedback = vec!["improve layout balance and visual hierarchy".to_string()];
            }
            if best.as_ref().is_none_or(|b| candidate.scores.reward > b.scores.reward) {
                best = Some(candidate);
            }
        }

        Ok(match best {
            Some(kept) => {
                log.decision(
                    "refine",
                    format!(
                        "slide {slide_index} never cleared {}; keeping its best iteration (reward {:.3})",
                        self.config.accept_threshold, kept.scores.reward
                    ),
                );
                Ok(kept)
            }
            None => Err(PageFailure {
                stage: last_failure.0,
                detail: last_failure.1,
                iterations,
            }),
        })
    }

    /// Run the whole pipeline and write the artifact set: `deck.pptx`,
    /// per-slide PNG/PGM previews, `scores.json`, and `run_log.jsonl`,
    /// all under `<out_dir>/<topic-slug>/`.
    pub fn run<M: MediaSource + ImageProvider>(
        &self,
        user_outline: Option<DeckOutline>,
        media: &M,
        out_dir: &Path,
    ) -> Result<PipelineOutput, PipelineError> {
        if self.config.topic.trim().is_empty() {
            return Err(PipelineError::Config("topic must not be empty".to_string()));
        }
        let mut log = RunLog::default();
        log.record(
            "config",
            json!({
                "topic": self.config.topic,
                "seed": self.config.seed,
                "offline": self.config.offline,
                "max_refine_iters": self.config.max_refine_iters,
                "accept_threshold": self.config.accept_threshold,
                "backend": self.backend.identity(),
            }),
        );

        let outline = match user_outline {
            Some(outline) => {
                log.decision("outline", "user-supplied outline taken verbatim");
                outline
            }
            None => {
                let research = self.research(&mut log)?;
                self.outline(&research, &mut log)?
            }
        };
        let mut outline = insert_functional_pages(outline);
        let style = self.style(&mut outline, &mut log)?;

        let slug = topic_slug(&self.config.topic);
        let slides: Vec<SlideOutline> = outline.slides().cloned().collect();
        if slides.is_empty() {
            return Err(PipelineError::EmptyDeck);
        }

        let empty_expansion = Expansion::default();
        let mut reports: Vec<PageReport> = Vec::new();
        let mut outcomes: Vec<RunOutcome> = Vec::new();
        let mut successes: Vec<(u32, PageSuccess)> = Vec::new();

        for (i, slide) in slides.iter().enumerate() {
            let slide_index = i as u32;
            let expansion = if slide.page_kind == PageKind::Content {
                self.expand(slide_index, slide, &mut log)?
            } else {
                empty_expansion.clone()
            };

            match self.refine_page(slide_index, slide, &style, &expansion, media, &mut log)? {
                Ok(success) => {
                    outcomes.push(RunOutcome {
                        topic_id: slug.clone(),
                        slide_index,
                        rendered_ok: true,
                        failure_stage: None,
                    });
                    reports.push(PageReport {
                        slide_index,
                        title: slide.title.clone(),
                        page_kind: slide.page_kind,
                        rendered_ok: true,
                        failure_stage: None,
                        failure_detail: None,
                        scores: Some(success.scores.clone()),
                        iterations: success.iterations,
                        design_retries: success.design_retries,
                        accepted: success.accepted,
                    });
                    successes.push((slide_index, success));
                }
                Err(failure) => {
                    log.record(
                        "page_failed",
                        json!({
                            "slide_index": slide_index,
                            "stage": failure.stage,
                            "detail": failure.detail,
                        }),
                    );
                    outcomes.push(RunOutcome {
                        topic_id: slug.clone(),
                        slide_index,
                        rendered_ok: false,
                        failure_stage: Some(failure.stage),
                    });
                    reports.push(PageReport {
                        slide_index,
                        title: slide.title.clone(),
                        page_kind: slide.page_kind,
                        rendered_ok: false,
                        failure_stage: Some(failure.stage),
                        failure_detail: Some(failure.detail),
                        scores: None,
                        iterations: failure.iterations,
                        design_retries: 0,
                        accepted: false,
                    });
                }
            }
        }

        if successes.is_empty() {
            return Err(PipelineError::EmptyDeck);
        }
        let rate = success_rate(&outcomes).expect("outcomes is non-empty");

        let parts: Vec<SlidePart> = successes.iter().map(|(_, s)| s.part.clone()).collect();
        let meta = DeckMeta { title: self.config.topic.clone(), ..DeckMeta::default() };
        let archive = assemble_deck(&parts, &meta)?;

        let dir = out_dir.join(&slug);
        fs::create_dir_all(&dir)?;
        let deck_path = dir.join("deck.pptx");
        fs::write(&deck_path, &archive.bytes)?;
        for (slide_index, success) in &successes {
            let n = slide_index + 1;
            fs::write(dir.join(format!("slide_{n}.png")), &success.png)?;
            fs::write(dir.join(format!("slide_{n}.pgm")), &success.pgm)?;
            fs::write(
                dir.join(format!("slide_{n}.design.json")),
                serialize_page_design(&success.design),
            )?;
        }

        let scores = DeckScores {
            schema_version: "1".to_string(),
            topic: self.config.topic.clone(),
            slug: slug.clone(),
            seed: self.config.seed,
            success_rate: rate,
            weights: self.config.weights,
            pages: reports,
        };
        let scores_json = serde_json::to_string_pretty(&scores).expect("scores serialize");
        fs::write(dir.join("scores.json"), scores_json)?;

        log.record(
            "summary",
            json!({
                "success_rate": rate,
                "deck_slides": successes.len(),
                "planned_slides": slides.len(),
            }),
        );
        fs::write(dir.join("run_log.jsonl"), log.to_jsonl())?;

        Ok(PipelineOutput { slug, dir, deck_path, success_rate: rate, outline, scores })
    }
}

fn page_kind_name(kind: PageKind) -> &'static str {
    match kind {
        PageKind::Cover => "cover",
        PageKind::SectionDivider => "section_divider",
        PageKind::Content => "content",
        PageKind::End => "end",
    }
}

/// First `#RRGGBB` token in free text, upper-cased.
fn first_hex_color(text: &str) -> Option<String> {
    let bytes = text.as_bytes();
    for (i, b) in bytes.iter().enumerate() {
        if *b == b'#' && bytes.len() >= i + 7 {
            let candidate = &text[i + 1..i + 7];
            if candidate.bytes().all(|c| c.is_ascii_hexdigit()) {
                // Reject longer hex runs (#RRGGBBAA) rather than truncating.
                if bytes.get(i + 7).is_some_and(|c| c.is_ascii_hexdigit()) {
                    continue;
                }
                return Some(format!("#{}", candidate.to_ascii_uppercase()));
            }
        }
    }
    None
}

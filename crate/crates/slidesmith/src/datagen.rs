//! Training-data generation: walk a topic taxonomy, produce one
//! reward-annotated design pair per planned slide, keep only the pairs
//! whose design actually builds, scrub contact details, and emit JSONL.
//!
//! Pair generation is single-shot — one design request, no refinement —
//! so each pair reflects the designer policy's raw output. "Builds" means
//! the design parses, validates, and compiles; pairs that die earlier are
//! recorded with their failure stage and dropped by the filter.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::json;

use slidesmith_core::ir::{
    parse_page_design, parse_style_guide, serialize_page_design, Canvas, PageDesign, PageKind,
    StyleGuide,
};
use slidesmith_core::judge::{coder_reward, designer_reward, RewardRecord, RewardWeights};
use slidesmith_core::metrics::{compliance_report, FailureStage};
use slidesmith_core::pptx::{compile_page, NoMedia};

use crate::backend::{complete_with_retry, ChatRequest, ModelBackend, RetryPolicy};
use crate::eval::{evaluate_page, implementation_proxy, PageInputs};
use crate::orchestrator::{insert_functional_pages, topic_slug, Pipeline, PipelineConfig, RunLog};
use crate::prompts::PromptSet;

#[derive(Debug, thiserror::Error)]
pub enum DatagenError {
    #[error("taxonomy line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("duplicate topic {topic:?} under {primary:?} / {secondary:?}")]
    DuplicateTopic { primary: String, secondary: String, topic: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Pipeline(#[from] crate::orchestrator::PipelineError),
    #[error("record {index} failed to serialize: {detail}")]
    Serialize { index: usize, detail: String },
}

/// One taxonomy entry: a topic filed under a primary area and a secondary
/// discipline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub primary_field: String,
    pub secondary_field: String,
    pub topic: String,
}

/// Load a tab-separated taxonomy: one `primary<TAB>secondary<TAB>topic`
/// row per line; blank lines and `#` comments are skipped. A topic may not
/// repeat within its (primary, secondary) group, and an empty file is an
/// error.
pub fn load_topic_taxonomy(path: &Path) -> Result<Vec<Topic>, DatagenError> {
    let text = fs::read_to_string(path)?;
    let mut topics: Vec<Topic> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(DatagenError::Parse {
                line: line_no,
                detail: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let [primary, secondary, topic] = [fields[0].trim(), fields[1].trim(), fields[2].trim()];
        if primary.is_empty() || secondary.is_empty() || topic.is_empty() {
            return Err(DatagenError::Parse { line: line_no, detail: "empty field".to_string() });
        }
        let entry = Topic {
            primary_field: primary.to_string(),
            secondary_field: secondary.to_string(),
            topic: topic.to_string(),
        };
        if topics.iter().any(|t| {
            t.primary_field == entry.primary_field
                && t.secondary_field == entry.secondary_field
                && t.topic == entry.topic
        }) {
            return Err(DatagenError::DuplicateTopic {
                primary: entry.primary_field,
                secondary: entry.secondary_field,
                topic: entry.topic,
            });
        }
        topics.push(entry);
    }
    if topics.is_empty() {
        return Err(DatagenError::Parse { line: 0, detail: "no topic rows".to_string() });
    }
    Ok(topics)
}

// --- randomized design constraints ---

pub const STYLE_PREFERENCES: &[&str] = &[
    "minimal and airy",
    "bold and high-contrast",
    "warm editorial",
    "corporate and restrained",
    "playful with rounded shapes",
    "academic and dense",
];

pub const PALETTE_TEMPLATES: &[[&str; 3]] = &[
    ["#1F4E79", "#F2B705", "#F5F6F8"],
    ["#2D3142", "#EF8354", "#FDFDFD"],
    ["#14342B", "#E0C879", "#FAFFF0"],
    ["#0B3954", "#FF5A5F", "#F4FAFF"],
];

pub const LAYOUT_PREFERENCES: &[&str] = &[
    "single-column",
    "two-column",
    "image-right",
    "wide-panel",
];

/// Randomized per-pair design directives, as sampled specification text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignConstraints {
    pub style_preference: String,
    /// Fixed palette the design must adopt; `None` leaves color free.
    pub palette: Option<Vec<String>>,
    pub layout_preference: String,
    pub seed: u64,
}

/// Sample design constraints from the documented pools, deterministically
/// under the seed. A third of seeds leave the palette unconstrained.
pub fn sample_design_spec(seed: u64) -> DesignConstraints {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let style = *STYLE_PREFERENCES.choose(&mut rng).expect("non-empty pool");
    let palette = if rng.gen_range(0..3) == 0 {
        None
    } else {
        let template = PALETTE_TEMPLATES.choose(&mut rng).expect("non-empty pool");
        Some(template.iter().map(|c| (*c).to_string()).collect())
    };
    let layout = *LAYOUT_PREFERENCES.choose(&mut rng).expect("non-empty pool");
    DesignConstraints {
        style_preference: style.to_string(),
        palette,
        layout_preference: layout.to_string(),
        seed,
    }
}

impl DesignConstraints {
    /// The constraints as requirement text a style planner can honor.
    pub fn requirement_text(&self) -> String {
        let mut text = format!(
            "Style preference: {}. Layout preference: {}.",
            self.style_preference, self.layout_preference
        );
        if let Some(palette) = &self.palette {
            text.push_str(&format!(" Use this palette: {}.", palette.join(", ")));
        }
        text
    }
}

// --- training pairs ---

/// The page context a pair was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairContext {
    pub topic_id: String,
    pub primary_field: String,
    pub secondary_field: String,
    pub topic: String,
    pub slide_index: u32,
    pub page_kind: PageKind,
    pub title: String,
    pub bullets: Vec<String>,
    pub constraints: DesignConstraints,
    pub images: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub run_id: String,
    pub designer_backend: String,
    pub judge_backend: String,
}

/// One reward-annotated designer sample. `design` is `None` exactly when
/// the attempt died before producing a parseable design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub schema_version: String,
    pub context: PairContext,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<PageDesign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<RewardRecord>,
    pub exec_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_stage: Option<FailureStage>,
    pub provenance: Provenance,
}

/// Generate one single-shot pair: one design request, then validate,
/// compile, and judge. No reformat or refinement rounds — the pair records
/// what the policy emitted on its first try. Backend transport failures
/// mark the pair failed rather than aborting the batch.
#[allow(clippy::too_many_arguments)]
pub fn generate_pair(
    context: PairContext,
    style: &StyleGuide,
    backend: &dyn ModelBackend,
    prompts: &PromptSet,
    retry: RetryPolicy,
    canvas: &Canvas,
    weights: &RewardWeights,
    run_id: &str,
) -> TrainingPair {
    let provenance = Provenance {
        run_id: run_id.to_string(),
        designer_backend: backend.identity().to_string(),
        judge_backend: backend.identity().to_string(),
    };
    let failed = |stage: FailureStage, context: PairContext| TrainingPair {
        schema_version: "1".to_string(),
        context,
        design: None,
        rewards: None,
        exec_ok: false,
        failure_stage: Some(stage),
        provenance: provenance.clone(),
    };

    // One design request, built exactly like the pipeline's but without
    // the reformat safety net.
    let bullets = context.bullets.join("\n");
    let style_json = serde_json::to_string(style).expect("style serializes");
    let canvas_w = format!("{}", canvas.width_in);
    let canvas_h = format!("{}", canvas.height_in);
    let index_str = context.slide_index.to_string();
    let kind_name = match context.page_kind {
        PageKind::Cover => "cover",
        PageKind::SectionDivider => "section_divider",
        PageKind::Content => "content",
        PageKind::End => "end",
    };
    let prompt = match prompts.render(
        "design",
        &[
            ("canvas_width", canvas_w.as_str()),
            ("canvas_height", canvas_h.as_str()),
            ("page_kind", kind_name),
            ("slide_index", index_str.as_str()),
            ("title", context.title.as_str()),
            ("bullets", bullets.as_str()),
            ("snippets", ""),
            ("images", "(none)"),
            ("hint", context.constraints.layout_preference.as_str()),
            ("style", style_json.as_str()),
            ("suggestions", context.constraints.style_preference.as_str()),
        ],
    ) {
        Ok(p) => p,
        Err(_) => return failed(FailureStage::Design, context),
    };
    let request = ChatRequest::new(format!("design.s{}", context.slide_index), prompt)
        .with_context(json!({
            "slide_index": context.slide_index,
            "page_kind": context.page_kind,
            "title": context.title,
            "bullets": context.bullets,
            "snippets": [],
            "images": [],
            "hint": context.constraints.layout_preference,
            "style": style,
            "iteration": 0,
            "feedback": [context.constraints.style_preference],
        }));
    let response = match complete_with_retry(backend, &request, retry) {
        Ok(r) => r,
        Err(_) => return failed(FailureStage::Design, context),
    };
    let mut design = match parse_page_design(response.trim()) {
        Ok(d) => d,
        Err(_) => return failed(FailureStage::Design, context),
    };
    design.slide_index = context.slide_index;

    let report = slidesmith_core::validate_page_design(&design, style, canvas);
    if !report.ok {
        return TrainingPair {
            schema_version: "1".to_string(),
            context,
            design: Some(design),
            rewards: None,
            exec_ok: false,
            failure_stage: Some(FailureStage::Validate),
            provenance,
        };
    }
    let part = match compile_page(&design, style, canvas, &NoMedia) {
        Ok(p) => p,
        Err(_) => {
            return TrainingPair {
                schema_version: "1".to_string(),
                context,
                design: Some(design),
                rewards: None,
                exec_ok: false,
                failure_stage: Some(FailureStage::Compile),
                provenance,
            }
        }
    };

    // Judge the executable design. Implementation fidelity comes from the
    // geometric read-back proxy, so pair rewards are fully reproducible.
    let design_json = serialize_page_design(&design);
    let compliance = compliance_report(&design, canvas);
    let image_ref = format!("slide_{}.png", context.slide_index + 1);
    let inputs = PageInputs {
        title: &context.title,
        bullets: &context.bullets,
        design_json: &design_json,
        image_ref: &image_ref,
        slide_tag: &format!("s{}", context.slide_index),
    };
    let Ok(eval) = evaluate_page(&inputs, &compliance, backend, prompts, retry) else {
        return TrainingPair {
            schema_version: "1".to_string(),
            context,
            design: Some(design),
            rewards: None,
            exec_ok: false,
            failure_stage: Some(FailureStage::Render),
            provenance,
        };
    };
    let r_imp = implementation_proxy(&design, &part).unwrap_or(0.0);
    let (r_sty, r_d) =
        designer_reward(&eval.evaluation, r_imp, weights).expect("scores are unit-range");
    let r_c = coder_reward(true, r_imp).expect("r_imp is unit-range");

    TrainingPair {
        schema_version: "1".to_string(),
        context,
        design: Some(design),
        rewards: Some(RewardRecord {
            r_cmp: eval.evaluation.r_cmp,
            r_cpl: eval.evaluation.r_cpl,
            r_aes: eval.evaluation.r_aes,
            r_imp,
            r_sty,
            r_c,
            r_d,
            weights: *weights,
            judge_model: backend.identity().to_string(),
        }),
        exec_ok: true,
        failure_stage: None,
        provenance,
    }
}

/// Drop counts by failure stage, written next to the retained set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DropsReport {
    pub input: usize,
    pub retained: usize,
    pub dropped_by_stage: BTreeMap<String, usize>,
}

/// Keep only executable pairs. The output is a subset of the input in the
/// original order; dropped pairs are tallied by the stage they died at.
pub fn filter_executable(pairs: &[TrainingPair]) -> (Vec<TrainingPair>, DropsReport) {
    let mut retained = Vec::new();
    let mut report = DropsReport { input: pairs.len(), ..DropsReport::default() };
    for pair in pairs {
        if pair.exec_ok {
            retained.push(pair.clone());
        } else {
            let stage = pair
                .failure_stage
                .map(|s| format!("{s:?}").to_ascii_uppercase())
                .unwrap_or_else(|| "UNKNOWN".to_string());
            *report.dropped_by_stage.entry(stage).or_insert(0) += 1;
        }
    }
    report.retained = retained.len();
    (retained, report)
}

// --- PII scrubbing ---

fn email_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}").expect("valid pattern")
    })
}

fn phone_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // International form: +<country code>, then 2-4 digit groups separated
    // by spaces, dots, or dashes, with an optional parenthesized area code.
    RE.get_or_init(|| {
        Regex::new(r"\+\d{1,3}[ .-]?(?:\(\d{1,4}\)[ .-]?)?\d{1,4}(?:[ .-]?\d{2,4}){1,3}")
            .expect("valid pattern")
    })
}

/// Mask email addresses and international-format phone numbers. Text with
/// no matches comes back byte-identical.
pub fn scrub_pii(text: &str) -> String {
    let emailed = email_pattern().replace_all(text, "[EMAIL]");
    let phoned = phone_pattern().replace_all(&emailed, "[PHONE]");
    phoned.into_owned()
}

fn scrub_value(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::String(s) => {
            let scrubbed = scrub_pii(s);
            if scrubbed != *s {
                *s = scrubbed;
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(scrub_value),
        serde_json::Value::Object(map) => map.values_mut().for_each(scrub_value),
        _ => {}
    }
}

/// Scrub every text field of a pair, wherever it sits in the record.
pub fn scrub_pair(pair: &TrainingPair) -> TrainingPair {
    let mut value = serde_json::to_value(pair).expect("pair serializes");
    scrub_value(&mut value);
    serde_json::from_value(value).expect("scrubbing preserves the schema")
}

/// Write one JSON object per line (UTF-8, LF). Returns the record count.
pub fn write_jsonl(pairs: &[TrainingPair], path: &Path) -> Result<usize, DatagenError> {
    let mut out = String::new();
    for (index, pair) in pairs.iter().enumerate() {
        let line = serde_json::to_string(pair)
            .map_err(|e| DatagenError::Serialize { index, detail: e.to_string() })?;
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(pairs.len())
}

/// Read a pair file back; the inverse of [`write_jsonl`].
pub fn read_jsonl(path: &Path) -> Result<Vec<TrainingPair>, DatagenError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .map(|(index, line)| {
            serde_json::from_str(line)
                .map_err(|e| DatagenError::Serialize { index, detail: e.to_string() })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DatagenSummary {
    pub topics: usize,
    pub attempted: usize,
    pub retained: usize,
    pub drops: DropsReport,
}

/// The full batch job: take the first `per_secondary` topics of every
/// (primary, secondary) group, plan an outline per topic, generate one
/// single-shot pair per planned page, filter to executable pairs, scrub,
/// and write `slides_pairs.jsonl` plus `drops_report.json`.
///
/// Ordering is deterministic: taxonomy file order, then slide order; with
/// a scripted or canned backend and a fixed seed the bytes are stable.
pub fn run_datagen(
    topics: &[Topic],
    per_secondary: usize,
    seed: u64,
    backend: &dyn ModelBackend,
    prompts: &PromptSet,
    offline: bool,
    out_dir: &Path,
) -> Result<DatagenSummary, DatagenError> {
    let mut selected: Vec<&Topic> = Vec::new();
    let mut group_counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    for topic in topics {
        let key = (topic.primary_field.clone(), topic.secondary_field.clone());
        let count = group_counts.entry(key).or_insert(0);
        if *count < per_secondary {
            selected.push(topic);
            *count += 1;
        }
    }

    let retry = RetryPolicy::default();
    let canvas = Canvas::default();
    let weights = RewardWeights::default();
    let run_id = format!("datagen-seed{seed}");
    let mut pairs: Vec<TrainingPair> = Vec::new();

    for (topic_index, topic) in selected.iter().enumerate() {
        let constraints = sample_design_spec(seed.wrapping_add(topic_index as u64));
        let mut config = PipelineConfig::new(&topic.topic);
        config.offline = offline;
        config.seed = seed;
        config.retry = retry;
        config.requirements = Some(constraints.requirement_text());
        let pipeline = Pipeline::new(&config, backend, None, prompts);
        let mut log = RunLog::default();

        let research = pipeline.research(&mut log)?;
        let outline = pipeline.outline(&research, &mut log)?;
        let outline = insert_functional_pages(outline);

        // The style planner honors the sampled constraints via the
        // requirements text (palette constraints pin the primary color).
        let style_prompt = prompts
            .render(
                "style_guide",
                &[
                    ("topic", topic.topic.as_str()),
                    ("requirements", &constraints.requirement_text()),
                ],
            )
            .map_err(crate::orchestrator::PipelineError::from)?;
        let style_request = ChatRequest::new("style.guide", style_prompt).with_context(json!({
            "topic": topic.topic,
            "requirements": constraints.requirement_text(),
            "seed": seed,
        }));
        let style_response = complete_with_retry(backend, &style_request, retry)
            .map_err(crate::orchestrator::PipelineError::from)?;
        let mut style: StyleGuide = parse_style_guide(style_response.trim()).map_err(|e| {
            crate::orchestrator::PipelineError::Schema {
                stage: "style.guide".to_string(),
                detail: e.to_string(),
            }
        })?;
        if let Some(palette) = &constraints.palette {
            let colors: Result<Vec<_>, _> =
                palette.iter().map(|c| slidesmith_core::ir::Color::new(c)).collect();
            if let Ok(colors) = colors {
                if !colors.is_empty() {
                    style.title_color = colors[0].clone();
                    style.palette = colors;
                }
            }
        }

        let slug = topic_slug(&topic.topic);
        for (i, slide) in outline.slides().enumerate() {
            let context = PairContext {
                topic_id: slug.clone(),
                primary_field: topic.primary_field.clone(),
                secondary_field: topic.secondary_field.clone(),
                topic: topic.topic.clone(),
                slide_index: i as u32,
                page_kind: slide.page_kind,
                title: slide.title.clone(),
                bullets: slide.bullets.clone(),
                constraints: constraints.clone(),
                images: Vec::new(),
            };
            pairs.push(generate_pair(
                context, &style, backend, prompts, retry, &canvas, &weights, &run_id,
            ));
        }
    }

    let (retained, drops) = filter_executable(&pairs);
    let scrubbed: Vec<TrainingPair> = retained.iter().map(scrub_pair).collect();

    fs::create_dir_all(out_dir)?;
    write_jsonl(&scrubbed, &out_dir.join("slides_pairs.jsonl"))?;
    let report_json = serde_json::to_string_pretty(&drops).expect("report serializes");
    fs::write(out_dir.join("drops_report.json"), report_json)?;

    Ok(DatagenSummary {
        topics: selected.len(),
        attempted: pairs.len(),
        retained: scrubbed.len(),
        drops,
    })
}

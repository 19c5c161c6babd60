//! Page evaluation: deterministic compliance joined with judge-backed
//! content and aesthetics scores, plus the implementation-fidelity score.
//!
//! Judge transport sends one request per rubric dimension so a parse
//! failure in one dimension retries alone. Implementation fidelity has two
//! routes: a rubric prompt against the rendered image when a backend is
//! live, and a deterministic geometric proxy — the fraction of design
//! blocks recovered from the compiled slide within 1 EMU — for offline
//! runs.

use slidesmith_core::ir::PageDesign;
use slidesmith_core::judge::{
    build_judge_prompt, parse_score_labeled, score_to_unit, PageEvaluation, VISUAL_DIMENSIONS,
};
use slidesmith_core::metrics::ComplianceReport;
use slidesmith_core::pptx::{inches_to_emu, SlidePart};

use crate::archive::{assemble_deck, read_back, ArchiveError, DeckMeta};
use crate::backend::{complete_with_retry, BackendError, ChatRequest, ModelBackend, RetryPolicy};
use crate::prompts::{PromptError, PromptSet};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("check {check:?} produced no parseable score in {attempts} attempts: {last}")]
    Unscorable { check: String, attempts: u32, last: String },
}

/// One backend exchange, kept for the run log.
#[derive(Debug, Clone)]
pub struct Exchange {
    pub tag: String,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub evaluation: PageEvaluation,
    /// Raw 1–5 scores for the three visual dimensions, in
    /// [`VISUAL_DIMENSIONS`] order.
    pub visual_scores: [f64; 3],
    /// Raw 1–5 content score.
    pub content_score: f64,
    /// Parse retries consumed across all checks.
    pub retries: u32,
    pub exchanges: Vec<Exchange>,
}

/// The static inputs of one evaluation.
pub struct PageInputs<'a> {
    pub title: &'a str,
    pub bullets: &'a [String],
    pub design_json: &'a str,
    pub image_ref: &'a str,
    /// Slide tag suffix, e.g. `s3`, appended to request tags.
    pub slide_tag: &'a str,
}

/// Call the backend until the response carries a parseable `SCORE:` line.
/// Transport failures retry inside [`complete_with_retry`]; parse failures
/// re-ask from scratch, counted in `retries`.
fn scored_call(
    backend: &dyn ModelBackend,
    policy: RetryPolicy,
    tag: &str,
    prompt: &str,
    image_refs: Vec<String>,
    label: &str,
    retries: &mut u32,
    exchanges: &mut Vec<Exchange>,
) -> Result<f64, EvalError> {
    let attempts = policy.max_attempts.max(1);
    let mut last = String::new();
    for attempt in 0..attempts {
        let request = ChatRequest::new(tag, prompt).with_images(image_refs.clone());
        let response = complete_with_retry(backend, &request, policy)?;
        exchanges.push(Exchange {
            tag: tag.to_string(),
            prompt: prompt.to_string(),
            response: response.clone(),
        });
        match parse_score_labeled(&response, label) {
            Ok(score) => return Ok(score),
            Err(err) => {
                if attempt + 1 < attempts {
                    *retries += 1;
                }
                last = err.to_string();
            }
        }
    }
    Err(EvalError::Unscorable { check: label.to_string(), attempts, last })
}

fn collect_suggestions(exchanges: &[Exchange]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for exchange in exchanges {
        for line in exchange.response.lines() {
            if let Some(s) = line.trim().strip_prefix("SUGGESTION:") {
                let s = s.trim().to_string();
                if !s.is_empty() && !out.contains(&s) {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// Evaluate one rendered page: `r_cpl` comes straight from the
/// deterministic compliance report; `r_cmp` and `r_aes` come from the
/// backend via rubric prompts mapped onto [0, 1] by `(s − 1) / 4`.
pub fn evaluate_page(
    inputs: &PageInputs,
    compliance: &ComplianceReport,
    backend: &dyn ModelBackend,
    prompts: &PromptSet,
    policy: RetryPolicy,
) -> Result<EvalOutcome, EvalError> {
    let mut retries = 0;
    let mut exchanges = Vec::new();
    let bullets_text = inputs.bullets.join("\n");

    let content_prompt = prompts.render(
        "content_check",
        &[
            ("title", inputs.title),
            ("bullets", &bullets_text),
            ("design", inputs.design_json),
            ("image_ref", inputs.image_ref),
        ],
    )?;
    let content_score = scored_call(
        backend,
        policy,
        &format!("content.{}", inputs.slide_tag),
        &content_prompt,
        vec![inputs.image_ref.to_string()],
        "content",
        &mut retries,
        &mut exchanges,
    )?;

    let mut visual_scores = [0.0; 3];
    for (i, dim) in VISUAL_DIMENSIONS.iter().enumerate() {
        let prompt = build_judge_prompt(*dim, inputs.image_ref);
        visual_scores[i] = scored_call(
            backend,
            policy,
            &format!("judge.{}.{}", dim.slug(), inputs.slide_tag),
            &prompt,
            vec![inputs.image_ref.to_string()],
            dim.name(),
            &mut retries,
            &mut exchanges,
        )?;
    }
    let r_aes =
        visual_scores.iter().map(|s| score_to_unit(*s)).sum::<f64>() / visual_scores.len() as f64;

    let evaluation = PageEvaluation {
        r_cmp: score_to_unit(content_score),
        r_cpl: compliance.r_cpl,
        r_aes,
        suggestions: collect_suggestions(&exchanges),
    };
    Ok(EvalOutcome { evaluation, visual_scores, content_score, retries, exchanges })
}

/// Implementation fidelity via rubric prompt (live route).
pub fn implementation_score(
    design_json: &str,
    image_ref: &str,
    slide_tag: &str,
    backend: &dyn ModelBackend,
    prompts: &PromptSet,
    policy: RetryPolicy,
    exchanges: &mut Vec<Exchange>,
) -> Result<f64, EvalError> {
    let prompt = prompts.render(
        "implementation_check",
        &[("design", design_json), ("image_ref", image_ref)],
    )?;
    let mut retries = 0;
    let score = scored_call(
        backend,
        policy,
        &format!("imp.{slide_tag}"),
        &prompt,
        vec![image_ref.to_string()],
        "implementation",
        &mut retries,
        exchanges,
    )?;
    Ok(score_to_unit(score))
}

/// Implementation fidelity via geometry (offline route): assemble the one
/// compiled slide, read it back, and count the design blocks recovered
/// within 1 EMU per coordinate. An empty layout is trivially complete.
pub fn implementation_proxy(design: &PageDesign, part: &SlidePart) -> Result<f64, ArchiveError> {
    if design.layout.is_empty() {
        return Ok(1.0);
    }
    let archive = assemble_deck(std::slice::from_ref(part), &DeckMeta::default())?;
    let recovered = read_back(&archive.bytes)?;
    let Some(page) = recovered.pages.first() else {
        return Ok(0.0);
    };
    let mut matched = 0usize;
    for block in &design.layout {
        let expect = [
            inches_to_emu(block.geometry.x),
            inches_to_emu(block.geometry.y),
            inches_to_emu(block.geometry.w),
            inches_to_emu(block.geometry.h),
        ];
        let hit = page.blocks.iter().any(|b| {
            b.id == block.id
                && expect.iter().zip([b.x_emu, b.y_emu, b.w_emu, b.h_emu]).all(|(e, g)| {
                    matches!(e, Ok(v) if (v - g).abs() <= 1)
                })
        });
        if hit {
            matched += 1;
        }
    }
    Ok(matched as f64 / design.layout.len() as f64)
}

//! Core engine for structured slide generation: the three-layer page design
//! IR with validation, a deterministic lowering to PresentationML slide
//! parts, a self-contained software rasterizer, layout/balance metrics, and
//! the reward arithmetic used to score designer and coder agents.
//!
//! This crate is `no_std` + `alloc`; everything in it is pure and
//! deterministic. IO (archives, HTTP, files) lives in the companion
//! `slidesmith` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod fixtures;
pub mod ir;
pub mod judge;
pub mod metrics;
pub mod pptx;
pub mod raster;

pub use ir::{
    parse_deck_outline, parse_page_design, parse_style_guide, serialize_page_design,
    validate_page_design, Canvas, DeckOutline, PageDesign, PageKind, StyleGuide,
    ValidationReport,
};
pub use judge::{
    aggregate_scores, build_judge_prompt, coder_reward, designer_reward, parse_judge_score,
    parse_score_labeled, score_to_unit, PageEvaluation, RewardWeights, RubricDimension,
    ScoreCard, ScoreSummary,
};
pub use metrics::{
    balance_score, compliance_report, gaussian_blur, success_rate, visual_weight_map,
    BalanceBreakdown, BalanceParams, ComplianceKind, ComplianceReport, FailureStage,
    RunOutcome, WeightMap,
};
pub use pptx::{compile_page, inches_to_emu, MediaSource, SlidePart, EMU_PER_INCH};
pub use raster::{render_page, to_grayscale, GrayImage, ImageProvider, RasterImage};

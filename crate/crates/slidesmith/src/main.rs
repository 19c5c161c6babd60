//! Command-line front end: generate decks, compile and render single page
//! designs, score images and designs, judge rendered slides, and run the
//! training-data batch job.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use base64::Engine as _;
use clap::{Parser, Subcommand};

use slidesmith::backend::{HttpBackend, ModelBackend, RetryPolicy};
use slidesmith::canned::CannedBackend;
use slidesmith::config::AppConfig;
use slidesmith::datagen::{load_topic_taxonomy, run_datagen};
use slidesmith::media::MediaCache;
use slidesmith::orchestrator::{Pipeline, PipelineConfig};
use slidesmith::preview::{write_pgm, write_png};
use slidesmith::prompts::PromptSet;
use slidesmith_core::ir::{parse_deck_outline, parse_page_design, parse_style_guide, Canvas};
use slidesmith_core::judge::{
    build_judge_prompt, parse_judge_score, RubricDimension, ScoreCard, DIMENSIONS,
};
use slidesmith_core::metrics::{balance_score, compliance_report, BalanceParams};
use slidesmith_core::raster::{render_page, to_grayscale, GrayImage};
use slidesmith_core::StyleGuide;

#[derive(Parser)]
#[command(
    name = "slidesmith",
    about = "Generate, compile, render, and score structured slide decks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a full deck for a topic: outline, style, page designs,
    /// refinement, PPTX assembly, previews, and score report.
    Generate {
        /// Deck topic.
        #[arg(long)]
        topic: String,
        /// Use this outline document instead of generating one.
        #[arg(long)]
        outline: Option<PathBuf>,
        /// Run without network or live models (deterministic built-in
        /// backend, no retrieval, no media downloads).
        #[arg(long)]
        offline: bool,
        /// Seed for all randomized choices.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML configuration file (API endpoint, keys, models).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory that receives `<topic-slug>/deck.pptx` and friends.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compile one page-design JSON document into a single-slide .pptx.
    Compile {
        /// Page design document.
        design: PathBuf,
        /// Output .pptx path.
        #[arg(long)]
        out: PathBuf,
        /// Style guide JSON; defaults to the built-in baseline style.
        #[arg(long)]
        style: Option<PathBuf>,
    },
    /// Render one page-design JSON document to PNG and PGM previews.
    Render {
        /// Page design document.
        design: PathBuf,
        /// Preview resolution in dots per inch.
        #[arg(long, default_value_t = 96)]
        dpi: u32,
        /// Style guide JSON; defaults to the built-in baseline style.
        #[arg(long)]
        style: Option<PathBuf>,
    },
    /// Score an artifact: visual balance for an image (PNG/PGM), geometric
    /// compliance for a design document (.json).
    Score {
        /// Image file or page-design JSON document.
        input: PathBuf,
        /// Style guide JSON used when scoring a design document.
        #[arg(long)]
        style: Option<PathBuf>,
    },
    /// Grade a rendered slide image against the scoring rubrics.
    Judge {
        /// Rendered slide image.
        image: PathBuf,
        /// Dimensions to grade: `all` or a comma list
        /// (clarity,coherence,layout,hierarchy,color_scheme).
        #[arg(long, default_value = "all")]
        dims: String,
        /// Run against the deterministic built-in judge instead of a live
        /// model.
        #[arg(long)]
        offline: bool,
        /// TOML configuration file (API endpoint, keys, models).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate reward-annotated training pairs from a topic taxonomy.
    Datagen {
        /// Tab-separated taxonomy: primary, secondary, topic.
        #[arg(long)]
        taxonomy: PathBuf,
        /// Topics taken from each (primary, secondary) group.
        #[arg(long, default_value_t = 1)]
        per_secondary: usize,
        /// Seed for constraint sampling and backend choices.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run without network or live models.
        #[arg(long)]
        offline: bool,
        /// TOML configuration file (API endpoint, keys, models).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory that receives slides_pairs.jsonl and drops_report.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn load_style(path: Option<&Path>) -> anyhow::Result<StyleGuide> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading style guide {}", p.display()))?;
            Ok(parse_style_guide(&text)?)
        }
        None => Ok(slidesmith_core::fixtures::sample_style_guide()),
    }
}

/// Pick the backend: the deterministic built-in one offline, HTTP with
/// configured endpoint and model otherwise.
fn make_backend(offline: bool, config: &AppConfig) -> anyhow::Result<Box<dyn ModelBackend>> {
    if offline {
        return Ok(Box::new(CannedBackend::new()));
    }
    let base_url = config
        .api
        .base_url
        .clone()
        .context("api.base_url (or SLIDESMITH_API_BASE_URL) is required for live runs")?;
    let api_key = config
        .api
        .api_key
        .clone()
        .context("api.api_key (or SLIDESMITH_API_KEY) is required for live runs")?;
    let model = config
        .model_for("design")
        .context("api.model (or SLIDESMITH_MODEL) is required for live runs")?
        .to_string();
    Ok(Box::new(HttpBackend::new(base_url, api_key, model)))
}

/// Load an image into the grayscale domain the balance metric works on.
fn load_gray(path: &Path) -> anyhow::Result<GrayImage> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let dynamic = image::load_from_memory(&bytes)
        .with_context(|| format!("decoding {}", path.display()))?;
    let luma = dynamic.to_luma8();
    Ok(GrayImage {
        width: luma.width(),
        height: luma.height(),
        values: luma.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
    })
}

fn image_data_uri(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(format!(
        "data:image/png;base64,{}",
        base64::engine::general_purpose::STANDARD.encode(bytes)
    ))
}

fn parse_dims(spec: &str) -> anyhow::Result<Vec<RubricDimension>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(DIMENSIONS.to_vec());
    }
    spec.split(',')
        .map(|name| {
            let name = name.trim();
            DIMENSIONS
                .iter()
                .find(|d| d.slug() == name)
                .copied()
                .with_context(|| format!("unknown dimension {name:?}; expected `all` or a comma list of clarity, coherence, layout, hierarchy, color_scheme"))
        })
        .collect()
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { topic, outline, offline, seed, config, out } => {
            let app = AppConfig::load(config.as_deref())?;
            let backend = make_backend(offline, &app)?;
            let prompts = PromptSet::builtin();

            let mut pipeline_config = PipelineConfig::new(&topic);
            pipeline_config.offline = offline;
            pipeline_config.seed = seed;
            if let Some(iters) = app.pipeline.max_refine_iters {
                pipeline_config.max_refine_iters = iters;
            }
            if let Some(threshold) = app.pipeline.accept_threshold {
                pipeline_config.accept_threshold = threshold;
            }

            let user_outline = match outline {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading outline {}", path.display()))?;
                    let mut parsed = parse_deck_outline(&text)?;
                    // The command-line topic names the deck; the outline
                    // supplies its structure.
                    parsed.topic = topic.clone();
                    Some(parsed)
                }
                None => None,
            };

            let media = MediaCache::new(PathBuf::from("cache/media"), offline);
            let pipeline = Pipeline::new(&pipeline_config, backend.as_ref(), None, &prompts);
            let output = pipeline.run(user_outline, &media, &out)?;
            println!(
                "deck written to {} ({} of {} pages, success rate {:.3})",
                output.deck_path.display(),
                output.scores.pages.iter().filter(|p| p.rendered_ok).count(),
                output.scores.pages.len(),
                output.success_rate
            );
        }

        Command::Compile { design, out, style } => {
            let text = std::fs::read_to_string(&design)
                .with_context(|| format!("reading design {}", design.display()))?;
            let page = parse_page_design(&text)?;
            let style = load_style(style.as_deref())?;
            let media = MediaCache::new(PathBuf::from("cache/media"), true);
            let part =
                slidesmith_core::compile_page(&page, &style, &Canvas::default(), &media)?;
            let archive = slidesmith::archive::assemble_deck(
                std::slice::from_ref(&part),
                &slidesmith::archive::DeckMeta::default(),
            )?;
            std::fs::write(&out, &archive.bytes)
                .with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {}", out.display());
        }

        Command::Render { design, dpi, style } => {
            let text = std::fs::read_to_string(&design)
                .with_context(|| format!("reading design {}", design.display()))?;
            let page = parse_page_design(&text)?;
            let style = load_style(style.as_deref())?;
            let media = MediaCache::new(PathBuf::from("cache/media"), true);
            let image = render_page(&page, &style, &Canvas::default(), dpi, &media)?;
            let gray = to_grayscale(&image);
            let stem = design.file_stem().map(|s| s.to_string_lossy().to_string());
            let stem = stem.as_deref().unwrap_or("page");
            let png_path = design.with_file_name(format!("{stem}.png"));
            let pgm_path = design.with_file_name(format!("{stem}.pgm"));
            write_png(&image, &png_path)?;
            write_pgm(&gray, &pgm_path)?;
            println!("wrote {} and {}", png_path.display(), pgm_path.display());
        }

        Command::Score { input, style } => {
            let is_design = input.extension().is_some_and(|e| e == "json");
            if is_design {
                let text = std::fs::read_to_string(&input)
                    .with_context(|| format!("reading design {}", input.display()))?;
                let page = parse_page_design(&text)?;
                let canvas = Canvas::default();
                let report = compliance_report(&page, &canvas);
                let style = load_style(style.as_deref())?;
                let validation =
                    slidesmith_core::validate_page_design(&page, &style, &canvas);
                println!(
                    "{}",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "kind": "design",
                        "compliance": report,
                        "validation_ok": validation.ok,
                        "violations": validation.violations,
                    }))?
                );
            } else {
                let gray = load_gray(&input)?;
                let params = BalanceParams::defaults_for(gray.width, gray.height);
                let breakdown = balance_score(&gray, &params);
                println!(
                    "{}",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "kind": "image",
                        "params": params,
                        "balance": breakdown,
                    }))?
                );
            }
        }

        Command::Judge { image, dims, offline, config } => {
            let app = AppConfig::load(config.as_deref())?;
            let backend = make_backend(offline, &app)?;
            let dims = parse_dims(&dims)?;
            let image_ref = if offline {
                image.display().to_string()
            } else {
                image_data_uri(&image)?
            };

            let mut card = ScoreCard {
                clarity: f64::NAN,
                coherence: f64::NAN,
                layout: f64::NAN,
                hierarchy: f64::NAN,
                color_scheme: f64::NAN,
                judge_model: backend.identity().to_string(),
                raw_responses: Vec::new(),
            };
            let policy = RetryPolicy::default();
            for dim in &dims {
                let prompt = build_judge_prompt(*dim, &image_ref);
                let request =
                    slidesmith::backend::ChatRequest::new(format!("judge.{}.cli", dim.slug()), prompt)
                        .with_images(vec![image_ref.clone()]);
                let response =
                    slidesmith::backend::complete_with_retry(backend.as_ref(), &request, policy)?;
                let score = parse_judge_score(&response, *dim)?;
                match dim {
                    RubricDimension::Clarity => card.clarity = score,
                    RubricDimension::Coherence => card.coherence = score,
                    RubricDimension::Layout => card.layout = score,
                    RubricDimension::Hierarchy => card.hierarchy = score,
                    RubricDimension::ColorScheme => card.color_scheme = score,
                }
                card.raw_responses.push(response);
            }
            println!("{}", serde_json::to_string_pretty(&card)?);
        }

        Command::Datagen { taxonomy, per_secondary, seed, offline, config, out } => {
            let app = AppConfig::load(config.as_deref())?;
            let backend = make_backend(offline, &app)?;
            let topics = load_topic_taxonomy(&taxonomy)?;
            if per_secondary == 0 {
                bail!("--per-secondary must be at least 1");
            }
            let prompts = PromptSet::builtin();
            let summary = run_datagen(
                &topics,
                per_secondary,
                seed,
                backend.as_ref(),
                &prompts,
                offline,
                &out,
            )?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
    }
    Ok(())
}

//! Acceptance suite: one test per release criterion, each enforcing its
//! stated tolerance and time budget and printing a single PASS line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! The numbered criteria:
//! 1. The balance metric matches an independent straight-line
//!    re-derivation within 1e-9 on 100+ randomized images up to 1280x720,
//!    and a perfectly centered subject scores exactly 1.0; < 5 s.
//! 2. Reward algebra is exact over the full grid
//!    r ∈ {0, 0.25, 0.5, 0.75, 1}⁴ × exec ∈ {0, 1}; < 1 s.
//! 3. 50 randomized valid page designs compile into archives that an
//!    independent OOXML consumer opens without repair, and read-back
//!    recovers every block rectangle within 1 EMU; < 30 s.
//! 4. Two `generate --offline --seed 7` runs on the bundled outline
//!    fixture produce byte-identical output trees; < 60 s.
//! 5. OVERLAP decisions agree with a rasterized brute-force detector at
//!    96 dpi on 200 random designs, with disagreements only inside the
//!    documented 0.02 band around the threshold; < 60 s.
//! 6. The bundled one-of-eight failure fixture yields success_rate 0.875
//!    and a seven-slide deck.
//! 7. The datagen fixture with known failure injections retains exactly
//!    the expected pair set, with no email/phone text leaking; < 10 s.
//! 8. Score aggregation reproduces the reference row average 3.78 at two
//!    decimals.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use slidesmith::archive::{assemble_deck, read_back, DeckMeta};
use slidesmith::backend::{RetryPolicy, ScriptedBackend};
use slidesmith::canned::CannedBackend;
use slidesmith::datagen::{load_topic_taxonomy, read_jsonl, run_datagen};
use slidesmith::media::MediaCache;
use slidesmith::orchestrator::{Pipeline, PipelineConfig};
use slidesmith::prompts::PromptSet;
use slidesmith_core::fixtures::sample_style_guide;
use slidesmith_core::ir::{
    parse_deck_outline, validate_page_design, Alignment, BackgroundElement, Block, BlockRole,
    Border, Canvas, Color, ContentItem, PageDesign, PageKind, Payload, Rect, ShapeKind,
    TextContent, TextRun,
};
use slidesmith_core::judge::{
    aggregate_scores, coder_reward, designer_reward, PageEvaluation, RewardWeights, ScoreCard,
};
use slidesmith_core::metrics::{
    balance_score, compliance_report, BalanceParams, ComplianceKind, FailureStage,
    OVERLAP_TOLERANCE,
};
use slidesmith_core::pptx::{compile_page, inches_to_emu, NoMedia};
use slidesmith_core::raster::GrayImage;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .expect("workspace root above crates/slidesmith")
        .to_path_buf()
}

fn assert_budget(criterion: u32, elapsed: Duration, cap: Duration) {
    assert!(
        elapsed <= cap,
        "criterion {criterion} exceeded its {cap:?} budget: took {elapsed:?}"
    );
}

// --- criterion 1: balance metric vs. straight-line reference ---

struct ReferenceBalance {
    s_com: f64,
    s_lr: f64,
    s_tb: f64,
    balance: f64,
    degenerate: bool,
}

/// Independent re-derivation of the balance score: direct (non-separable)
/// 2D convolution for the blur, explicit median, one plain accumulation
/// pass for the moments and half masses. Shares no code with the library.
fn reference_balance(img: &GrayImage, p: &BalanceParams) -> ReferenceBalance {
    let radius = (3.0 * p.sigma).ceil() as i64;
    let mut k = Vec::new();
    let mut ksum = 0.0;
    for i in -radius..=radius {
        let v = (-((i * i) as f64) / (2.0 * p.sigma * p.sigma)).exp();
        k.push(v);
        ksum += v;
    }
    for v in &mut k {
        *v /= ksum;
    }

    let (w, h) = (img.width as i64, img.height as i64);
    let pix = |x: i64, y: i64| img.values[(y.clamp(0, h - 1) * w + x.clamp(0, w - 1)) as usize];
    let mut blur = vec![0.0f64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                for (i, ki) in k.iter().enumerate() {
                    acc += kj * ki * pix(x + i as i64 - radius, y + j as i64 - radius);
                }
            }
            blur[(y * w + x) as usize] = acc;
        }
    }

    let mut sorted = img.values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };

    let (wf, hf) = (img.width as f64, img.height as f64);
    let mut m = 0.0;
    let (mut sx, mut sy) = (0.0, 0.0);
    let (mut m_l, mut m_r, mut m_t, mut m_b) = (0.0, 0.0, 0.0, 0.0);
    for y in 0..img.height {
        for x in 0..img.width {
            let i = (y * img.width + x) as usize;
            let weight = (1.0 - p.lambda) * (img.values[i] - median).abs()
                + p.lambda * (img.values[i] - blur[i]).abs();
            m += weight;
            let px = x as f64 + 0.5;
            let py = y as f64 + 0.5;
            sx += px * weight;
            sy += py * weight;
            if px < wf / 2.0 {
                m_l += weight;
            } else {
                m_r += weight;
            }
            if py < hf / 2.0 {
                m_t += weight;
            } else {
                m_b += weight;
            }
        }
    }
    if m < p.epsilon {
        return ReferenceBalance { s_com: 1.0, s_lr: 1.0, s_tb: 1.0, balance: 1.0, degenerate: true };
    }
    let dx = (sx / m - wf / 2.0).abs() / (wf / 2.0);
    let dy = (sy / m - hf / 2.0).abs() / (hf / 2.0);
    let s_com = 1.0 - (dx * dx + dy * dy).sqrt() / 2.0f64.sqrt();
    let s_lr = 1.0 - (m_l - m_r).abs() / m;
    let s_tb = 1.0 - (m_t - m_b).abs() / m;
    let balance = ((s_com + s_lr + s_tb) / 3.0).clamp(0.0, 1.0);
    ReferenceBalance { s_com, s_lr, s_tb, balance, degenerate: false }
}

fn random_image(rng: &mut ChaCha8Rng, w: u32, h: u32, flavor: u32) -> GrayImage {
    let len = (w * h) as usize;
    let values = match flavor % 3 {
        // Per-pixel noise: the adversarial general case.
        0 => (0..len).map(|_| rng.gen_range(0.0..=1.0)).collect(),
        // Light field with a few dark rectangles: slide-like content.
        1 => {
            let mut v = vec![0.95; len];
            for _ in 0..rng.gen_range(1..=4) {
                let bw = rng.gen_range(1..=w.max(2) / 2);
                let bh = rng.gen_range(1..=h.max(2) / 2);
                let bx = rng.gen_range(0..=w - bw);
                let by = rng.gen_range(0..=h - bh);
                let tone = rng.gen_range(0.0..0.5);
                for y in by..by + bh {
                    for x in bx..bx + bw {
                        v[(y * w + x) as usize] = tone;
                    }
                }
            }
            v
        }
        // Constant image: must hit the degenerate branch on both sides.
        _ => vec![rng.gen_range(0.0..=1.0); len],
    };
    GrayImage { width: w, height: h, values }
}

#[test]
fn c1_balance_matches_straight_line_reference() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xBA1A_0001);

    // 100 randomized small-to-medium images, then full-size and odd-size
    // cases. Sigma stays small on the big canvases so the quadratic-cost
    // reference convolution fits the time budget; the equality under test
    // must hold for any valid parameter set.
    let mut cases: Vec<(u32, u32, f64)> = (0..100)
        .map(|_| {
            (
                rng.gen_range(8..=160),
                rng.gen_range(8..=160),
                rng.gen_range(0.5..=2.5),
            )
        })
        .collect();
    cases.push((1280, 720, 0.9));
    cases.push((1280, 720, 1.3));
    cases.push((1279, 719, 0.8)); // odd dims: center row/column rule
    cases.push((1280, 16, 0.6));
    cases.push((16, 720, 0.6));

    let mut degenerate_seen = 0u32;
    for (i, &(w, h, sigma)) in cases.iter().enumerate() {
        let img = random_image(&mut rng, w, h, i as u32);
        let params = BalanceParams {
            lambda: rng.gen_range(0.0..=1.0),
            sigma,
            epsilon: 1e-9 * w as f64 * h as f64,
        };
        let got = balance_score(&img, &params);
        let want = reference_balance(&img, &params);
        assert_eq!(
            got.degenerate, want.degenerate,
            "degenerate flag mismatch on case {i} ({w}x{h}, sigma {sigma})"
        );
        degenerate_seen += u32::from(got.degenerate);
        for (name, a, b) in [
            ("s_com", got.s_com, want.s_com),
            ("s_lr", got.s_lr, want.s_lr),
            ("s_tb", got.s_tb, want.s_tb),
            ("balance", got.balance, want.balance),
        ] {
            assert!(
                (a - b).abs() <= 1e-9,
                "{name} diverged on case {i} ({w}x{h}, sigma {sigma}): {a} vs {b}"
            );
        }
    }
    assert!(degenerate_seen >= 2, "constant images must exercise the degenerate branch");

    // A black square dead-center on a white canvas must score exactly 1.0,
    // not 1.0 minus rounding dust.
    let mut values = vec![1.0f64; 1280 * 720];
    for y in 310..410 {
        for x in 590..690 {
            values[y * 1280 + x] = 0.0;
        }
    }
    let centered = GrayImage { width: 1280, height: 720, values };
    let out = balance_score(&centered, &BalanceParams::defaults_for(1280, 720));
    assert!(!out.degenerate);
    assert_eq!(out.s_com, 1.0, "centered square: s_com must be exactly 1.0");
    assert_eq!(out.s_lr, 1.0, "centered square: s_lr must be exactly 1.0");
    assert_eq!(out.s_tb, 1.0, "centered square: s_tb must be exactly 1.0");
    assert_eq!(out.balance, 1.0, "centered square: balance must be exactly 1.0");

    let elapsed = start.elapsed();
    assert_budget(1, elapsed, Duration::from_secs(5));
    println!(
        "PASS 1 balance-vs-reference: {} images within 1e-9, centered square exactly 1.0 ({elapsed:?})",
        cases.len()
    );
}

// --- criterion 2: reward algebra over the exhaustive grid ---

#[test]
fn c2_reward_algebra_exhaustive_grid() {
    let start = Instant::now();
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let weights = RewardWeights::default();
    let mut cases = 0u32;
    for &r_cmp in &grid {
        for &r_cpl in &grid {
            for &r_aes in &grid {
                for &r_imp in &grid {
                    for exec_ok in [false, true] {
                        // Coder reward: execution success gates the
                        // implementation score to zero.
                        let r_c = coder_reward(exec_ok, r_imp).unwrap();
                        assert_eq!(r_c, if exec_ok { r_imp } else { 0.0 });

                        // Designer reward: style term is the gated product,
                        // then the weighted sum of the three terms.
                        let eval = PageEvaluation {
                            r_cmp,
                            r_cpl,
                            r_aes,
                            suggestions: Vec::new(),
                        };
                        let (r_sty, r_d) = designer_reward(&eval, r_imp, &weights).unwrap();
                        assert_eq!(r_sty, r_imp * r_aes);
                        assert_eq!(
                            r_d,
                            weights.alpha * r_cmp + weights.beta * r_cpl + weights.gamma * r_sty
                        );
                        cases += 1;
                    }
                }
            }
        }
    }
    assert_eq!(cases, 5 * 5 * 5 * 5 * 2);
    let elapsed = start.elapsed();
    assert_budget(2, elapsed, Duration::from_secs(1));
    println!("PASS 2 reward-algebra: {cases} grid cases exact ({elapsed:?})");
}

// --- criterion 3: archive validity and EMU round-trip ---

fn random_color(rng: &mut ChaCha8Rng) -> Color {
    Color::from_rgb(rng.gen(), rng.gen(), rng.gen())
}

/// A randomized page design that is valid by construction: unique ids,
/// grid-placed in-canvas blocks, well-formed colors, background strictly
/// below the layout in z, text sizes inside [8, 96], no image payloads
/// (media stays out of scope here).
fn random_valid_design(rng: &mut ChaCha8Rng, slide_index: u32) -> PageDesign {
    let canvas = Canvas::default();
    let cols = rng.gen_range(1..=4u32);
    let rows = rng.gen_range(1..=3u32);
    let margin = 0.3;
    let gutter = 0.15;
    let cell_w = (canvas.width_in - 2.0 * margin - (cols - 1) as f64 * gutter) / cols as f64;
    let cell_h = (canvas.height_in - 2.0 * margin - (rows - 1) as f64 * gutter) / rows as f64;

    let roles = [
        BlockRole::Title,
        BlockRole::Body,
        BlockRole::Bullets,
        BlockRole::Caption,
        BlockRole::Panel,
    ];
    let alignments = [Alignment::Left, Alignment::Center, Alignment::Right];

    let mut layout = Vec::new();
    let mut content = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let idx = layout.len();
            // Keep at least one block; skip other cells at random.
            if idx > 0 && rng.gen_bool(0.25) {
                continue;
            }
            let shrink_w = rng.gen_range(0.0..cell_w * 0.4);
            let shrink_h = rng.gen_range(0.0..cell_h * 0.4);
            let x = margin + c as f64 * (cell_w + gutter) + shrink_w / 2.0;
            let y = margin + r as f64 * (cell_h + gutter) + shrink_h / 2.0;
            let geometry = Rect::new(x, y, cell_w - shrink_w, cell_h - shrink_h);
            let role = roles[rng.gen_range(0..roles.len())];
            let id = format!("b{idx}");
            layout.push(Block {
                id: id.clone(),
                role,
                geometry,
                fill: rng.gen_bool(0.5).then(|| random_color(rng)),
                border: rng.gen_bool(0.3).then(|| Border {
                    color: random_color(rng),
                    width_pt: rng.gen_range(0.5..4.0),
                }),
                z: 10 + idx as i32,
            });
            if role != BlockRole::Panel && rng.gen_bool(0.8) {
                let runs = (0..rng.gen_range(1..=3))
                    .map(|k| TextRun {
                        text: format!("run {k} of block {idx}"),
                        size_pt: rng.gen_range(8.0..=96.0),
                        bold: rng.gen_bool(0.3),
                        color: random_color(rng),
                    })
                    .collect();
                content.push(ContentItem {
                    block_id: id,
                    payload: Payload::Text(TextContent {
                        runs,
                        alignment: alignments[rng.gen_range(0..alignments.len())],
                    }),
                });
            }
        }
    }

    let mut background = Vec::new();
    if rng.gen_bool(0.7) {
        background.push(BackgroundElement::SolidFill {
            geometry: Rect::new(0.0, 0.0, canvas.width_in, canvas.height_in),
            color: random_color(rng),
            z: 0,
        });
    }
    if rng.gen_bool(0.4) {
        background.push(BackgroundElement::DecorShape {
            shape: ShapeKind::Ellipse,
            geometry: Rect::new(
                rng.gen_range(0.0..10.0),
                rng.gen_range(0.0..5.0),
                rng.gen_range(0.5..3.0),
                rng.gen_range(0.5..2.0),
            ),
            color: random_color(rng),
            z: 1,
        });
    }

    PageDesign {
        schema_version: "1".to_string(),
        slide_index,
        page_kind: PageKind::Content,
        background,
        layout,
        content,
        design_rationale: rng
            .gen_bool(0.5)
            .then(|| "randomized archive round-trip case".to_string()),
    }
}

/// Every layout block of `design` must be recovered from `bytes` with all
/// four coordinates within one EMU.
fn assert_block_roundtrip(design: &PageDesign, page: &slidesmith::archive::PageGeometry) {
    for block in &design.layout {
        let found = page
            .blocks
            .iter()
            .find(|b| b.id == block.id)
            .unwrap_or_else(|| panic!("block {:?} missing from read-back", block.id));
        let want = [
            inches_to_emu(block.geometry.x).unwrap(),
            inches_to_emu(block.geometry.y).unwrap(),
            inches_to_emu(block.geometry.w).unwrap(),
            inches_to_emu(block.geometry.h).unwrap(),
        ];
        let got = [found.x_emu, found.y_emu, found.w_emu, found.h_emu];
        for (axis, (w, g)) in want.iter().zip(got.iter()).enumerate() {
            assert!(
                (w - g).abs() <= 1,
                "block {:?} axis {axis}: wrote {w} EMU, read {g} EMU",
                block.id
            );
        }
    }
}

#[test]
fn c3_archives_open_clean_and_round_trip_geometry() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0003_0003);
    let style = sample_style_guide();
    let canvas = Canvas::default();
    let dir = tempfile::tempdir().unwrap();

    let mut paths: Vec<PathBuf> = Vec::new();
    let mut parts = Vec::new();
    let mut designs = Vec::new();
    for i in 0..50u32 {
        let design = random_valid_design(&mut rng, i);
        let report = validate_page_design(&design, &style, &canvas);
        assert!(report.ok, "generator produced an invalid design: {:?}", report.violations);

        let part = compile_page(&design, &style, &canvas, &NoMedia).unwrap();
        let archive = assemble_deck(std::slice::from_ref(&part), &DeckMeta::default()).unwrap();

        // (b) geometry round-trip on the single-page archive.
        let recovered = read_back(&archive.bytes).unwrap();
        assert_eq!(recovered.pages.len(), 1);
        assert_block_roundtrip(&design, &recovered.pages[0]);

        let path = dir.path().join(format!("design_{i:02}.pptx"));
        std::fs::write(&path, &archive.bytes).unwrap();
        paths.push(path);
        parts.push(part);
        designs.push(design);
    }

    // All 50 together also assemble into one deck whose pages round-trip.
    let combined = assemble_deck(&parts, &DeckMeta::default()).unwrap();
    let recovered = read_back(&combined.bytes).unwrap();
    assert_eq!(recovered.pages.len(), 50);
    for (design, page) in designs.iter().zip(recovered.pages.iter()) {
        assert_block_roundtrip(design, page);
    }
    let combined_path = dir.path().join("combined.pptx");
    std::fs::write(&combined_path, &combined.bytes).unwrap();
    paths.push(combined_path);

    // (a) the independent consumer (stdlib-only Python) opens every file.
    let checker = repo_root().join("tools/pptx_check.py");
    let output = Command::new("python3")
        .arg(&checker)
        .args(&paths)
        .output()
        .expect("python3 must be runnable for the independent archive check");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        output.status.success(),
        "independent consumer rejected archives:\n{stdout}\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let ok_lines = stdout.lines().filter(|l| l.starts_with("OK ")).count();
    assert_eq!(ok_lines, paths.len(), "consumer output:\n{stdout}");

    let elapsed = start.elapsed();
    assert_budget(3, elapsed, Duration::from_secs(30));
    println!(
        "PASS 3 archive-validity: 50 designs + combined deck open clean, geometry within 1 EMU ({elapsed:?})"
    );
}

// --- criterion 4: byte-identical regeneration ---

fn tree_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let entry = entry.unwrap();
            let path = entry.path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn c4_seeded_offline_generate_is_byte_identical() {
    let start = Instant::now();
    let outline = repo_root().join("fixtures/outline_2x2.json");
    let work = tempfile::tempdir().unwrap();

    let run = |out_name: &str| {
        let out_dir = work.path().join(out_name);
        let status = Command::new(env!("CARGO_BIN_EXE_slidesmith"))
            .current_dir(work.path())
            .args([
                "generate",
                "--topic",
                "Pollinator Gardens",
                "--outline",
                outline.to_str().unwrap(),
                "--offline",
                "--seed",
                "7",
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .status()
            .expect("CLI binary must run");
        assert!(status.success(), "generate run {out_name} failed");
        tree_bytes(&out_dir)
    };

    let first = run("run_a");
    let second = run("run_b");

    assert_eq!(
        first.keys().collect::<Vec<_>>(),
        second.keys().collect::<Vec<_>>(),
        "the two runs produced different file sets"
    );
    let mut compared = 0usize;
    for (name, bytes) in &first {
        assert_eq!(
            bytes,
            second.get(name).unwrap(),
            "file {name} differs between identically seeded runs"
        );
        compared += 1;
    }
    // The deck, a preview pair per page, a design per page, and the logs
    // must all be present — not a trivially empty directory.
    assert!(first.keys().any(|k| k.ends_with("deck.pptx")));
    assert!(first.keys().any(|k| k.ends_with("run_log.jsonl")));
    assert!(first.keys().any(|k| k.ends_with("scores.json")));
    assert!(first.keys().filter(|k| k.ends_with(".png")).count() >= 8);

    let elapsed = start.elapsed();
    assert_budget(4, elapsed, Duration::from_secs(60));
    println!("PASS 4 determinism: {compared} files byte-identical across seeded runs ({elapsed:?})");
}

// --- criterion 5: overlap decisions vs. rasterized brute force ---

const RASTER_DPI: f64 = 96.0;

/// Pixel centers inside a rectangle, counted the slow way.
fn raster_pixels(rect: &Rect) -> u64 {
    let x0 = (rect.x * RASTER_DPI).floor().max(0.0) as i64 - 1;
    let x1 = (rect.right() * RASTER_DPI).ceil() as i64 + 1;
    let y0 = (rect.y * RASTER_DPI).floor().max(0.0) as i64 - 1;
    let y1 = (rect.bottom() * RASTER_DPI).ceil() as i64 + 1;
    let mut count = 0u64;
    for yi in y0..=y1 {
        let cy = (yi as f64 + 0.5) / RASTER_DPI;
        if cy < rect.y || cy >= rect.bottom() {
            continue;
        }
        for xi in x0..=x1 {
            let cx = (xi as f64 + 0.5) / RASTER_DPI;
            if cx >= rect.x && cx < rect.right() {
                count += 1;
            }
        }
    }
    count
}

/// Pixel centers inside both rectangles.
fn raster_common_pixels(a: &Rect, b: &Rect) -> u64 {
    let x0 = ((a.x.max(b.x)) * RASTER_DPI).floor() as i64 - 1;
    let x1 = ((a.right().min(b.right())) * RASTER_DPI).ceil() as i64 + 1;
    let y0 = ((a.y.max(b.y)) * RASTER_DPI).floor() as i64 - 1;
    let y1 = ((a.bottom().min(b.bottom())) * RASTER_DPI).ceil() as i64 + 1;
    let mut count = 0u64;
    for yi in y0..=y1 {
        let cy = (yi as f64 + 0.5) / RASTER_DPI;
        if cy < a.y || cy >= a.bottom() || cy < b.y || cy >= b.bottom() {
            continue;
        }
        for xi in x0..=x1 {
            let cx = (xi as f64 + 0.5) / RASTER_DPI;
            if cx >= a.x && cx < a.right() && cx >= b.x && cx < b.right() {
                count += 1;
            }
        }
    }
    count
}

/// Random layout with blocks that may freely overlap; all inside the
/// canvas so the pixel grid samples every block fully.
fn random_overlappy_design(rng: &mut ChaCha8Rng) -> PageDesign {
    let canvas = Canvas::default();
    let n = rng.gen_range(2..=6);
    let layout = (0..n)
        .map(|i| {
            let w = rng.gen_range(0.3..4.0);
            let h = rng.gen_range(0.3..3.5);
            let x = rng.gen_range(0.0..canvas.width_in - w);
            let y = rng.gen_range(0.0..canvas.height_in - h);
            Block {
                id: format!("b{i}"),
                // One in five blocks is a panel: exempt from overlap checks
                // on both sides of the comparison.
                role: if rng.gen_bool(0.2) { BlockRole::Panel } else { BlockRole::Body },
                geometry: Rect::new(x, y, w, h),
                fill: None,
                border: None,
                z: 10 + i as i32,
            }
        })
        .collect();
    PageDesign {
        schema_version: "1".to_string(),
        slide_index: 0,
        page_kind: PageKind::Content,
        background: Vec::new(),
        layout,
        content: Vec::new(),
        design_rationale: None,
    }
}

#[test]
fn c5_overlap_decisions_match_rasterized_brute_force() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0005_0005);
    let canvas = Canvas::default();

    let mut pairs_compared = 0u64;
    let mut flagged = 0u64;
    let mut excused = 0u64;
    for design_no in 0..200 {
        let design = random_overlappy_design(&mut rng);
        let report = compliance_report(&design, &canvas);
        let analytic_flags: std::collections::BTreeSet<(String, String)> = report
            .violations
            .iter()
            .filter(|v| v.kind == ComplianceKind::Overlap)
            .map(|v| (v.block_ids[0].clone(), v.block_ids[1].clone()))
            .collect();

        let content: Vec<&Block> =
            design.layout.iter().filter(|b| b.role.is_content_bearing()).collect();
        for i in 0..content.len() {
            for j in (i + 1)..content.len() {
                let (a, b) = (content[i], content[j]);
                let mut key = [a.id.clone(), b.id.clone()];
                key.sort();
                let key = (key[0].clone(), key[1].clone());

                let (pa, pb) = (raster_pixels(&a.geometry), raster_pixels(&b.geometry));
                let smaller_px = pa.min(pb);
                assert!(smaller_px > 0, "degenerate block slipped into the generator");
                let common = raster_common_pixels(&a.geometry, &b.geometry);
                let raster_ratio = common as f64 / smaller_px as f64;
                let raster_flag = raster_ratio > OVERLAP_TOLERANCE;

                let analytic_flag = analytic_flags.contains(&key);
                pairs_compared += 1;
                flagged += u64::from(analytic_flag);
                if analytic_flag != raster_flag {
                    // Rasterization quantizes edges to the 96-dpi grid, so
                    // decisions may legitimately differ only when the true
                    // ratio sits inside the documented band around the
                    // threshold; anywhere else a disagreement is a bug.
                    let smaller = a.geometry.area().min(b.geometry.area());
                    let exact_ratio = a.geometry.intersection_area(&b.geometry) / smaller;
                    assert!(
                        (exact_ratio - OVERLAP_TOLERANCE).abs() <= 0.02,
                        "design {design_no} pair {key:?}: detector said {analytic_flag}, \
                         raster said {raster_flag}, exact ratio {exact_ratio} is outside \
                         the 0.02 band around the {OVERLAP_TOLERANCE} threshold"
                    );
                    excused += 1;
                }
            }
        }
    }
    assert!(flagged > 0, "the sample must contain genuine overlaps to be meaningful");
    assert!(flagged < pairs_compared, "the sample must contain non-overlapping pairs too");

    let elapsed = start.elapsed();
    assert_budget(5, elapsed, Duration::from_secs(60));
    println!(
        "PASS 5 overlap-oracle: {pairs_compared} pairs over 200 designs, {flagged} overlaps, \
         {excused} in-band disagreements, none outside ({elapsed:?})"
    );
}

// --- criterion 6: one-of-eight failure accounting ---

#[test]
fn c6_one_failing_page_of_eight_gives_seven_slide_deck() {
    let start = Instant::now();
    let root = repo_root();
    let outline_text = std::fs::read_to_string(root.join("fixtures/outline_2x2.json")).unwrap();
    let outline = parse_deck_outline(&outline_text).unwrap();
    let script_text =
        std::fs::read_to_string(root.join("fixtures/fail_one_of_eight.script.json")).unwrap();
    let backend = ScriptedBackend::from_json(&script_text)
        .unwrap()
        .with_fallback(Box::new(CannedBackend::new()));

    let mut config = PipelineConfig::new(outline.topic.clone());
    config.offline = true;
    config.seed = 7;
    config.retry = RetryPolicy { max_attempts: 3, base_delay_ms: 0 };

    let prompts = PromptSet::builtin();
    let pipeline = Pipeline::new(&config, &backend, None, &prompts);
    let out_dir = tempfile::tempdir().unwrap();
    let media = MediaCache::new(out_dir.path().join("cache"), true);
    let output = pipeline.run(Some(outline), &media, out_dir.path()).unwrap();

    // 2x2 content outline + cover, two dividers, end page = 8 pages, of
    // which the scripted design tag kills exactly one.
    assert_eq!(output.outline.slide_count(), 8);
    assert_eq!(output.success_rate, 0.875);
    let failed: Vec<_> = output.scores.pages.iter().filter(|p| !p.rendered_ok).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].failure_stage, Some(FailureStage::Design));

    let deck = std::fs::read(&output.deck_path).unwrap();
    assert_eq!(read_back(&deck).unwrap().pages.len(), 7, "deck must carry the seven survivors");

    let elapsed = start.elapsed();
    println!(
        "PASS 6 failure-accounting: success rate 0.875, 7-slide deck, failed stage Design ({elapsed:?})"
    );
}

// --- criterion 7: datagen filtering and scrubbing ---

#[test]
fn c7_datagen_drops_injected_failures_and_scrubs_pii() {
    let start = Instant::now();
    let root = repo_root();
    let topics = load_topic_taxonomy(&root.join("fixtures/datagen_small.tsv")).unwrap();
    assert_eq!(topics.len(), 2);

    let script_text =
        std::fs::read_to_string(root.join("fixtures/datagen_failures.script.json")).unwrap();
    let backend = ScriptedBackend::from_json(&script_text)
        .unwrap()
        .with_fallback(Box::new(CannedBackend::new()));
    let prompts = PromptSet::builtin();
    let out_dir = tempfile::tempdir().unwrap();

    let summary =
        run_datagen(&topics, 1, 11, &backend, &prompts, true, out_dir.path()).unwrap();

    // Under the built-in backend each fixture topic expands to 12 pages;
    // the script kills the design stage of slide 3 in every topic, so
    // exactly 2 of 24 pairs drop, both at the DESIGN stage.
    assert_eq!(summary.topics, 2);
    assert_eq!(summary.attempted, 24);
    assert_eq!(summary.retained, 22);
    assert_eq!(summary.drops.dropped_by_stage.len(), 1);
    assert_eq!(summary.drops.dropped_by_stage.get("DESIGN"), Some(&2));

    let pairs = read_jsonl(&out_dir.path().join("slides_pairs.jsonl")).unwrap();
    let got: Vec<(String, u32)> = pairs
        .iter()
        .map(|p| (p.context.topic_id.clone(), p.context.slide_index))
        .collect();
    let keep: Vec<u32> = (0..12).filter(|&i| i != 3).collect();
    let mut want: Vec<(String, u32)> = Vec::new();
    for slug in [
        "hive-inspections-questions-to-alice-example-org",
        "frost-alert-line-1-555-010-2345-playbook",
    ] {
        for &i in &keep {
            want.push((slug.to_string(), i));
        }
    }
    assert_eq!(got, want, "retained set must be exactly the non-injected pairs, in order");
    assert!(pairs.iter().all(|p| p.exec_ok));

    // No emitted line may still match the email or phone patterns the
    // scrubber replaces; the fixture topics embed one of each.
    let email = regex::Regex::new(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}").unwrap();
    let phone = regex::Regex::new(
        r"\+\d{1,3}[ .-]?(?:\(\d{1,4}\)[ .-]?)?\d{1,4}(?:[ .-]?\d{2,4}){1,3}",
    )
    .unwrap();
    let raw = std::fs::read_to_string(out_dir.path().join("slides_pairs.jsonl")).unwrap();
    assert!(raw.contains("[EMAIL]"), "scrubbed email placeholder must appear");
    assert!(raw.contains("[PHONE]"), "scrubbed phone placeholder must appear");
    for (no, line) in raw.lines().enumerate() {
        assert!(!email.is_match(line), "line {no} leaks an email address");
        assert!(!phone.is_match(line), "line {no} leaks a phone number");
    }

    let elapsed = start.elapsed();
    assert_budget(7, elapsed, Duration::from_secs(10));
    println!(
        "PASS 7 datagen-filter: 22 of 24 pairs retained, 2 DESIGN drops, no PII leaks ({elapsed:?})"
    );
}

// --- criterion 8: aggregation convention on the reference row ---

#[test]
fn c8_reference_row_average_reproduces_at_two_decimals() {
    let start = Instant::now();
    // Published reference row: clarity 3.79, coherence 3.81, layout 3.55,
    // hierarchy 4.04, color scheme 3.71, reported average 3.78. That
    // average is the mean over all five dimensions — the three visual
    // dimensions alone give 3.7667 → 3.77, which does not match the
    // reported value, so the reported convention must be the 5-way mean.
    let card = ScoreCard {
        clarity: 3.79,
        coherence: 3.81,
        layout: 3.55,
        hierarchy: 4.04,
        color_scheme: 3.71,
        judge_model: "reference".to_string(),
        raw_responses: Vec::new(),
    };
    let summary = aggregate_scores(std::slice::from_ref(&card)).unwrap();
    assert_eq!(format!("{:.2}", summary.avg), "3.78");
    assert_eq!(format!("{:.2}", summary.visual_avg), "3.77");
    assert_eq!(format!("{:.2}", summary.layout), "3.55");
    assert_eq!(format!("{:.2}", summary.hierarchy), "4.04");
    assert_eq!(format!("{:.2}", summary.color_scheme), "3.71");

    let elapsed = start.elapsed();
    println!("PASS 8 aggregation: five-dimension mean 3.78 at two decimals ({elapsed:?})");
}

//! Objective design metrics: the visual-balance score with all intermediate
//! terms, the geometric compliance report, and success-rate accounting.
//!
//! Balance works on a grayscale render. A visual-weight map mixes deviation
//! from the background tone (the exact pixel median) with local contrast
//! (deviation from a Gaussian blur), and three terms are averaged: closeness
//! of the weight centroid to the canvas center, left/right mass symmetry,
//! and top/bottom mass symmetry. A featureless image has no weight mass and
//! is reported as vacuously balanced with a `degenerate` flag.
//!
//! All arithmetic is pure `f64` with `libm`, so results are identical on
//! every platform and feature configuration.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ir::{Canvas, PageDesign, Rect};
use crate::raster::GrayImage;

/// Parameters of the balance metric. Defaults are fixed so scores are
/// comparable across runs, and they are echoed into every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceParams {
    /// Mix between background deviation (0) and local contrast (1).
    pub lambda: f64,
    /// Gaussian blur standard deviation in pixels.
    pub sigma: f64,
    /// Total-mass threshold below which the image counts as featureless.
    pub epsilon: f64,
}

impl BalanceParams {
    /// `lambda = 0.5`, `sigma = max(1, round(min(W,H)/32))`,
    /// `epsilon = 1e-9·W·H`.
    pub fn defaults_for(width: u32, height: u32) -> Self {
        let short = width.min(height) as f64;
        let sigma = if libm::round(short / 32.0) < 1.0 { 1.0 } else { libm::round(short / 32.0) };
        Self { lambda: 0.5, sigma, epsilon: 1e-9 * width as f64 * height as f64 }
    }
}

/// Per-pixel visual weight plus its total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    pub width: u32,
    pub height: u32,
    pub w: Vec<f64>,
    pub total_mass: f64,
}

/// The balance score and its three constituent terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceBreakdown {
    /// Centroid proximity to the canvas center.
    pub s_com: f64,
    /// Left/right mass symmetry.
    pub s_lr: f64,
    /// Top/bottom mass symmetry.
    pub s_tb: f64,
    /// `clip[0,1]((s_com + s_lr + s_tb) / 3)`, or 1.0 when degenerate.
    pub balance: f64,
    /// True when total weight mass fell below `epsilon` (featureless image).
    pub degenerate: bool,
}

/// Gaussian blur by separable convolution.
///
/// Kernel radius is `ceil(3σ)`, the kernel is normalized to sum 1, and
/// edges clamp (the border pixel repeats outward). `sigma` must be ≥ 0.5.
///
/// Each sample accumulates the center tap plus distance-paired deviations,
/// `center + Σ_d k[d]·((left−center) + (right−center))`. Float addition is
/// commutative, so a mirror-symmetric input blurs to a bit-identical
/// mirror-symmetric output, and a constant input is preserved exactly —
/// both properties the balance score depends on for exact results on
/// perfectly centered content.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    assert!(sigma >= 0.5, "blur sigma must be at least 0.5, got {sigma}");
    let radius = libm::ceil(3.0 * sigma) as usize;
    // kernel[d] is the normalized tap weight at distance d from the center.
    let mut kernel = Vec::with_capacity(radius + 1);
    for d in 0..=radius {
        kernel.push(libm::exp(-((d * d) as f64) / (2.0 * sigma * sigma)));
    }
    let mut sum = kernel[0];
    for k in &kernel[1..] {
        sum += 2.0 * k;
    }
    for k in &mut kernel {
        *k /= sum;
    }

    let (w, h) = (img.width as i64, img.height as i64);
    let radius = radius as i64;
    let at = |x: i64, y: i64, buf: &[f64]| {
        let cx = x.clamp(0, w - 1);
        let cy = y.clamp(0, h - 1);
        buf[(cy * w + cx) as usize]
    };

    // Horizontal pass, then vertical; clamp-to-edge per axis.
    let mut tmp = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let center = at(x, y, &img.values);
            let mut acc = center;
            for d in 1..=radius {
                let pair = (at(x - d, y, &img.values) - center)
                    + (at(x + d, y, &img.values) - center);
                acc += kernel[d as usize] * pair;
            }
            tmp.push(acc);
        }
    }
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let center = at(x, y, &tmp);
            let mut acc = center;
            for d in 1..=radius {
                let pair = (at(x, y - d, &tmp) - center) + (at(x, y + d, &tmp) - center);
                acc += kernel[d as usize] * pair;
            }
            out.push(acc);
        }
    }
    GrayImage { width: img.width, height: img.height, values: out }
}

/// Exact median of all pixel values; the mean of the two middle values when
/// the count is even.
pub fn pixel_median(img: &GrayImage) -> f64 {
    let mut sorted = img.values.clone();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("luminance is never NaN"));
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Per-pixel visual weight:
/// `w(x,y) = (1−λ)·|I(x,y) − b| + λ·|I(x,y) − (G_σ∗I)(x,y)|`
/// with `b` the exact pixel median.
pub fn visual_weight_map(img: &GrayImage, p: &BalanceParams) -> WeightMap {
    let b = pixel_median(img);
    let blurred = gaussian_blur(img, p.sigma);
    let mut w = Vec::with_capacity(img.values.len());
    let mut total = 0.0;
    for (i, &v) in img.values.iter().enumerate() {
        let weight = (1.0 - p.lambda) * libm::fabs(v - b)
            + p.lambda * libm::fabs(v - blurred.values[i]);
        total += weight;
        w.push(weight);
    }
    WeightMap { width: img.width, height: img.height, w, total_mass: total }
}

/// Balance score from a grayscale render.
///
/// Centroid coordinates use pixel centers (`x + 0.5`); the left/right and
/// top/bottom splits compare pixel centers against `W/2` / `H/2`, so the
/// middle column of an odd-width image counts wholly as the right side
/// (and the middle row as the bottom).
///
/// Centroid moments and half-mass differences are accumulated over mirror
/// pairs of pixels. Equal pair members contribute an exact zero, so a
/// weight map with exact reflection symmetry — a perfectly centered
/// subject — scores exactly 1.0 rather than 1.0 minus rounding dust.
pub fn balance_score(img: &GrayImage, p: &BalanceParams) -> BalanceBreakdown {
    let wm = visual_weight_map(img, p);
    let m = wm.total_mass;
    if m < p.epsilon {
        return BalanceBreakdown { s_com: 1.0, s_lr: 1.0, s_tb: 1.0, balance: 1.0, degenerate: true };
    }
    let (wpx, hpx) = (wm.width as usize, wm.height as usize);
    let (w, h) = (wm.width as f64, wm.height as f64);
    let at = |x: usize, y: usize| wm.w[y * wpx + x];

    // mx = Σ (px − W/2)·weight and d_lr = m_left − m_right, walked as
    // (left pixel, mirrored right pixel) pairs.
    let mut mx = 0.0;
    let mut d_lr = 0.0;
    for y in 0..hpx {
        for x in 0..wpx / 2 {
            let (wl, wr) = (at(x, y), at(wpx - 1 - x, y));
            let off = w / 2.0 - (x as f64 + 0.5);
            mx += off * (wr - wl);
            d_lr += wl - wr;
        }
        if wpx % 2 == 1 {
            // Center column: zero moment arm, counted wholly as right.
            d_lr -= at(wpx / 2, y);
        }
    }
    // my = Σ (py − H/2)·weight and d_tb = m_top − m_bottom, same scheme.
    let mut my = 0.0;
    let mut d_tb = 0.0;
    for y in 0..hpx / 2 {
        let off = h / 2.0 - (y as f64 + 0.5);
        for x in 0..wpx {
            let (wt, wb) = (at(x, y), at(x, hpx - 1 - y));
            my += off * (wb - wt);
            d_tb += wt - wb;
        }
    }
    if hpx % 2 == 1 {
        for x in 0..wpx {
            // Center row: zero moment arm, counted wholly as bottom.
            d_tb -= at(x, hpx / 2);
        }
    }

    let dx = libm::fabs(mx / m) / (w / 2.0);
    let dy = libm::fabs(my / m) / (h / 2.0);
    let s_com = 1.0 - libm::sqrt(dx * dx + dy * dy) / libm::sqrt(2.0);
    let s_lr = 1.0 - libm::fabs(d_lr) / m;
    let s_tb = 1.0 - libm::fabs(d_tb) / m;
    let balance = ((s_com + s_lr + s_tb) / 3.0).clamp(0.0, 1.0);
    BalanceBreakdown { s_com, s_lr, s_tb, balance, degenerate: false }
}

/// Compliance violation categories, in report order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ComplianceKind {
    /// Two content-bearing blocks intersect beyond the tolerated sliver.
    Overlap,
    /// A block extends past the canvas edge.
    Overflow,
    /// Total content coverage is outside the sensible band.
    Area,
}

impl core::fmt::Display for ComplianceKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            ComplianceKind::Overlap => "OVERLAP",
            ComplianceKind::Overflow => "OVERFLOW",
            ComplianceKind::Area => "AREA",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceViolation {
    pub kind: ComplianceKind,
    pub block_ids: Vec<String>,
    /// Overlap ratio, overflow fraction, or coverage fraction respectively.
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub violations: Vec<ComplianceViolation>,
    pub pass: bool,
    /// `1 − min(1, 0.25·#OVERLAP + 0.25·#OVERFLOW + 0.15·#AREA)`.
    pub r_cpl: f64,
}

/// Intersection-over-smaller-area above this ratio counts as an overlap;
/// touching edges and hairline slivers do not.
pub const OVERLAP_TOLERANCE: f64 = 0.02;
/// Content coverage of the canvas must land inside this band.
pub const AREA_MIN_COVERAGE: f64 = 0.15;
pub const AREA_MAX_COVERAGE: f64 = 0.95;

const OVERLAP_PENALTY: f64 = 0.25;
const OVERFLOW_PENALTY: f64 = 0.25;
const AREA_PENALTY: f64 = 0.15;

/// Exact area of the union of rects via coordinate compression.
fn union_area(rects: &[Rect]) -> f64 {
    let mut xs: Vec<f64> = Vec::with_capacity(rects.len() * 2);
    let mut ys: Vec<f64> = Vec::with_capacity(rects.len() * 2);
    for r in rects {
        if r.w > 0.0 && r.h > 0.0 {
            xs.push(r.x);
            xs.push(r.right());
            ys.push(r.y);
            ys.push(r.bottom());
        }
    }
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite edges"));
    xs.dedup();
    ys.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite edges"));
    ys.dedup();
    let mut area = 0.0;
    for i in 0..xs.len().saturating_sub(1) {
        for j in 0..ys.len().saturating_sub(1) {
            let mx = (xs[i] + xs[i + 1]) / 2.0;
            let my = (ys[j] + ys[j + 1]) / 2.0;
            let covered = rects.iter().any(|r| {
                r.w > 0.0 && r.h > 0.0 && mx >= r.x && mx < r.right() && my >= r.y && my < r.bottom()
            });
            if covered {
                area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
            }
        }
    }
    area
}

/// Geometric compliance of a page design.
///
/// This measures rather than gates: it accepts any parsed design, even one
/// that would fail validation. Overlaps are judged between content-bearing
/// blocks only (panels, separators, and background decor may legitimately
/// sit under content); intervals are half-open, so blocks sharing an edge
/// do not overlap. Overflow covers every layout block regardless of role.
pub fn compliance_report(design: &PageDesign, canvas: &Canvas) -> ComplianceReport {
    let mut violations: Vec<ComplianceViolation> = Vec::new();
    let canvas_rect = Rect::new(0.0, 0.0, canvas.width_in, canvas.height_in);

    // OVERLAP among content-bearing blocks.
    let content: Vec<&crate::ir::Block> = design
        .layout
        .iter()
        .filter(|b| b.role.is_content_bearing())
        .collect();
    for i in 0..content.len() {
        for j in (i + 1)..content.len() {
            let (a, b) = (content[i], content[j]);
            let smaller = a.geometry.area().min(b.geometry.area());
            if smaller <= 0.0 {
                continue;
            }
            let ratio = a.geometry.intersection_area(&b.geometry) / smaller;
            if ratio > OVERLAP_TOLERANCE {
                let mut ids = [a.id.clone(), b.id.clone()];
                ids.sort();
                violations.push(ComplianceViolation {
                    kind: ComplianceKind::Overlap,
                    block_ids: ids.to_vec(),
                    measure: ratio,
                });
            }
        }
    }

    // OVERFLOW for any block poking past the canvas.
    for block in &design.layout {
        if !block.geometry.within_canvas(canvas, 1e-9) {
            let area = block.geometry.area();
            let measure = if area > 0.0 {
                1.0 - block.geometry.intersection_area(&canvas_rect) / area
            } else {
                1.0
            };
            violations.push(ComplianceViolation {
                kind: ComplianceKind::Overflow,
                block_ids: alloc::vec![block.id.clone()],
                measure,
            });
        }
    }

    // AREA: canvas coverage of content-bearing blocks, clipped to canvas.
    let clipped: Vec<Rect> = content
        .iter()
        .filter_map(|b| {
            let g = &b.geometry;
            let x0 = g.x.max(0.0);
            let y0 = g.y.max(0.0);
            let x1 = g.right().min(canvas.width_in);
            let y1 = g.bottom().min(canvas.height_in);
            (x1 > x0 && y1 > y0).then(|| Rect::new(x0, y0, x1 - x0, y1 - y0))
        })
        .collect();
    let coverage = union_area(&clipped) / canvas_rect.area();
    if coverage < AREA_MIN_COVERAGE || coverage > AREA_MAX_COVERAGE {
        let mut ids: Vec<String> = content.iter().map(|b| b.id.clone()).collect();
        ids.sort();
        violations.push(ComplianceViolation {
            kind: ComplianceKind::Area,
            block_ids: ids,
            measure: coverage,
        });
    }

    violations.sort_by(|a, b| (a.kind, &a.block_ids).cmp(&(b.kind, &b.block_ids)));
    let penalty = violations
        .iter()
        .map(|v| match v.kind {
            ComplianceKind::Overlap => OVERLAP_PENALTY,
            ComplianceKind::Overflow => OVERFLOW_PENALTY,
            ComplianceKind::Area => AREA_PENALTY,
        })
        .sum::<f64>();
    let r_cpl = 1.0 - penalty.min(1.0);
    ComplianceReport { pass: violations.is_empty(), violations, r_cpl }
}

/// Pipeline stage at which a slide generation failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureStage {
    Design,
    Validate,
    Compile,
    Render,
}

/// One slide generation attempt, for success-rate accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub topic_id: String,
    pub slide_index: u32,
    pub rendered_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_stage: Option<FailureStage>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("success rate over an empty outcome list is undefined")]
    EmptyInput,
}

/// Fraction of outcomes that rendered without errors.
pub fn success_rate(outcomes: &[RunOutcome]) -> Result<f64, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let ok = outcomes.iter().filter(|o| o.rendered_ok).count();
    Ok(ok as f64 / outcomes.len() as f64)
}

//! Rubric-based judging: prompt construction, score parsing, reward
//! arithmetic, and score aggregation.
//!
//! Five grading dimensions cover content (clarity, coherence) and visuals
//! (layout, hierarchy, color scheme). Each dimension is judged by its own
//! prompt that embeds the rubric paragraph and demands a machine-readable
//! `SCORE: <x>` line; transport to an actual model lives in the companion
//! crate, everything here is pure.
//!
//! Rewards: the coder reward gates implementation completeness on
//! executability (`R_C = [exec_ok] · r_imp`); the designer reward is a
//! weighted sum of completeness, compliance, and style, where style is
//! aesthetics gated by implementation completeness (`r_sty = r_imp · r_aes`,
//! `R_D = α·r_cmp + β·r_cpl + γ·r_sty`).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Default sampling parameters for judge requests.
pub const DEFAULT_TEMPERATURE: f64 = 0.0;
pub const DEFAULT_MAX_TOKENS: u32 = 8192;

/// The five grading dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RubricDimension {
    Clarity,
    Coherence,
    Layout,
    Hierarchy,
    ColorScheme,
}

/// All dimensions in canonical order.
pub const DIMENSIONS: [RubricDimension; 5] = [
    RubricDimension::Clarity,
    RubricDimension::Coherence,
    RubricDimension::Layout,
    RubricDimension::Hierarchy,
    RubricDimension::ColorScheme,
];

/// The three visual dimensions (the non-content subset).
pub const VISUAL_DIMENSIONS: [RubricDimension; 3] = [
    RubricDimension::Layout,
    RubricDimension::Hierarchy,
    RubricDimension::ColorScheme,
];

impl RubricDimension {
    pub fn name(&self) -> &'static str {
        match self {
            RubricDimension::Clarity => "Clarity",
            RubricDimension::Coherence => "Coherence",
            RubricDimension::Layout => "Layout",
            RubricDimension::Hierarchy => "Hierarchy",
            RubricDimension::ColorScheme => "Color Scheme",
        }
    }

    /// Identifier-shaped form of the name, for request tags and log keys.
    pub fn slug(&self) -> &'static str {
        match self {
            RubricDimension::Clarity => "clarity",
            RubricDimension::Coherence => "coherence",
            RubricDimension::Layout => "layout",
            RubricDimension::Hierarchy => "hierarchy",
            RubricDimension::ColorScheme => "color_scheme",
        }
    }

    /// The grading rubric paragraph for this dimension.
    pub fn rubric_text(&self) -> &'static str {
        match self {
            RubricDimension::Clarity => {
                "Assess how easily the information can be understood at a glance, focusing \
                 solely on the content's clarity and logical structure. This includes the \
                 clarity of language, how well the information is explained, and whether the \
                 key points are immediately apparent. A high score means the content is \
                 direct, concise, and easy to understand without unnecessary complexity."
            }
            RubricDimension::Coherence => {
                "Evaluate how logically the content is organized. A clear narrative flow is \
                 critical, with well-structured sections and seamless transitions between \
                 ideas. We encourage the use of both text and visuals to enhance clarity and \
                 support the narrative. A high score means the content is organized in a way \
                 that guides the viewer through the slide\u{2019}s message and is complemented \
                 effectively by visual elements."
            }
            RubricDimension::Layout => {
                "Analyze the alignment, spacing, and overall balance of the slide\u{2019}s \
                 elements. Creative and thoughtful typography and element placement enhance \
                 the visual appeal and engagement. Single-block content layouts are \
                 discouraged, as they tend to be overly monotonous and can fail to capture \
                 the audience's interest. Additionally, the slide should incorporate tasteful \
                 decorative elements that enhance the overall design without overwhelming the \
                 content. A high score reflects a well-structured, balanced slide with \
                 sufficient white space, and ideally some creative flair in the layout design."
            }
            RubricDimension::Hierarchy => {
                "This metric assesses whether there is a clear visual distinction between \
                 primary and secondary information. It evaluates if the audience can \
                 immediately identify titles, main points, and supporting details. This is \
                 typically achieved through variations in font size, weight (boldness), \
                 color, and placement."
            }
            RubricDimension::ColorScheme => {
                "Evaluate how rich and aesthetically pleasing the color palette is. This \
                 includes assessing the use of a variety of colors in a harmonious way, with \
                 good contrast that enhances readability and supports the slide's overall \
                 theme. The slide should also feature some decorative elements with colors \
                 used thoughtfully and reasonably, contributing to both visual appeal and a \
                 balanced design. A high score means the colors are vibrant, well-coordinated, \
                 and support the slide's aesthetic and thematic cohesion. The color of the \
                 slides should correspond to the content."
            }
        }
    }
}

/// Build the grading prompt for one dimension of one rendered slide.
///
/// The prompt embeds the rubric verbatim, fixes the 1–5 scale (integer or
/// one decimal), and demands a final `SCORE: <x>` line for parsing.
pub fn build_judge_prompt(dim: RubricDimension, image_ref: &str) -> String {
    format!(
        "You are grading one presentation slide, provided as a rendered image.\n\
         Image: {image_ref}\n\n\
         Grade the dimension \"{name}\" according to this rubric:\n\n\
         {rubric}\n\n\
         Give a score from 1 to 5. Integers and one-decimal values (e.g. 3.5) \
         are both acceptable. Explain your reasoning briefly, then end your \
         reply with a line of exactly this form:\n\
         SCORE: <x>",
        name = dim.name(),
        rubric = dim.rubric_text(),
    )
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JudgeError {
    #[error("no parseable SCORE line for {dim} in judge response")]
    NoScoreFound { dim: String },
    #[error("judge score {value} for {dim} outside the 1-5 scale")]
    OutOfRange { dim: String, value: f64 },
    #[error("aggregate over an empty score list is undefined")]
    EmptyInput,
    #[error("{what} = {value} outside [0, 1]")]
    Domain { what: String, value: f64 },
}

/// True for `4`, `4.0`, `3.5`; false for `4.25`, `four`, `-1`, ``.
fn is_score_format(s: &str) -> bool {
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    let int_ok = !int_part.is_empty() && int_part.bytes().all(|b| b.is_ascii_digit());
    let frac_ok = match frac_part {
        Some(f) => f.len() == 1 && f.bytes().all(|b| b.is_ascii_digit()),
        None => true,
    };
    int_ok && frac_ok
}

/// Extract the score from a judge response; `label` names the check in
/// errors. The last line starting with `SCORE:` wins (a judge may revise
/// itself). Only integers and one-decimal values are accepted; a parseable
/// number outside [1, 5] is `OutOfRange`, anything else is `NoScoreFound`.
pub fn parse_score_labeled(resp: &str, label: &str) -> Result<f64, JudgeError> {
    let last = resp
        .lines()
        .filter_map(|line| line.trim().strip_prefix("SCORE:"))
        .last()
        .ok_or_else(|| JudgeError::NoScoreFound { dim: label.to_string() })?;
    let value_text = last.trim();
    if !is_score_format(value_text) {
        return Err(JudgeError::NoScoreFound { dim: label.to_string() });
    }
    let value: f64 = value_text
        .parse()
        .map_err(|_| JudgeError::NoScoreFound { dim: label.to_string() })?;
    if !(1.0..=5.0).contains(&value) {
        return Err(JudgeError::OutOfRange { dim: label.to_string(), value });
    }
    Ok(value)
}

/// [`parse_score_labeled`] for a rubric dimension.
pub fn parse_judge_score(resp: &str, dim: RubricDimension) -> Result<f64, JudgeError> {
    parse_score_labeled(resp, dim.name())
}

/// Map a 1–5 judge score onto [0, 1]: `(s − 1) / 4`.
pub fn score_to_unit(score: f64) -> f64 {
    (score - 1.0) / 4.0
}

fn check_unit(what: &str, value: f64) -> Result<(), JudgeError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(JudgeError::Domain { what: what.to_string(), value })
    }
}

/// Coder reward: implementation completeness gated by executability.
/// A slide that does not execute earns exactly zero.
pub fn coder_reward(exec_ok: bool, r_imp: f64) -> Result<f64, JudgeError> {
    check_unit("r_imp", r_imp)?;
    Ok(if exec_ok { r_imp } else { 0.0 })
}

/// Weights of the designer reward terms; defaults are an even 1/3 split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { alpha: 1.0 / 3.0, beta: 1.0 / 3.0, gamma: 1.0 / 3.0 }
    }
}

impl RewardWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, JudgeError> {
        for (what, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(JudgeError::Domain { what: what.to_string(), value: v });
            }
        }
        Ok(Self { alpha, beta, gamma })
    }
}

/// The three judged qualities of one page plus free-text suggestions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageEvaluation {
    /// Completeness: are all required inputs reflected in the design?
    pub r_cmp: f64,
    /// Compliance: geometric sanity, from the deterministic report.
    pub r_cpl: f64,
    /// Aesthetics: judged visual quality.
    pub r_aes: f64,
    #[serde(default)]
    pub suggestions: Vec<String>,
}

/// Designer reward: `r_sty = r_imp · r_aes`, then the weighted sum
/// `R_D = α·r_cmp + β·r_cpl + γ·r_sty`. Returns `(r_sty, R_D)`.
pub fn designer_reward(
    e: &PageEvaluation,
    r_imp: f64,
    w: &RewardWeights,
) -> Result<(f64, f64), JudgeError> {
    check_unit("r_cmp", e.r_cmp)?;
    check_unit("r_cpl", e.r_cpl)?;
    check_unit("r_aes", e.r_aes)?;
    check_unit("r_imp", r_imp)?;
    let r_sty = r_imp * e.r_aes;
    let r_d = w.alpha * e.r_cmp + w.beta * e.r_cpl + w.gamma * r_sty;
    Ok((r_sty, r_d))
}

/// One slide's judge scores across all five dimensions, on the 1–5 scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub clarity: f64,
    pub coherence: f64,
    pub layout: f64,
    pub hierarchy: f64,
    pub color_scheme: f64,
    pub judge_model: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raw_responses: Vec<String>,
}

impl ScoreCard {
    pub fn get(&self, dim: RubricDimension) -> f64 {
        match dim {
            RubricDimension::Clarity => self.clarity,
            RubricDimension::Coherence => self.coherence,
            RubricDimension::Layout => self.layout,
            RubricDimension::Hierarchy => self.hierarchy,
            RubricDimension::ColorScheme => self.color_scheme,
        }
    }
}

/// Per-dimension means over a set of score cards, plus the two aggregate
/// conventions: `avg` over all five dimensions (the headline number used in
/// results tables) and `visual_avg` over the three visual dimensions only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub clarity: f64,
    pub coherence: f64,
    pub layout: f64,
    pub hierarchy: f64,
    pub color_scheme: f64,
    /// Mean of all five per-dimension means.
    pub avg: f64,
    /// Mean of the layout, hierarchy, and color-scheme means.
    pub visual_avg: f64,
    pub cards: usize,
}

/// Aggregate score cards into per-dimension means and overall averages.
pub fn aggregate_scores(cards: &[ScoreCard]) -> Result<ScoreSummary, JudgeError> {
    if cards.is_empty() {
        return Err(JudgeError::EmptyInput);
    }
    let n = cards.len() as f64;
    let mean = |dim: RubricDimension| cards.iter().map(|c| c.get(dim)).sum::<f64>() / n;
    let clarity = mean(RubricDimension::Clarity);
    let coherence = mean(RubricDimension::Coherence);
    let layout = mean(RubricDimension::Layout);
    let hierarchy = mean(RubricDimension::Hierarchy);
    let color_scheme = mean(RubricDimension::ColorScheme);
    let avg = (clarity + coherence + layout + hierarchy + color_scheme) / 5.0;
    let visual_avg = (layout + hierarchy + color_scheme) / 3.0;
    Ok(ScoreSummary {
        clarity,
        coherence,
        layout,
        hierarchy,
        color_scheme,
        avg,
        visual_avg,
        cards: cards.len(),
    })
}

/// The full reward record emitted for one judged slide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub r_cmp: f64,
    pub r_cpl: f64,
    pub r_aes: f64,
    pub r_imp: f64,
    pub r_sty: f64,
    #[serde(rename = "R_C")]
    pub r_c: f64,
    #[serde(rename = "R_D")]
    pub r_d: f64,
    pub weights: RewardWeights,
    pub judge_model: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::borrow::ToOwned;
    use alloc::vec;

    #[test]
    fn prompts_embed_their_rubric_and_the_score_contract() {
        let layout = build_judge_prompt(RubricDimension::Layout, "slide_3.png");
        assert!(layout.contains("alignment, spacing, and overall balance"));
        let color = build_judge_prompt(RubricDimension::ColorScheme, "slide_3.png");
        assert!(color.contains("rich and aesthetically pleasing"));

        let mut prompts: Vec<String> = DIMENSIONS
            .iter()
            .map(|d| build_judge_prompt(*d, "img"))
            .collect();
        for p in &prompts {
            assert!(p.contains("SCORE: <x>"));
        }
        prompts.dedup();
        assert_eq!(prompts.len(), 5, "all five prompts must be distinct");
    }

    #[test]
    fn parse_takes_the_last_score_line() {
        let dim = RubricDimension::Clarity;
        assert_eq!(parse_judge_score("reasoning...\nSCORE: 4", dim).unwrap(), 4.0);
        assert_eq!(
            parse_judge_score("SCORE: 3\nrevised after a second look\nSCORE: 3.5", dim).unwrap(),
            3.5
        );
        assert_eq!(parse_judge_score("  SCORE:  5 ", dim).unwrap(), 5.0);
        assert_eq!(parse_judge_score("SCORE: 4.0", dim).unwrap(), 4.0);
    }

    #[test]
    fn parse_rejects_out_of_range_and_malformed_scores() {
        let dim = RubricDimension::Layout;
        assert!(matches!(
            parse_judge_score("SCORE: 6", dim),
            Err(JudgeError::OutOfRange { value, .. }) if value == 6.0
        ));
        assert!(matches!(
            parse_judge_score("SCORE: 0", dim),
            Err(JudgeError::OutOfRange { .. })
        ));
        for resp in ["no score at all", "SCORE: four", "SCORE: 4.25", "SCORE:", "SCORE: -3"] {
            assert!(
                matches!(parse_judge_score(resp, dim), Err(JudgeError::NoScoreFound { .. })),
                "{resp:?} should not parse"
            );
        }
    }

    #[test]
    fn unit_mapping_bijects_the_integer_scale() {
        let expect = [(1.0, 0.0), (2.0, 0.25), (3.0, 0.5), (4.0, 0.75), (5.0, 1.0)];
        for (s, u) in expect {
            assert_eq!(score_to_unit(s), u);
        }
    }

    #[test]
    fn coder_reward_gates_on_executability() {
        assert_eq!(coder_reward(false, 0.9).unwrap(), 0.0);
        assert_eq!(coder_reward(true, 0.8).unwrap(), 0.8);
        assert_eq!(coder_reward(true, 0.0).unwrap(), 0.0);
        assert!(coder_reward(true, 1.5).is_err());
        assert!(coder_reward(false, -0.1).is_err());
    }

    #[test]
    fn designer_reward_matches_direct_substitution() {
        let e = PageEvaluation { r_cmp: 0.9, r_cpl: 0.6, r_aes: 0.8, suggestions: vec![] };
        let (r_sty, r_d) = designer_reward(&e, 0.5, &RewardWeights::default()).unwrap();
        assert!((r_sty - 0.40).abs() < 1e-12);
        assert!((r_d - (0.9 + 0.6 + 0.4) / 3.0).abs() < 1e-12);

        // Zero implementation completeness kills style entirely.
        let (r_sty, _) = designer_reward(&e, 0.0, &RewardWeights::default()).unwrap();
        assert_eq!(r_sty, 0.0);

        // Degenerate weights isolate one term.
        let w = RewardWeights::new(1.0, 0.0, 0.0).unwrap();
        let (_, r_d) = designer_reward(&e, 0.5, &w).unwrap();
        assert_eq!(r_d, e.r_cmp);
    }

    #[test]
    fn designer_reward_is_monotone_in_every_term() {
        // Pairwise dominance over a coarse grid: raising any input never
        // lowers R_D when weights are nonnegative.
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let w = RewardWeights::default();
        let score = |cmp: f64, cpl: f64, aes: f64, imp: f64| {
            let e = PageEvaluation { r_cmp: cmp, r_cpl: cpl, r_aes: aes, suggestions: vec![] };
            designer_reward(&e, imp, &w).unwrap().1
        };
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    for &d in &grid {
                        let base = score(a, b, c, d);
                        for &up in &grid {
                            if up >= a {
                                assert!(score(up, b, c, d) + 1e-12 >= base);
                            }
                            if up >= b {
                                assert!(score(a, up, c, d) + 1e-12 >= base);
                            }
                            if up >= c {
                                assert!(score(a, b, up, d) + 1e-12 >= base);
                            }
                            if up >= d {
                                assert!(score(a, b, c, up) + 1e-12 >= base);
                            }
                        }
                    }
                }
            }
        }
    }

    fn card(cl: f64, co: f64, la: f64, hi: f64, cs: f64) -> ScoreCard {
        ScoreCard {
            clarity: cl,
            coherence: co,
            layout: la,
            hierarchy: hi,
            color_scheme: cs,
            judge_model: "mock".to_owned(),
            raw_responses: vec![],
        }
    }

    fn round2(x: f64) -> f64 {
        libm::round(x * 100.0) / 100.0
    }

    #[test]
    fn aggregate_means_and_averages() {
        // Five-dimension mean is the headline average; on this row it comes
        // out to exactly 3.78 at two decimals, while the visual-only mean is
        // 3.7667 → 3.77.
        let summary = aggregate_scores(&[card(3.79, 3.81, 3.55, 4.04, 3.71)]).unwrap();
        assert_eq!(round2(summary.avg), 3.78);
        assert!((summary.visual_avg - (3.55 + 4.04 + 3.71) / 3.0).abs() < 1e-12);
        assert_eq!(round2(summary.visual_avg), 3.77);

        let two = aggregate_scores(&[
            card(3.0, 3.0, 3.0, 4.0, 5.0),
            card(3.0, 3.0, 3.0, 4.0, 5.0),
        ])
        .unwrap();
        assert_eq!(two.layout, 3.0);
        assert_eq!(two.hierarchy, 4.0);
        assert_eq!(two.cards, 2);

        let pair = aggregate_scores(&[
            card(3.0, 3.0, 3.0, 3.0, 3.0),
            card(3.0, 3.0, 4.0, 3.0, 3.0),
        ])
        .unwrap();
        assert_eq!(pair.layout, 3.5);

        assert_eq!(aggregate_scores(&[]), Err(JudgeError::EmptyInput));
    }

    #[test]
    fn reward_record_serializes_with_uppercase_reward_keys() {
        let record = RewardRecord {
            r_cmp: 1.0,
            r_cpl: 0.75,
            r_aes: 0.5,
            r_imp: 1.0,
            r_sty: 0.5,
            r_c: 1.0,
            r_d: 0.75,
            weights: RewardWeights::default(),
            judge_model: "mock".to_owned(),
        };
        let json = serde_json::to_string(&record).unwrap();
        assert!(json.contains("\"R_C\":1.0"));
        assert!(json.contains("\"R_D\":0.75"));
        let back: RewardRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, record);
    }
}

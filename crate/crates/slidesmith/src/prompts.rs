//! Prompt templates with named `{{slot}}` markers.
//!
//! The shipped set is embedded in the binary; pointing a [`PromptSet`] at a
//! directory overrides individual templates by file name, so prompt text
//! can be iterated without a rebuild. Rendering is strict: a marker left
//! unfilled is an error, because a prompt with a hole in it produces
//! garbage downstream that is much harder to trace.

use std::collections::HashMap;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("unknown prompt template {0:?}")]
    UnknownTemplate(String),
    #[error("template {template:?} has an unfilled slot {{{{{slot}}}}}")]
    UnresolvedSlot { template: String, slot: String },
    #[error("cannot read template override: {0}")]
    Io(#[from] std::io::Error),
}

const BUILTIN: &[(&str, &str)] = &[
    ("research", include_str!("../prompts/research.txt")),
    ("outline_sections", include_str!("../prompts/outline_sections.txt")),
    ("outline_budgets", include_str!("../prompts/outline_budgets.txt")),
    ("outline_slides", include_str!("../prompts/outline_slides.txt")),
    ("style_guide", include_str!("../prompts/style_guide.txt")),
    ("style_hints", include_str!("../prompts/style_hints.txt")),
    ("expand", include_str!("../prompts/expand.txt")),
    ("design", include_str!("../prompts/design.txt")),
    ("design_reformat", include_str!("../prompts/design_reformat.txt")),
    ("content_check", include_str!("../prompts/content_check.txt")),
    ("implementation_check", include_str!("../prompts/implementation_check.txt")),
    ("coder", include_str!("../prompts/coder.txt")),
];

pub struct PromptSet {
    override_dir: Option<PathBuf>,
}

impl PromptSet {
    /// The embedded templates only.
    pub fn builtin() -> Self {
        Self { override_dir: None }
    }

    /// Embedded templates, with `<dir>/<name>.txt` taking precedence when
    /// present.
    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        Self { override_dir: Some(dir.into()) }
    }

    fn template_text(&self, name: &str) -> Result<String, PromptError> {
        if let Some(dir) = &self.override_dir {
            let path = dir.join(format!("{name}.txt"));
            if path.is_file() {
                return Ok(std::fs::read_to_string(path)?);
            }
        }
        BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| (*text).to_string())
            .ok_or_else(|| PromptError::UnknownTemplate(name.to_string()))
    }

    /// Render `name` with every `{{slot}}` replaced. Slots not used by the
    /// template are ignored; slots left unreplaced are an error.
    pub fn render(&self, name: &str, slots: &[(&str, &str)]) -> Result<String, PromptError> {
        let mut text = self.template_text(name)?;
        let values: HashMap<&str, &str> = slots.iter().copied().collect();
        for (slot, value) in &values {
            text = text.replace(&format!("{{{{{slot}}}}}"), value);
        }
        if let Some(slot) = find_marker(&text) {
            return Err(PromptError::UnresolvedSlot {
                template: name.to_string(),
                slot,
            });
        }
        Ok(text)
    }
}

/// First `{{word}}` marker left in the text, if any. Only simple
/// identifier-shaped markers count, so JSON braces in template examples
/// never false-positive.
fn find_marker(text: &str) -> Option<String> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i + 4 <= bytes.len() {
        if &bytes[i..i + 2] == b"{{" {
            let rest = &text[i + 2..];
            let end = rest.find("}}")?;
            let inner = &rest[..end];
            if !inner.is_empty()
                && inner.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            {
                return Some(inner.to_string());
            }
        }
        i += 1;
    }
    None
}

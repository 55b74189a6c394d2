//! Prompt templates and rendering.
//!
//! Templates are plain UTF-8 files with `{placeholder}` slots; the bundled
//! set covers the thirteen generation styles and ships verbatim under
//! `data/templates/`. Rendering is pure textual substitution: every
//! referenced placeholder must be bound, every binding must be referenced.
//!
//! The `{topic}` slot is glued to the preceding sentence (`...extract
//! above{topic}.`), so bind it to an empty string or to a lead-in like
//! `, within the topic of Indian classical music`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Placeholder vocabulary templates may reference.
pub const PLACEHOLDERS: [&str; 8] = [
    "extract",
    "topic",
    "language",
    "script",
    "persona",
    "seed_text",
    "question",
    "solution",
];

/// The thirteen bundled styles.
pub const STYLES: [&str; 13] = [
    "wikihow",
    "blogpost",
    "textbook_academic",
    "textbook_narrative",
    "young_children_story",
    "morality_story",
    "problem_solving_story",
    "forums_story",
    "reddit_post",
    "persona",
    "persona_doc",
    "persona_expand",
    "math_textbook",
];

const BUILTIN: [(&str, &str); 13] = [
    ("wikihow", include_str!("../data/templates/wikihow.txt")),
    ("blogpost", include_str!("../data/templates/blogpost.txt")),
    (
        "textbook_academic",
        include_str!("../data/templates/textbook_academic.txt"),
    ),
    (
        "textbook_narrative",
        include_str!("../data/templates/textbook_narrative.txt"),
    ),
    (
        "young_children_story",
        include_str!("../data/templates/young_children_story.txt"),
    ),
    (
        "morality_story",
        include_str!("../data/templates/morality_story.txt"),
    ),
    (
        "problem_solving_story",
        include_str!("../data/templates/problem_solving_story.txt"),
    ),
    (
        "forums_story",
        include_str!("../data/templates/forums_story.txt"),
    ),
    ("reddit_post", include_str!("../data/templates/reddit_post.txt")),
    ("persona", include_str!("../data/templates/persona.txt")),
    ("persona_doc", include_str!("../data/templates/persona_doc.txt")),
    (
        "persona_expand",
        include_str!("../data/templates/persona_expand.txt"),
    ),
    (
        "math_textbook",
        include_str!("../data/templates/math_textbook.txt"),
    ),
];

/// A style's prompt body plus the placeholders it references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub style: String,
    pub body: String,
    placeholders: BTreeSet<String>,
}

/// Scan `{name}` references; names must come from [`PLACEHOLDERS`]. Braces
/// that do not wrap a known name pass through as literal text.
fn scan_placeholders(body: &str) -> Result<BTreeSet<String>> {
    let mut found = BTreeSet::new();
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(close) = body[i + 1..].find('}') {
                let name = &body[i + 1..i + 1 + close];
                if !name.is_empty() && name.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
                    if PLACEHOLDERS.contains(&name) {
                        found.insert(name.to_string());
                    } else {
                        return Err(Error::config(format!(
                            "template references unknown placeholder {{{name}}}"
                        )));
                    }
                    i += close + 2;
                    continue;
                }
            }
        }
        i += 1;
    }
    Ok(found)
}

impl PromptTemplate {
    pub fn new(style: impl Into<String>, body: impl Into<String>) -> Result<Self> {
        let body = body.into();
        let placeholders = scan_placeholders(&body)?;
        Ok(PromptTemplate {
            style: style.into(),
            body,
            placeholders,
        })
    }

    pub fn placeholders(&self) -> &BTreeSet<String> {
        &self.placeholders
    }
}

/// Substitute bindings into the template.
///
/// Errors name the offending placeholder: missing bindings and unreferenced
/// (extra) bindings are both rejected.
pub fn render_prompt(t: &PromptTemplate, bindings: &BTreeMap<String, String>) -> Result<String> {
    for name in &t.placeholders {
        if !bindings.contains_key(name) {
            return Err(Error::input(format!(
                "missing binding for placeholder {{{name}}} in style {:?}",
                t.style
            )));
        }
    }
    for key in bindings.keys() {
        if !t.placeholders.contains(key) {
            return Err(Error::input(format!(
                "binding {{{key}}} is not referenced by style {:?}",
                t.style
            )));
        }
    }
    let mut out = String::with_capacity(t.body.len());
    let mut rest = t.body.as_str();
    while let Some(open) = rest.find('{') {
        let (before, after) = rest.split_at(open);
        out.push_str(before);
        if let Some(close) = after.find('}') {
            let name = &after[1..close];
            if let Some(value) = bindings.get(name) {
                out.push_str(value);
                rest = &after[close + 1..];
                continue;
            }
        }
        // Literal brace.
        out.push('{');
        rest = &after[1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// A named collection of templates (bundled or loaded from a directory).
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<String, PromptTemplate>,
}

impl TemplateSet {
    /// The thirteen bundled styles.
    pub fn bundled() -> TemplateSet {
        let templates = BUILTIN
            .iter()
            .map(|(style, body)| {
                let t = PromptTemplate::new(*style, *body).expect("bundled templates are valid");
                (style.to_string(), t)
            })
            .collect();
        TemplateSet { templates }
    }

    /// Load every `<style>.txt` under `dir`.
    pub fn load_dir(dir: &Path) -> Result<TemplateSet> {
        if !dir.is_dir() {
            return Err(Error::config(format!(
                "template directory not found: {}",
                dir.display()
            )));
        }
        let mut templates = BTreeMap::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let Some(style) = name.strip_suffix(".txt") else {
                continue;
            };
            let body = fs::read_to_string(&path)?;
            templates.insert(style.to_string(), PromptTemplate::new(style, body)?);
        }
        if templates.is_empty() {
            return Err(Error::config(format!(
                "no *.txt templates under {}",
                dir.display()
            )));
        }
        Ok(TemplateSet { templates })
    }

    pub fn get(&self, style: &str) -> Result<&PromptTemplate> {
        self.templates
            .get(style)
            .ok_or_else(|| Error::config(format!("no template for style {style:?}")))
    }

    pub fn styles(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(|s| s.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn bundled_set_has_all_styles() {
        let set = TemplateSet::bundled();
        for style in STYLES {
            assert!(set.get(style).is_ok(), "missing {style}");
        }
    }

    #[test]
    fn wikihow_render_contains_anchor_and_extract() {
        let set = TemplateSet::bundled();
        let t = set.get("wikihow").unwrap();
        let prompt = render_prompt(
            t,
            &bind(&[
                ("extract", "गंगा नदी के किनारे"),
                ("topic", ""),
                ("language", "Hindi"),
                ("script", "Devanagari"),
            ]),
        )
        .unwrap();
        assert!(prompt.contains("Write a long and very detailed tutorial"));
        assert!(prompt.contains("गंगा नदी के किनारे"));
        assert!(prompt.contains("Generate text in Hindi language"));
        assert!(!prompt.contains('{'));
    }

    #[test]
    fn math_render_contains_anchor() {
        let set = TemplateSet::bundled();
        let t = set.get("math_textbook").unwrap();
        let prompt = render_prompt(
            t,
            &bind(&[
                ("question", "2x + 3 = 7"),
                ("solution", "x = 2"),
                ("language", "Tamil"),
                ("script", "Tamil"),
            ]),
        )
        .unwrap();
        assert!(prompt.contains("Create an academic textbook section"));
        assert!(prompt.contains("2x + 3 = 7"));
    }

    #[test]
    fn missing_binding_names_placeholder() {
        let set = TemplateSet::bundled();
        let t = set.get("persona").unwrap();
        let err = render_prompt(t, &bind(&[("language", "Hindi")])).unwrap_err();
        assert!(err.to_string().contains("{persona}"), "{err}");
    }

    #[test]
    fn extra_binding_rejected() {
        let set = TemplateSet::bundled();
        let t = set.get("persona_expand").unwrap();
        let err = render_prompt(
            t,
            &bind(&[("persona", "a teacher"), ("extract", "unused")]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("{extract}"), "{err}");
    }

    #[test]
    fn unknown_placeholder_rejected_at_parse() {
        assert!(matches!(
            PromptTemplate::new("x", "hello {nonsense}"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn distinct_extracts_give_distinct_prompts() {
        let set = TemplateSet::bundled();
        let t = set.get("blogpost").unwrap();
        let base = [("topic", ""), ("language", "Hindi"), ("script", "Devanagari")];
        let mut b1 = bind(&base);
        b1.insert("extract".into(), "first extract".into());
        let mut b2 = bind(&base);
        b2.insert("extract".into(), "second extract".into());
        let p1 = render_prompt(t, &b1).unwrap();
        let p2 = render_prompt(t, &b2).unwrap();
        assert_ne!(p1, p2);
        assert!(p1.contains("first extract"));
    }

    #[test]
    fn literal_braces_pass_through() {
        let t = PromptTemplate::new("x", "a { not-a-slot } b {persona}").unwrap();
        let out = render_prompt(&t, &bind(&[("persona", "P")])).unwrap();
        assert_eq!(out, "a { not-a-slot } b P");
    }
}

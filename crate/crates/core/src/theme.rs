//! Language and theme asset bundles.
//!
//! A bundle is a UTF-8 JSON document declaring attribute pools with their
//! phrase forms, clue and red-herring templates, filler pools for herrings,
//! the prompt skeleton, and literal post-replacement rules. Grammar lives
//! entirely in the data: a language that needs another case or word order
//! declares another phrase form and uses it from its templates.
//!
//! Template placeholders are `{role.form}` or `{role}`:
//!
//! | role | meaning |
//! |------|---------|
//! | `x`, `y`, `z` | clue referents (`x` also the herring's solution attribute) |
//! | `p` | a 1-based position |
//! | `n` | the gap of `multiple_between` |
//! | `d`, `i`, `f` | distractor, interest and fact fillers of a herring |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::puzzle::{AttrId, ClueType, HerringPool, RedHerringType, Size};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub location: String,
    pub message: String,
}

impl Finding {
    fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

fn join_findings(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(|f| format!("\n  - {f}"))
        .collect::<String>()
}

#[derive(Debug, Error)]
pub enum ThemeError {
    #[error("cannot read theme bundle {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse theme bundle: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid theme bundle:{}", join_findings(.0))]
    Invalid(Vec<Finding>),
    #[error("no built-in theme {language}/{theme}")]
    UnknownBuiltin { language: String, theme: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextRules {
    /// Separator between list items except the last pair (", ").
    pub list_separator: String,
    /// Separator before the last list item (" and ").
    pub list_final_separator: String,
    /// Upper-case the first letter of every rendered clue.
    #[serde(default = "default_true")]
    pub capitalize_sentences: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSkeleton {
    /// May use `{n_objects}`.
    pub intro: String,
    pub categories_header: String,
    /// Uses `{label}` and `{attributes}`.
    pub category_line: String,
    pub clues_header: String,
    /// Uses `{i}` and `{text}`.
    pub clue_line: String,
    pub question: String,
    pub format_instructions: String,
    /// Alternative wording for the experimental unsorted-answer variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format_instructions_unsorted: Option<String>,
    /// Uses `{i}`.
    pub object_key: String,
    /// Uses `{category}` and `{i}`.
    pub answer_slot: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDef {
    pub id: AttrId,
    /// Canonical display name, shown in the attribute list and expected
    /// in answers.
    pub name: String,
    pub forms: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: String,
    /// Heading in the attribute list, e.g. "Favourite book genres".
    pub label: String,
    /// Column name in the answer format block, e.g. "favourite book genres".
    pub answer_key: String,
    /// Lower ranks come first wherever order is free.
    pub naturalness_rank: u32,
    pub attributes: Vec<AttributeDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub id: String,
    pub forms: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HerringPools {
    #[serde(default)]
    pub facts: Vec<PoolEntry>,
    #[serde(default)]
    pub distractors: Vec<PoolEntry>,
    #[serde(default)]
    pub interests: Vec<PoolEntry>,
}

impl HerringPools {
    pub fn pool(&self, pool: HerringPool) -> &[PoolEntry] {
        match pool {
            HerringPool::Fact => &self.facts,
            HerringPool::Distractor => &self.distractors,
            HerringPool::Interest => &self.interests,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostReplacement {
    pub pattern: String,
    pub replacement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThemeConfig {
    pub schema_version: u32,
    pub language: String,
    pub theme: String,
    pub text: TextRules,
    pub prompt: PromptSkeleton,
    pub categories: Vec<Category>,
    pub clue_templates: BTreeMap<ClueType, Vec<String>>,
    pub herring_templates: BTreeMap<RedHerringType, Vec<String>>,
    #[serde(default)]
    pub herring_pools: HerringPools,
    /// Literal replacements applied in order to every rendered sentence.
    #[serde(default)]
    pub post_replacements: Vec<PostReplacement>,
}

/// One piece of a parsed template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Text(String),
    Slot { role: String, form: Option<String> },
}

/// Splits a template into literal text and `{role.form}` slots. `{{` and
/// `}}` are literal braces.
pub fn parse_template(template: &str) -> Result<Vec<Segment>, String> {
    let mut segments = Vec::new();
    let mut text = String::new();
    let mut chars = template.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '{' if chars.peek() == Some(&'{') => {
                chars.next();
                text.push('{');
            }
            '}' if chars.peek() == Some(&'}') => {
                chars.next();
                text.push('}');
            }
            '{' => {
                let mut inner = String::new();
                loop {
                    match chars.next() {
                        Some('}') => break,
                        Some('{') | None => {
                            return Err(format!("unterminated placeholder in {template:?}"))
                        }
                        Some(ch) => inner.push(ch),
                    }
                }
                let (role, form) = match inner.split_once('.') {
                    Some((r, f)) => (r.trim(), Some(f.trim().to_string())),
                    None => (inner.trim(), None),
                };
                if role.is_empty() || form.as_deref() == Some("") {
                    return Err(format!("empty placeholder in {template:?}"));
                }
                if !text.is_empty() {
                    segments.push(Segment::Text(std::mem::take(&mut text)));
                }
                segments.push(Segment::Slot {
                    role: role.to_string(),
                    form,
                });
            }
            '}' => return Err(format!("unmatched '}}' in {template:?}")),
            other => text.push(other),
        }
    }
    if !text.is_empty() {
        segments.push(Segment::Text(text));
    }
    Ok(segments)
}

/// Roles a clue template must use, and whether each takes a phrase form.
fn clue_roles(clue_type: ClueType) -> Vec<(&'static str, bool)> {
    let mut roles = vec![("x", true)];
    if clue_type.arity() >= 2 {
        roles.push(("y", true));
    }
    if clue_type.arity() == 3 {
        roles.push(("z", true));
    }
    match clue_type {
        ClueType::FoundAt | ClueType::NotAt => roles.push(("p", false)),
        ClueType::MultipleBetween => roles.push(("n", false)),
        _ => {}
    }
    roles
}

fn herring_roles(herring_type: RedHerringType) -> Vec<(&'static str, bool)> {
    let mut roles = Vec::new();
    if herring_type.uses_solution_attribute() {
        roles.push(("x", true));
    }
    for pool in herring_type.filler_pools() {
        roles.push((pool.role(), true));
    }
    if herring_type.uses_position() {
        roles.push(("p", false));
    }
    roles
}

impl ThemeConfig {
    pub fn from_json(json: &str) -> Result<Self, ThemeError> {
        let theme: ThemeConfig = serde_json::from_str(json)?;
        let findings = theme.validate();
        if findings.is_empty() {
            Ok(theme)
        } else {
            Err(ThemeError::Invalid(findings))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("theme configs always serialize")
    }

    pub fn tag(&self) -> String {
        format!("{}/{}", self.language, self.theme)
    }

    pub fn category(&self, id: &str) -> Option<&Category> {
        self.categories.iter().find(|c| c.id == id)
    }

    /// Attribute definition and owning category for an attribute id.
    pub fn attribute(&self, id: &AttrId) -> Option<(&Category, &AttributeDef)> {
        self.categories.iter().find_map(|c| {
            c.attributes
                .iter()
                .find(|a| &a.id == id)
                .map(|a| (c, a))
        })
    }

    pub fn pool_entry(&self, pool: HerringPool, id: &str) -> Option<&PoolEntry> {
        self.herring_pools.pool(pool).iter().find(|e| e.id == id)
    }

    /// Every invariant violation, in document order.
    pub fn validate(&self) -> Vec<Finding> {
        let mut findings = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            findings.push(Finding::new(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        if self.language.trim().is_empty() {
            findings.push(Finding::new("language", "must not be empty"));
        }
        if self.theme.trim().is_empty() {
            findings.push(Finding::new("theme", "must not be empty"));
        }
        self.validate_prompt(&mut findings);
        self.validate_categories(&mut findings);
        self.validate_pools(&mut findings);
        for clue_type in ClueType::ALL {
            self.validate_clue_templates(clue_type, &mut findings);
        }
        for herring_type in RedHerringType::ALL {
            self.validate_herring_templates(herring_type, &mut findings);
        }
        for (i, rule) in self.post_replacements.iter().enumerate() {
            if rule.pattern.is_empty() {
                findings.push(Finding::new(
                    format!("post_replacements[{i}]"),
                    "empty pattern",
                ));
            }
        }
        findings
    }

    fn validate_prompt(&self, findings: &mut Vec<Finding>) {
        let p = &self.prompt;
        let fields: [(&str, &str, &[&str], &[&str]); 5] = [
            ("prompt.intro", &p.intro, &[], &["n_objects"]),
            (
                "prompt.category_line",
                &p.category_line,
                &["label", "attributes"],
                &[],
            ),
            ("prompt.clue_line", &p.clue_line, &["i", "text"], &[]),
            ("prompt.object_key", &p.object_key, &["i"], &[]),
            ("prompt.answer_slot", &p.answer_slot, &["category", "i"], &[]),
        ];
        for (location, template, required, optional) in fields {
            match parse_template(template) {
                Err(e) => findings.push(Finding::new(location, e)),
                Ok(segments) => {
                    let used: BTreeSet<&str> = segments
                        .iter()
                        .filter_map(|s| match s {
                            Segment::Slot { role, .. } => Some(role.as_str()),
                            Segment::Text(_) => None,
                        })
                        .collect();
                    for r in required {
                        if !used.contains(r) {
                            findings.push(Finding::new(location, format!("missing {{{r}}}")));
                        }
                    }
                    for u in used {
                        if !required.contains(&u) && !optional.contains(&u) {
                            findings.push(Finding::new(
                                location,
                                format!("unknown placeholder {{{u}}}"),
                            ));
                        }
                    }
                }
            }
        }
    }

    fn validate_categories(&self, findings: &mut Vec<Finding>) {
        if self.categories.is_empty() {
            findings.push(Finding::new("categories", "no categories declared"));
        }
        let mut category_ids = BTreeSet::new();
        let mut ranks = BTreeMap::new();
        let mut attr_ids = BTreeSet::new();
        for (ci, category) in self.categories.iter().enumerate() {
            let loc = format!("categories[{ci}] ({})", category.id);
            if !category_ids.insert(&category.id) {
                findings.push(Finding::new(&loc, "duplicate category id"));
            }
            if let Some(other) = ranks.insert(category.naturalness_rank, &category.id) {
                findings.push(Finding::new(
                    &loc,
                    format!(
                        "naturalness_rank {} already used by {other}",
                        category.naturalness_rank
                    ),
                ));
            }
            if category.attributes.is_empty() {
                findings.push(Finding::new(&loc, "empty attribute pool"));
            }
            let mut names = BTreeSet::new();
            for attr in &category.attributes {
                if !attr_ids.insert(&attr.id) {
                    findings.push(Finding::new(
                        &loc,
                        format!("attribute id {} is declared twice", attr.id),
                    ));
                }
                if !names.insert(&attr.name) {
                    findings.push(Finding::new(
                        &loc,
                        format!("display name {:?} is used twice", attr.name),
                    ));
                }
            }
        }
    }

    fn validate_pools(&self, findings: &mut Vec<Finding>) {
        for pool in [HerringPool::Fact, HerringPool::Distractor, HerringPool::Interest] {
            let mut ids = BTreeSet::new();
            for entry in self.herring_pools.pool(pool) {
                if !ids.insert(&entry.id) {
                    findings.push(Finding::new(
                        format!("herring_pools.{pool:?}"),
                        format!("duplicate id {}", entry.id),
                    ));
                }
            }
        }
    }

    fn check_template(
        &self,
        location: &str,
        template: &str,
        roles: &[(&str, bool)],
        findings: &mut Vec<Finding>,
    ) {
        let segments = match parse_template(template) {
            Ok(s) => s,
            Err(e) => {
                findings.push(Finding::new(location, e));
                return;
            }
        };
        let mut used = BTreeSet::new();
        for segment in &segments {
            let Segment::Slot { role, form } = segment else {
                continue;
            };
            used.insert(role.as_str());
            let Some(&(_, wants_form)) = roles.iter().find(|(r, _)| r == role) else {
                findings.push(Finding::new(
                    location,
                    format!("unknown placeholder role {{{role}}}"),
                ));
                continue;
            };
            match (wants_form, form) {
                (true, None) => findings.push(Finding::new(
                    location,
                    format!("{{{role}}} needs a phrase form, e.g. {{{role}.subject}}"),
                )),
                (false, Some(_)) => findings.push(Finding::new(
                    location,
                    format!("{{{role}}} takes no phrase form"),
                )),
                (true, Some(form)) => self.check_form(location, role, form, findings),
                (false, None) => {}
            }
        }
        for (role, _) in roles {
            if !used.contains(role) {
                findings.push(Finding::new(
                    location,
                    format!("template never uses {{{role}}}"),
                ));
            }
        }
    }

    fn check_form(&self, location: &str, role: &str, form: &str, findings: &mut Vec<Finding>) {
        let pool = match role {
            "x" | "y" | "z" => {
                for category in &self.categories {
                    for attr in &category.attributes {
                        if !attr.forms.contains_key(form) {
                            findings.push(Finding::new(
                                location,
                                format!(
                                    "attribute {} ({}) lacks phrase form {form:?}",
                                    attr.id, category.id
                                ),
                            ));
                        }
                    }
                }
                return;
            }
            "d" => HerringPool::Distractor,
            "i" => HerringPool::Interest,
            "f" => HerringPool::Fact,
            _ => return,
        };
        for entry in self.herring_pools.pool(pool) {
            if !entry.forms.contains_key(form) {
                findings.push(Finding::new(
                    location,
                    format!("{pool:?} entry {} lacks phrase form {form:?}", entry.id),
                ));
            }
        }
    }

    fn validate_clue_templates(&self, clue_type: ClueType, findings: &mut Vec<Finding>) {
        let location = format!("clue_templates.{clue_type}");
        match self.clue_templates.get(&clue_type) {
            None => findings.push(Finding::new(location, "missing template")),
            Some(list) if list.is_empty() => {
                findings.push(Finding::new(location, "empty template list"))
            }
            Some(list) => {
                for template in list {
                    self.check_template(&location, template, &clue_roles(clue_type), findings);
                }
            }
        }
    }

    fn validate_herring_templates(&self, herring_type: RedHerringType, findings: &mut Vec<Finding>) {
        let location = format!("herring_templates.{herring_type}");
        match self.herring_templates.get(&herring_type) {
            None => findings.push(Finding::new(location, "missing template")),
            Some(list) if list.is_empty() => {
                findings.push(Finding::new(location, "empty template list"))
            }
            Some(list) => {
                for template in list {
                    self.check_template(
                        &location,
                        template,
                        &herring_roles(herring_type),
                        findings,
                    );
                }
            }
        }
    }
}

/// Reads and fully validates a bundle from disk.
pub fn load_theme(path: impl AsRef<Path>) -> Result<ThemeConfig, ThemeError> {
    let path = path.as_ref();
    let json = std::fs::read_to_string(path).map_err(|source| ThemeError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ThemeConfig::from_json(&json)
}

/// Problems that stop `theme` from producing puzzles of `size`. Empty when
/// generation can proceed.
pub fn validate_for_size(theme: &ThemeConfig, size: Size) -> Vec<Finding> {
    let mut findings = Vec::new();
    let usable = theme
        .categories
        .iter()
        .filter(|c| c.attributes.len() >= size.n_objects())
        .count();
    if theme.categories.len() < size.n_attributes() {
        findings.push(Finding::new(
            "categories",
            format!(
                "{} categories declared but size {size} needs {}",
                theme.categories.len(),
                size.n_attributes()
            ),
        ));
    } else if usable < size.n_attributes() {
        findings.push(Finding::new(
            "categories",
            format!(
                "pool too small: only {usable} categories have at least {} attributes, size {size} needs {}",
                size.n_objects(),
                size.n_attributes()
            ),
        ));
    }
    for clue_type in ClueType::ALL.into_iter().filter(|t| t.is_eligible(size)) {
        if theme
            .clue_templates
            .get(&clue_type)
            .is_none_or(|list| list.is_empty())
        {
            findings.push(Finding::new(
                format!("clue_templates.{clue_type}"),
                format!("missing template, required for size {size}"),
            ));
        }
    }
    findings
}

struct Builtin {
    language: &'static str,
    theme: &'static str,
    json: &'static str,
}

const BUILTINS: &[Builtin] = &[
    Builtin {
        language: "en",
        theme: "houses",
        json: include_str!("../themes/en/houses.json"),
    },
    Builtin {
        language: "da",
        theme: "houses",
        json: include_str!("../themes/da/houses.json"),
    },
];

/// `(language, theme)` pairs shipped with the crate.
pub fn builtin_themes() -> Vec<(&'static str, &'static str)> {
    BUILTINS.iter().map(|b| (b.language, b.theme)).collect()
}

pub fn builtin(language: &str, theme: &str) -> Result<ThemeConfig, ThemeError> {
    let found = BUILTINS
        .iter()
        .find(|b| b.language == language && b.theme == theme)
        .ok_or_else(|| ThemeError::UnknownBuiltin {
            language: language.to_string(),
            theme: theme.to_string(),
        })?;
    ThemeConfig::from_json(found.json)
}

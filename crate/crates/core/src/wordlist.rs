//! Swadesh-style wordlist databases.
//!
//! A [`LexicalDatabase`] is a languages × items grid of word-form sets. Input
//! is the long-row TSV format `tsv-long-v1` (one row per word form) plus an
//! optional `key=value` metadata sidecar carrying the family name and
//! per-language roles and tags.
//!
//! ```text
//! language<TAB>item_id<TAB>gloss<TAB>form<TAB>cognate_class
//! latin<TAB>i001<TAB>water<TAB>aqua<TAB>A
//! italian<TAB>i001<TAB>water<TAB>acqua<TAB>A
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use unicode_normalization::UnicodeNormalization;

/// Header of the `tsv-long-v1` format. The trailing `cognate_class` column is
/// optional.
pub const TSV_LONG_V1_HEADER: [&str; 5] = ["language", "item_id", "gloss", "form", "cognate_class"];

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum WordlistError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid word form {0:?}: empty after trimming")]
    InvalidForm(String),
    #[error("metadata line {line}: {message}")]
    Metadata { line: usize, message: String },
    #[error("metadata references unknown language {0:?}")]
    UnknownLanguage(String),
    #[error("item filter references unknown item {0:?}")]
    UnknownItem(String),
    #[error("language filter selects no languages")]
    EmptySelection,
    #[error("unsupported wordlist format {0:?}")]
    UnsupportedFormat(String),
    #[error("invalid database: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, WordlistError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WordlistFormat {
    #[default]
    TsvLongV1,
}

impl FromStr for WordlistFormat {
    type Err = WordlistError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv-long-v1" => Ok(Self::TsvLongV1),
            other => Err(WordlistError::UnsupportedFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Role {
    #[default]
    Modern,
    Proto,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Modern => "modern",
            Role::Proto => "proto",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "modern" => Ok(Role::Modern),
            "proto" => Ok(Role::Proto),
            other => Err(format!("unknown role {other:?} (expected modern or proto)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageRecord {
    pub label: String,
    pub role: Role,
    pub tags: BTreeSet<String>,
}

impl LanguageRecord {
    pub fn modern(label: impl Into<String>) -> Self {
        Self { label: label.into(), role: Role::Modern, tags: BTreeSet::new() }
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemRecord {
    pub item_id: String,
    pub gloss: String,
}

/// A single attested word. `normalized` is what every distance is computed on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordForm {
    pub raw: String,
    pub normalized: Vec<char>,
    pub cognate_class: Option<String>,
}

impl WordForm {
    pub fn new(raw: &str, cognate_class: Option<String>) -> Result<Self> {
        let normalized = normalize_form(raw)?;
        Ok(Self { raw: raw.to_string(), normalized, cognate_class })
    }

    pub fn normalized_string(&self) -> String {
        self.normalized.iter().collect()
    }
}

/// NFC, lowercase, trim. A final NFC pass keeps the result stable under
/// re-normalization even when a lowercase mapping produces a decomposable
/// sequence.
pub fn normalize_form(raw: &str) -> Result<Vec<char>> {
    let composed: String = raw.nfc().collect();
    let lowered = composed.to_lowercase();
    let trimmed = lowered.trim();
    if trimmed.is_empty() {
        return Err(WordlistError::InvalidForm(raw.to_string()));
    }
    Ok(trimmed.nfc().collect())
}

/// Languages × items table of word-form sets.
///
/// Slots are stored densely in row-major order (language, item); an empty
/// slot is a missing entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexicalDatabase {
    family_name: String,
    languages: Vec<LanguageRecord>,
    items: Vec<ItemRecord>,
    slots: Vec<Vec<WordForm>>,
}

impl LexicalDatabase {
    /// Builds a database from explicit parts. `slots` maps (language index,
    /// item index) to the forms for that cell; synonyms whose normalized forms
    /// coincide are collapsed.
    pub fn from_parts(
        family_name: impl Into<String>,
        languages: Vec<LanguageRecord>,
        items: Vec<ItemRecord>,
        slots: impl IntoIterator<Item = ((usize, usize), Vec<WordForm>)>,
    ) -> Result<Self> {
        let mut db = Self {
            family_name: family_name.into(),
            slots: vec![Vec::new(); languages.len() * items.len()],
            languages,
            items,
        };
        db.check_unique_labels()?;
        for ((lang, item), forms) in slots {
            if lang >= db.languages.len() || item >= db.items.len() {
                return Err(WordlistError::Invalid(format!(
                    "slot ({lang}, {item}) outside {}×{} table",
                    db.languages.len(),
                    db.items.len()
                )));
            }
            for form in forms {
                db.insert(lang, item, form);
            }
        }
        Ok(db)
    }

    fn check_unique_labels(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for l in &self.languages {
            if !seen.insert(l.label.as_str()) {
                return Err(WordlistError::Invalid(format!("duplicate language label {:?}", l.label)));
            }
        }
        let mut seen = BTreeSet::new();
        for it in &self.items {
            if it.item_id.is_empty() {
                return Err(WordlistError::Invalid("empty item_id".into()));
            }
            if !seen.insert(it.item_id.as_str()) {
                return Err(WordlistError::Invalid(format!("duplicate item_id {:?}", it.item_id)));
            }
        }
        Ok(())
    }

    /// Returns false when the normalized form was already present.
    fn insert(&mut self, lang: usize, item: usize, form: WordForm) -> bool {
        let idx = lang * self.items.len() + item;
        let slot = &mut self.slots[idx];
        if slot.iter().any(|f| f.normalized == form.normalized) {
            return false;
        }
        slot.push(form);
        true
    }

    pub fn family_name(&self) -> &str {
        &self.family_name
    }

    pub fn languages(&self) -> &[LanguageRecord] {
        &self.languages
    }

    pub fn items(&self) -> &[ItemRecord] {
        &self.items
    }

    pub fn language_count(&self) -> usize {
        self.languages.len()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn language_index(&self, label: &str) -> Option<usize> {
        self.languages.iter().position(|l| l.label == label)
    }

    pub fn item_index(&self, item_id: &str) -> Option<usize> {
        self.items.iter().position(|i| i.item_id == item_id)
    }

    /// The forms for (language, item), or `None` when the slot is missing.
    pub fn slot(&self, lang: usize, item: usize) -> Option<&[WordForm]> {
        let s = &self.slots[lang * self.items.len() + item];
        if s.is_empty() {
            None
        } else {
            Some(s)
        }
    }

    pub fn has_any_slot(&self, lang: usize) -> bool {
        (0..self.items.len()).any(|i| self.slot(lang, i).is_some())
    }

    /// Indices of the languages carrying `role`, in database order.
    pub fn indices_with_role(&self, role: Role) -> Vec<usize> {
        self.languages
            .iter()
            .enumerate()
            .filter(|(_, l)| l.role == role)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn set_family_name(&mut self, name: impl Into<String>) {
        self.family_name = name.into();
    }

    /// Applies roles, tags and family name from a metadata sidecar.
    pub fn apply_metadata(&mut self, meta: &Metadata) -> Result<()> {
        if let Some(name) = &meta.family_name {
            self.family_name = name.clone();
        }
        for (label, lm) in &meta.languages {
            let idx = self
                .language_index(label)
                .ok_or_else(|| WordlistError::UnknownLanguage(label.clone()))?;
            let rec = &mut self.languages[idx];
            if let Some(role) = lm.role {
                rec.role = role;
            }
            if let Some(tags) = &lm.tags {
                rec.tags = tags.clone();
            }
        }
        Ok(())
    }

    /// Serializes the word rows in `tsv-long-v1`, always with the five-column
    /// header.
    pub fn to_tsv(&self) -> String {
        let mut out = TSV_LONG_V1_HEADER.join("\t");
        out.push('\n');
        for (li, lang) in self.languages.iter().enumerate() {
            for (ii, item) in self.items.iter().enumerate() {
                for form in self.slot(li, ii).unwrap_or(&[]) {
                    let class = form.cognate_class.as_deref().unwrap_or("");
                    out.push_str(&format!(
                        "{}\t{}\t{}\t{}\t{}\n",
                        lang.label, item.item_id, item.gloss, form.raw, class
                    ));
                }
            }
        }
        out
    }

    /// Serializes family name, roles and tags as a metadata sidecar.
    pub fn to_metadata(&self) -> String {
        let mut out = format!("family_name={}\n", self.family_name);
        for lang in &self.languages {
            out.push_str(&format!("language.{}.role={}\n", lang.label, lang.role));
            let tags: Vec<&str> = lang.tags.iter().map(String::as_str).collect();
            out.push_str(&format!("language.{}.tags={}\n", lang.label, tags.join(",")));
        }
        out
    }
}

/// A parsed database together with the non-fatal findings of the parse.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub database: LexicalDatabase,
    pub warnings: Vec<ParseWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    DuplicateForm { line: usize, language: String, item_id: String, form: String },
    GlossMismatch { line: usize, item_id: String, kept: String, found: String },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::DuplicateForm { line, language, item_id, form } => {
                write!(f, "line {line}: duplicate form {form:?} for ({language}, {item_id}) dropped")
            }
            ParseWarning::GlossMismatch { line, item_id, kept, found } => {
                write!(f, "line {line}: gloss {found:?} for {item_id} differs from {kept:?}; keeping the first")
            }
        }
    }
}

/// Parses a wordlist. Languages and items are ordered by first appearance.
pub fn parse_database(source: &str, format: WordlistFormat) -> Result<Parsed> {
    match format {
        WordlistFormat::TsvLongV1 => parse_tsv_long_v1(source),
    }
}

fn parse_tsv_long_v1(source: &str) -> Result<Parsed> {
    let mut lines = source
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());

    let (header_line, header) = lines.next().ok_or(WordlistError::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let columns: Vec<&str> = header.split('\t').collect();
    let expected_4 = &TSV_LONG_V1_HEADER[..4];
    let width = if columns == TSV_LONG_V1_HEADER {
        5
    } else if columns == expected_4 {
        4
    } else {
        return Err(WordlistError::Parse {
            line: header_line,
            message: format!("header must be {:?} (cognate_class optional)", TSV_LONG_V1_HEADER.join("\t")),
        });
    };

    let mut languages: Vec<LanguageRecord> = Vec::new();
    let mut lang_index: HashMap<String, usize> = HashMap::new();
    let mut items: Vec<ItemRecord> = Vec::new();
    let mut item_index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<(usize, usize, usize, WordForm)> = Vec::new();
    let mut warnings = Vec::new();

    for (line, text) in lines {
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != width {
            return Err(WordlistError::Parse {
                line,
                message: format!("expected {width} columns, found {}", fields.len()),
            });
        }
        let language = fields[0].trim();
        let item_id = fields[1].trim();
        let gloss = fields[2].trim();
        if language.is_empty() {
            return Err(WordlistError::Parse { line, message: "empty language field".into() });
        }
        if item_id.is_empty() {
            return Err(WordlistError::Parse { line, message: "empty item_id field".into() });
        }
        let class = fields
            .get(4)
            .map(|c| c.trim())
            .filter(|c| !c.is_empty())
            .map(str::to_string);
        let form = WordForm::new(fields[3], class).map_err(|_| WordlistError::Parse {
            line,
            message: "empty form field".into(),
        })?;

        let li = *lang_index.entry(language.to_string()).or_insert_with(|| {
            languages.push(LanguageRecord::modern(language));
            languages.len() - 1
        });
        let ii = match item_index.get(item_id) {
            Some(&ii) => {
                if items[ii].gloss != gloss {
                    warnings.push(ParseWarning::GlossMismatch {
                        line,
                        item_id: item_id.to_string(),
                        kept: items[ii].gloss.clone(),
                        found: gloss.to_string(),
                    });
                }
                ii
            }
            None => {
                items.push(ItemRecord { item_id: item_id.to_string(), gloss: gloss.to_string() });
                item_index.insert(item_id.to_string(), items.len() - 1);
                items.len() - 1
            }
        };
        rows.push((line, li, ii, form));
    }

    let mut db = LexicalDatabase::from_parts("", languages, items, std::iter::empty())?;
    for (line, li, ii, form) in rows {
        let shown = form.raw.clone();
        if !db.insert(li, ii, form) {
            warnings.push(ParseWarning::DuplicateForm {
                line,
                language: db.languages[li].label.clone(),
                item_id: db.items[ii].item_id.clone(),
                form: shown,
            });
        }
    }
    Ok(Parsed { database: db, warnings })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LanguageMetadata {
    pub role: Option<Role>,
    pub tags: Option<BTreeSet<String>>,
}

/// Contents of a metadata sidecar:
///
/// ```text
/// family_name=romance
/// language.vulgar_latin.role=proto
/// language.romanian.tags=eastern,balkan
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata {
    pub family_name: Option<String>,
    pub languages: Vec<(String, LanguageMetadata)>,
}

impl Metadata {
    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = Metadata::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let (key, value) = l.split_once('=').ok_or_else(|| WordlistError::Metadata {
                line,
                message: "expected key=value".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key == "family_name" {
                meta.family_name = Some(value.to_string());
                continue;
            }
            let rest = key.strip_prefix("language.").ok_or_else(|| WordlistError::Metadata {
                line,
                message: format!("unknown key {key:?}"),
            })?;
            let (label, field) = rest.rsplit_once('.').ok_or_else(|| WordlistError::Metadata {
                line,
                message: format!("expected language.<label>.<field>, got {key:?}"),
            })?;
            let entry = meta.entry(label);
            match field {
                "role" => {
                    let role = value
                        .parse::<Role>()
                        .map_err(|message| WordlistError::Metadata { line, message })?;
                    entry.role = Some(role);
                }
                "tags" => {
                    let tags = value
                        .split(',')
                        .map(str::trim)
                        .filter(|t| !t.is_empty())
                        .map(str::to_string)
                        .collect();
                    entry.tags = Some(tags);
                }
                other => {
                    return Err(WordlistError::Metadata {
                        line,
                        message: format!("unknown language field {other:?}"),
                    })
                }
            }
        }
        Ok(meta)
    }

    fn entry(&mut self, label: &str) -> &mut LanguageMetadata {
        let pos = match self.languages.iter().position(|(l, _)| l == label) {
            Some(p) => p,
            None => {
                self.languages.push((label.to_string(), LanguageMetadata::default()));
                self.languages.len() - 1
            }
        };
        &mut self.languages[pos].1
    }
}

/// Parses a wordlist and applies its metadata sidecar.
pub fn load_database(source: &str, metadata: Option<&str>) -> Result<Parsed> {
    let mut parsed = parse_database(source, WordlistFormat::TsvLongV1)?;
    if let Some(text) = metadata {
        let meta = Metadata::parse(text)?;
        parsed.database.apply_metadata(&meta)?;
    }
    Ok(parsed)
}

/// Item ids present in both databases, in `a`'s order.
pub fn common_items(a: &LexicalDatabase, b: &LexicalDatabase) -> Vec<String> {
    let in_b: BTreeSet<&str> = b.items.iter().map(|i| i.item_id.as_str()).collect();
    a.items
        .iter()
        .filter(|i| in_b.contains(i.item_id.as_str()))
        .map(|i| i.item_id.clone())
        .collect()
}

/// Restricts `db` to the languages accepted by `keep_language` and, when
/// `items` is given, to those item ids. Order and slots are preserved.
pub fn subset<F>(db: &LexicalDatabase, keep_language: F, items: Option<&BTreeSet<String>>) -> Result<LexicalDatabase>
where
    F: Fn(&LanguageRecord) -> bool,
{
    if let Some(ids) = items {
        if let Some(missing) = ids.iter().find(|id| db.item_index(id).is_none()) {
            return Err(WordlistError::UnknownItem(missing.clone()));
        }
    }
    let lang_idx: Vec<usize> = (0..db.languages.len()).filter(|&i| keep_language(&db.languages[i])).collect();
    if lang_idx.is_empty() {
        return Err(WordlistError::EmptySelection);
    }
    let item_idx: Vec<usize> = (0..db.items.len())
        .filter(|&i| items.is_none_or(|ids| ids.contains(&db.items[i].item_id)))
        .collect();

    let languages = lang_idx.iter().map(|&i| db.languages[i].clone()).collect();
    let new_items = item_idx.iter().map(|&i| db.items[i].clone()).collect();
    let mut slots = Vec::with_capacity(lang_idx.len() * item_idx.len());
    for &li in &lang_idx {
        for &ii in &item_idx {
            slots.push(db.slots[li * db.items.len() + ii].clone());
        }
    }
    Ok(LexicalDatabase { family_name: db.family_name.clone(), languages, items: new_items, slots })
}

//! Typed medical entity extraction.
//!
//! Extraction sits behind [`EntityExtractor`]. Two implementations ship:
//! [`LexiconExtractor`], a deterministic dictionary tagger, and
//! [`ExternalExtractor`], which posts paragraph text to an NER service.
//!
//! All offsets are character (Unicode scalar) offsets, not byte offsets.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{DocumentRecord, Paragraph};
use crate::error::{Error, Result};

/// The nine entity classes, in pole order. `code()` is stable.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum EntityType {
    Dis,
    Sym,
    Dru,
    Equ,
    Pro,
    Bod,
    Ite,
    Mic,
    Dep,
}

impl EntityType {
    pub const ALL: [EntityType; 9] = [
        EntityType::Dis,
        EntityType::Sym,
        EntityType::Dru,
        EntityType::Equ,
        EntityType::Pro,
        EntityType::Bod,
        EntityType::Ite,
        EntityType::Mic,
        EntityType::Dep,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Dis => "dis",
            EntityType::Sym => "sym",
            EntityType::Dru => "dru",
            EntityType::Equ => "equ",
            EntityType::Pro => "pro",
            EntityType::Bod => "bod",
            EntityType::Ite => "ite",
            EntityType::Mic => "mic",
            EntityType::Dep => "dep",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EntityType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown entity type {s:?}")))
    }
}

/// Per-type counts, indexed by [`EntityType::code`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "BTreeMap<EntityType, usize>", from = "BTreeMap<EntityType, usize>")]
pub struct TypeCounts(pub [usize; 9]);

impl TypeCounts {
    pub fn get(&self, t: EntityType) -> usize {
        self.0[t.code()]
    }

    pub fn add(&mut self, t: EntityType, n: usize) {
        self.0[t.code()] += n;
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Nonzero entries in pole order.
    pub fn iter(&self) -> impl Iterator<Item = (EntityType, usize)> + '_ {
        EntityType::ALL
            .into_iter()
            .map(|t| (t, self.get(t)))
            .filter(|&(_, n)| n > 0)
    }
}

impl From<TypeCounts> for BTreeMap<EntityType, usize> {
    fn from(c: TypeCounts) -> Self {
        c.iter().collect()
    }
}

impl From<BTreeMap<EntityType, usize>> for TypeCounts {
    fn from(m: BTreeMap<EntityType, usize>) -> Self {
        let mut c = TypeCounts::default();
        for (t, n) in m {
            c.add(t, n);
        }
        c
    }
}

/// Entity identity: normalized surface plus class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entity {
    pub normalized: String,
    #[serde(rename = "type")]
    pub etype: EntityType,
}

impl Entity {
    pub fn new(normalized: impl Into<String>, etype: EntityType) -> Self {
        Entity {
            normalized: normalized.into(),
            etype,
        }
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.normalized, self.etype)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub etype: EntityType,
    pub normalized: String,
}

impl EntityMention {
    pub fn entity(&self) -> Entity {
        Entity::new(self.normalized.clone(), self.etype)
    }
}

/// Deduplicated entities of one paragraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySet {
    pub id: String,
    pub paragraph_id: String,
    pub entities: Vec<Entity>,
    pub counts_by_type: TypeCounts,
    pub total: usize,
}

impl EntitySet {
    pub fn id_for_paragraph(paragraph_id: &str) -> String {
        format!("mes:{paragraph_id}")
    }

    pub fn contains(&self, e: &Entity) -> bool {
        self.entities.iter().any(|x| x == e)
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }
}

fn fold_char(c: char) -> char {
    if c.is_whitespace() {
        return ' ';
    }
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

/// Case-folds and collapses whitespace runs to a single space, trimmed.
pub fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for c in s.chars().map(fold_char) {
        if c == ' ' {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

/// Slices `text` by character offsets.
pub fn slice_chars(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
    let s = indices.nth(start)?;
    let e = if end == start {
        s
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&text[s..e])
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF | 0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF | 0xAC00..=0xD7AF)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() && !is_cjk(c)
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: HashMap<char, usize>,
    etype: Option<EntityType>,
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: BTreeMap<String, EntityType>,
    max_term_length: usize,
    trie: Vec<TrieNode>,
}

impl Lexicon {
    /// Builds a lexicon, rejecting empty terms and conflicting types.
    /// Returns the lexicon and one warning per same-type duplicate.
    pub fn from_entries<I, S>(entries: I) -> Result<(Self, Vec<String>)>
    where
        I: IntoIterator<Item = (S, EntityType)>,
        S: AsRef<str>,
    {
        let mut lex = Lexicon {
            trie: vec![TrieNode::default()],
            ..Default::default()
        };
        let mut warnings = Vec::new();
        for (term, etype) in entries {
            if let Some(w) = lex.insert(term.as_ref(), etype)? {
                warnings.push(w);
            }
        }
        Ok((lex, warnings))
    }

    fn insert(&mut self, term: &str, etype: EntityType) -> Result<Option<String>> {
        let norm = normalize(term);
        if norm.is_empty() {
            return Err(Error::invalid("empty lexicon term"));
        }
        if let Some(&existing) = self.entries.get(&norm) {
            if existing != etype {
                return Err(Error::invalid(format!(
                    "term {norm:?} mapped to both {existing} and {etype}"
                )));
            }
            return Ok(Some(format!("duplicate term {norm:?}")));
        }
        let mut node = 0;
        for c in norm.chars() {
            node = match self.trie[node].children.get(&c) {
                Some(&n) => n,
                None => {
                    self.trie.push(TrieNode::default());
                    let n = self.trie.len() - 1;
                    self.trie[node].children.insert(c, n);
                    n
                }
            };
        }
        self.trie[node].etype = Some(etype);
        self.max_term_length = self.max_term_length.max(norm.chars().count());
        self.entries.insert(norm, etype);
        Ok(None)
    }

    /// Parses the `term<TAB>type` format. `origin` is used in error messages.
    pub fn parse_tsv(content: &str, origin: &Path) -> Result<(Self, Vec<String>)> {
        let mut lex = Lexicon {
            trie: vec![TrieNode::default()],
            ..Default::default()
        };
        let mut warnings = Vec::new();
        for (i, line) in content.lines().enumerate() {
            let line_no = i + 1;
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: line_no,
                message,
            };
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (term, ty) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected term<TAB>type".into()))?;
            let etype: EntityType = ty
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("unknown entity type {:?}", ty.trim())))?;
            match lex.insert(term, etype) {
                Ok(Some(w)) => warnings.push(format!("line {line_no}: {w}")),
                Ok(None) => {}
                Err(Error::InvalidInput(m)) => return Err(parse_err(m)),
                Err(e) => return Err(e),
            }
        }
        Ok((lex, warnings))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_term_length(&self) -> usize {
        self.max_term_length
    }

    pub fn get(&self, term: &str) -> Option<EntityType> {
        self.entries.get(&normalize(term)).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, EntityType)> {
        self.entries.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// The lexicon bundled with the crate.
    pub fn builtin() -> Self {
        Lexicon::parse_tsv(BUILTIN_LEXICON, Path::new("<builtin lexicon>"))
            .expect("bundled lexicon parses")
            .0
    }

    /// All `(start, end, type)` dictionary hits, by character offset.
    fn candidates(&self, chars: &[char]) -> Vec<(usize, usize, EntityType)> {
        let folded: Vec<char> = chars.iter().map(|&c| fold_char(c)).collect();
        let n = chars.len();
        let mut out = Vec::new();
        for start in 0..n {
            if folded[start] == ' ' {
                continue;
            }
            if start > 0 && is_word_char(chars[start - 1]) && is_word_char(chars[start]) {
                continue;
            }
            let mut node = 0;
            let mut j = start;
            while j < n {
                let c = folded[j];
                let next = if c == ' ' {
                    while j < n && folded[j] == ' ' {
                        j += 1;
                    }
                    self.trie[node].children.get(&' ')
                } else {
                    j += 1;
                    self.trie[node].children.get(&c)
                };
                let Some(&nx) = next else { break };
                node = nx;
                if c == ' ' {
                    continue;
                }
                if let Some(t) = self.trie[node].etype {
                    let right_ok = j == n || !(is_word_char(chars[j - 1]) && is_word_char(chars[j]));
                    if right_ok {
                        out.push((start, j, t));
                    }
                }
            }
        }
        out
    }
}

pub fn load_lexicon(path: &Path) -> Result<(Lexicon, Vec<String>)> {
    let content = std::fs::read_to_string(path)?;
    Lexicon::parse_tsv(&content, path)
}

pub const BUILTIN_LEXICON: &str = include_str!("../assets/lexicon.tsv");

pub trait EntityExtractor: Send + Sync {
    fn name(&self) -> &str;

    /// Mentions sorted by start offset.
    fn extract(&self, text: &str) -> Result<Vec<EntityMention>>;
}

/// Dictionary tagger. Overlaps are resolved longest match first, then leftmost.
#[derive(Debug, Clone)]
pub struct LexiconExtractor {
    lexicon: Lexicon,
}

impl LexiconExtractor {
    pub fn new(lexicon: Lexicon) -> Self {
        LexiconExtractor { lexicon }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }
}

impl EntityExtractor for LexiconExtractor {
    fn name(&self) -> &str {
        "lexicon"
    }

    fn extract(&self, text: &str) -> Result<Vec<EntityMention>> {
        let chars: Vec<char> = text.chars().collect();
        let mut cands = self.lexicon.candidates(&chars);
        cands.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)));
        let mut taken = vec![false; chars.len()];
        let mut chosen = Vec::new();
        for (s, e, t) in cands {
            if taken[s..e].iter().any(|&x| x) {
                continue;
            }
            taken[s..e].iter_mut().for_each(|x| *x = true);
            chosen.push((s, e, t));
        }
        chosen.sort_unstable_by_key(|&(s, _, _)| s);
        Ok(chosen
            .into_iter()
            .map(|(s, e, t)| {
                let surface: String = chars[s..e].iter().collect();
                EntityMention {
                    normalized: normalize(&surface),
                    surface,
                    start: s,
                    end: e,
                    etype: t,
                }
            })
            .collect())
    }
}

#[derive(Debug, Serialize)]
struct NerRequest<'a> {
    text: &'a str,
}

#[derive(Debug, Deserialize)]
struct NerSpan {
    start: usize,
    end: usize,
    #[serde(rename = "type")]
    etype: String,
}

/// Client for a user-supplied NER endpoint.
///
/// Request `{"text": ...}`, response `[{"start", "end", "type"}]` with
/// character offsets and `type` one of the nine class tokens.
#[derive(Debug, Clone)]
pub struct ExternalExtractor {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl ExternalExtractor {
    pub fn new(endpoint: impl Into<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(30))
            .build()
            .map_err(|e| Error::Provider(e.to_string()))?;
        Ok(ExternalExtractor {
            endpoint: endpoint.into(),
            client,
        })
    }
}

/// Validates raw spans against `text` and turns them into mentions.
fn spans_to_mentions(text: &str, spans: Vec<NerSpan>) -> Result<Vec<EntityMention>> {
    let len = text.chars().count();
    let mut out = Vec::with_capacity(spans.len());
    for sp in spans {
        let etype: EntityType = sp.etype.parse().map_err(|_| {
            Error::Provider(format!("unknown entity type {:?} in NER response", sp.etype))
        })?;
        if sp.start >= sp.end || sp.end > len {
            return Err(Error::Provider(format!(
                "span {}..{} out of range for text of length {len}",
                sp.start, sp.end
            )));
        }
        let surface = slice_chars(text, sp.start, sp.end)
            .expect("range checked")
            .to_string();
        out.push(EntityMention {
            normalized: normalize(&surface),
            surface,
            start: sp.start,
            end: sp.end,
            etype,
        });
    }
    out.sort_by_key(|m| (m.start, m.end));
    Ok(out)
}

impl EntityExtractor for ExternalExtractor {
    fn name(&self) -> &str {
        "external"
    }

    fn extract(&self, text: &str) -> Result<Vec<EntityMention>> {
        let resp = self
            .client
            .post(&self.endpoint)
            .json(&NerRequest { text })
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| Error::Provider(e.to_string()))?;
        let spans: Vec<NerSpan> = resp.json().map_err(|e| Error::Provider(e.to_string()))?;
        spans_to_mentions(text, spans)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub mentions: Vec<EntityMention>,
    pub error: Option<String>,
}

/// Runs an extractor on one paragraph. Failures are recorded, not propagated.
pub fn extract_entities(text: &str, extractor: &dyn EntityExtractor) -> Extraction {
    if text.is_empty() {
        return Extraction {
            mentions: Vec::new(),
            error: None,
        };
    }
    match extractor.extract(text) {
        Ok(mentions) => Extraction {
            mentions,
            error: None,
        },
        Err(e) => {
            log::warn!("{} extractor failed: {e}", extractor.name());
            Extraction {
                mentions: Vec::new(),
                error: Some(e.to_string()),
            }
        }
    }
}

pub fn build_entity_set(paragraph: &Paragraph, mentions: &[EntityMention]) -> EntitySet {
    let mut seen = HashSet::new();
    let mut entities = Vec::new();
    let mut counts = TypeCounts::default();
    for m in mentions {
        let e = m.entity();
        if seen.insert(e.clone()) {
            counts.add(e.etype, 1);
            entities.push(e);
        }
    }
    EntitySet {
        id: EntitySet::id_for_paragraph(&paragraph.id),
        paragraph_id: paragraph.id.clone(),
        total: entities.len(),
        entities,
        counts_by_type: counts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedParagraph {
    pub id: String,
    pub index: usize,
    pub text: String,
    pub spans: Vec<EntityMention>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub id: String,
    pub title: String,
    pub paragraphs: Vec<AnnotatedParagraph>,
}

impl AnnotatedDocument {
    pub fn span_count(&self) -> usize {
        self.paragraphs.iter().map(|p| p.spans.len()).sum()
    }
}

/// `mentions_of` must return the extraction output for a paragraph id.
pub fn annotate_document<'a, F>(
    doc: &DocumentRecord,
    paragraphs: &[&Paragraph],
    mut mentions_of: F,
) -> AnnotatedDocument
where
    F: FnMut(&str) -> &'a [EntityMention],
{
    AnnotatedDocument {
        id: doc.id.clone(),
        title: doc.title.clone(),
        paragraphs: paragraphs
            .iter()
            .map(|p| AnnotatedParagraph {
                id: p.id.clone(),
                index: p.index,
                text: p.text.clone(),
                spans: mentions_of(&p.id).to_vec(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(entries: &[(&str, EntityType)]) -> LexiconExtractor {
        LexiconExtractor::new(Lexicon::from_entries(entries.iter().copied()).unwrap().0)
    }

    fn para(id: &str) -> Paragraph {
        Paragraph {
            id: id.into(),
            document_id: "d".into(),
            index: 0,
            text: "x".into(),
            entity_set_id: None,
        }
    }

    fn mention(norm: &str, t: EntityType) -> EntityMention {
        EntityMention {
            surface: norm.into(),
            start: 0,
            end: norm.chars().count(),
            etype: t,
            normalized: norm.into(),
        }
    }

    #[test]
    fn nine_types_with_stable_codes() {
        assert_eq!(EntityType::ALL.len(), 9);
        for (i, t) in EntityType::ALL.iter().enumerate() {
            assert_eq!(t.code(), i);
            assert_eq!(EntityType::from_code(i), Some(*t));
            assert_eq!(t.as_str().parse::<EntityType>().unwrap(), *t);
        }
    }

    #[test]
    fn dictionary_match_is_case_insensitive() {
        let ex = lex(&[("osteonecrosis", EntityType::Dis), ("ct", EntityType::Ite)]);
        let m = ex.extract("CT confirmed osteonecrosis").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].surface.as_str(), m[0].etype), ("CT", EntityType::Ite));
        assert_eq!(m[0].normalized, "ct");
        assert_eq!(
            (m[1].surface.as_str(), m[1].etype),
            ("osteonecrosis", EntityType::Dis)
        );
        assert_eq!((m[1].start, m[1].end), (13, 26));
    }

    #[test]
    fn longest_match_wins() {
        let ex = lex(&[("bone", EntityType::Bod), ("bone exposure", EntityType::Sym)]);
        let m = ex.extract("bone exposure noted").unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface, "bone exposure");
        assert_eq!(m[0].etype, EntityType::Sym);
    }

    #[test]
    fn longer_later_match_beats_shorter_earlier_overlap() {
        // "jaw pain" (8) overlaps "pain relief medication" (22): the longer wins.
        let ex = lex(&[
            ("jaw pain", EntityType::Sym),
            ("pain relief medication", EntityType::Dru),
        ]);
        let m = ex.extract("jaw pain relief medication").unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].etype, EntityType::Dru);
    }

    #[test]
    fn equal_length_overlap_prefers_leftmost() {
        let ex = lex(&[("ab c", EntityType::Sym), ("c de", EntityType::Dis)]);
        let m = ex.extract("ab c de").unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface, "ab c");
    }

    #[test]
    fn no_terms_no_mentions() {
        let ex = lex(&[("pus", EntityType::Sym)]);
        assert!(ex.extract("nothing relevant here").unwrap().is_empty());
    }

    #[test]
    fn respects_word_boundaries_but_not_for_cjk() {
        let ex = lex(&[("ct", EntityType::Ite), ("骨坏死", EntityType::Dis)]);
        assert!(ex.extract("the fact is").unwrap().is_empty());
        let m = ex.extract("颌骨坏死").unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].start, m[0].end), (1, 4));
    }

    #[test]
    fn whitespace_runs_match_single_space_terms() {
        let ex = lex(&[("bone exposure", EntityType::Sym)]);
        let text = "Bone \n  Exposure";
        let m = ex.extract(text).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].normalized, "bone exposure");
        assert_eq!(slice_chars(text, m[0].start, m[0].end).unwrap(), m[0].surface);
    }

    #[test]
    fn entity_set_deduplicates() {
        let ms = vec![
            mention("bone", EntityType::Bod),
            mention("bone", EntityType::Bod),
            mention("pus", EntityType::Sym),
        ];
        let s = build_entity_set(&para("p"), &ms);
        assert_eq!(s.entities.len(), 2);
        assert_eq!(s.counts_by_type.get(EntityType::Bod), 1);
        assert_eq!(s.counts_by_type.get(EntityType::Sym), 1);
        assert_eq!(s.total, 2);
    }

    #[test]
    fn entity_set_empty_and_full() {
        let s = build_entity_set(&para("p"), &[]);
        assert_eq!(s.total, 0);
        assert!(s.is_empty());

        let ms: Vec<_> = EntityType::ALL
            .iter()
            .map(|&t| mention(&format!("e{}", t.code()), t))
            .collect();
        let s = build_entity_set(&para("p"), &ms);
        assert_eq!(s.total, 9);
        assert!(EntityType::ALL.iter().all(|&t| s.counts_by_type.get(t) == 1));
    }

    #[test]
    fn lexicon_tsv_loading() {
        let p = Path::new("test.tsv");
        let (l, w) = Lexicon::parse_tsv("bone\tbod\npus\tsym\nct\tite\n", p).unwrap();
        assert_eq!(l.len(), 3);
        assert!(w.is_empty());

        let (l, w) = Lexicon::parse_tsv("bone\tbod\nBone\tbod\n", p).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(w.len(), 1);

        let err = Lexicon::parse_tsv("bone\tbod\nfoo\txyz\n", p).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("unknown entity type"));
            }
            e => panic!("unexpected {e}"),
        }

        let err = Lexicon::parse_tsv("bone\tbod\nbone\tsym\n", p).unwrap_err();
        assert!(err.to_string().contains("bone"));
    }

    #[test]
    fn builtin_lexicon_loads() {
        let l = Lexicon::builtin();
        assert!(l.len() > 50);
        for t in EntityType::ALL {
            assert!(l.entries().any(|(_, et)| et == t), "no {t} terms");
        }
    }

    #[test]
    fn external_spans_are_validated() {
        let text = "CT showed necrosis";
        let spans = vec![NerSpan {
            start: 0,
            end: 2,
            etype: "ite".into(),
        }];
        let m = spans_to_mentions(text, spans).unwrap();
        assert_eq!(m[0].surface, "CT");

        let bad_type = vec![NerSpan {
            start: 0,
            end: 2,
            etype: "foo".into(),
        }];
        assert!(spans_to_mentions(text, bad_type).is_err());

        let bad_range = vec![NerSpan {
            start: 10,
            end: 99,
            etype: "dis".into(),
        }];
        assert!(spans_to_mentions(text, bad_range).is_err());
    }

    struct Failing;

    impl EntityExtractor for Failing {
        fn name(&self) -> &str {
            "failing"
        }
        fn extract(&self, _: &str) -> Result<Vec<EntityMention>> {
            Err(Error::Provider("boom".into()))
        }
    }

    #[test]
    fn extractor_failure_is_recorded() {
        let out = extract_entities("some text", &Failing);
        assert!(out.mentions.is_empty());
        assert!(out.error.unwrap().contains("boom"));
    }

    #[test]
    fn slice_chars_handles_multibyte() {
        assert_eq!(slice_chars("a骨b", 1, 2), Some("骨"));
        assert_eq!(slice_chars("abc", 3, 3), Some(""));
        assert_eq!(slice_chars("abc", 2, 4), None);
    }
}

//! Human-defined concept schemes.
//!
//! A scheme is either contextual (each occurrence carries its own label, as
//! with POS or CCG tags produced by a tagger) or type-level (labels attach to
//! word types, as with lexicons and surface-form properties).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, OccurrenceKey, WordId, WordOccurrence};
use crate::error::{Error, Result};

const DEFAULT_SUFFIXES: &str = include_str!("../data/suffixes.txt");
const POS_COARSE: &str = include_str!("../data/pos_coarse.tsv");
const SEM_COARSE: &str = include_str!("../data/sem_coarse.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Contextual,
    TypeLevel,
}

/// A `(scheme, label)` pair, displayed as `scheme:label`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LabelRef {
    pub scheme: String,
    pub label: String,
}

impl LabelRef {
    pub fn new(scheme: impl Into<String>, label: impl Into<String>) -> Self {
        LabelRef {
            scheme: scheme.into(),
            label: label.into(),
        }
    }
}

impl fmt::Display for LabelRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.scheme, self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Members {
    Occurrences(BTreeSet<WordOccurrence>),
    Words(BTreeSet<WordId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptClass {
    pub scheme: String,
    pub label: String,
    pub members: Members,
}

impl ConceptClass {
    pub fn label_ref(&self) -> LabelRef {
        LabelRef::new(&self.scheme, &self.label)
    }

    pub fn contains(&self, occ: &WordOccurrence) -> bool {
        match &self.members {
            Members::Occurrences(set) => set.contains(occ),
            Members::Words(set) => set.contains(&occ.word_id),
        }
    }

    pub fn contains_word(&self, word: WordId) -> bool {
        match &self.members {
            Members::Occurrences(set) => set.iter().any(|o| o.word_id == word),
            Members::Words(set) => set.contains(&word),
        }
    }

    /// Unique word types in the class (the size `J` of its reverse image).
    pub fn word_types(&self) -> BTreeSet<WordId> {
        match &self.members {
            Members::Occurrences(set) => set.iter().map(|o| o.word_id).collect(),
            Members::Words(set) => set.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match &self.members {
            Members::Occurrences(set) => set.len(),
            Members::Words(set) => set.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptScheme {
    pub name: String,
    pub kind: SchemeKind,
    classes: BTreeMap<String, ConceptClass>,
}

impl ConceptScheme {
    pub fn new(name: impl Into<String>, kind: SchemeKind) -> Self {
        ConceptScheme {
            name: name.into(),
            kind,
            classes: BTreeMap::new(),
        }
    }

    fn class_mut(&mut self, label: &str) -> &mut ConceptClass {
        let (scheme, kind) = (&self.name, self.kind);
        self.classes
            .entry(label.to_owned())
            .or_insert_with(|| ConceptClass {
                scheme: scheme.clone(),
                label: label.to_owned(),
                members: match kind {
                    SchemeKind::Contextual => Members::Occurrences(BTreeSet::new()),
                    SchemeKind::TypeLevel => Members::Words(BTreeSet::new()),
                },
            })
    }

    /// Adds an occurrence to a contextual class.
    pub fn add_occurrence(&mut self, label: &str, occ: WordOccurrence) {
        assert_eq!(
            self.kind,
            SchemeKind::Contextual,
            "scheme {} is type-level",
            self.name
        );
        if let Members::Occurrences(set) = &mut self.class_mut(label).members {
            set.insert(occ);
        }
    }

    /// Adds a word type to a type-level class.
    pub fn add_word(&mut self, label: &str, word: WordId) {
        assert_eq!(
            self.kind,
            SchemeKind::TypeLevel,
            "scheme {} is contextual",
            self.name
        );
        if let Members::Words(set) = &mut self.class_mut(label).members {
            set.insert(word);
        }
    }

    pub fn classes(&self) -> impl Iterator<Item = &ConceptClass> {
        self.classes.values()
    }

    pub fn class(&self, label: &str) -> Option<&ConceptClass> {
        self.classes.get(label)
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Labels whose class contains `occ`, in label order.
    pub fn labels_of(&self, occ: &WordOccurrence) -> Vec<&str> {
        self.classes
            .values()
            .filter(|c| c.contains(occ))
            .map(|c| c.label.as_str())
            .collect()
    }

    /// Total number of memberships over all classes.
    pub fn membership_count(&self) -> usize {
        self.classes.values().map(ConceptClass::len).sum()
    }

    fn retain_classes(&mut self, mut keep: impl FnMut(&ConceptClass) -> bool) {
        self.classes.retain(|_, c| keep(c));
    }
}

/// Distinct word types referenced by `occurrences`, in id order.
fn word_types(occurrences: &[WordOccurrence]) -> BTreeSet<WordId> {
    occurrences.iter().map(|o| o.word_id).collect()
}

fn surface(corpus: &Corpus, word: WordId) -> &str {
    corpus.word(word).unwrap_or_default()
}

/// Casing class of a surface form: `title`, `upper`, `lower`, `mixed` or `other`.
///
/// Only characters that have case count as letters.
pub fn casing_class(word: &str) -> &'static str {
    let cased = |c: &char| c.is_uppercase() || c.is_lowercase();
    let has_upper = word.chars().any(char::is_uppercase);
    let has_lower = word.chars().any(char::is_lowercase);
    if !word.chars().any(|c| cased(&c)) {
        return "other";
    }
    let mut chars = word.chars();
    let first = chars.next().unwrap();
    if first.is_uppercase() && chars.all(|c| !c.is_uppercase()) {
        return "title";
    }
    if has_upper && !has_lower && word.chars().count() >= 2 {
        return "upper";
    }
    if has_lower && !has_upper {
        return "lower";
    }
    "mixed"
}

pub fn annotate_casing(occurrences: &[WordOccurrence], corpus: &Corpus) -> ConceptScheme {
    let mut scheme = ConceptScheme::new("casing", SchemeKind::TypeLevel);
    for w in word_types(occurrences) {
        scheme.add_word(casing_class(surface(corpus, w)), w);
    }
    scheme
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AffixPosition {
    Prefix,
    Suffix,
}

/// The shipped list of common English suffixes.
pub fn default_suffixes() -> Vec<String> {
    parse_affix_list(DEFAULT_SUFFIXES)
}

/// Reads an affix lexicon: one entry per line, blank lines ignored.
pub fn load_affix_lexicon(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_affix_list(&text))
}

fn parse_affix_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Type-level affix scheme. A word joins class `s` when its lowercased form
/// starts (prefix) or ends (suffix) with `s` and is strictly longer than `s`.
pub fn annotate_affix(
    occurrences: &[WordOccurrence],
    corpus: &Corpus,
    lexicon: &[String],
    position: AffixPosition,
    scheme_name: &str,
) -> Result<ConceptScheme> {
    if lexicon.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "{scheme_name} lexicon is empty"
        )));
    }
    let mut scheme = ConceptScheme::new(scheme_name, SchemeKind::TypeLevel);
    for w in word_types(occurrences) {
        let lower = surface(corpus, w).to_lowercase();
        let len = lower.chars().count();
        for affix in lexicon {
            let hit = match position {
                AffixPosition::Suffix => lower.ends_with(affix.as_str()),
                AffixPosition::Prefix => lower.starts_with(affix.as_str()),
            };
            if hit && len > affix.chars().count() {
                scheme.add_word(affix, w);
            }
        }
    }
    Ok(scheme)
}

pub fn annotate_suffix(
    occurrences: &[WordOccurrence],
    corpus: &Corpus,
    lexicon: &[String],
) -> Result<ConceptScheme> {
    annotate_affix(
        occurrences,
        corpus,
        lexicon,
        AffixPosition::Suffix,
        "suffix",
    )
}

/// Character n-gram scheme over lowercased word types.
///
/// Every n-gram (n in `n_range`) of a word's lowercased form is a candidate
/// class; classes with fewer than `min_members` word types are dropped.
pub fn annotate_ngram(
    occurrences: &[WordOccurrence],
    corpus: &Corpus,
    n_range: RangeInclusive<usize>,
    min_members: usize,
) -> Result<ConceptScheme> {
    if min_members < 2 {
        return Err(Error::InvalidConfig(
            "ngram min_members must be at least 2".into(),
        ));
    }
    if *n_range.start() == 0 {
        return Err(Error::InvalidConfig("ngram lengths start at 1".into()));
    }
    let mut scheme = ConceptScheme::new("ngram", SchemeKind::TypeLevel);
    for w in word_types(occurrences) {
        let chars: Vec<char> = surface(corpus, w).to_lowercase().chars().collect();
        for n in n_range.clone() {
            if n > chars.len() {
                break;
            }
            for gram in chars.windows(n) {
                let gram: String = gram.iter().collect();
                scheme.add_word(&gram, w);
            }
        }
    }
    scheme.retain_classes(|c| c.len() >= min_members);
    Ok(scheme)
}

/// Contextual `first_word` and `last_word` schemes, one class each.
pub fn annotate_position(
    occurrences: &[WordOccurrence],
    corpus: &Corpus,
) -> (ConceptScheme, ConceptScheme) {
    let mut first = ConceptScheme::new("first_word", SchemeKind::Contextual);
    let mut last = ConceptScheme::new("last_word", SchemeKind::Contextual);
    for occ in occurrences {
        if occ.position == 0 {
            first.add_occurrence("first", *occ);
        }
        if let Some(len) = corpus.sentence_len(occ.sentence_id) {
            if occ.position as usize + 1 == len {
                last.add_occurrence("last", *occ);
            }
        }
    }
    (first, last)
}

fn header_check(path: &Path, first: Option<&str>, expected: &str) -> Result<()> {
    match first {
        Some(h) if h.trim_end_matches('\r') == expected => Ok(()),
        Some(h) => Err(Error::parse(
            path,
            1,
            format!("expected header {expected:?}, found {h:?}"),
        )),
        None => Err(Error::parse(
            path,
            1,
            format!("missing header {expected:?}"),
        )),
    }
}

fn parse_id(path: &Path, line: usize, field: &str, value: &str) -> Result<u32> {
    value.parse().map_err(|_| {
        Error::parse(
            path,
            line,
            format!("{field} {value:?} is not a non-negative integer"),
        )
    })
}

/// Loads externally produced token labels (TSV `sentence_id\tposition\tword\tlabel`).
///
/// Labels are functional: one label per occurrence. Every row must point at
/// an existing corpus slot holding the same word.
pub fn load_token_annotations(
    path: impl AsRef<Path>,
    scheme_name: &str,
    corpus: &Corpus,
) -> Result<ConceptScheme> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    header_check(path, lines.next(), "sentence_id\tposition\tword\tlabel")?;

    let mut seen: HashMap<OccurrenceKey, String> = HashMap::new();
    let mut scheme = ConceptScheme::new(scheme_name, SchemeKind::Contextual);
    for (i, raw) in lines.enumerate() {
        let line = i + 2;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(
                path,
                line,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        }
        let key = OccurrenceKey {
            sentence_id: parse_id(path, line, "sentence_id", cols[0])?,
            position: parse_id(path, line, "position", cols[1])?,
        };
        let (word, label) = (cols[2], cols[3]);
        if label.is_empty() {
            return Err(Error::parse(path, line, "empty label"));
        }
        let occ = corpus
            .occurrence(key)
            .ok_or_else(|| Error::UnknownOccurrence {
                path: path.to_path_buf(),
                line,
                sentence_id: key.sentence_id,
                position: key.position,
            })?;
        let expected = surface(corpus, occ.word_id);
        if expected != word {
            return Err(Error::WordMismatch {
                path: path.to_path_buf(),
                line,
                expected: expected.to_owned(),
                found: word.to_owned(),
            });
        }
        match seen.get(&key) {
            Some(existing) if existing != label => {
                return Err(Error::ConflictingLabel {
                    path: path.to_path_buf(),
                    line,
                    sentence_id: key.sentence_id,
                    position: key.position,
                    existing: existing.clone(),
                    label: label.to_owned(),
                })
            }
            Some(_) => continue,
            None => {
                seen.insert(key, label.to_owned());
            }
        }
        scheme.add_occurrence(label, occ);
    }
    Ok(scheme)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconLoad {
    pub scheme: ConceptScheme,
    /// Rows whose word is not in the corpus vocabulary.
    pub skipped: usize,
}

/// Loads a type-level lexicon (TSV `label\tword`). A word may carry several labels.
pub fn load_type_lexicon(
    path: impl AsRef<Path>,
    scheme_name: &str,
    corpus: &Corpus,
) -> Result<LexiconLoad> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    header_check(path, lines.next(), "label\tword")?;

    let mut scheme = ConceptScheme::new(scheme_name, SchemeKind::TypeLevel);
    let mut skipped = 0;
    for (i, raw) in lines.enumerate() {
        let line = i + 2;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 2 || cols[0].is_empty() || cols[1].is_empty() {
            return Err(Error::parse(
                path,
                line,
                "expected 2 non-empty columns: label, word",
            ));
        }
        match corpus.word_id(cols[1]) {
            Some(w) => scheme.add_word(cols[0], w),
            None => skipped += 1,
        }
    }
    Ok(LexiconLoad { scheme, skipped })
}

/// Fine-to-coarse label table for one scheme. Unlisted labels map to themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseMapping {
    pub scheme: String,
    table: BTreeMap<String, String>,
}

impl CoarseMapping {
    pub fn new(scheme: impl Into<String>, table: BTreeMap<String, String>) -> Self {
        CoarseMapping {
            scheme: scheme.into(),
            table,
        }
    }

    /// Shipped Penn Treebank POS mapping.
    pub fn pos() -> Self {
        Self::parse("POS", POS_COARSE, Path::new("<builtin pos_coarse.tsv>"))
            .expect("builtin table")
    }

    /// Shipped semantic tag mapping.
    pub fn sem() -> Self {
        Self::parse("SEM", SEM_COARSE, Path::new("<builtin sem_coarse.tsv>"))
            .expect("builtin table")
    }

    /// Loads a TSV with header `fine\tcoarse`.
    pub fn load(path: impl AsRef<Path>, scheme: &str) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(scheme, &text, path)
    }

    fn parse(scheme: &str, text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines();
        header_check(path, lines.next(), "fine\tcoarse")?;
        let mut table = BTreeMap::new();
        for (i, raw) in lines.enumerate() {
            let raw = raw.trim_end_matches('\r');
            if raw.is_empty() {
                continue;
            }
            match raw.split('\t').collect::<Vec<_>>()[..] {
                [fine, coarse] if !fine.is_empty() && !coarse.is_empty() => {
                    if let Some(prev) = table.insert(fine.to_owned(), coarse.to_owned()) {
                        if prev != coarse {
                            return Err(Error::parse(
                                path,
                                i + 2,
                                format!("{fine:?} mapped twice"),
                            ));
                        }
                    }
                }
                _ => {
                    return Err(Error::parse(
                        path,
                        i + 2,
                        "expected 2 non-empty columns: fine, coarse",
                    ))
                }
            }
        }
        Ok(CoarseMapping::new(scheme, table))
    }

    pub fn map<'a>(&'a self, fine: &'a str) -> &'a str {
        self.table.get(fine).map_or(fine, String::as_str)
    }
}

/// Name given to the coarsened version of a scheme.
pub fn coarse_scheme_name(fine: &str) -> String {
    format!("{fine}_coarse")
}

/// Merges fine classes into their coarse targets. The result is named
/// `<scheme>_coarse` so both granularities can be aligned side by side.
pub fn coarsen(scheme: &ConceptScheme, mapping: &CoarseMapping) -> Result<ConceptScheme> {
    if mapping.scheme != scheme.name {
        return Err(Error::InvalidConfig(format!(
            "mapping for {} applied to scheme {}",
            mapping.scheme, scheme.name
        )));
    }
    let mut out = ConceptScheme::new(coarse_scheme_name(&scheme.name), scheme.kind);
    for class in scheme.classes() {
        let coarse = mapping.map(&class.label);
        match &class.members {
            Members::Occurrences(set) => set.iter().for_each(|o| out.add_occurrence(coarse, *o)),
            Members::Words(set) => set.iter().for_each(|w| out.add_word(coarse, *w)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn occ_all(c: &Corpus) -> Vec<WordOccurrence> {
        c.occurrences().collect()
    }

    fn label_set(scheme: &ConceptScheme, corpus: &Corpus, word: &str) -> Vec<String> {
        let w = corpus.word_id(word).unwrap();
        scheme
            .classes()
            .filter(|c| c.contains_word(w))
            .map(|c| c.label.clone())
            .collect()
    }

    #[test]
    fn casing_examples() {
        assert_eq!(casing_class("Paris"), "title");
        assert_eq!(casing_class("NATO"), "upper");
        assert_eq!(casing_class("iOS"), "mixed");
        assert_eq!(casing_class("sea"), "lower");
        assert_eq!(casing_class("1984"), "other");
        assert_eq!(casing_class("A"), "title");
        assert_eq!(casing_class("U.S."), "upper");
        assert_eq!(casing_class("McDonald"), "mixed");
        assert_eq!(casing_class("Über-cool"), "title");
    }

    #[test]
    fn casing_scheme_is_type_level() {
        let c = Corpus::from_lines(["Paris NATO iOS sea , Paris"]);
        let s = annotate_casing(&occ_all(&c), &c);
        assert_eq!(s.kind, SchemeKind::TypeLevel);
        assert_eq!(label_set(&s, &c, "Paris"), ["title"]);
        assert_eq!(label_set(&s, &c, ","), ["other"]);
        assert_eq!(s.class("title").unwrap().len(), 1);
    }

    #[test]
    fn suffix_membership() {
        let c = Corpus::from_lines(["bigger er cities"]);
        let occ = occ_all(&c);
        let s = annotate_suffix(&occ, &c, &["er".into(), "est".into()]).unwrap();
        assert_eq!(label_set(&s, &c, "bigger"), ["er"]);
        assert!(label_set(&s, &c, "er").is_empty());
        let s = annotate_suffix(&occ, &c, &["es".into(), "ies".into()]).unwrap();
        assert_eq!(label_set(&s, &c, "cities"), ["es", "ies"]);
    }

    #[test]
    fn suffix_requires_lexicon() {
        let c = Corpus::from_lines(["a"]);
        assert!(matches!(
            annotate_suffix(&occ_all(&c), &c, &[]),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn prefix_lexicon_through_affix_annotator() {
        let c = Corpus::from_lines(["unhappy un undo"]);
        let s = annotate_affix(
            &occ_all(&c),
            &c,
            &["un".into()],
            AffixPosition::Prefix,
            "prefix",
        )
        .unwrap();
        assert_eq!(s.class("un").unwrap().len(), 2);
    }

    #[test]
    fn default_suffixes_load() {
        let list = default_suffixes();
        assert!(list.len() >= 50);
        assert!(list.contains(&"er".to_string()) && list.contains(&"ness".to_string()));
    }

    #[test]
    fn ngram_shared_chunk() {
        let c = Corpus::from_lines(["ace face place a"]);
        let s = annotate_ngram(&occ_all(&c), &c, 3..=3, 2).unwrap();
        assert_eq!(s.class("ace").unwrap().len(), 3);
        assert!(label_set(&s, &c, "a").is_empty());
    }

    #[test]
    fn ngram_min_members_drops_small_classes() {
        let c = Corpus::from_lines(["ace face place lacy"]);
        let s = annotate_ngram(&occ_all(&c), &c, 2..=4, 3).unwrap();
        assert!(s.class("ace").is_some());
        // "lac" only in place and lacy
        assert!(s.class("lac").is_none());
        assert!(matches!(
            annotate_ngram(&occ_all(&c), &c, 2..=4, 1),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn position_schemes() {
        let c = Corpus::from_lines(["solo", "a b c"]);
        let occ = occ_all(&c);
        let (first, last) = annotate_position(&occ, &c);
        let solo = occ[0];
        assert!(first.class("first").unwrap().contains(&solo));
        assert!(last.class("last").unwrap().contains(&solo));
        let mid = occ[2];
        assert!(first.labels_of(&mid).is_empty() && last.labels_of(&mid).is_empty());
        assert_eq!(first.class("first").unwrap().len(), 2);
        assert_eq!(last.class("last").unwrap().len(), 2);
    }

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        fs::File::create(&path)
            .unwrap()
            .write_all(text.as_bytes())
            .unwrap();
        path
    }

    #[test]
    fn token_annotations_join_classes() {
        let c = Corpus::from_lines(["the deep sea"]);
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "pos.tsv",
            "sentence_id\tposition\tword\tlabel\n0\t2\tsea\tNN\n0\t0\tthe\tDT\n",
        );
        let s = load_token_annotations(&p, "POS", &c).unwrap();
        assert_eq!(s.kind, SchemeKind::Contextual);
        let sea = c
            .occurrence(OccurrenceKey {
                sentence_id: 0,
                position: 2,
            })
            .unwrap();
        assert_eq!(s.labels_of(&sea), ["NN"]);
    }

    #[test]
    fn token_annotation_errors() {
        let c = Corpus::from_lines(["the deep sea"]);
        let dir = tempfile::tempdir().unwrap();
        let h = "sentence_id\tposition\tword\tlabel\n";
        let cases = [
            (format!("{h}0\t2\tocean\tNN\n"), "mismatch"),
            (format!("{h}0\t2\tsea\tNN\n0\t2\tsea\tVB\n"), "conflict"),
            (format!("{h}0\t9\tsea\tNN\n"), "unknown"),
            (format!("{h}0\tx\tsea\tNN\n"), "parse"),
            (format!("{h}0\t2\tsea\n"), "parse"),
            ("sid\tpos\tword\tlabel\n".to_string(), "parse"),
        ];
        for (text, kind) in cases {
            let p = write(&dir, "bad.tsv", &text);
            let err = load_token_annotations(&p, "POS", &c).unwrap_err();
            let ok = match kind {
                "mismatch" => matches!(err, Error::WordMismatch { line: 2, .. }),
                "conflict" => matches!(err, Error::ConflictingLabel { line: 3, .. }),
                "unknown" => matches!(err, Error::UnknownOccurrence { line: 2, .. }),
                _ => matches!(err, Error::Parse { .. }),
            };
            assert!(ok, "{kind}: {err:?}");
        }
        // identical duplicate rows are harmless
        let p = write(
            &dir,
            "dup.tsv",
            &format!("{h}0\t2\tsea\tNN\n0\t2\tsea\tNN\n"),
        );
        assert_eq!(
            load_token_annotations(&p, "POS", &c)
                .unwrap()
                .membership_count(),
            1
        );
    }

    #[test]
    fn type_lexicon_multi_label_and_skips() {
        let c = Corpus::from_lines(["the bishop of the parish"]);
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "liwc.tsv",
            "label\tword\nreligion\tbishop\nreligion\tparish\nreligion\tpope\nsocial\tbishop\n",
        );
        let load = load_type_lexicon(&p, "LIWC", &c).unwrap();
        assert_eq!(load.skipped, 1);
        let religion = load.scheme.class("religion").unwrap();
        assert!(religion.contains_word(c.word_id("bishop").unwrap()));
        assert!(religion.contains_word(c.word_id("parish").unwrap()));
        assert_eq!(
            label_set(&load.scheme, &c, "bishop"),
            ["religion", "social"]
        );
        let bad = write(&dir, "bad.tsv", "label\tword\nreligion\n");
        assert!(matches!(
            load_type_lexicon(&bad, "LIWC", &c),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn shipped_mappings_match_tables() {
        let pos = CoarseMapping::pos();
        assert_eq!(pos.map("JJR"), "Adjective");
        assert_eq!(pos.map("NNS"), "Noun");
        assert_eq!(pos.map("PRP$"), "Pronoun");
        assert_eq!(pos.map("MD"), "MD");
        assert_eq!(pos.map("NOT-A-TAG"), "NOT-A-TAG");
        let sem = CoarseMapping::sem();
        assert_eq!(sem.map("GPE"), "NAM");
        assert_eq!(sem.map("EPS"), "TNS");
        assert_eq!(sem.map("POS"), "MOD");
    }

    #[test]
    fn coarsen_unions_fine_classes() {
        let c = Corpus::from_lines(["big bigger biggest can"]);
        let mut s = ConceptScheme::new("POS", SchemeKind::Contextual);
        let occ = occ_all(&c);
        for (o, tag) in occ.iter().zip(["JJ", "JJR", "JJS", "MD"]) {
            s.add_occurrence(tag, *o);
        }
        let coarse = coarsen(&s, &CoarseMapping::pos()).unwrap();
        assert_eq!(coarse.name, "POS_coarse");
        assert_eq!(coarse.class("Adjective").unwrap().len(), 3);
        assert_eq!(coarse.class("MD").unwrap().len(), 1);
        assert_eq!(coarse.membership_count(), s.membership_count());
        assert!(coarsen(&s, &CoarseMapping::sem()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn corpus() -> impl Strategy<Value = Corpus> {
            prop::collection::vec(prop::collection::vec("[a-eA-C]{1,7}", 1..6), 1..8).prop_map(
                |lines| {
                    let text: Vec<String> = lines.iter().map(|l| l.join(" ")).collect();
                    Corpus::from_lines(text.iter().map(String::as_str))
                },
            )
        }

        proptest! {
            #[test]
            fn suffix_members_are_ngram_members(c in corpus()) {
                let occ: Vec<_> = c.occurrences().collect();
                let lexicon: Vec<String> = ["ab", "ce", "bad", "aaa", "de"].iter().map(|s| s.to_string()).collect();
                let suffix = annotate_suffix(&occ, &c, &lexicon).unwrap();
                let ngram = annotate_ngram(&occ, &c, 2..=4, 2).unwrap();
                for class in suffix.classes() {
                    if class.len() >= 2 {
                        let ng = ngram.class(&class.label).expect("ngram class survives");
                        for w in class.word_types() {
                            prop_assert!(ng.contains_word(w));
                        }
                    }
                }
            }

            #[test]
            fn reverse_image_agrees_with_labels(c in corpus()) {
                let occ: Vec<_> = c.occurrences().collect();
                let schemes = [
                    annotate_casing(&occ, &c),
                    annotate_ngram(&occ, &c, 2..=3, 2).unwrap(),
                    annotate_position(&occ, &c).0,
                ];
                for s in &schemes {
                    for o in &occ {
                        let labels = s.labels_of(o);
                        for class in s.classes() {
                            prop_assert_eq!(class.contains(o), labels.contains(&class.label.as_str()));
                            prop_assert!(!class.is_empty());
                        }
                    }
                }
                prop_assert_eq!(annotate_casing(&occ, &c), schemes[0].clone());
            }

            #[test]
            fn coarsen_preserves_membership(tags in prop::collection::vec(prop::sample::select(vec!["JJ", "JJR", "NN", "NNS", "MD", "VB", "VBD", "XX"]), 1..40)) {
                let line: Vec<String> = (0..tags.len()).map(|i| format!("w{i}")).collect();
                let c = Corpus::from_lines([line.join(" ").as_str()]);
                let mut s = ConceptScheme::new("POS", SchemeKind::Contextual);
                for (o, t) in c.occurrences().zip(&tags) {
                    s.add_occurrence(t, o);
                }
                let coarse = coarsen(&s, &CoarseMapping::pos()).unwrap();
                prop_assert_eq!(coarse.membership_count(), s.membership_count());
                let pos = CoarseMapping::pos();
                for class in s.classes() {
                    let target = coarse.class(pos.map(&class.label)).unwrap();
                    if let Members::Occurrences(set) = &class.members {
                        for o in set {
                            prop_assert!(target.contains(o));
                        }
                    }
                }
            }
        }
    }
}

//! Word similarity and language-pair overlaps.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::wordlist::{LexicalDatabase, WordForm};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("normalized distance is undefined for two empty words")]
    UndefinedDistance,
    #[error("cannot score a missing slot")]
    MissingSlot,
    #[error("binary cognacy scoring needs a cognate class on every form; {0:?} has none")]
    MissingCognateClass(String),
    #[error("languages {0:?} and {1:?} share no comparable items")]
    NoComparableItems(String, String),
    #[error("an overlap matrix needs at least 2 languages, found {0}")]
    TooFewLanguages(usize),
    #[error("language index {0} out of range")]
    LanguageIndex(usize),
}

pub type Result<T> = std::result::Result<T, MetricError>;

/// How two word-form slots are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimilarityScorer {
    /// `1 - NLD`, maximized over synonym pairs.
    #[default]
    Nld,
    /// 1 when any cross pair shares a cognate class, else 0.
    BinaryCognacy,
}

impl fmt::Display for SimilarityScorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimilarityScorer::Nld => "nld",
            SimilarityScorer::BinaryCognacy => "binary-cognacy",
        })
    }
}

impl FromStr for SimilarityScorer {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "nld" => Ok(Self::Nld),
            "binary-cognacy" | "cognate" => Ok(Self::BinaryCognacy),
            other => Err(format!("unknown scorer {other:?}")),
        }
    }
}

/// Edit distance over Unicode scalar values (unit-cost insert, delete,
/// substitute). Two-row Wagner–Fischer.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut cur = vec![0usize; short.len() + 1];
    for (i, &lc) in long.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &sc) in short.iter().enumerate() {
            let subst = prev[j] + usize::from(lc != sc);
            cur[j + 1] = subst.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// Levenshtein distance divided by the length of the longer word.
pub fn nld(a: &[char], b: &[char]) -> Result<f64> {
    let longer = a.len().max(b.len());
    if longer == 0 {
        return Err(MetricError::UndefinedDistance);
    }
    Ok(levenshtein(a, b) as f64 / longer as f64)
}

/// Similarity of two non-empty slots under `scorer`.
pub fn word_similarity(a: &[WordForm], b: &[WordForm], scorer: SimilarityScorer) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::MissingSlot);
    }
    match scorer {
        SimilarityScorer::Nld => {
            let mut best = f64::NEG_INFINITY;
            for x in a {
                for y in b {
                    let s = 1.0 - nld(&x.normalized, &y.normalized)?;
                    if s > best {
                        best = s;
                    }
                }
            }
            Ok(best)
        }
        SimilarityScorer::BinaryCognacy => {
            if let Some(f) = a.iter().chain(b).find(|f| f.cognate_class.is_none()) {
                return Err(MetricError::MissingCognateClass(f.raw.clone()));
            }
            let shared = a
                .iter()
                .any(|x| b.iter().any(|y| x.cognate_class == y.cognate_class));
            Ok(if shared { 1.0 } else { 0.0 })
        }
    }
}

/// Mean item similarity of a language pair and the number of items it was
/// averaged over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub value: f64,
    pub support: usize,
}

/// Mean `word_similarity` over the items where both languages have a slot.
/// Items are accumulated in ascending index order.
pub fn language_overlap(db: &LexicalDatabase, a: usize, b: usize, scorer: SimilarityScorer) -> Result<Overlap> {
    for idx in [a, b] {
        if idx >= db.language_count() {
            return Err(MetricError::LanguageIndex(idx));
        }
    }
    let mut sum = 0.0;
    let mut support = 0usize;
    for item in 0..db.item_count() {
        if let (Some(x), Some(y)) = (db.slot(a, item), db.slot(b, item)) {
            sum += word_similarity(x, y, scorer)?;
            support += 1;
        }
    }
    if support == 0 {
        let langs = db.languages();
        return Err(MetricError::NoComparableItems(langs[a].label.clone(), langs[b].label.clone()));
    }
    Ok(Overlap { value: sum / support as f64, support })
}

/// Symmetric matrix of pairwise overlaps. Pairs without comparable items hold
/// `None` with support 0.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    labels: Vec<String>,
    values: Vec<Option<f64>>,
    support: Vec<usize>,
}

impl OverlapMatrix {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.values[a * self.len() + b]
    }

    pub fn support(&self, a: usize, b: usize) -> usize {
        self.support[a * self.len() + b]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn to_csv(&self) -> String {
        crate::csvio::matrix_csv(
            "overlap matrix; rows/columns are languages; NA = no comparable items",
            &self.labels,
            |a, b| crate::csvio::fmt_opt(self.get(a, b)),
        )
    }

    pub fn support_csv(&self) -> String {
        crate::csvio::matrix_csv(
            "overlap support; number of items compared per language pair",
            &self.labels,
            |a, b| self.support(a, b).to_string(),
        )
    }
}

/// All pairwise overlaps of `db`. Pairs are evaluated in parallel; each pair
/// is accumulated sequentially so the result does not depend on the thread
/// count.
pub fn overlap_matrix(db: &LexicalDatabase, scorer: SimilarityScorer) -> Result<OverlapMatrix> {
    let n = db.language_count();
    if n < 2 {
        return Err(MetricError::TooFewLanguages(n));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let results: Vec<Result<Option<Overlap>>> = pairs
        .par_iter()
        .map(|&(a, b)| match language_overlap(db, a, b, scorer) {
            Ok(o) => Ok(Some(o)),
            Err(MetricError::NoComparableItems(..)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();

    let mut values = vec![None; n * n];
    let mut support = vec![0; n * n];
    for (&(a, b), r) in pairs.iter().zip(results) {
        if let Some(o) = r? {
            // a language always matches itself exactly
            let v = if a == b { 1.0 } else { o.value };
            for (i, j) in [(a, b), (b, a)] {
                values[i * n + j] = Some(v);
                support[i * n + j] = o.support;
            }
        }
    }
    Ok(OverlapMatrix {
        labels: db.languages().iter().map(|l| l.label.clone()).collect(),
        values,
        support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wordlist::{load_database, ItemRecord, LanguageRecord};

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    fn forms(words: &[&str]) -> Vec<WordForm> {
        words.iter().map(|w| WordForm::new(w, None).unwrap()).collect()
    }

    fn classed(pairs: &[(&str, Option<&str>)]) -> Vec<WordForm> {
        pairs
            .iter()
            .map(|(w, c)| WordForm::new(w, c.map(str::to_string)).unwrap())
            .collect()
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein(&[], &chars("abc")), 3);
        assert_eq!(levenshtein(&chars("casa"), &chars("casa")), 0);
        assert_eq!(levenshtein(&chars("kitten"), &chars("sitting")), 3);
        assert_eq!(levenshtein(&chars("été"), &chars("ete")), 2);
    }

    #[test]
    fn nld_examples() {
        assert!((nld(&chars("abc"), &chars("abd")).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(nld(&chars("x"), &chars("x")).unwrap(), 0.0);
        assert_eq!(nld(&chars("ab"), &chars("cd")).unwrap(), 1.0);
        assert_eq!(nld(&[], &[]), Err(MetricError::UndefinedDistance));
        assert_eq!(nld(&[], &chars("a")).unwrap(), 1.0);
    }

    #[test]
    fn word_similarity_examples() {
        let s = SimilarityScorer::Nld;
        assert_eq!(word_similarity(&forms(&["cane"]), &forms(&["cane"]), s).unwrap(), 1.0);
        assert_eq!(word_similarity(&forms(&["cane"]), &forms(&["chien", "can"]), s).unwrap(), 0.75);
        assert_eq!(word_similarity(&[], &forms(&["can"]), s), Err(MetricError::MissingSlot));

        let b = SimilarityScorer::BinaryCognacy;
        let a1 = classed(&[("x", Some("A"))]);
        let b1 = classed(&[("y", Some("B"))]);
        assert_eq!(word_similarity(&a1, &b1, b).unwrap(), 0.0);
        let b2 = classed(&[("y", Some("B")), ("z", Some("A"))]);
        assert_eq!(word_similarity(&a1, &b2, b).unwrap(), 1.0);
        let none = classed(&[("y", None)]);
        assert!(matches!(word_similarity(&a1, &none, b), Err(MetricError::MissingCognateClass(_))));
    }

    const HEADER: &str = "language\titem_id\tgloss\tform\tcognate_class\n";

    #[test]
    fn overlap_of_half_similar_items() {
        // similarities 1, 0, 0.5
        let src = format!(
            "{HEADER}a\ti1\tx\tabcd\t\nb\ti1\tx\tabcd\t\na\ti2\ty\tab\t\nb\ti2\ty\tcd\t\na\ti3\tz\tabcd\t\nb\ti3\tz\tabxy\t\n"
        );
        let db = load_database(&src, None).unwrap().database;
        let o = language_overlap(&db, 0, 1, SimilarityScorer::Nld).unwrap();
        assert_eq!(o, Overlap { value: 0.5, support: 3 });
    }

    #[test]
    fn overlap_identity_and_disjoint() {
        let src = format!("{HEADER}a\ti1\tx\tab\t\nb\ti1\tx\tab\t\nc\ti1\tx\tcd\t\na\ti2\ty\tef\t\nb\ti2\ty\tef\t\nc\ti2\ty\tgh\t\n");
        let db = load_database(&src, None).unwrap().database;
        assert_eq!(language_overlap(&db, 0, 1, SimilarityScorer::Nld).unwrap(), Overlap { value: 1.0, support: 2 });
        assert_eq!(language_overlap(&db, 0, 2, SimilarityScorer::Nld).unwrap(), Overlap { value: 0.0, support: 2 });
    }

    #[test]
    fn overlap_without_shared_items() {
        let src = format!("{HEADER}a\ti1\tx\tab\t\nb\ti2\ty\tab\t\n");
        let db = load_database(&src, None).unwrap().database;
        assert!(matches!(
            language_overlap(&db, 0, 1, SimilarityScorer::Nld),
            Err(MetricError::NoComparableItems(..))
        ));
        let m = overlap_matrix(&db, SimilarityScorer::Nld).unwrap();
        assert_eq!(m.get(0, 1), None);
        assert_eq!(m.support(0, 1), 0);
        assert_eq!(m.get(0, 0), Some(1.0));
    }

    #[test]
    fn matrix_of_duplicates_is_ones() {
        let src = format!("{HEADER}a\ti1\tx\tab\t\nb\ti1\tx\tab\t\n");
        let db = load_database(&src, None).unwrap().database;
        let m = overlap_matrix(&db, SimilarityScorer::Nld).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(m.get(a, b), Some(1.0));
            }
        }
    }

    #[test]
    fn matrix_matches_pairwise_calls() {
        let src = format!(
            "{HEADER}a\ti1\tx\tmano\t\nb\ti1\tx\tmain\t\nc\ti1\tx\tmão\t\na\ti2\ty\tacqua\t\nb\ti2\ty\teau\t\nc\ti2\ty\tágua\t\nc\ti3\tz\tpedra\t\na\ti3\tz\tpietra\t\n"
        );
        let db = load_database(&src, None).unwrap().database;
        let m = overlap_matrix(&db, SimilarityScorer::Nld).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(m.get(a, b), m.get(b, a));
                if a != b {
                    let o = language_overlap(&db, a, b, SimilarityScorer::Nld).unwrap();
                    assert_eq!(m.get(a, b), Some(o.value));
                    assert_eq!(m.support(a, b), o.support);
                }
            }
        }
        assert_eq!(m.support(0, 2), 3);
        assert_eq!(m.support(0, 1), 2);
    }

    #[test]
    fn matrix_needs_two_languages() {
        let db = crate::wordlist::LexicalDatabase::from_parts(
            "f",
            vec![LanguageRecord::modern("a")],
            vec![ItemRecord { item_id: "i".into(), gloss: "g".into() }],
            std::iter::empty(),
        )
        .unwrap();
        assert_eq!(overlap_matrix(&db, SimilarityScorer::Nld), Err(MetricError::TooFewLanguages(1)));
    }

    #[test]
    fn csv_has_schema_line() {
        let src = format!("{HEADER}a\ti1\tx\tab\t\nb\ti1\tx\tac\t\n");
        let db = load_database(&src, None).unwrap().database;
        let m = overlap_matrix(&db, SimilarityScorer::Nld).unwrap();
        let csv = m.to_csv();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with('#'));
        assert_eq!(lines.next().unwrap(), "language,a,b");
        assert_eq!(lines.next().unwrap(), "a,1,0.5");
        assert!(m.support_csv().contains("b,1,1"));
    }
}

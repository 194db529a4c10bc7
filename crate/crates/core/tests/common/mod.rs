#![allow(dead_code)]

use glottokit::stability::{RateProfile, StabilityKind, StabilityTable};
use glottokit::wordlist::{ItemRecord, LanguageRecord, LexicalDatabase, Role, WordForm};
use proptest::prelude::*;

/// `cells[l * items + i]` holds the forms of language `l` for item `i`.
pub fn build_db(langs: usize, items: usize, cells: &[Option<Vec<String>>], proto: bool) -> LexicalDatabase {
    let languages = (0..langs)
        .map(|l| {
            let mut rec = LanguageRecord::modern(format!("L{l}"));
            if proto && l == 0 {
                rec.role = Role::Proto;
            }
            rec
        })
        .collect();
    let item_recs = (0..items).map(|i| ItemRecord { item_id: format!("i{i:02}"), gloss: format!("g{i}") }).collect();
    let slots = cells.iter().enumerate().filter_map(|(k, c)| {
        c.as_ref().map(|forms| {
            let forms = forms.iter().map(|f| WordForm::new(f, None).unwrap()).collect();
            ((k / items, k % items), forms)
        })
    });
    LexicalDatabase::from_parts("fam", languages, item_recs, slots).unwrap()
}

pub fn cells(n: usize) -> impl Strategy<Value = Vec<Option<Vec<String>>>> {
    proptest::collection::vec(
        proptest::option::weighted(0.85, proptest::collection::vec("[a-e]{1,5}", 1..3)),
        n,
    )
}

/// Random database with `2..=max_langs` languages and `1..=max_items` items.
pub fn db_strategy(max_langs: usize, max_items: usize) -> impl Strategy<Value = LexicalDatabase> {
    (2..=max_langs, 1..=max_items)
        .prop_flat_map(|(l, i)| (Just(l), Just(i), cells(l * i)))
        .prop_map(|(l, i, c)| build_db(l, i, &c, false))
}

/// Every slot filled.
pub fn full_db_strategy(langs: std::ops::RangeInclusive<usize>, items: std::ops::RangeInclusive<usize>, proto: bool) -> impl Strategy<Value = LexicalDatabase> {
    (langs, items)
        .prop_flat_map(|(l, i)| {
            (Just(l), Just(i), proptest::collection::vec(proptest::collection::vec("[a-d]{1,5}", 1..3), l * i))
        })
        .prop_map(move |(l, i, c)| {
            let c: Vec<_> = c.into_iter().map(Some).collect();
            build_db(l, i, &c, proto)
        })
}

pub fn profile(rates: &[f64]) -> RateProfile {
    let ids = (0..rates.len()).map(|i| format!("i{i:03}")).collect();
    RateProfile::from_rates(ids, rates.to_vec(), StabilityKind::Estimated)
}

pub fn table(values: &[f64]) -> StabilityTable {
    let ids: Vec<String> = (0..values.len()).map(|i| format!("i{i:03}")).collect();
    StabilityTable {
        glosses: ids.clone(),
        item_ids: ids,
        values: values.iter().copied().map(Some).collect(),
        kind: StabilityKind::Estimated,
        languages_used: 3,
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

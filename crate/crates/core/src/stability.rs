//! Per-item stabilities, replacement rates, the rate proportionality constant
//! and correlation measures.
//!
//! Actual stability compares every modern language with the proto-language;
//! estimated stability averages over all pairs of modern languages and so
//! needs no ancestor. Each converts to a replacement rate through
//! `rate = -ln(stability) / time_constant`.

use std::fmt;

use rayon::prelude::*;

use crate::csvio::{fmt_f64, fmt_opt, CsvTable};
use crate::metric::{word_similarity, MetricError, SimilarityScorer};
use crate::wordlist::{LexicalDatabase, Role};

/// Time separating Vulgar Latin (c. 500 CE) from the modern Romance
/// languages, in millennia.
pub const VULGAR_LATIN_DEPTH: f64 = 1.5;
/// Time separating Late Classical Latin (c. 150 CE) from the modern Romance
/// languages, in millennia.
pub const LATE_CLASSICAL_LATIN_DEPTH: f64 = 1.85;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("database has no proto-language")]
    NoProto,
    #[error("database has {0} proto-languages; exactly one is required")]
    MultipleProto(usize),
    #[error("need at least {needed} modern languages, found {found}")]
    TooFewModern { needed: usize, found: usize },
    #[error("time constant must be positive, got {0}")]
    TimeConstant(f64),
    #[error("profiles cover different items")]
    ItemMismatch,
    #[error("need at least 2 items defined in both profiles, found {0}")]
    TooFewItems(usize),
    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation undefined: zero variance")]
    ZeroVariance,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub type Result<T> = std::result::Result<T, StabilityError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityKind {
    /// Against a known proto-language.
    Actual,
    /// From modern languages only.
    Estimated,
}

impl fmt::Display for StabilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StabilityKind::Actual => "actual",
            StabilityKind::Estimated => "estimated",
        })
    }
}

/// One stability per item; `None` where the data do not define it.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityTable {
    pub item_ids: Vec<String>,
    pub glosses: Vec<String>,
    pub values: Vec<Option<f64>>,
    pub kind: StabilityKind,
    pub languages_used: usize,
}

impl StabilityTable {
    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn defined_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Copy restricted to defined entries, plus the ids that were dropped.
    pub fn defined_only(&self) -> (StabilityTable, Vec<String>) {
        let mut out = StabilityTable {
            item_ids: Vec::new(),
            glosses: Vec::new(),
            values: Vec::new(),
            kind: self.kind,
            languages_used: self.languages_used,
        };
        let mut dropped = Vec::new();
        for i in 0..self.len() {
            match self.values[i] {
                Some(v) => {
                    out.item_ids.push(self.item_ids[i].clone());
                    out.glosses.push(self.glosses[i].clone());
                    out.values.push(Some(v));
                }
                None => dropped.push(self.item_ids[i].clone()),
            }
        }
        (out, dropped)
    }

    pub fn to_csv(&self) -> String {
        table_csv(
            &format!("{} stability per item; NA = undefined", self.kind),
            &self.item_ids,
            &self.glosses,
            &self.values,
        )
    }
}

fn table_csv(comment: &str, ids: &[String], glosses: &[String], values: &[Option<f64>]) -> String {
    let mut t = CsvTable::new(comment, ["item_id", "gloss", "value"]);
    for i in 0..ids.len() {
        t.row([ids[i].clone(), glosses[i].clone(), fmt_opt(values[i])]);
    }
    t.finish()
}

fn proto_index(db: &LexicalDatabase) -> Result<usize> {
    match db.indices_with_role(Role::Proto).as_slice() {
        [] => Err(StabilityError::NoProto),
        [p] => Ok(*p),
        many => Err(StabilityError::MultipleProto(many.len())),
    }
}

/// Mean similarity between the proto-language and each modern language, per
/// item. Undefined where the proto slot is missing or no modern language
/// attests the item.
pub fn actual_stability(db: &LexicalDatabase, scorer: SimilarityScorer) -> Result<StabilityTable> {
    let proto = proto_index(db)?;
    let moderns = db.indices_with_role(Role::Modern);
    if moderns.is_empty() {
        return Err(StabilityError::TooFewModern { needed: 1, found: 0 });
    }
    let values = (0..db.item_count())
        .into_par_iter()
        .map(|item| -> Result<Option<f64>> {
            let Some(p) = db.slot(proto, item) else { return Ok(None) };
            let mut sum = 0.0;
            let mut n = 0usize;
            for &m in &moderns {
                if let Some(s) = db.slot(m, item) {
                    sum += word_similarity(p, s, scorer)?;
                    n += 1;
                }
            }
            Ok((n > 0).then(|| sum / n as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(build_table(db, values, StabilityKind::Actual, moderns.len()))
}

/// Mean similarity over all unordered pairs of modern languages, per item.
/// The proto-language, if any, is excluded.
pub fn estimated_stability(db: &LexicalDatabase, scorer: SimilarityScorer) -> Result<StabilityTable> {
    let moderns = db.indices_with_role(Role::Modern);
    if moderns.len() < 3 {
        return Err(StabilityError::TooFewModern { needed: 3, found: moderns.len() });
    }
    let values = (0..db.item_count())
        .into_par_iter()
        .map(|item| -> Result<Option<f64>> {
            let slots: Vec<_> = moderns.iter().filter_map(|&m| db.slot(m, item)).collect();
            if slots.len() < 2 {
                return Ok(None);
            }
            let mut sum = 0.0;
            let mut n = 0usize;
            for (i, a) in slots.iter().enumerate() {
                for b in &slots[i + 1..] {
                    sum += word_similarity(a, b, scorer)?;
                    n += 1;
                }
            }
            Ok(Some(sum / n as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(build_table(db, values, StabilityKind::Estimated, moderns.len()))
}

fn build_table(db: &LexicalDatabase, values: Vec<Option<f64>>, kind: StabilityKind, used: usize) -> StabilityTable {
    StabilityTable {
        item_ids: db.items().iter().map(|i| i.item_id.clone()).collect(),
        glosses: db.items().iter().map(|i| i.gloss.clone()).collect(),
        values,
        kind,
        languages_used: used,
    }
}

/// Per-item replacement rates (per millennium) and the time constant used to
/// derive them. A rate of exactly 0 comes from stability 1 and is a boundary
/// value; `None` marks items with undefined or zero stability.
#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile {
    pub item_ids: Vec<String>,
    pub glosses: Vec<String>,
    pub rates: Vec<Option<f64>>,
    pub time_constant: f64,
    pub kind: StabilityKind,
}

impl RateProfile {
    /// A complete profile from explicit rates, for callers that already know
    /// them (simulation truth, tests).
    pub fn from_rates(item_ids: Vec<String>, rates: Vec<f64>, kind: StabilityKind) -> Self {
        assert_eq!(item_ids.len(), rates.len(), "one rate per item");
        Self {
            glosses: item_ids.clone(),
            item_ids,
            rates: rates.into_iter().map(Some).collect(),
            time_constant: f64::NAN,
            kind,
        }
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.rates[i] == Some(0.0)
    }

    /// All rates, or `None` if any entry is undefined.
    pub fn complete_rates(&self) -> Option<Vec<f64>> {
        self.rates.iter().copied().collect()
    }

    pub fn defined_rates(&self) -> Vec<f64> {
        self.rates.iter().flatten().copied().collect()
    }

    pub fn to_csv(&self) -> String {
        table_csv(
            &format!(
                "{} replacement rate per item (per millennium) with time constant {}; NA = undefined",
                self.kind,
                fmt_f64(self.time_constant)
            ),
            &self.item_ids,
            &self.glosses,
            &self.rates,
        )
    }
}

/// `rate = -ln(value) / time_constant` for each defined, positive stability.
pub fn rates_from_stability(table: &StabilityTable, time_constant: f64) -> Result<RateProfile> {
    if !(time_constant > 0.0 && time_constant.is_finite()) {
        return Err(StabilityError::TimeConstant(time_constant));
    }
    let rates = table
        .values
        .iter()
        .map(|v| match *v {
            Some(s) if s >= 1.0 => Some(0.0),
            Some(s) if s > 0.0 => Some(-s.ln() / time_constant),
            _ => None,
        })
        .collect();
    Ok(RateProfile {
        item_ids: table.item_ids.clone(),
        glosses: table.glosses.clone(),
        rates,
        time_constant,
        kind: table.kind,
    })
}

/// Values defined in both series, with the number of positions dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Paired {
    pub item_ids: Vec<String>,
    pub glosses: Vec<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dropped: usize,
}

impl Paired {
    pub fn to_csv(&self, x_name: &str, y_name: &str) -> String {
        let mut t = CsvTable::new(
            &format!("paired per-item values ({x_name} vs {y_name}); {} items dropped as undefined", self.dropped),
            ["item_id", "gloss", x_name, y_name],
        );
        for i in 0..self.x.len() {
            t.row([self.item_ids[i].clone(), self.glosses[i].clone(), fmt_f64(self.x[i]), fmt_f64(self.y[i])]);
        }
        t.finish()
    }
}

fn pair_up(
    ids_a: &[String],
    ids_b: &[String],
    glosses: &[String],
    a: &[Option<f64>],
    b: &[Option<f64>],
) -> Result<Paired> {
    if ids_a != ids_b {
        return Err(StabilityError::ItemMismatch);
    }
    let mut p = Paired { item_ids: vec![], glosses: vec![], x: vec![], y: vec![], dropped: 0 };
    for i in 0..ids_a.len() {
        match (a[i], b[i]) {
            (Some(x), Some(y)) => {
                p.item_ids.push(ids_a[i].clone());
                p.glosses.push(glosses[i].clone());
                p.x.push(x);
                p.y.push(y);
            }
            _ => p.dropped += 1,
        }
    }
    Ok(p)
}

/// Pairs two stability tables item by item (the data behind an R vs S scatter).
pub fn pair_stabilities(x: &StabilityTable, y: &StabilityTable) -> Result<Paired> {
    pair_up(&x.item_ids, &y.item_ids, &x.glosses, &x.values, &y.values)
}

/// Pairs two rate profiles item by item (the data behind an r vs s scatter).
pub fn pair_rates(x: &RateProfile, y: &RateProfile) -> Result<Paired> {
    pair_up(&x.item_ids, &y.item_ids, &x.glosses, &x.rates, &y.rates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaMethod {
    RegressionThroughOrigin,
    SinglePairCalibration,
}

impl fmt::Display for LambdaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LambdaMethod::RegressionThroughOrigin => "regression-through-origin",
            LambdaMethod::SinglePairCalibration => "single-pair-calibration",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaFit {
    pub lambda: f64,
    pub method: LambdaMethod,
    /// RMS of `r - lambda * s` (regression only).
    pub residual: Option<f64>,
    pub items_used: usize,
    pub items_dropped: usize,
}

impl LambdaFit {
    pub fn calibrated(lambda: f64) -> Self {
        Self {
            lambda,
            method: LambdaMethod::SinglePairCalibration,
            residual: None,
            items_used: 0,
            items_dropped: 0,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(
            "fitted proportionality r_i = lambda * s_i",
            ["lambda", "method", "residual_rms", "items_used", "items_dropped"],
        );
        t.row([
            fmt_f64(self.lambda),
            self.method.to_string(),
            fmt_opt(self.residual),
            self.items_used.to_string(),
            self.items_dropped.to_string(),
        ]);
        t.finish()
    }
}

/// Least squares through the origin: `lambda = Σ r s / Σ s²`.
pub fn fit_lambda(actual: &RateProfile, estimated: &RateProfile) -> Result<LambdaFit> {
    let p = pair_rates(actual, estimated)?;
    if p.x.len() < 2 {
        return Err(StabilityError::TooFewItems(p.x.len()));
    }
    let (r, s) = (&p.x, &p.y);
    let ss: f64 = s.iter().map(|v| v * v).sum();
    if ss == 0.0 {
        return Err(StabilityError::DegenerateFit("all estimated rates are zero"));
    }
    let rs: f64 = r.iter().zip(s).map(|(a, b)| a * b).sum();
    let lambda = rs / ss;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(StabilityError::DegenerateFit("non-positive proportionality constant"));
    }
    let sq: f64 = r.iter().zip(s).map(|(a, b)| (a - lambda * b).powi(2)).sum();
    Ok(LambdaFit {
        lambda,
        method: LambdaMethod::RegressionThroughOrigin,
        residual: Some((sq / r.len() as f64).sqrt()),
        items_used: r.len(),
        items_dropped: p.dropped,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(StabilityError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StabilityError::TooFewItems(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StabilityError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share their average rank.
pub fn average_ranks(data: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| data[a].total_cmp(&data[b]));
    let mut ranks = vec![0.0; data.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && data[order[j]] == data[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation of the average-rank vectors.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(StabilityError::LengthMismatch(x.len(), y.len()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Relative-frequency histogram of one or more rate series on shared bins of
/// width `width` starting at 0. Frequencies are counts over the number of
/// values in each series.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub width: f64,
    pub frequencies: Vec<Vec<f64>>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.frequencies.first().map_or(0, Vec::len)
    }

    pub fn to_csv(&self, names: &[&str]) -> String {
        let header = ["bin_lo", "bin_hi"].iter().map(|s| s.to_string()).chain(names.iter().map(|n| format!("freq_{n}")));
        let mut t = CsvTable::new(
            &format!("rate histogram, bin width {}; frequency = count / number of defined rates", fmt_f64(self.width)),
            header,
        );
        let edge = |k: usize| fmt_f64((k as f64 * self.width * 1e9).round() / 1e9);
        for k in 0..self.bins() {
            let row = [edge(k), edge(k + 1)]
                .into_iter()
                .chain(self.frequencies.iter().map(|f| fmt_f64(f[k])));
            t.row(row);
        }
        t.finish()
    }
}

/// Bins cover `[0, width * (floor(max / width) + 1))` so the largest value
/// always falls inside.
pub fn rate_histogram(series: &[&[f64]], width: f64) -> Histogram {
    assert!(width > 0.0, "bin width must be positive");
    let bin = |v: f64| (v / width + 1e-9).floor().max(0.0) as usize;
    let max = series.iter().flat_map(|s| s.iter().copied()).fold(0.0f64, f64::max);
    let bins = bin(max) + 1;
    let frequencies = series
        .iter()
        .map(|s| {
            let mut counts = vec![0usize; bins];
            for &v in *s {
                counts[bin(v)] += 1;
            }
            counts.iter().map(|&c| c as f64 / s.len().max(1) as f64).collect()
        })
        .collect();
    Histogram { width, frequencies }
}

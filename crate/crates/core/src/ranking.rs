//! Stability rankings and the common-item count curve `c(m)`.
//!
//! `c(m)` is the number of items shared by the top-`m` prefixes of two
//! rankings of the same `M` items. Identical rankings give `c(m) = m`;
//! independent uniform rankings give `m²/M` on average.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::csvio::{fmt_f64, CsvTable};
use crate::metric::SimilarityScorer;
use crate::stability::{estimated_stability, StabilityError, StabilityTable};
use crate::wordlist::{common_items, subset, LexicalDatabase, Role, WordlistError};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RankingError {
    #[error("cannot rank an empty table")]
    Empty,
    #[error("item {0:?} has an undefined stability; drop undefined entries first")]
    Undefined(String),
    #[error("rankings cover different item sets")]
    DomainMismatch,
    #[error("comparison needs at least {needed} {what}, found {found}")]
    Insufficient { what: &'static str, needed: usize, found: usize },
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Wordlist(#[from] WordlistError),
}

pub type Result<T> = std::result::Result<T, RankingError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// Equal stabilities are ordered by ascending item id.
    ItemIdAscending,
}

/// Items by decreasing stability.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub item_ids: Vec<String>,
    pub values: Vec<f64>,
    pub tie_break: TieBreak,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn to_csv(&self, glosses: &HashMap<String, String>) -> String {
        let mut t = CsvTable::new(
            "items by decreasing stability; ties by ascending item_id",
            ["rank", "item_id", "gloss", "value"],
        );
        for (i, id) in self.item_ids.iter().enumerate() {
            let gloss = glosses.get(id).cloned().unwrap_or_default();
            t.row([(i + 1).to_string(), id.clone(), gloss, fmt_f64(self.values[i])]);
        }
        t.finish()
    }
}

/// Sorts by descending value, then ascending item id.
pub fn rank_items(table: &StabilityTable) -> Result<RankedList> {
    if table.is_empty() {
        return Err(RankingError::Empty);
    }
    let mut entries = Vec::with_capacity(table.len());
    for (id, v) in table.item_ids.iter().zip(&table.values) {
        let v = v.ok_or_else(|| RankingError::Undefined(id.clone()))?;
        entries.push((id.clone(), v));
    }
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let (item_ids, values) = entries.into_iter().unzip();
    Ok(RankedList { item_ids, values, tie_break: TieBreak::ItemIdAscending })
}

/// Monte Carlo distribution of `c(m)` under independent uniform rankings.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomBand {
    pub trials: usize,
    pub seed: u64,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Mean and standard deviation of `Σ_m c(m)`, the area under the curve.
    pub area_mean: f64,
    pub area_sd: f64,
}

impl RandomBand {
    /// Values of `m` (1-based) whose empirical mean is farther than three
    /// standard errors from `m²/M`. Empty when the simulation agrees with the
    /// analytic expectation.
    pub fn analytic_mismatches(&self) -> Vec<usize> {
        let big_m = self.mean.len() as f64;
        let n = self.trials as f64;
        (1..=self.mean.len())
            .filter(|&m| {
                let expected = (m * m) as f64 / big_m;
                let se = self.sd[m - 1] / n.sqrt();
                (self.mean[m - 1] - expected).abs() > 3.0 * se + 1e-12
            })
            .collect()
    }

    /// Standardized distance of a curve's area from the random expectation.
    pub fn area_z(&self, curve: &CommonCountCurve) -> f64 {
        let area: usize = curve.c.iter().sum();
        (area as f64 - self.area_mean) / self.area_sd
    }

    /// The curve's area lies within three standard deviations of chance.
    pub fn contains(&self, curve: &CommonCountCurve) -> bool {
        self.area_z(curve).abs() <= 3.0
    }

    /// The curve's area exceeds chance by more than three standard deviations.
    pub fn is_above(&self, curve: &CommonCountCurve) -> bool {
        self.area_z(curve) > 3.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommonCountCurve {
    pub item_count: usize,
    /// `c[m - 1]` for `m = 1..=M`.
    pub c: Vec<usize>,
    pub band: Option<RandomBand>,
}

impl CommonCountCurve {
    pub fn random_baseline(&self, m: usize) -> f64 {
        (m * m) as f64 / self.item_count as f64
    }

    pub fn identity_baseline(&self, m: usize) -> f64 {
        m as f64
    }

    pub fn with_band(mut self, band: RandomBand) -> Self {
        self.band = Some(band);
        self
    }

    pub fn to_csv(&self) -> String {
        let comment = match &self.band {
            Some(b) => format!(
                "common items c(m) of two top-m prefixes; band from {} random ranking pairs, seed {}",
                b.trials, b.seed
            ),
            None => "common items c(m) of two top-m prefixes; no random band".to_string(),
        };
        let mut t = CsvTable::new(
            &comment,
            ["m", "c", "baseline_random", "baseline_identity", "band_mean", "band_sd"],
        );
        for m in 1..=self.item_count {
            let (bm, bs) = match &self.band {
                Some(b) => (fmt_f64(b.mean[m - 1]), fmt_f64(b.sd[m - 1])),
                None => ("NA".to_string(), "NA".to_string()),
            };
            t.row([
                m.to_string(),
                self.c[m - 1].to_string(),
                fmt_f64(self.random_baseline(m)),
                fmt_f64(self.identity_baseline(m)),
                bm,
                bs,
            ]);
        }
        t.finish()
    }
}

fn prefix_counts(a: &[usize], b: &[usize], n: usize) -> Vec<usize> {
    let mut in_a = vec![false; n];
    let mut in_b = vec![false; n];
    let mut c = 0usize;
    let mut out = Vec::with_capacity(a.len());
    for (&x, &y) in a.iter().zip(b) {
        in_a[x] = true;
        if in_b[x] {
            c += 1;
        }
        in_b[y] = true;
        if in_a[y] {
            c += 1;
        }
        out.push(c);
    }
    out
}

/// `c(m)` for two rankings of the same item set, computed incrementally.
pub fn common_count_curve(a: &RankedList, b: &RankedList) -> Result<CommonCountCurve> {
    if a.len() != b.len() {
        return Err(RankingError::DomainMismatch);
    }
    let index: HashMap<&str, usize> = a.item_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    if index.len() != a.len() {
        return Err(RankingError::DomainMismatch);
    }
    let ia: Vec<usize> = (0..a.len()).collect();
    let ib = b
        .item_ids
        .iter()
        .map(|id| index.get(id.as_str()).copied().ok_or(RankingError::DomainMismatch))
        .collect::<Result<Vec<_>>>()?;
    let distinct: BTreeSet<usize> = ib.iter().copied().collect();
    if distinct.len() != ib.len() {
        return Err(RankingError::DomainMismatch);
    }
    Ok(CommonCountCurve { item_count: a.len(), c: prefix_counts(&ia, &ib, a.len()), band: None })
}

/// Per-trial generator: ChaCha8 keyed by the master seed, one stream per
/// trial index.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Mean and standard deviation of `c(m)` over `trials` pairs of independent
/// uniformly random rankings of `item_count` items. Trials run in parallel;
/// sums are accumulated in integers so the result is independent of thread
/// scheduling.
pub fn random_baseline_band(item_count: usize, trials: usize, seed: u64) -> RandomBand {
    let trials = trials.max(1);
    let n = item_count;
    let zero = || (vec![0u64; n], vec![0u64; n], 0u128, 0u128);
    let (sum, sum_sq, area, area_sq) = (0..trials)
        .into_par_iter()
        .fold(zero, |mut acc, t| {
            let mut rng = trial_rng(seed, t);
            let mut a: Vec<usize> = (0..n).collect();
            let mut b: Vec<usize> = (0..n).collect();
            a.shuffle(&mut rng);
            b.shuffle(&mut rng);
            let c = prefix_counts(&a, &b, n);
            let mut total = 0u128;
            for (m, &v) in c.iter().enumerate() {
                acc.0[m] += v as u64;
                acc.1[m] += (v * v) as u64;
                total += v as u128;
            }
            acc.2 += total;
            acc.3 += total * total;
            acc
        })
        .reduce(zero, |mut x, y| {
            for m in 0..n {
                x.0[m] += y.0[m];
                x.1[m] += y.1[m];
            }
            x.2 += y.2;
            x.3 += y.3;
            x
        });

    let tn = trials as f64;
    let moments = |s: f64, sq: f64| {
        let mean = s / tn;
        let var = if trials > 1 { ((sq - s * mean) / (tn - 1.0)).max(0.0) } else { 0.0 };
        (mean, var.sqrt())
    };
    let (mean, sd) = (0..n).map(|m| moments(sum[m] as f64, sum_sq[m] as f64)).unzip();
    let (area_mean, area_sd) = moments(area as f64, area_sq as f64);
    RandomBand { trials, seed, mean, sd, area_mean, area_sd }
}

/// Outcome of a cross-family ranking comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyComparison {
    pub curve: CommonCountCurve,
    /// Common items that were dropped because a family left them undefined.
    pub dropped: Vec<String>,
}

/// Restricts both families to their common items, ranks each by estimated
/// stability and returns the resulting `c(m)` curve.
pub fn compare_families(a: &LexicalDatabase, b: &LexicalDatabase, scorer: SimilarityScorer) -> Result<FamilyComparison> {
    let common = common_items(a, b);
    if common.len() < 2 {
        return Err(RankingError::Insufficient { what: "common items", needed: 2, found: common.len() });
    }
    for db in [a, b] {
        let moderns = db.indices_with_role(Role::Modern).len();
        if moderns < 3 {
            return Err(RankingError::Insufficient { what: "modern languages per family", needed: 3, found: moderns });
        }
    }
    let keep: BTreeSet<String> = common.iter().cloned().collect();
    let sa = estimated_stability(&subset(a, |_| true, Some(&keep))?, scorer)?;
    let sb = estimated_stability(&subset(b, |_| true, Some(&keep))?, scorer)?;

    let defined = |t: &StabilityTable| -> HashMap<String, f64> {
        t.item_ids.iter().zip(&t.values).filter_map(|(id, v)| v.map(|v| (id.clone(), v))).collect()
    };
    let (da, db) = (defined(&sa), defined(&sb));
    let mut dropped = Vec::new();
    let mut ids = Vec::new();
    for id in &common {
        if da.contains_key(id) && db.contains_key(id) {
            ids.push(id.clone());
        } else {
            dropped.push(id.clone());
        }
    }
    if ids.len() < 2 {
        return Err(RankingError::Insufficient { what: "items defined in both families", needed: 2, found: ids.len() });
    }
    let table = |d: &HashMap<String, f64>, src: &StabilityTable| StabilityTable {
        item_ids: ids.clone(),
        glosses: ids.clone(),
        values: ids.iter().map(|id| Some(d[id])).collect(),
        kind: src.kind,
        languages_used: src.languages_used,
    };
    let ra = rank_items(&table(&da, &sa))?;
    let rb = rank_items(&table(&db, &sb))?;
    Ok(FamilyComparison { curve: common_count_curve(&ra, &rb)?, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::StabilityKind;

    fn table(pairs: &[(&str, f64)]) -> StabilityTable {
        StabilityTable {
            item_ids: pairs.iter().map(|p| p.0.to_string()).collect(),
            glosses: pairs.iter().map(|p| p.0.to_string()).collect(),
            values: pairs.iter().map(|p| Some(p.1)).collect(),
            kind: StabilityKind::Estimated,
            languages_used: 3,
        }
    }

    fn ranked(ids: &[usize]) -> RankedList {
        RankedList {
            item_ids: ids.iter().map(|i| format!("i{i:03}")).collect(),
            values: (0..ids.len()).rev().map(|v| v as f64).collect(),
            tie_break: TieBreak::ItemIdAscending,
        }
    }

    #[test]
    fn rank_examples() {
        let r = rank_items(&table(&[("a", 0.9), ("b", 0.5), ("c", 0.7)])).unwrap();
        assert_eq!(r.item_ids, vec!["a", "c", "b"]);
        let r = rank_items(&table(&[("b", 0.5), ("a", 0.5)])).unwrap();
        assert_eq!(r.item_ids, vec!["a", "b"]);
        let sorted = table(&[("x", 0.9), ("y", 0.7), ("z", 0.1)]);
        assert_eq!(rank_items(&sorted).unwrap().item_ids, vec!["x", "y", "z"]);
        assert_eq!(rank_items(&table(&[])), Err(RankingError::Empty));
        let mut undefined = table(&[("a", 0.1)]);
        undefined.values[0] = None;
        assert_eq!(rank_items(&undefined), Err(RankingError::Undefined("a".into())));
    }

    #[test]
    fn identical_and_reversed_curves() {
        let ids: Vec<usize> = (0..11).collect();
        let rev: Vec<usize> = ids.iter().rev().copied().collect();
        let same = common_count_curve(&ranked(&ids), &ranked(&ids)).unwrap();
        assert_eq!(same.c, (1..=11).collect::<Vec<_>>());
        let opp = common_count_curve(&ranked(&ids), &ranked(&rev)).unwrap();
        // brute force: |top_m(a) ∩ top_m(b)| by set intersection
        for m in 1..=11 {
            let a: BTreeSet<usize> = ids[..m].iter().copied().collect();
            let b: BTreeSet<usize> = rev[..m].iter().copied().collect();
            assert_eq!(opp.c[m - 1], a.intersection(&b).count());
        }
        assert_eq!(opp.c[10], 11);
    }

    #[test]
    fn mismatched_domains() {
        let a = ranked(&[0, 1, 2]);
        assert_eq!(common_count_curve(&a, &ranked(&[0, 1])), Err(RankingError::DomainMismatch));
        assert_eq!(common_count_curve(&a, &ranked(&[0, 1, 5])), Err(RankingError::DomainMismatch));
        assert_eq!(common_count_curve(&a, &ranked(&[0, 1, 1])), Err(RankingError::DomainMismatch));
    }

    #[test]
    fn band_small_cases() {
        let one = random_baseline_band(1, 50, 3);
        assert_eq!(one.mean, vec![1.0]);
        assert_eq!(one.sd, vec![0.0]);
        let a = random_baseline_band(10, 2_000, 11);
        assert_eq!(a, random_baseline_band(10, 2_000, 11));
        assert_ne!(a.mean, random_baseline_band(10, 2_000, 12).mean);
        assert_eq!(a.mean[9], 10.0);
    }

    #[test]
    fn band_mean_at_half_matches_expectation() {
        let b = random_baseline_band(10, 100_000, 2024);
        assert!((b.mean[4] - 2.5).abs() < 0.02, "{}", b.mean[4]);
        assert!(b.analytic_mismatches().is_empty());
    }

    #[test]
    fn curve_csv_layout() {
        let ids: Vec<usize> = (0..3).collect();
        let curve = common_count_curve(&ranked(&ids), &ranked(&ids)).unwrap();
        let csv = curve.to_csv();
        assert!(csv.contains("m,c,baseline_random,baseline_identity,band_mean,band_sd\n1,1,"));
        assert!(csv.ends_with("3,3,3,3,NA,NA\n"));
    }
}

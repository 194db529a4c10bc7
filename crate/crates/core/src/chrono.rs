//! Time distances from lexical overlaps.
//!
//! Three routes are provided:
//!
//! * the classic formula `T = -ln(C) / r` for a single universal rate;
//! * the generalized model `C(T) = (1/M) Σ exp(-λ s_i T)`, inverted
//!   numerically by bracketing and bisection;
//! * the closed form obtained when the `s_i` are replaced by a Gamma density
//!   with shape `Z` and scale `P`: `C = (1 + λ P T)^-Z`.
//!
//! Times are in millennia throughout.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::csvio::{fmt_f64, matrix_csv, fmt_opt};
use crate::metric::{language_overlap, overlap_matrix, MetricError, OverlapMatrix, SimilarityScorer};
use crate::stability::RateProfile;
use crate::wordlist::LexicalDatabase;

/// Sardinian and Sicilian diverged around 500 CE: about 2 × 1.5 millennia.
pub const SARDINIAN_SICILIAN_SEPARATION: f64 = 3.0;
/// Icelandic split from Norwegian around 900 CE: about 2 × 1.1 millennia.
pub const NORWEGIAN_ICELANDIC_SEPARATION: f64 = 2.2;
/// Default bracket width at which inversions stop, in millennia.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Upper end of the search bracket; beyond this an overlap is treated as
/// unreachable.
const MAX_TIME: f64 = 1e12;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ChronoError {
    #[error("overlap {0} is not above zero: the time distance diverges")]
    Divergent(f64),
    #[error("overlap {0} is outside (0, 1]")]
    OverlapDomain(f64),
    #[error("rate must be positive and finite, got {0}")]
    Rate(f64),
    #[error("lambda must be positive and finite, got {0}")]
    Lambda(f64),
    #[error("time must be non-negative and finite, got {0}")]
    Time(f64),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("rate profile has undefined entries")]
    ProfileIncomplete,
    #[error("rate profile is empty")]
    EmptyProfile,
    #[error("forward overlap is not monotone near T = {0}")]
    NonMonotone(f64),
    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),
    #[error("calibration impossible: overlap is 1 but the known separation is {0}")]
    CalibrationImpossible(f64),
    #[error("unknown language {0:?}")]
    UnknownLanguage(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub type Result<T> = std::result::Result<T, ChronoError>;

fn check_overlap(c: f64) -> Result<()> {
    if c.is_nan() || c > 1.0 {
        return Err(ChronoError::OverlapDomain(c));
    }
    if c <= 0.0 {
        return Err(ChronoError::Divergent(c));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(ChronoError::Lambda(lambda))
    }
}

/// `T = -ln(overlap) / rate`.
pub fn classic_time(overlap: f64, rate: f64) -> Result<f64> {
    check_overlap(overlap)?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(ChronoError::Rate(rate));
    }
    Ok(-overlap.ln() / rate)
}

/// Rates of a complete profile, in item order.
pub fn profile_rates(profile: &RateProfile) -> Result<Vec<f64>> {
    if profile.is_empty() {
        return Err(ChronoError::EmptyProfile);
    }
    profile.complete_rates().ok_or(ChronoError::ProfileIncomplete)
}

fn forward(rates: &[f64], lambda: f64, t: f64) -> f64 {
    let sum: f64 = rates.iter().map(|r| (-lambda * r * t).exp()).sum();
    sum / rates.len() as f64
}

/// Expected overlap after time `t`: `(1/M) Σ exp(-λ rate_i t)`, summed in item
/// order.
pub fn forward_overlap(profile: &RateProfile, lambda: f64, t: f64) -> Result<f64> {
    let rates = profile_rates(profile)?;
    check_lambda(lambda)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(ChronoError::Time(t));
    }
    Ok(forward(&rates, lambda, t))
}

/// Solves `forward(T) = target` on `[0, ∞)` for a forward map that is
/// non-increasing in `T`. The bracket starts at `[0, 1]` and doubles until the
/// forward value drops below the target; bisection then runs until the bracket
/// is narrower than `tolerance`.
fn invert_monotone<F>(target: f64, tolerance: f64, infimum: f64, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if target <= infimum {
        return Err(ChronoError::Divergent(target));
    }
    let mut lo = 0.0;
    let mut f_lo = f(lo);
    let mut hi = 1.0;
    let mut f_hi = f(hi);
    while f_hi > target {
        if f_hi > f_lo {
            return Err(ChronoError::NonMonotone(hi));
        }
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        if hi > MAX_TIME {
            return Err(ChronoError::Divergent(target));
        }
        f_hi = f(hi);
    }
    while hi - lo >= tolerance {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid > f_lo || f_mid < f_hi {
            return Err(ChronoError::NonMonotone(mid));
        }
        if f_mid > target {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The `T ≥ 0` at which the generalized model reaches `overlap`.
pub fn invert_time(overlap: f64, profile: &RateProfile, lambda: f64, tolerance: f64) -> Result<f64> {
    let rates = profile_rates(profile)?;
    invert_rates(overlap, &rates, lambda, tolerance)
}

fn invert_rates(overlap: f64, rates: &[f64], lambda: f64, tolerance: f64) -> Result<f64> {
    check_overlap(overlap)?;
    check_lambda(lambda)?;
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(ChronoError::Tolerance(tolerance));
    }
    if overlap == 1.0 {
        return Ok(0.0);
    }
    // items with rate 0 never decay, so the overlap cannot fall below their share
    let frozen = rates.iter().filter(|&&r| r == 0.0).count();
    let infimum = frozen as f64 / rates.len() as f64;
    invert_monotone(overlap, tolerance, infimum, |t| forward(rates, lambda, t))
}

/// Shape and scale of a Gamma rate density matched to a sample's mean and
/// population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFit {
    pub shape: f64,
    pub scale: f64,
    pub source_mean: f64,
    pub source_sd: f64,
}

impl GammaFit {
    /// `shape = (mean/sd)²`, `scale = sd²/mean`.
    pub fn from_moments(mean: f64, sd: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(ChronoError::DegenerateFit("mean must be positive"));
        }
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(ChronoError::DegenerateFit("zero variance"));
        }
        Ok(Self { shape: (mean / sd).powi(2), scale: sd * sd / mean, source_mean: mean, source_sd: sd })
    }

    /// The density at `s`.
    pub fn density(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let z = self.shape;
        ((z - 1.0) * s.ln() - s / self.scale - ln_gamma(z) - z * self.scale.ln()).exp()
    }

    /// Closed-form overlap after time `t`: `(1 + λ P t)^-Z`.
    pub fn forward(&self, lambda: f64, t: f64) -> f64 {
        (1.0 + lambda * self.scale * t).powf(-self.shape)
    }
}

// Lanczos approximation (g = 7, n = 9), accurate to ~1e-15 for positive x.
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Method-of-moments Gamma fit to a list of rates (population standard
/// deviation).
pub fn fit_gamma_moments(rates: &[f64]) -> Result<GammaFit> {
    if rates.len() < 2 {
        return Err(ChronoError::DegenerateFit("need at least 2 rates"));
    }
    if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(ChronoError::DegenerateFit("rates must be finite and non-negative"));
    }
    if rates.iter().all(|&r| r == rates[0]) {
        return Err(ChronoError::DegenerateFit("zero variance"));
    }
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    GammaFit::from_moments(mean, var.sqrt())
}

/// `T = (overlap^(-1/Z) - 1) / (λ P)`.
pub fn gamma_time(overlap: f64, lambda: f64, fit: &GammaFit) -> Result<f64> {
    check_overlap(overlap)?;
    check_lambda(lambda)?;
    let t = (overlap.powf(-1.0 / fit.shape) - 1.0) / (lambda * fit.scale);
    if t.is_finite() {
        Ok(t.max(0.0))
    } else {
        Err(ChronoError::Divergent(overlap))
    }
}

/// The λ at which the generalized model reproduces `overlap` after `known_t`.
///
/// The forward map depends on λ only through `λ T`, so this bisects on the
/// product with λ = 1 and divides by `known_t`.
pub fn calibrate_lambda_from_overlap(overlap: f64, profile: &RateProfile, known_t: f64, tolerance: f64) -> Result<f64> {
    if !(known_t > 0.0 && known_t.is_finite()) {
        return Err(ChronoError::Time(known_t));
    }
    check_overlap(overlap)?;
    if overlap == 1.0 {
        return Err(ChronoError::CalibrationImpossible(known_t));
    }
    let product = invert_time(overlap, profile, 1.0, tolerance)?;
    let lambda = product / known_t;
    check_lambda(lambda)?;
    Ok(lambda)
}

/// Calibrates λ from one historically dated language pair of `db`.
pub fn calibrate_lambda(
    db: &LexicalDatabase,
    profile: &RateProfile,
    pair: (&str, &str),
    known_t: f64,
    scorer: SimilarityScorer,
) -> Result<f64> {
    let idx = |l: &str| db.language_index(l).ok_or_else(|| ChronoError::UnknownLanguage(l.to_string()));
    let (a, b) = (idx(pair.0)?, idx(pair.1)?);
    let overlap = language_overlap(db, a, b, scorer)?;
    calibrate_lambda_from_overlap(overlap.value, profile, known_t, DEFAULT_TOLERANCE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeMethod {
    /// Single rate `λ · mean(s_i)`.
    Classic,
    /// Numerical inversion of the per-item model.
    Generalized,
    /// Closed form for a Gamma density fitted to the rates.
    GammaClosedForm,
}

impl fmt::Display for TimeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeMethod::Classic => "classic",
            TimeMethod::Generalized => "generalized",
            TimeMethod::GammaClosedForm => "gamma",
        })
    }
}

impl FromStr for TimeMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "classic" => Ok(Self::Classic),
            "generalized" => Ok(Self::Generalized),
            "gamma" | "gamma-closed-form" => Ok(Self::GammaClosedForm),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

/// Symmetric matrix of pairwise time distances. `None` entries are pairs
/// without comparable items or with a divergent time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDistanceMatrix {
    labels: Vec<String>,
    times: Vec<Option<f64>>,
    pub method: TimeMethod,
    pub lambda_used: Option<f64>,
    /// Pairs whose overlap exceeded 1 and were clamped to T = 0.
    pub clamped: Vec<(usize, usize)>,
}

impl TimeDistanceMatrix {
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
        self.times[a * self.len() + b]
    }

    pub fn to_csv(&self) -> String {
        let lambda = self.lambda_used.map_or("none".to_string(), fmt_f64);
        matrix_csv(
            &format!(
                "time distance matrix in millennia; method {}; lambda {}; NA = undefined",
                self.method, lambda
            ),
            &self.labels,
            |a, b| fmt_opt(self.get(a, b)),
        )
    }
}

/// Applies `method` to every pair of an overlap matrix.
pub fn time_matrix_from_overlaps(
    overlaps: &OverlapMatrix,
    profile: &RateProfile,
    lambda: f64,
    method: TimeMethod,
    tolerance: f64,
) -> Result<TimeDistanceMatrix> {
    check_lambda(lambda)?;
    let rates = profile_rates(profile)?;
    let pair_time: Box<dyn Fn(f64) -> Result<f64> + Sync> = match method {
        TimeMethod::Classic => {
            let mean = rates.iter().sum::<f64>() / rates.len() as f64;
            let rate = lambda * mean;
            Box::new(move |c| classic_time(c, rate))
        }
        TimeMethod::Generalized => {
            let rates = rates.clone();
            Box::new(move |c| invert_rates(c, &rates, lambda, tolerance))
        }
        TimeMethod::GammaClosedForm => {
            let fit = fit_gamma_moments(&rates)?;
            Box::new(move |c| gamma_time(c, lambda, &fit))
        }
    };

    let n = overlaps.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let results: Vec<(Option<f64>, bool)> = pairs
        .par_iter()
        .map(|&(a, b)| match overlaps.get(a, b) {
            None => Ok((None, false)),
            Some(c) if c > 1.0 => Ok((Some(0.0), true)),
            Some(c) => match pair_time(c) {
                Ok(t) => Ok((Some(t), false)),
                Err(ChronoError::Divergent(_)) => Ok((None, false)),
                Err(e) => Err(e),
            },
        })
        .collect::<Result<_>>()?;

    let mut times = vec![None; n * n];
    for a in 0..n {
        times[a * n + a] = Some(0.0);
    }
    let mut clamped = Vec::new();
    for (&(a, b), (t, was_clamped)) in pairs.iter().zip(results) {
        times[a * n + b] = t;
        times[b * n + a] = t;
        if was_clamped {
            clamped.push((a, b));
        }
    }
    Ok(TimeDistanceMatrix {
        labels: overlaps.labels().to_vec(),
        times,
        method,
        lambda_used: Some(lambda),
        clamped,
    })
}

/// Overlap matrix of `db` followed by [`time_matrix_from_overlaps`].
pub fn time_matrix(
    db: &LexicalDatabase,
    profile: &RateProfile,
    lambda: f64,
    scorer: SimilarityScorer,
    method: TimeMethod,
    tolerance: f64,
) -> Result<TimeDistanceMatrix> {
    let overlaps = overlap_matrix(db, scorer)?;
    time_matrix_from_overlaps(&overlaps, profile, lambda, method, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::StabilityKind;
    use crate::wordlist::load_database;
    use std::f64::consts::LN_2;

    fn profile(rates: &[f64]) -> RateProfile {
        let ids = (0..rates.len()).map(|i| format!("i{i:03}")).collect();
        RateProfile::from_rates(ids, rates.to_vec(), StabilityKind::Estimated)
    }

    #[test]
    fn classic_examples() {
        assert_eq!(classic_time(1.0, 0.3).unwrap(), 0.0);
        assert!((classic_time((-1.0f64).exp(), 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(classic_time(0.0, 1.0), Err(ChronoError::Divergent(0.0)));
        assert_eq!(classic_time(1.2, 1.0), Err(ChronoError::OverlapDomain(1.2)));
        assert_eq!(classic_time(0.5, 0.0), Err(ChronoError::Rate(0.0)));
        // an anchor pair fixes the universal rate: r = -ln(C) / 2.2
        let c = 0.6;
        let r = -f64::ln(c) / NORWEGIAN_ICELANDIC_SEPARATION;
        assert!((classic_time(c, r).unwrap() - 2.2).abs() < 1e-12);
    }

    #[test]
    fn forward_examples() {
        let p = profile(&[0.2, 0.5, 0.9]);
        assert_eq!(forward_overlap(&p, 1.0, 0.0).unwrap(), 1.0);
        let h = profile(&[0.4; 5]);
        assert!((forward_overlap(&h, 1.5, 2.0).unwrap() - (-1.2f64).exp()).abs() < 1e-15);
        let two = profile(&[LN_2, 2.0 * LN_2]);
        assert!((forward_overlap(&two, 1.0, 1.0).unwrap() - 0.375).abs() < 1e-15);

        let mut gap = p.clone();
        gap.rates[1] = None;
        assert_eq!(forward_overlap(&gap, 1.0, 1.0), Err(ChronoError::ProfileIncomplete));
        assert_eq!(forward_overlap(&p, 1.0, -1.0), Err(ChronoError::Time(-1.0)));
    }

    #[test]
    fn invert_examples() {
        let p = profile(&[0.2, 0.5, 0.9, 0.35]);
        assert_eq!(invert_time(1.0, &p, 1.0, DEFAULT_TOLERANCE).unwrap(), 0.0);
        let c = forward_overlap(&p, 1.0, 2.0).unwrap();
        let t = invert_time(c, &p, 1.0, DEFAULT_TOLERANCE).unwrap();
        assert!((t - 2.0).abs() < 1e-9);

        let h = profile(&[0.53; 10]);
        let t = invert_time(0.3, &h, 1.3, DEFAULT_TOLERANCE).unwrap();
        assert!((t - classic_time(0.3, 1.3 * 0.53).unwrap()).abs() < 1e-9);

        assert_eq!(invert_time(0.0, &p, 1.0, 1e-9), Err(ChronoError::Divergent(0.0)));
        assert_eq!(invert_time(0.5, &p, 1.0, 0.0), Err(ChronoError::Tolerance(0.0)));
        assert_eq!(invert_time(0.5, &p, 0.0, 1e-9), Err(ChronoError::Lambda(0.0)));
    }

    #[test]
    fn invert_with_frozen_items() {
        let p = profile(&[0.0, 0.5]);
        assert_eq!(invert_time(0.5, &p, 1.0, 1e-9), Err(ChronoError::Divergent(0.5)));
        let t = invert_time(0.6, &p, 1.0, 1e-12).unwrap();
        assert!((forward_overlap(&p, 1.0, t).unwrap() - 0.6).abs() < 1e-10);
        // far-out overlaps still invert
        let q = profile(&[0.5, 0.7]);
        let t = invert_time(1e-200, &q, 1.0, 1e-6).unwrap();
        assert!(t > 900.0);
    }

    #[test]
    fn gamma_fit_examples() {
        let fit = GammaFit::from_moments(0.53, 0.20).unwrap();
        assert!((fit.shape - 7.0225).abs() < 1e-12);
        assert!((fit.scale - 0.04 / 0.53).abs() < 1e-15);
        assert_eq!(fit_gamma_moments(&[0.4, 0.4, 0.4]), Err(ChronoError::DegenerateFit("zero variance")));
        // population sd of {0, 2} is 1
        let unit = fit_gamma_moments(&[0.0, 2.0]).unwrap();
        assert_eq!((unit.shape, unit.scale), (1.0, 1.0));
        assert!(fit_gamma_moments(&[1.0]).is_err());
    }

    #[test]
    fn gamma_time_examples() {
        let fit = GammaFit { shape: 7.0, scale: 0.076, source_mean: 0.532, source_sd: 0.201 };
        assert_eq!(gamma_time(1.0, 1.0, &fit).unwrap(), 0.0);
        let c = fit.forward(1.0, 3.0);
        assert!((c - 1.228f64.powi(-7)).abs() < 1e-15);
        assert!((c - 0.2375).abs() < 5e-5);
        assert!((gamma_time(c, 1.0, &fit).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(gamma_time(0.0, 1.0, &fit), Err(ChronoError::Divergent(0.0)));

        // large shape at fixed mean tends to the single-rate formula
        let mean = 7.0 * 0.076;
        let wide = GammaFit { shape: 1e6, scale: mean / 1e6, source_mean: mean, source_sd: 0.0 };
        let g = gamma_time(0.3, 1.0, &wide).unwrap();
        let k = classic_time(0.3, mean).unwrap();
        assert!((g - k).abs() / k < 1e-5);
    }

    #[test]
    fn gamma_density_integrates_to_one() {
        let fit = GammaFit::from_moments(0.53, 0.2).unwrap();
        let h = 1e-4;
        let total: f64 = (1..40_000).map(|i| fit.density(i as f64 * h) * h).sum();
        assert!((total - 1.0).abs() < 1e-6);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn calibration_examples() {
        let p = profile(&[0.2, 0.5, 0.9, 0.35]);
        let c = forward_overlap(&p, 1.7, SARDINIAN_SICILIAN_SEPARATION).unwrap();
        let lambda = calibrate_lambda_from_overlap(c, &p, SARDINIAN_SICILIAN_SEPARATION, DEFAULT_TOLERANCE).unwrap();
        assert!((lambda - 1.7).abs() < 1e-9);
        let scaled = calibrate_lambda_from_overlap(c, &p, 2.0 * SARDINIAN_SICILIAN_SEPARATION, DEFAULT_TOLERANCE).unwrap();
        assert!((scaled - lambda / 2.0).abs() < 1e-9);
        assert_eq!(
            calibrate_lambda_from_overlap(1.0, &p, 3.0, DEFAULT_TOLERANCE),
            Err(ChronoError::CalibrationImpossible(3.0))
        );
    }

    const HEADER: &str = "language\titem_id\tgloss\tform\tcognate_class\n";

    fn fixture() -> LexicalDatabase {
        let src = format!(
            "{HEADER}a\ti1\tx\tmano\t\nb\ti1\tx\tmain\t\nc\ti1\tx\tmano\t\nd\ti1\tx\tmano\t\n\
             a\ti2\ty\tacqua\t\nb\ti2\ty\teau\t\nc\ti2\ty\tagua\t\nd\ti2\ty\tacqua\t\n\
             a\ti3\tz\tpietra\t\nb\ti3\tz\tpierre\t\nc\ti3\tz\tpiedra\t\nd\ti3\tz\tpietra\t\n"
        );
        load_database(&src, None).unwrap().database
    }

    #[test]
    fn time_matrix_examples() {
        let db = fixture();
        let p = profile(&[0.3, 0.6, 0.45]);
        let m = time_matrix(&db, &p, 1.0, SimilarityScorer::Nld, TimeMethod::Generalized, DEFAULT_TOLERANCE).unwrap();
        let ov = overlap_matrix(&db, SimilarityScorer::Nld).unwrap();
        assert_eq!(m.get(0, 3), Some(0.0));
        for a in 0..4 {
            assert_eq!(m.get(a, a), Some(0.0));
            for b in 0..4 {
                assert_eq!(m.get(a, b), m.get(b, a));
                if a != b {
                    let t = invert_time(ov.get(a, b).unwrap(), &p, 1.0, DEFAULT_TOLERANCE).unwrap();
                    assert_eq!(m.get(a, b), Some(t));
                }
            }
        }

        let h = profile(&[0.4, 0.4, 0.4]);
        let g = time_matrix(&db, &h, 1.2, SimilarityScorer::Nld, TimeMethod::Generalized, 1e-12).unwrap();
        let k = time_matrix(&db, &h, 1.2, SimilarityScorer::Nld, TimeMethod::Classic, 1e-12).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert!((g.get(a, b).unwrap() - k.get(a, b).unwrap()).abs() < 1e-9);
            }
        }
        let gm = time_matrix(&db, &p, 1.0, SimilarityScorer::Nld, TimeMethod::GammaClosedForm, 1e-12).unwrap();
        assert!(gm.get(0, 1).unwrap() > 0.0);
        assert!(gm.to_csv().starts_with("# schema: time distance matrix"));
    }

    #[test]
    fn divergent_pairs_are_undefined() {
        let src = format!("{HEADER}a\ti1\tx\tab\t\nb\ti1\tx\tcd\t\na\ti2\ty\tef\t\nb\ti2\ty\tgh\t\n");
        let db = load_database(&src, None).unwrap().database;
        let m = time_matrix(&db, &profile(&[0.5, 0.5]), 1.0, SimilarityScorer::Nld, TimeMethod::Generalized, 1e-9)
            .unwrap();
        assert_eq!(m.get(0, 1), None);
        assert_eq!(m.get(0, 0), Some(0.0));
    }
}

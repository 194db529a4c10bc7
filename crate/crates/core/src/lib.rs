//! Lexicostatistics from Swadesh-style wordlists.
//!
//! The pipeline runs wordlist → word similarity → language overlaps →
//! per-item stabilities → replacement rates → divergence times. Stability
//! rankings can also be compared across families, and a stochastic simulator
//! produces families with known rates and separations for validation.
//!
//! | module | contents |
//! |---|---|
//! | [`wordlist`] | `tsv-long-v1` parsing, normalization, subsetting |
//! | [`metric`] | Levenshtein, NLD, slot similarity, overlap matrices |
//! | [`stability`] | actual/estimated stability, rates, λ fit, correlations |
//! | [`chrono`] | classic, generalized and Gamma closed-form time distances |
//! | [`ranking`] | stability rankings and the `c(m)` curve |
//! | [`simgen`] | vocabulary evolution simulator |
//! | [`cli`] | command-line front end |

pub mod chrono;
pub mod cli;
pub mod csvio;
pub mod metric;
pub mod ranking;
pub mod simgen;
pub mod stability;
pub mod wordlist;

pub use chrono::{ChronoError, GammaFit, TimeDistanceMatrix, TimeMethod};
pub use metric::{MetricError, OverlapMatrix, SimilarityScorer};
pub use ranking::{CommonCountCurve, RankedList, RankingError};
pub use simgen::{FamilyTree, SimConfig, SimError};
pub use stability::{LambdaFit, RateProfile, StabilityError, StabilityKind, StabilityTable};
pub use wordlist::{LexicalDatabase, WordlistError};

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Wordlist(#[from] WordlistError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Chrono(#[from] ChronoError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

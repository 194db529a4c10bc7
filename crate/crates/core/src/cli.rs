//! Command-line front end.
//!
//! Every subcommand reads `tsv-long-v1` files and writes CSV files whose
//! first line is a `# schema:` comment. Outputs go through a temporary file in
//! the destination directory and are renamed into place.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::chrono::{self, ChronoError, TimeMethod, DEFAULT_TOLERANCE};
use crate::metric::{overlap_matrix, SimilarityScorer};
use crate::ranking::{common_count_curve, compare_families, rank_items, random_baseline_band, RankingError};
use crate::simgen::{self, FamilyTree, RateSource, SimConfig};
use crate::stability::{
    actual_stability, estimated_stability, fit_lambda, pair_rates, pair_stabilities, pearson, rate_histogram,
    rates_from_stability, spearman, RateProfile, StabilityKind, StabilityTable, LATE_CLASSICAL_LATIN_DEPTH,
    VULGAR_LATIN_DEPTH,
};
use crate::wordlist::{load_database, subset, LexicalDatabase, Role};
use crate::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_WORDLIST: i32 = 4;
pub const EXIT_METRIC: i32 = 5;
pub const EXIT_STABILITY: i32 = 6;
pub const EXIT_CHRONO: i32 = 7;
pub const EXIT_RANKING: i32 = 8;
pub const EXIT_SIMULATION: i32 = 9;

const EXIT_CODES_HELP: &str = "\
Exit codes:
  0  success
  2  usage error (bad flags, conflicting options, input/output path clash)
  3  I/O error
  4  wordlist or metadata error
  5  similarity/overlap error
  6  stability, rate or lambda error
  7  time-distance error
  8  ranking error
  9  simulation error

On failure one JSON object is written to stderr, e.g.
  {\"error\":\"wordlist\",\"exit_code\":4,\"message\":\"line 3: expected 5 columns, found 2\"}";

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "glottokit", version, about = "Lexicostatistics and rate-heterogeneous glottochronology", after_help = EXIT_CODES_HELP)]
pub struct Command {
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, global = true, env = "GLOTTOKIT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Action {
    /// Parse a wordlist and print a summary.
    Validate {
        #[command(flatten)]
        input: DbArgs,
        /// Also write the summary to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise language overlaps; support counts go to `<out>.support.csv`.
    Overlap {
        #[command(flatten)]
        input: DbArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-item stabilities.
    Stability {
        #[command(flatten)]
        input: DbArgs,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-item replacement rates.
    Rates {
        #[command(flatten)]
        input: DbArgs,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Time constant in millennia (1.5 = Vulgar Latin, 1.85 = Late Classical Latin).
        #[arg(long = "time-constant", default_value_t = VULGAR_LATIN_DEPTH)]
        time_constant: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regress actual on estimated rates through the origin.
    FitLambda {
        #[command(flatten)]
        input: DbArgs,
        /// Time constant for actual rates.
        #[arg(long, default_value_t = VULGAR_LATIN_DEPTH)]
        t: f64,
        /// Nominal time constant for estimated rates.
        #[arg(long, default_value_t = VULGAR_LATIN_DEPTH)]
        ts: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the paired rates used by the fit.
        #[arg(long)]
        scatter: Option<PathBuf>,
    },
    /// Time-distance matrix. Without --lambda or --anchor, lambda is fitted
    /// against the proto-language.
    Chrono {
        #[command(flatten)]
        input: DbArgs,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Rates that define the profile.
        #[arg(long, value_enum, default_value = "estimated")]
        rates: KindArg,
        #[arg(long = "time-constant", default_value_t = VULGAR_LATIN_DEPTH)]
        time_constant: f64,
        #[arg(long, conflicts_with = "anchor")]
        lambda: Option<f64>,
        /// Calibrate lambda on a dated pair, `A:B=T`.
        #[arg(long, value_parser = parse_anchor)]
        anchor: Option<Anchor>,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Items ranked by stability, optionally with the c(m) curve against the
    /// other stability kind.
    Ranking {
        #[command(flatten)]
        input: DbArgs,
        #[arg(long, value_enum, default_value = "estimated")]
        kind: KindArg,
        #[arg(long)]
        out: PathBuf,
        /// Write c(m) of estimated vs actual rankings (needs a proto-language).
        #[arg(long)]
        curve: Option<PathBuf>,
        #[command(flatten)]
        band: BandArgs,
    },
    /// c(m) curve of two families (or two tagged groups of one family).
    Compare {
        #[arg(long = "db-a")]
        db_a: PathBuf,
        #[arg(long = "meta-a")]
        meta_a: Option<PathBuf>,
        /// Defaults to --db-a.
        #[arg(long = "db-b")]
        db_b: Option<PathBuf>,
        #[arg(long = "meta-b")]
        meta_b: Option<PathBuf>,
        /// Keep only languages with this tag in family A.
        #[arg(long = "tag-a")]
        tag_a: Option<String>,
        #[arg(long = "tag-b")]
        tag_b: Option<String>,
        #[arg(long, value_enum, default_value = "nld")]
        scorer: ScorerArg,
        #[command(flatten)]
        band: BandArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a family. Writes `<out>`, `<stem>.meta`,
    /// `<stem>.truth_rates.csv` and `<stem>.truth_times.csv`.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        /// Star tree with this many leaves.
        #[arg(long, default_value_t = 60, conflicts_with = "clades")]
        leaves: usize,
        /// Clade tree, e.g. `east=14,west=41`.
        #[arg(long, value_parser = parse_clades)]
        clades: Option<Clades>,
        /// Root-to-leaf depth in millennia.
        #[arg(long, default_value_t = VULGAR_LATIN_DEPTH)]
        depth: f64,
        /// Depth of clade ancestors below the root.
        #[arg(long = "clade-depth", default_value_t = 0.5)]
        clade_depth: f64,
        #[arg(long, default_value_t = 110)]
        items: usize,
        #[arg(long = "gamma-shape", default_value_t = 7.0)]
        gamma_shape: f64,
        #[arg(long = "gamma-scale", default_value_t = 0.076)]
        gamma_scale: f64,
        #[arg(long, default_value_t = 26)]
        alphabet: usize,
        #[arg(long = "min-len", default_value_t = 5)]
        min_len: usize,
        #[arg(long = "max-len", default_value_t = 8)]
        max_len: usize,
        #[arg(long = "mutation-rate", default_value_t = 0.0)]
        mutation_rate: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Do not emit the proto-language.
        #[arg(long = "no-proto")]
        no_proto: bool,
    },
    /// Full pipeline on a family with a proto-language; one CSV per figure.
    Report {
        #[command(flatten)]
        input: DbArgs,
        #[arg(long, default_value_t = VULGAR_LATIN_DEPTH)]
        t: f64,
        #[arg(long, default_value_t = VULGAR_LATIN_DEPTH)]
        ts: f64,
        #[arg(long, value_enum, default_value = "generalized")]
        method: MethodArg,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// `item_id,true_rate` file from `simulate`.
        #[arg(long = "truth-rates")]
        truth_rates: Option<PathBuf>,
        /// Two tags defining the groups compared in the family curve, `A,B`.
        #[arg(long, value_parser = parse_split)]
        split: Option<(String, String)>,
        #[command(flatten)]
        band: BandArgs,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct DbArgs {
    /// Wordlist in tsv-long-v1 format.
    #[arg(long)]
    pub db: PathBuf,
    /// Metadata sidecar (family name, roles, tags).
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "nld")]
    pub scorer: ScorerArg,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct BandArgs {
    /// Random ranking pairs for the chance band.
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Actual,
    Estimated,
}

impl From<KindArg> for StabilityKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Actual => StabilityKind::Actual,
            KindArg::Estimated => StabilityKind::Estimated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerArg {
    Nld,
    #[value(alias = "binary-cognacy")]
    Cognate,
}

impl From<ScorerArg> for SimilarityScorer {
    fn from(s: ScorerArg) -> Self {
        match s {
            ScorerArg::Nld => SimilarityScorer::Nld,
            ScorerArg::Cognate => SimilarityScorer::BinaryCognacy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Classic,
    Generalized,
    Gamma,
}

impl From<MethodArg> for TimeMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Classic => TimeMethod::Classic,
            MethodArg::Generalized => TimeMethod::Generalized,
            MethodArg::Gamma => TimeMethod::GammaClosedForm,
        }
    }
}

/// A language pair with a known separation.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub a: String,
    pub b: String,
    pub time: f64,
}

fn parse_anchor(s: &str) -> std::result::Result<Anchor, String> {
    let (pair, t) = s.rsplit_once('=').ok_or("expected A:B=T")?;
    let (a, b) = pair.split_once(':').ok_or("expected A:B=T")?;
    let time: f64 = t.trim().parse().map_err(|_| format!("bad time {t:?}"))?;
    if a.is_empty() || b.is_empty() {
        return Err("empty language label".into());
    }
    Ok(Anchor { a: a.to_string(), b: b.to_string(), time })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clades(pub Vec<(String, usize)>);

fn parse_clades(s: &str) -> std::result::Result<Clades, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let (name, n) = part.split_once('=').ok_or("expected NAME=COUNT[,NAME=COUNT...]")?;
        let n: usize = n.trim().parse().map_err(|_| format!("bad count {n:?}"))?;
        out.push((name.trim().to_string(), n));
    }
    Ok(Clades(out))
}

fn parse_split(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once(',') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
        _ => Err("expected TAG_A,TAG_B".into()),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Lib(e) => match e {
                Error::Wordlist(_) => EXIT_WORDLIST,
                Error::Metric(_) => EXIT_METRIC,
                Error::Stability(_) => EXIT_STABILITY,
                Error::Chrono(_) => EXIT_CHRONO,
                Error::Ranking(_) => EXIT_RANKING,
                Error::Sim(_) => EXIT_SIMULATION,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Lib(e) => match e {
                Error::Wordlist(_) => "wordlist",
                Error::Metric(_) => "metric",
                Error::Stability(_) => "stability",
                Error::Chrono(_) => "chrono",
                Error::Ranking(_) => "ranking",
                Error::Sim(_) => "simulation",
            },
        }
    }

    /// One-line JSON rendering for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

macro_rules! lib_err {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Lib(e.into())
            }
        }
    )*};
}
lib_err!(
    crate::wordlist::WordlistError,
    crate::metric::MetricError,
    crate::stability::StabilityError,
    ChronoError,
    RankingError,
    crate::simgen::SimError
);

type Result<T> = std::result::Result<T, CliError>;

/// Parses arguments (including the program name).
pub fn parse_args<I, T>(args: I) -> std::result::Result<Command, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Command::try_parse_from(args)
}

/// Runs a command and returns the process exit status, reporting failures on
/// stderr.
pub fn execute(cmd: &Command) -> i32 {
    match run(cmd) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

/// Runs a command inside a thread pool of the requested size.
pub fn run(cmd: &Command) -> Result<()> {
    check_paths(&cmd.action)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cmd.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cmd.action))
}

fn check_paths(action: &Action) -> Result<()> {
    let (inputs, outputs): (Vec<&Path>, Vec<PathBuf>) = match action {
        Action::Validate { input, out } => (input.paths(), out.iter().cloned().collect()),
        Action::Overlap { input, out } => (input.paths(), vec![out.clone(), support_path(out)]),
        Action::Stability { input, out, .. } | Action::Rates { input, out, .. } | Action::Chrono { input, out, .. } => {
            (input.paths(), vec![out.clone()])
        }
        Action::FitLambda { input, out, scatter, .. } => {
            (input.paths(), std::iter::once(out.clone()).chain(scatter.clone()).collect())
        }
        Action::Ranking { input, out, curve, .. } => {
            (input.paths(), std::iter::once(out.clone()).chain(curve.clone()).collect())
        }
        Action::Compare { db_a, meta_a, db_b, meta_b, out, .. } => {
            let ins = [Some(db_a), meta_a.as_ref(), db_b.as_ref(), meta_b.as_ref()]
                .into_iter()
                .flatten()
                .map(PathBuf::as_path)
                .collect();
            (ins, vec![out.clone()])
        }
        Action::Simulate { out, .. } => (Vec::new(), simulate_paths(out).to_vec()),
        Action::Report { input, truth_rates, out_dir, .. } => {
            let mut ins = input.paths();
            ins.extend(truth_rates.as_deref());
            (ins, REPORT_FILES.iter().map(|f| out_dir.join(f)).collect())
        }
    };
    let resolved_in: Vec<PathBuf> = inputs.iter().map(|p| resolve(p)).collect();
    let mut seen = Vec::new();
    for out in &outputs {
        let r = resolve(out);
        if resolved_in.contains(&r) {
            return Err(CliError::Usage(format!("output {} would overwrite an input", out.display())));
        }
        if seen.contains(&r) {
            return Err(CliError::Usage(format!("output {} is named twice", out.display())));
        }
        seen.push(r);
    }
    Ok(())
}

fn resolve(p: &Path) -> PathBuf {
    if let Ok(c) = p.canonicalize() {
        return c;
    }
    let parent = match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    match (parent.canonicalize(), p.file_name()) {
        (Ok(d), Some(f)) => d.join(f),
        _ => p.to_path_buf(),
    }
}

impl DbArgs {
    fn paths(&self) -> Vec<&Path> {
        std::iter::once(self.db.as_path()).chain(self.meta.as_deref()).collect()
    }

    fn load(&self) -> Result<LexicalDatabase> {
        Ok(load(&self.db, self.meta.as_deref())?.0)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load(db: &Path, meta: Option<&Path>) -> Result<(LexicalDatabase, Vec<String>)> {
    let src = read(db)?;
    let meta = meta.map(read).transpose()?;
    let parsed = load_database(&src, meta.as_deref())?;
    let warnings = parsed.warnings.iter().map(|w| w.to_string()).collect();
    Ok((parsed.database, warnings))
}

/// Writes `contents` to a temporary file next to `path` and renames it over
/// `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn support_path(out: &Path) -> PathBuf {
    with_suffix(out, "support.csv")
}

/// `dir/stem.suffix`, where `stem` drops the last extension of `path`.
fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn simulate_paths(out: &Path) -> [PathBuf; 4] {
    [
        out.to_path_buf(),
        with_suffix(out, "meta"),
        with_suffix(out, "truth_rates.csv"),
        with_suffix(out, "truth_times.csv"),
    ]
}

const REPORT_FILES: [&str; 11] = [
    "fig1_stability_scatter.csv",
    "fig2_ranking_curve.csv",
    "fig3_rate_scatter.csv",
    "fig4_rate_histogram.csv",
    "fig5_family_curve.csv",
    "overlap.csv",
    "overlap_support.csv",
    "lambda.csv",
    "time_matrix.csv",
    "truth_comparison.csv",
    "summary.csv",
];

fn stability(db: &LexicalDatabase, kind: StabilityKind, scorer: SimilarityScorer) -> Result<StabilityTable> {
    Ok(match kind {
        StabilityKind::Actual => actual_stability(db, scorer)?,
        StabilityKind::Estimated => estimated_stability(db, scorer)?,
    })
}

fn dispatch(action: &Action) -> Result<()> {
    match action {
        Action::Validate { input, out } => {
            let (db, warnings) = load(&input.db, input.meta.as_deref())?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            let summary = validate_summary(&db, warnings.len());
            print!("{summary}");
            if let Some(out) = out {
                write_atomic(out, &summary)?;
            }
        }
        Action::Overlap { input, out } => {
            let db = input.load()?;
            let m = overlap_matrix(&db, input.scorer.into())?;
            write_atomic(out, &m.to_csv())?;
            write_atomic(&support_path(out), &m.support_csv())?;
        }
        Action::Stability { input, kind, out } => {
            let db = input.load()?;
            write_atomic(out, &stability(&db, (*kind).into(), input.scorer.into())?.to_csv())?;
        }
        Action::Rates { input, kind, time_constant, out } => {
            let db = input.load()?;
            let table = stability(&db, (*kind).into(), input.scorer.into())?;
            write_atomic(out, &rates_from_stability(&table, *time_constant)?.to_csv())?;
        }
        Action::FitLambda { input, t, ts, out, scatter } => {
            let db = input.load()?;
            let (r, s) = both_profiles(&db, input.scorer.into(), *t, *ts)?;
            write_atomic(out, &fit_lambda(&r, &s)?.to_csv())?;
            if let Some(path) = scatter {
                write_atomic(path, &pair_rates(&r, &s)?.to_csv("r", "s"))?;
            }
        }
        Action::Chrono { input, method, rates, time_constant, lambda, anchor, tolerance, out } => {
            let db = input.load()?;
            let scorer: SimilarityScorer = input.scorer.into();
            let table = stability(&db, (*rates).into(), scorer)?;
            let profile = rates_from_stability(&table, *time_constant)?;
            let lambda = match (lambda, anchor) {
                (Some(l), _) => *l,
                (None, Some(a)) => chrono::calibrate_lambda(&db, &profile, (&a.a, &a.b), a.time, scorer)?,
                (None, None) => {
                    let (r, s) = both_profiles(&db, scorer, *time_constant, *time_constant)?;
                    fit_lambda(&r, &s)?.lambda
                }
            };
            let matrix = chrono::time_matrix(&db, &profile, lambda, scorer, (*method).into(), *tolerance)?;
            write_atomic(out, &matrix.to_csv())?;
        }
        Action::Ranking { input, kind, out, curve, band } => {
            let db = input.load()?;
            let scorer: SimilarityScorer = input.scorer.into();
            let table = stability(&db, (*kind).into(), scorer)?;
            let (defined, _) = table.defined_only();
            let ranked = rank_items(&defined)?;
            write_atomic(out, &ranked.to_csv(&glosses(&db)))?;
            if let Some(path) = curve {
                let s = estimated_stability(&db, scorer)?;
                let r = actual_stability(&db, scorer)?;
                write_atomic(path, &stability_curve_csv(&s, &r, band)?)?;
            }
        }
        Action::Compare { db_a, meta_a, db_b, meta_b, tag_a, tag_b, scorer, band, out } => {
            let (a, _) = load(db_a, meta_a.as_deref())?;
            let b = match db_b {
                Some(p) => load(p, meta_b.as_deref())?.0,
                None => a.clone(),
            };
            let a = restrict_to_tag(&a, tag_a.as_deref())?;
            let b = restrict_to_tag(&b, tag_b.as_deref())?;
            write_atomic(out, &family_curve_csv(&a, &b, (*scorer).into(), band)?)?;
        }
        Action::Simulate {
            out,
            leaves,
            clades,
            depth,
            clade_depth,
            items,
            gamma_shape,
            gamma_scale,
            alphabet,
            min_len,
            max_len,
            mutation_rate,
            seed,
            no_proto,
        } => {
            let tree = match clades {
                Some(Clades(c)) => {
                    let layout: Vec<(&str, usize)> = c.iter().map(|(n, k)| (n.as_str(), *k)).collect();
                    FamilyTree::clades(&layout, *clade_depth, *depth)?
                }
                None => FamilyTree::star(*leaves, *depth, "l")?,
            };
            let config = SimConfig {
                items: *items,
                rate_source: RateSource::Gamma { shape: *gamma_shape, scale: *gamma_scale },
                alphabet_size: *alphabet,
                min_len: *min_len,
                max_len: *max_len,
                mutation_rate: *mutation_rate,
                seed: *seed,
                emit_proto: !*no_proto,
            };
            let sim = simgen::run(&tree, &config)?;
            let [tsv, meta, rates, times] = simulate_paths(out);
            write_atomic(&tsv, &sim.database.to_tsv())?;
            write_atomic(&meta, &sim.database.to_metadata())?;
            write_atomic(&rates, &sim.truth.rates_csv())?;
            write_atomic(&times, &sim.truth.times_csv())?;
        }
        Action::Report { input, t, ts, method, tolerance, truth_rates, split, band, out_dir } => {
            let truth = truth_rates.as_deref().map(read_truth_rates).transpose()?;
            let outputs = report(&input.load()?, input.scorer.into(), *t, *ts, (*method).into(), *tolerance, truth, split.as_ref(), band)?;
            fs::create_dir_all(out_dir).map_err(|source| CliError::Io { path: out_dir.clone(), source })?;
            for (name, contents) in outputs {
                write_atomic(&out_dir.join(name), &contents)?;
            }
        }
    }
    Ok(())
}

fn validate_summary(db: &LexicalDatabase, warnings: usize) -> String {
    let modern = db.indices_with_role(Role::Modern).len();
    let proto = db.indices_with_role(Role::Proto).len();
    let total = db.language_count() * db.item_count();
    let filled = (0..db.language_count())
        .flat_map(|l| (0..db.item_count()).map(move |i| (l, i)))
        .filter(|&(l, i)| db.slot(l, i).is_some())
        .count();
    format!(
        "family={} languages={} modern={} proto={} items={} slots={}/{} warnings={}\n",
        db.family_name(),
        db.language_count(),
        modern,
        proto,
        db.item_count(),
        filled,
        total,
        warnings
    )
}

fn glosses(db: &LexicalDatabase) -> HashMap<String, String> {
    db.items().iter().map(|i| (i.item_id.clone(), i.gloss.clone())).collect()
}

fn both_profiles(db: &LexicalDatabase, scorer: SimilarityScorer, t: f64, ts: f64) -> Result<(RateProfile, RateProfile)> {
    let r = rates_from_stability(&actual_stability(db, scorer)?, t)?;
    let s = rates_from_stability(&estimated_stability(db, scorer)?, ts)?;
    Ok((r, s))
}

fn restrict_to_tag(db: &LexicalDatabase, tag: Option<&str>) -> Result<LexicalDatabase> {
    match tag {
        None => Ok(db.clone()),
        Some(tag) => Ok(subset(db, |l| l.role == Role::Modern && l.has_tag(tag), None)?),
    }
}

/// c(m) of the estimated-stability ranking against the actual-stability
/// ranking, over items where both are defined.
fn stability_curve_csv(s: &StabilityTable, r: &StabilityTable, band: &BandArgs) -> Result<String> {
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s.values[i].is_some() && r.values[i].is_some()).collect();
    let restrict = |t: &StabilityTable| StabilityTable {
        item_ids: keep.iter().map(|&i| t.item_ids[i].clone()).collect(),
        glosses: keep.iter().map(|&i| t.glosses[i].clone()).collect(),
        values: keep.iter().map(|&i| t.values[i]).collect(),
        kind: t.kind,
        languages_used: t.languages_used,
    };
    let curve = common_count_curve(&rank_items(&restrict(s))?, &rank_items(&restrict(r))?)?;
    let b = random_baseline_band(curve.item_count, band.trials, band.seed);
    Ok(curve.with_band(b).to_csv())
}

fn family_curve_csv(a: &LexicalDatabase, b: &LexicalDatabase, scorer: SimilarityScorer, band: &BandArgs) -> Result<String> {
    let cmp = compare_families(a, b, scorer)?;
    let rb = random_baseline_band(cmp.curve.item_count, band.trials, band.seed);
    Ok(cmp.curve.with_band(rb).to_csv())
}

fn read_truth_rates(path: &Path) -> Result<HashMap<String, f64>> {
    let text = read(path)?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let bad = |m: String| CliError::Usage(format!("{}: {m}", path.display()));
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let (Some(id), Some(v)) = (rec.get(0), rec.get(1)) else {
            return Err(bad("expected item_id,true_rate".into()));
        };
        let v: f64 = v.parse().map_err(|_| bad(format!("bad rate {v:?}")))?;
        out.insert(id.to_string(), v);
    }
    Ok(out)
}

/// Moderns split by two tags, or into first and second halves.
fn split_family(db: &LexicalDatabase, split: Option<&(String, String)>) -> Result<(LexicalDatabase, LexicalDatabase)> {
    match split {
        Some((ta, tb)) => Ok((restrict_to_tag(db, Some(ta))?, restrict_to_tag(db, Some(tb))?)),
        None => {
            let moderns: Vec<String> =
                db.indices_with_role(Role::Modern).iter().map(|&i| db.languages()[i].label.clone()).collect();
            let half = moderns.len() / 2;
            let first: BTreeSet<&str> = moderns[..half].iter().map(String::as_str).collect();
            let a = subset(db, |l| l.role == Role::Modern && first.contains(l.label.as_str()), None)?;
            let b = subset(db, |l| l.role == Role::Modern && !first.contains(l.label.as_str()), None)?;
            Ok((a, b))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn report(
    db: &LexicalDatabase,
    scorer: SimilarityScorer,
    t: f64,
    ts: f64,
    method: TimeMethod,
    tolerance: f64,
    truth: Option<HashMap<String, f64>>,
    split: Option<&(String, String)>,
    band: &BandArgs,
) -> Result<Vec<(&'static str, String)>> {
    let big_r = actual_stability(db, scorer)?;
    let big_s = estimated_stability(db, scorer)?;
    let r = rates_from_stability(&big_r, t)?;
    let s = rates_from_stability(&big_s, ts)?;
    let fit = fit_lambda(&r, &s)?;
    let paired_rates = pair_rates(&r, &s)?;
    let overlaps = overlap_matrix(db, scorer)?;
    let times = chrono::time_matrix_from_overlaps(&overlaps, &s, fit.lambda, method, tolerance)?;
    let (east, west) = split_family(db, split)?;

    let mut out = vec![
        ("fig1_stability_scatter.csv", pair_stabilities(&big_r, &big_s)?.to_csv("R", "S")),
        ("fig2_ranking_curve.csv", stability_curve_csv(&big_s, &big_r, band)?),
        ("fig3_rate_scatter.csv", paired_rates.to_csv("r", "s")),
        (
            "fig4_rate_histogram.csv",
            rate_histogram(&[&r.defined_rates(), &s.defined_rates()], 0.1).to_csv(&["r", "s"]),
        ),
        ("fig5_family_curve.csv", family_curve_csv(&east, &west, scorer, band)?),
        ("overlap.csv", overlaps.to_csv()),
        ("overlap_support.csv", overlaps.support_csv()),
        ("lambda.csv", fit.to_csv()),
        ("time_matrix.csv", times.to_csv()),
    ];

    let mut summary = crate::csvio::CsvTable::new("pipeline summary statistics", ["statistic", "value"]);
    let f = crate::csvio::fmt_f64;
    let corr = |x: &[f64], y: &[f64], sp: bool| {
        let v = if sp { spearman(x, y) } else { pearson(x, y) };
        v.map(f).unwrap_or_else(|_| "NA".into())
    };
    summary.row(["lambda".to_string(), f(fit.lambda)]);
    summary.row(["lambda_residual_rms".to_string(), crate::csvio::fmt_opt(fit.residual)]);
    summary.row(["pearson_r_s".to_string(), corr(&paired_rates.x, &paired_rates.y, false)]);
    summary.row(["spearman_r_s".to_string(), corr(&paired_rates.x, &paired_rates.y, true)]);
    summary.row(["time_constant".to_string(), f(t)]);
    summary.row(["nominal_time_constant".to_string(), f(ts)]);
    summary.row(["late_classical_latin_depth".to_string(), f(LATE_CLASSICAL_LATIN_DEPTH)]);

    if let Some(truth) = truth {
        let mut t = crate::csvio::CsvTable::new(
            "true vs recovered rates; r_hat from actual stability, lambda_s_hat = lambda * s_hat",
            ["item_id", "gloss", "true_rate", "r_hat", "s_hat", "lambda_s_hat"],
        );
        let (mut tx, mut ty) = (Vec::new(), Vec::new());
        for i in 0..r.len() {
            let id = &r.item_ids[i];
            let tr = truth.get(id).copied();
            let (rh, sh) = (r.rates[i], s.rates[i]);
            if let (Some(a), Some(b)) = (tr, rh) {
                tx.push(a);
                ty.push(b);
            }
            t.row([
                id.clone(),
                r.glosses[i].clone(),
                crate::csvio::fmt_opt(tr),
                crate::csvio::fmt_opt(rh),
                crate::csvio::fmt_opt(sh),
                crate::csvio::fmt_opt(sh.map(|v| v * fit.lambda)),
            ]);
        }
        summary.row(["pearson_true_r_hat".to_string(), corr(&tx, &ty, false)]);
        out.push(("truth_comparison.csv", t.finish()));
    }
    out.push(("summary.csv", summary.finish()));
    Ok(out)
}

//! Stochastic vocabulary evolution on a family tree.
//!
//! Along a branch of length `t`, the word for item `i` is replaced with
//! probability `1 - exp(-rate_i t)` by a freshly drawn random word; replacement
//! events are independent across items and branches. Surviving words can
//! optionally accumulate per-character substitutions.
//!
//! Random streams are ChaCha8 generators keyed by the master seed, one stream
//! per (domain, node, item) triple:
//!
//! ```text
//! stream = domain << 60 | node << 24 | item
//! ```
//!
//! so every draw is fixed by the seed regardless of how the work is scheduled
//! across threads.

use std::collections::{BTreeSet, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::csvio::{fmt_f64, CsvTable};
use crate::metric::nld;
use crate::wordlist::{ItemRecord, LanguageRecord, LexicalDatabase, Role, WordForm, WordlistError};

const MAX_NODES: usize = 1 << 36;
const MAX_ITEMS: usize = 1 << 24;

const DOMAIN_RATES: u64 = 1;
const DOMAIN_PROTO: u64 = 2;
const DOMAIN_BRANCH: u64 = 3;
const DOMAIN_RESIDUAL: u64 = 4;

/// Label given to the emitted root language.
pub const PROTO_LABEL: &str = "proto";

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid tree: {0}")]
    Tree(String),
    #[error("expected {expected} rates, got {found}")]
    RateCount { expected: usize, found: usize },
    #[error("expected {expected} proto words, got {found}")]
    ProtoCount { expected: usize, found: usize },
    #[error(transparent)]
    Wordlist(#[from] WordlistError),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Letters available to the simulator: `a`–`z`, then hiragana. All are
/// lowercase, NFC-stable single scalars.
pub fn alphabet() -> Vec<char> {
    ('a'..='z').chain('\u{3041}'..='\u{3096}').collect()
}

pub(crate) fn stream_rng(seed: u64, domain: u64, node: usize, item: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(domain << 60 | (node as u64) << 24 | item as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub parent: Option<usize>,
    /// Branch length to the parent, in millennia.
    pub length: f64,
    pub label: Option<String>,
}

/// A rooted tree with branch lengths. Nodes are stored parents-first.
///
/// Leaves become modern languages; labels on internal nodes become tags on
/// every leaf below them.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyTree {
    nodes: Vec<TreeNode>,
}

impl Default for FamilyTree {
    fn default() -> Self {
        Self::new()
    }
}

impl FamilyTree {
    /// A tree holding only the root.
    pub fn new() -> Self {
        Self { nodes: vec![TreeNode { parent: None, length: 0.0, label: None }] }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn add_child(&mut self, parent: usize, length: f64, label: Option<&str>) -> Result<usize> {
        if parent >= self.nodes.len() {
            return Err(SimError::Tree(format!("parent {parent} does not exist")));
        }
        if !(length >= 0.0 && length.is_finite()) {
            return Err(SimError::Tree(format!("branch length {length} must be finite and non-negative")));
        }
        if self.nodes.len() >= MAX_NODES {
            return Err(SimError::Tree("too many nodes".into()));
        }
        self.nodes.push(TreeNode { parent: Some(parent), length, label: label.map(str::to_string) });
        Ok(self.nodes.len() - 1)
    }

    /// `leaves` leaves named `{prefix}{k}`, each at distance `depth` from the
    /// root.
    pub fn star(leaves: usize, depth: f64, prefix: &str) -> Result<Self> {
        let mut t = Self::new();
        for k in 1..=leaves {
            t.add_child(0, depth, Some(&format!("{prefix}{k:02}")))?;
        }
        Ok(t)
    }

    /// One internal node per `(tag, leaf count)` clade at distance
    /// `clade_depth` from the root; leaves sit at total depth `depth`.
    pub fn clades(clades: &[(&str, usize)], clade_depth: f64, depth: f64) -> Result<Self> {
        if clade_depth > depth {
            return Err(SimError::Tree(format!("clade depth {clade_depth} exceeds total depth {depth}")));
        }
        let mut t = Self::new();
        for (tag, count) in clades {
            let node = t.add_child(0, clade_depth, Some(tag))?;
            for k in 1..=*count {
                t.add_child(node, depth - clade_depth, Some(&format!("{tag}{k:02}")))?;
            }
        }
        Ok(t)
    }

    fn children_count(&self) -> Vec<usize> {
        let mut c = vec![0; self.nodes.len()];
        for n in &self.nodes {
            if let Some(p) = n.parent {
                c[p] += 1;
            }
        }
        c
    }

    /// Leaf node indices in storage order.
    pub fn leaves(&self) -> Vec<usize> {
        let c = self.children_count();
        (1..self.nodes.len()).filter(|&i| c[i] == 0).collect()
    }

    fn depth(&self, mut node: usize) -> f64 {
        let mut d = 0.0;
        while let Some(p) = self.nodes[node].parent {
            d += self.nodes[node].length;
            node = p;
        }
        d
    }

    fn ancestors(&self, mut node: usize) -> Vec<usize> {
        let mut out = vec![node];
        while let Some(p) = self.nodes[node].parent {
            out.push(p);
            node = p;
        }
        out
    }

    /// Path length between two nodes.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let up: HashSet<usize> = self.ancestors(a).into_iter().collect();
        let lca = self.ancestors(b).into_iter().find(|n| up.contains(n)).unwrap_or(0);
        self.depth(a) + self.depth(b) - 2.0 * self.depth(lca)
    }

    /// Labels of the named internal ancestors of `node`.
    fn tags(&self, node: usize) -> BTreeSet<String> {
        self.ancestors(node)
            .into_iter()
            .skip(1)
            .filter_map(|n| self.nodes[n].label.clone())
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let leaves = self.leaves();
        if leaves.is_empty() {
            return Err(SimError::Tree("tree has no leaves".into()));
        }
        let mut seen = HashSet::new();
        for &l in &leaves {
            let label = self.nodes[l]
                .label
                .as_deref()
                .ok_or_else(|| SimError::Tree(format!("leaf {l} has no label")))?;
            if label == PROTO_LABEL || !seen.insert(label) {
                return Err(SimError::Tree(format!("leaf label {label:?} is reserved or repeated")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateSource {
    Explicit(Vec<f64>),
    Gamma { shape: f64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub items: usize,
    pub rate_source: RateSource,
    pub alphabet_size: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Per-character substitution rate on surviving words, per millennium.
    pub mutation_rate: f64,
    pub seed: u64,
    /// Emit the root lexicon as a proto-role language.
    pub emit_proto: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            items: 110,
            rate_source: RateSource::Gamma { shape: 7.0, scale: 0.076 },
            alphabet_size: 26,
            min_len: 5,
            max_len: 8,
            mutation_rate: 0.0,
            seed: 1,
            emit_proto: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let max_alpha = alphabet().len();
        if self.alphabet_size < 2 || self.alphabet_size > max_alpha {
            return Err(SimError::Config(format!("alphabet size must be in 2..={max_alpha}")));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(SimError::Config("word lengths need 0 < min <= max".into()));
        }
        if self.items >= MAX_ITEMS {
            return Err(SimError::Config("too many items".into()));
        }
        if !(self.mutation_rate >= 0.0 && self.mutation_rate.is_finite()) {
            return Err(SimError::Config("mutation rate must be finite and non-negative".into()));
        }
        match &self.rate_source {
            RateSource::Explicit(r) => {
                if r.len() != self.items {
                    return Err(SimError::RateCount { expected: self.items, found: r.len() });
                }
                if r.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(SimError::Config("rates must be finite and non-negative".into()));
                }
            }
            RateSource::Gamma { shape, scale } => {
                if !(*shape > 0.0 && *scale > 0.0 && shape.is_finite() && scale.is_finite()) {
                    return Err(SimError::Config("gamma shape and scale must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn item_ids(&self) -> Vec<String> {
        (1..=self.items).map(|i| format!("i{i:03}")).collect()
    }

    /// The per-item true rates: explicit, or one Gamma draw per item.
    pub fn resolve_rates(&self) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(match &self.rate_source {
            RateSource::Explicit(r) => r.clone(),
            RateSource::Gamma { shape, scale } => {
                let dist = Gamma::new(*shape, *scale).map_err(|e| SimError::Config(e.to_string()))?;
                (0..self.items)
                    .map(|i| dist.sample(&mut stream_rng(self.seed, DOMAIN_RATES, 0, i)))
                    .collect()
            }
        })
    }

    fn random_word<R: Rng>(&self, letters: &[char], rng: &mut R) -> String {
        let len = rng.gen_range(self.min_len..=self.max_len);
        (0..len).map(|_| letters[rng.gen_range(0..letters.len())]).collect()
    }
}

/// `items` random words; word `i` depends only on the seed and `i`.
pub fn random_proto(config: &SimConfig) -> Result<Vec<String>> {
    config.validate()?;
    let letters = &alphabet()[..config.alphabet_size];
    Ok((0..config.items)
        .map(|i| config.random_word(letters, &mut stream_rng(config.seed, DOMAIN_PROTO, 0, i)))
        .collect())
}

/// Mean `1 - NLD` between independent random words: the similarity floor left
/// after a replacement.
pub fn estimate_residual(config: &SimConfig, samples: usize) -> Result<f64> {
    config.validate()?;
    let letters = &alphabet()[..config.alphabet_size];
    let total: f64 = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(config.seed, DOMAIN_RESIDUAL, 0, k);
            let a: Vec<char> = config.random_word(letters, &mut rng).chars().collect();
            let b: Vec<char> = config.random_word(letters, &mut rng).chars().collect();
            1.0 - nld(&a, &b).expect("words are non-empty")
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(total / samples.max(1) as f64)
}

/// Ground truth of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub item_ids: Vec<String>,
    pub rates: Vec<f64>,
    /// `(leaf a, leaf b, separation)` for every unordered leaf pair.
    pub pairs: Vec<(String, String, f64)>,
    /// Depth of each leaf below the root.
    pub leaf_depths: Vec<(String, f64)>,
}

impl Truth {
    pub fn rates_csv(&self) -> String {
        let mut t = CsvTable::new("true per-item replacement rate (per millennium)", ["item_id", "true_rate"]);
        for (id, r) in self.item_ids.iter().zip(&self.rates) {
            t.row([id.clone(), fmt_f64(*r)]);
        }
        t.finish()
    }

    pub fn times_csv(&self) -> String {
        let mut t = CsvTable::new("true separation of leaf pairs (millennia)", ["leafA", "leafB", "true_T"]);
        for (a, b, d) in &self.pairs {
            t.row([a.clone(), b.clone(), fmt_f64(*d)]);
        }
        t.finish()
    }

    pub fn separation(&self, a: &str, b: &str) -> Option<f64> {
        self.pairs
            .iter()
            .find(|(x, y, _)| (x == a && y == b) || (x == b && y == a))
            .map(|p| p.2)
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub database: LexicalDatabase,
    pub truth: Truth,
}

/// Evolves `proto` down `tree` with per-item `rates`.
pub fn simulate_family(proto: &[String], tree: &FamilyTree, rates: &[f64], config: &SimConfig) -> Result<Simulation> {
    config.validate()?;
    tree.validate()?;
    if rates.len() != config.items {
        return Err(SimError::RateCount { expected: config.items, found: rates.len() });
    }
    if proto.len() != config.items {
        return Err(SimError::ProtoCount { expected: config.items, found: proto.len() });
    }
    if rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(SimError::Config("rates must be finite and non-negative".into()));
    }
    let letters = &alphabet()[..config.alphabet_size];
    let nodes = tree.nodes();

    // words[item][node]
    let words: Vec<Vec<String>> = (0..config.items)
        .into_par_iter()
        .map(|item| {
            let mut at: Vec<String> = Vec::with_capacity(nodes.len());
            at.push(proto[item].clone());
            for (n, node) in nodes.iter().enumerate().skip(1) {
                let parent = &at[node.parent.expect("non-root")];
                let mut rng = stream_rng(config.seed, DOMAIN_BRANCH, n, item);
                let survive = (-rates[item] * node.length).exp();
                let word = if rng.gen::<f64>() >= survive {
                    config.random_word(letters, &mut rng)
                } else if config.mutation_rate > 0.0 {
                    let p = 1.0 - (-config.mutation_rate * node.length).exp();
                    parent
                        .chars()
                        .map(|c| if rng.gen::<f64>() < p { letters[rng.gen_range(0..letters.len())] } else { c })
                        .collect()
                } else {
                    parent.clone()
                };
                at.push(word);
            }
            at
        })
        .collect();

    let leaves = tree.leaves();
    let mut languages = Vec::new();
    let mut sources = Vec::new();
    if config.emit_proto {
        languages.push(LanguageRecord { label: PROTO_LABEL.into(), role: Role::Proto, tags: BTreeSet::new() });
        sources.push(0);
    }
    for &l in &leaves {
        languages.push(LanguageRecord {
            label: nodes[l].label.clone().expect("validated"),
            role: Role::Modern,
            tags: tree.tags(l),
        });
        sources.push(l);
    }
    let item_ids = config.item_ids();
    let items = item_ids
        .iter()
        .enumerate()
        .map(|(i, id)| ItemRecord { item_id: id.clone(), gloss: format!("meaning {}", i + 1) })
        .collect();
    let mut slots = Vec::with_capacity(sources.len() * config.items);
    for (li, &node) in sources.iter().enumerate() {
        for (item, w) in words.iter().enumerate() {
            slots.push(((li, item), vec![WordForm::new(&w[node], None)?]));
        }
    }
    let database = LexicalDatabase::from_parts("simulated", languages, items, slots)?;

    let mut pairs = Vec::new();
    for (i, &a) in leaves.iter().enumerate() {
        for &b in &leaves[i + 1..] {
            let la = nodes[a].label.clone().expect("validated");
            let lb = nodes[b].label.clone().expect("validated");
            pairs.push((la, lb, tree.distance(a, b)));
        }
    }
    let leaf_depths = leaves
        .iter()
        .map(|&l| (nodes[l].label.clone().expect("validated"), tree.depth(l)))
        .collect();
    Ok(Simulation { database, truth: Truth { item_ids, rates: rates.to_vec(), pairs, leaf_depths } })
}

/// Convenience: resolve rates, draw the proto lexicon and simulate.
pub fn run(tree: &FamilyTree, config: &SimConfig) -> Result<Simulation> {
    let rates = config.resolve_rates()?;
    let proto = random_proto(config)?;
    simulate_family(&proto, tree, &rates, config)
}

/// The simulator's expected overlap after separation `t`, including the
/// similarity floor `residual` of replaced words.
pub fn expected_overlap(rates: &[f64], t: f64, residual: f64) -> f64 {
    let sum: f64 = rates
        .iter()
        .map(|r| {
            let s = (-r * t).exp();
            s + (1.0 - s) * residual
        })
        .sum();
    sum / rates.len() as f64
}

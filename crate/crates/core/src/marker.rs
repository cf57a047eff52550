//! Marker-word recruitment.
//!
//! Both strategies start from a "bait" vector, the sum of the seed words'
//! embeddings. The simple strategy takes the words nearest to the bait in one
//! shot. The advanced strategy explores further: it builds a directed
//! nearest-neighbor cosine graph over the most frequent words and ranks them
//! by personalized PageRank, with restart mass anchored half on the seeds and
//! half on the words closest to the bait so the walk keeps the seeds' focus.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, EmbeddingModel};
use crate::util;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Simple,
    Advanced,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Simple => "simple",
            Strategy::Advanced => "advanced",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(Strategy::Simple),
            "advanced" => Ok(Strategy::Advanced),
            other => Err(Error::invalid(format!("unknown marker strategy '{other}'"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvancedParams {
    /// Out-degree of every node in the nearest-neighbor graph.
    pub graph_degree: usize,
    /// Restart probability of the walk.
    pub alpha: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Number of most frequent vocabulary words forming the graph.
    pub pool_size: usize,
}

impl Default for AdvancedParams {
    fn default() -> Self {
        AdvancedParams {
            graph_degree: 10,
            alpha: 0.5,
            tolerance: 1e-6,
            max_iterations: 100,
            pool_size: 5000,
        }
    }
}

impl AdvancedParams {
    pub fn validate(&self) -> Result<()> {
        if self.graph_degree < 1 {
            return Err(Error::invalid("graph degree must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("restart probability must lie in (0, 1)"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be > 0"));
        }
        if self.pool_size < 1 {
            return Err(Error::invalid("pool size must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerSet {
    seeds: Vec<String>,
    markers: Vec<(String, f64)>,
    strategy: Strategy,
    advanced: Option<AdvancedParams>,
}

impl MarkerSet {
    /// Validates and ranks a marker list (descending score, then word).
    pub fn new(
        seeds: Vec<String>,
        mut markers: Vec<(String, f64)>,
        strategy: Strategy,
        advanced: Option<AdvancedParams>,
    ) -> Result<Self> {
        util::sort_desc_by_score(&mut markers);
        let words: HashSet<&str> = markers.iter().map(|(w, _)| w.as_str()).collect();
        if words.len() != markers.len() {
            return Err(Error::Format("duplicate marker word".into()));
        }
        if let Some(s) = seeds.iter().find(|s| !words.contains(s.as_str())) {
            return Err(Error::Format(format!("seed '{s}' missing from markers")));
        }
        if markers.iter().any(|(_, s)| !s.is_finite()) {
            return Err(Error::Format("marker scores must be finite".into()));
        }
        Ok(MarkerSet {
            seeds,
            markers,
            strategy,
            advanced,
        })
    }

    pub fn seeds(&self) -> &[String] {
        &self.seeds
    }

    pub fn markers(&self) -> &[(String, f64)] {
        &self.markers
    }

    pub fn m(&self) -> usize {
        self.markers.len()
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn advanced_params(&self) -> Option<&AdvancedParams> {
        self.advanced.as_ref()
    }

    pub fn word_set(&self) -> HashSet<&str> {
        self.markers.iter().map(|(w, _)| w.as_str()).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# strategy={}", self.strategy);
        let _ = writeln!(out, "# seeds={}", self.seeds.join(","));
        let _ = writeln!(out, "# m={}", self.m());
        if let Some(p) = &self.advanced {
            let _ = writeln!(
                out,
                "# graph_degree={} alpha={} tolerance={} max_iterations={} pool_size={}",
                p.graph_degree, p.alpha, p.tolerance, p.max_iterations, p.pool_size
            );
        }
        for (w, s) in &self.markers {
            let _ = writeln!(out, "{w} {s}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        util::write_file(path, self.to_text().as_bytes())
    }

    pub fn from_text(src: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut strategy = None;
        let mut seeds = None;
        let mut advanced = None;
        let mut m = None;
        let mut markers = Vec::new();
        for (i, line) in src.lines().enumerate() {
            let lineno = i + 1;
            if let Some(header) = line.strip_prefix('#') {
                let mut adv = AdvancedParams::default();
                let mut saw_adv = false;
                for kv in header.split_whitespace() {
                    let (k, v) = kv.split_once('=').ok_or_else(|| perr(lineno, format!("bad header field '{kv}'")))?;
                    let num = |v: &str| v.parse::<f64>().map_err(|e| perr(lineno, e.to_string()));
                    let int = |v: &str| v.parse::<usize>().map_err(|e| perr(lineno, e.to_string()));
                    match k {
                        "strategy" => strategy = Some(v.parse::<Strategy>().map_err(|e| perr(lineno, e.to_string()))?),
                        "seeds" => seeds = Some(v.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect::<Vec<_>>()),
                        "m" => m = Some(int(v)?),
                        "graph_degree" => (adv.graph_degree, saw_adv) = (int(v)?, true),
                        "alpha" => (adv.alpha, saw_adv) = (num(v)?, true),
                        "tolerance" => (adv.tolerance, saw_adv) = (num(v)?, true),
                        "max_iterations" => (adv.max_iterations, saw_adv) = (int(v)?, true),
                        "pool_size" => (adv.pool_size, saw_adv) = (int(v)?, true),
                        other => return Err(perr(lineno, format!("unknown header key '{other}'"))),
                    }
                }
                if saw_adv {
                    advanced = Some(adv);
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let (w, s) = line.split_once(' ').ok_or_else(|| perr(lineno, "expected 'word score'".into()))?;
            let s = s.parse::<f64>().map_err(|e| perr(lineno, e.to_string()))?;
            markers.push((w.to_string(), s));
        }
        let strategy = strategy.ok_or_else(|| perr(1, "missing strategy header".into()))?;
        let seeds = seeds.ok_or_else(|| perr(1, "missing seeds header".into()))?;
        if let Some(m) = m {
            if m != markers.len() {
                return Err(perr(1, format!("header m={m} but {} markers listed", markers.len())));
            }
        }
        MarkerSet::new(seeds, markers, strategy, advanced)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = util::read_to_string(path)?;
        MarkerSet::from_text(&src, path)
    }
}

/// Componentwise sum of the seeds' embedding vectors.
pub fn bait_vector(model: &EmbeddingModel, seeds: &[String]) -> Result<Vec<f64>> {
    let mut bait = vec![0.0; model.dim()];
    for s in seeds {
        let i = model
            .vocabulary()
            .index_of(s)
            .ok_or_else(|| Error::SeedNotInVocabulary(s.clone()))?;
        for (b, v) in bait.iter_mut().zip(model.vector(i)) {
            *b += v;
        }
    }
    Ok(bait)
}

fn check_seeds(model: &EmbeddingModel, seeds: &[String], m: usize) -> Result<Vec<f64>> {
    if seeds.is_empty() {
        return Err(Error::invalid("at least one seed word is required"));
    }
    let distinct: HashSet<&String> = seeds.iter().collect();
    if distinct.len() != seeds.len() {
        return Err(Error::invalid("seed words must be distinct"));
    }
    if m < seeds.len() {
        return Err(Error::invalid(format!("m = {m} is smaller than the {} seeds", seeds.len())));
    }
    let bait = bait_vector(model, seeds)?;
    if model.vocabulary().len() < m {
        return Err(Error::invalid(format!(
            "vocabulary of {} words cannot supply m = {m} markers",
            model.vocabulary().len()
        )));
    }
    Ok(bait)
}

/// Seeds plus the `m - |seeds|` non-seed words nearest to the bait vector.
pub fn recruit_simple(model: &EmbeddingModel, seeds: &[String], m: usize) -> Result<MarkerSet> {
    let bait = check_seeds(model, seeds, m)?;
    let mut markers: Vec<(String, f64)> = seeds
        .iter()
        .map(|s| Ok((s.clone(), cosine(&bait, model.lookup(s))?)))
        .collect::<Result<_>>()?;
    if m > seeds.len() {
        let exclude: HashSet<String> = seeds.iter().cloned().collect();
        markers.extend(model.nearest(&bait, m - seeds.len(), &exclude)?);
    }
    MarkerSet::new(seeds.to_vec(), markers, Strategy::Simple, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRank {
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Personalized PageRank by power iteration.
///
/// `neighbors[i]` lists the out-neighbors of node `i`; every node spreads its
/// mass uniformly over them. Mass of nodes without out-edges returns through
/// the personalization vector. Iteration stops once the L1 change drops below
/// `tolerance` or after `max_iterations` updates.
pub fn personalized_pagerank(
    neighbors: &[Vec<usize>],
    personalization: &[f64],
    alpha: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<PageRank> {
    let n = neighbors.len();
    if personalization.len() != n {
        return Err(Error::Shape(format!(
            "personalization of length {} for {n} nodes",
            personalization.len()
        )));
    }
    if personalization.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::invalid("personalization entries must be finite and >= 0"));
    }
    let total: f64 = personalization.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("personalization must have positive mass"));
    }
    if neighbors.iter().flatten().any(|&j| j >= n) {
        return Err(Error::invalid("edge target out of range"));
    }
    let r: Vec<f64> = personalization.iter().map(|x| x / total).collect();
    let mut p = r.clone();
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        let mut dangling = 0.0;
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, out) in neighbors.iter().enumerate() {
            if out.is_empty() {
                dangling += p[i];
            } else {
                let share = p[i] / out.len() as f64;
                for &j in out {
                    next[j] += share;
                }
            }
        }
        for (x, ri) in next.iter_mut().zip(&r) {
            *x = alpha * ri + (1.0 - alpha) * (*x + dangling * ri);
        }
        let change: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut p, &mut next);
        iterations += 1;
        if change < tolerance {
            converged = true;
            break;
        }
    }
    Ok(PageRank {
        scores: p,
        iterations,
        converged,
    })
}

/// Directed graph linking every node to its `degree` most cosine-similar
/// other nodes (ties broken by word).
fn knn_graph(model: &EmbeddingModel, pool: &[usize], degree: usize) -> Vec<Vec<usize>> {
    let unit: Vec<Vec<f64>> = pool
        .iter()
        .map(|&i| {
            let v = model.vector(i);
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                vec![0.0; v.len()]
            } else {
                v.iter().map(|x| x / n).collect()
            }
        })
        .collect();
    let vocab = model.vocabulary();
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(pool.len());
    (0..pool.len())
        .map(|a| {
            scored.clear();
            scored.extend((0..pool.len()).filter(|&b| b != a).map(|b| {
                let s: f64 = unit[a].iter().zip(&unit[b]).map(|(x, y)| x * y).sum();
                (b, s)
            }));
            let by_rank = |x: &(usize, f64), y: &(usize, f64)| {
                y.1.total_cmp(&x.1)
                    .then_with(|| vocab.word(pool[x.0]).cmp(vocab.word(pool[y.0])))
            };
            let g = degree.min(scored.len());
            if g > 0 && g < scored.len() {
                scored.select_nth_unstable_by(g - 1, by_rank);
            }
            scored[..g].sort_by(by_rank);
            scored[..g].iter().map(|&(b, _)| b).collect()
        })
        .collect()
}

/// Seeds plus the top-ranked non-seed words under personalized PageRank on a
/// nearest-neighbor cosine graph.
pub fn recruit_advanced(
    model: &EmbeddingModel,
    seeds: &[String],
    m: usize,
    params: &AdvancedParams,
) -> Result<MarkerSet> {
    params.validate()?;
    let bait = check_seeds(model, seeds, m)?;
    let vocab = model.vocabulary();
    let seed_idx: Vec<usize> = seeds.iter().map(|s| vocab.index_of(s).expect("checked")).collect();
    let mut pool: Vec<usize> = (0..vocab.len().min(params.pool_size)).collect();
    for &s in &seed_idx {
        if s >= params.pool_size {
            pool.push(s);
        }
    }
    let seed_set: HashSet<usize> = seed_idx.iter().copied().collect();
    let non_seed = pool.len() - seed_set.len();
    if non_seed < m - seeds.len() {
        return Err(Error::invalid(format!(
            "candidate pool of {} words cannot supply m = {m} markers",
            pool.len()
        )));
    }

    let graph = knn_graph(model, &pool, params.graph_degree);

    let mut focus: Vec<(usize, f64)> = (0..pool.len())
        .filter(|&p| !seed_set.contains(&pool[p]))
        .map(|p| (p, cosine(&bait, model.vector(pool[p])).expect("same dimension")))
        .collect();
    focus.sort_by(|x, y| {
        y.1.total_cmp(&x.1)
            .then_with(|| vocab.word(pool[x.0]).cmp(vocab.word(pool[y.0])))
    });
    focus.truncate(params.graph_degree);

    let mut personalization = vec![0.0; pool.len()];
    let seed_mass = if focus.is_empty() { 1.0 } else { 0.5 };
    for (p, &w) in pool.iter().enumerate() {
        if seed_set.contains(&w) {
            personalization[p] += seed_mass / seeds.len() as f64;
        }
    }
    for &(p, _) in &focus {
        personalization[p] += 0.5 / focus.len() as f64;
    }

    let pr = personalized_pagerank(&graph, &personalization, params.alpha, params.tolerance, params.max_iterations)?;

    let mut ranked: Vec<(String, f64)> = pool
        .iter()
        .zip(&pr.scores)
        .map(|(&w, &s)| (vocab.word(w).to_string(), s))
        .collect();
    util::sort_desc_by_score(&mut ranked);
    let mut markers: Vec<(String, f64)> = ranked
        .iter()
        .filter(|(w, _)| seeds.contains(w))
        .cloned()
        .collect();
    markers.extend(
        ranked
            .into_iter()
            .filter(|(w, _)| !seeds.contains(w))
            .take(m - seeds.len()),
    );
    MarkerSet::new(seeds.to_vec(), markers, Strategy::Advanced, Some(*params))
}

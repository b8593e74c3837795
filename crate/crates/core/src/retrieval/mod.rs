//! Exact cosine top-k retrieval over a [`KnowledgeBase`].
//!
//! Three strategies: CM space only, profile space only, and hybrid, which
//! unions the top `floor(k/2)` CM neighbors with the top `ceil(k/2)` profile
//! neighbors. Ordering everywhere is similarity descending with ties broken
//! by ascending row index.

mod topk;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel;
use crate::store::{KnowledgeBase, Matrix};
use crate::types::{FeatureVector, QueryRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalStrategy {
    #[serde(rename = "cm")]
    CmOnly,
    #[serde(rename = "prof")]
    ProfileOnly,
    Hybrid,
}

impl RetrievalStrategy {
    pub const ALL: [RetrievalStrategy; 3] =
        [RetrievalStrategy::CmOnly, RetrievalStrategy::ProfileOnly, RetrievalStrategy::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            RetrievalStrategy::CmOnly => "cm",
            RetrievalStrategy::ProfileOnly => "prof",
            RetrievalStrategy::Hybrid => "hybrid",
        }
    }

    /// Neighbors requested from the CM and profile spaces for a given `k`.
    pub fn split(self, k: usize) -> (usize, usize) {
        match self {
            RetrievalStrategy::CmOnly => (k, 0),
            RetrievalStrategy::ProfileOnly => (0, k),
            RetrievalStrategy::Hybrid => hybrid_split(k),
        }
    }

    pub fn uses_profiles(self) -> bool {
        self != RetrievalStrategy::CmOnly
    }

    fn check_k(self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::InvalidK);
        }
        if self == RetrievalStrategy::Hybrid && k < 2 {
            return Err(Error::HybridKTooSmall(k));
        }
        Ok(())
    }
}

impl fmt::Display for RetrievalStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RetrievalStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cm" => Ok(RetrievalStrategy::CmOnly),
            "prof" => Ok(RetrievalStrategy::ProfileOnly),
            "hybrid" => Ok(RetrievalStrategy::Hybrid),
            other => Err(Error::InvalidConfig(format!("unknown retrieval strategy '{other}'"))),
        }
    }
}

/// `(floor(k/2), ceil(k/2))`: CM-space and profile-space neighbor counts of
/// hybrid retrieval.
pub fn hybrid_split(k: usize) -> (usize, usize) {
    (k / 2, k - k / 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Cm,
    Prof,
}

impl Space {
    fn matrix(self, base: &KnowledgeBase) -> &Matrix {
        match self {
            Space::Cm => base.cm(),
            Space::Prof => base.prof(),
        }
    }

    fn strategy(self) -> RetrievalStrategy {
        match self {
            Space::Cm => RetrievalStrategy::CmOnly,
            Space::Prof => RetrievalStrategy::ProfileOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Neighbor {
    /// Row index into the knowledge base.
    pub index: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    neighbors: Vec<Neighbor>,
    strategy: RetrievalStrategy,
    k_requested: usize,
}

impl NeighborSet {
    pub fn new(neighbors: Vec<Neighbor>, strategy: RetrievalStrategy, k_requested: usize) -> Self {
        Self { neighbors, strategy, k_requested }
    }

    pub fn neighbors(&self) -> &[Neighbor] {
        &self.neighbors
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.neighbors.iter().map(|n| n.index)
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn strategy(&self) -> RetrievalStrategy {
        self.strategy
    }

    pub fn k_requested(&self) -> usize {
        self.k_requested
    }
}

/// Cosine similarity of two vectors; -1.0 if either has zero norm.
pub fn cosine(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: b.dim() });
    }
    let (a, b) = (a.as_slice(), b.as_slice());
    Ok(kernel::cosine_from_parts(kernel::dot(a, b), kernel::norm(a), kernel::norm(b)))
}

fn check_dim(space: Space, base: &KnowledgeBase, query: &[f32]) -> Result<()> {
    let expected = space.matrix(base).dim();
    if query.len() != expected {
        return Err(Error::DimensionMismatch { expected, actual: query.len() });
    }
    Ok(())
}

/// The `min(k, n)` rows most similar to `query` in one space.
pub fn top_k(base: &KnowledgeBase, query: &[f32], space: Space, k: usize) -> Result<NeighborSet> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    if base.is_empty() {
        return Err(Error::EmptyBase);
    }
    check_dim(space, base, query)?;
    let neighbors =
        topk::search_block(space.matrix(base), &[(query, kernel::norm(query))], k).pop().unwrap_or_default();
    Ok(NeighborSet::new(neighbors, space.strategy(), k))
}

/// Per-space ranked candidate lists for one query, each already ordered.
/// Any prefix of a list is the exact top-k for that shorter `k`, which lets a
/// k-sweep retrieve once at the largest `k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Candidates {
    pub cm: Vec<Neighbor>,
    pub prof: Vec<Neighbor>,
}

impl Candidates {
    /// Builds the neighbor set for `strategy` at `k` from prefixes of the
    /// candidate lists. The lists must hold at least `strategy.split(k)`
    /// entries each (or the whole base).
    pub fn compose(&self, strategy: RetrievalStrategy, k: usize) -> NeighborSet {
        let (k_cm, k_prof) = strategy.split(k);
        let cm = &self.cm[..k_cm.min(self.cm.len())];
        let prof = &self.prof[..k_prof.min(self.prof.len())];
        let neighbors = match strategy {
            RetrievalStrategy::CmOnly => cm.to_vec(),
            RetrievalStrategy::ProfileOnly => prof.to_vec(),
            RetrievalStrategy::Hybrid => union_max(cm, prof),
        };
        NeighborSet::new(neighbors, strategy, k)
    }
}

/// Deduplicated union keeping each row's larger similarity, ordered by
/// similarity descending then row index ascending.
fn union_max(a: &[Neighbor], b: &[Neighbor]) -> Vec<Neighbor> {
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for n in a.iter().chain(b) {
        best.entry(n.index).and_modify(|s| *s = s.max(n.similarity)).or_insert(n.similarity);
    }
    let mut out: Vec<Neighbor> = best.into_iter().map(|(index, similarity)| Neighbor { index, similarity }).collect();
    out.sort_by(|x, y| y.similarity.total_cmp(&x.similarity).then(x.index.cmp(&y.index)));
    out
}

pub fn retrieve(
    base: &KnowledgeBase,
    query: &QueryRecord,
    strategy: RetrievalStrategy,
    k: usize,
) -> Result<NeighborSet> {
    strategy.check_k(k)?;
    let candidates =
        candidates_batch(base, std::slice::from_ref(query), strategy.split(k), 1).map_err(|e| match e {
            Error::Query { source, .. } => *source,
            other => other,
        })?;
    Ok(candidates[0].compose(strategy, k))
}

/// Retrieves for every query, in input order. Output is bit-identical for any
/// `parallelism`.
pub fn retrieve_batch(
    base: &KnowledgeBase,
    queries: &[QueryRecord],
    strategy: RetrievalStrategy,
    k: usize,
    parallelism: usize,
) -> Result<Vec<NeighborSet>> {
    strategy.check_k(k)?;
    let candidates = candidates_batch(base, queries, strategy.split(k), parallelism)?;
    Ok(candidates.iter().map(|c| c.compose(strategy, k)).collect())
}

/// Ranked candidate lists for every query: `k_cm` rows from CM space and
/// `k_prof` from profile space (zero skips that space).
pub fn candidates_batch(
    base: &KnowledgeBase,
    queries: &[QueryRecord],
    (k_cm, k_prof): (usize, usize),
    parallelism: usize,
) -> Result<Vec<Candidates>> {
    if parallelism == 0 {
        return Err(Error::InvalidParallelism);
    }
    if base.is_empty() {
        return Err(Error::EmptyBase);
    }
    for q in queries {
        let wrap = |e| Error::Query { id: q.id, source: Box::new(e) };
        if k_cm > 0 {
            check_dim(Space::Cm, base, q.cm.as_slice()).map_err(wrap)?;
        }
        if k_prof > 0 {
            check_dim(Space::Prof, base, q.prof.as_slice()).map_err(wrap)?;
        }
    }

    let run_block = |block: &[QueryRecord]| -> Vec<Candidates> {
        let sweep = |space: Space, k: usize| -> Vec<Vec<Neighbor>> {
            if k == 0 {
                return vec![Vec::new(); block.len()];
            }
            let qs: Vec<(&[f32], f64)> = block
                .iter()
                .map(|q| {
                    let v = match space {
                        Space::Cm => q.cm.as_slice(),
                        Space::Prof => q.prof.as_slice(),
                    };
                    (v, kernel::norm(v))
                })
                .collect();
            topk::search_block(space.matrix(base), &qs, k)
        };
        let cm = sweep(Space::Cm, k_cm);
        let prof = sweep(Space::Prof, k_prof);
        cm.into_iter().zip(prof).map(|(cm, prof)| Candidates { cm, prof }).collect()
    };

    if parallelism == 1 || queries.len() <= topk::QUERY_BLOCK {
        return Ok(queries.chunks(topk::QUERY_BLOCK).flat_map(run_block).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let blocks: Vec<Vec<Candidates>> = pool.install(|| queries.par_chunks(topk::QUERY_BLOCK).map(run_block).collect());
    Ok(blocks.into_iter().flatten().collect())
}

//! The knowledge base: labeled reference utterances stored as dense columnar
//! blocks with precomputed row norms.

mod format;
mod ingest;
mod normalize;

use std::collections::HashSet;
use std::sync::Arc;

pub use format::{load, save, write_to, CRC64, FORMAT_VERSION, MAGIC};
pub use ingest::{ingest_jsonl, ingest_queries_jsonl, parse_entries, parse_queries, Ingested};
pub use normalize::ProfileNormalizer;

use crate::error::{Error, Result};
use crate::kernel;
use crate::types::{validate_vector, CmScore, KnowledgeEntry, Label, ProfileLayout};

/// Row-major `n x dim` block of `f32` with one cached Euclidean norm per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f32>,
    dim: usize,
    norms: Vec<f64>,
}

impl Matrix {
    /// Wraps a row-major buffer and computes row norms.
    pub fn from_rows(data: Vec<f32>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, actual: 0 });
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: data.len() % dim });
        }
        let norms = data.chunks_exact(dim).map(kernel::norm).collect();
        Ok(Self { data, dim, norms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.norms.len()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.dim)
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// Immutable indexed collection of knowledge entries. Cloning is cheap: all
/// columns are reference counted, so derived views (masked or normalized
/// profiles) share the untouched blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    ids: Arc<[u64]>,
    labels: Arc<[Label]>,
    scores: Arc<[f32]>,
    cm: Arc<Matrix>,
    prof: Arc<Matrix>,
    layout: ProfileLayout,
}

impl KnowledgeBase {
    /// Builds a base from entries; row `i` is the `i`-th entry.
    pub fn build(entries: &[KnowledgeEntry], layout: ProfileLayout) -> Result<Self> {
        let first = entries.first().ok_or(Error::EmptyInput)?;
        let d_cm = first.cm.dim();
        let d_prof = layout.dims();
        let n = entries.len();

        let mut seen = HashSet::with_capacity(n);
        let mut cm = Vec::with_capacity(n * d_cm);
        let mut prof = Vec::with_capacity(n * d_prof);
        let mut ids = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(n);
        for e in entries {
            if !seen.insert(e.id) {
                return Err(Error::DuplicateId(e.id));
            }
            validate_vector(e.cm.as_slice(), d_cm)?;
            validate_vector(e.prof.as_slice(), d_prof)?;
            cm.extend_from_slice(e.cm.as_slice());
            prof.extend_from_slice(e.prof.as_slice());
            ids.push(e.id);
            labels.push(e.label);
            scores.push(e.score.get());
        }
        Self::from_columns(ids, labels, scores, cm, d_cm, prof, layout)
    }

    /// Assembles a base from already-columnar data. Checks lengths, id
    /// uniqueness, finiteness and score range.
    pub fn from_columns(
        ids: Vec<u64>,
        labels: Vec<Label>,
        scores: Vec<f32>,
        cm: Vec<f32>,
        d_cm: usize,
        prof: Vec<f32>,
        layout: ProfileLayout,
    ) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if labels.len() != n || scores.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: labels.len().min(scores.len()) });
        }
        let d_prof = layout.dims();
        if cm.len() != n * d_cm {
            return Err(Error::DimensionMismatch { expected: n * d_cm, actual: cm.len() });
        }
        if prof.len() != n * d_prof {
            return Err(Error::DimensionMismatch { expected: n * d_prof, actual: prof.len() });
        }
        let mut seen = HashSet::with_capacity(n);
        if let Some(dup) = ids.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::DuplicateId(*dup));
        }
        if let Some(bad) = scores.iter().find(|s| CmScore::new(**s).is_err()) {
            return Err(Error::ScoreOutOfRange(*bad as f64));
        }
        validate_vector(&cm, cm.len())?;
        validate_vector(&prof, prof.len())?;
        Ok(Self {
            ids: ids.into(),
            labels: labels.into(),
            scores: scores.into(),
            cm: Arc::new(Matrix::from_rows(cm, d_cm)?),
            prof: Arc::new(Matrix::from_rows(prof, d_prof)?),
            layout,
        })
    }

    /// Same rows with the profile block and layout replaced. Used by masking
    /// and normalization; the CM block is shared, not copied.
    pub fn with_profiles(&self, prof: Vec<f32>, layout: ProfileLayout) -> Result<Self> {
        let d_prof = layout.dims();
        if prof.len() != self.len() * d_prof {
            return Err(Error::DimensionMismatch { expected: self.len() * d_prof, actual: prof.len() });
        }
        validate_vector(&prof, prof.len())?;
        Ok(Self { prof: Arc::new(Matrix::from_rows(prof, d_prof)?), layout, ..self.clone() })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn d_cm(&self) -> usize {
        self.cm.dim()
    }

    pub fn d_prof(&self) -> usize {
        self.prof.dim()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn scores(&self) -> &[f32] {
        &self.scores
    }

    pub fn cm(&self) -> &Matrix {
        &self.cm
    }

    pub fn prof(&self) -> &Matrix {
        &self.prof
    }

    pub fn layout(&self) -> &ProfileLayout {
        &self.layout
    }

    pub fn fake_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_fake()).count()
    }

    /// True when both bases hold the same CM block allocation.
    pub fn shares_cm_with(&self, other: &KnowledgeBase) -> bool {
        Arc::ptr_eq(&self.cm, &other.cm)
    }
}

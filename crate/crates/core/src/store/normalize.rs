use crate::error::{Error, Result};
use crate::types::{FeatureVector, QueryRecord};

use super::KnowledgeBase;

/// Optional z-scoring of profile vectors. Statistics come from the knowledge
/// base and are applied identically to queries. Each dimension inside an
/// attribute span is standardized on its own; constant dimensions are only
/// centered.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileNormalizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl ProfileNormalizer {
    pub fn fit(base: &KnowledgeBase) -> Self {
        let d = base.d_prof();
        let n = base.len() as f64;
        let mut mean = vec![0f64; d];
        for row in base.prof().iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += *v as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0f64; d];
        for row in base.prof().iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                let c = *v as f64 - m;
                *s += c * c;
            }
        }
        let scale = var.into_iter().map(|s| (s / n).sqrt()).map(|sd| if sd > 0.0 { sd } else { 1.0 }).collect();
        Self { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, values: &[f32]) -> Result<Vec<f32>> {
        if values.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: values.len() });
        }
        Ok(values
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| ((*v as f64 - m) / s) as f32)
            .collect())
    }

    pub fn apply_base(&self, base: &KnowledgeBase) -> Result<KnowledgeBase> {
        let mut prof = Vec::with_capacity(base.prof().as_slice().len());
        for row in base.prof().iter_rows() {
            prof.extend(self.apply(row)?);
        }
        base.with_profiles(prof, base.layout().clone())
    }

    pub fn apply_query(&self, query: &QueryRecord) -> Result<QueryRecord> {
        Ok(QueryRecord { prof: FeatureVector::new(self.apply(query.prof.as_slice())?)?, ..query.clone() })
    }
}

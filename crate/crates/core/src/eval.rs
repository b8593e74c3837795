//! End-to-end scoring of labeled query sets.

use std::fmt;

use serde::Serialize;

use crate::ensemble::{predict, EnsembleStrategy, Prediction};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, eer, OperatingPoint, ScoredSample, THRESHOLD};
use crate::retrieval::{candidates_batch, Candidates, RetrievalStrategy};
use crate::store::KnowledgeBase;
use crate::types::{Label, QueryRecord};

/// A detection system: either the raw CM score (baseline) or retrieval
/// followed by an ensemble rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum Method {
    Baseline,
    Augmented { retrieval: RetrievalStrategy, ensemble: EnsembleStrategy, k: usize },
}

impl Method {
    pub fn augmented(retrieval: RetrievalStrategy, ensemble: EnsembleStrategy, k: usize) -> Self {
        Method::Augmented { retrieval, ensemble, k }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Method::Baseline => Ok(()),
            Method::Augmented { k: 0, .. } => Err(Error::InvalidK),
            Method::Augmented { retrieval: RetrievalStrategy::Hybrid, k, .. } if k < 2 => {
                Err(Error::HybridKTooSmall(k))
            }
            Method::Augmented { .. } => Ok(()),
        }
    }

    pub fn retrieval_name(&self) -> &'static str {
        match self {
            Method::Baseline => "none",
            Method::Augmented { retrieval, .. } => retrieval.name(),
        }
    }

    pub fn ensemble_name(&self) -> &'static str {
        match self {
            Method::Baseline => "-",
            Method::Augmented { ensemble, .. } => ensemble.name(),
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            Method::Baseline => None,
            Method::Augmented { k, .. } => Some(*k),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Baseline => f.write_str("none"),
            Method::Augmented { retrieval, ensemble, k } => write!(f, "{retrieval}+{ensemble}@{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub retrieval: &'static str,
    pub ensemble: &'static str,
    pub k: Option<usize>,
    /// `None` when one class is absent from the queries.
    pub eer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eer_unavailable: Option<String>,
    pub accuracy: f64,
    pub threshold: f64,
    pub n_queries: usize,
    pub n_real: usize,
    pub n_fake: usize,
    pub operating_point: OperatingPoint,
    /// Mean retrieved-set size; below `k` when hybrid halves overlap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_neighbors: Option<f64>,
}

impl EvalReport {
    pub fn from_predictions(method: &Method, predictions: &[Prediction], labels: &[Label]) -> Result<Self> {
        let samples: Vec<ScoredSample> =
            predictions.iter().zip(labels).map(|(p, l)| ScoredSample::new(p.score, *l)).collect();
        let accuracy = accuracy(&samples)?;
        let (eer, eer_unavailable) = match eer(&samples) {
            Ok(v) => (Some(v), None),
            Err(e @ Error::MissingClass(_)) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        let n_fake = labels.iter().filter(|l| l.is_fake()).count();
        let mean_neighbors = method
            .k()
            .map(|_| predictions.iter().map(|p| p.neighbor_count as f64).sum::<f64>() / predictions.len() as f64);
        Ok(Self {
            retrieval: method.retrieval_name(),
            ensemble: method.ensemble_name(),
            k: method.k(),
            eer,
            eer_unavailable,
            accuracy,
            threshold: THRESHOLD,
            n_queries: samples.len(),
            n_real: samples.len() - n_fake,
            n_fake,
            operating_point: OperatingPoint::tally(&samples),
            mean_neighbors,
        })
    }

    pub fn eer_percent(&self) -> Option<f64> {
        self.eer.map(|e| e * 100.0)
    }

    /// `retrieval  ensemble  k  EER%  Acc%` with two decimals.
    pub fn table_row(&self) -> String {
        let k = self.k.map_or("-".to_string(), |k| k.to_string());
        let eer = self.eer_percent().map_or("n/a".to_string(), |e| format!("{e:.2}"));
        format!("{:<8}{:<8}{:>5}{:>9}{:>9.2}", self.retrieval, self.ensemble, k, eer, self.accuracy * 100.0)
    }

    pub fn table_header() -> String {
        format!("{:<8}{:<8}{:>5}{:>9}{:>9}", "system", "ens", "k", "EER%", "Acc%")
    }
}

fn labels_of(queries: &[QueryRecord]) -> Result<Vec<Label>> {
    queries.iter().map(|q| q.label.ok_or(Error::UnlabeledQuery(q.id))).collect()
}

fn baseline_predictions(queries: &[QueryRecord]) -> Vec<Prediction> {
    queries
        .iter()
        .map(|q| Prediction { query_id: q.id, score: q.score.get() as f64, ensemble: None, neighbor_count: 0 })
        .collect()
}

/// Predictions for every query under `method`, in input order. Labels are
/// not required.
pub fn predict_all(
    base: &KnowledgeBase,
    queries: &[QueryRecord],
    method: &Method,
    parallelism: usize,
) -> Result<Vec<Prediction>> {
    match *method {
        Method::Baseline => Ok(baseline_predictions(queries)),
        Method::Augmented { retrieval, ensemble, k } => {
            let sets = crate::retrieval::retrieve_batch(base, queries, retrieval, k, parallelism)?;
            queries.iter().zip(&sets).map(|(q, set)| predict(base, set, ensemble, q.id)).collect()
        }
    }
}

/// Retrieves, ensembles and scores a labeled query set.
pub fn evaluate(
    base: &KnowledgeBase,
    queries: &[QueryRecord],
    method: &Method,
    parallelism: usize,
) -> Result<(EvalReport, Vec<Prediction>)> {
    let labels = labels_of(queries)?;
    let predictions = predict_all(base, queries, method, parallelism)?;
    let report = EvalReport::from_predictions(method, &predictions, &labels)?;
    Ok((report, predictions))
}

/// Evaluates one retrieval strategy and ensemble at several `k` values,
/// retrieving once at the largest `k`.
pub fn evaluate_k_grid(
    base: &KnowledgeBase,
    queries: &[QueryRecord],
    retrieval: RetrievalStrategy,
    ensemble: EnsembleStrategy,
    ks: &[usize],
    parallelism: usize,
) -> Result<Vec<EvalReport>> {
    let labels = labels_of(queries)?;
    let Some(&k_max) = ks.iter().max() else {
        return Ok(Vec::new());
    };
    for &k in ks {
        Method::augmented(retrieval, ensemble, k).validate()?;
    }
    let candidates: Vec<Candidates> = candidates_batch(base, queries, retrieval.split(k_max), parallelism)?;
    ks.iter()
        .map(|&k| {
            let method = Method::augmented(retrieval, ensemble, k);
            let predictions = queries
                .iter()
                .zip(&candidates)
                .map(|(q, c)| predict(base, &c.compose(retrieval, k), ensemble, q.id))
                .collect::<Result<Vec<_>>>()?;
            EvalReport::from_predictions(&method, &predictions, &labels)
        })
        .collect()
}

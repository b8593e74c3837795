//! Training-free aggregation of retrieved neighbors into a prediction score.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::retrieval::NeighborSet;
use crate::store::KnowledgeBase;
use crate::types::{CmScore, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnsembleStrategy {
    #[serde(rename = "mv")]
    MajorityVote,
    #[serde(rename = "ratio")]
    Ratio,
    #[serde(rename = "avg")]
    Average,
}

impl EnsembleStrategy {
    pub const ALL: [EnsembleStrategy; 3] =
        [EnsembleStrategy::MajorityVote, EnsembleStrategy::Ratio, EnsembleStrategy::Average];

    pub fn name(self) -> &'static str {
        match self {
            EnsembleStrategy::MajorityVote => "mv",
            EnsembleStrategy::Ratio => "ratio",
            EnsembleStrategy::Average => "avg",
        }
    }
}

impl fmt::Display for EnsembleStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnsembleStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mv" => Ok(EnsembleStrategy::MajorityVote),
            "ratio" => Ok(EnsembleStrategy::Ratio),
            "avg" => Ok(EnsembleStrategy::Average),
            other => Err(Error::InvalidConfig(format!("unknown ensemble strategy '{other}'"))),
        }
    }
}

/// Final score for one query. `ensemble` is `None` for the baseline, which
/// passes the raw CM score through.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub query_id: u64,
    pub score: f64,
    pub ensemble: Option<EnsembleStrategy>,
    pub neighbor_count: usize,
}

impl Prediction {
    /// `query_id \t score \t ensemble \t neighbor_count`, score with nine
    /// decimals.
    pub fn tsv_row(&self) -> String {
        let ensemble = self.ensemble.map_or("none", EnsembleStrategy::name);
        format!("{}\t{:.9}\t{}\t{}", self.query_id, self.score, ensemble, self.neighbor_count)
    }
}

fn count_fake(labels: &[Label]) -> Result<usize> {
    if labels.is_empty() {
        return Err(Error::EmptyNeighborSet);
    }
    Ok(labels.iter().filter(|l| l.is_fake()).count())
}

/// 1.0 when fake labels outnumber real ones, 0.0 in the opposite case and
/// 0.5 on an exact tie.
pub fn majority_vote(labels: &[Label]) -> Result<f64> {
    let fake = count_fake(labels)?;
    let real = labels.len() - fake;
    Ok(match fake.cmp(&real) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Less => 0.0,
        std::cmp::Ordering::Equal => 0.5,
    })
}

/// Fraction of fake labels.
pub fn ratio_score(labels: &[Label]) -> Result<f64> {
    let fake = count_fake(labels)?;
    Ok(fake as f64 / labels.len() as f64)
}

/// Mean of the retrieved CM scores.
pub fn average_score(scores: &[CmScore]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyNeighborSet);
    }
    Ok(scores.iter().map(|s| s.get() as f64).sum::<f64>() / scores.len() as f64)
}

/// Applies `strategy` to the labels or scores of the rows named by
/// `neighbors`. The denominator is the deduplicated neighbor count.
pub fn predict(
    base: &KnowledgeBase,
    neighbors: &NeighborSet,
    strategy: EnsembleStrategy,
    query_id: u64,
) -> Result<Prediction> {
    if neighbors.is_empty() {
        return Err(Error::EmptyNeighborSet);
    }
    let len = base.len();
    if let Some(index) = neighbors.indices().find(|&i| i >= len) {
        return Err(Error::IndexOutOfRange { index, len });
    }
    let score = match strategy {
        EnsembleStrategy::MajorityVote | EnsembleStrategy::Ratio => {
            let labels: Vec<Label> = neighbors.indices().map(|i| base.labels()[i]).collect();
            if strategy == EnsembleStrategy::MajorityVote {
                majority_vote(&labels)?
            } else {
                ratio_score(&labels)?
            }
        }
        EnsembleStrategy::Average => {
            let scores: Vec<CmScore> =
                neighbors.indices().map(|i| CmScore::new(base.scores()[i])).collect::<Result<_>>()?;
            average_score(&scores)?
        }
    };
    Ok(Prediction { query_id, score, ensemble: Some(strategy), neighbor_count: neighbors.len() })
}

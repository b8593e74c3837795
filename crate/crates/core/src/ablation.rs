//! Profile attribute probing: drop attribute spans from every profile
//! vector and re-evaluate.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport, Method};
use crate::store::KnowledgeBase;
use crate::types::{Attribute, FeatureVector, ProfileLayout, QueryRecord};

/// Attribute names to drop from the profile vector.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct AttributeMask {
    excluded: BTreeSet<String>,
}

impl AttributeMask {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn excluding<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { excluded: names.into_iter().map(Into::into).collect() }
    }

    /// Parses `age,gender`; an empty string or `none` is the empty mask.
    pub fn parse(spec: &str) -> Self {
        let spec = spec.trim();
        if spec.is_empty() || spec == "none" {
            return Self::none();
        }
        Self::excluding(spec.split([',', '+']).map(str::trim).filter(|s| !s.is_empty()))
    }

    pub fn excluded(&self) -> impl Iterator<Item = &str> {
        self.excluded.iter().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.excluded.is_empty()
    }

    /// Layout of the kept attributes, original order preserved.
    pub fn reduced_layout(&self, layout: &ProfileLayout) -> Result<ProfileLayout> {
        self.check(layout)?;
        let kept: Vec<Attribute> =
            layout.attributes().iter().filter(|a| !self.excluded.contains(&a.name)).cloned().collect();
        ProfileLayout::new(kept)
    }

    fn check(&self, layout: &ProfileLayout) -> Result<()> {
        if let Some(unknown) = self.excluded.iter().find(|name| layout.span(name).is_none()) {
            return Err(Error::UnknownAttribute(unknown.clone()));
        }
        if layout.names().all(|n| self.excluded.contains(n)) {
            return Err(Error::AllAttributesExcluded);
        }
        Ok(())
    }

    fn project_into(&self, layout: &ProfileLayout, values: &[f32], out: &mut Vec<f32>) {
        for (name, span) in layout.spans() {
            if !self.excluded.contains(name) {
                out.extend_from_slice(&values[span]);
            }
        }
    }

    /// Table-style row label, e.g. `w/o age & gender`.
    pub fn label(&self) -> String {
        if self.is_empty() {
            "full profile".to_string()
        } else {
            format!("w/o {}", self.excluded.iter().cloned().collect::<Vec<_>>().join(" & "))
        }
    }
}

impl fmt::Display for AttributeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// The four probes: nothing removed, then age with gender, emotion, and
/// voice quality each removed.
pub fn default_masks() -> Vec<AttributeMask> {
    vec![
        AttributeMask::none(),
        AttributeMask::excluding(["age", "gender"]),
        AttributeMask::excluding(["emotion"]),
        AttributeMask::excluding(["voice_quality"]),
    ]
}

/// Concatenation of the spans of all non-excluded attributes.
pub fn apply_mask(v: &FeatureVector, layout: &ProfileLayout, mask: &AttributeMask) -> Result<FeatureVector> {
    mask.check(layout)?;
    if v.dim() != layout.dims() {
        return Err(Error::DimensionMismatch { expected: layout.dims(), actual: v.dim() });
    }
    let mut out = Vec::with_capacity(v.dim());
    mask.project_into(layout, v.as_slice(), &mut out);
    FeatureVector::new(out)
}

/// Masked view of a base: profile block projected, norms recomputed, CM
/// block shared.
pub fn mask_base(base: &KnowledgeBase, mask: &AttributeMask) -> Result<KnowledgeBase> {
    if mask.is_empty() {
        mask.check(base.layout())?;
        return Ok(base.clone());
    }
    let layout = base.layout();
    let reduced = mask.reduced_layout(layout)?;
    let mut prof = Vec::with_capacity(base.len() * reduced.dims());
    for row in base.prof().iter_rows() {
        mask.project_into(layout, row, &mut prof);
    }
    base.with_profiles(prof, reduced)
}

pub fn mask_queries(queries: &[QueryRecord], layout: &ProfileLayout, mask: &AttributeMask) -> Result<Vec<QueryRecord>> {
    queries
        .iter()
        .map(|q| {
            let prof = apply_mask(&q.prof, layout, mask).map_err(|e| Error::Query { id: q.id, source: Box::new(e) })?;
            Ok(QueryRecord { prof, ..q.clone() })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub mask: String,
    pub excluded: Vec<String>,
    pub report: EvalReport,
}

impl AblationRow {
    pub fn table_row(&self) -> String {
        let eer = self.report.eer_percent().map_or("n/a".to_string(), |e| format!("{e:.2}"));
        format!("{:<28}{:>9}{:>9.2}", self.mask, eer, self.report.accuracy * 100.0)
    }
}

/// True when a profile mask cannot change results for `method`.
pub fn mask_has_no_effect(method: &Method) -> bool {
    !matches!(method, Method::Augmented { retrieval, .. } if retrieval.uses_profiles())
}

/// Masks the base and the queries identically, then evaluates.
pub fn ablation_run(
    base: &KnowledgeBase,
    queries: &[QueryRecord],
    mask: &AttributeMask,
    method: &Method,
    parallelism: usize,
) -> Result<AblationRow> {
    let masked_base = mask_base(base, mask)?;
    let masked_queries = mask_queries(queries, base.layout(), mask)?;
    let (report, _) = evaluate(&masked_base, &masked_queries, method, parallelism)?;
    Ok(AblationRow { mask: mask.label(), excluded: mask.excluded().map(String::from).collect(), report })
}

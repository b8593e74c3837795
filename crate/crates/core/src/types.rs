//! Domain types shared by every stage of the pipeline.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Checks that `values` has exactly `expected_dim` elements and that all of
/// them are finite.
pub fn validate_vector(values: &[f32], expected_dim: usize) -> Result<()> {
    if values.len() != expected_dim {
        return Err(Error::DimensionMismatch { expected: expected_dim, actual: values.len() });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { index });
    }
    Ok(())
}

/// A non-empty vector of finite `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f32>);

impl FeatureVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, actual: 0 });
        }
        validate_vector(&values, values.len())?;
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }
}

impl AsRef<[f32]> for FeatureVector {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

/// Ground truth for one utterance. Fake is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    Real = 0,
    Fake = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_fake(self) -> bool {
        self == Label::Fake
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Real => Label::Fake,
            Label::Fake => Label::Real,
        }
    }
}

impl TryFrom<u64> for Label {
    type Error = Error;

    fn try_from(value: u64) -> Result<Self> {
        match value {
            0 => Ok(Label::Real),
            1 => Ok(Label::Fake),
            other => Err(Error::LabelInvalid(other.to_string())),
        }
    }
}

/// Countermeasure fake-probability, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CmScore(f32);

impl CmScore {
    pub fn new(value: f32) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::ScoreOutOfRange(value as f64))
        }
    }

    /// Validates a score given at double precision. Rejects values that only
    /// leave the open interval after rounding to `f32`.
    pub fn from_f64(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0 && value < 1.0) {
            return Err(Error::ScoreOutOfRange(value));
        }
        Self::new(value as f32).map_err(|_| Error::ScoreOutOfRange(value))
    }

    pub fn get(self) -> f32 {
        self.0
    }
}

/// One labeled reference utterance of the knowledge base.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeEntry {
    pub id: u64,
    pub cm: FeatureVector,
    pub prof: FeatureVector,
    pub label: Label,
    pub score: CmScore,
    pub meta: Option<String>,
}

/// One utterance to classify. `label` is only present in evaluation sets.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub id: u64,
    pub cm: FeatureVector,
    pub prof: FeatureVector,
    pub score: CmScore,
    pub label: Option<Label>,
    pub meta: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub width: usize,
}

/// Ordered partition of the profile vector into named attribute spans.
///
/// The descriptor form is a comma-separated list of `name:width` pairs, for
/// example `age:1,gender:2,emotion:257,voice_quality:25`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ProfileLayout {
    attributes: Vec<Attribute>,
}

impl ProfileLayout {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::InvalidLayout("layout has no attributes".into()));
        }
        for (i, attr) in attributes.iter().enumerate() {
            if attr.name.is_empty() || attr.name.contains([',', ':']) {
                return Err(Error::InvalidLayout(format!("bad attribute name '{}'", attr.name)));
            }
            if attr.width == 0 {
                return Err(Error::InvalidLayout(format!("attribute '{}' has zero width", attr.name)));
            }
            if attributes[..i].iter().any(|a| a.name == attr.name) {
                return Err(Error::InvalidLayout(format!("attribute '{}' repeated", attr.name)));
            }
        }
        Ok(Self { attributes })
    }

    /// Age scalar, gender one-hot, emotion trait scalar plus 256-d embedding,
    /// and the 25-d voice-quality block.
    pub fn default_voice_profile() -> Self {
        let attr = |name: &str, width| Attribute { name: name.to_string(), width };
        Self { attributes: vec![attr("age", 1), attr("gender", 2), attr("emotion", 257), attr("voice_quality", 25)] }
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    /// Total profile dimension.
    pub fn dims(&self) -> usize {
        self.attributes.iter().map(|a| a.width).sum()
    }

    /// Attributes paired with their half-open span over the profile vector.
    pub fn spans(&self) -> impl Iterator<Item = (&str, Range<usize>)> + '_ {
        let mut start = 0;
        self.attributes.iter().map(move |a| {
            let span = start..start + a.width;
            start += a.width;
            (a.name.as_str(), span)
        })
    }

    pub fn span(&self, name: &str) -> Option<Range<usize>> {
        self.spans().find(|(n, _)| *n == name).map(|(_, s)| s)
    }

    pub fn descriptor(&self) -> String {
        self.attributes.iter().map(|a| format!("{}:{}", a.name, a.width)).collect::<Vec<_>>().join(",")
    }
}

impl Default for ProfileLayout {
    fn default() -> Self {
        Self::default_voice_profile()
    }
}

/// Total dimension of a layout given as raw attributes; errors when the
/// attributes do not form a valid layout.
pub fn profile_dims(attributes: &[Attribute]) -> Result<usize> {
    ProfileLayout::new(attributes.to_vec()).map(|l| l.dims())
}

impl FromStr for ProfileLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Err(Error::InvalidLayout("empty descriptor".into()));
        }
        let attributes = s
            .split(',')
            .map(|pair| {
                let (name, width) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidLayout(format!("expected name:width, got '{pair}'")))?;
                let width = width.trim().parse().map_err(|_| Error::InvalidLayout(format!("bad width in '{pair}'")))?;
                Ok(Attribute { name: name.trim().to_string(), width })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(attributes)
    }
}

impl TryFrom<String> for ProfileLayout {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ProfileLayout> for String {
    fn from(layout: ProfileLayout) -> String {
        layout.descriptor()
    }
}

impl fmt::Display for ProfileLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_vector_cases() {
        assert!(validate_vector(&[1.0, 2.0], 2).is_ok());
        assert!(matches!(validate_vector(&[1.0], 2), Err(Error::DimensionMismatch { expected: 2, actual: 1 })));
        assert!(matches!(validate_vector(&[f32::NAN, 0.0], 2), Err(Error::NonFiniteValue { index: 0 })));
        assert!(matches!(validate_vector(&[0.0, f32::INFINITY], 2), Err(Error::NonFiniteValue { index: 1 })));
    }

    #[test]
    fn feature_vector_rejects_empty() {
        assert!(FeatureVector::new(vec![]).is_err());
        assert_eq!(FeatureVector::new(vec![0.5]).unwrap().dim(), 1);
    }

    #[test]
    fn default_layout_is_285_wide() {
        let layout = ProfileLayout::default();
        assert_eq!(layout.dims(), 285);
        let spans: Vec<_> = layout.spans().map(|(n, s)| (n.to_string(), s)).collect();
        assert_eq!(
            spans,
            vec![
                ("age".to_string(), 0..1),
                ("gender".to_string(), 1..3),
                ("emotion".to_string(), 3..260),
                ("voice_quality".to_string(), 260..285),
            ]
        );
    }

    #[test]
    fn profile_dims_cases() {
        let default = ProfileLayout::default();
        assert_eq!(profile_dims(default.attributes()).unwrap(), 285);
        let vq = [Attribute { name: "voice_quality".into(), width: 25 }];
        assert_eq!(profile_dims(&vq).unwrap(), 25);
        assert!(matches!(profile_dims(&[]), Err(Error::InvalidLayout(_))));
    }

    #[test]
    fn spans_partition_the_vector() {
        let layout: ProfileLayout = "a:3,b:1,c:7".parse().unwrap();
        let mut owners = vec![0usize; layout.dims()];
        for (_, span) in layout.spans() {
            for j in span {
                owners[j] += 1;
            }
        }
        assert!(owners.iter().all(|&c| c == 1));
    }

    #[test]
    fn layout_descriptor_round_trip() {
        let layout = ProfileLayout::default();
        assert_eq!(layout.descriptor(), "age:1,gender:2,emotion:257,voice_quality:25");
        assert_eq!(layout.descriptor().parse::<ProfileLayout>().unwrap(), layout);
    }

    #[test]
    fn bad_layouts() {
        for bad in ["", "a", "a:0", "a:1,a:2", "a:x", ":3"] {
            assert!(bad.parse::<ProfileLayout>().is_err(), "{bad}");
        }
    }

    #[test]
    fn score_bounds() {
        assert!(CmScore::new(0.0).is_err());
        assert!(CmScore::new(1.0).is_err());
        assert!(CmScore::new(0.5).is_ok());
        // rounds to 1.0f32
        assert!(CmScore::from_f64(0.999_999_999).is_err());
        assert!(CmScore::from_f64(f64::NAN).is_err());
    }

    #[test]
    fn label_from_int() {
        assert_eq!(Label::try_from(0).unwrap(), Label::Real);
        assert_eq!(Label::try_from(1).unwrap(), Label::Fake);
        assert!(matches!(Label::try_from(2), Err(Error::LabelInvalid(_))));
    }
}

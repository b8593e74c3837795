//! Equal error rate and fixed-threshold accuracy, with fake as the positive
//! class.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::Label;

/// Fixed decision threshold; `score >= 0.5` classifies as fake.
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    pub score: f64,
    pub label: Label,
}

impl ScoredSample {
    pub fn new(score: f64, label: Label) -> Self {
        Self { score, label }
    }

    pub fn predicted_fake(&self) -> bool {
        self.score >= THRESHOLD
    }
}

/// Confusion counts at the fixed threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OperatingPoint {
    pub true_fake: usize,
    pub false_fake: usize,
    pub true_real: usize,
    pub false_real: usize,
}

impl OperatingPoint {
    pub fn tally(samples: &[ScoredSample]) -> Self {
        let mut op = OperatingPoint::default();
        for s in samples {
            match (s.predicted_fake(), s.label) {
                (true, Label::Fake) => op.true_fake += 1,
                (true, Label::Real) => op.false_fake += 1,
                (false, Label::Real) => op.true_real += 1,
                (false, Label::Fake) => op.false_real += 1,
            }
        }
        op
    }

    pub fn correct(&self) -> usize {
        self.true_fake + self.true_real
    }

    pub fn total(&self) -> usize {
        self.correct() + self.false_fake + self.false_real
    }
}

pub fn accuracy(samples: &[ScoredSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let op = OperatingPoint::tally(samples);
    Ok(op.correct() as f64 / op.total() as f64)
}

/// Equal error rate.
///
/// Operating points are taken at every distinct score (plus sentinels below
/// the minimum and above the maximum), with `FAR(t)` the share of real
/// samples scoring `>= t` and `miss(t)` the share of fake samples scoring
/// `< t`. The EER is the linear interpolation of the first crossing of
/// `FAR - miss` through zero. With at most two distinct scores (binary
/// outputs such as majority voting) it is `(FAR + miss) / 2` at the single
/// split between the values.
pub fn eer(samples: &[ScoredSample]) -> Result<f64> {
    let n_fake = samples.iter().filter(|s| s.label.is_fake()).count();
    let n_real = samples.len() - n_fake;
    if n_real == 0 {
        return Err(Error::MissingClass("real"));
    }
    if n_fake == 0 {
        return Err(Error::MissingClass("fake"));
    }

    let mut sorted: Vec<&ScoredSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));

    // Walk thresholds upward. Before the first distinct value every sample is
    // at or above the threshold: FAR = 1, miss = 0.
    let (real_total, fake_total) = (n_real as f64, n_fake as f64);
    let mut real_below = 0usize;
    let mut fake_below = 0usize;
    let mut points: Vec<(f64, f64)> = vec![(1.0, 0.0)];
    let mut i = 0;
    while i < sorted.len() {
        let value = sorted[i].score;
        if i > 0 {
            let far = (n_real - real_below) as f64 / real_total;
            let miss = fake_below as f64 / fake_total;
            points.push((far, miss));
        }
        while i < sorted.len() && sorted[i].score == value {
            match sorted[i].label {
                Label::Real => real_below += 1,
                Label::Fake => fake_below += 1,
            }
            i += 1;
        }
    }
    points.push((0.0, 1.0));
    // points = [below-min, t = v_2, ..., t = v_m, above-max]; the threshold at
    // v_1 coincides with below-min.

    let distinct = points.len() - 1;
    if distinct <= 2 {
        let (far, miss) = if distinct == 2 { points[1] } else { points[0] };
        return Ok((far + miss) / 2.0);
    }

    for w in points.windows(2) {
        let (far_a, miss_a) = w[0];
        let (far_b, miss_b) = w[1];
        let d_a = far_a - miss_a;
        let d_b = far_b - miss_b;
        if d_a > 0.0 && d_b <= 0.0 {
            if d_b == 0.0 {
                return Ok(far_b);
            }
            let t = d_a / (d_a - d_b);
            return Ok(far_a + t * (far_b - far_a));
        }
    }
    // The sequence starts at +1 and ends at -1, so a crossing always exists.
    unreachable!("FAR - miss never changed sign")
}

#[cfg(test)]
mod tests {
    use super::*;

    const R: Label = Label::Real;
    const F: Label = Label::Fake;

    fn samples(v: &[(f64, Label)]) -> Vec<ScoredSample> {
        v.iter().map(|&(s, l)| ScoredSample::new(s, l)).collect()
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&samples(&[(0.9, F), (0.1, R)])).unwrap(), 1.0);
        assert_eq!(accuracy(&samples(&[(0.5, F)])).unwrap(), 1.0);
        assert_eq!(accuracy(&samples(&[(0.9, R), (0.1, F)])).unwrap(), 0.0);
        assert!(matches!(accuracy(&[]), Err(Error::EmptySamples)));
    }

    #[test]
    fn eer_perfect_separation() {
        let s = samples(&[(0.1, R), (0.2, R), (0.3, R), (0.6, F), (0.7, F), (0.95, F)]);
        assert_eq!(eer(&s).unwrap(), 0.0);
    }

    #[test]
    fn eer_inverted_pair() {
        assert_eq!(eer(&samples(&[(0.9, R), (0.1, F)])).unwrap(), 1.0);
    }

    #[test]
    #[rustfmt::skip]
    fn eer_binary_average_rule() {
        // 5 real: one scored 1 -> FAR 0.2; 5 fake: two scored 0 -> miss 0.4
        let s = samples(&[
            (0.0, R), (0.0, R), (0.0, R), (0.0, R), (1.0, R),
            (0.0, F), (0.0, F), (1.0, F), (1.0, F), (1.0, F),
        ]);
        assert!((eer(&s).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn eer_single_value_is_half() {
        assert_eq!(eer(&samples(&[(0.5, R), (0.5, F), (0.5, F)])).unwrap(), 0.5);
    }

    #[test]
    fn eer_interpolates() {
        let s = samples(&[(0.1, R), (0.2, F), (0.3, R), (0.4, R), (0.5, F)]);
        // points: below (1,0); t=.2 (2/3,0); t=.3 (2/3,1/2); t=.4 (1/3,1/2); t=.5 (0,1/2); above (0,1)
        // crossing between (2/3,1/2) d=1/6 and (1/3,1/2) d=-1/6 -> t=1/2 -> FAR 1/2
        assert!((eer(&s).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eer_missing_class() {
        assert!(matches!(eer(&samples(&[(0.3, R)])), Err(Error::MissingClass("fake"))));
        assert!(matches!(eer(&samples(&[(0.3, F)])), Err(Error::MissingClass("real"))));
    }
}

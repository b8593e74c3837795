//! Seeded synthetic knowledge bases and query sets.
//!
//! CM embeddings are isotropic unit-variance Gaussian clusters: real around
//! the origin, seen fakes at `cluster_sep` along a random unit axis `e`, and
//! zero-day fakes displaced a further `zeroday_shift` along a unit direction
//! orthogonal to `e`. A CM score is `logistic(t)` with `t = x.e - sep/2`,
//! the signed distance to the real/fake midplane, clamped to `[0.01, 0.99]`.
//! For zero-day queries `t` is scaled by `1 - 2 * score_miscalibration`:
//! at 0.5 every zero-day score collapses to 0.5, and at 1.0 the CM scores
//! zero-day fakes exactly like real speech.
//!
//! # Random stream
//!
//! Generator: xoshiro256++ seeded through SplitMix64 from `seed`
//! (`rand_xoshiro` 0.6, `seed_from_u64`). Uniforms are `(next_u64 >> 11) *
//! 2^-53`. Normals use the Box-Muller transform with both outputs consumed in
//! order. Draw order: the fake axis, the zero-day direction, the two emotion
//! centroids, the two voice-quality means, then knowledge rows (real first,
//! then seen fakes), then queries (real first, then zero-day). Each row draws
//! its CM vector, then age, gender, emotion trait, emotion embedding and the
//! voice-quality block.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{CmScore, FeatureVector, KnowledgeEntry, Label, ProfileLayout, QueryRecord};

pub const RNG_NAME: &str = "xoshiro256++/splitmix64-seeded (rand_xoshiro 0.6), box-muller normals";
pub const GENERATOR_VERSION: u32 = 1;

const EMOTION_DIM: usize = 256;
const VOICE_QUALITY_DIM: usize = 25;
const EMOTION_NOISE: f64 = 0.08;
const VOICE_QUALITY_NOISE: f64 = 0.12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub d_cm: usize,
    #[serde(default = "default_d_prof")]
    pub d_prof: usize,
    pub n_real: usize,
    pub n_seen_fake: usize,
    pub n_query_real: usize,
    pub n_query_zeroday: usize,
    /// Real-to-fake center distance in within-cluster standard deviations.
    pub cluster_sep: f64,
    /// Zero-day center offset from the seen-fake center, orthogonal to the
    /// real/fake axis.
    pub zeroday_shift: f64,
    /// 0 leaves zero-day scores calibrated, 1 makes them look real.
    pub score_miscalibration: f64,
}

fn default_d_prof() -> usize {
    ProfileLayout::default().dims()
}

impl SynthConfig {
    /// Desk-scale zero-day scenario used by the acceptance experiment.
    pub fn zero_day(seed: u64) -> Self {
        Self {
            seed,
            d_cm: 32,
            d_prof: default_d_prof(),
            n_real: 2000,
            n_seen_fake: 2000,
            n_query_real: 200,
            n_query_zeroday: 200,
            cluster_sep: 12.0,
            zeroday_shift: 3.0,
            score_miscalibration: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.d_cm == 0 {
            return bad("d_cm must be at least 1");
        }
        if self.d_prof != default_d_prof() {
            return bad("d_prof must match the default profile layout (285)");
        }
        if self.n_real == 0 || self.n_seen_fake == 0 || self.n_query_real == 0 || self.n_query_zeroday == 0 {
            return bad("all counts must be at least 1");
        }
        if !(self.cluster_sep.is_finite() && self.cluster_sep > 0.0) {
            return bad("cluster_sep must be positive");
        }
        if !(self.zeroday_shift.is_finite() && self.zeroday_shift >= 0.0) {
            return bad("zeroday_shift must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.score_miscalibration) {
            return bad("score_miscalibration must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub knowledge: Vec<KnowledgeEntry>,
    pub queries: Vec<QueryRecord>,
}

struct Stream {
    rng: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl Stream {
    fn new(seed: u64) -> Self {
        Self { rng: Xoshiro256PlusPlus::seed_from_u64(seed), spare: None }
    }

    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    fn below(&mut self, n: u64) -> u64 {
        ((self.uniform() * n as f64) as u64).min(n - 1)
    }

    fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    fn unit(&mut self, n: usize) -> Vec<f64> {
        normalized(self.normals(n))
    }
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Real,
    SeenFake,
    ZeroDay,
}

struct Geometry {
    axis: Vec<f64>,
    shift_dir: Vec<f64>,
    emotion_centers: [Vec<f64>; 2],
    vq_means: [Vec<f64>; 2],
}

struct Row {
    cm: Vec<f32>,
    prof: Vec<f32>,
    score: f32,
}

impl Geometry {
    fn draw(s: &mut Stream, d_cm: usize) -> Self {
        let axis = s.unit(d_cm);
        let mut shift_dir = s.normals(d_cm);
        if d_cm > 1 {
            let along: f64 = shift_dir.iter().zip(&axis).map(|(a, b)| a * b).sum();
            shift_dir.iter_mut().zip(&axis).for_each(|(x, e)| *x -= along * e);
            shift_dir = normalized(shift_dir);
        } else {
            shift_dir = axis.clone();
        }
        let emotion_centers = [s.unit(EMOTION_DIM), s.unit(EMOTION_DIM)];
        let mut vq_mean = || (0..VOICE_QUALITY_DIM).map(|_| 0.25 + 0.5 * s.uniform()).collect::<Vec<_>>();
        let vq_means = [vq_mean(), vq_mean()];
        Self { axis, shift_dir, emotion_centers, vq_means }
    }

    fn row(&self, s: &mut Stream, cfg: &SynthConfig, kind: Kind) -> Row {
        let (along, across) = match kind {
            Kind::Real => (0.0, 0.0),
            Kind::SeenFake => (cfg.cluster_sep, 0.0),
            Kind::ZeroDay => (cfg.cluster_sep, cfg.zeroday_shift),
        };
        let cm: Vec<f64> =
            (0..cfg.d_cm).map(|j| along * self.axis[j] + across * self.shift_dir[j] + s.normal()).collect();
        let mut t = cm.iter().zip(&self.axis).map(|(x, e)| x * e).sum::<f64>() - cfg.cluster_sep / 2.0;
        if kind == Kind::ZeroDay {
            t *= 1.0 - 2.0 * cfg.score_miscalibration;
        }
        let score = logistic(t).clamp(0.01, 0.99) as f32;

        let class = usize::from(kind != Kind::Real);
        let mut prof = Vec::with_capacity(cfg.d_prof);
        prof.push((1 + s.below(10)) as f32);
        let male = s.below(2) == 0;
        prof.extend([f32::from(u8::from(male)), f32::from(u8::from(!male))]);
        prof.push(s.below(9) as f32);
        let emb: Vec<f64> = self.emotion_centers[class].iter().map(|c| c + EMOTION_NOISE * s.normal()).collect();
        prof.extend(normalized(emb).into_iter().map(|v| v as f32));
        prof.extend(
            self.vq_means[class]
                .iter()
                .map(|m| (m + VOICE_QUALITY_NOISE * (2.0 * s.uniform() - 1.0)).clamp(0.0, 1.0) as f32),
        );
        Row { cm: cm.into_iter().map(|v| v as f32).collect(), prof, score }
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let mut s = Stream::new(cfg.seed);
    let geo = Geometry::draw(&mut s, cfg.d_cm);

    let mut knowledge = Vec::with_capacity(cfg.n_real + cfg.n_seen_fake);
    let kinds = std::iter::repeat_n(Kind::Real, cfg.n_real).chain(std::iter::repeat_n(Kind::SeenFake, cfg.n_seen_fake));
    for (id, kind) in kinds.enumerate() {
        let row = geo.row(&mut s, cfg, kind);
        let (label, meta) = if kind == Kind::Real { (Label::Real, "real") } else { (Label::Fake, "seen_fake") };
        knowledge.push(KnowledgeEntry {
            id: id as u64,
            cm: FeatureVector::new(row.cm)?,
            prof: FeatureVector::new(row.prof)?,
            label,
            score: CmScore::new(row.score)?,
            meta: Some(meta.to_string()),
        });
    }

    let mut queries = Vec::with_capacity(cfg.n_query_real + cfg.n_query_zeroday);
    let kinds = std::iter::repeat_n(Kind::Real, cfg.n_query_real)
        .chain(std::iter::repeat_n(Kind::ZeroDay, cfg.n_query_zeroday));
    for (id, kind) in kinds.enumerate() {
        let row = geo.row(&mut s, cfg, kind);
        let (label, meta) = if kind == Kind::Real { (Label::Real, "real") } else { (Label::Fake, "zeroday") };
        queries.push(QueryRecord {
            id: id as u64,
            cm: FeatureVector::new(row.cm)?,
            prof: FeatureVector::new(row.prof)?,
            score: CmScore::new(row.score)?,
            label: Some(label),
            meta: Some(meta.to_string()),
        });
    }
    Ok(SynthData { knowledge, queries })
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    id: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<u8>,
    score: f32,
    cm: &'a [f32],
    prof: &'a [f32],
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<&'a str>,
}

fn header(cfg: &SynthConfig, part: &str) -> String {
    format!(
        "# rakb-synth v{GENERATOR_VERSION} {part} rng={RNG_NAME} seed={} config={}\n",
        cfg.seed,
        serde_json::to_string(cfg).expect("config serializes")
    )
}

fn write_jsonl<'a>(path: &Path, header: &str, records: impl Iterator<Item = JsonRecord<'a>>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(header.as_bytes()).map_err(io)?;
    for r in records {
        serde_json::to_writer(&mut w, &r).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes `knowledge.jsonl` and `queries.jsonl` into `dir`. Each file starts
/// with a `#` header line naming the generator, RNG and config.
pub fn write_dataset(cfg: &SynthConfig, data: &SynthData, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_jsonl(
        &dir.join("knowledge.jsonl"),
        &header(cfg, "knowledge"),
        data.knowledge.iter().map(|e| JsonRecord {
            id: e.id,
            label: Some(e.label.as_u8()),
            score: e.score.get(),
            cm: e.cm.as_slice(),
            prof: e.prof.as_slice(),
            meta: e.meta.as_deref(),
        }),
    )?;
    write_jsonl(
        &dir.join("queries.jsonl"),
        &header(cfg, "queries"),
        data.queries.iter().map(|q| JsonRecord {
            id: q.id,
            label: q.label.map(Label::as_u8),
            score: q.score.get(),
            cm: q.cm.as_slice(),
            prof: q.prof.as_slice(),
            meta: q.meta.as_deref(),
        }),
    )
}

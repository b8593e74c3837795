//! Acceptance suite. Runs without the libtest harness so that each criterion
//! prints exactly one PASS/FAIL line; the process fails if any line is FAIL.
//!
//! Oracles here are written independently of the library: plain sequential
//! f64 sums, full sorts, and threshold enumeration.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rakb::ensemble::{average_score, majority_vote, ratio_score};
use rakb::eval::{evaluate, predict_all};
use rakb::metrics::{eer, ScoredSample};
use rakb::retrieval::{hybrid_split, top_k, Space};
use rakb::store::{self, KnowledgeBase};
use rakb::synthetic::{self, SynthConfig};
use rakb::{
    apply_mask, retrieve, retrieve_batch, AttributeMask, CmScore, EnsembleStrategy, Error, FeatureVector, Label,
    Method, ProfileLayout, QueryRecord, RetrievalStrategy,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_xoshiro::rand_core::RngCore;
use rand_xoshiro::Xoshiro256PlusPlus;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- oracles

fn oracle_cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut aa = 0.0f64;
    let mut bb = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        dot += *x as f64 * *y as f64;
        aa += *x as f64 * *x as f64;
        bb += *y as f64 * *y as f64;
    }
    if aa == 0.0 || bb == 0.0 {
        return -1.0;
    }
    (dot / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0)
}

fn rank(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0))
}

/// All-pairs reference: score every row, sort, keep the first k.
fn oracle_top_k(rows: &[Vec<f32>], q: &[f32], k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = rows.iter().enumerate().map(|(i, r)| (i, oracle_cosine(r, q))).collect();
    all.sort_by(rank);
    all.truncate(k);
    all
}

fn oracle_hybrid(cm: &[Vec<f32>], prof: &[Vec<f32>], q_cm: &[f32], q_prof: &[f32], k: usize) -> Vec<(usize, f64)> {
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for (i, s) in oracle_top_k(cm, q_cm, k / 2).into_iter().chain(oracle_top_k(prof, q_prof, k - k / 2)) {
        let e = best.entry(i).or_insert(s);
        if s > *e {
            *e = s;
        }
    }
    let mut out: Vec<_> = best.into_iter().collect();
    out.sort_by(rank);
    out
}

/// FAR and miss with fake as the positive class, decision `score >= t`.
fn far_miss(scores: &[(f64, bool)], t: f64) -> (f64, f64) {
    let real: Vec<f64> = scores.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let fake: Vec<f64> = scores.iter().filter(|s| s.1).map(|s| s.0).collect();
    let far = real.iter().filter(|&&s| s >= t).count() as f64 / real.len() as f64;
    let miss = fake.iter().filter(|&&s| s < t).count() as f64 / fake.len() as f64;
    (far, miss)
}

/// Brute-force EER: operating points at -inf, every midpoint between
/// adjacent distinct scores, and +inf. Each polyline segment is intersected
/// with FAR = miss and the smallest crossing value is kept. Score sets with
/// at most two distinct values use (FAR + miss) / 2 at the split.
fn oracle_eer(scores: &[(f64, bool)]) -> f64 {
    let mut distinct: Vec<f64> = scores.iter().map(|s| s.0).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() == 1 {
        let (far, miss) = far_miss(scores, distinct[0]);
        return (far + miss) / 2.0;
    }
    if distinct.len() == 2 {
        let (far, miss) = far_miss(scores, (distinct[0] + distinct[1]) / 2.0);
        return (far + miss) / 2.0;
    }
    let mut thresholds = vec![f64::NEG_INFINITY];
    thresholds.extend(distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    thresholds.push(f64::INFINITY);
    let points: Vec<(f64, f64)> = thresholds.iter().map(|&t| far_miss(scores, t)).collect();
    let mut best = f64::INFINITY;
    for w in points.windows(2) {
        let (fa, ma) = w[0];
        let (fb, mb) = w[1];
        let (da, db) = (fa - ma, fb - mb);
        if da == 0.0 {
            best = best.min(fa.max(ma));
        }
        if db == 0.0 {
            best = best.min(fb.max(mb));
        }
        if (da > 0.0 && db < 0.0) || (da < 0.0 && db > 0.0) {
            let t = da / (da - db);
            let far = fa + t * (fb - fa);
            let miss = ma + t * (mb - ma);
            best = best.min(far.max(miss));
        }
    }
    best
}

// --------------------------------------------------------------- fixtures

fn layout(d: usize) -> ProfileLayout {
    format!("p:{d}").parse().unwrap()
}

fn base_from(cm: &[Vec<f32>], prof: &[Vec<f32>], labels: &[Label], scores: &[f32]) -> KnowledgeBase {
    let n = cm.len();
    KnowledgeBase::from_columns(
        (0..n as u64).collect(),
        labels.to_vec(),
        scores.to_vec(),
        cm.concat(),
        cm[0].len(),
        prof.concat(),
        layout(prof[0].len()),
    )
    .unwrap()
}

fn query(id: u64, cm: Vec<f32>, prof: Vec<f32>) -> QueryRecord {
    QueryRecord {
        id,
        cm: FeatureVector::new(cm).unwrap(),
        prof: FeatureVector::new(prof).unwrap(),
        score: CmScore::new(0.5).unwrap(),
        label: None,
        meta: None,
    }
}

/// Random rows of one of three kinds: a coarse integer grid (many exact ties
/// and some zero rows), Gaussian rows with exact duplicates and power-of-two
/// rescaled copies, or plain Gaussian rows.
fn random_rows(rng: &mut StdRng, n: usize, d: usize, kind: u32) -> Vec<Vec<f32>> {
    let mut rows: Vec<Vec<f32>> = Vec::with_capacity(n);
    for i in 0..n {
        let row = match kind {
            0 => (0..d).map(|_| rng.gen_range(-2i32..=2) as f32).collect(),
            1 if i > 0 && rng.gen_bool(0.3) => {
                let src = rows[rng.gen_range(0..i)].clone();
                let scale = [1.0f32, 2.0, 0.5, 4.0][rng.gen_range(0..4)];
                src.iter().map(|v| v * scale).collect()
            }
            _ => (0..d).map(|_| rng.gen::<f32>() * 2.0 - 1.0).collect(),
        };
        rows.push(row);
    }
    rows
}

// -------------------------------------------------------------- criteria

fn criterion_1() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xC1);
    let start = Instant::now();
    let mut checked = 0usize;
    for inst in 0..1200 {
        let n = rng.gen_range(1..=500);
        let d_cm = rng.gen_range(1..=64);
        let d_prof = rng.gen_range(1..=64);
        let kind = (inst % 3) as u32;
        let cm = random_rows(&mut rng, n, d_cm, kind);
        let prof = random_rows(&mut rng, n, d_prof, kind);
        let labels: Vec<Label> = (0..n).map(|_| if rng.gen_bool(0.5) { Label::Fake } else { Label::Real }).collect();
        let base = base_from(&cm, &prof, &labels, &vec![0.5; n]);
        let mut q_cm = random_rows(&mut rng, 1, d_cm, kind).pop().unwrap();
        if rng.gen_bool(0.02) {
            q_cm.iter_mut().for_each(|v| *v = 0.0);
        }
        let q_prof = random_rows(&mut rng, 1, d_prof, kind).pop().unwrap();
        let q = query(0, q_cm.clone(), q_prof.clone());
        let k = [1, 2, 5, 17, n][rng.gen_range(0..5)];

        for strategy in RetrievalStrategy::ALL {
            if strategy == RetrievalStrategy::Hybrid && k < 2 {
                continue;
            }
            let got = retrieve(&base, &q, strategy, k).map_err(|e| format!("instance {inst}: {e}"))?;
            let want = match strategy {
                RetrievalStrategy::CmOnly => oracle_top_k(&cm, &q_cm, k),
                RetrievalStrategy::ProfileOnly => oracle_top_k(&prof, &q_prof, k),
                RetrievalStrategy::Hybrid => oracle_hybrid(&cm, &prof, &q_cm, &q_prof, k),
            };
            let got_idx: Vec<usize> = got.indices().collect();
            let want_idx: Vec<usize> = want.iter().map(|w| w.0).collect();
            ensure(got_idx == want_idx, || {
                format!("instance {inst} ({strategy}, n={n}, k={k}): {got_idx:?} != {want_idx:?}")
            })?;
            for (g, w) in got.neighbors().iter().zip(&want) {
                ensure((g.similarity - w.1).abs() <= 1e-12, || {
                    format!("instance {inst}: similarity {} vs {}", g.similarity, w.1)
                })?;
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:.1?}, limit 60s"))?;
    Ok(format!("1200 instances, {checked} strategy checks, exact order, {elapsed:.1?} (< 60s)"))
}

fn samples_of(scores: &[(f64, bool)]) -> Vec<ScoredSample> {
    scores.iter().map(|&(s, f)| ScoredSample::new(s, if f { Label::Fake } else { Label::Real })).collect()
}

fn criterion_2() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xC2);
    let mut max_dev = 0.0f64;
    let (mut binary_sets, mut tie_sets) = (0, 0);
    for set in 0..600 {
        let n = rng.gen_range(2..=200);
        let kind = set % 4;
        let mut scores: Vec<(f64, bool)> = (0..n)
            .map(|_| {
                let fake = rng.gen_bool(0.5);
                let s = match kind {
                    // continuous, class-shifted
                    0 => (rng.gen::<f64>() + if fake { 0.3 } else { 0.0 }).min(1.0),
                    // heavy ties: a handful of levels
                    1 => rng.gen_range(0..6) as f64 / 5.0,
                    // binary-valued outputs
                    2 => {
                        if rng.gen_bool(if fake { 0.7 } else { 0.3 }) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    // ratio-like outputs with ties at 0.5
                    _ => rng.gen_range(0..=20) as f64 / 20.0,
                };
                (s, fake)
            })
            .collect();
        // both classes present
        scores[0].1 = false;
        scores[1].1 = true;
        let got = eer(&samples_of(&scores)).map_err(|e| format!("set {set}: {e}"))?;
        let want = oracle_eer(&scores);
        max_dev = max_dev.max((got - want).abs());
        ensure((got - want).abs() <= 1e-9, || format!("set {set} (kind {kind}, n={n}): {got} vs {want}"))?;
        if kind == 1 {
            tie_sets += 1;
        }
        if kind == 2 {
            binary_sets += 1;
            // (FAR + miss) / 2 at the 0/1 split, counted directly
            let n_real = scores.iter().filter(|s| !s.1).count() as f64;
            let n_fake = scores.iter().filter(|s| s.1).count() as f64;
            let fa = scores.iter().filter(|s| !s.1 && s.0 == 1.0).count() as f64 / n_real;
            let mi = scores.iter().filter(|s| s.1 && s.0 == 0.0).count() as f64 / n_fake;
            let distinct = scores.iter().any(|s| s.0 == 0.0) && scores.iter().any(|s| s.0 == 1.0);
            let rule = if distinct { (fa + mi) / 2.0 } else { 0.5 };
            ensure(got == rule, || format!("binary set {set}: {got} != (FAR+miss)/2 = {rule}"))?;
        }
    }
    // The constructed 10-sample case: FAR 0.2, miss 0.4.
    let mut ten = vec![(1.0, false); 1];
    ten.extend(vec![(0.0, false); 4]);
    ten.extend(vec![(0.0, true); 2]);
    ten.extend(vec![(1.0, true); 3]);
    let got = eer(&samples_of(&ten)).map_err(|e| e.to_string())?;
    ensure((got - 0.3).abs() < 1e-15, || format!("10-sample binary case gave {got}, expected 0.3"))?;
    Ok(format!("600 sets ({tie_sets} tie-heavy, {binary_sets} binary exact), max |diff| {max_dev:.1e} (<= 1e-9)"))
}

fn criterion_3() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xC3);
    for k in 2..=11usize {
        let (k1, k2) = hybrid_split(k);
        ensure(k1 == k / 2 && k2 == k.div_ceil(2) && k1 + k2 == k, || format!("split({k}) = ({k1},{k2})"))?;
    }
    let mut equal_cases = 0;
    for inst in 0..1000 {
        let n = rng.gen_range(12..=200);
        let d = rng.gen_range(2..=16);
        let disjoint_by_construction = inst % 2 == 0;
        let q_cm: Vec<f32> = (0..d).map(|_| rng.gen::<f32>() + 0.5).collect();
        let q_prof: Vec<f32> = (0..d).map(|_| rng.gen::<f32>() + 0.5).collect();
        let mut cm = random_rows(&mut rng, n, d, 2);
        let mut prof = random_rows(&mut rng, n, d, 2);
        if disjoint_by_construction {
            // first half near the query in CM space only, second half in
            // profile space only
            for i in 0..n {
                let near = |q: &[f32], rng: &mut StdRng| q.iter().map(|v| v + 0.01 * rng.gen::<f32>()).collect();
                let far = |q: &[f32]| q.iter().map(|v| -v).collect();
                if i < n / 2 {
                    cm[i] = near(&q_cm, &mut rng);
                    prof[i] = far(&q_prof);
                } else {
                    cm[i] = far(&q_cm);
                    prof[i] = near(&q_prof, &mut rng);
                }
            }
        }
        let labels = vec![Label::Real; n];
        let base = base_from(&cm, &prof, &labels, &vec![0.5; n]);
        let q = query(0, q_cm.clone(), q_prof.clone());
        let k = if inst % 3 == 0 { rng.gen_range(2..=n) } else { rng.gen_range(2..=11) };
        let (k1, k2) = hybrid_split(k);
        let set = retrieve(&base, &q, RetrievalStrategy::Hybrid, k).map_err(|e| e.to_string())?;
        let a = top_k(&base, &q_cm, Space::Cm, k1.max(1)).map_err(|e| e.to_string())?;
        let b = top_k(&base, &q_prof, Space::Prof, k2).map_err(|e| e.to_string())?;
        let a: Vec<usize> = if k1 == 0 { Vec::new() } else { a.indices().collect() };
        let b: Vec<usize> = b.indices().collect();
        let disjoint = a.iter().all(|i| !b.contains(i));
        ensure(set.len() <= k, || format!("instance {inst}: |N| = {} > k = {k}", set.len()))?;
        if disjoint {
            ensure(set.len() == k, || format!("instance {inst}: disjoint halves but |N| = {} != {k}", set.len()))?;
            equal_cases += 1;
        }
        if disjoint_by_construction && k <= n / 2 {
            ensure(disjoint, || format!("instance {inst}: constructed halves overlap"))?;
        }
        let mut union: Vec<usize> = a.iter().chain(&b).copied().collect();
        union.sort_unstable();
        union.dedup();
        let mut got: Vec<usize> = set.indices().collect();
        got.sort_unstable();
        ensure(got == union, || format!("instance {inst}: hybrid set is not the union of the halves"))?;
    }
    Ok(format!(
        "split verified for k in 2..=11; 1000 instances, |N| <= k always, |N| = k in {equal_cases} disjoint cases"
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xC4);
    for m in 0..1500 {
        let len = rng.gen_range(1..=200);
        let p = rng.gen::<f64>();
        let labels: Vec<Label> = (0..len).map(|_| if rng.gen_bool(p) { Label::Fake } else { Label::Real }).collect();
        let flipped: Vec<Label> = labels.iter().map(|l| l.flipped()).collect();
        let r = ratio_score(&labels).unwrap();
        let rf = ratio_score(&flipped).unwrap();
        ensure((r + rf - 1.0).abs() <= 1e-15, || format!("multiset {m}: ratio {r} + flipped {rf} != 1"))?;
        let mv = majority_vote(&labels).unwrap();
        ensure((mv == 1.0) == (r > 0.5), || format!("multiset {m}: MV {mv} vs ratio {r}"))?;
        ensure((mv == 0.0) == (r < 0.5), || format!("multiset {m}: MV {mv} vs ratio {r}"))?;

        let scores: Vec<CmScore> = (0..len)
            .map(|_| CmScore::new(rng.gen_range(1..1u32 << 24) as f32 / (1u32 << 24) as f32).unwrap())
            .collect();
        let avg = average_score(&scores).unwrap();
        let mut shuffled = scores.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        let avg2 = average_score(&shuffled).unwrap();
        ensure(avg.to_bits() == avg2.to_bits(), || format!("multiset {m}: average not permutation invariant"))?;
        let lo = scores.iter().map(|s| s.get() as f64).fold(f64::INFINITY, f64::min);
        let hi = scores.iter().map(|s| s.get() as f64).fold(f64::NEG_INFINITY, f64::max);
        ensure(lo <= avg && avg <= hi && (0.0..=1.0).contains(&avg), || {
            format!("multiset {m}: average out of bounds")
        })?;
    }
    Ok("1500 label and score multisets: ratio antisymmetry, MV/ratio consistency, average invariance and bounds".into())
}

fn tsv(base: &KnowledgeBase, queries: &[QueryRecord], method: &Method, parallelism: usize) -> Result<String, Error> {
    let (_, predictions) = evaluate(base, queries, method, parallelism)?;
    Ok(predictions.iter().map(|p| p.tsv_row() + "\n").collect())
}

fn synth_base(seed: u64) -> (KnowledgeBase, Vec<QueryRecord>) {
    let data = synthetic::generate(&SynthConfig::zero_day(seed)).unwrap();
    let base = KnowledgeBase::build(&data.knowledge, ProfileLayout::default()).unwrap();
    (base, data.queries)
}

fn criterion_5() -> Outcome {
    let (base, queries) = synth_base(5);
    let mut methods = Vec::new();
    for r in RetrievalStrategy::ALL {
        for e in [EnsembleStrategy::MajorityVote, EnsembleStrategy::Ratio, EnsembleStrategy::Average] {
            methods.push(Method::augmented(r, e, 20));
        }
    }
    methods.push(Method::Baseline);
    for m in &methods {
        let reference = tsv(&base, &queries, m, 1).map_err(|e| e.to_string())?;
        for p in [4, 8] {
            let other = tsv(&base, &queries, m, p).map_err(|e| e.to_string())?;
            ensure(other.as_bytes() == reference.as_bytes(), || format!("{m}: parallelism {p} differs from 1"))?;
        }
    }
    Ok(format!("{} methods x {} queries, TSV bytes identical at parallelism 1/4/8", methods.len(), queries.len()))
}

fn random_base(n: usize, d_cm: usize, layout: ProfileLayout, seed: u64) -> KnowledgeBase {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut f = move || (rng.next_u32() >> 8) as f32 / (1u32 << 24) as f32 * 2.0 - 1.0;
    let d_prof = layout.dims();
    let cm: Vec<f32> = (0..n * d_cm).map(|_| f()).collect();
    let prof: Vec<f32> = (0..n * d_prof).map(|_| f()).collect();
    let labels: Vec<Label> = (0..n).map(|i| if i % 3 == 0 { Label::Fake } else { Label::Real }).collect();
    let scores: Vec<f32> = (0..n).map(|i| (i % 1000 + 1) as f32 / 1002.0).collect();
    let ids: Vec<u64> = (0..n as u64).map(|i| i * 7 + 3).collect();
    KnowledgeBase::from_columns(ids, labels, scores, cm, d_cm, prof, layout).unwrap()
}

fn bits(v: &[f32]) -> Vec<u32> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (n, d_cm, layout) in [
        (1usize, 8usize, ProfileLayout::default()),
        (1_000, 32, ProfileLayout::default()),
        (100_000, 16, "age:1,gender:2,emotion:5".parse().unwrap()),
    ] {
        let base = random_base(n, d_cm, layout, n as u64);
        let path = dir.path().join(format!("kb{n}.rakb"));
        store::save(&base, &path).map_err(|e| e.to_string())?;
        let loaded = store::load(&path).map_err(|e| e.to_string())?;
        ensure(loaded.ids() == base.ids() && loaded.labels() == base.labels(), || format!("n={n}: ids/labels"))?;
        ensure(bits(loaded.scores()) == bits(base.scores()), || format!("n={n}: scores not bit-exact"))?;
        ensure(bits(loaded.cm().as_slice()) == bits(base.cm().as_slice()), || format!("n={n}: cm not bit-exact"))?;
        ensure(bits(loaded.prof().as_slice()) == bits(base.prof().as_slice()), || format!("n={n}: prof"))?;
        ensure(loaded.layout() == base.layout(), || format!("n={n}: layout"))?;
        ensure(loaded.cm().norms() == base.cm().norms(), || format!("n={n}: norms"))?;
        let again = dir.path().join(format!("kb{n}b.rakb"));
        store::save(&loaded, &again).map_err(|e| e.to_string())?;
        ensure(std::fs::read(&path).unwrap() == std::fs::read(&again).unwrap(), || format!("n={n}: re-save differs"))?;
    }

    let good = std::fs::read(dir.path().join("kb1000.rakb")).unwrap();
    let check = |name: &str, bytes: &[u8], ok: fn(&Error) -> bool| -> Result<(), String> {
        let p = dir.path().join(name);
        std::fs::write(&p, bytes).unwrap();
        match store::load(&p) {
            Err(e) if ok(&e) => Ok(()),
            Err(e) => Err(format!("{name}: wrong error {e}")),
            Ok(_) => Err(format!("{name}: loaded")),
        }
    };
    let mut bad = good.clone();
    bad[..4].copy_from_slice(b"NOPE");
    check("magic", &bad, |e| matches!(e, Error::BadMagic))?;
    let mut bad = good.clone();
    bad[4..8].copy_from_slice(&9u32.to_le_bytes());
    check("version", &bad, |e| matches!(e, Error::UnsupportedVersion(9)))?;
    let mut bad = good.clone();
    bad[8..16].copy_from_slice(&1_001u64.to_le_bytes());
    check("header-n", &bad, |e| matches!(e, Error::TruncatedFile { .. }))?;
    let mut bad = good.clone();
    bad[16] ^= 1;
    check("header-dcm", &bad, |e| matches!(e, Error::TruncatedFile { .. } | Error::CorruptFile(_)))?;
    let mut bad = good.clone();
    let mid = bad.len() / 2;
    bad[mid] ^= 0x10;
    check("payload", &bad, |e| matches!(e, Error::ChecksumMismatch { .. }))?;
    let mut bad = good.clone();
    let last = bad.len() - 1;
    bad[last] ^= 0xff;
    check("crc", &bad, |e| matches!(e, Error::ChecksumMismatch { .. }))?;
    for cut in [0, 3, 10, 40, good.len() / 2, good.len() - 8, good.len() - 1] {
        check(&format!("trunc{cut}"), &good[..cut], |e| matches!(e, Error::TruncatedFile { .. }))?;
    }
    Ok("n = 1, 1e3, 1e5 bit-exact round trip; magic/version/header/payload/checksum/truncation errors as specified"
        .into())
}

struct SeedResult {
    baseline: f64,
    cm: f64,
    hybrid: f64,
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut results = Vec::new();
    for seed in 0..10u64 {
        let (base, queries) = synth_base(seed);
        let run = |m: Method| evaluate(&base, &queries, &m, 1).map(|(r, _)| r.eer.unwrap());
        results.push(SeedResult {
            baseline: run(Method::Baseline).map_err(|e| e.to_string())?,
            cm: run(Method::augmented(RetrievalStrategy::CmOnly, EnsembleStrategy::MajorityVote, 20))
                .map_err(|e| e.to_string())?,
            hybrid: run(Method::augmented(RetrievalStrategy::Hybrid, EnsembleStrategy::MajorityVote, 20))
                .map_err(|e| e.to_string())?,
        });
    }
    let elapsed = start.elapsed();
    let passing = results.iter().filter(|r| r.baseline >= 0.40 && r.cm <= 0.10 && r.hybrid <= r.cm + 0.02).count();
    let detail = results
        .iter()
        .map(|r| format!("{:.1}/{:.1}/{:.1}", r.baseline * 100.0, r.cm * 100.0, r.hybrid * 100.0))
        .collect::<Vec<_>>()
        .join(" ");
    ensure(passing >= 9, || format!("{passing}/10 seeds pass; baseline/cm/hybrid EER%: {detail}"))?;
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:.1?}, limit 120s"))?;
    Ok(format!("{passing}/10 seeds (need 9) in {elapsed:.1?}; baseline/cm+mv/hybrid+mv EER% per seed: {detail}"))
}

fn criterion_8() -> Outcome {
    let (base, queries) = synth_base(8);
    let labeled = &queries;
    // Average reacts to any change of neighbors; label votes can hide one.
    let prof = Method::augmented(RetrievalStrategy::ProfileOnly, EnsembleStrategy::Average, 20);
    let cm = Method::augmented(RetrievalStrategy::CmOnly, EnsembleStrategy::Average, 20);
    let hybrid = Method::augmented(RetrievalStrategy::Hybrid, EnsembleStrategy::Ratio, 20);
    let layout = base.layout().clone();

    let masked_eval = |mask: &AttributeMask, m: &Method| -> Result<_, String> {
        let mb = rakb::ablation::mask_base(&base, mask).map_err(|e| e.to_string())?;
        let mq: Vec<QueryRecord> = labeled
            .iter()
            .map(|q| Ok(QueryRecord { prof: apply_mask(&q.prof, &layout, mask)?, ..q.clone() }))
            .collect::<Result<_, Error>>()
            .map_err(|e| e.to_string())?;
        evaluate(&mb, &mq, m, 1).map_err(|e| e.to_string())
    };
    let score_bits = |p: &[rakb::Prediction]| p.iter().map(|x| x.score.to_bits()).collect::<Vec<_>>();

    for m in [&prof, &cm, &hybrid] {
        let (r0, p0) = evaluate(&base, labeled, m, 1).map_err(|e| e.to_string())?;
        let (r1, p1) = masked_eval(&AttributeMask::none(), m)?;
        ensure(r0 == r1 && score_bits(&p0) == score_bits(&p1), || format!("{m}: empty mask changed the report"))?;
    }
    let (cm_ref, cm_pred) = evaluate(&base, labeled, &cm, 1).map_err(|e| e.to_string())?;
    let prof_pred = predict_all(&base, labeled, &prof, 1).map_err(|e| e.to_string())?;
    let prof_sets = retrieve_batch(&base, labeled, RetrievalStrategy::ProfileOnly, 20, 1).map_err(|e| e.to_string())?;
    let cm_sets = retrieve_batch(&base, labeled, RetrievalStrategy::CmOnly, 20, 1).map_err(|e| e.to_string())?;
    let names: Vec<String> = layout.names().map(String::from).collect();
    for keep in &names {
        let mask = AttributeMask::excluding(names.iter().filter(|n| *n != keep).cloned());
        let (_, p) = masked_eval(&mask, &prof)?;
        ensure(score_bits(&p) != score_bits(&prof_pred), || format!("keeping only {keep} left ProfileOnly unchanged"))?;
        let mb = rakb::ablation::mask_base(&base, &mask).map_err(|e| e.to_string())?;
        let mq = rakb::ablation::mask_queries(labeled, &layout, &mask).map_err(|e| e.to_string())?;
        let sets = retrieve_batch(&mb, &mq, RetrievalStrategy::ProfileOnly, 20, 1).map_err(|e| e.to_string())?;
        ensure(sets != prof_sets, || format!("keeping only {keep} left ProfileOnly neighbors unchanged"))?;
        let sets = retrieve_batch(&mb, &mq, RetrievalStrategy::CmOnly, 20, 1).map_err(|e| e.to_string())?;
        ensure(sets == cm_sets, || format!("keeping only {keep} changed CmOnly neighbors"))?;
        let (r, p) = masked_eval(&mask, &cm)?;
        ensure(r == cm_ref && score_bits(&p) == score_bits(&cm_pred), || {
            format!("keeping only {keep} changed CmOnly results")
        })?;
    }
    Ok(format!(
        "empty mask bit-exact for prof/cm/hybrid; {} all-but-one masks change ProfileOnly, CmOnly bit-identical",
        names.len()
    ))
}

fn criterion_9() -> Outcome {
    let (n, d, n_q, k) = (100_000usize, 1024usize, 1000usize, 200usize);
    let base = random_base(n, d, "p:1".parse().unwrap(), 9);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(99);
    let queries: Vec<QueryRecord> = (0..n_q as u64)
        .map(|id| {
            let cm = (0..d).map(|_| (rng.next_u32() >> 8) as f32 / (1u32 << 24) as f32 - 0.5).collect();
            query(id, cm, vec![1.0])
        })
        .collect();

    let mut latencies = Vec::new();
    for q in queries.iter().take(5) {
        let t = Instant::now();
        let set = retrieve(&base, q, RetrievalStrategy::CmOnly, k).map_err(|e| e.to_string())?;
        latencies.push(t.elapsed());
        ensure(set.len() == k, || "short neighbor set".into())?;
    }
    let worst = *latencies.iter().max().unwrap();

    let t = Instant::now();
    let sets = retrieve_batch(&base, &queries, RetrievalStrategy::CmOnly, k, 8).map_err(|e| e.to_string())?;
    let batch = t.elapsed();
    ensure(sets.len() == n_q && sets.iter().all(|s| s.len() == k), || "batch result shape".into())?;

    let cores = std::thread::available_parallelism().map_or(1, |c| c.get());
    ensure(batch <= Duration::from_secs(60), || format!("batch took {batch:.1?} (limit 60s) on {cores} core(s)"))?;
    ensure(worst <= Duration::from_millis(150), || format!("single query took {worst:.1?} (limit 150ms)"))?;
    Ok(format!(
        "batch {n_q} queries x {n} rows x d={d}, k={k}: {batch:.1?} (<= 60s, parallelism 8 on {cores} core(s)); \
         single query worst of 5: {worst:.1?} (<= 150ms)"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    // `cargo test -- --list` and similar harness probes.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [Criterion; 9] = [
        ("retrieval oracle equivalence", criterion_1),
        ("EER oracle equivalence", criterion_2),
        ("hybrid structural properties", criterion_3),
        ("ensemble algebra", criterion_4),
        ("determinism under parallelism", criterion_5),
        ("persistence", criterion_6),
        ("synthetic zero-day experiment", criterion_7),
        ("ablation machinery", criterion_8),
        ("performance", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

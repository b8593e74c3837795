//! Dense dot-product kernel shared by norm precomputation and retrieval.
//!
//! Products of two `f32` values are exact in `f64`, so accumulating at double
//! precision keeps similarity rounding error near 1e-16. The eight-lane
//! accumulator and its reduction order are fixed, which makes every result
//! independent of how callers batch or schedule the work.

const LANES: usize = 8;

#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] as f64 * y[l] as f64;
        }
    }
    let mut sum = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        sum += *x as f64 * *y as f64;
    }
    sum
}

/// [`dot`] over operands already widened to `f64`. Gives bit-identical
/// results to `dot` on the original `f32` values, since the lane layout and
/// reduction order are the same and the widened products are exact.
#[inline(always)]
pub fn dot_wide(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    let mut sum = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        sum += x * y;
    }
    sum
}

/// Four [`dot_wide`] products sharing the row `r`, each bit-identical to the
/// single version. Loading each row chunk once for four queries halves the
/// memory traffic of the inner loop.
#[inline(always)]
pub fn dot_wide4(r: &[f64], q: [&[f64]; 4]) -> [f64; 4] {
    let n = r.len() / LANES * LANES;
    let mut acc = [[0f64; LANES]; 4];
    let (r_body, r_tail) = r.split_at(n);
    let bodies = q.map(|v| &v[..n]);
    for (c, x) in r_body.chunks_exact(LANES).enumerate() {
        let base = c * LANES;
        for j in 0..4 {
            let y = &bodies[j][base..base + LANES];
            for l in 0..LANES {
                acc[j][l] += x[l] * y[l];
            }
        }
    }
    let mut out = [0f64; 4];
    for j in 0..4 {
        let a = &acc[j];
        let mut sum = ((a[0] + a[4]) + (a[1] + a[5])) + ((a[2] + a[6]) + (a[3] + a[7]));
        for (x, y) in r_tail.iter().zip(&q[j][n..]) {
            sum += x * y;
        }
        out[j] = sum;
    }
    out
}

#[inline]
pub fn norm(a: &[f32]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity from a precomputed dot product and norms. A zero norm on
/// either side yields the -1.0 sentinel so degenerate rows rank last.
/// Negative zero is folded into positive zero so ranking never splits them.
#[inline]
pub fn cosine_from_parts(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    if norm_a == 0.0 || norm_b == 0.0 {
        return -1.0;
    }
    (dot / (norm_a * norm_b)).clamp(-1.0, 1.0) + 0.0
}

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::Neighbor;
use crate::kernel;
use crate::store::Matrix;

/// Rows swept together per query block. Each row is loaded once and scored
/// against every query in the block while it is hot in cache.
pub(crate) const QUERY_BLOCK: usize = 16;

#[derive(Clone, Copy)]
struct Ranked(Neighbor);

impl Ranked {
    // Higher similarity first, then lower row index.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        self.0.similarity.total_cmp(&other.0.similarity).then_with(|| other.0.index.cmp(&self.0.index))
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.rank_cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank_cmp(other)
    }
}

/// Bounded selection of the best `k` neighbors seen so far. Rows must be
/// offered in ascending index order, which lets an equal-similarity
/// newcomer be rejected without an index comparison.
struct TopK {
    k: usize,
    heap: BinaryHeap<Reverse<Ranked>>,
    floor: f64,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self { k, heap: BinaryHeap::with_capacity(k + 1), floor: f64::NEG_INFINITY }
    }

    #[inline]
    fn offer(&mut self, index: usize, similarity: f64) {
        if self.heap.len() < self.k {
            self.heap.push(Reverse(Ranked(Neighbor { index, similarity })));
            if self.heap.len() == self.k {
                self.floor = self.heap.peek().map_or(f64::NEG_INFINITY, |w| w.0 .0.similarity);
            }
        } else if similarity > self.floor {
            self.heap.pop();
            self.heap.push(Reverse(Ranked(Neighbor { index, similarity })));
            self.floor = self.heap.peek().map_or(f64::NEG_INFINITY, |w| w.0 .0.similarity);
        }
    }

    fn into_sorted(self) -> Vec<Neighbor> {
        // Ascending order of Reverse is descending rank.
        self.heap.into_sorted_vec().into_iter().map(|r| r.0 .0).collect()
    }
}

/// Exact top-k for a block of queries, each given with its precomputed norm.
/// Result `j` belongs to `queries[j]` and is ordered by similarity descending,
/// row index ascending.
pub(crate) fn search_block(matrix: &Matrix, queries: &[(&[f32], f64)], k: usize) -> Vec<Vec<Neighbor>> {
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2, checked just above.
        return unsafe { search_block_avx2(matrix, queries, k) };
    }
    search_block_portable(matrix, queries, k)
}

/// Same loop compiled with wider vectors. Products of widened `f32` values
/// are exact, and lane layout and reduction order are unchanged, so results
/// are bit-identical to the portable path.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn search_block_avx2(matrix: &Matrix, queries: &[(&[f32], f64)], k: usize) -> Vec<Vec<Neighbor>> {
    sweep(matrix, queries, k)
}

fn search_block_portable(matrix: &Matrix, queries: &[(&[f32], f64)], k: usize) -> Vec<Vec<Neighbor>> {
    sweep(matrix, queries, k)
}

#[inline(always)]
fn sweep(matrix: &Matrix, queries: &[(&[f32], f64)], k: usize) -> Vec<Vec<Neighbor>> {
    let k = k.min(matrix.rows());
    let mut tops: Vec<TopK> = queries.iter().map(|_| TopK::new(k)).collect();
    // Widen once per block instead of once per (row, query) pair.
    let wide: Vec<Vec<f64>> = queries.iter().map(|(q, _)| q.iter().map(|&v| v as f64).collect()).collect();
    let mut row_wide = vec![0f64; matrix.dim()];
    for (index, (row, &row_norm)) in matrix.iter_rows().zip(matrix.norms()).enumerate() {
        for (w, &v) in row_wide.iter_mut().zip(row) {
            *w = v as f64;
        }
        let mut j = 0;
        while j + 4 <= wide.len() {
            let dots = kernel::dot_wide4(&row_wide, [&wide[j], &wide[j + 1], &wide[j + 2], &wide[j + 3]]);
            for (t, dot) in dots.into_iter().enumerate() {
                tops[j + t].offer(index, kernel::cosine_from_parts(dot, queries[j + t].1, row_norm));
            }
            j += 4;
        }
        for j in j..wide.len() {
            let sim = kernel::cosine_from_parts(kernel::dot_wide(&wide[j], &row_wide), queries[j].1, row_norm);
            tops[j].offer(index, sim);
        }
    }
    tops.into_iter().map(TopK::into_sorted).collect()
}

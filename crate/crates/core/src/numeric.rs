//! Deterministic reductions. Every set-level mean and covariance in this
//! crate sums with a fixed pairwise tree over the input order, so results
//! do not depend on worker count.

/// Pairwise (tree) sum of `f(0), ..., f(n-1)`.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, f: &F) -> f64 {
    sum_range(0, n, f)
}

/// Pairwise (tree) sum of a slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    sum_range(0, values.len(), &|i| values[i])
}

/// Pairwise mean of a slice. Returns 0 for an empty slice.
pub fn pairwise_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}

fn sum_range<F: Fn(usize) -> f64>(start: usize, end: usize, f: &F) -> f64 {
    const BLOCK: usize = 32;
    let len = end - start;
    if len <= BLOCK {
        let mut acc = 0.0;
        for i in start..end {
            acc += f(i);
        }
        acc
    } else {
        let mid = start + len / 2;
        sum_range(start, mid, f) + sum_range(mid, end, f)
    }
}

//! Deterministic work scheduling.
//!
//! Index ranges are cut into fixed blocks of [`BLOCK`] elements. Each block
//! is accumulated sequentially, block results are collected in block order,
//! and the final merge runs sequentially over that order. The reduction tree
//! therefore depends only on the problem size, never on the worker count, so
//! a run with the `parallel` feature (rayon), with the sequential fallback,
//! or inside a pool of any size produces bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Accumulation block size. Fixed: changing it changes float merge order.
pub const BLOCK: u64 = 8192;

#[inline]
fn block_ranges(n: u64) -> impl Iterator<Item = (u64, u64)> {
    let blocks = n.div_ceil(BLOCK);
    (0..blocks).map(move |b| (b * BLOCK, ((b + 1) * BLOCK).min(n)))
}

/// Fold `visit(acc, i)` over `i in 0..n`, blockwise; always sequential.
pub fn fold_indexed_seq<T>(
    n: u64,
    init: impl Fn() -> T,
    visit: impl Fn(&mut T, u64),
    merge: impl Fn(&mut T, T),
) -> T {
    let mut acc = init();
    for (lo, hi) in block_ranges(n) {
        let mut local = init();
        for i in lo..hi {
            visit(&mut local, i);
        }
        merge(&mut acc, local);
    }
    acc
}

/// Fold `visit(acc, i)` over `i in 0..n`; parallel over blocks when the
/// `parallel` feature is enabled, with the merge always applied in block
/// order. Bit-identical to [`fold_indexed_seq`].
#[cfg(feature = "parallel")]
pub fn fold_indexed<T: Send>(
    n: u64,
    init: impl Fn() -> T + Sync,
    visit: impl Fn(&mut T, u64) + Sync,
    merge: impl Fn(&mut T, T),
) -> T {
    let blocks: Vec<T> = block_ranges(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut local = init();
            for i in lo..hi {
                visit(&mut local, i);
            }
            local
        })
        .collect();
    let mut acc = init();
    for local in blocks {
        merge(&mut acc, local);
    }
    acc
}

#[cfg(not(feature = "parallel"))]
pub fn fold_indexed<T: Send>(
    n: u64,
    init: impl Fn() -> T + Sync,
    visit: impl Fn(&mut T, u64) + Sync,
    merge: impl Fn(&mut T, T),
) -> T {
    fold_indexed_seq(n, init, visit, merge)
}

/// Map `i -> f(i)` over `0..n` into a vector in index order; sequential.
pub fn map_indexed_seq<T>(n: u64, f: impl Fn(u64) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Map `i -> f(i)` over `0..n` into a vector in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send>(n: u64, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T: Send>(n: u64, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    map_indexed_seq(n, f)
}

/// Run `f` inside a pool of `workers` threads (None = the global pool).
/// With the sequential fallback the worker count is ignored.
#[cfg(feature = "parallel")]
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .expect("failed to build worker pool")
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R: Send>(_workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

/// Streaming mean/variance accumulator over plain sums; merge is exact
/// because it adds disjoint partial sums in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanAccumulator {
    pub sum: f64,
    pub sum_sq: f64,
    pub count: u64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
        self.count += 1;
    }

    pub fn merge(&mut self, other: MeanAccumulator) {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.count += other.count;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Standard error of the mean; zero when the sample is constant.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_folds_are_bit_identical() {
        let f = |i: u64| ((i as f64) * 0.618).sin() / (1.0 + i as f64);
        for n in [0u64, 1, 100, BLOCK - 1, BLOCK, BLOCK + 1, 3 * BLOCK + 17] {
            let a = fold_indexed_seq(n, || 0.0f64, |acc, i| *acc += f(i), |acc, x| *acc += x);
            let b = fold_indexed(n, || 0.0f64, |acc, i| *acc += f(i), |acc, x| *acc += x);
            assert_eq!(a.to_bits(), b.to_bits(), "n = {n}");
        }
    }

    #[test]
    fn fold_is_independent_of_worker_count() {
        let f = |i: u64| ((i as f64) * 1.07).cos();
        let run = |w| {
            with_workers(Some(w), || {
                fold_indexed(50_000, || 0.0f64, |acc, i| *acc += f(i), |acc, x| *acc += x)
            })
        };
        let r1 = run(1);
        let r4 = run(4);
        let r16 = run(16);
        assert_eq!(r1.to_bits(), r4.to_bits());
        assert_eq!(r1.to_bits(), r16.to_bits());
    }

    #[test]
    fn map_preserves_index_order() {
        let v = map_indexed(10_000, |i| i * i);
        let w = map_indexed_seq(10_000, |i| i * i);
        assert_eq!(v, w);
    }

    #[test]
    fn mean_accumulator_constant_sample_has_zero_stderr() {
        let mut acc = MeanAccumulator::default();
        for _ in 0..1000 {
            acc.push(1.0);
        }
        assert_eq!(acc.mean(), 1.0);
        assert_eq!(acc.stderr(), 0.0);
    }
}

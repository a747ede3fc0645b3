//! Reproducible summation.
//!
//! An index range is cut into leaves of [`LEAF`] consecutive terms. Leaves are
//! summed left to right and leaf results are combined along a balanced binary
//! tree whose shape depends only on the range length. Subtrees may run on
//! different rayon workers, but the floating-point operations and their order
//! are the same for any thread count.

use std::ops::Add;

/// Number of terms summed sequentially at the bottom of the tree.
pub const LEAF: usize = 4096;

/// Leaf count above which subtrees are handed to rayon.
const PAR_LEAVES: usize = 4;

/// Sum `f(i)` for `i` in `0..n` along the fixed tree.
pub fn sum_by<T, F>(n: usize, f: F) -> T
where
    T: Copy + Default + Add<Output = T> + Send,
    F: Fn(usize) -> T + Sync,
{
    if n == 0 {
        return T::default();
    }
    let leaves = n.div_ceil(LEAF);
    tree(0, leaves, n, &f)
}

fn leaf<T, F>(index: usize, n: usize, f: &F) -> T
where
    T: Copy + Default + Add<Output = T>,
    F: Fn(usize) -> T,
{
    let lo = index * LEAF;
    let hi = (lo + LEAF).min(n);
    let mut acc = T::default();
    for i in lo..hi {
        acc = acc + f(i);
    }
    acc
}

fn tree<T, F>(lo: usize, hi: usize, n: usize, f: &F) -> T
where
    T: Copy + Default + Add<Output = T> + Send,
    F: Fn(usize) -> T + Sync,
{
    if hi - lo == 1 {
        return leaf(lo, n, f);
    }
    let mid = lo + (hi - lo) / 2;
    let (a, b) = if hi - lo >= PAR_LEAVES {
        rayon::join(|| tree(lo, mid, n, f), || tree(mid, hi, n, f))
    } else {
        (tree(lo, mid, n, f), tree(mid, hi, n, f))
    };
    a + b
}

/// Sum of a slice along the fixed tree.
pub fn sum_slice<T>(values: &[T]) -> T
where
    T: Copy + Default + Add<Output = T> + Send + Sync,
{
    sum_by(values.len(), |i| values[i])
}

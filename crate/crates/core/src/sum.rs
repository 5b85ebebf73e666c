//! Deterministic reductions.
//!
//! Every sum in the crate goes through a fixed binary tree so that results
//! are bit-identical regardless of thread count.

const LEAF: usize = 32;
const PAR_LEAF: usize = 1 << 14;

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Same tree as [`pairwise_sum`], large subtrees evaluated in parallel.
pub fn par_pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAR_LEAF {
        pairwise_sum(xs)
    } else {
        let mid = xs.len() / 2;
        let (a, b) = rayon::join(
            || par_pairwise_sum(&xs[..mid]),
            || par_pairwise_sum(&xs[mid..]),
        );
        a + b
    }
}

/// Pairwise sum of `f(0) + … + f(n-1)` without materializing the terms.
pub fn pairwise_sum_fn<const K: usize, F: Fn(usize) -> [f64; K]>(n: usize, f: &F) -> [f64; K] {
    fn go<const K: usize, F: Fn(usize) -> [f64; K]>(lo: usize, hi: usize, f: &F) -> [f64; K] {
        let mut acc = [0.0; K];
        if hi - lo <= LEAF {
            for i in lo..hi {
                let v = f(i);
                for k in 0..K {
                    acc[k] += v[k];
                }
            }
        } else {
            let mid = lo + (hi - lo) / 2;
            let a = go(lo, mid, f);
            let b = go(mid, hi, f);
            for k in 0..K {
                acc[k] = a[k] + b[k];
            }
        }
        acc
    }
    go(0, n, f)
}

/// Component-wise pairwise sum of fixed-width records.
pub fn pairwise_sum_k<const K: usize>(xs: &[[f64; K]]) -> [f64; K] {
    if xs.len() <= LEAF {
        let mut acc = [0.0; K];
        for x in xs {
            for k in 0..K {
                acc[k] += x[k];
            }
        }
        acc
    } else {
        let mid = xs.len() / 2;
        let a = pairwise_sum_k(&xs[..mid]);
        let b = pairwise_sum_k(&xs[mid..]);
        let mut out = [0.0; K];
        for k in 0..K {
            out[k] = a[k] + b[k];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_tree_matches_serial_bitwise() {
        let xs: Vec<f64> = (0..100_003).map(|i| ((i as f64) * 0.37).sin() * 1e3).collect();
        assert_eq!(pairwise_sum(&xs).to_bits(), par_pairwise_sum(&xs).to_bits());
    }

    #[test]
    fn small_sums() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
        assert_eq!(pairwise_sum_k(&[[1.0, 2.0], [3.0, 4.0]]), [4.0, 6.0]);
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sqrt()).collect();
        assert_eq!(pairwise_sum_fn(xs.len(), &|i| [xs[i]])[0].to_bits(), pairwise_sum(&xs).to_bits());
    }
}

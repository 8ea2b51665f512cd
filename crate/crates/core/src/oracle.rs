//! Independent reference implementations used as cross-check oracles by the
//! verification suites: dense per-block matrix multiplication, direct
//! Temperley-Lieb diagram enumeration, and the TL Bratteli pattern. These
//! deliberately avoid the sparse code paths they check.

use crate::boxes::BoxElement;
use crate::graph::PathSet;
use crate::scalars::Scalar;
use std::collections::BTreeMap;

/// Dense per-block multiplication of box elements: materializes each
/// `(source, target)` block as a dense matrix and multiplies row by column.
pub fn dense_mul<S: Scalar>(ps: &PathSet, x: &BoxElement<S>, y: &BoxElement<S>) -> BoxElement<S> {
    assert_eq!(x.n, ps.n);
    assert_eq!(y.n, ps.n);
    let mut out = BoxElement::zero(x.n, x.sign);
    for block in ps.blocks.values() {
        let k = block.len();
        let pos: BTreeMap<u32, usize> = block.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut xm = vec![vec![S::zero(); k]; k];
        let mut ym = vec![vec![S::zero(); k]; k];
        let mut x_nonzero = false;
        let mut y_nonzero = false;
        for (&(a, b), v) in &x.entries {
            if let (Some(&i), Some(&j)) = (pos.get(&a), pos.get(&b)) {
                xm[i][j] = v.clone();
                x_nonzero = true;
            }
        }
        for (&(a, b), v) in &y.entries {
            if let (Some(&i), Some(&j)) = (pos.get(&a), pos.get(&b)) {
                ym[i][j] = v.clone();
                y_nonzero = true;
            }
        }
        if !x_nonzero || !y_nonzero {
            continue;
        }
        for i in 0..k {
            for j in 0..k {
                let mut acc = S::zero();
                for l in 0..k {
                    acc = acc.add(&xm[i][l].mul(&ym[l][j]));
                }
                if !acc.is_zero() {
                    out.add_term((block[i], block[j]), acc);
                }
            }
        }
    }
    out
}

/// Number of Temperley-Lieb diagrams on `2n` points, by direct enumeration
/// of non-crossing perfect matchings (not the closed-form Catalan formula).
pub fn tl_dim(n: usize) -> usize {
    assert!(n <= 16, "oracle is for desk-scale n");
    count_noncrossing_matchings(2 * n)
}

fn count_noncrossing_matchings(points: usize) -> usize {
    if points == 0 {
        return 1;
    }
    if points % 2 == 1 {
        return 0;
    }
    // match point 0 with an odd-offset partner; both sides stay non-crossing
    let mut total = 0usize;
    for partner in (1..points).step_by(2) {
        let inside = partner - 1;
        let outside = points - partner - 1;
        total += count_noncrossing_matchings(inside) * count_noncrossing_matchings(outside);
    }
    total
}

/// Bratteli data of the Temperley-Lieb tower at generic modulus: summands of
/// `TL_n` indexed by through-strand counts `h = n, n-2, ..`, with dimension
/// the ballot number `N(n, h)`, and multiplicity 1 between adjacent heights
/// (the Pascal-triangle pattern).
pub struct TlBratteli {
    pub level_dims: Vec<(usize, usize)>,     // (height, summand dim) at level n
    pub next_dims: Vec<(usize, usize)>,      // at level n+1
    pub multiplicity: Vec<Vec<u64>>,         // rows: level n summands
}

pub fn tl_bratteli(n: usize) -> TlBratteli {
    let level_dims = tl_summands(n);
    let next_dims = tl_summands(n + 1);
    let multiplicity = level_dims
        .iter()
        .map(|&(h, _)| {
            next_dims
                .iter()
                .map(|&(h2, _)| if h2 + 1 == h || h2 == h + 1 { 1u64 } else { 0 })
                .collect()
        })
        .collect();
    TlBratteli { level_dims, next_dims, multiplicity }
}

/// Summands of `TL_n`: heights with multiplicities counted by walk profiles
/// (number of +-1 paths from 0 to h staying non-negative).
pub fn tl_summands(n: usize) -> Vec<(usize, usize)> {
    // profiles counted by dynamic programming
    let mut counts = vec![0usize; n + 1];
    counts[0] = 1;
    for _ in 0..n {
        let mut next = vec![0usize; n + 1];
        for (h, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if h + 1 <= n {
                next[h + 1] += c;
            }
            if h >= 1 {
                next[h - 1] += c;
            }
        }
        counts = next;
    }
    counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(h, c)| (h, c))
        .collect()
}

/// Markov trace weight of the height-`h` summand of `TL_n` at modulus
/// `delta`: `delta^{-n}` times the Chebyshev-type quantum integer `[h+1]`.
pub fn tl_trace_weight(n: usize, h: usize, delta: f64) -> f64 {
    quantum_integer(h + 1, delta) / delta.powi(n as i32)
}

fn quantum_integer(m: usize, delta: f64) -> f64 {
    // [1] = 1, [2] = delta, [m+1] = delta [m] - [m-1]
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    for _ in 1..m {
        let next = delta * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tl_dims_are_catalan() {
        assert_eq!(tl_dim(1), 1);
        assert_eq!(tl_dim(2), 2);
        assert_eq!(tl_dim(3), 5);
        assert_eq!(tl_dim(4), 14);
        assert_eq!(tl_dim(5), 42);
        assert_eq!(tl_dim(12), 208012);
    }

    #[test]
    fn tl_summand_dims_square_sum_to_catalan() {
        for n in 1..=6 {
            let total: usize = tl_summands(n).iter().map(|&(_, d)| d * d).sum();
            assert_eq!(total, tl_dim(n));
        }
    }

    #[test]
    fn tl_trace_weights_satisfy_consistency() {
        // w_h^(n) = w_{h-1}^(n+1) + w_{h+1}^(n+1), the Chebyshev recurrence
        let delta = 3.0;
        for n in 1..=5 {
            for (h, _) in tl_summands(n) {
                let w = tl_trace_weight(n, h, delta);
                let mut rhs = tl_trace_weight(n + 1, h + 1, delta);
                if h >= 1 {
                    rhs += tl_trace_weight(n + 1, h - 1, delta);
                }
                assert!((w - rhs).abs() < 1e-12, "n={} h={}", n, h);
            }
        }
    }

    #[test]
    fn quantum_integers_at_three() {
        assert_eq!(quantum_integer(1, 3.0), 1.0);
        assert_eq!(quantum_integer(2, 3.0), 3.0);
        assert_eq!(quantum_integer(3, 3.0), 8.0);
        assert_eq!(quantum_integer(4, 3.0), 21.0);
    }
}

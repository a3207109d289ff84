//! Exterior-algebra bookkeeping on free modules `R^n`: subsets, contraction,
//! wedges of vectors and determinants over a commutative ring.

use crate::ring::RingHandle;

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Position of a sorted subset in the lexicographic list of `subsets(n, k)`.
pub fn subset_rank(n: usize, set: &[usize]) -> usize {
    let k = set.len();
    let mut rank = 0;
    let mut prev = 0usize;
    for (i, &s) in set.iter().enumerate() {
        for v in prev..s {
            rank += crate::zmod::binomial(n - v - 1, k - i - 1);
        }
        prev = s + 1;
    }
    rank
}

/// Determinant of a square matrix of ring elements, by expansion over
/// column subsets (exact over any commutative ring).
pub fn det(ring: &RingHandle, m: &[Vec<Vec<u64>>]) -> Vec<u64> {
    let k = m.len();
    if k == 0 {
        return ring.one();
    }
    let full = 1usize << k;
    // d[mask]: determinant of the first popcount(mask) rows on columns in mask
    let mut d: Vec<Option<Vec<u64>>> = vec![None; full];
    d[0] = Some(ring.one());
    for mask in 1..full {
        let row = mask.count_ones() as usize - 1;
        let mut acc = ring.zero();
        let mut above = 0u32;
        for c in (0..k).rev() {
            if mask & (1 << c) == 0 {
                continue;
            }
            let a = &m[row][c];
            if !ring.is_zero(a) {
                if let Some(sub) = &d[mask ^ (1 << c)] {
                    if !ring.is_zero(sub) {
                        let t = ring.mul(a, sub);
                        acc = if above % 2 == 0 {
                            ring.add(&acc, &t)
                        } else {
                            ring.sub(&acc, &t)
                        };
                    }
                }
            }
            above += 1;
        }
        d[mask] = Some(acc);
    }
    d[full - 1].take().unwrap()
}

/// `psi contracted into X` for `X` in `wedge^s R^n` (coordinates over
/// `subsets(n, s)`) and `psi` in `Hom(R^n, R)` given by its values on the basis:
/// `psi(e_{i_1} ^ ... ^ e_{i_s}) = sum_t (-1)^t psi(e_{i_t}) e_{I minus i_t}`.
pub fn contract(ring: &RingHandle, n: usize, s: usize, psi: &[Vec<u64>], x: &[Vec<u64>]) -> Vec<Vec<u64>> {
    assert!(s >= 1);
    let subs = subsets(n, s);
    let mut out = vec![ring.zero(); crate::zmod::binomial(n, s - 1)];
    for (idx, set) in subs.iter().enumerate() {
        let xi = &x[idx];
        if ring.is_zero(xi) {
            continue;
        }
        for (t, &i) in set.iter().enumerate() {
            if ring.is_zero(&psi[i]) {
                continue;
            }
            let mut rest = set.clone();
            rest.remove(t);
            let r = subset_rank(n, &rest);
            let term = ring.mul(&psi[i], xi);
            out[r] = if t % 2 == 0 {
                ring.add(&out[r], &term)
            } else {
                ring.sub(&out[r], &term)
            };
        }
    }
    out
}

/// Coordinates of `v_1 ^ ... ^ v_s` in `wedge^s R^n`.
pub fn wedge_vectors(ring: &RingHandle, n: usize, vs: &[Vec<Vec<u64>>]) -> Vec<Vec<u64>> {
    let s = vs.len();
    subsets(n, s)
        .iter()
        .map(|set| {
            let m: Vec<Vec<Vec<u64>>> = vs
                .iter()
                .map(|v| set.iter().map(|&i| v[i].clone()).collect())
                .collect();
            det(ring, &m)
        })
        .collect()
}

/// Sign and sorted position data for inserting `i` into a sorted set not
/// containing it: returns the merged set and `(-1)^{#{j in set : j < i}}`.
pub fn insert_sorted(set: &[usize], i: usize) -> (Vec<usize>, bool) {
    let below = set.iter().filter(|&&j| j < i).count();
    let mut out = set.to_vec();
    out.insert(below, i);
    (out, below % 2 == 1)
}

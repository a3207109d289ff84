//! Euler factors `det(1 - Fr^(-1) x)` over `Q` and their products in `Q[G]`.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = Ratio<i64>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerPoly {
    /// Coefficients, constant term first.
    pub coeffs: Vec<Q>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weil_bound: Option<bool>,
}

fn det(mut m: Vec<Vec<Q>>) -> Q {
    let n = m.len();
    let mut d = Q::from_integer(1);
    for c in 0..n {
        let Some(piv) = (c..n).find(|&r| m[r][c] != Q::from_integer(0)) else {
            return Q::from_integer(0);
        };
        if piv != c {
            m.swap(piv, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let t = m[r][c] / m[c][c];
            if t == Q::from_integer(0) {
                continue;
            }
            for k in c..n {
                let s = m[c][k];
                m[r][k] -= t * s;
            }
        }
    }
    d
}

fn inverse(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| Q::from_integer((i == j) as i64)));
            r
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&r| a[r][c] != Q::from_integer(0))?;
        a.swap(piv, c);
        let inv = Q::from_integer(1) / a[c][c];
        for x in a[c].iter_mut() {
            *x *= inv;
        }
        for r in 0..n {
            if r != c && a[r][c] != Q::from_integer(0) {
                let t = a[r][c];
                for k in 0..2 * n {
                    let s = a[c][k];
                    a[r][k] -= t * s;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// `det(1 - F^(-1) x)` for an integer Frobenius matrix `F`.
pub fn euler_poly_matrix(frob: &[Vec<i64>]) -> Result<EulerPoly> {
    let n = frob.len();
    if frob.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("the Frobenius matrix must be square".into()));
    }
    let q: Vec<Vec<Q>> = frob.iter().map(|r| r.iter().map(|&x| Q::from_integer(x)).collect()).collect();
    let a = inverse(&q).ok_or_else(|| Error::Input("the Frobenius matrix is singular".into()))?;
    // coefficient of x^k is (-1)^k times the sum of principal k-minors
    let mut coeffs = vec![Q::from_integer(1)];
    for k in 1..=n {
        let mut e = Q::from_integer(0);
        for set in crate::wedge::subsets(n, k) {
            let minor: Vec<Vec<Q>> = set.iter().map(|&i| set.iter().map(|&j| a[i][j]).collect()).collect();
            e += det(minor);
        }
        coeffs.push(if k % 2 == 1 { -e } else { e });
    }
    Ok(EulerPoly {
        coeffs,
        weil_bound: None,
    })
}

/// `1 - a l^(-1) x + l^(-1) x^2` with the flag `|a| <= 2 sqrt(l)`.
pub fn euler_poly_elliptic(a: i64, l: i64, p: u64) -> Result<EulerPoly> {
    if l < 2 {
        return Err(Error::Input(format!("{l} is not a prime")));
    }
    if l as u64 == p {
        return Err(Error::Input(format!("the prime {l} equals p")));
    }
    Ok(EulerPoly {
        coeffs: vec![Q::from_integer(1), Q::new(-a, l), Q::new(1, l)],
        weil_bound: Some((a as i128) * (a as i128) <= 4 * l as i128),
    })
}

/// Element of `Q[G]` with coefficients indexed like the group ring.
pub type GroupAlgebraElem = Vec<Q>;

fn group_index(group: &[u64], e: &[u64]) -> usize {
    group.iter().zip(e).fold(0, |acc, (&d, &x)| acc * d as usize + (x % d) as usize)
}

fn group_exps(group: &[u64], mut idx: usize) -> Vec<u64> {
    let mut e = vec![0u64; group.len()];
    for i in (0..group.len()).rev() {
        e[i] = (idx as u64) % group[i];
        idx /= group[i] as usize;
    }
    e
}

pub fn group_algebra_mul(group: &[u64], a: &[Q], b: &[Q]) -> GroupAlgebraElem {
    let n = a.len();
    let mut out = vec![Q::from_integer(0); n];
    for i in 0..n {
        if a[i] == Q::from_integer(0) {
            continue;
        }
        let ei = group_exps(group, i);
        for j in 0..n {
            if b[j] == Q::from_integer(0) {
                continue;
            }
            let ej = group_exps(group, j);
            let sum: Vec<u64> = ei.iter().zip(&ej).map(|(x, y)| x + y).collect();
            out[group_index(group, &sum)] += a[i] * b[j];
        }
    }
    out
}

/// `P(g)` in `Q[G]`.
pub fn evaluate_at(group: &[u64], poly: &[Q], g: &[u64]) -> GroupAlgebraElem {
    let n: usize = group.iter().product::<u64>() as usize;
    let mut out = vec![Q::from_integer(0); n];
    let mut power = vec![0u64; group.len()];
    for &c in poly {
        out[group_index(group, &power)] += c;
        for (x, (&y, &d)) in power.iter_mut().zip(g.iter().zip(group)) {
            *x = (*x + y) % d;
        }
    }
    out
}

/// One prime of a product: its Euler polynomial and its Frobenius in `G`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerFactor {
    pub poly: Vec<Q>,
    pub frobenius: Vec<u64>,
}

/// `prod_q P_q(Fr_q^(-1))`.
pub fn euler_product(group: &[u64], factors: &[EulerFactor]) -> Result<GroupAlgebraElem> {
    let n: usize = group.iter().product::<u64>() as usize;
    let mut acc = vec![Q::from_integer(0); n];
    acc[0] = Q::from_integer(1);
    for f in factors {
        if f.frobenius.len() != group.len() {
            return Err(Error::Dimension("Frobenius element of the wrong shape".into()));
        }
        let inv: Vec<u64> = f.frobenius.iter().zip(group).map(|(&x, &d)| (d - x % d) % d).collect();
        acc = group_algebra_mul(group, &acc, &evaluate_at(group, &f.poly, &inv));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_frobenius() {
        let p = euler_poly_matrix(&[vec![1]]).unwrap();
        assert_eq!(p.coeffs, vec![Q::from_integer(1), Q::from_integer(-1)]);
    }

    #[test]
    fn singular_and_non_square() {
        assert!(euler_poly_matrix(&[vec![0]]).is_err());
        assert!(euler_poly_matrix(&[vec![1, 2]]).is_err());
        assert!(euler_poly_elliptic(1, 5, 5).is_err());
    }

    #[test]
    fn weil_flag() {
        assert_eq!(euler_poly_elliptic(0, 5, 3).unwrap().weil_bound, Some(true));
        assert_eq!(euler_poly_elliptic(3, 2, 3).unwrap().weil_bound, Some(false));
        assert_eq!(euler_poly_elliptic(-4, 4, 3).unwrap().weil_bound, Some(true));
    }
}

//! Associated orders of full lattices and the minimal-order test.

use serde::{Deserialize, Serialize};

use super::algebra::{CharAlgebra, Lattice, LatticeData};
use crate::error::{Error, Result};
use crate::howell::{self, Howell};
use crate::zmod::Zpk;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderReport {
    pub order: LatticeData,
    pub contains_group_ring: bool,
    pub stabilizes: bool,
    pub min_order: bool,
}

/// `{ x : x I in I }`.
///
/// With `I = p^(-e) I'` and `p^c O_S` inside `I'`, every stabilizing `x` is
/// `p^(-c) y` with `y` in `O_S` and `y I'` inside `p^c I'`; the condition only
/// depends on `y` modulo `p^(2c)`.
pub fn associated_order(alg: &CharAlgebra, i: &Lattice) -> Result<Lattice> {
    let c = i.conductor;
    let prec = i.prec;
    if 2 * c >= prec {
        return Err(Error::InsufficientPrecision {
            have: prec,
            need: 2 * c + 1,
        });
    }
    let n = alg.n();
    let z = alg.zpk().with_k(prec);
    let rows = i.form.rows();
    let k = rows.len();
    let pc = z.p_pow(c);
    let mut target = Vec::new();
    for j in 0..k {
        for r in rows {
            let mut v = vec![0u64; n * k];
            for (t, &x) in r.iter().enumerate() {
                v[j * n + t] = z.mul(x, pc);
            }
            target.push(v);
        }
    }
    let target = Howell::new(z, n * k, target);
    let images: Vec<Vec<u64>> = alg
        .basis()
        .iter()
        .map(|e| {
            rows.iter()
                .flat_map(|r| alg.mul(e, r).into_iter().map(|x| z.reduce(x)))
                .collect()
        })
        .collect();
    let y = howell::preimage(z, &images, n * k, &target);
    alg.from_rows(c, prec, y.rows().to_vec())
}

/// Coordinates modulo `p` of `v / p^shift` in the basis `rows` (all modulo `p^prec`).
fn coords_mod_p(z: Zpk, rows: &[Vec<u64>], v: &[u64], shift: u32, conductor: u32) -> Result<Vec<u64>> {
    let prec = z.k();
    if shift + conductor >= prec {
        return Err(Error::InsufficientPrecision {
            have: prec,
            need: shift + conductor + 1,
        });
    }
    if v.iter().any(|&x| z.val(x) < shift) {
        return Err(Error::Input("element leaves the lattice".into()));
    }
    let low = z.with_k(prec - shift);
    let u: Vec<u64> = v.iter().map(|&x| low.reduce(z.div_p_pow(x, shift))).collect();
    let rows_low: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|&x| low.reduce(x)).collect()).collect();
    let t = howell::solve(low, &rows_low, &u).ok_or_else(|| Error::Input("element leaves the lattice".into()))?;
    Ok(t.iter().map(|&x| x % z.p()).collect())
}

fn mult_f(table: &[Vec<Vec<u64>>], f: Zpk, x: &[u64], y: &[u64]) -> Vec<u64> {
    let n = x.len();
    let mut out = vec![0u64; n];
    for a in 0..n {
        if x[a] == 0 {
            continue;
        }
        for b in 0..n {
            if y[b] == 0 {
                continue;
            }
            let s = f.mul(x[a], y[b]);
            for (o, &t) in out.iter_mut().zip(&table[a][b]) {
                *o = f.add(*o, f.mul(s, t));
            }
        }
    }
    out
}

/// Whether `I` is free of rank one over the order `O` (it must stabilize `I`).
///
/// By Nakayama this is cyclicity of `V = I/pI` over `A = O/pO`, decided on
/// `V / rad(A) V` over the semisimple quotient: there cyclicity means
/// `dim V = dim A - dim Ann(V)`. The radical is the kernel of a high enough
/// power of Frobenius.
pub fn min_order(alg: &CharAlgebra, o: &Lattice, i: &Lattice) -> Result<bool> {
    let n = alg.n();
    let p = alg.p();
    let prec = o.prec.min(i.prec);
    let z = alg.zpk().with_k(prec);
    let f = alg.zpk().with_k(1);
    let red = |rows: &[Vec<u64>]| -> Vec<Vec<u64>> {
        rows.iter().map(|r| r.iter().map(|&x| z.reduce(x)).collect()).collect()
    };
    let ys = red(o.form.rows());
    let is = red(i.form.rows());
    if ys.len() != n || is.len() != n {
        return Err(Error::Input("lattices must have full rank".into()));
    }
    let e = o.offset;
    let mut table = vec![vec![Vec::new(); n]; n];
    for a in 0..n {
        for b in 0..n {
            let prod: Vec<u64> = alg.mul(&ys[a], &ys[b]).iter().map(|&x| z.reduce(x)).collect();
            table[a][b] = coords_mod_p(z, &ys, &prod, e, o.conductor)?;
        }
    }
    let mut act = vec![Vec::new(); n];
    for a in 0..n {
        for v in &is {
            let prod: Vec<u64> = alg.mul(&ys[a], v).iter().map(|&x| z.reduce(x)).collect();
            act[a].push(coords_mod_p(z, &is, &prod, e, i.conductor)?);
        }
    }
    // Frobenius to the power p^t >= n kills exactly the radical
    let mut t = 0;
    while p.pow(t) < n as u64 {
        t += 1;
    }
    let frob_t: Vec<Vec<u64>> = (0..n)
        .map(|a| {
            let mut x = vec![0u64; n];
            x[a] = 1;
            for _ in 0..t {
                let mut acc = x.clone();
                for _ in 1..p {
                    acc = mult_f(&table, f, &acc, &x);
                }
                x = acc;
            }
            x
        })
        .collect();
    let rad = howell::kernel(f, &frob_t, n);
    let apply = |r: &[u64], j: usize| -> Vec<u64> {
        let mut out = vec![0u64; n];
        for (a, &ra) in r.iter().enumerate() {
            if ra == 0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(&act[a][j]) {
                *o = f.add(*o, f.mul(ra, x));
            }
        }
        out
    };
    let rad_v = Howell::new(
        f,
        n,
        rad.rows().iter().flat_map(|r| (0..n).map(move |j| (r.clone(), j))).map(|(r, j)| apply(&r, j)),
    );
    let dim_vbar = n as u32 - rad_v.log_card();
    let images: Vec<Vec<u64>> = (0..n)
        .map(|a| {
            let mut unit = vec![0u64; n];
            unit[a] = 1;
            (0..n).flat_map(|j| rad_v.reduce(&apply(&unit, j))).collect()
        })
        .collect();
    let ann = howell::kernel(f, &images, n * n);
    Ok(dim_vbar == n as u32 - ann.log_card())
}

pub fn order_report(alg: &CharAlgebra, i: &Lattice) -> Result<OrderReport> {
    let o = associated_order(alg, i)?;
    let contains_group_ring = alg.lattice_contains(&o, &alg.group_ring_lattice())?;
    let stabilizes = alg.lattice_eq(&alg.product(&o, i)?, i)?;
    let min_order = min_order(alg, &o, i)?;
    Ok(OrderReport {
        order: o.to_data(),
        contains_group_ring,
        stabilizes,
        min_order,
    })
}

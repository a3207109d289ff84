//! Brute-force counterparts of the main algorithms.
//!
//! Nothing here uses echelon forms of spans: submodules are enumerated as sets
//! of vectors, closed under addition of `R`-multiples of their generators.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::etnc::{CharAlgebra, Lattice, Precise};
use crate::module::FPModule;
use crate::ring::RingHandle;
use crate::selmer::SelmerInstance;
use crate::wedge::subsets;

/// Largest set any oracle will enumerate.
pub const ENUM_LIMIT: usize = 531_441;

pub type ElemSet = HashSet<Vec<u64>>;

fn too_big(what: &str) -> Error {
    Error::Bounds(format!("{what} exceeds the enumeration limit {ENUM_LIMIT}"))
}

/// `R`-span of vectors in `R^w` (flattened), as a set.
pub fn span(ring: &RingHandle, w: usize, gens: &[Vec<u64>]) -> Result<ElemSet> {
    let d = ring.dim();
    let z = ring.zpk();
    let mut zgens: Vec<Vec<u64>> = Vec::new();
    for g in gens {
        for k in 0..d {
            let b = ring.basis(k);
            let v: Vec<u64> = (0..w).flat_map(|i| ring.mul(&b, &g[i * d..(i + 1) * d])).collect();
            if v.iter().any(|&x| x != 0) {
                zgens.push(v);
            }
        }
    }
    let mut seen: ElemSet = HashSet::new();
    let zero = vec![0u64; w * d];
    seen.insert(zero.clone());
    let mut frontier = vec![zero];
    while let Some(v) = frontier.pop() {
        for g in &zgens {
            let s: Vec<u64> = v.iter().zip(g).map(|(&a, &b)| z.add(a, b)).collect();
            if seen.insert(s.clone()) {
                if seen.len() > ENUM_LIMIT {
                    return Err(too_big("span"));
                }
                frontier.push(s);
            }
        }
    }
    Ok(seen)
}

pub fn ideal_membership(ring: &RingHandle, gens: &[Vec<u64>], x: &[u64]) -> Result<bool> {
    Ok(span(ring, 1, gens)?.contains(x))
}

fn permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    if n == 0 {
        return vec![(vec![], true)];
    }
    let mut out = Vec::new();
    for (p, even) in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            // inserting at position pos crosses len - pos entries
            let flips = p.len() - pos;
            out.push((q, even == (flips % 2 == 0)));
        }
    }
    out
}

/// Leibniz expansion.
fn leibniz(ring: &RingHandle, m: &[Vec<Vec<u64>>]) -> Vec<u64> {
    let n = m.len();
    let mut acc = ring.zero();
    for (perm, even) in permutations(n) {
        let mut t = ring.one();
        for (i, &j) in perm.iter().enumerate() {
            t = ring.mul(&t, &m[i][j]);
        }
        acc = if even { ring.add(&acc, &t) } else { ring.sub(&acc, &t) };
    }
    acc
}

/// `Fitt^j(M)` as the set spanned by all `(b - j)`-minors.
pub fn fitting_minors(m: &FPModule, j: usize) -> Result<ElemSet> {
    let ring = m.ring();
    let b = m.ngens();
    let rels = m.relations();
    if j >= b {
        return span(ring, 1, &[ring.one()]);
    }
    let k = b - j;
    let mut minors = Vec::new();
    if k <= rels.len() {
        for rows in subsets(b, k) {
            for cols in subsets(rels.len(), k) {
                let mat: Vec<Vec<Vec<u64>>> = rows
                    .iter()
                    .map(|&r| cols.iter().map(|&c| rels[c][r].clone()).collect())
                    .collect();
                minors.push(leibniz(ring, &mat));
            }
        }
    }
    span(ring, 1, &minors)
}

/// Every `R`-linear `M -> R`, as its values on the generators.
pub fn functionals(m: &FPModule) -> Result<Vec<Vec<Vec<u64>>>> {
    let ring = m.ring();
    let elems = ring.elements();
    let b = m.ngens();
    let total = (elems.len() as u128).pow(b as u32);
    if total > ENUM_LIMIT as u128 {
        return Err(too_big("Hom(M, R)"));
    }
    let mut out = Vec::new();
    for code in 0..total as usize {
        let phi: Vec<Vec<u64>> = (0..b)
            .map(|i| elems[(code / elems.len().pow(i as u32)) % elems.len()].clone())
            .collect();
        let ok = m.relations().iter().all(|col| {
            let v = col
                .iter()
                .zip(&phi)
                .fold(ring.zero(), |acc, (c, f)| ring.add(&acc, &ring.mul(c, f)));
            ring.is_zero(&v)
        });
        if ok {
            out.push(phi);
        }
    }
    Ok(out)
}

/// Next `r`-subset of `0..n` in lexicographic order.
fn next_subset(t: &mut [usize], n: usize) -> bool {
    let r = t.len();
    for i in (0..r).rev() {
        if t[i] < n - r + i {
            t[i] += 1;
            for j in i + 1..r {
                t[j] = t[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `{ Phi(x) : Phi in wedge^r M^* }` for `x` with coordinates on `subsets(b, r)`.
///
/// Walks the `r`-subsets of `M^* - {0}`; stops early once a value is a unit.
pub fn bidual_image(m: &FPModule, r: usize, x: &[Vec<u64>]) -> Result<ElemSet> {
    let ring = m.ring();
    // sparse functionals first, so that a unit value tends to show up early
    let mut funcs = functionals(m)?;
    funcs.retain(|f| f.iter().any(|v| !ring.is_zero(v)));
    funcs.sort_by_key(|f| f.iter().filter(|v| !ring.is_zero(v)).count());
    let isets = subsets(m.ngens(), r);
    let mut values = HashSet::new();
    if r <= funcs.len() {
        let mut t: Vec<usize> = (0..r).collect();
        let mut visited = 0usize;
        loop {
            visited += 1;
            if visited > ENUM_LIMIT {
                return Err(too_big("wedge of functionals"));
            }
            let mut acc = ring.zero();
            for (iset, xi) in isets.iter().zip(x) {
                let mat: Vec<Vec<Vec<u64>>> = t
                    .iter()
                    .map(|&a| iset.iter().map(|&i| funcs[a][i].clone()).collect())
                    .collect();
                acc = ring.add(&acc, &ring.mul(xi, &leibniz(ring, &mat)));
            }
            let unit = ring.is_unit(&acc);
            values.insert(acc);
            if unit || !next_subset(&mut t, funcs.len()) {
                break;
            }
        }
    }
    let gens: Vec<Vec<u64>> = values.into_iter().collect();
    span(ring, 1, &gens)
}

/// Sorted list of a set, for deterministic iteration.
fn sorted(s: &ElemSet) -> Vec<Vec<u64>> {
    let mut v: Vec<Vec<u64>> = s.iter().cloned().collect();
    v.sort();
    v
}

/// A generating set of an enumerated submodule of `R^w`.
fn generators(ring: &RingHandle, w: usize, set: &ElemSet) -> Result<Vec<Vec<u64>>> {
    let mut gens: Vec<Vec<u64>> = Vec::new();
    let mut cur = span(ring, w, &gens)?;
    for v in sorted(set) {
        if !cur.contains(&v) {
            gens.push(v);
            cur = span(ring, w, &gens)?;
        }
        if cur.len() == set.len() {
            break;
        }
    }
    Ok(gens)
}

fn dot(ring: &RingHandle, a: &[Vec<u64>], x: &[u64]) -> Vec<u64> {
    let d = ring.dim();
    a.iter()
        .enumerate()
        .fold(ring.zero(), |acc, (j, c)| ring.add(&acc, &ring.mul(c, &x[j * d..(j + 1) * d])))
}

/// Every vector of `R^w`, flattened.
fn all_vectors(ring: &RingHandle, w: usize) -> Result<Vec<Vec<u64>>> {
    let elems = ring.elements();
    let total = (elems.len() as u128).pow(w as u32);
    if total > ENUM_LIMIT as u128 {
        return Err(too_big("R^w"));
    }
    Ok((0..total as usize)
        .map(|code| {
            (0..w)
                .flat_map(|i| elems[(code / elems.len().pow(i as u32)) % elems.len()].clone())
                .collect()
        })
        .collect())
}

/// `psi` contracted into `x`, with `(-1)^t` on the `t`-th slot.
fn contract(ring: &RingHandle, n: usize, s: usize, psi: &[Vec<u64>], x: &[u64]) -> Vec<u64> {
    let d = ring.dim();
    let lower: Vec<Vec<usize>> = subsets(n, s - 1);
    let pos: HashMap<Vec<usize>, usize> = lower.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    let mut out = vec![0u64; lower.len() * d];
    for (idx, set) in subsets(n, s).iter().enumerate() {
        let xi = &x[idx * d..(idx + 1) * d];
        for (t, &i) in set.iter().enumerate() {
            let mut rest = set.clone();
            rest.remove(t);
            let k = pos[&rest];
            let term = ring.mul(&psi[i], xi);
            let cur = out[k * d..(k + 1) * d].to_vec();
            let new = if t % 2 == 0 { ring.add(&cur, &term) } else { ring.sub(&cur, &term) };
            out[k * d..(k + 1) * d].copy_from_slice(&new);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarkCount {
    pub systems: u64,
    pub log_card: u32,
}

/// Counts the Stark systems of depth 1 by listing every candidate value.
pub fn stark_enumerate(inst: &SelmerInstance, tag: &str, rank: usize, level: u32) -> Result<StarkCount> {
    let view = inst.level(level);
    let ring = view.ring.clone();
    let h = view.h;
    let d = ring.dim();
    if ring.log_card() as usize * h > 20 || h > 3 {
        return Err(Error::Bounds("stark enumeration needs h <= 3 and |R|^h small".into()));
    }
    let structure = inst.structure(tag)?;
    let ncore = inst.ncore();
    let vectors = all_vectors(&ring, h)?;
    let cond_sets: Vec<ElemSet> = (0..ncore)
        .map(|v| {
            let gens: Vec<Vec<u64>> = structure.conditions[v]
                .iter()
                .map(|g| g.iter().flat_map(|x| inst.ring().reduce_to_level(x, level)).collect())
                .collect();
            span(&ring, view.places[v].rank, &gens)
        })
        .collect::<Result<_>>()?;
    let loc = |v: usize, x: &[u64]| -> Vec<u64> {
        view.places[v].loc.iter().flat_map(|row| dot(&ring, row, x)).collect()
    };
    // W_n for n = {} and n = {q}
    let nodes: Vec<Vec<usize>> = std::iter::once(vec![]).chain((0..inst.naux()).map(|q| vec![q])).collect();
    let mut values: Vec<Vec<Vec<u64>>> = Vec::new();
    for n in &nodes {
        let selmer: ElemSet = vectors
            .iter()
            .filter(|x| {
                (0..ncore).all(|v| cond_sets[v].contains(&loc(v, x)))
                    && (0..inst.naux())
                        .filter(|q| !n.contains(q))
                        .all(|q| ring.is_zero(&dot(&ring, &view.places[ncore + q].loc[1], x)))
            })
            .cloned()
            .collect();
        let gens = generators(&ring, h, &selmer)?;
        let perp: Vec<Vec<Vec<u64>>> = vectors
            .iter()
            .map(|psi| (0..h).map(|j| psi[j * d..(j + 1) * d].to_vec()).collect::<Vec<_>>())
            .filter(|psi: &Vec<Vec<u64>>| gens.iter().all(|g| ring.is_zero(&dot(&ring, psi, g))))
            .collect();
        let perp_set: ElemSet = perp.iter().map(|p| p.concat()).collect();
        let perp_gens: Vec<Vec<Vec<u64>>> = generators(&ring, h, &perp_set)?
            .iter()
            .map(|p| (0..h).map(|j| p[j * d..(j + 1) * d].to_vec()).collect())
            .collect();
        let s = rank + n.len();
        if s > h {
            values.push(vec![vec![0u64; 0]]);
            continue;
        }
        let width = subsets(h, s).len();
        let cands = all_vectors(&ring, width)?;
        let w: Vec<Vec<u64>> = cands
            .into_iter()
            .filter(|x| s == 0 || perp_gens.iter().all(|psi| contract(&ring, h, s, psi, x).iter().all(|&c| c == 0)))
            .collect();
        values.push(w);
    }
    let z = ring.zpk();
    let mut buckets: Vec<HashMap<Vec<u64>, u64>> = Vec::new();
    for (k, n) in nodes.iter().enumerate().skip(1) {
        let q = n[0];
        let aux = &inst.data.aux[q];
        let u = ring.inverse(&inst.ring().reduce_to_level(&aux.phi_fs, level))
            .ok_or_else(|| Error::Input("phi_fs is not a unit".into()))?;
        let psi: Vec<Vec<u64>> = view.places[ncore + q].loc[1].iter().map(|c| ring.mul(&u, c)).collect();
        let mut b: HashMap<Vec<u64>, u64> = HashMap::new();
        for x in &values[k] {
            *b.entry(contract(&ring, h, rank + 1, &psi, x)).or_default() += 1;
        }
        buckets.push(b);
    }
    let mut total: u64 = 0;
    for e in &values[0] {
        total += buckets.iter().map(|b| b.get(e).copied().unwrap_or(0)).product::<u64>();
    }
    let p = z.p();
    let mut log = 0;
    let mut t = total;
    while t > 1 && t % p == 0 {
        t /= p;
        log += 1;
    }
    if t != 1 {
        return Err(Error::Input(format!("{total} systems is not a power of {p}")));
    }
    Ok(StarkCount {
        systems: total,
        log_card: log,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerOracle {
    pub candidates: u64,
    pub stabilizing: u64,
}

/// Lists `x = p^(-c) y` over `y` in `O_S / p^(c + a) O_S`, `a = v_p(|G|)`,
/// and records which stabilize `I`. `|G| O_S` lies in the group ring, so
/// classes modulo `p^a O_S` decide stabilization.
pub fn stabilizer_elements(alg: &CharAlgebra, i: &Lattice) -> Result<Vec<(Precise, bool)>> {
    let p = alg.p();
    let order = alg.ring().group_order() as u64;
    let mut a = 0;
    let mut o = order;
    while o % p == 0 {
        o /= p;
        a += 1;
    }
    let c = i.conductor;
    let n = alg.n();
    let k = c + a;
    let count = (p as u128).pow(k * n as u32);
    if count > ENUM_LIMIT as u128 {
        return Err(too_big("stabilizer candidates"));
    }
    let prec = i.prec;
    if 2 * c >= prec {
        return Err(Error::InsufficientPrecision {
            have: prec,
            need: 2 * c + 1,
        });
    }
    let z = alg.zpk().with_k(prec);
    let low = z.with_k(prec - c);
    let rows: Vec<Vec<u64>> = i.form.rows().to_vec();
    let form_low = crate::howell::Howell::new(
        low,
        n,
        rows.iter().map(|r| r.iter().map(|&x| low.reduce(x)).collect::<Vec<_>>()),
    );
    let q = p.pow(k);
    let mut out = Vec::with_capacity(count as usize);
    for code in 0..count as u64 {
        let y: Vec<u64> = (0..n).map(|t| (code / q.pow(t as u32)) % q).collect();
        let stab = rows.iter().all(|r| {
            let v: Vec<u64> = alg.mul(&y, r).iter().map(|&x| z.reduce(x)).collect();
            v.iter().all(|&x| z.val(x) >= c) && form_low.contains(&v.iter().map(|&x| low.reduce(z.div_p_pow(x, c))).collect::<Vec<_>>())
        });
        out.push((
            Precise {
                coords: y,
                offset: c,
                prec: prec,
            },
            stab,
        ));
    }
    Ok(out)
}

/// Agreement of the enumerated stabilizer with membership in `order`.
pub fn stabilizer_agrees(alg: &CharAlgebra, i: &Lattice, order: &Lattice) -> Result<(StabilizerOracle, bool)> {
    let elems = stabilizer_elements(alg, i)?;
    let mut agree = true;
    let mut stabilizing = 0;
    for (x, stab) in &elems {
        if *stab {
            stabilizing += 1;
        }
        if alg.lattice_member(order, x)? != *stab {
            agree = false;
        }
    }
    Ok((
        StabilizerOracle {
            candidates: elems.len() as u64,
            stabilizing,
        },
        agree,
    ))
}

/// Whether `O x + p I = I` for some `x` in `I`, by listing `I / p I`.
pub fn principal_oracle(alg: &CharAlgebra, order: &Lattice, i: &Lattice) -> Result<bool> {
    let p = alg.p();
    let n = alg.n();
    let count = (p as u128).pow(n as u32);
    if count > ENUM_LIMIT as u128 {
        return Err(too_big("I/pI"));
    }
    let prec = order.prec.min(i.prec);
    let e = order.offset;
    if e + i.conductor + 1 >= prec {
        return Err(Error::InsufficientPrecision {
            have: prec,
            need: e + i.conductor + 2,
        });
    }
    let z = alg.zpk().with_k(prec);
    let low = z.with_k(prec - e);
    let basis: Vec<Vec<u64>> = i.form.rows().iter().map(|r| r.iter().map(|&x| z.reduce(x)).collect()).collect();
    let target = crate::howell::Howell::new(low, n, basis.iter().map(|r| r.iter().map(|&x| low.reduce(x)).collect::<Vec<_>>()));
    let p_i: Vec<Vec<u64>> = basis.iter().map(|r| r.iter().map(|&x| low.mul(low.reduce(x), p)).collect()).collect();
    for code in 0..count as u64 {
        let coeffs: Vec<u64> = (0..n).map(|t| (code / p.pow(t as u32)) % p).collect();
        let x: Vec<u64> = (0..n)
            .map(|col| basis.iter().zip(&coeffs).fold(0, |acc, (r, &c)| z.add(acc, z.mul(r[col], c))))
            .collect();
        let mut gens = p_i.clone();
        for y in order.form.rows() {
            let v: Vec<u64> = alg.mul(y, &x).iter().map(|&t| z.reduce(t)).collect();
            if v.iter().any(|&t| z.val(t) < e) {
                return Err(Error::Input("the order does not stabilize I".into()));
            }
            gens.push(v.iter().map(|&t| low.reduce(z.div_p_pow(t, e))).collect());
        }
        let h = crate::howell::Howell::new(low, n, gens);
        if h == target {
            return Ok(true);
        }
    }
    Ok(false)
}

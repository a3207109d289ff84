//! The `epsilon`-part of `Q_p[G]` at finite precision.
//!
//! For a p-group `G` the Galois orbits of characters correspond to cyclic
//! subgroups of the dual group; the orbit of a character of order `d`
//! contributes the factor `Z_p[zeta_d]`, written in the power basis modulo
//! `Phi_d`. `O_S` is the product of these factors over the orbits in
//! `epsilon` and `Z_p[G] epsilon` maps into it through one character per
//! orbit. All coordinates live in `Z/p^W` with `W = m + h`.
//!
//! A [`Precise`] value is `p^(-offset) * x` with `x` in `O_S` known modulo
//! `p^prec`. A [`Lattice`] is `p^(-offset) * L` with `L` a full sublattice of
//! `O_S`, stored modulo `p^prec` together with its conductor `c`, the least
//! exponent with `p^c O_S` inside `L`. A lattice is only ever built when
//! `c < prec`: then the reduction determines `L` exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::howell::{self, Howell};
use crate::ring::RingHandle;
use crate::zmod::Zpk;

/// Galois orbit of characters, named by its smallest exponent vector.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Orbit {
    pub order: u64,
    pub rep: Vec<u64>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Order of the character with exponent vector `a` on `Z/n_1 x ... x Z/n_k`.
pub fn character_order(group: &[u64], a: &[u64]) -> u64 {
    group
        .iter()
        .zip(a)
        .fold(1, |acc, (&n, &x)| lcm(acc, n / gcd(x % n, n)))
}

fn orbit_rep(group: &[u64], a: &[u64]) -> Vec<u64> {
    let d = character_order(group, a);
    (1..=d.max(1))
        .filter(|u| gcd(*u, d) == 1)
        .map(|u| group.iter().zip(a).map(|(&n, &x)| (x * u) % n).collect::<Vec<_>>())
        .min()
        .unwrap_or_else(|| a.to_vec())
}

/// Every character orbit of the group, sorted by order then representative.
pub fn all_orbits(group: &[u64]) -> Vec<Orbit> {
    let mut chars: Vec<Vec<u64>> = vec![vec![]];
    for &n in group {
        chars = chars
            .into_iter()
            .flat_map(|c| {
                (0..n).map(move |x| {
                    let mut c = c.clone();
                    c.push(x);
                    c
                })
            })
            .collect();
    }
    let mut out: Vec<Orbit> = chars
        .iter()
        .filter(|a| orbit_rep(group, a) == **a)
        .map(|a| Orbit {
            order: character_order(group, a),
            rep: a.clone(),
        })
        .collect();
    out.sort();
    out
}

/// Orbits whose character order lies in `orders`.
pub fn orbits_of_orders(group: &[u64], orders: &[u64]) -> Vec<Orbit> {
    all_orbits(group)
        .into_iter()
        .filter(|o| orders.contains(&o.order))
        .collect()
}

/// Cyclotomic polynomial `Phi_{p^k}` (or `x - 1`), low degree first.
pub fn cyclotomic_prime_power(p: u64, d: u64) -> Vec<i64> {
    if d == 1 {
        return vec![-1, 1];
    }
    let q = d / p;
    let mut c = vec![0i64; (d - q + 1) as usize];
    for i in 0..p {
        c[(i * q) as usize] = 1;
    }
    c
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precise {
    pub coords: Vec<u64>,
    pub offset: u32,
    pub prec: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub offset: u32,
    pub prec: u32,
    pub conductor: u32,
    pub form: Howell,
}

/// Serialized lattice: canonical rows plus offset and precision.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeData {
    pub offset: u32,
    pub prec: u32,
    pub conductor: u32,
    pub rows: Vec<Vec<u64>>,
}

impl Lattice {
    pub fn to_data(&self) -> LatticeData {
        LatticeData {
            offset: self.offset,
            prec: self.prec,
            conductor: self.conductor,
            rows: self.form.rows().to_vec(),
        }
    }

    /// `log_p [O_S : L]`, ignoring the offset.
    pub fn index_log(&self) -> u32 {
        self.form.ncols() as u32 * self.prec - self.form.log_card()
    }
}

#[derive(Clone, Debug)]
pub struct CharAlgebra {
    ring: RingHandle,
    orbits: Vec<Orbit>,
    offsets: Vec<usize>,
    polys: Vec<Vec<i64>>,
    /// Image of each group element.
    images: Vec<Vec<u64>>,
}

fn precision(have: u32, need: u32) -> Error {
    Error::InsufficientPrecision { have, need }
}

impl CharAlgebra {
    /// `ring` is the group ring at working precision `W`.
    pub fn new(ring: &RingHandle, orbits: &[Orbit]) -> Result<Self> {
        if ring.f() != 1 || ring.has_aux() {
            return Err(Error::Input("the character algebra needs f = 1 and a p-group".into()));
        }
        let group = ring.factors().to_vec();
        let all = all_orbits(&group);
        let mut orbits = orbits.to_vec();
        orbits.sort();
        orbits.dedup();
        for o in &orbits {
            if !all.contains(o) {
                return Err(Error::Input(format!(
                    "{:?} is not a canonical orbit representative of order {}",
                    o.rep, o.order
                )));
            }
        }
        if orbits.is_empty() {
            return Err(Error::Input("empty idempotent".into()));
        }
        let p = ring.p();
        let z = ring.zpk();
        let mut offsets = vec![0];
        let mut polys = Vec::new();
        for o in &orbits {
            let phi = cyclotomic_prime_power(p, o.order);
            offsets.push(offsets.last().unwrap() + phi.len() - 1);
            polys.push(phi);
        }
        let n = *offsets.last().unwrap();
        let big = group.iter().fold(1, |a, &b| lcm(a, b));
        let mut alg = CharAlgebra {
            ring: ring.clone(),
            orbits,
            offsets,
            polys,
            images: Vec::new(),
        };
        let mut images = Vec::new();
        for g in 0..ring.group_order() {
            let x = ring.group_exps(g);
            let mut v = vec![0u64; n];
            for (k, o) in alg.orbits.iter().enumerate() {
                let t = group
                    .iter()
                    .zip(&o.rep)
                    .zip(x)
                    .fold(0u64, |acc, ((&ni, &ai), &xi)| (acc + ai * xi * (big / ni)) % big);
                let e = (t / (big / o.order)) % o.order;
                let mut poly = vec![0u64; alg.comp_dim(k)];
                alg.add_monomial(k, e as usize, 1, &mut poly, z);
                v[alg.offsets[k]..alg.offsets[k + 1]].copy_from_slice(&poly);
            }
            images.push(v);
        }
        alg.images = images;
        Ok(alg)
    }

    pub fn ring(&self) -> &RingHandle {
        &self.ring
    }

    pub fn zpk(&self) -> Zpk {
        self.ring.zpk()
    }

    pub fn p(&self) -> u64 {
        self.ring.p()
    }

    /// Working precision `W`.
    pub fn w(&self) -> u32 {
        self.ring.m()
    }

    pub fn orbits(&self) -> &[Orbit] {
        &self.orbits
    }

    /// Rank of `O_S` over `Z_p`.
    pub fn n(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn comp_dim(&self, k: usize) -> usize {
        self.offsets[k + 1] - self.offsets[k]
    }

    /// Adds `c x^e` reduced modulo `Phi_d` into `poly`.
    fn add_monomial(&self, k: usize, e: usize, c: u64, poly: &mut [u64], z: Zpk) {
        let deg = self.comp_dim(k);
        let phi = &self.polys[k];
        // x^e mod Phi by repeated reduction of the top coefficient
        let mut acc = vec![0u64; e.max(deg) + 1];
        acc[e] = z.reduce(c);
        for top in (deg..=e).rev() {
            let t = acc[top];
            if t == 0 {
                continue;
            }
            acc[top] = 0;
            for (i, &ci) in phi.iter().enumerate().take(deg) {
                // x^deg = -sum_{i<deg} phi_i x^i
                let term = z.mul(t, z.from_i64(ci));
                acc[top - deg + i] = z.sub(acc[top - deg + i], term);
            }
        }
        for i in 0..deg {
            poly[i] = z.add(poly[i], acc[i]);
        }
    }

    /// Image of a group-ring element (coefficients over `Z/p^W`).
    pub fn project(&self, x: &[u64]) -> Vec<u64> {
        let z = self.zpk();
        let mut out = vec![0u64; self.n()];
        for (g, &c) in x.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(&self.images[g]) {
                *o = z.add(*o, z.mul(c, v));
            }
        }
        out
    }

    pub fn group_image(&self, g: usize) -> &[u64] {
        &self.images[g]
    }

    pub fn group_images(&self) -> &[Vec<u64>] {
        &self.images
    }

    pub fn one_coords(&self) -> Vec<u64> {
        self.images[0].clone()
    }

    /// Unit vectors of the power bases, a `Z_p`-basis of `O_S`.
    pub fn basis(&self) -> Vec<Vec<u64>> {
        (0..self.n())
            .map(|i| {
                let mut e = vec![0u64; self.n()];
                e[i] = 1;
                e
            })
            .collect()
    }

    /// Product in `O_S` modulo `p^W`.
    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let z = self.zpk();
        let mut out = vec![0u64; self.n()];
        for k in 0..self.orbits.len() {
            let r = self.offsets[k]..self.offsets[k + 1];
            let (x, y) = (&a[r.clone()], &b[r.clone()]);
            let mut prod = vec![0u64; 2 * x.len()];
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0 {
                    continue;
                }
                for (j, &yj) in y.iter().enumerate() {
                    prod[i + j] = z.add(prod[i + j], z.mul(xi, yj));
                }
            }
            let mut poly = vec![0u64; x.len()];
            for (e, &c) in prod.iter().enumerate() {
                if c != 0 {
                    self.add_monomial(k, e, c, &mut poly, z);
                }
            }
            out[r].copy_from_slice(&poly);
        }
        out
    }

    fn reduce_to(&self, v: &[u64], j: u32) -> Vec<u64> {
        let z = self.zpk();
        v.iter().map(|&x| z.reduce_to(x, j)).collect()
    }

    fn times_p_pow(&self, v: &[u64], k: u32) -> Vec<u64> {
        let z = self.zpk();
        let t = z.p_pow(k);
        v.iter().map(|&x| z.mul(x, t)).collect()
    }

    pub fn precise(&self, coords: Vec<u64>, offset: u32) -> Precise {
        Precise {
            coords,
            offset,
            prec: self.w(),
        }
    }

    pub fn one(&self) -> Precise {
        self.precise(self.one_coords(), 0)
    }

    /// `p^k x`.
    pub fn shift(&self, x: &Precise, k: u32) -> Precise {
        if x.offset >= k {
            return Precise {
                coords: x.coords.clone(),
                offset: x.offset - k,
                prec: x.prec,
            };
        }
        let extra = k - x.offset;
        let prec = (x.prec + extra).min(self.w());
        Precise {
            coords: self.reduce_to(&self.times_p_pow(&x.coords, extra), prec),
            offset: 0,
            prec,
        }
    }

    /// Rewrites `x` with offset `e >= x.offset`.
    fn with_offset(&self, x: &Precise, e: u32) -> Precise {
        let d = e - x.offset;
        let prec = (x.prec + d).min(self.w());
        Precise {
            coords: self.reduce_to(&self.times_p_pow(&x.coords, d), prec),
            offset: e,
            prec,
        }
    }

    pub fn mul_precise(&self, a: &Precise, b: &Precise) -> Precise {
        let prec = a.prec.min(b.prec);
        Precise {
            coords: self.reduce_to(&self.mul(&a.coords, &b.coords), prec),
            offset: a.offset + b.offset,
            prec,
        }
    }

    pub fn add_precise(&self, a: &Precise, b: &Precise) -> Precise {
        let e = a.offset.max(b.offset);
        let (a, b) = (self.with_offset(a, e), self.with_offset(b, e));
        let prec = a.prec.min(b.prec);
        let z = self.zpk();
        let coords = a.coords.iter().zip(&b.coords).map(|(&x, &y)| z.add(x, y)).collect::<Vec<_>>();
        Precise {
            coords: self.reduce_to(&coords, prec),
            offset: e,
            prec,
        }
    }

    pub fn neg_precise(&self, a: &Precise) -> Precise {
        let z = self.zpk();
        Precise {
            coords: self.reduce_to(&a.coords.iter().map(|&x| z.neg(x)).collect::<Vec<_>>(), a.prec),
            offset: a.offset,
            prec: a.prec,
        }
    }

    /// Determinant by cofactor expansion along the first row.
    pub fn det_precise(&self, m: &[Vec<Precise>]) -> Precise {
        let n = m.len();
        if n == 0 {
            return self.one();
        }
        if n == 1 {
            return m[0][0].clone();
        }
        let mut acc: Option<Precise> = None;
        for j in 0..n {
            let minor: Vec<Vec<Precise>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(c, _)| *c != j)
                        .map(|(_, x)| x.clone())
                        .collect()
                })
                .collect();
            let mut t = self.mul_precise(&m[0][j], &self.det_precise(&minor));
            if j % 2 == 1 {
                t = self.neg_precise(&t);
            }
            acc = Some(match acc {
                None => t,
                Some(a) => self.add_precise(&a, &t),
            });
        }
        acc.unwrap()
    }

    fn howell(&self, prec: u32, rows: Vec<Vec<u64>>) -> Howell {
        let z = self.zpk().with_k(prec);
        let rows: Vec<Vec<u64>> = rows.into_iter().map(|r| self.reduce_to(&r, prec)).collect();
        Howell::new(z, self.n(), rows)
    }

    /// Least `c < prec` with `p^c O_S` inside the span, if any.
    fn conductor(&self, form: &Howell, prec: u32) -> Option<u32> {
        let z = form.ctx();
        (0..prec).find(|&c| {
            (0..self.n()).all(|i| {
                let mut e = vec![0u64; self.n()];
                e[i] = z.p_pow(c);
                form.contains(&e)
            })
        })
    }

    fn certify(&self, offset: u32, prec: u32, form: Howell, need: u32) -> Result<Lattice> {
        match self.conductor(&form, prec) {
            Some(conductor) => Ok(self.canonical(Lattice {
                offset,
                prec,
                conductor,
                form,
            })),
            None => Err(precision(prec, need.max(prec + 1))),
        }
    }

    /// Lattice `p^(-offset) * span(rows)` with rows modulo `p^prec`.
    pub fn from_rows(&self, offset: u32, prec: u32, rows: Vec<Vec<u64>>) -> Result<Lattice> {
        let form = self.howell(prec, rows);
        self.certify(offset, prec, form, prec + 1)
    }

    /// Divides out common factors of `p` while the offset allows it.
    fn canonical(&self, mut l: Lattice) -> Lattice {
        let p = self.p();
        while l.offset > 0 && l.prec > 1 && l.conductor > 0 && l.form.rows().iter().all(|r| r.iter().all(|&x| x % p == 0)) {
            let rows: Vec<Vec<u64>> = l.form.rows().iter().map(|r| r.iter().map(|&x| x / p).collect()).collect();
            l = Lattice {
                offset: l.offset - 1,
                prec: l.prec - 1,
                conductor: l.conductor - 1,
                form: self.howell(l.prec - 1, rows),
            };
        }
        l
    }

    /// `Z_p`-span of `m * g` over multipliers `m` (integral, exact) and generators `g`.
    pub fn span(&self, gens: &[Precise], multipliers: &[Vec<u64>]) -> Result<Lattice> {
        if gens.is_empty() {
            return Err(Error::Input("a lattice needs at least one generator".into()));
        }
        let e = gens.iter().map(|g| g.offset).max().unwrap();
        let aligned: Vec<Precise> = gens.iter().map(|g| self.with_offset(g, e)).collect();
        let prec = aligned.iter().map(|g| g.prec).min().unwrap();
        let mut rows = Vec::new();
        for g in &aligned {
            for m in multipliers {
                rows.push(self.mul(m, &g.coords));
            }
        }
        let form = self.howell(prec, rows);
        self.certify(e, prec, form, prec + 1)
    }

    /// `Z_p[G] x_1 + ... + Z_p[G] x_k`.
    pub fn lambda_span(&self, gens: &[Precise]) -> Result<Lattice> {
        self.span(gens, &self.images)
    }

    /// `O_S x_1 + ...`.
    pub fn maximal_span(&self, gens: &[Precise]) -> Result<Lattice> {
        self.span(gens, &self.basis())
    }

    /// The image of `Z_p[G]` in `O_S`.
    pub fn group_ring_lattice(&self) -> Lattice {
        self.lambda_span(&[self.one()]).expect("the group ring spans a full lattice")
    }

    pub fn maximal_order(&self) -> Lattice {
        self.maximal_span(&[self.one()]).expect("O_S is a lattice")
    }

    /// Lattice spanned by an ideal of the group ring at working precision.
    pub fn ideal_lattice(&self, rows: &[Vec<u64>]) -> Result<Lattice> {
        let w = self.w();
        let projected: Vec<Vec<u64>> = rows.iter().map(|r| self.project(r)).collect();
        let form = self.howell(w, projected);
        self.certify(0, w, form, w + 1)
    }

    pub fn product(&self, a: &Lattice, b: &Lattice) -> Result<Lattice> {
        let prec = a.prec.min(b.prec);
        if a.conductor + b.conductor >= prec {
            return Err(precision(prec, a.conductor + b.conductor + 1));
        }
        let mut rows = Vec::new();
        for x in a.form.rows() {
            for y in b.form.rows() {
                rows.push(self.mul(x, y));
            }
        }
        let form = self.howell(prec, rows);
        self.certify(a.offset + b.offset, prec, form, a.conductor + b.conductor + 1)
    }

    /// `x L`.
    pub fn scale(&self, x: &Precise, l: &Lattice) -> Result<Lattice> {
        let prec = x.prec.min(l.prec);
        let rows: Vec<Vec<u64>> = l.form.rows().iter().map(|r| self.mul(&x.coords, r)).collect();
        let form = self.howell(prec, rows);
        self.certify(x.offset + l.offset, prec, form, prec + 1)
    }

    /// `p^(e - offset) L` written with offset `e`.
    fn align(&self, l: &Lattice, e: u32) -> Result<Lattice> {
        let d = e - l.offset;
        if d == 0 {
            return Ok(l.clone());
        }
        let prec = (l.prec + d).min(self.w());
        if l.conductor + d >= prec {
            return Err(precision(prec, l.conductor + d + 1));
        }
        let rows: Vec<Vec<u64>> = l.form.rows().iter().map(|r| self.times_p_pow(r, d)).collect();
        let mut rows = rows;
        // p^(prec) O_S is part of the lattice once the modulus grows
        for i in 0..self.n() {
            let mut v = vec![0u64; self.n()];
            v[i] = self.zpk().p_pow(l.prec + d);
            rows.push(v);
        }
        Ok(Lattice {
            offset: e,
            prec,
            conductor: l.conductor + d,
            form: self.howell(prec, rows),
        })
    }

    /// Both lattices rewritten with a common offset and precision.
    fn common(&self, a: &Lattice, b: &Lattice) -> Result<(Howell, Howell)> {
        let e = a.offset.max(b.offset);
        let (a, b) = (self.align(a, e)?, self.align(b, e)?);
        let prec = a.prec.min(b.prec);
        let need = a.conductor.max(b.conductor);
        if need >= prec {
            return Err(precision(prec, need + 1));
        }
        Ok((a.form.reduce_modulus(prec), b.form.reduce_modulus(prec)))
    }

    pub fn lattice_eq(&self, a: &Lattice, b: &Lattice) -> Result<bool> {
        let (x, y) = self.common(a, b)?;
        Ok(x == y)
    }

    /// `b` inside `a`.
    pub fn lattice_contains(&self, a: &Lattice, b: &Lattice) -> Result<bool> {
        let (x, y) = self.common(a, b)?;
        Ok(x.contains_all(&y))
    }

    /// `x^(-1)`, with the precision lost to the valuation of `x`.
    pub fn inverse(&self, x: &Precise) -> Result<Precise> {
        let prec = x.prec;
        let mult: Vec<Vec<u64>> = self
            .basis()
            .iter()
            .map(|b| self.reduce_to(&self.mul(&x.coords, b), prec))
            .collect();
        let z = self.zpk().with_k(prec);
        let one = self.one_coords();
        for k in 0..prec {
            let target: Vec<u64> = one.iter().map(|&c| z.mul(c, z.p_pow(k))).collect();
            if let Some(y) = howell::solve(z, &mult, &target) {
                // x y = p^k, so x^(-1) = p^(offset - k) y
                let y = Precise {
                    coords: y,
                    offset: 0,
                    prec: prec - k,
                };
                let y = Precise {
                    coords: self.reduce_to(&y.coords, prec - k),
                    ..y
                };
                return Ok(if k >= x.offset {
                    Precise {
                        offset: k - x.offset,
                        ..y
                    }
                } else {
                    self.shift(&y, x.offset - k)
                });
            }
        }
        Err(precision(prec, prec + 1))
    }

    /// `x` in `L`.
    pub fn lattice_member(&self, l: &Lattice, x: &Precise) -> Result<bool> {
        let e = l.offset.max(x.offset);
        let a = self.align(l, e)?;
        let xs = self.with_offset(x, e);
        let prec = a.prec.min(xs.prec);
        if a.conductor >= prec {
            return Err(precision(prec, a.conductor + 1));
        }
        Ok(a.form.reduce_modulus(prec).contains(&self.reduce_to(&xs.coords, prec)))
    }
}

//! Galois rings `GR(p^m, f)` and their group rings over finite abelian groups.
//!
//! An element is a coefficient vector over `Z/p^m` of length `f * |G|`; index
//! `e * |G| + g` holds the coefficient of `x^e * g`, where `x` generates the
//! residue extension and group elements are numbered by their exponent tuples
//! in lexicographic order (first invariant factor most significant).
//!
//! The group may carry an auxiliary prime-to-p part `Delta`, listed after the
//! p-part. It is only there so that character idempotents can be formed; the
//! local-ring shortcuts below assume it is trivial.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::howell::{self, Howell};
use crate::zmod::{is_prime, p_power_exponent, Zpk};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingSpec {
    pub p: u64,
    pub m: u32,
    pub f: u32,
    pub group: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aux: Vec<u64>,
}

impl RingSpec {
    pub fn new(p: u64, m: u32, f: u32, group: Vec<u64>) -> Self {
        RingSpec {
            p,
            m,
            f,
            group,
            aux: Vec::new(),
        }
    }
}

struct RingData {
    spec: RingSpec,
    zpk: Zpk,
    // x^t reduced modulo the defining polynomial, for t < 2f - 1
    xpow: Vec<Vec<u64>>,
    modpoly: Vec<u64>,
    factors: Vec<u64>,
    n_p: usize,
    order: usize,
    exps: Vec<Vec<u64>>,
    add: Vec<usize>,
    neg: Vec<usize>,
    trace: Vec<u64>,
}

/// Shared handle to a ring; cheap to clone and compare.
#[derive(Clone)]
pub struct RingHandle(Arc<RingData>);

impl PartialEq for RingHandle {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

impl Eq for RingHandle {}

impl fmt::Debug for RingHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ring{:?}", self.0.spec)
    }
}

impl Serialize for RingHandle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.spec.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RingHandle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = RingSpec::deserialize(d)?;
        RingHandle::new(spec).map_err(serde::de::Error::custom)
    }
}

fn poly_rem_fp(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    // b monic, coefficients low to high
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = *r.last().unwrap() % p;
        let shift = r.len() - 1 - db;
        if lead != 0 {
            for (i, &bi) in b.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p * p - lead * bi % p) % p;
            }
        }
        r.pop();
    }
    r
}

fn monic_polys(p: u64, d: u32) -> impl Iterator<Item = Vec<u64>> {
    let count = p.pow(d);
    (0..count).map(move |code| {
        let mut c: Vec<u64> = (0..d).map(|i| (code / p.pow(i)) % p).collect();
        c.push(1);
        c
    })
}

/// First monic polynomial of degree `f` irreducible over `F_p`, in
/// lexicographic order of its lower coefficients (lowest degree least significant).
fn irreducible_poly(p: u64, f: u32) -> Vec<u64> {
    if f == 1 {
        return vec![0, 1];
    }
    'outer: for cand in monic_polys(p, f) {
        for d in 1..=f / 2 {
            for div in monic_polys(p, d) {
                if poly_rem_fp(&cand, &div, p).iter().all(|&x| x == 0) {
                    continue 'outer;
                }
            }
        }
        return cand;
    }
    unreachable!("irreducible polynomials exist in every degree")
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl RingHandle {
    pub fn new(spec: RingSpec) -> Result<Self> {
        let RingSpec {
            p, m, f, group, aux, ..
        } = &spec;
        let (p, m, f) = (*p, *m, *f);
        if !is_prime(p) {
            return Err(Error::InvalidRing(format!("{p} is not prime")));
        }
        if p == 2 {
            return Err(Error::InvalidRing("p must be odd".into()));
        }
        if m == 0 || f == 0 {
            return Err(Error::InvalidRing("m and f must be at least 1".into()));
        }
        for (i, &d) in group.iter().enumerate() {
            if d < 2 || p_power_exponent(d, p).is_none() {
                return Err(Error::InvalidRing(format!(
                    "invariant factor {d} is not a nontrivial power of {p}"
                )));
            }
            if i > 0 && d % group[i - 1] != 0 {
                return Err(Error::InvalidRing(format!(
                    "invariant factors must divide each other, got {} then {d}",
                    group[i - 1]
                )));
            }
        }
        for &d in aux.iter() {
            if d < 2 || d % p == 0 {
                return Err(Error::InvalidRing(format!(
                    "auxiliary factor {d} must be > 1 and prime to {p}"
                )));
            }
        }
        let qbits = (p as f64).log2() * (m as f64);
        if qbits > 30.0 {
            return Err(Error::InvalidRing(format!("p^m = {p}^{m} too large")));
        }
        let zpk = Zpk::new(p, m);
        let mut factors = group.clone();
        factors.extend(aux.iter().copied());
        let order: usize = factors.iter().product::<u64>() as usize;
        if (f as usize) * order > 4096 {
            return Err(Error::InvalidRing("ring too large".into()));
        }
        let mut exps = Vec::with_capacity(order);
        for idx in 0..order {
            let mut e = vec![0u64; factors.len()];
            let mut rest = idx as u64;
            for i in (0..factors.len()).rev() {
                e[i] = rest % factors[i];
                rest /= factors[i];
            }
            exps.push(e);
        }
        let index_of = |e: &[u64]| -> usize {
            let mut idx = 0u64;
            for (i, &d) in factors.iter().enumerate() {
                idx = idx * d + e[i] % d;
            }
            idx as usize
        };
        let mut add = vec![0usize; order * order];
        let mut neg = vec![0usize; order];
        for a in 0..order {
            for b in 0..order {
                let e: Vec<u64> = (0..factors.len())
                    .map(|i| (exps[a][i] + exps[b][i]) % factors[i])
                    .collect();
                add[a * order + b] = index_of(&e);
            }
            let e: Vec<u64> = (0..factors.len())
                .map(|i| (factors[i] - exps[a][i]) % factors[i])
                .collect();
            neg[a] = index_of(&e);
        }
        let poly = irreducible_poly(p, f);
        let modpoly: Vec<u64> = poly[..f as usize].to_vec();
        let fu = f as usize;
        let mut xpow: Vec<Vec<u64>> = Vec::new();
        let mut cur = vec![0u64; fu];
        cur[0] = 1;
        for _ in 0..(2 * fu).max(2) - 1 {
            xpow.push(cur.clone());
            // multiply by x
            let top = cur[fu - 1];
            let mut next = vec![0u64; fu];
            for i in (1..fu).rev() {
                next[i] = cur[i - 1];
            }
            for i in 0..fu {
                next[i] = zpk.sub(next[i], zpk.mul(top, modpoly[i]));
            }
            cur = next;
        }
        let trace = (0..fu)
            .map(|i| (0..fu).fold(0, |acc, j| zpk.add(acc, xpow[i + j][j])))
            .collect();
        let n_p = group.len();
        Ok(RingHandle(Arc::new(RingData {
            spec,
            zpk,
            xpow,
            modpoly,
            factors,
            n_p,
            order,
            exps,
            add,
            neg,
            trace,
        })))
    }

    pub fn build(p: u64, m: u32, f: u32, group: &[u64]) -> Result<Self> {
        RingHandle::new(RingSpec::new(p, m, f, group.to_vec()))
    }

    pub fn spec(&self) -> &RingSpec {
        &self.0.spec
    }

    pub fn p(&self) -> u64 {
        self.0.spec.p
    }

    pub fn m(&self) -> u32 {
        self.0.spec.m
    }

    pub fn f(&self) -> u32 {
        self.0.spec.f
    }

    pub fn zpk(&self) -> Zpk {
        self.0.zpk
    }

    /// Rank of the ring as a free `Z/p^m`-module.
    pub fn dim(&self) -> usize {
        self.0.spec.f as usize * self.0.order
    }

    /// `log_p |R|`.
    pub fn log_card(&self) -> u32 {
        self.dim() as u32 * self.m()
    }

    pub fn group_order(&self) -> usize {
        self.0.order
    }

    pub fn p_group_order(&self) -> usize {
        self.0.spec.group.iter().product::<u64>() as usize
    }

    pub fn aux_order(&self) -> usize {
        self.0.spec.aux.iter().product::<u64>() as usize
    }

    pub fn has_aux(&self) -> bool {
        !self.0.spec.aux.is_empty()
    }

    /// Invariant factors of the whole group, p-part first.
    pub fn factors(&self) -> &[u64] {
        &self.0.factors
    }

    /// The defining polynomial of the residue extension, low coefficients
    /// first, monic leading term omitted.
    pub fn modulus_poly(&self) -> &[u64] {
        &self.0.modpoly
    }

    pub fn group_exps(&self, g: usize) -> &[u64] {
        &self.0.exps[g]
    }

    pub fn group_index(&self, e: &[u64]) -> usize {
        assert_eq!(e.len(), self.0.factors.len());
        let mut idx = 0u64;
        for (i, &d) in self.0.factors.iter().enumerate() {
            idx = idx * d + e[i] % d;
        }
        idx as usize
    }

    pub fn group_mul(&self, a: usize, b: usize) -> usize {
        self.0.add[a * self.0.order + b]
    }

    pub fn group_inv(&self, a: usize) -> usize {
        self.0.neg[a]
    }

    pub fn group_pow(&self, a: usize, k: u64) -> usize {
        let e: Vec<u64> = self.0.exps[a].iter().map(|&x| x * k).collect();
        self.group_index(&e)
    }

    /// Index of the `i`-th standard generator of the group.
    pub fn group_generator(&self, i: usize) -> usize {
        let mut e = vec![0u64; self.0.factors.len()];
        e[i] = 1;
        self.group_index(&e)
    }

    /// Order of a group element.
    pub fn element_order(&self, a: usize) -> u64 {
        let mut ord = 1u64;
        for (i, &d) in self.0.factors.iter().enumerate() {
            let e = self.0.exps[a][i];
            let o = d / gcd(d, e);
            ord = ord / gcd(ord, o) * o;
        }
        ord
    }

    pub fn idx(&self, ext: usize, g: usize) -> usize {
        ext * self.0.order + g
    }

    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.dim()]
    }

    pub fn one(&self) -> Vec<u64> {
        self.scalar(1)
    }

    pub fn scalar(&self, a: u64) -> Vec<u64> {
        let mut v = self.zero();
        v[0] = self.0.zpk.reduce(a);
        v
    }

    pub fn basis(&self, k: usize) -> Vec<u64> {
        let mut v = self.zero();
        v[k] = 1;
        v
    }

    pub fn group_elem(&self, g: usize) -> Vec<u64> {
        let mut v = self.zero();
        v[g] = 1;
        v
    }

    /// Embeds an element of `GR(p^m, f)` (length `f`) at the identity.
    pub fn from_ext(&self, a: &[u64]) -> Vec<u64> {
        let mut v = self.zero();
        for (e, &c) in a.iter().enumerate() {
            v[self.idx(e, 0)] = self.0.zpk.reduce(c);
        }
        v
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let z = self.0.zpk;
        a.iter().zip(b).map(|(&x, &y)| z.add(x, y)).collect()
    }

    pub fn sub(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let z = self.0.zpk;
        a.iter().zip(b).map(|(&x, &y)| z.sub(x, y)).collect()
    }

    pub fn neg(&self, a: &[u64]) -> Vec<u64> {
        let z = self.0.zpk;
        a.iter().map(|&x| z.neg(x)).collect()
    }

    /// Multiplies by an element of `Z/p^m`.
    pub fn scale(&self, t: u64, a: &[u64]) -> Vec<u64> {
        let z = self.0.zpk;
        a.iter().map(|&x| z.mul(t, x)).collect()
    }

    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&x| x == 0)
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let d = &*self.0;
        let z = d.zpk;
        let n = d.order;
        let fu = d.spec.f as usize;
        let mut tmp = vec![0u64; (2 * fu - 1) * n];
        for (ia, &ca) in a.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            let (ea, ga) = (ia / n, ia % n);
            for (ib, &cb) in b.iter().enumerate() {
                if cb == 0 {
                    continue;
                }
                let (eb, gb) = (ib / n, ib % n);
                let slot = (ea + eb) * n + d.add[ga * n + gb];
                tmp[slot] = z.add(tmp[slot], z.mul(ca, cb));
            }
        }
        if fu == 1 {
            return tmp;
        }
        let mut out = vec![0u64; fu * n];
        for t in 0..2 * fu - 1 {
            for g in 0..n {
                let c = tmp[t * n + g];
                if c == 0 {
                    continue;
                }
                for (e, &xe) in d.xpow[t].iter().enumerate() {
                    if xe != 0 {
                        let slot = e * n + g;
                        out[slot] = z.add(out[slot], z.mul(c, xe));
                    }
                }
            }
        }
        out
    }

    pub fn pow(&self, a: &[u64], mut e: u64) -> Vec<u64> {
        let mut r = self.one();
        let mut b = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        r
    }

    /// Rows `x * b_k` for every basis element `b_k`: the `Z/p^m`-matrix of
    /// multiplication by `x`.
    pub fn mult_rows(&self, x: &[u64]) -> Vec<Vec<u64>> {
        (0..self.dim()).map(|k| self.mul(&self.basis(k), x)).collect()
    }

    /// The ideal `R x` as a `Z/p^m`-submodule.
    pub fn principal_span(&self, x: &[u64]) -> Howell {
        Howell::new(self.zpk(), self.dim(), self.mult_rows(x))
    }

    /// Image under the augmentation `R -> GR(p^m, f)`, length `f`.
    pub fn augmentation(&self, a: &[u64]) -> Vec<u64> {
        let z = self.0.zpk;
        let n = self.0.order;
        (0..self.f() as usize)
            .map(|e| (0..n).fold(0, |acc, g| z.add(acc, a[e * n + g])))
            .collect()
    }

    /// True when the image in the residue field `F_{p^f}` is nonzero.
    ///
    /// Valid because the group ring of a p-group over a Galois ring is local;
    /// with an auxiliary prime-to-p part the multiplication map is tested instead.
    pub fn is_unit(&self, a: &[u64]) -> bool {
        if self.has_aux() {
            return self.inverse(a).is_some();
        }
        self.augmentation(a).iter().any(|&c| c % self.p() != 0)
    }

    pub fn inverse(&self, a: &[u64]) -> Option<Vec<u64>> {
        if !self.has_aux() && !self.is_unit(a) {
            return None;
        }
        let rows = self.mult_rows(a);
        let coeffs = howell::solve(self.zpk(), &rows, &self.one())?;
        Some(coeffs)
    }

    /// `sum_{g in G} g` over the whole group.
    pub fn norm_element(&self) -> Vec<u64> {
        let mut v = self.zero();
        for g in 0..self.0.order {
            v[g] = 1;
        }
        v
    }

    /// `sum_{h in H} h` for the cyclic subgroup generated by `g`.
    pub fn subgroup_norm(&self, g: usize) -> Vec<u64> {
        let mut v = self.zero();
        let mut cur = 0usize;
        loop {
            v[cur] = 1;
            cur = self.group_mul(cur, g);
            if cur == 0 {
                break;
            }
        }
        v
    }

    /// The involution induced by `g -> g^{-1}`.
    pub fn involution(&self, a: &[u64]) -> Vec<u64> {
        let n = self.0.order;
        let mut v = self.zero();
        for (i, &c) in a.iter().enumerate() {
            if c != 0 {
                let (e, g) = (i / n, i % n);
                v[e * n + self.0.neg[g]] = c;
            }
        }
        v
    }

    /// `tau(a)`: trace down to `Z/p^m` of the coefficient of the identity.
    pub fn trace(&self, a: &[u64]) -> u64 {
        let z = self.0.zpk;
        let n = self.0.order;
        (0..self.f() as usize).fold(0, |acc, e| z.add(acc, z.mul(a[e * n], self.0.trace[e])))
    }

    /// Same ring at level `j <= m`.
    pub fn at_level(&self, j: u32) -> RingHandle {
        assert!(j >= 1 && j <= self.m());
        if j == self.m() {
            return self.clone();
        }
        let mut spec = self.0.spec.clone();
        spec.m = j;
        RingHandle::new(spec).expect("smaller level of a valid ring")
    }

    /// Same group and residue degree at any level.
    pub fn with_level(&self, j: u32) -> Result<RingHandle> {
        let mut spec = self.0.spec.clone();
        spec.m = j;
        RingHandle::new(spec)
    }

    pub fn reduce_to_level(&self, a: &[u64], j: u32) -> Vec<u64> {
        a.iter().map(|&x| self.0.zpk.reduce_to(x, j)).collect()
    }

    /// The residue field `F_{p^f}` as a ring (level 1, trivial group).
    pub fn residue_field(&self) -> RingHandle {
        RingHandle::new(RingSpec::new(self.p(), 1, self.f(), Vec::new())).unwrap()
    }

    /// The coefficient ring `GR(p^m, f)` with trivial group.
    pub fn coefficient_ring(&self) -> RingHandle {
        RingHandle::new(RingSpec::new(self.p(), self.m(), self.f(), Vec::new())).unwrap()
    }

    /// Generators of the maximal ideal: `p` and `g_i - 1`. Assumes no
    /// auxiliary part.
    pub fn maximal_ideal_gens(&self) -> Vec<Vec<u64>> {
        let mut out = vec![self.scalar(self.p())];
        for i in 0..self.0.n_p {
            let mut v = self.group_elem(self.group_generator(i));
            v[0] = self.0.zpk.sub(v[0], 1);
            out.push(v);
        }
        out
    }

    /// Every element of the ring; only for tiny rings.
    pub fn elements(&self) -> Vec<Vec<u64>> {
        let q = self.zpk().modulus();
        let n = self.dim();
        let total = q.pow(n as u32);
        (0..total)
            .map(|code| (0..n).map(|i| (code / q.pow(i as u32)) % q).collect())
            .collect()
    }

    fn ext_pow(&self, a: &[u64], e: u64) -> Vec<u64> {
        let r = self.coefficient_ring();
        r.pow(a, e)
    }

    /// Teichmuller lift of a residue class: `a^(p^(f(m-1)))`.
    pub fn teichmuller(&self, a: &[u64]) -> Vec<u64> {
        let e = self.p().pow(self.f() * (self.m() - 1));
        self.ext_pow(a, e)
    }

    /// A root of unity of exact order `p^f - 1` in `GR(p^m, f)`.
    pub fn primitive_root(&self) -> Vec<u64> {
        let p = self.p();
        let fu = self.f() as usize;
        let q1 = p.pow(self.f()) - 1;
        let primes = prime_factors(q1);
        let k = RingHandle::new(RingSpec::new(p, 1, self.f(), Vec::new())).unwrap();
        let total = p.pow(self.f());
        for code in 1..total {
            let a: Vec<u64> = (0..fu).map(|i| (code / p.pow(i as u32)) % p).collect();
            let ok = primes.iter().all(|&l| k.pow(&a, q1 / l) != k.one());
            if ok {
                return self.teichmuller(&a);
            }
        }
        unreachable!("finite fields have primitive roots")
    }

    /// Characters of the auxiliary group, as exponent tuples `c` with
    /// `chi(delta_i) = exp(2 pi i c_i / e_i)`.
    pub fn aux_characters(&self) -> Vec<Vec<u64>> {
        let aux = &self.0.spec.aux;
        let total: u64 = aux.iter().product();
        (0..total)
            .map(|mut code| {
                let mut c = vec![0u64; aux.len()];
                for i in (0..aux.len()).rev() {
                    c[i] = code % aux[i];
                    code /= aux[i];
                }
                c
            })
            .collect()
    }

    pub fn aux_character_order(&self, chi: &[u64]) -> u64 {
        let aux = &self.0.spec.aux;
        let mut ord = 1u64;
        for (i, &e) in aux.iter().enumerate() {
            let o = e / gcd(e, chi[i] % e);
            ord = ord / gcd(ord, o) * o;
        }
        ord
    }

    /// Frobenius orbit `chi, chi^p, chi^(p^2), ...`.
    pub fn aux_galois_orbit(&self, chi: &[u64]) -> Vec<Vec<u64>> {
        let aux = &self.0.spec.aux;
        let mut out = vec![chi.to_vec()];
        loop {
            let last = out.last().unwrap();
            let next: Vec<u64> = last
                .iter()
                .zip(aux)
                .map(|(&c, &e)| (c * self.p()) % e)
                .collect();
            if next == out[0] {
                break;
            }
            out.push(next);
        }
        out
    }

    /// `e_chi = |Delta|^{-1} sum_delta chi(delta) delta^{-1}`.
    pub fn chi_idempotent(&self, chi: &[u64]) -> Result<Vec<u64>> {
        let aux = &self.0.spec.aux;
        if chi.len() != aux.len() {
            return Err(Error::Dimension(format!(
                "character has {} components, auxiliary group has {}",
                chi.len(),
                aux.len()
            )));
        }
        let ord = self.aux_character_order(chi);
        let q1 = self.p().pow(self.f()) - 1;
        if q1 % ord != 0 {
            let mut need = 1u32;
            let mut pk = self.p() % ord;
            while pk != 1 % ord {
                pk = pk * self.p() % ord;
                need += 1;
            }
            return Err(Error::CharacterOrder {
                order: ord,
                required_f: need,
            });
        }
        let z = self.zpk();
        let zeta = self.ext_pow(&self.primitive_root(), q1 / ord);
        let n_delta = self.aux_order() as u64;
        let inv = z.inv(n_delta % z.modulus()).expect("|Delta| prime to p");
        let mut out = self.zero();
        let np = self.0.n_p;
        for g in 0..self.0.order {
            let e = &self.0.exps[g];
            if e[..np].iter().any(|&x| x != 0) {
                continue;
            }
            // chi(delta) = zeta_ord^k
            let mut k = 0u64;
            for (i, &ei) in aux.iter().enumerate() {
                k = (k + e[np + i] * ((chi[i] % ei) * ord / ei)) % ord;
            }
            let val = self.ext_pow(&zeta, k);
            let gi = self.0.neg[g];
            for (ext, &c) in val.iter().enumerate() {
                let slot = self.idx(ext, gi);
                out[slot] = z.add(out[slot], z.mul(c, inv));
            }
        }
        Ok(out)
    }
}

/// An element together with its ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingElem {
    ring: RingHandle,
    coeffs: Vec<u64>,
}

impl RingElem {
    pub fn new(ring: &RingHandle, coeffs: Vec<u64>) -> Result<Self> {
        if coeffs.len() != ring.dim() {
            return Err(Error::Dimension(format!(
                "element has {} coefficients, ring needs {}",
                coeffs.len(),
                ring.dim()
            )));
        }
        let z = ring.zpk();
        let coeffs = coeffs.into_iter().map(|c| z.reduce(c)).collect();
        Ok(RingElem {
            ring: ring.clone(),
            coeffs,
        })
    }

    pub fn ring(&self) -> &RingHandle {
        &self.ring
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<u64> {
        self.coeffs
    }

    fn check(&self, other: &RingElem) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(format!(
                "{:?} vs {:?}",
                self.ring, other.ring
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &RingElem) -> Result<RingElem> {
        self.check(other)?;
        Ok(RingElem {
            ring: self.ring.clone(),
            coeffs: self.ring.add(&self.coeffs, &other.coeffs),
        })
    }

    pub fn mul(&self, other: &RingElem) -> Result<RingElem> {
        self.check(other)?;
        Ok(RingElem {
            ring: self.ring.clone(),
            coeffs: self.ring.mul(&self.coeffs, &other.coeffs),
        })
    }

    pub fn is_unit(&self) -> bool {
        self.ring.is_unit(&self.coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn build_rejects_bad_input() {
        assert!(RingHandle::build(4, 1, 1, &[]).is_err());
        assert!(RingHandle::build(2, 1, 1, &[]).is_err());
        assert!(RingHandle::build(3, 1, 1, &[6]).is_err());
        assert!(RingHandle::build(3, 1, 1, &[9, 3]).is_err());
    }

    #[test]
    fn cardinalities() {
        let r = RingHandle::build(3, 2, 1, &[]).unwrap();
        assert_eq!(r.log_card(), 2);
        let r = RingHandle::build(3, 2, 2, &[3]).unwrap();
        assert_eq!(r.log_card(), 12);
    }

    #[test]
    fn cube_of_augmentation_generator() {
        // (g-1)^3 = g^3 - 3g^2 + 3g - 1 = 3g - 3g^2 when g^3 = 1
        let r = RingHandle::build(3, 2, 1, &[3]).unwrap();
        let mut gm1 = r.group_elem(1);
        gm1[0] = r.zpk().sub(0, 1);
        let cube = r.pow(&gm1, 3);
        let expected = r.sub(&r.scale(3, &r.group_elem(1)), &r.scale(3, &r.group_elem(2)));
        assert_eq!(cube, expected);
    }

    #[test]
    fn residue_extension_is_a_field() {
        let r = RingHandle::build(3, 1, 2, &[]).unwrap();
        let nonzero: Vec<_> = r.elements().into_iter().filter(|x| !r.is_zero(x)).collect();
        assert_eq!(nonzero.len(), 8);
        for x in &nonzero {
            assert!(r.is_unit(x));
            let y = r.inverse(x).unwrap();
            assert_eq!(r.mul(x, &y), r.one());
        }
    }

    #[test]
    fn unit_test_matches_exhaustive_search() {
        for (p, m, f, g) in [(3u64, 1u32, 1u32, vec![3u64]), (3, 2, 1, vec![3]), (3, 1, 2, vec![3])] {
            let r = RingHandle::build(p, m, f, &g).unwrap();
            let elems = r.elements();
            for x in &elems {
                let has_inv = elems.iter().any(|y| r.mul(x, y) == r.one());
                assert_eq!(has_inv, r.is_unit(x), "{x:?}");
            }
        }
    }

    #[test]
    fn trace_of_identity_is_degree() {
        let r = RingHandle::build(5, 2, 3, &[]).unwrap();
        assert_eq!(r.trace(&r.one()), 3);
    }

    #[test]
    fn primitive_root_has_full_order() {
        let r = RingHandle::build(3, 2, 2, &[]).unwrap();
        let z = r.primitive_root();
        let zz = r.coefficient_ring();
        assert_eq!(zz.pow(&z, 8), zz.one());
        assert_ne!(zz.pow(&z, 4), zz.one());
    }

    #[test]
    fn trivial_character_idempotent_mod_nine() {
        let r = RingHandle::new(RingSpec {
            p: 3,
            m: 2,
            f: 1,
            group: vec![],
            aux: vec![2],
        })
        .unwrap();
        let e = r.chi_idempotent(&[0]).unwrap();
        assert_eq!(e, vec![5, 5]);
        assert_eq!(r.mul(&e, &e), e);
    }

    #[test]
    fn idempotents_are_complete_and_orthogonal() {
        let r = RingHandle::new(RingSpec {
            p: 3,
            m: 2,
            f: 2,
            group: vec![3],
            aux: vec![4],
        })
        .unwrap();
        let chars = r.aux_characters();
        let es: Vec<_> = chars.iter().map(|c| r.chi_idempotent(c).unwrap()).collect();
        let mut total = r.zero();
        for (i, e) in es.iter().enumerate() {
            assert_eq!(&r.mul(e, e), e);
            for e2 in &es[i + 1..] {
                assert!(r.is_zero(&r.mul(e, e2)));
            }
            total = r.add(&total, e);
        }
        assert_eq!(total, r.one());
        // Galois orbit sums have coefficients in Z/p^m
        for c in &chars {
            let orbit = r.aux_galois_orbit(c);
            let mut s = r.zero();
            for o in &orbit {
                s = r.add(&s, &r.chi_idempotent(o).unwrap());
            }
            let n = r.group_order();
            assert!(s[n..].iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn character_order_rejection_names_degree() {
        let r = RingHandle::new(RingSpec {
            p: 3,
            m: 1,
            f: 1,
            group: vec![],
            aux: vec![4],
        })
        .unwrap();
        match r.chi_idempotent(&[1]) {
            Err(Error::CharacterOrder { order, required_f }) => {
                assert_eq!((order, required_f), (4, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    fn ring_strategy() -> impl Strategy<Value = RingHandle> {
        prop_oneof![
            Just(RingHandle::build(3, 2, 1, &[3]).unwrap()),
            Just(RingHandle::build(5, 1, 2, &[5]).unwrap()),
            Just(RingHandle::build(3, 2, 2, &[3]).unwrap()),
            Just(RingHandle::build(3, 1, 1, &[3, 3]).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn ring_axioms(r in ring_strategy(), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let q = r.zpk().modulus();
            let mut rand_elem = || -> Vec<u64> { (0..r.dim()).map(|_| rng.gen_range(0..q)).collect() };
            let (a, b, c) = (rand_elem(), rand_elem(), rand_elem());
            prop_assert_eq!(r.mul(&r.mul(&a, &b), &c), r.mul(&a, &r.mul(&b, &c)));
            prop_assert_eq!(r.mul(&a, &r.add(&b, &c)), r.add(&r.mul(&a, &b), &r.mul(&a, &c)));
            prop_assert_eq!(r.mul(&a, &b), r.mul(&b, &a));
            prop_assert_eq!(r.mul(&a, &r.one()), a.clone());
            prop_assert_eq!(r.augmentation(&r.mul(&a, &b)), r.coefficient_ring().mul(&r.augmentation(&a), &r.augmentation(&b)));
            prop_assert_eq!(r.involution(&r.mul(&a, &b)), r.mul(&r.involution(&a), &r.involution(&b)));
            if r.is_unit(&a) {
                let inv = r.inverse(&a).unwrap();
                prop_assert_eq!(r.mul(&a, &inv), r.one());
            }
        }
    }
}

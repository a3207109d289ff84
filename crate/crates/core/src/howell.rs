//! Howell normal form for submodules of `(Z/p^k)^n`.
//!
//! `Z/p^k` is not a field, so plain row echelon form does not give unique
//! representatives or correct kernels. The Howell form adds, for every pivot
//! `p^v`, the annihilated multiple `p^(k-v) * row` back into the reduction; the
//! result spans every vector of the module that vanishes on a prefix of
//! columns using only rows that also vanish there. That property is what makes
//! the kernel and preimage constructions below exact.

use crate::zmod::Zpk;

/// A submodule of `(Z/p^k)^n` in Howell normal form.
///
/// Two values are equal exactly when they span the same submodule.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Howell {
    ctx: Zpk,
    ncols: usize,
    rows: Vec<Vec<u64>>,
}

fn leading(row: &[u64]) -> Option<usize> {
    row.iter().position(|&x| x != 0)
}

fn axpy(ctx: &Zpk, dst: &mut [u64], t: u64, src: &[u64], from: usize) {
    // dst -= t * src
    if t == 0 {
        return;
    }
    for j in from..dst.len() {
        if src[j] != 0 {
            dst[j] = ctx.sub(dst[j], ctx.mul(t, src[j]));
        }
    }
}

impl Howell {
    pub fn new<I>(ctx: Zpk, ncols: usize, gens: I) -> Self
    where
        I: IntoIterator<Item = Vec<u64>>,
    {
        let mut pending: Vec<Vec<u64>> = gens
            .into_iter()
            .map(|mut r| {
                assert_eq!(r.len(), ncols, "row length mismatch");
                for x in r.iter_mut() {
                    *x = ctx.reduce(*x);
                }
                r
            })
            .filter(|r| r.iter().any(|&x| x != 0))
            .collect();
        let mut result: Vec<Vec<u64>> = Vec::new();
        for c in 0..ncols {
            if pending.is_empty() {
                break;
            }
            let mut best: Option<(usize, u32)> = None;
            for (i, r) in pending.iter().enumerate() {
                if r[c] != 0 {
                    let v = ctx.val(r[c]);
                    if best.map_or(true, |(_, bv)| v < bv) {
                        best = Some((i, v));
                        if v == 0 {
                            break;
                        }
                    }
                }
            }
            let Some((bi, v)) = best else { continue };
            let mut piv = pending.swap_remove(bi);
            let (_, u) = ctx.split(piv[c]);
            let uinv = ctx.inv(u).expect("unit part");
            for x in piv[c..].iter_mut() {
                *x = ctx.mul(*x, uinv);
            }
            let pv = ctx.p_pow(v);
            for r in pending.iter_mut() {
                if r[c] != 0 {
                    let t = r[c] / pv;
                    axpy(&ctx, r, t, &piv, c);
                }
            }
            if v > 0 {
                let s = ctx.p_pow(ctx.k() - v);
                let extra: Vec<u64> = piv.iter().map(|&x| ctx.mul(x, s)).collect();
                if extra.iter().any(|&x| x != 0) {
                    pending.push(extra);
                }
            }
            pending.retain(|r| r.iter().any(|&x| x != 0));
            result.push(piv);
        }
        debug_assert!(pending.is_empty());
        // reduce entries above each pivot
        for i in 0..result.len() {
            let c = leading(&result[i]).unwrap();
            let pv = result[i][c];
            let (lo, hi) = result.split_at_mut(i);
            let piv = &hi[0];
            for r in lo.iter_mut() {
                if r[c] >= pv {
                    let t = r[c] / pv;
                    axpy(&ctx, r, t, piv, c);
                }
            }
        }
        Howell {
            ctx,
            ncols,
            rows: result,
        }
    }

    pub fn zero(ctx: Zpk, ncols: usize) -> Self {
        Howell {
            ctx,
            ncols,
            rows: Vec::new(),
        }
    }

    /// The whole ambient module.
    pub fn full(ctx: Zpk, ncols: usize) -> Self {
        let rows = (0..ncols)
            .map(|i| {
                let mut r = vec![0; ncols];
                r[i] = 1;
                r
            })
            .collect();
        Howell { ctx, ncols, rows }
    }

    pub fn ctx(&self) -> Zpk {
        self.ctx
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    /// Pivot column and pivot valuation of each row.
    pub fn pivots(&self) -> Vec<(usize, u32)> {
        self.rows
            .iter()
            .map(|r| {
                let c = leading(r).unwrap();
                (c, self.ctx.val(r[c]))
            })
            .collect()
    }

    /// `log_p` of the number of elements.
    pub fn log_card(&self) -> u32 {
        self.pivots().iter().map(|&(_, v)| self.ctx.k() - v).sum()
    }

    /// Canonical representative of `v` modulo the submodule.
    pub fn reduce(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.ncols);
        let mut x: Vec<u64> = v.iter().map(|&a| self.ctx.reduce(a)).collect();
        for r in &self.rows {
            let c = leading(r).unwrap();
            let pv = r[c];
            if x[c] >= pv {
                let t = x[c] / pv;
                axpy(&self.ctx, &mut x, t, r, c);
            }
        }
        x
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        assert_eq!(v.len(), self.ncols);
        let mut x: Vec<u64> = v.iter().map(|&a| self.ctx.reduce(a)).collect();
        for r in &self.rows {
            let c = leading(r).unwrap();
            if x[..c].iter().any(|&a| a != 0) {
                return false;
            }
            let pv = r[c];
            if x[c] % pv != 0 {
                return false;
            }
            let t = x[c] / pv;
            axpy(&self.ctx, &mut x, t, r, c);
        }
        x.iter().all(|&a| a == 0)
    }

    pub fn contains_all(&self, other: &Howell) -> bool {
        other.rows.iter().all(|r| self.contains(r))
    }

    pub fn sum(&self, other: &Howell) -> Howell {
        assert_eq!(self.ncols, other.ncols);
        Howell::new(
            self.ctx,
            self.ncols,
            self.rows.iter().chain(other.rows.iter()).cloned(),
        )
    }

    pub fn with_rows<I: IntoIterator<Item = Vec<u64>>>(&self, extra: I) -> Howell {
        Howell::new(
            self.ctx,
            self.ncols,
            self.rows.iter().cloned().chain(extra),
        )
    }

    /// Intersection, computed as the preimage of `other` under the inclusion of `self`.
    pub fn intersect(&self, other: &Howell) -> Howell {
        let coeffs = preimage(self.ctx, &self.rows, self.ncols, other);
        image(self.ctx, &self.rows, self.ncols, &coeffs)
    }

    /// Reduces the modulus to `p^j` (image under `Z/p^k -> Z/p^j`).
    pub fn reduce_modulus(&self, j: u32) -> Howell {
        let ctx = self.ctx.with_k(j);
        Howell::new(
            ctx,
            self.ncols,
            self.rows
                .iter()
                .map(|r| r.iter().map(|&x| self.ctx.reduce_to(x, j)).collect()),
        )
    }

    /// Enumerates every element; only sensible for tiny modules.
    pub fn elements(&self) -> Vec<Vec<u64>> {
        let mut out = vec![vec![0u64; self.ncols]];
        for (r, &(_, v)) in self.rows.iter().zip(self.pivots().iter()) {
            let count = self.ctx.p().pow(self.ctx.k() - v);
            let mut next = Vec::with_capacity(out.len() * count as usize);
            for base in &out {
                for t in 0..count {
                    let mut x = base.clone();
                    for (xi, &ri) in x.iter_mut().zip(r.iter()) {
                        *xi = self.ctx.add(*xi, self.ctx.mul(t, ri));
                    }
                    next.push(x);
                }
            }
            out = next;
        }
        out
    }
}

/// Kernel of the linear map `a -> sum_i a_i * images[i]` from `(Z/p^k)^s`.
pub fn kernel(ctx: Zpk, images: &[Vec<u64>], target_cols: usize) -> Howell {
    preimage(ctx, images, target_cols, &Howell::zero(ctx, target_cols))
}

/// `{ a : sum_i a_i * images[i] in target }`.
pub fn preimage(ctx: Zpk, images: &[Vec<u64>], target_cols: usize, target: &Howell) -> Howell {
    let s = images.len();
    let width = target_cols + s;
    let mut aug: Vec<Vec<u64>> = Vec::with_capacity(s + target.rows().len());
    for (i, img) in images.iter().enumerate() {
        assert_eq!(img.len(), target_cols);
        let mut row = Vec::with_capacity(width);
        row.extend_from_slice(img);
        row.extend(std::iter::repeat(0).take(s));
        row[target_cols + i] = 1;
        aug.push(row);
    }
    for t in target.rows() {
        let mut row = t.clone();
        row.extend(std::iter::repeat(0).take(s));
        aug.push(row);
    }
    let h = Howell::new(ctx, width, aug);
    let ker_rows = h
        .rows()
        .iter()
        .filter(|r| r[..target_cols].iter().all(|&x| x == 0))
        .map(|r| r[target_cols..].to_vec());
    Howell::new(ctx, s, ker_rows)
}

/// Image of `source` under `a -> sum_i a_i * images[i]`.
pub fn image(ctx: Zpk, images: &[Vec<u64>], target_cols: usize, source: &Howell) -> Howell {
    let rows = source.rows().iter().map(|a| apply(ctx, images, target_cols, a));
    Howell::new(ctx, target_cols, rows)
}

/// `sum_i a_i * images[i]`.
pub fn apply(ctx: Zpk, images: &[Vec<u64>], target_cols: usize, a: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; target_cols];
    for (ai, img) in a.iter().zip(images.iter()) {
        if *ai == 0 {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(img.iter()) {
            if x != 0 {
                *o = ctx.add(*o, ctx.mul(*ai, x));
            }
        }
    }
    out
}

/// Some `a` with `sum_i a_i * images[i] = target`, if one exists.
pub fn solve(ctx: Zpk, images: &[Vec<u64>], target: &[u64]) -> Option<Vec<u64>> {
    let n = target.len();
    let s = images.len();
    let rows = images.iter().enumerate().map(|(i, img)| {
        let mut row = img.clone();
        row.extend(std::iter::repeat(0).take(s));
        row[n + i] = 1;
        row
    });
    let h = Howell::new(ctx, n + s, rows);
    let mut v = target.to_vec();
    v.extend(std::iter::repeat(0).take(s));
    let red = h.reduce(&v);
    if red[..n].iter().any(|&x| x != 0) {
        return None;
    }
    Some(red[n..].iter().map(|&x| ctx.neg(x)).collect())
}

/// `{ y : y . x = 0 for all x in h }` under the standard dot product.
pub fn annihilator(h: &Howell) -> Howell {
    let n = h.ncols();
    let images: Vec<Vec<u64>> = (0..n)
        .map(|i| h.rows().iter().map(|r| r[i]).collect())
        .collect();
    kernel(h.ctx(), &images, h.rows().len())
}

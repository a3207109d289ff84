//! Selmer structures on synthetic instances.
//!
//! An instance fixes a free global module `H = R^h` (all classes, no local
//! conditions), core places `v` with free local modules `L_v = R^l` and
//! condition submodules `F_v`, and auxiliary primes `q` with
//! `L_q = R e_f + R e_tr` and `F_q = R e_f`. Each place carries a localization
//! matrix `H -> L_v` and a perfect pairing `L_v x L_v^dual -> Z/p^m`,
//! `<x, y> = tau(x^T P iota(y))`. The dual global module is the orthogonal
//! complement of the image of `H` in `sum_v L_v`, so the five-term duality
//! sequence holds on the nose and is checked against the supplied generators.
//!
//! Everything is available at each level `j <= m` by reduction, and at the
//! residual representation (coefficients in the residue field, group
//! augmented away).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::howell::{self, Howell};
use crate::module::{present_subquotient, Ambient, FPModule, Presented};
use crate::ring::RingHandle;

pub type Matrix = Vec<Vec<Vec<u64>>>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorePlace {
    pub label: String,
    pub rank: usize,
    /// `rank x h` localization matrix.
    pub loc: Matrix,
    /// `rank x rank` pairing matrix.
    pub pairing: Matrix,
    /// `dim H^0(K_v, T-bar^dual(1))`, used for the (H5) test.
    #[serde(default)]
    pub h0_residual_dual: u64,
    /// Declared `rank H^0(K_v, T^*(1))` for the core-rank formula.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_h0_rank: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxPrime {
    pub label: String,
    /// Two rows: finite coordinate, then transverse coordinate.
    pub loc: Matrix,
    /// `phi^fs(e_f) = u e_tr`.
    pub phi_fs: Vec<u64>,
    pub pairing: Matrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    pub tag: String,
    /// Generators of `F_v` for each core place.
    pub conditions: Vec<Vec<Vec<Vec<u64>>>>,
    /// Generators of the residual condition for each core place.
    pub residual_conditions: Vec<Vec<Vec<Vec<u64>>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualData {
    pub core_loc: Vec<Matrix>,
    pub aux_loc: Vec<Matrix>,
    pub core_pairing: Vec<Matrix>,
    pub aux_pairing: Vec<Matrix>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisFlags {
    pub h0: bool,
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
    pub h4: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelmerData {
    pub ring: RingHandle,
    pub global_rank: usize,
    pub core: Vec<CorePlace>,
    pub aux: Vec<AuxPrime>,
    pub structures: Vec<Structure>,
    /// Generators of the dual global module inside `sum_v L_v^dual`, flattened.
    pub dual_global: Vec<Vec<u64>>,
    pub residual: ResidualData,
    #[serde(default)]
    pub flags: HypothesisFlags,
}

/// One place of a view: localization matrix and `Z`-Gram matrix of the pairing.
#[derive(Clone, Debug)]
pub struct PlaceView {
    pub label: String,
    pub rank: usize,
    pub loc: Matrix,
    pub pairing: Matrix,
    gram: Vec<Vec<u64>>,
}

/// The instance at one coefficient level (or at the residual representation).
#[derive(Clone, Debug)]
pub struct View {
    pub ring: RingHandle,
    pub h: usize,
    pub places: Vec<PlaceView>,
    pub ncore: usize,
    offsets: Vec<usize>,
}

fn gram(ring: &RingHandle, pairing: &Matrix) -> Vec<Vec<u64>> {
    let d = ring.dim();
    let l = pairing.len();
    let z = ring.zpk();
    let mut g = vec![vec![0u64; l * d]; l * d];
    for i in 0..l {
        for k in 0..d {
            let bk = ring.basis(k);
            for i2 in 0..l {
                let t = ring.mul(&bk, &pairing[i][i2]);
                for k2 in 0..d {
                    let v = ring.mul(&t, &ring.involution(&ring.basis(k2)));
                    g[i * d + k][i2 * d + k2] = z.reduce(ring.trace(&v));
                }
            }
        }
    }
    g
}

impl View {
    pub fn new(ring: &RingHandle, h: usize, places: Vec<(String, Matrix, Matrix)>, ncore: usize) -> Self {
        let mut offsets = Vec::new();
        let mut off = 0;
        let places: Vec<PlaceView> = places
            .into_iter()
            .map(|(label, loc, pairing)| {
                let rank = loc.len();
                offsets.push(off);
                off += rank * ring.dim();
                let gram = gram(ring, &pairing);
                PlaceView {
                    label,
                    rank,
                    loc,
                    pairing,
                    gram,
                }
            })
            .collect();
        offsets.push(off);
        View {
            ring: ring.clone(),
            h,
            places,
            ncore,
            offsets,
        }
    }

    pub fn local_width(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn global_width(&self) -> usize {
        self.h * self.ring.dim()
    }

    pub fn place_range(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    /// Localization of `x in R^h` at place `v`.
    pub fn localize(&self, v: usize, x: &[u64]) -> Vec<u64> {
        let ring = &self.ring;
        let d = ring.dim();
        let pl = &self.places[v];
        let mut out = vec![0u64; pl.rank * d];
        for i in 0..pl.rank {
            let mut acc = ring.zero();
            for j in 0..self.h {
                acc = ring.add(&acc, &ring.mul(&pl.loc[i][j], &x[j * d..(j + 1) * d]));
            }
            out[i * d..(i + 1) * d].copy_from_slice(&acc);
        }
        out
    }

    /// Images of the `Z`-basis of `R^h` in `sum_v L_v`.
    pub fn loc_images(&self) -> Vec<Vec<u64>> {
        let w = self.global_width();
        (0..w)
            .map(|k| {
                let mut e = vec![0u64; w];
                e[k] = 1;
                (0..self.places.len()).flat_map(|v| self.localize(v, &e)).collect()
            })
            .collect()
    }

    /// `sum_v F_v` inside `sum_v L_v`.
    fn direct_sum(&self, conds: &[Howell]) -> Howell {
        let w = self.local_width();
        let mut rows = Vec::new();
        for (v, c) in conds.iter().enumerate() {
            let r = self.place_range(v);
            for row in c.rows() {
                let mut full = vec![0u64; w];
                full[r.clone()].copy_from_slice(row);
                rows.push(full);
            }
        }
        Howell::new(self.ring.zpk(), w, rows)
    }

    pub fn full(&self, v: usize) -> Howell {
        Howell::full(self.ring.zpk(), self.places[v].rank * self.ring.dim())
    }

    pub fn zero(&self, v: usize) -> Howell {
        Howell::zero(self.ring.zpk(), self.places[v].rank * self.ring.dim())
    }

    /// `R`-span of condition generators at place `v`.
    pub fn condition_from_gens(&self, v: usize, gens: &[Vec<Vec<u64>>]) -> Howell {
        let amb = Ambient::standard(&self.ring, self.places[v].rank);
        let flat: Vec<Vec<u64>> = gens.iter().map(|g| crate::module::join_blocks(g)).collect();
        amb.r_span(flat.iter())
    }

    /// `H^1_F = { x : loc_v(x) in F_v for all v }` as a submodule of `R^h`.
    pub fn selmer(&self, conds: &[Howell]) -> Howell {
        howell::preimage(
            self.ring.zpk(),
            &self.loc_images(),
            self.local_width(),
            &self.direct_sum(conds),
        )
    }

    /// Orthogonal complement of `F` in `L_v^dual`.
    pub fn orthogonal(&self, v: usize, f: &Howell) -> Howell {
        let g = &self.places[v].gram;
        let n = g.len();
        let z = self.ring.zpk();
        // y -> (<f_r, y>)_r
        let images: Vec<Vec<u64>> = (0..n)
            .map(|col| {
                f.rows()
                    .iter()
                    .map(|fr| {
                        fr.iter()
                            .enumerate()
                            .fold(0u64, |acc, (i, &a)| z.add(acc, z.mul(a, g[i][col])))
                    })
                    .collect()
            })
            .collect();
        howell::kernel(z, &images, f.rows().len())
    }

    /// Orthogonal complement of the image of `H` in `sum_v L_v^dual`.
    pub fn dual_global(&self) -> Howell {
        let z = self.ring.zpk();
        let w = self.local_width();
        let locs = self.loc_images();
        // functional y -> (<loc(b), y>)_b
        let mut images = vec![vec![0u64; locs.len()]; w];
        for (v, pl) in self.places.iter().enumerate() {
            let r = self.place_range(v);
            for (bi, lb) in locs.iter().enumerate() {
                let seg = &lb[r.clone()];
                for col in 0..seg.len() {
                    let mut acc = 0u64;
                    for (i, &a) in seg.iter().enumerate() {
                        if a != 0 {
                            acc = z.add(acc, z.mul(a, pl.gram[i][col]));
                        }
                    }
                    images[r.start + col][bi] = acc;
                }
            }
        }
        howell::kernel(z, &images, locs.len())
    }

    /// Dual Selmer module for the dual conditions `dual_conds` (already
    /// orthogonal complements).
    pub fn dual_selmer(&self, dual_conds: &[Howell]) -> Howell {
        self.dual_global().intersect(&self.direct_sum(dual_conds))
    }

    pub fn present_global(&self, s: &Howell) -> Presented {
        let amb = Ambient::standard(&self.ring, self.h);
        present_subquotient(&amb, s, &Howell::zero(self.ring.zpk(), self.global_width()))
    }

    pub fn present_local(&self, s: &Howell) -> Presented {
        let total: usize = self.places.iter().map(|p| p.rank).sum();
        let amb = Ambient::standard(&self.ring, total);
        present_subquotient(&amb, s, &Howell::zero(self.ring.zpk(), self.local_width()))
    }

    /// `dim` over the residue field of `M / m M` for a submodule of a free ambient of rank `rank`.
    pub fn min_gens(&self, rank: usize, s: &Howell) -> usize {
        let amb = Ambient::standard(&self.ring, rank);
        amb.minimal_generators(s, &Howell::zero(self.ring.zpk(), rank * self.ring.dim()))
            .len()
    }

    /// `log_p` of the cokernel of `H -> sum_v L_v / F_v`.
    pub fn cokernel(&self, conds: &[Howell]) -> Presented {
        let sum = self.direct_sum(conds);
        let img = Howell::new(self.ring.zpk(), self.local_width(), self.loc_images());
        let total: usize = self.places.iter().map(|p| p.rank).sum();
        let amb = Ambient::standard(&self.ring, total);
        present_subquotient(
            &amb,
            &Howell::full(self.ring.zpk(), self.local_width()),
            &sum.sum(&img),
        )
    }
}

/// Which side of the duality a Selmer module lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Primal,
    Dual,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub checks: Vec<Check>,
}

/// A parsed instance with its level views.
#[derive(Clone, Debug)]
pub struct SelmerInstance {
    pub data: SelmerData,
    levels: Vec<View>,
    residual: View,
}

/// Reduction of a ring element to the residue field: augmentation, then mod p.
pub fn residue_map(ring: &RingHandle, x: &[u64]) -> Vec<u64> {
    ring.augmentation(x).iter().map(|&c| c % ring.p()).collect()
}

fn map_matrix<F: Fn(&[u64]) -> Vec<u64>>(m: &Matrix, f: F) -> Matrix {
    m.iter().map(|row| row.iter().map(|x| f(x)).collect()).collect()
}

pub fn label_of(aux: &[AuxPrime], n: &[usize]) -> String {
    if n.is_empty() {
        "1".to_string()
    } else {
        n.iter().map(|&i| aux[i].label.as_str()).collect::<Vec<_>>().join("*")
    }
}

/// Subsets of `0..k` of size at most `depth`, by size then lexicographically.
pub fn squarefree_ideals(k: usize, depth: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for s in 0..=depth.min(k) {
        out.extend(crate::wedge::subsets(k, s));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexCertificate {
    pub ideal: String,
    pub nu: usize,
    pub selmer_free: bool,
    pub selmer_rank: usize,
    pub dual_vanishes: bool,
    pub core_vertex: bool,
    /// Level-1 test: the strict residual dual Selmer module vanishes.
    pub residual_criterion: bool,
    pub rank_matches: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreRankReport {
    pub chi: i64,
    pub residual_selmer_dim: usize,
    pub residual_dual_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub declared_rank_sum: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula_holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceVerdict {
    pub place: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeReport {
    pub tag: String,
    pub depth: usize,
    pub torsion_free_quotients: bool,
    /// Core vertex found within depth, for levels `1..=m`.
    pub vertex_exists: Vec<bool>,
    pub lemma_injective: Vec<PlaceVerdict>,
    pub cartesian: bool,
    pub level_m_equivalence: bool,
    pub propagation: bool,
    pub flags: HypothesisFlags,
    pub h5: bool,
    pub counterexample: bool,
}

impl SelmerInstance {
    pub fn new(data: SelmerData) -> Result<Self> {
        let ring = &data.ring;
        if ring.has_aux() {
            return Err(Error::Input("Selmer instances need a p-group ring".into()));
        }
        let h = data.global_rank;
        let d = ring.dim();
        let check_matrix = |m: &Matrix, rows: usize, cols: usize, dim: usize, what: &str| -> Result<()> {
            if m.len() != rows || m.iter().any(|r| r.len() != cols || r.iter().any(|x| x.len() != dim)) {
                return Err(Error::Dimension(format!("{what} must be {rows} x {cols}")));
            }
            Ok(())
        };
        for c in &data.core {
            check_matrix(&c.loc, c.rank, h, d, &format!("localization at {}", c.label))?;
            check_matrix(&c.pairing, c.rank, c.rank, d, &format!("pairing at {}", c.label))?;
        }
        for q in &data.aux {
            check_matrix(&q.loc, 2, h, d, &format!("localization at {}", q.label))?;
            check_matrix(&q.pairing, 2, 2, d, &format!("pairing at {}", q.label))?;
            if q.phi_fs.len() != d {
                return Err(Error::Dimension(format!("phi_fs at {}", q.label)));
            }
        }
        if data.structures.is_empty() {
            return Err(Error::Input("at least one Selmer structure is required".into()));
        }
        let kk = ring.residue_field();
        let fd = kk.dim();
        for s in &data.structures {
            if s.conditions.len() != data.core.len() || s.residual_conditions.len() != data.core.len() {
                return Err(Error::Dimension(format!(
                    "structure {} must give a condition at every core place",
                    s.tag
                )));
            }
            for (v, c) in data.core.iter().enumerate() {
                for g in &s.conditions[v] {
                    if g.len() != c.rank || g.iter().any(|x| x.len() != d) {
                        return Err(Error::Dimension(format!("condition generator at {}", c.label)));
                    }
                }
                for g in &s.residual_conditions[v] {
                    if g.len() != c.rank || g.iter().any(|x| x.len() != fd) {
                        return Err(Error::Dimension(format!(
                            "residual condition generator at {}",
                            c.label
                        )));
                    }
                }
            }
        }
        let res = &data.residual;
        if res.core_loc.len() != data.core.len()
            || res.core_pairing.len() != data.core.len()
            || res.aux_loc.len() != data.aux.len()
            || res.aux_pairing.len() != data.aux.len()
        {
            return Err(Error::Dimension("residual data does not match the places".into()));
        }
        for (v, c) in data.core.iter().enumerate() {
            check_matrix(&res.core_loc[v], c.rank, h, fd, "residual localization")?;
            check_matrix(&res.core_pairing[v], c.rank, c.rank, fd, "residual pairing")?;
        }
        for i in 0..data.aux.len() {
            check_matrix(&res.aux_loc[i], 2, h, fd, "residual localization")?;
            check_matrix(&res.aux_pairing[i], 2, 2, fd, "residual pairing")?;
        }
        let total_local: usize = data.core.iter().map(|c| c.rank).sum::<usize>() + 2 * data.aux.len();
        if data.dual_global.iter().any(|v| v.len() != total_local * d) {
            return Err(Error::Dimension("dual global generators have the wrong length".into()));
        }
        let mut levels = Vec::new();
        for j in 1..=ring.m() {
            let rj = ring.at_level(j);
            let red = |m: &Matrix| map_matrix(m, |x| ring.reduce_to_level(x, j));
            let mut places = Vec::new();
            for c in &data.core {
                places.push((c.label.clone(), red(&c.loc), red(&c.pairing)));
            }
            for q in &data.aux {
                places.push((q.label.clone(), red(&q.loc), red(&q.pairing)));
            }
            levels.push(View::new(&rj, h, places, data.core.len()));
        }
        let mut places = Vec::new();
        for (v, c) in data.core.iter().enumerate() {
            places.push((c.label.clone(), res.core_loc[v].clone(), res.core_pairing[v].clone()));
        }
        for (i, q) in data.aux.iter().enumerate() {
            places.push((q.label.clone(), res.aux_loc[i].clone(), res.aux_pairing[i].clone()));
        }
        let residual = View::new(&kk, h, places, data.core.len());
        Ok(SelmerInstance {
            data,
            levels,
            residual,
        })
    }

    pub fn ring(&self) -> &RingHandle {
        &self.data.ring
    }

    pub fn m(&self) -> u32 {
        self.data.ring.m()
    }

    pub fn naux(&self) -> usize {
        self.data.aux.len()
    }

    pub fn ncore(&self) -> usize {
        self.data.core.len()
    }

    pub fn level(&self, j: u32) -> &View {
        &self.levels[j as usize - 1]
    }

    pub fn residual(&self) -> &View {
        &self.residual
    }

    pub fn structure(&self, tag: &str) -> Result<&Structure> {
        self.data
            .structures
            .iter()
            .find(|s| s.tag == tag)
            .ok_or_else(|| Error::Input(format!("no structure tagged {tag:?}")))
    }

    pub fn default_tag(&self) -> &str {
        &self.data.structures[0].tag
    }

    /// Conditions of a structure at level `j`, modified at auxiliary primes.
    pub fn conditions(&self, tag: &str, j: u32, relax: &[usize], strict: &[usize]) -> Result<Vec<Howell>> {
        let s = self.structure(tag)?;
        let view = self.level(j);
        let ring = self.ring();
        let mut out = Vec::new();
        for v in 0..self.ncore() {
            let gens: Vec<Vec<Vec<u64>>> = s.conditions[v]
                .iter()
                .map(|g| g.iter().map(|x| ring.reduce_to_level(x, j)).collect())
                .collect();
            out.push(view.condition_from_gens(v, &gens));
        }
        for i in 0..self.naux() {
            out.push(self.aux_condition(view, i, relax, strict));
        }
        Ok(out)
    }

    fn aux_condition(&self, view: &View, i: usize, relax: &[usize], strict: &[usize]) -> Howell {
        let v = self.ncore() + i;
        if relax.contains(&i) {
            view.full(v)
        } else if strict.contains(&i) {
            view.zero(v)
        } else {
            let r = &view.ring;
            view.condition_from_gens(v, &[vec![r.one(), r.zero()]])
        }
    }

    pub fn residual_conditions(&self, tag: &str, relax: &[usize], strict: &[usize]) -> Result<Vec<Howell>> {
        let s = self.structure(tag)?;
        let view = &self.residual;
        let mut out = Vec::new();
        for v in 0..self.ncore() {
            out.push(view.condition_from_gens(v, &s.residual_conditions[v]));
        }
        for i in 0..self.naux() {
            out.push(self.aux_condition(view, i, relax, strict));
        }
        Ok(out)
    }

    /// Dual conditions: orthogonal complements of the base structure, then
    /// relaxed or made strict at the given auxiliary primes.
    fn dualize_conditions(&self, view: &View, base: &[Howell], relax: &[usize], strict: &[usize]) -> Vec<Howell> {
        base.iter()
            .enumerate()
            .map(|(v, f)| {
                if v >= self.ncore() {
                    let i = v - self.ncore();
                    if relax.contains(&i) {
                        return view.full(v);
                    }
                    if strict.contains(&i) {
                        return view.zero(v);
                    }
                }
                view.orthogonal(v, f)
            })
            .collect()
    }

    /// Selmer module as a submodule (of `R^h` or of `sum L_v^dual`) at level `j`.
    pub fn selmer_submodule(&self, side: Side, tag: &str, relax: &[usize], strict: &[usize], j: u32) -> Result<Howell> {
        let view = self.level(j);
        Ok(match side {
            Side::Primal => view.selmer(&self.conditions(tag, j, relax, strict)?),
            Side::Dual => {
                let base = self.conditions(tag, j, &[], &[])?;
                view.dual_selmer(&self.dualize_conditions(view, &base, relax, strict))
            }
        })
    }

    pub fn selmer_module(&self, side: Side, tag: &str, relax: &[usize], strict: &[usize], j: u32) -> Result<Presented> {
        let s = self.selmer_submodule(side, tag, relax, strict, j)?;
        let view = self.level(j);
        Ok(match side {
            Side::Primal => view.present_global(&s),
            Side::Dual => view.present_local(&s),
        })
    }

    /// Residual Selmer and dual Selmer dimensions over the residue field.
    pub fn residual_dims(&self, tag: &str, relax: &[usize], strict: &[usize]) -> Result<(usize, usize)> {
        let view = &self.residual;
        let f = view.ring.f() as usize;
        let conds = self.residual_conditions(tag, relax, &[])?;
        let s = view.selmer(&conds);
        let base = self.residual_conditions(tag, &[], &[])?;
        let dual = view.dual_selmer(&self.dualize_conditions(view, &base, relax, strict));
        Ok((s.log_card() as usize / f, dual.log_card() as usize / f))
    }

    pub fn core_rank(&self, tag: &str) -> Result<CoreRankReport> {
        let (a, b) = self.residual_dims(tag, &[], &[])?;
        let chi = a as i64 - b as i64;
        let declared: Option<u64> = if self.data.core.iter().all(|c| c.declared_h0_rank.is_some()) {
            Some(self.data.core.iter().map(|c| c.declared_h0_rank.unwrap()).sum())
        } else {
            None
        };
        Ok(CoreRankReport {
            chi,
            residual_selmer_dim: a,
            residual_dual_dim: b,
            declared_rank_sum: declared,
            formula_holds: declared.map(|d| d as i64 == chi),
        })
    }

    /// Freeness and rank of a submodule of `R^h` at level `j`.
    fn free_rank(&self, j: u32, s: &Howell) -> (bool, usize) {
        let view = self.level(j);
        let r = view.min_gens(self.data.global_rank, s);
        let free = s.log_card() == r as u32 * view.ring.log_card();
        (free, r)
    }

    pub fn vertex_certificate(&self, tag: &str, n: &[usize], j: u32, chi: i64) -> Result<VertexCertificate> {
        let s = self.selmer_submodule(Side::Primal, tag, n, &[], j)?;
        let (free, rank) = self.free_rank(j, &s);
        let dual = self.selmer_submodule(Side::Dual, tag, &[], n, j)?;
        let dual_vanishes = dual.is_zero();
        let (_, rd) = self.residual_dims(tag, &[], n)?;
        let core_vertex = free && dual_vanishes;
        Ok(VertexCertificate {
            ideal: label_of(&self.data.aux, n),
            nu: n.len(),
            selmer_free: free,
            selmer_rank: rank,
            dual_vanishes,
            core_vertex,
            residual_criterion: rd == 0,
            rank_matches: !core_vertex || rank as i64 == chi + n.len() as i64,
        })
    }

    /// Every square-free `n` with `nu(n) <= depth`, with its certificate.
    pub fn core_vertex_search(&self, tag: &str, depth: usize, j: u32) -> Result<Vec<VertexCertificate>> {
        let chi = self.core_rank(tag)?.chi;
        squarefree_ideals(self.naux(), depth)
            .iter()
            .map(|n| self.vertex_certificate(tag, n, j, chi))
            .collect()
    }

    pub fn vertex_exists(&self, tag: &str, depth: usize, j: u32) -> Result<bool> {
        let chi = self.core_rank(tag)?.chi;
        for n in squarefree_ideals(self.naux(), depth) {
            if self.vertex_certificate(tag, &n, j, chi)?.core_vertex {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Injectivity of `L/F (T-bar) -> L/F (A_1)` at each core place, the map
    /// being induced by `x -> x * N`.
    pub fn cartesian_check(&self, tag: &str) -> Result<Vec<PlaceVerdict>> {
        let s = self.structure(tag)?;
        let v1 = self.level(1);
        let res = &self.residual;
        let r1 = &v1.ring;
        let kk = &res.ring;
        let z1 = r1.zpk();
        let n_elem = r1.norm_element();
        let mut out = Vec::new();
        for v in 0..self.ncore() {
            let l = self.data.core[v].rank;
            let gens1: Vec<Vec<Vec<u64>>> = s.conditions[v]
                .iter()
                .map(|g| g.iter().map(|x| self.ring().reduce_to_level(x, 1)).collect())
                .collect();
            let f1 = v1.condition_from_gens(v, &gens1);
            let fbar = res.condition_from_gens(v, &s.residual_conditions[v]);
            // images of the F_p-basis of L-bar under nu
            let images: Vec<Vec<u64>> = (0..l * kk.dim())
                .map(|idx| {
                    let (i, e) = (idx / kk.dim(), idx % kk.dim());
                    let mut ext = vec![0u64; kk.dim()];
                    ext[e] = 1;
                    let x = r1.mul(&r1.from_ext(&ext), &n_elem);
                    let mut full = vec![0u64; l * r1.dim()];
                    full[i * r1.dim()..(i + 1) * r1.dim()].copy_from_slice(&x);
                    full
                })
                .collect();
            let pre = howell::preimage(z1, &images, l * r1.dim(), &f1);
            let pre = Howell::new(kk.zpk(), l * kk.dim(), pre.rows().to_vec());
            out.push(PlaceVerdict {
                place: self.data.core[v].label.clone(),
                passed: fbar.contains_all(&pre),
            });
        }
        Ok(out)
    }

    /// `L_v / F_v` free over the coefficient ring at level `m`, at each core place.
    pub fn torsion_free_quotients(&self, tag: &str) -> Result<bool> {
        let j = self.m();
        let conds = self.conditions(tag, j, &[], &[])?;
        let view = self.level(j);
        let z = view.ring.zpk();
        for (v, f) in conds.iter().enumerate().take(self.ncore()) {
            let w = view.places[v].rank * view.ring.dim();
            let q_log = w as u32 * j - f.log_card();
            let p_full = Howell::new(z, w, (0..w).map(|i| {
                let mut e = vec![0u64; w];
                e[i] = z.p_pow(1);
                e
            }));
            let top = w as u32 * j - f.sum(&p_full).log_card();
            if q_log != j * top {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Injectivity of `L/F (A_1) -> L/F (A_m)` induced by `x -> p^(m-1) x`.
    pub fn level_injectivity(&self, tag: &str) -> Result<Vec<PlaceVerdict>> {
        let m = self.m();
        let cm = self.conditions(tag, m, &[], &[])?;
        let c1 = self.conditions(tag, 1, &[], &[])?;
        let view = self.level(m);
        let z = view.ring.zpk();
        let mut out = Vec::new();
        for v in 0..self.ncore() {
            let w = view.places[v].rank * view.ring.dim();
            let images: Vec<Vec<u64>> = (0..w)
                .map(|i| {
                    let mut e = vec![0u64; w];
                    e[i] = z.p_pow(m - 1);
                    e
                })
                .collect();
            let pre = howell::preimage(z, &images, w, &cm[v]).reduce_modulus(1);
            out.push(PlaceVerdict {
                place: self.data.core[v].label.clone(),
                passed: c1[v].contains_all(&pre),
            });
        }
        Ok(out)
    }

    /// (H5): the supplied `H^0(K_v, T-bar^dual(1))` vanish.
    pub fn h5(&self) -> bool {
        self.data.core.iter().all(|c| c.h0_residual_dual == 0)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let ring = self.ring();
        // perfect pairings at every level and residually
        let mut perfect = true;
        let mut detail = String::new();
        for view in self.levels.iter().rev().take(1).chain(std::iter::once(&self.residual)) {
            for (v, pl) in view.places.iter().enumerate() {
                let n = pl.gram.len();
                let ker = howell::kernel(view.ring.zpk(), &pl.gram, n);
                if !ker.is_zero() {
                    perfect = false;
                    detail = format!("degenerate pairing at {}", view.places[v].label);
                }
            }
        }
        checks.push(Check::new("pairing_perfect", perfect, detail));

        // auxiliary primes: rank-one finite and transverse summands, phi^fs a unit
        let mut aux_ok = true;
        let mut detail = String::new();
        for q in &self.data.aux {
            if !ring.is_unit(&q.phi_fs) {
                aux_ok = false;
                detail = format!("phi_fs at {} is not an isomorphism", q.label);
            }
        }
        checks.push(Check::new("aux_decomposition", aux_ok, detail));

        // residual data is the reduction of the level-m data
        let res = &self.data.residual;
        let rm = |m: &Matrix| map_matrix(m, |x| residue_map(ring, x));
        let mut comm = true;
        let mut detail = String::new();
        for (v, c) in self.data.core.iter().enumerate() {
            if rm(&c.loc) != res.core_loc[v] || rm(&c.pairing) != res.core_pairing[v] {
                comm = false;
                detail = format!("residual data at {} is not the reduction", c.label);
            }
        }
        for (i, q) in self.data.aux.iter().enumerate() {
            if rm(&q.loc) != res.aux_loc[i] || rm(&q.pairing) != res.aux_pairing[i] {
                comm = false;
                detail = format!("residual data at {} is not the reduction", q.label);
            }
        }
        // residual conditions propagate the level-one conditions: nu(F-bar) = N F(A_1)
        for s in &self.data.structures {
            for v in 0..self.ncore() {
                let fbar = self.residual.condition_from_gens(v, &s.residual_conditions[v]);
                let img: Vec<Vec<Vec<u64>>> = s.conditions[v]
                    .iter()
                    .map(|g| g.iter().map(|x| residue_map(ring, x)).collect())
                    .collect();
                let expect = self.residual.condition_from_gens(v, &img);
                if fbar != expect {
                    comm = false;
                    detail = format!(
                        "residual condition of {} at {} is not induced by the norm map",
                        s.tag, self.data.core[v].label
                    );
                }
            }
        }
        checks.push(Check::new("reduction_commutes", comm, detail));

        // supplied dual global module = orthogonal complement of the localization image
        let top = self.level(self.m());
        let dg = top.dual_global();
        let supplied = Howell::new(ring.zpk(), top.local_width(), self.data.dual_global.clone());
        let dg_ok = supplied == dg;
        checks.push(Check::new(
            "dual_global_matches",
            dg_ok,
            if dg_ok { String::new() } else { "supplied dual global module differs".into() },
        ));

        // middle exactness of H_F -> H -> sum L/F -> (dual Selmer)^dual for every
        // structure and every n within the auxiliary set
        let mut exact = true;
        let mut detail = String::new();
        for s in &self.data.structures {
            for n in squarefree_ideals(self.naux(), self.naux()) {
                let Ok(conds) = self.conditions(&s.tag, self.m(), &n, &[]) else {
                    exact = false;
                    continue;
                };
                let sel = top.selmer(&conds);
                let dual_conds = self.dualize_conditions(top, &self.conditions(&s.tag, self.m(), &[], &[]).unwrap(), &[], &n);
                let dsel = supplied.intersect(&{
                    let w = top.local_width();
                    let mut rows = Vec::new();
                    for (v, c) in dual_conds.iter().enumerate() {
                        let r = top.place_range(v);
                        for row in c.rows() {
                            let mut full = vec![0u64; w];
                            full[r.clone()].copy_from_slice(row);
                            rows.push(full);
                        }
                    }
                    Howell::new(ring.zpk(), w, rows)
                });
                let local_quot: u32 = conds
                    .iter()
                    .enumerate()
                    .map(|(v, c)| top.places[v].rank as u32 * top.ring.dim() as u32 * top.ring.m() - c.log_card())
                    .sum();
                let image = top.global_width() as u32 * top.ring.m() - sel.log_card();
                if image + dsel.log_card() != local_quot {
                    exact = false;
                    detail = format!(
                        "duality sequence not exact for {} at n = {}",
                        s.tag,
                        label_of(&self.data.aux, &n)
                    );
                }
            }
        }
        checks.push(Check::new("duality_exact", exact, detail));

        // (H5) consequence: can = ur = rel when all three are present
        let tags = ["can", "ur", "rel"];
        if self.h5() && tags.iter().all(|t| self.structure(t).is_ok()) {
            let j = self.m();
            let same = self.conditions("can", j, &[], &[]).ok() == self.conditions("ur", j, &[], &[]).ok()
                && self.conditions("can", j, &[], &[]).ok() == self.conditions("rel", j, &[], &[]).ok();
            checks.push(Check::new(
                "h5_structures_coincide",
                same,
                if same { String::new() } else { "can, ur and rel differ under (H5)".into() },
            ));
        }

        ValidationReport {
            ok: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    /// Conditions (i), (ii') and (iii) of the freeness theorem and the level
    /// propagation statement, for one structure.
    pub fn theorem_free_report(&self, tag: &str, depth: usize) -> Result<FreeReport> {
        let tf = self.torsion_free_quotients(tag)?;
        let vertex_exists: Vec<bool> = (1..=self.m())
            .map(|j| self.vertex_exists(tag, depth, j))
            .collect::<Result<_>>()?;
        let lemma = self.level_injectivity(tag)?;
        let cart = self.cartesian_check(tag)?.iter().all(|p| p.passed);
        let at_m = *vertex_exists.last().unwrap();
        let level_m_equivalence = at_m == cart;
        let all_levels = vertex_exists.iter().all(|&b| b);
        let propagation = vertex_exists[0] == cart && cart == all_levels;
        Ok(FreeReport {
            tag: tag.to_string(),
            depth,
            torsion_free_quotients: tf,
            vertex_exists,
            lemma_injective: lemma,
            cartesian: cart,
            level_m_equivalence,
            propagation,
            flags: self.data.flags.clone(),
            h5: self.h5(),
            counterexample: !(level_m_equivalence && propagation),
        })
    }

    /// Pontryagin dual of the dual Selmer module, presented.
    pub fn dual_selmer_dual(&self, tag: &str, j: u32) -> Result<FPModule> {
        let x = self.selmer_module(Side::Dual, tag, &[], &[], j)?;
        Ok(x.module.pontryagin_dual().module)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One place, identity localization, `F_v = L_v`.
    fn trivial_instance(ring: &RingHandle) -> SelmerData {
        let kk = ring.residue_field();
        SelmerData {
            ring: ring.clone(),
            global_rank: 1,
            core: vec![CorePlace {
                label: "v".into(),
                rank: 1,
                loc: vec![vec![ring.one()]],
                pairing: vec![vec![ring.one()]],
                h0_residual_dual: 0,
                declared_h0_rank: None,
            }],
            aux: vec![],
            structures: vec![Structure {
                tag: "can".into(),
                conditions: vec![vec![vec![ring.one()]]],
                residual_conditions: vec![vec![vec![kk.one()]]],
            }],
            dual_global: vec![],
            residual: ResidualData {
                core_loc: vec![vec![vec![kk.one()]]],
                aux_loc: vec![],
                core_pairing: vec![vec![vec![kk.one()]]],
                aux_pairing: vec![],
            },
            flags: HypothesisFlags::default(),
        }
    }

    #[test]
    fn trivial_instance_validates() {
        let r = RingHandle::build(3, 2, 1, &[3]).unwrap();
        let inst = SelmerInstance::new(trivial_instance(&r)).unwrap();
        let rep = inst.validate();
        assert!(rep.ok, "{rep:?}");
        let s = inst.selmer_module(Side::Primal, "can", &[], &[], 2).unwrap();
        assert!(s.module.is_free_of_rank(1));
        assert_eq!(inst.core_rank("can").unwrap().chi, 1);
        assert!(inst.cartesian_check("can").unwrap()[0].passed);
    }

    #[test]
    fn degenerate_pairing_fails() {
        let r = RingHandle::build(3, 2, 1, &[3]).unwrap();
        let mut d = trivial_instance(&r);
        d.core[0].pairing = vec![vec![r.scalar(3)]];
        let inst = SelmerInstance::new(d).unwrap();
        let rep = inst.validate();
        assert!(!rep.checks.iter().find(|c| c.name == "pairing_perfect").unwrap().passed);
    }

    #[test]
    fn half_condition_gives_rank_one() {
        // global R^2, one place, F = R + 0, localization identity
        let r = RingHandle::build(3, 1, 1, &[3]).unwrap();
        let kk = r.residue_field();
        let z = r.zero();
        let id = vec![vec![r.one(), z.clone()], vec![z.clone(), r.one()]];
        let kid = vec![vec![kk.one(), kk.zero()], vec![kk.zero(), kk.one()]];
        let mut d = trivial_instance(&r);
        d.global_rank = 2;
        d.core[0].rank = 2;
        d.core[0].loc = id.clone();
        d.core[0].pairing = id;
        d.structures[0].conditions = vec![vec![vec![r.one(), z.clone()]]];
        d.structures[0].residual_conditions = vec![vec![vec![kk.one(), kk.zero()]]];
        d.residual.core_loc = vec![kid.clone()];
        d.residual.core_pairing = vec![kid];
        let inst = SelmerInstance::new(d).unwrap();
        let s = inst.selmer_module(Side::Primal, "can", &[], &[], 1).unwrap();
        assert!(s.module.is_free_of_rank(1));
        // the localization is onto, so the dual Selmer module vanishes
        let x = inst.selmer_submodule(Side::Dual, "can", &[], &[], 1).unwrap();
        assert!(x.is_zero());
    }
}

//! Stark systems of rank `r` over the square-free products of auxiliary primes.
//!
//! For each `n`, `W_n = bigcap^{r + nu(n)} H^1_{F^n}` is realized inside
//! `wedge^{r + nu(n)} R^h` as the elements killed by contraction with every
//! functional vanishing on the Selmer module (valid because `R` is Frobenius).
//! The transition `W_{nq} -> W_n` is `(-1)^{pos(q, nq)}` times contraction with
//! `psi_q = phi_q^{-1} o (transverse coordinate of loc_q)`.
//!
//! Only the values at nodes of maximal depth are unknowns. Lower nodes are
//! read off along the parent obtained by adding the smallest missing prime;
//! the remaining edges and the membership at every node become linear
//! constraints, and the Stark module is their kernel.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::howell::{self, Howell};
use crate::ideal::{IdealCanon, IdealData};
use crate::module::{join_blocks, present_subquotient, split_blocks, Ambient, FPModule};
use crate::ring::RingHandle;
use crate::selmer::{label_of, squarefree_ideals, SelmerInstance, Side};
use crate::wedge;
use crate::zmod::binomial;

/// Values of a Stark system on every node up to the solver's depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarkSystem {
    pub rank: usize,
    pub depth: usize,
    pub level: u32,
    pub nodes: Vec<Vec<usize>>,
    /// Coordinates of `epsilon_n` on `subsets(h, rank + nu(n))`.
    pub values: Vec<Vec<Vec<u64>>>,
}

#[derive(Clone, Debug)]
pub struct StarkModule {
    pub rank: usize,
    pub depth: usize,
    pub level: u32,
    pub log_card: u32,
    /// Solution module in the flattened coordinates of the top nodes.
    pub kernel: Howell,
    pub presented: FPModule,
    pub free_rank_one: bool,
    pub generator: Option<StarkSystem>,
}

/// The linear data needed to write down Stark systems.
pub struct StarkSetup<'a> {
    inst: &'a SelmerInstance,
    ring: RingHandle,
    h: usize,
    rank: usize,
    depth: usize,
    level: u32,
    nodes: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    /// Functionals in `R^h` vanishing on `H^1_{F^n}`, per node.
    perp: Vec<Vec<Vec<Vec<u64>>>>,
    /// `psi_q` per auxiliary prime.
    psi: Vec<Vec<Vec<u64>>>,
}

impl<'a> StarkSetup<'a> {
    pub fn new(inst: &'a SelmerInstance, tag: &str, rank: usize, depth: usize, level: u32) -> Result<Self> {
        if level == 0 || level > inst.m() {
            return Err(Error::Input(format!("level {level} is outside 1..={}", inst.m())));
        }
        let depth = depth.min(inst.naux());
        let view = inst.level(level);
        let ring = view.ring.clone();
        let h = view.h;
        let nodes = squarefree_ideals(inst.naux(), depth);
        let index = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut perp = Vec::new();
        for n in &nodes {
            let s = inst.selmer_submodule(Side::Primal, tag, n, &[], level)?;
            perp.push(orthogonal_functionals(&ring, h, &s));
        }
        let mut psi = Vec::new();
        for (i, q) in inst.data.aux.iter().enumerate() {
            let u = inst.ring().reduce_to_level(&q.phi_fs, level);
            let uinv = ring
                .inverse(&u)
                .ok_or_else(|| Error::Hypothesis(format!("phi_fs at {} is not invertible", q.label)))?;
            let row = &view.places[inst.ncore() + i].loc[1];
            psi.push(row.iter().map(|x| ring.mul(&uinv, x)).collect());
        }
        Ok(StarkSetup {
            inst,
            ring,
            h,
            rank,
            depth,
            level,
            nodes,
            index,
            perp,
            psi,
        })
    }

    fn grade(&self, n: &[usize]) -> usize {
        self.rank + n.len()
    }

    fn top_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].len() == self.depth)
            .collect()
    }

    /// `Pi_{n, nq}` applied to a value at `nq`.
    pub fn transition(&self, nq: &[usize], q: usize, x: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let pos = nq.iter().position(|&a| a == q).expect("q divides nq");
        let c = wedge::contract(&self.ring, self.h, nq.len() + self.rank, &self.psi[q], x);
        if pos % 2 == 1 {
            c.iter().map(|v| self.ring.neg(v)).collect()
        } else {
            c
        }
    }

    fn parent(&self, n: &[usize]) -> (Vec<usize>, usize) {
        let q = (0..self.inst.naux()).find(|q| !n.contains(q)).unwrap();
        let (nq, _) = wedge::insert_sorted(n, q);
        (nq, q)
    }

    /// Values at every node from values at the top nodes.
    pub fn extend(&self, tops: &[Vec<Vec<u64>>]) -> Vec<Vec<Vec<u64>>> {
        let mut vals: Vec<Option<Vec<Vec<u64>>>> = vec![None; self.nodes.len()];
        for (t, &i) in self.top_nodes().iter().enumerate() {
            vals[i] = Some(tops[t].clone());
        }
        // nodes are sorted by size, so walk downwards
        for i in (0..self.nodes.len()).rev() {
            if vals[i].is_some() {
                continue;
            }
            let (nq, q) = self.parent(&self.nodes[i]);
            let pv = vals[self.index[&nq]].as_ref().unwrap();
            vals[i] = Some(self.transition(&nq, q, pv));
        }
        vals.into_iter().map(|v| v.unwrap()).collect()
    }

    /// All constraint values (membership, then non-canonical edges), flattened.
    fn constraints(&self, vals: &[Vec<Vec<u64>>]) -> Vec<u64> {
        let mut out = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let s = self.grade(n);
            if s == 0 {
                continue;
            }
            for psi in &self.perp[i] {
                out.extend(join_blocks(&wedge::contract(&self.ring, self.h, s, psi, &vals[i])));
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.len() == self.depth {
                continue;
            }
            let (_, canon) = self.parent(n);
            for q in 0..self.inst.naux() {
                if n.contains(&q) || q == canon {
                    continue;
                }
                let (nq, _) = wedge::insert_sorted(n, q);
                let Some(&j) = self.index.get(&nq) else { continue };
                let t = self.transition(&nq, q, &vals[j]);
                out.extend(
                    t.iter()
                        .zip(&vals[i])
                        .flat_map(|(a, b)| self.ring.sub(a, b)),
                );
            }
        }
        out
    }

    fn unknown_shape(&self) -> (usize, usize) {
        (self.top_nodes().len(), binomial(self.h, self.rank + self.depth))
    }

    fn unpack(&self, flat: &[u64]) -> Vec<Vec<Vec<u64>>> {
        let (_, c) = self.unknown_shape();
        let blocks = split_blocks(&self.ring, flat);
        blocks.chunks(c).map(|b| b.to_vec()).collect()
    }

    pub fn solve(&self) -> StarkModule {
        let ring = &self.ring;
        let d = ring.dim();
        let (t, c) = self.unknown_shape();
        let width = t * c * d;
        let mut images = Vec::with_capacity(width);
        for k in 0..width {
            let mut e = vec![0u64; width];
            e[k] = 1;
            let vals = self.extend(&self.unpack(&e));
            images.push(self.constraints(&vals));
        }
        let out_len = images.first().map(|v| v.len()).unwrap_or(0);
        let ker = howell::kernel(ring.zpk(), &images, out_len);
        let amb = Ambient::standard(ring, t * c);
        let pres = present_subquotient(&amb, &ker, &Howell::zero(ring.zpk(), width));
        let free_rank_one = pres.module.is_free_of_rank(1);
        let generator = if free_rank_one {
            let values = self.extend(&self.unpack(&pres.gens[0]));
            Some(StarkSystem {
                rank: self.rank,
                depth: self.depth,
                level: self.level,
                nodes: self.nodes.clone(),
                values,
            })
        } else {
            None
        };
        StarkModule {
            rank: self.rank,
            depth: self.depth,
            level: self.level,
            log_card: ker.log_card(),
            kernel: ker.clone(),
            presented: pres.module,
            free_rank_one,
            generator,
        }
    }

    /// Whether `sys` satisfies membership and every transition.
    pub fn is_stark_system(&self, sys: &StarkSystem) -> bool {
        if sys.nodes != self.nodes {
            return false;
        }
        let mut ok = self.constraints(&sys.values).iter().all(|&x| x == 0);
        for (i, n) in self.nodes.iter().enumerate() {
            if n.len() == self.depth {
                continue;
            }
            let (nq, q) = self.parent(n);
            ok &= self.transition(&nq, q, &sys.values[self.index[&nq]]) == sys.values[i];
        }
        ok
    }

    /// Flattened values at the top nodes, the coordinates of the solver's kernel.
    pub fn top_values(&self, sys: &StarkSystem) -> Vec<u64> {
        self.top_nodes()
            .iter()
            .flat_map(|&i| join_blocks(&sys.values[i]))
            .collect()
    }

    /// `x * epsilon`.
    pub fn scale(&self, x: &[u64], sys: &StarkSystem) -> StarkSystem {
        let mut out = sys.clone();
        for v in out.values.iter_mut() {
            for c in v.iter_mut() {
                *c = self.ring.mul(x, c);
            }
        }
        out
    }

    pub fn nodes(&self) -> &[Vec<usize>] {
        &self.nodes
    }

    pub fn perp(&self, node: usize) -> &[Vec<Vec<u64>>] {
        &self.perp[node]
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn ring(&self) -> &RingHandle {
        &self.ring
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

/// Minimal generators of `{ psi in R^h : psi(x) = 0 for x in S }`.
pub fn orthogonal_functionals(ring: &RingHandle, h: usize, s: &Howell) -> Vec<Vec<Vec<u64>>> {
    let d = ring.dim();
    let images: Vec<Vec<u64>> = (0..h * d)
        .map(|idx| {
            let (a, k) = (idx / d, idx % d);
            let bk = ring.basis(k);
            s.rows()
                .iter()
                .flat_map(|row| ring.mul(&bk, &row[a * d..(a + 1) * d]))
                .collect()
        })
        .collect();
    let ker = howell::kernel(ring.zpk(), &images, s.rows().len() * d);
    let amb = Ambient::standard(ring, h);
    amb.minimal_generators(&ker, &Howell::zero(ring.zpk(), h * d))
        .iter()
        .map(|v| split_blocks(ring, v))
        .collect()
}

/// `I_j`: the ideal generated by the coordinates of `epsilon_n` over `nu(n) = j`.
pub fn ij_ideals(ring: &RingHandle, sys: &StarkSystem) -> Vec<IdealCanon> {
    (0..=sys.depth)
        .map(|j| {
            let gens: Vec<Vec<u64>> = sys
                .nodes
                .iter()
                .zip(&sys.values)
                .filter(|(n, _)| n.len() == j)
                .flat_map(|(_, v)| v.iter().cloned())
                .collect();
            IdealCanon::from_gens(ring, gens.iter())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IjEntry {
    pub j: usize,
    pub ideal: IdealData,
    pub fitting: IdealData,
    pub equal: bool,
}

/// Core rank as a nonnegative integer.
pub fn stark_rank(inst: &SelmerInstance, tag: &str) -> Result<usize> {
    let chi = inst.core_rank(tag)?.chi;
    usize::try_from(chi).map_err(|_| Error::Hypothesis(format!("core rank {chi} is negative")))
}

pub fn stark_solve(inst: &SelmerInstance, tag: &str, depth: usize, level: u32) -> Result<StarkModule> {
    let r = stark_rank(inst, tag)?;
    Ok(StarkSetup::new(inst, tag, r, depth, level)?.solve())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FittingReport {
    pub ij: Vec<IjEntry>,
    /// `I_j contained in Fitt^j` for every `j`.
    pub contained: Vec<bool>,
    pub generates: bool,
    /// All equalities hold exactly when `epsilon` generates.
    pub biconditional: bool,
    /// `I_0 contained in I_1 contained in ...`
    pub increasing: bool,
}

/// Compares `I_j(epsilon)` with the Fitting ideals of the Pontryagin dual of
/// the dual Selmer module for `0 <= j <= jmax`.
pub fn fitting_report(
    inst: &SelmerInstance,
    tag: &str,
    setup: &StarkSetup,
    module: &StarkModule,
    sys: &StarkSystem,
    jmax: usize,
) -> Result<FittingReport> {
    if jmax > sys.depth {
        return Err(Error::Input(format!("j = {jmax} exceeds depth {}", sys.depth)));
    }
    if !setup.is_stark_system(sys) {
        return Err(Error::Hypothesis("values do not form a Stark system".into()));
    }
    let ring = setup.ring();
    let xdual = inst.dual_selmer_dual(tag, module.level)?;
    let ideals = ij_ideals(ring, sys);
    let mut ij = Vec::new();
    let mut contained = Vec::new();
    let mut increasing = true;
    for (j, ideal) in ideals.iter().enumerate().take(jmax + 1) {
        let fitt = xdual.fitting_ideal(j);
        contained.push(fitt.contains_ideal(ideal));
        ij.push(IjEntry {
            j,
            ideal: ideal.to_data(),
            fitting: fitt.to_data(),
            equal: *ideal == fitt,
        });
        if j > 0 {
            increasing &= ideal.contains_ideal(&ideals[j - 1]);
        }
    }
    let span = Ambient::standard(ring, module.kernel.ncols() / ring.dim())
        .r_span(std::iter::once(&setup.top_values(sys)));
    let generates = span == module.kernel;
    let all_equal = ij.iter().all(|e| e.equal);
    Ok(FittingReport {
        biconditional: all_equal == generates,
        ij,
        contained,
        generates,
        increasing,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarkReport {
    pub tag: String,
    pub rank: usize,
    pub depth: usize,
    pub level: u32,
    pub log_card: u32,
    pub free_rank_one: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<StarkSystem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitting: Option<FittingReport>,
}

/// Solves at level `m` and, when the module is free of rank one, compares
/// `I_j` of the generator with the Fitting ideals up to the depth.
pub fn stark_report(inst: &SelmerInstance, tag: &str, depth: usize) -> Result<StarkReport> {
    let r = stark_rank(inst, tag)?;
    let setup = StarkSetup::new(inst, tag, r, depth, inst.m())?;
    let sm = setup.solve();
    let fitting = match &sm.generator {
        Some(g) => Some(fitting_report(inst, tag, &setup, &sm, g, g.depth)?),
        None => None,
    };
    Ok(StarkReport {
        tag: tag.to_string(),
        rank: sm.rank,
        depth: sm.depth,
        level: sm.level,
        log_card: sm.log_card,
        free_rank_one: sm.free_rank_one,
        generator: sm.generator.clone(),
        fitting,
    })
}

/// Node label, e.g. `q1*q3`.
pub fn node_label(inst: &SelmerInstance, n: &[usize]) -> String {
    label_of(&inst.data.aux, n)
}

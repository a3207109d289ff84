//! Seeded synthetic instances.
//!
//! Selmer instances are built from a cokernel map `M = A D B` written in
//! adapted coordinates: `A`, `B` are constant and invertible modulo `p`,
//! `D` is diagonal with `defect` non-unit entries. Residually the
//! localization then has corank `defect`, so a core vertex needs at least that
//! many relaxed primes. Draws that miss the recipe's property are discarded
//! and redrawn from the same stream, so output depends only on the parameters.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::etnc::codescent::TowerData;
use crate::etnc::{all_orbits, bk_image_check, headroom_stable, EtncData, EtncInstance, ScaledElem, Verdict};
use crate::module::FPModule;
use crate::ring::RingHandle;
use crate::selmer::{
    residue_map, squarefree_ideals, AuxPrime, CorePlace, HypothesisFlags, Matrix, ResidualData,
    SelmerData, SelmerInstance, Structure, View,
};
use crate::wedge;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recipe {
    #[serde(rename = "cartesian")]
    Cartesian,
    #[serde(rename = "non-cartesian")]
    NonCartesian,
    #[serde(rename = "core-vertex-at-depth-k")]
    CoreVertexAtDepth,
    #[serde(rename = "etnc-basic")]
    EtncBasic,
    #[serde(rename = "tower")]
    Tower,
}

impl Recipe {
    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Input(format!("unknown recipe {s:?}")))
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Recipe::Cartesian => "cartesian",
            Recipe::NonCartesian => "non-cartesian",
            Recipe::CoreVertexAtDepth => "core-vertex-at-depth-k",
            Recipe::EtncBasic => "etnc-basic",
            Recipe::Tower => "tower",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub seed: u64,
    pub p: u64,
    pub m: u32,
    #[serde(default = "one_u32")]
    pub f: u32,
    #[serde(default)]
    pub group: Vec<u64>,
    #[serde(default = "one_usize")]
    pub core_places: usize,
    #[serde(default = "three")]
    pub aux_primes: usize,
    #[serde(default = "two")]
    pub depth: usize,
    pub recipe: Recipe,
    /// Core rank for Selmer recipes, module rank for eTNC recipes.
    #[serde(default = "one_usize")]
    pub rank: usize,
}

fn one_u32() -> u32 {
    1
}
fn one_usize() -> usize {
    1
}
fn two() -> usize {
    2
}
fn three() -> usize {
    3
}

pub const MAX_DEPTH: usize = 3;
const MAX_ATTEMPTS: usize = 400;

impl GeneratorParams {
    pub fn new(seed: u64, p: u64, m: u32, group: &[u64], recipe: Recipe) -> Self {
        GeneratorParams {
            seed,
            p,
            m,
            f: 1,
            group: group.to_vec(),
            core_places: 1,
            aux_primes: 3,
            depth: 2,
            recipe,
            rank: 1,
        }
    }

    pub fn check_bounds(&self) -> Result<()> {
        if self.p != 3 && self.p != 5 {
            return Err(Error::Bounds(format!("p = {} (allowed: 3, 5)", self.p)));
        }
        if self.m == 0 || self.m > 2 {
            return Err(Error::Bounds(format!("m = {} (allowed: 1, 2)", self.m)));
        }
        if self.f == 0 || self.f > 2 {
            return Err(Error::Bounds(format!("f = {} (allowed: 1, 2)", self.f)));
        }
        let order: u64 = self.group.iter().product();
        if order > 9 {
            return Err(Error::Bounds(format!("|G| = {order} exceeds 9")));
        }
        if self.depth > MAX_DEPTH {
            return Err(Error::Bounds(format!("depth {} exceeds {MAX_DEPTH}", self.depth)));
        }
        if self.core_places == 0 || self.core_places > 3 || self.aux_primes > 4 {
            return Err(Error::Bounds("place counts: 1..=3 core, 0..=4 auxiliary".into()));
        }
        if self.rank > 3 {
            return Err(Error::Bounds(format!("rank {} exceeds 3", self.rank)));
        }
        Ok(())
    }

    pub fn ring(&self) -> Result<RingHandle> {
        RingHandle::build(self.p, self.m, self.f, &self.group)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Random element of `Z/p^m`.
pub fn rand_scalar(rng: &mut ChaCha8Rng, ring: &RingHandle) -> u64 {
    rng.gen_range(0..ring.zpk().modulus())
}

/// Random element of the coefficient ring, embedded.
pub fn rand_constant(rng: &mut ChaCha8Rng, ring: &RingHandle) -> Vec<u64> {
    let ext: Vec<u64> = (0..ring.f()).map(|_| rand_scalar(rng, ring)).collect();
    ring.from_ext(&ext)
}

pub fn rand_constant_unit(rng: &mut ChaCha8Rng, ring: &RingHandle) -> Vec<u64> {
    loop {
        let x = rand_constant(rng, ring);
        if ring.is_unit(&x) {
            return x;
        }
    }
}

pub fn rand_element(rng: &mut ChaCha8Rng, ring: &RingHandle) -> Vec<u64> {
    (0..ring.dim()).map(|_| rand_scalar(rng, ring)).collect()
}

fn rand_constant_matrix(rng: &mut ChaCha8Rng, ring: &RingHandle, rows: usize, cols: usize) -> Matrix {
    (0..rows)
        .map(|_| (0..cols).map(|_| rand_constant(rng, ring)).collect())
        .collect()
}

pub fn rand_invertible(rng: &mut ChaCha8Rng, ring: &RingHandle, n: usize) -> Matrix {
    loop {
        let a = rand_constant_matrix(rng, ring, n, n);
        if ring.is_unit(&wedge::det(ring, &a)) {
            return a;
        }
    }
}

fn mat_mul(ring: &RingHandle, a: &Matrix, b: &Matrix) -> Matrix {
    let inner = b.len();
    let cols = b.first().map(|r| r.len()).unwrap_or(0);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    (0..inner).fold(ring.zero(), |acc, k| ring.add(&acc, &ring.mul(&row[k], &b[k][j])))
                })
                .collect()
        })
        .collect()
}

fn column(m: &Matrix, j: usize) -> Vec<Vec<u64>> {
    m.iter().map(|r| r[j].clone()).collect()
}

/// `g - 1` for the `i`-th generator of the group.
pub fn augmentation_generator(ring: &RingHandle, i: usize) -> Vec<u64> {
    let mut v = ring.group_elem(ring.group_generator(i));
    v[0] = ring.zpk().sub(v[0], 1);
    v
}

fn non_unit(rng: &mut ChaCha8Rng, ring: &RingHandle) -> Vec<u64> {
    let u = rand_constant_unit(rng, ring);
    let mut choices = vec![ring.scale(ring.p(), &u), ring.zero()];
    if ring.group_order() > 1 {
        let ngens = ring.factors().len();
        let x = augmentation_generator(ring, rng.gen_range(0..ngens));
        choices.push(ring.mul(&u, &x));
        choices.push(ring.add(&x, &ring.scalar(ring.p())));
        choices.push(ring.mul(&x, &x));
    }
    choices.choose(rng).unwrap().clone()
}

struct PlaceShape {
    rank: usize,
    aug_coord: bool,
    free_coords: usize,
}

impl PlaceShape {
    fn residual_quotient(&self) -> usize {
        self.rank - self.free_coords
    }
}

/// Builds a Selmer instance for a Selmer recipe.
pub fn generate_selmer(params: &GeneratorParams) -> Result<SelmerData> {
    params.check_bounds()?;
    let ring = params.ring()?;
    match params.recipe {
        Recipe::Cartesian | Recipe::NonCartesian | Recipe::CoreVertexAtDepth => {}
        _ => return Err(Error::Input(format!("{} is not a Selmer recipe", params.recipe.tag()))),
    }
    if params.recipe == Recipe::NonCartesian && ring.group_order() == 1 {
        return Err(Error::Input("a non-cartesian instance needs a nontrivial group".into()));
    }
    if params.depth > params.aux_primes {
        return Err(Error::Input("depth exceeds the number of auxiliary primes".into()));
    }
    let mut rng = params.rng();
    for _ in 0..MAX_ATTEMPTS {
        let data = draw_selmer(params, &ring, &mut rng)?;
        if accept(params, &data)? {
            return Ok(data);
        }
    }
    Err(Error::Hypothesis(format!(
        "no instance with the {} property after {MAX_ATTEMPTS} draws",
        params.recipe.tag()
    )))
}

fn accept(params: &GeneratorParams, data: &SelmerData) -> Result<bool> {
    let inst = SelmerInstance::new(data.clone())?;
    if !inst.validate().ok {
        return Ok(false);
    }
    let tag = inst.default_tag().to_string();
    let chi = inst.core_rank(&tag)?.chi;
    if chi != params.rank as i64 {
        return Ok(false);
    }
    // smallest nu(n) for which the residual criterion holds
    let mut first = None;
    for n in squarefree_ideals(inst.naux(), params.depth) {
        if inst.residual_dims(&tag, &[], &n)?.1 == 0 {
            first = Some(n.len());
            break;
        }
    }
    let cart = inst.cartesian_check(&tag)?.iter().all(|p| p.passed);
    Ok(match params.recipe {
        Recipe::Cartesian => cart && first.is_some(),
        Recipe::CoreVertexAtDepth => cart && first == Some(params.depth),
        Recipe::NonCartesian => !cart && first.is_some() && !inst.cartesian_check(&tag)?[0].passed,
        _ => false,
    })
}

fn draw_selmer(params: &GeneratorParams, ring: &RingHandle, rng: &mut ChaCha8Rng) -> Result<SelmerData> {
    let naux = params.aux_primes;
    let shapes: Vec<PlaceShape> = (0..params.core_places)
        .map(|v| {
            let rank = rng.gen_range(1..=2);
            let aug_coord = v == 0 && params.recipe == Recipe::NonCartesian;
            let lo = usize::from(aug_coord);
            let free_coords = rng.gen_range(lo..=rank) - lo;
            PlaceShape {
                rank,
                aug_coord,
                free_coords,
            }
        })
        .collect();
    let defect = match params.recipe {
        Recipe::CoreVertexAtDepth => params.depth,
        _ => rng.gen_range(0..=params.depth),
    };
    let quot: usize = shapes.iter().map(|s| s.residual_quotient()).sum();
    let t = quot + naux;
    let h = params.rank + t;

    // cokernel map in adapted coordinates
    let a = rand_invertible(rng, ring, t);
    let mut dvals: Vec<Vec<u64>> = (0..t).map(|_| rand_constant_unit(rng, ring)).collect();
    let mut slots: Vec<usize> = (0..t).collect();
    slots.shuffle(rng);
    for &s in slots.iter().take(defect.min(t)) {
        dvals[s] = non_unit(rng, ring);
    }
    let b = {
        let q = rand_invertible(rng, ring, h);
        q.into_iter().take(t).collect::<Matrix>()
    };
    let ad: Matrix = a
        .iter()
        .map(|row| row.iter().zip(&dvals).map(|(x, d)| ring.mul(x, d)).collect())
        .collect();
    let mrows = mat_mul(ring, &ad, &b);

    let mut core = Vec::new();
    let mut conditions = Vec::new();
    let mut next = 0usize;
    for (v, s) in shapes.iter().enumerate() {
        let u = rand_invertible(rng, ring, s.rank);
        // rows of Y: [aug coord], free coords, quotient coords
        let mut y: Matrix = Vec::new();
        let mut gens = Vec::new();
        let mut idx = 0;
        if s.aug_coord {
            y.push(mrows[next].clone());
            next += 1;
            for i in 0..ring.factors().len() {
                let x = augmentation_generator(ring, i);
                gens.push(column(&u, idx).iter().map(|c| ring.mul(c, &x)).collect::<Vec<_>>());
            }
            idx += 1;
        }
        for _ in 0..s.free_coords {
            y.push((0..h).map(|_| rand_constant(rng, ring)).collect());
            gens.push(column(&u, idx));
            idx += 1;
        }
        while idx < s.rank {
            y.push(mrows[next].clone());
            next += 1;
            idx += 1;
        }
        let loc = mat_mul(ring, &u, &y);
        let pairing = rand_invertible(rng, ring, s.rank);
        core.push(CorePlace {
            label: format!("v{}", v + 1),
            rank: s.rank,
            loc,
            pairing,
            h0_residual_dual: 0,
            declared_h0_rank: Some(if v == 0 { params.rank as u64 } else { 0 }),
        });
        conditions.push(gens);
    }
    let mut aux = Vec::new();
    for i in 0..naux {
        let frow: Vec<Vec<u64>> = (0..h).map(|_| rand_constant(rng, ring)).collect();
        let trow = mrows[next].clone();
        next += 1;
        let swap = vec![vec![ring.zero(), ring.one()], vec![ring.one(), ring.zero()]];
        aux.push(AuxPrime {
            label: format!("q{}", i + 1),
            loc: vec![frow, trow],
            phi_fs: rand_constant_unit(rng, ring),
            pairing: swap,
        });
    }
    assemble(ring, h, core, aux, vec![("can".to_string(), conditions)])
}

/// Fills in residual data and the dual global module.
pub fn assemble(
    ring: &RingHandle,
    h: usize,
    core: Vec<CorePlace>,
    aux: Vec<AuxPrime>,
    structures: Vec<(String, Vec<Vec<Vec<Vec<u64>>>>)>,
) -> Result<SelmerData> {
    let res = |m: &Matrix| -> Matrix {
        m.iter()
            .map(|r| r.iter().map(|x| residue_map(ring, x)).collect())
            .collect()
    };
    let residual = ResidualData {
        core_loc: core.iter().map(|c| res(&c.loc)).collect(),
        aux_loc: aux.iter().map(|q| res(&q.loc)).collect(),
        core_pairing: core.iter().map(|c| res(&c.pairing)).collect(),
        aux_pairing: aux.iter().map(|q| res(&q.pairing)).collect(),
    };
    let structures = structures
        .into_iter()
        .map(|(tag, conditions)| {
            let residual_conditions = conditions
                .iter()
                .map(|gens| {
                    gens.iter()
                        .map(|g| g.iter().map(|x| residue_map(ring, x)).collect())
                        .collect()
                })
                .collect();
            Structure {
                tag,
                conditions,
                residual_conditions,
            }
        })
        .collect();
    let mut places = Vec::new();
    for c in &core {
        places.push((c.label.clone(), c.loc.clone(), c.pairing.clone()));
    }
    for q in &aux {
        places.push((q.label.clone(), q.loc.clone(), q.pairing.clone()));
    }
    let view = View::new(ring, h, places, core.len());
    let dual_global = view.dual_global().rows().to_vec();
    Ok(SelmerData {
        ring: ring.clone(),
        global_rank: h,
        core,
        aux,
        structures,
        dual_global,
        residual,
        flags: HypothesisFlags {
            h0: true,
            h1: true,
            h2: true,
            h3: true,
            h4: true,
        },
    })
}


fn is_tnc_etnc(recipe: Recipe) -> Result<()> {
    if recipe != Recipe::EtncBasic {
        return Err(Error::Input(format!("{} is not an eTNC recipe", recipe.tag())));
    }
    Ok(())
}

/// Element nonzero at every character: a unit, `p u` or `(g - 1) + p u`.
fn nonvanishing(rng: &mut ChaCha8Rng, ring: &RingHandle) -> Vec<u64> {
    let u = rand_constant_unit(rng, ring);
    match rng.gen_range(0..3) {
        0 => u,
        1 => ring.scale(ring.p(), &u),
        _ if ring.group_order() > 1 => {
            let x = augmentation_generator(ring, rng.gen_range(0..ring.factors().len()));
            ring.add(&x, &ring.scale(ring.p(), &u))
        }
        _ => u,
    }
}

/// `U diag(d)` with `U` constant invertible and every `d_i` nonvanishing.
fn nonsingular_matrix(rng: &mut ChaCha8Rng, ring: &RingHandle, r: usize) -> Matrix {
    let u = rand_invertible(rng, ring, r);
    let d: Matrix = (0..r)
        .map(|i| {
            let mut row = vec![ring.zero(); r];
            row[i] = nonvanishing(rng, ring);
            row
        })
        .collect();
    mat_mul(ring, &u, &d)
}

fn scaled_rows(m: &Matrix, offsets: &[u32]) -> Vec<Vec<ScaledElem>> {
    m.iter()
        .zip(offsets)
        .map(|(row, &o)| {
            row.iter()
                .map(|x| ScaledElem {
                    coeffs: x.clone(),
                    offset: o,
                })
                .collect()
        })
        .collect()
}

/// Builds an eTNC instance whose identity can be certified at its headroom.
///
/// `H^2` is diagonal after a constant basis change. When every diagonal entry
/// is `p^k` times a unit, `L*` may be chosen so that `Xi` is the group ring.
pub fn generate_etnc(params: &GeneratorParams) -> Result<EtncData> {
    params.check_bounds()?;
    is_tnc_etnc(params.recipe)?;
    if params.f != 1 {
        return Err(Error::Input("eTNC instances use f = 1".into()));
    }
    let r = params.rank.max(1);
    let ring = params.ring()?;
    let p = params.p;
    let m = params.m;
    let a = crate::zmod::p_power_exponent(ring.group_order() as u64, p).unwrap_or(0);
    let orbits = all_orbits(&params.group);
    let max_w = (30.0 / (p as f64).log2()).floor() as u32;
    let mut rng = params.rng();
    for _ in 0..MAX_ATTEMPTS {
        let epsilon: Vec<_> = if rng.gen_bool(0.5) {
            orbits.clone()
        } else {
            let pick: Vec<_> = orbits.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
            if pick.is_empty() {
                continue;
            }
            pick
        };
        let b = match rng.gen_range(0..4) {
            0 => 0,
            3 if ring.group_order() <= 3 => 2,
            _ => 1,
        };
        let mut scalar_diag = true;
        let mut total_k = 0u32;
        let diag: Vec<Vec<u64>> = (0..b)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    let k = rng.gen_range(0..=m);
                    total_k += k;
                    let u = rand_constant_unit(&mut rng, &ring);
                    ring.scale(ring.zpk().p_pow(k), &u)
                } else {
                    scalar_diag = false;
                    non_unit(&mut rng, &ring)
                }
            })
            .collect();
        let change = rand_invertible(&mut rng, &ring, b);
        let rels: Vec<Vec<Vec<u64>>> = (0..b)
            .map(|j| (0..b).map(|i| ring.mul(&change[i][j], &diag[j])).collect())
            .collect();
        let h2 = FPModule::new(&ring, b, rels)?;
        let base = (m * b as u32).saturating_sub(m) + a + 2;
        let top = max_w.saturating_sub(m);
        // numerators are drawn once at the largest level and read at each headroom
        let ring_top = ring.with_level(m + top)?;
        let lambda = nonsingular_matrix(&mut rng, &ring_top, r);
        let basis = nonsingular_matrix(&mut rng, &ring_top, r);
        let lo: Vec<u32> = (0..r).map(|_| rng.gen_range(0..=1)).collect();
        let bo: Vec<u32> = (0..r).map(|_| rng.gen_range(0..=1)).collect();
        let u = rand_constant_unit(&mut rng, &ring_top);
        let leading_term = if scalar_diag && rng.gen_bool(0.7) {
            let d = ring_top.mul(&wedge::det(&ring_top, &lambda), &wedge::det(&ring_top, &basis));
            ScaledElem {
                coeffs: ring_top.mul(&u, &ring_top.scale(ring_top.zpk().p_pow(total_k), &d)),
                offset: lo.iter().chain(&bo).sum(),
            }
        } else {
            ScaledElem {
                coeffs: ring_top.mul(&u, &nonvanishing(&mut rng, &ring_top)),
                offset: rng.gen_range(0..=1),
            }
        };
        for h in base..=top {
            let w = m + h;
            let cut = |x: &ScaledElem| ScaledElem {
                coeffs: ring_top.reduce_to_level(&x.coeffs, w),
                offset: x.offset,
            };
            let cut_rows = |rows: Vec<Vec<ScaledElem>>| -> Vec<Vec<ScaledElem>> {
                rows.iter().map(|row| row.iter().map(cut).collect()).collect()
            };
            let data = EtncData {
                ring: ring.clone(),
                headroom: h,
                epsilon: epsilon.clone(),
                rank: r,
                h1_basis: cut_rows(scaled_rows(&basis, &bo)),
                h2: h2.to_data(),
                lambda: cut_rows(scaled_rows(&lambda, &lo)),
                leading_term: cut(&leading_term),
            };
            let Ok(inst) = EtncInstance::new(data.clone()) else {
                continue;
            };
            if bk_image_check(&inst).verdict == Verdict::Pass && headroom_stable(&inst).unwrap_or(false) {
                return Ok(data);
            }
        }
    }
    Err(Error::Hypothesis(format!(
        "no certifiable eTNC instance after {MAX_ATTEMPTS} draws"
    )))
}

/// Quotient `G -> G/H` with `|G/H| = |G|/p`, or trivial for cyclic `G` of order `p`.
fn tower_quotient(rng: &mut ChaCha8Rng, group: &[u64], p: u64) -> (Vec<u64>, Vec<Vec<u64>>) {
    match group {
        [n] if *n > p => (vec![n / p], vec![vec![1]]),
        [_] => (vec![], vec![vec![]]),
        _ => {
            // onto Z/p, mixing the generators
            let images: Vec<Vec<u64>> = loop {
                let imgs: Vec<Vec<u64>> = group.iter().map(|_| vec![rng.gen_range(0..p)]).collect();
                if imgs.iter().any(|v| v[0] != 0) {
                    break imgs;
                }
            };
            (vec![p], images)
        }
    }
}

/// `M = R^r + T` with `x = a e_1 ^ ... ^ e_r`, both rewritten in a random basis.
pub fn generate_tower(params: &GeneratorParams) -> Result<TowerData> {
    params.check_bounds()?;
    if params.recipe != Recipe::Tower {
        return Err(Error::Input(format!("{} is not a tower recipe", params.recipe.tag())));
    }
    let ring = params.ring()?;
    if ring.group_order() == 1 {
        return Err(Error::Input("a tower needs a nontrivial group".into()));
    }
    let mut rng = params.rng();
    let r = params.rank.max(1);
    let t = rng.gen_range(1..=2);
    let b = r + t;
    let mut rels = Vec::new();
    for j in 0..t {
        let mut col = vec![ring.zero(); b];
        col[r + j] = non_unit(&mut rng, &ring);
        rels.push(col);
    }
    let c = rand_invertible(&mut rng, &ring, b);
    let rels: Vec<Vec<Vec<u64>>> = rels
        .iter()
        .map(|col| (0..b).map(|i| (0..b).fold(ring.zero(), |acc, k| ring.add(&acc, &ring.mul(&c[i][k], &col[k])))).collect())
        .collect();
    let source = FPModule::new(&ring, b, rels)?;
    let a = if rng.gen_bool(0.5) { rand_constant_unit(&mut rng, &ring) } else { non_unit(&mut rng, &ring) };
    let cols: Vec<Vec<Vec<u64>>> = (0..r).map(|k| column(&c, k)).collect();
    let element = wedge::wedge_vectors(&ring, b, &cols)
        .iter()
        .map(|x| ring.mul(&a, x))
        .collect();
    let (quotient, projection) = tower_quotient(&mut rng, &params.group, params.p);
    Ok(TowerData {
        source: source.to_data(),
        quotient,
        projection,
        rank: r,
        element,
    })
}

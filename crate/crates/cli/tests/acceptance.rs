//! One line per acceptance criterion, with the time it took against its bound.
//!
//! Runs without the libtest harness: `cargo test --test acceptance`.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use esk_core::etnc::algebra::{all_orbits, Lattice};
use esk_core::etnc::artin::{artin_decompose, assemble, CharacterInput};
use esk_core::etnc::codescent::{codescent_check, Tower};
use esk_core::etnc::euler::{euler_poly_elliptic, euler_poly_matrix, euler_product, group_algebra_mul, EulerFactor, Q};
use esk_core::etnc::order::{associated_order, min_order};
use esk_core::etnc::{bk_image_check, headroom_stable, EtncData, EtncInstance, Verdict};
use esk_core::gen::{augmentation_generator, generate_etnc, generate_selmer, generate_tower, rand_element, GeneratorParams, Recipe};
use esk_core::ideal::IdealCanon;
use esk_core::io::{self, Payload};
use esk_core::module::{BidualContext, FPModule};
use esk_core::oracle;
use esk_core::ring::RingHandle;
use esk_core::selmer::SelmerInstance;
use esk_core::stark::{fitting_report, ij_ideals, stark_rank, stark_solve, StarkSetup};
use esk_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn small_rings() -> Vec<RingHandle> {
    [(3, 1, &[][..]), (3, 2, &[][..]), (3, 1, &[3][..]), (3, 2, &[3][..]), (3, 1, &[9][..]), (3, 1, &[3, 3][..]), (5, 1, &[5][..]), (5, 2, &[][..])]
        .iter()
        .map(|&(p, m, g)| RingHandle::build(p, m, 1, g).unwrap())
        .collect()
}

fn entry(rng: &mut ChaCha8Rng, ring: &RingHandle) -> Vec<u64> {
    let x = rand_element(rng, ring);
    match rng.gen_range(0..4) {
        0 => x,
        1 => ring.scale(ring.p(), &x),
        2 if ring.group_order() > 1 => ring.mul(&x, &augmentation_generator(ring, rng.gen_range(0..ring.factors().len()))),
        _ => ring.zero(),
    }
}

fn random_module(rng: &mut ChaCha8Rng, ring: &RingHandle, max_gens: usize) -> FPModule {
    let b = rng.gen_range(1..=max_gens);
    let nrel = rng.gen_range(0..=b + 1);
    let rels = (0..nrel).map(|_| (0..b).map(|_| entry(rng, ring)).collect()).collect();
    FPModule::new(ring, b, rels).unwrap()
}

fn size(ring: &RingHandle, log: u32) -> usize {
    (ring.p() as usize).pow(log)
}

fn same_set(i: &IdealCanon, set: &oracle::ElemSet) -> bool {
    set.len() == size(i.ring(), i.log_card()) && set.iter().all(|x| i.contains(x))
}

fn fitting_suite() -> Check {
    let rings = small_rings();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pairs = 120;
    for t in 0..pairs {
        let ring = &rings[t % rings.len()];
        let a = random_module(&mut rng, ring, 2);
        let b = random_module(&mut rng, ring, 2);
        let s = a.direct_sum(&b);
        for n in 0..=s.ngens() {
            let mut conv = IdealCanon::zero(ring);
            for i in 0..=n {
                conv = conv.sum(&a.fitting_ideal(i).product(&b.fitting_ideal(n - i)));
            }
            ensure!(s.fitting_ideal(n) == conv, "pair {t}: convolution fails at {n}");
        }
        for m in [&a, &b, &s] {
            ensure!(m.annihilator().contains_ideal(&m.fitting_ideal(0)), "pair {t}: Fitt^0 not in Ann");
        }
        let low = ring.at_level(1);
        let coeff = ring.coefficient_ring();
        let reduce = |x: &[u64]| ring.reduce_to_level(x, 1);
        let augment = |x: &[u64]| ring.augmentation(x);
        let (s_low, s_aug) = (s.base_change(&low, reduce), s.base_change(&coeff, augment));
        for j in 0..=s.ngens() {
            let f = s.fitting_ideal(j);
            ensure!(f.map(&low, reduce) == s_low.fitting_ideal(j), "pair {t}: reduction at {j}");
            ensure!(f.map(&coeff, augment) == s_aug.fitting_ideal(j), "pair {t}: augmentation at {j}");
        }
        if ring.elements().len() <= 81 && a.ngens() <= 2 {
            for j in 0..=a.ngens() {
                ensure!(same_set(&a.fitting_ideal(j), &oracle::fitting_minors(&a, j).unwrap()), "pair {t}: minors at {j}");
            }
        }
    }
    Ok(format!("{pairs} seeded pairs"))
}

fn bidual_suite() -> Check {
    let mut free_cases = 0;
    for ring in small_rings() {
        for b in 1..=3 {
            let m = FPModule::free(&ring, b);
            let ctx = BidualContext::new(&m);
            for r in 1..=b {
                ensure!(ctx.bidual_submodule(r).log_card() == m.exterior_power(r).log_card(), "free rank {b}, r = {r}");
                let n = esk_core::wedge::subsets(b, r).len();
                for t in 0..n {
                    let mut x = vec![ring.zero(); n];
                    x[t] = ring.one();
                    ensure!(ctx.image_ideal(&ctx.canonical_image(r, &x)).is_unit_ideal(), "basis image ideal");
                }
                free_cases += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut compared = 0;
    for ring in small_rings() {
        for _ in 0..40 {
            let m = random_module(&mut rng, &ring, 3);
            if m.log_card() > 6 || ring.log_card() * m.ngens() as u32 > 9 {
                continue;
            }
            let ctx = BidualContext::new(&m);
            let rmax = if size(&ring, m.log_card()) <= 243 { 2 } else { 1 };
            for r in 1..=m.ngens().min(rmax) {
                let n = esk_core::wedge::subsets(m.ngens(), r).len();
                let x: Vec<Vec<u64>> = (0..n).map(|_| entry(&mut rng, &ring)).collect();
                let ideal = ctx.image_ideal(&ctx.canonical_image(r, &x));
                let set = match oracle::bidual_image(&m, r, &x) {
                    Ok(set) => set,
                    Err(Error::Bounds(_)) => continue,
                    Err(e) => return Err(e.to_string()),
                };
                ensure!(same_set(&ideal, &set), "image ideal differs from enumeration");
                compared += 1;
            }
        }
    }
    ensure!(compared >= 100, "only {compared} oracle comparisons");
    Ok(format!("{free_cases} free cases, {compared} image ideals against enumeration"))
}

fn selmer_instance(seed: u64, p: u64, m: u32, group: &[u64], recipe: Recipe, rank: usize, aux: usize) -> Option<SelmerInstance> {
    let mut prm = GeneratorParams::new(seed, p, m, group, recipe);
    prm.rank = rank;
    prm.aux_primes = aux;
    prm.depth = prm.depth.min(aux);
    generate_selmer(&prm).ok().map(|d| SelmerInstance::new(d).unwrap())
}

/// At least `n` instances of `recipe`, cycling through shapes with `m` in {1, 2}.
fn selmer_corpus(recipe: Recipe, n: usize) -> Vec<SelmerInstance> {
    let shapes: [(u64, u32, &[u64]); 8] = [
        (3, 1, &[3]),
        (3, 2, &[3]),
        (5, 1, &[5]),
        (3, 1, &[3, 3]),
        (3, 1, &[]),
        (3, 2, &[]),
        (5, 2, &[5]),
        (5, 1, &[]),
    ];
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < n && seed < 20 * n as u64 {
        seed += 1;
        let (p, m, g) = shapes[seed as usize % shapes.len()];
        if let Some(inst) = selmer_instance(seed, p, m, g, recipe, (seed % 3) as usize, 3) {
            out.push(inst);
        }
    }
    out
}

fn freeness_suite() -> Check {
    let mut summary = Vec::new();
    for recipe in [Recipe::Cartesian, Recipe::NonCartesian, Recipe::CoreVertexAtDepth] {
        let corpus = selmer_corpus(recipe, 50);
        ensure!(corpus.len() >= 50, "{}: only {} instances", recipe.tag(), corpus.len());
        let (mut levels, mut cart) = (HashSet::new(), 0);
        for inst in &corpus {
            let tag = inst.default_tag().to_string();
            levels.insert(inst.m());
            let rep = inst.theorem_free_report(&tag, 2).map_err(|e| e.to_string())?;
            ensure!(!rep.counterexample, "{}: counterexample", recipe.tag());
            ensure!(rep.vertex_exists[0] == rep.cartesian, "{}: cartesian and vertex existence differ", recipe.tag());
            cart += rep.cartesian as usize;
            let chi = inst.core_rank(&tag).map_err(|e| e.to_string())?.chi;
            for j in 1..=inst.m() {
                for cert in inst.core_vertex_search(&tag, 2, j).map_err(|e| e.to_string())? {
                    if cert.core_vertex {
                        ensure!(cert.selmer_free, "vertex {} without free Selmer module", cert.ideal);
                        ensure!(cert.selmer_rank as i64 == chi + cert.nu as i64, "vertex {} of the wrong rank", cert.ideal);
                    }
                }
            }
        }
        ensure!(levels.len() == 2, "{}: levels {levels:?}", recipe.tag());
        summary.push(format!("{} {}/{} cartesian", recipe.tag(), cart, corpus.len()));
    }
    Ok(summary.join(", "))
}

fn propagation_suite() -> Check {
    let mut n = 0;
    let mut with_vertex = 0;
    for recipe in [Recipe::Cartesian, Recipe::NonCartesian, Recipe::CoreVertexAtDepth] {
        for inst in selmer_corpus(recipe, 50).into_iter().filter(|i| i.m() == 2) {
            let tag = inst.default_tag().to_string();
            let one = inst.vertex_exists(&tag, 2, 1).map_err(|e| e.to_string())?;
            let two = inst.vertex_exists(&tag, 2, 2).map_err(|e| e.to_string())?;
            ensure!(one == two, "{}: level 1 {one}, level 2 {two}", recipe.tag());
            n += 1;
            with_vertex += one as usize;
        }
    }
    ensure!(n >= 20, "only {n} instances with m = 2");
    Ok(format!("{n} instances at m = 2, {with_vertex} with vertices"))
}

fn stark_suite() -> Check {
    // free of rank one wherever a core vertex exists at full depth
    let mut free = 0;
    for recipe in [Recipe::Cartesian, Recipe::NonCartesian, Recipe::CoreVertexAtDepth] {
        for inst in selmer_corpus(recipe, 12) {
            let tag = inst.default_tag().to_string();
            if stark_rank(&inst, &tag).is_err() {
                continue;
            }
            let k = inst.naux();
            for j in 1..=inst.m() {
                if inst.vertex_exists(&tag, k, j).map_err(|e| e.to_string())? {
                    ensure!(stark_solve(&inst, &tag, k, j).map_err(|e| e.to_string())?.free_rank_one, "not free of rank one");
                    free += 1;
                }
            }
        }
    }
    ensure!(free >= 10, "only {free} core-vertex instances");

    let mut enumerated = 0;
    for seed in 1..=12u64 {
        for group in [&[][..], &[3]] {
            for m in [1u32, 2] {
                let Some(inst) = selmer_instance(seed, 3, m, group, Recipe::CoreVertexAtDepth, 1, 2) else { continue };
                if inst.data.global_rank > 3 || inst.level(m).ring.elements().len() > 81 {
                    continue;
                }
                let rank = stark_rank(&inst, "can").map_err(|e| e.to_string())?;
                let count = match oracle::stark_enumerate(&inst, "can", rank, m) {
                    Ok(c) => c,
                    Err(Error::Bounds(_)) => continue,
                    Err(e) => return Err(e.to_string()),
                };
                let sm = stark_solve(&inst, "can", 1, m).map_err(|e| e.to_string())?;
                ensure!(count.log_card == sm.log_card, "seed {seed}: solver and enumeration differ");
                enumerated += 1;
            }
        }
    }
    ensure!(enumerated >= 10, "only {enumerated} enumerations");

    let mut deep = 0;
    let mut strict = 0;
    for seed in 100..124u64 {
        for group in [&[][..], &[3]] {
            let Some(inst) = selmer_instance(seed, 3, 2, group, Recipe::CoreVertexAtDepth, (seed % 3) as usize, 3) else { continue };
            let tag = inst.default_tag().to_string();
            let Ok(r) = stark_rank(&inst, &tag) else { continue };
            let m = inst.m();
            let setup = StarkSetup::new(&inst, &tag, r, inst.naux(), m).map_err(|e| e.to_string())?;
            let sm = setup.solve();
            let Some(g) = sm.generator.clone() else { continue };
            let rep = fitting_report(&inst, &tag, &setup, &sm, &g, g.depth).map_err(|e| e.to_string())?;
            ensure!(rep.generates && rep.ij.iter().all(|e| e.equal), "seed {seed}: I_j differs from Fitt^j");
            if g.depth == 3 {
                deep += 1;
            }
            let ring = setup.ring().clone();
            let i0 = &ij_ideals(&ring, &g)[0];
            let scaled = setup.scale(&ring.scalar(ring.p()), &g);
            let s0 = &ij_ideals(&ring, &scaled)[0];
            if !i0.is_zero() {
                ensure!(i0.contains_ideal(s0) && i0 != s0, "seed {seed}: scaling by p does not shrink I_0");
                strict += 1;
            }
        }
    }
    ensure!(deep >= 20, "only {deep} generators checked up to j = 3");
    Ok(format!("{free} free, {enumerated} enumerated, {deep} with j <= 3, {strict} strict"))
}

fn etnc_params(seed: u64) -> GeneratorParams {
    let shapes: [(u64, u32, &[u64]); 6] = [(3, 1, &[3]), (3, 2, &[3]), (3, 1, &[]), (5, 1, &[5]), (3, 1, &[9]), (3, 1, &[3, 3])];
    let (p, m, g) = shapes[seed as usize % shapes.len()];
    let mut prm = GeneratorParams::new(seed, p, m, g, Recipe::EtncBasic);
    prm.rank = 1 + (seed as usize / shapes.len()) % 2;
    prm
}

fn etnc_corpus(n: u64) -> Vec<EtncInstance> {
    (1..=n).map(|s| EtncInstance::new(generate_etnc(&etnc_params(s)).unwrap()).unwrap()).collect()
}

fn times_p(data: &EtncData) -> EtncData {
    let mut d = data.clone();
    let lt = &mut d.leading_term;
    if lt.offset > 0 {
        lt.offset -= 1;
    } else {
        let w = data.ring.with_level(data.ring.m() + data.headroom).unwrap();
        lt.coeffs = w.scale(data.ring.p(), &lt.coeffs);
    }
    d
}

fn times_unit(data: &EtncData, rng: &mut ChaCha8Rng) -> EtncData {
    let mut d = data.clone();
    let w = data.ring.with_level(data.ring.m() + data.headroom).unwrap();
    let mut unit = esk_core::gen::rand_constant_unit(rng, &w);
    if w.group_order() > 1 {
        unit = w.add(&unit, &w.scale(data.ring.p(), &w.group_elem(1)));
    }
    d.leading_term.coeffs = w.mul(&unit, &d.leading_term.coeffs);
    d
}

fn etnc_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut flips = 0;
    let corpus = etnc_corpus(54);
    for (k, inst) in corpus.iter().enumerate() {
        let rep = bk_image_check(inst);
        ensure!(rep.verdict == Verdict::Pass, "instance {k}: {:?}", rep.verdict);
        let l = inst.lattices().map_err(|e| e.to_string())?;
        let alg = inst.algebra();
        ensure!(alg.lattice_eq(&alg.product(&l.image, &l.xi).unwrap(), &l.fitting).unwrap(), "instance {k}: product");
        ensure!(headroom_stable(inst).map_err(|e| e.to_string())?, "instance {k}: headroom");
        let u = EtncInstance::new(times_unit(inst.data(), &mut rng)).map_err(|e| e.to_string())?;
        let ru = bk_image_check(&u);
        ensure!((ru.verdict, ru.tnc_integral) == (rep.verdict, rep.tnc_integral), "instance {k}: unit changes the verdict");
        if rep.tnc_integral == Some(true) {
            let f = EtncInstance::new(times_p(inst.data())).map_err(|e| e.to_string())?;
            let rf = bk_image_check(&f);
            if rf.verdict != Verdict::InsufficientPrecision {
                ensure!(rf.tnc_integral == Some(false), "instance {k}: p did not flip");
                flips += 1;
            }
        }
    }
    ensure!(flips >= 5, "only {flips} flips");
    Ok(format!("{} instances, {flips} flips", corpus.len()))
}

fn lattices_of(inst: &EtncInstance) -> Vec<Lattice> {
    let l = inst.lattices().unwrap();
    vec![inst.algebra().group_ring_lattice(), l.fitting, l.image, l.xi, l.product]
}

fn order_suite() -> Check {
    let (mut exhaustive, mut principal) = (0, 0);
    for inst in etnc_corpus(30) {
        let alg = inst.algebra();
        if inst.data().ring.log_card() > 6 {
            continue;
        }
        for i in lattices_of(&inst) {
            let o = match associated_order(alg, &i) {
                Ok(o) => o,
                Err(Error::InsufficientPrecision { .. }) => continue,
                Err(e) => return Err(e.to_string()),
            };
            match oracle::stabilizer_agrees(alg, &i, &o) {
                Ok((_, agree)) => {
                    ensure!(agree, "stabilizer differs");
                    exhaustive += 1;
                }
                Err(Error::Bounds(_)) | Err(Error::InsufficientPrecision { .. }) => {}
                Err(e) => return Err(e.to_string()),
            }
            match oracle::principal_oracle(alg, &o, &i) {
                Ok(p) => {
                    ensure!(p == min_order(alg, &o, &i).map_err(|e| e.to_string())?, "min_order differs");
                    principal += 1;
                }
                Err(Error::Bounds(_)) | Err(Error::InsufficientPrecision { .. }) => {}
                Err(e) => return Err(e.to_string()),
            }
            let eta = inst.lattices().unwrap().eta;
            for x in [alg.shift(&alg.one(), 1), eta] {
                let Ok(xi) = alg.scale(&x, &i) else { continue };
                if let Ok(o2) = associated_order(alg, &xi) {
                    ensure!(alg.lattice_eq(&o, &o2).unwrap(), "not invariant under scaling");
                }
            }
        }
    }
    ensure!(exhaustive >= 20, "only {exhaustive} exhaustive checks");
    Ok(format!("{exhaustive} stabilizers, {principal} principality checks"))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Values of the sum of the Galois conjugates of `chi_a`.
fn orbit_sum_values(group: &[u64], a: &[u64]) -> Vec<i64> {
    let n: u64 = group.iter().product();
    let ord = group.iter().zip(a).map(|(&d, &x)| d / gcd(d, x)).fold(1, |l, k| l / gcd(l, k) * k);
    (0..n)
        .map(|idx| {
            let mut e = vec![0u64; group.len()];
            let mut t = idx;
            for i in (0..group.len()).rev() {
                e[i] = t % group[i];
                t /= group[i];
            }
            let s: f64 = (1..=ord)
                .filter(|&u| gcd(u, ord) == 1)
                .map(|u| {
                    let phase: f64 = group.iter().zip(a.iter().zip(&e)).map(|(&d, (&x, &y))| (u * x * y % d) as f64 / d as f64).sum();
                    (2.0 * std::f64::consts::PI * phase).cos()
                })
                .sum();
            s.round() as i64
        })
        .collect()
}

fn artin_suite() -> Check {
    let mut groups: Vec<Vec<u64>> = vec![vec![]];
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23] {
        let mut q = p;
        while q <= 27 {
            groups.push(vec![q]);
            q *= p;
        }
    }
    groups.extend([vec![2, 2], vec![2, 4], vec![2, 2, 2], vec![2, 8], vec![4, 4], vec![2, 2, 4], vec![2, 2, 2, 2], vec![3, 3], vec![3, 9], vec![3, 3, 3], vec![5, 5]]);
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let mut chars = 0;
    for group in &groups {
        let basis: Vec<Vec<i64>> = all_orbits(group).iter().map(|o| orbit_sum_values(group, &o.rep)).collect();
        let n = basis[0].len();
        let mut all = basis.clone();
        for _ in 0..10 {
            let c: Vec<i64> = (0..basis.len()).map(|_| rng.gen_range(-3..=3)).collect();
            all.push((0..n).map(|i| basis.iter().zip(&c).map(|(b, k)| b[i] * k).sum()).collect());
        }
        for v in &all {
            let dec = artin_decompose(group, &CharacterInput::Values(v.clone())).map_err(|e| e.to_string())?;
            ensure!(dec.multiplier == 1 && &assemble(group, &dec) == v, "{group:?}: round trip fails");
            chars += 1;
        }
    }
    Ok(format!("{} groups, {chars} characters", groups.len()))
}

fn codescent_suite() -> Check {
    let q = |n: i64, d: i64| Q::new(n, d);
    for l in [2i64, 5, 7, 11, 13] {
        let bound = (2.0 * (l as f64).sqrt()).floor() as i64;
        for a in -bound..=bound {
            let expect = vec![q(1, 1), q(-a, l), q(1, l)];
            ensure!(euler_poly_elliptic(a, l, 3).map_err(|e| e.to_string())?.coeffs == expect, "a = {a}, l = {l}");
            ensure!(euler_poly_matrix(&[vec![0, -l], vec![1, a]]).map_err(|e| e.to_string())?.coeffs == expect, "matrix a = {a}, l = {l}");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for group in [vec![3u64], vec![9], vec![3, 3], vec![5]] {
        for _ in 0..10 {
            let factors: Vec<EulerFactor> = (0..3)
                .map(|_| EulerFactor {
                    poly: euler_poly_elliptic(rng.gen_range(-3..=3), [2i64, 7, 11, 13][rng.gen_range(0..4)], 3).unwrap().coeffs,
                    frobenius: group.iter().map(|&d| rng.gen_range(0..d)).collect(),
                })
                .collect();
            let all = euler_product(&group, &factors).map_err(|e| e.to_string())?;
            let split = group_algebra_mul(&group, &euler_product(&group, &factors[..1]).unwrap(), &euler_product(&group, &factors[1..]).unwrap());
            ensure!(all == split, "{group:?}: P is not multiplicative");
        }
    }
    let mut towers = 0;
    for seed in 1..=12u64 {
        for (g, m) in [(vec![9u64], 1u32), (vec![3, 3], 1), (vec![9], 2), (vec![3], 2)] {
            let mut prm = GeneratorParams::new(seed, 3, m, &g, Recipe::Tower);
            prm.rank = 1 + seed as usize % 2;
            let t = Tower::new(&generate_tower(&prm).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            ensure!(codescent_check(&t).holds, "seed {seed} {g:?}");
            let target = t.target();
            if t.target_ring.elements().len() <= 81 {
                for j in 0..=target.ngens() {
                    let projected: Vec<Vec<u64>> = t.source.fitting_ideal(j).rows().iter().map(|x| t.project(x)).collect();
                    let image = oracle::span(&t.target_ring, 1, &projected).unwrap();
                    ensure!(image == oracle::fitting_minors(&target, j).unwrap(), "seed {seed} {g:?}: Fitt^{j}");
                }
            }
            towers += 1;
        }
    }
    ensure!(towers >= 20, "only {towers} towers");
    Ok(format!("{towers} towers"))
}

fn permutation_sum(ring: &RingHandle, mult: &[(u64, u64)]) -> FPModule {
    let mut m = FPModule::free(ring, 0);
    for &(j, n) in mult {
        for _ in 0..n {
            m = m.direct_sum(&FPModule::permutation_module(ring, j).unwrap());
        }
    }
    m
}

fn yakovlev_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut modules = 0;
    for (p, m, g) in [(3u64, 1u32, 3u64), (3, 2, 3), (3, 2, 9), (3, 3, 27), (5, 1, 5), (5, 2, 25)] {
        let ring = RingHandle::build(p, m, 1, &[g]).unwrap();
        let subgroups: Vec<u64> = (0..).map(|i| p.pow(i)).take_while(|&j| j <= g).collect();
        for _ in 0..6 {
            let mut mult: Vec<(u64, u64)> = Vec::new();
            for &j in &subgroups {
                if rng.gen_bool(0.5) {
                    mult.push((j, rng.gen_range(1..=2)));
                }
            }
            if mult.is_empty() {
                mult.push((g, 1));
            }
            let module = permutation_sum(&ring, &mult);
            let dec = module.yakovlev_decompose().map_err(|e| e.to_string())?;
            ensure!(dec.multiplicities == mult, "{mult:?}: got {:?}", dec.multiplicities);
            let card: u64 = mult.iter().map(|&(j, n)| n * m as u64 * (g / j)).sum();
            ensure!(module.log_card() as u64 == card, "{mult:?}: cardinality");
            for &k in &subgroups {
                let fixed: u64 = mult.iter().map(|&(j, n)| n * m as u64 * (g / j.max(k))).sum();
                ensure!(module.fixed_points_log(k).unwrap() as u64 == fixed, "{mult:?}: fixed points of {k}");
            }
            let regular = mult.iter().any(|&(j, _)| j == 1);
            ensure!(dec.epsilon_orders.is_empty() == regular, "{mult:?}: epsilon");
            modules += 1;
        }
    }
    Ok(format!("{modules} permutation modules"))
}

fn esk(args: &[&str], dump: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_esk")).arg("--dump-dir").arg(dump).args(args).output().unwrap()
}

fn infrastructure_suite(started: Instant) -> Check {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
    files.sort();
    for f in &files {
        let text = std::fs::read_to_string(f).unwrap();
        let parsed = io::parse(&text).map_err(|e| format!("{}: {e}", f.display()))?;
        ensure!(io::to_text(&parsed) == text, "{}: not byte-identical", f.display());
    }
    ensure!(files.len() >= 30, "only {} fixtures", files.len());

    let tmp = std::env::temp_dir().join(format!("esk-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    let selmer: Vec<String> = files
        .iter()
        .filter(|f| matches!(io::load(f).map(|x| x.body), Ok(Payload::Selmer(_))))
        .map(|f| f.to_str().unwrap().to_string())
        .collect();
    let run = |jobs: &str| {
        let mut args = vec!["--jobs", jobs, "stark", "report"];
        args.extend(selmer.iter().map(|s| s.as_str()));
        esk(&args, &tmp).stdout
    };
    ensure!(run("1") == run("4"), "output depends on --jobs");
    let gen = ["gen", "--recipe", "non-cartesian", "--seed", "7", "--group", "3"];
    ensure!(esk(&gen, &tmp).stdout == esk(&gen, &tmp).stdout, "generator output differs between runs");

    let mut file = io::load(Path::new(&selmer[0])).unwrap();
    let Payload::Selmer(d) = &mut file.body else { unreachable!() };
    d.core[0].declared_h0_rank = d.core[0].declared_h0_rank.map(|x| x + 1);
    let bad = tmp.join("bad.json");
    io::store(&bad, &file).unwrap();
    let first = esk(&["core-rank", bad.to_str().unwrap()], &tmp.join("dumps"));
    ensure!(first.status.code() == Some(1), "violation exit code {:?}", first.status.code());
    let v: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    let dumped = v["counterexample"].as_str().ok_or("no counterexample written")?.to_string();
    let again = esk(&["core-rank", &dumped], &tmp.join("again"));
    let w: serde_json::Value = serde_json::from_slice(&again.stdout).unwrap();
    ensure!(again.status.code() == Some(1) && w["report"] == v["report"], "dump does not reproduce");
    std::fs::remove_dir_all(&tmp).ok();

    let total = started.elapsed();
    ensure!(total < Duration::from_secs(300), "suite took {:.1}s", total.as_secs_f64());
    Ok(format!("{} fixtures, suite {:.1}s", files.len(), total.as_secs_f64()))
}

fn main() {
    let started = Instant::now();
    let criteria: Vec<(&str, Option<u64>, Box<dyn Fn() -> Check>)> = vec![
        ("fitting", Some(60), Box::new(fitting_suite)),
        ("bidual", Some(60), Box::new(bidual_suite)),
        ("freeness", Some(120), Box::new(freeness_suite)),
        ("propagation", None, Box::new(propagation_suite)),
        ("stark", Some(120), Box::new(stark_suite)),
        ("etnc", Some(60), Box::new(etnc_suite)),
        ("associated-order", Some(60), Box::new(order_suite)),
        ("artin", Some(10), Box::new(artin_suite)),
        ("codescent", Some(30), Box::new(codescent_suite)),
        ("yakovlev", Some(30), Box::new(yakovlev_suite)),
        ("infrastructure", None, Box::new(move || infrastructure_suite(started))),
    ];
    let mut failed = 0;
    for (k, (name, bound, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        let in_time = bound.map_or(true, |b| secs <= b as f64);
        let ok = result.is_ok() && in_time;
        failed += !ok as usize;
        let limit = bound.map_or("no bound".to_string(), |b| format!("bound {b}s"));
        let detail = match &result {
            Ok(s) => s.clone(),
            Err(e) => e.clone(),
        };
        println!("{} {:>2} {name:<17} {secs:>7.2}s ({limit}) {detail}", if ok { "PASS" } else { "FAIL" }, k + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

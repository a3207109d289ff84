//! One function per subcommand. Each returns a JSON report and a status.

use esk_core::etnc::artin::{artin_decompose, assemble, CharacterInput};
use esk_core::etnc::codescent::{codescent_check, Tower};
use esk_core::etnc::euler::{euler_poly_elliptic, euler_poly_matrix, EulerPoly};
use esk_core::etnc::order::{associated_order, min_order, order_report};
use esk_core::etnc::{bk_image_check, tnc_check, EtncInstance, Lattice, Verdict};
use esk_core::gen::GeneratorParams;
use esk_core::io::{self, InstanceFile, Payload};
use esk_core::module::{BidualContext, FPModule};
use esk_core::oracle;
use esk_core::ring::{RingHandle, RingSpec};
use esk_core::selmer::SelmerInstance;
use esk_core::stark::{fitting_report, stark_rank, stark_report, StarkSetup};
use esk_core::wedge::subsets;
use esk_core::{Error, Result};
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Violation,
    Precision,
}

impl Status {
    pub fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Violation
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Violation => "violation",
            Status::Precision => "insufficient_precision",
        }
    }
}

pub struct Outcome {
    pub status: Status,
    pub report: Value,
}

impl Outcome {
    fn new(ok: bool, report: Value) -> Self {
        Outcome {
            status: Status::from_ok(ok),
            report,
        }
    }
}

fn module_of(file: &InstanceFile) -> Result<FPModule> {
    match &file.body {
        Payload::Module(m) => FPModule::from_data(m),
        Payload::Etnc(e) => FPModule::from_data(&e.h2),
        Payload::Tower(t) => FPModule::from_data(&t.source),
        other => Err(Error::Input(format!("expected a module, found {}", other.kind()))),
    }
}

/// Selmer instance plus the structure, depth and level stored with it.
pub struct SelmerInput {
    pub inst: SelmerInstance,
    pub tag: String,
    pub depth: Option<usize>,
    pub level: Option<u32>,
}

pub fn selmer_of(file: &InstanceFile, tag: Option<&str>) -> Result<SelmerInput> {
    let (data, stored_tag, depth, level) = match &file.body {
        Payload::Selmer(s) => (s.clone(), None, None, None),
        Payload::Stark(s) => (s.selmer.clone(), s.structure.clone(), Some(s.depth), s.level),
        other => return Err(Error::Input(format!("expected a Selmer instance, found {}", other.kind()))),
    };
    let inst = SelmerInstance::new(data)?;
    let tag = tag
        .map(str::to_string)
        .or(stored_tag)
        .unwrap_or_else(|| inst.default_tag().to_string());
    inst.structure(&tag)?;
    Ok(SelmerInput { inst, tag, depth, level })
}

fn etnc_of(file: &InstanceFile) -> Result<EtncInstance> {
    match &file.body {
        Payload::Etnc(e) => EtncInstance::new(e.clone()),
        other => Err(Error::Input(format!("expected an eTNC instance, found {}", other.kind()))),
    }
}

fn json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn precision(err: Error) -> Result<Outcome> {
    match err {
        Error::InsufficientPrecision { have, need } => Ok(Outcome {
            status: Status::Precision,
            report: json!({ "headroom": have, "required": need }),
        }),
        e => Err(e),
    }
}

pub fn ring(spec: RingSpec) -> Result<Outcome> {
    let r = RingHandle::new(spec)?;
    let local = !r.has_aux();
    Ok(Outcome::new(
        true,
        json!({
            "ring": r.spec(),
            "dim": r.dim(),
            "log_card": r.log_card(),
            "group_order": r.group_order(),
            "local": local,
            "residue_log_card": r.residue_field().log_card(),
            "maximal_ideal_gens": r.maximal_ideal_gens().len(),
        }),
    ))
}

pub fn fitting(file: &InstanceFile, j: Option<usize>) -> Result<Outcome> {
    let m = module_of(file)?;
    let b = m.ngens();
    let range: Vec<usize> = match j {
        Some(j) => vec![j],
        None => (0..=b).collect(),
    };
    let ideals: Vec<Value> = range
        .iter()
        .map(|&j| {
            let f = m.fitting_ideal(j);
            json!({ "j": j, "log_card": f.log_card(), "ideal": f.to_data() })
        })
        .collect();
    let ann = m.annihilator();
    let in_ann = ann.contains_ideal(&m.fitting_ideal(0));
    let increasing = (0..b).all(|j| m.fitting_ideal(j + 1).contains_ideal(&m.fitting_ideal(j)));
    Ok(Outcome::new(
        in_ann && increasing,
        json!({
            "ngens": b,
            "fitting": ideals,
            "fitt0_in_annihilator": in_ann,
            "increasing": increasing,
        }),
    ))
}

pub fn bidual(file: &InstanceFile, rank: usize) -> Result<Outcome> {
    let m = module_of(file)?;
    let ring = m.ring().clone();
    let b = m.ngens();
    if rank > b {
        return Err(Error::Input(format!("rank {rank} exceeds the {b} generators")));
    }
    let ctx = BidualContext::new(&m);
    let wedge_log = m.exterior_power(rank).log_card();
    let bidual_log = ctx.bidual_submodule(rank).log_card();
    let free = m.is_free();
    let sets = subsets(b, rank).len();
    let mut basis = vec![ring.zero(); sets];
    basis[0] = ring.one();
    let image = ctx.image_ideal(&ctx.canonical_image(rank, &basis));
    let ok = !free || (wedge_log == bidual_log && image.is_unit_ideal());
    Ok(Outcome::new(
        ok,
        json!({
            "rank": rank,
            "free": free,
            "functionals": ctx.nfunctionals(),
            "wedge_log_card": wedge_log,
            "bidual_log_card": bidual_log,
            "first_wedge_image": image.to_data(),
            "first_wedge_image_is_unit": image.is_unit_ideal(),
        }),
    ))
}

pub fn selmer(file: &InstanceFile) -> Result<Outcome> {
    let s = selmer_of(file, None)?;
    let rep = s.inst.validate();
    Ok(Outcome::new(rep.ok, json(&rep)))
}

pub fn core_rank(file: &InstanceFile, tag: Option<&str>) -> Result<Outcome> {
    let s = selmer_of(file, tag)?;
    let rep = s.inst.core_rank(&s.tag)?;
    Ok(Outcome::new(rep.formula_holds != Some(false), json(&rep)))
}

pub fn core_vertex(file: &InstanceFile, tag: Option<&str>, depth: Option<usize>, level: Option<u32>) -> Result<Outcome> {
    let s = selmer_of(file, tag)?;
    let depth = depth.or(s.depth).unwrap_or(2);
    let level = level.or(s.level).unwrap_or(s.inst.m());
    let certs = s.inst.core_vertex_search(&s.tag, depth, level)?;
    let vertices: Vec<&_> = certs.iter().filter(|c| c.core_vertex).collect();
    let ok = vertices.iter().all(|c| c.rank_matches);
    Ok(Outcome::new(
        ok,
        json!({
            "tag": s.tag,
            "depth": depth,
            "level": level,
            "exists": !vertices.is_empty(),
            "vertices": vertices,
        }),
    ))
}

pub fn cartesian(file: &InstanceFile, tag: Option<&str>) -> Result<Outcome> {
    let s = selmer_of(file, tag)?;
    let places = s.inst.cartesian_check(&s.tag)?;
    Ok(Outcome::new(
        true,
        json!({
            "tag": s.tag,
            "cartesian": places.iter().all(|v| v.passed),
            "places": places,
        }),
    ))
}

pub fn thm_free(file: &InstanceFile, tag: Option<&str>, depth: Option<usize>) -> Result<Outcome> {
    let s = selmer_of(file, tag)?;
    let depth = depth.or(s.depth).unwrap_or(2);
    let rep = s.inst.theorem_free_report(&s.tag, depth)?;
    Ok(Outcome::new(!rep.counterexample, json(&rep)))
}

pub fn stark_solve(file: &InstanceFile, tag: Option<&str>, depth: Option<usize>, level: Option<u32>) -> Result<Outcome> {
    let s = selmer_of(file, tag)?;
    let depth = depth.or(s.depth).unwrap_or(s.inst.naux());
    let level = level.or(s.level).unwrap_or(s.inst.m());
    let sm = esk_core::stark::stark_solve(&s.inst, &s.tag, depth, level)?;
    let vertex = s.inst.vertex_exists(&s.tag, depth, level)?;
    // a truncated node set only bounds the module from above
    let complete = sm.depth == s.inst.naux();
    Ok(Outcome::new(
        !complete || !vertex || sm.free_rank_one,
        json!({
            "tag": s.tag,
            "rank": sm.rank,
            "depth": sm.depth,
            "complete": complete,
            "level": sm.level,
            "log_card": sm.log_card,
            "core_vertex_exists": vertex,
            "free_rank_one": sm.free_rank_one,
            "generator": sm.generator,
        }),
    ))
}

pub fn stark_ij(file: &InstanceFile, tag: Option<&str>, depth: Option<usize>, jmax: Option<usize>) -> Result<Outcome> {
    let s = selmer_of(file, tag)?;
    let depth = depth.or(s.depth).unwrap_or(s.inst.naux());
    let r = stark_rank(&s.inst, &s.tag)?;
    let setup = StarkSetup::new(&s.inst, &s.tag, r, depth, s.inst.m())?;
    let sm = setup.solve();
    let gen = sm
        .generator
        .as_ref()
        .ok_or_else(|| Error::Hypothesis("the Stark module is not free of rank one".into()))?;
    let rep = fitting_report(&s.inst, &s.tag, &setup, &sm, gen, jmax.unwrap_or(depth))?;
    let ok = rep.biconditional && rep.contained.iter().all(|&c| c);
    Ok(Outcome::new(ok, json(&rep)))
}

pub fn stark_full(file: &InstanceFile, tag: Option<&str>, depth: Option<usize>) -> Result<Outcome> {
    let s = selmer_of(file, tag)?;
    let depth = depth.or(s.depth).unwrap_or(s.inst.naux());
    let rep = stark_report(&s.inst, &s.tag, depth)?;
    let ok = rep
        .fitting
        .as_ref()
        .map_or(true, |f| f.biconditional && f.contained.iter().all(|&c| c));
    Ok(Outcome::new(ok, json(&rep)))
}

fn poly_json(p: &EulerPoly) -> Value {
    let coeffs: Vec<String> = p.coeffs.iter().map(|c| c.to_string()).collect();
    json!({ "coeffs": coeffs, "weil_bound": p.weil_bound })
}

pub fn euler_poly(frobenius: Option<&str>, elliptic: Option<(i64, i64)>, p: u64) -> Result<Outcome> {
    let poly = match (frobenius, elliptic) {
        (Some(text), None) => {
            let m: Vec<Vec<i64>> =
                serde_json::from_str(text).map_err(|e| Error::Input(format!("Frobenius matrix: {e}")))?;
            euler_poly_matrix(&m)?
        }
        (None, Some((a, l))) => euler_poly_elliptic(a, l, p)?,
        _ => return Err(Error::Input("give exactly one of --frobenius and --elliptic".into())),
    };
    Ok(Outcome::new(true, poly_json(&poly)))
}

pub fn bk_check(file: &InstanceFile) -> Result<Outcome> {
    let inst = etnc_of(file)?;
    let rep = bk_image_check(&inst);
    let status = match rep.verdict {
        Verdict::Pass => Status::Pass,
        Verdict::Fail => Status::Violation,
        Verdict::InsufficientPrecision => Status::Precision,
    };
    Ok(Outcome {
        status,
        report: json(&rep),
    })
}

pub fn xi(file: &InstanceFile) -> Result<Outcome> {
    let inst = etnc_of(file)?;
    let l = match inst.lattices() {
        Ok(l) => l,
        Err(e) => return precision(e),
    };
    let alg = inst.algebra();
    let group_ring = tnc_check(alg, &l.xi, &alg.group_ring_lattice());
    let maximal = tnc_check(alg, &l.xi, &alg.maximal_order());
    let (group_ring, maximal) = match (group_ring, maximal) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return precision(e),
    };
    Ok(Outcome::new(
        true,
        json!({
            "xi": l.xi.to_data(),
            "tnc_group_ring": group_ring,
            "tnc_maximal_order": maximal,
        }),
    ))
}

fn pick_lattice(inst: &EtncInstance, which: &str) -> Result<Lattice> {
    let l = inst.lattices()?;
    match which {
        "fitting" => Ok(l.fitting),
        "image" => Ok(l.image),
        "xi" => Ok(l.xi),
        "product" => Ok(l.product),
        "group-ring" => Ok(inst.algebra().group_ring_lattice()),
        other => Err(Error::Input(format!("unknown lattice {other:?}"))),
    }
}

pub fn assoc_order(file: &InstanceFile, which: &str) -> Result<Outcome> {
    let inst = etnc_of(file)?;
    let i = match pick_lattice(&inst, which) {
        Ok(i) => i,
        Err(e) => return precision(e),
    };
    match order_report(inst.algebra(), &i) {
        Ok(rep) => Ok(Outcome::new(rep.contains_group_ring && rep.stabilizes, json(&rep))),
        Err(e) => precision(e),
    }
}

pub fn codescent(file: &InstanceFile) -> Result<Outcome> {
    let t = match &file.body {
        Payload::Tower(t) => Tower::new(t)?,
        other => return Err(Error::Input(format!("expected a tower, found {}", other.kind()))),
    };
    let rep = codescent_check(&t);
    Ok(Outcome::new(rep.holds, json(&rep)))
}

pub fn artin(group: &[u64], input: &CharacterInput) -> Result<Outcome> {
    let dec = artin_decompose(group, input)?;
    let values = match input {
        CharacterInput::Values(v) => v.clone(),
        CharacterInput::Multiset(list) => esk_core::etnc::artin::values_of(group, list)?,
    };
    let back = assemble(group, &dec);
    let scaled: Vec<i64> = values.iter().map(|&v| v * dec.multiplier as i64).collect();
    Ok(Outcome::new(
        back == scaled,
        json!({ "decomposition": dec, "values": values, "reconstructs": back == scaled }),
    ))
}

/// Recomputes `|M|` and `|M^K|` for every subgroup `K` from the decomposition.
pub fn yakovlev(m: &FPModule) -> Result<Outcome> {
    let ring = m.ring();
    let dec = m.yakovlev_decompose()?;
    let g = ring.group_order() as u64;
    let unit = (ring.m() * ring.f()) as u64;
    let mut subgroup_orders = vec![1u64];
    while *subgroup_orders.last().unwrap() < g {
        let k = subgroup_orders.last().unwrap() * ring.p();
        subgroup_orders.push(k);
    }
    let mut fixed = Vec::new();
    let mut ok = true;
    for &k in &subgroup_orders {
        let expected: u64 = dec.multiplicities.iter().map(|&(j, n)| n * unit * (g / j.max(k))).sum();
        let actual = m.fixed_points_log(k)? as u64;
        ok &= expected == actual;
        fixed.push(json!({ "subgroup_order": k, "log_card": actual, "from_decomposition": expected }));
    }
    let has_regular = dec.multiplicities.iter().any(|&(j, n)| j == 1 && n > 0);
    let epsilon_zero = dec.epsilon_orders.is_empty();
    ok &= has_regular == epsilon_zero;
    Ok(Outcome::new(
        ok,
        json!({
            "decomposition": dec,
            "log_card": m.log_card(),
            "fixed_points": fixed,
            "regular_summand": has_regular,
            "epsilon_zero": epsilon_zero,
        }),
    ))
}

pub fn yakovlev_file(file: &InstanceFile) -> Result<Outcome> {
    yakovlev(&module_of(file)?)
}

pub fn gen(params: &GeneratorParams) -> Result<InstanceFile> {
    io::generate(params)
}

fn agree_report(task: &str, agree: bool, detail: Value) -> Outcome {
    Outcome::new(agree, json!({ "task": task, "agree": agree, "detail": detail }))
}

pub fn oracle(task: &str, file: &InstanceFile, rank: usize) -> Result<Outcome> {
    match task {
        "ideal-membership" => {
            let m = module_of(file)?;
            let ring = m.ring().clone();
            let elems = ring.elements();
            if elems.len() > 81 {
                return Err(Error::Bounds(format!("|R| = {} exceeds 81", elems.len())));
            }
            let mut agree = true;
            let mut checked = 0u64;
            for j in 0..=m.ngens() {
                let f = m.fitting_ideal(j);
                for x in &elems {
                    agree &= f.contains(x) == oracle::ideal_membership(&ring, f.rows(), x)?;
                    checked += 1;
                }
            }
            Ok(agree_report(task, agree, json!({ "checked": checked })))
        }
        "fitting-minors" => {
            let m = module_of(file)?;
            let mut agree = true;
            let mut sizes = Vec::new();
            for j in 0..=m.ngens() {
                let main = m.fitting_ideal(j);
                let set = oracle::fitting_minors(&m, j)?;
                let same = set.len() as u128 == (m.ring().p() as u128).pow(main.log_card())
                    && set.iter().all(|x| main.contains(x));
                agree &= same;
                sizes.push(json!({ "j": j, "oracle_size": set.len(), "log_card": main.log_card() }));
            }
            Ok(agree_report(task, agree, json!(sizes)))
        }
        "bidual-image" => {
            let m = module_of(file)?;
            let ring = m.ring().clone();
            if rank > m.ngens() {
                return Err(Error::Input(format!("rank {rank} exceeds the generators")));
            }
            let ctx = BidualContext::new(&m);
            let n = subsets(m.ngens(), rank).len();
            let mut agree = true;
            for t in 0..n {
                let mut x = vec![ring.zero(); n];
                x[t] = ring.one();
                let main = ctx.image_ideal(&ctx.canonical_image(rank, &x));
                let set = oracle::bidual_image(&m, rank, &x)?;
                agree &= set.len() as u128 == (ring.p() as u128).pow(main.log_card())
                    && set.iter().all(|y| main.contains(y));
            }
            Ok(agree_report(task, agree, json!({ "rank": rank, "elements": n })))
        }
        "stark-enumerate" => {
            let s = selmer_of(file, None)?;
            let level = s.level.unwrap_or(s.inst.m());
            let r = stark_rank(&s.inst, &s.tag)?;
            let count = oracle::stark_enumerate(&s.inst, &s.tag, r, level)?;
            let sm = esk_core::stark::stark_solve(&s.inst, &s.tag, 1, level)?;
            Ok(agree_report(
                task,
                count.log_card == sm.log_card,
                json!({ "oracle": count, "solver_log_card": sm.log_card }),
            ))
        }
        "stabilizer" => {
            let inst = etnc_of(file)?;
            let alg = inst.algebra();
            let run = || -> Result<Outcome> {
                let i = inst.lattices()?.fitting;
                let o = associated_order(alg, &i)?;
                let (count, stab) = oracle::stabilizer_agrees(alg, &i, &o)?;
                let principal = oracle::principal_oracle(alg, &o, &i)?;
                let minimal = min_order(alg, &o, &i)?;
                Ok(agree_report(
                    task,
                    stab && principal == minimal,
                    json!({ "stabilizer": count, "stabilizer_agrees": stab, "min_order": minimal, "principal": principal }),
                ))
            };
            run().or_else(precision)
        }
        other => Err(Error::Input(format!("unknown oracle task {other:?}"))),
    }
}

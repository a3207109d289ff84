//! Rational characters of finite abelian groups as integer combinations of
//! permutation characters `Ind_H^G 1`.
//!
//! The orbit sum over the generators of a cyclic subgroup `K` of the dual group
//! is `sum_{C <= K} mu(|K|/|C|) Ind_{C^perp} 1`, so for abelian groups the
//! multiplier is always 1.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::algebra::{all_orbits, character_order, Orbit};
use crate::error::{Error, Result};

/// Subgroup `H` of `G`, as the sorted list of its elements in mixed radix.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Subgroup {
    pub elements: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtinDecomposition {
    pub multiplier: u64,
    pub coefficients: Vec<(Subgroup, i64)>,
}

/// A character given by its values or by its constituents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharacterInput {
    Values(Vec<i64>),
    Multiset(Vec<(Vec<u64>, i64)>),
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn mobius(n: u64) -> i64 {
    let mut n = n;
    let mut sign = 1;
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            n /= d;
            if n % d == 0 {
                return 0;
            }
            sign = -sign;
        }
        d += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

fn totient(n: u64) -> u64 {
    (1..=n).filter(|&k| gcd(k, n) == 1).count() as u64
}

/// `sum_{u in (Z/d)^*} zeta_d^(u t)`.
pub fn ramanujan_sum(d: u64, t: u64) -> i64 {
    let g = gcd(d, t % d);
    let g = if g == 0 { d } else { g };
    let q = d / g;
    mobius(q) * (totient(d) / totient(q)) as i64
}

fn elements(group: &[u64]) -> Vec<Vec<u64>> {
    let mut out: Vec<Vec<u64>> = vec![vec![]];
    for &n in group {
        out = out
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
    out
}

fn exponent(group: &[u64]) -> u64 {
    group.iter().fold(1, |a, &b| a / gcd(a, b) * b)
}

/// `t` with `chi(g) = zeta_big^t`.
fn pairing(group: &[u64], chi: &[u64], g: &[u64]) -> u64 {
    let big = exponent(group);
    group
        .iter()
        .zip(chi)
        .zip(g)
        .fold(0, |acc, ((&n, &a), &x)| (acc + a * x * (big / n)) % big)
}

/// Value at `g` of the orbit sum of `chi`.
fn orbit_sum_value(group: &[u64], chi: &[u64], g: &[u64]) -> i64 {
    let d = character_order(group, chi);
    let big = exponent(group);
    let t = pairing(group, chi, g) / (big / d);
    ramanujan_sum(d, t)
}

/// `{ g : chi(g) = 1 for chi in <chi0> }`.
fn kernel_of(group: &[u64], chi: &[u64]) -> Subgroup {
    let elements = elements(group)
        .iter()
        .enumerate()
        .filter(|(_, g)| pairing(group, chi, g) == 0)
        .map(|(i, _)| i)
        .collect();
    Subgroup { elements }
}

/// Values of `Ind_H^G 1`.
pub fn induced_trivial(group: &[u64], h: &Subgroup) -> Vec<i64> {
    let order: u64 = group.iter().product();
    let index = order as i64 / h.elements.len() as i64;
    let mut v = vec![0i64; order as usize];
    for &e in &h.elements {
        v[e] = index;
    }
    v
}

/// `sum n_H Ind_H^G 1`.
pub fn assemble(group: &[u64], dec: &ArtinDecomposition) -> Vec<i64> {
    let order: u64 = group.iter().product();
    let mut v = vec![0i64; order as usize];
    for (h, n) in &dec.coefficients {
        for (x, y) in v.iter_mut().zip(induced_trivial(group, h)) {
            *x += n * y;
        }
    }
    v
}

/// Multiplicity of each orbit.
fn orbit_multiplicities(group: &[u64], input: &CharacterInput) -> Result<Vec<(Orbit, i64)>> {
    let orbits = all_orbits(group);
    let order: i64 = group.iter().product::<u64>() as i64;
    match input {
        CharacterInput::Multiset(list) => {
            let mut mult: BTreeMap<Vec<u64>, i64> = BTreeMap::new();
            for (chi, n) in list {
                if chi.len() != group.len() || chi.iter().zip(group).any(|(&a, &q)| a >= q) {
                    return Err(Error::Input(format!("{chi:?} is not a character of the group")));
                }
                *mult.entry(chi.clone()).or_default() += n;
            }
            let mut out = Vec::new();
            for o in orbits {
                let d = o.order;
                let members: Vec<Vec<u64>> = (1..=d)
                    .filter(|&u| gcd(u, d) == 1)
                    .map(|u| o.rep.iter().zip(group).map(|(&a, &q)| a * u % q).collect())
                    .collect();
                let first = mult.get(&members[0]).copied().unwrap_or(0);
                if members.iter().any(|c| mult.get(c).copied().unwrap_or(0) != first) {
                    return Err(Error::Input(format!(
                        "the character is not rational: multiplicities differ on the orbit of {:?}",
                        o.rep
                    )));
                }
                if first != 0 {
                    out.push((o, first));
                }
            }
            Ok(out)
        }
        CharacterInput::Values(v) => {
            let els = elements(group);
            if v.len() != els.len() {
                return Err(Error::Dimension(format!("expected {} values", els.len())));
            }
            let mut out = Vec::new();
            for o in orbits {
                let s: i64 = els
                    .iter()
                    .zip(v)
                    .map(|(g, &x)| x * ramanujan_sum(o.order, pairing(group, &o.rep, g) / (exponent(group) / o.order)))
                    .sum();
                let per_char = Ratio::new(s, order * totient(o.order) as i64);
                if !per_char.is_integer() {
                    return Err(Error::Input("values are not those of a virtual rational character".into()));
                }
                if *per_char.numer() != 0 {
                    out.push((o, per_char.to_integer()));
                }
            }
            Ok(out)
        }
    }
}

pub fn artin_decompose(group: &[u64], input: &CharacterInput) -> Result<ArtinDecomposition> {
    let mults = orbit_multiplicities(group, input)?;
    let mut coeffs: BTreeMap<Subgroup, i64> = BTreeMap::new();
    for (o, a) in &mults {
        let d = o.order;
        // subgroups of <chi> are <chi^(d/c)> for c | d
        for c in (1..=d).filter(|c| d % c == 0) {
            let mu = mobius(d / c);
            if mu == 0 {
                continue;
            }
            let sub: Vec<u64> = o.rep.iter().zip(group).map(|(&x, &q)| x * (d / c) % q).collect();
            *coeffs.entry(kernel_of(group, &sub)).or_default() += a * mu;
        }
    }
    let dec = ArtinDecomposition {
        multiplier: 1,
        coefficients: coeffs.into_iter().filter(|(_, n)| *n != 0).collect(),
    };
    let target: Vec<i64> = match input {
        CharacterInput::Values(v) => v.clone(),
        CharacterInput::Multiset(_) => character_values(group, &mults),
    };
    if assemble(group, &dec) != target {
        return Err(Error::Input("values are not those of a virtual rational character".into()));
    }
    Ok(dec)
}

fn character_values(group: &[u64], mults: &[(Orbit, i64)]) -> Vec<i64> {
    elements(group)
        .iter()
        .map(|g| mults.iter().map(|(o, a)| a * orbit_sum_value(group, &o.rep, g)).sum())
        .collect()
}

/// Values of a character given as a multiset of constituents.
pub fn values_of(group: &[u64], list: &[(Vec<u64>, i64)]) -> Result<Vec<i64>> {
    let mults = orbit_multiplicities(group, &CharacterInput::Multiset(list.to_vec()))?;
    Ok(character_values(group, &mults))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramanujan_sums() {
        assert_eq!(ramanujan_sum(1, 0), 1);
        assert_eq!(ramanujan_sum(3, 0), 2);
        assert_eq!(ramanujan_sum(3, 1), -1);
        assert_eq!(ramanujan_sum(9, 3), -3);
        assert_eq!(ramanujan_sum(9, 1), 0);
    }

    #[test]
    fn trivial_character() {
        let d = artin_decompose(&[3], &CharacterInput::Multiset(vec![(vec![0], 1)])).unwrap();
        assert_eq!(d.multiplier, 1);
        assert_eq!(d.coefficients, vec![(Subgroup { elements: vec![0, 1, 2] }, 1)]);
    }

    #[test]
    fn non_rational_is_rejected() {
        let r = artin_decompose(&[3], &CharacterInput::Multiset(vec![(vec![1], 1)]));
        assert!(matches!(r, Err(Error::Input(_))));
        assert!(artin_decompose(&[3], &CharacterInput::Values(vec![1, 0, 0])).is_err());
    }
}

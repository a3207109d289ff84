#![allow(dead_code)]

use esk_core::gen::{augmentation_generator, rand_element};
use esk_core::module::FPModule;
use esk_core::ring::RingHandle;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Rings with `p` in {3, 5}, `m <= 2`, `|G| <= 9`.
pub fn small_rings() -> Vec<RingHandle> {
    [
        (3, 1, &[][..]),
        (3, 2, &[][..]),
        (3, 1, &[3][..]),
        (3, 2, &[3][..]),
        (3, 1, &[9][..]),
        (3, 1, &[3, 3][..]),
        (5, 1, &[5][..]),
        (5, 2, &[][..]),
    ]
    .iter()
    .map(|&(p, m, g)| RingHandle::build(p, m, 1, g).unwrap())
    .collect()
}

/// Mostly non-units, so that the modules are not all zero.
pub fn entry(rng: &mut ChaCha8Rng, ring: &RingHandle) -> Vec<u64> {
    let x = rand_element(rng, ring);
    match rng.gen_range(0..4) {
        0 => x,
        1 => ring.scale(ring.p(), &x),
        2 if ring.group_order() > 1 => {
            let i = rng.gen_range(0..ring.factors().len());
            ring.mul(&x, &augmentation_generator(ring, i))
        }
        _ => ring.zero(),
    }
}

pub fn random_module(rng: &mut ChaCha8Rng, ring: &RingHandle, max_gens: usize) -> FPModule {
    let b = rng.gen_range(1..=max_gens);
    let nrel = rng.gen_range(0..=b + 1);
    let rels = (0..nrel).map(|_| (0..b).map(|_| entry(rng, ring)).collect()).collect();
    FPModule::new(ring, b, rels).unwrap()
}

/// `p^k` as a set size.
pub fn size(ring: &RingHandle, log: u32) -> usize {
    (ring.p() as usize).pow(log)
}

/// Rank over `F_p` by plain row reduction.
pub fn rank_mod_p(mut rows: Vec<Vec<u64>>, p: u64) -> usize {
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut rank = 0;
    for c in 0..ncols {
        let Some(piv) = (rank..rows.len()).find(|&i| rows[i][c] % p != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = (1..p).find(|&t| rows[rank][c] * t % p == 1).unwrap();
        for x in rows[rank].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..rows.len() {
            if i != rank && rows[i][c] % p != 0 {
                let k = rows[i][c] % p;
                for j in 0..ncols {
                    rows[i][j] = (rows[i][j] + (p - k) * rows[rank][j]) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

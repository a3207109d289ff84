use esk_core::gen::augmentation_generator;
use esk_core::ideal::IdealCanon;
use esk_core::oracle;
use esk_core::ring::{RingHandle, RingSpec};
use esk_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn z9c3() -> RingHandle {
    RingHandle::build(3, 2, 1, &[3]).unwrap()
}

/// Convolution in `Z/n[C_k]` written out directly.
fn cyclic_mul(n: u64, a: &[u64], b: &[u64]) -> Vec<u64> {
    let k = a.len();
    let mut out = vec![0u64; k];
    for i in 0..k {
        for j in 0..k {
            out[(i + j) % k] = (out[(i + j) % k] + a[i] * b[j]) % n;
        }
    }
    out
}

#[test]
fn build_examples() {
    let z9 = RingHandle::build(3, 2, 1, &[]).unwrap();
    assert_eq!(z9.elements().len(), 9);
    let f3c3 = RingHandle::build(3, 1, 1, &[3]).unwrap();
    assert_eq!(f3c3.residue_field().log_card(), 1);
    assert!(!f3c3.has_aux());
    let big = RingHandle::build(3, 2, 2, &[3]).unwrap();
    // basis elements: f * |G| coordinates over Z/9
    assert_eq!(big.dim(), 2 * 3);
    assert_eq!(big.log_card(), 2 * big.dim() as u32);
}

#[test]
fn build_rejects_bad_parameters() {
    assert!(matches!(RingHandle::build(4, 1, 1, &[]), Err(Error::InvalidRing(_))));
    assert!(matches!(RingHandle::build(2, 1, 1, &[]), Err(Error::InvalidRing(_))));
    assert!(matches!(RingHandle::build(3, 1, 1, &[6]), Err(Error::InvalidRing(_))));
    assert!(matches!(RingHandle::build(3, 1, 1, &[9, 3]), Err(Error::InvalidRing(_))));
    assert!(RingHandle::build(3, 0, 1, &[]).is_err());
}

#[test]
fn ideal_examples() {
    let r = z9c3();
    let x = augmentation_generator(&r, 0);
    let x2 = r.mul(&x, &x);
    let x3 = r.mul(&x2, &x);
    assert!(IdealCanon::principal(&r, &x).contains(&x2));
    // (g - 1)^3 expanded independently: g^3 - 3g^2 + 3g - 1 with g^3 = 1
    let mut gm1 = vec![8u64, 1, 0];
    let direct = cyclic_mul(9, &cyclic_mul(9, &gm1, &gm1), &gm1);
    assert_eq!(direct, vec![0, 3, 6]);
    assert_eq!(direct, x3);
    assert!(IdealCanon::principal(&r, &r.scalar(3)).contains(&x3));
    assert!(oracle::ideal_membership(&r, &[r.scalar(3)], &direct).unwrap());
    gm1[0] = 0;
    assert!(!IdealCanon::principal(&r, &r.scalar(3)).contains(&gm1));
}

#[test]
fn normalization_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rings = [z9c3(), RingHandle::build(3, 1, 1, &[3, 3]).unwrap(), RingHandle::build(5, 2, 1, &[5]).unwrap()];
    for t in 0..100 {
        let r = &rings[t % rings.len()];
        let n = rng.gen_range(0..4);
        let gens: Vec<Vec<u64>> = (0..n)
            .map(|_| (0..r.dim()).map(|_| rng.gen_range(0..r.zpk().modulus())).collect())
            .collect();
        let i = IdealCanon::from_gens(r, gens.iter());
        let again = IdealCanon::from_gens(r, i.rows().iter());
        assert_eq!(i, again);
        let mut shuffled = gens.clone();
        shuffled.reverse();
        if let Some(g) = gens.first() {
            shuffled.push(r.add(g, g));
        }
        assert_eq!(IdealCanon::from_gens(r, shuffled.iter()), i);
    }
}

#[test]
fn mixed_rings_are_rejected() {
    let a = z9c3();
    let b = RingHandle::build(3, 1, 1, &[3]).unwrap();
    let x = esk_core::ring::RingElem::new(&a, a.one()).unwrap();
    let y = esk_core::ring::RingElem::new(&b, b.one()).unwrap();
    assert!(matches!(x.mul(&y), Err(Error::RingMismatch(_))));
    let ia = IdealCanon::unit(&a);
    let ib = IdealCanon::unit(&b);
    assert!(ia.try_contains_ideal(&ib).is_err());
}

#[test]
fn unit_examples() {
    let r = z9c3();
    let g = r.group_elem(r.group_generator(0));
    assert!(r.is_unit(&g));
    assert!(!r.is_unit(&augmentation_generator(&r, 0)));
    for x in r.elements().iter().step_by(37) {
        let y = r.add(&r.one(), &r.scale(3, x));
        assert!(r.is_unit(&y));
    }
}

#[test]
fn norm_element_examples() {
    let t = RingHandle::build(3, 2, 1, &[]).unwrap();
    assert_eq!(t.norm_element(), t.one());
    let r = z9c3();
    assert_eq!(r.norm_element(), vec![1, 1, 1]);
    let big = RingHandle::build(3, 2, 1, &[3, 3]).unwrap();
    assert_eq!(big.augmentation(&big.norm_element()), vec![0]);
    let c9 = RingHandle::build(5, 2, 1, &[5]).unwrap();
    assert_eq!(c9.augmentation(&c9.norm_element()), vec![5]);
}

fn aux_ring(p: u64, m: u32, f: u32, aux: &[u64]) -> RingHandle {
    let mut spec = RingSpec::new(p, m, f, vec![]);
    spec.aux = aux.to_vec();
    RingHandle::new(spec).unwrap()
}

#[test]
fn trivial_character_idempotent() {
    let r = aux_ring(3, 2, 1, &[2]);
    let e = r.chi_idempotent(&[0]).unwrap();
    // 2^{-1} = 5 in Z/9
    assert_eq!(e, vec![5, 5]);
    assert_eq!(r.mul(&e, &e), e);
}

#[test]
fn idempotents_are_orthogonal_and_complete() {
    for (p, f, aux) in [(3u64, 1u32, vec![2u64]), (3, 2, vec![4]), (5, 1, vec![4]), (3, 2, vec![2, 4])] {
        let r = aux_ring(p, 2, f, &aux);
        let chars = r.aux_characters();
        let es: Vec<Vec<u64>> = chars.iter().map(|c| r.chi_idempotent(c).unwrap()).collect();
        let total = es.iter().fold(r.zero(), |acc, e| r.add(&acc, e));
        assert_eq!(total, r.one());
        for (i, a) in es.iter().enumerate() {
            assert_eq!(&r.mul(a, a), a);
            for b in &es[i + 1..] {
                assert!(r.is_zero(&r.mul(a, b)));
            }
        }
    }
}

#[test]
fn character_order_needs_residue_degree() {
    let r = aux_ring(3, 1, 1, &[4]);
    assert_eq!(
        r.chi_idempotent(&[1]).unwrap_err(),
        Error::CharacterOrder { order: 4, required_f: 2 }
    );
}

#[test]
fn units_agree_with_inverse_search() {
    for r in [
        z9c3(),
        RingHandle::build(3, 1, 1, &[3]).unwrap(),
        RingHandle::build(3, 3, 1, &[]).unwrap(),
        RingHandle::build(3, 1, 2, &[3]).unwrap(),
    ] {
        let elems = r.elements();
        assert!(elems.len() <= 729);
        let one = r.one();
        for x in &elems {
            let has_inverse = elems.iter().any(|y| r.mul(x, y) == one);
            assert_eq!(r.is_unit(x), has_inverse);
        }
        // non-units form an ideal
        let non_units: Vec<&Vec<u64>> = elems.iter().filter(|x| !r.is_unit(x)).collect();
        for (a, b) in non_units.iter().zip(non_units.iter().rev()).take(200) {
            assert!(!r.is_unit(&r.add(a, b)));
        }
    }
}

fn ring_strategy() -> impl Strategy<Value = RingHandle> {
    prop_oneof![
        Just(z9c3()),
        Just(RingHandle::build(3, 1, 2, &[3]).unwrap()),
        Just(RingHandle::build(5, 2, 1, &[5]).unwrap()),
        Just(RingHandle::build(3, 2, 1, &[3, 3]).unwrap()),
        Just(RingHandle::build(3, 2, 2, &[]).unwrap()),
    ]
}

fn with_elements(n: usize) -> impl Strategy<Value = (RingHandle, Vec<Vec<u64>>)> {
    ring_strategy().prop_flat_map(move |r| {
        let q = r.zpk().modulus();
        let d = r.dim();
        (Just(r), prop::collection::vec(prop::collection::vec(0..q, d), n))
    })
}

proptest! {
    #[test]
    fn ring_axioms((r, xs) in with_elements(3)) {
        let (a, b, c) = (&xs[0], &xs[1], &xs[2]);
        prop_assert_eq!(r.mul(&r.mul(a, b), c), r.mul(a, &r.mul(b, c)));
        prop_assert_eq!(r.mul(a, &r.add(b, c)), r.add(&r.mul(a, b), &r.mul(a, c)));
        prop_assert_eq!(r.mul(a, b), r.mul(b, a));
        prop_assert_eq!(r.mul(a, &r.one()), a.clone());
        prop_assert!(r.is_zero(&r.add(a, &r.neg(a))));
    }

    #[test]
    fn inverse_of_units((r, xs) in with_elements(1)) {
        let x = &xs[0];
        match r.inverse(x) {
            Some(y) => prop_assert_eq!(r.mul(x, &y), r.one()),
            None => prop_assert!(!r.is_unit(x)),
        }
    }

    #[test]
    fn ideal_normal_form_ignores_generator_order((r, xs) in with_elements(3)) {
        let i = IdealCanon::from_gens(&r, xs.iter());
        let mut rev = xs.clone();
        rev.reverse();
        rev.push(r.mul(&xs[0], &xs[1]));
        prop_assert_eq!(&IdealCanon::from_gens(&r, rev.iter()), &i);
        for x in &xs {
            prop_assert!(i.contains(x));
        }
    }
}

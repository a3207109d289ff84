//! Ideals as `Z/p^m`-submodules in Howell normal form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::howell::Howell;
use crate::ring::RingHandle;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealCanon {
    ring: RingHandle,
    form: Howell,
}

/// Serialized form: the ring spec and the normal-form rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealData {
    pub ring: RingHandle,
    pub rows: Vec<Vec<u64>>,
}

impl IdealCanon {
    /// The ideal generated by `gens`.
    pub fn from_gens<'a, I>(ring: &RingHandle, gens: I) -> Self
    where
        I: IntoIterator<Item = &'a Vec<u64>>,
    {
        let n = ring.dim();
        let mut rows = Vec::new();
        for g in gens {
            assert_eq!(g.len(), n, "generator length");
            if ring.is_zero(g) {
                continue;
            }
            rows.extend(ring.mult_rows(g));
        }
        IdealCanon {
            ring: ring.clone(),
            form: Howell::new(ring.zpk(), n, rows),
        }
    }

    /// Wraps an additive submodule, checking that it is an ideal.
    pub fn from_submodule(ring: &RingHandle, form: Howell) -> Result<Self> {
        if form.ncols() != ring.dim() || form.ctx() != ring.zpk() {
            return Err(Error::Dimension("submodule does not live in the ring".into()));
        }
        for row in form.rows() {
            for k in 0..ring.dim() {
                if !form.contains(&ring.mul(&ring.basis(k), row)) {
                    return Err(Error::Input(
                        "submodule is not closed under multiplication".into(),
                    ));
                }
            }
        }
        Ok(IdealCanon {
            ring: ring.clone(),
            form,
        })
    }

    pub fn from_data(data: &IdealData) -> Result<Self> {
        let form = Howell::new(data.ring.zpk(), data.ring.dim(), data.rows.clone());
        if form.rows() != data.rows.as_slice() {
            return Err(Error::Tamper("ideal rows are not in normal form".into()));
        }
        IdealCanon::from_submodule(&data.ring, form)
    }

    pub fn to_data(&self) -> IdealData {
        IdealData {
            ring: self.ring.clone(),
            rows: self.form.rows().to_vec(),
        }
    }

    pub fn zero(ring: &RingHandle) -> Self {
        IdealCanon {
            ring: ring.clone(),
            form: Howell::zero(ring.zpk(), ring.dim()),
        }
    }

    pub fn unit(ring: &RingHandle) -> Self {
        IdealCanon {
            ring: ring.clone(),
            form: Howell::full(ring.zpk(), ring.dim()),
        }
    }

    pub fn principal(ring: &RingHandle, x: &[u64]) -> Self {
        IdealCanon::from_gens(ring, std::iter::once(&x.to_vec()))
    }

    pub fn ring(&self) -> &RingHandle {
        &self.ring
    }

    pub fn form(&self) -> &Howell {
        &self.form
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        self.form.rows()
    }

    pub fn log_card(&self) -> u32 {
        self.form.log_card()
    }

    pub fn contains(&self, x: &[u64]) -> bool {
        self.form.contains(x)
    }

    pub fn is_zero(&self) -> bool {
        self.form.is_zero()
    }

    pub fn is_unit_ideal(&self) -> bool {
        self.form.log_card() == self.ring.log_card()
    }

    pub fn contains_ideal(&self, other: &IdealCanon) -> bool {
        self.form.contains_all(&other.form)
    }

    fn check(&self, other: &IdealCanon) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(format!(
                "{:?} vs {:?}",
                self.ring, other.ring
            )));
        }
        Ok(())
    }

    pub fn try_contains_ideal(&self, other: &IdealCanon) -> Result<bool> {
        self.check(other)?;
        Ok(self.contains_ideal(other))
    }

    pub fn sum(&self, other: &IdealCanon) -> IdealCanon {
        assert_eq!(self.ring, other.ring);
        IdealCanon {
            ring: self.ring.clone(),
            form: self.form.sum(&other.form),
        }
    }

    pub fn product(&self, other: &IdealCanon) -> IdealCanon {
        assert_eq!(self.ring, other.ring);
        let r = &self.ring;
        let mut rows = Vec::new();
        for a in self.form.rows() {
            for b in other.form.rows() {
                rows.push(r.mul(a, b));
            }
        }
        IdealCanon {
            ring: r.clone(),
            form: Howell::new(r.zpk(), r.dim(), rows),
        }
    }

    pub fn intersect(&self, other: &IdealCanon) -> IdealCanon {
        assert_eq!(self.ring, other.ring);
        IdealCanon {
            ring: self.ring.clone(),
            form: self.form.intersect(&other.form),
        }
    }

    /// Image under a ring homomorphism given on coefficient vectors.
    pub fn map<F>(&self, target: &RingHandle, f: F) -> IdealCanon
    where
        F: Fn(&[u64]) -> Vec<u64>,
    {
        let imgs: Vec<Vec<u64>> = self.form.rows().iter().map(|r| f(r)).collect();
        IdealCanon::from_gens(target, imgs.iter())
    }

    /// Annihilator `{ x : x I = 0 }`.
    pub fn annihilator(&self) -> IdealCanon {
        let r = &self.ring;
        let imgs: Vec<Vec<u64>> = (0..r.dim())
            .map(|k| {
                let b = r.basis(k);
                self.form.rows().iter().flat_map(|g| r.mul(&b, g)).collect()
            })
            .collect();
        let width = self.form.rows().len() * r.dim();
        let ker = crate::howell::kernel(r.zpk(), &imgs, width);
        IdealCanon {
            ring: r.clone(),
            form: ker,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn zc3() -> RingHandle {
        RingHandle::build(3, 2, 1, &[3]).unwrap()
    }

    fn g_minus_one(r: &RingHandle) -> Vec<u64> {
        let mut v = r.group_elem(1);
        v[0] = r.zpk().sub(0, 1);
        v
    }

    #[test]
    fn membership_examples() {
        let r = zc3();
        let x = g_minus_one(&r);
        let i = IdealCanon::principal(&r, &x);
        assert!(i.contains(&r.mul(&x, &x)));
        let three = IdealCanon::principal(&r, &r.scalar(3));
        assert!(three.contains(&r.pow(&x, 3)));
        assert!(!three.contains(&x));
        assert!(IdealCanon::principal(&r, &r.group_elem(2)).is_unit_ideal());
    }

    #[test]
    fn tampered_rows_are_rejected() {
        let r = zc3();
        let i = IdealCanon::principal(&r, &g_minus_one(&r));
        let mut d = i.to_data();
        assert_eq!(IdealCanon::from_data(&d).unwrap(), i);
        d.rows[0][1] = (d.rows[0][1] + 1) % 9;
        assert!(IdealCanon::from_data(&d).is_err());
    }

    #[test]
    fn annihilator_of_augmentation_ideal_is_norm() {
        let r = zc3();
        let ann = IdealCanon::principal(&r, &g_minus_one(&r)).annihilator();
        assert_eq!(ann, IdealCanon::principal(&r, &r.norm_element()));
    }

    proptest! {
        #[test]
        fn normal_form_ignores_order_and_redundancy(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let r = zc3();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let count = rng.gen_range(1..4);
            let gens: Vec<Vec<u64>> = (0..count)
                .map(|_| (0..r.dim()).map(|_| rng.gen_range(0..9)).collect())
                .collect();
            let i = IdealCanon::from_gens(&r, gens.iter());
            let mut more = gens.clone();
            more.reverse();
            more.push(r.add(&r.mul(&gens[0], &r.group_elem(1)), &gens[count - 1]));
            prop_assert_eq!(&IdealCanon::from_gens(&r, more.iter()), &i);
            let again = IdealCanon::from_gens(&r, i.rows().to_vec().iter());
            prop_assert_eq!(again, i);
        }
    }
}

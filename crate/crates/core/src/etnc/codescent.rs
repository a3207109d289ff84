//! Base change along `G -> G/H` for modules and bidual elements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ideal::{IdealCanon, IdealData};
use crate::module::{BidualContext, FPModule, ModuleData};
use crate::ring::RingHandle;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerData {
    /// Module over `R[G]`.
    pub source: ModuleData,
    /// Invariant factors of `G/H`.
    pub quotient: Vec<u64>,
    /// Image in `G/H` of each standard generator of `G`.
    pub projection: Vec<Vec<u64>>,
    pub rank: usize,
    /// Coordinates of an element of `wedge^rank` of the generators.
    pub element: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodescentReport {
    /// `pi(Fitt^j(M)) = Fitt^j(pi M)` for `j = 0, ..., b`.
    pub fitting: Vec<bool>,
    pub source_image: IdealData,
    pub target_image: IdealData,
    pub image_compatible: bool,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct Tower {
    pub source: FPModule,
    pub target_ring: RingHandle,
    images: Vec<Vec<u64>>,
    pub rank: usize,
    pub element: Vec<Vec<u64>>,
}

impl Tower {
    pub fn new(data: &TowerData) -> Result<Self> {
        let source = FPModule::from_data(&data.source)?;
        let ring = source.ring();
        if ring.has_aux() {
            return Err(Error::Input("towers are modeled for p-groups".into()));
        }
        let target_ring = RingHandle::build(ring.p(), ring.m(), ring.f(), &data.quotient)?;
        let factors = ring.factors();
        let bad = || Error::Input("incompatible tower data: the projection is not a surjective homomorphism".into());
        if data.projection.len() != factors.len()
            || data
                .projection
                .iter()
                .any(|v| v.len() != data.quotient.len() || v.iter().zip(&data.quotient).any(|(&x, &d)| x >= d))
        {
            return Err(bad());
        }
        for (img, &n) in data.projection.iter().zip(factors) {
            if img.iter().zip(&data.quotient).any(|(&x, &d)| (x * n) % d != 0) {
                return Err(bad());
            }
        }
        // group element index -> image index
        let images: Vec<Vec<u64>> = (0..ring.group_order())
            .map(|g| {
                let e = ring.group_exps(g);
                data.quotient
                    .iter()
                    .enumerate()
                    .map(|(k, &d)| e.iter().zip(&data.projection).fold(0, |acc, (&x, img)| (acc + x * img[k]) % d))
                    .collect()
            })
            .collect();
        let mut hit = vec![false; target_ring.group_order()];
        for e in &images {
            hit[target_ring.group_index(e)] = true;
        }
        if hit.iter().any(|h| !h) {
            return Err(bad());
        }
        let nsets = crate::zmod::binomial(source.ngens(), data.rank);
        if data.element.len() != nsets || data.element.iter().any(|x| x.len() != ring.dim()) {
            return Err(Error::Dimension(format!(
                "element of wedge^{} needs {nsets} coordinates",
                data.rank
            )));
        }
        Ok(Tower {
            source,
            target_ring,
            images,
            rank: data.rank,
            element: data.element.clone(),
        })
    }

    /// `pi` on coefficient vectors.
    pub fn project(&self, x: &[u64]) -> Vec<u64> {
        let src = self.source.ring();
        let tgt = &self.target_ring;
        let z = tgt.zpk();
        let f = src.f() as usize;
        let mut out = tgt.zero();
        for (g, img) in self.images.iter().enumerate() {
            let h = tgt.group_index(img);
            for k in 0..f {
                let (a, b) = (src.idx(k, g), tgt.idx(k, h));
                out[b] = z.add(out[b], x[a]);
            }
        }
        out
    }

    pub fn target(&self) -> FPModule {
        self.source.base_change(&self.target_ring, |x| self.project(x))
    }

    fn project_ideal(&self, i: &IdealCanon) -> IdealCanon {
        i.map(&self.target_ring, |x| self.project(x))
    }
}

pub fn codescent_check(tower: &Tower) -> CodescentReport {
    let target = tower.target();
    let b = tower.source.ngens();
    let fitting: Vec<bool> = (0..=b)
        .map(|j| tower.project_ideal(&tower.source.fitting_ideal(j)) == target.fitting_ideal(j))
        .collect();
    let src_ctx = BidualContext::new(&tower.source);
    let tgt_ctx = BidualContext::new(&target);
    let x = src_ctx.canonical_image(tower.rank, &tower.element);
    let px: Vec<Vec<u64>> = tower.element.iter().map(|c| tower.project(c)).collect();
    let y = tgt_ctx.canonical_image(tower.rank, &px);
    let source_image = tower.project_ideal(&src_ctx.image_ideal(&x));
    let target_image = tgt_ctx.image_ideal(&y);
    let image_compatible = source_image == target_image;
    CodescentReport {
        holds: image_compatible && fitting.iter().all(|&f| f),
        fitting,
        source_image: source_image.to_data(),
        target_image: target_image.to_data(),
        image_compatible,
    }
}

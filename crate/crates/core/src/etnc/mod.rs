//! Determinant lattices at tracked precision.
//!
//! An instance carries the shadow of a perfect complex: a free `H^1` of rank
//! `r` with a designated basis, a finite `H^2`, a trivialization `lambda` and
//! a leading term `L*`. Everything is supplied at precision `p^(m+h)`.

pub mod algebra;
pub mod artin;
pub mod codescent;
pub mod euler;
pub mod order;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::module::{minors_ideal, FPModule, ModuleData};
use crate::ring::RingHandle;
use crate::zmod::p_power_exponent;

pub use algebra::{all_orbits, orbits_of_orders, CharAlgebra, Lattice, LatticeData, Orbit, Precise};

/// `p^(-offset) * coeffs` in `Q_p[G]`, coefficients modulo `p^(m+h)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaledElem {
    pub coeffs: Vec<u64>,
    #[serde(default)]
    pub offset: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EtncData {
    /// `Z/p^m[G]`.
    pub ring: RingHandle,
    pub headroom: u32,
    pub epsilon: Vec<Orbit>,
    pub rank: usize,
    /// Rows: the integral basis of `H^1` in coordinates of the designated basis.
    pub h1_basis: Vec<Vec<ScaledElem>>,
    pub h2: ModuleData,
    pub lambda: Vec<Vec<ScaledElem>>,
    pub leading_term: ScaledElem,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    InsufficientPrecision,
}

impl Verdict {
    pub fn keyword(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::InsufficientPrecision => "INSUFFICIENT_PRECISION",
        }
    }
}

/// Everything the Bloch-Kato identity compares.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BkReport {
    pub verdict: Verdict,
    pub headroom: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_headroom: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<Precise>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<LatticeData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<LatticeData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitting: Option<LatticeData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product: Option<LatticeData>,
    /// `Z_p[G] epsilon * Xi = Z_p[G] epsilon`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tnc_integral: Option<bool>,
}

/// Lattices of one run of the identity.
#[derive(Clone, Debug)]
pub struct BkLattices {
    pub eta: Precise,
    pub image: Lattice,
    pub xi: Lattice,
    pub fitting: Lattice,
    pub product: Lattice,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct EtncInstance {
    data: EtncData,
    alg: CharAlgebra,
    h2: FPModule,
}

fn vp(n: u64, p: u64) -> u32 {
    let mut n = n;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

impl EtncInstance {
    pub fn new(data: EtncData) -> Result<Self> {
        let ring = &data.ring;
        if ring.f() != 1 || ring.has_aux() {
            return Err(Error::Input("determinant lattices are modeled over Z/p^m[G] with G a p-group".into()));
        }
        let p = ring.p();
        let m = ring.m();
        let a = vp(ring.group_order() as u64, p);
        if data.headroom < a {
            return Err(Error::InsufficientPrecision {
                have: data.headroom,
                need: a,
            });
        }
        let w = m + data.headroom;
        if (p as f64).log2() * w as f64 > 30.0 {
            return Err(Error::Bounds(format!("working precision {p}^{w} too large")));
        }
        let ring_w = ring.with_level(w)?;
        let alg = CharAlgebra::new(&ring_w, &data.epsilon)?;
        let h2 = FPModule::from_data(&data.h2)?;
        if h2.ring() != ring {
            return Err(Error::RingMismatch("H^2 lives over a different ring".into()));
        }
        // the Fitting ideal is read modulo p^W; that is faithful once p^W kills its cokernel
        let b = h2.ngens() as u32;
        let need = (m * b.max(1)).saturating_sub(m) + a;
        if data.headroom < need {
            return Err(Error::InsufficientPrecision {
                have: data.headroom,
                need,
            });
        }
        let r = data.rank;
        let square = |mat: &Vec<Vec<ScaledElem>>, what: &str| -> Result<()> {
            if mat.len() != r || mat.iter().any(|row| row.len() != r) {
                return Err(Error::Dimension(format!("{what} must be {r} x {r}")));
            }
            Ok(())
        };
        square(&data.h1_basis, "the H^1 basis")?;
        square(&data.lambda, "lambda")?;
        let modulus = ring_w.zpk().modulus();
        let all = data
            .h1_basis
            .iter()
            .chain(&data.lambda)
            .flatten()
            .chain(std::iter::once(&data.leading_term));
        for e in all {
            if e.coeffs.len() != ring.group_order() {
                return Err(Error::Dimension(format!(
                    "scaled element with {} coefficients, expected {}",
                    e.coeffs.len(),
                    ring.group_order()
                )));
            }
            if e.offset > data.headroom {
                return Err(Error::Input(format!(
                    "offset {} exceeds the headroom {}",
                    e.offset, data.headroom
                )));
            }
            if e.coeffs.iter().any(|&c| c >= modulus) {
                return Err(Error::Tamper(format!("coefficient not reduced modulo {p}^{w}")));
            }
        }
        let inst = EtncInstance { data, alg, h2 };
        // vanishing modulo p^W may disappear with more headroom
        let more = Error::InsufficientPrecision {
            have: inst.data.headroom,
            need: inst.data.headroom + 1,
        };
        for (x, what) in [
            (inst.alg.det_precise(&inst.lift_matrix(&inst.data.lambda)), "lambda"),
            (inst.alg.det_precise(&inst.lift_matrix(&inst.data.h1_basis)), "the H^1 basis"),
            (inst.lift(&inst.data.leading_term), "the leading term"),
        ] {
            match inst.alg.inverse(&x) {
                Ok(_) => {}
                Err(Error::InsufficientPrecision { .. }) => return Err(more),
                Err(_) => return Err(Error::Hypothesis(format!("{what} is not invertible on the epsilon-component"))),
            }
        }
        Ok(inst)
    }

    pub fn data(&self) -> &EtncData {
        &self.data
    }

    pub fn algebra(&self) -> &CharAlgebra {
        &self.alg
    }

    pub fn h2(&self) -> &FPModule {
        &self.h2
    }

    pub fn lift(&self, e: &ScaledElem) -> Precise {
        let coords = self.alg.project(&e.coeffs);
        self.alg.precise(coords, e.offset)
    }

    fn lift_matrix(&self, m: &[Vec<ScaledElem>]) -> Vec<Vec<Precise>> {
        m.iter().map(|row| row.iter().map(|e| self.lift(e)).collect()).collect()
    }

    /// Image in `O_S` of `Fitt^0` of `H^2` over `Z_p[G]`.
    pub fn fitting_lattice(&self) -> Result<Lattice> {
        let ring_w = self.alg.ring();
        let m = self.data.ring.m();
        let b = self.h2.ngens();
        let z = ring_w.zpk();
        let mut cols: Vec<Vec<Vec<u64>>> = self.h2.relations().to_vec();
        for i in 0..b {
            let mut c = vec![ring_w.zero(); b];
            c[i] = ring_w.scalar(z.p_pow(m));
            cols.push(c);
        }
        let ideal = minors_ideal(ring_w, &cols, b);
        self.alg.ideal_lattice(ideal.rows())
    }

    /// All lattices of the identity, or the precision error that stopped it.
    pub fn lattices(&self) -> Result<BkLattices> {
        let alg = &self.alg;
        let det_l = alg.det_precise(&self.lift_matrix(&self.data.lambda));
        let det_b = alg.det_precise(&self.lift_matrix(&self.data.h1_basis));
        let lstar = self.lift(&self.data.leading_term);
        let eta = alg.mul_precise(&lstar, &alg.inverse(&det_l)?);
        let image = alg.lambda_span(&[alg.mul_precise(&eta, &alg.inverse(&det_b)?)])?;
        let fitting = self.fitting_lattice()?;
        let c = alg.mul_precise(&alg.mul_precise(&alg.inverse(&lstar)?, &det_l), &det_b);
        let xi = alg.scale(&c, &fitting)?;
        let product = alg.product(&image, &xi)?;
        let holds = alg.lattice_eq(&product, &fitting)?;
        Ok(BkLattices {
            eta,
            image,
            xi,
            fitting,
            product,
            holds,
        })
    }

    /// The same integer data read with headroom `h`.
    pub fn with_headroom(&self, h: u32) -> Result<EtncInstance> {
        let mut data = self.data.clone();
        data.headroom = h;
        EtncInstance::new(data)
    }

    /// Least headroom above the current one at which the run completes.
    fn required_headroom(&self) -> Option<u32> {
        let p = self.data.ring.p();
        let m = self.data.ring.m();
        let max_w = (30.0 / (p as f64).log2()).floor() as u32;
        (self.data.headroom + 1..=max_w.saturating_sub(m))
            .find(|&h| self.with_headroom(h).map_or(false, |i| i.lattices().is_ok()))
    }
}

/// `Xi` against `order`: `order * Xi = order`.
pub fn tnc_check(alg: &CharAlgebra, xi: &Lattice, order: &Lattice) -> Result<bool> {
    let prod = alg.product(order, xi)?;
    alg.lattice_eq(&prod, order)
}

pub fn bk_image_check(inst: &EtncInstance) -> BkReport {
    let headroom = inst.data.headroom;
    match inst.lattices() {
        Ok(l) => {
            let alg = inst.algebra();
            let tnc = tnc_check(alg, &l.xi, &alg.group_ring_lattice()).ok();
            BkReport {
                verdict: if l.holds { Verdict::Pass } else { Verdict::Fail },
                headroom,
                required_headroom: None,
                eta: Some(l.eta),
                image: Some(l.image.to_data()),
                xi: Some(l.xi.to_data()),
                fitting: Some(l.fitting.to_data()),
                product: Some(l.product.to_data()),
                tnc_integral: tnc,
            }
        }
        Err(_) => BkReport {
            verdict: Verdict::InsufficientPrecision,
            headroom,
            required_headroom: inst.required_headroom(),
            eta: None,
            image: None,
            xi: None,
            fitting: None,
            product: None,
            tnc_integral: None,
        },
    }
}

/// Verdicts at `h` and `h + 1` agree.
pub fn headroom_stable(inst: &EtncInstance) -> Result<bool> {
    let a = bk_image_check(inst);
    let b = bk_image_check(&inst.with_headroom(inst.data.headroom + 1)?);
    Ok(a.verdict == b.verdict && a.tnc_integral == b.tnc_integral)
}

/// Checks a group order is a power of `p`; the character algebra needs it.
pub fn is_p_group(ring: &RingHandle) -> bool {
    p_power_exponent(ring.group_order() as u64, ring.p()).is_some()
}

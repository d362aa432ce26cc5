//! Additive convolutions on measures and moment sequences: monotone, Boolean,
//! orthogonal, the c-monotone and c-free pair convolutions, and the deformed
//! convolutions attached to a measure transform T.
//!
//! Every convolution runs on two tracks. The rational track works on exact
//! reciprocal Cauchy transforms of atomic measures ([`RationalMap`]) and is
//! exact; the series track works on truncated moment sequences and scales to
//! iterated convolutions.

use crate::cumulants::{cfree_extract, cfree_reconstruct, moments_from_monotone_cumulants};
use crate::measures::{AtomicMeasure, MomentSeq};
use crate::ring::{q, Q};
use crate::series::HSeries;
use crate::transforms::{
    self, compose, count_roots_below, h_of_atomic, h_series_of_rational, RationalMap,
    TransformError,
};
use num::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConvError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("transform not applicable: {0}")]
    TransformInapplicable(String),
    #[error("transform not invertible (t = 0 or u = 0)")]
    NotInvertible,
}

/// A pair (mu, nu) on the series track.
#[derive(Clone, PartialEq, Debug)]
pub struct MeasurePair {
    pub first: MomentSeq,
    pub second: MomentSeq,
}

impl MeasurePair {
    pub fn new(first: MomentSeq, second: MomentSeq) -> Self {
        let k = first.order().min(second.order());
        MeasurePair {
            first: first.truncated(k),
            second: second.truncated(k),
        }
    }

    pub fn order(&self) -> usize {
        self.first.order()
    }
}

/// A pair of reciprocal Cauchy transforms on the rational track.
#[derive(Clone, PartialEq, Debug)]
pub struct HPair {
    pub first: RationalMap,
    pub second: RationalMap,
}

impl HPair {
    pub fn of_atomic(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Self {
        HPair {
            first: h_of_atomic(mu),
            second: h_of_atomic(nu),
        }
    }
}

// ---------------------------------------------------------------------------
// Series track
// ---------------------------------------------------------------------------

fn hs(m: &MomentSeq, order: usize) -> HSeries<Q> {
    m.to_h_series(order)
}

/// H composition: mu |> nu.
pub fn monotone_convolve_moments(mu: &MomentSeq, nu: &MomentSeq) -> MomentSeq {
    let k = mu.order().min(nu.order());
    MomentSeq::from_h_series(&hs(mu, k).compose(&hs(nu, k)))
}

/// H_mu + H_nu - z.
pub fn boolean_convolve_moments(mu: &MomentSeq, nu: &MomentSeq) -> MomentSeq {
    let k = mu.order().min(nu.order());
    MomentSeq::from_h_series(&hs(mu, k).boolean_add(&hs(nu, k)))
}

/// H_mu o H_nu - H_nu + z.
pub fn orthogonal_convolve_moments(mu: &MomentSeq, nu: &MomentSeq) -> MomentSeq {
    let k = mu.order().min(nu.order());
    let hnu = hs(nu, k);
    let comp = hs(mu, k).compose(&hnu);
    let mut b = comp.b.sub(&hnu.b);
    b.c[0] = b.c[0].clone() + Q::one();
    MomentSeq::from_h_series(&HSeries { b })
}

/// Fractional Boolean power mu^{uplus u}: H = u H_mu + (1 - u) z.
pub fn boolean_power_moments(mu: &MomentSeq, u: &Q) -> MomentSeq {
    let k = mu.order();
    MomentSeq::from_h_series(&HSeries::affine(&[(u.clone(), &hs(mu, k))], k))
}

/// kappa^{u,v}(mu, nu) = mu^{uplus u} uplus nu^{uplus v}.
pub fn kappa_moments(mu: &MomentSeq, nu: &MomentSeq, u: &Q, v: &Q) -> MomentSeq {
    let k = mu.order().min(nu.order());
    MomentSeq::from_h_series(&HSeries::affine(
        &[(u.clone(), &hs(mu, k)), (v.clone(), &hs(nu, k))],
        k,
    ))
}

/// C-monotone pair convolution on the series track.
pub fn cmonotone_convolve(p1: &MeasurePair, p2: &MeasurePair) -> MeasurePair {
    let k = p1.order().min(p2.order());
    let h_mu1 = hs(&p1.first, k);
    let h_nu2 = hs(&p2.second, k);
    let h_mu2 = hs(&p2.first, k);
    // H = H_mu1 o H_nu2 + H_mu2 - H_nu2
    let mut b = h_mu1.compose(&h_nu2).b.add(&h_mu2.b).sub(&h_nu2.b);
    debug_assert!(b.c[0].is_one());
    b.c[0] = Q::one();
    let first = MomentSeq::from_h_series(&HSeries { b });
    let second = monotone_convolve_moments(&p1.second, &p2.second);
    MeasurePair::new(first, second)
}

/// C-free pair convolution (series track only): phi-series add.
pub fn cfree_convolve(p1: &MeasurePair, p2: &MeasurePair) -> MeasurePair {
    let k = p1.order().min(p2.order());
    let (rn1, rp1) = cfree_extract(
        p1.first.truncated(k).values(),
        p1.second.truncated(k).values(),
    );
    let (rn2, rp2) = cfree_extract(
        p2.first.truncated(k).values(),
        p2.second.truncated(k).values(),
    );
    let r_nu: Vec<Q> = rn1.iter().zip(&rn2).map(|(a, b)| a + b).collect();
    let r_pair: Vec<Q> = rp1.iter().zip(&rp2).map(|(a, b)| a + b).collect();
    let (m_mu, m_nu) = cfree_reconstruct(&r_pair, &r_nu);
    MeasurePair::new(MomentSeq::new(m_mu), MomentSeq::new(m_nu))
}

// ---------------------------------------------------------------------------
// Rational track
// ---------------------------------------------------------------------------

pub fn monotone_convolve_h(
    h_mu: &RationalMap,
    h_nu: &RationalMap,
) -> Result<RationalMap, ConvError> {
    Ok(compose(h_mu, h_nu)?)
}

pub fn boolean_convolve_h(h_mu: &RationalMap, h_nu: &RationalMap) -> RationalMap {
    h_mu.add(h_nu).sub(&RationalMap::ident())
}

pub fn orthogonal_convolve_h(
    h_mu: &RationalMap,
    h_nu: &RationalMap,
) -> Result<RationalMap, ConvError> {
    Ok(compose(h_mu, h_nu)?
        .sub(h_nu)
        .add(&RationalMap::ident()))
}

/// First slot of the c-monotone pair convolution:
/// H_{mu1} o H_{nu2} + H_{mu2} - H_{nu2}.
pub fn cmonotone_first_h(
    h_mu1: &RationalMap,
    h_nu2: &RationalMap,
    h_mu2: &RationalMap,
) -> Result<RationalMap, ConvError> {
    Ok(compose(h_mu1, h_nu2)?.add(h_mu2).sub(h_nu2))
}

/// Full pair operation on the rational track.
pub fn cmonotone_convolve_h(p1: &HPair, p2: &HPair) -> Result<HPair, ConvError> {
    Ok(HPair {
        first: cmonotone_first_h(&p1.first, &p2.second, &p2.first)?,
        second: monotone_convolve_h(&p1.second, &p2.second)?,
    })
}

// ---------------------------------------------------------------------------
// Measure transforms and deformed convolutions
// ---------------------------------------------------------------------------

/// Parameters of the three-parameter transform family:
/// H_{V mu} = t H_mu + (1 - t) z + (t - u) m(mu) + a sigma^2(mu).
#[derive(Clone, PartialEq, Debug)]
pub struct VParams {
    pub t: Q,
    pub u: Q,
    pub a: Q,
}

impl VParams {
    pub fn new(t: Q, u: Q, a: Q) -> Self {
        VParams { t, u, a }
    }

    pub fn identity() -> Self {
        VParams::new(Q::one(), Q::one(), Q::zero())
    }

    pub fn is_identity(&self) -> bool {
        self.t.is_one() && self.u.is_one() && self.a.is_zero()
    }
}

/// Composition law V_{t',u',a'} o V_{t,u,a} = V_{t't, u'u, u'a + a't}.
pub fn v_compose(outer: &VParams, inner: &VParams) -> VParams {
    VParams {
        t: &outer.t * &inner.t,
        u: &outer.u * &inner.u,
        a: &outer.u * &inner.a + &outer.a * &inner.t,
    }
}

/// Inverse V_{1/t, 1/u, -a/(t u)} for t > 0, u != 0.
pub fn v_invert(v: &VParams) -> Result<VParams, ConvError> {
    if v.t.is_zero() || v.u.is_zero() {
        return Err(ConvError::NotInvertible);
    }
    Ok(VParams {
        t: v.t.recip(),
        u: v.u.recip(),
        a: -&v.a / (&v.t * &v.u),
    })
}

/// Measure transforms whose graphs are closed under the c-monotone
/// convolution, giving deformed convolutions.
#[derive(Clone, PartialEq, Debug)]
pub enum Transform {
    Identity,
    /// T mu = delta_0 (the Boolean collapse).
    ToDelta0,
    /// t-transformation: H = (1 - t) z + t H_mu. Equals the Boolean power.
    Ut(Q),
    /// The three-parameter family.
    Vtua(VParams),
    /// Fermi-type map: T mu = delta_{u m(mu)}.
    Fu(Q),
    /// T mu = xi_{t sigma^2(mu)} for a monotone convolution semigroup xi
    /// given by its cumulant sequence (xi_s has cumulants s * r).
    XiT { xi_cumulants: Vec<Q>, t: Q },
}

impl Transform {
    /// Apply to a moment sequence.
    pub fn apply_moments(&self, m: &MomentSeq) -> Result<MomentSeq, ConvError> {
        let k = m.order();
        match self {
            Transform::Identity => Ok(m.clone()),
            Transform::ToDelta0 => Ok(MomentSeq::zeros(k)),
            Transform::Ut(t) => Ok(boolean_power_moments(m, t)),
            Transform::Vtua(v) => {
                if !v.a.is_zero() && k < 2 {
                    return Err(ConvError::TransformInapplicable(
                        "V_{t,u,a} with a != 0 needs the variance".into(),
                    ));
                }
                let shift = (&v.t - &v.u) * m.mean() + &v.a * m.variance();
                let h = HSeries::affine(&[(v.t.clone(), &hs(m, k))], k);
                Ok(MomentSeq::from_h_series(&h.add_constant(&shift)))
            }
            Transform::Fu(u) => {
                let loc = u * m.mean();
                Ok(AtomicMeasure::point_mass(loc).moments(k))
            }
            Transform::XiT { xi_cumulants, t } => {
                if k < 2 {
                    return Err(ConvError::TransformInapplicable(
                        "Xi transform needs the variance".into(),
                    ));
                }
                let s = t * m.variance();
                if s.is_negative() {
                    return Err(ConvError::TransformInapplicable(
                        "negative semigroup time".into(),
                    ));
                }
                let mut r: Vec<Q> = xi_cumulants.iter().map(|c| c * &s).collect();
                r.resize(k, Q::zero());
                Ok(moments_from_monotone_cumulants(&r[..k]).truncated(k))
            }
        }
    }

    /// Apply on the rational track where the image stays rational.
    pub fn apply_h(&self, h: &RationalMap) -> Result<RationalMap, ConvError> {
        match self {
            Transform::Identity => Ok(h.clone()),
            Transform::ToDelta0 => Ok(RationalMap::ident()),
            Transform::Ut(t) => {
                let one_minus = Q::one() - t;
                Ok(h.scale(t).add(&RationalMap::ident().scale(&one_minus)))
            }
            Transform::Vtua(v) => {
                let (mean, var) = mean_var_of_h(h)?;
                let shift = (&v.t - &v.u) * &mean + &v.a * &var;
                let one_minus = Q::one() - &v.t;
                Ok(h
                    .scale(&v.t)
                    .add(&RationalMap::ident().scale(&one_minus))
                    .add_constant(&shift))
            }
            Transform::Fu(u) => {
                let (mean, _) = mean_var_of_h(h)?;
                Ok(RationalMap::shift(&(u * &mean)))
            }
            Transform::XiT { .. } => Err(ConvError::TransformInapplicable(
                "semigroup images are not rational maps".into(),
            )),
        }
    }
}

fn mean_var_of_h(h: &RationalMap) -> Result<(Q, Q), ConvError> {
    let hs = h_series_of_rational(h, 2).ok_or_else(|| {
        ConvError::TransformInapplicable("not an H-type rational map".into())
    })?;
    let b = hs.b_coeffs();
    Ok((-b[1].clone(), -b[2].clone()))
}

/// Deformed convolution on the series track:
/// H_{mu |>_T nu} = H_mu o H_{T nu} + H_nu - H_{T nu}.
pub fn deformed_convolve_moments(
    t: &Transform,
    mu: &MomentSeq,
    nu: &MomentSeq,
) -> Result<MomentSeq, ConvError> {
    let k = mu.order().min(nu.order());
    let tnu = t.apply_moments(&nu.truncated(k))?;
    let h_tnu = hs(&tnu, k);
    let mut b = hs(&mu.truncated(k), k)
        .compose(&h_tnu)
        .b
        .add(&hs(&nu.truncated(k), k).b)
        .sub(&h_tnu.b);
    b.c[0] = Q::one();
    Ok(MomentSeq::from_h_series(&HSeries { b }))
}

/// Deformed convolution on the rational track.
pub fn deformed_convolve_h(
    t: &Transform,
    h_mu: &RationalMap,
    h_nu: &RationalMap,
) -> Result<RationalMap, ConvError> {
    let h_tnu = t.apply_h(h_nu)?;
    Ok(compose(h_mu, &h_tnu)?.add(h_nu).sub(&h_tnu))
}

/// Associativity report for a deformed convolution.
#[derive(Clone, Debug, Default)]
pub struct AssociativityReport {
    pub checked: usize,
    pub graph_failures: usize,
    pub triple_failures: usize,
}

impl AssociativityReport {
    pub fn passed(&self) -> bool {
        self.graph_failures == 0 && self.triple_failures == 0
    }
}

/// Checks T(mu |>_T nu) = T mu |> T nu and the triple-product associativity
/// on the series track for the supplied sample triples.
pub fn check_t_associativity(
    t: &Transform,
    samples: &[(MomentSeq, MomentSeq, MomentSeq)],
) -> Result<AssociativityReport, ConvError> {
    let mut report = AssociativityReport::default();
    for (mu, nu, lam) in samples {
        report.checked += 1;
        let conv = deformed_convolve_moments(t, mu, nu)?;
        let lhs = t.apply_moments(&conv)?;
        let rhs = monotone_convolve_moments(&t.apply_moments(mu)?, &t.apply_moments(nu)?);
        if lhs != rhs {
            report.graph_failures += 1;
        }
        let left = deformed_convolve_moments(t, &conv, lam)?;
        let right = deformed_convolve_moments(t, mu, &deformed_convolve_moments(t, nu, lam)?)?;
        if left != right {
            report.triple_failures += 1;
        }
    }
    Ok(report)
}

/// Which cone is being tested for closure.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cone {
    /// Measures supported in [0, inf).
    Nonnegative,
    /// Symmetric measures.
    Symmetric,
}

#[derive(Clone, Debug)]
pub struct ConeReport {
    pub cone: Cone,
    pub checked: usize,
    pub violations: usize,
    pub predicted_closed: bool,
}

impl ConeReport {
    /// Observation matches the parameter criterion.
    pub fn consistent(&self) -> bool {
        if self.predicted_closed {
            self.violations == 0
        } else {
            self.violations > 0
        }
    }
}

/// Exact cone test on the rational track: the result measure of
/// mu |>_{V} nu has an atom in (-inf, 0) iff the numerator of its H has a
/// strictly negative real root (Sturm count); symmetry is H(-z) = -H(z)
/// as reduced rational maps.
pub fn check_cone_preservation(
    v: &VParams,
    cone: Cone,
    samples: &[(AtomicMeasure, AtomicMeasure)],
) -> Result<ConeReport, ConvError> {
    let t = Transform::Vtua(v.clone());
    let predicted_closed = match cone {
        Cone::Nonnegative => v.u >= v.t && v.a.is_zero(),
        Cone::Symmetric => v.a.is_zero(),
    };
    let mut violations = 0usize;
    let mut checked = 0usize;
    for (mu, nu) in samples {
        let in_cone = match cone {
            Cone::Nonnegative => mu.is_nonnegative() && nu.is_nonnegative(),
            Cone::Symmetric => mu.is_symmetric() && nu.is_symmetric(),
        };
        if !in_cone {
            continue;
        }
        checked += 1;
        let h = deformed_convolve_h(&t, &h_of_atomic(mu), &h_of_atomic(nu))?;
        let violated = match cone {
            Cone::Nonnegative => {
                let num = h.num();
                let below_or_zero = count_roots_below(num, &q(0));
                let at_zero = num.eval_q(&q(0)).is_zero() as usize;
                below_or_zero - at_zero > 0
            }
            Cone::Symmetric => {
                let reflected = h.reflect().scale(&q(-1));
                reflected != h
            }
        };
        if violated {
            violations += 1;
        }
    }
    Ok(ConeReport {
        cone,
        checked,
        violations,
        predicted_closed,
    })
}

/// Exact mean/variance additivity data for mu |>_T nu, read off the series.
pub fn mean_variance_of(m: &MomentSeq) -> (Q, Q) {
    (m.mean(), m.variance())
}

pub use transforms::RecoveredMeasure;

//! Distribution representations: finitely atomic measures, named closed-form
//! laws and truncated moment sequences. Everything here is exact.

use crate::ring::{fmt_q, q, qr, Coeff, Q};
use crate::series::{HSeries, Series};
use num::Signed;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("Cauchy law has no moments")]
    CauchyHasNoMoments,
    #[error("dilation scale must be positive")]
    NonpositiveScale,
    #[error("invalid atomic measure: {0}")]
    InvalidAtoms(String),
    #[error("invalid law parameter: {0}")]
    InvalidParameter(String),
}

/// Finitely many atoms (location, weight); weights positive and summing to
/// one, locations distinct and sorted ascending.
#[derive(Clone, PartialEq, Debug)]
pub struct AtomicMeasure {
    atoms: Vec<(Q, Q)>,
}

impl AtomicMeasure {
    pub fn new(mut atoms: Vec<(Q, Q)>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::InvalidAtoms("no atoms".into()));
        }
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        for w in atoms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(MeasureError::InvalidAtoms(format!(
                    "duplicate location {}",
                    fmt_q(&w[0].0)
                )));
            }
        }
        let mut mass = Q::zero();
        for (_, w) in &atoms {
            if !w.is_positive() {
                return Err(MeasureError::InvalidAtoms("nonpositive weight".into()));
            }
            mass += w;
        }
        if mass != q(1) {
            return Err(MeasureError::InvalidAtoms(format!(
                "total mass {} != 1",
                fmt_q(&mass)
            )));
        }
        Ok(AtomicMeasure { atoms })
    }

    /// Point mass at a rational location.
    pub fn point_mass(x: Q) -> Self {
        AtomicMeasure {
            atoms: vec![(x, Q::one())],
        }
    }

    /// The symmetric two-point law (delta_{-c} + delta_c)/2.
    pub fn symmetric_bernoulli(c: Q) -> Self {
        AtomicMeasure::new(vec![(-c.clone(), qr(1, 2)), (c, qr(1, 2))]).unwrap()
    }

    pub fn atoms(&self) -> &[(Q, Q)] {
        &self.atoms
    }

    pub fn is_point_mass_at_zero(&self) -> bool {
        self.atoms.len() == 1 && self.atoms[0].0.is_zero()
    }

    /// Power sums sum_i w_i x_i^n for n = 1..K.
    pub fn moments(&self, order: usize) -> MomentSeq {
        let mut vals = Vec::with_capacity(order);
        let mut powers: Vec<Q> = self.atoms.iter().map(|_| Q::one()).collect();
        for _ in 0..order {
            let mut m = Q::zero();
            for (i, (x, w)) in self.atoms.iter().enumerate() {
                powers[i] = &powers[i] * x;
                m += w * &powers[i];
            }
            vals.push(m);
        }
        MomentSeq::new(vals)
    }

    /// Dilation x -> lambda x.
    pub fn dilate(&self, lambda: &Q) -> Result<Self, MeasureError> {
        if !lambda.is_positive() {
            return Err(MeasureError::NonpositiveScale);
        }
        Ok(AtomicMeasure {
            atoms: self.atoms.iter().map(|(x, w)| (x * lambda, w.clone())).collect(),
        })
    }

    pub fn mean(&self) -> Q {
        self.atoms.iter().map(|(x, w)| x * w).sum()
    }

    pub fn variance(&self) -> Q {
        let m = self.mean();
        let m2: Q = self.atoms.iter().map(|(x, w)| x * x * w).sum();
        m2 - &m * &m
    }

    /// Support contained in [0, inf).
    pub fn is_nonnegative(&self) -> bool {
        self.atoms.iter().all(|(x, _)| !x.is_negative())
    }

    /// Symmetric about the origin (locations and weights paired).
    pub fn is_symmetric(&self) -> bool {
        let n = self.atoms.len();
        for i in 0..n {
            let (x, w) = &self.atoms[i];
            let (y, v) = &self.atoms[n - 1 - i];
            if &(-x.clone()) != y || w != v {
                return false;
            }
        }
        true
    }
}

/// Exact truncated moment sequence m_1..m_K; m_0 is implicitly 1.
#[derive(Clone, PartialEq, Debug)]
pub struct MomentSeq {
    values: Vec<Q>,
}

impl MomentSeq {
    pub fn new(values: Vec<Q>) -> Self {
        MomentSeq { values }
    }

    pub fn zeros(order: usize) -> Self {
        MomentSeq {
            values: vec![Q::zero(); order],
        }
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    /// m_n for 1 <= n <= K.
    pub fn m(&self, n: usize) -> &Q {
        &self.values[n - 1]
    }

    pub fn truncated(&self, order: usize) -> Self {
        let mut v = self.values.clone();
        v.truncate(order);
        MomentSeq { values: v }
    }

    pub fn mean(&self) -> Q {
        self.values.first().cloned().unwrap_or_else(Q::zero)
    }

    pub fn variance(&self) -> Q {
        let m1 = self.mean();
        let m2 = self.values.get(1).cloned().unwrap_or_else(Q::zero);
        m2 - &m1 * &m1
    }

    /// m_n -> lambda^n m_n.
    pub fn dilate(&self, lambda: &Q) -> Result<Self, MeasureError> {
        if !lambda.is_positive() {
            return Err(MeasureError::NonpositiveScale);
        }
        let mut pow = Q::one();
        let values = self
            .values
            .iter()
            .map(|m| {
                pow = &pow * lambda;
                m * &pow
            })
            .collect();
        Ok(MomentSeq { values })
    }

    /// Moment series with m_0 = 1 in slot 0, over any coefficient ring.
    pub fn to_series<K: Coeff>(&self, order: usize) -> Series<K> {
        let mut s = Series::one(order);
        for i in 1..=order.min(self.values.len()) {
            s.c[i] = K::from_q(&self.values[i - 1]);
        }
        s
    }

    pub fn to_h_series(&self, order: usize) -> HSeries<Q> {
        HSeries::from_moment_series(&self.to_series(order))
    }

    pub fn from_h_series(h: &HSeries<Q>) -> Self {
        let m = h.moment_series();
        MomentSeq {
            values: m.c[1..].to_vec(),
        }
    }
}

/// Closed-form laws used by the limit theorems.
#[derive(Clone, PartialEq, Debug)]
pub enum NamedLaw {
    /// Centered arcsine law with variance beta2; H = sqrt(z^2 - 2 beta2).
    Arcsine { beta2: Q },
    /// Kesten law: the t-transform U_r of the arcsine law, r = alpha2/beta2,
    /// H = (1 - r) z + r sqrt(z^2 - 2 beta2). Second moment alpha2.
    Kesten { alpha2: Q, beta2: Q },
    /// Monotone Poisson law with rate rho (moments only; no closed form).
    MonotonePoisson { rho: Q },
    /// Cauchy law with scale b; carries no moments.
    Cauchy { b: Q },
}

impl NamedLaw {
    pub fn arcsine(beta2: Q) -> Result<Self, MeasureError> {
        if !beta2.is_positive() {
            return Err(MeasureError::InvalidParameter("arcsine variance".into()));
        }
        Ok(NamedLaw::Arcsine { beta2 })
    }

    /// Kesten law in the (alpha2, beta2) parameterization.
    pub fn kesten(alpha2: Q, beta2: Q) -> Result<Self, MeasureError> {
        if !alpha2.is_positive() || !beta2.is_positive() {
            return Err(MeasureError::InvalidParameter("kesten variances".into()));
        }
        Ok(NamedLaw::Kesten { alpha2, beta2 })
    }

    /// Kesten law in the (sigma2, r) parameterization: U_r applied to the
    /// arcsine law of variance sigma2. Normalizes to (alpha2, beta2) via
    /// alpha2 = r * sigma2, beta2 = sigma2.
    pub fn kesten_sigma_r(sigma2: Q, r: Q) -> Result<Self, MeasureError> {
        if !sigma2.is_positive() || !r.is_positive() {
            return Err(MeasureError::InvalidParameter("kesten (sigma2, r)".into()));
        }
        Ok(NamedLaw::Kesten {
            alpha2: &r * &sigma2,
            beta2: sigma2,
        })
    }

    pub fn monotone_poisson(rho: Q) -> Result<Self, MeasureError> {
        if !rho.is_positive() {
            return Err(MeasureError::InvalidParameter("poisson rate".into()));
        }
        Ok(NamedLaw::MonotonePoisson { rho })
    }

    /// Exact moments by series expansion of the closed-form transform at
    /// infinity (square roots expanded with rational binomial coefficients);
    /// the monotone Poisson moments come from its constant cumulant sequence.
    pub fn moments(&self, order: usize) -> Result<MomentSeq, MeasureError> {
        match self {
            NamedLaw::Arcsine { beta2 } => {
                Ok(MomentSeq::from_h_series(&arcsine_h_series(beta2, order)))
            }
            NamedLaw::Kesten { alpha2, beta2 } => {
                let r = alpha2 / beta2;
                let arc = arcsine_h_series(beta2, order);
                let h = HSeries::affine(&[(r, &arc)], order);
                Ok(MomentSeq::from_h_series(&h))
            }
            NamedLaw::MonotonePoisson { rho } => {
                let r: Vec<Q> = vec![rho.clone(); order];
                Ok(crate::cumulants::moments_from_monotone_cumulants(&r))
            }
            NamedLaw::Cauchy { .. } => Err(MeasureError::CauchyHasNoMoments),
        }
    }
}

/// H-series of the arcsine law: sqrt(z^2 - 2 beta2) = z (1 - 2 beta2 w^2)^{1/2}.
pub fn arcsine_h_series(beta2: &Q, order: usize) -> HSeries<Q> {
    let mut u = Series::zero(order);
    if order >= 2 {
        u.c[2] = -q(2) * beta2;
    }
    HSeries {
        b: Series::pow_one_plus(&u, &qr(1, 2)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qv(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| q(x)).collect()
    }

    #[test]
    fn point_mass_at_zero_moments() {
        let m = AtomicMeasure::point_mass(q(0)).moments(4);
        assert_eq!(m.values(), qv(&[0, 0, 0, 0]).as_slice());
    }

    #[test]
    fn bernoulli_moments() {
        let m = AtomicMeasure::symmetric_bernoulli(q(1)).moments(4);
        assert_eq!(m.values(), qv(&[0, 1, 0, 1]).as_slice());
    }

    #[test]
    fn two_atom_hand_check() {
        // (1/4) delta_0 + (3/4) delta_2: power sums by hand.
        let mu = AtomicMeasure::new(vec![(q(0), qr(1, 4)), (q(2), qr(3, 4))]).unwrap();
        let m = mu.moments(2);
        assert_eq!(m.values(), &[qr(3, 2), q(3)]);
    }

    #[test]
    fn atomic_validation() {
        assert!(AtomicMeasure::new(vec![(q(0), qr(1, 2))]).is_err());
        assert!(AtomicMeasure::new(vec![(q(0), qr(1, 2)), (q(0), qr(1, 2))]).is_err());
        assert!(AtomicMeasure::new(vec![(q(0), q(2)), (q(1), q(-1))]).is_err());
    }

    #[test]
    fn arcsine_moment_expansion() {
        let law = NamedLaw::arcsine(q(1)).unwrap();
        let m = law.moments(4).unwrap();
        assert_eq!(m.values(), &[q(0), q(1), q(0), qr(3, 2)]);
        // Variance beta2 shows up as the second moment.
        let m2 = NamedLaw::arcsine(qr(5, 3)).unwrap().moments(2).unwrap();
        assert_eq!(m2.m(2), &qr(5, 3));
    }

    #[test]
    fn kesten_with_equal_variances_is_arcsine() {
        let k = NamedLaw::kesten(q(1), q(1)).unwrap().moments(6).unwrap();
        let a = NamedLaw::arcsine(q(1)).unwrap().moments(6).unwrap();
        assert_eq!(k, a);
    }

    #[test]
    fn kesten_two_parameterizations_agree() {
        // (alpha2, beta2) = (r sigma2, sigma2)
        let a = NamedLaw::kesten(qr(3, 2), qr(1, 2)).unwrap();
        let b = NamedLaw::kesten_sigma_r(qr(1, 2), q(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.moments(6).unwrap(), b.moments(6).unwrap());
    }

    #[test]
    fn kesten_second_and_fourth_moments() {
        // m_2 = alpha2, m_4 = alpha2 beta2 / 2 + alpha2^2.
        let alpha2 = qr(2, 3);
        let beta2 = qr(5, 4);
        let m = NamedLaw::kesten(alpha2.clone(), beta2.clone())
            .unwrap()
            .moments(4)
            .unwrap();
        assert_eq!(m.m(2), &alpha2);
        assert_eq!(m.m(4), &(&alpha2 * &beta2 / q(2) + &alpha2 * &alpha2));
    }

    #[test]
    fn cauchy_has_no_moments() {
        let c = NamedLaw::Cauchy { b: q(1) };
        assert_eq!(c.moments(2).unwrap_err(), MeasureError::CauchyHasNoMoments);
    }

    #[test]
    fn dilate_scales_moments() {
        let m = MomentSeq::new(qv(&[0, 1, 0, 1]));
        let d = m.dilate(&qr(1, 2)).unwrap();
        assert_eq!(d.values(), &[q(0), qr(1, 4), q(0), qr(1, 16)]);
        assert!(m.dilate(&q(0)).is_err());

        let mu = AtomicMeasure::point_mass(q(1)).dilate(&q(2)).unwrap();
        assert_eq!(mu, AtomicMeasure::point_mass(q(2)));
    }

    #[test]
    fn dilate_round_trip_identity() {
        let m = MomentSeq::new(vec![qr(1, 3), qr(7, 5), q(-2), qr(11, 8)]);
        let lam = qr(7, 3);
        let back = m.dilate(&lam).unwrap().dilate(&lam.recip()).unwrap();
        assert_eq!(back, m);
        assert_eq!(m.dilate(&q(1)).unwrap(), m);
    }

    #[test]
    fn moments_linear_in_weights_and_even_nonneg_when_symmetric() {
        // mixing two measures on the same support mixes their moments
        let a = AtomicMeasure::new(vec![(q(-1), qr(1, 4)), (q(2), qr(3, 4))]).unwrap();
        let b = AtomicMeasure::new(vec![(q(-1), qr(2, 3)), (q(2), qr(1, 3))]).unwrap();
        let mix = AtomicMeasure::new(vec![(q(-1), qr(1, 4) * qr(1, 2) + qr(2, 3) * qr(1, 2)),
                                          (q(2), qr(3, 4) * qr(1, 2) + qr(1, 3) * qr(1, 2))])
            .unwrap();
        for n in 1..=5 {
            let expect = (a.moments(5).m(n) + b.moments(5).m(n)) * qr(1, 2);
            assert_eq!(mix.moments(5).m(n), &expect);
        }
        let sym = AtomicMeasure::new(vec![
            (qr(-3, 2), qr(1, 3)),
            (q(0), qr(1, 3)),
            (qr(3, 2), qr(1, 3)),
        ])
        .unwrap();
        let m = sym.moments(8);
        for n in [2usize, 4, 6, 8] {
            assert!(!m.m(n).is_negative());
        }
    }

    #[test]
    fn symmetry_and_cone_predicates() {
        assert!(AtomicMeasure::symmetric_bernoulli(q(2)).is_symmetric());
        assert!(!AtomicMeasure::point_mass(q(1)).is_symmetric());
        assert!(AtomicMeasure::point_mass(q(0)).is_symmetric());
        assert!(AtomicMeasure::new(vec![(q(0), qr(1, 2)), (q(3), qr(1, 2))])
            .unwrap()
            .is_nonnegative());
        assert!(!AtomicMeasure::symmetric_bernoulli(q(1)).is_nonnegative());
    }
}

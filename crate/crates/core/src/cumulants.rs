//! Cumulant calculi: monotone, Boolean, free, c-free and c-monotone pair
//! cumulants, the generic convolution-cumulant extractor, and the relation
//! between c-monotone and c-free pair cumulants.
//!
//! The production path for c-monotone cumulants integrates the recursive
//! differential system for the moment evolution polynomials m_n(t) exactly
//! (polynomials in t over the coefficient ring); the partition-sum track in
//! [`crate::partitions`] is kept as an independent cross-check.

use crate::measures::MomentSeq;
use crate::partitions;
use crate::ring::{q, Coeff, MPoly, Poly1, Q};
use crate::series::Series;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CumulantError {
    #[error("moment growth is not polynomial in the convolution power")]
    NonPolynomialGrowth,
    #[error("cumulant relation solve produced an inconsistent system")]
    InconsistentSystem,
    #[error("need cumulants up to order {0}, got {1}")]
    InsufficientOrder(usize, usize),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Flavor {
    Monotone,
    Boolean,
    Free,
    CFreePair,
    CMonotonePair,
}

/// A cumulant sequence r_1..r_K; pair flavors carry the companion
/// single-measure cumulants of the second component.
#[derive(Clone, PartialEq, Debug)]
pub struct CumulantSeq {
    pub flavor: Flavor,
    pub values: Vec<Q>,
    pub companion: Option<Vec<Q>>,
}

/// Output of the pair recursion: cumulants plus the moment evolution
/// polynomials m_n(mu, nu, t) (index n-1, exact in t).
#[derive(Clone, PartialEq, Debug)]
pub struct PairRecursion<K: Coeff> {
    pub r_pair: Vec<K>,
    pub r_nu: Vec<K>,
    pub m_polys: Vec<Poly1<K>>,
}

/// Known part of dm_n/dt given everything below order n. `m_polys[k]` is
/// m_k(t) with m_polys[0] = 1.
fn pair_rhs_known<K: Coeff>(
    n: usize,
    r_nu: &[K],
    r_pair: &[K],
    m_polys: &[Poly1<K>],
) -> Poly1<K> {
    let mut conv: Vec<Poly1<K>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Poly1::zero();
        for l in 0..=k {
            acc = acc.add(&m_polys[l].mul(&m_polys[k - l]));
        }
        conv.push(acc);
    }
    let mut rhs = Poly1::zero();
    for k in 0..n {
        let a = m_polys[k].scale(&q((k + 1) as i64));
        let term = a.sub(&conv[k]);
        // (k+1) m_k - sum m_l m_{k-l}, weighted by r_{n-k}(nu)
        let mut scaled = Poly1::zero();
        for (i, c) in term.coeffs.iter().enumerate() {
            let mut coef = scaled.coeffs;
            while coef.len() <= i {
                coef.push(K::zero());
            }
            coef[i] = coef[i].add(&c.mul(&r_nu[n - k - 1]));
            scaled = Poly1 { coeffs: coef };
        }
        rhs = rhs.add(&scaled);
    }
    for k in 1..n {
        let mut scaled = Poly1::zero();
        for (i, c) in conv[k].coeffs.iter().enumerate() {
            let mut coef = scaled.coeffs;
            while coef.len() <= i {
                coef.push(K::zero());
            }
            coef[i] = coef[i].add(&c.mul(&r_pair[n - k - 1]));
            scaled = Poly1 { coeffs: coef };
        }
        rhs = rhs.add(&scaled);
    }
    rhs
}

/// Extract c-monotone pair cumulants from target moments: order by order,
/// m_n(t) = r_n t + integral of the known right-hand side, with r_n chosen
/// so that m_n(1) equals the target moment. Triangular, always solvable.
pub fn cmonotone_extract<K: Coeff>(m_mu: &[K], m_nu: &[K]) -> PairRecursion<K> {
    let order = m_mu.len().min(m_nu.len());
    let r_nu = monotone_extract(&m_nu[..order]).r_pair;
    let mut r_pair: Vec<K> = Vec::with_capacity(order);
    let mut m_polys: Vec<Poly1<K>> = vec![Poly1::constant(K::one())];
    for n in 1..=order {
        let rhs = pair_rhs_known(n, &r_nu, &r_pair, &m_polys);
        let integrated = rhs.integrate();
        let r_n = m_mu[n - 1].sub(&integrated.eval_one());
        let mut poly = integrated;
        while poly.coeffs.len() < 2 {
            poly.coeffs.push(K::zero());
        }
        poly.coeffs[1] = poly.coeffs[1].add(&r_n);
        r_pair.push(r_n);
        m_polys.push(poly);
    }
    PairRecursion {
        r_pair,
        r_nu,
        m_polys: m_polys[1..].to_vec(),
    }
}

/// Reconstruct moments of the first component from pair cumulants and the
/// monotone cumulants of the second component (the forward recursion).
pub fn cmonotone_reconstruct<K: Coeff>(r_pair: &[K], r_nu: &[K]) -> Vec<K> {
    let order = r_pair.len().min(r_nu.len());
    let mut m_polys: Vec<Poly1<K>> = vec![Poly1::constant(K::one())];
    let mut moments = Vec::with_capacity(order);
    for n in 1..=order {
        let rhs = pair_rhs_known(n, r_nu, r_pair, &m_polys);
        let mut poly = rhs.integrate();
        while poly.coeffs.len() < 2 {
            poly.coeffs.push(K::zero());
        }
        poly.coeffs[1] = poly.coeffs[1].add(&r_pair[n - 1]);
        moments.push(poly.eval_one());
        m_polys.push(poly);
    }
    moments
}

/// Monotone cumulants: the diagonal of the pair recursion, where the second
/// and third sums cancel.
pub fn monotone_extract<K: Coeff>(m: &[K]) -> PairRecursion<K> {
    let order = m.len();
    let mut r: Vec<K> = Vec::with_capacity(order);
    let mut m_polys: Vec<Poly1<K>> = vec![Poly1::constant(K::one())];
    for n in 1..=order {
        // dm_n/dt = sum_{k=0}^{n-1} (k+1) r_{n-k} m_k(t); unknown at k = 0.
        let mut rhs = Poly1::zero();
        for k in 1..n {
            let mut scaled = Poly1::zero();
            for (i, c) in m_polys[k].coeffs.iter().enumerate() {
                let mut coef = scaled.coeffs;
                while coef.len() <= i {
                    coef.push(K::zero());
                }
                coef[i] = coef[i].add(&c.mul(&r[n - k - 1]).scale(&q((k + 1) as i64)));
                scaled = Poly1 { coeffs: coef };
            }
            rhs = rhs.add(&scaled);
        }
        let integrated = rhs.integrate();
        let r_n = m[n - 1].sub(&integrated.eval_one());
        let mut poly = integrated;
        while poly.coeffs.len() < 2 {
            poly.coeffs.push(K::zero());
        }
        poly.coeffs[1] = poly.coeffs[1].add(&r_n);
        r.push(r_n);
        m_polys.push(poly);
    }
    PairRecursion {
        r_nu: r.clone(),
        r_pair: r,
        m_polys: m_polys[1..].to_vec(),
    }
}

/// Moments from monotone cumulants (forward diagonal recursion).
pub fn moments_from_monotone_cumulants(r: &[Q]) -> MomentSeq {
    MomentSeq::new(cmonotone_reconstruct(r, r))
}

/// C-monotone pair cumulants of (mu, nu).
pub fn cmonotone_cumulants(m_mu: &MomentSeq, m_nu: &MomentSeq) -> CumulantSeq {
    let data = cmonotone_extract(m_mu.values(), m_nu.values());
    CumulantSeq {
        flavor: Flavor::CMonotonePair,
        values: data.r_pair,
        companion: Some(data.r_nu),
    }
}

/// Monotone cumulants: c-monotone with nu = mu.
pub fn monotone_cumulants(m: &MomentSeq) -> CumulantSeq {
    let data = cmonotone_extract(m.values(), m.values());
    CumulantSeq {
        flavor: Flavor::Monotone,
        values: data.r_pair,
        companion: None,
    }
}

/// Boolean cumulants: c-monotone with nu = delta_0.
pub fn boolean_cumulants(m: &MomentSeq) -> CumulantSeq {
    let zeros = vec![Q::zero(); m.order()];
    let data = cmonotone_extract(m.values(), &zeros);
    CumulantSeq {
        flavor: Flavor::Boolean,
        values: data.r_pair,
        companion: None,
    }
}

/// The moment evolution polynomials m_n(mu, nu, t).
pub fn pair_moment_polynomials(m_mu: &MomentSeq, m_nu: &MomentSeq) -> Vec<Poly1<Q>> {
    cmonotone_extract(m_mu.values(), m_nu.values()).m_polys
}

/// Free cumulants of nu and c-free pair cumulants of (mu, nu), solved from
/// the transform functional equations order by order.
///
/// With b-coefficients of H and the substitution tau = w M_nu(w), the
/// equations read -sum b_{j+1}(mu) w^j = sum_n R_n(mu, nu) tau^{n-1} and the
/// same with mu = nu for the free cumulants; both are triangular.
pub fn cfree_extract<K: Coeff>(m_mu: &[K], m_nu: &[K]) -> (Vec<K>, Vec<K>) {
    let order = m_mu.len().min(m_nu.len());
    let tau_pows = tau_powers(m_nu, order);
    let r_nu = solve_phi(m_nu, &tau_pows, order);
    let r_pair = solve_phi(m_mu, &tau_pows, order);
    (r_nu, r_pair)
}

fn moment_series<K: Coeff>(m: &[K], order: usize) -> Series<K> {
    let mut s = Series::one(order);
    for i in 1..=order.min(m.len()) {
        s.c[i] = m[i - 1].clone();
    }
    s
}

/// Powers tau^0 .. tau^{order-1} of tau = w M_nu(w), each truncated at
/// w^{order-1} (all we ever read).
fn tau_powers<K: Coeff>(m_nu: &[K], order: usize) -> Vec<Series<K>> {
    let trunc = order.saturating_sub(1);
    let tau = moment_series(m_nu, trunc).shift_up();
    let mut pows = Vec::with_capacity(order);
    pows.push(Series::one(trunc));
    for _ in 1..order {
        let prev = pows.last().unwrap();
        pows.push(prev.mul(&tau));
    }
    pows
}

fn solve_phi<K: Coeff>(m: &[K], tau_pows: &[Series<K>], order: usize) -> Vec<K> {
    // L_j = -b_{j+1}(m-side); R_{j+1} = L_j - sum_{n<=j} R_n [w^j] tau^{n-1}.
    let b = {
        let ms = moment_series(m, order);
        ms.recip()
    };
    let mut r: Vec<K> = Vec::with_capacity(order);
    for j in 0..order {
        let mut val = b.c[j + 1].neg();
        for (nm1, rn) in r.iter().enumerate() {
            // term R_{nm1+1} * [w^j] tau^{nm1}
            if j <= tau_pows[nm1].order() {
                val = val.sub(&rn.mul(&tau_pows[nm1].c[j]));
            }
        }
        r.push(val);
    }
    r
}

/// Moments of (mu, nu) from free cumulants of nu and c-free pair cumulants.
pub fn cfree_reconstruct<K: Coeff>(r_pair: &[K], r_nu: &[K]) -> (Vec<K>, Vec<K>) {
    let order = r_pair.len().min(r_nu.len());
    // Solve nu first: b_{j+1}(nu) = -(R_{j+1}(nu) + lower), with tau built
    // from the moments known so far (higher slots never affect [w^j]).
    let mut m_nu: Vec<K> = vec![K::zero(); order];
    for j in 0..order {
        let tau_pows = tau_powers(&m_nu, order);
        let mut rhs = K::zero();
        for n in 1..=j + 1 {
            if j <= tau_pows[n - 1].order() {
                rhs = rhs.add(&r_nu[n - 1].mul(&tau_pows[n - 1].c[j]));
            }
        }
        // b_{j+1}(nu) = -rhs; convert to moments incrementally:
        // maintain the b-vector, then recompute the moment series.
        let mut b = moment_series(&m_nu, order).recip();
        b.c[j + 1] = rhs.neg();
        let ms = b.recip();
        m_nu[j] = ms.c[j + 1].clone();
    }
    // Then mu against the fixed tau of nu.
    let tau_pows = tau_powers(&m_nu, order);
    let mut b_mu = Series::one(order);
    for j in 0..order {
        let mut rhs = K::zero();
        for n in 1..=j + 1 {
            if j <= tau_pows[n - 1].order() {
                rhs = rhs.add(&r_pair[n - 1].mul(&tau_pows[n - 1].c[j]));
            }
        }
        b_mu.c[j + 1] = rhs.neg();
    }
    let m_mu = b_mu.recip().c[1..].to_vec();
    (m_mu, m_nu)
}

/// Free cumulants and c-free pair cumulants as [`CumulantSeq`] values.
pub fn free_and_cfree_cumulants(m_mu: &MomentSeq, m_nu: &MomentSeq) -> (CumulantSeq, CumulantSeq) {
    let (r_nu, r_pair) = cfree_extract(m_mu.values(), m_nu.values());
    (
        CumulantSeq {
            flavor: Flavor::Free,
            values: r_nu.clone(),
            companion: None,
        },
        CumulantSeq {
            flavor: Flavor::CFreePair,
            values: r_pair,
            companion: Some(r_nu),
        },
    )
}

// Variable layout for the formal cumulant relation solve.
const VAR_CFREE_BASE: u32 = 1000; // X_k = R_k(mu, nu)
const VAR_NU_MOMENT_BASE: u32 = 2000; // Y_k = m_k(nu)

/// Polynomials P_{n,k}(m_1(nu), ..., m_{n-k}(nu)) with
/// r_n = R_n + sum_{k=2}^{n-1} P_{n,k} R_k, solved with formal
/// indeterminates. Returns `p[n-1][k-1] = P_{n,k}` (zero outside the stated
/// range, identity coefficient at k = n).
pub fn cmonotone_vs_cfree(order: usize) -> Result<Vec<Vec<MPoly>>, CumulantError> {
    let x = |k: usize| MPoly::var(VAR_CFREE_BASE + k as u32);
    let y_vars: Vec<MPoly> = (1..=order)
        .map(|k| MPoly::var(VAR_NU_MOMENT_BASE + k as u32))
        .collect();
    // Free cumulants of the formal nu.
    let (r_nu_free, _) = cfree_extract(&y_vars, &y_vars);
    // Express the moments of mu through formal c-free pair cumulants.
    let xs: Vec<MPoly> = (1..=order).map(x).collect();
    let mut m_mu: Vec<MPoly> = Vec::with_capacity(order);
    for n in 1..=order {
        let val = partitions::eval_cfree_formula(&xs, &r_nu_free, n)
            .expect("order within cap");
        m_mu.push(val);
    }
    // C-monotone cumulants of the same formal pair.
    let data = cmonotone_extract(&m_mu, &y_vars);
    let is_x = |v: u32| (VAR_CFREE_BASE..VAR_NU_MOMENT_BASE).contains(&v);
    let mut table = vec![vec![<MPoly as Coeff>::zero(); order]; order];
    for n in 1..=order {
        let split = data.r_pair[n - 1].split_by(is_x);
        for (xmono, cofactor) in split {
            if xmono.is_unit() {
                if !cofactor.is_zero() {
                    return Err(CumulantError::InconsistentSystem);
                }
                continue;
            }
            // must be a single X_k to the first power
            if xmono.0.len() != 1 || xmono.0[0].1 != 1 {
                return Err(CumulantError::InconsistentSystem);
            }
            let k = (xmono.0[0].0 - VAR_CFREE_BASE) as usize;
            if k == n {
                if cofactor != <MPoly as Coeff>::one() {
                    return Err(CumulantError::InconsistentSystem);
                }
                continue;
            }
            if k < 2 || k >= n {
                return Err(CumulantError::InconsistentSystem);
            }
            // cofactor may involve only Y_1..Y_{n-k}
            let ok = cofactor.monomials_all(|m| {
                m.0.iter().all(|&(v, _)| {
                    v > VAR_NU_MOMENT_BASE && (v - VAR_NU_MOMENT_BASE) as usize <= n - k
                })
            });
            if !ok {
                return Err(CumulantError::InconsistentSystem);
            }
            table[n - 1][k - 1] = cofactor;
        }
    }
    Ok(table)
}

/// Cumulants of a black-box power-associative convolution via exact Lagrange
/// interpolation of m_n(mu^{conv N}) in N and differentiation at N = 0.
pub fn generic_cumulants(
    conv: &dyn Fn(&MomentSeq, &MomentSeq) -> MomentSeq,
    m: &MomentSeq,
    order: usize,
) -> Result<Vec<Q>, CumulantError> {
    let k = order.min(m.order());
    // powers 0..k+1 (the last one validates polynomial extrapolation)
    let mut powers: Vec<MomentSeq> = Vec::with_capacity(k + 2);
    powers.push(MomentSeq::zeros(m.order()));
    powers.push(m.clone());
    for _ in 2..=(k + 1) {
        let next = conv(powers.last().unwrap(), m);
        powers.push(next);
    }
    let mut out = Vec::with_capacity(k);
    for n in 1..=k {
        let ys: Vec<Q> = (0..=n).map(|big_n| powers[big_n].m(n).clone()).collect();
        let poly = lagrange_coeffs(&ys);
        // check degree-n polynomial extrapolates exactly to N = n + 1
        let predicted = eval_poly_at(&poly, &q((n + 1) as i64));
        if &predicted != powers[n + 1].m(n) {
            return Err(CumulantError::NonPolynomialGrowth);
        }
        out.push(poly.get(1).cloned().unwrap_or_else(Q::zero));
    }
    Ok(out)
}

/// Exact interpolation through (0, ys[0]), (1, ys[1]), ...; returns the
/// coefficient vector (little-endian) of the unique polynomial.
fn lagrange_coeffs(ys: &[Q]) -> Vec<Q> {
    // Newton divided differences on nodes 0..n, then expansion.
    let n = ys.len();
    let mut dd: Vec<Q> = ys.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            let num = &dd[i] - &dd[i - 1];
            dd[i] = num / q(level as i64);
        }
    }
    // expand sum_j dd[j] * prod_{i<j} (x - i)
    let mut coeffs = vec![Q::zero(); n];
    let mut basis = vec![Q::zero(); n];
    basis[0] = q(1);
    let mut basis_len = 1usize;
    for (j, c) in dd.iter().enumerate() {
        for i in 0..basis_len {
            coeffs[i] = &coeffs[i] + &(c * &basis[i]);
        }
        if j + 1 < n {
            // basis *= (x - j)
            let node = q(j as i64);
            let mut next = vec![Q::zero(); basis_len + 1];
            for i in 0..basis_len {
                next[i + 1] = &next[i + 1] + &basis[i];
                next[i] = &next[i] - &(&basis[i] * &node);
            }
            basis_len += 1;
            basis[..basis_len].clone_from_slice(&next[..basis_len]);
        }
    }
    coeffs
}

fn eval_poly_at(coeffs: &[Q], x: &Q) -> Q {
    let mut acc = Q::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Axiom verdicts for a cumulant extractor against a convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AxiomReport {
    pub power_additive: bool,
    pub c2_prime: bool,
    pub homogeneous: bool,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.power_additive && self.c2_prime && self.homogeneous
    }
}

/// Checks (C1) on the samples, (C2') and homogeneity (K2) symbolically.
pub fn verify_axioms(
    conv: &dyn Fn(&MomentSeq, &MomentSeq) -> MomentSeq,
    extract: &dyn Fn(&MomentSeq) -> Vec<Q>,
    extract_formal: &dyn Fn(&[MPoly]) -> Vec<MPoly>,
    samples: &[MomentSeq],
    order: usize,
) -> AxiomReport {
    AxiomReport {
        power_additive: samples
            .iter()
            .all(|m| check_power_additivity(conv, extract, m, 5)),
        c2_prime: check_c2_prime(extract_formal, order),
        homogeneous: check_homogeneity(extract_formal, &|v| v, order),
    }
}

/// Power additivity (C1): r_n(mu^{conv N}) = N r_n(mu) for N <= max_n,
/// exact, for the supplied extractor.
pub fn check_power_additivity(
    conv: &dyn Fn(&MomentSeq, &MomentSeq) -> MomentSeq,
    extract: &dyn Fn(&MomentSeq) -> Vec<Q>,
    m: &MomentSeq,
    max_n: usize,
) -> bool {
    let base = extract(m);
    let mut acc = m.clone();
    for big_n in 2..=max_n {
        acc = conv(&acc, m);
        let r = extract(&acc);
        for (rn, bn) in r.iter().zip(base.iter()) {
            if rn != &(bn * q(big_n as i64)) {
                return false;
            }
        }
    }
    true
}

/// (C2'): run the extractor on formal moment indeterminates and verify
/// r_n = m_n + Q_n where Q_n has no constant and no linear terms.
pub fn check_c2_prime(extract_formal: &dyn Fn(&[MPoly]) -> Vec<MPoly>, order: usize) -> bool {
    let vars: Vec<MPoly> = (1..=order).map(|k| MPoly::var(k as u32)).collect();
    let rs = extract_formal(&vars);
    for (n, r) in rs.iter().enumerate() {
        let rest = Coeff::sub(r, &vars[n]);
        if !rest.monomials_all(|m| m.0.iter().map(|&(_, e)| e).sum::<u32>() >= 2) {
            return false;
        }
    }
    true
}

/// Homogeneity (K2): every monomial of r_n has weighted degree n when m_k
/// carries weight k. `weight_of` maps a variable id to its moment order.
pub fn check_homogeneity(
    extract_formal: &dyn Fn(&[MPoly]) -> Vec<MPoly>,
    weight_of: &dyn Fn(u32) -> u32,
    order: usize,
) -> bool {
    let vars: Vec<MPoly> = (1..=order).map(|k| MPoly::var(k as u32)).collect();
    let rs = extract_formal(&vars);
    for (n, r) in rs.iter().enumerate() {
        let want = (n + 1) as u32;
        if !r.monomials_all(|m| m.weighted_degree(weight_of) == want) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::qr;

    fn ms(v: Vec<Q>) -> MomentSeq {
        MomentSeq::new(v)
    }

    #[test]
    fn low_order_pair_cumulants() {
        let m_mu = ms(vec![q(2), q(7), q(31), q(120)]);
        let m_nu = ms(vec![q(-1), q(3), q(5), q(11)]);
        let c = cmonotone_cumulants(&m_mu, &m_nu);
        assert_eq!(c.values[0], q(2));
        assert_eq!(c.values[1], q(7) - q(4));
        // r_3 = m_3 - 2 m_2 m_1 - (1/2) m_1(nu)(m_2 - m_1^2) + m_1^3
        let expect = q(31) - q(2) * q(7) * q(2) - qr(1, 2) * q(-1) * (q(7) - q(4)) + q(8);
        assert_eq!(c.values[2], expect);
    }

    #[test]
    fn arcsine_monotone_cumulants() {
        let m = ms(vec![q(0), q(1), q(0), qr(3, 2)]);
        let c = monotone_cumulants(&m);
        assert_eq!(c.values, vec![q(0), q(1), q(0), q(0)]);
    }

    #[test]
    fn bernoulli_monotone_cumulants() {
        let m = ms(vec![q(0), q(1), q(0), q(1)]);
        let c = monotone_cumulants(&m);
        assert_eq!(c.values, vec![q(0), q(1), q(0), qr(-1, 2)]);
    }

    #[test]
    fn boolean_cumulants_of_point_mass_and_bernoulli() {
        let a = qr(5, 3);
        let delta = crate::measures::AtomicMeasure::point_mass(a.clone()).moments(4);
        let c = boolean_cumulants(&delta);
        assert_eq!(c.values, vec![a, q(0), q(0), q(0)]);

        let b = boolean_cumulants(&ms(vec![q(0), q(1), q(0), q(1)]));
        assert_eq!(b.values, vec![q(0), q(1), q(0), q(0)]);
    }

    #[test]
    fn boolean_cumulants_equal_negated_b_coefficients() {
        let m = vec![qr(1, 2), q(3), qr(-7, 3), q(4), qr(9, 5)];
        let c = boolean_cumulants(&ms(m.clone()));
        let b = crate::series::b_from_moments(&m);
        let negb: Vec<Q> = b.iter().map(|x| -x).collect();
        assert_eq!(c.values, negb);
    }

    #[test]
    fn moment_polynomial_linear_coefficient_is_the_cumulant() {
        let m_mu = ms(vec![q(1), q(4), q(2), q(9), q(3), q(-5)]);
        let m_nu = ms(vec![q(-2), q(5), q(1), q(7), q(0), q(2)]);
        let data = cmonotone_extract(m_mu.values(), m_nu.values());
        for (n, poly) in data.m_polys.iter().enumerate() {
            assert_eq!(poly.coeff(1), data.r_pair[n], "t-coefficient at n={}", n + 1);
            assert_eq!(poly.eval_one(), m_mu.values()[n].clone());
            assert_eq!(poly.coeff(0), Q::zero());
        }
    }

    #[test]
    fn pair_recursion_matches_partition_sum() {
        let m_mu = ms(vec![q(1), q(3), q(-2), q(8), q(5), q(13)]);
        let m_nu = ms(vec![q(2), q(6), q(1), q(-4), q(9), q(0)]);
        let data = cmonotone_extract(m_mu.values(), m_nu.values());
        for n in 1..=6 {
            let viaparts =
                partitions::eval_cmonotone_formula(&data.r_pair, &data.r_nu, n).unwrap();
            assert_eq!(&viaparts, m_mu.m(n), "n = {n}");
        }
    }

    #[test]
    fn reconstruct_inverts_extract() {
        let m_mu = ms(vec![qr(1, 2), q(3), qr(5, 7), q(-1), q(4), qr(3, 2)]);
        let m_nu = ms(vec![q(1), qr(7, 4), q(0), q(2), q(-3), q(6)]);
        let data = cmonotone_extract(m_mu.values(), m_nu.values());
        let back = cmonotone_reconstruct(&data.r_pair, &data.r_nu);
        assert_eq!(back, m_mu.values());
    }

    #[test]
    fn cfree_third_cumulant_formula() {
        let m_mu = vec![q(2), q(7), q(31)];
        let m_nu = vec![q(-1), q(3), q(5)];
        let (_, r_pair) = cfree_extract(&m_mu, &m_nu);
        // R_3 = m_3 - 2 m_2 m_1 - m_1(nu)(m_2 - m_1^2) + m_1^3
        let expect = q(31) - q(28) - q(-1) * q(3) + q(8);
        assert_eq!(r_pair[2], expect);
        assert_eq!(r_pair[0], q(2));
        assert_eq!(r_pair[1], q(3));
    }

    #[test]
    fn cfree_reduces_to_free_and_boolean() {
        // mu = nu: pair cumulants are the free cumulants.
        let m = vec![q(1), q(3), q(8), q(21), q(55), q(144)];
        let (r_nu, r_pair) = cfree_extract(&m, &m);
        assert_eq!(r_nu, r_pair);
        // free moment formula round trip over NC(n)
        for n in 1..=6 {
            let viaparts = partitions::eval_cfree_formula(&r_pair, &r_nu, n).unwrap();
            assert_eq!(viaparts, m[n - 1], "n = {n}");
        }
        // nu = delta_0: c-free pair cumulants become Boolean cumulants.
        let zeros = vec![Q::zero(); 6];
        let (_, r_b) = cfree_extract(&m, &zeros);
        let bool_c = boolean_cumulants(&ms(m.clone()));
        assert_eq!(r_b, bool_c.values);
    }

    #[test]
    fn cfree_formula_reconstructs_pair_moments() {
        // the partition formula over NC(n) with (R(mu,nu), R(nu)) recovers
        // the moments of mu for a genuinely distinct pair
        let m_mu = vec![q(2), q(7), q(31), q(120), q(485)];
        let m_nu = vec![q(-1), q(3), q(5), q(11), q(41)];
        let (r_nu, r_pair) = cfree_extract(&m_mu, &m_nu);
        for n in 1..=5 {
            let viaparts = partitions::eval_cfree_formula(&r_pair, &r_nu, n).unwrap();
            assert_eq!(viaparts, m_mu[n - 1], "n = {n}");
        }
    }

    #[test]
    fn cfree_reconstruct_round_trip() {
        let m_mu = vec![q(1), q(2), q(3), q(4), q(5)];
        let m_nu = vec![q(-1), q(1), q(-1), q(1), q(-1)];
        let (r_nu, r_pair) = cfree_extract(&m_mu, &m_nu);
        let (back_mu, back_nu) = cfree_reconstruct(&r_pair, &r_nu);
        assert_eq!(back_mu, m_mu);
        assert_eq!(back_nu, m_nu);
    }

    #[test]
    fn semicircle_fourth_moment_from_free_cumulants() {
        // free cumulants (0, 1, 0, 0) -> m_4 = 2
        let (m_mu, _) = cfree_reconstruct(
            &[q(0), q(1), q(0), q(0)],
            &[q(0), q(1), q(0), q(0)],
        );
        assert_eq!(m_mu, vec![q(0), q(1), q(0), q(2)]);
    }

    #[test]
    fn relation_p32_is_half_m1() {
        let table = cmonotone_vs_cfree(4).unwrap();
        let y1 = MPoly::var(VAR_NU_MOMENT_BASE + 1);
        assert_eq!(table[2][1], y1.scale(&qr(1, 2)));
        // r_1, r_2 carry no correction terms
        assert!(table[0].iter().all(|p| p.is_zero()));
        assert!(table[1].iter().all(|p| p.is_zero()));
    }

    #[test]
    fn generic_cumulants_reproduce_monotone_and_boolean() {
        use crate::pair_convolutions::{boolean_convolve_moments, monotone_convolve_moments};
        let m = ms(vec![q(1), q(3), q(2), q(7), q(-1), q(4)]);
        let gen_mono = generic_cumulants(&|a, b| monotone_convolve_moments(a, b), &m, 6).unwrap();
        assert_eq!(gen_mono, monotone_cumulants(&m).values);
        let gen_bool = generic_cumulants(&|a, b| boolean_convolve_moments(a, b), &m, 6).unwrap();
        assert_eq!(gen_bool, boolean_cumulants(&m).values);
    }

    #[test]
    fn generic_cumulants_detect_non_polynomial_growth() {
        // A fake "convolution" with multiplicative second moment blows the
        // polynomial interpolation check.
        let weird = |a: &MomentSeq, b: &MomentSeq| {
            let mut v = vec![a.m(1) + b.m(1)];
            if a.order() >= 2 {
                v.push(a.m(2) * b.m(2) + q(1));
                for n in 3..=a.order() {
                    v.push(a.m(n) + b.m(n));
                }
            }
            MomentSeq::new(v)
        };
        let m = ms(vec![q(1), q(2), q(1), q(1)]);
        assert_eq!(
            generic_cumulants(&weird, &m, 4).unwrap_err(),
            CumulantError::NonPolynomialGrowth
        );
    }

    #[test]
    fn axioms_for_cmonotone_cumulants() {
        // (C2') and homogeneity for the diagonal (monotone) extractor.
        let extract = |m: &[MPoly]| monotone_extract(m).r_pair;
        assert!(check_c2_prime(&extract, 6));
        assert!(check_homogeneity(&extract, &|v| v, 6));
    }

    #[test]
    fn axiom_report_for_monotone_convolution() {
        use crate::pair_convolutions::monotone_convolve_moments;
        let conv = |a: &MomentSeq, b: &MomentSeq| monotone_convolve_moments(a, b);
        let extract = |m: &MomentSeq| monotone_extract(m.values()).r_pair;
        let extract_formal = |m: &[MPoly]| monotone_extract(m).r_pair;
        let samples = vec![
            ms(vec![q(0), q(1), q(0), q(1), q(0), q(1)]),
            ms(vec![q(1), q(2), q(4), q(9), q(21), q(51)]),
        ];
        let report = verify_axioms(&conv, &extract, &extract_formal, &samples, 6);
        assert!(report.all_pass(), "{report:?}");
    }

    #[test]
    fn pair_cumulant_axioms_k2_k3() {
        // Formal pair extraction: mu moments are vars 1..K, nu moments are
        // vars 101..100+K.
        let order = 6;
        let mu_vars: Vec<MPoly> = (1..=order).map(|k| MPoly::var(k as u32)).collect();
        let nu_vars: Vec<MPoly> = (1..=order).map(|k| MPoly::var(100 + k as u32)).collect();
        let data = cmonotone_extract(&mu_vars, &nu_vars);
        let weight = |v: u32| if v > 100 { v - 100 } else { v };
        for (n0, r) in data.r_pair.iter().enumerate() {
            let n = n0 + 1;
            // (K2): every monomial has weighted degree n
            assert!(
                r.monomials_all(|m| m.weighted_degree(weight) == n as u32),
                "homogeneity fails at n = {n}"
            );
            // (K3): r_n = m_n(mu) + Q_n with Q_n over orders <= n-1
            let rest = Coeff::sub(r, &mu_vars[n0]);
            assert!(
                rest.monomials_all(|m| m
                    .0
                    .iter()
                    .all(|&(v, _)| (weight(v) as usize) < n)),
                "(K3) fails at n = {n}"
            );
        }
    }

    #[test]
    fn deformed_cumulants_from_generic_extractor() {
        // The cumulants of |>_T are r_n(mu, T mu): the black-box extractor
        // over the deformed convolution must agree, and they satisfy (C1).
        use crate::pair_convolutions::{deformed_convolve_moments, Transform, VParams};
        let t = Transform::Vtua(VParams::new(qr(3, 2), qr(1, 2), qr(1, 4)));
        let conv = {
            let t = t.clone();
            move |a: &MomentSeq, b: &MomentSeq| deformed_convolve_moments(&t, a, b).unwrap()
        };
        let m = ms(vec![q(1), q(3), q(2), q(7), q(-1), q(4)]);
        let generic = generic_cumulants(&conv, &m, 6).unwrap();
        let t_mom = t.apply_moments(&m).unwrap();
        let direct = cmonotone_extract(m.values(), t_mom.values()).r_pair;
        assert_eq!(generic, direct);
        // (C1) for the same extractor
        let extract = {
            let t = t.clone();
            move |m: &MomentSeq| {
                let tm = t.apply_moments(m).unwrap();
                cmonotone_extract(m.values(), tm.values()).r_pair
            }
        };
        assert!(check_power_additivity(&conv, &extract, &m, 5));
    }

    #[test]
    fn flow_consistency_as_formal_series() {
        // H(t+s, z) = H(t, H_nu(s, z)) - H_nu(s, z) + H(s, z) as truncated
        // series in 1/z with exact polynomial coefficients in (t, s).
        use crate::series::{HSeries, Series};
        const T: u32 = 500;
        const S: u32 = 501;
        let order = 5;
        let m_mu = vec![q(1), q(3), q(-2), q(8), q(5)];
        let m_nu = vec![q(2), q(6), q(1), q(-4), q(9)];
        let data = cmonotone_extract(&m_mu, &m_nu);
        let nu_data = monotone_extract(&m_nu);

        // moment polynomials evaluated at a polynomial time argument
        let at = |poly: &Poly1<Q>, time: &MPoly| -> MPoly {
            let mut acc = <MPoly as Coeff>::zero();
            for c in poly.coeffs.iter().rev() {
                acc = Coeff::add(&Coeff::mul(&acc, time), &MPoly::constant(c.clone()));
            }
            acc
        };
        let h_of = |polys: &[Poly1<Q>], time: &MPoly| -> HSeries<MPoly> {
            let mut m = Series::<MPoly>::one(order);
            for (i, p) in polys.iter().enumerate() {
                m.c[i + 1] = at(p, time);
            }
            HSeries::from_moment_series(&m)
        };
        let t = MPoly::var(T);
        let s = MPoly::var(S);
        let t_plus_s = Coeff::add(&t, &s);

        let lhs = h_of(&data.m_polys, &t_plus_s);
        let h_t = h_of(&data.m_polys, &t);
        let h_s = h_of(&data.m_polys, &s);
        let f_s = h_of(&nu_data.m_polys, &s);
        let mut rhs_b = h_t.compose(&f_s).b.add(&h_s.b).sub(&f_s.b);
        rhs_b.c[0] = <MPoly as Coeff>::one();
        assert_eq!(lhs.b, rhs_b);
    }
}

//! Reciprocal Cauchy transforms: exact rational maps for atomic measures,
//! Nevanlinna/finite-variance representations, Stieltjes inversion with
//! Richardson extrapolation, atom location, and closed-form analytic
//! expression trees with the fixed branch conventions.

use crate::measures::AtomicMeasure;
use crate::ring::{sign_q, Q};
use crate::series::{HSeries, Series};
use num::complex::Complex64;
use num::{BigInt, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("composition degree {0} exceeds cap {1}")]
    DegreeOverflow(usize, usize),
    #[error("not a reciprocal Cauchy transform of a probability measure: {0}")]
    NotAProbabilityH(String),
    #[error("transform does not have finite variance form")]
    NotFiniteVariance,
    #[error("Richardson ladder did not converge (last delta {0:e})")]
    NonconvergentLadder(f64),
    #[error("no sign change in the supplied interval")]
    NoSignChange,
    #[error("argument within 1e-14 of a branch cut")]
    BranchCutHit,
    #[error("evaluation error: {0}")]
    Eval(String),
}

pub const DEGREE_CAP: usize = 256;

/// Dense univariate polynomial with rational coefficients, little-endian,
/// no trailing zeros.
#[derive(Clone, PartialEq, Debug)]
pub struct Poly {
    pub c: Vec<Q>,
}

impl Poly {
    pub fn new(mut c: Vec<Q>) -> Self {
        while matches!(c.last(), Some(x) if x.is_zero()) {
            c.pop();
        }
        Poly { c }
    }

    pub fn zero() -> Self {
        Poly { c: Vec::new() }
    }

    pub fn constant(x: Q) -> Self {
        Poly::new(vec![x])
    }

    pub fn ident() -> Self {
        Poly::new(vec![Q::zero(), Q::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn leading(&self) -> Q {
        self.c.last().cloned().unwrap_or_else(Q::zero)
    }

    pub fn coeff(&self, i: usize) -> Q {
        self.c.get(i).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add(&self, rhs: &Poly) -> Poly {
        let n = self.c.len().max(rhs.c.len());
        Poly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }

    pub fn sub(&self, rhs: &Poly) -> Poly {
        let n = self.c.len().max(rhs.c.len());
        Poly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }

    pub fn neg(&self) -> Poly {
        Poly::new(self.c.iter().map(|x| -x).collect())
    }

    pub fn mul(&self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Q::zero(); self.c.len() + rhs.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.c.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: &Q) -> Poly {
        Poly::new(self.c.iter().map(|x| x * s).collect())
    }

    /// Euclidean division: (quotient, remainder).
    pub fn divrem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut r = self.clone();
        let mut qc = vec![Q::zero(); self.c.len().saturating_sub(d.c.len()) + 1];
        let dlead = d.leading();
        while !r.is_zero() && r.degree() >= d.degree() {
            let shift = r.degree() - d.degree();
            let factor = r.leading() / &dlead;
            qc[shift] = qc[shift].clone() + &factor;
            // r -= factor * x^shift * d
            let mut sub = vec![Q::zero(); shift];
            sub.extend(d.c.iter().map(|x| x * &factor));
            r = r.sub(&Poly::new(sub));
        }
        (Poly::new(qc), r)
    }

    pub fn gcd(&self, rhs: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = rhs.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            let lead = a.leading();
            a.scale(&lead.recip())
        }
    }

    pub fn derivative(&self) -> Poly {
        if self.c.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.c[1..]
                .iter()
                .enumerate()
                .map(|(i, x)| x * Q::from_integer(BigInt::from(i as i64 + 1)))
                .collect(),
        )
    }

    pub fn eval_q(&self, x: &Q) -> Q {
        let mut acc = Q::zero();
        for c in self.c.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.c.iter().rev() {
            acc = acc * x + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    pub fn eval_c64(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.c.iter().rev() {
            acc = acc * z + Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0);
        }
        acc
    }

    /// p(-x) as a polynomial.
    pub fn reflect(&self) -> Poly {
        Poly::new(
            self.c
                .iter()
                .enumerate()
                .map(|(i, x)| if i % 2 == 1 { -x } else { x.clone() })
                .collect(),
        )
    }
}

/// Reduced rational function num/den with monic denominator.
#[derive(Clone, PartialEq, Debug)]
pub struct RationalMap {
    num: Poly,
    den: Poly,
}

impl RationalMap {
    pub fn new(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        // Coprimality over F_p certifies coprimality over Q and skips the
        // expensive rational Euclidean sequence on large compositions.
        let reduced = if num.is_zero() || coprime_mod_p(&num, &den) {
            (num, den)
        } else {
            let g = num.gcd(&den);
            if g.degree() > 0 {
                (num.divrem(&g).0, den.divrem(&g).0)
            } else {
                (num, den)
            }
        };
        let (mut num, mut den) = reduced;
        let lead = den.leading();
        if !lead.is_one() {
            let inv = lead.recip();
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        RationalMap { num, den }
    }

    pub fn ident() -> Self {
        RationalMap {
            num: Poly::ident(),
            den: Poly::constant(Q::one()),
        }
    }

    /// z - a.
    pub fn shift(a: &Q) -> Self {
        RationalMap {
            num: Poly::new(vec![-a.clone(), Q::one()]),
            den: Poly::constant(Q::one()),
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn add(&self, rhs: &RationalMap) -> RationalMap {
        RationalMap::new(
            self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
    }

    pub fn sub(&self, rhs: &RationalMap) -> RationalMap {
        RationalMap::new(
            self.num.mul(&rhs.den).sub(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
    }

    pub fn scale(&self, s: &Q) -> RationalMap {
        RationalMap::new(self.num.scale(s), self.den.clone())
    }

    pub fn add_constant(&self, s: &Q) -> RationalMap {
        RationalMap::new(self.num.add(&self.den.scale(s)), self.den.clone())
    }

    pub fn eval_q(&self, x: &Q) -> Option<Q> {
        let d = self.den.eval_q(x);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval_q(x) / d)
        }
    }

    pub fn eval_c64(&self, z: Complex64) -> Complex64 {
        self.num.eval_c64(z) / self.den.eval_c64(z)
    }

    pub fn eval_f64(&self, x: f64) -> Option<f64> {
        let d = self.den.eval_f64(x);
        if d == 0.0 {
            None
        } else {
            Some(self.num.eval_f64(x) / d)
        }
    }

    /// Derivative as a rational map.
    pub fn derivative(&self) -> RationalMap {
        let n = self.num.derivative().mul(&self.den);
        let m = self.num.mul(&self.den.derivative());
        RationalMap::new(n.sub(&m), self.den.mul(&self.den))
    }

    /// f(-z).
    pub fn reflect(&self) -> RationalMap {
        RationalMap::new(self.num.reflect(), self.den.reflect())
    }

    pub fn degree(&self) -> usize {
        self.num.degree().max(self.den.degree())
    }
}

/// Reduce a rational-coefficient polynomial to integers modulo p.
/// None if a denominator or the leading coefficient vanishes mod p.
fn poly_mod_p(p: &Poly, modulus: u64) -> Option<Vec<u64>> {
    let m = BigInt::from(modulus);
    let mut out = Vec::with_capacity(p.c.len());
    for c in &p.c {
        let den = num::Integer::mod_floor(c.denom(), &m);
        let den = den.to_u64()?;
        if den == 0 {
            return None;
        }
        let num_red = num::Integer::mod_floor(c.numer(), &m).to_u64()?;
        let inv = mod_inverse(den, modulus)?;
        out.push(mul_mod(num_red, inv, modulus));
    }
    if *out.last()? == 0 {
        return None;
    }
    Some(out)
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, a as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(((t % m as i128 + m as i128) % m as i128) as u64)
}

fn gcd_degree_mod_p(mut a: Vec<u64>, mut b: Vec<u64>, m: u64) -> usize {
    let trim = |v: &mut Vec<u64>| {
        while matches!(v.last(), Some(0)) {
            v.pop();
        }
    };
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        // a mod b
        let lead_inv = mod_inverse(*b.last().unwrap(), m).unwrap();
        while a.len() >= b.len() && !a.is_empty() {
            let shift = a.len() - b.len();
            let factor = mul_mod(*a.last().unwrap(), lead_inv, m);
            for (i, &bc) in b.iter().enumerate() {
                let sub = mul_mod(factor, bc, m);
                let idx = i + shift;
                a[idx] = (a[idx] + m - sub) % m;
            }
            trim(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
        trim(&mut b);
    }
    a.len().saturating_sub(1)
}

/// True when the two polynomials are provably coprime over the rationals
/// (their images mod a prime are coprime with preserved degrees).
fn coprime_mod_p(a: &Poly, b: &Poly) -> bool {
    if a.degree() == 0 || b.degree() == 0 {
        return true;
    }
    for &p in &[4294967291u64, 4294967279, 4294967231] {
        if let (Some(am), Some(bm)) = (poly_mod_p(a, p), poly_mod_p(b, p)) {
            return gcd_degree_mod_p(am, bm, p) == 0;
        }
    }
    false
}

/// H of a finitely atomic measure: the reciprocal of G = sum w_i/(z - x_i).
/// Exact; deg num = deg den + 1 with leading ratio 1.
pub fn h_of_atomic(mu: &AtomicMeasure) -> RationalMap {
    // denominator of G: prod (z - x_i); numerator: sum w_i prod_{j != i}
    let atoms = mu.atoms();
    let mut d = Poly::constant(Q::one());
    for (x, _) in atoms {
        d = d.mul(&Poly::new(vec![-x.clone(), Q::one()]));
    }
    let mut n = Poly::zero();
    for (i, (_, w)) in atoms.iter().enumerate() {
        let mut p = Poly::constant(w.clone());
        for (j, (x, _)) in atoms.iter().enumerate() {
            if j != i {
                p = p.mul(&Poly::new(vec![-x.clone(), Q::one()]));
            }
        }
        n = n.add(&p);
    }
    RationalMap::new(d, n)
}

/// Exact composition f(g(z)) with a degree cap.
pub fn compose(f: &RationalMap, g: &RationalMap) -> Result<RationalMap, TransformError> {
    let deg_bound = f.degree() * g.degree();
    if deg_bound > DEGREE_CAP {
        return Err(TransformError::DegreeOverflow(deg_bound, DEGREE_CAP));
    }
    // P(N/D) = sum p_i N^i D^{dp-i} over D^{dp}, same for Q; combine.
    let (n, d) = (&g.num, &g.den);
    let dp = f.num.degree();
    let dq = f.den.degree();
    let dm = dp.max(dq);
    let homog = |p: &Poly, dtop: usize| -> Poly {
        let mut acc = Poly::zero();
        // powers of n and d
        let mut npow = vec![Poly::constant(Q::one())];
        for _ in 0..dtop {
            npow.push(npow.last().unwrap().mul(n));
        }
        let mut dpow = vec![Poly::constant(Q::one())];
        for _ in 0..dm {
            dpow.push(dpow.last().unwrap().mul(d));
        }
        for (i, ci) in p.c.iter().enumerate() {
            if ci.is_zero() {
                continue;
            }
            let term = npow[i].mul(&dpow[dm - i]).scale(ci);
            acc = acc.add(&term);
        }
        acc
    };
    let num = homog(&f.num, dp);
    let den = homog(&f.den, dq);
    Ok(RationalMap::new(num, den))
}

/// Laurent expansion at infinity of an H-type map (deg num = deg den + 1):
/// H(z) = z (1 + b_1/z + b_2/z^2 + ...). Returns the b-series.
pub fn h_series_of_rational(h: &RationalMap, order: usize) -> Option<HSeries<Q>> {
    if h.num.degree() != h.den.degree() + 1 {
        return None;
    }
    // reverse coefficients: p(w) = w^dp P(1/w), q(w) = w^dq Q(1/w)
    let rev = |p: &Poly, order: usize| -> Series<Q> {
        let mut s = Series::zero(order);
        for i in 0..=order.min(p.degree()) {
            s.c[i] = p.coeff(p.degree() - i);
        }
        s
    };
    let p = rev(&h.num, order);
    let qs = rev(&h.den, order);
    let lead = qs.c[0].clone();
    if lead.is_zero() {
        return None;
    }
    let qn = qs.scale(&lead.recip());
    let inv = qn.recip().scale(&lead.recip());
    let b = p.mul(&inv);
    if b.c[0] != Q::one() {
        return None;
    }
    Some(HSeries { b })
}

/// Exact truncated moments of the measure represented by an H-type map.
pub fn moments_of_h(h: &RationalMap, order: usize) -> Option<Vec<Q>> {
    let hs = h_series_of_rational(h, order)?;
    Some(hs.moment_series().c[1..].to_vec())
}

// ---------------------------------------------------------------------------
// Sturm chains and root extraction
// ---------------------------------------------------------------------------

fn sturm_chain(p: &Poly) -> Vec<Poly> {
    let mut chain = vec![p.clone(), p.derivative()];
    loop {
        let len = chain.len();
        if chain[len - 1].is_zero() {
            chain.pop();
            break;
        }
        let (_, r) = chain[len - 2].divrem(&chain[len - 1]);
        if r.is_zero() {
            break;
        }
        chain.push(r.neg());
    }
    chain
}

fn variations_at(chain: &[Poly], x: &Q) -> usize {
    let mut signs = Vec::new();
    for p in chain {
        let s = sign_q(&p.eval_q(x));
        if s != 0 {
            signs.push(s);
        }
    }
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn variations_at_inf(chain: &[Poly], positive: bool) -> usize {
    let mut signs = Vec::new();
    for p in chain {
        if p.is_zero() {
            continue;
        }
        let mut s = sign_q(&p.leading());
        if !positive && p.degree() % 2 == 1 {
            s = -s;
        }
        signs.push(s);
    }
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of distinct real roots in (a, b].
pub fn count_roots_between(p: &Poly, a: &Q, b: &Q) -> usize {
    let chain = sturm_chain(p);
    variations_at(&chain, a) - variations_at(&chain, b)
}

/// Number of distinct real roots in (-inf, b].
pub fn count_roots_below(p: &Poly, b: &Q) -> usize {
    let chain = sturm_chain(p);
    variations_at_inf(&chain, false) - variations_at(&chain, b)
}

/// Total number of distinct real roots.
pub fn count_real_roots(p: &Poly) -> usize {
    let chain = sturm_chain(p);
    variations_at_inf(&chain, false) - variations_at_inf(&chain, true)
}

/// Cauchy root bound: 1 + max |a_i| / |a_n|.
fn root_bound(p: &Poly) -> Q {
    let lead = p.leading().abs();
    let mut mx = Q::zero();
    for c in &p.c[..p.c.len() - 1] {
        let a = c.abs() / &lead;
        if a > mx {
            mx = a;
        }
    }
    mx + Q::one()
}

/// Isolating intervals (a, b], one distinct real root each.
pub fn isolate_real_roots(p: &Poly) -> Vec<(Q, Q)> {
    if p.degree() == 0 {
        return Vec::new();
    }
    let chain = sturm_chain(p);
    let bound = root_bound(p);
    let mut stack = vec![(-bound.clone(), bound.clone())];
    let mut out = Vec::new();
    while let Some((a, b)) = stack.pop() {
        let n = variations_at(&chain, &a) - variations_at(&chain, &b);
        match n {
            0 => {}
            1 => out.push((a, b)),
            _ => {
                let mid = (&a + &b) / Q::from_integer(BigInt::from(2));
                stack.push((a, mid.clone()));
                stack.push((mid, b));
            }
        }
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}

/// Refine an isolating interval (a, b] to a float root by bisection.
fn refine_root(p: &Poly, a: &Q, b: &Q) -> f64 {
    let (mut lo, mut hi) = (a.clone(), b.clone());
    let two = Q::from_integer(BigInt::from(2));
    // p(a) and p(b) may not straddle zero strictly if b is the root itself
    if p.eval_q(&hi).is_zero() {
        return hi.to_f64().unwrap();
    }
    let mut flo = sign_q(&p.eval_q(&lo));
    if flo == 0 {
        // (a, b] excludes a; nudge
        lo = (&lo + &hi) / &two;
        flo = sign_q(&p.eval_q(&lo));
        if flo == 0 {
            return lo.to_f64().unwrap();
        }
    }
    for _ in 0..120 {
        let mid = (&lo + &hi) / &two;
        let fm = sign_q(&p.eval_q(&mid));
        if fm == 0 {
            return mid.to_f64().unwrap();
        }
        if fm == flo {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi.to_f64().unwrap() - lo.to_f64().unwrap()).abs() < 1e-14 {
            break;
        }
    }
    (lo.to_f64().unwrap() + hi.to_f64().unwrap()) / 2.0
}

/// Divisors of |n| up to a budget; None if n is too hard to factor here.
fn divisors(n: &BigInt, budget: usize) -> Option<Vec<BigInt>> {
    let mut n = n.abs();
    if n.is_zero() {
        return None;
    }
    let mut primes: Vec<(BigInt, u32)> = Vec::new();
    let mut d = BigInt::from(2);
    while &d * &d <= n {
        if (&n % &d).is_zero() {
            let mut e = 0u32;
            while (&n % &d).is_zero() {
                n = &n / &d;
                e += 1;
            }
            primes.push((d.clone(), e));
        }
        d += 1;
        if d > BigInt::from(1_000_000) {
            return None;
        }
    }
    if n > BigInt::one() {
        primes.push((n, 1));
    }
    let mut divs = vec![BigInt::one()];
    for (p, e) in primes {
        let mut next = Vec::new();
        for d in &divs {
            let mut pk = BigInt::one();
            for _ in 0..=e {
                next.push(d * &pk);
                pk = &pk * &p;
                if next.len() > budget {
                    return None;
                }
            }
        }
        divs = next;
    }
    Some(divs)
}

/// Extract all rational roots (with exact deflation). Returns (roots,
/// deflated polynomial).
fn rational_roots(p: &Poly) -> (Vec<Q>, Poly) {
    let mut roots = Vec::new();
    let mut cur = p.clone();
    // roots at zero
    while !cur.is_zero() && cur.coeff(0).is_zero() && cur.degree() >= 1 {
        roots.push(Q::zero());
        cur = Poly::new(cur.c[1..].to_vec());
    }
    if cur.degree() == 0 {
        return (roots, cur);
    }
    // integer primitive form
    let mut den_lcm = BigInt::one();
    for c in &cur.c {
        den_lcm = num::integer::lcm(den_lcm, c.denom().clone());
    }
    let ints: Vec<BigInt> = cur
        .c
        .iter()
        .map(|c| c.numer() * (&den_lcm / c.denom()))
        .collect();
    let a0 = ints[0].clone();
    let an = ints.last().unwrap().clone();
    let (d0, dn) = match (divisors(&a0, 4096), divisors(&an, 4096)) {
        (Some(a), Some(b)) => (a, b),
        _ => return (roots, cur),
    };
    let mut candidates: Vec<Q> = Vec::new();
    for p_div in &d0 {
        for q_div in &dn {
            let c = Q::new(p_div.clone(), q_div.clone());
            candidates.push(c.clone());
            candidates.push(-c);
        }
    }
    candidates.sort();
    candidates.dedup();
    for cand in candidates {
        while cur.degree() >= 1 && cur.eval_q(&cand).is_zero() {
            roots.push(cand.clone());
            // synthetic division by (x - cand)
            let mut out = vec![Q::zero(); cur.degree()];
            let mut carry = Q::zero();
            for i in (0..cur.c.len()).rev() {
                let v = &cur.c[i] + &carry;
                if i > 0 {
                    out[i - 1] = v.clone();
                    carry = v * &cand;
                } else {
                    debug_assert!(v.is_zero());
                }
            }
            cur = Poly::new(out);
        }
    }
    (roots, cur)
}

/// Result of inverting an H back to a measure: exact when every atom is
/// rational, float otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum RecoveredMeasure {
    Exact(AtomicMeasure),
    Approx(Vec<(f64, f64)>),
}

/// Poles/residues of G = 1/H: atoms at the real simple zeros of H's
/// numerator, weight 1/H'(x) = den(x)/num'(x).
pub fn measure_from_h(h: &RationalMap) -> Result<RecoveredMeasure, TransformError> {
    let p = h.num();
    let qd = h.den();
    if p.degree() != qd.degree() + 1 {
        return Err(TransformError::NotAProbabilityH(
            "degree of numerator must exceed denominator by one".into(),
        ));
    }
    if !p.leading().is_one() {
        return Err(TransformError::NotAProbabilityH(
            "leading coefficient ratio must be one".into(),
        ));
    }
    let n_roots = count_real_roots(p);
    if n_roots != p.degree() {
        return Err(TransformError::NotAProbabilityH(format!(
            "numerator has {} real roots, degree {}",
            n_roots,
            p.degree()
        )));
    }
    // simple roots: gcd(p, p') must be constant
    if p.gcd(&p.derivative()).degree() > 0 {
        return Err(TransformError::NotAProbabilityH(
            "numerator has a multiple root".into(),
        ));
    }
    let (rational, leftover) = rational_roots(p);
    let pprime = p.derivative();
    if leftover.degree() == 0 {
        // fully exact path
        let mut atoms: Vec<(Q, Q)> = Vec::with_capacity(rational.len());
        let mut mass = Q::zero();
        for x in rational {
            let w = qd.eval_q(&x) / pprime.eval_q(&x);
            if !w.is_positive() {
                return Err(TransformError::NotAProbabilityH(
                    "nonpositive residue".into(),
                ));
            }
            mass += &w;
            atoms.push((x, w));
        }
        if !mass.is_one() {
            return Err(TransformError::NotAProbabilityH(
                "residues do not sum to one".into(),
            ));
        }
        let mu = AtomicMeasure::new(atoms)
            .map_err(|e| TransformError::NotAProbabilityH(e.to_string()))?;
        Ok(RecoveredMeasure::Exact(mu))
    } else {
        let mut xs: Vec<f64> = rational.iter().map(|x| x.to_f64().unwrap()).collect();
        for (a, b) in isolate_real_roots(&leftover) {
            xs.push(refine_root(&leftover, &a, &b));
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut atoms = Vec::with_capacity(xs.len());
        let mut mass = 0.0;
        for x in xs {
            let w = qd.eval_f64(x) / pprime.eval_f64(x);
            if !w.is_finite() || w <= 0.0 {
                return Err(TransformError::NotAProbabilityH(
                    "nonpositive residue".into(),
                ));
            }
            mass += w;
            atoms.push((x, w));
        }
        if (mass - 1.0).abs() > 1e-12 {
            return Err(TransformError::NotAProbabilityH(format!(
                "residue mass {mass} differs from 1 beyond 1e-12"
            )));
        }
        Ok(RecoveredMeasure::Approx(atoms))
    }
}

// ---------------------------------------------------------------------------
// Nevanlinna and finite-variance representations
// ---------------------------------------------------------------------------

/// H(z) = b + z + int (1 + x z)/(x - z) d eta(x) with eta a finite positive
/// atomic measure. Atom data is float (poles of a rational H need not be
/// rational); the round-trip quality is what the tests pin down.
#[derive(Clone, Debug)]
pub struct NevanlinnaForm {
    pub b: f64,
    pub eta: Vec<(f64, f64)>,
}

impl NevanlinnaForm {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(self.b, 0.0) + z;
        for &(x, w) in &self.eta {
            let xc = Complex64::new(x, 0.0);
            acc += w * (1.0 + xc * z) / (xc - z);
        }
        acc
    }
}

/// H(z) = a + z + int 1/(x - z) d rho(x) with rho(R) = variance and
/// a = -mean; the scalars are exact, the atom list is float.
#[derive(Clone, Debug)]
pub struct FiniteVarianceForm {
    pub a: Q,
    pub rho_mass: Q,
    pub rho: Vec<(f64, f64)>,
}

impl FiniteVarianceForm {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(self.a.to_f64().unwrap(), 0.0) + z;
        for &(x, w) in &self.rho {
            acc += w / (Complex64::new(x, 0.0) - z);
        }
        acc
    }
}

/// Poles of H (zeros of the denominator) with residues, as floats.
fn h_poles_residues(h: &RationalMap) -> Result<Vec<(f64, f64)>, TransformError> {
    let den = h.den();
    if den.degree() == 0 {
        return Ok(Vec::new());
    }
    if count_real_roots(den) != den.degree() || den.gcd(&den.derivative()).degree() > 0 {
        return Err(TransformError::NotAProbabilityH(
            "denominator must have simple real zeros".into(),
        ));
    }
    let (rational, leftover) = rational_roots(den);
    let mut xs: Vec<f64> = rational.iter().map(|x| x.to_f64().unwrap()).collect();
    for (a, b) in isolate_real_roots(&leftover) {
        xs.push(refine_root(&leftover, &a, &b));
    }
    // residue of num/den at simple pole x: num(x)/den'(x)
    let dp = den.derivative();
    Ok(xs
        .into_iter()
        .map(|x| {
            let r = h.num().eval_f64(x) / dp.eval_f64(x);
            (x, r)
        })
        .collect())
}

/// Nevanlinna representation of an H-type rational map.
pub fn nevanlinna_of(h: &RationalMap) -> Result<NevanlinnaForm, TransformError> {
    let b1 = h_series_of_rational(h, 2)
        .ok_or_else(|| TransformError::NotAProbabilityH("not an H-type map".into()))?
        .b_coeffs()[1]
        .to_f64()
        .unwrap();
    let poles = h_poles_residues(h)?;
    let mut eta = Vec::with_capacity(poles.len());
    let mut eta_dot_x = 0.0;
    for (x, res) in poles {
        // (1 + xz)/(x - z) has residue -(1 + x^2) at z = x
        let w = -res / (1.0 + x * x);
        if w <= 0.0 {
            return Err(TransformError::NotAProbabilityH(
                "negative Nevanlinna mass".into(),
            ));
        }
        eta_dot_x += w * x;
        eta.push((x, w));
    }
    Ok(NevanlinnaForm {
        b: b1 + eta_dot_x,
        eta,
    })
}

/// Finite-variance representation; exact mean and variance read off the
/// Laurent expansion.
pub fn finite_variance_of(h: &RationalMap) -> Result<FiniteVarianceForm, TransformError> {
    let hs = h_series_of_rational(h, 3).ok_or(TransformError::NotFiniteVariance)?;
    let b = hs.b_coeffs();
    let a = b[1].clone(); // -mean
    let rho_mass = -b[2].clone(); // variance = -(b_2)
    if rho_mass.is_negative() {
        return Err(TransformError::NotFiniteVariance);
    }
    let poles = h_poles_residues(h)?;
    let rho = poles.into_iter().map(|(x, res)| (x, -res)).collect();
    Ok(FiniteVarianceForm { a, rho_mass, rho })
}

// ---------------------------------------------------------------------------
// Stieltjes inversion and atom location
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct LadderOptions {
    pub eps0: f64,
    pub levels: usize,
    pub tol: f64,
}

impl Default for LadderOptions {
    fn default() -> Self {
        LadderOptions {
            eps0: 1e-2,
            levels: 7,
            tol: 1e-6,
        }
    }
}

/// Density -(1/pi) Im G(x + i eps) extrapolated eps -> 0 with a Richardson
/// table on the ladder eps_k = eps0 2^{-k}.
pub fn stieltjes_density(
    g: &dyn Fn(Complex64) -> Complex64,
    x: f64,
    opts: LadderOptions,
) -> Result<f64, TransformError> {
    let n = opts.levels;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let eps = opts.eps0 / (1u64 << k) as f64;
        let v = -g(Complex64::new(x, eps)).im / std::f64::consts::PI;
        let mut row = vec![v];
        for j in 1..=k {
            let pow = (1u64 << j) as f64;
            let prev = table[k - 1][j - 1];
            let cur = row[j - 1];
            row.push((pow * cur - prev) / (pow - 1.0));
        }
        table.push(row);
    }
    let best = table[n - 1][n - 1];
    let prev = table[n - 2][n - 2];
    let delta = (best - prev).abs();
    if delta > opts.tol * (1.0 + best.abs()) {
        return Err(TransformError::NonconvergentLadder(delta));
    }
    Ok(best)
}

/// Locate at most one zero of a real, strictly increasing H per interval by
/// bisection; the atom weight is 1/H'(x0) with a central difference.
/// `h` returns None where the function is undefined or not real.
pub fn locate_atoms(
    h: &dyn Fn(f64) -> Option<f64>,
    intervals: &[(f64, f64)],
) -> Vec<Result<(f64, f64), TransformError>> {
    intervals
        .iter()
        .map(|&(a, b)| locate_atom_in(h, a, b))
        .collect()
}

fn locate_atom_in(
    h: &dyn Fn(f64) -> Option<f64>,
    a: f64,
    b: f64,
) -> Result<(f64, f64), TransformError> {
    const SAMPLES: usize = 64;
    let mut bracket: Option<(f64, f64)> = None;
    let mut prev: Option<(f64, f64)> = None;
    let mut last_val = f64::NEG_INFINITY;
    for i in 0..=SAMPLES {
        let x = a + (b - a) * (i as f64) / (SAMPLES as f64);
        let Some(v) = h(x) else { continue };
        if v < last_val {
            return Err(TransformError::Eval(
                "function not increasing on interval".into(),
            ));
        }
        last_val = v;
        if let Some((px, pv)) = prev {
            if pv <= 0.0 && v >= 0.0 {
                bracket = Some((px, x));
                break;
            }
        }
        prev = Some((x, v));
    }
    let (mut lo, mut hi) = bracket.ok_or(TransformError::NoSignChange)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let Some(v) = h(mid) else {
            return Err(TransformError::Eval("undefined inside bracket".into()));
        };
        if v <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * (1.0 + mid.abs()) {
            break;
        }
    }
    let x0 = 0.5 * (lo + hi);
    let hstep = 1e-6;
    let (Some(vp), Some(vm)) = (h(x0 + hstep), h(x0 - hstep)) else {
        return Err(TransformError::Eval("derivative stencil undefined".into()));
    };
    let deriv = (vp - vm) / (2.0 * hstep);
    if deriv.is_nan() || deriv <= 0.0 {
        return Err(TransformError::Eval("nonpositive derivative at root".into()));
    }
    Ok((x0, 1.0 / deriv))
}

// ---------------------------------------------------------------------------
// Closed-form analytic maps with fixed branch conventions
// ---------------------------------------------------------------------------

/// Expression tree over {z, constants, +, -, *, /, sqrt, log_[1], log_[2]}.
///
/// Branch conventions: log_[1] has arg in (-pi, pi), cut (-inf, 0];
/// log_[2] has arg in (0, 2 pi), cut [0, inf); sqrt z = exp(log_[2](z)/2).
/// Every evaluation rejects arguments within 1e-14 of its cut.
#[derive(Clone, Debug)]
pub enum Expr {
    Z,
    Const(Complex64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
    Log1(Box<Expr>),
    Log2(Box<Expr>),
}

pub const BRANCH_GUARD: f64 = 1e-14;

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(Complex64::new(v, 0.0))
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64, TransformError> {
        match self {
            Expr::Z => Ok(z),
            Expr::Const(c) => Ok(*c),
            Expr::Add(a, b) => Ok(a.eval(z)? + b.eval(z)?),
            Expr::Sub(a, b) => Ok(a.eval(z)? - b.eval(z)?),
            Expr::Mul(a, b) => Ok(a.eval(z)? * b.eval(z)?),
            Expr::Div(a, b) => {
                let den = b.eval(z)?;
                if den.norm() == 0.0 {
                    return Err(TransformError::Eval("division by zero".into()));
                }
                Ok(a.eval(z)? / den)
            }
            Expr::Sqrt(a) => {
                let w = a.eval(z)?;
                Ok(Complex64::new(0.5, 0.0) * log2_checked(w)?).map(|l| l.exp())
            }
            Expr::Log1(a) => log1_checked(a.eval(z)?),
            Expr::Log2(a) => log2_checked(a.eval(z)?),
        }
    }
}

/// Principal log, cut (-inf, 0].
pub fn log1_checked(w: Complex64) -> Result<Complex64, TransformError> {
    if w.re <= 0.0 && w.im.abs() <= BRANCH_GUARD {
        return Err(TransformError::BranchCutHit);
    }
    Ok(Complex64::new(w.norm().ln(), w.arg()))
}

/// Log with arg in (0, 2 pi), cut [0, inf).
pub fn log2_checked(w: Complex64) -> Result<Complex64, TransformError> {
    if w.re >= 0.0 && w.im.abs() <= BRANCH_GUARD {
        return Err(TransformError::BranchCutHit);
    }
    let mut theta = w.arg();
    if theta <= 0.0 {
        theta += 2.0 * std::f64::consts::PI;
    }
    Ok(Complex64::new(w.norm().ln(), theta))
}

/// sqrt via exp(log_[2]/2); maps off-cut points into the upper half plane.
pub fn sqrt_checked(w: Complex64) -> Result<Complex64, TransformError> {
    Ok((log2_checked(w)? * 0.5).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{q, qr};

    fn bernoulli() -> AtomicMeasure {
        AtomicMeasure::symmetric_bernoulli(q(1))
    }

    #[test]
    fn h_of_point_mass_and_bernoulli() {
        let h = h_of_atomic(&AtomicMeasure::point_mass(qr(5, 2)));
        assert_eq!(h, RationalMap::shift(&qr(5, 2)));
        // (z^2 - 1)/z, verified against the partial-fraction oracle
        let hb = h_of_atomic(&bernoulli());
        assert_eq!(hb.num(), &Poly::new(vec![q(-1), q(0), q(1)]));
        assert_eq!(hb.den(), &Poly::new(vec![q(0), q(1)]));
    }

    #[test]
    fn h_normalization_limit() {
        // H(iy)/iy -> 1 for the 2-atom measure 1/4 d0 + 3/4 d2.
        let mu = AtomicMeasure::new(vec![(q(0), qr(1, 4)), (q(2), qr(3, 4))]).unwrap();
        let h = h_of_atomic(&mu);
        let z = Complex64::new(0.0, 1e7);
        let ratio = h.eval_c64(z) / z;
        assert!((ratio - Complex64::new(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn compose_shifts() {
        let f = RationalMap::shift(&q(2));
        let g = RationalMap::shift(&q(5));
        assert_eq!(compose(&f, &g).unwrap(), RationalMap::shift(&q(7)));
        // identity on either side
        let hb = h_of_atomic(&bernoulli());
        assert_eq!(compose(&RationalMap::ident(), &hb).unwrap(), hb);
        assert_eq!(compose(&hb, &RationalMap::ident()).unwrap(), hb);
    }

    #[test]
    fn compose_associative() {
        let a = h_of_atomic(&bernoulli());
        let b = RationalMap::shift(&qr(1, 3));
        let c = h_of_atomic(&AtomicMeasure::new(vec![(q(0), qr(1, 2)), (q(1), qr(1, 2))]).unwrap());
        let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
        let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn degree_cap_enforced() {
        let mut h = h_of_atomic(&bernoulli());
        let base = h.clone();
        let mut overflowed = false;
        for _ in 0..12 {
            match compose(&h, &base) {
                Ok(next) => h = next,
                Err(TransformError::DegreeOverflow(_, _)) => {
                    overflowed = true;
                    break;
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        assert!(overflowed);
    }

    #[test]
    fn measure_round_trips_exactly() {
        let mus = vec![
            AtomicMeasure::point_mass(qr(-3, 4)),
            bernoulli(),
            AtomicMeasure::new(vec![(q(0), qr(1, 4)), (q(2), qr(3, 4))]).unwrap(),
            AtomicMeasure::new(vec![(qr(-1, 2), qr(1, 3)), (q(1), qr(1, 6)), (q(3), qr(1, 2))])
                .unwrap(),
        ];
        for mu in mus {
            let h = h_of_atomic(&mu);
            match measure_from_h(&h).unwrap() {
                RecoveredMeasure::Exact(back) => assert_eq!(back, mu),
                RecoveredMeasure::Approx(_) => panic!("expected exact recovery"),
            }
        }
    }

    #[test]
    fn composed_bernoulli_recovers_float_atoms() {
        // The monotone square of the Bernoulli law has irrational atoms at
        // +- sqrt((3 +- sqrt 5)/2); weights must sum to 1.
        let hb = h_of_atomic(&bernoulli());
        let h2 = compose(&hb, &hb).unwrap();
        match measure_from_h(&h2).unwrap() {
            RecoveredMeasure::Exact(_) => panic!("roots are irrational"),
            RecoveredMeasure::Approx(atoms) => {
                assert_eq!(atoms.len(), 4);
                let mass: f64 = atoms.iter().map(|&(_, w)| w).sum();
                assert!((mass - 1.0).abs() < 1e-12);
                let expect = ((3.0 + 5f64.sqrt()) / 2.0).sqrt();
                assert!((atoms[3].0 - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn non_probability_h_rejected() {
        // z^2 + 1 over z: complex roots
        let h = RationalMap::new(Poly::new(vec![q(1), q(0), q(1)]), Poly::ident());
        assert!(matches!(
            measure_from_h(&h),
            Err(TransformError::NotAProbabilityH(_))
        ));
    }

    #[test]
    fn moments_via_laurent_match_power_sums() {
        let mu = AtomicMeasure::new(vec![(qr(-1, 2), qr(1, 3)), (q(1), qr(1, 6)), (q(3), qr(1, 2))])
            .unwrap();
        let h = h_of_atomic(&mu);
        let via_series = moments_of_h(&h, 6).unwrap();
        let direct = mu.moments(6);
        assert_eq!(via_series, direct.values());
    }

    #[test]
    fn nevanlinna_round_trip_on_grid() {
        let mu = AtomicMeasure::new(vec![(qr(-1, 2), qr(1, 3)), (q(1), qr(1, 6)), (q(3), qr(1, 2))])
            .unwrap();
        let h = h_of_atomic(&mu);
        let nev = nevanlinna_of(&h).unwrap();
        for i in 0..20 {
            for &im in &[0.5, 1.0, 2.0] {
                let z = Complex64::new(-3.0 + 6.0 * (i as f64) / 19.0, im);
                let d = (nev.eval(z) - h.eval_c64(z)).norm();
                assert!(d < 1e-10, "residual {d} at {z}");
            }
        }
    }

    #[test]
    fn nevanlinna_of_shift_and_bernoulli() {
        let h = RationalMap::shift(&q(2));
        let nev = nevanlinna_of(&h).unwrap();
        assert!(nev.eta.is_empty());
        assert!((nev.b + 2.0).abs() < 1e-12);

        // H = z - 1/z: eta = delta_0 with mass 1, b = 0.
        let nev = nevanlinna_of(&h_of_atomic(&bernoulli())).unwrap();
        assert_eq!(nev.eta.len(), 1);
        assert!(nev.eta[0].0.abs() < 1e-12 && (nev.eta[0].1 - 1.0).abs() < 1e-12);
        assert!(nev.b.abs() < 1e-12);
    }

    #[test]
    fn finite_variance_form_is_exact_on_scalars() {
        let mu = AtomicMeasure::new(vec![(q(0), qr(1, 4)), (q(2), qr(3, 4))]).unwrap();
        let h = h_of_atomic(&mu);
        let fv = finite_variance_of(&h).unwrap();
        assert_eq!(fv.a, -mu.mean());
        assert_eq!(fv.rho_mass, mu.variance());
        // Bernoulli: a = 0, rho = delta_0 with mass 1
        let fv = finite_variance_of(&h_of_atomic(&bernoulli())).unwrap();
        assert_eq!(fv.a, q(0));
        assert_eq!(fv.rho_mass, q(1));
        assert_eq!(fv.rho.len(), 1);
        assert!((fv.rho[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn imaginary_part_expands_on_grid() {
        // Im H(z) >= Im z for reciprocal Cauchy transforms.
        let mu = AtomicMeasure::new(vec![(qr(-1, 2), qr(1, 3)), (q(1), qr(1, 6)), (q(3), qr(1, 2))])
            .unwrap();
        let h = h_of_atomic(&mu);
        for i in 0..20 {
            for &im in &[0.5, 1.0, 2.0] {
                let z = Complex64::new(-3.0 + 6.0 * (i as f64) / 19.0, im);
                assert!(h.eval_c64(z).im >= z.im - 1e-12);
            }
        }
    }

    #[test]
    fn sturm_counts() {
        // (x^2 - 2)(x - 3): roots +-sqrt2, 3
        let p = Poly::new(vec![q(6), q(-2), q(-3), q(1)]);
        assert_eq!(count_real_roots(&p), 3);
        assert_eq!(count_roots_below(&p, &q(0)), 1);
        assert_eq!(count_roots_between(&p, &q(0), &q(2)), 1);
        let iso = isolate_real_roots(&p);
        assert_eq!(iso.len(), 3);
    }

    #[test]
    fn stieltjes_of_arcsine_at_zero() {
        // G = 1/sqrt(z^2 - 2); density at 0 is 1/(pi sqrt 2).
        let g = |z: Complex64| {
            let w = z * z - Complex64::new(2.0, 0.0);
            Complex64::new(1.0, 0.0) / sqrt_checked(w).unwrap()
        };
        let d = stieltjes_density(&g, 0.0, LadderOptions::default()).unwrap();
        let expect = 1.0 / (std::f64::consts::PI * 2f64.sqrt());
        assert!((d - expect).abs() < 1e-8, "{d} vs {expect}");
        // outside the support the density vanishes
        let d = stieltjes_density(&g, 3.0, LadderOptions::default()).unwrap();
        assert!(d.abs() < 1e-8);
    }

    #[test]
    fn nonconvergent_ladder_is_reported() {
        // An impossible tolerance forces the Richardson ladder to fail.
        let g = |z: Complex64| {
            let w = z * z - Complex64::new(2.0, 0.0);
            Complex64::new(1.0, 0.0) / sqrt_checked(w).unwrap()
        };
        let opts = LadderOptions {
            eps0: 1e-2,
            levels: 7,
            tol: 1e-18,
        };
        // at the support edge the boundary limit is singular
        assert!(matches!(
            stieltjes_density(&g, 2f64.sqrt(), opts),
            Err(TransformError::NonconvergentLadder(_))
        ));
    }

    #[test]
    fn locate_atom_of_shift() {
        let a = 1.75f64;
        let h = move |x: f64| Some(x - a);
        let out = locate_atoms(&h, &[(a - 1.0, a + 1.0)]);
        let (x0, w) = out[0].as_ref().unwrap();
        assert!((x0 - a).abs() < 1e-10);
        assert!((w - 1.0).abs() < 1e-6);
        // no atom here
        let out = locate_atoms(&h, &[(a + 1.0, a + 2.0)]);
        assert!(matches!(out[0], Err(TransformError::NoSignChange)));
    }

    #[test]
    fn branch_conventions() {
        // sqrt lands in the closed upper half plane
        let w = sqrt_checked(Complex64::new(-4.0, 1e-6)).unwrap();
        assert!(w.im > 0.0);
        assert!((w - Complex64::new(0.0, 2.0)).norm() < 1e-6);
        // arcsine Cauchy transform via the tree: 1/sqrt(z^2-2) at iy is -i/|..|-ish
        let expr = Expr::Div(
            Box::new(Expr::c(1.0)),
            Box::new(Expr::Sqrt(Box::new(Expr::Sub(
                Box::new(Expr::Mul(Box::new(Expr::Z), Box::new(Expr::Z))),
                Box::new(Expr::c(2.0)),
            )))),
        );
        let v = expr.eval(Complex64::new(0.0, 2.0)).unwrap();
        // G(2i) = 1/sqrt(-6) = -i/sqrt(6)
        assert!((v - Complex64::new(0.0, -1.0 / 6f64.sqrt())).norm() < 1e-12);
        // cut hits are rejected
        assert!(matches!(
            sqrt_checked(Complex64::new(2.0, 0.0)),
            Err(TransformError::BranchCutHit)
        ));
        assert!(matches!(
            log1_checked(Complex64::new(-1.0, 0.0)),
            Err(TransformError::BranchCutHit)
        ));
    }
}

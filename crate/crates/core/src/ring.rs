//! Coefficient rings for the exact track.
//!
//! Every combinatorial identity in this crate is evaluated either over the
//! rationals or over multivariate polynomials with rational coefficients
//! (formal indeterminates standing for moments or cumulants). The [`Coeff`]
//! trait abstracts the two so that series arithmetic, the cumulant
//! recursions and the partition sums are written once.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Exact rational scalar used everywhere on the exact track.
pub type Q = BigRational;

/// Rational from an integer.
pub fn q(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

/// Rational n/d.
pub fn qr(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parse "p/q" or "p" into a rational.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((num, den)) => {
            let n: BigInt = num.trim().parse().ok()?;
            let d: BigInt = den.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => {
            let n: BigInt = s.parse().ok()?;
            Some(BigRational::from_integer(n))
        }
    }
}

/// Render a rational as "p/q" (or "p" for integers), the wire format used by
/// the CLI and golden files.
pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Binomial coefficient C(a, k) for rational a, integer k >= 0.
pub fn binom_q(a: &Q, k: usize) -> Q {
    let mut acc = <Q as One>::one();
    for i in 0..k {
        acc *= a - q(i as i64);
        acc /= q((i + 1) as i64);
    }
    acc
}

/// Commutative ring with a distinguished rational subring. `scale` is
/// multiplication by a rational scalar; exact division by integers in the
/// recursions goes through it.
pub trait Coeff: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, s: &Q) -> Self;
    fn from_q(s: &Q) -> Self;
}

impl Coeff for Q {
    fn zero() -> Self {
        <Q as Zero>::zero()
    }
    fn one() -> Self {
        <Q as One>::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, s: &Q) -> Self {
        self * s
    }
    fn from_q(s: &Q) -> Self {
        s.clone()
    }
}

/// Monomial: sorted (variable, exponent) pairs, exponents > 0.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash, Default)]
pub struct Monomial(pub Vec<(u32, u32)>);

impl Monomial {
    pub fn var(v: u32) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, rhs: &Monomial) -> Monomial {
        let mut out: Vec<(u32, u32)> = Vec::with_capacity(self.0.len() + rhs.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < rhs.0.len() {
            match self.0[i].0.cmp(&rhs.0[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(rhs.0[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((self.0[i].0, self.0[i].1 + rhs.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&rhs.0[j..]);
        Monomial(out)
    }

    pub fn degree_of(&self, v: u32) -> u32 {
        self.0
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    /// Total degree with per-variable weights.
    pub fn weighted_degree(&self, weight: impl Fn(u32) -> u32) -> u32 {
        self.0.iter().map(|&(v, e)| weight(v) * e).sum()
    }
}

/// Sparse multivariate polynomial over the rationals. Variables are plain
/// `u32` indices; callers assign their own meaning (and display names).
#[derive(Clone, PartialEq, Debug, Default)]
pub struct MPoly {
    pub terms: BTreeMap<Monomial, Q>,
}

impl MPoly {
    pub fn constant(c: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !Zero::is_zero(&c) {
            terms.insert(Monomial::default(), c);
        }
        MPoly { terms }
    }

    pub fn var(v: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::var(v), <Q as One>::one());
        MPoly { terms }
    }

    fn insert(&mut self, m: Monomial, c: Q) {
        if Zero::is_zero(&c) {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if Zero::is_zero(&sum) {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    /// Coefficient of a monomial (zero if absent).
    pub fn coeff(&self, m: &Monomial) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(<Q as Zero>::zero)
    }

    /// The constant term.
    pub fn constant_term(&self) -> Q {
        self.coeff(&Monomial::default())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_unit())
    }

    /// Substitute polynomials for a subset of variables.
    pub fn substitute(&self, map: &BTreeMap<u32, MPoly>) -> MPoly {
        let mut out = MPoly::default();
        for (mono, c) in &self.terms {
            let mut term = MPoly::constant(c.clone());
            for &(v, e) in &mono.0 {
                let factor = match map.get(&v) {
                    Some(p) => p.clone(),
                    None => MPoly::var(v),
                };
                for _ in 0..e {
                    term = Coeff::mul(&term, &factor);
                }
            }
            out = Coeff::add(&out, &term);
        }
        out
    }

    /// All monomials in the chosen variable set, with their cofactor
    /// polynomials in the remaining variables. Used to read a polynomial as
    /// linear (or not) in a group of indeterminates.
    pub fn split_by(&self, in_group: impl Fn(u32) -> bool) -> BTreeMap<Monomial, MPoly> {
        let mut out: BTreeMap<Monomial, MPoly> = BTreeMap::new();
        for (mono, c) in &self.terms {
            let (grp, rest): (Vec<_>, Vec<_>) = mono.0.iter().partition(|&&(v, _)| in_group(v));
            let key = Monomial(grp);
            let residual = Monomial(rest);
            out.entry(key)
                .or_default()
                .insert(residual, c.clone());
        }
        out
    }

    /// Every monomial satisfies `predicate`.
    pub fn monomials_all(&self, predicate: impl Fn(&Monomial) -> bool) -> bool {
        self.terms.keys().all(predicate)
    }

    pub fn to_string_with(&self, name: impl Fn(u32) -> String) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (mono, c) in &self.terms {
            let mut s = fmt_q(c);
            for &(v, e) in &mono.0 {
                s.push('*');
                s.push_str(&name(v));
                if e > 1 {
                    s.push_str(&format!("^{}", e));
                }
            }
            parts.push(s);
        }
        parts.join(" + ")
    }
}

impl Coeff for MPoly {
    fn zero() -> Self {
        MPoly::default()
    }
    fn one() -> Self {
        MPoly::constant(<Q as One>::one())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }
    fn sub(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.insert(m.clone(), -c.clone());
        }
        out
    }
    fn mul(&self, rhs: &Self) -> Self {
        let mut out = MPoly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.insert(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
    fn neg(&self) -> Self {
        MPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }
    fn scale(&self, s: &Q) -> Self {
        if Zero::is_zero(s) {
            return MPoly::default();
        }
        MPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c * s))
                .collect(),
        }
    }
    fn from_q(s: &Q) -> Self {
        MPoly::constant(s.clone())
    }
}

/// Dense univariate polynomial over a coefficient ring, little-endian.
/// Used for the time polynomials m_n(t) in the cumulant recursions.
#[derive(Clone, PartialEq, Debug)]
pub struct Poly1<K: Coeff> {
    pub coeffs: Vec<K>,
}

impl<K: Coeff> Poly1<K> {
    pub fn zero() -> Self {
        Poly1 { coeffs: Vec::new() }
    }

    pub fn constant(c: K) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            Poly1 { coeffs: vec![c] }
        }
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeff(&self, i: usize) -> K {
        self.coeffs.get(i).cloned().unwrap_or_else(K::zero)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i).add(&rhs.coeff(i)));
        }
        let mut p = Poly1 { coeffs: out };
        p.trim();
        p
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Self {
        Poly1 {
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Self::zero();
        }
        let mut out = vec![K::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        let mut p = Poly1 { coeffs: out };
        p.trim();
        p
    }

    pub fn scale(&self, s: &Q) -> Self {
        let mut p = Poly1 {
            coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect(),
        };
        p.trim();
        p
    }

    /// Antiderivative with zero constant term.
    pub fn integrate(&self) -> Self {
        let mut out = vec![K::zero()];
        for (i, c) in self.coeffs.iter().enumerate() {
            out.push(c.scale(&qr(1, (i + 1) as i64)));
        }
        let mut p = Poly1 { coeffs: out };
        p.trim();
        p
    }

    /// Value at t = 1: the coefficient sum.
    pub fn eval_one(&self) -> K {
        let mut acc = K::zero();
        for c in &self.coeffs {
            acc = acc.add(c);
        }
        acc
    }
}

/// Sign of a rational: -1, 0, 1.
pub fn sign_q(x: &Q) -> i32 {
    if Zero::is_zero(x) {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_wire_format_round_trips() {
        for s in ["3/4", "-7/2", "5", "0", "-12"] {
            let v = parse_q(s).unwrap();
            assert_eq!(fmt_q(&v), s);
        }
        assert!(parse_q("1/0").is_none());
        assert!(parse_q("x").is_none());
    }

    #[test]
    fn binom_half() {
        // C(1/2, 3) = 1/16
        assert_eq!(binom_q(&qr(1, 2), 3), qr(1, 16));
    }

    #[test]
    fn mpoly_mul_and_substitute() {
        let x = MPoly::var(0);
        let y = MPoly::var(1);
        let p = Coeff::add(&Coeff::mul(&x, &x), &y); // x^2 + y
        let mut map = BTreeMap::new();
        map.insert(0u32, Coeff::add(&y, &MPoly::constant(q(1)))); // x := y + 1
        let sub = p.substitute(&map); // y^2 + 3y + 1
        let mut expect = Coeff::mul(&y, &y);
        expect = Coeff::add(&expect, &y.scale(&q(3)));
        expect = Coeff::add(&expect, &MPoly::constant(q(1)));
        assert_eq!(sub, expect);
    }

    #[test]
    fn poly1_integrate_eval() {
        // d/dt (t + t^2) = 1 + 2t, integrate back and evaluate at one.
        let p: Poly1<Q> = Poly1 {
            coeffs: vec![q(1), q(2)],
        };
        let int = p.integrate();
        assert_eq!(int.coeffs, vec![q(0), q(1), q(1)]);
        assert_eq!(int.eval_one(), q(2));
    }
}

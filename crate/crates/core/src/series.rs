//! Truncated formal power series in w = 1/z.
//!
//! A probability distribution with moments m_0 = 1, m_1, ... enters the
//! series track in two equivalent shapes:
//!
//! * the moment series M(w) = sum m_n w^n, so that G(z) = w * M(w);
//! * the reciprocal series B(w) = 1/M(w) = 1 + b_1 w + b_2 w^2 + ..., so
//!   that H(z) = 1/G(z) = z * B(w).
//!
//! Reciprocal Cauchy transform identities (composition for the monotone
//! convolution, affine combinations for the Boolean ones) become series
//! algebra on B with the inner substitution u = w * M(w).

use crate::ring::{binom_q, qr, Coeff, Q};

/// Power series truncated at a fixed order: coefficients of w^0 .. w^K.
#[derive(Clone, PartialEq, Debug)]
pub struct Series<K: Coeff> {
    pub c: Vec<K>,
}

impl<K: Coeff> Series<K> {
    pub fn zero(order: usize) -> Self {
        Series {
            c: vec![K::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.c[0] = K::one();
        s
    }

    pub fn from_coeffs(c: Vec<K>) -> Self {
        Series { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn truncated(&self, order: usize) -> Self {
        let mut c = self.c.clone();
        c.truncate(order + 1);
        while c.len() < order + 1 {
            c.push(K::zero());
        }
        Series { c }
    }

    fn common_order(&self, rhs: &Self) -> usize {
        self.order().min(rhs.order())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.common_order(rhs);
        Series {
            c: (0..=n).map(|i| self.c[i].add(&rhs.c[i])).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let n = self.common_order(rhs);
        Series {
            c: (0..=n).map(|i| self.c[i].sub(&rhs.c[i])).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Series {
            c: self.c.iter().map(|x| x.neg()).collect(),
        }
    }

    pub fn scale(&self, s: &Q) -> Self {
        Series {
            c: self.c.iter().map(|x| x.scale(s)).collect(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let n = self.common_order(rhs);
        let mut out = vec![K::zero(); n + 1];
        for i in 0..=n {
            if self.c[i].is_zero() {
                continue;
            }
            for j in 0..=(n - i) {
                out[i + j] = out[i + j].add(&self.c[i].mul(&rhs.c[j]));
            }
        }
        Series { c: out }
    }

    /// Multiplicative inverse; requires constant term 1.
    pub fn recip(&self) -> Self {
        assert!(
            self.c[0] == K::one(),
            "series reciprocal requires constant term 1"
        );
        let n = self.order();
        let mut out = vec![K::zero(); n + 1];
        out[0] = K::one();
        for i in 1..=n {
            let mut acc = K::zero();
            for k in 1..=i {
                acc = acc.add(&self.c[k].mul(&out[i - k]));
            }
            out[i] = acc.neg();
        }
        Series { c: out }
    }

    /// Composition self(inner) where inner has zero constant term.
    pub fn compose(&self, inner: &Self) -> Self {
        assert!(inner.c[0].is_zero(), "inner series must have valuation >= 1");
        let n = self.common_order(inner);
        // Horner from the top coefficient down.
        let mut acc = Series::zero(n);
        for i in (0..=n).rev() {
            acc = acc.mul(&inner.truncated(n));
            acc.c[0] = acc.c[0].add(&self.c[i]);
        }
        acc
    }

    /// (1 + u)^a for rational exponent a, u with valuation >= 1.
    pub fn pow_one_plus(u: &Self, a: &Q) -> Self {
        assert!(u.c[0].is_zero());
        let n = u.order();
        let mut acc = Series::one(n);
        let mut upow = Series::one(n);
        for k in 1..=n {
            upow = upow.mul(u);
            let b = binom_q(a, k);
            acc = acc.add(&upow.scale(&b));
        }
        acc
    }

    /// log(1 + u) for u with valuation >= 1 (asymptotic principal branch).
    pub fn log_one_plus(u: &Self) -> Self {
        assert!(u.c[0].is_zero());
        let n = u.order();
        let mut acc = Series::zero(n);
        let mut upow = Series::one(n);
        for k in 1..=n {
            upow = upow.mul(u);
            let s = if k % 2 == 1 {
                qr(1, k as i64)
            } else {
                qr(-1, k as i64)
            };
            acc = acc.add(&upow.scale(&s));
        }
        acc
    }

    /// Shift up: w * self, dropping the top coefficient.
    pub fn shift_up(&self) -> Self {
        let n = self.order();
        let mut c = vec![K::zero(); n + 1];
        for i in 1..=n {
            c[i] = self.c[i - 1].clone();
        }
        Series { c }
    }
}

/// A reciprocal Cauchy transform on the series track: H(z) = z * B(w) with
/// B(0) = 1. Stores B.
#[derive(Clone, PartialEq, Debug)]
pub struct HSeries<K: Coeff> {
    pub b: Series<K>,
}

impl<K: Coeff> HSeries<K> {
    /// From the moment series M (m_0 = 1 at index 0).
    pub fn from_moment_series(m: &Series<K>) -> Self {
        HSeries { b: m.recip() }
    }

    /// Back to the moment series.
    pub fn moment_series(&self) -> Series<K> {
        self.b.recip()
    }

    pub fn order(&self) -> usize {
        self.b.order()
    }

    /// The identity transform H(z) = z.
    pub fn identity(order: usize) -> Self {
        HSeries {
            b: Series::one(order),
        }
    }

    /// b_n coefficients of H(z) = z (1 + sum b_n / z^n); index 0 holds 1.
    pub fn b_coeffs(&self) -> &[K] {
        &self.b.c
    }

    /// u = w * M(w) = 1/H as a series of valuation 1; the substitution
    /// argument for composition.
    fn inner_sub(&self) -> Series<K> {
        self.moment_series().shift_up()
    }

    /// H_f(H_g(z)): the monotone composition.
    pub fn compose(&self, g: &Self) -> Self {
        // H_f(H_g(z)) = H_g(z) * B_f(1/H_g(z)) = z * B_g(w) * B_f(w M_g(w)).
        let inner = g.inner_sub();
        let bf_at = self.b.compose(&inner);
        HSeries {
            b: g.b.mul(&bf_at),
        }
    }

    /// H_f + H_g - z.
    pub fn boolean_add(&self, g: &Self) -> Self {
        let mut b = self.b.add(&g.b);
        b.c[0] = b.c[0].sub(&K::one());
        HSeries { b }
    }

    /// Affine combination sum_i s_i H_i + (1 - sum s_i) z, exact scalars.
    pub fn affine(parts: &[(Q, &HSeries<K>)], order: usize) -> Self {
        let mut b = Series::one(order);
        for (s, h) in parts {
            let mut delta = h.b.truncated(order);
            delta.c[0] = delta.c[0].sub(&K::one());
            b = b.add(&delta.scale(s));
        }
        HSeries { b }
    }

    /// Add a constant (in z-space): H + c means b_1 += c.
    pub fn add_constant(&self, cst: &K) -> Self {
        let mut b = self.b.clone();
        if b.c.len() > 1 {
            b.c[1] = b.c[1].add(cst);
        }
        HSeries { b }
    }
}

/// Moments -> b-coefficients (b_1..b_K) via the reciprocal series.
pub fn b_from_moments(m: &[Q]) -> Vec<Q> {
    let order = m.len();
    let mut ms = Series::one(order);
    for (i, v) in m.iter().enumerate() {
        ms.c[i + 1] = v.clone();
    }
    let h = HSeries::from_moment_series(&ms);
    h.b.c[1..].to_vec()
}

/// b-coefficients -> moments.
pub fn moments_from_b(b: &[Q]) -> Vec<Q> {
    let order = b.len();
    let mut bs = Series::one(order);
    for (i, v) in b.iter().enumerate() {
        bs.c[i + 1] = v.clone();
    }
    let m = bs.recip();
    m.c[1..].to_vec()
}

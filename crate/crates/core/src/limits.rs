//! Limit-theorem harness: iterated (deformed) convolutions, closed-form
//! limit laws, their exact moment expansions, densities and atoms.

use crate::cumulants::moments_from_monotone_cumulants;
use crate::measures::{MomentSeq, NamedLaw};
use crate::pair_convolutions::{
    cmonotone_convolve, deformed_convolve_moments, ConvError, MeasurePair, Transform,
};
use crate::partitions;
use crate::ring::{q, qr, Q};
use crate::semigroups::{integrate_point, PickField};
use crate::series::{HSeries, Series};
use crate::transforms::{
    locate_atoms, stieltjes_density, Expr, LadderOptions, TransformError,
};
use num::complex::Complex64;
use num::{One, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LimitsError {
    #[error("input must be centered (m_1 = 0)")]
    NotNormalized,
    #[error("iteration count must be at least one")]
    ZeroIterations,
    #[error("dilation by 1/sqrt(N) leaves the rationals: odd moment {0} nonzero and N not a square")]
    IrrationalScale(usize),
    #[error(transparent)]
    Conv(#[from] ConvError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Closed-form limit laws of the central limit theorems and Poisson limits.
#[derive(Clone, PartialEq, Debug)]
pub enum LimitLaw {
    /// Kesten law with second moments (alpha2, beta2); the pair-mode CLT
    /// limit's first component.
    KestenClt { alpha2: Q, beta2: Q },
    /// First component of the c-monotone Poisson limit: the t-transform of
    /// the monotone Poisson law, H = (1 - lambda/rho) z + (lambda/rho) H_p.
    CMonotonePoisson { lambda: Q, rho: Q },
    /// CLT limit of the U_t-deformed convolution (t > 0): the Kesten law
    /// with H = (1 - 1/t) z + (1/t) sqrt(z^2 - 2t).
    DeformedCltT { t: Q },
    /// CLT limit of the V_{0,0,a}-deformed convolution:
    /// H = z - (1/a) log(1 + a/z).
    DeformedClt0a { a: Q },
    /// Poisson limit of the V_{0,u,a}-deformed convolution.
    DeformedPoissonUa { u: Q, a: Q, lambda: Q },
    /// CLT limit of the arcsine Xi-deformation (equals DeformedCltT).
    XiArcsineClt { t: Q },
    /// Poisson limit of the arcsine Xi-deformation.
    XiArcsinePoisson { t: Q, lambda: Q },
}

impl LimitLaw {
    /// Exact moments from the asymptotic expansion of the closed form at
    /// infinity: square roots via binomial series, logarithms via the
    /// log(1 + u) series of an argument tending to one. The monotone
    /// Poisson factor has no closed form and enters through its constant
    /// cumulant sequence.
    pub fn moments(&self, order: usize) -> MomentSeq {
        match self {
            LimitLaw::KestenClt { alpha2, beta2 } => NamedLaw::Kesten {
                alpha2: alpha2.clone(),
                beta2: beta2.clone(),
            }
            .moments(order)
            .expect("kesten has moments"),
            LimitLaw::CMonotonePoisson { lambda, rho } => {
                let p_rho = moments_from_monotone_cumulants(&vec![rho.clone(); order]);
                let h = p_rho.to_h_series(order);
                MomentSeq::from_h_series(&HSeries::affine(&[(lambda / rho, &h)], order))
            }
            LimitLaw::DeformedCltT { t } | LimitLaw::XiArcsineClt { t } => NamedLaw::Kesten {
                alpha2: Q::one(),
                beta2: t.clone(),
            }
            .moments(order)
            .expect("kesten has moments"),
            LimitLaw::DeformedClt0a { a } => {
                // B = 1 - (1/a) w L(w), L = log(1 + a w)
                let mut u = Series::zero(order);
                if order >= 1 {
                    u.c[1] = a.clone();
                }
                let l = Series::log_one_plus(&u);
                let b = Series::one(order).sub(&l.shift_up().scale(&a.recip()));
                MomentSeq::from_h_series(&HSeries { b })
            }
            LimitLaw::DeformedPoissonUa { u, a, lambda } => {
                let c = a - u;
                let b = if c.is_zero() {
                    // H = z - lambda - lambda/(z-1):
                    // B = 1 - lambda w - lambda w^2/(1 - w)
                    let mut geom = Series::zero(order);
                    for i in 0..=order {
                        geom.c[i] = Q::one();
                    }
                    let corr = geom.shift_up().shift_up().scale(lambda);
                    let mut b = Series::one(order);
                    b = b.sub(&corr);
                    if order >= 1 {
                        b.c[1] = b.c[1].clone() - lambda;
                    }
                    b
                } else {
                    // arg = 1 + c lambda w/(1 - w)
                    let mut geom = Series::zero(order);
                    for i in 0..=order {
                        geom.c[i] = Q::one();
                    }
                    let inner = geom.shift_up().scale(&(&c * lambda));
                    let l = Series::log_one_plus(&inner);
                    let mut b = Series::one(order).sub(&l.shift_up().scale(&c.recip()));
                    if order >= 1 {
                        b.c[1] = b.c[1].clone() - lambda;
                    }
                    b
                };
                MomentSeq::from_h_series(&HSeries { b })
            }
            LimitLaw::XiArcsinePoisson { t, lambda } => {
                // B = (1 - 1/t) + (1/t) rho + (1/t) w log(1 + (rho-1)/(1-w)) - lambda w,
                // rho = (1 - 2 lambda t w^2)^{1/2}
                let mut sq_arg = Series::zero(order);
                if order >= 2 {
                    sq_arg.c[2] = -q(2) * lambda * t;
                }
                let rho = Series::pow_one_plus(&sq_arg, &qr(1, 2));
                let mut geom = Series::zero(order);
                for i in 0..=order {
                    geom.c[i] = Q::one();
                }
                let rho_minus_one = rho.sub(&Series::one(order));
                let log_arg = rho_minus_one.mul(&geom); // (rho - 1)/(1 - w), valuation 2
                let l = Series::log_one_plus(&log_arg);
                let tinv = t.recip();
                let mut b = Series::one(order)
                    .scale(&(Q::one() - &tinv))
                    .add(&rho.scale(&tinv))
                    .add(&l.shift_up().scale(&tinv));
                if order >= 1 {
                    b.c[1] = b.c[1].clone() - lambda;
                }
                b = b.truncated(order);
                MomentSeq::from_h_series(&HSeries { b })
            }
        }
    }

    /// Closed-form reciprocal Cauchy transform as an analytic expression
    /// tree, where one exists (the Poisson factor is ODE-defined).
    pub fn h_expr(&self) -> Option<Expr> {
        let f = |x: &Q| x.to_f64().unwrap();
        match self {
            LimitLaw::KestenClt { alpha2, beta2 } => {
                Some(kesten_expr(f(alpha2) / f(beta2), f(beta2)))
            }
            LimitLaw::DeformedCltT { t } | LimitLaw::XiArcsineClt { t } => {
                Some(kesten_expr(1.0 / f(t), f(t)))
            }
            LimitLaw::DeformedClt0a { a } => {
                let av = f(a);
                // z - (1/a) log(1 + a/z)
                Some(Expr::Sub(
                    Box::new(Expr::Z),
                    Box::new(Expr::Mul(
                        Box::new(Expr::c(1.0 / av)),
                        Box::new(Expr::Log1(Box::new(Expr::Add(
                            Box::new(Expr::c(1.0)),
                            Box::new(Expr::Div(Box::new(Expr::c(av)), Box::new(Expr::Z))),
                        )))),
                    )),
                ))
            }
            LimitLaw::DeformedPoissonUa { u, a, lambda } => {
                let c = f(a) - f(u);
                let lam = f(lambda);
                if c == 0.0 {
                    // z - lambda - lambda/(z - 1)
                    return Some(Expr::Sub(
                        Box::new(Expr::Sub(Box::new(Expr::Z), Box::new(Expr::c(lam)))),
                        Box::new(Expr::Div(
                            Box::new(Expr::c(lam)),
                            Box::new(Expr::Sub(Box::new(Expr::Z), Box::new(Expr::c(1.0)))),
                        )),
                    ));
                }
                // z - lambda - (1/c) log(1 + c lambda/(z - 1))
                Some(Expr::Sub(
                    Box::new(Expr::Sub(Box::new(Expr::Z), Box::new(Expr::c(lam)))),
                    Box::new(Expr::Mul(
                        Box::new(Expr::c(1.0 / c)),
                        Box::new(Expr::Log1(Box::new(Expr::Add(
                            Box::new(Expr::c(1.0)),
                            Box::new(Expr::Div(
                                Box::new(Expr::c(c * lam)),
                                Box::new(Expr::Sub(Box::new(Expr::Z), Box::new(Expr::c(1.0)))),
                            )),
                        )))),
                    )),
                ))
            }
            LimitLaw::XiArcsinePoisson { t, lambda } => {
                let (tv, lam) = (f(t), f(lambda));
                let root = Expr::Sqrt(Box::new(Expr::Sub(
                    Box::new(Expr::Mul(Box::new(Expr::Z), Box::new(Expr::Z))),
                    Box::new(Expr::c(2.0 * lam * tv)),
                )));
                // (1-1/t) z + (1/t) root + (1/t) log((root - 1)/(z - 1)) - lambda
                Some(Expr::Sub(
                    Box::new(Expr::Add(
                        Box::new(Expr::Add(
                            Box::new(Expr::Mul(
                                Box::new(Expr::c(1.0 - 1.0 / tv)),
                                Box::new(Expr::Z),
                            )),
                            Box::new(Expr::Mul(Box::new(Expr::c(1.0 / tv)), Box::new(root.clone()))),
                        )),
                        Box::new(Expr::Mul(
                            Box::new(Expr::c(1.0 / tv)),
                            Box::new(Expr::Log1(Box::new(Expr::Div(
                                Box::new(Expr::Sub(Box::new(root), Box::new(Expr::c(1.0)))),
                                Box::new(Expr::Sub(Box::new(Expr::Z), Box::new(Expr::c(1.0)))),
                            )))),
                        )),
                    )),
                    Box::new(Expr::c(lam)),
                ))
            }
            LimitLaw::CMonotonePoisson { .. } => None,
        }
    }

    /// Evaluate H in the upper half plane: the expression tree where there
    /// is one, the integrated pair flow for the Poisson factor.
    pub fn h_eval(&self, z: Complex64) -> Result<Complex64, TransformError> {
        match self {
            LimitLaw::CMonotonePoisson { lambda, rho } => {
                let a1 = PickField::poisson(lambda.clone());
                let a2 = PickField::poisson(rho.clone());
                let (h, _) = integrate_point(&a1, &a2, z, 1.0, 1e-12)
                    .map_err(|e| TransformError::Eval(e.to_string()))?;
                Ok(h)
            }
            law => law
                .h_expr()
                .expect("all non-Poisson laws have closed forms")
                .eval(z),
        }
    }

    /// G = 1/H on the upper half plane.
    pub fn g_eval(&self, z: Complex64) -> Result<Complex64, TransformError> {
        Ok(1.0 / self.h_eval(z)?)
    }

    /// Boundary value of H on the real line where it is real (off the
    /// absolutely continuous support); None inside the support or at
    /// undefined points.
    pub fn h_boundary_real(&self, x: f64) -> Option<f64> {
        let f = |v: &Q| v.to_f64().unwrap();
        match self {
            LimitLaw::KestenClt { alpha2, beta2 } => {
                let r = f(alpha2) / f(beta2);
                let c = 2.0 * f(beta2);
                if x * x <= c {
                    return None;
                }
                let s = x.signum() * (x * x - c).sqrt();
                Some((1.0 - r) * x + r * s)
            }
            LimitLaw::DeformedCltT { t } | LimitLaw::XiArcsineClt { t } => LimitLaw::KestenClt {
                alpha2: Q::one(),
                beta2: t.clone(),
            }
            .h_boundary_real(x),
            LimitLaw::DeformedClt0a { a } => {
                let av = f(a);
                let arg = 1.0 + av / x;
                if x == 0.0 || arg <= 0.0 {
                    return None;
                }
                Some(x - arg.ln() / av)
            }
            LimitLaw::DeformedPoissonUa { u, a, lambda } => {
                let c = f(a) - f(u);
                let lam = f(lambda);
                if c == 0.0 {
                    if x == 1.0 {
                        return None;
                    }
                    return Some(x - lam - lam / (x - 1.0));
                }
                let arg = 1.0 + c * lam / (x - 1.0);
                if x == 1.0 || arg <= 0.0 {
                    return None;
                }
                Some(x - lam - arg.ln() / c)
            }
            LimitLaw::XiArcsinePoisson { t, lambda } => {
                let (tv, lam) = (f(t), f(lambda));
                let c = 2.0 * lam * tv;
                if x * x <= c {
                    return None;
                }
                let s = x.signum() * (x * x - c).sqrt();
                let arg = (s - 1.0) / (x - 1.0);
                if x == 1.0 || arg <= 0.0 {
                    return None;
                }
                Some((1.0 - 1.0 / tv) * x + s / tv + arg.ln() / tv - lam)
            }
            LimitLaw::CMonotonePoisson { .. } => None,
        }
    }

    /// Absolutely continuous support intervals, where known in closed form.
    pub fn ac_support(&self) -> Vec<(f64, f64)> {
        let f = |v: &Q| v.to_f64().unwrap();
        match self {
            LimitLaw::KestenClt { beta2, .. } => {
                let s = (2.0 * f(beta2)).sqrt();
                vec![(-s, s)]
            }
            LimitLaw::DeformedCltT { t } | LimitLaw::XiArcsineClt { t } => {
                let s = (2.0 * f(t)).sqrt();
                vec![(-s, s)]
            }
            LimitLaw::DeformedClt0a { a } => {
                let av = f(a);
                if av > 0.0 {
                    vec![(-av, 0.0)]
                } else {
                    vec![(0.0, -av)]
                }
            }
            LimitLaw::DeformedPoissonUa { u, a, lambda } => {
                let c = f(a) - f(u);
                let lam = f(lambda);
                if c > 0.0 {
                    vec![(1.0 - c * lam, 1.0)]
                } else {
                    vec![(1.0, 1.0 - c * lam)]
                }
            }
            LimitLaw::XiArcsinePoisson { t, lambda } => {
                let c = 2.0 * f(lambda) * f(t);
                let s = c.sqrt();
                vec![(-s, s), (1.0, (c + 1.0).sqrt())]
            }
            LimitLaw::CMonotonePoisson { .. } => Vec::new(),
        }
    }

    /// Intervals to search for atoms (zeros of the real boundary H).
    pub fn atom_intervals(&self) -> Vec<(f64, f64)> {
        let f = |v: &Q| v.to_f64().unwrap();
        const FAR: f64 = 60.0;
        const EPS: f64 = 1e-7;
        match self {
            LimitLaw::KestenClt { alpha2, beta2 } => {
                if alpha2 > beta2 {
                    let s = (2.0 * f(beta2)).sqrt();
                    vec![(-FAR, -s - EPS), (s + EPS, FAR)]
                } else {
                    Vec::new()
                }
            }
            LimitLaw::DeformedCltT { t } | LimitLaw::XiArcsineClt { t } => LimitLaw::KestenClt {
                alpha2: Q::one(),
                beta2: t.clone(),
            }
            .atom_intervals(),
            LimitLaw::DeformedClt0a { a } => {
                let av = f(a);
                if av > 0.0 {
                    vec![(-FAR, -av - EPS), (EPS, FAR)]
                } else {
                    vec![(-FAR, -EPS), (-av + EPS, FAR)]
                }
            }
            LimitLaw::DeformedPoissonUa { u, a, lambda } => {
                let c = f(a) - f(u);
                let lam = f(lambda);
                if c > 0.0 {
                    vec![(-FAR, 1.0 - c * lam - EPS), (1.0 + EPS, FAR)]
                } else {
                    vec![(-FAR, 1.0 - EPS), (1.0 - c * lam + EPS, FAR)]
                }
            }
            LimitLaw::XiArcsinePoisson { t, lambda } => {
                let c = 2.0 * f(lambda) * f(t);
                let s = c.sqrt();
                let mut iv = vec![(-FAR, -s - EPS)];
                if s < 1.0 {
                    iv.push((s + EPS, 1.0 - EPS));
                }
                iv.push(((c + 1.0).sqrt() + EPS, FAR));
                iv
            }
            LimitLaw::CMonotonePoisson { .. } => Vec::new(),
        }
    }
}

fn kesten_expr(r: f64, beta2: f64) -> Expr {
    // (1 - r) z + r sqrt(z^2 - 2 beta2)
    Expr::Add(
        Box::new(Expr::Mul(Box::new(Expr::c(1.0 - r)), Box::new(Expr::Z))),
        Box::new(Expr::Mul(
            Box::new(Expr::c(r)),
            Box::new(Expr::Sqrt(Box::new(Expr::Sub(
                Box::new(Expr::Mul(Box::new(Expr::Z), Box::new(Expr::Z))),
                Box::new(Expr::c(2.0 * beta2)),
            )))),
        )),
    )
}

// ---------------------------------------------------------------------------
// Iterates
// ---------------------------------------------------------------------------

/// How the CLT iterate convolves.
#[derive(Clone, Debug)]
pub enum CltMode {
    /// Pair mode: (D mu, D nu)^{|> N}; carries nu.
    Pair(MomentSeq),
    /// Deformed mode: (D mu)^{|>_T N}.
    Deformed(Transform),
}

fn dilate_inv_sqrt(m: &MomentSeq, n: u32) -> Result<MomentSeq, LimitsError> {
    // m_j -> m_j / N^{j/2}; odd orders need sqrt(N) rational or a zero moment
    let sqrt_n = (n as f64).sqrt().round() as u32;
    let is_square = sqrt_n * sqrt_n == n;
    let mut vals = Vec::with_capacity(m.order());
    for (j0, v) in m.values().iter().enumerate() {
        let j = j0 + 1;
        if j % 2 == 0 {
            let mut den = Q::one();
            for _ in 0..j / 2 {
                den *= q(n as i64);
            }
            vals.push(v / den);
        } else if v.is_zero() {
            vals.push(Q::zero());
        } else if is_square {
            let mut den = Q::one();
            for _ in 0..j {
                den *= q(sqrt_n as i64);
            }
            vals.push(v / den);
        } else {
            return Err(LimitsError::IrrationalScale(j));
        }
    }
    Ok(MomentSeq::new(vals))
}

/// Exact moments of the N-fold CLT iterate (first component in pair mode).
pub fn clt_iterate(mu: &MomentSeq, mode: &CltMode, n: u32, order: usize) -> Result<MomentSeq, LimitsError> {
    if n == 0 {
        return Err(LimitsError::ZeroIterations);
    }
    if !mu.mean().is_zero() {
        return Err(LimitsError::NotNormalized);
    }
    let dm = dilate_inv_sqrt(&mu.truncated(order), n)?;
    match mode {
        CltMode::Pair(nu) => {
            if !nu.mean().is_zero() {
                return Err(LimitsError::NotNormalized);
            }
            let dn = dilate_inv_sqrt(&nu.truncated(order), n)?;
            let base = MeasurePair::new(dm, dn);
            let mut acc = base.clone();
            for _ in 1..n {
                acc = cmonotone_convolve(&acc, &base);
            }
            Ok(acc.first)
        }
        CltMode::Deformed(t) => {
            let mut acc = dm.clone();
            for _ in 1..n {
                acc = deformed_convolve_moments(t, &acc, &dm)?;
            }
            Ok(acc)
        }
    }
}

/// How the Poisson iterate convolves.
#[derive(Clone, Debug)]
pub enum PoissonMode {
    /// Pair mode with second-component rate rho.
    Pair(Q),
    /// Deformed mode.
    Deformed(Transform),
}

/// Exact moments of the N-fold Poisson iterate built from the two-point
/// laws (1 - lambda/N) delta_0 + (lambda/N) delta_1.
pub fn poisson_iterate(
    lambda: &Q,
    mode: &PoissonMode,
    n: u32,
    order: usize,
) -> Result<MomentSeq, LimitsError> {
    if n == 0 {
        return Err(LimitsError::ZeroIterations);
    }
    let base_mu = MomentSeq::new(vec![lambda / q(n as i64); order]);
    match mode {
        PoissonMode::Pair(rho) => {
            let base_nu = MomentSeq::new(vec![rho / q(n as i64); order]);
            let base = MeasurePair::new(base_mu, base_nu);
            let mut acc = base.clone();
            for _ in 1..n {
                acc = cmonotone_convolve(&acc, &base);
            }
            Ok(acc.first)
        }
        PoissonMode::Deformed(t) => {
            let mut acc = base_mu.clone();
            for _ in 1..n {
                acc = deformed_convolve_moments(t, &acc, &base_mu)?;
            }
            Ok(acc)
        }
    }
}

/// Limit kind for the cumulant-reconstruction route.
#[derive(Clone, Debug)]
pub enum LimitKind {
    /// Central limit: deformed cumulants (0, 1, 0, 0, ...).
    Clt,
    /// Poisson limit: all deformed cumulants equal lambda.
    Poisson(Q),
}

/// Moments of the deformed limit law reconstructed from its T-cumulants
/// r_n(mu, T mu): the independent route against the closed-form series.
pub fn deformed_limit_moments(
    t: &Transform,
    kind: &LimitKind,
    order: usize,
) -> Result<MomentSeq, LimitsError> {
    let r_target: Vec<Q> = match kind {
        LimitKind::Clt => (1..=order)
            .map(|n| if n == 2 { Q::one() } else { Q::zero() })
            .collect(),
        LimitKind::Poisson(lambda) => vec![lambda.clone(); order],
    };
    let mut m: Vec<Q> = Vec::with_capacity(order);
    for n in 1..=order {
        let r_inner: Vec<Q> = if n <= 2 {
            vec![Q::zero(); n]
        } else {
            let t_mom = t.apply_moments(&MomentSeq::new(m.clone()))?;
            let mut r = crate::cumulants::monotone_extract(t_mom.values()).r_pair;
            r.resize(n, Q::zero());
            r
        };
        let mn = partitions::eval_cmonotone_formula(&r_target[..n], &r_inner, n)
            .expect("order within cap");
        m.push(mn);
    }
    Ok(MomentSeq::new(m))
}

// ---------------------------------------------------------------------------
// Densities, atoms, mass
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct DensityTable {
    pub rows: Vec<(f64, f64)>,
    pub atoms: Vec<(f64, f64)>,
    pub total_mass: f64,
}

/// Density at one point by Stieltjes inversion of the closed-form G.
pub fn limit_law_density_at(law: &LimitLaw, x: f64) -> Result<f64, TransformError> {
    let g = |z: Complex64| law.g_eval(z).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    stieltjes_density(&g, x, LadderOptions::default())
}

/// Density table on a uniform grid plus located atoms and the total mass
/// (integrated density + atom weights).
pub fn limit_law_density(
    law: &LimitLaw,
    grid_from: f64,
    grid_to: f64,
    points: usize,
) -> Result<DensityTable, TransformError> {
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let x = grid_from + (grid_to - grid_from) * (i as f64) / ((points - 1).max(1) as f64);
        let d = limit_law_density_at(law, x).unwrap_or(0.0);
        rows.push((x, d));
    }
    let atoms = find_atoms(law);
    let mut total = atoms.iter().map(|&(_, w)| w).sum::<f64>();
    for (a, b) in law.ac_support() {
        total += integrate_density(law, a, b);
    }
    Ok(DensityTable {
        rows,
        atoms,
        total_mass: total,
    })
}

/// Locate the law's atoms on its candidate intervals.
pub fn find_atoms(law: &LimitLaw) -> Vec<(f64, f64)> {
    let h = |x: f64| law.h_boundary_real(x);
    locate_atoms(&h, &law.atom_intervals())
        .into_iter()
        .flatten()
        .collect()
}

/// Integrate the density over [a, b] with the sine substitution
/// x = m + h sin(theta) (absorbs square-root edge behavior), composite
/// Simpson in theta.
fn integrate_density(law: &LimitLaw, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let n = 240usize; // even
    let theta = |j: usize| -> f64 {
        -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (j as f64) / (n as f64)
    };
    let f = |j: usize| -> f64 {
        let th = theta(j);
        let x = mid + half * th.sin();
        let d = limit_law_density_at(law, x).unwrap_or(0.0);
        d * half * th.cos()
    };
    let mut acc = f(0) + f(n);
    for j in 1..n {
        acc += f(j) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * std::f64::consts::PI / (n as f64) / 3.0
}

/// Reference density of the V_{0,0,a} central limit law:
/// |a| / ((log|1 + a/x| - a x)^2 + pi^2) on the stated support.
pub fn deformed_clt_0a_density(a: f64, x: f64) -> f64 {
    let arg = (1.0 + a / x).abs();
    let l = arg.ln() - a * x;
    a.abs() / (l * l + std::f64::consts::PI * std::f64::consts::PI)
}

/// Reference density of the Kesten CLT law nu^{(t,0)} for t >= 1:
/// sqrt(2t - x^2) / (1 - (1 - t/2) x^2) / (2 pi).
pub fn kesten_clt_density(t: f64, x: f64) -> f64 {
    (2.0 * t - x * x).sqrt() / (1.0 - (1.0 - t / 2.0) * x * x) / (2.0 * std::f64::consts::PI)
}

/// Empirical log-log convergence slope of errs(N) across doubling N.
pub fn convergence_slope(errs: &[(u32, f64)]) -> f64 {
    // least-squares slope of log(err) against log(N), sign flipped
    let pts: Vec<(f64, f64)> = errs
        .iter()
        .filter(|&&(_, e)| e > 0.0)
        .map(|&(n, e)| ((n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    -(n * sxy - sx * sy) / (n * sxx - sx * sx)
}

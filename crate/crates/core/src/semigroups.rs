//! Levy-Khintchine vector fields, ODE integration of the pair flow,
//! semigroup-law verification, infinite divisibility and n-th roots.

use crate::measures::MomentSeq;
use crate::partitions;
use crate::ring::Q;
use num::complex::Complex64;
use num::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("trajectory left the upper half plane at t = {0}")]
    LeftUpperHalfPlane(f64),
    #[error("step size underflow in the adaptive integrator")]
    StepUnderflow,
    #[error("need cumulants up to order {0}, got {1}")]
    InsufficientOrder(usize, usize),
}

/// Pick-function vector field A(z) = -gamma + sum w (1 + x z)/(x - z) with a
/// finite positive atomic measure tau.
#[derive(Clone, PartialEq, Debug)]
pub struct PickField {
    pub gamma: Q,
    pub tau: Vec<(Q, Q)>,
}

impl PickField {
    pub fn new(gamma: Q, tau: Vec<(Q, Q)>) -> Self {
        assert!(tau.iter().all(|(_, w)| w.is_positive() || w.is_zero()));
        PickField { gamma, tau }
    }

    pub fn zero() -> Self {
        PickField {
            gamma: Q::zero(),
            tau: Vec::new(),
        }
    }

    /// The field generating the arcsine (monotone Gaussian) semigroup of
    /// variance rate beta2: A(z) = -beta2/z.
    pub fn arcsine(beta2: Q) -> Self {
        PickField {
            gamma: Q::zero(),
            tau: vec![(Q::zero(), beta2)],
        }
    }

    /// The monotone Poisson field of rate rho: A(z) = rho z / (1 - z).
    pub fn poisson(rho: Q) -> Self {
        let half = &rho / Q::from_integer(2.into());
        PickField {
            gamma: half.clone(),
            tau: vec![(Q::from_integer(1.into()), half)],
        }
    }

    /// Constant drift field A(z) = -a (generates delta_{a t}).
    pub fn drift(a: Q) -> Self {
        PickField {
            gamma: a,
            tau: Vec::new(),
        }
    }

    pub fn scale(&self, s: &Q) -> Self {
        PickField {
            gamma: &self.gamma * s,
            tau: self.tau.iter().map(|(x, w)| (x.clone(), w * s)).collect(),
        }
    }

    pub fn add(&self, rhs: &PickField) -> Self {
        let mut tau = self.tau.clone();
        // merge atoms at equal locations
        'outer: for (x, w) in &rhs.tau {
            for (y, v) in tau.iter_mut() {
                if y == x {
                    *v = &*v + w;
                    continue 'outer;
                }
            }
            tau.push((x.clone(), w.clone()));
        }
        PickField {
            gamma: &self.gamma + &rhs.gamma,
            tau,
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(-self.gamma.to_f64().unwrap(), 0.0);
        for (x, w) in &self.tau {
            let xf = Complex64::new(x.to_f64().unwrap(), 0.0);
            let wf = w.to_f64().unwrap();
            acc += wf * (1.0 + xf * z) / (xf - z);
        }
        acc
    }

    /// Cumulants from the asymptotic expansion of the kernel:
    /// r_1 = gamma + m_1(tau), r_n = m_{n-2}(tau) + m_n(tau) for n >= 2,
    /// where m_0(tau) is the total mass.
    pub fn to_cumulants(&self, order: usize) -> Vec<Q> {
        let mut power_sums = vec![Q::zero(); order + 1];
        // power_sums[k] = sum w x^k; k = 0 is the mass
        for (x, w) in &self.tau {
            let mut p = Q::from_integer(1.into());
            for slot in power_sums.iter_mut() {
                *slot = &*slot + &(w * &p);
                p = &p * x;
            }
        }
        let mut r = Vec::with_capacity(order);
        if order >= 1 {
            r.push(&self.gamma + &power_sums[1]);
        }
        for n in 2..=order {
            r.push(&power_sums[n - 2] + &power_sums[n]);
        }
        r
    }

    /// Reconstruct a field from the first three cumulants with a single-atom
    /// tau (the small-order inverse used by round-trip checks).
    pub fn from_first_cumulants(r1: &Q, r2: &Q, r3: &Q) -> Option<PickField> {
        if r2.is_zero() {
            if !r3.is_zero() {
                return None;
            }
            return Some(PickField::drift(r1.clone()));
        }
        if r2.is_negative() {
            return None;
        }
        let x = r3 / r2;
        let w = r2 / (Q::from_integer(1.into()) + &x * &x);
        let gamma = r1 - &w * &x;
        Some(PickField {
            gamma,
            tau: vec![(x, w)],
        })
    }
}

// ---------------------------------------------------------------------------
// Adaptive Runge-Kutta on the coupled pair flow
// ---------------------------------------------------------------------------

/// Dormand-Prince 4(5) on the autonomous system dF/dt = A2(F),
/// dH/dt = A1(F), from (z, z) at t = 0. Returns (H_t(z), F_t(z)).
pub fn integrate_point(
    a1: &PickField,
    a2: &PickField,
    z: Complex64,
    t_end: f64,
    tol: f64,
) -> Result<(Complex64, Complex64), FlowError> {
    if t_end == 0.0 {
        return Ok((z, z));
    }
    let deriv = |state: [Complex64; 2]| -> [Complex64; 2] {
        let f = state[0];
        [a2.eval(f), a1.eval(f)]
    };
    // Butcher tableau (Dormand-Prince)
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut t = 0.0f64;
    let mut y = [z, z]; // (F, H)
    let mut h = (t_end / 16.0).clamp(1e-6, 0.1);
    let mut k = [[Complex64::new(0.0, 0.0); 2]; 7];
    while t < t_end {
        if h < 1e-15 {
            return Err(FlowError::StepUnderflow);
        }
        if t + h > t_end {
            h = t_end - t;
        }
        k[0] = deriv(y);
        for stage in 1..7 {
            let mut ys = y;
            for (prev, kprev) in k.iter().enumerate().take(stage) {
                let coeff = if stage < 7 { A[stage - 1][prev] } else { 0.0 };
                ys[0] += h * coeff * kprev[0];
                ys[1] += h * coeff * kprev[1];
            }
            k[stage] = deriv(ys);
        }
        let mut y5 = y;
        let mut y4 = y;
        for stage in 0..7 {
            y5[0] += h * B5[stage] * k[stage][0];
            y5[1] += h * B5[stage] * k[stage][1];
            y4[0] += h * B4[stage] * k[stage][0];
            y4[1] += h * B4[stage] * k[stage][1];
        }
        let scale = 1.0 + y[0].norm().max(y[1].norm());
        let err = ((y5[0] - y4[0]).norm().powi(2) + (y5[1] - y4[1]).norm().powi(2)).sqrt() / scale;
        if err <= tol {
            t += h;
            y = y5;
            if y[0].im <= 0.0 {
                return Err(FlowError::LeftUpperHalfPlane(t));
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok((y[1], y[0]))
}

/// Snapshot of the flow at one time over a grid of upper-half-plane points.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub grid: Vec<Complex64>,
    pub h: Vec<Complex64>,
    pub f: Vec<Complex64>,
}

impl FlowState {
    /// Least-squares moment recovery from the H snapshot (meaningful when
    /// the grid encircles the support, see [`fit_grid`]).
    pub fn fitted_moments(&self, order: usize) -> Vec<f64> {
        let pts: Vec<(Complex64, Complex64)> = self
            .grid
            .iter()
            .cloned()
            .zip(self.h.iter().cloned())
            .collect();
        fit_moments_from_h(&pts, order)
    }

    /// Im F >= Im z and Im H >= Im z on the grid (with float slack).
    pub fn is_upper_expanding(&self, slack: f64) -> bool {
        self.grid.iter().zip(self.h.iter().zip(self.f.iter())).all(
            |(z, (h, f))| h.im >= z.im - slack && f.im >= z.im - slack,
        )
    }
}

/// Default flow grid: 40 points, Re in [-3, 3], Im cycling {0.5, 1, 2}.
pub fn default_grid() -> Vec<Complex64> {
    let ims = [0.5, 1.0, 2.0];
    (0..40)
        .map(|k| Complex64::new(-3.0 + 6.0 * (k as f64) / 39.0, ims[k % 3]))
        .collect()
}

fn thread_cap() -> usize {
    std::env::var("CMONO_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get().min(8))
                .unwrap_or(1)
        })
}

/// Integrate the pair flow to time t over a grid; trajectories run in
/// parallel (capped by CMONO_THREADS).
pub fn integrate_flow(
    a1: &PickField,
    a2: &PickField,
    t: f64,
    grid: &[Complex64],
    tol: f64,
) -> Result<FlowState, FlowError> {
    let workers = thread_cap().min(grid.len().max(1));
    let chunk = grid.len().div_ceil(workers);
    let mut results: Vec<Result<(Complex64, Complex64), FlowError>> =
        vec![Err(FlowError::StepUnderflow); grid.len()];
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (ci, points) in grid.chunks(chunk).enumerate() {
            let handle = scope.spawn(move || {
                points
                    .iter()
                    .map(|&z| integrate_point(a1, a2, z, t, tol))
                    .collect::<Vec<_>>()
            });
            handles.push((ci, handle));
        }
        for (ci, handle) in handles {
            let out = handle.join().expect("integrator thread panicked");
            for (i, r) in out.into_iter().enumerate() {
                results[ci * chunk + i] = r;
            }
        }
    });
    let mut h = Vec::with_capacity(grid.len());
    let mut f = Vec::with_capacity(grid.len());
    for r in results {
        let (hv, fv) = r?;
        h.push(hv);
        f.push(fv);
    }
    Ok(FlowState {
        t,
        grid: grid.to_vec(),
        h,
        f,
    })
}

#[derive(Clone, Debug)]
pub struct LawReport {
    pub max_f_residual: f64,
    pub max_h_residual: f64,
}

impl LawReport {
    pub fn passes(&self, threshold: f64) -> bool {
        self.max_f_residual < threshold && self.max_h_residual < threshold
    }
}

/// Residuals of F_{s+t} = F_s o F_t and
/// H_{s+t}(z) = H_t(F_s(z)) - F_s(z) + H_s(z) over the grid.
pub fn verify_semigroup_law(
    a1: &PickField,
    a2: &PickField,
    s: f64,
    t: f64,
    grid: &[Complex64],
    tol: f64,
) -> Result<LawReport, FlowError> {
    let mut max_f = 0.0f64;
    let mut max_h = 0.0f64;
    for &z in grid {
        let (h_st, f_st) = integrate_point(a1, a2, z, s + t, tol)?;
        let (h_s, f_s) = integrate_point(a1, a2, z, s, tol)?;
        let (h_t_at_fs, f_t_at_fs) = integrate_point(a1, a2, f_s, t, tol)?;
        let f_resid = (f_st - f_t_at_fs).norm();
        let h_resid = (h_st - (h_t_at_fs - f_s + h_s)).norm();
        max_f = max_f.max(f_resid);
        max_h = max_h.max(h_resid);
    }
    Ok(LawReport {
        max_f_residual: max_f,
        max_h_residual: max_h,
    })
}

// ---------------------------------------------------------------------------
// Infinite divisibility: shifted-cumulant Hankel positivity
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct DivisibilityVerdict {
    pub divisible: bool,
    pub pair_psd: bool,
    pub companion_psd: bool,
    pub min_eig: f64,
    /// Exact minor test and float eigenvalue test agree on both matrices.
    pub tracks_agree: bool,
}

/// Hankel matrix [r_{i+j}]_{i,j=1..k} from a cumulant list (r[0] = r_1).
pub fn shifted_hankel(r: &[Q], k: usize) -> Result<Vec<Vec<Q>>, FlowError> {
    if r.len() < 2 * k {
        return Err(FlowError::InsufficientOrder(2 * k, r.len()));
    }
    Ok((1..=k)
        .map(|i| (1..=k).map(|j| r[i + j - 1].clone()).collect())
        .collect())
}

/// Exact positive semidefiniteness: every principal minor is nonnegative.
pub fn psd_exact(m: &[Vec<Q>]) -> bool {
    let k = m.len();
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| (mask >> i) & 1 == 1).collect();
        let sub: Vec<Vec<Q>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| m[i][j].clone()).collect())
            .collect();
        if det_q(sub).is_negative() {
            return false;
        }
    }
    true
}

fn det_q(mut m: Vec<Vec<Q>>) -> Q {
    let n = m.len();
    let mut det = Q::from_integer(1.into());
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero());
        let Some(p) = pivot else {
            return Q::zero();
        };
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let pv = m[col][col].clone();
        det *= &pv;
        for r in col + 1..n {
            let factor = &m[r][col] / &pv;
            for c in col..n {
                let delta = &factor * &m[col][c];
                m[r][c] = &m[r][c] - &delta;
            }
        }
    }
    det
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
pub fn min_eigenvalue(m: &[Vec<Q>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .map(|row| row.iter().map(|x| x.to_f64().unwrap()).collect())
        .collect();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let (aip, aiq) = (a[i][p], a[i][q]);
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let (api, aqi) = (a[p][i], a[q][i]);
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}

/// Order-k necessary condition for c-monotone infinite divisibility: both
/// shifted-cumulant Hankels positive semidefinite, tested exactly and in
/// floating point.
pub fn is_infinitely_divisible(
    r_pair: &[Q],
    r_nu: &[Q],
    k: usize,
) -> Result<DivisibilityVerdict, FlowError> {
    let h1 = shifted_hankel(r_pair, k)?;
    let h2 = shifted_hankel(r_nu, k)?;
    let e1 = psd_exact(&h1);
    let e2 = psd_exact(&h2);
    let m1 = min_eigenvalue(&h1);
    let m2 = min_eigenvalue(&h2);
    let f1 = m1 >= -1e-10;
    let f2 = m2 >= -1e-10;
    Ok(DivisibilityVerdict {
        divisible: e1 && e2,
        pair_psd: e1,
        companion_psd: e2,
        min_eig: m1.min(m2),
        tracks_agree: e1 == f1 && e2 == f2,
    })
}

/// The unique formal n-th root: cumulants divided by n, moments rebuilt with
/// the partition-sum evaluator.
#[derive(Clone, Debug, PartialEq)]
pub struct PairRoot {
    pub r_pair: Vec<Q>,
    pub r_nu: Vec<Q>,
    pub moments_mu: MomentSeq,
    pub moments_nu: MomentSeq,
}

pub fn nth_root(r_pair: &[Q], r_nu: &[Q], n: u32) -> PairRoot {
    let s = Q::from_integer(n.into()).recip();
    let rp: Vec<Q> = r_pair.iter().map(|x| x * &s).collect();
    let rn: Vec<Q> = r_nu.iter().map(|x| x * &s).collect();
    let order = rp.len().min(rn.len());
    let mut m_mu = Vec::with_capacity(order);
    let mut m_nu = Vec::with_capacity(order);
    for k in 1..=order {
        m_mu.push(partitions::eval_cmonotone_formula(&rp, &rn, k).expect("order within cap"));
        m_nu.push(partitions::eval_monotone_formula(&rn, k).expect("order within cap"));
    }
    PairRoot {
        r_pair: rp,
        r_nu: rn,
        moments_mu: MomentSeq::new(m_mu),
        moments_nu: MomentSeq::new(m_nu),
    }
}

// ---------------------------------------------------------------------------
// Moment recovery from flow snapshots
// ---------------------------------------------------------------------------

/// Least-squares fit of G(z) = sum_{n=0..order} m_n z^{-(n+1)} through flow
/// values of H on a semicircle |z| = radius; returns m_1..m_order.
pub fn fit_moments_from_h(points: &[(Complex64, Complex64)], order: usize) -> Vec<f64> {
    let k = order + 1; // unknowns m_0..m_order
    let rows: Vec<(Vec<Complex64>, Complex64)> = points
        .iter()
        .map(|&(z, h)| {
            let g = 1.0 / h;
            let mut basis = Vec::with_capacity(k);
            let mut p = 1.0 / z;
            for _ in 0..k {
                basis.push(p);
                p /= z;
            }
            (basis, g)
        })
        .collect();
    // normal equations with real unknowns
    let mut a = vec![vec![0.0f64; k]; k];
    let mut b = vec![0.0f64; k];
    for (basis, g) in &rows {
        for p in 0..k {
            for q in 0..k {
                a[p][q] += (basis[p].conj() * basis[q]).re;
            }
            b[p] += (basis[p].conj() * g).re;
        }
    }
    solve_f64(&mut a, &mut b);
    b[1..].to_vec()
}

fn solve_f64(a: &mut [Vec<f64>], b: &mut [f64]) {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let pv = a[col][col];
        for r in 0..n {
            if r == col || a[r][col] == 0.0 {
                continue;
            }
            let f = a[r][col] / pv;
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    for i in 0..n {
        b[i] /= a[i][i];
    }
}

/// Semicircle of points for moment fitting, radius beyond the support.
pub fn fit_grid(radius: f64, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|j| {
            let theta = std::f64::consts::PI * (j as f64 + 0.5) / count as f64;
            Complex64::new(radius * theta.cos(), radius * theta.sin())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{q, qr};

    #[test]
    fn arcsine_field_cumulants() {
        let f = PickField::arcsine(q(1));
        assert_eq!(f.to_cumulants(5), vec![q(0), q(1), q(0), q(0), q(0)]);
    }

    #[test]
    fn poisson_field_cumulants_all_equal_rate() {
        let f = PickField::poisson(qr(3, 2));
        assert_eq!(f.to_cumulants(5), vec![qr(3, 2); 5]);
        // matches the flow dH/dt = rho H/(1 - H) at sample points
        let z = Complex64::new(0.3, 1.2);
        let rho = 1.5;
        let direct = rho * z / (1.0 - z);
        assert!((f.eval(z) - direct).norm() < 1e-12);
    }

    #[test]
    fn drift_field() {
        let f = PickField::drift(qr(5, 3));
        assert_eq!(f.to_cumulants(4), vec![qr(5, 3), q(0), q(0), q(0)]);
        let z = Complex64::new(0.0, 1.0);
        assert!((f.eval(z) - Complex64::new(-5.0 / 3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn field_round_trip_small_order() {
        for (r1, r2, r3) in [
            (q(1), q(2), q(3)),
            (q(0), q(1), q(0)),
            (qr(1, 2), qr(3, 4), qr(-1, 3)),
            (q(2), q(0), q(0)),
        ] {
            let f = PickField::from_first_cumulants(&r1, &r2, &r3).unwrap();
            let r = f.to_cumulants(3);
            assert_eq!(r, vec![r1, r2, r3]);
        }
    }

    #[test]
    fn arcsine_flow_matches_closed_form() {
        let a = PickField::arcsine(q(1));
        let grid = default_grid();
        let state = integrate_flow(&a, &a, 1.0, &grid, 1e-12).unwrap();
        let mut max_err = 0.0f64;
        for (z, f) in state.grid.iter().zip(state.f.iter()) {
            let w = z * z - Complex64::new(2.0, 0.0);
            let closed = crate::transforms::sqrt_checked(w).unwrap();
            max_err = max_err.max((f - closed).norm());
        }
        assert!(max_err < 1e-9, "max error {max_err}");
        assert!(state.is_upper_expanding(1e-9));
    }

    #[test]
    fn t_transform_flow_is_affine_in_f() {
        // A1 = r A2 gives H_t = (1 - r) z + r F_t.
        let r = 0.65;
        let a2 = PickField::arcsine(q(1));
        let a1 = a2.scale(&qr(13, 20));
        let grid = default_grid();
        let state = integrate_flow(&a1, &a2, 1.0, &grid, 1e-12).unwrap();
        let mut max_err = 0.0f64;
        for ((z, h), f) in state.grid.iter().zip(state.h.iter()).zip(state.f.iter()) {
            let expect = (1.0 - r) * z + r * f;
            max_err = max_err.max((h - expect).norm());
        }
        assert!(max_err < 1e-8, "max error {max_err}");
    }

    #[test]
    fn semigroup_law_residuals() {
        let grid = default_grid();
        let a = PickField::arcsine(q(1));
        let rep = verify_semigroup_law(&a, &a, 0.5, 0.5, &grid, 1e-12).unwrap();
        assert!(rep.passes(1e-8), "{rep:?}");
        let p = PickField::poisson(q(1));
        let rep = verify_semigroup_law(&p, &p, 0.3, 0.7, &grid, 1e-12).unwrap();
        assert!(rep.passes(1e-8), "{rep:?}");
        // zero fields: exact identity
        let z = PickField::zero();
        let rep = verify_semigroup_law(&z, &z, 0.4, 0.6, &grid, 1e-12).unwrap();
        assert!(rep.max_f_residual == 0.0 && rep.max_h_residual == 0.0);
    }

    #[test]
    fn hankel_verdicts() {
        // arcsine pair: r_2 = 1, others 0 -> PSD
        let arc = vec![q(0), q(1), q(0), q(0)];
        let v = is_infinitely_divisible(&arc, &arc, 2).unwrap();
        assert!(v.divisible && v.tracks_agree);
        // Bernoulli monotone cumulants (0, 1, 0, -1/2): [[1,0],[0,-1/2]] fails
        let bern = vec![q(0), q(1), q(0), qr(-1, 2)];
        let v = is_infinitely_divisible(&bern, &bern, 2).unwrap();
        assert!(!v.divisible && v.tracks_agree);
        assert!(v.min_eig < -0.4);
        // Poisson: all-rho Hankel is PSD
        let poi = vec![qr(3, 2); 8];
        let v = is_infinitely_divisible(&poi, &poi, 4).unwrap();
        assert!(v.divisible && v.tracks_agree);
        // order guard
        assert_eq!(
            is_infinitely_divisible(&arc, &arc, 3).unwrap_err(),
            FlowError::InsufficientOrder(6, 4)
        );
    }

    #[test]
    fn psd_exact_catches_degenerate_traps() {
        // [[0,0],[0,-1]] has all leading minors zero but is not PSD
        let m = vec![vec![q(0), q(0)], vec![q(0), q(-1)]];
        assert!(!psd_exact(&m));
        let id = vec![vec![q(1), q(0)], vec![q(0), q(0)]];
        assert!(psd_exact(&id));
    }

    #[test]
    fn nth_root_of_non_divisible_input_is_formal() {
        // the root is a formal operation; divisibility is the caller's check
        let bern = vec![q(0), q(1), q(0), qr(-1, 2)];
        let root = nth_root(&bern, &bern, 3);
        assert_eq!(root.r_pair[1], qr(1, 3));
        assert_eq!(root.moments_mu.order(), 4);
        let verdict = is_infinitely_divisible(&bern, &bern, 2).unwrap();
        assert!(!verdict.divisible);
    }

    #[test]
    fn nth_root_squares_back() {
        use crate::pair_convolutions::{cmonotone_convolve, MeasurePair};
        let mu = crate::measures::MomentSeq::new(vec![q(1), q(3), q(4), q(10), q(12), q(30), q(40), q(90)]);
        let nu = crate::measures::MomentSeq::new(vec![q(0), q(2), q(1), q(9), q(2), q(20), q(5), q(70)]);
        let pair = MeasurePair::new(mu.clone(), nu.clone());
        let squared = cmonotone_convolve(&pair, &pair);
        let data = crate::cumulants::cmonotone_extract(squared.first.values(), squared.second.values());
        let root = nth_root(&data.r_pair, &data.r_nu, 2);
        assert_eq!(root.moments_mu, mu);
        assert_eq!(root.moments_nu, nu);
        // n = 1 is the identity
        let same = nth_root(&data.r_pair, &data.r_nu, 1);
        assert_eq!(same.moments_mu, squared.first);
    }

    #[test]
    fn boolean_construction_freezes_the_second_component() {
        // A_2 = 0: F_t = z and H_t = z + t A_1(z), the Boolean evolution.
        let a1 = PickField::poisson(q(1));
        let a2 = PickField::zero();
        let grid = default_grid();
        let state = integrate_flow(&a1, &a2, 0.7, &grid, 1e-12).unwrap();
        for (z, (h, f)) in grid.iter().zip(state.h.iter().zip(state.f.iter())) {
            assert!((f - z).norm() < 1e-12);
            let expect = z + 0.7 * a1.eval(*z);
            assert!((h - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn kappa_combination_of_fields() {
        // Fields with a common second component combine affinely:
        // H_t of (u A1_mu + v A1_nu, A2) equals u H_t^mu + v H_t^nu
        // + (1 - u - v) z on the grid.
        let a2 = PickField::arcsine(q(1));
        let a1_mu = PickField::poisson(qr(1, 2));
        let a1_nu = PickField::drift(qr(2, 3));
        let (u, v) = (qr(1, 3), qr(5, 4));
        let combined = a1_mu.scale(&u).add(&a1_nu.scale(&v));
        let grid = default_grid();
        let (uf, vf) = (u.to_f64().unwrap(), v.to_f64().unwrap());
        let s_mu = integrate_flow(&a1_mu, &a2, 0.8, &grid, 1e-12).unwrap();
        let s_nu = integrate_flow(&a1_nu, &a2, 0.8, &grid, 1e-12).unwrap();
        let s_comb = integrate_flow(&combined, &a2, 0.8, &grid, 1e-12).unwrap();
        for i in 0..grid.len() {
            let expect = uf * s_mu.h[i] + vf * s_nu.h[i] + (1.0 - uf - vf) * grid[i];
            assert!((s_comb.h[i] - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn cauchy_drift_pairs_with_any_flow() {
        // The constant-imaginary field A_1(z) = i b is outside the atomic
        // Pick representation; qualitatively, H_t(z) = z + i b t satisfies
        // the pair law against any monotone flow on the float grid.
        let b = 0.7;
        let a2 = PickField::arcsine(q(1));
        let h_t = |t: f64, w: Complex64| w + Complex64::new(0.0, b * t);
        let grid = default_grid();
        let (s, t) = (0.4, 0.6);
        for &z in &grid {
            let (_, f_s) = integrate_point(&a2, &a2, z, s, 1e-12).unwrap();
            let lhs = h_t(s + t, z);
            let rhs = h_t(t, f_s) - f_s + h_t(s, z);
            assert!((lhs - rhs).norm() < 1e-12);
            assert!(h_t(s + t, z).im >= z.im);
        }
    }

    #[test]
    fn flow_moment_fit_sees_cumulant_linearity() {
        // arcsine field at t: r_2(t) = t; Poisson field: r_n(t) = t rho.
        // Radius 8 keeps the circle outside the Poisson support.
        let a = PickField::arcsine(q(1));
        let grid = fit_grid(8.0, 40);
        for &t in &[0.5, 1.0] {
            let state = integrate_flow(&a, &a, t, &grid, 1e-12).unwrap();
            let pts: Vec<(Complex64, Complex64)> = state
                .grid
                .iter()
                .cloned()
                .zip(state.h.iter().cloned())
                .collect();
            let m = fit_moments_from_h(&pts, 10);
            // moments of the arcsine law with variance t
            assert!(m[0].abs() < 1e-6, "m1 {}", m[0]);
            assert!((m[1] - t).abs() < 1e-6, "m2 {}", m[1]);
            assert!(m[2].abs() < 1e-6);
            assert!((m[3] - 1.5 * t * t).abs() < 1e-6);
        }
        let p = PickField::poisson(q(1));
        for &t in &[0.5, 1.0] {
            let state = integrate_flow(&p, &p, t, &grid, 1e-12).unwrap();
            let pts: Vec<(Complex64, Complex64)> = state
                .grid
                .iter()
                .cloned()
                .zip(state.h.iter().cloned())
                .collect();
            let m = fit_moments_from_h(&pts, 10);
            let r: Vec<Q> = vec![qr((t * 2.0) as i64, 2); 8];
            let expect = crate::cumulants::moments_from_monotone_cumulants(&r);
            for n in 1..=4 {
                let e = expect.m(n).to_f64().unwrap();
                assert!((m[n - 1] - e).abs() < 1e-6, "n={n}: {} vs {e}", m[n - 1]);
            }
        }
    }
}

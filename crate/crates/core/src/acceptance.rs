//! The acceptance suite: every release-gating criterion as a callable check
//! returning a pass/fail verdict with detail. The `acceptance` integration
//! test target runs one test per criterion; the CLI `selftest` subcommand
//! runs them all in-process.

use crate::cumulants::{self, cmonotone_extract, monotone_extract};
use crate::limits::{self, CltMode, LimitLaw, PoissonMode};
use crate::measures::{AtomicMeasure, MomentSeq};
use crate::mixed_moments::{self, AlgebraSpec};
use crate::pair_convolutions::{
    boolean_convolve_h, check_cone_preservation, cmonotone_convolve, cmonotone_convolve_h,
    monotone_convolve_h, orthogonal_convolve_h, v_compose, v_invert, Cone, HPair, MeasurePair,
    Transform, VParams,
};
use crate::partitions::{eval_plan, formula_plan, FormulaTerm};
use crate::ring::{q, qr, Coeff, MPoly, Q};
use crate::semigroups::{
    default_grid, integrate_flow, is_infinitely_divisible, shifted_hankel, verify_semigroup_law,
    PickField,
};
use crate::transforms::{h_of_atomic, sqrt_checked};
use crate::util::SplitMix64;
use num::complex::Complex64;
use num::ToPrimitive;

#[derive(Clone, Debug)]
pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Criterion {
    fn new(id: usize, name: &'static str, passed: bool, detail: String) -> Self {
        Criterion {
            id,
            name,
            passed,
            detail,
        }
    }
}

pub fn run_all() -> Vec<Criterion> {
    vec![
        criterion_1_moment_cumulant_tables(),
        criterion_2_dual_track_equality(),
        criterion_3_cumulant_additivity(),
        criterion_4_cumulant_relation(),
        criterion_5_mixed_moment_engine(),
        criterion_6_transform_identities(),
        criterion_7_semigroup_flows(),
        criterion_8_infinite_divisibility(),
        criterion_9_limit_convergence(),
        criterion_10_limit_densities(),
        criterion_11_v_algebra(),
        criterion_12_cone_preservation(),
    ]
}

// ---------------------------------------------------------------------------
// sampling helpers
// ---------------------------------------------------------------------------

fn rand_q(rng: &mut SplitMix64) -> Q {
    Q::new(rng.int_in(-4, 4).into(), rng.int_in(1, 3).into())
}

fn rand_moments(rng: &mut SplitMix64, order: usize) -> MomentSeq {
    MomentSeq::new((0..order).map(|_| rand_q(rng)).collect())
}

fn rand_atomic(rng: &mut SplitMix64, max_atoms: usize) -> AtomicMeasure {
    loop {
        let n = rng.int_in(1, max_atoms as i64) as usize;
        let mut locs: Vec<Q> = Vec::new();
        while locs.len() < n {
            let x = Q::new(rng.int_in(-3, 3).into(), rng.int_in(1, 2).into());
            if !locs.contains(&x) {
                locs.push(x);
            }
        }
        let weights: Vec<i64> = (0..n).map(|_| rng.int_in(1, 4)).collect();
        let total: i64 = weights.iter().sum();
        let atoms: Vec<(Q, Q)> = locs
            .into_iter()
            .zip(weights)
            .map(|(x, w)| (x, Q::new(w.into(), total.into())))
            .collect();
        if let Ok(mu) = AtomicMeasure::new(atoms) {
            return mu;
        }
    }
}

// variables for the formal order-4 tables
const V_PAIR: u32 = 1; // r_k(mu, nu) at id V_PAIR + k - 1
const V_SINGLE: u32 = 101; // r_k(nu) at id V_SINGLE + k - 1

fn pair_var(k: usize) -> MPoly {
    MPoly::var(V_PAIR + k as u32 - 1)
}

fn single_var(k: usize) -> MPoly {
    MPoly::var(V_SINGLE + k as u32 - 1)
}

fn mono_product(factors: &[(MPoly, u32)], coeff: Q) -> MPoly {
    let mut acc = MPoly::constant(coeff);
    for (p, e) in factors {
        for _ in 0..*e {
            acc = Coeff::mul(&acc, p);
        }
    }
    acc
}

/// Criterion 1: the order-4 monotone coefficients (1, 3, 3/2, 13/3, 1) and
/// the order-4 c-monotone expansion with coefficients
/// (1, 2, 1, 1, 1/2, 3, 1, 1/3, 1), reproduced exactly by the partition-sum
/// evaluator on formal indeterminates.
pub fn criterion_1_moment_cumulant_tables() -> Criterion {
    let start = std::time::Instant::now();
    let rp: Vec<MPoly> = (1..=4).map(pair_var).collect();
    let rs: Vec<MPoly> = (1..=4).map(single_var).collect();

    // monotone: both tracks see the same sequence
    let m4_mono = crate::partitions::eval_cmonotone_formula(&rp, &rp, 4).unwrap();
    let expect_mono = [
        mono_product(&[(pair_var(4), 1)], q(1)),
        mono_product(&[(pair_var(1), 1), (pair_var(3), 1)], q(3)),
        mono_product(&[(pair_var(2), 2)], qr(3, 2)),
        mono_product(&[(pair_var(1), 2), (pair_var(2), 1)], qr(13, 3)),
        mono_product(&[(pair_var(1), 4)], q(1)),
    ]
    .into_iter()
    .fold(MPoly::constant(q(0)), |a, b| Coeff::add(&a, &b));
    let mono_ok = m4_mono == expect_mono;

    // c-monotone order 4, term for term
    let m4_pair = crate::partitions::eval_cmonotone_formula(&rp, &rs, 4).unwrap();
    let expect_pair = [
        mono_product(&[(pair_var(4), 1)], q(1)),
        mono_product(&[(pair_var(3), 1), (pair_var(1), 1)], q(2)),
        mono_product(&[(pair_var(3), 1), (single_var(1), 1)], q(1)),
        mono_product(&[(pair_var(2), 2)], q(1)),
        mono_product(&[(pair_var(2), 1), (single_var(2), 1)], qr(1, 2)),
        mono_product(&[(pair_var(2), 1), (pair_var(1), 2)], q(3)),
        mono_product(
            &[(pair_var(2), 1), (pair_var(1), 1), (single_var(1), 1)],
            q(1),
        ),
        mono_product(&[(pair_var(2), 1), (single_var(1), 2)], qr(1, 3)),
        mono_product(&[(pair_var(1), 4)], q(1)),
    ]
    .into_iter()
    .fold(MPoly::constant(q(0)), |a, b| Coeff::add(&a, &b));
    let pair_ok = m4_pair == expect_pair;

    // the order-3 expansion with its 1/2 coefficient
    let m3_pair = crate::partitions::eval_cmonotone_formula(&rp, &rs, 3).unwrap();
    let expect_m3 = [
        mono_product(&[(pair_var(3), 1)], q(1)),
        mono_product(&[(pair_var(2), 1), (pair_var(1), 1)], q(2)),
        mono_product(&[(pair_var(2), 1), (single_var(1), 1)], qr(1, 2)),
        mono_product(&[(pair_var(1), 3)], q(1)),
    ]
    .into_iter()
    .fold(MPoly::constant(q(0)), |a, b| Coeff::add(&a, &b));
    let m3_ok = m3_pair == expect_m3;

    let elapsed = start.elapsed().as_secs_f64();
    let passed = mono_ok && pair_ok && m3_ok && elapsed < 5.0;
    Criterion::new(
        1,
        "order-4 moment-cumulant tables (formal indeterminates)",
        passed,
        format!("monotone {mono_ok}, pair order-4 {pair_ok}, pair order-3 {m3_ok}, {elapsed:.2}s"),
    )
}

/// Partition-track cumulant extraction: solve the moment formula
/// triangularly. Independent of the ODE recursion.
fn partition_track_cumulants(
    m_mu: &[Q],
    m_nu: &[Q],
    plans: &[Vec<FormulaTerm>],
) -> (Vec<Q>, Vec<Q>) {
    let order = m_mu.len().min(m_nu.len());
    let mut r_nu: Vec<Q> = Vec::with_capacity(order);
    for n in 1..=order {
        // m_n(nu) = r_n(nu) + (terms with all blocks smaller than n)
        let mut probe = r_nu.clone();
        probe.push(q(0));
        let partial = eval_plan(&plans[n - 1], &probe, &probe);
        r_nu.push(&m_nu[n - 1] - &partial);
    }
    let mut r_pair: Vec<Q> = Vec::with_capacity(order);
    for n in 1..=order {
        let mut probe = r_pair.clone();
        probe.push(q(0));
        let partial = eval_plan(&plans[n - 1], &probe, &r_nu);
        r_pair.push(&m_mu[n - 1] - &partial);
    }
    (r_pair, r_nu)
}

/// Criterion 2: ODE-recursion cumulants equal partition-sum cumulants
/// exactly for 50 random rational moment pairs, order <= 8.
pub fn criterion_2_dual_track_equality() -> Criterion {
    let start = std::time::Instant::now();
    let order = 8;
    let plans: Vec<Vec<FormulaTerm>> = (1..=order).map(|n| formula_plan(n).unwrap()).collect();
    let mut rng = SplitMix64::new(0xC2);
    let mut failures = 0;
    for _ in 0..50 {
        let m_mu = rand_moments(&mut rng, order);
        let m_nu = rand_moments(&mut rng, order);
        let ode = cmonotone_extract(m_mu.values(), m_nu.values());
        let (pt_pair, pt_nu) = partition_track_cumulants(m_mu.values(), m_nu.values(), &plans);
        if ode.r_pair != pt_pair || ode.r_nu != pt_nu {
            failures += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Criterion::new(
        2,
        "dual-track cumulant equality (50 random pairs, order 8)",
        failures == 0 && elapsed < 60.0,
        format!("failures {failures}/50, {elapsed:.2}s"),
    )
}

/// Criterion 3: r_n((mu,nu)^{|> N}) = N r_n(mu,nu) exactly for N <= 5,
/// n <= 8, 20 random atomic pairs.
pub fn criterion_3_cumulant_additivity() -> Criterion {
    let order = 8;
    let mut rng = SplitMix64::new(0xC3);
    let mut failures = 0;
    for _ in 0..20 {
        let mu = rand_atomic(&mut rng, 3);
        let nu = rand_atomic(&mut rng, 3);
        let base = MeasurePair::new(mu.moments(order), nu.moments(order));
        let r1 = cmonotone_extract(base.first.values(), base.second.values());
        let mut acc = base.clone();
        for big_n in 2..=5u32 {
            acc = cmonotone_convolve(&acc, &base);
            let rn = cmonotone_extract(acc.first.values(), acc.second.values());
            let scale = q(big_n as i64);
            let ok = rn
                .r_pair
                .iter()
                .zip(r1.r_pair.iter())
                .all(|(a, b)| a == &(b * &scale))
                && rn
                    .r_nu
                    .iter()
                    .zip(r1.r_nu.iter())
                    .all(|(a, b)| a == &(b * &scale));
            if !ok {
                failures += 1;
            }
        }
    }
    Criterion::new(
        3,
        "pair-cumulant additivity under convolution powers",
        failures == 0,
        format!("failures {failures} (20 pairs x N=2..5)"),
    )
}

/// Criterion 4: r_3 = R_3 + (1/2) m_1(nu) R_2 exactly and the solved
/// P_{n,k} for n <= 6 depend only on the moments of nu.
pub fn criterion_4_cumulant_relation() -> Criterion {
    match cumulants::cmonotone_vs_cfree(6) {
        Err(e) => Criterion::new(4, "c-monotone vs c-free relation", false, e.to_string()),
        Ok(table) => {
            // P_{3,2} = m_1(nu)/2; the structural constraints (linearity in
            // the R's, nu-moment coefficients only) are enforced inside.
            let y1 = MPoly::var(2001);
            let p32_ok = table[2][1] == y1.scale(&qr(1, 2));
            let low_ok = table[0].iter().all(|p| p.is_zero())
                && table[1].iter().all(|p| p.is_zero());
            Criterion::new(
                4,
                "c-monotone vs c-free relation",
                p32_ok && low_ok,
                format!("P_32 = m1(nu)/2: {p32_ok}, orders 1-2 carry no correction: {low_ok}"),
            )
        }
    }
}

/// Criterion 5: fold-left and fold-right products agree on all alternating
/// words of length <= 5 over three algebras for 10 random table sets, and
/// (x_1 + x_2)^n matches the convolution moments for n <= 6.
pub fn criterion_5_mixed_moment_engine() -> Criterion {
    let mut rng = SplitMix64::new(0xC5);
    let mut word_fail = 0usize;
    let mut words_total = 0usize;
    for _ in 0..10 {
        let table = |rng: &mut SplitMix64| -> Vec<Q> {
            (0..6).map(|_| q(rng.int_in(-2, 2))).collect()
        };
        let family = [
            AlgebraSpec::new(table(&mut rng), table(&mut rng)),
            AlgebraSpec::new(table(&mut rng), table(&mut rng)),
            AlgebraSpec::new(table(&mut rng), table(&mut rng)),
        ];
        match mixed_moments::check_product_associativity(&family, 5, 6) {
            Ok(rep) => {
                words_total += rep.words_checked;
                word_fail += rep.mismatches.len();
            }
            Err(_) => word_fail += 1,
        }
    }
    let mut sum_fail = 0usize;
    for _ in 0..10 {
        let m = |rng: &mut SplitMix64| rand_moments(rng, 6);
        let (phi1, psi1, phi2, psi2) = (
            m(&mut rng),
            m(&mut rng),
            m(&mut rng),
            m(&mut rng),
        );
        if !mixed_moments::check_sum_against_convolutions(&phi1, &psi1, &phi2, &psi2, 6)
            .unwrap_or(false)
        {
            sum_fail += 1;
        }
    }
    Criterion::new(
        5,
        "mixed-moment engine (associativity + sum moments)",
        word_fail == 0 && sum_fail == 0,
        format!("word mismatches {word_fail}/{words_total}, sum mismatches {sum_fail}/10"),
    )
}

/// Criterion 6: transform identities on the exact rational track for atomic
/// inputs with at most three atoms each.
pub fn criterion_6_transform_identities() -> Criterion {
    let mut rng = SplitMix64::new(0xC6);
    let mut failures = Vec::new();
    for trial in 0..12 {
        let mu = rand_atomic(&mut rng, 3);
        let nu = rand_atomic(&mut rng, 3);
        let (h_mu, h_nu) = (h_of_atomic(&mu), h_of_atomic(&nu));
        let ident = crate::transforms::RationalMap::ident();

        let mono = monotone_convolve_h(&h_mu, &h_nu).unwrap();
        let via_ortho = boolean_convolve_h(&orthogonal_convolve_h(&h_mu, &h_nu).unwrap(), &h_nu);
        if mono != via_ortho {
            failures.push(format!("ortho-decomposition trial {trial}"));
        }

        let p = cmonotone_convolve_h(
            &HPair { first: h_mu.clone(), second: ident.clone() },
            &HPair { first: h_nu.clone(), second: ident.clone() },
        )
        .unwrap();
        if p.first != boolean_convolve_h(&h_mu, &h_nu) || p.second != ident {
            failures.push(format!("boolean pair trial {trial}"));
        }

        // second slot per the pair definition: lambda |> nu with lambda = mu
        let p = cmonotone_convolve_h(
            &HPair { first: h_mu.clone(), second: h_mu.clone() },
            &HPair { first: ident.clone(), second: h_nu.clone() },
        )
        .unwrap();
        if p.first != orthogonal_convolve_h(&h_mu, &h_nu).unwrap() || p.second != mono {
            failures.push(format!("orthogonal pair trial {trial}"));
        }
    }
    Criterion::new(
        6,
        "transform identities on the exact rational track",
        failures.is_empty(),
        if failures.is_empty() {
            "12 random 3-atom pairs, all identities exact".into()
        } else {
            failures.join("; ")
        },
    )
}

/// Criterion 7: semigroup flows against closed forms and the semigroup law.
pub fn criterion_7_semigroup_flows() -> Criterion {
    let grid = default_grid();
    let arc = PickField::arcsine(q(1));
    // F_1 vs sqrt(z^2 - 2)
    let state = match integrate_flow(&arc, &arc, 1.0, &grid, 1e-12) {
        Ok(s) => s,
        Err(e) => return Criterion::new(7, "semigroup flows", false, e.to_string()),
    };
    let mut arc_err = 0.0f64;
    for (z, f) in state.grid.iter().zip(state.f.iter()) {
        let closed = sqrt_checked(z * z - Complex64::new(2.0, 0.0)).unwrap();
        arc_err = arc_err.max((f - closed).norm());
    }
    // semigroup law residuals
    let arc_law = verify_semigroup_law(&arc, &arc, 0.5, 0.5, &grid, 1e-12)
        .map(|r| r.max_f_residual.max(r.max_h_residual))
        .unwrap_or(f64::INFINITY);
    let poi = PickField::poisson(q(1));
    let poi_law = verify_semigroup_law(&poi, &poi, 0.3, 0.7, &grid, 1e-12)
        .map(|r| r.max_f_residual.max(r.max_h_residual))
        .unwrap_or(f64::INFINITY);
    // t-transform construction: A1 = r A2 gives H_t = (1 - r) z + r F_t
    let r = qr(2, 5);
    let a1 = arc.scale(&r);
    let rf = r.to_f64().unwrap();
    let tstate = integrate_flow(&a1, &arc, 1.0, &grid, 1e-12).unwrap();
    let mut t_err = 0.0f64;
    for ((z, h), f) in tstate.grid.iter().zip(tstate.h.iter()).zip(tstate.f.iter()) {
        t_err = t_err.max((h - ((1.0 - rf) * z + rf * f)).norm());
    }
    let passed = arc_err < 1e-9 && arc_law < 1e-8 && poi_law < 1e-8 && t_err < 1e-8;
    Criterion::new(
        7,
        "semigroup flows (closed form, law residuals, t-transform)",
        passed,
        format!(
            "arcsine F_1 err {arc_err:.2e}, law residuals {arc_law:.2e}/{poi_law:.2e}, t-transform err {t_err:.2e}"
        ),
    )
}

/// Criterion 8: Hankel positivity verdicts with agreeing exact and float
/// tracks.
pub fn criterion_8_infinite_divisibility() -> Criterion {
    let arc = vec![q(0), q(1), q(0), q(0)];
    let v_arc = is_infinitely_divisible(&arc, &arc, 2).unwrap();
    let poi = vec![qr(3, 2); 8];
    let v_poi = is_infinitely_divisible(&poi, &poi, 4).unwrap();
    // Bernoulli: the monotone cumulants computed from its moments
    let bern = monotone_extract(&[q(0), q(1), q(0), q(1)]).r_pair;
    let hank = shifted_hankel(&bern, 2).unwrap();
    let hank_ok = hank == vec![vec![q(1), q(0)], vec![q(0), qr(-1, 2)]];
    let v_bern = is_infinitely_divisible(&bern, &bern, 2).unwrap();
    let passed = v_arc.divisible
        && v_arc.tracks_agree
        && v_poi.divisible
        && v_poi.tracks_agree
        && hank_ok
        && !v_bern.divisible
        && v_bern.tracks_agree;
    Criterion::new(
        8,
        "infinite divisibility Hankel verdicts",
        passed,
        format!(
            "arcsine PSD {}, poisson PSD {}, bernoulli hankel [[1,0],[0,-1/2]] {} rejected {}, tracks agree {}",
            v_arc.divisible, v_poi.divisible, hank_ok, !v_bern.divisible,
            v_arc.tracks_agree && v_poi.tracks_agree && v_bern.tracks_agree
        ),
    )
}

/// Criterion 9: CLT and Poisson iterates converge to the closed-form limit
/// moments: N = 512 within 5e-2 to order 6, log-log slope >= 0.9.
pub fn criterion_9_limit_convergence() -> Criterion {
    let order = 6;
    let mu = MomentSeq::new(vec![q(0), q(1), q(0), q(1), q(0), q(1)]);
    let nu = MomentSeq::new(vec![q(0), q(2), q(0), q(4), q(0), q(8)]);
    let kesten = LimitLaw::KestenClt {
        alpha2: q(1),
        beta2: q(2),
    }
    .moments(order);
    let ns = [64u32, 128, 256, 512];
    let mut clt_errs = Vec::new();
    for &n in &ns {
        let it = limits::clt_iterate(&mu, &CltMode::Pair(nu.clone()), n, order).unwrap();
        let err = (1..=order)
            .map(|k| (it.m(k) - kesten.m(k)).to_f64().unwrap().abs())
            .fold(0.0f64, f64::max);
        clt_errs.push((n, err));
    }
    let clt_final = clt_errs.last().unwrap().1;
    let clt_slope = limits::convergence_slope(&clt_errs);

    let (lam, rho) = (qr(1, 4), qr(1, 2));
    let plim = LimitLaw::CMonotonePoisson {
        lambda: lam.clone(),
        rho: rho.clone(),
    }
    .moments(order);
    let mut poi_errs = Vec::new();
    for &n in &ns {
        let it = limits::poisson_iterate(&lam, &PoissonMode::Pair(rho.clone()), n, order).unwrap();
        let err = (1..=order)
            .map(|k| (it.m(k) - plim.m(k)).to_f64().unwrap().abs())
            .fold(0.0f64, f64::max);
        poi_errs.push((n, err));
    }
    let poi_final = poi_errs.last().unwrap().1;
    let poi_slope = limits::convergence_slope(&poi_errs);

    let passed = clt_final < 5e-2 && clt_slope >= 0.9 && poi_final < 5e-2 && poi_slope >= 0.9;
    Criterion::new(
        9,
        "CLT/Poisson convergence to the limit laws",
        passed,
        format!(
            "kesten err(512) {clt_final:.3e} slope {clt_slope:.2}; poisson err(512) {poi_final:.3e} slope {poi_slope:.2}"
        ),
    )
}

/// Criterion 10: Stieltjes inversion of the nu^{(0,1)} transform matches the
/// closed-form log density at 20 interior points within 1e-6, with total
/// mass (density + atoms) within 1e-3 of one; the arcsine-xi Poisson law
/// passes the same mass check with its singular parts searched.
pub fn criterion_10_limit_densities() -> Criterion {
    let law = LimitLaw::DeformedClt0a { a: q(1) };
    let mut max_pointwise = 0.0f64;
    for i in 0..20 {
        let x = -0.02 - 0.96 * (i as f64 + 0.5) / 20.0;
        let d = match limits::limit_law_density_at(&law, x) {
            Ok(d) => d,
            Err(e) => return Criterion::new(10, "limit densities", false, e.to_string()),
        };
        let reference = limits::deformed_clt_0a_density(1.0, x);
        max_pointwise = max_pointwise.max((d - reference).abs());
    }
    let table = limits::limit_law_density(&law, -0.95, -0.05, 40).unwrap();
    let mass_err = (table.total_mass - 1.0).abs();
    let atoms_ok = table.atoms.len() == 2;

    let xi = LimitLaw::XiArcsinePoisson {
        t: qr(1, 2),
        lambda: qr(1, 2),
    };
    let xi_table = limits::limit_law_density(&xi, -0.7, 0.7, 20).unwrap();
    let xi_mass_err = (xi_table.total_mass - 1.0).abs();

    let passed = max_pointwise < 1e-6 && mass_err < 1e-3 && atoms_ok && xi_mass_err < 1e-3;
    Criterion::new(
        10,
        "limit densities and mass checks",
        passed,
        format!(
            "nu^(0,1) pointwise {max_pointwise:.2e}, mass err {mass_err:.2e}, atoms {}; xi-poisson mass err {xi_mass_err:.2e} with {} atom(s)",
            table.atoms.len(),
            xi_table.atoms.len()
        ),
    )
}

/// Criterion 11: the V-parameter algebra: composition law exact on
/// parameters, verified by transform evaluation on a grid below 1e-12, and
/// V o V^{-1} = identity.
pub fn criterion_11_v_algebra() -> Criterion {
    let a = VParams::new(qr(3, 2), qr(-2, 3), qr(1, 4));
    let b = VParams::new(qr(1, 2), qr(5, 4), qr(-1, 3));
    let composed = v_compose(&a, &b);
    let param_ok = composed
        == VParams::new(
            qr(3, 2) * qr(1, 2),
            qr(-2, 3) * qr(5, 4),
            qr(-2, 3) * qr(-1, 3) + qr(1, 4) * qr(1, 2),
        );
    let simple = v_compose(
        &VParams::new(q(2), q(1), q(0)),
        &VParams::new(q(3), q(1), q(0)),
    ) == VParams::new(q(6), q(1), q(0));

    // grid check: sequential application vs composed application
    let mu = AtomicMeasure::new(vec![(qr(-1, 2), qr(1, 3)), (q(1), qr(1, 6)), (q(3), qr(1, 2))])
        .unwrap();
    let h = h_of_atomic(&mu);
    let seq = Transform::Vtua(a.clone())
        .apply_h(&Transform::Vtua(b.clone()).apply_h(&h).unwrap())
        .unwrap();
    let direct = Transform::Vtua(composed).apply_h(&h).unwrap();
    let mut grid_err = 0.0f64;
    for k in 0..24 {
        let z = Complex64::new(-3.0 + 6.0 * (k as f64) / 23.0, 1.0 + (k % 3) as f64 * 0.5);
        grid_err = grid_err.max((seq.eval_c64(z) - direct.eval_c64(z)).norm());
    }
    let inv_ok = v_compose(&a, &v_invert(&a).unwrap()).is_identity()
        && v_compose(&v_invert(&a).unwrap(), &a).is_identity();
    let passed = param_ok && simple && grid_err < 1e-12 && inv_ok && seq == direct;
    Criterion::new(
        11,
        "V-transform algebra",
        passed,
        format!("params {param_ok}, grid err {grid_err:.2e}, inverse {inv_ok}"),
    )
}

/// Criterion 12: closure of the nonnegative and symmetric cones under the
/// deformed convolution matches the parameter criterion on >= 100 samples,
/// with violations found whenever the criterion fails.
pub fn criterion_12_cone_preservation() -> Criterion {
    let mut rng = SplitMix64::new(0xC12);
    // nonnegative samples, biased towards support touching zero
    let mut pos_samples = Vec::new();
    for _ in 0..50 {
        let c = Q::new(rng.int_in(1, 6).into(), rng.int_in(1, 2).into());
        let d = Q::new(rng.int_in(1, 6).into(), rng.int_in(1, 2).into());
        pos_samples.push((
            AtomicMeasure::new(vec![(q(0), qr(1, 2)), (c, qr(1, 2))]).unwrap(),
            AtomicMeasure::new(vec![(q(0), qr(1, 2)), (d, qr(1, 2))]).unwrap(),
        ));
    }
    for _ in 0..50 {
        let pos_atomic = |rng: &mut SplitMix64| loop {
            let mu = rand_atomic(rng, 3);
            if mu.is_nonnegative() {
                return mu;
            }
        };
        pos_samples.push((pos_atomic(&mut rng), pos_atomic(&mut rng)));
    }
    let mut sym_samples = Vec::new();
    for _ in 0..100 {
        let c = Q::new(rng.int_in(1, 5).into(), rng.int_in(1, 2).into());
        let d = Q::new(rng.int_in(1, 5).into(), rng.int_in(1, 2).into());
        sym_samples.push((
            AtomicMeasure::symmetric_bernoulli(c),
            AtomicMeasure::symmetric_bernoulli(d),
        ));
    }

    // Parameter grid with a >= 0, where the (u >= t, a = 0) criterion is
    // the exact closure predicate. (For a < 0 the transform shifts measures
    // to the right and closure in fact holds; see the cone unit tests.)
    let pos_params = [
        (VParams::new(q(1), q(1), q(0)), true),
        (VParams::new(q(1), q(2), q(0)), true),
        (VParams::new(qr(1, 2), q(1), q(0)), true),
        (VParams::new(q(2), q(1), q(0)), false), // u < t
        (VParams::new(q(3), q(2), q(0)), false),
        (VParams::new(q(1), q(1), q(1)), false), // a > 0
        (VParams::new(q(1), q(1), q(2)), false),
    ];
    let sym_params = [
        (VParams::new(q(2), q(1), q(0)), true),
        (VParams::new(qr(1, 2), q(3), q(0)), true),
        (VParams::new(q(1), q(1), qr(1, 2)), false),
        (VParams::new(q(2), q(1), qr(-1, 4)), false),
    ];

    let mut failures = Vec::new();
    for (v, expect_closed) in &pos_params {
        let rep = check_cone_preservation(v, Cone::Nonnegative, &pos_samples).unwrap();
        if rep.predicted_closed != *expect_closed || !rep.consistent() {
            failures.push(format!("P+ {:?}: {rep:?}", v));
        }
    }
    for (v, expect_closed) in &sym_params {
        let rep = check_cone_preservation(v, Cone::Symmetric, &sym_samples).unwrap();
        if rep.predicted_closed != *expect_closed || !rep.consistent() {
            failures.push(format!("sym {:?}: {rep:?}", v));
        }
    }
    Criterion::new(
        12,
        "cone preservation matches the (u >= t, a = 0) criterion",
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{} nonnegative and {} symmetric samples per parameter set",
                pos_samples.len(),
                sym_samples.len()
            )
        } else {
            failures.join("; ")
        },
    )
}

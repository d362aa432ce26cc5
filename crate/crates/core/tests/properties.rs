//! Property suites over random rational inputs: algebraic identities the
//! convolutions and cumulant maps must satisfy exactly.

use cmono::cumulants::{cmonotone_extract, cmonotone_reconstruct};
use cmono::measures::MomentSeq;
use cmono::mixed_moments::{eval_pair, AlgebraSpec, Word};
use cmono::pair_convolutions::{
    boolean_convolve_moments, cmonotone_convolve, monotone_convolve_moments,
    orthogonal_convolve_moments, MeasurePair,
};
use cmono::ring::Q;
use cmono::series::{b_from_moments, moments_from_b};
use num::BigInt;
use proptest::prelude::*;

fn small_q() -> impl Strategy<Value = Q> {
    (-6i64..=6, 1i64..=3).prop_map(|(n, d)| Q::new(BigInt::from(n), BigInt::from(d)))
}

fn moment_seq(order: usize) -> impl Strategy<Value = MomentSeq> {
    prop::collection::vec(small_q(), order).prop_map(MomentSeq::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn monotone_convolution_is_associative(
        a in moment_seq(6),
        b in moment_seq(6),
        c in moment_seq(6),
    ) {
        let left = monotone_convolve_moments(&monotone_convolve_moments(&a, &b), &c);
        let right = monotone_convolve_moments(&a, &monotone_convolve_moments(&b, &c));
        prop_assert_eq!(left, right);
    }

    #[test]
    fn orthogonal_decomposition_of_monotone(
        a in moment_seq(6),
        b in moment_seq(6),
    ) {
        // mu |> nu = (mu |- nu) uplus nu
        let direct = monotone_convolve_moments(&a, &b);
        let via = boolean_convolve_moments(&orthogonal_convolve_moments(&a, &b), &b);
        prop_assert_eq!(direct, via);
    }

    #[test]
    fn pair_convolution_is_associative(
        a1 in moment_seq(5), a2 in moment_seq(5),
        b1 in moment_seq(5), b2 in moment_seq(5),
        c1 in moment_seq(5), c2 in moment_seq(5),
    ) {
        let p = MeasurePair::new(a1, a2);
        let r = MeasurePair::new(b1, b2);
        let s = MeasurePair::new(c1, c2);
        let left = cmonotone_convolve(&cmonotone_convolve(&p, &r), &s);
        let right = cmonotone_convolve(&p, &cmonotone_convolve(&r, &s));
        prop_assert_eq!(left, right);
    }

    #[test]
    fn cumulant_extraction_round_trips(
        mu in moment_seq(7),
        nu in moment_seq(7),
    ) {
        let data = cmonotone_extract(mu.values(), nu.values());
        let back = cmonotone_reconstruct(&data.r_pair, &data.r_nu);
        prop_assert_eq!(back.as_slice(), mu.values());
    }

    #[test]
    fn reciprocal_series_round_trips(m in prop::collection::vec(small_q(), 7)) {
        let b = b_from_moments(&m);
        prop_assert_eq!(moments_from_b(&b), m);
    }

    #[test]
    fn word_reduction_is_invariant(
        exps in prop::collection::vec((0usize..2, 1u32..3), 1..6),
        phi0 in prop::collection::vec(small_q(), 12),
        psi0 in prop::collection::vec(small_q(), 12),
        phi1 in prop::collection::vec(small_q(), 12),
        psi1 in prop::collection::vec(small_q(), 12),
    ) {
        // evaluating a word equals evaluating its letter-split refinement
        let family = vec![AlgebraSpec::new(phi0, psi0), AlgebraSpec::new(phi1, psi1)];
        let word = Word::new(exps.clone()).unwrap();
        let split: Vec<(usize, u32)> = exps
            .iter()
            .flat_map(|&(a, e)| std::iter::repeat_n((a, 1u32), e as usize))
            .collect();
        let refined = Word::new(split).unwrap();
        prop_assert_eq!(
            eval_pair(&word, &family).unwrap(),
            eval_pair(&refined, &family).unwrap()
        );
    }
}

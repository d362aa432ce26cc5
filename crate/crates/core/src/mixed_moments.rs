//! Mixed-moment evaluation for a linearly ordered family of algebras each
//! carrying two linear functionals (phi_i, psi_i) on the powers of a single
//! self-adjoint generator.
//!
//! The phi-component follows the calculation rules of the two-state product:
//! a letter whose algebra dominates its neighbours factors out, either
//! plainly at the boundary or through the (phi - psi)/psi split in the
//! interior; the psi-component follows the monotone peak rule. Evaluation is
//! exact over the rationals.

use crate::measures::MomentSeq;
use crate::pair_convolutions::{monotone_convolve_moments, orthogonal_convolve_moments};
use crate::ring::Q;
use num::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MixedError {
    #[error("malformed word: {0}")]
    MalformedWord(String),
}

/// Moment tables for one algebra: phi[k-1] = phi(x^k), psi[k-1] = psi(x^k).
#[derive(Clone, PartialEq, Debug)]
pub struct AlgebraSpec {
    pub phi: Vec<Q>,
    pub psi: Vec<Q>,
}

impl AlgebraSpec {
    pub fn new(phi: Vec<Q>, psi: Vec<Q>) -> Self {
        AlgebraSpec { phi, psi }
    }

    /// Tables where phi = psi (the monotone case).
    pub fn diagonal(phi: Vec<Q>) -> Self {
        AlgebraSpec {
            psi: phi.clone(),
            phi,
        }
    }

    fn phi_pow(&self, e: u32) -> Result<Q, MixedError> {
        self.phi
            .get(e as usize - 1)
            .cloned()
            .ok_or_else(|| MixedError::MalformedWord(format!("phi table too short for x^{e}")))
    }

    fn psi_pow(&self, e: u32) -> Result<Q, MixedError> {
        self.psi
            .get(e as usize - 1)
            .cloned()
            .ok_or_else(|| MixedError::MalformedWord(format!("psi table too short for x^{e}")))
    }
}

/// A letter: (algebra index, exponent >= 1).
pub type Letter = (usize, u32);

/// An alternating word; adjacent letters from the same algebra are merged at
/// construction.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Word {
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn new(raw: Vec<Letter>) -> Result<Self, MixedError> {
        if raw.iter().any(|&(_, e)| e == 0) {
            return Err(MixedError::MalformedWord("zero exponent".into()));
        }
        Ok(Word {
            letters: reduce(raw),
        })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

/// Merge adjacent letters with equal algebra index.
pub fn reduce(raw: Vec<Letter>) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(raw.len());
    for (alg, exp) in raw {
        match out.last_mut() {
            Some((last_alg, last_exp)) if *last_alg == alg => *last_exp += exp,
            _ => out.push((alg, exp)),
        }
    }
    out
}

/// Which admissible reduction site to use first; all strategies must agree
/// (the product is associative), and the test suite asserts they do.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Strategy {
    /// Reduce at the first occurrence of the globally maximal algebra.
    GlobalMaxFirst,
    /// Reduce at the last occurrence of the globally maximal algebra.
    GlobalMaxLast,
    /// Reduce at the first strict local peak.
    FirstLocalPeak,
}

/// Evaluate (phi, psi) of a word under the ordered family.
pub fn eval_pair(word: &Word, family: &[AlgebraSpec]) -> Result<(Q, Q), MixedError> {
    eval_pair_with(word, family, Strategy::GlobalMaxFirst)
}

pub fn eval_pair_with(
    word: &Word,
    family: &[AlgebraSpec],
    strategy: Strategy,
) -> Result<(Q, Q), MixedError> {
    for &(alg, _) in &word.letters {
        if alg >= family.len() {
            return Err(MixedError::MalformedWord(format!(
                "algebra index {alg} out of range"
            )));
        }
    }
    let phi = eval_phi(&word.letters, family, strategy)?;
    let psi = eval_psi(&word.letters, family)?;
    Ok((phi, psi))
}

fn pick_site(letters: &[Letter], strategy: Strategy) -> usize {
    match strategy {
        Strategy::GlobalMaxFirst => {
            let max_alg = letters.iter().map(|&(a, _)| a).max().unwrap();
            letters.iter().position(|&(a, _)| a == max_alg).unwrap()
        }
        Strategy::GlobalMaxLast => {
            let max_alg = letters.iter().map(|&(a, _)| a).max().unwrap();
            letters.iter().rposition(|&(a, _)| a == max_alg).unwrap()
        }
        Strategy::FirstLocalPeak => {
            let n = letters.len();
            for j in 0..n {
                let left_ok = j == 0 || letters[j - 1].0 < letters[j].0;
                let right_ok = j == n - 1 || letters[j + 1].0 < letters[j].0;
                if left_ok && right_ok {
                    return j;
                }
            }
            unreachable!("an alternating word always has a local peak")
        }
    }
}

fn eval_phi(
    letters: &[Letter],
    family: &[AlgebraSpec],
    strategy: Strategy,
) -> Result<Q, MixedError> {
    if letters.is_empty() {
        return Ok(Q::one());
    }
    if letters.len() == 1 {
        let (alg, e) = letters[0];
        return family[alg].phi_pow(e);
    }
    let j = pick_site(letters, strategy);
    let (alg, e) = letters[j];
    let spec = &family[alg];
    if j == 0 {
        // leading dominant letter factors out under phi
        let head = spec.phi_pow(e)?;
        let rest = eval_phi(&letters[1..], family, strategy)?;
        Ok(head * rest)
    } else if j == letters.len() - 1 {
        let tail = spec.phi_pow(e)?;
        let rest = eval_phi(&letters[..j], family, strategy)?;
        Ok(rest * tail)
    } else {
        let phi_v = spec.phi_pow(e)?;
        let psi_v = spec.psi_pow(e)?;
        let left = eval_phi(&letters[..j], family, strategy)?;
        let right = eval_phi(&letters[j + 1..], family, strategy)?;
        let mut dropped: Vec<Letter> = letters[..j].to_vec();
        dropped.extend_from_slice(&letters[j + 1..]);
        let merged = eval_phi(&reduce(dropped), family, strategy)?;
        Ok((phi_v - &psi_v) * left * right + psi_v * merged)
    }
}

/// Monotone peak rule for the psi-component.
fn eval_psi(letters: &[Letter], family: &[AlgebraSpec]) -> Result<Q, MixedError> {
    if letters.is_empty() {
        return Ok(Q::one());
    }
    if letters.len() == 1 {
        let (alg, e) = letters[0];
        return family[alg].psi_pow(e);
    }
    let max_alg = letters.iter().map(|&(a, _)| a).max().unwrap();
    let j = letters.iter().position(|&(a, _)| a == max_alg).unwrap();
    let (alg, e) = letters[j];
    let head = family[alg].psi_pow(e)?;
    let mut dropped: Vec<Letter> = letters[..j].to_vec();
    dropped.extend_from_slice(&letters[j + 1..]);
    let rest = eval_psi(&reduce(dropped), family)?;
    Ok(head * rest)
}

// ---------------------------------------------------------------------------
// Iterated products via composite letters
// ---------------------------------------------------------------------------

/// Association order for the triple product.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Fold {
    /// ((A_0, A_1) then A_2)
    Left,
    /// (A_0 then (A_1, A_2))
    Right,
}

/// Evaluate a word over three algebras by composing the product two at a
/// time. Low/high segments are evaluated by the inner two-algebra product
/// and combined with the outer two-state rules.
pub fn eval_fold(word: &Word, family: &[AlgebraSpec; 3], fold: Fold) -> Result<(Q, Q), MixedError> {
    for &(alg, _) in &word.letters {
        if alg >= 3 {
            return Err(MixedError::MalformedWord(format!(
                "algebra index {alg} out of range"
            )));
        }
    }
    let in_high = |alg: usize| match fold {
        Fold::Left => alg == 2,
        Fold::Right => alg >= 1,
    };
    let segs = segment(&word.letters, &in_high);
    let low_family: Vec<AlgebraSpec> = match fold {
        Fold::Left => vec![family[0].clone(), family[1].clone()],
        Fold::Right => vec![family[0].clone()],
    };
    let high_family: Vec<AlgebraSpec> = match fold {
        Fold::Left => vec![family[2].clone()],
        Fold::Right => vec![family[1].clone(), family[2].clone()],
    };
    let low_offset = 0usize;
    let high_offset = match fold {
        Fold::Left => 2usize,
        Fold::Right => 1usize,
    };
    let low_eval = |ls: &[Letter]| -> Result<(Q, Q), MixedError> {
        let shifted: Vec<Letter> = ls.iter().map(|&(a, e)| (a - low_offset, e)).collect();
        let w = Word { letters: shifted };
        eval_pair(&w, &low_family)
    };
    let high_eval = |ls: &[Letter]| -> Result<(Q, Q), MixedError> {
        let shifted: Vec<Letter> = ls.iter().map(|&(a, e)| (a - high_offset, e)).collect();
        let w = Word { letters: shifted };
        eval_pair(&w, &high_family)
    };
    let phi = two_level_phi(&segs, &low_eval, &high_eval)?;
    let psi = two_level_psi(&segs, &low_eval, &high_eval)?;
    Ok((phi, psi))
}

#[derive(Clone, Debug)]
enum Seg {
    Low(Vec<Letter>),
    High(Vec<Letter>),
}

fn segment(letters: &[Letter], in_high: &dyn Fn(usize) -> bool) -> Vec<Seg> {
    let mut out: Vec<Seg> = Vec::new();
    for &(alg, exp) in letters {
        let high = in_high(alg);
        match out.last_mut() {
            Some(Seg::Low(v)) if !high => v.push((alg, exp)),
            Some(Seg::High(v)) if high => v.push((alg, exp)),
            _ => out.push(if high {
                Seg::High(vec![(alg, exp)])
            } else {
                Seg::Low(vec![(alg, exp)])
            }),
        }
    }
    out
}

type EvalFn<'a> = &'a dyn Fn(&[Letter]) -> Result<(Q, Q), MixedError>;

fn two_level_phi(segs: &[Seg], low: EvalFn, high: EvalFn) -> Result<Q, MixedError> {
    if segs.is_empty() {
        return Ok(Q::one());
    }
    if segs.len() == 1 {
        return match &segs[0] {
            Seg::Low(v) => Ok(low(v)?.0),
            Seg::High(v) => Ok(high(v)?.0),
        };
    }
    if let Seg::High(v) = &segs[0] {
        let head = high(v)?.0;
        let rest = two_level_phi(&segs[1..], low, high)?;
        return Ok(head * rest);
    }
    if let Seg::High(v) = &segs[segs.len() - 1] {
        let tail = high(v)?.0;
        let rest = two_level_phi(&segs[..segs.len() - 1], low, high)?;
        return Ok(rest * tail);
    }
    // interior high segment: first one
    let j = segs
        .iter()
        .position(|s| matches!(s, Seg::High(_)))
        .expect("two or more segments must contain a high one");
    let Seg::High(v) = &segs[j] else { unreachable!() };
    let (phi_v, psi_v) = high(v)?;
    let left = two_level_phi(&segs[..j], low, high)?;
    let right = two_level_phi(&segs[j + 1..], low, high)?;
    let merged_segs = merge_around(segs, j);
    let merged = two_level_phi(&merged_segs, low, high)?;
    Ok((phi_v - &psi_v) * left * right + psi_v * merged)
}

fn two_level_psi(segs: &[Seg], low: EvalFn, high: EvalFn) -> Result<Q, MixedError> {
    if segs.is_empty() {
        return Ok(Q::one());
    }
    if segs.len() == 1 {
        return match &segs[0] {
            Seg::Low(v) => Ok(low(v)?.1),
            Seg::High(v) => Ok(high(v)?.1),
        };
    }
    let j = segs
        .iter()
        .position(|s| matches!(s, Seg::High(_)))
        .expect("multi-segment word contains a high segment");
    let Seg::High(v) = &segs[j] else { unreachable!() };
    let head = high(v)?.1;
    let merged_segs = merge_around(segs, j);
    let rest = two_level_psi(&merged_segs, low, high)?;
    Ok(head * rest)
}

/// Remove segment j and merge its (low) neighbours.
fn merge_around(segs: &[Seg], j: usize) -> Vec<Seg> {
    let mut out: Vec<Seg> = Vec::with_capacity(segs.len() - 1);
    out.extend_from_slice(&segs[..j]);
    let mut rest = segs[j + 1..].iter();
    if j > 0 && j + 1 < segs.len() {
        if let (Some(Seg::Low(prev)), Some(Seg::Low(next))) = (out.last().cloned(), rest.next()) {
            let mut letters = prev;
            letters.extend_from_slice(next);
            *out.last_mut().unwrap() = Seg::Low(reduce(letters));
        } else {
            unreachable!("segments alternate");
        }
    }
    out.extend(rest.cloned());
    out
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default)]
pub struct ProductReport {
    pub words_checked: usize,
    pub mismatches: Vec<Word>,
}

impl ProductReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// All alternating words over three algebras with length <= max_len and
/// total degree <= deg_cap, evaluated fold-left and fold-right (and
/// directly); any disagreement is recorded.
pub fn check_product_associativity(
    family: &[AlgebraSpec; 3],
    max_len: usize,
    deg_cap: u32,
) -> Result<ProductReport, MixedError> {
    let mut report = ProductReport::default();
    let mut words = Vec::new();
    gen_words(&mut Vec::new(), max_len, deg_cap, &mut words);
    for letters in words {
        let word = Word { letters };
        let left = eval_fold(&word, family, Fold::Left)?;
        let right = eval_fold(&word, family, Fold::Right)?;
        let direct = eval_pair(&word, &family[..])?;
        report.words_checked += 1;
        if left != right || left != direct {
            report.mismatches.push(word);
        }
    }
    Ok(report)
}

fn gen_words(
    prefix: &mut Vec<Letter>,
    max_len: usize,
    deg_left: u32,
    out: &mut Vec<Vec<Letter>>,
) {
    if !prefix.is_empty() {
        out.push(prefix.clone());
    }
    if prefix.len() == max_len {
        return;
    }
    for alg in 0..3usize {
        if let Some(&(last, _)) = prefix.last() {
            if last == alg {
                continue;
            }
        }
        for e in 1..=deg_left {
            prefix.push((alg, e));
            gen_words(prefix, max_len, deg_left - e, out);
            prefix.pop();
        }
    }
}

/// Moments of x_0 + x_1 under the pair functional, by termwise expansion of
/// the n-th power into alternating words.
pub fn sum_moments(family: &[AlgebraSpec], order: usize) -> Result<Vec<(Q, Q)>, MixedError> {
    assert!(family.len() == 2);
    let mut out = Vec::with_capacity(order);
    for n in 1..=order {
        let mut phi_acc = Q::zero();
        let mut psi_acc = Q::zero();
        for mask in 0..(1u32 << n) {
            let raw: Vec<Letter> = (0..n)
                .map(|i| (((mask >> i) & 1) as usize, 1u32))
                .collect();
            let word = Word::new(raw)?;
            let (p, s) = eval_pair(&word, family)?;
            phi_acc += p;
            psi_acc += s;
        }
        out.push((phi_acc, psi_acc));
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct OrthogonalityReport {
    pub orders_checked: usize,
    pub mismatches: usize,
}

impl OrthogonalityReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// With phi_2 the zero table, moments of x_1 + x_2 under the pair
/// functional must match the orthogonal convolution of the phi_1- and
/// psi_2-distributions.
pub fn check_orthogonality(
    mu: &MomentSeq,
    nu: &MomentSeq,
    order: usize,
) -> Result<OrthogonalityReport, MixedError> {
    let k = order.min(mu.order()).min(nu.order());
    let zero_table = vec![Q::zero(); k];
    let family = [
        AlgebraSpec::new(mu.values()[..k].to_vec(), mu.values()[..k].to_vec()),
        AlgebraSpec::new(zero_table, nu.values()[..k].to_vec()),
    ];
    let sums = sum_moments(&family, k)?;
    let expect = orthogonal_convolve_moments(&mu.truncated(k), &nu.truncated(k));
    let mut report = OrthogonalityReport::default();
    for n in 1..=k {
        report.orders_checked += 1;
        if sums[n - 1].0 != *expect.m(n) {
            report.mismatches += 1;
        }
    }
    Ok(report)
}

/// The psi-components of [`sum_moments`] must realize the monotone
/// convolution of the psi-distributions.
pub fn check_sum_against_convolutions(
    phi1: &MomentSeq,
    psi1: &MomentSeq,
    phi2: &MomentSeq,
    psi2: &MomentSeq,
    order: usize,
) -> Result<bool, MixedError> {
    let k = order
        .min(phi1.order())
        .min(psi1.order())
        .min(phi2.order())
        .min(psi2.order());
    let family = [
        AlgebraSpec::new(phi1.values()[..k].to_vec(), psi1.values()[..k].to_vec()),
        AlgebraSpec::new(phi2.values()[..k].to_vec(), psi2.values()[..k].to_vec()),
    ];
    let sums = sum_moments(&family, k)?;
    let pair = crate::pair_convolutions::cmonotone_convolve(
        &crate::pair_convolutions::MeasurePair::new(phi1.truncated(k), psi1.truncated(k)),
        &crate::pair_convolutions::MeasurePair::new(phi2.truncated(k), psi2.truncated(k)),
    );
    let mono = monotone_convolve_moments(&psi1.truncated(k), &psi2.truncated(k));
    for n in 1..=k {
        if sums[n - 1].0 != *pair.first.m(n) || sums[n - 1].1 != *mono.m(n) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{q, qr};
    use crate::util::SplitMix64;

    fn rand_table(rng: &mut SplitMix64, len: usize) -> Vec<Q> {
        (0..len).map(|_| q(rng.int_in(-2, 2))).collect()
    }

    fn rand_family(rng: &mut SplitMix64, n: usize, len: usize) -> Vec<AlgebraSpec> {
        (0..n)
            .map(|_| AlgebraSpec::new(rand_table(rng, len), rand_table(rng, len)))
            .collect()
    }

    #[test]
    fn single_algebra_words_read_tables() {
        let spec = AlgebraSpec::new(vec![q(1), q(2), q(3)], vec![q(4), q(5), q(6)]);
        let w = Word::new(vec![(0, 2)]).unwrap();
        let (phi, psi) = eval_pair(&w, &[spec]).unwrap();
        assert_eq!(phi, q(2));
        assert_eq!(psi, q(5));
    }

    #[test]
    fn construction_merges_adjacent_letters() {
        let w = Word::new(vec![(0, 1), (0, 2), (1, 1), (0, 1)]).unwrap();
        assert_eq!(w.letters, vec![(0, 3), (1, 1), (0, 1)]);
        assert!(Word::new(vec![(0, 0)]).is_err());
    }

    #[test]
    fn interior_peak_rule_instantiated() {
        // phi(x_0 x_1 x_0) = (phi_1 - psi_1) phi_0(x)^2 + psi_1 phi_0(x^2)
        let mut rng = SplitMix64::new(7);
        let family = rand_family(&mut rng, 2, 4);
        let w = Word::new(vec![(0, 1), (1, 1), (0, 1)]).unwrap();
        let (phi, _) = eval_pair(&w, &family).unwrap();
        let expect = (&family[1].phi[0] - &family[1].psi[0]) * &family[0].phi[0] * &family[0].phi[0]
            + &family[1].psi[0] * &family[0].phi[1];
        assert_eq!(phi, expect);
    }

    #[test]
    fn boundary_rules_factor_dominant_letters() {
        // (1): leading higher letter factors with phi; (2) trailing; the
        // psi component factors peaks with psi.
        let mut rng = SplitMix64::new(17);
        let family = rand_family(&mut rng, 2, 6);
        let rest = Word::new(vec![(0, 1), (1, 1), (0, 2)]).unwrap();
        let (phi_rest, psi_rest) = eval_pair(&rest, &family).unwrap();
        // leading: x_1 then the rest starting with algebra 0
        let mut letters = vec![(1usize, 2u32)];
        letters.extend_from_slice(&rest.letters);
        let lead = Word::new(letters).unwrap();
        let (phi, psi) = eval_pair(&lead, &family).unwrap();
        assert_eq!(phi, family[1].phi_pow(2).unwrap() * &phi_rest);
        assert_eq!(psi, family[1].psi_pow(2).unwrap() * &psi_rest);
        // trailing
        let mut letters = rest.letters.clone();
        letters.push((1, 3));
        let trail = Word::new(letters).unwrap();
        let (phi, psi) = eval_pair(&trail, &family).unwrap();
        assert_eq!(phi, phi_rest * family[1].phi_pow(3).unwrap());
        assert_eq!(psi, psi_rest * family[1].psi_pow(3).unwrap());
    }

    #[test]
    fn reduction_order_does_not_change_values() {
        let mut rng = SplitMix64::new(42);
        for _ in 0..5 {
            let family = rand_family(&mut rng, 3, 8);
            let mut words = Vec::new();
            gen_words(&mut Vec::new(), 4, 5, &mut words);
            for letters in words {
                let w = Word { letters };
                let a = eval_pair_with(&w, &family, Strategy::GlobalMaxFirst).unwrap();
                let b = eval_pair_with(&w, &family, Strategy::GlobalMaxLast).unwrap();
                let c = eval_pair_with(&w, &family, Strategy::FirstLocalPeak).unwrap();
                assert_eq!(a, b, "{w:?}");
                assert_eq!(a, c, "{w:?}");
            }
        }
    }

    #[test]
    fn psi_is_monotone_product() {
        // With phi_i = psi_i the two components coincide.
        let mut rng = SplitMix64::new(3);
        let t0 = rand_table(&mut rng, 6);
        let t1 = rand_table(&mut rng, 6);
        let family = vec![AlgebraSpec::diagonal(t0), AlgebraSpec::diagonal(t1)];
        let mut words = Vec::new();
        gen_words(&mut Vec::new(), 4, 6, &mut words);
        for letters in words.into_iter().filter(|l| l.iter().all(|&(a, _)| a < 2)) {
            let w = Word { letters };
            let (phi, psi) = eval_pair(&w, &family).unwrap();
            assert_eq!(phi, psi, "{w:?}");
        }
    }

    #[test]
    fn boolean_degeneration_loses_psi_term() {
        // psi_i = 0 on positive powers: the peak rule keeps only the
        // product split (the Boolean product).
        let mut rng = SplitMix64::new(11);
        let phi0 = rand_table(&mut rng, 4);
        let phi1 = rand_table(&mut rng, 4);
        let family = vec![
            AlgebraSpec::new(phi0.clone(), vec![Q::zero(); 4]),
            AlgebraSpec::new(phi1.clone(), vec![Q::zero(); 4]),
        ];
        let w = Word::new(vec![(0, 1), (1, 1), (0, 1)]).unwrap();
        let (phi, _) = eval_pair(&w, &family).unwrap();
        assert_eq!(phi, &phi1[0] * &phi0[0] * &phi0[0]);
    }

    #[test]
    fn folds_agree_with_direct_small() {
        let mut rng = SplitMix64::new(20260809);
        for _ in 0..3 {
            let raw = rand_family(&mut rng, 3, 6);
            let family: [AlgebraSpec; 3] = [raw[0].clone(), raw[1].clone(), raw[2].clone()];
            let report = check_product_associativity(&family, 4, 5).unwrap();
            assert!(report.passed(), "mismatches: {:?}", report.mismatches);
        }
    }

    #[test]
    fn sum_moments_match_pair_convolution() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..5 {
            let phi1 = MomentSeq::new(rand_table(&mut rng, 6));
            let psi1 = MomentSeq::new(rand_table(&mut rng, 6));
            let phi2 = MomentSeq::new(rand_table(&mut rng, 6));
            let psi2 = MomentSeq::new(rand_table(&mut rng, 6));
            assert!(check_sum_against_convolutions(&phi1, &psi1, &phi2, &psi2, 6).unwrap());
        }
    }

    #[test]
    fn orthogonality_against_transform_identity() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..5 {
            let mu = MomentSeq::new(rand_table(&mut rng, 6));
            let nu = MomentSeq::new(rand_table(&mut rng, 6));
            let rep = check_orthogonality(&mu, &nu, 6).unwrap();
            assert!(rep.passed(), "{rep:?}");
        }
        // the low orders are the first-component moments themselves
        let mu = MomentSeq::new(vec![q(2), q(5), qr(7, 2), q(1), q(0), q(3)]);
        let nu = MomentSeq::new(vec![q(1), q(1), q(1), q(1), q(1), q(1)]);
        let ortho = orthogonal_convolve_moments(&mu, &nu);
        assert_eq!(ortho.m(1), mu.m(1));
        assert_eq!(ortho.m(2), mu.m(2));
    }

    #[test]
    fn word_expansion_identity_holds_termwise() {
        // Expand x_1 y_1 x_2 y_2 x_3 via the subset identity with
        // p_j = psi(y_j) and evaluate both sides.
        let mut rng = SplitMix64::new(31);
        let family = rand_family(&mut rng, 2, 6);
        for n in 2..=4usize {
            // letters: x_i = (0, e_i), y_j = (1, f_j)
            let xs: Vec<u32> = (0..n).map(|_| rng.int_in(1, 2) as u32).collect();
            let ys: Vec<u32> = (0..n - 1).map(|_| rng.int_in(1, 2) as u32).collect();
            let mut raw = Vec::new();
            for i in 0..n {
                raw.push((0usize, xs[i]));
                if i + 1 < n {
                    raw.push((1usize, ys[i]));
                }
            }
            let lhs = eval_pair(&Word::new(raw).unwrap(), &family).unwrap().0;
            // sum over subsets S of {0..n-2}: keep y_j for j in S, replace by
            // -psi(y_j) * unit otherwise
            let mut rhs = Q::zero();
            for mask in 0..(1u32 << (n - 1)) {
                let mut coeff = Q::one();
                let mut raw: Vec<Letter> = Vec::new();
                for i in 0..n {
                    raw.push((0usize, xs[i]));
                    if i + 1 < n {
                        if (mask >> i) & 1 == 1 {
                            raw.push((1usize, ys[i]));
                            // the kept factor is (y - p): expand later
                        } else {
                            coeff *= family[1].psi_pow(ys[i]).unwrap();
                        }
                    }
                }
                // expand kept (y - p) factors multilinearly
                let kept: Vec<usize> = (0..n - 1).filter(|i| (mask >> i) & 1 == 1).collect();
                for sub in 0..(1u32 << kept.len()) {
                    let mut c = coeff.clone();
                    let mut word: Vec<Letter> = Vec::new();
                    let mut kept_iter = 0usize;
                    for i in 0..n {
                        word.push((0usize, xs[i]));
                        if i + 1 < n && (mask >> i) & 1 == 1 {
                            let bit = (sub >> kept_iter) & 1;
                            if bit == 1 {
                                word.push((1usize, ys[i]));
                            } else {
                                c = -c * family[1].psi_pow(ys[i]).unwrap();
                            }
                            kept_iter += 1;
                        }
                    }
                    let v = eval_pair(&Word::new(word).unwrap(), &family).unwrap().0;
                    rhs += c * v;
                }
            }
            assert_eq!(lhs, rhs, "n = {n}");
        }
    }
}

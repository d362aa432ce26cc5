//! Non-crossing partitions NC(n), monotone partitions M(n), linearly ordered
//! non-crossing partitions LNC(n), and the partition-indexed moment formulas
//! evaluated over an arbitrary coefficient ring.

use crate::ring::{qr, Coeff, Q};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("partition size {0} exceeds cap {1}")]
    SizeCap(usize, usize),
}

pub const NC_CAP: usize = 12;
pub const MONOTONE_CAP: usize = 9;
pub const LNC_CAP: usize = 8;

/// A non-crossing partition of {1..n}. Blocks are sorted internally and
/// ordered by their minima.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct NCPartition {
    pub n: usize,
    pub blocks: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BlockRole {
    Outer,
    Inner,
}

impl NCPartition {
    /// Checks the non-crossing property: no a < b < c < d with a, c in one
    /// block and b, d in another.
    pub fn is_non_crossing(&self) -> bool {
        for (i, bi) in self.blocks.iter().enumerate() {
            for bj in self.blocks.iter().skip(i + 1) {
                if blocks_cross(bi, bj) {
                    return false;
                }
            }
        }
        true
    }

    /// Immediate nesting parent of each block: the innermost block strictly
    /// enclosing it, if any.
    pub fn nesting_parents(&self) -> Vec<Option<usize>> {
        let b = self.blocks.len();
        let mut parents = vec![None; b];
        for v in 0..b {
            let mut best: Option<usize> = None;
            for w in 0..b {
                if w == v {
                    continue;
                }
                if encloses(&self.blocks[w], &self.blocks[v]) {
                    best = match best {
                        None => Some(w),
                        Some(cur) => {
                            // innermost enclosure = largest minimum
                            if self.blocks[w][0] > self.blocks[cur][0] {
                                Some(w)
                            } else {
                                Some(cur)
                            }
                        }
                    };
                }
            }
            parents[v] = best;
        }
        parents
    }

    /// Outer blocks are nested inside no other block.
    pub fn roles(&self) -> Vec<BlockRole> {
        self.nesting_parents()
            .iter()
            .map(|p| {
                if p.is_none() {
                    BlockRole::Outer
                } else {
                    BlockRole::Inner
                }
            })
            .collect()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

/// V strictly inside W: min W < min V and max V < max W.
fn encloses(w: &[usize], v: &[usize]) -> bool {
    w[0] < v[0] && v[v.len() - 1] < w[w.len() - 1]
}

fn blocks_cross(a: &[usize], b: &[usize]) -> bool {
    // a < b < c < d pattern with a,c from one block and b,d from the other.
    for win in a.windows(2) {
        let inside = b.iter().any(|&x| win[0] < x && x < win[1]);
        let outside = b.iter().any(|&x| x < win[0] || x > win[1]);
        if inside && outside {
            return true;
        }
    }
    false
}

/// A non-crossing partition with an admissible linear order on blocks:
/// nested blocks rank strictly higher than the blocks they sit inside.
/// `rank[i]` is the position (1-based) of block i in the order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MonotonePartition {
    pub pi: NCPartition,
    pub rank: Vec<usize>,
}

impl MonotonePartition {
    /// The defining constraint, checked for every nested pair.
    pub fn is_admissible(&self) -> bool {
        let b = self.pi.blocks.len();
        for v in 0..b {
            for w in 0..b {
                if v != w && encloses(&self.pi.blocks[w], &self.pi.blocks[v])
                    && self.rank[v] <= self.rank[w]
                {
                    return false;
                }
            }
        }
        true
    }
}

/// All non-crossing partitions of {1..n}; |NC(n)| = Catalan(n).
pub fn enumerate_nc(n: usize) -> Result<Vec<NCPartition>, PartitionError> {
    if n == 0 || n > NC_CAP {
        return Err(PartitionError::SizeCap(n, NC_CAP));
    }
    let raw = nc_interval(1, n);
    Ok(raw
        .into_iter()
        .map(|blocks| NCPartition { n, blocks })
        .collect())
}

/// Partitions of the integer interval [lo, hi]; empty interval gives one
/// empty partition. Blocks come out ordered by minima.
fn nc_interval(lo: usize, hi: usize) -> Vec<Vec<Vec<usize>>> {
    if lo > hi {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut spine = vec![lo];
    extend_spine(&mut spine, hi, &mut out);
    out
}

fn extend_spine(spine: &mut Vec<usize>, hi: usize, out: &mut Vec<Vec<Vec<usize>>>) {
    // Close the block containing the interval minimum here: the gaps between
    // consecutive spine points and the tail are partitioned independently.
    let mut gap_parts: Vec<Vec<Vec<Vec<usize>>>> = Vec::new();
    for i in 0..spine.len() {
        let (glo, ghi) = if i + 1 < spine.len() {
            (spine[i] + 1, spine[i + 1] - 1)
        } else {
            (spine[i] + 1, hi)
        };
        gap_parts.push(nc_interval(glo, ghi));
    }
    let mut idx = vec![0usize; gap_parts.len()];
    loop {
        let mut blocks = vec![spine.clone()];
        for (gi, choice) in idx.iter().enumerate() {
            blocks.extend(gap_parts[gi][*choice].iter().cloned());
        }
        blocks.sort_by_key(|b| b[0]);
        out.push(blocks);
        // advance the mixed-radix counter over gap choices
        let mut carry = true;
        for (gi, pos) in idx.iter_mut().enumerate() {
            if !carry {
                break;
            }
            *pos += 1;
            if *pos < gap_parts[gi].len() {
                carry = false;
            } else {
                *pos = 0;
            }
        }
        if carry {
            break;
        }
    }
    // Extend the spine with a further element.
    let last = *spine.last().unwrap();
    for m in (last + 1)..=hi {
        spine.push(m);
        extend_spine(spine, hi, out);
        spine.pop();
    }
}

/// All monotone partitions of {1..n}: admissible linear orders are the
/// linear extensions of the nesting forest (parents before children).
pub fn enumerate_monotone(n: usize) -> Result<Vec<MonotonePartition>, PartitionError> {
    if n == 0 || n > MONOTONE_CAP {
        return Err(PartitionError::SizeCap(n, MONOTONE_CAP));
    }
    let mut out = Vec::new();
    for pi in enumerate_nc(n)? {
        let parents = pi.nesting_parents();
        let b = parents.len();
        let mut placed = vec![false; b];
        let mut order = Vec::with_capacity(b);
        extensions(&parents, &mut placed, &mut order, &mut |order| {
            let mut rank = vec![0usize; b];
            for (pos, &blk) in order.iter().enumerate() {
                rank[blk] = pos + 1;
            }
            out.push(MonotonePartition {
                pi: pi.clone(),
                rank,
            });
        });
    }
    Ok(out)
}

fn extensions(
    parents: &[Option<usize>],
    placed: &mut Vec<bool>,
    order: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    if order.len() == parents.len() {
        emit(order);
        return;
    }
    for v in 0..parents.len() {
        if placed[v] {
            continue;
        }
        let ready = match parents[v] {
            None => true,
            Some(p) => placed[p],
        };
        if ready {
            placed[v] = true;
            order.push(v);
            extensions(parents, placed, order, emit);
            order.pop();
            placed[v] = false;
        }
    }
}

/// All linearly ordered non-crossing partitions: every linear order is
/// admissible. |LNC(n)| = sum over NC(n) of |pi|!.
pub fn enumerate_lnc(n: usize) -> Result<Vec<MonotonePartition>, PartitionError> {
    if n == 0 || n > LNC_CAP {
        return Err(PartitionError::SizeCap(n, LNC_CAP));
    }
    let mut out = Vec::new();
    for pi in enumerate_nc(n)? {
        let b = pi.block_count();
        let no_constraint = vec![None; b];
        let mut placed = vec![false; b];
        let mut order = Vec::with_capacity(b);
        extensions(&no_constraint, &mut placed, &mut order, &mut |order| {
            let mut rank = vec![0usize; b];
            for (pos, &blk) in order.iter().enumerate() {
                rank[blk] = pos + 1;
            }
            out.push(MonotonePartition {
                pi: pi.clone(),
                rank,
            });
        });
    }
    Ok(out)
}

/// The c-monotone moment formula evaluated over a prepared list of monotone
/// partitions of {1..n}: sum over (pi, lambda) of 1/|pi|! times the product
/// of pair cumulants over outer blocks and single-measure cumulants over
/// inner blocks. `r_pair[k-1]` holds r_k.
pub fn eval_cmonotone_formula_with<K: Coeff>(
    parts: &[MonotonePartition],
    r_pair: &[K],
    r_single: &[K],
) -> K {
    let mut total = K::zero();
    for mp in parts {
        let roles = mp.pi.roles();
        let mut prod = K::one();
        for (i, block) in mp.pi.blocks.iter().enumerate() {
            let r = match roles[i] {
                BlockRole::Outer => &r_pair[block.len() - 1],
                BlockRole::Inner => &r_single[block.len() - 1],
            };
            prod = prod.mul(r);
        }
        let inv_fact = qr(1, factorial(mp.pi.block_count()));
        total = total.add(&prod.scale(&inv_fact));
    }
    total
}

/// One grouped term of the formula: the block profile (size, role) of a
/// non-crossing partition and its total order weight e(pi)/|pi|!, where
/// e(pi) is the number of admissible linear orders.
#[derive(Clone, Debug)]
pub struct FormulaTerm {
    pub blocks: Vec<(usize, BlockRole)>,
    pub weight: Q,
}

/// The formula grouped by the underlying non-crossing partition: each pi
/// contributes its block product once, weighted by the exact count of its
/// admissible orders over |pi|!. Same sum as over M(n), term-grouped.
pub fn formula_plan(n: usize) -> Result<Vec<FormulaTerm>, PartitionError> {
    if n == 0 || n > NC_CAP {
        return Err(PartitionError::SizeCap(n, NC_CAP));
    }
    let mut plan = Vec::new();
    for pi in enumerate_nc(n)? {
        let parents = pi.nesting_parents();
        let roles = pi.roles();
        let count = count_extensions(&parents);
        let blocks = pi
            .blocks
            .iter()
            .zip(roles.iter())
            .map(|(b, r)| (b.len(), *r))
            .collect();
        plan.push(FormulaTerm {
            blocks,
            weight: qr(count, factorial(pi.block_count())),
        });
    }
    Ok(plan)
}

/// Count linear extensions of the nesting forest by subset dynamic
/// programming (parents placed before children).
fn count_extensions(parents: &[Option<usize>]) -> i64 {
    let b = parents.len();
    debug_assert!(b <= 16);
    let full = (1usize << b) - 1;
    let mut counts = vec![0i64; full + 1];
    counts[0] = 1;
    for mask in 0..full {
        if counts[mask] == 0 {
            continue;
        }
        for v in 0..b {
            if mask & (1 << v) != 0 {
                continue;
            }
            let ready = match parents[v] {
                None => true,
                Some(p) => mask & (1 << p) != 0,
            };
            if ready {
                counts[mask | (1 << v)] += counts[mask];
            }
        }
    }
    counts[full]
}

pub fn eval_plan<K: Coeff>(plan: &[FormulaTerm], r_pair: &[K], r_single: &[K]) -> K {
    let mut total = K::zero();
    for term in plan {
        let mut prod = K::one();
        for &(size, role) in &term.blocks {
            let r = match role {
                BlockRole::Outer => &r_pair[size - 1],
                BlockRole::Inner => &r_single[size - 1],
            };
            prod = prod.mul(r);
        }
        total = total.add(&prod.scale(&term.weight));
    }
    total
}

/// The moment formula for order n, via the grouped plan.
pub fn eval_cmonotone_formula<K: Coeff>(
    r_pair: &[K],
    r_single: &[K],
    n: usize,
) -> Result<K, PartitionError> {
    let plan = formula_plan(n)?;
    Ok(eval_plan(&plan, r_pair, r_single))
}

/// The monotone moment formula: the diagonal case of the c-monotone one.
pub fn eval_monotone_formula<K: Coeff>(r: &[K], n: usize) -> Result<K, PartitionError> {
    eval_cmonotone_formula(r, r, n)
}

/// The c-free moment formula: sum over NC(n) (no order factor) of pair
/// cumulants over outer blocks and free cumulants of the second component
/// over inner blocks.
pub fn eval_cfree_formula<K: Coeff>(
    r_pair: &[K],
    r_single: &[K],
    n: usize,
) -> Result<K, PartitionError> {
    let mut total = K::zero();
    for pi in enumerate_nc(n)? {
        let roles = pi.roles();
        let mut prod = K::one();
        for (i, block) in pi.blocks.iter().enumerate() {
            let r = match roles[i] {
                BlockRole::Outer => &r_pair[block.len() - 1],
                BlockRole::Inner => &r_single[block.len() - 1],
            };
            prod = prod.mul(r);
        }
        total = total.add(&prod);
    }
    Ok(total)
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product::<i64>().max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{q, Q};

    fn catalan(n: usize) -> usize {
        // C(2n, n) / (n + 1)
        let mut c: u128 = 1;
        for i in 0..n as u128 {
            c = c * (2 * (n as u128) - i) / (i + 1);
        }
        (c / (n as u128 + 1)) as usize
    }

    #[test]
    fn nc_counts_are_catalan() {
        for n in 1..=8 {
            let parts = enumerate_nc(n).unwrap();
            assert_eq!(parts.len(), catalan(n), "n = {n}");
            for p in &parts {
                assert!(p.is_non_crossing());
            }
            // duplicate-free
            let set: std::collections::HashSet<_> = parts.iter().cloned().collect();
            assert_eq!(set.len(), parts.len());
        }
    }

    #[test]
    fn nc_cap_is_enforced() {
        assert!(enumerate_nc(0).is_err());
        assert!(enumerate_nc(13).is_err());
        assert!(enumerate_monotone(10).is_err());
        assert!(enumerate_lnc(9).is_err());
    }

    /// Brute-force oracle: all set partitions via restricted growth strings,
    /// filtered for the non-crossing property; all block orders filtered by
    /// the nesting condition.
    fn brute_monotone_count(n: usize) -> usize {
        let mut rgs = vec![0usize; n];
        let mut count = 0usize;
        fn rec(rgs: &mut Vec<usize>, pos: usize, maxv: usize, n: usize, count: &mut usize) {
            if pos == n {
                // assemble blocks
                let nb = maxv + 1;
                let mut blocks = vec![Vec::new(); nb];
                for (i, &b) in rgs.iter().enumerate() {
                    blocks[b].push(i + 1);
                }
                let pi = NCPartition { n, blocks };
                if !pi.is_non_crossing() {
                    return;
                }
                // count admissible orders by brute permutation
                let parents = pi.nesting_parents();
                let mut perm: Vec<usize> = (0..nb).collect();
                let mut local = 0usize;
                permute(&mut perm, 0, &mut |p| {
                    let mut rank = vec![0usize; nb];
                    for (pos, &blk) in p.iter().enumerate() {
                        rank[blk] = pos + 1;
                    }
                    let ok = (0..nb).all(|v| match parents[v] {
                        None => true,
                        Some(w) => rank[v] > rank[w],
                    });
                    if ok {
                        local += 1;
                    }
                });
                *count += local;
                return;
            }
            for v in 0..=maxv + 1 {
                rgs[pos] = v;
                rec(rgs, pos + 1, maxv.max(v), n, count);
            }
        }
        fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
            if k == p.len() {
                f(p);
                return;
            }
            for i in k..p.len() {
                p.swap(k, i);
                permute(p, k + 1, f);
                p.swap(k, i);
            }
        }
        // first element always starts block 0
        rgs[0] = 0;
        rec(&mut rgs, 1, 0, n, &mut count);
        if n == 1 {
            return 1;
        }
        count
    }

    #[test]
    fn monotone_counts_match_brute_force() {
        let expected: Vec<usize> = (1..=6).map(brute_monotone_count).collect();
        for (i, n) in (1..=6).enumerate() {
            let parts = enumerate_monotone(n).unwrap();
            assert_eq!(parts.len(), expected[i], "n = {n}");
            for mp in &parts {
                assert!(mp.is_admissible());
            }
        }
        // the small values quoted everywhere
        assert_eq!(enumerate_monotone(2).unwrap().len(), 3);
        assert_eq!(enumerate_monotone(3).unwrap().len(), 12);
    }

    #[test]
    fn forgetting_order_recovers_nc() {
        for n in 1..=6 {
            let mono = enumerate_monotone(n).unwrap();
            let mut seen: std::collections::HashSet<NCPartition> =
                mono.into_iter().map(|mp| mp.pi).collect();
            for p in enumerate_nc(n).unwrap() {
                assert!(seen.remove(&p));
            }
            assert!(seen.is_empty());
        }
    }

    #[test]
    fn singleton_partitions_admit_all_orders() {
        // all-singleton pi has no nesting, so all |pi|! orders appear
        for n in 2..=5 {
            let mono = enumerate_monotone(n).unwrap();
            let singles = mono
                .iter()
                .filter(|mp| mp.pi.blocks.iter().all(|b| b.len() == 1))
                .count();
            assert_eq!(singles, (1..=n).product::<usize>());
        }
    }

    #[test]
    fn lnc_counts() {
        // n=1 -> 1, n=2 -> 3, n=3 -> 13 = 1*1! + 3*2! + 1*3!
        assert_eq!(enumerate_lnc(1).unwrap().len(), 1);
        assert_eq!(enumerate_lnc(2).unwrap().len(), 3);
        assert_eq!(enumerate_lnc(3).unwrap().len(), 13);
        for n in 1..=6 {
            let total: usize = enumerate_nc(n)
                .unwrap()
                .iter()
                .map(|p| (1..=p.block_count()).product::<usize>())
                .sum();
            assert_eq!(enumerate_lnc(n).unwrap().len(), total);
        }
    }

    #[test]
    fn roles_outer_inner() {
        // {1,4}{2,3}: second block is inner.
        let pi = NCPartition {
            n: 4,
            blocks: vec![vec![1, 4], vec![2, 3]],
        };
        assert_eq!(pi.roles(), vec![BlockRole::Outer, BlockRole::Inner]);
    }

    #[test]
    fn monotone_formula_low_orders() {
        // With formal single-variable checks done in the cumulants tests,
        // here: rational spot checks of m_3 = r_3 + (5/2) r_1 r_2 + r_1^3.
        let r: Vec<Q> = vec![q(2), q(3), q(5)];
        let m3 = eval_monotone_formula(&r, 3).unwrap();
        assert_eq!(m3, q(5) + qr(5, 2) * q(2) * q(3) + q(8));
    }

    #[test]
    fn monotone_formula_matches_recursion_to_order_eight() {
        // diagonal partition sum == forward moment recursion, n <= 8
        let r: Vec<Q> = vec![q(1), qr(-1, 2), q(2), qr(1, 3), q(0), q(1), qr(3, 4), q(-2)];
        let moments = crate::cumulants::moments_from_monotone_cumulants(&r);
        for n in 1..=8 {
            let viaparts = eval_monotone_formula(&r, n).unwrap();
            assert_eq!(&viaparts, moments.m(n), "n = {n}");
        }
    }

    #[test]
    fn cfree_formula_low_orders() {
        // n = 2: R_2(mu,nu) + R_1(mu,nu)^2 over NC(2).
        let rp: Vec<Q> = vec![q(3), q(7)];
        let rs: Vec<Q> = vec![q(11), q(13)];
        assert_eq!(eval_cfree_formula(&rp, &rs, 2).unwrap(), q(7) + q(9));
        // semicircle: R_2 = 1, everything else 0 -> m_4 = #(NC pair partitions of 4) = 2
        let rp: Vec<Q> = vec![q(0), q(1), q(0), q(0)];
        assert_eq!(eval_cfree_formula(&rp, &rp, 4).unwrap(), q(2));
    }

    #[test]
    fn monotone_partition_count_is_half_factorial() {
        // |M(n)| = (n+1)!/2 for n >= 2; the grouped plan weights must sum
        // to the same total mass of orders.
        for n in 2..=7 {
            let expect: usize = (1..=n + 1).product::<usize>() / 2;
            assert_eq!(enumerate_monotone(n).unwrap().len(), expect, "n = {n}");
            let plan_orders: i64 = formula_plan(n)
                .unwrap()
                .iter()
                .map(|t| {
                    let f = factorial(t.blocks.len());
                    let w = t.weight.clone() * q(f);
                    assert!(w.denom() == &num::BigInt::from(1));
                    i64::try_from(w.numer()).unwrap()
                })
                .sum::<i64>();
            assert_eq!(plan_orders as usize, expect);
        }
    }

    #[test]
    fn plan_matches_explicit_enumeration() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 33) % 9) as i64 - 4
        };
        for n in 1..=6 {
            let rp: Vec<Q> = (0..n).map(|_| q(next())).collect();
            let rs: Vec<Q> = (0..n).map(|_| q(next())).collect();
            let explicit =
                eval_cmonotone_formula_with(&enumerate_monotone(n).unwrap(), &rp, &rs);
            let plan = eval_plan(&formula_plan(n).unwrap(), &rp, &rs);
            assert_eq!(explicit, plan, "n = {n}");
        }
    }

    #[test]
    fn cfree_equals_lnc_weighted_sum() {
        // The same sum over LNC(n) with weight 1/|pi|! collapses the order.
        let rp: Vec<Q> = vec![q(1), q(-2), q(3), qr(1, 2)];
        let rs: Vec<Q> = vec![q(2), q(1), q(-1), qr(2, 3)];
        for n in 1..=4 {
            let direct = eval_cfree_formula(&rp, &rs, n).unwrap();
            let lnc = enumerate_lnc(n).unwrap();
            let weighted = eval_cmonotone_formula_with(&lnc, &rp, &rs);
            assert_eq!(direct, weighted);
        }
    }
}

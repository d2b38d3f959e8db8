//! End-to-end acceptance sweep: twelve independent checks covering the
//! lattice combinatorics, the Möbius function, scalar and operator-valued
//! cumulants, the concrete models, matrix amplification, and the transform
//! identities. Each check prints one pass/fail line; run with
//! `cargo test --test acceptance -- --nocapture` to see them.

use std::time::{Duration, Instant};

use num::{One, Zero};

use bifree_core::chi::{ChiMap, Side};
use bifree_core::matrix::RatMatrix;
use bifree_core::mobius::{mobius_closed, mobius_recursive};
use bifree_core::models::{
    lr_moment, FactorOp, FreeGroupModel, GroupWord, MatrixAlgebra, MonotoneSystem, Rep,
    TracedMatrices, TruncatedFreeProduct,
};
use bifree_core::opval::{
    amplify, check_bifree_opval, check_tensor_factorization, chi_of_operators, doubled_base_space,
    doubled_left_op, doubled_right_op, e_pi, expectation_product, kappa_pi_opval, kappa_word_opval,
    m2_trace_space, scalar_space, SidedOperator,
};
use bifree_core::partition::{
    enumerate_bnc, enumerate_family, enumerate_interval_partitions, BiPartition, FamilyTag,
};
use bifree_core::rat::{catalan, q, qi, RatRng, Q};
use bifree_core::scalar::{
    check_bifree, cumulants_to_moments, independence_sum, kac_loeve, kappa_word,
    moments_to_cumulants, side_patterns_up_to, words_up_to, IndependenceMode, Letter, MemoMoments,
    MomentFunctional, Moments, PairCumulants,
};
use bifree_core::series::{
    bundle_from_cumulants, check_r_additivity, check_single_variable_relations,
    sided_decomposition_residual, two_variable_transform_residual, vanishing_pure_cumulants,
    BiSeries, UniSeries, Var,
};

type Check = Result<(), String>;

fn rand_mat(rng: &mut RatRng, d: usize) -> RatMatrix {
    let mut m = RatMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            m.set(i, j, rng.next_q());
        }
    }
    m
}

fn random_pair_cumulants(seed: u64, order: usize) -> PairCumulants {
    let mut rng = RatRng::new(seed);
    let mut k = PairCumulants::new();
    for pat in side_patterns_up_to(order) {
        if !pat.is_empty() {
            k.set(pat, rng.next_q());
        }
    }
    k
}

fn chi_from_mask(n: usize, mask: u32) -> ChiMap {
    let sides = (0..n)
        .map(|k| if mask >> k & 1 == 1 { Side::Right } else { Side::Left })
        .collect();
    ChiMap::new(sides).unwrap()
}

fn sample_chis(n: usize) -> Vec<ChiMap> {
    let mut out = vec![chi_from_mask(n, 0), chi_from_mask(n, u32::MAX)];
    for mask in [0b101010u32, 0b010011] {
        let chi = chi_from_mask(n, mask);
        if !out.contains(&chi) {
            out.push(chi);
        }
    }
    out
}

/// Criterion 1: family sizes. Every side map of length n has Catalan(n)
/// bi-non-crossing partitions; the paired family at three pairs has exactly
/// the four diagrams induced by interval partitions; the monotone family of
/// the six-position reference side map has ten members.
fn lattice_counts() -> Check {
    for n in 1..=8usize {
        for mask in 0..(1u32 << n) {
            let chi = chi_from_mask(n, mask);
            let count = enumerate_bnc(&chi).map_err(|e| e.to_string())?.members.len();
            let expected = catalan(n);
            if Q::from_integer(count.into()) != Q::from_integer(expected.clone()) {
                return Err(format!("|BNC| = {count} for mask {mask:#b}, n = {n}, expected {expected}"));
            }
        }
    }
    let chi = ChiMap::alternating(3).map_err(|e| e.to_string())?;
    let fam = enumerate_family(&chi, FamilyTag::BncB).map_err(|e| e.to_string())?;
    let mut expected = Vec::new();
    for ip in enumerate_interval_partitions(3) {
        let blocks: Vec<Vec<usize>> = ip
            .iter()
            .map(|b| b.iter().flat_map(|&k| [2 * k - 1, 2 * k]).collect())
            .collect();
        expected.push(BiPartition::new(chi.clone(), blocks).map_err(|e| e.to_string())?);
    }
    expected.sort();
    let mut got = fam.members.clone();
    got.sort();
    if got != expected {
        return Err(format!("paired family at 3 pairs: got {got:?}"));
    }
    let chi = ChiMap::parse("RLLLRL").map_err(|e| e.to_string())?;
    let fam = enumerate_family(&chi, FamilyTag::BncM).map_err(|e| e.to_string())?;
    if fam.members.len() != 10 {
        return Err(format!("monotone family over RLLLRL has {} members, expected 10", fam.members.len()));
    }
    Ok(())
}

/// Criterion 2: the closed-form Möbius function agrees with the recursive
/// route on every comparable pair, and the defining convolution identities
/// hold exactly.
fn mobius_routes_agree() -> Check {
    for n in 1..=6usize {
        let chis = if n == 6 {
            vec![chi_from_mask(n, 0), chi_from_mask(n, 0b010011)]
        } else {
            sample_chis(n)
        };
        for chi in chis {
            let members = enumerate_bnc(&chi).map_err(|e| e.to_string())?.members;
            for pi in &members {
                for sigma in &members {
                    if !pi.refines(sigma).map_err(|e| e.to_string())? {
                        continue;
                    }
                    let a = mobius_closed(pi, sigma).map_err(|e| e.to_string())?;
                    let b = mobius_recursive(pi, sigma).map_err(|e| e.to_string())?;
                    if a != b {
                        return Err(format!("mobius mismatch at {pi:?} <= {sigma:?}: {a} vs {b}"));
                    }
                }
            }
        }
    }
    // Convolution against zeta sums to the Kronecker delta on both sides.
    for n in 1..=5usize {
        for chi in [chi_from_mask(n, 0), chi_from_mask(n, 0b01011)] {
            let members = enumerate_bnc(&chi).map_err(|e| e.to_string())?.members;
            for pi in &members {
                for tau in &members {
                    if !pi.refines(tau).map_err(|e| e.to_string())? {
                        continue;
                    }
                    let mut upper = Q::zero();
                    let mut lower = Q::zero();
                    for sigma in &members {
                        if pi.refines(sigma).map_err(|e| e.to_string())?
                            && sigma.refines(tau).map_err(|e| e.to_string())?
                        {
                            upper += mobius_closed(sigma, tau).map_err(|e| e.to_string())?;
                            lower += mobius_closed(pi, sigma).map_err(|e| e.to_string())?;
                        }
                    }
                    let delta = if pi == tau { Q::one() } else { Q::zero() };
                    if upper != delta || lower != delta {
                        return Err(format!("convolution identity fails at {pi:?} <= {tau:?}"));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Criterion 3: moments to cumulants and back is the identity on twenty
/// random rational tables to order six.
fn moment_cumulant_roundtrip() -> Check {
    let letters = vec![
        Letter::new("T", Side::Left, 1),
        Letter::new("S", Side::Right, 1),
    ];
    for seed in 0..20u64 {
        let mut rng = RatRng::new(seed);
        let mut mf = MomentFunctional::new(letters.clone(), 6);
        for w in words_up_to(&letters, 6) {
            if !w.is_empty() {
                mf.set(w, rng.next_q());
            }
        }
        let kappa = moments_to_cumulants(&mf, &letters, 6).map_err(|e| e.to_string())?;
        let back = cumulants_to_moments(&kappa, &letters, 6).map_err(|e| e.to_string())?;
        for w in words_up_to(&letters, 6) {
            let a = mf.moment(&w).map_err(|e| e.to_string())?;
            let b = back.moment(&w).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("roundtrip differs at seed {seed}, word {w:?}: {a} vs {b}"));
            }
        }
    }
    Ok(())
}

/// Criterion 4: the two regular-representation pairs on a free group have
/// vanishing mixed total cumulants for words of length up to six.
fn free_group_pairs() -> Check {
    let mut model = FreeGroupModel::new();
    let mut letters = Vec::new();
    for fam in 1..=2u32 {
        let u = GroupWord::gen(fam as usize - 1, 1);
        let t = Letter::new(&format!("T{fam}"), Side::Left, fam);
        let s = Letter::new(&format!("S{fam}"), Side::Right, fam);
        model.set(t.clone(), vec![(Rep::Lambda, u.clone())]);
        model.set(s.clone(), vec![(Rep::Rho, u)]);
        letters.push(t);
        letters.push(s);
    }
    let bad = check_bifree(&model, &letters, 6).map_err(|e| e.to_string())?;
    if let Some((word, value)) = bad.first() {
        return Err(format!("nonzero mixed cumulant {value} at {word:?}"));
    }
    Ok(())
}

/// Criterion 5: the matrix-unit pair under the normalized trace has total
/// cumulant exactly 1/2 even though both marginal means vanish; checked on
/// the operator-valued route and the scalar route.
fn matrix_unit_pair() -> Check {
    let (space, t, s) = m2_trace_space().map_err(|e| e.to_string())?;
    let kappa = kappa_word_opval(&space, &[t, s]).map_err(|e| e.to_string())?;
    if kappa != RatMatrix::from_rows(vec![vec![q(1, 2)]]).unwrap() {
        return Err(format!("operator-valued cumulant is {kappa:?}, expected 1/2"));
    }
    let alg = MatrixAlgebra::new(2).map_err(|e| e.to_string())?;
    let mut tm = TracedMatrices::new(alg);
    let lt = Letter::new("T", Side::Left, 1);
    let ls = Letter::new("S", Side::Right, 1);
    tm.set(lt.clone(), RatMatrix::unit(2, 0, 1)).map_err(|e| e.to_string())?;
    tm.set(ls.clone(), RatMatrix::unit(2, 1, 0)).map_err(|e| e.to_string())?;
    for (word, expected) in [
        (vec![lt.clone()], Q::zero()),
        (vec![ls.clone()], Q::zero()),
        (vec![lt.clone(), ls.clone()], q(1, 2)),
    ] {
        let got = kappa_word(&word, &tm).map_err(|e| e.to_string())?;
        if got != expected {
            return Err(format!("scalar cumulant of {word:?} is {got}, expected {expected}"));
        }
    }
    Ok(())
}

/// Criterion 6: for alternating words of square-zero left operators and the
/// fixed right partner, the full expectation equals the sum of cumulants over
/// the paired family (up to four pairs), and every moment function outside
/// that family vanishes (exhaustively up to three pairs).
fn interval_expansion() -> Check {
    let space = doubled_base_space(2).map_err(|e| e.to_string())?;
    let zero = RatMatrix::zeros(2, 2);
    let s = doubled_right_op(
        &space,
        &[
            vec![zero.clone(), zero.clone()],
            vec![RatMatrix::identity(2), zero.clone()],
        ],
    )
    .map_err(|e| e.to_string())?;
    let mut rng = RatRng::new(11);
    for n in 1..=4usize {
        let mut ops = Vec::new();
        for _ in 0..n {
            let z = rand_mat(&mut rng, 2);
            let t = doubled_left_op(
                &space,
                &[vec![zero.clone(), z], vec![zero.clone(), zero.clone()]],
            )
            .map_err(|e| e.to_string())?;
            ops.push(t);
            ops.push(s.clone());
        }
        let lhs = expectation_product(&space, &ops).map_err(|e| e.to_string())?;
        let chi = ChiMap::alternating(n).map_err(|e| e.to_string())?;
        let fam = enumerate_family(&chi, FamilyTag::BncB).map_err(|e| e.to_string())?;
        let mut rhs = RatMatrix::zeros(2, 2);
        for pi in &fam.members {
            rhs = rhs
                .add(&kappa_pi_opval(&space, &ops, pi).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        }
        if lhs != rhs {
            return Err(format!("restricted cumulant sum differs at {n} pairs"));
        }
        if n <= 3 {
            for pi in enumerate_bnc(&chi).map_err(|e| e.to_string())?.members {
                if fam.members.contains(&pi) {
                    continue;
                }
                let e = e_pi(&space, &ops, &pi).map_err(|e| e.to_string())?;
                if !e.is_zero() {
                    return Err(format!("moment function does not vanish at {pi:?}"));
                }
            }
        }
    }
    Ok(())
}

/// Criterion 7: the embedding model's moments match the monotone-restricted
/// cumulant sum for words of length up to five, and the free-group example of
/// a monotonically independent pair of algebras factorizes on sampled words.
fn monotone_expansion() -> Check {
    let mut rng = RatRng::new(17);
    let mut sys = MonotoneSystem::new(2).map_err(|e| e.to_string())?;
    let mut tm = TracedMatrices::new(MatrixAlgebra::new(2).map_err(|e| e.to_string())?);
    let mut letters = Vec::new();
    for (sym, first) in [("A", true), ("B", true), ("C", false), ("D", false)] {
        let z = rand_mat(&mut rng, 2);
        let letter = if first {
            sys.add_first(sym, &z).map_err(|e| e.to_string())?
        } else {
            sys.add_second(sym, &z).map_err(|e| e.to_string())?
        };
        tm.set(letter.clone(), z).map_err(|e| e.to_string())?;
        letters.push(letter);
    }
    let kappa = moments_to_cumulants(&tm, &letters, 5).map_err(|e| e.to_string())?;
    let memo = MemoMoments::new(sys.moments());
    for w in words_up_to(&letters, 5) {
        if w.is_empty() {
            continue;
        }
        let lhs = memo.moment(&w).map_err(|e| e.to_string())?;
        let rhs =
            independence_sum(&kappa, &w, IndependenceMode::Monotone).map_err(|e| e.to_string())?;
        if lhs != rhs {
            return Err(format!("monotone sum differs at {w:?}: {lhs} vs {rhs}"));
        }
    }

    // On a free group, products of the two regular representations of one
    // generator and left translations by a second generator form a
    // monotonically independent pair: the second algebra peels off as a
    // scalar whenever it sits next to elements of the first.
    let u1 = GroupWord::gen(0, 1);
    let u2 = GroupWord::gen(1, 1);
    let a: Vec<(Rep, GroupWord)> = vec![(Rep::Lambda, u1.clone()), (Rep::Rho, u1.clone())];
    let a2: Vec<(Rep, GroupWord)> = vec![(Rep::Lambda, u1.mul(&u1)), (Rep::Rho, u1.inverse())];
    let b: Vec<(Rep, GroupWord)> = vec![(Rep::Lambda, u2.clone())];
    let b2: Vec<(Rep, GroupWord)> = vec![(Rep::Lambda, u2.inverse().mul(&u2.inverse()))];
    let phi = |parts: &[&[(Rep, GroupWord)]]| {
        let flat: Vec<(Rep, GroupWord)> = parts.iter().flat_map(|p| p.iter().cloned()).collect();
        lr_moment(&flat)
    };
    let cases: Vec<(Q, Q)> = vec![
        (phi(&[&a, &b, &a2]), phi(&[&b]) * phi(&[&a, &a2])),
        (phi(&[&a, &b, &b2, &a2]), phi(&[&b, &b2]) * phi(&[&a, &a2])),
        (phi(&[&b, &a]), phi(&[&b]) * phi(&[&a])),
        (phi(&[&a2, &b2]), phi(&[&b2]) * phi(&[&a2])),
        (phi(&[&a, &b, &a, &b2]), phi(&[&b]) * phi(&[&b2]) * phi(&[&a, &a])),
        (
            phi(&[&a2, &b, &a, &b2, &a2]),
            phi(&[&b]) * phi(&[&b2]) * phi(&[&a2, &a, &a2]),
        ),
    ];
    for (i, (lhs, rhs)) in cases.iter().enumerate() {
        if lhs != rhs {
            return Err(format!("free-group factorization case {i} fails: {lhs} vs {rhs}"));
        }
    }
    Ok(())
}

/// Criterion 8: rotating two pairs by (3/5, 4/5) in both directions. Equal
/// central-limit inputs give cumulant-independent rotated pairs; unequal
/// covariance or a nonzero third-order cumulant yields a located nonzero
/// witness.
fn rotation_independence() -> Check {
    let c = q(3, 5);
    let s = q(4, 5);
    for seed in [5u64, 23] {
        let mut rng = RatRng::new(seed);
        let mut k1 = PairCumulants::new();
        for pat in side_patterns_up_to(2) {
            if pat.len() == 2 {
                k1.set(pat, rng.next_q());
            }
        }
        let k2 = k1.clone();
        let report = kac_loeve(&k1, &k2, &c, &s, 6).map_err(|e| e.to_string())?;
        if !report.mixed_nonzero.is_empty() || !report.central_limit_equal {
            return Err(format!("forward direction fails at seed {seed}"));
        }
        let mut unequal = k1.clone();
        let ll = vec![Side::Left, Side::Left];
        unequal.set(ll.clone(), k1.get(&ll) + qi(1));
        let report = kac_loeve(&k1, &unequal, &c, &s, 6).map_err(|e| e.to_string())?;
        match &report.witness {
            Some((_, _, v)) if !v.is_zero() => {}
            _ => return Err(format!("no witness for unequal covariance at seed {seed}")),
        }
        let mut third = k1.clone();
        third.set(vec![Side::Left, Side::Left, Side::Left], qi(1));
        let report = kac_loeve(&third, &k2, &c, &s, 6).map_err(|e| e.to_string())?;
        match &report.witness {
            Some((_, _, v)) if !v.is_zero() => {}
            _ => return Err(format!("no witness for third-order cumulant at seed {seed}")),
        }
    }
    Ok(())
}

/// Criterion 9: the moment functions of operators tensored with matrix units
/// factor as the base value times the diagram-ordered product of units, for
/// every partition at word length up to four and amplification up to three;
/// and amplified mixed cumulants of bi-free inputs still vanish.
fn amplification() -> Check {
    let mut rng = RatRng::new(7);
    let lemma = |ops: Vec<SidedOperator>, space, amp_n: usize| -> Check {
        let amp = amplify(space, amp_n).map_err(|e| e.to_string())?;
        let chi = chi_of_operators(&ops).map_err(|e| e.to_string())?;
        let len = ops.len();
        let unit_choices: Vec<Vec<(usize, usize)>> = vec![
            vec![(1, 1); len],
            (0..len).map(|k| (1 + k % amp_n, 1 + (k + 1) % amp_n)).collect(),
            (0..len).map(|k| (amp_n - k % amp_n, amp_n)).collect(),
        ];
        for pi in enumerate_bnc(&chi).map_err(|e| e.to_string())?.members {
            for units in &unit_choices {
                if !check_tensor_factorization(&amp, &ops, units, &pi).map_err(|e| e.to_string())? {
                    return Err(format!("factorization fails at {pi:?}, units {units:?}"));
                }
            }
        }
        Ok(())
    };
    let dim = 3;
    let mut unit = vec![Q::zero(); dim];
    unit[0] = qi(1);
    let space = scalar_space(unit.clone(), unit).map_err(|e| e.to_string())?;
    for (amp_n, sides) in [
        (2usize, vec![Side::Left, Side::Right, Side::Left, Side::Right]),
        (3, vec![Side::Right, Side::Left, Side::Left]),
        (2, vec![Side::Left, Side::Left, Side::Right]),
    ] {
        let ops = sides
            .iter()
            .map(|&side| SidedOperator::new(&space, side, rand_mat(&mut rng, dim)))
            .collect::<bifree_core::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        lemma(ops, &space, amp_n)?;
    }

    let fp = TruncatedFreeProduct::new(vec![1, 1], 4).map_err(|e| e.to_string())?;
    let mut unit = vec![Q::zero(); fp.dim()];
    unit[fp.vacuum_index()] = qi(1);
    let base = scalar_space(unit.clone(), unit).map_err(|e| e.to_string())?;
    let amp = amplify(&base, 2).map_err(|e| e.to_string())?;
    let mut amp_ops = Vec::new();
    for fam in 0..2u32 {
        for rep in [Rep::Lambda, Rep::Rho] {
            let fo = FactorOp {
                factor: fam as usize,
                rep,
                mat: rand_mat(&mut rng, 1),
            };
            let m = fp.op_matrix(&fo).map_err(|e| e.to_string())?;
            let entries: Vec<Vec<RatMatrix>> = (0..2)
                .map(|_| (0..2).map(|_| m.scale(&rng.next_q())).collect())
                .collect();
            let so = match rep {
                Rep::Lambda => amp.embed_left(&entries).map_err(|e| e.to_string())?,
                Rep::Rho => amp.embed_right(&entries).map_err(|e| e.to_string())?,
            };
            amp_ops.push((fam + 1, so));
        }
    }
    let bad = check_bifree_opval(amp.space(), &amp_ops, 4).map_err(|e| e.to_string())?;
    if let Some((word, _)) = bad.first() {
        return Err(format!("amplified mixed cumulant does not vanish at word {word:?}"));
    }
    Ok(())
}

/// Criterion 10: the two-variable transform identity has exactly zero
/// residual to total degree eight on twenty random cumulant tables, and with
/// all mixed cumulants zero the joint moment series splits as a product.
fn two_variable_transform() -> Check {
    for seed in 0..20u64 {
        let kappa = random_pair_cumulants(seed, 8);
        let b = bundle_from_cumulants(&kappa, 8).map_err(|e| e.to_string())?;
        let residual = two_variable_transform_residual(&b).map_err(|e| e.to_string())?;
        if !residual.is_zero() {
            return Err(format!("nonzero residual at seed {seed}"));
        }
        for (name, series) in check_single_variable_relations(&b).map_err(|e| e.to_string())? {
            if !series.is_zero() {
                return Err(format!("relation {name:?} fails at seed {seed}"));
            }
        }
    }
    let mut pure = PairCumulants::new();
    let mut rng = RatRng::new(99);
    for pat in side_patterns_up_to(8) {
        if !pat.is_empty() && pat.iter().all(|&x| x == pat[0]) {
            pure.set(pat, rng.next_q());
        }
    }
    let b = bundle_from_cumulants(&pure, 8).map_err(|e| e.to_string())?;
    if !two_variable_transform_residual(&b).map_err(|e| e.to_string())?.is_zero() {
        return Err("nonzero residual without mixed cumulants".into());
    }
    let product = BiSeries::from_uni(&b.m_t, Var::Z)
        .mul(&BiSeries::from_uni(&b.m_s, Var::W))
        .map_err(|e| e.to_string())?;
    if b.m_ts != product {
        return Err("joint moments do not split without mixed cumulants".into());
    }
    Ok(())
}

/// Criterion 11: with pure moments forced to vanish, the sided decomposition
/// of the moment series with binomial weights has exactly zero residual to
/// total degree seven on ten random tables; and on square-zero interval data
/// it collapses to the one-variable relation M = 1 + eta * M.
fn sided_decomposition() -> Check {
    for seed in 0..10u64 {
        let raw = random_pair_cumulants(seed, 7);
        let adjusted = vanishing_pure_cumulants(&raw, 7).map_err(|e| e.to_string())?;
        let residual = sided_decomposition_residual(&adjusted, 7).map_err(|e| e.to_string())?;
        if !residual.is_zero() {
            return Err(format!("nonzero residual at seed {seed}"));
        }
    }
    // Square-zero interval data: the interleaved pair generated by one
    // nilpotent left operator and its right partner has a one-variable
    // alternating moment series satisfying M = 1 + eta * M, where eta is the
    // interval cumulant series.
    use bifree_core::models::BooleanSystem;
    use bifree_core::scalar::boolean_cumulant;
    let mut sys = BooleanSystem::new(1, 1).map_err(|e| e.to_string())?;
    let mut z = RatMatrix::zeros(1, 1);
    z.set(0, 0, q(3, 2));
    let t = sys.add_t("T", 1, &z).map_err(|e| e.to_string())?;
    let s = sys.add_s("S", 1).map_err(|e| e.to_string())?;
    let memo = MemoMoments::new(sys.moments());
    let mut kappa = PairCumulants::new();
    for sides in side_patterns_up_to(6) {
        if sides.is_empty() {
            continue;
        }
        let word: Vec<Letter> = sides
            .iter()
            .map(|&x| if x == Side::Left { t.clone() } else { s.clone() })
            .collect();
        kappa.set(sides, kappa_word(&word, &memo).map_err(|e| e.to_string())?);
    }
    if !sided_decomposition_residual(&kappa, 6).map_err(|e| e.to_string())?.is_zero() {
        return Err("interval data has a nonzero decomposition residual".into());
    }
    let half = 3usize;
    let mut moments = UniSeries::one(half);
    let mut eta = UniSeries::new(half);
    for n in 1..=half {
        let word: Vec<Letter> = (0..2 * n)
            .map(|i| if i % 2 == 0 { t.clone() } else { s.clone() })
            .collect();
        moments.set_coeff(n, memo.moment(&word).map_err(|e| e.to_string())?);
        let pairs: Vec<_> = (0..n).map(|_| (t.clone(), s.clone())).collect();
        eta.set_coeff(n, boolean_cumulant(&pairs, &memo).map_err(|e| e.to_string())?);
    }
    let rhs = UniSeries::one(half)
        .add(&eta.mul(&moments).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    if moments != rhs {
        return Err("interval data does not satisfy M = 1 + eta * M".into());
    }
    Ok(())
}

/// Criterion 12: cumulants add under the product construction, to order six.
fn cumulant_additivity() -> Check {
    for seed in [1u64, 42] {
        let k1 = random_pair_cumulants(seed, 6);
        let k2 = random_pair_cumulants(seed + 1000, 6);
        let residual = check_r_additivity(&k1, &k2, 6).map_err(|e| e.to_string())?;
        if !residual.is_zero() {
            return Err(format!("additivity residual nonzero at seed {seed}"));
        }
    }
    let k1 = random_pair_cumulants(3, 6);
    let residual = check_r_additivity(&k1, &PairCumulants::new(), 6).map_err(|e| e.to_string())?;
    if !residual.is_zero() {
        return Err("adding a point mass changes the cumulants".into());
    }
    Ok(())
}

#[test]
fn acceptance() {
    let checks: Vec<(&str, fn() -> Check, Option<Duration>)> = vec![
        ("01 lattice counts", lattice_counts, Some(Duration::from_secs(5))),
        ("02 mobius routes agree", mobius_routes_agree, Some(Duration::from_secs(30))),
        ("03 moment-cumulant roundtrip", moment_cumulant_roundtrip, Some(Duration::from_secs(10))),
        ("04 free-group pairs", free_group_pairs, Some(Duration::from_secs(60))),
        ("05 matrix-unit pair", matrix_unit_pair, None),
        ("06 interval expansion", interval_expansion, None),
        ("07 monotone expansion", monotone_expansion, None),
        ("08 rotation independence", rotation_independence, Some(Duration::from_secs(60))),
        ("09 amplification", amplification, None),
        ("10 two-variable transform", two_variable_transform, Some(Duration::from_secs(120))),
        ("11 sided decomposition", sided_decomposition, None),
        ("12 cumulant additivity", cumulant_additivity, None),
    ];
    let mut failures = Vec::new();
    for (name, f, budget) in checks {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let mut status = match &outcome {
            Ok(()) => "pass".to_string(),
            Err(e) => format!("FAIL: {e}"),
        };
        if let Some(bound) = budget {
            if elapsed > bound {
                status = format!("FAIL: exceeded {bound:?} budget");
                failures.push(format!("{name}: over budget ({elapsed:?})"));
            }
        }
        println!("criterion {name}: {status} ({} ms)", elapsed.as_millis());
        if let Err(e) = outcome {
            failures.push(format!("{name}: {e}"));
        }
    }
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
}

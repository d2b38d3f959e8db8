//! Scalar moment and cumulant calculus on words over a typed alphabet:
//! block products, Möbius transforms, bi-free combination, the four
//! independence summation formulas, and the exact rotation (Kac/Loeve)
//! argument.

use crate::chi::{ChiMap, Side};
use crate::mobius::mobius_closed;
use crate::partition::{enumerate_bnc, enumerate_family, BiPartition, FamilyTag};
use crate::rat::{format_q, parse_q, Q};
use crate::{Error, Result};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::HashMap;

/// A typed alphabet symbol: an opaque name with a fixed side and family.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    /// Opaque identifier.
    pub sym: String,
    /// Operator side.
    pub side: Side,
    /// Family index.
    pub family: u32,
}

impl Letter {
    /// Convenience constructor.
    pub fn new(sym: &str, side: Side, family: u32) -> Self {
        Letter {
            sym: sym.into(),
            side,
            family,
        }
    }
}

/// A word over the alphabet.
pub type Word = Vec<Letter>;

/// Side map induced by a word.
pub fn chi_of(word: &[Letter]) -> Result<ChiMap> {
    ChiMap::new(word.iter().map(|l| l.side).collect())
}

/// Family map induced by a word.
pub fn epsilon_of(word: &[Letter]) -> Vec<u32> {
    word.iter().map(|l| l.family).collect()
}

fn subword(word: &[Letter], block: &[usize]) -> Word {
    block.iter().map(|&k| word[k - 1].clone()).collect()
}

/// A source of joint moments. The empty word has moment 1.
pub trait Moments {
    /// Moment of the product of the letters, in order.
    fn moment(&self, word: &[Letter]) -> Result<Q>;
}

/// A finite moment table with a declared order bound and alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentFunctional {
    order: usize,
    letters: Vec<Letter>,
    table: HashMap<Word, Q>,
}

impl MomentFunctional {
    /// Empty table over the given alphabet.
    pub fn new(letters: Vec<Letter>, order: usize) -> Self {
        MomentFunctional {
            order,
            letters,
            table: HashMap::new(),
        }
    }

    /// Declared order bound.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Alphabet.
    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Sets one moment.
    pub fn set(&mut self, word: Word, value: Q) {
        self.table.insert(word, value);
    }

    /// Fills the table from any moment source, for all words up to the order
    /// bound.
    pub fn tabulate(letters: Vec<Letter>, order: usize, phi: &dyn Moments) -> Result<Self> {
        let mut out = MomentFunctional::new(letters.clone(), order);
        for word in words_up_to(&letters, order) {
            let v = phi.moment(&word)?;
            out.set(word, v);
        }
        Ok(out)
    }

    /// Serializable JSON form.
    pub fn to_json(&self) -> MomentTableJson {
        let mut moments: Vec<MomentEntryJson> = self
            .table
            .iter()
            .map(|(w, v)| MomentEntryJson {
                word: w.iter().map(|l| l.sym.clone()).collect(),
                value: format_q(v),
            })
            .collect();
        moments.sort_by(|a, b| (a.word.len(), &a.word).cmp(&(b.word.len(), &b.word)));
        MomentTableJson {
            order: self.order,
            letters: self
                .letters
                .iter()
                .map(|l| LetterJson {
                    sym: l.sym.clone(),
                    side: match l.side {
                        Side::Left => "L".into(),
                        Side::Right => "R".into(),
                    },
                    family: l.family,
                })
                .collect(),
            moments,
        }
    }

    /// Parses the JSON form.
    pub fn from_json(j: &MomentTableJson) -> Result<Self> {
        let letters: Vec<Letter> = j
            .letters
            .iter()
            .map(|l| {
                let side = match l.side.as_str() {
                    "L" | "l" => Side::Left,
                    "R" | "r" => Side::Right,
                    other => return Err(Error::Parse(format!("bad side {other:?}"))),
                };
                Ok(Letter::new(&l.sym, side, l.family))
            })
            .collect::<Result<_>>()?;
        let lookup: HashMap<&str, &Letter> =
            letters.iter().map(|l| (l.sym.as_str(), l)).collect();
        let mut out = MomentFunctional::new(letters.clone(), j.order);
        for e in &j.moments {
            let word: Word = e
                .word
                .iter()
                .map(|s| {
                    lookup
                        .get(s.as_str())
                        .map(|&l| l.clone())
                        .ok_or_else(|| Error::Parse(format!("unknown symbol {s:?}")))
                })
                .collect::<Result<_>>()?;
            out.set(word, parse_q(&e.value)?);
        }
        Ok(out)
    }
}

impl Moments for MomentFunctional {
    fn moment(&self, word: &[Letter]) -> Result<Q> {
        if word.is_empty() {
            return Ok(Q::one());
        }
        self.table.get(word).cloned().ok_or_else(|| {
            Error::MissingData(format!(
                "moment table lacks word {:?}",
                word.iter().map(|l| l.sym.as_str()).collect::<Vec<_>>()
            ))
        })
    }
}

/// JSON form of a letter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LetterJson {
    /// Symbol.
    pub sym: String,
    /// `"L"` or `"R"`.
    pub side: String,
    /// Family index.
    pub family: u32,
}

/// JSON entry for one moment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentEntryJson {
    /// Symbol sequence.
    pub word: Vec<String>,
    /// Rational as `"p/q"`.
    pub value: String,
}

/// JSON form of a moment table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentTableJson {
    /// Order bound.
    pub order: usize,
    /// Alphabet.
    pub letters: Vec<LetterJson>,
    /// Moment entries.
    pub moments: Vec<MomentEntryJson>,
}

/// Memoizing adapter over a moment source.
pub struct MemoMoments<'a> {
    inner: &'a dyn Moments,
    cache: RefCell<HashMap<Word, Q>>,
}

impl<'a> MemoMoments<'a> {
    /// Wraps a source.
    pub fn new(inner: &'a dyn Moments) -> Self {
        MemoMoments {
            inner,
            cache: RefCell::new(HashMap::new()),
        }
    }
}

impl Moments for MemoMoments<'_> {
    fn moment(&self, word: &[Letter]) -> Result<Q> {
        if let Some(v) = self.cache.borrow().get(word) {
            return Ok(v.clone());
        }
        let v = self.inner.moment(word)?;
        self.cache.borrow_mut().insert(word.to_vec(), v.clone());
        Ok(v)
    }
}

/// All words over `letters` with length between 1 and `order`.
pub fn words_up_to(letters: &[Letter], order: usize) -> Vec<Word> {
    let mut out: Vec<Word> = Vec::new();
    let mut layer: Vec<Word> = vec![Vec::new()];
    for _ in 0..order {
        let mut next = Vec::new();
        for w in &layer {
            for l in letters {
                let mut nw = w.clone();
                nw.push(l.clone());
                next.push(nw);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Block-product moment: product over blocks of the moment of each block's
/// subword, letters kept in natural index order.
pub fn phi_pi(word: &[Letter], pi: &BiPartition, phi: &dyn Moments) -> Result<Q> {
    let chi = chi_of(word)?;
    if pi.chi() != &chi {
        return Err(Error::InvalidArgument(
            "partition side map does not match the word".into(),
        ));
    }
    let mut out = Q::one();
    for b in pi.blocks() {
        out *= phi.moment(&subword(word, b))?;
    }
    Ok(out)
}

/// Cumulant of a partition: the Möbius sum `Σ_{σ ≤ π} φ_σ μ(σ, π)`.
pub fn kappa_pi(word: &[Letter], pi: &BiPartition, phi: &dyn Moments) -> Result<Q> {
    let chi = chi_of(word)?;
    if pi.chi() != &chi {
        return Err(Error::InvalidArgument(
            "partition side map does not match the word".into(),
        ));
    }
    let family = enumerate_bnc(&chi)?;
    let mut out = Q::zero();
    for sigma in &family.members {
        if sigma.refines(pi)? {
            let mu = mobius_closed(sigma, pi)?;
            if !mu.is_zero() {
                out += phi_pi(word, sigma, phi)? * mu;
            }
        }
    }
    Ok(out)
}

/// The total cumulant `κ_{1_χ}` of a word.
pub fn kappa_word(word: &[Letter], phi: &dyn Moments) -> Result<Q> {
    let chi = chi_of(word)?;
    kappa_pi(word, &BiPartition::one(chi), phi)
}

/// A table of total cumulants `κ_{1_χ}` keyed by word; partition cumulants
/// extend by block products.
#[derive(Debug, Clone, Default)]
pub struct CumulantTable {
    table: HashMap<Word, Q>,
}

impl CumulantTable {
    /// Empty table.
    pub fn new() -> Self {
        CumulantTable::default()
    }

    /// Sets one cumulant.
    pub fn set(&mut self, word: Word, value: Q) {
        self.table.insert(word, value);
    }

    /// Looks up one cumulant.
    pub fn get(&self, word: &[Letter]) -> Result<Q> {
        self.table.get(word).cloned().ok_or_else(|| {
            Error::MissingData(format!(
                "cumulant table lacks word {:?}",
                word.iter().map(|l| l.sym.as_str()).collect::<Vec<_>>()
            ))
        })
    }

    /// Iterator over entries.
    pub fn iter(&self) -> impl Iterator<Item = (&Word, &Q)> {
        self.table.iter()
    }

    /// Partition cumulant as the product of per-block table values.
    pub fn kappa_pi_product(&self, word: &[Letter], pi: &BiPartition) -> Result<Q> {
        let mut out = Q::one();
        for b in pi.blocks() {
            out *= self.get(&subword(word, b))?;
            if out.is_zero() {
                return Ok(out);
            }
        }
        Ok(out)
    }

    /// Moment reconstruction: `Σ_{π ∈ BNC(χ)} κ_π`.
    pub fn moment(&self, word: &[Letter]) -> Result<Q> {
        if word.is_empty() {
            return Ok(Q::one());
        }
        let chi = chi_of(word)?;
        let family = enumerate_bnc(&chi)?;
        let mut out = Q::zero();
        for pi in &family.members {
            out += self.kappa_pi_product(word, pi)?;
        }
        Ok(out)
    }
}

/// Computes the cumulant table of every word up to `order` from a moment
/// source.
pub fn moments_to_cumulants(
    phi: &dyn Moments,
    letters: &[Letter],
    order: usize,
) -> Result<CumulantTable> {
    let memo = MemoMoments::new(phi);
    let mut out = CumulantTable::new();
    for word in words_up_to(letters, order) {
        let v = kappa_word(&word, &memo)?;
        out.set(word, v);
    }
    Ok(out)
}

/// Rebuilds the moment table of every word up to `order` from a cumulant
/// table.
pub fn cumulants_to_moments(
    kappa: &CumulantTable,
    letters: &[Letter],
    order: usize,
) -> Result<MomentFunctional> {
    let mut out = MomentFunctional::new(letters.to_vec(), order);
    for word in words_up_to(letters, order) {
        let v = kappa.moment(&word)?;
        out.set(word, v);
    }
    Ok(out)
}

/// Joint distribution of families combined as a bi-free pair family: mixed
/// cumulants vanish, per-family cumulants are taken from the inputs.
pub fn bifree_product(dists: &[&MomentFunctional], order: usize) -> Result<MomentFunctional> {
    let mut union: Vec<Letter> = Vec::new();
    let mut families: Vec<u32> = Vec::new();
    for d in dists {
        for l in d.letters() {
            if union.iter().any(|u| u.sym == l.sym) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate symbol {:?} across inputs",
                    l.sym
                )));
            }
            union.push(l.clone());
        }
        let mut fams: Vec<u32> = d.letters().iter().map(|l| l.family).collect();
        fams.sort_unstable();
        fams.dedup();
        for f in fams {
            if families.contains(&f) {
                return Err(Error::InvalidArgument(format!(
                    "family {f} appears in more than one input"
                )));
            }
            families.push(f);
        }
    }
    let mut joint = CumulantTable::new();
    for d in dists {
        let per = moments_to_cumulants(*d, d.letters(), order)?;
        for (w, v) in per.iter() {
            joint.set(w.clone(), v.clone());
        }
    }
    for word in words_up_to(&union, order) {
        let constant = word.iter().all(|l| l.family == word[0].family);
        if !constant {
            joint.set(word, Q::zero());
        }
    }
    cumulants_to_moments(&joint, &union, order)
}

/// Nonzero mixed total cumulants of a joint source, up to `order`.
///
/// An empty report means the families are bi-free to that order.
pub fn check_bifree(
    joint: &dyn Moments,
    letters: &[Letter],
    order: usize,
) -> Result<Vec<(Word, Q)>> {
    let memo = MemoMoments::new(joint);
    let mut bad = Vec::new();
    for word in words_up_to(letters, order) {
        if word.len() < 2 || word.iter().all(|l| l.family == word[0].family) {
            continue;
        }
        let v = kappa_word(&word, &memo)?;
        if !v.is_zero() {
            bad.push((word, v));
        }
    }
    Ok(bad)
}

/// Which restricted summation formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndependenceMode {
    /// Sum over partitions refining the family map, constant side map.
    Free,
    /// Side map derived from families (family 1 left, family 2 right);
    /// vertically split sum.
    Classical,
    /// Alternating side map with paired families; paired/Boolean sum.
    Boolean,
    /// Side map derived from families (family 2 left, family 1 right);
    /// monotone sum evaluated through the image family.
    Monotone,
}

fn refines_epsilon(pi: &BiPartition, eps: &[u32]) -> bool {
    pi.blocks()
        .iter()
        .all(|b| b.iter().all(|&k| eps[k - 1] == eps[b[0] - 1]))
}

/// Restricted cumulant summation for the four independence notions.
///
/// The blocks are always evaluated through the supplied cumulant table on
/// the subwords of `word` in natural order.
pub fn independence_sum(
    kappa: &CumulantTable,
    word: &[Letter],
    mode: IndependenceMode,
) -> Result<Q> {
    let eps = epsilon_of(word);
    let members: Vec<BiPartition> = match mode {
        IndependenceMode::Free => {
            let chi = chi_of(word)?;
            if chi.sides().iter().any(|&s| s != chi.side(1)) {
                return Err(Error::InvalidArgument(
                    "free mode requires a constant side map".into(),
                ));
            }
            enumerate_bnc(&chi)?
                .members
                .into_iter()
                .filter(|p| refines_epsilon(p, &eps))
                .collect()
        }
        IndependenceMode::Classical => {
            let chi = chi_from_families(word, 1)?;
            enumerate_bnc(&chi)?
                .members
                .into_iter()
                .filter(|p| refines_epsilon(p, &eps))
                .collect()
        }
        IndependenceMode::Boolean => {
            let chi = chi_of(word)?;
            if !chi.is_alternating() {
                return Err(Error::InvalidArgument(
                    "boolean mode requires an alternating side map".into(),
                ));
            }
            for m in 1..=word.len() / 2 {
                if eps[2 * m - 2] != eps[2 * m - 1] {
                    return Err(Error::InvalidArgument(
                        "boolean mode requires families paired as (2m-1, 2m)".into(),
                    ));
                }
            }
            enumerate_family(&chi, FamilyTag::BncB)?.members
        }
        IndependenceMode::Monotone => {
            let chi = chi_from_families(word, 2)?;
            enumerate_family(&chi, FamilyTag::BncM)?.members
        }
    };
    let mut out = Q::zero();
    for pi in &members {
        out += kappa.kappa_pi_product(word, pi)?;
    }
    Ok(out)
}

fn chi_from_families(word: &[Letter], left_family: u32) -> Result<ChiMap> {
    let sides = word
        .iter()
        .map(|l| match l.family {
            f if f == left_family => Ok(Side::Left),
            1 | 2 => Ok(Side::Right),
            other => Err(Error::InvalidArgument(format!(
                "mode supports families {{1,2}}, found {other}"
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    ChiMap::new(sides)
}

/// Boolean cumulant realized through an embedded interleaved word: the total
/// cumulant of `T_{k_1,Z_1} S_{k_1} … T_{k_n,Z_n} S_{k_n}`.
pub fn boolean_cumulant(pairs: &[(Letter, Letter)], phi: &dyn Moments) -> Result<Q> {
    let mut word = Vec::with_capacity(2 * pairs.len());
    for (t, s) in pairs {
        if t.side != Side::Left || s.side != Side::Right {
            return Err(Error::InvalidArgument(
                "embedded pairs must be (left, right)".into(),
            ));
        }
        word.push(t.clone());
        word.push(s.clone());
    }
    kappa_word(&word, phi)
}

/// Independent oracle for Boolean cumulants: the first-interval recursion
/// `moment(Z_1…Z_n) = Σ_j b(Z_1…Z_j) · moment(Z_{j+1}…Z_n)`.
pub fn boolean_cumulant_via_intervals(word: &[Letter], phi: &dyn Moments) -> Result<Q> {
    fn rec(word: &[Letter], phi: &dyn Moments, memo: &mut HashMap<Word, Q>) -> Result<Q> {
        if let Some(v) = memo.get(word) {
            return Ok(v.clone());
        }
        let n = word.len();
        let mut v = phi.moment(word)?;
        for j in 1..n {
            let head = rec(&word[..j], phi, memo)?;
            v -= head * phi.moment(&word[j..])?;
        }
        memo.insert(word.to_vec(), v.clone());
        Ok(v)
    }
    rec(word, phi, &mut HashMap::new())
}

/// Cumulants of one two-faced pair indexed purely by the side pattern: entry
/// for side sequence `χ` is the total cumulant of the word placing the pair's
/// left element on left positions and its right element on right positions.
#[derive(Debug, Clone, Default)]
pub struct PairCumulants {
    map: HashMap<Vec<Side>, Q>,
}

impl PairCumulants {
    /// Empty table; absent patterns read as zero.
    pub fn new() -> Self {
        PairCumulants::default()
    }

    /// Sets the cumulant of a side pattern.
    pub fn set(&mut self, pattern: Vec<Side>, value: Q) {
        self.map.insert(pattern, value);
    }

    /// Cumulant of a side pattern (zero if unset).
    pub fn get(&self, pattern: &[Side]) -> Q {
        self.map.get(pattern).cloned().unwrap_or_else(Q::zero)
    }

    /// True when all cumulants of order ≥ 3 vanish and both means are zero.
    pub fn is_central_limit(&self, order: usize) -> bool {
        for pattern in side_patterns_up_to(order) {
            if pattern.len() != 2 && !self.get(&pattern).is_zero() {
                return false;
            }
        }
        true
    }
}

/// All side patterns of length 1..=order.
pub fn side_patterns_up_to(order: usize) -> Vec<Vec<Side>> {
    let mut out = Vec::new();
    for n in 1..=order {
        for mask in 0..(1u64 << n) {
            out.push(
                (0..n)
                    .map(|i| {
                        if mask & (1 << i) != 0 {
                            Side::Right
                        } else {
                            Side::Left
                        }
                    })
                    .collect(),
            );
        }
    }
    out
}

/// Report of the exact rotation check.
#[derive(Debug, Clone)]
pub struct KacLoeveReport {
    /// Nonzero mixed cumulants of the rotated pairs: side pattern, pair-index
    /// word over {3,4}, value.
    pub mixed_nonzero: Vec<(Vec<Side>, Vec<u8>, Q)>,
    /// Whether the inputs pass the central-limit-with-equal-covariance
    /// predicate up to the order bound.
    pub central_limit_equal: bool,
    /// A specific nonzero witness located through the 2×2 system of the
    /// rotation argument, when the predicate fails.
    pub witness: Option<(Vec<Side>, Vec<u8>, Q)>,
}

fn rotated_coefficients(c: &Q, s: &Q, id: u8) -> (Q, Q) {
    // Pair 3 = c·(pair 1) + s·(pair 2); pair 4 = −s·(pair 1) + c·(pair 2).
    match id {
        3 => (c.clone(), s.clone()),
        4 => (-s.clone(), c.clone()),
        _ => unreachable!("pair ids are 3 and 4"),
    }
}

fn rotated_cumulant(
    k1: &PairCumulants,
    k2: &PairCumulants,
    c: &Q,
    s: &Q,
    pattern: &[Side],
    ids: &[u8],
) -> Q {
    let mut coeff1 = Q::one();
    let mut coeff2 = Q::one();
    for &id in ids {
        let (a, b) = rotated_coefficients(c, s, id);
        coeff1 *= a;
        coeff2 *= b;
    }
    coeff1 * k1.get(pattern) + coeff2 * k2.get(pattern)
}

/// Exact rotation check: rotates two pairs through an exact point `(c, s)`
/// on the unit circle and reports the mixed cumulants of the rotated pairs.
///
/// Mixed rotated cumulants vanish up to `order` exactly when the inputs are
/// central-limit with equal second-order cumulants.
pub fn kac_loeve(
    k1: &PairCumulants,
    k2: &PairCumulants,
    c: &Q,
    s: &Q,
    order: usize,
) -> Result<KacLoeveReport> {
    if c.clone() * c.clone() + s.clone() * s.clone() != Q::one() {
        return Err(Error::InvalidArgument("(c, s) must satisfy c²+s²=1".into()));
    }
    if c <= &Q::zero() || c >= &Q::one() || s <= &Q::zero() || s >= &Q::one() {
        return Err(Error::InvalidArgument(
            "(c, s) must lie strictly inside (0,1)".into(),
        ));
    }
    for (name, k) in [("first", k1), ("second", k2)] {
        for pattern in [vec![Side::Left], vec![Side::Right]] {
            if !k.get(&pattern).is_zero() {
                return Err(Error::InvalidArgument(format!(
                    "{name} pair must have mean zero"
                )));
            }
        }
    }

    let mut mixed_nonzero = Vec::new();
    for pattern in side_patterns_up_to(order) {
        let n = pattern.len();
        if n < 2 {
            continue;
        }
        for mask in 1..((1u64 << n) - 1) {
            let ids: Vec<u8> = (0..n)
                .map(|i| if mask & (1 << i) != 0 { 4 } else { 3 })
                .collect();
            let v = rotated_cumulant(k1, k2, c, s, &pattern, &ids);
            if !v.is_zero() {
                mixed_nonzero.push((pattern.clone(), ids, v));
            }
        }
    }

    let covariances_equal = side_patterns_up_to(2)
        .iter()
        .filter(|p| p.len() == 2)
        .all(|p| k1.get(p) == k2.get(p));
    let central_limit_equal =
        k1.is_central_limit(order) && k2.is_central_limit(order) && covariances_equal;

    // Locate a witness by the rotation argument rather than by scanning.
    let mut witness = None;
    if !central_limit_equal {
        'outer: for pattern in side_patterns_up_to(order) {
            let n = pattern.len();
            if n == 2 && k1.get(&pattern) != k2.get(&pattern) {
                // Word (3,4): value c·s·(κ⁽²⁾ − κ⁽¹⁾) ≠ 0.
                let ids = vec![3u8, 4u8];
                let v = rotated_cumulant(k1, k2, c, s, &pattern, &ids);
                witness = Some((pattern.clone(), ids, v));
                break 'outer;
            }
            if n >= 3 && (!k1.get(&pattern).is_zero() || !k2.get(&pattern).is_zero()) {
                // The two candidate words of the 2×2 system; its determinant
                // is a nonzero power product of c and s, so at least one
                // value is nonzero.
                let mut w1 = vec![3u8; n];
                w1[n - 1] = 4;
                let mut w2 = vec![3u8; n];
                w2[n - 2] = 4;
                w2[n - 1] = 4;
                for ids in [w1, w2] {
                    let v = rotated_cumulant(k1, k2, c, s, &pattern, &ids);
                    if !v.is_zero() {
                        witness = Some((pattern.clone(), ids, v));
                        break 'outer;
                    }
                }
            }
        }
    }

    Ok(KacLoeveReport {
        mixed_nonzero,
        central_limit_equal,
        witness,
    })
}

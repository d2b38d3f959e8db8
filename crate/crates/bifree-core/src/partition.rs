//! Set partitions carried with a side map, the two-sided non-crossing
//! condition, enumeration, lattice operations, and the distinguished
//! sub-families (vertically split, paired/Boolean, monotone).

use crate::chi::{ChiMap, Side};
use crate::rat::catalan;
use crate::{Error, Result};
use num::bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Default bound on the length of side maps accepted by enumeration.
pub const DEFAULT_ENUM_BOUND: usize = 12;

/// Tags for the distinguished sub-families of the partition lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FamilyTag {
    /// The full two-sided non-crossing family.
    Bnc,
    /// Vertically split: every block lies on a single side.
    BncVs,
    /// Paired blocks on an alternating side map (Boolean family).
    BncB,
    /// Vertically split with the extra left-connection restriction
    /// (monotone family).
    BncM,
}

impl FamilyTag {
    /// Stable textual name used in JSON and reports.
    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::Bnc => "BNC",
            FamilyTag::BncVs => "BNC_vs",
            FamilyTag::BncB => "BNC_b",
            FamilyTag::BncM => "BNC_m",
        }
    }
}

/// A set partition of `{1..n}` together with its side map.
///
/// Canonical form: each block sorted ascending, blocks sorted by minimum.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BiPartition {
    chi: ChiMap,
    blocks: Vec<Vec<usize>>,
}

fn canonicalize(mut blocks: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for b in blocks.iter_mut() {
        b.sort_unstable();
    }
    blocks.sort_by_key(|b| b[0]);
    blocks
}

impl BiPartition {
    /// Builds a partition, validating that the blocks are nonempty, disjoint,
    /// and cover `{1..n}`.
    pub fn new(chi: ChiMap, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n = chi.len();
        let mut seen = vec![false; n + 1];
        let mut count = 0usize;
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidArgument("empty block".into()));
            }
            for &k in b {
                if k == 0 || k > n || seen[k] {
                    return Err(Error::InvalidArgument(format!(
                        "blocks must partition 1..={n}, offending element {k}"
                    )));
                }
                seen[k] = true;
                count += 1;
            }
        }
        if count != n {
            return Err(Error::InvalidArgument(format!(
                "blocks cover {count} of {n} elements"
            )));
        }
        Ok(BiPartition {
            chi,
            blocks: canonicalize(blocks),
        })
    }

    /// The minimal partition (all singletons).
    pub fn zero(chi: ChiMap) -> Self {
        let blocks = (1..=chi.len()).map(|k| vec![k]).collect();
        BiPartition { chi, blocks }
    }

    /// The maximal partition (one block).
    pub fn one(chi: ChiMap) -> Self {
        let blocks = vec![(1..=chi.len()).collect()];
        BiPartition { chi, blocks }
    }

    /// Side map carried with the partition.
    pub fn chi(&self) -> &ChiMap {
        &self.chi
    }

    /// Blocks in canonical form.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Ground-set size.
    pub fn n(&self) -> usize {
        self.chi.len()
    }

    /// Index (into `blocks`) of the block containing `k`.
    pub fn block_of(&self, k: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.binary_search(&k).is_ok())
            .expect("element within ground set")
    }

    /// The plain partition `s_chi⁻¹ · π` on `{1..n}` (canonical block form).
    pub fn to_standard_order(&self) -> Vec<Vec<usize>> {
        let inv = self.chi.s_chi().inverse();
        canonicalize(
            self.blocks
                .iter()
                .map(|b| b.iter().map(|&k| inv.apply(k)).collect())
                .collect(),
        )
    }

    /// Two-sided non-crossing test: true exactly when `s_chi⁻¹ · π` is
    /// non-crossing in the standard order.
    pub fn is_bnc(&self) -> bool {
        is_noncrossing(&self.to_standard_order())
    }

    /// Direct form of the non-crossing test from the defining condition: no
    /// `u1 ≺ v1 ≺ u2 ≺ v2` (in the induced order) with the `u`s and `v`s in
    /// distinct blocks. Kept as an independent implementation for testing.
    pub fn is_bnc_direct(&self) -> bool {
        let n = self.n();
        let mut by_rank = vec![0usize; n];
        for k in 1..=n {
            by_rank[self.chi.prec_rank(k) - 1] = self.block_of(k);
        }
        !has_crossing_in_sequence(&by_rank)
    }

    /// True when every block of `self` is contained in a block of `sigma`.
    pub fn refines(&self, sigma: &BiPartition) -> Result<bool> {
        if self.chi != sigma.chi {
            return Err(Error::InvalidArgument(
                "refinement requires identical side maps".into(),
            ));
        }
        Ok(self.blocks.iter().all(|b| {
            let target = sigma.block_of(b[0]);
            b.iter().all(|&k| sigma.block_of(k) == target)
        }))
    }

    /// Restriction of the partition to the sorted subset `subset`, relabelled
    /// to `{1..|subset|}`.
    pub fn restrict(&self, subset: &[usize]) -> Result<BiPartition> {
        let chi = self.chi.restrict(subset)?;
        let pos = |k: usize| subset.iter().position(|&x| x == k).map(|i| i + 1);
        let mut blocks = Vec::new();
        for b in &self.blocks {
            let nb: Vec<usize> = b.iter().filter_map(|&k| pos(k)).collect();
            if !nb.is_empty() {
                blocks.push(nb);
            }
        }
        BiPartition::new(chi, blocks)
    }

    /// Tags of the distinguished sub-families satisfied by this partition.
    ///
    /// The paired/Boolean tag is only meaningful for alternating side maps
    /// and is never produced otherwise.
    pub fn classify(&self) -> BTreeSet<FamilyTag> {
        let mut tags = BTreeSet::new();
        let vs = self.blocks.iter().all(|b| {
            b.iter().all(|&k| self.chi.side(k) == Side::Left)
                || b.iter().all(|&k| self.chi.side(k) == Side::Right)
        });
        if vs {
            tags.insert(FamilyTag::BncVs);
            if self.is_monotone_restricted() {
                tags.insert(FamilyTag::BncM);
            }
        }
        if self.chi.is_alternating() {
            let pairs = self.n() / 2;
            let paired =
                (1..=pairs).all(|k| self.block_of(2 * k - 1) == self.block_of(2 * k));
            if paired {
                tags.insert(FamilyTag::BncB);
            }
        }
        tags
    }

    /// No block joins left indices `m < q` around an intermediate right index
    /// `p` with `m < p < q`.
    fn is_monotone_restricted(&self) -> bool {
        let n = self.n();
        for p in 1..=n {
            if self.chi.side(p) != Side::Right {
                continue;
            }
            for m in 1..p {
                if self.chi.side(m) != Side::Left {
                    continue;
                }
                for qq in (p + 1)..=n {
                    if self.chi.side(qq) == Side::Left
                        && self.block_of(m) == self.block_of(qq)
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Serializable JSON form.
    pub fn to_json(&self) -> PartitionJson {
        PartitionJson {
            chi: self.chi.to_string_form(),
            blocks: self.blocks.clone(),
        }
    }

    /// Parses the JSON form back into a validated partition.
    pub fn from_json(j: &PartitionJson) -> Result<Self> {
        BiPartition::new(ChiMap::parse(&j.chi)?, j.blocks.clone())
    }
}

/// JSON form of a partition: `{"chi": "LLRLR", "blocks": [[1,3],[2,4,5]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionJson {
    /// Side map as a string over `L`/`R`.
    pub chi: String,
    /// Blocks with 1-based elements.
    pub blocks: Vec<Vec<usize>>,
}

/// JSON form of an enumerated family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyJson {
    /// Family tag name.
    pub tag: String,
    /// Side map as a string.
    pub chi: String,
    /// Number of members.
    pub count: usize,
    /// The members themselves.
    pub members: Vec<PartitionJson>,
}

/// An enumerated sub-family of the partition lattice for a fixed side map.
#[derive(Debug, Clone)]
pub struct PartitionFamily {
    /// Which family this is.
    pub tag: FamilyTag,
    /// The side map.
    pub chi: ChiMap,
    /// Members in canonical (sorted) order.
    pub members: Vec<BiPartition>,
}

impl PartitionFamily {
    /// Serializable JSON form.
    pub fn to_json(&self) -> FamilyJson {
        FamilyJson {
            tag: self.tag.name().into(),
            chi: self.chi.to_string_form(),
            count: self.members.len(),
            members: self.members.iter().map(|p| p.to_json()).collect(),
        }
    }
}

fn has_crossing_in_sequence(block_ids: &[usize]) -> bool {
    let n = block_ids.len();
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                for d in (c + 1)..n {
                    if block_ids[a] == block_ids[c]
                        && block_ids[b] == block_ids[d]
                        && block_ids[a] != block_ids[b]
                    {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Non-crossing test for a plain partition of `{1..n}` in canonical form.
pub fn is_noncrossing(blocks: &[Vec<usize>]) -> bool {
    // Stack scan: walk 1..n, pushing a block when first met and requiring the
    // most recent open block to close first.
    let n: usize = blocks.iter().map(|b| b.len()).sum();
    let mut owner = vec![usize::MAX; n + 1];
    for (i, b) in blocks.iter().enumerate() {
        for &k in b {
            owner[k] = i;
        }
    }
    let mut remaining: Vec<usize> = blocks.iter().map(|b| b.len()).collect();
    let mut stack: Vec<usize> = Vec::new();
    for k in 1..=n {
        let o = owner[k];
        match stack.iter().position(|&x| x == o) {
            Some(pos) => {
                if pos != stack.len() - 1 {
                    return false;
                }
            }
            None => stack.push(o),
        }
        remaining[o] -= 1;
        if remaining[o] == 0 {
            stack.pop();
        }
    }
    true
}

/// Enumerates the non-crossing partitions of `{1..n}` in the standard order.
///
/// Recursive first-block decomposition: the block of 1 is chosen, and the
/// gaps between its consecutive elements are partitioned independently.
pub fn enumerate_nc(n: usize) -> Vec<Vec<Vec<usize>>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    // Choose the block of 1 as {a_1 = 1 < a_2 < ... < a_k}.
    for mask in subsets_containing_first(n) {
        let first: Vec<usize> = mask.clone();
        // Segments strictly between consecutive chosen elements, plus the tail
        // after the last one; the tail may connect to nothing outside, so each
        // segment is partitioned independently.
        let mut segments: Vec<(usize, usize)> = Vec::new();
        for w in first.windows(2) {
            segments.push((w[0] + 1, w[1] - 1));
        }
        segments.push((first[first.len() - 1] + 1, n));
        let mut partials: Vec<Vec<Vec<usize>>> = vec![vec![first.clone()]];
        for &(lo, hi) in &segments {
            if lo > hi {
                continue;
            }
            let inner = enumerate_nc(hi - lo + 1);
            let mut next = Vec::new();
            for base in &partials {
                for sub in &inner {
                    let mut combined = base.clone();
                    for b in sub {
                        combined.push(b.iter().map(|&x| x + lo - 1).collect());
                    }
                    next.push(combined);
                }
            }
            partials = next;
        }
        out.extend(partials.into_iter().map(canonicalize));
    }
    out
}

fn subsets_containing_first(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let rest = n - 1;
    for mask in 0..(1u64 << rest) {
        let mut s = vec![1usize];
        for j in 0..rest {
            if mask & (1 << j) != 0 {
                s.push(j + 2);
            }
        }
        out.push(s);
    }
    out
}

/// Enumerates the full two-sided non-crossing family for `chi` by mapping the
/// standard non-crossing partitions through `s_chi`.
pub fn enumerate_bnc(chi: &ChiMap) -> Result<PartitionFamily> {
    enumerate_bnc_bounded(chi, DEFAULT_ENUM_BOUND)
}

/// Enumeration with an explicit length bound.
pub fn enumerate_bnc_bounded(chi: &ChiMap, bound: usize) -> Result<PartitionFamily> {
    let n = chi.len();
    if n > bound {
        return Err(Error::SizeLimit {
            what: "chi length".into(),
            got: n,
            bound,
        });
    }
    let s = chi.s_chi();
    let mut members: Vec<BiPartition> = enumerate_nc(n)
        .into_iter()
        .map(|blocks| {
            let mapped = blocks
                .into_iter()
                .map(|b| b.into_iter().map(|k| s.apply(k)).collect())
                .collect();
            BiPartition {
                chi: chi.clone(),
                blocks: canonicalize(mapped),
            }
        })
        .collect();
    members.sort();
    debug_assert_eq!(BigInt::from(members.len()), catalan(n));
    Ok(PartitionFamily {
        tag: FamilyTag::Bnc,
        chi: chi.clone(),
        members,
    })
}

/// Enumerates a distinguished sub-family by filtering the full enumeration.
pub fn enumerate_family(chi: &ChiMap, tag: FamilyTag) -> Result<PartitionFamily> {
    if tag == FamilyTag::BncB && !chi.is_alternating() {
        return Err(Error::InvalidArgument(
            "paired/Boolean family requires an alternating side map".into(),
        ));
    }
    let full = enumerate_bnc(chi)?;
    let members = match tag {
        FamilyTag::Bnc => full.members,
        _ => full
            .members
            .into_iter()
            .filter(|p| p.classify().contains(&tag))
            .collect(),
    };
    Ok(PartitionFamily {
        tag,
        chi: chi.clone(),
        members,
    })
}

/// Blockwise-intersection meet; always two-sided non-crossing.
pub fn lattice_meet(pi: &BiPartition, sigma: &BiPartition) -> Result<BiPartition> {
    require_bnc_pair(pi, sigma)?;
    let n = pi.n();
    let mut key_to_block: std::collections::BTreeMap<(usize, usize), Vec<usize>> =
        std::collections::BTreeMap::new();
    for k in 1..=n {
        key_to_block
            .entry((pi.block_of(k), sigma.block_of(k)))
            .or_default()
            .push(k);
    }
    BiPartition::new(pi.chi.clone(), key_to_block.into_values().collect())
}

/// Least two-sided non-crossing upper bound: the set-partition join, followed
/// by merging crossing blocks until the non-crossing condition holds.
pub fn lattice_join(pi: &BiPartition, sigma: &BiPartition) -> Result<BiPartition> {
    require_bnc_pair(pi, sigma)?;
    let n = pi.n();
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
        let ra = find(parent, a);
        let rb = find(parent, b);
        if ra != rb {
            parent[ra] = rb;
        }
    };
    for p in [pi, sigma] {
        for b in &p.blocks {
            for w in b.windows(2) {
                union(&mut parent, w[0], w[1]);
            }
        }
    }
    // Merge any pair of blocks that cross in the induced order until none do.
    loop {
        let mut rank_seq: Vec<usize> = (1..=n).collect();
        rank_seq.sort_by_key(|&k| pi.chi.prec_rank(k));
        let roots: Vec<usize> = rank_seq.iter().map(|&k| find(&mut parent, k)).collect();
        let mut merged = false;
        'scan: for a in 0..n {
            for b in (a + 1)..n {
                for c in (b + 1)..n {
                    for d in (c + 1)..n {
                        if roots[a] == roots[c]
                            && roots[b] == roots[d]
                            && roots[a] != roots[b]
                        {
                            union(&mut parent, rank_seq[a], rank_seq[b]);
                            merged = true;
                            break 'scan;
                        }
                    }
                }
            }
        }
        if !merged {
            break;
        }
    }
    let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> =
        std::collections::BTreeMap::new();
    for k in 1..=n {
        let r = find(&mut parent, k);
        by_root.entry(r).or_default().push(k);
    }
    BiPartition::new(pi.chi.clone(), by_root.into_values().collect())
}

fn require_bnc_pair(pi: &BiPartition, sigma: &BiPartition) -> Result<()> {
    if pi.chi != sigma.chi {
        return Err(Error::InvalidArgument(
            "lattice operations require identical side maps".into(),
        ));
    }
    if !pi.is_bnc() || !sigma.is_bnc() {
        return Err(Error::InvalidArgument(
            "lattice operations require two-sided non-crossing inputs".into(),
        ));
    }
    Ok(())
}

/// Image of an interval partition of `{1..n}` inside the paired family on the
/// alternating side map of length `2n`: the block `{t..u}` maps to
/// `{2t−1, …, 2u}`.
pub fn interval_bijection(interval_blocks: &[Vec<usize>]) -> Result<BiPartition> {
    let blocks = canonicalize(interval_blocks.to_vec());
    let n: usize = blocks.iter().map(|b| b.len()).sum();
    // Validate: each block is a contiguous run and the blocks tile 1..n.
    let mut expect = 1usize;
    for b in &blocks {
        for (i, &k) in b.iter().enumerate() {
            if k != expect + i {
                return Err(Error::InvalidArgument(format!(
                    "not an interval partition: block {b:?}"
                )));
            }
        }
        expect += b.len();
    }
    let chi = ChiMap::alternating(n)?;
    let image = blocks
        .iter()
        .map(|b| {
            let t = b[0];
            let u = b[b.len() - 1];
            (2 * t - 1..=2 * u).collect()
        })
        .collect();
    BiPartition::new(chi, image)
}

/// Enumerates the interval partitions of `{1..n}`.
pub fn enumerate_interval_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    // One partition per composition of n.
    let mut out = Vec::new();
    for mask in 0..(1u64 << (n.saturating_sub(1))) {
        let mut blocks = Vec::new();
        let mut cur = vec![1usize];
        for k in 2..=n {
            if mask & (1 << (k - 2)) != 0 {
                blocks.push(std::mem::take(&mut cur));
            }
            cur.push(k);
        }
        blocks.push(cur);
        out.push(blocks);
    }
    out
}

//! Matrix-valued expectations over a concrete base algebra `B = M_d`:
//! bimodule spaces with two-sided `B`-actions, sided operators, the recursive
//! block expectation and its cumulants, and the `M_n` amplification with its
//! tensor factorization check.

use crate::chi::{ChiMap, Side};
use crate::matrix::RatMatrix;
use crate::mobius::mobius_closed;
use crate::models::MatrixAlgebra;
use crate::partition::{enumerate_bnc, BiPartition};
use crate::rat::{format_q, parse_q, q, Q};
use crate::{Error, Result};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// A finite-dimensional bimodule `X = B ⊕ X̊` over `B = M_d` with a
/// distinguished unit vector, commuting left and right `B`-actions, and a
/// projection onto the `B` summand.
#[derive(Debug, Clone)]
pub struct ConcreteBBSpace {
    base: MatrixAlgebra,
    dim: usize,
    unit: Vec<Q>,
    lb: Vec<RatMatrix>,
    rb: Vec<RatMatrix>,
    proj: RatMatrix,
}

impl ConcreteBBSpace {
    /// Builds and validates a space: `lb`/`rb` give the actions of the base
    /// basis elements, `proj` maps vectors to base coordinates.
    pub fn new(
        base: MatrixAlgebra,
        unit: Vec<Q>,
        lb: Vec<RatMatrix>,
        rb: Vec<RatMatrix>,
        proj: RatMatrix,
    ) -> Result<Self> {
        let dim = unit.len();
        let bd = base.dim();
        if lb.len() != bd || rb.len() != bd {
            return Err(Error::InvalidArgument(
                "need one action matrix per base basis element".into(),
            ));
        }
        for m in lb.iter().chain(&rb) {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidArgument("action matrix shape mismatch".into()));
            }
        }
        if proj.nrows() != bd || proj.ncols() != dim {
            return Err(Error::InvalidArgument("projection shape mismatch".into()));
        }
        if lb[0] != RatMatrix::identity(dim) || rb[0] != RatMatrix::identity(dim) {
            return Err(Error::InvalidArgument(
                "the unit of the base must act as the identity".into(),
            ));
        }
        let mut e0 = vec![Q::zero(); bd];
        e0[0] = crate::rat::qi(1);
        if proj.apply(&unit)? != e0 {
            return Err(Error::InvalidArgument(
                "the unit vector must project to the base unit".into(),
            ));
        }
        let space = ConcreteBBSpace {
            base,
            dim,
            unit,
            lb,
            rb,
            proj,
        };
        space.validate_actions()?;
        Ok(space)
    }

    fn validate_actions(&self) -> Result<()> {
        let bd = self.base.dim();
        for i in 0..bd {
            for j in 0..bd {
                if self.lb[i].mul(&self.rb[j])? != self.rb[j].mul(&self.lb[i])? {
                    return Err(Error::InvalidArgument(
                        "left and right actions must commute".into(),
                    ));
                }
                let prod = self.base.basis()[i].mul(&self.base.basis()[j])?;
                if self.lb_of(&prod)? != self.lb[i].mul(&self.lb[j])? {
                    return Err(Error::InvalidArgument(
                        "left action is not multiplicative".into(),
                    ));
                }
                if self.rb_of(&prod)? != self.rb[j].mul(&self.rb[i])? {
                    return Err(Error::InvalidArgument(
                        "right action is not anti-multiplicative".into(),
                    ));
                }
            }
        }
        // Compatibility with the projection on every basis vector:
        // p(L_b ξ) = b·p(ξ) and p(R_b ξ) = p(ξ)·b.
        for c in 0..self.dim {
            let mut e = vec![Q::zero(); self.dim];
            e[c] = crate::rat::qi(1);
            let pe = self.base.from_coords(&self.proj.apply(&e)?)?;
            for i in 0..bd {
                let lpe = self.base.from_coords(&self.proj.apply(&self.lb[i].apply(&e)?)?)?;
                if lpe != self.base.basis()[i].mul(&pe)? {
                    return Err(Error::InvalidArgument(
                        "projection is not left-equivariant".into(),
                    ));
                }
                let rpe = self.base.from_coords(&self.proj.apply(&self.rb[i].apply(&e)?)?)?;
                if rpe != pe.mul(&self.base.basis()[i])? {
                    return Err(Error::InvalidArgument(
                        "projection is not right-equivariant".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Base algebra.
    pub fn base(&self) -> &MatrixAlgebra {
        &self.base
    }

    /// Total dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Distinguished unit vector.
    pub fn unit(&self) -> &[Q] {
        &self.unit
    }

    /// Matrix of the left action of a base element.
    pub fn lb_of(&self, b: &RatMatrix) -> Result<RatMatrix> {
        let c = self.base.coords(b)?;
        let mut out = RatMatrix::zeros(self.dim, self.dim);
        for (i, v) in c.iter().enumerate() {
            if !v.is_zero() {
                out = out.add(&self.lb[i].scale(v))?;
            }
        }
        Ok(out)
    }

    /// Matrix of the right action of a base element.
    pub fn rb_of(&self, b: &RatMatrix) -> Result<RatMatrix> {
        let c = self.base.coords(b)?;
        let mut out = RatMatrix::zeros(self.dim, self.dim);
        for (i, v) in c.iter().enumerate() {
            if !v.is_zero() {
                out = out.add(&self.rb[i].scale(v))?;
            }
        }
        Ok(out)
    }

    /// Projection of a vector, returned as a base element.
    pub fn project(&self, v: &[Q]) -> Result<RatMatrix> {
        self.base.from_coords(&self.proj.apply(v)?)
    }

    /// Expectation of one operator matrix: project its value on the unit.
    pub fn expectation(&self, z: &RatMatrix) -> Result<RatMatrix> {
        if z.ncols() != self.dim {
            return Err(Error::InvalidArgument("operator shape mismatch".into()));
        }
        self.project(&z.apply(&self.unit)?)
    }
}

/// An operator on a bimodule space together with its declared side;
/// construction verifies the commutation with the opposite action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidedOperator {
    side: Side,
    mat: RatMatrix,
}

impl SidedOperator {
    /// Validates the matrix against the space and wraps it.
    pub fn new(space: &ConcreteBBSpace, side: Side, mat: RatMatrix) -> Result<Self> {
        if mat.nrows() != space.dim() || mat.ncols() != space.dim() {
            return Err(Error::InvalidArgument("operator shape mismatch".into()));
        }
        let opposite = match side {
            Side::Left => &space.rb,
            Side::Right => &space.lb,
        };
        for a in opposite {
            if mat.mul(a)? != a.mul(&mat)? {
                return Err(Error::InvalidArgument(
                    "operator does not commute with the opposite action".into(),
                ));
            }
        }
        Ok(SidedOperator { side, mat })
    }

    /// Declared side.
    pub fn side(&self) -> Side {
        self.side
    }

    /// Underlying matrix.
    pub fn mat(&self) -> &RatMatrix {
        &self.mat
    }
}

/// Side map read off a tuple of sided operators.
pub fn chi_of_operators(ops: &[SidedOperator]) -> Result<ChiMap> {
    ChiMap::new(ops.iter().map(|z| z.side()).collect())
}

/// Expectation of the product of the operators, in order.
pub fn expectation_product(space: &ConcreteBBSpace, ops: &[SidedOperator]) -> Result<RatMatrix> {
    let chains: Vec<Vec<RatMatrix>> = ops.iter().map(|z| vec![z.mat().clone()]).collect();
    expectation_of_chains(space, &chains)
}

fn expectation_of_chains(space: &ConcreteBBSpace, chains: &[Vec<RatMatrix>]) -> Result<RatMatrix> {
    let mut v = space.unit().to_vec();
    for chain in chains.iter().rev() {
        for m in chain.iter().rev() {
            v = m.apply(&v)?;
        }
    }
    space.project(&v)
}

struct PiItems {
    // Each entry is a product chain (leftmost factor first) with its side.
    chains: Vec<Vec<RatMatrix>>,
    sides: Vec<Side>,
}

/// The recursive block expectation of a partition: peels the block whose
/// spine terminates closest to the bottom of the diagram and reinserts its
/// expectation as a left or right action.
pub fn e_pi(space: &ConcreteBBSpace, ops: &[SidedOperator], pi: &BiPartition) -> Result<RatMatrix> {
    let chi = chi_of_operators(ops)?;
    if pi.chi() != &chi {
        return Err(Error::InvalidArgument(
            "partition side map does not match the operators".into(),
        ));
    }
    if !pi.is_bnc() {
        return Err(Error::InvalidArgument("partition is not bi-non-crossing".into()));
    }
    let items = PiItems {
        chains: ops.iter().map(|z| vec![z.mat().clone()]).collect(),
        sides: ops.iter().map(|z| z.side()).collect(),
    };
    e_pi_rec(space, items, pi.blocks().to_vec())
}

fn e_pi_rec(
    space: &ConcreteBBSpace,
    mut items: PiItems,
    mut blocks: Vec<Vec<usize>>,
) -> Result<RatMatrix> {
    if blocks.len() == 1 {
        return expectation_of_chains(space, &items.chains);
    }
    let vi = blocks
        .iter()
        .enumerate()
        .max_by_key(|(_, b)| b[0])
        .map(|(i, _)| i)
        .expect("nonempty partition");
    let v = blocks[vi].clone();
    let mv = v[0];
    let inner_chains: Vec<Vec<RatMatrix>> =
        v.iter().map(|&k| items.chains[k - 1].clone()).collect();
    let inner = expectation_of_chains(space, &inner_chains)?;
    let mult = match items.sides[mv - 1] {
        Side::Left => space.lb_of(&inner)?,
        Side::Right => space.rb_of(&inner)?,
    };
    let covering: Vec<usize> = blocks
        .iter()
        .enumerate()
        .filter(|&(i, b)| i != vi && b[0] < mv && *b.last().unwrap() > mv)
        .map(|(i, _)| i)
        .collect();
    if covering.is_empty() {
        // The peeled block is a suffix; fold its value into the last
        // remaining operator from the right.
        let k = mv - 1;
        if k == 0 {
            return Err(Error::InvalidArgument(
                "malformed recursion state: suffix block covers everything".into(),
            ));
        }
        items.chains[k - 1].push(mult);
        items.chains.truncate(k);
        items.sides.truncate(k);
        blocks.remove(vi);
        e_pi_rec(space, items, blocks)
    } else {
        // The peeled block sits against a spine: insert its value from the
        // left at the first element of that spine's block past the minimum.
        let chi = ChiMap::new(items.sides.clone())?;
        let rank = chi.prec_rank(mv);
        let mut w_idx = None;
        if rank > 1 {
            let pred = chi.s_chi().apply(rank - 1);
            for &ci in &covering {
                if blocks[ci].contains(&pred) {
                    w_idx = Some(ci);
                }
            }
        }
        let w_idx = match w_idx {
            Some(i) => i,
            None => *covering
                .iter()
                .max_by_key(|&&i| blocks[i][0])
                .expect("covering nonempty"),
        };
        let k = *blocks[w_idx]
            .iter()
            .find(|&&e| e > mv)
            .expect("covering block has an element past the minimum");
        items.chains[k - 1].insert(0, mult);
        // Drop the peeled positions and relabel.
        let mut keep: Vec<usize> = (1..=items.sides.len()).collect();
        keep.retain(|e| !v.contains(e));
        let relabel = |e: usize| keep.iter().position(|&x| x == e).unwrap() + 1;
        let new_chains = keep.iter().map(|&e| items.chains[e - 1].clone()).collect();
        let new_sides = keep.iter().map(|&e| items.sides[e - 1]).collect();
        blocks.remove(vi);
        let new_blocks = blocks
            .iter()
            .map(|b| b.iter().map(|&e| relabel(e)).collect())
            .collect();
        e_pi_rec(
            space,
            PiItems {
                chains: new_chains,
                sides: new_sides,
            },
            new_blocks,
        )
    }
}

/// Independent route to the block expectation: repeatedly reduces a block
/// whose elements are consecutive in the diagram order, folding its value
/// into the preceding operator (or onto the left of the result when the block
/// sits at the top of the diagram).
pub fn e_pi_interval_oracle(
    space: &ConcreteBBSpace,
    ops: &[SidedOperator],
    pi: &BiPartition,
) -> Result<RatMatrix> {
    let chi = chi_of_operators(ops)?;
    if pi.chi() != &chi {
        return Err(Error::InvalidArgument(
            "partition side map does not match the operators".into(),
        ));
    }
    fn rec(
        space: &ConcreteBBSpace,
        chains: Vec<Vec<RatMatrix>>,
        sides: Vec<Side>,
        blocks: Vec<Vec<usize>>,
        prefix: RatMatrix,
    ) -> Result<RatMatrix> {
        if blocks.len() == 1 {
            let e = expectation_of_chains(space, &chains)?;
            return prefix.mul(&e);
        }
        let chi = ChiMap::new(sides.clone())?;
        let n = sides.len();
        let order: Vec<usize> = (1..=n).map(|r| chi.s_chi().apply(r)).collect();
        let pos_in_order = |e: usize| order.iter().position(|&x| x == e).unwrap();
        let bi = blocks
            .iter()
            .position(|b| {
                let mut ranks: Vec<usize> = b.iter().map(|&e| pos_in_order(e)).collect();
                ranks.sort_unstable();
                ranks.windows(2).all(|w| w[1] == w[0] + 1)
            })
            .ok_or_else(|| Error::InvalidArgument("no interval block found".into()))?;
        let block = blocks[bi].clone();
        let inner_chains: Vec<Vec<RatMatrix>> =
            block.iter().map(|&e| chains[e - 1].clone()).collect();
        let b = expectation_of_chains(space, &inner_chains)?;
        let first_rank = block.iter().map(|&e| pos_in_order(e)).min().unwrap();
        let mut chains = chains;
        let mut prefix = prefix;
        if first_rank == 0 {
            prefix = prefix.mul(&b)?;
        } else {
            let p = order[first_rank - 1];
            match sides[p - 1] {
                Side::Left => chains[p - 1].push(space.lb_of(&b)?),
                Side::Right => chains[p - 1].insert(0, space.rb_of(&b)?),
            }
        }
        let keep: Vec<usize> = (1..=n).filter(|e| !block.contains(e)).collect();
        let relabel = |e: usize| keep.iter().position(|&x| x == e).unwrap() + 1;
        let new_chains = keep.iter().map(|&e| chains[e - 1].clone()).collect();
        let new_sides = keep.iter().map(|&e| sides[e - 1]).collect();
        let new_blocks = blocks
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != bi)
            .map(|(_, bl)| bl.iter().map(|&e| relabel(e)).collect())
            .collect();
        rec(space, new_chains, new_sides, new_blocks, prefix)
    }
    let chains = ops.iter().map(|z| vec![z.mat().clone()]).collect();
    let sides = ops.iter().map(|z| z.side()).collect();
    rec(
        space,
        chains,
        sides,
        pi.blocks().to_vec(),
        RatMatrix::identity(space.base().d()),
    )
}

/// Matrix-valued partition cumulant `κ_π = Σ_{σ ≤ π} E_σ μ(σ, π)`.
pub fn kappa_pi_opval(
    space: &ConcreteBBSpace,
    ops: &[SidedOperator],
    pi: &BiPartition,
) -> Result<RatMatrix> {
    let chi = chi_of_operators(ops)?;
    if pi.chi() != &chi {
        return Err(Error::InvalidArgument(
            "partition side map does not match the operators".into(),
        ));
    }
    let family = enumerate_bnc(&chi)?;
    let d = space.base().d();
    let mut out = RatMatrix::zeros(d, d);
    for sigma in &family.members {
        if sigma.refines(pi)? {
            let mu = mobius_closed(sigma, pi)?;
            if !mu.is_zero() {
                out = out.add(&e_pi(space, ops, sigma)?.scale(&mu))?;
            }
        }
    }
    Ok(out)
}

/// Total matrix-valued cumulant `κ_{1_χ}`.
pub fn kappa_word_opval(space: &ConcreteBBSpace, ops: &[SidedOperator]) -> Result<RatMatrix> {
    let chi = chi_of_operators(ops)?;
    kappa_pi_opval(space, ops, &BiPartition::one(chi))
}

/// Nonzero mixed total cumulants of families of sided operators; an empty
/// report means the families are bi-free over the base up to `order`.
/// Entries are index words into the flattened operator list.
pub fn check_bifree_opval(
    space: &ConcreteBBSpace,
    ops: &[(u32, SidedOperator)],
    order: usize,
) -> Result<Vec<(Vec<usize>, RatMatrix)>> {
    let mut bad = Vec::new();
    let mut words: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..order {
        let mut next = Vec::new();
        for w in &words {
            for i in 0..ops.len() {
                let mut nw = w.clone();
                nw.push(i);
                next.push(nw);
            }
        }
        for w in &next {
            if w.len() < 2 || w.iter().all(|&i| ops[i].0 == ops[w[0]].0) {
                continue;
            }
            let tuple: Vec<SidedOperator> = w.iter().map(|&i| ops[i].1.clone()).collect();
            let v = kappa_word_opval(space, &tuple)?;
            if !v.is_zero() {
                bad.push((w.clone(), v));
            }
        }
        words = next;
    }
    Ok(bad)
}

/// The space `X = B ⊕ B` with `p(b₁ ⊕ b₂) = b₁`, both components carrying
/// the two-sided multiplication action of `B = M_d`.
pub fn doubled_base_space(d: usize) -> Result<ConcreteBBSpace> {
    let base = MatrixAlgebra::new(d)?;
    let bd = base.dim();
    let dim = 2 * bd;
    let mut unit = vec![Q::zero(); dim];
    unit[0] = crate::rat::qi(1);
    let mut lb = Vec::new();
    let mut rb = Vec::new();
    for b in base.basis() {
        let l = mult_matrix(&base, b, true)?;
        let r = mult_matrix(&base, b, false)?;
        lb.push(block_diag(&l, &l));
        rb.push(block_diag(&r, &r));
    }
    let mut proj = RatMatrix::zeros(bd, dim);
    for i in 0..bd {
        proj.set(i, i, crate::rat::qi(1));
    }
    ConcreteBBSpace::new(base, unit, lb, rb, proj)
}

/// Matrix of left (or right) multiplication by `z` on the base algebra in
/// basis coordinates.
pub fn mult_matrix(alg: &MatrixAlgebra, z: &RatMatrix, left: bool) -> Result<RatMatrix> {
    let n = alg.dim();
    let mut m = RatMatrix::zeros(n, n);
    for j in 0..n {
        let img = if left {
            z.mul(&alg.basis()[j])?
        } else {
            alg.basis()[j].mul(z)?
        };
        let c = alg.coords(&img)?;
        for (i, v) in c.into_iter().enumerate() {
            m.set(i, j, v);
        }
    }
    Ok(m)
}

fn block_diag(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let (ra, ca) = (a.nrows(), a.ncols());
    let (rb_, cb) = (b.nrows(), b.ncols());
    let mut m = RatMatrix::zeros(ra + rb_, ca + cb);
    for i in 0..ra {
        for j in 0..ca {
            m.set(i, j, a.get(i, j).clone());
        }
    }
    for i in 0..rb_ {
        for j in 0..cb {
            m.set(ra + i, ca + j, b.get(i, j).clone());
        }
    }
    m
}

/// Left operator on the doubled space given by a 2×2 matrix of base elements
/// acting by left multiplication on the column `(b₁, b₂)`.
pub fn doubled_left_op(space: &ConcreteBBSpace, blocks: &[Vec<RatMatrix>]) -> Result<SidedOperator> {
    doubled_block_op(space, blocks, true)
}

/// Right operator on the doubled space given by a 2×2 matrix of base elements
/// acting by right multiplication.
pub fn doubled_right_op(
    space: &ConcreteBBSpace,
    blocks: &[Vec<RatMatrix>],
) -> Result<SidedOperator> {
    doubled_block_op(space, blocks, false)
}

fn doubled_block_op(
    space: &ConcreteBBSpace,
    blocks: &[Vec<RatMatrix>],
    left: bool,
) -> Result<SidedOperator> {
    if blocks.len() != 2 || blocks.iter().any(|r| r.len() != 2) {
        return Err(Error::InvalidArgument("need a 2×2 block matrix".into()));
    }
    let bd = space.base().dim();
    let mut m = RatMatrix::zeros(2 * bd, 2 * bd);
    for i in 0..2 {
        for j in 0..2 {
            let entry = if left { &blocks[i][j] } else { &blocks[j][i] };
            let mm = mult_matrix(space.base(), entry, left)?;
            for r in 0..bd {
                for c in 0..bd {
                    let v = mm.get(r, c);
                    if !v.is_zero() {
                        m.set(i * bd + r, j * bd + c, v.clone());
                    }
                }
            }
        }
    }
    SidedOperator::new(space, if left { Side::Left } else { Side::Right }, m)
}

/// The 4-dimensional space of `M₂` over scalar `B` with the normalized trace
/// as the projection, together with the matrix-unit pair: `T` multiplies by
/// the upper-right unit on the left, `S` by the lower-left unit on the right.
pub fn m2_trace_space() -> Result<(ConcreteBBSpace, SidedOperator, SidedOperator)> {
    let base = MatrixAlgebra::new(1)?;
    // Coordinates are the entries of M₂ in row-major order; the unit vector
    // is the identity matrix.
    let unit = vec![
        crate::rat::qi(1),
        Q::zero(),
        Q::zero(),
        crate::rat::qi(1),
    ];
    let lb = vec![RatMatrix::identity(4)];
    let rb = vec![RatMatrix::identity(4)];
    let proj = RatMatrix::from_rows(vec![vec![q(1, 2), Q::zero(), Q::zero(), q(1, 2)]])?;
    let space = ConcreteBBSpace::new(base, unit, lb, rb, proj)?;
    let mult_op = |m: &RatMatrix, left: bool| -> Result<RatMatrix> {
        let mut out = RatMatrix::zeros(4, 4);
        for p in 0..2 {
            for qq in 0..2 {
                let e = RatMatrix::unit(2, p, qq);
                let img = if left { m.mul(&e)? } else { e.mul(m)? };
                for r in 0..2 {
                    for c in 0..2 {
                        out.set(r * 2 + c, p * 2 + qq, img.get(r, c).clone());
                    }
                }
            }
        }
        Ok(out)
    };
    let t = SidedOperator::new(&space, Side::Left, mult_op(&RatMatrix::unit(2, 0, 1), true)?)?;
    let s = SidedOperator::new(&space, Side::Right, mult_op(&RatMatrix::unit(2, 1, 0), false)?)?;
    Ok((space, t, s))
}

/// Builds a scalar-base space (`B = M₁`) from a dimension, a unit vector,
/// and a state row.
pub fn scalar_space(unit: Vec<Q>, state_row: Vec<Q>) -> Result<ConcreteBBSpace> {
    let dim = unit.len();
    if state_row.len() != dim {
        return Err(Error::InvalidArgument("state row length mismatch".into()));
    }
    let base = MatrixAlgebra::new(1)?;
    let proj = RatMatrix::from_rows(vec![state_row])?;
    ConcreteBBSpace::new(
        base,
        unit,
        vec![RatMatrix::identity(dim)],
        vec![RatMatrix::identity(dim)],
        proj,
    )
}

/// The `M_n` amplification of a space: `M_n(X) = M_n(B) ⊕ M_n(X̊)` over the
/// base `M_n(B) ≅ M_{nd}`, with entrywise projection.
#[derive(Debug, Clone)]
pub struct AmplifiedSpace {
    inner: ConcreteBBSpace,
    n: usize,
    amp: ConcreteBBSpace,
}

/// Builds the amplification.
pub fn amplify(space: &ConcreteBBSpace, n: usize) -> Result<AmplifiedSpace> {
    if n == 0 {
        return Err(Error::InvalidArgument("amplification size must be positive".into()));
    }
    let d = space.base().d();
    let dim = space.dim();
    let big = MatrixAlgebra::new(n * d)?;
    let total = n * n * dim;
    let slot = |i: usize, j: usize, c: usize| (i * n + j) * dim + c;

    let mut unit = vec![Q::zero(); total];
    for i in 0..n {
        for (c, v) in space.unit().iter().enumerate() {
            unit[slot(i, i, c)] = v.clone();
        }
    }

    let mut lb = Vec::new();
    let mut rb = Vec::new();
    for beta in big.basis() {
        let mut l = RatMatrix::zeros(total, total);
        let mut r = RatMatrix::zeros(total, total);
        for bi in 0..n {
            for bk in 0..n {
                let mut blockmat = RatMatrix::zeros(d, d);
                let mut nonzero = false;
                for p in 0..d {
                    for qq in 0..d {
                        let v = beta.get(bi * d + p, bk * d + qq);
                        if !v.is_zero() {
                            nonzero = true;
                        }
                        blockmat.set(p, qq, v.clone());
                    }
                }
                if !nonzero {
                    continue;
                }
                let lact = space.lb_of(&blockmat)?;
                let ract = space.rb_of(&blockmat)?;
                for j in 0..n {
                    for rr in 0..dim {
                        for cc in 0..dim {
                            let lv = lact.get(rr, cc);
                            if !lv.is_zero() {
                                l.add_at(slot(bi, j, rr), slot(bk, j, cc), lv);
                            }
                            let rv = ract.get(rr, cc);
                            if !rv.is_zero() {
                                // (R_[b] ξ)_{i,j} = Σ_k R_{b_{k,j}} ξ_{i,k}
                                r.add_at(slot(j, bk, rr), slot(j, bi, cc), rv);
                            }
                        }
                    }
                }
            }
        }
        lb.push(l);
        rb.push(r);
    }

    let mut proj = RatMatrix::zeros(big.dim(), total);
    for i in 0..n {
        for j in 0..n {
            for c in 0..dim {
                let mut e = vec![Q::zero(); dim];
                e[c] = crate::rat::qi(1);
                let p = space.project(&e)?;
                if p.is_zero() {
                    continue;
                }
                let mut embedded = RatMatrix::zeros(n * d, n * d);
                for rr in 0..d {
                    for cc in 0..d {
                        embedded.set(i * d + rr, j * d + cc, p.get(rr, cc).clone());
                    }
                }
                for (row, v) in big.coords(&embedded)?.into_iter().enumerate() {
                    if !v.is_zero() {
                        proj.set(row, slot(i, j, c), v);
                    }
                }
            }
        }
    }

    let amp = ConcreteBBSpace::new(big, unit, lb, rb, proj)?;
    Ok(AmplifiedSpace {
        inner: space.clone(),
        n,
        amp,
    })
}

impl AmplifiedSpace {
    /// The amplified space.
    pub fn space(&self) -> &ConcreteBBSpace {
        &self.amp
    }

    /// The original space.
    pub fn inner(&self) -> &ConcreteBBSpace {
        &self.inner
    }

    /// Amplification size.
    pub fn n(&self) -> usize {
        self.n
    }

    fn assemble(&self, entries: &[Vec<RatMatrix>], left: bool) -> Result<RatMatrix> {
        let n = self.n;
        let dim = self.inner.dim();
        if entries.len() != n || entries.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument("need an n×n entry matrix".into()));
        }
        let total = n * n * dim;
        let slot = |i: usize, j: usize, c: usize| (i * n + j) * dim + c;
        let mut m = RatMatrix::zeros(total, total);
        for a in 0..n {
            for b in 0..n {
                let z = &entries[a][b];
                if z.nrows() != dim || z.ncols() != dim {
                    return Err(Error::InvalidArgument("entry shape mismatch".into()));
                }
                for j in 0..n {
                    for rr in 0..dim {
                        for cc in 0..dim {
                            let v = z.get(rr, cc);
                            if v.is_zero() {
                                continue;
                            }
                            if left {
                                // ([Z] ξ)_{i,j} = Σ_k Z_{i,k}(ξ_{k,j})
                                m.add_at(slot(a, j, rr), slot(b, j, cc), v);
                            } else {
                                // ([Z] ξ)_{i,j} = Σ_k Z_{k,j}(ξ_{i,k})
                                m.add_at(slot(j, b, rr), slot(j, a, cc), v);
                            }
                        }
                    }
                }
            }
        }
        Ok(m)
    }

    /// Embeds an n×n matrix of left operators on the original space.
    pub fn embed_left(&self, entries: &[Vec<RatMatrix>]) -> Result<SidedOperator> {
        let m = self.assemble(entries, true)?;
        SidedOperator::new(&self.amp, Side::Left, m)
    }

    /// Embeds an n×n matrix of right operators, composing across the matrix
    /// index in the opposite order.
    pub fn embed_right(&self, entries: &[Vec<RatMatrix>]) -> Result<SidedOperator> {
        let m = self.assemble(entries, false)?;
        SidedOperator::new(&self.amp, Side::Right, m)
    }

    /// Embeds `Z ⊗ F_{i,j}` (1-based matrix-unit indices).
    pub fn unit_tensor(
        &self,
        z: &SidedOperator,
        i: usize,
        j: usize,
    ) -> Result<SidedOperator> {
        if i == 0 || i > self.n || j == 0 || j > self.n {
            return Err(Error::InvalidArgument("matrix-unit index out of range".into()));
        }
        let dim = self.inner.dim();
        let zero = RatMatrix::zeros(dim, dim);
        let entries: Vec<Vec<RatMatrix>> = (0..self.n)
            .map(|a| {
                (0..self.n)
                    .map(|b| {
                        if a == i - 1 && b == j - 1 {
                            z.mat().clone()
                        } else {
                            zero.clone()
                        }
                    })
                    .collect()
            })
            .collect();
        match z.side() {
            Side::Left => self.embed_left(&entries),
            Side::Right => self.embed_right(&entries),
        }
    }
}

/// Product of matrix units `F_{i_t, j_t}` taken in the diagram order of the
/// side map: either a single matrix unit or zero.
pub fn f_chi_product(
    chi: &ChiMap,
    i_idx: &[usize],
    j_idx: &[usize],
    n: usize,
) -> Result<Option<(usize, usize)>> {
    let qlen = chi.len();
    if i_idx.len() != qlen || j_idx.len() != qlen {
        return Err(Error::InvalidArgument("index length mismatch".into()));
    }
    if i_idx.iter().chain(j_idx).any(|&x| x == 0 || x > n) {
        return Err(Error::InvalidArgument("matrix-unit index out of range".into()));
    }
    let s = chi.s_chi();
    let first = s.apply(1);
    let mut cur = (i_idx[first - 1], j_idx[first - 1]);
    for t in 2..=qlen {
        let e = s.apply(t);
        if cur.1 != i_idx[e - 1] {
            return Ok(None);
        }
        cur.1 = j_idx[e - 1];
    }
    Ok(Some(cur))
}

/// Checks the tensor factorization of block expectations: the amplified
/// expectation of `Z_t ⊗ F_{i_t, j_t}` equals `E_π(Z) ⊗ F_χ`.
pub fn check_tensor_factorization(
    amp: &AmplifiedSpace,
    ops: &[SidedOperator],
    units: &[(usize, usize)],
    pi: &BiPartition,
) -> Result<bool> {
    if ops.len() != units.len() {
        return Err(Error::InvalidArgument("one matrix unit per operator".into()));
    }
    let embedded: Vec<SidedOperator> = ops
        .iter()
        .zip(units)
        .map(|(z, &(i, j))| amp.unit_tensor(z, i, j))
        .collect::<Result<_>>()?;
    let lhs = e_pi(amp.space(), &embedded, pi)?;
    let chi = chi_of_operators(ops)?;
    let i_idx: Vec<usize> = units.iter().map(|&(i, _)| i).collect();
    let j_idx: Vec<usize> = units.iter().map(|&(_, j)| j).collect();
    let d = amp.inner().base().d();
    let n = amp.n();
    let rhs = match f_chi_product(&chi, &i_idx, &j_idx, n)? {
        None => RatMatrix::zeros(n * d, n * d),
        Some((fi, fj)) => {
            let inner = e_pi(amp.inner(), ops, pi)?;
            let mut m = RatMatrix::zeros(n * d, n * d);
            for rr in 0..d {
                for cc in 0..d {
                    m.set((fi - 1) * d + rr, (fj - 1) * d + cc, inner.get(rr, cc).clone());
                }
            }
            m
        }
    };
    Ok(lhs == rhs)
}

/// JSON form of a bimodule space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceJson {
    /// Base matrix size.
    pub base_d: usize,
    /// Total dimension.
    pub dim: usize,
    /// Unit vector entries as `"p/q"`.
    pub unit: Vec<String>,
    /// Left action matrices, one per base basis element.
    pub lb: Vec<Vec<Vec<String>>>,
    /// Right action matrices.
    pub rb: Vec<Vec<Vec<String>>>,
    /// Projection matrix rows.
    pub proj: Vec<Vec<String>>,
}

/// JSON form of a sided operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorJson {
    /// `"L"` or `"R"`.
    pub side: String,
    /// Matrix entries as `"p/q"`.
    pub mat: Vec<Vec<String>>,
}

fn matrix_to_json(m: &RatMatrix) -> Vec<Vec<String>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| format_q(m.get(i, j))).collect())
        .collect()
}

fn matrix_from_json(rows: &[Vec<String>]) -> Result<RatMatrix> {
    let parsed = rows
        .iter()
        .map(|r| r.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    RatMatrix::from_rows(parsed)
}

impl ConcreteBBSpace {
    /// Serializable form.
    pub fn to_json(&self) -> SpaceJson {
        SpaceJson {
            base_d: self.base.d(),
            dim: self.dim,
            unit: self.unit.iter().map(format_q).collect(),
            lb: self.lb.iter().map(matrix_to_json).collect(),
            rb: self.rb.iter().map(matrix_to_json).collect(),
            proj: matrix_to_json(&self.proj),
        }
    }

    /// Parses and revalidates the JSON form.
    pub fn from_json(j: &SpaceJson) -> Result<Self> {
        let base = MatrixAlgebra::new(j.base_d)?;
        let unit = j.unit.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?;
        let lb = j.lb.iter().map(|m| matrix_from_json(m)).collect::<Result<Vec<_>>>()?;
        let rb = j.rb.iter().map(|m| matrix_from_json(m)).collect::<Result<Vec<_>>>()?;
        let proj = matrix_from_json(&j.proj)?;
        ConcreteBBSpace::new(base, unit, lb, rb, proj)
    }
}

impl SidedOperator {
    /// Serializable form.
    pub fn to_json(&self) -> OperatorJson {
        OperatorJson {
            side: match self.side {
                Side::Left => "L".into(),
                Side::Right => "R".into(),
            },
            mat: matrix_to_json(&self.mat),
        }
    }

    /// Parses and revalidates the JSON form against a space.
    pub fn from_json(space: &ConcreteBBSpace, j: &OperatorJson) -> Result<Self> {
        let side = match j.side.as_str() {
            "L" | "l" => Side::Left,
            "R" | "r" => Side::Right,
            other => return Err(Error::Parse(format!("bad side {other:?}"))),
        };
        SidedOperator::new(space, side, matrix_from_json(&j.mat)?)
    }
}

//! Concrete operator models producing exact moment data: the free-group
//! left/right regular representation, and free products of finite-dimensional
//! factor spaces computed by tracking the vectors reachable from the vacuum.

use crate::chi::Side;
use crate::matrix::RatMatrix;
use crate::rat::Q;
use crate::scalar::{Letter, MomentFunctional, Moments};
use crate::{Error, Result};
use num_traits::{One, Zero};
use std::collections::HashMap;

/// Which regular representation an operator acts through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rep {
    /// Left regular representation.
    Lambda,
    /// Right regular representation.
    Rho,
}

/// A reduced word in a free group: syllables `(generator, exponent)` with
/// nonzero exponents and adjacent generators distinct.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupWord {
    syls: Vec<(usize, i64)>,
}

impl GroupWord {
    /// The identity element.
    pub fn identity() -> Self {
        GroupWord { syls: Vec::new() }
    }

    /// The power `u_k^exp` of a single generator.
    pub fn gen(k: usize, exp: i64) -> Self {
        if exp == 0 {
            GroupWord::identity()
        } else {
            GroupWord {
                syls: vec![(k, exp)],
            }
        }
    }

    /// True for the identity element.
    pub fn is_identity(&self) -> bool {
        self.syls.is_empty()
    }

    /// Product with reduction.
    pub fn mul(&self, other: &GroupWord) -> GroupWord {
        let mut syls = self.syls.clone();
        for &(g, e) in &other.syls {
            match syls.last_mut() {
                Some(last) if last.0 == g => {
                    last.1 += e;
                    if last.1 == 0 {
                        syls.pop();
                    }
                }
                _ => syls.push((g, e)),
            }
        }
        GroupWord { syls }
    }

    /// Group inverse.
    pub fn inverse(&self) -> GroupWord {
        GroupWord {
            syls: self.syls.iter().rev().map(|&(g, e)| (g, -e)).collect(),
        }
    }

    /// Reduced length counted in single generators.
    pub fn letter_len(&self) -> usize {
        self.syls.iter().map(|&(_, e)| e.unsigned_abs() as usize).sum()
    }

    /// Syllable sequence.
    pub fn syllables(&self) -> &[(usize, i64)] {
        &self.syls
    }
}

/// Vector state at the identity of an operator word in the two regular
/// representations: applies the letters right to left to the delta vector at
/// the identity (`Lambda` multiplies on the left, `Rho` on the right) and
/// returns 1 exactly when the result is the identity again.
pub fn lr_moment(letters: &[(Rep, GroupWord)]) -> Q {
    let mut v = GroupWord::identity();
    for (rep, h) in letters.iter().rev() {
        v = match rep {
            Rep::Lambda => h.mul(&v),
            Rep::Rho => v.mul(h),
        };
    }
    if v.is_identity() {
        Q::one()
    } else {
        Q::zero()
    }
}

/// A moment source over letters realized as products of regular
/// representation operators on a free group.
#[derive(Debug, Clone, Default)]
pub struct FreeGroupModel {
    assign: HashMap<Letter, Vec<(Rep, GroupWord)>>,
}

impl FreeGroupModel {
    /// Empty model.
    pub fn new() -> Self {
        FreeGroupModel::default()
    }

    /// Assigns a letter the operator product `ops` (in product order, so the
    /// last entry acts first).
    pub fn set(&mut self, letter: Letter, ops: Vec<(Rep, GroupWord)>) {
        self.assign.insert(letter, ops);
    }
}

impl Moments for FreeGroupModel {
    fn moment(&self, word: &[Letter]) -> Result<Q> {
        if word.is_empty() {
            return Ok(Q::one());
        }
        let mut flat = Vec::new();
        for l in word {
            let ops = self.assign.get(l).ok_or_else(|| {
                Error::MissingData(format!("no operator assigned to symbol {:?}", l.sym))
            })?;
            flat.extend(ops.iter().cloned());
        }
        Ok(lr_moment(&flat))
    }
}

/// Tabulates the joint distribution of the model letters up to `order`.
pub fn freegroup_distribution(
    model: &FreeGroupModel,
    letters: &[Letter],
    order: usize,
) -> Result<MomentFunctional> {
    MomentFunctional::tabulate(letters.to_vec(), order, model)
}

/// Finite truncation of the group representation space: all reduced words of
/// reduced length at most `depth` over `gens` generators.
///
/// The representation matrices drop components leaving the truncation, so a
/// product of operators applied to the identity vector is exact whenever the
/// total reduced length of the applied group elements is at most `depth`.
#[derive(Debug, Clone)]
pub struct TruncatedGroupWords {
    words: Vec<GroupWord>,
    index: HashMap<GroupWord, usize>,
}

impl TruncatedGroupWords {
    /// Enumerates the basis by breadth-first search from the identity.
    pub fn new(gens: usize, depth: usize) -> Result<Self> {
        if gens == 0 {
            return Err(Error::InvalidArgument("need at least one generator".into()));
        }
        let mut words = vec![GroupWord::identity()];
        let mut index = HashMap::new();
        index.insert(GroupWord::identity(), 0usize);
        let mut frontier = vec![GroupWord::identity()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for w in &frontier {
                for g in 0..gens {
                    for e in [1i64, -1] {
                        let nw = w.mul(&GroupWord::gen(g, e));
                        if nw.letter_len() == w.letter_len() + 1 && !index.contains_key(&nw) {
                            index.insert(nw.clone(), words.len());
                            words.push(nw.clone());
                            next.push(nw);
                        }
                    }
                }
            }
            frontier = next;
        }
        Ok(TruncatedGroupWords { words, index })
    }

    /// Basis size.
    pub fn dim(&self) -> usize {
        self.words.len()
    }

    /// Index of the identity vector.
    pub fn identity_index(&self) -> usize {
        0
    }

    /// Basis words.
    pub fn words(&self) -> &[GroupWord] {
        &self.words
    }

    fn step_matrix(&self, h: &GroupWord, left: bool) -> RatMatrix {
        let n = self.dim();
        let mut m = RatMatrix::zeros(n, n);
        for (j, w) in self.words.iter().enumerate() {
            let img = if left { h.mul(w) } else { w.mul(h) };
            if let Some(&i) = self.index.get(&img) {
                m.set(i, j, Q::one());
            }
        }
        m
    }

    /// Matrix of left multiplication by `h` on the truncation.
    pub fn lambda_matrix(&self, h: &GroupWord) -> RatMatrix {
        self.step_matrix(h, true)
    }

    /// Matrix of right multiplication by `h` on the truncation.
    pub fn rho_matrix(&self, h: &GroupWord) -> RatMatrix {
        self.step_matrix(h, false)
    }
}

/// The matrix algebra `M_d` over the rationals with the normalized trace
/// state, coordinatized so that index 0 is the identity matrix and the
/// remaining basis elements span the trace-zero subspace.
#[derive(Debug, Clone)]
pub struct MatrixAlgebra {
    d: usize,
    basis: Vec<RatMatrix>,
    cob: RatMatrix,
}

impl MatrixAlgebra {
    /// Builds the algebra for a positive matrix size.
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("matrix size must be positive".into()));
        }
        let mut basis = vec![RatMatrix::identity(d)];
        for p in 0..d - 1 {
            let mut m = RatMatrix::unit(d, p, p);
            m.set(d - 1, d - 1, -Q::one());
            basis.push(m);
        }
        for p in 0..d {
            for q in 0..d {
                if p != q {
                    basis.push(RatMatrix::unit(d, p, q));
                }
            }
        }
        let dim = d * d;
        let mut cob = RatMatrix::zeros(dim, dim);
        for (j, b) in basis.iter().enumerate() {
            for p in 0..d {
                for q in 0..d {
                    cob.set(p * d + q, j, b.get(p, q).clone());
                }
            }
        }
        Ok(MatrixAlgebra { d, basis, cob })
    }

    /// Matrix size.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Linear dimension `d²`.
    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    /// Basis elements in coordinate order.
    pub fn basis(&self) -> &[RatMatrix] {
        &self.basis
    }

    /// Normalized trace.
    pub fn trace_state(&self, x: &RatMatrix) -> Q {
        let mut t = Q::zero();
        for i in 0..self.d {
            t += x.get(i, i).clone();
        }
        t / crate::rat::qi(self.d as i64)
    }

    /// Coordinates of a matrix in the algebra basis; coordinate 0 equals the
    /// normalized trace.
    pub fn coords(&self, x: &RatMatrix) -> Result<Vec<Q>> {
        let mut v = Vec::with_capacity(self.dim());
        for p in 0..self.d {
            for q in 0..self.d {
                v.push(x.get(p, q).clone());
            }
        }
        self.cob.solve(&v)
    }

    /// Matrix with the given coordinates.
    pub fn from_coords(&self, c: &[Q]) -> Result<RatMatrix> {
        if c.len() != self.dim() {
            return Err(Error::InvalidArgument("coordinate length mismatch".into()));
        }
        let mut out = RatMatrix::zeros(self.d, self.d);
        for (j, b) in self.basis.iter().enumerate() {
            if !c[j].is_zero() {
                out = out.add(&b.scale(&c[j]))?;
            }
        }
        Ok(out)
    }
}

/// The doubled module `A ⊕ A` over `A = M_d`, with the vector state reading
/// the trace of the first component. Coordinates 0..d²-1 hold the first
/// component (index 0 is the identity direction), d²..2d²-1 the second.
#[derive(Debug, Clone)]
pub struct DoubledFactor {
    alg: MatrixAlgebra,
}

impl DoubledFactor {
    /// Wraps a base algebra.
    pub fn new(alg: MatrixAlgebra) -> Self {
        DoubledFactor { alg }
    }

    /// Base algebra.
    pub fn algebra(&self) -> &MatrixAlgebra {
        &self.alg
    }

    /// Linear dimension `2d²`.
    pub fn dim(&self) -> usize {
        2 * self.alg.dim()
    }

    /// Operator `a₁ ⊕ a₂ ↦ z·a₂ ⊕ 0`.
    pub fn t_op(&self, z: &RatMatrix) -> Result<RatMatrix> {
        let n = self.alg.dim();
        let mut m = RatMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            let img = z.mul(&self.alg.basis()[j])?;
            let c = self.alg.coords(&img)?;
            for (i, v) in c.into_iter().enumerate() {
                m.set(i, n + j, v);
            }
        }
        Ok(m)
    }

    /// Operator `a₁ ⊕ a₂ ↦ 0 ⊕ a₁`.
    pub fn s_op(&self) -> RatMatrix {
        let n = self.alg.dim();
        let mut m = RatMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            m.set(n + j, j, Q::one());
        }
        m
    }

    /// Operator `a₁ ⊕ a₂ ↦ 0 ⊕ z·a₂`.
    pub fn tprime_op(&self, z: &RatMatrix) -> Result<RatMatrix> {
        let n = self.alg.dim();
        let mut m = RatMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            let img = z.mul(&self.alg.basis()[j])?;
            let c = self.alg.coords(&img)?;
            for (i, v) in c.into_iter().enumerate() {
                m.set(n + i, n + j, v);
            }
        }
        Ok(m)
    }

    /// The swap `a₁ ⊕ a₂ ↦ a₂ ⊕ a₁`.
    pub fn u_op(&self) -> RatMatrix {
        let n = self.alg.dim();
        let mut m = RatMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            m.set(n + j, j, Q::one());
            m.set(j, n + j, Q::one());
        }
        m
    }
}

/// The algebra `A = M_d` viewed as a module over itself with the trace state;
/// coordinate 0 is the identity direction.
#[derive(Debug, Clone)]
pub struct PlainFactor {
    alg: MatrixAlgebra,
}

impl PlainFactor {
    /// Wraps a base algebra.
    pub fn new(alg: MatrixAlgebra) -> Self {
        PlainFactor { alg }
    }

    /// Base algebra.
    pub fn algebra(&self) -> &MatrixAlgebra {
        &self.alg
    }

    /// Linear dimension `d²`.
    pub fn dim(&self) -> usize {
        self.alg.dim()
    }

    /// Matrix of left multiplication by `z`.
    pub fn left_mul_op(&self, z: &RatMatrix) -> Result<RatMatrix> {
        let n = self.alg.dim();
        let mut m = RatMatrix::zeros(n, n);
        for j in 0..n {
            let img = z.mul(&self.alg.basis()[j])?;
            let c = self.alg.coords(&img)?;
            for (i, v) in c.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }
}

/// One operator acting through a regular representation on one free-product
/// factor; `mat` is its matrix on that factor space, where coordinate 0 of
/// the factor is its distinguished unit direction.
#[derive(Debug, Clone)]
pub struct FactorOp {
    /// Factor index (0-based).
    pub factor: usize,
    /// Which representation carries the action.
    pub rep: Rep,
    /// Matrix on the factor space.
    pub mat: RatMatrix,
}

/// A vector in the free product space, expanded over tensor-word basis
/// vectors: each entry keys a word of `(factor, component)` pairs with
/// alternating factors and nonzero component indices.
pub type TensorState = HashMap<Vec<(usize, usize)>, Q>;

/// Applies one representation operator to a tensor state.
pub fn apply_factor_op(dims: &[usize], op: &FactorOp, state: &TensorState) -> Result<TensorState> {
    let f = op.factor;
    let dim = *dims
        .get(f)
        .ok_or_else(|| Error::InvalidArgument(format!("no factor {f}")))?;
    if op.mat.nrows() != dim || op.mat.ncols() != dim {
        return Err(Error::InvalidArgument(
            "operator shape does not match its factor".into(),
        ));
    }
    let mut out = TensorState::new();
    for (word, c) in state {
        if c.is_zero() {
            continue;
        }
        let (col, rest): (usize, Vec<(usize, usize)>) = match op.rep {
            Rep::Lambda => match word.first() {
                Some(&(g, i)) if g == f => (i, word[1..].to_vec()),
                _ => (0, word.clone()),
            },
            Rep::Rho => match word.last() {
                Some(&(g, i)) if g == f => (i, word[..word.len() - 1].to_vec()),
                _ => (0, word.clone()),
            },
        };
        for r in 0..dim {
            let m = op.mat.get(r, col);
            if m.is_zero() {
                continue;
            }
            let coeff = c.clone() * m.clone();
            if r == 0 {
                *out.entry(rest.clone()).or_insert_with(Q::zero) += coeff;
            } else {
                let mut nw = rest.clone();
                match op.rep {
                    Rep::Lambda => nw.insert(0, (f, r)),
                    Rep::Rho => nw.push((f, r)),
                }
                *out.entry(nw).or_insert_with(Q::zero) += coeff;
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

/// A moment source on a free product of factor spaces: each letter is a
/// product of representation operators, and moments read the vacuum
/// coefficient after applying the word to the vacuum vector.
#[derive(Debug, Clone)]
pub struct FreeProductMoments {
    factor_dims: Vec<usize>,
    assign: HashMap<Letter, Vec<FactorOp>>,
}

impl FreeProductMoments {
    /// Empty assignment over the given factor dimensions.
    pub fn new(factor_dims: Vec<usize>) -> Self {
        FreeProductMoments {
            factor_dims,
            assign: HashMap::new(),
        }
    }

    /// Factor dimensions.
    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    /// Assigns a letter the operator product `ops` (in product order, so the
    /// last entry acts first).
    pub fn set(&mut self, letter: Letter, ops: Vec<FactorOp>) -> Result<()> {
        for op in &ops {
            let dim = *self.factor_dims.get(op.factor).ok_or_else(|| {
                Error::InvalidArgument(format!("no factor {}", op.factor))
            })?;
            if op.mat.nrows() != dim || op.mat.ncols() != dim {
                return Err(Error::InvalidArgument(
                    "operator shape does not match its factor".into(),
                ));
            }
        }
        self.assign.insert(letter, ops);
        Ok(())
    }

    /// Operator product assigned to a letter.
    pub fn ops(&self, letter: &Letter) -> Result<&[FactorOp]> {
        self.assign
            .get(letter)
            .map(|v| v.as_slice())
            .ok_or_else(|| {
                Error::MissingData(format!("no operator assigned to symbol {:?}", letter.sym))
            })
    }

    /// Applies the letters of `word` (rightmost first) to the vacuum and
    /// returns the vacuum coefficient of the result.
    pub fn vacuum_expectation(&self, word: &[Letter]) -> Result<Q> {
        let mut state = TensorState::new();
        state.insert(Vec::new(), Q::one());
        for l in word.iter().rev() {
            for op in self.ops(l)?.iter().rev() {
                state = apply_factor_op(&self.factor_dims, op, &state)?;
            }
        }
        Ok(state.get(&Vec::new() as &Vec<_>).cloned().unwrap_or_else(Q::zero))
    }
}

impl Moments for FreeProductMoments {
    fn moment(&self, word: &[Letter]) -> Result<Q> {
        self.vacuum_expectation(word)
    }
}

/// Finite truncation of a free product space: all alternating tensor words of
/// length at most `depth`, with the vacuum at index 0.
///
/// Representation matrices drop components leaving the truncation, so a
/// product of at most `depth` operators applied to the vacuum is exact.
#[derive(Debug, Clone)]
pub struct TruncatedFreeProduct {
    factor_dims: Vec<usize>,
    basis: Vec<Vec<(usize, usize)>>,
    index: HashMap<Vec<(usize, usize)>, usize>,
}

impl TruncatedFreeProduct {
    /// Enumerates the truncated basis.
    pub fn new(factor_dims: Vec<usize>, depth: usize) -> Result<Self> {
        if factor_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument("factor dimensions must be positive".into()));
        }
        let mut basis: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        let mut layer: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for w in &layer {
                for (f, &dim) in factor_dims.iter().enumerate() {
                    if w.first().map(|&(g, _)| g) == Some(f) {
                        continue;
                    }
                    for i in 1..dim {
                        let mut nw = Vec::with_capacity(w.len() + 1);
                        nw.push((f, i));
                        nw.extend(w.iter().cloned());
                        next.push(nw);
                    }
                }
            }
            basis.extend(next.iter().cloned());
            layer = next;
        }
        let index = basis
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(TruncatedFreeProduct {
            factor_dims,
            basis,
            index,
        })
    }

    /// Basis size.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Index of the vacuum vector.
    pub fn vacuum_index(&self) -> usize {
        0
    }

    /// Basis words.
    pub fn basis(&self) -> &[Vec<(usize, usize)>] {
        &self.basis
    }

    /// Matrix of one representation operator on the truncation.
    pub fn op_matrix(&self, op: &FactorOp) -> Result<RatMatrix> {
        let n = self.dim();
        let mut m = RatMatrix::zeros(n, n);
        for (j, w) in self.basis.iter().enumerate() {
            let mut state = TensorState::new();
            state.insert(w.clone(), Q::one());
            let img = apply_factor_op(&self.factor_dims, op, &state)?;
            for (iw, v) in img {
                if let Some(&i) = self.index.get(&iw) {
                    m.set(i, j, v);
                }
            }
        }
        Ok(m)
    }
}

/// A family of interleaved pair systems on a free product of doubled modules:
/// letter `T` acts as `λ(a₁ ⊕ a₂ ↦ z·a₂ ⊕ 0)` and letter `S` as
/// `ρ(a₁ ⊕ a₂ ↦ 0 ⊕ a₁)` on its family's summand.
#[derive(Debug, Clone)]
pub struct BooleanSystem {
    doubled: DoubledFactor,
    families: usize,
    fp: FreeProductMoments,
}

impl BooleanSystem {
    /// Builds the system over `M_d` with the given number of families.
    pub fn new(d: usize, families: usize) -> Result<Self> {
        if families == 0 {
            return Err(Error::InvalidArgument("need at least one family".into()));
        }
        let doubled = DoubledFactor::new(MatrixAlgebra::new(d)?);
        let fp = FreeProductMoments::new(vec![doubled.dim(); families]);
        Ok(BooleanSystem {
            doubled,
            families,
            fp,
        })
    }

    fn check_family(&self, family: u32) -> Result<usize> {
        if family == 0 || family as usize > self.families {
            return Err(Error::InvalidArgument(format!(
                "family {family} outside 1..={}",
                self.families
            )));
        }
        Ok(family as usize - 1)
    }

    /// Registers the left letter carrying `z` in the given family.
    pub fn add_t(&mut self, sym: &str, family: u32, z: &RatMatrix) -> Result<Letter> {
        let factor = self.check_family(family)?;
        let letter = Letter::new(sym, Side::Left, family);
        let op = FactorOp {
            factor,
            rep: Rep::Lambda,
            mat: self.doubled.t_op(z)?,
        };
        self.fp.set(letter.clone(), vec![op])?;
        Ok(letter)
    }

    /// Registers the right unit letter of the given family.
    pub fn add_s(&mut self, sym: &str, family: u32) -> Result<Letter> {
        let factor = self.check_family(family)?;
        let letter = Letter::new(sym, Side::Right, family);
        let op = FactorOp {
            factor,
            rep: Rep::Rho,
            mat: self.doubled.s_op(),
        };
        self.fp.set(letter.clone(), vec![op])?;
        Ok(letter)
    }

    /// Base algebra.
    pub fn algebra(&self) -> &MatrixAlgebra {
        self.doubled.algebra()
    }

    /// The doubled factor model shared by all families.
    pub fn doubled(&self) -> &DoubledFactor {
        &self.doubled
    }

    /// Free-product moment source.
    pub fn moments(&self) -> &FreeProductMoments {
        &self.fp
    }
}

/// The multiplicative variant of the pair system: each base element embeds as
/// the conjugated operator `ρ(U) λ(a₁ ⊕ a₂ ↦ 0 ⊕ z·a₂) ρ(U)` where `U` swaps
/// the two components.
#[derive(Debug, Clone)]
pub struct HomomorphicBooleanSystem {
    doubled: DoubledFactor,
    families: usize,
    fp: FreeProductMoments,
}

impl HomomorphicBooleanSystem {
    /// Builds the system over `M_d` with the given number of families.
    pub fn new(d: usize, families: usize) -> Result<Self> {
        if families == 0 {
            return Err(Error::InvalidArgument("need at least one family".into()));
        }
        let doubled = DoubledFactor::new(MatrixAlgebra::new(d)?);
        let fp = FreeProductMoments::new(vec![doubled.dim(); families]);
        Ok(HomomorphicBooleanSystem {
            doubled,
            families,
            fp,
        })
    }

    /// Registers the embedded image of `z` in the given family.
    pub fn add_beta(&mut self, sym: &str, family: u32, z: &RatMatrix) -> Result<Letter> {
        if family == 0 || family as usize > self.families {
            return Err(Error::InvalidArgument(format!(
                "family {family} outside 1..={}",
                self.families
            )));
        }
        let factor = family as usize - 1;
        let letter = Letter::new(sym, Side::Left, family);
        let u = FactorOp {
            factor,
            rep: Rep::Rho,
            mat: self.doubled.u_op(),
        };
        let t = FactorOp {
            factor,
            rep: Rep::Lambda,
            mat: self.doubled.tprime_op(z)?,
        };
        self.fp.set(letter.clone(), vec![u.clone(), t, u])?;
        Ok(letter)
    }

    /// Base algebra.
    pub fn algebra(&self) -> &MatrixAlgebra {
        self.doubled.algebra()
    }

    /// The doubled factor model shared by all families.
    pub fn doubled(&self) -> &DoubledFactor {
        &self.doubled
    }

    /// Free-product moment source.
    pub fn moments(&self) -> &FreeProductMoments {
        &self.fp
    }
}

/// Two-factor free product transporting a joint distribution on `M_d` to a
/// pair of families: family 1 embeds as `λ(T_z) ρ(S)` on a doubled summand,
/// family 2 as left multiplication on a plain summand. Family 2 is the side
/// whose elements are replaced by their state value when flanked by family 1.
#[derive(Debug, Clone)]
pub struct MonotoneSystem {
    doubled: DoubledFactor,
    plain: PlainFactor,
    fp: FreeProductMoments,
}

impl MonotoneSystem {
    /// Builds the system over `M_d`.
    pub fn new(d: usize) -> Result<Self> {
        let alg = MatrixAlgebra::new(d)?;
        let doubled = DoubledFactor::new(alg.clone());
        let plain = PlainFactor::new(alg);
        let fp = FreeProductMoments::new(vec![doubled.dim(), plain.dim()]);
        Ok(MonotoneSystem { doubled, plain, fp })
    }

    /// Registers the family-1 image of `z`.
    pub fn add_first(&mut self, sym: &str, z: &RatMatrix) -> Result<Letter> {
        let letter = Letter::new(sym, Side::Left, 1);
        let t = FactorOp {
            factor: 0,
            rep: Rep::Lambda,
            mat: self.doubled.t_op(z)?,
        };
        let s = FactorOp {
            factor: 0,
            rep: Rep::Rho,
            mat: self.doubled.s_op(),
        };
        self.fp.set(letter.clone(), vec![t, s])?;
        Ok(letter)
    }

    /// Registers the family-2 image of `z`.
    pub fn add_second(&mut self, sym: &str, z: &RatMatrix) -> Result<Letter> {
        let letter = Letter::new(sym, Side::Left, 2);
        let op = FactorOp {
            factor: 1,
            rep: Rep::Lambda,
            mat: self.plain.left_mul_op(z)?,
        };
        self.fp.set(letter.clone(), vec![op])?;
        Ok(letter)
    }

    /// Base algebra.
    pub fn algebra(&self) -> &MatrixAlgebra {
        self.doubled.algebra()
    }

    /// Free-product moment source.
    pub fn moments(&self) -> &FreeProductMoments {
        &self.fp
    }
}

/// Joint moments of concrete matrices under the normalized trace: each
/// letter is assigned an element of one matrix algebra and a word's moment
/// is the trace of the product.
#[derive(Debug, Clone)]
pub struct TracedMatrices {
    alg: MatrixAlgebra,
    assign: HashMap<Letter, RatMatrix>,
}

impl TracedMatrices {
    /// Empty assignment over the algebra.
    pub fn new(alg: MatrixAlgebra) -> Self {
        TracedMatrices {
            alg,
            assign: HashMap::new(),
        }
    }

    /// Assigns a matrix to a letter.
    pub fn set(&mut self, letter: Letter, mat: RatMatrix) -> Result<()> {
        if mat.nrows() != self.alg.d() || mat.ncols() != self.alg.d() {
            return Err(Error::InvalidArgument("matrix shape mismatch".into()));
        }
        self.assign.insert(letter, mat);
        Ok(())
    }

    /// Underlying algebra.
    pub fn algebra(&self) -> &MatrixAlgebra {
        &self.alg
    }
}

impl Moments for TracedMatrices {
    fn moment(&self, word: &[Letter]) -> Result<Q> {
        let mut prod = RatMatrix::identity(self.alg.d());
        for l in word {
            let m = self
                .assign
                .get(l)
                .ok_or_else(|| Error::MissingData(format!("no matrix for {:?}", l.sym)))?;
            prod = prod.mul(m)?;
        }
        Ok(self.alg.trace_state(&prod))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qi, RatRng};
    use crate::scalar::check_bifree;
    use rand::Rng;

    fn u(k: usize, e: i64) -> GroupWord {
        GroupWord::gen(k, e)
    }

    fn random_matrix(rng: &mut RatRng, d: usize) -> RatMatrix {
        let mut m = RatMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, rng.next_q());
            }
        }
        m
    }

    #[test]
    fn group_word_reduction() {
        let w = u(0, 2).mul(&u(0, -2));
        assert!(w.is_identity());
        let v = u(0, 1).mul(&u(1, 3)).mul(&u(1, -3)).mul(&u(0, -1));
        assert!(v.is_identity());
        let x = u(0, 1).mul(&u(1, 1));
        assert_eq!(x.inverse().mul(&x), GroupWord::identity());
        assert_eq!(u(0, 2).mul(&u(0, 1)).syllables(), &[(0, 3)]);
        assert_eq!(x.letter_len(), 2);
    }

    #[test]
    fn lr_moment_examples() {
        assert_eq!(
            lr_moment(&[(Rep::Lambda, u(0, 1)), (Rep::Rho, u(0, -1))]),
            qi(1)
        );
        assert_eq!(lr_moment(&[(Rep::Lambda, u(0, 1))]), qi(0));
        assert_eq!(
            lr_moment(&[
                (Rep::Lambda, u(0, 1)),
                (Rep::Lambda, u(1, 1)),
                (Rep::Lambda, u(1, -1)),
                (Rep::Lambda, u(0, -1)),
            ]),
            qi(1)
        );
    }

    #[test]
    fn lr_moment_unchanged_by_inserted_cancelling_pairs() {
        let mut rng = rand::thread_rng();
        for _ in 0..50 {
            let n = rng.gen_range(0..6);
            let ops: Vec<(Rep, GroupWord)> = (0..n)
                .map(|_| {
                    let rep = if rng.gen_bool(0.5) { Rep::Lambda } else { Rep::Rho };
                    (rep, u(rng.gen_range(0..2), rng.gen_range(-2..3)))
                })
                .collect();
            let base = lr_moment(&ops);
            let pos = rng.gen_range(0..=ops.len());
            let rep = if rng.gen_bool(0.5) { Rep::Lambda } else { Rep::Rho };
            let h = u(rng.gen_range(0..2), rng.gen_range(1..3));
            let mut padded = ops.clone();
            padded.insert(pos, (rep, h.inverse()));
            padded.insert(pos, (rep, h));
            assert_eq!(lr_moment(&padded), base);
        }
    }

    #[test]
    fn freegroup_pairs_pass_mixed_cumulant_check() {
        let mut model = FreeGroupModel::new();
        let mut letters = Vec::new();
        for k in 0..2usize {
            let t = Letter::new(&format!("T{}", k + 1), Side::Left, k as u32 + 1);
            let s = Letter::new(&format!("S{}", k + 1), Side::Right, k as u32 + 1);
            model.set(t.clone(), vec![(Rep::Lambda, u(k, 1))]);
            model.set(s.clone(), vec![(Rep::Rho, u(k, 1))]);
            letters.push(t);
            letters.push(s);
        }
        let report = check_bifree(&model, &letters, 4).unwrap();
        assert!(report.is_empty(), "nonzero mixed cumulants: {report:?}");
    }

    #[test]
    fn freegroup_lambda_rho_words_are_boolean_factorizing() {
        // One-letter algebras generated by λ(u_k^p)ρ(u_k^q): adjacent letters
        // from distinct families split off as scalar factors.
        let mut model = FreeGroupModel::new();
        let z1 = Letter::new("Z1", Side::Left, 1);
        let z2 = Letter::new("Z2", Side::Left, 2);
        let z3 = Letter::new("Z3", Side::Left, 3);
        model.set(z1.clone(), vec![(Rep::Lambda, u(0, 1)), (Rep::Rho, u(0, 2))]);
        model.set(z2.clone(), vec![(Rep::Lambda, u(1, -1)), (Rep::Rho, u(1, 1))]);
        model.set(z3.clone(), vec![(Rep::Lambda, u(2, 1)), (Rep::Rho, u(2, -1))]);
        for word in [
            vec![z1.clone(), z2.clone()],
            vec![z1.clone(), z2.clone(), z3.clone()],
            vec![z2.clone(), z1.clone(), z3.clone()],
            vec![z3.clone(), z2.clone(), z1.clone()],
        ] {
            let lhs = model.moment(&word).unwrap();
            let mut rhs = Q::one();
            for l in &word {
                rhs *= model.moment(std::slice::from_ref(l)).unwrap();
            }
            assert_eq!(lhs, rhs, "word {word:?}");
        }
    }

    #[test]
    fn freegroup_monotone_factorization() {
        // First family alg(λ(u₁^p)ρ(u₁^q)), second family alg(λ(u₂^m)): a
        // second-family letter flanked by first-family letters is replaced by
        // its scalar moment.
        let mut model = FreeGroupModel::new();
        let a = Letter::new("A", Side::Left, 1);
        let b = Letter::new("B", Side::Left, 1);
        let z = Letter::new("Z", Side::Left, 2);
        model.set(a.clone(), vec![(Rep::Lambda, u(0, 1)), (Rep::Rho, u(0, -2))]);
        model.set(b.clone(), vec![(Rep::Lambda, u(0, -1)), (Rep::Rho, u(0, 2))]);
        model.set(z.clone(), vec![(Rep::Lambda, u(1, 1))]);
        let lhs = model.moment(&[a.clone(), z.clone(), b.clone()]).unwrap();
        let rhs = model.moment(std::slice::from_ref(&z)).unwrap()
            * model.moment(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(lhs, rhs);
        // The flanking product here is nontrivial: ab acts as the identity,
        // so the factorization direction matters.
        assert_eq!(model.moment(&[a, b]).unwrap(), qi(1));
        assert_eq!(lhs, qi(0));
    }

    #[test]
    fn truncated_group_matrices_match_direct_reduction() {
        let space = TruncatedGroupWords::new(2, 3).unwrap();
        let mut vac = vec![Q::zero(); space.dim()];
        vac[space.identity_index()] = Q::one();
        let ops = [
            (Rep::Lambda, u(0, 1)),
            (Rep::Rho, u(1, 1)),
            (Rep::Rho, u(1, -1)),
        ];
        let mut v = vac.clone();
        for (rep, h) in ops.iter().rev() {
            let m = match rep {
                Rep::Lambda => space.lambda_matrix(h),
                Rep::Rho => space.rho_matrix(h),
            };
            v = m.apply(&v).unwrap();
        }
        // The product reduces to u₁, so the identity coefficient vanishes and
        // the u₁ coefficient is 1.
        assert_eq!(v[space.identity_index()], lr_moment(&ops));
        let idx = space
            .words()
            .iter()
            .position(|w| w == &u(0, 1))
            .unwrap();
        assert_eq!(v[idx], qi(1));
        assert_eq!(v.iter().filter(|x| !x.is_zero()).count(), 1);
    }

    #[test]
    fn matrix_algebra_coordinates() {
        let alg = MatrixAlgebra::new(2).unwrap();
        let mut rng = RatRng::new(11);
        let x = random_matrix(&mut rng, 2);
        let c = alg.coords(&x).unwrap();
        assert_eq!(c[0], alg.trace_state(&x));
        assert_eq!(alg.from_coords(&c).unwrap(), x);
    }

    #[test]
    fn pair_system_base_moment_formula() {
        // E(T_{Z₁} S T_{Z₂} S ⋯ T_{Zₙ} S) equals the trace of Z₁⋯Zₙ.
        let mut rng = RatRng::new(3);
        let mut sys = BooleanSystem::new(2, 1).unwrap();
        let zs: Vec<RatMatrix> = (0..3).map(|_| random_matrix(&mut rng, 2)).collect();
        let s = sys.add_s("S", 1).unwrap();
        let ts: Vec<Letter> = zs
            .iter()
            .enumerate()
            .map(|(i, z)| sys.add_t(&format!("T{i}"), 1, z).unwrap())
            .collect();
        for n in 1..=3usize {
            let mut word = Vec::new();
            let mut prod = RatMatrix::identity(2);
            for t in ts.iter().take(n) {
                word.push(t.clone());
                word.push(s.clone());
            }
            for z in zs.iter().take(n) {
                prod = prod.mul(z).unwrap();
            }
            let want = sys.algebra().trace_state(&prod);
            assert_eq!(sys.moments().moment(&word).unwrap(), want, "n = {n}");
        }
    }

    #[test]
    fn pair_system_nilpotency_conditions() {
        let mut rng = RatRng::new(7);
        let doubled = DoubledFactor::new(MatrixAlgebra::new(2).unwrap());
        let z1 = random_matrix(&mut rng, 2);
        let z2 = random_matrix(&mut rng, 2);
        let t1 = doubled.t_op(&z1).unwrap();
        let t2 = doubled.t_op(&z2).unwrap();
        assert!(t1.mul(&t2).unwrap().is_zero());
        let s = doubled.s_op();
        assert!(s.mul(&s).unwrap().is_zero());

        // E(T(ST)ⁿ) = 0 and E(S(TS)ⁿ) = 0 for n ≤ 3.
        let mut sys = BooleanSystem::new(2, 1).unwrap();
        let t = sys.add_t("T", 1, &z1).unwrap();
        let sl = sys.add_s("S", 1).unwrap();
        for n in 0..=3usize {
            let mut wt = vec![t.clone()];
            let mut ws = vec![sl.clone()];
            for _ in 0..n {
                wt.push(sl.clone());
                wt.push(t.clone());
                ws.push(t.clone());
                ws.push(sl.clone());
            }
            assert_eq!(sys.moments().moment(&wt).unwrap(), qi(0), "T-word n = {n}");
            assert_eq!(sys.moments().moment(&ws).unwrap(), qi(0), "S-word n = {n}");
        }
    }

    #[test]
    fn pair_system_factorizes_across_families() {
        let mut rng = RatRng::new(13);
        let mut sys = BooleanSystem::new(2, 2).unwrap();
        let z1 = random_matrix(&mut rng, 2);
        let z2 = random_matrix(&mut rng, 2);
        let t1 = sys.add_t("T1", 1, &z1).unwrap();
        let s1 = sys.add_s("S1", 1).unwrap();
        let t2 = sys.add_t("T2", 2, &z2).unwrap();
        let s2 = sys.add_s("S2", 2).unwrap();
        let lhs = sys
            .moments()
            .moment(&[t1.clone(), s1.clone(), t2.clone(), s2.clone()])
            .unwrap();
        let rhs = sys.moments().moment(&[t1, s1]).unwrap()
            * sys.moments().moment(&[t2, s2]).unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(rhs, sys.algebra().trace_state(&z1) * sys.algebra().trace_state(&z2));
    }

    #[test]
    fn homomorphic_system_operator_identities() {
        let mut rng = RatRng::new(17);
        let doubled = DoubledFactor::new(MatrixAlgebra::new(2).unwrap());
        let uo = doubled.u_op();
        assert_eq!(uo.mul(&uo).unwrap(), RatMatrix::identity(doubled.dim()));
        let z1 = random_matrix(&mut rng, 2);
        let z2 = random_matrix(&mut rng, 2);
        let lhs = doubled
            .tprime_op(&z1)
            .unwrap()
            .mul(&doubled.tprime_op(&z2).unwrap())
            .unwrap();
        let rhs = doubled.tprime_op(&z1.mul(&z2).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn homomorphic_system_is_multiplicative_in_moments() {
        let mut rng = RatRng::new(19);
        let mut sys = HomomorphicBooleanSystem::new(2, 1).unwrap();
        let z1 = random_matrix(&mut rng, 2);
        let z2 = random_matrix(&mut rng, 2);
        let b1 = sys.add_beta("B1", 1, &z1).unwrap();
        let b2 = sys.add_beta("B2", 1, &z2).unwrap();
        let b12 = sys.add_beta("B12", 1, &z1.mul(&z2).unwrap()).unwrap();
        assert_eq!(
            sys.moments().moment(&[b1.clone(), b2.clone()]).unwrap(),
            sys.moments().moment(&[b12.clone()]).unwrap()
        );
        assert_eq!(
            sys.moments().moment(&[b12]).unwrap(),
            sys.algebra().trace_state(&z1.mul(&z2).unwrap())
        );
        assert_eq!(
            sys.moments().moment(&[b1]).unwrap(),
            sys.algebra().trace_state(&z1)
        );
    }

    #[test]
    fn homomorphic_system_alternating_word_is_product_of_means() {
        let mut rng = RatRng::new(23);
        let mut sys = HomomorphicBooleanSystem::new(2, 2).unwrap();
        let zs: Vec<RatMatrix> = (0..3).map(|_| random_matrix(&mut rng, 2)).collect();
        let b1 = sys.add_beta("B1", 1, &zs[0]).unwrap();
        let b2 = sys.add_beta("B2", 2, &zs[1]).unwrap();
        let b3 = sys.add_beta("B3", 1, &zs[2]).unwrap();
        let lhs = sys.moments().moment(&[b1, b2, b3]).unwrap();
        let want: Q = zs
            .iter()
            .map(|z| sys.algebra().trace_state(z))
            .product();
        assert_eq!(lhs, want);
    }

    #[test]
    fn monotone_system_marginals_match_base() {
        let mut rng = RatRng::new(29);
        let mut sys = MonotoneSystem::new(2).unwrap();
        let z1 = random_matrix(&mut rng, 2);
        let z2 = random_matrix(&mut rng, 2);
        let a = sys.add_first("A", &z1).unwrap();
        let c = sys.add_second("C", &z2).unwrap();
        for n in 1..=3usize {
            let mut prod1 = RatMatrix::identity(2);
            let mut prod2 = RatMatrix::identity(2);
            for _ in 0..n {
                prod1 = prod1.mul(&z1).unwrap();
                prod2 = prod2.mul(&z2).unwrap();
            }
            assert_eq!(
                sys.moments().moment(&vec![a.clone(); n]).unwrap(),
                sys.algebra().trace_state(&prod1)
            );
            assert_eq!(
                sys.moments().moment(&vec![c.clone(); n]).unwrap(),
                sys.algebra().trace_state(&prod2)
            );
        }
    }

    #[test]
    fn monotone_system_replaces_flanked_second_family_by_scalar() {
        let mut rng = RatRng::new(31);
        let mut sys = MonotoneSystem::new(2).unwrap();
        let z1 = random_matrix(&mut rng, 2);
        let z1b = random_matrix(&mut rng, 2);
        let z2 = random_matrix(&mut rng, 2);
        let a = sys.add_first("A", &z1).unwrap();
        let b = sys.add_first("B", &z1b).unwrap();
        let c = sys.add_second("C", &z2).unwrap();
        let lhs = sys
            .moments()
            .moment(&[a.clone(), c.clone(), b.clone()])
            .unwrap();
        let rhs = sys.algebra().trace_state(&z2)
            * sys.moments().moment(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(lhs, rhs);
        // And a leading second-family element peels off the same way.
        let lead = sys.moments().moment(&[c.clone(), a.clone()]).unwrap();
        assert_eq!(
            lead,
            sys.algebra().trace_state(&z2) * sys.moments().moment(&[a]).unwrap()
        );
    }

    #[test]
    fn monotone_embedding_on_scalar_base_matches_products() {
        let mut sys = MonotoneSystem::new(1).unwrap();
        let z1 = RatMatrix::from_rows(vec![vec![q(2, 3)]]).unwrap();
        let z2 = RatMatrix::from_rows(vec![vec![q(-1, 2)]]).unwrap();
        let a = sys.add_second("A", &z1).unwrap();
        let b = sys.add_first("B", &z2).unwrap();
        let m = sys.moments().moment(&[b.clone(), a.clone(), b]).unwrap();
        assert_eq!(m, q(2, 3) * q(-1, 2) * q(-1, 2));
        assert_eq!(sys.moments().moment(&[a]).unwrap(), q(2, 3));
    }

    #[test]
    fn truncated_free_product_matches_vector_tracking() {
        let mut rng = RatRng::new(37);
        let mut sys = BooleanSystem::new(2, 2).unwrap();
        let z = random_matrix(&mut rng, 2);
        let zb = random_matrix(&mut rng, 2);
        let t = sys.add_t("T", 1, &z).unwrap();
        let s = sys.add_s("S", 1).unwrap();
        let t2 = sys.add_t("U", 2, &zb).unwrap();
        let s2 = sys.add_s("V", 2).unwrap();
        let space = TruncatedFreeProduct::new(sys.moments().factor_dims().to_vec(), 3).unwrap();
        let mats: HashMap<&str, Vec<RatMatrix>> = [&t, &s, &t2, &s2]
            .iter()
            .map(|l| {
                let ms = sys
                    .moments()
                    .ops(l)
                    .unwrap()
                    .iter()
                    .map(|op| space.op_matrix(op).unwrap())
                    .collect();
                (l.sym.as_str(), ms)
            })
            .collect();
        for word in [
            vec![t.clone(), s.clone()],
            vec![t.clone(), s.clone(), t2.clone()],
            vec![s2.clone(), t.clone(), s.clone()],
            vec![t2.clone(), s2.clone(), t.clone()],
            vec![s.clone(), s.clone(), t.clone()],
        ] {
            let mut v = vec![Q::zero(); space.dim()];
            v[space.vacuum_index()] = Q::one();
            for l in word.iter().rev() {
                for m in mats[l.sym.as_str()].iter().rev() {
                    v = m.apply(&v).unwrap();
                }
            }
            assert_eq!(
                v[space.vacuum_index()],
                sys.moments().moment(&word).unwrap(),
                "word {word:?}"
            );
        }
    }

    #[test]
    fn factor_op_shape_validation() {
        let mut fp = FreeProductMoments::new(vec![2]);
        let bad = FactorOp {
            factor: 0,
            rep: Rep::Lambda,
            mat: RatMatrix::identity(3),
        };
        assert!(fp.set(Letter::new("X", Side::Left, 1), vec![bad]).is_err());
        let missing = FreeProductMoments::new(vec![2]);
        assert!(missing.moment(&[Letter::new("Y", Side::Left, 1)]).is_err());
    }
}

//! Side maps (χ), the associated permutation s_χ, and the induced total order.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which side of the algebra an index belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    /// A left index (ℓ).
    Left,
    /// A right index (r).
    Right,
}

/// A map from positions `1..=n` to sides.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChiMap {
    sides: Vec<Side>,
}

impl ChiMap {
    /// Builds a side map; the sequence must be nonempty.
    pub fn new(sides: Vec<Side>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::InvalidArgument("chi map must be nonempty".into()));
        }
        Ok(ChiMap { sides })
    }

    /// Parses a string such as `"LLRLR"`.
    pub fn parse(s: &str) -> Result<Self> {
        let sides = s
            .chars()
            .map(|c| match c {
                'L' | 'l' => Ok(Side::Left),
                'R' | 'r' => Ok(Side::Right),
                other => Err(Error::Parse(format!("bad side character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        ChiMap::new(sides)
    }

    /// All-left map of length `n`.
    pub fn all_left(n: usize) -> Result<Self> {
        ChiMap::new(vec![Side::Left; n])
    }

    /// All-right map of length `n`.
    pub fn all_right(n: usize) -> Result<Self> {
        ChiMap::new(vec![Side::Right; n])
    }

    /// Alternating map `LRLR…` of length `2 * pairs`.
    pub fn alternating(pairs: usize) -> Result<Self> {
        let sides = (0..2 * pairs)
            .map(|i| if i % 2 == 0 { Side::Left } else { Side::Right })
            .collect();
        ChiMap::new(sides)
    }

    /// Length of the underlying sequence.
    pub fn len(&self) -> usize {
        self.sides.len()
    }

    /// Always false; maps have length at least one.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Side at 1-based position `k`.
    pub fn side(&self, k: usize) -> Side {
        self.sides[k - 1]
    }

    /// Raw side sequence.
    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    /// 1-based positions mapped to the left.
    pub fn left_set(&self) -> Vec<usize> {
        (1..=self.len()).filter(|&k| self.side(k) == Side::Left).collect()
    }

    /// 1-based positions mapped to the right.
    pub fn right_set(&self) -> Vec<usize> {
        (1..=self.len()).filter(|&k| self.side(k) == Side::Right).collect()
    }

    /// True for `LRLR…` of even length.
    pub fn is_alternating(&self) -> bool {
        self.len() % 2 == 0
            && (1..=self.len()).all(|k| {
                self.side(k) == if k % 2 == 1 { Side::Left } else { Side::Right }
            })
    }

    /// The permutation reading left positions in increasing order followed by
    /// right positions in decreasing order.
    pub fn s_chi(&self) -> Permutation {
        let mut images = self.left_set();
        let mut rights = self.right_set();
        rights.reverse();
        images.extend(rights);
        Permutation { images }
    }

    /// Rank of position `a` in the induced order: `a` precedes `b` exactly
    /// when `prec_rank(a) < prec_rank(b)`.
    pub fn prec_rank(&self, a: usize) -> usize {
        self.s_chi().inverse().apply(a)
    }

    /// Restriction of the map to a sorted subset of positions.
    pub fn restrict(&self, subset: &[usize]) -> Result<ChiMap> {
        ChiMap::new(subset.iter().map(|&k| self.side(k)).collect())
    }

    /// String form, e.g. `"LLRLR"`.
    pub fn to_string_form(&self) -> String {
        self.sides
            .iter()
            .map(|s| match s {
                Side::Left => 'L',
                Side::Right => 'R',
            })
            .collect()
    }
}

/// A permutation of `{1..n}` in one-line notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    /// Builds a permutation from its image sequence `k ↦ images[k-1]`.
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n + 1];
        for &v in &images {
            if v == 0 || v > n || seen[v] {
                return Err(Error::InvalidArgument(format!(
                    "not a permutation of 1..={n}: {images:?}"
                )));
            }
            seen[v] = true;
        }
        Ok(Permutation { images })
    }

    /// Degree `n`.
    pub fn len(&self) -> usize {
        self.images.len()
    }

    /// True when the permutation has degree zero.
    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Image of `k` (1-based).
    pub fn apply(&self, k: usize) -> usize {
        self.images[k - 1]
    }

    /// One-line image sequence.
    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// Inverse permutation.
    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.images.len()];
        for (k, &v) in self.images.iter().enumerate() {
            inv[v - 1] = k + 1;
        }
        Permutation { images: inv }
    }
}

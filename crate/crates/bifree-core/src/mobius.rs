//! The Möbius function of the two-sided non-crossing lattice, computed both
//! by its defining recursion and by the closed reduction to the standard
//! non-crossing lattice, plus Möbius inversion over the full family or the
//! paired/Boolean sub-family.

use crate::chi::ChiMap;
use crate::partition::{enumerate_bnc, enumerate_family, BiPartition, FamilyTag};
use crate::rat::{catalan, Q};
use crate::{Error, Result};

use num_traits::{One, Zero};
use std::collections::HashMap;
use std::sync::Mutex;

/// Session-wide memo for closed-form values, keyed by the standard-order
/// images of the pair. All writers compute identical values, so
/// last-write-wins is safe.
static CLOSED_MEMO: Mutex<Option<HashMap<(Vec<Vec<usize>>, Vec<Vec<usize>>), Q>>> =
    Mutex::new(None);

fn check_pair(pi: &BiPartition, sigma: &BiPartition) -> Result<()> {
    if pi.chi() != sigma.chi() {
        return Err(Error::InvalidArgument(
            "Möbius arguments must share a side map".into(),
        ));
    }
    if !pi.is_bnc() || !sigma.is_bnc() {
        return Err(Error::InvalidArgument(
            "Möbius arguments must be two-sided non-crossing".into(),
        ));
    }
    Ok(())
}

/// Möbius value by the defining recursion over the enumerated interval:
/// `Σ_{π ≤ τ ≤ σ} μ(τ, σ) = [π = σ]`.
pub fn mobius_recursive(pi: &BiPartition, sigma: &BiPartition) -> Result<Q> {
    check_pair(pi, sigma)?;
    if !pi.refines(sigma)? {
        return Ok(Q::zero());
    }
    let family = enumerate_bnc(pi.chi())?;
    let interval: Vec<&BiPartition> = family
        .members
        .iter()
        .filter(|t| pi.refines(t).unwrap() && t.refines(sigma).unwrap())
        .collect();
    let mut memo: HashMap<&BiPartition, Q> = HashMap::new();
    // Process from the top down: μ(σ,σ) = 1, then each lower τ is forced.
    let mut order: Vec<&BiPartition> = interval.clone();
    order.sort_by_key(|t| t.blocks().len());
    for t in order {
        if t == sigma {
            memo.insert(t, Q::one());
            continue;
        }
        let mut sum = Q::zero();
        for u in &interval {
            if *u != t && t.refines(u)? {
                sum += memo
                    .get(*u)
                    .expect("coarser element already processed")
                    .clone();
            }
        }
        memo.insert(t, -sum);
    }
    Ok(memo.remove(pi).expect("pi lies in the interval"))
}

/// Möbius value through the standard-order reduction: map both partitions
/// through `s_chi⁻¹` and evaluate the non-crossing Möbius function by the
/// canonical interval factorization into full non-crossing lattices.
pub fn mobius_closed(pi: &BiPartition, sigma: &BiPartition) -> Result<Q> {
    check_pair(pi, sigma)?;
    if !pi.refines(sigma)? {
        return Ok(Q::zero());
    }
    let p = pi.to_standard_order();
    let s = sigma.to_standard_order();
    {
        let guard = CLOSED_MEMO.lock().unwrap();
        if let Some(map) = guard.as_ref() {
            if let Some(v) = map.get(&(p.clone(), s.clone())) {
                return Ok(v.clone());
            }
        }
    }
    let v = mobius_nc(&p, &s);
    let mut guard = CLOSED_MEMO.lock().unwrap();
    guard
        .get_or_insert_with(HashMap::new)
        .insert((p, s), v.clone());
    Ok(v)
}

/// Non-crossing Möbius function for plain partitions `p ≤ s` of `{1..n}`.
///
/// The interval `[p, s]` factors over the blocks of `s`; each factor `[p|V,
/// 1_V]` factors further into full non-crossing lattices indexed by the
/// blocks of the complement of `p|V`, where `μ(0_m, 1_m) =
/// (−1)^{m−1}·Catalan(m−1)`.
fn mobius_nc(p: &[Vec<usize>], s: &[Vec<usize>]) -> Q {
    let mut value = Q::one();
    for v in s {
        let restricted = relabel(p, v);
        for w in noncrossing_complement(&restricted) {
            let m = w.len();
            let mut c = catalan(m - 1);
            if (m - 1) % 2 == 1 {
                c = -c;
            }
            value *= Q::from_integer(c);
        }
    }
    value
}

fn relabel(p: &[Vec<usize>], subset: &[usize]) -> Vec<Vec<usize>> {
    let pos = |k: usize| subset.iter().position(|&x| x == k).map(|i| i + 1);
    let mut out = Vec::new();
    for b in p {
        let nb: Vec<usize> = b.iter().filter_map(|&k| pos(k)).collect();
        if !nb.is_empty() {
            out.push(nb);
        }
    }
    out
}

/// The complement of a non-crossing partition of `{1..m}`: the coarsest
/// partition of the interleaved copy whose union with the input stays
/// non-crossing.
///
/// Two interleaved points `i', j'` (`i < j`, with `i'` sitting after `i`)
/// are related exactly when no block of the input has elements both inside
/// `{i+1..j}` and outside it; for non-crossing inputs this relation is an
/// equivalence.
pub fn noncrossing_complement(tau: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let m: usize = tau.iter().map(|b| b.len()).sum();
    let mut parent: Vec<usize> = (0..=m).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for i in 1..=m {
        for j in (i + 1)..=m {
            let inside = |k: usize| k > i && k <= j;
            let split = tau
                .iter()
                .any(|b| b.iter().any(|&k| inside(k)) && b.iter().any(|&k| !inside(k)));
            if !split {
                let ri = find(&mut parent, i);
                let rj = find(&mut parent, j);
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> =
        std::collections::BTreeMap::new();
    for k in 1..=m {
        let r = find(&mut parent, k);
        by_root.entry(r).or_default().push(k);
    }
    by_root.into_values().collect()
}

/// Möbius inversion over the full family or, when `restrict_to_boolean` is
/// set, over the paired/Boolean sub-family only.
///
/// Returns `g` with `f(π) = Σ_{σ ≤ π, σ in family} g(σ)`.
pub fn mobius_invert(
    f: &HashMap<BiPartition, Q>,
    chi: &ChiMap,
    restrict_to_boolean: bool,
) -> Result<HashMap<BiPartition, Q>> {
    let family = if restrict_to_boolean {
        enumerate_family(chi, FamilyTag::BncB)?
    } else {
        enumerate_bnc(chi)?
    };
    for member in &family.members {
        if !f.contains_key(member) {
            return Err(Error::MissingData(format!(
                "table lacks an entry for {:?}",
                member.to_json()
            )));
        }
    }
    // Triangular solve from fine to coarse: g(π) = f(π) − Σ_{σ < π} g(σ).
    let mut order: Vec<&BiPartition> = family.members.iter().collect();
    order.sort_by_key(|p| std::cmp::Reverse(p.blocks().len()));
    let mut g: HashMap<BiPartition, Q> = HashMap::new();
    for p in order {
        let mut val = f[p].clone();
        for member in &family.members {
            if member != p && member.refines(p)? {
                if let Some(prev) = g.get(member) {
                    val -= prev.clone();
                }
            }
        }
        g.insert(p.clone(), val);
    }
    Ok(g)
}

/// Forward summation, the inverse of [`mobius_invert`]: returns `f` with
/// `f(π) = Σ_{σ ≤ π, σ in family} g(σ)`.
pub fn mobius_summate(
    g: &HashMap<BiPartition, Q>,
    chi: &ChiMap,
    restrict_to_boolean: bool,
) -> Result<HashMap<BiPartition, Q>> {
    let family = if restrict_to_boolean {
        enumerate_family(chi, FamilyTag::BncB)?
    } else {
        enumerate_bnc(chi)?
    };
    let mut f = HashMap::new();
    for p in &family.members {
        let mut val = Q::zero();
        for member in &family.members {
            if member.refines(p)? {
                let gv = g.get(member).ok_or_else(|| {
                    Error::MissingData(format!("table lacks an entry for {:?}", member.to_json()))
                })?;
                val += gv.clone();
            }
        }
        f.insert(p.clone(), val);
    }
    Ok(f)
}

/// Convenience: `μ(0_χ, 1_χ)`, equal to `(−1)^{n−1}·Catalan(n−1)`.
pub fn mobius_zero_one(chi: &ChiMap) -> Result<Q> {
    let zero = BiPartition::zero(chi.clone());
    let one = BiPartition::one(chi.clone());
    mobius_closed(&zero, &one)
}

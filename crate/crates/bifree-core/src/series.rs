//! Truncated formal power series over exact rationals in one and two
//! commuting variables, the transform dictionary of a two-faced pair, and
//! the partial transform identities checked as exact zero residuals.

use crate::chi::{ChiMap, Side};
use crate::partition::{enumerate_bnc, BiPartition};
use crate::rat::{binomial, format_q, parse_q, Q};
use crate::scalar::{side_patterns_up_to, PairCumulants};
use crate::{Error, Result};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// One-variable power series truncated at a fixed degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniSeries {
    order: usize,
    c: Vec<Q>,
}

impl UniSeries {
    /// The zero series.
    pub fn new(order: usize) -> Self {
        UniSeries {
            order,
            c: vec![Q::zero(); order + 1],
        }
    }

    /// The constant series 1.
    pub fn one(order: usize) -> Self {
        let mut s = UniSeries::new(order);
        s.c[0] = Q::one();
        s
    }

    /// Truncation degree.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of degree `k`.
    pub fn coeff(&self, k: usize) -> &Q {
        &self.c[k]
    }

    /// Sets the coefficient of degree `k`.
    pub fn set_coeff(&mut self, k: usize, v: Q) {
        self.c[k] = v;
    }

    /// True when all coefficients vanish.
    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    /// Largest degree with a nonzero coefficient.
    pub fn max_nonzero_degree(&self) -> Option<usize> {
        (0..=self.order).rev().find(|&k| !self.c[k].is_zero())
    }

    fn check_order(&self, other: &UniSeries) -> Result<()> {
        if self.order != other.order {
            return Err(Error::InvalidArgument("series order mismatch".into()));
        }
        Ok(())
    }

    /// Sum.
    pub fn add(&self, other: &UniSeries) -> Result<UniSeries> {
        self.check_order(other)?;
        let mut s = self.clone();
        for k in 0..=self.order {
            s.c[k] += other.c[k].clone();
        }
        Ok(s)
    }

    /// Difference.
    pub fn sub(&self, other: &UniSeries) -> Result<UniSeries> {
        self.check_order(other)?;
        let mut s = self.clone();
        for k in 0..=self.order {
            s.c[k] -= other.c[k].clone();
        }
        Ok(s)
    }

    /// Scalar multiple.
    pub fn scale(&self, v: &Q) -> UniSeries {
        let mut s = self.clone();
        for k in 0..=self.order {
            s.c[k] *= v.clone();
        }
        s
    }

    /// Product, truncated at the order.
    pub fn mul(&self, other: &UniSeries) -> Result<UniSeries> {
        self.check_order(other)?;
        let mut s = UniSeries::new(self.order);
        for i in 0..=self.order {
            if self.c[i].is_zero() {
                continue;
            }
            for j in 0..=(self.order - i) {
                if !other.c[j].is_zero() {
                    s.c[i + j] += self.c[i].clone() * other.c[j].clone();
                }
            }
        }
        Ok(s)
    }

    /// Multiplication by the variable, dropping the top coefficient.
    pub fn times_var(&self) -> UniSeries {
        let mut s = UniSeries::new(self.order);
        for k in 1..=self.order {
            s.c[k] = self.c[k - 1].clone();
        }
        s
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn reciprocal(&self) -> Result<UniSeries> {
        if self.c[0].is_zero() {
            return Err(Error::InvalidArgument(
                "reciprocal requires a nonzero constant term".into(),
            ));
        }
        let inv0 = Q::one() / self.c[0].clone();
        let mut s = UniSeries::new(self.order);
        s.c[0] = inv0.clone();
        for k in 1..=self.order {
            let mut acc = Q::zero();
            for j in 1..=k {
                if !self.c[j].is_zero() {
                    acc += self.c[j].clone() * s.c[k - j].clone();
                }
            }
            s.c[k] = -inv0.clone() * acc;
        }
        Ok(s)
    }

    /// Composition `self(g)`; requires `g` to have zero constant term.
    pub fn substitute(&self, g: &UniSeries) -> Result<UniSeries> {
        self.check_order(g)?;
        if !g.c[0].is_zero() {
            return Err(Error::InvalidArgument(
                "substitution requires a zero constant term".into(),
            ));
        }
        let mut out = UniSeries::new(self.order);
        let mut power = UniSeries::one(self.order);
        for k in 0..=self.order {
            if !self.c[k].is_zero() {
                out = out.add(&power.scale(&self.c[k]))?;
            }
            if k < self.order {
                power = power.mul(g)?;
            }
        }
        Ok(out)
    }

    /// Serializable form, using the named variable.
    pub fn to_json(&self, var: &str) -> SeriesJson {
        SeriesJson {
            vars: vec![var.to_string()],
            order: self.order,
            coeffs: (0..=self.order)
                .filter(|&k| !self.c[k].is_zero())
                .map(|k| SeriesCoeffJson {
                    n: k,
                    m: 0,
                    value: format_q(&self.c[k]),
                })
                .collect(),
        }
    }

    /// Parses the serializable form.
    pub fn from_json(j: &SeriesJson) -> Result<Self> {
        let mut s = UniSeries::new(j.order);
        for e in &j.coeffs {
            if e.m != 0 || e.n > j.order {
                return Err(Error::Parse("bad one-variable coefficient index".into()));
            }
            s.c[e.n] = parse_q(&e.value)?;
        }
        Ok(s)
    }
}

/// Which variable of a two-variable series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// The left variable `z`.
    Z,
    /// The right variable `w`.
    W,
}

/// Two-variable power series in commuting variables, truncated by total
/// degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiSeries {
    order: usize,
    c: Vec<Q>,
}

impl BiSeries {
    /// The zero series.
    pub fn new(order: usize) -> Self {
        BiSeries {
            order,
            c: vec![Q::zero(); (order + 1) * (order + 1)],
        }
    }

    /// The constant series 1.
    pub fn one(order: usize) -> Self {
        let mut s = BiSeries::new(order);
        s.c[0] = Q::one();
        s
    }

    /// Truncation total degree.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of `z^n w^m`.
    pub fn get(&self, n: usize, m: usize) -> &Q {
        &self.c[n * (self.order + 1) + m]
    }

    /// Sets the coefficient of `z^n w^m`; requires `n + m` within the order.
    pub fn set(&mut self, n: usize, m: usize, v: Q) -> Result<()> {
        if n + m > self.order {
            return Err(Error::InvalidArgument(
                "coefficient beyond the truncation degree".into(),
            ));
        }
        self.c[n * (self.order + 1) + m] = v;
        Ok(())
    }

    fn add_coeff(&mut self, n: usize, m: usize, v: Q) {
        self.c[n * (self.order + 1) + m] += v;
    }

    /// True when all coefficients vanish.
    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    /// Largest total degree with a nonzero coefficient.
    pub fn max_nonzero_degree(&self) -> Option<usize> {
        let mut best = None;
        for n in 0..=self.order {
            for m in 0..=(self.order - n) {
                if !self.get(n, m).is_zero() {
                    best = Some(best.map_or(n + m, |b: usize| b.max(n + m)));
                }
            }
        }
        best
    }

    fn check_order(&self, other: &BiSeries) -> Result<()> {
        if self.order != other.order {
            return Err(Error::InvalidArgument("series order mismatch".into()));
        }
        Ok(())
    }

    /// Embeds a one-variable series into the chosen variable.
    pub fn from_uni(u: &UniSeries, var: Var) -> BiSeries {
        let mut s = BiSeries::new(u.order());
        for k in 0..=u.order() {
            let v = u.coeff(k).clone();
            match var {
                Var::Z => s.c[k * (s.order + 1)] = v,
                Var::W => s.c[k] = v,
            }
        }
        s
    }

    /// Sum.
    pub fn add(&self, other: &BiSeries) -> Result<BiSeries> {
        self.check_order(other)?;
        let mut s = self.clone();
        for (x, y) in s.c.iter_mut().zip(&other.c) {
            *x += y.clone();
        }
        Ok(s)
    }

    /// Difference.
    pub fn sub(&self, other: &BiSeries) -> Result<BiSeries> {
        self.check_order(other)?;
        let mut s = self.clone();
        for (x, y) in s.c.iter_mut().zip(&other.c) {
            *x -= y.clone();
        }
        Ok(s)
    }

    /// Scalar multiple.
    pub fn scale(&self, v: &Q) -> BiSeries {
        let mut s = self.clone();
        for x in s.c.iter_mut() {
            *x *= v.clone();
        }
        s
    }

    /// Product, truncated by total degree.
    pub fn mul(&self, other: &BiSeries) -> Result<BiSeries> {
        self.check_order(other)?;
        let mut s = BiSeries::new(self.order);
        for n1 in 0..=self.order {
            for m1 in 0..=(self.order - n1) {
                let x = self.get(n1, m1);
                if x.is_zero() {
                    continue;
                }
                for n2 in 0..=(self.order - n1 - m1) {
                    for m2 in 0..=(self.order - n1 - m1 - n2) {
                        let y = other.get(n2, m2);
                        if !y.is_zero() {
                            s.add_coeff(n1 + n2, m1 + m2, x.clone() * y.clone());
                        }
                    }
                }
            }
        }
        Ok(s)
    }

    /// Multiplication by the chosen variable.
    pub fn times_var(&self, var: Var) -> BiSeries {
        let mut s = BiSeries::new(self.order);
        for n in 0..=self.order {
            for m in 0..=(self.order - n) {
                let v = self.get(n, m);
                if v.is_zero() || n + m + 1 > self.order {
                    continue;
                }
                match var {
                    Var::Z => s.add_coeff(n + 1, m, v.clone()),
                    Var::W => s.add_coeff(n, m + 1, v.clone()),
                }
            }
        }
        s
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn reciprocal(&self) -> Result<BiSeries> {
        if self.get(0, 0).is_zero() {
            return Err(Error::InvalidArgument(
                "reciprocal requires a nonzero constant term".into(),
            ));
        }
        let inv0 = Q::one() / self.get(0, 0).clone();
        let mut s = BiSeries::new(self.order);
        s.c[0] = inv0.clone();
        for d in 1..=self.order {
            for n in 0..=d {
                let m = d - n;
                let mut acc = Q::zero();
                for i in 0..=n {
                    for j in 0..=m {
                        if i + j == 0 {
                            continue;
                        }
                        let x = self.get(i, j);
                        if !x.is_zero() {
                            acc += x.clone() * s.get(n - i, m - j).clone();
                        }
                    }
                }
                let v = -inv0.clone() * acc;
                s.set(n, m, v)?;
            }
        }
        Ok(s)
    }

    /// Composition `self(g, h)`; both substituted series must have zero
    /// constant term.
    pub fn substitute(&self, g: &BiSeries, h: &BiSeries) -> Result<BiSeries> {
        self.check_order(g)?;
        self.check_order(h)?;
        if !g.get(0, 0).is_zero() || !h.get(0, 0).is_zero() {
            return Err(Error::InvalidArgument(
                "substitution requires zero constant terms".into(),
            ));
        }
        let mut gpow = vec![BiSeries::one(self.order)];
        let mut hpow = vec![BiSeries::one(self.order)];
        for k in 1..=self.order {
            gpow.push(gpow[k - 1].mul(g)?);
            hpow.push(hpow[k - 1].mul(h)?);
        }
        let mut out = BiSeries::new(self.order);
        for n in 0..=self.order {
            for m in 0..=(self.order - n) {
                let v = self.get(n, m);
                if !v.is_zero() {
                    out = out.add(&gpow[n].mul(&hpow[m])?.scale(v))?;
                }
            }
        }
        Ok(out)
    }

    /// Serializable form.
    pub fn to_json(&self) -> SeriesJson {
        let mut coeffs = Vec::new();
        for n in 0..=self.order {
            for m in 0..=(self.order - n) {
                let v = self.get(n, m);
                if !v.is_zero() {
                    coeffs.push(SeriesCoeffJson {
                        n,
                        m,
                        value: format_q(v),
                    });
                }
            }
        }
        SeriesJson {
            vars: vec!["z".into(), "w".into()],
            order: self.order,
            coeffs,
        }
    }

    /// Parses the serializable form.
    pub fn from_json(j: &SeriesJson) -> Result<Self> {
        let mut s = BiSeries::new(j.order);
        for e in &j.coeffs {
            if e.n + e.m > j.order {
                return Err(Error::Parse("coefficient beyond the order".into()));
            }
            s.set(e.n, e.m, parse_q(&e.value)?)?;
        }
        Ok(s)
    }
}

/// JSON form of a truncated series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesJson {
    /// Variable names.
    pub vars: Vec<String>,
    /// Truncation (total) degree.
    pub order: usize,
    /// Nonzero coefficients.
    pub coeffs: Vec<SeriesCoeffJson>,
}

/// One coefficient of a serialized series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesCoeffJson {
    /// Degree in the first variable.
    pub n: usize,
    /// Degree in the second variable (0 for one-variable series).
    pub m: usize,
    /// Exact value as `"p/q"`.
    pub value: String,
}

fn pattern(n_left: usize, n_right: usize) -> Vec<Side> {
    let mut p = vec![Side::Left; n_left];
    p.extend(std::iter::repeat(Side::Right).take(n_right));
    p
}

/// Partition cumulant of a side pattern: product of the table values over
/// the blocks.
pub fn pair_kappa_pi(kappa: &PairCumulants, sides: &[Side], pi: &BiPartition) -> Q {
    let mut out = Q::one();
    for block in pi.blocks() {
        let sub: Vec<Side> = block.iter().map(|&k| sides[k - 1]).collect();
        out *= kappa.get(&sub);
        if out.is_zero() {
            return out;
        }
    }
    out
}

/// Moment of a side pattern from a cumulant table: sum of partition
/// cumulants over all bi-non-crossing partitions.
pub fn pair_moment(kappa: &PairCumulants, sides: &[Side]) -> Result<Q> {
    if sides.is_empty() {
        return Ok(Q::one());
    }
    let chi = ChiMap::new(sides.to_vec())?;
    let mut out = Q::zero();
    for pi in &enumerate_bnc(&chi)?.members {
        out += pair_kappa_pi(kappa, sides, pi);
    }
    Ok(out)
}

/// The transform dictionary of a two-faced pair with one left and one right
/// element: moment, shifted-cumulant, and cumulant series in one and two
/// variables.
#[derive(Debug, Clone)]
pub struct TransformBundle {
    /// Left moment series.
    pub m_t: UniSeries,
    /// Left shifted cumulant series, `1 + Σ κ_n zⁿ`.
    pub c_t: UniSeries,
    /// Left cumulant series, `Σ κ_n z^{n-1}`.
    pub r_t: UniSeries,
    /// Right moment series.
    pub m_s: UniSeries,
    /// Right shifted cumulant series.
    pub c_s: UniSeries,
    /// Right cumulant series.
    pub r_s: UniSeries,
    /// Two-variable moment series of `TⁿSᵐ` words.
    pub m_ts: BiSeries,
    /// `1 + R_TS`.
    pub c_ts: BiSeries,
    /// Two-variable cumulant series `Σ κ_{n,m} zⁿ wᵐ` over `n + m ≥ 1`.
    pub r_ts: BiSeries,
    /// Truncation degree.
    pub order: usize,
}

/// Builds the transform dictionary from a cumulant table.
pub fn bundle_from_cumulants(kappa: &PairCumulants, order: usize) -> Result<TransformBundle> {
    let mut m_t = UniSeries::one(order);
    let mut m_s = UniSeries::one(order);
    let mut c_t = UniSeries::one(order);
    let mut c_s = UniSeries::one(order);
    let mut r_t = UniSeries::new(order);
    let mut r_s = UniSeries::new(order);
    for n in 1..=order {
        m_t.set_coeff(n, pair_moment(kappa, &pattern(n, 0))?);
        m_s.set_coeff(n, pair_moment(kappa, &pattern(0, n))?);
        c_t.set_coeff(n, kappa.get(&pattern(n, 0)));
        c_s.set_coeff(n, kappa.get(&pattern(0, n)));
        r_t.set_coeff(n - 1, kappa.get(&pattern(n, 0)));
        r_s.set_coeff(n - 1, kappa.get(&pattern(0, n)));
    }
    let mut m_ts = BiSeries::one(order);
    let mut r_ts = BiSeries::new(order);
    for n in 0..=order {
        for m in 0..=(order - n) {
            if n + m == 0 {
                continue;
            }
            m_ts.set(n, m, pair_moment(kappa, &pattern(n, m))?)?;
            r_ts.set(n, m, kappa.get(&pattern(n, m)))?;
        }
    }
    let c_ts = BiSeries::one(order).add(&r_ts)?;
    let bundle = TransformBundle {
        m_t,
        c_t,
        r_t,
        m_s,
        c_s,
        r_s,
        m_ts,
        c_ts,
        r_ts,
        order,
    };
    debug_assert_eq!(
        bundle.c_t,
        bundle.r_t.times_var().add(&UniSeries::one(order))?
    );
    debug_assert_eq!(
        bundle.c_ts,
        bundle.r_ts.add(&BiSeries::one(order))?
    );
    Ok(bundle)
}

/// Residuals of the one-variable moment/cumulant functional equations for
/// both faces; each entry names the relation and must be the zero series.
pub fn check_single_variable_relations(b: &TransformBundle) -> Result<Vec<(String, UniSeries)>> {
    let mut out = Vec::new();
    for (name, m, c) in [("left", &b.m_t, &b.c_t), ("right", &b.m_s, &b.c_s)] {
        let composed = c.substitute(&m.times_var())?;
        out.push((format!("{name}: M(z) - C(zM(z))"), m.sub(&composed)?));
        let inv = c.reciprocal()?.times_var();
        out.push((format!("{name}: C(z) - M(z/C(z))"), c.sub(&m.substitute(&inv)?)?));
    }
    Ok(out)
}

/// Residual of the two-variable partial transform identity
/// `M_T + M_S = M_T·M_S/M_TS + C_TS(zM_T, wM_S)`; the zero series when the
/// bundle comes from one cumulant table.
pub fn two_variable_transform_residual(b: &TransformBundle) -> Result<BiSeries> {
    let mt = BiSeries::from_uni(&b.m_t, Var::Z);
    let ms = BiSeries::from_uni(&b.m_s, Var::W);
    let lhs = mt.add(&ms)?;
    let quotient = mt.mul(&ms)?.mul(&b.m_ts.reciprocal()?)?;
    let composed = b
        .c_ts
        .substitute(&mt.times_var(Var::Z), &ms.times_var(Var::W))?;
    lhs.sub(&quotient.add(&composed)?)
}

/// Difference between a mixed moment and the product of its one-sided
/// marginals, computed as a sum of partition cumulants over partitions with
/// at least one two-sided block.
pub fn mixed_moment_defect(n: usize, m: usize, kappa: &PairCumulants) -> Result<Q> {
    if n == 0 || m == 0 {
        return Ok(Q::zero());
    }
    let sides = pattern(n, m);
    let chi = ChiMap::new(sides.clone())?;
    let mut out = Q::zero();
    for pi in &enumerate_bnc(&chi)?.members {
        let split = pi
            .blocks()
            .iter()
            .all(|b| b.iter().all(|&k| sides[k - 1] == sides[b[0] - 1]));
        if !split {
            out += pair_kappa_pi(kappa, &sides, pi);
        }
    }
    Ok(out)
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// The same defect computed by the grouped route: choose the sizes of the
/// lowest two-sided block and distribute the remaining indices into the gaps
/// it creates.
pub fn mixed_moment_defect_grouped(n: usize, m: usize, kappa: &PairCumulants) -> Result<Q> {
    if n == 0 || m == 0 {
        return Ok(Q::zero());
    }
    let mut out = Q::zero();
    for t in 1..=n {
        for s in 1..=m {
            let kts = kappa.get(&pattern(t, s));
            if kts.is_zero() {
                continue;
            }
            for ci in compositions(n - t, t + 1) {
                for cj in compositions(m - s, s + 1) {
                    let mut term = kts.clone();
                    term *= pair_moment(kappa, &pattern(ci[0], cj[0]))?;
                    for k in 1..=t {
                        term *= pair_moment(kappa, &pattern(ci[k], 0))?;
                    }
                    for k in 1..=s {
                        term *= pair_moment(kappa, &pattern(0, cj[k]))?;
                    }
                    out += term;
                }
            }
        }
    }
    Ok(out)
}

fn starts_with_exactly(sides: &[Side], m: usize, theta: Side) -> bool {
    let n = sides.len();
    if m > n {
        return false;
    }
    if sides[..m].iter().any(|&s| s != theta) {
        return false;
    }
    m == n || sides[m] != theta
}

/// The commutative moment series: all side patterns, moments from the
/// cumulant table, graded by left and right counts.
pub fn commutative_moment_series(kappa: &PairCumulants, order: usize) -> Result<BiSeries> {
    let mut s = BiSeries::one(order);
    for sides in side_patterns_up_to(order) {
        let l = sides.iter().filter(|&&x| x == Side::Left).count();
        let r = sides.len() - l;
        let v = pair_moment(kappa, &sides)?;
        if !v.is_zero() {
            s.add_coeff(l, r, v);
        }
    }
    Ok(s)
}

/// Moment series over the side patterns that start with `theta` exactly `m`
/// times.
pub fn starting_moment_series(
    kappa: &PairCumulants,
    m: usize,
    theta: Side,
    order: usize,
) -> Result<BiSeries> {
    let mut s = BiSeries::new(order);
    for sides in side_patterns_up_to(order) {
        if !starts_with_exactly(&sides, m, theta) {
            continue;
        }
        let l = sides.iter().filter(|&&x| x == Side::Left).count();
        let v = pair_moment(kappa, &sides)?;
        if !v.is_zero() {
            s.add_coeff(l, sides.len() - l, v);
        }
    }
    Ok(s)
}

/// Cumulant series over the side patterns that end with `theta` exactly `m`
/// times.
pub fn ending_cumulant_series(
    kappa: &PairCumulants,
    m: usize,
    theta: Side,
    order: usize,
) -> Result<BiSeries> {
    let mut s = BiSeries::new(order);
    for sides in side_patterns_up_to(order) {
        let reversed: Vec<Side> = sides.iter().rev().copied().collect();
        if !starts_with_exactly(&reversed, m, theta) {
            continue;
        }
        let l = sides.iter().filter(|&&x| x == Side::Left).count();
        let v = kappa.get(&sides);
        if !v.is_zero() {
            s.add_coeff(l, sides.len() - l, v);
        }
    }
    Ok(s)
}

/// Replaces the one-sided cumulants of a table so that all one-sided moments
/// vanish, keeping the mixed cumulants.
pub fn vanishing_pure_cumulants(kappa: &PairCumulants, order: usize) -> Result<PairCumulants> {
    let mut out = PairCumulants::new();
    for sides in side_patterns_up_to(order) {
        let constant = sides.iter().all(|&x| x == sides[0]);
        if !constant {
            out.set(sides.clone(), kappa.get(&sides));
        }
    }
    for theta in [Side::Left, Side::Right] {
        for n in 1..=order {
            let sides = match theta {
                Side::Left => pattern(n, 0),
                Side::Right => pattern(0, n),
            };
            out.set(sides.clone(), Q::zero());
            let partial = pair_moment(&out, &sides)?;
            out.set(sides, -partial);
        }
    }
    Ok(out)
}

/// Residual of the sided decomposition of the commutative moment series for
/// a pair with vanishing one-sided moments: the ending-cumulant series of
/// each side paired with binomially weighted starting-moment series of the
/// other side.
pub fn sided_decomposition_residual(kappa: &PairCumulants, order: usize) -> Result<BiSeries> {
    for theta in [Side::Left, Side::Right] {
        for n in 1..=order {
            let sides = match theta {
                Side::Left => pattern(n, 0),
                Side::Right => pattern(0, n),
            };
            if !pair_moment(kappa, &sides)?.is_zero() {
                let name = match theta {
                    Side::Left => "left",
                    Side::Right => "right",
                };
                return Err(Error::InvalidArgument(format!(
                    "one-sided {name} moment of order {n} must vanish"
                )));
            }
        }
    }
    let lhs = commutative_moment_series(kappa, order)?;
    let mut rhs = BiSeries::one(order);
    for (theta, other) in [(Side::Left, Side::Right), (Side::Right, Side::Left)] {
        for m in 1..=order {
            let c = ending_cumulant_series(kappa, m, theta, order)?;
            if c.is_zero() {
                continue;
            }
            let mut factor = BiSeries::one(order);
            for k in 0..=order {
                let ms = starting_moment_series(kappa, k, other, order)?;
                if !ms.is_zero() {
                    let w = Q::from_integer(binomial(m + k, k));
                    factor = factor.add(&ms.scale(&w))?;
                }
            }
            rhs = rhs.add(&c.mul(&factor)?)?;
        }
    }
    lhs.sub(&rhs)
}

/// Residual of cumulant additivity for sums of bi-free pairs: the
/// lefts-then-rights cumulants of `(T₁+T₂, S₁+S₂)` minus the coefficientwise
/// sum of the two tables.
pub fn check_r_additivity(
    k1: &PairCumulants,
    k2: &PairCumulants,
    order: usize,
) -> Result<BiSeries> {
    use crate::scalar::{bifree_product, kappa_word, Letter, MemoMoments, MomentFunctional, Moments};

    struct PairAsMoments<'a> {
        kappa: &'a PairCumulants,
        t: Letter,
        s: Letter,
    }
    impl Moments for PairAsMoments<'_> {
        fn moment(&self, word: &[Letter]) -> Result<Q> {
            let sides = word
                .iter()
                .map(|l| {
                    if *l == self.t {
                        Ok(Side::Left)
                    } else if *l == self.s {
                        Ok(Side::Right)
                    } else {
                        Err(Error::MissingData(format!("unknown letter {:?}", l.sym)))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            pair_moment(self.kappa, &sides)
        }
    }

    let t1 = Letter::new("T1", Side::Left, 1);
    let s1 = Letter::new("S1", Side::Right, 1);
    let t2 = Letter::new("T2", Side::Left, 2);
    let s2 = Letter::new("S2", Side::Right, 2);
    let d1 = MomentFunctional::tabulate(
        vec![t1.clone(), s1.clone()],
        order,
        &PairAsMoments {
            kappa: k1,
            t: t1.clone(),
            s: s1.clone(),
        },
    )?;
    let d2 = MomentFunctional::tabulate(
        vec![t2.clone(), s2.clone()],
        order,
        &PairAsMoments {
            kappa: k2,
            t: t2.clone(),
            s: s2.clone(),
        },
    )?;
    let joint = bifree_product(&[&d1, &d2], order)?;
    let memo = MemoMoments::new(&joint);

    let mut residual = BiSeries::new(order);
    for n in 0..=order {
        for m in 0..=(order - n) {
            if n + m == 0 {
                continue;
            }
            // Expand κ of the sums by multilinearity over the 2^(n+m)
            // choices of summand per position.
            let mut total = Q::zero();
            for mask in 0..(1u64 << (n + m)) {
                let word: Vec<Letter> = (0..n + m)
                    .map(|k| {
                        let second = mask & (1 << k) != 0;
                        match (k < n, second) {
                            (true, false) => t1.clone(),
                            (true, true) => t2.clone(),
                            (false, false) => s1.clone(),
                            (false, true) => s2.clone(),
                        }
                    })
                    .collect();
                total += kappa_word(&word, &memo)?;
            }
            let expected = k1.get(&pattern(n, m)) + k2.get(&pattern(n, m));
            residual.set(n, m, total - expected)?;
        }
    }
    Ok(residual)
}

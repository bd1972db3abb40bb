//! Residue recursion on correlators `W_{g,n}`, done entirely as truncated
//! Laurent-series coefficient algebra in the local coordinate `w`.
//!
//! A correlator coefficient `F^{(g)}_{a}` multiplies `Π 1/z_i^{2a_i+2}`.
//! The recursion kernel contributes `w^{2a_1+1}/(y(w)-y(-w))`, which for a
//! bosonic curve is `½ Σ_ℓ s_ℓ w^{2a_1+2ℓ}` and for a super curve
//! `½ Σ_ℓ s'_ℓ w^{2a_1+2+2ℓ}`; the residue is then the `w^0` coefficient of
//! that kernel times the recursion numerator.
//!
//! In the twisted recursion each internal `1/w^{2b+2}` is replaced by the
//! Hurwitz expansion `ζ_H(2b+2; w)` and the diagonal `W_{0,2}(w,-w)` by
//! `ζ_H(2; 2w)`. The signs of the residue are pinned by `W^A_{0,3} = 1` and
//! `W^A_{1,1} = 1/(8z⁴)`.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::sync::Mutex;

use crate::abo::index_bound;
use crate::error::{Error, Result};
use crate::exact::{binomial, rat, rint, zeta_even, Rat, SymPoly};
use crate::models::{InvYSeries, ModelSpec};
use crate::table::{
    is_stable, level, multisets, multisets_from, stable_pairs, sub_multisets, Basis, CorrTable, ModelParity,
    VolumeTable,
};

/// Laurent polynomial in `w` keeping exponents `≤ max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laurent {
    pub max: i32,
    c: BTreeMap<i32, SymPoly>,
}

impl Laurent {
    pub fn new(max: i32) -> Self {
        Self { max, c: BTreeMap::new() }
    }

    pub fn add_term(&mut self, e: i32, v: &SymPoly) {
        if e > self.max || v.is_zero() {
            return;
        }
        let slot = self.c.entry(e).or_default();
        *slot += v;
        if slot.is_zero() {
            self.c.remove(&e);
        }
    }

    pub fn add(&mut self, other: &Laurent) {
        for (&e, v) in &other.c {
            self.add_term(e, v);
        }
    }

    pub fn scaled(&self, k: &Rat) -> Laurent {
        let mut out = Laurent::new(self.max);
        for (&e, v) in &self.c {
            out.add_term(e, &v.scale(k));
        }
        out
    }

    /// `f(-w)`.
    pub fn reflect(&self) -> Laurent {
        let mut out = Laurent::new(self.max);
        for (&e, v) in &self.c {
            out.add_term(e, &if e % 2 == 0 { v.clone() } else { -v });
        }
        out
    }

    /// Product truncated at `max`.
    pub fn mul(&self, other: &Laurent, max: i32) -> Laurent {
        let mut out = Laurent::new(max);
        for (&e1, v1) in &self.c {
            for (&e2, v2) in other.c.range(..=max - e1) {
                out.add_term(e1 + e2, &(v1 * v2));
            }
        }
        out
    }

    pub fn coeff(&self, e: i32) -> SymPoly {
        self.c.get(&e).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &SymPoly)> {
        self.c.iter().map(|(e, v)| (*e, v))
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }
}

/// Coefficients `C(2k+2d-1, 2k) ζ(2k+2d)` of `w^{2k}` in `ζ_H(2d; w)` beyond
/// its principal part `w^{-2d}`.
#[derive(Debug, Default)]
pub struct TwistedBasisExpansion {
    cache: Mutex<BTreeMap<(u32, u32), SymPoly>>,
}

impl TwistedBasisExpansion {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hurwitz(&self, d: u32, k: u32) -> SymPoly {
        let mut c = self.cache.lock().expect("hurwitz cache poisoned");
        c.entry((d, k))
            .or_insert_with(|| zeta_even(k + d).expect("k + d >= 1").scale(&rint(binomial(2 * k + 2 * d - 1, 2 * k))))
            .clone()
    }

    /// `ζ_H(2d; w)` (or its principal part) up to `w^{max}`.
    pub fn series(&self, d: u32, max: i32, twist: bool) -> Laurent {
        let mut out = Laurent::new(max);
        out.add_term(-2 * d as i32, &SymPoly::one());
        if twist {
            let mut k = 0;
            while 2 * k as i32 <= max {
                out.add_term(2 * k as i32, &self.hurwitz(d, k));
                k += 1;
            }
        }
        out
    }
}

/// `W_{0,2}(±w, z)` at `z^{-e}`: `(e-1)(±w)^{e-2}`.
fn w02_at(e: u32, sign: i32, max: i32) -> Laurent {
    let mut out = Laurent::new(max);
    let m = e as i32 - 2;
    let s = if sign < 0 && m % 2 != 0 { -1 } else { 1 };
    out.add_term(m, &SymPoly::int(s * (e as i64 - 1)));
    out
}

struct Ctx<'a> {
    parity: ModelParity,
    inv: InvYSeries,
    twist: bool,
    hurwitz: &'a TwistedBasisExpansion,
    /// Extra room so that factor truncations never cut a product short.
    slack: i32,
    /// `ξ_b` series keyed by `(b, max)`.
    xi_cache: RefCell<BTreeMap<(u32, i32), Laurent>>,
    /// Stable factors at width `slack`, keyed by genus and sorted exponents.
    /// Factors only involve strictly lower levels, which are final when read.
    factor_cache: RefCell<BTreeMap<(u32, Vec<u32>), Laurent>>,
}

impl Ctx<'_> {
    fn xi(&self, b: u32, max: i32) -> Laurent {
        self.xi_cache
            .borrow_mut()
            .entry((b, max))
            .or_insert_with(|| self.hurwitz.series(b + 1, max, self.twist))
            .clone()
    }

    /// [`Ctx::stable_factor`] at width `slack`, memoised.
    fn factor(&self, t: &CorrTable, h: u32, exps: &[u32]) -> Laurent {
        let mut key = exps.to_vec();
        key.sort_unstable();
        if let Some(f) = self.factor_cache.borrow().get(&(h, key.clone())) {
            return f.clone();
        }
        let f = self.stable_factor(t, h, &key, self.slack);
        self.factor_cache.borrow_mut().insert((h, key), f.clone());
        f
    }

    /// `W_{h,1+|J|}(w; z_J)` at `Π z_j^{-e_j}` as a series in `w`.
    fn stable_factor(&self, t: &CorrTable, h: u32, exps: &[u32], max: i32) -> Laurent {
        let mut out = Laurent::new(max);
        let Some(j) = indices(exps) else {
            return out;
        };
        let Some(bound) = self.parity.degree_bound(h, j.len() + 1) else {
            return out;
        };
        let j_sum: u32 = j.iter().sum();
        for x in 0..=bound.saturating_sub(j_sum) {
            let mut key = j.clone();
            key.push(x);
            key.sort_unstable();
            if let Some(f) = t.get_sorted(h, &key) {
                for (e, v) in self.xi(x, max).terms() {
                    out.add_term(e, &(v * f));
                }
            }
        }
        out
    }
}

/// Indices `a` from z-exponents `2a+2`, or `None` if any exponent is odd.
fn indices(exps: &[u32]) -> Option<Vec<u32>> {
    exps.iter().map(|&e| (e >= 2 && e % 2 == 0).then(|| (e - 2) / 2)).collect()
}

/// The recursion numerator for first index `a1` and remaining z-exponents
/// `k`, truncated at `w^{max}`.
fn numerator(ctx: &Ctx, t: &CorrTable, g: u32, k: &[u32], max: i32) -> Result<Laurent> {
    let n = k.len() + 1;
    // Every residue is taken at `max ≤ 0`, so factors kept to `slack` suffice.
    let wide = ctx.slack;
    let mut out = Laurent::new(max);
    if (g, n) == (0, 3) {
        for (i, j) in [(0, 1), (1, 0)] {
            out.add(&w02_at(k[i], 1, wide).mul(&w02_at(k[j], -1, wide), max));
        }
        return Ok(out);
    }
    if (g, n) == (1, 1) {
        // W_{0,2}(w, -w) = ζ_H(2; 2w)
        let base = ctx.hurwitz.series(1, max, ctx.twist);
        for (e, v) in base.terms() {
            let two = Rat::from_integer(num_bigint::BigInt::from(2).pow(e.unsigned_abs()));
            out.add_term(e, &if e < 0 { v.scale(&(Rat::from_integer(1.into()) / two)) } else { v.scale(&two) });
        }
        return Ok(out);
    }
    // W_{g-1,n+1}(w, -w, z_K)
    if g >= 1 {
        if let (Some(kk), Some(bound)) = (indices(k), ctx.parity.degree_bound(g - 1, n + 1)) {
            let k_sum: u32 = kk.iter().sum();
            for x in 0..=bound.saturating_sub(k_sum) {
                for y in 0..=bound.saturating_sub(k_sum + x) {
                    let mut key = kk.clone();
                    key.push(x);
                    key.push(y);
                    key.sort_unstable();
                    if let Some(f) = t.get_sorted(g - 1, &key) {
                        let p = ctx.xi(x, wide).mul(&ctx.xi(y, wide).reflect(), max);
                        for (e, v) in p.terms() {
                            out.add_term(e, &(v * f));
                        }
                    }
                }
            }
        }
    }
    // Stable splits.
    let mut ks = k.to_vec();
    ks.sort_unstable();
    for (j, jc, mult) in sub_multisets(&ks) {
        for h in 0..=g {
            if !is_stable(h, j.len() + 1) || !is_stable(g - h, jc.len() + 1) {
                continue;
            }
            let left = ctx.factor(t, h, &j);
            if left.is_zero() {
                continue;
            }
            let right = ctx.factor(t, g - h, &jc).reflect();
            out.add(&left.mul(&right, max).scaled(&Rat::from_integer(mult.clone())));
        }
    }
    // Splits with one W_{0,2}(±w, z_m) factor.
    if is_stable(g, n - 1) {
        for m in 0..k.len() {
            let mut rest = k.to_vec();
            let e = rest.remove(m);
            let w = ctx.factor(t, g, &rest);
            if w.is_zero() {
                continue;
            }
            out.add(&w02_at(e, 1, wide).mul(&w.reflect(), max));
            out.add(&w.mul(&w02_at(e, -1, wide), max));
        }
    }
    Ok(out)
}

/// One correlator coefficient with first index `a1` and remaining
/// z-exponents `k` (`2a_i+2` for genuine entries; odd exponents are allowed
/// and must give zero).
fn entry(ctx: &Ctx, t: &CorrTable, g: u32, a1: u32, k: &[u32]) -> Result<SymPoly> {
    let n = k.len() + 1;
    if !is_stable(g, n) {
        return Err(Error::Unstable { g, n });
    }
    let emax = match ctx.parity {
        ModelParity::Bosonic => -2 * a1 as i32,
        ModelParity::Super => -2 * a1 as i32 - 2,
    };
    let num = numerator(ctx, t, g, k, emax)?;
    let mut acc = SymPoly::zero();
    for (e, v) in num.terms() {
        if e % 2 != 0 {
            return Err(Error::ParityLeak(e));
        }
        let l = ((emax - e) / 2) as i64;
        let s = ctx.inv.get(l)?;
        if !s.is_zero() {
            acc += &(&s * v);
        }
    }
    Ok(acc.scale(&rat(1, 2)))
}

fn recurse(model: &ModelSpec, level_max: u32, twist: bool) -> Result<CorrTable> {
    let parity = model.parity();
    let bound = index_bound(parity, level_max);
    let hurwitz = TwistedBasisExpansion::new();
    let ctx = Ctx {
        parity,
        inv: model.invert_y(4 * bound as usize + 8)?,
        twist,
        hurwitz: &hurwitz,
        slack: 4 * bound as i32 + 8,
        xi_cache: RefCell::default(),
        factor_cache: RefCell::default(),
    };
    let mut t = CorrTable::new(Basis::Z);
    for (g, n) in stable_pairs(level_max) {
        let Some(b) = parity.degree_bound(g, n) else {
            continue;
        };
        for a in multisets(n, b) {
            let k: Vec<u32> = a[1..].iter().map(|x| 2 * x + 2).collect();
            let v = entry(&ctx, &t, g, a[0], &k)?;
            t.insert(g, &a, v);
        }
    }
    Ok(t)
}

/// Correlator coefficients for all stable `(g, n)` with `2g-2+n ≤ level_max`.
pub fn ceo_recurse(model: &ModelSpec, level_max: u32) -> Result<CorrTable> {
    recurse(model, level_max, false)
}

/// Fully twist-eliminated coefficients `F^{(g)}[f^MV]_a` from the partially
/// twist-eliminated recursion.
pub fn twisted_ceo_recurse(model: &ModelSpec, level_max: u32) -> Result<CorrTable> {
    recurse(model, level_max, true)
}

/// Re-evaluates one coefficient from a finished table, with an arbitrary
/// first index and arbitrary remaining z-exponents. Used for symmetry and
/// parity audits.
pub fn ceo_entry(
    model: &ModelSpec,
    table: &CorrTable,
    twist: bool,
    g: u32,
    a1: u32,
    z_exps: &[u32],
) -> Result<SymPoly> {
    let hurwitz = TwistedBasisExpansion::new();
    let bound = table.entries().keys().flat_map(|(_, a)| a.iter().copied()).max().unwrap_or(0) + a1;
    let ctx = Ctx {
        parity: model.parity(),
        inv: model.invert_y(4 * bound as usize + 8)?,
        twist,
        hurwitz: &hurwitz,
        slack: 4 * bound as i32 + 8,
        xi_cache: RefCell::default(),
        factor_cache: RefCell::default(),
    };
    entry(&ctx, table, g, a1, z_exps)
}

/// Reinterprets correlator coefficients as volume coefficients.
pub fn laplace_bridge(c: &CorrTable) -> VolumeTable {
    let mut v = c.clone();
    v.basis = Basis::Length;
    v
}

/// Reinterprets volume coefficients as correlator coefficients.
pub fn laplace_bridge_inverse(v: &VolumeTable) -> CorrTable {
    let mut c = v.clone();
    c.basis = Basis::Z;
    c
}

/// Smallest index carrying a dilaton-leaf weight.
fn first_leaf(parity: ModelParity) -> u32 {
    match parity {
        ModelParity::Bosonic => 2,
        ModelParity::Super => 1,
    }
}

/// `F^{model(g)}_a = Σ_m (-1)^m/m! Σ_{b_1…b_m} Π γ_{b_j} F^{base(g)}_{a,b}`
/// for every sorted `a` of one `(g, n)`.
pub fn dilaton_leaf_eval(base: &CorrTable, model: &ModelSpec, g: u32, n: usize) -> Result<CorrTable> {
    if !is_stable(g, n) {
        return Err(Error::Unstable { g, n });
    }
    let parity = model.parity();
    let bmin = first_leaf(parity);
    let mut out = CorrTable::new(base.basis);
    let Some(bound) = parity.degree_bound(g, n) else {
        return Ok(out);
    };
    let computed = base.entries().keys().map(|(h, a)| level(*h, a.len())).max().unwrap_or(0);
    let gamma = model.model_shift(2 * bound + 2);
    for a in multisets(n, bound) {
        let a_sum: u32 = a.iter().sum();
        let mut acc = SymPoly::zero();
        let mut m = 0usize;
        while let Some(top) = parity.degree_bound(g, n + m) {
            if a_sum + bmin * m as u32 > top || (m > 0 && gamma.is_empty()) {
                break;
            }
            if level(g, n + m) > computed {
                return Err(Error::MissingEntry { g, a: a.clone() });
            }
            for b in multisets_from(m, bmin, top - a_sum) {
                let mut weight = if m.is_multiple_of(2) { SymPoly::one() } else { SymPoly::int(-1) };
                // (-1)^m/m! times the m!/Π mult! orderings of b
                let mut run = 1u32;
                for i in 0..b.len() {
                    weight = &weight * gamma.get(&b[i]).unwrap_or(&SymPoly::ZERO);
                    if i > 0 && b[i] == b[i - 1] {
                        run += 1;
                    } else {
                        run = 1;
                    }
                    weight = weight.scale(&rat(1, run as i64));
                }
                if weight.is_zero() {
                    continue;
                }
                let mut key = a.clone();
                key.extend_from_slice(&b);
                key.sort_unstable();
                if let Some(f) = base.get_sorted(g, &key) {
                    acc += &(&weight * f);
                }
            }
            m += 1;
        }
        out.insert(g, &a, acc);
    }
    Ok(out)
}

/// Model table via dilaton leaves on the Airy (bosonic) or Bessel (super)
/// correlators, untwisted or twisted, for `2g-2+n ≤ level_max`.
pub fn dilaton_leaf_table(model: &ModelSpec, level_max: u32, twist: bool) -> Result<CorrTable> {
    let parity = model.parity();
    let leafless = model.model_shift(2 * index_bound(parity, level_max) + 2).is_empty();
    let base_level = if leafless {
        level_max
    } else {
        stable_pairs(level_max)
            .into_iter()
            .filter_map(|(g, n)| {
                let b = parity.degree_bound(g, n)?;
                // each leaf raises the degree budget by at most one less than it uses
                let m = b;
                Some((level(g, n) + m as i64) as u32)
            })
            .max()
            .unwrap_or(level_max)
    };
    let base = recurse(&model.base(), base_level, twist)?;
    let mut out = CorrTable::new(Basis::Z);
    for (g, n) in stable_pairs(level_max) {
        for (a, v) in dilaton_leaf_eval(&base, model, g, n)?.entries().iter().map(|((_, a), v)| (a, v)) {
            out.insert(g, a, v.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abo::{model_table, twisted_model_table};

    fn sp(s: &str) -> SymPoly {
        SymPoly::parse(s).unwrap()
    }

    #[test]
    fn anchors() {
        let a = ceo_recurse(&ModelSpec::airy(), 3).unwrap();
        assert_eq!(a.get(0, &[0, 0, 0]), SymPoly::one());
        assert_eq!(a.get(1, &[1]), sp("1/8"));
        assert_eq!(a.get(1, &[0, 2]), sp("5/8"));
        assert_eq!(a.get(1, &[1, 1]), sp("3/8"));
        let b = ceo_recurse(&ModelSpec::bessel(), 5).unwrap();
        assert_eq!(b.get(3, &[2]), sp("225/1024"));
    }

    #[test]
    fn twisted_anchors() {
        let t = twisted_ceo_recurse(&ModelSpec::airy(), 2).unwrap();
        assert_eq!(t.get(1, &[0]), sp("P/12"));
        assert_eq!(t.get(1, &[1]), sp("1/8"));
        assert_eq!(t.get(0, &[0, 0, 0, 0]), sp("P/2"));
    }

    #[test]
    fn matches_coefficient_recursion() {
        for m in ModelSpec::registry() {
            let c = ceo_recurse(&m, 4).unwrap();
            let v = model_table(&m, 4).unwrap();
            assert!(laplace_bridge(&c).same_coefficients(&v), "{m}: {:?}", c.first_difference(&v));
            let ct = twisted_ceo_recurse(&m, 3).unwrap();
            let vt = twisted_model_table(&m, 3).unwrap();
            assert!(ct.same_coefficients(&vt), "{m} twisted: {:?}", ct.first_difference(&vt));
        }
    }

    #[test]
    fn dilaton_leaves_match() {
        let wp = dilaton_leaf_table(&ModelSpec::wp(), 2, false).unwrap();
        assert_eq!(wp.get(1, &[0]), sp("P*S/12"));
        let mp = dilaton_leaf_table(&ModelSpec::mp_sym(), 2, false).unwrap();
        assert_eq!(mp.get(0, &[0, 0, 0, 0]), sp("2*P*S*(1-Q)"));
        let airy = ceo_recurse(&ModelSpec::airy(), 3).unwrap();
        let same = dilaton_leaf_table(&ModelSpec::airy(), 3, false).unwrap();
        assert!(same.same_coefficients(&airy));
        for m in [ModelSpec::swp(), ModelSpec::smp_sym()] {
            let d = dilaton_leaf_table(&m, 4, false).unwrap();
            assert!(d.same_coefficients(&model_table(&m, 4).unwrap()), "{m}");
        }
    }

    #[test]
    fn odd_exponents_vanish() {
        let m = ModelSpec::wp();
        let t = ceo_recurse(&m, 4).unwrap();
        for (g, a1, k) in [(0u32, 0u32, vec![3u32, 2, 2]), (1, 1, vec![3]), (1, 0, vec![5, 2]), (2, 0, vec![3, 3])] {
            assert!(ceo_entry(&m, &t, false, g, a1, &k).unwrap().is_zero(), "{g} {a1} {k:?}");
            assert!(ceo_entry(&m, &t, true, g, a1, &k).unwrap().is_zero());
        }
    }

    #[test]
    fn bridge_round_trip() {
        let c = ceo_recurse(&ModelSpec::airy(), 2).unwrap();
        assert_eq!(laplace_bridge_inverse(&laplace_bridge(&c)), c);
        let e = CorrTable::new(Basis::Z);
        assert!(laplace_bridge(&e).is_empty());
        let v = laplace_bridge(&ceo_recurse(&ModelSpec::wp(), 2).unwrap());
        let p = crate::abo::assemble_polynomial(&v, 0, 4).unwrap();
        assert_eq!(p.subst(&ModelSpec::s_one()), sp("2*P + (l1+l2+l3+l4)/2"));
    }

    #[test]
    fn twist_with_zero_weights_is_untwisted() {
        let h = TwistedBasisExpansion::new();
        assert_eq!(h.series(2, 6, false).terms().count(), 1);
        assert_eq!(h.hurwitz(1, 0), sp("P/6"));
        assert_eq!(h.hurwitz(1, 1), sp("3*P^2/90"));
    }

    #[test]
    fn truncation_is_stable() {
        let m = ModelSpec::mp_sym();
        let t = twisted_ceo_recurse(&m, 3).unwrap();
        let u = twisted_ceo_recurse(&m, 4).unwrap().restrict_level(3);
        assert_eq!(t, u);
    }
}

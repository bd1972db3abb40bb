//! Generating functions `Z(ħ; t)` and `log Z`, the differential operators
//! acting on them (Virasoro constraints, cut-and-join, the twist group
//! action) and the time shifts that carry Airy/Bessel to the other models.
//!
//! Every monomial `ħ^{2h} t_{a_1}⋯t_{a_n}` is graded by `2h + n`, which is
//! `2g - 2 + n` for a free-energy term. Coefficients are stored as plain
//! monomial coefficients in both modes; in `LogZ` mode the accessor
//! [`GenFun::entry`] converts to the `F^{(g)}_{a}·t_{a_1}⋯t_{a_n}/n!`
//! convention, which differs by `Π_a m_a!` for multiplicities `m_a`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;

use crate::abo::{mv_twist_weights, InitialData, TwistWeights};
use crate::error::{Error, Result};
use crate::exact::{binomial, factorial, rat, rint, Rat, SymPoly};
use crate::models::ModelSpec;
use crate::table::{stable_pairs, Basis, ModelParity, VolumeTable};

/// `(ħ² power, sorted t-indices)`.
pub type Monomial = (i32, Vec<u32>);

fn grade(m: &Monomial) -> i64 {
    2 * m.0 as i64 + m.1.len() as i64
}

fn merge(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v.sort_unstable();
    v
}

fn groups(m: &[u32]) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = Vec::new();
    for &x in m {
        match out.last_mut() {
            Some((v, c)) if *v == x => *c += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

/// `Π_a m_a!` for the multiplicities of a sorted multiset.
fn mult_factorial(m: &[u32]) -> BigInt {
    groups(m).iter().map(|&(_, c)| factorial(c)).product()
}

/// Sub-multisets `D ⊆ m` with `|D| ≤ k`, the complement, and the falling
/// factorial `Π m_a!/(m_a - d_a)!` that `∂^D` produces.
fn derivative_splits(m: &[u32], k: usize) -> Vec<(Vec<u32>, Vec<u32>, BigInt)> {
    fn rec(
        gs: &[(u32, u32)],
        i: usize,
        left: usize,
        d: &mut Vec<u32>,
        factor: BigInt,
        out: &mut Vec<(Vec<u32>, BigInt)>,
    ) {
        if i == gs.len() {
            out.push((d.clone(), factor));
            return;
        }
        let (v, c) = gs[i];
        let mut f = factor;
        for j in 0..=(c as usize).min(left) {
            if j > 0 {
                f *= BigInt::from(c - j as u32 + 1);
                d.push(v);
            }
            rec(gs, i + 1, left - j, d, f.clone(), out);
        }
        for _ in 0..(c as usize).min(left) {
            d.pop();
        }
    }
    let gs = groups(m);
    let mut raw = Vec::new();
    rec(&gs, 0, k, &mut Vec::new(), BigInt::one(), &mut raw);
    raw.into_iter()
        .map(|(d, f)| {
            let mut rest = Vec::with_capacity(m.len() - d.len());
            let mut di = d.iter().peekable();
            for &x in m {
                if di.peek() == Some(&&x) {
                    di.next();
                } else {
                    rest.push(x);
                }
            }
            (d, rest, f)
        })
        .collect()
}

type Terms = BTreeMap<Monomial, SymPoly>;

fn add_into(map: &mut Terms, key: Monomial, v: SymPoly) {
    if v.is_zero() {
        return;
    }
    match map.entry(key) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(v);
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            *e.get_mut() += &v;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

fn mul_terms(a: &Terms, b: &Terms, out: &mut Terms, scale: &Rat) {
    for ((ha, ma), ca) in a {
        let ca = ca.scale(scale);
        for ((hb, mb), cb) in b {
            add_into(out, (ha + hb, merge(ma, mb)), &ca * cb);
        }
    }
}

/// Which object a [`GenFun`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    LogZ,
    Z,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::LogZ => "logZ",
            Mode::Z => "Z",
        }
    }
}

/// Truncated generating function: every monomial of grade `≤ level_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenFun {
    mode: Mode,
    level_max: u32,
    terms: Terms,
}

impl GenFun {
    pub fn new(mode: Mode, level_max: u32) -> Self {
        Self { mode, level_max, terms: BTreeMap::new() }
    }

    /// `Z = 1`.
    pub fn one(level_max: u32) -> Self {
        let mut z = Self::new(Mode::Z, level_max);
        z.terms.insert((0, Vec::new()), SymPoly::one());
        z
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn level_max(&self) -> u32 {
        self.level_max
    }

    fn expect(&self, mode: Mode) -> Result<()> {
        if self.mode == mode {
            Ok(())
        } else {
            Err(Error::WrongMode { expected: mode.name(), found: self.mode.name() })
        }
    }

    /// Plain coefficient of `ħ^{2h} Π t`, in either mode.
    pub fn coeff(&self, h: i32, t: &[u32]) -> SymPoly {
        let mut key = t.to_vec();
        key.sort_unstable();
        self.terms.get(&(h, key)).cloned().unwrap_or_default()
    }

    /// Overwrite one plain coefficient; monomials above the truncation are ignored.
    pub fn set_coeff(&mut self, h: i32, t: &[u32], v: SymPoly) {
        let mut key = t.to_vec();
        key.sort_unstable();
        let key = (h, key);
        if grade(&key) > self.level_max as i64 {
            return;
        }
        if v.is_zero() {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, v);
        }
    }

    /// All nonzero plain coefficients.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &SymPoly)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest t-index that occurs.
    pub fn max_index(&self) -> u32 {
        self.terms.keys().flat_map(|(_, m)| m.last().copied()).max().unwrap_or(0)
    }

    fn part(&self, k: i64) -> Terms {
        self.terms.iter().filter(|(m, _)| grade(m) == k).map(|(m, v)| (m.clone(), v.clone())).collect()
    }

    pub fn truncate(&self, level_max: u32) -> GenFun {
        let level_max = level_max.min(self.level_max);
        GenFun {
            mode: self.mode,
            level_max,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| grade(m) <= level_max as i64)
                .map(|(m, v)| (m.clone(), v.clone()))
                .collect(),
        }
    }

    /// `log Z` with coefficients taken from a volume table.
    pub fn from_table(table: &VolumeTable, level_max: u32) -> GenFun {
        let mut f = GenFun::new(Mode::LogZ, level_max);
        for ((g, a), v) in table.restrict_level(level_max as i64).entries() {
            let plain = v.scale(&(Rat::one() / rint(mult_factorial(a))));
            f.terms.insert((*g as i32 - 1, a.clone()), plain);
        }
        f
    }

    /// `F^{(g)}_{a}` of a `LogZ` generating function.
    pub fn entry(&self, g: u32, a: &[u32]) -> Result<SymPoly> {
        self.expect(Mode::LogZ)?;
        let mut key = a.to_vec();
        key.sort_unstable();
        let m = rint(mult_factorial(&key));
        Ok(self.coeff(g as i32 - 1, &key).scale(&m))
    }

    /// All free-energy coefficients as a table.
    pub fn to_table(&self) -> Result<VolumeTable> {
        self.expect(Mode::LogZ)?;
        let mut t = VolumeTable::new(Basis::Length);
        // Constant terms `F_g(0)` have no table entry.
        for ((h, a), v) in self.terms.iter().filter(|((_, a), _)| !a.is_empty()) {
            if *h < -1 {
                return Err(Error::Invalid(format!("log Z term with ħ^{}", 2 * h)));
            }
            t.insert((h + 1) as u32, a, v.scale(&rint(mult_factorial(a))));
        }
        Ok(t)
    }

    /// `Z = exp(log Z)` graded level by level: `k Z_k = Σ_j j F_j Z_{k-j}`.
    pub fn exp(&self) -> Result<GenFun> {
        self.expect(Mode::LogZ)?;
        if self.terms.keys().any(|m| grade(m) <= 0) {
            return Err(Error::Invalid("log Z must have positive grade".into()));
        }
        let k_max = self.level_max as i64;
        let f: Vec<Terms> = (0..=k_max).map(|k| self.part(k)).collect();
        let mut z: Vec<Terms> = vec![BTreeMap::from([((0, Vec::new()), SymPoly::one())])];
        for k in 1..=k_max {
            let mut zk = Terms::new();
            for j in 1..=k {
                mul_terms(&f[j as usize], &z[(k - j) as usize], &mut zk, &rat(j, k));
            }
            z.push(zk);
        }
        Ok(GenFun { mode: Mode::Z, level_max: self.level_max, terms: z.into_iter().flatten().collect() })
    }

    /// `log Z`, requiring `Z = 1 + (positive grade)`.
    pub fn log(&self) -> Result<GenFun> {
        self.expect(Mode::Z)?;
        let unit = BTreeMap::from([((0, Vec::new()), SymPoly::one())]);
        if self.terms.keys().any(|m| grade(m) < 0) || self.part(0) != unit {
            return Err(Error::NonUnitLeading("grade-0 part of Z".into()));
        }
        let k_max = self.level_max as i64;
        let z: Vec<Terms> = (0..=k_max).map(|k| self.part(k)).collect();
        let mut f: Vec<Terms> = vec![Terms::new()];
        for k in 1..=k_max {
            let mut fk = z[k as usize].clone();
            for j in 1..k {
                mul_terms(&f[j as usize], &z[(k - j) as usize], &mut fk, &rat(-j, k));
            }
            f.push(fk);
        }
        Ok(GenFun { mode: Mode::LogZ, level_max: self.level_max, terms: f.into_iter().flatten().collect() })
    }

    /// `F_g(t)` written out, e.g. `t0^3/6 + t0^3*t1/2 + …`.
    pub fn render_free_energy(&self, g: u32) -> Result<String> {
        self.expect(Mode::LogZ)?;
        let h = g as i32 - 1;
        let mut rows: Vec<(&Vec<u32>, &SymPoly)> =
            self.terms.iter().filter(|((hh, _), _)| *hh == h).map(|((_, m), v)| (m, v)).collect();
        rows.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then(a.0.cmp(b.0)));
        let mut out = String::new();
        for (m, v) in rows {
            let vars = groups(m)
                .iter()
                .map(|&(a, c)| if c == 1 { format!("t{a}") } else { format!("t{a}^{c}") })
                .collect::<Vec<_>>()
                .join("*");
            let (neg, body) = match v.as_constant() {
                Some(c) => {
                    let neg = c < Rat::from_integer(0.into());
                    let c = if neg { -c } else { c };
                    let num = c.numer().clone();
                    let den = c.denom().clone();
                    let mut s = if num.is_one() { vars } else { format!("{num}*{vars}") };
                    if !den.is_one() {
                        s = format!("{s}/{den}");
                    }
                    (neg, s)
                }
                None => (false, format!("({})*{vars}", v.render())),
            };
            if out.is_empty() {
                out = if neg { format!("-{body}") } else { body };
            } else {
                out.push_str(if neg { " - " } else { " + " });
                out.push_str(&body);
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        Ok(out)
    }
}

/// One term `coeff · ħ^{2 hbar2} · Π t · Π ∂`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpTerm {
    pub coeff: SymPoly,
    pub hbar2: i32,
    pub t: Vec<u32>,
    pub d: Vec<u32>,
}

impl OpTerm {
    /// A multiple of the identity.
    pub fn is_constant(&self) -> bool {
        self.t.is_empty() && self.d.is_empty()
    }

    /// Change of grade produced by this term.
    pub fn grade_shift(&self) -> i64 {
        2 * self.hbar2 as i64 + self.t.len() as i64 - self.d.len() as i64
    }
}

/// Differential operator in the `t_a` with polynomial coefficients; like
/// terms are merged so equal operators compare equal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiffOperator {
    terms: BTreeMap<(i32, Vec<u32>, Vec<u32>), SymPoly>,
}

impl DiffOperator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, coeff: SymPoly, hbar2: i32, t: &[u32], d: &[u32]) {
        let (mut t, mut d) = (t.to_vec(), d.to_vec());
        t.sort_unstable();
        d.sort_unstable();
        let slot = self.terms.entry((hbar2, t.clone(), d.clone())).or_default();
        *slot += &coeff;
        if slot.is_zero() {
            self.terms.remove(&(hbar2, t, d));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = OpTerm> + '_ {
        self.terms.iter().map(|((h, t, d), c)| OpTerm { coeff: c.clone(), hbar2: *h, t: t.clone(), d: d.clone() })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Constant (multiplication-by-scalar) part.
    pub fn constant(&self) -> SymPoly {
        self.terms.get(&(0, Vec::new(), Vec::new())).cloned().unwrap_or_default()
    }

    /// Coefficient of one term.
    pub fn term(&self, hbar2: i32, t: &[u32], d: &[u32]) -> SymPoly {
        let (mut t, mut d) = (t.to_vec(), d.to_vec());
        t.sort_unstable();
        d.sort_unstable();
        self.terms.get(&(hbar2, t, d)).cloned().unwrap_or_default()
    }

    /// Action on plain-coefficient maps; results with grade above `cap`
    /// are dropped and counted.
    fn act(&self, f: &Terms, cap: Option<i64>) -> (Terms, usize) {
        let mut by_d: HashMap<&[u32], Vec<(i32, &[u32], &SymPoly)>> = HashMap::new();
        let mut max_d = 0;
        for ((h, t, d), c) in &self.terms {
            by_d.entry(d.as_slice()).or_default().push((*h, t.as_slice(), c));
            max_d = max_d.max(d.len());
        }
        let mut out = Terms::new();
        let mut dropped = 0;
        for ((h, m), c) in f {
            for (d, rest, factor) in derivative_splits(m, max_d) {
                let Some(list) = by_d.get(d.as_slice()) else { continue };
                let base = c.scale(&rint(factor));
                for &(oh, ot, oc) in list {
                    let key = (h + oh, merge(&rest, ot));
                    if cap.is_some_and(|cap| grade(&key) > cap) {
                        dropped += 1;
                        continue;
                    }
                    add_into(&mut out, key, &base * oc);
                }
            }
        }
        (out, dropped)
    }
}

/// Result of [`apply_operator`].
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub result: GenFun,
    /// Term contributions dropped for exceeding the truncation.
    pub dropped: usize,
}

/// Exact action of `op` on a `Z`-mode function, truncated at its level.
pub fn apply_operator(op: &DiffOperator, f: &GenFun) -> Result<Applied> {
    f.expect(Mode::Z)?;
    let (terms, dropped) = op.act(&f.terms, Some(f.level_max as i64));
    Ok(Applied { result: GenFun { mode: Mode::Z, level_max: f.level_max, terms }, dropped })
}

/// The two base models with a cut-and-join description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKind {
    Airy,
    Bessel,
}

impl BaseKind {
    pub fn parity(self) -> ModelParity {
        match self {
            BaseKind::Airy => ModelParity::Bosonic,
            BaseKind::Bessel => ModelParity::Super,
        }
    }

    pub fn for_parity(p: ModelParity) -> Self {
        match p {
            ModelParity::Bosonic => BaseKind::Airy,
            ModelParity::Super => BaseKind::Bessel,
        }
    }

    /// Euler weight of `t_a`; `Ŵ` raises it by exactly one.
    pub fn weight(self, a: u32) -> Rat {
        match self {
            BaseKind::Airy => rat(2 * a as i64 + 1, 3),
            BaseKind::Bessel => rint(2 * a + 1),
        }
    }

    pub fn spec(self) -> ModelSpec {
        match self {
            BaseKind::Airy => ModelSpec::airy(),
            BaseKind::Bessel => ModelSpec::bessel(),
        }
    }
}

/// Index cutoff sufficient for every monomial up to `level`.
pub fn index_cutoff(level: u32) -> u32 {
    3 * level + 2
}

/// Cut-and-join operator `Ŵ` with `∂`-indices `≤ index_max`.
pub fn cut_and_join_build(kind: BaseKind, index_max: u32) -> DiffOperator {
    let mut w = DiffOperator::new();
    let odd = |a: u32| 2 * a as i64 + 1;
    match kind {
        BaseKind::Airy => {
            for a in 0..=index_max {
                for b in 0..=index_max {
                    if a + b >= 1 && a + b - 1 <= index_max {
                        w.add_term(SymPoly::constant(rat(odd(a) * odd(b), 3)), 0, &[a, b], &[a + b - 1]);
                    }
                    let c = rat(2 * (a + b) as i64 + 5, 6);
                    w.add_term(SymPoly::constant(c), 1, &[a + b + 2], &[a, b]);
                }
            }
            w.add_term(SymPoly::constant(rat(1, 6)), -1, &[0, 0, 0], &[]);
            w.add_term(SymPoly::constant(rat(1, 8)), 0, &[1], &[]);
        }
        BaseKind::Bessel => {
            for a in 0..=index_max {
                for b in 0..=index_max {
                    if a + b <= index_max {
                        w.add_term(SymPoly::int(odd(a) * odd(b)), 0, &[a, b], &[a + b]);
                    }
                    let c = rat(2 * (a + b) as i64 + 3, 2);
                    w.add_term(SymPoly::constant(c), 1, &[a + b + 1], &[a, b]);
                }
            }
            w.add_term(SymPoly::constant(rat(1, 8)), 0, &[0], &[]);
        }
    }
    w
}

/// `Z_k = Ŵ Z_{k-1}/k` for `k ≤ k_max`, returned in `Z` mode.
pub fn cj_iterate(kind: BaseKind, k_max: u32) -> Result<GenFun> {
    if k_max == 0 {
        return Err(Error::Invalid("cut-and-join needs k_max >= 1".into()));
    }
    let w = cut_and_join_build(kind, index_cutoff(k_max));
    let mut z = GenFun::one(k_max);
    let mut prev: Terms = z.terms.clone();
    for k in 1..=k_max {
        let (next, _) = w.act(&prev, Some(k as i64));
        let inv = rat(1, k as i64);
        prev = next.into_iter().map(|(m, v)| (m, v.scale(&inv))).collect();
        z.terms.extend(prev.iter().map(|(m, v)| (m.clone(), v.clone())));
    }
    Ok(z)
}

/// Source of Virasoro operators.
#[derive(Debug, Clone, Copy)]
pub enum VirasoroKind<'a> {
    Airy,
    Bessel,
    /// Any initial data, through `L̂_k = -½∂_j + (1/4ħ²)ΣA^j tt + ½ΣB^j t∂ + (ħ²/4)ΣC^j ∂∂ + ½D^j`
    /// with `j = k+1` (bosonic) or `j = k` (super).
    Generic(&'a InitialData),
}

/// `L̂_k` with all `t`- and `∂`-indices of the quadratic parts `≤ index_max`.
pub fn virasoro_build(kind: VirasoroKind<'_>, k: i32, index_max: u32) -> Result<DiffOperator> {
    let mut l = DiffOperator::new();
    let half = SymPoly::constant(rat(1, 2));
    let quarter = SymPoly::constant(rat(1, 4));
    let explicit = |l: &mut DiffOperator, shift: i32| {
        // Shared shape of the Airy and Bessel operators.
        for a in 0..=index_max as i32 {
            let b = a + shift;
            if (0..=index_max as i32).contains(&b) {
                l.add_term(SymPoly::constant(rat(2 * a as i64 + 1, 2)), 0, &[a as u32], &[b as u32]);
            }
        }
        for a in 0..shift.max(0) {
            l.add_term(quarter.clone(), 1, &[], &[a as u32, (shift - 1 - a) as u32]);
        }
        if shift == 0 {
            l.add_term(SymPoly::constant(rat(1, 16)), 0, &[], &[]);
        }
    };
    match kind {
        VirasoroKind::Airy => {
            if k < -1 {
                return Err(Error::VirasoroIndex(k));
            }
            l.add_term(-half.clone(), 0, &[], &[(k + 1) as u32]);
            explicit(&mut l, k);
            if k == -1 {
                l.add_term(quarter.clone(), -1, &[0, 0], &[]);
            }
        }
        VirasoroKind::Bessel => {
            if k < 0 {
                return Err(Error::VirasoroIndex(k));
            }
            l.add_term(-half.clone(), 0, &[], &[k as u32]);
            explicit(&mut l, k);
        }
        VirasoroKind::Generic(data) => {
            let j = match data.parity {
                ModelParity::Bosonic => k + 1,
                ModelParity::Super => k,
            };
            if j < 0 {
                return Err(Error::VirasoroIndex(k));
            }
            let j = j as u32;
            l.add_term(-half.clone(), 0, &[], &[j]);
            for (&(a1, a, b), v) in data.a_entries() {
                if a1 == j && a <= index_max && b <= index_max {
                    l.add_term(v * &quarter, -1, &[a, b], &[]);
                }
            }
            for a in 0..=index_max {
                for b in 0..=index_max {
                    let bv = data.b(j, a, b)?;
                    if !bv.is_zero() {
                        l.add_term(bv * &half, 0, &[a], &[b]);
                    }
                    let cv = data.c(j, a, b)?;
                    if !cv.is_zero() {
                        l.add_term(cv * &quarter, 1, &[], &[a, b]);
                    }
                }
            }
            l.add_term(data.d(j)? * &half, 0, &[], &[]);
        }
    }
    Ok(l)
}

/// A nonzero coefficient of `L̂_k Z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub k: i32,
    pub hbar2: i32,
    pub t: Vec<u32>,
    pub value: String,
}

/// A monomial on which `[L̂_k, L̂_ℓ] ≠ (k-ℓ)L̂_{k+ℓ}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorFailure {
    pub k: i32,
    pub l: i32,
    pub hbar2: i32,
    pub t: Vec<u32>,
}

/// Outcome of [`virasoro_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VirasoroReport {
    pub operators: Vec<i32>,
    /// Residuals are complete for grades `≤ levels_checked`.
    pub levels_checked: u32,
    pub residuals: Vec<Residual>,
    pub commutator_pairs: usize,
    pub span_size: usize,
    pub commutator_failures: Vec<CommutatorFailure>,
}

impl VirasoroReport {
    pub fn passed(&self) -> bool {
        self.residuals.is_empty() && self.commutator_failures.is_empty()
    }
}

/// Grade of the monomials used to test commutators.
const SPAN_LEVEL: i64 = 3;

/// Checks `L̂_k Z = 0` at every grade `≤ level_max` that `Z` determines,
/// and `[L̂_k, L̂_ℓ] = (k-ℓ)L̂_{k+ℓ}` on the low-grade monomials of `Z`
/// whenever `L̂_{k+ℓ}` is among `ops`.
pub fn virasoro_check(z: &GenFun, ops: &[(i32, DiffOperator)], level_max: u32) -> Result<VirasoroReport> {
    z.expect(Mode::Z)?;
    let levels = level_max.min(z.level_max.saturating_sub(1));
    let mut residuals = Vec::new();
    for (k, op) in ops {
        let (r, _) = op.act(&z.terms, Some(levels as i64));
        residuals.extend(r.into_iter().map(|((h, t), v)| Residual { k: *k, hbar2: h, t, value: v.render() }));
    }
    let span: Vec<Monomial> = z.terms.keys().filter(|m| grade(m) <= SPAN_LEVEL.min(levels as i64)).cloned().collect();
    let by_k: BTreeMap<i32, &DiffOperator> = ops.iter().map(|(k, o)| (*k, o)).collect();
    let mut pairs = 0;
    let mut failures = Vec::new();
    for (&k, lk) in &by_k {
        for (&l, ll) in by_k.range(k + 1..) {
            let Some(lkl) = by_k.get(&(k + l)) else { continue };
            pairs += 1;
            for m in &span {
                let unit: Terms = BTreeMap::from([(m.clone(), SymPoly::one())]);
                let (a, _) = ll.act(&unit, None);
                let (ka, _) = lk.act(&a, None);
                let (b, _) = lk.act(&unit, None);
                let (lb, _) = ll.act(&b, None);
                let (c, _) = lkl.act(&unit, None);
                let mut diff = ka;
                for (key, v) in lb {
                    add_into(&mut diff, key, -v);
                }
                let kl = rint(k - l);
                for (key, v) in c {
                    add_into(&mut diff, key, -v.scale(&kl));
                }
                if !diff.is_empty() {
                    failures.push(CommutatorFailure { k, l, hbar2: m.0, t: m.1.clone() });
                }
            }
        }
    }
    Ok(VirasoroReport {
        operators: ops.iter().map(|(k, _)| *k).collect(),
        levels_checked: levels,
        residuals,
        commutator_pairs: pairs,
        span_size: span.len(),
        commutator_failures: failures,
    })
}

/// `Δ = (ħ²/2) Σ_{a,b ≤ index_max} u_{a,b} ∂_a ∂_b`.
pub fn twist_laplacian(u: &TwistWeights, index_max: u32) -> Result<DiffOperator> {
    let mut op = DiffOperator::new();
    for a in 0..=index_max {
        for b in a..=index_max {
            let w = u.get(a, b)?;
            if w.is_zero() {
                continue;
            }
            let c = if a == b { w.scale(&rat(1, 2)) } else { w.clone() };
            op.add_term(c, 1, &[], &[a, b]);
        }
    }
    Ok(op)
}

fn exp_action(delta: &DiffOperator, f: &Terms) -> Terms {
    let mut out = f.clone();
    let mut term = f.clone();
    let mut n = 1i64;
    while !term.is_empty() {
        let (next, _) = delta.act(&term, None);
        term = next.into_iter().map(|(m, v)| (m, v.scale(&rat(1, n)))).collect();
        for (m, v) in &term {
            add_into(&mut out, m.clone(), v.clone());
        }
        n += 1;
    }
    out
}

/// `Z[f] = exp((ħ²/2) Σ u_{a,b} ∂_a∂_b) Z`. The exponent preserves grade,
/// so the series terminates on each truncated `Z`.
pub fn group_action_twist(z: &GenFun, u: &TwistWeights) -> Result<GenFun> {
    z.expect(Mode::Z)?;
    let delta = twist_laplacian(u, z.max_index())?;
    Ok(GenFun { mode: Mode::Z, level_max: z.level_max, terms: exp_action(&delta, &z.terms) })
}

/// Checks `L̂[f] Û m = Û L̂ m` on each monomial, returning the failures.
pub fn conjugation_failures(
    op: &DiffOperator,
    twisted: &DiffOperator,
    u: &TwistWeights,
    span: &[Monomial],
    index_max: u32,
) -> Result<Vec<Monomial>> {
    let delta = twist_laplacian(u, index_max)?;
    let mut bad = Vec::new();
    for m in span {
        let unit: Terms = BTreeMap::from([(m.clone(), SymPoly::one())]);
        let (lhs, _) = twisted.act(&exp_action(&delta, &unit), None);
        let (lm, _) = op.act(&unit, None);
        if lhs != exp_action(&delta, &lm) {
            bad.push(m.clone());
        }
    }
    Ok(bad)
}

/// `t_a → t_a - γ_a` on a `LogZ` function, keeping output grades `≤ level_out`.
pub fn shift_genfun(f: &GenFun, gamma: &BTreeMap<u32, SymPoly>, level_out: u32) -> Result<GenFun> {
    f.expect(Mode::LogZ)?;
    let mut out = GenFun::new(Mode::LogZ, level_out);
    for ((h, m), c) in &f.terms {
        let (shifted, fixed): (Vec<(u32, u32)>, Vec<(u32, u32)>) =
            groups(m).into_iter().partition(|(a, _)| gamma.contains_key(a));
        let fixed: Vec<u32> = fixed.iter().flat_map(|&(a, k)| std::iter::repeat_n(a, k as usize)).collect();
        let base = 2 * *h as i64 + fixed.len() as i64;
        if base > level_out as i64 {
            continue;
        }
        // Keep `keep_b ≤ count_b` copies of each shifted index.
        let mut keep = vec![0u32; shifted.len()];
        loop {
            let kept: u32 = keep.iter().sum();
            let g = base + kept as i64;
            // Unstable and t-independent pieces produced by the shift are dropped.
            if g >= 1 && g <= level_out as i64 && !(fixed.is_empty() && kept == 0) {
                let mut coeff = c.clone();
                let mut idx = fixed.clone();
                for (&(a, cnt), &k) in shifted.iter().zip(&keep) {
                    let r = cnt - k;
                    if r > 0 {
                        let g = (-&gamma[&a]).pow(r);
                        coeff = (&coeff * &g).scale(&rint(binomial(cnt, r)));
                    }
                    idx.extend(std::iter::repeat_n(a, k as usize));
                }
                idx.sort_unstable();
                add_into(&mut out.terms, (*h, idx), coeff);
            }
            let mut i = 0;
            while i < keep.len() && keep[i] == shifted[i].1 {
                keep[i] = 0;
                i += 1;
            }
            if i == keep.len() {
                break;
            }
            keep[i] += 1;
        }
    }
    Ok(out)
}

/// Grade of the base `log Z` needed so that shifting determines every
/// entry up to `level`: each removed `t_a` costs at least one unit of `|a|`.
pub fn shift_base_level(parity: ModelParity, level: u32) -> u32 {
    stable_pairs(level)
        .into_iter()
        .filter_map(|(g, n)| parity.degree_bound(g, n).map(|b| crate::table::level(g, n) as u32 + b))
        .max()
        .unwrap_or(level)
}

/// Free energies of a model by shifting the Airy or Bessel `log Z`.
pub fn model_table_via_shift(model: &ModelSpec, level: u32) -> Result<VolumeTable> {
    let kind = BaseKind::for_parity(model.parity());
    let base_level = shift_base_level(model.parity(), level);
    let base = cj_iterate(kind, base_level)?.log()?;
    let gamma = model.model_shift(index_cutoff(base_level));
    shift_genfun(&base, &gamma, level)?.to_table()
}

/// Masur-Veech twisted free energies by the group action on the model's `Z`.
pub fn twisted_table_via_group_action(model: &ModelSpec, level: u32) -> Result<VolumeTable> {
    let kind = BaseKind::for_parity(model.parity());
    let z = if model.base() == *model {
        cj_iterate(kind, level)?
    } else {
        GenFun::from_table(&model_table_via_shift(model, level)?, level).exp()?
    };
    let u = mv_twist_weights(2 * z.max_index() + 2);
    group_action_twist(&z, &u)?.log()?.to_table()
}

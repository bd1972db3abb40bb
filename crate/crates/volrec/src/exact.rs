//! Exact arithmetic: big rationals, sparse polynomials over the formal
//! generators `P` (= π²), `S` (= s), `Q` (= 1/p²) and `l1, l2, …` (= L_i²),
//! and truncated one-variable series of fixed parity.
//!
//! Everything here is pure and immutable once built.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in lowest terms with positive denominator.
pub type Rat = BigRational;

/// `n/d` as a rational. Panics on `d == 0`; use [`rat_arith`] for checked division.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as a rational.
pub fn rint<T: Into<BigInt>>(n: T) -> Rat {
    Rat::from_integer(n.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Checked rational arithmetic.
pub fn rat_arith(a: &Rat, b: &Rat, op: RatOp) -> Result<Rat> {
    Ok(match op {
        RatOp::Add => a + b,
        RatOp::Sub => a - b,
        RatOp::Mul => a * b,
        RatOp::Div => {
            if b.is_zero() {
                return Err(Error::DivisionByZero);
            }
            a / b
        }
    })
}

/// `n!` as a big integer.
pub fn factorial(n: u32) -> BigInt {
    static CACHE: OnceLock<Mutex<Vec<BigInt>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![BigInt::one()]));
    let mut c = cache.lock().expect("factorial cache poisoned");
    while c.len() <= n as usize {
        let k = c.len();
        let next = &c[k - 1] * BigInt::from(k);
        c.push(next);
    }
    c[n as usize].clone()
}

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Double factorial with `(-1)!! = 0!! = 1`.
pub fn double_factorial(n: i64) -> BigInt {
    let mut acc = BigInt::one();
    let mut k = n;
    while k > 1 {
        acc *= BigInt::from(k);
        k -= 2;
    }
    acc
}

/// Bernoulli number `B_m` for even `m`.
pub fn bernoulli(m: u32) -> Result<Rat> {
    if m % 2 == 1 {
        return Err(Error::OddBernoulli(m));
    }
    static CACHE: OnceLock<Mutex<Vec<Rat>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![Rat::one()]));
    let mut b = cache.lock().expect("bernoulli cache poisoned");
    // sum_{j=0}^{k} C(k+1, j) B_j = 0, all indices (odd ones included).
    while b.len() <= m as usize {
        let k = b.len() as u32;
        let mut acc = Rat::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += bj * rint(binomial(k + 1, j as u32));
        }
        let bk = -acc / rint(BigInt::from(k + 1));
        b.push(bk);
    }
    Ok(b[m as usize].clone())
}

/// `ζ(2d)` as `c · P^d` with `c` rational.
pub fn zeta_even(d: u32) -> Result<SymPoly> {
    Ok(SymPoly::monomial(&[(Gen::P, d)], zeta_even_coeff(d)?))
}

/// The rational `c` in `ζ(2d) = c · π^{2d}`.
pub fn zeta_even_coeff(d: u32) -> Result<Rat> {
    if d == 0 {
        return Err(Error::ZetaIndex(d));
    }
    let b = bernoulli(2 * d)?;
    let sign = if d % 2 == 1 { Rat::one() } else { -Rat::one() };
    let two_pow = rint(BigInt::from(2).pow(2 * d));
    Ok(sign * b * two_pow / (rint(factorial(2 * d)) * rint(2)))
}

/// A formal generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gen {
    /// π²
    P,
    /// the deformation parameter s
    S,
    /// 1/p²
    Q,
    /// L_i², indexed from 1
    L(u32),
}

impl Gen {
    pub fn index(self) -> usize {
        match self {
            Gen::P => 0,
            Gen::S => 1,
            Gen::Q => 2,
            Gen::L(i) => 2 + i as usize,
        }
    }

    pub fn from_index(i: usize) -> Gen {
        match i {
            0 => Gen::P,
            1 => Gen::S,
            2 => Gen::Q,
            k => Gen::L((k - 2) as u32),
        }
    }

    pub fn name(self) -> String {
        match self {
            Gen::P => "P".into(),
            Gen::S => "S".into(),
            Gen::Q => "Q".into(),
            Gen::L(i) => format!("l{i}"),
        }
    }

    pub fn parse(s: &str) -> Option<Gen> {
        match s {
            "P" => Some(Gen::P),
            "S" => Some(Gen::S),
            "Q" => Some(Gen::Q),
            _ => {
                let i: u32 = s.strip_prefix('l')?.parse().ok()?;
                (i >= 1).then_some(Gen::L(i))
            }
        }
    }
}

type Exps = Vec<u32>;

fn trim(mut e: Exps) -> Exps {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

fn add_exps(a: &[u32], b: &[u32]) -> Exps {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut out = long.to_vec();
    for (o, s) in out.iter_mut().zip(short) {
        *o += s;
    }
    out
}

/// Sparse polynomial with rational coefficients.
///
/// Exponent vectors are indexed by [`Gen::index`] and stored without trailing
/// zeros, so equality of term maps is equality of polynomials. The arity is
/// not stored; [`SymPoly::arity`] derives it from the terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SymPoly {
    terms: BTreeMap<Exps, Rat>,
}

/// Shared zero, for lookups that return references.
pub static ZERO: SymPoly = SymPoly::ZERO;

impl SymPoly {
    pub const ZERO: SymPoly = SymPoly { terms: BTreeMap::new() };

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = Self::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn int(n: i64) -> Self {
        Self::constant(rint(n))
    }

    pub fn gen(g: Gen) -> Self {
        Self::monomial(&[(g, 1)], Rat::one())
    }

    /// `c · Π g^e`.
    pub fn monomial(powers: &[(Gen, u32)], c: Rat) -> Self {
        let mut e = Vec::new();
        for &(g, k) in powers {
            let i = g.index();
            if e.len() <= i {
                e.resize(i + 1, 0);
            }
            e[i] += k;
        }
        let mut p = Self::zero();
        p.add_term(trim(e), c);
        p
    }

    /// Builds a polynomial from raw exponent vectors.
    pub fn from_terms<I: IntoIterator<Item = (Vec<u32>, Rat)>>(it: I) -> Self {
        let mut p = Self::zero();
        for (e, c) in it {
            p.add_term(trim(e), c);
        }
        p
    }

    fn add_term(&mut self, e: Exps, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending lexicographic order of exponent vectors.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Rat)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    /// Number of generator slots needed to hold every exponent vector.
    pub fn arity(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> Rat {
        self.terms.get(&Vec::new()).cloned().unwrap_or_else(Rat::zero)
    }

    /// The rational value if the polynomial is constant.
    pub fn as_constant(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn coeff(&self, powers: &[(Gen, u32)]) -> Rat {
        let key = Self::monomial(powers, Rat::one());
        let e = key.terms.keys().next().cloned().unwrap_or_default();
        self.terms.get(&e).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn degree(&self, g: Gen) -> u32 {
        let i = g.index();
        self.terms.keys().map(|e| e.get(i).copied().unwrap_or(0)).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect() }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Substitutes rational values for the given generators.
    pub fn subst(&self, values: &[(Gen, Rat)]) -> Self {
        if values.is_empty() {
            return self.clone();
        }
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let mut e = e.clone();
            let mut c = c.clone();
            for (g, v) in values {
                let i = g.index();
                if let Some(k) = e.get_mut(i) {
                    if *k > 0 {
                        c *= pow_rat(v, *k);
                        *k = 0;
                    }
                }
            }
            out.add_term(trim(e), c);
        }
        out
    }

    /// Substitutes a polynomial for one generator.
    pub fn subst_poly(&self, g: Gen, value: &SymPoly) -> Self {
        let i = g.index();
        let mut powers: Vec<SymPoly> = vec![Self::one()];
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let k = e.get(i).copied().unwrap_or(0) as usize;
            while powers.len() <= k {
                let next = powers.last().expect("nonempty") * value;
                powers.push(next);
            }
            let mut rest = e.clone();
            if let Some(x) = rest.get_mut(i) {
                *x = 0;
            }
            let mono = Self::from_terms([(rest, c.clone())]);
            out += &(&mono * &powers[k]);
        }
        out
    }

    /// Floating-point evaluation.
    pub fn eval(&self, assignment: &HashMap<Gen, f64>) -> Result<f64> {
        let mut total = 0.0;
        for (e, c) in &self.terms {
            let mut v = rat_to_f64(c);
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let g = Gen::from_index(i);
                let x = assignment.get(&g).ok_or_else(|| Error::MissingGenerator(g.name()))?;
                v *= x.powi(k as i32);
            }
            total += v;
        }
        Ok(total)
    }

    /// Renames or kills boundary generators: `f(i)` gives the new index of
    /// `l_i`, or `None` to set `l_i = 0`.
    pub fn map_lengths(&self, f: impl Fn(u32) -> Option<u32>) -> Self {
        let mut out = Self::zero();
        'terms: for (e, c) in &self.terms {
            let mut ne: Exps = e.iter().take(3).copied().collect();
            for (i, &k) in e.iter().enumerate().skip(3) {
                if k == 0 {
                    continue;
                }
                match f((i - 2) as u32) {
                    None => continue 'terms,
                    Some(j) => {
                        let idx = 2 + j as usize;
                        if ne.len() <= idx {
                            ne.resize(idx + 1, 0);
                        }
                        ne[idx] += k;
                    }
                }
            }
            out.add_term(trim(ne), c.clone());
        }
        out
    }

    /// Replaces every power `l_i^d` by the polynomial `moment(d)`.
    pub fn integrate_length(&self, i: u32, moment: impl Fn(u32) -> SymPoly) -> Self {
        let idx = 2 + i as usize;
        let mut cache: BTreeMap<u32, SymPoly> = BTreeMap::new();
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let d = e.get(idx).copied().unwrap_or(0);
            let mut rest = e.clone();
            if let Some(x) = rest.get_mut(idx) {
                *x = 0;
            }
            let m = cache.entry(d).or_insert_with(|| moment(d));
            let mono = Self::from_terms([(rest, c.clone())]);
            out += &(&mono * &*m);
        }
        out
    }

    /// Keeps only terms satisfying the predicate.
    pub fn filter(&self, keep: impl Fn(&[u32]) -> bool) -> Self {
        Self { terms: self.terms.iter().filter(|(e, _)| keep(e)).map(|(e, c)| (e.clone(), c.clone())).collect() }
    }

    /// Total degree in the boundary generators of each term, maximised.
    pub fn length_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().skip(3).sum::<u32>()).max().unwrap_or(0)
    }

    /// Parses expressions such as `29/192*P^4 - (1-Q)*S + l1^2/48`.
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let v = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(v)
    }

    /// Conventional rendering: `pi^2/12 + L1^2/48`, `2*pi^2*s/(3*p^2)`.
    pub fn render(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        // Highest powers of pi and s first, then increasing powers of 1/p^2.
        let mut order: Vec<(&Exps, &Rat)> = self.terms.iter().collect();
        let at = |e: &Exps, i: usize| e.get(i).copied().unwrap_or(0);
        order.sort_by(|(a, _), (b, _)| {
            at(b, 0)
                .cmp(&at(a, 0))
                .then(at(b, 1).cmp(&at(a, 1)))
                .then(at(a, 2).cmp(&at(b, 2)))
                .then(b.get(3..).cmp(&a.get(3..)))
        });
        let mut out = String::new();
        for (i, (e, c)) in order.into_iter().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            out.push_str(&render_term(e, &c.abs()));
        }
        out
    }
}

fn render_term(e: &[u32], c: &Rat) -> String {
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    if !c.numer().is_one() || e.iter().all(|&k| k == 0) {
        num.push(c.numer().to_string());
    }
    if !c.denom().is_one() {
        den.push(c.denom().to_string());
    }
    for (i, &k) in e.iter().enumerate() {
        if k == 0 {
            continue;
        }
        match Gen::from_index(i) {
            Gen::P => num.push(format!("pi^{}", 2 * k)),
            Gen::S if k == 1 => num.push("s".into()),
            Gen::S => num.push(format!("s^{k}")),
            Gen::Q => den.push(format!("p^{}", 2 * k)),
            Gen::L(j) => num.push(format!("L{j}^{}", 2 * k)),
        }
    }
    if num.is_empty() {
        num.push("1".into());
    }
    let mut s = num.join("*");
    match den.len() {
        0 => {}
        1 => {
            s.push('/');
            s.push_str(&den[0]);
        }
        _ => {
            s.push_str("/(");
            s.push_str(&den.join("*"));
            s.push(')');
        }
    }
    s
}

/// Converts a rational to the nearest double, exact for moderate sizes.
pub fn rat_to_f64(c: &Rat) -> f64 {
    match (c.numer().to_f64(), c.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Scale down huge numerators/denominators before dividing.
            let shift = c.numer().bits().max(c.denom().bits()).saturating_sub(1000);
            let n = (c.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (c.denom() >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

fn pow_rat(v: &Rat, k: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..k {
        acc *= v;
    }
    acc
}

impl fmt::Display for SymPoly {
    /// Canonical machine form using generator names, ascending term order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (j, &k) in e.iter().enumerate() {
                if k > 0 {
                    write!(f, "*{}^{k}", Gen::from_index(j).name())?;
                }
            }
        }
        Ok(())
    }
}

impl<'a> Add<&'a SymPoly> for &'a SymPoly {
    type Output = SymPoly;
    fn add(self, rhs: &SymPoly) -> SymPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for SymPoly {
    type Output = SymPoly;
    fn add(mut self, rhs: SymPoly) -> SymPoly {
        self += &rhs;
        self
    }
}

impl AddAssign<&SymPoly> for SymPoly {
    fn add_assign(&mut self, rhs: &SymPoly) {
        for (e, c) in &rhs.terms {
            self.add_term(e.clone(), c.clone());
        }
    }
}

impl<'a> Sub<&'a SymPoly> for &'a SymPoly {
    type Output = SymPoly;
    fn sub(self, rhs: &SymPoly) -> SymPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Sub for SymPoly {
    type Output = SymPoly;
    fn sub(self, rhs: SymPoly) -> SymPoly {
        &self - &rhs
    }
}

impl Neg for &SymPoly {
    type Output = SymPoly;
    fn neg(self) -> SymPoly {
        SymPoly { terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }
}

impl Neg for SymPoly {
    type Output = SymPoly;
    fn neg(self) -> SymPoly {
        -&self
    }
}

impl<'a> Mul<&'a SymPoly> for &'a SymPoly {
    type Output = SymPoly;
    fn mul(self, rhs: &SymPoly) -> SymPoly {
        let mut out = SymPoly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                out.add_term(add_exps(ea, eb), ca * cb);
            }
        }
        out
    }
}

impl Mul for SymPoly {
    type Output = SymPoly;
    fn mul(self, rhs: SymPoly) -> SymPoly {
        &self * &rhs
    }
}

impl From<Rat> for SymPoly {
    fn from(c: Rat) -> Self {
        SymPoly::constant(c)
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: BTreeMap<String, u32>,
    num: String,
    den: String,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    terms: Vec<TermJson>,
}

impl Serialize for SymPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| TermJson {
                exp: e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| (Gen::from_index(i).name(), k))
                    .collect(),
                num: c.numer().to_string(),
                den: c.denom().to_string(),
            })
            .collect();
        PolyJson { terms }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolyJson::deserialize(d)?;
        let mut p = SymPoly::zero();
        for t in raw.terms {
            let mut powers = Vec::new();
            for (name, k) in t.exp {
                let g = Gen::parse(&name).ok_or_else(|| D::Error::custom(format!("unknown generator {name}")))?;
                powers.push((g, k));
            }
            let num: BigInt = t.num.parse().map_err(D::Error::custom)?;
            let den: BigInt = t.den.parse().map_err(D::Error::custom)?;
            if den.is_zero() {
                return Err(D::Error::custom("zero denominator"));
            }
            p += &SymPoly::monomial(&powers, Rat::new(num, den));
        }
        Ok(p)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<SymPoly> {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let t = self.term()?;
            acc = if c == b'+' { &acc + &t } else { &acc - &t };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<SymPoly> {
        let mut acc = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let f = self.factor()?;
            if c == b'*' {
                acc = &acc * &f;
            } else {
                let d = f.as_constant().ok_or_else(|| self.err("division by a non-constant"))?;
                if d.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                acc = acc.scale(&(Rat::one() / d));
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<SymPoly> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(-self.factor()?);
        }
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let k = self.uint()?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn uint(&mut self) -> Result<u32> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err("expected an exponent"))
    }

    fn primary(&mut self) -> Result<SymPoly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
                let n: BigInt = s.parse().map_err(|_| self.err("bad integer"))?;
                Ok(SymPoly::constant(Rat::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                Gen::parse(s)
                    .map(SymPoly::gen)
                    .ok_or_else(|| Error::Parse { pos: start, msg: format!("unknown generator `{s}`") })
            }
            _ => Err(self.err("expected a number, generator or `(`")),
        }
    }
}

/// Parity of the exponents carried by a [`Series1`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Truncated series `Σ_k c_k z^{2k + offset}`; `coeffs.len()` is the
/// truncation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series1 {
    offset: i32,
    coeffs: Vec<SymPoly>,
    truncation_audit: bool,
}

impl Series1 {
    pub fn new(offset: i32, coeffs: Vec<SymPoly>) -> Self {
        Self { offset, coeffs, truncation_audit: false }
    }

    pub fn parity(&self) -> Parity {
        if self.offset.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn offset(&self) -> i32 {
        self.offset
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[SymPoly] {
        &self.coeffs
    }

    /// Coefficient of `z^{2k+offset}`; zero beyond the truncation order.
    pub fn coeff(&self, k: usize) -> SymPoly {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    /// True if some operation combined series of different orders.
    pub fn truncation_audit(&self) -> bool {
        self.truncation_audit
    }

    pub fn mul(&self, other: &Series1) -> Series1 {
        let n = self.order().min(other.order());
        let mut out = vec![SymPoly::zero(); n];
        for (i, a) in self.coeffs.iter().take(n).enumerate() {
            for (j, b) in other.coeffs.iter().take(n - i).enumerate() {
                out[i + j] += &(a * b);
            }
        }
        Series1 {
            offset: self.offset + other.offset,
            coeffs: out,
            truncation_audit: self.truncation_audit || other.truncation_audit || self.order() != other.order(),
        }
    }

    /// Multiplicative inverse; the leading coefficient must be a nonzero constant.
    pub fn inverse(&self) -> Result<Series1> {
        let lead = self.coeffs.first().cloned().unwrap_or_default();
        let c0 = match lead.as_constant() {
            Some(c) if !c.is_zero() => c,
            _ => return Err(Error::NonUnitLeading(lead.render())),
        };
        let inv0 = Rat::one() / c0;
        let n = self.order();
        let mut out: Vec<SymPoly> = Vec::with_capacity(n);
        for k in 0..n {
            if k == 0 {
                out.push(SymPoly::constant(inv0.clone()));
                continue;
            }
            let mut acc = SymPoly::zero();
            for j in 1..=k {
                acc += &(&self.coeffs[j] * &out[k - j]);
            }
            out.push(acc.scale(&-inv0.clone()));
        }
        Ok(Series1 { offset: -self.offset, coeffs: out, truncation_audit: self.truncation_audit })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rational_examples() {
        assert_eq!(rat_arith(&rat(1, 3), &rat(1, 6), RatOp::Add).unwrap(), rat(1, 2));
        let z = rat_arith(&rat(105, 128), &rat(0, 1), RatOp::Mul).unwrap();
        assert!(z.is_zero() && z.denom().is_one());
        assert_eq!(rat_arith(&rat(29, 192), &rat(29, 192), RatOp::Div).unwrap(), rat(1, 1));
        assert_eq!(rat_arith(&rat(1, 2), &rat(0, 1), RatOp::Div), Err(Error::DivisionByZero));
    }

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(0).unwrap(), rat(1, 1));
        assert_eq!(bernoulli(2).unwrap(), rat(1, 6));
        assert_eq!(bernoulli(4).unwrap(), rat(-1, 30));
        assert_eq!(bernoulli(12).unwrap(), rat(-691, 2730));
        assert!(bernoulli(3).is_err());
        for m in (0..=12).step_by(2) {
            assert!(!bernoulli(m).unwrap().is_zero());
        }
    }

    #[test]
    fn zeta_values() {
        assert_eq!(zeta_even(1).unwrap(), SymPoly::monomial(&[(Gen::P, 1)], rat(1, 6)));
        assert_eq!(zeta_even(2).unwrap(), SymPoly::monomial(&[(Gen::P, 2)], rat(1, 90)));
        assert_eq!(zeta_even(3).unwrap(), SymPoly::monomial(&[(Gen::P, 3)], rat(1, 945)));
        assert!(zeta_even(0).is_err());
        for d in 1..=12 {
            let z = zeta_even(d).unwrap();
            assert_eq!(z.len(), 1);
            assert_eq!(z.terms().next().unwrap().0, &[d][..]);
        }
    }

    #[test]
    fn zeta_numeric_against_direct_sum() {
        for d in 1..=5u32 {
            let exact = rat_to_f64(&zeta_even_coeff(d).unwrap()) * std::f64::consts::PI.powi(2 * d as i32);
            let direct: f64 = (1..200_000).map(|n| (n as f64).powi(-2 * d as i32)).sum();
            assert!((exact - direct).abs() < 1e-5, "d={d}");
        }
    }

    #[test]
    fn numeric_evaluation() {
        let pi2 = std::f64::consts::PI.powi(2);
        let p = SymPoly::gen(Gen::P);
        let m = HashMap::from([(Gen::P, 9.8696)]);
        assert_eq!(p.eval(&m).unwrap(), 9.8696);
        let z2 = zeta_even(1).unwrap();
        let v = z2.eval(&HashMap::from([(Gen::P, pi2)])).unwrap();
        assert!((v - 1.6449340668).abs() < 1e-9);
        assert_eq!(SymPoly::zero().eval(&HashMap::new()).unwrap(), 0.0);
        assert!(p.eval(&HashMap::new()).is_err());
    }

    #[test]
    fn parse_and_render() {
        let p = SymPoly::parse("P/12 + l1/48").unwrap();
        assert_eq!(p.render(), "pi^2/12 + L1^2/48");
        let q = SymPoly::parse("2*P*S*(1-Q)/3").unwrap();
        assert_eq!(q.render(), "2*pi^2*s/3 - 2*pi^2*s/(3*p^2)");
        assert_eq!(SymPoly::parse("-(l1 - 2)^2").unwrap(), SymPoly::parse("-l1^2+4*l1-4").unwrap());
        assert!(SymPoly::parse("1/(1-Q)").is_err());
        assert!(SymPoly::parse("1/0").is_err());
        assert!(SymPoly::parse("x").is_err());
        assert_eq!(SymPoly::int(1).render(), "1");
    }

    #[test]
    fn json_round_trip_and_schema() {
        let p = SymPoly::parse("l1^2/48 + P/12").unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"terms":[{"exp":{"l1":2},"num":"1","den":"48"},{"exp":{"P":1},"num":"1","den":"12"}]}"#);
        let back: SymPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn substitution_and_lengths() {
        let p = SymPoly::parse("P*S*(1-Q) + l2*l1").unwrap();
        assert_eq!(p.subst(&[(Gen::Q, rat(1, 1))]), SymPoly::parse("l1*l2").unwrap());
        assert_eq!(p.subst(&[]), p);
        let r = p.map_lengths(|i| if i == 1 { None } else { Some(5) });
        assert_eq!(r, SymPoly::parse("P*S - P*S*Q").unwrap());
        let m = SymPoly::parse("l3^2 + l3").unwrap().integrate_length(3, |d| SymPoly::int(d as i64 + 10));
        assert_eq!(m, SymPoly::int(23));
        let sp = SymPoly::parse("S^2 + Q").unwrap().subst_poly(Gen::S, &SymPoly::parse("1 - Q").unwrap());
        assert_eq!(sp, SymPoly::parse("1 - Q + Q^2").unwrap());
    }

    #[test]
    fn series_inverse() {
        // sin-like series: 1 - z^2/6 + z^4/120 - ...
        let s = Series1::new(
            1,
            (0..6)
                .map(|k| {
                    let sign = if k % 2 == 0 { 1 } else { -1 };
                    SymPoly::constant(rat(sign, 1) / rint(factorial(2 * k + 1)))
                })
                .collect(),
        );
        let inv = s.inverse().unwrap();
        assert_eq!(inv.offset(), -1);
        assert_eq!(inv.parity(), Parity::Odd);
        let prod = s.mul(&inv);
        assert_eq!(prod.coeff(0), SymPoly::one());
        for k in 1..6 {
            assert!(prod.coeff(k).is_zero());
        }
        assert!(!prod.truncation_audit());
        let short = Series1::new(0, vec![SymPoly::one()]);
        assert!(s.mul(&short).truncation_audit());
        assert!(Series1::new(1, vec![SymPoly::gen(Gen::P)]).inverse().is_err());
    }

    fn small_poly() -> impl Strategy<Value = SymPoly> {
        prop::collection::vec((prop::collection::vec(0u32..3, 0..5), -6i64..6, 1i64..5), 0..5)
            .prop_map(|ts| SymPoly::from_terms(ts.into_iter().map(|(e, n, d)| (e, rat(n, d)))))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn ring_axioms(a in small_poly(), b in small_poly(), c in small_poly()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert!((&a + &(-&a)).is_zero());
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
        }

        #[test]
        fn parse_render_json_round_trip(a in small_poly()) {
            let back: SymPoly = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
            prop_assert_eq!(&back, &a);
            let reparsed = SymPoly::parse(&a.to_string()).unwrap();
            prop_assert_eq!(reparsed, a);
        }
    }
}

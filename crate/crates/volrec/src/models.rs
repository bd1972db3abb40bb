//! Spectral-curve models: the `y` series, the inverse series `1/y` whose
//! coefficients drive every recursion, and the time shifts relating each
//! model to the Airy or Bessel generating function.
//!
//! Bosonic models have `y = z + …` with odd powers `z^{2k+1}`; super models
//! have `y = 1/z + …` with powers `z^{2k-1}`. The π² of the trigonometric
//! expansions always enters as `P·S`, so the deformation parameter `s` is
//! carried throughout and `S = 1` recovers the undeformed curves.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::One;

use crate::error::{Error, Result};
use crate::exact::{double_factorial, factorial, rat, rint, Gen, Rat, Series1, SymPoly};
pub use crate::table::ModelParity;

/// The parameter `p` of the minimal-string families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PChoice {
    /// `1/p²` kept as the formal generator `Q`.
    Symbolic,
    /// A concrete odd integer `p`.
    Value(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ModelId {
    Airy,
    Wp,
    Mp(PChoice),
    Bessel,
    Swp,
    Smp(PChoice),
    /// KdV curve with user-supplied odd times `u_3, u_5, …`.
    Kdv(Vec<SymPoly>),
    /// BGW curve with user-supplied odd times `v_1, v_3, …`.
    Bgw(Vec<SymPoly>),
}

/// A model of the registry or a custom KdV/BGW curve.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub id: ModelId,
}

/// `1/y = Σ s_ℓ z^{2ℓ-1}` (bosonic) or `Σ s'_ℓ z^{2ℓ+1}` (super).
#[derive(Debug, Clone, PartialEq)]
pub struct InvYSeries {
    pub parity: ModelParity,
    pub s: Vec<SymPoly>,
}

impl InvYSeries {
    /// `s_ℓ`, zero for negative `ℓ`. Indices at or beyond the truncation
    /// order are an error rather than silently zero.
    pub fn get(&self, l: i64) -> Result<SymPoly> {
        if l < 0 {
            return Ok(SymPoly::zero());
        }
        self.s.get(l as usize).cloned().ok_or(Error::Truncation {
            what: "inverse y series",
            index: l as u32,
            bound: self.s.len() as u32,
        })
    }
}

impl ModelSpec {
    pub fn new(id: ModelId) -> Self {
        Self { id }
    }

    pub fn airy() -> Self {
        Self::new(ModelId::Airy)
    }
    pub fn wp() -> Self {
        Self::new(ModelId::Wp)
    }
    pub fn mp_sym() -> Self {
        Self::new(ModelId::Mp(PChoice::Symbolic))
    }
    pub fn bessel() -> Self {
        Self::new(ModelId::Bessel)
    }
    pub fn swp() -> Self {
        Self::new(ModelId::Swp)
    }
    pub fn smp_sym() -> Self {
        Self::new(ModelId::Smp(PChoice::Symbolic))
    }

    /// The six registry models with symbolic `p`.
    pub fn registry() -> Vec<ModelSpec> {
        vec![Self::airy(), Self::wp(), Self::mp_sym(), Self::bessel(), Self::swp(), Self::smp_sym()]
    }

    pub fn parity(&self) -> ModelParity {
        match self.id {
            ModelId::Airy | ModelId::Wp | ModelId::Mp(_) | ModelId::Kdv(_) => ModelParity::Bosonic,
            _ => ModelParity::Super,
        }
    }

    /// Whether coefficients carry the deformation generator `S`.
    pub fn carries_s(&self) -> bool {
        matches!(self.id, ModelId::Wp | ModelId::Mp(_) | ModelId::Swp | ModelId::Smp(_))
    }

    /// The base model whose generating function is shifted into this one.
    pub fn base(&self) -> ModelSpec {
        match self.parity() {
            ModelParity::Bosonic => Self::airy(),
            ModelParity::Super => Self::bessel(),
        }
    }

    /// Factor `Π_{i=1}^{m} (1 - (2i-1)² Q)` with `Q` symbolic or `1/p²`.
    fn minimal_factor(p: PChoice, m: u32) -> SymPoly {
        let q = match p {
            PChoice::Symbolic => SymPoly::gen(Gen::Q),
            PChoice::Value(p) => SymPoly::constant(rat(1, (p as i64) * (p as i64))),
        };
        let mut acc = SymPoly::one();
        for i in 1..=m as i64 {
            acc = &acc * &(&SymPoly::one() - &q.scale(&rint((2 * i - 1) * (2 * i - 1))));
        }
        acc
    }

    /// `(-2PS)^j / ((2j+1)!! j!)`.
    fn trig_coeff(j: u32) -> SymPoly {
        let c =
            rint(num_bigint::BigInt::from(-2).pow(j)) / (rint(double_factorial(2 * j as i64 + 1)) * rint(factorial(j)));
        SymPoly::monomial(&[(Gen::P, j), (Gen::S, j)], c)
    }

    /// Coefficient `k` of the `y` series: of `z^{2k+1}` for bosonic models
    /// and of `z^{2k-1}` for super models.
    pub fn y_coeff(&self, k: u32) -> SymPoly {
        if k == 0 {
            return SymPoly::one();
        }
        match &self.id {
            ModelId::Airy | ModelId::Bessel => SymPoly::zero(),
            ModelId::Wp => Self::trig_coeff(k),
            ModelId::Mp(p) => &Self::trig_coeff(k) * &Self::minimal_factor(*p, k),
            ModelId::Swp => {
                // (-2PS)^k/((2k-1)!! k!) = trig_coeff(k)·(2k+1)
                Self::trig_coeff(k).scale(&rint(2 * k as i64 + 1))
            }
            ModelId::Smp(p) => &Self::trig_coeff(k).scale(&rint(2 * k as i64 + 1)) * &Self::minimal_factor(*p, k),
            ModelId::Kdv(u) | ModelId::Bgw(u) => u.get(k as usize - 1).cloned().unwrap_or_default(),
        }
    }

    /// The `y` series to the given order.
    pub fn model_y_series(&self, order: usize) -> Result<Series1> {
        if order == 0 {
            return Err(Error::Invalid("series order must be at least 1".into()));
        }
        let offset = match self.parity() {
            ModelParity::Bosonic => 1,
            ModelParity::Super => -1,
        };
        Ok(Series1::new(offset, (0..order as u32).map(|k| self.y_coeff(k)).collect()))
    }

    /// Inverse series coefficients `s_ℓ` (or `s'_ℓ`) for `ℓ < order`.
    pub fn invert_y(&self, order: usize) -> Result<InvYSeries> {
        let inv = self.model_y_series(order)?.inverse()?;
        Ok(InvYSeries { parity: self.parity(), s: inv.coeffs().to_vec() })
    }

    /// Time shift `γ_a` (with `t_a → t_a - γ_a`) for `a ≤ a_max`, nonzero entries only.
    pub fn model_shift(&self, a_max: u32) -> BTreeMap<u32, SymPoly> {
        let (first, to_k): (u32, fn(u32) -> u32) = match self.parity() {
            ModelParity::Bosonic => (2, |a| a - 1),
            ModelParity::Super => (1, |a| a),
        };
        (first..=a_max)
            .filter_map(|a| {
                let g = self.y_coeff(to_k(a)).scale(&rat(1, 2 * a as i64 + 1));
                (!g.is_zero()).then_some((a, g))
            })
            .collect()
    }

    /// Rational value of `Q` for the `p = 1` and `p = ∞` limits and other
    /// concrete specialisations.
    pub fn q_subst(q: Rat) -> Vec<(Gen, Rat)> {
        vec![(Gen::Q, q)]
    }

    /// `S = 1`, the undeformed curve.
    pub fn s_one() -> Vec<(Gen, Rat)> {
        vec![(Gen::S, Rat::one())]
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = |p: &PChoice| match p {
            PChoice::Symbolic => "sym".to_string(),
            PChoice::Value(v) => v.to_string(),
        };
        match &self.id {
            ModelId::Airy => write!(f, "airy"),
            ModelId::Wp => write!(f, "wp"),
            ModelId::Mp(c) => write!(f, "mp:{}", p(c)),
            ModelId::Bessel => write!(f, "bessel"),
            ModelId::Swp => write!(f, "swp"),
            ModelId::Smp(c) => write!(f, "smp:{}", p(c)),
            ModelId::Kdv(_) => write!(f, "kdv"),
            ModelId::Bgw(_) => write!(f, "bgw"),
        }
    }
}

fn parse_p(s: &str, full: &str) -> Result<PChoice> {
    if s == "sym" {
        return Ok(PChoice::Symbolic);
    }
    match s.parse::<u32>() {
        Ok(p) if p % 2 == 1 => Ok(PChoice::Value(p)),
        _ => Err(Error::UnknownModel(full.into())),
    }
}

/// Parses registry selectors (`airy`, `wp`, `mp:5`, `mp:sym`, `bessel`,
/// `swp`, `smp:<p|sym>`). Custom curves go through [`ModelSpec::custom`].
impl FromStr for ModelSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let id = match s.split_once(':') {
            None => match s {
                "airy" => ModelId::Airy,
                "wp" => ModelId::Wp,
                "bessel" => ModelId::Bessel,
                "swp" => ModelId::Swp,
                _ => return Err(Error::UnknownModel(s.into())),
            },
            Some(("mp", p)) => ModelId::Mp(parse_p(p, s)?),
            Some(("smp", p)) => ModelId::Smp(parse_p(p, s)?),
            _ => return Err(Error::UnknownModel(s.into())),
        };
        Ok(Self::new(id))
    }
}

impl ModelSpec {
    /// Custom KdV (`u_3, u_5, …`) or BGW (`v_1, v_3, …`) curve from a JSON
    /// list of polynomials.
    pub fn custom(kind: ModelParity, json: &str) -> Result<Self> {
        let times: Vec<SymPoly> =
            serde_json::from_str(json).map_err(|e| Error::Invalid(format!("time variables: {e}")))?;
        Ok(Self::new(match kind {
            ModelParity::Bosonic => ModelId::Kdv(times),
            ModelParity::Super => ModelId::Bgw(times),
        }))
    }
}

/// Numeric `s_ℓ` of `M(p)` from the partial-fraction form
/// `1/y = 1/z + Σ_j (-1)^j cos(πj/p)(1/(z-u_j) + 1/(z+u_j))`, an independent
/// check of [`ModelSpec::invert_y`] at concrete `p` (with `S = 1`).
pub fn mp_inverse_partial_fractions(p: u32, l_max: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    let pf = p as f64;
    (0..l_max)
        .map(|l| {
            if l == 0 {
                return 1.0;
            }
            // 1/(z-u) + 1/(z+u) = -2 Σ_m z^{2m+1}/u^{2m+2}
            -2.0 * (1..=(p - 1) / 2)
                .map(|j| {
                    let c = (-1f64).powi(j as i32) * (pi * j as f64 / pf).cos();
                    let u = pf / (2.0 * pi) * (pi * j as f64 / pf).sin();
                    c * u.powi(-2 * l as i32)
                })
                .sum::<f64>()
        })
        .collect()
}

/// Numeric `s'_ℓ` of `SM(p)`, `p > 1`, from
/// `1/y = (z/2π) Σ_j (-1)^j cos²(π(j-½)/p)(1/(z-u'_j) - 1/(z+u'_j))`.
pub fn smp_inverse_partial_fractions(p: u32, l_max: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    let pf = p as f64;
    (0..l_max)
        .map(|l| {
            // 1/(z-u) - 1/(z+u) = -(2/u) Σ_m z^{2m}/u^{2m}
            -(1.0 / pi)
                * (1..=(p - 1) / 2)
                    .map(|j| {
                        let th = pi * (j as f64 - 0.5) / pf;
                        let c = (-1f64).powi(j as i32) * th.cos().powi(2);
                        let u = pf / (2.0 * pi) * th.sin();
                        c * u.powi(-2 * l as i32 - 1)
                    })
                    .sum::<f64>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use std::collections::HashMap;

    fn sp(s: &str) -> SymPoly {
        SymPoly::parse(s).unwrap()
    }

    #[test]
    fn y_series_examples() {
        let a = ModelSpec::airy().model_y_series(4).unwrap();
        assert_eq!(a.coeffs(), &[SymPoly::one(), SymPoly::zero(), SymPoly::zero(), SymPoly::zero()]);
        let w = ModelSpec::wp().model_y_series(2).unwrap();
        assert_eq!(w.coeff(1), sp("-2/3*P*S"));
        let m = ModelSpec::mp_sym().model_y_series(2).unwrap();
        assert_eq!(m.coeff(1), sp("-2/3*P*S*(1-Q)"));
        let sw = ModelSpec::swp().model_y_series(3).unwrap();
        assert_eq!(sw.offset(), -1);
        assert_eq!(sw.coeff(1), sp("-2*P*S"));
    }

    #[test]
    fn wp_y_matches_sine_taylor_series() {
        // sin(2πz)/(2π) = Σ (-1)^k (2π)^{2k} z^{2k+1}/(2k+1)!, with P·S ≡ π².
        let y = ModelSpec::wp().model_y_series(8).unwrap();
        for k in 0..8u32 {
            let sign = if k % 2 == 0 { 1 } else { -1 };
            let c = rint(sign * 4i64.pow(k)) / rint(factorial(2 * k + 1));
            assert_eq!(y.coeff(k as usize), SymPoly::monomial(&[(Gen::P, k), (Gen::S, k)], c));
        }
    }

    #[test]
    fn inverse_examples() {
        let a = ModelSpec::airy().invert_y(4).unwrap();
        assert_eq!(a.s[0], SymPoly::one());
        assert!(a.s[1..].iter().all(SymPoly::is_zero));
        let w = ModelSpec::wp().invert_y(3).unwrap();
        assert_eq!(w.s[1], sp("2/3*P*S"));
        // D^0 = s_1/8 reproduces the constant π²/12 of V_{1,1}.
        assert_eq!(w.s[1].scale(&rat(1, 8)).subst(&ModelSpec::s_one()), sp("P/12"));
        let b = ModelSpec::bessel().invert_y(3).unwrap();
        assert_eq!(b.s, vec![SymPoly::one(), SymPoly::zero(), SymPoly::zero()]);
        assert_eq!(ModelSpec::swp().invert_y(2).unwrap().s[1], sp("2*P*S"));
        assert!(b.get(3).is_err());
        assert!(b.get(-1).unwrap().is_zero());
    }

    #[test]
    fn y_times_inverse_is_one() {
        for m in ModelSpec::registry() {
            for n in 1..=12 {
                let y = m.model_y_series(n).unwrap();
                let prod = y.mul(&y.inverse().unwrap());
                assert_eq!(prod.coeff(0), SymPoly::one(), "{m}");
                assert!((1..n).all(|k| prod.coeff(k).is_zero()), "{m} order {n}");
            }
        }
    }

    #[test]
    fn shift_examples() {
        let w = ModelSpec::wp().model_shift(4);
        assert_eq!(w[&2], sp("-2/15*P*S"));
        assert!(!w.contains_key(&1));
        assert_eq!(ModelSpec::mp_sym().model_shift(2)[&2], sp("-2/15*P*S*(1-Q)"));
        let s = ModelSpec::swp().model_shift(2);
        assert_eq!(s[&1], sp("-2/3*P*S"));
        assert!(!s.contains_key(&0));
        assert!(ModelSpec::airy().model_shift(10).is_empty());
    }

    #[test]
    fn shifts_vanish_beyond_p() {
        for p in [3u32, 5, 7] {
            let m = ModelSpec::new(ModelId::Mp(PChoice::Value(p)));
            let sh = m.model_shift(12);
            assert!(sh.keys().all(|&a| a <= p.div_ceil(2)), "p={p}: {:?}", sh.keys());
            let sm = ModelSpec::new(ModelId::Smp(PChoice::Value(p)));
            assert!(sm.model_shift(12).keys().all(|&a| a < p.div_ceil(2)));
        }
    }

    #[test]
    fn inverse_matches_partial_fractions() {
        let pi2 = std::f64::consts::PI.powi(2);
        for p in [3u32, 5, 7] {
            let m = ModelSpec::new(ModelId::Mp(PChoice::Value(p)));
            let inv = m.invert_y(6).unwrap();
            let pf = mp_inverse_partial_fractions(p, 6);
            let asg = HashMap::from([(Gen::P, pi2), (Gen::S, 1.0)]);
            for (l, want) in pf.iter().enumerate() {
                let got = inv.s[l].eval(&asg).unwrap();
                assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "p={p} l={l}: {got} vs {want}");
            }
            let sm = ModelSpec::new(ModelId::Smp(PChoice::Value(p)));
            let inv = sm.invert_y(6).unwrap();
            for (l, want) in smp_inverse_partial_fractions(p, 6).iter().enumerate() {
                let got = inv.s[l].eval(&asg).unwrap();
                assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "SM p={p} l={l}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn parse_selectors() {
        assert_eq!("mp:5".parse::<ModelSpec>().unwrap().id, ModelId::Mp(PChoice::Value(5)));
        assert_eq!("smp:sym".parse::<ModelSpec>().unwrap().to_string(), "smp:sym");
        assert!("mp:4".parse::<ModelSpec>().is_err());
        assert!("foo".parse::<ModelSpec>().is_err());
        let k =
            ModelSpec::custom(ModelParity::Bosonic, r#"[{"terms":[{"exp":{"P":1},"num":"-2","den":"3"}]}]"#).unwrap();
        assert_eq!(k.y_coeff(1), sp("-2/3*P"));
        assert!(k.y_coeff(2).is_zero());
        assert!(Rat::zero().is_zero());
    }
}

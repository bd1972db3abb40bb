//! Recursion kernels `H(x, y)` of the gravity models and numerical checks of
//! their moment identities
//!
//! ```text
//! ∫₀^∞ x^{2k+1}/(2k+1)! H(x,t) dx = Σ_ℓ s_ℓ t^{2k+2-2ℓ}/(2k+2-2ℓ)!      (bosonic)
//!                                = Σ_ℓ s'_ℓ t^{2k+1-2ℓ}/(2k+1-2ℓ)!     (super)
//! ```
//!
//! against the exact `1/y` coefficients from [`crate::models`]. Delta terms
//! (Bessel, `SM(1)`) are never integrated numerically; their moments are
//! added in closed form.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{rat_to_f64, zeta_even_coeff, Gen};
use crate::models::{ModelId, ModelSpec, PChoice};
use crate::table::ModelParity;

/// One exponential channel `amplitude · e^{∓rate·(x±y)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpTerm {
    pub j: u32,
    pub amplitude: f64,
    pub rate: f64,
}

/// Closed form of a kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum KernelShape {
    /// `θ(y-x) + θ(-x-y)`.
    Step,
    /// `1/(1+e^{(x-y)/2}) + 1/(1+e^{(x+y)/2})`.
    Fermi,
    /// `(2,p)` minimal string with `c_j = (-1)^j cos(πj/p)`, `u_j = (p/2π) sin(πj/p)`;
    /// the `j = 0` channel is the step kernel.
    MinimalString(Vec<ExpTerm>),
    /// `δ(x-y) - δ(x+y)`.
    Delta,
    /// `(1/4π)(sech((x-y)/4) - sech((x+y)/4))`.
    Sech,
    /// `(2,2p-2)` superstring with amplitudes `(-1)^j cos²(π(j-½)/p)/2π` and
    /// rates `u'_j = (p/2π) sin(π(j-½)/p)`, plus `δ(x-y) - δ(x+y)` when `p = 1`.
    MinimalSuperstring { terms: Vec<ExpTerm>, delta: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSpec {
    pub model: String,
    pub parity: ModelParity,
    pub shape: KernelShape,
}

fn numeric_p(p: &PChoice) -> Result<u32> {
    match p {
        PChoice::Value(p) if p % 2 == 1 => Ok(*p),
        PChoice::Value(p) => Err(Error::Invalid(format!("p = {p} must be odd"))),
        PChoice::Symbolic => Err(Error::Invalid("kernel needs a numeric p".into())),
    }
}

impl KernelSpec {
    pub fn for_model(model: &ModelSpec) -> Result<Self> {
        let shape = match &model.id {
            ModelId::Airy => KernelShape::Step,
            ModelId::Wp => KernelShape::Fermi,
            ModelId::Bessel => KernelShape::Delta,
            ModelId::Swp => KernelShape::Sech,
            ModelId::Mp(p) => {
                let p = numeric_p(p)?;
                let pf = p as f64;
                let terms = (0..=(p - 1) / 2)
                    .map(|j| {
                        let th = PI * j as f64 / pf;
                        ExpTerm { j, amplitude: (-1f64).powi(j as i32) * th.cos(), rate: pf / (2.0 * PI) * th.sin() }
                    })
                    .collect();
                KernelShape::MinimalString(terms)
            }
            ModelId::Smp(p) => {
                let p = numeric_p(p)?;
                let pf = p as f64;
                let terms = (1..=(p - 1) / 2)
                    .map(|j| {
                        let th = PI * (j as f64 - 0.5) / pf;
                        ExpTerm {
                            j,
                            amplitude: (-1f64).powi(j as i32) * th.cos().powi(2) / (2.0 * PI),
                            rate: pf / (2.0 * PI) * th.sin(),
                        }
                    })
                    .collect();
                KernelShape::MinimalSuperstring { terms, delta: p == 1 }
            }
            ModelId::Kdv(_) | ModelId::Bgw(_) => {
                return Err(Error::Invalid(format!("no kernel known for {model}")));
            }
        };
        Ok(Self { model: model.to_string(), parity: model.parity(), shape })
    }

    fn has_delta(&self) -> bool {
        matches!(self.shape, KernelShape::Delta | KernelShape::MinimalSuperstring { delta: true, .. })
    }

    /// Slowest exponential decay rate of the smooth part, if any.
    fn decay(&self) -> Option<f64> {
        match &self.shape {
            KernelShape::Step | KernelShape::Delta => None,
            KernelShape::Fermi => Some(0.5),
            KernelShape::Sech => Some(0.25),
            KernelShape::MinimalString(t) | KernelShape::MinimalSuperstring { terms: t, .. } => {
                t.iter().map(|e| e.rate).filter(|&r| r > 0.0).reduce(f64::min)
            }
        }
    }
}

fn theta(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// Smooth part of `H(x, y)`; errors on the support of a delta term.
pub fn kernel_eval(k: &KernelSpec, x: f64, y: f64) -> Result<f64> {
    if k.has_delta() && (x == y || x == -y) {
        return Err(Error::DeltaSupport { x, y });
    }
    let (p, m) = (x + y, x - y);
    Ok(match &k.shape {
        KernelShape::Step => theta(-m) + theta(-p),
        KernelShape::Fermi => 1.0 / (1.0 + (m / 2.0).exp()) + 1.0 / (1.0 + (p / 2.0).exp()),
        KernelShape::Delta => 0.0,
        KernelShape::Sech => (sech(m / 4.0) - sech(p / 4.0)) / (4.0 * PI),
        KernelShape::MinimalString(terms) => terms
            .iter()
            .map(|t| {
                let (c, u) = (t.amplitude, t.rate);
                let decaying = if t.j == 0 { 0.0 } else { (-u * p).exp() * theta(p) + (-u * m).exp() * theta(m) };
                -c * decaying + c * ((u * p).exp() * theta(-p) + (u * m).exp() * theta(-m))
            })
            .sum(),
        KernelShape::MinimalSuperstring { terms, .. } => terms
            .iter()
            .map(|t| {
                let u = t.rate;
                t.amplitude
                    * ((-u * p).exp() * theta(p) - (-u * m).exp() * theta(m) + (u * p).exp() * theta(-p)
                        - (u * m).exp() * theta(-m))
            })
            .sum(),
    })
}

fn factorial_f64(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

const TOLERANCE: f64 = 1e-8;

/// One quadrature-versus-series comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub model: String,
    pub k: u32,
    pub t: f64,
    pub numeric: f64,
    pub expected: f64,
    pub rel_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub tolerance: f64,
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

fn row(model: String, k: u32, t: f64, numeric: f64, expected: f64) -> MomentRow {
    let rel_error = if expected == 0.0 { numeric.abs() } else { ((numeric - expected) / expected).abs() };
    MomentRow { model, k, t, numeric, expected, rel_error, pass: rel_error < TOLERANCE }
}

/// `∫_a^b f` split into pieces of length at most `step`.
fn integrate_pieces(f: &dyn Fn(f64) -> f64, a: f64, b: f64, step: f64) -> f64 {
    let pieces = ((b - a) / step).ceil().max(1.0) as usize;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * h;
            quadrature::integrate(f, lo, lo + h, 1e-15).integral
        })
        .sum()
}

/// Point beyond which `x^{2k+1}/(2k+1)! e^{-rate (x-t)}` stays below `1e-16`.
fn tail_cutoff(k: u32, t: f64, rate: f64) -> f64 {
    let env = |x: f64| x.powi(2 * k as i32 + 1) / factorial_f64(2 * k + 1) * (-rate * (x - t)).exp();
    let mut x = t + 1.0 / rate;
    while env(x) > 1e-16 || x < t + 10.0 / rate {
        x += 1.0 / rate;
    }
    x
}

/// Numerical `h_{2k+1}(t)` from the kernel.
pub fn kernel_moment(kernel: &KernelSpec, k: u32, t: f64) -> Result<f64> {
    let norm = factorial_f64(2 * k + 1);
    let f = |x: f64| x.powi(2 * k as i32 + 1) / norm * kernel_eval(kernel, x, t).unwrap_or(0.0);
    let mut total = quadrature::integrate(f, 0.0, t, 1e-15).integral;
    if let Some(rate) = kernel.decay() {
        let end = tail_cutoff(k, t, rate);
        total += integrate_pieces(&f, t, end, 4.0 / rate);
    }
    if kernel.has_delta() {
        // δ(x-t) sits inside (0, ∞); δ(x+t) does not.
        total += t.powi(2 * k as i32 + 1) / norm;
    }
    Ok(total)
}

/// `Σ_ℓ s_ℓ t^{…}/(…)!` with the model's exact `1/y` coefficients at `P = π²`, `S = 1`.
pub fn series_moment(model: &ModelSpec, k: u32, t: f64) -> Result<f64> {
    let inv = model.invert_y(k as usize + 3)?;
    let values = HashMap::from([(Gen::P, PI * PI), (Gen::S, 1.0)]);
    let top = match model.parity() {
        ModelParity::Bosonic => 2 * k + 2,
        ModelParity::Super => 2 * k + 1,
    };
    let mut total = 0.0;
    for l in 0..=top / 2 {
        let e = top - 2 * l;
        total += inv.get(l as i64)?.eval(&values)? * t.powi(e as i32) / factorial_f64(e);
    }
    Ok(total)
}

/// Compares kernel moments with the series for `k ≤ k_max` at each `t`.
pub fn check_h_moments(model: &ModelSpec, k_max: u32, t_samples: &[f64]) -> Result<MomentReport> {
    let kernel = KernelSpec::for_model(model)?;
    let mut rows = Vec::new();
    for k in 0..=k_max {
        for &t in t_samples {
            rows.push(row(model.to_string(), k, t, kernel_moment(&kernel, k, t)?, series_moment(model, k, t)?));
        }
    }
    Ok(MomentReport { tolerance: TOLERANCE, rows })
}

/// `∫₀^∞ x^{2k+1}/(e^x - 1) dx = (2k+1)! ζ(2k+2)` for `k ≤ k_max`.
pub fn check_twist_moment(k_max: u32) -> Result<MomentReport> {
    let mut rows = Vec::new();
    for k in 0..=k_max {
        let f = |x: f64| if x == 0.0 { 0.0 } else { x.powi(2 * k as i32 + 1) / x.exp_m1() };
        let end = tail_cutoff(k, 0.0, 1.0) + 10.0;
        let numeric = integrate_pieces(&f, 0.0, end, 4.0);
        let zeta = rat_to_f64(&zeta_even_coeff(k + 1)?) * (PI * PI).powi(k as i32 + 1);
        rows.push(row("twist".into(), k, 0.0, numeric, factorial_f64(2 * k + 1) * zeta));
    }
    Ok(MomentReport { tolerance: TOLERANCE, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> KernelSpec {
        KernelSpec::for_model(&s.parse().unwrap()).unwrap()
    }

    #[test]
    fn pointwise_values() {
        assert_eq!(kernel_eval(&spec("wp"), 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(kernel_eval(&spec("airy"), 1.0, 2.0).unwrap(), 1.0);
        assert!(kernel_eval(&spec("mp:5"), 1.0, 0.7).unwrap().is_finite());
        assert!(matches!(kernel_eval(&spec("bessel"), 1.0, 1.0), Err(Error::DeltaSupport { .. })));
        assert!(matches!(kernel_eval(&spec("smp:1"), 1.0, -1.0), Err(Error::DeltaSupport { .. })));
        assert!(KernelSpec::for_model(&ModelSpec::mp_sym()).is_err());
        assert!("mp:4".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn parity() {
        let grid = [-2.3, -0.7, 0.4, 1.1, 3.2];
        for (name, sign) in [("airy", 1.0), ("wp", 1.0), ("mp:5", 1.0), ("mp:7", 1.0), ("swp", -1.0), ("smp:5", -1.0)] {
            let k = spec(name);
            for &x in &grid {
                for &y in &grid {
                    let d = kernel_eval(&k, x, -y).unwrap() - sign * kernel_eval(&k, x, y).unwrap();
                    assert!(d.abs() < 1e-12, "{name} at ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn limits_in_p() {
        let (m1, airy) = (spec("mp:1"), spec("airy"));
        let (m101, wp) = (spec("mp:101"), spec("wp"));
        for &x in &[0.3, 1.0, 2.5] {
            for &y in &[0.2, 1.7, -0.9] {
                assert_eq!(kernel_eval(&m1, x, y).unwrap(), kernel_eval(&airy, x, y).unwrap());
                let d = kernel_eval(&m101, x, y).unwrap() - kernel_eval(&wp, x, y).unwrap();
                assert!(d.abs() < 1e-3, "({x},{y}): {d}");
            }
        }
    }

    #[test]
    fn airy_first_moment() {
        let r = check_h_moments(&ModelSpec::airy(), 0, &[1.0]).unwrap();
        assert!((r.rows[0].numeric - 0.5).abs() < 1e-12);
        assert!(r.passed());
    }

    #[test]
    fn moments_match_series() {
        for name in ["wp", "mp:5", "bessel", "swp", "smp:5", "smp:1"] {
            let r = check_h_moments(&name.parse().unwrap(), 3, &[0.5, 1.0, 2.0]).unwrap();
            let worst = r.rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
            assert!(r.passed(), "{name}: worst {worst:e}");
        }
    }

    #[test]
    fn twist_moments() {
        let r = check_twist_moment(4).unwrap();
        assert!(r.passed(), "{:?}", r.rows);
        assert!((r.rows[0].numeric - PI * PI / 6.0).abs() < 1e-10);
        assert!((r.rows[1].expected - 6.493939402266829).abs() < 1e-10);
    }
}

//! Independent oracles for computed tables.
//!
//! The Witten-Kontsevich numbers come from a small DVV implementation that
//! shares no code with the engine. The Weil-Petersson volumes are checked
//! against the string and dilaton equations at `L = 2 pi i`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use volrec::abo::{assemble_polynomial, model_table};
use volrec::exact::{Gen, Rat, SymPoly};
use volrec::models::ModelSpec;
use volrec::table::{multisets, stable_pairs};

fn dfact(n: i64) -> BigInt {
    (1..=n).rev().step_by(2).fold(BigInt::one(), |acc, k| acc * k)
}

fn df(n: i64) -> Rat {
    Rat::from_integer(dfact(n))
}

/// `<tau_d1 ... tau_dn>_g` by the DVV recursion on the first index.
struct Dvv(HashMap<(u32, Vec<u32>), Rat>);

impl Dvv {
    fn get(&mut self, g: u32, d: &[u32]) -> Rat {
        let n = d.len() as i64;
        let dim = 3 * g as i64 - 3 + n;
        if n == 0 || dim < 0 || d.iter().map(|&x| x as i64).sum::<i64>() != dim {
            return Rat::zero();
        }
        let mut key = d.to_vec();
        key.sort_unstable_by(|a, b| b.cmp(a));
        if let Some(v) = self.0.get(&(g, key.clone())) {
            return v.clone();
        }
        let v = match (g, key.as_slice()) {
            (0, [0, 0, 0]) => Rat::one(),
            (1, [1]) => Rat::new(1.into(), 24.into()),
            (_, [0, ..]) => Rat::zero(),
            _ => self.recurse(g, &key),
        };
        self.0.insert((g, key), v.clone());
        v
    }

    fn recurse(&mut self, g: u32, d: &[u32]) -> Rat {
        let k = d[0] as i64 - 1;
        let rest = &d[1..];
        let mut acc = Rat::zero();
        for j in 0..rest.len() {
            let a = rest[j] as i64;
            let mut next = rest.to_vec();
            next[j] = (k + a) as u32;
            acc += df(2 * k + 2 * a + 1) / df(2 * a - 1) * self.get(g, &next);
        }
        let mut half = Rat::zero();
        for r in 0..k {
            let s = k - 1 - r;
            let w = df(2 * r + 1) * df(2 * s + 1);
            if g > 0 {
                let mut next = vec![r as u32, s as u32];
                next.extend_from_slice(rest);
                half += &w * self.get(g - 1, &next);
            }
            for mask in 0u32..1 << rest.len() {
                let (mut i, mut j) = (vec![r as u32], vec![s as u32]);
                for (b, &x) in rest.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        i.push(x)
                    } else {
                        j.push(x)
                    }
                }
                for g1 in 0..=g {
                    half += &w * self.get(g1, &i) * self.get(g - g1, &j);
                }
            }
        }
        (acc + half / Rat::from_integer(2.into())) / df(2 * k + 3)
    }
}

#[test]
fn airy_table_is_witten_kontsevich() {
    let table = model_table(&ModelSpec::airy(), 6).unwrap();
    let mut dvv = Dvv(HashMap::new());
    let mut nonzero = 0;
    for (g, n) in stable_pairs(6) {
        for a in multisets(n, 3 * g + n as u32 - 3) {
            let weight: BigInt = a.iter().map(|&x| dfact(2 * x as i64 + 1)).product();
            let want = dvv.get(g, &a) * Rat::from_integer(weight);
            let got = table.get(g, &a).as_constant().unwrap_or_else(Rat::zero);
            assert_eq!(got, want, "g={g} a={a:?}");
            nonzero += usize::from(!want.is_zero());
        }
    }
    assert_eq!(table.len(), nonzero);
    // Spot values of the oracle itself.
    assert_eq!(dvv.get(2, &[4]), Rat::new(1.into(), 1152.into()));
    assert_eq!(dvv.get(1, &[1, 1]), Rat::new(1.into(), 24.into()));
    assert_eq!(dvv.get(3, &[7]), Rat::new(1.into(), 82944.into()));
}

/// `d/dl_i` of a polynomial, `l_i = L_i^2`.
fn d_l(p: &SymPoly, i: u32) -> SymPoly {
    let slot = Gen::L(i).index();
    SymPoly::from_terms(p.terms().filter(|(e, _)| e.get(slot).is_some_and(|&k| k > 0)).map(|(e, c)| {
        let mut e = e.to_vec();
        let k = e[slot];
        e[slot] -= 1;
        (e, c * Rat::from_integer(k.into()))
    }))
}

/// `int_0^{L_i} L_i p dL_i`.
fn int_l(p: &SymPoly, i: u32) -> SymPoly {
    let slot = Gen::L(i).index();
    SymPoly::from_terms(p.terms().map(|(e, c)| {
        let mut e = e.to_vec();
        e.resize(e.len().max(slot + 1), 0);
        e[slot] += 1;
        let w = Rat::from_integer((2 * e[slot]).into());
        (e, c / w)
    }))
}

fn wp_volume(table: &volrec::table::VolumeTable, g: u32, n: usize) -> SymPoly {
    assemble_polynomial(table, g, n).unwrap().subst(&ModelSpec::s_one())
}

#[test]
fn wp_volumes_satisfy_string_and_dilaton() {
    let table = model_table(&ModelSpec::wp(), 6).unwrap();
    let minus_four_pi2 = SymPoly::gen(Gen::P).scale(&Rat::from_integer((-4).into()));
    let mut checked = 0;
    for (g, n1) in stable_pairs(6) {
        let n = n1 - 1;
        if n == 0 || !volrec::table::is_stable(g, n) {
            continue;
        }
        let big = wp_volume(&table, g, n1);
        let small = wp_volume(&table, g, n);
        let at = |p: &SymPoly| p.subst_poly(Gen::L(n1 as u32), &minus_four_pi2);
        let string: SymPoly = (1..=n as u32).fold(SymPoly::zero(), |acc, i| &acc + &int_l(&small, i));
        assert_eq!(at(&big), string, "string ({g},{n})");
        let lhs = at(&d_l(&big, n1 as u32)).scale(&Rat::from_integer(2.into()));
        let rhs = small.scale(&Rat::from_integer((2 * g as i64 - 2 + n as i64).into()));
        assert_eq!(lhs, rhs, "dilaton ({g},{n})");
        checked += 1;
    }
    assert!(checked >= 8, "{checked}");
}

//! Named acceptance suites, shared by the test harness and the `check`
//! command. Each suite runs a batch of exact or numeric checks and reports
//! one line per check; an error inside a check is a failed line, not an
//! aborted suite.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::abo::{model_table, mv_twist_weights, twist_initial_data, twisted_model_table, InitialData};
use crate::ceo::{ceo_recurse, dilaton_leaf_table, laplace_bridge, twisted_ceo_recurse};
use crate::error::{Error, Result};
use crate::exact::{binomial, rat, rint, Gen, Rat, SymPoly};
use crate::genfun::{
    cj_iterate, conjugation_failures, group_action_twist, index_cutoff, model_table_via_shift,
    twisted_table_via_group_action, virasoro_build, virasoro_check, BaseKind, GenFun, Monomial, VirasoroKind,
};
use crate::golden::golden_tables;
use crate::graphs::{beta, combinatorial_volume, enumerate_stable_graphs, generalized_volume_report, StableGraph};
use crate::kernels::{check_h_moments, check_twist_moment};
use crate::models::ModelSpec;
use crate::table::{ModelParity, VolumeTable};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<CheckLine>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        Self { suite: suite.name().into(), passed: true, checks: Vec::new() }
    }

    fn push(&mut self, name: impl Into<String>, outcome: Result<(bool, String)>) {
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        self.passed &= pass;
        self.checks.push(CheckLine { name: name.into(), pass, detail });
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckLine> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Computation budget. The defaults are the acceptance levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// Level `2g-2+n` for untwisted tables.
    pub untwisted_level: u32,
    /// Level for twisted tables.
    pub twisted_level: u32,
    /// Largest Virasoro index.
    pub virasoro_k: i32,
    /// Grading levels checked against each Virasoro operator.
    pub virasoro_level: u32,
}

impl Default for Budget {
    fn default() -> Self {
        Self { untwisted_level: 6, twisted_level: 4, virasoro_k: 6, virasoro_level: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Suite {
    Golden,
    MasurVeech,
    CrossRoute,
    Correlators,
    FreeEnergies,
    Virasoro,
    Invariants,
    Kernels,
    Graphs,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Golden,
        Suite::MasurVeech,
        Suite::CrossRoute,
        Suite::Correlators,
        Suite::FreeEnergies,
        Suite::Virasoro,
        Suite::Invariants,
        Suite::Kernels,
        Suite::Graphs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Golden => "golden",
            Suite::MasurVeech => "masur-veech",
            Suite::CrossRoute => "cross-route",
            Suite::Correlators => "correlators",
            Suite::FreeEnergies => "free-energies",
            Suite::Virasoro => "virasoro",
            Suite::Invariants => "invariants",
            Suite::Kernels => "kernels",
            Suite::Graphs => "graphs",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Suite::Golden => "published volume tables regenerated exactly",
            Suite::MasurVeech => "Masur-Veech and generalized volume anchors via twist and graph sums",
            Suite::CrossRoute => "ABO, CEO, dilaton-leaf and generating-function routes agree",
            Suite::Correlators => "Airy and Bessel correlator anchors",
            Suite::FreeEnergies => "Airy, Bessel and twisted free-energy expansions",
            Suite::Virasoro => "Virasoro constraints, commutators and twisted conjugates",
            Suite::Invariants => "degree homogeneity and p -> 1, p -> infinity limits",
            Suite::Kernels => "kernel moments against the exact series",
            Suite::Graphs => "stable graph counts and worked contributions",
        }
    }

    pub fn run(self, budget: &Budget) -> SuiteReport {
        match self {
            Suite::Golden => golden_suite(),
            Suite::MasurVeech => masur_veech_suite(),
            Suite::CrossRoute => cross_route_suite(budget.untwisted_level, budget.twisted_level),
            Suite::Correlators => correlator_suite(),
            Suite::FreeEnergies => free_energy_suite(),
            Suite::Virasoro => virasoro_suite(budget.virasoro_k, budget.virasoro_level),
            Suite::Invariants => invariant_suite(budget.untwisted_level, budget.twisted_level),
            Suite::Kernels => kernel_suite(),
            Suite::Graphs => graph_suite(),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "appendix-c" {
            return Ok(Suite::Golden);
        }
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::Invalid(format!("unknown suite `{s}`")))
    }
}

fn sp(s: &str) -> Result<SymPoly> {
    SymPoly::parse(s)
}

fn equal(what: &str, got: &SymPoly, want: &SymPoly) -> (bool, String) {
    if got == want {
        (true, got.render())
    } else {
        (false, format!("{what}: got {}, expected {}", got.render(), want.render()))
    }
}

fn same_tables(a: &VolumeTable, b: &VolumeTable) -> (bool, String) {
    match a.first_difference(b) {
        None => (true, format!("{} entries", a.len())),
        Some((g, k)) => (false, format!("first difference at g={g}, a={k:?}")),
    }
}

// ---------------------------------------------------------------- golden

pub fn golden_suite() -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Golden);
    let tables = match golden_tables() {
        Ok(t) => t,
        Err(e) => {
            r.push("parse", Err(e));
            return r;
        }
    };
    for t in tables {
        r.push(
            t.title.clone(),
            t.check().map(|rep| {
                let detail = match rep.failures().next() {
                    None => format!("{} polynomials, {} corrected misprint(s)", rep.rows.len(), rep.errata),
                    Some(f) => format!("({},{}) expected {} computed {}", f.g, f.n, f.expected, f.computed),
                };
                (rep.passed(), detail)
            }),
        );
    }
    r
}

// ---------------------------------------------------------------- Masur-Veech

pub fn masur_veech_suite() -> SuiteReport {
    let mut r = SuiteReport::new(Suite::MasurVeech);
    for (g, n, want) in [(1u32, 1usize, "2*P/3"), (0, 4, "2*P")] {
        let lv = crate::table::level(g, n) as u32;
        r.push(
            format!("Vol Q_{g},{n} via twisted recursion"),
            (|| {
                let t = twisted_model_table(&ModelSpec::airy(), lv)?;
                let v = t.get(g, &vec![0; n]).scale(&beta(g, n)?);
                Ok(equal("beta V^MV(0)", &v, &sp(want)?))
            })(),
        );
        r.push(
            format!("Vol Q_{g},{n} via stable graphs"),
            (|| {
                let rep = combinatorial_volume(&model_table(&ModelSpec::airy(), lv)?, g, n, true)?;
                Ok(equal("graph sum", &rep.total, &sp(want)?))
            })(),
        );
    }
    let generalized = [
        (ModelSpec::mp_sym(), 1u32, 1usize, "2*P*S*(1-Q)/3 + 2*P/3"),
        (ModelSpec::mp_sym(), 0, 4, "8*P*S*(1-Q) + 2*P"),
        (ModelSpec::smp_sym(), 2, 1, "P/128*(18*S*(1-Q) + 3)"),
        (ModelSpec::smp_sym(), 3, 1, "P^2/1024*((1-Q)*(6*S^2*(227-27*Q) + 255*S) + 23)"),
    ];
    for (m, g, n, want) in generalized {
        r.push(
            format!("{m} ({g},{n}) via twist and graphs"),
            (|| {
                let want = sp(want)?;
                let (value, rep) = generalized_volume_report(&m, g, n, false)?;
                let (ok1, d1) = equal("twisted recursion", &value, &want);
                let (ok2, d2) = equal("graph sum", &rep.total, &want);
                Ok((ok1 && ok2, if ok1 && ok2 { d1 } else { format!("{d1}; {d2}") }))
            })(),
        );
    }
    r
}

// ---------------------------------------------------------------- cross-route

pub fn cross_route_suite(untwisted_level: u32, twisted_level: u32) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::CrossRoute);
    for m in ModelSpec::registry() {
        let lv = untwisted_level;
        match model_table(&m, lv) {
            Err(e) => r.push(format!("{m} ABO"), Err(e)),
            Ok(abo) => {
                r.push(
                    format!("{m} CEO = ABO (level {lv})"),
                    ceo_recurse(&m, lv).map(|c| same_tables(&laplace_bridge(&c), &abo)),
                );
                r.push(
                    format!("{m} dilaton leaves = ABO (level {lv})"),
                    dilaton_leaf_table(&m, lv, false).map(|c| same_tables(&laplace_bridge(&c), &abo)),
                );
                r.push(
                    format!("{m} Z shift = ABO (level {lv})"),
                    model_table_via_shift(&m, lv).map(|t| same_tables(&t, &abo)),
                );
            }
        }
        let lv = twisted_level;
        match twisted_model_table(&m, lv) {
            Err(e) => r.push(format!("{m} twisted ABO"), Err(e)),
            Ok(abo) => {
                r.push(
                    format!("{m} twisted CEO = ABO (level {lv})"),
                    twisted_ceo_recurse(&m, lv).map(|c| same_tables(&laplace_bridge(&c), &abo)),
                );
                r.push(
                    format!("{m} twisted dilaton leaves = ABO (level {lv})"),
                    dilaton_leaf_table(&m, lv, true).map(|c| same_tables(&laplace_bridge(&c), &abo)),
                );
                r.push(
                    format!("{m} group action = ABO (level {lv})"),
                    twisted_table_via_group_action(&m, lv).map(|t| same_tables(&t, &abo)),
                );
            }
        }
    }
    r
}

// ---------------------------------------------------------------- correlators

type Slice = BTreeMap<Vec<u32>, SymPoly>;

fn slice_of(t: &VolumeTable, g: u32, n: usize) -> Slice {
    t.slice(g, n).map(|(a, v)| (a.clone(), v.clone())).collect()
}

fn expected_slice(rows: &[(&[u32], &str)]) -> Result<Slice> {
    rows.iter().map(|(a, c)| Ok((a.to_vec(), sp(c)?))).collect()
}

fn compare_slices(got: &Slice, want: &Slice) -> (bool, String) {
    if got == want {
        return (true, format!("{} coefficients", want.len()));
    }
    let keys: Vec<&Vec<u32>> = got.keys().chain(want.keys()).collect();
    let bad = keys.into_iter().find(|k| got.get(*k) != want.get(*k)).expect("slices differ");
    let show = |s: &Slice| s.get(bad).map(SymPoly::render).unwrap_or_else(|| "0".into());
    (false, format!("{bad:?}: got {}, expected {}", show(got), show(want)))
}

pub fn correlator_suite() -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Correlators);
    type Rows = &'static [(&'static [u32], &'static str)];
    let airy: [(u32, usize, Rows); 7] = [
        (0, 3, &[(&[0, 0, 0], "1")]),
        (1, 1, &[(&[1], "1/8")]),
        (0, 4, &[(&[0, 0, 0, 1], "3")]),
        (1, 2, &[(&[0, 2], "5/8"), (&[1, 1], "3/8")]),
        (0, 5, &[(&[0, 0, 0, 0, 2], "15"), (&[0, 0, 0, 1, 1], "18")]),
        (1, 3, &[(&[0, 0, 3], "35/8"), (&[0, 1, 2], "15/4"), (&[1, 1, 1], "9/4")]),
        (2, 1, &[(&[4], "105/128")]),
    ];
    match ceo_recurse(&ModelSpec::airy(), 3) {
        Err(e) => r.push("W^A", Err(e)),
        Ok(t) => {
            for (g, n, rows) in airy {
                r.push(format!("W^A_{g},{n}"), expected_slice(rows).map(|w| compare_slices(&slice_of(&t, g, n), &w)));
            }
        }
    }
    let bessel: [(u32, usize, Rows); 6] = [
        (2, 1, &[(&[1], "9/128")]),
        (2, 2, &[(&[0, 1], "27/128")]),
        (2, 3, &[(&[0, 0, 1], "27/32")]),
        (3, 1, &[(&[2], "225/1024")]),
        (2, 4, &[(&[0, 0, 0, 1], "135/32")]),
        (3, 2, &[(&[0, 2], "1125/1024"), (&[1, 1], "567/512")]),
    ];
    match ceo_recurse(&ModelSpec::bessel(), 6) {
        Err(e) => r.push("W^B", Err(e)),
        Ok(t) => {
            r.push("W^B_0,n = 0 (n <= 8)", Ok(((3..=8).all(|n| t.slice(0, n).next().is_none()), "all zero".into())));
            for n in 1..=6usize {
                let f: i64 = (1..n as i64).product();
                let want = Slice::from([(vec![0; n], SymPoly::constant(rat(f, 8)))]);
                r.push(format!("W^B_1,{n} = (n-1)!/8"), Ok(compare_slices(&slice_of(&t, 1, n), &want)));
            }
            for (g, n, rows) in bessel {
                r.push(format!("W^B_{g},{n}"), expected_slice(rows).map(|w| compare_slices(&slice_of(&t, g, n), &w)));
            }
        }
    }
    r
}

// ---------------------------------------------------------------- free energies

/// Plain coefficients of the `n`-variable monomials of `F_g`.
fn fe_slice(f: &GenFun, g: u32, n: usize) -> Slice {
    let h = g as i32 - 1;
    f.terms().filter(|((hh, t), _)| *hh == h && t.len() == n).map(|((_, t), v)| (t.clone(), v.clone())).collect()
}

/// A closed-form piece of a free energy: `coeff · Π t_rest / (1-t_0)^pole`,
/// or `coeff · (-log(1-t_0))` when `pole == 0`; `minus_one` subtracts the
/// `t_0`-free constant.
struct Closed {
    coeff: &'static str,
    rest: &'static [u32],
    pole: u32,
    minus_one: bool,
}

/// Expected plain coefficients of `F_g` for every monomial with grade at most
/// `level`.
fn closed_form(g: u32, pieces: &[Closed], level: u32) -> Result<BTreeMap<Monomial, SymPoly>> {
    let h = g as i32 - 1;
    let mut out: BTreeMap<Monomial, SymPoly> = BTreeMap::new();
    for p in pieces {
        let c = sp(p.coeff)?;
        let mut m = 0u32;
        loop {
            let n = p.rest.len() as u32 + m;
            if 2 * h + n as i32 > level as i32 {
                break;
            }
            let weight: Rat = if p.pole == 0 {
                if m == 0 {
                    Rat::from_integer(0.into())
                } else {
                    rat(1, m as i64)
                }
            } else if m == 0 && p.minus_one {
                Rat::from_integer(0.into())
            } else {
                rint(binomial(m + p.pole - 1, p.pole - 1))
            };
            if n > 0 && weight != Rat::from_integer(0.into()) {
                let mut t = vec![0; m as usize];
                t.extend_from_slice(p.rest);
                t.sort_unstable();
                let slot = out.entry((h, t)).or_default();
                *slot += &c.scale(&weight);
            }
            m += 1;
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

fn compare_closed(f: &GenFun, g: u32, pieces: &[Closed]) -> Result<(bool, String)> {
    let h = g as i32 - 1;
    let level = f.level_max();
    let want = closed_form(g, pieces, level)?;
    let got: BTreeMap<Monomial, SymPoly> = f
        .terms()
        .filter(|((hh, t), _)| *hh == h && !t.is_empty() && 2 * h + t.len() as i32 <= level as i32)
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if got == want {
        return Ok((true, format!("{} coefficients through level {level}", want.len())));
    }
    let bad = got.keys().chain(want.keys()).find(|k| got.get(*k) != want.get(*k)).expect("differ");
    let show = |s: &BTreeMap<Monomial, SymPoly>| s.get(bad).map(SymPoly::render).unwrap_or_else(|| "0".into());
    Ok((false, format!("t{:?}: got {}, expected {}", bad.1, show(&got), show(&want))))
}

const fn pole(coeff: &'static str, rest: &'static [u32], pole: u32) -> Closed {
    Closed { coeff, rest, pole, minus_one: false }
}

const fn pole_minus_one(coeff: &'static str, pole: u32) -> Closed {
    Closed { coeff, rest: &[], pole, minus_one: true }
}

const fn log_t0(coeff: &'static str) -> Closed {
    Closed { coeff, rest: &[], pole: 0, minus_one: false }
}

type FeRows = &'static [(usize, &'static [(&'static [u32], &'static str)])];

fn check_rows(r: &mut SuiteReport, name: &str, f: &Result<GenFun>, g: u32, rows: FeRows) {
    for (n, row) in rows {
        r.push(
            format!("{name}_{g}, {n}-point terms"),
            match f {
                Ok(f) => expected_slice(row).map(|w| compare_slices(&fe_slice(f, g, *n), &w)),
                Err(e) => Err(e.clone()),
            },
        );
    }
}

pub fn free_energy_suite() -> SuiteReport {
    let mut r = SuiteReport::new(Suite::FreeEnergies);
    let fa = cj_iterate(BaseKind::Airy, 6).and_then(|z| z.log());
    check_rows(
        &mut r,
        "F^A",
        &fa,
        0,
        &[
            (3, &[(&[0, 0, 0], "1/6")]),
            (4, &[(&[0, 0, 0, 1], "1/2")]),
            (5, &[(&[0, 0, 0, 0, 2], "5/8"), (&[0, 0, 0, 1, 1], "3/2")]),
            (6, &[(&[0, 0, 0, 0, 0, 3], "7/8"), (&[0, 0, 0, 0, 1, 2], "45/8"), (&[0, 0, 0, 1, 1, 1], "9/2")]),
        ],
    );
    check_rows(
        &mut r,
        "F^A",
        &fa,
        1,
        &[
            (1, &[(&[1], "1/8")]),
            (2, &[(&[0, 2], "5/8"), (&[1, 1], "3/16")]),
            (3, &[(&[0, 0, 3], "35/16"), (&[0, 1, 2], "15/4"), (&[1, 1, 1], "3/8")]),
        ],
    );
    check_rows(
        &mut r,
        "F^A",
        &fa,
        2,
        &[(1, &[(&[4], "105/128")]), (2, &[(&[0, 5], "1155/128"), (&[1, 4], "945/128"), (&[2, 3], "1015/128")])],
    );
    check_rows(
        &mut r,
        "F^A",
        &fa,
        3,
        &[
            (1, &[(&[7], "25025/1024")]),
            (
                2,
                &[
                    (&[0, 8], "425425/1024"),
                    (&[1, 7], "375375/1024"),
                    (&[2, 6], "385385/1024"),
                    (&[3, 5], "193655/512"),
                    (&[4, 4], "191205/1024"),
                ],
            ),
        ],
    );

    let fb = cj_iterate(BaseKind::Bessel, 9).and_then(|z| z.log());
    let bessel: [(u32, &[Closed]); 5] = [
        (0, &[]),
        (1, &[log_t0("1/8")]),
        (2, &[pole("9/128", &[1], 3)]),
        (3, &[pole("225/1024", &[2], 5), pole("567/1024", &[1, 1], 6)]),
        (4, &[pole("55125/32768", &[3], 7), pole("388125/32768", &[1, 2], 8), pole("64989/4096", &[1, 1, 1], 9)]),
    ];
    for (g, pieces) in bessel {
        r.push(format!("F^B_{g} closed form"), fb.clone().and_then(|f| compare_closed(&f, g, pieces)));
    }

    let twist = |kind: BaseKind, level: u32| -> Result<GenFun> {
        let z = cj_iterate(kind, level)?;
        let u = mv_twist_weights(2 * z.max_index() + 2);
        group_action_twist(&z, &u)?.log()
    };
    let mv = twist(BaseKind::Airy, 4);
    check_rows(
        &mut r,
        "F^MV",
        &mv,
        0,
        &[
            (3, &[(&[0, 0, 0], "1/6")]),
            (4, &[(&[0, 0, 0, 0], "P/48"), (&[0, 0, 0, 1], "1/2")]),
            (
                5,
                &[
                    (&[0, 0, 0, 0, 0], "P^2/160"),
                    (&[0, 0, 0, 0, 1], "P/8"),
                    (&[0, 0, 0, 0, 2], "5/8"),
                    (&[0, 0, 0, 1, 1], "3/2"),
                ],
            ),
        ],
    );
    check_rows(
        &mut r,
        "F^MV",
        &mv,
        1,
        &[
            (1, &[(&[0], "P/12"), (&[1], "1/8")]),
            (2, &[(&[0, 0], "P^2/32"), (&[0, 1], "P/4"), (&[0, 2], "5/8"), (&[1, 1], "3/16")]),
            (
                3,
                &[
                    (&[0, 0, 0], "11/576*P^3"),
                    (&[0, 0, 1], "3/16*P^2"),
                    (&[0, 0, 2], "65/96*P"),
                    (&[0, 1, 1], "3/4*P"),
                    (&[0, 0, 3], "35/16"),
                    (&[0, 1, 2], "15/4"),
                    (&[1, 1, 1], "3/8"),
                ],
            ),
        ],
    );
    check_rows(
        &mut r,
        "F^MV",
        &mv,
        2,
        &[(
            1,
            &[(&[0], "29/2560*P^4"), (&[1], "P^3/32"), (&[2], "119/1152*P^2"), (&[3], "35/96*P"), (&[4], "105/128")],
        )],
    );

    let smv = twist(BaseKind::Bessel, 7);
    let smv_rows: [(u32, &[Closed]); 4] = [
        (0, &[]),
        (1, &[log_t0("1/8")]),
        (2, &[pole("9/128", &[1], 3), pole_minus_one("3*P/256", 2)]),
        (
            3,
            &[
                pole("225/1024", &[2], 5),
                pole("567/1024", &[1, 1], 6),
                pole("153*P/2048", &[1], 5),
                pole_minus_one("23*P^2/4096", 4),
            ],
        ),
    ];
    for (g, pieces) in smv_rows {
        r.push(format!("F^SMV_{g} closed form"), smv.clone().and_then(|f| compare_closed(&f, g, pieces)));
    }
    r
}

// ---------------------------------------------------------------- Virasoro

pub fn virasoro_suite(k_max: i32, level: u32) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Virasoro);
    let idx = index_cutoff(level + 1);
    let u = mv_twist_weights(2 * idx + 6);
    for kind in [BaseKind::Airy, BaseKind::Bessel] {
        let k0 = if kind == BaseKind::Airy { -1 } else { 0 };
        let label = format!("{kind:?}");
        let z = match cj_iterate(kind, level + 1) {
            Ok(z) => z,
            Err(e) => {
                r.push(label, Err(e));
                continue;
            }
        };
        let ops = |k: VirasoroKind<'_>| -> Result<Vec<_>> {
            (k0..=k_max).map(|j| Ok((j, virasoro_build(k, j, idx)?))).collect()
        };
        let plain_kind = match kind {
            BaseKind::Airy => VirasoroKind::Airy,
            BaseKind::Bessel => VirasoroKind::Bessel,
        };
        r.push(
            format!("{label} L_{k0}..L_{k_max} annihilate Z"),
            (|| {
                let rep = virasoro_check(&z, &ops(plain_kind)?, level)?;
                Ok((
                    rep.passed(),
                    format!(
                        "levels <= {}, {} residuals, {} commutator pairs on {} monomials, {} failures",
                        rep.levels_checked,
                        rep.residuals.len(),
                        rep.commutator_pairs,
                        rep.span_size,
                        rep.commutator_failures.len()
                    ),
                ))
            })(),
        );
        r.push(
            format!("{label} twisted L_{k0}..L_{k_max} annihilate the twisted Z"),
            (|| {
                let data = InitialData::for_model(&kind.spec(), idx + 2)?;
                let tw = twist_initial_data(&data, &u)?;
                let zt = group_action_twist(&z, &u)?;
                let twisted = ops(VirasoroKind::Generic(&tw))?;
                let rep = virasoro_check(&zt, &twisted, level)?;
                let plain = ops(VirasoroKind::Generic(&data))?;
                let span: Vec<Monomial> =
                    z.terms().map(|(m, _)| m.clone()).filter(|(h, t)| 2 * h + t.len() as i32 <= 2).collect();
                let mut conj_bad = 0;
                for ((_, l), (_, lt)) in plain.iter().zip(&twisted) {
                    conj_bad += conjugation_failures(l, lt, &u, &span, idx)?.len();
                }
                Ok((
                    rep.passed() && conj_bad == 0,
                    format!(
                        "levels <= {}, {} residuals, {} commutator failures, {} conjugation failures on {} monomials",
                        rep.levels_checked,
                        rep.residuals.len(),
                        rep.commutator_failures.len(),
                        conj_bad,
                        span.len()
                    ),
                ))
            })(),
        );
    }
    r
}

// ---------------------------------------------------------------- invariants

/// Every term of `F^{(g)}_a` has π-degree `budget - |a|` and `Q`-degree ≤
/// `S`-degree ≤ π-degree; untwisted terms have equal π- and `S`-degrees.
fn homogeneity(t: &VolumeTable, parity: ModelParity, twisted: bool) -> (bool, String) {
    for ((g, a), v) in t.entries() {
        let Some(bound) = parity.degree_bound(*g, a.len()) else {
            return (false, format!("entry at unstable ({g},{})", a.len()));
        };
        let sum: u32 = a.iter().sum();
        if sum > bound {
            return (false, format!("g={g}, a={a:?} exceeds the degree bound {bound}"));
        }
        for (e, _) in v.terms() {
            let d = |i: usize| e.get(i).copied().unwrap_or(0);
            let (p, s, q) = (d(Gen::P.index()), d(Gen::S.index()), d(Gen::Q.index()));
            let ok = p == bound - sum && q <= s && s <= p && (twisted || s == p) && e.len() <= 3;
            if !ok {
                return (false, format!("g={g}, a={a:?}: term with degrees (pi {p}, s {s}, q {q})"));
            }
        }
    }
    (true, format!("{} entries", t.len()))
}

pub fn invariant_suite(untwisted_level: u32, twisted_level: u32) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Invariants);
    let mut tables: BTreeMap<(String, bool), VolumeTable> = BTreeMap::new();
    for m in ModelSpec::registry() {
        for twisted in [false, true] {
            let t = if twisted { twisted_model_table(&m, twisted_level) } else { model_table(&m, untwisted_level) };
            let tag = if twisted { "twisted " } else { "" };
            match t {
                Ok(t) => {
                    r.push(format!("{tag}{m} homogeneity"), Ok(homogeneity(&t, m.parity(), twisted)));
                    tables.insert((m.to_string(), twisted), t);
                }
                Err(e) => r.push(format!("{tag}{m} homogeneity"), Err(e)),
            }
        }
    }
    let limits = [("mp:sym", "airy", "wp"), ("smp:sym", "bessel", "swp")];
    for (deformed, at_one, at_zero) in limits {
        for twisted in [false, true] {
            let tag = if twisted { "twisted " } else { "" };
            let get = |name: &str| {
                tables
                    .get(&(name.to_string(), twisted))
                    .ok_or_else(|| Error::Invalid(format!("{name} table unavailable")))
            };
            r.push(
                format!("{tag}{deformed} at p = 1 is {at_one}"),
                (|| {
                    let d = get(deformed)?.specialize(&ModelSpec::q_subst(rat(1, 1)));
                    Ok(same_tables(&d, get(at_one)?))
                })(),
            );
            r.push(
                format!("{tag}{deformed} at p = infinity is {at_zero}"),
                (|| {
                    let d = get(deformed)?.specialize(&ModelSpec::q_subst(rat(0, 1)));
                    Ok(same_tables(&d, get(at_zero)?))
                })(),
            );
        }
    }
    r
}

// ---------------------------------------------------------------- kernels

pub const KERNEL_MODELS: [&str; 7] = ["airy", "wp", "mp:5", "mp:7", "bessel", "swp", "smp:5"];
pub const KERNEL_TIMES: [f64; 3] = [0.5, 1.0, 2.0];

pub fn kernel_suite() -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Kernels);
    for name in KERNEL_MODELS {
        r.push(
            format!("{name} moments k <= 3"),
            (|| {
                let rep = check_h_moments(&name.parse()?, 3, &KERNEL_TIMES)?;
                let worst = rep.rows.iter().map(|x| x.rel_error).fold(0.0, f64::max);
                Ok((rep.passed(), format!("{} samples, worst relative error {worst:.2e}", rep.rows.len())))
            })(),
        );
    }
    r.push(
        "twist moments k <= 4",
        (|| {
            let rep = check_twist_moment(4)?;
            let worst = rep.rows.iter().map(|x| x.rel_error).fold(0.0, f64::max);
            Ok((rep.passed(), format!("{} samples, worst relative error {worst:.2e}", rep.rows.len())))
        })(),
    );
    r
}

// ---------------------------------------------------------------- graphs

fn is_loop_graph(gr: &StableGraph) -> bool {
    gr.genus == [1] && gr.edges == [(0, 0)]
}

fn is_dumbbell(gr: &StableGraph) -> bool {
    gr.genus == [1, 1] && gr.edge_count() == 1 && gr.edges[0].0 != gr.edges[0].1
}

pub fn graph_suite() -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Graphs);
    for (g, n, skip_zero, want) in [(1u32, 1usize, false, 2usize), (2, 1, true, 3), (3, 1, true, 10)] {
        let tag = if skip_zero { " without genus-zero vertices" } else { "" };
        r.push(
            format!("stable graphs ({g},{n}){tag}"),
            enumerate_stable_graphs(g, n, skip_zero)
                .map(|gs| (gs.len() == want, format!("{} graphs, expected {want}", gs.len()))),
        );
    }
    r.push(
        "|Aut| on (1,1) is {1, 2}",
        enumerate_stable_graphs(1, 1, false).map(|gs| {
            let mut a: Vec<String> = gs.iter().map(|g| g.automorphisms().to_string()).collect();
            a.sort();
            (a == ["1", "2"], a.join(", "))
        }),
    );
    let smp = ModelSpec::smp_sym();
    match generalized_volume_report(&smp, 2, 1, false) {
        Err(e) => r.push("SM(p) (2,1) contributions", Err(e)),
        Ok((value, rep)) => {
            let find = |pred: fn(&StableGraph) -> bool| rep.graphs.iter().find(|c| pred(&c.graph));
            let piece = |name: &str, pred: fn(&StableGraph) -> bool, aut: &str, want: &str| {
                let want = sp(want)?;
                let c = find(pred).ok_or_else(|| Error::Invalid(format!("{name} graph missing")))?;
                let ok = c.value == want && c.automorphisms == aut;
                Ok((ok, format!("{} with |Aut| = {}", c.value.render(), c.automorphisms)))
            };
            r.push("dumbbell of two genus-one vertices gives pi^2/384", piece("dumbbell", is_dumbbell, "1", "P/384"));
            r.push("genus-one vertex with a loop gives pi^2/48", piece("loop", is_loop_graph, "2", "P/48"));
            r.push(
                "SM(p) (2,1) graph sum equals the twisted constant term",
                sp("P/128*(18*S*(1-Q) + 3)").map(|w| {
                    let (a, d) = equal("graph sum", &rep.total, &w);
                    let (b, _) = equal("twisted", &value, &w);
                    (a && b, d)
                }),
            );
        }
    }
    r
}

/// Runs every suite in order.
pub fn run_all(budget: &Budget) -> Vec<SuiteReport> {
    Suite::ALL.iter().map(|s| s.run(budget)).collect()
}

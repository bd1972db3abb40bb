use std::fmt::Write as _;

use anyhow::{anyhow, bail, ensure, Context, Result};
use serde::Serialize;
use serde_json::json;
use volrec::abo::{assemble_polynomial, model_table, twisted_model_table};
use volrec::ceo::{ceo_recurse, dilaton_leaf_table, laplace_bridge, twisted_ceo_recurse};
use volrec::exact::{rat, Gen, Rat, SymPoly};
use volrec::genfun::{model_table_via_shift, twisted_table_via_group_action, GenFun};
use volrec::graphs::{
    enumerate_stable_graphs, generalized_volume_report, masur_veech_volume, mv_edge_moment, twist_graph_sum,
    GraphSumReport,
};
use volrec::kernels::{check_h_moments, check_twist_moment, MomentReport};
use volrec::models::ModelSpec;
use volrec::suites::{Budget, Suite, SuiteReport, KERNEL_MODELS, KERNEL_TIMES};
use volrec::table::{is_stable, level, CoeffTable, ModelParity, VolumeTable};

use crate::{Cli, Command, Format, KernelAction, Route, Specialize};

/// What to print, and whether the command counts as a success.
pub struct Outcome {
    pub stdout: String,
    pub ok: bool,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, ok: true }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let fmt = cli.format.unwrap_or(match cli.command {
        Command::Check { .. } => Format::Json,
        _ => Format::Text,
    });
    match &cli.command {
        Command::Volume { model, g, n, twist, route, spec } => {
            volume(cli.level_max, fmt, model, *g, *n, *twist, *route, spec)
        }
        Command::Mv { model, g, n, breakdown, spec } => mv(cli.level_max, fmt, model, *g, *n, *breakdown, spec),
        Command::Genfun { model, g, twist, level } => {
            genfun(cli.level_max, fmt, model, *g, *twist, level.unwrap_or(cli.level_max))
        }
        Command::Graphs { model, g, n, no_genus_zero } => graphs(cli.level_max, fmt, model, *g, *n, *no_genus_zero),
        Command::Kernels { action: KernelAction::Check { model, k_max, t, twist_k_max } } => {
            kernels(fmt, model, *k_max, t, *twist_k_max)
        }
        Command::Check { suite } => check(cli.level_max, fmt, suite),
    }
}

fn parse_model(s: &str) -> Result<ModelSpec> {
    s.parse().with_context(|| format!("bad model `{s}`"))
}

/// Level of a stable `(g, n)` with `n ≥ 1`, within the budget.
fn checked_level(g: u32, n: usize, level_max: u32) -> Result<u32> {
    ensure!(n >= 1 && is_stable(g, n), "(g, n) = ({g}, {n}) must be stable with n >= 1");
    let lv = level(g, n) as u32;
    ensure!(
        lv <= level_max,
        "level 2g-2+n = {lv} exceeds the budget {level_max} (raise --level-max or VOLREC_LEVEL_MAX)"
    );
    Ok(lv)
}

fn substitutions(spec: &Specialize, s_default: bool) -> Result<Vec<(Gen, Rat)>> {
    let mut out = Vec::new();
    match &spec.s {
        Some(s) => {
            let v = SymPoly::parse(s)
                .ok()
                .and_then(|p| p.as_constant())
                .ok_or_else(|| anyhow!("--s expects a rational number, got `{s}`"))?;
            out.push((Gen::S, v));
        }
        None if s_default => out.extend(ModelSpec::s_one()),
        None => {}
    }
    if let Some(p) = spec.p {
        ensure!(p >= 1, "--p must be positive");
        out.extend(ModelSpec::q_subst(rat(1, (p as i64).pow(2))));
    }
    Ok(out)
}

fn table_via(m: &ModelSpec, lv: u32, twist: bool, route: Route) -> Result<VolumeTable> {
    Ok(match (route, twist) {
        (Route::Abo, false) => model_table(m, lv)?,
        (Route::Abo, true) => twisted_model_table(m, lv)?,
        (Route::Ceo, false) => laplace_bridge(&ceo_recurse(m, lv)?),
        (Route::Ceo, true) => laplace_bridge(&twisted_ceo_recurse(m, lv)?),
        (Route::Leaves, t) => laplace_bridge(&dilaton_leaf_table(m, lv, t)?),
        (Route::Genfun, false) => model_table_via_shift(m, lv)?,
        (Route::Genfun, true) => twisted_table_via_group_action(m, lv)?,
        (Route::Graphs | Route::All, _) => unreachable!("not a table route"),
    })
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::Abo => "abo",
        Route::Ceo => "ceo",
        Route::Leaves => "leaves",
        Route::Genfun => "genfun",
        Route::Graphs => "graphs",
        Route::All => "all",
    }
}

fn volume_via(m: &ModelSpec, g: u32, n: usize, lv: u32, twist: bool, route: Route) -> Result<SymPoly> {
    if route == Route::Graphs {
        ensure!(twist, "the graphs route computes twisted volumes; add --twist");
        let plain = model_table(m, lv)?;
        let super_model = m.parity() == ModelParity::Super;
        return Ok(twist_graph_sum(&plain, g, n, &mv_edge_moment, super_model)?.total);
    }
    Ok(assemble_polynomial(&table_via(m, lv, twist, route)?, g, n)?)
}

#[allow(clippy::too_many_arguments)]
fn volume(
    level_max: u32,
    fmt: Format,
    model: &str,
    g: u32,
    n: usize,
    twist: bool,
    route: Route,
    spec: &Specialize,
) -> Result<Outcome> {
    let m = parse_model(model)?;
    let lv = checked_level(g, n, level_max)?;
    let subst = substitutions(spec, !twist)?;
    let poly = if route == Route::All {
        let mut routes = vec![Route::Abo, Route::Ceo, Route::Leaves, Route::Genfun];
        if twist {
            routes.push(Route::Graphs);
        }
        let values =
            routes.iter().map(|&r| Ok((r, volume_via(&m, g, n, lv, twist, r)?))).collect::<Result<Vec<_>>>()?;
        let reference = &values[0].1;
        if values.iter().any(|(_, v)| v != reference) {
            let mut diff = format!("routes disagree for {model} ({g},{n}):\n");
            for (r, v) in &values {
                let mark = if v == reference { ' ' } else { '!' };
                let _ = writeln!(diff, "{mark} {:<7} {}", route_name(*r), v.render());
            }
            bail!(diff.trim_end().to_string());
        }
        values.into_iter().next().expect("at least one route").1
    } else {
        volume_via(&m, g, n, lv, twist, route)?
    };
    let poly = poly.subst(&subst);
    Ok(Outcome::ok(match fmt {
        Format::Text => format!("{}\n", poly.render()),
        Format::Json => pretty(&json!({
            "model": m.to_string(),
            "g": g,
            "n": n,
            "twisted": twist,
            "route": route_name(route),
            "polynomial": poly.render(),
            "terms": poly,
        }))?,
    }))
}

fn mv(
    level_max: u32,
    fmt: Format,
    model: &str,
    g: u32,
    n: usize,
    breakdown: bool,
    spec: &Specialize,
) -> Result<Outcome> {
    let m = parse_model(model)?;
    checked_level(g, n, level_max)?;
    let subst = substitutions(spec, false)?;
    let (value, report) = if m == ModelSpec::airy() {
        let v = masur_veech_volume(g, n)?;
        let (_, report) = generalized_volume_report(&m, g, n, true)?;
        (v, report)
    } else {
        let (v, report) = generalized_volume_report(&m, g, n, false)?;
        ensure!(v == report.total, "twisted recursion gives {}, graph sum gives {}", v.render(), report.total.render());
        (v, report)
    };
    let value = value.subst(&subst);
    Ok(Outcome::ok(match fmt {
        Format::Text => {
            let mut s = format!("{}\n", value.render());
            if breakdown {
                for c in &report.graphs {
                    let _ = writeln!(
                        s,
                        "  {}  |Aut|={}  {}",
                        graph_label(&c.graph),
                        c.automorphisms,
                        c.value.subst(&subst).render()
                    );
                }
            }
            s
        }
        Format::Json => pretty(&json!({
            "model": m.to_string(),
            "g": g,
            "n": n,
            "volume": value.render(),
            "graphs": breakdown.then_some(&report),
        }))?,
    }))
}

fn graph_label(gr: &volrec::graphs::StableGraph) -> String {
    format!("genus={:?} legs={:?} edges={:?}", gr.genus, gr.legs, gr.edges)
}

/// Entries of one genus, in the table's own JSON layout.
fn genus_slice(t: &VolumeTable, g: u32) -> VolumeTable {
    let mut out = CoeffTable::new(t.basis);
    for ((h, a), v) in t.entries() {
        if *h == g {
            out.insert(g, a, v.clone());
        }
    }
    out
}

fn genfun(level_max: u32, fmt: Format, model: &str, g: u32, twist: bool, lv: u32) -> Result<Outcome> {
    let m = parse_model(model)?;
    ensure!(lv <= level_max, "level {lv} exceeds the budget {level_max}");
    let table = if twist { twisted_model_table(&m, lv)? } else { model_table(&m, lv)? };
    let f = GenFun::from_table(&table, lv);
    let rendered = f.render_free_energy(g)?;
    Ok(Outcome::ok(match fmt {
        Format::Text => format!("F_{g} = {rendered}\n"),
        Format::Json => pretty(&json!({
            "model": m.to_string(),
            "twisted": twist,
            "g": g,
            "level": lv,
            "free_energy": rendered,
            "table": genus_slice(&table, g),
        }))?,
    }))
}

#[derive(Serialize)]
struct GraphsJson<'a> {
    model: String,
    dot: Vec<String>,
    report: &'a GraphSumReport,
}

fn graphs(level_max: u32, fmt: Format, model: &str, g: u32, n: usize, no_genus_zero: bool) -> Result<Outcome> {
    let m = parse_model(model)?;
    let lv = checked_level(g, n, level_max)?;
    let plain = model_table(&m, lv)?;
    let report = twist_graph_sum(&plain, g, n, &mv_edge_moment, no_genus_zero)?;
    debug_assert_eq!(report.graphs.len(), enumerate_stable_graphs(g, n, no_genus_zero)?.len());
    let dot: Vec<String> =
        report.graphs.iter().enumerate().map(|(i, c)| c.graph.to_dot(&format!("G{}", i + 1))).collect();
    Ok(Outcome::ok(match fmt {
        Format::Text => {
            let mut s = String::new();
            for (d, c) in dot.iter().zip(&report.graphs) {
                let _ = writeln!(s, "// |Aut| = {}, contribution {}", c.automorphisms, c.contribution);
                s.push_str(d);
                if !d.ends_with('\n') {
                    s.push('\n');
                }
            }
            let _ = writeln!(s, "// {} graphs, total {}", report.graphs.len(), report.total_rendered);
            s
        }
        Format::Json => pretty(&GraphsJson { model: m.to_string(), dot, report: &report })?,
    }))
}

fn kernels(fmt: Format, models: &[String], k_max: u32, t: &[f64], twist_k_max: u32) -> Result<Outcome> {
    let names: Vec<String> =
        if models.is_empty() { KERNEL_MODELS.iter().map(|s| s.to_string()).collect() } else { models.to_vec() };
    let t = if t.is_empty() { KERNEL_TIMES.to_vec() } else { t.to_vec() };
    let mut reports: Vec<(String, MomentReport)> = Vec::new();
    for name in &names {
        reports.push((name.clone(), check_h_moments(&parse_model(name)?, k_max, &t)?));
    }
    reports.push(("twist".into(), check_twist_moment(twist_k_max)?));
    let ok = reports.iter().all(|(_, r)| r.passed());
    let stdout = match fmt {
        Format::Text => {
            let mut s = format!(
                "{:<8} {:>2} {:>5} {:>22} {:>22} {:>10}  result\n",
                "model", "k", "t", "quadrature", "series", "rel.err"
            );
            for (name, r) in &reports {
                for row in &r.rows {
                    let _ = writeln!(
                        s,
                        "{:<8} {:>2} {:>5} {:>22.15e} {:>22.15e} {:>10.2e}  {}",
                        name,
                        row.k,
                        row.t,
                        row.numeric,
                        row.expected,
                        row.rel_error,
                        if row.pass { "PASS" } else { "FAIL" }
                    );
                }
            }
            let _ = writeln!(s, "{}", if ok { "all kernel checks pass" } else { "kernel checks FAILED" });
            s
        }
        Format::Json => {
            let body: serde_json::Map<String, serde_json::Value> =
                reports.iter().map(|(n, r)| Ok((n.clone(), serde_json::to_value(r)?))).collect::<Result<_>>()?;
            pretty(&json!({ "passed": ok, "reports": body }))?
        }
    };
    Ok(Outcome { stdout, ok })
}

fn check(level_max: u32, fmt: Format, names: &[String]) -> Result<Outcome> {
    let suites: Vec<Suite> = if names.is_empty() {
        Suite::ALL.to_vec()
    } else {
        names.iter().map(|s| s.parse::<Suite>()).collect::<std::result::Result<_, _>>()?
    };
    let budget = budget_for(level_max);
    let reports: Vec<SuiteReport> = suites.iter().map(|s| s.run(&budget)).collect();
    let ok = reports.iter().all(|r| r.passed);
    let stdout = match fmt {
        Format::Json => pretty(&json!({ "passed": ok, "budget": budget, "suites": reports }))?,
        Format::Text => {
            let mut s = String::new();
            for r in &reports {
                let _ = writeln!(s, "{} {}", if r.passed { "PASS" } else { "FAIL" }, r.suite);
                for c in &r.checks {
                    let _ = writeln!(s, "  {} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail);
                }
            }
            s
        }
    };
    Ok(Outcome { stdout, ok })
}

/// Suite levels for a budget; 6 gives the acceptance levels.
fn budget_for(level_max: u32) -> Budget {
    Budget {
        untwisted_level: level_max,
        twisted_level: level_max.saturating_sub(2).max(1),
        virasoro_level: level_max.saturating_sub(1).max(1),
        ..Budget::default()
    }
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

//! Every route to the coefficient tables agrees, entry by entry.
//!
//! The acceptance target runs the full levels; these tests use one level
//! less so that a failure points at a single model quickly.

use volrec::abo::{model_table, twisted_model_table};
use volrec::ceo::{ceo_recurse, dilaton_leaf_table, laplace_bridge, twisted_ceo_recurse};
use volrec::exact::{rat, Gen, SymPoly};
use volrec::genfun::{model_table_via_shift, twisted_table_via_group_action};
use volrec::models::ModelSpec;
use volrec::table::VolumeTable;

fn assert_same(name: &str, a: &VolumeTable, b: &VolumeTable) {
    assert_eq!(a.first_difference(b), None, "{name}");
    assert!(a.same_coefficients(b), "{name}");
}

fn untwisted(spec: &str, level: u32) {
    let m: ModelSpec = spec.parse().unwrap();
    let abo = model_table(&m, level).unwrap();
    assert!(!abo.is_empty());
    assert_same("CEO", &laplace_bridge(&ceo_recurse(&m, level).unwrap()), &abo);
    assert_same("dilaton leaves", &laplace_bridge(&dilaton_leaf_table(&m, level, false).unwrap()), &abo);
    assert_same("shift", &model_table_via_shift(&m, level).unwrap(), &abo);
}

fn twisted(spec: &str, level: u32) {
    let m: ModelSpec = spec.parse().unwrap();
    let abo = twisted_model_table(&m, level).unwrap();
    assert!(!abo.is_empty());
    assert_same("twisted CEO", &laplace_bridge(&twisted_ceo_recurse(&m, level).unwrap()), &abo);
    assert_same("twisted dilaton leaves", &laplace_bridge(&dilaton_leaf_table(&m, level, true).unwrap()), &abo);
    assert_same("group action", &twisted_table_via_group_action(&m, level).unwrap(), &abo);
}

#[test]
fn airy_routes() {
    untwisted("airy", 5);
    twisted("airy", 3);
}

#[test]
fn wp_routes() {
    untwisted("wp", 5);
    twisted("wp", 3);
}

#[test]
fn mp_routes() {
    untwisted("mp:sym", 5);
    twisted("mp:sym", 3);
}

#[test]
fn bessel_routes() {
    untwisted("bessel", 5);
    twisted("bessel", 3);
}

#[test]
fn swp_routes() {
    untwisted("swp", 5);
    twisted("swp", 3);
}

#[test]
fn smp_routes() {
    untwisted("smp:sym", 5);
    twisted("smp:sym", 3);
}

#[test]
fn concrete_p_routes() {
    for spec in ["mp:5", "mp:7", "smp:5"] {
        untwisted(spec, 4);
        twisted(spec, 2);
    }
}

/// Fixing `p` after the recursion and before it give the same table.
#[test]
fn concrete_p_is_a_specialisation() {
    for (sym, fixed) in [("mp:sym", "mp:5"), ("smp:sym", "smp:5")] {
        let generic = model_table(&sym.parse().unwrap(), 4).unwrap().specialize(&ModelSpec::q_subst(rat(1, 25)));
        let fixed = model_table(&fixed.parse().unwrap(), 4).unwrap();
        assert_same(sym, &generic, &fixed);
    }
}

#[test]
fn a_perturbed_entry_is_caught() {
    let m = ModelSpec::wp();
    let abo = model_table(&m, 3).unwrap();
    let mut bad = abo.clone();
    let (key, v) = abo.entries().iter().last().map(|(k, v)| (k.clone(), v.clone())).unwrap();
    bad.insert(key.0, &key.1, &v + &SymPoly::gen(Gen::P));
    assert_eq!(abo.first_difference(&bad), Some(key));
}

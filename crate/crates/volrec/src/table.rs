//! Sparse symmetric coefficient tables and multi-index combinatorics shared
//! by the recursions.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::exact::{Gen, Rat, SymPoly};

/// Which basis the coefficients of a table refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// `Π L_i^{2a_i}/(2a_i+1)!`
    #[serde(rename = "L")]
    Length,
    /// `Π 1/z_i^{2a_i+2}`
    #[serde(rename = "z")]
    Z,
}

/// Bosonic (KdV-type) or super (BGW-type) model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelParity {
    Bosonic,
    Super,
}

impl ModelParity {
    /// Largest `Σa_i` that can carry a nonzero coefficient, or `None` if
    /// every entry of this `(g, n)` vanishes.
    pub fn degree_bound(self, g: u32, n: usize) -> Option<u32> {
        let b = match self {
            ModelParity::Bosonic => 3 * g as i64 - 3 + n as i64,
            ModelParity::Super => g as i64 - 1,
        };
        (b >= 0).then_some(b as u32)
    }
}

/// `2g - 2 + n`.
pub fn level(g: u32, n: usize) -> i64 {
    2 * g as i64 - 2 + n as i64
}

pub fn is_stable(g: u32, n: usize) -> bool {
    level(g, n) > 0
}

/// All stable `(g, n)` with `n ≥ 1` and `1 ≤ level ≤ level_max`, ordered by level.
pub fn stable_pairs(level_max: u32) -> Vec<(u32, usize)> {
    let mut out = Vec::new();
    for l in 1..=level_max as i64 {
        for g in 0..=((l + 1) / 2) as u32 {
            let n = l + 2 - 2 * g as i64;
            if n >= 1 {
                out.push((g, n as usize));
            }
        }
    }
    out
}

/// Map `(g, sorted a) → coefficient`, storing only nonzero entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffTable {
    pub basis: Basis,
    #[serde(with = "entry_list")]
    entries: BTreeMap<(u32, Vec<u32>), SymPoly>,
}

/// Coefficients in the length basis.
pub type VolumeTable = CoeffTable;
/// Coefficients in the `1/z` basis.
pub type CorrTable = CoeffTable;

impl CoeffTable {
    pub fn new(basis: Basis) -> Self {
        Self { basis, entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, g: u32, a: &[u32], v: SymPoly) {
        let mut key = a.to_vec();
        key.sort_unstable();
        if v.is_zero() {
            self.entries.remove(&(g, key));
        } else {
            self.entries.insert((g, key), v);
        }
    }

    /// Coefficient for any ordering of `a`; absent entries are zero.
    pub fn get(&self, g: u32, a: &[u32]) -> SymPoly {
        let mut key = a.to_vec();
        key.sort_unstable();
        self.entries.get(&(g, key)).cloned().unwrap_or_default()
    }

    pub fn get_sorted(&self, g: u32, a: &[u32]) -> Option<&SymPoly> {
        self.entries.get(&(g, a.to_vec()))
    }

    pub fn entries(&self) -> &BTreeMap<(u32, Vec<u32>), SymPoly> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Nonzero entries of one `(g, n)`.
    pub fn slice(&self, g: u32, n: usize) -> impl Iterator<Item = (&Vec<u32>, &SymPoly)> {
        self.entries
            .range((g, Vec::new())..(g + 1, Vec::new()))
            .filter(move |((_, a), _)| a.len() == n)
            .map(|((_, a), v)| (a, v))
    }

    /// Entries with `2g - 2 + n ≤ level_max`.
    pub fn restrict_level(&self, level_max: i64) -> Self {
        Self {
            basis: self.basis,
            entries: self
                .entries
                .iter()
                .filter(|((g, a), _)| level(*g, a.len()) <= level_max)
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Entries with exactly the given `(g, n)`.
    pub fn restrict_gn(&self, g: u32, n: usize) -> Self {
        Self { basis: self.basis, entries: self.slice(g, n).map(|(a, v)| ((g, a.clone()), v.clone())).collect() }
    }

    pub fn map(&self, f: impl Fn(&SymPoly) -> SymPoly) -> Self {
        let mut out = Self::new(self.basis);
        for ((g, a), v) in &self.entries {
            out.insert(*g, a, f(v));
        }
        out
    }

    pub fn specialize(&self, subst: &[(Gen, Rat)]) -> Self {
        self.map(|v| v.subst(subst))
    }

    /// Same coefficient data, basis tag ignored.
    pub fn same_coefficients(&self, other: &Self) -> bool {
        self.entries == other.entries
    }

    /// First differing key between two tables, for diagnostics.
    pub fn first_difference(&self, other: &Self) -> Option<(u32, Vec<u32>)> {
        let keys = self.entries.keys().chain(other.entries.keys());
        keys.filter(|(g, a)| self.get(*g, a) != other.get(*g, a)).min().cloned()
    }
}

mod entry_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row {
        g: u32,
        a: Vec<u32>,
        coeff: SymPoly,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<(u32, Vec<u32>), SymPoly>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Row> = m.iter().map(|((g, a), c)| Row { g: *g, a: a.clone(), coeff: c.clone() }).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(u32, Vec<u32>), SymPoly>, D::Error> {
        let rows = Vec::<Row>::deserialize(d)?;
        Ok(rows
            .into_iter()
            .filter(|r| !r.coeff.is_zero())
            .map(|mut r| {
                r.a.sort_unstable();
                ((r.g, r.a), r.coeff)
            })
            .collect())
    }
}

/// Sorted multisets of `n` nonnegative integers with sum at most `max_sum`.
pub fn multisets(n: usize, max_sum: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, min: u32, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let slots = (n - cur.len()) as u32;
        let mut v = min;
        while v * slots <= left {
            cur.push(v);
            rec(n, v, left - v, cur, out);
            cur.pop();
            v += 1;
        }
    }
    let mut out = Vec::new();
    rec(n, 0, max_sum, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Sorted multisets of `m` integers, each at least `min`, with sum at most `max_sum`.
pub fn multisets_from(m: usize, min: u32, max_sum: u32) -> Vec<Vec<u32>> {
    let shift = min * m as u32;
    if shift > max_sum {
        return Vec::new();
    }
    multisets(m, max_sum - shift).into_iter().map(|v| v.into_iter().map(|x| x + min).collect()).collect()
}

/// Distinct orderings of a multiset.
pub fn distinct_permutations(a: &[u32]) -> Vec<Vec<u32>> {
    let mut v = a.to_vec();
    v.sort_unstable();
    let mut out = vec![v.clone()];
    // Lexicographic next-permutation enumerates each distinct ordering once.
    loop {
        let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
            return out;
        };
        let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("pivot exists");
        v.swap(i - 1, j);
        v[i..].reverse();
        out.push(v.clone());
    }
}

/// Splits of a sorted multiset into `(J, complement)` with the number of
/// index subsets realising each split.
pub fn sub_multisets(a: &[u32]) -> Vec<(Vec<u32>, Vec<u32>, BigInt)> {
    let mut groups: Vec<(u32, u32)> = Vec::new();
    for &x in a {
        match groups.last_mut() {
            Some((v, c)) if *v == x => *c += 1,
            _ => groups.push((x, 1)),
        }
    }
    let mut out = Vec::new();
    let mut pick = vec![0u32; groups.len()];
    loop {
        let mut j = Vec::new();
        let mut rest = Vec::new();
        let mut mult = BigInt::one();
        for (&(v, c), &k) in groups.iter().zip(&pick) {
            j.extend(std::iter::repeat_n(v, k as usize));
            rest.extend(std::iter::repeat_n(v, (c - k) as usize));
            mult *= crate::exact::binomial(c, k);
        }
        out.push((j, rest, mult));
        let mut i = 0;
        loop {
            if i == groups.len() {
                return out;
            }
            if pick[i] < groups[i].1 {
                pick[i] += 1;
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stable_pairs_by_level() {
        assert_eq!(stable_pairs(2), vec![(0, 3), (1, 1), (0, 4), (1, 2)]);
    }

    #[test]
    fn degree_bounds() {
        assert_eq!(ModelParity::Bosonic.degree_bound(1, 1), Some(1));
        assert_eq!(ModelParity::Super.degree_bound(0, 5), None);
        assert_eq!(ModelParity::Super.degree_bound(3, 1), Some(2));
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(multisets(2, 2), vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 1]]);
        assert_eq!(multisets(0, 3), vec![Vec::<u32>::new()]);
        assert_eq!(multisets_from(2, 2, 5), vec![vec![2, 2], vec![2, 3]]);
        assert_eq!(distinct_permutations(&[1, 0, 1]).len(), 3);
        assert_eq!(distinct_permutations(&[]).len(), 1);
    }

    #[test]
    fn table_round_trip() {
        let mut t = CoeffTable::new(Basis::Length);
        t.insert(1, &[1], SymPoly::parse("1/8").unwrap());
        t.insert(0, &[0, 0, 0], SymPoly::one());
        t.insert(0, &[1, 0, 0, 0], SymPoly::zero());
        assert_eq!(t.len(), 2);
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"basis\":\"L\""));
        let back: CoeffTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(t.slice(1, 1).count(), 1);
    }

    proptest! {
        #[test]
        fn sub_multisets_count_all_subsets(a in prop::collection::vec(0u32..3, 0..7)) {
            let mut a = a;
            a.sort_unstable();
            let total: BigInt = sub_multisets(&a).into_iter().map(|(_, _, m)| m).sum();
            prop_assert_eq!(total, BigInt::from(1u64 << a.len()));
        }

        #[test]
        fn distinct_permutation_count(a in prop::collection::vec(0u32..3, 0..6)) {
            let perms = distinct_permutations(&a);
            let mut counts = std::collections::BTreeMap::new();
            for &x in &a { *counts.entry(x).or_insert(0u32) += 1; }
            let mut expected = crate::exact::factorial(a.len() as u32);
            for c in counts.values() { expected /= crate::exact::factorial(*c); }
            prop_assert_eq!(BigInt::from(perms.len()), expected);
        }
    }
}

//! Published volume tables as golden data.
//!
//! Ten tables of low-order volume polynomials are bundled as text and parsed
//! at runtime into [`SymPoly`] values, then compared against
//! [`assemble_polynomial`] on freshly computed coefficient tables.

use std::str::FromStr;

use serde::Serialize;

use crate::abo::{assemble_polynomial, model_table, twisted_model_table};
use crate::error::{Error, Result};
use crate::exact::{factorial, Gen, SymPoly};
use crate::models::ModelSpec;
use crate::table::{distinct_permutations, level, VolumeTable};

const DATA: &str = include_str!("../data/volume_tables.txt");

/// One `(g, n)` polynomial of a golden table.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenEntry {
    pub g: u32,
    pub n: usize,
    pub poly: SymPoly,
}

/// A corrected misprint: the coefficient of `m_partition` in `V_{g,n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Erratum {
    pub g: u32,
    pub n: usize,
    pub partition: Vec<u32>,
    pub printed: SymPoly,
    pub corrected: SymPoly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenTable {
    pub id: String,
    pub model: ModelSpec,
    pub twisted: bool,
    pub title: String,
    pub entries: Vec<GoldenEntry>,
    pub errata: Vec<Erratum>,
}

impl GoldenTable {
    pub fn level_max(&self) -> u32 {
        self.entries.iter().map(|e| level(e.g, e.n)).max().unwrap_or(1).max(1) as u32
    }

    /// Computes the model's table to the needed level.
    pub fn compute(&self) -> Result<VolumeTable> {
        if self.twisted {
            twisted_model_table(&self.model, self.level_max())
        } else {
            model_table(&self.model, self.level_max())
        }
    }

    /// Compares every entry against `computed`.
    pub fn compare(&self, computed: &VolumeTable) -> Result<GoldenReport> {
        let mut rows = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let mut got = assemble_polynomial(computed, e.g, e.n)?;
            if !self.twisted {
                got = got.subst(&ModelSpec::s_one());
            }
            rows.push(GoldenRow {
                g: e.g,
                n: e.n,
                pass: got == e.poly,
                expected: e.poly.render(),
                computed: got.render(),
            });
        }
        Ok(GoldenReport { table: self.id.clone(), title: self.title.clone(), rows, errata: self.errata.len() })
    }

    pub fn check(&self) -> Result<GoldenReport> {
        self.compare(&self.compute()?)
    }

    pub fn entry(&self, g: u32, n: usize) -> Option<&SymPoly> {
        self.entries.iter().find(|e| e.g == g && e.n == n).map(|e| &e.poly)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenRow {
    pub g: u32,
    pub n: usize,
    pub pass: bool,
    pub expected: String,
    pub computed: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenReport {
    pub table: String,
    pub title: String,
    pub rows: Vec<GoldenRow>,
    /// Number of corrected misprints in the table.
    pub errata: usize,
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &GoldenRow> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

/// `m_λ(l_1, …, l_n)`, the monomial symmetric polynomial in `l_i = L_i²`.
pub fn monomial_symmetric(partition: &[u32], n: usize) -> Result<SymPoly> {
    if partition.len() > n {
        return Err(Error::Invalid(format!("partition {partition:?} longer than n = {n}")));
    }
    let mut padded = partition.to_vec();
    padded.resize(n, 0);
    let mut out = SymPoly::zero();
    for perm in distinct_permutations(&padded) {
        let powers: Vec<(Gen, u32)> = perm.iter().enumerate().map(|(i, &d)| (Gen::L(i as u32 + 1), d)).collect();
        out += &SymPoly::monomial(&powers, num_traits::One::one());
    }
    Ok(out)
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse { pos: line, msg: format!("golden data: {msg}") }
}

fn parse_n(s: &str, line: usize) -> Result<Vec<usize>> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| parse_err(line, e));
    match s.split_once("..") {
        Some((a, b)) => Ok((num(a)?..=num(b)?).collect()),
        None => Ok(vec![num(s)?]),
    }
}

fn parse_partition(s: &str, line: usize) -> Result<Vec<u32>> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.split(',').map(|t| t.trim().parse::<u32>().map_err(|e| parse_err(line, e))).collect()
}

/// Parses the bundled data file.
pub fn parse_tables(src: &str) -> Result<Vec<GoldenTable>> {
    let mut tables: Vec<GoldenTable> = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if let Some(rest) = text.strip_prefix("table ") {
            let mut it = rest.splitn(4, ' ');
            let (Some(id), Some(model), Some(kind), Some(title)) = (it.next(), it.next(), it.next(), it.next()) else {
                return Err(parse_err(line, "expected `table <id> <model> <kind> <title>`"));
            };
            let twisted = match kind {
                "plain" => false,
                "twisted" => true,
                k => return Err(parse_err(line, format!("unknown table kind `{k}`"))),
            };
            tables.push(GoldenTable {
                id: id.into(),
                model: ModelSpec::from_str(model)?,
                twisted,
                title: title.into(),
                entries: Vec::new(),
                errata: Vec::new(),
            });
            continue;
        }
        let table = tables.last_mut().ok_or_else(|| parse_err(line, "entry before any table"))?;
        let fields: Vec<&str> = text.split('|').map(str::trim).collect();
        let (gn, part, coeff, printed) = match fields[..] {
            [gn, part, coeff] => (gn, part, coeff, None),
            [gn, part, coeff, note] => {
                let expr = note
                    .strip_prefix("printed ")
                    .ok_or_else(|| parse_err(line, "fourth field must be `printed <expr>`"))?;
                (gn, part, coeff, Some(SymPoly::parse(expr)?))
            }
            _ => return Err(parse_err(line, "expected `g n | partition | coefficient`")),
        };
        let (g, n) = gn.split_once(' ').ok_or_else(|| parse_err(line, "expected `g n`"))?;
        let g: u32 = g.parse().map_err(|e| parse_err(line, e))?;
        let partition = parse_partition(part, line)?;
        for n in parse_n(n, line)? {
            let expr = coeff.replace("(n-1)!", &factorial(n as u32 - 1).to_string());
            let c = SymPoly::parse(&expr)?;
            if let Some(printed) = &printed {
                table.errata.push(Erratum {
                    g,
                    n,
                    partition: partition.clone(),
                    printed: printed.clone(),
                    corrected: c.clone(),
                });
            }
            let term = &c * &monomial_symmetric(&partition, n)?;
            match table.entries.iter_mut().find(|e| e.g == g && e.n == n) {
                Some(e) => e.poly += &term,
                None => table.entries.push(GoldenEntry { g, n, poly: term }),
            }
        }
    }
    Ok(tables)
}

/// The ten bundled tables.
pub fn golden_tables() -> Result<Vec<GoldenTable>> {
    parse_tables(DATA)
}

/// Looks a bundled table up by id (`wp`, `mst`, `swp`, `smst`, `mv`,
/// `wp_tw`, `mst_tw`, `smv`, `swp_tw`, `smst_tw`).
pub fn golden_table(id: &str) -> Result<GoldenTable> {
    golden_tables()?.into_iter().find(|t| t.id == id).ok_or_else(|| Error::Invalid(format!("no golden table `{id}`")))
}

/// Checks all bundled tables.
pub fn check_all() -> Result<Vec<GoldenReport>> {
    golden_tables()?.iter().map(GoldenTable::check).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn data_parses_into_ten_tables() {
        let t = golden_tables().unwrap();
        assert_eq!(t.len(), 10);
        let ids: Vec<&str> = t.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, ["wp", "mst", "swp", "smst", "mv", "wp_tw", "mst_tw", "smv", "swp_tw", "smst_tw"]);
        assert!(t.iter().all(|t| !t.entries.is_empty()));
    }

    #[test]
    fn monomial_symmetric_counts() {
        // m_(2,1) in three variables has 6 terms, m_(1,1) has 3.
        assert_eq!(monomial_symmetric(&[2, 1], 3).unwrap().len(), 6);
        assert_eq!(monomial_symmetric(&[1, 1], 3).unwrap().len(), 3);
        assert_eq!(monomial_symmetric(&[], 4).unwrap(), SymPoly::one());
        assert!(monomial_symmetric(&[1, 1, 1], 2).is_err());
    }

    #[test]
    fn factorial_rows_expand() {
        let t = golden_table("smv").unwrap();
        let e = t.entries.iter().find(|e| e.g == 1 && e.n == 4).unwrap();
        assert_eq!(e.poly, SymPoly::constant(rat(6, 8)));
        let z = t.entries.iter().find(|e| e.g == 0 && e.n == 5).unwrap();
        assert!(z.poly.is_zero());
    }

    #[test]
    fn wp_one_one() {
        let t = golden_table("wp").unwrap();
        let e = t.entries.iter().find(|e| e.g == 1 && e.n == 1).unwrap();
        assert_eq!(e.poly, SymPoly::parse("P/12 + l1/48").unwrap());
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_tables("1 1 | - | 1").is_err());
        assert!(parse_tables("table x airy odd T\n").is_err());
        assert!(parse_tables("table x airy plain T\n1 1 | - \n").is_err());
        assert!(parse_tables("table x airy plain T\n1 1 | a | 1\n").is_err());
        assert!(parse_tables("table x airy plain T\n1 1 | - | 1 | was 2\n").is_err());
    }

    /// The super Masur-Veech table is the `s = 0` face of the twisted super
    /// WP table, and likewise for the bosonic pair. This ties every
    /// erratum to independent printed data.
    #[test]
    fn untwisted_base_tables_are_s_zero_faces() {
        let s0 = [(Gen::S, rat(0, 1))];
        for (base, deformed) in [("smv", "swp_tw"), ("mv", "wp_tw")] {
            let b = golden_table(base).unwrap();
            let d = golden_table(deformed).unwrap();
            for e in &b.entries {
                if let Some(v) = d.entry(e.g, e.n) {
                    assert_eq!(v.subst(&s0), e.poly, "{base} ({},{})", e.g, e.n);
                }
            }
        }
        let smv = golden_table("smv").unwrap();
        assert_eq!(smv.errata.len(), 1);
        let e = &smv.errata[0];
        assert_eq!((e.g, e.n, e.partition.as_slice()), (3, 2, &[1u32][..]));
        assert_ne!(e.printed, e.corrected);
        let total: usize = golden_tables().unwrap().iter().map(|t| t.errata.len()).sum();
        assert_eq!(total, 1);
    }

    #[test]
    fn corrupted_entry_is_detected() {
        let mut t = golden_table("wp").unwrap();
        t.entries.retain(|e| level(e.g, e.n) <= 2);
        let computed = t.compute().unwrap();
        assert!(t.compare(&computed).unwrap().passed());
        t.entries[0].poly += &SymPoly::gen(Gen::P);
        assert_eq!(t.compare(&computed).unwrap().failures().count(), 1);
    }
}

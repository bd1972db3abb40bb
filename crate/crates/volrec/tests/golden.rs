//! Bundled volume tables against computed ones.

use volrec::golden::golden_tables;

#[test]
fn every_golden_table_matches() {
    for table in golden_tables().unwrap() {
        let report = table.check().unwrap();
        for r in report.failures() {
            eprintln!("{} ({},{}):\n  expected {}\n  computed {}", report.table, r.g, r.n, r.expected, r.computed);
        }
        assert!(report.passed(), "table {} differs", report.table);
    }
}

use std::fmt::Write as _;
use std::fs;

use slabww::reference_io::{load_reference, ReferenceError};

fn table(times: &[f64], cells: usize) -> String {
    let mut s = String::from("t,cell_index,x_center,phi\n");
    for t in times {
        for c in 0..cells {
            writeln!(s, "{t},{c},{},{}", c as f64 * 0.5, t + c as f64).unwrap();
        }
    }
    s
}

fn load(text: &str) -> Result<slabww_core::reference::ReferenceTable, ReferenceError> {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ref.csv");
    fs::write(&p, text).unwrap();
    load_reference(&p)
}

#[test]
fn loads_benchmark_shaped_table() {
    let times: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();
    let t = load(&table(&times, 201)).unwrap();
    assert_eq!((t.times().len(), t.cells()), (21, 201));
    assert_eq!(t.flux_at(10.0).unwrap()[200], 210.0);
}

#[test]
fn schema_errors_name_the_field() {
    let missing = table(&[0.0, 0.5], 3).replacen("t,cell_index", "time,cell_index", 1);
    assert!(matches!(load(&missing), Err(ReferenceError::Schema { reason, .. }) if reason.contains("`t`")));
    let reordered = table(&[0.0], 2).replacen("t,cell_index,x_center,phi", "cell_index,t,x_center,phi", 1);
    assert!(matches!(load(&reordered), Err(ReferenceError::Schema { .. })));
    let garbage = format!("{}0.5,0,zero,1\n", table(&[0.0], 1));
    assert!(matches!(load(&garbage), Err(ReferenceError::Schema { .. })));
}

#[test]
fn ordering_errors() {
    let reversed = table(&[0.5, 0.0], 3);
    assert!(matches!(load(&reversed), Err(ReferenceError::Table { .. })));
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_reference(&dir.path().join("absent.csv")), Err(ReferenceError::Io { .. })));
}

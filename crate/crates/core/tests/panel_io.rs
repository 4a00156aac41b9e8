use std::fs;

use matfactor::io::{load_panel, read_loadings, save_panel, IdMaps, PanelFormat, Table};
use matfactor::series::MatrixSeries;
use matfactor::Error;
use ndarray::Array3;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -1e3f64..1e3,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE / 8.0),
    ]
}

fn tensor() -> impl Strategy<Value = Array3<f64>> {
    (1usize..5, 1usize..4, 1usize..4).prop_flat_map(|(t, p1, p2)| {
        proptest::collection::vec(finite(), t * p1 * p2)
            .prop_map(move |v| Array3::from_shape_vec((t, p1, p2), v).unwrap())
    })
}

fn labelled(t: usize, p1: usize, p2: usize) -> IdMaps {
    IdMaps {
        periods: (0..t).map(|i| format!("{}", 1990 + 3 * i)).collect(),
        rows: (0..p1).map(|i| format!("country_{i:02}")).collect(),
        cols: (0..p2).map(|i| format!("series_{}", (b'a' + i as u8) as char)).collect(),
    }
}

#[test]
fn small_long_file_is_placed_by_id() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("panel.csv");
    fs::write(&path, "t,row,col,value\n2,b,y,8\n1,a,x,1\n1,a,y,2\n1,b,x,3\n1,b,y,4\n2,a,x,5\n2,a,y,6\n2,b,x,7\n")
        .unwrap();
    let panel = load_panel(&path, PanelFormat::Long).unwrap();
    assert_eq!(panel.series.dims(), (2, 2, 2));
    assert_eq!(panel.series.slice(1)[[1, 1]], 8.0);
    assert_eq!(panel.series.slice(0)[[1, 0]], 3.0);
    assert_eq!(panel.ids.rows, vec!["a", "b"]);
}

#[test]
fn missing_triple_is_named_with_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("holes.csv");
    fs::write(&path, "t,row,col,value\n1,a,x,1\n1,a,y,2\n1,b,x,3\n").unwrap();
    let err = load_panel(&path, PanelFormat::Long).unwrap_err();
    assert!(matches!(err, Error::Incomplete { .. }), "{err}");
    let msg = err.to_string();
    assert!(msg.contains("(1,b,y)") && msg.contains("holes.csv"), "{msg}");
}

#[test]
fn result_table_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let mut table = Table::new(&["id", "f1", "f2"]);
    let values = [std::f64::consts::PI, -1.0 / 3.0, 6.02e23, 5e-324];
    table.push(vec!["a".into(), matfactor::io::format_float(values[0]), matfactor::io::format_float(values[1])]);
    table.push(vec!["b".into(), matfactor::io::format_float(values[2]), matfactor::io::format_float(values[3])]);
    table.write(&path).unwrap();
    let (ids, m) = read_loadings(&path).unwrap();
    assert_eq!(ids, vec!["a", "b"]);
    let got: Vec<u64> = m.iter().map(|v| v.to_bits()).collect();
    let want: Vec<u64> = values.iter().map(|v| v.to_bits()).collect();
    assert_eq!(got, want);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn save_then_load_is_bit_exact(data in tensor(), stacked in any::<bool>(), named in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        let (t, p1, p2) = data.dim();
        let series = MatrixSeries::new(data.clone()).unwrap();
        let format = if stacked { PanelFormat::Stacked } else { PanelFormat::Long };
        let ids = if named { labelled(t, p1, p2) } else { IdMaps::positional(t, p1, p2) };
        save_panel(&path, &series, Some(&ids), format).unwrap();
        let back = load_panel(&path, format).unwrap();
        let a: Vec<u64> = back.series.view().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = data.iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(a, b);
        if format == PanelFormat::Long {
            prop_assert_eq!(back.ids, ids);
        }
    }
}

use carnot_core::{GridSpec, NodeSet, ScalarField};
use carnot_lab::io::{grid_id, read_field_binary, write_field_binary, write_field_csv, write_report, ReportRow};

fn field() -> ScalarField {
    let grid = GridSpec::with_intervals(&[(-1.0, 1.0), (0.0, 0.5), (-0.25, 0.25)], &[4, 3, 2]).unwrap();
    ScalarField::from_fn(&grid, |x| x[0] * 1.1 - x[1] * x[2] + 1e-17)
}

#[test]
fn binary_roundtrip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.bin");
    let f = field();
    write_field_binary(&path, &f).unwrap();
    let g = read_field_binary(&path).unwrap();
    assert_eq!(grid_id(g.grid()), grid_id(f.grid()));
    let (a, b): (Vec<u64>, Vec<u64>) = (f.values().iter().map(|v| v.to_bits()).collect(), g.values().iter().map(|v| v.to_bits()).collect());
    assert_eq!(a, b);
}

#[test]
fn truncated_binary_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.bin");
    write_field_binary(&path, &field()).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert_eq!(read_field_binary(&path).unwrap_err().exit_code(), 1);
}

#[test]
fn csv_values_parse_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    let f = field();
    let mut active = NodeSet::empty(f.grid().len());
    active.insert(3);
    write_field_csv(&path, &f, Some(&active)).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines().skip(2);
    assert_eq!(lines.next().unwrap(), "x1,x2,x3,u,valid,active");
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[3].parse::<f64>().unwrap().to_bits(), f.get(i).to_bits());
        assert_eq!(cols[5], if i == 3 { "1" } else { "0" });
    }
}

#[test]
fn missing_values_are_empty_cells() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let row = ReportRow { x0: "0;0;0".into(), r: Some(0.5), r2: None, quantity: "beta_eff".into(), value: None, h: 0.125, grid_id: "g".into() };
    write_report(&path, &[row]).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().nth(2).unwrap(), "0;0;0,0.5,,beta_eff,,0.125,g");
}

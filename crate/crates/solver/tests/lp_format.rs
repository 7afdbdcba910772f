use amrsched_solver::{export_lp_file, write_lp, Model, Sense};
use lp_parser_rs::problem::LpProblem;

fn sample() -> Model {
    let mut m = Model::new();
    let x = m.add_continuous("x_r0_k1", 0.0, 480.0, 0.1);
    let y = m.add_binary("y_r0_src_1", 0.0);
    let z = m.add_continuous("T_k1", 5.0, f64::INFINITY, -2.5e-5);
    let f = m.add_continuous("slack", f64::NEG_INFINITY, f64::INFINITY, 0.0);
    m.add_row("c0", [(x, 1.0), (y, -480.0)], Sense::Le, 0.0);
    m.add_row("c1", [(z, 1.0), (x, 1.0), (f, 1.0)], Sense::Ge, 3.0);
    m.add_row("c2", [(y, 1.0)], Sense::Eq, 1.0);
    m
}

#[test]
fn external_parser_accepts_export() {
    let m = sample();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.lp");
    export_lp_file(&m, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, write_lp(&m));
    let parsed = LpProblem::parse(&text).expect("parser accepts the file");
    assert_eq!(parsed.constraint_count(), 3);
    assert_eq!(parsed.variable_count(), 4);
}

#[test]
fn unwritable_path_is_an_error() {
    let err = export_lp_file(&sample(), "/nonexistent-dir/sub/model.lp").unwrap_err();
    assert!(err.to_string().contains("nonexistent-dir"));
}

use super::*;

fn minimal() -> serde_json::Value {
    serde_json::json!({
        "name": "tiny",
        "group": "U(1)",
        "rank": 1,
        "charts": [{
            "label": "pt", "lower": [], "upper": [],
            "action": {"family": "trivial"},
            "cocycle": {"family": "weights", "weights": [2]},
            "connection": {"family": "flat"}
        }],
        "strata": [{"kind": "point", "label": "pt", "chart": "pt", "point": []}],
        "entries": [{"label": "e", "stratum": "pt", "g": {"exp": [0.5]}, "x": [0.25]}],
        "checks": [{"kind": "closedness", "entry": "e"}]
    })
}

fn schema_pointer(v: serde_json::Value) -> String {
    match Scenario::from_json(&v.to_string()) {
        Err(Error::Schema { pointer, .. }) => pointer,
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn builtins_parse_and_round_trip() {
    let all = builtin_scenarios();
    let names: Vec<_> = all.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(
        names,
        ["point-u1-weights", "monopole-s2", "weighted-c-plane", "su2-point"]
    );
    for s in all {
        let again = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(again.to_json(), s.to_json());
        Model::build(&s).unwrap();
    }
}

#[test]
fn pointers_locate_schema_errors() {
    let mut v = minimal();
    v["charts"][0]["cocycle"]["family"] = "nope".into();
    assert!(schema_pointer(v).starts_with("/charts/0/cocycle"));

    let mut v = minimal();
    v["entries"][0]["colour"] = "red".into();
    assert_eq!(schema_pointer(v), "/entries/0/colour");

    let mut v = minimal();
    v["rank"] = "one".into();
    assert_eq!(schema_pointer(v), "/rank");

    let mut v = minimal();
    v["checks"][0]["entry"] = "missing".into();
    assert_eq!(schema_pointer(v), "/checks/0/entry");

    let mut v = minimal();
    v["checks"][0]["tolerance"] = (-1.0).into();
    assert_eq!(schema_pointer(v), "/checks/0/tolerance");

    let mut v = minimal();
    v["strata"][0]["chart"] = "elsewhere".into();
    assert_eq!(schema_pointer(v), "/strata/0/chart");

    assert!(matches!(Scenario::from_json("{"), Err(Error::Schema { .. })));
}

#[test]
fn duplicate_labels_are_rejected() {
    let mut v = minimal();
    let e = v["entries"][0].clone();
    v["entries"].as_array_mut().unwrap().push(e);
    assert_eq!(schema_pointer(v), "/entries/1/label");
}

#[test]
fn model_errors_point_at_the_offending_item() {
    let mut v = minimal();
    v["charts"][0]["cocycle"]["weights"] = serde_json::json!([1, 2]);
    let s = Scenario::from_json(&v.to_string()).unwrap();
    match Model::build(&s) {
        Err(Error::Schema { pointer, .. }) => assert_eq!(pointer, "/charts/0"),
        other => panic!("{other:?}"),
    }
    let mut v = minimal();
    v["group"] = "E8".into();
    let s = Scenario::from_json(&v.to_string()).unwrap();
    assert!(matches!(Model::build(&s), Err(Error::Registry(_))));
    let mut v = minimal();
    v["entries"][0]["g"] = "somewhere".into();
    let s = Scenario::from_json(&v.to_string()).unwrap();
    assert!(matches!(Model::build(&s), Err(Error::Registry(_))));
}

#[test]
fn group_elements() {
    let g = crate::geometry::su2_diagonal();
    let w = ElementSpec::Matrix {
        matrix: vec![vec![[0.0, 0.0], [1.0, 0.0]], vec![[-1.0, 0.0], [0.0, 0.0]]],
    };
    let w2 = ElementSpec::Product {
        product: vec![w.clone(), w.clone()],
    }
    .resolve(&g)
    .unwrap();
    assert!((w2 + g.identity()).iter().all(|z| z.norm() < 1e-15));
    let bad = ElementSpec::Matrix {
        matrix: vec![vec![[1.0, 0.0]]],
    };
    assert!(matches!(bad.resolve(&g), Err(Error::Dimension(_))));
    let e: ElementSpec = serde_json::from_str("\"identity\"").unwrap();
    assert_eq!(e, ElementSpec::default());
}

#[test]
fn failing_checks_are_reported_not_raised() {
    let mut v = minimal();
    // X outside the centralizer is impossible for U(1); use a stratum that is
    // not fixed instead
    v["charts"][0] = serde_json::json!({
        "label": "pt", "lower": [-1, -1], "upper": [1, 1],
        "action": {"family": "rotation", "weight": 1},
        "cocycle": {"family": "trivial"},
        "connection": {"family": "flat"}
    });
    v["strata"][0] = serde_json::json!({"kind": "point", "label": "pt", "chart": "pt", "point": [0.5, 0]});
    let s = Scenario::from_json(&v.to_string()).unwrap();
    let out = run(&s, &RunOptions::default()).unwrap();
    assert!(!out.report.passed);
    assert_eq!(out.report.checks[0].status, Status::Fail);
    assert!(out.report.checks[0].residual.is_none());
    assert!(out.report.checks[0].detail.contains("not fixed"));
    // the entry table fails too and is recorded once
    assert_eq!(out.report.checks.len(), 2);
}

#[test]
fn tolerance_scale_and_overrides() {
    let s = builtin("point-u1-weights").unwrap();
    let tight = RunOptions {
        tolerance_scale: 1e-30,
        ..RunOptions::default()
    };
    let out = run(&s, &tight).unwrap();
    assert!(!out.report.passed);
    let bad = RunOptions {
        tolerance_scale: 0.0,
        ..RunOptions::default()
    };
    assert!(run(&s, &bad).is_err());
    let chern = RunOptions {
        normalization: Some(Normalization::Chern),
        ..RunOptions::default()
    };
    assert_eq!(run(&s, &chern).unwrap().report.normalization, Normalization::Chern);
}

#[test]
fn reports_are_deterministic() {
    let s = builtin("weighted-c-plane").unwrap();
    let opts = RunOptions {
        grid: Some(8),
        ..RunOptions::default()
    };
    let a = serde_json::to_string(&run(&s, &opts).unwrap().report).unwrap();
    let b = serde_json::to_string(&run(&s, &opts).unwrap().report).unwrap();
    assert_eq!(a, b);
}

#[test]
fn listing_and_resolution() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(list_scenarios(Some(dir.path())).unwrap().len(), 4);
    let mut v = minimal();
    v["description"] = "custom".into();
    std::fs::write(dir.path().join("tiny.json"), v.to_string()).unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let list = list_scenarios(Some(dir.path())).unwrap();
    assert_eq!(list.len(), 5);
    assert_eq!(list[4].name, "tiny");
    assert_eq!(list[4].description, "custom");
    assert_eq!(resolve("su2-point").unwrap().name, "su2-point");
    assert_eq!(
        resolve(dir.path().join("tiny.json").to_str().unwrap()).unwrap().name,
        "tiny"
    );
    assert!(matches!(resolve("no-such-scenario"), Err(Error::Registry(_))));
}

#[test]
fn pointer_rendering() {
    assert_eq!(json_pointer("."), "/");
    assert_eq!(json_pointer("checks[3].entry"), "/checks/3/entry");
    assert_eq!(
        json_pointer("charts[0].cocycle.weights[1]"),
        "/charts/0/cocycle/weights/1"
    );
}

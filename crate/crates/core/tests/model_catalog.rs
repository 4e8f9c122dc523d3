use kinesim_core::robot_model::{load_model, Catalog, Family, ModelError, REFERENCE_MODELS};

#[test]
fn builtin_models_round_trip_through_json() {
    let catalog = Catalog::builtin();
    assert_eq!(catalog.models().len(), 10);
    for model in catalog.models() {
        let back = load_model(&model.to_json()).unwrap();
        assert_eq!(&back, model.as_ref());
        assert_eq!(back.to_json(), model.to_json());
    }
}

#[test]
fn every_family_has_a_reference_model() {
    let catalog = Catalog::builtin();
    for family in [Family::Cartesian, Family::Cylindrical, Family::Spherical, Family::Scara, Family::Articulated] {
        let (_, name) = REFERENCE_MODELS.iter().find(|(f, _)| *f == family).unwrap();
        let model = catalog.get(name).unwrap();
        assert_eq!(model.family(), family);
        assert!(model.ik_binding().is_some(), "{name}");
    }
}

#[test]
fn homes_are_inside_limits() {
    for model in Catalog::builtin().models() {
        assert!(model.within_limits(&model.home()), "{}", model.name());
    }
}

#[test]
fn wrist_models_bind_the_first_three_joints() {
    let catalog = Catalog::builtin();
    let w5 = catalog.get("wyvernclaws5").unwrap();
    assert_eq!(w5.dof(), 5);
    assert_eq!(w5.ik_binding().unwrap().joints, vec![0, 1, 2]);
    let scara = catalog.get("scara_ykx1000").unwrap();
    assert_eq!(scara.signature(), "RRPR");
    assert_eq!(scara.family(), Family::Scara);
    assert_eq!(scara.ik_binding().unwrap().joints, vec![0, 1, 2]);
}

#[test]
fn family_must_match_the_joint_signature() {
    let doc = r#"{"name": "bad", "family": "scara", "joints": [
        {"name": "a", "kind": "prismatic", "axis": [1, 0, 0]},
        {"name": "b", "kind": "prismatic", "axis": [0, 1, 0]},
        {"name": "c", "kind": "prismatic", "axis": [0, 0, 1]}]}"#;
    match load_model(doc) {
        Err(ModelError::Invalid { field, .. }) => assert_eq!(field, "family"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_documents_name_the_field() {
    let cases = [
        (r#"{"name": "x", "joints": [{"name": "a", "kind": "revolute", "axis": [0, 0, 2]}]}"#, "axis"),
        (
            r#"{"name": "x", "joints": [{"name": "a", "kind": "revolute", "axis": [0, 0, 1]},
                {"name": "a", "kind": "revolute", "axis": [0, 0, 1]}]}"#,
            "name",
        ),
        (
            r#"{"name": "x", "joints": [{"name": "a", "kind": "revolute", "axis": [0, 0, 1], "limits": [1, -1]}]}"#,
            "limits",
        ),
    ];
    for (doc, needle) in cases {
        match load_model(doc) {
            Err(ModelError::Invalid { field, .. }) => assert!(field.contains(needle), "{field}"),
            other => panic!("{doc}: {other:?}"),
        }
    }
    assert!(matches!(load_model(r#"{"name": "x", "joints": [], "extra": 1}"#), Err(ModelError::Parse(_))));
}

#[test]
fn catalog_loads_a_directory() {
    let dir = std::env::temp_dir().join(format!("kinesim-models-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("planar.json"), kinesim_testkit::PLANAR_2R_DOCUMENT).unwrap();
    std::fs::write(dir.join("notes.txt"), "ignored").unwrap();
    let mut catalog = Catalog::builtin();
    assert_eq!(catalog.load_dir(&dir).unwrap(), 1);
    assert_eq!(catalog.get("planar_2r").unwrap().dof(), 2);
    assert!(catalog.get("nope").is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}

use dpim::model::{duffing, QuadSystem};
use dpim::report::{fmt17, write_backbone_csv, write_summary_json, Summary};
use dpim::romdyn::BackbonePoint;
use dpim::validity::Status;

#[test]
fn system_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("duffing.json");
    let sys = duffing(1.5, 0.02, 0.7);
    sys.save_json(&path).unwrap();
    let back = QuadSystem::load_json(&path).unwrap();
    assert_eq!(back.a(), sys.a());
    assert_eq!(back.b(), sys.b());
    assert_eq!(back.q(), sys.q());
}

#[test]
fn artefacts_parse_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("backbone.csv");
    let pts = [BackbonePoint { rho: 0.1, omega_nl: 1.0 / 3.0, u_max: 2.0f64.sqrt() }];
    write_backbone_csv(std::fs::File::create(&path).unwrap(), &pts).unwrap();
    let mut r = csv::Reader::from_path(&path).unwrap();
    let row = r.records().next().unwrap().unwrap();
    assert_eq!(row[1].parse::<f64>().unwrap(), 1.0 / 3.0);
    assert_eq!(&row[2], fmt17(2.0f64.sqrt()));

    let summary = Summary {
        criterion: "invariance".into(),
        rho_star: Some(1.1394377100371953),
        u_max: None,
        epsilon: 0.01,
        order: 15,
        status: Status::Converged,
    };
    let mut buf = Vec::new();
    write_summary_json(&mut buf, std::slice::from_ref(&summary)).unwrap();
    let back: Vec<Summary> = serde_json::from_slice(&buf).unwrap();
    assert_eq!(back, vec![summary]);
}

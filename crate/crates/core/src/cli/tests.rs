use super::*;

fn cfg(args: &[&str]) -> Result<RunConfig> {
    let cli = Cli::try_parse_from(std::iter::once("bolab").chain(args.iter().copied()).chain(["beta"])).unwrap();
    RunConfig::load(&cli.overrides)
}

#[test]
fn kappa_lists_and_geometric_grids() {
    assert_eq!(parse_list("8, 16,32").unwrap(), vec![8.0, 16.0, 32.0]);
    let g = parse_list("10:1000:3").unwrap();
    assert!((g[1] - 100.0).abs() < 1e-9 && g.len() == 3);
    assert!(parse_list("10:1:3").is_err());
    assert!(parse_list("a,b").is_err());
}

#[test]
fn points_parse_as_re_im_pairs() {
    assert_eq!(parse_points("0.3:0.5, -1:2").unwrap(), vec![[0.3, 0.5], [-1.0, 2.0]]);
    assert!(parse_points("0.3").is_err());
}

#[test]
fn flags_override_the_config_file() {
    let dir = std::env::temp_dir().join(format!("bolab-cfg-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.json");
    fs::write(&path, r#"{"geometry": "circle", "n": 64, "kappa": [5], "T": 2.0}"#).unwrap();
    let c = cfg(&["--config", path.to_str().unwrap(), "--kappa", "7,9"]).unwrap();
    assert_eq!(c.geometry, GeometryKind::Circle);
    assert_eq!(c.n, 64);
    assert_eq!(c.kappa, vec![7.0, 9.0]);
    assert_eq!(c.t_final, 2.0);
    fs::write(&path, r#"{"geometry": "circle", "colour": 3}"#).unwrap();
    assert!(matches!(cfg(&["--config", path.to_str().unwrap()]), Err(Error::Json(_))));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invalid_settings_are_config_errors() {
    assert!(matches!(cfg(&["--kappa", "-1"]), Err(Error::Config(_))));
    assert!(matches!(cfg(&["--dt", "0"]), Err(Error::Config(_))));
    assert!(cfg(&["--modes", "100"]).is_err());
    assert!(matches!(cfg(&["--tol", "0"]), Err(Error::Config(_))));
}

#[test]
fn periodized_soliton_has_the_line_mass() {
    for g in [Geometry::periodic_box(50.0, 512), Geometry::periodic_box(20.0, 256)] {
        let q = soliton(g, 1.0, 0.0).unwrap();
        assert!((q.mean() - 2.0 * PI).abs() < 1e-10, "{g}: {}", q.mean());
    }
    let q = soliton(Geometry::line(1.0, 128), 2.0, 0.0).unwrap();
    assert!((q.real_values().iter().cloned().fold(0.0, f64::max) - 4.0).abs() < 1e-2);
    assert!(soliton(Geometry::line(1.0, 128), -1.0, 0.0).is_err());
}

#[test]
fn descriptors_build_the_expected_data() {
    let g = Geometry::circle(64);
    let c = initial_datum("constant c=0.4", g, 0).unwrap();
    assert!(c.real_values().iter().all(|v| (v - 0.4).abs() < 1e-14));
    let m = initial_datum("mode 0.2,3", g, 0).unwrap();
    assert!((m.coeff(3).re - 0.1).abs() < 1e-14 && m.mean().abs() < 1e-15);
    let gauss = initial_datum("gaussian 0.3,0.1", g, 0).unwrap();
    assert!((gauss.real_values()[32] - 0.3).abs() < 1e-12);
    let r1 = initial_datum("random amp=0.1,modes=4", g, 5).unwrap();
    let r2 = initial_datum("random amp=0.1,modes=4", g, 5).unwrap();
    let r3 = initial_datum("random amp=0.1,modes=4", g, 6).unwrap();
    assert_eq!(r1, r2);
    assert_ne!(r1, r3);
    assert!(r1.mean().abs() < 1e-15);
    assert!(initial_datum("mode 0.2,3", Geometry::line(1.0, 64), 0).is_err());
    assert!(matches!(initial_datum("no-such-datum", g, 0), Err(Error::Config(_))));
}

#[test]
fn data_round_trip_through_files() {
    let g = Geometry::circle(32);
    let q = initial_datum("random amp=0.2,modes=5", g, 1).unwrap();
    let dir = std::env::temp_dir().join(format!("bolab-datum-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join("q.json");
    fs::write(&path, serde_json::json!({ "t": 0.0, "coeffs": q.coeffs() }).to_string()).unwrap();
    assert_eq!(initial_datum(path.to_str().unwrap(), g, 0).unwrap(), q);
    fs::write(&path, serde_json::json!({ "values": q.real_values() }).to_string()).unwrap();
    let back = initial_datum(path.to_str().unwrap(), g, 0).unwrap();
    assert!(back.sub(&q).as_field().l2_norm() < 1e-13);
    assert!(initial_datum(path.to_str().unwrap(), Geometry::circle(64), 0).is_err());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn records_pass_against_their_tolerance() {
    let r = Record::new(Check::new("x", "", 1.0 + 1e-9, 1.0), 1e-8);
    assert!(r.pass);
    let r = Record::new(Check::new("x", "", 1.1, 1.0), 1e-8);
    assert!(!r.pass);
}

#[test]
fn reports_are_sorted_and_fail_on_any_record() {
    let recs = vec![Record::new(Check::new("b", "", 1.0, 1.0), 1e-8), Record::new(Check::new("a", "", 2.0, 1.0), 1e-8)];
    let rep = Report::new(Suite::Identities, recs, BTreeMap::new(), 0.0);
    assert_eq!(rep.records[0].id, "a");
    assert!(!rep.pass);
    assert!(!serde_json::to_string(&rep).unwrap().contains("wall"));
}

#[test]
fn soliton_beta_column() {
    let c = cfg(&["--geometry", "line", "--modes", "256", "--kappa", "0.3,2,4,8", "--init", "soliton c=1"]).unwrap();
    let (rows, summary) = beta_table(&c, &c.initial().unwrap()).unwrap();
    assert_eq!(summary.skipped, vec![0.3]);
    assert!(summary.monotone_decreasing);
    for r in &rows {
        let exact = PI / (r.kappa - 0.5);
        assert!((r.beta - exact).abs() < 1e-4 * exact, "{}: {} vs {exact}", r.kappa, r.beta);
    }
}

#[test]
fn zero_datum_gives_zero_beta() {
    let c = cfg(&["--geometry", "circle", "--modes", "64", "--kappa", "2,4", "--init", "constant c=0"]).unwrap();
    let (rows, _) = beta_table(&c, &c.initial().unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.beta == 0.0 && r.dbeta == 0.0 && r.d2beta == 0.0 && r.h_kappa == 0.0));
}

#[test]
fn identities_suite_passes_on_a_constant() {
    let c = cfg(&["--geometry", "circle", "--modes", "64", "--kappa", "6", "--init", "constant c=0.4"]).unwrap();
    let rep = verify(&c, Suite::Identities).unwrap();
    assert!(rep.pass, "{:?}", rep.records.iter().filter(|r| !r.pass).collect::<Vec<_>>());
    assert!(rep.records.iter().any(|r| r.id == "beta3"));
}

#[test]
fn explicit_table_tracks_the_soliton() {
    let c = cfg(&["--geometry", "line", "--modes", "128", "--init", "soliton c=1", "--times", "0,0.3", "--points", "0:0.5,1:1"]).unwrap();
    let rows = explicit_table(&c, &c.initial().unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let z = C64::new(r.re_z, r.im_z) - r.t;
        let exact = C64::new(0.0, 1.0) / (z + C64::new(0.0, 1.0));
        assert!((C64::new(r.re_q, r.im_q) - exact).norm() < 1e-8, "{r:?}");
        assert!(r.abs_err < 1e-8);
    }
}

#[test]
fn hk_flow_has_no_explicit_formula() {
    let c = cfg(&["--geometry", "line", "--modes", "64", "--flow", "hk"]).unwrap();
    assert!(matches!(c.phi_spec(), Err(Error::Config(_))));
}

#[test]
fn error_classes_map_to_exit_codes() {
    assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
    assert_eq!(exit_code(&Error::Inadmissible { kappa: 1.0, kappa_min: 2.0 }), EXIT_CONFIG);
    assert_eq!(exit_code(&Error::Numerical("x".into())), EXIT_NUMERICAL);
    assert_eq!(main_with_args(["bolab", "frobnicate"]), EXIT_CONFIG);
    assert_eq!(main_with_args(["bolab", "--help"]), EXIT_OK);
}

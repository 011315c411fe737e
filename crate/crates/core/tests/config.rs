use pinsec::geometry::RegionPlacement;
use pinsec::harness::{parse_methods, ExperimentConfig, Method};
use pinsec::Error;

#[test]
fn partial_file_keeps_defaults() {
    let c = ExperimentConfig::from_toml(
        r#"
        [run]
        trials = 42
        methods = ["shapley", "brute-force"]

        [power_sweep]
        powers_dbm = [0.0, 10.0]
        "#,
    )
    .unwrap();
    assert_eq!(c.run.trials, 42);
    assert_eq!(c.run.methods, vec![Method::Shapley, Method::BruteForce]);
    assert_eq!(c.power_sweep.powers_dbm, vec![0.0, 10.0]);
    assert_eq!(c.power_sweep.antennas, 20);
    assert_eq!(c.scenario, Default::default());
    assert_eq!(c.antenna_sweep.power_dbm, 10.0);
    assert_eq!(c.convergence.power_dbm, 20.0);
}

#[test]
fn scenario_section_is_read() {
    let c = ExperimentConfig::from_toml(
        r#"
        [scenario]
        carrier_frequency = 3.0e10
        placement = "one-sided"
        "#,
    )
    .unwrap();
    assert_eq!(c.scenario.carrier_frequency, 3.0e10);
    assert_eq!(c.scenario.placement, RegionPlacement::OneSided);
}

#[test]
fn effective_config_round_trips() {
    let mut c = ExperimentConfig::default();
    c.run.master_seed = u64::MAX;
    c.game.shuffle_seed = Some(9);
    c.annealing.steps = 77;
    assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
}

#[test]
fn bad_files_are_rejected() {
    for text in [
        "[run]\ntrails = 3\n",
        "[nonsense]\n",
        "[run]\nmethods = [\"greedy\"]\n",
        "[run]\ntrials = 0\n",
        "[power_sweep]\npowers_dbm = []\n",
        "[antenna_sweep]\nantennas = [0]\n",
        "[scenario]\nregion_x = -1.0\n",
        "[annealing]\nfinal_temperature = 50.0\n",
        "not toml at all",
    ] {
        assert!(
            matches!(
                ExperimentConfig::from_toml(text),
                Err(Error::Config(_) | Error::InvalidArgument(_))
            ),
            "{text:?} was accepted"
        );
    }
}

#[test]
fn missing_file_reports_path() {
    let err = ExperimentConfig::load("/nonexistent/pinsec.toml".as_ref()).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/pinsec.toml"), "{err}");
}

#[test]
fn method_lists() {
    assert_eq!(
        parse_methods("shapley, fixed-ula").unwrap(),
        vec![Method::Shapley, Method::FixedUla]
    );
    assert!(parse_methods("shap").is_err());
    for m in Method::ALL {
        assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
    }
}

use pybnpnorm::{ad_distance, generate, presets, run_test, sample_dp, squared_mahalanobis, TestConfig};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn config(a: f64, seed: u64) -> TestConfig {
    TestConfig {
        a,
        n_atoms: 200,
        r1: 300,
        r2: 300,
        bins: 20,
        i0: None,
        seed,
        base: "chi_square".into(),
    }
}

#[test]
fn generated_data_round_trips() {
    assert!(presets().contains(&"normal_a"));
    let x = generate("normal_a", 3, 40, 7, 0).unwrap();
    assert_eq!((x.len(), x[0].len()), (40, 3));
    assert_eq!(x, generate("normal_a", 3, 40, 7, 0).unwrap());
    let d = squared_mahalanobis(x).unwrap();
    assert!((d.iter().sum::<f64>() - 3.0 * 39.0).abs() < 1e-9);
}

#[test]
fn json_family_is_accepted() {
    let fam = r#"{"kind": "mv_normal", "mean": [0, 0], "cov": [[1, 0], [0, 1]]}"#;
    assert_eq!(generate(fam, 2, 5, 1, 0).unwrap().len(), 5);
    let err = generate("nope", 2, 5, 1, 0).unwrap_err();
    Python::attach(|py| assert!(err.is_instance_of::<PyValueError>(py)));
}

#[test]
fn dp_draw_and_distance() {
    let (atoms, jumps) = sample_dp(5.0, 2, 100, 3, 0).unwrap();
    assert!(atoms.windows(2).all(|w| w[0] <= w[1]));
    assert!((jumps.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(ad_distance(atoms, jumps, 2).unwrap() > 0.0);
}

#[test]
fn run_test_matches_core() {
    let data = generate("normal_a", 2, 50, 11, 0).unwrap();
    let report = Python::attach(|py| run_test(py, data.clone(), &config(5.0, 4))).unwrap();
    let core_cfg = bnpnorm::rbtest::TestConfig {
        n_atoms: 200,
        r1: 300,
        r2: 300,
        seed: 4,
        ..bnpnorm::rbtest::TestConfig::new(5.0)
    };
    let core =
        bnpnorm::rbtest::run_test(&bnpnorm::mahalanobis::DataMatrix::from_rows(&data).unwrap(), &core_cfg).unwrap();
    assert_eq!(report.rb_at_zero, core.rb_at_zero);
    assert_eq!(report.strength, core.strength);
    assert_eq!(report.verdict, core.verdict().name());
    assert_eq!(report.posterior_distances, core.posterior_distances.values());
}

#[test]
fn errors_map_to_python_exceptions() {
    Python::attach(|py| {
        let bad = TestConfig {
            i0: Some(25),
            ..config(5.0, 0)
        };
        let err = run_test(py, generate("normal_a", 2, 20, 1, 0).unwrap(), &bad).unwrap_err();
        assert!(err.is_instance_of::<PyValueError>(py));
        let collinear: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let err = run_test(py, collinear, &config(5.0, 0)).unwrap_err();
        assert!(err.is_instance_of::<PyArithmeticError>(py), "{err}");
    });
}

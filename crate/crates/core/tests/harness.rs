//! Harness-level checks: suite orchestration, theorem verifications,
//! volume ratios, and deterministic report emission.

use flab_core::harness::{
    run_suite, verify_diameter, verify_laplacian_comparison, volume_ratio,
};
use flab_core::measure::VolumeMeasure;
use flab_core::metric::catalog_get;
use flab_core::report::{emit_to, EmitFormat};
use flab_core::sampling::SamplingConfig;

#[test]
fn cross_engine_suite_on_fubini_study() {
    let spec = catalog_get("fubini_study", &[2.0]).unwrap();
    let cfg = SamplingConfig {
        seed: 1,
        count: 25,
    };
    let report = run_suite("cross_engine", &spec, &cfg).unwrap();
    assert!(report.pass, "max residual {:.3e}", report.residuals.max);
    assert!(report.residuals.max < 1e-6);
}

#[test]
fn kahler_suite_flags_nonkahler_metric() {
    let spec = catalog_get("hermitian_nonkahler", &[]).unwrap();
    let cfg = SamplingConfig {
        seed: 2,
        count: 40,
    };
    let report = run_suite("kahler", &spec, &cfg).unwrap();
    assert!(!report.pass);
    assert!(
        report.residuals.max > 0.3,
        "expected a visible asymmetry, got {:.3}",
        report.residuals.max
    );
}

#[test]
fn j_invariance_suite_is_partial_on_quartic() {
    let spec = catalog_get("complex_minkowski_quartic", &[2.0]).unwrap();
    let cfg = SamplingConfig {
        seed: 3,
        count: 25,
    };
    let report = run_suite("j_invariance", &spec, &cfg).unwrap();
    // unconditional identities hold...
    assert!(report.residuals.max < 1e-9);
    assert!(report.pass);
    // ...while the diagnostics record the failure of full invariance
    let notes = report.notes.join("\n");
    assert!(notes.contains("full_invariance_max"));
    let full: f64 = notes
        .lines()
        .find(|l| l.starts_with("full_invariance_max"))
        .unwrap()
        .split('=')
        .nth(1)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(full > 1e-3);
}

#[test]
fn unknown_suite_is_rejected() {
    let spec = catalog_get("euclidean", &[1.0]).unwrap();
    let cfg = SamplingConfig::default();
    assert!(matches!(
        run_suite("nonsense", &spec, &cfg),
        Err(flab_core::Error::UnknownSuite(_))
    ));
}

#[test]
fn suite_reports_are_deterministic() {
    let spec = catalog_get("fubini_study", &[1.0]).unwrap();
    let cfg = SamplingConfig {
        seed: 7,
        count: 10,
    };
    let a = run_suite("homogeneity", &spec, &cfg).unwrap();
    let b = run_suite("homogeneity", &spec, &cfg).unwrap();
    let mut buf_a = Vec::new();
    let mut buf_b = Vec::new();
    emit_to(&a, EmitFormat::Json, &mut buf_a).unwrap();
    emit_to(&b, EmitFormat::Json, &mut buf_b).unwrap();
    assert_eq!(buf_a, buf_b);
}

#[test]
fn laplacian_comparison_flat_exact() {
    let spec = catalog_get("euclidean", &[2.0]).unwrap();
    let report =
        verify_laplacian_comparison(&spec, 0.0, &[0.5, 1.0, 1.5], 2, 11).unwrap();
    assert!(report.pass, "residual {:.3e}", report.residuals.max);
    assert!(report.hypothesis_verified);
    // flat equality: slack should be tiny on every row
    let table = report.table.as_ref().unwrap();
    for row in &table.rows {
        if let flab_core::report::Cell::F(slack) = row[5] {
            assert!(slack.abs() < 1e-6, "flat slack {slack}");
        }
    }
}

#[test]
fn laplacian_comparison_hyperbolic_slack() {
    let spec = catalog_get("complex_hyperbolic", &[2.0]).unwrap();
    let report = verify_laplacian_comparison(&spec, -1.0, &[0.3, 0.7, 1.1], 2, 29).unwrap();
    assert!(report.pass, "residual {:.3e}", report.residuals.max);
    assert!(report.hypothesis_verified);
    assert!(report.residuals.max < 1e-4);
}

#[test]
fn laplacian_comparison_rejects_wrong_lambda() {
    // euclidean metric with lambda = 1 cannot verify its hypotheses
    let spec = catalog_get("euclidean", &[2.0]).unwrap();
    let report = verify_laplacian_comparison(&spec, 1.0, &[0.5], 1, 11).unwrap();
    assert!(!report.hypothesis_verified);
    assert!(!report.pass);
}

#[test]
fn diameter_bound_on_fubini_study() {
    let spec = catalog_get("fubini_study", &[2.0]).unwrap();
    let report = verify_diameter(&spec, 1.0, 8, 13).unwrap();
    assert!(report.pass, "notes: {:?}", report.notes);
    assert!(report.hypothesis_verified);
    assert!(report.residuals.max < 1e-6);
}

#[test]
fn diameter_requires_positive_lambda() {
    let spec = catalog_get("euclidean", &[2.0]).unwrap();
    assert!(matches!(
        verify_diameter(&spec, 0.0, 4, 1),
        Err(flab_core::Error::Parameter { .. })
    ));
}

#[test]
fn volume_ratio_euclidean_is_exactly_model() {
    let spec = catalog_get("euclidean", &[2.0]).unwrap();
    let (estimate, report) = volume_ratio(
        &spec,
        &VolumeMeasure::RiemannianDet,
        &[0.0; 4],
        &[0.3, 0.6],
        12,
        17,
        0.0,
    )
    .unwrap();
    assert!(report.pass, "notes {:?}", report.notes);
    assert!(report.hypothesis_verified);
    for i in 0..estimate.ball.radii.len() {
        let rel = (estimate.ball.volumes[i] - estimate.model_ball.volumes[i]).abs()
            / estimate.model_ball.volumes[i];
        assert!(rel < 1e-12, "metric vs model volume mismatch {rel}");
    }
}

#[test]
fn csv_and_plotdata_emission() {
    let spec = catalog_get("euclidean", &[2.0]).unwrap();
    let report = verify_laplacian_comparison(&spec, 0.0, &[0.5, 1.0], 1, 19).unwrap();
    let mut csv = Vec::new();
    emit_to(&report, EmitFormat::Csv, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("check,direction,r,lhs,bound,slack,status"));
    assert!(text.lines().count() >= 3);
    let mut plot = Vec::new();
    emit_to(&report, EmitFormat::PlotData, &mut plot).unwrap();
    let text = String::from_utf8(plot).unwrap();
    assert!(text.starts_with('#'));
}

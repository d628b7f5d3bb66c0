//! Geodesic laboratory checks: closed-form geodesics, parallel
//! transport, Jacobi matrices, conjugate points, index forms, distance
//! Hessians and the Riccati profile — all on the constant-curvature
//! catalog metrics where every quantity has a closed form.

use nalgebra::DVector;

use flab_core::bridge::apply_j;
use flab_core::geodesic::compare::ct_lambda;
use flab_core::geodesic::riccati::riccati_probe;
use flab_core::geodesic::{
    conjugate_point, distance_hessian, index_form, integrate_framed, integrate_geodesic,
    jacobi_matrix, parallel_transport, GeodesicControl,
};
use flab_core::metric::catalog_get;
use flab_core::sampling::SeededRng;

use std::f64::consts::{FRAC_PI_2, PI};

fn unit_dir(spec: &flab_core::metric::MetricSpec, x0: &[f64], y_raw: &[f64]) -> Vec<f64> {
    let f = spec.f(x0, y_raw).unwrap();
    y_raw.iter().map(|c| c / f).collect()
}

#[test]
fn euclidean_geodesics_are_straight_lines() {
    let spec = catalog_get("euclidean", &[2.0]).unwrap();
    let x0 = [0.1, -0.2, 0.3, 0.0];
    let y0 = unit_dir(&spec, &x0, &[1.0, 1.0, 0.0, -1.0]);
    let ctl = GeodesicControl::default();
    let path = integrate_geodesic(&spec, &x0, &y0, 2.0, &ctl).unwrap();
    for k in 0..=10 {
        let t = 2.0 * k as f64 / 10.0;
        let (x, v) = path.state(t);
        for i in 0..4 {
            assert!((x[i] - (x0[i] + t * y0[i])).abs() < 1e-10);
            assert!((v[i] - y0[i]).abs() < 1e-10);
        }
    }
    assert!(path.unit_speed_drift(32).unwrap() < 1e-10);
    assert!(path.geodesic_residual(32).unwrap() < 1e-8);
}

#[test]
fn fubini_study_geodesic_is_tangent_curve() {
    // from the origin with real direction: z(t) = tan(t)
    let spec = catalog_get("fubini_study", &[1.0]).unwrap();
    let x0 = [0.0, 0.0];
    let y0 = [1.0, 0.0];
    let ctl = GeodesicControl::default();
    let len = FRAC_PI_2 - 0.1;
    let path = integrate_geodesic(&spec, &x0, &y0, len, &ctl).unwrap();
    for k in 1..=20 {
        let t = len * k as f64 / 20.0;
        let (x, _) = path.state(t);
        assert!((x[0] - t.tan()).abs() < 1e-7, "t={t}: {} vs {}", x[0], t.tan());
        assert!(x[1].abs() < 1e-9);
    }
    assert!(path.unit_speed_drift(32).unwrap() < 1e-8);
}

#[test]
fn hyperbolic_geodesic_is_tanh_curve() {
    // artanh(0.95) is about 1.83; stay inside the chart
    let spec = catalog_get("complex_hyperbolic", &[1.0]).unwrap();
    let path = integrate_geodesic(
        &spec,
        &[0.0, 0.0],
        &[1.0, 0.0],
        1.8,
        &GeodesicControl::default(),
    )
    .unwrap();
    assert!(!path.chart_exit);
    for k in 1..=20 {
        let t = 1.8 * k as f64 / 20.0;
        let (x, _) = path.state(t);
        assert!((x[0] - t.tanh()).abs() < 1e-7);
    }
}

#[test]
fn geodesic_requires_near_unit_speed() {
    let spec = catalog_get("euclidean", &[1.0]).unwrap();
    let err = match integrate_geodesic(
        &spec,
        &[0.0, 0.0],
        &[2.0, 0.0],
        1.0,
        &GeodesicControl::default(),
    ) {
        Err(e) => e,
        Ok(_) => panic!("non-unit velocity accepted"),
    };
    assert!(matches!(err, flab_core::Error::Eval(_)));
    // within 1e-6 is renormalized
    let path = integrate_geodesic(
        &spec,
        &[0.0, 0.0],
        &[1.0 + 5e-7, 0.0],
        1.0,
        &GeodesicControl::default(),
    )
    .unwrap();
    let (_, v) = path.state(0.5);
    assert!((v[0] - 1.0).abs() < 1e-12);
}

#[test]
fn chart_exit_truncates_with_flag() {
    let spec = catalog_get("complex_hyperbolic", &[1.0]).unwrap();
    // the unit ball boundary is at |z| = 1; sampling domain radius 0.95
    let path = integrate_geodesic(
        &spec,
        &[0.0, 0.0],
        &[1.0, 0.0],
        5.0,
        &GeodesicControl::default(),
    )
    .unwrap();
    assert!(path.chart_exit);
    assert!(path.reached < 5.0);
    // tanh(reached) should be about the chart radius 0.95
    assert!(path.reached > 1.5);
}

#[test]
fn parallel_transport_preserves_norm_and_t() {
    let spec = catalog_get("fubini_study", &[2.0]).unwrap();
    let x0 = [0.1, 0.05, -0.1, 0.2];
    let y0 = unit_dir(&spec, &x0, &[0.8, 0.1, 0.4, -0.2]);
    let ctl = GeodesicControl::default();
    let len = 1.0;
    let path = integrate_geodesic(&spec, &x0, &y0, len, &ctl).unwrap();
    // transporting T yields T
    let t_end = parallel_transport(&path, &y0, len).unwrap();
    let (_, v_end) = path.state(len);
    for i in 0..4 {
        assert!((t_end[i] - v_end[i]).abs() < 1e-8, "T transport");
    }
    // framed path: orthonormality drift
    let framed = integrate_framed(&spec, &x0, &y0, len, &ctl).unwrap();
    assert!(framed.orthonormality_drift(16).unwrap() < 1e-7);
    // transport of JT(0) equals J(T(t)) on a Kahler metric
    let jt0 = apply_j(&y0);
    let jt_transported = parallel_transport(&path, &jt0, len).unwrap();
    let jt_direct = apply_j(&v_end);
    for i in 0..4 {
        assert!(
            (jt_transported[i] - jt_direct[i]).abs() < 1e-7,
            "JT parallelism: {} vs {}",
            jt_transported[i],
            jt_direct[i]
        );
    }
}

#[test]
fn jacobi_closed_forms_on_space_forms() {
    let ctl = GeodesicControl::default();
    // FS(1): single perpendicular direction V with curvature 4:
    // a(t) = sin(2t)/2
    let spec = catalog_get("fubini_study", &[1.0]).unwrap();
    let framed = integrate_framed(&spec, &[0.0, 0.0], &[1.0, 0.0], 0.7, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    for k in 1..=7 {
        let t = 0.1 * k as f64;
        let a = jd.a(t)[(0, 0)];
        assert!(
            (a - (2.0 * t).sin() / 2.0).abs() < 1e-8,
            "t={t}: {a} vs {}",
            (2.0 * t).sin() / 2.0
        );
    }
    // FS(2): orthogonal block solves a'' + a = 0 and the V block
    // a'' + 4a = 0
    let spec = catalog_get("fubini_study", &[2.0]).unwrap();
    let x0 = [0.15, 0.1, -0.05, 0.2];
    let y0 = unit_dir(&spec, &x0, &[0.9, 0.3, 0.2, -0.4]);
    let framed = integrate_framed(&spec, &x0, &y0, 1.2, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let vix = jd.dim_perp - 1;
    for k in 1..=6 {
        let t = 0.2 * k as f64;
        let a = jd.a(t);
        for i in 0..2 {
            assert!((a[(i, i)] - t.sin()).abs() < 1e-7, "orth block t={t}");
        }
        assert!(
            (a[(vix, vix)] - (2.0 * t).sin() / 2.0).abs() < 1e-7,
            "V block t={t}"
        );
        // off-diagonal stays zero
        assert!(a[(0, vix)].abs() < 1e-7 && a[(vix, 0)].abs() < 1e-7);
        assert!(jd.wronskian_residual(t) < 1e-7);
    }
    // euclidean: A(t) = t I
    let spec = catalog_get("euclidean", &[2.0]).unwrap();
    let y0 = unit_dir(&spec, &[0.0; 4], &[0.5, 0.5, 0.5, 0.5]);
    let framed = integrate_framed(&spec, &[0.0; 4], &y0, 2.0, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let a = jd.a(1.7);
    for i in 0..3 {
        for j in 0..3 {
            let expect = if i == j { 1.7 } else { 0.0 };
            assert!((a[(i, j)] - expect).abs() < 1e-9);
        }
    }
}

#[test]
fn conjugate_points_on_space_forms() {
    let ctl = GeodesicControl::default();
    // euclidean: none
    let spec = catalog_get("euclidean", &[2.0]).unwrap();
    let y0 = unit_dir(&spec, &[0.0; 4], &[1.0, 0.2, -0.3, 0.4]);
    let framed = integrate_framed(&spec, &[0.0; 4], &y0, 3.0, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    assert!(conjugate_point(&jd, 3.0).is_none());
    // FS(1) from a generic point: t* = pi/2
    let spec = catalog_get("fubini_study", &[1.0]).unwrap();
    let x0 = [0.25, 0.1];
    let y0 = unit_dir(&spec, &x0, &[0.3, 1.0]);
    let framed = integrate_framed(&spec, &x0, &y0, 2.0, &ctl).unwrap();
    assert!(!framed.chart_exit, "geodesic left the chart");
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let t_star = conjugate_point(&jd, 2.0).expect("conjugate point");
    assert!(
        (t_star - FRAC_PI_2).abs() < 1e-6,
        "t* = {t_star} vs {FRAC_PI_2}"
    );
    // FS(2): the V block vanishes first, also at pi/2
    let spec = catalog_get("fubini_study", &[2.0]).unwrap();
    let x0 = [0.15, -0.1, 0.1, 0.05];
    let y0 = unit_dir(&spec, &x0, &[0.9, 0.3, 0.2, -0.4]);
    let framed = integrate_framed(&spec, &x0, &y0, 2.0, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let t_star = conjugate_point(&jd, 2.0).expect("conjugate point");
    assert!((t_star - FRAC_PI_2).abs() < 1e-6, "t* = {t_star}");
}

#[test]
fn index_form_closed_forms() {
    let ctl = GeodesicControl::default();
    // flat: W = sin(pi t) E_1 over [0, 1]:
    // I = int (pi cos pi t)^2 = pi^2/2
    let spec = catalog_get("euclidean", &[2.0]).unwrap();
    let y0 = unit_dir(&spec, &[0.0; 4], &[1.0, 0.0, 0.0, 0.0]);
    let framed = integrate_framed(&spec, &[0.0; 4], &y0, 1.0, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let w = |t: f64| {
        let mut wv = DVector::zeros(4);
        let mut wd = DVector::zeros(4);
        wv[0] = (PI * t).sin();
        wd[0] = PI * (PI * t).cos();
        (wv, wd)
    };
    let i_form = index_form(&jd, &w, 1.0);
    assert!(
        (i_form - PI * PI / 2.0).abs() < 1e-7,
        "flat index form {i_form}"
    );

    // FS(1): W = sin(2t) V over [0, pi/2] gives exactly zero
    let spec = catalog_get("fubini_study", &[1.0]).unwrap();
    let x0 = [0.2, 0.1];
    let y0 = unit_dir(&spec, &x0, &[0.4, 1.0]);
    let framed = integrate_framed(&spec, &x0, &y0, FRAC_PI_2, &ctl).unwrap();
    assert!(!framed.chart_exit);
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let vix = jd.dim_perp - 1;
    let w = move |t: f64| {
        let mut wv = DVector::zeros(2);
        let mut wd = DVector::zeros(2);
        wv[vix] = (2.0 * t).sin();
        wd[vix] = 2.0 * (2.0 * t).cos();
        (wv, wd)
    };
    let i_form = index_form(&jd, &w, FRAC_PI_2);
    assert!(i_form.abs() < 1e-5, "FS(1) vanishing index form: {i_form}");

    // FS(2): sum over W_i = sin(t) E_i (i <= 2n-2) over [0, pi] is zero
    let spec = catalog_get("fubini_study", &[2.0]).unwrap();
    let x0 = [0.2, 0.1, -0.1, 0.15];
    let y0 = unit_dir(&spec, &x0, &[0.8, 0.25, 0.3, -0.5]);
    let framed = integrate_framed(&spec, &x0, &y0, PI, &ctl).unwrap();
    assert!(!framed.chart_exit);
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let mut total = 0.0;
    for i in 0..2 {
        let w = move |t: f64| {
            let mut wv = DVector::zeros(4);
            let mut wd = DVector::zeros(4);
            wv[i] = t.sin();
            wd[i] = t.cos();
            (wv, wd)
        };
        total += index_form(&jd, &w, PI);
    }
    assert!(total.abs() < 1e-4, "FS(2) sum of index forms: {total}");
}

#[test]
fn distance_hessian_flat_closed_form() {
    let spec = catalog_get("euclidean", &[2.0]).unwrap();
    let y0 = unit_dir(&spec, &[0.0; 4], &[0.3, 0.9, -0.2, 0.1]);
    let ctl = GeodesicControl::default();
    let framed = integrate_framed(&spec, &[0.0; 4], &y0, 1.5, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let probe = distance_hessian(&jd, 1.0).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((probe.hessian[(i, j)] - expect).abs() < 1e-8);
        }
    }
    assert!((probe.box_full - 3.0).abs() < 1e-8);
    assert!((probe.box_perp - 2.0).abs() < 1e-8);
    assert!((probe.h_vv - 1.0).abs() < 1e-8);
    // H(V,V) = 2 ct_0(2r) at r = 1
    assert!((probe.h_vv - 2.0 * ct_lambda(0.0, 2.0).unwrap()).abs() < 1e-10);
    assert!((probe.r11_via_hessian + 0.25).abs() < 1e-8);
    assert!(probe.index_route_dev < 1e-5, "dev {}", probe.index_route_dev);
    // T row appended exactly
    for i in 0..4 {
        assert_eq!(probe.hessian[(3, i)], 0.0);
        assert_eq!(probe.hessian[(i, 3)], 0.0);
    }
}

#[test]
fn distance_hessian_model_equalities() {
    let ctl = GeodesicControl::default();
    // FS(2) at r = 0.5
    let spec = catalog_get("fubini_study", &[2.0]).unwrap();
    let x0 = [0.05, -0.1, 0.1, 0.0];
    let y0 = unit_dir(&spec, &x0, &[0.7, 0.5, -0.3, 0.2]);
    let framed = integrate_framed(&spec, &x0, &y0, 1.45, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let probe = distance_hessian(&jd, 0.5).unwrap();
    assert!(
        (probe.box_perp - 2.0 * ct_lambda(1.0, 0.5).unwrap()).abs() < 1e-4,
        "box_perp {} vs {}",
        probe.box_perp,
        2.0 * ct_lambda(1.0, 0.5).unwrap()
    );
    assert!(
        (probe.h_vv - 2.0 * ct_lambda(1.0, 1.0).unwrap()).abs() < 1e-4,
        "h_vv {}",
        probe.h_vv
    );
    assert!(probe.index_route_dev < 1e-5);
    // CH(2) at r = 0.5
    let spec = catalog_get("complex_hyperbolic", &[2.0]).unwrap();
    let x0 = [0.02, 0.03, -0.02, 0.01];
    let y0 = unit_dir(&spec, &x0, &[0.6, 0.4, 0.5, -0.2]);
    let framed = integrate_framed(&spec, &x0, &y0, 0.8, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let probe = distance_hessian(&jd, 0.5).unwrap();
    assert!(
        (probe.box_perp - 2.0 * ct_lambda(-1.0, 0.5).unwrap()).abs() < 1e-4,
        "CH box_perp {}",
        probe.box_perp
    );
    assert!((probe.h_vv - 2.0 * ct_lambda(-1.0, 1.0).unwrap()).abs() < 1e-4);
}

#[test]
fn conjugate_reached_is_reported() {
    let ctl = GeodesicControl::default();
    let spec = catalog_get("fubini_study", &[1.0]).unwrap();
    let x0 = [0.25, 0.1];
    let y0 = unit_dir(&spec, &x0, &[0.3, 1.0]);
    let framed = integrate_framed(&spec, &x0, &y0, 2.2, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let err = distance_hessian(&jd, 1.9).unwrap_err();
    assert!(matches!(err, flab_core::Error::ConjugateReached { .. }));
}

#[test]
fn riccati_profiles_on_models() {
    let ctl = GeodesicControl::default();
    // FS(1), lambda = 1: f = ct_1(2t)/2 with equality everywhere
    let spec = catalog_get("fubini_study", &[1.0]).unwrap();
    let framed = integrate_framed(&spec, &[0.0, 0.0], &[1.0, 0.0], 0.7, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let profile = riccati_probe(&spec, &framed, &jd, Some(1.0)).unwrap();
    assert!(profile.inequality_excess < 1e-4, "excess {}", profile.inequality_excess);
    assert!((profile.tf_limit - 0.25).abs() < 1e-3, "tf {}", profile.tf_limit);
    let bound = profile.bound_excess.unwrap();
    assert!(bound < 1e-4 && bound > -1e-3, "equality case: {bound}");
    for (k, &t) in profile.ts.iter().enumerate() {
        let expect = 0.5 * ct_lambda(1.0, 2.0 * t).unwrap();
        assert!((profile.f[k] - expect).abs() < 1e-6, "f({t})");
    }
    // CH(1), lambda = -1
    let spec = catalog_get("complex_hyperbolic", &[1.0]).unwrap();
    let framed = integrate_framed(&spec, &[0.0, 0.0], &[1.0, 0.0], 0.9, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let profile = riccati_probe(&spec, &framed, &jd, Some(-1.0)).unwrap();
    assert!(profile.inequality_excess < 1e-4);
    assert!((profile.tf_limit - 0.25).abs() < 1e-3);
    for (k, &t) in profile.ts.iter().enumerate() {
        let expect = 0.5 * ct_lambda(-1.0, 2.0 * t).unwrap();
        assert!((profile.f[k] - expect).abs() < 1e-6);
    }
    // flat, lambda = 0: f = 1/(4t) and 4f^2 + f' = 0
    let spec = catalog_get("euclidean", &[2.0]).unwrap();
    let y0 = unit_dir(&spec, &[0.0; 4], &[1.0, 0.2, 0.3, -0.1]);
    let framed = integrate_framed(&spec, &[0.0; 4], &y0, 1.5, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let profile = riccati_probe(&spec, &framed, &jd, Some(0.0)).unwrap();
    assert!(profile.inequality_excess.abs() < 1e-6);
    for (k, &t) in profile.ts.iter().enumerate() {
        assert!((profile.f[k] - 0.25 / t).abs() < 1e-8);
    }
}

#[test]
fn riccati_gate_rejects_non_kahler() {
    let ctl = GeodesicControl::default();
    let spec = catalog_get("hermitian_nonkahler", &[]).unwrap();
    let x0 = [0.0, 0.8, 0.0, 0.3];
    let y0 = unit_dir(&spec, &x0, &[0.5, 0.5, 0.2, -0.3]);
    let framed = integrate_framed(&spec, &x0, &y0, 0.6, &ctl).unwrap();
    let jd = jacobi_matrix(&framed, &ctl).unwrap();
    let err = riccati_probe(&spec, &framed, &jd, None).unwrap_err();
    assert!(matches!(
        err,
        flab_core::Error::KahlerHypothesisViolated { .. }
    ));
}

#[test]
fn energy_conservation_tightens_with_tolerance() {
    let spec = catalog_get("fubini_study", &[2.0]).unwrap();
    let x0 = [0.1, 0.2, -0.1, 0.0];
    let y0 = unit_dir(&spec, &x0, &[0.9, 0.1, 0.3, -0.2]);
    let mut drifts = Vec::new();
    for (rtol, atol) in [(1e-6, 1e-8), (1e-10, 1e-12)] {
        let ctl = GeodesicControl {
            rtol,
            atol,
            ..Default::default()
        };
        let path = integrate_geodesic(&spec, &x0, &y0, 1.5, &ctl).unwrap();
        drifts.push(path.unit_speed_drift(64).unwrap());
    }
    assert!(drifts[1] < 1e-8, "tight tolerance drift {}", drifts[1]);
    assert!(drifts[1] <= drifts[0], "drift should not grow: {drifts:?}");
}

#[test]
fn geodesic_csv_export() {
    let spec = catalog_get("euclidean", &[1.0]).unwrap();
    let path = integrate_geodesic(
        &spec,
        &[0.0, 0.0],
        &[1.0, 0.0],
        1.0,
        &GeodesicControl::default(),
    )
    .unwrap();
    let mut buf = Vec::new();
    path.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x1,x2,xdot1,xdot2");
    assert!(text.lines().count() > 2);
}

#[test]
fn seeded_fs2_conjugate_sweep() {
    // a compressed version of the diameter mechanism: several seeded
    // unit geodesics on FS(2) all reach a conjugate point at pi/2
    let spec = catalog_get("fubini_study", &[2.0]).unwrap();
    let ctl = GeodesicControl::default();
    let mut rng = SeededRng::new(97);
    let mut checked = 0;
    for _ in 0..6 {
        let p = flab_core::sampling::sample_point(&spec, &mut rng);
        let y0 = unit_dir(&spec, &p.x, &p.y);
        let framed = integrate_framed(&spec, &p.x, &y0, PI * 1.02, &ctl).unwrap();
        if framed.chart_exit {
            continue;
        }
        let jd = jacobi_matrix(&framed, &ctl).unwrap();
        let t_star = conjugate_point(&jd, framed.reached).expect("conjugate point");
        assert!((t_star - FRAC_PI_2).abs() < 1e-6, "t* = {t_star}");
        checked += 1;
    }
    assert!(checked >= 4, "too many chart exits: {checked}");
}

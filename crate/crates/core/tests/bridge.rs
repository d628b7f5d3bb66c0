#![allow(clippy::needless_range_loop)]

//! Bridge checks: homogeneity equivalences for (p,q)-homogeneous
//! functions, J-invariance of the fundamental tensor, the spray
//! correspondence characterizing weakly Kahler metrics, parallelism of
//! the complex structure along the spray, and the orthogonal Ricci
//! curvature.

use flab_core::bridge::{
    apply_j, gy_orthonormal_frame, homogeneity_check, j_invariance_check, orthogonal_ricci,
    parallelism_residual, spray_correspondence, HomogeneitySubject,
};
use flab_core::expr::parse_metric;
use flab_core::jet::table::EvalPoint;
use flab_core::metric::catalog_get;
use flab_core::real_engine::real_tensors;
use flab_core::sampling::{sample_fiber, sample_point, SeededRng};

#[test]
fn metric_is_one_one_homogeneous() {
    // H = G: all four identities including G_k u^k = 0
    let mut rng = SeededRng::new(11);
    for name in ["fubini_study", "complex_minkowski_quartic"] {
        let spec = catalog_get(name, &[2.0]).unwrap();
        let subject = HomogeneitySubject::MetricG(spec.clone());
        for _ in 0..10 {
            let p = sample_point(&spec, &mut rng);
            let zeta = rng.complex_annulus(0.5, 2.0);
            let res = homogeneity_check(&subject, &p, zeta).unwrap();
            assert!(res.max_real_identities() < 1e-9, "{name}: {res:?}");
            assert!(res.euler_holo < 1e-9 && res.euler_anti < 1e-9);
            assert!(res.scaling < 1e-9);
        }
    }
}

#[test]
fn mixed_monomial_is_one_one() {
    // H = v1 * conj(v2): bidegree (1,1)
    let expr = parse_metric("v1*conj(v2)").unwrap();
    let subject = HomogeneitySubject::Expr {
        expr,
        n: 2,
        p: 1,
        q: 1,
    };
    let mut rng = SeededRng::new(13);
    for _ in 0..10 {
        let y: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let p = EvalPoint {
            x: vec![0.0; 4],
            y,
        };
        let zeta = rng.complex_annulus(0.5, 2.0);
        let res = homogeneity_check(&subject, &p, zeta).unwrap();
        assert!(res.max_real_identities() < 1e-12, "{res:?}");
        assert!(res.scaling < 1e-12);
    }
}

#[test]
fn holomorphic_square_is_two_zero() {
    // H = (v1)^2: bidegree (2, 0); closed forms R = Re, I = Im
    let expr = parse_metric("v1*v1").unwrap();
    let subject = HomogeneitySubject::Expr {
        expr,
        n: 1,
        p: 2,
        q: 0,
    };
    let mut rng = SeededRng::new(17);
    for _ in 0..10 {
        let y = vec![rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
        if y[0].abs() + y[1].abs() < 0.1 {
            continue;
        }
        let p = EvalPoint {
            x: vec![0.0; 2],
            y,
        };
        let zeta = rng.complex_annulus(0.5, 2.0);
        let res = homogeneity_check(&subject, &p, zeta).unwrap();
        // R_k u^k = (q-p) I = -2I and I_k u^k = (p-q) R = 2R
        assert!(res.max_real_identities() < 1e-12, "{res:?}");
        assert!(res.euler_holo < 1e-12 && res.euler_anti < 1e-12);
        assert!(res.scaling < 1e-12);
    }
}

#[test]
fn declared_bidegree_mismatch_is_caught() {
    let expr = parse_metric("v1*v1").unwrap();
    let subject = HomogeneitySubject::Expr {
        expr,
        n: 1,
        p: 1,
        q: 1, // wrong on purpose
    };
    let p = EvalPoint {
        x: vec![0.0; 2],
        y: vec![0.8, 0.3],
    };
    let mut rng = SeededRng::new(19);
    let zeta = rng.complex_annulus(1.4, 1.9);
    let res = homogeneity_check(&subject, &p, zeta).unwrap();
    assert!(res.max_real_identities() > 1e-2 || res.scaling > 1e-2);
}

#[test]
fn lemma_j_invariance_is_unconditional() {
    // including the non-Hermitian quartic metric
    let mut rng = SeededRng::new(23);
    for name in [
        "euclidean",
        "fubini_study",
        "complex_hyperbolic",
        "hermitian_nonkahler",
        "complex_minkowski_quartic",
    ] {
        let spec = catalog_get(name, &[2.0]).unwrap();
        for _ in 0..20 {
            let p = sample_point(&spec, &mut rng);
            let x_dir = sample_fiber(&spec, &mut rng);
            let ts = real_tensors(&spec, &p).unwrap();
            let res = j_invariance_check(&ts, &x_dir);
            assert!(res.pairing < 1e-9, "{name} pairing {}", res.pairing);
            assert!(res.orthogonality < 1e-9, "{name} g(y,Jy)");
            assert!(res.norm_match < 1e-9, "{name} |y| vs |Jy|");
        }
    }
}

#[test]
fn full_j_invariance_diagnoses_hermitian() {
    let mut rng = SeededRng::new(29);
    // Hermitian metrics: full invariance and Cartan invariance vanish
    for name in ["euclidean", "fubini_study", "hermitian_nonkahler"] {
        let spec = catalog_get(name, &[2.0]).unwrap();
        let p = sample_point(&spec, &mut rng);
        let x_dir = sample_fiber(&spec, &mut rng);
        let ts = real_tensors(&spec, &p).unwrap();
        let res = j_invariance_check(&ts, &x_dir);
        assert!(res.full_invariance < 1e-9, "{name}: {}", res.full_invariance);
        assert!(res.cartan_invariance < 1e-9);
    }
    // quartic: fails full invariance at the 1e-3 level while the
    // unconditional identities hold
    let spec = catalog_get("complex_minkowski_quartic", &[2.0]).unwrap();
    let p = EvalPoint {
        x: vec![0.0; 4],
        y: vec![1.0, 0.0, 1.0, 0.0],
    };
    // y = (1,0,1,0) -> v = (1+i, 0) is fiber-degenerate for this metric;
    // use the strongly convex point v = (1, 1) plus sampled ones
    let p_ok = EvalPoint {
        x: vec![0.0; 4],
        y: vec![1.0, 1.0, 0.0, 0.0],
    };
    let ts = real_tensors(&spec, &p_ok).unwrap();
    let res = j_invariance_check(&ts, &[0.3, -0.5, 0.8, 0.2]);
    assert!(res.pairing < 1e-9 && res.orthogonality < 1e-9 && res.norm_match < 1e-9);
    assert!(res.full_invariance > 1e-3, "quartic (d): {}", res.full_invariance);
    assert!(res.cartan_invariance > 1e-3);
    // and the degenerate point indeed fails strong convexity
    assert!(real_tensors(&spec, &p).is_err());
    let mut rng = SeededRng::new(31);
    for _ in 0..10 {
        let p = sample_point(&spec, &mut rng);
        let x_dir = sample_fiber(&spec, &mut rng);
        let ts = real_tensors(&spec, &p).unwrap();
        let res = j_invariance_check(&ts, &x_dir);
        assert!(res.pairing < 1e-9 && res.orthogonality < 1e-9 && res.norm_match < 1e-9);
        assert!(res.full_invariance > 1e-3);
    }
}

#[test]
fn spray_correspondence_on_kahler_metrics() {
    let mut rng = SeededRng::new(37);
    for name in ["euclidean", "fubini_study", "complex_hyperbolic"] {
        let spec = catalog_get(name, &[2.0]).unwrap();
        for _ in 0..10 {
            let p = sample_point(&spec, &mut rng);
            let res = spray_correspondence(&spec, &p).unwrap();
            assert!(res < 1e-8, "{name}: {res}");
        }
    }
}

#[test]
fn spray_correspondence_tracks_weak_residual_both_ways() {
    // the characterization: correspondence residual is small iff the
    // weak Kahler residual is small
    let mut rng = SeededRng::new(41);
    for name in [
        "euclidean",
        "fubini_study",
        "complex_hyperbolic",
        "hermitian_nonkahler",
        "complex_minkowski_quartic",
    ] {
        let spec = catalog_get(name, &[2.0]).unwrap();
        for _ in 0..10 {
            let p = sample_point(&spec, &mut rng);
            let corr = spray_correspondence(&spec, &p).unwrap();
            let (_, weak) = flab_core::complex_engine::kahler_residuals(&spec, &p).unwrap();
            let small_corr = corr < 1e-8;
            let small_weak = weak < 1e-8;
            if small_corr != small_weak {
                // allow a graded window: both must at least be tiny together
                assert!(
                    corr < 1e-5 && weak < 1e-5,
                    "{name}: corr {corr} vs weak {weak}"
                );
            }
        }
    }
}

#[test]
fn parallelism_identities_on_kahler_metrics() {
    let mut rng = SeededRng::new(43);
    for name in ["euclidean", "fubini_study", "complex_hyperbolic"] {
        let spec = catalog_get(name, &[2.0]).unwrap();
        for _ in 0..20 {
            let p = sample_point(&spec, &mut rng);
            let res = parallelism_residual(&spec, &p).unwrap();
            assert!(res.max() < 1e-8, "{name}: {res:?}");
        }
    }
    // n = 1 hyperbolic
    let spec = catalog_get("complex_hyperbolic", &[1.0]).unwrap();
    for _ in 0..20 {
        let p = sample_point(&spec, &mut rng);
        let res = parallelism_residual(&spec, &p).unwrap();
        assert!(res.max() < 1e-8, "CH(1): {res:?}");
    }
}

#[test]
fn orthogonal_ricci_on_space_forms() {
    let mut rng = SeededRng::new(47);
    let fs = catalog_get("fubini_study", &[2.0]).unwrap();
    for _ in 0..5 {
        let p = sample_point(&fs, &mut rng);
        let or = orthogonal_ricci(&fs, &p).unwrap();
        assert!((or.value - 2.0).abs() < 1e-8, "FS Ric_perp = {}", or.value);
        assert!((or.frame_sum - or.value).abs() < 1e-8, "frame sum mismatch");
        assert!(!or.degenerate);
        // decomposition Ric = Ric_perp + K(y, Jy)
        assert!((or.ricci - or.value - or.holomorphic_flag).abs() < 1e-12);
    }
    let ch = catalog_get("complex_hyperbolic", &[2.0]).unwrap();
    for _ in 0..5 {
        let p = sample_point(&ch, &mut rng);
        let or = orthogonal_ricci(&ch, &p).unwrap();
        assert!((or.value + 2.0).abs() < 1e-8, "CH Ric_perp = {}", or.value);
    }
    let euclid = catalog_get("euclidean", &[2.0]).unwrap();
    let p = sample_point(&euclid, &mut rng);
    let or = orthogonal_ricci(&euclid, &p).unwrap();
    assert!(or.value.abs() < 1e-12);
    // n = 1 is flagged degenerate
    let fs1 = catalog_get("fubini_study", &[1.0]).unwrap();
    let p = sample_point(&fs1, &mut rng);
    let or = orthogonal_ricci(&fs1, &p).unwrap();
    assert!(or.degenerate);
    assert!(or.value.abs() < 1e-8);
}

#[test]
fn frame_is_orthonormal_and_ordered() {
    let spec = catalog_get("complex_minkowski_quartic", &[2.0]).unwrap();
    let mut rng = SeededRng::new(53);
    for _ in 0..5 {
        let p = sample_point(&spec, &mut rng);
        let ts = real_tensors(&spec, &p).unwrap();
        let frame = gy_orthonormal_frame(&ts.g, &p.y).unwrap();
        let d = 2 * spec.n;
        assert_eq!(frame.len(), d);
        for a in 0..d {
            for b in 0..d {
                let dot = (frame[a].transpose() * &ts.g * &frame[b])[(0, 0)];
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-9, "frame g-dot ({a},{b}) = {dot}");
            }
        }
        // last = y/F, second last = Jy/F
        let f = ts.g_value.sqrt();
        for i in 0..d {
            assert!((frame[d - 1][i] - p.y[i] / f).abs() < 1e-12);
        }
        let ju = apply_j(&p.y);
        // V is Jy/F after Gram-Schmidt against T; for these metrics
        // g(y, Jy) = 0 so it should equal Jy/F up to roundoff
        for i in 0..d {
            assert!((frame[d - 2][i] - ju[i] / f).abs() < 1e-9);
        }
    }
}

#[test]
fn frame_determinism() {
    let spec = catalog_get("fubini_study", &[2.0]).unwrap();
    let mut rng = SeededRng::new(59);
    let p = sample_point(&spec, &mut rng);
    let ts = real_tensors(&spec, &p).unwrap();
    let f1 = gy_orthonormal_frame(&ts.g, &p.y).unwrap();
    let f2 = gy_orthonormal_frame(&ts.g, &p.y).unwrap();
    for (a, b) in f1.iter().zip(&f2) {
        assert_eq!(a, b);
    }
}

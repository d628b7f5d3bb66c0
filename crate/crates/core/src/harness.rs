//! Check suites and theorem-level verification runs.
//!
//! Every theorem verification first re-validates its curvature
//! hypothesis by sampling; when the hypothesis cannot be confirmed the
//! run reports "hypothesis unverified" instead of asserting a pass.

use rayon::prelude::*;
use serde::Serialize;

use crate::bridge;
use crate::complex_engine;
use crate::error::{Error, Result};
use crate::geodesic::{
    compare::ct_lambda, conjugate_point, distance_hessian, integrate_framed, jacobi_matrix,
    GeodesicControl,
};
use crate::jet::table::EvalPoint;
use crate::measure::VolumeMeasure;
use crate::metric::{catalog_get, MetricSpec, Property};
use crate::real_engine;
use crate::report::{Cell, Report, Table};
use crate::sampling::{sample_fiber, sample_point, sample_points, SamplingConfig, SeededRng};
use crate::volume::{ball_volumes, BallVolumes};

pub const SUITES: &[&str] = &[
    "homogeneity",
    "j_invariance",
    "kahler",
    "spray_correspondence",
    "parallelism",
    "cross_engine",
];

/// Run one identity suite over seeded samples.
pub fn run_suite(suite: &str, spec: &MetricSpec, cfg: &SamplingConfig) -> Result<Report> {
    let start = std::time::Instant::now();
    let mut report = match suite {
        "homogeneity" => crate::metric::validate_homogeneity(spec, cfg)?,
        "j_invariance" => suite_j_invariance(spec, cfg)?,
        "kahler" => suite_kahler(spec, cfg)?,
        "spray_correspondence" => suite_spray_correspondence(spec, cfg)?,
        "parallelism" => suite_parallelism(spec, cfg)?,
        "cross_engine" => suite_cross_engine(spec, cfg)?,
        other => return Err(Error::UnknownSuite(other.to_string())),
    };
    report.runtime = start.elapsed();
    Ok(report)
}

fn collect_residuals<T: Sync>(
    points: Vec<T>,
    eval: impl Fn(&T) -> Result<f64> + Sync,
) -> (Vec<f64>, usize) {
    let results: Vec<Result<f64>> = points.par_iter().map(&eval).collect();
    let mut residuals = Vec::with_capacity(results.len());
    let mut failures = 0usize;
    for r in results {
        match r {
            Ok(v) => residuals.push(v),
            Err(e) => {
                log::debug!("sample evaluation failed: {e}");
                failures += 1;
            }
        }
    }
    (residuals, failures)
}

fn suite_j_invariance(spec: &MetricSpec, cfg: &SamplingConfig) -> Result<Report> {
    let mut rng = SeededRng::new(cfg.seed);
    let samples: Vec<(EvalPoint, Vec<f64>)> = (0..cfg.count)
        .map(|_| {
            let p = sample_point(spec, &mut rng);
            let x_dir = sample_fiber(spec, &mut rng);
            (p, x_dir)
        })
        .collect();
    let outcomes: Vec<Result<(f64, f64, f64)>> = samples
        .par_iter()
        .map(|(p, x_dir)| {
            let ts = real_engine::real_tensors(spec, p)?;
            let res = bridge::j_invariance_check(&ts, x_dir);
            let unconditional = res.pairing.max(res.orthogonality).max(res.norm_match);
            Ok((unconditional, res.full_invariance, bridge::cartan_norm(&ts)))
        })
        .collect();
    let mut residuals = Vec::new();
    let mut failures = 0usize;
    let mut full_max = 0.0f64;
    let mut cartan_max = 0.0f64;
    for o in outcomes {
        match o {
            Ok((r, full, cart)) => {
                residuals.push(r);
                full_max = full_max.max(full);
                cartan_max = cartan_max.max(cart);
            }
            Err(_) => failures += 1,
        }
    }
    let mut report = Report::from_residuals(
        "j_invariance",
        &spec.id,
        &spec.params,
        cfg.seed,
        1e-9,
        &residuals,
        failures,
    );
    let hermitian_like = full_max < 1e-9;
    let riemannian_like = cartan_max < 1e-9;
    report = report
        .with_note(format!("full_invariance_max = {full_max:.3e}"))
        .with_note(format!("cartan_torsion_max = {cartan_max:.3e}"))
        .with_note(format!(
            "full_invariance_equivalent_to_vanishing_cartan = {}",
            hermitian_like == riemannian_like
        ));
    if hermitian_like != riemannian_like {
        report.pass = false;
    }
    Ok(report)
}

fn suite_kahler(spec: &MetricSpec, cfg: &SamplingConfig) -> Result<Report> {
    let points = sample_points(spec, cfg);
    let outcomes: Vec<Result<(f64, f64)>> = points
        .par_iter()
        .map(|p| complex_engine::kahler_residuals(spec, p))
        .collect();
    let mut strong = Vec::new();
    let mut weak_max = 0.0f64;
    let mut failures = 0usize;
    for o in outcomes {
        match o {
            Ok((s, w)) => {
                strong.push(s);
                weak_max = weak_max.max(w);
            }
            Err(_) => failures += 1,
        }
    }
    let report = Report::from_residuals(
        "kahler",
        &spec.id,
        &spec.params,
        cfg.seed,
        1e-9,
        &strong,
        failures,
    )
    .with_note(format!("weak_residual_max = {weak_max:.3e}"));
    Ok(report)
}

fn suite_spray_correspondence(spec: &MetricSpec, cfg: &SamplingConfig) -> Result<Report> {
    let points = sample_points(spec, cfg);
    let outcomes: Vec<Result<(f64, f64)>> = points
        .par_iter()
        .map(|p| {
            let corr = bridge::spray_correspondence(spec, p)?;
            let (_, weak) = complex_engine::kahler_residuals(spec, p)?;
            Ok((corr, weak))
        })
        .collect();
    let mut corr_vals = Vec::new();
    let mut failures = 0usize;
    let mut equivalence_ok = true;
    let tol = 1e-8;
    for o in outcomes {
        match o {
            Ok((corr, weak)) => {
                // both directions of the weakly-Kahler characterization
                if (corr < tol && weak > 1e3 * tol) || (weak < tol && corr > 1e3 * tol) {
                    equivalence_ok = false;
                }
                corr_vals.push(corr);
            }
            Err(_) => failures += 1,
        }
    }
    let weakly = spec.declared.contains(&Property::WeaklyKahler);
    let mut report = Report::from_residuals(
        "spray_correspondence",
        &spec.id,
        &spec.params,
        cfg.seed,
        tol,
        &corr_vals,
        failures,
    );
    if !weakly {
        // informational for metrics that are not claimed weakly Kahler:
        // only the equivalence with the weak residual is asserted
        report.pass = equivalence_ok && report.failures * 100 <= report.samples;
        report = report.with_note("metric not declared weakly_kahler; residual informational");
    }
    report = report.with_note(format!(
        "weak_residual_equivalence_held = {equivalence_ok}"
    ));
    if !equivalence_ok {
        report.pass = false;
    }
    Ok(report)
}

fn suite_parallelism(spec: &MetricSpec, cfg: &SamplingConfig) -> Result<Report> {
    let points = sample_points(spec, cfg);
    let (residuals, failures) = collect_residuals(points, |p| {
        Ok(bridge::parallelism_residual(spec, p)?.max())
    });
    let weakly = spec.declared.contains(&Property::WeaklyKahler);
    let mut report = Report::from_residuals(
        "parallelism",
        &spec.id,
        &spec.params,
        cfg.seed,
        1e-8,
        &residuals,
        failures,
    );
    if !weakly {
        report.pass = report.failures * 100 <= report.samples;
        report = report.with_note("metric not declared weakly_kahler; residual informational");
    }
    Ok(report)
}

fn suite_cross_engine(spec: &MetricSpec, cfg: &SamplingConfig) -> Result<Report> {
    let points = sample_points(spec, cfg);
    let (residuals, failures) = collect_residuals(points, |p| {
        let h = complex_engine::holomorphic_curvature(spec, p)?;
        let ts = real_engine::real_tensors(spec, p)?;
        let k = real_engine::flag_curvature(&ts, &bridge::apply_j(&p.y))?;
        Ok((h - k).abs())
    });
    Ok(Report::from_residuals(
        "cross_engine",
        &spec.id,
        &spec.params,
        cfg.seed,
        1e-6,
        &residuals,
        failures,
    ))
}

// ------------------------------------------------------------------
// Theorem verifications

/// Sampled minimum of the orthogonal Ricci curvature and the
/// holomorphic curvature over the metric's domain.
pub fn sample_curvature_minima(
    spec: &MetricSpec,
    count: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let cfg = SamplingConfig { seed, count };
    let points = sample_points(spec, &cfg);
    let outcomes: Vec<Result<(f64, f64)>> = points
        .par_iter()
        .map(|p| {
            let or = bridge::orthogonal_ricci(spec, p)?;
            // normalize by F^2 homogeneity: flag curvatures are
            // 0-homogeneous so no normalization is needed
            let h = complex_engine::holomorphic_curvature(spec, p)?;
            Ok((or.value, h))
        })
        .collect();
    let mut min_ric = f64::INFINITY;
    let mut min_h = f64::INFINITY;
    let mut ok = 0usize;
    for (r, h) in outcomes.into_iter().flatten() {
        min_ric = min_ric.min(r);
        min_h = min_h.min(h);
        ok += 1;
    }
    if ok == 0 {
        return Err(Error::Eval("no sample point was evaluable".into()));
    }
    Ok((min_ric, min_h))
}

/// Hessian/Laplacian comparison run: per (direction, radius) rows with
/// the measured quantity, the comparison bound, and the slack.
pub fn verify_laplacian_comparison(
    spec: &MetricSpec,
    lambda: f64,
    radii: &[f64],
    directions: usize,
    seed: u64,
) -> Result<Report> {
    let start = std::time::Instant::now();
    let d = 2 * spec.n;
    let (min_ric, min_h) = sample_curvature_minima(spec, 24, seed ^ 0x9E3779B9)?;
    let ric_hypothesis = spec.n > 1 && min_ric >= (d as f64 - 2.0) * lambda - 1e-6;
    let h_hypothesis = min_h >= 4.0 * lambda - 1e-6;
    let slack_tol = 1e-4;
    let mut table = Table::new(&[
        "check", "direction", "r", "lhs", "bound", "slack", "status",
    ]);
    let mut rng = SeededRng::new(seed);
    let base = vec![0.0; d];
    let ctl = GeodesicControl::default();
    let r_max = radii.iter().cloned().fold(0.0f64, f64::max);
    let mut residuals: Vec<f64> = Vec::new();
    let mut failures = 0usize;
    for dir_idx in 0..directions {
        let y_raw = sample_fiber(spec, &mut rng);
        let f = spec.f(&base, &y_raw)?;
        let y0: Vec<f64> = y_raw.iter().map(|c| c / f).collect();
        let framed = integrate_framed(spec, &base, &y0, r_max, &ctl)?;
        let jd = jacobi_matrix(&framed, &ctl)?;
        for &r in radii {
            match distance_hessian(&jd, r) {
                Ok(probe) => {
                    if ric_hypothesis {
                        let bound = (d as f64 - 2.0) * ct_lambda(lambda, r)?;
                        let slack = bound - probe.box_perp;
                        residuals.push((-slack).max(0.0));
                        table.push(vec![
                            Cell::S("box_perp".into()),
                            Cell::I(dir_idx as i64),
                            Cell::F(r),
                            Cell::F(probe.box_perp),
                            Cell::F(bound),
                            Cell::F(slack),
                            Cell::S("ok".into()),
                        ]);
                    }
                    if h_hypothesis {
                        match ct_lambda(lambda, 2.0 * r) {
                            Ok(ct2) => {
                                let bound = 2.0 * ct2;
                                let slack = bound - probe.h_vv;
                                residuals.push((-slack).max(0.0));
                                table.push(vec![
                                    Cell::S("hess_vv".into()),
                                    Cell::I(dir_idx as i64),
                                    Cell::F(r),
                                    Cell::F(probe.h_vv),
                                    Cell::F(bound),
                                    Cell::F(slack),
                                    Cell::S("ok".into()),
                                ]);
                            }
                            Err(Error::PoleAt { .. }) => {
                                table.push(vec![
                                    Cell::S("hess_vv".into()),
                                    Cell::I(dir_idx as i64),
                                    Cell::F(r),
                                    Cell::F(probe.h_vv),
                                    Cell::F(f64::NAN),
                                    Cell::F(f64::NAN),
                                    Cell::S("pole".into()),
                                ]);
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    if ric_hypothesis && h_hypothesis {
                        if let Ok(ct2) = ct_lambda(lambda, 2.0 * r) {
                            let bound = (d as f64 - 2.0) * ct_lambda(lambda, r)? + 2.0 * ct2;
                            let slack = bound - probe.box_full;
                            residuals.push((-slack).max(0.0));
                            table.push(vec![
                                Cell::S("box_full".into()),
                                Cell::I(dir_idx as i64),
                                Cell::F(r),
                                Cell::F(probe.box_full),
                                Cell::F(bound),
                                Cell::F(slack),
                                Cell::S("ok".into()),
                            ]);
                        }
                    }
                }
                Err(Error::ConjugateReached { .. }) => {
                    failures += 1;
                    table.push(vec![
                        Cell::S("all".into()),
                        Cell::I(dir_idx as i64),
                        Cell::F(r),
                        Cell::F(f64::NAN),
                        Cell::F(f64::NAN),
                        Cell::F(f64::NAN),
                        Cell::S("skipped".into()),
                    ]);
                }
                Err(e) => return Err(e),
            }
        }
    }
    let mut report = Report::from_residuals(
        "laplacian_comparison",
        &spec.id,
        &spec.params,
        seed,
        slack_tol,
        &residuals,
        0,
    );
    report.failures = failures;
    report.hypothesis_verified = ric_hypothesis || h_hypothesis;
    if !report.hypothesis_verified {
        report.pass = false;
        report = report.with_note("hypothesis unverified: neither curvature bound held");
    }
    report = report
        .with_note(format!(
            "sampled_min_orthogonal_ricci = {min_ric:.6} (needed {:.6})",
            (d as f64 - 2.0) * lambda
        ))
        .with_note(format!(
            "sampled_min_holomorphic = {min_h:.6} (needed {:.6})",
            4.0 * lambda
        ))
        .with_note("lambda normalization: bounds use H >= 4*lambda")
        .with_table(table);
    report.runtime = start.elapsed();
    Ok(report)
}

/// Conjugate-point diameter verification: every seeded unit geodesic
/// must hit a conjugate point before pi/sqrt(lambda).
pub fn verify_diameter(
    spec: &MetricSpec,
    lambda: f64,
    count: usize,
    seed: u64,
) -> Result<Report> {
    let start = std::time::Instant::now();
    if lambda <= 0.0 {
        return Err(Error::Parameter {
            name: "lambda".into(),
            message: "lambda must be positive".into(),
        });
    }
    let d = 2 * spec.n;
    let (min_ric, _) = sample_curvature_minima(spec, 24, seed ^ 0xABCD)?;
    let hypothesis = spec.n > 1 && min_ric >= (d as f64 - 2.0) * lambda - 1e-6;
    let bound = std::f64::consts::PI / lambda.sqrt();
    let cfg = SamplingConfig { seed, count };
    let mut rng = SeededRng::new(cfg.seed);
    let starts: Vec<(Vec<f64>, Vec<f64>)> = (0..count)
        .map(|_| {
            let p = sample_point(spec, &mut rng);
            (p.x, p.y)
        })
        .collect();
    let ctl = GeodesicControl::default();
    let outcomes: Vec<Result<Option<f64>>> = starts
        .par_iter()
        .map(|(x0, y_raw)| {
            let f = spec.f(x0, y_raw)?;
            let y0: Vec<f64> = y_raw.iter().map(|c| c / f).collect();
            let framed = integrate_framed(spec, x0, &y0, bound * 1.05, &ctl)?;
            if framed.chart_exit {
                return Ok(None);
            }
            let jd = jacobi_matrix(&framed, &ctl)?;
            Ok(conjugate_point(&jd, framed.reached))
        })
        .collect();
    let mut times = Vec::new();
    let mut excluded = 0usize;
    let mut missing = 0usize;
    let mut failures = 0usize;
    for o in outcomes {
        match o {
            Ok(Some(t)) => times.push(t),
            Ok(None) => excluded += 1,
            Err(e) => {
                if matches!(e, Error::ChartExit { .. }) {
                    excluded += 1;
                } else {
                    failures += 1;
                }
            }
        }
    }
    // a geodesic that completes without conjugate point is a failure of
    // the bound: count via missing
    missing += count - times.len() - excluded - failures;
    let residuals: Vec<f64> = times.iter().map(|t| (t - bound).max(0.0)).collect();
    let mut report = Report::from_residuals(
        "diameter_bound",
        &spec.id,
        &spec.params,
        seed,
        1e-6,
        &residuals,
        failures,
    );
    report.hypothesis_verified = hypothesis;
    if missing > 0 {
        report.pass = false;
        report = report.with_note(format!(
            "{missing} geodesics reached the probe length without a conjugate point"
        ));
    }
    if !hypothesis {
        report.pass = false;
        report = report.with_note(format!(
            "hypothesis unverified: sampled min orthogonal Ricci {min_ric:.6} < {:.6}",
            (d as f64 - 2.0) * lambda
        ));
    }
    if excluded > 0 {
        report = report.with_note(format!("{excluded} chart-exit geodesics excluded"));
    }
    if let (Some(min_t), Some(max_t)) = (
        times.iter().cloned().reduce(f64::min),
        times.iter().cloned().reduce(f64::max),
    ) {
        report = report.with_note(format!(
            "conjugate times in [{min_t:.8}, {max_t:.8}], bound {bound:.8}"
        ));
    }
    report.runtime = start.elapsed();
    Ok(report)
}

/// Volume-ratio comparison against the internally computed model space.
#[derive(Debug, Clone, Serialize)]
pub struct VolumeEstimate {
    pub metric: String,
    pub measure: String,
    pub model: String,
    pub center: Vec<f64>,
    pub k: f64,
    pub ball: BallVolumes,
    pub model_ball: BallVolumes,
}

fn model_for(k: f64, n: usize) -> Result<MetricSpec> {
    let name = if k > 0.5 {
        "fubini_study"
    } else if k < -0.5 {
        "complex_hyperbolic"
    } else {
        "euclidean"
    };
    catalog_get(name, &[n as f64])
}

pub fn volume_ratio(
    spec: &MetricSpec,
    measure: &VolumeMeasure,
    center: &[f64],
    radii: &[f64],
    directions: usize,
    seed: u64,
    k: f64,
) -> Result<(VolumeEstimate, Report)> {
    let start = std::time::Instant::now();
    if k != 1.0 && k != 0.0 && k != -1.0 {
        return Err(Error::Parameter {
            name: "k".into(),
            message: "model curvature must be one of -1, 0, +1".into(),
        });
    }
    // S-curvature hypothesis: sampled |S| below 1e-6.
    let cfg = SamplingConfig {
        seed: seed ^ 0x5CC5,
        count: 12,
    };
    let mut s_max = 0.0f64;
    for p in sample_points(spec, &cfg) {
        let s = crate::measure::s_curvature(spec, &p, measure)?;
        s_max = s_max.max(s.abs());
    }
    let hypothesis = s_max < 1e-6;
    let ball = ball_volumes(spec, measure, center, radii, directions, seed)?;
    let model = model_for(k, spec.n)?;
    let model_center = vec![0.0; 2 * spec.n];
    let model_ball = ball_volumes(&model, measure, &model_center, radii, directions, seed)?;
    let mut table = Table::new(&["r", "volume", "sigma", "model_volume", "model_sigma"]);
    for i in 0..radii.len() {
        table.push(vec![
            Cell::F(radii[i]),
            Cell::F(ball.volumes[i]),
            Cell::F(ball.sigmas[i]),
            Cell::F(model_ball.volumes[i]),
            Cell::F(model_ball.sigmas[i]),
        ]);
    }
    // ratio monotonicity with 3-sigma bands
    let mut residuals = Vec::new();
    let mut worst_rel_sigma = 0.0f64;
    for i in 0..radii.len() {
        for j in (i + 1)..radii.len() {
            let ratio = ball.volumes[j] / ball.volumes[i];
            let model_ratio = model_ball.volumes[j] / model_ball.volumes[i];
            let rel = (ball.sigmas[j] / ball.volumes[j]).powi(2)
                + (ball.sigmas[i] / ball.volumes[i]).powi(2)
                + (model_ball.sigmas[j] / model_ball.volumes[j]).powi(2)
                + (model_ball.sigmas[i] / model_ball.volumes[i]).powi(2);
            let band = 3.0 * rel.sqrt();
            worst_rel_sigma = worst_rel_sigma.max(rel.sqrt());
            let excess = ratio / model_ratio - (1.0 + band);
            residuals.push(excess.max(0.0));
        }
    }
    if worst_rel_sigma > 0.05 {
        return Err(Error::McVarianceTooHigh {
            sigma: worst_rel_sigma,
        });
    }
    let mut report = Report::from_residuals(
        "volume_ratio",
        &spec.id,
        &spec.params,
        seed,
        1e-12,
        &residuals,
        0,
    );
    report.hypothesis_verified = hypothesis;
    if !hypothesis {
        report.pass = false;
        report = report.with_note(format!(
            "hypothesis unverified: sampled |S|-curvature max {s_max:.3e} >= 1e-6"
        ));
    } else {
        report = report.with_note(format!("sampled |S|-curvature max {s_max:.3e}"));
    }
    report = report
        .with_note(format!("model = {}", model.id))
        .with_table(table);
    report.runtime = start.elapsed();
    let estimate = VolumeEstimate {
        metric: spec.id.clone(),
        measure: measure.id().to_string(),
        model: model.id.clone(),
        center: center.to_vec(),
        k,
        ball,
        model_ball,
    };
    Ok((estimate, report))
}

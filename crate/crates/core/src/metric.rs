//! Metric specifications: validated expression + dimension + domain, and
//! the built-in catalog of example metrics.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ast::MetricExpr;
use crate::expr::eval::eval_scalar;
use crate::expr::parser::parse_metric;
use crate::jet::table::EvalPoint;
use crate::report::Report;
use crate::sampling::{SamplingConfig, SeededRng};

/// Structural properties a metric may claim. Advisory only: every claim
/// is re-verified numerically by the check suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Hermitian,
    Kahler,
    WeaklyKahler,
    StronglyConvex,
}

impl std::str::FromStr for Property {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "hermitian" => Ok(Property::Hermitian),
            "kahler" => Ok(Property::Kahler),
            "weakly_kahler" => Ok(Property::WeaklyKahler),
            "strongly_convex" => Ok(Property::StronglyConvex),
            other => Err(format!("unknown property `{other}`")),
        }
    }
}

/// Chart and fiber constraints for evaluation and sampling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Domain {
    /// Hard chart radius: points with |z| beyond it are rejected.
    pub z_radius: Option<f64>,
    /// Radius used when sampling base points (strictly inside the chart).
    pub sample_z: f64,
    /// Sampling floor on each |v_alpha|, for metrics that degenerate on
    /// the coordinate axes of the fiber.
    pub min_fiber_component: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Domain {
            z_radius: None,
            sample_z: 0.5,
            min_fiber_component: 0.0,
        }
    }
}

impl Domain {
    pub fn z_norm(x: &[f64]) -> f64 {
        x.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn contains_x(&self, x: &[f64]) -> bool {
        match self.z_radius {
            Some(r) => Domain::z_norm(x) < r,
            None => true,
        }
    }
}

/// A validated metric definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSpec {
    /// Display id, e.g. `fubini_study(n=2)`.
    pub id: String,
    pub name: String,
    pub n: usize,
    pub params: Vec<f64>,
    pub expr: MetricExpr,
    pub declared: BTreeSet<Property>,
    pub domain: Domain,
    /// Known constant holomorphic curvature, when the catalog records one.
    pub reference_holomorphic: Option<f64>,
}

impl MetricSpec {
    /// Builds and fully validates a metric from an expression tree.
    pub fn from_expr(
        name: &str,
        expr: MetricExpr,
        n: usize,
        declared: BTreeSet<Property>,
        domain: Domain,
    ) -> Result<MetricSpec> {
        let spec = MetricSpec::from_expr_unvalidated(name, expr, n, declared, domain)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Builds the spec with structural checks only (variable ranges,
    /// n >= 1); homogeneity/realness are left to `validate` or to the
    /// `homogeneity` check suite.
    pub fn from_expr_unvalidated(
        name: &str,
        expr: MetricExpr,
        n: usize,
        declared: BTreeSet<Property>,
        domain: Domain,
    ) -> Result<MetricSpec> {
        if n == 0 {
            return Err(Error::Parameter {
                name: name.into(),
                message: "complex dimension must be at least 1".into(),
            });
        }
        let max = expr.max_var_index();
        if max > n {
            return Err(Error::VariableIndex { index: max, n });
        }
        if let Some(min) = expr.min_var_index() {
            if min == 0 {
                return Err(Error::VariableIndex { index: 0, n });
            }
        }
        Ok(MetricSpec {
            id: format!("{name}(n={n})"),
            name: name.to_string(),
            n,
            params: vec![n as f64],
            expr,
            declared,
            domain,
            reference_holomorphic: None,
        })
    }

    /// Re-checks realness and |zeta|^2-homogeneity at seeded samples.
    pub fn validate(&self) -> Result<()> {
        let cfg = SamplingConfig {
            seed: 0xF1A8,
            count: 40,
        };
        let (residuals, max_imag, failures) = homogeneity_residuals(self, &cfg)?;
        if failures > cfg.count / 2 {
            return Err(Error::Eval(format!(
                "metric unevaluable at {failures}/{} validation samples",
                cfg.count
            )));
        }
        if max_imag > 1e-12 {
            return Err(Error::NotReal { imag: max_imag });
        }
        let worst = residuals.iter().cloned().fold(0.0f64, f64::max);
        if worst >= 1e-9 {
            return Err(Error::NotHomogeneous { residual: worst });
        }
        Ok(())
    }

    /// Validates that an evaluation point lies in this metric's domain.
    pub fn check_point(&self, p: &EvalPoint) -> Result<()> {
        if p.dim() != 2 * self.n {
            return Err(Error::Eval(format!(
                "point dimension {} does not match 2n = {}",
                p.dim(),
                2 * self.n
            )));
        }
        if p.y.iter().all(|&c| c == 0.0) {
            return Err(Error::ZeroTangent);
        }
        if !self.domain.contains_x(&p.x) {
            return Err(Error::DomainViolation(format!(
                "|z| = {:.4} outside chart radius {:?}",
                Domain::z_norm(&p.x),
                self.domain.z_radius
            )));
        }
        Ok(())
    }

    /// G(x, y) as a plain number.
    pub fn g(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let w = eval_scalar(&self.expr, self.n, x, y)?;
        if w.im.abs() > 1e-9 * 1.0f64.max(w.re.abs()) {
            return Err(Error::NotReal { imag: w.im.abs() });
        }
        Ok(w.re)
    }

    /// F(x, y) = sqrt(G).
    pub fn f(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let g = self.g(x, y)?;
        if g <= 0.0 {
            return Err(Error::DomainViolation(format!("G = {g} not positive")));
        }
        Ok(g.sqrt())
    }
}

/// Scale the fiber coordinates by a complex number: y' with
/// v'^a = zeta * v^a.
pub fn scale_fiber(n: usize, y: &[f64], zeta: Complex64) -> Vec<f64> {
    let mut out = vec![0.0; 2 * n];
    for a in 0..n {
        let v = Complex64::new(y[a], y[n + a]) * zeta;
        out[a] = v.re;
        out[n + a] = v.im;
    }
    out
}

fn homogeneity_residuals(
    spec: &MetricSpec,
    cfg: &SamplingConfig,
) -> Result<(Vec<f64>, f64, usize)> {
    let mut rng = SeededRng::new(cfg.seed);
    let mut residuals = Vec::with_capacity(cfg.count);
    let mut max_imag = 0.0f64;
    let mut failures = 0usize;
    for _ in 0..cfg.count {
        let p = crate::sampling::sample_point(spec, &mut rng);
        let zeta = rng.complex_annulus(0.5, 2.0);
        let attempt = (|| -> Result<(f64, f64)> {
            let g0 = eval_scalar(&spec.expr, spec.n, &p.x, &p.y)?;
            let ys = scale_fiber(spec.n, &p.y, zeta);
            let gs = eval_scalar(&spec.expr, spec.n, &p.x, &ys)?;
            if g0.re <= 0.0 {
                return Err(Error::DomainViolation("G not positive at sample".into()));
            }
            let imag = g0.im.abs().max(gs.im.abs());
            let res = (gs.re - zeta.norm_sqr() * g0.re).abs() / g0.re.abs();
            Ok((res, imag))
        })();
        match attempt {
            Ok((res, imag)) => {
                residuals.push(res);
                max_imag = max_imag.max(imag);
            }
            Err(_) => failures += 1,
        }
    }
    Ok((residuals, max_imag, failures))
}

/// Check |zeta|^2-homogeneity of G over seeded samples.
pub fn validate_homogeneity(spec: &MetricSpec, cfg: &SamplingConfig) -> Result<Report> {
    let (residuals, _, failures) = homogeneity_residuals(spec, cfg)?;
    Ok(Report::from_residuals(
        "homogeneity",
        &spec.id,
        &spec.params,
        cfg.seed,
        1e-9,
        &residuals,
        failures,
    ))
}

// ------------------------------------------------------------------
// Catalog

/// One catalog entry: a named family of example metrics.
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub default_n: usize,
    pub n_range: (usize, usize),
    pub expected: &'static [Property],
    pub reference_holomorphic: Option<f64>,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "euclidean",
        description: "flat Hermitian metric sum |v^a|^2",
        default_n: 2,
        n_range: (1, 4),
        expected: &[
            Property::Hermitian,
            Property::Kahler,
            Property::WeaklyKahler,
            Property::StronglyConvex,
        ],
        reference_holomorphic: Some(0.0),
    },
    CatalogEntry {
        name: "fubini_study",
        description: "Fubini-Study metric, holomorphic curvature +4",
        default_n: 2,
        n_range: (1, 4),
        expected: &[
            Property::Hermitian,
            Property::Kahler,
            Property::WeaklyKahler,
            Property::StronglyConvex,
        ],
        reference_holomorphic: Some(4.0),
    },
    CatalogEntry {
        name: "complex_hyperbolic",
        description: "complex hyperbolic metric on the unit ball, holomorphic curvature -4",
        default_n: 2,
        n_range: (1, 4),
        expected: &[
            Property::Hermitian,
            Property::Kahler,
            Property::WeaklyKahler,
            Property::StronglyConvex,
        ],
        reference_holomorphic: Some(-4.0),
    },
    CatalogEntry {
        name: "hermitian_nonkahler",
        description: "Hermitian but non-Kahler metric on C^2",
        default_n: 2,
        n_range: (2, 2),
        expected: &[Property::Hermitian, Property::StronglyConvex],
        reference_holomorphic: None,
    },
    CatalogEntry {
        name: "complex_minkowski_quartic",
        description: "locally Minkowski non-Hermitian quartic metric (sum |v^a|^4)^(1/2)",
        default_n: 2,
        n_range: (1, 4),
        expected: &[
            Property::Kahler,
            Property::WeaklyKahler,
            Property::StronglyConvex,
        ],
        reference_holomorphic: None,
    },
];

fn sum_terms(n: usize, f: impl Fn(usize) -> MetricExpr) -> MetricExpr {
    MetricExpr::sum((1..=n).map(f))
}

fn catalog_expr(name: &str, n: usize) -> MetricExpr {
    let abs2_v = || sum_terms(n, |i| MetricExpr::v(i).abs2());
    let abs2_z = || sum_terms(n, |i| MetricExpr::z(i).abs2());
    let pairing = || sum_terms(n, |i| MetricExpr::z(i).conj() * MetricExpr::v(i));
    match name {
        "euclidean" => abs2_v(),
        "fubini_study" => {
            let one_plus = MetricExpr::constant(1.0) + abs2_z();
            (one_plus.clone() * abs2_v() - pairing().abs2()) / one_plus.pow(2.0)
        }
        "complex_hyperbolic" => {
            let one_minus = MetricExpr::constant(1.0) - abs2_z();
            (one_minus.clone() * abs2_v() + pairing().abs2()) / one_minus.pow(2.0)
        }
        "hermitian_nonkahler" => {
            (MetricExpr::constant(1.0) + MetricExpr::z(2).abs2()) * MetricExpr::v(1).abs2()
                + MetricExpr::v(2).abs2()
        }
        "complex_minkowski_quartic" => sum_terms(n, |i| MetricExpr::v(i).abs2().pow(2.0)).pow(0.5),
        other => unreachable!("no catalog expression for {other}"),
    }
}

fn catalog_domain(name: &str) -> Domain {
    match name {
        "euclidean" => Domain {
            z_radius: None,
            sample_z: 1.0,
            min_fiber_component: 0.0,
        },
        "fubini_study" => Domain {
            z_radius: Some(100.0),
            sample_z: 0.6,
            min_fiber_component: 0.0,
        },
        "complex_hyperbolic" => Domain {
            z_radius: Some(0.95),
            sample_z: 0.6,
            min_fiber_component: 0.0,
        },
        "hermitian_nonkahler" => Domain {
            z_radius: None,
            sample_z: 1.2,
            min_fiber_component: 0.0,
        },
        "complex_minkowski_quartic" => Domain {
            z_radius: None,
            sample_z: 1.0,
            min_fiber_component: 0.35,
        },
        _ => Domain::default(),
    }
}

/// Instantiate a catalog metric. `params` may carry the complex
/// dimension as its first entry; entries with a fixed dimension reject
/// other values.
pub fn catalog_get(name: &str, params: &[f64]) -> Result<MetricSpec> {
    let entry = CATALOG
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownCatalog(name.to_string()))?;
    if params.len() > 1 {
        return Err(Error::Parameter {
            name: name.into(),
            message: format!("expected at most 1 parameter (n), got {}", params.len()),
        });
    }
    let n = match params.first() {
        Some(&v) => {
            if v.fract() != 0.0 || v < 1.0 {
                return Err(Error::Parameter {
                    name: name.into(),
                    message: format!("n must be a positive integer, got {v}"),
                });
            }
            v as usize
        }
        None => entry.default_n,
    };
    if n < entry.n_range.0 || n > entry.n_range.1 {
        return Err(Error::Parameter {
            name: name.into(),
            message: format!(
                "n = {n} outside supported range {}..={}",
                entry.n_range.0, entry.n_range.1
            ),
        });
    }
    let expr = catalog_expr(name, n);
    let declared: BTreeSet<Property> = entry.expected.iter().copied().collect();
    let mut spec = MetricSpec::from_expr(name, expr, n, declared, catalog_domain(name))?;
    spec.reference_holomorphic = entry.reference_holomorphic;
    Ok(spec)
}

// ------------------------------------------------------------------
// JSON metric documents

#[derive(Debug, Deserialize)]
struct MetricFile {
    name: Option<String>,
    n: Option<usize>,
    params: Option<Vec<f64>>,
    expression: Option<String>,
    declared_properties: Option<Vec<String>>,
}

/// Load a metric from a JSON document: either `{name, params|n}` for a
/// catalog entry or `{expression, n, declared_properties}` for a DSL one.
pub fn metric_from_json(doc: &str) -> Result<MetricSpec> {
    let file: MetricFile = serde_json::from_str(doc)?;
    match (&file.name, &file.expression) {
        (Some(name), None) => {
            let params = match (&file.params, file.n) {
                (Some(p), _) => p.clone(),
                (None, Some(n)) => vec![n as f64],
                (None, None) => vec![],
            };
            catalog_get(name, &params)
        }
        (None, Some(text)) => {
            let n = file.n.ok_or_else(|| Error::Parameter {
                name: "expression".into(),
                message: "`n` is required for expression metrics".into(),
            })?;
            let expr = parse_metric(text)?;
            let mut declared = BTreeSet::new();
            for p in file.declared_properties.unwrap_or_default() {
                declared.insert(p.parse::<Property>().map_err(|m| Error::Parameter {
                    name: "declared_properties".into(),
                    message: m,
                })?);
            }
            MetricSpec::from_expr("expression", expr, n, declared, Domain::default())
        }
        _ => Err(Error::Parameter {
            name: "metric".into(),
            message: "provide exactly one of `name` or `expression`".into(),
        }),
    }
}

/// Resolve a CLI metric argument: a catalog name or a path to a JSON file.
pub fn resolve_metric(arg: &str, n: Option<usize>) -> Result<MetricSpec> {
    if CATALOG.iter().any(|e| e.name == arg) {
        let params = n.map(|n| vec![n as f64]).unwrap_or_default();
        catalog_get(arg, &params)
    } else if std::path::Path::new(arg).exists() {
        metric_from_json(&std::fs::read_to_string(arg)?)
    } else {
        Err(Error::UnknownCatalog(arg.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_is_sum_of_squares() {
        let spec = catalog_get("euclidean", &[2.0]).unwrap();
        let g = spec.g(&[0.0; 4], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(g, 1.0 + 4.0 + 9.0 + 16.0);
    }

    #[test]
    fn fubini_study_reduces_to_euclidean_at_origin() {
        let spec = catalog_get("fubini_study", &[1.0]).unwrap();
        let g = spec.g(&[0.0, 0.0], &[0.8, -0.6]).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hermitian_nonkahler_levi_diag_by_hand() {
        // G = (1+|z2|^2)|v1|^2 + |v2|^2; at z2 = 1: coefficient 2 on |v1|^2.
        let spec = catalog_get("hermitian_nonkahler", &[]).unwrap();
        let x = [0.0, 1.0, 0.0, 0.0];
        let g = spec.g(&x, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((g - 2.0).abs() < 1e-15);
        let g = spec.g(&x, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn catalog_metrics_pass_homogeneity() {
        let cfg = SamplingConfig {
            seed: 11,
            count: 1000,
        };
        for entry in CATALOG {
            let spec = catalog_get(entry.name, &[]).unwrap();
            let report = validate_homogeneity(&spec, &cfg).unwrap();
            assert!(
                report.pass,
                "{} homogeneity residual {:.3e}",
                entry.name, report.residuals.max
            );
            if entry.name == "fubini_study" {
                assert!(report.residuals.max < 1e-12);
            }
        }
    }

    #[test]
    fn inhomogeneous_expression_fails() {
        let expr = parse_metric("abs2(v1)+1").unwrap();
        let err = MetricSpec::from_expr(
            "bad",
            expr.clone(),
            1,
            BTreeSet::new(),
            Domain::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotHomogeneous { .. }));
        // the unvalidated path still reports the failure via the suite
        let spec =
            MetricSpec::from_expr_unvalidated("bad", expr, 1, BTreeSet::new(), Domain::default())
                .unwrap();
        let report = validate_homogeneity(
            &spec,
            &SamplingConfig {
                seed: 3,
                count: 50,
            },
        )
        .unwrap();
        assert!(!report.pass);
        assert!(report.residuals.max > 1e-9);
    }

    #[test]
    fn unknown_catalog_name() {
        assert!(matches!(
            catalog_get("fubini", &[]),
            Err(Error::UnknownCatalog(_))
        ));
    }

    #[test]
    fn parameter_validation() {
        assert!(catalog_get("hermitian_nonkahler", &[3.0]).is_err());
        assert!(catalog_get("euclidean", &[0.0]).is_err());
        assert!(catalog_get("euclidean", &[2.5]).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let spec = metric_from_json(r#"{"name": "fubini_study", "n": 2}"#).unwrap();
        assert_eq!(spec.n, 2);
        let spec =
            metric_from_json(r#"{"expression": "abs2(v1)", "n": 1}"#).unwrap();
        assert_eq!(spec.name, "expression");
    }
}

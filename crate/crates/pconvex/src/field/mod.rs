//! Smooth functions Rⁿ→R with gradient and Hessian access, plus implicit
//! domains `{rho0 < 0}` built from an analytic catalog or a parsed
//! expression.

mod catalog;
mod expr;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, SymMatrix};

pub use catalog::catalog;
pub use expr::ExprField;

/// How a field obtains its derivatives, recorded for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference { step: f64 },
}

/// A smooth function Rⁿ→R exposing value, gradient and Hessian.
///
/// Evaluation is pure and reentrant; implementations are immutable after
/// construction and safe to share across threads. Hessians are exactly
/// symmetric (`SymMatrix` symmetrizes on construction).
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        fd_gradient(self, x, default_step(x))
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        fd_hessian(self, x, default_step(x))
    }

    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::FiniteDifference {
            step: 1e-4,
        }
    }
}

impl<F: ScalarField + ?Sized> ScalarField for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        (**self).hessian(x)
    }
    fn derivative_mode(&self) -> DerivativeMode {
        (**self).derivative_mode()
    }
}

impl ScalarField for Arc<dyn ScalarField> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        (**self).hessian(x)
    }
    fn derivative_mode(&self) -> DerivativeMode {
        (**self).derivative_mode()
    }
}

/// Default finite-difference step, balancing truncation against rounding
/// for double precision on O(1)-scaled domains.
pub fn default_step(x: &[f64]) -> f64 {
    1e-4 * (1.0 + norm(x))
}

fn finite_or_err(v: f64, x: &[f64]) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::EvaluationError { point: x.to_vec() })
    }
}

/// Componentwise central differences, O(h²) on C³ inputs.
pub fn fd_gradient<F: ScalarField + ?Sized>(f: &F, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut xp = x.to_vec();
    for i in 0..n {
        xp[i] = x[i] + h;
        let fp = finite_or_err(f.value(&xp)?, &xp)?;
        xp[i] = x[i] - h;
        let fm = finite_or_err(f.value(&xp)?, &xp)?;
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Symmetric central second differences; the result is symmetrized.
pub fn fd_hessian<F: ScalarField + ?Sized>(f: &F, x: &[f64], h: f64) -> Result<SymMatrix> {
    let n = x.len();
    let f0 = finite_or_err(f.value(x)?, x)?;
    let mut entries = vec![0.0; n * n];
    let mut xp = x.to_vec();
    for i in 0..n {
        xp[i] = x[i] + h;
        let fp = finite_or_err(f.value(&xp)?, &xp)?;
        xp[i] = x[i] - h;
        let fm = finite_or_err(f.value(&xp)?, &xp)?;
        xp[i] = x[i];
        entries[i * n + i] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in (i + 1)..n {
            let mut probe = |si: f64, sj: f64| -> Result<f64> {
                xp[i] = x[i] + si * h;
                xp[j] = x[j] + sj * h;
                let v = finite_or_err(f.value(&xp)?, &xp)?;
                xp[i] = x[i];
                xp[j] = x[j];
                Ok(v)
            };
            let fpp = probe(1.0, 1.0)?;
            let fpm = probe(1.0, -1.0)?;
            let fmp = probe(-1.0, 1.0)?;
            let fmm = probe(-1.0, -1.0)?;
            let d = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    SymMatrix::new(n, entries)
}

/// Field defined by a plain value closure; derivatives fall back to finite
/// differences. Used for cross-checks and ad-hoc test fields.
pub struct FnField<F: Fn(&[f64]) -> f64 + Send + Sync> {
    n: usize,
    f: F,
    step: Option<f64>,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnField<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnField { n, f, step: None }
    }

    pub fn with_step(n: usize, f: F, step: f64) -> Self {
        FnField {
            n,
            f,
            step: Some(step),
        }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> ScalarField for FnField<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        finite_or_err((self.f)(x), x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        fd_gradient(self, x, self.step.unwrap_or_else(|| default_step(x)))
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        fd_hessian(self, x, self.step.unwrap_or_else(|| default_step(x)))
    }

    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::FiniteDifference {
            step: self.step.unwrap_or(1e-4),
        }
    }
}

// ---------------------------------------------------------------------------
// Domain specification and construction
// ---------------------------------------------------------------------------

/// Catalog entry inside a [`DomainSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogSpec {
    pub kind: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// JSON domain description:
/// `{ "name": str, "dim": int, "expr": str | "catalog": {"kind","params"},
///    "bbox": [[lo,hi],...] }`.
///
/// Exactly one of `expr` / `catalog` must be present. Expression domains
/// require an explicit bbox; catalog domains provide a canonical one that
/// `bbox` may override.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub name: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<CatalogSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<Vec<[f64; 2]>>,
}

/// Bounded implicit domain `D = {rho0 < 0}` inside an axis-aligned box.
#[derive(Clone)]
pub struct ImplicitDomain {
    rho0: Arc<dyn ScalarField>,
    bbox: Vec<[f64; 2]>,
    spec: DomainSpec,
}

impl ImplicitDomain {
    pub fn new(rho0: Arc<dyn ScalarField>, bbox: Vec<[f64; 2]>, spec: DomainSpec) -> Result<Self> {
        if bbox.len() != rho0.dim() {
            return Err(Error::DimensionError {
                expected: rho0.dim(),
                got: bbox.len(),
            });
        }
        if bbox.iter().any(|[lo, hi]| !(lo < hi)) {
            return Err(Error::CatalogError {
                reason: "bbox sides must satisfy lo < hi".into(),
            });
        }
        Ok(ImplicitDomain { rho0, bbox, spec })
    }

    pub fn dim(&self) -> usize {
        self.rho0.dim()
    }

    pub fn rho0(&self) -> &Arc<dyn ScalarField> {
        &self.rho0
    }

    pub fn bbox(&self) -> &[[f64; 2]] {
        &self.bbox
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    /// Strict interior test `rho0(x) < 0`.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.rho0.value(x)? < 0.0)
    }

    /// Half the bbox diagonal, a natural length scale for probes.
    pub fn half_diagonal(&self) -> f64 {
        let d2: f64 = self
            .bbox
            .iter()
            .map(|[lo, hi]| (hi - lo) * (hi - lo))
            .sum();
        0.5 * d2.sqrt()
    }
}

/// Builds a domain from its JSON description.
pub fn build_domain(spec: &DomainSpec) -> Result<ImplicitDomain> {
    match (&spec.expr, &spec.catalog) {
        (Some(src), None) => {
            let field = ExprField::parse(src, spec.dim)?;
            let bbox = spec.bbox.clone().ok_or_else(|| Error::CatalogError {
                reason: "expression domains require an explicit bbox".into(),
            })?;
            ImplicitDomain::new(Arc::new(field), bbox, spec.clone())
        }
        (None, Some(cat)) => {
            let dom = catalog::catalog_from_json(&cat.kind, &cat.params)?;
            let bbox = spec.bbox.clone().unwrap_or_else(|| dom.bbox().to_vec());
            let mut resolved = spec.clone();
            resolved.dim = dom.dim();
            resolved.bbox = Some(bbox.clone());
            ImplicitDomain::new(dom.rho0().clone(), bbox, resolved)
        }
        _ => Err(Error::CatalogError {
            reason: "domain spec must provide exactly one of `expr` or `catalog`".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sub;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fd_gradient_quadratic() {
        let f = FnField::new(2, |x: &[f64]| x[0] * x[0] + x[1] * x[1]);
        let g = fd_gradient(&f, &[1.0, 2.0], 1e-4).unwrap();
        assert!((g[0] - 2.0).abs() <= 1e-9);
        assert!((g[1] - 4.0).abs() <= 1e-9);
    }

    #[test]
    fn fd_gradient_constant() {
        let f = FnField::new(3, |_: &[f64]| 4.2);
        let g = fd_gradient(&f, &[0.3, -0.1, 2.0], 1e-4).unwrap();
        assert!(norm(&g) == 0.0);
    }

    #[test]
    fn fd_gradient_trig_vs_analytic() {
        let f = FnField::new(2, |x: &[f64]| x[0].sin() * x[1].cos());
        let x = [0.3, 0.7];
        let g = fd_gradient(&f, &x, 1e-4).unwrap();
        let exact = [x[0].cos() * x[1].cos(), -x[0].sin() * x[1].sin()];
        assert!((g[0] - exact[0]).abs() <= 1e-7);
        assert!((g[1] - exact[1]).abs() <= 1e-7);
    }

    #[test]
    fn fd_hessian_quadratic() {
        let f = FnField::new(3, |x: &[f64]| x.iter().map(|v| v * v).sum());
        let h = fd_hessian(&f, &[0.2, -0.4, 0.9], 1e-4).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 } else { 0.0 };
                assert!((h.get(i, j) - want).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn fd_hessian_linear_is_zero() {
        let f = FnField::new(2, |x: &[f64]| 3.0 * x[0] - 0.5 * x[1] + 1.0);
        let h = fd_hessian(&f, &[0.4, 0.1], 1e-4).unwrap();
        assert!(h.frobenius_norm() <= 1e-6);
    }

    #[test]
    fn fd_hessian_cubic_cross_term() {
        // f = x₁²x₂ at (1,1): Hessian [[2,2],[2,0]].
        let f = FnField::new(2, |x: &[f64]| x[0] * x[0] * x[1]);
        let h = fd_hessian(&f, &[1.0, 1.0], 1e-4).unwrap();
        assert!((h.get(0, 0) - 2.0).abs() <= 1e-5);
        assert!((h.get(0, 1) - 2.0).abs() <= 1e-5);
        assert!((h.get(1, 1) - 0.0).abs() <= 1e-5);
    }

    #[test]
    fn fd_rejects_non_finite() {
        let f = FnField::new(1, |x: &[f64]| x[0].ln());
        assert!(matches!(
            fd_gradient(&f, &[0.0], 1e-4),
            Err(Error::EvaluationError { .. })
        ));
    }

    #[test]
    fn catalog_fd_matches_analytic_derivatives() {
        // 100 random points per domain, agreement within 1e-5; and the
        // documented ScalarField gradient contract at 1e-6·(1+‖∇‖).
        let domains = [
            catalog("ball", &[1.0]).unwrap(),
            catalog("ellipsoid", &[1.0, 2.0, 3.0]).unwrap(),
            catalog("solid_torus", &[2.5, 1.0]).unwrap(),
            catalog("perturbed_ball", &[1.0, 0.1, 2.0]).unwrap(),
            catalog("complex_egg", &[2.0]).unwrap(),
            catalog("hartogs_example", &[]).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for dom in &domains {
            let f = dom.rho0();
            for _ in 0..100 {
                let x: Vec<f64> = dom
                    .bbox()
                    .iter()
                    .map(|[lo, hi]| rng.gen_range(*lo..*hi))
                    .collect();
                // Keep clear of the torus axis where rho0 is not smooth.
                if dom.spec().name.contains("torus") && x[0] * x[0] + x[1] * x[1] < 0.04 {
                    continue;
                }
                let g = f.gradient(&x).unwrap();
                let g_fd = fd_gradient(f.as_ref(), &x, 1e-4).unwrap();
                let gerr = norm(&sub(&g, &g_fd));
                assert!(gerr <= 1e-5, "{}: grad err {gerr}", dom.spec().name);
                assert!(gerr <= 1e-6 * (1.0 + norm(&g)));
                let h = f.hessian(&x).unwrap();
                let h_fd = fd_hessian(f.as_ref(), &x, 1e-4).unwrap();
                let herr = h.add_scaled(-1.0, &h_fd).frobenius_norm();
                assert!(herr <= 1e-5, "{}: hess err {herr}", dom.spec().name);
            }
        }
    }

    #[test]
    fn catalog_domains_bounded() {
        // rho0 > 0 on every bbox face (sampled).
        let domains = [
            catalog("ball", &[1.0]).unwrap(),
            catalog("ellipsoid", &[1.0, 2.0, 3.0]).unwrap(),
            catalog("solid_torus", &[2.5, 1.0]).unwrap(),
            catalog("perturbed_ball", &[1.0, 0.5, 3.0]).unwrap(),
            catalog("complex_egg", &[2.0]).unwrap(),
            catalog("hartogs_example", &[]).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for dom in &domains {
            let n = dom.dim();
            for face_dim in 0..n {
                for side in 0..2 {
                    for _ in 0..50 {
                        let mut x: Vec<f64> = dom
                            .bbox()
                            .iter()
                            .map(|[lo, hi]| rng.gen_range(*lo..*hi))
                            .collect();
                        x[face_dim] = dom.bbox()[face_dim][side];
                        let v = dom.rho0().value(&x).unwrap();
                        assert!(v > 0.0, "{} face {face_dim}: {v}", dom.spec().name);
                    }
                }
            }
        }
    }

    #[test]
    fn build_domain_from_expr_json() {
        let spec: DomainSpec = serde_json::from_str(
            r#"{"name":"disc","dim":2,"expr":"x^2 + y^2 - 1","bbox":[[-1.5,1.5],[-1.5,1.5]]}"#,
        )
        .unwrap();
        let dom = build_domain(&spec).unwrap();
        assert!((dom.rho0().value(&[0.5, 0.0]).unwrap() + 0.75).abs() <= 1e-15);
        assert!(dom.contains(&[0.0, 0.0]).unwrap());
        assert!(!dom.contains(&[1.2, 0.0]).unwrap());
    }

    #[test]
    fn build_domain_from_catalog_json() {
        let spec: DomainSpec = serde_json::from_str(
            r#"{"name":"torus","dim":3,"catalog":{"kind":"solid_torus","params":{"ring_radius":2.5,"tube_radius":1.0}}}"#,
        )
        .unwrap();
        let dom = build_domain(&spec).unwrap();
        assert!((dom.rho0().value(&[2.5, 0.0, 0.0]).unwrap() + 1.0).abs() <= 1e-15);
    }

    #[test]
    fn expr_domain_requires_bbox() {
        let spec: DomainSpec =
            serde_json::from_str(r#"{"name":"d","dim":2,"expr":"x^2 + y^2 - 1"}"#).unwrap();
        assert!(matches!(
            build_domain(&spec),
            Err(Error::CatalogError { .. })
        ));
    }
}

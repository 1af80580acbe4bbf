//! Analytic test domains with exact gradients and Hessians.

use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::{CatalogSpec, DerivativeMode, DomainSpec, ImplicitDomain, ScalarField};
use crate::linalg::SymMatrix;

fn cat_err(reason: impl Into<String>) -> Error {
    Error::CatalogError {
        reason: reason.into(),
    }
}

/// Builds a catalog domain from positional parameters, as accepted by the
/// CLI form `catalog:<kind>:<p1>,<p2>,...`.
///
/// Kinds: `ball(R[,dim])`, `ellipsoid(a1..an)`, `solid_torus(R_ring,r_tube)`,
/// `perturbed_ball(R,amp,freq)`, `complex_egg(k)`, `hartogs_example`.
pub fn catalog(kind: &str, params: &[f64]) -> Result<ImplicitDomain> {
    match kind {
        "ball" => match params {
            [r] => ball(*r, 3),
            [r, dim] => ball(*r, int_param(*dim, "dim")? as usize),
            _ => Err(cat_err("ball takes R or R,dim")),
        },
        "ellipsoid" => ellipsoid(params),
        "solid_torus" => match params {
            [ring, tube] => solid_torus(*ring, *tube),
            _ => Err(cat_err("solid_torus takes R_ring,r_tube")),
        },
        "perturbed_ball" => match params {
            [r, amp, freq] => perturbed_ball(*r, *amp, *freq),
            _ => Err(cat_err("perturbed_ball takes R,amp,freq")),
        },
        "complex_egg" => match params {
            [k] => complex_egg(int_param(*k, "k")?),
            _ => Err(cat_err("complex_egg takes k")),
        },
        "hartogs_example" => {
            if params.is_empty() {
                hartogs_example()
            } else {
                Err(cat_err("hartogs_example takes no parameters"))
            }
        }
        other => Err(cat_err(format!("unknown catalog kind `{other}`"))),
    }
}

/// Builds a catalog domain from the JSON `params` object of a domain spec.
pub(crate) fn catalog_from_json(kind: &str, params: &Value) -> Result<ImplicitDomain> {
    let f = |key: &str| -> Result<f64> {
        params
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| cat_err(format!("{kind}: missing numeric param `{key}`")))
    };
    match kind {
        "ball" => {
            let dim = params.get("dim").and_then(Value::as_u64).unwrap_or(3) as usize;
            ball(f("r")?, dim)
        }
        "ellipsoid" => {
            let axes: Vec<f64> = params
                .get("semi_axes")
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(Value::as_f64).collect())
                .ok_or_else(|| cat_err("ellipsoid: missing `semi_axes` array"))?;
            ellipsoid(&axes)
        }
        "solid_torus" => solid_torus(f("ring_radius")?, f("tube_radius")?),
        "perturbed_ball" => perturbed_ball(f("r")?, f("amp")?, f("freq")?),
        "complex_egg" => complex_egg(int_param(f("k")?, "k")?),
        "hartogs_example" => hartogs_example(),
        other => Err(cat_err(format!("unknown catalog kind `{other}`"))),
    }
}

fn int_param(v: f64, name: &str) -> Result<i32> {
    if v.fract() == 0.0 && v >= 0.0 && v <= i32::MAX as f64 {
        Ok(v as i32)
    } else {
        Err(cat_err(format!("`{name}` must be a nonnegative integer")))
    }
}

fn make_domain(
    field: Arc<dyn ScalarField>,
    bbox: Vec<[f64; 2]>,
    name: String,
    kind: &str,
    params: Value,
) -> Result<ImplicitDomain> {
    let dim = field.dim();
    let spec = DomainSpec {
        name,
        dim,
        expr: None,
        catalog: Some(CatalogSpec {
            kind: kind.to_string(),
            params,
        }),
        bbox: Some(bbox.clone()),
    };
    ImplicitDomain::new(field, bbox, spec)
}

fn cube_bbox(half: f64, dim: usize) -> Vec<[f64; 2]> {
    vec![[-half, half]; dim]
}

// ---------------------------------------------------------------------------
// ball(R): rho0 = |x|² − R²
// ---------------------------------------------------------------------------

struct BallField {
    dim: usize,
    r2: f64,
}

impl ScalarField for BallField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(x.iter().map(|v| v * v).sum::<f64>() - self.r2)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.iter().map(|v| 2.0 * v).collect())
    }
    fn hessian(&self, _x: &[f64]) -> Result<SymMatrix> {
        Ok(SymMatrix::identity(self.dim).scaled(2.0))
    }
    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }
}

pub fn ball(r: f64, dim: usize) -> Result<ImplicitDomain> {
    if !(r > 0.0) {
        return Err(cat_err("ball radius must be positive"));
    }
    if dim < 2 {
        return Err(cat_err("ball dimension must be at least 2"));
    }
    let half = r + 0.25 * r + 0.25;
    make_domain(
        Arc::new(BallField { dim, r2: r * r }),
        cube_bbox(half, dim),
        format!("ball({r})"),
        "ball",
        json!({ "r": r, "dim": dim }),
    )
}

// ---------------------------------------------------------------------------
// ellipsoid(a1..an): rho0 = Σ x_i²/a_i² − 1
// ---------------------------------------------------------------------------

struct EllipsoidField {
    inv_a2: Vec<f64>,
}

impl ScalarField for EllipsoidField {
    fn dim(&self) -> usize {
        self.inv_a2.len()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(x.iter()
            .zip(&self.inv_a2)
            .map(|(v, w)| v * v * w)
            .sum::<f64>()
            - 1.0)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.iter().zip(&self.inv_a2).map(|(v, w)| 2.0 * v * w).collect())
    }
    fn hessian(&self, _x: &[f64]) -> Result<SymMatrix> {
        Ok(SymMatrix::from_diag(
            &self.inv_a2.iter().map(|w| 2.0 * w).collect::<Vec<_>>(),
        ))
    }
    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }
}

pub fn ellipsoid(semi_axes: &[f64]) -> Result<ImplicitDomain> {
    if semi_axes.len() < 2 {
        return Err(cat_err("ellipsoid needs at least two semi-axes"));
    }
    if semi_axes.iter().any(|a| !(*a > 0.0)) {
        return Err(cat_err("ellipsoid semi-axes must be positive"));
    }
    let bbox = semi_axes
        .iter()
        .map(|a| [-(a + 0.25 * a + 0.25), a + 0.25 * a + 0.25])
        .collect();
    let axes_text = semi_axes
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(",");
    make_domain(
        Arc::new(EllipsoidField {
            inv_a2: semi_axes.iter().map(|a| 1.0 / (a * a)).collect(),
        }),
        bbox,
        format!("ellipsoid({axes_text})"),
        "ellipsoid",
        json!({ "semi_axes": semi_axes }),
    )
}

// ---------------------------------------------------------------------------
// solid_torus(R_ring, r_tube): rho0 = (√(x²+y²) − R_ring)² + z² − r_tube²
// ---------------------------------------------------------------------------

struct TorusField {
    ring: f64,
    tube2: f64,
}

impl TorusField {
    fn radial(&self, x: &[f64]) -> Result<f64> {
        let s = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if s < 1e-9 {
            // Derivatives blow up on the symmetry axis.
            Err(Error::EvaluationError { point: x.to_vec() })
        } else {
            Ok(s)
        }
    }
}

impl ScalarField for TorusField {
    fn dim(&self) -> usize {
        3
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        let s = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let d = s - self.ring;
        Ok(d * d + x[2] * x[2] - self.tube2)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.radial(x)?;
        let d = s - self.ring;
        Ok(vec![2.0 * d * x[0] / s, 2.0 * d * x[1] / s, 2.0 * x[2]])
    }
    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let s = self.radial(x)?;
        let d = s - self.ring;
        let s2 = s * s;
        let s3 = s2 * s;
        let mut h = SymMatrix::zeros(3);
        h.set_sym(0, 0, 2.0 * (x[0] * x[0] / s2 + d * x[1] * x[1] / s3));
        h.set_sym(1, 1, 2.0 * (x[1] * x[1] / s2 + d * x[0] * x[0] / s3));
        h.set_sym(0, 1, 2.0 * (x[0] * x[1] / s2 - d * x[0] * x[1] / s3));
        h.set_sym(2, 2, 2.0);
        Ok(h)
    }
    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }
}

pub fn solid_torus(ring: f64, tube: f64) -> Result<ImplicitDomain> {
    if !(tube > 0.0) || !(ring > tube) {
        return Err(cat_err("solid_torus requires R_ring > r_tube > 0"));
    }
    let half_xy = ring + tube + 0.25 * tube + 0.25;
    let half_z = tube + 0.25 * tube + 0.25;
    make_domain(
        Arc::new(TorusField {
            ring,
            tube2: tube * tube,
        }),
        vec![[-half_xy, half_xy], [-half_xy, half_xy], [-half_z, half_z]],
        format!("solid_torus({ring},{tube})"),
        "solid_torus",
        json!({ "ring_radius": ring, "tube_radius": tube }),
    )
}

// ---------------------------------------------------------------------------
// perturbed_ball(R, amp, freq): rho0 = |x|² − R² + amp·cos(freq·x₁)
//
// For amp·freq²/2 > 1 the waist at x₁ = 0 becomes strongly non-convex in the
// meridian direction and the boundary fails 2-convexity there.
// ---------------------------------------------------------------------------

struct PerturbedBallField {
    r2: f64,
    amp: f64,
    freq: f64,
}

impl ScalarField for PerturbedBallField {
    fn dim(&self) -> usize {
        3
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(x.iter().map(|v| v * v).sum::<f64>() - self.r2
            + self.amp * (self.freq * x[0]).cos())
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        g[0] -= self.amp * self.freq * (self.freq * x[0]).sin();
        Ok(g)
    }
    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let mut h = SymMatrix::identity(3).scaled(2.0);
        h.set_sym(
            0,
            0,
            2.0 - self.amp * self.freq * self.freq * (self.freq * x[0]).cos(),
        );
        Ok(h)
    }
    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }
}

pub fn perturbed_ball(r: f64, amp: f64, freq: f64) -> Result<ImplicitDomain> {
    if !(r > 0.0) {
        return Err(cat_err("perturbed_ball radius must be positive"));
    }
    if !(amp >= 0.0) || amp >= r * r {
        return Err(cat_err("perturbed_ball requires 0 ≤ amp < R²"));
    }
    let reach = (r * r + amp).sqrt();
    let half = reach + 0.25 * reach + 0.25;
    make_domain(
        Arc::new(PerturbedBallField {
            r2: r * r,
            amp,
            freq,
        }),
        cube_bbox(half, 3),
        format!("perturbed_ball({r},{amp},{freq})"),
        "perturbed_ball",
        json!({ "r": r, "amp": amp, "freq": freq }),
    )
}

// ---------------------------------------------------------------------------
// complex_egg(k) in R⁴ ≅ C²: rho0 = |z|^{2k} + |w|² − 1
// ---------------------------------------------------------------------------

struct ComplexEggField {
    k: i32,
}

impl ScalarField for ComplexEggField {
    fn dim(&self) -> usize {
        4
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        let q = x[0] * x[0] + x[1] * x[1];
        Ok(q.powi(self.k) + x[2] * x[2] + x[3] * x[3] - 1.0)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let q = x[0] * x[0] + x[1] * x[1];
        let kf = self.k as f64;
        let c = 2.0 * kf * q.powi(self.k - 1);
        Ok(vec![c * x[0], c * x[1], 2.0 * x[2], 2.0 * x[3]])
    }
    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let q = x[0] * x[0] + x[1] * x[1];
        let kf = self.k as f64;
        let c1 = 2.0 * kf * q.powi(self.k - 1);
        let c2 = if self.k >= 2 {
            4.0 * kf * (kf - 1.0) * q.powi(self.k - 2)
        } else {
            0.0
        };
        let mut h = SymMatrix::zeros(4);
        h.set_sym(0, 0, c1 + c2 * x[0] * x[0]);
        h.set_sym(1, 1, c1 + c2 * x[1] * x[1]);
        h.set_sym(0, 1, c2 * x[0] * x[1]);
        h.set_sym(2, 2, 2.0);
        h.set_sym(3, 3, 2.0);
        Ok(h)
    }
    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }
}

pub fn complex_egg(k: i32) -> Result<ImplicitDomain> {
    if k < 1 {
        return Err(cat_err("complex_egg exponent k must be ≥ 1"));
    }
    make_domain(
        Arc::new(ComplexEggField { k }),
        cube_bbox(1.5, 4),
        format!("complex_egg({k})"),
        "complex_egg",
        json!({ "k": k }),
    )
}

// ---------------------------------------------------------------------------
// hartogs_example in R⁴ ≅ C²_{(z,w)}: rho0 = Re w + Re z² + |w|² + |z|⁴
//
// The additive constant is zero: the domain is then nonempty and bounded,
// and |∇rho0| = 1 on the boundary circle {z = 0}, so curvature values there
// need no normalization factor.
// ---------------------------------------------------------------------------

struct HartogsField;

impl ScalarField for HartogsField {
    fn dim(&self) -> usize {
        4
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        let q = x[0] * x[0] + x[1] * x[1];
        Ok(x[2] + x[0] * x[0] - x[1] * x[1] + x[2] * x[2] + x[3] * x[3] + q * q)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let q = x[0] * x[0] + x[1] * x[1];
        Ok(vec![
            2.0 * x[0] + 4.0 * q * x[0],
            -2.0 * x[1] + 4.0 * q * x[1],
            1.0 + 2.0 * x[2],
            2.0 * x[3],
        ])
    }
    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let q = x[0] * x[0] + x[1] * x[1];
        let mut h = SymMatrix::zeros(4);
        h.set_sym(0, 0, 2.0 + 4.0 * q + 8.0 * x[0] * x[0]);
        h.set_sym(1, 1, -2.0 + 4.0 * q + 8.0 * x[1] * x[1]);
        h.set_sym(0, 1, 8.0 * x[0] * x[1]);
        h.set_sym(2, 2, 2.0);
        h.set_sym(3, 3, 2.0);
        Ok(h)
    }
    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }
}

pub fn hartogs_example() -> Result<ImplicitDomain> {
    make_domain(
        Arc::new(HartogsField),
        cube_bbox(1.5, 4),
        "hartogs_example".to_string(),
        "hartogs_example",
        json!({}),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_value() {
        let dom = catalog("ball", &[1.0]).unwrap();
        assert!((dom.rho0().value(&[0.5, 0.0, 0.0]).unwrap() + 0.75).abs() <= 1e-15);
    }

    #[test]
    fn torus_tube_center() {
        let dom = catalog("solid_torus", &[2.5, 1.0]).unwrap();
        assert!((dom.rho0().value(&[2.5, 0.0, 0.0]).unwrap() + 1.0).abs() <= 1e-15);
    }

    #[test]
    fn ellipsoid_axis_gradient() {
        let dom = catalog("ellipsoid", &[1.0, 2.0, 3.0]).unwrap();
        let g = dom.rho0().gradient(&[1.0, 0.0, 0.0]).unwrap();
        assert!((g[0] - 2.0).abs() <= 1e-15);
        assert!(g[1].abs() <= 1e-15 && g[2].abs() <= 1e-15);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(matches!(
            catalog("ball", &[-1.0]),
            Err(Error::CatalogError { .. })
        ));
        assert!(matches!(
            catalog("solid_torus", &[1.0, 2.0]),
            Err(Error::CatalogError { .. })
        ));
        assert!(matches!(
            catalog("perturbed_ball", &[1.0, 1.5, 2.0]),
            Err(Error::CatalogError { .. })
        ));
        assert!(matches!(
            catalog("complex_egg", &[0.0]),
            Err(Error::CatalogError { .. })
        ));
        assert!(matches!(
            catalog("nonsense", &[]),
            Err(Error::CatalogError { .. })
        ));
    }

    #[test]
    fn hartogs_nonempty_and_zero_locus() {
        let dom = hartogs_example().unwrap();
        // Interior point at z = 0, w = −1/2.
        assert!(dom.rho0().value(&[0.0, 0.0, -0.5, 0.0]).unwrap() < 0.0);
        // Boundary circle through the origin in the z = 0 slice.
        assert!(dom.rho0().value(&[0.0, 0.0, 0.0, 0.0]).unwrap().abs() <= 1e-15);
        let g = dom.rho0().gradient(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn egg_hessian_vanishes_in_z_at_origin() {
        let dom = complex_egg(2).unwrap();
        let h = dom.rho0().hessian(&[0.0, 0.0, 0.8, 0.6]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(h.get(i, j), 0.0);
            }
        }
        assert_eq!(h.get(2, 2), 2.0);
    }

    #[test]
    fn torus_axis_guard() {
        let dom = catalog("solid_torus", &[2.5, 1.0]).unwrap();
        assert!(dom.rho0().value(&[0.0, 0.0, 0.0]).is_ok());
        assert!(dom.rho0().gradient(&[0.0, 0.0, 0.0]).is_err());
    }
}

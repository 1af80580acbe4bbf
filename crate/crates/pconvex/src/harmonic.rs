//! Subharmonicity of `ρ∘f` along conformal harmonic maps.
//!
//! For a harmonic map `f` with orthogonal equal-length partials, the
//! Laplacian of a pullback collapses to
//! `Δ(ρ∘f) = Hess ρ(f_u,f_u) + Hess ρ(f_v,f_v)`, which equals
//! `|f_u|²·tr_Λ Hess ρ` on the normalized tangent plane Λ. A p-psh ρ with
//! p = 2 therefore pulls back to a subharmonic function on every minimal
//! surface, and the maximum principle forbids an interior touching of the
//! boundary; the dichotomy classifier reports that configuration instead of
//! asserting it away.
//!
//! The catalog uses standard isothermal parametrizations (catenoid,
//! helicoid, Enneper, affine planes). Patches are rescaled and translated to
//! fit target domains, which preserves harmonicity and conformality.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{axpy, dot, norm, orthonormalize, scale, trace_on_plane};

/// Value and first/second parameter derivatives of a patch at (u,v).
#[derive(Debug, Clone)]
pub struct Jet2 {
    pub f: Vec<f64>,
    pub fu: Vec<f64>,
    pub fv: Vec<f64>,
    pub fuu: Vec<f64>,
    pub fvv: Vec<f64>,
}

trait SurfacePatch: Send + Sync {
    fn ambient_dim(&self) -> usize;
    fn jet(&self, u: f64, v: f64) -> Jet2;
}

struct Catenoid;

impl SurfacePatch for Catenoid {
    fn ambient_dim(&self) -> usize {
        3
    }
    fn jet(&self, u: f64, v: f64) -> Jet2 {
        let (su, cu) = u.sin_cos();
        let (shv, chv) = (v.sinh(), v.cosh());
        Jet2 {
            f: vec![chv * cu, chv * su, v],
            fu: vec![-chv * su, chv * cu, 0.0],
            fv: vec![shv * cu, shv * su, 1.0],
            fuu: vec![-chv * cu, -chv * su, 0.0],
            fvv: vec![chv * cu, chv * su, 0.0],
        }
    }
}

struct Helicoid;

impl SurfacePatch for Helicoid {
    fn ambient_dim(&self) -> usize {
        3
    }
    fn jet(&self, u: f64, v: f64) -> Jet2 {
        let (su, cu) = u.sin_cos();
        let (shv, chv) = (v.sinh(), v.cosh());
        Jet2 {
            f: vec![shv * cu, shv * su, u],
            fu: vec![-shv * su, shv * cu, 1.0],
            fv: vec![chv * cu, chv * su, 0.0],
            fuu: vec![-shv * cu, -shv * su, 0.0],
            fvv: vec![shv * cu, shv * su, 0.0],
        }
    }
}

struct Enneper;

impl SurfacePatch for Enneper {
    fn ambient_dim(&self) -> usize {
        3
    }
    fn jet(&self, u: f64, v: f64) -> Jet2 {
        Jet2 {
            f: vec![
                u - u * u * u / 3.0 + u * v * v,
                -v + v * v * v / 3.0 - v * u * u,
                u * u - v * v,
            ],
            fu: vec![1.0 - u * u + v * v, -2.0 * u * v, 2.0 * u],
            fv: vec![2.0 * u * v, -1.0 + v * v - u * u, -2.0 * v],
            fuu: vec![-2.0 * u, -2.0 * v, 2.0],
            fvv: vec![2.0 * u, 2.0 * v, -2.0],
        }
    }
}

struct AffinePlane {
    base: Vec<f64>,
    e1: Vec<f64>,
    e2: Vec<f64>,
}

impl SurfacePatch for AffinePlane {
    fn ambient_dim(&self) -> usize {
        self.base.len()
    }
    fn jet(&self, u: f64, v: f64) -> Jet2 {
        let n = self.base.len();
        let f = (0..n)
            .map(|i| self.base[i] + u * self.e1[i] + v * self.e2[i])
            .collect();
        Jet2 {
            f,
            fu: self.e1.clone(),
            fv: self.e2.clone(),
            fuu: vec![0.0; n],
            fvv: vec![0.0; n],
        }
    }
}

struct CustomPatch<F: Fn(f64, f64) -> Jet2 + Send + Sync> {
    dim: usize,
    jet_fn: F,
}

impl<F: Fn(f64, f64) -> Jet2 + Send + Sync> SurfacePatch for CustomPatch<F> {
    fn ambient_dim(&self) -> usize {
        self.dim
    }
    fn jet(&self, u: f64, v: f64) -> Jet2 {
        (self.jet_fn)(u, v)
    }
}

// ---------------------------------------------------------------------------
// ConformalHarmonicMap
// ---------------------------------------------------------------------------

/// A parametrized surface patch `f: Ω → Rⁿ` with an affine fit
/// `x ↦ translate + scale·x` applied on top, and an optional rescaling of
/// the conformal parameter `(u,v) ↦ (κu, κv)`. Both operations preserve
/// harmonicity and conformality exactly; the parameter rescaling keeps the
/// conformal factor |f_u| of a fitted patch O(1)-bounded, which keeps
/// discrete parameter-space stencils accurate.
#[derive(Clone)]
pub struct ConformalHarmonicMap {
    tag: String,
    /// Parameter rectangle in the outer (rescaled) coordinates.
    rect: [[f64; 2]; 2],
    scale: f64,
    translate: Vec<f64>,
    /// Inner parameter per outer parameter unit.
    param_scale: f64,
    surface: Arc<dyn SurfacePatch>,
}

impl ConformalHarmonicMap {
    /// `(cosh v cos u, cosh v sin u, v)` on the given rectangle.
    pub fn catenoid(rect: [[f64; 2]; 2]) -> Self {
        Self::from_patch("catenoid_patch", Arc::new(Catenoid), rect)
    }

    /// `(sinh v cos u, sinh v sin u, u)`.
    pub fn helicoid(rect: [[f64; 2]; 2]) -> Self {
        Self::from_patch("helicoid_patch", Arc::new(Helicoid), rect)
    }

    /// Enneper's surface in its cubic isothermal form.
    pub fn enneper(rect: [[f64; 2]; 2]) -> Self {
        Self::from_patch("enneper_patch", Arc::new(Enneper), rect)
    }

    /// Isometrically parametrized affine plane through `base`; the two
    /// direction vectors are orthonormalized.
    pub fn affine_plane(
        base: Vec<f64>,
        u_dir: Vec<f64>,
        v_dir: Vec<f64>,
        rect: [[f64; 2]; 2],
    ) -> Result<Self> {
        let frame = orthonormalize(&[u_dir, v_dir])?;
        Ok(Self::from_patch(
            "affine_plane",
            Arc::new(AffinePlane {
                base,
                e1: frame.vectors()[0].clone(),
                e2: frame.vectors()[1].clone(),
            }),
            rect,
        ))
    }

    /// Arbitrary jet closure; used for negative controls and fixtures. No
    /// conformal-harmonic validation is implied by construction.
    pub fn custom<F: Fn(f64, f64) -> Jet2 + Send + Sync + 'static>(
        tag: &str,
        dim: usize,
        jet_fn: F,
        rect: [[f64; 2]; 2],
    ) -> Self {
        Self::from_patch(tag, Arc::new(CustomPatch { dim, jet_fn }), rect)
    }

    fn from_patch(tag: &str, surface: Arc<dyn SurfacePatch>, rect: [[f64; 2]; 2]) -> Self {
        let dim = surface.ambient_dim();
        ConformalHarmonicMap {
            tag: tag.to_string(),
            rect,
            scale: 1.0,
            translate: vec![0.0; dim],
            param_scale: 1.0,
            surface,
        }
    }

    /// Applies `x ↦ translate + scale·x` on top of the current fit.
    pub fn fitted(mut self, scale: f64, translate: Vec<f64>) -> Self {
        assert!(scale > 0.0);
        assert_eq!(translate.len(), self.translate.len());
        self.translate = axpy(&translate, scale, &self.translate);
        self.scale *= scale;
        self
    }

    /// Rescales and recenters so the patch image fits inside the ball of the
    /// given radius around `center` (bounding radius measured on a dense
    /// parameter grid, with a 10% margin), then rescales the parameters so
    /// the conformal factor |f_u| stays ≤ 0.25.
    pub fn fitted_into(self, center: &[f64], radius: f64) -> Self {
        let mut bound: f64 = 0.0;
        let mut max_fu: f64 = 0.0;
        for i in 0..=50 {
            for j in 0..=50 {
                let (u, v) = self.param_at(i as f64 / 50.0, j as f64 / 50.0);
                let k = self.param_scale;
                let jet = self.surface.jet(k * u, k * v);
                bound = bound.max(norm(&jet.f));
                max_fu = max_fu.max(k * norm(&jet.fu));
            }
        }
        let s = 0.9 * radius / bound.max(1e-12);
        let kappa = (0.25 / (s * max_fu).max(1e-12)).min(1.0);
        let mut out = ConformalHarmonicMap {
            scale: 1.0,
            translate: vec![0.0; self.translate.len()],
            ..self
        }
        .fitted(s, center.to_vec());
        out.param_scale *= kappa;
        out.rect = [
            [out.rect[0][0] / kappa, out.rect[0][1] / kappa],
            [out.rect[1][0] / kappa, out.rect[1][1] / kappa],
        ];
        out
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn rect(&self) -> [[f64; 2]; 2] {
        self.rect
    }

    pub fn ambient_dim(&self) -> usize {
        self.translate.len()
    }

    fn param_at(&self, s: f64, t: f64) -> (f64, f64) {
        (
            self.rect[0][0] + s * (self.rect[0][1] - self.rect[0][0]),
            self.rect[1][0] + t * (self.rect[1][1] - self.rect[1][0]),
        )
    }

    pub fn jet(&self, u: f64, v: f64) -> Jet2 {
        let k = self.param_scale;
        let raw = self.surface.jet(k * u, k * v);
        Jet2 {
            f: axpy(&self.translate, self.scale, &raw.f),
            fu: scale(&raw.fu, self.scale * k),
            fv: scale(&raw.fv, self.scale * k),
            fuu: scale(&raw.fuu, self.scale * k * k),
            fvv: scale(&raw.fvv, self.scale * k * k),
        }
    }

    pub fn position(&self, u: f64, v: f64) -> Vec<f64> {
        self.jet(u, v).f
    }

    /// Max harmonicity and conformality residuals over an `nu×nv` grid.
    pub fn residuals(&self, nu: usize, nv: usize) -> (f64, f64) {
        let mut harm: f64 = 0.0;
        let mut conf: f64 = 0.0;
        for (u, v) in grid_params(self.rect, nu, nv) {
            let jet = self.jet(u, v);
            harm = harm.max(norm(&axpy(&jet.fuu, 1.0, &jet.fvv)));
            conf = conf.max((dot(&jet.fu, &jet.fu) - dot(&jet.fv, &jet.fv)).abs());
            conf = conf.max(dot(&jet.fu, &jet.fv).abs());
        }
        (harm, conf)
    }

    /// Errors with `NotConformalHarmonic` when a residual exceeds 1e-8
    /// relative to the squared conformal factor.
    pub fn validate(&self, nu: usize, nv: usize) -> Result<()> {
        for (u, v) in grid_params(self.rect, nu, nv) {
            let jet = self.jet(u, v);
            let scale2 = dot(&jet.fu, &jet.fu).max(1.0);
            let harm = norm(&axpy(&jet.fuu, 1.0, &jet.fvv));
            let conf = (dot(&jet.fu, &jet.fu) - dot(&jet.fv, &jet.fv))
                .abs()
                .max(dot(&jet.fu, &jet.fv).abs());
            let residual = harm.max(conf) / scale2;
            if residual > 1e-8 {
                return Err(Error::NotConformalHarmonic {
                    param: (u, v),
                    residual,
                });
            }
        }
        Ok(())
    }
}

/// Row-major parameter grid over a rectangle, endpoints included.
pub fn grid_params(rect: [[f64; 2]; 2], nu: usize, nv: usize) -> Vec<(f64, f64)> {
    assert!(nu >= 2 && nv >= 2);
    let mut out = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = rect[0][0] + (rect[0][1] - rect[0][0]) * i as f64 / (nu - 1) as f64;
        for j in 0..nv {
            let v = rect[1][0] + (rect[1][1] - rect[1][0]) * j as f64 / (nv - 1) as f64;
            out.push((u, v));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Pullback Laplacian, sweeps, dichotomy
// ---------------------------------------------------------------------------

/// `Δ(ρ∘f)(u,v) = Hess ρ(f_u,f_u) + Hess ρ(f_v,f_v)` (the `∇ρ·Δf` term
/// vanishes for harmonic f). Cross-checked on the fly against the
/// conformal-factor form `|f_u|²·tr_Λ Hess ρ`; a mismatch means the map is
/// not conformal at this parameter.
pub fn pullback_laplacian<F: ScalarField + ?Sized>(
    rho: &F,
    f: &ConformalHarmonicMap,
    u: f64,
    v: f64,
) -> Result<f64> {
    let jet = f.jet(u, v);
    let hess = rho.hessian(&jet.f)?;
    let value = hess.quad_form(&jet.fu) + hess.quad_form(&jet.fv);
    let frame = orthonormalize(&[jet.fu.clone(), jet.fv.clone()])?;
    let factor_form = dot(&jet.fu, &jet.fu) * trace_on_plane(&hess, &frame)?;
    let residual = (value - factor_form).abs();
    if residual > 1e-8 * (1.0 + value.abs()) {
        return Err(Error::NotConformalHarmonic {
            param: (u, v),
            residual,
        });
    }
    Ok(value)
}

/// One sweep sample, also the CSV row shape (u, v, ρ∘f, Laplacian).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub u: f64,
    pub v: f64,
    pub rho: f64,
    pub laplacian: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub surface: String,
    pub grid: (usize, usize),
    pub min_laplacian: f64,
    pub argmin: (f64, f64),
    /// Largest |chain-rule − 5-point-stencil| over the grid, stencil 1e-3.
    pub max_stencil_dev: f64,
    pub max_harmonic_residual: f64,
    pub max_conformal_residual: f64,
    pub rows: Vec<SweepRow>,
}

/// Validates the map, checks `f(Ω) ⊂ D̄` (`ρ∘f ≤ tol`), and reports the
/// minimum pullback Laplacian over the grid plus a discrete-stencil
/// cross-check of the chain rule.
pub fn subharmonicity_sweep<F: ScalarField + ?Sized>(
    rho: &F,
    f: &ConformalHarmonicMap,
    nu: usize,
    nv: usize,
) -> Result<SweepReport> {
    f.validate(nu.min(25), nv.min(25))?;
    let (harm, conf) = f.residuals(nu.min(25), nv.min(25));

    let params = grid_params(f.rect(), nu, nv);
    for &(u, v) in &params {
        let val = rho.value(&f.position(u, v))?;
        if val > crate::tol::TOL_BD {
            return Err(Error::ImageOutsideDomain {
                param: (u, v),
                value: val,
            });
        }
    }

    let mut rows = Vec::with_capacity(params.len());
    let mut min_laplacian = f64::INFINITY;
    let mut argmin = params[0];
    let mut max_stencil_dev: f64 = 0.0;
    let s = 1e-3;
    for &(u, v) in &params {
        let lap = pullback_laplacian(rho, f, u, v)?;
        let val = rho.value(&f.position(u, v))?;
        if lap < min_laplacian {
            min_laplacian = lap;
            argmin = (u, v);
        }
        let stencil = (rho.value(&f.position(u + s, v))?
            + rho.value(&f.position(u - s, v))?
            + rho.value(&f.position(u, v + s))?
            + rho.value(&f.position(u, v - s))?
            - 4.0 * val)
            / (s * s);
        max_stencil_dev = max_stencil_dev.max((stencil - lap).abs());
        rows.push(SweepRow {
            u,
            v,
            rho: val,
            laplacian: lap,
        });
    }

    Ok(SweepReport {
        surface: f.tag().to_string(),
        grid: (nu, nv),
        min_laplacian,
        argmin,
        max_stencil_dev,
        max_harmonic_residual: harm,
        max_conformal_residual: conf,
        rows,
    })
}

/// Interior/boundary dichotomy of the image of `f` under `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Dichotomy {
    /// `max ρ∘f < −tol`: the image stays in the open domain.
    Interior,
    /// `|ρ∘f| ≤ tol` everywhere: the image lies in the boundary.
    Boundary,
    /// Both signs of behaviour: reported with the touch parameter. For an
    /// exact conformal harmonic map into a 2-psh sublevel set this
    /// configuration is forbidden; it is reported, not asserted away.
    Mixed { touch: (f64, f64) },
}

pub fn dichotomy_flag<F: ScalarField + ?Sized>(
    rho: &F,
    f: &ConformalHarmonicMap,
    nu: usize,
    nv: usize,
) -> Result<Dichotomy> {
    let params = grid_params(f.rect(), nu, nv);
    let mut max_val = f64::NEG_INFINITY;
    let mut touch = params[0];
    let mut all_on_boundary = true;
    for &(u, v) in &params {
        let val = rho.value(&f.position(u, v))?;
        if val > crate::tol::TOL_BD {
            return Err(Error::ImageOutsideDomain {
                param: (u, v),
                value: val,
            });
        }
        if val > max_val {
            max_val = val;
            touch = (u, v);
        }
        if val.abs() > crate::tol::TOL_BD {
            all_on_boundary = false;
        }
    }
    if max_val < -crate::tol::TOL_BD {
        Ok(Dichotomy::Interior)
    } else if all_on_boundary {
        Ok(Dichotomy::Boundary)
    } else {
        Ok(Dichotomy::Mixed { touch })
    }
}

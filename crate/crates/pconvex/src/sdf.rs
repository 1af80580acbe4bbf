//! Signed distance to the boundary of an implicit domain.
//!
//! The nearest-point projection π solves the Lagrange system
//! `rho0(q) = 0`, `x − q ∥ ∇rho0(q)` by damped Newton iteration with a
//! projected-gradient fallback. The signed distance is
//! `δ(x) = ±‖x − π(x)‖`, negative inside `{rho0 < 0}`, and `∇δ` is the
//! outward unit normal direction `(x − π(x))/δ(x)`.
//!
//! A point is accepted as lying in the collar when the projection converges
//! and the foot point passes the second-order test `1 + δ·ν_i > 0` for every
//! principal curvature ν_i, which rules out feet beyond a focal point. The
//! collar has no fixed global width; membership is certified pointwise.

use crate::error::{Error, Result};
use crate::field::{default_step, DerivativeMode, ImplicitDomain, ScalarField};
use crate::linalg::{
    axpy, dot, eigh, norm, scale, solve_linear, sub, Frame, SymMatrix,
};
use crate::tol;

/// Result of a converged nearest-point projection.
#[derive(Debug, Clone)]
pub struct Projection {
    pub foot: Vec<f64>,
    /// Signed distance of the query point, negative inside the domain.
    pub sdist: f64,
    pub iterations: usize,
}

/// Boundary point with its second-fundamental-form eigenstructure.
///
/// Curvatures are taken with respect to the inner normal `−∇δ`, so the unit
/// ball has all ν_i = +1; they are sorted ascending, matching directions.
#[derive(Debug, Clone)]
pub struct BoundaryPoint {
    pub point: Vec<f64>,
    pub inner_normal: Vec<f64>,
    pub principal_curvatures: Vec<f64>,
    pub principal_directions: Vec<Vec<f64>>,
}

impl BoundaryPoint {
    /// Outward unit normal `∇δ`.
    pub fn outer_normal(&self) -> Vec<f64> {
        scale(&self.inner_normal, -1.0)
    }

    /// Sum of the p smallest principal curvatures.
    pub fn curvature_sum(&self, p: usize) -> f64 {
        self.principal_curvatures[..p].iter().sum()
    }
}

fn grad_checked(dom: &ImplicitDomain, q: &[f64]) -> Result<(Vec<f64>, f64)> {
    let g = dom.rho0().gradient(q)?;
    let gn = norm(&g);
    if gn < tol::G_MIN {
        return Err(Error::DegenerateGradient {
            point: q.to_vec(),
            norm: gn,
        });
    }
    Ok((g, gn))
}

/// Residual of the Lagrange system at (q, s) for query point x.
fn residual(dom: &ImplicitDomain, x: &[f64], q: &[f64], s: f64) -> Result<Vec<f64>> {
    let g = dom.rho0().gradient(q)?;
    let mut r: Vec<f64> = (0..x.len()).map(|i| q[i] + s * g[i] - x[i]).collect();
    r.push(dom.rho0().value(q)?);
    Ok(r)
}

fn newton_projection(dom: &ImplicitDomain, x: &[f64]) -> Result<(Vec<f64>, usize)> {
    let n = dom.dim();
    let (g0, gn0) = grad_checked(dom, x)?;
    let v0 = dom.rho0().value(x)?;
    // First-order foot-point guess along the gradient.
    let mut q = axpy(x, -v0 / (gn0 * gn0), &g0);
    let mut s = v0 / (gn0 * gn0);

    let scale_tol = 1e-12 * (1.0 + norm(x));
    let mut r = residual(dom, x, &q, s)?;
    for iter in 0..tol::PROJ_MAX_ITER {
        if norm(&r) <= scale_tol {
            return Ok((q, iter));
        }
        let g = dom.rho0().gradient(&q)?;
        let h = dom.rho0().hessian(&q)?;
        let m = n + 1;
        let mut jac = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                jac[i * m + j] = s * h.get(i, j) + if i == j { 1.0 } else { 0.0 };
            }
            jac[i * m + n] = g[i];
            jac[n * m + i] = g[i];
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = match solve_linear(&jac, &rhs) {
            Ok(s) => s,
            Err(_) => break,
        };

        // Backtracking on the residual norm.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let q_new = axpy(&q, lambda, &step[..n]);
            let s_new = s + lambda * step[n];
            if let Ok(r_new) = residual(dom, x, &q_new, s_new) {
                if norm(&r_new) <= (1.0 - 1e-4 * lambda) * norm(&r) {
                    q = q_new;
                    s = s_new;
                    r = r_new;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm(&r) <= scale_tol {
        return Ok((q, tol::PROJ_MAX_ITER));
    }
    gradient_fallback(dom, x, &q)
}

/// Projected gradient descent on ½‖x−q‖² over {rho0 = 0}; slower but robust
/// when Newton stalls.
fn gradient_fallback(dom: &ImplicitDomain, x: &[f64], q_init: &[f64]) -> Result<(Vec<f64>, usize)> {
    let restore = |mut q: Vec<f64>| -> Result<Vec<f64>> {
        for _ in 0..50 {
            let v = dom.rho0().value(&q)?;
            let (g, gn) = grad_checked(dom, &q)?;
            if v.abs() / gn <= 1e-13 * (1.0 + norm(x)) {
                break;
            }
            q = axpy(&q, -v / (gn * gn), &g);
        }
        Ok(q)
    };

    let mut q = restore(q_init.to_vec())?;
    let mut eta = 1.0;
    for iter in 0..500 {
        let (g, gn) = grad_checked(dom, &q)?;
        let ghat = scale(&g, 1.0 / gn);
        let d = sub(&q, x);
        // Tangential component of the objective gradient.
        let t = axpy(&d, -dot(&d, &ghat), &ghat);
        if norm(&t) <= 1e-12 * (1.0 + norm(x)) {
            return Ok((q, iter));
        }
        let obj = dot(&d, &d);
        let mut improved = false;
        for _ in 0..40 {
            let cand = restore(axpy(&q, -eta, &t))?;
            let dc = sub(&cand, x);
            if dot(&dc, &dc) < obj {
                q = cand;
                eta = (eta * 1.5).min(4.0);
                improved = true;
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            break;
        }
    }

    // Final acceptance by the projection postconditions.
    let (g, gn) = grad_checked(dom, &q)?;
    let v = dom.rho0().value(&q)?;
    let d = sub(x, &q);
    let dn = norm(&d);
    let angle_ok = if dn <= 1e-12 * (1.0 + norm(x)) {
        true
    } else {
        let ghat = scale(&g, 1.0 / gn);
        let rej = axpy(&d, -dot(&d, &ghat), &ghat);
        norm(&rej) / dn <= 1e-6
    };
    if v.abs() / gn <= tol::TOL_BD && angle_ok {
        Ok((q, 500))
    } else {
        Err(Error::ProjectionError { from: x.to_vec() })
    }
}

/// Nearest-point projection onto the boundary. Converged feet satisfy
/// `|rho0(q)| ≤ 1e-10` with `x − q` parallel to `∇rho0(q)` within 1e-6 rad.
pub fn project_to_boundary(dom: &ImplicitDomain, x: &[f64]) -> Result<Vec<f64>> {
    Ok(project(dom, x)?.foot)
}

/// Projection together with the signed distance.
pub fn project(dom: &ImplicitDomain, x: &[f64]) -> Result<Projection> {
    let (foot, iterations) = newton_projection(dom, x)?;
    let v = dom.rho0().value(&foot)?;
    let (_, gn) = grad_checked(dom, &foot)?;
    if v.abs() > 1e-10 && v.abs() / gn > tol::TOL_BD {
        return Err(Error::ProjectionError { from: x.to_vec() });
    }
    let dist = norm(&sub(x, &foot));
    let side = dom.rho0().value(x)?;
    let sdist = if side < 0.0 { -dist } else { dist };
    Ok(Projection {
        foot,
        sdist,
        iterations,
    })
}

/// Projection with the collar second-order test: the foot is rejected when
/// some `1 + δ·ν_i` is not strictly positive (a focal point lies between),
/// in which case δ is not trusted at `x`.
pub fn collar_projection(dom: &ImplicitDomain, x: &[f64]) -> Result<Projection> {
    let proj = project(dom, x)?;
    if proj.sdist.abs() > 1e-12 {
        let bp = principal_curvatures(dom, &proj.foot)?;
        for nu in &bp.principal_curvatures {
            if 1.0 + proj.sdist * nu <= 1e-9 {
                return Err(Error::ProjectionError { from: x.to_vec() });
            }
        }
    }
    Ok(proj)
}

/// `δ(x) = dist(x, D) − dist(x, Rⁿ∖D)`: negative inside, positive outside.
pub fn signed_distance(dom: &ImplicitDomain, x: &[f64]) -> Result<f64> {
    Ok(collar_projection(dom, x)?.sdist)
}

// ---------------------------------------------------------------------------
// Tangent bases
// ---------------------------------------------------------------------------

/// Deterministic orthonormal basis of the hyperplane orthogonal to the unit
/// vector `normal`, built by Gram-Schmidt over the standard basis.
pub fn tangent_basis(normal: &[f64]) -> Vec<Vec<f64>> {
    let n = normal.len();
    let mut basis: Vec<Vec<f64>> = vec![normal.to_vec()];
    for pass_threshold in [0.2, 1e-8] {
        for i in 0..n {
            if basis.len() == n {
                break;
            }
            let mut w = vec![0.0; n];
            w[i] = 1.0;
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b);
                    w = axpy(&w, -c, b);
                }
            }
            let nw = norm(&w);
            if nw > pass_threshold {
                basis.push(scale(&w, 1.0 / nw));
            }
        }
        if basis.len() == n {
            break;
        }
    }
    assert_eq!(basis.len(), n, "tangent basis construction failed");
    basis.remove(0);
    basis
}

// ---------------------------------------------------------------------------
// The δ field
// ---------------------------------------------------------------------------

/// Signed distance as a [`ScalarField`]: exact gradient from the projection,
/// Hessian by central differences of that gradient.
#[derive(Clone)]
pub struct DeltaField {
    dom: ImplicitDomain,
}

/// Wraps the domain's signed distance as a field over the collar.
pub fn delta_field(dom: &ImplicitDomain) -> DeltaField {
    DeltaField { dom: dom.clone() }
}

impl DeltaField {
    pub fn domain(&self) -> &ImplicitDomain {
        &self.dom
    }
}

impl ScalarField for DeltaField {
    fn dim(&self) -> usize {
        self.dom.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        signed_distance(&self.dom, x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let proj = collar_projection(&self.dom, x)?;
        if proj.sdist.abs() <= 1e-9 {
            // On the boundary the limit direction is the unit outward normal.
            let (g, gn) = grad_checked(&self.dom, &proj.foot)?;
            Ok(scale(&g, 1.0 / gn))
        } else {
            Ok(scale(&sub(x, &proj.foot), 1.0 / proj.sdist))
        }
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let n = self.dim();
        let h = default_step(x);
        let mut entries = vec![0.0; n * n];
        let mut xp = x.to_vec();
        for j in 0..n {
            xp[j] = x[j] + h;
            let gp = self.gradient(&xp)?;
            xp[j] = x[j] - h;
            let gm = self.gradient(&xp)?;
            xp[j] = x[j];
            for i in 0..n {
                entries[i * n + j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        SymMatrix::new(n, entries)
    }

    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::FiniteDifference { step: 1e-4 }
    }
}

// ---------------------------------------------------------------------------
// Principal curvatures and the transport check
// ---------------------------------------------------------------------------

/// Second-fundamental-form eigenstructure of the boundary at (the projection
/// of) `q`: eigenvalues of `Hess(rho0)/‖∇rho0‖` restricted to the tangent
/// space, equivalently of `Hess δ` restricted to `(∇δ)^⟂`.
pub fn principal_curvatures(dom: &ImplicitDomain, q: &[f64]) -> Result<BoundaryPoint> {
    let v = dom.rho0().value(q)?;
    let (g, gn) = grad_checked(dom, q)?;
    let point = if v.abs() / gn > tol::TOL_BD {
        project_to_boundary(dom, q)?
    } else {
        q.to_vec()
    };
    let (g, gn) = if point == q {
        (g, gn)
    } else {
        grad_checked(dom, &point)?
    };
    let outward = scale(&g, 1.0 / gn);
    let tangent = tangent_basis(&outward);
    let restricted = dom.rho0().hessian(&point)?.restrict(&tangent).scaled(1.0 / gn);
    let spec = eigh(&restricted)?;
    let directions: Vec<Vec<f64>> = (0..tangent.len())
        .map(|k| {
            let mut d = vec![0.0; dom.dim()];
            for (i, t) in tangent.iter().enumerate() {
                d = axpy(&d, spec.eigenvectors[k][i], t);
            }
            d
        })
        .collect();
    Ok(BoundaryPoint {
        point,
        inner_normal: scale(&outward, -1.0),
        principal_curvatures: spec.eigenvalues,
        principal_directions: directions,
    })
}

/// One offset of the transport check at `x = q + t·∇δ(q)`.
#[derive(Debug, Clone)]
pub struct TransportSample {
    pub t: f64,
    pub predicted: Vec<f64>,
    pub measured: Vec<f64>,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct TransportReport {
    pub base: BoundaryPoint,
    pub samples: Vec<TransportSample>,
    pub max_rel_err: f64,
}

/// Compares the measured tangential eigenvalues of `Hess δ` along the normal
/// line against the transported curvatures `ν_i/(1 + t·ν_i)`.
pub fn curvature_transport_check(
    dom: &ImplicitDomain,
    q: &[f64],
    t_values: &[f64],
) -> Result<TransportReport> {
    let base = principal_curvatures(dom, q)?;
    let outward = base.outer_normal();
    let delta = delta_field(dom);
    let mut samples = Vec::with_capacity(t_values.len());
    let mut worst: f64 = 0.0;
    for &t in t_values {
        let x = axpy(&base.point, t, &outward);
        let (predicted, measured) = if t == 0.0 {
            // Same boundary operator on both sides: consistency at t = 0.
            let m = principal_curvatures(dom, &x)?.principal_curvatures;
            (base.principal_curvatures.clone(), m)
        } else {
            let grad = delta.gradient(&x)?;
            let tangent = tangent_basis(&grad);
            let restricted = delta.hessian(&x)?.restrict(&tangent);
            let measured = eigh(&restricted)?.eigenvalues;
            // ν ↦ ν/(1+tν) is increasing in ν, so sorted order is preserved.
            let predicted: Vec<f64> = base
                .principal_curvatures
                .iter()
                .map(|nu| nu / (1.0 + t * nu))
                .collect();
            (predicted, measured)
        };
        let mut max_rel_err: f64 = 0.0;
        for (m, p) in measured.iter().zip(&predicted) {
            let err = if p.abs() > 1e-8 {
                (m - p).abs() / p.abs()
            } else {
                (m - p).abs()
            };
            max_rel_err = max_rel_err.max(err);
        }
        worst = worst.max(max_rel_err);
        samples.push(TransportSample {
            t,
            predicted,
            measured,
            max_rel_err,
        });
    }
    Ok(TransportReport {
        base,
        samples,
        max_rel_err: worst,
    })
}

/// Restriction of a field's Hessian at a boundary point to the tangent
/// 2-plane of `frame`, as a frame-checked helper for sectional quantities.
pub(crate) fn check_tangent(frame: &Frame, outward: &[f64]) -> Result<()> {
    let mut residual: f64 = 0.0;
    for v in frame.vectors() {
        residual = residual.max(dot(v, outward).abs());
    }
    if residual > 1e-8 {
        return Err(Error::FrameError { residual });
    }
    Ok(())
}

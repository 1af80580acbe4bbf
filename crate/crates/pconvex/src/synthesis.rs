//! Synthesis of a p-plurisubharmonic defining function
//! `ρ̃ = φ(h(δ)) + ε·χ·|x|²` for a certified p-convex domain.
//!
//! The construction follows the normal-line geometry of the signed distance:
//! `h` convexifies in the normal direction (`ḣ(0) = 1`, `ḧ(0) = a` with
//! `a + ν₁ > 0` on the boundary), `φ` flattens the deep interior to the
//! constant `2c/3` while staying the identity above `c/2`, and the cutoff
//! `χ` localizes the strictly p-psh perturbation `ε|x|²` away from the
//! boundary. All parameters are chosen automatically and recorded so a
//! synthesized function can be reconstructed exactly from its JSON record.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexity::{certify_boundary, refine_minimum, sample_boundary, CurvatureSample, Verdict};
use crate::error::{Error, Result};
use crate::field::{build_domain, DerivativeMode, DomainSpec, ImplicitDomain, ScalarField};
use crate::linalg::{
    axpy, dot, eigh, min_trace_p, norm, random_frame_with, scale, trace_on_plane, SymMatrix,
};
use crate::sdf::{collar_projection, delta_field, principal_curvatures, tangent_basis, DeltaField};
use crate::tol;

pub const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// The three profile functions
// ---------------------------------------------------------------------------

/// Normal convexification profile `h(t) = (e^{at} − 1)/a`.
///
/// Satisfies `h(0) = 0`, `ḣ(0) = 1`, `ḧ(0) = a` and is globally convex and
/// increasing, with the closed-form inverse needed for the deep-interior
/// clamp `h(δ) ≤ c ⟺ δ ≤ h⁻¹(c)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HProfile {
    pub a: f64,
}

/// Builds the profile; requires `a > 0`.
pub fn h_func(a: f64) -> HProfile {
    assert!(a > 0.0, "normal convexification strength must be positive");
    HProfile { a }
}

impl HProfile {
    pub fn value(&self, t: f64) -> f64 {
        ((self.a * t).exp() - 1.0) / self.a
    }
    pub fn d1(&self, t: f64) -> f64 {
        (self.a * t).exp()
    }
    pub fn d2(&self, t: f64) -> f64 {
        self.a * (self.a * t).exp()
    }
    /// `h⁻¹(y) = log(1 + a·y)/a`, defined for `1 + a·y > 0`.
    pub fn inverse(&self, y: f64) -> f64 {
        (1.0 + self.a * y).ln() / self.a
    }
}

/// Interior flattening profile: `φ(t) = 2c/3` for `t ≤ c`, `φ(t) = t` for
/// `t ≥ c/2`, joined on `(c, c/2)` by a convex C³ polynomial smoothstep.
///
/// With `τ = (t−c)/L`, `L = −c/2`, the blend has
/// `φ'' = 168·τ⁵(1−τ)²/L ≥ 0`: a one-signed bump with double zeros at both
/// ends (hence C³ joins) whose mass sits at τ = 2/3, which is exactly what
/// makes the value constraint `φ(c/2) = c/2` and the slope constraint
/// `φ'(c/2) = 1` hold simultaneously. C³ keeps discrete 5-point stencils of
/// composite functions at O(s²) accuracy across the joins.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhiProfile {
    pub c: f64,
    width: f64,
}

/// Builds the profile for `c < 0` and verifies convexity and slope bounds by
/// dense sampling, as a guard against regressions in the blend.
pub fn phi_func(c: f64) -> Result<PhiProfile> {
    if !(c < 0.0) {
        return Err(Error::ConstructionError {
            reason: "collar depth c must be negative".into(),
        });
    }
    let phi = PhiProfile { c, width: -0.5 * c };
    for i in 0..10_000 {
        let t = 2.0 * c + (1.0 - 2.0 * c) * i as f64 / 9_999.0;
        let d1 = phi.d1(t);
        let d2 = phi.d2(t);
        if d2 < -1e-10 || !(-1e-12..=1.0 + 1e-12).contains(&d1) {
            return Err(Error::ConstructionError {
                reason: format!("phi blend failed convexity sampling at t = {t}"),
            });
        }
    }
    Ok(phi)
}

impl PhiProfile {
    fn tau(&self, t: f64) -> f64 {
        (t - self.c) / self.width
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= self.c {
            2.0 * self.c / 3.0
        } else if t >= 0.5 * self.c {
            t
        } else {
            let tau = self.tau(t);
            let tau7 = tau.powi(7);
            2.0 * self.c / 3.0
                + self.width * (4.0 * tau7 - 6.0 * tau7 * tau + 7.0 / 3.0 * tau7 * tau * tau)
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        if t <= self.c {
            0.0
        } else if t >= 0.5 * self.c {
            1.0
        } else {
            let tau = self.tau(t);
            let tau6 = tau.powi(6);
            28.0 * tau6 - 48.0 * tau6 * tau + 21.0 * tau6 * tau * tau
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        if t <= self.c || t >= 0.5 * self.c {
            0.0
        } else {
            let tau = self.tau(t);
            168.0 * tau.powi(5) * (1.0 - tau) * (1.0 - tau) / self.width
        }
    }
}

/// C³ polynomial smoothstep on [0,1] (zero first, second and third
/// derivatives at both ends).
fn smoothstep(u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if u >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let u2 = u * u;
        let w = 1.0 - u;
        let s = u2 * u2 * (35.0 - 84.0 * u + 70.0 * u2 - 20.0 * u2 * u);
        let d1 = 140.0 * u2 * u * w * w * w;
        let d2 = 420.0 * u2 * w * w * (1.0 - 2.0 * u);
        (s, d1, d2)
    }
}

/// Cutoff in the signed distance: `χ = 1` for `δ ≤ c/3`, `χ = 0` for
/// `δ ≥ c/6`, with a C² smoothstep transition inside `(c/3, c/6)` — strictly
/// inside the zone `(c/2, 0)` where the base function is strongly p-psh, and
/// disjoint from the φ transition `(c, c/2)`.
pub struct ChiField {
    delta: DeltaField,
    c: f64,
}

/// χ as a standalone field over `D ∪ collar`.
pub fn chi_func(dom: &ImplicitDomain, c: f64) -> ChiField {
    assert!(c < 0.0);
    ChiField {
        delta: delta_field(dom),
        c,
    }
}

impl ChiField {
    /// (χ, dχ/dδ, d²χ/dδ²) at signed distance δ.
    pub fn profile(&self, delta: f64) -> (f64, f64, f64) {
        // u = (c/6 − δ)·k rises 0→1 as δ falls from c/6 to c/3.
        let k = -6.0 / self.c;
        let u = (self.c / 6.0 - delta) * k;
        let (s, s1, s2) = smoothstep(u);
        (s, -s1 * k, s2 * k * k)
    }
}

impl ScalarField for ChiField {
    fn dim(&self) -> usize {
        self.delta.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        match collar_projection(self.delta.domain(), x) {
            Ok(proj) => Ok(self.profile(proj.sdist).0),
            Err(_) => {
                if self.delta.domain().rho0().value(x)? < 0.0 {
                    Ok(1.0)
                } else {
                    Ok(0.0)
                }
            }
        }
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match collar_projection(self.delta.domain(), x) {
            Ok(proj) => {
                let (_, d1, _) = self.profile(proj.sdist);
                if d1 == 0.0 {
                    return Ok(vec![0.0; self.dim()]);
                }
                Ok(scale(&self.delta.gradient(x)?, d1))
            }
            Err(_) => Ok(vec![0.0; self.dim()]),
        }
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        match collar_projection(self.delta.domain(), x) {
            Ok(proj) => {
                let (_, d1, d2) = self.profile(proj.sdist);
                if d1 == 0.0 && d2 == 0.0 {
                    return Ok(SymMatrix::zeros(self.dim()));
                }
                let g = self.delta.gradient(x)?;
                let h = self.delta.hessian(x)?;
                Ok(h.scaled(d1).add_scaled(d2, &SymMatrix::outer(&g, 1.0)))
            }
            Err(_) => Ok(SymMatrix::zeros(self.dim())),
        }
    }
}

// ---------------------------------------------------------------------------
// Composite Hessian along the normal line
// ---------------------------------------------------------------------------

/// `Hess(h∘δ) = ḣ(δ)·Hess δ + ḧ(δ)·∇δ∇δᵀ` evaluated from the δ field.
pub fn composite_hessian(h: &HProfile, delta: &DeltaField, x: &[f64]) -> Result<SymMatrix> {
    let d = delta.value(x)?;
    let g = delta.gradient(x)?;
    let hd = delta.hessian(x)?;
    Ok(hd
        .scaled(h.d1(d))
        .add_scaled(h.d2(d), &SymMatrix::outer(&g, 1.0)))
}

// ---------------------------------------------------------------------------
// Parameters, grids, certificates
// ---------------------------------------------------------------------------

/// Stratified verification grid sizes and seed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_interior: usize,
    pub n_collar: usize,
    pub n_boundary: usize,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_interior: 2000,
            n_collar: 2000,
            n_boundary: 500,
            seed: 0,
        }
    }
}

/// All parameters chosen during synthesis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub p: usize,
    /// Normal convexification strength, `a + min ν₁ > 0` with margin.
    pub a: f64,
    /// Collar depth, `c < 0`; transitions live in (c, c/2) and (c/3, c/6).
    pub c: f64,
    pub eps: f64,
    pub margin_a: f64,
    /// χ transition zone `(c/3, c/6)` in δ-units.
    pub chi_transition: [f64; 2],
    /// Largest probed depth at which the collar test held everywhere.
    pub collar_probe_depth: f64,
    pub grid: GridSpec,
    /// Set when no ε in the sweep met the strictness requirement and the
    /// perturbation was dropped (ε = 0).
    pub eps_warning: bool,
}

/// Stratified sample points over D̄.
#[derive(Debug, Clone)]
pub struct Grid {
    pub interior: Vec<Vec<f64>>,
    pub collar: Vec<Vec<f64>>,
    pub boundary: Vec<Vec<f64>>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.interior.len() + self.collar.len() + self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn strata(&self) -> [(&'static str, &Vec<Vec<f64>>); 3] {
        [
            ("interior", &self.interior),
            ("collar", &self.collar),
            ("boundary", &self.boundary),
        ]
    }
}

/// Builds the stratified grid: interior points by rejection from the bbox,
/// collar points marched inward from boundary samples to depths in (c, 0),
/// and boundary points from the sign-change sampler.
pub fn build_grid(dom: &ImplicitDomain, spec: &GridSpec, c: f64) -> Result<Grid> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(101));
    let mut interior = Vec::with_capacity(spec.n_interior);
    let budget = 5000 * spec.n_interior.max(8);
    for _ in 0..budget {
        if interior.len() == spec.n_interior {
            break;
        }
        let x: Vec<f64> = dom
            .bbox()
            .iter()
            .map(|[lo, hi]| rng.gen_range(*lo..*hi))
            .collect();
        if matches!(dom.rho0().value(&x), Ok(v) if v < 0.0) {
            interior.push(x);
        }
    }
    if interior.len() < spec.n_interior {
        return Err(Error::SamplingError {
            requested: spec.n_interior,
            found: interior.len(),
        });
    }
    let collar = if spec.n_collar > 0 {
        crate::convexity::sample_collar(dom, spec.n_collar, c, spec.seed.wrapping_add(202))?
    } else {
        Vec::new()
    };
    let boundary = if spec.n_boundary > 0 {
        sample_boundary(dom, spec.n_boundary, spec.seed.wrapping_add(303))?
    } else {
        Vec::new()
    };
    Ok(Grid {
        interior,
        collar,
        boundary,
    })
}

/// Verification result for a synthesized defining function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub p: usize,
    /// Minimum of `min_trace_p(Hess ρ̃)` over all D̄ samples.
    pub min_overall: f64,
    pub argmin_overall: Vec<f64>,
    pub argmin_stratum: String,
    /// Minimum over interior (δ < 0) samples only.
    pub min_interior: f64,
    pub argmin_interior: Vec<f64>,
    /// Largest value of ρ̃ over interior samples (must stay negative for a
    /// defining function).
    pub interior_max_rho: f64,
    pub boundary_max_abs_rho: f64,
    pub boundary_min_grad_norm: f64,
    /// Random p-frames at the argmin stay above the eigenvalue formula and
    /// the eigenframe attains it.
    pub frame_spot_check_ok: bool,
    /// Strictness on D asserted: no p-flat boundary points and interior
    /// minimum strictly positive.
    pub strong: bool,
}

// ---------------------------------------------------------------------------
// The synthesized field
// ---------------------------------------------------------------------------

/// `ρ̃ = φ(h(δ)) + ε·χ·|x|²` with chain-rule gradient and Hessian.
///
/// Where the collar projection fails inside the domain — or the clamp
/// `h(δ) ≤ c` is active — the function is the constant `2c/3` plus the
/// ε-term, so deep-interior evaluation never depends on a projection.
#[derive(Clone)]
pub struct RhoTilde {
    delta: DeltaField,
    h: HProfile,
    phi: PhiProfile,
    c: f64,
    h_inv_c: f64,
    eps: f64,
}

enum Branch {
    /// Deep interior: ρ̃ = 2c/3 + ε|x|².
    Deep,
    /// Collar/exterior: full composite at signed distance δ.
    Full(f64),
}

impl RhoTilde {
    fn new(dom: &ImplicitDomain, h: HProfile, phi: PhiProfile, c: f64, eps: f64) -> Self {
        RhoTilde {
            delta: delta_field(dom),
            h,
            phi,
            c,
            h_inv_c: h.inverse(c),
            eps,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn domain(&self) -> &ImplicitDomain {
        self.delta.domain()
    }

    fn chi_profile(&self, delta: f64) -> (f64, f64, f64) {
        let k = -6.0 / self.c;
        let u = (self.c / 6.0 - delta) * k;
        let (s, s1, s2) = smoothstep(u);
        (s, -s1 * k, s2 * k * k)
    }

    fn branch(&self, x: &[f64]) -> Result<Branch> {
        match collar_projection(self.delta.domain(), x) {
            Ok(proj) => {
                if proj.sdist <= self.h_inv_c {
                    Ok(Branch::Deep)
                } else {
                    Ok(Branch::Full(proj.sdist))
                }
            }
            Err(e) => {
                if self.delta.domain().rho0().value(x)? < 0.0 {
                    Ok(Branch::Deep)
                } else {
                    Err(e)
                }
            }
        }
    }
}

impl ScalarField for RhoTilde {
    fn dim(&self) -> usize {
        self.delta.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let x2 = dot(x, x);
        match self.branch(x)? {
            Branch::Deep => Ok(2.0 * self.c / 3.0 + self.eps * x2),
            Branch::Full(d) => {
                let (chi, _, _) = self.chi_profile(d);
                Ok(self.phi.value(self.h.value(d)) + self.eps * chi * x2)
            }
        }
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.branch(x)? {
            Branch::Deep => Ok(scale(x, 2.0 * self.eps)),
            Branch::Full(d) => {
                let (chi, chi1, _) = self.chi_profile(d);
                let hv = self.h.value(d);
                let outer_slope = self.phi.d1(hv) * self.h.d1(d);
                let mut g = scale(x, 2.0 * self.eps * chi);
                if outer_slope != 0.0 || (self.eps != 0.0 && chi1 != 0.0) {
                    let gd = self.delta.gradient(x)?;
                    let x2 = dot(x, x);
                    g = axpy(&g, outer_slope + self.eps * chi1 * x2, &gd);
                }
                Ok(g)
            }
        }
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let n = self.dim();
        match self.branch(x)? {
            Branch::Deep => Ok(SymMatrix::identity(n).scaled(2.0 * self.eps)),
            Branch::Full(d) => {
                let (base, pert) = self.component_hessians(x, d)?;
                Ok(base.add_scaled(self.eps, &pert))
            }
        }
    }

    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }
}

impl RhoTilde {
    /// Splits `Hess ρ̃ = H_base + ε·H_pert` at a collar point with signed
    /// distance `d`, so that ε sweeps can reuse the expensive δ parts.
    fn component_hessians(&self, x: &[f64], d: f64) -> Result<(SymMatrix, SymMatrix)> {
        let n = self.dim();
        let (chi, chi1, chi2) = self.chi_profile(d);
        let hv = self.h.value(d);
        let h1 = self.h.d1(d);
        let h2 = self.h.d2(d);
        let p1 = self.phi.d1(hv);
        let p2 = self.phi.d2(hv);

        let base_normal = p2 * h1 * h1 + p1 * h2; // coefficient of ∇δ∇δᵀ
        let base_tangent = p1 * h1; // coefficient of Hess δ
        let need_delta = base_normal != 0.0
            || base_tangent != 0.0
            || chi1 != 0.0
            || chi2 != 0.0;

        if !need_delta {
            // Constant zone: only the χ·2I term remains.
            let pert = SymMatrix::identity(n).scaled(2.0 * chi);
            return Ok((SymMatrix::zeros(n), pert));
        }

        let gd = self.delta.gradient(x)?;
        let hd = self.delta.hessian(x)?;
        let base = hd
            .scaled(base_tangent)
            .add_scaled(base_normal, &SymMatrix::outer(&gd, 1.0));

        let x2 = dot(x, x);
        // Hess(χ|x|²) = |x|²·Hess χ + ∇χ(2x)ᵀ + 2x(∇χ)ᵀ + 2χI.
        let mut pert = SymMatrix::identity(n).scaled(2.0 * chi);
        if chi1 != 0.0 || chi2 != 0.0 {
            let hess_chi = hd
                .scaled(chi1)
                .add_scaled(chi2, &SymMatrix::outer(&gd, 1.0));
            pert = pert.add_scaled(x2, &hess_chi);
            for i in 0..n {
                for j in i..n {
                    let cross = 2.0 * chi1 * (gd[i] * x[j] + x[i] * gd[j]);
                    pert.set_sym(i, j, pert.get(i, j) + cross);
                }
            }
        }
        Ok((base, pert))
    }
}

// ---------------------------------------------------------------------------
// Parameter selection
// ---------------------------------------------------------------------------

/// `a = max(0, −min ν₁) + margin`, with the minimum of ν₁ over the boundary
/// polished by the same pattern search used in certification.
pub fn choose_a(
    dom: &ImplicitDomain,
    boundary_samples: &[Vec<f64>],
    margin_a: f64,
) -> Result<f64> {
    assert!(!boundary_samples.is_empty());
    let mut worst: Option<CurvatureSample> = None;
    for q in boundary_samples {
        let bp = principal_curvatures(dom, q)?;
        let sample = CurvatureSample {
            s_p: bp.principal_curvatures[0],
            point: bp.point,
            curvatures: bp.principal_curvatures,
        };
        if worst.as_ref().is_none_or(|w| sample.s_p < w.s_p) {
            worst = Some(sample);
        }
    }
    let worst = refine_minimum(dom, &worst.expect("nonempty samples"), 1)?;
    Ok((-worst.s_p).max(0.0) + margin_a)
}

/// Inner-normal probe result: foot point, outward normal, collar reach.
struct ProbeReach {
    foot: Vec<f64>,
    outward: Vec<f64>,
    reach: f64,
}

fn probe_reaches(dom: &ImplicitDomain, probes: usize, seed: u64) -> Result<Vec<ProbeReach>> {
    let boundary = sample_boundary(dom, probes, seed)?;
    let step = dom.half_diagonal() / 100.0;
    let mut out = Vec::with_capacity(boundary.len());
    for q in &boundary {
        let bp = principal_curvatures(dom, q)?;
        let outward = bp.outer_normal();
        let mut reach = 0.0;
        for k in 1..=100 {
            let d = step * k as f64;
            let x = axpy(&bp.point, -d, &outward);
            match collar_projection(dom, &x) {
                // The probe must come home to (approximately) its own foot.
                Ok(proj) if (proj.sdist + d).abs() <= 1e-6 * (1.0 + d) => reach = d,
                _ => break,
            }
        }
        out.push(ProbeReach {
            foot: bp.point,
            outward,
            reach,
        });
    }
    Ok(out)
}

/// Probes inner normals from boundary samples and returns the largest depth
/// at which every probe still passes the collar test.
pub fn collar_probe_depth(dom: &ImplicitDomain, probes: usize, seed: u64) -> Result<f64> {
    let depth = probe_reaches(dom, probes, seed)?
        .iter()
        .map(|p| p.reach)
        .fold(f64::INFINITY, f64::min);
    if depth <= 0.0 || !depth.is_finite() {
        return Err(Error::ConstructionError {
            reason: "no usable collar depth found".into(),
        });
    }
    Ok(depth)
}

/// A point deep inside the domain together with its boundary clearance: the
/// probe with the largest collar reach, marched to its full depth. The open
/// ball of that radius around the point lies in D.
pub fn deep_point(dom: &ImplicitDomain, probes: usize, seed: u64) -> Result<(Vec<f64>, f64)> {
    let reaches = probe_reaches(dom, probes, seed)?;
    let best = reaches
        .iter()
        .max_by(|a, b| a.reach.partial_cmp(&b.reach).expect("finite reach"))
        .ok_or_else(|| Error::ConstructionError {
            reason: "no probes".into(),
        })?;
    if best.reach <= 0.0 {
        return Err(Error::ConstructionError {
            reason: "no usable collar depth found".into(),
        });
    }
    Ok((axpy(&best.foot, -best.reach, &best.outward), best.reach))
}

/// Per-point data for the ε sweep: stratum, value split
/// `ρ̃ = v_base + ε·v_pert`, and Hessian split `H_base + ε·H_pert`.
pub struct EpsComponent {
    pub stratum: GridStratum,
    pub value_base: f64,
    pub value_pert: f64,
    pub hess_base: SymMatrix,
    pub hess_pert: SymMatrix,
}

/// Largest ε in `{2^{−k} : k = 0..40}` keeping the interior strictly p-psh
/// (and strictly negative, so ρ̃ stays a defining function) with the
/// boundary/collar within certification slack; 0 with a warning when none
/// works.
pub fn choose_epsilon(p: usize, components: &[EpsComponent]) -> (f64, bool) {
    for k in 0..=40 {
        let eps = (2.0f64).powi(-k);
        let mut ok = true;
        for comp in components {
            let m = match min_trace_p(&comp.hess_base.add_scaled(eps, &comp.hess_pert), p) {
                Ok(m) => m,
                Err(_) => {
                    ok = false;
                    break;
                }
            };
            let value = comp.value_base + eps * comp.value_pert;
            let pass = match comp.stratum {
                GridStratum::Interior | GridStratum::Collar if value >= 0.0 => false,
                GridStratum::Interior => m > 0.0,
                _ => m >= -tol::TOL_CERT,
            };
            if !pass {
                ok = false;
                break;
            }
        }
        if ok {
            return (eps, false);
        }
    }
    (0.0, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridStratum {
    Interior,
    Collar,
    Boundary,
}

// ---------------------------------------------------------------------------
// Synthesis pipeline
// ---------------------------------------------------------------------------

/// A synthesized defining function with its parameters and certificate.
pub struct DefiningFunction {
    field: RhoTilde,
    params: SynthesisParams,
    certificate: Certificate,
}

/// Serializable record enabling exact reconstruction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefiningFunctionRecord {
    pub schema_version: u32,
    pub domain: DomainSpec,
    pub params: SynthesisParams,
    pub certificate: Certificate,
}

impl DefiningFunction {
    pub fn field(&self) -> &RhoTilde {
        &self.field
    }

    pub fn params(&self) -> &SynthesisParams {
        &self.params
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn record(&self) -> DefiningFunctionRecord {
        DefiningFunctionRecord {
            schema_version: SCHEMA_VERSION,
            domain: self.field.domain().spec().clone(),
            params: self.params.clone(),
            certificate: self.certificate.clone(),
        }
    }

    /// Rebuilds the exact function from a record (no re-search); the stored
    /// certificate is kept verbatim and can be re-checked with [`verify`].
    pub fn from_record(record: &DefiningFunctionRecord) -> Result<DefiningFunction> {
        let dom = build_domain(&record.domain)?;
        let h = h_func(record.params.a);
        let phi = phi_func(record.params.c)?;
        let field = RhoTilde::new(&dom, h, phi, record.params.c, record.params.eps);
        Ok(DefiningFunction {
            field,
            params: record.params.clone(),
            certificate: record.certificate.clone(),
        })
    }
}

/// Options for [`synthesize`].
#[derive(Debug, Clone)]
pub struct SynthesisOptions {
    pub margin_a: f64,
    pub grid: GridSpec,
    pub collar_probes: usize,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            margin_a: 0.1,
            grid: GridSpec::default(),
            collar_probes: 50,
        }
    }
}

/// Runs the full pipeline: certify the boundary, choose `a`, probe the
/// collar for `c`, sweep ε, and verify the result on a stratified grid.
pub fn synthesize(
    dom: &ImplicitDomain,
    p: usize,
    options: Option<SynthesisOptions>,
) -> Result<DefiningFunction> {
    let opts = options.unwrap_or_default();
    let seed = opts.grid.seed;

    let boundary = sample_boundary(dom, opts.grid.n_boundary.max(100), seed)?;
    let report = certify_boundary(dom, p, &boundary)?;
    if report.verdict == Verdict::NotPConvex {
        let witness = report.samples[report.argmin_index].point.clone();
        return Err(Error::NotPConvex {
            p,
            min_sp: report.min_sp,
            witness,
        });
    }
    let no_flat = report.p_flat_points.is_empty();

    let a = choose_a(dom, &boundary, opts.margin_a)?;
    let h = h_func(a);

    let probe_depth = collar_probe_depth(dom, opts.collar_probes, seed.wrapping_add(1))?;
    let mut c = -0.25 * probe_depth;
    // Keep the deep-interior clamp h⁻¹(c) well defined.
    while 1.0 + a * c <= 0.5 {
        c *= 0.5;
    }
    let phi = phi_func(c)?;

    let grid = build_grid(dom, &opts.grid, c)?;

    // ε sweep over precomputed Hessian components. The per-point work is
    // independent; evaluation order never affects the collected values.
    let probe_field = RhoTilde::new(dom, h, phi, c, 0.0);
    let mut components = Vec::with_capacity(grid.len());
    for (name, points) in grid.strata() {
        let stratum = match name {
            "interior" => GridStratum::Interior,
            "collar" => GridStratum::Collar,
            _ => GridStratum::Boundary,
        };
        let computed: Vec<Result<EpsComponent>> = points
            .par_iter()
            .map(|x| match probe_field.branch(x)? {
                Branch::Deep => Ok(EpsComponent {
                    stratum,
                    value_base: 2.0 * c / 3.0,
                    value_pert: dot(x, x),
                    hess_base: SymMatrix::zeros(dom.dim()),
                    hess_pert: SymMatrix::identity(dom.dim()).scaled(2.0),
                }),
                Branch::Full(d) => {
                    let (chi, _, _) = probe_field.chi_profile(d);
                    let (hess_base, hess_pert) = probe_field.component_hessians(x, d)?;
                    Ok(EpsComponent {
                        stratum,
                        value_base: probe_field.phi.value(probe_field.h.value(d)),
                        value_pert: chi * dot(x, x),
                        hess_base,
                        hess_pert,
                    })
                }
            })
            .collect();
        for comp in computed {
            components.push(comp?);
        }
    }
    let (eps, eps_warning) = choose_epsilon(p, &components);

    let field = RhoTilde::new(dom, h, phi, c, eps);
    let params = SynthesisParams {
        p,
        a,
        c,
        eps,
        margin_a: opts.margin_a,
        chi_transition: [c / 3.0, c / 6.0],
        collar_probe_depth: probe_depth,
        grid: opts.grid,
        eps_warning,
    };
    let certificate = verify_with_flat_info(&field, p, &grid, no_flat)?;
    Ok(DefiningFunction {
        field,
        params,
        certificate,
    })
}

/// Evaluates the certificate of `field` on a grid: minima of
/// `min_trace_p(Hess ρ̃)` over all of D̄ and over the interior, boundary
/// behaviour, and a random-frame spot check at the argmin.
pub fn verify(df: &DefiningFunction, p: usize, grid: &Grid) -> Result<Certificate> {
    verify_with_flat_info(&df.field, p, grid, df.certificate.strong)
}

fn verify_with_flat_info(
    field: &RhoTilde,
    p: usize,
    grid: &Grid,
    no_flat: bool,
) -> Result<Certificate> {
    let mut min_overall = f64::INFINITY;
    let mut argmin_overall: Vec<f64> = Vec::new();
    let mut argmin_stratum = "";
    let mut min_interior = f64::INFINITY;
    let mut argmin_interior: Vec<f64> = Vec::new();
    let mut argmin_hessian: Option<SymMatrix> = None;

    let mut interior_max_rho = f64::NEG_INFINITY;
    for (name, points) in grid.strata() {
        // Parallel evaluation, deterministic sequential reduction.
        let evaluated: Vec<Result<(SymMatrix, f64, f64)>> = points
            .par_iter()
            .map(|x| {
                let hess = field.hessian(x)?;
                let m = min_trace_p(&hess, p)?;
                Ok((hess, m, field.value(x)?))
            })
            .collect();
        for (x, item) in points.iter().zip(evaluated) {
            let (hess, m, value) = item?;
            if m < min_overall {
                min_overall = m;
                argmin_overall = x.clone();
                argmin_stratum = name;
                argmin_hessian = Some(hess);
            }
            if name != "boundary" {
                if m < min_interior {
                    min_interior = m;
                    argmin_interior = x.clone();
                }
                interior_max_rho = interior_max_rho.max(value);
            }
        }
    }

    let mut boundary_max_abs_rho: f64 = 0.0;
    let mut boundary_min_grad_norm = f64::INFINITY;
    for q in &grid.boundary {
        boundary_max_abs_rho = boundary_max_abs_rho.max(field.value(q)?.abs());
        boundary_min_grad_norm = boundary_min_grad_norm.min(norm(&field.gradient(q)?));
    }

    let frame_spot_check_ok = match argmin_hessian {
        Some(h) if p < h.dim() => {
            let m = min_trace_p(&h, p)?;
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            let mut ok = true;
            for _ in 0..1000 {
                let frame = random_frame_with(&mut rng, h.dim(), p)?;
                if trace_on_plane(&h, &frame)? < m - 1e-8 {
                    ok = false;
                    break;
                }
            }
            let eigframe = eigh(&h)?.bottom_frame(p)?;
            ok && (trace_on_plane(&h, &eigframe)? - m).abs() <= 1e-8
        }
        _ => true,
    };

    Ok(Certificate {
        p,
        min_overall,
        argmin_overall,
        argmin_stratum: argmin_stratum.to_string(),
        min_interior,
        argmin_interior,
        interior_max_rho,
        boundary_max_abs_rho,
        boundary_min_grad_norm,
        frame_spot_check_ok,
        strong: no_flat && min_interior > 0.0,
    })
}

// ---------------------------------------------------------------------------
// Level-set family (Corollary of the transport formula)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSetEntry {
    pub t: f64,
    pub min_sp: f64,
    pub argmin_point: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub p: usize,
    pub entries: Vec<LevelSetEntry>,
}

/// Certifies the inner level sets `bD_t = {δ = t}` for each `t ≤ 0` by
/// marching the boundary samples inward along `−∇δ` and measuring the
/// tangential eigenvalues of `Hess δ`; at `t = 0` this reduces to the plain
/// boundary certification.
pub fn level_set_family_check(
    dom: &ImplicitDomain,
    p: usize,
    t_values: &[f64],
    boundary_samples: &[Vec<f64>],
) -> Result<LevelSetReport> {
    let n = dom.dim();
    if p < 1 || p > n - 1 {
        return Err(Error::InvalidP { p, n });
    }
    let delta = delta_field(dom);
    let mut entries = Vec::with_capacity(t_values.len());
    for &t in t_values {
        assert!(t <= 0.0, "level offsets must be ≤ 0");
        let mut min_sp = f64::INFINITY;
        let mut argmin_point = Vec::new();
        for q in boundary_samples {
            let bp = principal_curvatures(dom, q)?;
            let (x, s_p) = if t == 0.0 {
                let s: f64 = bp.principal_curvatures[..p].iter().sum();
                (bp.point.clone(), s)
            } else {
                let x = axpy(&bp.point, t, &bp.outer_normal());
                let grad = delta.gradient(&x)?;
                let tangent = tangent_basis(&grad);
                let restricted = delta.hessian(&x)?.restrict(&tangent);
                let eig = eigh(&restricted)?.eigenvalues;
                let s: f64 = eig[..p].iter().sum();
                (x, s)
            };
            if s_p < min_sp {
                min_sp = s_p;
                argmin_point = x;
            }
        }
        entries.push(LevelSetEntry {
            t,
            min_sp,
            argmin_point,
        });
    }
    Ok(LevelSetReport { p, entries })
}

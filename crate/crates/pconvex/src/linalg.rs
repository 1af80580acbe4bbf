//! Dense symmetric eigenanalysis and restricted traces over p-planes.
//!
//! The Hessians in this crate are small (n ≲ 50) dense symmetric matrices,
//! so the eigensolver is a self-contained cyclic Jacobi iteration: it keeps
//! symmetry exactly, is deterministic for a fixed input, and avoids an
//! external linear-algebra dependency. The minimum of the restricted trace
//! `tr_Λ Q` over all p-planes Λ equals the sum of the p smallest eigenvalues
//! of Q, with equality exactly on planes spanned by eigenvectors; the
//! randomized Grassmannian sampler exists to cross-check that identity.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tol;

// ---------------------------------------------------------------------------
// Small vector helpers (ambient dimensions are tiny; plain slices suffice).
// ---------------------------------------------------------------------------

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// a + s·b
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(scale(a, 1.0 / n))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// SymMatrix
// ---------------------------------------------------------------------------

/// Real symmetric n×n matrix, symmetrized on construction so that
/// `entries[i][j] == entries[j][i]` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    /// Row-major full storage.
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds from row-major entries, averaging the two triangles.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        assert!(n >= 1, "matrix dimension must be positive");
        assert_eq!(entries.len(), n * n, "entry count must be n*n");
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix);
        }
        let mut data = entries;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        Ok(SymMatrix { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = diag[i];
        }
        m
    }

    /// Symmetric rank-one outer product `s·v vᵀ`.
    pub fn outer(v: &[f64], s: f64) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = s * v[i] * v[j];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets the (i,j) and (j,i) entries together.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| dot(&self.data[i * self.n..(i + 1) * self.n], x))
            .collect()
    }

    /// Quadratic form `xᵀ Q x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(&self.mul_vec(x), x)
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Entrywise `self + s·other`.
    pub fn add_scaled(&self, s: f64, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n);
        SymMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Restriction `BᵀQB` to the span of the given orthonormal columns.
    pub fn restrict(&self, basis: &[Vec<f64>]) -> SymMatrix {
        let p = basis.len();
        let mut out = SymMatrix::zeros(p);
        for i in 0..p {
            let qi = self.mul_vec(&basis[i]);
            for j in i..p {
                out.set_sym(i, j, dot(&qi, &basis[j]));
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Spectrum and the Jacobi eigensolver
// ---------------------------------------------------------------------------

/// Full spectral decomposition with eigenvalues sorted ascending and
/// orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl Spectrum {
    /// Frame spanned by the eigenvectors for the p smallest eigenvalues.
    pub fn bottom_frame(&self, p: usize) -> Result<Frame> {
        let n = self.eigenvalues.len();
        if p < 1 || p > n {
            return Err(Error::InvalidP { p, n });
        }
        Frame::new(self.eigenvectors[..p].to_vec())
    }
}

/// Spectral decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps stop once the off-diagonal Frobenius norm drops below
/// `1e-13·‖Q‖_F` (at most 100 sweeps). Ties between eigenvalues are broken
/// by a stable sort and each eigenvector is normalized so its
/// largest-magnitude component is positive, making the output deterministic.
pub fn eigh(q: &SymMatrix) -> Result<Spectrum> {
    if q.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix);
    }
    let n = q.n;
    let mut a = q.data.clone();
    // v holds the accumulated rotations, row-major; column k is eigenvector k.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let threshold = tol::JACOBI_OFFDIAG * q.frobenius_norm().max(f64::MIN_POSITIVE);

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        s.sqrt()
    };

    for _sweep in 0..tol::JACOBI_MAX_SWEEPS {
        if off(&a) <= threshold {
            break;
        }
        for p in 0..n {
            for q_idx in (p + 1)..n {
                let apq = a[p * n + q_idx];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q_idx * n + q_idx];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q_idx];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q_idx] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q_idx * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q_idx * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q_idx];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q_idx] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[i * n + i]
            .partial_cmp(&a[j * n + j])
            .expect("finite eigenvalues")
    });

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Vec::with_capacity(n);
    for &col in &order {
        eigenvalues.push(a[col * n + col]);
        let mut vec_k: Vec<f64> = (0..n).map(|row| v[row * n + col]).collect();
        // Sign convention: largest-magnitude component positive.
        let lead = vec_k
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| x.abs().partial_cmp(&y.abs()).expect("finite"))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if vec_k[lead] < 0.0 {
            for x in &mut vec_k {
                *x = -*x;
            }
        }
        eigenvectors.push(vec_k);
    }

    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

// ---------------------------------------------------------------------------
// Frames (orthonormal bases of p-planes)
// ---------------------------------------------------------------------------

/// Orthonormal basis of a p-plane Λ ⊂ Rⁿ, 1 ≤ p ≤ n.
#[derive(Debug, Clone)]
pub struct Frame {
    n: usize,
    vectors: Vec<Vec<f64>>,
}

impl Frame {
    /// Validates pairwise orthonormality within `tol::TOL_FRAME`.
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        assert!(!vectors.is_empty(), "frame needs at least one vector");
        let n = vectors[0].len();
        let mut residual: f64 = 0.0;
        for (i, vi) in vectors.iter().enumerate() {
            assert_eq!(vi.len(), n, "frame vectors must share a dimension");
            residual = residual.max((norm(vi) - 1.0).abs());
            for vj in vectors.iter().skip(i + 1) {
                residual = residual.max(dot(vi, vj).abs());
            }
        }
        if residual > tol::TOL_FRAME {
            return Err(Error::InvalidFrame { residual });
        }
        Ok(Frame { n, vectors })
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn plane_dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Orthogonal projector Σ v vᵀ onto the plane.
    pub fn projector(&self) -> SymMatrix {
        let mut p = SymMatrix::zeros(self.n);
        for v in &self.vectors {
            p = p.add_scaled(1.0, &SymMatrix::outer(v, 1.0));
        }
        p
    }
}

/// Modified Gram-Schmidt with a second orthogonalization pass.
///
/// Fails with `RankError` when a pivot falls below `tol::RANK_PIVOT`
/// (numerical rank deficiency). The result spans the same subspace.
pub fn orthonormalize(vectors: &[Vec<f64>]) -> Result<Frame> {
    assert!(!vectors.is_empty(), "need at least one vector");
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w = axpy(&w, -c, b);
            }
        }
        let pivot = norm(&w);
        if pivot < tol::RANK_PIVOT {
            return Err(Error::RankError { pivot });
        }
        basis.push(scale(&w, 1.0 / pivot));
    }
    Frame::new(basis)
}

/// Uniformly distributed random p-plane in Rⁿ (1 ≤ p < n), as an
/// orthonormalized frame of standard-normal draws. Redraws internally on a
/// degenerate sample; reproducible for a fixed seed.
pub fn random_frame(n: usize, p: usize, seed: u64) -> Result<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_frame_with(&mut rng, n, p)
}

/// Same as [`random_frame`] but drawing from a caller-managed RNG, for
/// Monte Carlo sweeps that need many frames from one stream.
pub fn random_frame_with<R: Rng>(rng: &mut R, n: usize, p: usize) -> Result<Frame> {
    if p < 1 || p >= n {
        return Err(Error::InvalidP { p, n });
    }
    loop {
        let draws: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        match orthonormalize(&draws) {
            Ok(frame) => return Ok(frame),
            Err(Error::RankError { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

// ---------------------------------------------------------------------------
// Restricted traces
// ---------------------------------------------------------------------------

/// Trace of the quadratic form Q restricted to the plane of Λ:
/// `Σ_i v_iᵀ Q v_i`. Invariant under orthonormal re-basing of the plane.
pub fn trace_on_plane(q: &SymMatrix, frame: &Frame) -> Result<f64> {
    if frame.ambient_dim() != q.dim() {
        return Err(Error::DimensionError {
            expected: q.dim(),
            got: frame.ambient_dim(),
        });
    }
    Ok(frame.vectors().iter().map(|v| q.quad_form(v)).sum())
}

/// `min_{Λ ∈ G_p(Rⁿ)} tr_Λ Q = λ₁ + ··· + λ_p`.
pub fn min_trace_p(q: &SymMatrix, p: usize) -> Result<f64> {
    let n = q.dim();
    if p < 1 || p > n {
        return Err(Error::InvalidP { p, n });
    }
    let spec = eigh(q)?;
    Ok(spec.eigenvalues[..p].iter().sum())
}

// ---------------------------------------------------------------------------
// Dense linear solve (for the projection Newton systems)
// ---------------------------------------------------------------------------

/// Solves `A x = b` by LU with partial pivoting; `A` is row-major m×m.
pub fn solve_linear(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let m = b.len();
    assert_eq!(a.len(), m * m);
    let mut lu = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..m {
        let mut piv = col;
        let mut best = lu[col * m + col].abs();
        for row in (col + 1)..m {
            let cand = lu[row * m + col].abs();
            if cand > best {
                best = cand;
                piv = row;
            }
        }
        if best < 1e-14 {
            return Err(Error::RankError { pivot: best });
        }
        if piv != col {
            for k in 0..m {
                lu.swap(col * m + k, piv * m + k);
            }
            x.swap(col, piv);
        }
        for row in (col + 1)..m {
            let f = lu[row * m + col] / lu[col * m + col];
            lu[row * m + col] = 0.0;
            for k in (col + 1)..m {
                lu[row * m + k] -= f * lu[col * m + k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..m).rev() {
        x[col] /= lu[col * m + col];
        for row in 0..col {
            x[row] -= lu[row * m + col] * x[col];
        }
    }
    Ok(x)
}

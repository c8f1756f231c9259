//! Combinatorial curvature, its Jacobian with respect to the conformal
//! factor, and the Laplace-type operators built from it.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::eigen::{jacobi_eigen, SymmetricEigen};
use crate::error::{Error, Result};
use crate::mesh::{EdgeId, VertexId};
use crate::metric::DecoratedMetric;

/// Eigenvalues at or below this fraction of the largest are treated as zero
/// by the fractional powers.
pub const ZERO_EIGENVALUE_EPS: f64 = 1e-12;
/// Negative eigenvalues beyond this fraction of the largest are reported as
/// indefiniteness rather than roundoff.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Per-vertex curvature `K_i = 2π − Σ θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureVector(pub Vec<f64>);

impl CurvatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `Σ K_i − 2πχ`.
    pub fn gauss_bonnet_residual(&self, euler_characteristic: i64) -> f64 {
        self.total() - 2.0 * PI * euler_characteristic as f64
    }

    pub fn max_abs_diff(&self, target: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(target)
            .map(|(k, t)| (k - t).abs())
            .fold(0.0, f64::max)
    }
}

pub fn curvature(metric: &DecoratedMetric) -> Result<CurvatureVector> {
    let eff = metric.effective()?;
    let mesh = metric.mesh();
    let mut angle_sum = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let [l_ij, l_jk, l_ki] = eff.triangle_lengths(t);
        let angles = crate::geometry::inner_angles(l_ij, l_jk, l_ki).map_err(|e| e.at_triangle(t))?;
        for (corner, &v) in tri.iter().enumerate() {
            angle_sum[v] += angles[corner];
        }
    }
    Ok(CurvatureVector(
        angle_sum.into_iter().map(|s| 2.0 * PI - s).collect(),
    ))
}

/// `Σ (K_i − K̄_i)²`.
pub fn calabi_energy(k: &[f64], target: &[f64]) -> f64 {
    k.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Coupling of an edge: `−∂K_a/∂u_b` contributed by this edge, i.e.
/// `(d₁ + d₂) / l = (r_e / l) w_e`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeCoupling {
    pub edge: EdgeId,
    pub a: VertexId,
    pub b: VertexId,
    pub coefficient: f64,
}

/// Dense Jacobian `L = ∂K/∂u` with its edge couplings and a lazily computed
/// spectral decomposition.
#[derive(Clone, Debug)]
pub struct CurvatureJacobian {
    pub matrix: DMatrix<f64>,
    pub couplings: Vec<EdgeCoupling>,
    spectral: OnceLock<Spectral>,
}

/// `L = Pᵀ diag(λ) P` with `λ` clamped into the PSD convention.
#[derive(Clone, Debug)]
pub struct Spectral {
    pub eigen: SymmetricEigen,
}

impl Spectral {
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigen.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Eigenvalues at or below `rel · λ_max`.
    pub fn count_below(&self, rel: f64) -> usize {
        let cut = rel * self.max_eigenvalue();
        self.eigen.values.iter().filter(|&&l| l <= cut).count()
    }

    /// `λ^s` with eigenvalues at or below [`ZERO_EIGENVALUE_EPS`]·λ_max
    /// mapped to zero.
    fn powered(&self, s: f64) -> Result<DVector<f64>> {
        let max = self.max_eigenvalue();
        let zero = ZERO_EIGENVALUE_EPS * max;
        self.eigen
            .values
            .iter()
            .map(|&l| {
                if l < -PSD_TOLERANCE * max {
                    Err(Error::IndefiniteJacobian(l))
                } else if l <= zero {
                    Ok(0.0)
                } else {
                    Ok(l.powf(s))
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(DVector::from_vec)
    }
}

impl CurvatureJacobian {
    pub fn from_couplings(n: usize, couplings: Vec<EdgeCoupling>) -> Self {
        let mut matrix = DMatrix::zeros(n, n);
        for c in &couplings {
            matrix[(c.a, c.a)] += c.coefficient;
            matrix[(c.b, c.b)] += c.coefficient;
            matrix[(c.a, c.b)] -= c.coefficient;
            matrix[(c.b, c.a)] -= c.coefficient;
        }
        CurvatureJacobian {
            matrix,
            couplings,
            spectral: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spectral(&self) -> Result<&Spectral> {
        if let Some(s) = self.spectral.get() {
            return Ok(s);
        }
        let eigen = jacobi_eigen(&self.matrix)?;
        Ok(self.spectral.get_or_init(|| Spectral { eigen }))
    }

    /// `Δf = −L f`.
    pub fn apply_laplacian(&self, f: &[f64]) -> Vec<f64> {
        let f = DVector::from_column_slice(f);
        (-(&self.matrix * f)).iter().copied().collect()
    }

    /// `Δ^s f = −Pᵀ diag(λ^s) P f`; `s = 0` is exactly `−f`.
    pub fn apply_fractional(&self, s: f64, f: &[f64]) -> Result<Vec<f64>> {
        if s == 0.0 {
            return Ok(f.iter().map(|x| -x).collect());
        }
        let spectral = self.spectral()?;
        let powered = spectral.powered(s)?;
        let p = &spectral.eigen.p;
        let coeffs = p * DVector::from_column_slice(f);
        let scaled = coeffs.component_mul(&powered);
        Ok((-(p.transpose() * scaled)).iter().copied().collect())
    }

    /// `Δ_p f_i = Σ_{edges at i} c_e |f_j − f_i|^{p−2} (f_j − f_i)`.
    pub fn apply_p_laplacian(&self, p: f64, f: &[f64]) -> Result<Vec<f64>> {
        p_laplacian(&self.couplings, self.dim(), p, f)
    }
}

pub fn p_laplacian(couplings: &[EdgeCoupling], n: usize, p: f64, f: &[f64]) -> Result<Vec<f64>> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cutoff = 1e-14 * norm;
    let term = |x: f64| -> f64 {
        if p == 2.0 {
            x
        } else if x.abs() < cutoff || x == 0.0 {
            // |x|^{p−2} x extends continuously by 0 for p > 1.
            0.0
        } else {
            x.abs().powf(p - 2.0) * x
        }
    };
    let mut out = vec![0.0; n];
    for c in couplings {
        if c.a == c.b {
            continue;
        }
        let flow = c.coefficient * term(f[c.b] - f[c.a]);
        out[c.a] += flow;
        out[c.b] -= flow;
    }
    Ok(out)
}

/// Edge couplings at the current state, from the face-circle signed
/// distances on both sides of each edge.
pub fn edge_couplings(metric: &DecoratedMetric) -> Result<Vec<EdgeCoupling>> {
    let eff = metric.effective()?;
    let geometry = eff.geometry()?;
    Ok(eff
        .mesh
        .edges()
        .map(|e| {
            let [s0, s1] = e.slots;
            let d = geometry[s0.triangle].distances[s0.side] + geometry[s1.triangle].distances[s1.side];
            EdgeCoupling {
                edge: e.id,
                a: e.endpoints.0,
                b: e.endpoints.1,
                coefficient: d / eff.lengths[e.id],
            }
        })
        .collect())
}

pub fn jacobian(metric: &DecoratedMetric) -> Result<CurvatureJacobian> {
    Ok(CurvatureJacobian::from_couplings(
        metric.num_vertices(),
        edge_couplings(metric)?,
    ))
}

/// Central finite differences of `K` in `u`, triangulation held fixed.
pub fn fd_jacobian(metric: &DecoratedMetric, h: f64) -> Result<DMatrix<f64>> {
    let n = metric.num_vertices();
    let mut out = DMatrix::zeros(n, n);
    let mut probe = metric.clone();
    for j in 0..n {
        let mut plus = metric.u().to_vec();
        plus[j] += h;
        let mut minus = metric.u().to_vec();
        minus[j] -= h;
        probe.set_u(plus).map_err(|_| Error::StepLeavesAdmissible(j))?;
        let kp = curvature(&probe).map_err(|_| Error::StepLeavesAdmissible(j))?;
        probe.set_u(minus).map_err(|_| Error::StepLeavesAdmissible(j))?;
        let km = curvature(&probe).map_err(|_| Error::StepLeavesAdmissible(j))?;
        for i in 0..n {
            out[(i, j)] = (kp.0[i] - km.0[i]) / (2.0 * h);
        }
    }
    Ok(out)
}

/// Below this entry scale a matrix counts as zero and the error is absolute.
const ZERO_MATRIX_SCALE: f64 = 1e-6;

/// `max |A − B| / max(|A|, |B|)`, the matrix-scale relative entry error.
/// Falls back to the absolute error when both matrices are numerically zero.
pub fn relative_entry_error(a: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    let scale = a
        .iter()
        .chain(reference.iter())
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    let diff = a
        .iter()
        .zip(reference.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    if scale < ZERO_MATRIX_SCALE {
        diff
    } else {
        diff / scale
    }
}

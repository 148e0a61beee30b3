//! Truncated Fock-space linear algebra.
//!
//! Everything downstream works with the four value types defined here:
//! [`TruncatedSpace`], [`Operator`], [`StateVector`] and [`DensityMatrix`].
//! The quadrature convention is fixed crate-wide to X̂ = (â + â†)/2,
//! P̂ = (â − â†)/(2i), so a coherent state |Z⟩ has ⟨X̂⟩ = Re Z, ⟨P̂⟩ = Im Z
//! and the phase-space position of a well center coincides numerically with
//! its coherent amplitude.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

/// Complex double-precision scalar used throughout the crate.
pub type C64 = Complex64;

/// Finite Fock space spanned by |0⟩..|dim−1⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedSpace {
    dim: usize,
}

impl TruncatedSpace {
    /// Creates a space with the given Fock cutoff. Requires `dim >= 2`.
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidSpace { dim });
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Smallest cutoff considered adequate for amplitudes up to `alpha_max`:
    /// `|α|² + 6|α| + 10`, which keeps the coherent-state tail below ~1e−8.
    pub fn recommended_dim(alpha_max: f64) -> usize {
        (alpha_max * alpha_max + 6.0 * alpha_max + 10.0).ceil() as usize
    }

    /// Checks the truncation adequacy rule for the given amplitude.
    pub fn check_adequate(&self, alpha: C64) -> Result<()> {
        let required = Self::recommended_dim(alpha.norm());
        if self.dim < required {
            return Err(Error::TruncationInadequate {
                required,
                actual: self.dim,
            });
        }
        Ok(())
    }
}

/// Point in phase space, X̂ = (â + â†)/2 convention.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    /// Z = X + iP, equal to the coherent amplitude centered here.
    pub fn to_complex(self) -> C64 {
        C64::new(self.x, self.p)
    }

    pub fn from_complex(z: C64) -> Self {
        Self { x: z.re, p: z.im }
    }
}

/// Dense operator on a truncated Fock space.
#[derive(Debug, Clone)]
pub struct Operator {
    pub space: TruncatedSpace,
    pub matrix: DMatrix<C64>,
}

impl Operator {
    pub fn new(space: TruncatedSpace, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                actual: matrix.nrows(),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: TruncatedSpace) -> Self {
        Self {
            space,
            matrix: DMatrix::zeros(space.dim(), space.dim()),
        }
    }

    pub fn identity(space: TruncatedSpace) -> Self {
        Self {
            space,
            matrix: DMatrix::identity(space.dim(), space.dim()),
        }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Hermitian conjugate.
    pub fn dagger(&self) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.adjoint(),
        }
    }

    /// Applies the operator to a state.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: v.dim(),
            });
        }
        Ok(StateVector {
            space: self.space,
            amps: &self.matrix * &v.amps,
        })
    }

    /// Largest absolute deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        let n = self.dim();
        for i in 0..n {
            for j in i..n {
                let d = (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.clone() * c,
        }
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(Self {
            space: self.space,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// ⟨v|A|v⟩ for a normalized state.
    pub fn expectation(&self, v: &StateVector) -> Result<C64> {
        let av = self.apply(v)?;
        Ok(v.inner(&av))
    }
}

/// Pure state on a truncated Fock space.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub space: TruncatedSpace,
    pub amps: DVector<C64>,
}

impl StateVector {
    pub fn new(space: TruncatedSpace, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                actual: amps.len(),
            });
        }
        Ok(Self { space, amps })
    }

    pub fn zeros(space: TruncatedSpace) -> Self {
        Self {
            space,
            amps: DVector::zeros(space.dim()),
        }
    }

    /// Fock basis state |n⟩.
    pub fn fock(space: TruncatedSpace, n: usize) -> Result<Self> {
        if n >= space.dim() {
            return Err(Error::OutOfRange {
                what: format!("Fock index {} in space of dim {}", n, space.dim()),
            });
        }
        let mut amps = DVector::zeros(space.dim());
        amps[n] = C64::new(1.0, 0.0);
        Ok(Self { space, amps })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩ (conjugate-linear in `self`).
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::Numerical {
                what: "cannot normalize zero vector".into(),
            });
        }
        Ok(StateVector {
            space: self.space,
            amps: &self.amps / C64::new(n, 0.0),
        })
    }

    pub fn scale(&self, c: C64) -> StateVector {
        StateVector {
            space: self.space,
            amps: &self.amps * c,
        }
    }

    pub fn add(&self, other: &StateVector) -> Result<StateVector> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(StateVector {
            space: self.space,
            amps: &self.amps + &other.amps,
        })
    }

    pub fn sub(&self, other: &StateVector) -> Result<StateVector> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Photon-number distribution |⟨n|ψ⟩|².
    pub fn number_distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    /// ⟨â†â⟩ for a normalized state.
    pub fn mean_photon_number(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(n, z)| n as f64 * z.norm_sqr())
            .sum()
    }

    /// ⟨exp(iπ â†â)⟩ for a normalized state.
    pub fn parity_expectation(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(n, z)| if n % 2 == 0 { z.norm_sqr() } else { -z.norm_sqr() })
            .sum()
    }
}

/// Mixed state on a truncated Fock space.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub space: TruncatedSpace,
    pub matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(space: TruncatedSpace, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                actual: matrix.nrows(),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn from_pure(v: &StateVector) -> DensityMatrix {
        let n = v.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v.amps[i] * v.amps[j].conj();
            }
        }
        DensityMatrix {
            space: v.space,
            matrix: m,
        }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// ⟨A⟩ = Tr(Aρ).
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: op.dim(),
            });
        }
        let mut tr = C64::new(0.0, 0.0);
        for i in 0..self.dim() {
            for k in 0..self.dim() {
                tr += op.matrix[(i, k)] * self.matrix[(k, i)];
            }
        }
        Ok(tr)
    }

    /// Eigenvalues of the (Hermitian-symmetrized) matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let sym = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }
}

/// Annihilation and creation operators (â, â†).
///
/// â has entries √n on the superdiagonal; the commutator [â, â†] equals the
/// identity except for the last diagonal entry (truncation artifact).
pub fn ladder_operators(space: TruncatedSpace) -> (Operator, Operator) {
    let n = space.dim();
    let mut a = DMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    (
        Operator { space, matrix: a },
        Operator {
            space,
            matrix: adag,
        },
    )
}

/// Raw closed-form coherent amplitudes e^{−|α|²/2} α^k / √(k!), without
/// renormalization. The truncated tail means the vector norm is below one;
/// phase-space kernels need these exact values rather than a rescaled state.
fn coherent_amplitudes_raw(space: TruncatedSpace, alpha: C64) -> Vec<C64> {
    let n = space.dim();
    let mut amps = vec![C64::new(0.0, 0.0); n];
    // built by the stable recurrence amplitude_{k+1} = amplitude_k · α / √(k+1)
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for k in 0..n {
        amps[k] = c;
        c *= alpha / C64::new(((k + 1) as f64).sqrt(), 0.0);
    }
    amps
}

/// Coherent state |α⟩ from the closed-form expansion, renormalized so that
/// the truncated vector has unit norm.
pub fn coherent_state(space: TruncatedSpace, alpha: C64) -> StateVector {
    let amps = coherent_amplitudes_raw(space, alpha);
    let v = StateVector {
        space,
        amps: DVector::from_vec(amps),
    };
    v.normalized().expect("coherent state has positive norm")
}

/// Displacement operator D(α) = exp(αâ† − α*â).
///
/// Built as the exponential of the anti-Hermitian generator through a
/// Hermitian eigendecomposition, so the truncated matrix is exactly unitary.
/// Truncation adequacy for |α| is required and the error carries the
/// recommended cutoff.
pub fn displacement_operator(space: TruncatedSpace, alpha: C64) -> Result<Operator> {
    space.check_adequate(alpha)?;
    Ok(displacement_operator_unchecked(space, alpha))
}

/// Same as [`displacement_operator`] but without the adequacy gate; used
/// internally where the caller manages truncation explicitly.
pub fn displacement_operator_unchecked(space: TruncatedSpace, alpha: C64) -> Operator {
    let n = space.dim();
    // Hermitian generator M = −i(αâ† − α*â); then D = exp(iM).
    let mut m = DMatrix::zeros(n, n);
    for k in 1..n {
        let s = (k as f64).sqrt();
        // (αâ†)_{k,k−1} = α√k ; (−α*â)_{k−1,k} = −α*√k
        m[(k, k - 1)] = C64::new(0.0, -1.0) * alpha * s;
        m[(k - 1, k)] = C64::new(0.0, 1.0) * alpha.conj() * s;
    }
    let eig = m.symmetric_eigen();
    let u = &eig.eigenvectors;
    let mut d = DMatrix::zeros(n, n);
    // D = U exp(iΛ) U†
    for col in 0..n {
        let phase = C64::new(0.0, eig.eigenvalues[col]).exp();
        for row in 0..n {
            d[(row, col)] = u[(row, col)] * phase;
        }
    }
    let d = d * u.adjoint();
    Operator { space, matrix: d }
}

/// Displaced Fock state |α, n⟩ = D(α)|n⟩.
pub fn displaced_fock(space: TruncatedSpace, alpha: C64, n: usize) -> Result<StateVector> {
    if n >= space.dim() {
        return Err(Error::OutOfRange {
            what: format!("Fock index {} in space of dim {}", n, space.dim()),
        });
    }
    let d = displacement_operator(space, alpha)?;
    let v = StateVector {
        space,
        amps: d.matrix.column(n).into_owned(),
    };
    Ok(v)
}

/// |⟨a|b⟩|² for pure states, computed on normalized copies.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let na = a.norm();
    let nb = b.norm();
    if na < 1e-300 || nb < 1e-300 {
        return Err(Error::Numerical {
            what: "fidelity of zero vector".into(),
        });
    }
    Ok(a.inner(b).norm_sqr() / (na * na * nb * nb))
}

/// ⟨ψ|ρ|ψ⟩ for a pure state against a density matrix.
pub fn fidelity_pure_mixed(psi: &StateVector, rho: &DensityMatrix) -> Result<f64> {
    if psi.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            actual: rho.dim(),
        });
    }
    let psi = psi.normalized()?;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            acc += psi.amps[i].conj() * rho.matrix[(i, j)] * psi.amps[j];
        }
    }
    Ok(acc.re.max(0.0))
}

/// Uhlmann fidelity (Tr√(√ρ σ √ρ))² for two density matrices.
pub fn fidelity_mixed(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let sqrt_rho = hermitian_sqrt(&rho.matrix);
    let inner = &sqrt_rho * &sigma.matrix * &sqrt_rho;
    let sym = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let ev = sym.symmetric_eigen().eigenvalues;
    let tr: f64 = ev.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok(tr * tr)
}

fn hermitian_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let u = &eig.eigenvectors;
    let n = m.nrows();
    let mut s = DMatrix::zeros(n, n);
    for col in 0..n {
        let root = C64::new(eig.eigenvalues[col].max(0.0).sqrt(), 0.0);
        for row in 0..n {
            s[(row, col)] = u[(row, col)] * root;
        }
    }
    s * u.adjoint()
}

/// Displaced-parity kernel ⟨ψ|D(Z) Π D†(Z)|ψ⟩ = Σ_m (−1)^m |⟨Z, m|ψ⟩|²
/// for a normalized ψ.
///
/// Column recurrence |Z, m+1⟩ = (â† − Z*)|Z, m⟩/√(m+1). Entry k of a column
/// depends only on entries ≤ k of the previous one, so the sub-cutoff entries
/// stay exact for every m (the raw seed column keeps that property; a
/// renormalized seed would not). The sum therefore continues past the space
/// dimension until the accumulated mass Σ|⟨Z, m|ψ⟩|² accounts for the state,
/// which bounds the truncation error of the alternating series directly.
fn displaced_parity_expectation(psi: &StateVector, z: C64) -> f64 {
    let dim = psi.dim();
    // col holds the sub-cutoff Fock amplitudes of |Z, m⟩ for the current m.
    let mut col: Vec<C64> = coherent_amplitudes_raw(psi.space, z);
    let mut next = vec![C64::new(0.0, 0.0); dim];
    let max_m = 64 * dim;
    let mut signed = 0.0f64;
    let mut mass = 0.0f64;
    for m in 0..max_m {
        let mut overlap = C64::new(0.0, 0.0);
        for k in 0..dim {
            overlap += col[k].conj() * psi.amps[k];
        }
        let w = overlap.norm_sqr();
        mass += w;
        signed += if m % 2 == 0 { w } else { -w };
        if mass >= 1.0 - 1e-12 {
            break;
        }
        let inv = 1.0 / ((m + 1) as f64).sqrt();
        for k in 0..dim {
            let raise = if k == 0 {
                C64::new(0.0, 0.0)
            } else {
                C64::new((k as f64).sqrt(), 0.0) * col[k - 1]
            };
            next[k] = (raise - z.conj() * col[k]) * inv;
        }
        std::mem::swap(&mut col, &mut next);
    }
    signed
}

/// Wigner function of a pure state on a grid, via the displaced-parity form
/// W(x, p) = (2/π) Σ_m (−1)^m |⟨Z, m|ψ⟩|², Z = x + ip.
///
/// Returns values row-major over (p, x): outer loop p, inner loop x.
pub fn wigner_grid(state: &StateVector, xs: &[f64], ps: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() || ps.is_empty() {
        return Err(Error::OutOfRange {
            what: "empty Wigner grid".into(),
        });
    }
    let psi = state.normalized()?;
    let points: Vec<(usize, usize)> = (0..ps.len())
        .flat_map(|ip| (0..xs.len()).map(move |ix| (ip, ix)))
        .collect();
    let vals: Vec<f64> = points
        .par_iter()
        .map(|&(ip, ix)| {
            let z = C64::new(xs[ix], ps[ip]);
            displaced_parity_expectation(&psi, z) * 2.0 / std::f64::consts::PI
        })
        .collect();
    Ok(vals)
}

/// Wigner function of a density matrix: spectral decomposition of ρ followed
/// by weighted pure-state grids. Eigenvalues below 1e−12 are dropped.
pub fn wigner_grid_density(rho: &DensityMatrix, xs: &[f64], ps: &[f64]) -> Result<Vec<f64>> {
    let sym = (&rho.matrix + rho.matrix.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut total = vec![0.0; xs.len() * ps.len()];
    for col in 0..rho.dim() {
        let w = eig.eigenvalues[col];
        if w <= 1e-12 {
            continue;
        }
        let v = StateVector {
            space: rho.space,
            amps: eig.eigenvectors.column(col).into_owned(),
        };
        let grid = wigner_grid(&v, xs, ps)?;
        for (t, g) in total.iter_mut().zip(grid.iter()) {
            *t += w * g;
        }
    }
    Ok(total)
}

/// Husimi Q function of a pure state: Q(x, p) = |⟨Z|ψ⟩|²/π.
pub fn husimi_grid(state: &StateVector, xs: &[f64], ps: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() || ps.is_empty() {
        return Err(Error::OutOfRange {
            what: "empty Husimi grid".into(),
        });
    }
    let psi = state.normalized()?;
    let mut out = Vec::with_capacity(xs.len() * ps.len());
    for &p in ps {
        for &x in xs {
            let bra = coherent_amplitudes_raw(psi.space, C64::new(x, p));
            let overlap: C64 = bra
                .iter()
                .zip(psi.amps.iter())
                .map(|(b, a)| b.conj() * a)
                .sum();
            out.push(overlap.norm_sqr() / std::f64::consts::PI);
        }
    }
    Ok(out)
}

/// Husimi Q function of a density matrix: Q(x, p) = ⟨Z|ρ|Z⟩/π.
pub fn husimi_grid_density(rho: &DensityMatrix, xs: &[f64], ps: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(xs.len() * ps.len());
    for &p in ps {
        for &x in xs {
            let bra = coherent_amplitudes_raw(rho.space, C64::new(x, p));
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..rho.dim() {
                for j in 0..rho.dim() {
                    acc += bra[i].conj() * rho.matrix[(i, j)] * bra[j];
                }
            }
            out.push(acc.re / std::f64::consts::PI);
        }
    }
    Ok(out)
}

//! Exact diagonalization, gap analysis, and ground-manifold verification.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::cat_states::{acs_minus, acs_plus, collision_pair};
use crate::fock_core::{Operator, StateVector, TruncatedSpace, C64};
use crate::hamiltonians::{build_acs_hamiltonian, AcsParams};
use crate::{Error, Result};

/// The k lowest eigenpairs of an operator, ordered by ascending real part.
/// Hermitian inputs give real eigenvalues and mutually orthonormal vectors;
/// general inputs give complex eigenvalues and individually normalized (not
/// mutually orthogonal) right eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenSet {
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: Vec<StateVector>,
    pub hermitian: bool,
}

impl EigenSet {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Real parts of the eigenvalues; for Hermitian inputs these are the
    /// eigenvalues themselves.
    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.re).collect()
    }
}

const HERMITIAN_ROUTE_TOL: f64 = 1e-12;

/// Dense diagonalization returning the `k` lowest-real-part eigenpairs.
/// Hermitian operators (detected by relative skew defect) take the symmetric
/// solver; anything else takes the general complex solver.
pub fn eigensystem(h: &Operator, k: usize) -> Result<EigenSet> {
    let dim = h.dim();
    if k == 0 || k > dim {
        return Err(Error::OutOfRange {
            what: format!("requested {} eigenpairs of a dim-{} operator", k, dim),
        });
    }
    if h.matrix.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
        return Err(Error::Numerical {
            what: "operator has non-finite entries".into(),
        });
    }
    let scale = h.frobenius_norm().max(1.0);
    if h.hermiticity_defect() <= HERMITIAN_ROUTE_TOL * scale {
        hermitian_eigensystem(h, k)
    } else {
        general_eigensystem(h, k)
    }
}

fn hermitian_eigensystem(h: &Operator, k: usize) -> Result<EigenSet> {
    let dim = h.dim();
    let sym = nalgebra::SymmetricEigen::new(h.matrix.clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| sym.eigenvalues[a].total_cmp(&sym.eigenvalues[b]));
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        eigenvalues.push(C64::new(sym.eigenvalues[idx], 0.0));
        let col = DVector::from_fn(dim, |r, _| sym.eigenvectors[(r, idx)]);
        eigenvectors.push(StateVector::new(h.space, col)?);
    }
    Ok(EigenSet {
        eigenvalues,
        eigenvectors,
        hermitian: true,
    })
}

fn general_eigensystem(h: &Operator, k: usize) -> Result<EigenSet> {
    use faer::complex_native::c64 as fc64;
    let dim = h.dim();
    let m = faer::Mat::from_fn(dim, dim, |r, c| {
        let e = h.matrix[(r, c)];
        fc64::new(e.re, e.im)
    });
    let evd = m.eigendecomposition::<fc64>();
    let s = evd.s().column_vector();
    let u = evd.u();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| s.read(a).re.total_cmp(&s.read(b).re));
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let lam = s.read(idx);
        eigenvalues.push(C64::new(lam.re, lam.im));
        let col = DVector::from_fn(dim, |r, _| {
            let e = u.read(r, idx);
            C64::new(e.re, e.im)
        });
        let v = StateVector::new(h.space, col)?;
        eigenvectors.push(v.normalized()?);
    }
    Ok(EigenSet {
        eigenvalues,
        eigenvectors,
        hermitian: false,
    })
}

/// Gap between the two-fold ground manifold and the first excited level,
/// against the analytic well-separation value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// E2 − E0 in the same units as the input Hamiltonian.
    pub numeric_gap: f64,
    /// K|d|² for separated wells, 2K at the exact collision.
    pub analytic_gap: f64,
    pub relative_error: f64,
    /// E1 − E0, the splitting inside the nominally degenerate manifold.
    pub degeneracy_split: f64,
}

/// Fraction of an eigenvector's weight sitting in the top Fock levels; used
/// to detect a gap state pressed against the cutoff.
fn cutoff_leak(v: &StateVector) -> f64 {
    let dim = v.dim();
    let guard = (dim / 10).max(2);
    v.amps
        .iter()
        .skip(dim - guard)
        .map(|a| a.norm_sqr())
        .sum()
}

const LEAK_TOL: f64 = 1e-8;

/// Diagonalizes the well Hamiltonian of `p` and reports E2−E0 against the
/// analytic gap. The manifold is fixed as the two lowest states, so the gap
/// is measured from E0 rather than E1.
pub fn gap_report(p: &AcsParams, space: TruncatedSpace) -> Result<GapReport> {
    let h = build_acs_hamiltonian(space, p)?;
    let eig = eigensystem(&h, 3)?;
    let e = eig.real_eigenvalues();
    for v in &eig.eigenvectors {
        let leak = cutoff_leak(v);
        if leak > LEAK_TOL {
            return Err(Error::TruncationBreach {
                time: 0.0,
                occupation: leak,
            });
        }
    }
    let d2 = p.separation().norm_sqr();
    let analytic_gap = if d2 == 0.0 { 2.0 * p.k } else { p.k * d2 };
    let numeric_gap = e[2] - e[0];
    Ok(GapReport {
        numeric_gap,
        analytic_gap,
        relative_error: (numeric_gap - analytic_gap).abs() / analytic_gap,
        degeneracy_split: e[1] - e[0],
    })
}

/// Overlap of the numeric ground pair with the analytic one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldReport {
    pub degeneracy_split: f64,
    /// Weight of the analytic plus state inside the numeric ground span.
    pub overlap_plus: f64,
    pub overlap_minus: f64,
}

/// Checks that the two lowest numeric eigenstates span the analytic cat pair
/// (or, at the collision, the displaced Fock pair).
pub fn ground_manifold_check(p: &AcsParams, space: TruncatedSpace) -> Result<ManifoldReport> {
    let h = build_acs_hamiltonian(space, p)?;
    let eig = eigensystem(&h, 2)?;
    let e = eig.real_eigenvalues();
    let (plus, minus) = if p.separation().norm() < 1e-6 {
        collision_pair(space, p.alpha0)?
    } else {
        (
            acs_plus(space, p.alpha0, p.alpha1)?,
            acs_minus(space, p.alpha0, p.alpha1)?,
        )
    };
    let span_weight = |t: &StateVector| -> f64 {
        eig.eigenvectors
            .iter()
            .map(|v| v.inner(t).norm_sqr())
            .sum()
    };
    Ok(ManifoldReport {
        degeneracy_split: e[1] - e[0],
        overlap_plus: span_weight(&plus),
        overlap_minus: span_weight(&minus),
    })
}

/// One row of the gap-convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSweepRow {
    pub d_squared: f64,
    pub numeric_gap: f64,
    pub analytic_gap: f64,
    pub rel_err: f64,
}

/// Gap convergence over symmetric pairs α0 = −α1 = √(d²)/2, one row per
/// requested separation.
pub fn gap_sweep(k: f64, d_squared: &[f64], space: TruncatedSpace) -> Result<Vec<GapSweepRow>> {
    d_squared
        .par_iter()
        .map(|&d2| {
            if d2 <= 0.0 {
                return Err(Error::OutOfRange {
                    what: format!("d² = {} in gap sweep", d2),
                });
            }
            let half = 0.5 * d2.sqrt();
            let p = AcsParams::new(k, C64::new(half, 0.0), C64::new(-half, 0.0))?;
            let report = gap_report(&p, space)?;
            Ok(GapSweepRow {
                d_squared: d2,
                numeric_gap: report.numeric_gap,
                analytic_gap: report.analytic_gap,
                rel_err: report.relative_error,
            })
        })
        .collect()
}

#[allow(dead_code)]
fn eigen_residual(h: &Operator, eig: &EigenSet) -> f64 {
    let mut worst = 0.0f64;
    for (lam, v) in eig.eigenvalues.iter().zip(eig.eigenvectors.iter()) {
        let hv = h.apply(v).unwrap();
        let mut res = 0.0;
        for i in 0..v.dim() {
            res += (hv.amps[i] - lam * v.amps[i]).norm_sqr();
        }
        worst = worst.max(res.sqrt());
    }
    worst
}

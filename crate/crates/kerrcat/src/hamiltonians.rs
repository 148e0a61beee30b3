//! Hamiltonian constructors: the two-well stabilization form, its
//! drive-parameter form, displaced variants, the non-Hermitian loss form,
//! the semiclassical metapotential, and multi-mode control Hamiltonians.

use crate::fock_core::{ladder_operators, Operator, TruncatedSpace, C64};
use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Parameters of the two-well stabilization Hamiltonian
/// H = K(â†−α0*)(â†−α1*)(â−α0)(â−α1),
/// which annihilates |α0⟩ and |α1⟩ so the ground manifold sits at energy 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcsParams {
    /// Kerr rate; every energy in the crate is quoted in units of K.
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha0: C64,
    pub alpha1: C64,
}

impl AcsParams {
    pub fn new(k: f64, alpha0: C64, alpha1: C64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::OutOfRange {
                what: format!("Kerr rate must be positive and finite, got {}", k),
            });
        }
        if !alpha0.re.is_finite()
            || !alpha0.im.is_finite()
            || !alpha1.re.is_finite()
            || !alpha1.im.is_finite()
        {
            return Err(Error::OutOfRange {
                what: "well amplitudes must be finite".into(),
            });
        }
        Ok(Self { k, alpha0, alpha1 })
    }

    /// Well separation d = α0 − α1.
    pub fn separation(&self) -> C64 {
        self.alpha0 - self.alpha1
    }

    pub fn max_amplitude(&self) -> f64 {
        self.alpha0.norm().max(self.alpha1.norm())
    }
}

/// Drive-parameter form of the same Hamiltonian:
/// H = Δ â†â + K â†²â² + [(ε/K) â† + β â†² + η â†²â + h.c.] + (|β|²/K)·I.
///
/// β = Kα0α1 and η = −K(α0+α1) are the second and third-order driving
/// strengths; ε = βη* is the first-order strength; the stored detuning is
/// Δ = |η|²/K so all stored rates stay in units of K. The constant term is
/// what zeroes the ground energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub detuning: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub beta: C64,
    pub eta: C64,
    pub epsilon: C64,
}

/// Loss and dephasing rates for open-system evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub kappa: f64,
    pub kappa_phi: f64,
}

impl NoiseParams {
    pub fn new(kappa: f64, kappa_phi: f64) -> Result<Self> {
        if kappa < 0.0 || kappa_phi < 0.0 {
            return Err(Error::OutOfRange {
                what: format!("noise rates must be nonnegative, got ({}, {})", kappa, kappa_phi),
            });
        }
        Ok(Self { kappa, kappa_phi })
    }

    pub fn closed() -> Self {
        Self {
            kappa: 0.0,
            kappa_phi: 0.0,
        }
    }
}

/// Layout of a controlled-well Hamiltonian on a mode product space.
///
/// Modes 0..m_controls hold the code pair (α0, α1); the final mode is the
/// target, driven toward (α2, α3) when every control sits in |α1⟩ and toward
/// (α4, α5) otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiQubitSpec {
    pub n_modes: usize,
    pub m_controls: usize,
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha0: C64,
    pub alpha1: C64,
    pub alpha2: C64,
    pub alpha3: C64,
    pub alpha4: C64,
    pub alpha5: C64,
    /// Fock cutoff per mode.
    pub mode_dim: usize,
}

impl MultiQubitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m_controls < 1 || self.m_controls >= self.n_modes {
            return Err(Error::OutOfRange {
                what: format!(
                    "need 1 <= m_controls < n_modes, got {} of {}",
                    self.m_controls, self.n_modes
                ),
            });
        }
        if self.n_modes != self.m_controls + 1 {
            return Err(Error::OutOfRange {
                what: "exactly one target mode is supported".into(),
            });
        }
        if !(self.k > 0.0) {
            return Err(Error::OutOfRange {
                what: "Kerr rate must be positive".into(),
            });
        }
        if (self.alpha0 - self.alpha1).norm() < 1e-12 {
            return Err(Error::DegenerateTarget);
        }
        if self.mode_dim < 2 {
            return Err(Error::InvalidSpace { dim: self.mode_dim });
        }
        Ok(())
    }
}

/// Record of the normal-ordered coefficients of a displaced Hamiltonian:
/// H' = number·â†â + kerr·â†²â² + [single_photon·â† + two_photon·â†²
///      + cubic·â†²â + h.c.] + constant.
///
/// Extracted numerically from low Fock matrix elements of the raising side,
/// so the record is valid for non-Hermitian inputs too (it reports the â†,
/// â†², â†²â family, never transcribing printed formulas).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientRecord {
    pub number: C64,
    pub kerr: C64,
    pub single_photon: C64,
    pub two_photon: C64,
    pub cubic: C64,
    pub constant: C64,
}

/// Shared banded assembler for the normal-ordered polynomial
/// kerr·â†²â² + number·â†â + [linear·â† + two_photon·â†² + cubic·â†²â + h.c.]
/// + constant. Both Hamiltonian routes funnel through this so they agree to
/// rounding rather than to matrix-product accumulation error.
fn assemble_normal_ordered(
    space: TruncatedSpace,
    kerr: f64,
    number: f64,
    linear: C64,
    two_photon: C64,
    cubic: C64,
    constant: f64,
) -> Operator {
    let n = space.dim();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let jf = j as f64;
        m[(j, j)] = C64::new(kerr * jf * (jf - 1.0) + number * jf + constant, 0.0);
        if j + 1 < n {
            // â†: √(j+1); â†²â: j√(j+1)
            let amp = C64::new((jf + 1.0).sqrt(), 0.0) * (linear + cubic * jf);
            m[(j + 1, j)] = amp;
            m[(j, j + 1)] = amp.conj();
        }
        if j + 2 < n {
            let amp = C64::new(((jf + 1.0) * (jf + 2.0)).sqrt(), 0.0) * two_photon;
            m[(j + 2, j)] = amp;
            m[(j, j + 2)] = amp.conj();
        }
    }
    Operator { space, matrix: m }
}

/// Two-well stabilization Hamiltonian K(â†−α0*)(â†−α1*)(â−α0)(â−α1).
///
/// Hermitian and positive semidefinite; annihilates |α0⟩ and |α1⟩ up to the
/// truncation residual, so the degenerate ground manifold sits at energy 0
/// (the expanded polynomial carries the constant K|α0α1|² that the pure
/// drive terms lack).
pub fn build_acs_hamiltonian(space: TruncatedSpace, p: &AcsParams) -> Result<Operator> {
    space.check_adequate(C64::new(p.max_amplitude(), 0.0))?;
    let s = p.alpha0 + p.alpha1;
    let prod = p.alpha0 * p.alpha1;
    Ok(assemble_normal_ordered(
        space,
        p.k,
        p.k * s.norm_sqr(),
        -p.k * prod * s.conj(),
        p.k * prod,
        -p.k * s,
        p.k * prod.norm_sqr(),
    ))
}

/// Drive strengths equivalent to the given well pair.
pub fn to_drive_form(p: &AcsParams) -> DriveParams {
    let beta = p.k * p.alpha0 * p.alpha1;
    let eta = -p.k * (p.alpha0 + p.alpha1);
    DriveParams {
        detuning: eta.norm_sqr() / p.k,
        k: p.k,
        beta,
        eta,
        epsilon: beta * eta.conj(),
    }
}

/// Hamiltonian assembled from drive strengths; equals the factored form
/// elementwise when the parameters come from [`to_drive_form`].
pub fn build_drive_hamiltonian(space: TruncatedSpace, d: &DriveParams) -> Result<Operator> {
    if !(d.k > 0.0) {
        return Err(Error::OutOfRange {
            what: "Kerr rate must be positive".into(),
        });
    }
    Ok(assemble_normal_ordered(
        space,
        d.k,
        d.detuning,
        d.epsilon / d.k,
        d.beta,
        d.eta,
        d.beta.norm_sqr() / d.k,
    ))
}

/// Reads the normal-ordered coefficients of an operator containing only the
/// â†â, â†²â², â†, â†², â†²â family (plus conjugates and a constant) from its
/// lowest Fock matrix elements.
pub fn extract_coefficients(h: &Operator) -> Result<CoefficientRecord> {
    if h.dim() < 3 {
        return Err(Error::InvalidSpace { dim: h.dim() });
    }
    let m = &h.matrix;
    let rt2 = 2.0f64.sqrt();
    let constant = m[(0, 0)];
    let single_photon = m[(1, 0)];
    let two_photon = m[(2, 0)] / rt2;
    let number = m[(1, 1)] - constant;
    let cubic = (m[(2, 1)] - rt2 * single_photon) / rt2;
    let kerr = (m[(2, 2)] - constant - 2.0 * number) / 2.0;
    Ok(CoefficientRecord {
        number,
        kerr,
        single_photon,
        two_photon,
        cubic,
        constant,
    })
}

/// Hamiltonian in the frame displaced by α: D†(α) H D(α), computed as an
/// exact numerical conjugation, with its normal-ordered coefficients.
///
/// The single-photon coefficient vanishes when α is one of the wells. At
/// α = 0 the result is the undisplaced Hamiltonian itself.
pub fn displaced_hamiltonian(
    space: TruncatedSpace,
    p: &AcsParams,
    alpha: C64,
) -> Result<(Operator, CoefficientRecord)> {
    let h = build_acs_hamiltonian(space, p)?;
    if alpha.norm() == 0.0 {
        let record = extract_coefficients(&h)?;
        return Ok((h, record));
    }
    space.check_adequate(alpha)?;
    let d = crate::fock_core::displacement_operator_unchecked(space, alpha);
    let conj = d.matrix.adjoint() * &h.matrix * &d.matrix;
    let hd = Operator {
        space,
        matrix: conj,
    };
    let record = extract_coefficients(&hd)?;
    Ok((hd, record))
}

/// Non-Hermitian effective Hamiltonian in the displaced frame:
/// D†(α)(H − iκâ†â/2)D(α) = H'(α) − (iκ/2)(â†â + αâ† + α*â + |α|²).
///
/// The loss term is transformed exactly, constant included, so the
/// anti-Hermitian part is −iκ/2 times a positive operator. κ = 0 reduces to
/// the displaced Hamiltonian.
pub fn effective_loss_hamiltonian(
    space: TruncatedSpace,
    p: &AcsParams,
    noise: &NoiseParams,
    alpha: C64,
) -> Result<Operator> {
    let (hd, _) = displaced_hamiltonian(space, p, alpha)?;
    if noise.kappa == 0.0 {
        return Ok(hd);
    }
    let n = space.dim();
    let mut m = hd.matrix;
    let half_kappa = C64::new(0.0, -0.5 * noise.kappa);
    for j in 0..n {
        m[(j, j)] += half_kappa * (j as f64 + alpha.norm_sqr());
        if j + 1 < n {
            let s = C64::new((j as f64 + 1.0).sqrt(), 0.0);
            m[(j + 1, j)] += half_kappa * alpha * s;
            m[(j, j + 1)] += half_kappa * alpha.conj() * s;
        }
    }
    Ok(Operator { space, matrix: m })
}

/// Semiclassical metapotential on a grid, row-major over (p, x):
/// H(x, p) = K|a−α0|²|a−α1|² − K|α0α1|² with a = (x+ip)/√2.
///
/// Note the scaled units: double-well minima sit near √2·α0 and √2·α1, not
/// at the coherent amplitudes themselves (phase-space quantities elsewhere
/// in the crate use the Z = X+iP labeling instead).
pub fn metapotential(p: &AcsParams, xs: &[f64], ps: &[f64]) -> Vec<f64> {
    let shift = p.k * (p.alpha0 * p.alpha1).norm_sqr();
    let mut out = Vec::with_capacity(xs.len() * ps.len());
    for &pp in ps {
        for &x in xs {
            let a = C64::new(x, pp) / C64::new(2.0f64.sqrt(), 0.0);
            let v = p.k * (a - p.alpha0).norm_sqr() * (a - p.alpha1).norm_sqr() - shift;
            out.push(v);
        }
    }
    out
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

fn embed(op: &DMatrix<C64>, mode: usize, dims: &[usize]) -> DMatrix<C64> {
    let mut acc = DMatrix::identity(1, 1);
    for (i, &d) in dims.iter().enumerate() {
        let factor = if i == mode {
            op.clone()
        } else {
            DMatrix::identity(d, d)
        };
        acc = kron(&acc, &factor);
    }
    acc
}

/// Controlled-well Hamiltonian on the mode product space.
///
/// Each control mode carries its own two-well stabilization term. The target
/// term is K·(P2P1)†(P2P1) with P1 = â_t − α2·A − α4·(I−A) and
/// P2 = â_t − α3·A − α5·(I−A), where A = Π_i (α0 − â_i)/(α0 − α1) acts as
/// the all-controls-in-|α1⟩ selector on the control coherent-state span.
/// The result annihilates every product of control coherent states with the
/// matching target well, up to truncation residual.
pub fn build_control_hamiltonian(spec: &MultiQubitSpec) -> Result<Operator> {
    spec.validate()?;
    let dims: Vec<usize> = vec![spec.mode_dim; spec.n_modes];
    let total: usize = dims.iter().product();
    let mode_space = TruncatedSpace::new(spec.mode_dim)?;
    let (a_op, _) = ladder_operators(mode_space);
    let d = spec.alpha0 - spec.alpha1;

    // single-mode pieces
    let ident = DMatrix::<C64>::identity(spec.mode_dim, spec.mode_dim);
    let b_single = {
        let s = spec.alpha0 + spec.alpha1;
        let p = spec.alpha0 * spec.alpha1;
        &a_op.matrix * &a_op.matrix - &a_op.matrix * s + &ident * p
    };
    let selector_single = (&ident * spec.alpha0 - &a_op.matrix) / d;

    let mut h = DMatrix::<C64>::zeros(total, total);
    // stabilization of each control mode
    for mode in 0..spec.m_controls {
        let b = embed(&b_single, mode, &dims);
        h += b.adjoint() * &b * C64::new(spec.k, 0.0);
    }
    // all-controls selector
    let mut sel = DMatrix::<C64>::identity(total, total);
    for mode in 0..spec.m_controls {
        sel = sel * embed(&selector_single, mode, &dims);
    }
    let big_ident = DMatrix::<C64>::identity(total, total);
    let a_target = embed(&a_op.matrix, spec.n_modes - 1, &dims);
    let p1 = &a_target - &sel * spec.alpha2 - (&big_ident - &sel) * spec.alpha4;
    let p2 = &a_target - &sel * spec.alpha3 - (&big_ident - &sel) * spec.alpha5;
    let p21 = p2 * p1;
    h += p21.adjoint() * &p21 * C64::new(spec.k, 0.0);

    let space = TruncatedSpace::new(total)?;
    Operator::new(space, h)
}

/// Fast matrix-free application of the two-mode controlled-well Hamiltonian,
/// with the target branch amplitudes (α2, α3) supplied per call so a moving
/// gate path costs nothing to update. Layout: flat index = c·mode_dim + t.
pub struct ControlApplier {
    spec: MultiQubitSpec,
    dim: usize,
    /// K·B†B for the control mode, dense mode_dim × mode_dim.
    control_term: DMatrix<C64>,
    scratch: Vec<Vec<C64>>,
}

impl ControlApplier {
    pub fn new(spec: &MultiQubitSpec) -> Result<Self> {
        spec.validate()?;
        if spec.n_modes != 2 {
            return Err(Error::OutOfRange {
                what: "matrix-free application supports exactly two modes".into(),
            });
        }
        let mode_space = TruncatedSpace::new(spec.mode_dim)?;
        let (a_op, _) = ladder_operators(mode_space);
        let ident = DMatrix::<C64>::identity(spec.mode_dim, spec.mode_dim);
        let s = spec.alpha0 + spec.alpha1;
        let p = spec.alpha0 * spec.alpha1;
        let b = &a_op.matrix * &a_op.matrix - &a_op.matrix * s + &ident * p;
        let control_term = b.adjoint() * &b * C64::new(spec.k, 0.0);
        let dim = spec.mode_dim;
        Ok(Self {
            spec: *spec,
            dim,
            control_term,
            scratch: vec![vec![C64::new(0.0, 0.0); dim * dim]; 2],
        })
    }

    pub fn total_dim(&self) -> usize {
        self.dim * self.dim
    }

    /// out[c,t] = Σ_{c'} A[c,c'] src[c',t] scaled by `coeff`, plus
    /// `diag`·src, where A = (α0 − â_c)/(α0 − α1) is bidiagonal.
    fn selector_combo(&self, diag: C64, coeff: C64, src: &[C64], out: &mut [C64]) {
        let n = self.dim;
        let d = self.spec.alpha0 - self.spec.alpha1;
        let a0_d = self.spec.alpha0 / d;
        for c in 0..n {
            let up = if c + 1 < n {
                C64::new(((c + 1) as f64).sqrt(), 0.0) / d
            } else {
                C64::new(0.0, 0.0)
            };
            for t in 0..n {
                let mut v = a0_d * src[c * n + t];
                if c + 1 < n {
                    v -= up * src[(c + 1) * n + t];
                }
                out[c * n + t] = diag * src[c * n + t] + coeff * v;
            }
        }
    }

    /// Adjoint counterpart of [`Self::selector_combo`].
    fn selector_combo_adjoint(&self, diag: C64, coeff: C64, src: &[C64], out: &mut [C64]) {
        let n = self.dim;
        let d_conj = (self.spec.alpha0 - self.spec.alpha1).conj();
        let a0_d = self.spec.alpha0.conj() / d_conj;
        for c in 0..n {
            let down = if c > 0 {
                C64::new((c as f64).sqrt(), 0.0) / d_conj
            } else {
                C64::new(0.0, 0.0)
            };
            for t in 0..n {
                let mut v = a0_d * src[c * n + t];
                if c > 0 {
                    v -= down * src[(c - 1) * n + t];
                }
                out[c * n + t] = diag * src[c * n + t] + coeff * v;
            }
        }
    }

    /// Applies H(α2, α3) to `psi`, writing into `out`.
    pub fn apply(&mut self, alpha2: C64, alpha3: C64, psi: &[C64], out: &mut [C64]) {
        let n = self.dim;
        assert_eq!(psi.len(), n * n);
        assert_eq!(out.len(), n * n);
        let kc = C64::new(self.spec.k, 0.0);

        // control stabilization: out = (K B†B ⊗ I) psi
        for c in 0..n {
            for t in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for c2 in 0..n {
                    let m = self.control_term[(c, c2)];
                    if m.norm_sqr() != 0.0 {
                        acc += m * psi[c2 * n + t];
                    }
                }
                out[c * n + t] = acc;
            }
        }

        let mut buf_a = std::mem::take(&mut self.scratch[0]);
        let mut buf_b = std::mem::take(&mut self.scratch[1]);

        // buf_a = P1 psi = â_t psi − [α4 + (α2−α4)A] psi
        self.selector_combo(
            self.spec.alpha4,
            alpha2 - self.spec.alpha4,
            psi,
            &mut buf_a,
        );
        for c in 0..n {
            for t in 0..n {
                let raise = if t + 1 < n {
                    C64::new(((t + 1) as f64).sqrt(), 0.0) * psi[c * n + t + 1]
                } else {
                    C64::new(0.0, 0.0)
                };
                buf_a[c * n + t] = raise - buf_a[c * n + t];
            }
        }
        // buf_b = P2 buf_a
        self.selector_combo(
            self.spec.alpha5,
            alpha3 - self.spec.alpha5,
            &buf_a,
            &mut buf_b,
        );
        for c in 0..n {
            for t in 0..n {
                let raise = if t + 1 < n {
                    C64::new(((t + 1) as f64).sqrt(), 0.0) * buf_a[c * n + t + 1]
                } else {
                    C64::new(0.0, 0.0)
                };
                buf_b[c * n + t] = raise - buf_b[c * n + t];
            }
        }
        // buf_a = P2† buf_b
        self.selector_combo_adjoint(
            self.spec.alpha5.conj(),
            (alpha3 - self.spec.alpha5).conj(),
            &buf_b,
            &mut buf_a,
        );
        for c in 0..n {
            for t in (0..n).rev() {
                let lower = if t > 0 {
                    C64::new((t as f64).sqrt(), 0.0) * buf_b[c * n + t - 1]
                } else {
                    C64::new(0.0, 0.0)
                };
                buf_a[c * n + t] = lower - buf_a[c * n + t];
            }
        }
        // buf_b = P1† buf_a
        self.selector_combo_adjoint(
            self.spec.alpha4.conj(),
            (alpha2 - self.spec.alpha4).conj(),
            &buf_a,
            &mut buf_b,
        );
        for c in 0..n {
            for t in (0..n).rev() {
                let lower = if t > 0 {
                    C64::new((t as f64).sqrt(), 0.0) * buf_a[c * n + t - 1]
                } else {
                    C64::new(0.0, 0.0)
                };
                buf_b[c * n + t] = lower - buf_b[c * n + t];
            }
        }
        for i in 0..n * n {
            out[i] += kc * buf_b[i];
        }

        self.scratch[0] = buf_a;
        self.scratch[1] = buf_b;
    }

    /// Dense matrix for the given branch amplitudes, for verification.
    pub fn to_operator(&self, alpha2: C64, alpha3: C64) -> Result<Operator> {
        let mut spec = self.spec;
        spec.alpha2 = alpha2;
        spec.alpha3 = alpha3;
        build_control_hamiltonian(&spec)
    }
}

//! Closed-form map between a driven SQUID-array circuit and the
//! rotating-frame parameters of the cat-stabilizing Hamiltonian, plus the
//! inverse design solve.
//!
//! The circuit is an intrinsic capacitance in parallel with a charge-drive
//! line, a flux-modulated symmetric SQUID array of length N, and a
//! flux-modulated asymmetric SQUID array. Expanding the junction cosines to
//! fourth order and rotating at the pump frequency leaves a Kerr resonator
//! with second-, third- and first-order drives whose strengths are simple
//! closed forms in the circuit energies and modulation depths.
//!
//! Convention: [`EffectiveParams`] stores the drive strengths as the
//! coefficients of the lowering-side monomials (β on â², η on â†â², ε on
//! â), the way the rotating-frame Hamiltonian is conventionally written;
//! the mirrored terms carry their conjugates. The simulation-facing
//! [`DriveParams`] puts the plain values on the raising side and scales the
//! linear drive by K, so [`as_drive_params`] conjugates and rescales — and,
//! because the circuit Kerr coefficient is negative, flips the overall sign
//! to hand back the positive-K form whose cat manifold is the ground space.

use crate::hamiltonians::DriveParams;
use crate::{C64, Error, Result};
use serde::{Deserialize, Serialize};

/// Largest flux-modulation depth the first-order junction expansion is
/// trusted for; the design solve reports anything beyond it infeasible.
pub const DRIVE_MODULATION_BOUND: f64 = 0.1;

const ROUND_TRIP_REL: f64 = 1e-9;

/// Fabrication-time circuit constants: energies in angular-frequency units
/// (ħ = 1) and the junction-array length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareBase {
    /// Charging energy E_C.
    pub e_c: f64,
    /// Josephson energy of each symmetric-SQUID junction.
    pub e_j: f64,
    /// Junction energies of the asymmetric SQUID; their difference powers
    /// the third-order drive.
    pub e_j1: f64,
    pub e_j2: f64,
    /// Array length; longer arrays dilute the nonlinearity.
    pub n: u32,
}

impl HardwareBase {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("E_C", self.e_c),
            ("E_J", self.e_j),
            ("E_J1", self.e_j1),
            ("E_J2", self.e_j2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::OutOfRange {
                    what: format!("{name} = {v} must be a positive energy"),
                });
            }
        }
        if self.n < 1 {
            return Err(Error::OutOfRange {
                what: "array length N must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Ẽ_J = 2E_J + E_J1 + E_J2, the static Josephson energy.
    pub fn e_j_tilde(&self) -> f64 {
        2.0 * self.e_j + self.e_j1 + self.e_j2
    }

    /// E_J1 − E_J2, the asymmetry that enables odd-order driving.
    pub fn e_j_minus(&self) -> f64 {
        self.e_j1 - self.e_j2
    }

    /// Bare resonance ω_c = √(8·Ẽ_J·E_C/N).
    pub fn omega_c(&self) -> f64 {
        (8.0 * self.e_j_tilde() * self.e_c / self.n as f64).sqrt()
    }

    /// Kerr coefficient −E_C/(2N²); negative, as the quartic expansion of a
    /// cosine potential always is.
    pub fn kerr(&self) -> f64 {
        let n = self.n as f64;
        -self.e_c / (2.0 * n * n)
    }
}

/// Full drive configuration of the circuit: hardware constants plus the
/// modulation depths, drive phases, and pump frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    #[serde(flatten)]
    pub base: HardwareBase,
    /// Flux-modulation depth of the symmetric SQUID (second-order drive).
    pub delta1: f64,
    /// Flux-modulation depth of the asymmetric SQUID (third- plus
    /// first-order drive).
    pub delta2: f64,
    /// Charge-drive product C_d·V_d/e (dimensionless).
    pub cd_vd: f64,
    /// Charge-, flux- and asymmetric-flux-drive phases.
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
    /// Pump frequency; the drive tones sit at ω_p, 2ω_p, ω_p.
    pub omega_p: f64,
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        for (name, d) in [("delta1", self.delta1), ("delta2", self.delta2)] {
            if !(d.is_finite() && (0.0..1.0).contains(&d)) {
                return Err(Error::OutOfRange {
                    what: format!("{name} = {d} must lie in [0, 1); the junction expansion is first order in it"),
                });
            }
        }
        if !(self.cd_vd.is_finite() && self.cd_vd >= 0.0) {
            return Err(Error::OutOfRange {
                what: format!("charge-drive product {} must be nonnegative", self.cd_vd),
            });
        }
        for (name, p) in [("phi1", self.phi1), ("phi2", self.phi2), ("phi3", self.phi3)] {
            if !p.is_finite() {
                return Err(Error::OutOfRange {
                    what: format!("{name} = {p} must be finite"),
                });
            }
        }
        if !(self.omega_p.is_finite() && self.omega_p > 0.0) {
            return Err(Error::OutOfRange {
                what: format!("pump frequency {} must be positive", self.omega_p),
            });
        }
        Ok(())
    }
}

/// Rotating-frame parameters realized by a circuit configuration.
///
/// Drive strengths multiply the lowering-side monomials (see the module
/// doc); `epsilon` is the bare linear coefficient ϵ + ξ, where ξ is the
/// asymmetric SQUID's first-order residue and ϵ comes from the charge line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub omega_c: f64,
    pub delta: f64,
    /// Signed Kerr coefficient, −E_C/(2N²) < 0. Simulation modules work
    /// with its magnitude; see [`as_drive_params`].
    pub k: f64,
    pub beta: C64,
    pub eta: C64,
    pub epsilon: C64,
    /// Zero-point charge factor [Ẽ_J/(32NE_C)]^{1/4}.
    pub n0: f64,
    /// Zero-point phase factor [2NE_C/Ẽ_J]^{1/4}; n0·φ0 = 1/2.
    pub varphi0: f64,
}

/// Signed magnitude of ξ, the linear drive contributed by the asymmetric
/// SQUID's modulation; the phase e^{iφ3} rides on top. ξ is phase-locked
/// to η with the hardware-fixed real ratio ξ/η = −4NẼ_J/ω_c.
pub fn asquid_linear_drive(c: &CircuitParams) -> f64 {
    let b = &c.base;
    -c.delta2 * b.e_j_minus() * (b.n as f64 * b.omega_c() / (8.0 * b.e_j_tilde())).sqrt()
}

/// Rotating-frame parameters of the driven circuit.
pub fn circuit_to_effective(c: &CircuitParams) -> Result<EffectiveParams> {
    c.validate()?;
    let b = &c.base;
    let n = b.n as f64;
    let e_j_tilde = b.e_j_tilde();
    let omega_c = b.omega_c();
    let k = b.kerr();
    let n0 = (e_j_tilde / (32.0 * n * b.e_c)).powf(0.25);
    let varphi0 = (2.0 * n * b.e_c / e_j_tilde).powf(0.25);

    let beta = C64::from_polar(c.delta1 * b.e_j * omega_c / (4.0 * e_j_tilde), c.phi2);
    let eta = C64::from_polar(1.0, c.phi3)
        * (c.delta2 * b.e_j_minus() * omega_c.powf(1.5)
            / (4.0 * n.sqrt() * (2.0 * e_j_tilde).powf(1.5)));
    let xi = C64::from_polar(1.0, c.phi3) * asquid_linear_drive(c);
    let charge = -C64::i() * n0 * 2.0 * b.e_c * c.cd_vd * C64::from_polar(1.0, c.phi1);
    Ok(EffectiveParams {
        omega_c,
        delta: omega_c + 0.5 * k - c.omega_p,
        k,
        beta,
        eta,
        epsilon: charge + xi,
        n0,
        varphi0,
    })
}

/// The realized Hamiltonian in simulation convention: positive Kerr rate,
/// raising-side drive coefficients, linear drive scaled by K.
///
/// A negative-K circuit realizes the negative of the positive-K form, which
/// shares its eigenstates with the spectrum inverted; the cat manifold sits
/// at the top of its spectrum and at the bottom of the returned form's.
pub fn as_drive_params(e: &EffectiveParams) -> DriveParams {
    let s = if e.k < 0.0 { -1.0 } else { 1.0 };
    DriveParams {
        detuning: s * e.delta,
        k: s * e.k,
        beta: s * e.beta.conj(),
        eta: s * e.eta.conj(),
        epsilon: (s * e.k) * (s * e.epsilon.conj()),
    }
}

fn infeasible(constraint: String) -> Error {
    Error::Infeasible { constraint }
}

/// Solves the drive settings (δ1, δ2, C_dV_d, φ1..φ3, ω_p) that make the
/// given hardware realize a drive-form target, so that
/// [`circuit_to_effective`] followed by [`as_drive_params`] round-trips to
/// it within 1e−9 relative.
///
/// The solve is triangular: δ2 and φ3 come from η alone, which pins ξ; the
/// charge drive then absorbs ε − ξ; β fixes δ1 and φ2 independently; ω_p
/// places the detuning. Reported infeasibilities: a Kerr rate other than
/// E_C/(2N²), third-order drive from a symmetric SQUID, modulation depths
/// beyond [`DRIVE_MODULATION_BOUND`], or a nonpositive pump frequency.
pub fn effective_to_drives(target: &DriveParams, hardware: &HardwareBase) -> Result<CircuitParams> {
    hardware.validate()?;
    for (name, z) in [
        ("beta", target.beta),
        ("eta", target.eta),
        ("epsilon", target.epsilon),
    ] {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::OutOfRange {
                what: format!("target {name} must be finite"),
            });
        }
    }
    if !(target.k.is_finite() && target.k > 0.0) || !target.detuning.is_finite() {
        return Err(Error::OutOfRange {
            what: "target Kerr rate must be positive and detuning finite".into(),
        });
    }
    let k_hw = -hardware.kerr();
    if (target.k - k_hw).abs() > ROUND_TRIP_REL * k_hw {
        return Err(infeasible(format!(
            "Kerr rate is fixed by the hardware at E_C/(2N^2) = {k_hw:.6e}; target asks {:.6e}",
            target.k
        )));
    }
    let n = hardware.n as f64;
    let e_j_tilde = hardware.e_j_tilde();
    let e_j_minus = hardware.e_j_minus();
    let omega_c = hardware.omega_c();

    // The circuit realizes the negative of the simulation form; its
    // lowering-side targets are the negated conjugates of the drive form.
    let beta_c = -target.beta.conj();
    let eta_c = -target.eta.conj();
    let epsilon_c = -target.epsilon.conj() / target.k;

    let (delta2, phi3) = if eta_c.norm() == 0.0 {
        (0.0, 0.0)
    } else {
        if e_j_minus == 0.0 {
            return Err(infeasible(
                "third-order drive needs an asymmetric SQUID; E_J1 = E_J2 gives none".into(),
            ));
        }
        let lever = e_j_minus * omega_c.powf(1.5) / (4.0 * n.sqrt() * (2.0 * e_j_tilde).powf(1.5));
        let phased = eta_c / lever;
        (phased.norm(), phased.arg())
    };
    if delta2 > DRIVE_MODULATION_BOUND {
        return Err(infeasible(format!(
            "third-order drive needs delta2 = {delta2:.4}, beyond the modulation bound {DRIVE_MODULATION_BOUND}"
        )));
    }

    let xi = C64::from_polar(1.0, phi3)
        * (-delta2 * e_j_minus * (n * omega_c / (8.0 * e_j_tilde)).sqrt());
    let n0 = (e_j_tilde / (32.0 * n * hardware.e_c)).powf(0.25);
    let charge_needed = epsilon_c - xi;
    let (cd_vd, phi1) = if charge_needed.norm() == 0.0 {
        (0.0, 0.0)
    } else {
        let phased = charge_needed / (-C64::i() * n0 * 2.0 * hardware.e_c);
        (phased.norm(), phased.arg())
    };

    let (delta1, phi2) = if beta_c.norm() == 0.0 {
        (0.0, 0.0)
    } else {
        let phased = beta_c * 4.0 * e_j_tilde / (hardware.e_j * omega_c);
        (phased.norm(), phased.arg())
    };
    if delta1 > DRIVE_MODULATION_BOUND {
        return Err(infeasible(format!(
            "two-photon drive needs delta1 = {delta1:.4}, beyond the modulation bound {DRIVE_MODULATION_BOUND}"
        )));
    }

    let omega_p = omega_c - 0.5 * k_hw + target.detuning;
    if omega_p <= 0.0 {
        return Err(infeasible(format!(
            "required pump frequency {omega_p:.6e} is not positive"
        )));
    }

    let solved = CircuitParams {
        base: *hardware,
        delta1,
        delta2,
        cd_vd,
        phi1,
        phi2,
        phi3,
        omega_p,
    };
    solved.validate()?;
    Ok(solved)
}

/// Machine-readable design outcome: `{feasible, circuit}` on success,
/// `{feasible: false, constraint}` otherwise.
pub fn design_outcome_json(result: &Result<CircuitParams>) -> serde_json::Value {
    match result {
        Ok(c) => serde_json::json!({ "feasible": true, "circuit": c }),
        Err(Error::Infeasible { constraint }) => {
            serde_json::json!({ "feasible": false, "constraint": constraint })
        }
        Err(e) => serde_json::json!({ "feasible": false, "constraint": e.to_string() }),
    }
}

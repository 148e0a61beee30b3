//! Closed-form cat and collision-state algebra: normalization and
//! orthogonality of two-component cats, the near-collision decomposition,
//! photon statistics, Mandel Q, quadrature uncertainties, and the projection
//! of the dephasing operator onto the cat subspace.

use crate::fock_core::{
    coherent_state, displaced_fock, StateVector, TruncatedSpace, C64,
};
use crate::{Error, Result};

/// Closed-form overlap data for the cat pair built on (α0, α1):
/// |C±⟩ = N±(|α0⟩ ± |α1⟩).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcsOverlap {
    /// Well separation d = α0 − α1.
    pub d: C64,
    /// γ = Im[α0 α1*], the phase-space area angle between the wells.
    pub gamma: f64,
    pub norm_plus: f64,
    pub norm_minus: f64,
    /// ⟨C+|C−⟩, purely imaginary for every input.
    pub cross_overlap: C64,
}

/// Normalizations and mutual overlap of the plus/minus cat pair:
/// N± = 1/√(2(1 ± e^{−|d|²/2} cos γ)),
/// ⟨C+|C−⟩ = i e^{−|d|²/2} sin γ / √(1 − e^{−|d|²} cos² γ).
///
/// Only the exact collision α0 = α1 makes the minus normalization diverge;
/// callers hitting that limit should switch to [`collision_pair`].
pub fn acs_overlap(alpha0: C64, alpha1: C64) -> Result<AcsOverlap> {
    let d = alpha0 - alpha1;
    let gamma = (alpha0 * alpha1.conj()).im;
    let envelope = (-0.5 * d.norm_sqr()).exp();
    let denom_plus = 2.0 * (1.0 + envelope * gamma.cos());
    let denom_minus = 2.0 * (1.0 - envelope * gamma.cos());
    if denom_minus <= 0.0 {
        return Err(Error::CollisionLimit {
            what: "minus-state normalization diverges at coinciding wells; use collision states"
                .into(),
        });
    }
    let cross_denom = (1.0 - envelope * envelope * gamma.cos() * gamma.cos()).sqrt();
    Ok(AcsOverlap {
        d,
        gamma,
        norm_plus: 1.0 / denom_plus.sqrt(),
        norm_minus: 1.0 / denom_minus.sqrt(),
        cross_overlap: C64::new(0.0, envelope * gamma.sin() / cross_denom),
    })
}

/// Normalized plus cat N+(|α0⟩ + |α1⟩).
pub fn acs_plus(space: TruncatedSpace, alpha0: C64, alpha1: C64) -> Result<StateVector> {
    let v = coherent_state(space, alpha0).add(&coherent_state(space, alpha1))?;
    v.normalized()
}

/// Normalized minus cat N−(|α0⟩ − |α1⟩); fails at the collision where the
/// difference vanishes.
pub fn acs_minus(space: TruncatedSpace, alpha0: C64, alpha1: C64) -> Result<StateVector> {
    acs_overlap(alpha0, alpha1)?;
    let v = coherent_state(space, alpha0).sub(&coherent_state(space, alpha1))?;
    v.normalized()
}

/// Direction data of a well pair about to collide: the surviving center α
/// and the closing separation Δα = |Δα|e^{iΔθ}, with δθ = Δθ − θ the angle
/// of approach relative to the center's own phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearCollisionSpec {
    pub alpha: C64,
    pub delta_alpha: C64,
    /// Reduced to (−π, π].
    pub delta_theta: f64,
}

/// Reduces an angle to (−π, π].
fn reduce_angle(t: f64) -> f64 {
    let r = t.rem_euclid(2.0 * std::f64::consts::PI);
    if r > std::f64::consts::PI {
        r - 2.0 * std::f64::consts::PI
    } else {
        r
    }
}

impl NearCollisionSpec {
    /// From an explicit separation; for α = 0 the approach angle is measured
    /// from the real axis.
    pub fn new(alpha: C64, delta_alpha: C64) -> Self {
        let theta = if alpha.norm() == 0.0 { 0.0 } else { alpha.arg() };
        let dtheta = if delta_alpha.norm() == 0.0 {
            0.0
        } else {
            delta_alpha.arg()
        };
        Self {
            alpha,
            delta_alpha,
            delta_theta: reduce_angle(dtheta - theta),
        }
    }

    /// Exact-collision limit (Δα = 0) approached from the angle δθ.
    pub fn exact(alpha: C64, delta_theta: f64) -> Self {
        Self {
            alpha,
            delta_alpha: C64::new(0.0, 0.0),
            delta_theta: reduce_angle(delta_theta),
        }
    }
}

/// Numerical floor below which the normalized difference of two coherent
/// states loses all significant digits.
pub const NEAR_COLLISION_FLOOR: f64 = 1e-6;

/// The states surviving a well collision: 𝒩(|α+Δα⟩ − |α⟩), or its exact
/// |Δα| → 0 limit
/// (e^{iΔθ}|α,1⟩ + i|α| sin δθ · |α⟩)/√(1 + |α|² sin²δθ)
/// when the spec carries Δα = 0. Separations below [`NEAR_COLLISION_FLOOR`]
/// (but not exactly zero) are rejected rather than returned as noise.
pub fn near_collision_state(space: TruncatedSpace, spec: &NearCollisionSpec) -> Result<StateVector> {
    let mag = spec.delta_alpha.norm();
    space.check_adequate(C64::new(spec.alpha.norm() + mag, 0.0))?;
    if mag == 0.0 {
        let theta = if spec.alpha.norm() == 0.0 {
            0.0
        } else {
            spec.alpha.arg()
        };
        let phase = C64::from_polar(1.0, theta + spec.delta_theta);
        let agarwal = displaced_fock(space, spec.alpha, 1)?;
        let s = spec.delta_theta.sin();
        let coherent_part =
            coherent_state(space, spec.alpha).scale(C64::new(0.0, spec.alpha.norm() * s));
        return agarwal.scale(phase).add(&coherent_part)?.normalized();
    }
    if mag < NEAR_COLLISION_FLOOR {
        return Err(Error::PrecisionFloor {
            floor: NEAR_COLLISION_FLOOR,
            value: mag,
        });
    }
    let shifted = coherent_state(space, spec.alpha + spec.delta_alpha);
    shifted.sub(&coherent_state(space, spec.alpha))?.normalized()
}

/// Plus and minus collision states |𝒞±⟩ = (|α⟩ ± |α,1⟩)/√2.
pub fn collision_pair(space: TruncatedSpace, alpha: C64) -> Result<(StateVector, StateVector)> {
    let coh = coherent_state(space, alpha);
    let agarwal = displaced_fock(space, alpha, 1)?;
    let inv = C64::new(1.0 / 2.0f64.sqrt(), 0.0);
    let plus = coh.add(&agarwal)?.scale(inv);
    let minus = coh.sub(&agarwal)?.scale(inv);
    Ok((plus, minus))
}

/// Photon-number statistics of a normalized state. The `m` field carries the
/// closed-form near-collision offset when the state came from
/// [`near_collision_statistics`], and is absent for generic states.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonStats {
    pub mean: f64,
    pub fluctuation: f64,
    pub m: Option<f64>,
    pub distribution: Vec<f64>,
}

pub fn photon_statistics(state: &StateVector) -> PhotonStats {
    let distribution = state.number_distribution();
    let mean: f64 = distribution
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum();
    let second: f64 = distribution
        .iter()
        .enumerate()
        .map(|(n, p)| (n as f64) * (n as f64) * p)
        .sum();
    PhotonStats {
        mean,
        fluctuation: (second - mean * mean).max(0.0).sqrt(),
        m: None,
        distribution,
    }
}

/// Closed-form mean offset M = (1 + 2|α|² sin²δθ)/(1 + |α|² sin²δθ) of a
/// near-collision state, so that ⟨â†â⟩ = |α|² + M.
pub fn near_collision_m(alpha_mag: f64, delta_theta: f64) -> f64 {
    let s2 = delta_theta.sin().powi(2);
    let w = 1.0 + alpha_mag * alpha_mag * s2;
    (1.0 + 2.0 * alpha_mag * alpha_mag * s2) / w
}

/// Statistics of the near-collision state together with its closed-form M.
pub fn near_collision_statistics(
    space: TruncatedSpace,
    spec: &NearCollisionSpec,
) -> Result<PhotonStats> {
    let state = near_collision_state(space, spec)?;
    let mut stats = photon_statistics(&state);
    stats.m = Some(near_collision_m(spec.alpha.norm(), spec.delta_theta));
    Ok(stats)
}

/// Mandel Q of the near-collision family:
/// Q = (2|α|²(2−M) − M²)/(|α|² + M).
pub fn mandel_q(alpha_mag: f64, delta_theta: f64) -> f64 {
    let m = near_collision_m(alpha_mag, delta_theta);
    let a2 = alpha_mag * alpha_mag;
    (2.0 * a2 * (2.0 - m) - m * m) / (a2 + m)
}

/// Uncertainty product ⟨(ΔX̂)²⟩⟨(ΔP̂)²⟩ with X̂ = (â+â†)/2. Coherent states
/// give 1/16; the near-collision family stays within [1/16, 9/16].
pub fn quadrature_uncertainty(state: &StateVector) -> f64 {
    let n = state.dim();
    let a = &state.amps;
    let mut exp_a = C64::new(0.0, 0.0);
    let mut exp_a2 = C64::new(0.0, 0.0);
    let mut exp_n = 0.0f64;
    for k in 0..n {
        exp_n += k as f64 * a[k].norm_sqr();
        if k + 1 < n {
            exp_a += a[k].conj() * a[k + 1] * ((k + 1) as f64).sqrt();
        }
        if k + 2 < n {
            exp_a2 += a[k].conj() * a[k + 2] * (((k + 1) * (k + 2)) as f64).sqrt();
        }
    }
    let x = exp_a.re;
    let p = exp_a.im;
    let x2 = (2.0 * exp_a2.re + 2.0 * exp_n + 1.0) / 4.0;
    let p2 = (-2.0 * exp_a2.re + 2.0 * exp_n + 1.0) / 4.0;
    (x2 - x * x) * (p2 - p * p)
}

/// Coefficients of the photon-number operator projected onto the logical cat
/// frame, n̂ ↦ cI·Î + cX·X̂ + cY·Ŷ + cZ·Ẑ.
///
/// Frame convention: the sandwiches are taken in the unnormalized pair
/// u± = |α0⟩ ± e^{i(φ0−φ1)}|α1⟩ (the relative phase aligns the well
/// arguments), with Ẑ u± = ±u±, X̂ u± = u∓, and Ŷ fixed by
/// cY = Im⟨u+|n̂|u−⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliProjection {
    pub c_i: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub c_z: f64,
}

impl PauliProjection {
    /// The projected operator as a 2×2 matrix in the (+, −) frame.
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        [
            [
                C64::new(self.c_i + self.c_z, 0.0),
                C64::new(self.c_x, self.c_y),
            ],
            [
                C64::new(self.c_x, -self.c_y),
                C64::new(self.c_i - self.c_z, 0.0),
            ],
        ]
    }
}

/// Projection of n̂ = â†â onto the cat subspace of (α0, α1):
/// cI = |α0|² + |α1|²; cZ = 2|α0α1| cos γ · e^{−|d|²/2};
/// cX = |α0|² − |α1|²; cY = 2|α0α1| sin γ · e^{−|d|²/2}.
///
/// For a symmetric pair (α1 = −α0) the flip terms cY, cZ are exponentially
/// suppressed in the separation and cX vanishes identically.
pub fn dephasing_projection(alpha0: C64, alpha1: C64) -> Result<PauliProjection> {
    acs_overlap(alpha0, alpha1)?;
    let gamma = (alpha0 * alpha1.conj()).im;
    let envelope = (-0.5 * (alpha0 - alpha1).norm_sqr()).exp();
    let mag_prod = (alpha0 * alpha1).norm();
    Ok(PauliProjection {
        c_i: alpha0.norm_sqr() + alpha1.norm_sqr(),
        c_x: alpha0.norm_sqr() - alpha1.norm_sqr(),
        c_y: 2.0 * mag_prod * gamma.sin() * envelope,
        c_z: 2.0 * mag_prod * gamma.cos() * envelope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_core::{fidelity, wigner_grid};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn overlap_closed_form_vs_fock_oracle() {
        let space = TruncatedSpace::new(60).unwrap();
        let a0 = C64::from_polar(3.0, std::f64::consts::PI / 3.0);
        let a1 = c(-2.0, 0.0);
        let ov = acs_overlap(a0, a1).unwrap();
        let v0 = coherent_state(space, a0);
        let v1 = coherent_state(space, a1);
        // N± from the numeric norms of |α0⟩ ± |α1⟩
        let plus_norm = v0.add(&v1).unwrap().norm();
        let minus_norm = v0.sub(&v1).unwrap().norm();
        assert!((ov.norm_plus - 1.0 / plus_norm).abs() < 1e-10);
        assert!((ov.norm_minus - 1.0 / minus_norm).abs() < 1e-10);
        let plus = acs_plus(space, a0, a1).unwrap();
        let minus = acs_minus(space, a0, a1).unwrap();
        let cross = plus.inner(&minus);
        assert!((cross - ov.cross_overlap).norm() < 1e-10);
    }

    #[test]
    fn overlap_random_pairs_vs_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0010);
        let space = TruncatedSpace::new(70).unwrap();
        for _ in 0..20 {
            let a0 = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            let a1 = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            if (a0 - a1).norm() < 1e-3 {
                continue;
            }
            let ov = acs_overlap(a0, a1).unwrap();
            assert_eq!(ov.cross_overlap.re, 0.0);
            let plus = acs_plus(space, a0, a1).unwrap();
            let minus = acs_minus(space, a0, a1).unwrap();
            assert!((plus.inner(&minus) - ov.cross_overlap).norm() < 1e-10);
        }
    }

    #[test]
    fn overlap_opposite_pair_orthogonal() {
        let ov = acs_overlap(c(2.0, 1.0), c(-2.0, -1.0)).unwrap();
        assert!(ov.cross_overlap.norm() < 1e-15);
    }

    #[test]
    fn overlap_collision_flagged() {
        assert!(matches!(
            acs_overlap(c(2.0, 0.0), c(2.0, 0.0)),
            Err(Error::CollisionLimit { .. })
        ));
        // the plus normalization stays finite approaching the collision
        let ov = acs_overlap(c(2.0, 0.0), c(2.0 + 1e-6, 0.0)).unwrap();
        assert_relative_eq!(ov.norm_plus, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn near_collision_exact_branch_along_center() {
        let space = TruncatedSpace::new(50).unwrap();
        let alpha = C64::from_polar(2.0, 0.7);
        let spec = NearCollisionSpec::exact(alpha, 0.0);
        let state = near_collision_state(space, &spec).unwrap();
        let agarwal = displaced_fock(space, alpha, 1).unwrap();
        assert!(fidelity(&state, &agarwal).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn near_collision_at_origin_is_fock_one() {
        let space = TruncatedSpace::new(30).unwrap();
        let spec = NearCollisionSpec::new(c(0.0, 0.0), c(1e-3, 0.0));
        let state = near_collision_state(space, &spec).unwrap();
        let one = StateVector::fock(space, 1).unwrap();
        assert!(fidelity(&state, &one).unwrap() > 1.0 - 1e-5);
    }

    #[test]
    fn near_collision_maximum_superposition() {
        let space = TruncatedSpace::new(50).unwrap();
        let theta = 0.9f64;
        let alpha = C64::from_polar(2.0, theta);
        // approach at right angle to the center phase
        let spec = NearCollisionSpec::new(
            alpha,
            C64::from_polar(1e-3, theta + std::f64::consts::PI / 2.0),
        );
        assert_relative_eq!(spec.delta_theta, std::f64::consts::PI / 2.0, epsilon = 1e-12);
        let state = near_collision_state(space, &spec).unwrap();
        // closed form (e^{iθ}|α,1⟩ + |α|·|α⟩)/√(1+|α|²)
        let target = displaced_fock(space, alpha, 1)
            .unwrap()
            .scale(C64::from_polar(1.0, theta))
            .add(&coherent_state(space, alpha).scale(c(2.0, 0.0)))
            .unwrap()
            .normalized()
            .unwrap();
        assert!(fidelity(&state, &target).unwrap() > 1.0 - 1e-4);
        // and the exact branch agrees with the small-separation route
        let exact = near_collision_state(
            space,
            &NearCollisionSpec::exact(alpha, std::f64::consts::PI / 2.0),
        )
        .unwrap();
        assert!(fidelity(&state, &exact).unwrap() > 1.0 - 1e-4);
    }

    #[test]
    fn near_collision_floor_enforced() {
        let space = TruncatedSpace::new(40).unwrap();
        let spec = NearCollisionSpec::new(c(1.0, 0.0), c(1e-7, 0.0));
        assert!(matches!(
            near_collision_state(space, &spec),
            Err(Error::PrecisionFloor { .. })
        ));
    }

    #[test]
    fn collision_pair_at_origin() {
        let space = TruncatedSpace::new(20).unwrap();
        let (plus, minus) = collision_pair(space, c(0.0, 0.0)).unwrap();
        let rt = 1.0 / 2.0f64.sqrt();
        assert!((plus.amps[0].re - rt).abs() < 1e-12);
        assert!((plus.amps[1].re - rt).abs() < 1e-12);
        assert!((minus.amps[0].re - rt).abs() < 1e-12);
        assert!((minus.amps[1].re + rt).abs() < 1e-12);
    }

    #[test]
    fn collision_pair_orthonormal() {
        let space = TruncatedSpace::new(40).unwrap();
        let (plus, minus) = collision_pair(space, c(2.0, 0.0)).unwrap();
        assert!((plus.norm() - 1.0).abs() < 1e-10);
        assert!((minus.norm() - 1.0).abs() < 1e-10);
        assert!(plus.inner(&minus).norm() < 1e-10);
    }

    #[test]
    fn collision_plus_state_wigner_negative() {
        let space = TruncatedSpace::new(40).unwrap();
        let (plus, _) = collision_pair(space, c(2.0, 0.0)).unwrap();
        let xs: Vec<f64> = (0..41).map(|k| 0.4 + 0.08 * k as f64).collect();
        let ps: Vec<f64> = (0..41).map(|k| -1.6 + 0.08 * k as f64).collect();
        let w = wigner_grid(&plus, &xs, &ps).unwrap();
        let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min < -1e-3, "no negativity found, min = {}", min);
    }

    #[test]
    fn photon_statistics_coherent() {
        let space = TruncatedSpace::new(40).unwrap();
        let stats = photon_statistics(&coherent_state(space, c(2.0, 0.0)));
        assert_relative_eq!(stats.mean, 4.0, epsilon = 1e-9);
        assert_relative_eq!(stats.fluctuation, 2.0, epsilon = 1e-9);
        let total: f64 = stats.distribution.iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-10);
        assert!(stats.m.is_none());
    }

    #[test]
    fn photon_statistics_agarwal_zero() {
        // the distribution of the collision state vanishes at n = |α|²
        let space = TruncatedSpace::new(60).unwrap();
        let alpha = C64::from_polar(3.0, 2.0 * std::f64::consts::PI / 3.0);
        let spec = NearCollisionSpec::exact(alpha, 0.0);
        let stats = near_collision_statistics(space, &spec).unwrap();
        assert!(stats.distribution[9] < 1e-12, "P9 = {:e}", stats.distribution[9]);
        assert_relative_eq!(stats.mean, 10.0, epsilon = 1e-8);
        assert_relative_eq!(stats.fluctuation, 3.0f64.sqrt() * 3.0, epsilon = 1e-8);
    }

    #[test]
    fn photon_statistics_closed_forms_at_small_separation() {
        // the finite-separation mean carries an odd O(Re α*Δα) drift around
        // the limit value; averaging the ±Δα approaches cancels it exactly
        let space = TruncatedSpace::new(60).unwrap();
        let alpha = C64::from_polar(3.0, 0.4);
        let fwd = NearCollisionSpec::new(alpha, C64::from_polar(1e-3, 0.4));
        let bwd = NearCollisionSpec::new(alpha, C64::from_polar(1e-3, 0.4 + std::f64::consts::PI));
        assert!(fwd.delta_theta.abs() < 1e-12);
        let sf = near_collision_statistics(space, &fwd).unwrap();
        let sb = near_collision_statistics(space, &bwd).unwrap();
        let m = sf.m.unwrap();
        assert_relative_eq!(m, 1.0, epsilon = 1e-12);
        assert!(((sf.mean + sb.mean) / 2.0 - (9.0 + m)).abs() < 1e-4);
        let fluct = (sf.fluctuation + sb.fluctuation) / 2.0;
        assert!((fluct - 3.0f64.sqrt() * 3.0).abs() < 1e-3);
    }

    #[test]
    fn mandel_q_limits() {
        assert_relative_eq!(mandel_q(0.0, 0.3), -1.0, epsilon = 1e-12);
        assert_relative_eq!(mandel_q(10.0, 0.0), 199.0 / 101.0, epsilon = 1e-12);
        // anti-bunching at right-angle approach and large amplitude
        assert!(mandel_q(10.0, std::f64::consts::PI / 2.0) < 0.0);
    }

    #[test]
    fn mandel_q_closed_vs_state_oracle_grid() {
        let space = TruncatedSpace::new(70).unwrap();
        for i in 0..20 {
            let mag = 5.0 * i as f64 / 19.0;
            for j in 0..20 {
                let dt = std::f64::consts::PI * j as f64 / 19.0;
                let alpha = C64::from_polar(mag.max(1e-12), 0.3);
                let spec = NearCollisionSpec::new(
                    alpha,
                    C64::from_polar(1e-3, 0.3 + dt),
                );
                let stats = near_collision_statistics(space, &spec).unwrap();
                let q_state = stats.fluctuation.powi(2) / stats.mean - 1.0;
                let q_closed = mandel_q(mag, dt);
                assert!(
                    (q_state - q_closed).abs() < 1e-3,
                    "Q mismatch at |α|={}, δθ={}: {} vs {}",
                    mag,
                    dt,
                    q_state,
                    q_closed
                );
            }
        }
    }

    #[test]
    fn uncertainty_product_limits() {
        let space = TruncatedSpace::new(40).unwrap();
        let coh = coherent_state(space, c(1.3, -0.4));
        assert_relative_eq!(quadrature_uncertainty(&coh), 1.0 / 16.0, epsilon = 1e-9);
        let one = StateVector::fock(space, 1).unwrap();
        assert_relative_eq!(quadrature_uncertainty(&one), 9.0 / 16.0, epsilon = 1e-12);
        // collision state along the center: 9/16
        let spec = NearCollisionSpec::exact(c(2.0, 0.0), 0.0);
        let state = near_collision_state(space, &spec).unwrap();
        assert!((quadrature_uncertainty(&state) - 9.0 / 16.0).abs() < 1e-3);
    }

    #[test]
    fn uncertainty_product_approaches_coherent_floor() {
        let space = TruncatedSpace::new(180).unwrap();
        let spec = NearCollisionSpec::exact(c(10.0, 0.0), std::f64::consts::PI / 2.0);
        let state = near_collision_state(space, &spec).unwrap();
        let u = quadrature_uncertainty(&state);
        assert!(u > 1.0 / 16.0 - 1e-9 && u < 1.0 / 16.0 + 0.02, "u = {}", u);
    }

    #[test]
    fn uncertainty_product_bounds_over_family() {
        let space = TruncatedSpace::new(70).unwrap();
        for i in 0..10 {
            let mag = 4.0 * i as f64 / 9.0;
            for j in 0..10 {
                let dt = std::f64::consts::PI * j as f64 / 9.0;
                let spec = NearCollisionSpec::exact(C64::from_polar(mag, 1.1), dt);
                let state = near_collision_state(space, &spec).unwrap();
                let u = quadrature_uncertainty(&state);
                assert!(
                    u > 1.0 / 16.0 - 1e-3 && u < 9.0 / 16.0 + 1e-3,
                    "u = {} outside bounds at |α|={}, δθ={}",
                    u,
                    mag,
                    dt
                );
            }
        }
    }

    fn dephasing_sandwich_oracle(space: TruncatedSpace, a0: C64, a1: C64) -> PauliProjection {
        // plain ⟨u_i|n̂|u_j⟩ sandwiches in the phase-aligned frame
        let delta = a0.arg() - a1.arg();
        let phase = C64::from_polar(1.0, delta);
        let v0 = coherent_state(space, a0);
        let v1 = coherent_state(space, a1).scale(phase);
        let plus = v0.add(&v1).unwrap();
        let minus = v0.sub(&v1).unwrap();
        let nhat = |u: &StateVector, v: &StateVector| -> C64 {
            u.amps
                .iter()
                .zip(v.amps.iter())
                .enumerate()
                .map(|(n, (a, b))| a.conj() * b * n as f64)
                .sum()
        };
        let hpp = nhat(&plus, &plus).re;
        let hmm = nhat(&minus, &minus).re;
        let hpm = nhat(&plus, &minus);
        PauliProjection {
            c_i: (hpp + hmm) / 2.0,
            c_x: hpm.re,
            c_y: hpm.im,
            c_z: (hpp - hmm) / 2.0,
        }
    }

    #[test]
    fn dephasing_closed_vs_projector_oracle() {
        let space = TruncatedSpace::new(70).unwrap();
        let a0 = C64::from_polar(3.0, std::f64::consts::PI / 3.0);
        let a1 = c(-2.0, 0.0);
        let closed = dephasing_projection(a0, a1).unwrap();
        let oracle = dephasing_sandwich_oracle(space, a0, a1);
        assert!((closed.c_i - oracle.c_i).abs() < 1e-8);
        assert!((closed.c_x - oracle.c_x).abs() < 1e-8);
        assert!((closed.c_y - oracle.c_y).abs() < 1e-8);
        assert!((closed.c_z - oracle.c_z).abs() < 1e-8);
    }

    #[test]
    fn dephasing_random_pairs_vs_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0011);
        let space = TruncatedSpace::new(70).unwrap();
        for _ in 0..10 {
            let a0 = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            let a1 = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            if (a0 - a1).norm() < 1e-2 || a0.norm() < 1e-2 || a1.norm() < 1e-2 {
                continue;
            }
            let closed = dephasing_projection(a0, a1).unwrap();
            let oracle = dephasing_sandwich_oracle(space, a0, a1);
            assert!((closed.c_i - oracle.c_i).abs() < 1e-8);
            assert!((closed.c_x - oracle.c_x).abs() < 1e-8);
            assert!((closed.c_y - oracle.c_y).abs() < 1e-8);
            assert!((closed.c_z - oracle.c_z).abs() < 1e-8);
            // flip-term triangle bound
            let bound = 2.0 * (a0 * a1).norm() * (-0.5 * (a0 - a1).norm_sqr()).exp();
            assert!(closed.c_y.abs() <= bound + 1e-12);
            assert!(closed.c_z.abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn dephasing_symmetric_pair_immune() {
        let a0 = C64::from_polar(2.0, 0.6);
        let proj = dephasing_projection(a0, -a0).unwrap();
        assert_eq!(proj.c_x, 0.0);
        let bound = 2.0 * a0.norm_sqr() * (-2.0 * a0.norm_sqr()).exp();
        assert!(proj.c_y.abs() <= bound + 1e-15);
        assert!(proj.c_z.abs() <= bound + 1e-15);
    }

    #[test]
    fn dephasing_real_amplitudes() {
        let proj = dephasing_projection(c(3.0, 0.0), c(2.0, 0.0)).unwrap();
        assert_eq!(proj.c_y, 0.0);
        assert_relative_eq!(proj.c_x, 5.0, epsilon = 1e-12);
        assert_relative_eq!(proj.c_i, 13.0, epsilon = 1e-12);
    }

    #[test]
    fn angle_reduction() {
        assert_relative_eq!(
            NearCollisionSpec::exact(c(1.0, 0.0), 3.0 * std::f64::consts::PI)
                .delta_theta,
            std::f64::consts::PI,
            epsilon = 1e-12
        );
        let s = NearCollisionSpec::exact(c(1.0, 0.0), -0.5);
        assert_relative_eq!(s.delta_theta, -0.5, epsilon = 1e-12);
        let s = NearCollisionSpec::exact(c(1.0, 0.0), -std::f64::consts::PI);
        assert_relative_eq!(s.delta_theta, std::f64::consts::PI, epsilon = 1e-12);
    }
}

//! Time evolution along well-motion schedules: fixed-step Schrödinger and
//! Lindblad integrators with adiabaticity monitoring, plus the classical
//! steady-state displacement solver under single-photon loss.

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::cat_states::collision_pair;
use crate::fock_core::{
    coherent_state, husimi_grid_density, C64, DensityMatrix, PhasePoint, StateVector,
    TruncatedSpace,
};
use crate::hamiltonians::{AcsParams, NoiseParams};
use crate::holonomy::PathPiece;
use crate::{Error, Result};

/// Default adiabatic time budget: units of 1/K per unit of well path length.
pub const ADIABATIC_TIME_PER_UNIT: f64 = 100.0;

/// Edge-occupation budget; exceeding it mid-run aborts the integration.
pub const TAIL_BUDGET: f64 = 1e-6;

/// Separation below which the well pair is treated as collided when building
/// the instantaneous ground-manifold frame.
const FRAME_COLLISION_TOL: f64 = 1e-6;

const SEGMENT_CONNECT_TOL: f64 = 1e-9;

/// Motion of one well over a segment.
///
/// A sweep follows its path piece with the arc parameter eased through
/// sin²(πu/2), so every segment begins and ends at rest and chaining segments
/// keeps the well velocity continuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WellMotion {
    Hold { at: PhasePoint },
    Sweep { piece: PathPiece },
}

impl WellMotion {
    pub fn hold(z: C64) -> WellMotion {
        WellMotion::Hold {
            at: PhasePoint::from_complex(z),
        }
    }

    pub fn line(from: C64, to: C64) -> WellMotion {
        if from == to {
            WellMotion::hold(from)
        } else {
            WellMotion::Sweep {
                piece: PathPiece::Line {
                    from: PhasePoint::from_complex(from),
                    to: PhasePoint::from_complex(to),
                },
            }
        }
    }

    pub fn start(&self) -> C64 {
        match self {
            WellMotion::Hold { at } => at.to_complex(),
            WellMotion::Sweep { piece } => piece.start().to_complex(),
        }
    }

    pub fn end(&self) -> C64 {
        match self {
            WellMotion::Hold { at } => at.to_complex(),
            WellMotion::Sweep { piece } => piece.end().to_complex(),
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            WellMotion::Hold { .. } => 0.0,
            WellMotion::Sweep { piece } => piece.length(),
        }
    }

    /// Well position at fractional segment time `u` in [0, 1].
    pub fn at(&self, u: f64) -> C64 {
        match self {
            WellMotion::Hold { at } => at.to_complex(),
            WellMotion::Sweep { piece } => {
                let u = u.clamp(0.0, 1.0);
                let eased = (std::f64::consts::FRAC_PI_2 * u).sin().powi(2);
                piece.point_at(eased).to_complex()
            }
        }
    }

    fn is_finite(&self) -> bool {
        self.start().is_finite()
            && self.end().is_finite()
            && self.at(0.5).is_finite()
            && self.length().is_finite()
    }
}

fn c64_is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// One schedule segment: a duration and the motion of each well over it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub well0: WellMotion,
    pub well1: WellMotion,
}

impl Segment {
    pub fn new(duration: f64, well0: WellMotion, well1: WellMotion) -> Segment {
        Segment {
            duration,
            well0,
            well1,
        }
    }

    pub fn hold(alpha0: C64, alpha1: C64, duration: f64) -> Segment {
        Segment::new(duration, WellMotion::hold(alpha0), WellMotion::hold(alpha1))
    }
}

/// Piecewise well-motion schedule for a stabilized two-well resonator.
///
/// Durations are physical times; with the Kerr coefficient `k` set to 1 they
/// read directly as multiples of 1/K.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    k: f64,
    segments: Vec<Segment>,
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            k: f64,
            segments: Vec<Segment>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Schedule::new(raw.k, raw.segments).map_err(serde::de::Error::custom)
    }
}

impl Schedule {
    /// Validates positive finite durations, finite well coordinates, and
    /// continuity of each well across segment boundaries.
    pub fn new(k: f64, segments: Vec<Segment>) -> Result<Schedule> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::OutOfRange {
                what: format!("Kerr coefficient {k} must be positive"),
            });
        }
        if segments.is_empty() {
            return Err(Error::OutOfRange {
                what: "schedule needs at least one segment".into(),
            });
        }
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.duration.is_finite() && seg.duration > 0.0) {
                return Err(Error::OutOfRange {
                    what: format!("segment {i} duration {} must be positive", seg.duration),
                });
            }
            if !(seg.well0.is_finite() && seg.well1.is_finite()) {
                return Err(Error::OutOfRange {
                    what: format!("segment {i} has non-finite well coordinates"),
                });
            }
            if i > 0 {
                let prev = &segments[i - 1];
                let jump0 = (seg.well0.start() - prev.well0.end()).norm();
                let jump1 = (seg.well1.start() - prev.well1.end()).norm();
                if jump0 > SEGMENT_CONNECT_TOL || jump1 > SEGMENT_CONNECT_TOL {
                    return Err(Error::OutOfRange {
                        what: format!(
                            "segment {i} starts away from segment {} end (jumps {jump0:.2e}, {jump1:.2e})",
                            i - 1
                        ),
                    });
                }
            }
        }
        Ok(Schedule { k, segments })
    }

    /// Static schedule: both wells parked for `duration`.
    pub fn hold(k: f64, alpha0: C64, alpha1: C64, duration: f64) -> Result<Schedule> {
        Schedule::new(k, vec![Segment::hold(alpha0, alpha1, duration)])
    }

    /// Single-segment straight-line transport of both wells.
    pub fn transport(
        k: f64,
        well0: (C64, C64),
        well1: (C64, C64),
        duration: f64,
    ) -> Result<Schedule> {
        Schedule::new(
            k,
            vec![Segment::new(
                duration,
                WellMotion::line(well0.0, well0.1),
                WellMotion::line(well1.0, well1.1),
            )],
        )
    }

    /// Same geometry with every segment duration multiplied by `factor`.
    /// Slowing a schedule down (factor > 1) improves adiabaticity without
    /// changing any holonomy prediction; speeding it up trades fidelity for
    /// wall time.
    pub fn scale_durations(&self, factor: f64) -> Result<Schedule> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::OutOfRange {
                what: format!("duration factor {factor} must be positive"),
            });
        }
        let segments = self
            .segments
            .iter()
            .map(|s| Segment::new(s.duration * factor, s.well0, s.well1))
            .collect();
        Schedule::new(self.k, segments)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Well positions at time `t`, clamped to the schedule's span.
    pub fn wells_at(&self, t: f64) -> (C64, C64) {
        let mut remaining = t;
        for (i, seg) in self.segments.iter().enumerate() {
            if remaining <= seg.duration || i == self.segments.len() - 1 {
                let u = (remaining / seg.duration).clamp(0.0, 1.0);
                return (seg.well0.at(u), seg.well1.at(u));
            }
            remaining -= seg.duration;
        }
        unreachable!("schedule has at least one segment");
    }

    pub fn params_at(&self, t: f64) -> AcsParams {
        let (alpha0, alpha1) = self.wells_at(t);
        AcsParams {
            k: self.k,
            alpha0,
            alpha1,
        }
    }

    /// Largest well amplitude reached over the schedule (sampled densely;
    /// segment motion is monotone along its piece so endpoint + interior
    /// sampling brackets the true maximum tightly).
    pub fn max_amplitude(&self) -> f64 {
        let mut max = 0.0f64;
        for seg in &self.segments {
            for i in 0..=64 {
                let u = i as f64 / 64.0;
                max = max
                    .max(seg.well0.at(u).norm())
                    .max(seg.well1.at(u).norm());
            }
        }
        max
    }

    /// Total well path length, taking the longer-moving well per segment.
    pub fn path_length(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.well0.length().max(s.well1.length()))
            .sum()
    }
}

/// One monitor sample of an evolution run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub t: f64,
    pub energy: f64,
    pub leakage: f64,
    pub fidelity: f64,
}

/// Final state plus the monitor trace sampled along the run.
#[derive(Debug, Clone)]
pub struct EvolutionResult<S> {
    pub final_state: S,
    pub monitor: Vec<MonitorRow>,
}

impl<S> EvolutionResult<S> {
    pub fn final_row(&self) -> &MonitorRow {
        self.monitor.last().expect("monitor always has the t=0 row")
    }
}

/// Renders monitor rows as `t,energy,leakage,fidelity` CSV (12 significant
/// digits, deterministic).
pub fn monitor_to_csv(rows: &[MonitorRow]) -> String {
    let mut out = String::from("t,energy,leakage,fidelity\n");
    for r in rows {
        out.push_str(&format!(
            "{:.11e},{:.11e},{:.11e},{:.11e}\n",
            r.t, r.energy, r.leakage, r.fidelity
        ));
    }
    out
}

/// Serializes a state vector as `{"dim": n, "re": [...], "im": [...]}`.
pub fn state_to_json(v: &StateVector) -> serde_json::Value {
    serde_json::json!({
        "dim": v.dim(),
        "re": v.amps.iter().map(|z| z.re).collect::<Vec<f64>>(),
        "im": v.amps.iter().map(|z| z.im).collect::<Vec<f64>>(),
    })
}

pub fn state_from_json(text: &str) -> Result<StateVector> {
    #[derive(Deserialize)]
    struct Raw {
        dim: usize,
        re: Vec<f64>,
        im: Vec<f64>,
    }
    let raw: Raw = serde_json::from_str(text).map_err(|e| Error::Numerical {
        what: format!("state JSON: {e}"),
    })?;
    if raw.re.len() != raw.dim || raw.im.len() != raw.dim {
        return Err(Error::DimensionMismatch {
            expected: raw.dim,
            actual: raw.re.len().min(raw.im.len()),
        });
    }
    let space = TruncatedSpace::new(raw.dim)?;
    let amps = nalgebra::DVector::from_iterator(
        raw.dim,
        raw.re.iter().zip(&raw.im).map(|(&re, &im)| C64::new(re, im)),
    );
    StateVector::new(space, amps)
}

/// Pentadiagonal coefficients of the normal-ordered well polynomial
/// kerr·â†²â² + number·â†â + [linear·â† + two_photon·â†² + cubic·â†²â + h.c.]
/// + constant. Mirrors the dense assembler used by the Hamiltonian builders
/// so the two routes can be cross-checked.
#[derive(Debug, Clone, Copy)]
struct BandCoeffs {
    kerr: f64,
    number: f64,
    linear: C64,
    two_photon: C64,
    cubic: C64,
    constant: f64,
}

fn acs_bands(p: &AcsParams) -> BandCoeffs {
    let s = p.alpha0 + p.alpha1;
    let prod = p.alpha0 * p.alpha1;
    BandCoeffs {
        kerr: p.k,
        number: p.k * s.norm_sqr(),
        linear: -p.k * prod * s.conj(),
        two_photon: p.k * prod,
        cubic: -p.k * s,
        constant: p.k * prod.norm_sqr(),
    }
}

/// y = H ψ for the banded Hamiltonian, allocation-free.
fn apply_bands(c: &BandCoeffs, psi: &[C64], out: &mut [C64]) {
    let n = psi.len();
    for j in 0..n {
        let jf = j as f64;
        let mut acc = psi[j] * (c.kerr * jf * (jf - 1.0) + c.number * jf + c.constant);
        if j >= 1 {
            let amp = jf.sqrt() * (c.linear + c.cubic * (jf - 1.0));
            acc += amp * psi[j - 1];
        }
        if j + 1 < n {
            let amp = (jf + 1.0).sqrt() * (c.linear + c.cubic * jf);
            acc += amp.conj() * psi[j + 1];
        }
        if j >= 2 {
            acc += ((jf - 1.0) * jf).sqrt() * c.two_photon * psi[j - 2];
        }
        if j + 2 < n {
            acc += (((jf + 1.0) * (jf + 2.0)).sqrt() * c.two_photon).conj() * psi[j + 2];
        }
        out[j] = acc;
    }
}

/// Row-sum (∞-norm) bound on the banded Hamiltonian.
fn band_inf_norm(c: &BandCoeffs, dim: usize) -> f64 {
    let mut max = 0.0f64;
    for j in 0..dim {
        let jf = j as f64;
        let mut row = (c.kerr * jf * (jf - 1.0) + c.number * jf + c.constant).abs();
        if j >= 1 {
            row += jf.sqrt() * (c.linear + c.cubic * (jf - 1.0)).norm();
        }
        if j + 1 < dim {
            row += (jf + 1.0).sqrt() * (c.linear + c.cubic * jf).norm();
        }
        if j >= 2 {
            row += ((jf - 1.0) * jf).sqrt() * c.two_photon.norm();
        }
        if j + 2 < dim {
            row += ((jf + 1.0) * (jf + 2.0)).sqrt() * c.two_photon.norm();
        }
        max = max.max(row);
    }
    max
}

/// Scratch buffers for the fixed-step integrator.
pub struct Rk4Scratch {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4Scratch {
    pub fn new(len: usize) -> Rk4Scratch {
        let zero = vec![C64::new(0.0, 0.0); len];
        Rk4Scratch {
            k1: zero.clone(),
            k2: zero.clone(),
            k3: zero.clone(),
            k4: zero.clone(),
            tmp: zero,
        }
    }
}

/// Advances `state` through `steps` fixed steps of classical fourth-order
/// Runge–Kutta, starting at `t0` with step `dt`. `deriv(t, y, dy)` must write
/// dy/dt into its output slice.
pub fn rk4_span(
    deriv: &mut dyn FnMut(f64, &[C64], &mut [C64]),
    state: &mut [C64],
    t0: f64,
    dt: f64,
    steps: usize,
    scratch: &mut Rk4Scratch,
) {
    let n = state.len();
    for step in 0..steps {
        let t = t0 + step as f64 * dt;
        deriv(t, state, &mut scratch.k1);
        for i in 0..n {
            scratch.tmp[i] = state[i] + 0.5 * dt * scratch.k1[i];
        }
        deriv(t + 0.5 * dt, &scratch.tmp, &mut scratch.k2);
        for i in 0..n {
            scratch.tmp[i] = state[i] + 0.5 * dt * scratch.k2[i];
        }
        deriv(t + 0.5 * dt, &scratch.tmp, &mut scratch.k3);
        for i in 0..n {
            scratch.tmp[i] = state[i] + dt * scratch.k3[i];
        }
        deriv(t + dt, &scratch.tmp, &mut scratch.k4);
        for i in 0..n {
            state[i] += dt / 6.0
                * (scratch.k1[i] + 2.0 * scratch.k2[i] + 2.0 * scratch.k3[i] + scratch.k4[i]);
        }
    }
}

/// Step count keeping the fixed-step integrator inside its stability region
/// for this schedule (and dissipator, when noise is given), with a factor-two
/// safety margin under the RK4 stability edge.
pub fn stable_steps(space: TruncatedSpace, sched: &Schedule, noise: Option<&NoiseParams>) -> usize {
    let dim = space.dim();
    let total = sched.total_time();
    let mut bound = 0.0f64;
    let mut t_cursor = 0.0;
    for seg in sched.segments() {
        for i in 0..=16 {
            let t = t_cursor + seg.duration * i as f64 / 16.0;
            let bands = acs_bands(&sched.params_at(t));
            bound = bound.max(band_inf_norm(&bands, dim));
        }
        t_cursor += seg.duration;
    }
    // Commutator/dissipator scales for the master equation.
    if let Some(n) = noise {
        bound = 2.0 * bound
            + n.kappa * dim as f64
            + 0.5 * n.kappa_phi * ((dim - 1) as f64).powi(2);
    }
    let dt_max = 1.4 / bound.max(1e-12);
    ((total / dt_max).ceil() as usize).max(16)
}

/// Orthonormal frame spanning the instantaneous degenerate ground manifold.
///
/// Away from collision this is the Gram–Schmidt pair built from |α0⟩ ± |α1⟩;
/// within `FRAME_COLLISION_TOL` it switches to the coherent/derivative pair
/// at the midpoint. Frame gauge is arbitrary; the transport below absorbs it.
pub(crate) fn manifold_frame(
    space: TruncatedSpace,
    z0: C64,
    z1: C64,
) -> Result<(StateVector, StateVector)> {
    if (z0 - z1).norm() < FRAME_COLLISION_TOL {
        collision_pair(space, 0.5 * (z0 + z1))
    } else {
        let c0 = coherent_state(space, z0);
        let c1 = coherent_state(space, z1);
        let plus = c0.add(&c1)?.normalized()?;
        let diff = c0.sub(&c1)?;
        let overlap = plus.inner(&diff);
        let perp = diff.sub(&plus.scale(overlap))?;
        Ok((plus, perp.normalized()?))
    }
}

/// Unitary polar factor of a 2×2 matrix via the Newton iteration
/// U ← (U + U⁻†)/2.
pub fn polar_unitary(m: Matrix2<C64>) -> Matrix2<C64> {
    let mut u = m;
    for _ in 0..50 {
        let inv_dag = match u.adjoint().try_inverse() {
            Some(inv) => inv,
            None => return u,
        };
        let next = (u + inv_dag) * C64::new(0.5, 0.0);
        let drift: f64 = (next - u).iter().map(|z| z.norm_sqr()).sum();
        u = next;
        if drift < 1e-30 {
            break;
        }
    }
    u
}

struct ManifoldMonitor {
    frame: (StateVector, StateVector),
    coeffs: Vector2<C64>,
    tracking: bool,
}

impl ManifoldMonitor {
    fn start(space: TruncatedSpace, sched: &Schedule, psi0: &StateVector) -> Result<Self> {
        let (z0, z1) = sched.wells_at(0.0);
        let frame = manifold_frame(space, z0, z1)?;
        let mut coeffs = Vector2::new(frame.0.inner(psi0), frame.1.inner(psi0));
        let weight = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let tracking = weight > 1e-12;
        if tracking {
            coeffs /= C64::new(weight, 0.0);
        } else {
            coeffs = Vector2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        }
        Ok(ManifoldMonitor {
            frame,
            coeffs,
            tracking,
        })
    }

    /// Moves the frame to time `t`, carrying the logical coefficients by the
    /// unitary polar factor of the frame overlap (discrete parallel
    /// transport; the flat ground manifold contributes no dynamical phase).
    fn advance(&mut self, space: TruncatedSpace, sched: &Schedule, t: f64) -> Result<()> {
        let (z0, z1) = sched.wells_at(t);
        let new = manifold_frame(space, z0, z1)?;
        let m = Matrix2::new(
            new.0.inner(&self.frame.0),
            new.0.inner(&self.frame.1),
            new.1.inner(&self.frame.0),
            new.1.inner(&self.frame.1),
        );
        self.coeffs = polar_unitary(m) * self.coeffs;
        self.frame = new;
        Ok(())
    }

    fn target(&self) -> Result<StateVector> {
        self.frame
            .0
            .scale(self.coeffs[0])
            .add(&self.frame.1.scale(self.coeffs[1]))
    }

    fn leakage_of(&self, psi: &StateVector) -> f64 {
        let w = self.frame.0.inner(psi).norm_sqr() + self.frame.1.inner(psi).norm_sqr();
        (1.0 - w).clamp(0.0, 1.0)
    }
}

fn tail_occupation(probs: impl Iterator<Item = f64>, dim: usize) -> (usize, f64) {
    let window = (dim / 16).max(2);
    let start = dim - window;
    let occ = probs.skip(start).sum();
    (start, occ)
}

fn choose_samples(sched: &Schedule, steps: usize) -> usize {
    let wanted = (16.0 * sched.path_length()).ceil() as usize;
    wanted.clamp(256, 4096).min(steps)
}

/// Integrates i dψ/dt = H(t) ψ along the schedule with `steps` fixed
/// Runge–Kutta steps.
///
/// The monitor samples energy ⟨H(t)⟩, leakage out of the instantaneous
/// ground manifold, and fidelity against the parallel-transported image of
/// the initial manifold component. Norm is preserved to integrator accuracy;
/// edge occupation above `TAIL_BUDGET` aborts with the breach time.
pub fn evolve_schrodinger(
    space: TruncatedSpace,
    sched: &Schedule,
    psi0: &StateVector,
    steps: usize,
) -> Result<EvolutionResult<StateVector>> {
    if psi0.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            actual: psi0.dim(),
        });
    }
    if steps == 0 {
        return Err(Error::OutOfRange {
            what: "steps must be positive".into(),
        });
    }
    space.check_adequate(C64::new(sched.max_amplitude(), 0.0))?;

    let dim = space.dim();
    let total = sched.total_time();
    let dt = total / steps as f64;
    let mut psi: Vec<C64> = psi0.amps.iter().copied().collect();
    let mut scratch = Rk4Scratch::new(dim);
    let mut h_psi = vec![C64::new(0.0, 0.0); dim];
    let mut monitor = Vec::new();
    let mut tracker = ManifoldMonitor::start(space, sched, psi0)?;

    let samples = choose_samples(sched, steps);
    let mut deriv = |t: f64, y: &[C64], dy: &mut [C64]| {
        let bands = acs_bands(&sched.params_at(t));
        apply_bands(&bands, y, dy);
        for v in dy.iter_mut() {
            *v *= C64::new(0.0, -1.0);
        }
    };

    let mut record =
        |t: f64, psi: &[C64], tracker: &mut ManifoldMonitor, h_psi: &mut [C64]| -> Result<()> {
            let (_, occ) = tail_occupation(psi.iter().map(|z| z.norm_sqr()), dim);
            if occ > TAIL_BUDGET || !occ.is_finite() {
                return Err(Error::TruncationBreach {
                    time: t,
                    occupation: occ,
                });
            }
            let bands = acs_bands(&sched.params_at(t));
            apply_bands(&bands, psi, h_psi);
            let energy: C64 = psi.iter().zip(h_psi.iter()).map(|(a, b)| a.conj() * b).sum();
            let view = StateVector::new(
                space,
                nalgebra::DVector::from_iterator(dim, psi.iter().copied()),
            )?;
            tracker.advance(space, sched, t)?;
            let leakage = tracker.leakage_of(&view);
            let fidelity = if tracker.tracking {
                tracker.target()?.inner(&view).norm_sqr()
            } else {
                0.0
            };
            monitor.push(MonitorRow {
                t,
                energy: energy.re,
                leakage,
                fidelity,
            });
            Ok(())
        };

    record(0.0, &psi, &mut tracker, &mut h_psi)?;
    let mut done = 0usize;
    for s in 1..=samples {
        let upto = (steps as u64 * s as u64 / samples as u64) as usize;
        let chunk = upto - done;
        rk4_span(&mut deriv, &mut psi, done as f64 * dt, dt, chunk, &mut scratch);
        done = upto;
        record(done as f64 * dt, &psi, &mut tracker, &mut h_psi)?;
    }

    let final_state = StateVector::new(
        space,
        nalgebra::DVector::from_iterator(dim, psi.iter().copied()),
    )?;
    Ok(EvolutionResult {
        final_state,
        monitor,
    })
}

/// Master-equation right-hand side: dρ/dt = −i[H, ρ] + κ D[â]ρ + κφ D[n̂]ρ,
/// acting on column-major flattened ρ. `g` is scratch for Hρ.
fn lindblad_rhs(
    bands: &BandCoeffs,
    noise: &NoiseParams,
    dim: usize,
    rho: &[C64],
    out: &mut [C64],
    g: &mut [C64],
) {
    for c in 0..dim {
        apply_bands(bands, &rho[c * dim..(c + 1) * dim], &mut g[c * dim..(c + 1) * dim]);
    }
    let i = C64::new(0.0, 1.0);
    for c in 0..dim {
        for r in 0..dim {
            let commutator = g[c * dim + r] - g[r * dim + c].conj();
            let mut v = -i * commutator;
            let (rf, cf) = (r as f64, c as f64);
            if noise.kappa != 0.0 {
                let mut dis = -0.5 * (rf + cf) * rho[c * dim + r];
                if r + 1 < dim && c + 1 < dim {
                    dis += ((rf + 1.0) * (cf + 1.0)).sqrt() * rho[(c + 1) * dim + r + 1];
                }
                v += noise.kappa * dis;
            }
            if noise.kappa_phi != 0.0 {
                v += -0.5 * noise.kappa_phi * (rf - cf).powi(2) * rho[c * dim + r];
            }
            out[c * dim + r] = v;
        }
    }
}

/// Integrates the Lindblad master equation with single-photon loss κ and
/// dephasing κφ along the schedule.
///
/// The monitor's fidelity column is the weight remaining in the
/// instantaneous ground manifold (so fidelity = 1 − leakage for mixed
/// states). Trace drift beyond 1e−6 or an edge-occupation breach aborts.
pub fn evolve_lindblad(
    space: TruncatedSpace,
    sched: &Schedule,
    rho0: &DensityMatrix,
    noise: &NoiseParams,
    steps: usize,
) -> Result<EvolutionResult<DensityMatrix>> {
    if rho0.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            actual: rho0.dim(),
        });
    }
    if steps == 0 {
        return Err(Error::OutOfRange {
            what: "steps must be positive".into(),
        });
    }
    space.check_adequate(C64::new(sched.max_amplitude(), 0.0))?;

    let dim = space.dim();
    let total = sched.total_time();
    let dt = total / steps as f64;
    let mut rho: Vec<C64> = rho0.matrix.as_slice().to_vec();
    let mut scratch = Rk4Scratch::new(dim * dim);
    let mut g = vec![C64::new(0.0, 0.0); dim * dim];
    let mut g_mon = vec![C64::new(0.0, 0.0); dim * dim];
    let mut monitor = Vec::new();

    let (z0, z1) = sched.wells_at(0.0);
    let mut frame = manifold_frame(space, z0, z1)?;
    let samples = choose_samples(sched, steps);

    let mut deriv = |t: f64, y: &[C64], dy: &mut [C64]| {
        let bands = acs_bands(&sched.params_at(t));
        lindblad_rhs(&bands, noise, dim, y, dy, &mut g);
    };

    let mut record = |t: f64,
                      rho: &[C64],
                      frame: &(StateVector, StateVector),
                      scratch_h: &mut [C64]|
     -> Result<()> {
        let trace: C64 = (0..dim).map(|j| rho[j * dim + j]).sum();
        if !((trace.re - 1.0).abs() <= 1e-6 && trace.im.abs() <= 1e-6) {
            return Err(Error::Numerical {
                what: format!("trace drift {:.3e} at t = {t:.6}", (trace.re - 1.0).abs()),
            });
        }
        let (_, occ) = tail_occupation((0..dim).map(|j| rho[j * dim + j].re), dim);
        if occ > TAIL_BUDGET || !occ.is_finite() {
            return Err(Error::TruncationBreach {
                time: t,
                occupation: occ,
            });
        }
        let bands = acs_bands(&sched.params_at(t));
        for c in 0..dim {
            apply_bands(
                &bands,
                &rho[c * dim..(c + 1) * dim],
                &mut scratch_h[c * dim..(c + 1) * dim],
            );
        }
        let energy: f64 = (0..dim).map(|j| scratch_h[j * dim + j].re).sum();
        let mut weight = 0.0;
        for f in [&frame.0, &frame.1] {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..dim {
                for r in 0..dim {
                    acc += f.amps[r].conj() * rho[c * dim + r] * f.amps[c];
                }
            }
            weight += acc.re;
        }
        let weight = weight.clamp(0.0, 1.0);
        monitor.push(MonitorRow {
            t,
            energy,
            leakage: 1.0 - weight,
            fidelity: weight,
        });
        Ok(())
    };

    record(0.0, &rho, &frame, &mut g_mon)?;
    let mut done = 0usize;
    for s in 1..=samples {
        let upto = (steps as u64 * s as u64 / samples as u64) as usize;
        let chunk = upto - done;
        rk4_span(&mut deriv, &mut rho, done as f64 * dt, dt, chunk, &mut scratch);
        done = upto;
        let t = done as f64 * dt;
        let (z0, z1) = sched.wells_at(t);
        frame = manifold_frame(space, z0, z1)?;
        record(t, &rho, &frame, &mut g_mon)?;
    }

    // Symmetrize away the integrator's rounding-level Hermiticity drift.
    let mut m = DMatrix::from_iterator(dim, dim, rho.iter().copied());
    let adj = m.adjoint();
    m = (m + adj) * C64::new(0.5, 0.0);
    Ok(EvolutionResult {
        final_state: DensityMatrix::new(space, m)?,
        monitor,
    })
}

/// Outcome of the multi-start steady-state search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateReport {
    /// Converged displacement roots, deduplicated.
    pub roots: Vec<C64>,
    /// |f| residual at each root.
    pub residuals: Vec<f64>,
    /// Seeds whose Newton iteration failed to converge.
    pub failed_seeds: Vec<C64>,
}

const NEWTON_MAX_ITER: usize = 200;
const NEWTON_RESIDUAL: f64 = 1e-10;

/// Classical steady-state displacements of the lossy two-well resonator:
/// roots of f(α) = K(2α* − s*)(α − α0)(α − α1) − iκα/2 with s = α0 + α1,
/// found by Wirtinger–Newton iteration seeded at each well.
///
/// With κ = 0 the wells themselves are exact roots. Seeds that fail to
/// converge within 200 iterations are reported rather than erroring, unless
/// no seed converges at all.
pub fn steady_state_alpha(p: &AcsParams, noise: &NoiseParams) -> Result<SteadyStateReport> {
    let s = p.alpha0 + p.alpha1;
    let f = |a: C64| -> C64 {
        p.k * (2.0 * a.conj() - s.conj()) * (a - p.alpha0) * (a - p.alpha1)
            - C64::new(0.0, 0.5 * noise.kappa) * a
    };
    let mut roots: Vec<C64> = Vec::new();
    let mut residuals: Vec<f64> = Vec::new();
    let mut failed: Vec<C64> = Vec::new();

    for &seed in &[p.alpha0, p.alpha1] {
        let mut a = seed;
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let val = f(a);
            if val.norm() <= NEWTON_RESIDUAL {
                converged = true;
                break;
            }
            // Wirtinger pair: ∂f/∂α and ∂f/∂α*.
            let fa = p.k * (2.0 * a.conj() - s.conj()) * (2.0 * a - s)
                - C64::new(0.0, 0.5 * noise.kappa);
            let fab = 2.0 * p.k * (a - p.alpha0) * (a - p.alpha1);
            let det = fa.norm_sqr() - fab.norm_sqr();
            if det.abs() < 1e-300 {
                break;
            }
            let delta = (-val * fa.conj() + fab * val.conj()) / det;
            a += delta;
            if !c64_is_finite(a) {
                break;
            }
        }
        if converged && f(a).norm() <= NEWTON_RESIDUAL {
            if !roots.iter().any(|r| (r - a).norm() < 1e-8) {
                roots.push(a);
                residuals.push(f(a).norm());
            }
        } else {
            failed.push(seed);
        }
    }
    if roots.is_empty() {
        return Err(Error::NonConvergence {
            what: "steady-state Newton search".into(),
            iterations: NEWTON_MAX_ITER,
        });
    }
    Ok(SteadyStateReport {
        roots,
        residuals,
        failed_seeds: failed,
    })
}

/// Local maxima of the Husimi function on a centered square grid, strongest
/// first. Grid resolution bounds the position error by ~`step`.
pub fn husimi_peaks(
    rho: &DensityMatrix,
    half_width: f64,
    step: f64,
    count: usize,
) -> Result<Vec<PhasePoint>> {
    if !(half_width > 0.0 && step > 0.0 && step < half_width) {
        return Err(Error::OutOfRange {
            what: "husimi_peaks needs 0 < step < half_width".into(),
        });
    }
    let n = (2.0 * half_width / step).round() as usize + 1;
    let axis: Vec<f64> = (0..n).map(|i| -half_width + i as f64 * step).collect();
    let q = husimi_grid_density(rho, &axis, &axis)?;
    let idx = |ix: usize, ip: usize| ip * n + ix;
    let mut peaks: Vec<(f64, PhasePoint)> = Vec::new();
    for ip in 1..n - 1 {
        for ix in 1..n - 1 {
            let v = q[idx(ix, ip)];
            let mut is_peak = true;
            for dp in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dp == 0 && dx == 0 {
                        continue;
                    }
                    let w = q[idx((ix as i64 + dx) as usize, (ip as i64 + dp) as usize)];
                    if w >= v {
                        is_peak = false;
                    }
                }
            }
            if is_peak {
                peaks.push((v, PhasePoint::new(axis[ix], axis[ip])));
            }
        }
    }
    peaks.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    Ok(peaks.into_iter().take(count).map(|(_, p)| p).collect())
}

//! Compilation of cat-state preparation and logical gates into well-motion
//! schedules, with closed-form prediction of the induced code-space map.
//!
//! The code frame for one logical qubit is the even/odd cat pair at wells
//! (+α, −α). Every compiled schedule is chained from four leg types, each
//! with an exactly known transport action on that pair:
//!
//! - motion of coincident wells (the collision transport of [`holonomy`]),
//! - a symmetric merge of separated wells into their midpoint,
//! - the reverse symmetric reopening,
//! - motion of well-separated lobes, which contributes one phase integral
//!   ∫ P dX − X dP per lobe.
//!
//! Composing the actions segment by segment gives [`schedule_code_unitary`];
//! the `compile_*` constructors additionally carry the closed-form target
//! rotation and refuse to return a gate whose composed prediction drifts
//! from it. [`transported_code_unitary`] rebuilds the same map from raw
//! frame overlaps and serves as the independent cross-check.
//!
//! [`holonomy`]: crate::holonomy

use crate::cat_states::{acs_minus, acs_plus};
use crate::dynamics::{
    evolve_schrodinger, manifold_frame, polar_unitary, rk4_span, stable_steps, Rk4Scratch,
    Schedule, Segment, WellMotion, ADIABATIC_TIME_PER_UNIT,
};
use crate::fock_core::coherent_state;
use crate::hamiltonians::{ControlApplier, MultiQubitSpec};
use crate::holonomy::{collision_holonomy, Mat2, PathPiece, PhasePath};
use crate::{C64, Error, PhasePoint, Result, StateVector, TruncatedSpace};
use nalgebra::{DMatrix, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Wells closer than this count as coincident when classifying legs.
const COINCIDENT_TOL: f64 = 1e-9;

/// Shortest emitted segment, so degenerate legs stay integrable.
const MIN_SEGMENT_TIME: f64 = 1.0;

/// Separated-lobe transport is refused below this well distance; closer
/// than that the lobes hybridize and the per-lobe phase picture stops
/// describing the frame.
const APART_MIN_SEPARATION: f64 = 1.0;

/// Agreement demanded between the leg-composed prediction and the
/// closed-form rotation of every compiled gate.
const PREDICTION_TOL: f64 = 1e-10;

/// Wraps an angle into (−π, π].
pub fn wrap_to_pi(x: f64) -> f64 {
    let mut y = x % TAU;
    if y > PI {
        y -= TAU;
    } else if y <= -PI {
        y += TAU;
    }
    y
}

/// R_x(θ) on the code pair: [[cos θ/2, −i sin θ/2], [−i sin θ/2, cos θ/2]].
pub fn rx_matrix(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    Mat2::new(
        C64::new(c, 0.0),
        C64::new(0.0, -s),
        C64::new(0.0, -s),
        C64::new(c, 0.0),
    )
}

/// R_y(λ) on the code pair: [[cos λ/2, −sin λ/2], [sin λ/2, cos λ/2]].
pub fn ry_matrix(lambda: f64) -> Mat2 {
    let (s, c) = (0.5 * lambda).sin_cos();
    Mat2::new(
        C64::new(c, 0.0),
        C64::new(-s, 0.0),
        C64::new(s, 0.0),
        C64::new(c, 0.0),
    )
}

/// R_z(φ) on the code pair: diag(e^{−iφ/2}, e^{iφ/2}).
pub fn rz_matrix(phi: f64) -> Mat2 {
    Mat2::new(
        C64::from_polar(1.0, -0.5 * phi),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::from_polar(1.0, 0.5 * phi),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateName {
    Rz,
    Rx,
    Ry,
    RzRy,
    Cu,
}

impl std::fmt::Display for GateName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GateName::Rz => "rz",
            GateName::Rx => "rx",
            GateName::Ry => "ry",
            GateName::RzRy => "rzry",
            GateName::Cu => "cu",
        })
    }
}

/// A compiled logical gate: the emitted well schedule plus the code-space
/// rotation it implements.
#[derive(Debug, Clone)]
pub struct CompiledGate {
    pub name: GateName,
    /// Rotation angles in the order the constructor takes them.
    pub params: Vec<f64>,
    /// Code-frame lobe amplitude; the wells idle at ±alpha on the X axis.
    pub alpha: f64,
    /// Target-mode schedule. Times are in units of 1/K (k is set to 1).
    pub schedule: Schedule,
    /// Selector context for controlled gates; the control wells stay pinned
    /// at (alpha0, alpha1) while the schedule drives the active branch.
    pub control: Option<MultiQubitSpec>,
    /// Canonical rotation in the code basis. Controlled gates store the
    /// branch-resolved 4×4 block matrix with the tracked phase folded into
    /// the active branch, since there it is relative and observable.
    pub predicted_unitary: DMatrix<C64>,
    /// Phase by which the transported frame leads `predicted_unitary`,
    /// reduced to (−π, π].
    pub global_phase: f64,
}

impl CompiledGate {
    pub fn total_time(&self) -> f64 {
        self.schedule.total_time()
    }

    /// Prediction including the tracked global phase.
    pub fn physical_unitary(&self) -> DMatrix<C64> {
        &self.predicted_unitary * C64::from_polar(1.0, self.global_phase)
    }

    /// Same gate with every leg slowed down (factor > 1) or sped up.
    pub fn with_time_scale(&self, factor: f64) -> Result<CompiledGate> {
        let mut out = self.clone();
        out.schedule = self.schedule.scale_durations(factor)?;
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let u = &self.predicted_unitary;
        let rows: Vec<Vec<[f64; 2]>> = (0..u.nrows())
            .map(|i| (0..u.ncols()).map(|j| [u[(i, j)].re, u[(i, j)].im]).collect())
            .collect();
        serde_json::json!({
            "gate": self.name,
            "params": self.params,
            "alpha": self.alpha,
            "global_phase": self.global_phase,
            "total_time": self.total_time(),
            "predicted_unitary": rows,
            "control": self.control,
            "schedule": self.schedule,
        })
    }
}

fn motion_phase(w: &WellMotion) -> f64 {
    match w {
        WellMotion::Hold { .. } => 0.0,
        WellMotion::Sweep { piece } => piece.phase_integral(),
    }
}

fn line_piece(from: C64, to: C64) -> PathPiece {
    PathPiece::Line {
        from: PhasePoint::from_complex(from),
        to: PhasePoint::from_complex(to),
    }
}

/// Transport action of per-lobe phases, written in the cat basis:
/// H diag(e^{iφ0}, e^{iφ1}) H with H the lobe↔cat Hadamard.
fn cat_frame_diag(phi0: f64, phi1: f64) -> Mat2 {
    let e0 = C64::from_polar(1.0, phi0);
    let e1 = C64::from_polar(1.0, phi1);
    let half = C64::new(0.5, 0.0);
    let s = half * (e0 + e1);
    let d = half * (e0 - e1);
    Mat2::new(s, d, d, s)
}

/// diag(1, u). The odd cat limits to e^{iθ_u}|1⟩ along the approach
/// direction u = e^{iθ_u}, so crossing between the cat and collision
/// descriptions multiplies the odd component by u (or its conjugate on the
/// way back out).
fn minus_branch_phase(u: C64) -> Mat2 {
    Mat2::new(
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        u,
    )
}

struct RadialLeg {
    direction: C64,
    phi0: f64,
    phi1: f64,
}

fn require_line(w: &WellMotion) -> Result<()> {
    match w {
        WellMotion::Sweep {
            piece: PathPiece::Line { .. },
        } => Ok(()),
        _ => Err(Error::Numerical {
            what: "merge and reopening legs must be straight radial lines".into(),
        }),
    }
}

/// Validates and summarizes a merge (or, mirrored, a reopening) segment:
/// both wells must travel straight lines symmetric about the junction.
fn radial_leg(seg: &Segment, merging: bool) -> Result<RadialLeg> {
    require_line(&seg.well0)?;
    require_line(&seg.well1)?;
    let (apart0, apart1, joint) = if merging {
        (
            seg.well0.start(),
            seg.well1.start(),
            0.5 * (seg.well0.end() + seg.well1.end()),
        )
    } else {
        (
            seg.well0.end(),
            seg.well1.end(),
            0.5 * (seg.well0.start() + seg.well1.start()),
        )
    };
    let radial = apart0 - joint;
    let r = radial.norm();
    let mirror_defect = (apart1 - (joint - radial)).norm();
    if r < COINCIDENT_TOL || mirror_defect > 1e-7 {
        return Err(Error::Numerical {
            what: format!(
                "merge/reopening legs must move the wells symmetrically about their junction (asymmetry {mirror_defect:.3e})"
            ),
        });
    }
    Ok(RadialLeg {
        direction: radial / C64::new(r, 0.0),
        phi0: motion_phase(&seg.well0),
        phi1: motion_phase(&seg.well1),
    })
}

/// Code-basis transport unitary of a schedule, composed leg by leg.
///
/// The schedule must start and end with separated wells; merges, coincident
/// motion and reopenings are allowed in between. Separated legs must keep
/// the wells outside the lobe-overlap window except while merging.
pub fn schedule_code_unitary(sched: &Schedule) -> Result<Mat2> {
    let segs = sched.segments();
    let first = &segs[0];
    let last = &segs[segs.len() - 1];
    let start_sep = (first.well0.start() - first.well1.start()).norm();
    let end_sep = (last.well0.end() - last.well1.end()).norm();
    if start_sep < COINCIDENT_TOL || end_sep < COINCIDENT_TOL {
        return Err(Error::OutOfRange {
            what: "code-space prediction needs the schedule to start and end with separated wells"
                .into(),
        });
    }

    let mut u = Mat2::identity();
    let mut collided = false;
    for seg in segs {
        let s0 = (seg.well0.start() - seg.well1.start()).norm() < COINCIDENT_TOL;
        let s1 = (seg.well0.end() - seg.well1.end()).norm() < COINCIDENT_TOL;
        if s0 != collided {
            return Err(Error::Numerical {
                what: "segment collision state is inconsistent with the previous leg".into(),
            });
        }
        match (s0, s1) {
            (true, true) => {
                if seg.well0 != seg.well1 {
                    return Err(Error::Numerical {
                        what: "coincident wells must share one motion".into(),
                    });
                }
                if let WellMotion::Sweep { piece } = seg.well0 {
                    let path = PhasePath::new(vec![piece])?;
                    u = collision_holonomy(&path).unitary * u;
                }
            }
            (false, true) => {
                let leg = radial_leg(seg, true)?;
                u = minus_branch_phase(leg.direction) * cat_frame_diag(leg.phi0, leg.phi1) * u;
                collided = true;
            }
            (true, false) => {
                let leg = radial_leg(seg, false)?;
                u = cat_frame_diag(leg.phi0, leg.phi1)
                    * minus_branch_phase(leg.direction.conj())
                    * u;
                collided = false;
            }
            (false, false) => {
                for j in 0..=32 {
                    let f = j as f64 / 32.0;
                    let sep = (seg.well0.at(f) - seg.well1.at(f)).norm();
                    if sep < APART_MIN_SEPARATION {
                        return Err(Error::Numerical {
                            what: format!(
                                "wells approach to {sep:.3} mid-segment; separated-lobe transport needs them apart"
                            ),
                        });
                    }
                }
                u = cat_frame_diag(motion_phase(&seg.well0), motion_phase(&seg.well1)) * u;
            }
        }
    }
    Ok(u)
}

/// Leg-composed prediction for a single-qubit gate.
pub fn predict_unitary(gate: &CompiledGate) -> Result<Mat2> {
    if gate.control.is_some() {
        return Err(Error::OutOfRange {
            what: "controlled gates carry a branch-resolved prediction; read predicted_unitary"
                .into(),
        });
    }
    schedule_code_unitary(&gate.schedule)
}

/// Rebuilds the code-space map by accumulating polar-projected overlaps of
/// the instantaneous ground-manifold frame at `samples` points along the
/// schedule. Shares nothing with the closed-form leg composition, so it is
/// the independent route; it converges to the same map as `samples` grows.
pub fn transported_code_unitary(
    space: TruncatedSpace,
    sched: &Schedule,
    samples: usize,
) -> Result<Mat2> {
    if samples < 2 {
        return Err(Error::OutOfRange {
            what: "frame transport needs at least two samples".into(),
        });
    }
    let total = sched.total_time();
    let frame_at = |t: f64| -> Result<(StateVector, StateVector)> {
        let (z0, z1) = sched.wells_at(t);
        manifold_frame(space, z0, z1)
    };
    let mut prev = frame_at(0.0)?;
    let mut u = Mat2::identity();
    for j in 1..=samples {
        let cur = frame_at(total * j as f64 / samples as f64)?;
        let overlap = Mat2::new(
            cur.0.inner(&prev.0),
            cur.0.inner(&prev.1),
            cur.1.inner(&prev.0),
            cur.1.inner(&prev.1),
        );
        u = polar_unitary(overlap) * u;
        prev = cur;
    }
    Ok(u)
}

fn leg_duration(len: f64) -> f64 {
    (ADIABATIC_TIME_PER_UNIT * len).max(MIN_SEGMENT_TIME)
}

#[derive(Default)]
struct ScheduleBuilder {
    segments: Vec<Segment>,
}

impl ScheduleBuilder {
    fn lines(&mut self, from0: C64, to0: C64, from1: C64, to1: C64) {
        let len = (to0 - from0).norm().max((to1 - from1).norm());
        if len < COINCIDENT_TOL {
            return;
        }
        self.segments.push(Segment::new(
            leg_duration(len),
            WellMotion::line(from0, to0),
            WellMotion::line(from1, to1),
        ));
    }

    fn collided_line(&mut self, from: C64, to: C64) {
        let len = (to - from).norm();
        if len < COINCIDENT_TOL {
            return;
        }
        let motion = WellMotion::line(from, to);
        self.segments
            .push(Segment::new(leg_duration(len), motion, motion));
    }

    /// Both lobes swing about `center`; the second sits π ahead in angle.
    fn arcs(&mut self, center: C64, radius: f64, from_angle: f64, to_angle: f64) {
        let sweep = (to_angle - from_angle).abs();
        if radius * sweep < COINCIDENT_TOL {
            return;
        }
        let c = PhasePoint::from_complex(center);
        let well0 = WellMotion::Sweep {
            piece: PathPiece::Arc {
                center: c,
                radius,
                start_angle: from_angle,
                end_angle: to_angle,
            },
        };
        let well1 = WellMotion::Sweep {
            piece: PathPiece::Arc {
                center: c,
                radius,
                start_angle: from_angle + PI,
                end_angle: to_angle + PI,
            },
        };
        self.segments
            .push(Segment::new(leg_duration(radius * sweep), well0, well1));
    }

    fn build(mut self, idle0: C64, idle1: C64) -> Result<Schedule> {
        if self.segments.is_empty() {
            self.segments
                .push(Segment::hold(idle0, idle1, MIN_SEGMENT_TIME));
        }
        Schedule::new(1.0, self.segments)
    }
}

fn check_gate_inputs(params: &[f64], alpha: f64) -> Result<()> {
    for p in params {
        if !p.is_finite() {
            return Err(Error::OutOfRange {
                what: format!("rotation angle {p} must be finite"),
            });
        }
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::OutOfRange {
            what: format!("lobe amplitude {alpha} must be positive"),
        });
    }
    if 2.0 * alpha <= APART_MIN_SEPARATION {
        return Err(Error::OutOfRange {
            what: format!(
                "lobe amplitude {alpha} leaves the idle wells inside the overlap window; need 2 alpha > {APART_MIN_SEPARATION}"
            ),
        });
    }
    Ok(())
}

fn dmat2(m: &Mat2) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

fn finish_single(
    name: GateName,
    params: Vec<f64>,
    alpha: f64,
    builder: ScheduleBuilder,
    canonical: Mat2,
) -> Result<CompiledGate> {
    let a = C64::new(alpha, 0.0);
    let schedule = builder.build(a, -a)?;
    let physical = schedule_code_unitary(&schedule)?;
    let gamma = (canonical.adjoint() * physical).trace().arg();
    let expected = canonical * C64::from_polar(1.0, gamma);
    let defect = (physical - expected)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if defect > PREDICTION_TOL {
        return Err(Error::Numerical {
            what: format!("transport prediction strays {defect:.3e} from the {name} closed form"),
        });
    }
    Ok(CompiledGate {
        name,
        params,
        alpha,
        schedule,
        control: None,
        predicted_unitary: dmat2(&canonical),
        global_phase: gamma,
    })
}

/// Merge the wells along the code axis, reopen along angle −φ, then swing
/// the frame back: diag(e^{−iφ/2}, e^{iφ/2}) with tracked phase φ/2 − α²φ.
pub fn compile_rz(phi: f64, alpha: f64) -> Result<CompiledGate> {
    check_gate_inputs(&[phi], alpha)?;
    fused_rz_ry(GateName::Rz, vec![phi], phi, 0.0, alpha, rz_matrix(phi))
}

/// Closed square loops of area θ/4, traversed with opposite orientation by
/// the two lobes, so they pick up phases ∓θ/2.
pub fn compile_rx(theta: f64, alpha: f64) -> Result<CompiledGate> {
    check_gate_inputs(&[theta], alpha)?;
    if theta < 0.0 {
        return Err(Error::OutOfRange {
            what: format!("loop area needs theta >= 0, got {theta}"),
        });
    }
    let side = (theta / 4.0).sqrt();
    let mut b = ScheduleBuilder::default();
    if side > 0.0 {
        let a = C64::new(alpha, 0.0);
        let dx = C64::new(side, 0.0);
        let dp = C64::new(0.0, side);
        let loop0 = [a, a + dx, a + dx + dp, a + dp, a];
        for w in loop0.windows(2) {
            b.lines(w[0], w[1], -w[0].conj(), -w[1].conj());
        }
    }
    finish_single(GateName::Rx, vec![theta], alpha, b, rx_matrix(theta))
}

/// Merge, slide the coincident wells by −λ/2 along X, reopen about the
/// offset, slide the frame back: R_y(λ) with zero tracked phase.
pub fn compile_ry(lambda: f64, alpha: f64) -> Result<CompiledGate> {
    check_gate_inputs(&[lambda], alpha)?;
    fused_rz_ry(GateName::Ry, vec![lambda], 0.0, lambda, alpha, ry_matrix(lambda))
}

/// Fused R_z(φ)·R_y(λ): one merge/reopen pair serves both rotations, which
/// is two radial legs shorter than compiling them separately. The lobe
/// phases ±λα sin φ picked up while reopening about the offset cancel
/// exactly against the swing back, leaving the tracked phase φ/2 − α²φ.
pub fn compile_rzry(phi: f64, lambda: f64, alpha: f64) -> Result<CompiledGate> {
    check_gate_inputs(&[phi, lambda], alpha)?;
    fused_rz_ry(
        GateName::RzRy,
        vec![phi, lambda],
        phi,
        lambda,
        alpha,
        rz_matrix(phi) * ry_matrix(lambda),
    )
}

fn fused_rz_ry(
    name: GateName,
    params: Vec<f64>,
    phi: f64,
    lambda: f64,
    alpha: f64,
    canonical: Mat2,
) -> Result<CompiledGate> {
    let a = C64::new(alpha, 0.0);
    let zero = C64::new(0.0, 0.0);
    let c = C64::new(-0.5 * lambda, 0.0);
    let dir = C64::from_polar(alpha, -phi);
    let mut b = ScheduleBuilder::default();
    b.lines(a, zero, -a, zero);
    b.collided_line(zero, c);
    b.lines(c, c + dir, c, c - dir);
    b.arcs(c, alpha, -phi, 0.0);
    b.lines(c + a, a, c - a, -a);
    finish_single(name, params, alpha, b, canonical)
}

/// Cat parity of a preparation target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CatParity {
    Plus,
    Minus,
}

impl CatParity {
    /// Relative lobe phase the prepared state must carry.
    pub fn target_phase(self) -> f64 {
        match self {
            CatParity::Plus => 0.0,
            CatParity::Minus => PI,
        }
    }
}

/// A compiled preparation path from vacuum to a two-well cat.
#[derive(Debug, Clone)]
pub struct PreparationPlan {
    pub parity: CatParity,
    pub alpha0: C64,
    pub alpha1: C64,
    /// Direction angle of the initial collision displacement.
    pub theta: f64,
    /// Length of the collision displacement.
    pub h1: f64,
    /// Perpendicular distance from the origin to the target well line.
    pub h2: f64,
    /// Winding index selected for the phase condition.
    pub winding: i64,
    pub schedule: Schedule,
    /// Relative lobe phase the plan realizes, reduced to (−π, π]; equals
    /// the parity's target phase when the plan is consistent.
    pub predicted_phase: f64,
}

impl PreparationPlan {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "parity": self.parity,
            "alpha0": [self.alpha0.re, self.alpha0.im],
            "alpha1": [self.alpha1.re, self.alpha1.im],
            "theta": self.theta,
            "h1": self.h1,
            "h2": self.h2,
            "winding": self.winding,
            "predicted_phase": self.predicted_phase,
            "total_time": self.schedule.total_time(),
            "schedule": self.schedule,
        })
    }
}

/// Relative lobe phase Φ(h1) accumulated by the three-leg preparation with
/// collision displacement h1·θ̂: the prepared state is |α0'⟩ + e^{iΦ}|α1'⟩
/// up to normalization and a global phase. Exactly linear in h1.
fn prep_transport_phase(h1: f64, theta_hat: C64, u_hat: C64, rho: f64, mid: C64) -> Result<f64> {
    let zero = C64::new(0.0, 0.0);
    let r = theta_hat * C64::new(h1, 0.0);
    let start = if h1 > COINCIDENT_TOL {
        let u = collision_holonomy(&PhasePath::new(vec![line_piece(zero, r)])?).unitary;
        u * Vector2::new(C64::new(1.0, 0.0), zero)
    } else {
        Vector2::new(C64::new(1.0, 0.0), zero)
    };
    let arm = u_hat * C64::new(rho, 0.0);
    let open0 = line_piece(r, r + arm);
    let open1 = line_piece(r, r - arm);
    let reopen = cat_frame_diag(open0.phase_integral(), open1.phase_integral())
        * minus_branch_phase(u_hat.conj());
    let delta = mid - r;
    let (t0, t1) = if delta.norm() > COINCIDENT_TOL {
        (
            line_piece(r + arm, r + arm + delta).phase_integral(),
            line_piece(r - arm, r - arm + delta).phase_integral(),
        )
    } else {
        (0.0, 0.0)
    };
    let cat = cat_frame_diag(t0, t1) * reopen * start;
    let lobe0 = cat[0] + cat[1];
    let lobe1 = cat[0] - cat[1];
    debug_assert!((lobe0.norm() - lobe1.norm()).abs() < 1e-9);
    Ok((lobe1 * lobe0.conj()).arg())
}

/// Plans a vacuum-to-cat preparation: a collision displacement along the
/// perpendicular foot direction, a symmetric reopening parallel to the
/// target well line, and a rigid slide onto the targets. The displacement
/// length is solved from the requirement that the total relative lobe phase
/// land on the parity's value.
pub fn plan_preparation(alpha0: C64, alpha1: C64, parity: CatParity) -> Result<PreparationPlan> {
    for z in [alpha0, alpha1] {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::OutOfRange {
                what: "target wells must be finite".into(),
            });
        }
    }
    let d = alpha0 - alpha1;
    let d_norm = d.norm();
    if d_norm < 1e-12 {
        return Err(Error::DegenerateTarget);
    }
    let u_hat = d / C64::new(d_norm, 0.0);
    let mid = 0.5 * (alpha0 + alpha1);
    let along = (u_hat.conj() * mid).re;
    let foot = mid - u_hat * C64::new(along, 0.0);
    let h2 = foot.norm();
    let theta_hat = if h2 > 1e-12 {
        foot / C64::new(h2, 0.0)
    } else {
        C64::i() * u_hat
    };
    let s_or = (u_hat.conj() * theta_hat).im;
    if (s_or.abs() - 1.0).abs() > 1e-9 {
        return Err(Error::Numerical {
            what: "collision displacement direction failed to come out perpendicular".into(),
        });
    }
    let rho = 0.5 * d_norm;

    let phase_of = |h1: f64| prep_transport_phase(h1, theta_hat, u_hat, rho, mid);
    let base = phase_of(0.0)?;
    let probe = 0.05;
    let slope = wrap_to_pi(phase_of(probe)? - base) / probe;

    // The law is exactly linear; make sure the measured coefficients agree
    // with their closed forms before solving.
    let base_cf = s_or * d_norm * h2;
    let slope_cf = 2.0 * s_or * (1.0 - d_norm);
    if wrap_to_pi(base - base_cf).abs() > 1e-7 || (slope - slope_cf).abs() > 1e-7 {
        return Err(Error::Numerical {
            what: "transport phase law disagrees with its closed form".into(),
        });
    }

    let target = parity.target_phase();
    let (h1, winding) = if slope.abs() < 1e-9 {
        if wrap_to_pi(base - target).abs() < 1e-9 {
            (0.0, 0)
        } else {
            return Err(Error::Infeasible {
                constraint: format!(
                    "phase condition cannot be steered at well separation {d_norm:.6}; its displacement coefficient 2(1 − |α0 − α1|) vanishes"
                ),
            });
        }
    } else {
        let mut best: Option<(f64, i64)> = None;
        let mut best_cost = f64::INFINITY;
        for k in -16..=16i64 {
            let cand = (target - base + TAU * k as f64) / slope;
            if cand < -1e-9 {
                continue;
            }
            let cand = cand.max(0.0);
            let cost = cand + (mid - theta_hat * C64::new(cand, 0.0)).norm();
            if cost < best_cost - 1e-12 {
                best = Some((cand, k));
                best_cost = cost;
            }
        }
        best.ok_or(Error::Infeasible {
            constraint: "no nonnegative collision displacement satisfies the phase condition in the winding window"
                .into(),
        })?
    };

    if slope.abs() >= 1e-9 {
        let closed_form_gap = (-16..=16i64)
            .map(|k| ((target - base_cf + TAU * k as f64) / slope_cf - h1).abs())
            .fold(f64::INFINITY, f64::min);
        if closed_form_gap > 1e-9 {
            return Err(Error::Numerical {
                what: format!(
                    "winding solve drifted {closed_form_gap:.3e} from the closed-form candidate"
                ),
            });
        }
    }

    let achieved = phase_of(h1)?;
    if wrap_to_pi(achieved - target).abs() > 1e-6 {
        return Err(Error::Numerical {
            what: "solved displacement misses the parity phase".into(),
        });
    }

    let zero = C64::new(0.0, 0.0);
    let r = theta_hat * C64::new(h1, 0.0);
    let arm = u_hat * C64::new(rho, 0.0);
    let mut b = ScheduleBuilder::default();
    b.collided_line(zero, r);
    b.lines(r, r + arm, r, r - arm);
    b.lines(r + arm, alpha0, r - arm, alpha1);
    let schedule = Schedule::new(1.0, b.segments)?;

    Ok(PreparationPlan {
        parity,
        alpha0,
        alpha1,
        theta: theta_hat.arg(),
        h1,
        h2,
        winding,
        schedule,
        predicted_phase: wrap_to_pi(achieved),
    })
}

/// Straight simultaneous ramp of both wells from the origin to the targets
/// under the same time-budget rule as the planned path. Reference
/// comparator; it ignores the phase condition.
pub fn naive_ramp_schedule(alpha0: C64, alpha1: C64) -> Result<Schedule> {
    if (alpha0 - alpha1).norm() < 1e-12 {
        return Err(Error::DegenerateTarget);
    }
    let zero = C64::new(0.0, 0.0);
    let len = alpha0.norm().max(alpha1.norm());
    Schedule::transport(1.0, (zero, alpha0), (zero, alpha1), leg_duration(len))
}

/// Embeds a compiled single-qubit gate as the active branch of a two-mode
/// selector: the control wells stay at (alpha0, alpha1), the held target
/// frame is (alpha4, alpha5), and the schedule drives the branch wells.
pub fn compile_controlled(gate: &CompiledGate, spec: &MultiQubitSpec) -> Result<CompiledGate> {
    if gate.control.is_some() {
        return Err(Error::OutOfRange {
            what: "nested controlled gates are not supported".into(),
        });
    }
    spec.validate()?;
    let segs = gate.schedule.segments();
    let start = (segs[0].well0.start(), segs[0].well1.start());
    let end = (
        segs[segs.len() - 1].well0.end(),
        segs[segs.len() - 1].well1.end(),
    );
    for (w, held) in [start, end]
        .iter()
        .flat_map(|p| [(p.0, spec.alpha4), (p.1, spec.alpha5)])
    {
        if (w - held).norm() > 1e-9 {
            return Err(Error::Infeasible {
                constraint: "target schedule must start and end at the held frame (alpha4, alpha5)"
                    .into(),
            });
        }
    }
    let mut u4 = DMatrix::<C64>::identity(4, 4);
    let branch = C64::from_polar(1.0, gate.global_phase);
    for i in 0..2 {
        for j in 0..2 {
            u4[(2 + i, 2 + j)] = branch * gate.predicted_unitary[(i, j)];
        }
    }
    let mut snapshot = *spec;
    snapshot.alpha2 = start.0;
    snapshot.alpha3 = start.1;
    Ok(CompiledGate {
        name: GateName::Cu,
        params: gate.params.clone(),
        alpha: gate.alpha,
        schedule: gate.schedule.clone(),
        control: Some(snapshot),
        predicted_unitary: u4,
        global_phase: 0.0,
    })
}

/// One gate request as accepted on the command line and in job files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateRequest {
    pub gate: GateName,
    pub params: Vec<f64>,
    #[serde(default = "default_request_alpha")]
    pub alpha: f64,
}

fn default_request_alpha() -> f64 {
    2.0
}

pub fn compile_request(req: &GateRequest) -> Result<CompiledGate> {
    let need = match req.gate {
        GateName::Rz | GateName::Rx | GateName::Ry => 1,
        GateName::RzRy => 2,
        GateName::Cu => {
            return Err(Error::OutOfRange {
                what: "controlled gates take an explicit selector specification".into(),
            })
        }
    };
    if req.params.len() != need {
        return Err(Error::OutOfRange {
            what: format!(
                "{} takes {} parameter(s), got {}",
                req.gate,
                need,
                req.params.len()
            ),
        });
    }
    match req.gate {
        GateName::Rz => compile_rz(req.params[0], req.alpha),
        GateName::Rx => compile_rx(req.params[0], req.alpha),
        GateName::Ry => compile_ry(req.params[0], req.alpha),
        GateName::RzRy => compile_rzry(req.params[0], req.params[1], req.alpha),
        GateName::Cu => unreachable!(),
    }
}

pub fn compile_request_json(text: &str) -> Result<CompiledGate> {
    let req: GateRequest = serde_json::from_str(text).map_err(|e| Error::OutOfRange {
        what: format!("gate request: {e}"),
    })?;
    compile_request(&req)
}

/// Outcome of simulating a compiled gate against its prediction.
#[derive(Debug, Clone, Serialize)]
pub struct GateVerification {
    pub gate: GateName,
    pub fidelity: f64,
    pub total_time: f64,
}

impl GateVerification {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain fields")
    }
}

/// Process fidelity of a single-qubit schedule against its predicted
/// rotation: the four tomographic code-basis inputs are evolved under the
/// full Hamiltonian, the code-block channel is reconstructed by linear
/// inversion, and compared to the prediction through its entanglement
/// fidelity.
pub fn verify_gate(space: TruncatedSpace, gate: &CompiledGate) -> Result<GateVerification> {
    if gate.control.is_some() {
        return Err(Error::OutOfRange {
            what: "use verify_controlled_gate for selector gates".into(),
        });
    }
    let a = C64::new(gate.alpha, 0.0);
    let plus = acs_plus(space, a, -a)?;
    let minus = acs_minus(space, a, -a)?;
    let mix_r = plus.add(&minus)?.normalized()?;
    let mix_i = plus.add(&minus.scale(C64::i()))?.normalized()?;
    let steps = stable_steps(space, &gate.schedule, None);
    let inputs = [plus.clone(), minus.clone(), mix_r, mix_i];
    let outs = inputs
        .par_iter()
        .map(|v| evolve_schrodinger(space, &gate.schedule, v, steps).map(|r| r.final_state))
        .collect::<Result<Vec<_>>>()?;

    let code_block = |psi: &StateVector| {
        let e = Vector2::new(plus.inner(psi), minus.inner(psi));
        e * e.adjoint()
    };
    let blocks: Vec<Mat2> = outs.iter().map(code_block).collect();
    let half = C64::new(0.5, 0.0);
    let sum_diag = blocks[0] + blocks[1];
    let e01 = blocks[2] + blocks[3] * C64::i() - sum_diag * (half + half * C64::i());
    let e10 = blocks[2] - blocks[3] * C64::i() - sum_diag * (half - half * C64::i());
    let channel = [[blocks[0], e01], [e10, blocks[1]]];

    let u = Mat2::new(
        gate.predicted_unitary[(0, 0)],
        gate.predicted_unitary[(0, 1)],
        gate.predicted_unitary[(1, 0)],
        gate.predicted_unitary[(1, 1)],
    );
    let mut fid = C64::new(0.0, 0.0);
    for (i, row) in channel.iter().enumerate() {
        for (j, block) in row.iter().enumerate() {
            fid += (u.adjoint() * block * u)[(i, j)];
        }
    }
    Ok(GateVerification {
        gate: gate.name,
        fidelity: 0.25 * fid.re,
        total_time: gate.schedule.total_time(),
    })
}

/// Process fidelity of a controlled gate: the four product code states
/// (control lobe ⊗ target cat) are evolved under the matrix-free selector
/// Hamiltonian while the branch wells follow the schedule, and the overlap
/// matrix is compared against the branch-resolved prediction.
pub fn verify_controlled_gate(gate: &CompiledGate, steps: usize) -> Result<GateVerification> {
    let spec = gate.control.as_ref().ok_or(Error::OutOfRange {
        what: "gate has no selector context".into(),
    })?;
    if steps == 0 {
        return Err(Error::OutOfRange {
            what: "steps must be positive".into(),
        });
    }
    let mode_space = TruncatedSpace::new(spec.mode_dim)?;
    let lobes = [
        coherent_state(mode_space, spec.alpha0),
        coherent_state(mode_space, spec.alpha1),
    ];
    let cats = [
        acs_plus(mode_space, spec.alpha4, spec.alpha5)?,
        acs_minus(mode_space, spec.alpha4, spec.alpha5)?,
    ];
    let n = spec.mode_dim;
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(4);
    for lobe in &lobes {
        for cat in &cats {
            let mut v = vec![C64::new(0.0, 0.0); n * n];
            for ci in 0..n {
                for ti in 0..n {
                    v[ci * n + ti] = lobe.amps[ci] * cat.amps[ti];
                }
            }
            basis.push(v);
        }
    }

    let total = gate.schedule.total_time();
    let dt = total / steps as f64;
    let sched = &gate.schedule;
    let outs = basis
        .par_iter()
        .map(|v0| -> Result<Vec<C64>> {
            let mut applier = ControlApplier::new(spec)?;
            let mut state = v0.clone();
            let mut scratch = Rk4Scratch::new(n * n);
            let mut deriv = |t: f64, y: &[C64], dy: &mut [C64]| {
                let (w0, w1) = sched.wells_at(t);
                applier.apply(w0, w1, y, dy);
                for z in dy.iter_mut() {
                    *z = C64::new(z.im, -z.re);
                }
            };
            rk4_span(&mut deriv, &mut state, 0.0, dt, steps, &mut scratch);
            if state.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::Numerical {
                    what: "two-mode integration diverged; increase steps".into(),
                });
            }
            Ok(state)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut trace = C64::new(0.0, 0.0);
    for i in 0..4 {
        for (j, out) in outs.iter().enumerate() {
            let m: C64 = basis[i].iter().zip(out).map(|(a, b)| a.conj() * b).sum();
            trace += gate.predicted_unitary[(i, j)].conj() * m;
        }
    }
    Ok(GateVerification {
        gate: gate.name,
        fidelity: trace.norm_sqr() / 16.0,
        total_time: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_entry_gap(a: &Mat2, b: &Mat2) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn gap_up_to_phase(a: &Mat2, b: &Mat2) -> f64 {
        let gamma = (b.adjoint() * a).trace().arg();
        max_entry_gap(a, &(b * C64::from_polar(1.0, gamma)))
    }

    fn physical(gate: &CompiledGate) -> Mat2 {
        let u = gate.physical_unitary();
        Mat2::new(u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)])
    }

    #[test]
    fn closed_form_rotations_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0040);
        for _ in 0..20 {
            let a = rng.gen_range(-6.0..6.0);
            let b = rng.gen_range(-6.0..6.0);
            assert!(max_entry_gap(&(rz_matrix(a) * rz_matrix(b)), &rz_matrix(a + b)) < 1e-12);
            assert!(max_entry_gap(&(ry_matrix(a) * ry_matrix(b)), &ry_matrix(a + b)) < 1e-12);
            for m in [rx_matrix(a.abs()), ry_matrix(a), rz_matrix(a)] {
                assert!(max_entry_gap(&(m.adjoint() * m), &Mat2::identity()) < 1e-12);
            }
        }
        // Z-Y decomposition of the Hadamard
        let had = Mat2::new(
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
        ) * C64::new(1.0 / 2.0f64.sqrt(), 0.0);
        assert!(gap_up_to_phase(&(rz_matrix(PI) * ry_matrix(-0.5 * PI)), &had) < 1e-12);
    }

    #[test]
    fn compile_rz_tracks_frame_rotation_phase() {
        for &alpha in &[1.5, 2.0] {
            for &phi in &[0.0, 0.5 * PI, PI, -2.1, 4.0] {
                let gate = compile_rz(phi, alpha).unwrap();
                assert!(max_entry_gap(
                    &Mat2::new(
                        gate.predicted_unitary[(0, 0)],
                        gate.predicted_unitary[(0, 1)],
                        gate.predicted_unitary[(1, 0)],
                        gate.predicted_unitary[(1, 1)],
                    ),
                    &rz_matrix(phi)
                ) < 1e-15);
                let expected = wrap_to_pi(0.5 * phi - alpha * alpha * phi);
                let got = C64::from_polar(1.0, gate.global_phase);
                let want = C64::from_polar(1.0, expected);
                assert!((got - want).norm() < 1e-10, "phi {phi} alpha {alpha}");
                let segs = gate.schedule.segments();
                let a = C64::new(alpha, 0.0);
                assert!((segs[0].well0.start() - a).norm() < 1e-12);
                assert!((segs[segs.len() - 1].well1.end() + a).norm() < 1e-12);
                if phi == 0.0 {
                    assert_eq!(segs.len(), 2);
                }
            }
        }
        let gate = compile_rz(0.7, 2.0).unwrap();
        let slow = gate.with_time_scale(2.0).unwrap();
        assert_relative_eq!(slow.total_time(), 2.0 * gate.total_time(), epsilon = 1e-9);
        assert_eq!(slow.schedule.segments().len(), gate.schedule.segments().len());
    }

    #[test]
    fn compile_rx_square_geometry() {
        let gate = compile_rx(PI, 2.0).unwrap();
        let segs = gate.schedule.segments();
        assert_eq!(segs.len(), 4);
        let side = segs[0].well0.length();
        assert_relative_eq!(side, PI.sqrt() / 2.0, epsilon = 1e-12);
        for seg in segs {
            // the second lobe mirrors the first through −conj
            assert!((seg.well1.start() + seg.well0.start().conj()).norm() < 1e-12);
            assert!((seg.well1.end() + seg.well0.end().conj()).norm() < 1e-12);
        }
        assert!(gap_up_to_phase(&physical(&gate), &rx_matrix(PI)) < 1e-10);
        assert!(wrap_to_pi(gate.global_phase).abs() < 1e-10);

        let idle = compile_rx(0.0, 2.0).unwrap();
        assert_eq!(idle.schedule.segments().len(), 1);
        assert!(max_entry_gap(&physical(&idle), &Mat2::identity()) < 1e-12);
        assert!(compile_rx(-0.1, 2.0).is_err());
    }

    #[test]
    fn fused_gate_collapses_to_its_factors() {
        let lambda = 0.9;
        let fused = compile_rzry(0.0, lambda, 2.0).unwrap();
        let plain = compile_ry(lambda, 2.0).unwrap();
        assert_eq!(fused.schedule.segments(), plain.schedule.segments());
        assert!(max_entry_gap(&physical(&fused), &physical(&plain)) < 1e-15);

        let phi = 1.3;
        let pure_z = compile_rzry(phi, 0.0, 2.0).unwrap();
        let rz = compile_rz(phi, 2.0).unwrap();
        assert_eq!(pure_z.schedule.segments(), rz.schedule.segments());

        let both = compile_rzry(phi, lambda, 2.0).unwrap();
        assert!(max_entry_gap(
            &Mat2::new(
                both.predicted_unitary[(0, 0)],
                both.predicted_unitary[(0, 1)],
                both.predicted_unitary[(1, 0)],
                both.predicted_unitary[(1, 1)],
            ),
            &(rz_matrix(phi) * ry_matrix(lambda))
        ) < 1e-14);
        let expected = wrap_to_pi(0.5 * phi - 4.0 * phi);
        assert!(
            (C64::from_polar(1.0, both.global_phase) - C64::from_polar(1.0, expected)).norm()
                < 1e-10
        );
        let ry = compile_ry(lambda, 2.0).unwrap();
        assert!(both.total_time() < rz.total_time() + ry.total_time() - 100.0);
    }

    #[test]
    fn engine_composes_and_rejects() {
        let rz = compile_rz(0.5 * PI, 2.0).unwrap();
        let ry = compile_ry(0.8, 2.0).unwrap();
        let mut segs = rz.schedule.segments().to_vec();
        segs.extend_from_slice(ry.schedule.segments());
        let chained = Schedule::new(1.0, segs).unwrap();
        let composed = schedule_code_unitary(&chained).unwrap();
        assert!(max_entry_gap(&composed, &(physical(&ry) * physical(&rz))) < 1e-12);

        // asymmetric merge
        let bad = Schedule::new(
            1.0,
            vec![Segment::new(
                10.0,
                WellMotion::line(C64::new(2.0, 0.0), C64::new(0.0, 0.0)),
                WellMotion::line(C64::new(-1.0, 0.0), C64::new(0.0, 0.0)),
            )],
        )
        .unwrap();
        assert!(schedule_code_unitary(&bad).is_err());

        // separated lobes crossing mid-segment
        let crossing = Schedule::new(
            1.0,
            vec![Segment::new(
                10.0,
                WellMotion::line(C64::new(2.0, 0.0), C64::new(-2.0, 0.0)),
                WellMotion::line(C64::new(-2.0, 0.0), C64::new(2.0, 0.0)),
            )],
        )
        .unwrap();
        assert!(schedule_code_unitary(&crossing).is_err());

        // schedules that start collided have no code frame to map
        let collided = Schedule::hold(1.0, C64::new(0.0, 0.0), C64::new(0.0, 0.0), 5.0).unwrap();
        assert!(schedule_code_unitary(&collided).is_err());
    }

    #[test]
    fn numeric_frame_transport_is_the_same_map() {
        // The frame-overlap route reproduces the leg-composed map up to the
        // lobe-overlap correction to the cat-frame connection, which for a
        // swept angle integrates to 2α²e^{−2α²}·sweep per cat (4.2e−3 for
        // the rz arc below, under 5e−4 for the ry slides). Checking the gap
        // at two sample counts separates that physical floor from
        // discretization error.
        let space = TruncatedSpace::new(32).unwrap();
        for (gate, floor, label) in [
            (compile_rz(0.5 * PI, 2.0).unwrap(), 5e-3, "rz"),
            (compile_ry(0.8, 2.0).unwrap(), 8e-4, "ry"),
        ] {
            let coarse = transported_code_unitary(space, &gate.schedule, 1500).unwrap();
            let fine = transported_code_unitary(space, &gate.schedule, 3000).unwrap();
            let gap_coarse = max_entry_gap(&coarse, &physical(&gate));
            let gap_fine = max_entry_gap(&fine, &physical(&gate));
            assert!(
                (gap_coarse - gap_fine).abs() < 5e-5,
                "{label}: transport gap not converged ({gap_coarse:.2e} vs {gap_fine:.2e})"
            );
            assert!(
                gap_fine < floor,
                "{label}: frame transport gap {gap_fine:.2e} above overlap-correction floor"
            );
        }
    }

    #[test]
    fn rz_additivity_up_to_global_phase() {
        let a = compile_rz(0.7, 2.0).unwrap();
        let b = compile_rz(1.1, 2.0).unwrap();
        let sum = compile_rz(1.8, 2.0).unwrap();
        let gap = gap_up_to_phase(&(physical(&b) * physical(&a)), &physical(&sum));
        assert!(gap < 1e-10, "additivity gap {gap:.2e}");
    }

    #[test]
    fn preparation_phase_condition_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0041);
        for trial in 0..50 {
            let sep = rng.gen_range(2.0..6.0);
            let dir = rng.gen_range(0.0..TAU);
            let center = C64::new(rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5));
            let arm = C64::from_polar(0.5 * sep, dir);
            let (alpha0, alpha1) = (center + arm, center - arm);
            for parity in [CatParity::Plus, CatParity::Minus] {
                let plan = plan_preparation(alpha0, alpha1, parity).unwrap();
                let u_hat = (alpha0 - alpha1) / C64::new(sep, 0.0);
                let theta_hat = C64::from_polar(1.0, plan.theta);
                assert!(
                    (theta_hat.conj() * u_hat).re.abs() < 1e-12,
                    "trial {trial}: displacement not perpendicular"
                );
                assert!(plan.h1 >= 0.0);
                let miss = wrap_to_pi(plan.predicted_phase - parity.target_phase()).abs();
                assert!(miss < 1e-6, "trial {trial}: phase misses by {miss:.2e}");
                let segs = plan.schedule.segments();
                let last = &segs[segs.len() - 1];
                assert!((last.well0.end() - alpha0).norm() < 1e-9);
                assert!((last.well1.end() - alpha1).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn preparation_symmetric_pair_shortcuts() {
        let a = C64::new(2.0, 0.0);
        let plus = plan_preparation(a, -a, CatParity::Plus).unwrap();
        assert!(plus.h1.abs() < 1e-12);
        assert_eq!(plus.schedule.segments().len(), 1);
        assert!(plus.predicted_phase.abs() < 1e-9);

        let minus = plan_preparation(a, -a, CatParity::Minus).unwrap();
        assert_relative_eq!(minus.h1, PI / 6.0, epsilon = 1e-9);
        assert!(wrap_to_pi(minus.predicted_phase - PI).abs() < 1e-9);

        assert!(matches!(
            plan_preparation(a, a, CatParity::Plus),
            Err(Error::DegenerateTarget)
        ));
    }

    #[test]
    fn preparation_simulation_beats_naive_ramp() {
        let alpha0 = C64::from_polar(1.6, PI / 8.0);
        let alpha1 = C64::from_polar(1.3, 7.0 * PI / 12.0);
        let space = TruncatedSpace::new(28).unwrap();
        let vacuum = StateVector::fock(space, 0).unwrap();
        let target = acs_plus(space, alpha0, alpha1).unwrap();

        let plan = plan_preparation(alpha0, alpha1, CatParity::Plus).unwrap();
        let steps = stable_steps(space, &plan.schedule, None);
        let run = evolve_schrodinger(space, &plan.schedule, &vacuum, steps).unwrap();
        let fid_plan = target.inner(&run.final_state).norm_sqr();
        assert!(fid_plan >= 0.99, "planned preparation fidelity {fid_plan}");

        let ramp = naive_ramp_schedule(alpha0, alpha1).unwrap();
        let ramp_steps = stable_steps(space, &ramp, None);
        let ramp_run = evolve_schrodinger(space, &ramp, &vacuum, ramp_steps).unwrap();
        let fid_ramp = target.inner(&ramp_run.final_state).norm_sqr();
        assert!(
            fid_ramp < fid_plan - 0.01,
            "naive ramp unexpectedly close: {fid_ramp} vs {fid_plan}"
        );
    }

    #[test]
    fn controlled_gate_prediction_structure() {
        let inner = compile_rz(PI, 2.0).unwrap();
        let spec = MultiQubitSpec {
            n_modes: 2,
            m_controls: 1,
            k: 1.0,
            alpha0: C64::new(2.0, 0.0),
            alpha1: C64::new(-2.0, 0.0),
            alpha2: C64::new(2.0, 0.0),
            alpha3: C64::new(-2.0, 0.0),
            alpha4: C64::new(2.0, 0.0),
            alpha5: C64::new(-2.0, 0.0),
            mode_dim: 10,
        };
        let cu = compile_controlled(&inner, &spec).unwrap();
        assert_eq!(cu.name, GateName::Cu);
        // at alpha = 2 the tracked phase π/2 − 4π folds the active branch
        // into exactly diag(1, −1)
        let expect = [
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
        ];
        for (i, want) in expect.iter().enumerate() {
            assert!((cu.predicted_unitary[(i, i)] - want).norm() < 1e-12);
            for j in 0..4 {
                if i != j {
                    assert!(cu.predicted_unitary[(i, j)].norm() < 1e-15);
                }
            }
        }
        assert!(compile_controlled(&cu, &spec).is_err());

        let mut displaced = spec;
        displaced.alpha4 = C64::new(1.0, 0.0);
        assert!(matches!(
            compile_controlled(&inner, &displaced),
            Err(Error::Infeasible { .. })
        ));

        let mut degenerate = spec;
        degenerate.alpha1 = degenerate.alpha0;
        assert!(compile_controlled(&inner, &degenerate).is_err());
    }

    #[test]
    fn gate_requests_parse_and_compile() {
        let gate =
            compile_request_json(r#"{"gate": "ry", "params": [1.5708], "alpha": 2.0}"#).unwrap();
        assert_eq!(gate.name, GateName::Ry);
        assert_relative_eq!(gate.params[0], 1.5708, epsilon = 1e-12);

        let defaulted = compile_request_json(r#"{"gate": "rx", "params": [0.5]}"#).unwrap();
        assert_relative_eq!(defaulted.alpha, 2.0, epsilon = 1e-15);

        assert!(compile_request_json(r#"{"gate": "rz", "params": [1.0, 2.0]}"#).is_err());
        assert!(compile_request_json(r#"{"gate": "cu", "params": [1.0]}"#).is_err());

        let report = GateVerification {
            gate: GateName::RzRy,
            fidelity: 0.995,
            total_time: 1234.5,
        };
        let json = report.to_json();
        assert_eq!(json["gate"], "rzry");
        assert!(json["fidelity"].as_f64().unwrap() > 0.99);
        assert!(json["total_time"].as_f64().unwrap() > 0.0);

        let gate_json = gate.to_json();
        assert_eq!(gate_json["schedule"]["segments"].as_array().unwrap().len(), 4);
        let round_trip: Schedule =
            serde_json::from_value(gate_json["schedule"].clone()).unwrap();
        assert_eq!(&round_trip, &gate.schedule);
    }

    #[test]
    fn simulated_process_fidelities_match_predictions() {
        let space = TruncatedSpace::new(30).unwrap();
        for gate in [
            compile_rz(0.5 * PI, 1.5).unwrap(),
            compile_ry(0.5 * PI, 1.5).unwrap(),
        ] {
            let report = verify_gate(space, &gate).unwrap();
            assert!(
                report.fidelity >= 0.99,
                "{}: process fidelity {}",
                gate.name,
                report.fidelity
            );
            assert_relative_eq!(report.total_time, gate.total_time(), epsilon = 1e-12);
        }
    }
}

//! Phase-space path geometry: signed enclosed areas, the geometric phase of
//! transported coherent states, and the non-Abelian holonomy picked up by the
//! collision-state pair under well transport.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::fock_core::{PhasePoint, C64};
use crate::{Error, Result};

pub type Mat2 = Matrix2<C64>;

/// One parametric piece of a phase-space path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PathPiece {
    Line {
        from: PhasePoint,
        to: PhasePoint,
    },
    /// Circular arc traversed from `start_angle` to `end_angle` about
    /// `center`; increasing angle is counterclockwise.
    Arc {
        center: PhasePoint,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
    },
}

impl PathPiece {
    pub fn start(&self) -> PhasePoint {
        match *self {
            PathPiece::Line { from, .. } => from,
            PathPiece::Arc {
                center,
                radius,
                start_angle,
                ..
            } => arc_point(center, radius, start_angle),
        }
    }

    pub fn end(&self) -> PhasePoint {
        match *self {
            PathPiece::Line { to, .. } => to,
            PathPiece::Arc {
                center,
                radius,
                end_angle,
                ..
            } => arc_point(center, radius, end_angle),
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            PathPiece::Line { from, to } => (to.to_complex() - from.to_complex()).norm(),
            PathPiece::Arc {
                radius,
                start_angle,
                end_angle,
                ..
            } => radius * (end_angle - start_angle).abs(),
        }
    }

    /// Point at fractional arc parameter `t` in [0, 1].
    pub fn point_at(&self, t: f64) -> PhasePoint {
        match *self {
            PathPiece::Line { from, to } => {
                let z = from.to_complex() * (1.0 - t) + to.to_complex() * t;
                PhasePoint::from_complex(z)
            }
            PathPiece::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => arc_point(center, radius, start_angle + t * (end_angle - start_angle)),
        }
    }

    pub fn reversed(&self) -> PathPiece {
        match *self {
            PathPiece::Line { from, to } => PathPiece::Line { from: to, to: from },
            PathPiece::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => PathPiece::Arc {
                center,
                radius,
                start_angle: end_angle,
                end_angle: start_angle,
            },
        }
    }

    /// Exact ∫ P dX − X dP along the piece.
    pub(crate) fn phase_integral(&self) -> f64 {
        match *self {
            PathPiece::Line { from, to } => {
                -(from.to_complex().conj() * to.to_complex()).im
            }
            PathPiece::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => {
                let c = center.to_complex();
                let sweep = C64::from_polar(1.0, end_angle) - C64::from_polar(1.0, start_angle);
                -(radius * (c.conj() * sweep).im
                    + radius * radius * (end_angle - start_angle))
            }
        }
    }

    /// Exact ½ ∫ X dP − P dX along the piece (shoelace contribution).
    fn area_integral(&self) -> f64 {
        -0.5 * self.phase_integral()
    }
}

fn arc_point(center: PhasePoint, radius: f64, angle: f64) -> PhasePoint {
    PhasePoint::from_complex(center.to_complex() + C64::from_polar(radius, angle))
}

const CONNECT_TOL: f64 = 1e-9;

/// A connected chain of line and arc pieces in phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePath {
    pieces: Vec<PathPiece>,
}

impl PhasePath {
    /// Validates connectivity (each piece starts where the previous ended)
    /// and finiteness.
    pub fn new(pieces: Vec<PathPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::OutOfRange {
                what: "empty path".into(),
            });
        }
        for p in &pieces {
            let finite = match *p {
                PathPiece::Line { from, to } => {
                    from.x.is_finite() && from.p.is_finite() && to.x.is_finite() && to.p.is_finite()
                }
                PathPiece::Arc {
                    center,
                    radius,
                    start_angle,
                    end_angle,
                } => {
                    center.x.is_finite()
                        && center.p.is_finite()
                        && radius.is_finite()
                        && radius > 0.0
                        && start_angle.is_finite()
                        && end_angle.is_finite()
                }
            };
            if !finite {
                return Err(Error::OutOfRange {
                    what: "non-finite or degenerate path piece".into(),
                });
            }
        }
        for w in pieces.windows(2) {
            let gap = (w[1].start().to_complex() - w[0].end().to_complex()).norm();
            if gap > CONNECT_TOL {
                return Err(Error::OutOfRange {
                    what: format!("path pieces disconnected by {:.3e}", gap),
                });
            }
        }
        Ok(Self { pieces })
    }

    /// Open polyline through the given points.
    pub fn polyline(points: &[PhasePoint]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::OutOfRange {
                what: "polyline needs at least two points".into(),
            });
        }
        let pieces = points
            .windows(2)
            .map(|w| PathPiece::Line { from: w[0], to: w[1] })
            .collect();
        Self::new(pieces)
    }

    /// Closed polygon through the given vertices (closing edge appended).
    pub fn closed_polygon(points: &[PhasePoint]) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::OutOfRange {
                what: "polygon needs at least three vertices".into(),
            });
        }
        let mut pts = points.to_vec();
        pts.push(points[0]);
        Self::polyline(&pts)
    }

    /// Full circle traversed counterclockwise from angle 0.
    pub fn circle(center: PhasePoint, radius: f64) -> Result<Self> {
        Self::new(vec![PathPiece::Arc {
            center,
            radius,
            start_angle: 0.0,
            end_angle: 2.0 * std::f64::consts::PI,
        }])
    }

    pub fn pieces(&self) -> &[PathPiece] {
        &self.pieces
    }

    pub fn start(&self) -> PhasePoint {
        self.pieces[0].start()
    }

    pub fn end(&self) -> PhasePoint {
        self.pieces[self.pieces.len() - 1].end()
    }

    pub fn is_closed(&self) -> bool {
        (self.end().to_complex() - self.start().to_complex()).norm() <= CONNECT_TOL
    }

    pub fn total_length(&self) -> f64 {
        self.pieces.iter().map(|p| p.length()).sum()
    }

    pub fn reversed(&self) -> PhasePath {
        PhasePath {
            pieces: self.pieces.iter().rev().map(|p| p.reversed()).collect(),
        }
    }

    /// Appends `other`, which must start where this path ends.
    pub fn concat(&self, other: &PhasePath) -> Result<PhasePath> {
        let mut pieces = self.pieces.clone();
        pieces.extend_from_slice(&other.pieces);
        PhasePath::new(pieces)
    }
}

/// Signed area enclosed by a closed path, counterclockwise positive.
pub fn enclosed_area(path: &PhasePath) -> Result<f64> {
    if !path.is_closed() {
        return Err(Error::OpenPath);
    }
    Ok(path.pieces.iter().map(|p| p.area_integral()).sum())
}

/// Geometric phase ∫ P dX − X dP accumulated by a coherent state carried
/// along the path; for closed paths this is −2 × enclosed area.
pub fn coherent_geometric_phase(path: &PhasePath) -> f64 {
    path.pieces.iter().map(|p| p.phase_integral()).sum()
}

/// Accumulated generator coefficients along a path: the Abelian phase and
/// the endpoint displacements multiplying X̂ and Ŷ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyDecomposition {
    /// ∫ P dX − X dP, the Î coefficient.
    pub phase: f64,
    /// −ΔP, the X̂ coefficient.
    pub sigma_x: f64,
    /// ΔX, the Ŷ coefficient.
    pub sigma_y: f64,
}

/// Holonomy of the collision pair (|Z,0⟩, |Z,1⟩) transported along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyResult {
    pub unitary: Mat2,
    /// The accumulated Î phase (not reduced mod 2π).
    pub global_phase: f64,
    pub decomposition: HolonomyDecomposition,
}

fn pauli_x() -> Mat2 {
    Mat2::new(
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
    )
}

fn pauli_y() -> Mat2 {
    Mat2::new(
        C64::new(0.0, 0.0),
        C64::new(0.0, -1.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, 0.0),
    )
}

fn pauli_z() -> Mat2 {
    Mat2::new(
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(-1.0, 0.0),
    )
}

/// exp(i(a·Î + v·σ)) evaluated exactly.
fn exp_i_pauli(a: f64, v: [f64; 3]) -> Mat2 {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let phase = C64::from_polar(1.0, a);
    let mut m = Mat2::identity();
    if norm > 0.0 {
        let (s, c) = (norm.sin(), norm.cos());
        let unit = [v[0] / norm, v[1] / norm, v[2] / norm];
        let sigma = pauli_x() * C64::new(unit[0], 0.0)
            + pauli_y() * C64::new(unit[1], 0.0)
            + pauli_z() * C64::new(unit[2], 0.0);
        m = Mat2::identity() * C64::new(c, 0.0) + sigma * C64::new(0.0, s);
    }
    m * phase
}

/// Exact transport unitary of one piece. Along a line the generator keeps a
/// fixed Pauli direction, so the ordered product collapses to a single
/// exponential; along an arc the generator rotates rigidly and the rotating
/// frame removes the time dependence.
fn piece_unitary(piece: &PathPiece) -> Mat2 {
    let phi = piece.phase_integral();
    match *piece {
        PathPiece::Line { from, to } => {
            let dx = to.x - from.x;
            let dp = to.p - from.p;
            exp_i_pauli(phi, [-dp, dx, 0.0])
        }
        PathPiece::Arc {
            radius,
            start_angle,
            end_angle,
            ..
        } => {
            let sweep = end_angle - start_angle;
            let frame_out = exp_i_pauli(0.0, [0.0, 0.0, -end_angle / 2.0]);
            let rotating = exp_i_pauli(0.0, [-radius * sweep, 0.0, sweep / 2.0]);
            let frame_in = exp_i_pauli(0.0, [0.0, 0.0, start_angle / 2.0]);
            frame_out * rotating * frame_in * C64::from_polar(1.0, phi)
        }
    }
}

/// Default subdivision ceiling for the transport integrator.
pub const MAX_HOLONOMY_STEP: f64 = 1e-3;

/// Holonomy with an explicit subdivision ceiling; pieces are split into
/// sub-pieces no longer than `max_step` before their exact exponentials are
/// multiplied up (latest factor on the left).
pub fn collision_holonomy_with_step(path: &PhasePath, max_step: f64) -> HolonomyResult {
    let mut u = Mat2::identity();
    for piece in path.pieces() {
        let n = (piece.length() / max_step).ceil().max(1.0) as usize;
        for k in 0..n {
            let sub = subdivide(piece, k, n);
            u = piece_unitary(&sub) * u;
        }
    }
    let phase = coherent_geometric_phase(path);
    let dz = path.end().to_complex() - path.start().to_complex();
    HolonomyResult {
        unitary: u,
        global_phase: phase,
        decomposition: HolonomyDecomposition {
            phase,
            sigma_x: -dz.im,
            sigma_y: dz.re,
        },
    }
}

fn subdivide(piece: &PathPiece, k: usize, n: usize) -> PathPiece {
    let t0 = k as f64 / n as f64;
    let t1 = (k + 1) as f64 / n as f64;
    match *piece {
        PathPiece::Line { from, to } => {
            let a = from.to_complex();
            let b = to.to_complex();
            PathPiece::Line {
                from: PhasePoint::from_complex(a + (b - a) * t0),
                to: PhasePoint::from_complex(a + (b - a) * t1),
            }
        }
        PathPiece::Arc {
            center,
            radius,
            start_angle,
            end_angle,
        } => PathPiece::Arc {
            center,
            radius,
            start_angle: start_angle + (end_angle - start_angle) * t0,
            end_angle: start_angle + (end_angle - start_angle) * t1,
        },
    }
}

/// Path-ordered transport of the collision pair along the path, evaluated
/// with exact piece exponentials under the default subdivision ceiling.
pub fn collision_holonomy(path: &PhasePath) -> HolonomyResult {
    collision_holonomy_with_step(path, MAX_HOLONOMY_STEP)
}

/// Reads a path from its JSON form: a list of `{"type": "line"|"arc", …}`
/// pieces.
pub fn path_from_json(text: &str) -> Result<PhasePath> {
    let pieces: Vec<PathPiece> = serde_json::from_str(text).map_err(|e| Error::Numerical {
        what: format!("path JSON: {}", e),
    })?;
    PhasePath::new(pieces)
}

pub fn path_to_json(path: &PhasePath) -> String {
    serde_json::to_string_pretty(path.pieces()).expect("path serialization")
}

/// 2×2 complex matrix as nested [re, im] JSON.
pub fn unitary_to_json(u: &Mat2) -> serde_json::Value {
    serde_json::json!([
        [[u[(0, 0)].re, u[(0, 0)].im], [u[(0, 1)].re, u[(0, 1)].im]],
        [[u[(1, 0)].re, u[(1, 0)].im], [u[(1, 1)].re, u[(1, 1)].im]]
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(x: f64, p: f64) -> PhasePoint {
        PhasePoint::new(x, p)
    }

    fn unit_square_ccw() -> PhasePath {
        PhasePath::closed_polygon(&[pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)])
            .unwrap()
    }

    fn mat_close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        (0..2).all(|r| (0..2).all(|c| (a[(r, c)] - b[(r, c)]).norm() <= tol))
    }

    #[test]
    fn square_areas() {
        assert_relative_eq!(enclosed_area(&unit_square_ccw()).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            enclosed_area(&unit_square_ccw().reversed()).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
        let l = (std::f64::consts::PI / 4.0).sqrt();
        let sq = PhasePath::closed_polygon(&[pt(0.0, 0.0), pt(l, 0.0), pt(l, l), pt(0.0, l)])
            .unwrap();
        assert_relative_eq!(
            enclosed_area(&sq).unwrap(),
            std::f64::consts::PI / 4.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn circle_area_and_open_path_error() {
        let c = PhasePath::circle(pt(0.7, -0.3), 1.5).unwrap();
        assert_relative_eq!(
            enclosed_area(&c).unwrap(),
            std::f64::consts::PI * 2.25,
            epsilon = 1e-12
        );
        let open = PhasePath::polyline(&[pt(0.0, 0.0), pt(1.0, 1.0)]).unwrap();
        assert!(matches!(enclosed_area(&open), Err(Error::OpenPath)));
    }

    #[test]
    fn disconnected_pieces_rejected() {
        let bad = PhasePath::new(vec![
            PathPiece::Line {
                from: pt(0.0, 0.0),
                to: pt(1.0, 0.0),
            },
            PathPiece::Line {
                from: pt(2.0, 0.0),
                to: pt(3.0, 0.0),
            },
        ]);
        assert!(bad.is_err());
    }

    #[test]
    fn geometric_phase_closed_is_minus_twice_area() {
        let sq = unit_square_ccw();
        assert_relative_eq!(
            coherent_geometric_phase(&sq),
            -2.0 * enclosed_area(&sq).unwrap(),
            epsilon = 1e-12
        );
        let c = PhasePath::circle(pt(1.1, 0.4), 0.8).unwrap();
        assert_relative_eq!(
            coherent_geometric_phase(&c),
            -2.0 * enclosed_area(&c).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn geometric_phase_vanishes_on_rays() {
        let ray = PhasePath::polyline(&[pt(0.2, 0.1), pt(2.0, 1.0)]).unwrap();
        assert!(coherent_geometric_phase(&ray).abs() < 1e-12);
        let x_axis = PhasePath::polyline(&[pt(-1.5, 0.0), pt(2.5, 0.0)]).unwrap();
        assert!(coherent_geometric_phase(&x_axis).abs() < 1e-12);
    }

    #[test]
    fn geometric_phase_additive_and_reparametrization_invariant() {
        let a = PhasePath::polyline(&[pt(0.0, 1.0), pt(2.0, 0.5)]).unwrap();
        let b = PhasePath::polyline(&[pt(2.0, 0.5), pt(1.0, -1.0)]).unwrap();
        let joined = a.concat(&b).unwrap();
        assert_relative_eq!(
            coherent_geometric_phase(&joined),
            coherent_geometric_phase(&a) + coherent_geometric_phase(&b),
            epsilon = 1e-12
        );
        // resampling a segment into colinear sub-segments is a no-op
        let z0 = C64::new(0.3, 0.9);
        let z1 = C64::new(-1.2, 0.4);
        let coarse = PhasePath::polyline(&[
            PhasePoint::from_complex(z0),
            PhasePoint::from_complex(z1),
        ])
        .unwrap();
        let fine_pts: Vec<PhasePoint> = (0..=7)
            .map(|k| PhasePoint::from_complex(z0 + (z1 - z0) * (k as f64 / 7.0)))
            .collect();
        let fine = PhasePath::polyline(&fine_pts).unwrap();
        assert!(
            (coherent_geometric_phase(&coarse) - coherent_geometric_phase(&fine)).abs() < 1e-10
        );
    }

    #[test]
    fn x_axis_displacement_is_ry() {
        let lambda = 1.3f64;
        let path = PhasePath::polyline(&[pt(0.0, 0.0), pt(-lambda / 2.0, 0.0)]).unwrap();
        let res = collision_holonomy(&path);
        let expect = exp_i_pauli(0.0, [0.0, -lambda / 2.0, 0.0]);
        assert!(mat_close(&res.unitary, &expect, 1e-12));
        assert_relative_eq!(res.unitary[(0, 0)].re, (lambda / 2.0).cos(), epsilon = 1e-12);
        assert_relative_eq!(res.unitary[(1, 0)].re, (lambda / 2.0).sin(), epsilon = 1e-12);
        assert!(res.global_phase.abs() < 1e-12);
    }

    #[test]
    fn circle_transport_matches_rotating_frame_oracle() {
        let r = 2.0f64;
        let path = PhasePath::circle(pt(0.0, 0.0), r).unwrap();
        let res = collision_holonomy(&path);
        // closed form: −exp(−2πi[R²Î + Rσx − σz/2])
        let tp = 2.0 * std::f64::consts::PI;
        let oracle = exp_i_pauli(-tp * r * r, [-tp * r, 0.0, tp / 2.0]) * C64::new(-1.0, 0.0);
        assert!(mat_close(&res.unitary, &oracle, 1e-10));
        // a macroscopic loop transports population between the pair states:
        // the off-diagonal is far from zero even though the loop is closed
        assert!(
            res.unitary[(0, 1)].norm() > 0.3,
            "|U01| = {}",
            res.unitary[(0, 1)].norm()
        );
    }

    #[test]
    fn small_loop_approaches_abelian_limit() {
        let r = 0.05f64;
        let area = std::f64::consts::PI * r * r;
        let path = PhasePath::circle(pt(0.6, -0.2), r).unwrap();
        let res = collision_holonomy(&path);
        // U → exp(−2iA(Î − σz)) as the loop shrinks
        let oracle = exp_i_pauli(-2.0 * area, [0.0, 0.0, 2.0 * area]);
        assert!(mat_close(&res.unitary, &oracle, 30.0 * r * r * r));
        // residual population transfer dies off cubically with loop size
        assert!(res.unitary[(0, 1)].norm() < 20.0 * r * r * r);
        let tiny = collision_holonomy(&PhasePath::circle(pt(0.6, -0.2), r / 5.0).unwrap());
        let ratio = res.unitary[(0, 1)].norm() / tiny.unitary[(0, 1)].norm();
        assert!(
            ratio > 100.0 && ratio < 150.0,
            "off-diagonal decay ratio = {}",
            ratio
        );
    }

    #[test]
    fn transport_is_unitary_and_reversible() {
        let path = PhasePath::new(vec![
            PathPiece::Line {
                from: pt(2.0, 2.0),
                to: pt(0.4, 1.1),
            },
            PathPiece::Arc {
                center: pt(0.4, 0.1),
                radius: 1.0,
                start_angle: std::f64::consts::PI / 2.0,
                end_angle: -0.3,
            },
        ])
        .unwrap();
        let res = collision_holonomy(&path);
        let gram = res.unitary.adjoint() * res.unitary;
        assert!(mat_close(&gram, &Mat2::identity(), 1e-8));
        let loop_res = collision_holonomy(&path.concat(&path.reversed()).unwrap());
        assert!(mat_close(&loop_res.unitary, &Mat2::identity(), 1e-8));
        // determinant phase doubles the accumulated Abelian phase
        let det = res.unitary[(0, 0)] * res.unitary[(1, 1)]
            - res.unitary[(0, 1)] * res.unitary[(1, 0)];
        let expect = C64::from_polar(1.0, 2.0 * res.global_phase);
        assert!((det - expect).norm() < 1e-9);
    }

    #[test]
    fn halving_gate() {
        let path = PhasePath::new(vec![
            PathPiece::Line {
                from: pt(2.0, 2.0),
                to: pt(-1.7, -2.3),
            },
            PathPiece::Arc {
                center: pt(-0.7, -2.3),
                radius: 1.0,
                start_angle: std::f64::consts::PI,
                end_angle: 2.2 * std::f64::consts::PI,
            },
        ])
        .unwrap();
        let coarse = collision_holonomy_with_step(&path, MAX_HOLONOMY_STEP);
        let fine = collision_holonomy_with_step(&path, MAX_HOLONOMY_STEP / 2.0);
        assert!(mat_close(&coarse.unitary, &fine.unitary, 1e-8));
    }

    /// First-order chord integrator, an independent discretization of the
    /// same ordered product.
    fn chord_holonomy(path: &PhasePath, h: f64) -> Mat2 {
        let mut u = Mat2::identity();
        for piece in path.pieces() {
            let n = (piece.length() / h).ceil().max(1.0) as usize;
            for k in 0..n {
                let sub = subdivide(piece, k, n);
                let z0 = sub.start().to_complex();
                let z1 = sub.end().to_complex();
                let a = -(z0.conj() * z1).im;
                let d = z1 - z0;
                u = exp_i_pauli(a, [-d.im, d.re, 0.0]) * u;
            }
        }
        u
    }

    #[test]
    fn exact_transport_vs_chord_integrator() {
        let path = PhasePath::new(vec![
            PathPiece::Arc {
                center: pt(0.5, 0.5),
                radius: 1.2,
                start_angle: 0.2,
                end_angle: 2.9,
            },
            PathPiece::Line {
                from: arc_point(pt(0.5, 0.5), 1.2, 2.9),
                to: pt(-2.0, 0.3),
            },
        ])
        .unwrap();
        let exact = collision_holonomy(&path).unitary;
        // Richardson-extrapolate the second-order chord product
        let u1 = chord_holonomy(&path, 2e-3);
        let u2 = chord_holonomy(&path, 1e-3);
        let extrapolated = u2 + (u2 - u1) / C64::new(3.0, 0.0);
        assert!(
            mat_close(&exact, &extrapolated, 1e-6),
            "exact vs chord mismatch"
        );
    }

    #[test]
    fn su2_part_depends_on_the_path_not_only_endpoints() {
        // two macroscopically different routes between the same endpoints
        let direct = PhasePath::polyline(&[pt(0.0, 0.0), pt(2.0, 0.0)]).unwrap();
        let detour =
            PhasePath::polyline(&[pt(0.0, 0.0), pt(1.0, 1.5), pt(2.0, 0.0)]).unwrap();
        let u1 = collision_holonomy(&direct);
        let u2 = collision_holonomy(&detour);
        let s1 = u1.unitary * C64::from_polar(1.0, -u1.global_phase);
        let s2 = u2.unitary * C64::from_polar(1.0, -u2.global_phase);
        let diff: f64 = (0..2)
            .flat_map(|r| (0..2).map(move |c| (r, c)))
            .map(|(r, c)| (s1[(r, c)] - s2[(r, c)]).norm())
            .sum();
        assert!(diff > 1e-2, "SU(2) parts coincided: diff = {:e}", diff);
    }

    #[test]
    fn decomposition_tracks_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0020);
        for _ in 0..10 {
            let pts: Vec<PhasePoint> = (0..4)
                .map(|_| pt(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                .collect();
            let path = PhasePath::polyline(&pts).unwrap();
            let res = collision_holonomy(&path);
            let dz = path.end().to_complex() - path.start().to_complex();
            assert_relative_eq!(res.decomposition.sigma_y, dz.re, epsilon = 1e-12);
            assert_relative_eq!(res.decomposition.sigma_x, -dz.im, epsilon = 1e-12);
            assert_relative_eq!(
                res.decomposition.phase,
                coherent_geometric_phase(&path),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn path_json_roundtrip() {
        let path = PhasePath::new(vec![
            PathPiece::Line {
                from: pt(0.0, 0.0),
                to: pt(1.0, 0.0),
            },
            PathPiece::Arc {
                center: pt(1.0, 1.0),
                radius: 1.0,
                start_angle: -std::f64::consts::PI / 2.0,
                end_angle: 0.0,
            },
        ])
        .unwrap();
        let text = path_to_json(&path);
        assert!(text.contains("\"type\": \"line\""));
        assert!(text.contains("\"type\": \"arc\""));
        let back = path_from_json(&text).unwrap();
        assert_eq!(path, back);
        let bad = path_from_json("[{\"type\": \"spiral\"}]");
        assert!(bad.is_err());
    }
}

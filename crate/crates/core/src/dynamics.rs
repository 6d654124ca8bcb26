//! Pointwise evaluation of the map and of straight-line flows: the
//! kinematics layer for the correlation and coboundary experiments.
//!
//! Chart coordinates are double precision; the half-open convention assigns
//! `x = 1` / `y = 1` to the neighbouring square immediately. Singularity
//! hits of the chart-vertical flow are decided exactly: the flow keeps the
//! abscissa constant and corners only sit at `x ∈ {0, 1}`, so a trajectory
//! can meet a vertex only when its abscissa is exactly zero after
//! normalization.

use crate::automorphism::AffineAutomorphism;
use crate::surface::{Origami, SingularityProfile};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("point maps onto a vertex; perturb the input")]
    HitVertex,
    #[error("trajectory hit a singularity at time {0}")]
    HitSingularity(f64),
    #[error("point not reachable for the requested time in either direction")]
    UnreachableBothDirections,
}

/// A point of the surface in chart coordinates, `x, y ∈ [0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub square: usize,
    pub x: f64,
    pub y: f64,
}

impl SurfacePoint {
    pub fn new(o: &Origami, square: usize, x: f64, y: f64) -> Self {
        normalize(o, square, x, y)
    }
}

/// Canonical representative under the half-open convention.
pub fn normalize(o: &Origami, mut square: usize, mut x: f64, mut y: f64) -> SurfacePoint {
    while x >= 1.0 {
        x -= 1.0;
        square = o.right(square);
    }
    while x < 0.0 {
        x += 1.0;
        square = o.left(square);
    }
    while y >= 1.0 {
        y -= 1.0;
        square = o.up(square);
    }
    while y < 0.0 {
        y += 1.0;
        square = o.down(square);
    }
    SurfacePoint { square, x, y }
}

/// f64 mirror of a branch for fast point location.
#[derive(Clone, Debug)]
struct BranchF64 {
    verts: Vec<(f64, f64)>,
    mat: [[f64; 2]; 2],
    tr: (f64, f64),
    target: usize,
}

/// Point-location structure over a branch decomposition (forward and inverse).
pub struct MapEvaluator<'a> {
    t: &'a AffineAutomorphism,
    forward: Vec<Vec<BranchF64>>,
    inverse: Vec<Vec<BranchF64>>,
}

impl<'a> MapEvaluator<'a> {
    pub fn new(t: &'a AffineAutomorphism) -> Self {
        let n = t.surface.n_squares();
        let mut forward: Vec<Vec<BranchF64>> = vec![Vec::new(); n];
        let mut inverse: Vec<Vec<BranchF64>> = vec![Vec::new(); n];
        for b in &t.branches {
            let m = b.linear.to_f64();
            let (tx, ty) = b.translation.to_f64();
            forward[b.source].push(BranchF64 {
                verts: b.domain.verts_f64(),
                mat: m,
                tr: (tx, ty),
                target: b.target,
            });
            // inverse branch: domain = image polygon, map = inverse affine
            let minv = b.linear.inverse_unimodular();
            let mf = minv.to_f64();
            let image = b
                .domain
                .map_affine(&b.linear, &b.translation)
                .verts_f64();
            // z = Minv (w - tr)
            let itx = -(mf[0][0] * tx + mf[0][1] * ty);
            let ity = -(mf[1][0] * tx + mf[1][1] * ty);
            inverse[b.target].push(BranchF64 {
                verts: image,
                mat: mf,
                tr: (itx, ity),
                target: b.source,
            });
        }
        MapEvaluator { t, forward, inverse }
    }

    pub fn automorphism(&self) -> &AffineAutomorphism {
        self.t
    }

    fn locate_and_map(table: &[Vec<BranchF64>], p: SurfacePoint) -> (usize, f64, f64) {
        let mut best: Option<(f64, &BranchF64)> = None;
        for b in &table[p.square] {
            // signed distance to the most violating edge; > 0 inside
            let mut margin = f64::INFINITY;
            let n = b.verts.len();
            for i in 0..n {
                let (ax, ay) = b.verts[i];
                let (bx, by) = b.verts[(i + 1) % n];
                let cr = (bx - ax) * (p.y - ay) - (by - ay) * (p.x - ax);
                margin = margin.min(cr);
            }
            if best.as_ref().map_or(true, |(m, _)| margin > *m) {
                best = Some((margin, b));
            }
        }
        let (margin, b) = best.expect("square has no branches");
        debug_assert!(margin > -1e-9, "point outside every branch domain");
        let x = b.mat[0][0] * p.x + b.mat[0][1] * p.y + b.tr.0;
        let y = b.mat[1][0] * p.x + b.mat[1][1] * p.y + b.tr.1;
        (b.target, x, y)
    }

    /// Applies the map (n > 0) or its inverse (n < 0) pointwise `|n|` times.
    pub fn apply(&self, p: SurfacePoint, n: i64) -> Result<SurfacePoint, DynamicsError> {
        let o = &self.t.surface;
        let mut cur = p;
        let table = if n >= 0 { &self.forward } else { &self.inverse };
        for _ in 0..n.unsigned_abs() {
            let (sq, x, y) = Self::locate_and_map(table, cur);
            cur = normalize(o, sq, x, y);
            if is_vertex_f64(cur) {
                return Err(DynamicsError::HitVertex);
            }
        }
        Ok(cur)
    }
}

fn is_vertex_f64(p: SurfacePoint) -> bool {
    let near0 = |v: f64| v.abs() < 1e-13 || (v - 1.0).abs() < 1e-13;
    near0(p.x) && near0(p.y)
}

/// Convenience wrapper building the evaluator per call; hot paths should hold
/// a [`MapEvaluator`].
pub fn apply_map(
    t: &AffineAutomorphism,
    p: SurfacePoint,
    n: i64,
) -> Result<SurfacePoint, DynamicsError> {
    MapEvaluator::new(t).apply(p, n)
}

/// Outcome of the chart-vertical flow.
#[derive(Clone, Copy, Debug)]
pub struct FlowOutcome {
    pub endpoint: SurfacePoint,
    pub time_consumed: f64,
    pub hit_singularity: bool,
    pub crossings: u64,
}

/// Moves vertically by `|time|` in the sign's direction, crossing square
/// tops/bottoms through the gluing. Stops early (as a value, not an error)
/// when the trajectory meets a singular vertex exactly; only trajectories
/// with abscissa exactly 0 can do so.
pub fn vertical_flow(
    o: &Origami,
    prof: &SingularityProfile,
    p: SurfacePoint,
    time: f64,
) -> FlowOutcome {
    let up = time >= 0.0;
    let mut remaining = time.abs();
    let mut sq = p.square;
    let mut y = p.y;
    let mut consumed = 0.0;
    let mut crossings = 0u64;
    let on_singular_column = p.x == 0.0;
    loop {
        let dist = if up { 1.0 - y } else { y };
        if remaining < dist || (remaining == dist && !up && y == remaining) {
            let ny = if up { y + remaining } else { y - remaining };
            return FlowOutcome {
                endpoint: SurfacePoint {
                    square: sq,
                    x: p.x,
                    y: ny,
                },
                time_consumed: consumed + remaining,
                hit_singularity: false,
                crossings,
            };
        }
        // crossing
        consumed += dist;
        remaining -= dist;
        let next = if up { o.up(sq) } else { o.down(sq) };
        if on_singular_column {
            // upward crossing passes the corner BL(up(sq)); downward passes BL(sq)
            let corner_vertex = if up {
                prof.vertex_of_bl(o.up(sq))
            } else {
                prof.vertex_of_bl(sq)
            };
            if prof.singular[corner_vertex] {
                let endpoint = if up {
                    SurfacePoint {
                        square: next,
                        x: 0.0,
                        y: 0.0,
                    }
                } else {
                    SurfacePoint {
                        square: sq,
                        x: 0.0,
                        y: 0.0,
                    }
                };
                return FlowOutcome {
                    endpoint,
                    time_consumed: consumed,
                    hit_singularity: true,
                    crossings,
                };
            }
        }
        crossings += 1;
        sq = next;
        y = if up { 0.0 } else { 1.0 };
        if remaining == 0.0 {
            return FlowOutcome {
                endpoint: SurfacePoint {
                    square: sq,
                    x: p.x,
                    y,
                },
                time_consumed: consumed,
                hit_singularity: false,
                crossings,
            };
        }
    }
}

/// One maximal sub-segment of a straight-line trajectory inside a single
/// square: position `start + (t − t0)·dir` for `t ∈ [t0, t1]`.
#[derive(Clone, Copy, Debug)]
pub struct FlowSegment {
    pub square: usize,
    pub start: (f64, f64),
    pub t0: f64,
    pub t1: f64,
}

const CORNER_EPS: f64 = 1e-12;

/// Splits the straight-line flow with unit direction `dir` from `p` over
/// `[0, time]` into per-square segments (time may be negative: the direction
/// reverses). Crossings that pass within `1e-12` of a singular corner stop
/// the computation with `HitSingularity`.
pub fn flow_segments(
    o: &Origami,
    prof: &SingularityProfile,
    p: SurfacePoint,
    dir: (f64, f64),
    time: f64,
) -> Result<Vec<FlowSegment>, DynamicsError> {
    let (mut dx, mut dy) = dir;
    let mut remaining = time;
    if time < 0.0 {
        dx = -dx;
        dy = -dy;
        remaining = -time;
    }
    let mut segs = Vec::new();
    let mut sq = p.square;
    let mut x = p.x;
    let mut y = p.y;
    let mut t = 0.0;
    let max_steps = (remaining * 3.0) as usize + 16;
    for _ in 0..max_steps {
        let tx = if dx > 0.0 {
            (1.0 - x) / dx
        } else if dx < 0.0 {
            -x / dx
        } else {
            f64::INFINITY
        };
        let ty = if dy > 0.0 {
            (1.0 - y) / dy
        } else if dy < 0.0 {
            -y / dy
        } else {
            f64::INFINITY
        };
        let step = tx.min(ty);
        if remaining - t <= step {
            segs.push(FlowSegment {
                square: sq,
                start: (x, y),
                t0: t,
                t1: remaining,
            });
            return Ok(segs);
        }
        segs.push(FlowSegment {
            square: sq,
            start: (x, y),
            t0: t,
            t1: t + step,
        });
        let nx = x + step * dx;
        let ny = y + step * dy;
        // corner proximity at the crossing point ⇒ possible singular hit
        let near01 = |v: f64| v < CORNER_EPS || v > 1.0 - CORNER_EPS;
        if near01(nx) && near01(ny) {
            let vtx = prof.vertex_of_corner(
                o,
                sq,
                match (nx > 0.5, ny > 0.5) {
                    (false, false) => crate::surface::Corner::Bl,
                    (true, false) => crate::surface::Corner::Br,
                    (true, true) => crate::surface::Corner::Tr,
                    (false, true) => crate::surface::Corner::Tl,
                },
            );
            if prof.singular[vtx] {
                return Err(DynamicsError::HitSingularity(if time < 0.0 {
                    -(t + step)
                } else {
                    t + step
                }));
            }
        }
        t += step;
        if tx <= ty {
            if dx > 0.0 {
                sq = o.right(sq);
                x = 0.0;
            } else {
                sq = o.left(sq);
                x = 1.0;
            }
            y = ny.clamp(0.0, 1.0);
        } else {
            if dy > 0.0 {
                sq = o.up(sq);
                y = 0.0;
            } else {
                sq = o.down(sq);
                y = 1.0;
            }
            x = nx.clamp(0.0, 1.0);
        }
    }
    unreachable!("flow step budget exhausted");
}

/// Endpoint of the straight-line flow (signed time).
pub fn line_flow(
    o: &Origami,
    prof: &SingularityProfile,
    p: SurfacePoint,
    dir: (f64, f64),
    time: f64,
) -> Result<SurfacePoint, DynamicsError> {
    let segs = flow_segments(o, prof, p, dir, time)?;
    let last = segs.last().expect("at least one segment");
    let sgn = if time < 0.0 { -1.0 } else { 1.0 };
    let dt = last.t1 - last.t0;
    Ok(normalize(
        o,
        last.square,
        last.start.0 + sgn * dt * dir.0,
        last.start.1 + sgn * dt * dir.1,
    ))
}

/// Chart distance between two surface points, realizing `b` in `a`'s chart
/// through at most one gluing; `None` when they are farther apart than one
/// square.
pub fn chart_distance(o: &Origami, a: SurfacePoint, b: SurfacePoint) -> Option<f64> {
    let candidates = [
        (a.square, 0.0, 0.0),
        (o.right(a.square), 1.0, 0.0),
        (o.left(a.square), -1.0, 0.0),
        (o.up(a.square), 0.0, 1.0),
        (o.down(a.square), 0.0, -1.0),
        (o.up(o.right(a.square)), 1.0, 1.0),
        (o.down(o.left(a.square)), -1.0, -1.0),
        (o.up(o.left(a.square)), -1.0, 1.0),
        (o.down(o.right(a.square)), 1.0, -1.0),
    ];
    let mut best: Option<f64> = None;
    for (sq, ox, oy) in candidates {
        if sq == b.square {
            let d = ((b.x + ox - a.x).powi(2) + (b.y + oy - a.y).powi(2)).sqrt();
            if best.map_or(true, |bd| d < bd) {
                best = Some(d);
            }
        }
    }
    best
}

/// Residual of the conjugation identity `T(g_s^E(p)) = g_{c·s}^E(T(p))` along
/// the contracting eigendirection `E` with contraction factor `c = ε λ⁻¹`.
pub fn conjugacy_identity_check(
    t: &AffineAutomorphism,
    p: SurfacePoint,
    s: f64,
) -> Result<f64, DynamicsError> {
    let o = &t.surface;
    let prof = &t.profile;
    let dir = t.contracting_direction();
    let c = t.contracting_eigenvalue();
    let ev = MapEvaluator::new(t);
    let lhs = ev.apply(line_flow(o, prof, p, dir, s)?, 1)?;
    let rhs = line_flow(o, prof, ev.apply(p, 1)?, dir, c * s)?;
    chart_distance(o, lhs, rhs).ok_or(DynamicsError::UnreachableBothDirections)
}

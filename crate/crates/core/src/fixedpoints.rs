//! Fixed points of `Tⁿ`, their Lefschetz indices by winding number, and the
//! flat trace.
//!
//! Regular fixed points are the exact rational solutions of
//! `(I − Aⁿ)z = τ` inside the self-branches of the composed map; vertices
//! fixed by the iterated vertex image are enumerated separately. The index
//! at a point is the degree of `p ↦ (p − Tⁿp)/‖p − Tⁿp‖` on a small loop,
//! computed with angle unwrapping in the developed cone chart (the k-fold
//! cover flattened by `θ ↦ θ/k` for cone angle `2πk`). At smooth fixed
//! points this equals `sign det(I − Aⁿ)`; the winding computation is the
//! primary definition and the sign rule is its oracle-validated shortcut.
//!
//! The flat trace divides every index by `(1 − εⁿλⁿ)(1 − εⁿλ⁻ⁿ)` and is
//! compared against both the truncated and the closed-form resonance sums.

use crate::automorphism::{canonical_point, compose_power, AffineAutomorphism, AutomorphismError};
use crate::dynamics::{normalize, MapEvaluator, SurfacePoint};
use crate::geom::{rat_int, Rat, RatVec};
use crate::resonances::{closed_form_sum, cutoff_for_tail, enumerate_spectrum, resonance_sum};
use crate::surface::{Corner, Origami, SingularityProfile};
use num::complex::Complex64;
use num::{BigInt, Signed, Zero};
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FixedPointError {
    #[error(transparent)]
    Automorphism(#[from] AutomorphismError),
    #[error("displacement below threshold at a loop sample; shrink the radius")]
    DegenerateDisplacement,
    #[error("winding number did not stabilize under refinement")]
    UnstableWinding,
    #[error("loop point mapped onto a vertex")]
    LoopHitVertex,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum FixedPointKind {
    /// Non-singular point (possibly a regular marked vertex) with its exact
    /// canonical chart location.
    Regular,
    /// Singular vertex (cone angle > 2π) fixed by the iterate.
    Singular,
}

#[derive(Clone, Debug)]
pub struct FixedPointRecord {
    pub kind: FixedPointKind,
    /// Canonical chart location for regular records.
    pub location: Option<(usize, Rat, Rat)>,
    /// Vertex id for singular records.
    pub vertex: Option<usize>,
    pub index: i64,
    pub branch_id: Option<usize>,
    pub n: u32,
}

/// All fixed points of `Tⁿ` (t is the base map). Regular points carry exact
/// rational locations; indices are filled in (sign rule at smooth points,
/// winding at singular vertices).
pub fn enumerate_fixed_points(
    t: &AffineAutomorphism,
    n: u32,
    budget: usize,
) -> Result<Vec<FixedPointRecord>, FixedPointError> {
    let tn = compose_power(t, n, budget)?;
    enumerate_fixed_points_of(t, &tn)
}

fn enumerate_fixed_points_of(
    t: &AffineAutomorphism,
    tn: &AffineAutomorphism,
) -> Result<Vec<FixedPointRecord>, FixedPointError> {
    let o = &tn.surface;
    let prof = &tn.profile;
    let n = tn.power;
    let m = tn.matrix;
    // det(I - A^n) = 2 - tr(A^n), nonzero by hyperbolicity
    let det = BigInt::from(2) - BigInt::from(m.trace());
    assert!(!det.is_zero());
    let smooth_index: i64 = if det.is_positive() { 1 } else { -1 };

    let mut seen: HashMap<(usize, Rat, Rat), usize> = HashMap::new();
    let mut records: Vec<FixedPointRecord> = Vec::new();

    for (bi, b) in tn.branches.iter().enumerate() {
        if b.source != b.target {
            continue;
        }
        // z = ((1-d)τx + bτy, cτx + (1-a)τy) / det
        let rdet = Rat::new(det.clone(), BigInt::from(1));
        let zx = (rat_int(1 - m.d) * &b.translation.x + rat_int(m.b) * &b.translation.y) / &rdet;
        let zy = (rat_int(m.c) * &b.translation.x + rat_int(1 - m.a) * &b.translation.y) / &rdet;
        let z = RatVec::new(zx, zy);
        if !b.domain.contains(&z) {
            continue;
        }
        debug_assert_eq!(b.map_point(&z), z);
        let (sq, p) = canonical_point(o, (b.source, z));
        if p.x.is_zero() && p.y.is_zero() {
            // vertex: singular vertices handled by the vertex pass
            let vtx = prof.vertex_of_bl(sq);
            if prof.singular[vtx] {
                continue;
            }
        }
        let key = (sq, p.x.clone(), p.y.clone());
        if seen.contains_key(&key) {
            continue;
        }
        seen.insert(key, records.len());
        records.push(FixedPointRecord {
            kind: FixedPointKind::Regular,
            location: Some((sq, p.x, p.y)),
            vertex: None,
            index: smooth_index,
            branch_id: Some(bi),
            n,
        });
    }

    // fixed vertices: singular ones get winding indices; regular marked
    // vertices are smooth fixed points and may already be present
    for v in 0..prof.n_vertices {
        if tn.vertex_image[v] != v {
            continue;
        }
        if prof.singular[v] {
            let index = refined_winding(|r, s| vertex_winding_index(t, n, v, r, s), {
                let lam_n = t.lambda.powi(n as i32);
                (0.25 / lam_n).min(1.0 / 64.0)
            })?;
            records.push(FixedPointRecord {
                kind: FixedPointKind::Singular,
                location: None,
                vertex: Some(v),
                index,
                branch_id: None,
                n,
            });
        } else {
            // canonical corner representative of the regular vertex
            let s = *prof.vertex_cycles[v].iter().min().unwrap();
            let key = (s, Rat::zero(), Rat::zero());
            if !seen.contains_key(&key) {
                seen.insert(key, records.len());
                records.push(FixedPointRecord {
                    kind: FixedPointKind::Regular,
                    location: Some((s, Rat::zero(), Rat::zero())),
                    vertex: Some(v),
                    index: smooth_index,
                    branch_id: None,
                    n,
                });
            }
        }
    }

    Ok(records)
}

/// Cone-chart coordinates of a point near a vertex: radius and total angle
/// `θ ∈ [0, 2πk)` measured along the vertex link. Unique for radius < 1/2.
pub fn cone_coords(
    o: &Origami,
    prof: &SingularityProfile,
    vertex: usize,
    q: SurfacePoint,
) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for corner in Corner::ALL {
        if prof.vertex_of_corner(o, q.square, corner) != vertex {
            continue;
        }
        let (cx, cy) = corner.coords();
        let dx = q.x - cx as f64;
        let dy = q.y - cy as f64;
        let r = (dx * dx + dy * dy).sqrt();
        if r >= 0.5 {
            continue;
        }
        let sector = crate::surface::Sector::new(q.square, corner);
        let (v, idx) = prof.link.position(sector);
        debug_assert_eq!(v, vertex);
        let (ax, ay) = corner.start_axis();
        let phi0 = (ay as f64).atan2(ax as f64);
        let mut within = (dy.atan2(dx) - phi0).rem_euclid(2.0 * PI);
        if within > 1.5 * PI {
            within = 0.0; // float noise just below the start axis
        }
        let within = within.min(PI / 2.0);
        let theta = idx as f64 * (PI / 2.0) + within;
        if best.map_or(true, |(br, _)| r < br) {
            best = Some((r, theta));
        }
    }
    best
}

/// Point at cone polar coordinates `(r, θ)` around a vertex.
pub fn cone_point(
    o: &Origami,
    prof: &SingularityProfile,
    vertex: usize,
    r: f64,
    theta: f64,
) -> SurfacePoint {
    let cycle = &prof.link.cycles[vertex];
    let total = cycle.len() as f64 * (PI / 2.0);
    let theta = theta.rem_euclid(total);
    let idx = ((theta / (PI / 2.0)) as usize).min(cycle.len() - 1);
    let within = theta - idx as f64 * (PI / 2.0);
    let sector = cycle[idx];
    let (ax, ay) = sector.corner.start_axis();
    let phi = (ay as f64).atan2(ax as f64) + within;
    let (cx, cy) = sector.corner.coords();
    normalize(
        o,
        sector.square,
        cx as f64 + r * phi.cos(),
        cy as f64 + r * phi.sin(),
    )
}

fn unwrap_winding(displacements: &[(f64, f64)]) -> Result<i64, FixedPointError> {
    let m = displacements.len();
    let mut total = 0.0;
    for i in 0..m {
        let (ax, ay) = displacements[i];
        let (bx, by) = displacements[(i + 1) % m];
        let na = (ax * ax + ay * ay).sqrt();
        let nb = (bx * bx + by * by).sqrt();
        if na < 1e-14 || nb < 1e-14 {
            return Err(FixedPointError::DegenerateDisplacement);
        }
        // signed angle between consecutive displacement directions
        let cross = ax * by - ay * bx;
        let dot = ax * bx + ay * by;
        let step = cross.atan2(dot);
        if step.abs() > PI / 2.0 {
            return Err(FixedPointError::UnstableWinding);
        }
        total += step;
    }
    let w = total / (2.0 * PI);
    let rounded = w.round();
    if (w - rounded).abs() > 0.05 {
        return Err(FixedPointError::UnstableWinding);
    }
    Ok(rounded as i64)
}

/// Winding index of `Tⁿ` at a fixed vertex, computed in the flattened cone
/// chart `w = r·e^{iθ/k}`.
pub fn vertex_winding_index(
    t: &AffineAutomorphism,
    n: u32,
    vertex: usize,
    radius: f64,
    samples: usize,
) -> Result<i64, FixedPointError> {
    let o = &t.surface;
    let prof = &t.profile;
    let k = prof.link.cone_k(vertex) as f64;
    let ev = MapEvaluator::new(t);
    let mut disp = Vec::with_capacity(samples);
    for i in 0..samples {
        let theta = 2.0 * PI * k * (i as f64 + 0.382) / samples as f64;
        let p = cone_point(o, prof, vertex, radius, theta);
        let q = ev
            .apply(p, n as i64)
            .map_err(|_| FixedPointError::LoopHitVertex)?;
        let (rp, tp) =
            cone_coords(o, prof, vertex, p).ok_or(FixedPointError::DegenerateDisplacement)?;
        let (rq, tq) =
            cone_coords(o, prof, vertex, q).ok_or(FixedPointError::DegenerateDisplacement)?;
        let wp = (rp * (tp / k).cos(), rp * (tp / k).sin());
        let wq = (rq * (tq / k).cos(), rq * (tq / k).sin());
        disp.push((wp.0 - wq.0, wp.1 - wq.1));
    }
    unwrap_winding(&disp)
}

/// Runs a winding computation with refinement: radius halves and the sample
/// count doubles until two consecutive answers agree.
fn refined_winding<F>(mut wind: F, radius0: f64) -> Result<i64, FixedPointError>
where
    F: FnMut(f64, usize) -> Result<i64, FixedPointError>,
{
    let mut radius = radius0;
    let mut samples = 512;
    let mut prev: Option<i64> = None;
    for _ in 0..5 {
        match wind(radius, samples) {
            Ok(w) => {
                if prev == Some(w) {
                    return Ok(w);
                }
                prev = Some(w);
            }
            Err(FixedPointError::LoopHitVertex) | Err(FixedPointError::UnstableWinding) => {
                prev = None;
            }
            Err(e) => return Err(e),
        }
        radius /= 2.0;
        samples *= 2;
    }
    Err(FixedPointError::UnstableWinding)
}

/// Winding index at a non-vertex fixed point, in a plain local chart.
pub fn regular_winding_index(
    t: &AffineAutomorphism,
    n: u32,
    square: usize,
    x: f64,
    y: f64,
    radius: f64,
    samples: usize,
) -> Result<i64, FixedPointError> {
    let o = &t.surface;
    let ev = MapEvaluator::new(t);
    let mut disp = Vec::with_capacity(samples);
    for i in 0..samples {
        let phi = 2.0 * PI * (i as f64 + 0.382) / samples as f64;
        let px = x + radius * phi.cos();
        let py = y + radius * phi.sin();
        let p = normalize(o, square, px, py);
        let q = ev
            .apply(p, n as i64)
            .map_err(|_| FixedPointError::LoopHitVertex)?;
        let qc = realize_in_chart(o, square, (x, y), q)
            .ok_or(FixedPointError::DegenerateDisplacement)?;
        disp.push((px - qc.0, py - qc.1));
    }
    unwrap_winding(&disp)
}

fn realize_in_chart(
    o: &Origami,
    base: usize,
    center: (f64, f64),
    q: SurfacePoint,
) -> Option<(f64, f64)> {
    let candidates = [
        (base, 0.0, 0.0),
        (o.right(base), 1.0, 0.0),
        (o.left(base), -1.0, 0.0),
        (o.up(base), 0.0, 1.0),
        (o.down(base), 0.0, -1.0),
        (o.up(o.right(base)), 1.0, 1.0),
        (o.down(o.left(base)), -1.0, -1.0),
        (o.up(o.left(base)), -1.0, 1.0),
        (o.down(o.right(base)), 1.0, -1.0),
    ];
    let mut best: Option<(f64, (f64, f64))> = None;
    for (sq, ox, oy) in candidates {
        if sq == q.square {
            let cand = (q.x + ox, q.y + oy);
            let d = ((cand.0 - center.0).powi(2) + (cand.1 - center.1).powi(2)).sqrt();
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                best = Some((d, cand));
            }
        }
    }
    best.map(|(_, c)| c)
}

/// Winding index of a record with automatic refinement (radius halves,
/// samples double until two consecutive answers agree).
pub fn lefschetz_index(
    t: &AffineAutomorphism,
    record: &FixedPointRecord,
    radius: f64,
    samples: usize,
) -> Result<i64, FixedPointError> {
    let n = record.n;
    let _ = samples;
    match record.kind {
        FixedPointKind::Singular => {
            let v = record.vertex.expect("singular record has a vertex");
            refined_winding(|r, s| vertex_winding_index(t, n, v, r, s), radius)
        }
        FixedPointKind::Regular => {
            let (sq, rx, ry) = record.location.as_ref().expect("regular record location");
            if rx.is_zero() && ry.is_zero() {
                // regular marked vertex: cone chart with k = 1
                let v = t.profile.vertex_of_bl(*sq);
                refined_winding(|r, s| vertex_winding_index(t, n, v, r, s), radius)
            } else {
                let x = crate::geom::rat_to_f64(rx);
                let y = crate::geom::rat_to_f64(ry);
                let sq = *sq;
                refined_winding(|r, s| regular_winding_index(t, n, sq, x, y, r, s), radius)
            }
        }
    }
}

/// Synthetic local model of a pseudo-Anosov fixed point on a cone of angle
/// `2πk`: in each planar sheet the map is `diag(ελ, ελ⁻¹)`, and sheets are
/// cyclically shifted by `rot` (rot = 0 fixes every separatrix).
#[derive(Clone, Copy, Debug)]
pub struct ConeModel {
    pub k: usize,
    pub lambda: f64,
    pub eps: f64,
    pub rot: usize,
}

impl ConeModel {
    pub fn apply(&self, r: f64, theta: f64) -> (f64, f64) {
        let two_pi = 2.0 * PI;
        let total = self.k as f64 * two_pi;
        let theta = theta.rem_euclid(total);
        let sheet = (theta / two_pi).floor() as usize % self.k;
        let local = theta - sheet as f64 * two_pi;
        let x = self.eps * self.lambda * r * local.cos();
        let y = self.eps / self.lambda * r * local.sin();
        let r2 = (x * x + y * y).sqrt();
        let local2 = y.atan2(x).rem_euclid(two_pi);
        let sheet2 = (sheet + self.rot) % self.k;
        (r2, sheet2 as f64 * two_pi + local2)
    }
}

/// Winding index of a synthetic cone model, same flattened-chart computation
/// as on real surfaces.
pub fn cone_model_index(
    model: &ConeModel,
    radius: f64,
    samples: usize,
) -> Result<i64, FixedPointError> {
    let k = model.k as f64;
    let mut disp = Vec::with_capacity(samples);
    for i in 0..samples {
        let theta = 2.0 * PI * k * (i as f64 + 0.382) / samples as f64;
        let (rq, tq) = model.apply(radius, theta);
        let wp = (radius * (theta / k).cos(), radius * (theta / k).sin());
        let wq = (rq * (tq / k).cos(), rq * (tq / k).sin());
        disp.push((wp.0 - wq.0, wp.1 - wq.1));
    }
    unwrap_winding(&disp)
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointSummary {
    pub kind: String,
    pub square: Option<usize>,
    pub x: Option<String>,
    pub y: Option<String>,
    pub vertex: Option<usize>,
    pub index: i64,
}

/// One row of the trace-identity verification.
#[derive(Clone, Debug, Serialize)]
pub struct TraceReport {
    pub n: u32,
    /// geometric flat trace Σ ind / ((1 − εⁿλⁿ)(1 − εⁿλ⁻ⁿ))
    pub lhs: f64,
    pub rhs_truncated: f64,
    pub rhs_closed: f64,
    pub residual: f64,
    pub tail_bound: f64,
    pub fixed_point_count: usize,
    pub regular_count: usize,
    pub singular_count: usize,
    pub index_sum: i64,
    pub breakdown: Vec<FixedPointSummary>,
}

/// Evaluates both sides of the trace identity at power `n`. `xi` is the
/// homological eigenvalue list from the independent exact pipeline.
pub fn flat_trace(
    t: &AffineAutomorphism,
    xi: &[(Complex64, usize)],
    n: u32,
    budget: usize,
    with_breakdown: bool,
) -> Result<TraceReport, FixedPointError> {
    let records = enumerate_fixed_points(t, n, budget)?;
    let index_sum: i64 = records.iter().map(|r| r.index).sum();
    let lam_n = t.lambda.powi(n as i32);
    let eps_n = if t.eps == 1 || n % 2 == 0 { 1.0 } else { -1.0 };
    let denom = (1.0 - eps_n * lam_n) * (1.0 - eps_n / lam_n);
    let lhs = index_sum as f64 / denom;

    let rhs_closed = closed_form_sum(xi, t.lambda, t.eps, t.eps, n).re;
    let cutoff = cutoff_for_tail(xi, t.lambda, n, 1e-9);
    let spec = enumerate_spectrum(xi, t.lambda, t.eps, t.eps, cutoff)
        .expect("xi validated by the homology pipeline");
    let (trunc, tail) = resonance_sum(&spec, xi, n);

    let regular_count = records
        .iter()
        .filter(|r| r.kind == FixedPointKind::Regular)
        .count();
    let singular_count = records.len() - regular_count;
    let breakdown = if with_breakdown {
        records
            .iter()
            .map(|r| FixedPointSummary {
                kind: match r.kind {
                    FixedPointKind::Regular => "regular".into(),
                    FixedPointKind::Singular => "singular".into(),
                },
                square: r.location.as_ref().map(|(s, _, _)| *s),
                x: r.location.as_ref().map(|(_, x, _)| x.to_string()),
                y: r.location.as_ref().map(|(_, _, y)| y.to_string()),
                vertex: r.vertex,
                index: r.index,
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(TraceReport {
        n,
        lhs,
        rhs_truncated: trunc.re,
        rhs_closed,
        residual: (lhs - rhs_closed).abs(),
        tail_bound: tail,
        fixed_point_count: records.len(),
        regular_count,
        singular_count,
        index_sum,
        breakdown,
    })
}

/// Lefschetz number `2 − Σ (roots of chi_abs)ⁿ` from the exact homology
/// pipeline (orientation-preserving maps). Independent oracle for the
/// geometric index sum.
pub fn lefschetz_number(chi_abs_power_sums: &[BigInt], n: usize) -> BigInt {
    BigInt::from(2) - chi_abs_power_sums[n].clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphism::{search_automorphism, DEFAULT_BRANCH_BUDGET};
    use crate::geom::Mat2;
    use crate::homology::homology_action;
    use crate::surface::{l_origami_3, torus};

    fn cat() -> AffineAutomorphism {
        search_automorphism(&torus(), Mat2::new(2, 1, 1, 1)).unwrap()
    }

    fn l3_auto() -> AffineAutomorphism {
        search_automorphism(&l_origami_3(), Mat2::new(5, 2, 2, 1)).unwrap()
    }

    #[test]
    fn cat_map_fixed_point_counts() {
        let t = cat();
        for n in 1..=4u32 {
            let records = enumerate_fixed_points(&t, n, DEFAULT_BRANCH_BUDGET).unwrap();
            let a = Mat2::new(2, 1, 1, 1).pow(n);
            let expected = (2i64 - a.trace()).abs();
            assert_eq!(records.len() as i64, expected, "n={n}");
            assert!(records.iter().all(|r| r.kind == FixedPointKind::Regular));
            assert!(records.iter().all(|r| r.index == -1));
        }
    }

    #[test]
    fn cat_map_origin_is_fixed() {
        let t = cat();
        let records = enumerate_fixed_points(&t, 1, DEFAULT_BRANCH_BUDGET).unwrap();
        assert_eq!(records.len(), 1);
        let (s, x, y) = records[0].location.clone().unwrap();
        assert_eq!(s, 0);
        assert!(x.is_zero() && y.is_zero());
    }

    #[test]
    fn winding_matches_smooth_rule_on_torus() {
        let t = cat();
        let records = enumerate_fixed_points(&t, 2, DEFAULT_BRANCH_BUDGET).unwrap();
        for r in records.iter().take(3) {
            let w = lefschetz_index(&t, r, 1.0 / 64.0, 512).unwrap();
            assert_eq!(w, -1);
        }
    }

    #[test]
    fn negative_eigenvalue_regular_index_is_plus_one() {
        let t = search_automorphism(&torus(), Mat2::new(-2, -1, -1, -1)).unwrap();
        let records = enumerate_fixed_points(&t, 1, DEFAULT_BRANCH_BUDGET).unwrap();
        // det(I - A) = 2 - tr(A) = 5 > 0: all indices +1, count = |2 - tr| = 5
        assert!(records.iter().all(|r| r.index == 1));
        assert_eq!(records.len(), 5);
        let w = lefschetz_index(&t, &records[0], 1.0 / 64.0, 512).unwrap();
        assert_eq!(w, 1);
    }

    #[test]
    fn cone_model_indices() {
        // regular hyperbolic: -1; negative eigenvalues: +1
        let m = ConeModel {
            k: 1,
            lambda: 2.618,
            eps: 1.0,
            rot: 0,
        };
        assert_eq!(cone_model_index(&m, 0.01, 512).unwrap(), -1);
        let m = ConeModel {
            k: 1,
            lambda: 2.618,
            eps: -1.0,
            rot: 0,
        };
        assert_eq!(cone_model_index(&m, 0.01, 512).unwrap(), 1);
        // cone angle 2πk, all separatrices fixed: 1 - 2k; rotated prongs: +1
        for k in 2..=4 {
            let m = ConeModel {
                k,
                lambda: 2.618,
                eps: 1.0,
                rot: 0,
            };
            assert_eq!(
                cone_model_index(&m, 0.01, 1024).unwrap(),
                1 - 2 * k as i64,
                "k={k}"
            );
            let m = ConeModel {
                k,
                lambda: 2.618,
                eps: 1.0,
                rot: 1,
            };
            assert_eq!(cone_model_index(&m, 0.01, 1024).unwrap(), 1, "k={k} rot");
        }
    }

    #[test]
    fn l3_lefschetz_identity() {
        // Σ ind over fixed points equals 2 − Σ (chi_abs roots)ⁿ: the two
        // sides come from disjoint pipelines.
        let t = l3_auto();
        let h = homology_action(&t).unwrap();
        let sums = h.abs_power_sums(3);
        for n in 1..=3u32 {
            let records = enumerate_fixed_points(&t, n, DEFAULT_BRANCH_BUDGET).unwrap();
            let index_sum: i64 = records.iter().map(|r| r.index).sum();
            let expected = lefschetz_number(&sums, n as usize);
            assert_eq!(
                BigInt::from(index_sum),
                expected,
                "n={n}: records={}",
                records.len()
            );
        }
    }

    #[test]
    fn torus_flat_trace_is_one() {
        let t = cat();
        for n in 1..=6u32 {
            let rep = flat_trace(&t, &[], n, DEFAULT_BRANCH_BUDGET, false).unwrap();
            assert!((rep.lhs - 1.0).abs() < 1e-10, "n={n}: lhs={}", rep.lhs);
            assert!(rep.residual < 1e-10);
        }
    }

    #[test]
    fn torus_flat_trace_negative_eps() {
        let t = search_automorphism(&torus(), Mat2::new(-2, -1, -1, -1)).unwrap();
        for n in 1..=4u32 {
            let rep = flat_trace(&t, &[], n, DEFAULT_BRANCH_BUDGET, false).unwrap();
            assert!((rep.lhs - 1.0).abs() < 1e-10, "n={n}: lhs={}", rep.lhs);
            assert!(rep.residual < 1e-10);
        }
    }

    #[test]
    fn l3_flat_trace_small_n() {
        let t = l3_auto();
        let h = homology_action(&t).unwrap();
        let xi = crate::homology::xi_roots(&h, 1e-9).unwrap();
        for n in 1..=3u32 {
            let rep = flat_trace(&t, &xi, n, DEFAULT_BRANCH_BUDGET, false).unwrap();
            assert!(
                rep.residual < 1e-6,
                "n={n}: lhs={} rhs={}",
                rep.lhs,
                rep.rhs_closed
            );
            assert!((rep.rhs_truncated - rep.rhs_closed).abs() <= rep.tail_bound + 1e-9);
        }
    }
}

//! Action of an affine automorphism on edge-generated relative homology, and
//! the exact factorization of its characteristic polynomial.
//!
//! With all vertices marked, the oriented edges (one horizontal `h_s`, one
//! vertical `v_s` per square) generate `H₁(M, P; Z)` modulo the square
//! boundary relations `h_s + v_{h(s)} − h_{v(s)} − v_s`. The image of each
//! edge is its developed straight segment, expressed as a boundary chain by
//! rounding edge crossings to canonical corners; crossing adjustments cancel
//! between consecutive squares, so the chain is exact, not approximate.
//!
//! The characteristic polynomial on the relative module factors exactly as
//! `chi_rel = chi_vertex · chi_A · chi_xi`: the vertex-permutation part, the
//! `t² − tr(A)·t + 1` part carried by the horizontal/vertical classes, and
//! the part Ξ whose roots govern the resonance spectrum. Both divisions are
//! performed over the integers and double as correctness oracles.

use crate::automorphism::{develop_germ, AffineAutomorphism, Traversal};
use crate::geom::Mat2;
use crate::poly::{cluster_roots, IntMatrix, IntPoly};
use crate::surface::{Corner, Origami, Sector};
use num::complex::Complex64;
use num::{BigInt, One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HomologyError {
    #[error("exact polynomial division failed for {0} (synthesis bug upstream)")]
    DivisionFailure(&'static str),
    #[error("boundary relations have unexpected rank or no unit pivot: {0}")]
    BasisError(String),
    #[error("root clustering ambiguous: {0}")]
    ClusterAmbiguity(String),
    #[error("homology action requires a synthesized map, not a composed power")]
    MissingGermData,
    #[error(transparent)]
    Automorphism(#[from] crate::automorphism::AutomorphismError),
}

/// Integer matrix of `T_*` on `H₁(M, P; Z)` together with the exact
/// factorization of its characteristic polynomial.
#[derive(Clone, Debug)]
pub struct HomologyAction {
    /// Matrix on the quotient basis (dimension 2g + |P| − 1 = N + 1).
    pub edge_matrix: IntMatrix,
    pub chi_rel: IntPoly,
    pub chi_vertex: IntPoly,
    pub chi_abs: IntPoly,
    pub chi_a: IntPoly,
    pub chi_xi: IntPoly,
    pub genus: usize,
    pub n_vertices: usize,
    pub lambda: f64,
    pub eps: i8,
}

impl HomologyAction {
    /// Power sums Σ over roots of chi_abs at exponent 1..=n_max (exact).
    pub fn abs_power_sums(&self, n_max: usize) -> Vec<BigInt> {
        self.chi_abs.power_sums(n_max)
    }

    /// Power sums over Ξ only (exact integers converted at the end).
    pub fn xi_power_sums(&self, n_max: usize) -> Vec<f64> {
        self.chi_xi
            .power_sums(n_max)
            .iter()
            .map(|b| b.to_f64().expect("power sum out of range"))
            .collect()
    }
}

/// Signed edge chain: index < N is `h_index`, index ≥ N is `v_{index−N}`.
type Chain = Vec<i64>;

fn edge_h(s: usize) -> usize {
    s
}

fn edge_v(n: usize, s: usize) -> usize {
    n + s
}

/// Boundary chain of the route between two corners of square `t`.
/// Counterclockwise steps: Bl→Br is +h_t, Br→Tr is +v_{h(t)}, Tr→Tl is
/// −h_{v(t)}, Tl→Bl is −v_t. The shorter way around is taken; either choice
/// differs by the square relation, which dies in the quotient.
fn route(o: &Origami, t: usize, from: Corner, to: Corner, chain: &mut Chain) {
    let n = o.n_squares();
    let ccw_edge = |c: Corner| -> (usize, i64) {
        match c {
            Corner::Bl => (edge_h(t), 1),
            Corner::Br => (edge_v(n, o.right(t)), 1),
            Corner::Tr => (edge_h(o.up(t)), -1),
            Corner::Tl => (edge_v(n, t), -1),
        }
    };
    let dist = (to.index() + 4 - from.index()) % 4;
    if dist == 0 {
        return;
    }
    if dist <= 2 {
        let mut c = from;
        for _ in 0..dist {
            let (e, sgn) = ccw_edge(c);
            chain[e] += sgn;
            c = c.ccw_next();
        }
    } else {
        // one step clockwise: undo the ccw step to → from
        let (e, sgn) = ccw_edge(to);
        chain[e] -= sgn;
        debug_assert_eq!(to.ccw_next(), from);
    }
}

fn chain_of_traversals(o: &Origami, traversals: &[Traversal], chain: &mut Chain) {
    for t in traversals {
        route(o, t.square, t.entry, t.exit, chain);
    }
}

/// Computes the homology action of a synthesized automorphism.
pub fn homology_action(t: &AffineAutomorphism) -> Result<HomologyAction, HomologyError> {
    let o = &t.surface;
    let n = o.n_squares();
    let germs = t.germ_map.as_ref().ok_or(HomologyError::MissingGermData)?;
    let link = &t.profile.link;

    let e1 = t.matrix.col_x();
    let e2 = t.matrix.col_y();
    let east_to_north = crate::automorphism::axes_in_ccw_arc(e1, e2) as isize;

    // Images of the 2N edges as integer chains.
    let mut images: Vec<Chain> = Vec::with_capacity(2 * n);
    for s in 0..n {
        let dev = develop_germ(o, germs[s], e1)?;
        let mut chain = vec![0i64; 2 * n];
        chain_of_traversals(o, &dev.traversals, &mut chain);
        images.push(chain);
    }
    for s in 0..n {
        let north = link.advance(germs[s], east_to_north);
        let dev = develop_germ(o, north, e2)?;
        let mut chain = vec![0i64; 2 * n];
        chain_of_traversals(o, &dev.traversals, &mut chain);
        images.push(chain);
    }

    // Boundary relations ∂(square s) = h_s + v_{h(s)} − h_{v(s)} − v_s.
    let mut rels: Vec<Vec<BigInt>> = Vec::new();
    for s in 0..n {
        let mut r = vec![BigInt::zero(); 2 * n];
        r[edge_h(s)] += 1;
        r[edge_v(n, o.right(s))] += 1;
        r[edge_h(o.up(s))] -= 1;
        r[edge_v(n, s)] -= 1;
        if r.iter().any(|c| !c.is_zero()) {
            rels.push(r);
        }
    }

    // Gauss-Jordan elimination over Z with unit pivots; afterwards every
    // pivot edge is expressed purely in kept edges.
    let mut pivot_col: Vec<usize> = Vec::new();
    let mut is_pivot = vec![false; 2 * n];
    let mut row = 0;
    while row < rels.len() {
        let col = (0..2 * n)
            .rev()
            .find(|&j| !is_pivot[j] && rels[row][j].clone().abs().is_one());
        let col = match col {
            Some(c) => c,
            None => {
                if rels[row].iter().all(|c| c.is_zero()) {
                    rels.remove(row);
                    continue;
                }
                return Err(HomologyError::BasisError(format!(
                    "relation without unit pivot: {:?}",
                    rels[row]
                )));
            }
        };
        if rels[row][col].is_negative() {
            for c in rels[row].iter_mut() {
                *c = -c.clone();
            }
        }
        for r2 in 0..rels.len() {
            if r2 == row || rels[r2][col].is_zero() {
                continue;
            }
            let factor = rels[r2][col].clone();
            for j in 0..2 * n {
                let delta = &factor * &rels[row][j];
                rels[r2][j] -= delta;
            }
        }
        is_pivot[col] = true;
        pivot_col.push(col);
        row += 1;
    }
    let rank = rels.len();
    let expected_rank = n.saturating_sub(1);
    if rank != expected_rank {
        return Err(HomologyError::BasisError(format!(
            "relation rank {rank}, expected {expected_rank}"
        )));
    }

    let kept: Vec<usize> = (0..2 * n).filter(|&j| !is_pivot[j]).collect();
    let dim = kept.len();
    debug_assert_eq!(dim, n + 1);
    let kept_index: Vec<Option<usize>> = {
        let mut v = vec![None; 2 * n];
        for (i, &j) in kept.iter().enumerate() {
            v[j] = Some(i);
        }
        v
    };
    // pivot edge e with row r: e = −Σ_{kept j} rels[r][j]·j
    let reduce = |chain: &Chain| -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); dim];
        for (e, &coeff) in chain.iter().enumerate() {
            if coeff == 0 {
                continue;
            }
            let coeff = BigInt::from(coeff);
            match kept_index[e] {
                Some(i) => out[i] += &coeff,
                None => {
                    let r = pivot_col.iter().position(|&c| c == e).unwrap();
                    for (j, &ke) in kept.iter().enumerate() {
                        let delta = &coeff * &rels[r][ke];
                        out[j] -= delta;
                    }
                }
            }
        }
        out
    };

    let mut m = IntMatrix::zeros(dim);
    for (i, &e) in kept.iter().enumerate() {
        let col = reduce(&images[e]);
        for (j, val) in col.into_iter().enumerate() {
            m[(j, i)] = val;
        }
    }

    let chi_rel = m.charpoly();
    let chi_vertex = vertex_charpoly(&t.vertex_image);
    let chi_abs = chi_rel
        .divide_exact(&chi_vertex)
        .ok_or(HomologyError::DivisionFailure("chi_rel / chi_vertex"))?;
    let chi_a = charpoly_of_a(&t.matrix);
    let chi_xi = chi_abs
        .divide_exact(&chi_a)
        .ok_or(HomologyError::DivisionFailure("chi_abs / chi_A"))?;

    let genus = t.profile.genus;
    if chi_abs.degree() != 2 * genus || (genus >= 1 && chi_xi.degree() != 2 * genus - 2) {
        return Err(HomologyError::BasisError(format!(
            "degree mismatch: deg chi_abs {} (want {}), deg chi_xi {} (want {})",
            chi_abs.degree(),
            2 * genus,
            chi_xi.degree(),
            2 * genus - 2
        )));
    }

    Ok(HomologyAction {
        edge_matrix: m,
        chi_rel,
        chi_vertex,
        chi_abs,
        chi_a,
        chi_xi,
        genus,
        n_vertices: t.profile.n_vertices,
        lambda: t.lambda,
        eps: t.eps,
    })
}

/// Characteristic polynomial of the vertex permutation on reduced 0-homology:
/// Π over cycles (t^len − 1), divided by (t − 1).
fn vertex_charpoly(vertex_image: &[usize]) -> IntPoly {
    let mut seen = vec![false; vertex_image.len()];
    let mut prod = IntPoly::one();
    for start in 0..vertex_image.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut x = start;
        loop {
            seen[x] = true;
            len += 1;
            x = vertex_image[x];
            if x == start {
                break;
            }
        }
        prod = prod.mul(&IntPoly::t_pow_minus_one(len));
    }
    prod.divide_exact(&IntPoly::from_i64(&[-1, 1]))
        .expect("(t-1) divides the permutation characteristic polynomial")
}

fn charpoly_of_a(a: &Mat2) -> IntPoly {
    IntPoly::from_i64(&[1, -a.trace(), 1])
}

/// Complex roots of chi_xi with multiplicities, clustered at `tol`.
/// Multiplicities sum to 2g − 2; the set is conjugate-closed.
pub fn xi_roots(h: &HomologyAction, tol: f64) -> Result<Vec<(Complex64, usize)>, HomologyError> {
    if h.chi_xi.degree() == 0 {
        return Ok(vec![]);
    }
    let roots = h.chi_xi.complex_roots();
    let clusters = cluster_roots(&roots, tol).map_err(HomologyError::ClusterAmbiguity)?;
    let total: usize = clusters.iter().map(|(_, m)| m).sum();
    debug_assert_eq!(total, 2 * h.genus - 2);
    Ok(clusters)
}

/// JSON report shape for the homology factorization.
#[derive(Serialize)]
pub struct HomologyReport {
    pub genus: usize,
    pub n_vertices: usize,
    pub lambda: f64,
    pub eps: i8,
    /// coefficient lists, low degree first
    pub chi_rel: Vec<i64>,
    pub chi_vertex: Vec<i64>,
    pub chi_abs: Vec<i64>,
    pub chi_a: Vec<i64>,
    pub chi_xi: Vec<i64>,
    pub xi_roots: Vec<RootEntry>,
}

#[derive(Serialize)]
pub struct RootEntry {
    pub re: f64,
    pub im: f64,
    pub mult: usize,
}

pub fn coeffs_i64(p: &IntPoly) -> Vec<i64> {
    p.coeffs
        .iter()
        .map(|c| c.to_i64().expect("coefficient exceeds i64 in report"))
        .collect()
}

impl HomologyReport {
    pub fn new(h: &HomologyAction, roots: &[(Complex64, usize)]) -> Self {
        HomologyReport {
            genus: h.genus,
            n_vertices: h.n_vertices,
            lambda: h.lambda,
            eps: h.eps,
            chi_rel: coeffs_i64(&h.chi_rel),
            chi_vertex: coeffs_i64(&h.chi_vertex),
            chi_abs: coeffs_i64(&h.chi_abs),
            chi_a: coeffs_i64(&h.chi_a),
            chi_xi: coeffs_i64(&h.chi_xi),
            xi_roots: roots
                .iter()
                .map(|(z, m)| RootEntry {
                    re: z.re,
                    im: z.im,
                    mult: *m,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphism::search_automorphism;
    use crate::geom::Mat2;
    use crate::surface::{l_origami_3, torus};

    #[test]
    fn cat_map_homology() {
        let o = torus();
        let t = search_automorphism(&o, Mat2::new(2, 1, 1, 1)).unwrap();
        let h = homology_action(&t).unwrap();
        assert_eq!(h.chi_rel, IntPoly::from_i64(&[1, -3, 1]));
        assert_eq!(h.chi_vertex, IntPoly::one());
        assert_eq!(h.chi_abs, h.chi_a);
        assert_eq!(h.chi_xi, IntPoly::one());
        assert!(xi_roots(&h, 1e-9).unwrap().is_empty());
        assert_eq!(h.edge_matrix.det().to_i64().unwrap().abs(), 1);
    }

    #[test]
    fn cat_map_edge_images_by_hand() {
        // T_* h1 = 2 h1 + v1 and T_* v1 = h1 + v1 in the (h1, v1) basis.
        let o = torus();
        let t = search_automorphism(&o, Mat2::new(2, 1, 1, 1)).unwrap();
        let h = homology_action(&t).unwrap();
        let m = &h.edge_matrix;
        let get = |i: usize, j: usize| m[(i, j)].to_i64().unwrap();
        assert_eq!([get(0, 0), get(1, 0), get(0, 1), get(1, 1)], [2, 1, 1, 1]);
    }

    #[test]
    fn l3_factorization_is_exact() {
        let o = l_origami_3();
        let t = search_automorphism(&o, Mat2::new(5, 2, 2, 1)).unwrap();
        let h = homology_action(&t).unwrap();
        assert_eq!(h.genus, 2);
        assert_eq!(h.chi_rel.degree(), 4); // 2g + |P| - 1 = 4 + 1 - 1
        assert_eq!(h.chi_abs.degree(), 4);
        assert_eq!(h.chi_xi.degree(), 2);
        let prod = h.chi_vertex.mul(&h.chi_a).mul(&h.chi_xi);
        assert_eq!(prod, h.chi_rel);
        assert_eq!(h.chi_abs.coeffs[0].clone().abs(), BigInt::one());
        // reciprocity of the symplectic action: chi_abs(t) = ±t^{2g} chi_abs(1/t)
        assert_eq!(h.chi_abs.reciprocal(), h.chi_abs);
        assert_eq!(h.edge_matrix.det().to_i64().unwrap().abs(), 1);
        eprintln!("l3 chi_rel    = {:?}", h.chi_rel);
        eprintln!("l3 chi_vertex = {:?}", h.chi_vertex);
        eprintln!("l3 chi_abs    = {:?}", h.chi_abs);
        eprintln!("l3 chi_xi     = {:?}", h.chi_xi);
        eprintln!("l3 xi roots   = {:?}", xi_roots(&h, 1e-9).unwrap());
    }

    #[test]
    fn xi_moduli_strictly_inside_window() {
        let o = l_origami_3();
        let t = search_automorphism(&o, Mat2::new(5, 2, 2, 1)).unwrap();
        let h = homology_action(&t).unwrap();
        let roots = xi_roots(&h, 1e-9).unwrap();
        let total: usize = roots.iter().map(|(_, m)| m).sum();
        assert_eq!(total, 2);
        for (z, _) in &roots {
            let r = z.norm();
            assert!(r > 1.0 / h.lambda + 1e-9 && r < h.lambda - 1e-9);
            assert!(h.chi_xi.eval_complex(*z).norm() < 1e-10);
        }
    }
}

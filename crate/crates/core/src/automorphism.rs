//! Affine automorphisms of an origami over a hyperbolic integer matrix.
//!
//! An affine automorphism with derivative `A ∈ SL(2,Z)`, `|tr A| > 2`, is
//! determined by the image of a single direction germ at one vertex. We
//! propagate germ images along edge developments: the image of a unit
//! horizontal edge is the straight lattice segment `A·e₁` traced through the
//! gluings, and the arrival germ pins down the image germ at the endpoint.
//! The map exists iff propagation is consistent on every cycle of the square
//! adjacency graph.
//!
//! Angles at cone points are tracked on the vertex link (the cyclic list of
//! quadrant sectors from [`crate::surface::LinkTable`]); a germ is a sector
//! plus an integer direction vector inside its (half-open) quadrant. All of
//! the geometry lives in exact rational arithmetic.

use crate::geom::{rat_int, Mat2, Polygon, Rat, RatVec};
use crate::surface::{cone_data, Corner, Origami, Sector, SingularityProfile};
use num::{Signed, Zero};
use std::collections::HashMap;
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutomorphismError {
    #[error("matrix must have det = +1 and |trace| > 2, got det {det}, trace {trace}")]
    InvalidMatrix { det: i64, trace: i64 },
    #[error("anchor vertex {0} out of range")]
    BadAnchor(usize),
    #[error("no affine automorphism with this derivative fixes the anchored germ")]
    NotAnAutomorphism,
    #[error("edge development ran through a cone point (straight continuation engaged)")]
    SegmentThroughConePoint,
    #[error("matrix not realized by any affine automorphism of this origami")]
    NotFound,
    #[error("branch budget exceeded: {count} branches > cap {cap}")]
    BranchBudgetExceeded { count: usize, cap: usize },
}

/// One affine piece of the map: `z ↦ linear·z + translation` sends `domain`
/// (a convex rational polygon inside the source square's chart) into the
/// target square's chart.
#[derive(Clone, Debug)]
pub struct Branch {
    pub source: usize,
    pub target: usize,
    pub domain: Polygon,
    pub linear: Mat2,
    pub translation: RatVec,
}

impl Branch {
    pub fn map_point(&self, p: &RatVec) -> RatVec {
        self.linear.apply(p).add(&self.translation)
    }
}

/// A validated affine automorphism `T` (or a composed power of one).
///
/// `eps` is the common sign ε_h = ε_v = sign(tr A) of the eigenvalues
/// `ε λ, ε λ⁻¹` of the derivative; only det = +1 maps are synthesized, so the
/// two foliation signs coincide.
#[derive(Clone, Debug)]
pub struct AffineAutomorphism {
    pub surface: Origami,
    pub profile: SingularityProfile,
    /// Derivative of this map (A^power for a composed power).
    pub matrix: Mat2,
    /// 1 for a synthesized map, n for its n-th power.
    pub power: u32,
    pub eps: i8,
    /// Expansion factor of `matrix` (spectral radius), > 1.
    pub lambda: f64,
    /// Image of each vertex class under the map.
    pub vertex_image: Vec<usize>,
    pub branches: Vec<Branch>,
    /// Branch ids grouped by source square.
    pub branches_by_source: Vec<Vec<usize>>,
    /// Image germ of the east germ at the bottom-left corner of each square
    /// (present on synthesized maps, dropped on composed powers).
    pub germ_map: Option<Vec<Sector>>,
}

impl AffineAutomorphism {
    pub fn anchor_vertex_image(&self, v: usize) -> usize {
        self.vertex_image[v]
    }

    /// Iterated vertex image.
    pub fn vertex_image_pow(&self, v: usize, n: u32) -> usize {
        let mut x = v;
        for _ in 0..n {
            x = self.vertex_image[x];
        }
        x
    }

    /// Unit eigenvector of the contracting eigenvalue ε λ⁻¹ of the derivative.
    pub fn contracting_direction(&self) -> (f64, f64) {
        eigen_direction(&self.matrix, self.contracting_eigenvalue())
    }

    /// Unit eigenvector of the expanding eigenvalue ε λ.
    pub fn expanding_direction(&self) -> (f64, f64) {
        eigen_direction(&self.matrix, self.expanding_eigenvalue())
    }

    pub fn contracting_eigenvalue(&self) -> f64 {
        self.eps as f64 / self.lambda
    }

    pub fn expanding_eigenvalue(&self) -> f64 {
        self.eps as f64 * self.lambda
    }

    /// Exact total area of all branch domains; equals the number of squares.
    pub fn total_branch_area(&self) -> Rat {
        let mut acc = Rat::zero();
        for b in &self.branches {
            acc += b.domain.area();
        }
        acc
    }
}

fn eigen_direction(m: &Mat2, ev: f64) -> (f64, f64) {
    // (A - ev I) v = 0: rows give candidate kernels; pick the better-conditioned one.
    let r1 = (m.a as f64 - ev, m.b as f64);
    let r2 = (m.c as f64, m.d as f64 - ev);
    let v1 = (-r1.1, r1.0);
    let v2 = (-r2.1, r2.0);
    let n1 = (v1.0 * v1.0 + v1.1 * v1.1).sqrt();
    let n2 = (v2.0 * v2.0 + v2.1 * v2.1).sqrt();
    let v = if n1 >= n2 {
        (v1.0 / n1, v1.1 / n1)
    } else {
        (v2.0 / n2, v2.1 / n2)
    };
    // orient with positive x (or positive y when vertical)
    if v.0 < 0.0 || (v.0 == 0.0 && v.1 < 0.0) {
        (-v.0, -v.1)
    } else {
        v
    }
}

/// Which corner-type sector hosts a direction: Bl spans [E,N), Br [N,W),
/// Tr [W,S), Tl [S,E), each half-open counterclockwise.
pub fn sector_type_of(dir: (i64, i64)) -> Corner {
    let (x, y) = dir;
    assert!(x != 0 || y != 0);
    if x > 0 && y >= 0 {
        Corner::Bl
    } else if y > 0 && x <= 0 {
        Corner::Br
    } else if x < 0 && y <= 0 {
        Corner::Tr
    } else {
        Corner::Tl
    }
}

fn cross_i(u: (i64, i64), v: (i64, i64)) -> i64 {
    u.0 * v.1 - u.1 * v.0
}

fn dot_i(u: (i64, i64), v: (i64, i64)) -> i64 {
    u.0 * v.0 + u.1 * v.1
}

/// Number of coordinate axis directions in the half-open ccw arc
/// `(from, to]`. Both vectors nonzero; the arc is at most a half turn.
pub fn axes_in_ccw_arc(from: (i64, i64), to: (i64, i64)) -> usize {
    const AXES: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
    let mut count = 0;
    for u in AXES {
        if cross_i(u, to) == 0 && dot_i(u, to) > 0 {
            // landing exactly on the axis germ at the arc end
            count += 1;
        } else if cross_i(from, u) > 0 && cross_i(u, to) > 0 {
            count += 1;
        }
    }
    count
}

/// Quadrant-crossing counts for the images of the four axis arcs under A.
/// `east_to_north` is the sector advance from the image of an east germ to
/// the image of the north germ at the same vertex, and so on.
#[derive(Copy, Clone, Debug)]
struct ArcAdvances {
    east_to_north: isize,
    east_to_west: isize,
    east_to_south: isize,
}

fn arc_advances(a: &Mat2) -> ArcAdvances {
    let e1 = a.col_x();
    let e2 = a.col_y();
    let n1 = (-e1.0, -e1.1);
    let n2 = (-e2.0, -e2.1);
    let en = axes_in_ccw_arc(e1, e2) as isize;
    let ew = en + axes_in_ccw_arc(e2, n1) as isize;
    let es = ew + axes_in_ccw_arc(n1, n2) as isize;
    ArcAdvances {
        east_to_north: en,
        east_to_west: ew,
        east_to_south: es,
    }
}

/// One square of an edge development, with the entry and exit corners used to
/// express the developed segment as a boundary chain.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Traversal {
    pub square: usize,
    pub entry: Corner,
    pub exit: Corner,
}

#[derive(Clone, Debug)]
pub struct EdgeDevelopment {
    /// Sector of the reverse germ at the arrival vertex.
    pub arrival: Sector,
    pub traversals: Vec<Traversal>,
}

/// Develops the straight segment of one lattice period `dir` from a germ.
/// `dir` must be a primitive integer vector (columns of SL(2,Z) matrices
/// always are); an interior lattice hit is reported as a cone-point error.
pub fn develop_germ(
    o: &Origami,
    start: Sector,
    dir: (i64, i64),
) -> Result<EdgeDevelopment, AutomorphismError> {
    let (dx, dy) = dir;
    assert!(dx != 0 || dy != 0, "zero direction");
    if dx == 0 || dy == 0 {
        return Ok(develop_axis(o, start, dir));
    }
    debug_assert_eq!(sector_type_of(dir), start.corner, "germ/sector mismatch");

    // Start corner: the corner whose quadrant contains dir.
    let (cx, cy) = start.corner.coords();
    let mut square = start.square;
    let mut pos = RatVec::from_ints(cx, cy);
    let mut entry = start.corner;
    let mut remaining = rat_int(1); // fraction of the displacement left
    let rdx = rat_int(dx);
    let rdy = rat_int(dy);
    let mut traversals = Vec::new();

    loop {
        // time to the vertical / horizontal wall ahead
        let ux = if dx > 0 {
            (rat_int(1) - &pos.x) / &rdx
        } else {
            -&pos.x / &rdx
        };
        let uy = if dy > 0 {
            (rat_int(1) - &pos.y) / &rdy
        } else {
            -&pos.y / &rdy
        };
        let wall = if ux < uy { ux.clone() } else { uy.clone() };
        if remaining <= wall {
            // arrival inside this square: must land exactly on a corner
            let fx = &pos.x + &remaining * &rdx;
            let fy = &pos.y + &remaining * &rdy;
            let is01 = |r: &Rat| r.is_zero() || *r == rat_int(1);
            if !(is01(&fx) && is01(&fy)) {
                return Err(AutomorphismError::SegmentThroughConePoint);
            }
            let corner = corner_from_coords(&fx, &fy);
            traversals.push(Traversal {
                square,
                entry,
                exit: corner,
            });
            return Ok(EdgeDevelopment {
                arrival: Sector::new(square, corner),
                traversals,
            });
        }
        if ux == uy {
            // interior lattice point: impossible for primitive directions
            return Err(AutomorphismError::SegmentThroughConePoint);
        }
        if ux < uy {
            // cross the vertical wall
            let ny = &pos.y + &ux * &rdy;
            debug_assert!(ny.is_positive() && ny < rat_int(1));
            remaining -= &ux;
            if dx > 0 {
                traversals.push(Traversal {
                    square,
                    entry,
                    exit: Corner::Br,
                });
                square = o.right(square);
                pos = RatVec::new(rat_int(0), ny);
                entry = Corner::Bl;
            } else {
                traversals.push(Traversal {
                    square,
                    entry,
                    exit: Corner::Bl,
                });
                square = o.left(square);
                pos = RatVec::new(rat_int(1), ny);
                entry = Corner::Br;
            }
        } else {
            // cross the horizontal wall
            let nx = &pos.x + &uy * &rdx;
            debug_assert!(nx.is_positive() && nx < rat_int(1));
            remaining -= &uy;
            if dy > 0 {
                traversals.push(Traversal {
                    square,
                    entry,
                    exit: Corner::Tl,
                });
                square = o.up(square);
                pos = RatVec::new(nx, rat_int(0));
                entry = Corner::Bl;
            } else {
                traversals.push(Traversal {
                    square,
                    entry,
                    exit: Corner::Bl,
                });
                square = o.down(square);
                pos = RatVec::new(nx, rat_int(1));
                entry = Corner::Tl;
            }
        }
    }
}

fn corner_from_coords(x: &Rat, y: &Rat) -> Corner {
    match (x.is_zero(), y.is_zero()) {
        (true, true) => Corner::Bl,
        (false, true) => Corner::Br,
        (false, false) => Corner::Tr,
        (true, false) => Corner::Tl,
    }
}

/// Axis-parallel developments are single grid edges.
fn develop_axis(o: &Origami, start: Sector, dir: (i64, i64)) -> EdgeDevelopment {
    match dir {
        (1, 0) => {
            debug_assert_eq!(start.corner, Corner::Bl);
            let t = start.square;
            EdgeDevelopment {
                arrival: Sector::new(o.down(t), Corner::Tr),
                traversals: vec![Traversal {
                    square: t,
                    entry: Corner::Bl,
                    exit: Corner::Br,
                }],
            }
        }
        (0, 1) => {
            debug_assert_eq!(start.corner, Corner::Br);
            let x = o.right(start.square);
            EdgeDevelopment {
                arrival: Sector::new(x, Corner::Tl),
                traversals: vec![Traversal {
                    square: x,
                    entry: Corner::Bl,
                    exit: Corner::Tl,
                }],
            }
        }
        (-1, 0) => {
            debug_assert_eq!(start.corner, Corner::Tr);
            let w = o.up(start.square);
            EdgeDevelopment {
                arrival: Sector::new(w, Corner::Bl),
                traversals: vec![Traversal {
                    square: w,
                    entry: Corner::Br,
                    exit: Corner::Bl,
                }],
            }
        }
        (0, -1) => {
            debug_assert_eq!(start.corner, Corner::Tl);
            let q = start.square;
            EdgeDevelopment {
                arrival: Sector::new(o.left(q), Corner::Br),
                traversals: vec![Traversal {
                    square: q,
                    entry: Corner::Tl,
                    exit: Corner::Bl,
                }],
            }
        }
        _ => unreachable!("not an axis direction"),
    }
}

fn validate_matrix(a: &Mat2) -> Result<(i8, f64), AutomorphismError> {
    let det = a.det();
    let trace = a.trace();
    if det != 1 || trace.abs() <= 2 {
        return Err(AutomorphismError::InvalidMatrix { det, trace });
    }
    let eps: i8 = if trace > 0 { 1 } else { -1 };
    let t = trace.abs() as f64;
    let lambda = (t + (t * t - 4.0).sqrt()) / 2.0;
    Ok((eps, lambda))
}

/// Propagated germ assignment: for each square, the image sector of the east
/// germ at its bottom-left corner. `None` when propagation is inconsistent.
fn propagate_germs(
    o: &Origami,
    prof: &SingularityProfile,
    a: &Mat2,
    seed_square: usize,
    seed_sector: Sector,
) -> Result<Vec<Sector>, AutomorphismError> {
    let n = o.n_squares();
    let adv = arc_advances(a);
    let e1 = a.col_x();
    let e2 = a.col_y();
    let link = &prof.link;

    let mut germ: Vec<Option<Sector>> = vec![None; n];
    germ[seed_square] = Some(seed_sector);
    let mut queue = VecDeque::from([seed_square]);

    // Sector offset from the east germ at a vertex to another germ at the
    // same vertex, counterclockwise. A cone point contributes whole extra
    // turns (multiples of 4), which map to whole turns of the image link.
    let source_offset = |east: Sector, other: Sector| -> usize {
        let (va, pa) = link.position(east);
        let (vb, pb) = link.position(other);
        debug_assert_eq!(va, vb, "germs at different vertices");
        let len = link.cycles[va].len();
        (pb + len - pa) % len
    };

    while let Some(s) = queue.pop_front() {
        let g = germ[s].unwrap();

        // horizontal edge h_s: image germ of the east germ is (g, A e1).
        // The reverse germ of h_s sits m sectors after the east germ at the
        // endpoint (m ≡ 2 mod 4); its image sits Δ_EW plus the whole turns
        // after the image east germ.
        let dev = develop_germ(o, g, e1)?;
        let target = o.right(s);
        let m = source_offset(
            Sector::new(target, Corner::Bl),
            Sector::new(o.down(s), Corner::Tr),
        );
        debug_assert_eq!(m % 4, 2, "horizontal reverse germ phase");
        let back = adv.east_to_west + (m as isize - 2);
        let expected = link.advance(dev.arrival, -back);
        match germ[target] {
            None => {
                germ[target] = Some(expected);
                queue.push_back(target);
            }
            Some(existing) if existing == expected => {}
            Some(_) => return Err(AutomorphismError::NotAnAutomorphism),
        }

        // vertical edge v_s: the north germ sits one sector after the east
        // germ; its development reverses into the sector (s, Tl), m ≡ 3 mod 4
        // sectors after the east germ at the endpoint.
        let north = link.advance(g, adv.east_to_north);
        if sector_type_of(e2) != north.corner {
            return Err(AutomorphismError::NotAnAutomorphism);
        }
        let dev = develop_germ(o, north, e2)?;
        let target = o.up(s);
        let m = source_offset(
            Sector::new(target, Corner::Bl),
            Sector::new(s, Corner::Tl),
        );
        debug_assert_eq!(m % 4, 3, "vertical reverse germ phase");
        let back = adv.east_to_south + (m as isize - 3);
        let expected = link.advance(dev.arrival, -back);
        match germ[target] {
            None => {
                germ[target] = Some(expected);
                queue.push_back(target);
            }
            Some(existing) if existing == expected => {}
            Some(_) => return Err(AutomorphismError::NotAnAutomorphism),
        }
    }

    let germ: Option<Vec<Sector>> = germ.into_iter().collect();
    germ.ok_or(AutomorphismError::NotAnAutomorphism)
}

/// Builds the branch decomposition of one square: the image parallelogram
/// `p₀ + A·[0,1]²` is developed across the grid (cells are matched to squares
/// by flood fill through shared open edges) and clipped cell by cell.
fn build_branches_for_square(
    o: &Origami,
    s: usize,
    germ: Sector,
    a: &Mat2,
) -> Result<Vec<Branch>, AutomorphismError> {
    let (cx, cy) = germ.corner.coords();
    let p0 = RatVec::from_ints(cx, cy);
    let e1 = a.col_x();
    let e2 = a.col_y();
    let para = Polygon::from_verts(vec![
        p0.clone(),
        p0.add(&RatVec::from_ints(e1.0, e1.1)),
        p0.add(&RatVec::from_ints(e1.0 + e2.0, e1.1 + e2.1)),
        p0.add(&RatVec::from_ints(e2.0, e2.1)),
    ]);
    debug_assert_eq!(para.area(), rat_int(1));

    let a_inv = a.inverse_unimodular();
    let mut cells: HashMap<(i64, i64), usize> = HashMap::new();
    cells.insert((0, 0), germ.square);
    let mut queue = VecDeque::from([(0i64, 0i64)]);
    let mut branches = Vec::new();

    while let Some((mx, my)) = queue.pop_front() {
        let u = cells[&(mx, my)];
        let piece = para.clip_convex(&Polygon::cell(mx, my));
        if !piece.is_empty() {
            // pull the piece back to source coordinates
            let dom = Polygon::from_verts(
                piece
                    .verts
                    .iter()
                    .map(|w| a_inv.apply(&w.sub(&p0)))
                    .collect(),
            );
            branches.push(Branch {
                source: s,
                target: u,
                domain: dom.canonical(),
                linear: *a,
                translation: p0.sub(&RatVec::from_ints(mx, my)),
            });
        }
        // neighbours through open shared segments of the parallelogram interior
        let mut try_push = |cell: (i64, i64), sq: usize, open: bool| {
            if !open {
                return Ok(());
            }
            match cells.get(&cell) {
                None => {
                    cells.insert(cell, sq);
                    queue.push_back(cell);
                    Ok(())
                }
                Some(&existing) if existing == sq => Ok(()),
                // inconsistent development: a cone point inside the image
                Some(_) => Err(AutomorphismError::NotAnAutomorphism),
            }
        };
        let overlaps = |iv: Option<(Rat, Rat)>, lo: i64, hi: i64| -> bool {
            match iv {
                None => false,
                Some((a0, a1)) => {
                    let lo = rat_int(lo);
                    let hi = rat_int(hi);
                    let m0 = if a0 > lo { a0 } else { lo };
                    let m1 = if a1 < hi { a1 } else { hi };
                    m0 < m1
                }
            }
        };
        let east = overlaps(para.slice_at_x(&rat_int(mx + 1)), my, my + 1);
        try_push((mx + 1, my), o.right(u), east)?;
        let west = overlaps(para.slice_at_x(&rat_int(mx)), my, my + 1);
        try_push((mx - 1, my), o.left(u), west)?;
        let north = overlaps(para.slice_at_y(&rat_int(my + 1)), mx, mx + 1);
        try_push((mx, my + 1), o.up(u), north)?;
        let south = overlaps(para.slice_at_y(&rat_int(my)), mx, mx + 1);
        try_push((mx, my - 1), o.down(u), south)?;
    }
    Ok(branches)
}

fn group_by_source(n: usize, branches: &[Branch]) -> Vec<Vec<usize>> {
    let mut by_source = vec![Vec::new(); n];
    for (i, b) in branches.iter().enumerate() {
        by_source[b.source].push(i);
    }
    by_source
}

/// Attempts to build the affine automorphism with derivative `a` whose
/// anchored germ sits at `anchor` (a vertex index from [`cone_data`]).
/// All sectors of the anchor's link that can host the image of the base east
/// germ are tried in counterclockwise order.
pub fn synthesize(
    o: &Origami,
    a: Mat2,
    anchor: usize,
) -> Result<AffineAutomorphism, AutomorphismError> {
    let (eps, lambda) = validate_matrix(&a)?;
    let prof = cone_data(o);
    if anchor >= prof.n_vertices {
        return Err(AutomorphismError::BadAnchor(anchor));
    }
    let e1 = a.col_x();
    let want = sector_type_of(e1);
    let base_square = 0usize;
    // the base east germ lives at the vertex of BL(square 0); its image must
    // sit at the anchor vertex
    let candidates: Vec<Sector> = prof.link.cycles[anchor]
        .iter()
        .copied()
        .filter(|sec| sec.corner == want)
        .collect();

    for seed in candidates {
        match propagate_germs(o, &prof, &a, base_square, seed) {
            Ok(germs) => {
                return finish_synthesis(o, prof, a, eps, lambda, germs);
            }
            Err(AutomorphismError::NotAnAutomorphism)
            | Err(AutomorphismError::SegmentThroughConePoint) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(AutomorphismError::NotAnAutomorphism)
}

fn finish_synthesis(
    o: &Origami,
    prof: SingularityProfile,
    a: Mat2,
    eps: i8,
    lambda: f64,
    germs: Vec<Sector>,
) -> Result<AffineAutomorphism, AutomorphismError> {
    // vertex images: BL(s) ↦ vertex of the image germ sector
    let mut vertex_image = vec![usize::MAX; prof.n_vertices];
    for s in 0..o.n_squares() {
        let from = prof.vertex_of_bl(s);
        let to = prof.link.vertex_of(germs[s]);
        if vertex_image[from] == usize::MAX {
            vertex_image[from] = to;
        } else if vertex_image[from] != to {
            return Err(AutomorphismError::NotAnAutomorphism);
        }
    }
    // cone angles are preserved
    for vtx in 0..prof.n_vertices {
        if prof.cone_k[vtx] != prof.cone_k[vertex_image[vtx]] {
            return Err(AutomorphismError::NotAnAutomorphism);
        }
    }

    let mut branches = Vec::new();
    for s in 0..o.n_squares() {
        branches.extend(build_branches_for_square(o, s, germs[s], &a)?);
    }
    let total: Rat = branches.iter().map(|b| b.domain.area()).sum();
    if total != rat_int(o.n_squares() as i64) {
        return Err(AutomorphismError::NotAnAutomorphism);
    }
    let by_source = group_by_source(o.n_squares(), &branches);

    Ok(AffineAutomorphism {
        surface: o.clone(),
        profile: prof,
        matrix: a,
        power: 1,
        eps,
        lambda,
        vertex_image,
        branches,
        branches_by_source: by_source,
        germ_map: Some(germs),
    })
}

/// Tries [`synthesize`] over all vertices as anchor, in ascending index
/// order, returning the first success.
pub fn search_automorphism(o: &Origami, a: Mat2) -> Result<AffineAutomorphism, AutomorphismError> {
    let prof = cone_data(o);
    for anchor in 0..prof.n_vertices {
        match synthesize(o, a, anchor) {
            Ok(t) => return Ok(t),
            Err(AutomorphismError::NotAnAutomorphism) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(AutomorphismError::NotFound)
}

pub const DEFAULT_BRANCH_BUDGET: usize = 400_000;

/// Branch decomposition of `T^n` by iterated clip-and-compose. The result's
/// branch count grows like `N·λⁿ`; `budget` caps it.
pub fn compose_power(
    t: &AffineAutomorphism,
    n: u32,
    budget: usize,
) -> Result<AffineAutomorphism, AutomorphismError> {
    assert!(n >= 1, "power must be at least 1");
    let mut acc = t.clone();
    for _ in 1..n {
        acc = compose_once(&acc, t, budget)?;
    }
    Ok(acc)
}

fn compose_once(
    tm: &AffineAutomorphism,
    t: &AffineAutomorphism,
    budget: usize,
) -> Result<AffineAutomorphism, AutomorphismError> {
    let mut branches = Vec::new();
    for beta in &tm.branches {
        let m_inv = beta.linear.inverse_unimodular();
        // preimage under beta of each branch of t starting on beta's target
        for &gi in &t.branches_by_source[beta.target] {
            let gamma = &t.branches[gi];
            let pre = Polygon::from_verts(
                gamma
                    .domain
                    .verts
                    .iter()
                    .map(|w| m_inv.apply(&w.sub(&beta.translation)))
                    .collect(),
            );
            let piece = beta.domain.clip_convex(&pre);
            if piece.is_empty() {
                continue;
            }
            branches.push(Branch {
                source: beta.source,
                target: gamma.target,
                domain: piece.canonical(),
                linear: gamma.linear.mul(&beta.linear),
                translation: gamma.linear.apply(&beta.translation).add(&gamma.translation),
            });
            if branches.len() > budget {
                return Err(AutomorphismError::BranchBudgetExceeded {
                    count: branches.len(),
                    cap: budget,
                });
            }
        }
    }
    let total: Rat = branches.iter().map(|b| b.domain.area()).sum();
    debug_assert_eq!(total, rat_int(tm.surface.n_squares() as i64));
    let by_source = group_by_source(tm.surface.n_squares(), &branches);
    let vertex_image = (0..tm.profile.n_vertices)
        .map(|vtx| t.vertex_image[tm.vertex_image[vtx]])
        .collect();
    let power = tm.power + t.power;
    let (eps, lambda) = {
        let m = tm.matrix.mul(&t.matrix);
        let (e, l) = validate_matrix(&m).expect("power of hyperbolic matrix stays hyperbolic");
        (e, l)
    };
    Ok(AffineAutomorphism {
        surface: tm.surface.clone(),
        profile: tm.profile.clone(),
        matrix: tm.matrix.mul(&t.matrix),
        power,
        eps,
        lambda,
        vertex_image,
        branches,
        branches_by_source: by_source,
        germ_map: None,
    })
}

/// Exact pointwise agreement of the two affine images along every interior
/// edge of the square complex, sampled at rational points. Used by the test
/// suite as the gluing-consistency oracle.
pub fn validate_edge_agreement(t: &AffineAutomorphism) -> bool {
    let o = &t.surface;
    let samples = [crate::geom::rat(1, 7), crate::geom::rat(2, 5), crate::geom::rat(6, 7)];
    for s in 0..o.n_squares() {
        for y in &samples {
            // right edge of s == left edge of h(s)
            let p_right = RatVec::new(rat_int(1), y.clone());
            let p_left = RatVec::new(rat_int(0), y.clone());
            let a = map_exact(t, s, &p_right);
            let b = map_exact(t, o.right(s), &p_left);
            if canonical_point(o, a) != canonical_point(o, b) {
                return false;
            }
            // top edge of s == bottom edge of v(s)
            let p_top = RatVec::new(y.clone(), rat_int(1));
            let p_bot = RatVec::new(y.clone(), rat_int(0));
            let a = map_exact(t, s, &p_top);
            let b = map_exact(t, o.up(s), &p_bot);
            if canonical_point(o, a) != canonical_point(o, b) {
                return false;
            }
        }
    }
    true
}

/// Exact image of a point through any branch whose closed domain contains it.
pub fn map_exact(t: &AffineAutomorphism, square: usize, p: &RatVec) -> (usize, RatVec) {
    for &bi in &t.branches_by_source[square] {
        let b = &t.branches[bi];
        if b.domain.contains(p) {
            return (b.target, b.map_point(p));
        }
    }
    panic!("point not covered by any branch domain");
}

/// Canonical representative of a surface point: right/top edges wrap through
/// the gluings, corners wrap to the minimal bottom-left square of their
/// vertex cycle.
pub fn canonical_point(o: &Origami, (mut s, mut p): (usize, RatVec)) -> (usize, RatVec) {
    let one = rat_int(1);
    if p.x == one {
        s = o.right(s);
        p.x = Rat::zero();
    }
    if p.y == one {
        s = o.up(s);
        p.y = Rat::zero();
    }
    if p.x.is_zero() && p.y.is_zero() {
        // vertex: normalize to the smallest square in the corner cycle
        let mut best = s;
        let mut cur = o.up(o.right(o.down(o.left(s))));
        while cur != s {
            best = best.min(cur);
            cur = o.up(o.right(o.down(o.left(cur))));
        }
        s = best;
    }
    (s, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rat;
    use crate::surface::{l_origami_3, torus};

    #[test]
    fn axes_in_arc_counts() {
        assert_eq!(axes_in_ccw_arc((1, 0), (0, 1)), 1);
        assert_eq!(axes_in_ccw_arc((2, 1), (1, 1)), 0);
        assert_eq!(axes_in_ccw_arc((1, 1), (-2, -1)), 2);
        assert_eq!(axes_in_ccw_arc((1, 0), (-1, 0)), 2);
        assert_eq!(axes_in_ccw_arc((0, 1), (0, -1)), 2);
    }

    #[test]
    fn arc_advance_table() {
        // any SL(2,Z) hyperbolic matrix: east→west advance is two quadrants
        for m in [
            Mat2::new(2, 1, 1, 1),
            Mat2::new(5, 2, 2, 1),
            Mat2::new(-2, -1, -1, -1),
            Mat2::new(3, -1, 1, 0),
        ] {
            let adv = arc_advances(&m);
            assert_eq!(adv.east_to_west, 2, "{m:?}");
            assert_eq!(adv.east_to_south - adv.east_to_north, 2, "{m:?}");
        }
    }

    /// Developing each edge with its own (identity-image) germ must arrive at
    /// the germ the link structure predicts: offset 2 mod 4 after the east
    /// germ for horizontal edges, 3 mod 4 for vertical ones.
    #[test]
    fn identity_development_consistency() {
        for o in [torus(), l_origami_3()] {
            let prof = cone_data(&o);
            let offset = |east: Sector, other: Sector| -> usize {
                let (va, pa) = prof.link.position(east);
                let (vb, pb) = prof.link.position(other);
                assert_eq!(va, vb);
                let len = prof.link.cycles[va].len();
                (pb + len - pa) % len
            };
            for s in 0..o.n_squares() {
                let east = Sector::new(s, Corner::Bl);
                let dev = develop_germ(&o, east, (1, 0)).unwrap();
                assert_eq!(dev.arrival, Sector::new(o.down(s), Corner::Tr));
                let m = offset(Sector::new(o.right(s), Corner::Bl), dev.arrival);
                assert_eq!(m, 2, "horizontal reverse stays in the block");

                let north = prof.link.advance(Sector::new(s, Corner::Bl), 1);
                let dev = develop_germ(&o, north, (0, 1)).unwrap();
                assert_eq!(dev.arrival, Sector::new(s, Corner::Tl));
                let m = offset(Sector::new(o.up(s), Corner::Bl), dev.arrival);
                assert_eq!(m % 4, 3, "vertical reverse germ phase");
            }
        }
    }

    #[test]
    fn cat_map_on_torus() {
        let o = torus();
        let a = Mat2::new(2, 1, 1, 1);
        let t = search_automorphism(&o, a).unwrap();
        assert_eq!(t.eps, 1);
        assert!((t.lambda - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert_eq!(t.total_branch_area(), rat_int(1));
        assert!(t.branches.len() >= 2);
        assert!(validate_edge_agreement(&t));
    }

    #[test]
    fn negative_trace_torus_map() {
        let o = torus();
        let a = Mat2::new(-2, -1, -1, -1);
        let t = search_automorphism(&o, a).unwrap();
        assert_eq!(t.eps, -1);
        assert!(validate_edge_agreement(&t));
    }

    #[test]
    fn invalid_matrices_rejected() {
        let o = torus();
        assert!(matches!(
            search_automorphism(&o, Mat2::new(1, 1, 0, 1)),
            Err(AutomorphismError::InvalidMatrix { .. })
        ));
        assert!(matches!(
            search_automorphism(&o, Mat2::new(2, 1, 1, 1).mul(&Mat2::new(0, 1, 1, 0))),
            Err(AutomorphismError::InvalidMatrix { .. })
        ));
    }

    #[test]
    fn compose_power_squares_linear_part() {
        let o = torus();
        let t = search_automorphism(&o, Mat2::new(2, 1, 1, 1)).unwrap();
        let t2 = compose_power(&t, 2, DEFAULT_BRANCH_BUDGET).unwrap();
        for b in &t2.branches {
            assert_eq!(b.linear, Mat2::new(5, 3, 3, 2));
        }
        assert_eq!(t2.total_branch_area(), rat_int(1));
        let t1 = compose_power(&t, 1, DEFAULT_BRANCH_BUDGET).unwrap();
        assert_eq!(t1.branches.len(), t.branches.len());
    }

    #[test]
    fn l3_admits_the_sanov_product() {
        let o = l_origami_3();
        // [[1,2],[0,1]] · [[1,0],[2,1]] = [[5,2],[2,1]]
        let a = Mat2::new(5, 2, 2, 1);
        let t = search_automorphism(&o, a).expect("product of L3 twists must be realized");
        assert_eq!(t.total_branch_area(), rat_int(3));
        assert!(validate_edge_agreement(&t));
    }

    #[test]
    fn l3_rejects_cat_matrix() {
        let o = l_origami_3();
        assert!(matches!(
            search_automorphism(&o, Mat2::new(2, 1, 1, 1)),
            Err(AutomorphismError::NotFound)
        ));
    }

    #[test]
    fn branch_budget_is_enforced() {
        let o = torus();
        let t = search_automorphism(&o, Mat2::new(2, 1, 1, 1)).unwrap();
        assert!(matches!(
            compose_power(&t, 6, 10),
            Err(AutomorphismError::BranchBudgetExceeded { .. })
        ));
    }
}

//! Square-tiled translation surfaces (origamis) and their singularity data.
//!
//! An origami is a set of unit squares `{1..n}` glued by two permutations:
//! `h(i)` is the square to the right of square `i`, `v(i)` the square above.
//! Right/top edges are identified with the left/bottom edges of the
//! neighbours, so the surface is closed and carries a flat metric whose
//! vertices (square corners after gluing) are cone points of angle `2πk`.
//!
//! The corner convention: the vertex classes are the cycles of the
//! permutation `c = v ∘ h ∘ v⁻¹ ∘ h⁻¹` acting on bottom-left corners. `c` is
//! obtained by tracing the link of a corner counterclockwise through the four
//! quadrant moves determined by `h` and `v`; the choice is certified by the
//! Gauss–Bonnet identity `Σ (k−1) = 2g − 2` in the test suite, not assumed.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SurfaceError {
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("h and v do not generate a transitive action: surface is disconnected")]
    DisconnectedSurface,
    #[error("line {0} is not a permutation of 1..={1}")]
    NotAPermutation(&'static str, usize),
}

/// A square-tiled surface given by two permutations of `{0..n-1}` (0-indexed
/// internally; all I/O is 1-indexed).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Origami {
    n: usize,
    h: Vec<usize>,
    v: Vec<usize>,
    hinv: Vec<usize>,
    vinv: Vec<usize>,
}

impl Origami {
    pub fn new(h: Vec<usize>, v: Vec<usize>) -> Result<Self, SurfaceError> {
        let n = h.len();
        if n == 0 || v.len() != n {
            return Err(SurfaceError::ParseError(
                "h and v must be non-empty and of equal length".into(),
            ));
        }
        let hinv = invert(&h).ok_or(SurfaceError::NotAPermutation("h", n))?;
        let vinv = invert(&v).ok_or(SurfaceError::NotAPermutation("v", n))?;
        let o = Origami { n, h, v, hinv, vinv };
        if !o.is_connected() {
            return Err(SurfaceError::DisconnectedSurface);
        }
        Ok(o)
    }

    pub fn n_squares(&self) -> usize {
        self.n
    }

    /// Square to the right of `s`.
    pub fn right(&self, s: usize) -> usize {
        self.h[s]
    }

    /// Square above `s`.
    pub fn up(&self, s: usize) -> usize {
        self.v[s]
    }

    pub fn left(&self, s: usize) -> usize {
        self.hinv[s]
    }

    pub fn down(&self, s: usize) -> usize {
        self.vinv[s]
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(s) = stack.pop() {
            for t in [self.h[s], self.v[s], self.hinv[s], self.vinv[s]] {
                if !seen[t] {
                    seen[t] = true;
                    count += 1;
                    stack.push(t);
                }
            }
        }
        count == self.n
    }

    /// Serializes back to the text format accepted by [`parse_origami`].
    pub fn serialize(&self) -> String {
        let fmt = |p: &[usize]| {
            p.iter()
                .map(|x| (x + 1).to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!("n={}\nh={}\nv={}\n", self.n, fmt(&self.h), fmt(&self.v))
    }
}

fn invert(p: &[usize]) -> Option<Vec<usize>> {
    let n = p.len();
    let mut inv = vec![usize::MAX; n];
    for (i, &pi) in p.iter().enumerate() {
        if pi >= n || inv[pi] != usize::MAX {
            return None;
        }
        inv[pi] = i;
    }
    Some(inv)
}

/// Parses the origami text format:
///
/// ```text
/// # comment lines start with '#'
/// n=<N>
/// h=<N space-separated images, 1-indexed>
/// v=<N space-separated images, 1-indexed>
/// ```
pub fn parse_origami(text: &str) -> Result<Origami, SurfaceError> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let n_line = lines
        .next()
        .ok_or_else(|| SurfaceError::ParseError("missing n= line".into()))?;
    let n: usize = n_line
        .strip_prefix("n=")
        .ok_or_else(|| SurfaceError::ParseError(format!("expected n=<N>, got {n_line:?}")))?
        .trim()
        .parse()
        .map_err(|e| SurfaceError::ParseError(format!("bad square count: {e}")))?;
    if n == 0 {
        return Err(SurfaceError::ParseError("n must be positive".into()));
    }
    let mut perm = |prefix: &'static str| -> Result<Vec<usize>, SurfaceError> {
        let line = lines
            .next()
            .ok_or_else(|| SurfaceError::ParseError(format!("missing {prefix} line")))?;
        let body = line.strip_prefix(prefix).ok_or_else(|| {
            SurfaceError::ParseError(format!("expected {prefix}<images>, got {line:?}"))
        })?;
        let vals: Result<Vec<usize>, _> = body.split_whitespace().map(str::parse).collect();
        let vals =
            vals.map_err(|e| SurfaceError::ParseError(format!("bad image in {prefix}: {e}")))?;
        if vals.len() != n {
            return Err(SurfaceError::ParseError(format!(
                "{prefix} has {} entries, expected {n}",
                vals.len()
            )));
        }
        let key = if prefix == "h=" { "h" } else { "v" };
        vals.iter()
            .map(|&x| {
                if x >= 1 && x <= n {
                    Ok(x - 1)
                } else {
                    Err(SurfaceError::NotAPermutation(
                        if key == "h" { "h" } else { "v" },
                        n,
                    ))
                }
            })
            .collect()
    };
    let h = perm("h=")?;
    let v = perm("v=")?;
    if let Some(extra) = lines.next() {
        return Err(SurfaceError::ParseError(format!(
            "unexpected trailing line {extra:?}"
        )));
    }
    Origami::new(h, v)
}

/// Corner of a unit square. The associated quadrant of the vertex link spans
/// a quarter turn starting (half-open) at `start_axis` and sweeping
/// counterclockwise.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Corner {
    Bl,
    Br,
    Tr,
    Tl,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::Bl, Corner::Br, Corner::Tr, Corner::Tl];

    pub fn index(self) -> usize {
        match self {
            Corner::Bl => 0,
            Corner::Br => 1,
            Corner::Tr => 2,
            Corner::Tl => 3,
        }
    }

    pub fn coords(self) -> (i64, i64) {
        match self {
            Corner::Bl => (0, 0),
            Corner::Br => (1, 0),
            Corner::Tr => (1, 1),
            Corner::Tl => (0, 1),
        }
    }

    /// First direction (counterclockwise) of this corner's quadrant:
    /// Bl spans [E, N), Br spans [N, W), Tr spans [W, S), Tl spans [S, E).
    pub fn start_axis(self) -> (i64, i64) {
        match self {
            Corner::Bl => (1, 0),
            Corner::Br => (0, 1),
            Corner::Tr => (-1, 0),
            Corner::Tl => (0, -1),
        }
    }

    /// CCW order around a square's own boundary: Bl → Br → Tr → Tl.
    pub fn ccw_next(self) -> Corner {
        match self {
            Corner::Bl => Corner::Br,
            Corner::Br => Corner::Tr,
            Corner::Tr => Corner::Tl,
            Corner::Tl => Corner::Bl,
        }
    }
}

/// One quadrant sector of a vertex link: the corner `corner` of square
/// `square`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Sector {
    pub square: usize,
    pub corner: Corner,
}

impl Sector {
    pub fn new(square: usize, corner: Corner) -> Self {
        Sector { square, corner }
    }
}

/// Cyclic order of all quadrant sectors around each vertex.
///
/// For the cycle element `x` the four sectors
/// `(x, Bl), (h⁻¹x, Br), (v⁻¹h⁻¹x, Tr), (hv⁻¹h⁻¹x, Tl)` follow each other
/// counterclockwise, and the block of the next cycle element `c(x)` follows.
#[derive(Clone, Debug)]
pub struct LinkTable {
    /// cycles[v] = sectors around vertex v in counterclockwise order (4k entries).
    pub cycles: Vec<Vec<Sector>>,
    /// position[square][corner_index] = (vertex, index within cycle)
    position: Vec<[(usize, usize); 4]>,
}

impl LinkTable {
    pub fn position(&self, s: Sector) -> (usize, usize) {
        self.position[s.square][s.corner.index()]
    }

    pub fn vertex_of(&self, s: Sector) -> usize {
        self.position(s).0
    }

    /// Sector `steps` quadrants counterclockwise from `s` (negative = clockwise).
    pub fn advance(&self, s: Sector, steps: isize) -> Sector {
        let (v, i) = self.position(s);
        let cyc = &self.cycles[v];
        let n = cyc.len() as isize;
        let j = ((i as isize + steps) % n + n) % n;
        cyc[j as usize]
    }

    /// Cone multiplicity k of the vertex (total angle 2πk).
    pub fn cone_k(&self, vertex: usize) -> usize {
        self.cycles[vertex].len() / 4
    }
}

/// Topological data of an origami: vertex classes, cone angles, genus.
#[derive(Clone, Debug)]
pub struct SingularityProfile {
    /// Cycles of the corner permutation, as bottom-left square labels.
    pub vertex_cycles: Vec<Vec<usize>>,
    /// Cone multiplicity k per vertex (angle 2πk).
    pub cone_k: Vec<usize>,
    /// Vertices with k ≥ 2.
    pub singular: Vec<bool>,
    pub genus: usize,
    pub n_vertices: usize,
    pub link: LinkTable,
    /// vertex_of_bl[s] = vertex class of the bottom-left corner of square s.
    vertex_of_bl: Vec<usize>,
}

impl SingularityProfile {
    pub fn cone_angles_in_units_of_2pi(&self) -> &[usize] {
        &self.cone_k
    }

    pub fn singular_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices).filter(|&i| self.singular[i]).collect()
    }

    pub fn vertex_of_bl(&self, square: usize) -> usize {
        self.vertex_of_bl[square]
    }

    /// Vertex class of an arbitrary corner of a square.
    pub fn vertex_of_corner(&self, o: &Origami, square: usize, corner: Corner) -> usize {
        let bl = match corner {
            Corner::Bl => square,
            Corner::Br => o.right(square),
            Corner::Tl => o.up(square),
            Corner::Tr => o.up(o.right(square)),
        };
        self.vertex_of_bl[bl]
    }
}

/// Computes the vertex cycles, cone angles and genus of an origami.
///
/// The corner permutation is `c = v ∘ h ∘ v⁻¹ ∘ h⁻¹` on bottom-left corners;
/// genus comes from the Euler characteristic `V − 2N + N = 2 − 2g`.
pub fn cone_data(o: &Origami) -> SingularityProfile {
    let n = o.n_squares();
    let c: Vec<usize> = (0..n).map(|s| o.up(o.right(o.down(o.left(s))))).collect();

    let mut seen = vec![false; n];
    let mut vertex_cycles: Vec<Vec<usize>> = Vec::new();
    let mut vertex_of_bl = vec![usize::MAX; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let vid = vertex_cycles.len();
        let mut cyc = Vec::new();
        let mut s = start;
        loop {
            seen[s] = true;
            vertex_of_bl[s] = vid;
            cyc.push(s);
            s = c[s];
            if s == start {
                break;
            }
        }
        vertex_cycles.push(cyc);
    }

    let n_vertices = vertex_cycles.len();
    let cone_k: Vec<usize> = vertex_cycles.iter().map(|c| c.len()).collect();
    let singular: Vec<bool> = cone_k.iter().map(|&k| k >= 2).collect();
    debug_assert_eq!((n - n_vertices) % 2, 0, "Euler characteristic parity");
    let genus = 1 + (n - n_vertices) / 2;

    // Link cycles: 4 sectors per cycle element, in ccw order.
    let mut cycles: Vec<Vec<Sector>> = Vec::with_capacity(n_vertices);
    let mut position = vec![[(usize::MAX, usize::MAX); 4]; n];
    for (vid, cyc) in vertex_cycles.iter().enumerate() {
        let mut sectors = Vec::with_capacity(4 * cyc.len());
        for &x in cyc {
            let b = o.left(x);
            let t = o.down(b);
            let q = o.right(t);
            sectors.push(Sector::new(x, Corner::Bl));
            sectors.push(Sector::new(b, Corner::Br));
            sectors.push(Sector::new(t, Corner::Tr));
            sectors.push(Sector::new(q, Corner::Tl));
        }
        for (idx, sec) in sectors.iter().enumerate() {
            let slot = &mut position[sec.square][sec.corner.index()];
            debug_assert_eq!(slot.0, usize::MAX, "sector listed twice in link table");
            *slot = (vid, idx);
        }
        cycles.push(sectors);
    }
    debug_assert!(position
        .iter()
        .all(|row| row.iter().all(|&(v, _)| v != usize::MAX)));

    SingularityProfile {
        vertex_cycles,
        cone_k,
        singular,
        genus,
        n_vertices,
        link: LinkTable { cycles, position },
        vertex_of_bl,
    }
}

/// The 3-square L-shaped origami (genus 2, one cone point of angle 6π).
pub fn l_origami_3() -> Origami {
    parse_origami("n=3\nh=2 1 3\nv=3 2 1").unwrap()
}

/// The unit torus (one square).
pub fn torus() -> Origami {
    parse_origami("n=1\nh=1\nv=1").unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_torus() {
        let o = parse_origami("n=1\nh=1\nv=1").unwrap();
        assert_eq!(o.n_squares(), 1);
        let prof = cone_data(&o);
        assert_eq!(prof.n_vertices, 1);
        assert_eq!(prof.genus, 1);
        assert_eq!(prof.cone_k, vec![1]);
        assert!(prof.singular_vertices().is_empty());
    }

    #[test]
    fn parse_with_comments_roundtrips() {
        let text = "# L-shaped origami\nn=3\n# right neighbours\nh=2 1 3\nv=3 2 1\n";
        let o = parse_origami(text).unwrap();
        assert_eq!(parse_origami(&o.serialize()).unwrap(), o);
    }

    #[test]
    fn l3_is_genus_two_with_one_6pi_cone() {
        let o = l_origami_3();
        let prof = cone_data(&o);
        assert_eq!(prof.n_vertices, 1);
        assert_eq!(prof.cone_k, vec![3]);
        assert_eq!(prof.genus, 2);
        assert_eq!(prof.singular_vertices(), vec![0]);
    }

    #[test]
    fn disconnected_pair_of_tori_rejected() {
        let err = parse_origami("n=2\nh=1 2\nv=1 2").unwrap_err();
        assert_eq!(err, SurfaceError::DisconnectedSurface);
    }

    #[test]
    fn non_permutation_rejected() {
        assert!(matches!(
            parse_origami("n=2\nh=1 1\nv=2 1"),
            Err(SurfaceError::NotAPermutation("h", 2))
        ));
        assert!(matches!(
            parse_origami("n=2\nh=2 1\nv=3 1"),
            Err(SurfaceError::NotAPermutation(_, 2))
        ));
    }

    fn gauss_bonnet_holds(o: &Origami) -> bool {
        let prof = cone_data(o);
        let lhs: isize = prof.cone_k.iter().map(|&k| k as isize - 1).sum();
        lhs == 2 * prof.genus as isize - 2
    }

    #[test]
    fn gauss_bonnet_on_fixtures() {
        assert!(gauss_bonnet_holds(&torus()));
        assert!(gauss_bonnet_holds(&l_origami_3()));
    }

    #[test]
    fn link_cycles_cover_all_sectors_once() {
        for o in [torus(), l_origami_3()] {
            let prof = cone_data(&o);
            let total: usize = prof.link.cycles.iter().map(|c| c.len()).sum();
            assert_eq!(total, 4 * o.n_squares());
            // advance by the full cycle returns to start
            for s in 0..o.n_squares() {
                for corner in Corner::ALL {
                    let sec = Sector::new(s, corner);
                    let (v, _) = prof.link.position(sec);
                    let len = prof.link.cycles[v].len() as isize;
                    assert_eq!(prof.link.advance(sec, len), sec);
                }
            }
        }
    }

    /// Random connected origamis: relabeling squares must not change the
    /// multiset of cone angles or the genus.
    fn random_origami(n: usize, seed: u64) -> Option<Origami> {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut h: Vec<usize> = (0..n).collect();
        let mut v: Vec<usize> = (0..n).collect();
        h.shuffle(&mut rng);
        v.shuffle(&mut rng);
        Origami::new(h, v).ok()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn relabeling_invariance(seed in 0u64..1000, n in 2usize..8) {
            if let Some(o) = random_origami(n, seed) {
                let prof = cone_data(&o);
                // conjugate h, v by the rotation relabeling i -> i+1 mod n
                let relabel = |s: usize| (s + 1) % n;
                let unrelabel = |s: usize| (s + n - 1) % n;
                let h2: Vec<usize> = (0..n).map(|i| relabel(o.right(unrelabel(i)))).collect();
                let v2: Vec<usize> = (0..n).map(|i| relabel(o.up(unrelabel(i)))).collect();
                let o2 = Origami::new(h2, v2).unwrap();
                let prof2 = cone_data(&o2);
                let mut k1 = prof.cone_k.clone();
                let mut k2 = prof2.cone_k.clone();
                k1.sort_unstable();
                k2.sort_unstable();
                prop_assert_eq!(k1, k2);
                prop_assert_eq!(prof.genus, prof2.genus);
            }
        }

        #[test]
        fn gauss_bonnet_random(seed in 0u64..2000, n in 1usize..10) {
            if let Some(o) = random_origami(n, seed) {
                prop_assert!(gauss_bonnet_holds(&o));
                let prof = cone_data(&o);
                // genus integrality: 1 + (N - V)/2 integral
                prop_assert_eq!((n - prof.n_vertices) % 2, 0);
            }
        }

        #[test]
        fn serialize_roundtrip(seed in 0u64..500, n in 1usize..10) {
            if let Some(o) = random_origami(n, seed) {
                prop_assert_eq!(parse_origami(&o.serialize()).unwrap(), o);
            }
        }
    }
}

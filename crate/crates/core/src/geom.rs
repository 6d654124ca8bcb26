//! Exact rational planar primitives: integer 2×2 matrices, rational points,
//! convex polygons with Sutherland–Hodgman clipping.
//!
//! Everything here is exact; callers convert to `f64` only at the very end
//! (point location caches, reports).

use num::{BigInt, BigRational, FromPrimitive, Signed, ToPrimitive, Zero};
use std::fmt;

pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

/// Approximate an f64 by a rational with the given denominator (used only to
/// seed exact sample points from human-friendly float input).
pub fn rat_from_f64_approx(x: f64, den: i64) -> Rat {
    let num = (x * den as f64).round() as i64;
    rat(num, den)
}

#[derive(Clone, PartialEq, Eq)]
pub struct RatVec {
    pub x: Rat,
    pub y: Rat,
}

impl fmt::Debug for RatVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl RatVec {
    pub fn new(x: Rat, y: Rat) -> Self {
        RatVec { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        RatVec::new(rat_int(x), rat_int(y))
    }

    pub fn zero() -> Self {
        RatVec::new(Rat::zero(), Rat::zero())
    }

    pub fn add(&self, o: &RatVec) -> RatVec {
        RatVec::new(&self.x + &o.x, &self.y + &o.y)
    }

    pub fn sub(&self, o: &RatVec) -> RatVec {
        RatVec::new(&self.x - &o.x, &self.y - &o.y)
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (rat_to_f64(&self.x), rat_to_f64(&self.y))
    }
}

/// 2×2 integer matrix, row-major: [[a, b], [c, d]].
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct Mat2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Mat2 {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        Mat2::new(1, 0, 0, 1)
    }

    pub fn det(&self) -> i64 {
        self.a
            .checked_mul(self.d)
            .and_then(|ad| self.b.checked_mul(self.c).map(|bc| ad - bc))
            .expect("determinant overflow")
    }

    pub fn trace(&self) -> i64 {
        self.a + self.d
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let m = |x: i64, y: i64| x.checked_mul(y).expect("matrix entry overflow");
        Mat2::new(
            m(self.a, o.a) + m(self.b, o.c),
            m(self.a, o.b) + m(self.b, o.d),
            m(self.c, o.a) + m(self.d, o.c),
            m(self.c, o.b) + m(self.d, o.d),
        )
    }

    pub fn pow(&self, n: u32) -> Mat2 {
        let mut acc = Mat2::identity();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Inverse of a matrix with det = ±1 (stays integral).
    pub fn inverse_unimodular(&self) -> Mat2 {
        let det = self.det();
        assert!(det == 1 || det == -1, "matrix is not unimodular");
        Mat2::new(det * self.d, -det * self.b, -det * self.c, det * self.a)
    }

    pub fn apply(&self, v: &RatVec) -> RatVec {
        let a = Rat::from_i64(self.a).unwrap();
        let b = Rat::from_i64(self.b).unwrap();
        let c = Rat::from_i64(self.c).unwrap();
        let d = Rat::from_i64(self.d).unwrap();
        RatVec::new(&a * &v.x + &b * &v.y, &c * &v.x + &d * &v.y)
    }

    pub fn apply_int(&self, v: (i64, i64)) -> (i64, i64) {
        (self.a * v.0 + self.b * v.1, self.c * v.0 + self.d * v.1)
    }

    /// Column image of e1, i.e. where a unit horizontal vector goes.
    pub fn col_x(&self) -> (i64, i64) {
        (self.a, self.c)
    }

    /// Column image of e2.
    pub fn col_y(&self) -> (i64, i64) {
        (self.b, self.d)
    }

    pub fn to_f64(&self) -> [[f64; 2]; 2] {
        [[self.a as f64, self.b as f64], [self.c as f64, self.d as f64]]
    }
}

fn cross(o: &RatVec, a: &RatVec, b: &RatVec) -> Rat {
    (&a.x - &o.x) * (&b.y - &o.y) - (&a.y - &o.y) * (&b.x - &o.x)
}

/// Convex polygon with rational vertices, counterclockwise, no repeated
/// consecutive vertices. An empty vertex list is the empty polygon.
#[derive(Clone, PartialEq, Debug)]
pub struct Polygon {
    pub verts: Vec<RatVec>,
}

impl Polygon {
    pub fn empty() -> Self {
        Polygon { verts: Vec::new() }
    }

    /// Builds a polygon, deduplicating consecutive equal vertices and fixing
    /// the orientation to counterclockwise. Degenerate input collapses to
    /// the empty polygon.
    pub fn from_verts(mut verts: Vec<RatVec>) -> Self {
        verts.dedup();
        if verts.len() > 1 && verts.first() == verts.last() {
            verts.pop();
        }
        if verts.len() < 3 {
            return Polygon::empty();
        }
        let mut p = Polygon { verts };
        if p.signed_area().is_negative() {
            p.verts.reverse();
        }
        if p.signed_area().is_zero() {
            return Polygon::empty();
        }
        p
    }

    pub fn unit_square() -> Self {
        Polygon::from_verts(vec![
            RatVec::from_ints(0, 0),
            RatVec::from_ints(1, 0),
            RatVec::from_ints(1, 1),
            RatVec::from_ints(0, 1),
        ])
    }

    /// Unit cell [mx, mx+1] × [my, my+1].
    pub fn cell(mx: i64, my: i64) -> Self {
        Polygon::from_verts(vec![
            RatVec::from_ints(mx, my),
            RatVec::from_ints(mx + 1, my),
            RatVec::from_ints(mx + 1, my + 1),
            RatVec::from_ints(mx, my + 1),
        ])
    }

    pub fn is_empty(&self) -> bool {
        self.verts.len() < 3
    }

    fn signed_area(&self) -> Rat {
        let mut acc = Rat::zero();
        let n = self.verts.len();
        for i in 0..n {
            let p = &self.verts[i];
            let q = &self.verts[(i + 1) % n];
            acc += &p.x * &q.y - &q.x * &p.y;
        }
        acc / rat_int(2)
    }

    pub fn area(&self) -> Rat {
        if self.is_empty() {
            Rat::zero()
        } else {
            self.signed_area()
        }
    }

    /// Keeps the part of the polygon on the left of the directed line a→b.
    pub fn clip_halfplane(&self, a: &RatVec, b: &RatVec) -> Polygon {
        if self.is_empty() {
            return Polygon::empty();
        }
        let n = self.verts.len();
        let mut out: Vec<RatVec> = Vec::with_capacity(n + 1);
        for i in 0..n {
            let s = &self.verts[i];
            let e = &self.verts[(i + 1) % n];
            let sc = cross(a, b, s);
            let ec = cross(a, b, e);
            let s_in = !sc.is_negative();
            let e_in = !ec.is_negative();
            match (s_in, e_in) {
                (true, true) => out.push(e.clone()),
                (true, false) | (false, true) => {
                    let denom = &sc - &ec;
                    if !denom.is_zero() {
                        let t = &sc / &denom;
                        let ix = &s.x + &t * (&e.x - &s.x);
                        let iy = &s.y + &t * (&e.y - &s.y);
                        out.push(RatVec::new(ix, iy));
                    }
                    if e_in {
                        out.push(e.clone());
                    }
                }
                (false, false) => {}
            }
        }
        Polygon::from_verts(out)
    }

    pub fn clip_convex(&self, clip: &Polygon) -> Polygon {
        if clip.is_empty() {
            return Polygon::empty();
        }
        let n = clip.verts.len();
        let mut result = self.clone();
        for i in 0..n {
            if result.is_empty() {
                return Polygon::empty();
            }
            result = result.clip_halfplane(&clip.verts[i], &clip.verts[(i + 1) % n]);
        }
        result
    }

    /// Closed containment test.
    pub fn contains(&self, p: &RatVec) -> bool {
        if self.is_empty() {
            return false;
        }
        let n = self.verts.len();
        for i in 0..n {
            if cross(&self.verts[i], &self.verts[(i + 1) % n], p).is_negative() {
                return false;
            }
        }
        true
    }

    /// Image under z ↦ M z + t.
    pub fn map_affine(&self, m: &Mat2, t: &RatVec) -> Polygon {
        Polygon::from_verts(self.verts.iter().map(|v| m.apply(v).add(t)).collect())
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Polygon {
        let t = RatVec::from_ints(dx, dy);
        Polygon {
            verts: self.verts.iter().map(|v| v.add(&t)).collect(),
        }
    }

    /// Intersection of the polygon with the vertical line x = c, as a y-interval.
    pub fn slice_at_x(&self, c: &Rat) -> Option<(Rat, Rat)> {
        self.slice(|v| &v.x, |v| &v.y, c)
    }

    /// Intersection with the horizontal line y = c, as an x-interval.
    pub fn slice_at_y(&self, c: &Rat) -> Option<(Rat, Rat)> {
        self.slice(|v| &v.y, |v| &v.x, c)
    }

    fn slice<'a, F, G>(&'a self, key: F, val: G, c: &Rat) -> Option<(Rat, Rat)>
    where
        F: Fn(&'a RatVec) -> &'a Rat,
        G: Fn(&'a RatVec) -> &'a Rat,
    {
        if self.is_empty() {
            return None;
        }
        let n = self.verts.len();
        let mut lo: Option<Rat> = None;
        let mut hi: Option<Rat> = None;
        let mut push = |v: Rat| {
            if lo.as_ref().map_or(true, |l| v < *l) {
                lo = Some(v.clone());
            }
            if hi.as_ref().map_or(true, |h| v > *h) {
                hi = Some(v);
            }
        };
        for i in 0..n {
            let p = &self.verts[i];
            let q = &self.verts[(i + 1) % n];
            let kp = key(p);
            let kq = key(q);
            if kp == c {
                push(val(p).clone());
            }
            let straddles = (kp < c && kq > c) || (kp > c && kq < c);
            if straddles {
                let t = (c - kp) / (kq - kp);
                push(val(p) + &t * (val(q) - val(p)));
            }
        }
        match (lo, hi) {
            (Some(l), Some(h)) => Some((l, h)),
            _ => None,
        }
    }

    /// Rotates the vertex list to start at the lexicographically smallest
    /// vertex. Stable form for serialization and comparison.
    pub fn canonical(&self) -> Polygon {
        if self.is_empty() {
            return Polygon::empty();
        }
        let k = self
            .verts
            .iter()
            .enumerate()
            .min_by(|(_, u), (_, v)| (&u.x, &u.y).cmp(&(&v.x, &v.y)))
            .map(|(i, _)| i)
            .unwrap();
        let mut verts = self.verts[k..].to_vec();
        verts.extend_from_slice(&self.verts[..k]);
        Polygon { verts }
    }

    pub fn verts_f64(&self) -> Vec<(f64, f64)> {
        self.verts.iter().map(|v| v.to_f64()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::One;

    #[test]
    fn unit_square_area() {
        assert_eq!(Polygon::unit_square().area(), Rat::one());
    }

    #[test]
    fn clip_square_by_halfplane() {
        let sq = Polygon::unit_square();
        // keep x <= 1/2: left of the upward line x = 1/2
        let a = RatVec::new(rat(1, 2), rat_int(0));
        let b = RatVec::new(rat(1, 2), rat_int(1));
        let half = sq.clip_halfplane(&a, &b);
        assert_eq!(half.area(), rat(1, 2));
    }

    #[test]
    fn clip_convex_triangle() {
        let sq = Polygon::unit_square();
        let tri = Polygon::from_verts(vec![
            RatVec::from_ints(0, 0),
            RatVec::from_ints(2, 0),
            RatVec::from_ints(0, 2),
        ]);
        let piece = sq.clip_convex(&tri);
        // square minus the corner triangle above x+y=2 → area 1/2 remains... the
        // triangle covers half the square along the diagonal x+y<=2 fully: the
        // square is entirely inside except nothing: x+y <= 2 holds on all of it.
        assert_eq!(piece.area(), Rat::one());
        let tri_small = Polygon::from_verts(vec![
            RatVec::from_ints(0, 0),
            RatVec::from_ints(1, 0),
            RatVec::from_ints(0, 1),
        ]);
        assert_eq!(sq.clip_convex(&tri_small).area(), rat(1, 2));
    }

    #[test]
    fn containment_is_closed() {
        let sq = Polygon::unit_square();
        assert!(sq.contains(&RatVec::new(rat(1, 2), rat(1, 2))));
        assert!(sq.contains(&RatVec::from_ints(0, 0)));
        assert!(sq.contains(&RatVec::new(rat_int(1), rat(1, 2))));
        assert!(!sq.contains(&RatVec::new(rat(3, 2), rat(1, 2))));
    }

    #[test]
    fn affine_map_preserves_area_when_unimodular() {
        let sq = Polygon::unit_square();
        let m = Mat2::new(2, 1, 1, 1);
        assert_eq!(m.det(), 1);
        let img = sq.map_affine(&m, &RatVec::zero());
        assert_eq!(img.area(), Rat::one());
    }

    #[test]
    fn slice_interval() {
        let sq = Polygon::unit_square();
        let (lo, hi) = sq.slice_at_x(&rat(1, 2)).unwrap();
        assert_eq!((lo, hi), (rat_int(0), rat_int(1)));
        assert!(sq.slice_at_x(&rat_int(2)).is_none());
    }

    #[test]
    fn mat2_pow_and_inverse() {
        let a = Mat2::new(2, 1, 1, 1);
        let a2 = a.pow(2);
        assert_eq!(a2, Mat2::new(5, 3, 3, 2));
        let inv = a.inverse_unimodular();
        assert_eq!(a.mul(&inv), Mat2::identity());
    }
}

//! Exact integer polynomials and matrices: characteristic polynomials via
//! Faddeev–LeVerrier, exact division, Newton power sums, complex roots
//! through the companion matrix.

use nalgebra::DMatrix;
use num::complex::Complex64;
use num::{BigInt, One, Signed, ToPrimitive, Zero};
use std::fmt;

/// Integer polynomial, coefficients low degree → high degree, trimmed.
#[derive(Clone, PartialEq, Eq)]
pub struct IntPoly {
    pub coeffs: Vec<BigInt>,
}

impl fmt::Debug for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("{c}*t"),
                _ => format!("{c}*t^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl IntPoly {
    pub fn zero() -> Self {
        IntPoly { coeffs: vec![] }
    }

    pub fn one() -> Self {
        IntPoly {
            coeffs: vec![BigInt::one()],
        }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        IntPoly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn new(coeffs: Vec<BigInt>) -> Self {
        let mut p = IntPoly { coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the zero polynomial is reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> BigInt {
        self.coeffs.last().cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_one()
    }

    /// t^len - 1
    pub fn t_pow_minus_one(len: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); len + 1];
        coeffs[0] = -BigInt::one();
        coeffs[len] = BigInt::one();
        IntPoly::new(coeffs)
    }

    pub fn mul(&self, other: &IntPoly) -> IntPoly {
        if self.is_zero() || other.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }

    /// Exact division by a monic (or ±1-leading) divisor; `None` when the
    /// remainder is nonzero or a quotient coefficient would be fractional.
    pub fn divide_exact(&self, divisor: &IntPoly) -> Option<IntPoly> {
        if divisor.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(IntPoly::zero());
        }
        if self.coeffs.len() < divisor.coeffs.len() {
            return None;
        }
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        let dq = self.coeffs.len() - divisor.coeffs.len();
        let mut quot = vec![BigInt::zero(); dq + 1];
        for k in (0..=dq).rev() {
            let top = rem[k + divisor.coeffs.len() - 1].clone();
            if top.is_zero() {
                continue;
            }
            let (q, r) = num::Integer::div_rem(&top, &lead);
            if !r.is_zero() {
                return None;
            }
            quot[k] = q.clone();
            for (j, d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= &q * d;
            }
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(IntPoly::new(quot))
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0);
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    /// `± t^deg · p(1/t)`: coefficient reversal, sign chosen so the result has
    /// positive leading coefficient.
    pub fn reciprocal(&self) -> IntPoly {
        let mut coeffs: Vec<BigInt> = self.coeffs.iter().rev().cloned().collect();
        if coeffs.last().map_or(false, |c| c.is_negative()) {
            for c in &mut coeffs {
                *c = -c.clone();
            }
        }
        IntPoly::new(coeffs)
    }

    /// Newton power sums p_1..p_max of the roots of a monic polynomial.
    pub fn power_sums(&self, max: usize) -> Vec<BigInt> {
        assert!(self.is_monic(), "power sums need a monic polynomial");
        let d = self.degree();
        // e_k = (-1)^k * coeff of t^{d-k}
        let e = |k: usize| -> BigInt {
            if k > d {
                BigInt::zero()
            } else {
                let sign = if k % 2 == 0 { 1 } else { -1 };
                BigInt::from(sign) * &self.coeffs[d - k]
            }
        };
        let mut p: Vec<BigInt> = Vec::with_capacity(max + 1);
        p.push(BigInt::from(d as i64)); // p_0
        for k in 1..=max {
            // p_k = e_1 p_{k-1} - e_2 p_{k-2} + ... + (-1)^{k-1} k e_k
            let mut acc = BigInt::zero();
            for i in 1..k {
                let sign = if (i + 1) % 2 == 0 { 1 } else { -1 };
                acc += BigInt::from(sign) * e(i) * &p[k - i];
            }
            let sign = if (k + 1) % 2 == 0 { 1 } else { -1 };
            acc += BigInt::from(sign) * BigInt::from(k as i64) * e(k);
            p.push(acc);
        }
        p.truncate(max + 1);
        p
    }

    /// Complex roots via the companion matrix. The polynomial must be monic.
    pub fn complex_roots(&self) -> Vec<Complex64> {
        assert!(self.is_monic(), "roots need a monic polynomial");
        let d = self.degree();
        if d == 0 {
            return vec![];
        }
        let mut m = DMatrix::<f64>::zeros(d, d);
        for i in 1..d {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..d {
            m[(i, d - 1)] = -self.coeffs[i].to_f64().expect("coefficient out of f64 range");
        }
        m.complex_eigenvalues().iter().copied().collect()
    }
}

/// Dense integer matrix (square), exact operations only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    pub n: usize,
    pub data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(n: usize) -> Self {
        IntMatrix {
            n,
            data: vec![BigInt::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn mul(&self, o: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, o.n);
        let n = self.n;
        let mut out = IntMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let prod = a * &o[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    pub fn trace(&self) -> BigInt {
        (0..self.n).map(|i| self[(i, i)].clone()).sum()
    }

    /// Characteristic polynomial det(tI − M) by Faddeev–LeVerrier.
    /// Monic with integer coefficients; all interior divisions are exact.
    pub fn charpoly(&self) -> IntPoly {
        let n = self.n;
        let mut coeffs = vec![BigInt::zero(); n + 1];
        coeffs[n] = BigInt::one();
        let mut mk = IntMatrix::identity(n); // M_1 auxiliary = I
        for k in 1..=n {
            // M_k = A (M_{k-1} + c_{k-1} I) for k > 1; here mk already holds
            // M_{k-1} + c_{k-1} I at loop entry (I for k = 1).
            let am = self.mul(&mk);
            let tr = am.trace();
            let (c, r) = num::Integer::div_rem(&(-tr), &BigInt::from(k as i64));
            assert!(r.is_zero(), "Faddeev-LeVerrier divisibility violated");
            coeffs[n - k] = c.clone();
            if k < n {
                mk = am;
                for i in 0..n {
                    mk[(i, i)] += &c;
                }
            }
        }
        IntPoly::new(coeffs)
    }

    /// Exact determinant (Bareiss fraction-free elimination).
    pub fn det(&self) -> BigInt {
        let n = self.n;
        if n == 0 {
            return BigInt::one();
        }
        let mut m: Vec<Vec<BigInt>> = (0..n)
            .map(|i| (0..n).map(|j| self[(i, j)].clone()).collect())
            .collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[k][k].is_zero() {
                let swap = (k + 1..n).find(|&i| !m[i][k].is_zero());
                match swap {
                    Some(i) => {
                        m.swap(k, i);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    let (q, r) = num::Integer::div_rem(&num, &prev);
                    debug_assert!(r.is_zero());
                    m[i][j] = q;
                }
            }
            prev = m[k][k].clone();
        }
        sign * m[n - 1][n - 1].clone()
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.n + j]
    }
}

/// Clusters numerically computed roots at tolerance `tol`.
/// Returns centroids with multiplicities; `Err` when two distinct clusters
/// sit closer than `2·tol` (multiplicity assignment would be ambiguous).
pub fn cluster_roots(roots: &[Complex64], tol: f64) -> Result<Vec<(Complex64, usize)>, String> {
    let mut remaining: Vec<Complex64> = roots.to_vec();
    remaining.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .expect("NaN root")
    });
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for r in remaining {
        match clusters.iter_mut().find(|(c, _)| (*c - r).norm() <= tol) {
            Some((c, m)) => {
                // running centroid
                let k = *m as f64;
                *c = (*c * k + r) / (k + 1.0);
                *m += 1;
            }
            None => clusters.push((r, 1)),
        }
    }
    for i in 0..clusters.len() {
        for j in i + 1..clusters.len() {
            if (clusters[i].0 - clusters[j].0).norm() < 2.0 * tol {
                return Err(format!(
                    "root clusters {} and {} within 2*tol",
                    clusters[i].0, clusters[j].0
                ));
            }
        }
    }
    Ok(clusters)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charpoly_of_companion_like_matrix() {
        // [[2,1],[1,1]]: t^2 - 3t + 1
        let mut m = IntMatrix::zeros(2);
        m[(0, 0)] = BigInt::from(2);
        m[(0, 1)] = BigInt::from(1);
        m[(1, 0)] = BigInt::from(1);
        m[(1, 1)] = BigInt::from(1);
        assert_eq!(m.charpoly(), IntPoly::from_i64(&[1, -3, 1]));
        assert_eq!(m.det(), BigInt::one());
    }

    #[test]
    fn exact_division() {
        let a = IntPoly::from_i64(&[1, -3, 1]); // 1 - 3t + t^2
        let b = IntPoly::from_i64(&[-1, 1]); // t - 1
        let prod = a.mul(&b);
        assert_eq!(prod.divide_exact(&b).unwrap(), a);
        assert_eq!(prod.divide_exact(&a).unwrap(), b);
        assert!(a.divide_exact(&b).is_none());
    }

    #[test]
    fn power_sums_match_roots() {
        // (t-2)(t-3) = t^2 - 5t + 6: p1 = 5, p2 = 13, p3 = 35
        let p = IntPoly::from_i64(&[6, -5, 1]);
        let sums = p.power_sums(3);
        assert_eq!(sums[1], BigInt::from(5));
        assert_eq!(sums[2], BigInt::from(13));
        assert_eq!(sums[3], BigInt::from(35));
    }

    #[test]
    fn quadratic_roots() {
        // t^2 - t + 1: roots e^{±iπ/3}
        let p = IntPoly::from_i64(&[1, -1, 1]);
        let mut roots = p.complex_roots();
        roots.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((roots[0] - Complex64::new(0.5, -(3.0f64.sqrt()) / 2.0)).norm() < 1e-12);
        assert!((roots[1] - Complex64::new(0.5, 3.0f64.sqrt() / 2.0)).norm() < 1e-12);
    }

    #[test]
    fn reciprocity_helper() {
        let p = IntPoly::from_i64(&[1, -6, 1]);
        assert_eq!(p.reciprocal(), p);
        let q = IntPoly::from_i64(&[-1, 3, 2]);
        assert_eq!(q.reciprocal(), IntPoly::from_i64(&[-2, -3, 1]));
    }

    #[test]
    fn cluster_detects_multiplicity() {
        let roots = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0 + 1e-12, 0.0),
            Complex64::new(2.0, 0.0),
        ];
        let clusters = cluster_roots(&roots, 1e-9).unwrap();
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].1, 2);
    }
}

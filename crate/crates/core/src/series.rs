//! Truncated power series in three variables.
//!
//! Coefficients are stored densely, ordered by total degree and then
//! lexicographically. A `Series3` of order `N` holds the coefficients `c_a` of
//! all monomials `x^a` with `|a| ≤ N`; products are truncated at `N`.

use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use nalgebra::Vector3;

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 32;

/// Exponents and index lookup for all monomials up to a given order.
#[derive(Debug)]
pub struct MonomialTable {
    order: usize,
    exps: Vec<[usize; 3]>,
    /// `degree_start[d]` is the index of the first monomial of degree `d`.
    degree_start: Vec<usize>,
    lookup: Vec<usize>,
}

impl MonomialTable {
    fn build(order: usize) -> Self {
        let mut exps = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for d in 0..=order {
            degree_start.push(exps.len());
            for a in (0..=d).rev() {
                for b in (0..=d - a).rev() {
                    exps.push([a, b, d - a - b]);
                }
            }
        }
        degree_start.push(exps.len());
        let side = order + 1;
        let mut lookup = vec![usize::MAX; side * side * side];
        for (i, e) in exps.iter().enumerate() {
            lookup[(e[0] * side + e[1]) * side + e[2]] = i;
        }
        MonomialTable { order, exps, degree_start, lookup }
    }

    /// Cached table for `order`.
    pub fn get(order: usize) -> &'static MonomialTable {
        assert!(order <= MAX_ORDER, "series order {order} exceeds {MAX_ORDER}");
        static TABLES: [OnceLock<MonomialTable>; MAX_ORDER + 1] = [const { OnceLock::new() }; MAX_ORDER + 1];
        TABLES[order].get_or_init(|| MonomialTable::build(order))
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exps(&self) -> &[[usize; 3]] {
        &self.exps
    }

    /// Index range of the monomials of total degree `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }

    /// Index of `x^a`, or `None` if `|a|` exceeds the order.
    pub fn index(&self, a: [usize; 3]) -> Option<usize> {
        if a[0] + a[1] + a[2] > self.order {
            return None;
        }
        let side = self.order + 1;
        Some(self.lookup[(a[0] * side + a[1]) * side + a[2]])
    }
}

/// Number of monomials in three variables of degree at most `order`.
pub fn monomial_count(order: usize) -> usize {
    (order + 1) * (order + 2) * (order + 3) / 6
}

fn double_factorial_odd(n: i64) -> f64 {
    // (n)!! for odd n ≥ −1
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// `∫_{S²} ω^a dS(ω)` over the unit sphere in R³.
pub fn sphere_monomial_integral(a: [usize; 3]) -> f64 {
    if a.iter().any(|e| e % 2 == 1) {
        return 0.0;
    }
    let num: f64 = a.iter().map(|&e| double_factorial_odd(e as i64 - 1)).product();
    let total = (a[0] + a[1] + a[2]) as i64;
    4.0 * std::f64::consts::PI * num / double_factorial_odd(total + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series3 {
    order: usize,
    coeffs: Vec<f64>,
}

impl Series3 {
    pub fn zero(order: usize) -> Self {
        Series3 { order, coeffs: vec![0.0; MonomialTable::get(order).len()] }
    }

    pub fn constant(order: usize, c: f64) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// The series `c + x_var`.
    pub fn variable(order: usize, var: usize, c: f64) -> Self {
        let mut s = Self::constant(order, c);
        if order >= 1 {
            let mut e = [0; 3];
            e[var] = 1;
            let i = s.table().index(e).unwrap();
            s.coeffs[i] = 1.0;
        }
        s
    }

    /// Builds a series from `(exponent, coefficient)` pairs; terms above the order are dropped.
    pub fn from_terms(order: usize, terms: &[([usize; 3], f64)]) -> Self {
        let mut s = Self::zero(order);
        for (e, c) in terms {
            if let Some(i) = s.table().index(*e) {
                s.coeffs[i] += c;
            }
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn table(&self) -> &'static MonomialTable {
        MonomialTable::get(self.order)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, a: [usize; 3]) -> f64 {
        self.table().index(a).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn constant_term(&self) -> f64 {
        self.coeffs[0]
    }

    /// Same function truncated (or zero-padded) to `order`.
    pub fn with_order(&self, order: usize) -> Series3 {
        let mut out = Series3::zero(order);
        let t = self.table();
        for (i, e) in out.table().exps().iter().enumerate() {
            if let Some(j) = t.index(*e) {
                out.coeffs[i] = self.coeffs[j];
            }
        }
        out
    }

    /// Sum of the terms of total degree `< m + 1`, i.e. the degree-`m` Taylor polynomial.
    pub fn truncated(&self, m: usize) -> Series3 {
        let mut out = self.clone();
        if m < self.order {
            let start = self.table().degree_range(m + 1).start;
            out.coeffs[start..].iter_mut().for_each(|c| *c = 0.0);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        let n = self.order;
        let mut pw = [[1.0; MAX_ORDER + 1]; 3];
        for v in 0..3 {
            for k in 1..=n {
                pw[v][k] = pw[v][k - 1] * x[v];
            }
        }
        // sum from high degree to low keeps the small terms together
        let mut acc = 0.0;
        for (c, e) in self.coeffs.iter().zip(self.table().exps()).rev() {
            if *c != 0.0 {
                acc += c * pw[0][e[0]] * pw[1][e[1]] * pw[2][e[2]];
            }
        }
        acc
    }

    /// Homogeneous degree-`d` part evaluated at `x`.
    pub fn eval_homogeneous(&self, d: usize, x: &Vector3<f64>) -> f64 {
        let t = self.table();
        t.degree_range(d)
            .map(|i| {
                let e = t.exps()[i];
                self.coeffs[i] * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32)
            })
            .sum()
    }

    /// `∫_{S²} P_d(ω) ω^extra dS` where `P_d` is the degree-`d` part.
    pub fn sphere_moment(&self, d: usize, extra: [usize; 3]) -> f64 {
        let t = self.table();
        t.degree_range(d)
            .map(|i| {
                let e = t.exps()[i];
                let a = [e[0] + extra[0], e[1] + extra[1], e[2] + extra[2]];
                self.coeffs[i] * sphere_monomial_integral(a)
            })
            .sum()
    }

    pub fn scale(&self, c: f64) -> Series3 {
        Series3 { order: self.order, coeffs: self.coeffs.iter().map(|v| v * c).collect() }
    }

    fn check_order(&self, other: &Series3) {
        assert_eq!(self.order, other.order, "series orders differ");
    }

    /// Truncated product.
    pub fn mul_trunc(&self, other: &Series3) -> Series3 {
        self.check_order(other);
        let t = self.table();
        let n = self.order;
        let side = n + 1;
        let mut out = vec![0.0; t.len()];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let ea = t.exps[i];
            let da = ea[0] + ea[1] + ea[2];
            let end = t.degree_start[n - da + 1];
            for (j, &b) in other.coeffs[..end].iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let eb = t.exps[j];
                let k = t.lookup[((ea[0] + eb[0]) * side + ea[1] + eb[1]) * side + ea[2] + eb[2]];
                out[k] += a * b;
            }
        }
        Series3 { order: n, coeffs: out }
    }

    /// `Σ_{n=0}^{N} w_n u^n` for `u = self − constant_term`; `weights.len()` must be `order + 1`.
    fn compose_univariate(&self, weights: &[f64]) -> Series3 {
        let mut u = self.clone();
        u.coeffs[0] = 0.0;
        let mut out = Series3::constant(self.order, weights[0]);
        let mut pow = Series3::constant(self.order, 1.0);
        for w in weights.iter().skip(1) {
            pow = pow.mul_trunc(&u);
            if pow.max_abs() == 0.0 {
                break;
            }
            out += &pow.scale(*w);
        }
        out
    }

    /// Reciprocal; requires a nonzero constant term.
    pub fn recip(&self) -> Series3 {
        let a0 = self.coeffs[0];
        assert!(a0 != 0.0, "reciprocal of a series with zero constant term");
        // 1/(a0 + u) = Σ (−1)^n u^n / a0^{n+1}
        let mut w = Vec::with_capacity(self.order + 1);
        let mut c = 1.0 / a0;
        for _ in 0..=self.order {
            w.push(c);
            c *= -1.0 / a0;
        }
        self.compose_univariate(&w)
    }

    pub fn exp(&self) -> Series3 {
        let a0 = self.coeffs[0];
        let mut w = Vec::with_capacity(self.order + 1);
        let mut c = a0.exp();
        for n in 0..=self.order {
            if n > 0 {
                c /= n as f64;
            }
            w.push(c);
        }
        self.compose_univariate(&w)
    }

    pub fn powi(&self, p: u32) -> Series3 {
        let mut out = Series3::constant(self.order, 1.0);
        let mut base = self.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul_trunc(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_trunc(&base);
            }
        }
        out
    }
}

impl AddAssign<&Series3> for Series3 {
    fn add_assign(&mut self, rhs: &Series3) {
        self.check_order(rhs);
        self.coeffs.iter_mut().zip(&rhs.coeffs).for_each(|(a, b)| *a += b);
    }
}

impl SubAssign<&Series3> for Series3 {
    fn sub_assign(&mut self, rhs: &Series3) {
        self.check_order(rhs);
        self.coeffs.iter_mut().zip(&rhs.coeffs).for_each(|(a, b)| *a -= b);
    }
}

impl MulAssign<f64> for Series3 {
    fn mul_assign(&mut self, rhs: f64) {
        self.coeffs.iter_mut().for_each(|a| *a *= rhs);
    }
}

impl Add<&Series3> for &Series3 {
    type Output = Series3;
    fn add(self, rhs: &Series3) -> Series3 {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&Series3> for &Series3 {
    type Output = Series3;
    fn sub(self, rhs: &Series3) -> Series3 {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul<&Series3> for &Series3 {
    type Output = Series3;
    fn mul(self, rhs: &Series3) -> Series3 {
        self.mul_trunc(rhs)
    }
}

impl Neg for &Series3 {
    type Output = Series3;
    fn neg(self) -> Series3 {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn table_layout() {
        for n in [0, 1, 4, 12] {
            let t = MonomialTable::get(n);
            assert_eq!(t.len(), monomial_count(n));
            for (i, e) in t.exps().iter().enumerate() {
                assert_eq!(t.index(*e), Some(i));
            }
        }
        assert_eq!(monomial_count(4), 35);
    }

    #[test]
    fn monomial_sphere_integrals() {
        assert_relative_eq!(sphere_monomial_integral([0, 0, 0]), 4.0 * PI);
        assert_relative_eq!(sphere_monomial_integral([2, 0, 0]), 4.0 * PI / 3.0);
        assert_relative_eq!(sphere_monomial_integral([0, 4, 0]), 4.0 * PI / 5.0);
        assert_relative_eq!(sphere_monomial_integral([2, 2, 0]), 4.0 * PI / 15.0);
        assert_eq!(sphere_monomial_integral([1, 2, 0]), 0.0);
    }

    #[test]
    fn reciprocal_of_one_plus_r2() {
        // 1/(1+|x|²) = 1 − |x|² + |x|⁴ − …
        let n = 6;
        let d = Series3::from_terms(n, &[([0, 0, 0], 1.0), ([2, 0, 0], 1.0), ([0, 2, 0], 1.0), ([0, 0, 2], 1.0)]);
        let inv = d.recip();
        let prod = d.mul_trunc(&inv);
        assert_relative_eq!(prod.constant_term(), 1.0);
        assert!(prod.coeffs()[1..].iter().all(|c| c.abs() < 1e-14));
        assert_relative_eq!(inv.coeff([2, 0, 0]), -1.0);
        assert_relative_eq!(inv.coeff([2, 2, 0]), 2.0);
        let x = Vector3::new(0.1, -0.05, 0.02);
        // truncation error is O(|x|⁸)
        assert_relative_eq!(inv.eval(&x), 1.0 / (1.0 + x.norm_squared()), epsilon = 1e-7);
    }

    #[test]
    fn exp_matches_scalar() {
        let s = Series3::from_terms(10, &[([0, 0, 0], 0.3), ([1, 0, 0], 0.5), ([0, 1, 1], -0.2)]);
        let e = s.exp();
        let x = Vector3::new(0.05, 0.1, -0.07);
        assert_relative_eq!(e.eval(&x), s.eval(&x).exp(), epsilon = 1e-12);
    }

    #[test]
    fn powers() {
        let s = Series3::from_terms(8, &[([0, 0, 0], 1.0), ([1, 0, 0], 1.0)]);
        let p = s.powi(5);
        assert_relative_eq!(p.coeff([3, 0, 0]), 10.0);
        assert_relative_eq!(p.coeff([5, 0, 0]), 1.0);
        assert_eq!(p.coeff([6, 0, 0]), 0.0);
    }
}

//! Truncated Taylor series about a complex point.
//!
//! A [`Jet`] of order `K` stores `c₀..c_K` with `f(center + ε) = Σ c_m ε^m + O(ε^{K+1})`.
//! Arithmetic is exact truncated-series algebra, so `f⁽ⁿ⁾(center) = n!·c_n`
//! without any step-size error.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub center: C64,
    pub coeffs: Vec<C64>,
}

impl Jet {
    pub fn constant(value: C64, center: C64, order: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); order + 1];
        coeffs[0] = value;
        Self { center, coeffs }
    }

    /// The identity `k ↦ k`.
    pub fn variable(center: C64, order: usize) -> Self {
        let mut j = Self::constant(center, center, order);
        if order > 0 {
            j.coeffs[1] = C64::new(1.0, 0.0);
        }
        j
    }

    /// `e^{a k}` about `center`: coefficients `e^{a·center}·a^m/m!`.
    pub fn exp_linear(a: C64, center: C64, order: usize) -> Self {
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut c = (a * center).exp();
        for m in 0..=order {
            coeffs.push(c);
            c = c * a / (m + 1) as f64;
        }
        Self { center, coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, n: usize) -> Result<C64> {
        self.coeffs
            .get(n)
            .copied()
            .ok_or(Error::JetOrder { order: self.order(), requested: n })
    }

    /// `f⁽ⁿ⁾(center)`.
    pub fn derivative(&self, n: usize) -> Result<C64> {
        let factorial: f64 = (1..=n).map(|i| i as f64).product();
        Ok(self.coeff(n)? * factorial)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { center: self.center, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Coefficient `n` of `self·other` without forming the whole product.
    pub fn product_coeff(&self, other: &Jet, n: usize) -> Result<C64> {
        if n > self.order().min(other.order()) {
            return Err(Error::JetOrder { order: self.order().min(other.order()), requested: n });
        }
        Ok((0..=n).map(|i| self.coeffs[i] * other.coeffs[n - i]).sum())
    }

    pub fn recip(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0 == C64::new(0.0, 0.0) {
            return Err(Error::InvalidParams("reciprocal of a jet vanishing at its center".into()));
        }
        let inv = 1.0 / a0;
        let mut b = Vec::with_capacity(self.coeffs.len());
        b.push(inv);
        for m in 1..self.coeffs.len() {
            let s: C64 = (1..=m).map(|j| self.coeffs[j] * b[m - j]).sum();
            b.push(-s * inv);
        }
        Ok(Self { center: self.center, coeffs: b })
    }

    pub fn powi(&self, n: i32) -> Result<Self> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut result = Self::constant(C64::new(1.0, 0.0), self.center, self.order());
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    pub fn exp(&self) -> Self {
        let a = &self.coeffs;
        let mut b = Vec::with_capacity(a.len());
        b.push(a[0].exp());
        for m in 1..a.len() {
            let s: C64 = (1..=m).map(|j| a[j] * b[m - j] * j as f64).sum();
            b.push(s / m as f64);
        }
        Self { center: self.center, coeffs: b }
    }
}

fn same_center(a: &Jet, b: &Jet) {
    debug_assert!(a.center == b.center, "jets expanded about different points");
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        same_center(self, rhs);
        let n = self.coeffs.len().min(rhs.coeffs.len());
        Jet { center: self.center, coeffs: (0..n).map(|i| self.coeffs[i] + rhs.coeffs[i]).collect() }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self + &(-rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        same_center(self, rhs);
        let n = self.coeffs.len().min(rhs.coeffs.len());
        let coeffs = (0..n).map(|m| (0..=m).map(|i| self.coeffs[i] * rhs.coeffs[m - i]).sum()).collect();
        Jet { center: self.center, coeffs }
    }
}

impl Add<C64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: C64) -> Jet {
        let mut j = self.clone();
        j.coeffs[0] += rhs;
        j
    }
}

//! Laurent polynomials in ħ and truncated power series in the coupling λ.
//!
//! ħ is kept exact: coefficients are finite maps from (possibly negative)
//! ħ-exponents to values. λ is truncated at a fixed order `K`. The
//! coefficient space is anything implementing [`Coefficient`]; the product
//! is supplied by the caller, since the same series are multiplied with the
//! pointwise, star and time-ordered products.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A complex vector space with a distinguished unit.
pub trait Coefficient: Clone + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign_ref(&mut self, other: &Self);
    fn scale(&self, s: Complex64) -> Self;
    /// `Some(c)` when the value is `c` times the unit.
    fn as_scalar(&self) -> Option<Complex64>;
    /// Largest absolute coefficient, used for residuals.
    fn max_abs(&self) -> f64;

    fn from_scalar(s: Complex64) -> Self {
        Self::one().scale(s)
    }

    fn sub_ref(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign_ref(&other.scale(Complex64::new(-1.0, 0.0)));
        out
    }
}

impl Coefficient for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }

    fn scale(&self, s: Complex64) -> Self {
        self * s
    }

    fn as_scalar(&self) -> Option<Complex64> {
        Some(*self)
    }

    fn max_abs(&self) -> f64 {
        self.norm()
    }
}

/// Finite Laurent polynomial `Σ_k c_k ħ^k`. Zero coefficients are never stored.
#[derive(Debug, Clone)]
pub struct HbarPoly<C> {
    terms: BTreeMap<i32, C>,
}

impl<C: Coefficient> Default for HbarPoly<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coefficient> HbarPoly<C> {
    pub fn zero() -> Self {
        HbarPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn constant(c: C) -> Self {
        Self::monomial(0, c)
    }

    pub fn monomial(exponent: i32, c: C) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exponent, c);
        }
        HbarPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &C)> {
        self.terms.iter().map(|(&k, c)| (k, c))
    }

    pub fn coeff(&self, exponent: i32) -> C {
        self.terms.get(&exponent).cloned().unwrap_or_else(C::zero)
    }

    pub fn min_exponent(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }

    pub fn max_exponent(&self) -> Option<i32> {
        self.terms.keys().next_back().copied()
    }

    pub fn add_term(&mut self, exponent: i32, c: &C) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(exponent).or_insert_with(C::zero);
        slot.add_assign_ref(c);
        if slot.is_zero() {
            self.terms.remove(&exponent);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (k, c) in other.terms() {
            self.add_term(k, c);
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero();
        for (k, c) in self.terms() {
            out.add_term(k, &c.scale(s));
        }
        out
    }

    /// Multiply by `ħ^k`.
    pub fn shift(&self, k: i32) -> Self {
        HbarPoly { terms: self.terms.iter().map(|(&e, c)| (e + k, c.clone())).collect() }
    }

    /// Apply a linear map coefficientwise.
    pub fn map<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> HbarPoly<D> {
        let mut out = HbarPoly::zero();
        for (k, c) in self.terms() {
            out.add_term(k, &f(c));
        }
        out
    }

    /// Apply a linear map whose values are themselves ħ-polynomials.
    pub fn flat_map(&self, f: impl Fn(&C) -> HbarPoly<C>) -> Self {
        let mut out = Self::zero();
        for (k, c) in self.terms() {
            out.add_assign(&f(c).shift(k));
        }
        out
    }

    /// Bilinear extension of a coefficient product; ħ-exponents add.
    pub fn mul_with(&self, other: &Self, mul: &impl Fn(&C, &C) -> HbarPoly<C>) -> Self {
        let mut out = Self::zero();
        for (i, a) in self.terms() {
            for (j, b) in other.terms() {
                out.add_assign(&mul(a, b).shift(i + j));
            }
        }
        out
    }

    pub fn as_scalar(&self) -> Option<(i32, Complex64)> {
        if self.terms.len() != 1 {
            return None;
        }
        let (&k, c) = self.terms.iter().next()?;
        c.as_scalar().map(|s| (k, s))
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(C::max_abs).fold(0.0, f64::max)
    }

    /// Largest coefficient of `self - other`, exponent by exponent.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }
}

/// Truncated series `Σ_{n ≤ K} λ^n a_n` with Laurent-in-ħ coefficients.
#[derive(Debug, Clone)]
pub struct FormalSeries<C> {
    coeffs: Vec<HbarPoly<C>>,
}

impl<C: Coefficient> FormalSeries<C> {
    pub fn zero(order: usize) -> Self {
        FormalSeries { coeffs: vec![HbarPoly::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        Self::constant(order, HbarPoly::one())
    }

    pub fn constant(order: usize, c: HbarPoly<C>) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// `λ^n c`, truncated away when `n > order`.
    pub fn monomial(order: usize, n: usize, c: HbarPoly<C>) -> Self {
        let mut s = Self::zero(order);
        if n <= order {
            s.coeffs[n] = c;
        }
        s
    }

    pub fn from_coeffs(coeffs: Vec<HbarPoly<C>>) -> Self {
        assert!(!coeffs.is_empty(), "a series has at least the λ⁰ coefficient");
        FormalSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &HbarPoly<C> {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[HbarPoly<C>] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, n: usize, c: HbarPoly<C>) {
        self.coeffs[n] = c;
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut s = Self::zero(order);
        for n in 0..=order.min(self.order()) {
            s.coeffs[n] = self.coeffs[n].clone();
        }
        s
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch(self.order(), other.order()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(FormalSeries { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.add(b)).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        FormalSeries { coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn map_coeffs(&self, f: impl Fn(&HbarPoly<C>) -> HbarPoly<C>) -> Self {
        FormalSeries { coeffs: self.coeffs.iter().map(f).collect() }
    }

    /// Largest residual over all λ- and ħ-coefficients.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_order(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.distance(b)).fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(HbarPoly::max_abs).fold(0.0, f64::max)
    }
}

/// Cauchy product: the λ^n coefficient is `Σ_{i+j=n} mul(a_i, b_j)`.
pub fn series_mul<C: Coefficient>(
    a: &FormalSeries<C>,
    b: &FormalSeries<C>,
    mul: &impl Fn(&C, &C) -> HbarPoly<C>,
) -> Result<FormalSeries<C>> {
    a.check_order(b)?;
    let order = a.order();
    let mut out = FormalSeries::zero(order);
    for i in 0..=order {
        if a.coeffs[i].is_zero() {
            continue;
        }
        for j in 0..=order - i {
            if b.coeffs[j].is_zero() {
                continue;
            }
            let term = a.coeffs[i].mul_with(&b.coeffs[j], mul);
            out.coeffs[i + j].add_assign(&term);
        }
    }
    Ok(out)
}

/// Two-sided inverse for a series whose constant term is `c ħ^k` times the
/// unit with `c ≠ 0`.
pub fn series_inv<C: Coefficient>(
    a: &FormalSeries<C>,
    mul: &impl Fn(&C, &C) -> HbarPoly<C>,
) -> Result<FormalSeries<C>> {
    let (k, c) = a.coeffs[0].as_scalar().ok_or(Error::NotInvertible)?;
    if c.norm() == 0.0 {
        return Err(Error::NotInvertible);
    }
    let inv0 = HbarPoly::monomial(-k, C::from_scalar(c.inv()));
    let order = a.order();
    let mut out = FormalSeries::zero(order);
    out.coeffs[0] = inv0.clone();
    for n in 1..=order {
        // a_0 b_n = -Σ_{j ≥ 1} a_j b_{n-j}
        let mut acc = HbarPoly::zero();
        for j in 1..=n {
            if a.coeffs[j].is_zero() || out.coeffs[n - j].is_zero() {
                continue;
            }
            acc.add_assign(&a.coeffs[j].mul_with(&out.coeffs[n - j], mul));
        }
        out.coeffs[n] = inv0.mul_with(&acc, mul).scale(Complex64::new(-1.0, 0.0));
    }
    Ok(out)
}

/// `Σ_{n ≤ K} a^n / n!` for `a` without constant term.
pub fn series_exp<C: Coefficient>(
    a: &FormalSeries<C>,
    mul: &impl Fn(&C, &C) -> HbarPoly<C>,
) -> Result<FormalSeries<C>> {
    if !a.coeffs[0].is_zero() {
        return Err(Error::NonZeroConstant);
    }
    let order = a.order();
    let mut out = FormalSeries::one(order);
    let mut power = FormalSeries::one(order);
    let mut factorial = 1.0;
    for n in 1..=order {
        power = series_mul(&power, a, mul)?;
        factorial *= n as f64;
        out = out.add(&power.scale(Complex64::new(1.0 / factorial, 0.0)))?;
    }
    Ok(out)
}

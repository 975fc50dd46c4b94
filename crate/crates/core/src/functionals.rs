//! Polynomial functionals of lattice field configurations.
//!
//! A functional is stored as a sparse map from sorted point multisets to
//! complex coefficients, so every kernel is symmetric by construction and
//! delta-supported. Pairings are plain sums over lattice points; volume
//! factors live in the coefficients.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fps::Coefficient;
use crate::lattice::{LatticeSpacetime, Point};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// A sorted multiset of lattice points.
pub type Monomial = Vec<Point>;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfiguration {
    lattice: LatticeSpacetime,
    values: Vec<f64>,
}

impl FieldConfiguration {
    pub fn zeros(lattice: &LatticeSpacetime) -> Self {
        FieldConfiguration { lattice: *lattice, values: vec![0.0; lattice.num_points()] }
    }

    pub fn from_fn(lattice: &LatticeSpacetime, f: impl Fn(Point) -> f64) -> Self {
        FieldConfiguration { lattice: *lattice, values: lattice.points().map(f).collect() }
    }

    pub fn from_values(lattice: &LatticeSpacetime, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), lattice.num_points(), "one value per lattice point");
        FieldConfiguration { lattice: *lattice, values }
    }

    pub fn delta(lattice: &LatticeSpacetime, p: Point, value: f64) -> Self {
        let mut phi = Self::zeros(lattice);
        phi.set(p, value);
        phi
    }

    pub fn lattice(&self) -> &LatticeSpacetime {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, p: Point) -> f64 {
        self.values[self.lattice.index(p)]
    }

    pub fn set(&mut self, p: Point, value: f64) {
        let i = self.lattice.index(p);
        self.values[i] = value;
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        FieldConfiguration { lattice: self.lattice, values: self.values.iter().map(|v| v * s).collect() }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        FieldConfiguration {
            lattice: self.lattice,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Points where the configuration is nonzero.
    pub fn support(&self) -> BTreeSet<Point> {
        self.lattice.points().filter(|&p| self.get(p) != 0.0).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolyFunctional {
    terms: BTreeMap<Monomial, Complex64>,
}

impl PolyFunctional {
    pub fn zero() -> Self {
        PolyFunctional::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(Vec::new(), c)
    }

    /// The evaluation functional `φ ↦ φ(p)`.
    pub fn field(p: Point) -> Self {
        Self::monomial(vec![p], Complex64::new(1.0, 0.0))
    }

    pub fn monomial(mut points: Vec<Point>, c: Complex64) -> Self {
        points.sort_unstable();
        let mut f = Self::zero();
        f.add_term(points, c);
        f
    }

    /// `φ ↦ Σ_p f(p) φ(p)` over the given smearing function.
    pub fn linear(lattice: &LatticeSpacetime, smearing: &[f64]) -> Self {
        let mut f = Self::zero();
        for (i, &v) in smearing.iter().enumerate() {
            f.add_term(vec![lattice.point(i)], Complex64::new(v, 0.0));
        }
        f
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Vec<Point>, Complex64)>) -> Self {
        let mut f = Self::zero();
        for (mut m, c) in terms {
            m.sort_unstable();
            f.add_term(m, c);
        }
        f
    }

    /// Adds `c` to the coefficient of an already sorted monomial.
    pub fn add_term(&mut self, monomial: Monomial, c: Complex64) {
        debug_assert!(monomial.windows(2).all(|w| w[0] <= w[1]));
        if c.re == 0.0 && c.im == 0.0 {
            return;
        }
        let slot = self.terms.entry(monomial).or_insert(Complex64::new(0.0, 0.0));
        *slot += c;
        if slot.re == 0.0 && slot.im == 0.0 {
            // removes the key we just touched
            self.terms.retain(|_, v| v.re != 0.0 || v.im != 0.0);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, Complex64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, monomial: &[Point]) -> Complex64 {
        self.terms.get(monomial).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Part of homogeneous degree `n`.
    pub fn homogeneous(&self, n: usize) -> Self {
        PolyFunctional {
            terms: self.terms.iter().filter(|(m, _)| m.len() == n).map(|(m, &c)| (m.clone(), c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero();
        for (m, c) in self.terms() {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    pub fn evaluate(&self, phi: &FieldConfiguration) -> Complex64 {
        self.terms().map(|(m, c)| c * m.iter().map(|&p| phi.get(p)).product::<f64>()).sum()
    }

    /// `∂F/∂φ(p)`, respecting multiplicities.
    pub fn derivative(&self, p: Point) -> Self {
        let mut out = Self::zero();
        for (m, c) in self.terms() {
            let mult = m.iter().filter(|&&q| q == p).count();
            if mult == 0 {
                continue;
            }
            let pos = m.iter().position(|&q| q == p).unwrap();
            let mut rest = m.clone();
            rest.remove(pos);
            out.add_term(rest, c * mult as f64);
        }
        out
    }

    pub fn pointwise_mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                out.add_term(merge_sorted(a, b), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, n: usize) -> Self {
        let mut out = Self::constant(Complex64::new(1.0, 0.0));
        for _ in 0..n {
            out = out.pointwise_mul(self);
        }
        out
    }

    pub fn support(&self) -> BTreeSet<Point> {
        self.terms.keys().flatten().copied().collect()
    }

    /// Every monomial is a power of a single point.
    pub fn is_local(&self) -> bool {
        self.terms.keys().all(|m| m.windows(2).all(|w| w[0] == w[1]))
    }

    /// Constant part (degree zero coefficient).
    pub fn constant_part(&self) -> Complex64 {
        self.coeff(&[])
    }

    pub fn without_constant(&self) -> Self {
        PolyFunctional {
            terms: self.terms.iter().filter(|(m, _)| !m.is_empty()).map(|(m, &c)| (m.clone(), c)).collect(),
        }
    }

    /// Relabels every point through `map`.
    pub fn map_points(&self, map: impl Fn(Point) -> Point) -> Self {
        Self::from_terms(self.terms().map(|(m, c)| (m.iter().map(|&p| map(p)).collect(), c)))
    }

    /// The functional `ψ ↦ F(φ + ψ)`.
    pub fn shifted(&self, phi: &FieldConfiguration) -> Self {
        let mut out = Self::zero();
        for (m, c) in self.terms() {
            // expand Π (φ_i + ψ_i) over subsets kept as fields
            let n = m.len();
            for mask in 0u32..(1 << n) {
                let mut coeff = c;
                let mut kept = Vec::new();
                for (i, &p) in m.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        kept.push(p);
                    } else {
                        coeff *= phi.get(p);
                    }
                }
                out.add_term(kept, coeff);
            }
        }
        out
    }

    /// Coefficientwise maximum of `|self - other|`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.distance(other) <= tol
    }
}

pub(crate) fn merge_sorted(a: &[Point], b: &[Point]) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl Coefficient for PolyFunctional {
    fn zero() -> Self {
        PolyFunctional::zero()
    }

    fn one() -> Self {
        PolyFunctional::constant(Complex64::new(1.0, 0.0))
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_assign_ref(&mut self, other: &Self) {
        for (m, c) in other.terms() {
            self.add_term(m.clone(), c);
        }
    }

    fn scale(&self, s: Complex64) -> Self {
        PolyFunctional::scale(self, s)
    }

    fn as_scalar(&self) -> Option<Complex64> {
        match self.terms.len() {
            0 => Some(Complex64::new(0.0, 0.0)),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    fn max_abs(&self) -> f64 {
        PolyFunctional::max_abs(self)
    }
}

/// Tests `F(φ+χ+ψ) = F(φ+χ) − F(χ) + F(χ+ψ)` for variations `φ`, `ψ` with
/// disjoint supports.
pub fn check_additivity(
    f: &PolyFunctional,
    phi: &FieldConfiguration,
    chi: &FieldConfiguration,
    psi: &FieldConfiguration,
    tol: f64,
) -> Result<bool> {
    if !phi.support().is_disjoint(&psi.support()) {
        return Err(Error::OverlappingSupports);
    }
    let lhs = f.evaluate(&phi.add(chi).add(psi));
    let rhs = f.evaluate(&phi.add(chi)) - f.evaluate(chi) + f.evaluate(&chi.add(psi));
    let scale = 1.0f64.max(lhs.norm());
    Ok((lhs - rhs).norm() <= tol * scale)
}

/// Random polynomial with `n_terms` monomials of degree `1..=max_degree`
/// over `points` and real coefficients in `[-1, 1]`.
pub fn random_poly(rng: &mut impl Rng, points: &[Point], max_degree: usize, n_terms: usize) -> PolyFunctional {
    let mut out = PolyFunctional::zero();
    if points.is_empty() || max_degree == 0 {
        return out;
    }
    for _ in 0..n_terms {
        let degree = rng.gen_range(1..=max_degree);
        let m: Vec<Point> = (0..degree).map(|_| points[rng.gen_range(0..points.len())]).collect();
        let c = rng.gen_range(-1.0..=1.0);
        out = out.add(&PolyFunctional::monomial(m, Complex64::new(c, 0.0)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn lat() -> LatticeSpacetime {
        LatticeSpacetime::new(4, 8, 0.5, 1.0).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let l = lat();
        let p = Point::new(1, 2);
        let q = Point::new(2, 5);
        let phi = FieldConfiguration::from_fn(&l, |r| {
            if r == p {
                1.0
            } else if r == q {
                5.0
            } else {
                2.0
            }
        });
        assert_eq!(PolyFunctional::field(Point::new(0, 0)).evaluate(&phi), c(2.0));
        assert_eq!(PolyFunctional::monomial(vec![p, q, p], c(3.0)).evaluate(&phi), c(15.0));
        assert_eq!(PolyFunctional::constant(c(7.0)).evaluate(&phi), c(7.0));
    }

    #[test]
    fn derivative_examples() {
        let p = Point::new(1, 1);
        let q = Point::new(2, 2);
        let sq = PolyFunctional::monomial(vec![p, p], c(1.0));
        assert_eq!(sq.derivative(p), PolyFunctional::monomial(vec![p], c(2.0)));
        let pq = PolyFunctional::monomial(vec![p, q], c(1.0));
        assert_eq!(pq.derivative(p), PolyFunctional::field(q));
        assert!(PolyFunctional::monomial(vec![q, q, q], c(1.0)).derivative(p).is_zero());
    }

    #[test]
    fn product_examples() {
        let p = Point::new(1, 1);
        let q = Point::new(2, 2);
        let fp = PolyFunctional::field(p);
        let fq = PolyFunctional::field(q);
        assert_eq!(fp.pointwise_mul(&fp), PolyFunctional::monomial(vec![p, p], c(1.0)));
        let one = PolyFunctional::constant(c(1.0));
        assert_eq!(fp.pointwise_mul(&one), fp);
        let lhs = fp.add(&fq).pointwise_mul(&fp.sub(&fq));
        let rhs = fp.pow(2).sub(&fq.pow(2));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn support_examples() {
        let p = Point::new(1, 1);
        let q = Point::new(2, 2);
        let pq = PolyFunctional::monomial(vec![p, q], c(1.0));
        assert_eq!(pq.support(), [p, q].into_iter().collect());
        assert!(PolyFunctional::constant(c(3.0)).support().is_empty());
        let f = PolyFunctional::field(p).pow(2).add(&PolyFunctional::field(p));
        assert_eq!(f.support(), [p].into_iter().collect());
    }

    /// Support by the probing definition: vary the field at one point only.
    fn probe_support(f: &PolyFunctional, l: &LatticeSpacetime) -> BTreeSet<Point> {
        let base = FieldConfiguration::from_fn(l, |p| 0.3 + 0.1 * l.index(p) as f64);
        l.points()
            .filter(|&p| {
                let bump = FieldConfiguration::delta(l, p, 0.7);
                (f.evaluate(&base.add(&bump)) - f.evaluate(&base)).norm() > 1e-12
            })
            .collect()
    }

    #[test]
    fn support_matches_probing_definition() {
        let l = lat();
        let p = Point::new(1, 1);
        let q = Point::new(2, 6);
        let pq = PolyFunctional::monomial(vec![p, q], c(1.0));
        assert_eq!(probe_support(&pq, &l), pq.support());
        let cubic = PolyFunctional::monomial(vec![q, q, q], c(2.0)).add(&pq);
        assert_eq!(probe_support(&cubic, &l), cubic.support());
    }

    #[test]
    fn additivity_examples() {
        let l = lat();
        let p = Point::new(1, 1);
        let q = Point::new(2, 6);
        let phi = FieldConfiguration::delta(&l, p, 1.5);
        let psi = FieldConfiguration::delta(&l, q, -0.5);
        let chi = FieldConfiguration::from_fn(&l, |r| 0.2 * r.x as f64 - 0.1 * r.t as f64);
        let local = PolyFunctional::field(p).pow(3);
        assert!(check_additivity(&local, &phi, &chi, &psi, 1e-12).unwrap());
        // φ(p)φ(q): lhs − rhs = φ_p ψ_q = −0.75 ≠ 0
        let bilocal = PolyFunctional::monomial(vec![p, q], c(1.0));
        assert!(!check_additivity(&bilocal, &phi, &chi, &psi, 1e-12).unwrap());
        let linear = PolyFunctional::linear(&l, &vec![0.25; l.num_points()]);
        assert!(check_additivity(&linear, &phi, &chi, &psi, 1e-12).unwrap());
        assert_eq!(check_additivity(&local, &phi, &chi, &phi, 1e-12).unwrap_err(), Error::OverlappingSupports);
    }

    #[test]
    fn shifted_expands_binomially() {
        let l = lat();
        let p = Point::new(1, 1);
        let f = PolyFunctional::field(p).pow(3);
        let phi = FieldConfiguration::delta(&l, p, 2.0);
        let chi = FieldConfiguration::from_fn(&l, |r| 0.1 * l.index(r) as f64);
        let g = f.shifted(&phi);
        assert!((g.evaluate(&chi) - f.evaluate(&chi.add(&phi))).norm() < 1e-12);
    }
}
